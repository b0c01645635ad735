//! Simultaneous confidence bands for cumulative hazards.
//!
//! Five constructions share one assembly: log-transformed equal-precision
//! and Hall-Wellner bands with critical values from either the asymptotic
//! Brownian-bridge law or the wild bootstrap, and the untransformed linear
//! band from the direct wild-bootstrap sup. A difference band for two
//! transitions of the same dataset, simultaneous finite-grid intervals, and
//! Sidak-corrected joint regions build on the same machinery.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::brownian::{bridge_band_critical_value, BridgeWeight};
use crate::curve::{merged_times, StepCurve};
use crate::error::{HazardError, Result};
use crate::estimator::{NelsonAalenFit, VarianceKind};
use crate::event::CountingPath;
use crate::exec::run_indexed;
use crate::math::quantile_of_draws;
use crate::seed::SeedSpec;
use crate::wildboot::{draw_replicate, wild_sup_draws_difference, wild_sup_draws_triple, MultiplierLaw, SupWeight, Tail};

/// The band constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    /// Log EP band, Brownian-bridge critical value.
    EpAsymptotic,
    /// Log HW band, Brownian-bridge critical value.
    HwAsymptotic,
    /// Log EP band, wild-bootstrap critical value.
    EpWild,
    /// Log HW band, wild-bootstrap critical value.
    HwWild,
    /// Linear band from the direct wild-bootstrap sup; may dip below zero.
    DirectWild,
    /// Linear band around a difference of two estimates.
    DiffDirectWild,
}

impl BandKind {
    pub fn is_wild(self) -> bool {
        matches!(self, BandKind::EpWild | BandKind::HwWild | BandKind::DirectWild | BandKind::DiffDirectWild)
    }

    fn is_log_transformed(self) -> bool {
        matches!(self, BandKind::EpAsymptotic | BandKind::HwAsymptotic | BandKind::EpWild | BandKind::HwWild)
    }

    /// Formula-side variance estimate: Greenwood for the asymptotic bands,
    /// Aalen for the log wild bands, none for the linear ones.
    fn default_variance(self) -> Option<VarianceKind> {
        match self {
            BandKind::EpAsymptotic | BandKind::HwAsymptotic => Some(VarianceKind::Greenwood),
            BandKind::EpWild | BandKind::HwWild => Some(VarianceKind::Aalen),
            BandKind::DirectWild | BandKind::DiffDirectWild => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BandKind::EpAsymptotic => "ep_asymptotic",
            BandKind::HwAsymptotic => "hw_asymptotic",
            BandKind::EpWild => "ep_wild",
            BandKind::HwWild => "hw_wild",
            BandKind::DirectWild => "direct_wild",
            BandKind::DiffDirectWild => "diff_direct_wild",
        }
    }
}

/// Tuning knobs for [`band`]: the formula-side variance override, the
/// multiplier law and replicate count for wild kinds, and the bridge
/// simulation size for asymptotic kinds.
#[derive(Debug, Clone)]
pub struct BandOptions {
    pub variance: Option<VarianceKind>,
    pub law: MultiplierLaw,
    pub n_boot: usize,
    pub n_paths: usize,
    pub grid_points: usize,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions {
            variance: None,
            law: MultiplierLaw::StandardNormal,
            n_boot: 1000,
            n_paths: 1000,
            grid_points: 2001,
        }
    }
}

/// A simultaneous confidence band on [t1, t2], reported on the event-time
/// grid with both endpoints included and extended between grid points as a
/// step function.
#[derive(Debug, Clone)]
pub struct BandResult {
    pub kind: BandKind,
    pub interval: (f64, f64),
    pub level: f64,
    pub lower: StepCurve,
    pub upper: StepCurve,
    pub critical_value: f64,
    pub variance_used: Option<VarianceKind>,
    pub multiplier: Option<MultiplierLaw>,
}

impl BandResult {
    /// Whether the band contains `truth` at every point of [t1, t2]; exact
    /// for step-function truth because containment is checked on the union
    /// of the band grid and the truth's jump grid.
    pub fn covers(&self, truth: &StepCurve) -> Result<bool> {
        let (t1, t2) = self.interval;
        let mut grid = merged_times(self.lower.times(), truth.times());
        grid.retain(|&t| t > t1 && t <= t2);
        grid.push(t1);
        for &s in &grid {
            let a = truth.evaluate(s)?;
            if a < self.lower.evaluate(s)? || a > self.upper.evaluate(s)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Serialize for BandResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("BandResult", 9)?;
        s.serialize_field("kind", self.kind.label())?;
        s.serialize_field("level", &self.level)?;
        s.serialize_field("interval", &[self.interval.0, self.interval.1])?;
        s.serialize_field("critical_value", &self.critical_value)?;
        s.serialize_field("variance", &self.variance_used)?;
        s.serialize_field("law", &self.multiplier)?;
        s.serialize_field("time", self.lower.times())?;
        s.serialize_field("lower", self.lower.values())?;
        s.serialize_field("upper", self.upper.values())?;
        s.end()
    }
}

fn band_grid(times: &[f64], interval: (f64, f64)) -> Vec<f64> {
    let (t1, t2) = interval;
    let mut grid = vec![t1];
    for &t in times {
        if t > t1 && t < t2 {
            grid.push(t);
        }
    }
    grid.push(t2);
    grid
}

/// Evaluate the band formulas at the event grid for a given critical value.
pub(crate) fn assemble_band(
    fit: &NelsonAalenFit,
    kind: BandKind,
    interval: (f64, f64),
    level: f64,
    critical_value: f64,
    variance: Option<VarianceKind>,
    multiplier: Option<MultiplierLaw>,
) -> Result<BandResult> {
    let (t1, t2) = interval;
    if !(0.0 <= t1 && t1 < t2 && t2 <= fit.estimate.tau()) {
        return Err(HazardError::Domain(format!(
            "interval [{t1}, {t2}] must satisfy 0 <= t1 < t2 <= tau = {}",
            fit.estimate.tau()
        )));
    }
    if kind.is_log_transformed() && fit.estimate.evaluate(t1)? == 0.0 {
        return Err(HazardError::Validation(
            "band start precedes first event: the log-transformed bands need a positive estimate at t1".into(),
        ));
    }
    let sqrt_n = (fit.n_subjects as f64).sqrt();
    let var_curve = variance.map(|k| fit.variance_curve(k));
    let grid = band_grid(fit.estimate.times(), interval);
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    for &s in &grid {
        let a = fit.estimate.eval_unchecked(s);
        let (lo, hi) = match kind {
            BandKind::DirectWild => (a - critical_value / sqrt_n, a + critical_value / sqrt_n),
            BandKind::EpAsymptotic | BandKind::EpWild => {
                let v = var_curve.expect("log bands carry a variance").eval_unchecked(s);
                let h = critical_value * v.sqrt() / (sqrt_n * a);
                (a * (-h).exp(), a * h.exp())
            }
            BandKind::HwAsymptotic | BandKind::HwWild => {
                let v = var_curve.expect("log bands carry a variance").eval_unchecked(s);
                let h = critical_value * (1.0 + v) / (sqrt_n * a);
                (a * (-h).exp(), a * h.exp())
            }
            BandKind::DiffDirectWild => {
                return Err(HazardError::Validation(
                    "difference bands are assembled by difference_band".into(),
                ))
            }
        };
        lower.push(lo);
        upper.push(hi);
    }
    Ok(BandResult {
        kind,
        interval,
        level,
        lower: StepCurve::new(lower[0], grid.clone(), lower, t2)?,
        upper: StepCurve::new(upper[0], grid.clone(), upper, t2)?,
        critical_value,
        variance_used: variance,
        multiplier,
    })
}

/// Construct one of the five simultaneous bands for a fitted transition.
pub fn band(
    path: &CountingPath,
    fit: &NelsonAalenFit,
    kind: BandKind,
    interval: (f64, f64),
    level: f64,
    opts: &BandOptions,
    seed: SeedSpec,
) -> Result<BandResult> {
    if !(0.0 < level && level < 1.0) {
        return Err(HazardError::Validation(format!("level must be in (0,1), got {level}")));
    }
    let variance = opts.variance.or_else(|| kind.default_variance());
    match kind {
        BandKind::DiffDirectWild => Err(HazardError::Validation(
            "difference bands take two fits; call difference_band".into(),
        )),
        BandKind::EpAsymptotic | BandKind::HwAsymptotic => {
            let weight = if kind == BandKind::EpAsymptotic {
                BridgeWeight::G1EqualPrecision
            } else {
                BridgeWeight::G2HallWellner
            };
            let variance = variance.expect("asymptotic bands default to Greenwood");
            let c = bridge_band_critical_value(
                fit,
                variance,
                interval,
                weight,
                level,
                opts.n_paths,
                opts.grid_points,
                seed,
            )?;
            assemble_band(fit, kind, interval, level, c, Some(variance), None)
        }
        BandKind::EpWild | BandKind::HwWild | BandKind::DirectWild => {
            if opts.n_boot < 100 {
                return Err(HazardError::Validation(format!(
                    "bootstrap bands need at least 100 replicates, got {}",
                    opts.n_boot
                )));
            }
            let need_ep = kind == BandKind::EpWild;
            let draws =
                wild_sup_draws_triple(path, interval, opts.law, opts.n_boot, seed, Tail::TwoSided, need_ep)?;
            let c = match kind {
                BandKind::EpWild => quantile_of_draws(draws.ep, level),
                BandKind::HwWild => quantile_of_draws(draws.hw, level),
                _ => quantile_of_draws(draws.direct, level),
            };
            let variance = if kind == BandKind::DirectWild { None } else { variance };
            assemble_band(fit, kind, interval, level, c, variance, Some(opts.law))
        }
    }
}

/// Confidence band for the difference of two cumulative hazards estimated on
/// the same dataset: center A1 - A2 with constant half-width q/sqrt(n), q the
/// bootstrap quantile of sup |W*_1 - W*_2|.
#[allow(clippy::too_many_arguments)]
pub fn difference_band(
    path1: &CountingPath,
    fit1: &NelsonAalenFit,
    path2: &CountingPath,
    fit2: &NelsonAalenFit,
    interval: (f64, f64),
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<BandResult> {
    if !(0.0 < level && level < 1.0) {
        return Err(HazardError::Validation(format!("level must be in (0,1), got {level}")));
    }
    if n_boot < 100 {
        return Err(HazardError::Validation("difference bands need at least 100 replicates".into()));
    }
    if path1.n_subjects != path2.n_subjects || path1.tau != path2.tau {
        return Err(HazardError::Validation(
            "difference bands compare two transitions of the same dataset (equal n and tau)".into(),
        ));
    }
    let draws = wild_sup_draws_difference(path1, path2, interval, law, n_boot, seed, Tail::TwoSided, None)?;
    let q = quantile_of_draws(draws, level);
    let half = q / (path1.n_subjects as f64).sqrt();

    let (_, t2) = interval;
    let center = StepCurve::difference(&fit1.estimate, &fit2.estimate)?;
    let grid = band_grid(center.times(), interval);
    let lower: Vec<f64> = grid.iter().map(|&s| center.eval_unchecked(s) - half).collect();
    let upper: Vec<f64> = grid.iter().map(|&s| center.eval_unchecked(s) + half).collect();
    Ok(BandResult {
        kind: BandKind::DiffDirectWild,
        interval,
        level,
        lower: StepCurve::new(lower[0], grid.clone(), lower, t2)?,
        upper: StepCurve::new(upper[0], grid, upper, t2)?,
        critical_value: q,
        variance_used: None,
        multiplier: Some(law),
    })
}

/// One confidence interval at a single time point.
#[derive(Debug, Clone, Serialize)]
pub struct PointInterval {
    pub time: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

fn point_bounds(
    fit: &NelsonAalenFit,
    kind: BandKind,
    s: f64,
    critical_value: f64,
    variance: Option<VarianceKind>,
) -> Result<(f64, f64)> {
    let sqrt_n = (fit.n_subjects as f64).sqrt();
    let a = fit.estimate.evaluate(s)?;
    Ok(match kind {
        BandKind::DirectWild => (a - critical_value / sqrt_n, a + critical_value / sqrt_n),
        BandKind::EpWild => {
            let v = fit.variance_curve(variance.unwrap_or(VarianceKind::Aalen)).evaluate(s)?;
            let h = critical_value * v.sqrt() / (sqrt_n * a);
            (a * (-h).exp(), a * h.exp())
        }
        BandKind::HwWild => {
            let v = fit.variance_curve(variance.unwrap_or(VarianceKind::Aalen)).evaluate(s)?;
            let h = critical_value * (1.0 + v) / (sqrt_n * a);
            (a * (-h).exp(), a * h.exp())
        }
        _ => {
            return Err(HazardError::Validation(
                "simultaneous intervals support the wild band kinds".into(),
            ))
        }
    })
}

/// Simultaneous confidence intervals over a finite time grid: the sup is
/// replaced by the max over the grid, so each single interval has marginal
/// coverage at least the joint level, asymptotically.
pub fn simultaneous_intervals(
    path: &CountingPath,
    fit: &NelsonAalenFit,
    grid: &[f64],
    kind: BandKind,
    level: f64,
    opts: &BandOptions,
    seed: SeedSpec,
) -> Result<Vec<PointInterval>> {
    if grid.is_empty() {
        return Err(HazardError::Validation("grid must be nonempty".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(HazardError::Validation(format!("level must be in (0,1), got {level}")));
    }
    if opts.n_boot < 100 {
        return Err(HazardError::Validation("need at least 100 replicates".into()));
    }
    let mut points = grid.to_vec();
    points.sort_by(f64::total_cmp);
    for &s in &points {
        if !(s > 0.0 && s <= path.tau) {
            return Err(HazardError::Domain(format!("grid point {s} outside (0, tau]")));
        }
        if fit.estimate.evaluate(s)? == 0.0 {
            return Err(HazardError::Validation(format!(
                "grid point {s} precedes the first observed event"
            )));
        }
    }
    let weight = match kind {
        BandKind::DirectWild => SupWeight::Direct,
        BandKind::EpWild => SupWeight::EqualPrecision,
        BandKind::HwWild => SupWeight::HallWellner,
        _ => {
            return Err(HazardError::Validation(
                "simultaneous intervals support the wild band kinds".into(),
            ))
        }
    };
    let variance = opts.variance.or_else(|| kind.default_variance());

    let paths_map = std::collections::BTreeMap::from([(path.transition.clone(), path.clone())]);
    let draws = run_indexed(opts.n_boot, |r| -> Result<f64> {
        let rep = draw_replicate(&paths_map, opts.law, seed.with_replicate(r as u32))?;
        let w = &rep.paths[&path.transition];
        let v = &rep.var_star[&path.transition];
        if weight == SupWeight::EqualPrecision && v.eval_unchecked(points[0]) == 0.0 {
            return Err(HazardError::DegenerateWeight(format!(
                "sigma*2({}) = 0: the equal-precision weight g1 is undefined at 0",
                points[0]
            )));
        }
        let mut best = f64::NEG_INFINITY;
        for &s in &points {
            let value = match weight {
                SupWeight::Direct => w.eval_unchecked(s).abs(),
                SupWeight::HallWellner => {
                    let vv = v.eval_unchecked(s);
                    w.eval_unchecked(s).abs() / (1.0 + vv)
                }
                SupWeight::EqualPrecision => {
                    let vv = v.eval_unchecked(s);
                    let phi = vv / (1.0 + vv);
                    w.eval_unchecked(s).abs() / (1.0 + vv) / (phi * (1.0 - phi)).sqrt()
                }
            };
            best = best.max(value);
        }
        Ok(best)
    });
    let draws: Result<Vec<f64>> = draws.into_iter().collect();
    let c = quantile_of_draws(draws?, level);

    points
        .iter()
        .map(|&s| {
            let (lo, hi) = point_bounds(fit, kind, s, c, variance)?;
            Ok(PointInterval { time: s, lower: lo, upper: hi, level })
        })
        .collect()
}

/// Sidak-corrected joint confidence region for several transitions at one
/// time point: per-transition pointwise intervals at level (1-alpha)^(1/k),
/// built from one joint wild-bootstrap pass so multipliers stay independent
/// across transitions.
pub fn sidak_region(
    items: &[(&CountingPath, &NelsonAalenFit)],
    t: f64,
    level: f64,
    kind: BandKind,
    opts: &BandOptions,
    seed: SeedSpec,
) -> Result<Vec<PointInterval>> {
    if items.is_empty() {
        return Err(HazardError::Validation("need at least one transition".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(HazardError::Validation(format!("level must be in (0,1), got {level}")));
    }
    let weight = match kind {
        BandKind::DirectWild => SupWeight::Direct,
        BandKind::EpWild => SupWeight::EqualPrecision,
        BandKind::HwWild => SupWeight::HallWellner,
        _ => return Err(HazardError::Validation("sidak regions support the wild band kinds".into())),
    };
    let variance = opts.variance.or_else(|| kind.default_variance());
    let k = items.len();
    let marginal_level = level.powf(1.0 / k as f64);

    let mut paths_map = std::collections::BTreeMap::new();
    for (path, fit) in items {
        if fit.estimate.evaluate(t)? == 0.0 {
            return Err(HazardError::Validation(format!(
                "time {t} precedes the first event of transition {}",
                path.transition
            )));
        }
        paths_map.insert(path.transition.clone(), (*path).clone());
    }
    if paths_map.len() != k {
        return Err(HazardError::Validation("transitions must be distinct".into()));
    }

    let draws = run_indexed(opts.n_boot, |r| -> Result<Vec<f64>> {
        let rep = draw_replicate(&paths_map, opts.law, seed.with_replicate(r as u32))?;
        items
            .iter()
            .map(|(path, _)| {
                let w = rep.paths[&path.transition].eval_unchecked(t);
                let v = rep.var_star[&path.transition].eval_unchecked(t);
                Ok(match weight {
                    SupWeight::Direct => w.abs(),
                    SupWeight::HallWellner => w.abs() / (1.0 + v),
                    SupWeight::EqualPrecision => {
                        if v == 0.0 {
                            return Err(HazardError::DegenerateWeight(format!(
                                "sigma*2({t}) = 0: the equal-precision weight g1 is undefined at 0"
                            )));
                        }
                        let phi = v / (1.0 + v);
                        w.abs() / (1.0 + v) / (phi * (1.0 - phi)).sqrt()
                    }
                })
            })
            .collect()
    });
    let per_rep: Result<Vec<Vec<f64>>> = draws.into_iter().collect();
    let per_rep = per_rep?;

    items
        .iter()
        .enumerate()
        .map(|(j, (_, fit))| {
            let draws_j: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
            let c = quantile_of_draws(draws_j, marginal_level);
            let (lo, hi) = point_bounds(fit, kind, t, c, variance)?;
            Ok(PointInterval { time: t, lower: lo, upper: hi, level: marginal_level })
        })
        .collect()
}
