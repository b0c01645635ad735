//! Hypothesis tests built on the wild bootstrap: equivalence /
//! inferiority / superiority by confidence-band inclusion, a
//! Kolmogorov-Smirnov test for equality of two cumulative hazards, and a
//! two-sample test for proportional hazards with KS- and
//! Cramer-von-Mises-type statistics.

use serde::Serialize;

use crate::curve::{merged_times, StepCurve};
use crate::error::{HazardError, Result};
use crate::estimator::nelson_aalen;
use crate::event::CountingPath;
use crate::exec::run_indexed_scratch;
use crate::math::quantile_of_draws;
use crate::seed::{SeedSpec, StreamDomain};
use crate::wildboot::{wild_sup_draws_difference, wild_sup_draws_triple, MultiplierLaw, Tail};

/// Distance functional of the proportionality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum RhoKind {
    #[serde(rename = "ks")]
    KolmogorovSmirnov,
    #[serde(rename = "cvm")]
    CramerVonMises,
}

impl RhoKind {
    pub fn label(self) -> &'static str {
        match self {
            RhoKind::KolmogorovSmirnov => "ks",
            RhoKind::CramerVonMises => "cvm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Reject "not equivalent" when the two-sided band lies inside the
    /// margin region; reject iff statistic < critical_value (= 0).
    Equivalence,
    /// One-sided: the upper band stays below A0 + u.
    Inferiority,
    /// One-sided: the lower band stays above A0 - l.
    Superiority,
    /// Two-sided equality of two cumulative hazards; reject iff
    /// statistic > critical_value.
    KsEquality,
    PropKs,
    PropCvm,
}

/// Replication metadata carried by every test result.
#[derive(Debug, Clone, Serialize)]
pub struct TestMeta {
    pub n_boot: u64,
    pub law: Option<MultiplierLaw>,
    pub master_seed: u64,
    pub study_index: u32,
    pub interval: [f64; 2],
    pub eval_points: u64,
    pub n1: u64,
    pub n2: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub level: f64,
    pub kind: TestKind,
    pub meta: TestMeta,
}

/// Margins for the equivalence-style tests: a nondecreasing reference curve
/// A0 and strictly positive margin curves l (below) and u (above).
#[derive(Debug, Clone)]
pub struct MarginSpec {
    pub reference: StepCurve,
    pub lower_margin: StepCurve,
    pub upper_margin: StepCurve,
}

impl MarginSpec {
    pub fn with_constant_margins(reference: StepCurve, ell: f64, u: f64) -> Result<Self> {
        let tau = reference.tau();
        Ok(MarginSpec {
            reference,
            lower_margin: StepCurve::constant(ell, tau)?,
            upper_margin: StepCurve::constant(u, tau)?,
        })
    }

    fn check(&self, grid: &[f64]) -> Result<()> {
        if !self.reference.is_nondecreasing() {
            return Err(HazardError::Validation("reference curve A0 must be nondecreasing".into()));
        }
        for &s in grid {
            if self.lower_margin.evaluate(s)? <= 0.0 || self.upper_margin.evaluate(s)? <= 0.0 {
                return Err(HazardError::Validation(format!(
                    "margins must be strictly positive on the interval (violated at {s})"
                )));
            }
        }
        Ok(())
    }
}

fn check_same_dataset(path1: &CountingPath, path2: &CountingPath) -> Result<()> {
    if path1.n_subjects != path2.n_subjects || path1.tau != path2.tau {
        return Err(HazardError::Validation(
            "within-sample comparison needs two transitions of the same dataset (equal n and tau)".into(),
        ));
    }
    Ok(())
}

/// Evaluation points for sup functionals over [t1, t2]: t1 plus all jump
/// times of the given grids inside (t1, t2].
fn eval_points(interval: (f64, f64), grids: &[&[f64]]) -> Vec<f64> {
    let (t1, t2) = interval;
    let mut merged: Vec<f64> = Vec::new();
    for g in grids {
        merged = merged_times(&merged, g);
    }
    let mut pts = vec![t1];
    pts.extend(merged.into_iter().filter(|&t| t > t1 && t <= t2));
    pts
}

/// Sum of value(points[i]) * (points[i+1] - points[i]); the exact integral
/// of a right-continuous step function whose jumps lie on `points`.
pub(crate) fn step_integral(points: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(points.len(), values.len());
    let mut acc = 0.0;
    for i in 0..points.len().saturating_sub(1) {
        acc += values[i] * (points[i + 1] - points[i]);
    }
    acc
}

// ---------------------------------------------------------------------------
// Equality of two cumulative hazards (within-sample)
// ---------------------------------------------------------------------------

/// Kolmogorov-Smirnov-type test of A1 = A2 on [t1, t2] for two transitions
/// estimated from the same dataset. The statistic is
/// sup sqrt(n) g(s) |A1(s) - A2(s)|; its critical value is the bootstrap
/// quantile of sup g |W*_1 - W*_2| with independent multipliers per
/// transition. `weight` defaults to g = 1.
#[allow(clippy::too_many_arguments)]
pub fn ks_equality_test(
    path1: &CountingPath,
    path2: &CountingPath,
    interval: (f64, f64),
    level: f64,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<TestResult> {
    check_same_dataset(path1, path2)?;
    check_level_boot(level, n_boot)?;
    let fit1 = nelson_aalen(path1);
    let fit2 = nelson_aalen(path2);
    let g = |t: f64| weight.map(|w| w(t)).unwrap_or(1.0);
    let pts = eval_points(interval, &[&path1.jump_times, &path2.jump_times]);
    let sqrt_n = (path1.n_subjects as f64).sqrt();
    let statistic = pts
        .iter()
        .map(|&s| sqrt_n * g(s) * (fit1.estimate.eval_unchecked(s) - fit2.estimate.eval_unchecked(s)).abs())
        .fold(0.0f64, f64::max);

    let draws = wild_sup_draws_difference(path1, path2, interval, law, n_boot, seed, Tail::TwoSided, weight)?;
    let critical_value = quantile_of_draws(draws, level);
    Ok(TestResult {
        statistic,
        critical_value,
        reject: statistic > critical_value,
        level,
        kind: TestKind::KsEquality,
        meta: TestMeta {
            n_boot: n_boot as u64,
            law: Some(law),
            master_seed: seed.master_seed,
            study_index: seed.study_index,
            interval: [interval.0, interval.1],
            eval_points: pts.len() as u64,
            n1: path1.n_subjects,
            n2: None,
        },
    })
}

/// Two-sample extension: A1 and A2 estimated from independent samples of
/// sizes n1 and n2. The statistic is sqrt(n1 n2 / n) sup g |A1 - A2| and the
/// bootstrap process is sqrt(n2/n) W*_1 - sqrt(n1/n) W*_2 with independent
/// streams per sample.
#[allow(clippy::too_many_arguments)]
pub fn ks_equality_two_sample(
    path1: &CountingPath,
    path2: &CountingPath,
    interval: (f64, f64),
    level: f64,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<TestResult> {
    if path1.tau != path2.tau {
        return Err(HazardError::Validation("two-sample comparison needs a common tau".into()));
    }
    check_level_boot(level, n_boot)?;
    let (n1, n2) = (path1.n_subjects as f64, path2.n_subjects as f64);
    let n = n1 + n2;
    let fit1 = nelson_aalen(path1);
    let fit2 = nelson_aalen(path2);
    let g = |t: f64| weight.map(|w| w(t)).unwrap_or(1.0);
    let pts = eval_points(interval, &[&path1.jump_times, &path2.jump_times]);
    let scale = (n1 * n2 / n).sqrt();
    let statistic = pts
        .iter()
        .map(|&s| scale * g(s) * (fit1.estimate.eval_unchecked(s) - fit2.estimate.eval_unchecked(s)).abs())
        .fold(0.0f64, f64::max);

    let (c1, c2) = ((n2 / n).sqrt(), (n1 / n).sqrt());
    let draws = two_sample_sup_draws(path1, path2, interval, c1, c2, weight, n_boot, law, seed)?;
    let critical_value = quantile_of_draws(draws, level);
    Ok(TestResult {
        statistic,
        critical_value,
        reject: statistic > critical_value,
        level,
        kind: TestKind::KsEquality,
        meta: TestMeta {
            n_boot: n_boot as u64,
            law: Some(law),
            master_seed: seed.master_seed,
            study_index: seed.study_index,
            interval: [interval.0, interval.1],
            eval_points: pts.len() as u64,
            n1: path1.n_subjects,
            n2: Some(path2.n_subjects),
        },
    })
}

/// Draws of sup g(s) |c1 W*_1(s) - c2 W*_2(s)| over [t1, t2] with
/// independent multiplier streams per sample.
#[allow(clippy::too_many_arguments)]
fn two_sample_sup_draws(
    path1: &CountingPath,
    path2: &CountingPath,
    interval: (f64, f64),
    coef1: f64,
    coef2: f64,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<Vec<f64>> {
    let (t1, t2) = interval;
    if !(0.0 <= t1 && t1 < t2 && t2 <= path1.tau) {
        return Err(HazardError::Domain(format!(
            "interval [{t1}, {t2}] must satisfy 0 <= t1 < t2 <= tau"
        )));
    }
    let g = move |t: f64| weight.map(|w| w(t)).unwrap_or(1.0);
    let grid = merged_times(&path1.jump_times, &path2.jump_times);
    let grid_end = grid.partition_point(|&t| t <= t2);
    let sn1 = (path1.n_subjects as f64).sqrt();
    let sn2 = (path2.n_subjects as f64).sqrt();

    Ok(run_indexed_scratch(
        n_boot,
        || (Vec::<f64>::new(), Vec::<f64>::new()),
        |(g1, g2), r| {
            let rep_seed = seed.with_replicate(r as u32);
            let mut rng1 = rep_seed.rng(StreamDomain::Multiplier);
            let mut rng2 = rep_seed.rng(StreamDomain::MultiplierSecond);
            g1.clear();
            g2.clear();
            g1.extend((0..path1.n_jumps()).map(|_| law.draw(&mut rng1)));
            g2.extend((0..path2.n_jumps()).map(|_| law.draw(&mut rng2)));

            let (mut w1, mut w2) = (0.0f64, 0.0f64);
            let (mut i1, mut i2) = (0usize, 0usize);
            let mut best = f64::NEG_INFINITY;
            let mut start_recorded = false;
            for &t in &grid[..grid_end] {
                if t > t1 && !start_recorded {
                    best = best.max(g(t1) * (coef1 * w1 - coef2 * w2).abs());
                    start_recorded = true;
                }
                if i1 < path1.n_jumps() && path1.jump_times[i1] == t {
                    w1 += sn1 * g1[i1] * (path1.jump_sizes[i1] as f64 / path1.at_risk[i1] as f64);
                    i1 += 1;
                }
                if i2 < path2.n_jumps() && path2.jump_times[i2] == t {
                    w2 += sn2 * g2[i2] * (path2.jump_sizes[i2] as f64 / path2.at_risk[i2] as f64);
                    i2 += 1;
                }
                if t > t1 {
                    best = best.max(g(t) * (coef1 * w1 - coef2 * w2).abs());
                }
            }
            if !start_recorded {
                best = best.max(g(t1) * (coef1 * w1 - coef2 * w2).abs());
            }
            best
        },
    ))
}

// ---------------------------------------------------------------------------
// Equivalence / inferiority / superiority by band inclusion
// ---------------------------------------------------------------------------

struct OneSidedBands {
    grid: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// One-sided direct wild bands at marginal level `level` each:
/// a_n(s) = A(s) - c_up / sqrt(n) with c_up the level quantile of sup W*,
/// b_n(s) = A(s) + c_lo / sqrt(n) with c_lo the level quantile of sup(-W*).
fn one_sided_direct_bands(
    path: &CountingPath,
    grid: &[f64],
    interval: (f64, f64),
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<OneSidedBands> {
    let fit = nelson_aalen(path);
    let sqrt_n = (path.n_subjects as f64).sqrt();
    let up = wild_sup_draws_triple(path, interval, law, n_boot, seed, Tail::Upper, false)?;
    let lo = wild_sup_draws_triple(path, interval, law, n_boot, seed, Tail::Lower, false)?;
    let c_up = quantile_of_draws(up.direct, level);
    let c_lo = quantile_of_draws(lo.direct, level);
    let lower = grid.iter().map(|&s| fit.estimate.eval_unchecked(s) - c_up / sqrt_n).collect();
    let upper = grid.iter().map(|&s| fit.estimate.eval_unchecked(s) + c_lo / sqrt_n).collect();
    Ok(OneSidedBands { grid: grid.to_vec(), lower, upper })
}

fn margin_grid(path: &CountingPath, margins: &MarginSpec, interval: (f64, f64)) -> Vec<f64> {
    let mut grids = merged_times(&path.jump_times, margins.reference.times());
    grids = merged_times(&grids, margins.lower_margin.times());
    grids = merged_times(&grids, margins.upper_margin.times());
    let (t1, t2) = interval;
    let mut pts = vec![t1];
    pts.extend(grids.into_iter().filter(|&t| t > t1 && t < t2));
    pts.push(t2);
    pts
}

fn margin_test(
    path: &CountingPath,
    margins: &MarginSpec,
    interval: (f64, f64),
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
    kind: TestKind,
) -> Result<TestResult> {
    check_level_boot(level, n_boot)?;
    let grid = margin_grid(path, margins, interval);
    margins.check(&grid)?;
    let bands = one_sided_direct_bands(path, &grid, interval, level, n_boot, law, seed)?;

    // signed worst violation of the inclusion predicate; reject iff < 0
    let mut violation = f64::NEG_INFINITY;
    for (i, &s) in bands.grid.iter().enumerate() {
        let a0 = margins.reference.evaluate(s)?;
        let lower_ok = matches!(kind, TestKind::Equivalence | TestKind::Superiority);
        let upper_ok = matches!(kind, TestKind::Equivalence | TestKind::Inferiority);
        if lower_ok {
            let ell = margins.lower_margin.evaluate(s)?;
            violation = violation.max((a0 - ell) - bands.lower[i]);
        }
        if upper_ok {
            let u = margins.upper_margin.evaluate(s)?;
            violation = violation.max(bands.upper[i] - (a0 + u));
        }
    }
    Ok(TestResult {
        statistic: violation,
        critical_value: 0.0,
        reject: violation < 0.0,
        level,
        kind,
        meta: TestMeta {
            n_boot: n_boot as u64,
            law: Some(law),
            master_seed: seed.master_seed,
            study_index: seed.study_index,
            interval: [interval.0, interval.1],
            eval_points: bands.grid.len() as u64,
            n1: path.n_subjects,
            n2: None,
        },
    })
}

/// Equivalence test by confidence-band inclusion: rejects
/// H: "A leaves the margin tube somewhere" when the combined two-sided band
/// (built from two one-sided direct wild bands at level 1-alpha each) lies
/// strictly inside (A0 - l, A0 + u) on the whole interval.
pub fn equivalence_test(
    path: &CountingPath,
    margins: &MarginSpec,
    interval: (f64, f64),
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<TestResult> {
    margin_test(path, margins, interval, level, n_boot, law, seed, TestKind::Equivalence)
}

/// One-sided variant: rejects when the upper band stays below A0 + u
/// (the true hazard does not exceed the reference by the margin).
pub fn inferiority_test(
    path: &CountingPath,
    margins: &MarginSpec,
    interval: (f64, f64),
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<TestResult> {
    margin_test(path, margins, interval, level, n_boot, law, seed, TestKind::Inferiority)
}

/// One-sided variant: rejects when the lower band stays above A0 - l.
pub fn superiority_test(
    path: &CountingPath,
    margins: &MarginSpec,
    interval: (f64, f64),
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<TestResult> {
    margin_test(path, margins, interval, level, n_boot, law, seed, TestKind::Superiority)
}

// ---------------------------------------------------------------------------
// Two-sample proportional-hazards test
// ---------------------------------------------------------------------------

/// Evaluation points of the proportionality statistics: all merged jump
/// times of both samples in (first group-1 jump, tau], plus that first jump
/// and tau itself.
fn prop_eval_points(a1: &StepCurve, a2: &StepCurve, tau: f64) -> Result<Vec<f64>> {
    let first = *a1
        .times()
        .first()
        .ok_or_else(|| HazardError::Validation("group-1 estimate has no events".into()))?;
    if first > tau {
        return Err(HazardError::Validation("group-1 estimate has no events by tau".into()));
    }
    let merged = merged_times(a1.times(), a2.times());
    let mut pts = vec![first];
    pts.extend(merged.into_iter().filter(|&t| t > first && t <= tau));
    if *pts.last().unwrap() < tau {
        pts.push(tau);
    }
    Ok(pts)
}

fn prop_check(a1: &StepCurve, a2: &StepCurve, tau: f64) -> Result<()> {
    if !(tau > 0.0) || tau > a1.tau() || tau > a2.tau() {
        return Err(HazardError::Domain(format!("tau = {tau} outside both observation windows")));
    }
    if a1.evaluate(tau)? <= 0.0 {
        return Err(HazardError::Validation("group-1 cumulative hazard is zero on [0, tau]".into()));
    }
    if a2.evaluate(tau)? <= 0.0 {
        return Err(HazardError::Validation("group-2 cumulative hazard is zero at tau".into()));
    }
    Ok(())
}

/// Kolmogorov-Smirnov proportionality statistic
/// sqrt(n1 n2 / n) sup_s |A2(s) - A1(s) A2(tau)/A1(tau)| over the evaluation
/// set; the weight w = A1 cancels the ratio denominators.
pub fn prop_ks_statistic(a1: &StepCurve, a2: &StepCurve, n1: u64, n2: u64, tau: f64) -> Result<f64> {
    prop_check(a1, a2, tau)?;
    let pts = prop_eval_points(a1, a2, tau)?;
    let r_tau = a2.evaluate(tau)? / a1.evaluate(tau)?;
    let scale = ((n1 * n2) as f64 / (n1 + n2) as f64).sqrt();
    Ok(pts
        .iter()
        .map(|&s| (a2.eval_unchecked(s) - a1.eval_unchecked(s) * r_tau).abs())
        .fold(0.0f64, f64::max)
        * scale)
}

/// Cramer-von-Mises proportionality statistic
/// (n1 n2 / n) * integral of (A2 - A1 A2(tau)/A1(tau))^2 over
/// [first group-1 jump, tau], computed exactly as a segment sum.
pub fn prop_cvm_statistic(a1: &StepCurve, a2: &StepCurve, n1: u64, n2: u64, tau: f64) -> Result<f64> {
    prop_check(a1, a2, tau)?;
    let pts = prop_eval_points(a1, a2, tau)?;
    let r_tau = a2.evaluate(tau)? / a1.evaluate(tau)?;
    let values: Vec<f64> = pts
        .iter()
        .map(|&s| {
            let d = a2.eval_unchecked(s) - a1.eval_unchecked(s) * r_tau;
            d * d
        })
        .collect();
    Ok(step_integral(&pts, &values) * (n1 * n2) as f64 / (n1 + n2) as f64)
}

/// Bootstrap draws of both proportionality statistics (KS, CvM), sharing
/// replicates; multipliers use independent streams per sample.
pub(crate) fn prop_boot_draws(
    path1: &CountingPath,
    path2: &CountingPath,
    tau: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let fit1 = nelson_aalen(path1);
    let fit2 = nelson_aalen(path2);
    let (a1, a2) = (&fit1.estimate, &fit2.estimate);
    prop_check(a1, a2, tau)?;
    let pts = prop_eval_points(a1, a2, tau)?;
    let m = pts.len();
    let (n1, n2) = (path1.n_subjects as f64, path2.n_subjects as f64);
    let n = n1 + n2;
    let (c1, c2) = ((n1 / n).sqrt(), (n2 / n).sqrt());
    let sn1 = n1.sqrt();
    let sn2 = n2.sqrt();

    // per-point curve values and jump counters, shared across replicates
    let a1_at: Vec<f64> = pts.iter().map(|&s| a1.eval_unchecked(s)).collect();
    let a2_at: Vec<f64> = pts.iter().map(|&s| a2.eval_unchecked(s)).collect();
    let k1_at: Vec<usize> = pts.iter().map(|&s| path1.jump_times.partition_point(|&t| t <= s)).collect();
    let k2_at: Vec<usize> = pts.iter().map(|&s| path2.jump_times.partition_point(|&t| t <= s)).collect();
    let a1_tau = a1.evaluate(tau)?;
    let a2_tau = a2.evaluate(tau)?;

    let draws = run_indexed_scratch(
        n_boot,
        || (Vec::<f64>::new(), Vec::<f64>::new(), vec![0.0f64; m]),
        |(w1_at, w2_at, d_at), r| {
            let rep_seed = seed.with_replicate(r as u32);
            let mut rng1 = rep_seed.rng(StreamDomain::Multiplier);
            let mut rng2 = rep_seed.rng(StreamDomain::MultiplierSecond);

            // W* prefix values at jump indices, then read off at eval points
            let fill = |w_at: &mut Vec<f64>, path: &CountingPath, rng: &mut rand_chacha::ChaCha8Rng, sn: f64| {
                w_at.clear();
                let mut w = 0.0f64;
                for i in 0..path.n_jumps() {
                    let g = law.draw(rng);
                    w += sn * g * (path.jump_sizes[i] as f64 / path.at_risk[i] as f64);
                    w_at.push(w);
                }
            };
            fill(w1_at, path1, &mut rng1, sn1);
            fill(w2_at, path2, &mut rng2, sn2);
            let w_at = |w: &[f64], k: usize| if k == 0 { 0.0 } else { w[k - 1] };

            let w1_tau = w_at(w1_at, path1.jump_times.partition_point(|&t| t <= tau));
            let w2_tau = w_at(w2_at, path2.jump_times.partition_point(|&t| t <= tau));
            let anchor = c1 * w2_tau / a1_tau - c2 * w1_tau * a2_tau / (a1_tau * a1_tau);

            let mut ks = 0.0f64;
            for i in 0..m {
                let w1 = w_at(w1_at, k1_at[i]);
                let w2 = w_at(w2_at, k2_at[i]);
                // weighted derivative process: w * f*(s) - w * f*(tau)
                let v = c1 * w2 - c2 * w1 * a2_at[i] / a1_at[i];
                let d = v - a1_at[i] * anchor;
                d_at[i] = d * d;
                ks = ks.max(d.abs());
            }
            let cvm = step_integral(&pts, d_at);
            (ks, cvm)
        },
    );

    let mut ks = Vec::with_capacity(n_boot);
    let mut cvm = Vec::with_capacity(n_boot);
    for (a, b) in draws {
        ks.push(a);
        cvm.push(b);
    }
    Ok((ks, cvm))
}

fn check_level_boot(level: f64, n_boot: usize) -> Result<()> {
    if !(0.0 < level && level < 1.0) {
        return Err(HazardError::Validation(format!("level must be in (0,1), got {level}")));
    }
    if n_boot < 100 {
        return Err(HazardError::Validation(format!(
            "bootstrap tests need at least 100 replicates, got {n_boot}"
        )));
    }
    Ok(())
}

/// Two-sample test of proportional hazards A1 = c A2 on [0, tau] for some
/// c > 0, with the ratio anchored at tau and weight w = A1. Rejects when the
/// chosen distance statistic exceeds its wild-bootstrap quantile.
pub fn prop_hazards_test(
    path1: &CountingPath,
    path2: &CountingPath,
    rho: RhoKind,
    level: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<TestResult> {
    let (ks, cvm) = prop_hazards_test_pair(path1, path2, level, n_boot, law, seed)?;
    Ok(match rho {
        RhoKind::KolmogorovSmirnov => ks,
        RhoKind::CramerVonMises => cvm,
    })
}

/// Both proportionality tests from one shared set of bootstrap replicates.
pub(crate) fn prop_hazards_test_pair(
    path1: &CountingPath,
    path2: &CountingPath,
    alpha: f64,
    n_boot: usize,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<(TestResult, TestResult)> {
    if path1.n_subjects < 2 || path2.n_subjects < 2 {
        return Err(HazardError::Validation("both samples need at least 2 subjects".into()));
    }
    if path1.tau != path2.tau {
        return Err(HazardError::Validation("both samples must share tau".into()));
    }
    check_level_boot(1.0 - alpha, n_boot)?;
    let tau = path1.tau;
    let fit1 = nelson_aalen(path1);
    let fit2 = nelson_aalen(path2);
    let ks_stat = prop_ks_statistic(&fit1.estimate, &fit2.estimate, path1.n_subjects, path2.n_subjects, tau)?;
    let cvm_stat = prop_cvm_statistic(&fit1.estimate, &fit2.estimate, path1.n_subjects, path2.n_subjects, tau)?;
    let pts = prop_eval_points(&fit1.estimate, &fit2.estimate, tau)?.len();

    let (ks_draws, cvm_draws) = prop_boot_draws(path1, path2, tau, n_boot, law, seed)?;
    let ks_crit = quantile_of_draws(ks_draws, 1.0 - alpha);
    let cvm_crit = quantile_of_draws(cvm_draws, 1.0 - alpha);

    let meta = TestMeta {
        n_boot: n_boot as u64,
        law: Some(law),
        master_seed: seed.master_seed,
        study_index: seed.study_index,
        interval: [0.0, tau],
        eval_points: pts as u64,
        n1: path1.n_subjects,
        n2: Some(path2.n_subjects),
    };
    let ks = TestResult {
        statistic: ks_stat,
        critical_value: ks_crit,
        reject: ks_stat > ks_crit,
        level: alpha,
        kind: TestKind::PropKs,
        meta: meta.clone(),
    };
    let cvm = TestResult {
        statistic: cvm_stat,
        critical_value: cvm_crit,
        reject: cvm_stat > cvm_crit,
        level: alpha,
        kind: TestKind::PropCvm,
        meta,
    };
    Ok((ks, cvm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::TransitionKey;
    use approx::assert_abs_diff_eq;

    fn path(key: &str, times: Vec<f64>, sizes: Vec<u64>, risk: Vec<u64>, n: u64, tau: f64) -> CountingPath {
        CountingPath::new(key.parse::<TransitionKey>().unwrap(), times, sizes, risk, n, tau).unwrap()
    }

    #[test]
    fn step_integral_constant_integrand() {
        assert_abs_diff_eq!(step_integral(&[0.0, 0.3], &[1.0, 99.0]), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(step_integral(&[0.0, 0.1, 0.3], &[1.0, 1.0, 5.0]), 0.3, epsilon = 1e-15);
        assert_eq!(step_integral(&[0.5], &[2.0]), 0.0);
    }

    #[test]
    fn ks_equality_identical_transitions() {
        let p1 = path("0>1", vec![0.5, 1.0], vec![1, 2], vec![50, 40], 60, 2.0);
        let mut p2 = p1.clone();
        p2.transition = "0>2".parse().unwrap();
        let r = ks_equality_test(&p1, &p2, (0.0, 2.0), 0.05, None, 200, MultiplierLaw::StandardNormal, SeedSpec::new(3))
            .unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
    }

    #[test]
    fn ks_equality_no_jumps_in_interval_never_rejects() {
        let p1 = path("0>1", vec![], vec![], vec![], 10, 2.0);
        let p2 = path("0>2", vec![], vec![], vec![], 10, 2.0);
        let r = ks_equality_test(&p1, &p2, (0.5, 1.5), 0.05, None, 200, MultiplierLaw::CenteredPoissonOne, SeedSpec::new(3))
            .unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.critical_value, 0.0);
        assert!(!r.reject);
    }

    #[test]
    fn ks_statistic_symmetric_in_the_samples() {
        let p1 = path("0>1", vec![0.4, 1.1], vec![1, 1], vec![30, 20], 40, 2.0);
        let p2 = path("0>2", vec![0.6], vec![2], vec![28], 40, 2.0);
        let seed = SeedSpec::new(17);
        let a = ks_equality_test(&p1, &p2, (0.0, 2.0), 0.05, None, 300, MultiplierLaw::StandardNormal, seed).unwrap();
        let b = ks_equality_test(&p2, &p1, (0.0, 2.0), 0.05, None, 300, MultiplierLaw::StandardNormal, seed).unwrap();
        assert_eq!(a.statistic, b.statistic);
    }

    #[test]
    fn equivalence_band_inclusion_logic() {
        let p = path("0>1", vec![0.5, 1.0, 1.5], vec![5, 4, 3], vec![100, 90, 80], 100, 2.0);
        let fit = nelson_aalen(&p);
        let margins = MarginSpec::with_constant_margins(fit.estimate.clone(), 10.0, 10.0).unwrap();
        let seed = SeedSpec::new(5);
        // huge margins and a tight band: equivalence declared
        let r = equivalence_test(&p, &margins, (0.5, 2.0), 0.95, 400, MultiplierLaw::StandardNormal, seed).unwrap();
        assert!(r.reject, "violation {}", r.statistic);
        assert!(r.statistic < 0.0);

        // vanishing margins: never reject
        let tiny = MarginSpec::with_constant_margins(fit.estimate.clone(), 1e-9, 1e-9).unwrap();
        let r = equivalence_test(&p, &tiny, (0.5, 2.0), 0.95, 400, MultiplierLaw::StandardNormal, seed).unwrap();
        assert!(!r.reject);

        // zero margins are invalid
        let zero = MarginSpec::with_constant_margins(fit.estimate.clone(), 0.0, 1.0).unwrap();
        assert!(equivalence_test(&p, &zero, (0.5, 2.0), 0.95, 400, MultiplierLaw::StandardNormal, seed).is_err());

        // one-sided variants agree with the equivalence components
        let inf = inferiority_test(&p, &margins, (0.5, 2.0), 0.95, 400, MultiplierLaw::StandardNormal, seed).unwrap();
        let sup = superiority_test(&p, &margins, (0.5, 2.0), 0.95, 400, MultiplierLaw::StandardNormal, seed).unwrap();
        assert!(inf.reject && sup.reject);
        let eq = equivalence_test(&p, &margins, (0.5, 2.0), 0.95, 400, MultiplierLaw::StandardNormal, seed).unwrap();
        assert_abs_diff_eq!(eq.statistic, inf.statistic.max(sup.statistic), epsilon = 1e-15);
    }

    #[test]
    fn prop_test_identical_groups_gives_zero_statistic() {
        let p1 = path("0>1", vec![0.05, 0.1, 0.2], vec![1, 2, 1], vec![50, 45, 40], 50, 0.3);
        let p2 = p1.clone();
        let (ks, cvm) =
            prop_hazards_test_pair(&p1, &p2, 0.05, 200, MultiplierLaw::StandardNormal, SeedSpec::new(9)).unwrap();
        assert_eq!(ks.statistic, 0.0);
        assert_eq!(cvm.statistic, 0.0);
        assert!(!ks.reject && !cvm.reject);
    }

    #[test]
    fn prop_statistic_invariant_under_group1_scaling_and_homogeneous_in_group2() {
        let a1 = StepCurve::new(0.0, vec![0.05, 0.1, 0.2], vec![0.1, 0.25, 0.4], 0.3).unwrap();
        let a2 = StepCurve::new(0.0, vec![0.07, 0.15], vec![0.2, 0.5], 0.3).unwrap();
        let base = prop_ks_statistic(&a1, &a2, 50, 60, 0.3).unwrap();
        assert!(base > 0.0);
        for &c in &[0.1, 2.0, 10.0] {
            // the weight w = A1 cancels scaling of the denominator group
            let scaled1 = prop_ks_statistic(&a1.scaled(c), &a2, 50, 60, 0.3).unwrap();
            assert_abs_diff_eq!(scaled1, base, epsilon = 1e-12 * base.abs());
            // scaling the numerator group scales the statistic by exactly c
            let scaled2 = prop_ks_statistic(&a1, &a2.scaled(c), 50, 60, 0.3).unwrap();
            assert_abs_diff_eq!(scaled2, c * base, epsilon = 1e-12 * (c * base).abs());
        }
    }

    #[test]
    fn prop_test_validation() {
        let p1 = path("0>1", vec![0.1], vec![1], vec![5], 5, 0.3);
        let empty = path("0>1", vec![], vec![], vec![], 5, 0.3);
        assert!(prop_hazards_test(&empty, &p1, RhoKind::KolmogorovSmirnov, 0.05, 200, MultiplierLaw::StandardNormal, SeedSpec::new(1)).is_err());
        assert!(prop_hazards_test(&p1, &empty, RhoKind::KolmogorovSmirnov, 0.05, 200, MultiplierLaw::StandardNormal, SeedSpec::new(1)).is_err());
        let one = path("0>1", vec![0.1], vec![1], vec![1], 1, 0.3);
        assert!(prop_hazards_test(&one, &p1, RhoKind::KolmogorovSmirnov, 0.05, 200, MultiplierLaw::StandardNormal, SeedSpec::new(1)).is_err());
    }

    #[test]
    fn reject_flag_recomputable() {
        let p1 = path("0>1", vec![0.05, 0.1], vec![3, 2], vec![50, 45], 50, 0.3);
        let p2 = path("0>1", vec![0.04, 0.12], vec![1, 1], vec![50, 48], 50, 0.3);
        let r = prop_hazards_test(&p1, &p2, RhoKind::CramerVonMises, 0.05, 300, MultiplierLaw::CenteredPoissonOne, SeedSpec::new(2))
            .unwrap();
        assert_eq!(r.reject, r.statistic > r.critical_value);
    }
}
