//! Wild-bootstrap resampling of the normalized Nelson-Aalen process.
//!
//! A replicate perturbs every observed jump with an independent mean-0,
//! variance-1 multiplier while the data stay fixed:
//!
//!   W*(t)      = sqrt(n) * sum_{jumps s <= t} G(s) dN(s) / Y(s)
//!   sigma*2(t) =       n * sum_{jumps s <= t} G(s)^2 dN(s) / Y(s)^2
//!
//! Tied events at one time share a single multiplier. Conditionally on the
//! data, W* is a square-integrable martingale whose predictable variation is
//! the Aalen variance estimator; sigma*2 is its optional-variation analogue
//! and feeds the equal-precision and Hall-Wellner weights.

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{merged_times, StepCurve};
use crate::error::{HazardError, Result};
use crate::event::{CountingPath, TransitionKey};
use crate::exec::run_indexed;
use crate::math::{poisson_one_quantile, quantile_of_draws, standard_normal_quantile};
use crate::seed::{SeedSpec, StreamDomain};

/// Multiplier law for the wild bootstrap. Both laws have mean 0 and
/// variance 1; any extension must satisfy the same contract.
///
/// Both are sampled by inversion of a single uniform draw, so switching the
/// law changes only the transform, never the stream consumption pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierLaw {
    #[serde(rename = "normal")]
    StandardNormal,
    #[serde(rename = "poisson")]
    CenteredPoissonOne,
}

impl MultiplierLaw {
    pub fn draw(self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.sample(Open01);
        match self {
            MultiplierLaw::StandardNormal => standard_normal_quantile(u),
            MultiplierLaw::CenteredPoissonOne => poisson_one_quantile(u) as f64 - 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MultiplierLaw::StandardNormal => "normal",
            MultiplierLaw::CenteredPoissonOne => "poisson",
        }
    }
}

/// One wild-bootstrap replicate: the W* path and the bootstrap variance
/// sigma*2 per transition, both jumping only at the data's jump times.
#[derive(Debug, Clone)]
pub struct BootstrapReplicate {
    pub paths: BTreeMap<TransitionKey, StepCurve>,
    pub var_star: BTreeMap<TransitionKey, StepCurve>,
}

/// Weighting applied inside a sup functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupWeight {
    /// sup |W*|.
    Direct,
    /// sup |W*/(1+s)| * g1(s/(1+s)) with s = sigma*2 and g1(x) = (x(1-x))^{-1/2}.
    EqualPrecision,
    /// sup |W*/(1+s)| with s = sigma*2 (g2 = 1).
    HallWellner,
}

/// Which excursion the sup tracks. Two-sided takes absolute values;
/// the one-sided variants back half-open confidence bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    Upper,
    Lower,
}

/// Selects the sup functional evaluated on a replicate.
#[derive(Debug, Clone)]
pub struct SupSpec {
    pub transition: TransitionKey,
    /// When set, the functional is sup |W*_1 - W*_2| over the two
    /// transitions' merged jump grid (weight must be `Direct`).
    pub second_transition: Option<TransitionKey>,
    pub interval: (f64, f64),
    pub weight: SupWeight,
    pub tail: Tail,
}

impl SupSpec {
    pub fn direct(transition: TransitionKey, interval: (f64, f64)) -> Self {
        SupSpec { transition, second_transition: None, interval, weight: SupWeight::Direct, tail: Tail::TwoSided }
    }

    pub fn weighted(transition: TransitionKey, interval: (f64, f64), weight: SupWeight) -> Self {
        SupSpec { transition, second_transition: None, interval, weight, tail: Tail::TwoSided }
    }

    pub fn difference(first: TransitionKey, second: TransitionKey, interval: (f64, f64)) -> Self {
        SupSpec {
            transition: first,
            second_transition: Some(second),
            interval,
            weight: SupWeight::Direct,
            tail: Tail::TwoSided,
        }
    }
}

#[inline]
fn accumulate_jump(w: &mut f64, v: &mut f64, g: f64, dn: f64, y: f64, sqrt_n: f64, n: f64) {
    *w += sqrt_n * g * (dn / y);
    *v += n * (g * g) * (dn / (y * y));
}

#[inline]
fn tail_value(w: f64, tail: Tail) -> f64 {
    match tail {
        Tail::TwoSided => w.abs(),
        Tail::Upper => w,
        Tail::Lower => -w,
    }
}

/// Weighted candidate value at one evaluation point. `v` must be positive
/// for the equal-precision weight; callers guard the degenerate case.
#[inline]
fn weighted_value(w: f64, v: f64, weight: SupWeight, tail: Tail) -> f64 {
    let signed = tail_value(w, tail);
    match weight {
        SupWeight::Direct => signed,
        SupWeight::HallWellner => signed / (1.0 + v),
        SupWeight::EqualPrecision => {
            let phi = v / (1.0 + v);
            signed / (1.0 + v) / (phi * (1.0 - phi)).sqrt()
        }
    }
}

fn check_shared(paths: &BTreeMap<TransitionKey, CountingPath>) -> Result<(u64, f64)> {
    let mut iter = paths.values();
    let first = iter
        .next()
        .ok_or_else(|| HazardError::Validation("no counting paths supplied".into()))?;
    if iter.any(|p| p.n_subjects != first.n_subjects || p.tau != first.tau) {
        return Err(HazardError::Validation(
            "all counting paths must share n_subjects and tau".into(),
        ));
    }
    Ok((first.n_subjects, first.tau))
}

fn build_replicate(
    paths: &BTreeMap<TransitionKey, CountingPath>,
    mut multiplier: impl FnMut(&TransitionKey, usize) -> f64,
) -> Result<BootstrapReplicate> {
    let (n_subjects, _) = check_shared(paths)?;
    let n = n_subjects as f64;
    let sqrt_n = n.sqrt();
    let mut out_paths = BTreeMap::new();
    let mut out_var = BTreeMap::new();
    for (key, path) in paths {
        let (mut w, mut v) = (0.0f64, 0.0f64);
        let mut ws = Vec::with_capacity(path.n_jumps());
        let mut vs = Vec::with_capacity(path.n_jumps());
        for i in 0..path.n_jumps() {
            let g = multiplier(key, i);
            accumulate_jump(&mut w, &mut v, g, path.jump_sizes[i] as f64, path.at_risk[i] as f64, sqrt_n, n);
            ws.push(w);
            vs.push(v);
        }
        out_paths.insert(key.clone(), StepCurve::new(0.0, path.jump_times.clone(), ws, path.tau)?);
        out_var.insert(key.clone(), StepCurve::new(0.0, path.jump_times.clone(), vs, path.tau)?);
    }
    Ok(BootstrapReplicate { paths: out_paths, var_star: out_var })
}

/// Draw one replicate. Multipliers are consumed transition by transition in
/// key order, one per jump time, so a given [`SeedSpec`] yields a
/// bit-identical replicate on any thread count.
pub fn draw_replicate(
    paths: &BTreeMap<TransitionKey, CountingPath>,
    law: MultiplierLaw,
    seed: SeedSpec,
) -> Result<BootstrapReplicate> {
    let mut rng = seed.rng(StreamDomain::Multiplier);
    build_replicate(paths, |_, _| law.draw(&mut rng))
}

/// Build a replicate from explicitly supplied multipliers, one per jump per
/// transition (test hook and diagnostic surface).
pub fn replicate_from_multipliers(
    paths: &BTreeMap<TransitionKey, CountingPath>,
    multipliers: &BTreeMap<TransitionKey, Vec<f64>>,
) -> Result<BootstrapReplicate> {
    for (key, path) in paths {
        let got = multipliers.get(key).map(Vec::len).unwrap_or(0);
        if got != path.n_jumps() {
            return Err(HazardError::Validation(format!(
                "transition {key}: expected {} multipliers, got {got}",
                path.n_jumps()
            )));
        }
    }
    build_replicate(paths, |key, i| multipliers[key][i])
}

fn check_interval(interval: (f64, f64), tau: f64) -> Result<()> {
    let (t1, t2) = interval;
    if !(t1 >= 0.0 && t1 < t2 && t2 <= tau) {
        return Err(HazardError::Domain(format!(
            "interval [{t1}, {t2}] must satisfy 0 <= t1 < t2 <= tau = {tau}"
        )));
    }
    Ok(())
}

/// Evaluation points of a sup over [t1, t2] for step processes jumping at
/// `times`: t1 itself plus every jump in (t1, t2]. Step paths attain their
/// supremum on this finite set.
fn sup_points(times: &[f64], interval: (f64, f64)) -> Vec<f64> {
    let (t1, t2) = interval;
    let mut pts = vec![t1];
    for &t in times {
        if t > t1 && t <= t2 {
            pts.push(t);
        }
    }
    pts
}

/// Exact supremum of the selected weighted functional of one replicate over
/// the spec's interval.
pub fn sup_statistic(rep: &BootstrapReplicate, spec: &SupSpec) -> Result<f64> {
    let w1 = rep
        .paths
        .get(&spec.transition)
        .ok_or_else(|| HazardError::Validation(format!("replicate lacks transition {}", spec.transition)))?;
    check_interval(spec.interval, w1.tau())?;
    let (t1, _) = spec.interval;

    if let Some(second) = &spec.second_transition {
        if spec.weight != SupWeight::Direct {
            return Err(HazardError::Validation(
                "difference functionals support only the direct weight".into(),
            ));
        }
        let w2 = rep
            .paths
            .get(second)
            .ok_or_else(|| HazardError::Validation(format!("replicate lacks transition {second}")))?;
        let grid = merged_times(w1.times(), w2.times());
        let mut best = f64::NEG_INFINITY;
        for t in sup_points(&grid, spec.interval) {
            best = best.max(tail_value(w1.eval_unchecked(t) - w2.eval_unchecked(t), spec.tail));
        }
        return Ok(best);
    }

    let v1 = &rep.var_star[&spec.transition];
    if spec.weight == SupWeight::EqualPrecision && v1.eval_unchecked(t1) == 0.0 {
        return Err(HazardError::DegenerateWeight(format!(
            "sigma*2({t1}) = 0: the equal-precision weight g1 is undefined at 0"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for t in sup_points(w1.times(), spec.interval) {
        best = best.max(weighted_value(w1.eval_unchecked(t), v1.eval_unchecked(t), spec.weight, spec.tail));
    }
    Ok(best)
}

/// All B sup-statistic draws, in replicate order (diagnostic dump surface).
pub fn bootstrap_sup_draws(
    paths: &BTreeMap<TransitionKey, CountingPath>,
    law: MultiplierLaw,
    spec: &SupSpec,
    n_boot: usize,
    seed: SeedSpec,
) -> Result<Vec<f64>> {
    if n_boot == 0 {
        return Err(HazardError::Validation("replicate count must be positive".into()));
    }
    check_shared(paths)?;
    let results = run_indexed(n_boot, |r| {
        let rep = draw_replicate(paths, law, seed.with_replicate(r as u32))?;
        sup_statistic(&rep, spec)
    });
    results.into_iter().collect()
}

/// Empirical conditional quantile of the selected sup functional from B
/// replicates, using the ceil(level*B) order statistic.
pub fn bootstrap_quantile(
    paths: &BTreeMap<TransitionKey, CountingPath>,
    law: MultiplierLaw,
    spec: &SupSpec,
    level: f64,
    n_boot: usize,
    seed: SeedSpec,
) -> Result<f64> {
    if n_boot < 100 {
        return Err(HazardError::Validation(format!(
            "bootstrap quantiles need at least 100 replicates, got {n_boot}"
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(HazardError::Validation(format!("level must be in (0,1), got {level}")));
    }
    let draws = bootstrap_sup_draws(paths, law, spec, n_boot, seed)?;
    Ok(quantile_of_draws(draws, level))
}

// ---------------------------------------------------------------------------
// Streaming fast paths used by the band constructions and study harnesses.
// They draw multipliers in the same order as `draw_replicate` and accumulate
// with the same expressions, so quantiles agree bit for bit with the general
// route under a common seed.
// ---------------------------------------------------------------------------

/// Sup draws of direct/EP/HW functionals for a single transition, all three
/// computed from the same replicates.
pub(crate) struct SupDrawTriple {
    pub direct: Vec<f64>,
    pub ep: Vec<f64>,
    pub hw: Vec<f64>,
}

pub(crate) fn wild_sup_draws_triple(
    path: &CountingPath,
    interval: (f64, f64),
    law: MultiplierLaw,
    n_boot: usize,
    seed: SeedSpec,
    tail: Tail,
    need_ep: bool,
) -> Result<SupDrawTriple> {
    check_interval(interval, path.tau)?;
    let (t1, t2) = interval;
    let n = path.n_subjects as f64;
    let sqrt_n = n.sqrt();
    let k_t1 = path.jump_times.partition_point(|&t| t <= t1);
    let k_t2 = path.jump_times.partition_point(|&t| t <= t2);

    let draws = run_indexed(n_boot, |r| -> Result<(f64, f64, f64)> {
        let mut rng = seed.with_replicate(r as u32).rng(StreamDomain::Multiplier);
        let (mut w, mut v) = (0.0f64, 0.0f64);
        for i in 0..k_t1 {
            let g = law.draw(&mut rng);
            accumulate_jump(&mut w, &mut v, g, path.jump_sizes[i] as f64, path.at_risk[i] as f64, sqrt_n, n);
        }
        if need_ep && v == 0.0 {
            return Err(HazardError::DegenerateWeight(format!(
                "sigma*2({t1}) = 0: the equal-precision weight g1 is undefined at 0"
            )));
        }
        let ep_at = |w: f64, v: f64| {
            if need_ep {
                weighted_value(w, v, SupWeight::EqualPrecision, tail)
            } else {
                f64::NAN
            }
        };
        let mut direct = weighted_value(w, v, SupWeight::Direct, tail);
        let mut ep = ep_at(w, v);
        let mut hw = weighted_value(w, v, SupWeight::HallWellner, tail);
        for i in k_t1..k_t2 {
            let g = law.draw(&mut rng);
            accumulate_jump(&mut w, &mut v, g, path.jump_sizes[i] as f64, path.at_risk[i] as f64, sqrt_n, n);
            direct = direct.max(weighted_value(w, v, SupWeight::Direct, tail));
            if need_ep {
                ep = ep.max(ep_at(w, v));
            }
            hw = hw.max(weighted_value(w, v, SupWeight::HallWellner, tail));
        }
        Ok((direct, ep, hw))
    });

    let mut out = SupDrawTriple {
        direct: Vec::with_capacity(n_boot),
        ep: Vec::with_capacity(n_boot),
        hw: Vec::with_capacity(n_boot),
    };
    for d in draws {
        let (direct, ep, hw) = d?;
        out.direct.push(direct);
        out.ep.push(ep);
        out.hw.push(hw);
    }
    Ok(out)
}

/// Sup draws of a weighted difference functional
/// sup g(s) * (W*_1(s) - W*_2(s)) over the merged jump grid of two
/// transitions of the same dataset, with independent multipliers per
/// transition. `time_weight` defaults to 1.
pub(crate) fn wild_sup_draws_difference(
    path1: &CountingPath,
    path2: &CountingPath,
    interval: (f64, f64),
    law: MultiplierLaw,
    n_boot: usize,
    seed: SeedSpec,
    tail: Tail,
    time_weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<Vec<f64>> {
    if path1.n_subjects != path2.n_subjects || path1.tau != path2.tau {
        return Err(HazardError::Validation(
            "difference functionals need two transitions of the same dataset (equal n and tau)".into(),
        ));
    }
    if path1.transition == path2.transition {
        return Err(HazardError::Validation(
            "difference functionals need two distinct transitions (independent multipliers)".into(),
        ));
    }
    check_interval(interval, path1.tau)?;
    let (t1, t2) = interval;
    let n = path1.n_subjects as f64;
    let sqrt_n = n.sqrt();

    // Multipliers are drawn per transition in key order, exactly as
    // `draw_replicate` would consume the stream, then the merged grid is
    // walked once per replicate.
    let first_is_path1 = path1.transition <= path2.transition;
    let grid = merged_times(&path1.jump_times, &path2.jump_times);
    let grid_end = grid.partition_point(|&t| t <= t2);
    let weight_at = move |t: f64| time_weight.map(|g| g(t)).unwrap_or(1.0);
    let w_t1 = weight_at(t1);

    let draws = crate::exec::run_indexed_scratch(
        n_boot,
        || (Vec::<f64>::new(), Vec::<f64>::new()),
        |(g1, g2), r| -> f64 {
            let mut rng = seed.with_replicate(r as u32).rng(StreamDomain::Multiplier);
            g1.clear();
            g2.clear();
            if first_is_path1 {
                g1.extend((0..path1.n_jumps()).map(|_| law.draw(&mut rng)));
                g2.extend((0..path2.n_jumps()).map(|_| law.draw(&mut rng)));
            } else {
                g2.extend((0..path2.n_jumps()).map(|_| law.draw(&mut rng)));
                g1.extend((0..path1.n_jumps()).map(|_| law.draw(&mut rng)));
            }

            let (mut w1, mut v1, mut w2, mut v2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            let (mut i1, mut i2) = (0usize, 0usize);
            let mut best = f64::NEG_INFINITY;
            let mut start_recorded = false;
            for &t in &grid[..grid_end] {
                if t > t1 && !start_recorded {
                    // value carried into the interval start, all jumps <= t1 applied
                    best = best.max(w_t1 * tail_value(w1 - w2, tail));
                    start_recorded = true;
                }
                if i1 < path1.n_jumps() && path1.jump_times[i1] == t {
                    accumulate_jump(&mut w1, &mut v1, g1[i1], path1.jump_sizes[i1] as f64, path1.at_risk[i1] as f64, sqrt_n, n);
                    i1 += 1;
                }
                if i2 < path2.n_jumps() && path2.jump_times[i2] == t {
                    accumulate_jump(&mut w2, &mut v2, g2[i2], path2.jump_sizes[i2] as f64, path2.at_risk[i2] as f64, sqrt_n, n);
                    i2 += 1;
                }
                if t > t1 {
                    best = best.max(weight_at(t) * tail_value(w1 - w2, tail));
                }
            }
            if !start_recorded {
                best = best.max(w_t1 * tail_value(w1 - w2, tail));
            }
            best
        },
    );
    Ok(draws)
}
