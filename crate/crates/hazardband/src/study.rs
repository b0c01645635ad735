//! Monte Carlo study harnesses: simultaneous-band coverage on synthetic
//! multistate truth, and empirical size of the proportionality test under
//! the constant-hazard two-sample scenarios.
//!
//! Seeding is hierarchical: master seed, then one study stream per simulated
//! study, with data, bootstrap and bridge draws on separate sub-streams, so
//! changing the replicate count never changes the generated data and reports
//! are identical for any thread count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bands::{assemble_band, BandKind};
use crate::brownian::{bridge_dual_quantiles, phi_hat};
use crate::error::{HazardError, Result};
use crate::estimator::{nelson_aalen, VarianceKind};
use crate::event::{build_counting_paths, TransitionKey};
use crate::exec::run_indexed;
use crate::hypotest::{prop_hazards_test_pair, RhoKind};
use crate::math::quantile_of_draws;
use crate::seed::SeedSpec;
use crate::simulate::{
    expected_event_counts_model, simulate_competing_risks_constant, simulate_multistate,
    ConstantHazardScenario, Group, IncrementModel, ScenarioId,
};
use crate::wildboot::{wild_sup_draws_triple, MultiplierLaw, Tail};

/// One report cell: an empirical proportion with its binomial standard
/// error, or a skip reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyCell {
    pub scenario: String,
    pub sample_size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<String>,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<String>,
    pub numerator: u64,
    pub denominator: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
}

impl StudyCell {
    fn filled(mut self) -> Self {
        if !self.skipped && self.denominator > 0 {
            let p = self.numerator as f64 / self.denominator as f64;
            self.estimate = Some(p);
            self.std_error = Some((p * (1.0 - p) / self.denominator as f64).sqrt());
        }
        self
    }
}

/// A complete study report. Wall-clock time is kept out of the serialized
/// form so that reports with equal configuration and seed are byte-identical
/// regardless of thread count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub label: String,
    pub master_seed: u64,
    pub n_studies: u64,
    pub cells: Vec<StudyCell>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl StudyReport {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text table, one row per cell.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} (seed {}, {} studies)\n",
            self.label, self.master_seed, self.n_studies
        ));
        out.push_str(&format!(
            "{:<10} {:>6} {:<12} {:<16} {:<8} {:<10} {:>9} {:>8} {:>11}  {}\n",
            "scenario", "n", "transition", "method", "law", "variance", "estimate", "se", "num/denom", "note"
        ));
        for c in &self.cells {
            out.push_str(&format!(
                "{:<10} {:>6} {:<12} {:<16} {:<8} {:<10} {:>9} {:>8} {:>11}  {}\n",
                c.scenario,
                c.sample_size,
                c.transition.as_deref().unwrap_or("-"),
                c.method,
                c.law.as_deref().unwrap_or("-"),
                c.variance.as_deref().unwrap_or("-"),
                c.estimate.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into()),
                c.std_error.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into()),
                format!("{}/{}", c.numerator, c.denominator),
                c.skip_reason.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Coverage study
// ---------------------------------------------------------------------------

/// Configuration of a band-coverage study on a known increment model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageStudyConfig {
    pub model: IncrementModel,
    pub sample_sizes: Vec<u64>,
    pub n_studies: u32,
    pub n_boot: u32,
    pub level: f64,
    pub interval: (f64, f64),
    pub band_kinds: Vec<BandKind>,
    pub laws: Vec<MultiplierLaw>,
    #[serde(default = "default_greenwood")]
    pub asymptotic_variance: VarianceKind,
    #[serde(default = "default_aalen")]
    pub wild_variance: VarianceKind,
    #[serde(default = "default_bridge_paths")]
    pub bridge_paths: u32,
    #[serde(default = "default_bridge_grid")]
    pub bridge_grid: u32,
    /// Cells whose expected event count on the interval falls below this
    /// bound are skipped for statistical reliability.
    #[serde(default = "default_min_events")]
    pub min_expected_events: f64,
    pub master_seed: u64,
}

fn default_greenwood() -> VarianceKind {
    VarianceKind::Greenwood
}
fn default_aalen() -> VarianceKind {
    VarianceKind::Aalen
}
fn default_bridge_paths() -> u32 {
    1000
}
fn default_bridge_grid() -> u32 {
    2001
}
fn default_min_events() -> f64 {
    20.0
}

#[derive(Clone)]
struct CoverageCellKey {
    transition: TransitionKey,
    kind: BandKind,
    law: Option<MultiplierLaw>,
}

/// Run the coverage study: per simulated study, fit all transitions, build
/// every configured band, and check simultaneous containment of the true
/// cumulative hazard over the interval.
pub fn run_coverage_study(cfg: &CoverageStudyConfig) -> Result<StudyReport> {
    let started = std::time::Instant::now();
    cfg.model.validate()?;
    if cfg.n_studies == 0 {
        return Err(HazardError::Validation("n_studies must be at least 1".into()));
    }
    if cfg.n_boot < 100 {
        return Err(HazardError::Validation("n_boot must be at least 100".into()));
    }
    let (t1, t2) = cfg.interval;
    if !(0.0 <= t1 && t1 < t2 && t2 <= cfg.model.horizon) {
        return Err(HazardError::Validation(format!(
            "interval [{t1}, {t2}] outside the model horizon {}",
            cfg.model.horizon
        )));
    }
    if cfg.band_kinds.is_empty() || cfg.band_kinds.contains(&BandKind::DiffDirectWild) {
        return Err(HazardError::Validation(
            "band_kinds must be nonempty and made of single-transition kinds".into(),
        ));
    }
    if cfg.band_kinds.iter().any(|k| k.is_wild()) && cfg.laws.is_empty() {
        return Err(HazardError::Validation("wild band kinds need at least one multiplier law".into()));
    }

    let transitions: Vec<TransitionKey> = cfg.model.hazard_increments.keys().cloned().collect();
    let truth: BTreeMap<TransitionKey, crate::curve::StepCurve> = transitions
        .iter()
        .map(|k| Ok((k.clone(), cfg.model.true_cumulative_hazard(k)?)))
        .collect::<Result<_>>()?;

    let wild_kinds: Vec<BandKind> = cfg.band_kinds.iter().copied().filter(|k| k.is_wild()).collect();
    let asym_kinds: Vec<BandKind> = cfg.band_kinds.iter().copied().filter(|k| !k.is_wild()).collect();
    let need_ep_wild = wild_kinds.contains(&BandKind::EpWild);
    let need_ep_asym = asym_kinds.contains(&BandKind::EpAsymptotic);

    let mut cells: Vec<StudyCell> = Vec::new();
    for (size_idx, &n) in cfg.sample_sizes.iter().enumerate() {
        let expected = expected_event_counts_model(&cfg.model, n, cfg.interval)?;
        // transitions that meet the minimum expected-event rule for this n
        let mut included: Vec<TransitionKey> = Vec::new();
        for key in &transitions {
            let e = expected[key];
            if e < cfg.min_expected_events {
                for kind in &cfg.band_kinds {
                    let laws: Vec<Option<MultiplierLaw>> = if kind.is_wild() {
                        cfg.laws.iter().map(|&l| Some(l)).collect()
                    } else {
                        vec![None]
                    };
                    for law in laws {
                        cells.push(StudyCell {
                            scenario: "coverage".into(),
                            sample_size: n,
                            transition: Some(key.to_string()),
                            method: kind.label().into(),
                            law: law.map(|l| l.label().into()),
                            variance: variance_label(*kind, cfg),
                            numerator: 0,
                            denominator: 0,
                            estimate: None,
                            std_error: None,
                            skipped: true,
                            skip_reason: Some(format!(
                                "expected events {e:.1} < {} on [{t1}, {t2}]",
                                cfg.min_expected_events
                            )),
                        });
                    }
                }
            } else {
                included.push(key.clone());
            }
        }

        // fixed cell layout for this sample size
        let mut layout: Vec<CoverageCellKey> = Vec::new();
        for key in &included {
            for kind in &wild_kinds {
                for &law in &cfg.laws {
                    layout.push(CoverageCellKey { transition: key.clone(), kind: *kind, law: Some(law) });
                }
            }
            for kind in &asym_kinds {
                layout.push(CoverageCellKey { transition: key.clone(), kind: *kind, law: None });
            }
        }

        let per_study: Vec<Result<Vec<bool>>> = run_indexed(cfg.n_studies as usize, |j| {
            let study_id = (size_idx * cfg.n_studies as usize + j) as u32;
            let seed = SeedSpec::new(cfg.master_seed).with_study(study_id);
            let records = simulate_multistate(&cfg.model, n, seed)?;
            let paths = build_counting_paths(&records, cfg.model.horizon)?;
            let mut covered = Vec::with_capacity(layout.len());
            for key in &included {
                let path = paths.get(key).ok_or_else(|| {
                    HazardError::Validation(format!("study {study_id}: no observed {key} events"))
                })?;
                let fit = nelson_aalen(path);
                let truth_curve = &truth[key];

                if !wild_kinds.is_empty() {
                    for &law in &cfg.laws {
                        let draws = wild_sup_draws_triple(
                            path,
                            cfg.interval,
                            law,
                            cfg.n_boot as usize,
                            seed,
                            Tail::TwoSided,
                            need_ep_wild,
                        )?;
                        for kind in &wild_kinds {
                            let (c, variance) = match kind {
                                BandKind::EpWild => {
                                    (quantile_of_draws(draws.ep.clone(), cfg.level), Some(cfg.wild_variance))
                                }
                                BandKind::HwWild => {
                                    (quantile_of_draws(draws.hw.clone(), cfg.level), Some(cfg.wild_variance))
                                }
                                _ => (quantile_of_draws(draws.direct.clone(), cfg.level), None),
                            };
                            let band = assemble_band(&fit, *kind, cfg.interval, cfg.level, c, variance, Some(law))?;
                            covered.push(band.covers(truth_curve)?);
                        }
                    }
                }
                if !asym_kinds.is_empty() {
                    let var_curve = fit.variance_curve(cfg.asymptotic_variance);
                    let phi_lo = phi_hat(var_curve, t1)?;
                    let phi_hi = phi_hat(var_curve, t2)?;
                    if phi_lo == 0.0 {
                        return Err(HazardError::Validation(format!(
                            "study {study_id}: no {key} events before t1 = {t1}"
                        )));
                    }
                    let (c_ep, c_hw) = bridge_dual_quantiles(
                        phi_lo,
                        phi_hi,
                        cfg.level,
                        cfg.bridge_paths as usize,
                        cfg.bridge_grid as usize,
                        seed,
                        need_ep_asym,
                    )?;
                    for kind in &asym_kinds {
                        let c = if *kind == BandKind::EpAsymptotic { c_ep } else { c_hw };
                        let band = assemble_band(
                            &fit,
                            *kind,
                            cfg.interval,
                            cfg.level,
                            c,
                            Some(cfg.asymptotic_variance),
                            None,
                        )?;
                        covered.push(band.covers(truth_curve)?);
                    }
                }
            }
            Ok(covered)
        });

        let mut counts = vec![0u64; layout.len()];
        for study in per_study {
            let covered = study?;
            debug_assert_eq!(covered.len(), layout.len());
            for (slot, ok) in counts.iter_mut().zip(covered) {
                *slot += ok as u64;
            }
        }
        for (cell, count) in layout.iter().zip(counts) {
            cells.push(
                StudyCell {
                    scenario: "coverage".into(),
                    sample_size: n,
                    transition: Some(cell.transition.to_string()),
                    method: cell.kind.label().into(),
                    law: cell.law.map(|l| l.label().into()),
                    variance: variance_label(cell.kind, cfg),
                    numerator: count,
                    denominator: cfg.n_studies as u64,
                    estimate: None,
                    std_error: None,
                    skipped: false,
                    skip_reason: None,
                }
                .filled(),
            );
        }
    }

    Ok(StudyReport {
        label: "band coverage study".into(),
        master_seed: cfg.master_seed,
        n_studies: cfg.n_studies as u64,
        cells,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

fn variance_label(kind: BandKind, cfg: &CoverageStudyConfig) -> Option<String> {
    match kind {
        BandKind::EpAsymptotic | BandKind::HwAsymptotic => Some(label_of(cfg.asymptotic_variance)),
        BandKind::EpWild | BandKind::HwWild => Some(label_of(cfg.wild_variance)),
        _ => None,
    }
}

fn label_of(v: VarianceKind) -> String {
    match v {
        VarianceKind::Aalen => "aalen".into(),
        VarianceKind::Greenwood => "greenwood".into(),
    }
}

// ---------------------------------------------------------------------------
// Size study
// ---------------------------------------------------------------------------

/// Configuration of the proportionality-test size study over the
/// constant-hazard scenario presets with balanced group sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeStudyConfig {
    pub scenarios: Vec<ScenarioId>,
    pub sample_sizes: Vec<u64>,
    pub n_studies: u32,
    pub n_boot: u32,
    /// Nominal test size alpha.
    pub alpha: f64,
    pub laws: Vec<MultiplierLaw>,
    pub rhos: Vec<RhoKind>,
    pub master_seed: u64,
}

impl SizeStudyConfig {
    /// The full grid reported in the size-study table: scenarios I-IV,
    /// n in {125, 250, 500, 1000}, both statistics, both laws, alpha = 5%.
    pub fn table3_default(n_studies: u32, n_boot: u32, master_seed: u64) -> Self {
        SizeStudyConfig {
            scenarios: ScenarioId::ALL.to_vec(),
            sample_sizes: vec![125, 250, 500, 1000],
            n_studies,
            n_boot,
            alpha: 0.05,
            laws: vec![MultiplierLaw::StandardNormal, MultiplierLaw::CenteredPoissonOne],
            rhos: vec![RhoKind::KolmogorovSmirnov, RhoKind::CramerVonMises],
            master_seed,
        }
    }
}

/// Run the size study: per simulated study, generate both groups, run the
/// proportionality test for every configured law and statistic on the
/// type-1 transition, and aggregate rejection rates.
pub fn run_size_study(cfg: &SizeStudyConfig) -> Result<StudyReport> {
    let started = std::time::Instant::now();
    if cfg.n_studies == 0 {
        return Err(HazardError::Validation("n_studies must be at least 1".into()));
    }
    if cfg.scenarios.is_empty() || cfg.sample_sizes.is_empty() || cfg.laws.is_empty() || cfg.rhos.is_empty() {
        return Err(HazardError::Validation("scenarios, sizes, laws and rhos must be nonempty".into()));
    }
    if !(0.0 < cfg.alpha && cfg.alpha < 1.0) {
        return Err(HazardError::Validation(format!("alpha must be in (0,1), got {}", cfg.alpha)));
    }
    let type1: TransitionKey = "0>1".parse()?;

    let mut cells = Vec::new();
    for (si, &scenario_id) in cfg.scenarios.iter().enumerate() {
        for (ni, &n) in cfg.sample_sizes.iter().enumerate() {
            let scenario = ConstantHazardScenario::table3(scenario_id, n, n);
            let cell_base = (si * cfg.sample_sizes.len() + ni) as u32;

            let per_study: Vec<Result<Vec<bool>>> = run_indexed(cfg.n_studies as usize, |j| {
                let study_id = cell_base * cfg.n_studies + j as u32;
                let seed = SeedSpec::new(cfg.master_seed).with_study(study_id);
                let recs1 = simulate_competing_risks_constant(&scenario, Group::One, seed)?;
                let recs2 = simulate_competing_risks_constant(&scenario, Group::Two, seed)?;
                let paths1 = build_counting_paths(&recs1, scenario.tau)?;
                let paths2 = build_counting_paths(&recs2, scenario.tau)?;
                let missing = |g: &str| {
                    HazardError::Validation(format!("study {study_id}: no type-1 events in group {g}"))
                };
                let path1 = paths1.get(&type1).ok_or_else(|| missing("1"))?;
                let path2 = paths2.get(&type1).ok_or_else(|| missing("2"))?;

                let mut rejections = Vec::with_capacity(cfg.laws.len() * cfg.rhos.len());
                for &law in &cfg.laws {
                    let (ks, cvm) = prop_hazards_test_pair(path1, path2, cfg.alpha, cfg.n_boot as usize, law, seed)?;
                    for rho in &cfg.rhos {
                        rejections.push(match rho {
                            RhoKind::KolmogorovSmirnov => ks.reject,
                            RhoKind::CramerVonMises => cvm.reject,
                        });
                    }
                }
                Ok(rejections)
            });

            let mut counts = vec![0u64; cfg.laws.len() * cfg.rhos.len()];
            for study in per_study {
                for (slot, rejected) in counts.iter_mut().zip(study?) {
                    *slot += rejected as u64;
                }
            }
            let mut slot = 0;
            for &law in &cfg.laws {
                for rho in &cfg.rhos {
                    cells.push(
                        StudyCell {
                            scenario: scenario_id.label().into(),
                            sample_size: n,
                            transition: Some(type1.to_string()),
                            method: format!("prop-{}", rho.label()),
                            law: Some(law.label().into()),
                            variance: None,
                            numerator: counts[slot],
                            denominator: cfg.n_studies as u64,
                            estimate: None,
                            std_error: None,
                            skipped: false,
                            skip_reason: None,
                        }
                        .filled(),
                    );
                    slot += 1;
                }
            }
        }
    }

    Ok(StudyReport {
        label: "proportionality-test size study".into(),
        master_seed: cfg.master_seed,
        n_studies: cfg.n_studies as u64,
        cells,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}
