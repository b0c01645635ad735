//! Monte Carlo data generation: a discrete multistate simulator driven by
//! cumulative-hazard increments (a nested series of competing-risks
//! experiments, Markov by construction), and exact constant-hazard
//! competing-risks sampling for two-sample test studies.

use std::collections::BTreeMap;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::StepCurve;
use crate::error::{HazardError, Result};
use crate::event::{SubjectRecord, TransitionKey};
use crate::exec::run_indexed;
use crate::seed::{SeedSpec, StreamDomain};

/// Discrete-time multistate model: at every listed time, a subject in state
/// `l` moves to state `m` with probability equal to the increment of the
/// cumulative hazard of `l -> m` at that time, conditionally on still being
/// in `l` (remaining mass = stay). Censoring times are drawn independently
/// from the listed masses, with the leftover mass at the administrative
/// horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncrementModel {
    pub states: Vec<String>,
    pub initial_distribution: BTreeMap<String, f64>,
    pub hazard_increments: BTreeMap<TransitionKey, Vec<(f64, f64)>>,
    #[serde(default)]
    pub censoring_increments: Vec<(f64, f64)>,
    pub horizon: f64,
}

impl IncrementModel {
    /// Constant-hazard model on a uniform grid: transition `l -> m` with
    /// hazard alpha gets increment alpha * horizon / steps at each of the
    /// `steps` grid times.
    pub fn constant_hazards(
        states: &[&str],
        initial_distribution: &[(&str, f64)],
        hazards: &[(&str, &str, f64)],
        horizon: f64,
        steps: usize,
        censoring_increments: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Err(HazardError::Validation("need steps > 0 and horizon > 0".into()));
        }
        let dt = horizon / steps as f64;
        let times: Vec<f64> = (1..=steps).map(|i| i as f64 * dt).collect();
        let mut hazard_increments = BTreeMap::new();
        for &(from, to, alpha) in hazards {
            let key = TransitionKey::new(from, to)?;
            let incs: Vec<(f64, f64)> = times.iter().map(|&t| (t, alpha * dt)).collect();
            hazard_increments.insert(key, incs);
        }
        let model = IncrementModel {
            states: states.iter().map(|s| s.to_string()).collect(),
            initial_distribution: initial_distribution
                .iter()
                .map(|&(s, p)| (s.to_string(), p))
                .collect(),
            hazard_increments,
            censoring_increments,
            horizon,
        };
        model.validate()?;
        Ok(model)
    }

    /// The model's true cumulative hazard for one transition, as the step
    /// curve of summed increments on [0, horizon].
    pub fn true_cumulative_hazard(&self, key: &TransitionKey) -> Result<StepCurve> {
        let incs = self
            .hazard_increments
            .get(key)
            .ok_or_else(|| HazardError::Validation(format!("model has no transition {key}")))?;
        let mut cum = 0.0;
        let (times, values): (Vec<f64>, Vec<f64>) = incs
            .iter()
            .map(|&(t, h)| {
                cum += h;
                (t, cum)
            })
            .unzip();
        StepCurve::new(0.0, times, values, self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(HazardError::Validation("model needs at least one state".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(HazardError::Validation("horizon must be positive and finite".into()));
        }
        let state_idx = |label: &str| -> Result<usize> {
            self.states
                .iter()
                .position(|s| s == label)
                .ok_or_else(|| HazardError::Validation(format!("unknown state label {label}")))
        };

        let mut init_sum = 0.0;
        for (s, &p) in &self.initial_distribution {
            state_idx(s)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(HazardError::Validation(format!("initial probability {p} outside [0,1]")));
            }
            if p > 0.0 && !self.hazard_increments.keys().any(|k| k.from == *s) {
                return Err(HazardError::Validation(format!(
                    "initial mass on state {s}, which has no outgoing transitions"
                )));
            }
            init_sum += p;
        }
        if (init_sum - 1.0).abs() > 1e-9 {
            return Err(HazardError::Validation(format!(
                "initial distribution sums to {init_sum}, expected 1"
            )));
        }

        // per-(state, time) sums of outgoing increments must stay within 1
        let mut per_state_time: BTreeMap<(usize, u64), f64> = BTreeMap::new();
        for (key, incs) in &self.hazard_increments {
            let from = state_idx(&key.from)?;
            state_idx(&key.to)?;
            let mut prev = 0.0;
            for &(t, h) in incs {
                if !t.is_finite() || t <= 0.0 || t > self.horizon {
                    return Err(HazardError::Validation(format!(
                        "increment time {t} of {key} outside (0, horizon]"
                    )));
                }
                if t <= prev && prev > 0.0 {
                    return Err(HazardError::Validation(format!(
                        "increment times of {key} must be strictly increasing"
                    )));
                }
                if !(0.0..=1.0).contains(&h) {
                    return Err(HazardError::Validation(format!(
                        "increment {h} of {key} at time {t} outside [0,1]"
                    )));
                }
                prev = t;
                *per_state_time.entry((from, t.to_bits())).or_insert(0.0) += h;
            }
        }
        for ((state, tbits), sum) in per_state_time {
            if sum > 1.0 {
                return Err(HazardError::Validation(format!(
                    "outgoing increments of state {} at time {} sum to {sum} > 1",
                    self.states[state],
                    f64::from_bits(tbits)
                )));
            }
        }

        let mut prev = 0.0;
        let mut cens_sum = 0.0;
        for &(t, mass) in &self.censoring_increments {
            if !t.is_finite() || t <= 0.0 || t > self.horizon {
                return Err(HazardError::Validation(format!("censoring time {t} outside (0, horizon]")));
            }
            if t <= prev && prev > 0.0 {
                return Err(HazardError::Validation("censoring times must be strictly increasing".into()));
            }
            if mass < 0.0 {
                return Err(HazardError::Validation("censoring masses must be nonnegative".into()));
            }
            prev = t;
            cens_sum += mass;
        }
        if cens_sum > 1.0 + 1e-12 {
            return Err(HazardError::Validation(format!("censoring masses sum to {cens_sum} > 1")));
        }
        Ok(())
    }

    fn compile(&self) -> Result<Compiled> {
        self.validate()?;
        let state_idx: BTreeMap<&str, usize> =
            self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut times: Vec<f64> = Vec::new();
        for incs in self.hazard_increments.values() {
            times = crate::curve::merged_times(&times, &incs.iter().map(|&(t, _)| t).collect::<Vec<_>>());
        }
        let n_states = self.states.len();
        let mut out: Vec<Vec<Vec<(usize, f64)>>> = vec![vec![Vec::new(); times.len()]; n_states];
        let mut has_outgoing = vec![false; n_states];
        for (key, incs) in &self.hazard_increments {
            let from = state_idx[key.from.as_str()];
            let to = state_idx[key.to.as_str()];
            has_outgoing[from] = true;
            for &(t, h) in incs {
                let ti = times.partition_point(|&x| x < t);
                debug_assert_eq!(times[ti], t);
                out[from][ti].push((to, h));
            }
        }
        // deterministic multinomial bin order at each time
        for per_state in &mut out {
            for outs in per_state {
                outs.sort_by_key(|&(to, _)| to);
            }
        }
        let init: Vec<(usize, f64)> = self
            .initial_distribution
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| (state_idx[s.as_str()], p))
            .collect();
        Ok(Compiled {
            states: self.states.clone(),
            times,
            out,
            has_outgoing,
            init,
            censoring: self.censoring_increments.clone(),
            horizon: self.horizon,
        })
    }
}

struct Compiled {
    states: Vec<String>,
    times: Vec<f64>,
    out: Vec<Vec<Vec<(usize, f64)>>>,
    has_outgoing: Vec<bool>,
    init: Vec<(usize, f64)>,
    censoring: Vec<(f64, f64)>,
    horizon: f64,
}

impl Compiled {
    fn walk_subject(&self, id: String, rng: &mut impl Rng) -> Vec<SubjectRecord> {
        let u_init: f64 = rng.random();
        let mut cum = 0.0;
        let mut state = self.init.last().expect("validated nonempty").0;
        for &(s, p) in &self.init {
            cum += p;
            if u_init < cum {
                state = s;
                break;
            }
        }

        let u_cens: f64 = rng.random();
        let mut cens = self.horizon;
        let mut ccum = 0.0;
        for &(t, mass) in &self.censoring {
            ccum += mass;
            if u_cens < ccum {
                cens = t;
                break;
            }
        }
        let end = cens.min(self.horizon);

        let mut records = Vec::new();
        let mut entry = 0.0f64;
        let mut absorbed = false;
        'walk: for (ti, &t) in self.times.iter().enumerate() {
            if t > end {
                break;
            }
            let outs = &self.out[state][ti];
            if outs.is_empty() {
                continue;
            }
            let u: f64 = rng.random();
            let mut cum = 0.0;
            for &(target, h) in outs {
                cum += h;
                if u < cum {
                    records.push(SubjectRecord {
                        subject_id: id.clone(),
                        entry_time: entry,
                        exit_time: t,
                        from_state: self.states[state].clone(),
                        to_state: Some(self.states[target].clone()),
                    });
                    state = target;
                    entry = t;
                    if !self.has_outgoing[state] {
                        absorbed = true;
                        break 'walk;
                    }
                    continue 'walk;
                }
            }
        }
        if !absorbed && entry < end {
            records.push(SubjectRecord {
                subject_id: id,
                entry_time: entry,
                exit_time: end,
                from_state: self.states[state].clone(),
                to_state: None,
            });
        }
        records
    }
}

/// Simulate `n` independent subject paths from the model. Deterministic
/// given the seed: subject `i` draws from its own stream, and output order
/// is fixed by the subject index.
pub fn simulate_multistate(model: &IncrementModel, n: u64, seed: SeedSpec) -> Result<Vec<SubjectRecord>> {
    let compiled = model.compile()?;
    if n == 0 {
        return Err(HazardError::Validation("need at least one subject".into()));
    }
    let per_subject = run_indexed(n as usize, |i| {
        let mut rng = seed.with_replicate(i as u32).rng(StreamDomain::Subject);
        compiled.walk_subject((i + 1).to_string(), &mut rng)
    });
    Ok(per_subject.into_iter().flatten().collect())
}

/// Expected observed event counts per transition on a time interval, by
/// exact forward propagation of the discrete model (occupancy evolves by the
/// multinomial steps; observation requires the independent censoring time to
/// be at or past the event time).
pub fn expected_event_counts_model(
    model: &IncrementModel,
    n: u64,
    interval: (f64, f64),
) -> Result<BTreeMap<TransitionKey, f64>> {
    let compiled = model.compile()?;
    let (a, b) = interval;
    if !(a <= b) {
        return Err(HazardError::Validation(format!("invalid interval [{a}, {b}]")));
    }
    let n_states = compiled.states.len();
    let mut occupancy = vec![0.0f64; n_states];
    for &(s, p) in &compiled.init {
        occupancy[s] = p;
    }
    let mut counts: BTreeMap<TransitionKey, f64> = model
        .hazard_increments
        .keys()
        .map(|k| (k.clone(), 0.0))
        .collect();
    let mut cens_idx = 0usize;
    let mut cens_mass_before = 0.0f64;
    let mut delta = vec![0.0f64; n_states];
    for (ti, &t) in compiled.times.iter().enumerate() {
        // P(censoring time >= t): masses strictly before t are lost
        while cens_idx < compiled.censoring.len() && compiled.censoring[cens_idx].0 < t {
            cens_mass_before += compiled.censoring[cens_idx].1;
            cens_idx += 1;
        }
        let under_observation = 1.0 - cens_mass_before;
        delta.iter_mut().for_each(|d| *d = 0.0);
        for from in 0..n_states {
            let outs = &compiled.out[from][ti];
            if outs.is_empty() || occupancy[from] == 0.0 {
                continue;
            }
            for &(to, h) in outs {
                let flow = occupancy[from] * h;
                if (a..=b).contains(&t) {
                    let key = TransitionKey::new(compiled.states[from].clone(), compiled.states[to].clone())?;
                    *counts.get_mut(&key).expect("key from model") += n as f64 * flow * under_observation;
                }
                delta[from] -= flow;
                delta[to] += flow;
            }
        }
        for s in 0..n_states {
            occupancy[s] += delta[s];
        }
    }
    Ok(counts)
}

/// Which of the two unpaired samples to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

/// Constant-hazard two-sample competing-risks scenario: per group, event
/// time T ~ Exp(alpha01 + alpha02), cause 1 with probability
/// alpha01/(alpha01+alpha02), administrative censoring at the deterministic
/// cutoff that leaves `target_censoring` of subjects censored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantHazardScenario {
    pub alpha01_g1: f64,
    pub alpha01_g2: f64,
    pub alpha02_g1: f64,
    pub alpha02_g2: f64,
    pub tau: f64,
    pub target_censoring: f64,
    pub n1: u64,
    pub n2: u64,
}

/// The four constant-hazard configurations of the proportionality-test size
/// study: type-1 hazards (group 1, group 2) of (2,2), (1,2), (1,1) and
/// (1,1.5), always with competing hazard 2 in both groups, tau = 0.3 and 25%
/// censoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioId {
    I,
    II,
    III,
    IV,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::I, ScenarioId::II, ScenarioId::III, ScenarioId::IV];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioId::I => "I",
            ScenarioId::II => "II",
            ScenarioId::III => "III",
            ScenarioId::IV => "IV",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches("table3:") {
            "I" | "i" | "1" => Ok(ScenarioId::I),
            "II" | "ii" | "2" => Ok(ScenarioId::II),
            "III" | "iii" | "3" => Ok(ScenarioId::III),
            "IV" | "iv" | "4" => Ok(ScenarioId::IV),
            other => Err(HazardError::Validation(format!("unknown scenario `{other}`"))),
        }
    }
}

impl ConstantHazardScenario {
    pub fn table3(id: ScenarioId, n1: u64, n2: u64) -> Self {
        let (a1, a2) = match id {
            ScenarioId::I => (2.0, 2.0),
            ScenarioId::II => (1.0, 2.0),
            ScenarioId::III => (1.0, 1.0),
            ScenarioId::IV => (1.0, 1.5),
        };
        ConstantHazardScenario {
            alpha01_g1: a1,
            alpha01_g2: a2,
            alpha02_g1: 2.0,
            alpha02_g2: 2.0,
            tau: 0.3,
            target_censoring: 0.25,
            n1,
            n2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in [self.alpha01_g1, self.alpha01_g2, self.alpha02_g1, self.alpha02_g2] {
            if !(a > 0.0) || !a.is_finite() {
                return Err(HazardError::Validation(format!("hazards must be positive, got {a}")));
            }
        }
        if !(self.tau > 0.0) {
            return Err(HazardError::Validation("tau must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.target_censoring) {
            return Err(HazardError::Validation(format!(
                "target censoring fraction {} outside [0, 1)",
                self.target_censoring
            )));
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(HazardError::Validation("group sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn group_hazards(&self, group: Group) -> (f64, f64) {
        match group {
            Group::One => (self.alpha01_g1, self.alpha02_g1),
            Group::Two => (self.alpha01_g2, self.alpha02_g2),
        }
    }

    pub fn group_size(&self, group: Group) -> u64 {
        match group {
            Group::One => self.n1,
            Group::Two => self.n2,
        }
    }
}

/// Deterministic administrative cutoff c with exp(-alpha_total c) = target:
/// the fraction of subjects still event-free (hence censored) at c.
pub fn censoring_cutoff(alpha_total: f64, target_censoring: f64) -> f64 {
    if target_censoring <= 0.0 {
        f64::INFINITY
    } else {
        -(target_censoring.ln()) / alpha_total
    }
}

/// Exact exponential sampling of one group of a competing-risks scenario,
/// emitted as subject records over states {0, 1, 2}.
pub fn simulate_competing_risks_constant(
    scenario: &ConstantHazardScenario,
    group: Group,
    seed: SeedSpec,
) -> Result<Vec<SubjectRecord>> {
    scenario.validate()?;
    let (alpha1, alpha2) = scenario.group_hazards(group);
    let total = alpha1 + alpha2;
    let cause1_prob = alpha1 / total;
    let cutoff = censoring_cutoff(total, scenario.target_censoring);
    let n = scenario.group_size(group);
    let domain = match group {
        Group::One => StreamDomain::Subject,
        Group::Two => StreamDomain::SubjectSecond,
    };
    let records = run_indexed(n as usize, |i| {
        let mut rng = seed.with_replicate(i as u32).rng(domain);
        let u: f64 = rng.sample(Open01);
        let t = -u.ln() / total;
        let u_cause: f64 = rng.random();
        let id = (i + 1).to_string();
        if t <= cutoff {
            let to = if u_cause < cause1_prob { "1" } else { "2" };
            SubjectRecord {
                subject_id: id,
                entry_time: 0.0,
                exit_time: t,
                from_state: "0".into(),
                to_state: Some(to.into()),
            }
        } else {
            SubjectRecord {
                subject_id: id,
                entry_time: 0.0,
                exit_time: cutoff,
                from_state: "0".into(),
                to_state: None,
            }
        }
    });
    Ok(records)
}

/// Closed-form expected event counts per transition of a constant-hazard
/// scenario group on a time interval (events observed up to the censoring
/// cutoff): n * (alpha_j / total) * (exp(-total a) - exp(-total min(b, c))).
pub fn expected_event_counts_constant(
    scenario: &ConstantHazardScenario,
    group: Group,
    interval: (f64, f64),
) -> Result<BTreeMap<TransitionKey, f64>> {
    scenario.validate()?;
    let (a, b) = interval;
    if !(0.0 <= a && a <= b) {
        return Err(HazardError::Validation(format!("invalid interval [{a}, {b}]")));
    }
    let (alpha1, alpha2) = scenario.group_hazards(group);
    let total = alpha1 + alpha2;
    let cutoff = censoring_cutoff(total, scenario.target_censoring);
    let n = scenario.group_size(group) as f64;
    let hi = b.min(cutoff);
    let mass = if hi > a {
        (-total * a).exp() - (-total * hi).exp()
    } else {
        0.0
    };
    Ok(BTreeMap::from([
        (TransitionKey::new("0", "1")?, n * (alpha1 / total) * mass),
        (TransitionKey::new("0", "2")?, n * (alpha2 / total) * mass),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::nelson_aalen;
    use crate::event::{build_counting_paths, validate_records};
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_step_multinomial_fraction() {
        let model = IncrementModel {
            states: vec!["0".into(), "2".into()],
            initial_distribution: BTreeMap::from([("0".into(), 1.0)]),
            hazard_increments: BTreeMap::from([("0>2".parse().unwrap(), vec![(1.0, 0.2)])]),
            censoring_increments: vec![],
            horizon: 2.0,
        };
        let records = simulate_multistate(&model, 100_000, SeedSpec::new(10)).unwrap();
        validate_records(&records).unwrap();
        let events = records.iter().filter(|r| !r.is_censored()).count() as f64;
        assert_abs_diff_eq!(events / 100_000.0, 0.2, epsilon = 0.004);
    }

    #[test]
    fn zero_increments_mean_administrative_censoring_only() {
        let model = IncrementModel {
            states: vec!["0".into(), "1".into()],
            initial_distribution: BTreeMap::from([("0".into(), 1.0)]),
            hazard_increments: BTreeMap::from([("0>1".parse().unwrap(), vec![(0.5, 0.0), (1.0, 0.0)])]),
            censoring_increments: vec![],
            horizon: 2.0,
        };
        let records = simulate_multistate(&model, 500, SeedSpec::new(1)).unwrap();
        assert_eq!(records.len(), 500);
        assert!(records.iter().all(|r| r.is_censored() && r.exit_time == 2.0));
    }

    #[test]
    fn model_validation_rejects_bad_inputs() {
        // increments above one
        let too_big = IncrementModel {
            states: vec!["0".into(), "1".into()],
            initial_distribution: BTreeMap::from([("0".into(), 1.0)]),
            hazard_increments: BTreeMap::from([("0>1".parse().unwrap(), vec![(0.5, 1.2)])]),
            censoring_increments: vec![],
            horizon: 1.0,
        };
        assert!(too_big.validate().is_err());

        // conditional multinomial must stay within total mass one
        let over_mass = IncrementModel {
            states: vec!["0".into(), "1".into(), "2".into()],
            initial_distribution: BTreeMap::from([("0".into(), 1.0)]),
            hazard_increments: BTreeMap::from([
                ("0>1".parse().unwrap(), vec![(0.5, 0.6)]),
                ("0>2".parse().unwrap(), vec![(0.5, 0.6)]),
            ]),
            censoring_increments: vec![],
            horizon: 1.0,
        };
        assert!(over_mass.validate().is_err());

        // initial mass on an absorbing state
        let absorbing_start = IncrementModel {
            states: vec!["0".into(), "1".into()],
            initial_distribution: BTreeMap::from([("0".into(), 0.5), ("1".into(), 0.5)]),
            hazard_increments: BTreeMap::from([("0>1".parse().unwrap(), vec![(0.5, 0.1)])]),
            censoring_increments: vec![],
            horizon: 1.0,
        };
        assert!(absorbing_start.validate().is_err());
    }

    #[test]
    fn simulated_paths_are_connected_and_deterministic() {
        let model = IncrementModel::constant_hazards(
            &["0", "1", "2"],
            &[("0", 0.7), ("1", 0.3)],
            &[("0", "1", 0.4), ("1", "0", 0.5), ("0", "2", 0.5), ("1", "2", 0.6)],
            2.0,
            50,
            vec![(0.8, 0.05), (1.4, 0.05)],
        )
        .unwrap();
        let a = simulate_multistate(&model, 400, SeedSpec::new(42)).unwrap();
        let b = simulate_multistate(&model, 400, SeedSpec::new(42)).unwrap();
        assert_eq!(a, b);
        validate_records(&a).unwrap();
        // recovery transitions exist: someone moved 1 -> 0
        assert!(a.iter().any(|r| r.from_state == "1" && r.to_state.as_deref() == Some("0")));
        // absorbed subjects have no trailing censored record
        for r in &a {
            assert_ne!(r.from_state, "2");
        }
    }

    #[test]
    fn refitting_recovers_the_input_increments() {
        let model = IncrementModel::constant_hazards(
            &["0", "1", "2"],
            &[("0", 0.5), ("1", 0.5)],
            &[("0", "1", 0.5), ("1", "0", 0.5), ("0", "2", 0.5), ("1", "2", 0.5)],
            1.2,
            40,
            vec![],
        )
        .unwrap();
        let records = simulate_multistate(&model, 100_000, SeedSpec::new(7)).unwrap();
        let paths = build_counting_paths(&records, model.horizon).unwrap();
        for key in model.hazard_increments.keys() {
            let truth = model.true_cumulative_hazard(key).unwrap();
            let fit = nelson_aalen(&paths[key]);
            for &t in &[0.3, 0.6, 0.9, 1.2] {
                let estimate = fit.estimate.evaluate(t).unwrap();
                let target = truth.evaluate(t).unwrap();
                assert!(
                    (estimate - target).abs() / target < 0.02,
                    "{key} at {t}: {estimate} vs {target}"
                );
            }
        }
    }

    #[test]
    fn scenario_cutoffs_match_closed_forms() {
        assert_abs_diff_eq!(censoring_cutoff(4.0, 0.25), 4.0f64.ln() / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(censoring_cutoff(3.0, 0.25), 4.0f64.ln() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(censoring_cutoff(4.0, 0.25), 0.34657359, epsilon = 1e-8);
        assert_abs_diff_eq!(censoring_cutoff(3.0, 0.25), 0.46209812, epsilon = 1e-8);
        assert_eq!(censoring_cutoff(4.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn competing_risks_fractions_and_censoring() {
        let scenario = ConstantHazardScenario::table3(ScenarioId::I, 50_000, 50_000);
        let records = simulate_competing_risks_constant(&scenario, Group::One, SeedSpec::new(3)).unwrap();
        assert_eq!(records.len(), 50_000);
        validate_records(&records).unwrap();
        let n = records.len() as f64;
        let censored = records.iter().filter(|r| r.is_censored()).count() as f64;
        let tol = 3.0 * (0.25f64 * 0.75 / n).sqrt();
        assert_abs_diff_eq!(censored / n, 0.25, epsilon = tol);

        // equal competing hazards: half of the events are type 1
        let type1 = records.iter().filter(|r| r.to_state.as_deref() == Some("1")).count() as f64;
        let events = n - censored;
        assert_abs_diff_eq!(type1 / events, 0.5, epsilon = 3.0 * 0.5 / events.sqrt());

        // scenario II group 1: type-1 fraction among events is 1/3
        let s2 = ConstantHazardScenario::table3(ScenarioId::II, 50_000, 50_000);
        let records = simulate_competing_risks_constant(&s2, Group::One, SeedSpec::new(4)).unwrap();
        let censored = records.iter().filter(|r| r.is_censored()).count() as f64;
        let type1 = records.iter().filter(|r| r.to_state.as_deref() == Some("1")).count() as f64;
        let events = records.len() as f64 - censored;
        assert_abs_diff_eq!(type1 / events, 1.0 / 3.0, epsilon = 3.0 * 0.5 / events.sqrt());
    }

    #[test]
    fn event_times_pass_exponential_goodness_of_fit() {
        let scenario = ConstantHazardScenario {
            alpha01_g1: 2.0,
            alpha01_g2: 2.0,
            alpha02_g1: 2.0,
            alpha02_g2: 2.0,
            tau: 0.3,
            target_censoring: 0.0,
            n1: 100_000,
            n2: 1,
        };
        let records = simulate_competing_risks_constant(&scenario, Group::One, SeedSpec::new(12)).unwrap();
        let mut times: Vec<f64> = records.iter().map(|r| r.exit_time).collect();
        assert!(records.iter().all(|r| !r.is_censored()));
        times.sort_by(f64::total_cmp);
        let n = times.len() as f64;
        let total = 4.0;
        let mut d: f64 = 0.0;
        for (i, &t) in times.iter().enumerate() {
            let f = 1.0 - (-total * t).exp();
            d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
        let critical = crate::math::kolmogorov_sup_quantile(0.99) / n.sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn expected_counts_constant_scenario() {
        let scenario = ConstantHazardScenario {
            alpha01_g1: 2.0,
            alpha01_g2: 2.0,
            alpha02_g1: 2.0,
            alpha02_g2: 2.0,
            tau: 0.3,
            target_censoring: 0.25,
            n1: 100,
            n2: 100,
        };
        let counts = expected_event_counts_constant(&scenario, Group::One, (0.0, 0.3)).unwrap();
        let total: f64 = counts.values().sum();
        // cutoff ~ 0.3466 > 0.3, so the window is capped at 0.3
        assert_abs_diff_eq!(total, 100.0 * (1.0 - (-1.2f64).exp()), epsilon = 1e-10);
        assert_abs_diff_eq!(total, 69.88, epsilon = 0.01);
        let per = counts[&"0>1".parse::<TransitionKey>().unwrap()];
        assert_abs_diff_eq!(per, total / 2.0, epsilon = 1e-10);

        // zero-width interval and zero hazard limits
        let none = expected_event_counts_constant(&scenario, Group::One, (0.3, 0.3)).unwrap();
        assert!(none.values().all(|&v| v == 0.0));
    }

    #[test]
    fn expected_counts_model_match_simulation() {
        let model = IncrementModel::constant_hazards(
            &["0", "1", "2"],
            &[("0", 0.6), ("1", 0.4)],
            &[("0", "1", 0.4), ("1", "0", 0.5), ("0", "2", 0.5), ("1", "2", 0.6)],
            1.5,
            60,
            vec![(0.5, 0.1), (1.0, 0.1)],
        )
        .unwrap();
        let n = 200_000u64;
        let expected = expected_event_counts_model(&model, n, (0.3, 1.2)).unwrap();
        let records = simulate_multistate(&model, n, SeedSpec::new(19)).unwrap();
        for (key, &want) in &expected {
            let got = records
                .iter()
                .filter(|r| {
                    r.from_state == key.from
                        && r.to_state.as_deref() == Some(key.to.as_str())
                        && (0.3..=1.2).contains(&r.exit_time)
                })
                .count() as f64;
            let se = want.sqrt().max(1.0);
            assert!((got - want).abs() < 5.0 * se, "{key}: simulated {got} vs expected {want}");
        }
    }
}
