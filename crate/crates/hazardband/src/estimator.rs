//! Nelson-Aalen estimation of cumulative hazards with the Aalen- and
//! Greenwood-type variance estimators.

use serde::Serialize;

use crate::curve::StepCurve;
use crate::event::{CountingPath, TransitionKey};

/// Fitted cumulative hazard for one transition, as step curves:
/// the estimate A(t) = sum dN/Y, the Aalen-type variance
/// n * sum dN/Y^2 and the Greenwood-type variance n * sum (Y-dN) dN / Y^3,
/// all summed over jump times <= t.
#[derive(Debug, Clone, Serialize)]
pub struct NelsonAalenFit {
    pub transition: TransitionKey,
    pub estimate: StepCurve,
    pub var_aalen: StepCurve,
    pub var_greenwood: StepCurve,
    pub n_subjects: u64,
}

/// Which variance estimator backs a variance-dependent construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    Aalen,
    Greenwood,
}

impl NelsonAalenFit {
    pub fn variance_curve(&self, kind: VarianceKind) -> &StepCurve {
        match kind {
            VarianceKind::Aalen => &self.var_aalen,
            VarianceKind::Greenwood => &self.var_greenwood,
        }
    }
}

/// Fit the Nelson-Aalen estimator and both variance estimators.
///
/// Ties are first-class: a jump of size dN at a time contributes single
/// aggregated terms dN/Y, dN/Y^2 and (Y-dN)dN/Y^3. The indicator 1{Y > 0}
/// is automatic because jumps require Y >= dN >= 1.
pub fn nelson_aalen(path: &CountingPath) -> NelsonAalenFit {
    let k = path.n_jumps();
    let n = path.n_subjects as f64;
    let mut estimate = Vec::with_capacity(k);
    let mut aalen = Vec::with_capacity(k);
    let mut greenwood = Vec::with_capacity(k);
    let (mut a, mut va, mut vg) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..k {
        let dn = path.jump_sizes[i] as f64;
        let y = path.at_risk[i] as f64;
        a += dn / y;
        va += dn / (y * y);
        vg += (y - dn) * dn / (y * y * y);
        estimate.push(a);
        aalen.push(n * va);
        greenwood.push(n * vg);
    }
    let times = path.jump_times.clone();
    let mk = |values: Vec<f64>| {
        StepCurve::new(0.0, times.clone(), values, path.tau)
            .expect("jump times of a valid CountingPath form a valid curve grid")
    };
    NelsonAalenFit {
        transition: path.transition.clone(),
        estimate: mk(estimate),
        var_aalen: mk(aalen),
        var_greenwood: mk(greenwood),
        n_subjects: path.n_subjects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::build_counting_paths;
    use crate::event::SubjectRecord;
    use approx::assert_abs_diff_eq;

    fn d0_path() -> CountingPath {
        CountingPath::new(
            TransitionKey::new("0", "1").unwrap(),
            vec![1.0, 2.0],
            vec![1, 1],
            vec![3, 2],
            3,
            3.0,
        )
        .unwrap()
    }

    #[test]
    fn d0_hand_values() {
        let fit = nelson_aalen(&d0_path());
        assert_abs_diff_eq!(fit.estimate.evaluate(2.0).unwrap(), 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.var_aalen.evaluate(2.0).unwrap(), 13.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.var_greenwood.evaluate(2.0).unwrap(), 43.0 / 72.0, epsilon = 1e-15);
        // before the first jump everything is zero
        assert_eq!(fit.estimate.evaluate(0.5).unwrap(), 0.0);
        assert_eq!(fit.var_aalen.evaluate(0.5).unwrap(), 0.0);
    }

    #[test]
    fn no_jumps_gives_zero_curves() {
        let path = CountingPath::new(
            TransitionKey::new("0", "1").unwrap(),
            vec![],
            vec![],
            vec![],
            4,
            1.0,
        )
        .unwrap();
        let fit = nelson_aalen(&path);
        assert_eq!(fit.estimate.evaluate(0.9).unwrap(), 0.0);
        assert_eq!(fit.var_aalen.evaluate(0.9).unwrap(), 0.0);
        assert_eq!(fit.var_greenwood.evaluate(0.9).unwrap(), 0.0);
    }

    #[test]
    fn single_jump_formulas() {
        let n = 7u64;
        let path = CountingPath::new(
            TransitionKey::new("0", "1").unwrap(),
            vec![0.5],
            vec![1],
            vec![n],
            n,
            1.0,
        )
        .unwrap();
        let fit = nelson_aalen(&path);
        let nf = n as f64;
        assert_abs_diff_eq!(fit.estimate.terminal_value(), 1.0 / nf, epsilon = 1e-15);
        assert_abs_diff_eq!(
            fit.var_greenwood.terminal_value(),
            (nf - 1.0) / (nf * nf),
            epsilon = 1e-15
        );
    }

    #[test]
    fn greenwood_below_aalen_strictly_when_not_saturated() {
        let fit = nelson_aalen(&d0_path());
        for &t in &[1.0, 2.0] {
            let a = fit.var_aalen.evaluate(t).unwrap();
            let g = fit.var_greenwood.evaluate(t).unwrap();
            assert!(g < a, "greenwood {g} should be strictly below aalen {a}");
        }
        // saturated jump (dN = Y) contributes zero to Greenwood
        let path = CountingPath::new(
            TransitionKey::new("0", "1").unwrap(),
            vec![1.0],
            vec![2],
            vec![2],
            2,
            2.0,
        )
        .unwrap();
        let fit = nelson_aalen(&path);
        assert_eq!(fit.var_greenwood.terminal_value(), 0.0);
        assert!(fit.var_aalen.terminal_value() > 0.0);
    }

    #[test]
    fn duplicating_every_subject_preserves_estimate_and_variances_exactly() {
        let base = crate::event::tests::d0_records();
        let mut doubled: Vec<SubjectRecord> = base.clone();
        for r in &base {
            let mut copy = r.clone();
            copy.subject_id = format!("{}-dup", r.subject_id);
            doubled.push(copy);
        }
        let key = TransitionKey::new("0", "1").unwrap();
        let fit1 = nelson_aalen(&build_counting_paths(&base, 3.0).unwrap()[&key]);
        let fit2 = nelson_aalen(&build_counting_paths(&doubled, 3.0).unwrap()[&key]);
        for &t in &[1.0, 1.5, 2.0, 3.0] {
            assert_eq!(fit1.estimate.evaluate(t).unwrap(), fit2.estimate.evaluate(t).unwrap());
            assert_eq!(fit1.var_aalen.evaluate(t).unwrap(), fit2.var_aalen.evaluate(t).unwrap());
            assert_eq!(
                fit1.var_greenwood.evaluate(t).unwrap(),
                fit2.var_greenwood.evaluate(t).unwrap()
            );
        }
    }
}
