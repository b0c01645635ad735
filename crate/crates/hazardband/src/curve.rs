//! Right-continuous piecewise-constant functions on [0, tau].

use serde::{Deserialize, Serialize};

use crate::error::{HazardError, Result};

/// A right-continuous step function: `values[i]` is the value on
/// `[times[i], times[i+1])` and `value_at_0` the value on `[0, times[0])`.
/// With no jump times the curve is constant at `value_at_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCurve {
    #[serde(rename = "t0")]
    value_at_0: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    tau: f64,
}

impl StepCurve {
    pub fn new(value_at_0: f64, times: Vec<f64>, values: Vec<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(HazardError::Validation(format!("tau must be positive and finite, got {tau}")));
        }
        if times.len() != values.len() {
            return Err(HazardError::Validation(format!(
                "times/values length mismatch: {} vs {}",
                times.len(),
                values.len()
            )));
        }
        if !value_at_0.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(HazardError::Validation("curve values must be finite".into()));
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 || t > tau {
                return Err(HazardError::Validation(format!(
                    "jump time {t} outside [0, {tau}]"
                )));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(HazardError::Validation(format!(
                    "jump times must be strictly increasing ({} then {t})",
                    times[i - 1]
                )));
            }
        }
        Ok(StepCurve { value_at_0, times, values, tau })
    }

    pub fn constant(value: f64, tau: f64) -> Result<Self> {
        StepCurve::new(value, Vec::new(), Vec::new(), tau)
    }

    pub fn value_at_0(&self) -> f64 {
        self.value_at_0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Right-continuous evaluation: the value attached to the largest jump
    /// time <= t, or `value_at_0` before the first jump.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.tau).contains(&t) {
            return Err(HazardError::Domain(format!(
                "evaluation point {t} outside [0, {}]",
                self.tau
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        if idx == 0 {
            self.value_at_0
        } else {
            self.values[idx - 1]
        }
    }

    /// Final value of the curve (its value at tau).
    pub fn terminal_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.value_at_0)
    }

    /// Exact pointwise difference a - b on the merged jump grid.
    pub fn difference(a: &StepCurve, b: &StepCurve) -> Result<StepCurve> {
        if a.tau != b.tau {
            return Err(HazardError::Validation(format!(
                "curve difference needs equal tau ({} vs {})",
                a.tau, b.tau
            )));
        }
        let grid = merged_times(&a.times, &b.times);
        let values = grid
            .iter()
            .map(|&t| a.eval_unchecked(t) - b.eval_unchecked(t))
            .collect();
        StepCurve::new(a.value_at_0 - b.value_at_0, grid, values, a.tau)
    }

    /// Curve with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> StepCurve {
        StepCurve {
            value_at_0: c * self.value_at_0,
            times: self.times.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            tau: self.tau,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        let mut prev = self.value_at_0;
        for &v in &self.values {
            if v < prev {
                return false;
            }
            prev = v;
        }
        true
    }
}

/// Sorted union of two sorted time vectors, de-duplicated by exact equality.
pub fn merged_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => {
                if x < y {
                    i += 1;
                    x
                } else if y < x {
                    j += 1;
                    y
                } else {
                    i += 1;
                    j += 1;
                    x
                }
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(t);
    }
    out
}
