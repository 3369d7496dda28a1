//! Analytic bound evaluators, all computed in log space.

mod constants;
pub mod fs;
mod lightcone;
mod moments;
mod truncation;

pub use constants::{BoundConstants, BoundInputs, FreeConstants};
pub use lightcone::{
    clustering_bound, lightcone_radius, main_lr_bound, quench_bounds, local_approx_bound, LightCone,
    QuenchBounds,
};
pub use moments::{
    adjacency_exp_bound, cross_moment_bound, first_moment_bound, initial_moment_bounds,
    moment_bound, tail_bound, AdjacencyCheck, InitialMomentBounds, TailMode, ADJACENCY_CHI,
};
pub use truncation::{
    concentration_bound, short_lr_bound, solve_eta, solve_eta_capped, truncation_error_bound, EtaSolution,
    ETA_Q_CAP,
};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Largest log that still exponentiates to a finite f64.
pub const LOG_MAX_F64: f64 = 709.782712893384;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityCondition {
    pub name: String,
    pub satisfied: bool,
}

/// Evaluated bound with its inputs and the conditions under which the
/// underlying inequality is proven.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub inputs: IndexMap<String, f64>,
    pub log_value: f64,
    pub validity_conditions: Vec<ValidityCondition>,
}

impl BoundReport {
    pub(crate) fn new(name: &str, log_value: f64) -> Self {
        BoundReport {
            bound_name: name.to_string(),
            inputs: IndexMap::new(),
            log_value,
            validity_conditions: Vec::new(),
        }
    }

    pub(crate) fn input(mut self, name: &str, v: f64) -> Self {
        self.inputs.insert(name.to_string(), v);
        self
    }

    pub(crate) fn condition(mut self, name: &str, satisfied: bool) -> Self {
        self.validity_conditions.push(ValidityCondition { name: name.to_string(), satisfied });
        self
    }

    /// The bound as a number when it fits in an f64.
    pub fn value(&self) -> Option<f64> {
        (self.log_value <= LOG_MAX_F64).then(|| self.log_value.exp())
    }

    /// Whether every validity condition holds.
    pub fn valid(&self) -> bool {
        self.validity_conditions.iter().all(|c| c.satisfied)
    }

    /// measured <= bound, compared in log space.
    pub fn dominates(&self, measured: f64) -> bool {
        measured <= 0.0 || measured.ln() <= self.log_value
    }
}

/// log(e^a + e^b)
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn ln_factorial(s: u32) -> f64 {
    (2..=s).map(|k| (k as f64).ln()).sum()
}
