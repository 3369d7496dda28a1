use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::GeometricConstants;
use crate::model::HamiltonianSpec;

/// Order-one constants the analytic bounds leave unspecified. `None` picks
/// the value wired by the derivation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeConstants {
    /// Additive constant in the local-approximation exponent.
    pub local_approx_offset: f64,
    /// Rate constant of the main bound; defaults to the largest step size.
    pub main_rate: Option<f64>,
    /// Log-prefactor of the main bound; defaults to local-approximation offset + 4.
    pub main_log_prefactor: Option<f64>,
    /// Lower end of the admissible light-cone factor; defaults to the
    /// smallest value for which the radius derivation closes.
    pub lightcone_factor_floor: Option<f64>,
    pub clustering_prefactor: f64,
    pub clustering_rate: f64,
    /// Multiplier of (1/gap) log^3(1/gap) in the clustering validity range.
    pub clustering_threshold: f64,
    pub quench_rate: Option<f64>,
    pub quench_log_prefactor: Option<f64>,
    /// Constant in the exponent of the simulation cost.
    pub cost_exponent: f64,
}

impl Default for FreeConstants {
    fn default() -> Self {
        FreeConstants {
            local_approx_offset: 1.0,
            main_rate: None,
            main_log_prefactor: None,
            lightcone_factor_floor: None,
            clustering_prefactor: 1.0,
            clustering_rate: 1.0,
            clustering_threshold: 1.0,
            quench_rate: None,
            quench_log_prefactor: None,
            cost_exponent: 1.0,
        }
    }
}

/// Model, state and geometry parameters entering the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Exponential-moment rate of the low-density condition.
    pub c0: f64,
    /// Typical density of the low-density condition.
    pub qbar: f64,
    /// Bosons created by the initial local operator.
    pub q0: f64,
    /// Time window of the moment bounds.
    pub t0: f64,
    pub j_bar: f64,
    pub degree: f64,
    pub gamma: f64,
    pub lambda0: f64,
    pub dimension: f64,
    /// Interaction range.
    pub locality: f64,
    /// Operator norm of the initial local operator.
    pub zeta0: f64,
    /// Truncation density ratio q / l0.
    pub eta: f64,
    pub free: FreeConstants,
}

impl BoundInputs {
    /// Inputs taken from a model and its lattice, with unit defaults for the
    /// state-dependent parameters.
    pub fn from_model(spec: &HamiltonianSpec, geo: &GeometricConstants) -> Self {
        BoundInputs {
            c0: 1.0,
            qbar: 1.0,
            q0: 0.0,
            t0: 0.1,
            j_bar: spec.j_bar(),
            degree: geo.degree as f64,
            gamma: geo.gamma,
            lambda0: geo.lambda0,
            dimension: geo.dimension as f64,
            locality: spec.locality() as f64,
            zeta0: 1.0,
            eta: 1.0,
            free: FreeConstants::default(),
        }
    }
}

/// Inputs plus every derived constant, resolved once.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub inputs: BoundInputs,
    pub c1: f64,
    pub c1pp: f64,
    pub c3: f64,
    pub c3p: f64,
    pub delta_t0: f64,
}

impl BoundConstants {
    pub fn resolve(inputs: BoundInputs) -> Result<Self> {
        let i = &inputs;
        let positive = [
            ("c0", i.c0),
            ("t0", i.t0),
            ("gamma", i.gamma),
            ("lambda0", i.lambda0),
            ("dimension", i.dimension),
            ("locality", i.locality),
            ("zeta0", i.zeta0),
            ("eta", i.eta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("qbar", i.qbar), ("q0", i.q0), ("j_bar", i.j_bar), ("degree", i.degree)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let jdt = i.j_bar * i.degree * i.t0;
        let c1 = (8.0 * jdt).exp() / i.c0;
        let c1pp = 80.0 * i.lambda0 / i.c0 * (4.0 * jdt + i.c0).exp();
        let twok_d = (2.0 * i.locality).powf(i.dimension);
        let c3 = 4.0 * i.j_bar * i.eta * i.gamma * twok_d * i.degree;
        let c3p = 16.0 * std::f64::consts::E * i.locality * c3 * i.gamma * twok_d;
        let delta_t0 = if c3p > 0.0 { 1.0 / (std::f64::consts::E * c3p) } else { f64::INFINITY };
        Ok(BoundConstants { inputs, c1, c1pp, c3, c3p, delta_t0 })
    }

    /// Region-size dependent prefactor of the moment bound.
    pub fn c1p(&self, size_x: usize) -> f64 {
        let i = &self.inputs;
        320.0 / i.c0.powi(3)
            * (4.0 * i.j_bar * i.degree * i.t0 + i.c0 * (1.0 + i.q0 / size_x.max(1) as f64)).exp()
    }

    /// Lower slope of the moment order chosen against distance, in units of
    /// d / log r.
    pub fn order_slope_low(&self) -> f64 {
        let i = &self.inputs;
        1.0 / (4.0 * (i.dimension + i.gamma.ln() / 3f64.ln()))
    }

    /// Upper slope of the same choice.
    pub fn order_slope_high(&self) -> f64 {
        1.0 / (2.0 * self.inputs.dimension)
    }

    /// c1 times the upper slope: base scale of the tail bounds.
    pub fn tail_scale(&self) -> f64 {
        self.c1 * self.order_slope_high()
    }

    pub fn main_rate(&self) -> f64 {
        self.inputs.free.main_rate.unwrap_or(self.delta_t0)
    }

    pub fn main_log_prefactor(&self) -> f64 {
        self.inputs.free.main_log_prefactor.unwrap_or(self.inputs.free.local_approx_offset + 4.0)
    }

    pub fn quench_rate(&self) -> f64 {
        self.inputs.free.quench_rate.unwrap_or(self.delta_t0)
    }

    pub fn quench_log_prefactor(&self) -> f64 {
        self.inputs.free.quench_log_prefactor.unwrap_or(self.inputs.free.local_approx_offset + 4.0)
    }
}
