use serde::{Deserialize, Serialize};

use crate::bounds::{FreeConstants, TailMode};
use crate::lattice::LatticeKind;
use crate::model::Monomial;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lattice: LatticeConfig,
    pub basis: BasisConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub constants: ConstantsConfig,
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for randomized operator choices; the command line overrides it.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub kind: LatticeKind,
    #[serde(default)]
    pub dims: Vec<usize>,
    /// Edge list of a custom graph.
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
    /// Number of sites of a custom graph.
    pub sites: Option<usize>,
    /// Spatial dimension of a custom graph.
    pub dimension: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub cutoff: Option<u8>,
    pub cutoffs: Option<Vec<u8>>,
    pub sector: Option<usize>,
    pub cap: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Bose-Hubbard hopping on every edge.
    pub j: Option<f64>,
    pub u: Option<f64>,
    pub mu: Option<f64>,
    #[serde(default)]
    pub hoppings: Vec<HoppingConfig>,
    #[serde(default)]
    pub interactions: Vec<InteractionConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingConfig {
    pub i: usize,
    pub j: usize,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    pub sites: Vec<usize>,
    pub terms: Vec<Monomial>,
}

/// Overrides of the bound inputs; anything left out is taken from the model,
/// the lattice or the scenario operator.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub c0: Option<f64>,
    pub qbar: Option<f64>,
    pub q0: Option<f64>,
    pub t0: Option<f64>,
    pub j_bar: Option<f64>,
    /// Defaults to the smallest valid value for the lattice.
    pub gamma: Option<f64>,
    pub lambda0: Option<f64>,
    pub zeta0: Option<f64>,
    pub eta: Option<f64>,
    pub free: Option<FreeConstants>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// File stem; defaults to the scenario kind.
    pub name: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, name: None, formats: default_formats() }
    }
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorName {
    Number,
    Creation,
    Annihilation,
    ProjectorEq,
    ProjectorGe,
    Phase,
    /// Seeded random unitary on one site; number conserving when the basis
    /// fixes the particle number.
    RandomUnitary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorName,
    pub site: Option<usize>,
    /// Region of a projector; defaults to `[site]`.
    pub sites: Option<Vec<usize>>,
    pub value: Option<usize>,
    pub angle: Option<f64>,
}

impl OperatorConfig {
    pub fn number() -> Self {
        OperatorConfig { kind: OperatorName::Number, site: None, sites: None, value: None, angle: None }
    }

    pub fn projector(value: usize) -> Self {
        OperatorConfig { kind: OperatorName::ProjectorEq, value: Some(value), ..Self::number() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateConfig {
    /// `filling` bosons on every site.
    Mott { filling: u8 },
    Occupation { occupation: Vec<u8> },
    Ground,
}

/// Quench term coef * n_site^power.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchTermConfig {
    pub site: Option<usize>,
    #[serde(default = "half")]
    pub coef: f64,
    #[serde(default = "two")]
    pub power: u32,
}

fn half() -> f64 {
    0.5
}

fn two() -> u32 {
    2
}

fn two_usize() -> usize {
    2
}

fn three() -> f64 {
    3.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioKind {
    LightconeMap {
        times: Vec<f64>,
        operator: Option<OperatorConfig>,
        probe: Option<OperatorConfig>,
        #[serde(default)]
        site: usize,
        sites: Option<Vec<usize>>,
    },
    MomentCheck {
        times: Vec<f64>,
        operator: Option<OperatorConfig>,
        state: Option<StateConfig>,
        #[serde(default)]
        site: usize,
        orders: Option<Vec<u32>>,
        sites: Option<Vec<usize>>,
    },
    TailCheck {
        times: Vec<f64>,
        operator: Option<OperatorConfig>,
        state: Option<StateConfig>,
        #[serde(default)]
        site: usize,
        thresholds: Option<Vec<usize>>,
        sites: Option<Vec<usize>>,
        mode: Option<TailMode>,
        /// Radius of the ball holding the operator support.
        #[serde(default = "three")]
        r: f64,
    },
    TruncationCheck {
        #[serde(default = "tenth")]
        t: f64,
        operator: Option<OperatorConfig>,
        state: Option<StateConfig>,
        #[serde(default)]
        site: usize,
        #[serde(default = "two_usize")]
        buffer: usize,
        truncations: Option<Vec<usize>>,
        #[serde(default = "three")]
        r: f64,
    },
    ShortLrCheck {
        times: Vec<f64>,
        operator: Option<OperatorConfig>,
        state: Option<StateConfig>,
        #[serde(default)]
        site: usize,
        buffers: Vec<usize>,
        truncation: Option<usize>,
    },
    ApproxSweep {
        t: f64,
        radii: Vec<usize>,
        operator: Option<OperatorConfig>,
        state: Option<StateConfig>,
        #[serde(default)]
        site: usize,
        #[serde(default)]
        r0: usize,
        step: Option<f64>,
        truncation: Option<usize>,
    },
    QuenchSim {
        t: f64,
        radii: Vec<usize>,
        #[serde(default)]
        site: usize,
        #[serde(default)]
        r0: usize,
        term: Option<QuenchTermConfig>,
        step: Option<f64>,
        truncation: Option<usize>,
        inner_truncation: Option<usize>,
        #[serde(default = "default_target")]
        target_error: f64,
    },
    Clustering {
        operator: Option<OperatorConfig>,
        pairs: Option<Vec<(usize, usize)>>,
    },
    BoundReport {
        times: Vec<f64>,
        deltas: Vec<f64>,
    },
    FsCheck {
        #[serde(default = "ten")]
        s_max: u32,
        #[serde(default = "hundred")]
        m_max: u64,
    },
    AdjacencyCheck {
        times: Vec<f64>,
        j_bar: Option<f64>,
    },
}

fn tenth() -> f64 {
    0.1
}

fn ten() -> u32 {
    10
}

fn hundred() -> u64 {
    100
}

fn default_target() -> f64 {
    1e-5
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::LightconeMap { .. } => "lightcone-map",
            ScenarioKind::MomentCheck { .. } => "moment-check",
            ScenarioKind::TailCheck { .. } => "tail-check",
            ScenarioKind::TruncationCheck { .. } => "truncation-check",
            ScenarioKind::ShortLrCheck { .. } => "short-lr-check",
            ScenarioKind::ApproxSweep { .. } => "approx-sweep",
            ScenarioKind::QuenchSim { .. } => "quench-sim",
            ScenarioKind::Clustering { .. } => "clustering",
            ScenarioKind::BoundReport { .. } => "bound-report",
            ScenarioKind::FsCheck { .. } => "fs-check",
            ScenarioKind::AdjacencyCheck { .. } => "adjacency-check",
        }
    }
}
