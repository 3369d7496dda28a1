//! Config-driven experiments: parse a TOML scenario, run its cells on a
//! thread pool and emit CSV/JSON reports plus a run manifest.

mod config;
mod kinds;
mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{
    BasisConfig, ConstantsConfig, Format, HoppingConfig, InteractionConfig, LatticeConfig, ModelConfig,
    OperatorConfig, OperatorName, OutputConfig, QuenchTermConfig, ScenarioConfig, ScenarioKind, StateConfig,
};
pub use report::{Param, Report, ReportRow};

use crate::bounds::{BoundConstants, BoundInputs};
use crate::error::{Error, Result};
use crate::evolve::{StateVector, DEFAULT_DENSE_CAP};
use crate::fock::{FockBasis, DEFAULT_BASIS_CAP};
use crate::lattice::{GeometricConstants, LatticeGraph, LatticeKind, Region};
use crate::linalg::{spectral_norm, CMatrix, HermitianEigen, C64};
use crate::model::{
    assemble_hamiltonian, creation_degree, local_operator, HamiltonianSpec, Hopping, Interaction, LocalOperatorKind,
    OperatorMatrix,
};
use crate::probes::{ground_state, EigenOptions};

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub dense_cap: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConstants {
    pub gamma: f64,
    pub lambda0: f64,
    pub c1: f64,
    /// c1' for the support of the scenario operator.
    pub c1p: f64,
    pub c1pp: f64,
    pub c3: f64,
    pub c3p: f64,
    pub delta_t0: f64,
    pub eta: f64,
    pub inputs: BoundInputs,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub seed: u64,
    pub threads: usize,
    pub dense_cap: usize,
    pub sites: usize,
    pub basis_dim: usize,
    pub geometry: GeometricConstants,
    pub constants: ResolvedConstants,
    /// Extra resolved quantities of the scenario, e.g. a solved truncation.
    pub extras: serde_json::Map<String, serde_json::Value>,
    pub rows: usize,
    pub failed: usize,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub manifest: Manifest,
    pub output: OutputConfig,
}

impl RunOutcome {
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        self.report.csv_bytes()
    }

    pub fn json_string(&self) -> Result<String> {
        self.report.json_string()
    }

    /// Rows whose inequality failed.
    pub fn failed(&self) -> usize {
        self.report.failed()
    }

    /// Write the requested formats and the manifest into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.output.name.clone().unwrap_or_else(|| self.manifest.scenario.clone());
        let mut written = Vec::new();
        for f in &self.output.formats {
            let path = match f {
                Format::Csv => {
                    let p = dir.join(format!("{stem}.csv"));
                    self.report.write_csv(&p)?;
                    p
                }
                Format::Json => {
                    let p = dir.join(format!("{stem}.json"));
                    self.report.write_json(&p)?;
                    p
                }
            };
            written.push(path);
        }
        let p = dir.join(format!("{stem}.manifest.json"));
        std::fs::write(&p, serde_json::to_string_pretty(&self.manifest)?)?;
        written.push(p);
        Ok(written)
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Run a config given as text; nothing is written.
pub fn run_config_str(text: &str, opts: &RunOptions) -> Result<RunOutcome> {
    run_config(parse_config(text)?, opts)
}

/// Run a config file and write its reports to `--out`, the configured
/// directory, or the current directory.
pub fn run_config_file(path: &Path, opts: &RunOptions) -> Result<(RunOutcome, Vec<PathBuf>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let outcome = run_config_str(&text, opts)?;
    let dir = opts
        .out
        .clone()
        .or_else(|| outcome.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let written = outcome.write(&dir)?;
    Ok((outcome, written))
}

pub fn run_config(cfg: ScenarioConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let dense_cap = opts.dense_cap.unwrap_or(DEFAULT_DENSE_CAP);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    let mut ctx = Context::build(&cfg, seed, dense_cap)?;
    let out = pool.install(|| kinds::run(&mut ctx, &cfg.scenario))?;
    let c = &out.constants;
    let geometry = GeometricConstants::of(&ctx.graph);
    let constants = ResolvedConstants {
        gamma: c.inputs.gamma,
        lambda0: c.inputs.lambda0,
        c1: c.c1,
        c1p: c.c1p(out.support_size),
        c1pp: c.c1pp,
        c3: c.c3,
        c3p: c.c3p,
        delta_t0: c.delta_t0,
        eta: c.inputs.eta,
        inputs: c.inputs,
    };
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let manifest = Manifest {
        scenario: cfg.scenario.name().to_string(),
        timestamp,
        seed,
        threads,
        dense_cap,
        sites: ctx.graph.n_sites(),
        basis_dim: ctx.basis.dim(),
        geometry,
        constants,
        extras: out.extras,
        rows: out.report.rows.len(),
        failed: out.report.failed(),
        config: cfg.clone(),
    };
    Ok(RunOutcome { report: out.report, manifest, output: cfg.output })
}

/// Lattice, basis, model and seeded randomness shared by the scenario kinds.
pub(crate) struct Context {
    pub graph: Arc<LatticeGraph>,
    pub basis: Arc<FockBasis>,
    pub spec: HamiltonianSpec,
    pub constants: crate::scenario::ConstantsConfig,
    pub rng: ChaCha8Rng,
    pub seed: u64,
    pub dense_cap: usize,
    hamiltonian: Option<OperatorMatrix>,
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl Context {
    fn build(cfg: &ScenarioConfig, seed: u64, dense_cap: usize) -> Result<Self> {
        let graph = Arc::new(build_lattice(&cfg.lattice)?);
        let n = graph.n_sites();
        let b = &cfg.basis;
        let cutoffs = match (b.cutoff, &b.cutoffs) {
            (Some(c), None) => vec![c; n],
            (None, Some(v)) if v.len() == n => v.clone(),
            (None, Some(v)) => {
                return Err(config_err("basis.cutoffs", format!("{} entries for {n} sites", v.len())))
            }
            _ => return Err(config_err("basis", "give exactly one of cutoff and cutoffs")),
        };
        if let Some(s) = b.sector {
            let room: usize = cutoffs.iter().map(|&c| c as usize).sum();
            if s > room {
                return Err(config_err("basis.sector", format!("{s} bosons exceed the total cutoff {room}")));
            }
        }
        let basis = FockBasis::new(graph.clone(), cutoffs, b.sector, b.cap.unwrap_or(DEFAULT_BASIS_CAP))?;
        let spec = build_model(&graph, &cfg.model)?;
        Ok(Context {
            graph,
            basis,
            spec,
            constants: cfg.constants.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            dense_cap,
            hamiltonian: None,
        })
    }

    pub fn hamiltonian(&mut self) -> Result<OperatorMatrix> {
        if self.hamiltonian.is_none() {
            self.hamiltonian = Some(assemble_hamiltonian(&self.spec, &self.basis)?);
        }
        Ok(self.hamiltonian.clone().expect("assembled above"))
    }

    pub fn check_site(&self, field: &str, site: usize) -> Result<()> {
        let n = self.graph.n_sites();
        if site >= n {
            return Err(config_err(field, format!("site {site} outside lattice of {n} sites")));
        }
        Ok(())
    }

    pub fn sites_or_all(&self, field: &str, sites: &Option<Vec<usize>>) -> Result<Vec<usize>> {
        match sites {
            Some(v) => {
                for &s in v {
                    self.check_site(field, s)?;
                }
                Ok(v.clone())
            }
            None => Ok((0..self.graph.n_sites()).collect()),
        }
    }

    /// Operator and its support region.
    pub fn operator(&mut self, cfg: &OperatorConfig, default_site: usize) -> Result<(OperatorMatrix, Region)> {
        let site = cfg.site.unwrap_or(default_site);
        self.check_site("operator.site", site)?;
        let region = match &cfg.sites {
            Some(v) => {
                for &s in v {
                    self.check_site("operator.sites", s)?;
                }
                Region::new(v.clone())
            }
            None => Region::single(site),
        };
        let value = || cfg.value.ok_or_else(|| config_err("operator.value", "projectors need a value"));
        let kind = match cfg.kind {
            OperatorName::Number => LocalOperatorKind::Number { site },
            OperatorName::Creation => LocalOperatorKind::Creation { site },
            OperatorName::Annihilation => LocalOperatorKind::Annihilation { site },
            OperatorName::ProjectorEq => LocalOperatorKind::ProjectorEq { region: region.clone(), value: value()? },
            OperatorName::ProjectorGe => LocalOperatorKind::ProjectorGe { region: region.clone(), value: value()? },
            OperatorName::Phase => LocalOperatorKind::Phase { site, angle: cfg.angle.unwrap_or(1.0) },
            OperatorName::RandomUnitary => LocalOperatorKind::Custom {
                region: Region::single(site),
                matrix: self.random_unitary(self.basis.cutoffs()[site] as usize + 1),
                unitary: true,
            },
        };
        let region = match cfg.kind {
            OperatorName::ProjectorEq | OperatorName::ProjectorGe => region,
            _ => Region::single(site),
        };
        Ok((local_operator(&self.basis, &kind)?, region))
    }

    /// exp(-i A) for a random Hermitian A; diagonal in the occupation when the
    /// basis fixes the particle number, so the sector is preserved.
    fn random_unitary(&mut self, d: usize) -> CMatrix {
        if self.basis.sector().is_some() {
            let phases: Vec<C64> =
                (0..d).map(|_| C64::from_polar(1.0, self.rng.gen_range(0.0..std::f64::consts::TAU))).collect();
            return CMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases));
        }
        let rng = &mut self.rng;
        let m = CMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let a = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        HermitianEigen::new(&a).expect("symmetrized matrix is Hermitian").propagator(1.0)
    }

    pub fn state(&mut self, cfg: &StateConfig) -> Result<StateVector> {
        match cfg {
            StateConfig::Mott { filling } => {
                StateVector::from_occupation(&self.basis, &vec![*filling; self.graph.n_sites()])
                    .map_err(|e| config_err("state", e))
            }
            StateConfig::Occupation { occupation } => {
                StateVector::from_occupation(&self.basis, occupation).map_err(|e| config_err("state", e))
            }
            StateConfig::Ground => {
                let h = self.hamiltonian()?;
                let opts = EigenOptions { seed: self.seed, ..Default::default() };
                Ok(ground_state(&h, &opts)?.state)
            }
        }
    }

    /// Operator norm; read off the diagonal when there is one.
    pub fn operator_norm(&self, o: &OperatorMatrix) -> Result<f64> {
        if o.is_diagonal() {
            return Ok(o.diagonal().iter().fold(0.0, |m, z| m.max(z.norm())));
        }
        Ok(spectral_norm(&o.to_dense(self.dense_cap)?))
    }

    /// Bound constants with overrides; zeta0 and q0 default to the operator
    /// norm and creation degree when an operator is given.
    pub fn bound_constants(&self, op: Option<(&OperatorMatrix, &Region)>) -> Result<BoundConstants> {
        let geo = GeometricConstants::of(&self.graph);
        let mut i = BoundInputs::from_model(&self.spec, &geo);
        if let Some((o, x)) = op {
            i.zeta0 = self.operator_norm(o)?.max(f64::MIN_POSITIVE);
            i.q0 = creation_degree(o, x)?.q0 as f64;
        }
        let c = &self.constants;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut i.c0, c.c0);
        set(&mut i.qbar, c.qbar);
        set(&mut i.q0, c.q0);
        set(&mut i.t0, c.t0);
        set(&mut i.j_bar, c.j_bar);
        set(&mut i.gamma, c.gamma);
        set(&mut i.lambda0, c.lambda0);
        set(&mut i.zeta0, c.zeta0);
        set(&mut i.eta, c.eta);
        if let Some(f) = c.free {
            i.free = f;
        }
        BoundConstants::resolve(i).map_err(|e| config_err("constants", e))
    }
}

fn build_lattice(cfg: &LatticeConfig) -> Result<LatticeGraph> {
    match cfg.kind {
        LatticeKind::Custom => {
            let n = cfg.sites.ok_or_else(|| config_err("lattice.sites", "custom lattices need a site count"))?;
            LatticeGraph::custom(n, &cfg.edges, cfg.dimension.unwrap_or(1)).map_err(|e| config_err("lattice", e))
        }
        _ => {
            if !cfg.edges.is_empty() || cfg.sites.is_some() || cfg.dimension.is_some() {
                return Err(config_err("lattice", "edges, sites and dimension apply to custom lattices only"));
            }
            LatticeGraph::build(cfg.kind, &cfg.dims).map_err(|e| config_err("lattice.dims", e))
        }
    }
}

fn build_model(g: &Arc<LatticeGraph>, cfg: &ModelConfig) -> Result<HamiltonianSpec> {
    let mut hoppings: Vec<Hopping> = Vec::new();
    if let Some(j) = cfg.j {
        hoppings.extend(g.edges().iter().map(|&(a, b)| Hopping { i: a, j: b, amplitude: j }));
    }
    for h in &cfg.hoppings {
        hoppings.push(Hopping { i: h.i, j: h.j, amplitude: h.amplitude });
    }
    let u = cfg.u.unwrap_or(0.0);
    let mu = cfg.mu.unwrap_or(0.0);
    let mut interactions: Vec<Interaction> = (0..g.n_sites())
        .map(|i| Interaction::onsite(i, &[0.0, -u / 2.0 - mu, u / 2.0]))
        .filter(|v| !v.terms().is_empty())
        .collect();
    for (k, v) in cfg.interactions.iter().enumerate() {
        interactions.push(
            Interaction::new(v.sites.clone(), v.terms.clone())
                .map_err(|e| config_err(&format!("model.interactions[{k}]"), e))?,
        );
    }
    HamiltonianSpec::new(g.clone(), hoppings, interactions).map_err(|e| config_err("model", e))
}
