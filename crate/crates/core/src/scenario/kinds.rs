use num::ToPrimitive;
use rayon::prelude::*;
use serde_json::json;

use super::config::{OperatorConfig, QuenchTermConfig, ScenarioKind, StateConfig};
use super::report::{Report, ReportRow};
use super::{config_err, Context};
use crate::approx::{
    approximate_heisenberg, local_step_unitary, run_quench, ApproxPlan, QuenchPlan, Reference,
};
use crate::bounds::fs::{eval_poly, fs_bracket_check, fs_polynomial};
use crate::bounds::{
    adjacency_exp_bound, clustering_bound, lightcone_radius, main_lr_bound, moment_bound, short_lr_bound,
    solve_eta, tail_bound, truncation_error_bound, BoundConstants, TailMode, ValidityCondition,
};
use crate::error::{Error, Result};
use crate::evolve::{evolve_state, KrylovOptions, Spectral, StateVector};
use crate::fock::{DiagonalOperator, TruncationScheme};
use crate::lattice::Region;
use crate::linalg::{spectral_norm, vec_diff_norm};
use crate::model::{effective_hamiltonian, OperatorMatrix};
use crate::probes::{
    connected_correlation, ground_state, heisenberg_apply, moment, propagation_difference, tail_probability,
    EigenOptions,
};

/// Step length used when a sweep does not set one; the proven window of
/// the constants is usually far too small to simulate.
const DEFAULT_STEP: f64 = 0.1;

pub(crate) struct KindOutput {
    pub report: Report,
    pub constants: BoundConstants,
    pub support_size: usize,
    pub extras: serde_json::Map<String, serde_json::Value>,
}

impl KindOutput {
    fn new(report: Report, constants: BoundConstants, support_size: usize) -> Self {
        KindOutput { report, constants, support_size, extras: serde_json::Map::new() }
    }
}

/// Pass flag of a bound that only counts when its conditions hold.
fn applicable(valid: bool, holds: bool) -> Option<bool> {
    valid.then_some(holds)
}

fn check_times(field: &str, times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(config_err(field, "times must be finite and nonnegative"));
    }
    Ok(())
}

fn distance(ctx: &Context, i: usize, x: &Region) -> usize {
    ctx.graph.dist_to(i, x).expect("nonempty region") as usize
}

pub(crate) fn run(ctx: &mut Context, kind: &ScenarioKind) -> Result<KindOutput> {
    let name = kind.name();
    match kind {
        ScenarioKind::LightconeMap { times, operator, probe, site, sites } => {
            check_times("scenario.times", times)?;
            let (o, x) = ctx.operator(operator.as_ref().unwrap_or(&OperatorConfig::number()), *site)?;
            let sites = ctx.sites_or_all("scenario.sites", sites)?;
            let probe_cfg = probe.clone().unwrap_or_else(OperatorConfig::number);
            let mut probes = Vec::with_capacity(sites.len());
            for &i in &sites {
                let cfg = OperatorConfig { site: Some(i), sites: None, ..probe_cfg.clone() };
                probes.push(ctx.operator(&cfg, i)?.0.to_dense(ctx.dense_cap)?);
            }
            let c = ctx.bound_constants(Some((&o, &x)))?;
            let spectral = Spectral::new(&ctx.hamiltonian()?, ctx.dense_cap)?;
            let per_time: Vec<Vec<f64>> = times
                .par_iter()
                .map(|&t| {
                    let ot = spectral.heisenberg(&o, t)?.dense();
                    Ok(probes.iter().map(|p| spectral_norm(&(&ot * p - p * &ot))).collect())
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for (k, &i) in sites.iter().enumerate() {
                for (ti, &t) in times.iter().enumerate() {
                    rows.push(
                        ReportRow::new(name)
                            .param("i", i)
                            .param("t", t)
                            .param("distance", distance(ctx, i, &x))
                            .measured("commutator_norm", per_time[ti][k]),
                    );
                }
            }
            let report = Report::new(&["scenario", "i", "t", "distance", "commutator_norm"], rows)?;
            Ok(KindOutput::new(report, c, x.len()))
        }

        ScenarioKind::MomentCheck { times, operator, state, site, orders, sites } => {
            check_times("scenario.times", times)?;
            let op_cfg = operator.clone().unwrap_or_else(|| OperatorConfig::projector(1));
            let (o, x) = ctx.operator(&op_cfg, *site)?;
            let psi0 = ctx.state(state.as_ref().unwrap_or(&StateConfig::Mott { filling: 1 }))?;
            let sites = ctx.sites_or_all("scenario.sites", sites)?;
            let orders = orders.clone().unwrap_or_else(|| vec![1, 2, 3]);
            if orders.contains(&0) {
                return Err(config_err("scenario.orders", "moment orders start at 1"));
            }
            let c = ctx.bound_constants(Some((&o, &x)))?;
            let evolved = evolve_perturbed(ctx, &o, &psi0, times)?;
            let mut rows = Vec::new();
            for &i in &sites {
                let d = distance(ctx, i, &x) as f64;
                for &s in &orders {
                    for (ti, &t) in times.iter().enumerate() {
                        let m = moment(&evolved[ti], i, s)?;
                        let b = moment_bound(s, x.len(), d, t, &c)?;
                        rows.push(
                            ReportRow::new(name)
                                .param("i", i)
                                .param("s", s)
                                .param("t", t)
                                .measured("M_probe", m)
                                .bound_report("M_bound", "log_M_bound", &b)
                                .pass(applicable(b.valid(), b.dominates(m))),
                        );
                    }
                }
            }
            let header = ["scenario", "i", "s", "t", "M_probe", "M_bound", "log_M_bound", "pass"];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, x.len()))
        }

        ScenarioKind::TailCheck { times, operator, state, site, thresholds, sites, mode, r } => {
            check_times("scenario.times", times)?;
            let op_cfg = operator.clone().unwrap_or_else(|| OperatorConfig::projector(1));
            let (o, x) = ctx.operator(&op_cfg, *site)?;
            let psi0 = ctx.state(state.as_ref().unwrap_or(&StateConfig::Mott { filling: 1 }))?;
            let sites = ctx.sites_or_all("scenario.sites", sites)?;
            let thresholds =
                thresholds.clone().unwrap_or_else(|| (1..=ctx.basis.max_cutoff() as usize).collect());
            let mode = mode.unwrap_or(TailMode::MarkovOptimized);
            let c = ctx.bound_constants(Some((&o, &x)))?;
            let evolved = evolve_perturbed(ctx, &o, &psi0, times)?;
            let mut rows = Vec::new();
            for &i in &sites {
                let d = distance(ctx, i, &x) as f64;
                for &z0 in &thresholds {
                    for (ti, &t) in times.iter().enumerate() {
                        let p = tail_probability(&evolved[ti], i, z0)?;
                        let b = tail_bound(z0, d, x.len(), *r, t, mode, &c)?;
                        rows.push(
                            ReportRow::new(name)
                                .param("i", i)
                                .param("z0", z0)
                                .param("t", t)
                                .measured("P_probe", p)
                                .bound_report("P_bound", "log_P_bound", &b)
                                .pass(applicable(b.valid(), b.dominates(p))),
                        );
                    }
                }
            }
            let header = ["scenario", "i", "z0", "t", "P_probe", "P_bound", "log_P_bound", "pass"];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, x.len()))
        }

        ScenarioKind::TruncationCheck { t, operator, state, site, buffer, truncations, r } => {
            check_times("scenario.t", &[*t])?;
            let op_cfg = operator.clone().unwrap_or_else(|| OperatorConfig::projector(1));
            let (o, x) = ctx.operator(&op_cfg, *site)?;
            let psi0 = ctx.state(state.as_ref().unwrap_or(&StateConfig::Mott { filling: 1 }))?;
            let shell = ctx.graph.ball(&x, 2 * buffer).difference(&ctx.graph.ball(&x, *buffer));
            if shell.is_empty() {
                return Err(config_err("scenario.buffer", "the shell X[2 l0] \\ X[l0] is empty on this lattice"));
            }
            let qs = truncations.clone().unwrap_or_else(|| (1..=ctx.basis.max_cutoff() as usize).collect());
            if qs.contains(&0) {
                return Err(config_err("scenario.truncations", "truncations start at 1"));
            }
            let c = ctx.bound_constants(Some((&o, &x)))?;
            let h = ctx.hamiltonian()?;
            let phi = psi0.apply(&o)?;
            let ell0 = *buffer as f64;
            let errors: Vec<f64> = qs
                .par_iter()
                .map(|&q| {
                    let ht = effective_hamiltonian(&ctx.spec, &ctx.basis, &TruncationScheme::single(shell.clone(), q))?;
                    propagation_difference(&h, &ht, phi.amps(), *t, &KrylovOptions::default())
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for (&q, &e) in qs.iter().zip(&errors) {
                let b = truncation_error_bound(q, shell.len(), ell0, *r, x.len(), &c)?;
                rows.push(
                    ReportRow::new(name)
                        .param("q", q)
                        .param("t", *t)
                        .param("buffer", *buffer)
                        .param("shell_size", shell.len())
                        .measured("error", e)
                        .bound_report("bound", "log_bound", &b)
                        .pass(applicable(b.valid(), b.dominates(e))),
                );
            }
            let header =
                ["scenario", "q", "t", "buffer", "shell_size", "error", "bound", "log_bound", "pass"];
            let mut out = KindOutput::new(Report::new(&header, rows)?, c, x.len());
            out.extras.insert("eta_solution".into(), eta_extra(ell0, *r, shell.len(), &c));
            Ok(out)
        }

        ScenarioKind::ShortLrCheck { times, operator, state, site, buffers, truncation } => {
            check_times("scenario.times", times)?;
            let op_cfg = operator.clone().unwrap_or_else(|| OperatorConfig::projector(1));
            let (o, x) = ctx.operator(&op_cfg, *site)?;
            let psi0 = ctx.state(state.as_ref().unwrap_or(&StateConfig::Mott { filling: 1 }))?;
            let c = ctx.bound_constants(Some((&o, &x)))?;
            let h = ctx.hamiltonian()?;
            let boundary = ctx.graph.boundary(&x).len();
            let cells: Vec<(usize, f64)> =
                buffers.iter().flat_map(|&b| times.iter().map(move |&t| (b, t))).collect();
            let errors: Vec<f64> = cells
                .par_iter()
                .map(|&(buffer, t)| {
                    let step = local_step_unitary(&ctx.spec, &ctx.basis, &x, buffer as f64, *truncation, t)?;
                    let g = &step.factors()[0].0;
                    let full = match truncation {
                        Some(q) => effective_hamiltonian(
                            &ctx.spec,
                            &ctx.basis,
                            &TruncationScheme::single(step.regions.shell.clone(), *q),
                        )?,
                        None => h.clone(),
                    };
                    let opts = KrylovOptions::default();
                    let a = heisenberg_apply(&full, &o, psi0.amps(), t, &opts)?;
                    let b = heisenberg_apply(g, &o, psi0.amps(), t, &opts)?;
                    Ok(vec_diff_norm(&a, &b))
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for (&(buffer, t), &e) in cells.iter().zip(&errors) {
                let row = ReportRow::new(name).param("buffer", buffer).param("t", t).measured("error", e);
                rows.push(match short_lr_bound(buffer as f64, boundary, t, &c) {
                    Ok(b) => {
                        let pass = applicable(b.valid(), b.dominates(e));
                        row.bound_report("bound", "log_bound", &b).pass(pass)
                    }
                    Err(Error::Precondition(_)) => {
                        let mut row = row.bound("bound", None).bound("log_bound", None);
                        row.validity.push(ValidityCondition { name: "t <= delta_t0".into(), satisfied: false });
                        row
                    }
                    Err(e) => return Err(e),
                });
            }
            let header = ["scenario", "buffer", "t", "error", "bound", "log_bound", "pass"];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, x.len()))
        }

        ScenarioKind::ApproxSweep { t, radii, operator, state, site, r0, step, truncation } => {
            check_times("scenario.t", &[*t])?;
            let (o, x) = ctx.operator(operator.as_ref().unwrap_or(&OperatorConfig::number()), *site)?;
            let psi0 = ctx.state(state.as_ref().unwrap_or(&StateConfig::Ground))?;
            let c = ctx.bound_constants(Some((&o, &x)))?;
            let h = ctx.hamiltonian()?;
            let dense_cap = ctx.dense_cap;
            let results: Vec<_> = radii
                .par_iter()
                .map(|&big_r| {
                    let mut plan = ApproxPlan::new(*site, *r0, big_r, *t, &c);
                    plan.delta_t0 = step.unwrap_or(DEFAULT_STEP);
                    plan.q = *truncation;
                    plan.dense_cap = dense_cap;
                    let reference = Reference { hamiltonian: &h, state: &psi0, krylov: KrylovOptions::default() };
                    approximate_heisenberg(&o, &ctx.spec, &ctx.basis, &plan, Some(reference), &c)
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for (&big_r, res) in radii.iter().zip(&results) {
                let err = res.restricted_error.expect("reference given");
                let sum = res.step_error_sum.expect("reference given");
                let b = main_lr_bound(big_r as f64, *r0 as f64, *t, &c)?;
                let telescoping = err <= sum + 1e-8;
                let bound_ok = applicable(b.valid(), b.dominates(err)).unwrap_or(true);
                let mut row = ReportRow::new(name)
                    .param("R", big_r)
                    .param("m_t", res.schedule.m_t)
                    .param("dt", res.schedule.dt)
                    .param("support_size", res.support.len())
                    .measured("restricted_error", err)
                    .measured("step_error_sum", sum)
                    .measured("norm_defect", res.norm_defect)
                    .bound_report("main_bound", "log_main_bound", &b)
                    .pass(Some(telescoping && bound_ok));
                row.validity.extend(res.validity.iter().cloned());
                rows.push(row);
            }
            let header = [
                "scenario",
                "R",
                "m_t",
                "dt",
                "support_size",
                "restricted_error",
                "step_error_sum",
                "norm_defect",
                "main_bound",
                "log_main_bound",
                "pass",
            ];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, x.len()))
        }

        ScenarioKind::QuenchSim { t, radii, site, r0, term, step, truncation, inner_truncation, target_error } => {
            check_times("scenario.t", &[*t])?;
            let term = term.clone().unwrap_or(QuenchTermConfig { site: None, coef: 0.5, power: 2 });
            let q_site = term.site.unwrap_or(*site);
            ctx.check_site("scenario.term.site", q_site)?;
            let (coef, power) = (term.coef, term.power as i32);
            let h_x0 = OperatorMatrix::from_diagonal(&DiagonalOperator::site_function(&ctx.basis, q_site, |n| {
                coef * n.powi(power)
            })?);
            let x = Region::single(q_site);
            let c = ctx.bound_constants(None)?;
            let psi0 = ctx.state(&StateConfig::Ground)?;
            let outcomes: Vec<_> = radii
                .par_iter()
                .map(|&big_r| {
                    let mut plan = QuenchPlan::new(*site, *r0, big_r, *t, &c);
                    plan.delta_t0 = step.unwrap_or(DEFAULT_STEP);
                    plan.q = *truncation;
                    plan.q_prime = *inner_truncation;
                    plan.target_error = *target_error;
                    run_quench(&ctx.spec, &h_x0, &psi0, &plan, &c)
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for (&big_r, out) in radii.iter().zip(&outcomes) {
                let mut row = ReportRow::new(name)
                    .param("R", big_r)
                    .param("m_t", out.schedule.m_t)
                    .param("dt", out.schedule.dt)
                    .param("cost", out.cost)
                    .measured("error", out.error)
                    .measured("max_number_defect", out.max_number_defect);
                row = match &out.bounds {
                    Some(b) => {
                        let pass = applicable(b.error.valid(), b.error.dominates(out.error));
                        row.bound_report("bound", "log_bound", &b.error).pass(pass)
                    }
                    None => row.bound("bound", None).bound("log_bound", None),
                };
                row.validity.extend(out.validity.iter().cloned());
                rows.push(row);
            }
            let header = [
                "scenario",
                "R",
                "m_t",
                "dt",
                "cost",
                "error",
                "max_number_defect",
                "bound",
                "log_bound",
                "pass",
            ];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, x.len()))
        }

        ScenarioKind::Clustering { operator, pairs } => {
            let op_cfg = operator.clone().unwrap_or_else(OperatorConfig::number);
            let n = ctx.graph.n_sites();
            let pairs = match pairs {
                Some(p) => {
                    for &(i, j) in p {
                        ctx.check_site("scenario.pairs", i)?;
                        ctx.check_site("scenario.pairs", j)?;
                    }
                    p.clone()
                }
                None => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            };
            let mut ops = Vec::with_capacity(n);
            for i in 0..n {
                let cfg = OperatorConfig { site: Some(i), sites: None, ..op_cfg.clone() };
                ops.push(ctx.operator(&cfg, i)?.0);
            }
            let norms: Vec<f64> = ops
                .iter()
                .map(|o| ctx.operator_norm(o))
                .collect::<Result<_>>()?;
            let c = ctx.bound_constants(None)?;
            let h = ctx.hamiltonian()?;
            let gs = ground_state(&h, &EigenOptions { seed: ctx.seed, ..Default::default() })?;
            let mut rows = Vec::new();
            for &(i, j) in &pairs {
                let d = ctx.graph.dist(i, j) as usize;
                let cor = connected_correlation(&gs.state, &ops[i], &ops[j])?.norm();
                let row = ReportRow::new(name)
                    .param("i", i)
                    .param("j", j)
                    .param("d", d)
                    .measured("correlation", cor)
                    .measured("gap", gs.gap);
                rows.push(match clustering_bound(d as f64, gs.gap, norms[i], norms[j], &c) {
                    Ok(b) => row.bound_report("bound", "log_bound", &b),
                    Err(_) => row.bound("bound", None).bound("log_bound", None),
                });
            }
            let header = ["scenario", "i", "j", "d", "correlation", "gap", "bound", "log_bound"];
            let mut out = KindOutput::new(Report::new(&header, rows)?, c, 1);
            out.extras.insert("ground_energy".into(), json!(gs.energy));
            out.extras.insert("ground_residual".into(), json!(gs.residual));
            out.extras.insert("degenerate".into(), json!(gs.degenerate));
            Ok(out)
        }

        ScenarioKind::BoundReport { times, deltas } => {
            let c = ctx.bound_constants(None)?;
            let mut rows = Vec::new();
            for &t in times {
                for &delta in deltas {
                    let lc = lightcone_radius(t, delta, &c).map_err(|e| config_err("scenario", e))?;
                    let b = main_lr_bound(lc.radius, 0.0, t, &c)?;
                    let target = delta.ln() + c.inputs.zeta0.ln();
                    rows.push(
                        ReportRow::new(name)
                            .param("t", t)
                            .param("delta", delta)
                            .measured("radius", lc.radius)
                            .measured("closed_form_radius", lc.closed_form_radius)
                            .bound("log_main_bound", b.log_value)
                            .bound("log_target", target)
                            .pass(Some(b.log_value <= target + 1e-12 * target.abs().max(1.0))),
                    );
                }
            }
            let header =
                ["scenario", "t", "delta", "radius", "closed_form_radius", "log_main_bound", "log_target", "pass"];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, 1))
        }

        ScenarioKind::FsCheck { s_max, m_max } => {
            let c = ctx.bound_constants(None)?;
            let per_s: Vec<Vec<ReportRow>> = (1..=*s_max)
                .into_par_iter()
                .map(|s| {
                    let coeffs = fs_polynomial(s)?;
                    let checks = fs_bracket_check(s, *m_max)?;
                    Ok(checks
                        .iter()
                        .map(|row| {
                            let m = row.m;
                            let f = eval_poly(&coeffs, m as i64).to_f64().unwrap_or(f64::NAN);
                            ReportRow::new(name)
                                .param("s", s)
                                .param("m", m)
                                .measured("lower", ((m - 1) as f64).powi(s as i32))
                                .measured("f_s", f)
                                .measured("upper", (m as f64).powi(s as i32))
                                .pass(Some(row.ok()))
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            let header = ["scenario", "s", "m", "lower", "f_s", "upper", "pass"];
            Ok(KindOutput::new(Report::new(&header, per_s.into_iter().flatten().collect())?, c, 1))
        }

        ScenarioKind::AdjacencyCheck { times, j_bar } => {
            check_times("scenario.times", times)?;
            let c = ctx.bound_constants(None)?;
            let j = j_bar.unwrap_or(ctx.spec.j_bar());
            let checks: Vec<_> = times.par_iter().map(|&t| adjacency_exp_bound(&ctx.graph, j, t)).collect();
            let n = ctx.graph.n_sites();
            let mut rows = Vec::new();
            for i in 0..n {
                for k in 0..n {
                    for (ti, &t) in times.iter().enumerate() {
                        let chk = &checks[ti];
                        let (e, b) = (chk.exact[(i, k)], chk.bound[(i, k)]);
                        rows.push(
                            ReportRow::new(name)
                                .param("i", i)
                                .param("j", k)
                                .param("t", t)
                                .param("d", ctx.graph.dist(i, k) as usize)
                                .measured("exact", e)
                                .bound("bound", b)
                                .pass(Some(e <= b * (1.0 + 1e-12))),
                        );
                    }
                }
            }
            let header = ["scenario", "i", "j", "t", "d", "exact", "bound", "pass"];
            Ok(KindOutput::new(Report::new(&header, rows)?, c, 1))
        }
    }
}

/// exp(-iHt) O psi0 for each time.
fn evolve_perturbed(
    ctx: &mut Context,
    o: &OperatorMatrix,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Vec<StateVector>> {
    let h = ctx.hamiltonian()?;
    let tilde = psi0.apply(o)?;
    times
        .par_iter()
        .map(|&t| Ok(evolve_state(&h, &tilde, t, &KrylovOptions::default())?.0))
        .collect()
}

fn eta_extra(ell0: f64, r: f64, shell: usize, c: &BoundConstants) -> serde_json::Value {
    match solve_eta(ell0, r, shell, c) {
        Ok(s) => json!({ "q": s.q, "eta": s.eta }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}
