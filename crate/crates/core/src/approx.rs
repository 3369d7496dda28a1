//! Stepwise local-unitary approximations: the Heisenberg operator chain and
//! the local quench unitary, both built from truncated local generators.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::bounds::{quench_bounds, BoundConstants, QuenchBounds, ValidityCondition};
use crate::error::{Error, Result};
use crate::evolve::{krylov_expm, pure_state_distance, KrylovOptions, Spectral, StateVector, DEFAULT_DENSE_CAP};
use crate::fock::{DiagonalOperator, FockBasis, TruncationScheme};
use crate::lattice::{LatticeGraph, Region};
use crate::linalg::{spectral_norm, vec_diff_norm, vec_norm, CMatrix, LinearOp, C64};
use crate::model::{
    assemble_hamiltonian, assemble_selected, creation_degree, CreationDegree, HamiltonianSpec,
    OperatorMatrix, TermSelection,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepSchedule {
    pub total_t: f64,
    pub m_t: usize,
    pub dt: f64,
    pub dr: usize,
    pub r0: usize,
    pub big_r: usize,
}

impl StepSchedule {
    /// Radius of X_m around i0.
    pub fn radius(&self, m: usize) -> usize {
        self.r0 + m * self.dr
    }

    pub fn region(&self, g: &LatticeGraph, i0: usize, m: usize) -> Region {
        g.site_ball(i0, self.radius(m))
    }
}

/// Split [0, t] into m_t steps of length at most `delta_t0` with supports
/// growing by dr per step. t = 0 gives the empty schedule.
pub fn step_schedule(t: f64, big_r: usize, r0: usize, delta_t0: f64) -> Result<StepSchedule> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("time must be finite and nonnegative, got {t}")));
    }
    if !(delta_t0 > 0.0) {
        return Err(Error::Argument(format!("step window must be positive, got {delta_t0}")));
    }
    if big_r <= r0 {
        return Err(Error::Argument(format!("need R > r0, got R={big_r}, r0={r0}")));
    }
    if t == 0.0 {
        return Ok(StepSchedule { total_t: 0.0, m_t: 0, dt: 0.0, dr: big_r - r0, r0, big_r });
    }
    let mut m_t = ((t / delta_t0).ceil() as usize).max(1);
    while t / m_t as f64 > delta_t0 {
        m_t += 1;
    }
    let dr = (big_r - r0) / m_t;
    if dr < 1 {
        return Err(Error::Precondition(format!(
            "R - r0 = {} is too small for {m_t} steps; need dr >= 1",
            big_r - r0
        )));
    }
    Ok(StepSchedule { total_t: t, m_t, dt: t / m_t as f64, dr, r0, big_r })
}

/// Regions of one step around a center X with outer radius 2 l0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRegions {
    pub center: Region,
    /// L1 = X[l0]
    pub inner: Region,
    /// L~ = L2 \ L1, where the boson truncation acts.
    pub shell: Region,
    /// L2' = X[2 l0 - 2k], the hopping region.
    pub hopping: Region,
    /// L2 = X[2 l0], the support of the step unitary.
    pub support: Region,
    /// The lattice boundary cut off part of L2.
    pub clipped: bool,
}

impl StepRegions {
    pub fn new(g: &LatticeGraph, center: &Region, outer: usize, locality: usize) -> Result<Self> {
        g.check_region(center)?;
        if center.is_empty() {
            return Err(Error::Argument("step center must be nonempty".into()));
        }
        let support = g.ball(center, outer);
        let inner = g.ball(center, outer / 2);
        let hopping = g.ball(center, outer.saturating_sub(2 * locality));
        let shell = support.difference(&inner);
        let max_degree = g.degree();
        let clipped = support.len() == g.n_sites()
            || support.sites().iter().any(|&s| {
                g.neighbors(s).len() < max_degree
                    && g.dist_to(s, center).is_some_and(|d| (d as usize) < outer)
            });
        Ok(StepRegions { center: center.clone(), inner, shell, hopping, support, clipped })
    }
}

/// Product of exponentials exp(-i G_k tau_k), applied in list order, acting
/// on a local support.
#[derive(Clone, Debug)]
pub struct LocalUnitary {
    factors: Vec<(OperatorMatrix, f64)>,
    pub regions: StepRegions,
    pub ell0: f64,
    pub q: Option<usize>,
    pub q_prime: Option<usize>,
    /// Largest entry of [G_k, n_support] over the generators.
    pub number_defect: f64,
    pub validity: Vec<ValidityCondition>,
}

impl LocalUnitary {
    fn new(
        factors: Vec<(OperatorMatrix, f64)>,
        regions: StepRegions,
        ell0: f64,
        q: Option<usize>,
        q_prime: Option<usize>,
        validity: Vec<ValidityCondition>,
    ) -> Result<Self> {
        let basis = factors[0].0.basis().clone();
        let n_support = DiagonalOperator::region_number(&basis, &regions.support)?;
        let mut number_defect: f64 = 0.0;
        for (g, _) in &factors {
            let h = g.hermitian_defect();
            if h > 1e-12 * (1.0 + g.max_abs()) {
                return Err(Error::NotHermitian(h));
            }
            number_defect = number_defect.max(g.commutator_with_diagonal(&n_support));
        }
        if number_defect > 1e-10 {
            return Err(Error::Model(format!(
                "step generator changes the boson number on its support by {number_defect:.3e}"
            )));
        }
        Ok(LocalUnitary { factors, regions, ell0, q, q_prime, number_defect, validity })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        self.factors[0].0.basis()
    }

    /// Generators and times, in application order.
    pub fn factors(&self) -> &[(OperatorMatrix, f64)] {
        &self.factors
    }

    pub fn apply(&self, v: &[C64], opts: &KrylovOptions) -> Result<Vec<C64>> {
        let mut w = v.to_vec();
        for (g, tau) in &self.factors {
            w = krylov_expm(g, &w, *tau, opts)?.0;
        }
        Ok(w)
    }

    pub fn apply_adjoint(&self, v: &[C64], opts: &KrylovOptions) -> Result<Vec<C64>> {
        let mut w = v.to_vec();
        for (g, tau) in self.factors.iter().rev() {
            w = krylov_expm(g, &w, -*tau, opts)?.0;
        }
        Ok(w)
    }

    pub fn dense(&self, cap: usize) -> Result<CMatrix> {
        let n = self.basis().dim();
        let mut u = CMatrix::identity(n, n);
        for (g, tau) in &self.factors {
            u = Spectral::new(g, cap)?.propagator(*tau) * u;
        }
        Ok(u)
    }

    pub fn unitarity_defect(&self, cap: usize) -> Result<f64> {
        Ok(crate::linalg::unitarity_defect(&self.dense(cap)?))
    }

    /// Norm change and ||[U, n_support] v|| on a probe vector.
    pub fn probe_defects(&self, v: &[C64], opts: &KrylovOptions) -> Result<(f64, f64)> {
        let n = DiagonalOperator::region_number(self.basis(), &self.regions.support)?;
        let nv: Vec<C64> = v.iter().zip(n.values()).map(|(a, w)| a * *w).collect();
        let unv = self.apply(&nv, opts)?;
        let uv = self.apply(v, opts)?;
        let nuv: Vec<C64> = uv.iter().zip(n.values()).map(|(a, w)| a * *w).collect();
        Ok(((vec_norm(&uv) - vec_norm(v)).abs(), vec_diff_norm(&unv, &nuv)))
    }
}

fn truncation_scheme(regions: &StepRegions, q: Option<usize>, q_prime: Option<usize>) -> TruncationScheme {
    let mut s = TruncationScheme::none();
    if let Some(q) = q {
        if !regions.shell.is_empty() {
            s = s.with(regions.shell.clone(), q);
        }
    }
    if let Some(qp) = q_prime {
        s = s.with(regions.inner.clone(), qp);
    }
    s
}

fn step_generator(
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    regions: &StepRegions,
    scheme: &TruncationScheme,
) -> Result<OperatorMatrix> {
    assemble_selected(
        spec,
        basis,
        &TermSelection {
            hop_region: Some(regions.hopping.clone()),
            interaction_region: Some(regions.support.clone()),
            straddling: None,
            truncation: scheme.clone(),
        },
    )
}

fn step_validity(ell0: f64, dt: f64, locality: usize, proven_window: Option<f64>) -> Vec<ValidityCondition> {
    let mut v = vec![ValidityCondition { name: "l0 >= 8k".into(), satisfied: ell0 >= 8.0 * locality as f64 }];
    if let Some(w) = proven_window {
        v.push(ValidityCondition { name: "dt <= delta_t0".into(), satisfied: dt <= w });
    }
    v
}

fn outer_radius(ell0: f64) -> Result<usize> {
    if !(ell0 >= 0.0) || !ell0.is_finite() {
        return Err(Error::Argument(format!("buffer l0 must be finite and nonnegative, got {ell0}")));
    }
    Ok((2.0 * ell0).round() as usize)
}

/// exp(-i G dt) with G the hopping inside X[2 l0 - 2k] plus the interactions
/// inside X[2 l0], truncated to at most q bosons per site on X[2 l0] \ X[l0].
pub fn local_step_unitary(
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    x: &Region,
    ell0: f64,
    q: Option<usize>,
    dt: f64,
) -> Result<LocalUnitary> {
    let regions = StepRegions::new(spec.lattice(), x, outer_radius(ell0)?, spec.locality())?;
    let scheme = truncation_scheme(&regions, q, None);
    let g = step_generator(spec, basis, &regions, &scheme)?;
    let validity = step_validity(ell0, dt, spec.locality(), None);
    LocalUnitary::new(vec![(g, dt)], regions, ell0, q, None, validity)
}

/// P op P for the truncation projector P of a scheme.
fn project(op: &OperatorMatrix, scheme: &TruncationScheme) -> OperatorMatrix {
    let basis = op.basis();
    let keep: Vec<bool> = (0..basis.dim()).map(|k| scheme.admits(basis.occupation(k))).collect();
    let trip = op.triplets().into_iter().filter(|&(r, c, _)| keep[r] && keep[c]).collect();
    OperatorMatrix::from_csr(basis.clone(), crate::linalg::csr_from_triplets(basis.dim(), trip))
}

/// The two pieces of one quench step: with A = exp(-i G' dt) and
/// U2 = exp(-i G' dt) exp(i G dt), the step maps a previous unitary u to
/// A u A^dagger U2. G' adds the truncated quench term to G.
#[derive(Clone, Debug)]
pub struct QuenchStep {
    /// A
    pub outer: LocalUnitary,
    /// U2, the time-ordered exponential of A_tau h~ A_tau^dagger.
    pub interaction: LocalUnitary,
}

pub fn quench_step_unitary(
    spec: &HamiltonianSpec,
    h_x0: &OperatorMatrix,
    basis: &Arc<FockBasis>,
    x: &Region,
    ell0: f64,
    q: Option<usize>,
    q_prime: Option<usize>,
    dt: f64,
) -> Result<QuenchStep> {
    if !h_x0.basis().same_as(basis) {
        return Err(Error::BasisMismatch);
    }
    let regions = StepRegions::new(spec.lattice(), x, outer_radius(ell0)?, spec.locality())?;
    if !h_x0.lives_on(&regions.support) {
        return Err(Error::Precondition("quench term is not inside the step support".into()));
    }
    let scheme = truncation_scheme(&regions, q, q_prime);
    let g = step_generator(spec, basis, &regions, &scheme)?;
    let gq = g.add(&project(h_x0, &scheme))?;
    let validity = step_validity(ell0, dt, spec.locality(), None);
    let outer =
        LocalUnitary::new(vec![(gq.clone(), dt)], regions.clone(), ell0, q, q_prime, validity.clone())?;
    let interaction = LocalUnitary::new(vec![(g, -dt), (gq, dt)], regions, ell0, q, q_prime, validity)?;
    Ok(QuenchStep { outer, interaction })
}

/// Number of distinct occupation patterns on `x` among admitted basis states.
pub fn local_dimension(basis: &FockBasis, x: &Region, scheme: &TruncationScheme) -> usize {
    let mut seen = HashSet::new();
    for k in 0..basis.dim() {
        let occ = basis.occupation(k);
        if scheme.admits(occ) {
            seen.insert(x.sites().iter().map(|&s| occ[s]).collect::<Vec<u8>>());
        }
    }
    seen.len()
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub m: usize,
    pub support_size: usize,
    pub truncation_q: Option<usize>,
    pub step_error_if_measured: Option<f64>,
    pub cumulative_wall_time: f64,
    pub clipped: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ApproxPlan {
    pub i0: usize,
    pub r0: usize,
    pub big_r: usize,
    pub t: f64,
    /// Step length cap used to build the schedule.
    pub delta_t0: f64,
    /// Shell truncation; `None` keeps the basis cutoff.
    pub q: Option<usize>,
    pub dense_cap: usize,
}

impl ApproxPlan {
    /// Plan with the proven step window of the constants.
    pub fn new(i0: usize, r0: usize, big_r: usize, t: f64, c: &BoundConstants) -> Self {
        ApproxPlan { i0, r0, big_r, t, delta_t0: c.delta_t0, q: None, dense_cap: DEFAULT_DENSE_CAP }
    }
}

/// Exact dynamics and a stationary state against which each step is measured.
#[derive(Clone, Copy)]
pub struct Reference<'a> {
    pub hamiltonian: &'a OperatorMatrix,
    pub state: &'a StateVector,
    pub krylov: KrylovOptions,
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub operator: OperatorMatrix,
    pub schedule: StepSchedule,
    pub trace: Vec<StepRecord>,
    pub support: Region,
    pub creation_degree: CreationDegree,
    /// | ||O^(m_t)|| - ||O|| |
    pub norm_defect: f64,
    /// ||(O(t) - O^(m_t)) psi0|| when a reference was given.
    pub restricted_error: Option<f64>,
    pub step_error_sum: Option<f64>,
    /// ||(H - <H>) psi0|| of the reference state.
    pub stationarity_residual: Option<f64>,
    pub validity: Vec<ValidityCondition>,
}

fn stationarity(h: &OperatorMatrix, psi: &[C64]) -> f64 {
    let hp = h.apply(psi);
    let e = crate::linalg::vec_dotc(psi, &hp) / C64::from(vec_norm(psi).powi(2));
    let r: Vec<C64> = hp.iter().zip(psi).map(|(a, b)| a - e * b).collect();
    vec_norm(&r)
}

fn merge_validity(acc: &mut Vec<ValidityCondition>, step: &[ValidityCondition]) {
    for c in step {
        match acc.iter_mut().find(|a| a.name == c.name) {
            Some(a) => a.satisfied &= c.satisfied,
            None => acc.push(c.clone()),
        }
    }
}

/// O^(m) = U_m^dagger O^(m-1) U_m with U_m the step unitary around X_(m-1)
/// and buffer l0 = dr / 2, starting from an operator supported in i0[r0].
pub fn approximate_heisenberg(
    o: &OperatorMatrix,
    spec: &HamiltonianSpec,
    basis: &Arc<FockBasis>,
    plan: &ApproxPlan,
    reference: Option<Reference<'_>>,
    c: &BoundConstants,
) -> Result<ApproxResult> {
    let start = Instant::now();
    let g = spec.lattice();
    g.check_site(plan.i0)?;
    if !o.basis().same_as(basis) {
        return Err(Error::BasisMismatch);
    }
    let x0 = g.site_ball(plan.i0, plan.r0);
    if !o.lives_on(&x0) {
        return Err(Error::Precondition("operator is not supported inside i0[r0]".into()));
    }
    let degree = creation_degree(o, &x0)?;
    let schedule = step_schedule(plan.t, plan.big_r, plan.r0, plan.delta_t0)?;
    let ell0 = schedule.dr as f64 / 2.0;
    let mut current = o.to_dense(plan.dense_cap)?;
    let mut trace = Vec::with_capacity(schedule.m_t);
    let mut validity = Vec::new();
    let mut step_sum = 0.0;

    let refs = match reference {
        Some(r) => {
            if !r.hamiltonian.basis().same_as(basis) || !r.state.basis().same_as(basis) {
                return Err(Error::BasisMismatch);
            }
            let psi = r.state.amps();
            let e = r.hamiltonian.matrix_element(psi, psi).re / vec_norm(psi).powi(2);
            Some((r, stationarity(r.hamiltonian, psi), e))
        }
        None => None,
    };

    for m in 1..=schedule.m_t {
        let x = schedule.region(g, plan.i0, m - 1);
        let u = local_step_unitary(spec, basis, &x, ell0, plan.q, schedule.dt)?;
        let mut cond = u.validity.clone();
        cond.push(ValidityCondition { name: "dt <= delta_t0".into(), satisfied: schedule.dt <= c.delta_t0 });
        merge_validity(&mut validity, &cond);
        let v = u.dense(plan.dense_cap)?;
        let next = v.adjoint() * &current * &v;
        let step_error = match &refs {
            Some((r, _, e)) => {
                // exp(iH dt) O^(m-1) exp(-iH dt) psi0 = exp(-iE dt) exp(iH dt) O^(m-1) psi0
                let psi = r.state.amps();
                let op = current.apply(psi);
                let (evolved, _) = krylov_expm(r.hamiltonian, &op, -schedule.dt, &r.krylov)?;
                let phase = C64::from_polar(1.0, -e * schedule.dt);
                let lhs: Vec<C64> = evolved.iter().map(|a| a * phase).collect();
                let d = vec_diff_norm(&lhs, &next.apply(psi));
                step_sum += d;
                Some(d)
            }
            None => None,
        };
        current = next;
        trace.push(StepRecord {
            m,
            support_size: u.regions.support.len(),
            truncation_q: plan.q,
            step_error_if_measured: step_error,
            cumulative_wall_time: start.elapsed().as_secs_f64(),
            clipped: u.regions.clipped,
        });
    }

    let norm_defect = (spectral_norm(&current) - spectral_norm(&o.dense())).abs();
    let operator = OperatorMatrix::from_dense(basis.clone(), current)?;
    let support = operator.support();
    let (restricted_error, step_error_sum, stationarity_residual) = match &refs {
        Some((r, res, _)) => {
            let err = crate::probes::restricted_error(
                r.hamiltonian,
                o,
                &operator,
                &crate::probes::Ensemble::pure(r.state.clone()),
                plan.t,
                &r.krylov,
            )?;
            (Some(err), Some(step_sum), Some(*res))
        }
        None => (None, None, None),
    };
    Ok(ApproxResult {
        operator,
        schedule,
        trace,
        support,
        creation_degree: degree,
        norm_defect,
        restricted_error,
        step_error_sum,
        stationarity_residual,
        validity,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct QuenchPlan {
    pub i0: usize,
    pub r0: usize,
    pub big_r: usize,
    pub t: f64,
    pub delta_t0: f64,
    /// Truncation on L~; `None` keeps the basis cutoff.
    pub q: Option<usize>,
    /// Truncation on L1; `None` keeps the basis cutoff.
    pub q_prime: Option<usize>,
    /// Largest accepted ||(H - <H>) psi0||.
    pub stationarity_tol: f64,
    /// Target error passed to the one-dimensional cost estimate.
    pub target_error: f64,
    pub krylov: KrylovOptions,
}

impl QuenchPlan {
    pub fn new(i0: usize, r0: usize, big_r: usize, t: f64, c: &BoundConstants) -> Self {
        QuenchPlan {
            i0,
            r0,
            big_r,
            t,
            delta_t0: c.delta_t0,
            q: None,
            q_prime: None,
            stationarity_tol: 1e-6,
            target_error: 1e-5,
            krylov: KrylovOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuenchOutcome {
    /// Trace distance between the approximate and exact quenched states.
    pub error: f64,
    pub schedule: StepSchedule,
    pub trace: Vec<StepRecord>,
    pub stationarity_residual: f64,
    /// Sum over steps of the local dimension of the step support.
    pub cost: usize,
    pub max_number_defect: f64,
    pub bounds: Option<QuenchBounds>,
    pub validity: Vec<ValidityCondition>,
}

/// Apply the chained local quench unitary U_(i0[R]) to a stationary psi0 and
/// compare with exp(-i (H + h) t) psi0.
pub fn run_quench(
    spec: &HamiltonianSpec,
    h_x0: &OperatorMatrix,
    psi0: &StateVector,
    plan: &QuenchPlan,
    c: &BoundConstants,
) -> Result<QuenchOutcome> {
    let start = Instant::now();
    let basis = psi0.basis();
    if !h_x0.basis().same_as(basis) {
        return Err(Error::BasisMismatch);
    }
    let g = spec.lattice();
    g.check_site(plan.i0)?;
    let x0 = g.site_ball(plan.i0, plan.r0);
    if !h_x0.lives_on(&x0) {
        return Err(Error::Precondition("quench term is not supported inside i0[r0]".into()));
    }
    let h = assemble_hamiltonian(spec, basis)?;
    let psi = psi0.amps();
    let residual = stationarity(&h, psi);
    if residual > plan.stationarity_tol {
        return Err(Error::Precondition(format!(
            "initial state is not stationary: ||(H - <H>) psi0|| = {residual:.3e} > {:.3e}",
            plan.stationarity_tol
        )));
    }
    let schedule = step_schedule(plan.t, plan.big_r, plan.r0, plan.delta_t0)?;
    let ell0 = schedule.dr as f64 / 2.0;
    let mut steps = Vec::with_capacity(schedule.m_t);
    let mut validity = Vec::new();
    let mut cost = 0;
    let mut max_number_defect: f64 = 0.0;
    for m in 1..=schedule.m_t {
        let x = schedule.region(g, plan.i0, m - 1);
        let step = quench_step_unitary(spec, h_x0, basis, &x, ell0, plan.q, plan.q_prime, schedule.dt)?;
        let mut cond = step.outer.validity.clone();
        cond.push(ValidityCondition { name: "dt <= delta_t0".into(), satisfied: schedule.dt <= c.delta_t0 });
        merge_validity(&mut validity, &cond);
        let scheme = truncation_scheme(&step.outer.regions, plan.q, plan.q_prime);
        cost += local_dimension(basis, &step.outer.regions.support, &scheme);
        max_number_defect = max_number_defect.max(step.outer.number_defect).max(step.interaction.number_defect);
        steps.push(step);
    }

    // U^(m) = A_m U^(m-1) A_m^dagger U2_m telescopes to
    // A_(m_t) ... A_1 exp(i G_1 dt) ... exp(i G_(m_t) dt)
    let mut v = psi.to_vec();
    let mut trace = Vec::with_capacity(schedule.m_t);
    for step in steps.iter().rev() {
        let (gen, tau) = &step.interaction.factors()[0];
        v = krylov_expm(gen, &v, *tau, &plan.krylov)?.0;
    }
    for (k, step) in steps.iter().enumerate() {
        v = step.outer.apply(&v, &plan.krylov)?;
        trace.push(StepRecord {
            m: k + 1,
            support_size: step.outer.regions.support.len(),
            truncation_q: plan.q,
            step_error_if_measured: None,
            cumulative_wall_time: start.elapsed().as_secs_f64(),
            clipped: step.outer.regions.clipped,
        });
    }
    let full = h.add(h_x0)?;
    let (exact, _) = krylov_expm(&full, psi, plan.t, &plan.krylov)?;
    let nv = vec_norm(&v);
    let ne = vec_norm(&exact);
    let a: Vec<C64> = v.iter().map(|z| z / nv).collect();
    let b: Vec<C64> = exact.iter().map(|z| z / ne).collect();
    let error = pure_state_distance(&a, &b);
    let bounds = if plan.big_r > 1 && plan.t > 0.0 {
        Some(quench_bounds(plan.big_r as f64, plan.r0 as f64, plan.t, plan.target_error, c)?)
    } else {
        None
    };
    Ok(QuenchOutcome {
        error,
        schedule,
        trace,
        stationarity_residual: residual,
        cost,
        max_number_defect,
        bounds,
        validity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BoundInputs, FreeConstants};
    use crate::evolve::dense_expm;
    use crate::fock::DEFAULT_BASIS_CAP;
    use crate::lattice::{GeometricConstants, LatticeKind};
    use crate::linalg::ZERO;
    use crate::model::{local_operator, LocalOperatorKind};
    use crate::probes::{ground_state, EigenOptions};

    fn chain(n: usize, cut: u8, sector: Option<usize>) -> (Arc<LatticeGraph>, Arc<FockBasis>) {
        let g = Arc::new(LatticeGraph::build(LatticeKind::Chain, &[n]).unwrap());
        let b = FockBasis::uniform(g.clone(), cut, sector, DEFAULT_BASIS_CAP).unwrap();
        (g, b)
    }

    fn consts(spec: &HamiltonianSpec) -> BoundConstants {
        let geo = GeometricConstants::of(spec.lattice());
        let mut i = BoundInputs::from_model(spec, &geo);
        i.free = FreeConstants::default();
        BoundConstants::resolve(i).unwrap()
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    #[test]
    fn schedule_examples() {
        let s = step_schedule(1.0, 10, 0, 0.5).unwrap();
        assert_eq!((s.m_t, s.dt, s.dr), (2, 0.5, 5));
        let (g, _) = chain(12, 1, None);
        assert_eq!(s.region(&g, 0, 1), g.site_ball(0, 5));
        assert!(matches!(step_schedule(10.0, 5, 0, 0.5), Err(Error::Precondition(_))));
        let s = step_schedule(0.3, 9, 0, 0.1).unwrap();
        assert_eq!(s.m_t, 3);
        assert!(s.dt <= 0.1);
        assert!((s.dt * s.m_t as f64 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_time_step_is_identity() {
        let (g, b) = chain(4, 2, Some(3));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 1.0, 0.0).unwrap();
        let u = local_step_unitary(&spec, &b, &Region::single(1), 1.0, None, 0.0).unwrap();
        let d = u.dense(DEFAULT_DENSE_CAP).unwrap();
        assert!(max_diff(&d, &CMatrix::identity(b.dim(), b.dim())) < 1e-14);
    }

    #[test]
    fn no_hopping_gives_diagonal_phase() {
        let (g, b) = chain(4, 2, Some(3));
        let spec = HamiltonianSpec::bose_hubbard(g, 0.0, 2.0, 0.3).unwrap();
        let u = local_step_unitary(&spec, &b, &Region::single(1), 2.0, None, 0.4).unwrap();
        let d = u.dense(DEFAULT_DENSE_CAP).unwrap();
        for r in 0..b.dim() {
            for c in 0..b.dim() {
                if r != c {
                    assert_eq!(d[(r, c)], ZERO);
                }
            }
            assert!((d[(r, r)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn whole_lattice_step_matches_full_propagator() {
        let (g, b) = chain(8, 1, Some(4));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 1.0, 0.2).unwrap();
        let u = local_step_unitary(&spec, &b, &Region::single(3), 8.0, None, 0.3).unwrap();
        assert!(u.regions.clipped);
        let h = assemble_hamiltonian(&spec, &b).unwrap();
        let exact = dense_expm(&h, 0.3, DEFAULT_DENSE_CAP).unwrap().dense();
        assert!(max_diff(&u.dense(DEFAULT_DENSE_CAP).unwrap(), &exact) < 1e-12);
        assert!(u.unitarity_defect(DEFAULT_DENSE_CAP).unwrap() < 1e-10);
    }

    #[test]
    fn two_factor_form_conjugates_identically() {
        // exp(-i V~_X[k] dt) exp(i V~_L2 dt) exp(-i G dt) against exp(-i G dt)
        let (g, b) = chain(7, 3, Some(5));
        let spec = HamiltonianSpec::bose_hubbard(g.clone(), 1.0, 1.3, 0.1).unwrap();
        let x = Region::single(3);
        let dt = 0.2;
        let u = local_step_unitary(&spec, &b, &x, 2.0, Some(1), dt).unwrap();
        let scheme = truncation_scheme(&u.regions, Some(1), None);
        let diag = |region: Region| {
            assemble_selected(
                &spec,
                &b,
                &TermSelection {
                    hop_region: Some(Region::empty()),
                    interaction_region: Some(region),
                    straddling: None,
                    truncation: scheme.clone(),
                },
            )
            .unwrap()
        };
        let vx = diag(g.ball(&x, spec.locality()));
        let vl = diag(u.regions.support.clone());
        let cap = DEFAULT_DENSE_CAP;
        let closed = u.dense(cap).unwrap();
        let two = dense_expm(&vx, dt, cap).unwrap().dense() * dense_expm(&vl, -dt, cap).unwrap().dense() * &closed;
        let o = local_operator(&b, &LocalOperatorKind::Annihilation { site: 3 }).unwrap().dense();
        let a = closed.adjoint() * &o * &closed;
        let c = two.adjoint() * &o * &two;
        assert!(max_diff(&a, &c) < 1e-12);
    }

    #[test]
    fn full_coverage_heisenberg_is_exact() {
        let (g, b) = chain(6, 2, Some(3));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 1.0, 0.0).unwrap();
        let c = consts(&spec);
        let h = assemble_hamiltonian(&spec, &b).unwrap();
        let gs = ground_state(&h, &EigenOptions::default()).unwrap();
        let o = local_operator(&b, &LocalOperatorKind::Number { site: 0 }).unwrap();
        let mut plan = ApproxPlan::new(0, 0, 2 * (5 + 2), 0.2, &c);
        plan.delta_t0 = 0.1;
        let reference = Reference { hamiltonian: &h, state: &gs.state, krylov: KrylovOptions::default() };
        let res = approximate_heisenberg(&o, &spec, &b, &plan, Some(reference), &c).unwrap();
        assert_eq!(res.schedule.m_t, 2);
        assert!(res.restricted_error.unwrap() < 1e-9);
        assert!(res.norm_defect < 1e-10);
        assert!(res.restricted_error.unwrap() <= res.step_error_sum.unwrap() + 1e-8);
        assert!(res.validity.iter().any(|v| v.name == "dt <= delta_t0" && !v.satisfied));
    }

    #[test]
    fn zero_time_keeps_operator() {
        let (g, b) = chain(5, 1, Some(2));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 0.0, 0.0).unwrap();
        let c = consts(&spec);
        let o = local_operator(&b, &LocalOperatorKind::Number { site: 0 }).unwrap();
        let plan = ApproxPlan::new(0, 0, 3, 0.0, &c);
        let res = approximate_heisenberg(&o, &spec, &b, &plan, None, &c).unwrap();
        assert!(max_diff(&res.operator.dense(), &o.dense()) == 0.0);
        assert!(res.trace.is_empty());
    }

    #[test]
    fn commuting_quench_reduces_to_plain_exponential() {
        // no hopping: G is diagonal and commutes with h
        let (g, b) = chain(3, 3, Some(3));
        let spec = HamiltonianSpec::bose_hubbard(g, 0.0, 1.0, 0.0).unwrap();
        let h = local_operator(&b, &LocalOperatorKind::Number { site: 1 }).unwrap().scale(C64::new(0.7, 0.0));
        let step = quench_step_unitary(&spec, &h, &b, &Region::single(1), 1.0, None, None, 0.3).unwrap();
        let u2 = step.interaction.dense(DEFAULT_DENSE_CAP).unwrap();
        let direct = dense_expm(&h, 0.3, DEFAULT_DENSE_CAP).unwrap().dense();
        assert!(max_diff(&u2, &direct) < 1e-13);
    }

    #[test]
    fn zero_quench_term_gives_identity_interaction() {
        let (g, b) = chain(4, 2, Some(4));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 1.0, 0.0).unwrap();
        let h = OperatorMatrix::identity(&b).scale(ZERO);
        let step = quench_step_unitary(&spec, &h, &b, &Region::single(1), 1.0, Some(2), Some(3), 0.1).unwrap();
        let u2 = step.interaction.dense(DEFAULT_DENSE_CAP).unwrap();
        assert!(max_diff(&u2, &CMatrix::identity(b.dim(), b.dim())) < 1e-12);
    }

    #[test]
    fn quench_full_coverage_and_control() {
        let (g, b) = chain(5, 5, Some(5));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 3.0, 0.0).unwrap();
        let c = consts(&spec);
        let h = assemble_hamiltonian(&spec, &b).unwrap();
        let gs = ground_state(&h, &EigenOptions::default()).unwrap();
        let n2 = local_operator(&b, &LocalOperatorKind::Number { site: 2 }).unwrap();
        let hq = n2.matmul(&n2).unwrap().scale(C64::new(0.5, 0.0));
        let mut plan = QuenchPlan::new(2, 0, 2 * (2 + 2), 0.2, &c);
        plan.delta_t0 = 0.1;
        let out = run_quench(&spec, &hq, &gs.state, &plan, &c).unwrap();
        assert!(out.error < 1e-8, "error {}", out.error);
        assert!(out.max_number_defect < 1e-10);
        let zero = hq.scale(ZERO);
        let ctrl = run_quench(&spec, &zero, &gs.state, &plan, &c).unwrap();
        assert!(ctrl.error < 1e-8);
    }

    #[test]
    fn quench_rejects_moving_state() {
        let (g, b) = chain(3, 2, Some(2));
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 1.0, 0.0).unwrap();
        let c = consts(&spec);
        let psi = StateVector::from_occupation(&b, &[2, 0, 0]).unwrap();
        let h = local_operator(&b, &LocalOperatorKind::Number { site: 0 }).unwrap();
        let mut plan = QuenchPlan::new(0, 0, 4, 0.1, &c);
        plan.delta_t0 = 0.1;
        assert!(matches!(run_quench(&spec, &h, &psi, &plan, &c), Err(Error::Precondition(_))));
    }
}
