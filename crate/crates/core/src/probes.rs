//! Measurable quantities: moments, tails, commutator norms, restricted
//! errors, ground states and correlations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolve::{krylov_expm, KrylovOptions, Spectral, StateVector};
use crate::lattice::Region;
use crate::linalg::{spectral_norm, tridiagonal_eigen, vec_dotc, vec_norm, LinearOp, C64, ZERO};
use crate::model::OperatorMatrix;

/// Convex mixture of pure states.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(f64, StateVector)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, StateVector)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Argument("empty ensemble".into()));
        }
        let total: f64 = members.iter().map(|m| m.0).sum();
        if members.iter().any(|m| m.0 < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("weights must be nonnegative and sum to 1, got {total}")));
        }
        Ok(Ensemble { members })
    }

    pub fn pure(psi: StateVector) -> Self {
        Ensemble { members: vec![(1.0, psi)] }
    }

    pub fn members(&self) -> &[(f64, StateVector)] {
        &self.members
    }
}

fn weighted_diag(psi: &StateVector, f: impl Fn(&[u8]) -> f64) -> f64 {
    let b = psi.basis();
    psi.amps().iter().enumerate().map(|(k, a)| a.norm_sqr() * f(b.occupation(k))).sum()
}

/// tr(n_i^s rho) for rho = |psi><psi|.
pub fn moment(psi: &StateVector, i: usize, s: u32) -> Result<f64> {
    psi.basis().lattice().check_site(i)?;
    Ok(weighted_diag(psi, |o| (o[i] as f64).powi(s as i32)))
}

/// tr(n_X^s rho)
pub fn region_moment(psi: &StateVector, x: &Region, s: u32) -> Result<f64> {
    psi.basis().lattice().check_region(x)?;
    Ok(weighted_diag(psi, |o| {
        (x.sites().iter().map(|&i| o[i] as usize).sum::<usize>() as f64).powi(s as i32)
    }))
}

/// tr(Pi_{i, >= z0} rho)
pub fn tail_probability(psi: &StateVector, i: usize, z0: usize) -> Result<f64> {
    psi.basis().lattice().check_site(i)?;
    Ok(weighted_diag(psi, |o| (o[i] as usize >= z0) as u8 as f64))
}

/// max_i tr(exp(c0 (n_i - qbar)) rho); the low-density condition asks for <= 1.
pub fn mgf_condition(rho: &Ensemble, c0: f64, qbar: f64) -> f64 {
    let n = rho.members[0].1.basis().n_sites();
    (0..n)
        .map(|i| {
            rho.members
                .iter()
                .map(|(w, psi)| w * weighted_diag(psi, |o| (c0 * (o[i] as f64 - qbar)).exp()))
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// ||[A(t), B]|| with A(t) = exp(iHt) A exp(-iHt).
pub fn commutator_norm(
    spectral: &Spectral,
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    t: f64,
) -> Result<f64> {
    let at = spectral.heisenberg(a, t)?.dense();
    let bd = b.dense();
    Ok(spectral_norm(&(&at * &bd - &bd * &at)))
}

/// exp(iHt) O exp(-iHt) |psi> using three Krylov propagations.
pub fn heisenberg_apply(
    h: &dyn LinearOp,
    o: &dyn LinearOp,
    psi: &[C64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<Vec<C64>> {
    let (a, _) = krylov_expm(h, psi, t, opts)?;
    let b = o.apply(&a);
    let (c, _) = krylov_expm(h, &b, -t, opts)?;
    Ok(c)
}

/// ||(O(t) - O_approx) psi0||, or the weighted sum of member errors for an
/// ensemble (an upper bound on the mixed-state quantity by convexity).
pub fn restricted_error(
    h: &OperatorMatrix,
    o: &OperatorMatrix,
    o_approx: &dyn LinearOp,
    rho: &Ensemble,
    t: f64,
    opts: &KrylovOptions,
) -> Result<f64> {
    let mut total = 0.0;
    for (w, psi) in rho.members() {
        if !psi.basis().same_as(h.basis()) || !o.basis().same_as(h.basis()) {
            return Err(Error::BasisMismatch);
        }
        let exact = heisenberg_apply(h, o, psi.amps(), t, opts)?;
        let approx = o_approx.apply(psi.amps());
        total += w * crate::linalg::vec_diff_norm(&exact, &approx);
    }
    Ok(total)
}

/// ||(exp(-i A t) - exp(-i B t)) phi||
pub fn propagation_difference(
    a: &dyn LinearOp,
    b: &dyn LinearOp,
    phi: &[C64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<f64> {
    let (x, _) = krylov_expm(a, phi, t, opts)?;
    let (y, _) = krylov_expm(b, phi, t, opts)?;
    Ok(crate::linalg::vec_diff_norm(&x, &y))
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// E1 - E0
    pub gap: f64,
    pub degenerate: bool,
    /// ||H psi - E psi||
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Use dense diagonalization at or below this dimension.
    pub dense_below: usize,
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { dense_below: 400, tol: 1e-11, krylov_dim: 120, max_restarts: 60, seed: 7 }
    }
}

/// Lowest eigenpair and the gap to the next level.
pub fn ground_state(h: &OperatorMatrix, opts: &EigenOptions) -> Result<GroundState> {
    let n = h.dim();
    let scale = 1.0 + h.max_abs();
    let (e0, v0, e1) = if n <= opts.dense_below {
        let eig = crate::linalg::HermitianEigen::new(&h.dense())?;
        let v0: Vec<C64> = eig.vectors.column(0).iter().copied().collect();
        let e1 = eig.values.get(1).copied().unwrap_or(f64::INFINITY);
        (eig.values[0], v0, e1)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let start: Vec<C64> =
            (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let (e0, v0) = lowest_ritz(h, &start, &[], opts, scale)?;
        let start1: Vec<C64> =
            (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let e1 = if n > 1 {
            lowest_ritz(h, &start1, std::slice::from_ref(&v0), opts, scale)?.0
        } else {
            f64::INFINITY
        };
        (e0, v0, e1)
    };
    let hv = h.apply(&v0);
    let residual = vec_norm(&hv.iter().zip(&v0).map(|(a, b)| a - b * e0).collect::<Vec<_>>());
    let gap = e1 - e0;
    Ok(GroundState {
        energy: e0,
        state: StateVector::new(h.basis().clone(), v0)?,
        gap,
        degenerate: gap <= 1e-8 * scale,
        residual,
    })
}

/// Restarted Lanczos for the lowest eigenpair orthogonal to `deflate`.
fn lowest_ritz(
    h: &dyn LinearOp,
    start: &[C64],
    deflate: &[Vec<C64>],
    opts: &EigenOptions,
    scale: f64,
) -> Result<(f64, Vec<C64>)> {
    let n = h.dim();
    let project = |v: &mut Vec<C64>| {
        for d in deflate {
            let p = vec_dotc(d, v);
            v.iter_mut().zip(d).for_each(|(x, y)| *x -= p * y);
        }
    };
    let mut x = start.to_vec();
    for _ in 0..opts.max_restarts {
        project(&mut x);
        let nx = vec_norm(&x);
        if nx == 0.0 {
            return Err(Error::Eigen("start vector lies in the deflated space".into()));
        }
        let mut q: Vec<C64> = x.iter().map(|z| z / nx).collect();
        let mut basis: Vec<Vec<C64>> = Vec::new();
        let mut alpha = Vec::new();
        let mut betas = Vec::new();
        let m = opts.krylov_dim.min(n - deflate.len()).max(1);
        for j in 0..m {
            let mut r = h.apply(&q);
            project(&mut r);
            let aj = vec_dotc(&q, &r).re;
            for _ in 0..2 {
                for b in basis.iter().chain(std::iter::once(&q)) {
                    let p = vec_dotc(b, &r);
                    r.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
                project(&mut r);
            }
            alpha.push(aj);
            basis.push(std::mem::take(&mut q));
            let bj = vec_norm(&r);
            if j + 1 == m || bj <= 1e-14 * scale {
                break;
            }
            betas.push(bj);
            q = r.into_iter().map(|z| z / bj).collect();
        }
        let (_, vecs) = tridiagonal_eigen(&alpha, &betas)?;
        let mut ritz = vec![ZERO; n];
        for (k, b) in basis.iter().enumerate() {
            let c = vecs[(k, 0)];
            ritz.iter_mut().zip(b).for_each(|(x, y)| *x += y * c);
        }
        project(&mut ritz);
        let nr = vec_norm(&ritz);
        ritz.iter_mut().for_each(|z| *z /= nr);
        let mut hr = h.apply(&ritz);
        project(&mut hr);
        let e = vec_dotc(&ritz, &hr).re;
        let res = vec_norm(&hr.iter().zip(&ritz).map(|(a, b)| a - b * e).collect::<Vec<_>>());
        if res <= opts.tol * scale {
            return Ok((e, ritz));
        }
        x = ritz;
    }
    Err(Error::Eigen(format!("no convergence after {} restarts", opts.max_restarts)))
}

/// <O_X O_Y> - <O_X><O_Y> in a pure state.
pub fn connected_correlation(
    psi: &StateVector,
    ox: &OperatorMatrix,
    oy: &OperatorMatrix,
) -> Result<C64> {
    if !ox.basis().same_as(psi.basis()) || !oy.basis().same_as(psi.basis()) {
        return Err(Error::BasisMismatch);
    }
    let y = oy.apply(psi.amps());
    let xy = ox.apply(&y);
    let x = ox.apply(psi.amps());
    let a = psi.amps();
    Ok(vec_dotc(a, &xy) - vec_dotc(a, &x) * vec_dotc(a, &y))
}
