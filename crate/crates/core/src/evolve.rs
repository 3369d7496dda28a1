//! Real-time propagation: Krylov for states, dense spectral for operators.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::linalg::{
    tridiagonal_eigen, vec_dotc, vec_norm, CMatrix, HermitianEigen, LinearOp, C64, I, ONE, ZERO,
};
use crate::model::OperatorMatrix;

pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Normalized-or-not amplitude vector on a basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<FockBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Argument(format!(
                "{} amplitudes for basis dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(StateVector { basis, amps })
    }

    /// Basis state with the given occupations.
    pub fn from_occupation(basis: &Arc<FockBasis>, occ: &[u8]) -> Result<Self> {
        let k = basis
            .index_of(occ)
            .ok_or_else(|| Error::Argument(format!("occupation {occ:?} not in basis")))?;
        let mut amps = vec![ZERO; basis.dim()];
        amps[k] = ONE;
        Ok(StateVector { basis: basis.clone(), amps })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amps)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Argument("cannot normalize the zero vector".into()));
        }
        for z in &mut self.amps {
            *z /= n;
        }
        Ok(self)
    }

    pub fn apply(&self, op: &OperatorMatrix) -> Result<StateVector> {
        if !op.basis().same_as(&self.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(StateVector { basis: self.basis.clone(), amps: op.apply(&self.amps) })
    }

    pub fn dot(&self, other: &StateVector) -> C64 {
        vec_dotc(&self.amps, &other.amps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationMethod {
    Krylov,
    Diagonal,
    Identity,
}

/// What a propagation call did.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PropagatorReport {
    pub method: PropagationMethod,
    pub substeps: usize,
    pub max_krylov_dim: usize,
    /// Accumulated a-posteriori error estimate.
    pub error_estimate: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    /// Target 2-norm error for the whole propagation.
    pub tol: f64,
    pub max_dim: usize,
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { tol: 1e-12, max_dim: 40, max_substeps: 100_000 }
    }
}

/// exp(-i H t) |psi> by adaptive Lanczos substeps.
pub fn evolve_state(
    h: &OperatorMatrix,
    psi: &StateVector,
    t: f64,
    opts: &KrylovOptions,
) -> Result<(StateVector, PropagatorReport)> {
    if !h.basis().same_as(psi.basis()) {
        return Err(Error::BasisMismatch);
    }
    let defect = h.hermitian_defect();
    if defect > 1e-10 * (1.0 + h.max_abs()) {
        return Err(Error::NotHermitian(defect));
    }
    let (amps, report) = if h.is_diagonal() {
        let d = h.diagonal();
        let amps = psi.amps().iter().zip(&d).map(|(a, e)| a * (-I * e.re * t).exp()).collect();
        (amps, PropagatorReport {
            method: PropagationMethod::Diagonal,
            substeps: 1,
            max_krylov_dim: 0,
            error_estimate: 0.0,
        })
    } else {
        krylov_expm(h, psi.amps(), t, opts)?
    };
    Ok((StateVector { basis: psi.basis().clone(), amps }, report))
}

/// exp(-i A t) v for a Hermitian linear map.
pub fn krylov_expm(
    a: &dyn LinearOp,
    v: &[C64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, PropagatorReport)> {
    let n = a.dim();
    let mut w = v.to_vec();
    let mut report = PropagatorReport {
        method: PropagationMethod::Krylov,
        substeps: 0,
        max_krylov_dim: 0,
        error_estimate: 0.0,
    };
    let beta0 = vec_norm(&w);
    if t == 0.0 || beta0 == 0.0 {
        report.method = PropagationMethod::Identity;
        return Ok((w, report));
    }
    let total = t.abs();
    let sign = t.signum();
    let mut done = 0.0;
    let mut tau = total;
    let max_m = opts.max_dim.min(n).max(1);
    while done < total {
        if report.substeps >= opts.max_substeps {
            return Err(Error::Krylov(format!("exceeded {} substeps", opts.max_substeps)));
        }
        let beta = vec_norm(&w);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_m);
        let mut alpha = Vec::with_capacity(max_m);
        let mut betas: Vec<f64> = Vec::with_capacity(max_m);
        let mut q: Vec<C64> = w.iter().map(|z| z / beta).collect();
        let mut residual = 0.0;
        let mut exact = false;
        let scale = 1.0 + beta;
        for j in 0..max_m {
            let mut r = a.apply(&q);
            let aj = vec_dotc(&q, &r).re;
            for _ in 0..2 {
                for b in basis.iter().chain(std::iter::once(&q)) {
                    let p = vec_dotc(b, &r);
                    r.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            alpha.push(aj);
            basis.push(std::mem::take(&mut q));
            let bj = vec_norm(&r);
            if bj <= 1e-14 * scale * (1.0 + aj.abs()) || basis.len() == n {
                exact = true;
                break;
            }
            if j + 1 == max_m {
                residual = bj;
                break;
            }
            betas.push(bj);
            q = r.into_iter().map(|z| z / bj).collect();
        }
        let m = alpha.len();
        report.max_krylov_dim = report.max_krylov_dim.max(m);
        let (vals, vecs) = tridiagonal_eigen(&alpha, &betas)?;
        let small = |step: f64| -> Vec<C64> {
            (0..m)
                .map(|r| {
                    (0..m)
                        .map(|k| vecs[(r, k)] * vecs[(0, k)] * (-I * vals[k] * step).exp())
                        .sum()
                })
                .collect()
        };
        tau = tau.min(total - done);
        let (y, err) = loop {
            let y = small(sign * tau);
            let err = if exact { 0.0 } else { beta * residual * y[m - 1].norm() };
            if err <= opts.tol * tau / total {
                break (y, err);
            }
            tau *= 0.5;
            if tau < total * 1e-13 {
                return Err(Error::Krylov(format!(
                    "tolerance {:.1e} unreachable with Krylov dimension {max_m}",
                    opts.tol
                )));
            }
        };
        let mut next = vec![ZERO; n];
        for (k, b) in basis.iter().enumerate() {
            let c = y[k] * beta;
            next.iter_mut().zip(b).for_each(|(x, z)| *x += c * z);
        }
        w = next;
        done += tau;
        if total - done <= total * 1e-15 {
            done = total;
        }
        report.substeps += 1;
        report.error_estimate += err;
        tau *= 2.0;
    }
    Ok((w, report))
}

/// Cached eigendecomposition of a Hermitian operator for repeated dense
/// propagation.
#[derive(Clone, Debug)]
pub struct Spectral {
    basis: Arc<FockBasis>,
    eigen: HermitianEigen,
}

impl Spectral {
    pub fn new(h: &OperatorMatrix, cap: usize) -> Result<Self> {
        let m = h.to_dense(cap)?;
        Ok(Spectral { basis: h.basis().clone(), eigen: HermitianEigen::new(&m)? })
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// exp(-i H t)
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.eigen.propagator(t)
    }

    /// exp(i H t) O exp(-i H t)
    pub fn heisenberg(&self, o: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
        if !o.basis().same_as(&self.basis) {
            return Err(Error::BasisMismatch);
        }
        let u = self.propagator(t);
        OperatorMatrix::from_dense(self.basis.clone(), u.adjoint() * o.dense() * u)
    }
}

/// exp(-i H t) as a dense operator.
pub fn dense_expm(h: &OperatorMatrix, t: f64, cap: usize) -> Result<OperatorMatrix> {
    let s = Spectral::new(h, cap)?;
    OperatorMatrix::from_dense(h.basis().clone(), s.propagator(t))
}

/// exp(i H t) O exp(-i H t)
pub fn heisenberg(h: &OperatorMatrix, o: &OperatorMatrix, t: f64, cap: usize) -> Result<OperatorMatrix> {
    Spectral::new(h, cap)?.heisenberg(o, t)
}

/// exp(-i A t) exp(i (A - h) t), the time-ordered exponential of
/// -i exp(-i A tau) h exp(i A tau) over [0, t].
pub fn interaction_picture_unitary(
    a: &OperatorMatrix,
    h: &OperatorMatrix,
    t: f64,
    cap: usize,
) -> Result<OperatorMatrix> {
    let ea = Spectral::new(a, cap)?.propagator(t);
    let rest = a.sub(h)?;
    let eb = Spectral::new(&rest, cap)?.propagator(-t);
    OperatorMatrix::from_dense(a.basis().clone(), ea * eb)
}

/// Trace distance between the pure states of two normalized vectors,
/// insensitive to a global phase.
pub fn pure_state_distance(a: &[C64], b: &[C64]) -> f64 {
    let ov = vec_dotc(a, b);
    let mag = ov.norm();
    let phase = if mag > 0.0 { ov / mag } else { ONE };
    // |a - e^{-i arg} b|^2 = 2 - 2|<a|b>| for unit vectors; stable near zero.
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y * phase.conj()).norm_sqr())
        .sum::<f64>()
        .sqrt();
    d * (2.0 * (1.0 + mag.min(1.0))).sqrt()
}

/// Dense matrix of exp(-i A t) columns via Krylov, for checks.
pub fn krylov_columns(a: &OperatorMatrix, t: f64, opts: &KrylovOptions) -> Result<CMatrix> {
    let n = a.dim();
    let mut out = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![ZERO; n];
        e[c] = ONE;
        let (col, _) = krylov_expm(a, &e, t, opts)?;
        out.column_mut(c).copy_from_slice(&col);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::DEFAULT_BASIS_CAP;
    use crate::lattice::{LatticeGraph, LatticeKind};
    use crate::model::{assemble_hamiltonian, HamiltonianSpec};

    fn bh(n: usize, cut: u8, sector: Option<usize>) -> OperatorMatrix {
        let g = Arc::new(LatticeGraph::build(LatticeKind::Chain, &[n]).unwrap());
        let b = FockBasis::uniform(g.clone(), cut, sector, DEFAULT_BASIS_CAP).unwrap();
        let spec = HamiltonianSpec::bose_hubbard(g, 1.0, 1.5, 0.2).unwrap();
        assemble_hamiltonian(&spec, &b).unwrap()
    }

    #[test]
    fn krylov_matches_dense() {
        let h = bh(4, 3, Some(4));
        let psi = StateVector::from_occupation(h.basis(), &[1, 1, 1, 1]).unwrap();
        for &t in &[0.0, 0.3, -1.1, 4.0] {
            let (k, _) = evolve_state(&h, &psi, t, &KrylovOptions::default()).unwrap();
            let u = dense_expm(&h, t, 500).unwrap();
            let d = psi.apply(&u).unwrap();
            let err: f64 = k.amps().iter().zip(d.amps()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(err.sqrt() < 1e-10, "t={t} err={}", err.sqrt());
            assert!((k.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_zero_time_and_hamiltonian_invariance() {
        let h = bh(3, 2, Some(3));
        let o = crate::model::local_operator(h.basis(), &crate::model::LocalOperatorKind::Number { site: 0 })
            .unwrap();
        let o0 = heisenberg(&h, &o, 0.0, 500).unwrap();
        assert!((o0.dense() - o.dense()).norm() < 1e-12);
        let ht = heisenberg(&h, &h, 0.9, 500).unwrap();
        assert!((ht.dense() - h.dense()).norm() < 1e-11);
    }

    #[test]
    fn interaction_picture_commuting_case() {
        let h = bh(3, 2, Some(3));
        let d = crate::model::OperatorMatrix::from_diagonal(
            &crate::fock::DiagonalOperator::number(h.basis(), 1).unwrap(),
        );
        let diag = crate::model::OperatorMatrix::from_csr(
            h.basis().clone(),
            crate::linalg::csr_from_triplets(
                h.dim(),
                h.diagonal().iter().enumerate().map(|(k, &v)| (k, k, v)).collect(),
            ),
        );
        let u = interaction_picture_unitary(&diag, &d, 0.7, 500).unwrap();
        let expect = dense_expm(&d, 0.7, 500).unwrap();
        assert!((u.dense() - expect.dense()).norm() < 1e-12);
    }

    #[test]
    fn distance_ignores_phase() {
        let a = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let w = C64::from_polar(1.0, 1.3);
        let b: Vec<C64> = a.iter().map(|z| z * w).collect();
        assert!(pure_state_distance(&a, &b) < 1e-15);
        let c = vec![C64::new(0.0, 0.8), C64::new(0.6, 0.0)];
        let ov = vec_dotc(&a, &c).norm();
        let expect = 2.0 * (1.0 - ov * ov).sqrt();
        assert!((pure_state_distance(&a, &c) - expect).abs() < 1e-14);
    }
}
