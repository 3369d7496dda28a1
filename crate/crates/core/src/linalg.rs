//! Dense and sparse complex linear algebra used throughout the crate.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Matrix-free square linear map.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply_to(&self, x: &[C64], y: &mut [C64]);

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_to(x, &mut y);
        y
    }
}

impl LinearOp for CsrMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_to(&self, x: &[C64], y: &mut [C64]) {
        use rayon::prelude::*;
        let offsets = self.row_offsets();
        let cols = self.col_indices();
        let vals = self.values();
        let row = |r: usize| {
            let mut acc = ZERO;
            for k in offsets[r]..offsets[r + 1] {
                acc += vals[k] * x[cols[k]];
            }
            acc
        };
        if y.len() >= 4096 {
            y.par_iter_mut().enumerate().for_each(|(r, out)| *out = row(r));
        } else {
            y.iter_mut().enumerate().for_each(|(r, out)| *out = row(r));
        }
    }
}

impl LinearOp for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_to(&self, x: &[C64], y: &mut [C64]) {
        let xv = CVector::from_column_slice(x);
        let r = self * xv;
        y.copy_from_slice(r.as_slice());
    }
}

/// Build a square CSR matrix from unsorted triplets, summing duplicates and
/// dropping exact zeros.
pub fn csr_from_triplets(n: usize, mut trip: Vec<(usize, usize, C64)>) -> CsrMatrix<C64> {
    trip.sort_by_key(|&(r, c, _)| (r, c));
    let mut offsets = vec![0usize; n + 1];
    let mut cols = Vec::with_capacity(trip.len());
    let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
    let mut rows = Vec::with_capacity(trip.len());
    for (r, c, v) in trip {
        if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
            if lr == r && lc == c {
                *vals.last_mut().unwrap() += v;
                continue;
            }
        }
        rows.push(r);
        cols.push(c);
        vals.push(v);
    }
    let mut kr = Vec::with_capacity(rows.len());
    let mut kc = Vec::with_capacity(rows.len());
    let mut kv = Vec::with_capacity(rows.len());
    for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
        if v != ZERO {
            kr.push(r);
            kc.push(c);
            kv.push(v);
        }
    }
    for &r in &kr {
        offsets[r + 1] += 1;
    }
    for r in 0..n {
        offsets[r + 1] += offsets[r];
    }
    CsrMatrix::try_from_csr_data(n, n, offsets, kc, kv).expect("valid csr layout")
}

pub fn csr_to_dense(m: &CsrMatrix<C64>) -> CMatrix {
    let mut d = CMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.triplet_iter() {
        d[(r, c)] += *v;
    }
    d
}

pub fn dense_to_csr(m: &CMatrix) -> CsrMatrix<C64> {
    let mut trip = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != ZERO {
                trip.push((r, c, v));
            }
        }
    }
    csr_from_triplets(m.nrows(), trip)
}

/// Largest |A - A^dagger| entry.
pub fn hermitian_defect_dense(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            d = d.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    d
}

pub fn hermitian_defect_csr(m: &CsrMatrix<C64>) -> f64 {
    let t = m.transpose();
    let mut d: f64 = 0.0;
    let a = csr_to_map(m);
    let b = csr_to_map(&t);
    for (k, v) in &a {
        let w = b.get(k).copied().unwrap_or(ZERO);
        d = d.max((*v - w.conj()).norm());
    }
    for (k, w) in &b {
        if !a.contains_key(k) {
            d = d.max(w.norm());
        }
    }
    d
}

fn csr_to_map(m: &CsrMatrix<C64>) -> std::collections::HashMap<(usize, usize), C64> {
    m.triplet_iter().map(|(r, c, v)| ((r, c), *v)).collect()
}

/// Eigendecomposition of a Hermitian matrix, ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::Argument("eigendecomposition of a non-square matrix".into()));
        }
        let defect = hermitian_defect_dense(m);
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if defect > 1e-10 * scale {
            return Err(Error::NotHermitian(defect));
        }
        let (values, vectors) = if m.iter().all(|z| z.im == 0.0) {
            let (q, mut d, off) = nalgebra::SymmetricTridiagonal::new(m.map(|z| z.re)).unpack();
            let mut z = q;
            tql2(d.as_mut_slice(), off.as_slice(), &mut z)?;
            (d.as_slice().to_vec(), z.map(|x| C64::new(x, 0.0)))
        } else {
            let (q, mut d, off) = nalgebra::SymmetricTridiagonal::new(m.clone()).unpack();
            let mut z = DMatrix::<f64>::identity(n, n);
            tql2(d.as_mut_slice(), off.as_slice(), &mut z)?;
            (d.as_slice().to_vec(), q * z.map(|x| C64::new(x, 0.0)))
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let sorted_vals = order.iter().map(|&k| values[k]).collect();
        let sorted_vecs = CMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
        Ok(HermitianEigen { values: sorted_vals, vectors: sorted_vecs })
    }

    /// V f(lambda) V^dagger
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let w = f(self.values[c]);
            scaled.column_mut(c).scale_mut_complex(w);
        }
        scaled * self.vectors.adjoint()
    }

    /// exp(-i H t)
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.apply_function(|l| (-I * l * t).exp())
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, w: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_complex(&mut self, w: C64) {
        for z in self.iter_mut() {
            *z *= w;
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) <= 512 {
        return m.clone().singular_values().iter().copied().fold(0.0, f64::max);
    }
    // Lanczos on A^dagger A with full reorthogonalization.
    let ata = m.adjoint() * m;
    let v0 = CVector::from_fn(m.ncols(), |k, _| C64::new(1.0 + (k % 7) as f64 * 0.1, (k % 3) as f64 * 0.05));
    lanczos_extremes(&ata, &v0, 120.min(m.ncols()))
        .map(|(_, hi)| hi.max(0.0).sqrt())
        .unwrap_or_else(|| m.clone().singular_values().iter().copied().fold(0.0, f64::max))
}

/// Smallest and largest Ritz values after `steps` Lanczos iterations.
fn lanczos_extremes(a: &dyn LinearOp, v0: &CVector, steps: usize) -> Option<(f64, f64)> {
    let n = a.dim();
    let mut basis: Vec<CVector> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let norm = v0.norm();
    if norm == 0.0 {
        return None;
    }
    let mut v = v0 / C64::new(norm, 0.0);
    for _ in 0..steps {
        let w = CVector::from_vec(a.apply(v.as_slice()));
        let a_k = v.dotc(&w).re;
        let mut w = w - &v * C64::new(a_k, 0.0);
        if let Some(prev) = basis.last() {
            w -= prev * C64::new(*beta.last().unwrap(), 0.0);
        }
        for _ in 0..2 {
            for b in basis.iter().chain(std::iter::once(&v)) {
                let p = b.dotc(&w);
                w -= b * p;
            }
        }
        alpha.push(a_k);
        basis.push(v.clone());
        let b = w.norm();
        if b < 1e-12 * (1.0 + a_k.abs()) || basis.len() == n {
            break;
        }
        beta.push(b);
        v = w / C64::new(b, 0.0);
    }
    let ev = tridiagonal_eigen(&alpha, &beta[..alpha.len() - 1]).ok()?.0;
    Some((ev[0], *ev.last().unwrap()))
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric tridiagonal.
pub fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut z = DMatrix::<f64>::identity(m, m);
    tql2(&mut d, &beta[..m.saturating_sub(1)], &mut z)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&k| d[k]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| z[(r, order[c])]);
    Ok((vals, vecs))
}

/// Implicit QL iteration on a symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `off`. Eigenvalues replace `d`; the rotations are
/// accumulated into the columns of `z`.
// nalgebra's SymmetricEigen loses accuracy when an off-diagonal entry is
// tiny but not negligible, which Lanczos hits on near-eigenvectors.
fn tql2(d: &mut [f64], off: &[f64], z: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    let eps = f64::EPSILON;
    let mut shift = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Argument("tridiagonal QL iteration did not converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for x in d.iter_mut().skip(l + 2) {
                    *x -= h;
                }
                shift += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..z.nrows() {
                        let h = z[(k, i + 1)];
                        z[(k, i + 1)] = s * z[(k, i)] + c * h;
                        z[(k, i)] = c * z[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    Ok(())
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    let mut d: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { ONE } else { ZERO };
            d = d.max((p[(r, c)] - target).norm());
        }
    }
    d
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_diff_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}
