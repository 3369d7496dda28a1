//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use boson_lr::fock::{FockBasis, DEFAULT_BASIS_CAP};
use boson_lr::lattice::{LatticeGraph, LatticeKind};
use boson_lr::linalg::{CMatrix, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn chain_basis(n: usize, cutoff: u8, sector: Option<usize>) -> (Arc<LatticeGraph>, Arc<FockBasis>) {
    let g = Arc::new(LatticeGraph::build(LatticeKind::Chain, &[n]).unwrap());
    let b = FockBasis::uniform(g.clone(), cutoff, sector, DEFAULT_BASIS_CAP).unwrap();
    (g, b)
}

/// A basis of exactly `dim` states: one site with cutoff dim - 1, or two
/// sites when dim exceeds the u8 range and factors.
pub fn basis_of_dim(dim: usize) -> Arc<FockBasis> {
    if dim <= 256 {
        let g = Arc::new(LatticeGraph::build(LatticeKind::Chain, &[1]).unwrap());
        return FockBasis::new(g, vec![(dim - 1) as u8], None, DEFAULT_BASIS_CAP).unwrap();
    }
    let a = (2..=256).rev().find(|a| dim.is_multiple_of(*a) && dim / a <= 256).expect("dimension must factor");
    let g = Arc::new(LatticeGraph::build(LatticeKind::Chain, &[2]).unwrap());
    FockBasis::new(g, vec![(a - 1) as u8, (dim / a - 1) as u8], None, DEFAULT_BASIS_CAP).unwrap()
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&m + m.adjoint()) * C64::new(0.5 / (n as f64).sqrt(), 0.0)
}

pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Adaptive Dormand-Prince 5(4) integration of dY/dtau = f(tau, Y) for a
/// list of matrices.
pub fn dopri5(
    f: impl Fn(f64, &[CMatrix]) -> Vec<CMatrix>,
    y0: Vec<CMatrix>,
    t_end: f64,
    tol: f64,
) -> Vec<CMatrix> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let combine = |y: &[CMatrix], ks: &[Vec<CMatrix>], w: &[f64], h: f64| -> Vec<CMatrix> {
        y.iter()
            .enumerate()
            .map(|(p, yp)| {
                let mut out = yp.clone();
                for (k, &wk) in ks.iter().zip(w) {
                    if wk != 0.0 {
                        out += &k[p] * C64::new(h * wk, 0.0);
                    }
                }
                out
            })
            .collect()
    };
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 100.0).max(1e-8);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut ks: Vec<Vec<CMatrix>> = Vec::with_capacity(7);
        for s in 0..7 {
            let ys = combine(&y, &ks, &A[s][..s], h);
            ks.push(f(t + C[s] * h, &ys));
        }
        let y5 = combine(&y, &ks, &B5, h);
        let y4 = combine(&y, &ks, &B4, h);
        let err = y5
            .iter()
            .zip(&y4)
            .map(|(a, b)| (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm())))
            .fold(0.0, f64::max);
        if err <= tol {
            t += h;
            y = y5;
        }
        let factor = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
    }
    y
}

/// Time-ordered exponential of -i exp(-i A tau) h exp(i A tau) over [0, t],
/// integrated together with exp(-i A tau) itself.
pub fn time_ordered_oracle(a: &CMatrix, h: &CMatrix, t: f64, tol: f64) -> CMatrix {
    let n = a.nrows();
    let mi = C64::new(0.0, -1.0);
    let rhs = |_: f64, y: &[CMatrix]| {
        let e = &y[0];
        let u = &y[1];
        let de = (a * e) * mi;
        let hu = e * (h * (e.adjoint() * u));
        vec![de, hu * mi]
    };
    let out = dopri5(rhs, vec![CMatrix::identity(n, n), CMatrix::identity(n, n)], t, tol);
    out[1].clone()
}

/// Least-squares line through (x, y); returns slope, intercept, R^2.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}
