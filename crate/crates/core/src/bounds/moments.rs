use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ln_factorial, log_add, BoundConstants, BoundReport};
use crate::error::{Error, Result};
use crate::lattice::LatticeGraph;

/// Growth constant of the adjacency exponential estimate.
pub const ADJACENCY_CHI: f64 = 3.59;

/// Bound on tr(n_i^s rho(t)) for i at distance `d` from the support X of
/// the initial operator, valid for t <= t0.
pub fn moment_bound(s: u32, size_x: usize, d: f64, t: f64, c: &BoundConstants) -> Result<BoundReport> {
    if s == 0 {
        return Err(Error::Argument("moment order must be at least 1".into()));
    }
    if size_x == 0 {
        return Err(Error::Argument("initial operator needs a nonempty support".into()));
    }
    let i = &c.inputs;
    let sf = s as f64;
    let xf = size_x as f64;
    let common = i.c0 * i.qbar + 2.0 * i.zeta0.ln();
    let near = c.c1p(size_x).ln() + common + 3.0 * xf.ln() + sf * (c.c1 * sf * xf).ln() - d;
    let far = c.c1pp.ln() + common + sf * (c.c1 * sf).ln();
    Ok(BoundReport::new("moment", log_add(near, far))
        .input("s", sf)
        .input("size_x", xf)
        .input("distance", d)
        .input("t", t)
        .condition("t <= t0", t <= i.t0))
}

/// Bound on the first moment: 10 (N_X e^-d + n0 lambda0) e^(3 J dG t).
pub fn first_moment_bound(n_x: f64, n0: f64, d: f64, t: f64, c: &BoundConstants) -> BoundReport {
    let i = &c.inputs;
    let inner = n_x * (-d).exp() + n0 * i.lambda0;
    BoundReport::new("first-moment", 10f64.ln() + inner.ln() + 3.0 * i.j_bar * i.degree * t)
        .input("n_x", n_x)
        .input("n0", n0)
        .input("distance", d)
        .input("t", t)
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialMomentBounds {
    /// Bound on tr(n_i^s rho~) for a site outside the support.
    pub site: BoundReport,
    /// Bound on tr(n_X^s rho~).
    pub region: BoundReport,
}

/// Moments of the perturbed initial state OrhoO^dagger.
pub fn initial_moment_bounds(s: u32, size_x: usize, c: &BoundConstants) -> Result<InitialMomentBounds> {
    if size_x == 0 {
        return Err(Error::Argument("initial operator needs a nonempty support".into()));
    }
    let i = &c.inputs;
    let sf = s as f64;
    let xf = size_x as f64;
    let z2 = 2.0 * i.zeta0.ln();
    let site = z2 + i.c0 * (i.qbar + 1.0) + ln_factorial(s) - (sf + 1.0) * i.c0.ln();
    let region = 4f64.ln()
        + z2
        + (sf + 3.0) * (xf / i.c0).ln()
        + ln_factorial(s)
        + i.c0 * (i.qbar + 1.0 + i.q0 / xf);
    Ok(InitialMomentBounds {
        site: BoundReport::new("initial-moment-site", site).input("s", sf),
        region: BoundReport::new("initial-moment-region", region).input("s", sf).input("size_x", xf),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// Closed form with the moment order fixed by the distance.
    ClosedForm,
    /// Markov inequality minimized over the moment order.
    MarkovOptimized,
}

/// Bound on the probability of finding at least z0 bosons on a site at
/// distance `d` from X, with X inside a ball of radius `r`.
pub fn tail_bound(
    z0: usize,
    d: f64,
    size_x: usize,
    r: f64,
    t: f64,
    mode: TailMode,
    c: &BoundConstants,
) -> Result<BoundReport> {
    let i = &c.inputs;
    let z = z0 as f64;
    let report = match mode {
        TailMode::MarkovOptimized => {
            // order 0 is the trivial bound tr(rho~) <= zeta0^2
            let mut best = 2.0 * i.zeta0.ln();
            let mut best_s = 0u32;
            if z0 > 0 {
                for s in 1..=200u32 {
                    let v = moment_bound(s, size_x, d, t, c)?.log_value - s as f64 * z.ln();
                    if v < best {
                        best = v;
                        best_s = s;
                    }
                }
            }
            BoundReport::new("tail-markov", best).input("order", best_s as f64)
        }
        TailMode::ClosedForm => {
            let lr = r.ln();
            let base = c.tail_scale() * d / z;
            let log_value = 2f64.ln()
                + c.c1pp.ln()
                + i.c0 * i.qbar
                + 2.0 * i.zeta0.ln()
                + c.order_slope_low() * d / lr * base.ln();
            let window = d / (2.0 * (i.gamma.ln() + i.dimension * lr));
            let floor = 2.0 * (i.gamma.powi(3) * c.c1p(size_x) / c.c1pp).ln() + 6.0 * i.dimension * lr;
            BoundReport::new("tail-closed-form", log_value)
                .condition("r >= 3", r >= 3.0)
                .condition("size_x <= gamma r^D", size_x as f64 <= i.gamma * r.powf(i.dimension))
                .condition("distance above moment-order threshold", d >= floor)
                .condition("chosen moment order >= 1", window >= 1.0)
                .condition("base <= 1", base <= 1.0)
        }
    };
    Ok(report
        .input("z0", z)
        .input("distance", d)
        .input("size_x", size_x as f64)
        .input("r", r)
        .input("t", t)
        .condition("t <= t0", t <= i.t0))
}

/// Right side of the Cauchy-Schwarz estimate on
/// |tr(n_i^(s-s1) b_i b_j^dagger rho)| in terms of order p = s - s1 + 1
/// moments of the two sites.
pub fn cross_moment_bound(s: u32, s1: u32, m_i: f64, m_j: f64) -> Result<f64> {
    if s1 == 0 || s1 > s {
        return Err(Error::Argument(format!("need 1 <= s1 <= s, got s1={s1}, s={s}")));
    }
    let p = (s - s1 + 1) as f64;
    let w = 1.0 / (2.0 * p);
    Ok((1.0 - w) * m_i + w * m_j)
}

/// Entries of exp(J A t) for the adjacency matrix A against
/// C exp(v t - d_ij).
#[derive(Clone, Debug)]
pub struct AdjacencyCheck {
    pub exact: DMatrix<f64>,
    pub bound: DMatrix<f64>,
    pub velocity: f64,
    pub prefactor: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

pub fn adjacency_exp_bound(g: &LatticeGraph, j_bar: f64, t: f64) -> AdjacencyCheck {
    let a = g.adjacency_matrix();
    let n = a.nrows();
    let norm = nalgebra::SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // The adjacency matrix is nonnegative, so the series has no cancellation
    // and stays accurate entrywise even where the entries are ~e^-d.
    let diameter = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| g.dist(i, j) as usize).max().unwrap_or(0);
    let mut exact = DMatrix::<f64>::identity(n, n);
    let mut term = exact.clone();
    let x = j_bar * t;
    for k in 1..=(diameter + 80).max(4 * (x * norm).ceil() as usize + 80) {
        term = (&term * &a) * (x / k as f64);
        exact += &term;
    }
    let chi = ADJACENCY_CHI;
    let velocity = chi * j_bar * norm / 2.0;
    let prefactor = 2.0 * chi * chi / (chi - 1.0);
    let bound = DMatrix::from_fn(n, n, |i, j| prefactor * (velocity * t - g.dist(i, j) as f64).exp());
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for i in 0..n {
        for j in 0..n {
            let ratio = exact[(i, j)] / bound[(i, j)];
            max_ratio = max_ratio.max(ratio);
            if exact[(i, j)] > bound[(i, j)] * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    AdjacencyCheck { exact, bound, velocity, prefactor, max_ratio, violations }
}
