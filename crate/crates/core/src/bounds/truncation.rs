use serde::Serialize;

use super::{BoundConstants, BoundReport};
use crate::error::{Error, Result};

/// log of (c1~ l0 / q)^(c1~' l0 / (2 log r)).
fn decay_log(q: f64, ell0: f64, r: f64, c: &BoundConstants) -> f64 {
    0.5 * c.order_slope_low() * ell0 / r.ln() * (c.tail_scale() * ell0 / q).ln()
}

fn with_buffer_conditions(
    report: BoundReport,
    q: f64,
    ell0: f64,
    r: f64,
    size_x: usize,
    c: &BoundConstants,
) -> BoundReport {
    let i = &c.inputs;
    let lr = r.ln();
    let floor = 2.0 * (i.gamma.powi(3) * c.c1p(size_x) / c.c1pp).ln() + 6.0 * i.dimension * lr;
    report
        .condition("r >= 3", r >= 3.0)
        .condition("l0 above moment-order threshold", ell0 >= floor)
        .condition("l0 >= 6 log r / slope", ell0 >= 6.0 * lr / c.order_slope_low())
        .condition("l0 >= log^2 r", ell0 >= lr * lr)
        .condition("base <= 1", c.tail_scale() * ell0 <= q)
}

/// Bound on ||(Pi_{L,q} - 1) O_X(t) rho0||_1 for a region L at distance at
/// least l0 from X.
pub fn concentration_bound(
    q: usize,
    size_l: usize,
    ell0: f64,
    r: f64,
    size_x: usize,
    c: &BoundConstants,
) -> Result<BoundReport> {
    if q == 0 || size_l == 0 {
        return Err(Error::Argument("truncation q and region size must be positive".into()));
    }
    let i = &c.inputs;
    let qf = q as f64;
    let log_value = 2f64.ln()
        + c.c1pp.ln()
        + i.c0 * i.qbar
        + i.zeta0.ln()
        + (size_l as f64).ln()
        + decay_log(qf, ell0, r, c);
    let report = BoundReport::new("concentration", log_value)
        .input("q", qf)
        .input("size_l", size_l as f64)
        .input("l0", ell0)
        .input("r", r);
    Ok(with_buffer_conditions(report, qf, ell0, r, size_x, c))
}

/// Bound on the error of replacing the Hamiltonian by its truncation on L
/// during a window of length t0.
pub fn truncation_error_bound(
    q: usize,
    size_l: usize,
    ell0: f64,
    r: f64,
    size_x: usize,
    c: &BoundConstants,
) -> Result<BoundReport> {
    if q == 0 || size_l == 0 {
        return Err(Error::Argument("truncation q and region size must be positive".into()));
    }
    let i = &c.inputs;
    let qf = q as f64;
    let lf = size_l as f64;
    let log_value = (8.0 * 2f64.sqrt()).ln()
        + i.c0 * i.qbar
        + i.zeta0.ln()
        + i.t0.ln()
        + c.c1pp.ln()
        + i.degree.ln()
        + i.j_bar.ln()
        + qf.ln()
        + lf.ln()
        + (2.0 * lf + qf).ln()
        + decay_log(qf, ell0, r, c);
    let report = BoundReport::new("truncation-error", log_value)
        .input("q", qf)
        .input("size_l", lf)
        .input("l0", ell0)
        .input("r", r);
    Ok(with_buffer_conditions(report, qf, ell0, r, size_x, c))
}

/// Largest truncation searched by [`solve_eta`].
pub const ETA_Q_CAP: u64 = 1 << 53;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EtaSolution {
    /// Smallest admissible truncation.
    pub q: u64,
    /// q / l0
    pub eta: f64,
}

/// Smallest q whose truncation error, without the state prefactor, is at
/// most exp(-2 l0 / log r) / 2.
pub fn solve_eta(ell0: f64, r: f64, size_ltilde: usize, c: &BoundConstants) -> Result<EtaSolution> {
    solve_eta_capped(ell0, r, size_ltilde, ETA_Q_CAP, c)
}

pub fn solve_eta_capped(
    ell0: f64,
    r: f64,
    size_ltilde: usize,
    cap: u64,
    c: &BoundConstants,
) -> Result<EtaSolution> {
    if ell0 <= 0.0 || r <= 1.0 || size_ltilde == 0 || cap == 0 {
        return Err(Error::Argument("need l0 > 0, r > 1, a nonempty shell and a positive cap".into()));
    }
    let i = &c.inputs;
    let lf = size_ltilde as f64;
    let rhs = 0.5f64.ln() - 2.0 * ell0 / r.ln();
    let lhs = |q: u64| {
        let q = q as f64;
        (8.0 * 2f64.sqrt()).ln()
            + i.t0.ln()
            + c.c1pp.ln()
            + i.degree.ln()
            + i.j_bar.ln()
            + q.ln()
            + lf.ln()
            + (2.0 * lf + q).ln()
            + decay_log(q, ell0, r, c)
    };
    // lhs has derivative ((1 - a) 2|L| + (2 - a) q) / (q (2|L| + q)) in q, with a
    // the decay exponent, so it falls until q* and rises after
    let a = 0.5 * c.order_slope_low() * ell0 / r.ln();
    let turn = if a >= 2.0 {
        cap
    } else if a > 1.0 {
        ((2.0 * lf * (a - 1.0) / (2.0 - a)).ceil() as u64).clamp(1, cap)
    } else {
        1
    };
    if lhs(turn) > rhs {
        return Err(Error::Precondition(format!(
            "no truncation up to {cap} meets the target; residual gap {:.6e} in log",
            lhs(turn) - rhs
        )));
    }
    let (mut lo, mut hi) = (0u64, turn);
    if lhs(1) <= rhs {
        hi = 1;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if lhs(mid) <= rhs {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EtaSolution { q: hi, eta: hi as f64 / ell0 })
}

/// Bound on the error of restricting the truncated dynamics to the ball of
/// radius 2 l0 - 2k; only proven for t <= delta_t0.
pub fn short_lr_bound(ell0: f64, boundary_size: usize, t: f64, c: &BoundConstants) -> Result<BoundReport> {
    if t > c.delta_t0 {
        return Err(Error::Precondition(format!(
            "t = {t} exceeds the short-time window {:.6e}",
            c.delta_t0
        )));
    }
    let i = &c.inputs;
    let log_value = 2f64.ln()
        + 3.0
        + i.zeta0.ln()
        + c.c3.ln()
        + t.ln()
        + (boundary_size as f64).ln()
        + ell0.ln()
        - ell0 / (2.0 * i.locality);
    Ok(BoundReport::new("short-lr", log_value)
        .input("l0", ell0)
        .input("boundary_size", boundary_size as f64)
        .input("t", t)
        .condition("l0 >= 8k", ell0 >= 8.0 * i.locality))
}
