use serde::Serialize;

use super::{BoundConstants, BoundReport};
use crate::error::{Error, Result};

/// Error of the one-step local approximation at buffer length `ell` for X
/// inside a ball of radius r.
pub fn local_approx_bound(ell: f64, r: f64, c: &BoundConstants) -> BoundReport {
    let i = &c.inputs;
    let offset = i.free.local_approx_offset;
    let lr = r.ln();
    let log_value = i.zeta0.ln() + i.c0 * i.qbar - ell / lr + offset * lr;
    BoundReport::new("local-approx", log_value)
        .input("l", ell)
        .input("r", r)
        .condition("r >= 3", r >= 3.0)
        .condition("l >= C0 log^2 r", ell >= offset * lr * lr)
}

fn main_exponent(big_r: f64, r0: f64, t: f64, c: &BoundConstants) -> f64 {
    let i = &c.inputs;
    i.c0 * i.qbar - c.main_rate() * (big_r - r0) / (t * big_r.ln()) + c.main_log_prefactor() * big_r.ln()
}

/// Error of approximating O_X0(t) by an operator on X0[R - r0], t >= 1.
pub fn main_lr_bound(big_r: f64, r0: f64, t: f64, c: &BoundConstants) -> Result<BoundReport> {
    if big_r <= 1.0 || t <= 0.0 {
        return Err(Error::Argument(format!("need R > 1 and t > 0, got R={big_r}, t={t}")));
    }
    let log_value = c.inputs.zeta0.ln() + main_exponent(big_r, r0, t, c);
    Ok(BoundReport::new("main-lr", log_value)
        .input("R", big_r)
        .input("r0", r0)
        .input("t", t)
        .condition("t >= 1", t >= 1.0)
        .condition("R > r0", big_r > r0))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LightCone {
    /// Smallest radius found with main-bound error at most delta zeta0.
    pub radius: f64,
    /// Gamma t log^2 t with the closed-form factor.
    pub closed_form_radius: f64,
    pub closed_form_factor: f64,
    /// Floor on the factor used by the closed form.
    pub factor_floor: f64,
    /// Whether the closed form alone already meets the target.
    pub closed_form_sufficient: bool,
}

/// Smallest G* with G/2 >= k log G for every G >= G*.
fn factor_floor(k: f64) -> f64 {
    if 2.0 * k <= std::f64::consts::E {
        return 1.0;
    }
    let h = |g: f64| g / 2.0 - k * g.ln();
    let mut lo = 2.0 * k;
    let mut hi = 4.0 * k;
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Radius beyond which the main bound drops below delta zeta0.
pub fn lightcone_radius(t: f64, delta: f64, c: &BoundConstants) -> Result<LightCone> {
    if t < std::f64::consts::E {
        return Err(Error::Argument(format!("light-cone radius needs t >= e, got {t}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Argument(format!("delta must lie in (0, 1], got {delta}")));
    }
    let i = &c.inputs;
    let rate = c.main_rate();
    let ratio = c.main_log_prefactor() / rate;
    let floor = factor_floor(ratio).max(i.free.lightcone_factor_floor.unwrap_or(1.0));
    let q = (i.c0 * i.qbar + (1.0 / delta).ln()) / rate;
    let factor = floor.max(4.0 * ratio + 2.0 * q);
    let lt = t.ln();
    let closed = factor * t * lt * lt;
    let target = delta.ln();
    let ok = |big_r: f64| main_exponent(big_r, 0.0, t, c) <= target;
    let mut radius = closed;
    let sufficient = ok(closed);
    if !sufficient {
        let mut lo = closed;
        let mut hi = closed * 2.0;
        while !ok(hi) {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Precondition("no finite light-cone radius".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        radius = hi;
    }
    Ok(LightCone {
        radius,
        closed_form_radius: closed,
        closed_form_factor: factor,
        factor_floor: floor,
        closed_form_sufficient: sufficient,
    })
}

/// Bound on |<O_X O_Y> - <O_X><O_Y>| in a gapped ground state at distance R.
pub fn clustering_bound(
    big_r: f64,
    gap: f64,
    norm_x: f64,
    norm_y: f64,
    c: &BoundConstants,
) -> Result<BoundReport> {
    if !(gap > 0.0) {
        return Err(Error::Argument(format!("spectral gap must be positive, got {gap}")));
    }
    if big_r <= 1.0 {
        return Err(Error::Argument(format!("need R > 1, got {big_r}")));
    }
    let f = &c.inputs.free;
    let log_value = f.clustering_prefactor.ln() + norm_x.ln() + norm_y.ln()
        - (f.clustering_rate * gap * big_r / big_r.ln()).sqrt();
    let inv = (1.0 / gap).ln();
    let threshold = f.clustering_threshold / gap * inv.max(0.0).powi(3);
    Ok(BoundReport::new("clustering", log_value)
        .input("R", big_r)
        .input("gap", gap)
        .input("norm_x", norm_x)
        .input("norm_y", norm_y)
        .condition("R >= threshold(gap)", big_r >= threshold))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuenchBounds {
    pub error: BoundReport,
    /// Cost of building the local unitary on X0[R].
    pub cost: BoundReport,
    /// One-dimensional cost at target error eps.
    pub cost_1d: BoundReport,
}

pub fn quench_bounds(big_r: f64, r0: f64, t: f64, eps: f64, c: &BoundConstants) -> Result<QuenchBounds> {
    if big_r <= 1.0 || t <= 0.0 {
        return Err(Error::Argument(format!("need R > 1 and t > 0, got R={big_r}, t={t}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let i = &c.inputs;
    let lr = big_r.ln();
    let err = i.c0 * i.qbar - c.quench_rate() * (big_r - r0) / (t * lr) + c.quench_log_prefactor() * lr;
    let kappa = i.free.cost_exponent;
    let cost = kappa * big_r.powf(i.dimension) * lr;
    let le = (1.0 / eps).ln();
    let lt = t.ln();
    let lle = if le > 0.0 { le.ln() } else { 0.0 };
    let cost_1d = kappa * (t * lt.powi(3) + t * le * lle * lle);
    Ok(QuenchBounds {
        error: BoundReport::new("quench-error", err)
            .input("R", big_r)
            .input("r0", r0)
            .input("t", t)
            .condition("t >= 1", t >= 1.0),
        cost: BoundReport::new("quench-cost", cost).input("R", big_r),
        cost_1d: BoundReport::new("quench-cost-1d", cost_1d)
            .input("t", t)
            .input("eps", eps)
            .condition("t >= e", t >= std::f64::consts::E),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BoundInputs, FreeConstants};

    fn consts() -> BoundConstants {
        BoundConstants::resolve(BoundInputs {
            c0: 1.0,
            qbar: 1.0,
            q0: 0.0,
            t0: 0.1,
            j_bar: 1.0,
            degree: 2.0,
            gamma: 3.0,
            lambda0: 2.0,
            dimension: 1.0,
            locality: 1.0,
            zeta0: 1.0,
            eta: 1.0,
            free: FreeConstants::default(),
        })
        .unwrap()
    }

    #[test]
    fn floor_closes_the_log_inequality() {
        for &k in &[0.5, 2.0, 10.0, 1e5] {
            let g = factor_floor(k);
            for m in [1.0, 1.5, 10.0, 1e3] {
                let x = g * m;
                assert!(x / 2.0 >= k * x.ln() - 1e-9 * x, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn radius_meets_target() {
        let c = consts();
        let lc = lightcone_radius(10.0, 1e-3, &c).unwrap();
        let b = main_lr_bound(lc.radius, 0.0, 10.0, &c).unwrap();
        assert!(b.log_value <= (1e-3f64).ln() + 1e-12);
    }

    #[test]
    fn clustering_decreasing() {
        let c = consts();
        let mut last = f64::INFINITY;
        for r in 10..=1000 {
            let v = clustering_bound(r as f64, 0.5, 1.0, 1.0, &c).unwrap().log_value;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn one_dimensional_cost_boundary() {
        let c = consts();
        let e = std::f64::consts::E;
        let q = quench_bounds(10.0, 0.0, e, (-1.0f64).exp(), &c).unwrap();
        assert!((q.cost_1d.log_value - e).abs() < 1e-12);
    }
}
