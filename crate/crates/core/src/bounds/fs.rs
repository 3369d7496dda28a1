//! The polynomials f_s with f_s(x + 1) - f_s(x) = s x^(s-1), f_s(0) = 0.

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 20;

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact coefficients a_0..a_s of f_s, lowest degree first.
pub fn fs_polynomial(s: u32) -> Result<Vec<BigRational>> {
    if s == 0 || s > MAX_ORDER {
        return Err(Error::Argument(format!("order s must lie in 1..={MAX_ORDER}, got {s}")));
    }
    let s_us = s as usize;
    let mut a = vec![BigRational::zero(); s_us + 1];
    // f(x+1) - f(x) = sum_k a_k sum_{j<k} C(k, j) x^j; match x^j for j = s-1 down to 0
    for j in (0..s).rev() {
        let target = if j == s - 1 { BigRational::from_integer(BigInt::from(s)) } else { BigRational::zero() };
        let mut rest = BigRational::zero();
        for k in (j + 2)..=s {
            rest += &a[k as usize] * BigRational::from_integer(binomial(k, j));
        }
        a[j as usize + 1] = (target - rest) / BigRational::from_integer(binomial(j + 1, j));
    }
    Ok(a)
}

pub fn eval_poly(coeffs: &[BigRational], x: i64) -> BigRational {
    let xr = BigRational::from_integer(BigInt::from(x));
    coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * &xr + c)
}

/// f_s(m) through its defining sum s * sum_{j<m} j^(s-1).
pub fn fs_by_sum(s: u32, m: u64) -> BigRational {
    let total: BigInt = (0..m).map(|j| num::pow(BigInt::from(j), s as usize - 1)).sum();
    BigRational::from_integer(total * BigInt::from(s))
}

#[derive(Clone, Debug, Serialize)]
pub struct FsCheckRow {
    pub s: u32,
    pub m: u64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub shifted_ok: bool,
    pub recursion_ok: bool,
}

impl FsCheckRow {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok && self.shifted_ok && self.recursion_ok
    }
}

/// Exact check of (m-1)^s <= f_s(m) <= m^s, f_s(m) + s^s/4 >= m^s/4 and the
/// defining difference identity for m = 1..=m_max.
pub fn fs_bracket_check(s: u32, m_max: u64) -> Result<Vec<FsCheckRow>> {
    let coeffs = fs_polynomial(s)?;
    let pow = |b: u64| BigRational::from_integer(num::pow(BigInt::from(b), s as usize));
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let s_pow = pow(s as u64);
    let mut rows = Vec::with_capacity(m_max as usize);
    let mut sum = BigInt::zero();
    for m in 1..=m_max {
        sum += num::pow(BigInt::from(m - 1), s as usize - 1);
        let f = eval_poly(&coeffs, m as i64);
        let f_prev = eval_poly(&coeffs, m as i64 - 1);
        let step = BigRational::from_integer(BigInt::from(s) * num::pow(BigInt::from(m - 1), s as usize - 1));
        let by_sum = BigRational::from_integer(&sum * BigInt::from(s));
        rows.push(FsCheckRow {
            s,
            m,
            lower_ok: pow(m - 1) <= f,
            upper_ok: f <= pow(m),
            shifted_ok: &f + &s_pow * &quarter >= pow(m) * &quarter,
            recursion_ok: (&f - &f_prev - step).abs().is_zero() && f == by_sum,
        });
    }
    Ok(rows)
}

/// Coefficients as f64 for display.
pub fn fs_coefficients_f64(s: u32) -> Result<Vec<f64>> {
    use num::ToPrimitive;
    Ok(fs_polynomial(s)?.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
}
