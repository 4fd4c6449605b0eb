//! Integer-order Bessel functions of the first kind.
//!
//! Away from the origin we integrate
//! `J_l(x) = (1 / 2 pi) * integral over one period of cos(l t - x sin t) dt`
//! with the trapezoidal rule. The integrand is smooth and periodic, so the
//! rule converges geometrically: with `n` nodes the only error terms are the
//! aliases `J_{l +- k n}(x)`, negligible once `n` exceeds `|x| + l` by a
//! comfortable margin. That route is accurate in absolute terms only.
//!
//! When `x^2 <= 4 (l + 1)` the ascending series has no damaging
//! cancellation and gives full relative accuracy, which matters for the
//! tiny high-order values the convergence gains divide by.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 64;
pub const MAX_ARGUMENT: f64 = 1e3;

fn node_count(order: u32, x: f64) -> usize {
    // Aliases sit at orders >= n - l, far into the exponentially small
    // region beyond |x|.
    2 * (x.abs().ceil() as usize + order as usize) + 64
}

fn ascending_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^l / l!, built incrementally to avoid overflow.
    let mut term = (1..=order).fold(1.0, |acc, k| acc * half / k as f64);
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J_l(x)` for `0 <= l <= 64`, `|x| <= 1000`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > MAX_ORDER || !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::Domain { order, x });
    }
    if x == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    if x * x <= 4.0 * (order as f64 + 1.0) {
        return Ok(ascending_series(order, x));
    }
    let n = node_count(order, x);
    let step = 2.0 * PI / n as f64;
    let l = order as f64;
    let sum: f64 = (0..n)
        .map(|k| {
            let t = k as f64 * step;
            (l * t - x * t.sin()).cos()
        })
        .sum();
    Ok(sum / n as f64)
}
