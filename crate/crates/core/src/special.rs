//! Polynomial special functions: Laguerre, bivariate Hermite and
//! physicists' Hermite polynomials.
//!
//! Laguerre and Hermite polynomials are evaluated by their three-term
//! recurrences. The explicit sums are kept in the test module as oracles.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest argument accepted by [`factorial`].
pub const FACTORIAL_MAX: usize = 64;

static FACTORIALS: std::sync::OnceLock<[f64; FACTORIAL_MAX + 1]> = std::sync::OnceLock::new();

fn factorial_table() -> &'static [f64; FACTORIAL_MAX + 1] {
    FACTORIALS.get_or_init(|| {
        let mut t = [1.0; FACTORIAL_MAX + 1];
        for n in 1..=FACTORIAL_MAX {
            t[n] = t[n - 1] * n as f64;
        }
        t
    })
}

/// `n!` in floating point, for `n <= FACTORIAL_MAX`.
pub fn factorial(n: usize) -> Result<f64> {
    factorial_table()
        .get(n)
        .copied()
        .ok_or(Error::FactorialBound {
            index: n,
            max: FACTORIAL_MAX,
        })
}

/// Laguerre polynomial `L_n(x)`.
///
/// Uses `(m + 1) L_{m+1} = (2m + 1 - x) L_m - m L_{m-1}`; stable for the
/// orders and arguments the state normalizations need (`n <= 64`,
/// `|x| <= 100`).
pub fn laguerre(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + 1.0 - x) * cur - m * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Bivariate Hermite polynomial
/// `H_{p,q}(e1, e2) = sum_r (-1)^r p! q! / (r! (p-r)! (q-r)!) e1^(p-r) e2^(q-r)`.
///
/// The coefficients are built by the ratio
/// `c_{r+1} / c_r = -(p - r)(q - r) / (r + 1)`, so no factorial is formed.
pub fn bivariate_hermite(p: usize, q: usize, e1: Complex64, e2: Complex64) -> Complex64 {
    let rmax = p.min(q);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coeff = 1.0;
    for r in 0..=rmax {
        sum += coeff * e1.powu((p - r) as u32) * e2.powu((q - r) as u32);
        coeff *= -(((p - r) * (q - r)) as f64) / (r + 1) as f64;
    }
    sum
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite_phys(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for m in 1..n {
        let next = 2.0 * x * cur - 2.0 * m as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}
