//! Deterministic quadrature, grid search and root bracketing.
//!
//! Every phase-space integral in the crate goes through one of two rules:
//!
//! * composite Gauss–Legendre panels on a truncated box ([`IntegrationConfig`],
//!   [`AxisRule`]), used for every outer integral and for thresholded tails;
//! * Gauss–Hermite nodes around a known Gaussian centre ([`GaussHermite`]),
//!   used for inner integrals whose integrand is exactly
//!   `exp(-2 (x - c)^2) * polynomial(x)`. With `m` nodes the rule is exact for
//!   polynomial degree `2m - 1`.
//!
//! Summation order is fixed by the node order, so repeated runs are
//! bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let nf = n as f64;
    let d = nf * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Hermite nodes and weights for the weight `exp(-t^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "Gauss-Hermite rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mf = m as f64;
        let mut z = 0.0;
        for i in 0..(m + 1) / 2 {
            // Initial guesses from Numerical Recipes' gauher.
            z = match i {
                0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * mf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            for _ in 0..100 {
                let (p, d) = hermite_function_with_derivative(m, z, pim4);
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            let (_, pp) = hermite_function_with_derivative(m, z, pim4);
            nodes[i] = z;
            nodes[m - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[m - 1 - i] = weights[i];
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        // Ascending order.
        nodes.reverse();
        weights.reverse();
        Self { nodes, weights }
    }

    /// Number of nodes that integrates `exp(-2 (x-c)^2) * p(x)` exactly when
    /// `p` has degree at most `degree`.
    pub fn exact_for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ f(x) dx` for `f(x) = exp(-2 (x - center)^2) * p(x)`.
    ///
    /// The rule is applied to `f(x) exp(2 (x - center)^2)`; it is exact when
    /// `p` is a polynomial of degree below `2 * len`.
    pub fn integrate_unit_gaussian(&self, center: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut sum = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let x = center + t * std::f64::consts::FRAC_1_SQRT_2;
            sum += w * f(x) * (t * t).exp();
        }
        sum * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Normalized recurrence for Hermite functions, returning `(psi_m, psi_m')`
/// up to the common factor.
fn hermite_function_with_derivative(m: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * m as f64).sqrt() * p2)
}

/// Box truncation and node budget for composite Gauss–Legendre integration.
///
/// Each axis of `[-half_width, half_width]` is split into
/// `nodes / panel_order` equal panels, each carrying a `panel_order`-point
/// rule. Both counts are odd, so the origin is always a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub half_width: f64,
    pub nodes: usize,
    pub panel_order: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            nodes: 121,
            panel_order: 11,
        }
    }
}

impl IntegrationConfig {
    pub const MIN_NODES: usize = 21;

    /// Default node budget with the box sized for amplitude `|alpha|`.
    pub fn for_amplitude(max_abs_alpha: f64) -> Self {
        Self {
            half_width: max_abs_alpha + 6.0,
            ..Self::default()
        }
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn panels(&self) -> usize {
        self.nodes / self.panel_order
    }

    /// Roughly doubles the node count, keeping the panel count odd.
    pub fn refined(&self) -> Self {
        Self {
            nodes: (2 * self.panels() + 1) * self.panel_order,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::invalid("half_width", "must be finite and positive"));
        }
        if self.nodes < Self::MIN_NODES || self.nodes % 2 == 0 {
            return Err(Error::invalid(
                "nodes",
                format!("must be odd and at least {}", Self::MIN_NODES),
            ));
        }
        if self.panel_order == 0 || self.panel_order % 2 == 0 {
            return Err(Error::invalid("panel_order", "must be odd"));
        }
        if self.nodes % self.panel_order != 0 {
            return Err(Error::invalid(
                "nodes",
                format!("must be a multiple of the panel order {}", self.panel_order),
            ));
        }
        Ok(())
    }

    /// The symmetric axis rule on `[-half_width, half_width]`.
    pub fn axis(&self) -> Result<AxisRule> {
        self.validate()?;
        Ok(AxisRule::composite(
            -self.half_width,
            self.half_width,
            self.panels(),
            self.panel_order,
        ))
    }

    /// An axis rule on an arbitrary interval with the same panel density.
    pub fn axis_on(&self, lo: f64, hi: f64) -> Result<AxisRule> {
        self.validate()?;
        let width = 2.0 * self.half_width / self.panels() as f64;
        let panels = (((hi - lo) / width).ceil() as usize).max(1);
        Ok(AxisRule::composite(lo, hi, panels, self.panel_order))
    }
}

/// Nodes and weights of a one-dimensional composite rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    pub fn composite(lo: f64, hi: f64, panels: usize, order: usize) -> Self {
        let gl = GaussLegendre::new(order);
        let h = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let mid = a + 0.5 * h;
            for (&t, &w) in gl.nodes().iter().zip(gl.weights()) {
                nodes.push(mid + 0.5 * h * t);
                weights.push(0.5 * h * w);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite { at: vec![x] });
            }
            sum += w * v;
        }
        Ok(sum)
    }
}

/// Integrates `f` over the `dim`-dimensional box described by `config`.
///
/// `dim` must be 1, 2 or 4; the tensor product is evaluated as nested sums
/// with the last coordinate innermost.
pub fn integrate(f: impl Fn(&[f64]) -> f64, config: &IntegrationConfig, dim: usize) -> Result<f64> {
    let axis = config.axis()?;
    match dim {
        1 => integrate_nd::<1>(&f, &axis),
        2 => integrate_nd::<2>(&f, &axis),
        4 => integrate_nd::<4>(&f, &axis),
        _ => Err(Error::invalid("dim", "must be 1, 2 or 4")),
    }
}

fn integrate_nd<const D: usize>(f: &impl Fn(&[f64]) -> f64, axis: &AxisRule) -> Result<f64> {
    let n = axis.len();
    let mut idx = [0usize; D];
    let mut point = [0.0; D];
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for d in 0..D {
            point[d] = axis.nodes[idx[d]];
            w *= axis.weights[idx[d]];
        }
        let v = f(&point);
        if !v.is_finite() {
            return Err(Error::NonFinite { at: point.to_vec() });
        }
        total += w * v;
        for d in (0..D).rev() {
            idx[d] += 1;
            if idx[d] < n {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    Ok(total)
}

/// [`integrate`] plus a refinement pass; fails with
/// [`Error::NotConverged`] when the two estimates differ by more than `tol`.
pub fn integrate_checked(
    f: impl Fn(&[f64]) -> f64,
    config: &IntegrationConfig,
    dim: usize,
    tol: f64,
) -> Result<f64> {
    let coarse = integrate(&f, config, dim)?;
    let fine = integrate(&f, &config.refined(), dim)?;
    if (coarse - fine).abs() > tol {
        return Err(Error::NotConverged { coarse, fine });
    }
    Ok(fine)
}

/// Samples of a function on a rectangular grid, stored row-major with the
/// `xs` index outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl Grid2D {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::invalid("grid", "axes must be non-empty"));
        }
        if values.len() != xs.len() * ys.len() {
            return Err(Error::invalid("grid", "value count does not match the axes"));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::invalid("grid", "axes must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid", "values must be finite"));
        }
        Ok(Self { xs, ys, values })
    }

    /// Tabulates `f` over the given axes.
    pub fn tabulate(xs: Vec<f64>, ys: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(xs, ys, values)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }
}

/// Location and value of the largest sample. Ties go to the lexicographically
/// smallest `(x, y)`.
pub fn argmax_on_grid(grid: &Grid2D) -> ((f64, f64), f64) {
    let ny = grid.ys.len();
    let mut best = 0;
    for (k, &v) in grid.values.iter().enumerate() {
        if v > grid.values[best] {
            best = k;
        }
    }
    ((grid.xs[best / ny], grid.ys[best % ny]), grid.values[best])
}

/// Default bracket tolerance for [`find_root`].
pub const ROOT_TOL: f64 = 1e-6;

/// Bisection on `[lo, hi]` until the bracket is no wider than `tol`.
pub fn find_root(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo * fhi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
