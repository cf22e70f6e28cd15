//! Secret key rate under the beam-splitter ("superior channel") attack.
//!
//! Eve replaces the lossy line by a beam splitter, keeps the reflected mode
//! and measures the same quadrature as Bob once the basis is announced. Only
//! the horizontal basis is analysed: the vertical one follows from phase
//! covariance. For the signal pair `|1,1,±α⟩` (or `|±α⟩`) the pipeline is
//!
//! 1. `P_±(β_r, ε_r)`: output Wigner function with both imaginary parts
//!    integrated out;
//! 2. Bob's marginal `P'_±(β_r)` and the post-selected tails `P(0)`, `P(1)`,
//!    `r_acc = (P(0) + P(1)) / 2`;
//! 3. Shannon information `I_AB` from the error profile
//!    `δ(β_r) = P'_+(-β_r) / (P'_+(β_r) + P'_+(-β_r))`;
//! 4. Eve's accepted-conditional densities `𝒫_±(ε_r)`, the collision
//!    probability `P_c` and the privacy-amplification cost `τ = 1 + log₂ P_c`;
//! 5. `S_AB = r_acc (I_AB - τ)`.
//!
//! The inner imaginary-part integral is evaluated in the rotated variables
//! `u = Tβ - Rε`, `v = Rβ + Tε` (unit Jacobian), where it factorizes into the
//! input's quadrature marginal times the vacuum marginal. The input marginal
//! is a Gaussian times a polynomial of degree `2k`, which Gauss–Hermite
//! integrates exactly. [`JointDensity::eval_direct`] keeps the literal
//! two-dimensional integral as a cross-check.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{joint_wigner_with, transmission_from_distance, BeamSplitter, ChannelSpec};
use crate::error::{Error, Result};
use crate::numerics::{argmax_on_grid, integrate, AxisRule, GaussHermite, Grid2D, IntegrationConfig};
use crate::state::{PascsParams, PascsWigner, PhasePoint, StateFamily};

/// Acceptance below which conditional quantities are undefined.
pub const MIN_ACCEPTANCE: f64 = 1e-15;

/// Which member of the horizontal signal pair was sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Signal family, amplitude and Eve's beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub family: StateFamily,
    pub alpha: f64,
    pub bs: BeamSplitter,
}

impl AttackScenario {
    pub fn new(family: StateFamily, alpha: f64, bs: BeamSplitter) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite and positive"));
        }
        Ok(Self { family, alpha, bs })
    }

    pub fn with_transmission(family: StateFamily, alpha: f64, t_squared: f64) -> Result<Self> {
        Self::new(family, alpha, BeamSplitter::from_transmission(t_squared)?)
    }

    pub fn params(&self, sign: Sign) -> PascsParams {
        self.family.params(Complex64::new(sign.factor() * self.alpha, 0.0))
    }
}

fn vacuum_marginal(x: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * x * x).exp()
}

/// `P_±(β_r, ε_r)` for one scenario and sign.
#[derive(Debug, Clone)]
pub struct JointDensity {
    wigner: PascsWigner,
    bs: BeamSplitter,
    gh: GaussHermite,
}

impl JointDensity {
    pub fn new(scenario: &AttackScenario, sign: Sign) -> Result<Self> {
        let wigner = PascsWigner::new(scenario.params(sign))?;
        let gh = GaussHermite::exact_for_degree(wigner.polynomial_degree());
        Ok(Self {
            wigner,
            bs: scenario.bs,
            gh,
        })
    }

    /// Overrides the number of Gauss–Hermite nodes of the inner integral.
    pub fn with_inner_nodes(mut self, m: usize) -> Self {
        self.gh = GaussHermite::new(m.max(1));
        self
    }

    pub fn inner_nodes(&self) -> usize {
        self.gh.nodes().len()
    }

    /// `∫ W_in(u + i y) dy`, the input's homodyne density at `u`.
    pub fn input_marginal(&self, u: f64) -> f64 {
        let center = self.wigner.params().alpha.im;
        self.gh
            .integrate_unit_gaussian(center, |y| self.wigner.eval(PhasePoint::new(u, y)))
    }

    /// Joint density; tiny negative rounding residue is clamped to zero.
    pub fn eval(&self, beta_r: f64, eps_r: f64) -> f64 {
        let (t, r) = (self.bs.t(), self.bs.r());
        let u = t * beta_r - r * eps_r;
        let v = r * beta_r + t * eps_r;
        (self.input_marginal(u) * vacuum_marginal(v)).max(0.0)
    }

    /// The same density from the literal integral over `(β_i, ε_i)` of the
    /// two-mode Wigner function.
    pub fn eval_direct(&self, beta_r: f64, eps_r: f64, config: &IntegrationConfig) -> Result<f64> {
        integrate(
            |x| {
                joint_wigner_with(
                    &self.wigner,
                    &self.bs,
                    PhasePoint::new(beta_r, x[0]),
                    PhasePoint::new(eps_r, x[1]),
                )
            },
            config,
            2,
        )
    }
}

/// `P_±(β_r, ε_r)`.
pub fn joint_prob(scenario: &AttackScenario, sign: Sign, beta_r: f64, eps_r: f64) -> Result<f64> {
    Ok(JointDensity::new(scenario, sign)?.eval(beta_r, eps_r))
}

/// Bob's marginal `P'_±(β_r) = ∫ P_±(β_r, ε_r) dε_r`.
pub fn bob_marginal(
    scenario: &AttackScenario,
    sign: Sign,
    beta_r: f64,
    config: &IntegrationConfig,
) -> Result<f64> {
    let density = JointDensity::new(scenario, sign)?;
    config.axis()?.integrate(|e| density.eval(beta_r, e))
}

/// Tabulates `P_±` on a square grid (e.g. for locating its maximum).
pub fn joint_prob_grid(scenario: &AttackScenario, sign: Sign, axis: &[f64]) -> Result<Grid2D> {
    let density = JointDensity::new(scenario, sign)?;
    Grid2D::tabulate(axis.to_vec(), axis.to_vec(), |b, e| density.eval(b, e))
}

/// Panel layout for the key-rate grid.
///
/// Panels of width `panel_width` tile `[-L, L]` with
/// `L = ceil((α + margin) / panel_width) · panel_width`, each carrying a
/// `panel_order`-point Gauss–Legendre rule. Post-selection thresholds are
/// snapped to panel boundaries, so tail integrals never split a panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateConfig {
    pub panel_width: f64,
    pub panel_order: usize,
    pub margin: f64,
}

impl Default for KeyRateConfig {
    fn default() -> Self {
        Self {
            panel_width: 0.05,
            panel_order: 3,
            margin: 6.0,
        }
    }
}

impl KeyRateConfig {
    /// Twice the nodes per axis.
    pub fn refined(&self) -> Self {
        Self {
            panel_order: 2 * self.panel_order,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.panel_width > 0.0 && self.panel_width.is_finite()) {
            return Err(Error::invalid("panel_width", "must be finite and positive"));
        }
        if self.panel_order == 0 {
            return Err(Error::invalid("panel_order", "must be positive"));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::invalid("margin", "must be finite and positive"));
        }
        Ok(())
    }
}

/// Post-selection tails of Bob's marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub p0: f64,
    pub p1: f64,
    pub r_acc: f64,
}

/// Every intermediate of the key-rate pipeline at one `(α, β_c, T²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub family: StateFamily,
    pub alpha: f64,
    /// Requested threshold.
    pub beta_c: f64,
    /// Threshold actually used (nearest panel boundary).
    pub beta_c_grid: f64,
    pub grid_resolution: f64,
    pub t_squared: f64,
    pub p0: f64,
    pub p1: f64,
    pub r_acc: f64,
    pub i_ab: f64,
    pub p_c: f64,
    pub tau: f64,
    /// Raw rate in bits per pulse; negative when Eve knows too much.
    pub s_ab: f64,
    /// `max(s_ab, 0)`.
    pub s_ab_usable: f64,
}

impl KeyRateReport {
    /// Checks the structural invariants up to `tol`; returns a description of
    /// the first violation.
    pub fn check_invariants(&self, tol: f64) -> std::result::Result<(), String> {
        let within = |v: f64, lo: f64, hi: f64| v >= lo - tol && v <= hi + tol;
        let checks: [(bool, &str); 7] = [
            (within(self.p0, 0.0, 1.0), "p0 outside [0, 1]"),
            (within(self.p1, 0.0, 1.0), "p1 outside [0, 1]"),
            ((self.r_acc - 0.5 * (self.p0 + self.p1)).abs() <= tol, "r_acc != (p0 + p1) / 2"),
            (within(self.i_ab, 0.0, 1.0), "i_ab outside [0, 1]"),
            (within(self.p_c, 0.5, 1.0), "p_c outside [1/2, 1]"),
            ((self.tau - (1.0 + self.p_c.log2())).abs() <= tol && within(self.tau, 0.0, 1.0), "tau inconsistent"),
            ((self.s_ab - self.r_acc * (self.i_ab - self.tau)).abs() <= tol, "s_ab != r_acc (i_ab - tau)"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, what)) => Err(format!(
                "{what} (family={} alpha={} beta_c={} t2={})",
                self.family, self.alpha, self.beta_c, self.t_squared
            )),
            None => Ok(()),
        }
    }
}

fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// `P_+` tabulated once on the panel grid; every threshold reuses it.
///
/// `P_-(β, ε) = P_+(-β, -ε)`, and the grid is symmetric, so the minus-sign
/// quantities are read off by index reflection.
#[derive(Debug, Clone)]
pub struct KeyRateGrid {
    scenario: AttackScenario,
    config: KeyRateConfig,
    axis: AxisRule,
    /// Panels on each side of the origin.
    half_panels: usize,
    /// `P_+(β_i, ε_j)`, row-major in `i`.
    values: Vec<f64>,
    /// `P'_+(β_i)`.
    bob: Vec<f64>,
    /// Per panel `p`, the vector `Σ_{i ∈ p} w_i P_+(β_i, ε_j)` over `j`.
    panel_columns: Vec<Vec<f64>>,
}

impl KeyRateGrid {
    pub fn new(scenario: &AttackScenario, config: &KeyRateConfig) -> Result<Self> {
        config.validate()?;
        let h = config.panel_width;
        let half_panels = ((scenario.alpha + config.margin) / h).ceil() as usize;
        let half_width = half_panels as f64 * h;
        let axis = AxisRule::composite(-half_width, half_width, 2 * half_panels, config.panel_order);
        let density = JointDensity::new(scenario, Sign::Plus)?;
        let n = axis.len();
        let rows: Vec<Vec<f64>> = axis
            .nodes
            .par_iter()
            .map(|&b| axis.nodes.iter().map(|&e| density.eval(b, e)).collect())
            .collect();
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                at: vec![axis.nodes[k / n], axis.nodes[k % n]],
            });
        }
        let bob: Vec<f64> = (0..n)
            .map(|i| {
                values[i * n..(i + 1) * n]
                    .iter()
                    .zip(&axis.weights)
                    .map(|(p, w)| p * w)
                    .sum()
            })
            .collect();
        let order = config.panel_order;
        let panel_columns = (0..2 * half_panels)
            .map(|p| {
                let mut col = vec![0.0; n];
                for i in p * order..(p + 1) * order {
                    let w = axis.weights[i];
                    for (c, v) in col.iter_mut().zip(&values[i * n..(i + 1) * n]) {
                        *c += w * v;
                    }
                }
                col
            })
            .collect();
        Ok(Self {
            scenario: *scenario,
            config: *config,
            axis,
            half_panels,
            values,
            bob,
            panel_columns,
        })
    }

    pub fn scenario(&self) -> &AttackScenario {
        &self.scenario
    }

    pub fn nodes(&self) -> &[f64] {
        &self.axis.nodes
    }

    pub fn half_width(&self) -> f64 {
        self.half_panels as f64 * self.config.panel_width
    }

    /// `P'_+` at every node.
    pub fn bob_marginal(&self) -> &[f64] {
        &self.bob
    }

    /// Total mass of `P_+` on the grid.
    pub fn total_mass(&self) -> f64 {
        self.bob.iter().zip(&self.axis.weights).map(|(b, w)| b * w).sum()
    }

    /// Covariance of `(β_r, ε_r)` under `P_+`.
    pub fn covariance(&self) -> f64 {
        let n = self.axis.len();
        let (mut m, mut mb, mut me, mut mbe) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let (b, wb) = (self.axis.nodes[i], self.axis.weights[i]);
            for j in 0..n {
                let (e, we) = (self.axis.nodes[j], self.axis.weights[j]);
                let p = wb * we * self.values[i * n + j];
                m += p;
                mb += p * b;
                me += p * e;
                mbe += p * b * e;
            }
        }
        mbe / m - (mb / m) * (me / m)
    }

    /// Number of panel widths in the snapped threshold.
    fn snap(&self, beta_c: f64) -> Result<usize> {
        if !(beta_c >= 0.0 && beta_c.is_finite()) {
            return Err(Error::invalid("beta_c", "must be finite and non-negative"));
        }
        Ok((beta_c / self.config.panel_width).round() as usize)
    }

    /// Node index ranges `(lower tail, upper tail)` for a snapped threshold.
    fn tails(&self, steps: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let order = self.config.panel_order;
        let n = self.axis.len();
        let steps = steps.min(self.half_panels);
        let lo_end = (self.half_panels - steps) * order;
        let hi_start = (self.half_panels + steps) * order;
        (0..lo_end, hi_start..n)
    }

    pub fn acceptance(&self, beta_c: f64) -> Result<Acceptance> {
        let (lower, upper) = self.tails(self.snap(beta_c)?);
        let tail = |r: std::ops::Range<usize>| -> f64 {
            r.map(|i| self.axis.weights[i] * self.bob[i]).sum()
        };
        let p0 = tail(lower);
        let p1 = tail(upper);
        Ok(Acceptance {
            p0,
            p1,
            r_acc: 0.5 * (p0 + p1),
        })
    }

    pub fn shannon_info(&self, beta_c: f64) -> Result<f64> {
        let acc = self.accepted(beta_c)?;
        let (_, upper) = self.tails(self.snap(beta_c)?);
        let n = self.axis.len();
        let mut sum = 0.0;
        for i in upper {
            let plus = self.bob[i];
            let minus = self.bob[n - 1 - i];
            let both = plus + minus;
            if both <= 0.0 {
                continue;
            }
            let delta = minus / both;
            sum += self.axis.weights[i] * both * (1.0 - binary_entropy(delta));
        }
        Ok(sum / (acc.p0 + acc.p1))
    }

    /// `(P_c, τ)`.
    pub fn collision_probability(&self, beta_c: f64) -> Result<(f64, f64)> {
        let acc = self.accepted(beta_c)?;
        let steps = self.snap(beta_c)?.min(self.half_panels);
        let n = self.axis.len();
        let mut cond = vec![0.0; n];
        let panels = (0..self.half_panels - steps).chain(self.half_panels + steps..2 * self.half_panels);
        for p in panels {
            for (c, v) in cond.iter_mut().zip(&self.panel_columns[p]) {
                *c += v;
            }
        }
        let norm = acc.p0 + acc.p1;
        let mut p_c = 0.0;
        for j in 0..n {
            let a = cond[j] / norm;
            let b = cond[n - 1 - j] / norm;
            if a < 1e-300 && b < 1e-300 {
                continue;
            }
            p_c += self.axis.weights[j] * (a * a + b * b) / (a + b);
        }
        p_c *= 0.5;
        Ok((p_c, 1.0 + p_c.log2()))
    }

    fn accepted(&self, beta_c: f64) -> Result<Acceptance> {
        let acc = self.acceptance(beta_c)?;
        if acc.r_acc <= MIN_ACCEPTANCE {
            return Err(Error::ZeroAcceptance { r_acc: acc.r_acc });
        }
        Ok(acc)
    }

    pub fn report(&self, beta_c: f64) -> Result<KeyRateReport> {
        let acc = self.accepted(beta_c)?;
        let i_ab = self.shannon_info(beta_c)?;
        let (p_c, tau) = self.collision_probability(beta_c)?;
        let s_ab = acc.r_acc * (i_ab - tau);
        Ok(KeyRateReport {
            family: self.scenario.family,
            alpha: self.scenario.alpha,
            beta_c,
            beta_c_grid: self.snap(beta_c)? as f64 * self.config.panel_width,
            grid_resolution: self.config.panel_width,
            t_squared: self.scenario.bs.transmission(),
            p0: acc.p0,
            p1: acc.p1,
            r_acc: acc.r_acc,
            i_ab,
            p_c,
            tau,
            s_ab,
            s_ab_usable: s_ab.max(0.0),
        })
    }
}

pub fn acceptance(scenario: &AttackScenario, beta_c: f64, config: &KeyRateConfig) -> Result<Acceptance> {
    KeyRateGrid::new(scenario, config)?.acceptance(beta_c)
}

pub fn shannon_info(scenario: &AttackScenario, beta_c: f64, config: &KeyRateConfig) -> Result<f64> {
    KeyRateGrid::new(scenario, config)?.shannon_info(beta_c)
}

pub fn collision_probability(
    scenario: &AttackScenario,
    beta_c: f64,
    config: &KeyRateConfig,
) -> Result<(f64, f64)> {
    KeyRateGrid::new(scenario, config)?.collision_probability(beta_c)
}

pub fn secret_key_rate(
    scenario: &AttackScenario,
    beta_c: f64,
    config: &KeyRateConfig,
) -> Result<KeyRateReport> {
    KeyRateGrid::new(scenario, config)?.report(beta_c)
}

/// Inclusive, evenly spaced sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepAxis {
    pub const ALPHA: SweepAxis = SweepAxis {
        start: 0.1,
        stop: 2.5,
        step: 0.05,
    };
    pub const BETA_C: SweepAxis = SweepAxis {
        start: 0.0,
        stop: 2.5,
        step: 0.05,
    };

    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::invalid("range", "bounds must be finite"));
        }
        if stop < start {
            return Err(Error::invalid("range", "stop must not precede start"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("range", "step must be positive"));
        }
        Ok(Self { start, stop, step })
    }

    /// A single value.
    pub fn point(v: f64) -> Self {
        Self {
            start: v,
            stop: v,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                // strip accumulated representation noise (0.15000000000000002)
                (v * 1e10).round() / 1e10
            })
            .collect()
    }
}

/// Key-rate reports over an `(α, β_c)` grid with the located maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: StateFamily,
    pub t_squared: f64,
    pub alphas: Vec<f64>,
    pub beta_cs: Vec<f64>,
    /// Row-major with `α` outermost.
    pub reports: Vec<KeyRateReport>,
    pub best: KeyRateReport,
}

impl SweepResult {
    /// Raw `S_AB` over the grid.
    pub fn s_ab_grid(&self) -> Grid2D {
        Grid2D {
            xs: self.alphas.clone(),
            ys: self.beta_cs.clone(),
            values: self.reports.iter().map(|r| r.s_ab).collect(),
        }
    }
}

/// Sweeps `(α, β_c)` at fixed transmission. One grid is tabulated per `α`;
/// points are independent and evaluated in parallel, with output order fixed
/// by grid index.
pub fn sweep_keyrate(
    family: StateFamily,
    t_squared: f64,
    alpha_axis: &SweepAxis,
    beta_c_axis: &SweepAxis,
    config: &KeyRateConfig,
) -> Result<SweepResult> {
    let bs = BeamSplitter::from_transmission(t_squared)?;
    let alphas = alpha_axis.values();
    let beta_cs = beta_c_axis.values();
    let rows: Vec<Vec<KeyRateReport>> = alphas
        .par_iter()
        .map(|&alpha| {
            let grid = KeyRateGrid::new(&AttackScenario::new(family, alpha, bs)?, config)?;
            beta_cs.iter().map(|&b| grid.report(b)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let reports: Vec<KeyRateReport> = rows.into_iter().flatten().collect();
    let grid = Grid2D::new(
        alphas.clone(),
        beta_cs.clone(),
        reports.iter().map(|r| r.s_ab).collect(),
    )?;
    let ((a, b), _) = argmax_on_grid(&grid);
    let best = *reports
        .iter()
        .find(|r| r.alpha == a && r.beta_c == b)
        .expect("argmax lies on the grid");
    Ok(SweepResult {
        family,
        t_squared,
        alphas,
        beta_cs,
        reports,
        best,
    })
}

/// Optimized key rate at one fibre length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub distance_km: f64,
    pub t_squared: f64,
    pub best: KeyRateReport,
}

/// For each distance, the maximum of `S_AB` over the `(α, β_c)` grid at the
/// transmission of that fibre length.
pub fn keyrate_vs_distance(
    family: StateFamily,
    distances: &[f64],
    loss_db_per_km: f64,
    alpha_axis: &SweepAxis,
    beta_c_axis: &SweepAxis,
    config: &KeyRateConfig,
) -> Result<Vec<DistancePoint>> {
    distances
        .iter()
        .map(|&d| {
            let t_squared = transmission_from_distance(&ChannelSpec::new(loss_db_per_km, d)?);
            let sweep = sweep_keyrate(family, t_squared, alpha_axis, beta_c_axis, config)?;
            Ok(DistancePoint {
                distance_km: d,
                t_squared,
                best: sweep.best,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{default_truncation, fock_coefficients, quadrature_pdf};
    use crate::channel::bs_transform_fock;
    use approx::assert_abs_diff_eq;

    fn scenario(family: StateFamily, alpha: f64, t2: f64) -> AttackScenario {
        AttackScenario::with_transmission(family, alpha, t2).unwrap()
    }

    /// Standard normal CDF via erfc-free series on the tail (test oracle).
    fn normal_cdf(x: f64) -> f64 {
        // Composite Simpson on the density from -12 to x.
        let n = 20000;
        let a = -12.0;
        let h = (x - a) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(a) + f(x);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn rejects_non_positive_alpha() {
        assert!(AttackScenario::with_transmission(StateFamily::Pascs, 0.0, 0.5).is_err());
        assert!(AttackScenario::with_transmission(StateFamily::Pascs, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn lossless_coherent_joint_is_product() {
        let s = scenario(StateFamily::Coherent, 1.0, 1.0);
        let d = JointDensity::new(&s, Sign::Plus).unwrap();
        let g = |x: f64, m: f64| (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * (x - m).powi(2)).exp();
        for &(b, e) in &[(1.0, 0.0), (0.3, -0.4), (1.8, 0.9)] {
            assert_abs_diff_eq!(d.eval(b, e), g(b, 1.0) * g(e, 0.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn rotated_inner_integral_matches_direct_integral() {
        let cfg = IntegrationConfig::for_amplitude(1.0);
        for family in StateFamily::ALL {
            let s = scenario(family, 1.0, 0.75);
            for sign in [Sign::Plus, Sign::Minus] {
                let d = JointDensity::new(&s, sign).unwrap();
                for &(b, e) in &[(1.2, -0.7), (0.0, 0.0), (-0.6, 0.25), (2.1, -1.3)] {
                    assert_abs_diff_eq!(d.eval(b, e), d.eval_direct(b, e, &cfg).unwrap(), epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn parity_symmetry() {
        for family in StateFamily::ALL {
            let s = scenario(family, 0.8, 0.6);
            let plus = JointDensity::new(&s, Sign::Plus).unwrap();
            let minus = JointDensity::new(&s, Sign::Minus).unwrap();
            for &(b, e) in &[(0.4, -0.2), (1.1, 0.5), (-0.9, -0.1)] {
                assert_abs_diff_eq!(minus.eval(b, e), plus.eval(-b, -e), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn bob_marginal_examples() {
        let cfg = IntegrationConfig::for_amplitude(1.0);
        let s = scenario(StateFamily::Coherent, 1.0, 1.0);
        let grid = KeyRateGrid::new(&s, &KeyRateConfig::default()).unwrap();
        assert_abs_diff_eq!(grid.total_mass(), 1.0, epsilon = 1e-6);
        for &b in &[0.0, 0.5, 1.0, 1.7] {
            let expected = (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * (b - 1.0f64).powi(2)).exp();
            assert_abs_diff_eq!(bob_marginal(&s, Sign::Plus, b, &cfg).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn bob_marginal_matches_fock_oracle() {
        let cfg = IntegrationConfig::for_amplitude(1.0);
        let s = scenario(StateFamily::Pascs, 1.0, 0.75);
        let p = s.params(Sign::Plus);
        let out = bs_transform_fock(&fock_coefficients(&p, default_truncation(p.alpha)).unwrap(), &s.bs).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..=80 {
            let b = -3.0 + 0.075 * i as f64;
            let v = bob_marginal(&s, Sign::Plus, b, &cfg).unwrap();
            sup = sup.max((v - out.bob_quadrature_pdf(0.0, b)).abs());
        }
        assert!(sup < 1e-4, "sup-norm {sup}");
        // Lossless case: Bob's marginal is the input's homodyne density.
        let s1 = scenario(StateFamily::Pascs, 0.55, 1.0);
        let p1 = s1.params(Sign::Plus);
        let f = fock_coefficients(&p1, default_truncation(p1.alpha)).unwrap();
        let d = JointDensity::new(&s1, Sign::Plus).unwrap();
        for &x in &[-1.0, 0.0, 0.4, 1.5] {
            assert_abs_diff_eq!(d.input_marginal(x), quadrature_pdf(&f, 0.0, x), epsilon = 1e-12);
        }
    }

    #[test]
    fn acceptance_examples() {
        let cfg = KeyRateConfig::default();
        let s = scenario(StateFamily::Pascs, 0.9, 0.75);
        let a = acceptance(&s, 0.0, &cfg).unwrap();
        assert_abs_diff_eq!(a.p0 + a.p1, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.r_acc, 0.5, epsilon = 1e-9);
        let far = acceptance(&s, 0.9 + 6.0, &cfg).unwrap();
        assert!(far.r_acc < 1e-8);

        let s = scenario(StateFamily::Coherent, 1.0, 1.0);
        let a = acceptance(&s, 0.0, &cfg).unwrap();
        // N(1, 1/4): P(x > 0) = Φ(2)
        assert_abs_diff_eq!(a.p1, normal_cdf(2.0), epsilon = 1e-9);
        assert_abs_diff_eq!(a.p0, 1.0 - normal_cdf(2.0), epsilon = 1e-9);
        assert_abs_diff_eq!(a.p1, 0.9772, epsilon = 1e-4);
    }

    #[test]
    fn zero_acceptance_is_an_error() {
        let s = scenario(StateFamily::Coherent, 0.5, 1.0);
        let g = KeyRateGrid::new(&s, &KeyRateConfig::default()).unwrap();
        assert!(matches!(g.report(20.0), Err(Error::ZeroAcceptance { .. })));
        assert!(matches!(g.shannon_info(20.0), Err(Error::ZeroAcceptance { .. })));
        assert!(g.report(-1.0).is_err());
    }

    #[test]
    fn shannon_info_examples() {
        let cfg = KeyRateConfig::default();
        // Bob receives vacuum whatever was sent: no information.
        let blind = scenario(StateFamily::Pascs, 1.0, 0.0);
        assert_abs_diff_eq!(shannon_info(&blind, 0.3, &cfg).unwrap(), 0.0, epsilon = 1e-12);
        let strong = scenario(StateFamily::Coherent, 3.0, 1.0);
        assert!(shannon_info(&strong, 1.0, &cfg).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn shannon_info_against_sampled_entropy() {
        // Independent estimate: conditional entropy of the sent sign given
        // Bob's bit, from a fine Riemann sum of the Gaussian marginal.
        let s = scenario(StateFamily::Coherent, 1.0, 1.0);
        let got = shannon_info(&s, 0.0, &KeyRateConfig::default()).unwrap();
        let f = |x: f64| (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * (x - 1.0).powi(2)).exp();
        let h = 1e-4;
        let mut acc = 0.0;
        let mut x = 0.5 * h;
        while x < 8.0 {
            let (p, m) = (f(x), f(-x));
            let d = m / (p + m);
            acc += h * (p + m) * (1.0 - binary_entropy(d));
            x += h;
        }
        assert_abs_diff_eq!(got, acc, epsilon = 1e-3);
    }

    #[test]
    fn collision_examples() {
        let cfg = KeyRateConfig::default();
        let lossless = scenario(StateFamily::Pascs, 1.0, 1.0);
        let (p_c, tau) = collision_probability(&lossless, 0.4, &cfg).unwrap();
        assert_abs_diff_eq!(p_c, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(tau, 0.0, epsilon = 1e-11);

        let tapped = scenario(StateFamily::Coherent, 2.0, 0.0);
        let (p_c, tau) = collision_probability(&tapped, 0.0, &cfg).unwrap();
        // overlap of N(±2, 1/4) is ~Φ(-4)
        assert!(p_c > 1.0 - 1e-4, "p_c = {p_c}");
        assert!(tau > 1.0 - 2e-4);
    }

    #[test]
    fn lossless_rate_has_no_privacy_cost() {
        let cfg = KeyRateConfig::default();
        for family in StateFamily::ALL {
            let r = secret_key_rate(&scenario(family, 0.7, 1.0), 0.35, &cfg).unwrap();
            assert_abs_diff_eq!(r.tau, 0.0, epsilon = 1e-11);
            assert_abs_diff_eq!(r.s_ab, r.r_acc * r.i_ab, epsilon = 1e-11);
            r.check_invariants(1e-9).unwrap();
        }
    }

    #[test]
    fn threshold_snapping_is_reported() {
        let g = KeyRateGrid::new(&scenario(StateFamily::Pascs, 1.0, 0.75), &KeyRateConfig::default()).unwrap();
        let r = g.report(0.33).unwrap();
        assert_abs_diff_eq!(r.beta_c_grid, 0.35, epsilon = 1e-12);
        assert_eq!(r.grid_resolution, 0.05);
        assert_eq!(r.beta_c, 0.33);
    }

    #[test]
    fn pascs_output_modes_are_correlated() {
        // cov(β_r, ε_r) = -T R (Var_in - 1/4); the input marginal of
        // |1,1,α=1⟩ is 4x² N(1, 1/4) with variance 0.19.
        let cfg = KeyRateConfig::default();
        let p = KeyRateGrid::new(&scenario(StateFamily::Pascs, 1.0, 0.75), &cfg).unwrap();
        let tr = 0.75f64.sqrt() * 0.5;
        assert_abs_diff_eq!(p.covariance(), -tr * (0.19 - 0.25), epsilon = 1e-6);
        let c = KeyRateGrid::new(&scenario(StateFamily::Coherent, 1.0, 0.75), &cfg).unwrap();
        assert!(c.covariance().abs() < 1e-6, "{}", c.covariance());
    }

    #[test]
    fn tau_grows_as_transmission_drops() {
        let cfg = KeyRateConfig::default();
        for family in StateFamily::ALL {
            let mut last = -1.0;
            for t2 in [1.0, 0.9, 0.75, 0.5, 0.25] {
                let (_, tau) = collision_probability(&scenario(family, 0.8, t2), 0.3, &cfg).unwrap();
                assert!(tau >= last - 1e-12, "{family} t2={t2}: {tau} < {last}");
                last = tau;
            }
        }
    }

    #[test]
    fn sweep_single_point_and_ordering() {
        let cfg = KeyRateConfig::default();
        let one = sweep_keyrate(
            StateFamily::Pascs,
            0.75,
            &SweepAxis::point(0.5),
            &SweepAxis::point(0.35),
            &cfg,
        )
        .unwrap();
        assert_eq!(one.reports.len(), 1);
        assert_eq!(one.best, one.reports[0]);
        let ax = SweepAxis::new(0.0, 2.5, 0.05).unwrap().values();
        assert_eq!(ax.len(), 51);
        assert_eq!(ax[3], 0.15);
        assert!(SweepAxis::new(1.0, 0.0, 0.1).is_err());
        assert!(SweepAxis::new(0.0, 1.0, 0.0).is_err());
    }
}
