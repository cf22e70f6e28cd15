//! Intercept-resend attack with simultaneous quadrature measurement.
//!
//! Eve splits each pulse on a 50:50 beam splitter, measures the real
//! quadrature `β_r` of the transmitted half and the imaginary quadrature
//! `ε_i` of the reflected half, and guesses the signal from the phase-space
//! wedge her outcome falls in.
//!
//! The reflected port carries `-Rα`, so the wedges are laid out in Eve's
//! reading `e = -ε_i`; with that orientation the four densities are
//! rotations of one another and `P_{PLUS_I}(x, y) = P_{PLUS}(y, x)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{joint_wigner_with, BeamSplitter};
use crate::error::{Error, Result};
use crate::keyrate::{Acceptance, AttackScenario, JointDensity, Sign, MIN_ACCEPTANCE};
use crate::numerics::{find_root, integrate, AxisRule, GaussHermite, IntegrationConfig};
use crate::state::{PascsWigner, PhasePoint, SignalLabel, StateFamily};

/// Amplitude bracket searched by [`optimize_alpha`].
pub const ALPHA_BRACKET: (f64, f64) = (0.05, 5.0);
pub const ALPHA_TOL: f64 = 1e-5;
/// Default intrinsic error rate for the curves.
pub const DEFAULT_DELTA_TARGET: f64 = 1.15e-3;

/// Audit tolerances.
pub const PARTITION_TOL: f64 = 1e-6;
pub const ML_AGREEMENT_MIN: f64 = 0.999;

/// Eve's reading of the reflected port.
pub fn eve_reading(eps_i: f64) -> f64 {
    -eps_i
}

/// Phase-space wedge in which Eve announces `label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRegion {
    pub label: SignalLabel,
}

impl DecisionRegion {
    pub fn new(label: SignalLabel) -> Self {
        Self { label }
    }

    /// Whether `(β_r, ε_i)` lies in the wedge. Ties follow the `≥ / >`
    /// pattern, so the real axis belongs to the horizontal labels.
    pub fn contains(&self, beta_r: f64, eps_i: f64) -> bool {
        let (b, e) = (beta_r, eve_reading(eps_i));
        match self.label {
            SignalLabel::Plus => b >= e.abs(),
            SignalLabel::PlusI => e > b.abs(),
            SignalLabel::Minus => -b >= e.abs(),
            SignalLabel::MinusI => -e > b.abs(),
        }
    }

    /// First region (in [`SignalLabel::ALL`] order) containing the point.
    pub fn classify(beta_r: f64, eps_i: f64) -> SignalLabel {
        SignalLabel::ALL
            .into_iter()
            .find(|&l| DecisionRegion::new(l).contains(beta_r, eps_i))
            .unwrap_or(SignalLabel::Plus)
    }
}

/// `P_label(β_r, ε_i)` behind Eve's balanced splitter.
#[derive(Debug, Clone)]
pub struct IrDensity {
    wigner: PascsWigner,
    bs: BeamSplitter,
    gh: GaussHermite,
    /// Gaussian centres of the integrated-out `β_i` and `ε_r`.
    centers: (f64, f64),
}

impl IrDensity {
    pub fn new(family: StateFamily, alpha: f64, label: SignalLabel) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite and positive"));
        }
        let wigner = PascsWigner::new(family.params(label.amplitude(alpha)))?;
        let bs = BeamSplitter::balanced();
        let a = wigner.params().alpha;
        let gh = GaussHermite::exact_for_degree(wigner.polynomial_degree());
        Ok(Self {
            wigner,
            bs,
            gh,
            centers: (bs.t() * a.im, -bs.r() * a.re),
        })
    }

    /// `∫∫ W̃(β_r + iβ_i, ε_r + iε_i) dβ_i dε_r`. The integrand is a product
    /// Gaussian in `(β_i, ε_r)` times a polynomial, so the tensor
    /// Gauss–Hermite rule is exact.
    pub fn eval(&self, beta_r: f64, eps_i: f64) -> f64 {
        let (cb, ce) = self.centers;
        let v = self.gh.integrate_unit_gaussian(cb, |beta_i| {
            self.gh.integrate_unit_gaussian(ce, |eps_r| {
                joint_wigner_with(
                    &self.wigner,
                    &self.bs,
                    PhasePoint::new(beta_r, beta_i),
                    PhasePoint::new(eps_r, eps_i),
                )
            })
        });
        v.max(0.0)
    }

    /// Literal double integral, for cross-checking the exact rule.
    pub fn eval_direct(&self, beta_r: f64, eps_i: f64, config: &IntegrationConfig) -> Result<f64> {
        integrate(
            |x| {
                joint_wigner_with(
                    &self.wigner,
                    &self.bs,
                    PhasePoint::new(beta_r, x[0]),
                    PhasePoint::new(x[1], eps_i),
                )
            },
            config,
            2,
        )
    }

    /// Density mass inside one of the four wedges.
    pub fn wedge_mass(&self, region: DecisionRegion) -> Result<f64> {
        let a = self.wigner.params().alpha.norm();
        let radius = a * std::f64::consts::FRAC_1_SQRT_2 + 6.0;
        let panels = (radius / 0.25).ceil() as usize;
        let radial = AxisRule::composite(0.0, panels as f64 * 0.25, panels, 8);
        let angular = AxisRule::composite(-1.0, 1.0, 8, 8);
        // (β_r, e) = phase · (r, s r), Jacobian r.
        let phase = region.label.phase();
        radial.integrate(|r| {
            let inner: f64 = angular
                .nodes
                .iter()
                .zip(&angular.weights)
                .map(|(&s, &w)| {
                    let z = phase * Complex64::new(r, s * r);
                    w * self.eval(z.re, -z.im)
                })
                .sum();
            r * inner
        })
    }
}

pub fn joint_prob_ir(
    family: StateFamily,
    alpha: f64,
    label: SignalLabel,
    beta_r: f64,
    eps_i: f64,
) -> Result<f64> {
    Ok(IrDensity::new(family, alpha, label)?.eval(beta_r, eps_i))
}

/// Eve's success rate with the audits behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveSuccess {
    pub family: StateFamily,
    pub alpha: f64,
    /// Maximum-likelihood success: mean over labels of the own-wedge mass.
    pub p_corr: f64,
    /// Twice the PLUS-wedge mass of the PLUS density.
    pub p_corr_wedge2x: f64,
    /// PLUS density mass per wedge, in [`SignalLabel::ALL`] order.
    pub wedge_masses: [f64; 4],
    pub partition_sum: f64,
    /// Largest spread of own-wedge mass across the four labels.
    pub relabel_spread: f64,
    pub wedge2x_in_range: bool,
}

impl EveSuccess {
    pub fn audit(&self) -> std::result::Result<(), String> {
        if (self.partition_sum - 1.0).abs() > PARTITION_TOL {
            return Err(format!(
                "wedge masses sum to {} (family={} alpha={})",
                self.partition_sum, self.family, self.alpha
            ));
        }
        if self.relabel_spread > 1e-8 {
            return Err(format!(
                "success depends on the signal label by {} (family={} alpha={})",
                self.relabel_spread, self.family, self.alpha
            ));
        }
        Ok(())
    }
}

pub fn eve_success(family: StateFamily, alpha: f64) -> Result<EveSuccess> {
    let plus = IrDensity::new(family, alpha, SignalLabel::Plus)?;
    let mut wedge_masses = [0.0; 4];
    for (m, label) in wedge_masses.iter_mut().zip(SignalLabel::ALL) {
        *m = plus.wedge_mass(DecisionRegion::new(label))?;
    }
    let own: Vec<f64> = SignalLabel::ALL
        .into_iter()
        .map(|l| IrDensity::new(family, alpha, l)?.wedge_mass(DecisionRegion::new(l)))
        .collect::<Result<_>>()?;
    let p_corr = own.iter().sum::<f64>() / 4.0;
    let hi = own.iter().cloned().fold(f64::MIN, f64::max);
    let lo = own.iter().cloned().fold(f64::MAX, f64::min);
    let p_corr_wedge2x = 2.0 * wedge_masses[0];
    Ok(EveSuccess {
        family,
        alpha,
        p_corr,
        p_corr_wedge2x,
        wedge_masses,
        partition_sum: wedge_masses.iter().sum(),
        relabel_spread: hi - lo,
        wedge2x_in_range: (0.25..=1.0).contains(&p_corr_wedge2x),
    })
}

/// Fraction of the four-signal mixture's mass, on a uniform grid of spacing
/// `h`, where the wedge label is also the most likely signal.
pub fn ml_agreement(family: StateFamily, alpha: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "must be finite and positive"));
    }
    let densities: Vec<IrDensity> = SignalLabel::ALL
        .into_iter()
        .map(|l| IrDensity::new(family, alpha, l))
        .collect::<Result<_>>()?;
    let half = ((alpha * std::f64::consts::FRAC_1_SQRT_2 + 5.0) / h).ceil() as i64;
    let (mut total, mut agree) = (0.0, 0.0);
    for i in -half..=half {
        for j in -half..=half {
            let (b, e) = (i as f64 * h, j as f64 * h);
            let p: Vec<f64> = densities.iter().map(|d| d.eval(b, e)).collect();
            let mass: f64 = p.iter().sum();
            let best = p.iter().cloned().fold(f64::MIN, f64::max);
            let chosen = DecisionRegion::classify(b, e);
            let k = SignalLabel::ALL.iter().position(|&l| l == chosen).unwrap_or(0);
            total += mass;
            if p[k] >= best * (1.0 - 1e-12) {
                agree += mass;
            }
        }
    }
    Ok(agree / total)
}

/// Post-selection tails on a lossless, Eve-free line.
pub fn lossless_acceptance(family: StateFamily, alpha: f64, beta_c: f64) -> Result<Acceptance> {
    if !(beta_c >= 0.0 && beta_c.is_finite()) {
        return Err(Error::invalid("beta_c", "must be finite and non-negative"));
    }
    let scenario = AttackScenario::new(family, alpha, BeamSplitter::identity())?;
    let density = JointDensity::new(&scenario, Sign::Plus)?;
    let edge = alpha + 6.0;
    if beta_c >= edge {
        return Ok(Acceptance {
            p0: 0.0,
            p1: 0.0,
            r_acc: 0.0,
        });
    }
    let panels = ((edge - beta_c) / 0.25).ceil().max(1.0) as usize;
    let lower = AxisRule::composite(-edge, -beta_c, panels, 10);
    let upper = AxisRule::composite(beta_c, edge, panels, 10);
    let p0 = lower.integrate(|x| density.input_marginal(x))?;
    let p1 = upper.integrate(|x| density.input_marginal(x))?;
    Ok(Acceptance {
        p0,
        p1,
        r_acc: 0.5 * (p0 + p1),
    })
}

/// Post-selected bit-error rate of the lossless line.
pub fn intrinsic_error_rate(family: StateFamily, alpha: f64, beta_c: f64) -> Result<f64> {
    let acc = lossless_acceptance(family, alpha, beta_c)?;
    if acc.r_acc <= MIN_ACCEPTANCE {
        return Err(Error::ZeroAcceptance { r_acc: acc.r_acc });
    }
    Ok(acc.p0 / (acc.p0 + acc.p1))
}

/// Amplitude at which the intrinsic error rate equals `delta_target`.
pub fn optimize_alpha(family: StateFamily, beta_c: f64, delta_target: f64) -> Result<f64> {
    if !(delta_target > 0.0 && delta_target < 0.5) {
        return Err(Error::invalid("delta_target", "must lie in (0, 1/2)"));
    }
    let (lo, hi) = ALPHA_BRACKET;
    find_root(
        |a| Ok(intrinsic_error_rate(family, a, beta_c)? - delta_target),
        lo,
        hi,
        ALPHA_TOL,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrCurvePoint {
    pub family: StateFamily,
    pub beta_c: f64,
    pub delta_target: f64,
    pub alpha_opt: f64,
    pub r_acc: f64,
    pub p_corr: f64,
    pub p_corr_wedge2x: f64,
    pub partition_sum: f64,
}

pub fn ir_point(family: StateFamily, beta_c: f64, delta_target: f64) -> Result<(IrCurvePoint, EveSuccess)> {
    let alpha_opt = optimize_alpha(family, beta_c, delta_target)?;
    let acc = lossless_acceptance(family, alpha_opt, beta_c)?;
    let eve = eve_success(family, alpha_opt)?;
    Ok((
        IrCurvePoint {
            family,
            beta_c,
            delta_target,
            alpha_opt,
            r_acc: acc.r_acc,
            p_corr: eve.p_corr,
            p_corr_wedge2x: eve.p_corr_wedge2x,
            partition_sum: eve.partition_sum,
        },
        eve,
    ))
}

/// Curve points in input order. The [`EveSuccess`] beside each point carries
/// the audit data; checking it is left to the caller.
pub fn ir_curves(
    family: StateFamily,
    beta_cs: &[f64],
    delta_target: f64,
) -> Result<Vec<(IrCurvePoint, EveSuccess)>> {
    beta_cs
        .par_iter()
        .map(|&b| ir_point(family, b, delta_target))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{default_truncation, fock_coefficients};
    use approx::assert_abs_diff_eq;

    /// `|⟨γ|ψ⟩|² / π` from the Fock expansion.
    fn husimi(family: StateFamily, alpha: Complex64, gamma: Complex64) -> f64 {
        let state = fock_coefficients(&family.params(alpha), default_truncation(alpha) + 20).unwrap();
        let mut overlap = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0);
        for (n, c) in state.coeffs().iter().enumerate() {
            if n > 0 {
                term *= gamma.conj() / (n as f64).sqrt();
            }
            overlap += term * c;
        }
        overlap.norm_sqr() / std::f64::consts::PI
    }

    #[test]
    fn regions_partition_the_plane() {
        for &(b, e) in &[(1.0, 0.2), (0.1, -0.9), (-2.0, 0.3), (0.4, 3.0), (0.0, 0.0), (1.0, -1.0)] {
            let n = SignalLabel::ALL
                .into_iter()
                .filter(|&l| DecisionRegion::new(l).contains(b, e))
                .count();
            if (b, e) == (0.0, 0.0) {
                assert_eq!(n, 2);
            } else {
                assert_eq!(n, 1, "({b}, {e})");
            }
        }
        assert_eq!(DecisionRegion::classify(0.1, -0.9), SignalLabel::PlusI);
        assert_eq!(DecisionRegion::classify(1.0, -1.0), SignalLabel::Plus);
        assert_eq!(DecisionRegion::classify(-1.0, -1.0), SignalLabel::Minus);
    }

    #[test]
    fn coherent_density_is_product_gaussian() {
        let d = IrDensity::new(StateFamily::Coherent, 1.0, SignalLabel::Plus).unwrap();
        let g = |x: f64, m: f64| (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * (x - m).powi(2)).exp();
        let m = std::f64::consts::FRAC_1_SQRT_2;
        for &(b, e) in &[(0.7, 0.0), (0.1, 0.4), (1.3, -0.6)] {
            assert_abs_diff_eq!(d.eval(b, e), g(b, m) * g(e, 0.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn density_matches_husimi_oracle() {
        let s2 = std::f64::consts::SQRT_2;
        for family in StateFamily::ALL {
            for label in SignalLabel::ALL {
                let d = IrDensity::new(family, 0.9, label).unwrap();
                for &(b, e) in &[(0.5, 0.1), (-0.3, 0.8), (1.2, -1.0), (0.0, 0.0)] {
                    let q = husimi(family, label.amplitude(0.9), Complex64::new(s2 * b, -s2 * e));
                    assert_abs_diff_eq!(d.eval(b, e), 2.0 * q, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn exact_rule_matches_direct_integral() {
        let cfg = IntegrationConfig::for_amplitude(1.0);
        let d = IrDensity::new(StateFamily::Pascs, 1.0, SignalLabel::Plus).unwrap();
        for &(b, e) in &[(0.6, 0.2), (-0.4, -0.5)] {
            assert_abs_diff_eq!(d.eval(b, e), d.eval_direct(b, e, &cfg).unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn rotated_labels_are_transposes() {
        for family in StateFamily::ALL {
            let plus = IrDensity::new(family, 1.1, SignalLabel::Plus).unwrap();
            let plus_i = IrDensity::new(family, 1.1, SignalLabel::PlusI).unwrap();
            for &(x, y) in &[(0.3, 0.9), (-0.2, 0.5), (1.4, -0.7)] {
                // In Eve's reading coordinates.
                let lhs = plus_i.eval(x, -y);
                let rhs = plus.eval(y, -x);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn wedges_partition_mass_and_labels_agree() {
        for family in StateFamily::ALL {
            for &a in &[0.3, 1.0, 2.0] {
                let s = eve_success(family, a).unwrap();
                assert_abs_diff_eq!(s.partition_sum, 1.0, epsilon = 1e-6);
                assert!(s.relabel_spread < 1e-8, "{}", s.relabel_spread);
                s.audit().unwrap();
                assert_abs_diff_eq!(s.p_corr, s.wedge_masses[0], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn success_limits() {
        for family in StateFamily::ALL {
            let s = eve_success(family, 1e-3).unwrap();
            assert_abs_diff_eq!(s.p_corr, 0.25, epsilon = 2e-3);
        }
        let s = eve_success(StateFamily::Coherent, 4.0).unwrap();
        assert!(s.p_corr > 1.0 - 1e-3, "{}", s.p_corr);
        assert!(!s.wedge2x_in_range);
        assert_abs_diff_eq!(s.p_corr_wedge2x, 2.0 * s.p_corr, epsilon = 1e-12);
    }

    #[test]
    fn maximum_likelihood_is_the_wedge_rule() {
        for family in StateFamily::ALL {
            for &a in &[0.5, 1.0] {
                let f = ml_agreement(family, a, 0.05).unwrap();
                assert!(f >= ML_AGREEMENT_MIN, "{family} alpha={a}: {f}");
            }
        }
    }

    #[test]
    fn intrinsic_error_examples() {
        let d = intrinsic_error_rate(StateFamily::Coherent, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(d, 0.022750131948, epsilon = 1e-9);
        let mut last = 1.0;
        for &a in &[0.2, 0.5, 1.0, 1.5, 2.5] {
            let d = intrinsic_error_rate(StateFamily::Pascs, a, 0.5).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(intrinsic_error_rate(StateFamily::Coherent, 4.0, 0.5).unwrap() < 1e-12);
        assert!(matches!(
            intrinsic_error_rate(StateFamily::Coherent, 0.5, 10.0),
            Err(Error::ZeroAcceptance { .. })
        ));
    }

    #[test]
    fn optimize_alpha_examples() {
        let a = optimize_alpha(StateFamily::Coherent, 0.0, 0.022750131948).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 2e-5);
        assert!(optimize_alpha(StateFamily::Coherent, 0.0, 0.7).is_err());
        assert!(matches!(
            optimize_alpha(StateFamily::Coherent, 0.0, 1e-300),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn optimal_amplitude_falls_with_threshold() {
        for family in StateFamily::ALL {
            let a0 = optimize_alpha(family, 0.0, DEFAULT_DELTA_TARGET).unwrap();
            let a1 = optimize_alpha(family, 0.7, DEFAULT_DELTA_TARGET).unwrap();
            let a2 = optimize_alpha(family, 1.4, DEFAULT_DELTA_TARGET).unwrap();
            assert!(a0 > a1 && a1 > a2, "{family}: {a0} {a1} {a2}");
        }
    }

    #[test]
    fn curve_point_ordering() {
        let pts: Vec<_> = [0.0, 0.8]
            .iter()
            .map(|&b| {
                let (p, _) = ir_point(StateFamily::Pascs, b, DEFAULT_DELTA_TARGET).unwrap();
                let (c, _) = ir_point(StateFamily::Coherent, b, DEFAULT_DELTA_TARGET).unwrap();
                (p, c)
            })
            .collect();
        for (p, c) in pts {
            assert!(p.alpha_opt < c.alpha_opt);
            assert!(p.r_acc <= c.r_acc + 1e-12);
            assert!(p.p_corr < c.p_corr);
        }
        let one = ir_curves(StateFamily::Coherent, &[0.3], DEFAULT_DELTA_TARGET).unwrap();
        assert_eq!(one.len(), 1);
    }
}
