//! Photon-added-then-subtracted coherent states (PASCS), coherent states and
//! their phase-space pictures.
//!
//! Phase-space convention: `ζ = ζ_r + i ζ_i`, the coherent state `|α⟩` has
//! Wigner function `(2/π) exp(-2 |ζ - α|²)`, so the vacuum quadrature variance
//! is 1/4 and a homodyne outcome is identified with `ζ_r`.
//!
//! Besides the closed-form Wigner function this module keeps a truncated Fock
//! representation ([`FockVector`]) that is built independently, by applying
//! ladder operators to the coherent-state expansion. It backs the
//! displaced-parity Wigner series, the quadrature densities used for sampling
//! and the beam-splitter oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bivariate_hermite, factorial, laguerre};

/// Largest accepted `|c_N|²` at the truncation edge.
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// A point of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub zr: f64,
    pub zi: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { zr: 0.0, zi: 0.0 };

    pub fn new(zr: f64, zi: f64) -> Self {
        Self { zr, zi }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.zr, self.zi)
    }
}

impl From<Complex64> for PhasePoint {
    fn from(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }
}

/// `â^l â†^k |α⟩`, normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PascsParams {
    /// Photons added.
    pub k: usize,
    /// Photons subtracted.
    pub l: usize,
    pub alpha: Complex64,
}

impl PascsParams {
    pub fn new(k: usize, l: usize, alpha: Complex64) -> Self {
        Self { k, l, alpha }
    }

    /// The signal state of the protocol: one photon added, one subtracted.
    pub fn single(alpha: Complex64) -> Self {
        Self::new(1, 1, alpha)
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self::new(0, 0, alpha)
    }

    pub fn with_alpha(self, alpha: Complex64) -> Self {
        Self { alpha, ..self }
    }
}

/// Signal-state family used by the protocol and the attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFamily {
    /// PASCS with `k = l = 1`.
    Pascs,
    Coherent,
}

impl StateFamily {
    pub const ALL: [StateFamily; 2] = [StateFamily::Pascs, StateFamily::Coherent];

    pub fn params(self, alpha: Complex64) -> PascsParams {
        match self {
            StateFamily::Pascs => PascsParams::single(alpha),
            StateFamily::Coherent => PascsParams::coherent(alpha),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateFamily::Pascs => "pascs",
            StateFamily::Coherent => "coherent",
        }
    }
}

impl std::fmt::Display for StateFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pascs" => Ok(StateFamily::Pascs),
            "coherent" => Ok(StateFamily::Coherent),
            other => Err(Error::invalid(
                "family",
                format!("expected `pascs` or `coherent`, got `{other}`"),
            )),
        }
    }
}

/// Homodyne measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Horizontal,
    Vertical,
}

impl Basis {
    /// Local-oscillator phase: 0 measures `ζ_r`, π/2 measures `ζ_i`.
    pub fn angle(self) -> f64 {
        match self {
            Basis::Horizontal => 0.0,
            Basis::Vertical => PI / 2.0,
        }
    }
}

/// The four protocol signals `|1,1,±α⟩`, `|1,1,±iα⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalLabel {
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl SignalLabel {
    pub const ALL: [SignalLabel; 4] = [
        SignalLabel::Plus,
        SignalLabel::Minus,
        SignalLabel::PlusI,
        SignalLabel::MinusI,
    ];

    pub fn bit(self) -> u8 {
        match self {
            SignalLabel::Plus | SignalLabel::PlusI => 1,
            SignalLabel::Minus | SignalLabel::MinusI => 0,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            SignalLabel::Plus | SignalLabel::Minus => Basis::Horizontal,
            SignalLabel::PlusI | SignalLabel::MinusI => Basis::Vertical,
        }
    }

    pub fn from_bit_basis(bit: u8, basis: Basis) -> Self {
        match (bit != 0, basis) {
            (true, Basis::Horizontal) => SignalLabel::Plus,
            (false, Basis::Horizontal) => SignalLabel::Minus,
            (true, Basis::Vertical) => SignalLabel::PlusI,
            (false, Basis::Vertical) => SignalLabel::MinusI,
        }
    }

    /// Unit phase multiplying the real amplitude `a`.
    pub fn phase(self) -> Complex64 {
        match self {
            SignalLabel::Plus => Complex64::new(1.0, 0.0),
            SignalLabel::Minus => Complex64::new(-1.0, 0.0),
            SignalLabel::PlusI => Complex64::new(0.0, 1.0),
            SignalLabel::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn amplitude(self, a: f64) -> Complex64 {
        self.phase() * a
    }
}

/// `N_{k,l}(α) = Σ_m (l!)² (l+k-m)! / ((-1)^m m! ((l-m)!)²) L_{l+k-m}(-|α|²)`.
pub fn normalization_constant(params: &PascsParams) -> Result<f64> {
    let PascsParams { k, l, alpha } = *params;
    let lf = factorial(l)?;
    factorial(l + k)?;
    let x = -alpha.norm_sqr();
    let mut sum = 0.0;
    for m in 0..=l {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let lm = factorial(l - m)?;
        let c = lf * lf * factorial(l + k - m)? / (factorial(m)? * lm * lm);
        sum += sign * c * laguerre(l + k - m, x);
    }
    Ok(sum)
}

/// Precomputed closed-form Wigner function of one PASCS.
#[derive(Debug, Clone)]
pub struct PascsWigner {
    params: PascsParams,
    prefactor: f64,
    /// `(-1)^n (k!)² / (n! ((k-n)!)²)` for `n = 0..=k`.
    terms: Vec<f64>,
}

impl PascsWigner {
    pub fn new(params: PascsParams) -> Result<Self> {
        if !(params.alpha.re.is_finite() && params.alpha.im.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        let norm = normalization_constant(&params)?;
        if !(norm > 0.0) {
            return Err(Error::invalid("params", "the ladder operators annihilate this state"));
        }
        let kf = factorial(params.k)?;
        let mut terms = Vec::with_capacity(params.k + 1);
        for n in 0..=params.k {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let kn = factorial(params.k - n)?;
            terms.push(sign * kf * kf / (factorial(n)? * kn * kn));
        }
        Ok(Self {
            params,
            prefactor: 2.0 / (PI * norm),
            terms,
        })
    }

    pub fn params(&self) -> &PascsParams {
        &self.params
    }

    /// Polynomial degree in `ζ` of the factor multiplying the Gaussian.
    pub fn polynomial_degree(&self) -> usize {
        2 * self.params.k
    }

    pub fn eval(&self, z: PhasePoint) -> f64 {
        let zeta = z.to_complex();
        let alpha = self.params.alpha;
        let i = Complex64::i();
        let e1 = i * (2.0 * zeta - alpha);
        let e2 = i * alpha.conj();
        let mut sum = 0.0;
        for (n, &c) in self.terms.iter().enumerate() {
            sum += c * bivariate_hermite(self.params.k - n, self.params.l, e1, e2).norm_sqr();
        }
        self.prefactor * (-2.0 * (alpha - zeta).norm_sqr()).exp() * sum
    }
}

/// Closed-form Wigner function `W^{k,l}(ζ; α)`.
pub fn wigner_pascs(params: &PascsParams, z: PhasePoint) -> Result<f64> {
    Ok(PascsWigner::new(*params)?.eval(z))
}

/// `(2/π) exp(-2 |α - ζ|²)`.
pub fn wigner_coherent(alpha: Complex64, z: PhasePoint) -> f64 {
    2.0 / PI * (-2.0 * (alpha - z.to_complex()).norm_sqr()).exp()
}

/// Truncated number-basis amplitudes `c_0 ..= c_N` of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<Complex64>,
    raw_norm_sqr: f64,
}

/// Truncation heuristic `ceil(|α|² + 10|α| + 20)`.
pub fn default_truncation(alpha: Complex64) -> usize {
    let a = alpha.norm();
    (a * a + 10.0 * a + 20.0).ceil() as usize
}

impl FockVector {
    /// Normalizes the given amplitudes.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let raw: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if coeffs.is_empty() || !(raw > 0.0) || !raw.is_finite() {
            return Err(Error::invalid("coeffs", "state must have finite non-zero norm"));
        }
        let s = raw.sqrt();
        Ok(Self {
            coeffs: coeffs.into_iter().map(|c| c / s).collect(),
            raw_norm_sqr: raw,
        })
    }

    pub fn vacuum() -> Self {
        Self::number(0)
    }

    pub fn number(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Self::from_coeffs(c).expect("number state is normalizable")
    }

    /// Coherent state `|α⟩` truncated at `truncation`.
    pub fn coherent(alpha: Complex64, truncation: usize) -> Result<Self> {
        let v = Self::from_coeffs(coherent_amplitudes(alpha, truncation))?;
        v.check_tail()?;
        Ok(v)
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Squared norm of the amplitudes before normalization. For a PASCS built
    /// from a unit-norm coherent state this is `N_{k,l}(α)`.
    pub fn raw_norm_sqr(&self) -> f64 {
        self.raw_norm_sqr
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    pub fn tail_mass(&self) -> f64 {
        self.coeffs.last().map_or(0.0, |c| c.norm_sqr())
    }

    fn check_tail(&self) -> Result<()> {
        let tail = self.tail_mass();
        if tail >= TAIL_TOLERANCE {
            return Err(Error::TruncationTooSmall {
                truncation: self.truncation(),
                tail,
            });
        }
        Ok(())
    }
}

/// Coherent-state amplitudes `e^{-|α|²/2} α^n / √n!`.
fn coherent_amplitudes(alpha: Complex64, truncation: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(truncation + 1);
    let mut cur = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    c.push(cur);
    for n in 1..=truncation {
        cur = cur * alpha / (n as f64).sqrt();
        c.push(cur);
    }
    c
}

/// Fock amplitudes of `â^l â†^k |α⟩`, normalized.
///
/// Ladder operators act on the coherent expansion directly, so the squared
/// norm before normalization reproduces [`normalization_constant`]
/// independently.
pub fn fock_coefficients(params: &PascsParams, truncation: usize) -> Result<FockVector> {
    let PascsParams { k, l, alpha } = *params;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::invalid("alpha", "must be finite"));
    }
    let coherent = coherent_amplitudes(alpha, truncation + l);
    // â†^k: (â†^k c)_n = c_{n-k} sqrt(n! / (n-k)!)
    let mut added = vec![Complex64::new(0.0, 0.0); truncation + l + 1];
    for n in k..added.len() {
        let ratio: f64 = ((n - k + 1)..=n).map(|j| j as f64).product();
        added[n] = coherent[n - k] * ratio.sqrt();
    }
    // â^l: (â^l d)_n = d_{n+l} sqrt((n+l)! / n!)
    let coeffs: Vec<Complex64> = (0..=truncation)
        .map(|n| {
            let ratio: f64 = ((n + 1)..=(n + l)).map(|j| j as f64).product();
            added[n + l] * ratio.sqrt()
        })
        .collect();
    let v = FockVector::from_coeffs(coeffs)?;
    v.check_tail()?;
    Ok(v)
}

/// Matrix elements `⟨m| D(γ) |n⟩` for `m <= rows`, `n <= cols`, column-major.
///
/// Column 0 is the coherent state `|γ⟩`; later columns follow from
/// `D â† = (â† - γ*) D`.
fn displacement_matrix(gamma: Complex64, rows: usize, cols: usize) -> Vec<Vec<Complex64>> {
    let mut columns = Vec::with_capacity(cols + 1);
    columns.push(coherent_amplitudes(gamma, rows));
    for n in 0..cols {
        let prev: &Vec<Complex64> = &columns[n];
        let s = ((n + 1) as f64).sqrt();
        let next: Vec<Complex64> = (0..=rows)
            .map(|m| {
                let up = if m > 0 { prev[m - 1] * (m as f64).sqrt() } else { Complex64::new(0.0, 0.0) };
                (up - gamma.conj() * prev[m]) / s
            })
            .collect();
        columns.push(next);
    }
    columns
}

/// Wigner function from the displaced-parity series
/// `W(ζ) = (2/π) Σ_n (-1)^n |⟨n| D(-ζ) |ψ⟩|²`.
pub fn wigner_from_fock(state: &FockVector, z: PhasePoint) -> Result<f64> {
    let gamma = -z.to_complex();
    let cols = state.truncation();
    let rows = cols + default_truncation(gamma);
    let d = displacement_matrix(gamma, rows, cols);
    let mut displaced = vec![Complex64::new(0.0, 0.0); rows + 1];
    for (n, c) in state.coeffs().iter().enumerate() {
        for (m, dm) in d[n].iter().enumerate() {
            displaced[m] += dm * c;
        }
    }
    let tail = displaced[rows].norm_sqr();
    if tail >= TAIL_TOLERANCE {
        return Err(Error::TruncationTooSmall { truncation: rows, tail });
    }
    let parity: f64 = displaced
        .iter()
        .enumerate()
        .map(|(m, a)| if m % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum();
    Ok(2.0 / PI * parity)
}

/// Number-state wavefunctions `ψ_0(x) ..= ψ_nmax(x)` in the quadrature
/// convention of this crate:
/// `ψ_n(x) = (2/π)^{1/4} (2^n n!)^{-1/2} H_n(√2 x) e^{-x²}`.
///
/// Evaluated with the normalized recurrence so that large `n` neither
/// overflows nor loses precision.
pub fn quadrature_wavefunctions(nmax: usize, x: f64) -> Vec<f64> {
    let y = std::f64::consts::SQRT_2 * x;
    let mut psi = Vec::with_capacity(nmax + 1);
    psi.push((2.0 / PI).powf(0.25) * (-x * x).exp());
    if nmax >= 1 {
        psi.push(std::f64::consts::SQRT_2 * y * psi[0]);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * y * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// Homodyne outcome density `|Σ_n c_n e^{-inθ} ψ_n(x)|²` at local-oscillator
/// phase `angle`.
pub fn quadrature_pdf(state: &FockVector, angle: f64, x: f64) -> f64 {
    let psi = quadrature_wavefunctions(state.truncation(), x);
    let amp: Complex64 = state
        .coeffs()
        .iter()
        .zip(&psi)
        .enumerate()
        .map(|(n, (c, p))| c * Complex64::from_polar(1.0, -(n as f64) * angle) * *p)
        .sum();
    amp.norm_sqr()
}
