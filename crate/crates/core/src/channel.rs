//! Lossy line modelled as a beam splitter with vacuum in the unused port.
//!
//! The output Wigner function is
//! `W̃(β, ε) = W_in(Tβ - Rε) · W_vac(Rβ + Tε)`, with `β` on the transmitted
//! (Bob) port and `ε` on the reflected (Eve) port. In Fock space this is the
//! substitution `â† → T b̂† - R ê†`, so a coherent input `|α⟩` leaves as
//! `|Tα⟩ ⊗ |-Rα⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{quadrature_wavefunctions, wigner_coherent, FockVector, PascsParams, PascsWigner, PhasePoint};

/// Transmission and reflection amplitudes with `t² + r² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    t: f64,
    r: f64,
}

impl BeamSplitter {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&r) {
            return Err(Error::invalid("beam splitter", "amplitudes must lie in [0, 1]"));
        }
        if (t * t + r * r - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("beam splitter", "t² + r² must equal 1"));
        }
        Ok(Self { t, r })
    }

    /// From the power transmission `T²`.
    pub fn from_transmission(t_squared: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t_squared) {
            return Err(Error::invalid("t2", "transmission must lie in [0, 1]"));
        }
        Ok(Self {
            t: t_squared.sqrt(),
            r: (1.0 - t_squared).sqrt(),
        })
    }

    pub fn identity() -> Self {
        Self { t: 1.0, r: 0.0 }
    }

    pub fn balanced() -> Self {
        Self {
            t: std::f64::consts::FRAC_1_SQRT_2,
            r: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn transmission(&self) -> f64 {
        self.t * self.t
    }

    /// Input-mode arguments `(Tβ - Rε, Rβ + Tε)` of the output Wigner function.
    pub fn input_arguments(&self, beta: PhasePoint, eps: PhasePoint) -> (PhasePoint, PhasePoint) {
        let b = beta.to_complex();
        let e = eps.to_complex();
        (
            (self.t * b - self.r * e).into(),
            (self.r * b + self.t * e).into(),
        )
    }
}

/// Fibre loss in dB/km over a given length.
///
/// The reference fibre is 0.2 dB/km (quoted at 1.22 μm); only the loss figure
/// enters the transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub loss_db_per_km: f64,
    pub distance_km: f64,
}

impl ChannelSpec {
    pub const STANDARD_FIBRE_LOSS: f64 = 0.2;

    pub fn new(loss_db_per_km: f64, distance_km: f64) -> Result<Self> {
        if !(loss_db_per_km >= 0.0 && loss_db_per_km.is_finite()) {
            return Err(Error::invalid("loss_db_km", "must be finite and non-negative"));
        }
        if !(distance_km >= 0.0 && distance_km.is_finite()) {
            return Err(Error::invalid("distance", "must be finite and non-negative"));
        }
        Ok(Self {
            loss_db_per_km,
            distance_km,
        })
    }

    pub fn beam_splitter(&self) -> BeamSplitter {
        BeamSplitter::from_transmission(transmission_from_distance(self))
            .expect("fibre transmission lies in [0, 1]")
    }
}

/// `T² = 10^(-loss · distance / 10)`.
pub fn transmission_from_distance(spec: &ChannelSpec) -> f64 {
    10f64.powf(-spec.loss_db_per_km * spec.distance_km / 10.0)
}

/// Inverse of [`transmission_from_distance`].
pub fn distance_for_transmission(loss_db_per_km: f64, t_squared: f64) -> f64 {
    -10.0 * t_squared.log10() / loss_db_per_km
}

/// Two-mode output Wigner function for a PASCS input and vacuum ancilla.
pub fn joint_wigner(
    params: &PascsParams,
    bs: &BeamSplitter,
    beta: PhasePoint,
    eps: PhasePoint,
) -> Result<f64> {
    let w = PascsWigner::new(*params)?;
    Ok(joint_wigner_with(&w, bs, beta, eps))
}

/// [`joint_wigner`] with a prepared single-mode evaluator.
pub fn joint_wigner_with(w: &PascsWigner, bs: &BeamSplitter, beta: PhasePoint, eps: PhasePoint) -> f64 {
    let (u, v) = bs.input_arguments(beta, eps);
    w.eval(u) * wigner_coherent(Complex64::new(0.0, 0.0), v)
}

/// Largest single-mode truncation accepted by [`bs_transform_fock`].
pub const MAX_TWO_MODE_TRUNCATION: usize = 400;

/// Pure two-mode state `Σ c_{be} |b⟩_Bob |e⟩_Eve`, truncated per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFock {
    dim: usize,
    /// Row-major, Bob index outermost.
    coeffs: Vec<Complex64>,
}

impl TwoModeFock {
    pub fn truncation(&self) -> usize {
        self.dim - 1
    }

    pub fn amplitude(&self, bob: usize, eve: usize) -> Complex64 {
        self.coeffs[bob * self.dim + eve]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Mean photon numbers `(⟨n_Bob⟩, ⟨n_Eve⟩)`.
    pub fn mean_photons(&self) -> (f64, f64) {
        let mut nb = 0.0;
        let mut ne = 0.0;
        for b in 0..self.dim {
            for e in 0..self.dim {
                let p = self.amplitude(b, e).norm_sqr();
                nb += b as f64 * p;
                ne += e as f64 * p;
            }
        }
        (nb, ne)
    }

    /// Weight in the last row and column of the truncated matrix.
    pub fn edge_mass(&self) -> f64 {
        let n = self.dim - 1;
        (0..self.dim)
            .map(|j| self.amplitude(n, j).norm_sqr() + self.amplitude(j, n).norm_sqr())
            .sum()
    }

    /// Homodyne density of Bob's mode with Eve's mode traced out.
    pub fn bob_quadrature_pdf(&self, angle: f64, x: f64) -> f64 {
        let psi = phased_wavefunctions(self.truncation(), angle, x);
        (0..self.dim)
            .map(|e| {
                (0..self.dim)
                    .map(|b| self.amplitude(b, e) * psi[b])
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    }

    /// Homodyne density of Eve's mode with Bob's mode traced out.
    pub fn eve_quadrature_pdf(&self, angle: f64, x: f64) -> f64 {
        let psi = phased_wavefunctions(self.truncation(), angle, x);
        (0..self.dim)
            .map(|b| {
                (0..self.dim)
                    .map(|e| self.amplitude(b, e) * psi[e])
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    }

    /// Joint density of both `ζ_r` quadratures.
    pub fn joint_quadrature_pdf(&self, x_bob: f64, x_eve: f64) -> f64 {
        let pb = quadrature_wavefunctions(self.truncation(), x_bob);
        let pe = quadrature_wavefunctions(self.truncation(), x_eve);
        let mut amp = Complex64::new(0.0, 0.0);
        for (b, &wb) in pb.iter().enumerate() {
            for (e, &we) in pe.iter().enumerate() {
                amp += self.amplitude(b, e) * (wb * we);
            }
        }
        amp.norm_sqr()
    }
}

fn phased_wavefunctions(nmax: usize, angle: f64, x: f64) -> Vec<Complex64> {
    quadrature_wavefunctions(nmax, x)
        .into_iter()
        .enumerate()
        .map(|(n, p)| Complex64::from_polar(p, -(n as f64) * angle))
        .collect()
}

/// Applies the beam splitter to `input ⊗ |0⟩`.
///
/// `|n, 0⟩ → Σ_j √C(n, j) T^j (-R)^(n-j) |j, n-j⟩`; photon number is
/// conserved, so the output needs no truncation beyond the input's.
pub fn bs_transform_fock(input: &FockVector, bs: &BeamSplitter) -> Result<TwoModeFock> {
    let nmax = input.truncation();
    if nmax > MAX_TWO_MODE_TRUNCATION {
        return Err(Error::invalid(
            "truncation",
            format!("two-mode output limited to {MAX_TWO_MODE_TRUNCATION} photons per mode"),
        ));
    }
    let dim = nmax + 1;
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=nmax).scan(0.0, |acc, j| {
            *acc += (j as f64).ln();
            Some(*acc)
        }))
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim * dim];
    let (t, r) = (bs.t(), bs.r());
    for (n, &c) in input.coeffs().iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for j in 0..=n {
            let binom = (0.5 * (ln_fact[n] - ln_fact[j] - ln_fact[n - j])).exp();
            let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
            let amp = binom * t.powi(j as i32) * sign * r.powi((n - j) as i32);
            coeffs[j * dim + (n - j)] += c * amp;
        }
    }
    Ok(TwoModeFock { dim, coeffs })
}
