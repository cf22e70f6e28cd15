//! Monte Carlo run of the four-state protocol with post-selection.
//!
//! Pulses are processed in fixed-size batches; batch `b` draws from a
//! ChaCha8 stream `b` keyed by the master seed, so counts do not depend on
//! scheduling and reruns are bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{bs_transform_fock, BeamSplitter};
use crate::error::{Error, Result};
use crate::state::{
    default_truncation, fock_coefficients, quadrature_pdf, Basis, FockVector, SignalLabel, StateFamily,
};

pub const TABLE_NODES: usize = 4096;
pub const BATCH_SIZE: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub family: StateFamily,
    pub alpha: f64,
    pub beta_c: f64,
    pub n_pulses: u64,
    pub rng_seed: u64,
    pub t_squared: f64,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite and positive"));
        }
        if !(self.beta_c >= 0.0 && self.beta_c.is_finite()) {
            return Err(Error::invalid("beta_c", "must be finite and non-negative"));
        }
        if self.n_pulses == 0 {
            return Err(Error::invalid("n_pulses", "must be at least 1"));
        }
        BeamSplitter::from_transmission(self.t_squared)?;
        Ok(())
    }
}

/// Counts and estimates from one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftReport {
    pub n_sent: u64,
    pub n_sifted: u64,
    pub n_accepted: u64,
    pub n_errors: u64,
    /// `n_accepted / n_sent`; sifting is part of the rate.
    pub r_acc: f64,
    pub r_acc_se: f64,
    /// `n_errors / n_accepted`, zero when nothing was accepted.
    pub delta: f64,
    pub delta_se: f64,
    pub sift_fraction: f64,
    pub sift_se: f64,
}

fn binomial(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

impl SiftReport {
    fn from_counts(n_sent: u64, n_sifted: u64, n_accepted: u64, n_errors: u64) -> Self {
        let (r_acc, r_acc_se) = binomial(n_accepted, n_sent);
        let (delta, delta_se) = binomial(n_errors, n_accepted);
        let (sift_fraction, sift_se) = binomial(n_sifted, n_sent);
        Self {
            n_sent,
            n_sifted,
            n_accepted,
            n_errors,
            r_acc,
            r_acc_se,
            delta,
            delta_se,
            sift_fraction,
            sift_se,
        }
    }
}

/// Inverse-CDF sampler over a tabulated density.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadratureSampler {
    /// Tabulates `pdf` on `TABLE_NODES` points of `[-half_width, half_width]`.
    pub fn from_pdf(half_width: f64, pdf: impl Fn(f64) -> f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid("half_width", "must be finite and positive"));
        }
        let h = 2.0 * half_width / (TABLE_NODES - 1) as f64;
        let xs: Vec<f64> = (0..TABLE_NODES).map(|i| -half_width + i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|&x| pdf(x)).collect();
        if let Some(i) = f.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite { at: vec![xs[i]] });
        }
        let mut cdf = Vec::with_capacity(TABLE_NODES);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in f.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::invalid("pdf", "has no mass on the table"));
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { xs, cdf })
    }

    /// Homodyne sampler for `state` at local-oscillator phase `angle`.
    pub fn for_state(state: &FockVector, angle: f64) -> Result<Self> {
        Self::from_pdf(state_half_width(state), |x| quadrature_pdf(state, angle, x))
    }

    /// Quantile at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.xs[k - 1] + t * (self.xs[k] - self.xs[k - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }
}

fn state_half_width(state: &FockVector) -> f64 {
    state.mean_photon_number().sqrt() + 6.0
}

/// One draw; builds the table each call, so loops should hold a
/// [`QuadratureSampler`] instead.
pub fn sample_quadrature<R: Rng + ?Sized>(state: &FockVector, angle: f64, rng: &mut R) -> Result<f64> {
    Ok(QuadratureSampler::for_state(state, angle)?.sample(rng))
}

/// Sampler for Bob's outcome when `label` is sent and bases match.
fn bob_sampler(config: &ProtocolConfig, label: SignalLabel) -> Result<QuadratureSampler> {
    let alpha = label.amplitude(config.alpha);
    let state = fock_coefficients(&config.family.params(alpha), default_truncation(alpha))?;
    let angle = label.basis().angle();
    if config.t_squared >= 1.0 {
        return QuadratureSampler::for_state(&state, angle);
    }
    let bs = BeamSplitter::from_transmission(config.t_squared)?;
    let out = bs_transform_fock(&state, &bs)?;
    QuadratureSampler::from_pdf(state_half_width(&state), |x| out.bob_quadrature_pdf(angle, x))
}

#[derive(Default, Clone, Copy)]
struct Counts {
    sifted: u64,
    accepted: u64,
    errors: u64,
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<SiftReport> {
    config.validate()?;
    let samplers: Vec<QuadratureSampler> = SignalLabel::ALL
        .into_iter()
        .map(|l| bob_sampler(config, l))
        .collect::<Result<_>>()?;
    let n_batches = config.n_pulses.div_ceil(BATCH_SIZE);
    let counts = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(b);
            let len = BATCH_SIZE.min(config.n_pulses - b * BATCH_SIZE);
            let mut c = Counts::default();
            for _ in 0..len {
                let k = rng.gen_range(0..4);
                let label = SignalLabel::ALL[k];
                let basis = if rng.gen::<bool>() { Basis::Vertical } else { Basis::Horizontal };
                if basis != label.basis() {
                    continue;
                }
                c.sifted += 1;
                let x = samplers[k].sample(&mut rng);
                if x.abs() <= config.beta_c {
                    continue;
                }
                c.accepted += 1;
                let bit = u8::from(x > 0.0);
                if bit != label.bit() {
                    c.errors += 1;
                }
            }
            c
        })
        .reduce(Counts::default, |a, b| Counts {
            sifted: a.sifted + b.sifted,
            accepted: a.accepted + b.accepted,
            errors: a.errors + b.errors,
        });
    Ok(SiftReport::from_counts(
        config.n_pulses,
        counts.sifted,
        counts.accepted,
        counts.errors,
    ))
}
