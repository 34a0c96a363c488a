//! Degenerate diagonal noise and exact sampling of the stochastic convolution.
//!
//! In the basis of [`crate::field`], `Q` multiplies both coefficients of
//! wavenumber `k` by `q_k`, and every coordinate of `W_L(t) = ∫ e^{-L(t-s)} Q dW(s)`
//! is an independent Ornstein-Uhlenbeck process. One step of length `h` is
//! sampled exactly:
//!
//! ```text
//! W_k(t+h) = e^{-ℓ_k h} W_k(t) + s_k(h) Z,   s_k(h)² = q_k² (1 - e^{-2ℓ_k h}) / (2ℓ_k)
//! ```

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{eigenvalue, wavenumber, SpectralField, SpectralTransform};
use crate::rng::CounterRng;
use crate::stats::McEstimate;

/// Relative slack when comparing `q_k` against the power-law envelope.
const BOUND_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpectrum {
    pub alpha: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub k_star: usize,
    /// `q_k` for `k = 0..=N`.
    pub q: Vec<f64>,
}

impl NoiseSpectrum {
    /// `q_k = amplitude · k^{-2α}` above `k_*`, zero at and below it.
    pub fn power_law(n_modes: usize, alpha: f64, k_star: usize, amplitude: f64) -> Self {
        let q = (0..=n_modes)
            .map(|k| {
                if k <= k_star {
                    0.0
                } else {
                    amplitude * (k as f64).powf(-2.0 * alpha)
                }
            })
            .collect();
        Self {
            alpha,
            beta: alpha,
            c1: amplitude,
            c2: amplitude,
            k_star,
            q,
        }
    }

    /// `q_k = k^{-4}` for `k > 3`, nothing forced below: the unstable constant
    /// mode and the first three wavenumbers only feel noise through the drift.
    pub fn default_degenerate(n_modes: usize) -> Self {
        Self::power_law(n_modes, 2.0, 3, 1.0)
    }

    /// All `q_k = 0`; the envelope checks are skipped by setting `k_*` to `N`.
    pub fn silent(n_modes: usize) -> Self {
        Self {
            alpha: 2.0,
            beta: 2.0,
            c1: 1.0,
            c2: 1.0,
            k_star: n_modes,
            q: vec![0.0; n_modes + 1],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.q.len().saturating_sub(1)
    }

    /// Multiplies every `q_k` (and both envelope constants) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.q.iter_mut().for_each(|q| *q *= factor);
        s.c1 *= factor;
        s.c2 *= factor;
        s
    }

    /// Checks the exponent window, the constants and the two-sided envelope,
    /// stopping at the first violation.
    pub fn validate(&self) -> std::result::Result<(), SpectrumViolation> {
        if !(self.alpha >= 2.0) {
            return Err(SpectrumViolation::Alpha { alpha: self.alpha });
        }
        if !(self.beta > self.alpha - 0.125 && self.beta <= self.alpha) {
            return Err(SpectrumViolation::BetaWindow {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        for (name, value) in [("c1", self.c1), ("c2", self.c2)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SpectrumViolation::Constant { name, value });
            }
        }
        for (k, &q_k) in self.q.iter().enumerate() {
            if !q_k.is_finite() || q_k < 0.0 {
                return Err(SpectrumViolation::Negative { k, q_k });
            }
            if k <= self.k_star {
                continue;
            }
            let kf = k as f64;
            let lower = self.c1 * kf.powf(-2.0 * self.alpha);
            if q_k < lower * (1.0 - BOUND_RTOL) {
                return Err(SpectrumViolation::Lower {
                    k,
                    q_k,
                    bound: lower,
                });
            }
            let upper = self.c2 * kf.powf(-2.0 * self.beta);
            if q_k > upper * (1.0 + BOUND_RTOL) {
                return Err(SpectrumViolation::Upper {
                    k,
                    q_k,
                    bound: upper,
                });
            }
        }
        Ok(())
    }
}

/// First violated condition of a [`NoiseSpectrum`], rendered as `key = value` lines.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumViolation {
    Alpha { alpha: f64 },
    BetaWindow { alpha: f64, beta: f64 },
    Constant { name: &'static str, value: f64 },
    Negative { k: usize, q_k: f64 },
    Lower { k: usize, q_k: f64, bound: f64 },
    Upper { k: usize, q_k: f64, bound: f64 },
}

impl fmt::Display for SpectrumViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Alpha { alpha } => {
                writeln!(f, "violation = alpha_at_least_2")?;
                write!(f, "alpha = {alpha}")
            }
            Self::BetaWindow { alpha, beta } => {
                writeln!(f, "violation = beta_window")?;
                writeln!(f, "condition = alpha - 1/8 < beta <= alpha")?;
                writeln!(f, "alpha = {alpha}")?;
                write!(f, "beta = {beta}")
            }
            Self::Constant { name, value } => {
                writeln!(f, "violation = positive_constant")?;
                write!(f, "{name} = {value}")
            }
            Self::Negative { k, q_k } => {
                writeln!(f, "violation = nonnegative_q")?;
                writeln!(f, "k = {k}")?;
                write!(f, "q_k = {q_k}")
            }
            Self::Lower { k, q_k, bound } => {
                writeln!(f, "violation = lower_bound")?;
                writeln!(f, "condition = c1 * k^(-2 alpha) <= q_k")?;
                writeln!(f, "k = {k}")?;
                writeln!(f, "q_k = {q_k}")?;
                write!(f, "bound = {bound}")
            }
            Self::Upper { k, q_k, bound } => {
                writeln!(f, "violation = upper_bound")?;
                writeln!(f, "condition = q_k <= c2 * k^(-2 beta)")?;
                writeln!(f, "k = {k}")?;
                writeln!(f, "q_k = {q_k}")?;
                write!(f, "bound = {bound}")
            }
        }
    }
}

/// Exact one-step sampler for `W_L` on a fixed step `h`.
#[derive(Clone, Debug)]
pub struct ConvolutionStepSampler {
    h: f64,
    /// `e^{-ℓ_k h}` per coefficient.
    decay: Vec<f64>,
    /// `s_k(h)` per coefficient.
    std: Vec<f64>,
}

impl ConvolutionStepSampler {
    pub fn new(spectrum: &NoiseSpectrum, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParams(format!(
                "step must be positive, got {h}"
            )));
        }
        let n = spectrum.n_modes();
        let mut decay = Vec::with_capacity(2 * n + 1);
        let mut std = Vec::with_capacity(2 * n + 1);
        for i in 0..2 * n + 1 {
            let k = wavenumber(i);
            decay.push((-eigenvalue(k) * h).exp());
            std.push(step_std(spectrum.q[k], k, h));
        }
        Ok(Self { h, decay, std })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_modes(&self) -> usize {
        (self.std.len() - 1) / 2
    }

    pub fn step_std(&self) -> &[f64] {
        &self.std
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// Fills `out` with independent `Normal(0, s_k(h)²)` draws; unforced
    /// coordinates get exactly 0 and consume no randomness.
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, &s) in out.iter_mut().zip(&self.std) {
            *o = if s == 0.0 {
                0.0
            } else {
                let z: f64 = rng.sample(StandardNormal);
                s * z
            };
        }
    }

    /// `W ← e^{-Lh} W + ξ`, writing the increment `ξ` into `increment`.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        w: &mut SpectralField,
        rng: &mut R,
        increment: &mut [f64],
    ) {
        self.sample_increment(rng, increment);
        for ((c, d), x) in w
            .coeffs_mut()
            .iter_mut()
            .zip(&self.decay)
            .zip(increment.iter())
        {
            *c = *c * d + x;
        }
    }
}

/// `s_k(h) = q_k sqrt((1 - e^{-2ℓ_k h}) / (2ℓ_k))`.
pub fn step_std(q_k: f64, k: usize, h: f64) -> f64 {
    if q_k == 0.0 {
        return 0.0;
    }
    let ell = eigenvalue(k);
    q_k * (-(-2.0 * ell * h).exp_m1() / (2.0 * ell)).sqrt()
}

/// One exact convolution increment for `(seed, trajectory, step)`.
pub fn convolution_step(
    sampler: &ConvolutionStepSampler,
    seed: u64,
    trajectory: u64,
    step: u64,
) -> Vec<f64> {
    let mut rng = CounterRng::new(seed, trajectory);
    let mut out = vec![0.0; sampler.std.len()];
    sampler.sample_increment(rng.at_step(step), &mut out);
    out
}

/// Monte Carlo estimate of `E sup_{s <= t} ‖W_L(s)‖_∞^p`, with the supremum
/// taken over the step grid of width `dt` and an `8N`-point spatial grid.
pub fn sup_gaussian_check(
    spectrum: &NoiseSpectrum,
    t: f64,
    p: f64,
    n_samples: usize,
    dt: f64,
    seed: u64,
) -> Result<McEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParams(format!(
            "moment order must be >= 1, got {p}"
        )));
    }
    let sampler = ConvolutionStepSampler::new(spectrum, dt)?;
    let n = spectrum.n_modes();
    let steps = (t / dt).round() as u64;
    let m = (8 * n).max(2 * n + 1);
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map_init(
            || {
                (
                    SpectralTransform::new(n, m).expect("grid sized for N"),
                    vec![0.0; m],
                    vec![0.0; 2 * n + 1],
                )
            },
            |(tr, grid, inc), traj| {
                let mut rng = CounterRng::new(seed, traj);
                let mut w = SpectralField::zeros(n);
                let mut sup = 0.0f64;
                for step in 0..steps {
                    sampler.advance(&mut w, rng.at_step(step), inc);
                    tr.synthesize(&w, grid);
                    sup = grid.iter().fold(sup, |acc, v| acc.max(v.abs()));
                }
                sup.powf(p)
            },
        )
        .collect();
    Ok(McEstimate::from_samples(&values))
}
