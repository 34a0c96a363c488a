//! Time stepping of the Galerkin-truncated equation in mild form.
//!
//! Writing the drift as `-Lu + N(u)` with `L = 1 - ∂²` and `N(u) = u - P(u)`,
//! one exponential-Euler step of length `h` is
//!
//! ```text
//! u' = e^{-Lh} u + φ(h) N(u) + ξ,     φ(h) = (1 - e^{-Lh}) / L,
//! ```
//!
//! where `ξ` is the exact increment of the stochastic convolution `W_L`. The
//! same `ξ` drives `W_L(t + h) = e^{-Lh} W_L(t) + ξ`, so `Ψ = Φ - W_L` follows
//! `Ψ' = e^{-Lh} Ψ + φ(h) N(Ψ + W_L)` to rounding.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{eigenvalue, wavenumber, DriftPolynomial, PointwiseEvaluator, SpectralField};
use crate::noise::{ConvolutionStepSampler, NoiseSpectrum};
use crate::rng::CounterRng;

mod ode;

pub use ode::{dopri5, ode_comparison, OdeComparison, StepForcing};

/// The reaction term of the model.
#[derive(Clone, Debug, PartialEq)]
pub enum Reaction {
    /// `P(u)` with `N(u) = u - P(u)`.
    Polynomial(DriftPolynomial),
    /// `P(u) = u`, i.e. `N ≡ 0`: the equation is linear and every mode is an
    /// Ornstein-Uhlenbeck process. Kept outside [`DriftPolynomial`] because it
    /// breaks that type's degree constraint.
    Linear,
}

impl Reaction {
    pub fn polynomial(&self) -> Option<&DriftPolynomial> {
        match self {
            Self::Polynomial(p) => Some(p),
            Self::Linear => None,
        }
    }

    /// `N(y) = y - P(y)`.
    #[inline]
    pub fn effective(&self, y: f64) -> f64 {
        match self {
            Self::Polynomial(p) => y - p.eval(y),
            Self::Linear => 0.0,
        }
    }

    #[inline]
    fn effective_derivative(&self, y: f64) -> f64 {
        match self {
            Self::Polynomial(p) => 1.0 - p.derivative(y),
            Self::Linear => 0.0,
        }
    }
}

/// How the nonlinear part of a step is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Explicit `φ(h) N(u)`; exact linear flow and noise.
    ExponentialEuler,
    /// Lie splitting: pointwise backward Euler for `y' = N(y)`, then the exact
    /// linear flow and noise. Stable for arbitrarily large data as long as
    /// `h · sup N' < 1`.
    SplitImplicit,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ExponentialEuler => "exponential-euler",
            Self::SplitImplicit => "split-implicit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exponential-euler" => Some(Self::ExponentialEuler),
            "split-implicit" => Some(Self::SplitImplicit),
            _ => None,
        }
    }
}

pub const DEFAULT_BLOWUP_GUARD: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationParams {
    pub n_modes: usize,
    pub dt: f64,
    pub t_final: f64,
    pub reaction: Reaction,
    pub spectrum: NoiseSpectrum,
    pub seed: u64,
    pub scheme: Scheme,
    pub blowup_guard: f64,
    /// Record every step, not only integer times.
    pub record_dense: bool,
}

impl SimulationParams {
    /// `P(u) = u³ - u`, `N = 32`, `h = 1/256`, the degenerate default spectrum.
    pub fn default_model() -> Self {
        Self {
            n_modes: 32,
            dt: 1.0 / 256.0,
            t_final: 1.0,
            reaction: Reaction::Polynomial(DriftPolynomial::ginzburg_landau()),
            spectrum: NoiseSpectrum::default_degenerate(32),
            seed: 0,
            scheme: Scheme::ExponentialEuler,
            blowup_guard: DEFAULT_BLOWUP_GUARD,
            record_dense: false,
        }
    }

    pub fn steps_per_unit(&self) -> u64 {
        (1.0 / self.dt).round() as u64
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_final / self.dt + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidParams("n_modes must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "dt must lie in (0, 1], got {}",
                self.dt
            )));
        }
        let per_unit = (1.0 / self.dt).round();
        if ((per_unit * self.dt) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "dt = {} does not divide 1 into a whole number of steps",
                self.dt
            )));
        }
        if !(self.t_final >= 1.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParams(format!(
                "t_final must be at least 1, got {}",
                self.t_final
            )));
        }
        if self.spectrum.n_modes() != self.n_modes {
            return Err(Error::InvalidParams(format!(
                "spectrum carries {} modes but n_modes = {}",
                self.spectrum.n_modes(),
                self.n_modes
            )));
        }
        self.spectrum.validate().map_err(Error::Spectrum)?;
        if !(self.blowup_guard > 0.0) {
            return Err(Error::InvalidParams(
                "blow-up guard must be positive".into(),
            ));
        }
        if let (Scheme::SplitImplicit, Reaction::Polynomial(p)) = (self.scheme, &self.reaction) {
            let growth = 1.0 - min_derivative(p);
            if self.dt * growth >= 1.0 {
                return Err(Error::InvalidParams(format!(
                    "split-implicit step needs dt * sup N' < 1, got {}",
                    self.dt * growth
                )));
            }
        }
        Ok(())
    }
}

/// Global minimum of `P'` (an even-degree polynomial with positive leading
/// coefficient), located by dense sampling inside the root bound of `P''`
/// followed by Newton polishing.
fn min_derivative(p: &DriftPolynomial) -> f64 {
    let c = p.coeffs();
    let q = p.degree();
    // Cauchy bound for the critical points of P'
    let lead = c[q] * (q * (q - 1)) as f64;
    let radius = 1.0
        + (2..q)
            .map(|i| (c[i] * (i * (i - 1)) as f64 / lead).abs())
            .fold(0.0, f64::max);
    let samples = 20_000;
    let mut best = f64::INFINITY;
    for i in 0..=samples {
        let y = -radius + 2.0 * radius * i as f64 / samples as f64;
        best = best.min(p.derivative(y));
    }
    best
}

/// A validated model with all per-step operators precomputed.
#[derive(Clone, Debug)]
pub struct Simulator {
    params: SimulationParams,
    sampler: ConvolutionStepSampler,
    /// `φ(h)` per coefficient.
    phi: Vec<f64>,
    n_points: usize,
}

/// Per-thread scratch space for [`Simulator`].
pub struct Workspace {
    evaluator: Option<PointwiseEvaluator>,
    nonlinear: SpectralField,
    increment: Vec<f64>,
}

impl Simulator {
    pub fn new(params: SimulationParams) -> Result<Self> {
        params.validate()?;
        let sampler = ConvolutionStepSampler::new(&params.spectrum, params.dt)?;
        let h = params.dt;
        let phi = (0..2 * params.n_modes + 1)
            .map(|i| {
                let ell = eigenvalue(wavenumber(i));
                -(-ell * h).exp_m1() / ell
            })
            .collect();
        let n_points = match &params.reaction {
            Reaction::Polynomial(p) => match params.scheme {
                Scheme::ExponentialEuler => p.dealiased_points(params.n_modes),
                // the backward-Euler map is not a polynomial; oversample generously
                Scheme::SplitImplicit => {
                    crate::field::smooth_size(4 * (p.degree() + 1) * params.n_modes + 1)
                }
            },
            Reaction::Linear => 0,
        };
        Ok(Self {
            params,
            sampler,
            phi,
            n_points,
        })
    }

    pub fn params(&self) -> &SimulationParams {
        &self.params
    }

    pub fn sampler(&self) -> &ConvolutionStepSampler {
        &self.sampler
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.params.n_modes;
        Workspace {
            evaluator: (self.n_points > 0)
                .then(|| PointwiseEvaluator::new(n, self.n_points).expect("padded grid")),
            nonlinear: SpectralField::zeros(n),
            increment: vec![0.0; 2 * n + 1],
        }
    }

    /// Advances `(u, w) = (Φ_t, W_L(t))` by one step using the stream of `step`.
    /// `time` is only used for the diagnostic on blow-up.
    pub fn step_in_place(
        &self,
        u: &mut SpectralField,
        w: &mut SpectralField,
        rng: &mut CounterRng,
        step: u64,
        ws: &mut Workspace,
    ) -> Result<()> {
        let rng = rng.at_step(step);
        self.sampler.sample_increment(rng, &mut ws.increment);
        let decay = self.sampler.decay();
        let reaction = &self.params.reaction;
        let h = self.params.dt;
        match (self.params.scheme, ws.evaluator.as_mut()) {
            (_, None) => {
                for ((c, d), x) in u.coeffs_mut().iter_mut().zip(decay).zip(&ws.increment) {
                    *c = *c * d + x;
                }
            }
            (Scheme::ExponentialEuler, Some(ev)) => {
                ev.apply(u, |y| reaction.effective(y), &mut ws.nonlinear);
                let nl = ws.nonlinear.coeffs();
                for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
                    *c = *c * decay[i] + self.phi[i] * nl[i] + ws.increment[i];
                }
            }
            (Scheme::SplitImplicit, Some(ev)) => {
                ev.apply(
                    u,
                    |y| backward_euler_point(reaction, h, y),
                    &mut ws.nonlinear,
                );
                let v = ws.nonlinear.coeffs();
                for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
                    *c = v[i] * decay[i] + ws.increment[i];
                }
            }
        }
        for ((c, d), x) in w.coeffs_mut().iter_mut().zip(decay).zip(&ws.increment) {
            *c = *c * d + x;
        }
        let norm = u.norm();
        if !(norm <= self.params.blowup_guard) {
            return Err(Error::BlowUp {
                time: (step + 1) as f64 * h,
                norm,
                guard: self.params.blowup_guard,
            });
        }
        Ok(())
    }

    /// One step from `u` with a fresh workspace; convenience for tests and FFI.
    pub fn step(&self, u: &SpectralField, trajectory: u64, step: u64) -> Result<SpectralField> {
        let mut ws = self.workspace();
        let mut rng = CounterRng::new(self.params.seed, trajectory);
        let mut out = u.clone();
        let mut w = SpectralField::zeros(self.params.n_modes);
        self.step_in_place(&mut out, &mut w, &mut rng, step, &mut ws)?;
        Ok(out)
    }

    /// Runs trajectory `trajectory` from `x`, calling `observer(step, Φ, W_L)`
    /// at step 0 and after every step.
    pub fn run<F>(
        &self,
        x: &SpectralField,
        trajectory: u64,
        ws: &mut Workspace,
        mut observer: F,
    ) -> Result<()>
    where
        F: FnMut(u64, &SpectralField, &SpectralField),
    {
        let n = self.params.n_modes;
        if x.n_modes() != n {
            return Err(Error::InvalidField(format!(
                "initial condition has {} modes, model has {n}",
                x.n_modes()
            )));
        }
        let mut u = x.clone();
        let mut w = SpectralField::zeros(n);
        let mut rng = CounterRng::new(self.params.seed, trajectory);
        observer(0, &u, &w);
        for step in 0..self.params.total_steps() {
            self.step_in_place(&mut u, &mut w, &mut rng, step, ws)?;
            observer(step + 1, &u, &w);
        }
        Ok(())
    }

    pub fn simulate(&self, x: &SpectralField, trajectory: u64) -> Result<Trajectory> {
        let per_unit = self.params.steps_per_unit();
        let mut traj = Trajectory {
            trajectory_id: trajectory,
            dt: self.params.dt,
            initial: x.clone(),
            times: Vec::new(),
            states: Vec::new(),
            convolution: Vec::new(),
            dense: self.params.record_dense.then(DensePath::default),
        };
        let mut ws = self.workspace();
        self.run(x, trajectory, &mut ws, |step, u, w| {
            if step % per_unit == 0 {
                traj.times.push((step / per_unit) as f64);
                traj.states.push(u.clone());
                traj.convolution.push(w.clone());
            }
            if let Some(d) = traj.dense.as_mut() {
                d.states.push(u.clone());
                d.convolution.push(w.clone());
            }
        })?;
        Ok(traj)
    }
}

/// Solves `z - h N(z) = y` for `z` by safeguarded Newton iteration.
fn backward_euler_point(reaction: &Reaction, h: f64, y: f64) -> f64 {
    let f = |z: f64| z - h * reaction.effective(z) - y;
    let df = |z: f64| 1.0 - h * reaction.effective_derivative(z);
    // f is strictly increasing; bracket the root starting from y
    let mut lo = y;
    let mut hi = y;
    let mut width = 1.0 + y.abs();
    while f(lo) > 0.0 {
        lo -= width;
        width *= 2.0;
    }
    width = 1.0 + y.abs();
    while f(hi) < 0.0 {
        hi += width;
        width *= 2.0;
    }
    let mut z = y.clamp(lo, hi);
    for _ in 0..200 {
        let fz = f(z);
        if fz == 0.0 {
            return z;
        }
        if fz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - fz / df(z);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - z).abs() <= 1e-15 * (1.0 + z.abs()) {
            return next;
        }
        z = next;
    }
    z
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensePath {
    /// `Φ` after every step, starting at `t = 0`.
    pub states: Vec<SpectralField>,
    /// `W_L` at the same times.
    pub convolution: Vec<SpectralField>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub trajectory_id: u64,
    pub dt: f64,
    pub initial: SpectralField,
    /// Integer sample times `0, 1, ..., ⌊T⌋`.
    pub times: Vec<f64>,
    /// The chain `Φ` at those times.
    pub states: Vec<SpectralField>,
    /// `W_L` at those times.
    pub convolution: Vec<SpectralField>,
    pub dense: Option<DensePath>,
}

impl Trajectory {
    /// `Ψ = Φ - W_L` at the integer times.
    pub fn auxiliary(&self) -> Vec<SpectralField> {
        self.states
            .iter()
            .zip(&self.convolution)
            .map(|(u, w)| {
                let mut psi = u.clone();
                psi.axpy(-1.0, w);
                psi
            })
            .collect()
    }
}

pub const TRAJECTORY_CSV_COLUMNS: &str =
    "trajectory,t,norm_0,norm_gamma,sup_norm,c0,a1,b1,a2,b2,a3";

/// Writes the integer-time rows of `traj` in the fixed column order of
/// [`TRAJECTORY_CSV_COLUMNS`]. The caller writes the header block.
pub fn write_trajectory_rows<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    gamma: f64,
) -> std::io::Result<()> {
    for (t, u) in traj.times.iter().zip(&traj.states) {
        write!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e}",
            traj.trajectory_id,
            t,
            u.norm(),
            u.norm_gamma(gamma),
            u.sup_norm()
        )?;
        for i in 0..6 {
            write!(out, ",{:.17e}", u.coeffs().get(i).copied().unwrap_or(0.0))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiniConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiniReport {
    pub steps: usize,
    pub satisfied: usize,
    pub fraction: f64,
    /// Largest `D - (c1 - c2 s^q + c3 w^q)` seen; nonpositive means every step passed.
    pub worst_excess: f64,
}

/// `(‖Ψ_t‖_∞, ‖W_L(t)‖_∞)` for every recorded step.
fn dense_sup_norms(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let dense = traj
        .dense
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("trajectory has no dense path recorded".into()))?;
    Ok(dense
        .states
        .iter()
        .zip(&dense.convolution)
        .map(|(u, w)| {
            let mut psi = u.clone();
            psi.axpy(-1.0, w);
            (psi.sup_norm(), w.sup_norm())
        })
        .collect())
}

/// Residuals `D_t + c2 s_t^q - c3 w_t^q` with the backward difference
/// `D_t = (s_t - s_{t-h}) / h`; `c1` bounds them from above.
fn dini_residuals(norms: &[(f64, f64)], h: f64, degree: i32, c2: f64, c3: f64) -> Vec<f64> {
    norms
        .windows(2)
        .map(|pair| {
            let (s_prev, _) = pair[0];
            let (s, w) = pair[1];
            (s - s_prev) / h + c2 * s.powi(degree) - c3 * w.powi(degree)
        })
        .collect()
}

/// Fraction of steps where the backward difference of `‖Ψ‖_∞` obeys
/// `D ≤ c1 - c2 ‖Ψ‖_∞^q + c3 ‖W_L‖_∞^q`.
pub fn dini_check(
    traj: &Trajectory,
    degree: usize,
    constants: DiniConstants,
) -> Result<DiniReport> {
    let DiniConstants { c1, c2, c3 } = constants;
    if !(c1 > 0.0 && c2 > 0.0 && c3 > 0.0) {
        return Err(Error::InvalidParams(
            "Dini constants must be positive".into(),
        ));
    }
    let norms = dense_sup_norms(traj)?;
    let residuals = dini_residuals(&norms, traj.dt, degree as i32, c2, c3);
    let satisfied = residuals.iter().filter(|&&r| r <= c1).count();
    let worst_excess = residuals
        .iter()
        .map(|r| r - c1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DiniReport {
        steps: residuals.len(),
        satisfied,
        fraction: if residuals.is_empty() {
            1.0
        } else {
            satisfied as f64 / residuals.len() as f64
        },
        worst_excess,
    })
}

/// Proposes constants from calibration trajectories: `c2 = p_q / 2^{q-1}` and
/// `c3 = 2^{q-1} p_q` come from `(a + b)^q ≥ 2^{1-q} a^q - b^q`-type splitting,
/// and `c1` is the largest observed residual (at least `1e-12`).
pub fn fit_dini_constants(trajs: &[Trajectory], poly: &DriftPolynomial) -> Result<DiniConstants> {
    let q = poly.degree() as i32;
    let split = 2f64.powi(q - 1);
    let c2 = poly.leading() / split;
    let c3 = poly.leading() * split;
    let mut c1 = 1e-12f64;
    for traj in trajs {
        let norms = dense_sup_norms(traj)?;
        for r in dini_residuals(&norms, traj.dt, q, c2, c3) {
            c1 = c1.max(r);
        }
    }
    Ok(DiniConstants { c1, c2, c3 })
}
