//! Ensemble statistics: moment bounds, law-distance proxies and rate fits.
//!
//! Trajectory `j` of initial condition `i` uses stream `(i << 32) | j`, so
//! every ensemble draws from its own block and results do not depend on
//! thread scheduling. All reductions run in index order.

use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{SpectralField, SpectralTransform};
use crate::integrator::{SimulationParams, Simulator, Trajectory};
use crate::rng::{CounterRng, AUX_STREAM_BASE};
use crate::stats::{quantile, McEstimate};

/// `(‖u‖_γ, c_0, a_1, b_1, a_2, b_2)`.
pub type Observable = [f64; 6];
pub const OBSERVABLE_NAMES: [&str; 6] = ["norm_gamma", "c0", "a1", "b1", "a2", "b2"];
pub const HISTOGRAM_BINS: usize = 32;

const IC_STREAM: u64 = AUX_STREAM_BASE;
const BOOTSTRAP_STREAM: u64 = AUX_STREAM_BASE + 1;
const PERMUTATION_STREAM: u64 = AUX_STREAM_BASE + 2;

/// How an initial condition is written in a config file.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// A fixed Gaussian direction (drawn from the seed) scaled to `‖x‖_γ = R`.
    ScaledRandom(f64),
    /// Coefficients `c0, a1, b1, ...`; missing trailing modes are zero.
    Coefficients(Vec<f64>),
}

impl InitialCondition {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(Self::Zero);
        }
        if let Some(r) = s.strip_prefix("scaled-random:") {
            let r: f64 = r
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad radius in {s:?}")))?;
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Parse(format!("radius must be nonnegative in {s:?}")));
            }
            return Ok(Self::ScaledRandom(r));
        }
        let coeffs = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coefficient {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() {
            return Err(Error::Parse("empty initial condition".into()));
        }
        Ok(Self::Coefficients(coeffs))
    }

    pub fn resolve(&self, n_modes: usize, gamma: f64, seed: u64) -> Result<SpectralField> {
        let size = 2 * n_modes + 1;
        match self {
            Self::Zero => Ok(SpectralField::zeros(n_modes)),
            Self::ScaledRandom(r) => {
                let mut rng = CounterRng::new(seed, IC_STREAM);
                let rng = rng.at_step(0);
                let direction: Vec<f64> = (0..size).map(|_| rng.sample(StandardNormal)).collect();
                let u = SpectralField::from_coeffs(direction)?;
                let norm = u.norm_gamma(gamma);
                let mut out = SpectralField::zeros(n_modes);
                out.axpy(r / norm, &u);
                Ok(out)
            }
            Self::Coefficients(c) => {
                if c.len() > size {
                    return Err(Error::InvalidField(format!(
                        "{} coefficients given for {n_modes} modes",
                        c.len()
                    )));
                }
                let mut coeffs = c.clone();
                coeffs.resize(size, 0.0);
                SpectralField::from_coeffs(coeffs)
            }
        }
    }
}

impl std::fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::ScaledRandom(r) => write!(f, "scaled-random:{r}"),
            Self::Coefficients(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub initial: Vec<SpectralField>,
    pub labels: Vec<String>,
    pub n_traj: usize,
    pub params: SimulationParams,
    pub gamma: f64,
    pub p: f64,
}

impl EnsembleSpec {
    pub fn new(
        initial: Vec<SpectralField>,
        n_traj: usize,
        params: SimulationParams,
        gamma: f64,
        p: f64,
    ) -> Result<Self> {
        let labels = (0..initial.len()).map(|i| format!("ic{i}")).collect();
        let spec = Self {
            initial,
            labels,
            n_traj,
            params,
            gamma,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Resolves textual initial conditions against the model size and seed.
    pub fn from_conditions(
        conditions: &[InitialCondition],
        n_traj: usize,
        params: SimulationParams,
        gamma: f64,
        p: f64,
    ) -> Result<Self> {
        let initial = conditions
            .iter()
            .map(|c| c.resolve(params.n_modes, gamma, params.seed))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = Self::new(initial, n_traj, params, gamma, p)?;
        spec.labels = conditions.iter().map(|c| c.to_string()).collect();
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial.is_empty() || self.n_traj == 0 {
            return Err(Error::InvalidParams(
                "ensemble needs initial conditions and trajectories".into(),
            ));
        }
        if !(self.gamma <= self.params.spectrum.alpha) {
            return Err(Error::InvalidParams(format!(
                "gamma = {} exceeds alpha = {}",
                self.gamma, self.params.spectrum.alpha
            )));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "p = {} must be at least 1",
                self.p
            )));
        }
        if let Some(x) = self
            .initial
            .iter()
            .find(|x| x.n_modes() != self.params.n_modes)
        {
            return Err(Error::InvalidField(format!(
                "initial condition has {} modes, model has {}",
                x.n_modes(),
                self.params.n_modes
            )));
        }
        self.params.validate()
    }

    /// `V_{γ,p}(u) = ‖u‖_γ^p + 1`.
    pub fn lyapunov(&self, u: &SpectralField) -> f64 {
        u.norm_gamma(self.gamma).powf(self.p) + 1.0
    }

    fn trajectory_id(i: usize, j: usize) -> u64 {
        ((i as u64) << 32) | j as u64
    }

    fn with_horizon(&self, t_final: f64) -> Self {
        let mut spec = self.clone();
        spec.params.t_final = t_final;
        spec
    }

    /// Runs every trajectory, mapping it through `f`; returns one vector per
    /// initial condition, each in trajectory order. Aborted trajectories are
    /// kept as errors.
    fn map_trajectories<T, F>(
        &self,
        init: impl Fn() -> T + Sync + Send,
        f: F,
    ) -> Result<Vec<Vec<Result<T>>>>
    where
        T: Send,
        F: Fn(&Simulator, &SpectralField, u64, &mut T) -> Result<()> + Sync + Send,
    {
        self.validate()?;
        let sim = Simulator::new(self.params.clone())?;
        let n = self.n_traj;
        let total = self.initial.len() * n;
        let flat: Vec<Result<T>> = (0..total)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let mut out = init();
                f(&sim, &self.initial[i], Self::trajectory_id(i, j), &mut out)?;
                Ok(out)
            })
            .collect();
        let mut grouped: Vec<Vec<Result<T>>> = Vec::with_capacity(self.initial.len());
        let mut it = flat.into_iter();
        for _ in 0..self.initial.len() {
            grouped.push(it.by_ref().take(n).collect());
        }
        Ok(grouped)
    }

    /// Full integer-time trajectories for every initial condition.
    pub fn simulate_all(&self) -> Result<Vec<Vec<Result<Trajectory>>>> {
        self.map_trajectories(
            || None,
            |sim, x, id, out| {
                *out = Some(sim.simulate(x, id)?);
                Ok(())
            },
        )
        .map(|groups| {
            groups
                .into_iter()
                .map(|g| {
                    g.into_iter()
                        .map(|r| r.map(|t| t.expect("set on success")))
                        .collect()
                })
                .collect()
        })
    }

    /// Observables and `‖Φ_t‖_γ^p` at every integer time `0..=⌊T⌋`.
    fn integer_time_samples(&self) -> Result<Vec<Vec<Result<IntegerTimeSamples>>>> {
        let per_unit = self.params.steps_per_unit();
        let (gamma, p) = (self.gamma, self.p);
        self.map_trajectories(IntegerTimeSamples::default, move |sim, x, id, out| {
            let mut ws = sim.workspace();
            sim.run(x, id, &mut ws, |step, u, _| {
                if step % per_unit == 0 {
                    out.observables.push(observable(u, gamma));
                    out.moments.push(u.norm_gamma(gamma).powf(p));
                }
            })
        })
    }
}

#[derive(Clone, Debug, Default)]
struct IntegerTimeSamples {
    observables: Vec<Observable>,
    moments: Vec<f64>,
}

pub fn observable(u: &SpectralField, gamma: f64) -> Observable {
    let c = u.coeffs();
    let at = |i: usize| c.get(i).copied().unwrap_or(0.0);
    [u.norm_gamma(gamma), at(0), at(1), at(2), at(3), at(4)]
}

/// Thresholds for calling a set of estimates uniform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformityCriteria {
    /// Largest allowed ratio between any two estimates.
    pub max_ratio: f64,
    pub require_overlap: bool,
}

impl Default for UniformityCriteria {
    fn default() -> Self {
        Self {
            max_ratio: 2.0,
            require_overlap: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformityVerdict {
    /// Largest pairwise ratio of estimates (1 when all are zero).
    pub max_ratio: f64,
    pub all_overlap: bool,
    pub passed: bool,
}

pub fn uniformity(estimates: &[McEstimate], criteria: UniformityCriteria) -> UniformityVerdict {
    let mut max_ratio = 1.0f64;
    let mut all_overlap = true;
    for (k, a) in estimates.iter().enumerate() {
        for b in &estimates[k + 1..] {
            let (lo, hi) = if a.mean <= b.mean {
                (a.mean, b.mean)
            } else {
                (b.mean, a.mean)
            };
            let ratio = if hi == 0.0 {
                1.0
            } else if lo <= 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            };
            max_ratio = max_ratio.max(ratio);
            all_overlap &= a.ci_overlaps(b);
        }
    }
    let passed = estimates.iter().all(|e| e.mean.is_finite())
        && max_ratio <= criteria.max_ratio
        && (all_overlap || !criteria.require_overlap);
    UniformityVerdict {
        max_ratio,
        all_overlap,
        passed,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub initial: usize,
    pub label: String,
    pub t: f64,
    /// `‖x‖_γ` of the initial condition.
    pub initial_norm: f64,
    pub estimate: McEstimate,
    /// Trajectories that hit the blow-up guard and are excluded from the estimate.
    pub aborted: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub gamma: f64,
    pub p: f64,
    pub rows: Vec<MomentRow>,
    pub verdict: UniformityVerdict,
}

pub const MOMENT_CSV_COLUMNS: &str =
    "initial,label,t,initial_norm,mean,stderr,ci_low,ci_high,n,aborted";

impl MomentTable {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{MOMENT_CSV_COLUMNS}")?;
        for r in &self.rows {
            let (lo, hi) = r.estimate.ci95();
            writeln!(
                out,
                "{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
                r.initial,
                r.label,
                r.t,
                r.initial_norm,
                r.estimate.mean,
                r.estimate.stderr,
                lo,
                hi,
                r.estimate.n,
                r.aborted
            )?;
        }
        Ok(())
    }

    pub fn summary_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "max_ratio = {}", self.verdict.max_ratio);
        let _ = writeln!(s, "ci_overlap = {}", self.verdict.all_overlap);
        let _ = writeln!(s, "uniform = {}", self.verdict.passed);
        s
    }
}

fn split_aborted<T>(results: Vec<Result<T>>) -> (Vec<T>, usize) {
    let mut ok = Vec::with_capacity(results.len());
    let mut aborted = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(_) => aborted += 1,
        }
    }
    (ok, aborted)
}

/// Monte Carlo estimates of `E‖Φ_t(x)‖_γ^p` for each initial condition and
/// the uniformity verdict across them. `t` must be a whole number of steps.
pub fn moment_bound(
    spec: &EnsembleSpec,
    t: f64,
    criteria: UniformityCriteria,
) -> Result<MomentTable> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let run = spec.with_horizon(t);
    run.validate()?;
    let (gamma, p) = (spec.gamma, spec.p);
    let finals = run.map_trajectories(
        || 0.0f64,
        move |sim, x, id, out| {
            let mut ws = sim.workspace();
            let last = sim.params().total_steps();
            sim.run(x, id, &mut ws, |step, u, _| {
                if step == last {
                    *out = u.norm_gamma(gamma).powf(p);
                }
            })
        },
    )?;
    let mut rows = Vec::new();
    for (i, results) in finals.into_iter().enumerate() {
        let (samples, aborted) = split_aborted(results);
        rows.push(MomentRow {
            initial: i,
            label: spec.labels[i].clone(),
            t,
            initial_norm: spec.initial[i].norm_gamma(gamma),
            estimate: McEstimate::from_samples(&samples),
            aborted,
        });
    }
    let estimates: Vec<McEstimate> = rows.iter().map(|r| r.estimate).collect();
    Ok(MomentTable {
        gamma,
        p,
        rows,
        verdict: uniformity(&estimates, criteria),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupWindowReport {
    pub t1: f64,
    pub t2: f64,
    /// `E sup_{t1<s<t2} ‖Φ_s‖_∞` per initial condition, over the step times in the window.
    pub estimates: Vec<McEstimate>,
    pub aborted: Vec<usize>,
    pub verdict: UniformityVerdict,
}

/// Estimates the expected supremum norm over the open window `(t1, t2)`,
/// sampled at every step time and on a grid of `max(8N, 2N+1)` points.
pub fn sup_window_bound(
    spec: &EnsembleSpec,
    t1: f64,
    t2: f64,
    criteria: UniformityCriteria,
) -> Result<SupWindowReport> {
    if !(t1 > 0.0 && t2 > t1) {
        return Err(Error::InvalidParams(format!(
            "need 0 < t1 < t2, got ({t1}, {t2})"
        )));
    }
    let h = spec.params.dt;
    let last = (t2 / h - 1e-9).ceil();
    let run = spec.with_horizon((last * h).max(1.0).ceil());
    run.validate()?;
    let n = spec.params.n_modes;
    let points = (8 * n).max(2 * n + 1);
    let sups = run.map_trajectories(
        || {
            (
                0.0f64,
                SpectralTransform::new(n, points).expect("grid is large enough"),
                vec![0.0; points],
            )
        },
        move |sim, x, id, out| {
            let mut ws = sim.workspace();
            let (best, tr, values) = out;
            sim.run(x, id, &mut ws, |step, u, _| {
                let s = step as f64 * h;
                if s > t1 && s < t2 {
                    tr.synthesize(u, values);
                    *best = values.iter().fold(*best, |acc, v| acc.max(v.abs()));
                }
            })
        },
    )?;
    let mut estimates = Vec::new();
    let mut aborted = Vec::new();
    for results in sups {
        let (ok, a) = split_aborted(results);
        let samples: Vec<f64> = ok.into_iter().map(|o| o.0).collect();
        estimates.push(McEstimate::from_samples(&samples));
        aborted.push(a);
    }
    let verdict = uniformity(&estimates, criteria);
    Ok(SupWindowReport {
        t1,
        t2,
        estimates,
        aborted,
        verdict,
    })
}

/// Pooled-range equal-width bin index of `x`.
fn bin_of(x: f64, lo: f64, width: f64, bins: usize) -> usize {
    if width <= 0.0 {
        return 0;
    }
    (((x - lo) / width) as usize).min(bins - 1)
}

fn pooled_range(a: &[f64], b: &[f64]) -> (f64, f64) {
    a.iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// `Σ_bins |p_A - p_B|` for weighted 1-D samples on `bins` equal-width bins
/// over the pooled range; each sample carries weight `w / n`.
fn weighted_histogram_tv(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64], bins: usize) -> f64 {
    let (lo, hi) = pooled_range(a, b);
    let width = (hi - lo) / bins as f64;
    let mut ha = vec![0.0; bins];
    let mut hb = vec![0.0; bins];
    for (x, w) in a.iter().zip(wa) {
        ha[bin_of(*x, lo, width, bins)] += w;
    }
    for (x, w) in b.iter().zip(wb) {
        hb[bin_of(*x, lo, width, bins)] += w;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    ha.iter()
        .zip(&hb)
        .map(|(p, q)| (p / na - q / nb).abs())
        .sum()
}

/// Histogram estimate of `⦀μ_A - μ_B⦀` (so at most 2) from 1-D samples.
pub fn histogram_tv(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() || bins == 0 {
        return Err(Error::InvalidParams(
            "histogram needs samples and bins".into(),
        ));
    }
    Ok(weighted_histogram_tv(
        a,
        &vec![1.0; a.len()],
        b,
        &vec![1.0; b.len()],
        bins,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LawDistance {
    /// Max over observable axes of the `V`-weighted histogram distance.
    pub weighted: f64,
    pub per_axis: [f64; 6],
    /// Max over axes of `|mean_A - mean_B|` in units of the pooled standard deviation.
    pub sliced_mean: f64,
}

/// The weight used by [`law_distance`]; `None` disables weighting (`V ≡ 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weighting {
    pub p: Option<f64>,
}

/// Weighted-variation proxy between two ensembles observed at the same time.
///
/// Each sample gets weight `V = r^p + 1`, where `r` is the center of its
/// `‖u‖_γ` bin; per axis the weighted histograms on [`HISTOGRAM_BINS`] bins
/// are compared and the largest difference is returned.
pub fn law_distance(
    a: &[Observable],
    b: &[Observable],
    weighting: Weighting,
) -> Result<LawDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParams(
            "law distance needs two nonempty ensembles".into(),
        ));
    }
    let bins = HISTOGRAM_BINS;
    let axis = |s: &[Observable], k: usize| s.iter().map(|o| o[k]).collect::<Vec<f64>>();
    let (na, nb) = (axis(a, 0), axis(b, 0));
    let weights = |norms: &[f64]| -> Vec<f64> {
        match weighting.p {
            None => vec![1.0; norms.len()],
            Some(p) => {
                let (lo, hi) = pooled_range(&na, &nb);
                let width = (hi - lo) / bins as f64;
                norms
                    .iter()
                    .map(|&r| {
                        let center = lo + (bin_of(r, lo, width, bins) as f64 + 0.5) * width;
                        center.abs().powf(p) + 1.0
                    })
                    .collect()
            }
        }
    };
    let (wa, wb) = (weights(&na), weights(&nb));
    let mut per_axis = [0.0; 6];
    let mut sliced_mean = 0.0f64;
    for (k, slot) in per_axis.iter_mut().enumerate() {
        let (xa, xb) = (axis(a, k), axis(b, k));
        *slot = weighted_histogram_tv(&xa, &wa, &xb, &wb, bins);
        let ma = xa.iter().sum::<f64>() / xa.len() as f64;
        let mb = xb.iter().sum::<f64>() / xb.len() as f64;
        let pooled: Vec<f64> = xa.iter().chain(&xb).copied().collect();
        let m = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let sd =
            (pooled.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / pooled.len() as f64).sqrt();
        if sd > 0.0 {
            sliced_mean = sliced_mean.max((ma - mb).abs() / sd);
        }
    }
    Ok(LawDistance {
        weighted: per_axis.iter().fold(0.0, |acc: f64, &v| acc.max(v)),
        per_axis,
        sliced_mean,
    })
}

/// `d(t) ≈ C e^{-λt}` on the fitted window.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialFit {
    pub lambda: f64,
    pub c: f64,
    /// Indices of the points used.
    pub window: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RateEstimate {
    Fitted(ExponentialFit),
    NotIdentifiable(String),
}

impl RateEstimate {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            Self::Fitted(f) => Some(f.lambda),
            Self::NotIdentifiable(_) => None,
        }
    }
}

/// Points must exceed this multiple of their noise floor to enter the fit.
pub const FLOOR_FACTOR: f64 = 3.0;
pub const MIN_FIT_POINTS: usize = 4;

/// Least squares of `log(d - floor)` against `t` over the points with
/// `d > FLOOR_FACTOR · floor`. `floors` may be all zero.
pub fn fit_rate(times: &[f64], distances: &[f64], floors: &[f64]) -> Result<RateEstimate> {
    if times.len() != distances.len() || times.len() != floors.len() {
        return Err(Error::InvalidParams(
            "times, distances and floors differ in length".into(),
        ));
    }
    if distances
        .iter()
        .chain(floors)
        .any(|d| !(d.is_finite() && *d >= 0.0))
    {
        return Err(Error::InvalidParams(
            "distances and floors must be finite and nonnegative".into(),
        ));
    }
    let (lo, hi) = distances
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| {
            (a.min(d), b.max(d))
        });
    if distances.is_empty() || hi - lo <= 1e-12 * hi.max(f64::MIN_POSITIVE) {
        return Ok(RateEstimate::NotIdentifiable(
            "distances are constant".into(),
        ));
    }
    let window: Vec<usize> = (0..times.len())
        .filter(|&i| distances[i] > FLOOR_FACTOR * floors[i] && distances[i] > 0.0)
        .collect();
    if window.len() < MIN_FIT_POINTS {
        return Ok(RateEstimate::NotIdentifiable(format!(
            "only {} points above the noise floor",
            window.len()
        )));
    }
    let xs: Vec<f64> = window.iter().map(|&i| times[i]).collect();
    let ys: Vec<f64> = window
        .iter()
        .map(|&i| (distances[i] - floors[i]).ln())
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Ok(RateEstimate::NotIdentifiable(
            "window has a single time".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(RateEstimate::Fitted(ExponentialFit {
        lambda: -slope,
        c: (my - slope * mx).exp(),
        window,
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Bootstrap standard error of each distance.
    pub stderr: Vec<f64>,
    /// Permutation estimate of the distance between two samples of one law.
    pub floors: Vec<f64>,
    pub sliced_mean: Vec<f64>,
    pub rate: RateEstimate,
    pub lambda_ci: (f64, f64),
    /// `E‖Φ_t‖_γ^p` per `(initial condition, t)`.
    pub moments: Vec<MomentRow>,
    pub bootstrap: usize,
}

pub const MIXING_CSV_COLUMNS: &str = "t,distance,stderr";

impl MixingReport {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{MIXING_CSV_COLUMNS}")?;
        for ((t, d), s) in self.times.iter().zip(&self.distances).zip(&self.stderr) {
            writeln!(out, "{t},{d:.17e},{s:.17e}")?;
        }
        Ok(())
    }

    pub fn summary_block(&self) -> String {
        let mut s = String::new();
        let (lambda, c) = match &self.rate {
            RateEstimate::Fitted(f) => (f.lambda, f.c),
            RateEstimate::NotIdentifiable(_) => (f64::NAN, f64::NAN),
        };
        let _ = writeln!(s, "lambda = {lambda}");
        let _ = writeln!(s, "lambda_ci_low = {}", self.lambda_ci.0);
        let _ = writeln!(s, "lambda_ci_high = {}", self.lambda_ci.1);
        let _ = writeln!(s, "C = {c}");
        match &self.rate {
            RateEstimate::Fitted(f) => {
                let w: Vec<String> = f
                    .window
                    .iter()
                    .map(|&i| self.times[i].to_string())
                    .collect();
                let _ = writeln!(s, "identifiable = true");
                let _ = writeln!(s, "window = {}", w.join(", "));
            }
            RateEstimate::NotIdentifiable(why) => {
                let _ = writeln!(s, "identifiable = false");
                let _ = writeln!(s, "reason = {why}");
            }
        }
        let _ = writeln!(s, "bootstrap = {}", self.bootstrap);
        s
    }

    /// `d(t_last) / d(t_first)` over the reported times.
    pub fn decay_ratio(&self) -> f64 {
        match (self.distances.first(), self.distances.last()) {
            (Some(a), Some(b)) if *a > 0.0 => b / a,
            _ => f64::NAN,
        }
    }
}

fn distances_at(
    a: &[IntegerTimeSamples],
    b: &[IntegerTimeSamples],
    ia: &[usize],
    ib: &[usize],
    times: &[usize],
    weighting: Weighting,
) -> Result<Vec<LawDistance>> {
    times
        .iter()
        .map(|&t| {
            let oa: Vec<Observable> = ia.iter().map(|&k| a[k].observables[t]).collect();
            let ob: Vec<Observable> = ib.iter().map(|&k| b[k].observables[t]).collect();
            law_distance(&oa, &ob, weighting)
        })
        .collect()
}

/// Number of random relabelings averaged for the noise floor.
const FLOOR_PERMUTATIONS: usize = 8;

/// Compares the laws started from `spec.initial[0]` and `spec.initial[1]` at
/// the integer times `1..=⌊T⌋`, fits the decay rate and bootstraps its CI by
/// resampling whole trajectories.
pub fn mixing_experiment(spec: &EnsembleSpec, bootstrap: usize) -> Result<MixingReport> {
    if spec.initial.len() < 2 {
        return Err(Error::InvalidParams(
            "mixing needs two initial conditions".into(),
        ));
    }
    let samples = spec.integer_time_samples()?;
    let horizon = spec.params.t_final.floor() as usize;
    let mut kept = Vec::new();
    let mut moments = Vec::new();
    for (i, results) in samples.into_iter().enumerate() {
        let (ok, aborted) = split_aborted(results);
        for t in 0..=horizon {
            let xs: Vec<f64> = ok.iter().map(|s| s.moments[t]).collect();
            moments.push(MomentRow {
                initial: i,
                label: spec.labels[i].clone(),
                t: t as f64,
                initial_norm: spec.initial[i].norm_gamma(spec.gamma),
                estimate: McEstimate::from_samples(&xs),
                aborted,
            });
        }
        kept.push(ok);
    }
    let (a, b) = (&kept[0], &kept[1]);
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParams(
            "every trajectory of an ensemble aborted".into(),
        ));
    }
    let weighting = Weighting { p: Some(spec.p) };
    let time_idx: Vec<usize> = (1..=horizon).collect();
    let times: Vec<f64> = time_idx.iter().map(|&t| t as f64).collect();
    let ia: Vec<usize> = (0..a.len()).collect();
    let ib: Vec<usize> = (0..b.len()).collect();
    let base = distances_at(a, b, &ia, &ib, &time_idx, weighting)?;
    let distances: Vec<f64> = base.iter().map(|d| d.weighted).collect();
    let sliced_mean: Vec<f64> = base.iter().map(|d| d.sliced_mean).collect();

    // noise floor: distance after randomly relabeling the pooled samples
    let pooled: Vec<&IntegerTimeSamples> = a.iter().chain(b.iter()).collect();
    let floor_runs: Vec<Vec<f64>> = (0..FLOOR_PERMUTATIONS)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::new(spec.params.seed, PERMUTATION_STREAM);
            let rng = rng.at_step(r as u64);
            let mut order: Vec<usize> = (0..pooled.len()).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
            let left: Vec<IntegerTimeSamples> = order[..a.len()]
                .iter()
                .map(|&k| pooled[k].clone())
                .collect();
            let right: Vec<IntegerTimeSamples> = order[a.len()..]
                .iter()
                .map(|&k| pooled[k].clone())
                .collect();
            let il: Vec<usize> = (0..left.len()).collect();
            let ir: Vec<usize> = (0..right.len()).collect();
            distances_at(&left, &right, &il, &ir, &time_idx, weighting)
                .map(|ds| ds.iter().map(|d| d.weighted).collect())
        })
        .collect::<Result<_>>()?;
    let floors: Vec<f64> = (0..times.len())
        .map(|t| floor_runs.iter().map(|r| r[t]).sum::<f64>() / FLOOR_PERMUTATIONS as f64)
        .collect();

    let rate = fit_rate(&times, &distances, &floors)?;
    let replicates: Vec<(Vec<f64>, f64)> = (0..bootstrap)
        .into_par_iter()
        .map(|r| {
            let mut rng = CounterRng::new(spec.params.seed, BOOTSTRAP_STREAM);
            let rng = rng.at_step(r as u64);
            let ra: Vec<usize> = (0..a.len()).map(|_| rng.random_range(0..a.len())).collect();
            let rb: Vec<usize> = (0..b.len()).map(|_| rng.random_range(0..b.len())).collect();
            let ds: Vec<f64> = distances_at(a, b, &ra, &rb, &time_idx, weighting)?
                .iter()
                .map(|d| d.weighted)
                .collect();
            // an unidentifiable replicate counts as no detected decay
            let lambda = fit_rate(&times, &ds, &floors)?.lambda().unwrap_or(0.0);
            Ok((ds, lambda))
        })
        .collect::<Result<_>>()?;
    let stderr: Vec<f64> = (0..times.len())
        .map(|t| {
            let xs: Vec<f64> = replicates.iter().map(|r| r.0[t]).collect();
            McEstimate::from_samples(&xs).stderr * (xs.len() as f64).sqrt()
        })
        .collect();
    let lambda_ci = if replicates.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mut ls: Vec<f64> = replicates.iter().map(|r| r.1).collect();
        ls.sort_by(f64::total_cmp);
        (quantile(&ls, 0.025), quantile(&ls, 0.975))
    };
    Ok(MixingReport {
        times,
        distances,
        stderr,
        floors,
        sliced_mean,
        rate,
        lambda_ci,
        moments,
        bootstrap,
    })
}
