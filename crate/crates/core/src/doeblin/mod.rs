//! Exact minorization, coupling and drift checks for finite Markov kernels.
//!
//! Conventions: measures are row vectors, `μP` is the push-forward, and the
//! variation norm is the total mass of `|μ|`, so `⦀δ_x - δ_y⦀ = 2` for `x ≠ y`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

mod io;
mod small_set;

pub use io::{format_certificate, parse_certificate, parse_kernel};
pub use small_set::{small_set_search, small_set_search_with, Partition, SmallSetConstruction};

/// Row sums must be within this of 1.
const ROW_SUM_TOL: f64 = 1e-12;
/// Absolute slack for elementwise inequalities between computed probabilities.
pub const CHECK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteKernel {
    n: usize,
    /// Row-major `n × n`.
    entries: Vec<f64>,
}

impl FiniteKernel {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidKernel("empty state space".into()));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidKernel(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        for x in 0..n {
            let row = &entries[x * n..(x + 1) * n];
            if let Some(y) = row.iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidKernel(format!(
                    "entry ({x}, {y}) = {} is not a probability",
                    row[y]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidKernel(format!("row {x} sums to {sum}")));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidKernel("kernel must be square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    /// Rows drawn uniformly from the simplex (normalized exponentials),
    /// hence strictly positive almost surely.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n {
            let row: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = row.iter().sum();
            entries.extend(row.iter().map(|v| v / s));
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.n..(x + 1) * self.n]
    }

    pub fn compose(&self, other: &Self) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for x in 0..n {
            for z in 0..n {
                let p = self.get(x, z);
                if p == 0.0 {
                    continue;
                }
                for y in 0..n {
                    entries[x * n + y] += p * other.get(z, y);
                }
            }
        }
        Self { n, entries }
    }

    /// `P^m`; `P^0` is the identity.
    pub fn power(&self, m: usize) -> Self {
        (0..m).fold(Self::identity(self.n), |acc, _| acc.compose(self))
    }

    /// `μP` for a (possibly signed) row vector `μ`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.row(x)) {
                *o += m * p;
            }
        }
        out
    }

    /// `P(x, A)`.
    pub fn prob_into(&self, x: usize, set: &[usize]) -> f64 {
        set.iter().map(|&y| self.get(x, y)).sum()
    }

    /// `(PV)(x) = Σ_y P(x,y) V(y)`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|x| self.row(x).iter().zip(v).map(|(p, w)| p * w).sum())
            .collect()
    }

    fn check_set(&self, set: &[usize]) -> Result<()> {
        if set.is_empty() {
            return Err(Error::InvalidParams("state subset must be nonempty".into()));
        }
        if let Some(&x) = set.iter().find(|&&x| x >= self.n) {
            return Err(Error::InvalidParams(format!(
                "state {x} outside 0..{}",
                self.n
            )));
        }
        Ok(())
    }
}

/// A measure on a finite space with an optional weight function `V ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure {
    pub weights: Vec<f64>,
    pub v: Option<Vec<f64>>,
}

impl WeightedMeasure {
    pub fn signed(weights: Vec<f64>) -> Self {
        Self { weights, v: None }
    }

    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParams(
                "probability weights must be nonnegative".into(),
            ));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "probability weights sum to {s}"
            )));
        }
        Ok(Self { weights, v: None })
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[x] = 1.0;
        Self { weights, v: None }
    }

    pub fn with_weight(mut self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.weights.len() {
            return Err(Error::InvalidParams(
                "weight function has the wrong length".into(),
            ));
        }
        if v.iter().any(|&w| !(w >= 1.0)) {
            return Err(Error::InvalidParams("weight function must be >= 1".into()));
        }
        self.v = Some(v);
        Ok(self)
    }

    /// `⦀μ⦀_V = Σ V(x) |μ(x)|`; with no weight this is the total variation mass.
    pub fn norm(&self) -> f64 {
        match &self.v {
            Some(v) => self.weights.iter().zip(v).map(|(m, w)| w * m.abs()).sum(),
            None => self.weights.iter().map(|m| m.abs()).sum(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a - b)
                .collect(),
            v: self.v.clone(),
        }
    }
}

/// `⦀μ - ν⦀ = Σ |μ(x) - ν(x)|`.
pub fn variation_distance(mu: &[f64], nu: &[f64]) -> f64 {
    mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum()
}

/// Witness that `P^m(x, ·) ≥ δ ν(·)` for every `x` in `set`, optionally with
/// `P(x, set) ≥ δ'` for every state `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallSetCertificate {
    pub set: Vec<usize>,
    pub m: usize,
    pub delta: f64,
    pub nu: Vec<f64>,
    pub delta_prime: Option<f64>,
}

impl SmallSetCertificate {
    /// Exact elementwise validation against `kernel`.
    pub fn verify(&self, kernel: &FiniteKernel) -> Result<()> {
        kernel.check_set(&self.set)?;
        if self.m == 0 {
            return Err(Error::InvalidParams(
                "certificate step count must be positive".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0 + CHECK_TOL) {
            return Err(Error::InvalidParams(format!(
                "delta = {} outside (0, 1]",
                self.delta
            )));
        }
        if self.nu.len() != kernel.n() {
            return Err(Error::InvalidParams("nu has the wrong length".into()));
        }
        WeightedMeasure::probability(self.nu.clone())?;
        let pm = kernel.power(self.m);
        for &x in &self.set {
            for (y, &nu_y) in self.nu.iter().enumerate() {
                if pm.get(x, y) < self.delta * nu_y - CHECK_TOL {
                    return Err(Error::InvalidParams(format!(
                        "minorization fails at ({x}, {y}): P^{}(x,y) = {} < {}",
                        self.m,
                        pm.get(x, y),
                        self.delta * nu_y
                    )));
                }
            }
        }
        if let Some(dp) = self.delta_prime {
            let reach = condition_b(kernel, &self.set)?;
            if !(dp > 0.0) || reach < dp - CHECK_TOL {
                return Err(Error::InvalidParams(format!(
                    "accessibility fails: min_x P(x, K) = {reach} < delta' = {dp}"
                )));
            }
        }
        Ok(())
    }
}

/// The maximal `(δ, ν)` for `set` and `m`: `δ = Σ_y min_{x∈K} P^m(x,y)` and
/// `ν` the normalized column minima. `None` when the rows share no mass.
pub fn minorization(
    kernel: &FiniteKernel,
    set: &[usize],
    m: usize,
) -> Result<Option<SmallSetCertificate>> {
    kernel.check_set(set)?;
    if m == 0 {
        return Err(Error::InvalidParams("m must be positive".into()));
    }
    let pm = kernel.power(m);
    let minima: Vec<f64> = (0..kernel.n())
        .map(|y| {
            set.iter()
                .map(|&x| pm.get(x, y))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let delta: f64 = minima.iter().sum();
    if delta <= 0.0 {
        return Ok(None);
    }
    let mut nu: Vec<f64> = minima.iter().map(|v| v / delta).collect();
    renormalize(&mut nu);
    Ok(Some(SmallSetCertificate {
        set: set.to_vec(),
        m,
        delta: delta.min(1.0),
        nu,
        delta_prime: None,
    }))
}

/// Absorbs the rounding error of a normalization into the largest entry.
fn renormalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    if let Some(i) = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])) {
        p[i] += 1.0 - s;
    }
}

/// `δ' = min_x P(x, K)`.
pub fn condition_b(kernel: &FiniteKernel, set: &[usize]) -> Result<f64> {
    kernel.check_set(set)?;
    Ok((0..kernel.n())
        .map(|x| kernel.prob_into(x, set))
        .fold(f64::INFINITY, f64::min))
}

/// Minorization for `set` in one step plus the matching accessibility constant.
pub fn doeblin_certificate(
    kernel: &FiniteKernel,
    set: &[usize],
) -> Result<Option<SmallSetCertificate>> {
    let Some(mut cert) = minorization(kernel, set, 1)? else {
        return Ok(None);
    };
    let dp = condition_b(kernel, set)?;
    if dp <= 0.0 {
        return Ok(None);
    }
    cert.delta_prime = Some(dp);
    Ok(Some(cert))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionReport {
    /// `1 - δδ'`.
    pub factor: f64,
    /// `max_{x≠y} ⦀δ_x P² - δ_y P²⦀ / ⦀δ_x - δ_y⦀`.
    pub worst_ratio: f64,
    /// Smallest `P²(x,y) - δδ'ν(y)` over all `x, y`; nonnegative when the
    /// two-step lower bound holds on every singleton.
    pub lower_bound_slack: f64,
}

/// Two-step total-variation contraction coefficient of `kernel`, from Dirac pairs.
pub fn two_step_contraction(kernel: &FiniteKernel) -> f64 {
    let p2 = kernel.power(2);
    let n = kernel.n();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            worst = worst.max(0.5 * variation_distance(p2.row(x), p2.row(y)));
        }
    }
    worst
}

/// Verifies `⦀μP² - νP²⦀ ≤ (1 - δδ')⦀μ - ν⦀` over all Dirac pairs and
/// `(μP²)(A) ≥ δδ' ν(A)` on all singletons.
pub fn contraction_check(
    kernel: &FiniteKernel,
    cert: &SmallSetCertificate,
) -> Result<ContractionReport> {
    if cert.m != 1 {
        return Err(Error::InvalidParams(
            "contraction check needs a one-step certificate".into(),
        ));
    }
    let Some(dp) = cert.delta_prime else {
        return Err(Error::InvalidParams(
            "contraction check needs delta'".into(),
        ));
    };
    cert.verify(kernel)?;
    let eps = cert.delta * dp;
    let p2 = kernel.power(2);
    let mut slack = f64::INFINITY;
    for x in 0..kernel.n() {
        for (y, nu_y) in cert.nu.iter().enumerate() {
            slack = slack.min(p2.get(x, y) - eps * nu_y);
        }
    }
    Ok(ContractionReport {
        factor: 1.0 - eps,
        worst_ratio: two_step_contraction(kernel),
        lower_bound_slack: slack,
    })
}

impl ContractionReport {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= self.factor + CHECK_TOL && self.lower_bound_slack >= -CHECK_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricReport {
    /// `max_x ⦀δ_x P^n - μ_*⦀` for `n = 0..=horizon`.
    pub distances: Vec<f64>,
    /// `2 (1 - δδ')^{⌊n/2⌋}`.
    pub bounds: Vec<f64>,
}

impl GeometricReport {
    pub fn holds(&self) -> bool {
        self.distances
            .iter()
            .zip(&self.bounds)
            .all(|(d, b)| *d <= b + CHECK_TOL)
    }
}

/// Distance to equilibrium from every Dirac start against `2(1 - ε)^{⌊n/2⌋}`.
pub fn geometric_bound_check(
    kernel: &FiniteKernel,
    eps: f64,
    horizon: usize,
) -> Result<GeometricReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!(
            "δδ' = {eps} must lie in (0, 1)"
        )));
    }
    let stationary = invariant_measure(kernel)?;
    let n = kernel.n();
    let mut laws: Vec<Vec<f64>> = (0..n)
        .map(|x| WeightedMeasure::dirac(n, x).weights)
        .collect();
    let mut distances = Vec::with_capacity(horizon + 1);
    let mut bounds = Vec::with_capacity(horizon + 1);
    for step in 0..=horizon {
        if step > 0 {
            laws = laws.iter().map(|l| kernel.push_forward(l)).collect();
        }
        let d = laws
            .iter()
            .map(|l| variation_distance(l, &stationary))
            .fold(0.0, f64::max);
        distances.push(d);
        bounds.push(2.0 * (1.0 - eps).powi((step / 2) as i32));
    }
    Ok(GeometricReport { distances, bounds })
}

/// Builds an `(m+1)`-step certificate for `target` from an `m`-step
/// certificate for a set `A` reachable in one step from every state of `target`:
/// `P^{m+1}(x, ·) ≥ P(x, A) δ ν`.
pub fn two_small_compose(
    kernel: &FiniteKernel,
    cert: &SmallSetCertificate,
    target: &[usize],
) -> Result<Option<SmallSetCertificate>> {
    kernel.check_set(target)?;
    cert.verify(kernel)?;
    let reach = target
        .iter()
        .map(|&x| kernel.prob_into(x, &cert.set))
        .fold(f64::INFINITY, f64::min);
    if reach <= 0.0 {
        return Ok(None);
    }
    let composed = SmallSetCertificate {
        set: target.to_vec(),
        m: cert.m + 1,
        delta: cert.delta * reach,
        nu: cert.nu.clone(),
        delta_prime: None,
    };
    composed.verify(kernel)?;
    Ok(Some(composed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftViolation {
    pub state: usize,
    pub pv: f64,
    pub limit: f64,
}

/// Checks `(PV)(x) ≤ cV(x)` off `set` and `(PV)(x) ≤ Λ` on it, returning every violation.
pub fn drift_condition_check(
    kernel: &FiniteKernel,
    v: &[f64],
    set: &[usize],
    c: f64,
    lambda: f64,
) -> Result<Vec<DriftViolation>> {
    if v.len() != kernel.n() || v.iter().any(|&w| !(w >= 1.0)) {
        return Err(Error::InvalidParams(
            "V must have one entry >= 1 per state".into(),
        ));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParams(format!("c = {c} must lie in (0, 1)")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!(
            "Λ = {lambda} must be positive"
        )));
    }
    kernel.check_set(set)?;
    let pv = kernel.apply(v);
    Ok((0..kernel.n())
        .filter_map(|x| {
            let limit = if set.contains(&x) { lambda } else { c * v[x] };
            (pv[x] > limit * (1.0 + 1e-14)).then_some(DriftViolation {
                state: x,
                pv: pv[x],
                limit,
            })
        })
        .collect())
}

/// The unique `μ_*` with `μ_* P = μ_*`, `Σ μ_* = 1`.
pub fn invariant_measure(kernel: &FiniteKernel) -> Result<Vec<f64>> {
    let n = kernel.n();
    let generator = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - kernel.get(j, i)
    });
    let sv = generator.clone().singular_values();
    let scale = sv.max().max(1.0);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * scale).count();
    if rank + 1 != n {
        return Err(Error::NonUniqueStationary);
    }
    let mut a = generator;
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::NonUniqueStationary)?;
    let mut mu: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|v| *v /= s);
    Ok(mu)
}
