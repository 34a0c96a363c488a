//! Galerkin representation of periodic fields on `[0, 1)`.
//!
//! A [`SpectralField`] stores coordinates in the orthonormal trigonometric
//! basis of `H = W^{1,2}_per([0,1])`:
//!
//! ```text
//! e_0(ξ)      = 1
//! e_{k,c}(ξ)  = sqrt(2 / ℓ_k) cos(2πkξ)
//! e_{k,s}(ξ)  = sqrt(2 / ℓ_k) sin(2πkξ),     ℓ_k = 1 + 4π²k²
//! ```
//!
//! so that `L = 1 - ∂²` acts on mode `k` as multiplication by `ℓ_k` and every
//! norm `‖L^γ u‖` is a weighted ℓ² sum of the coefficients. Coefficients are
//! laid out as `[c_0, a_1, b_1, a_2, b_2, ..., a_N, b_N]`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Eigenvalue of `L = 1 - ∂²` on wavenumber `k` with period-1 boundary conditions.
#[inline]
pub fn eigenvalue(k: usize) -> f64 {
    let k = k as f64;
    1.0 + 4.0 * PI * PI * k * k
}

/// Wavenumber of the coefficient at `index` in the `[c_0, a_1, b_1, ...]` layout.
#[inline]
pub fn wavenumber(index: usize) -> usize {
    index.div_ceil(2)
}

/// Physical amplitude of the basis function carrying wavenumber `k`.
#[inline]
fn basis_scale(k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        (2.0 / eigenvalue(k)).sqrt()
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: vec![0.0; 2 * n_modes + 1],
        }
    }

    /// Builds a field from raw coefficients `[c_0, a_1, b_1, ...]`.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidField(format!(
                "coefficient count must be odd (2N+1), got {}",
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidField(format!(
                "coefficient {i} is not finite"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Unit vector at coefficient position `index`.
    pub fn basis(n_modes: usize, index: usize) -> Self {
        let mut u = Self::zeros(n_modes);
        u.coeffs[index] = 1.0;
        u
    }

    /// The constant function `ξ ↦ c`.
    pub fn constant(n_modes: usize, c: f64) -> Self {
        let mut u = Self::zeros(n_modes);
        u.coeffs[0] = c;
        u
    }

    /// The function `ξ ↦ amplitude · cos(2πkξ)` (physical amplitude, not a coefficient).
    pub fn cosine(n_modes: usize, k: usize, amplitude: f64) -> Self {
        assert!(
            k >= 1 && k <= n_modes,
            "wavenumber {k} outside 1..={n_modes}"
        );
        let mut u = Self::zeros(n_modes);
        u.coeffs[2 * k - 1] = amplitude / basis_scale(k);
        u
    }

    pub fn n_modes(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `(a_k, b_k)` for `k >= 1`; `(c_0, 0)` for `k = 0`.
    pub fn mode(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            (self.coeffs[0], 0.0)
        } else {
            (self.coeffs[2 * k - 1], self.coeffs[2 * k])
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// `‖L^γ u‖`, i.e. `sqrt(Σ ℓ_k^{2γ} coeff²)`.
    pub fn norm_gamma(&self, gamma: f64) -> f64 {
        if gamma == 0.0 {
            return self.norm();
        }
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| eigenvalue(wavenumber(i)).powf(2.0 * gamma) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// The H-norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `e^{-Lt} u`.
    pub fn apply_semigroup(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * (-eigenvalue(wavenumber(i)) * t).exp())
            .collect();
        Ok(Self { coeffs })
    }

    /// Whether `‖e^{-Lt} u‖_{γ+σ} <= t^{-σ} ‖u‖_γ`.
    pub fn smoothing_norm_check(&self, t: f64, gamma: f64, sigma: f64) -> Result<bool> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        if !(sigma > 0.0 && sigma <= 0.5) {
            return Err(Error::InvalidParams(format!(
                "smoothing exponent must lie in (0, 1/2], got {sigma}"
            )));
        }
        let lhs = self.apply_semigroup(t)?.norm_gamma(gamma + sigma);
        let rhs = t.powf(-sigma) * self.norm_gamma(gamma);
        Ok(lhs <= rhs * (1.0 + 1e-12))
    }

    /// Truncates or zero-pads to `n_modes`.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut coeffs = vec![0.0; 2 * n_modes + 1];
        let n = coeffs.len().min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Self { coeffs }
    }

    /// Grid approximation of `‖u‖_∞` on `max(8N, 2N+1)` points.
    ///
    /// This is a lower bound on the true supremum that converges from below
    /// as the grid is refined; for a single cosine mode it is exact.
    pub fn sup_norm(&self) -> f64 {
        let n = self.n_modes();
        let m = (8 * n).max(2 * n + 1);
        let mut tr = SpectralTransform::new(n, m).expect("grid size chosen large enough");
        let mut values = vec![0.0; m];
        tr.synthesize(self, &mut values);
        values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn to_grid(&self, n_points: usize) -> Result<GridField> {
        let mut tr = SpectralTransform::new(self.n_modes(), n_points)?;
        let mut values = vec![0.0; n_points];
        tr.synthesize(self, &mut values);
        Ok(GridField { values })
    }

    /// `self + scale * other`, both on the same truncation.
    pub fn axpy(&mut self, scale: f64, other: &SpectralField) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += scale * b;
        }
    }
}

/// Uniform samples of a field at `ξ_j = j / M`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn from_grid(&self, n_modes: usize) -> Result<SpectralField> {
        let mut tr = SpectralTransform::new(n_modes, self.values.len())?;
        let mut out = SpectralField::zeros(n_modes);
        tr.analyze(&self.values, &mut out);
        Ok(out)
    }
}

/// Discrete trigonometric synthesis/analysis between `N` modes and `M` grid points,
/// with cached FFT plans and scratch buffers.
pub struct SpectralTransform {
    n_modes: usize,
    n_points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    scales: Vec<f64>,
}

impl SpectralTransform {
    pub fn new(n_modes: usize, n_points: usize) -> Result<Self> {
        if n_points < 2 * n_modes + 1 {
            return Err(Error::GridTooSmall {
                points: n_points,
                modes: n_modes,
            });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            n_modes,
            n_points,
            forward,
            inverse,
            buf: vec![Complex64::new(0.0, 0.0); n_points],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            scales: (0..=n_modes).map(basis_scale).collect(),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Writes `u(j/M)` into `out`. Modes of `u` above this transform's `N` are ignored.
    pub fn synthesize(&mut self, u: &SpectralField, out: &mut [f64]) {
        let m = self.n_points;
        let n = self.n_modes.min(u.n_modes());
        self.buf.fill(Complex64::new(0.0, 0.0));
        self.buf[0] = Complex64::new(u.coeffs[0], 0.0);
        for k in 1..=n {
            let s = 0.5 * self.scales[k];
            let z = Complex64::new(s * u.coeffs[2 * k - 1], -s * u.coeffs[2 * k]);
            self.buf[k] = z;
            self.buf[m - k] = z.conj();
        }
        self.inverse
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for (o, z) in out.iter_mut().zip(&self.buf) {
            *o = z.re;
        }
    }

    /// Projects grid samples onto the first `N` modes, writing into `out`
    /// (which must carry exactly `N` modes).
    pub fn analyze(&mut self, values: &[f64], out: &mut SpectralField) {
        debug_assert_eq!(out.n_modes(), self.n_modes);
        let inv_m = 1.0 / self.n_points as f64;
        for (b, v) in self.buf.iter_mut().zip(values) {
            *b = Complex64::new(*v, 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        out.coeffs[0] = self.buf[0].re * inv_m;
        for k in 1..=self.n_modes {
            let z = self.buf[k] * inv_m;
            let s = self.scales[k];
            out.coeffs[2 * k - 1] = 2.0 * z.re / s;
            out.coeffs[2 * k] = -2.0 * z.im / s;
        }
    }
}

/// The polynomial drift `P(u) = Σ p_i u^i`: odd degree `q >= 3`, positive leading coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftPolynomial {
    coeffs: Vec<f64>,
}

impl DriftPolynomial {
    /// Coefficients in increasing power order `p_0, p_1, ..., p_q`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
        }
        let Some(q) = coeffs.iter().rposition(|&c| c != 0.0) else {
            return Err(Error::InvalidPolynomial("zero polynomial".into()));
        };
        if q < 3 || q % 2 == 0 {
            return Err(Error::InvalidPolynomial(format!(
                "degree must be odd and at least 3, got {q}"
            )));
        }
        if coeffs[q] <= 0.0 {
            return Err(Error::InvalidPolynomial(format!(
                "leading coefficient must be positive, got {}",
                coeffs[q]
            )));
        }
        let mut coeffs = coeffs;
        coeffs.truncate(q + 1);
        Ok(Self { coeffs })
    }

    /// `u³ - u`.
    pub fn ginzburg_landau() -> Self {
        Self {
            coeffs: vec![0.0, -1.0, 0.0, 1.0],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree()]
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    #[inline]
    pub fn derivative(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * y + i as f64 * c)
    }

    /// Number of grid points that makes the degree-`q` product exact on the
    /// first `N` modes: frequencies up to `qN` must not alias onto `|k| <= N`.
    pub fn dealiased_points(&self, n_modes: usize) -> usize {
        smooth_size((self.degree() + 1) * n_modes + 1)
    }
}

/// Pointwise map `u ↦ Π_N f(u)` evaluated on a padded grid.
pub struct PointwiseEvaluator {
    transform: SpectralTransform,
    grid: Vec<f64>,
}

impl PointwiseEvaluator {
    pub fn new(n_modes: usize, n_points: usize) -> Result<Self> {
        Ok(Self {
            transform: SpectralTransform::new(n_modes, n_points)?,
            grid: vec![0.0; n_points],
        })
    }

    pub fn for_polynomial(poly: &DriftPolynomial, n_modes: usize) -> Self {
        Self::new(n_modes, poly.dealiased_points(n_modes)).expect("padded grid is large enough")
    }

    pub fn apply(&mut self, u: &SpectralField, f: impl Fn(f64) -> f64, out: &mut SpectralField) {
        self.transform.synthesize(u, &mut self.grid);
        for v in &mut self.grid {
            *v = f(*v);
        }
        self.transform.analyze(&self.grid, out);
    }

    /// Max |value| of `u` on this evaluator's grid.
    pub fn grid_sup(&mut self, u: &SpectralField) -> f64 {
        self.transform.synthesize(u, &mut self.grid);
        self.grid.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }
}

/// The truncation-`N` projection of `P(u)`, computed exactly by padding the grid.
pub fn eval_polynomial(poly: &DriftPolynomial, u: &SpectralField) -> SpectralField {
    let mut ev = PointwiseEvaluator::for_polynomial(poly, u.n_modes());
    let mut out = SpectralField::zeros(u.n_modes());
    ev.apply(u, |y| poly.eval(y), &mut out);
    out
}
