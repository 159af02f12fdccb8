//! Numerical-quadrature doubles of the closed-form frequency integrals. The
//! closed forms in [`crate::optics`] are only trusted because they agree with
//! these direct discretizations of `∫ f(ω) e^{iΔαω} dω`; nothing here reuses
//! the analytic damping factor, so an error in the exponent or normalization
//! of the closed form would show up as a mismatch, not cancel out.

use crate::optics::{self, BiphotonState, OpticsError, Spectrum};
use crate::states::DensityMatrix;
use num_complex::Complex64;
use std::collections::HashMap;

/// Sampling window for the frequency quadratures: `ω₀ ± span·σ` resolved by
/// `points` equally spaced nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    span: f64,
    points: usize,
}

impl QuadratureGrid {
    /// `span` is the half-width in units of σ. The Gaussian weight at 6σ is
    /// below 1e−62, so any admissible window makes truncation error
    /// irrelevant; the floor on `points` keeps the default scenarios far from
    /// the aliasing guard.
    pub fn new(span: f64, points: usize) -> Result<Self, OracleError> {
        if !(span >= 6.0 && span.is_finite()) || points < 1025 || points % 2 == 0 {
            return Err(OracleError::InvalidGrid { span, points });
        }
        Ok(Self { span, points })
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Refuses delay differences whose phase advances more than ~0.2 rad per
    /// grid step — beyond that the trapezoid sum silently aliases instead of
    /// degrading gracefully.
    fn check_resolved(&self, delta_alpha: f64, sp: &Spectrum) -> Result<(), OracleError> {
        let figure = delta_alpha.abs() * sp.sigma() * self.span / self.points as f64;
        if figure > 0.1 {
            return Err(OracleError::UnderResolved {
                delta_alpha,
                sigma: sp.sigma(),
                span: self.span,
                points: self.points,
            });
        }
        Ok(())
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            span: 8.0,
            points: 8193,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("invalid quadrature grid (span {span} σ, {points} points): span must be ≥ 6 and points an odd count ≥ 1025")]
    InvalidGrid { span: f64, points: usize },
    #[error(
        "quadrature under-resolved: |Δα|·σ·span/points = {:.3} > 0.1 for Δα = {delta_alpha:.3e} s \
         (σ = {sigma:.3e}, span {span} σ, {points} points); increase the point count",
        delta_alpha.abs() * sigma * span / *points as f64
    )]
    UnderResolved {
        delta_alpha: f64,
        sigma: f64,
        span: f64,
        points: usize,
    },
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Normalized Gaussian spectral density `(2/(√π σ)) · exp(−4(ω−ω₀)²/σ²)`.
fn spectral_density(omega: f64, sp: &Spectrum) -> f64 {
    let d = omega - sp.omega0();
    2.0 / (std::f64::consts::PI.sqrt() * sp.sigma()) * (-4.0 * d * d / (sp.sigma() * sp.sigma())).exp()
}

/// Composite trapezoid sum of `f(ω)·e^{iΔαω}` over the grid window. No
/// resolution check — callers guard first.
fn trapezoid_characteristic(delta_alpha: f64, sp: &Spectrum, g: &QuadratureGrid) -> Complex64 {
    let lo = sp.omega0() - g.span * sp.sigma();
    let hi = sp.omega0() + g.span * sp.sigma();
    let h = (hi - lo) / (g.points - 1) as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..g.points {
        let omega = lo + h * j as f64;
        let w = if j == 0 || j == g.points - 1 { 0.5 } else { 1.0 };
        sum += w * spectral_density(omega, sp) * Complex64::from_polar(1.0, delta_alpha * omega);
    }
    sum * h
}

/// Quadrature evaluation of the characteristic function
/// `∫ f(ω) e^{iΔαω} dω` over `ω₀ ± span·σ`.
pub fn numeric_characteristic(
    delta_alpha: f64,
    sp: &Spectrum,
    g: &QuadratureGrid,
) -> Result<Complex64, OracleError> {
    g.check_resolved(delta_alpha, sp)?;
    Ok(trapezoid_characteristic(delta_alpha, sp, g))
}

/// Largest relative disagreement between a candidate closed-form
/// characteristic function and the quadrature, scanned over `samples` evenly
/// spaced delays with `Δα·σ ∈ [0, max_sigma_product]`. This is the gate a
/// closed form must pass before the rest of the crate may rely on it.
pub fn characteristic_disagreement(
    closed_form: &dyn Fn(f64, &Spectrum) -> Complex64,
    sp: &Spectrum,
    g: &QuadratureGrid,
    max_sigma_product: f64,
    samples: usize,
) -> Result<f64, OracleError> {
    assert!(samples >= 2, "need at least the two endpoint samples");
    let mut worst = 0.0f64;
    for i in 0..samples {
        let da = max_sigma_product * i as f64 / (samples - 1) as f64 / sp.sigma();
        let numeric = numeric_characteristic(da, sp, g)?;
        let rel = (closed_form(da, sp) - numeric).norm() / numeric.norm();
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// [`optics::reduce`] with every characteristic-function value replaced by a
/// quadrature. The double integral over `(ω_a, ω_b)` of the outer product of
/// frequency-resolved amplitudes separates exactly into per-arm 1-D
/// quadratures because each amplitude is a product of single-photon phases;
/// values are memoized per distinct delay difference.
pub fn numeric_reduce(
    s: &BiphotonState,
    sp_a: &Spectrum,
    sp_b: &Spectrum,
    g: &QuadratureGrid,
) -> Result<(DensityMatrix, f64), OracleError> {
    // Guard every delay difference the pair sum will request before any
    // quadrature runs; reduce_with's callback cannot fail.
    for m in s.terms() {
        for n in s.terms() {
            g.check_resolved(m.delay_a - n.delay_a, sp_a)?;
            g.check_resolved(m.delay_b - n.delay_b, sp_b)?;
        }
    }
    let mut memo: HashMap<(u64, u64, u64), Complex64> = HashMap::new();
    let out = optics::reduce_with(
        s,
        &mut |d, sp| {
            *memo
                .entry((d.to_bits(), sp.omega0().to_bits(), sp.sigma().to_bits()))
                .or_insert_with(|| trapezoid_characteristic(d, sp, g))
        },
        sp_a,
        sp_b,
    )?;
    Ok(out)
}
