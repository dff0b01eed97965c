//! Homogenization of a one-dimensional Langevin diffusion in a periodic
//! rough potential.
//!
//! For `dX = [-(ε/δ) Q'(X/δ) - V'(X)] dt + √ε √(2D) dW` with `Q` of period
//! `λ`, the fast motion has the Gibbs invariant density `e^{-Q/D} / L` and the
//! cell-problem corrector has the closed form `1 + χ'(y) = (λ/L̂) e^{Q(y)/D}`,
//! where
//!
//! ```text
//! L = ∫₀^λ e^{-Q(y)/D} dy,    L̂ = ∫₀^λ e^{Q(y)/D} dy,    κ = λ² / (L L̂).
//! ```
//!
//! The homogenized drift is `r(x) = -κ V'(x)` and the effective diffusivity
//! is `q = 2Dκ`.

use crate::error::{Error, Result};
use crate::potential::SharedPotential;

/// Default number of trapezoid nodes over one period.
pub const DEFAULT_QUADRATURE_NODES: usize = 1024;

/// Smallest accepted number of quadrature nodes.
pub const MIN_QUADRATURE_NODES: usize = 16;

const PERIODICITY_TOLERANCE: f64 = 1e-9;
const DERIVATIVE_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct PeriodicModel {
    /// Fast potential `Q`, periodic with `period`.
    pub fast: SharedPotential,
    /// Slow potential `V`.
    pub slow: SharedPotential,
    pub period: f64,
    /// Diffusion constant `D`; the noise amplitude is `√ε √(2D)`.
    pub diffusion: f64,
}

impl PeriodicModel {
    /// Builds a model after spot-checking periodicity of `Q` and that the
    /// supplied derivative matches a central difference on a grid.
    pub fn new(
        fast: SharedPotential,
        slow: SharedPotential,
        period: f64,
        diffusion: f64,
    ) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "period must be positive, got {period}"
            )));
        }
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "diffusion constant must be positive, got {diffusion}"
            )));
        }
        const CHECKS: usize = 32;
        let h = 1e-5 * period;
        for k in 0..CHECKS {
            let y = period * (k as f64 + 0.37) / CHECKS as f64;
            let (q, dq) = fast.value_and_derivative(y);
            let shifted = fast.value(y + period);
            if (q - shifted).abs() > PERIODICITY_TOLERANCE * (1.0 + q.abs()) {
                return Err(Error::InvalidInput(format!(
                    "fast potential is not {period}-periodic at y = {y}: {q} vs {shifted}"
                )));
            }
            let fd = (fast.value(y + h) - fast.value(y - h)) / (2.0 * h);
            if (fd - dq).abs() > DERIVATIVE_TOLERANCE * (1.0 + dq.abs()) {
                return Err(Error::InvalidInput(format!(
                    "fast potential derivative disagrees with finite difference at y = {y}: {dq} vs {fd}"
                )));
            }
        }
        Ok(Self {
            fast,
            slow,
            period,
            diffusion,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoefficients {
    /// `L = ∫ e^{-Q/D}` over one period (Gibbs normalizer).
    pub l: f64,
    /// `L̂ = ∫ e^{Q/D}` over one period.
    pub l_hat: f64,
    /// `κ = λ² / (L L̂)`, in `(0, 1]`.
    pub kappa: f64,
    /// Effective diffusivity `q = 2Dκ`.
    pub q: f64,
}

/// Computes `L`, `L̂`, `κ` and `q` by the composite trapezoid rule over one
/// period, which converges spectrally for smooth periodic integrands.
pub fn compute_constants(model: &PeriodicModel, n_quad: usize) -> Result<EffectiveCoefficients> {
    if n_quad < MIN_QUADRATURE_NODES {
        return Err(Error::InvalidInput(format!(
            "n_quad must be at least {MIN_QUADRATURE_NODES}, got {n_quad}"
        )));
    }
    let d = model.diffusion;
    let step = model.period / n_quad as f64;
    let mut l = 0.0;
    let mut l_hat = 0.0;
    for k in 0..n_quad {
        let y = k as f64 * step;
        let q = model.fast.value(y);
        let minus = (-q / d).exp();
        let plus = (q / d).exp();
        if !(q.is_finite() && minus.is_finite() && plus.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite integrand at quadrature node {k} (y = {y}, Q(y) = {q}, D = {d})"
            )));
        }
        l += minus;
        l_hat += plus;
    }
    l *= step;
    l_hat *= step;
    let kappa = model.period * model.period / (l * l_hat);
    Ok(EffectiveCoefficients {
        l,
        l_hat,
        kappa,
        q: 2.0 * d * kappa,
    })
}

impl EffectiveCoefficients {
    /// Prefactor `λ / L̂` of the corrector.
    pub fn corrector_scale(&self, period: f64) -> f64 {
        period / self.l_hat
    }
}

/// `1 + χ'(y) = (λ/L̂) e^{Q(y)/D}`.
pub fn corrector_factor(model: &PeriodicModel, coeffs: &EffectiveCoefficients, y: f64) -> f64 {
    coeffs.corrector_scale(model.period) * (model.fast.value(y) / model.diffusion).exp()
}

/// Homogenized drift `r(x) = -κ V'(x)`.
pub fn effective_drift(model: &PeriodicModel, coeffs: &EffectiveCoefficients, x: f64) -> f64 {
    -coeffs.kappa * model.slow.derivative(x)
}
