//! Hamiltonians of the homogenized dynamics and closed-form subsolutions.
//!
//! For the homogenized diffusion with drift `r(x)` and diffusivity `q`, the
//! Hamiltonian is `H̄(x, p) = r(x) p - ½ q p²` and a classical subsolution
//! `Ū` satisfies `Ū_t + H̄(x, Ū_x) ≥ 0` with `Ū(T, ·) ≤ h`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::SharedPotential;

#[derive(Clone)]
pub struct Hamiltonian1D {
    drift: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Effective diffusivity `q > 0`.
    pub q: f64,
}

impl fmt::Debug for Hamiltonian1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian1D")
            .field("q", &self.q)
            .finish_non_exhaustive()
    }
}

impl Hamiltonian1D {
    pub fn new(drift: impl Fn(f64) -> f64 + Send + Sync + 'static, q: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::InvalidInput(format!(
                "effective diffusivity must be positive, got {q}"
            )));
        }
        Ok(Self {
            drift: Arc::new(drift),
            q,
        })
    }

    /// Homogenized Langevin Hamiltonian with `r(x) = -κ V'(x)`.
    pub fn homogenized(slow: SharedPotential, kappa: f64, q: f64) -> Result<Self> {
        Self::new(move |x| -kappa * slow.derivative(x), q)
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        self.drift(x) * p - 0.5 * self.q * p * p
    }

    /// The `p` maximizing `H̄(x, ·)`, namely `r(x)/q`.
    pub fn argmax(&self, x: f64) -> f64 {
        self.drift(x) / self.q
    }
}

/// `H̄(x, p) = r(x) p - ½ q p²`.
pub fn hamiltonian(h: &Hamiltonian1D, x: f64, p: f64) -> f64 {
    h.eval(x, p)
}

/// Terminal cost `h` of a finite-horizon problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TerminalCost {
    /// `h(x) = (|x| - 1)²`: a double well with minima at ±1.
    #[default]
    TwoWell,
    Zero,
}

impl TerminalCost {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TerminalCost::TwoWell => (x.abs() - 1.0).powi(2),
            TerminalCost::Zero => 0.0,
        }
    }
}

/// `sign(x)` with `sign(0) = +1`.
#[inline]
fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Value function of the homogenized problem with drift `-κx`,
/// diffusivity `2Dκ` and terminal cost `(|x| - 1)²`:
///
/// ```text
/// G(t, x) = (e^{κT} - |x| e^{κt})² / ((1 + 2D) e^{2κT} - 2D e^{2κt})
/// ```
///
/// `G` is smooth except across `x = 0`, where it is the minimum of two
/// classical solutions; it is used as the subsolution directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalQuadraticSubsolution {
    pub kappa: f64,
    pub diffusion: f64,
    pub horizon: f64,
}

impl TerminalQuadraticSubsolution {
    pub fn value_and_gradient(&self, t: f64, x: f64) -> (f64, f64) {
        let (a, d) = (self.kappa, self.diffusion);
        let e_t = (a * t).exp();
        let e_big = (a * self.horizon).exp();
        let den = (1.0 + 2.0 * d) * e_big * e_big - 2.0 * d * e_t * e_t;
        let num = e_big - x.abs() * e_t;
        (num * num / den, -2.0 * e_t * num * sign(x) / den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitShape {
    /// `U(x) = (x⁺ - x)/D`, for a constant negative drift.
    LinearDrift,
    /// `U(x) = ((x⁺)² - x²)/(2D)`, the quasipotential of a linear restoring
    /// drift toward a rest point at the origin.
    RestPoint,
}

/// Stationary subsolution for the probability of leaving `(x⁻, x⁺)` through `x⁺`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSubsolution {
    pub diffusion: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub shape: ExitShape,
}

impl ExitSubsolution {
    pub fn value_and_gradient(&self, x: f64) -> (f64, f64) {
        let d = self.diffusion;
        match self.shape {
            ExitShape::LinearDrift => ((self.x_plus - x) / d, -1.0 / d),
            ExitShape::RestPoint => ((self.x_plus * self.x_plus - x * x) / (2.0 * d), -x / d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Subsolution {
    /// `Ū ≡ 0`: no change of measure.
    Zero,
    TerminalQuadratic(TerminalQuadraticSubsolution),
    Exit(ExitSubsolution),
}

impl Subsolution {
    /// `(Ū(t, x), ∂Ū/∂x (t, x))`.
    pub fn value_and_gradient(&self, t: f64, x: f64) -> (f64, f64) {
        match self {
            Subsolution::Zero => (0.0, 0.0),
            Subsolution::TerminalQuadratic(s) => s.value_and_gradient(t, x),
            Subsolution::Exit(s) => s.value_and_gradient(x),
        }
    }

    #[inline]
    pub fn gradient(&self, t: f64, x: f64) -> f64 {
        match self {
            Subsolution::Zero => 0.0,
            Subsolution::Exit(ExitSubsolution {
                shape: ExitShape::LinearDrift,
                diffusion,
                ..
            }) => -1.0 / diffusion,
            _ => self.value_and_gradient(t, x).1,
        }
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.value_and_gradient(t, x).0
    }
}

/// Rectangle `[t0, t1] × [x0, x1]` sampled at `nt × nx` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationGrid {
    pub t_range: (f64, f64),
    pub x_range: (f64, f64),
    pub nt: usize,
    pub nx: usize,
}

impl VerificationGrid {
    fn nodes(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Allowed violation of each inequality.
    pub tol: f64,
    /// Step of the finite differences in `t`.
    pub fd_step: f64,
    pub terminal_cost: TerminalCost,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            fd_step: 1e-4,
            terminal_cost: TerminalCost::TwoWell,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    /// `max(0, -(Ū_t + H̄(x, Ū_x)))` over the grid.
    pub max_violation: f64,
    /// `max |Ū_t + H̄(x, Ū_x)|`, zero for an exact solution.
    pub max_abs_residual: f64,
    /// Grid node `(t, x)` of the largest violation (or residual if none).
    pub worst_at: (f64, f64),
    /// `max(0, Ū(T, x) - h(x))` over the terminal slice (or `Ū(x⁺)` for exit problems).
    pub boundary_violation: f64,
    pub passed: bool,
}

/// Checks the subsolution inequalities on a grid, differencing `Ū` in `t`
/// (one-sided second-order stencils at the ends of the horizon).
pub fn verify_subsolution(
    sub: &Subsolution,
    ham: &Hamiltonian1D,
    grid: &VerificationGrid,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let (x_lo, x_hi) = grid.x_range;
    let (t_lo, t_hi) = grid.t_range;
    if grid.nt == 0 || grid.nx == 0 || !(x_hi >= x_lo) || !(t_hi >= t_lo) || !(opts.fd_step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "degenerate verification grid {grid:?}"
        )));
    }
    let horizon = match sub {
        Subsolution::TerminalQuadratic(s) => {
            if x_lo <= 0.0 && x_hi >= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "grid x range [{x_lo}, {x_hi}] touches the non-smooth interface x = 0"
                )));
            }
            if t_lo < 0.0 || t_hi > s.horizon {
                return Err(Error::InvalidInput(format!(
                    "grid t range [{t_lo}, {t_hi}] leaves [0, {}]",
                    s.horizon
                )));
            }
            Some(s.horizon)
        }
        Subsolution::Exit(s) => {
            if x_lo < s.x_minus || x_hi > s.x_plus {
                return Err(Error::InvalidInput(format!(
                    "grid x range [{x_lo}, {x_hi}] leaves the interval [{}, {}]",
                    s.x_minus, s.x_plus
                )));
            }
            None
        }
        Subsolution::Zero => Some(t_hi),
    };

    let h = opts.fd_step;
    let time_derivative = |t: f64, x: f64| -> f64 {
        if matches!(sub, Subsolution::Exit(_)) {
            return 0.0;
        }
        let u = |s: f64| sub.value(s, x);
        let end = horizon.unwrap_or(f64::INFINITY);
        if t - h < 0.0 {
            (-3.0 * u(t) + 4.0 * u(t + h) - u(t + 2.0 * h)) / (2.0 * h)
        } else if t + h > end {
            (3.0 * u(t) - 4.0 * u(t - h) + u(t - 2.0 * h)) / (2.0 * h)
        } else {
            (u(t + h) - u(t - h)) / (2.0 * h)
        }
    };

    let mut max_violation = 0.0f64;
    let mut max_abs_residual = 0.0f64;
    let mut worst_at = (t_lo, x_lo);
    let mut worst_key = f64::NEG_INFINITY;
    for t in VerificationGrid::nodes(t_lo, t_hi, grid.nt) {
        for x in VerificationGrid::nodes(x_lo, x_hi, grid.nx) {
            let (_, ux) = sub.value_and_gradient(t, x);
            let residual = time_derivative(t, x) + ham.eval(x, ux);
            let violation = (-residual).max(0.0);
            max_violation = max_violation.max(violation);
            max_abs_residual = max_abs_residual.max(residual.abs());
            let key = if violation > 0.0 {
                violation
            } else {
                residual.abs() - 1e300
            };
            if key > worst_key {
                worst_key = key;
                worst_at = (t, x);
            }
        }
    }

    let boundary_violation = match (sub, horizon) {
        (Subsolution::Exit(s), _) => sub.value(0.0, s.x_plus).max(0.0),
        (_, Some(end)) => VerificationGrid::nodes(x_lo, x_hi, grid.nx)
            .map(|x| (sub.value(end, x) - opts.terminal_cost.eval(x)).max(0.0))
            .fold(0.0, f64::max),
        _ => 0.0,
    };

    Ok(VerificationReport {
        max_violation,
        max_abs_residual,
        worst_at,
        boundary_violation,
        passed: max_violation <= opts.tol && boundary_violation <= opts.tol,
    })
}
