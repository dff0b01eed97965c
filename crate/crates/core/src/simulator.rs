//! Time-discretized simulation of the multiscale Langevin equation
//!
//! ```text
//! dX = [-(ε/δ) Q'(X/δ) - V'(X)] dt + √(2D) [√ε dW̄ + u dt]
//! ```
//!
//! under an optional feedback control `u(t, X, X/δ)`, accumulating the
//! log-likelihood ratio `log dP/dP̄` of the original law against the
//! simulated one.
//!
//! The uncontrolled drift is integrated by a predictor-corrector Euler step.
//! The control enters as a shift of the Brownian increment,
//! `ΔW = ΔW̄ + u_k Δ/√ε`, fed to the uncontrolled scheme. The per-step
//! likelihood ratio of the Gaussian increments is then exactly
//! `exp(-u_k ΔW̄/√ε - u_k² Δ/(2ε))`, so weighted estimators are unbiased for
//! the discretized chain itself, not only in the `Δ → 0` limit.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::payoff;
use crate::periodic_env::EffectiveCoefficients;
use crate::potential::SharedPotential;
use crate::random_env::RandomHomogenized;
use crate::subsolution::{Subsolution, TerminalCost};

/// Default per-path step budget in exit mode.
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

/// `Δ = tol · δ²/ε`, which keeps the weak error bound `(Δ ε/δ²)^p` at `tol^p`.
pub fn step_size(epsilon: f64, delta: f64, tol: f64) -> Result<f64> {
    if !(epsilon > 0.0 && delta > 0.0 && tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step rule needs positive epsilon, delta and tol (got {epsilon}, {delta}, {tol})"
        )));
    }
    Ok(tol * delta * delta / epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `Δ = tol · δ²/ε`.
    Scaled {
        tol: f64,
    },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMode {
    /// Run on `[t0, T]` and pay `e^{-h(X_T)/ε}`.
    FiniteHorizon { terminal_cost: TerminalCost },
    /// Run until the first grid time outside `(x_minus, x_plus)` and pay
    /// `1` on leaving through `x_plus`.
    Exit { x_minus: f64, x_plus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub epsilon: f64,
    pub delta: f64,
    pub t0: f64,
    /// Terminal time (finite-horizon mode only).
    pub horizon: f64,
    pub x0: f64,
    pub dt_rule: DtRule,
    pub mode: SimMode,
    /// Exit-mode step budget per path; longer paths are censored.
    pub max_steps: u64,
}

/// Step size and step count after applying the rule to the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedStep {
    pub dt: f64,
    /// Fixed number of steps in finite-horizon mode.
    pub n_steps: Option<u64>,
    /// The rule asked for a step longer than the whole horizon.
    pub clamped: bool,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.epsilon > 0.0 && self.delta > 0.0) {
            return bad(format!(
                "epsilon and delta must be positive ({}, {})",
                self.epsilon, self.delta
            ));
        }
        if !self.x0.is_finite() {
            return bad(format!("initial state must be finite, got {}", self.x0));
        }
        match self.dt_rule {
            DtRule::Scaled { tol } if !(tol > 0.0) => {
                return bad(format!("step tolerance must be positive, got {tol}"))
            }
            DtRule::Fixed(dt) if !(dt > 0.0) => {
                return bad(format!("time step must be positive, got {dt}"))
            }
            _ => {}
        }
        match self.mode {
            SimMode::FiniteHorizon { .. } => {
                if !(self.horizon > self.t0) {
                    return bad(format!(
                        "horizon {} must exceed start time {}",
                        self.horizon, self.t0
                    ));
                }
            }
            SimMode::Exit { x_minus, x_plus } => {
                if !(x_minus < self.x0 && self.x0 < x_plus) {
                    return bad(format!(
                        "x0 = {} must lie inside ({x_minus}, {x_plus})",
                        self.x0
                    ));
                }
                if self.max_steps == 0 {
                    return bad("max_steps must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn raw_step(&self) -> Result<f64> {
        match self.dt_rule {
            DtRule::Scaled { tol } => step_size(self.epsilon, self.delta, tol),
            DtRule::Fixed(dt) => Ok(dt),
        }
    }

    /// Finite-horizon runs use `n = ⌈(T - t0)/Δ⌉` equal steps, never longer than the rule's `Δ`.
    pub fn resolve_step(&self) -> Result<ResolvedStep> {
        let dt = self.raw_step()?;
        match self.mode {
            SimMode::FiniteHorizon { .. } => {
                let span = self.horizon - self.t0;
                let clamped = dt > span;
                let n = (span / dt).ceil().max(1.0);
                if !(n < u64::MAX as f64) {
                    return Err(Error::InvalidInput(format!(
                        "step {dt} is too small for horizon {span}"
                    )));
                }
                Ok(ResolvedStep {
                    dt: span / n,
                    n_steps: Some(n as u64),
                    clamped,
                })
            }
            SimMode::Exit { .. } => Ok(ResolvedStep {
                dt,
                n_steps: None,
                clamped: false,
            }),
        }
    }

    pub fn eps_over_delta(&self) -> f64 {
        self.epsilon / self.delta
    }
}

/// `dX = [-(ε/δ) Q'(X/δ) - V'(X)] dt + √ε √(2D) dW`.
#[derive(Debug, Clone)]
pub struct LangevinModel {
    pub fast: SharedPotential,
    pub slow: SharedPotential,
    pub diffusion: f64,
}

/// Homogenized constants of the environment the control is built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Homogenization {
    Periodic {
        period: f64,
        coeffs: EffectiveCoefficients,
    },
    Random(RandomHomogenized),
}

impl Homogenization {
    /// Prefactor `c` of the corrector `1 + χ'(y) = c e^{Q(y)/D}`.
    pub fn corrector_scale(&self) -> f64 {
        match self {
            Homogenization::Periodic { period, coeffs } => coeffs.corrector_scale(*period),
            Homogenization::Random(c) => 1.0 / c.k_hat,
        }
    }

    pub fn kappa(&self) -> f64 {
        match self {
            Homogenization::Periodic { coeffs, .. } => coeffs.kappa,
            Homogenization::Random(c) => c.kappa,
        }
    }

    pub fn effective_diffusivity(&self) -> f64 {
        match self {
            Homogenization::Periodic { coeffs, .. } => coeffs.q,
            Homogenization::Random(c) => c.q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlVariant {
    /// Standard Monte Carlo.
    NoControl,
    /// `u₁ = -√(2D) (1 + χ'(y)) Ū_x(t, x)`, corrected by the cell problem.
    FullMultiscale,
    /// `u₂ = -√q Ū_x(t, x)`, built from the homogenized equation alone.
    HomogenizedOnly,
}

#[derive(Debug, Clone)]
pub struct ControlScheme {
    pub variant: ControlVariant,
    pub subsolution: Subsolution,
    pub homogenization: Homogenization,
    pub fast: SharedPotential,
    pub diffusion: f64,
}

impl ControlScheme {
    pub fn uncontrolled(
        fast: SharedPotential,
        diffusion: f64,
        homogenization: Homogenization,
    ) -> Self {
        Self {
            variant: ControlVariant::NoControl,
            subsolution: Subsolution::Zero,
            homogenization,
            fast,
            diffusion,
        }
    }

    /// `u(t, x, y)`.
    pub fn control_value(&self, t: f64, x: f64, y: f64) -> f64 {
        let fast_value = match self.variant {
            ControlVariant::FullMultiscale => self.fast.value(y),
            _ => 0.0,
        };
        self.kernel().eval(&self.subsolution, t, x, fast_value)
    }

    fn kernel(&self) -> ControlKernel {
        match self.variant {
            ControlVariant::NoControl => ControlKernel::Zero,
            ControlVariant::FullMultiscale => ControlKernel::Multiscale {
                coeff: -(2.0 * self.diffusion).sqrt() * self.homogenization.corrector_scale(),
                inv_diffusion: 1.0 / self.diffusion,
            },
            ControlVariant::HomogenizedOnly => ControlKernel::Homogenized {
                coeff: -self.homogenization.effective_diffusivity().sqrt(),
            },
        }
    }
}

/// Control with its constants folded, evaluated once per step.
#[derive(Debug, Clone, Copy)]
enum ControlKernel {
    Zero,
    Multiscale { coeff: f64, inv_diffusion: f64 },
    Homogenized { coeff: f64 },
}

impl ControlKernel {
    #[inline]
    fn eval(self, sub: &Subsolution, t: f64, x: f64, fast_value: f64) -> f64 {
        match self {
            ControlKernel::Zero => 0.0,
            ControlKernel::Multiscale {
                coeff,
                inv_diffusion,
            } => coeff * (fast_value * inv_diffusion).exp() * sub.gradient(t, x),
            ControlKernel::Homogenized { coeff } => coeff * sub.gradient(t, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Completed,
    /// Exit path that hit the step budget before leaving the interval.
    Censored,
    /// The state or weight became non-finite.
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub terminal_x: f64,
    pub exited_at_plus: bool,
    /// `log dP/dP̄` along the path; zero without control.
    pub log_weight: f64,
    pub n_steps: u64,
    pub payoff: f64,
    pub status: PathStatus,
}

impl TrajectoryOutcome {
    /// Importance-sampling sample `payoff · e^{log_weight}`.
    pub fn weighted_payoff(&self) -> f64 {
        if self.payoff == 0.0 {
            0.0
        } else {
            self.payoff * self.log_weight.exp()
        }
    }

    /// Elapsed simulated time (the exit time in exit mode).
    pub fn elapsed(&self, dt: f64) -> f64 {
        self.n_steps as f64 * dt
    }
}

/// Simulates one trajectory, drawing Brownian increments from `rng`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &LangevinModel,
    params: &SimParams,
    control: &ControlScheme,
    rng: &mut R,
) -> Result<TrajectoryOutcome> {
    params.validate()?;
    let step = params.resolve_step()?;
    Ok(integrate(model, params, &step, control, rng))
}

/// Inner loop of [`simulate_path`] with validation and step resolution hoisted.
pub(crate) fn integrate<R: Rng + ?Sized>(
    model: &LangevinModel,
    params: &SimParams,
    step: &ResolvedStep,
    control: &ControlScheme,
    rng: &mut R,
) -> TrajectoryOutcome {
    let eps = params.epsilon;
    let dt = step.dt;
    let sqrt_dt = dt.sqrt();
    let sqrt_eps = eps.sqrt();
    let inv_sqrt_eps = 1.0 / sqrt_eps;
    let noise_scale = (2.0 * model.diffusion).sqrt() * sqrt_eps;
    let fast_scale = eps / params.delta;
    let inv_delta = 1.0 / params.delta;
    let fast: &dyn crate::potential::Potential = model.fast.as_ref();
    let slow: &dyn crate::potential::Potential = model.slow.as_ref();
    let kernel = control.kernel();
    let controlled = !matches!(kernel, ControlKernel::Zero);
    let sub = &control.subsolution;

    let (max_steps, exit) = match (params.mode, step.n_steps) {
        (SimMode::FiniteHorizon { .. }, Some(n)) => (n, None),
        (SimMode::Exit { x_minus, x_plus }, _) => (params.max_steps, Some((x_minus, x_plus))),
        (SimMode::FiniteHorizon { .. }, None) => {
            unreachable!("finite horizon always resolves a step count")
        }
    };

    let mut x = params.x0;
    let mut log_weight = 0.0;
    let mut n = 0u64;
    let mut status = PathStatus::Completed;
    let mut exited_at_plus = false;
    let mut exited = false;

    while n < max_steps {
        let t = params.t0 + n as f64 * dt;
        let (q, dq) = fast.value_and_derivative(x * inv_delta);
        let b0 = -fast_scale * dq - slow.derivative(x);
        let dw_bar = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let dw = if controlled {
            let u = kernel.eval(sub, t, x, q);
            log_weight -= u * dw_bar * inv_sqrt_eps + 0.5 * u * u * dt / eps;
            dw_bar + u * dt * inv_sqrt_eps
        } else {
            dw_bar
        };
        let noise = noise_scale * dw;
        let predictor = x + b0 * dt + noise;
        let b1 = -fast_scale * fast.derivative(predictor * inv_delta) - slow.derivative(predictor);
        x += 0.5 * (b0 + b1) * dt + noise;
        n += 1;

        if !x.is_finite() || !log_weight.is_finite() {
            status = PathStatus::Invalid;
            break;
        }
        if let Some((x_minus, x_plus)) = exit {
            if x >= x_plus {
                exited = true;
                exited_at_plus = true;
                break;
            }
            if x <= x_minus {
                exited = true;
                break;
            }
        }
    }
    if exit.is_some() && !exited && status == PathStatus::Completed {
        status = PathStatus::Censored;
    }

    let mut outcome = TrajectoryOutcome {
        terminal_x: x,
        exited_at_plus,
        log_weight,
        n_steps: n,
        payoff: 0.0,
        status,
    };
    outcome.payoff = payoff(&params.mode, eps, &outcome);
    outcome
}

/// Shared-ownership bundle of everything a worker needs to simulate paths.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    pub model: Arc<LangevinModel>,
    pub params: SimParams,
    pub step: ResolvedStep,
    pub control: Arc<ControlScheme>,
}

impl PathSimulator {
    pub fn new(
        model: Arc<LangevinModel>,
        params: SimParams,
        control: Arc<ControlScheme>,
    ) -> Result<Self> {
        params.validate()?;
        let step = params.resolve_step()?;
        if step.clamped {
            log::warn!(
                "time step {} exceeds the horizon {}; clamped to a single step",
                params.raw_step()?,
                params.horizon - params.t0
            );
        }
        Ok(Self {
            model,
            params,
            step,
            control,
        })
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> TrajectoryOutcome {
        integrate(&self.model, &self.params, &self.step, &self.control, rng)
    }
}
