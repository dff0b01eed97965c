//! Experiment definitions, presets, the parallel runner and CSV output.

mod config;
mod output;
mod presets;
mod runner;

use std::path::PathBuf;

pub use config::{parse_config, serialize_config};
pub use output::{
    emit_plot_data, read_csv, write_csv, write_csv_to, write_plot_data, CsvRow, PlotRecord,
    CSV_HEADER,
};
pub use presets::{preset, reference_row, PresetTable, ReferenceRow};
pub use runner::{run_experiment, run_paths, EstimateRecord, ExperimentResult};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::periodic_env::DEFAULT_QUADRATURE_NODES;
use crate::random_env::DEFAULT_MODES;
use crate::simulator::{DtRule, DEFAULT_MAX_STEPS};
use crate::subsolution::TerminalCost;

/// Default ceiling on the total number of integration steps of one experiment.
pub const DEFAULT_STEP_CEILING: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Periodic rough potential, finite horizon, terminal cost `(|x|-1)²`.
    PeriodicTerminal,
    /// Gaussian random potential, linear slow potential, exit from `(-0.5, 0.5)`.
    RandomExitNegDrift,
    /// Gaussian random potential, quadratic slow potential, exit from `(0, 0.8)`.
    RandomExitRestPoint,
    Custom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PeriodicTerminal => "periodic_terminal",
            Family::RandomExitNegDrift => "random_exit_neg_drift",
            Family::RandomExitRestPoint => "random_exit_rest_point",
            Family::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Family::PeriodicTerminal,
            Family::RandomExitNegDrift,
            Family::RandomExitRestPoint,
            Family::Custom,
        ]
        .into_iter()
        .find(|f| f.name() == s)
    }
}

/// Fast potential `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FastPotential {
    /// `Q ≡ 0` (periodic with any period).
    Zero,
    /// `amplitude · (cos y + sin y)`, period 2π.
    CosSin { amplitude: f64 },
    /// Frozen Gaussian field with covariance `variance · exp(-r²/corr_length_sq)`.
    GaussianField {
        variance: f64,
        corr_length_sq: f64,
        n_modes: usize,
    },
}

/// Slow potential `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlowPotential {
    Zero,
    Linear { slope: f64 },
    Quadratic { stiffness: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    FiniteHorizon {
        t0: f64,
        horizon: f64,
        x0: f64,
        terminal_cost: TerminalCost,
    },
    Exit {
        x0: f64,
        x_minus: f64,
        x_plus: f64,
    },
}

impl Problem {
    pub fn x0(&self) -> f64 {
        match *self {
            Problem::FiniteHorizon { x0, .. } | Problem::Exit { x0, .. } => x0,
        }
    }
}

/// Which subsolution drives the importance-sampling controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsolutionChoice {
    Zero,
    /// Closed-form value function for drift `-κx` and terminal cost `(|x|-1)²`.
    TerminalQuadratic,
    ExitLinearDrift,
    ExitRestPoint,
}

impl SubsolutionChoice {
    pub fn name(self) -> &'static str {
        match self {
            SubsolutionChoice::Zero => "zero",
            SubsolutionChoice::TerminalQuadratic => "terminal_quadratic",
            SubsolutionChoice::ExitLinearDrift => "exit_linear_drift",
            SubsolutionChoice::ExitRestPoint => "exit_rest_point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workers {
    Auto,
    Fixed(usize),
}

impl Workers {
    pub fn resolve(self) -> usize {
        match self {
            Workers::Auto => std::thread::available_parallelism().map_or(1, |n| n.get()),
            Workers::Fixed(n) => n.max(1),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "auto" => Some(Workers::Auto),
            n => n.parse().ok().filter(|&n| n > 0).map(Workers::Fixed),
        }
    }
}

impl std::fmt::Display for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Workers::Auto => f.write_str("auto"),
            Workers::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Full definition of one experiment: a model, a rare-event problem, and
/// the estimators to compare on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment_id: String,
    pub family: Family,
    pub epsilon: f64,
    pub delta: f64,
    pub n_paths: u64,
    pub estimators: Vec<EstimatorKind>,
    pub dt_rule: DtRule,
    pub master_seed: u64,
    pub workers: Workers,
    pub output: Option<PathBuf>,
    pub fast: FastPotential,
    pub slow: SlowPotential,
    pub diffusion: f64,
    pub problem: Problem,
    pub subsolution: SubsolutionChoice,
    pub n_quad: usize,
    /// Refuse runs whose estimated total step count exceeds this.
    pub step_ceiling: f64,
    /// Exit-mode step budget per path.
    pub max_steps_per_path: u64,
    /// Nominal exit time used only to estimate the cost of exit runs.
    pub budget_horizon: f64,
}

impl ExperimentSpec {
    /// Defaults of a family; every field can be overridden afterwards.
    pub fn template(family: Family) -> Self {
        let base = ExperimentSpec {
            experiment_id: family.name().replace('_', "-"),
            family,
            epsilon: 0.25,
            delta: 0.1,
            n_paths: 100_000,
            estimators: EstimatorKind::ALL.to_vec(),
            dt_rule: DtRule::Scaled { tol: 0.01 },
            master_seed: 20_111_003,
            workers: Workers::Auto,
            output: None,
            fast: FastPotential::Zero,
            slow: SlowPotential::Zero,
            diffusion: 1.0,
            problem: Problem::FiniteHorizon {
                t0: 0.0,
                horizon: 1.0,
                x0: 0.05,
                terminal_cost: TerminalCost::TwoWell,
            },
            subsolution: SubsolutionChoice::Zero,
            n_quad: DEFAULT_QUADRATURE_NODES,
            step_ceiling: DEFAULT_STEP_CEILING,
            max_steps_per_path: DEFAULT_MAX_STEPS,
            budget_horizon: 1.0,
        };
        let field = FastPotential::GaussianField {
            variance: 1.0,
            corr_length_sq: 1.0,
            n_modes: DEFAULT_MODES,
        };
        match family {
            Family::PeriodicTerminal => ExperimentSpec {
                fast: FastPotential::CosSin { amplitude: 1.0 },
                slow: SlowPotential::Quadratic { stiffness: 1.0 },
                subsolution: SubsolutionChoice::TerminalQuadratic,
                ..base
            },
            Family::RandomExitNegDrift => ExperimentSpec {
                fast: field,
                slow: SlowPotential::Linear { slope: 1.0 },
                problem: Problem::Exit {
                    x0: 0.0,
                    x_minus: -0.5,
                    x_plus: 0.5,
                },
                subsolution: SubsolutionChoice::ExitLinearDrift,
                dt_rule: DtRule::Scaled { tol: 0.001 },
                budget_horizon: 1.5,
                ..base
            },
            Family::RandomExitRestPoint => ExperimentSpec {
                fast: field,
                slow: SlowPotential::Quadratic { stiffness: 1.0 },
                problem: Problem::Exit {
                    x0: 0.1,
                    x_minus: 0.0,
                    x_plus: 0.8,
                },
                subsolution: SubsolutionChoice::ExitRestPoint,
                dt_rule: DtRule::Scaled { tol: 0.001 },
                budget_horizon: 1.5,
                ..base
            },
            Family::Custom => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        let positive = [
            ("epsilon", self.epsilon),
            ("delta", self.delta),
            ("diffusion", self.diffusion),
            ("step_ceiling", self.step_ceiling),
            ("budget_horizon", self.budget_horizon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.n_paths < 2 {
            return bad(format!("n_paths must be at least 2, got {}", self.n_paths));
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        if self.experiment_id.trim().is_empty() || self.experiment_id.contains(['\n', '#', ',']) {
            return bad(format!("unusable experiment_id {:?}", self.experiment_id));
        }
        match self.fast {
            FastPotential::CosSin { amplitude } if !amplitude.is_finite() => {
                return bad(format!("fast amplitude must be finite, got {amplitude}"))
            }
            FastPotential::GaussianField {
                variance,
                corr_length_sq,
                n_modes,
            } if !(variance > 0.0 && corr_length_sq > 0.0 && n_modes > 0) => {
                return bad(
                    "gaussian field needs positive variance, correlation length and modes".into(),
                )
            }
            _ => {}
        }
        match (self.subsolution, self.problem) {
            (SubsolutionChoice::TerminalQuadratic, Problem::Exit { .. }) => {
                return bad("terminal_quadratic subsolution needs a finite-horizon problem".into())
            }
            (
                SubsolutionChoice::ExitLinearDrift | SubsolutionChoice::ExitRestPoint,
                Problem::FiniteHorizon { .. },
            ) => return bad("exit subsolutions need an exit problem".into()),
            _ => {}
        }
        if self.estimators.iter().any(|&k| k != EstimatorKind::Theta0)
            && self.subsolution == SubsolutionChoice::Zero
        {
            log::warn!("importance-sampling estimators with a zero subsolution reduce to standard Monte Carlo");
        }
        Ok(())
    }

    /// Steps one path takes (finite horizon) or is expected to take (exit).
    pub fn steps_per_path(&self) -> Result<f64> {
        let params = runner::sim_params(self);
        let step = params.resolve_step()?;
        Ok(match step.n_steps {
            Some(n) => n as f64,
            None => (self.budget_horizon / step.dt).ceil(),
        })
    }

    /// Estimated integration steps over all requested estimators.
    pub fn estimated_steps(&self) -> Result<f64> {
        Ok(self.steps_per_path()? * self.n_paths as f64 * self.estimators.len() as f64)
    }

    /// Errors with [`Error::BudgetExceeded`] when the run is too expensive.
    pub fn check_budget(&self) -> Result<f64> {
        let estimated = self.estimated_steps()?;
        if estimated > self.step_ceiling {
            return Err(Error::BudgetExceeded {
                estimated_steps: estimated,
                ceiling: self.step_ceiling,
            });
        }
        Ok(estimated)
    }
}
