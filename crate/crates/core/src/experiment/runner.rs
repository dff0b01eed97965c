use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::{ExperimentSpec, FastPotential, Problem, SlowPotential, SubsolutionChoice};
use crate::error::{Error, Result};
use crate::estimators::{
    cross_check, CrossCheckReport, EstimatorKind, EstimatorSummary, MomentAccumulator,
};
use crate::periodic_env::{compute_constants, PeriodicModel};
use crate::potential::{Constant, CosSin, Linear, Quadratic, SharedPotential};
use crate::random_env::{
    homogenized_constants, FieldRealization, GaussianFieldSpec, TabulatedField,
};
use crate::rng::{stream, Domain};
use crate::simulator::{
    ControlScheme, Homogenization, LangevinModel, PathSimulator, ResolvedStep, SimMode, SimParams,
};
use crate::subsolution::{ExitShape, ExitSubsolution, Subsolution, TerminalQuadraticSubsolution};

/// Paths per parallel work unit. Chunks are merged in index order so the
/// result does not depend on the number of workers.
const CHUNK: u64 = 1024;

/// Extra room in `y` around the exit interval when tabulating a field.
const TABLE_MARGIN: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct EstimateRecord {
    pub kind: EstimatorKind,
    pub summary: EstimatorSummary,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub step: ResolvedStep,
    pub homogenization: Homogenization,
    pub field: Option<Arc<FieldRealization>>,
    pub estimates: Vec<EstimateRecord>,
    pub cross_check: CrossCheckReport,
}

impl ExperimentResult {
    pub fn estimate(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.estimates
            .iter()
            .find(|e| e.kind == kind)
            .map(|e| &e.summary)
    }
}

pub(super) fn sim_params(spec: &ExperimentSpec) -> SimParams {
    let (t0, horizon, x0, mode) = match spec.problem {
        Problem::FiniteHorizon {
            t0,
            horizon,
            x0,
            terminal_cost,
        } => (t0, horizon, x0, SimMode::FiniteHorizon { terminal_cost }),
        Problem::Exit {
            x0,
            x_minus,
            x_plus,
        } => (
            0.0,
            spec.budget_horizon,
            x0,
            SimMode::Exit { x_minus, x_plus },
        ),
    };
    SimParams {
        epsilon: spec.epsilon,
        delta: spec.delta,
        t0,
        horizon,
        x0,
        dt_rule: spec.dt_rule,
        mode,
        max_steps: spec.max_steps_per_path,
    }
}

fn slow_potential(slow: SlowPotential) -> SharedPotential {
    match slow {
        SlowPotential::Zero => Arc::new(Constant(0.0)),
        SlowPotential::Linear { slope } => Arc::new(Linear { slope }),
        SlowPotential::Quadratic { stiffness } => Arc::new(Quadratic { stiffness }),
    }
}

struct Environment {
    /// Potential used inside the time-stepping loop.
    fast: SharedPotential,
    homogenization: Homogenization,
    field: Option<Arc<FieldRealization>>,
}

fn environment(spec: &ExperimentSpec, slow: &SharedPotential) -> Result<Environment> {
    let periodic = |fast: SharedPotential, period: f64| -> Result<Environment> {
        let model = PeriodicModel::new(fast.clone(), slow.clone(), period, spec.diffusion)?;
        let coeffs = compute_constants(&model, spec.n_quad)?;
        Ok(Environment {
            fast,
            homogenization: Homogenization::Periodic { period, coeffs },
            field: None,
        })
    };
    match spec.fast {
        FastPotential::Zero => periodic(Arc::new(Constant(0.0)), 1.0),
        FastPotential::CosSin { amplitude } => {
            periodic(Arc::new(CosSin { amplitude }), std::f64::consts::TAU)
        }
        FastPotential::GaussianField {
            variance,
            corr_length_sq,
            n_modes,
        } => {
            let field_spec = GaussianFieldSpec {
                variance,
                corr_length_sq,
                n_modes,
                seed: spec.master_seed,
            };
            let field = Arc::new(FieldRealization::from_seed(&field_spec)?);
            let consts = homogenized_constants(&field_spec, spec.diffusion)?;
            let (lo, hi) = match spec.problem {
                Problem::Exit {
                    x_minus, x_plus, ..
                } => (x_minus, x_plus),
                Problem::FiniteHorizon { x0, .. } => (x0 - 3.0, x0 + 3.0),
            };
            let fast: SharedPotential = Arc::new(TabulatedField::new(
                field.clone(),
                lo / spec.delta - TABLE_MARGIN,
                hi / spec.delta + TABLE_MARGIN,
                TabulatedField::DEFAULT_DENSITY,
            )?);
            Ok(Environment {
                fast,
                homogenization: Homogenization::Random(consts),
                field: Some(field),
            })
        }
    }
}

fn subsolution(spec: &ExperimentSpec, homogenization: &Homogenization) -> Subsolution {
    let d = spec.diffusion;
    match (spec.subsolution, spec.problem) {
        (SubsolutionChoice::TerminalQuadratic, Problem::FiniteHorizon { horizon, .. }) => {
            if spec.slow != (SlowPotential::Quadratic { stiffness: 1.0 }) {
                log::warn!("terminal_quadratic subsolution is built for V(x) = x²/2");
            }
            Subsolution::TerminalQuadratic(TerminalQuadraticSubsolution {
                kappa: homogenization.kappa(),
                diffusion: d,
                horizon,
            })
        }
        (
            SubsolutionChoice::ExitLinearDrift,
            Problem::Exit {
                x_minus, x_plus, ..
            },
        ) => Subsolution::Exit(ExitSubsolution {
            diffusion: d,
            x_minus,
            x_plus,
            shape: ExitShape::LinearDrift,
        }),
        (
            SubsolutionChoice::ExitRestPoint,
            Problem::Exit {
                x_minus, x_plus, ..
            },
        ) => Subsolution::Exit(ExitSubsolution {
            diffusion: d,
            x_minus,
            x_plus,
            shape: ExitShape::RestPoint,
        }),
        _ => Subsolution::Zero,
    }
}

/// Runs `n_paths` trajectories of `sim`, path `i` drawing from stream `i`
/// of `domain`, on the current rayon pool.
pub fn run_paths(
    sim: &PathSimulator,
    n_paths: u64,
    master_seed: u64,
    domain: Domain,
) -> MomentAccumulator {
    let n_chunks = n_paths.div_ceil(CHUNK);
    let partials: Vec<MomentAccumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = MomentAccumulator::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let mut rng = stream(master_seed, domain, i);
                acc.push(&sim.run(&mut rng));
            }
            acc
        })
        .collect();
    partials
        .iter()
        .fold(MomentAccumulator::default(), |mut total, part| {
            total.merge(part);
            total
        })
}

/// Runs every requested estimator of `spec` and cross-checks them.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let estimated = spec.check_budget()?;
    log::info!(
        "{}: about {estimated:.3e} integration steps",
        spec.experiment_id
    );

    let slow = slow_potential(spec.slow);
    let env = environment(spec, &slow)?;
    let sub = subsolution(spec, &env.homogenization);
    let model = Arc::new(LangevinModel {
        fast: env.fast.clone(),
        slow,
        diffusion: spec.diffusion,
    });
    let params = sim_params(spec);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.resolve())
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;

    let mut estimates = Vec::with_capacity(spec.estimators.len());
    let mut step = None;
    for &kind in &spec.estimators {
        let control = Arc::new(ControlScheme {
            variant: kind.variant(),
            subsolution: sub,
            homogenization: env.homogenization,
            fast: env.fast.clone(),
            diffusion: spec.diffusion,
        });
        let sim = PathSimulator::new(model.clone(), params, control)?;
        step = Some(sim.step);
        let started = Instant::now();
        let acc = pool.install(|| {
            run_paths(
                &sim,
                spec.n_paths,
                spec.master_seed,
                Domain::Trajectories(kind.index()),
            )
        });
        let wall_seconds = started.elapsed().as_secs_f64();
        if acc.invalid > 0 {
            log::warn!(
                "{kind}: {} of {} paths became non-finite and count as zero",
                acc.invalid,
                acc.n
            );
        }
        let summary = EstimatorSummary::from_moments(&acc, spec.epsilon)?;
        log::info!(
            "{kind}: mean {:.4e}, relative error {:?} in {wall_seconds:.2}s",
            summary.mean,
            summary.re_per_sample
        );
        estimates.push(EstimateRecord {
            kind,
            summary,
            wall_seconds,
        });
    }

    let pairs: Vec<_> = estimates.iter().map(|e| (e.kind, e.summary)).collect();
    let reference = if spec.estimators.contains(&EstimatorKind::Theta1) {
        EstimatorKind::Theta1
    } else {
        spec.estimators[0]
    };
    let report = cross_check(&pairs, reference)?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        step: step.expect("at least one estimator ran"),
        homogenization: env.homogenization,
        field: env.field,
        estimates,
        cross_check: report,
    })
}
