//! Statistics of the time stepper on an Ornstein-Uhlenbeck process, where
//! the discrete chain has a closed-form second moment.

use std::sync::Arc;

use multiscale_is::estimators::MomentAccumulator;
use multiscale_is::periodic_env::{compute_constants, PeriodicModel};
use multiscale_is::potential::{Constant, Quadratic};
use multiscale_is::rng::{stream, Domain};
use multiscale_is::simulator::{ControlScheme, Homogenization, LangevinModel, PathSimulator};
use multiscale_is::subsolution::TerminalCost;
use multiscale_is::{DtRule, SimMode, SimParams};

const EPS: f64 = 0.5;
const HORIZON: f64 = 1.0;

/// `E X_T²` of the predictor-corrector chain for `dX = -X dt + √(2ε) dW`, `X_0 = 0`.
fn discrete_second_moment(dt: f64) -> f64 {
    let n = (HORIZON / dt).round() as i32;
    let a = 1.0 - dt + 0.5 * dt * dt;
    let b2 = 2.0 * EPS * dt * (1.0 - 0.5 * dt).powi(2);
    b2 * (1.0 - a.powi(2 * n)) / (1.0 - a * a)
}

fn continuous_second_moment() -> f64 {
    EPS * (1.0 - (-2.0 * HORIZON).exp())
}

fn simulate_second_moment(dt: f64, n_paths: u64) -> (f64, f64) {
    let fast = Arc::new(Constant(0.0));
    let slow = Arc::new(Quadratic { stiffness: 1.0 });
    let periodic = PeriodicModel::new(fast.clone(), slow.clone(), 1.0, 1.0).unwrap();
    let coeffs = compute_constants(&periodic, 64).unwrap();
    let model = Arc::new(LangevinModel {
        fast: fast.clone(),
        slow,
        diffusion: 1.0,
    });
    let control = Arc::new(ControlScheme::uncontrolled(
        fast,
        1.0,
        Homogenization::Periodic {
            period: 1.0,
            coeffs,
        },
    ));
    let params = SimParams {
        epsilon: EPS,
        delta: 0.1,
        t0: 0.0,
        horizon: HORIZON,
        x0: 0.0,
        dt_rule: DtRule::Fixed(dt),
        mode: SimMode::FiniteHorizon {
            terminal_cost: TerminalCost::Zero,
        },
        max_steps: 1,
    };
    let sim = PathSimulator::new(model, params, control).unwrap();
    let mut acc = MomentAccumulator::default();
    for i in 0..n_paths {
        let o = sim.run(&mut stream(17, Domain::Auxiliary(1), i));
        acc.push_value(o.terminal_x * o.terminal_x);
    }
    let se = (acc.m2 / (acc.n - 1) as f64 / acc.n as f64).sqrt();
    (acc.mean, se)
}

#[test]
fn second_moment_matches_the_discrete_chain() {
    for dt in [0.2, 0.1, 0.05] {
        let (mean, se) = simulate_second_moment(dt, 40_000);
        let exact = discrete_second_moment(dt);
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "dt = {dt}: {mean} vs {exact} (se {se})"
        );
    }
}

#[test]
fn weak_error_shrinks_with_the_step() {
    let target = continuous_second_moment();
    let errors: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| (discrete_second_moment(dt) - target).abs())
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < 0.6 * w[0], "{errors:?}");
    }
    assert!(errors[3] < 1e-3, "{errors:?}");
}
