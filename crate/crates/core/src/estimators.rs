//! Estimator statistics: payoffs, streaming moments, relative errors and
//! cross-estimator comparison.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simulator::{ControlVariant, PathStatus, SimMode, TrajectoryOutcome};

/// Fraction of censored paths above which an estimate is flagged unreliable.
pub const CENSORING_LIMIT: f64 = 1e-3;

/// `e^{-h(X_T)/ε}` for finite-horizon runs, `1{exit through x⁺}` for exit runs.
/// Censored and invalid paths pay zero.
pub fn payoff(mode: &SimMode, epsilon: f64, outcome: &TrajectoryOutcome) -> f64 {
    if outcome.status != PathStatus::Completed {
        return 0.0;
    }
    match mode {
        SimMode::FiniteHorizon { terminal_cost } => {
            (-terminal_cost.eval(outcome.terminal_x) / epsilon).exp()
        }
        SimMode::Exit { .. } => {
            if outcome.exited_at_plus {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Welford accumulator over weighted samples `Γ = payoff · e^{log_weight}`.
/// Partial accumulators merge associatively (Chan et al. update).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    pub n: u64,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
    pub censored: u64,
    pub invalid: u64,
}

impl MomentAccumulator {
    pub fn push_value(&mut self, value: f64) {
        self.n += 1;
        let delta = value - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn push(&mut self, outcome: &TrajectoryOutcome) {
        match outcome.status {
            PathStatus::Censored => self.censored += 1,
            PathStatus::Invalid => self.invalid += 1,
            PathStatus::Completed => {}
        }
        let value = if outcome.status == PathStatus::Completed {
            outcome.weighted_payoff()
        } else {
            0.0
        };
        self.push_value(value);
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            self.censored += other.censored;
            self.invalid += other.invalid;
            return;
        }
        if self.n == 0 {
            let (c, i) = (self.censored, self.invalid);
            *self = *other;
            self.censored += c;
            self.invalid += i;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
        self.censored += other.censored;
        self.invalid += other.invalid;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSummary {
    pub n: u64,
    pub epsilon: f64,
    /// Sample mean `θ̂`.
    pub mean: f64,
    /// Mean of `Γ²`.
    pub second_moment: f64,
    /// Unbiased sample variance `s²`.
    pub variance: f64,
    /// `s/θ̂`; `None` when `θ̂ ≤ 0`.
    pub re_per_sample: Option<f64>,
    /// `s/(θ̂ √n)`; `None` when `θ̂ ≤ 0`.
    pub re_of_mean: Option<f64>,
    /// `-ε log θ̂`; `None` when `θ̂ ≤ 0`.
    pub neg_eps_log_mean: Option<f64>,
    /// `-ε log E[Γ²]`; `None` when the second moment vanishes.
    pub neg_eps_log_m2: Option<f64>,
    pub censored: u64,
    pub invalid: u64,
}

impl EstimatorSummary {
    pub fn from_moments(acc: &MomentAccumulator, epsilon: f64) -> Result<Self> {
        if acc.n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples, got {}",
                acc.n
            )));
        }
        let n = acc.n as f64;
        let mean = acc.mean;
        let variance = acc.m2 / (n - 1.0);
        let second_moment = mean * mean + acc.m2 / n;
        let sd = variance.sqrt();
        let positive = mean > 0.0;
        let re_per_sample = positive.then(|| sd / mean);
        Ok(Self {
            n: acc.n,
            epsilon,
            mean,
            second_moment,
            variance,
            re_per_sample,
            re_of_mean: re_per_sample.map(|r| r / n.sqrt()),
            neg_eps_log_mean: positive.then(|| -epsilon * mean.ln()),
            neg_eps_log_m2: (second_moment > 0.0).then(|| -epsilon * second_moment.ln()),
            censored: acc.censored,
            invalid: acc.invalid,
        })
    }

    /// Standard error of the mean, `s/√n`.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    pub fn is_reliable(&self) -> bool {
        self.invalid == 0 && (self.censored as f64) <= CENSORING_LIMIT * self.n as f64
    }
}

/// Summarizes a batch of outcomes; needs at least two.
pub fn aggregate(outcomes: &[TrajectoryOutcome], epsilon: f64) -> Result<EstimatorSummary> {
    let mut acc = MomentAccumulator::default();
    for o in outcomes {
        acc.push(o);
    }
    EstimatorSummary::from_moments(&acc, epsilon)
}

/// The three compared estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    /// Standard Monte Carlo.
    Theta0,
    /// Importance sampling with the cell-problem-corrected control.
    Theta1,
    /// Importance sampling with the homogenized-only control.
    Theta2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Theta0,
        EstimatorKind::Theta1,
        EstimatorKind::Theta2,
    ];

    pub fn variant(self) -> ControlVariant {
        match self {
            EstimatorKind::Theta0 => ControlVariant::NoControl,
            EstimatorKind::Theta1 => ControlVariant::FullMultiscale,
            EstimatorKind::Theta2 => ControlVariant::HomogenizedOnly,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Theta0 => "theta0",
            EstimatorKind::Theta1 => "theta1",
            EstimatorKind::Theta2 => "theta2",
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theta0" | "0" => Ok(EstimatorKind::Theta0),
            "theta1" | "1" => Ok(EstimatorKind::Theta1),
            "theta2" | "2" => Ok(EstimatorKind::Theta2),
            other => Err(Error::InvalidInput(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheckEntry {
    pub kind: EstimatorKind,
    pub mean: f64,
    pub std_error: f64,
    /// `s_i / (θ̂_ref √n_i)`.
    pub rho: Option<f64>,
    /// `Var₀ / Var_i`, when standard Monte Carlo was run.
    pub variance_reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckReport {
    pub reference: EstimatorKind,
    /// The reference mean was unusable and each estimator was normalized by its own mean.
    pub fell_back: bool,
    pub entries: Vec<CrossCheckEntry>,
    /// `|θ̂_i - θ̂_j| / √(se_i² + se_j²)` for every pair.
    pub z_scores: Vec<(EstimatorKind, EstimatorKind, f64)>,
}

impl CrossCheckReport {
    pub fn entry(&self, kind: EstimatorKind) -> Option<&CrossCheckEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    pub fn max_z(&self) -> f64 {
        self.z_scores.iter().map(|z| z.2).fold(0.0, f64::max)
    }
}

/// Compares estimators of the same quantity, normalizing every relative
/// error by the reference estimate (the multiscale estimator by default).
pub fn cross_check(
    summaries: &[(EstimatorKind, EstimatorSummary)],
    reference: EstimatorKind,
) -> Result<CrossCheckReport> {
    if summaries.is_empty() {
        return Err(Error::InvalidInput("nothing to cross-check".into()));
    }
    let reference_mean = summaries
        .iter()
        .find(|(k, _)| *k == reference)
        .map(|(_, s)| s.mean);
    let fell_back = !matches!(reference_mean, Some(m) if m > 0.0);
    if fell_back {
        log::warn!("reference estimator {reference} has no positive mean; normalizing by each estimator's own mean");
    }
    let baseline_var = summaries
        .iter()
        .find(|(k, _)| *k == EstimatorKind::Theta0)
        .map(|(_, s)| s.variance);
    let entries = summaries
        .iter()
        .map(|(kind, s)| {
            let denom = if fell_back {
                s.mean
            } else {
                reference_mean.unwrap_or(s.mean)
            };
            CrossCheckEntry {
                kind: *kind,
                mean: s.mean,
                std_error: s.std_error(),
                rho: (denom > 0.0).then(|| s.std_error() / denom),
                variance_reduction: baseline_var
                    .filter(|_| s.variance > 0.0)
                    .map(|v0| v0 / s.variance),
            }
        })
        .collect::<Vec<_>>();
    let mut z_scores = Vec::new();
    for (i, (ki, si)) in summaries.iter().enumerate() {
        for (kj, sj) in &summaries[i + 1..] {
            let joint = (si.std_error().powi(2) + sj.std_error().powi(2)).sqrt();
            let diff = (si.mean - sj.mean).abs();
            let z = if joint > 0.0 {
                diff / joint
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            z_scores.push((*ki, *kj, z));
        }
    }
    Ok(CrossCheckReport {
        reference,
        fell_back,
        entries,
        z_scores,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3e}"))
}

impl fmt::Display for CrossCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>12} {:>12} {:>12} {:>12}",
            "estim.", "mean", "std.err", "rho", "Var0/Var"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<8} {:>12.4e} {:>12.3e} {:>12} {:>12}",
                e.kind.name(),
                e.mean,
                e.std_error,
                fmt_opt(e.rho),
                fmt_opt(e.variance_reduction)
            )?;
        }
        let norm = if self.fell_back {
            "own mean".to_string()
        } else {
            self.reference.to_string()
        };
        writeln!(f, "rho normalized by {norm}")?;
        for (a, b, z) in &self.z_scores {
            writeln!(f, "z({a}, {b}) = {z:.2}")?;
        }
        Ok(())
    }
}
