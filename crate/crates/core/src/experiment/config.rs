//! Flat `key = value` experiment files. `#` starts a comment; `family`
//! selects a template whose defaults the remaining keys override.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use super::{
    ExperimentSpec, Family, FastPotential, Problem, SlowPotential, SubsolutionChoice, Workers,
};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::simulator::DtRule;
use crate::subsolution::TerminalCost;

/// Writes every key needed to rebuild `spec`, in a fixed order.
pub fn serialize_config(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("family", spec.family.name().into());
    put("experiment_id", spec.experiment_id.clone());
    put("epsilon", fmt_f64(spec.epsilon));
    put("delta", fmt_f64(spec.delta));
    put("n_paths", spec.n_paths.to_string());
    put(
        "estimators",
        spec.estimators
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(","),
    );
    match spec.dt_rule {
        DtRule::Scaled { tol } => put("dt_tol", fmt_f64(tol)),
        DtRule::Fixed(dt) => put("dt", fmt_f64(dt)),
    }
    put("seed", spec.master_seed.to_string());
    put("workers", spec.workers.to_string());
    if let Some(path) = &spec.output {
        put("output", path.display().to_string());
    }
    match spec.fast {
        FastPotential::Zero => put("fast", "zero".into()),
        FastPotential::CosSin { amplitude } => {
            put("fast", "cos_sin".into());
            put("fast_amplitude", fmt_f64(amplitude));
        }
        FastPotential::GaussianField {
            variance,
            corr_length_sq,
            n_modes,
        } => {
            put("fast", "gaussian_field".into());
            put("field_variance", fmt_f64(variance));
            put("field_corr_length_sq", fmt_f64(corr_length_sq));
            put("field_modes", n_modes.to_string());
        }
    }
    match spec.slow {
        SlowPotential::Zero => put("slow", "zero".into()),
        SlowPotential::Linear { slope } => {
            put("slow", "linear".into());
            put("slow_coefficient", fmt_f64(slope));
        }
        SlowPotential::Quadratic { stiffness } => {
            put("slow", "quadratic".into());
            put("slow_coefficient", fmt_f64(stiffness));
        }
    }
    put("diffusion", fmt_f64(spec.diffusion));
    match spec.problem {
        Problem::FiniteHorizon {
            t0,
            horizon,
            x0,
            terminal_cost,
        } => {
            put("mode", "finite_horizon".into());
            put("t0", fmt_f64(t0));
            put("horizon", fmt_f64(horizon));
            put("x0", fmt_f64(x0));
            put(
                "terminal_cost",
                match terminal_cost {
                    TerminalCost::TwoWell => "two_well",
                    TerminalCost::Zero => "zero",
                }
                .into(),
            );
        }
        Problem::Exit {
            x0,
            x_minus,
            x_plus,
        } => {
            put("mode", "exit".into());
            put("x0", fmt_f64(x0));
            put("x_minus", fmt_f64(x_minus));
            put("x_plus", fmt_f64(x_plus));
        }
    }
    put("subsolution", spec.subsolution.name().into());
    put("n_quad", spec.n_quad.to_string());
    put("step_ceiling", fmt_f64(spec.step_ceiling));
    put("max_steps_per_path", spec.max_steps_per_path.to_string());
    put("budget_horizon", fmt_f64(spec.budget_horizon));
    out
}

/// Shortest representation that parses back to the same bits.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

struct Entry {
    line: usize,
    value: String,
}

/// Parses a config file. Unknown or repeated keys are errors.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let mut entries: Vec<(String, Entry)> = Vec::new();
    let mut seen = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Config {
                line,
                message: format!("expected `key = value`, got {content:?}"),
            });
        };
        let key = key.trim().to_string();
        if let Some(first) = seen.insert(key.clone(), line) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key {key:?} (first set on line {first})"),
            });
        }
        entries.push((
            key,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        ));
    }

    let family = match entries.iter().find(|(k, _)| k == "family") {
        Some((_, e)) => Family::parse(&e.value).ok_or_else(|| Error::Config {
            line: e.line,
            message: format!("unknown family {:?}", e.value),
        })?,
        None => Family::Custom,
    };
    let mut spec = ExperimentSpec::template(family);
    let lookup: HashMap<&str, &Entry> = entries.iter().map(|(k, e)| (k.as_str(), e)).collect();

    // Variant selectors first, so their parameters land on the right variant.
    if let Some(e) = lookup.get("fast") {
        spec.fast = match e.value.as_str() {
            "zero" => FastPotential::Zero,
            "cos_sin" => FastPotential::CosSin { amplitude: 1.0 },
            "gaussian_field" => FastPotential::GaussianField {
                variance: 1.0,
                corr_length_sq: 1.0,
                n_modes: crate::random_env::DEFAULT_MODES,
            },
            other => return Err(config_err(e, format!("unknown fast potential {other:?}"))),
        };
    }
    if let Some(e) = lookup.get("slow") {
        spec.slow = match e.value.as_str() {
            "zero" => SlowPotential::Zero,
            "linear" => SlowPotential::Linear { slope: 1.0 },
            "quadratic" => SlowPotential::Quadratic { stiffness: 1.0 },
            other => return Err(config_err(e, format!("unknown slow potential {other:?}"))),
        };
    }
    if let Some(e) = lookup.get("mode") {
        let x0 = spec.problem.x0();
        spec.problem = match (e.value.as_str(), spec.problem) {
            ("finite_horizon", p @ Problem::FiniteHorizon { .. }) => p,
            ("finite_horizon", _) => Problem::FiniteHorizon {
                t0: 0.0,
                horizon: 1.0,
                x0,
                terminal_cost: TerminalCost::TwoWell,
            },
            ("exit", p @ Problem::Exit { .. }) => p,
            ("exit", _) => Problem::Exit {
                x0,
                x_minus: -1.0,
                x_plus: 1.0,
            },
            (other, _) => return Err(config_err(e, format!("unknown mode {other:?}"))),
        };
    }

    for (key, e) in &entries {
        let v = e.value.as_str();
        match key.as_str() {
            "family" | "fast" | "slow" | "mode" => {}
            "experiment_id" => spec.experiment_id = v.to_string(),
            "epsilon" => spec.epsilon = num(e)?,
            "delta" => spec.delta = num(e)?,
            "n_paths" => spec.n_paths = int(e)?,
            "estimators" => {
                spec.estimators = v
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<EstimatorKind>()
                            .map_err(|err| config_err(e, err.to_string()))
                    })
                    .collect::<Result<_>>()?;
            }
            "dt_tol" => spec.dt_rule = DtRule::Scaled { tol: num(e)? },
            "dt" => spec.dt_rule = DtRule::Fixed(num(e)?),
            "seed" => spec.master_seed = int(e)?,
            "workers" => {
                spec.workers = Workers::parse(v).ok_or_else(|| {
                    config_err(
                        e,
                        format!("workers must be `auto` or a positive integer, got {v:?}"),
                    )
                })?
            }
            "output" => spec.output = Some(PathBuf::from(v)),
            "fast_amplitude" => match &mut spec.fast {
                FastPotential::CosSin { amplitude } => *amplitude = num(e)?,
                _ => return Err(config_err(e, "fast_amplitude needs fast = cos_sin".into())),
            },
            "field_variance" | "field_corr_length_sq" | "field_modes" => match &mut spec.fast {
                FastPotential::GaussianField {
                    variance,
                    corr_length_sq,
                    n_modes,
                } => match key.as_str() {
                    "field_variance" => *variance = num(e)?,
                    "field_corr_length_sq" => *corr_length_sq = num(e)?,
                    _ => *n_modes = int(e)?,
                },
                _ => return Err(config_err(e, format!("{key} needs fast = gaussian_field"))),
            },
            "slow_coefficient" => match &mut spec.slow {
                SlowPotential::Linear { slope: c } | SlowPotential::Quadratic { stiffness: c } => {
                    *c = num(e)?
                }
                SlowPotential::Zero => {
                    return Err(config_err(
                        e,
                        "slow_coefficient needs a linear or quadratic slow potential".into(),
                    ))
                }
            },
            "diffusion" => spec.diffusion = num(e)?,
            "x0" => match &mut spec.problem {
                Problem::FiniteHorizon { x0, .. } | Problem::Exit { x0, .. } => *x0 = num(e)?,
            },
            "t0" | "horizon" | "terminal_cost" => match &mut spec.problem {
                Problem::FiniteHorizon {
                    t0,
                    horizon,
                    terminal_cost,
                    ..
                } => match key.as_str() {
                    "t0" => *t0 = num(e)?,
                    "horizon" => *horizon = num(e)?,
                    _ => {
                        *terminal_cost = match v {
                            "two_well" => TerminalCost::TwoWell,
                            "zero" => TerminalCost::Zero,
                            other => {
                                return Err(config_err(
                                    e,
                                    format!("unknown terminal cost {other:?}"),
                                ))
                            }
                        }
                    }
                },
                _ => return Err(config_err(e, format!("{key} needs mode = finite_horizon"))),
            },
            "x_minus" | "x_plus" => match &mut spec.problem {
                Problem::Exit {
                    x_minus, x_plus, ..
                } => {
                    if key == "x_minus" {
                        *x_minus = num(e)?
                    } else {
                        *x_plus = num(e)?
                    }
                }
                _ => return Err(config_err(e, format!("{key} needs mode = exit"))),
            },
            "subsolution" => {
                spec.subsolution = match v {
                    "zero" => SubsolutionChoice::Zero,
                    "terminal_quadratic" => SubsolutionChoice::TerminalQuadratic,
                    "exit_linear_drift" => SubsolutionChoice::ExitLinearDrift,
                    "exit_rest_point" => SubsolutionChoice::ExitRestPoint,
                    other => return Err(config_err(e, format!("unknown subsolution {other:?}"))),
                }
            }
            "n_quad" => spec.n_quad = int(e)?,
            "step_ceiling" => spec.step_ceiling = num(e)?,
            "max_steps_per_path" => spec.max_steps_per_path = int(e)?,
            "budget_horizon" => spec.budget_horizon = num(e)?,
            other => return Err(config_err(e, format!("unknown key {other:?}"))),
        }
    }
    Ok(spec)
}

fn config_err(e: &Entry, message: String) -> Error {
    Error::Config {
        line: e.line,
        message,
    }
}

fn num(e: &Entry) -> Result<f64> {
    e.value
        .parse()
        .map_err(|_| config_err(e, format!("expected a number, got {:?}", e.value)))
}

fn int<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    // Accept scientific notation for counts such as `1e5` when it is exact.
    if let Ok(v) = e.value.parse::<T>() {
        return Ok(v);
    }
    let bad = || {
        config_err(
            e,
            format!("expected a non-negative integer, got {:?}", e.value),
        )
    };
    let x: f64 = e.value.parse().map_err(|_| bad())?;
    if x >= 0.0 && x.fract() == 0.0 && x < 9.0e15 {
        format!("{}", x as u64).parse().map_err(|_| bad())
    } else {
        Err(bad())
    }
}
