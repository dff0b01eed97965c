use super::{ExperimentSpec, Family};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetTable {
    /// Periodic potential, finite horizon.
    Periodic = 1,
    /// Random potential, constant negative drift, exit problem.
    RandomNegDrift = 2,
    /// Random potential, rest point at the origin, exit problem.
    RandomRestPoint = 3,
}

impl PresetTable {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(PresetTable::Periodic),
            2 => Ok(PresetTable::RandomNegDrift),
            3 => Ok(PresetTable::RandomRestPoint),
            _ => Err(Error::InvalidInput(format!(
                "unknown table {n}; expected 1, 2 or 3"
            ))),
        }
    }

    fn family(self) -> Family {
        match self {
            PresetTable::Periodic => Family::PeriodicTerminal,
            PresetTable::RandomNegDrift => Family::RandomExitNegDrift,
            PresetTable::RandomRestPoint => Family::RandomExitRestPoint,
        }
    }

    /// `(ε, δ)` ladder.
    fn ladder(self) -> &'static [(f64, f64)] {
        match self {
            PresetTable::Periodic => &[
                (0.25, 0.1),
                (0.125, 0.04),
                (0.063, 0.016),
                (0.03125, 0.007),
                (0.025, 0.004),
                (0.02, 0.002),
                (0.015, 0.0013),
            ],
            PresetTable::RandomNegDrift => &[
                (0.25, 0.1),
                (0.125, 0.04),
                (0.0625, 0.018),
                (0.05, 0.01),
                (0.04, 0.007),
                (0.025, 0.004),
            ],
            PresetTable::RandomRestPoint => &[
                (0.25, 0.1),
                (0.125, 0.04),
                (0.0625, 0.018),
                (0.03125, 0.008),
                (0.025, 0.006),
                (0.02, 0.0045),
            ],
        }
    }

    pub fn n_rows(self) -> usize {
        self.ladder().len()
    }
}

/// Reference estimates for one preset row, indexed by estimator
/// (`theta0`, `theta1`, `theta2`). Missing entries are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub theta: [Option<f64>; 3],
    pub rho: [Option<f64>; 3],
}

/// Paths per preset run before `scale_n` is applied.
const BASE_PATHS: f64 = 1e7;

/// Spec of row `row` (1-based) of a preset table with `10⁷ · scale_n` paths.
pub fn preset(table: u8, row: usize, scale_n: f64) -> Result<ExperimentSpec> {
    let t = PresetTable::from_number(table)?;
    let &(epsilon, delta) = row
        .checked_sub(1)
        .and_then(|i| t.ladder().get(i))
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "table {table} has rows 1..={}, got {row}",
                t.n_rows()
            ))
        })?;
    if !(scale_n > 0.0 && scale_n.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "scale_n must be positive, got {scale_n}"
        )));
    }
    let n_paths = (BASE_PATHS * scale_n).round();
    if n_paths < 2.0 {
        return Err(Error::InvalidInput(format!(
            "scale_n = {scale_n} leaves fewer than 2 paths"
        )));
    }
    Ok(ExperimentSpec {
        experiment_id: format!("table{table}/row{row}"),
        epsilon,
        delta,
        n_paths: n_paths as u64,
        ..ExperimentSpec::template(t.family())
    })
}

/// Reference estimates for a preset row, where available.
pub fn reference_row(table: u8, row: usize) -> Option<ReferenceRow> {
    const T1: [[f64; 6]; 7] = [
        [2.26e-1, 2.25e-1, 2.26e-1, 3.36e-4, 1.76e-3, 6.34e-4],
        [3.66e-2, 3.65e-2, 3.66e-2, 8.40e-4, 1.80e-3, 1.43e-3],
        [9.34e-4, 9.33e-4, 9.36e-4, 3.29e-3, 1.85e-3, 4.71e-3],
        [6.93e-7, 6.87e-7, 6.99e-7, 4.47e-2, 8.00e-4, 3.32e-2],
        [1.48e-8, 1.61e-8, 1.51e-8, 6.85e-2, 7.55e-4, 3.06e-2],
        [3.08e-10, 1.99e-10, 1.51e-10, 4.09e-1, 3.82e-4, 4.97e-2],
        [7.60e-14, 1.37e-13, 1.07e-13, 2.53e-1, 3.01e-4, 1.86e-1],
    ];
    const T2: [[Option<f64>; 3]; 6] = [
        [Some(1.38e-1), Some(1.38e-1), Some(1.38e-1)],
        [Some(1.28e-2), Some(1.31e-2), Some(1.28e-2)],
        [Some(6.02e-4), Some(6.13e-4), Some(5.89e-4)],
        [Some(2.38e-5), Some(2.30e-5), Some(2.22e-5)],
        [Some(5.5e-6), Some(5.93e-6), Some(4.86e-6)],
        [None, Some(7.82e-10), Some(1.26e-9)],
    ];
    const T3: [f64; 6] = [1.56e-1, 2.35e-2, 2.25e-3, 5.03e-5, 1.38e-5, 2.0e-7];
    let i = row.checked_sub(1)?;
    match table {
        1 => T1.get(i).map(|r| ReferenceRow {
            theta: [Some(r[0]), Some(r[1]), Some(r[2])],
            rho: [Some(r[3]), Some(r[4]), Some(r[5])],
        }),
        2 => T2.get(i).map(|&theta| ReferenceRow {
            theta,
            rho: [None; 3],
        }),
        3 => T3.get(i).map(|&t| ReferenceRow {
            theta: [Some(t), None, None],
            rho: [None; 3],
        }),
        _ => None,
    }
}
