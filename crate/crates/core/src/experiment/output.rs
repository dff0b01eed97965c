use std::cmp::Ordering;
use std::path::Path;

use super::ExperimentResult;
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;

const UNDEFINED: &str = "undefined";

pub const CSV_HEADER: [&str; 15] = [
    "experiment_id",
    "epsilon",
    "delta",
    "eps_over_delta",
    "estimator",
    "n",
    "mean",
    "second_moment",
    "re_sample",
    "re_mean",
    "neg_eps_log_mean",
    "neg_eps_log_m2",
    "censored",
    "wall_seconds",
    "seed",
];

/// One estimator of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment_id: String,
    pub epsilon: f64,
    pub delta: f64,
    pub eps_over_delta: f64,
    pub estimator: EstimatorKind,
    pub n: u64,
    pub mean: f64,
    pub second_moment: f64,
    pub re_sample: Option<f64>,
    pub re_mean: Option<f64>,
    pub neg_eps_log_mean: Option<f64>,
    pub neg_eps_log_m2: Option<f64>,
    pub censored: u64,
    pub wall_seconds: f64,
    pub seed: u64,
}

fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEFINED.to_string(), fmt_num)
}

impl CsvRow {
    fn to_fields(&self) -> [String; 15] {
        [
            self.experiment_id.clone(),
            fmt_num(self.epsilon),
            fmt_num(self.delta),
            fmt_num(self.eps_over_delta),
            self.estimator.name().to_string(),
            self.n.to_string(),
            fmt_num(self.mean),
            fmt_num(self.second_moment),
            fmt_opt(self.re_sample),
            fmt_opt(self.re_mean),
            fmt_opt(self.neg_eps_log_mean),
            fmt_opt(self.neg_eps_log_m2),
            self.censored.to_string(),
            format!("{:.3}", self.wall_seconds),
            self.seed.to_string(),
        ]
    }

    fn from_record(rec: &csv::StringRecord, line: usize) -> Result<Self> {
        let bad = |col: &str, v: &str| Error::Config {
            line,
            message: format!("bad {col} value {v:?}"),
        };
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Config {
                line,
                message: format!("expected {} columns, got {}", CSV_HEADER.len(), rec.len()),
            });
        }
        let f =
            |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(CSV_HEADER[i], &rec[i])) };
        let u =
            |i: usize| -> Result<u64> { rec[i].parse().map_err(|_| bad(CSV_HEADER[i], &rec[i])) };
        let o = |i: usize| -> Result<Option<f64>> {
            if &rec[i] == UNDEFINED {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        Ok(CsvRow {
            experiment_id: rec[0].to_string(),
            epsilon: f(1)?,
            delta: f(2)?,
            eps_over_delta: f(3)?,
            estimator: rec[4].parse().map_err(|_| bad("estimator", &rec[4]))?,
            n: u(5)?,
            mean: f(6)?,
            second_moment: f(7)?,
            re_sample: o(8)?,
            re_mean: o(9)?,
            neg_eps_log_mean: o(10)?,
            neg_eps_log_m2: o(11)?,
            censored: u(12)?,
            wall_seconds: f(13)?,
            seed: u(14)?,
        })
    }
}

impl ExperimentResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        let s = &self.spec;
        self.estimates
            .iter()
            .map(|e| CsvRow {
                experiment_id: s.experiment_id.clone(),
                epsilon: s.epsilon,
                delta: s.delta,
                eps_over_delta: s.epsilon / s.delta,
                estimator: e.kind,
                n: e.summary.n,
                mean: e.summary.mean,
                second_moment: e.summary.second_moment,
                re_sample: e.summary.re_per_sample,
                re_mean: e.summary.re_of_mean,
                neg_eps_log_mean: e.summary.neg_eps_log_mean,
                neg_eps_log_m2: e.summary.neg_eps_log_m2,
                censored: e.summary.censored,
                wall_seconds: e.wall_seconds,
                seed: s.master_seed,
            })
            .collect()
    }

    /// Human-readable summary with the cross-check table.
    pub fn summary_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "{}: eps = {}, delta = {}, eps/delta = {:.4}, dt = {:.4e}, n = {}, kappa = {:.6}\n",
            s.experiment_id,
            s.epsilon,
            s.delta,
            s.epsilon / s.delta,
            self.step.dt,
            s.n_paths,
            self.homogenization.kappa()
        );
        for e in &self.estimates {
            if e.summary.censored > 0 || e.summary.invalid > 0 {
                out.push_str(&format!(
                    "{}: {} censored, {} invalid paths{}\n",
                    e.kind,
                    e.summary.censored,
                    e.summary.invalid,
                    if e.summary.is_reliable() {
                        ""
                    } else {
                        " (unreliable)"
                    }
                ));
            }
        }
        out.push_str(&self.cross_check.to_string());
        out
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if !e.is_io_error() {
        return Error::Csv(e);
    }
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        _ => unreachable!("checked above"),
    }
}

/// Writes rows with a header, replacing any existing file.
pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_csv_to(file, rows).map_err(|e| match e {
        Error::Csv(e) => csv_err(path, e),
        other => other,
    })
}

pub fn write_csv_to<W: std::io::Write>(writer: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.to_fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config {
            line: 1,
            message: format!("{} does not have the expected header", path.display()),
        });
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| CsvRow::from_record(&rec.map_err(|e| csv_err(path, e))?, i + 2))
        .collect()
}

/// One point of the tidy plotting table.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRecord {
    /// Experiment family, the part of `experiment_id` before the first `/`.
    pub group: String,
    pub experiment_id: String,
    pub epsilon: f64,
    pub estimator: EstimatorKind,
    pub re_mean: Option<f64>,
    pub mean: f64,
}

/// Long-format table sorted by group, then estimator, then decreasing ε.
pub fn emit_plot_data(rows: &[CsvRow]) -> Result<Vec<PlotRecord>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no experiment rows to convert".into()));
    }
    let mut out: Vec<PlotRecord> = rows
        .iter()
        .map(|r| PlotRecord {
            group: r
                .experiment_id
                .split('/')
                .next()
                .unwrap_or_default()
                .to_string(),
            experiment_id: r.experiment_id.clone(),
            epsilon: r.epsilon,
            estimator: r.estimator,
            re_mean: r.re_mean,
            mean: r.mean,
        })
        .collect();
    out.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then(a.estimator.index().cmp(&b.estimator.index()))
            .then(b.epsilon.partial_cmp(&a.epsilon).unwrap_or(Ordering::Equal))
            .then(a.experiment_id.cmp(&b.experiment_id))
    });
    Ok(out)
}

pub fn write_plot_data(path: &Path, records: &[PlotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record([
        "group",
        "experiment_id",
        "epsilon",
        "estimator",
        "re_mean",
        "mean",
    ])
    .map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record([
            r.group.clone(),
            r.experiment_id.clone(),
            fmt_num(r.epsilon),
            r.estimator.name().to_string(),
            fmt_opt(r.re_mean),
            fmt_num(r.mean),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}
