//! Stationary Gaussian random-field potentials and their homogenized
//! constants.
//!
//! Fields are generated by the randomization (spectral) method:
//!
//! ```text
//! Q(y) = √(v/M) Σ_j [ξ_j cos(ω_j y) + η_j sin(ω_j y)]
//! ```
//!
//! with `ξ_j, η_j ~ N(0, 1)` and `ω_j` drawn from the normalized spectral
//! density of the covariance `v exp(-r²/ℓ²)`, i.e. `ω_j ~ N(0, 2/ℓ²)`.
//! Each realization is smooth with an analytic derivative.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::rng::{self, Domain};

/// Default number of spectral modes.
pub const DEFAULT_MODES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFieldSpec {
    /// Covariance at lag zero.
    pub variance: f64,
    /// `ℓ²` in the covariance `variance · exp(-r²/ℓ²)`.
    pub corr_length_sq: f64,
    pub n_modes: usize,
    pub seed: u64,
}

impl Default for GaussianFieldSpec {
    fn default() -> Self {
        Self {
            variance: 1.0,
            corr_length_sq: 1.0,
            n_modes: DEFAULT_MODES,
            seed: 0,
        }
    }
}

impl GaussianFieldSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "field variance must be positive, got {}",
                self.variance
            )));
        }
        if !(self.corr_length_sq > 0.0 && self.corr_length_sq.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "squared correlation length must be positive, got {}",
                self.corr_length_sq
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidInput(
                "a field needs at least one mode".into(),
            ));
        }
        Ok(())
    }

    /// The target covariance `C(r)`.
    pub fn covariance(&self, lag: f64) -> f64 {
        self.variance * (-lag * lag / self.corr_length_sq).exp()
    }
}

/// One frozen realization of the random potential.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub frequencies: Vec<f64>,
    pub cos_amps: Vec<f64>,
    pub sin_amps: Vec<f64>,
    pub scale: f64,
}

/// Draws a realization from `rng`.
pub fn sample_field<R: Rng + ?Sized>(
    spec: &GaussianFieldSpec,
    rng: &mut R,
) -> Result<FieldRealization> {
    spec.validate()?;
    let m = spec.n_modes;
    let freq_sd = (2.0 / spec.corr_length_sq).sqrt();
    let mut frequencies = Vec::with_capacity(m);
    let mut cos_amps = Vec::with_capacity(m);
    let mut sin_amps = Vec::with_capacity(m);
    for _ in 0..m {
        let w: f64 = rng.sample(StandardNormal);
        frequencies.push(freq_sd * w);
        cos_amps.push(rng.sample(StandardNormal));
        sin_amps.push(rng.sample(StandardNormal));
    }
    Ok(FieldRealization {
        frequencies,
        cos_amps,
        sin_amps,
        scale: (spec.variance / m as f64).sqrt(),
    })
}

impl FieldRealization {
    /// Realization drawn from the field stream of `spec.seed`.
    pub fn from_seed(spec: &GaussianFieldSpec) -> Result<Self> {
        sample_field(spec, &mut rng::stream(spec.seed, Domain::Field, 0))
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// `(Q, Q', Q'')` at `y`.
    pub fn derivatives(&self, y: f64) -> (f64, f64, f64) {
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for ((&w, &a), &b) in self
            .frequencies
            .iter()
            .zip(&self.cos_amps)
            .zip(&self.sin_amps)
        {
            let (s, c) = (w * y).sin_cos();
            let even = a * c + b * s;
            v += even;
            d1 += w * (b * c - a * s);
            d2 -= w * w * even;
        }
        (self.scale * v, self.scale * d1, self.scale * d2)
    }

    /// Flat text record: a header line with the mode count (followed by the
    /// amplitude scale when it differs from `1/√M`), then one
    /// `ω ξ η` triple per line.
    pub fn to_record(&self) -> String {
        let m = self.n_modes();
        let mut out = String::new();
        if self.scale == (1.0 / m as f64).sqrt() {
            let _ = writeln!(out, "{m}");
        } else {
            let _ = writeln!(out, "{m} {:e}", self.scale);
        }
        for j in 0..m {
            let _ = writeln!(
                out,
                "{:e} {:e} {:e}",
                self.frequencies[j], self.cos_amps[j], self.sin_amps[j]
            );
        }
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Config { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| bad(1, "empty field record".into()))?;
        let mut head = header.split_whitespace();
        let m: usize = head
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|&m| m > 0)
            .ok_or_else(|| {
                bad(
                    hline,
                    format!("expected a positive mode count, got {header:?}"),
                )
            })?;
        let scale = match head.next() {
            Some(tok) => tok
                .parse()
                .map_err(|_| bad(hline, format!("bad scale {tok:?}")))?,
            None => (1.0 / m as f64).sqrt(),
        };
        let mut field = FieldRealization {
            frequencies: Vec::with_capacity(m),
            cos_amps: Vec::with_capacity(m),
            sin_amps: Vec::with_capacity(m),
            scale,
        };
        for (line, l) in lines {
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(line, format!("{e} in {l:?}")))?;
            if vals.len() != 3 {
                return Err(bad(line, format!("expected 3 numbers, got {}", vals.len())));
            }
            field.frequencies.push(vals[0]);
            field.cos_amps.push(vals[1]);
            field.sin_amps.push(vals[2]);
        }
        if field.n_modes() != m {
            return Err(bad(
                hline,
                format!("header announces {m} modes, found {}", field.n_modes()),
            ));
        }
        Ok(field)
    }
}

impl Potential for FieldRealization {
    fn value(&self, y: f64) -> f64 {
        self.value_and_derivative(y).0
    }

    fn derivative(&self, y: f64) -> f64 {
        self.value_and_derivative(y).1
    }

    fn value_and_derivative(&self, y: f64) -> (f64, f64) {
        let (mut v, mut d) = (0.0, 0.0);
        for ((&w, &a), &b) in self
            .frequencies
            .iter()
            .zip(&self.cos_amps)
            .zip(&self.sin_amps)
        {
            let (s, c) = (w * y).sin_cos();
            v += a * c + b * s;
            d += w * (b * c - a * s);
        }
        (self.scale * v, self.scale * d)
    }
}

/// Homogenized constants of the random environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomHomogenized {
    /// `K = E e^{-Q/D}`.
    pub k: f64,
    /// `K̂ = E e^{Q/D}`.
    pub k_hat: f64,
    /// `κ = 1/(K K̂)`.
    pub kappa: f64,
    /// `q = 2D/(K K̂)`.
    pub q: f64,
}

/// Closed-form lognormal moments: for a centred Gaussian marginal with
/// variance `v`, `K = K̂ = e^{v/(2D²)}`.
pub fn homogenized_constants(
    spec: &GaussianFieldSpec,
    diffusion: f64,
) -> Result<RandomHomogenized> {
    if !(spec.variance >= 0.0 && spec.variance.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "field variance must be non-negative, got {}",
            spec.variance
        )));
    }
    if !(diffusion > 0.0) {
        return Err(Error::InvalidInput(format!(
            "diffusion constant must be positive, got {diffusion}"
        )));
    }
    let k = (spec.variance / (2.0 * diffusion * diffusion)).exp();
    let kappa = 1.0 / (k * k);
    Ok(RandomHomogenized {
        k,
        k_hat: k,
        kappa,
        q: 2.0 * diffusion * kappa,
    })
}

/// `1 + χ'(y) = e^{Q(y)/D} / K̂`.
pub fn random_corrector_factor(
    field: &dyn Potential,
    consts: &RandomHomogenized,
    diffusion: f64,
    y: f64,
) -> f64 {
    (field.value(y) / diffusion).exp() / consts.k_hat
}

/// Spatial averages of `e^{-Q/D}` and `e^{Q/D}` over `[lo, hi]` for one
/// realization (midpoint rule with `n` cells); a per-realization diagnostic
/// for `K` and `K̂`.
pub fn empirical_constants(
    field: &dyn Potential,
    diffusion: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let (mut minus, mut plus) = (0.0, 0.0);
    for i in 0..n {
        let q = field.value(lo + (i as f64 + 0.5) * h) / diffusion;
        minus += (-q).exp();
        plus += q.exp();
    }
    (minus / n as f64, plus / n as f64)
}

/// Cubic Hermite table of a field realization over `[lo, hi]`, falling back
/// to direct summation outside the table.
///
/// Evaluating `M` modes costs `M` sincos calls, which dominates trajectory
/// simulation. Exit problems only visit a bounded range of `y`, so the field
/// is tabulated once with node values and derivatives.
#[derive(Debug, Clone)]
pub struct TabulatedField {
    exact: Arc<FieldRealization>,
    lo: f64,
    spacing: f64,
    inv_spacing: f64,
    nodes: Vec<[f64; 3]>,
}

impl TabulatedField {
    /// Default nodes per unit length in `y`.
    pub const DEFAULT_DENSITY: f64 = 256.0;

    pub fn new(exact: Arc<FieldRealization>, lo: f64, hi: f64, density: f64) -> Result<Self> {
        if !(hi > lo && density > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bad table range [{lo}, {hi}] at density {density}"
            )));
        }
        let n_cells = ((hi - lo) * density).ceil() as usize;
        let spacing = (hi - lo) / n_cells as f64;
        let nodes = (0..=n_cells)
            .map(|i| {
                let (v, d1, d2) = exact.derivatives(lo + i as f64 * spacing);
                [v, d1, d2]
            })
            .collect();
        Ok(Self {
            exact,
            lo,
            spacing,
            inv_spacing: 1.0 / spacing,
            nodes,
        })
    }

    pub fn exact(&self) -> &Arc<FieldRealization> {
        &self.exact
    }

    #[inline]
    fn locate(&self, y: f64) -> Option<(usize, f64)> {
        let u = (y - self.lo) * self.inv_spacing;
        if u >= 0.0 && u < (self.nodes.len() - 1) as f64 {
            let i = u as usize;
            Some((i, u - i as f64))
        } else {
            None
        }
    }
}

#[inline]
fn hermite(s: f64, h: f64, f0: f64, d0: f64, f1: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * f0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (3.0 * s2 - 2.0 * s3) * f1
        + (s3 - s2) * h * d1
}

impl Potential for TabulatedField {
    fn value(&self, y: f64) -> f64 {
        self.value_and_derivative(y).0
    }

    fn derivative(&self, y: f64) -> f64 {
        match self.locate(y) {
            Some((i, s)) => {
                let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
                hermite(s, self.spacing, a[1], a[2], b[1], b[2])
            }
            None => self.exact.derivative(y),
        }
    }

    fn value_and_derivative(&self, y: f64) -> (f64, f64) {
        match self.locate(y) {
            Some((i, s)) => {
                let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
                (
                    hermite(s, self.spacing, a[0], a[1], b[0], b[1]),
                    hermite(s, self.spacing, a[1], a[2], b[1], b[2]),
                )
            }
            None => self.exact.value_and_derivative(y),
        }
    }
}
