//! Scalar potentials with analytic derivatives.
//!
//! Both the fast (oscillating) part `Q(y)` and the slow part `V(x)` of the
//! Langevin potential `εQ(x/δ) + V(x)` implement [`Potential`].

use std::fmt;
use std::sync::Arc;

pub trait Potential: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, x: f64) -> f64;

    /// Value and derivative in one call; overridden where the two share work.
    fn value_and_derivative(&self, x: f64) -> (f64, f64) {
        (self.value(x), self.derivative(x))
    }
}

/// Shared handle used by models and control schemes.
pub type SharedPotential = Arc<dyn Potential>;

/// `V(x) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Potential for Constant {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }

    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }
}

/// `V(x) = slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub slope: f64,
}

impl Potential for Linear {
    fn value(&self, x: f64) -> f64 {
        self.slope * x
    }

    fn derivative(&self, _x: f64) -> f64 {
        self.slope
    }
}

/// `V(x) = stiffness * x² / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub stiffness: f64,
}

impl Potential for Quadratic {
    fn value(&self, x: f64) -> f64 {
        0.5 * self.stiffness * x * x
    }

    fn derivative(&self, x: f64) -> f64 {
        self.stiffness * x
    }
}

/// `Q(y) = amplitude * (cos y + sin y)`, period 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosSin {
    pub amplitude: f64,
}

impl Default for CosSin {
    fn default() -> Self {
        Self { amplitude: 1.0 }
    }
}

impl Potential for CosSin {
    fn value(&self, y: f64) -> f64 {
        let (s, c) = y.sin_cos();
        self.amplitude * (c + s)
    }

    fn derivative(&self, y: f64) -> f64 {
        let (s, c) = y.sin_cos();
        self.amplitude * (c - s)
    }

    fn value_and_derivative(&self, y: f64) -> (f64, f64) {
        let (s, c) = y.sin_cos();
        (self.amplitude * (c + s), self.amplitude * (c - s))
    }
}

/// Potential built from a pair of closures.
pub struct FnPotential<F, G> {
    value: F,
    derivative: G,
}

impl<F, G> FnPotential<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(value: F, derivative: G) -> Self {
        Self { value, derivative }
    }
}

impl<F, G> fmt::Debug for FnPotential<F, G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnPotential")
    }
}

impl<F, G> Potential for FnPotential<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_difference(p: &dyn Potential, x: f64, h: f64) -> f64 {
        (p.value(x + h) - p.value(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let potentials: Vec<SharedPotential> = vec![
            Arc::new(Constant(3.0)),
            Arc::new(Linear { slope: -2.0 }),
            Arc::new(Quadratic { stiffness: 0.7 }),
            Arc::new(CosSin::default()),
            Arc::new(FnPotential::new(|x: f64| x.powi(3), |x: f64| 3.0 * x * x)),
        ];
        for p in &potentials {
            for &x in &[-2.3, -0.1, 0.0, 0.4, 5.0] {
                let fd = central_difference(p.as_ref(), x, 1e-5);
                assert!((fd - p.derivative(x)).abs() < 1e-7, "{p:?} at {x}");
                let (v, d) = p.value_and_derivative(x);
                assert_eq!(v, p.value(x));
                assert_eq!(d, p.derivative(x));
            }
        }
    }

    #[test]
    fn cos_sin_is_two_pi_periodic() {
        let q = CosSin::default();
        for k in 0..50 {
            let y = -7.0 + 0.31 * k as f64;
            assert!((q.value(y) - q.value(y + std::f64::consts::TAU)).abs() < 1e-12);
        }
    }
}
