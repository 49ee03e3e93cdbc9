//! Spike nonlinearities: the membrane truncation `φ` and the surrogate
//! derivative `Ψ` used in place of the Heaviside derivative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Truncation applied to the decay pre-activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Sigmoid,
    HardClamp01,
}

impl Truncation {
    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Truncation::Sigmoid => sigmoid(a),
            Truncation::HardClamp01 => a.clamp(0.0, 1.0),
        }
    }

    /// Derivative at `a`. The clamp uses the subgradient 1 strictly inside
    /// (0, 1) and 0 elsewhere, including both boundaries.
    #[inline]
    pub fn derivative(self, a: f64) -> f64 {
        match self {
            Truncation::Sigmoid => {
                let s = sigmoid(a);
                s * (1.0 - s)
            }
            Truncation::HardClamp01 => {
                if a > 0.0 && a < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    /// Box of full width `w`, height `1/w`.
    Rectangular,
    /// Hat with half-width `w`, peak `1/w`.
    Triangular,
    /// Logistic density with scale `w`.
    SigmoidDerivative,
    /// Cauchy-shaped kernel `1 / (w (1 + (πx/w)²))`.
    #[serde(rename = "atan")]
    ATan,
}

/// Surrogate derivative `Ψ(x)` of the spike function, with `x = V − threshold`.
///
/// Every kernel integrates to one, so [`Surrogate::primal`] is a smooth step
/// going from 0 to 1. The primal is what the smoothed network emits instead
/// of a hard spike, which makes `Ψ` the exact derivative of the smoothed
/// forward pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub kind: SurrogateKind,
    pub width: f64,
}

impl Default for Surrogate {
    fn default() -> Self {
        Self {
            kind: SurrogateKind::Triangular,
            width: 1.0,
        }
    }
}

impl Surrogate {
    pub fn new(kind: SurrogateKind, width: f64) -> Self {
        Self { kind, width }
    }

    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        let w = self.width;
        match self.kind {
            SurrogateKind::Rectangular => {
                if x.abs() <= 0.5 * w {
                    1.0 / w
                } else {
                    0.0
                }
            }
            SurrogateKind::Triangular => (w - x.abs()).max(0.0) / (w * w),
            SurrogateKind::SigmoidDerivative => {
                let s = sigmoid(x / w);
                s * (1.0 - s) / w
            }
            SurrogateKind::ATan => {
                let u = PI * x / w;
                1.0 / (w * (1.0 + u * u))
            }
        }
    }

    /// Antiderivative of [`Surrogate::grad`], normalised to 0 at −∞.
    #[inline]
    pub fn primal(&self, x: f64) -> f64 {
        let w = self.width;
        match self.kind {
            SurrogateKind::Rectangular => (x / w + 0.5).clamp(0.0, 1.0),
            SurrogateKind::Triangular => {
                if x <= -w {
                    0.0
                } else if x < 0.0 {
                    let u = x + w;
                    u * u / (2.0 * w * w)
                } else if x < w {
                    let u = w - x;
                    1.0 - u * u / (2.0 * w * w)
                } else {
                    1.0
                }
            }
            SurrogateKind::SigmoidDerivative => sigmoid(x / w),
            SurrogateKind::ATan => 0.5 + (PI * x / w).atan() / PI,
        }
    }

    /// True when the kernel vanishes outside a bounded interval.
    pub fn has_finite_support(&self) -> bool {
        matches!(
            self.kind,
            SurrogateKind::Rectangular | SurrogateKind::Triangular
        )
    }
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}
