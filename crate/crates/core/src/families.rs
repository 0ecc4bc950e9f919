//! Closed-form data families used as obstacles, boundary data and oracles.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::geometry::Wedge;
use crate::grid::{Field, GridSpec};
use crate::math::{atan2, cos, pow, sqrt, tan};

/// `Re((x₁ + i|x_{n-1}|)^{3/2})`: harmonic off the slit `{x₁ ≤ 0, x_{n-1} = 0}`,
/// zero on it, positive on the rest of the slice.
pub fn u32(x1: f64, y: f64) -> f64 {
    let r = sqrt(x1 * x1 + y * y);
    if r == 0.0 {
        return 0.0;
    }
    pow(r, 1.5) * cos(1.5 * atan2(y.abs(), x1))
}

/// Wedge graph `W_{γ,θ}(x_{n-1})`.
pub fn wedge_graph(w: &Wedge, y: f64) -> f64 {
    if y >= 0.0 {
        -tan(w.gamma() + w.theta()) * y
    } else {
        -tan(w.gamma() - w.theta()) * y
    }
}

/// Named builtin families; serialises as `{"builtin": name, "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", content = "params", rename_all = "snake_case")]
pub enum Family {
    Constant {
        value: f64,
    },
    Affine {
        #[serde(default)]
        offset: f64,
        slopes: Vec<f64>,
    },
    /// `amplitude · (x₁² − x_{n-1}²)`.
    HarmonicQuadratic {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · u_{3/2}(x₁, x_{n-1})`.
    #[serde(rename = "homogeneous_3_2")]
    Homogeneous32 {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `W_{γ,θ}(x_{n-1}) + ε x_{n-1}²`.
    WedgeTrace {
        gamma: f64,
        theta: f64,
        #[serde(default)]
        epsilon: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Constant { .. } => "constant",
            Family::Affine { .. } => "affine",
            Family::HarmonicQuadratic { .. } => "harmonic_quadratic",
            Family::Homogeneous32 { .. } => "homogeneous_3_2",
            Family::WedgeTrace { .. } => "wedge_trace",
        }
    }

    /// Checks parameters for a graph domain of dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let finite = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                bail!(Parameter, "{what} must be finite")
            }
        };
        match self {
            Family::Constant { value } => finite(*value, "value"),
            Family::Affine { offset, slopes } => {
                finite(*offset, "offset")?;
                if slopes.len() != d {
                    bail!(Parameter, "affine family needs {d} slopes, got {}", slopes.len());
                }
                slopes.iter().try_for_each(|s| finite(*s, "slope"))
            }
            Family::HarmonicQuadratic { amplitude } | Family::Homogeneous32 { amplitude } => {
                finite(*amplitude, "amplitude")?;
                if d < 2 {
                    bail!(Parameter, "{} needs n >= 3", self.name());
                }
                Ok(())
            }
            Family::WedgeTrace {
                gamma,
                theta,
                epsilon,
            } => {
                Wedge::new(*gamma, *theta)?;
                if !(*epsilon >= 0.0) || !epsilon.is_finite() {
                    bail!(Parameter, "epsilon must be finite and >= 0, got {epsilon}");
                }
                if (gamma.abs() + theta - crate::math::FRAC_PI_2).abs() < 1e-9 {
                    bail!(Parameter, "vertical wedge faces have no graph");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let y = x[d - 1];
        match self {
            Family::Constant { value } => *value,
            Family::Affine { offset, slopes } => {
                offset + slopes.iter().zip(x).map(|(s, v)| s * v).sum::<f64>()
            }
            Family::HarmonicQuadratic { amplitude } => amplitude * (x[0] * x[0] - y * y),
            Family::Homogeneous32 { amplitude } => amplitude * u32(x[0], y),
            Family::WedgeTrace {
                gamma,
                theta,
                epsilon,
            } => {
                let w = Wedge::new(*gamma, *theta).expect("validated");
                wedge_graph(&w, y) + epsilon * y * y
            }
        }
    }

    pub fn field(&self, grid: GridSpec) -> Result<Field> {
        self.validate(grid.dim())
            .map_err(|e| crate::Error::Parameter(format!("{}: {e}", self.name())))?;
        Ok(Field::from_fn(grid, |x| self.eval(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn u32_closed_form_properties() {
        // zero on the slit, positive on the open half-line of the slice
        for k in 0..50 {
            let t = k as f64 * 0.02;
            assert!(u32(-t, 0.0).abs() < 1e-15);
            if k > 0 {
                assert!(u32(t, 0.0) > 0.0);
                assert!((u32(t, 0.0) - pow(t, 1.5)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn u32_is_harmonic_off_the_slit() {
        let h = 1e-3;
        for &(x, y) in &[(0.3, 0.2), (-0.4, 0.5), (0.1, -0.7), (0.6, 0.05), (-0.2, -0.3)] {
            let lap = (u32(x + h, y) + u32(x - h, y) + u32(x, y + h) + u32(x, y - h) - 4.0 * u32(x, y)) / (h * h);
            assert!(lap.abs() < 1e-4, "({x}, {y}): {lap}");
        }
    }

    #[test]
    fn u32_normal_jump_on_the_slit() {
        // one-sided normal derivatives from both sides sum to −3√r
        let h = 1e-6;
        for r in [0.1, 0.4, 0.9] {
            let up = (u32(-r, h) - u32(-r, 0.0)) / h;
            let down = (u32(-r, -h) - u32(-r, 0.0)) / h;
            assert!((up + down + 3.0 * sqrt(r)).abs() < 1e-4, "{r}");
        }
    }

    #[test]
    fn serde_shape() {
        let f: Family = serde_json::from_str(r#"{"builtin":"homogeneous_3_2","params":{"amplitude":0.05}}"#).unwrap();
        assert_eq!(f, Family::Homogeneous32 { amplitude: 0.05 });
        let f: Family = serde_json::from_str(r#"{"builtin":"constant","params":{"value":-1}}"#).unwrap();
        assert_eq!(f.eval(&[0.2, 0.3]), -1.0);
    }

    #[test]
    fn validation() {
        assert!(Family::HarmonicQuadratic { amplitude: 1.0 }.validate(1).is_err());
        assert!(Family::Affine { offset: 0.0, slopes: alloc::vec![1.0] }.validate(2).is_err());
        assert!(Family::WedgeTrace { gamma: 0.0, theta: 2.0, epsilon: 0.0 }.validate(2).is_err());
        assert!(Family::WedgeTrace { gamma: 0.0, theta: 0.2, epsilon: -1.0 }.validate(2).is_err());
    }

    proptest! {
        #[test]
        fn wedge_trace_is_continuous_and_kinks_downward(g in -0.6f64..0.6, t in 0.0f64..0.6, y in 1e-3f64..0.9) {
            let fam = Family::WedgeTrace { gamma: g, theta: t, epsilon: 0.0 };
            prop_assert_eq!(fam.eval(&[0.0, 0.0]), 0.0);
            // concave: average of mirror points below the apex value
            let avg = 0.5 * (fam.eval(&[0.0, y]) + fam.eval(&[0.0, -y]));
            prop_assert!(avg <= 1e-12);
        }
    }
}
