//! Analytic one-dimensional external potentials.
//!
//! Every potential provides closed-form values of `U`, `U'`, `U''` and `U'''`.
//! The soft-body equations of motion need the third derivative (the internal
//! mode pushes the centre of mass through `U'''`), and the integrators must not
//! pick up differencing noise, so nothing here is evaluated numerically.
//!
//! The Gaussian barrier is `A * exp(-(X - X0)^2 / (2 sigma^2))`, a bump of
//! height `A`. The soft rectangle is
//! `(A/2) * (tanh((X + d)/L) - tanh((X - d)/L))`, a plateau of width `D = 2d`
//! with edges of softness `L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of an external potential, as written in run configurations.
///
/// This is plain data. Use [`Potential::new`] to validate it before evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    Gaussian {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "X0", default)]
        x0: f64,
        sigma: f64,
    },
    SoftRect {
        #[serde(rename = "A")]
        a: f64,
        d: f64,
        #[serde(rename = "L")]
        l: f64,
    },
    Quadratic {
        k: f64,
    },
    Linear {
        g: f64,
    },
}

/// `U` and its first three derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivatives {
    pub u: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

/// A validated potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Potential(PotentialSpec);

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        fn finite(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite, got {v}")))
            }
        }
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        }
        match spec {
            PotentialSpec::Free => {}
            PotentialSpec::Gaussian { a, x0, sigma } => {
                finite("A", a)?;
                finite("X0", x0)?;
                positive("sigma", sigma)?;
            }
            PotentialSpec::SoftRect { a, d, l } => {
                finite("A", a)?;
                positive("d", d)?;
                positive("L", l)?;
            }
            PotentialSpec::Quadratic { k } => finite("k", k)?,
            PotentialSpec::Linear { g } => finite("g", g)?,
        }
        Ok(Potential(spec))
    }

    pub fn free() -> Self {
        Potential(PotentialSpec::Free)
    }

    pub fn gaussian(a: f64, x0: f64, sigma: f64) -> Result<Self> {
        Self::new(PotentialSpec::Gaussian { a, x0, sigma })
    }

    /// Soft rectangle of full width `D = 2d`.
    pub fn soft_rect(a: f64, d: f64, l: f64) -> Result<Self> {
        Self::new(PotentialSpec::SoftRect { a, d, l })
    }

    pub fn quadratic(k: f64) -> Result<Self> {
        Self::new(PotentialSpec::Quadratic { k })
    }

    pub fn linear(g: f64) -> Result<Self> {
        Self::new(PotentialSpec::Linear { g })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.0
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).u
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Derivatives {
        match self.0 {
            PotentialSpec::Free => Derivatives {
                u: 0.0,
                u1: 0.0,
                u2: 0.0,
                u3: 0.0,
            },
            PotentialSpec::Gaussian { a, x0, sigma } => {
                let s = (x - x0) / sigma;
                let g = a * (-0.5 * s * s).exp();
                Derivatives {
                    u: g,
                    u1: -s * g / sigma,
                    u2: (s * s - 1.0) * g / (sigma * sigma),
                    u3: s * (3.0 - s * s) * g / (sigma * sigma * sigma),
                }
            }
            PotentialSpec::SoftRect { a, d, l } => {
                let left = tanh_derivatives((x + d) / l);
                let right = tanh_derivatives((x - d) / l);
                let h = 0.5 * a;
                Derivatives {
                    u: h * (left[0] - right[0]),
                    u1: h * (left[1] - right[1]) / l,
                    u2: h * (left[2] - right[2]) / (l * l),
                    u3: h * (left[3] - right[3]) / (l * l * l),
                }
            }
            PotentialSpec::Quadratic { k } => Derivatives {
                u: 0.5 * k * x * x,
                u1: k * x,
                u2: k,
                u3: 0.0,
            },
            PotentialSpec::Linear { g } => Derivatives {
                u: g * x,
                u1: g,
                u2: 0.0,
                u3: 0.0,
            },
        }
    }

    /// Upper bound on `|U''|` over the real line, used by step-size checks.
    pub fn curvature_bound(&self) -> f64 {
        match self.0 {
            PotentialSpec::Free | PotentialSpec::Linear { .. } => 0.0,
            PotentialSpec::Gaussian { a, sigma, .. } => a.abs() / (sigma * sigma),
            // max |tanh''| = 4 / (3 sqrt 3); the two edges may overlap.
            PotentialSpec::SoftRect { a, l, .. } => {
                a.abs() * 4.0 / (3.0 * 3f64.sqrt()) / (l * l)
            }
            PotentialSpec::Quadratic { k } => k.abs(),
        }
    }

    /// Centre of a barrier-like potential.
    pub fn center(&self) -> f64 {
        match self.0 {
            PotentialSpec::Gaussian { x0, .. } => x0,
            _ => 0.0,
        }
    }

    /// Barrier height `A`, if the potential is a barrier.
    pub fn height(&self) -> Option<f64> {
        match self.0 {
            PotentialSpec::Gaussian { a, .. } | PotentialSpec::SoftRect { a, .. } => Some(a),
            _ => None,
        }
    }

    /// Half-width of the barrier core: `sigma` for the Gaussian, `d` for the
    /// soft rectangle.
    pub fn half_width(&self) -> Option<f64> {
        match self.0 {
            PotentialSpec::Gaussian { sigma, .. } => Some(sigma),
            PotentialSpec::SoftRect { d, .. } => Some(d),
            _ => None,
        }
    }

    /// Default classification thresholds `(X-, X+)`: five `sigma` (Gaussian)
    /// or five `L` beyond the edges (soft rectangle), where `|U/A| < 1e-5`.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.0 {
            PotentialSpec::Gaussian { x0, sigma, .. } => {
                Some((x0 - 5.0 * sigma, x0 + 5.0 * sigma))
            }
            PotentialSpec::SoftRect { d, l, .. } => Some((-(d + 5.0 * l), d + 5.0 * l)),
            _ => None,
        }
    }

    /// Value far from the origin on the given side (`+1` or `-1`).
    pub fn asymptote(&self, side: f64) -> f64 {
        match self.0 {
            PotentialSpec::Free | PotentialSpec::Gaussian { .. } | PotentialSpec::SoftRect { .. } => {
                0.0
            }
            PotentialSpec::Quadratic { .. } => f64::INFINITY,
            PotentialSpec::Linear { g } => {
                if g * side > 0.0 {
                    f64::INFINITY
                } else if g == 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// `[tanh, tanh', tanh'', tanh''']` at `p`, with `sech^2` computed directly so
/// the tails keep relative precision.
#[inline]
fn tanh_derivatives(p: f64) -> [f64; 4] {
    let t = p.tanh();
    let sech = 1.0 / p.cosh();
    let s2 = sech * sech;
    [t, s2, -2.0 * t * s2, s2 * (6.0 * t * t - 2.0)]
}
