//! Scalar coefficient functions and vector fields on the base spaces.
//!
//! `ScalarField` is a small closed family of pure coefficient functions
//! with analytic derivatives; it parametrises both coefficient-function
//! connections and graph sections, and serializes into model configs.

use crate::bundle::{BasePoint, BaseSpace};
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::groups::so3_hat;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// A pure scalar function of the base coordinates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarField {
    Const { value: f64 },
    /// `amp * sin(freq * x[coord] + phase)`
    Sin {
        coord: usize,
        amp: f64,
        freq: f64,
        phase: f64,
    },
    /// `amp * cos(freq * x[coord] + phase)`
    Cos {
        coord: usize,
        amp: f64,
        freq: f64,
        phase: f64,
    },
    /// `amp * x[coord]^exponent`
    Power {
        coord: usize,
        amp: f64,
        exponent: i32,
    },
    Sum {
        terms: Vec<ScalarField>,
    },
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Const { value }
    }

    pub fn sin_of(coord: usize) -> Self {
        ScalarField::Sin {
            coord,
            amp: 1.0,
            freq: 1.0,
            phase: 0.0,
        }
    }

    pub fn cos_of(coord: usize) -> Self {
        ScalarField::Cos {
            coord,
            amp: 1.0,
            freq: 1.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Const { value } => *value,
            ScalarField::Sin {
                coord,
                amp,
                freq,
                phase,
            } => amp * (freq * x[*coord] + phase).sin(),
            ScalarField::Cos {
                coord,
                amp,
                freq,
                phase,
            } => amp * (freq * x[*coord] + phase).cos(),
            ScalarField::Power {
                coord,
                amp,
                exponent,
            } => amp * x[*coord].powi(*exponent),
            ScalarField::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Analytic partial derivative with respect to coordinate `wrt`.
    pub fn derivative(&self, x: &[f64], wrt: usize) -> f64 {
        match self {
            ScalarField::Const { .. } => 0.0,
            ScalarField::Sin {
                coord,
                amp,
                freq,
                phase,
            } => {
                if *coord == wrt {
                    amp * freq * (freq * x[*coord] + phase).cos()
                } else {
                    0.0
                }
            }
            ScalarField::Cos {
                coord,
                amp,
                freq,
                phase,
            } => {
                if *coord == wrt {
                    -amp * freq * (freq * x[*coord] + phase).sin()
                } else {
                    0.0
                }
            }
            ScalarField::Power {
                coord,
                amp,
                exponent,
            } => {
                if *coord == wrt && *exponent != 0 {
                    amp * f64::from(*exponent) * x[*coord].powi(exponent - 1)
                } else {
                    0.0
                }
            }
            ScalarField::Sum { terms } => terms.iter().map(|t| t.derivative(x, wrt)).sum(),
        }
    }
}

/// A small two-layer map `x -> W2 tanh(W1 x + b1) + b2` with a flat
/// parameter vector, the learnable stand-in for a neural field.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TabulatedNet {
    pub input_dim: usize,
    pub hidden: usize,
    pub output_dim: usize,
    pub params: Vec<f64>,
}

impl TabulatedNet {
    pub fn param_count(input_dim: usize, hidden: usize, output_dim: usize) -> usize {
        hidden * input_dim + hidden + output_dim * hidden + output_dim
    }

    pub fn new(input_dim: usize, hidden: usize, output_dim: usize, params: Vec<f64>) -> Result<Self> {
        let want = Self::param_count(input_dim, hidden, output_dim);
        if params.len() != want {
            return Err(Error::Config(format!(
                "tabulated net expects {want} parameters, got {}",
                params.len()
            )));
        }
        Ok(TabulatedNet {
            input_dim,
            hidden,
            output_dim,
            params,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Coords {
        debug_assert_eq!(x.len(), self.input_dim);
        let (h, d_in, d_out) = (self.hidden, self.input_dim, self.output_dim);
        let w1 = &self.params[..h * d_in];
        let b1 = &self.params[h * d_in..h * d_in + h];
        let w2 = &self.params[h * d_in + h..h * d_in + h + d_out * h];
        let b2 = &self.params[h * d_in + h + d_out * h..];
        let mut hidden = [0.0f64; 16];
        assert!(h <= 16, "hidden width is capped at 16");
        for i in 0..h {
            let mut s = b1[i];
            for (j, xj) in x.iter().enumerate() {
                s += w1[i * d_in + j] * xj;
            }
            hidden[i] = s.tanh();
        }
        let mut out = Coords::zeros(d_out);
        for i in 0..d_out {
            let mut s = b2[i];
            for j in 0..h {
                s += w2[i * h + j] * hidden[j];
            }
            out[i] = s;
        }
        out
    }
}

/// A vector field on a base space.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    /// Constant coefficients in the coordinate frame of the space.
    ConstantCoeff { coeffs: Vec<f64> },
    /// One coefficient function per coordinate direction.
    CoeffField { coeffs: Vec<ScalarField> },
    /// On the sphere: the generator field `p -> hat(a) p` of a rotation
    /// one-parameter subgroup, `a` in the frozen so(3) basis.
    RotationGenerator { generator: [f64; 3] },
    /// Two-layer map of the coordinates, output projected to the tangent
    /// space on curved spaces.
    TabulatedNet { net: TabulatedNet },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VectorFieldSpec {
    pub space: BaseSpace,
    #[serde(flatten)]
    pub kind: FieldKind,
}

impl VectorFieldSpec {
    pub fn constant(space: BaseSpace, coeffs: &[f64]) -> Self {
        VectorFieldSpec {
            space,
            kind: FieldKind::ConstantCoeff {
                coeffs: coeffs.to_vec(),
            },
        }
    }

    pub fn zero(space: BaseSpace) -> Self {
        let dim = space.coord_len();
        VectorFieldSpec::constant(space, &vec![0.0; dim])
    }

    pub fn rotation_generator(a: [f64; 3]) -> Self {
        VectorFieldSpec {
            space: BaseSpace::S2,
            kind: FieldKind::RotationGenerator { generator: a },
        }
    }

    pub fn coefficient(space: BaseSpace, coeffs: Vec<ScalarField>) -> Self {
        VectorFieldSpec {
            space,
            kind: FieldKind::CoeffField { coeffs },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.space.coord_len();
        match &self.kind {
            FieldKind::ConstantCoeff { coeffs } => {
                if coeffs.len() != dim {
                    return Err(Error::Config(format!(
                        "constant field has {} coefficients on a space of dimension {dim}",
                        coeffs.len()
                    )));
                }
                if self.space == BaseSpace::S2 {
                    return Err(Error::Config(
                        "constant coordinate fields are not tangent to the sphere; use a rotation generator or a net".into(),
                    ));
                }
            }
            FieldKind::CoeffField { coeffs } => {
                if coeffs.len() != dim {
                    return Err(Error::Config(format!(
                        "coefficient field has {} components on a space of dimension {dim}",
                        coeffs.len()
                    )));
                }
                if self.space == BaseSpace::S2 {
                    return Err(Error::Config(
                        "coefficient fields are not supported on the sphere".into(),
                    ));
                }
            }
            FieldKind::RotationGenerator { .. } => {
                if self.space != BaseSpace::S2 {
                    return Err(Error::Config(
                        "rotation-generator fields live on the sphere".into(),
                    ));
                }
            }
            FieldKind::TabulatedNet { net } => {
                if net.input_dim != dim || net.output_dim != dim {
                    return Err(Error::Config(format!(
                        "net dimensions {}->{} do not match the space dimension {dim}",
                        net.input_dim, net.output_dim
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tangent components of the field at `p` (ambient 3-vector on the
    /// sphere, orthogonal to `p`).
    pub fn evaluate(&self, p: &BasePoint) -> Coords {
        debug_assert_eq!(self.space, p.space);
        match &self.kind {
            FieldKind::ConstantCoeff { coeffs } => Coords::from_slice(coeffs),
            FieldKind::CoeffField { coeffs } => {
                coeffs.iter().map(|c| c.eval(&p.coords)).collect()
            }
            FieldKind::RotationGenerator { generator } => {
                let v = so3_hat(generator)
                    * Vector3::new(p.coords[0], p.coords[1], p.coords[2]);
                Coords::from([v[0], v[1], v[2]])
            }
            FieldKind::TabulatedNet { net } => {
                let raw = net.eval(&p.coords);
                if self.space == BaseSpace::S2 {
                    let q = Vector3::new(p.coords[0], p.coords[1], p.coords[2]).normalize();
                    let v = Vector3::new(raw[0], raw[1], raw[2]);
                    let t = v - q * v.dot(&q);
                    Coords::from([t[0], t[1], t[2]])
                } else {
                    raw
                }
            }
        }
    }
}
