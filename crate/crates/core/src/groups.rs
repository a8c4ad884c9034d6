//! Lie-group kernel for the concrete groups in scope: group law,
//! exponential/logarithm, adjoint action, and tangent-map push-forwards.
//!
//! Coordinate encodings:
//! * translations: the vector itself;
//! * `SO2`/`U1`: one angle, reduced to `[0, 2*pi)` after every operation;
//! * `SO3`: the 3x3 orthogonal matrix, row-major;
//! * `ProductR2xU1`: `(x, y, angle)`.
//!
//! The so(3) basis is frozen to the three generators `X1, X2, X3` that hat
//! the standard coordinate axes, so algebra components are axis-angle
//! coordinates throughout.

use crate::coords::Coords;
use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Reduce an angle to the canonical interval `[0, 2*pi)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    // rem_euclid can return exactly 2*pi for tiny negative inputs.
    if t >= TAU {
        t -= TAU;
    }
    t
}

/// Shortest circular distance between two angles.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    TranslationRn(usize),
    SO2,
    U1,
    SO3,
    ProductR2xU1,
}

impl GroupSpec {
    /// Manifold dimension of the group.
    pub fn dim_g(&self) -> usize {
        match self {
            GroupSpec::TranslationRn(n) => *n,
            GroupSpec::SO2 | GroupSpec::U1 => 1,
            GroupSpec::SO3 => 3,
            GroupSpec::ProductR2xU1 => 3,
        }
    }

    /// Length of the coordinate encoding (9 for the stored rotation matrix).
    pub fn coord_len(&self) -> usize {
        match self {
            GroupSpec::SO3 => 9,
            other => other.dim_g(),
        }
    }

    /// Dimension of the stabiliser subgroup in the canonical quotient.
    pub fn dim_h_of_canonical_subgroup(&self) -> usize {
        match self {
            GroupSpec::ProductR2xU1 | GroupSpec::SO3 | GroupSpec::TranslationRn(2) => 1,
            _ => 0,
        }
    }

    /// True for the angle-coordinate groups (`SO2` and `U1` are two labels
    /// for the same group and share every code path).
    pub fn is_circle(&self) -> bool {
        matches!(self, GroupSpec::SO2 | GroupSpec::U1)
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            GroupSpec::TranslationRn(_) => "rn",
            GroupSpec::SO2 => "so2",
            GroupSpec::U1 => "u1",
            GroupSpec::SO3 => "so3",
            GroupSpec::ProductR2xU1 => "r2xu1",
        }
    }

    fn check_same(&self, other: &GroupSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch(format!(
                "{what}: {:?} vs {:?}",
                self, other
            )));
        }
        Ok(())
    }
}

/// A point of one of the concrete groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub spec: GroupSpec,
    pub coords: Coords,
}

/// An element of the Lie algebra in the frozen basis of its group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraElement {
    pub spec: GroupSpec,
    pub comps: Coords,
}

/// A tangent vector at a group element, stored through its ambient
/// representative: coordinate components for the flat groups, the full
/// 3x3 matrix (row-major) for `SO3`.
#[derive(Clone, Copy, Debug)]
pub struct TangentVector {
    pub at: GroupElement,
    pub rep: Coords,
}

// ---------------------------------------------------------------------------
// SO(3) matrix helpers
// ---------------------------------------------------------------------------

pub fn so3_coords_to_matrix(coords: &Coords) -> Mat3 {
    debug_assert_eq!(coords.len(), 9);
    Mat3::new(
        coords[0], coords[1], coords[2], coords[3], coords[4], coords[5], coords[6], coords[7],
        coords[8],
    )
}

pub fn so3_matrix_to_coords(m: &Mat3) -> Coords {
    Coords::from([
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ])
}

/// Hat map onto the frozen so(3) basis: `hat(a) = a1*X1 + a2*X2 + a3*X3`.
pub fn so3_hat(a: &[f64]) -> Mat3 {
    Mat3::new(0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0)
}

/// Inverse of [`so3_hat`] on skew-symmetric matrices.
pub fn so3_vee(m: &Mat3) -> [f64; 3] {
    [m[(2, 1)], m[(0, 2)], m[(1, 0)]]
}

/// Rodrigues form of the so(3) exponential, with a series fallback below
/// angle 1e-4 to avoid the 0/0 at the identity.
pub fn so3_exp_matrix(a: &[f64]) -> Mat3 {
    let theta = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let k = so3_hat(a);
    let (c1, c2) = if theta < 1e-4 {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Mat3::identity() + k * c1 + k * k * c2
}

/// Rotation angle in `[0, pi]` of a rotation matrix.
pub fn so3_rotation_angle(m: &Mat3) -> f64 {
    let c = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}

/// Principal logarithm of a rotation matrix. Errors within 1e-6 of the
/// branch cut at angle pi.
pub fn so3_log_matrix(m: &Mat3) -> Result<[f64; 3]> {
    let theta = so3_rotation_angle(m);
    let margin = 1e-6;
    if theta > PI - margin {
        return Err(Error::BranchCut { angle: theta, margin });
    }
    let w = [
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    ];
    let factor = if theta < 1e-5 {
        // theta / (2 sin theta) expanded around zero.
        0.5 * (1.0 + theta * theta / 6.0)
    } else {
        theta / (2.0 * theta.sin())
    };
    Ok([w[0] * factor, w[1] * factor, w[2] * factor])
}

/// One step of the iterative polar correction, enough to keep compose
/// drift far below 1e-9 per the orthogonality invariant.
fn so3_reorthonormalize(m: &Mat3) -> Mat3 {
    (m * 3.0 - m * m.transpose() * m) / 2.0
}

fn so3_orthogonality_residual(m: &Mat3) -> f64 {
    let e = m.transpose() * m - Mat3::identity();
    e.norm()
}

// ---------------------------------------------------------------------------
// Group operations
// ---------------------------------------------------------------------------

impl GroupElement {
    /// Validating constructor: checks coordinate length, reduces angles and
    /// verifies the `SO3` orthogonality invariants.
    pub fn new(spec: GroupSpec, coords: Coords) -> Result<Self> {
        if coords.len() != spec.coord_len() {
            return Err(Error::SpecMismatch(format!(
                "coordinate length {} does not encode {:?}",
                coords.len(),
                spec
            )));
        }
        let mut g = GroupElement { spec, coords };
        match spec {
            GroupSpec::SO2 | GroupSpec::U1 => g.coords[0] = reduce_angle(g.coords[0]),
            GroupSpec::ProductR2xU1 => g.coords[2] = reduce_angle(g.coords[2]),
            GroupSpec::SO3 => {
                let m = so3_coords_to_matrix(&g.coords);
                if so3_orthogonality_residual(&m) > 1e-10 || (m.determinant() - 1.0).abs() > 1e-10
                {
                    return Err(Error::SpecMismatch(
                        "matrix is not a rotation within tolerance".into(),
                    ));
                }
            }
            GroupSpec::TranslationRn(_) => {}
        }
        Ok(g)
    }

    pub fn identity(spec: GroupSpec) -> Self {
        let coords = match spec {
            GroupSpec::SO3 => so3_matrix_to_coords(&Mat3::identity()),
            other => Coords::zeros(other.coord_len()),
        };
        GroupElement { spec, coords }
    }

    pub fn translation(v: &[f64]) -> Self {
        GroupElement {
            spec: GroupSpec::TranslationRn(v.len()),
            coords: Coords::from_slice(v),
        }
    }

    pub fn circle(spec: GroupSpec, angle: f64) -> Self {
        debug_assert!(spec.is_circle());
        GroupElement {
            spec,
            coords: Coords::from([reduce_angle(angle)]),
        }
    }

    pub fn product_r2xu1(x: f64, y: f64, theta: f64) -> Self {
        GroupElement {
            spec: GroupSpec::ProductR2xU1,
            coords: Coords::from([x, y, reduce_angle(theta)]),
        }
    }

    pub fn rotation(m: &Mat3) -> Self {
        GroupElement {
            spec: GroupSpec::SO3,
            coords: so3_matrix_to_coords(m),
        }
    }

    pub fn as_matrix(&self) -> Mat3 {
        debug_assert_eq!(self.spec, GroupSpec::SO3);
        so3_coords_to_matrix(&self.coords)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance(&GroupElement::identity(self.spec)) <= tol
    }

    /// Group-adapted distance: Euclidean on translations, shortest circular
    /// distance on angle coordinates, Frobenius on rotation matrices.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        debug_assert_eq!(self.spec, other.spec);
        match self.spec {
            GroupSpec::TranslationRn(_) => self.coords.sub(&other.coords).norm(),
            GroupSpec::SO2 | GroupSpec::U1 => circular_distance(self.coords[0], other.coords[0]),
            GroupSpec::SO3 => self.coords.sub(&other.coords).norm(),
            GroupSpec::ProductR2xU1 => {
                let dx = self.coords[0] - other.coords[0];
                let dy = self.coords[1] - other.coords[1];
                let da = circular_distance(self.coords[2], other.coords[2]);
                (dx * dx + dy * dy + da * da).sqrt()
            }
        }
    }
}

/// Product `ab` in the common group of both arguments.
pub fn compose(a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    a.spec.check_same(&b.spec, "compose")?;
    let coords = match a.spec {
        GroupSpec::TranslationRn(_) => a.coords.add(&b.coords),
        GroupSpec::SO2 | GroupSpec::U1 => Coords::from([reduce_angle(a.coords[0] + b.coords[0])]),
        GroupSpec::SO3 => {
            let m = so3_coords_to_matrix(&a.coords) * so3_coords_to_matrix(&b.coords);
            so3_matrix_to_coords(&so3_reorthonormalize(&m))
        }
        GroupSpec::ProductR2xU1 => Coords::from([
            a.coords[0] + b.coords[0],
            a.coords[1] + b.coords[1],
            reduce_angle(a.coords[2] + b.coords[2]),
        ]),
    };
    Ok(GroupElement {
        spec: a.spec,
        coords,
    })
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    let coords = match g.spec {
        GroupSpec::TranslationRn(_) => g.coords.scaled(-1.0),
        GroupSpec::SO2 | GroupSpec::U1 => Coords::from([reduce_angle(-g.coords[0])]),
        GroupSpec::SO3 => so3_matrix_to_coords(&so3_coords_to_matrix(&g.coords).transpose()),
        GroupSpec::ProductR2xU1 => Coords::from([
            -g.coords[0],
            -g.coords[1],
            reduce_angle(-g.coords[2]),
        ]),
    };
    GroupElement {
        spec: g.spec,
        coords,
    }
}

impl AlgebraElement {
    pub fn new(spec: GroupSpec, comps: Coords) -> Result<Self> {
        if comps.len() != spec.dim_g() {
            return Err(Error::SpecMismatch(format!(
                "algebra component length {} does not match dim {}",
                comps.len(),
                spec.dim_g()
            )));
        }
        Ok(AlgebraElement { spec, comps })
    }

    pub fn zero(spec: GroupSpec) -> Self {
        AlgebraElement {
            spec,
            comps: Coords::zeros(spec.dim_g()),
        }
    }
}

/// Group exponential in the frozen algebra basis.
pub fn exp(a: &AlgebraElement) -> GroupElement {
    match a.spec {
        GroupSpec::SO3 => GroupElement::rotation(&so3_exp_matrix(&a.comps)),
        GroupSpec::SO2 | GroupSpec::U1 => GroupElement::circle(a.spec, a.comps[0]),
        GroupSpec::TranslationRn(_) => GroupElement {
            spec: a.spec,
            coords: a.comps,
        },
        GroupSpec::ProductR2xU1 => {
            GroupElement::product_r2xu1(a.comps[0], a.comps[1], a.comps[2])
        }
    }
}

/// Principal-branch logarithm. For `SO3`, errors within 1e-6 of angle pi;
/// for circle coordinates the branch is `(-pi, pi]`.
pub fn log(g: &GroupElement) -> Result<AlgebraElement> {
    let comps = match g.spec {
        GroupSpec::SO3 => {
            let a = so3_log_matrix(&so3_coords_to_matrix(&g.coords))?;
            Coords::from(a)
        }
        GroupSpec::SO2 | GroupSpec::U1 => {
            let t = g.coords[0];
            Coords::from([if t > PI { t - TAU } else { t }])
        }
        GroupSpec::TranslationRn(_) => g.coords,
        GroupSpec::ProductR2xU1 => {
            let t = g.coords[2];
            Coords::from([g.coords[0], g.coords[1], if t > PI { t - TAU } else { t }])
        }
    };
    Ok(AlgebraElement {
        spec: g.spec,
        comps,
    })
}

/// Adjoint action `Ad_h(X) = h X h^{-1}`; the identity map on the abelian
/// groups.
pub fn adjoint(h: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    h.spec.check_same(&x.spec, "adjoint")?;
    let comps = match h.spec {
        GroupSpec::SO3 => {
            // Ad_R(hat(a)) = hat(R a).
            let r = so3_coords_to_matrix(&h.coords);
            let a = r * Vec3::new(x.comps[0], x.comps[1], x.comps[2]);
            Coords::from([a[0], a[1], a[2]])
        }
        _ => x.comps,
    };
    Ok(AlgebraElement {
        spec: h.spec,
        comps,
    })
}

impl TangentVector {
    /// Tangent representative of an algebra element at the identity.
    pub fn at_identity(a: &AlgebraElement) -> TangentVector {
        let rep = match a.spec {
            GroupSpec::SO3 => so3_matrix_to_coords(&so3_hat(&a.comps)),
            _ => a.comps,
        };
        TangentVector {
            at: GroupElement::identity(a.spec),
            rep,
        }
    }

    /// Left-translated algebra element `(L_g)_* A`, a tangent vector at `g`.
    pub fn left_translated(g: &GroupElement, a: &AlgebraElement) -> Result<TangentVector> {
        push_left(g, &TangentVector::at_identity(a))
    }

    /// Read the tangent vector back into the algebra through `(L_{g^{-1}})_*`.
    /// For `SO3` the matrix `g^T V` is skew-symmetrized before extraction so
    /// finite-difference representatives lose their symmetric error part.
    pub fn to_algebra_at_identity(&self) -> AlgebraElement {
        match self.at.spec {
            GroupSpec::SO3 => {
                let g = so3_coords_to_matrix(&self.at.coords);
                let v = so3_coords_to_matrix(&self.rep);
                let w = g.transpose() * v;
                let skew = (w - w.transpose()) / 2.0;
                AlgebraElement {
                    spec: self.at.spec,
                    comps: Coords::from(so3_vee(&skew)),
                }
            }
            _ => AlgebraElement {
                spec: self.at.spec,
                comps: self.rep,
            },
        }
    }
}

/// Push-forward of a tangent vector under left translation by `g`.
pub fn push_left(g: &GroupElement, x: &TangentVector) -> Result<TangentVector> {
    g.spec.check_same(&x.at.spec, "push_left")?;
    let at = compose(g, &x.at)?;
    let rep = match g.spec {
        GroupSpec::SO3 => {
            let m = so3_coords_to_matrix(&g.coords) * so3_coords_to_matrix(&x.rep);
            so3_matrix_to_coords(&m)
        }
        _ => x.rep,
    };
    Ok(TangentVector { at, rep })
}

/// Push-forward of a tangent vector under right translation by `h`.
pub fn push_right(h: &GroupElement, x: &TangentVector) -> Result<TangentVector> {
    h.spec.check_same(&x.at.spec, "push_right")?;
    let at = compose(&x.at, h)?;
    let rep = match h.spec {
        GroupSpec::SO3 => {
            let m = so3_coords_to_matrix(&x.rep) * so3_coords_to_matrix(&h.coords);
            so3_matrix_to_coords(&m)
        }
        _ => x.rep,
    };
    Ok(TangentVector { at, rep })
}

// ---------------------------------------------------------------------------
// Serialization: {"kind": string, "coords": [numbers]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireElement {
    kind: String,
    coords: Vec<f64>,
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireElement {
            kind: self.spec.kind_str().to_string(),
            coords: self.coords.to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = WireElement::deserialize(d)?;
        let spec = match wire.kind.as_str() {
            "rn" => GroupSpec::TranslationRn(wire.coords.len()),
            "so2" => GroupSpec::SO2,
            "u1" => GroupSpec::U1,
            "so3" => GroupSpec::SO3,
            "r2xu1" => GroupSpec::ProductR2xU1,
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown group kind {other:?}"
                )))
            }
        };
        GroupElement::new(spec, Coords::from_slice(&wire.coords))
            .map_err(serde::de::Error::custom)
    }
}
