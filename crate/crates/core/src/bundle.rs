//! Homogeneous-space structure of the registered quotients G -> G/H:
//! projection, left action on the base, local sections, and the cocycle.

use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::groups::{
    compose, inverse, reduce_angle, so3_coords_to_matrix, so3_exp_matrix, AlgebraElement,
    GroupElement, GroupSpec, Mat3, Vec3,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BaseSpace {
    R1,
    R2,
    S2,
    /// The circle that appears when U(1) is its own base (trivial stabiliser).
    Circle,
}

impl BaseSpace {
    /// Length of the coordinate encoding (ambient 3-vector on the sphere).
    pub fn coord_len(&self) -> usize {
        match self {
            BaseSpace::R1 | BaseSpace::Circle => 1,
            BaseSpace::R2 => 2,
            BaseSpace::S2 => 3,
        }
    }
}

/// A point of one of the base spaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePoint {
    pub space: BaseSpace,
    pub coords: Coords,
}

impl BasePoint {
    pub fn new(space: BaseSpace, coords: Coords) -> Result<Self> {
        if coords.len() != space.coord_len() {
            return Err(Error::SpecMismatch(format!(
                "coordinate length {} does not encode {:?}",
                coords.len(),
                space
            )));
        }
        let mut p = BasePoint { space, coords };
        match space {
            BaseSpace::S2 => {
                if (p.coords.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::SpecMismatch(format!(
                        "sphere point has norm {}",
                        p.coords.norm()
                    )));
                }
            }
            BaseSpace::Circle => p.coords[0] = reduce_angle(p.coords[0]),
            _ => {}
        }
        Ok(p)
    }

    pub fn on_line(x: f64) -> Self {
        BasePoint {
            space: BaseSpace::R1,
            coords: Coords::from([x]),
        }
    }

    pub fn on_plane(x: f64, y: f64) -> Self {
        BasePoint {
            space: BaseSpace::R2,
            coords: Coords::from([x, y]),
        }
    }

    pub fn on_sphere(v: [f64; 3]) -> Result<Self> {
        BasePoint::new(BaseSpace::S2, Coords::from(v))
    }

    pub fn on_circle(theta: f64) -> Self {
        BasePoint {
            space: BaseSpace::Circle,
            coords: Coords::from([reduce_angle(theta)]),
        }
    }

    pub fn as_vec3(&self) -> Vec3 {
        debug_assert_eq!(self.space, BaseSpace::S2);
        Vec3::new(self.coords[0], self.coords[1], self.coords[2])
    }

    /// Ambient Euclidean distance; shortest circular distance on the circle.
    pub fn distance(&self, other: &BasePoint) -> f64 {
        debug_assert_eq!(self.space, other.space);
        match self.space {
            BaseSpace::Circle => {
                crate::groups::circular_distance(self.coords[0], other.coords[0])
            }
            _ => self.coords.sub(&other.coords).norm(),
        }
    }
}

/// Rotation taking `from` to `to` along the shorter great circle. Undefined
/// at the antipode; callers guard with the chart exclusion radius.
pub fn minimal_rotation(from: &Vec3, to: &Vec3) -> Mat3 {
    let cross = from.cross(to);
    let angle = cross.norm().atan2(from.dot(to));
    if cross.norm() < 1e-14 {
        if from.dot(to) > 0.0 {
            return Mat3::identity();
        }
        // Antipodal: any half-turn works; pick an axis orthogonal to `from`.
        let helper = if from[0].abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let axis = from.cross(&helper).normalize();
        return so3_exp_matrix(&[axis[0] * PI, axis[1] * PI, axis[2] * PI]);
    }
    let axis = cross.normalize() * angle;
    so3_exp_matrix(&[axis[0], axis[1], axis[2]])
}

/// One of the registered homogeneous-space structures G -> G/H.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quotient {
    /// G = R2 x U(1) over M = R2 with H = U(1).
    R2xU1OverR2,
    /// G = SO(3) over M = S2 with H = SO(2), embedded as rotations about
    /// the first coordinate axis.
    So3OverS2,
    /// G = R2 (translations) over M = R1 with H the second-axis translations.
    R2OverR1,
    /// Trivial stabiliser: the group is its own base space.
    Trivial(GroupSpec),
}

impl Quotient {
    /// Look up the quotient registered for a group, for callers that start
    /// from a bare group element.
    pub fn registered_for(spec: GroupSpec) -> Result<Quotient> {
        match spec {
            GroupSpec::ProductR2xU1 => Ok(Quotient::R2xU1OverR2),
            GroupSpec::SO3 => Ok(Quotient::So3OverS2),
            GroupSpec::TranslationRn(2) => Ok(Quotient::R2OverR1),
            GroupSpec::TranslationRn(1) | GroupSpec::U1 | GroupSpec::SO2 => {
                Ok(Quotient::Trivial(spec))
            }
            other => Err(Error::NoQuotientRegistered(format!("{other:?}"))),
        }
    }

    pub fn group_spec(&self) -> GroupSpec {
        match self {
            Quotient::R2xU1OverR2 => GroupSpec::ProductR2xU1,
            Quotient::So3OverS2 => GroupSpec::SO3,
            Quotient::R2OverR1 => GroupSpec::TranslationRn(2),
            Quotient::Trivial(spec) => *spec,
        }
    }

    pub fn base_space(&self) -> BaseSpace {
        match self {
            Quotient::R2xU1OverR2 => BaseSpace::R2,
            Quotient::So3OverS2 => BaseSpace::S2,
            Quotient::R2OverR1 => BaseSpace::R1,
            Quotient::Trivial(spec) => match spec {
                GroupSpec::U1 | GroupSpec::SO2 => BaseSpace::Circle,
                GroupSpec::TranslationRn(1) => BaseSpace::R1,
                GroupSpec::TranslationRn(2) => BaseSpace::R2,
                _ => unreachable!("trivial quotients are only registered for U(1) and R^n"),
            },
        }
    }

    /// The stabiliser as a group in its own right (a zero-dimensional
    /// translation group when trivial).
    pub fn h_spec(&self) -> GroupSpec {
        match self {
            Quotient::R2xU1OverR2 | Quotient::So3OverS2 => GroupSpec::U1,
            Quotient::R2OverR1 => GroupSpec::TranslationRn(1),
            Quotient::Trivial(_) => GroupSpec::TranslationRn(0),
        }
    }

    pub fn dim_h(&self) -> usize {
        self.h_spec().dim_g()
    }

    /// Indices of the stabiliser generators inside the frozen algebra basis
    /// of G.
    pub fn h_indices(&self) -> &'static [usize] {
        match self {
            Quotient::R2xU1OverR2 => &[2],
            Quotient::So3OverS2 => &[0],
            Quotient::R2OverR1 => &[1],
            Quotient::Trivial(_) => &[],
        }
    }

    /// Bundle projection G -> G/H.
    pub fn project(&self, g: &GroupElement) -> Result<BasePoint> {
        self.group_spec()
            .check_same_quotient(&g.spec, "project")?;
        Ok(match self {
            Quotient::R2xU1OverR2 => BasePoint::on_plane(g.coords[0], g.coords[1]),
            Quotient::So3OverS2 => {
                // First column of the rotation matrix: the image of p0 = e1.
                let m = so3_coords_to_matrix(&g.coords);
                let mut p = Vec3::new(m[(0, 0)], m[(1, 0)], m[(2, 0)]);
                p.normalize_mut();
                BasePoint::on_sphere([p[0], p[1], p[2]])?
            }
            Quotient::R2OverR1 => BasePoint::on_line(g.coords[0]),
            Quotient::Trivial(spec) => match spec {
                GroupSpec::U1 | GroupSpec::SO2 => BasePoint::on_circle(g.coords[0]),
                GroupSpec::TranslationRn(1) => BasePoint::on_line(g.coords[0]),
                GroupSpec::TranslationRn(2) => BasePoint::on_plane(g.coords[0], g.coords[1]),
                _ => unreachable!(),
            },
        })
    }

    /// Induced left action of G on the base.
    pub fn left_act(&self, g: &GroupElement, p: &BasePoint) -> Result<BasePoint> {
        if g.spec != self.group_spec() || p.space != self.base_space() {
            return Err(Error::SpecMismatch(format!(
                "left_act: {:?} acting on {:?} under {:?}",
                g.spec, p.space, self
            )));
        }
        Ok(match self {
            Quotient::R2xU1OverR2 => {
                BasePoint::on_plane(p.coords[0] + g.coords[0], p.coords[1] + g.coords[1])
            }
            Quotient::So3OverS2 => {
                let mut v = so3_coords_to_matrix(&g.coords) * p.as_vec3();
                v.normalize_mut();
                BasePoint::on_sphere([v[0], v[1], v[2]])?
            }
            Quotient::R2OverR1 => BasePoint::on_line(p.coords[0] + g.coords[0]),
            Quotient::Trivial(spec) => match spec {
                GroupSpec::U1 | GroupSpec::SO2 => {
                    BasePoint::on_circle(p.coords[0] + g.coords[0])
                }
                GroupSpec::TranslationRn(1) => BasePoint::on_line(p.coords[0] + g.coords[0]),
                GroupSpec::TranslationRn(2) => BasePoint::on_plane(
                    p.coords[0] + g.coords[0],
                    p.coords[1] + g.coords[1],
                ),
                _ => unreachable!(),
            },
        })
    }

    /// Embed stabiliser coordinates into G.
    pub fn h_embed(&self, h_coords: &[f64]) -> GroupElement {
        match self {
            Quotient::R2xU1OverR2 => GroupElement::product_r2xu1(0.0, 0.0, h_coords[0]),
            Quotient::So3OverS2 => {
                GroupElement::rotation(&so3_exp_matrix(&[h_coords[0], 0.0, 0.0]))
            }
            Quotient::R2OverR1 => GroupElement::translation(&[0.0, h_coords[0]]),
            Quotient::Trivial(spec) => GroupElement::identity(*spec),
        }
    }

    /// Embed a stabiliser algebra element into the algebra of G.
    pub fn h_algebra_embed(&self, h_comps: &[f64]) -> AlgebraElement {
        let spec = self.group_spec();
        let mut comps = Coords::zeros(spec.dim_g());
        for (slot, value) in self.h_indices().iter().zip(h_comps) {
            comps[*slot] = *value;
        }
        AlgebraElement { spec, comps }
    }

    /// Residual of the fibre-membership test: how far `g` is from the
    /// embedded stabiliser subgroup.
    pub fn h_membership_residual(&self, g: &GroupElement) -> f64 {
        match self {
            Quotient::R2xU1OverR2 => (g.coords[0].powi(2) + g.coords[1].powi(2)).sqrt(),
            Quotient::So3OverS2 => {
                // Elements of H fix e1.
                let m = so3_coords_to_matrix(&g.coords);
                let e1 = Vec3::new(1.0, 0.0, 0.0);
                (m * e1 - e1).norm()
            }
            Quotient::R2OverR1 => g.coords[0].abs(),
            Quotient::Trivial(spec) => g.distance(&GroupElement::identity(*spec)),
        }
    }

    /// Extract the stabiliser coordinates of an element of G known to lie
    /// in the fibre subgroup, verifying membership first.
    pub fn h_extract(&self, g: &GroupElement) -> Result<GroupElement> {
        let residual = self.h_membership_residual(g);
        if residual > 1e-8 {
            return Err(Error::NotInFibre { residual });
        }
        let h_spec = self.h_spec();
        Ok(match self {
            Quotient::R2xU1OverR2 => GroupElement::circle(h_spec, g.coords[2]),
            Quotient::So3OverS2 => {
                let m = so3_coords_to_matrix(&g.coords);
                GroupElement::circle(h_spec, m[(2, 1)].atan2(m[(1, 1)]))
            }
            Quotient::R2OverR1 => GroupElement::translation(&[g.coords[1]]),
            Quotient::Trivial(_) => GroupElement::identity(h_spec),
        })
    }
}

impl GroupSpec {
    fn check_same_quotient(&self, other: &GroupSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::NoQuotientRegistered(format!(
                "{what}: element of {other:?} under a quotient of {self:?}"
            )));
        }
        Ok(())
    }
}

/// A local section of G -> G/H.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "space")]
pub enum SectionChart {
    /// sigma(x, y) = (x, y, chi) on the product bundle.
    #[serde(rename = "R2")]
    ConstantAngle { chi: f64 },
    /// Minimal-rotation frame on the sphere, undefined inside the exclusion
    /// radius around the antipode of `p0`.
    #[serde(rename = "S2")]
    Sphere { p0: [f64; 3], exclusion: f64 },
    /// Graph section sigma(x) = (x, f(x)) on the planar quotient.
    #[serde(rename = "R1")]
    Graph { graph: ScalarField },
    /// The only section of a trivial bundle.
    #[serde(rename = "trivial")]
    Identity,
}

impl SectionChart {
    pub fn constant_angle(chi: f64) -> Self {
        SectionChart::ConstantAngle { chi }
    }

    /// Sphere chart with the default exclusion radius of 1e-3 radians.
    pub fn sphere(p0: [f64; 3]) -> Self {
        SectionChart::Sphere {
            p0,
            exclusion: 1e-3,
        }
    }

    pub fn graph(f: ScalarField) -> Self {
        SectionChart::Graph { graph: f }
    }

    pub fn matches(&self, quotient: &Quotient) -> bool {
        matches!(
            (self, quotient),
            (SectionChart::ConstantAngle { .. }, Quotient::R2xU1OverR2)
                | (SectionChart::Sphere { .. }, Quotient::So3OverS2)
                | (SectionChart::Graph { .. }, Quotient::R2OverR1)
                | (SectionChart::Identity, Quotient::Trivial(_))
        )
    }

    /// Whether `p` lies in the chart domain.
    pub fn contains(&self, p: &BasePoint) -> bool {
        match self {
            SectionChart::Sphere { p0, exclusion } => {
                let antipode = -Vec3::new(p0[0], p0[1], p0[2]);
                let cosine = p.as_vec3().dot(&antipode).clamp(-1.0, 1.0);
                cosine.acos() > *exclusion
            }
            _ => true,
        }
    }

    fn frame_at_reference(p0: &Vec3) -> Mat3 {
        let e1 = Vec3::new(1.0, 0.0, 0.0);
        if p0.dot(&e1) > -1.0 + 1e-12 {
            minimal_rotation(&e1, p0)
        } else {
            // Reference at the antipode of e1: route through the half turn
            // about e3 so the frame stays well defined.
            let half_turn = so3_exp_matrix(&[0.0, 0.0, PI]);
            minimal_rotation(&(-e1), p0) * half_turn
        }
    }

    /// Evaluate the section at `p`.
    pub fn section(&self, quotient: &Quotient, p: &BasePoint) -> Result<GroupElement> {
        if !self.contains(p) {
            return Err(Error::OutsideChart(format!("{:?}", p.coords)));
        }
        Ok(match (self, quotient) {
            (SectionChart::ConstantAngle { chi }, Quotient::R2xU1OverR2) => {
                GroupElement::product_r2xu1(p.coords[0], p.coords[1], *chi)
            }
            (SectionChart::Sphere { p0, .. }, Quotient::So3OverS2) => {
                let p0 = Vec3::new(p0[0], p0[1], p0[2]).normalize();
                let frame0 = Self::frame_at_reference(&p0);
                let m = minimal_rotation(&p0, &p.as_vec3()) * frame0;
                GroupElement::rotation(&m)
            }
            (SectionChart::Graph { graph }, Quotient::R2OverR1) => {
                GroupElement::translation(&[p.coords[0], graph.eval(&p.coords)])
            }
            (SectionChart::Identity, Quotient::Trivial(spec)) => match spec {
                GroupSpec::U1 | GroupSpec::SO2 => GroupElement::circle(*spec, p.coords[0]),
                GroupSpec::TranslationRn(_) => GroupElement::translation(&p.coords),
                _ => unreachable!(),
            },
            _ => {
                return Err(Error::SpecMismatch(format!(
                    "chart {self:?} does not match quotient {quotient:?}"
                )))
            }
        })
    }

    /// The cocycle c(g, p), the unique stabiliser element with
    /// `g sigma(p) = sigma(gp) c(g, p)`, computed as
    /// `sigma(gp)^{-1} g sigma(p)` and returned in stabiliser coordinates.
    pub fn cocycle(
        &self,
        quotient: &Quotient,
        g: &GroupElement,
        p: &BasePoint,
    ) -> Result<GroupElement> {
        let gp = quotient.left_act(g, p)?;
        let residual = compose(
            &inverse(&self.section(quotient, &gp)?),
            &compose(g, &self.section(quotient, p)?)?,
        )?;
        quotient.h_extract(&residual)
    }

    /// The fibre coordinate h(g) in `g = sigma(project(g)) h(g)`.
    pub fn fibre_coordinate(&self, quotient: &Quotient, g: &GroupElement) -> Result<GroupElement> {
        let p = quotient.project(g)?;
        let residual = compose(&inverse(&self.section(quotient, &p)?), g)?;
        quotient.h_extract(&residual)
    }
}

/// Push a sphere point a small step along a tangent direction and
/// renormalize; used by the finite-difference section differential.
pub fn sphere_step(p: &BasePoint, v: &[f64], eps: f64) -> BasePoint {
    let mut q = Vec3::new(
        p.coords[0] + eps * v[0],
        p.coords[1] + eps * v[1],
        p.coords[2] + eps * v[2],
    );
    q.normalize_mut();
    BasePoint {
        space: BaseSpace::S2,
        coords: Coords::from([q[0], q[1], q[2]]),
    }
}
