//! Representations of the stabiliser, the induced left action of G on
//! M x V, and feature fields in their Mackey-function form.

use crate::bundle::{BasePoint, Quotient, SectionChart};
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::groups::{compose, inverse, GroupElement};
use crate::sample::{sample_group, sample_subgroup, seeded_rng};
use serde::{Deserialize, Serialize};

/// A finite-dimensional representation of the (one-dimensional, abelian)
/// stabilisers in scope. Complex characters of U(1) are realised as 2x2
/// rotation blocks so every feature space is a real vector space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rep", rename_all = "snake_case")]
pub enum Representation {
    Trivial { dim: usize },
    /// U(1) acting on R^2 by the rotation matrix of the angle itself.
    Rot2,
    /// U(1) acting on R^2 by the rotation of `n` times the angle.
    Weighted { n: i32 },
}

impl Representation {
    pub fn dim_v(&self) -> usize {
        match self {
            Representation::Trivial { dim } => *dim,
            Representation::Rot2 | Representation::Weighted { .. } => 2,
        }
    }

    fn check_dim(&self, v: &Coords) -> Result<()> {
        if v.len() != self.dim_v() {
            return Err(Error::DimMismatch {
                got: v.len(),
                want: self.dim_v(),
            });
        }
        Ok(())
    }

    /// Effective rotation angle of a stabiliser element under this
    /// representation (zero for the trivial one).
    fn action_angle(&self, h: &GroupElement) -> f64 {
        debug_assert!(h.spec.dim_g() <= 1);
        let coord = if h.coords.is_empty() { 0.0 } else { h.coords[0] };
        match self {
            Representation::Trivial { .. } => 0.0,
            Representation::Rot2 => coord,
            Representation::Weighted { n } => f64::from(*n) * coord,
        }
    }
}

/// Apply `rho(h)` to a feature vector. The rotation kinds act orthogonally,
/// so norms are preserved.
pub fn rep_apply(rho: &Representation, h: &GroupElement, v: &Coords) -> Result<Coords> {
    rho.check_dim(v)?;
    match rho {
        Representation::Trivial { .. } => Ok(*v),
        _ => {
            let angle = rho.action_angle(h);
            let (s, c) = angle.sin_cos();
            Ok(Coords::from([c * v[0] - s * v[1], s * v[0] + c * v[1]]))
        }
    }
}

/// Apply `rho(h)^{-1}`.
pub fn rep_apply_inverse(rho: &Representation, h: &GroupElement, v: &Coords) -> Result<Coords> {
    rho.check_dim(v)?;
    match rho {
        Representation::Trivial { .. } => Ok(*v),
        _ => {
            let angle = -rho.action_angle(h);
            let (s, c) = angle.sin_cos();
            Ok(Coords::from([c * v[0] - s * v[1], s * v[0] + c * v[1]]))
        }
    }
}

/// Operator distance between `rho(h1)` and `rho(h2)`, measured column by
/// column on the standard basis. Kernel elements of the representation are
/// invisible here, which is exactly what the local equivariance condition
/// quotients out.
pub fn rep_distance(rho: &Representation, h1: &GroupElement, h2: &GroupElement) -> Result<f64> {
    let dim = rho.dim_v();
    let mut worst = 0.0f64;
    for k in 0..dim {
        let mut e = Coords::zeros(dim);
        e[k] = 1.0;
        let a = rep_apply(rho, h1, &e)?;
        let b = rep_apply(rho, h2, &e)?;
        worst = worst.max(a.sub(&b).norm());
    }
    Ok(worst)
}

/// A base map f: M -> V from the small closed family used in configs and
/// verification suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaseMap {
    /// First `dim` base coordinates, zero padded.
    CoordinateEmbed { dim: usize },
    Constant { value: Vec<f64> },
}

impl BaseMap {
    pub fn eval(&self, p: &BasePoint) -> Coords {
        match self {
            BaseMap::CoordinateEmbed { dim } => {
                let mut out = Coords::zeros(*dim);
                let n = (*dim).min(p.coords.len());
                for i in 0..n {
                    out[i] = p.coords[i];
                }
                out
            }
            BaseMap::Constant { value } => Coords::from_slice(value),
        }
    }
}

/// A feature field in Mackey form: `k(g) = rho(h(g)^{-1}) f(project(g))`
/// where `h(g)` is the fibre coordinate of `g` relative to the chart.
#[derive(Clone, Debug)]
pub struct MackeyFunction {
    pub quotient: Quotient,
    pub chart: SectionChart,
    pub rho: Representation,
    pub base_map: BaseMap,
}

impl MackeyFunction {
    pub fn eval(&self, g: &GroupElement) -> Result<Coords> {
        let p = self.quotient.project(g)?;
        let h = self.chart.fibre_coordinate(&self.quotient, g)?;
        rep_apply_inverse(&self.rho, &h, &self.base_map.eval(&p))
    }
}

/// Outcome of [`mackey_check`].
#[derive(Clone, Debug, Serialize)]
pub struct MackeyReport {
    pub pass: bool,
    pub max_residual: f64,
}

/// Verify the defining relation `k(gh) = rho(h^{-1}) k(g)` on seeded
/// samples; `k` may reject samples outside its chart, which are redrawn.
pub fn mackey_check<F>(
    quotient: &Quotient,
    rho: &Representation,
    k: F,
    samples: usize,
    seed: u64,
) -> Result<MackeyReport>
where
    F: Fn(&GroupElement) -> Result<Coords>,
{
    let mut rng = seeded_rng(seed);
    let mut max_residual = 0.0f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < samples {
        attempts += 1;
        if attempts > 1000 * samples {
            return Err(Error::ChartExhausted(attempts));
        }
        let g = sample_group(quotient.group_spec(), &mut rng);
        let h = sample_subgroup(quotient, &mut rng);
        let gh = compose(&g, &quotient.h_embed(&h.coords))?;
        let (kg, kgh) = match (k(&g), k(&gh)) {
            (Ok(a), Ok(b)) => (a, b),
            // Outside the chart: redraw.
            (Err(Error::OutsideChart(_)), _) | (_, Err(Error::OutsideChart(_))) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let want = rep_apply_inverse(rho, &h, &kg)?;
        max_residual = max_residual.max(kgh.sub(&want).norm());
        accepted += 1;
    }
    Ok(MackeyReport {
        pass: max_residual <= 1e-10,
        max_residual,
    })
}

/// The induced left action of G on M x V:
/// `L_g(p, v) = (g p, rho(c(g, p)) v)`.
pub fn induced_left_action(
    quotient: &Quotient,
    chart: &SectionChart,
    rho: &Representation,
    g: &GroupElement,
    p: &BasePoint,
    v: &Coords,
) -> Result<(BasePoint, Coords)> {
    let c = chart.cocycle(quotient, g, p)?;
    let gp = quotient.left_act(g, p)?;
    Ok((gp, rep_apply(rho, &c, v)?))
}

/// The induced representation acting on a Mackey function:
/// `(Ind rho)(g) k` evaluated at `g_eval` is `k(g^{-1} g_eval)`.
pub fn induced_rep_apply<F>(g: &GroupElement, k: F, g_eval: &GroupElement) -> Result<Coords>
where
    F: Fn(&GroupElement) -> Result<Coords>,
{
    k(&compose(&inverse(g), g_eval)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;
    use std::f64::consts::PI;

    fn u1(angle: f64) -> GroupElement {
        GroupElement::circle(GroupSpec::U1, angle)
    }

    #[test]
    fn half_turn_flips_the_feature() {
        let v = Coords::from([1.0, 0.0]);
        let out = rep_apply(&Representation::Rot2, &u1(PI), &v).unwrap();
        assert!(out.sub(&Coords::from([-1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn trivial_representation_fixes_features() {
        let v = Coords::from([0.3, -0.7, 2.0]);
        let out = rep_apply(&Representation::Trivial { dim: 3 }, &u1(1.9), &v).unwrap();
        assert_eq!(out, v);
    }

    #[test]
    fn weight_two_quarter_turn_is_a_half_turn() {
        let v = Coords::from([1.0, 0.0]);
        let out = rep_apply(&Representation::Weighted { n: 2 }, &u1(PI / 2.0), &v).unwrap();
        assert!(out.sub(&Coords::from([-1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn rotation_kinds_preserve_norm_and_compose() {
        let mut rng = seeded_rng(11);
        let rho = Representation::Rot2;
        for _ in 0..30 {
            let h1 = sample_subgroup(&Quotient::R2xU1OverR2, &mut rng);
            let h2 = sample_subgroup(&Quotient::R2xU1OverR2, &mut rng);
            let v = crate::sample::sample_unit_feature(2, &mut rng);
            let joint = rep_apply(&rho, &compose(&h1, &h2).unwrap(), &v).unwrap();
            let staged = rep_apply(&rho, &h1, &rep_apply(&rho, &h2, &v).unwrap()).unwrap();
            assert!(joint.sub(&staged).norm() < 1e-12);
            assert!((joint.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dim_mismatch_is_reported() {
        let v = Coords::from([1.0, 0.0, 0.0]);
        match rep_apply(&Representation::Rot2, &u1(0.3), &v) {
            Err(Error::DimMismatch { got: 3, want: 2 }) => {}
            other => panic!("expected DimMismatch, got {other:?}"),
        }
    }

    #[test]
    fn product_left_action_translates_and_rotates() {
        let quotient = Quotient::R2xU1OverR2;
        let chart = SectionChart::constant_angle(0.0);
        let g = GroupElement::product_r2xu1(0.5, -0.25, PI / 2.0);
        let p = BasePoint::on_plane(1.0, 2.0);
        let v = Coords::from([1.0, 0.0]);
        let (gp, gv) =
            induced_left_action(&quotient, &chart, &Representation::Rot2, &g, &p, &v).unwrap();
        assert!(gp.distance(&BasePoint::on_plane(1.5, 1.75)) < 1e-12);
        assert!(gv.sub(&Coords::from([0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn identity_acts_trivially() {
        let quotient = Quotient::So3OverS2;
        let chart = SectionChart::sphere([1.0, 0.0, 0.0]);
        let p = BasePoint::on_sphere([0.0, 0.0, 1.0]).unwrap();
        let v = Coords::from([0.4, -1.0]);
        let (gp, gv) = induced_left_action(
            &quotient,
            &chart,
            &Representation::Rot2,
            &GroupElement::identity(GroupSpec::SO3),
            &p,
            &v,
        )
        .unwrap();
        assert!(gp.distance(&p) < 1e-12);
        assert!(gv.sub(&v).norm() < 1e-12);
    }

    #[test]
    fn left_action_composition_on_the_sphere() {
        let quotient = Quotient::So3OverS2;
        let chart = SectionChart::sphere([1.0, 0.0, 0.0]);
        let rho = Representation::Rot2;
        let mut rng = seeded_rng(42);
        let mut checked = 0;
        while checked < 100 {
            let g1 = sample_group(GroupSpec::SO3, &mut rng);
            let g2 = sample_group(GroupSpec::SO3, &mut rng);
            let p = crate::sample::sample_base_point(crate::bundle::BaseSpace::S2, &mut rng);
            let v = crate::sample::sample_unit_feature(2, &mut rng);
            let staged = induced_left_action(&quotient, &chart, &rho, &g2, &p, &v)
                .and_then(|(q, w)| induced_left_action(&quotient, &chart, &rho, &g1, &q, &w));
            let joint = induced_left_action(
                &quotient,
                &chart,
                &rho,
                &compose(&g1, &g2).unwrap(),
                &p,
                &v,
            );
            match (staged, joint) {
                (Ok((q1, w1)), Ok((q2, w2))) => {
                    assert!(q1.distance(&q2) < 1e-10);
                    assert!(w1.sub(&w2).norm() < 1e-10);
                    checked += 1;
                }
                // Chart exclusions: redraw.
                _ => continue,
            }
        }
    }

    #[test]
    fn constructed_mackey_functions_pass_the_check() {
        let quotient = Quotient::So3OverS2;
        let k = MackeyFunction {
            quotient,
            chart: SectionChart::sphere([1.0, 0.0, 0.0]),
            rho: Representation::Rot2,
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        let report = mackey_check(&quotient, &k.rho, |g| k.eval(g), 100, 42).unwrap();
        assert!(report.pass, "residual {}", report.max_residual);
    }

    #[test]
    fn trivial_representation_ignores_the_fibre() {
        let quotient = Quotient::R2xU1OverR2;
        let k = MackeyFunction {
            quotient,
            chart: SectionChart::constant_angle(0.7),
            rho: Representation::Trivial { dim: 2 },
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        let report = mackey_check(&quotient, &k.rho, |g| k.eval(g), 50, 42).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn corrupted_mackey_function_fails_with_planted_residual() {
        let quotient = Quotient::R2xU1OverR2;
        let k = MackeyFunction {
            quotient,
            chart: SectionChart::constant_angle(0.0),
            rho: Representation::Rot2,
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        // Inject a fibre dependence of magnitude >= 0.1 through the raw
        // theta coordinate.
        let corrupted = |g: &GroupElement| -> Result<Coords> {
            let mut value = k.eval(g)?;
            value[0] += 0.5 * (g.coords[2]).sin();
            Ok(value)
        };
        let report = mackey_check(&quotient, &k.rho, corrupted, 100, 42).unwrap();
        assert!(!report.pass);
        assert!(report.max_residual >= 0.1);
    }

    #[test]
    fn induced_rep_shifts_the_evaluation_point() {
        let quotient = Quotient::R2xU1OverR2;
        let k = MackeyFunction {
            quotient,
            chart: SectionChart::constant_angle(0.0),
            rho: Representation::Rot2,
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        let g = GroupElement::product_r2xu1(1.0, 0.0, 0.0);
        let g_eval = GroupElement::product_r2xu1(0.3, 0.8, 0.0);
        let value = induced_rep_apply(&g, |x| k.eval(x), &g_eval).unwrap();
        let direct = k
            .eval(&GroupElement::product_r2xu1(-0.7, 0.8, 0.0))
            .unwrap();
        assert!(value.sub(&direct).norm() < 1e-12);
    }

    #[test]
    fn identity_induced_rep_is_evaluation() {
        let quotient = Quotient::R2xU1OverR2;
        let k = MackeyFunction {
            quotient,
            chart: SectionChart::constant_angle(0.4),
            rho: Representation::Rot2,
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        let e = GroupElement::identity(GroupSpec::ProductR2xU1);
        let g_eval = GroupElement::product_r2xu1(0.5, -0.5, 2.0);
        let value = induced_rep_apply(&e, |x| k.eval(x), &g_eval).unwrap();
        assert!(value.sub(&k.eval(&g_eval).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn mackey_row_matches_local_row() {
        // The Mackey transformation and the local pair transformation of
        // the same feature field agree: rho(c(g,p)) f(p) equals the
        // induced-representation readout at sigma(gp).
        let quotient = Quotient::So3OverS2;
        let chart = SectionChart::sphere([1.0, 0.0, 0.0]);
        let rho = Representation::Rot2;
        let k = MackeyFunction {
            quotient,
            chart: chart.clone(),
            rho,
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        let mut rng = seeded_rng(5);
        let mut checked = 0;
        while checked < 100 {
            let g = sample_group(GroupSpec::SO3, &mut rng);
            let p = crate::sample::sample_base_point(crate::bundle::BaseSpace::S2, &mut rng);
            let row_pair = (|| -> Result<(Coords, Coords)> {
                let f_p = k.eval(&chart.section(&quotient, &p)?)?;
                let (gp, transformed) =
                    induced_left_action(&quotient, &chart, &rho, &g, &p, &f_p)?;
                let sigma_gp = chart.section(&quotient, &gp)?;
                let mackey = induced_rep_apply(&g, |x| k.eval(x), &sigma_gp)?;
                Ok((transformed, mackey))
            })();
            match row_pair {
                Ok((transformed, mackey)) => {
                    assert!(
                        transformed.sub(&mackey).norm() < 1e-10,
                        "rows disagree by {}",
                        transformed.sub(&mackey).norm()
                    );
                    checked += 1;
                }
                // Chart exclusions: redraw.
                Err(_) => continue,
            }
        }
    }

    #[test]
    fn chart_change_gauges_the_feature_by_the_angle_difference() {
        // Readouts of one section from two constant-angle charts differ by
        // exactly rho(chi2 - chi1) applied to the second readout.
        let quotient = Quotient::R2xU1OverR2;
        let rho = Representation::Rot2;
        let (chi1, chi2) = (0.3, 1.9);
        let k = MackeyFunction {
            quotient,
            chart: SectionChart::constant_angle(0.0),
            rho,
            base_map: BaseMap::CoordinateEmbed { dim: 2 },
        };
        let chart1 = SectionChart::constant_angle(chi1);
        let chart2 = SectionChart::constant_angle(chi2);
        let mut rng = seeded_rng(9);
        for _ in 0..20 {
            let p = crate::sample::sample_base_point(crate::bundle::BaseSpace::R2, &mut rng);
            let f1 = k.eval(&chart1.section(&quotient, &p).unwrap()).unwrap();
            let f2 = k.eval(&chart2.section(&quotient, &p).unwrap()).unwrap();
            let gauge = GroupElement::circle(GroupSpec::U1, chi2 - chi1);
            let expect = rep_apply(&rho, &gauge, &f2).unwrap();
            assert!(f1.sub(&expect).norm() < 1e-10);
        }
    }
}
