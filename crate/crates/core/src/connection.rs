//! Principal connections on G -> G/H: classification of the invariant ones
//! through their restriction to the identity, construction from that
//! restriction, pointwise evaluation, and the defining/invariance checks.

use crate::bundle::Quotient;
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::groups::{adjoint, AlgebraElement, GroupElement, GroupSpec, TangentVector};
use crate::sample::{sample_algebra, sample_group, sample_subgroup, seeded_rng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance for the identity-block condition (ii).
pub const COND_II_TOL: f64 = 1e-12;
/// Tolerance for the adjoint-intertwining condition (i).
pub const COND_I_TOL: f64 = 1e-9;

/// A linear map from the algebra of G onto the stabiliser algebra,
/// candidate restriction-at-identity of an invariant connection.
#[derive(Clone, Debug, PartialEq)]
pub struct WangMap {
    pub quotient: Quotient,
    /// Row-major `dim_h x dim_g` coefficient matrix in the frozen bases.
    pub coeffs: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct WangResiduals {
    pub cond_i: f64,
    pub cond_ii: f64,
}

/// Outcome of [`wang_check`].
#[derive(Clone, Debug, Serialize)]
pub struct WangReport {
    pub pass: bool,
    pub residuals: WangResiduals,
    /// Stabiliser element realising the worst condition (i) residual.
    pub witness: Option<GroupElement>,
    pub violations: Vec<String>,
}

impl WangMap {
    pub fn new(quotient: Quotient, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&quotient, &coeffs)?;
        Ok(WangMap { quotient, coeffs })
    }

    /// The map whose kernel is the orthogonal complement of the stabiliser
    /// block: identity on the stabiliser generators, zero elsewhere. On
    /// SO(3) this is the unique admissible map.
    pub fn canonical(quotient: Quotient) -> Self {
        let dim_g = quotient.group_spec().dim_g();
        let mut coeffs = vec![vec![0.0; dim_g]; quotient.dim_h()];
        for (row, idx) in quotient.h_indices().iter().enumerate() {
            coeffs[row][*idx] = 1.0;
        }
        WangMap { quotient, coeffs }
    }

    /// Apply the linear map to an algebra element of G, producing
    /// stabiliser components.
    pub fn apply(&self, a: &AlgebraElement) -> Coords {
        debug_assert_eq!(a.spec, self.quotient.group_spec());
        self.coeffs
            .iter()
            .map(|row| row.iter().zip(a.comps.as_slice()).map(|(c, x)| c * x).sum())
            .collect()
    }

    /// Indices of the free (learnable) entries: everything outside the
    /// forced identity block.
    pub fn free_entries(&self) -> Vec<(usize, usize)> {
        let h_cols = self.quotient.h_indices();
        let mut free = Vec::new();
        for row in 0..self.coeffs.len() {
            for col in 0..self.coeffs[row].len() {
                if !h_cols.contains(&col) {
                    free.push((row, col));
                }
            }
        }
        free
    }
}

fn check_shape(quotient: &Quotient, coeffs: &[Vec<f64>]) -> Result<()> {
    let want_rows = quotient.dim_h();
    let want_cols = quotient.group_spec().dim_g();
    let got_rows = coeffs.len();
    let got_cols = coeffs.first().map_or(0, Vec::len);
    if got_rows != want_rows || coeffs.iter().any(|row| row.len() != want_cols) {
        return Err(Error::ShapeMismatch {
            got_rows,
            got_cols,
            want_rows,
            want_cols,
        });
    }
    Ok(())
}

/// Check a candidate coefficient matrix against the two conditions that
/// classify invariant connections: (i) it intertwines the adjoint action
/// of the stabiliser, (ii) it restricts to the identity on the stabiliser
/// block. Condition (i) is sampled over 100 seeded stabiliser elements
/// plus fixed probe angles.
pub fn wang_check(quotient: Quotient, coeffs: &[Vec<f64>]) -> Result<WangReport> {
    check_shape(&quotient, coeffs)?;
    let candidate = WangMap {
        quotient,
        coeffs: coeffs.to_vec(),
    };
    let spec = quotient.group_spec();
    let h_indices = quotient.h_indices();

    let mut cond_ii = 0.0f64;
    for (row, idx) in h_indices.iter().enumerate() {
        for col in 0..spec.dim_g() {
            let want = if col == *idx { 1.0 } else { 0.0 };
            // Only stabiliser columns participate in condition (ii).
            if h_indices.contains(&col) {
                cond_ii = cond_ii.max((coeffs[row][col] - want).abs());
            }
        }
    }

    let mut cond_i = 0.0f64;
    let mut witness = None;
    let mut rng = seeded_rng(42);
    let mut probes: Vec<GroupElement> = [PI / 2.0, PI, 2.0 * PI / 3.0, 0.1]
        .iter()
        .map(|angle| quotient.h_embed(&[*angle]))
        .collect();
    probes.extend((0..100).map(|_| {
        let h = sample_subgroup(&quotient, &mut rng);
        quotient.h_embed(&h.coords)
    }));

    for h in probes {
        for k in 0..spec.dim_g() {
            let mut basis = Coords::zeros(spec.dim_g());
            basis[k] = 1.0;
            let e_k = AlgebraElement { spec, comps: basis };
            let lhs = candidate.apply(&adjoint(&h, &e_k)?);
            let rhs_g = adjoint(&h, &quotient.h_algebra_embed(&candidate.apply(&e_k)))?;
            let rhs: Coords = h_indices.iter().map(|i| rhs_g.comps[*i]).collect();
            let residual = lhs.max_abs_diff(&rhs);
            if residual > cond_i {
                cond_i = residual;
                witness = Some(h);
            }
        }
    }

    let mut violations = Vec::new();
    if cond_i > COND_I_TOL {
        violations.push(format!(
            "condition (i): adjoint intertwining residual {cond_i:.3e}"
        ));
    }
    if cond_ii > COND_II_TOL {
        violations.push(format!(
            "condition (ii): stabiliser block deviates from the identity by {cond_ii:.3e}"
        ));
    }
    Ok(WangReport {
        pass: violations.is_empty(),
        residuals: WangResiduals {
            cond_i,
            cond_ii,
        },
        witness: if cond_i > COND_I_TOL { witness } else { None },
        violations,
    })
}

/// An evaluatable stabiliser-valued connection 1-form on G.
#[derive(Clone, Debug, PartialEq)]
pub enum ConnectionForm {
    /// Invariant connection pulled back from its restriction at the
    /// identity: `omega_g = Lambda . (L_{g^{-1}})_*`.
    FromWang(WangMap),
    /// `omega = sum_i c_i(p) dx^i + (identity on the stabiliser block)`,
    /// with coefficients depending on the base point only. Available on
    /// the quotients with flat coordinates; on SO(3) only invariant
    /// connections are constructible.
    CoefficientField {
        quotient: Quotient,
        coeffs: Vec<ScalarField>,
    },
}

impl ConnectionForm {
    /// Build the invariant connection of a coefficient matrix, verifying
    /// the classification conditions first.
    pub fn from_wang(map: WangMap) -> Result<Self> {
        let report = wang_check(map.quotient, &map.coeffs)?;
        if !report.pass {
            return Err(Error::WangViolation(report.violations.join("; ")));
        }
        Ok(ConnectionForm::FromWang(map))
    }

    /// The unique invariant connection on SO(3) -> S2, or the zero-slope
    /// member of the invariant family on the flat quotients.
    pub fn canonical(quotient: Quotient) -> Self {
        ConnectionForm::FromWang(WangMap::canonical(quotient))
    }

    /// Coefficient-function connection on a flat quotient.
    pub fn coefficient_field(quotient: Quotient, coeffs: Vec<ScalarField>) -> Result<Self> {
        let base_dims = quotient.group_spec().dim_g() - quotient.dim_h();
        match quotient {
            Quotient::R2xU1OverR2 | Quotient::R2OverR1 | Quotient::Trivial(_) => {
                if coeffs.len() != base_dims {
                    return Err(Error::Config(format!(
                        "coefficient connection needs {base_dims} coefficient functions, got {}",
                        coeffs.len()
                    )));
                }
                Ok(ConnectionForm::CoefficientField { quotient, coeffs })
            }
            Quotient::So3OverS2 => Err(Error::Config(
                "coefficient-field connections are not constructible on SO(3); use the invariant form".into(),
            )),
        }
    }

    pub fn quotient(&self) -> Quotient {
        match self {
            ConnectionForm::FromWang(map) => map.quotient,
            ConnectionForm::CoefficientField { quotient, .. } => *quotient,
        }
    }

    /// Evaluate the form on a tangent vector, producing an element of the
    /// stabiliser algebra (in stabiliser coordinates).
    pub fn eval(&self, x: &TangentVector) -> Result<AlgebraElement> {
        let quotient = self.quotient();
        if x.at.spec != quotient.group_spec() {
            return Err(Error::SpecMismatch(format!(
                "connection on {:?} evaluated at {:?}",
                quotient.group_spec(),
                x.at.spec
            )));
        }
        let comps = match self {
            ConnectionForm::FromWang(map) => map.apply(&x.to_algebra_at_identity()),
            ConnectionForm::CoefficientField { quotient, coeffs } => {
                let p = quotient.project(&x.at)?;
                let h_indices = quotient.h_indices();
                let mut base_axis = 0;
                let mut value = 0.0;
                for (axis, comp) in x.rep.as_slice().iter().enumerate() {
                    if h_indices.contains(&axis) {
                        value += comp;
                    } else {
                        value += coeffs[base_axis].eval(&p.coords) * comp;
                        base_axis += 1;
                    }
                }
                if quotient.dim_h() == 0 {
                    Coords::zeros(0)
                } else {
                    Coords::from([value])
                }
            }
        };
        Ok(AlgebraElement {
            spec: quotient.h_spec(),
            comps,
        })
    }

    /// Maximal residual of the vertical-normalization condition
    /// `omega(A^#(g)) = A` over seeded samples.
    pub fn vertical_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let quotient = self.quotient();
        let spec = quotient.group_spec();
        let mut rng = seeded_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let g = sample_group(spec, &mut rng);
            let a = sample_algebra(quotient.h_spec(), &mut rng);
            let fundamental =
                TangentVector::left_translated(&g, &quotient.h_algebra_embed(&a.comps))?;
            let value = self.eval(&fundamental)?;
            worst = worst.max(value.comps.max_abs_diff(&a.comps));
        }
        Ok(worst)
    }

    /// Maximal residual of the right-equivariance condition
    /// `R_h^* omega = Ad_{h^{-1}} omega` over seeded samples.
    pub fn right_equivariance_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let quotient = self.quotient();
        let spec = quotient.group_spec();
        let mut rng = seeded_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let g = sample_group(spec, &mut rng);
            let h = quotient.h_embed(&sample_subgroup(&quotient, &mut rng).coords);
            let x = TangentVector::left_translated(&g, &sample_algebra(spec, &mut rng))?;
            let lhs = self.eval(&crate::groups::push_right(&h, &x)?)?;
            let omega_x = self.eval(&x)?;
            let rhs_g = adjoint(
                &crate::groups::inverse(&h),
                &quotient.h_algebra_embed(&omega_x.comps),
            )?;
            let rhs: Coords = quotient.h_indices().iter().map(|i| rhs_g.comps[*i]).collect();
            worst = worst.max(lhs.comps.max_abs_diff(&rhs));
        }
        Ok(worst)
    }

    /// Maximal splitting residual: `X - (vertical lift of omega(X))` must
    /// lie in the kernel of the form.
    pub fn splitting_residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let quotient = self.quotient();
        let spec = quotient.group_spec();
        let mut rng = seeded_rng(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let g = sample_group(spec, &mut rng);
            let x = TangentVector::left_translated(&g, &sample_algebra(spec, &mut rng))?;
            let v = self.eval(&x)?;
            let vertical = TangentVector::left_translated(&g, &quotient.h_algebra_embed(&v.comps))?;
            let horizontal = TangentVector {
                at: x.at,
                rep: x.rep.sub(&vertical.rep),
            };
            worst = worst.max(self.eval(&horizontal)?.comps.norm());
        }
        Ok(worst)
    }
}

/// Outcome of [`invariance_check`].
#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub residual: f64,
    /// `(g, g', X)` realising the worst residual.
    pub worst_witness: Option<(GroupElement, GroupElement, TangentVector)>,
}

/// Residual of left invariance, `max |omega_{g g'}((L_g)_* X) - omega_{g'}(X)|`
/// over seeded samples of `(g, g', X)`.
pub fn invariance_check(
    form: &ConnectionForm,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let quotient = form.quotient();
    let spec = quotient.group_spec();
    let mut rng = seeded_rng(seed);
    let mut report = InvarianceReport {
        residual: 0.0,
        worst_witness: None,
    };
    for _ in 0..samples {
        let g = sample_group(spec, &mut rng);
        let g_prime = sample_group(spec, &mut rng);
        let x = TangentVector::left_translated(&g_prime, &sample_algebra(spec, &mut rng))?;
        let residual = invariance_residual_at(form, &g, &x)?;
        if residual > report.residual {
            report.residual = residual;
            report.worst_witness = Some((g, g_prime, x));
        }
    }
    Ok(report)
}

/// Invariance residual at one planted witness `(g, X at g')`.
pub fn invariance_residual_at(
    form: &ConnectionForm,
    g: &GroupElement,
    x: &TangentVector,
) -> Result<f64> {
    let pushed = crate::groups::push_left(g, x)?;
    let lhs = form.eval(&pushed)?;
    let rhs = form.eval(x)?;
    Ok(lhs.comps.max_abs_diff(&rhs.comps))
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WireWang {
    group: String,
    coeffs: Vec<Vec<f64>>,
}

impl Serialize for WangMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireWang {
            group: self.quotient.group_spec().kind_str().to_string(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WangMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = WireWang::deserialize(d)?;
        let spec = match wire.group.as_str() {
            "rn" | "r2" => GroupSpec::TranslationRn(2),
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
        let quotient = Quotient::registered_for(spec).map_err(serde::de::Error::custom)?;
        WangMap::new(quotient, wire.coeffs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::BasePoint;
    use crate::groups::exp;

    #[test]
    fn planar_family_passes_for_any_slope() {
        // Lambda = [a, 1] passes for every a; b != 1 fails condition (ii).
        for a in [-3.0, 0.0, 0.5, 2.0] {
            let report = wang_check(Quotient::R2OverR1, &[vec![a, 1.0]]).unwrap();
            assert!(report.pass, "a = {a}: {report:?}");
        }
        let report = wang_check(Quotient::R2OverR1, &[vec![0.3, 0.7]]).unwrap();
        assert!(!report.pass);
        assert!((report.residuals.cond_ii - 0.3).abs() < 1e-15);
    }

    #[test]
    fn so3_condition_i_fails_off_axis() {
        let report = wang_check(Quotient::So3OverS2, &[vec![1.0, 0.2, 0.0]]).unwrap();
        assert!(!report.pass);
        assert!(report.residuals.cond_i > 0.1);
        assert!(report.witness.is_some());
    }

    #[test]
    fn so3_direct_witness_residual() {
        // At h = exp((pi/2) X1): Lambda(Ad_h X2) = c3 = 0 while
        // Ad_h(Lambda X2) = c2 = 0.2, so the residual is exactly 0.2.
        let map = WangMap::new(Quotient::So3OverS2, vec![vec![1.0, 0.2, 0.0]]).unwrap();
        let h = Quotient::So3OverS2.h_embed(&[PI / 2.0]);
        let x2 = AlgebraElement::new(GroupSpec::SO3, Coords::from([0.0, 1.0, 0.0])).unwrap();
        let lhs = map.apply(&adjoint(&h, &x2).unwrap());
        let rhs_g = adjoint(&h, &Quotient::So3OverS2.h_algebra_embed(&map.apply(&x2))).unwrap();
        let residual = (lhs[0] - rhs_g.comps[0]).abs();
        assert!((residual - 0.2).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        match wang_check(Quotient::So3OverS2, &[vec![1.0, 0.0]]) {
            Err(Error::ShapeMismatch { .. }) => {}
            other => panic!("expected ShapeMismatch, got {other:?}"),
        }
    }

    #[test]
    fn product_connection_evaluates_like_a_constant_form() {
        // Lambda = [pi, 1, 1]: the form pi dx + dy + dtheta.
        let map = WangMap::new(Quotient::R2xU1OverR2, vec![vec![PI, 1.0, 1.0]]).unwrap();
        let form = ConnectionForm::from_wang(map).unwrap();
        let g = GroupElement::product_r2xu1(0.7, -0.3, 1.9);
        let dx = TangentVector {
            at: g,
            rep: Coords::from([1.0, 0.0, 0.0]),
        };
        let value = form.eval(&dx).unwrap();
        assert!((value.comps[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn canonical_so3_connection_normalizes_vertical_vectors() {
        let form = ConnectionForm::canonical(Quotient::So3OverS2);
        let b = -0.85;
        let g = exp(&AlgebraElement::new(GroupSpec::SO3, Coords::from([0.2, 0.9, -0.1])).unwrap());
        let vertical = TangentVector::left_translated(
            &g,
            &Quotient::So3OverS2.h_algebra_embed(&[b]),
        )
        .unwrap();
        let value = form.eval(&vertical).unwrap();
        assert!((value.comps[0] - b).abs() < 1e-12);
    }

    #[test]
    fn coefficient_connection_evaluates_base_functions() {
        // omega = dtheta + f(y) dy with f(y) = y^2, at (0, 2, 0) on dy.
        let form = ConnectionForm::coefficient_field(
            Quotient::R2xU1OverR2,
            vec![
                ScalarField::constant(0.0),
                ScalarField::Power {
                    coord: 1,
                    amp: 1.0,
                    exponent: 2,
                },
            ],
        )
        .unwrap();
        let g = GroupElement::product_r2xu1(0.0, 2.0, 0.0);
        let dy = TangentVector {
            at: g,
            rep: Coords::from([0.0, 1.0, 0.0]),
        };
        assert!((form.eval(&dy).unwrap().comps[0] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn wang_connections_are_invariant() {
        for form in [
            ConnectionForm::canonical(Quotient::So3OverS2),
            ConnectionForm::from_wang(
                WangMap::new(Quotient::R2xU1OverR2, vec![vec![PI, 1.0, 1.0]]).unwrap(),
            )
            .unwrap(),
        ] {
            let report = invariance_check(&form, 100, 42).unwrap();
            assert!(report.residual <= 1e-9, "residual {}", report.residual);
        }
    }

    #[test]
    fn nonconstant_coefficient_connection_fails_invariance() {
        // omega = dtheta + sin(y) dy.
        let form = ConnectionForm::coefficient_field(
            Quotient::R2xU1OverR2,
            vec![ScalarField::constant(0.0), ScalarField::sin_of(1)],
        )
        .unwrap();
        let report = invariance_check(&form, 200, 42).unwrap();
        assert!(report.residual > 0.1);

        // Planted witness: shift y by beta and compare against the closed
        // form |sin(y + beta) - sin(y)| * |v_y|.
        let g = GroupElement::product_r2xu1(0.0, PI, 0.0);
        let base = GroupElement::product_r2xu1(0.0, PI / 2.0, 0.0);
        let x = TangentVector {
            at: base,
            rep: Coords::from([0.0, 1.0, 0.0]),
        };
        let residual = invariance_residual_at(&form, &g, &x).unwrap();
        let expect = ((PI / 2.0 + PI).sin() - (PI / 2.0).sin()).abs();
        assert!((residual - expect).abs() < 1e-12);
    }

    #[test]
    fn constant_coefficient_connection_is_invariant() {
        let form = ConnectionForm::coefficient_field(
            Quotient::R2xU1OverR2,
            vec![ScalarField::constant(0.4), ScalarField::constant(-1.1)],
        )
        .unwrap();
        let report = invariance_check(&form, 100, 42).unwrap();
        assert!(report.residual <= 1e-12);
    }

    #[test]
    fn from_wang_rejects_violating_maps() {
        let map = WangMap::new(Quotient::So3OverS2, vec![vec![1.0, 0.5, 0.0]]).unwrap();
        match ConnectionForm::from_wang(map) {
            Err(Error::WangViolation(_)) => {}
            other => panic!("expected WangViolation, got {other:?}"),
        }
    }

    #[test]
    fn defining_conditions_hold_for_all_constructed_forms() {
        let forms = [
            ConnectionForm::canonical(Quotient::So3OverS2),
            ConnectionForm::from_wang(
                WangMap::new(Quotient::R2xU1OverR2, vec![vec![PI, 1.0, 1.0]]).unwrap(),
            )
            .unwrap(),
            ConnectionForm::coefficient_field(
                Quotient::R2xU1OverR2,
                vec![ScalarField::constant(0.0), ScalarField::sin_of(1)],
            )
            .unwrap(),
        ];
        for form in forms {
            assert!(form.vertical_residual(100, 7).unwrap() <= 1e-9);
            assert!(form.right_equivariance_residual(100, 8).unwrap() <= 1e-9);
            assert!(form.splitting_residual(100, 9).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn wang_map_restriction_roundtrip() {
        // Evaluating the constructed form on basis tangents at the identity
        // recovers the coefficient matrix entrywise.
        let map = WangMap::new(Quotient::R2xU1OverR2, vec![vec![0.37, -2.0, 1.0]]).unwrap();
        let form = ConnectionForm::from_wang(map.clone()).unwrap();
        let e = GroupElement::identity(GroupSpec::ProductR2xU1);
        for col in 0..3 {
            let mut rep = Coords::zeros(3);
            rep[col] = 1.0;
            let value = form.eval(&TangentVector { at: e, rep }).unwrap();
            assert!((value.comps[0] - map.coeffs[0][col]).abs() < 1e-12);
        }
    }

    #[test]
    fn wang_serialization_roundtrip() {
        let map = WangMap::new(Quotient::R2xU1OverR2, vec![vec![PI, 1.0, 1.0]]).unwrap();
        let text = serde_json::to_string(&map).unwrap();
        assert!(text.contains("\"group\":\"r2xu1\""));
        let back: WangMap = serde_json::from_str(&text).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn coefficient_point_for_base_point_eval() {
        // Coefficient connections read their functions at the projected
        // base point, independent of the fibre coordinate.
        let form = ConnectionForm::coefficient_field(
            Quotient::R2OverR1,
            vec![ScalarField::cos_of(0)],
        )
        .unwrap();
        let p = BasePoint::on_line(0.3);
        let _ = p;
        for y in [0.0, 1.0, -2.0] {
            let g = GroupElement::translation(&[0.3, y]);
            let dx = TangentVector {
                at: g,
                rep: Coords::from([1.0, 0.0]),
            };
            assert!((form.eval(&dx).unwrap().comps[0] - 0.3f64.cos()).abs() < 1e-15);
        }
    }
}
