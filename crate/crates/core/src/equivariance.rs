//! Statistical verification of equivariance: the global check on sampled
//! group elements, the local steering-compatibility condition, and the
//! suite demonstrating that an equivariant model does not force an
//! invariant connection.

use crate::bundle::BasePoint;
use crate::connection::{invariance_check, ConnectionForm};
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::features::{induced_left_action, rep_distance};
use crate::fields::{ScalarField, VectorFieldSpec};
use crate::groups::{compose, GroupElement};
use crate::sample::{sample_base_point, sample_group, sample_unit_feature, seeded_rng};
use crate::transport::SteerableModel;
use crate::{BaseSpace, Quotient, Representation, SectionChart};
use serde::Serialize;

/// One sampled triple together with the residuals it produced.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub g: GroupElement,
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub base_residual: f64,
    pub fibre_residual: f64,
}

/// Outcome of [`check_equivariance`].
#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceReport {
    pub samples: usize,
    /// max distance between the two base outputs
    pub base_residual: f64,
    /// max distance between the two feature outputs
    pub fibre_residual: f64,
    /// max deviation in the local steering-compatibility condition,
    /// measured after applying the representation
    pub local_condition_residual: f64,
    /// worst-case triples (by base and by fibre residual)
    pub witnesses: Vec<Witness>,
}

fn witness_from(
    g: &GroupElement,
    p: &BasePoint,
    v: &Coords,
    base_residual: f64,
    fibre_residual: f64,
) -> Witness {
    Witness {
        g: *g,
        p: p.coords.to_vec(),
        v: v.to_vec(),
        base_residual,
        fibre_residual,
    }
}

/// Both residuals of one triple: compares `L_g Psi(p, v)` against
/// `Psi(L_g (p, v))` under the induced action on M x V.
pub fn equivariance_residual_at(
    model: &SteerableModel,
    g: &GroupElement,
    p: &BasePoint,
    v: &Coords,
) -> Result<(f64, f64)> {
    let (q, w) = model.apply(p, v)?;
    let (lhs_base, lhs_feature) =
        induced_left_action(&model.quotient, &model.chart, &model.rep, g, &q, &w)?;
    let (gp, gv) = induced_left_action(&model.quotient, &model.chart, &model.rep, g, p, v)?;
    let (rhs_base, rhs_feature) = model.apply(&gp, &gv)?;
    Ok((
        lhs_base.distance(&rhs_base),
        lhs_feature.sub(&rhs_feature).norm(),
    ))
}

/// Residual of the local condition at one triple: the stabiliser words
/// `c(g, Phi_p(1)) h_p(1)` and `h_{gp}(1) c(g, p)` must agree after the
/// representation is applied (kernel elements are quotiented out).
pub fn local_condition_residual_at(
    model: &SteerableModel,
    g: &GroupElement,
    p: &BasePoint,
) -> Result<f64> {
    let v = Coords::zeros(model.rep.dim_v());
    let result = model.transport(p, &v, 1.0)?;
    let end = result.base_path[result.base_path.len() - 1];
    let h_p = result.steer_path[result.steer_path.len() - 1];

    let gp = model.quotient.left_act(g, p)?;
    let result_g = model.transport(&gp, &v, 1.0)?;
    let h_gp = result_g.steer_path[result_g.steer_path.len() - 1];

    let c_end = model.chart.cocycle(&model.quotient, g, &end)?;
    let c_start = model.chart.cocycle(&model.quotient, g, p)?;
    let lhs = compose(&c_end, &h_p)?;
    let rhs = compose(&h_gp, &c_start)?;
    rep_distance(&model.rep, &lhs, &rhs)
}

fn sample_loop<T>(
    model: &SteerableModel,
    samples: usize,
    seed: u64,
    mut body: impl FnMut(&GroupElement, &BasePoint, &Coords) -> Result<T>,
    mut accept: impl FnMut(T),
) -> Result<()> {
    let mut rng = seeded_rng(seed);
    let mut accepted = 0;
    let mut consecutive_failures = 0;
    while accepted < samples {
        let g = sample_group(model.quotient.group_spec(), &mut rng);
        let p = sample_base_point(model.quotient.base_space(), &mut rng);
        let v = sample_unit_feature(model.rep.dim_v(), &mut rng);
        match body(&g, &p, &v) {
            Ok(value) => {
                accept(value);
                accepted += 1;
                consecutive_failures = 0;
            }
            // Outside the chart somewhere along either trajectory: redraw.
            Err(Error::OutsideChart(_)) | Err(Error::LeftChartDomain { .. }) => {
                consecutive_failures += 1;
                if consecutive_failures >= 1000 {
                    return Err(Error::ChartExhausted(consecutive_failures));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Sample `(g, p, v)` triples and compare the two ways around the
/// equivariance square, resampling triples that leave the chart.
pub fn check_equivariance(
    model: &SteerableModel,
    samples: usize,
    seed: u64,
) -> Result<EquivarianceReport> {
    let mut report = EquivarianceReport {
        samples,
        base_residual: 0.0,
        fibre_residual: 0.0,
        local_condition_residual: 0.0,
        witnesses: Vec::new(),
    };
    let mut worst_base: Option<Witness> = None;
    let mut worst_fibre: Option<Witness> = None;
    sample_loop(
        model,
        samples,
        seed,
        |g, p, v| {
            let (base, fibre) = equivariance_residual_at(model, g, p, v)?;
            let local = local_condition_residual_at(model, g, p)?;
            Ok((witness_from(g, p, v, base, fibre), local))
        },
        |(witness, local)| {
            if witness.base_residual >= report.base_residual {
                report.base_residual = witness.base_residual;
                worst_base = Some(witness.clone());
            }
            if witness.fibre_residual >= report.fibre_residual {
                report.fibre_residual = witness.fibre_residual;
                worst_fibre = Some(witness.clone());
            }
            report.local_condition_residual = report.local_condition_residual.max(local);
        },
    )?;
    report.witnesses.extend(worst_base);
    report.witnesses.extend(worst_fibre);
    Ok(report)
}

/// Maximal residual of the local condition over sampled `(g, p)`.
pub fn check_local_condition(model: &SteerableModel, samples: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    sample_loop(
        model,
        samples,
        seed,
        |g, p, _v| local_condition_residual_at(model, g, p),
        |r| worst = worst.max(r),
    )?;
    Ok(worst)
}

/// Invariance residual of the base vector field,
/// `max |(L_g)_* phi_p - phi_{gp}|` over sampled `(g, p)`.
pub fn field_invariance_residual(
    model: &SteerableModel,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    sample_loop(
        model,
        samples,
        seed,
        |g, p, _v| {
            let v_p = model.field.evaluate(p);
            let pushed = match model.quotient {
                // Translations push coordinates forward unchanged.
                Quotient::R2xU1OverR2 | Quotient::R2OverR1 | Quotient::Trivial(_) => v_p,
                Quotient::So3OverS2 => {
                    let m = crate::groups::so3_coords_to_matrix(&g.coords);
                    let w = m * nalgebra::Vector3::new(v_p[0], v_p[1], v_p[2]);
                    Coords::from([w[0], w[1], w[2]])
                }
            };
            let gp = model.quotient.left_act(g, p)?;
            Ok(pushed.sub(&model.field.evaluate(&gp)).norm())
        },
        |r| worst = worst.max(r),
    )?;
    Ok(worst)
}

/// Outcome of [`counterexample_suite`]: an equivariant model built on a
/// connection that is itself not invariant.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    /// invariance residual of the connection over sampled witnesses
    pub connection_invariance_residual: f64,
    /// residual at the planted witness (y-shift by pi from y = pi/2)
    pub planted_invariance_residual: f64,
    pub connection_is_invariant: bool,
    pub base_residual: f64,
    pub fibre_residual: f64,
    pub node_is_equivariant: bool,
}

/// Build `omega = dtheta + f(y) dy` with `phi = dx` on the product bundle
/// and report the split verdict: the connection fails invariance while the
/// resulting steerable map passes equivariance (the flow direction is
/// horizontal for every `f`).
pub fn counterexample_suite_with(
    f: ScalarField,
    samples: usize,
    seed: u64,
) -> Result<CounterexampleReport> {
    let quotient = Quotient::R2xU1OverR2;
    let connection = ConnectionForm::coefficient_field(
        quotient,
        vec![ScalarField::constant(0.0), f],
    )?;

    let invariance = invariance_check(&connection, samples.max(200), seed)?;

    // Planted witness: shift y by pi starting from y = pi/2 along dy.
    let g = GroupElement::product_r2xu1(0.0, std::f64::consts::PI, 0.0);
    let x = crate::groups::TangentVector {
        at: GroupElement::product_r2xu1(0.0, std::f64::consts::PI / 2.0, 0.0),
        rep: Coords::from([0.0, 1.0, 0.0]),
    };
    let planted = crate::connection::invariance_residual_at(&connection, &g, &x)?;

    let model = SteerableModel::new(
        quotient,
        SectionChart::constant_angle(0.0),
        VectorFieldSpec::constant(BaseSpace::R2, &[1.0, 0.0]),
        connection,
        Representation::Rot2,
        256,
    )?;
    let equivariance = check_equivariance(&model, samples, seed)?;

    Ok(CounterexampleReport {
        connection_invariance_residual: invariance.residual,
        planted_invariance_residual: planted,
        connection_is_invariant: invariance.residual.max(planted) <= 1e-9,
        base_residual: equivariance.base_residual,
        fibre_residual: equivariance.fibre_residual,
        node_is_equivariant: equivariance.base_residual <= 1e-7
            && equivariance.fibre_residual <= 1e-7,
    })
}

/// The suite with the default non-constant coefficient `f(y) = sin y`.
pub fn counterexample_suite() -> Result<CounterexampleReport> {
    counterexample_suite_with(ScalarField::sin_of(1), 100, 42)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::WangMap;
    use crate::groups::{circular_distance, GroupSpec};
    use std::f64::consts::PI;

    fn invariant_product_model(steps: usize) -> SteerableModel {
        let quotient = Quotient::R2xU1OverR2;
        SteerableModel::new(
            quotient,
            SectionChart::constant_angle(0.0),
            VectorFieldSpec::constant(BaseSpace::R2, &[1.0, 0.0]),
            ConnectionForm::from_wang(
                WangMap::new(quotient, vec![vec![PI, 1.0, 1.0]]).unwrap(),
            )
            .unwrap(),
            Representation::Rot2,
            steps,
        )
        .unwrap()
    }

    #[test]
    fn invariant_model_is_equivariant() {
        let model = invariant_product_model(256);
        let report = check_equivariance(&model, 50, 42).unwrap();
        assert!(report.base_residual <= 1e-7, "base {}", report.base_residual);
        assert!(
            report.fibre_residual <= 1e-7,
            "fibre {}",
            report.fibre_residual
        );
        assert!(
            report.local_condition_residual <= 1e-7,
            "local {}",
            report.local_condition_residual
        );
    }

    #[test]
    fn zero_field_model_is_equivariant_for_any_connection() {
        let quotient = Quotient::R2xU1OverR2;
        let model = SteerableModel::new(
            quotient,
            SectionChart::constant_angle(0.0),
            VectorFieldSpec::zero(BaseSpace::R2),
            ConnectionForm::coefficient_field(
                quotient,
                vec![ScalarField::sin_of(0), ScalarField::sin_of(1)],
            )
            .unwrap(),
            Representation::Rot2,
            64,
        )
        .unwrap();
        let report = check_equivariance(&model, 50, 42).unwrap();
        assert!(report.base_residual <= 1e-10);
        assert!(report.fibre_residual <= 1e-10);
    }

    #[test]
    fn non_invariant_field_is_flagged_with_the_planted_witness() {
        // phi = x dx has flow x(t) = x e^t; acting first with g = (1, 0, 0)
        // mismatches the endpoint by alpha (e - 1).
        let quotient = Quotient::R2xU1OverR2;
        let model = SteerableModel::new(
            quotient,
            SectionChart::constant_angle(0.0),
            VectorFieldSpec::coefficient(
                BaseSpace::R2,
                vec![
                    ScalarField::Power {
                        coord: 0,
                        amp: 1.0,
                        exponent: 1,
                    },
                    ScalarField::constant(0.0),
                ],
            ),
            ConnectionForm::from_wang(
                WangMap::new(quotient, vec![vec![0.0, 0.0, 1.0]]).unwrap(),
            )
            .unwrap(),
            Representation::Rot2,
            256,
        )
        .unwrap();

        let g = GroupElement::product_r2xu1(1.0, 0.0, 0.0);
        let p = BasePoint::on_plane(0.0, 0.0);
        let v = Coords::from([1.0, 0.0]);
        let (base, _fibre) = equivariance_residual_at(&model, &g, &p, &v).unwrap();
        let expected = std::f64::consts::E - 1.0;
        assert!(
            (base - expected).abs() < 1e-6,
            "planted base residual {base}, expected {expected}"
        );

        let report = check_equivariance(&model, 30, 42).unwrap();
        assert!(report.base_residual > 0.1);
        assert!(field_invariance_residual(&model, 100, 42).unwrap() > 0.1);
    }

    #[test]
    fn invariant_field_has_zero_invariance_residual() {
        let model = invariant_product_model(16);
        assert!(field_invariance_residual(&model, 100, 42).unwrap() <= 1e-12);
    }

    #[test]
    fn local_condition_holds_for_the_invariant_model() {
        let model = invariant_product_model(256);
        let residual = check_local_condition(&model, 50, 42).unwrap();
        assert!(residual <= 1e-7, "residual {residual}");
    }

    #[test]
    fn trivial_representation_hides_every_mismatch() {
        // ker rho = H: the local condition is vacuous under the trivial
        // representation even with a wildly non-invariant connection.
        let quotient = Quotient::R2xU1OverR2;
        let model = SteerableModel::new(
            quotient,
            SectionChart::constant_angle(0.0),
            VectorFieldSpec::constant(BaseSpace::R2, &[1.0, 0.0]),
            ConnectionForm::coefficient_field(
                quotient,
                vec![ScalarField::sin_of(0), ScalarField::sin_of(1)],
            )
            .unwrap(),
            Representation::Trivial { dim: 2 },
            64,
        )
        .unwrap();
        let residual = check_local_condition(&model, 50, 42).unwrap();
        assert_eq!(residual, 0.0);
    }

    #[test]
    fn weighted_representation_quotients_out_half_turns() {
        // exp(pi X) is in ker rho for weight 2: invisible after rho,
        // visible before.
        let rho = Representation::Weighted { n: 2 };
        let h1 = GroupElement::circle(GroupSpec::U1, 0.7);
        let h2 = GroupElement::circle(GroupSpec::U1, 0.7 + PI);
        assert!(rep_distance(&rho, &h1, &h2).unwrap() <= 1e-12);
        assert!(circular_distance(h1.coords[0], h2.coords[0]) > 1.0);
    }

    #[test]
    fn counterexample_splits_the_verdict() {
        for f in [
            ScalarField::sin_of(1),
            ScalarField::Power {
                coord: 1,
                amp: 1.0,
                exponent: 2,
            },
        ] {
            let report = counterexample_suite_with(f, 40, 42).unwrap();
            assert!(!report.connection_is_invariant);
            assert!(report.connection_invariance_residual > 0.1);
            assert!(report.node_is_equivariant, "{report:?}");
        }
    }

    #[test]
    fn constant_coefficient_counterexample_is_invariant() {
        let report =
            counterexample_suite_with(ScalarField::constant(0.7), 40, 42).unwrap();
        assert!(report.connection_is_invariant);
        assert!(report.node_is_equivariant);
    }

    #[test]
    fn witnesses_are_replayable() {
        let model = invariant_product_model(128);
        let report = check_equivariance(&model, 20, 42).unwrap();
        for witness in &report.witnesses {
            let p = BasePoint::new(model.quotient.base_space(), Coords::from_slice(&witness.p))
                .unwrap();
            let v = Coords::from_slice(&witness.v);
            let (base, fibre) = equivariance_residual_at(&model, &witness.g, &p, &v).unwrap();
            assert!((base - witness.base_residual).abs() <= 1e-12);
            assert!((fibre - witness.fibre_residual).abs() <= 1e-12);
        }
    }

    #[test]
    fn chart_exhaustion_is_reported() {
        // An exclusion radius of nearly pi leaves almost no chart.
        let model = SteerableModel::new(
            Quotient::So3OverS2,
            SectionChart::Sphere {
                p0: [1.0, 0.0, 0.0],
                exclusion: PI - 1e-3,
            },
            VectorFieldSpec::rotation_generator([0.0, 0.0, 0.1]),
            ConnectionForm::canonical(Quotient::So3OverS2),
            Representation::Rot2,
            8,
        )
        .unwrap();
        match check_equivariance(&model, 5, 42) {
            Err(Error::ChartExhausted(_)) => {}
            other => panic!("expected ChartExhausted, got {other:?}"),
        }
    }
}
