//! Continuous normalizing flow on a Lie group with trivial stabiliser:
//! divergence with respect to Haar measure and log-density evolution
//! along the flow characteristics.
//!
//! Nodes are transported with the same fourth-order scheme as the base
//! integrator, with the log-density as an extra state component. Mass is
//! re-checked after every run: on the circle the quadrature weights are
//! rebuilt from the pushed node positions (an independent route from the
//! divergence integral), on the flat lines the weights follow the flow by
//! change of variables.

use crate::bundle::{BasePoint, BaseSpace};
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::fields::VectorFieldSpec;
use crate::groups::{GroupElement, GroupSpec};
use crate::sample::{sample_group, seeded_rng};
use std::f64::consts::TAU;

/// Finite-difference step for divergence evaluation.
const DIV_STEP: f64 = 1e-5;

/// Truncation half-width of the flat-line quadrature domain.
const LINE_HALF_WIDTH: f64 = 8.0;

fn base_space_of(group: GroupSpec) -> Result<BaseSpace> {
    match group {
        GroupSpec::U1 | GroupSpec::SO2 => Ok(BaseSpace::Circle),
        GroupSpec::TranslationRn(1) => Ok(BaseSpace::R1),
        GroupSpec::TranslationRn(2) => Ok(BaseSpace::R2),
        other => Err(Error::UnsupportedGroup(format!("{other:?}"))),
    }
}

/// Divergence of the field with respect to Haar measure, by central
/// differences of the coordinate components. On the abelian groups in
/// scope Haar is the coordinate Lebesgue measure, so this is the
/// coordinate divergence.
pub fn divergence(phi: &VectorFieldSpec, g: &GroupElement) -> Result<f64> {
    let space = base_space_of(g.spec)?;
    if phi.space != space {
        return Err(Error::SpecMismatch(format!(
            "field on {:?} evaluated on {:?}",
            phi.space, g.spec
        )));
    }
    Ok(divergence_at(phi, &g.coords))
}

fn divergence_at(phi: &VectorFieldSpec, coords: &Coords) -> f64 {
    let space = phi.space;
    let mut total = 0.0;
    for axis in 0..coords.len() {
        let mut plus = *coords;
        plus[axis] += DIV_STEP;
        let mut minus = *coords;
        minus[axis] -= DIV_STEP;
        let f_plus = phi.evaluate(&BasePoint {
            space,
            coords: plus,
        });
        let f_minus = phi.evaluate(&BasePoint {
            space,
            coords: minus,
        });
        total += (f_plus[axis] - f_minus[axis]) / (2.0 * DIV_STEP);
    }
    total
}

/// Log-density samples along quadrature nodes of the group.
#[derive(Clone, Debug)]
pub struct DensityState {
    pub group: GroupSpec,
    /// Node coordinates; circle angles unwrap as the flow pushes them.
    pub nodes: Vec<Coords>,
    /// Quadrature weights valid at the current node positions.
    pub weights: Vec<f64>,
    pub log_p: Vec<f64>,
    pub time: f64,
}

impl DensityState {
    /// Uniform density on the circle with `n` equispaced nodes (periodic
    /// trapezoid weights).
    pub fn uniform_circle(group: GroupSpec, n: usize) -> Result<Self> {
        if !group.is_circle() {
            return Err(Error::UnsupportedGroup(format!("{group:?}")));
        }
        let h = TAU / n as f64;
        Ok(DensityState {
            group,
            nodes: (0..n).map(|i| Coords::from([i as f64 * h])).collect(),
            weights: vec![h; n],
            log_p: vec![-TAU.ln(); n],
            time: 0.0,
        })
    }

    /// Gaussian density on the line, sampled at `n` Gauss-Legendre nodes of
    /// the truncated domain and renormalized there.
    pub fn gaussian_line(n: usize, mean: f64, sigma: f64) -> Self {
        let (xs, ws) = gauss_legendre(n, -LINE_HALF_WIDTH, LINE_HALF_WIDTH);
        let mut log_p: Vec<f64> = xs
            .iter()
            .map(|x| {
                let z = (x - mean) / sigma;
                -0.5 * z * z - (sigma * (TAU).sqrt()).ln()
            })
            .collect();
        let mass: f64 = ws
            .iter()
            .zip(&log_p)
            .map(|(w, lp)| w * lp.exp())
            .sum();
        let correction = mass.ln();
        for lp in &mut log_p {
            *lp -= correction;
        }
        DensityState {
            group: GroupSpec::TranslationRn(1),
            nodes: xs.iter().map(|x| Coords::from([*x])).collect(),
            weights: ws,
            log_p,
            time: 0.0,
        }
    }

    /// Quadrature of `exp(log_p)` over the current grid.
    pub fn mass(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.log_p)
            .map(|(w, lp)| w * lp.exp())
            .sum()
    }

    fn check_mass(&self) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-4 {
            return Err(Error::NormalizationDrift {
                mass,
                t: self.time,
            });
        }
        Ok(())
    }
}

/// Transport a density state along the field for `horizon` time units with
/// `n` RK4 steps per node, accumulating the log-density.
pub fn integrate_cnf_to(
    phi: &VectorFieldSpec,
    initial: &DensityState,
    horizon: f64,
    n: usize,
) -> Result<DensityState> {
    let space = base_space_of(initial.group)?;
    if phi.space != space {
        return Err(Error::SpecMismatch(format!(
            "field on {:?} flowing a density on {:?}",
            phi.space, initial.group
        )));
    }
    if n == 0 {
        return Err(Error::Config("step count must be at least 1".into()));
    }
    initial.check_mass()?;

    let dt = horizon / n as f64;
    let dim = space.coord_len();
    let mut nodes = Vec::with_capacity(initial.nodes.len());
    let mut log_p = Vec::with_capacity(initial.nodes.len());

    for (node, lp) in initial.nodes.iter().zip(&initial.log_p) {
        // Joint state (coords, log p); the log component integrates
        // -div(phi) along the characteristic with the same scheme.
        let mut y = *node;
        y.push(*lp);
        let rhs = |state: &Coords| -> Coords {
            let coords = Coords::from_slice(&state.as_slice()[..dim]);
            let mut out = phi.evaluate(&BasePoint { space, coords });
            out.push(-divergence_at(phi, &coords));
            out
        };
        for _ in 0..n {
            let k1 = rhs(&y);
            let k2 = rhs(&y.axpy(dt / 2.0, &k1));
            let k3 = rhs(&y.axpy(dt / 2.0, &k2));
            let k4 = rhs(&y.axpy(dt, &k3));
            let mut inc = k1;
            inc = inc.axpy(2.0, &k2);
            inc = inc.axpy(2.0, &k3);
            inc = inc.axpy(1.0, &k4);
            y = y.axpy(dt / 6.0, &inc);
        }
        nodes.push(Coords::from_slice(&y.as_slice()[..dim]));
        log_p.push(y[dim]);
    }

    let weights = match space {
        BaseSpace::Circle => circle_weights_from_nodes(&nodes),
        _ => {
            // Change of variables: the volume factor of the flow is the
            // exponentiated divergence integral.
            initial
                .weights
                .iter()
                .zip(initial.log_p.iter().zip(&log_p))
                .map(|(w, (lp0, lp1))| w * (lp0 - lp1).exp())
                .collect()
        }
    };

    let state = DensityState {
        group: initial.group,
        nodes,
        weights,
        log_p,
        time: initial.time + horizon,
    };
    state.check_mass()?;
    Ok(state)
}

/// [`integrate_cnf_to`] over the unit interval.
pub fn integrate_cnf(phi: &VectorFieldSpec, initial: &DensityState, n: usize) -> Result<DensityState> {
    integrate_cnf_to(phi, initial, 1.0, n)
}

/// Periodic quadrature weights rebuilt from pushed node positions: the
/// weight of a node is half the gap between its neighbours. Node order is
/// preserved by the flow (characteristics do not cross), so the unwrapped
/// angles stay monotone.
fn circle_weights_from_nodes(nodes: &[Coords]) -> Vec<f64> {
    let n = nodes.len();
    let angle = |i: isize| -> f64 {
        let wraps = i.div_euclid(n as isize);
        let idx = i.rem_euclid(n as isize) as usize;
        nodes[idx][0] + wraps as f64 * TAU
    };
    (0..n as isize)
        .map(|i| (angle(i + 1) - angle(i - 1)) / 2.0)
        .collect()
}

/// Residual of the left-invariance condition for equivariant flows,
/// `max |phi(g g') - (L_g)_* phi(g')|` over sampled `g'`. For the abelian
/// groups in scope the push-forward is the identity on components.
pub fn equivariant_cnf_check(
    phi: &VectorFieldSpec,
    g: &GroupElement,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let space = base_space_of(g.spec)?;
    if phi.space != space {
        return Err(Error::SpecMismatch(format!(
            "field on {:?} checked on {:?}",
            phi.space, g.spec
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let g_prime = sample_group(g.spec, &mut rng);
        let shifted = crate::groups::compose(g, &g_prime)?;
        let at = BasePoint {
            space,
            coords: g_prime.coords,
        };
        let at_shifted = BasePoint {
            space,
            coords: shifted.coords,
        };
        worst = worst.max(
            phi.evaluate(&at_shifted)
                .sub(&phi.evaluate(&at))
                .norm(),
        );
    }
    Ok(worst)
}

/// Gauss-Legendre nodes and weights on `[a, b]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    let mid = (a + b) / 2.0;
    let half = (b - a) / 2.0;
    for i in 0..n {
        xs[i] = mid + half * xs[i];
        ws[i] *= half;
    }
    xs.reverse();
    ws.reverse();
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;
    use crate::groups::circular_distance;

    fn sin_field() -> VectorFieldSpec {
        VectorFieldSpec::coefficient(BaseSpace::Circle, vec![ScalarField::sin_of(0)])
    }

    #[test]
    fn divergence_of_the_sine_field() {
        let phi = sin_field();
        let at = |theta: f64| GroupElement::circle(GroupSpec::U1, theta);
        // z' = cos: 1 at 0.
        assert!((divergence(&phi, &at(0.0)).unwrap() - 1.0).abs() < 1e-9);

        // A constant offset does not change the derivative: c + sin(theta)
        // still has divergence -1 at pi.
        let offset = VectorFieldSpec::coefficient(
            BaseSpace::Circle,
            vec![ScalarField::Sum {
                terms: vec![ScalarField::constant(0.37), ScalarField::sin_of(0)],
            }],
        );
        assert!((divergence(&offset, &at(std::f64::consts::PI)).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_fields_are_divergence_free() {
        let phi = VectorFieldSpec::constant(BaseSpace::R2, &[0.3, -0.9]);
        let g = GroupElement::translation(&[1.0, 2.0]);
        assert_eq!(divergence(&phi, &g).unwrap(), 0.0);
    }

    #[test]
    fn divergence_rejects_unsupported_groups() {
        let phi = VectorFieldSpec::rotation_generator([1.0, 0.0, 0.0]);
        let g = GroupElement::identity(GroupSpec::SO3);
        match divergence(&phi, &g) {
            Err(Error::UnsupportedGroup(_)) => {}
            other => panic!("expected UnsupportedGroup, got {other:?}"),
        }
    }

    #[test]
    fn zero_field_keeps_the_state() {
        let phi = VectorFieldSpec::constant(BaseSpace::Circle, &[0.0]);
        let state = DensityState::uniform_circle(GroupSpec::U1, 64).unwrap();
        let out = integrate_cnf(&phi, &state, 64).unwrap();
        for (a, b) in state.nodes.iter().zip(&out.nodes) {
            assert!((a[0] - b[0]).abs() < 1e-15);
        }
        for (a, b) in state.log_p.iter().zip(&out.log_p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sine_flow_matches_the_tangent_half_angle_characteristics() {
        let phi = sin_field();
        let state = DensityState::uniform_circle(GroupSpec::U1, 256).unwrap();
        let out = integrate_cnf(&phi, &state, 512).unwrap();
        for (start, end) in state.nodes.iter().zip(&out.nodes) {
            let theta0 = start[0];
            let expect = 2.0 * (1.0f64.exp() * (theta0 / 2.0).tan()).atan();
            assert!(
                circular_distance(end[0], expect) < 1e-6,
                "theta0 {theta0}: {} vs {expect}",
                end[0]
            );
        }
    }

    #[test]
    fn sine_flow_conserves_mass_and_concentrates() {
        let phi = sin_field();
        let state = DensityState::uniform_circle(GroupSpec::U1, 1024).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let out = integrate_cnf_to(&phi, &state, t, 1024).unwrap();
            assert!((out.mass() - 1.0).abs() <= 1e-4, "t {t}: mass {}", out.mass());
        }
        let out = integrate_cnf(&phi, &state, 1024).unwrap();
        let densest = out
            .log_p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(circular_distance(out.nodes[densest][0], std::f64::consts::PI) < 0.1);
    }

    #[test]
    fn translated_gaussian_keeps_its_shape() {
        let phi = VectorFieldSpec::constant(BaseSpace::R1, &[1.0]);
        let state = DensityState::gaussian_line(128, 0.0, 0.7);
        let out = integrate_cnf(&phi, &state, 128).unwrap();
        assert!((out.mass() - 1.0).abs() < 1e-10);
        for ((x0, lp0), (x1, lp1)) in state
            .nodes
            .iter()
            .zip(&state.log_p)
            .zip(out.nodes.iter().zip(&out.log_p))
        {
            assert!((x1[0] - x0[0] - 1.0).abs() < 1e-12);
            assert!((lp1 - lp0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_grids_trigger_the_drift_error() {
        let phi = sin_field();
        let state = DensityState::uniform_circle(GroupSpec::U1, 8).unwrap();
        match integrate_cnf(&phi, &state, 64) {
            Err(Error::NormalizationDrift { .. }) => {}
            Ok(out) => panic!("mass {} unexpectedly within tolerance", out.mass()),
            other => panic!("expected NormalizationDrift, got {other:?}"),
        }
    }

    #[test]
    fn invariance_residual_of_circle_fields() {
        let constant = VectorFieldSpec::constant(BaseSpace::Circle, &[0.8]);
        let g = GroupElement::circle(GroupSpec::U1, 1.3);
        assert_eq!(equivariant_cnf_check(&constant, &g, 50, 42).unwrap(), 0.0);

        let phi = sin_field();
        let residual = equivariant_cnf_check(&phi, &g, 200, 42).unwrap();
        // Closed form: max_theta |sin(theta + 1.3) - sin(theta)| = 2 sin(0.65).
        let bound = 2.0 * (1.3f64 / 2.0).sin();
        assert!(residual > 0.5 * bound && residual <= bound + 1e-12);
    }

    #[test]
    fn planar_translation_fields_are_invariant() {
        let phi = VectorFieldSpec::constant(BaseSpace::R2, &[0.3, 0.4]);
        let g = GroupElement::translation(&[0.5, -0.1]);
        assert!(equivariant_cnf_check(&phi, &g, 50, 42).unwrap() <= 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (xs, ws) = gauss_legendre(8, -1.0, 1.0);
        // Degree 15 is exact for 8 nodes.
        let value: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(x, w)| w * (x.powi(14) + 3.0 * x.powi(7)))
            .sum();
        let exact = 2.0 / 15.0;
        assert!((value - exact).abs() < 1e-13, "{value} vs {exact}");

        let (xs, ws) = gauss_legendre(64, 0.0, 2.0);
        let value: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.exp()).sum();
        assert!((value - (2.0f64.exp() - 1.0)).abs() < 1e-12);
    }
}
