//! The coupled ODE core: base-flow integration on M, steering integration
//! on the stabiliser, horizontal lifts, the full steerable map, and loop
//! holonomy.
//!
//! The base flow is integrated with classical fourth-order Runge-Kutta and
//! a post-step retraction (renormalization on the sphere). The steering
//! equation `dh/dt = -(R_h)_* omega(sigma_* phi)` is integrated in the
//! (abelian) stabiliser coordinate with the matching fourth-order scheme:
//! each step exponentiates a Simpson-rule increment of the connection
//! pullback, so iterates stay in the subgroup exactly.

use crate::bundle::{sphere_step, BasePoint, BaseSpace, Quotient, SectionChart};
use crate::connection::ConnectionForm;
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::features::{rep_apply, rep_apply_inverse, Representation};
use crate::fields::VectorFieldSpec;
use crate::groups::{compose, GroupElement, TangentVector, Vec3};
use std::f64::consts::TAU;

/// Base trajectory sampled at half-step resolution: `2n + 1` nodes over the
/// horizon, so the steering integrator can read exact stage midpoints.
#[derive(Clone, Debug)]
pub struct BasePath {
    pub steps: usize,
    pub horizon: f64,
    /// `2 * steps + 1` nodes; circle coordinates are left unwrapped.
    pub nodes: Vec<BasePoint>,
    /// Field values (curve tangents) at the nodes.
    pub tangents: Vec<Coords>,
}

impl BasePath {
    /// Node index of coarse grid point `k` (of `steps + 1`).
    fn coarse(&self, k: usize) -> usize {
        2 * k
    }

    pub fn start(&self) -> &BasePoint {
        &self.nodes[0]
    }

    pub fn end(&self) -> &BasePoint {
        &self.nodes[self.nodes.len() - 1]
    }

    /// The coarse grid times `t_0 .. t_n`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.horizon * k as f64 / self.steps as f64)
            .collect()
    }

    /// The coarse grid nodes.
    pub fn coarse_nodes(&self) -> Vec<BasePoint> {
        (0..=self.steps).map(|k| self.nodes[self.coarse(k)]).collect()
    }
}

fn retract(space: BaseSpace, coords: &mut Coords) {
    if space == BaseSpace::S2 {
        let n = coords.norm();
        for x in coords.as_mut_slice() {
            *x /= n;
        }
    }
}

/// Integrate the base flow for `horizon` time units with `n` RK4 steps,
/// recording midpoints (the integrator takes `2n` half steps).
pub fn integrate_base(
    field: &VectorFieldSpec,
    p: &BasePoint,
    n: usize,
    horizon: f64,
) -> Result<BasePath> {
    if n == 0 {
        return Err(Error::Config("step count must be at least 1".into()));
    }
    if p.space != field.space {
        return Err(Error::SpecMismatch(format!(
            "field on {:?} integrated from a point of {:?}",
            field.space, p.space
        )));
    }
    field.validate()?;
    let space = p.space;
    let substeps = 2 * n;
    let dt = horizon / substeps as f64;
    let eval = |coords: &Coords| -> Coords {
        let mut q = *coords;
        retract(space, &mut q);
        field.evaluate(&BasePoint { space, coords: q })
    };

    let mut nodes = Vec::with_capacity(substeps + 1);
    let mut tangents = Vec::with_capacity(substeps + 1);
    let mut y = p.coords;
    retract(space, &mut y);
    nodes.push(BasePoint { space, coords: y });
    tangents.push(eval(&y));

    for _ in 0..substeps {
        let k1 = eval(&y);
        let k2 = eval(&y.axpy(dt / 2.0, &k1));
        let k3 = eval(&y.axpy(dt / 2.0, &k2));
        let k4 = eval(&y.axpy(dt, &k3));
        let mut inc = k1;
        inc = inc.axpy(2.0, &k2);
        inc = inc.axpy(2.0, &k3);
        inc = inc.axpy(1.0, &k4);
        y = y.axpy(dt / 6.0, &inc);
        retract(space, &mut y);
        nodes.push(BasePoint { space, coords: y });
        tangents.push(eval(&y));
    }

    Ok(BasePath {
        steps: n,
        horizon,
        nodes,
        tangents,
    })
}

/// Closed (or constant) parametrized curves used for holonomy loops.
#[derive(Clone, Debug)]
pub enum BaseCurve {
    /// Circle of constant colatitude about the reference axis e1 on the
    /// sphere, traversed once over the unit interval.
    Latitude { colatitude: f64 },
    /// Circle of constant colatitude about an arbitrary axis.
    CircleAbout { axis: [f64; 3], colatitude: f64 },
    /// Piecewise-linear path through the listed vertices; repeat the first
    /// vertex at the end to close a loop.
    Polygon { vertices: Vec<BasePoint> },
    Constant { point: BasePoint },
}

/// Orthonormal frame completing a unit axis.
fn axis_frame(axis: &[f64; 3]) -> (Vec3, Vec3, Vec3) {
    let n = Vec3::new(axis[0], axis[1], axis[2]).normalize();
    let helper = if n[2].abs() < 0.9 {
        Vec3::new(0.0, 0.0, 1.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let u = n.cross(&helper).normalize();
    let w = n.cross(&u);
    (n, u, w)
}

impl BaseCurve {
    pub fn point(&self, t: f64) -> BasePoint {
        match self {
            BaseCurve::Latitude { colatitude } => {
                let (sa, ca) = colatitude.sin_cos();
                let s = TAU * t;
                BasePoint {
                    space: BaseSpace::S2,
                    coords: Coords::from([ca, sa * s.cos(), sa * s.sin()]),
                }
            }
            BaseCurve::CircleAbout { axis, colatitude } => {
                let (n, u, w) = axis_frame(axis);
                let (sa, ca) = colatitude.sin_cos();
                let s = TAU * t;
                let p = n * ca + (u * s.cos() + w * s.sin()) * sa;
                BasePoint {
                    space: BaseSpace::S2,
                    coords: Coords::from([p[0], p[1], p[2]]),
                }
            }
            BaseCurve::Polygon { vertices } => {
                let m = vertices.len() - 1;
                let scaled = (t * m as f64).clamp(0.0, m as f64 - 1e-12);
                let i = scaled.floor() as usize;
                let frac = scaled - i as f64;
                let a = &vertices[i];
                let b = &vertices[i + 1];
                BasePoint {
                    space: a.space,
                    coords: a.coords.add(&b.coords.sub(&a.coords).scaled(frac)),
                }
            }
            BaseCurve::Constant { point } => *point,
        }
    }

    /// Curve velocity on the interior of a smooth piece.
    pub fn velocity(&self, t: f64) -> Coords {
        match self {
            BaseCurve::Latitude { colatitude } => {
                let sa = colatitude.sin();
                let s = TAU * t;
                Coords::from([0.0, -TAU * sa * s.sin(), TAU * sa * s.cos()])
            }
            BaseCurve::CircleAbout { axis, colatitude } => {
                let (_, u, w) = axis_frame(axis);
                let sa = colatitude.sin();
                let s = TAU * t;
                let v = (w * s.cos() - u * s.sin()) * (TAU * sa);
                Coords::from([v[0], v[1], v[2]])
            }
            BaseCurve::Polygon { vertices } => {
                let m = vertices.len() - 1;
                let scaled = (t * m as f64).clamp(0.0, m as f64 - 1e-12);
                let i = scaled.floor() as usize;
                let a = &vertices[i];
                let b = &vertices[i + 1];
                b.coords.sub(&a.coords).scaled(m as f64)
            }
            BaseCurve::Constant { point } => Coords::zeros(point.coords.len()),
        }
    }

    /// Parameter intervals on which the curve is smooth.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        match self {
            BaseCurve::Polygon { vertices } => {
                let m = vertices.len() - 1;
                (0..m)
                    .map(|i| (i as f64 / m as f64, (i + 1) as f64 / m as f64))
                    .collect()
            }
            _ => vec![(0.0, 1.0)],
        }
    }

    pub fn space(&self) -> BaseSpace {
        match self {
            BaseCurve::Latitude { .. } | BaseCurve::CircleAbout { .. } => BaseSpace::S2,
            BaseCurve::Polygon { vertices } => vertices[0].space,
            BaseCurve::Constant { point } => point.space,
        }
    }
}

/// Time-sampled result of one steerable transport.
#[derive(Clone, Debug)]
pub struct TransportResult {
    pub times: Vec<f64>,
    pub base_path: Vec<BasePoint>,
    /// Steering curve as stabiliser elements (angles reduced).
    pub steer_path: Vec<GroupElement>,
    /// Steering curve in the unwrapped stabiliser coordinate.
    pub steer_coords: Vec<f64>,
    /// Transported feature at every node.
    pub feature_path: Vec<Coords>,
    pub final_feature: Coords,
}

/// Holonomy of a closed loop.
#[derive(Clone, Debug)]
pub struct Holonomy {
    pub element: GroupElement,
    /// Unwrapped stabiliser coordinate of the loop element.
    pub coordinate: f64,
}

/// Bundle of everything defining the steerable map: the quotient, a chart,
/// a base vector field, a principal connection, the feature representation
/// and the integrator step count.
#[derive(Clone, Debug)]
pub struct SteerableModel {
    pub quotient: Quotient,
    pub chart: SectionChart,
    pub field: VectorFieldSpec,
    pub connection: ConnectionForm,
    pub rep: Representation,
    pub steps: usize,
}

impl SteerableModel {
    pub fn new(
        quotient: Quotient,
        chart: SectionChart,
        field: VectorFieldSpec,
        connection: ConnectionForm,
        rep: Representation,
        steps: usize,
    ) -> Result<Self> {
        if !chart.matches(&quotient) {
            return Err(Error::Config(format!(
                "chart {chart:?} does not match quotient {quotient:?}"
            )));
        }
        if field.space != quotient.base_space() {
            return Err(Error::Config(format!(
                "field on {:?} does not match base space {:?}",
                field.space,
                quotient.base_space()
            )));
        }
        field.validate()?;
        if connection.quotient() != quotient {
            return Err(Error::Config(
                "connection and model quotient disagree".into(),
            ));
        }
        if steps == 0 {
            return Err(Error::Config("step count must be at least 1".into()));
        }
        Ok(SteerableModel {
            quotient,
            chart,
            field,
            connection,
            rep,
            steps,
        })
    }

    /// Base trajectory from `p`, with every node checked against the chart.
    pub fn base_path(&self, p: &BasePoint, horizon: f64) -> Result<BasePath> {
        let path = integrate_base(&self.field, p, self.steps, horizon)?;
        self.check_in_chart(&path)?;
        Ok(path)
    }

    fn check_in_chart(&self, path: &BasePath) -> Result<()> {
        for (i, node) in path.nodes.iter().enumerate() {
            if !self.chart.contains(node) {
                let t = path.horizon * i as f64 / (path.nodes.len() - 1) as f64;
                return Err(Error::LeftChartDomain { t });
            }
        }
        Ok(())
    }

    /// Differential of the section along a base tangent. Exact on the flat
    /// charts; central finite difference with step 1e-6 on the sphere.
    fn section_pushforward(&self, p: &BasePoint, v: &Coords) -> Result<TangentVector> {
        let at = self.chart.section(&self.quotient, p)?;
        let rep = match &self.chart {
            SectionChart::ConstantAngle { .. } => Coords::from([v[0], v[1], 0.0]),
            SectionChart::Graph { graph } => {
                Coords::from([v[0], graph.derivative(&p.coords, 0) * v[0]])
            }
            SectionChart::Sphere { .. } => {
                let eps = 1e-6;
                let plus = self
                    .chart
                    .section(&self.quotient, &sphere_step(p, v, eps))?;
                let minus = self
                    .chart
                    .section(&self.quotient, &sphere_step(p, v, -eps))?;
                plus.coords.sub(&minus.coords).scaled(1.0 / (2.0 * eps))
            }
            SectionChart::Identity => v.scaled(1.0),
        };
        Ok(TangentVector { at, rep })
    }

    /// Right-hand side of the steering equation at one base node:
    /// `-omega(sigma_*(tangent))` in the stabiliser coordinate.
    fn steering_rate(&self, node: &BasePoint, tangent: &Coords) -> Result<f64> {
        if self.quotient.dim_h() == 0 {
            return Ok(0.0);
        }
        let pushed = self.section_pushforward(node, tangent)?;
        let omega = self.connection.eval(&pushed)?;
        Ok(-omega.comps[0])
    }

    /// Integrate the steering equation along a base path, starting from
    /// `eta0` in the stabiliser coordinate. Returns the unwrapped
    /// coordinate at the coarse grid nodes.
    pub fn steering_curve_from(&self, path: &BasePath, eta0: f64) -> Result<Vec<f64>> {
        let n = path.steps;
        let dt = path.horizon / n as f64;
        let mut etas = Vec::with_capacity(n + 1);
        let mut eta = eta0;
        etas.push(eta);
        if self.quotient.dim_h() == 0 {
            etas.resize(n + 1, eta0);
            return Ok(etas);
        }
        let mut rate_left = self.steering_rate(&path.nodes[0], &path.tangents[0])?;
        for k in 0..n {
            let rate_mid = self.steering_rate(&path.nodes[2 * k + 1], &path.tangents[2 * k + 1])?;
            let rate_right =
                self.steering_rate(&path.nodes[2 * k + 2], &path.tangents[2 * k + 2])?;
            // Simpson increment: exact RK4 for an h-independent abelian rate.
            eta += dt / 6.0 * (rate_left + 4.0 * rate_mid + rate_right);
            etas.push(eta);
            rate_left = rate_right;
        }
        Ok(etas)
    }

    pub fn steering_curve(&self, path: &BasePath) -> Result<Vec<f64>> {
        self.steering_curve_from(path, 0.0)
    }

    /// Stabiliser element of an unwrapped steering coordinate.
    pub fn h_element(&self, eta: f64) -> GroupElement {
        let h_spec = self.quotient.h_spec();
        match h_spec {
            crate::groups::GroupSpec::U1 | crate::groups::GroupSpec::SO2 => {
                GroupElement::circle(h_spec, eta)
            }
            crate::groups::GroupSpec::TranslationRn(0) => GroupElement::identity(h_spec),
            _ => GroupElement::translation(&[eta]),
        }
    }

    /// Full transport of `(p, v)` over `[0, horizon]`.
    pub fn transport(&self, p: &BasePoint, v: &Coords, horizon: f64) -> Result<TransportResult> {
        if v.len() != self.rep.dim_v() {
            return Err(Error::DimMismatch {
                got: v.len(),
                want: self.rep.dim_v(),
            });
        }
        let path = self.base_path(p, horizon)?;
        let etas = self.steering_curve(&path)?;
        let steer_path: Vec<GroupElement> = etas.iter().map(|eta| self.h_element(*eta)).collect();
        let feature_path: Vec<Coords> = steer_path
            .iter()
            .map(|h| rep_apply(&self.rep, h, v))
            .collect::<Result<_>>()?;
        let final_feature = feature_path[feature_path.len() - 1];
        let mut base_path = path.coarse_nodes();
        if self.quotient.base_space() == BaseSpace::Circle {
            for node in &mut base_path {
                node.coords[0] = crate::groups::reduce_angle(node.coords[0]);
            }
        }
        Ok(TransportResult {
            times: path.times(),
            base_path,
            steer_path,
            steer_coords: etas,
            feature_path,
            final_feature,
        })
    }

    /// The steerable map itself: `(p, v) -> (flow endpoint, steered feature)`
    /// at horizon 1.
    pub fn apply(&self, p: &BasePoint, v: &Coords) -> Result<(BasePoint, Coords)> {
        let result = self.transport(p, v, 1.0)?;
        Ok((
            result.base_path[result.base_path.len() - 1],
            result.final_feature,
        ))
    }

    /// Horizontal lift nodes `sigma(Phi_p(t)) h_p(t)` on the coarse grid.
    pub fn horizontal_lift(&self, p: &BasePoint, horizon: f64) -> Result<Vec<GroupElement>> {
        let path = self.base_path(p, horizon)?;
        let etas = self.steering_curve(&path)?;
        self.lift_nodes(&path, &etas)
    }

    fn lift_nodes(&self, path: &BasePath, etas: &[f64]) -> Result<Vec<GroupElement>> {
        (0..=path.steps)
            .map(|k| {
                let sigma = self
                    .chart
                    .section(&self.quotient, &path.nodes[path.coarse(k)])?;
                compose(&sigma, &self.quotient.h_embed(&[etas[k]]))
            })
            .collect()
    }

    /// Raw lift coordinates for finite differencing: unwrapped angle
    /// coordinates on the flat groups, matrix entries on SO(3).
    fn lift_raw_coords(&self, path: &BasePath, etas: &[f64]) -> Result<Vec<Coords>> {
        (0..=path.steps)
            .map(|k| {
                let node = &path.nodes[path.coarse(k)];
                let eta = etas[k];
                Ok(match (&self.chart, &self.quotient) {
                    (SectionChart::ConstantAngle { chi }, Quotient::R2xU1OverR2) => {
                        Coords::from([node.coords[0], node.coords[1], chi + eta])
                    }
                    (SectionChart::Graph { graph }, Quotient::R2OverR1) => {
                        Coords::from([node.coords[0], graph.eval(&node.coords) + eta])
                    }
                    _ => {
                        let sigma = self.chart.section(&self.quotient, node)?;
                        let lift = compose(&sigma, &self.quotient.h_embed(&[eta]))?;
                        lift.coords
                    }
                })
            })
            .collect()
    }

    /// Maximal `|omega(lift tangent)|` over interior coarse nodes, with the
    /// lift tangent taken by a fourth-order five-point stencil so the
    /// differencing error does not mask the integrator's.
    pub fn lift_horizontality_residual(&self, p: &BasePoint, horizon: f64) -> Result<f64> {
        let path = self.base_path(p, horizon)?;
        if self.quotient.dim_h() == 0 {
            return Ok(0.0);
        }
        let etas = self.steering_curve(&path)?;
        let raw = self.lift_raw_coords(&path, &etas)?;
        let lifts = self.lift_nodes(&path, &etas)?;
        let dt = horizon / path.steps as f64;
        let mut worst = 0.0f64;
        for k in 2..path.steps.saturating_sub(1) {
            let stencil = raw[k - 2]
                .axpy(-8.0, &raw[k - 1])
                .axpy(8.0, &raw[k + 1])
                .axpy(-1.0, &raw[k + 2])
                .scaled(1.0 / (12.0 * dt));
            let tangent = TangentVector {
                at: lifts[k],
                rep: stencil,
            };
            worst = worst.max(self.connection.eval(&tangent)?.comps.norm());
        }
        Ok(worst)
    }

    /// Drift of the section-frame feature along the transport: the fibre
    /// coordinate of the materialized lift, read back through the
    /// representation, must reproduce the input feature at every node.
    pub fn covariant_constancy_drift(
        &self,
        p: &BasePoint,
        v: &Coords,
        horizon: f64,
    ) -> Result<f64> {
        let path = self.base_path(p, horizon)?;
        let etas = self.steering_curve(&path)?;
        let lifts = self.lift_nodes(&path, &etas)?;
        let mut worst = 0.0f64;
        for (k, lift) in lifts.iter().enumerate() {
            let extracted = self.chart.fibre_coordinate(&self.quotient, lift)?;
            let transported = rep_apply(&self.rep, &extracted, v)?;
            let frame_value = rep_apply_inverse(&self.rep, &self.h_element(etas[k]), &transported)?;
            worst = worst.max(frame_value.sub(v).norm());
        }
        Ok(worst)
    }

    /// Steering around a closed base loop. The integrand is integrated per
    /// smooth piece of the curve so corners never straddle a Simpson cell.
    pub fn holonomy(&self, curve: &BaseCurve, n: usize) -> Result<Holonomy> {
        let start = curve.point(0.0);
        let end = curve.point(1.0);
        let gap = start.distance(&end);
        if gap > 1e-9 {
            return Err(Error::NotClosed(gap));
        }
        let mut eta = 0.0;
        for (a, b) in curve.pieces() {
            let piece_steps = ((b - a) * n as f64).ceil().max(1.0) as usize;
            let dt = (b - a) / piece_steps as f64;
            let rate_at = |t: f64| -> Result<f64> {
                let node = curve.point(t);
                if !self.chart.contains(&node) {
                    return Err(Error::LeftChartDomain { t });
                }
                self.steering_rate(&node, &curve.velocity(t))
            };
            // Evaluate interior stage points strictly inside the piece.
            let mut left = rate_at(a + 1e-12)?;
            for k in 0..piece_steps {
                let t0 = a + k as f64 * dt;
                let mid = rate_at(t0 + dt / 2.0)?;
                let right = if k + 1 == piece_steps {
                    rate_at(b - 1e-12)?
                } else {
                    rate_at(t0 + dt)?
                };
                eta += dt / 6.0 * (left + 4.0 * mid + right);
                left = right;
            }
        }
        Ok(Holonomy {
            element: self.h_element(eta),
            coordinate: eta,
        })
    }

    /// Canonical representative of the class `[g, v]`: the section point of
    /// the projected base point paired with the gauge-adjusted feature.
    pub fn canonical_class(&self, g: &GroupElement, v: &Coords) -> Result<(GroupElement, Coords)> {
        let p = self.quotient.project(g)?;
        let h = self.chart.fibre_coordinate(&self.quotient, g)?;
        Ok((
            self.chart.section(&self.quotient, &p)?,
            rep_apply(&self.rep, &h, v)?,
        ))
    }

    /// Parallel transport flow on class representatives: transports `[g, v]`
    /// for `t` time units along the lifted flow.
    pub fn transport_flow(
        &self,
        t: f64,
        g: &GroupElement,
        v: &Coords,
    ) -> Result<(GroupElement, Coords)> {
        if t == 0.0 {
            return Ok((*g, *v));
        }
        let p = self.quotient.project(g)?;
        let h0 = self.chart.fibre_coordinate(&self.quotient, g)?;
        let path = self.base_path(&p, t)?;
        let etas = self.steering_curve(&path)?;
        let sigma_end = self.chart.section(&self.quotient, path.end())?;
        // H-equivariance of the lift: the flow through g is the flow
        // through sigma(p) right-translated by the fibre coordinate of g.
        let lift_end = compose(
            &compose(&sigma_end, &self.quotient.h_embed(&[*etas.last().unwrap()]))?,
            &self.quotient.h_embed(&h0.coords),
        )?;
        Ok((lift_end, *v))
    }
}
