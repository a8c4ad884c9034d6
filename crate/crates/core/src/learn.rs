//! Parameter fitting: recover vector-field coefficients and free
//! invariant-connection coefficients from supervised transport pairs.
//!
//! The gradient engine is plain central-difference descent with a fixed
//! step; the learnable set is small by contract (at most 32 scalars).
//! Connection parameters move only through the free entries of the
//! coefficient matrix, so every iterate stays inside the admissible
//! invariant family by construction.

use crate::bundle::BasePoint;
use crate::connection::ConnectionForm;
use crate::coords::Coords;
use crate::error::{Error, Result};
use crate::features::rep_apply;
use crate::fields::FieldKind;
use crate::sample::{sample_base_point, sample_unit_feature, seeded_rng};
use crate::transport::{BasePath, SteerableModel};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Learn the coefficients of a constant-coefficient or
    /// rotation-generator field.
    pub learn_field: bool,
    /// Learn the free entries of the connection's coefficient matrix.
    pub learn_connection: bool,
    /// Learn the weights of a tabulated-net field.
    pub learn_net: bool,
    pub learning_rate: f64,
    pub iterations: usize,
    pub fd_step: f64,
    pub weight_base: f64,
    pub weight_fibre: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learn_field: false,
            learn_connection: true,
            learn_net: false,
            learning_rate: 0.1,
            iterations: 500,
            fd_step: 1e-5,
            weight_base: 1.0,
            weight_fibre: 1.0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-7..=1e-3).contains(&self.fd_step) {
            return Err(Error::Config(format!(
                "finite-difference step {} outside [1e-7, 1e-3]",
                self.fd_step
            )));
        }
        if self.weight_base < 0.0 || self.weight_fibre < 0.0 {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        if self.weight_base == 0.0 && self.weight_fibre == 0.0 {
            return Err(Error::Config("at least one loss weight must be positive".into()));
        }
        if !(self.learn_field || self.learn_connection || self.learn_net) {
            return Err(Error::Config("the learnable mask is empty".into()));
        }
        Ok(())
    }
}

/// One supervised pair `((p, v), (p', v'))`.
#[derive(Clone, Debug)]
pub struct DataPair {
    pub input: (BasePoint, Coords),
    pub output: (BasePoint, Coords),
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub pairs: Vec<DataPair>,
    /// Identifier of the generating model, if the data is synthetic.
    pub generator: Option<String>,
    pub noise: f64,
}

/// Sample inputs in the chart and run them through a ground-truth model,
/// optionally perturbing outputs with ambient Gaussian noise followed by
/// retraction.
pub fn generate_dataset(
    model: &SteerableModel,
    n: usize,
    seed: u64,
    noise: f64,
) -> Result<Dataset> {
    let mut rng = seeded_rng(seed);
    let mut pairs = Vec::with_capacity(n);
    let mut failures = 0;
    while pairs.len() < n {
        let p = sample_base_point(model.quotient.base_space(), &mut rng);
        let v = sample_unit_feature(model.rep.dim_v(), &mut rng);
        match model.apply(&p, &v) {
            Ok((mut q, mut w)) => {
                if noise > 0.0 {
                    for x in q.coords.as_mut_slice() {
                        *x += noise * normal(&mut rng);
                    }
                    if q.space == crate::bundle::BaseSpace::S2 {
                        let m = q.coords.norm();
                        for x in q.coords.as_mut_slice() {
                            *x /= m;
                        }
                    }
                    for x in w.as_mut_slice() {
                        *x += noise * normal(&mut rng);
                    }
                }
                pairs.push(DataPair {
                    input: (p, v),
                    output: (q, w),
                });
            }
            Err(Error::OutsideChart(_)) | Err(Error::LeftChartDomain { .. }) => {
                failures += 1;
                if failures > 1000 {
                    return Err(Error::ChartExhausted(failures));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Dataset {
        pairs,
        generator: None,
        noise,
    })
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Mean squared base distance plus mean squared feature distance, with the
/// configured weights.
pub fn loss(
    model: &SteerableModel,
    dataset: &Dataset,
    weight_base: f64,
    weight_fibre: f64,
) -> Result<f64> {
    loss_with_cache(model, dataset, None, weight_base, weight_fibre)
}

fn loss_with_cache(
    model: &SteerableModel,
    dataset: &Dataset,
    base_cache: Option<&[BasePath]>,
    weight_base: f64,
    weight_fibre: f64,
) -> Result<f64> {
    if dataset.pairs.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let mut total = 0.0;
    for (i, pair) in dataset.pairs.iter().enumerate() {
        let (base_end, feature) = match base_cache {
            // Valid whenever the field parameters are frozen: the base
            // trajectory does not depend on the connection.
            Some(cache) => {
                let path = &cache[i];
                let etas = model.steering_curve(path)?;
                let h_end = model.h_element(etas[etas.len() - 1]);
                (*path.end(), rep_apply(&model.rep, &h_end, &pair.input.1)?)
            }
            None => model.apply(&pair.input.0, &pair.input.1)?,
        };
        let base_err = base_end.distance(&pair.output.0);
        let feat_err = feature.sub(&pair.output.1).norm();
        total += weight_base * base_err * base_err + weight_fibre * feat_err * feat_err;
    }
    Ok(total / dataset.pairs.len() as f64)
}

// ---------------------------------------------------------------------------
// Parameter plumbing
// ---------------------------------------------------------------------------

fn collect_params(model: &SteerableModel, config: &TrainConfig) -> Vec<f64> {
    let mut params = Vec::new();
    if config.learn_field {
        match &model.field.kind {
            FieldKind::ConstantCoeff { coeffs } => params.extend(coeffs),
            FieldKind::RotationGenerator { generator } => params.extend(generator),
            _ => {}
        }
    }
    if config.learn_net {
        if let FieldKind::TabulatedNet { net } = &model.field.kind {
            params.extend(&net.params);
        }
    }
    if config.learn_connection {
        if let ConnectionForm::FromWang(map) = &model.connection {
            for (row, col) in map.free_entries() {
                params.push(map.coeffs[row][col]);
            }
        }
    }
    params
}

fn apply_params(model: &SteerableModel, config: &TrainConfig, params: &[f64]) -> SteerableModel {
    let mut out = model.clone();
    let mut it = params.iter().copied();
    if config.learn_field {
        match &mut out.field.kind {
            FieldKind::ConstantCoeff { coeffs } => {
                for c in coeffs.iter_mut() {
                    *c = it.next().expect("parameter vector length");
                }
            }
            FieldKind::RotationGenerator { generator } => {
                for c in generator.iter_mut() {
                    *c = it.next().expect("parameter vector length");
                }
            }
            _ => {}
        }
    }
    if config.learn_net {
        if let FieldKind::TabulatedNet { net } = &mut out.field.kind {
            for c in net.params.iter_mut() {
                *c = it.next().expect("parameter vector length");
            }
        }
    }
    if config.learn_connection {
        if let ConnectionForm::FromWang(map) = &mut out.connection {
            for (row, col) in map.free_entries() {
                map.coeffs[row][col] = it.next().expect("parameter vector length");
            }
        }
    }
    out
}

/// Why a fit run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    /// All configured iterations ran.
    Completed,
    /// Loss reached the floor.
    Converged,
    /// A 50-iteration window failed to decrease the loss.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: SteerableModel,
    /// Loss per recorded iterate (the first entry is the initial loss).
    pub trace: Vec<f64>,
    /// Parameter vector per recorded iterate, aligned with `trace`.
    pub params_trace: Vec<Vec<f64>>,
    pub halt: HaltReason,
}

/// Central-difference gradient descent over the masked parameters.
///
/// When the gradient vanishes while a probe point is strictly lower (a
/// stationary point that is not a minimum, e.g. a loss maximum at an
/// antipodal initialization), the step moves to the best probe instead, a
/// degenerate line search on values already computed.
pub fn fit(model: &SteerableModel, dataset: &Dataset, config: &TrainConfig) -> Result<FitResult> {
    config.validate()?;
    let mut params = collect_params(model, config);
    if params.is_empty() {
        return Err(Error::Config(
            "the learnable mask selects no parameters of this model".into(),
        ));
    }
    if params.len() > 32 {
        return Err(Error::Config(format!(
            "{} learnable scalars exceed the finite-difference budget of 32",
            params.len()
        )));
    }

    // The base flow is independent of the connection, so with the field
    // frozen the base trajectories can be integrated once.
    let field_frozen = !(config.learn_field || config.learn_net);
    let base_cache: Option<Vec<BasePath>> = if field_frozen {
        Some(
            dataset
                .pairs
                .iter()
                .map(|pair| model.base_path(&pair.input.0, 1.0))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let evaluate = |theta: &[f64]| -> Result<f64> {
        let candidate = apply_params(model, config, theta);
        loss_with_cache(
            &candidate,
            dataset,
            base_cache.as_deref(),
            config.weight_base,
            config.weight_fibre,
        )
    };

    let mut trace = Vec::with_capacity(config.iterations + 1);
    let mut params_trace = Vec::with_capacity(config.iterations + 1);
    let mut halt = HaltReason::Completed;

    let mut current = evaluate(&params)?;
    trace.push(current);
    params_trace.push(params.clone());

    for _ in 0..config.iterations {
        if current > 1e6 {
            return Err(Error::Diverged(current));
        }
        if current < 1e-14 {
            halt = HaltReason::Converged;
            break;
        }

        let mut gradient = vec![0.0; params.len()];
        let mut best_probe: Option<(usize, f64, f64)> = None;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus[i] += config.fd_step;
            let mut minus = params.clone();
            minus[i] -= config.fd_step;
            let l_plus = evaluate(&plus)?;
            let l_minus = evaluate(&minus)?;
            gradient[i] = (l_plus - l_minus) / (2.0 * config.fd_step);
            let (probe_val, probe_dir) = if l_plus <= l_minus {
                (l_plus, config.fd_step)
            } else {
                (l_minus, -config.fd_step)
            };
            if probe_val < current - 1e-13 * (1.0 + current)
                && best_probe.map_or(true, |(_, v, _)| probe_val < v)
            {
                best_probe = Some((i, probe_val, probe_dir));
            }
        }

        let grad_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= 1e-9 {
            if let Some((i, probe_val, probe_dir)) = best_probe {
                params[i] += probe_dir;
                current = probe_val;
                trace.push(current);
                params_trace.push(params.clone());
                continue;
            }
            halt = HaltReason::Stalled;
            break;
        }

        for (p, g) in params.iter_mut().zip(&gradient) {
            *p -= config.learning_rate * g;
        }
        current = evaluate(&params)?;
        trace.push(current);
        params_trace.push(params.clone());

        if trace.len() > 50 {
            let window_start = trace[trace.len() - 51];
            if current >= window_start {
                halt = HaltReason::Stalled;
                break;
            }
        }
    }

    Ok(FitResult {
        model: apply_params(model, config, &params),
        trace,
        params_trace,
        halt,
    })
}

// ---------------------------------------------------------------------------
// Dataset serialization: JSON lines, one pair per line
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WirePoint {
    p: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WirePair {
    input: WirePoint,
    output: WirePoint,
}

impl Dataset {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for pair in &self.pairs {
            let wire = WirePair {
                input: WirePoint {
                    p: pair.input.0.coords.to_vec(),
                    v: pair.input.1.to_vec(),
                },
                output: WirePoint {
                    p: pair.output.0.coords.to_vec(),
                    v: pair.output.1.to_vec(),
                },
            };
            out.push_str(&serde_json::to_string(&wire).expect("serializable"));
            out.push('\n');
        }
        out
    }

    /// Parse JSON lines; parse failures report the 1-based line number.
    pub fn from_jsonl(text: &str, space: crate::bundle::BaseSpace) -> Result<Dataset> {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let wire: WirePair = serde_json::from_str(line).map_err(|e| {
                Error::Config(format!("dataset line {}: {e}", idx + 1))
            })?;
            let make_point = |p: &[f64]| -> Result<BasePoint> {
                BasePoint::new(space, Coords::from_slice(p))
                    .map_err(|e| Error::Config(format!("dataset line {}: {e}", idx + 1)))
            };
            pairs.push(DataPair {
                input: (make_point(&wire.input.p)?, Coords::from_slice(&wire.input.v)),
                output: (
                    make_point(&wire.output.p)?,
                    Coords::from_slice(&wire.output.v),
                ),
            });
        }
        Ok(Dataset {
            pairs,
            generator: None,
            noise: 0.0,
        })
    }
}
