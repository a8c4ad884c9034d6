//! File-facing configuration schemas: model JSON, training JSON, density
//! JSON, and the trajectory CSV format.

use crate::bundle::{Quotient, SectionChart};
use crate::connection::{ConnectionForm, WangMap};
use crate::coords::Coords;
use crate::density::DensityState;
use crate::error::{Error, Result};
use crate::features::Representation;
use crate::fields::{ScalarField, VectorFieldSpec};
use crate::groups::GroupSpec;
use crate::learn::TrainConfig;
use crate::transport::{SteerableModel, TransportResult};
use serde::{Deserialize, Serialize};

pub fn quotient_name(quotient: &Quotient) -> &'static str {
    match quotient {
        Quotient::R2xU1OverR2 => "r2xu1/r2",
        Quotient::So3OverS2 => "so3/s2",
        Quotient::R2OverR1 => "r2/r1",
        Quotient::Trivial(GroupSpec::U1) => "u1",
        Quotient::Trivial(GroupSpec::SO2) => "so2",
        Quotient::Trivial(GroupSpec::TranslationRn(1)) => "r1",
        Quotient::Trivial(GroupSpec::TranslationRn(2)) => "r2",
        Quotient::Trivial(_) => unreachable!("unregistered trivial quotient"),
    }
}

pub fn parse_quotient(name: &str) -> Result<Quotient> {
    Ok(match name {
        "r2xu1/r2" => Quotient::R2xU1OverR2,
        "so3/s2" => Quotient::So3OverS2,
        "r2/r1" => Quotient::R2OverR1,
        "u1" => Quotient::Trivial(GroupSpec::U1),
        "so2" => Quotient::Trivial(GroupSpec::SO2),
        "r1" => Quotient::Trivial(GroupSpec::TranslationRn(1)),
        "r2" => Quotient::Trivial(GroupSpec::TranslationRn(2)),
        other => return Err(Error::Config(format!("unknown quotient {other:?}"))),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectionConfig {
    FromWang { coeffs: Vec<Vec<f64>> },
    CoefficientField { coeffs: Vec<ScalarField> },
}

/// The on-disk model schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelConfig {
    pub quotient: String,
    pub chart: SectionChart,
    pub field: VectorFieldSpec,
    pub connection: ConnectionConfig,
    pub rep: Representation,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fitted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
}

impl ModelConfig {
    pub fn to_model(&self) -> Result<SteerableModel> {
        let quotient = parse_quotient(&self.quotient)?;
        let connection = match &self.connection {
            ConnectionConfig::FromWang { coeffs } => {
                ConnectionForm::from_wang(WangMap::new(quotient, coeffs.clone())?)?
            }
            ConnectionConfig::CoefficientField { coeffs } => {
                ConnectionForm::coefficient_field(quotient, coeffs.clone())?
            }
        };
        SteerableModel::new(
            quotient,
            self.chart.clone(),
            self.field.clone(),
            connection,
            self.rep,
            self.steps,
        )
    }

    pub fn from_model(model: &SteerableModel) -> ModelConfig {
        let connection = match &model.connection {
            ConnectionForm::FromWang(map) => ConnectionConfig::FromWang {
                coeffs: map.coeffs.clone(),
            },
            ConnectionForm::CoefficientField { coeffs, .. } => {
                ConnectionConfig::CoefficientField {
                    coeffs: coeffs.clone(),
                }
            }
        };
        ModelConfig {
            quotient: quotient_name(&model.quotient).to_string(),
            chart: model.chart.clone(),
            field: model.field.clone(),
            connection,
            rep: model.rep,
            steps: model.steps,
            fitted: false,
            final_loss: None,
        }
    }

    pub fn from_json(text: &str) -> Result<ModelConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }
}

/// Training run schema: the initial model plus the fit settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainFileConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Density run schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CnfConfig {
    /// "u1", "r1" or "r2"
    pub group: String,
    pub field: VectorFieldSpec,
    pub nodes: usize,
    pub steps: usize,
    pub initial: InitialDensity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialDensity {
    Uniform,
    Gaussian { mean: f64, sigma: f64 },
}

impl CnfConfig {
    pub fn group_spec(&self) -> Result<GroupSpec> {
        Ok(match self.group.as_str() {
            "u1" => GroupSpec::U1,
            "so2" => GroupSpec::SO2,
            "r1" => GroupSpec::TranslationRn(1),
            "r2" => GroupSpec::TranslationRn(2),
            "so3" => GroupSpec::SO3,
            other => return Err(Error::Config(format!("unknown group {other:?}"))),
        })
    }

    pub fn initial_state(&self) -> Result<DensityState> {
        let group = self.group_spec()?;
        match (&self.initial, group) {
            (InitialDensity::Uniform, g) if g.is_circle() => {
                DensityState::uniform_circle(g, self.nodes)
            }
            (InitialDensity::Gaussian { mean, sigma }, GroupSpec::TranslationRn(1)) => {
                Ok(DensityState::gaussian_line(self.nodes, *mean, *sigma))
            }
            (InitialDensity::Gaussian { mean, sigma }, GroupSpec::TranslationRn(2)) => {
                Ok(DensityState::gaussian_plane(self.nodes, *mean, *sigma))
            }
            (_, g) if g.is_circle() || matches!(g, GroupSpec::TranslationRn(1 | 2)) => Err(
                Error::Config("initial density does not match the group".into()),
            ),
            (_, other) => Err(Error::UnsupportedGroup(format!("{other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header `t, base coordinates, steering, feature`, one row
// per grid node, 17 significant digits.
// ---------------------------------------------------------------------------

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(result: &TransportResult) -> String {
    let base_dim = result.base_path[0].coords.len();
    let steer_dim = result.steer_path[0].coords.len();
    let feat_dim = result.final_feature.len();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..base_dim).map(|i| format!("base_{i}")));
    header.extend((0..steer_dim).map(|i| format!("steer_{i}")));
    header.extend((0..feat_dim).map(|i| format!("feat_{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for (k, t) in result.times.iter().enumerate() {
        let mut row: Vec<String> = vec![fmt17(*t)];
        row.extend(result.base_path[k].coords.iter().map(|x| fmt17(*x)));
        if steer_dim > 0 {
            row.push(fmt17(result.steer_coords[k]));
        }
        row.extend(result.feature_path[k].iter().map(|x| fmt17(*x)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parsed trajectory rows: `(t, remaining columns)`.
pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("empty trajectory file".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| Error::Config(format!("trajectory line {}: {e}", idx + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "trajectory line {}: {} columns, header has {}",
                idx + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Density snapshot CSV: node coordinates then the log-density.
pub fn density_csv(state: &DensityState) -> String {
    let dim = state.nodes[0].len();
    let mut header: Vec<String> = (0..dim).map(|i| format!("coord_{i}")).collect();
    header.push("log_p".into());
    let mut out = header.join(",");
    out.push('\n');
    for (node, lp) in state.nodes.iter().zip(&state.log_p) {
        let mut row: Vec<String> = node.iter().map(|x| fmt17(*x)).collect();
        row.push(fmt17(*lp));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

impl DensityState {
    /// Product Gaussian on the plane over a tensor Gauss-Legendre grid with
    /// `n` nodes per axis.
    pub fn gaussian_plane(n: usize, mean: f64, sigma: f64) -> DensityState {
        let line = DensityState::gaussian_line(n, mean, sigma);
        let mut nodes = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        let mut log_p = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                nodes.push(Coords::from([line.nodes[i][0], line.nodes[j][0]]));
                weights.push(line.weights[i] * line.weights[j]);
                log_p.push(line.log_p[i] + line.log_p[j]);
            }
        }
        DensityState {
            group: GroupSpec::TranslationRn(2),
            nodes,
            weights,
            log_p,
            time: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BasePoint, BaseSpace};
    use std::f64::consts::PI;

    fn worked_example_config() -> ModelConfig {
        ModelConfig {
            quotient: "r2xu1/r2".into(),
            chart: SectionChart::constant_angle(0.0),
            field: VectorFieldSpec::constant(BaseSpace::R2, &[1.0, 0.0]),
            connection: ConnectionConfig::FromWang {
                coeffs: vec![vec![PI, 1.0, 1.0]],
            },
            rep: Representation::Rot2,
            steps: 64,
            fitted: false,
            final_loss: None,
        }
    }

    #[test]
    fn model_config_roundtrip() {
        let config = worked_example_config();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let model = ModelConfig::from_json(&text).unwrap().to_model().unwrap();
        let back = ModelConfig::from_model(&model);
        assert_eq!(back.quotient, config.quotient);
        assert_eq!(back.steps, config.steps);
        let text2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn bad_quotient_is_a_config_error() {
        let mut config = worked_example_config();
        config.quotient = "so5/s4".into();
        match config.to_model() {
            Err(Error::Config(_)) => {}
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_csv_roundtrips() {
        let model = worked_example_config().to_model().unwrap();
        let result = model
            .transport(
                &BasePoint::on_plane(0.0, 0.0),
                &Coords::from([1.0, 0.0]),
                1.0,
            )
            .unwrap();
        let text = trajectory_csv(&result);
        let (header, rows) = parse_trajectory_csv(&text).unwrap();
        assert_eq!(
            header,
            vec!["t", "base_0", "base_1", "steer_0", "feat_0", "feat_1"]
        );
        assert_eq!(rows.len(), result.times.len());
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row[0], result.times[k]);
            assert_eq!(row[1], result.base_path[k].coords[0]);
            assert_eq!(row[3], result.steer_coords[k]);
            assert_eq!(row[4], result.feature_path[k][0]);
        }
    }

    #[test]
    fn cnf_config_builds_states() {
        let config = CnfConfig {
            group: "u1".into(),
            field: VectorFieldSpec::coefficient(
                BaseSpace::Circle,
                vec![ScalarField::sin_of(0)],
            ),
            nodes: 64,
            steps: 64,
            initial: InitialDensity::Uniform,
        };
        let state = config.initial_state().unwrap();
        assert!((state.mass() - 1.0).abs() < 1e-12);

        let so3 = CnfConfig {
            group: "so3".into(),
            ..config
        };
        match so3.initial_state() {
            Err(Error::UnsupportedGroup(_)) => {}
            other => panic!("expected UnsupportedGroup, got {other:?}"),
        }
    }

    #[test]
    fn plane_gaussian_is_normalized() {
        let state = DensityState::gaussian_plane(32, 0.0, 1.0);
        assert!((state.mass() - 1.0).abs() < 1e-10);
    }
}
