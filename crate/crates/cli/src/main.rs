//! Command-line frontend: simulate transports, run verification suites,
//! train models from supervised pairs, and integrate circle/line density
//! flows. All numerics are configured by file; the command line carries
//! paths, seeds and flags only.
//!
//! Exit codes: 0 pass, 1 suite failure, 2 parse error, 3 domain error,
//! 4 diverged training.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use steerode::bundle::BasePoint;
use steerode::config::{density_csv, trajectory_csv, CnfConfig, ModelConfig, TrainFileConfig};
use steerode::coords::Coords;
use steerode::equivariance::{check_equivariance, check_local_condition, counterexample_suite};
use steerode::error::Error;
use steerode::features::{mackey_check, BaseMap, MackeyFunction};
use steerode::learn::Dataset;
use steerode::transport::BaseCurve;

#[derive(Parser)]
#[command(name = "steerode", about = "Steerable flows on homogeneous spaces", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one steerable transport and export the trajectory.
    Simulate(SimulateArgs),
    /// Run a verification suite and write its report.
    Verify(VerifyArgs),
    /// Fit masked model parameters to a supervised dataset.
    Train(TrainArgs),
    /// Integrate a density flow and export snapshots.
    Cnf(CnfArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Input pair "p;v", coordinates comma-separated.
    #[arg(long)]
    input: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also transport around the latitude loop at this colatitude and
    /// report the holonomy angle.
    #[arg(long)]
    latitude_loop: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// One of: equivariance, wang, mackey, connection, counterexample.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// JSON-lines dataset, one pair per line.
    dataset: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CnfArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated output times in [0, 1].
    #[arg(long, default_value = "1")]
    times: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: String,
    seed: u64,
    outputs: Vec<String>,
    wall_clock_seconds: f64,
    residuals: serde_json::Value,
}

enum CliFailure {
    SuiteFailed,
    Parse(String),
    Domain(String),
    Diverged(String),
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> CliFailure {
        match e {
            Error::Config(_) => CliFailure::Parse(e.to_string()),
            Error::OutsideChart(_)
            | Error::LeftChartDomain { .. }
            | Error::UnsupportedGroup(_)
            | Error::NoQuotientRegistered(_)
            | Error::NotClosed(_)
            | Error::BranchCut { .. }
            | Error::DimMismatch { .. }
            | Error::SpecMismatch(_)
            | Error::NormalizationDrift { .. } => CliFailure::Domain(e.to_string()),
            Error::Diverged(_) => CliFailure::Diverged(e.to_string()),
            other => CliFailure::Parse(other.to_string()),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliFailure> {
    std::fs::read_to_string(path)
        .map_err(|e| CliFailure::Parse(format!("{}: {e}", path.display())))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<String, CliFailure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliFailure::Parse(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliFailure::Parse(format!("{}: {e}", path.display())))?;
    Ok(path.display().to_string())
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: &Path,
    seed: u64,
    outputs: Vec<String>,
    clock: Instant,
    residuals: serde_json::Value,
) -> Result<(), CliFailure> {
    let manifest = RunManifest {
        command: command.to_string(),
        config: config.display().to_string(),
        seed,
        outputs,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        residuals,
    };
    write_output(
        dir,
        "manifest.json",
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(())
}

fn parse_input_pair(text: &str, base_len: usize) -> Result<(Vec<f64>, Vec<f64>), CliFailure> {
    let (p_text, v_text) = text
        .split_once(';')
        .ok_or_else(|| CliFailure::Parse("input must look like \"p;v\"".into()))?;
    let parse = |chunk: &str| -> Result<Vec<f64>, CliFailure> {
        chunk
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| CliFailure::Parse(format!("input coordinate {x:?}: {e}")))
            })
            .collect()
    };
    let p = parse(p_text)?;
    let v = parse(v_text)?;
    if p.len() != base_len {
        return Err(CliFailure::Parse(format!(
            "input point has {} coordinates, the base space needs {base_len}",
            p.len()
        )));
    }
    Ok((p, v))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliFailure> {
    let clock = Instant::now();
    let config = ModelConfig::from_json(&read_to_string(&args.config)?)?;
    let model = config.to_model()?;
    let base_len = model.quotient.base_space().coord_len();
    let (p, v) = parse_input_pair(&args.input, base_len)?;
    let p = BasePoint::new(model.quotient.base_space(), Coords::from_slice(&p))?;
    let v = Coords::from_slice(&v);

    let result = model.transport(&p, &v, 1.0)?;
    let end = result.base_path[result.base_path.len() - 1];

    let mut outputs = Vec::new();
    outputs.push(write_output(
        &args.out,
        "trajectory.csv",
        &trajectory_csv(&result),
    )?);

    let holonomy_angle = match args.latitude_loop {
        Some(alpha) => Some(
            model
                .holonomy(&BaseCurve::Latitude { colatitude: alpha }, model.steps)?
                .coordinate,
        ),
        None => None,
    };

    #[derive(Serialize)]
    struct Summary {
        input_p: Vec<f64>,
        input_v: Vec<f64>,
        psi_p: Vec<f64>,
        psi_v: Vec<f64>,
        steering_end: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        holonomy_angle: Option<f64>,
    }
    let summary = Summary {
        input_p: p.coords.to_vec(),
        input_v: v.to_vec(),
        psi_p: end.coords.to_vec(),
        psi_v: result.final_feature.to_vec(),
        steering_end: result.steer_coords[result.steer_coords.len() - 1],
        holonomy_angle,
    };
    outputs.push(write_output(
        &args.out,
        "summary.json",
        &serde_json::to_string_pretty(&summary).expect("serializable"),
    )?);

    write_manifest(
        &args.out,
        "simulate",
        &args.config,
        args.seed,
        outputs,
        clock,
        serde_json::json!({ "steering_end": summary.steering_end }),
    )
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliFailure> {
    let clock = Instant::now();
    let config = ModelConfig::from_json(&read_to_string(&args.config)?)?;
    let model = config.to_model()?;

    let (pass, report) = match args.suite.as_str() {
        "equivariance" => {
            let report = check_equivariance(&model, 100, args.seed)?;
            let local = check_local_condition(&model, 50, args.seed)?;
            let pass = report.base_residual <= 1e-6
                && report.fibre_residual <= 1e-6
                && local <= 1e-6;
            (
                pass,
                serde_json::json!({
                    "pass": pass,
                    "base_residual": report.base_residual,
                    "fibre_residual": report.fibre_residual,
                    "local_condition_residual": local,
                    "witnesses": report.witnesses,
                }),
            )
        }
        "wang" => {
            let map = match &model.connection {
                steerode::connection::ConnectionForm::FromWang(map) => map.clone(),
                _ => {
                    return Err(CliFailure::Parse(
                        "the wang suite needs a from_wang connection in the config".into(),
                    ))
                }
            };
            let report = steerode::connection::wang_check(map.quotient, &map.coeffs)?;
            (
                report.pass,
                serde_json::to_value(&report).expect("serializable"),
            )
        }
        "mackey" => {
            let k = MackeyFunction {
                quotient: model.quotient,
                chart: model.chart.clone(),
                rho: model.rep,
                base_map: BaseMap::CoordinateEmbed {
                    dim: model.rep.dim_v(),
                },
            };
            let report = mackey_check(&model.quotient, &model.rep, |g| k.eval(g), 100, args.seed)?;
            (
                report.pass,
                serde_json::to_value(&report).expect("serializable"),
            )
        }
        "connection" => {
            let vertical = model.connection.vertical_residual(100, args.seed)?;
            let right = model.connection.right_equivariance_residual(100, args.seed)?;
            let splitting = model.connection.splitting_residual(100, args.seed)?;
            let invariance =
                steerode::connection::invariance_check(&model.connection, 100, args.seed)?;
            let pass = vertical <= 1e-9 && right <= 1e-9 && splitting <= 1e-9;
            (
                pass,
                serde_json::json!({
                    "pass": pass,
                    "vertical_residual": vertical,
                    "right_equivariance_residual": right,
                    "splitting_residual": splitting,
                    "invariance_residual": invariance.residual,
                }),
            )
        }
        "counterexample" => {
            let report = counterexample_suite()?;
            let pass = !report.connection_is_invariant && report.node_is_equivariant;
            (pass, serde_json::to_value(&report).expect("serializable"))
        }
        other => {
            return Err(CliFailure::Parse(format!(
                "unknown suite {other:?}; expected equivariance, wang, mackey, connection or counterexample"
            )))
        }
    };

    let report_path = write_output(
        &args.out,
        "report.json",
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    write_manifest(
        &args.out,
        "verify",
        &args.config,
        args.seed,
        vec![report_path],
        clock,
        report,
    )?;
    println!(
        "suite {}: {}",
        args.suite,
        if pass { "pass" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliFailure::SuiteFailed)
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliFailure> {
    let clock = Instant::now();
    let file: TrainFileConfig = serde_json::from_str(&read_to_string(&args.config)?)
        .map_err(|e| CliFailure::Parse(format!("train config: {e}")))?;
    let model = file.model.to_model()?;
    let mut train = file.train;
    if let Some(seed) = args.seed {
        train.seed = seed;
    }
    let dataset = Dataset::from_jsonl(
        &read_to_string(&args.dataset)?,
        model.quotient.base_space(),
    )?;

    let result = steerode::learn::fit(&model, &dataset, &train)?;
    let final_loss = *result.trace.last().expect("nonempty trace");

    let mut fitted = ModelConfig::from_model(&result.model);
    fitted.fitted = true;
    fitted.final_loss = Some(final_loss);

    let mut outputs = Vec::new();
    outputs.push(write_output(
        &args.out,
        "fitted_model.json",
        &serde_json::to_string_pretty(&fitted).expect("serializable"),
    )?);

    let mut trace_csv = String::from("iteration,loss\n");
    for (i, value) in result.trace.iter().enumerate() {
        trace_csv.push_str(&format!("{i},{value:.16e}\n"));
    }
    outputs.push(write_output(&args.out, "loss_trace.csv", &trace_csv)?);

    write_manifest(
        &args.out,
        "train",
        &args.config,
        train.seed,
        outputs,
        clock,
        serde_json::json!({
            "final_loss": final_loss,
            "iterations": result.trace.len() - 1,
            "halt": result.halt,
        }),
    )
}

fn cmd_cnf(args: &CnfArgs) -> Result<(), CliFailure> {
    let clock = Instant::now();
    let config: CnfConfig = serde_json::from_str(&read_to_string(&args.config)?)
        .map_err(|e| CliFailure::Parse(format!("density config: {e}")))?;
    let times: Vec<f64> = args
        .times
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| CliFailure::Parse(format!("time {x:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;

    let initial = config.initial_state()?;
    let mut outputs = Vec::new();
    let mut masses = Vec::new();
    for (i, t) in times.iter().enumerate() {
        let state = if *t == 0.0 {
            initial.clone()
        } else {
            steerode::density::integrate_cnf_to(&config.field, &initial, *t, config.steps)?
        };
        masses.push(serde_json::json!({ "t": t, "mass": state.mass() }));
        outputs.push(write_output(
            &args.out,
            &format!("density_{i}.csv"),
            &density_csv(&state),
        )?);
    }

    write_manifest(
        &args.out,
        "cnf",
        &args.config,
        args.seed,
        outputs,
        clock,
        serde_json::json!({ "masses": masses }),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Train(args) => cmd_train(args),
        Command::Cnf(args) => cmd_cnf(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliFailure::SuiteFailed) => ExitCode::from(1),
        Err(CliFailure::Parse(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliFailure::Domain(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
        Err(CliFailure::Diverged(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(4)
        }
    }
}
