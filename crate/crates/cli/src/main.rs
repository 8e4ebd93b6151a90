//! `qlstm`: train and analyze a hybrid quantum-classical LSTM on scalar
//! time series. Every command is deterministic under a fixed config and
//! seed, and every artifact is written atomically.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config or input
//! files), 2 runtime failure (I/O mid-run, divergence, numerics).

mod config;
mod error;
mod model;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qlstm_core::cell::{QLstmCell, QLstmParameters};
use qlstm_core::data::{time_grid, ScalingSpec};
use qlstm_core::entanglement::{
    estimate_disentangling_power, estimate_entangling_power, PowerConfig,
};
use qlstm_core::io::atomic_write;
use qlstm_core::linalg::{CMatrix, UnitaryMatrix};
use qlstm_core::Complex64;
use qlstm_core::train::{
    evaluate, train, write_loss_csv, write_predictions_csv, Evaluation, Partition, PredictionRow,
};

use config::{ExperimentConfig, SEED_INIT};
use error::{AppError, Result};
use model::ModelFile;

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "qlstm",
    version,
    about = "Quantum LSTM forecasting and unitary entanglement analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Values given here override the config
/// file.
#[derive(Args)]
struct CommonArgs {
    /// JSON config file; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic noisy sine series as a t,value CSV file.
    GenerateSine(GenerateSineArgs),
    /// Train on the configured series; writes loss.csv, predictions.csv
    /// and model.json into the output directory.
    Train(TrainArgs),
    /// Evaluate a trained model on the test partition.
    Eval(EvalArgs),
    /// Estimate entangling and disentangling power of a unitary.
    Entpower(EntpowerArgs),
    /// Render a CSV artifact as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenerateSineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of samples (overrides the config's sine_points).
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trained model file (default: <out>/model.json).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Identity,
    Cnot,
    Swap,
}

#[derive(Args)]
struct EntpowerArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Analyze a built-in gate instead of a trained model.
    #[arg(long, conflicts_with = "model")]
    builtin: Option<Builtin>,
    /// Analyze the net step unitary (disentangler times entangler) of a
    /// trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// System-register qubits of the split (builtin unitaries only).
    #[arg(long)]
    n_sys: Option<usize>,
    /// Ancilla-register qubits of the split (builtin unitaries only).
    #[arg(long)]
    n_anc: Option<usize>,
    /// Gradient-ascent restarts (default 32).
    #[arg(long)]
    restarts: Option<usize>,
    /// Step budget per restart (default 500).
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV file to render (first column is the x axis).
    input: PathBuf,
    /// Output SVG path (default: <out>/<input stem>.svg).
    #[arg(long)]
    output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Entry point and dispatch
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateSine(args) => cmd_generate_sine(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Entpower(args) => cmd_entpower(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

/// Config file (or defaults) with flag overrides applied.
fn effective_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn out_path(cfg: &ExperimentConfig, file: &str) -> PathBuf {
    Path::new(&cfg.out_dir).join(file)
}

// ---------------------------------------------------------------------------
// generate-sine
// ---------------------------------------------------------------------------

fn cmd_generate_sine(args: GenerateSineArgs) -> Result<()> {
    let mut cfg = effective_config(&args.common)?;
    if let Some(points) = args.points {
        cfg.sine_points = points;
    }
    cfg.validate_generation()?;

    let series = cfg.generate_sine()?;
    let grid = time_grid(cfg.sine_points, cfg.sine_t_start, cfg.sine_t_end)
        .map_err(|e| AppError::validation(e.to_string()))?;

    let mut text = String::from("t,value\n");
    for (t, v) in grid.iter().zip(series.values()) {
        text.push_str(&format!("{t},{v}\n"));
    }
    let path = out_path(&cfg, "sine.csv");
    atomic_write(&path, text.as_bytes())?;
    eprintln!("wrote {} rows to {}", series.len(), path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Map evaluation rows back to the units of the input series.
fn to_original_units(eval: &Evaluation, scaling: &ScalingSpec) -> Vec<PredictionRow> {
    eval.rows
        .iter()
        .map(|r| PredictionRow {
            index: r.index,
            truth: scaling.invert(r.truth),
            predicted: scaling.invert(r.predicted),
        })
        .collect()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = effective_config(&args.common)?;
    cfg.validate()?;

    let dataset = cfg.build_dataset()?;
    let cell = QLstmCell::new(
        cfg.n_sys,
        cfg.n_anc,
        cfg.layers_en,
        cfg.layers_dis,
        cfg.rotation_kind,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(SEED_INIT));
    let params = QLstmParameters::init(&cell, cfg.readout_qubit, cfg.hidden_mode, &mut rng)?;

    let outcome = train(&cell, &dataset, params, &cfg.train_config())?;

    let train_eval = evaluate(&cell, &outcome.params, &dataset, Partition::Train)?;
    let test_eval = evaluate(&cell, &outcome.params, &dataset, Partition::Test)?;

    let loss_path = out_path(&cfg, "loss.csv");
    write_loss_csv(&outcome.records, &loss_path)?;
    eprintln!("wrote {}", loss_path.display());

    let original = to_original_units(&test_eval, dataset.scaling());
    let pred_path = out_path(&cfg, "predictions.csv");
    write_predictions_csv(&original, &pred_path)?;
    eprintln!("wrote {}", pred_path.display());

    let model_path = out_path(&cfg, "model.json");
    ModelFile::from_trained(&cfg, &outcome.params).save(&model_path)?;
    eprintln!("wrote {}", model_path.display());

    println!("train_mse={}", train_eval.mse);
    println!("test_mse={}", test_eval.mse);
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cfg = effective_config(&args.common)?;
    cfg.validate()?;

    let model_path = args
        .model
        .unwrap_or_else(|| out_path(&cfg, "model.json"));
    let model = ModelFile::load(&model_path)?;
    model.check_compatible(&cfg)?;
    if model.seed != cfg.seed {
        eprintln!(
            "note: model was trained with seed {}, evaluating with seed {}",
            model.seed, cfg.seed
        );
    }

    let cell = model.build_cell()?;
    let params = model.build_params(&cell)?;
    let dataset = cfg.build_dataset()?;
    let test_eval = evaluate(&cell, &params, &dataset, Partition::Test)?;

    let original = to_original_units(&test_eval, dataset.scaling());
    let pred_path = out_path(&cfg, "predictions.csv");
    write_predictions_csv(&original, &pred_path)?;
    eprintln!("wrote {}", pred_path.display());

    let mse_original = {
        let predicted: Vec<f64> = original.iter().map(|r| r.predicted).collect();
        let truth: Vec<f64> = original.iter().map(|r| r.truth).collect();
        qlstm_core::train::mse_loss(&predicted, &truth)?
    };
    println!("test_mse={}", test_eval.mse);
    println!("test_mse_original={mse_original}");
    Ok(())
}

// ---------------------------------------------------------------------------
// entpower
// ---------------------------------------------------------------------------

/// Big-endian two-qubit CNOT (control = qubit 0, target = qubit 1).
fn cnot_unitary() -> UnitaryMatrix {
    let m = CMatrix::from_fn(4, |r, col| {
        let mapped = match col {
            2 => 3,
            3 => 2,
            other => other,
        };
        if r == mapped {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    UnitaryMatrix::new(m).expect("permutation matrix is unitary")
}

/// Two-qubit SWAP.
fn swap_unitary() -> UnitaryMatrix {
    let m = CMatrix::from_fn(4, |r, col| {
        let mapped = match col {
            1 => 2,
            2 => 1,
            other => other,
        };
        if r == mapped {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    UnitaryMatrix::new(m).expect("permutation matrix is unitary")
}

fn cmd_entpower(args: EntpowerArgs) -> Result<()> {
    let cfg = effective_config(&args.common)?;

    let (name, unitary, n_sys, n_anc) = match (&args.builtin, &args.model) {
        (Some(builtin), None) => {
            let n_sys = args.n_sys.unwrap_or(1);
            let n_anc = args.n_anc.unwrap_or(1);
            if n_sys == 0 || n_anc == 0 {
                return Err(AppError::validation(
                    "n_sys/n_anc: both sides of the split need at least one qubit",
                ));
            }
            match builtin {
                Builtin::Identity => {
                    let u = UnitaryMatrix::identity(n_sys + n_anc)
                        .map_err(|e| AppError::validation(e.to_string()))?;
                    ("identity", u, n_sys, n_anc)
                }
                Builtin::Cnot | Builtin::Swap => {
                    if n_sys + n_anc != 2 {
                        return Err(AppError::validation(format!(
                            "n_sys/n_anc: built-in {} is a two-qubit gate; only a 1|1 split fits",
                            match builtin {
                                Builtin::Cnot => "cnot",
                                _ => "swap",
                            }
                        )));
                    }
                    match builtin {
                        Builtin::Cnot => ("cnot", cnot_unitary(), n_sys, n_anc),
                        _ => ("swap", swap_unitary(), n_sys, n_anc),
                    }
                }
            }
        }
        (None, Some(path)) => {
            if args.n_sys.is_some() || args.n_anc.is_some() {
                return Err(AppError::validation(
                    "n_sys/n_anc: the split of a model unitary comes from the model file",
                ));
            }
            let model = ModelFile::load(path)?;
            let cell = model.build_cell()?;
            let params = model.build_params(&cell)?;
            let u_en = qlstm_core::ansatz::build_unitary(cell.ansatz_en(), &params.theta_en)?;
            let u_dis = qlstm_core::ansatz::build_unitary(cell.ansatz_dis(), &params.theta_dis)?;
            let u = u_dis.compose(&u_en)?;
            ("model", u, model.n_sys, model.n_anc)
        }
        _ => {
            return Err(AppError::validation(
                "exactly one of --builtin or --model is required",
            ));
        }
    };

    let split = qlstm_core::linalg::BipartiteSplit::new(n_sys, n_anc)
        .map_err(|e| AppError::validation(e.to_string()))?;
    let mut power_cfg = PowerConfig {
        seed: cfg.seed,
        ..PowerConfig::default()
    };
    if let Some(restarts) = args.restarts {
        if restarts == 0 {
            return Err(AppError::validation("restarts: must be at least 1"));
        }
        power_cfg.restarts = restarts;
    }
    if let Some(max_steps) = args.max_steps {
        power_cfg.max_steps = max_steps;
    }

    let up = estimate_entangling_power(&unitary, &split, &power_cfg)?;
    let down = estimate_disentangling_power(&unitary, &split, &power_cfg)?;

    println!("name,E_up,E_down,restarts,converged");
    println!(
        "{},{},{},{},{}",
        name,
        up.value,
        down.value,
        power_cfg.restarts,
        up.converged && down.converged
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let cfg = effective_config(&args.common)?;
    let svg_text = svg::render_csv_chart(&args.input)?;
    let output = match args.output {
        Some(path) => path,
        None => {
            let stem = args
                .input
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| {
                    AppError::validation(format!(
                        "input: cannot derive an output name from {}",
                        args.input.display()
                    ))
                })?;
            out_path(&cfg, &format!("{stem}.svg"))
        }
    };
    atomic_write(&output, svg_text.as_bytes())?;
    eprintln!("wrote {}", output.display());
    Ok(())
}
