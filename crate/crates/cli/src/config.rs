//! Experiment configuration: one flat JSON object. Every field has a
//! default, so `{}` is a valid config; unknown keys are rejected so typos
//! fail loudly. Command-line flags override file values.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qlstm_core::ansatz::RotationKind;
use qlstm_core::cell::HiddenMode;
use qlstm_core::data::{
    self, fit_apply_scaling, make_windows, RawSeries, ScalingKind, TimeSeriesDataset,
};
use qlstm_core::linalg::MAX_QUBITS;
use qlstm_core::train::{GradMode, OptimizerKind, TrainConfig};

use crate::error::{AppError, Result};

/// Where the time series comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Synthetic noisy sine wave (seeded).
    Sine,
    /// One numeric column of a headered CSV file.
    Csv,
}

/// Everything a run needs, flat so configs stay greppable and diffable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // Registers and circuits.
    pub n_sys: usize,
    pub n_anc: usize,
    pub layers_en: usize,
    pub layers_dis: usize,
    pub rotation_kind: RotationKind,
    pub hidden_mode: HiddenMode,
    pub readout_qubit: usize,

    // Data source.
    pub data_source: DataSource,
    pub csv_path: Option<String>,
    pub csv_column: String,
    pub sine_points: usize,
    pub sine_t_start: f64,
    pub sine_t_end: f64,
    pub noise_lo: f64,
    pub noise_hi: f64,

    // Windowing and scaling.
    pub window_length: usize,
    pub train_fraction: f64,
    pub scaling: ScalingKind,
    pub scale_lo: f64,
    pub scale_hi: f64,

    // Optimization.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub grad_mode: GradMode,
    pub fd_step: f64,

    // Run plumbing.
    pub out_dir: String,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_sys: 2,
            n_anc: 2,
            layers_en: 2,
            layers_dis: 2,
            rotation_kind: RotationKind::Rx,
            hidden_mode: HiddenMode::Diagonal,
            readout_qubit: 0,
            data_source: DataSource::Sine,
            csv_path: None,
            csv_column: "value".to_string(),
            sine_points: 100,
            sine_t_start: 0.0,
            sine_t_end: 8.0 * PI,
            noise_lo: -0.1,
            noise_hi: 0.1,
            window_length: 4,
            train_fraction: 0.8,
            scaling: ScalingKind::Minmax,
            scale_lo: -0.8,
            scale_hi: 0.8,
            learning_rate: 0.01,
            batch_size: 5,
            epochs: 100,
            optimizer: OptimizerKind::Adam,
            grad_mode: GradMode::ParameterShift,
            fd_step: 1e-5,
            out_dir: "out".to_string(),
            seed: 42,
        }
    }
}

/// Derived seeds so the independent random streams (data noise, parameter
/// init, batch shuffling) never alias even though the config holds one seed.
pub const SEED_DATA: u64 = 0;
pub const SEED_INIT: u64 = 1;
pub const SEED_SHUFFLE: u64 = 2;

impl ExperimentConfig {
    /// Parse a JSON config file. Missing fields take defaults; unknown
    /// fields are validation errors.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            AppError::validation(format!("config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::validation(format!("config {}: {e}", path.display())))
    }

    /// Check every field, naming the offending one in the error message.
    pub fn validate(&self) -> Result<()> {
        if self.n_sys == 0 {
            return Err(AppError::validation("n_sys: must be at least 1"));
        }
        if self.n_anc == 0 {
            return Err(AppError::validation("n_anc: must be at least 1"));
        }
        if self.n_sys + self.n_anc > MAX_QUBITS {
            return Err(AppError::validation(format!(
                "n_sys + n_anc: {} + {} exceeds the {MAX_QUBITS}-qubit simulator maximum",
                self.n_sys, self.n_anc
            )));
        }
        if self.readout_qubit >= self.n_sys {
            return Err(AppError::validation(format!(
                "readout_qubit: {} is outside the system register (n_sys = {})",
                self.readout_qubit, self.n_sys
            )));
        }
        if self.window_length == 0 {
            return Err(AppError::validation("window_length: must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(AppError::validation(format!(
                "train_fraction: {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        if self.scaling == ScalingKind::Minmax
            && (self.scale_lo >= self.scale_hi
                || !self.scale_lo.is_finite()
                || !self.scale_hi.is_finite())
        {
            return Err(AppError::validation(format!(
                "scale_lo/scale_hi: [{}, {}] is not a valid target interval",
                self.scale_lo, self.scale_hi
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(AppError::validation(format!(
                "learning_rate: {} must be positive and finite",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(AppError::validation("batch_size: must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(AppError::validation("epochs: must be at least 1"));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(AppError::validation(format!(
                "fd_step: {} must be positive and finite",
                self.fd_step
            )));
        }
        match self.data_source {
            DataSource::Sine => {
                self.validate_generation()?;
                if self.sine_points < self.window_length + 2 {
                    return Err(AppError::validation(format!(
                        "sine_points: {} is too short for window_length {} (need at least {})",
                        self.sine_points,
                        self.window_length,
                        self.window_length + 2
                    )));
                }
            }
            DataSource::Csv => {
                let path = self.csv_path.as_deref().ok_or_else(|| {
                    AppError::validation("csv_path: required when data_source is \"csv\"")
                })?;
                if !Path::new(path).is_file() {
                    return Err(AppError::validation(format!(
                        "csv_path: file not found: {path}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Just the fields sine generation touches. `generate-sine` exports the
    /// series standalone, so it does not require a full training config.
    pub fn validate_generation(&self) -> Result<()> {
        if self.sine_points < 2 {
            return Err(AppError::validation(format!(
                "sine_points: {} must be at least 2",
                self.sine_points
            )));
        }
        if self.sine_t_end <= self.sine_t_start
            || !self.sine_t_start.is_finite()
            || !self.sine_t_end.is_finite()
        {
            return Err(AppError::validation(format!(
                "sine_t_start/sine_t_end: [{}, {}] is not a valid time range",
                self.sine_t_start, self.sine_t_end
            )));
        }
        if self.noise_lo > self.noise_hi {
            return Err(AppError::validation(format!(
                "noise_lo/noise_hi: [{}, {}] is not a valid interval",
                self.noise_lo, self.noise_hi
            )));
        }
        Ok(())
    }

    /// The synthetic series this config describes (regardless of
    /// `data_source`, so the generator works from any config).
    pub fn generate_sine(&self) -> Result<RawSeries> {
        data::generate_noisy_sine(
            self.sine_points,
            self.sine_t_start,
            self.sine_t_end,
            self.noise_lo,
            self.noise_hi,
            self.seed.wrapping_add(SEED_DATA),
        )
        .map_err(|e| AppError::validation(e.to_string()))
    }

    /// The raw (unscaled) series this config describes. Problems with the
    /// data itself (missing column, bad cell, too short) are validation
    /// errors: they are fixed by changing the inputs, not by rerunning.
    pub fn load_series(&self) -> Result<RawSeries> {
        match self.data_source {
            DataSource::Sine => self.generate_sine(),
            DataSource::Csv => {
                let path = self.csv_path.as_deref().ok_or_else(|| {
                    AppError::validation("csv_path: required when data_source is \"csv\"")
                })?;
                data::load_csv(Path::new(path), &self.csv_column)
                    .map_err(|e| AppError::validation(e.to_string()))
            }
        }
    }

    /// Scaled, windowed, chronologically split dataset. Train and eval both
    /// call this, so the evaluation space is identical across commands.
    pub fn build_dataset(&self) -> Result<TimeSeriesDataset> {
        let series = self.load_series()?;
        let (scaled, spec) = fit_apply_scaling(
            &series,
            self.scaling,
            self.scale_lo,
            self.scale_hi,
            self.train_fraction,
        )
        .map_err(|e| AppError::validation(e.to_string()))?;
        make_windows(&scaled, spec, self.window_length, self.train_fraction)
            .map_err(|e| AppError::validation(e.to_string()))
    }

    /// Optimizer settings for `qlstm_core::train::train`.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            optimizer: self.optimizer,
            grad_mode: self.grad_mode,
            fd_step: self.fd_step,
            seed: self.seed.wrapping_add(SEED_SHUFFLE),
        }
    }
}
