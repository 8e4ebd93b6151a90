//! Trained-model file: JSON carrying the architecture shapes, the seed the
//! run used, and every trainable number, so `eval` and `entpower` can
//! rebuild the exact cell and refuse incompatible configs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qlstm_core::ansatz::{ParameterVector, RotationKind};
use qlstm_core::cell::{EncoderParameters, HiddenMode, QLstmCell, QLstmParameters};
use qlstm_core::io::atomic_write;

use crate::config::ExperimentConfig;
use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_sys: usize,
    pub n_anc: usize,
    pub layers_en: usize,
    pub layers_dis: usize,
    pub rotation_kind: RotationKind,
    pub hidden_mode: HiddenMode,
    pub readout_qubit: usize,
    pub window_length: usize,
    /// Seed of the run that produced this model (data noise, init and
    /// shuffling streams are derived from it).
    pub seed: u64,
    pub encoder_w: Vec<f64>,
    pub encoder_b: Vec<f64>,
    pub theta_en: Vec<f64>,
    pub theta_dis: Vec<f64>,
}

impl ModelFile {
    pub fn from_trained(cfg: &ExperimentConfig, params: &QLstmParameters) -> Self {
        Self {
            n_sys: cfg.n_sys,
            n_anc: cfg.n_anc,
            layers_en: cfg.layers_en,
            layers_dis: cfg.layers_dis,
            rotation_kind: cfg.rotation_kind,
            hidden_mode: params.hidden_mode,
            readout_qubit: params.readout_qubit,
            window_length: cfg.window_length,
            seed: cfg.seed,
            encoder_w: params.encoder.w().to_vec(),
            encoder_b: params.encoder.b().to_vec(),
            theta_en: params.theta_en.as_slice().to_vec(),
            theta_dis: params.theta_dis.as_slice().to_vec(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            AppError::validation(format!("model {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::validation(format!("model {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| AppError::runtime(format!("serializing model: {e}")))?;
        text.push('\n');
        atomic_write(path, text.as_bytes())?;
        Ok(())
    }

    /// The architecture fields of the model and the config must agree;
    /// mismatches are validation errors naming the field.
    pub fn check_compatible(&self, cfg: &ExperimentConfig) -> Result<()> {
        fn field<T: PartialEq + std::fmt::Debug>(
            name: &str,
            model: T,
            config: T,
        ) -> Result<()> {
            if model != config {
                return Err(AppError::validation(format!(
                    "{name}: model has {model:?} but config has {config:?}"
                )));
            }
            Ok(())
        }
        field("n_sys", self.n_sys, cfg.n_sys)?;
        field("n_anc", self.n_anc, cfg.n_anc)?;
        field("layers_en", self.layers_en, cfg.layers_en)?;
        field("layers_dis", self.layers_dis, cfg.layers_dis)?;
        field("rotation_kind", self.rotation_kind, cfg.rotation_kind)?;
        field("hidden_mode", self.hidden_mode, cfg.hidden_mode)?;
        field("readout_qubit", self.readout_qubit, cfg.readout_qubit)?;
        field("window_length", self.window_length, cfg.window_length)?;
        Ok(())
    }

    pub fn build_cell(&self) -> Result<QLstmCell> {
        Ok(QLstmCell::new(
            self.n_sys,
            self.n_anc,
            self.layers_en,
            self.layers_dis,
            self.rotation_kind,
        )?)
    }

    pub fn build_params(&self, cell: &QLstmCell) -> Result<QLstmParameters> {
        let params = QLstmParameters {
            encoder: EncoderParameters::new(self.encoder_w.clone(), self.encoder_b.clone())?,
            theta_en: ParameterVector::new(self.theta_en.clone())?,
            theta_dis: ParameterVector::new(self.theta_dis.clone())?,
            readout_qubit: self.readout_qubit,
            hidden_mode: self.hidden_mode,
        };
        params
            .validate_for(cell)
            .map_err(|e| AppError::validation(format!("model parameters: {e}")))?;
        Ok(params)
    }
}
