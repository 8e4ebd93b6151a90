//! Training: squared-error objective on sliding windows, parameter-shift or
//! finite-difference gradients for the circuit angles, finite differences
//! for the encoder, and a seeded SGD/Adam loop that is bit-reproducible for
//! a fixed configuration.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::ParameterVector;
use crate::cell::{sequence_forward, EncoderParameters, QLstmCell, QLstmParameters};
use crate::data::{TimeSeriesDataset, Window};
use crate::error::{Error, Result};
use crate::io::atomic_write;

/// Shift used by the parameter-shift rule; rotation generators here have
/// eigenvalues +-1/2, so the gradient is (L(+pi/2) - L(-pi/2)) / 2.
const PS_SHIFT: f64 = std::f64::consts::FRAC_PI_2;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// How circuit-angle gradients are computed. Encoder gradients always use
/// central finite differences (the encoder enters through a normalization,
/// so no shift rule applies to it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    ParameterShift,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub grad_mode: GradMode,
    /// Step for every finite-difference derivative.
    pub fd_step: f64,
    /// Seed for the per-epoch shuffle of training windows (the only
    /// randomness in the loop).
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 5,
            epochs: 100,
            optimizer: OptimizerKind::Adam,
            grad_mode: GradMode::ParameterShift,
            fd_step: 1e-5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig {
                reason: format!("learning_rate must be positive, got {}", self.learning_rate),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig {
                reason: "batch_size must be at least 1".into(),
            });
        }
        if self.fd_step <= 0.0 || !self.fd_step.is_finite() {
            return Err(Error::InvalidConfig {
                reason: format!("fd_step must be positive, got {}", self.fd_step),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loss and prediction
// ---------------------------------------------------------------------------

/// Mean squared error between two equally long, non-empty slices.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            context: "mse inputs",
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput { context: "mse inputs" });
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Forecast for one window: the readout of the last step.
pub fn predict_window(
    cell: &QLstmCell,
    params: &QLstmParameters,
    inputs: &[f64],
) -> Result<f64> {
    let outputs = sequence_forward(cell, inputs, params)?;
    Ok(outputs.last().expect("non-empty sequence").y)
}

/// Squared error of one window's forecast.
pub fn window_loss(cell: &QLstmCell, params: &QLstmParameters, window: &Window) -> Result<f64> {
    let prediction = predict_window(cell, params, &window.inputs)?;
    let err = prediction - window.target;
    Ok(err * err)
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// Parameter-shift derivative of `loss` with respect to angle `index`:
/// re-runs the full loss at `theta +- pi/2`.
pub fn circuit_gradient_ps<F>(loss: F, params: &ParameterVector, index: usize) -> Result<f64>
where
    F: Fn(&ParameterVector) -> Result<f64>,
{
    let up = loss(&params.shifted(index, PS_SHIFT)?)?;
    let down = loss(&params.shifted(index, -PS_SHIFT)?)?;
    Ok((up - down) / 2.0)
}

/// Central finite-difference derivative of `loss` for angle `index`.
pub fn circuit_gradient_fd<F>(
    loss: F,
    params: &ParameterVector,
    index: usize,
    step: f64,
) -> Result<f64>
where
    F: Fn(&ParameterVector) -> Result<f64>,
{
    let up = loss(&params.shifted(index, step)?)?;
    let down = loss(&params.shifted(index, -step)?)?;
    Ok((up - down) / (2.0 * step))
}

/// Central finite-difference gradient of `loss` with respect to every
/// encoder weight and bias.
pub fn encoder_gradient_fd<F>(
    loss: F,
    enc: &EncoderParameters,
    step: f64,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&EncoderParameters) -> Result<f64>,
{
    let dim = enc.dim();
    let mut d_w = vec![0.0; dim];
    let mut d_b = vec![0.0; dim];
    for j in 0..dim {
        for (field_is_w, slot) in [(true, &mut d_w), (false, &mut d_b)] {
            let mut up = enc.clone();
            let mut down = enc.clone();
            if field_is_w {
                up.w_mut()[j] += step;
                down.w_mut()[j] -= step;
            } else {
                up.b_mut()[j] += step;
                down.b_mut()[j] -= step;
            }
            slot[j] = (loss(&up)? - loss(&down)?) / (2.0 * step);
        }
    }
    Ok((d_w, d_b))
}

/// Gradient of the training objective with respect to every trainable
/// number, grouped the same way as [`QLstmParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub d_theta_en: Vec<f64>,
    pub d_theta_dis: Vec<f64>,
    pub d_w: Vec<f64>,
    pub d_b: Vec<f64>,
}

impl GradientBundle {
    fn zeros_like(params: &QLstmParameters) -> Self {
        Self {
            d_theta_en: vec![0.0; params.theta_en.len()],
            d_theta_dis: vec![0.0; params.theta_dis.len()],
            d_w: vec![0.0; params.encoder.dim()],
            d_b: vec![0.0; params.encoder.dim()],
        }
    }

    fn add_assign(&mut self, other: &GradientBundle) {
        for (a, b) in self.iter_mut_all().zip(other.iter_all()) {
            *a += b;
        }
    }

    fn scale(&mut self, factor: f64) {
        for a in self.iter_mut_all() {
            *a *= factor;
        }
    }

    /// Euclidean norm over all components.
    pub fn norm(&self) -> f64 {
        self.iter_all().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter_all().all(f64::is_finite)
    }

    fn iter_all(&self) -> impl Iterator<Item = f64> + '_ {
        self.d_theta_en
            .iter()
            .chain(&self.d_theta_dis)
            .chain(&self.d_w)
            .chain(&self.d_b)
            .copied()
    }

    fn iter_mut_all(&mut self) -> impl Iterator<Item = &mut f64> {
        self.d_theta_en
            .iter_mut()
            .chain(self.d_theta_dis.iter_mut())
            .chain(self.d_w.iter_mut())
            .chain(self.d_b.iter_mut())
    }
}

/// Full gradient of one window's squared error.
pub fn gradient_for_window(
    cell: &QLstmCell,
    params: &QLstmParameters,
    window: &Window,
    cfg: &TrainConfig,
) -> Result<GradientBundle> {
    let mut bundle = GradientBundle::zeros_like(params);

    // Circuit angles: loss as a function of one angle group at a time.
    let loss_en = |theta: &ParameterVector| -> Result<f64> {
        let mut p = params.clone();
        p.theta_en = theta.clone();
        window_loss(cell, &p, window)
    };
    let loss_dis = |theta: &ParameterVector| -> Result<f64> {
        let mut p = params.clone();
        p.theta_dis = theta.clone();
        window_loss(cell, &p, window)
    };
    for i in 0..params.theta_en.len() {
        bundle.d_theta_en[i] = match cfg.grad_mode {
            GradMode::ParameterShift => circuit_gradient_ps(loss_en, &params.theta_en, i)?,
            GradMode::FiniteDifference => {
                circuit_gradient_fd(loss_en, &params.theta_en, i, cfg.fd_step)?
            }
        };
    }
    for i in 0..params.theta_dis.len() {
        bundle.d_theta_dis[i] = match cfg.grad_mode {
            GradMode::ParameterShift => circuit_gradient_ps(loss_dis, &params.theta_dis, i)?,
            GradMode::FiniteDifference => {
                circuit_gradient_fd(loss_dis, &params.theta_dis, i, cfg.fd_step)?
            }
        };
    }

    // Encoder: always finite differences.
    let loss_enc = |enc: &EncoderParameters| -> Result<f64> {
        let mut p = params.clone();
        p.encoder = enc.clone();
        window_loss(cell, &p, window)
    };
    let (d_w, d_b) = encoder_gradient_fd(loss_enc, &params.encoder, cfg.fd_step)?;
    bundle.d_w = d_w;
    bundle.d_b = d_b;
    Ok(bundle)
}

/// Mean loss and mean gradient over a batch of window indices. The batch
/// gradient is exactly the arithmetic mean of the per-window gradients.
pub fn batch_gradient(
    cell: &QLstmCell,
    params: &QLstmParameters,
    dataset: &TimeSeriesDataset,
    batch: &[usize],
    cfg: &TrainConfig,
) -> Result<(f64, GradientBundle)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput { context: "batch" });
    }
    let mut loss_sum = 0.0;
    let mut bundle = GradientBundle::zeros_like(params);
    for &idx in batch {
        let window = dataset.window(idx);
        loss_sum += window_loss(cell, params, window)?;
        bundle.add_assign(&gradient_for_window(cell, params, window, cfg)?);
    }
    let inv = 1.0 / batch.len() as f64;
    bundle.scale(inv);
    Ok((loss_sum * inv, bundle))
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

fn flatten_params(params: &QLstmParameters) -> Vec<f64> {
    let mut flat = Vec::with_capacity(
        params.theta_en.len() + params.theta_dis.len() + 2 * params.encoder.dim(),
    );
    flat.extend_from_slice(params.theta_en.as_slice());
    flat.extend_from_slice(params.theta_dis.as_slice());
    flat.extend_from_slice(params.encoder.w());
    flat.extend_from_slice(params.encoder.b());
    flat
}

fn unflatten_params(params: &mut QLstmParameters, flat: &[f64]) {
    let mut cursor = 0;
    for i in 0..params.theta_en.len() {
        params.theta_en.set(i, flat[cursor]);
        cursor += 1;
    }
    for i in 0..params.theta_dis.len() {
        params.theta_dis.set(i, flat[cursor]);
        cursor += 1;
    }
    let dim = params.encoder.dim();
    params.encoder.w_mut().copy_from_slice(&flat[cursor..cursor + dim]);
    cursor += dim;
    params.encoder.b_mut().copy_from_slice(&flat[cursor..cursor + dim]);
}

fn flatten_gradient(bundle: &GradientBundle) -> Vec<f64> {
    let mut flat = Vec::with_capacity(
        bundle.d_theta_en.len() + bundle.d_theta_dis.len() + bundle.d_w.len() + bundle.d_b.len(),
    );
    flat.extend_from_slice(&bundle.d_theta_en);
    flat.extend_from_slice(&bundle.d_theta_dis);
    flat.extend_from_slice(&bundle.d_w);
    flat.extend_from_slice(&bundle.d_b);
    flat
}

enum OptimizerState {
    Sgd,
    Adam {
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    },
}

impl OptimizerState {
    fn new(kind: OptimizerKind, dim: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => OptimizerState::Adam {
                m: vec![0.0; dim],
                v: vec![0.0; dim],
                t: 0,
            },
        }
    }

    fn step(&mut self, x: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            OptimizerState::Sgd => {
                for (xi, gi) in x.iter_mut().zip(grad) {
                    *xi -= lr * gi;
                }
            }
            OptimizerState::Adam { m, v, t } => {
                const BETA1: f64 = 0.9;
                const BETA2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                *t += 1;
                let t = *t as i32;
                for i in 0..x.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                    let m_hat = m[i] / (1.0 - BETA1.powi(t));
                    let v_hat = v[i] / (1.0 - BETA2.powi(t));
                    x[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

/// Per-epoch summary. `train_loss` and `grad_norm` are batch means at the
/// pre-update parameters; `wall_ms` is measured and therefore excluded from
/// the reproducible CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub grad_norm: f64,
    pub wall_ms: f64,
}

/// Final parameters plus the per-epoch history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: QLstmParameters,
    pub records: Vec<TrainRecord>,
}

/// Mini-batch training over the train partition. Windows are reshuffled
/// every epoch with a seeded RNG; with a fixed config and dataset the
/// records and final parameters are bit-for-bit reproducible. Zero epochs
/// returns the parameters untouched.
pub fn train(
    cell: &QLstmCell,
    dataset: &TimeSeriesDataset,
    params: QLstmParameters,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    params.validate_for(cell)?;
    if dataset.train_indices().is_empty() {
        return Err(Error::EmptyInput {
            context: "train partition",
        });
    }

    let mut params = params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut optimizer = OptimizerState::new(cfg.optimizer, flatten_params(&params).len());
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = dataset.train_indices().to_vec();

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut grad_norm_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let (batch_loss, bundle) = batch_gradient(cell, &params, dataset, batch, cfg)?;
            if !batch_loss.is_finite() || !bundle.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            let mut flat = flatten_params(&params);
            optimizer.step(&mut flat, &flatten_gradient(&bundle), cfg.learning_rate);
            if !flat.iter().all(|v| v.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            unflatten_params(&mut params, &flat);

            loss_sum += batch_loss;
            grad_norm_sum += bundle.norm();
            batches += 1;
        }

        records.push(TrainRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            grad_norm: grad_norm_sum / batches as f64,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    Ok(TrainOutcome { params, records })
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Which side of the chronological split to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Test,
}

/// One evaluated window, in the scaled (objective) space.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub index: usize,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mse: f64,
    pub rows: Vec<PredictionRow>,
}

/// Pearson correlation between two equally long slices. Errors on length
/// mismatch, fewer than two points, or a zero-variance side.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            context: "pearson inputs",
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::EmptyInput {
            context: "pearson inputs (need at least 2 points)",
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::InvalidConfig {
            reason: "pearson undefined for a constant sequence".into(),
        });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Forecast every window of a partition and report rows plus the MSE, all
/// in the scaled space the model was trained in.
pub fn evaluate(
    cell: &QLstmCell,
    params: &QLstmParameters,
    dataset: &TimeSeriesDataset,
    partition: Partition,
) -> Result<Evaluation> {
    params.validate_for(cell)?;
    let indices = match partition {
        Partition::Train => dataset.train_indices(),
        Partition::Test => dataset.test_indices(),
    };
    if indices.is_empty() {
        return Err(Error::EmptyInput {
            context: "evaluation partition",
        });
    }
    let mut rows = Vec::with_capacity(indices.len());
    for &idx in indices {
        let window = dataset.window(idx);
        rows.push(PredictionRow {
            index: idx,
            truth: window.target,
            predicted: predict_window(cell, params, &window.inputs)?,
        });
    }
    let mse = mse_loss(
        &rows.iter().map(|r| r.predicted).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.truth).collect::<Vec<_>>(),
    )?;
    Ok(Evaluation { mse, rows })
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// `epoch,train_loss,grad_norm` rows, one per epoch. Written atomically.
/// Wall-clock times are deliberately not included so identical runs produce
/// byte-identical files.
pub fn write_loss_csv(records: &[TrainRecord], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,train_loss,grad_norm\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.grad_norm));
    }
    atomic_write(path, out.as_bytes())
}

/// `index,true,predicted` rows. The caller chooses the unit system by
/// converting the rows before writing.
pub fn write_predictions_csv(rows: &[PredictionRow], path: &Path) -> Result<()> {
    let mut out = String::from("index,true,predicted\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.index, r.truth, r.predicted));
    }
    atomic_write(path, out.as_bytes())
}
