//! Data pipeline: noisy-sine generation, CSV ingestion, min-max scaling
//! fitted on the training prefix only, and sliding-window datasets with a
//! chronological train/test split.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Raw series
// ---------------------------------------------------------------------------

/// A univariate time series plus a human-readable note on where it came
/// from (used in error messages and run summaries).
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    values: Vec<f64>,
    source_tag: String,
}

impl RawSeries {
    pub fn new(values: Vec<f64>, source_tag: impl Into<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                min: 2,
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "series values",
            });
        }
        Ok(Self {
            values,
            source_tag: source_tag.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }
}

/// Equally spaced grid of `n_points` values covering `[t_start, t_end]`
/// inclusive.
pub fn time_grid(n_points: usize, t_start: f64, t_end: f64) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::SeriesTooShort {
            len: n_points,
            min: 2,
        });
    }
    if t_end <= t_start || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidConfig {
            reason: format!("bad time range [{t_start}, {t_end}]"),
        });
    }
    let step = (t_end - t_start) / (n_points - 1) as f64;
    Ok((0..n_points).map(|k| t_start + k as f64 * step).collect())
}

/// `sin(t_k)` plus independent uniform noise from `[noise_lo, noise_hi)`
/// on an inclusive grid over `[t_start, t_end]`. Seeded and reproducible.
pub fn generate_noisy_sine(
    n_points: usize,
    t_start: f64,
    t_end: f64,
    noise_lo: f64,
    noise_hi: f64,
    seed: u64,
) -> Result<RawSeries> {
    if !noise_lo.is_finite() || !noise_hi.is_finite() || noise_lo > noise_hi {
        return Err(Error::InvalidConfig {
            reason: format!("bad noise interval [{noise_lo}, {noise_hi}]"),
        });
    }
    let grid = time_grid(n_points, t_start, t_end)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = grid
        .into_iter()
        .map(|t| {
            let noise = if noise_hi > noise_lo {
                rng.gen_range(noise_lo..noise_hi)
            } else {
                noise_lo
            };
            t.sin() + noise
        })
        .collect();
    RawSeries::new(values, format!("sine(n={n_points}, seed={seed})"))
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Read one numeric column from a headered CSV file.
pub fn load_csv(path: &Path, column: &str) -> Result<RawSeries> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedCsv {
            path: display.clone(),
            reason: e.to_string(),
        })?
        .clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::ColumnNotFound {
            column: column.to_string(),
            available: headers.iter().map(str::to_string).collect(),
        })?;

    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1; // 1-based data row, header not counted
        let record = record.map_err(|e| Error::MalformedCsv {
            path: display.clone(),
            reason: format!("data row {row}: {e}"),
        })?;
        let cell = record.get(col).unwrap_or("").trim();
        let value: f64 = cell.parse().map_err(|_| Error::BadCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::BadCell {
                row,
                column: column.to_string(),
                value: cell.to_string(),
            });
        }
        values.push(value);
    }
    RawSeries::new(values, display)
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// Which scaling to apply before windowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingKind {
    /// Leave values untouched.
    None,
    /// Affine map sending the fitted `[min, max]` onto `[out_lo, out_hi]`.
    Minmax,
}

/// A fitted, invertible scaling. `apply` then `invert` is the identity to
/// machine precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSpec {
    pub kind: ScalingKind,
    pub out_lo: f64,
    pub out_hi: f64,
    pub fitted_min: f64,
    pub fitted_max: f64,
}

impl ScalingSpec {
    pub fn identity() -> Self {
        Self {
            kind: ScalingKind::None,
            out_lo: 0.0,
            out_hi: 1.0,
            fitted_min: 0.0,
            fitted_max: 1.0,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self.kind {
            ScalingKind::None => x,
            ScalingKind::Minmax => {
                self.out_lo
                    + (x - self.fitted_min) * (self.out_hi - self.out_lo)
                        / (self.fitted_max - self.fitted_min)
            }
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        match self.kind {
            ScalingKind::None => y,
            ScalingKind::Minmax => {
                self.fitted_min
                    + (y - self.out_lo) * (self.fitted_max - self.fitted_min)
                        / (self.out_hi - self.out_lo)
            }
        }
    }
}

/// Fit the scaling on the leading `train_fraction` of the series (so the
/// test region never leaks into the fit) and apply it to the whole series.
pub fn fit_apply_scaling(
    series: &RawSeries,
    kind: ScalingKind,
    out_lo: f64,
    out_hi: f64,
    train_fraction: f64,
) -> Result<(Vec<f64>, ScalingSpec)> {
    if kind == ScalingKind::None {
        return Ok((series.values().to_vec(), ScalingSpec::identity()));
    }
    if out_lo >= out_hi || !out_lo.is_finite() || !out_hi.is_finite() {
        return Err(Error::InvalidConfig {
            reason: format!("bad scaling target interval [{out_lo}, {out_hi}]"),
        });
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidConfig {
            reason: format!("train fraction {train_fraction} outside [0, 1]"),
        });
    }
    let prefix = ((series.len() as f64) * train_fraction).floor() as usize;
    let prefix = prefix.min(series.len());
    if prefix == 0 {
        return Err(Error::InvalidConfig {
            reason: "scaling fit needs a non-empty training prefix".into(),
        });
    }
    let fit = &series.values()[..prefix];
    let fitted_min = fit.iter().copied().fold(f64::INFINITY, f64::min);
    let fitted_max = fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if fitted_max - fitted_min < 1e-12 {
        return Err(Error::ConstantSeries);
    }
    let spec = ScalingSpec {
        kind,
        out_lo,
        out_hi,
        fitted_min,
        fitted_max,
    };
    let scaled = series.values().iter().map(|&x| spec.apply(x)).collect();
    Ok((scaled, spec))
}

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

/// One supervised example: `window_length` consecutive values and the value
/// that follows them. `start` is the position of the first input value in
/// the series, which (with stride 1) equals the window's index.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<f64>,
    pub target: f64,
    pub start: usize,
}

/// Sliding windows over a scaled series with a chronological split: the
/// first `train_fraction` of windows train, the rest test.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    windows: Vec<Window>,
    train_indices: Vec<usize>,
    test_indices: Vec<usize>,
    scaling: ScalingSpec,
    window_length: usize,
}

impl TimeSeriesDataset {
    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn window(&self, index: usize) -> &Window {
        &self.windows[index]
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_indices
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test_indices
    }

    pub fn scaling(&self) -> &ScalingSpec {
        &self.scaling
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }
}

/// Build the window dataset from an already-scaled series.
pub fn make_windows(
    scaled: &[f64],
    scaling: ScalingSpec,
    window_length: usize,
    train_fraction: f64,
) -> Result<TimeSeriesDataset> {
    if window_length == 0 {
        return Err(Error::InvalidConfig {
            reason: "window length must be at least 1".into(),
        });
    }
    if scaled.len() < window_length + 2 {
        // need at least two windows so both partitions can be non-trivial
        return Err(Error::SeriesTooShort {
            len: scaled.len(),
            min: window_length + 2,
        });
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidConfig {
            reason: format!("train fraction {train_fraction} outside [0, 1]"),
        });
    }
    let n_windows = scaled.len() - window_length;
    let windows: Vec<Window> = (0..n_windows)
        .map(|k| Window {
            inputs: scaled[k..k + window_length].to_vec(),
            target: scaled[k + window_length],
            start: k,
        })
        .collect();
    let boundary = ((n_windows as f64) * train_fraction).floor() as usize;
    let boundary = boundary.min(n_windows);
    Ok(TimeSeriesDataset {
        windows,
        train_indices: (0..boundary).collect(),
        test_indices: (boundary..n_windows).collect(),
        scaling,
        window_length,
    })
}
