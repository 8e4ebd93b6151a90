//! The recurrent cell. One step: encode the scalar input as real amplitudes
//! on the system register, tensor with the carried ancilla state, run the
//! entangling circuit then the disentangling circuit, read out `<Z>` on one
//! system qubit, and compress the ancilla marginal into the next hidden
//! state (either by collapsing onto the likeliest system outcome or by
//! keeping the ancilla populations).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_ansatz, LayeredAnsatz, ParameterVector, RotationKind};
use crate::entanglement::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::linalg::{c, qubit_bit, reduced_density, BipartiteSplit, StateVector, Subsystem};

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

/// Per-amplitude affine map `a_j = w_j * x + b_j` feeding the system
/// register. `w` and `b` have one entry per system basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParameters {
    w: Vec<f64>,
    b: Vec<f64>,
}

impl EncoderParameters {
    pub fn new(w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if w.len() != b.len() {
            return Err(Error::LengthMismatch {
                context: "encoder weights/biases",
                left: w.len(),
                right: b.len(),
            });
        }
        if w.len() < 2 || !w.len().is_power_of_two() {
            return Err(Error::BadStateLength { len: w.len() });
        }
        if !w.iter().chain(b.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "encoder parameters",
            });
        }
        Ok(Self { w, b })
    }

    /// Random init: weights uniform in [-1, 1), biases uniform in
    /// [0.1, 0.2) so the amplitude vector never starts at zero.
    pub fn init<R: Rng>(n_sys: usize, rng: &mut R) -> Result<Self> {
        let dim = 1usize
            .checked_shl(n_sys as u32)
            .filter(|_| n_sys >= 1)
            .ok_or(Error::InvalidConfig {
                reason: "encoder needs at least one system qubit".into(),
            })?;
        let w = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = (0..dim).map(|_| rng.gen_range(0.1..0.2)).collect();
        Self::new(w, b)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub(crate) fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub(crate) fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }
}

/// Map a scalar to a normalized real-amplitude system state.
pub fn encode_input(x: f64, enc: &EncoderParameters) -> Result<StateVector> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "encoder input",
        });
    }
    let amps: Vec<Complex64> = enc
        .w
        .iter()
        .zip(enc.b.iter())
        .map(|(w, b)| c(w * x + b, 0.0))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-12 {
        return Err(Error::DegenerateEncoding { input: x });
    }
    StateVector::new(amps.into_iter().map(|a| a / norm).collect())
}

// ---------------------------------------------------------------------------
// Hidden state
// ---------------------------------------------------------------------------

/// How the ancilla is compressed into the next hidden state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HiddenMode {
    /// Keep the (renormalized) ancilla branch of the likeliest system
    /// outcome. Mimics a measurement; can jump discontinuously when the
    /// argmax outcome changes between steps.
    Collapsed,
    /// Keep the ancilla populations (diagonal of the marginal),
    /// renormalized to unit 2-norm and re-embedded as real amplitudes.
    /// Smooth in the circuit parameters.
    Diagonal,
}

/// Ancilla state carried between steps, tagged with the rule that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    state: StateVector,
    mode: HiddenMode,
}

impl HiddenState {
    pub fn new(state: StateVector, mode: HiddenMode) -> Result<Self> {
        if mode == HiddenMode::Diagonal {
            let ok = state
                .amplitudes()
                .iter()
                .all(|a| a.im.abs() <= 1e-12 && a.re >= -1e-12);
            if !ok {
                return Err(Error::InvalidConfig {
                    reason: "diagonal hidden state must have non-negative real entries".into(),
                });
            }
        }
        Ok(Self { state, mode })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn mode(&self) -> HiddenMode {
        self.mode
    }
}

/// `|0...0>` on the ancilla register.
pub fn initial_hidden(n_anc: usize, mode: HiddenMode) -> Result<HiddenState> {
    HiddenState::new(StateVector::zero(n_anc)?, mode)
}

// ---------------------------------------------------------------------------
// Cell architecture and parameters
// ---------------------------------------------------------------------------

/// Static architecture: register split plus the entangling/disentangling
/// circuit structures. The trainable numbers live in [`QLstmParameters`].
#[derive(Debug, Clone)]
pub struct QLstmCell {
    split: BipartiteSplit,
    ansatz_en: LayeredAnsatz,
    ansatz_dis: LayeredAnsatz,
}

impl QLstmCell {
    pub fn new(
        n_sys: usize,
        n_anc: usize,
        layers_en: usize,
        layers_dis: usize,
        rotation_kind: RotationKind,
    ) -> Result<Self> {
        let split = BipartiteSplit::new(n_sys, n_anc)?;
        let total = split.total_qubits();
        Ok(Self {
            split,
            ansatz_en: LayeredAnsatz::new(total, layers_en, rotation_kind)?,
            ansatz_dis: LayeredAnsatz::new(total, layers_dis, rotation_kind)?,
        })
    }

    pub fn split(&self) -> &BipartiteSplit {
        &self.split
    }

    pub fn n_sys(&self) -> usize {
        self.split.n_sys()
    }

    pub fn n_anc(&self) -> usize {
        self.split.n_anc()
    }

    pub fn ansatz_en(&self) -> &LayeredAnsatz {
        &self.ansatz_en
    }

    pub fn ansatz_dis(&self) -> &LayeredAnsatz {
        &self.ansatz_dis
    }
}

/// Everything the optimizer touches, plus the readout/compression choices.
#[derive(Debug, Clone, PartialEq)]
pub struct QLstmParameters {
    pub encoder: EncoderParameters,
    pub theta_en: ParameterVector,
    pub theta_dis: ParameterVector,
    pub readout_qubit: usize,
    pub hidden_mode: HiddenMode,
}

impl QLstmParameters {
    /// Fresh random parameters for a cell: uniform angles in [0, 2*pi),
    /// encoder weights/biases from [`EncoderParameters::init`].
    pub fn init<R: Rng>(
        cell: &QLstmCell,
        readout_qubit: usize,
        hidden_mode: HiddenMode,
        rng: &mut R,
    ) -> Result<Self> {
        let params = Self {
            encoder: EncoderParameters::init(cell.n_sys(), rng)?,
            theta_en: ParameterVector::random(cell.ansatz_en.param_count(), rng),
            theta_dis: ParameterVector::random(cell.ansatz_dis.param_count(), rng),
            readout_qubit,
            hidden_mode,
        };
        params.validate_for(cell)?;
        Ok(params)
    }

    pub fn validate_for(&self, cell: &QLstmCell) -> Result<()> {
        if self.encoder.dim() != cell.split.dim_a() {
            return Err(Error::DimensionMismatch {
                context: "encoder width",
                expected: cell.split.dim_a(),
                actual: self.encoder.dim(),
            });
        }
        if self.theta_en.len() != cell.ansatz_en.param_count() {
            return Err(Error::ParameterCount {
                expected: cell.ansatz_en.param_count(),
                actual: self.theta_en.len(),
            });
        }
        if self.theta_dis.len() != cell.ansatz_dis.param_count() {
            return Err(Error::ParameterCount {
                expected: cell.ansatz_dis.param_count(),
                actual: self.theta_dis.len(),
            });
        }
        if self.readout_qubit >= cell.n_sys() {
            return Err(Error::QubitOutOfRange {
                qubit: self.readout_qubit,
                num_qubits: cell.n_sys(),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

/// Per-step observables that are not part of the prediction itself.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDiagnostics {
    /// Entropy of the ancilla marginal after the step, in bits.
    pub entropy_anc: f64,
    /// Collapsed mode: which system outcome was kept. `None` in diagonal
    /// mode.
    pub selected_index: Option<usize>,
    /// Probabilities of the system basis outcomes.
    pub probabilities: Vec<f64>,
}

/// Output of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutput {
    /// `<Z>` on the readout qubit, in [-1, 1].
    pub y: f64,
    pub hidden: HiddenState,
    pub diagnostics: CellDiagnostics,
}

/// `<Z>` on one qubit: +1 weight where its bit is 0, -1 where it is 1.
pub fn readout_expectation(state: &StateVector, qubit: usize) -> Result<f64> {
    let n = state.num_qubits();
    if qubit >= n {
        return Err(Error::QubitOutOfRange {
            qubit,
            num_qubits: n,
        });
    }
    let mut y = 0.0;
    for (z, amp) in state.amplitudes().iter().enumerate() {
        let sign = if qubit_bit(z, qubit, n) == 0 { 1.0 } else { -1.0 };
        y += sign * amp.norm_sqr();
    }
    Ok(y)
}

/// One recurrent step.
pub fn cell_forward(
    cell: &QLstmCell,
    x: f64,
    h_prev: &HiddenState,
    params: &QLstmParameters,
) -> Result<CellOutput> {
    params.validate_for(cell)?;
    if h_prev.state().num_qubits() != cell.n_anc() {
        return Err(Error::DimensionMismatch {
            context: "hidden state width",
            expected: cell.split.dim_b(),
            actual: h_prev.state().dim(),
        });
    }

    let psi_x = encode_input(x, &params.encoder)?;
    let joint = psi_x.tensor(h_prev.state())?;
    let entangled = apply_ansatz(&cell.ansatz_en, &params.theta_en, &joint)?;
    let evolved = apply_ansatz(&cell.ansatz_dis, &params.theta_dis, &entangled)?;

    let y = readout_expectation(&evolved, params.readout_qubit)?;

    let (da, db) = (cell.split.dim_a(), cell.split.dim_b());
    let amps = evolved.amplitudes();
    let probabilities: Vec<f64> = (0..da)
        .map(|i| amps[i * db..(i + 1) * db].iter().map(|a| a.norm_sqr()).sum())
        .collect();

    let rho_anc = reduced_density(&evolved, &cell.split, Subsystem::Ancilla)?;
    let entropy_anc = von_neumann_entropy(&rho_anc)?;

    let (next_state, selected_index) = match params.hidden_mode {
        HiddenMode::Collapsed => {
            // Strictly-greater scan keeps the lowest index on exact ties.
            let mut best = 0usize;
            for (i, &p) in probabilities.iter().enumerate() {
                if p > probabilities[best] {
                    best = i;
                }
            }
            let branch = amps[best * db..(best + 1) * db].to_vec();
            (
                StateVector::from_unnormalized(branch, "collapsed hidden state")?,
                Some(best),
            )
        }
        HiddenMode::Diagonal => {
            let populations: Vec<f64> = rho_anc.diagonal().iter().map(|p| p.max(0.0)).collect();
            let amps: Vec<Complex64> = populations.iter().map(|&p| c(p, 0.0)).collect();
            (
                StateVector::from_unnormalized(amps, "diagonal hidden state")?,
                None,
            )
        }
    };

    Ok(CellOutput {
        y,
        hidden: HiddenState::new(next_state, params.hidden_mode)?,
        diagnostics: CellDiagnostics {
            entropy_anc,
            selected_index,
            probabilities,
        },
    })
}

/// Run a whole input sequence from the fresh `|0...0>` hidden state.
/// Errors are tagged with the step they occurred at.
pub fn sequence_forward(
    cell: &QLstmCell,
    xs: &[f64],
    params: &QLstmParameters,
) -> Result<Vec<CellOutput>> {
    if xs.is_empty() {
        return Err(Error::EmptyInput {
            context: "input sequence",
        });
    }
    let mut hidden = initial_hidden(cell.n_anc(), params.hidden_mode)?;
    let mut outputs = Vec::with_capacity(xs.len());
    for (step, &x) in xs.iter().enumerate() {
        let out = cell_forward(cell, x, &hidden, params).map_err(|e| e.at_step(step))?;
        hidden = out.hidden.clone();
        outputs.push(out);
    }
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_cell() -> QLstmCell {
        QLstmCell::new(2, 2, 2, 2, RotationKind::Rx).unwrap()
    }

    fn test_params(cell: &QLstmCell, mode: HiddenMode, seed: u64) -> QLstmParameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        QLstmParameters::init(cell, 0, mode, &mut rng).unwrap()
    }

    #[test]
    fn encoder_oracle() {
        // w=(3,4), b=(0,0), x=1 -> amplitudes (0.6, 0.8)
        let enc = EncoderParameters::new(vec![3.0, 4.0], vec![0.0, 0.0]).unwrap();
        let s = encode_input(1.0, &enc).unwrap();
        assert_abs_diff_eq!(s.amp(0).re, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amp(1).re, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn encoder_rejects_degenerate_input() {
        let enc = EncoderParameters::new(vec![1.0, 0.0], vec![-1.0, 0.0]).unwrap();
        assert!(matches!(
            encode_input(1.0, &enc),
            Err(Error::DegenerateEncoding { .. })
        ));
        assert!(matches!(
            encode_input(f64::NAN, &enc),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn encoder_init_is_never_degenerate_at_zero() {
        // biases live in [0.1, 0.2), so x=0 always encodes
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let enc = EncoderParameters::init(2, &mut rng).unwrap();
            assert!(encode_input(0.0, &enc).is_ok());
        }
    }

    #[test]
    fn initial_hidden_is_ground_state() {
        let h = initial_hidden(2, HiddenMode::Diagonal).unwrap();
        assert_eq!(h.state().amp(0), c(1.0, 0.0));
        assert_eq!(h.state().dim(), 4);
    }

    #[test]
    fn readout_oracle_on_basis_states() {
        // |10>: qubit 0 reads -1, qubit 1 reads +1
        let s = StateVector::basis(2, 0b10).unwrap();
        assert_abs_diff_eq!(readout_expectation(&s, 0).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(readout_expectation(&s, 1).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            readout_expectation(&s, 2),
            Err(Error::QubitOutOfRange { .. })
        ));
    }

    #[test]
    fn identity_circuit_passes_input_through() {
        // zero layers: y is <Z_0> of the encoded input, the hidden state
        // stays |0...0>, and the ancilla entropy is zero.
        let cell = QLstmCell::new(1, 1, 0, 0, RotationKind::Rx).unwrap();
        let enc = EncoderParameters::new(vec![3.0, 4.0], vec![0.0, 0.0]).unwrap();
        for mode in [HiddenMode::Collapsed, HiddenMode::Diagonal] {
            let params = QLstmParameters {
                encoder: enc.clone(),
                theta_en: ParameterVector::zeros(0),
                theta_dis: ParameterVector::zeros(0),
                readout_qubit: 0,
                hidden_mode: mode,
            };
            let h0 = initial_hidden(1, mode).unwrap();
            let out = cell_forward(&cell, 1.0, &h0, &params).unwrap();
            // p(0) = 0.36, p(1) = 0.64 -> <Z> = -0.28
            assert_abs_diff_eq!(out.y, -0.28, epsilon = 1e-12);
            assert_abs_diff_eq!(out.diagnostics.entropy_anc, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(out.hidden.state().amp(0).re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn readout_matches_sign_weighted_probabilities() {
        // independent route: y = sum_i sign(bit m of i) p(i) over system
        // outcomes, valid because the readout qubit is a system qubit
        let cell = test_cell();
        for mode in [HiddenMode::Collapsed, HiddenMode::Diagonal] {
            for seed in [3u64, 5, 8] {
                let mut params = test_params(&cell, mode, seed);
                for readout in 0..cell.n_sys() {
                    params.readout_qubit = readout;
                    let h0 = initial_hidden(cell.n_anc(), mode).unwrap();
                    let out = cell_forward(&cell, 0.4, &h0, &params).unwrap();
                    let alt: f64 = out
                        .diagnostics
                        .probabilities
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| {
                            let bit = (i >> (cell.n_sys() - 1 - readout)) & 1;
                            if bit == 0 {
                                p
                            } else {
                                -p
                            }
                        })
                        .sum();
                    assert_abs_diff_eq!(out.y, alt, epsilon = 1e-12);
                    assert!(out.y.abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let cell = test_cell();
        let params = test_params(&cell, HiddenMode::Diagonal, 11);
        let h0 = initial_hidden(2, HiddenMode::Diagonal).unwrap();
        let out = cell_forward(&cell, -0.3, &h0, &params).unwrap();
        let total: f64 = out.diagnostics.probabilities.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(out.diagnostics.probabilities.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn collapsed_hidden_is_the_argmax_branch() {
        let cell = test_cell();
        let params = test_params(&cell, HiddenMode::Collapsed, 13);
        let h0 = initial_hidden(2, HiddenMode::Collapsed).unwrap();
        let out = cell_forward(&cell, 0.7, &h0, &params).unwrap();
        let idx = out.diagnostics.selected_index.unwrap();
        let probs = &out.diagnostics.probabilities;
        assert!(probs.iter().all(|&p| p <= probs[idx]));
        assert_abs_diff_eq!(out.hidden.state().norm(), 1.0, epsilon = 1e-12);
        assert_eq!(out.hidden.mode(), HiddenMode::Collapsed);
    }

    #[test]
    fn diagonal_hidden_has_nonnegative_entries() {
        let cell = test_cell();
        let params = test_params(&cell, HiddenMode::Diagonal, 17);
        let h0 = initial_hidden(2, HiddenMode::Diagonal).unwrap();
        let out = cell_forward(&cell, 0.7, &h0, &params).unwrap();
        assert!(out.diagnostics.selected_index.is_none());
        for a in out.hidden.state().amplitudes() {
            assert!(a.re >= 0.0 && a.im == 0.0);
        }
        assert_abs_diff_eq!(out.hidden.state().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sequence_forward_threads_the_hidden_state() {
        let cell = test_cell();
        let params = test_params(&cell, HiddenMode::Diagonal, 19);
        let xs = [0.1, -0.2, 0.5, 0.0];
        let outs = sequence_forward(&cell, &xs, &params).unwrap();
        assert_eq!(outs.len(), 4);
        // replay manually and compare
        let mut hidden = initial_hidden(2, HiddenMode::Diagonal).unwrap();
        for (step, &x) in xs.iter().enumerate() {
            let manual = cell_forward(&cell, x, &hidden, &params).unwrap();
            assert_eq!(manual.y, outs[step].y);
            hidden = manual.hidden;
        }
    }

    #[test]
    fn sequence_forward_reports_failing_step() {
        let cell = test_cell();
        let params = test_params(&cell, HiddenMode::Diagonal, 23);
        let err = sequence_forward(&cell, &[0.1, 0.2, f64::NAN], &params).unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 2, .. }));
        assert!(matches!(
            sequence_forward(&cell, &[], &params),
            Err(Error::EmptyInput { .. })
        ));
    }

    #[test]
    fn forward_is_deterministic() {
        let cell = test_cell();
        let a = test_params(&cell, HiddenMode::Collapsed, 29);
        let b = test_params(&cell, HiddenMode::Collapsed, 29);
        assert_eq!(a, b);
        let xs = [0.3, 0.1, -0.4];
        let oa = sequence_forward(&cell, &xs, &a).unwrap();
        let ob = sequence_forward(&cell, &xs, &b).unwrap();
        for (x, y) in oa.iter().zip(ob.iter()) {
            assert_eq!(x.y, y.y);
            assert_eq!(x.hidden.state().amplitudes(), y.hidden.state().amplitudes());
        }
    }

    #[test]
    fn parameter_validation_catches_mismatches() {
        let cell = test_cell();
        let mut params = test_params(&cell, HiddenMode::Diagonal, 31);
        params.readout_qubit = 2; // only system qubits 0 and 1 exist
        let h0 = initial_hidden(2, HiddenMode::Diagonal).unwrap();
        assert!(matches!(
            cell_forward(&cell, 0.0, &h0, &params),
            Err(Error::QubitOutOfRange { .. })
        ));

        let mut params = test_params(&cell, HiddenMode::Diagonal, 31);
        params.theta_en = ParameterVector::zeros(3);
        assert!(matches!(
            cell_forward(&cell, 0.0, &h0, &params),
            Err(Error::ParameterCount { .. })
        ));

        let wrong_hidden = initial_hidden(1, HiddenMode::Diagonal).unwrap();
        let params = test_params(&cell, HiddenMode::Diagonal, 31);
        assert!(matches!(
            cell_forward(&cell, 0.0, &wrong_hidden, &params),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
