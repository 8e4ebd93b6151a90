//! Parameterized circuits: single-qubit rotations arranged in layers, each
//! layer followed by a ring of CNOTs.
//!
//! Layer `l` applies one rotation per qubit (parameter index `l * n + q` for
//! qubit `q`) and then CNOTs `q -> (q+1) mod n` for every `q`. With `n = 1`
//! the ring is skipped; with `n = 2` both orderings (0,1) and (1,0) appear.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, qubit_bit, CMatrix, StateVector, UnitaryMatrix};

/// Rotation axis used for the parameterized layer gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    Rx,
    Ry,
    Rz,
}

/// Everything a [`Gate`] can be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
    PauliX,
    PauliZ,
    Hadamard,
}

impl From<RotationKind> for GateKind {
    fn from(kind: RotationKind) -> Self {
        match kind {
            RotationKind::Rx => GateKind::Rx,
            RotationKind::Ry => GateKind::Ry,
            RotationKind::Rz => GateKind::Rz,
        }
    }
}

/// One gate in a circuit. Rotations carry an index into the parameter
/// vector; CNOT carries a control; fixed gates carry neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub angle_index: Option<usize>,
}

impl Gate {
    pub fn rotation(kind: RotationKind, target: usize, angle_index: usize) -> Gate {
        Gate {
            kind: kind.into(),
            target,
            control: None,
            angle_index: Some(angle_index),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Result<Gate> {
        if control == target {
            return Err(Error::ControlEqualsTarget { qubit: control });
        }
        Ok(Gate {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            angle_index: None,
        })
    }

    pub fn fixed(kind: GateKind, target: usize) -> Result<Gate> {
        match kind {
            GateKind::PauliX | GateKind::PauliZ | GateKind::Hadamard => Ok(Gate {
                kind,
                target,
                control: None,
                angle_index: None,
            }),
            _ => Err(Error::InvalidConfig {
                reason: format!("{kind:?} is not a fixed gate"),
            }),
        }
    }

    fn check_qubits(&self, num_qubits: usize) -> Result<()> {
        if self.target >= num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: self.target,
                num_qubits,
            });
        }
        if let Some(ctrl) = self.control {
            if ctrl >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: ctrl,
                    num_qubits,
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Circuit angles. All entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "circuit parameters",
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(count: usize) -> Self {
        Self {
            values: vec![0.0; count],
        }
    }

    /// Uniform angles in `[0, 2*pi)`.
    pub fn random<R: Rng>(count: usize, rng: &mut R) -> Self {
        Self {
            values: (0..count)
                .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<f64> {
        self.values
            .get(index)
            .copied()
            .ok_or(Error::ParameterIndexOutOfRange {
                index,
                len: self.values.len(),
            })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Copy with `delta` added to one angle; all other entries are untouched.
    pub fn shifted(&self, index: usize, delta: f64) -> Result<ParameterVector> {
        if index >= self.values.len() {
            return Err(Error::ParameterIndexOutOfRange {
                index,
                len: self.values.len(),
            });
        }
        let mut values = self.values.clone();
        values[index] += delta;
        ParameterVector::new(values)
    }

    pub(crate) fn set(&mut self, index: usize, value: f64) {
        self.values[index] = value;
    }
}

/// Free-function spelling of [`ParameterVector::shifted`].
pub fn shifted_params(
    params: &ParameterVector,
    index: usize,
    delta: f64,
) -> Result<ParameterVector> {
    params.shifted(index, delta)
}

// ---------------------------------------------------------------------------
// Gate matrices
// ---------------------------------------------------------------------------

fn rotation_2x2(kind: RotationKind, angle: f64) -> CMatrix {
    let half = 0.5 * angle;
    let (cos, sin) = (half.cos(), half.sin());
    let rows = match kind {
        // RX = cos(t/2) I - i sin(t/2) X
        RotationKind::Rx => [[c(cos, 0.0), c(0.0, -sin)], [c(0.0, -sin), c(cos, 0.0)]],
        // RY = cos(t/2) I - i sin(t/2) Y
        RotationKind::Ry => [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]],
        // RZ = diag(e^{-it/2}, e^{+it/2})
        RotationKind::Rz => [
            [Complex64::from_polar(1.0, -half), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, half)],
        ],
    };
    CMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).expect("2x2")
}

fn fixed_2x2(kind: GateKind) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rows = match kind {
        GateKind::PauliX => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        GateKind::PauliZ => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        GateKind::Hadamard => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        _ => unreachable!("not a fixed single-qubit gate"),
    };
    CMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).expect("2x2")
}

/// Single-qubit rotation as a 1-qubit unitary.
pub fn rotation_matrix(kind: RotationKind, angle: f64) -> UnitaryMatrix {
    UnitaryMatrix::from_unchecked(rotation_2x2(kind, angle))
}

fn single_qubit_2x2(gate: &Gate, params: &ParameterVector) -> Result<CMatrix> {
    match gate.kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz => {
            let index = gate.angle_index.ok_or(Error::InvalidConfig {
                reason: "rotation gate without an angle index".into(),
            })?;
            let angle = params.get(index)?;
            let kind = match gate.kind {
                GateKind::Rx => RotationKind::Rx,
                GateKind::Ry => RotationKind::Ry,
                _ => RotationKind::Rz,
            };
            Ok(rotation_2x2(kind, angle))
        }
        GateKind::PauliX | GateKind::PauliZ | GateKind::Hadamard => Ok(fixed_2x2(gate.kind)),
        GateKind::Cnot => Err(Error::InvalidConfig {
            reason: "CNOT is not a single-qubit gate".into(),
        }),
    }
}

// ---------------------------------------------------------------------------
// In-place application kernels
// ---------------------------------------------------------------------------

fn apply_single_qubit(amps: &mut [Complex64], num_qubits: usize, target: usize, m: &CMatrix) {
    let mask = 1usize << (num_qubits - 1 - target);
    let (m00, m01) = (m.entry(0, 0), m.entry(0, 1));
    let (m10, m11) = (m.entry(1, 0), m.entry(1, 1));
    for z in 0..amps.len() {
        if z & mask != 0 {
            continue;
        }
        let zp = z | mask;
        let a0 = amps[z];
        let a1 = amps[zp];
        amps[z] = m00 * a0 + m01 * a1;
        amps[zp] = m10 * a0 + m11 * a1;
    }
}

fn apply_cnot(amps: &mut [Complex64], num_qubits: usize, control: usize, target: usize) {
    let cmask = 1usize << (num_qubits - 1 - control);
    let tmask = 1usize << (num_qubits - 1 - target);
    for z in 0..amps.len() {
        if z & cmask != 0 && z & tmask == 0 {
            amps.swap(z, z | tmask);
        }
    }
}

pub(crate) fn apply_gate(
    amps: &mut [Complex64],
    num_qubits: usize,
    gate: &Gate,
    params: &ParameterVector,
) -> Result<()> {
    gate.check_qubits(num_qubits)?;
    match gate.kind {
        GateKind::Cnot => {
            let control = gate.control.ok_or(Error::InvalidConfig {
                reason: "CNOT without a control qubit".into(),
            })?;
            apply_cnot(amps, num_qubits, control, gate.target);
        }
        _ => {
            let m = single_qubit_2x2(gate, params)?;
            apply_single_qubit(amps, num_qubits, gate.target, &m);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// LayeredAnsatz
// ---------------------------------------------------------------------------

/// Fixed-structure circuit: `num_layers` blocks of per-qubit rotations plus
/// a CNOT ring. Zero layers is the identity (useful in tests).
#[derive(Debug, Clone)]
pub struct LayeredAnsatz {
    num_qubits: usize,
    num_layers: usize,
    rotation_kind: RotationKind,
    gates: Vec<Gate>,
}

impl LayeredAnsatz {
    pub fn new(num_qubits: usize, num_layers: usize, rotation_kind: RotationKind) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidConfig {
                reason: "ansatz needs at least one qubit".into(),
            });
        }
        if num_qubits > crate::linalg::MAX_QUBITS {
            return Err(Error::TooManyQubits {
                qubits: num_qubits,
                max: crate::linalg::MAX_QUBITS,
            });
        }
        let mut gates = Vec::with_capacity(num_layers * 2 * num_qubits);
        for layer in 0..num_layers {
            for q in 0..num_qubits {
                gates.push(Gate::rotation(rotation_kind, q, layer * num_qubits + q));
            }
            if num_qubits > 1 {
                for q in 0..num_qubits {
                    gates.push(Gate::cnot(q, (q + 1) % num_qubits)?);
                }
            }
        }
        Ok(Self {
            num_qubits,
            num_layers,
            rotation_kind,
            gates,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn rotation_kind(&self) -> RotationKind {
        self.rotation_kind
    }

    /// One angle per qubit per layer.
    pub fn param_count(&self) -> usize {
        self.num_layers * self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn check_params(&self, params: &ParameterVector) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ParameterCount {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        Ok(())
    }
}

/// Embed one gate into the full `2^n` register matrix.
fn gate_full_matrix(gate: &Gate, num_qubits: usize, params: &ParameterVector) -> Result<CMatrix> {
    gate.check_qubits(num_qubits)?;
    let dim = 1usize << num_qubits;
    match gate.kind {
        GateKind::Cnot => {
            let control = gate.control.ok_or(Error::InvalidConfig {
                reason: "CNOT without a control qubit".into(),
            })?;
            let tmask = 1usize << (num_qubits - 1 - gate.target);
            Ok(CMatrix::from_fn(dim, |i, j| {
                let image = if qubit_bit(j, control, num_qubits) == 1 {
                    j ^ tmask
                } else {
                    j
                };
                if i == image {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            }))
        }
        _ => {
            let m = single_qubit_2x2(gate, params)?;
            let left = CMatrix::identity(1 << gate.target);
            let right = CMatrix::identity(1 << (num_qubits - 1 - gate.target));
            Ok(left.kron(&m).kron(&right))
        }
    }
}

/// Multiply the full circuit out into one register-sized unitary.
///
/// This is the reference path: `apply_ansatz` must agree with applying the
/// returned matrix. Cost is O(gates * 8^n); use it for diagnostics and for
/// feeding circuits into the power estimators, not in inner loops.
pub fn build_unitary(ansatz: &LayeredAnsatz, params: &ParameterVector) -> Result<UnitaryMatrix> {
    ansatz.check_params(params)?;
    let dim = 1usize << ansatz.num_qubits;
    let mut u = CMatrix::identity(dim);
    for gate in &ansatz.gates {
        u = gate_full_matrix(gate, ansatz.num_qubits, params)?.mul(&u);
    }
    Ok(UnitaryMatrix::from_unchecked(u))
}

/// Run the circuit gate-by-gate on a state (never materializes the matrix).
pub fn apply_ansatz(
    ansatz: &LayeredAnsatz,
    params: &ParameterVector,
    state: &StateVector,
) -> Result<StateVector> {
    ansatz.check_params(params)?;
    if state.num_qubits() != ansatz.num_qubits {
        return Err(Error::DimensionMismatch {
            context: "ansatz application",
            expected: 1 << ansatz.num_qubits,
            actual: state.dim(),
        });
    }
    let mut amps = state.amplitudes().to_vec();
    for gate in &ansatz.gates {
        apply_gate(&mut amps, ansatz.num_qubits, gate, params)?;
    }
    StateVector::new(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn mat_close(a: &CMatrix, b: &CMatrix, eps: f64) {
        assert!(
            a.sub(b).frobenius_norm() < eps,
            "matrices differ by {}",
            a.sub(b).frobenius_norm()
        );
    }

    #[test]
    fn rotation_oracles() {
        // RX(pi) = -i X
        let rx = rotation_matrix(RotationKind::Rx, PI);
        let minus_i_x = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, -1.0), c(0.0, 0.0)],
        ])
        .unwrap();
        mat_close(rx.mat(), &minus_i_x, 1e-15);

        // RZ(pi/2) = diag(e^{-i pi/4}, e^{i pi/4})
        let rz = rotation_matrix(RotationKind::Rz, FRAC_PI_2);
        let d = Complex64::from_polar(1.0, -PI / 4.0);
        assert_abs_diff_eq!((rz.mat().entry(0, 0) - d).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            (rz.mat().entry(1, 1) - d.conj()).norm(),
            0.0,
            epsilon = 1e-15
        );

        // RY(0) = I, and every rotation is unitary
        mat_close(
            rotation_matrix(RotationKind::Ry, 0.0).mat(),
            &CMatrix::identity(2),
            1e-15,
        );
        for kind in [RotationKind::Rx, RotationKind::Ry, RotationKind::Rz] {
            let u = rotation_matrix(kind, 0.7431);
            assert!(u.mat().unitary_deviation() < 1e-12);
        }
    }

    #[test]
    fn layer_structure_two_qubits() {
        // 2 qubits, 2 layers: 4 parameters; each layer has both CNOT
        // orderings (0,1) and (1,0).
        let a = LayeredAnsatz::new(2, 2, RotationKind::Rx).unwrap();
        assert_eq!(a.param_count(), 4);
        assert_eq!(a.gates().len(), 8);
        let layer: Vec<_> = a.gates()[..4].to_vec();
        assert_eq!(layer[0], Gate::rotation(RotationKind::Rx, 0, 0));
        assert_eq!(layer[1], Gate::rotation(RotationKind::Rx, 1, 1));
        assert_eq!(layer[2], Gate::cnot(0, 1).unwrap());
        assert_eq!(layer[3], Gate::cnot(1, 0).unwrap());
        assert_eq!(a.gates()[4], Gate::rotation(RotationKind::Rx, 0, 2));
    }

    #[test]
    fn single_qubit_ansatz_has_no_ring() {
        let a = LayeredAnsatz::new(1, 3, RotationKind::Ry).unwrap();
        assert_eq!(a.param_count(), 3);
        assert!(a.gates().iter().all(|g| g.kind != GateKind::Cnot));
    }

    #[test]
    fn zero_layers_is_identity() {
        let a = LayeredAnsatz::new(2, 0, RotationKind::Rx).unwrap();
        let params = ParameterVector::zeros(0);
        let u = build_unitary(&a, &params).unwrap();
        mat_close(u.mat(), &CMatrix::identity(4), 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = StateVector::random(2, &mut rng).unwrap();
        let out = apply_ansatz(&a, &params, &s).unwrap();
        assert_eq!(out.amplitudes(), s.amplitudes());
    }

    #[test]
    fn embedding_matches_kron() {
        let params = ParameterVector::new(vec![0.9]).unwrap();
        let g0 = Gate::rotation(RotationKind::Rx, 0, 0);
        let g1 = Gate::rotation(RotationKind::Rx, 1, 0);
        let m = rotation_2x2(RotationKind::Rx, 0.9);
        mat_close(
            &gate_full_matrix(&g0, 2, &params).unwrap(),
            &m.kron(&CMatrix::identity(2)),
            1e-15,
        );
        mat_close(
            &gate_full_matrix(&g1, 2, &params).unwrap(),
            &CMatrix::identity(2).kron(&m),
            1e-15,
        );
    }

    #[test]
    fn cnot_full_matrix_is_big_endian() {
        let params = ParameterVector::zeros(0);
        let g = Gate::cnot(0, 1).unwrap();
        let m = gate_full_matrix(&g, 2, &params).unwrap();
        let expect = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        mat_close(&m, &expect, 1e-15);
    }

    #[test]
    fn apply_ansatz_matches_built_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, layers) in [(1usize, 2usize), (2, 1), (2, 3), (3, 2), (4, 2)] {
            for kind in [RotationKind::Rx, RotationKind::Ry, RotationKind::Rz] {
                let a = LayeredAnsatz::new(n, layers, kind).unwrap();
                let params = ParameterVector::random(a.param_count(), &mut rng);
                let u = build_unitary(&a, &params).unwrap();
                assert!(u.mat().unitary_deviation() < 1e-10);
                let s = StateVector::random(n, &mut rng).unwrap();
                let via_matrix = u.apply(&s).unwrap();
                let via_gates = apply_ansatz(&a, &params, &s).unwrap();
                let diff: f64 = via_matrix
                    .amplitudes()
                    .iter()
                    .zip(via_gates.amplitudes())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(diff < 1e-10, "n={n} layers={layers} diff={diff}");
            }
        }
    }

    #[test]
    fn shifted_params_changes_one_entry() {
        let p = ParameterVector::new(vec![0.1, 0.2, 0.3]).unwrap();
        let q = shifted_params(&p, 1, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(q.get(0).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(q.get(1).unwrap(), 0.2 + FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(q.get(2).unwrap(), 0.3, epsilon = 1e-15);
        assert!(matches!(
            shifted_params(&p, 3, 0.1),
            Err(Error::ParameterIndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn param_count_is_enforced() {
        let a = LayeredAnsatz::new(2, 2, RotationKind::Rx).unwrap();
        let short = ParameterVector::zeros(3);
        assert!(matches!(
            build_unitary(&a, &short),
            Err(Error::ParameterCount {
                expected: 4,
                actual: 3
            })
        ));
        let s = StateVector::zero(2).unwrap();
        assert!(apply_ansatz(&a, &short, &s).is_err());
    }

    #[test]
    fn parameters_must_be_finite() {
        assert!(matches!(
            ParameterVector::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn cnot_rejects_equal_control_target() {
        assert!(matches!(
            Gate::cnot(1, 1),
            Err(Error::ControlEqualsTarget { qubit: 1 })
        ));
    }
}
