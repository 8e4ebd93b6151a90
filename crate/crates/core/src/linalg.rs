//! Dense complex linear algebra for small qubit registers.
//!
//! States are amplitude vectors in big-endian qubit order: qubit 0 is the
//! most significant bit of the basis index, so the bit of qubit `q` in an
//! `n`-qubit index `z` is `(z >> (n - 1 - q)) & 1`. Everything here is plain
//! `Vec<Complex64>` storage; registers are capped at [`MAX_QUBITS`] qubits.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Hard ceiling on register width (4096 amplitudes).
pub const MAX_QUBITS: usize = 12;

/// Norm drift up to this is accepted as-is.
const NORM_KEEP_TOL: f64 = 1e-12;
/// Norm drift up to this is silently repaired by renormalizing.
const NORM_REPAIR_TOL: f64 = 1e-8;
/// Frobenius tolerance for the unitarity check in [`UnitaryMatrix::new`].
const UNITARY_TOL: f64 = 1e-10;
/// Entry-wise tolerance for Hermiticity and trace checks on density matrices.
const DENSITY_TOL: f64 = 1e-10;
/// Entry-wise Hermiticity tolerance accepted by the eigensolver.
const EIG_HERMITIAN_TOL: f64 = 1e-8;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn l2_norm(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Bit of qubit `q` in basis index `z` of an `n`-qubit register (big-endian).
#[inline]
pub(crate) fn qubit_bit(z: usize, q: usize, n: usize) -> usize {
    (z >> (n - 1 - q)) & 1
}

fn check_register_width(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            qubits: num_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

fn num_qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::BadStateLength { len });
    }
    let n = len.trailing_zeros() as usize;
    check_register_width(n)?;
    Ok(n)
}

/// Sample a standard normal via Box-Muller.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------------------
// StateVector
// ---------------------------------------------------------------------------

/// Normalized pure state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    /// Build a state from amplitudes that are already (close to) normalized.
    ///
    /// Drift of the 2-norm from 1 up to `1e-12` is kept, up to `1e-8` is
    /// repaired by renormalizing, anything larger is rejected.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let num_qubits = num_qubits_for_len(amps.len())?;
        if !amps.iter().copied().all(is_finite) {
            return Err(Error::NonFinite {
                context: "state amplitudes",
            });
        }
        let norm = l2_norm(&amps);
        let drift = (norm - 1.0).abs();
        let amps = if drift <= NORM_KEEP_TOL {
            amps
        } else if drift <= NORM_REPAIR_TOL {
            amps.into_iter().map(|a| a / norm).collect()
        } else {
            return Err(Error::NormDrift { norm });
        };
        Ok(Self { amps, num_qubits })
    }

    /// Normalize an arbitrary non-zero amplitude vector into a state.
    pub fn from_unnormalized(amps: Vec<Complex64>, context: &'static str) -> Result<Self> {
        let num_qubits = num_qubits_for_len(amps.len())?;
        if !amps.iter().copied().all(is_finite) {
            return Err(Error::NonFinite { context });
        }
        let norm = l2_norm(&amps);
        if norm <= 1e-12 {
            return Err(Error::ZeroVector { context });
        }
        Ok(Self {
            amps: amps.into_iter().map(|a| a / norm).collect(),
            num_qubits,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::BadStateLength { len: 1 });
        }
        check_register_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                context: "basis state index",
                expected: dim,
                actual: index,
            });
        }
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        Ok(Self { amps, num_qubits })
    }

    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::BadStateLength { len: 1 });
        }
        check_register_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        loop {
            let amps: Vec<Complex64> = (0..dim)
                .map(|_| c(standard_normal(rng), standard_normal(rng)))
                .collect();
            if l2_norm(&amps) > 1e-6 {
                return Self::from_unnormalized(amps, "random state");
            }
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "inner product",
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product `|self> (x) |other>`; `self` supplies the high bits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        check_register_width(n)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector {
            amps,
            num_qubits: n,
        })
    }

    /// `|amp[i]|^2` for every basis index.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

// ---------------------------------------------------------------------------
// CMatrix
// ---------------------------------------------------------------------------

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![c(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, c(1.0, 0.0));
        }
        m
    }

    /// Build from nested rows; every row must match the outer length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "matrix row length",
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().copied().all(is_finite)
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.entry(i, k);
                if a == c(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    let v = out.entry(i, j) + a * rhs.entry(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len(), "matvec dimension mismatch");
        (0..self.dim)
            .map(|i| {
                v.iter()
                    .enumerate()
                    .fold(c(0.0, 0.0), |acc, (j, x)| acc + self.entry(i, j) * x)
            })
            .collect()
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self.entry(j, i).conj())
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        CMatrix::from_fn(self.dim, |i, j| self.entry(i, j) + rhs.entry(i, j))
    }

    pub fn sub(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        CMatrix::from_fn(self.dim, |i, j| self.entry(i, j) - rhs.entry(i, j))
    }

    pub fn scale(&self, factor: Complex64) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self.entry(i, j) * factor)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Kronecker product; `self` indexes the high (leading) factor.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim, rhs.dim);
        let mut out = CMatrix::zeros(da * db);
        for ia in 0..da {
            for ja in 0..da {
                let a = self.entry(ia, ja);
                for ib in 0..db {
                    for jb in 0..db {
                        out.set(ia * db + ib, ja * db + jb, a * rhs.entry(ib, jb));
                    }
                }
            }
        }
        out
    }

    /// Largest entry-wise deviation from the own adjoint.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = (self.entry(i, j) - self.entry(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `||self * self^dag - I||_F`.
    pub fn unitary_deviation(&self) -> f64 {
        self.mul(&self.adjoint())
            .sub(&CMatrix::identity(self.dim))
            .frobenius_norm()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (row, col): (usize, usize)) -> &Complex64 {
        &self.data[row * self.dim + col]
    }
}

// ---------------------------------------------------------------------------
// UnitaryMatrix
// ---------------------------------------------------------------------------

/// Validated unitary on a whole qubit register.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    mat: CMatrix,
    num_qubits: usize,
}

impl UnitaryMatrix {
    /// Validate and wrap a matrix; rejects non-power-of-two dimensions and
    /// anything with `||U U^dag - I||_F > 1e-10`.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let num_qubits = num_qubits_for_len(mat.dim())?;
        if !mat.is_finite() {
            return Err(Error::NonFinite {
                context: "unitary entries",
            });
        }
        let deviation = mat.unitary_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { mat, num_qubits })
    }

    /// Wrap without the unitarity check. For internal construction paths
    /// that are unitary by algebra (products of gates, adjoints).
    pub(crate) fn from_unchecked(mat: CMatrix) -> Self {
        let num_qubits = mat.dim().trailing_zeros() as usize;
        debug_assert!(mat.dim().is_power_of_two() && mat.dim() >= 2);
        Self { mat, num_qubits }
    }

    pub fn identity(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::BadStateLength { len: 1 });
        }
        check_register_width(num_qubits)?;
        Ok(Self::from_unchecked(CMatrix::identity(1 << num_qubits)))
    }

    /// Haar-random unitary: modified Gram-Schmidt on a complex Gaussian
    /// matrix (the resulting QR has a positive-diagonal R, so Q is Haar).
    pub fn random_haar<R: Rng>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::BadStateLength { len: 1 });
        }
        check_register_width(num_qubits)?;
        let dim = 1usize << num_qubits;
        'retry: loop {
            // columns[j] is the j-th column vector
            let mut cols: Vec<Vec<Complex64>> = (0..dim)
                .map(|_| {
                    (0..dim)
                        .map(|_| c(standard_normal(rng), standard_normal(rng)))
                        .collect()
                })
                .collect();
            for j in 0..dim {
                for k in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let qk = &done[k];
                    let vj = &mut rest[0];
                    let proj: Complex64 =
                        qk.iter().zip(vj.iter()).map(|(q, v)| q.conj() * v).sum();
                    for (vi, qi) in vj.iter_mut().zip(qk.iter()) {
                        *vi -= proj * qi;
                    }
                }
                let norm = l2_norm(&cols[j]);
                if norm < 1e-9 {
                    continue 'retry; // essentially never: resample
                }
                for a in cols[j].iter_mut() {
                    *a /= norm;
                }
            }
            let mat = CMatrix::from_fn(dim, |i, j| cols[j][i]);
            return Ok(Self::from_unchecked(mat));
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self::from_unchecked(self.mat.adjoint())
    }

    /// Compose with another unitary of the same dimension: `self * rhs`.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                context: "unitary composition",
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        Ok(Self::from_unchecked(self.mat.mul(&rhs.mat)))
    }

    pub fn kron(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        check_register_width(self.num_qubits + rhs.num_qubits)?;
        Ok(Self::from_unchecked(self.mat.kron(&rhs.mat)))
    }

    /// Apply to a state; the result goes through the usual norm-drift policy.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.dim() != state.dim() {
            return Err(Error::DimensionMismatch {
                context: "unitary application",
                expected: self.dim(),
                actual: state.dim(),
            });
        }
        StateVector::new(self.mat.matvec(state.amplitudes()))
    }
}

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace matrix. Positive semidefiniteness is not enforced
/// at construction (it costs an eigendecomposition); consumers that need it
/// call [`DensityMatrix::validate_psd`] or clamp eigenvalues themselves.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.dim() == 0 {
            return Err(Error::EmptyInput {
                context: "density matrix",
            });
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite {
                context: "density matrix entries",
            });
        }
        let dev = mat.hermitian_deviation();
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity {
                reason: format!("trace is {tr}, expected 1"),
            });
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_unchecked(CMatrix::identity(dim).scale(c(1.0 / dim as f64, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.mat.entry(row, col)
    }

    /// Real parts of the diagonal (the basis populations).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat.entry(i, i).re).collect()
    }

    pub fn eig(&self) -> Result<HermitianEig> {
        hermitian_eig(&self.mat)
    }

    /// Error if any eigenvalue is below `-tol`.
    pub fn validate_psd(&self, tol: f64) -> Result<()> {
        let values = hermitian_eigenvalues(&self.mat)?;
        match values.iter().copied().fold(f64::INFINITY, f64::min) {
            min if min < -tol => Err(Error::InvalidDensity {
                reason: format!("negative eigenvalue {min:.3e}"),
            }),
            _ => Ok(()),
        }
    }
}

/// `|state><state|`.
pub fn outer_product(state: &StateVector) -> DensityMatrix {
    let amps = state.amplitudes();
    DensityMatrix::from_unchecked(CMatrix::from_fn(state.dim(), |i, j| {
        amps[i] * amps[j].conj()
    }))
}

// ---------------------------------------------------------------------------
// Bipartite structure
// ---------------------------------------------------------------------------

/// System/ancilla cut of a register; system qubits come first (high bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BipartiteSplit {
    n_sys: usize,
    n_anc: usize,
}

/// Which side of a [`BipartiteSplit`] to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Ancilla,
}

impl BipartiteSplit {
    pub fn new(n_sys: usize, n_anc: usize) -> Result<Self> {
        if n_sys == 0 || n_anc == 0 {
            return Err(Error::InvalidConfig {
                reason: "bipartite split needs at least one qubit on each side".into(),
            });
        }
        check_register_width(n_sys + n_anc)?;
        Ok(Self { n_sys, n_anc })
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    pub fn n_anc(&self) -> usize {
        self.n_anc
    }

    /// System (leading-factor) dimension.
    pub fn dim_a(&self) -> usize {
        1 << self.n_sys
    }

    /// Ancilla (trailing-factor) dimension.
    pub fn dim_b(&self) -> usize {
        1 << self.n_anc
    }

    pub fn total_qubits(&self) -> usize {
        self.n_sys + self.n_anc
    }

    pub fn joint_dim(&self) -> usize {
        self.dim_a() * self.dim_b()
    }

    pub(crate) fn expect_joint_dim(&self, actual: usize, context: &'static str) -> Result<()> {
        if self.joint_dim() != actual {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.joint_dim(),
                actual,
            });
        }
        Ok(())
    }
}

/// Trace out one side of a joint density matrix.
pub fn partial_trace(
    rho: &DensityMatrix,
    split: &BipartiteSplit,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    split.expect_joint_dim(rho.dim(), "partial trace input")?;
    let (da, db) = (split.dim_a(), split.dim_b());
    let mat = match keep {
        Subsystem::System => CMatrix::from_fn(da, |i, ip| {
            (0..db).map(|j| rho.entry(i * db + j, ip * db + j)).sum()
        }),
        Subsystem::Ancilla => CMatrix::from_fn(db, |j, jp| {
            (0..da).map(|i| rho.entry(i * db + j, i * db + jp)).sum()
        }),
    };
    Ok(DensityMatrix::from_unchecked(mat))
}

/// Reduced density matrix of one side, computed straight from a pure state
/// (avoids materializing the joint `d x d` density matrix).
pub fn reduced_density(
    state: &StateVector,
    split: &BipartiteSplit,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    split.expect_joint_dim(state.dim(), "reduced density input")?;
    let (da, db) = (split.dim_a(), split.dim_b());
    let amps = state.amplitudes();
    let mat = match keep {
        Subsystem::System => CMatrix::from_fn(da, |i, ip| {
            (0..db)
                .map(|j| amps[i * db + j] * amps[ip * db + j].conj())
                .sum()
        }),
        Subsystem::Ancilla => CMatrix::from_fn(db, |j, jp| {
            (0..da)
                .map(|i| amps[i * db + j] * amps[i * db + jp].conj())
                .sum()
        }),
    };
    Ok(DensityMatrix::from_unchecked(mat))
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a Hermitian matrix: `values` descending, columns of
/// `vectors` are the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

fn check_hermitian_input(m: &CMatrix) -> Result<()> {
    if m.dim() == 0 {
        return Err(Error::EmptyInput {
            context: "eigendecomposition",
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite {
            context: "eigendecomposition input",
        });
    }
    let dev = m.hermitian_deviation();
    if dev > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Cyclic complex Jacobi. Rotations zero one off-diagonal pivot at a time;
/// for Hermitian input the off-diagonal mass decays quadratically, so a
/// handful of sweeps suffices at the dimensions used here (<= 4096, in
/// practice <= 16).
fn jacobi(m: &CMatrix, want_vectors: bool) -> (Vec<f64>, Option<CMatrix>) {
    let d = m.dim();
    // Symmetrize so tiny Hermiticity drift cannot bias the iteration.
    let mut h = CMatrix::from_fn(d, |i, j| (m.entry(i, j) + m.entry(j, i).conj()) * 0.5);
    let mut v = want_vectors.then(|| CMatrix::identity(d));

    let scale = h.frobenius_norm().max(1.0);
    let stop = 1e-14 * scale;
    const MAX_SWEEPS: usize = 60;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off += h.entry(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = h.entry(p, q);
                let r = apq.norm();
                if r <= stop / (d as f64) {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let a = h.entry(p, p).re;
                let b = h.entry(q, q).re;
                // tan(2t) = 2r / (b - a); pick the smaller rotation angle.
                let tau = (b - a) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;
                let s1 = phase * sin; // U[p][q]; U[q][p] = -conj(s1), U[p][p]=U[q][q]=cos

                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let hkp = h.entry(k, p);
                    let hkq = h.entry(k, q);
                    let new_kp = hkp * cos - hkq * s1.conj();
                    let new_kq = hkp * s1 + hkq * cos;
                    h.set(k, p, new_kp);
                    h.set(p, k, new_kp.conj());
                    h.set(k, q, new_kq);
                    h.set(q, k, new_kq.conj());
                }
                let app = a * cos * cos - 2.0 * r * cos * sin + b * sin * sin;
                let aqq = a * sin * sin + 2.0 * r * cos * sin + b * cos * cos;
                h.set(p, p, c(app, 0.0));
                h.set(q, q, c(aqq, 0.0));
                h.set(p, q, c(0.0, 0.0));
                h.set(q, p, c(0.0, 0.0));

                if let Some(v) = v.as_mut() {
                    for k in 0..d {
                        let vkp = v.entry(k, p);
                        let vkq = v.entry(k, q);
                        v.set(k, p, vkp * cos - vkq * s1.conj());
                        v.set(k, q, vkp * s1 + vkq * cos);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| h.entry(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|v| CMatrix::from_fn(d, |i, j| v.entry(i, order[j])));
    (values, vectors)
}

/// Eigenvalues and eigenvectors of a Hermitian matrix (descending order).
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    check_hermitian_input(m)?;
    let (values, vectors) = jacobi(m, true);
    Ok(HermitianEig {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only; skips accumulating the eigenvector matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian_input(m)?;
    Ok(jacobi(m, false).0)
}
