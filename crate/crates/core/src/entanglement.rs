//! Entanglement diagnostics: von Neumann entropy, Schmidt decompositions,
//! Uhlmann fidelity, entangling/disentangling power estimates and the Kraus
//! channel a unitary induces on the ancilla.
//!
//! Entropies are in bits (log base 2). The power estimators are lower
//! bounds: multi-restart gradient ascent over pure joint inputs, so the
//! reported value can only undershoot the true supremum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eig, hermitian_eigenvalues, outer_product, partial_trace, reduced_density,
    standard_normal, BipartiteSplit, CMatrix, DensityMatrix, StateVector, Subsystem,
    UnitaryMatrix,
};

/// Eigenvalues below this are treated as exact zeros inside entropies.
const EIGENVALUE_CLAMP: f64 = 1e-12;
/// Eigenvalues may undershoot zero by at most this before the input is
/// rejected as not positive semidefinite.
const PSD_TOL: f64 = 1e-8;
/// Schmidt modes with squared coefficient below this are zeroed out and get
/// their partner basis vector from Gram-Schmidt completion instead of the
/// (numerically meaningless) division by sigma.
const SCHMIDT_NULL_TOL: f64 = 1e-13;

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

/// `S(rho) = -sum_k lambda_k log2 lambda_k`, eigenvalues clamped at 1e-12.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(rho.mat())?;
    entropy_of_spectrum(&values)
}

fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lambda in values {
        if lambda < -PSD_TOL {
            return Err(Error::InvalidDensity {
                reason: format!("negative eigenvalue {lambda:.3e} in entropy input"),
            });
        }
        if lambda > EIGENVALUE_CLAMP {
            s -= lambda * lambda.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Entropy of one side of a pure joint state (either side gives the same
/// value; the smaller marginal is used).
pub fn marginal_entropy(state: &StateVector, split: &BipartiteSplit) -> Result<f64> {
    let keep = if split.dim_a() <= split.dim_b() {
        Subsystem::System
    } else {
        Subsystem::Ancilla
    };
    von_neumann_entropy(&reduced_density(state, split, keep)?)
}

/// Fast path used by the power-estimator inner loop: marginal entropy from
/// raw amplitudes, no `Result` plumbing. The marginal of a normalized state
/// is Hermitian and PSD by construction.
fn marginal_entropy_raw(amps: &[Complex64], split: &BipartiteSplit) -> f64 {
    let (da, db) = (split.dim_a(), split.dim_b());
    let mat = if da <= db {
        CMatrix::from_fn(da, |i, ip| {
            (0..db)
                .map(|j| amps[i * db + j] * amps[ip * db + j].conj())
                .sum()
        })
    } else {
        CMatrix::from_fn(db, |j, jp| {
            (0..da)
                .map(|i| amps[i * db + j] * amps[i * db + jp].conj())
                .sum()
        })
    };
    let values = hermitian_eigenvalues(&mat).expect("marginal is Hermitian by construction");
    entropy_of_spectrum(&values).expect("marginal is PSD by construction")
}

// ---------------------------------------------------------------------------
// Schmidt decomposition
// ---------------------------------------------------------------------------

/// `|psi> = sum_k c_k |a_k> (x) |b_k>` with `c_k >= 0` descending and both
/// bases orthonormal.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<Vec<Complex64>>,
    pub basis_b: Vec<Vec<Complex64>>,
}

impl SchmidtDecomposition {
    /// Entanglement entropy `-sum c_k^2 log2 c_k^2`.
    pub fn entropy(&self) -> f64 {
        let squares: Vec<f64> = self.coefficients.iter().map(|c| c * c).collect();
        entropy_of_spectrum(&squares).expect("squared coefficients are non-negative")
    }

    /// Number of coefficients above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// `sum_k c_k |a_k>(x)|b_k>` as a raw amplitude vector.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let da = self.basis_a.first().map_or(0, Vec::len);
        let db = self.basis_b.first().map_or(0, Vec::len);
        let mut amps = vec![c(0.0, 0.0); da * db];
        for (k, &coeff) in self.coefficients.iter().enumerate() {
            for (i, &a) in self.basis_a[k].iter().enumerate() {
                for (j, &b) in self.basis_b[k].iter().enumerate() {
                    amps[i * db + j] += coeff * a * b;
                }
            }
        }
        amps
    }
}

/// Extend `vectors` to `count` orthonormal vectors of length `dim` by
/// Gram-Schmidt over the standard basis.
fn gram_schmidt_fill(vectors: &mut Vec<Vec<Complex64>>, dim: usize, count: usize) {
    let mut candidate = 0usize;
    while vectors.len() < count && candidate < dim {
        let mut v = vec![c(0.0, 0.0); dim];
        v[candidate] = c(1.0, 0.0);
        candidate += 1;
        for existing in vectors.iter() {
            let proj: Complex64 = existing
                .iter()
                .zip(v.iter())
                .map(|(e, x)| e.conj() * x)
                .sum();
            for (x, e) in v.iter_mut().zip(existing.iter()) {
                *x -= proj * e;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            vectors.push(v);
        }
    }
}

/// Schmidt decomposition across a system/ancilla split, via the
/// eigendecomposition of the smaller-side Gram matrix of the reshaped
/// amplitude matrix.
pub fn schmidt(state: &StateVector, split: &BipartiteSplit) -> Result<SchmidtDecomposition> {
    split.expect_joint_dim(state.dim(), "Schmidt decomposition")?;
    let (da, db) = (split.dim_a(), split.dim_b());
    let amps = state.amplitudes();
    let rank_bound = da.min(db);

    // Gram matrix on the A side: G = M M^dag with M[i][j] = amps[i*db + j].
    let gram = CMatrix::from_fn(da, |i, ip| {
        (0..db)
            .map(|j| amps[i * db + j] * amps[ip * db + j].conj())
            .sum()
    });
    let eig = hermitian_eig(&gram)?;

    let mut coefficients = Vec::with_capacity(rank_bound);
    let mut basis_a = Vec::with_capacity(rank_bound);
    let mut basis_b: Vec<Vec<Complex64>> = Vec::with_capacity(rank_bound);
    for k in 0..rank_bound {
        let lambda = eig.values[k];
        if lambda < -PSD_TOL {
            return Err(Error::InvalidDensity {
                reason: format!("negative Schmidt weight {lambda:.3e}"),
            });
        }
        let u_k: Vec<Complex64> = (0..da).map(|i| eig.vectors.entry(i, k)).collect();
        if lambda <= SCHMIDT_NULL_TOL {
            coefficients.push(0.0);
            basis_a.push(u_k);
            continue; // b_k comes from Gram-Schmidt completion below
        }
        let sigma = lambda.sqrt();
        // b_k = M^dag u_k / sigma
        let b_k: Vec<Complex64> = (0..db)
            .map(|j| {
                (0..da)
                    .map(|i| amps[i * db + j] * u_k[i].conj())
                    .sum::<Complex64>()
                    / sigma
            })
            .collect();
        coefficients.push(sigma);
        basis_a.push(u_k);
        basis_b.push(b_k);
    }
    gram_schmidt_fill(&mut basis_b, db, rank_bound);

    Ok(SchmidtDecomposition {
        coefficients,
        basis_a,
        basis_b,
    })
}

// ---------------------------------------------------------------------------
// Fidelity
// ---------------------------------------------------------------------------

/// Uhlmann fidelity `F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`,
/// clamped into [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let eig = rho.eig()?;
    if eig.values.iter().any(|&v| v < -PSD_TOL) {
        return Err(Error::InvalidDensity {
            reason: "first fidelity argument is not PSD".into(),
        });
    }
    let d = rho.dim();
    let mut sqrt_diag = CMatrix::zeros(d);
    for (i, &v) in eig.values.iter().enumerate() {
        sqrt_diag.set(i, i, c(v.max(0.0).sqrt(), 0.0));
    }
    let sqrt_rho = eig.vectors.mul(&sqrt_diag).mul(&eig.vectors.adjoint());
    let inner = sqrt_rho.mul(sigma.mat()).mul(&sqrt_rho);
    let values = hermitian_eigenvalues(&inner)?;
    // Numerical noise around zero would blow up under the square root
    // (eps -> sqrt(eps)); drop everything far below the top eigenvalue.
    let floor = 1e-13 * values.first().copied().unwrap_or(0.0).max(0.0);
    let root_sum: f64 = values
        .iter()
        .filter(|&&v| v > floor)
        .map(|&v| v.sqrt())
        .sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Entangling / disentangling power
// ---------------------------------------------------------------------------

/// Knobs for the power estimators. The defaults trade runtime for a tight
/// lower bound; tests shrink `restarts`/`max_steps` where a loose bound is
/// fine.
#[derive(Debug, Clone)]
pub struct PowerConfig {
    /// Independent ascent runs; the best result wins (ties: lowest index).
    pub restarts: usize,
    /// Gradient-ascent step budget per restart.
    pub max_steps: usize,
    /// Random probes per restart used to pick the ascent starting point.
    pub warm_samples: usize,
    /// Central finite-difference step for the objective gradient.
    pub fd_step: f64,
    /// Ascent stops once the per-step improvement falls below this.
    pub tolerance: f64,
    /// Seed for restart starting points.
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_steps: 500,
            warm_samples: 16,
            fd_step: 1e-5,
            tolerance: 1e-9,
            seed: 7,
        }
    }
}

/// Result of a power estimation.
#[derive(Debug, Clone)]
pub struct PowerEstimate {
    /// Best entropy change found, in ebits. A lower bound on the supremum.
    pub value: f64,
    /// Input state achieving `value`.
    pub argmax_state: StateVector,
    /// Number of ascent restarts performed.
    pub restarts_used: usize,
    /// Whether the winning restart stopped on the improvement tolerance
    /// (rather than exhausting its step budget).
    pub converged: bool,
}

/// Objective: entropy gained across the split by sending the (normalized)
/// parameter vector through `u`. Parameters are the 2d real components of
/// the joint amplitudes.
struct PowerObjective<'a> {
    u: &'a UnitaryMatrix,
    split: BipartiteSplit,
}

impl PowerObjective<'_> {
    fn amps_of(&self, x: &[f64]) -> Option<Vec<Complex64>> {
        let dim = self.split.joint_dim();
        let mut amps: Vec<Complex64> = (0..dim).map(|i| c(x[2 * i], x[2 * i + 1])).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return None;
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        Some(amps)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let Some(amps) = self.amps_of(x) else {
            return f64::NEG_INFINITY;
        };
        let s_in = marginal_entropy_raw(&amps, &self.split);
        let out = self.u.mat().matvec(&amps);
        let s_out = marginal_entropy_raw(&out, &self.split);
        s_out - s_in
    }
}

fn normalize_in_place(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
}

/// One warm-started gradient ascent. Returns (best value, best point,
/// stopped-on-tolerance).
fn ascend(obj: &PowerObjective<'_>, cfg: &PowerConfig, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>, bool) {
    let n = 2 * obj.split.joint_dim();

    // Warm start: best of a handful of random probes.
    let mut x = vec![0.0; n];
    let mut fx = f64::NEG_INFINITY;
    for _ in 0..cfg.warm_samples.max(1) {
        let mut probe: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
        normalize_in_place(&mut probe);
        let fp = obj.eval(&probe);
        if fp > fx {
            fx = fp;
            x = probe;
        }
    }

    let mut grad = vec![0.0; n];
    let mut step = 0.1;
    let mut converged = false;
    for _ in 0..cfg.max_steps {
        // Central finite differences around x.
        let mut trial = x.clone();
        for i in 0..n {
            let xi = x[i];
            trial[i] = xi + cfg.fd_step;
            let up = obj.eval(&trial);
            trial[i] = xi - cfg.fd_step;
            let down = obj.eval(&trial);
            trial[i] = xi;
            grad[i] = (up - down) / (2.0 * cfg.fd_step);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            converged = true;
            break;
        }

        // Backtracking line search along the gradient.
        let mut accepted = false;
        for _ in 0..30 {
            let mut cand: Vec<f64> = x
                .iter()
                .zip(grad.iter())
                .map(|(xi, gi)| xi + step * gi)
                .collect();
            normalize_in_place(&mut cand);
            let fc = obj.eval(&cand);
            if fc > fx {
                let improvement = fc - fx;
                x = cand;
                fx = fc;
                step = (step * 1.5).min(10.0);
                accepted = true;
                if improvement < cfg.tolerance {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        if !accepted {
            // No uphill move left at line-search resolution.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    (fx, x, converged)
}

fn estimate_power(
    u: &UnitaryMatrix,
    split: &BipartiteSplit,
    cfg: &PowerConfig,
) -> Result<PowerEstimate> {
    split.expect_joint_dim(u.dim(), "power estimation")?;
    if cfg.restarts == 0 {
        return Err(Error::InvalidConfig {
            reason: "power estimation needs at least one restart".into(),
        });
    }
    let obj = PowerObjective { u, split: *split };

    // Independent per-restart seeds drawn up front, so the reduction is
    // deterministic regardless of evaluation order.
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.restarts).map(|_| master.gen()).collect();

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (value, x, converged) = ascend(&obj, cfg, &mut rng);
        // Strictly-greater keeps the lowest restart index on exact ties.
        if best.as_ref().is_none_or(|(bv, _, _)| value > *bv) {
            best = Some((value, x, converged));
        }
    }
    let (value, x, converged) = best.expect("at least one restart");

    let amps = obj.amps_of(&x).ok_or(Error::ZeroVector {
        context: "power-estimate argmax",
    })?;
    let ceiling = split.n_sys().min(split.n_anc()) as f64;
    Ok(PowerEstimate {
        value: value.clamp(0.0, ceiling),
        argmax_state: StateVector::new(amps)?,
        restarts_used: cfg.restarts,
        converged,
    })
}

/// Lower-bound estimate of the entangling power: the largest entropy gain
/// `S(out) - S(in)` over pure joint inputs found by multi-restart ascent.
pub fn estimate_entangling_power(
    u: &UnitaryMatrix,
    split: &BipartiteSplit,
    cfg: &PowerConfig,
) -> Result<PowerEstimate> {
    estimate_power(u, split, cfg)
}

/// Disentangling power: the entangling power of the inverse,
/// `E_down(U) = E_up(U^dag)`.
pub fn estimate_disentangling_power(
    u: &UnitaryMatrix,
    split: &BipartiteSplit,
    cfg: &PowerConfig,
) -> Result<PowerEstimate> {
    estimate_power(&u.adjoint(), split, cfg)
}

// ---------------------------------------------------------------------------
// Entropy-change statistics
// ---------------------------------------------------------------------------

/// Summary of `S(out) - S(in)` over Haar-random pure joint inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyChangeStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Sample `samples` Haar-random joint states and report the entropy change
/// statistics. Every sample is bounded by the true powers:
/// `-E_down(U) <= dS <= E_up(U)`.
pub fn entropy_change_stats(
    u: &UnitaryMatrix,
    split: &BipartiteSplit,
    samples: usize,
    seed: u64,
) -> Result<EntropyChangeStats> {
    split.expect_joint_dim(u.dim(), "entropy-change statistics")?;
    if samples == 0 {
        return Err(Error::EmptyInput {
            context: "entropy-change sample count",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for _ in 0..samples {
        let s = StateVector::random(split.total_qubits(), &mut rng)?;
        let s_in = marginal_entropy_raw(s.amplitudes(), split);
        let out = u.mat().matvec(s.amplitudes());
        let s_out = marginal_entropy_raw(&out, split);
        let delta = s_out - s_in;
        sum += delta;
        min = min.min(delta);
        max = max.max(delta);
    }
    Ok(EntropyChangeStats {
        mean: sum / samples as f64,
        min,
        max,
    })
}

// ---------------------------------------------------------------------------
// Kraus channel on the ancilla
// ---------------------------------------------------------------------------

/// Kraus operators of the channel a joint unitary induces on the ancilla
/// for a fixed pure system input. Completeness is checked at construction.
#[derive(Debug, Clone)]
pub struct KrausSet {
    operators: Vec<CMatrix>,
}

impl KrausSet {
    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// Ancilla dimension the operators act on.
    pub fn dim(&self) -> usize {
        self.operators.first().map_or(0, CMatrix::dim)
    }

    /// `||sum_i K_i^dag K_i - I||_F`.
    pub fn completeness_deviation(&self) -> f64 {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d);
        for k in &self.operators {
            sum = sum.add(&k.adjoint().mul(k));
        }
        sum.sub(&CMatrix::identity(d)).frobenius_norm()
    }
}

/// Build the ancilla channel `K_i = (<i|_sys (x) I) U (|psi_sys> (x) I)`,
/// one operator per system basis outcome.
pub fn kraus_from_unitary(
    u: &UnitaryMatrix,
    split: &BipartiteSplit,
    sys_input: &StateVector,
) -> Result<KrausSet> {
    split.expect_joint_dim(u.dim(), "Kraus construction")?;
    if sys_input.dim() != split.dim_a() {
        return Err(Error::DimensionMismatch {
            context: "Kraus system input",
            expected: split.dim_a(),
            actual: sys_input.dim(),
        });
    }
    let (da, db) = (split.dim_a(), split.dim_b());
    let psi = sys_input.amplitudes();
    let operators: Vec<CMatrix> = (0..da)
        .map(|i| {
            CMatrix::from_fn(db, |j, jp| {
                (0..da)
                    .map(|ip| u.mat().entry(i * db + j, ip * db + jp) * psi[ip])
                    .sum()
            })
        })
        .collect();
    let set = KrausSet { operators };
    let deviation = set.completeness_deviation();
    if deviation > 1e-10 {
        return Err(Error::KrausCompleteness { deviation });
    }
    Ok(set)
}

/// `rho -> sum_i K_i rho K_i^dag`. Trace-preserving by the completeness
/// invariant of [`KrausSet`].
pub fn apply_channel(kraus: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != kraus.dim() {
        return Err(Error::DimensionMismatch {
            context: "channel application",
            expected: kraus.dim(),
            actual: rho.dim(),
        });
    }
    let mut out = CMatrix::zeros(rho.dim());
    for k in &kraus.operators {
        out = out.add(&k.mul(rho.mat()).mul(&k.adjoint()));
    }
    DensityMatrix::new(out)
}

/// Reference route for the channel: conjugate the joint product state by
/// `u` and trace out the system. Used to cross-check [`apply_channel`].
pub fn channel_via_partial_trace(
    u: &UnitaryMatrix,
    split: &BipartiteSplit,
    sys_input: &StateVector,
    rho_anc: &DensityMatrix,
) -> Result<DensityMatrix> {
    split.expect_joint_dim(u.dim(), "channel reference")?;
    if rho_anc.dim() != split.dim_b() {
        return Err(Error::DimensionMismatch {
            context: "channel reference ancilla",
            expected: split.dim_b(),
            actual: rho_anc.dim(),
        });
    }
    let joint = outer_product(sys_input).mat().kron(rho_anc.mat());
    let evolved = u.mat().mul(&joint).mul(&u.mat().adjoint());
    partial_trace(
        &DensityMatrix::new(evolved)?,
        split,
        Subsystem::Ancilla,
    )
}
