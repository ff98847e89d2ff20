//! Dense pure and mixed qubit states.
//!
//! Wire 0 is the most significant bit of a basis index, so the basis state
//! `|abc>` on three wires sits at index `4a + 2b + c`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for normalization, hermiticity and trace checks.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-CLAMP_TOL, 0)` are treated as roundoff and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-10;
/// Eigenvalues below `-PSD_REJECT_TOL` mark a matrix as genuinely not PSD.
pub const PSD_REJECT_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type CMatrix = DMatrix<Complex64>;

/// Normalized amplitudes over the `2^n` basis states of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps `amplitudes`, checking the length is a power of two and the norm is 1.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Like [`StateVector::new`] but rescales a non-zero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
            });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << n_qubits);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// The computational basis state `|index>` on `n_qubits` wires.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self::from_raw(n_qubits, amplitudes))
    }

    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Self::from_raw(n_qubits, amplitudes)
    }

    /// Single-qubit state `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::from_raw(
            1,
            vec![Complex64::new(c, 0.0), Complex64::from_polar(s, phi)],
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Reduced density matrix of the wires in `keep`, computed directly from
    /// the amplitudes without forming the full outer product.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = SubsystemLayout::new(self.n_qubits, keep)?;
        let dk = 1usize << layout.keep.len();
        let dt = 1usize << layout.traced.len();
        let mut out = CMatrix::zeros(dk, dk);
        let mut column = vec![ZERO; dk];
        for t in 0..dt {
            let base = layout.embed_traced(t);
            for (i, slot) in column.iter_mut().enumerate() {
                *slot = self.amplitudes[base | layout.embed_kept(i)];
            }
            for i in 0..dk {
                if column[i] == ZERO {
                    continue;
                }
                for j in 0..dk {
                    out[(i, j)] += column[i] * column[j].conj();
                }
            }
        }
        Ok(DensityMatrix::from_matrix_unchecked(layout.keep.len(), out))
    }

    /// Permutes wires so that output wire `k` carries input wire `order[k]`.
    pub fn permute_wires(&self, order: &[usize]) -> Result<StateVector> {
        let n = self.n_qubits;
        if order.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        check_wires(order, n)?;
        let mut out = vec![ZERO; self.dim()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            let mut dst = 0usize;
            for (k, &src) in order.iter().enumerate() {
                if idx & bit(n, src) != 0 {
                    dst |= bit(n, k);
                }
            }
            out[dst] = *amp;
        }
        Ok(StateVector::from_raw(n, out))
    }
}

/// A single-qubit probe state with its short label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState {
    pub label: String,
    pub state: StateVector,
}

/// Labels of the six probe states, in the order of [`LabeledState::six`].
pub const SIX_STATE_LABELS: [&str; 6] = ["0", "1", "plus", "minus", "left", "right"];

impl LabeledState {
    /// `|0>, |1>, |+>, |->, (|0> - i|1>)/sqrt2, (|0> + i|1>)/sqrt2`.
    pub fn six() -> Vec<Self> {
        SIX_STATE_LABELS
            .iter()
            .map(|l| Self::from_label(l).expect("known label"))
            .collect()
    }

    pub fn from_label(label: &str) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match label {
            "0" => [ONE, ZERO],
            "1" => [ZERO, ONE],
            "plus" => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            "minus" => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            "left" => [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            "right" => [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown state label '{other}' (expected one of {})",
                    SIX_STATE_LABELS.join(", ")
                )))
            }
        };
        Ok(Self {
            label: label.to_string(),
            state: StateVector::from_raw(1, amps.to_vec()),
        })
    }
}

/// Short label for a single-qubit state: one of the six probe labels, or its
/// Bloch angles otherwise.
pub fn describe(psi: &StateVector) -> String {
    if psi.n_qubits() != 1 {
        return format!("{}-qubit state", psi.n_qubits());
    }
    for ls in LabeledState::six() {
        if (ls.state.overlap(psi).unwrap_or(0.0) - 1.0).abs() < 1e-12 {
            return ls.label;
        }
    }
    let a = psi.amplitudes();
    let theta = 2.0 * a[1].norm().atan2(a[0].norm());
    let phi = (a[1].arg() - a[0].arg()).rem_euclid(2.0 * std::f64::consts::PI);
    format!("bloch(theta={theta:.6},phi={phi:.6})")
}

/// `a ⊗ b`, with `a` occupying the leading (most significant) wires.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amplitudes = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amplitudes {
        for y in &b.amplitudes {
            amplitudes.push(x * y);
        }
    }
    StateVector::from_raw(a.n_qubits + b.n_qubits, amplitudes)
}

/// Applies the `2^k x 2^k` unitary `u` to the wires in `targets`.
///
/// `targets[0]` is the most significant bit of the gate's local index.
pub fn apply_unitary(state: &StateVector, u: &CMatrix, targets: &[usize]) -> Result<StateVector> {
    check_unitary(u)?;
    let mut out = state.clone();
    apply_unitary_in_place(&mut out, u, targets)?;
    Ok(out)
}

/// In-place variant of [`apply_unitary`] that skips the unitarity check.
///
/// Callers must pass a matrix they already know to be unitary.
pub fn apply_unitary_in_place(
    state: &mut StateVector,
    u: &CMatrix,
    targets: &[usize],
) -> Result<()> {
    let n = state.n_qubits;
    check_wires(targets, n)?;
    let k = targets.len();
    let dk = 1usize << k;
    if u.nrows() != dk || u.ncols() != dk {
        return Err(Error::DimensionMismatch {
            expected: dk,
            found: u.nrows(),
        });
    }
    let offsets: Vec<usize> = (0..dk)
        .map(|local| {
            targets
                .iter()
                .enumerate()
                .filter(|(pos, _)| local & (1 << (k - 1 - pos)) != 0)
                .fold(0, |acc, (_, &w)| acc | bit(n, w))
        })
        .collect();
    let target_mask = offsets[dk - 1];
    let mut gathered = vec![ZERO; dk];
    for base in 0..state.dim() {
        if base & target_mask != 0 {
            continue;
        }
        for (slot, off) in gathered.iter_mut().zip(&offsets) {
            *slot = state.amplitudes[base | off];
        }
        for (row, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (col, g) in gathered.iter().enumerate() {
                acc += u[(row, col)] * g;
            }
            state.amplitudes[base | off] = acc;
        }
    }
    Ok(())
}

/// Mixed state on `n` qubits: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity before wrapping `matrix`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let n_qubits = qubits_for_dim(matrix.nrows())?;
        let herm_dev = hermitian_deviation(&matrix);
        if herm_dev > STATE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (max deviation {herm_dev:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {trace} differs from 1"
            )));
        }
        let dm = Self::from_matrix_unchecked(n_qubits, matrix);
        let min = dm.decompose().min_eigenvalue();
        if min < -CLAMP_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(dm)
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, matrix: CMatrix) -> Self {
        Self { n_qubits, matrix }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self::from_matrix_unchecked(
            n_qubits,
            CMatrix::identity(d, d) / Complex64::from(d as f64),
        )
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Eigendecomposition of the (Hermitian) matrix.
    pub fn decompose(&self) -> HermitianDecomposition {
        HermitianDecomposition::of(&self.matrix)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// Matrix as rows of `[re, im]` pairs.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| {
                        let z = self.matrix[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`DensityMatrix::to_nested`], validating the result.
    pub fn from_nested(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidDensityMatrix("ragged rows".into()));
        }
        let matrix = CMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
        Self::new(matrix)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        DensityMatrix::from_nested(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianDecomposition {
    /// Decomposes the Hermitian part of `m`.
    pub fn of(m: &CMatrix) -> Self {
        let herm = (m + m.adjoint()) * Complex64::from(0.5);
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors =
            CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `U f(Λ) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (c, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = Complex64::from(f(lambda));
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= v);
        }
        scaled * u.adjoint()
    }

    /// `U Λ U†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

/// `|ψ><ψ|`.
pub fn to_density(state: &StateVector) -> DensityMatrix {
    let d = state.dim();
    let a = &state.amplitudes;
    let m = CMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj());
    DensityMatrix::from_matrix_unchecked(state.n_qubits, m)
}

/// Traces out every wire not in `keep`. Kept wires retain their relative order.
pub fn partial_trace(dm: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = SubsystemLayout::new(dm.n_qubits, keep)?;
    let dk = 1usize << layout.keep.len();
    let dt = 1usize << layout.traced.len();
    let kept_idx: Vec<usize> = (0..dk).map(|i| layout.embed_kept(i)).collect();
    let mut out = CMatrix::zeros(dk, dk);
    for t in 0..dt {
        let base = layout.embed_traced(t);
        for i in 0..dk {
            for j in 0..dk {
                out[(i, j)] += dm.matrix[(base | kept_idx[i], base | kept_idx[j])];
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(layout.keep.len(), out))
}

/// `-Σ λ ln λ` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(dm: &DensityMatrix) -> f64 {
    if dm.dim() == 2 {
        return entropy_of_eigenvalues(&qubit_eigenvalues(&dm.matrix));
    }
    entropy_of_eigenvalues(&dm.decompose().eigenvalues)
}

fn entropy_of_eigenvalues(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { -l * l.ln() } else { 0.0 })
        .sum::<f64>()
        .max(0.0)
}

// Closed form for 2x2 Hermitian matrices; avoids iterative eigensolves in hot loops.
fn qubit_eigenvalues(m: &CMatrix) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - radius, mean + radius]
}

/// Principal square root of a PSD matrix.
pub fn hermitian_sqrt(dm: &DensityMatrix) -> Result<CMatrix> {
    psd_sqrt(&dm.matrix)
}

fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let dec = HermitianDecomposition::of(m);
    let min = dec.min_eigenvalue();
    if min < -PSD_REJECT_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(dec.map(|l| l.max(0.0).sqrt()))
}

/// Uhlmann fidelity `(tr sqrt(sqrt(ρ1) ρ2 sqrt(ρ1)))^2`, clamped to `[0, 1]`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho1.dim(), rho2.dim())?;
    let s1 = hermitian_sqrt(rho1)?;
    let inner = &s1 * &rho2.matrix * &s1;
    let dec = HermitianDecomposition::of(&inner);
    if dec.min_eigenvalue() < -PSD_REJECT_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: dec.min_eigenvalue(),
        });
    }
    let tr: f64 = dec.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// `<ψ|ρ|ψ>`, the fidelity when one argument is pure.
pub fn fidelity_with_pure(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    check_same_dim(psi.dim(), rho.dim())?;
    let a = &psi.amplitudes;
    let mut acc = ZERO;
    for i in 0..a.len() {
        if a[i] == ZERO {
            continue;
        }
        for j in 0..a.len() {
            acc += a[i].conj() * rho.matrix[(i, j)] * a[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Max elementwise deviation of `u† u` from the identity.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(u.nrows(), u.ncols()))
}

pub(crate) fn check_unitary(u: &CMatrix) -> Result<()> {
    let deviation = unitarity_deviation(u);
    if deviation > STATE_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_wires(wires: &[usize], n_qubits: usize) -> Result<()> {
    for (i, &w) in wires.iter().enumerate() {
        if w >= n_qubits {
            return Err(Error::WireOutOfRange { wire: w, n_qubits });
        }
        if wires[..i].contains(&w) {
            return Err(Error::DuplicateWire(w));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn bit(n_qubits: usize, wire: usize) -> usize {
    1 << (n_qubits - 1 - wire)
}

/// Maps local indices of a kept/traced split back to full-register indices.
struct SubsystemLayout {
    n: usize,
    keep: Vec<usize>,
    traced: Vec<usize>,
}

impl SubsystemLayout {
    fn new(n: usize, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        check_wires(keep, n)?;
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let traced = (0..n).filter(|w| !keep.contains(w)).collect();
        Ok(Self { n, keep, traced })
    }

    fn embed(&self, wires: &[usize], local: usize) -> usize {
        let k = wires.len();
        wires
            .iter()
            .enumerate()
            .filter(|(pos, _)| local & (1 << (k - 1 - pos)) != 0)
            .fold(0, |acc, (_, &w)| acc | bit(self.n, w))
    }

    fn embed_kept(&self, local: usize) -> usize {
        self.embed(&self.keep, local)
    }

    fn embed_traced(&self, local: usize) -> usize {
        self.embed(&self.traced, local)
    }
}
