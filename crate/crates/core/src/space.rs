//! Partitioned Hilbert spaces and the validated state and operator types that
//! live on them.
//!
//! Basis ordering: the logical factor is the slow index. For `M` qubits the
//! space is `(C^2)^{(x)M} (x) (C^n)^{(x)M}`, i.e. all logical factors first,
//! then all encoding factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, hermiticity_defect, matrix_norm, partial_trace_second, trace,
    unitarity_defect, CMatrix, CVector, HERMITIAN_TOL, MIN_EIGENVALUE, NORM_TOL, TRACE_TOL,
    UNITARY_TOL,
};

/// `M` logical qubits, each encoded in two `n`-dimensional subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedSpace {
    num_qubits: usize,
    encoding_dim: usize,
}

impl EncodedSpace {
    pub fn new(num_qubits: usize, encoding_dim: usize) -> Result<Self> {
        if num_qubits == 0 || encoding_dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "need at least one qubit and one level per subspace, got M={num_qubits}, n={encoding_dim}"
            )));
        }
        let total = (2 * encoding_dim).checked_pow(num_qubits as u32);
        if total.is_none_or(|d| d > 1 << 12) {
            return Err(Error::InvalidArgument(format!(
                "space with M={num_qubits}, n={encoding_dim} is too large for dense matrices"
            )));
        }
        Ok(Self { num_qubits, encoding_dim })
    }

    /// Single qubit with `n` levels per logical state.
    pub fn qubit(encoding_dim: usize) -> Result<Self> {
        Self::new(1, encoding_dim)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn encoding_dim(&self) -> usize {
        self.encoding_dim
    }

    /// `2^M`.
    pub fn logical_dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// `n^M`.
    pub fn encoded_dim(&self) -> usize {
        self.encoding_dim.pow(self.num_qubits as u32)
    }

    /// `(2n)^M`.
    pub fn total_dim(&self) -> usize {
        self.logical_dim() * self.encoded_dim()
    }

    pub fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), found });
        }
        Ok(())
    }

    pub fn check_matrix(&self, m: &CMatrix) -> Result<()> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        self.check_dim(m.nrows())
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    space: EncodedSpace,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: EncodedSpace, amplitudes: CVector) -> Result<Self> {
        space.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { space, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(space: EncodedSpace, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(space, amplitudes.unscale(norm))
    }

    /// `logical (x) encoded`, both normalized by the caller.
    pub fn product(space: EncodedSpace, logical: &CVector, encoded: &CVector) -> Result<Self> {
        if logical.len() != space.logical_dim() {
            return Err(Error::DimensionMismatch { expected: space.logical_dim(), found: logical.len() });
        }
        if encoded.len() != space.encoded_dim() {
            return Err(Error::DimensionMismatch { expected: space.encoded_dim(), found: encoded.len() });
        }
        Self::new(space, logical.kronecker(encoded))
    }

    pub fn space(&self) -> EncodedSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix { space: self.space, matrix: m }
    }

    /// Applies a unitary; the result is renormalized to absorb roundoff.
    pub fn evolve(&self, u: &CMatrix) -> Result<Self> {
        self.space.check_matrix(u)?;
        Self::normalized(self.space, u * &self.amplitudes)
    }

    /// Reduced state on the logical factor.
    pub fn logical_density(&self) -> CMatrix {
        let (dl, de) = (self.space.logical_dim(), self.space.encoded_dim());
        let psi = CMatrix::from_fn(dl, de, |i, k| self.amplitudes[i * de + k]);
        &psi * psi.adjoint()
    }
}

/// Hermitian, positive, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: EncodedSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: EncodedSpace, matrix: CMatrix) -> Result<Self> {
        space.check_matrix(&matrix)?;
        validate_density(&matrix)?;
        Ok(Self { space, matrix })
    }

    /// Hermitian, unit-trace matrix whose positivity is not required. The
    /// in-block dephasing prescription can produce such matrices.
    pub fn new_indefinite(space: EncodedSpace, matrix: CMatrix) -> Result<Self> {
        space.check_matrix(&matrix)?;
        check_hermitian_unit_trace(&matrix)?;
        Ok(Self { space, matrix })
    }

    /// Smallest eigenvalue is at least `MIN_EIGENVALUE`.
    pub fn is_positive(&self) -> bool {
        hermitian_eigenvalues(&self.matrix).first().is_none_or(|&e| e >= MIN_EIGENVALUE)
    }

    pub fn space(&self) -> EncodedSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `U rho U^dag`. Not re-validated: propagated unitaries carry defects
    /// up to `1e-8`, which would trip the trace tolerance.
    pub fn evolve(&self, u: &CMatrix) -> Result<Self> {
        self.space.check_matrix(u)?;
        Ok(Self { space: self.space, matrix: u * &self.matrix * u.adjoint() })
    }

    /// Reduced state on the logical factor.
    pub fn logical_density(&self) -> CMatrix {
        partial_trace_second(&self.matrix, self.space.logical_dim(), self.space.encoded_dim())
    }

    /// Block `R_ij` (zero-based) of a single-qubit state.
    pub fn block(&self, i: usize, j: usize) -> Result<CMatrix> {
        block(&self.matrix, self.space, i, j)
    }

    /// `r_ij = tr R_ij`.
    pub fn logical_weight(&self, i: usize, j: usize) -> Result<num_complex::Complex64> {
        Ok(trace(&self.block(i, j)?))
    }
}

/// Checks hermiticity, unit trace and positivity with the crate tolerances.
pub fn validate_density(m: &CMatrix) -> Result<()> {
    check_hermitian_unit_trace(m)?;
    let min_ev = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
    if min_ev < MIN_EIGENVALUE {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min_ev:.3e}")));
    }
    Ok(())
}

fn check_hermitian_unit_trace(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let herm = hermiticity_defect(m);
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidDensityMatrix(format!("hermiticity defect {herm:.3e}")));
    }
    let tr = trace(m);
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
    }
    Ok(())
}

/// Square matrix with `||U^dag U - 1||_F <= UNITARY_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    matrix: CMatrix,
}

impl Unitary {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        let defect = unitarity_defect(&matrix);
        if !(defect <= UNITARY_TOL) {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { matrix })
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

    /// Block `(i, j)` (zero-based) with respect to a single-qubit partition.
    pub fn block(&self, space: EncodedSpace, i: usize, j: usize) -> Result<CMatrix> {
        block(&self.matrix, space, i, j)
    }
}

/// The `(i, j)` sub-block (zero-based, `i, j` in `{0, 1}`) of a `2n x 2n`
/// matrix over a single-qubit space.
pub fn block(m: &CMatrix, space: EncodedSpace, i: usize, j: usize) -> Result<CMatrix> {
    if space.num_qubits() != 1 {
        return Err(Error::NotSingleQubit { num_qubits: space.num_qubits() });
    }
    space.check_matrix(m)?;
    if i > 1 || j > 1 {
        return Err(Error::InvalidArgument(format!("block index ({i}, {j}) out of range")));
    }
    let n = space.encoding_dim();
    Ok(m.view((i * n, j * n), (n, n)).into_owned())
}

/// Inverse of [`block`]: `[[b00, b01], [b10, b11]]`.
pub fn assemble_blocks(b00: &CMatrix, b01: &CMatrix, b10: &CMatrix, b11: &CMatrix) -> CMatrix {
    let n = b00.nrows();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(b00);
    out.view_mut((0, n), (n, n)).copy_from(b01);
    out.view_mut((n, 0), (n, n)).copy_from(b10);
    out.view_mut((n, n), (n, n)).copy_from(b11);
    out
}

/// `|i>_L (x) e`, convenient for basis-state inputs.
pub fn logical_basis_state(space: EncodedSpace, i: usize, encoded: &CVector) -> Result<PureState> {
    if i >= space.logical_dim() {
        return Err(Error::InvalidArgument(format!("logical index {i} out of range")));
    }
    let mut l = CVector::zeros(space.logical_dim());
    l[i] = crate::linalg::ONE;
    PureState::product(space, &l, encoded)
}

/// Frobenius distance between two density matrices; handy in tests.
pub fn density_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    matrix_norm(&(a.matrix() - b.matrix()))
}
