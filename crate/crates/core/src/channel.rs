//! Completely positive trace-preserving maps in Kraus form.
//!
//! Only completely positive maps are representable; merely positive maps have
//! no Kraus decomposition and are not supported.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{identity, matrix_norm, random_unitary, CMatrix, ONE, UNITARY_TOL};

/// `rho -> sum_k W_k rho W_k^dag` with `sum_k W_k^dag W_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("a channel needs at least one Kraus operator".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional channel".into()));
        }
        for w in &operators {
            if !w.is_square() {
                return Err(Error::NotSquare { rows: w.nrows(), cols: w.ncols() });
            }
            if w.nrows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: w.nrows() });
            }
        }
        let sum = operators.iter().fold(CMatrix::zeros(dim, dim), |acc, w| acc + w.adjoint() * w);
        let defect = matrix_norm(&(sum - identity(dim)));
        if defect > UNITARY_TOL {
            return Err(Error::NotTracePreserving { defect });
        }
        Ok(Self { dim, operators })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, operators: vec![identity(dim)] }
    }

    /// Conjugation by a single unitary.
    pub fn unitary(v: CMatrix) -> Result<Self> {
        Self::new(vec![v])
    }

    /// Complete dephasing in the computational basis: Kraus operators are the
    /// rank-one projectors `|k><k|`.
    pub fn projective_dephasing(dim: usize) -> Self {
        let operators = (0..dim)
            .map(|k| {
                let mut p = CMatrix::zeros(dim, dim);
                p[(k, k)] = ONE;
                p
            })
            .collect();
        Self { dim, operators }
    }

    /// Random channel with `num_ops` Kraus operators, cut from the first
    /// `dim` columns of a Haar unitary on `C^{dim * num_ops}`. Stacking the
    /// operators then gives an isometry, which is exactly trace preservation.
    pub fn random<R: Rng + ?Sized>(dim: usize, num_ops: usize, rng: &mut R) -> Self {
        let u = random_unitary(dim * num_ops, rng);
        let operators = (0..num_ops).map(|k| u.view((k * dim, 0), (dim, dim)).into_owned()).collect();
        Self { dim, operators }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        apply_channel(self, rho)
    }
}

/// `sum_k W_k m W_k^dag`. Works on any `dim x dim` block, not only on states.
pub fn apply_channel(channel: &KrausChannel, m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != channel.dim || m.ncols() != channel.dim {
        return Err(Error::DimensionMismatch { expected: channel.dim, found: m.nrows().max(m.ncols()) });
    }
    Ok(channel
        .operators
        .iter()
        .fold(CMatrix::zeros(channel.dim, channel.dim), |acc, w| acc + w * m * w.adjoint()))
}

/// `w1 o w2`: apply `w2` first, then `w1`. Kraus operators are all products
/// `A_i B_j`.
pub fn compose_channels(w1: &KrausChannel, w2: &KrausChannel) -> Result<KrausChannel> {
    if w1.dim != w2.dim {
        return Err(Error::DimensionMismatch { expected: w1.dim, found: w2.dim });
    }
    let operators = w1
        .operators
        .iter()
        .flat_map(|a| w2.operators.iter().map(move |b| a * b))
        .collect();
    KrausChannel::new(operators)
}
