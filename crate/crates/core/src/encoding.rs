//! Equivalence-assay (EA) operators and logical equivalence.
//!
//! An EA operator is `Lambda_r = lambda_r (x) 1` with `lambda_r` a Hermitian
//! generator of `SU(2^M)`. Two states are logically equivalent when every
//! `<Lambda_r>` agrees, i.e. when their reduced states on the logical factor
//! coincide. Operations are equivalent when they map every state to
//! equivalent states.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::channel::{apply_channel, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    c, identity, kron, kron_all, random_unit_vector, random_unitary, trace, unitarity_defect, CMatrix,
    CVector, I, ONE, UNITARY_TOL,
};
use crate::space::{DensityMatrix, EncodedSpace, PureState};

/// Default tolerance of the equivalence predicates.
pub const DEFAULT_EQUIV_TOL: f64 = 1e-9;

/// Generalized Gell-Mann matrices for `SU(d)`, scaled by one half so that
/// `d = 2` yields `sigma_x/2, sigma_y/2, sigma_z/2`.
///
/// Order: for each pair `j < k` (lexicographic) the symmetric then the
/// antisymmetric generator, followed by the `d - 1` diagonal ones.
pub fn gell_mann(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = c(0.5, 0.0);
            s[(k, j)] = c(0.5, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = -I * 0.5;
            a[(k, j)] = I * 0.5;
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * 0.5;
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = c(norm, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * norm, 0.0);
        out.push(m);
    }
    out
}

/// The `4^M - 1` EA operators of a space.
#[derive(Debug, Clone)]
pub struct EAOperatorSet {
    space: EncodedSpace,
    generators: Vec<CMatrix>,
}

impl EAOperatorSet {
    pub fn new(space: EncodedSpace) -> Self {
        Self { space, generators: gell_mann(space.logical_dim()) }
    }

    pub fn space(&self) -> EncodedSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// The logical generators `lambda_r`.
    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// The full operator `Lambda_r = lambda_r (x) 1`.
    pub fn operator(&self, r: usize) -> CMatrix {
        kron(&self.generators[r], &identity(self.space.encoded_dim()))
    }

    pub fn operators(&self) -> Vec<CMatrix> {
        (0..self.len()).map(|r| self.operator(r)).collect()
    }
}

pub fn ea_operators(space: EncodedSpace) -> EAOperatorSet {
    EAOperatorSet::new(space)
}

/// Anything with a reduced state on the logical factor.
pub trait LogicalState {
    fn space(&self) -> EncodedSpace;
    fn logical_density(&self) -> CMatrix;
}

impl LogicalState for PureState {
    fn space(&self) -> EncodedSpace {
        PureState::space(self)
    }
    fn logical_density(&self) -> CMatrix {
        PureState::logical_density(self)
    }
}

impl LogicalState for DensityMatrix {
    fn space(&self) -> EncodedSpace {
        DensityMatrix::space(self)
    }
    fn logical_density(&self) -> CMatrix {
        DensityMatrix::logical_density(self)
    }
}

/// Expectation values `<Lambda_r>` plus the trace of the state, kept as a
/// normalization check. Serializes as the bare array of values.
#[derive(Debug, Clone, PartialEq)]
pub struct EASignature {
    pub values: Vec<f64>,
    pub trace: f64,
}

impl EASignature {
    /// `max_r |a_r - b_r|`; infinite if the lengths differ.
    pub fn max_deviation(&self, other: &EASignature) -> f64 {
        if self.values.len() != other.values.len() {
            return f64::INFINITY;
        }
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Serialize for EASignature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

/// Signature from a reduced logical state. `Tr(rho Lambda_r)` equals
/// `Tr(rho_L lambda_r)`, so the full operators are never formed.
pub fn signature_of_logical(rho_l: &CMatrix, ops: &EAOperatorSet) -> EASignature {
    let values = ops.generators.iter().map(|g| trace(&(rho_l * g)).re).collect();
    EASignature { values, trace: trace(rho_l).re }
}

pub fn ea_signature<S: LogicalState + ?Sized>(state: &S, ops: &EAOperatorSet) -> Result<EASignature> {
    if state.space() != ops.space() {
        return Err(Error::DimensionMismatch {
            expected: ops.space().total_dim(),
            found: state.space().total_dim(),
        });
    }
    Ok(signature_of_logical(&state.logical_density(), ops))
}

pub fn equivalent_states<A, B>(s1: &A, s2: &B, ops: &EAOperatorSet, tol: f64) -> Result<bool>
where
    A: LogicalState + ?Sized,
    B: LogicalState + ?Sized,
{
    Ok(ea_signature(s1, ops)?.max_deviation(&ea_signature(s2, ops)?) <= tol)
}

/// Fixed encoded reference vector used by the deterministic probes. All
/// entries are nonzero with distinct moduli and phases.
pub fn reference_encoded_vector(dim: usize) -> CVector {
    let v = CVector::from_fn(dim, |k, _| Complex64::from_polar(1.0 / (k as f64 + 2.0), 0.7 * k as f64));
    let norm = v.norm();
    v.unscale(norm)
}

/// Deterministic probes `|i>`, `(|i>+|j>)/sqrt2`, `(|i>+i|j>)/sqrt2` on the
/// logical factor, tensored with the reference encoded vector. Their
/// projectors span all logical operators.
pub fn deterministic_probes(space: EncodedSpace) -> Vec<PureState> {
    let dl = space.logical_dim();
    let e = reference_encoded_vector(space.encoded_dim());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(dl * dl);
    let basis = |i: usize| {
        let mut v = CVector::zeros(dl);
        v[i] = ONE;
        v
    };
    for i in 0..dl {
        out.push(PureState::product(space, &basis(i), &e).expect("probe is normalized"));
    }
    for i in 0..dl {
        for j in (i + 1)..dl {
            let plus = (basis(i) + basis(j)) * c(s, 0.0);
            let iplus = (basis(i) + basis(j) * I) * c(s, 0.0);
            out.push(PureState::product(space, &plus, &e).expect("probe is normalized"));
            out.push(PureState::product(space, &iplus, &e).expect("probe is normalized"));
        }
    }
    out
}

/// Deterministic probes followed by `num_random` Haar-random states.
pub fn probe_states(space: EncodedSpace, num_random: usize, seed: u64) -> Vec<PureState> {
    let mut probes = deterministic_probes(space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..num_random {
        let v = random_unit_vector(space.total_dim(), &mut rng);
        probes.push(PureState::normalized(space, v).expect("random probe is nonzero"));
    }
    probes
}

/// Largest signature deviation between `U1|psi>` and `U2|psi>` over the
/// probe set.
pub fn operation_deviation(
    u1: &CMatrix,
    u2: &CMatrix,
    ops: &EAOperatorSet,
    num_random_probes: usize,
    seed: u64,
) -> Result<f64> {
    let space = ops.space();
    space.check_matrix(u1)?;
    space.check_matrix(u2)?;
    let mut worst = 0.0f64;
    for psi in probe_states(space, num_random_probes, seed) {
        let a = ea_signature(&psi.evolve(u1)?, ops)?;
        let b = ea_signature(&psi.evolve(u2)?, ops)?;
        worst = worst.max(a.max_deviation(&b));
    }
    Ok(worst)
}

pub fn equivalent_operations(
    u1: &CMatrix,
    u2: &CMatrix,
    ops: &EAOperatorSet,
    num_random_probes: usize,
    tol: f64,
    seed: u64,
) -> Result<bool> {
    Ok(operation_deviation(u1, u2, ops, num_random_probes, seed)? <= tol)
}

/// `FG ~ GF`.
pub fn weakly_commute(
    f: &CMatrix,
    g: &CMatrix,
    ops: &EAOperatorSet,
    num_random_probes: usize,
    tol: f64,
    seed: u64,
) -> Result<bool> {
    equivalent_operations(&(f * g), &(g * f), ops, num_random_probes, tol, seed)
}

/// Number of qubits `M` with `2^M == dim`.
pub fn qubits_for_logical_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("logical dimension {dim} is not a power of two >= 2")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Draw `xi (x) (V_1 (x) ... (x) V_M)` with each `V_k` Haar-random in `U(n)`.
pub fn sample_class_member_with<R: rand::Rng + ?Sized>(
    logical: &CMatrix,
    n: usize,
    rng: &mut R,
) -> Result<CMatrix> {
    if !logical.is_square() {
        return Err(Error::NotSquare { rows: logical.nrows(), cols: logical.ncols() });
    }
    let m = qubits_for_logical_dim(logical.nrows())?;
    let defect = unitarity_defect(logical);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    EncodedSpace::new(m, n)?;
    let factors: Vec<CMatrix> = (0..m).map(|_| random_unitary(n, rng)).collect();
    Ok(kron(logical, &kron_all(&factors)))
}

pub fn sample_class_member(logical: &CMatrix, n: usize, seed: u64) -> Result<CMatrix> {
    sample_class_member_with(logical, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `L_xi rho` for the permissible operation `{xi, W}` on a single qubit:
/// block `(i, l)` of the output is `sum_{jk} xi_ij conj(xi_lk) W(R_jk)`
/// where `R_jk` are the `n x n` blocks of `rho` (weights included).
pub fn permissible_operation_apply(xi: &CMatrix, w: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let space = rho.space();
    if space.num_qubits() != 1 {
        return Err(Error::NotSingleQubit { num_qubits: space.num_qubits() });
    }
    if xi.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 2, found: xi.nrows() });
    }
    let defect = unitarity_defect(xi);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    let n = space.encoding_dim();
    if w.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: w.dim() });
    }
    let mut mapped = Vec::with_capacity(4);
    for j in 0..2 {
        for k in 0..2 {
            mapped.push(apply_channel(w, &rho.block(j, k)?)?);
        }
    }
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..2 {
        for l in 0..2 {
            let mut b = CMatrix::zeros(n, n);
            for j in 0..2 {
                for k in 0..2 {
                    b += &mapped[2 * j + k] * (xi[(i, j)] * xi[(l, k)].conj());
                }
            }
            out.view_mut((i * n, l * n), (n, n)).copy_from(&b);
        }
    }
    // Roundoff can leave ~1e-16 anti-Hermitian parts; symmetrize before
    // validation so only genuine violations are reported.
    let out = (&out + out.adjoint()) * c(0.5, 0.0);
    DensityMatrix::new(space, out)
}

/// Permutation `R` taking the per-qubit product basis
/// `(l_1 e_1) (x) ... (x) (l_M e_M)` to the preferred basis
/// `(l_1 ... l_M) (x) (e_1 ... e_M)`. Convert operators with `R U R^T`.
pub fn preferred_basis_permutation(num_qubits: usize, n: usize) -> Result<CMatrix> {
    let space = EncodedSpace::new(num_qubits, n)?;
    let d = space.total_dim();
    let de = space.encoded_dim();
    let mut r = CMatrix::zeros(d, d);
    for prod in 0..d {
        // Digits of the product index, slowest first: l_1, e_1, l_2, e_2, ...
        let mut rest = prod;
        let mut logical = 0usize;
        let mut encoded = 0usize;
        let mut digits = Vec::with_capacity(2 * num_qubits);
        for _ in 0..num_qubits {
            digits.push(rest % n);
            rest /= n;
            digits.push(rest % 2);
            rest /= 2;
        }
        digits.reverse();
        for q in 0..num_qubits {
            logical = logical * 2 + digits[2 * q];
            encoded = encoded * n + digits[2 * q + 1];
        }
        r[(logical * de + encoded, prod)] = ONE;
    }
    Ok(r)
}

/// `R U R^T` for `U` written in the per-qubit product basis.
pub fn to_preferred_basis(u_product: &CMatrix, num_qubits: usize, n: usize) -> Result<CMatrix> {
    let r = preferred_basis_permutation(num_qubits, n)?;
    if u_product.shape() != r.shape() {
        return Err(Error::DimensionMismatch { expected: r.nrows(), found: u_product.nrows() });
    }
    Ok(&r * u_product * r.transpose())
}
