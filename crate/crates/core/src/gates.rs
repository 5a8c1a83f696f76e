//! Gate equivalence classes `xi (x) [U(n) (x) ... (x) U(n)]` and membership
//! tests.
//!
//! Membership is decided by projecting `U` onto the closest `xi (x) Y`, then
//! factoring `Y` across qubits with repeated operator-Schmidt (realign + SVD)
//! splits. Global phases, whether on the logical part or on any encoding
//! factor, are absorbed into the factors and never penalized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{qubits_for_logical_dim, sample_class_member_with};
use crate::error::{Error, Result};
use crate::linalg::{
    cnot, direct_sum, hadamard, identity, kron, kron_all, matrix_norm, nearest_kron, partial_trace_first,
    pauli_x, pauli_y, pauli_z, phase_gate, random_unitary, trace, unitarity_defect, CMatrix,
};
use crate::space::EncodedSpace;

/// A logical component must be unitary to this accuracy.
pub const LOGICAL_UNITARY_TOL: f64 = 1e-12;
/// Default residual tolerance for [`class_membership`].
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn matrix(self) -> CMatrix {
        match self {
            PauliAxis::X => pauli_x(),
            PauliAxis::Y => pauli_y(),
            PauliAxis::Z => pauli_z(),
        }
    }
}

/// All unitaries `xi' (x) V_1 (x) ... (x) V_M` with `xi'` equal to `logical`
/// up to a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GateClass {
    logical: CMatrix,
    space: EncodedSpace,
}

impl GateClass {
    pub fn new(logical: CMatrix, encoding_dim: usize) -> Result<Self> {
        if !logical.is_square() {
            return Err(Error::NotSquare { rows: logical.nrows(), cols: logical.ncols() });
        }
        let m = qubits_for_logical_dim(logical.nrows())?;
        let defect = unitarity_defect(&logical);
        if defect > LOGICAL_UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self { logical, space: EncodedSpace::new(m, encoding_dim)? })
    }

    pub fn logical(&self) -> &CMatrix {
        &self.logical
    }

    pub fn space(&self) -> EncodedSpace {
        self.space
    }

    pub fn num_qubits(&self) -> usize {
        self.space.num_qubits()
    }

    pub fn encoding_dim(&self) -> usize {
        self.space.encoding_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// `xi (x) 1`.
    pub fn canonical_member(&self) -> CMatrix {
        kron(&self.logical, &identity(self.space.encoded_dim()))
    }

    pub fn sample(&self, seed: u64) -> CMatrix {
        self.sample_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        sample_class_member_with(&self.logical, self.encoding_dim(), rng).expect("class invariants hold")
    }

    /// Same class iff the logical parts agree up to a global phase.
    pub fn same_class(&self, other: &GateClass) -> bool {
        self.space == other.space && phase_overlap(&self.logical, &other.logical) >= 1.0 - 1e-12
    }
}

/// `|tr(a^dag b)| / d`, which is 1 exactly when `b = e^{i phi} a` for unitaries.
pub fn phase_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    trace(&(a.adjoint() * b)).norm() / a.nrows() as f64
}

/// Logical identity on `M` qubits.
pub fn weak_identity_class(num_qubits: usize, n: usize) -> Result<GateClass> {
    GateClass::new(identity(1 << num_qubits), n)
}

pub fn pauli_class(axis: PauliAxis, n: usize) -> Result<GateClass> {
    GateClass::new(axis.matrix(), n)
}

pub fn hadamard_class(n: usize) -> Result<GateClass> {
    GateClass::new(hadamard(), n)
}

pub fn phase_class(phi: f64, n: usize) -> Result<GateClass> {
    GateClass::new(phase_gate(phi), n)
}

pub fn cnot_class(n: usize) -> Result<GateClass> {
    GateClass::new(cnot(), n)
}

/// `S (x) [V_1 (x) V_2]` for an arbitrary two-qubit logical unitary `S`.
pub fn two_qubit_class(s: CMatrix, n: usize) -> Result<GateClass> {
    if s.shape() != (4, 4) {
        return Err(Error::DimensionMismatch { expected: 4, found: s.nrows() });
    }
    GateClass::new(s, n)
}

/// Outcome of a membership test.
#[derive(Debug, Clone)]
pub struct Membership {
    pub member: bool,
    /// Frobenius distance from the best factorized class element.
    pub residual: f64,
    /// Best encoding factors, one per qubit. Not normalized to unitaries.
    pub encoded_factors: Vec<CMatrix>,
}

/// Distance of `u` from the class together with the encoding factors that
/// realize it.
///
/// `Y = tr_L((xi^dag (x) 1) U) / 2^M` is the exact minimizer of
/// `||U - xi (x) Y||_F` over all `Y`; `Y` is then split qubit by qubit into
/// its dominant operator-Schmidt term.
pub fn class_residual(u: &CMatrix, cls: &GateClass) -> Result<(f64, Vec<CMatrix>)> {
    cls.space.check_matrix(u)?;
    let (dl, de, n) = (cls.space.logical_dim(), cls.space.encoded_dim(), cls.encoding_dim());
    let rotated = kron(&cls.logical.adjoint(), &identity(de)) * u;
    let y = partial_trace_first(&rotated, dl, de) / crate::linalg::c(dl as f64, 0.0);
    let mut factors = Vec::with_capacity(cls.num_qubits());
    let mut rest = y;
    for q in 0..cls.num_qubits() - 1 {
        let tail = n.pow((cls.num_qubits() - 1 - q) as u32);
        let (head, tail_factor) = nearest_kron(&rest, n, tail);
        factors.push(head);
        rest = tail_factor;
    }
    factors.push(rest);
    let best = kron(&cls.logical, &kron_all(&factors));
    Ok((matrix_norm(&(u - best)), factors))
}

pub fn class_membership(u: &CMatrix, cls: &GateClass, tol: f64) -> Result<Membership> {
    let (residual, encoded_factors) = class_residual(u, cls)?;
    Ok(Membership { member: residual <= tol, residual, encoded_factors })
}

/// Target `(xi (x) V) (+) W` on `2n + k` levels, for a qubit encoded next to
/// `k` extra levels that must not be coupled in.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedTarget {
    gate_class: GateClass,
    pad_dim: usize,
}

impl PaddedTarget {
    /// `pad_dim = 0` is accepted as the degenerate, unpadded case.
    pub fn new(gate_class: GateClass, pad_dim: usize) -> Self {
        Self { gate_class, pad_dim }
    }

    pub fn gate_class(&self) -> &GateClass {
        &self.gate_class
    }

    pub fn pad_dim(&self) -> usize {
        self.pad_dim
    }

    pub fn dim(&self) -> usize {
        self.gate_class.dim() + self.pad_dim
    }

    /// A random member `(xi (x) V) (+) W`.
    pub fn sample(&self, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let core = self.gate_class.sample_with(&mut rng);
        if self.pad_dim == 0 {
            return core;
        }
        direct_sum(&core, &random_unitary(self.pad_dim, &mut rng))
    }
}

/// `1 - sqrt((r^2 + c^2) / (4 D))`, where `r` is the class residual of the
/// leading `D x D` block, `c` the Frobenius norm of the two blocks coupling it
/// to the pad levels, and `D` the class dimension. `2 sqrt(D)` is the largest
/// distance between two `D x D` unitaries, so with `k = 0` the score is one
/// minus the normalized class residual. For unitary input the score lies in
/// `[1 - 1/sqrt(2), 1]`.
pub fn padded_fidelity(u: &CMatrix, target: &PaddedTarget) -> Result<f64> {
    let total = target.dim();
    if !u.is_square() {
        return Err(Error::NotSquare { rows: u.nrows(), cols: u.ncols() });
    }
    if u.nrows() != total {
        return Err(Error::DimensionMismatch { expected: total, found: u.nrows() });
    }
    let d = target.gate_class.dim();
    let k = target.pad_dim;
    let core = u.view((0, 0), (d, d)).into_owned();
    let (residual, _) = class_residual(&core, &target.gate_class)?;
    let coupling_sq = if k == 0 {
        0.0
    } else {
        matrix_norm(&u.view((0, d), (d, k)).into_owned()).powi(2)
            + matrix_norm(&u.view((d, 0), (k, d)).into_owned()).powi(2)
    };
    let f = 1.0 - ((residual * residual + coupling_sq) / (4.0 * d as f64)).sqrt();
    Ok(f.clamp(0.0, 1.0))
}

/// Conventional single-level gate on `2n` levels: `xi` acts on levels `0`
/// and `n` (the lowest level of each subspace), `v` on the remaining `2n - 2`
/// in ascending order.
pub fn single_level_gate(xi: &CMatrix, v: &CMatrix, n: usize) -> Result<CMatrix> {
    if xi.shape() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 2, found: xi.nrows() });
    }
    if n == 0 || v.shape() != (2 * n - 2, 2 * n - 2) {
        return Err(Error::DimensionMismatch { expected: 2 * n.max(1) - 2, found: v.nrows() });
    }
    let logical = [0, n];
    let others: Vec<usize> = (0..2 * n).filter(|i| !logical.contains(i)).collect();
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    for (a, &i) in logical.iter().enumerate() {
        for (b, &j) in logical.iter().enumerate() {
            u[(i, j)] = xi[(a, b)];
        }
    }
    for (a, &i) in others.iter().enumerate() {
        for (b, &j) in others.iter().enumerate() {
            u[(i, j)] = v[(a, b)];
        }
    }
    Ok(u)
}

/// A unit-modulus scalar; used when comparing products that differ by a
/// known global phase such as `-1`.
pub fn scalar_phase(phi: f64) -> num_complex::Complex64 {
    num_complex::Complex64::from_polar(1.0, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{ea_operators, equivalent_operations, DEFAULT_EQUIV_TOL};
    use crate::linalg::{c, hermitian_exp, random_hermitian, ONE};

    #[test]
    fn pauli_x_member_with_identity_factor() {
        let cls = pauli_class(PauliAxis::X, 2).unwrap();
        #[rustfmt::skip]
        let swap = crate::linalg::from_real_rows(4, 4, &[
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        assert_eq!(cls.canonical_member(), swap);
        assert!(class_membership(&swap, &cls, 1e-12).unwrap().member);
    }

    #[test]
    fn sle_limit_members() {
        let h = hadamard_class(1).unwrap().sample(3);
        // n = 1 members are the Hadamard up to a phase.
        assert!((phase_overlap(&hadamard(), &h) - 1.0).abs() < 1e-14);
        let cn = cnot_class(1).unwrap().sample(4);
        assert!((phase_overlap(&cnot(), &cn) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phase_pi_is_pauli_z() {
        let ops = ea_operators(EncodedSpace::qubit(2).unwrap());
        let p = phase_class(std::f64::consts::PI, 2).unwrap().sample(1);
        let z = pauli_class(PauliAxis::Z, 2).unwrap().sample(2);
        assert!(equivalent_operations(&p, &z, &ops, 4, DEFAULT_EQUIV_TOL, 0).unwrap());
        assert!(phase_class(std::f64::consts::PI, 2).unwrap().same_class(&pauli_class(PauliAxis::Z, 2).unwrap()));
    }

    #[test]
    fn membership_of_samples_and_global_phase() {
        for (k, cls) in [
            weak_identity_class(1, 3).unwrap(),
            pauli_class(PauliAxis::Y, 2).unwrap(),
            cnot_class(2).unwrap(),
            two_qubit_class(identity(4), 2).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let u = cls.sample(k as u64) * scalar_phase(0.3 * k as f64);
            let m = class_membership(&u, cls, 1e-10).unwrap();
            assert!(m.member, "class {k}: residual {}", m.residual);
            assert_eq!(m.encoded_factors.len(), cls.num_qubits());
        }
    }

    #[test]
    fn perturbed_member_residual_scales_with_perturbation() {
        let cls = pauli_class(PauliAxis::X, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = cls.sample_with(&mut rng);
        let h = random_hermitian(4, &mut rng);
        let perturbed = hermitian_exp(&h, 1e-3) * u;
        let m = class_membership(&perturbed, &cls, 1e-6).unwrap();
        assert!(!m.member);
        assert!(m.residual > 1e-4 && m.residual < 1e-2, "{}", m.residual);
    }

    #[test]
    fn block_diagonal_with_distinct_blocks_is_not_weak_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (v, w) = (random_unitary(2, &mut rng), random_unitary(2, &mut rng));
        let u = direct_sum(&v, &w);
        let m = class_membership(&u, &weak_identity_class(1, 2).unwrap(), 1e-6).unwrap();
        assert!(!m.member);
        // The best Y is (V + W)/2, so the residual is exactly ||V - W|| / sqrt2.
        let expect = matrix_norm(&(&v - &w)) / 2f64.sqrt();
        assert!((m.residual - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unitary_logical() {
        assert!(GateClass::new(identity(2) * c(1.0 + 1e-9, 0.0), 2).is_err());
        assert!(two_qubit_class(identity(2), 2).is_err());
        assert!(GateClass::new(identity(3), 1).is_err());
    }

    #[test]
    fn padded_examples() {
        let target = PaddedTarget::new(pauli_class(PauliAxis::X, 2).unwrap(), 2);
        assert!((padded_fidelity(&target.sample(1), &target).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_unitary(6, &mut rng);
        let f = padded_fidelity(&r, &target).unwrap();
        assert!(f < 1.0 && f >= 1.0 - 0.5f64.sqrt());
        assert!(matrix_norm(&r.view((0, 4), (4, 2)).into_owned()) > 0.0);

        let bare = PaddedTarget::new(pauli_class(PauliAxis::X, 2).unwrap(), 0);
        let u = random_unitary(4, &mut rng);
        let (res, _) = class_residual(&u, bare.gate_class()).unwrap();
        assert!((padded_fidelity(&u, &bare).unwrap() - (1.0 - res / 4.0)).abs() < 1e-15);
        assert!(padded_fidelity(&u, &target).is_err());
    }

    #[test]
    fn single_level_gate_layout() {
        let v = random_unitary(2, &mut ChaCha8Rng::seed_from_u64(3));
        let u = single_level_gate(&pauli_x(), &v, 2).unwrap();
        assert_eq!(u[(0, 2)], ONE);
        assert_eq!(u[(2, 0)], ONE);
        assert_eq!(u[(1, 1)], v[(0, 0)]);
        assert_eq!(u[(3, 1)], v[(1, 0)]);
        assert!(unitarity_defect(&u) < 1e-14);
    }
}
