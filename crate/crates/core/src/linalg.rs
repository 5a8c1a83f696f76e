//! Dense complex linear algebra helpers shared by every other module.
//!
//! All matrices are `nalgebra::DMatrix<Complex64>`. Dimensions in this crate
//! stay small (at most a few dozen), so nothing here tries to be clever about
//! allocation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance on `||U^dag U - 1||_F` for a matrix to count as unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Elementwise tolerance on `rho - rho^dag`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|tr(rho) - 1|`.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue a density matrix may have.
pub const MIN_EIGENVALUE: f64 = -1e-10;
/// Tolerance on the Euclidean norm of a pure state.
pub const NORM_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Build a complex matrix from real row-major entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn pauli_x() -> CMatrix {
    from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    from_real_rows(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    from_real_rows(2, 2, &[s, s, s, -s])
}

/// `diag(1, e^{i phi})`.
pub fn phase_gate(phi: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::from_polar(1.0, phi)])
}

pub fn cnot() -> CMatrix {
    #[rustfmt::skip]
    let m = from_real_rows(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
    ]);
    m
}

/// Frobenius norm, `sqrt(tr(M M^dag))`.
pub fn matrix_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows() + b.nrows();
    let m = a.ncols() + b.ncols();
    let mut out = CMatrix::zeros(n, m);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// `||U^dag U - 1||_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    matrix_norm(&(u.adjoint() * u - identity(n)))
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) <= tol
}

/// Largest elementwise deviation from hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian matrix in ascending order. Only the lower
/// triangle is trusted, so callers should check hermiticity first.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn random_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

/// Random Hermitian matrix with unit Frobenius norm.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(n, n, rng);
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    let norm = matrix_norm(&h);
    h / c(norm, 0.0)
}

/// Random unit vector, uniform on the complex sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let g = random_ginibre(n, 1, rng);
    let norm = matrix_norm(&g);
    CVector::from_iterator(n, g.iter().map(|z| z / norm))
}

/// Random density matrix `G G^dag / tr(G G^dag)` of full rank (almost surely).
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(n, n, rng);
    let m = &g * g.adjoint();
    let t = trace(&m);
    m / t
}

/// `exp(-i H t)` for Hermitian `H` via eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
    );
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Operator realignment for `U` acting on `C^{d1} (x) C^{d2}` (first factor
/// slow). Row `(i, j)` and column `(k, l)` of the result hold
/// `U[i*d2 + k, j*d2 + l]`, so `A (x) B` maps to `vec(A) vec(B)^T`.
pub fn realign(u: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d1 * d1, d2 * d2);
    for i in 0..d1 {
        for j in 0..d1 {
            for k in 0..d2 {
                for l in 0..d2 {
                    out[(i * d1 + j, k * d2 + l)] = u[(i * d2 + k, j * d2 + l)];
                }
            }
        }
    }
    out
}

/// Nearest (in Frobenius norm) product `A (x) B` to `u` with `A` of size
/// `d1` and `B` of size `d2`, from the dominant operator-Schmidt term.
/// The singular value is folded into `A`.
///
/// The dominant singular pair comes from the Hermitian eigendecomposition of
/// `R R^dag` (`R` the realigned matrix): nalgebra's complex SVD occasionally
/// returns factors that do not reproduce their input.
pub fn nearest_kron(u: &CMatrix, d1: usize, d2: usize) -> (CMatrix, CMatrix) {
    let r = realign(u, d1, d2);
    let eig = (&r * r.adjoint()).symmetric_eigen();
    let (mut best, mut lambda) = (0, f64::NEG_INFINITY);
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > lambda {
            lambda = ev;
            best = idx;
        }
    }
    let s = lambda.max(0.0).sqrt();
    if s == 0.0 {
        return (CMatrix::zeros(d1, d1), CMatrix::zeros(d2, d2));
    }
    let left = eig.eigenvectors.column(best).into_owned();
    // right singular row v^dag = u^dag R / s
    let right = left.adjoint() * &r / c(s, 0.0);
    let a = CMatrix::from_fn(d1, d1, |i, j| left[i * d1 + j] * s);
    let b = CMatrix::from_fn(d2, d2, |k, l| right[k * d2 + l]);
    (a, b)
}

/// Partial trace over the second factor of `C^{d1} (x) C^{d2}`.
pub fn partial_trace_second(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum())
}

/// Partial trace over the first factor of `C^{d1} (x) C^{d2}`.
pub fn partial_trace_first(m: &CMatrix, d1: usize, d2: usize) -> CMatrix {
    CMatrix::from_fn(d2, d2, |k, l| (0..d1).map(|i| m[(i * d2 + k, i * d2 + l)]).sum())
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norm_examples() {
        assert_eq!(matrix_norm(&CMatrix::zeros(3, 3)), 0.0);
        assert!((matrix_norm(&identity(2)) - 2f64.sqrt()).abs() < 1e-15);
        let m = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(matrix_norm(&m), 1.0);
    }

    #[test]
    fn norm_matches_trace_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_ginibre(4, 3, &mut rng);
        let tr = trace(&(&m * m.adjoint()));
        assert!((matrix_norm(&m).powi(2) - tr.re).abs() < 1e-12);
        assert!(tr.im.abs() < 1e-12);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..6 {
            assert!(unitarity_defect(&random_unitary(n, &mut rng)) < 1e-13);
        }
    }

    #[test]
    fn nearest_kron_recovers_exact_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_unitary(2, &mut rng);
        let b = random_unitary(3, &mut rng);
        let u = kron(&a, &b);
        let (fa, fb) = nearest_kron(&u, 2, 3);
        assert!(matrix_norm(&(kron(&fa, &fb) - &u)) < 1e-12);
        // products that tripped the complex SVD
        for _ in 0..2000 {
            let u = kron(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng));
            let (fa, fb) = nearest_kron(&u, 2, 2);
            assert!(matrix_norm(&(kron(&fa, &fb) - &u)) < 1e-12);
        }
        assert_eq!(nearest_kron(&CMatrix::zeros(4, 4), 2, 2).0, CMatrix::zeros(2, 2));
    }

    #[test]
    fn partial_traces_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_ginibre(2, 2, &mut rng);
        let b = random_ginibre(3, 3, &mut rng);
        let ab = kron(&a, &b);
        assert!(max_abs_diff(&partial_trace_second(&ab, 2, 3), &(&a * trace(&b))) < 1e-12);
        assert!(max_abs_diff(&partial_trace_first(&ab, 2, 3), &(&b * trace(&a))) < 1e-12);
    }

    #[test]
    fn hermitian_exp_of_diagonal() {
        let h = from_real_rows(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let u = hermitian_exp(&h, 0.3);
        assert!((u[(0, 0)] - Complex64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, 0.6)).norm() < 1e-14);
    }
}
