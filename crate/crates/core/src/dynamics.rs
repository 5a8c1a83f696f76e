//! Model Hamiltonians, shaped control fields and propagation of the
//! time-dependent Schrödinger equation `dU/dt = -i H(t) U` in atomic units.
//!
//! The Hamiltonian is `H(t) = H0 - mu * eps(t)` with a diagonal `H0` and a
//! real symmetric dipole operator `mu`. Propagation uses piecewise-constant
//! midpoint exponentials: every step multiplies by `exp(-i H(t + dt/2) dt)`
//! computed from an exact eigendecomposition, so the result stays on the
//! unitary manifold up to roundoff.

use std::f64::consts::{LN_2, TAU};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMatrix};

/// One atomic unit of time in seconds.
pub const ATOMIC_UNIT_OF_TIME_S: f64 = 2.418_884_326_585_7e-17;

/// Largest allowed step, as a fraction of the fastest period.
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;
/// Steps per fastest period used when no step is given.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 40.0;
/// Default gate duration in atomic units of time.
pub const DEFAULT_T_FINAL: f64 = 2.0e4;
/// Propagations whose final unitarity defect exceeds this are rejected.
pub const MAX_UNITARITY_DEFECT: f64 = 1e-8;

/// Ground/excited electronic gap of Na2 (Hartree).
pub const NA2_ELECTRONIC_GAP: f64 = 0.066_889_653;
/// Vibrational spacing on the ground surface (Hartree).
pub const NA2_GROUND_VIBRATIONAL_GAP: f64 = 0.000_725_023_8;
/// Vibrational spacing on the excited surface (Hartree).
pub const NA2_EXCITED_VIBRATIONAL_GAP: f64 = 0.000_534_563;

/// Levels, dipole couplings and the encoding partition of a driven system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSystem {
    pub level_energies: Vec<f64>,
    /// Row-major real symmetric dipole matrix.
    pub dipole: Vec<Vec<f64>>,
    /// Levels per logical basis state.
    pub encoding_dim: usize,
}

/// A dipole-allowed transition `lower -> upper` with its Bohr frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
    pub omega: f64,
}

impl ModelSystem {
    pub fn new(level_energies: Vec<f64>, dipole: Vec<Vec<f64>>, encoding_dim: usize) -> Result<Self> {
        let sys = Self { level_energies, dipole, encoding_dim };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("model has no levels".into()));
        }
        if self.dipole.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.dipole.len() });
        }
        for (i, row) in self.dipole.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidArgument(format!("dipole diagonal entry {i} is nonzero")));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != self.dipole[j][i] {
                    return Err(Error::InvalidArgument(format!("dipole not symmetric at ({i}, {j})")));
                }
            }
        }
        let n = self.encoding_dim;
        if n == 0 {
            return Err(Error::InvalidArgument("encoding dimension must be positive".into()));
        }
        let allowed = self.allowed_transitions().len();
        if allowed != n * n {
            return Err(Error::InvalidArgument(format!(
                "{allowed} allowed transitions, expected n^2 = {}",
                n * n
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.level_energies.len()
    }

    /// Dipole-allowed transitions in row-major order of the upper triangle.
    pub fn allowed_transitions(&self) -> Vec<Transition> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                if self.dipole[i][j] != 0.0 {
                    let (lo, hi) = if self.level_energies[i] <= self.level_energies[j] { (i, j) } else { (j, i) };
                    out.push(Transition {
                        lower: lo,
                        upper: hi,
                        omega: (self.level_energies[j] - self.level_energies[i]).abs(),
                    });
                }
            }
        }
        out
    }

    /// Largest Bohr frequency between any two levels.
    pub fn max_level_gap(&self) -> f64 {
        let max = self.level_energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.level_energies.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn h0(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.level_energies))
    }

    pub fn dipole_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.dipole[i][j])
    }
}

/// Four-level Na2 model: two vibrational levels on each of the ground and
/// first excited electronic surfaces, unit dipoles between surfaces and
/// none within a surface.
pub fn na2_model() -> ModelSystem {
    let e = vec![
        0.0,
        NA2_GROUND_VIBRATIONAL_GAP,
        NA2_ELECTRONIC_GAP,
        NA2_ELECTRONIC_GAP + NA2_EXCITED_VIBRATIONAL_GAP,
    ];
    let mut dipole = vec![vec![0.0; 4]; 4];
    for g in 0..2 {
        for x in 2..4 {
            dipole[g][x] = 1.0;
            dipole[x][g] = 1.0;
        }
    }
    ModelSystem::new(e, dipole, 2).expect("Na2 model is valid")
}

/// Pulse envelope `f(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Envelope {
    /// `exp(-4 ln2 (t - center)^2 / fwhm^2)`, clipped to the gate window.
    Gaussian { center: f64, fwhm: f64 },
    /// Unit plateau with `sin^2` ramps of length `rise` at both ends.
    FlatTop { rise: f64 },
    /// `f = 1`.
    Constant,
}

impl Envelope {
    /// Gaussian centred in the window with FWHM of half the window.
    pub fn default_gaussian(t_final: f64) -> Self {
        Envelope::Gaussian { center: 0.5 * t_final, fwhm: 0.5 * t_final }
    }

    pub fn value(&self, t: f64, t_final: f64) -> f64 {
        match *self {
            Envelope::Gaussian { center, fwhm } => {
                let x = (t - center) / fwhm;
                (-4.0 * LN_2 * x * x).exp()
            }
            Envelope::FlatTop { rise } => {
                if rise <= 0.0 {
                    return 1.0;
                }
                let edge = t.min(t_final - t);
                if edge >= rise {
                    1.0
                } else {
                    let s = (0.5 * std::f64::consts::PI * edge.max(0.0) / rise).sin();
                    s * s
                }
            }
            Envelope::Constant => 1.0,
        }
    }
}

/// One carrier `a cos(omega t + delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldComponent {
    pub a: f64,
    pub omega: f64,
    pub delta: f64,
}

/// `eps(t) = f(t) * sum_i a_i cos(omega_i t + delta_i)` on `[0, t_final]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    pub envelope: Envelope,
    pub components: Vec<FieldComponent>,
    pub t_final: f64,
}

impl ControlField {
    /// One component per allowed transition at its Bohr frequency, with zero
    /// amplitude and phase, under the default Gaussian envelope.
    pub fn resonant_template(system: &ModelSystem, t_final: f64) -> Self {
        let components = system
            .allowed_transitions()
            .iter()
            .map(|tr| FieldComponent { a: 0.0, omega: tr.omega, delta: 0.0 })
            .collect();
        Self { envelope: Envelope::default_gaussian(t_final), components, t_final }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_final must be positive, got {}", self.t_final)));
        }
        if let Envelope::Gaussian { fwhm, .. } = self.envelope {
            if !(fwhm > 0.0) {
                return Err(Error::InvalidArgument("Gaussian FWHM must be positive".into()));
            }
        }
        for c in &self.components {
            if !(c.a.is_finite() && c.omega.is_finite() && c.delta.is_finite()) {
                return Err(Error::InvalidArgument("non-finite field component".into()));
            }
        }
        Ok(())
    }

    /// Field amplitude at time `t`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_final).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_final: self.t_final });
        }
        Ok(self.value_unchecked(t))
    }

    fn value_unchecked(&self, t: f64) -> f64 {
        let carrier: f64 = self.components.iter().map(|c| c.a * (c.omega * t + c.delta).cos()).sum();
        self.envelope.value(t, self.t_final) * carrier
    }

    pub fn max_frequency(&self) -> f64 {
        self.components.iter().map(|c| c.omega.abs()).fold(0.0, f64::max)
    }
}

/// Free function form of [`ControlField::value`].
pub fn field_value(field: &ControlField, t: f64) -> Result<f64> {
    field.value(t)
}

/// Outcome of a propagation.
#[derive(Debug, Clone)]
pub struct PropagatorResult {
    pub u_final: CMatrix,
    pub unitarity_defect: f64,
    pub num_steps: usize,
}

/// Fastest frequency the integrator must resolve: the largest carrier or
/// level gap.
pub fn fastest_frequency(system: &ModelSystem, field: &ControlField) -> f64 {
    system.max_level_gap().max(field.max_frequency())
}

/// `(2 pi / omega_max) / 40`.
pub fn default_dt(system: &ModelSystem, field: &ControlField) -> f64 {
    TAU / fastest_frequency(system, field) / DEFAULT_STEPS_PER_PERIOD
}

fn check_resolution(system: &ModelSystem, field: &ControlField, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let omega_max = fastest_frequency(system, field);
    if omega_max > 0.0 {
        let max_dt = TAU / omega_max / MIN_STEPS_PER_PERIOD;
        if dt > max_dt {
            return Err(Error::UnresolvedFrequency { dt, omega_max, max_dt });
        }
    }
    Ok(())
}

/// Propagate over the whole gate window `[0, t_final]` with steps no longer
/// than `dt`. The grid is uniform with `ceil(t_final / dt)` steps.
pub fn propagate(system: &ModelSystem, field: &ControlField, dt: f64) -> Result<PropagatorResult> {
    check_resolution(system, field, dt)?;
    field.validate()?;
    if field.components.is_empty() && system.dim() == 0 {
        return Err(Error::InvalidArgument("empty system".into()));
    }
    let num_steps = (field.t_final / dt).ceil().max(1.0) as usize;
    let u_final = Propagator::new(system).evolve(field, 0.0, field.t_final, num_steps);
    let defect = unitarity_defect(&u_final);
    if defect > MAX_UNITARITY_DEFECT {
        return Err(Error::UnitarityDefect { defect, limit: MAX_UNITARITY_DEFECT });
    }
    Ok(PropagatorResult { u_final, unitarity_defect: defect, num_steps })
}

/// Propagate over `[t_start, t_end]` with exactly `num_steps` midpoint steps.
pub fn propagate_span(
    system: &ModelSystem,
    field: &ControlField,
    t_start: f64,
    t_end: f64,
    num_steps: usize,
) -> Result<CMatrix> {
    field.validate()?;
    if !(0.0 <= t_start && t_start <= t_end && t_end <= field.t_final) {
        return Err(Error::TimeOutOfRange { t: if t_start < 0.0 { t_start } else { t_end }, t_final: field.t_final });
    }
    if num_steps == 0 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    check_resolution(system, field, (t_end - t_start) / num_steps as f64)?;
    Ok(Propagator::new(system).evolve(field, t_start, t_end, num_steps))
}

/// Reusable workspace for midpoint-exponential propagation.
struct Propagator {
    dim: usize,
    energies: Vec<f64>,
    dipole: Vec<f64>,
}

impl Propagator {
    fn new(system: &ModelSystem) -> Self {
        let d = system.dim();
        let dipole = (0..d * d).map(|k| system.dipole[k / d][k % d]).collect();
        Self { dim: d, energies: system.level_energies.clone(), dipole }
    }

    fn evolve(&self, field: &ControlField, t_start: f64, t_end: f64, num_steps: usize) -> CMatrix {
        let d = self.dim;
        let h = (t_end - t_start) / num_steps as f64;
        let zero = Complex64::new(0.0, 0.0);
        // row-major working copies; U is only converted to a matrix at the end
        let mut u = vec![zero; d * d];
        for i in 0..d {
            u[i * d + i] = Complex64::new(1.0, 0.0);
        }
        let mut w = vec![zero; d * d];
        let mut ham = vec![0.0; d * d];
        let mut eig = WarmEigen::new(d);

        for k in 0..num_steps {
            let t_mid = t_start + (k as f64 + 0.5) * h;
            let eps = field.value_unchecked(t_mid);
            for (hv, mu) in ham.iter_mut().zip(&self.dipole) {
                *hv = -eps * mu;
            }
            for i in 0..d {
                ham[i * d + i] += self.energies[i];
            }
            eig.decompose(&ham);
            let q = &eig.vectors;
            // w = diag(exp(-i lambda h)) Q^T U
            for i in 0..d {
                let ph = Complex64::from_polar(1.0, -eig.values[i] * h);
                for j in 0..d {
                    let mut acc = zero;
                    for m in 0..d {
                        acc += u[m * d + j] * q[m * d + i];
                    }
                    w[i * d + j] = acc * ph;
                }
            }
            // U = Q w
            for i in 0..d {
                for j in 0..d {
                    let mut acc = zero;
                    for m in 0..d {
                        acc += w[m * d + j] * q[i * d + m];
                    }
                    u[i * d + j] = acc;
                }
            }
        }
        CMatrix::from_row_slice(d, d, &u)
    }
}

/// Eigendecomposition of a slowly varying real symmetric matrix.
///
/// Each call rotates the new matrix into the previous eigenbasis and finishes
/// with cyclic Jacobi sweeps, which converge in one or two sweeps when the
/// matrix moved little. The basis is re-orthonormalized after every call so
/// roundoff cannot accumulate across steps.
struct WarmEigen {
    d: usize,
    /// Row-major; columns are eigenvectors.
    vectors: Vec<f64>,
    values: Vec<f64>,
    work: Vec<f64>,
    tmp: Vec<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 30;

impl WarmEigen {
    fn new(d: usize) -> Self {
        let mut vectors = vec![0.0; d * d];
        for i in 0..d {
            vectors[i * d + i] = 1.0;
        }
        Self { d, vectors, values: vec![0.0; d], work: vec![0.0; d * d], tmp: vec![0.0; d * d] }
    }

    fn decompose(&mut self, m: &[f64]) {
        if !self.try_decompose(m) {
            // cold restart from the library solver
            let d = self.d;
            let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, m));
            for i in 0..d {
                for j in 0..d {
                    self.vectors[i * d + j] = eig.eigenvectors[(i, j)];
                }
                self.values[i] = eig.eigenvalues[i];
            }
        }
    }

    fn try_decompose(&mut self, m: &[f64]) -> bool {
        let d = self.d;
        let (q, a, tmp) = (&mut self.vectors, &mut self.work, &mut self.tmp);
        // a = Q^T m Q
        for i in 0..d {
            for j in 0..d {
                tmp[i * d + j] = (0..d).map(|k| m[i * d + k] * q[k * d + j]).sum();
            }
        }
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = (0..d).map(|k| q[k * d + i] * tmp[k * d + j]).sum();
            }
        }
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..d {
                diag += a[i * d + i] * a[i * d + i];
                for j in (i + 1)..d {
                    off += a[i * d + j] * a[i * d + j];
                }
            }
            if off <= 1e-34 * diag || off == 0.0 {
                converged = true;
                break;
            }
            for p in 0..d {
                for r in (p + 1)..d {
                    let apr = a[p * d + r];
                    if apr == 0.0 {
                        continue;
                    }
                    let theta = (a[r * d + r] - a[p * d + p]) / (2.0 * apr);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let (x, y) = (a[k * d + p], a[k * d + r]);
                        a[k * d + p] = c * x - s * y;
                        a[k * d + r] = s * x + c * y;
                    }
                    for k in 0..d {
                        let (x, y) = (a[p * d + k], a[r * d + k]);
                        a[p * d + k] = c * x - s * y;
                        a[r * d + k] = s * x + c * y;
                    }
                    for k in 0..d {
                        let (x, y) = (q[k * d + p], q[k * d + r]);
                        q[k * d + p] = c * x - s * y;
                        q[k * d + r] = s * x + c * y;
                    }
                }
            }
        }
        if !converged {
            return false;
        }
        // modified Gram-Schmidt on the columns
        for j in 0..d {
            for p in 0..j {
                let dot: f64 = (0..d).map(|k| q[k * d + p] * q[k * d + j]).sum();
                for k in 0..d {
                    q[k * d + j] -= dot * q[k * d + p];
                }
            }
            let norm = (0..d).map(|k| q[k * d + j] * q[k * d + j]).sum::<f64>().sqrt();
            for k in 0..d {
                q[k * d + j] /= norm;
            }
        }
        for i in 0..d {
            self.values[i] = a[i * d + i];
        }
        true
    }
}
