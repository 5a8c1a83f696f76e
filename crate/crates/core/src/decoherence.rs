//! Decoherence of the initial state: dephasing inside the encoding
//! subspaces, thermal population of the first excited vibrational level,
//! and the error measures that compare gate outputs under both.
//!
//! Decoherence acts only on the state handed to the gate; propagation itself
//! stays closed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::NA2_GROUND_VIBRATIONAL_GAP;
use crate::encoding::{ea_signature, EAOperatorSet};
use crate::error::{Error, Result};
use crate::gates::GateClass;
use crate::linalg::{c, trace, CMatrix, CVector, ZERO};
use crate::space::{DensityMatrix, EncodedSpace, PureState};

/// Boltzmann constant in Hartree per kelvin.
pub const BOLTZMANN_HARTREE_PER_KELVIN: f64 = 3.166_811_563e-6;

/// Zero the off-diagonal elements of each diagonal block `R_ii`; coherences
/// between different logical blocks are untouched.
///
/// Trace, hermiticity and every EA expectation are preserved, but positivity
/// is not: keeping the inter-block coherences of a pure state while erasing
/// the intra-block ones can leave a negative eigenvalue (for
/// `psi = (1, 1, 1, 1)/2` the smallest is `-1/4`). Use
/// [`DensityMatrix::is_positive`] where that matters.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let de = rho.space().encoded_dim();
    let mut m = rho.matrix().clone();
    let d = m.nrows();
    for a in 0..d {
        for b in 0..d {
            if a != b && a / de == b / de {
                m[(a, b)] = ZERO;
            }
        }
    }
    DensityMatrix::new_indefinite(rho.space(), m).expect("dephasing keeps hermiticity and trace")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    /// Kelvin.
    pub temperature: f64,
    /// Vibrational gap on the ground surface, Hartree.
    pub e_v: f64,
    /// Hartree per kelvin.
    pub boltzmann_constant: f64,
}

impl ThermalSpec {
    /// Na2 ground-surface gap with the default Boltzmann constant.
    pub fn na2(temperature: f64) -> Self {
        Self { temperature, e_v: NA2_GROUND_VIBRATIONAL_GAP, boltzmann_constant: BOLTZMANN_HARTREE_PER_KELVIN }
    }

    /// `exp(-E_v / (k_B T))`.
    pub fn delta(&self) -> f64 {
        (-self.e_v / (self.boltzmann_constant * self.temperature)).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.e_v > 0.0 && self.boltzmann_constant > 0.0) {
            return Err(Error::InvalidArgument("E_v and k_B must be positive".into()));
        }
        Ok(())
    }
}

/// `diag(1 - Delta, Delta, 0, 0)` on the four-level (`n = 2`) qubit.
pub fn thermal_state(spec: &ThermalSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let delta = spec.delta();
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0 - delta, 0.0);
    m[(1, 1)] = c(delta, 0.0);
    DensityMatrix::new(EncodedSpace::qubit(2)?, m)
}

/// Lowest level `|0>_L (x) (1, 0, ...)`.
pub fn ground_state(space: EncodedSpace) -> DensityMatrix {
    let mut m = CMatrix::zeros(space.total_dim(), space.total_dim());
    m[(0, 0)] = c(1.0, 0.0);
    DensityMatrix::new(space, m).expect("projector is a valid state")
}

/// Error of equivalence `(1/Z) sum_r |Tr(Lambda_r [U rho~ U^dag - rho_target])|`
/// with `rho_target = (xi (x) 1) rho (xi (x) 1)^dag`.
pub fn error_mle(
    u_actual: &CMatrix,
    cls: &GateClass,
    rho: &DensityMatrix,
    rho_tilde: &DensityMatrix,
    ops: &EAOperatorSet,
) -> Result<f64> {
    let target = rho.evolve(&cls.canonical_member())?;
    let actual = rho_tilde.evolve(u_actual)?;
    let a = ea_signature(&actual, ops)?;
    let t = ea_signature(&target, ops)?;
    let sum: f64 = a.values.iter().zip(&t.values).map(|(x, y)| (x - y).abs()).sum();
    Ok(sum / ops.len() as f64)
}

/// `Tr([U rho~ U^dag - U_target rho U_target^dag]^2)`.
pub fn error_sle(u_actual: &CMatrix, u_target: &CMatrix, rho: &DensityMatrix, rho_tilde: &DensityMatrix) -> Result<f64> {
    if rho.space() != rho_tilde.space() {
        return Err(Error::DimensionMismatch { expected: rho.space().total_dim(), found: rho_tilde.space().total_dim() });
    }
    let diff = rho_tilde.evolve(u_actual)?.into_matrix() - rho.evolve(u_target)?.into_matrix();
    Ok(trace(&(&diff * &diff)).re)
}

/// Random initial states
/// `c0 |0> (x) (cos t0, e^{i p0} sin t0) + c1 |1> (x) (cos t1, e^{i p1} sin t1)`
/// with `c0 = cos(eta)`, `c1 = sin(eta)`, `eta` uniform on `[0, pi/2)` and all
/// four angles uniform on `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomStateSpec {
    pub seed: u64,
}

impl RandomStateSpec {
    /// Sample `index`, drawn from its own stream so samples can be generated
    /// in any order.
    pub fn sample(&self, index: u64) -> PureState {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let eta = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let tau = std::f64::consts::TAU;
        let (p0, p1, t0, t1): (f64, f64, f64, f64) =
            (rng.random_range(0.0..tau), rng.random_range(0.0..tau), rng.random_range(0.0..tau), rng.random_range(0.0..tau));
        let (c0, c1) = (eta.cos(), eta.sin());
        let v = CVector::from_vec(vec![
            c(c0 * t0.cos(), 0.0),
            num_complex::Complex64::from_polar(c0 * t0.sin(), p0),
            c(c1 * t1.cos(), 0.0),
            num_complex::Complex64::from_polar(c1 * t1.sin(), p1),
        ]);
        PureState::normalized(EncodedSpace::qubit(2).expect("n = 2 space"), v).expect("sampled state is nonzero")
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingSummary {
    pub num_samples: usize,
    pub seed: u64,
    pub mean_pure: f64,
    pub stderr_pure: f64,
    pub mean_dephased: f64,
    pub stderr_dephased: f64,
}

/// Average `eps[rho, rho]` and `eps[rho, dephase(rho)]` over random states.
pub fn dephasing_study(
    u_actual: &CMatrix,
    cls: &GateClass,
    spec: &RandomStateSpec,
    num_samples: usize,
) -> Result<DephasingSummary> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let space = EncodedSpace::qubit(2)?;
    if cls.space() != space {
        return Err(Error::InvalidArgument("the dephasing study runs on a single qubit with n = 2".into()));
    }
    space.check_matrix(u_actual)?;
    let ops = EAOperatorSet::new(space);
    let pairs: Vec<(f64, f64)> = (0..num_samples as u64)
        .into_par_iter()
        .map(|i| {
            let rho = spec.sample(i).to_density();
            let pure = error_mle(u_actual, cls, &rho, &rho, &ops)?;
            let dephased = error_mle(u_actual, cls, &rho, &dephase(&rho), &ops)?;
            Ok((pure, dephased))
        })
        .collect::<Result<_>>()?;
    let pure: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let dephased: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mean_pure, stderr_pure) = mean_and_stderr(&pure);
    let (mean_dephased, stderr_dephased) = mean_and_stderr(&dephased);
    Ok(DephasingSummary { num_samples, seed: spec.seed, mean_pure, stderr_pure, mean_dephased, stderr_dephased })
}

/// Gates compared in a temperature sweep: an MLE gate judged against its
/// class and an SLE gate judged against an exact target.
#[derive(Debug, Clone)]
pub struct SweepGates {
    pub mle: CMatrix,
    pub mle_class: GateClass,
    pub sle: CMatrix,
    pub sle_target: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t_kelvin: f64,
    pub delta: f64,
    pub eps_mle: f64,
    pub eps_sle: f64,
    /// `2 Delta^2`, the exact-gate value of `eps_sle`.
    pub eps_sle_oracle: f64,
}

/// Evenly spaced temperatures; a single step yields just `t_min`.
pub fn temperature_grid(t_min: f64, t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("need at least one temperature".into()));
    }
    if !(t_min > 0.0 && t_max >= t_min && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad temperature range [{t_min}, {t_max}]")));
    }
    if steps == 1 {
        return Ok(vec![t_min]);
    }
    let h = (t_max - t_min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { t_max } else { t_min + h * i as f64 }).collect())
}

/// Errors of both gates on the thermalized ground state across `temperatures`.
pub fn temperature_sweep(
    gates: &SweepGates,
    temperatures: &[f64],
    e_v: f64,
    boltzmann_constant: f64,
) -> Result<Vec<SweepRow>> {
    let space = EncodedSpace::qubit(2)?;
    if gates.mle_class.space() != space {
        return Err(Error::InvalidArgument("the temperature sweep runs on a single qubit with n = 2".into()));
    }
    for u in [&gates.mle, &gates.sle, &gates.sle_target] {
        space.check_matrix(u)?;
    }
    let ops = EAOperatorSet::new(space);
    let rho = ground_state(space);
    temperatures
        .iter()
        .map(|&t| {
            let spec = ThermalSpec { temperature: t, e_v, boltzmann_constant };
            let rho_t = thermal_state(&spec)?;
            let delta = spec.delta();
            Ok(SweepRow {
                t_kelvin: t,
                delta,
                eps_mle: error_mle(&gates.mle, &gates.mle_class, &rho, &rho_t, &ops)?,
                eps_sle: error_sle(&gates.sle, &gates.sle_target, &rho, &rho_t)?,
                eps_sle_oracle: 2.0 * delta * delta,
            })
        })
        .collect()
}

/// Temperature at which `eps_sle` first exceeds `eps_mle`, linearly
/// interpolated between grid points. Returns the first grid temperature if
/// the SLE error is already larger there, and `None` if it never is.
pub fn crossover_temperature(rows: &[SweepRow]) -> Option<f64> {
    let gap = |r: &SweepRow| r.eps_sle - r.eps_mle;
    let first = rows.first()?;
    if gap(first) > 0.0 {
        return Some(first.t_kelvin);
    }
    rows.windows(2).find(|w| gap(&w[1]) > 0.0).map(|w| {
        let (g0, g1) = (gap(&w[0]), gap(&w[1]));
        w[0].t_kelvin + (w[1].t_kelvin - w[0].t_kelvin) * (-g0) / (g1 - g0)
    })
}

pub const SWEEP_CSV_HEADER: &str = "T_kelvin,delta,eps_mle,eps_sle,eps_sle_oracle";

/// CSV with 17 significant digits per value.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.t_kelvin, r.delta, r.eps_mle, r.eps_sle, r.eps_sle_oracle
        ));
    }
    out
}
