//! Gate-fidelity functionals and a genetic algorithm over control-field
//! parameters.
//!
//! Genes, per field component: amplitude, phase, and optionally a frequency
//! offset from the Bohr frequency; optionally one trailing gene for the gate
//! duration. Phases are referenced to the envelope centre `t_c`, i.e. the
//! carrier is `a cos(omega (t - t_c) + phi)`. With that reference, changing a
//! frequency or the duration does not scramble the phase the pulse carries
//! at its peak, which keeps the landscape smooth in those directions.

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    default_dt, fastest_frequency, propagate, ControlField, Envelope, ModelSystem, MIN_STEPS_PER_PERIOD,
};
use crate::error::{Error, Result};
use crate::gates::{padded_fidelity, PaddedTarget};
use crate::io::MatrixJson;
use crate::linalg::{identity, matrix_norm, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    MleX,
    MleZ,
    SleX,
    SleZ,
    GenericNorm,
    Padded,
}

impl FidelityKind {
    pub fn name(self) -> &'static str {
        match self {
            FidelityKind::MleX => "mle-x",
            FidelityKind::MleZ => "mle-z",
            FidelityKind::SleX => "sle-x",
            FidelityKind::SleZ => "sle-z",
            FidelityKind::GenericNorm => "generic-norm",
            FidelityKind::Padded => "padded",
        }
    }
}

impl FromStr for FidelityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('_', "-").as_str() {
            "mle-x" => FidelityKind::MleX,
            "mle-z" => FidelityKind::MleZ,
            "sle-x" => FidelityKind::SleX,
            "sle-z" => FidelityKind::SleZ,
            "generic-norm" => FidelityKind::GenericNorm,
            "padded" => FidelityKind::Padded,
            other => return Err(Error::InvalidArgument(format!("unknown target '{other}'"))),
        })
    }
}

fn split_blocks(u: &CMatrix) -> Result<(usize, [CMatrix; 4])> {
    if !u.is_square() {
        return Err(Error::NotSquare { rows: u.nrows(), cols: u.ncols() });
    }
    let d = u.nrows();
    if d == 0 || d % 2 != 0 {
        return Err(Error::InvalidArgument(format!("dimension {d} is not even")));
    }
    let n = d / 2;
    let b = |i: usize, j: usize| u.view((i * n, j * n), (n, n)).into_owned();
    Ok((n, [b(0, 0), b(0, 1), b(1, 0), b(1, 1)]))
}

/// `1 - sqrt(||P P^dag - 1||^2 / n + ||P -/+ Q||^2 / (4n))`, unclamped.
fn block_functional(p: &CMatrix, q: &CMatrix, n: usize, subtract: bool) -> f64 {
    let nf = n as f64;
    let unit = matrix_norm(&(p * p.adjoint() - identity(n))).powi(2) / nf;
    let pair = if subtract { p - q } else { p + q };
    let balance = matrix_norm(&pair).powi(2) / (4.0 * nf);
    1.0 - (unit + balance).sqrt()
}

/// Unclamped `F_x` built from the off-diagonal blocks `B`, `C`.
pub fn mle_x_raw(u: &CMatrix) -> Result<f64> {
    let (n, [_, b, c, _]) = split_blocks(u)?;
    Ok(block_functional(&b, &c, n, true))
}

/// Unclamped `F_z` built from the diagonal blocks `A`, `D`.
pub fn mle_z_raw(u: &CMatrix) -> Result<f64> {
    let (n, [a, _, _, d]) = split_blocks(u)?;
    Ok(block_functional(&a, &d, n, false))
}

fn check_sle_dim(u: &CMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NotSquare { rows: u.nrows(), cols: u.ncols() });
    }
    if u.nrows() < 3 {
        return Err(Error::InvalidArgument(format!("single-level functionals need dimension >= 3, got {}", u.nrows())));
    }
    Ok(())
}

/// `|0>` and `|1>` sit on the first and third levels.
pub fn sle_x_raw(u: &CMatrix) -> Result<f64> {
    check_sle_dim(u)?;
    Ok(0.5 * (u[(0, 2)] + u[(2, 0)]).norm())
}

pub fn sle_z_raw(u: &CMatrix) -> Result<f64> {
    check_sle_dim(u)?;
    Ok(0.5 * (u[(0, 0)] - u[(2, 2)]).norm())
}

pub fn fidelity_mle_x(u: &CMatrix, n: usize) -> Result<f64> {
    check_encoding(u, n)?;
    Ok(mle_x_raw(u)?.clamp(0.0, 1.0))
}

pub fn fidelity_mle_z(u: &CMatrix, n: usize) -> Result<f64> {
    check_encoding(u, n)?;
    Ok(mle_z_raw(u)?.clamp(0.0, 1.0))
}

pub fn fidelity_sle_x(u: &CMatrix) -> Result<f64> {
    Ok(sle_x_raw(u)?.clamp(0.0, 1.0))
}

pub fn fidelity_sle_z(u: &CMatrix) -> Result<f64> {
    Ok(sle_z_raw(u)?.clamp(0.0, 1.0))
}

fn check_encoding(u: &CMatrix, n: usize) -> Result<()> {
    if u.nrows() != 2 * n || u.ncols() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, found: u.nrows() });
    }
    Ok(())
}

/// Value of a functional, with a flag raised when clamping to `[0, 1]` was
/// needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct FidelityFunctional {
    kind: FidelityKind,
    target: Option<CMatrix>,
    padded: Option<PaddedTarget>,
}

impl FidelityFunctional {
    pub fn new(kind: FidelityKind) -> Result<Self> {
        match kind {
            FidelityKind::GenericNorm | FidelityKind::Padded => Err(Error::InvalidArgument(format!(
                "target '{}' needs an explicit target matrix",
                kind.name()
            ))),
            _ => Ok(Self { kind, target: None, padded: None }),
        }
    }

    /// `F = 1 - ||U_target - U||`.
    pub fn generic_norm(target: CMatrix) -> Self {
        Self { kind: FidelityKind::GenericNorm, target: Some(target), padded: None }
    }

    pub fn padded(target: PaddedTarget) -> Self {
        Self { kind: FidelityKind::Padded, target: None, padded: Some(target) }
    }

    pub fn kind(&self) -> FidelityKind {
        self.kind
    }

    pub fn raw(&self, u: &CMatrix) -> Result<f64> {
        match self.kind {
            FidelityKind::MleX => mle_x_raw(u),
            FidelityKind::MleZ => mle_z_raw(u),
            FidelityKind::SleX => sle_x_raw(u),
            FidelityKind::SleZ => sle_z_raw(u),
            FidelityKind::GenericNorm => {
                let t = self.target.as_ref().expect("generic functional has a target");
                if t.shape() != u.shape() {
                    return Err(Error::DimensionMismatch { expected: t.nrows(), found: u.nrows() });
                }
                Ok(1.0 - matrix_norm(&(t - u)))
            }
            FidelityKind::Padded => padded_fidelity(u, self.padded.as_ref().expect("padded functional has a target")),
        }
    }

    pub fn evaluate(&self, u: &CMatrix) -> Result<Evaluation> {
        let raw = self.raw(u)?;
        let value = raw.clamp(0.0, 1.0);
        Ok(Evaluation { value, raw, clamped: value != raw })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Binary tournament.
    Tournament,
    /// Linear ranking: the best of `N` is drawn with weight `N`, the worst
    /// with weight 1.
    Rank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elite_count: usize,
    pub seed: u64,
    pub selection: Selection,
    /// Amplitude genes live in `[0, amplitude_max]` (atomic units of field).
    pub amplitude_max: f64,
    /// Frequency genes live in `[-d, d]` around each Bohr frequency
    /// (rad per atomic unit of time); `0` pins the frequencies.
    pub frequency_deviation: f64,
    /// When set, the gate duration is a gene in this range.
    pub t_final_range: Option<[f64; 2]>,
    /// Mutation standard deviation as a fraction of each gene's range ...
    pub mutation_scale: f64,
    /// ... multiplied by `mutation_decay^(generation / generations)`.
    pub mutation_decay: f64,
    /// Time-step resolution used while searching. The best field is always
    /// re-evaluated at the default resolution.
    pub search_steps_per_period: f64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population_size: 200,
            generations: 150,
            crossover_rate: 0.3,
            mutation_rate: 0.3,
            elite_count: 2,
            seed: 0,
            selection: Selection::Tournament,
            amplitude_max: 5e-4,
            frequency_deviation: 4e-5,
            t_final_range: Some([2.0e4, 5.0e4]),
            mutation_scale: 0.1,
            mutation_decay: 0.05,
            search_steps_per_period: MIN_STEPS_PER_PERIOD,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 2 {
            return bad(format!("population_size must be at least 2, got {}", self.population_size));
        }
        if self.elite_count >= self.population_size {
            return bad(format!(
                "elite_count ({}) must be smaller than population_size ({})",
                self.elite_count, self.population_size
            ));
        }
        for (name, v) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.amplitude_max > 0.0 && self.amplitude_max.is_finite()) {
            return bad(format!("amplitude_max must be positive, got {}", self.amplitude_max));
        }
        if !(self.frequency_deviation >= 0.0 && self.frequency_deviation.is_finite()) {
            return bad(format!("frequency_deviation must be non-negative, got {}", self.frequency_deviation));
        }
        if let Some([lo, hi]) = self.t_final_range {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad(format!("t_final_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
            }
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return bad(format!("mutation_scale must be positive, got {}", self.mutation_scale));
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return bad(format!("mutation_decay must lie in (0, 1], got {}", self.mutation_decay));
        }
        if !(self.search_steps_per_period >= MIN_STEPS_PER_PERIOD) {
            return bad(format!(
                "search_steps_per_period must be at least {MIN_STEPS_PER_PERIOD}, got {}",
                self.search_steps_per_period
            ));
        }
        Ok(())
    }
}

/// Mapping between gene vectors and control fields.
#[derive(Debug, Clone)]
pub struct GeneLayout {
    template: ControlField,
    free_frequencies: bool,
    t_final_range: Option<[f64; 2]>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl GeneLayout {
    pub fn new(template: &ControlField, config: &GAConfig) -> Result<Self> {
        template.validate()?;
        let nc = template.components.len();
        if nc == 0 {
            return Err(Error::InvalidConfig("field template has no components".into()));
        }
        let free_frequencies = config.frequency_deviation > 0.0;
        let mut lower = vec![0.0; nc];
        let mut upper = vec![config.amplitude_max; nc];
        lower.extend(std::iter::repeat_n(0.0, nc));
        upper.extend(std::iter::repeat_n(TAU, nc));
        if free_frequencies {
            lower.extend(std::iter::repeat_n(-config.frequency_deviation, nc));
            upper.extend(std::iter::repeat_n(config.frequency_deviation, nc));
        }
        if let Some([lo, hi]) = config.t_final_range {
            lower.push(lo);
            upper.push(hi);
        }
        Ok(Self { template: template.clone(), free_frequencies, t_final_range: config.t_final_range, lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn is_phase(&self, g: usize) -> bool {
        let nc = self.template.components.len();
        (nc..2 * nc).contains(&g)
    }

    pub fn to_field(&self, genes: &[f64]) -> ControlField {
        let nc = self.template.components.len();
        let mut field = self.template.clone();
        if self.t_final_range.is_some() {
            let tf = genes[self.len() - 1];
            let scale = tf / self.template.t_final;
            field.t_final = tf;
            field.envelope = match self.template.envelope {
                Envelope::Gaussian { center, fwhm } => Envelope::Gaussian { center: center * scale, fwhm: fwhm * scale },
                Envelope::FlatTop { rise } => Envelope::FlatTop { rise: rise * scale },
                Envelope::Constant => Envelope::Constant,
            };
        }
        let t_ref = match field.envelope {
            Envelope::Gaussian { center, .. } => center,
            _ => 0.5 * field.t_final,
        };
        for (i, comp) in field.components.iter_mut().enumerate() {
            comp.a = genes[i];
            if self.free_frequencies {
                comp.omega += genes[2 * nc + i];
            }
            comp.delta = genes[nc + i] - comp.omega * t_ref;
        }
        field
    }

    /// Genes reproducing the template itself (clamped into the bounds), so a
    /// known field can enter the initial population unchanged.
    pub fn template_genes(&self) -> Vec<f64> {
        let nc = self.template.components.len();
        let t_ref = match self.template.envelope {
            Envelope::Gaussian { center, .. } => center,
            _ => 0.5 * self.template.t_final,
        };
        let mut genes: Vec<f64> = self.template.components.iter().map(|c| c.a).collect();
        genes.extend(self.template.components.iter().map(|c| (c.delta + c.omega * t_ref).rem_euclid(TAU)));
        if self.free_frequencies {
            genes.extend(std::iter::repeat_n(0.0, nc));
        }
        if self.t_final_range.is_some() {
            genes.push(self.template.t_final);
        }
        genes.iter().enumerate().map(|(g, &v)| v.clamp(self.lower[g], self.upper[g])).collect()
    }

    fn random_genes<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..hi) } else { lo }).collect()
    }
}

/// Everything a run produces. The best-fidelity series is indexed by
/// generation, with entry 0 describing the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub target: FidelityKind,
    pub config: GAConfig,
    pub best_fidelity: Vec<f64>,
    pub mean_fidelity: Vec<f64>,
    pub best_genes: Vec<f64>,
    pub best_field: ControlField,
    /// Fidelity of the best field at the search resolution.
    pub search_fidelity: f64,
    /// Fidelity of the best field re-propagated at the default resolution.
    pub final_fidelity: f64,
    pub final_unitary: MatrixJson,
    pub unitarity_defect: f64,
    pub num_steps: usize,
    pub total_propagations: u64,
    pub clamp_count: u64,
}

impl OptimizationRecord {
    pub fn final_unitary(&self) -> Result<CMatrix> {
        self.final_unitary.to_matrix()
    }
}

/// Independent random stream for individual `index` of generation `gen`.
fn individual_rng(seed: u64, gen: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((gen as u64) << 32) | index as u64);
    rng
}

struct Scored {
    genes: Vec<f64>,
    fitness: f64,
    clamped: bool,
}

fn score(
    system: &ModelSystem,
    layout: &GeneLayout,
    functional: &FidelityFunctional,
    steps_per_period: f64,
    genes: Vec<f64>,
) -> Result<Scored> {
    let field = layout.to_field(&genes);
    let dt = TAU / fastest_frequency(system, &field) / steps_per_period;
    let u = propagate(system, &field, dt)?.u_final;
    let e = functional.evaluate(&u)?;
    Ok(Scored { genes, fitness: e.value, clamped: e.clamped })
}

fn select<R: Rng + ?Sized>(ranked: &[usize], fitness: &[f64], selection: Selection, rng: &mut R) -> usize {
    let n = ranked.len();
    match selection {
        Selection::Tournament => {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if fitness[b] > fitness[a] {
                b
            } else {
                a
            }
        }
        Selection::Rank => {
            // Weight n - r for rank r (0 = best); total n (n + 1) / 2.
            let total = n * (n + 1) / 2;
            let mut ticket = rng.random_range(0..total);
            for (r, &idx) in ranked.iter().enumerate() {
                let w = n - r;
                if ticket < w {
                    return idx;
                }
                ticket -= w;
            }
            ranked[n - 1]
        }
    }
}

/// Run the GA. The result depends only on the inputs: every individual draws
/// from its own `(seed, generation, index)` stream and reductions run in
/// index order, so thread count and scheduling do not matter. Individual 0
/// of the initial population is the template itself.
pub fn ga_optimize(
    system: &ModelSystem,
    template: &ControlField,
    functional: &FidelityFunctional,
    config: &GAConfig,
) -> Result<OptimizationRecord> {
    config.validate()?;
    system.validate()?;
    let layout = GeneLayout::new(template, config)?;
    if template.components.len() != system.allowed_transitions().len() {
        return Err(Error::InvalidConfig(format!(
            "field template has {} components but the model has {} allowed transitions",
            template.components.len(),
            system.allowed_transitions().len()
        )));
    }
    let pop = config.population_size;
    let steps = config.search_steps_per_period;

    let mut population: Vec<Scored> = (0..pop)
        .into_par_iter()
        .map(|i| {
            let genes =
                if i == 0 { layout.template_genes() } else { layout.random_genes(&mut individual_rng(config.seed, 0, i)) };
            score(system, &layout, functional, steps, genes)
        })
        .collect::<Result<_>>()?;
    let mut propagations = pop as u64;
    let mut clamps = population.iter().filter(|s| s.clamped).count() as u64;
    let mut best_series = Vec::with_capacity(config.generations + 1);
    let mut mean_series = Vec::with_capacity(config.generations + 1);

    let rank = |pop: &[Scored]| {
        let mut idx: Vec<usize> = (0..pop.len()).collect();
        idx.sort_by(|&a, &b| pop[b].fitness.total_cmp(&pop[a].fitness).then(a.cmp(&b)));
        idx
    };
    let summarize = |pop: &[Scored], ranked: &[usize], best: &mut Vec<f64>, mean: &mut Vec<f64>| {
        best.push(pop[ranked[0]].fitness);
        mean.push(pop.iter().map(|s| s.fitness).sum::<f64>() / pop.len() as f64);
    };

    let mut ranked = rank(&population);
    summarize(&population, &ranked, &mut best_series, &mut mean_series);

    let n_genes = layout.len();
    for gen in 1..=config.generations {
        let fitness: Vec<f64> = population.iter().map(|s| s.fitness).collect();
        let sigma_factor = config.mutation_scale * config.mutation_decay.powf((gen - 1) as f64 / config.generations as f64);
        let parents = &population;
        let children: Vec<Scored> = (config.elite_count..pop)
            .into_par_iter()
            .map(|i| {
                let mut rng = individual_rng(config.seed, gen, i);
                let p1 = select(&ranked, &fitness, config.selection, &mut rng);
                let p2 = select(&ranked, &fitness, config.selection, &mut rng);
                let mut child = parents[p1].genes.clone();
                if rng.random::<f64>() < config.crossover_rate {
                    for (g, gene) in child.iter_mut().enumerate() {
                        if rng.random::<bool>() {
                            *gene = parents[p2].genes[g];
                        }
                    }
                }
                for (g, gene) in child.iter_mut().enumerate().take(n_genes) {
                    if rng.random::<f64>() < config.mutation_rate {
                        let (lo, hi) = (layout.lower[g], layout.upper[g]);
                        let z: f64 = rng.sample(StandardNormal);
                        let moved = *gene + sigma_factor * (hi - lo) * z;
                        *gene = if layout.is_phase(g) { moved.rem_euclid(TAU) } else { moved.clamp(lo, hi) };
                    }
                }
                score(system, &layout, functional, steps, child)
            })
            .collect::<Result<_>>()?;
        propagations += children.len() as u64;
        clamps += children.iter().filter(|s| s.clamped).count() as u64;

        let mut next: Vec<Scored> = ranked[..config.elite_count]
            .iter()
            .map(|&i| Scored { genes: population[i].genes.clone(), fitness: population[i].fitness, clamped: false })
            .collect();
        next.extend(children);
        population = next;
        ranked = rank(&population);
        summarize(&population, &ranked, &mut best_series, &mut mean_series);
    }

    let best = &population[ranked[0]];
    let best_field = layout.to_field(&best.genes);
    let final_run = propagate(system, &best_field, default_dt(system, &best_field))?;
    propagations += 1;
    let final_eval = functional.evaluate(&final_run.u_final)?;
    clamps += final_eval.clamped as u64;

    Ok(OptimizationRecord {
        target: functional.kind(),
        config: config.clone(),
        best_fidelity: best_series,
        mean_fidelity: mean_series,
        best_genes: best.genes.clone(),
        best_field,
        search_fidelity: best.fitness,
        final_fidelity: final_eval.value,
        final_unitary: MatrixJson::from(&final_run.u_final),
        unitarity_defect: final_run.unitarity_defect,
        num_steps: final_run.num_steps,
        total_propagations: propagations,
        clamp_count: clamps,
    })
}
