use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use mleqc::decoherence::{
    crossover_temperature, dephasing_study, sweep_csv, temperature_grid, temperature_sweep, RandomStateSpec,
    SweepGates, SweepRow,
};
use mleqc::encoding::{ea_operators, operation_deviation, signature_of_logical, DEFAULT_EQUIV_TOL};
use mleqc::gates::{
    class_residual, cnot_class, hadamard_class, pauli_class, phase_class, single_level_gate, weak_identity_class,
    GateClass, PaddedTarget, PauliAxis,
};
use mleqc::io::{matrix_from_json, matrix_to_json};
use mleqc::linalg::{identity, is_unitary, pauli_x, pauli_z, random_unitary, CMatrix, UNITARY_TOL};
use mleqc::optimizer::{ga_optimize, FidelityFunctional, FidelityKind, OptimizationRecord};
use mleqc::space::{validate_density, DensityMatrix, EncodedSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{Manifest, RunConfig};
use crate::{CliError, Verdict};

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_manifest<T: Serialize>(dir: &Path, command: &str, config: &T) -> CliResult<()> {
    write_file(&dir.join("manifest.json"), &to_pretty(&Manifest::new(command, config)))
}

/// A gate read from disk: a bare matrix or an optimization record.
struct GateFile {
    matrix: CMatrix,
    target: Option<FidelityKind>,
}

fn read_gate(path: &Path) -> CliResult<GateFile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(rec) = serde_json::from_str::<OptimizationRecord>(&text) {
        return Ok(GateFile { matrix: rec.final_unitary()?, target: Some(rec.target) });
    }
    let matrix = matrix_from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(GateFile { matrix, target: None })
}

fn require_unitary(m: &CMatrix, what: &str) -> CliResult<()> {
    if !m.is_square() || !is_unitary(m, UNITARY_TOL) {
        return usage(format!("{what} is not a unitary matrix"));
    }
    Ok(())
}

/// `i`, `x`, `y`, `z`, `h`, `p:<phi>` (single qubit) or `cnot`; `i` also on
/// several qubits.
pub fn parse_class(spec: &str, n: usize, qubits: usize) -> CliResult<GateClass> {
    let single = |c: mleqc::Result<GateClass>| -> CliResult<GateClass> {
        if qubits != 1 {
            return usage(format!("class '{spec}' acts on one qubit, got --qubits {qubits}"));
        }
        Ok(c?)
    };
    match spec.to_ascii_lowercase().as_str() {
        "i" | "identity" => Ok(weak_identity_class(qubits, n)?),
        "x" => single(pauli_class(PauliAxis::X, n)),
        "y" => single(pauli_class(PauliAxis::Y, n)),
        "z" => single(pauli_class(PauliAxis::Z, n)),
        "h" | "hadamard" => single(hadamard_class(n)),
        "cnot" => {
            if qubits != 2 {
                return usage(format!("class 'cnot' acts on two qubits, got --qubits {qubits}"));
            }
            Ok(cnot_class(n)?)
        }
        s => match s.strip_prefix("p:") {
            Some(phi) => {
                let phi: f64 = phi.parse().map_err(|_| CliError::Usage(format!("bad phase in class '{spec}'")))?;
                single(phase_class(phi, n))
            }
            None => usage(format!("unknown class '{spec}' (expected i, x, y, z, h, p:<phi>, cnot)")),
        },
    }
}

fn mle_class_for(kind: FidelityKind, n: usize) -> CliResult<GateClass> {
    match kind {
        FidelityKind::MleX => Ok(pauli_class(PauliAxis::X, n)?),
        FidelityKind::MleZ => Ok(pauli_class(PauliAxis::Z, n)?),
        k => usage(format!("record target '{}' is not an MLE gate", k.name())),
    }
}

fn sle_target_for(kind: FidelityKind, n: usize) -> CliResult<CMatrix> {
    let xi = match kind {
        FidelityKind::SleX => pauli_x(),
        FidelityKind::SleZ => pauli_z(),
        k => return usage(format!("record target '{}' is not an SLE gate", k.name())),
    };
    Ok(single_level_gate(&xi, &identity(2 * n - 2), n)?)
}

fn qubit_encoding_dim(m: &CMatrix) -> CliResult<usize> {
    if m.nrows() < 2 || m.nrows() % 2 != 0 {
        return usage(format!("a single encoded qubit needs an even dimension, got {}", m.nrows()));
    }
    Ok(m.nrows() / 2)
}

// ---------------------------------------------------------------- optimize

#[derive(Args)]
pub struct OptimizeArgs {
    /// JSON run configuration; without it the built-in Na2 defaults apply.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mle-x, mle-z, sle-x or sle-z.
    #[arg(long)]
    target: Option<FidelityKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn optimize(a: OptimizeArgs) -> CliResult<Verdict> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    if let Some(t) = a.target {
        cfg.target = t;
    }
    if let Some(s) = a.seed {
        cfg.set_seed(s);
    }
    if let Some(g) = a.generations {
        cfg.ga.generations = g;
    }
    if let Some(p) = a.population {
        cfg.ga.population_size = p;
    }
    if let Some(o) = a.out {
        cfg.output.dir = o;
    }
    cfg.ga.validate()?;
    let system = cfg.model.build()?;
    let template = cfg.field.template(&system)?;
    let functional = FidelityFunctional::new(cfg.target)?;
    let record = ga_optimize(&system, &template, &functional, &cfg.ga)?;

    let dir = cfg.output.dir.clone();
    write_file(&dir.join("record.json"), &to_pretty(&record))?;
    write_file(&dir.join("field.json"), &to_pretty(&record.best_field))?;
    write_manifest(&dir, "optimize", &cfg)?;
    println!(
        "{}: final fidelity {:.6} (search {:.6}), unitarity defect {:.2e}, {} propagations",
        cfg.target.name(),
        record.final_fidelity,
        record.search_fidelity,
        record.unitarity_defect,
        record.total_propagations
    );
    Ok(Verdict::Yes)
}

// ---------------------------------------------------------------- evaluate

#[derive(Args)]
pub struct EvaluateArgs {
    /// Matrix JSON or optimization record.
    gate: PathBuf,
    /// mle-x, mle-z, sle-x, sle-z, generic-norm or padded.
    #[arg(long)]
    target: FidelityKind,
    /// Target matrix for generic-norm.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Gate class for padded.
    #[arg(long)]
    class: Option<String>,
    /// Encoding dimension for padded.
    #[arg(long)]
    n: Option<usize>,
    /// Extra levels for padded.
    #[arg(long, default_value_t = 0)]
    pad: usize,
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<Verdict> {
    let gate = read_gate(&a.gate)?;
    let functional = match a.target {
        FidelityKind::GenericNorm => {
            let Some(r) = &a.reference else { return usage("generic-norm needs --reference") };
            FidelityFunctional::generic_norm(read_gate(r)?.matrix)
        }
        FidelityKind::Padded => {
            let (Some(c), Some(n)) = (&a.class, a.n) else { return usage("padded needs --class and --n") };
            FidelityFunctional::padded(PaddedTarget::new(parse_class(c, n, 1)?, a.pad))
        }
        k => FidelityFunctional::new(k)?,
    };
    let e = functional.evaluate(&gate.matrix)?;
    println!(
        "{}",
        serde_json::to_string(&json!({
            "target": a.target.name(),
            "fidelity": e.value,
            "raw": e.raw,
            "clamped": e.clamped,
        }))
        .expect("serializable")
    );
    Ok(Verdict::Yes)
}

// ---------------------------------------------------------------- equiv

#[derive(Args)]
pub struct EquivArgs {
    file1: PathBuf,
    file2: PathBuf,
    /// Encoding dimension per qubit.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    qubits: usize,
    #[arg(long, default_value_t = DEFAULT_EQUIV_TOL)]
    tol: f64,
    /// Random probes on top of the deterministic probe set.
    #[arg(long, default_value_t = 8)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn equiv(a: EquivArgs) -> CliResult<Verdict> {
    let space = EncodedSpace::new(a.qubits, a.n)?;
    let ops = ea_operators(space);
    let m1 = read_gate(&a.file1)?.matrix;
    let m2 = read_gate(&a.file2)?.matrix;
    space.check_matrix(&m1)?;
    space.check_matrix(&m2)?;
    let unitary = |m: &CMatrix| is_unitary(m, UNITARY_TOL);
    let (kind, deviation, residual) = if unitary(&m1) && unitary(&m2) {
        let dev = operation_deviation(&m1, &m2, &ops, a.probes, a.seed)?;
        // U2 U1^dag is a weak identity exactly when the two differ only on
        // the encoding factor.
        let (res, _) = class_residual(&(&m2 * m1.adjoint()), &weak_identity_class(a.qubits, a.n)?)?;
        ("operations", dev, Some(res))
    } else {
        for (m, f) in [(&m1, &a.file1), (&m2, &a.file2)] {
            validate_density(m)
                .map_err(|e| CliError::Usage(format!("{} is neither unitary nor a density matrix: {e}", f.display())))?;
        }
        let s1 = signature_of_logical(&DensityMatrix::new(space, m1)?.logical_density(), &ops);
        let s2 = signature_of_logical(&DensityMatrix::new(space, m2)?.logical_density(), &ops);
        ("states", s1.max_deviation(&s2), None)
    };
    let equivalent = deviation <= a.tol;
    println!(
        "{}",
        serde_json::to_string(&json!({
            "compared": kind,
            "equivalent": equivalent,
            "max_deviation": deviation,
            "tolerance": a.tol,
            "weak_identity_residual": residual,
        }))
        .expect("serializable")
    );
    Ok(if equivalent { Verdict::Yes } else { Verdict::No })
}

// ---------------------------------------------------------------- gate

#[derive(Subcommand)]
pub enum GateAction {
    /// Draw a random class member.
    Sample {
        #[arg(long)]
        class: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the matrix here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test class membership. Exit 0 if a member, 1 if not.
    Member {
        file: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        qubits: usize,
        #[arg(long, default_value_t = mleqc::gates::DEFAULT_MEMBERSHIP_TOL)]
        tol: f64,
    },
}

pub fn gate(action: GateAction) -> CliResult<Verdict> {
    match action {
        GateAction::Sample { class, n, qubits, seed, out } => {
            let cls = parse_class(&class, n, qubits)?;
            let json = matrix_to_json(&cls.sample(seed)) + "\n";
            match out {
                Some(p) => write_file(&p, &json)?,
                None => print!("{json}"),
            }
            Ok(Verdict::Yes)
        }
        GateAction::Member { file, class, n, qubits, tol } => {
            let cls = parse_class(&class, n, qubits)?;
            let u = read_gate(&file)?.matrix;
            cls.space().check_matrix(&u)?;
            let (residual, _) = class_residual(&u, &cls)?;
            let member = residual <= tol;
            println!(
                "{}",
                serde_json::to_string(&json!({"member": member, "residual": residual, "tolerance": tol}))
                    .expect("serializable")
            );
            Ok(if member { Verdict::Yes } else { Verdict::No })
        }
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use exact class members instead of optimized gates.
    #[arg(long, conflicts_with = "gates")]
    exact: bool,
    /// MLE and SLE gate files (records or matrices), comma separated.
    #[arg(long, value_delimiter = ',')]
    gates: Vec<PathBuf>,
    /// MLE class when the MLE gate file is a bare matrix.
    #[arg(long, default_value = "x")]
    mle_class: String,
    /// SLE target axis (x or z) when the SLE gate file is a bare matrix.
    #[arg(long, default_value = "x")]
    sle_axis: String,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for the exact gates' encoding factors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for sweep.csv, sweep.json and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SweepReport {
    mode: &'static str,
    crossover_kelvin: Option<f64>,
    rows: Vec<SweepRow>,
}

pub fn sweep(a: SweepArgs) -> CliResult<Verdict> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    if let Some(t) = a.t_min {
        cfg.sweep.t_min = t;
    }
    if let Some(t) = a.t_max {
        cfg.sweep.t_max = t;
    }
    if let Some(s) = a.steps {
        cfg.sweep.steps = s;
    }
    if let Some(o) = a.out {
        cfg.output.dir = o;
    }
    let n = 2;
    let (gates, mode) = if a.exact {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let cls = pauli_class(PauliAxis::X, n)?;
        let mle = cls.sample_with(&mut rng);
        let sle = single_level_gate(&pauli_x(), &random_unitary(2 * n - 2, &mut rng), n)?;
        (SweepGates { mle, mle_class: cls, sle, sle_target: sle_target_for(FidelityKind::SleX, n)? }, "exact")
    } else {
        if a.gates.len() != 2 {
            return usage("sweep needs --exact or --gates MLE_FILE,SLE_FILE");
        }
        let mle = read_gate(&a.gates[0])?;
        let sle = read_gate(&a.gates[1])?;
        require_unitary(&mle.matrix, "MLE gate")?;
        require_unitary(&sle.matrix, "SLE gate")?;
        let mle_n = qubit_encoding_dim(&mle.matrix)?;
        let sle_n = qubit_encoding_dim(&sle.matrix)?;
        let mle_class = match mle.target {
            Some(k) => mle_class_for(k, mle_n)?,
            None => parse_class(&a.mle_class, mle_n, 1)?,
        };
        let sle_kind = match (sle.target, a.sle_axis.as_str()) {
            (Some(k), _) => k,
            (None, "x") => FidelityKind::SleX,
            (None, "z") => FidelityKind::SleZ,
            (None, other) => return usage(format!("--sle-axis must be x or z, got '{other}'")),
        };
        let sle_target = sle_target_for(sle_kind, sle_n)?;
        (SweepGates { mle: mle.matrix, mle_class, sle: sle.matrix, sle_target }, "gates")
    };
    let temps = temperature_grid(cfg.sweep.t_min, cfg.sweep.t_max, cfg.sweep.steps)?;
    let rows = temperature_sweep(&gates, &temps, cfg.sweep.e_v, cfg.sweep.boltzmann_constant)?;
    // Exact MLE gates have zero error at every temperature, so there is no
    // crossover to report.
    let crossover = if a.exact { None } else { crossover_temperature(&rows) };

    let dir = cfg.output.dir.clone();
    write_file(&dir.join("sweep.csv"), &sweep_csv(&rows))?;
    write_file(&dir.join("sweep.json"), &to_pretty(&SweepReport { mode, crossover_kelvin: crossover, rows }))?;
    write_manifest(&dir, "sweep", &json!({ "mode": mode, "gates": a.gates, "seed": a.seed, "run": cfg }))?;
    match crossover {
        Some(t) => println!("crossover temperature: {t:.3} K"),
        None => println!("crossover temperature: none"),
    }
    Ok(Verdict::Yes)
}

// ---------------------------------------------------------------- dephase

#[derive(Args)]
pub struct DephaseArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// MLE gate file (record or matrix).
    #[arg(long, conflicts_with = "exact")]
    gate: Option<PathBuf>,
    /// Use an exact class member.
    #[arg(long)]
    exact: bool,
    /// Gate class; taken from the record when omitted.
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for dephase.json and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn dephase(a: DephaseArgs) -> CliResult<Verdict> {
    let mut cfg = RunConfig::load(a.config.as_deref())?;
    if let Some(n) = a.samples {
        cfg.dephase.samples = n;
    }
    if let Some(s) = a.seed {
        cfg.dephase.seed = s;
    }
    if let Some(o) = a.out {
        cfg.output.dir = o;
    }
    if cfg.dephase.samples == 0 {
        return usage("dephase needs at least one sample");
    }
    let n = 2;
    let (u, cls) = match (&a.gate, a.exact) {
        (Some(p), _) => {
            let g = read_gate(p)?;
            require_unitary(&g.matrix, "gate")?;
            let cls = match (&a.class, g.target) {
                (Some(c), _) => parse_class(c, qubit_encoding_dim(&g.matrix)?, 1)?,
                (None, Some(k)) => mle_class_for(k, qubit_encoding_dim(&g.matrix)?)?,
                (None, None) => return usage("a bare matrix needs --class"),
            };
            (g.matrix, cls)
        }
        (None, true) => {
            let cls = parse_class(a.class.as_deref().unwrap_or("x"), n, 1)?;
            (cls.sample(cfg.dephase.seed), cls)
        }
        (None, false) => return usage("dephase needs --gate FILE or --exact"),
    };
    let summary = dephasing_study(&u, &cls, &RandomStateSpec { seed: cfg.dephase.seed }, cfg.dephase.samples)?;
    let dir = cfg.output.dir.clone();
    write_file(&dir.join("dephase.json"), &to_pretty(&summary))?;
    write_manifest(&dir, "dephase", &json!({ "gate": a.gate, "exact": a.exact, "class": a.class, "run": cfg }))?;
    println!(
        "<eps> pure {:.6e} +- {:.1e}, dephased {:.6e} +- {:.1e} (N = {})",
        summary.mean_pure, summary.stderr_pure, summary.mean_dephased, summary.stderr_dephased, summary.num_samples
    );
    Ok(Verdict::Yes)
}
