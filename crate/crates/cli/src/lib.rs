//! Experiment runner behind the `bqa` binary.
//!
//! Every subcommand writes CSV preceded by one `#`-prefixed JSON header
//! line holding the tool version and the full subcommand configuration, so
//! `bqa replay` can regenerate the file. Single-qutrit commands work in
//! units of `A0`; interacting commands in units of `J`.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use bqa::analysis::{
    anneal, benchmark, sampling_distribution, success_report, write_records, Method, Protocol,
};
use bqa::evolve::{
    evolve, initial_state, instantaneous_spectrum, EvolveOptions, InitialState, StateVector,
};
use bqa::hamiltonians::{bqa_hamiltonian, single_qutrit_field_hamiltonian};
use bqa::instances::{five_spin_placeholder, ProblemInstance};
use bqa::meanfield::{phase_diagram, protocol_overlay};
use bqa::nested::{nest_hamiltonian, nested_initial_state, NestedMapping};
use bqa::schedules::{BqaSchedule, DriverProfile, QaSchedule, DEFAULT_SIGMA2};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "bqa", version, about = "Bifurcation-based quantum annealing experiments")]
pub struct Cli {
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Instantaneous levels of one qutrit vs t/t_f.
    Levels(LevelsArgs),
    /// One qutrit: P(m) vs t, or final P(m) vs t_f.
    Single(SingleArgs),
    /// One qutrit in a field: final P(m) vs h.
    FieldSweep(FieldSweepArgs),
    /// Ferromagnetic ring: ground-state probability for BQA and QA.
    Ferro(FerroArgs),
    /// Probabilities of each degenerate ground configuration.
    Sampling(SamplingArgs),
    /// Success histograms over seeded random instances.
    RandomBench(RandomBenchArgs),
    /// Mean-field phase diagram.
    Phase(PhaseArgs),
    /// Ferromagnetic ring success vs A0 for both driver shapes.
    A0Sweep(A0SweepArgs),
    /// Qutrit vs nested two-qubit evolution.
    NestedCheck(NestedCheckArgs),
    /// Re-run the configuration stored in an output file's header.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverShape {
    Gauss,
    Const,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Bqa,
    Qa,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartArg {
    /// Ground state of H(0).
    Ground,
    /// |0…0⟩ for qutrits, uniform superposition for qubits.
    Ideal,
}

impl From<StartArg> for InitialState {
    fn from(s: StartArg) -> Self {
        match s {
            StartArg::Ground => InitialState::Ground,
            StartArg::Ideal => InitialState::Ideal,
        }
    }
}

/// Bifurcation protocol parameters.
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqaParams {
    /// Driver amplitude A0.
    #[arg(long)]
    pub a0: Option<f64>,
    /// B0 / A0.
    #[arg(long)]
    pub b0_ratio: Option<f64>,
    /// Width of the Gaussian driver in units of t_f/2, squared.
    #[arg(long, default_value_t = DEFAULT_SIGMA2)]
    pub sigma2: f64,
    #[arg(long, value_enum, default_value_t = DriverShape::Gauss)]
    pub protocol: DriverShape,
}

impl BqaParams {
    fn schedule(&self, default_a0: f64, default_ratio: f64, t_final: f64) -> bqa::Result<BqaSchedule> {
        let a0 = self.a0.unwrap_or(default_a0);
        let b0 = a0 * self.b0_ratio.unwrap_or(default_ratio);
        let driver = match self.protocol {
            DriverShape::Gauss => DriverProfile::Gaussian {
                a0,
                sigma2: self.sigma2,
            },
            DriverShape::Const => DriverProfile::Constant { a0 },
        };
        BqaSchedule::new(driver, b0, t_final)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Integrator error per unit time.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = StartArg::Ground)]
    pub start: StartArg,
    /// Integrator step budget per run.
    #[arg(long, default_value_t = 20_000_000)]
    pub max_steps: usize,
}

impl Numerics {
    fn options(&self, sample_count: usize) -> EvolveOptions {
        EvolveOptions {
            tol: self.tol,
            sample_count,
            max_steps: self.max_steps,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelsArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    /// Longitudinal field h.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,
    /// Number of t/t_f points.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 100.0)]
    pub tf: f64,
    /// Sample points in time (time-series mode).
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Annealing times to sweep; switches to final-state mode.
    #[arg(long, value_delimiter = ',')]
    pub tf_values: Vec<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSweepArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, default_value_t = 200.0)]
    pub tf: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub h_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub h_max: f64,
    #[arg(long, default_value_t = 41)]
    pub h_count: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerroArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    #[command(flatten)]
    pub numerics: Numerics,
    /// Ring size.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Uniform field h_i / J.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub h: f64,
    /// Transverse field Γ / J of the QA run.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 200.0)]
    pub tf: f64,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    #[arg(long, value_delimiter = ',')]
    pub tf_values: Vec<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    #[command(flatten)]
    pub numerics: Numerics,
    /// Instance JSON; the built-in unverified five-spin placeholder if absent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Run only one method (both by default).
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 300.0)]
    pub tf: f64,
    #[arg(long, value_delimiter = ',')]
    pub tf_values: Vec<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBenchArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Half-open seed range `a..b`.
    #[arg(long, default_value = "0..1600")]
    pub seeds: String,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 300.0)]
    pub tf: f64,
    #[arg(long, default_value_t = bqa::analysis::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    /// Keep only instances whose ground state differs from sign(h).
    #[arg(long)]
    pub nontrivial_only: bool,
    /// Per-instance JSON-lines records.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseArgs {
    /// Protocol drawn as the overlay.
    #[command(flatten)]
    pub bqa: BqaParams,
    #[arg(long, default_value_t = 1.0)]
    pub jz: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub a_max: f64,
    #[arg(long, default_value_t = 41)]
    pub a_count: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub b_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub b_max: f64,
    #[arg(long, default_value_t = 61)]
    pub b_count: usize,
    /// CSV of refined boundary points.
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
    /// CSV of the protocol trajectory (t/t_f, A/Jz, B/Jz).
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    pub overlay_points: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A0SweepArgs {
    #[command(flatten)]
    pub numerics: Numerics,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3,0.5,0.75,1,1.5,2,3")]
    pub a0_values: Vec<f64>,
    /// B0 / J, held fixed while A0 varies.
    #[arg(long, default_value_t = 20.0)]
    pub b0: f64,
    #[arg(long, default_value_t = DEFAULT_SIGMA2)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = 200.0)]
    pub tf: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedCheckArgs {
    #[command(flatten)]
    pub bqa: BqaParams,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Seed of the random instance.
    #[arg(long, default_value_t = 6)]
    pub seed: u64,
    #[arg(long, default_value_t = 100.0)]
    pub tf: f64,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Output file whose header is re-run.
    #[arg(long)]
    pub from: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bqa::Error),
    #[error("{0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 ok, 1 invalid configuration, 2 integration failure, 3 capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(bqa::Error::Integration { .. })
            | CliError::Core(bqa::Error::MeanFieldNotConverged { .. }) => 2,
            CliError::Core(bqa::Error::Capacity { .. }) => 3,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Serialize, Deserialize)]
struct Header {
    tool: String,
    version: String,
    config: Command,
}

pub fn header_line(command: &Command) -> String {
    let h = Header {
        tool: "bqa".into(),
        version: VERSION.into(),
        config: command.clone(),
    };
    format!("# {}\n", serde_json::to_string(&h).expect("config serializes"))
}

/// Run a parsed command line, writing to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let text = render(&cli.command)?;
    match &cli.out {
        Some(path) => write_file(path, &text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Header plus CSV body for `command`.
pub fn render(command: &Command) -> Result<String> {
    if let Command::Replay(args) = command {
        return render(&read_header(&args.from)?);
    }
    let body = match command {
        Command::Levels(a) => levels(a)?,
        Command::Single(a) => single(a)?,
        Command::FieldSweep(a) => field_sweep(a)?,
        Command::Ferro(a) => ferro(a)?,
        Command::Sampling(a) => sampling(a)?,
        Command::RandomBench(a) => random_bench(a)?,
        Command::Phase(a) => phase(a)?,
        Command::A0Sweep(a) => a0_sweep(a)?,
        Command::NestedCheck(a) => nested_check(a)?,
        Command::Replay(_) => unreachable!("handled above"),
    };
    Ok(header_line(command) + &body)
}

/// The configuration stored in the first line of an output file.
pub fn read_header(path: &Path) -> Result<Command> {
    let file = fs::File::open(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut line = String::new();
    BufReader::new(file)
        .read_line(&mut line)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let json = line
        .strip_prefix("# ")
        .ok_or_else(|| config(format!("{}: first line is not a header", path.display())))?;
    let header: Header = serde_json::from_str(json.trim_end())
        .map_err(|e| config(format!("{}: bad header: {e}", path.display())))?;
    if header.version != VERSION {
        eprintln!(
            "warning: {} was written by version {}, replaying with {VERSION}",
            path.display(),
            header.version
        );
    }
    if matches!(header.config, Command::Replay(_)) {
        return Err(config("a replay header cannot point at another replay"));
    }
    Ok(header.config)
}

fn need_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(config(format!("need at least 2 samples, got {n}")));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(lo.is_finite() && hi.is_finite()) {
        return Err(config(format!("bad range {lo}..{hi} with {count} points")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect())
}

fn parse_seeds(text: &str) -> Result<std::ops::Range<u64>> {
    let bad = || config(format!("seed range must look like a..b, got {text:?}"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if b <= a {
        return Err(bad());
    }
    Ok(a..b)
}

fn levels(a: &LevelsArgs) -> Result<String> {
    need_samples(a.points)?;
    let s = a.bqa.schedule(1.0, 20.0, 1.0)?;
    let a0 = s.driver().a0();
    let h = single_qutrit_field_hamiltonian(a.h, &s)?;
    let mut out = String::from("t_over_tf,E0,E1,E2,gap\n");
    for frac in linspace(0.0, 1.0, a.points)? {
        let ev = instantaneous_spectrum(&h, frac)?;
        let _ = writeln!(
            out,
            "{frac},{},{},{},{}",
            ev[0] / a0,
            ev[1] / a0,
            ev[2] / a0,
            (ev[1] - ev[0]) / a0
        );
    }
    Ok(out)
}

fn single_run(
    params: &BqaParams,
    numerics: &Numerics,
    h: f64,
    tf: f64,
    samples: usize,
) -> Result<bqa::evolve::EvolutionResult> {
    let s = params.schedule(1.0, 20.0, tf)?;
    let inst = ProblemInstance::new(1, vec![], vec![h])?;
    Ok(anneal(
        &inst,
        &Protocol::Bqa(s),
        numerics.start.into(),
        &numerics.options(samples),
    )?)
}

fn single(a: &SingleArgs) -> Result<String> {
    if a.tf_values.is_empty() {
        need_samples(a.samples)?;
        let r = single_run(&a.bqa, &a.numerics, a.h, a.tf, a.samples)?;
        let mut out = String::from("t,P_plus,P_zero,P_minus\n");
        for s in &r.samples {
            let p = &s.probabilities;
            let _ = writeln!(out, "{},{},{},{}", s.t, p[0], p[1], p[2]);
        }
        Ok(out)
    } else {
        let rows = a
            .tf_values
            .par_iter()
            .map(|&tf| single_run(&a.bqa, &a.numerics, a.h, tf, 2).map(|r| (tf, r)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = String::from("tf,P_plus,P_zero,P_minus\n");
        for (tf, r) in rows {
            let p = r.final_state.probabilities();
            let _ = writeln!(out, "{tf},{},{},{}", p[0], p[1], p[2]);
        }
        Ok(out)
    }
}

fn field_sweep(a: &FieldSweepArgs) -> Result<String> {
    let hs = linspace(a.h_min, a.h_max, a.h_count)?;
    let rows = hs
        .par_iter()
        .map(|&h| single_run(&a.bqa, &a.numerics, h, a.tf, 2).map(|r| (h, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("h,P_plus,P_zero,P_minus\n");
    for (h, r) in rows {
        let p = r.final_state.probabilities();
        let _ = writeln!(out, "{h},{},{},{}", p[0], p[1], p[2]);
    }
    Ok(out)
}

/// Success probability at every sample of a run.
fn success_series(
    r: &bqa::evolve::EvolutionResult,
    oracle: &bqa::instances::GroundStateSolution,
) -> Result<Vec<(f64, f64)>> {
    r.samples
        .iter()
        .map(|s| {
            let st = StateVector::from_raw(*r.final_state.basis(), s.amplitudes.clone())?;
            Ok((s.t, success_report(&st, oracle)?.success_probability))
        })
        .collect()
}

fn ferro(a: &FerroArgs) -> Result<String> {
    let ring = ProblemInstance::ferromagnetic_ring(a.n, 1.0, a.h)?;
    let oracle = ring.brute_force_ground_states()?;
    let run = |tf: f64, samples: usize| -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
        let opts = a.numerics.options(samples);
        let b = Protocol::Bqa(a.bqa.schedule(2.0, 10.0, tf)?);
        let q = Protocol::Qa(QaSchedule::new(a.gamma, tf)?);
        let rb = anneal(&ring, &b, a.numerics.start.into(), &opts)?;
        let rq = anneal(&ring, &q, a.numerics.start.into(), &opts)?;
        Ok((success_series(&rb, &oracle)?, success_series(&rq, &oracle)?))
    };
    if a.tf_values.is_empty() {
        need_samples(a.samples)?;
        let (b, q) = run(a.tf, a.samples)?;
        let mut out = String::from("t,success_bqa,success_qa\n");
        for ((t, pb), (_, pq)) in b.iter().zip(&q) {
            let _ = writeln!(out, "{t},{pb},{pq}");
        }
        Ok(out)
    } else {
        let rows = a
            .tf_values
            .par_iter()
            .map(|&tf| run(tf, 2).map(|(b, q)| (tf, b[1].1, q[1].1)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = String::from("tf,success_bqa,success_qa\n");
        for (tf, pb, pq) in rows {
            let _ = writeln!(out, "{tf},{pb},{pq}");
        }
        Ok(out)
    }
}

fn methods(m: Option<MethodArg>) -> Vec<Method> {
    match m {
        Some(MethodArg::Bqa) => vec![Method::Bqa],
        Some(MethodArg::Qa) => vec![Method::Qa],
        None => vec![Method::Bqa, Method::Qa],
    }
}

fn protocol_for(
    method: Method,
    params: &BqaParams,
    gamma: f64,
    tf: f64,
) -> Result<Protocol> {
    Ok(match method {
        Method::Bqa => Protocol::Bqa(params.schedule(2.0, 10.0, tf)?),
        Method::Qa => Protocol::Qa(QaSchedule::new(gamma, tf)?),
    })
}

fn spins_label(config: &[i8]) -> String {
    config.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn sampling(a: &SamplingArgs) -> Result<String> {
    let inst = match &a.instance {
        Some(p) => ProblemInstance::load(p)?,
        None => five_spin_placeholder(),
    };
    let oracle = inst.brute_force_ground_states()?;
    if oracle.degeneracy() < 2 {
        return Err(config(format!(
            "sampling needs a degenerate ground state, instance has degeneracy {}",
            oracle.degeneracy()
        )));
    }
    let tfs = if a.tf_values.is_empty() {
        vec![a.tf]
    } else {
        a.tf_values.clone()
    };
    let jobs: Vec<(f64, Method)> = tfs
        .iter()
        .flat_map(|&tf| methods(a.method).into_iter().map(move |m| (tf, m)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(tf, m)| {
            let p = protocol_for(m, &a.bqa, a.gamma, tf)?;
            let r = anneal(&inst, &p, a.numerics.start.into(), &a.numerics.options(2))?;
            Ok((tf, m, sampling_distribution(&r.final_state, &oracle)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("tf,method,flip_class,configuration,probability,class_probability\n");
    for (tf, m, d) in results {
        for (k, class) in d.flip_classes.iter().enumerate() {
            for c in &class.configurations {
                let p = d
                    .per_configuration
                    .iter()
                    .find(|(x, _)| x == c)
                    .map(|x| x.1)
                    .unwrap_or(0.0);
                let _ = writeln!(
                    out,
                    "{tf},{},{k},{},{p},{}",
                    m.label(),
                    spins_label(c),
                    class.probability
                );
            }
        }
    }
    Ok(out)
}

fn random_bench(a: &RandomBenchArgs) -> Result<String> {
    let seeds = parse_seeds(&a.seeds)?;
    let mut instances = Vec::new();
    for seed in seeds {
        let inst = ProblemInstance::random_fully_connected(a.n, 1.0, seed)?;
        if a.nontrivial_only && !inst.is_nontrivial().unwrap_or(false) {
            continue;
        }
        instances.push((seed, inst));
    }
    let mut out = String::from("method,bin_lo,bin_hi,count\n");
    let mut all_records = Vec::new();
    for m in methods(a.method) {
        let p = protocol_for(m, &a.bqa, a.gamma, a.tf)?;
        let o = benchmark(
            &instances,
            &p,
            a.numerics.start.into(),
            &a.numerics.options(2),
            a.bin_width,
        )?;
        for f in &o.failures {
            eprintln!("{} seed {}: {}", m.label(), f.seed, f.message);
        }
        eprintln!(
            "{}: {} instances, mean success {:.6}, {} failures",
            m.label(),
            o.records.len(),
            o.mean_success(),
            o.failures.len()
        );
        for ((lo, hi), c) in o.histogram.bin_edges().iter().zip(o.histogram.counts()) {
            let _ = writeln!(out, "{},{lo},{hi},{c}", m.label());
        }
        all_records.extend(o.records);
    }
    if let Some(path) = &a.records {
        let mut buf = Vec::new();
        write_records(&all_records, &mut buf)?;
        fs::write(path, buf).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(out)
}

fn phase(a: &PhaseArgs) -> Result<String> {
    let a_grid = linspace(a.a_min, a.a_max, a.a_count)?;
    let b_grid = linspace(a.b_min, a.b_max, a.b_count)?;
    let d = phase_diagram(
        &a_grid.iter().map(|x| x * a.jz).collect::<Vec<_>>(),
        &b_grid.iter().map(|x| x * a.jz).collect::<Vec<_>>(),
        a.jz,
    )?;
    let mut out = String::from("A,B,m_s,order,energyDensity\n");
    for p in &d.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.a / a.jz,
            p.b / a.jz,
            p.m_s,
            p.order.label(),
            p.energy_density
        );
    }
    if let Some(path) = &a.boundaries {
        let mut b = String::from("A,B,axis,jump,order\n");
        for p in &d.boundaries {
            let _ = writeln!(
                b,
                "{},{},{:?},{},{:?}",
                p.a / a.jz,
                p.b / a.jz,
                p.axis,
                p.jump,
                p.order
            );
        }
        write_file(path, &b)?;
    }
    if let Some(path) = &a.overlay {
        need_samples(a.overlay_points)?;
        let s = a.bqa.schedule(2.0, 10.0, 1.0)?;
        let mut o = String::from("t_over_tf,A,B\n");
        for (f, x, y) in protocol_overlay(&s, a.jz, a.overlay_points)? {
            let _ = writeln!(o, "{f},{x},{y}");
        }
        write_file(path, &o)?;
    }
    Ok(out)
}

fn a0_sweep(a: &A0SweepArgs) -> Result<String> {
    let ring = ProblemInstance::ferromagnetic_ring(a.n, 1.0, a.h)?;
    let oracle = ring.brute_force_ground_states()?;
    let jobs: Vec<(f64, DriverShape)> = a
        .a0_values
        .iter()
        .flat_map(|&a0| [(a0, DriverShape::Gauss), (a0, DriverShape::Const)])
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(a0, shape)| {
            let driver = match shape {
                DriverShape::Gauss => DriverProfile::Gaussian {
                    a0,
                    sigma2: a.sigma2,
                },
                DriverShape::Const => DriverProfile::Constant { a0 },
            };
            let s = BqaSchedule::new(driver, a.b0, a.tf)?;
            let r = anneal(
                &ring,
                &Protocol::Bqa(s),
                a.numerics.start.into(),
                &a.numerics.options(2),
            )?;
            Ok(success_report(&r.final_state, &oracle)?.success_probability)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("a0,success_gauss,success_const\n");
    for (k, a0) in a.a0_values.iter().enumerate() {
        let _ = writeln!(out, "{a0},{},{}", results[2 * k], results[2 * k + 1]);
    }
    Ok(out)
}

fn nested_check(a: &NestedCheckArgs) -> Result<String> {
    need_samples(a.samples)?;
    let inst = ProblemInstance::random_fully_connected(a.n, 1.0, a.seed)?;
    let s = a.bqa.schedule(2.0, 10.0, a.tf)?;
    let opts = EvolveOptions {
        tol: a.tol,
        sample_count: a.samples,
        ..Default::default()
    };
    let hq = bqa_hamiltonian(&inst, &s)?;
    let q = evolve(&hq, &initial_state(&hq, InitialState::Ideal)?, a.tf, &opts)?;
    let n = evolve(&nest_hamiltonian(&inst, &s)?, &nested_initial_state(a.n)?, a.tf, &opts)?;
    let m = NestedMapping::new(a.n)?;
    let mut out = String::from("t,max_abs_dP,leakage\n");
    for (sq, sn) in q.samples.iter().zip(&n.samples) {
        let (proj, leak) = m.project_amplitudes(&sn.amplitudes);
        let dev = proj
            .iter()
            .zip(&sq.probabilities)
            .map(|(x, p)| (x.norm_sqr() - p).abs())
            .fold(0.0, f64::max);
        let _ = writeln!(out, "{},{dev},{leak}", sq.t);
    }
    Ok(out)
}
