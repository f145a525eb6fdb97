//! Observables: basis probabilities, success against the brute-force
//! oracle, degenerate-ground-state sampling, and benchmark histograms.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve, initial_state, EvolutionResult, EvolveOptions, InitialState, StateVector};
use crate::hamiltonians::{bqa_hamiltonian, problem_diagonal, qa_hamiltonian, TimeDependentHamiltonian};
use crate::instances::{GroundStateSolution, ProblemInstance};
use crate::schedules::{BqaSchedule, QaSchedule};
use crate::spinops::LocalKind;

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// `|⟨k|ψ⟩|²` per basis configuration.
pub fn basis_probabilities(psi: &StateVector) -> Vec<f64> {
    psi.probabilities()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub success_probability: f64,
    /// Oracle configurations in oracle order, with their probabilities.
    pub per_configuration: Vec<(Vec<i8>, f64)>,
    /// Weight on basis states with at least one `m = 0` site (qutrits only).
    pub zero_leakage: f64,
}

/// Success of a finished run: the summed probability of every oracle
/// configuration in the final state.
pub fn success_probability(
    result: &EvolutionResult,
    oracle: &GroundStateSolution,
) -> Result<SuccessReport> {
    success_report(&result.final_state, oracle)
}

pub fn success_report(state: &StateVector, oracle: &GroundStateSolution) -> Result<SuccessReport> {
    let basis = state.basis();
    if oracle.n() != basis.sites() {
        return Err(Error::invalid(format!(
            "oracle has {} spins, state has {} sites",
            oracle.n(),
            basis.sites()
        )));
    }
    let probs = state.probabilities();
    let per_configuration = oracle
        .configurations
        .iter()
        .map(|c| Ok((c.clone(), probs[basis.index_of_spins(c)?])))
        .collect::<Result<Vec<_>>>()?;
    let zero_leakage = match basis.kind() {
        LocalKind::Qubit => 0.0,
        LocalKind::Qutrit => probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| (0..basis.sites()).any(|s| basis.local_index(*idx, s) == 1))
            .map(|(_, p)| p)
            .sum(),
    };
    Ok(SuccessReport {
        success_probability: per_configuration.iter().map(|(_, p)| p).sum(),
        per_configuration,
        zero_leakage,
    })
}

/// Ground configurations related by a global flip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipClass {
    /// The member whose first spin is `+1` comes first.
    pub configurations: Vec<Vec<i8>>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    pub per_configuration: Vec<(Vec<i8>, f64)>,
    pub flip_classes: Vec<FlipClass>,
}

/// Probability of each degenerate ground configuration, and the same
/// aggregated over global-flip pairs.
pub fn sampling_distribution(
    state: &StateVector,
    oracle: &GroundStateSolution,
) -> Result<SamplingDistribution> {
    if oracle.degeneracy() < 2 {
        return Err(Error::invalid(format!(
            "sampling needs a degenerate ground state, oracle degeneracy is {}",
            oracle.degeneracy()
        )));
    }
    let report = success_report(state, oracle)?;
    let mut flip_classes: Vec<FlipClass> = Vec::new();
    for (config, p) in &report.per_configuration {
        let flipped: Vec<i8> = config.iter().map(|s| -s).collect();
        if let Some(class) = flip_classes
            .iter_mut()
            .find(|c| c.configurations.contains(&flipped))
        {
            class.configurations.push(config.clone());
            class.configurations.sort_by(|a, b| b.cmp(a));
            class.probability += p;
        } else {
            flip_classes.push(FlipClass {
                configurations: vec![config.clone()],
                probability: *p,
            });
        }
    }
    Ok(SamplingDistribution {
        per_configuration: report.per_configuration,
        flip_classes,
    })
}

/// Counts over `[0, 1]` in bins of fixed width; the last bin is closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bin_width: f64,
    counts: Vec<usize>,
    sample_count: usize,
}

impl Histogram {
    pub fn new(bin_width: f64) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0 && bin_width <= 1.0) {
            return Err(Error::invalid(format!("bin width {bin_width} not in (0, 1]")));
        }
        let bins = (1.0 / bin_width - 1e-9).ceil() as usize;
        Ok(Histogram {
            bin_width,
            counts: vec![0; bins],
            sample_count: 0,
        })
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>, bin_width: f64) -> Result<Self> {
        let mut h = Self::new(bin_width)?;
        for v in values {
            h.add(v)?;
        }
        Ok(h)
    }

    /// Values within `1e-8` outside `[0, 1]` are clamped; others rejected.
    pub fn add(&mut self, value: f64) -> Result<()> {
        if !(value.is_finite() && (-1e-8..=1.0 + 1e-8).contains(&value)) {
            return Err(Error::invalid(format!("histogram value {value} outside [0, 1]")));
        }
        let v = value.clamp(0.0, 1.0);
        // the small offset keeps values on a bin edge in the upper bin
        let bin = ((v / self.bin_width + 1e-9).floor() as usize).min(self.counts.len() - 1);
        self.counts[bin] += 1;
        self.sample_count += 1;
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// `(lower, upper)` for every bin.
    pub fn bin_edges(&self) -> Vec<(f64, f64)> {
        (0..self.counts.len())
            .map(|k| {
                (
                    k as f64 * self.bin_width,
                    ((k + 1) as f64 * self.bin_width).min(1.0),
                )
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "BQA")]
    Bqa,
    #[serde(rename = "QA")]
    Qa,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Bqa => "BQA",
            Method::Qa => "QA",
        }
    }
}

/// An annealing protocol with its schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    Bqa(BqaSchedule),
    Qa(QaSchedule),
}

impl Protocol {
    pub fn method(&self) -> Method {
        match self {
            Protocol::Bqa(_) => Method::Bqa,
            Protocol::Qa(_) => Method::Qa,
        }
    }

    pub fn t_final(&self) -> f64 {
        match self {
            Protocol::Bqa(s) => s.t_final(),
            Protocol::Qa(s) => s.t_final(),
        }
    }

    pub fn with_t_final(&self, t_final: f64) -> Result<Self> {
        Ok(match self {
            Protocol::Bqa(s) => Protocol::Bqa(s.with_t_final(t_final)?),
            Protocol::Qa(s) => Protocol::Qa(s.with_t_final(t_final)?),
        })
    }

    pub fn hamiltonian(&self, instance: &ProblemInstance) -> Result<TimeDependentHamiltonian> {
        match self {
            Protocol::Bqa(s) => bqa_hamiltonian(instance, s),
            Protocol::Qa(s) => qa_hamiltonian(instance, s),
        }
    }
}

/// Build the Hamiltonian, prepare the initial state and evolve to `t_f`.
pub fn anneal(
    instance: &ProblemInstance,
    protocol: &Protocol,
    initial: InitialState,
    options: &EvolveOptions,
) -> Result<EvolutionResult> {
    let h = protocol.hamiltonian(instance)?;
    let psi0 = initial_state(&h, initial)?;
    evolve(&h, &psi0, h.t_final(), options)
}

/// One line of the benchmark JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub seed: u64,
    pub method: Method,
    pub success: f64,
    pub zero_leakage: f64,
    /// `⟨H_p⟩` in the final state.
    pub energy: f64,
    /// `false` also when the classification is indeterminate.
    pub nontrivial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFailure {
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkOutcome {
    pub histogram: Histogram,
    /// In input order.
    pub records: Vec<BenchmarkRecord>,
    pub failures: Vec<BenchmarkFailure>,
    /// Final-state norm drift per successful run, in record order.
    pub norm_drifts: Vec<f64>,
}

impl BenchmarkOutcome {
    pub fn mean_success(&self) -> f64 {
        if self.records.is_empty() {
            return f64::NAN;
        }
        self.records.iter().map(|r| r.success).sum::<f64>() / self.records.len() as f64
    }
}

/// Anneal every `(seed, instance)` pair in parallel. A failed run is
/// recorded and skipped.
pub fn benchmark(
    instances: &[(u64, ProblemInstance)],
    protocol: &Protocol,
    initial: InitialState,
    options: &EvolveOptions,
    bin_width: f64,
) -> Result<BenchmarkOutcome> {
    if let Some((_, first)) = instances.first() {
        if instances.iter().any(|(_, i)| i.n() != first.n()) {
            return Err(Error::invalid("benchmark instances differ in size"));
        }
    }
    let mut histogram = Histogram::new(bin_width)?;
    let runs: Vec<(u64, Result<(BenchmarkRecord, f64)>)> = instances
        .par_iter()
        .map(|(seed, inst)| (*seed, run_one(*seed, inst, protocol, initial, options)))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut norm_drifts = Vec::new();
    for (seed, run) in runs {
        match run {
            Ok((record, drift)) => {
                histogram.add(record.success)?;
                records.push(record);
                norm_drifts.push(drift);
            }
            Err(e) => failures.push(BenchmarkFailure {
                seed,
                message: e.to_string(),
            }),
        }
    }
    Ok(BenchmarkOutcome {
        histogram,
        records,
        failures,
        norm_drifts,
    })
}

fn run_one(
    seed: u64,
    instance: &ProblemInstance,
    protocol: &Protocol,
    initial: InitialState,
    options: &EvolveOptions,
) -> Result<(BenchmarkRecord, f64)> {
    let oracle = instance.brute_force_ground_states()?;
    let result = anneal(instance, protocol, initial, options)?;
    let report = success_probability(&result, &oracle)?;
    let diag = problem_diagonal(instance, result.final_state.basis())?;
    let energy = result
        .final_state
        .probabilities()
        .iter()
        .zip(&diag)
        .map(|(p, e)| p * e)
        .sum();
    let record = BenchmarkRecord {
        seed,
        method: protocol.method(),
        success: report.success_probability,
        zero_leakage: report.zero_leakage,
        energy,
        nontrivial: instance.is_nontrivial().unwrap_or(false),
    };
    Ok((record, result.norm_drift))
}

pub fn write_records<W: Write>(records: &[BenchmarkRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(input: R, origin: &str) -> Result<Vec<BenchmarkRecord>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            context: format!("{origin}:{}", k + 1),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
