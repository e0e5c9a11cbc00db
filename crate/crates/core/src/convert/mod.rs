//! SPN → tSPN conversion by alternating non-negative least squares.
//!
//! The SPN is evaluated on the training rows and on random states absent
//! from the data ("non-samples", whose probabilities are mostly near zero).
//! A non-negative tensor train with uniform interior rank is then fitted to
//! those values one core at a time. After each core update the core is
//! normalized towards the sweep direction, and slices that came out exactly
//! zero are deleted, which is the only way ranks change.

mod als;
mod init;
mod problem;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use init::bernoulli_mixture;
pub use als::{assemble_row, objective, sweep, update_core, AlsState, Direction};
pub use problem::{build_problem, generate_non_samples, ConversionProblem, SampleTag};

use crate::error::{Error, Result};
use crate::learn::Dataset;
use crate::spn::SpnGraph;
use crate::tt::{ParameterCount, TensorTrain};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YScaling {
    #[default]
    None,
    /// Divide targets by their maximum; the factor is folded into the
    /// result's scale.
    MaxNormalize,
}

/// Starting point of the sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// Every core entry i.i.d. uniform on `[0, 1)`. Products of many such
    /// cores are close to rank one, so on long trains the first sweep tends
    /// to zero out most slices.
    Uniform,
    /// A random mixture of fully factorized components (diagonal interior
    /// cores). See [`TensorTrain::random_mixture`].
    Mixture,
    /// A Bernoulli mixture fitted to the training rows by EM, in the same
    /// diagonal layout.
    #[default]
    Data,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConversionConfig {
    pub initial_rank: usize,
    /// Non-samples per training row.
    pub non_sample_ratio: f64,
    pub max_sweeps: usize,
    /// Stop once a full sweep lowers the objective by less than this
    /// fraction.
    pub rel_tol: f64,
    pub rng_seed: u64,
    pub y_scaling: YScaling,
    pub init: InitKind,
    /// Weight of the total-mass row; 0 leaves it out.
    pub mass_weight: f64,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        Self {
            initial_rank: 10,
            non_sample_ratio: 1.0,
            max_sweeps: 50,
            rel_tol: 1e-6,
            rng_seed: 0,
            y_scaling: YScaling::None,
            init: InitKind::Data,
            mass_weight: 1.0,
        }
    }
}

impl ConversionConfig {
    pub fn check(&self) -> Result<()> {
        if self.initial_rank == 0 {
            return Err(Error::InvalidConfig("initial_rank must be at least 1".into()));
        }
        if !(self.non_sample_ratio.is_finite() && self.non_sample_ratio >= 0.0) {
            return Err(Error::InvalidConfig("non_sample_ratio must be a finite value ≥ 0".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        if !(self.mass_weight.is_finite() && self.mass_weight >= 0.0) {
            return Err(Error::InvalidConfig("mass_weight must be a finite value ≥ 0".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        Ok(())
    }

    /// Problem sampling uses stream 0 of the seeded generator and core
    /// initialization stream 1, so changing one never shifts the other.
    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }

    pub(crate) fn init_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(1);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    /// Initial objective followed by one entry per core update.
    pub objective_history: Vec<f64>,
    /// `R_1..R_{d+1}` of the result.
    pub ranks: Vec<usize>,
    pub sweeps: usize,
    /// Whether the relative-decrease rule (rather than the sweep cap) ended
    /// the run.
    pub converged: bool,
    pub seconds: f64,
    pub spn_parameters: usize,
    pub tspn_parameters: ParameterCount,
    /// Distinct states in the system, non-samples included.
    pub distinct_states: usize,
    /// Least-squares rows with duplicates counted: data rows plus non-samples.
    pub rows: usize,
    pub non_samples: usize,
    pub y_scale: f64,
    pub nnls_iterations: usize,
    pub config: ConversionConfig,
}

impl ConversionReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&f64::NAN)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Fits a tensor train to `spn` on the rows of `data` plus non-samples and
/// returns it in normalized form around core 0.
pub fn convert(spn: &SpnGraph, data: &Dataset, cfg: &ConversionConfig) -> Result<(TensorTrain, ConversionReport)> {
    let started = Instant::now();
    let problem = build_problem(spn, data, cfg)?;
    let tt = initial_train(&problem, cfg);
    let (tt, mut report) = fit(tt, &problem, cfg)?;
    report.spn_parameters = crate::eval::spn_parameter_count(spn);
    report.seconds = started.elapsed().as_secs_f64();
    Ok((tt, report))
}

/// Seeded starting train for `cfg`.
pub fn initial_train(problem: &ConversionProblem, cfg: &ConversionConfig) -> TensorTrain {
    let d = problem.num_variables();
    let mut rng = cfg.init_rng();
    match cfg.init {
        InitKind::Uniform => TensorTrain::random(d, cfg.initial_rank, &mut rng),
        InitKind::Mixture => TensorTrain::random_mixture(d, cfg.initial_rank, &mut rng),
        InitKind::Data => init::bernoulli_mixture(problem, cfg.initial_rank, &mut rng),
    }
}

/// Runs sweeps from the given starting train until the stopping rule holds.
pub fn fit(initial: TensorTrain, problem: &ConversionProblem, cfg: &ConversionConfig) -> Result<(TensorTrain, ConversionReport)> {
    cfg.check()?;
    let started = Instant::now();
    let mut tt = initial;
    // right-normalized start keeps the cached contractions bounded
    for k in (1..tt.num_variables()).rev() {
        tt.right_normalize_in_place(k, 0.0)?;
    }
    let mut state = AlsState::new(tt, problem)?;
    let mut converged = false;
    while state.sweep < cfg.max_sweeps {
        let before = state.objective();
        sweep(&mut state, problem)?;
        state.sweep += 1;
        let after = state.objective();
        if before <= 0.0 || (before - after) / before < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let mut tt = state.tt.canonicalize(0)?;
    tt.set_scale(tt.scale() * problem.y_scale());
    let non_samples = problem
        .tags()
        .iter()
        .filter(|&&t| t == SampleTag::NonSample)
        .count();
    let report = ConversionReport {
        objective_history: state.objective_history,
        ranks: tt.ranks(),
        sweeps: state.sweep,
        converged,
        seconds: started.elapsed().as_secs_f64(),
        spn_parameters: 0,
        tspn_parameters: tt.parameter_count(),
        distinct_states: problem.len(),
        rows: problem.num_rows(),
        non_samples,
        y_scale: problem.y_scale(),
        nnls_iterations: state.nnls_iterations,
        config: cfg.clone(),
    };
    Ok((tt, report))
}
