//! Parameter sweeps over behavior, directedness, reward position, feature
//! count and correction.

use std::cmp::Ordering;

use mcsfa::{
    boltzmann, calibrate_beta, fit, induce_chain, scale_correct, solve_mcsfa, value_iteration, zeta_greedy,
    Environment, MarkovChain, Policy, SpectralBasis, ValueSolution,
};
use rayon::prelude::*;

use crate::config::{Behavior, Correction, RewardPosition, SweepConfig};
use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    SkippedUnstable,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::SkippedUnstable => "skipped-unstable",
        }
    }
}

/// One sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub env: String,
    pub behavior: Behavior,
    /// `zeta` for zeta-greedy, `zeta_beta` for Boltzmann.
    pub param: f64,
    pub reward: RewardPosition,
    pub e: usize,
    pub correction: Correction,
    pub mse_uniform: f64,
    pub mse_weighted: f64,
    pub log_mse: f64,
    pub status: Status,
    /// Max-norm gap between the projection and normal-equation coefficients.
    pub solver_gap: f64,
    /// Why the cell was skipped.
    pub note: Option<String>,
}

impl ExperimentResult {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.behavior
            .cmp(&other.behavior)
            .then(self.param.total_cmp(&other.param))
            .then(self.reward.cmp(&other.reward))
            .then(self.e.cmp(&other.e))
            .then(self.correction.cmp(&other.correction))
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Sorts rows by (behavior, param, reward, e, correction).
pub fn sort_results(results: &mut [ExperimentResult]) {
    results.sort_by(|a, b| a.key_cmp(b));
}

/// Behavior policy for a directedness value. Boltzmann takes `zeta_beta` and
/// calibrates `beta` against the goal neighbor.
pub fn behavior_policy(
    env: &Environment<f64>,
    q_star: &nalgebra::DMatrix<f64>,
    behavior: Behavior,
    param: f64,
) -> mcsfa::Result<Policy<f64>> {
    match behavior {
        Behavior::ZetaGreedy => zeta_greedy(env, q_star, param),
        Behavior::Boltzmann => {
            let beta = calibrate_beta(env, q_star, param)?;
            boltzmann(env, q_star, beta)
        }
    }
}

pub fn behavior_chain(
    env: &Environment<f64>,
    q_star: &nalgebra::DMatrix<f64>,
    behavior: Behavior,
    param: f64,
) -> mcsfa::Result<MarkovChain<f64>> {
    let policy = behavior_policy(env, q_star, behavior, param)?;
    MarkovChain::new(induce_chain(env, &policy)?)
}

/// Basis with `e` features after the given correction.
pub fn corrected_basis(chain: &MarkovChain<f64>, correction: Correction, e: usize) -> mcsfa::Result<SpectralBasis<f64>> {
    match correction {
        Correction::None => solve_mcsfa(&chain.standard_form(), e),
        Correction::Scale => scale_correct(&solve_mcsfa(&chain.standard_form(), e)?, &chain.mu),
        Correction::Lra => solve_mcsfa(&chain.lra_form(), e),
    }
}

struct Cell<'a> {
    cfg: &'a SweepConfig,
    env_label: &'a str,
    behavior: Behavior,
    param: f64,
    reward: RewardPosition,
}

impl Cell<'_> {
    fn row(&self, e: usize, correction: Correction) -> ExperimentResult {
        ExperimentResult {
            env: self.env_label.to_string(),
            behavior: self.behavior,
            param: self.param,
            reward: self.reward,
            e,
            correction,
            mse_uniform: f64::NAN,
            mse_weighted: f64::NAN,
            log_mse: f64::NAN,
            status: Status::SkippedUnstable,
            solver_gap: f64::NAN,
            note: None,
        }
    }

    fn skipped_all(&self, reason: &str) -> Vec<ExperimentResult> {
        let mut out = Vec::new();
        for &correction in &self.cfg.corrections {
            for e in self.cfg.features() {
                let mut r = self.row(e, correction);
                r.note = Some(reason.to_string());
                out.push(r);
            }
        }
        out
    }

    fn run(&self, env: &Environment<f64>, values: &ValueSolution<f64>) -> Vec<ExperimentResult> {
        let chain = match behavior_chain(env, &values.q_star, self.behavior, self.param) {
            Ok(c) => c,
            Err(err) => return self.skipped_all(&err.to_string()),
        };
        let features = self.cfg.features();
        let e_max = features.iter().copied().max().unwrap_or(1);
        let training = self.cfg.training.into();
        let mut out = Vec::new();
        for &correction in &self.cfg.corrections {
            let basis = corrected_basis(&chain, correction, e_max);
            for &e in &features {
                let mut row = self.row(e, correction);
                match basis.as_ref().map_err(Clone::clone).and_then(|b| fit(b, &chain.mu, &values.v_star, e, training)) {
                    Ok(f) if f.mse_uniform.is_finite() && f.mse_weighted.is_finite() => {
                        row.mse_uniform = f.mse_uniform;
                        row.mse_weighted = f.mse_weighted;
                        row.log_mse = f.log_mse;
                        row.solver_gap = f.solver_gap;
                        row.status = Status::Ok;
                    }
                    Ok(_) => row.note = Some("non-finite error".into()),
                    Err(err) => row.note = Some(err.to_string()),
                }
                out.push(row);
            }
        }
        out
    }
}

/// Run every cell of the sweep. `jobs` caps the number of worker threads.
///
/// Cells whose chain is not ergodic, falls under the occupancy guard or whose
/// solve fails are reported as `skipped-unstable` rather than aborting.
pub fn run_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<Vec<ExperimentResult>, HarnessError> {
    cfg.validate()?;
    let env_label = cfg.environment.label();
    let rewards = cfg.rewards();
    let envs: Vec<(Environment<f64>, ValueSolution<f64>)> = rewards
        .iter()
        .map(|&r| {
            let env = cfg.environment.build(r)?;
            let values = value_iteration(&env, cfg.gamma, mcsfa::value::DEFAULT_TOLERANCE)?;
            Ok((env, values))
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut groups = Vec::new();
    for &behavior in &cfg.behavior {
        for &param in &cfg.directedness_grid {
            for ri in 0..rewards.len() {
                groups.push((behavior, param, ri));
            }
        }
    }
    let work = || -> Vec<ExperimentResult> {
        groups
            .par_iter()
            .flat_map_iter(|&(behavior, param, ri)| {
                let cell = Cell { cfg, env_label: &env_label, behavior, param, reward: rewards[ri] };
                cell.run(&envs[ri].0, &envs[ri].1)
            })
            .collect()
    };
    let mut results = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot start {k} workers: {e}")))?
            .install(work),
        None => work(),
    };
    sort_results(&mut results);
    Ok(results)
}
