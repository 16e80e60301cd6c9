//! Behavior policies built from `Q*` and the Markov chains they induce.

use nalgebra::{DMatrix, DVector};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute tolerance for treating two `Q*` entries as tied for the argmax.
pub const ARGMAX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyFamily<T> {
    ZetaGreedy { zeta: T },
    Boltzmann { beta: T },
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    /// `probs[(s, a)] = pi(a | s)`.
    pub probs: DMatrix<T>,
    pub family: PolicyFamily<T>,
}

impl<T: Real> Policy<T> {
    pub fn prob(&self, state: usize, action: usize) -> T {
        self.probs[(state, action)]
    }

    /// True when some action has probability exactly zero, so the induced
    /// chain may fail to be ergodic.
    pub fn has_zero_actions(&self) -> bool {
        self.probs.iter().any(|p| *p == T::zero())
    }
}

fn check_q<T: Real>(env: &Environment<T>, q_star: &DMatrix<T>) -> Result<()> {
    if q_star.shape() != (env.n_states(), env.n_actions()) {
        return Err(Error::Shape(format!(
            "Q* is {}x{}, environment has {} states and {} actions",
            q_star.nrows(),
            q_star.ncols(),
            env.n_states(),
            env.n_actions()
        )));
    }
    if q_star.iter().any(|q| !q.is_finite()) {
        return Err(Error::NonFinite("Q*"));
    }
    Ok(())
}

/// Indicator of the argmax set of each row of `Q*`.
fn optimal_actions<T: Real>(q_row: impl Iterator<Item = T> + Clone) -> Vec<bool> {
    let tol = T::lit(ARGMAX_TOLERANCE);
    let best = q_row.clone().reduce(T::max).unwrap_or_else(T::zero);
    q_row.map(|q| best - q <= tol).collect()
}

pub fn uniform<T: Real>(env: &Environment<T>) -> Policy<T> {
    let k = T::from_count(env.n_actions());
    Policy {
        probs: DMatrix::from_element(env.n_states(), env.n_actions(), T::one() / k),
        family: PolicyFamily::Uniform,
    }
}

/// Mass `1 - zeta` split equally over the optimal actions and `zeta` over
/// the rest. The goal state, and any state where every action is optimal,
/// gets the uniform distribution.
///
/// `zeta` of exactly 0 or 1 is accepted; see [`Policy::has_zero_actions`].
pub fn zeta_greedy<T: Real>(env: &Environment<T>, q_star: &DMatrix<T>, zeta: T) -> Result<Policy<T>> {
    check_q(env, q_star)?;
    if !(zeta >= T::zero() && zeta <= T::one()) {
        return Err(Error::InvalidParameter(format!("zeta = {zeta} outside [0, 1]")));
    }
    let (n, k) = (env.n_states(), env.n_actions());
    let mut probs = DMatrix::zeros(n, k);
    for s in 0..n {
        let opt = optimal_actions(q_star.row(s).iter().copied());
        let n_opt = opt.iter().filter(|&&o| o).count();
        if s == env.goal() || n_opt == k {
            probs.row_mut(s).fill(T::one() / T::from_count(k));
            continue;
        }
        let p_opt = (T::one() - zeta) / T::from_count(n_opt);
        let p_other = zeta / T::from_count(k - n_opt);
        for (a, &is_opt) in opt.iter().enumerate() {
            probs[(s, a)] = if is_opt { p_opt } else { p_other };
        }
    }
    Ok(Policy { probs, family: PolicyFamily::ZetaGreedy { zeta } })
}

/// Softmax over `beta * Q*(s, .)`, shifted by the row maximum.
pub fn boltzmann<T: Real>(env: &Environment<T>, q_star: &DMatrix<T>, beta: T) -> Result<Policy<T>> {
    check_q(env, q_star)?;
    if !beta.is_finite() {
        return Err(Error::NonFinite("beta"));
    }
    let mut probs = q_star * beta;
    for mut row in probs.row_iter_mut() {
        let shift = row.iter().copied().reduce(T::max).unwrap_or_else(T::zero);
        row.apply(|x| *x = (*x - shift).exp());
        let total = row.sum();
        row /= total;
    }
    Ok(Policy { probs, family: PolicyFamily::Boltzmann { beta } })
}

/// Inverse temperature whose Boltzmann policy selects an optimal action
/// with probability `1 - zeta_beta` at the first goal neighbor, matching a
/// `zeta`-greedy policy there.
///
/// With `k_opt` optimal actions and gaps `gap_j` to the others this solves
/// `k_opt / (k_opt + sum_j exp(-beta * gap_j)) = 1 - zeta_beta`; when all
/// gaps agree the solution is closed-form, otherwise the monotone equation
/// is bisected. For two actions: `beta = ln((1 - zeta_beta) / zeta_beta) / gap`.
pub fn calibrate_beta<T: Real>(env: &Environment<T>, q_star: &DMatrix<T>, zeta_beta: T) -> Result<T> {
    check_q(env, q_star)?;
    if !(zeta_beta > T::zero() && zeta_beta < T::one()) {
        return Err(Error::Calibration(format!(
            "zeta_beta = {zeta_beta} must lie strictly inside (0, 1)"
        )));
    }
    let neighbor = *env
        .goal_neighbors()
        .first()
        .ok_or_else(|| Error::Calibration("goal has no neighbor".into()))?;
    let row: Vec<T> = q_star.row(neighbor).iter().copied().collect();
    let opt = optimal_actions(row.iter().copied());
    let best = row.iter().copied().reduce(T::max).unwrap_or_else(T::zero);
    let k_opt = T::from_count(opt.iter().filter(|&&o| o).count());
    let gaps: Vec<T> = row.iter().zip(&opt).filter(|(_, &o)| !o).map(|(&q, _)| best - q).collect();
    if gaps.is_empty() {
        return Err(Error::Calibration(format!(
            "all actions optimal at goal neighbor {neighbor} (zero Q* gap)"
        )));
    }
    let target = T::one() - zeta_beta;

    let (lo_gap, hi_gap) = gaps
        .iter()
        .fold((gaps[0], gaps[0]), |(lo, hi), &g| (lo.min(g), hi.max(g)));
    if hi_gap - lo_gap <= T::lit(1e-12) * hi_gap {
        // k_opt e^{beta gap} / (k_opt e^{beta gap} + k_other) = target
        let k_other = T::from_count(gaps.len());
        return Ok((target * k_other / (zeta_beta * k_opt)).ln() / lo_gap);
    }

    let p_opt = |beta: T| k_opt / (k_opt + gaps.iter().map(|&g| (-beta * g).exp()).sum::<T>());
    let (mut lo, mut hi) = (-T::one(), T::one());
    while p_opt(lo) > target {
        lo *= T::lit(2.0);
    }
    while p_opt(hi) < target {
        hi *= T::lit(2.0);
    }
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if p_opt(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// `P[s, s'] = sum_a T(s' | s, a) * pi(a | s)`.
pub fn induce_chain<T: Real>(env: &Environment<T>, policy: &Policy<T>) -> Result<DMatrix<T>> {
    let (n, k) = (env.n_states(), env.n_actions());
    if policy.probs.shape() != (n, k) {
        return Err(Error::Shape(format!(
            "policy is {}x{}, environment has {n} states and {k} actions",
            policy.probs.nrows(),
            policy.probs.ncols()
        )));
    }
    let mut p = DMatrix::zeros(n, n);
    for s in 0..n {
        for a in 0..k {
            p[(s, env.successor(a, s))] += policy.probs[(s, a)];
        }
    }
    Ok(p)
}

/// Probability that the policy picks an optimal action in each state.
pub fn optimal_mass<T: Real>(policy: &Policy<T>, q_star: &DMatrix<T>) -> DVector<T> {
    DVector::from_fn(q_star.nrows(), |s, _| {
        optimal_actions(q_star.row(s).iter().copied())
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(a, _)| policy.probs[(s, a)])
            .sum()
    })
}
