//! Optimal value functions by synchronous value iteration.

use nalgebra::{DMatrix, DVector};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Update tolerance used when callers have no preference.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_GAMMA: f64 = 0.95;

const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution<T> {
    pub v_star: DVector<T>,
    /// `n_states x n_actions`.
    pub q_star: DMatrix<T>,
    pub gamma: T,
    /// Max-norm Bellman residual of `v_star`.
    pub residual: T,
    pub sweeps: usize,
}

fn backup<T: Real>(env: &Environment<T>, gamma: T, v: &DVector<T>) -> DMatrix<T> {
    let (n, k) = (env.n_states(), env.n_actions());
    let r = env.reward();
    DMatrix::from_fn(n, k, |s, a| r[s] + gamma * v[env.successor(a, s)])
}

fn row_max<T: Real>(q: &DMatrix<T>) -> DVector<T> {
    DVector::from_iterator(
        q.nrows(),
        q.row_iter().map(|row| row.iter().copied().reduce(T::max).unwrap_or_else(T::zero)),
    )
}

/// Fixed point of `Q(s,a) = R(s) + gamma * max_a' Q(s', a')` with `s'` the
/// successor of `s` under `a`.
///
/// Sweeps stop once the max-norm update falls below
/// `tol * (1 - gamma) / gamma`.
pub fn value_iteration<T: Real>(env: &Environment<T>, gamma: T, tol: T) -> Result<ValueSolution<T>> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1)")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!("tolerance = {tol} must be positive")));
    }
    let n = env.n_states();
    let mut v = DVector::zeros(n);
    let mut sweeps = 0;
    if gamma > T::zero() {
        let threshold = tol * (T::one() - gamma) / gamma;
        loop {
            let next = row_max(&backup(env, gamma, &v));
            let change = (&next - &v).amax();
            v = next;
            sweeps += 1;
            if change < threshold || sweeps >= MAX_SWEEPS {
                break;
            }
        }
    } else {
        v = env.reward().clone();
        sweeps = 1;
    }
    let q = backup(env, gamma, &v);
    let residual = (row_max(&q) - &v).amax();
    Ok(ValueSolution { v_star: row_max(&q), q_star: q, gamma, residual, sweeps })
}
