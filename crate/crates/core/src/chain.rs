//! Ergodicity checks, stationary distributions and the symmetric
//! transition-frequency matrices `M`, `D` that define the slowness objective.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Transition probabilities at or below this are structural zeros.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Chains whose smallest stationary occupancy falls below this are rejected.
pub const MIN_OCCUPANCY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErgodicityReport {
    pub irreducible: bool,
    /// Period of the chain; only meaningful when irreducible.
    pub period: usize,
    pub ergodic: bool,
    pub diagnostic: Option<String>,
}

fn support<T: Real>(p: &DMatrix<T>) -> Vec<Vec<usize>> {
    let eps = T::lit(ZERO_THRESHOLD);
    p.row_iter()
        .map(|row| row.iter().enumerate().filter(|(_, &x)| x > eps).map(|(j, _)| j).collect())
        .collect()
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].map(|l| l + 1);
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = next;
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Irreducibility (strong connectivity of the support graph) and
/// aperiodicity (gcd of cycle lengths equal to 1).
pub fn check_ergodic<T: Real>(p: &DMatrix<T>) -> ErgodicityReport {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return ErgodicityReport {
            irreducible: false,
            period: 0,
            ergodic: false,
            diagnostic: Some(format!("matrix is {}x{}, expected square", p.nrows(), p.ncols())),
        };
    }
    let fwd = support(p);
    let mut bwd = vec![Vec::new(); n];
    for (u, vs) in fwd.iter().enumerate() {
        for &v in vs {
            bwd[v].push(u);
        }
    }
    let level = bfs_levels(&fwd, 0);
    if let Some(s) = level.iter().position(Option::is_none) {
        return ErgodicityReport {
            irreducible: false,
            period: 0,
            ergodic: false,
            diagnostic: Some(format!("state {s} is unreachable from state 0")),
        };
    }
    if let Some(s) = bfs_levels(&bwd, 0).iter().position(Option::is_none) {
        return ErgodicityReport {
            irreducible: false,
            period: 0,
            ergodic: false,
            diagnostic: Some(format!("state 0 is unreachable from state {s}")),
        };
    }
    // every edge u->v closes a walk of length level[u] + 1 - level[v]
    let mut period = 0;
    for (u, vs) in fwd.iter().enumerate() {
        for &v in vs {
            let (lu, lv) = (level[u].unwrap(), level[v].unwrap());
            period = gcd(period, (lu + 1).abs_diff(lv));
        }
    }
    let ergodic = period == 1;
    ErgodicityReport {
        irreducible: true,
        period,
        ergodic,
        diagnostic: (!ergodic).then(|| format!("chain is periodic with period {period}")),
    }
}

/// Unique `mu` with `mu^T P = mu^T` and `sum(mu) = 1`, from a dense LU solve
/// of `(P^T - I) mu = 0` with the last balance equation replaced by the
/// normalization.
pub fn stationary<T: Real>(p: &DMatrix<T>) -> Result<DVector<T>> {
    let report = check_ergodic(p);
    if !report.ergodic {
        return Err(Error::NotErgodic(report.diagnostic.unwrap_or_default()));
    }
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(T::one());
    let mut b = DVector::zeros(n);
    b[n - 1] = T::one();
    a.lu().solve(&b).ok_or(Error::SingularSystem)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain<T> {
    pub p: DMatrix<T>,
    pub mu: DVector<T>,
    pub report: ErgodicityReport,
}

impl<T: Real> MarkovChain<T> {
    /// Validates ergodicity, solves for `mu` and applies the
    /// minimum-occupancy guard.
    pub fn new(p: DMatrix<T>) -> Result<Self> {
        let report = check_ergodic(&p);
        if !report.ergodic {
            return Err(Error::NotErgodic(report.diagnostic.clone().unwrap_or_default()));
        }
        let mu = stationary(&p)?;
        let (state, min) = mu.argmin();
        if !(min >= T::lit(MIN_OCCUPANCY)) {
            return Err(Error::LowOccupancy { min: min.as_f64(), state, threshold: MIN_OCCUPANCY });
        }
        Ok(Self { p, mu, report })
    }

    pub fn n_states(&self) -> usize {
        self.mu.len()
    }

    pub fn ergodic(&self) -> bool {
        self.report.ergodic
    }

    pub fn standard_form(&self) -> QuadraticForm<T> {
        build_quadratic_form(&self.p, &self.mu)
    }

    pub fn lra_form(&self) -> QuadraticForm<T> {
        build_lra_form(&self.p, &self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormKind {
    Standard,
    Lra,
}

/// Symmetric weight matrix `M` with its degree vector `D_vv = sum_u M_uv`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T> {
    pub m: DMatrix<T>,
    pub d: DVector<T>,
    pub kind: FormKind,
}

impl<T: Real> QuadraticForm<T> {
    pub fn n_states(&self) -> usize {
        self.d.len()
    }

    /// `D - M`.
    pub fn laplacian(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.d) - &self.m
    }
}

fn symmetric_from<T: Real>(n: usize, weight: impl Fn(usize, usize) -> T) -> DMatrix<T> {
    let half = T::lit(0.5);
    let mut m = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in u..n {
            let x = (weight(u, v) + weight(v, u)) * half;
            m[(u, v)] = x;
            m[(v, u)] = x;
        }
    }
    m
}

fn with_degrees<T: Real>(m: DMatrix<T>, kind: FormKind) -> QuadraticForm<T> {
    let d = DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()));
    QuadraticForm { m, d, kind }
}

/// `M_uv = (mu_u P_uv + mu_v P_vu) / 2`; for a stationary `mu` the degrees
/// equal `mu`.
pub fn build_quadratic_form<T: Real>(p: &DMatrix<T>, mu: &DVector<T>) -> QuadraticForm<T> {
    let m = symmetric_from(mu.len(), |u, v| mu[u] * p[(u, v)]);
    with_degrees(m, FormKind::Standard)
}

/// Learning-rate-adapted form: every supported transition contributes with
/// weight 1 instead of `P_uv`, giving
/// `M'_uv = (mu_u [P_uv > eps] + mu_v [P_vu > eps]) / 2`.
///
/// Degrees are the literal row sums of `M'`, so `(D' - M') 1 = 0`.
pub fn build_lra_form<T: Real>(p: &DMatrix<T>, mu: &DVector<T>) -> QuadraticForm<T> {
    let eps = T::lit(ZERO_THRESHOLD);
    let m = symmetric_from(mu.len(), |u, v| if p[(u, v)] > eps { mu[u] } else { T::zero() });
    with_degrees(m, FormKind::Lra)
}

/// Sample a trajectory of `steps` transitions starting from `start`.
/// The returned vector has `steps + 1` states.
pub fn simulate<T: Real, R: Rng + ?Sized>(
    p: &DMatrix<T>,
    start: usize,
    steps: usize,
    rng: &mut R,
) -> Vec<usize> {
    let cumulative: Vec<Vec<f64>> = p
        .row_iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, x| {
                    *acc += x.as_f64();
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut states = Vec::with_capacity(steps + 1);
    let mut s = start;
    states.push(s);
    for _ in 0..steps {
        let row = &cumulative[s];
        let u = rng.random::<f64>() * row[row.len() - 1];
        s = row.partition_point(|&c| c <= u).min(row.len() - 1);
        states.push(s);
    }
    states
}

/// Fraction of time steps spent in each state.
pub fn visit_frequencies(trajectory: &[usize], n_states: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_states];
    for &s in trajectory {
        counts[s] += 1;
    }
    let total = trajectory.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}
