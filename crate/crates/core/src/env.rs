//! Finite spatial MDPs with deterministic dynamics: the linear graph and the
//! 2D lattice.
//!
//! All stochasticity is supplied by the behavior policy, so every action maps
//! a state to exactly one successor. Reward is attributed to the source state
//! of a transition: `R[goal] = 1`, all other states 0.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const LINEAR_ACTIONS: [&str; 2] = ["left", "right"];
pub const LATTICE_ACTIONS: [&str; 4] = ["up", "down", "left", "right"];

/// Spatial layout of the state space.
///
/// Lattice states are indexed row-major with `(0, 0)` at the bottom-left
/// corner: `index = y * width + x`, and "up" increases `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Linear(usize),
    Lattice { width: usize, height: usize },
}

impl Geometry {
    pub fn n_states(&self) -> usize {
        match *self {
            Geometry::Linear(n) => n,
            Geometry::Lattice { width, height } => width * height,
        }
    }

    /// `(x, y)` coordinate of a state; linear states live on `y = 0`.
    pub fn coord(&self, state: usize) -> (usize, usize) {
        match *self {
            Geometry::Linear(_) => (state, 0),
            Geometry::Lattice { width, .. } => (state % width, state / width),
        }
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        match *self {
            Geometry::Linear(_) => x,
            Geometry::Lattice { width, .. } => y * width + x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment<T> {
    geometry: Geometry,
    /// `successors[a][s]` is the unique state reached by action `a` from `s`.
    successors: Vec<Vec<usize>>,
    reward: DVector<T>,
    goal: usize,
}

impl<T: Real> Environment<T> {
    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn n_states(&self) -> usize {
        self.geometry.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.successors.len()
    }

    pub fn action_names(&self) -> &'static [&'static str] {
        match self.geometry {
            Geometry::Linear(_) => &LINEAR_ACTIONS,
            Geometry::Lattice { .. } => &LATTICE_ACTIONS,
        }
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn reward(&self) -> &DVector<T> {
        &self.reward
    }

    pub fn successor(&self, action: usize, state: usize) -> usize {
        self.successors[action][state]
    }

    /// `T(s' | s, a)`.
    pub fn transition(&self, action: usize, state: usize, next: usize) -> T {
        if self.successors[action][state] == next {
            T::one()
        } else {
            T::zero()
        }
    }

    /// Dense `n x n` transition matrix of a single action.
    pub fn transition_matrix(&self, action: usize) -> DMatrix<T> {
        let n = self.n_states();
        let mut t = DMatrix::zeros(n, n);
        for (s, &next) in self.successors[action].iter().enumerate() {
            t[(s, next)] = T::one();
        }
        t
    }

    /// Distinct states one move away from the goal, in action order.
    pub fn goal_neighbors(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for succ in &self.successors {
            let s = succ[self.goal];
            if s != self.goal && !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }
}

fn goal_reward<T: Real>(n: usize, goal: usize) -> DVector<T> {
    let mut r = DVector::zeros(n);
    r[goal] = T::one();
    r
}

/// Linear graph `s_0 .. s_{n-1}` with actions `left`, `right`; moves past
/// either end self-transition.
pub fn make_linear<T: Real>(n: usize, goal: usize) -> Result<Environment<T>> {
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    if goal >= n {
        return Err(Error::GoalOutOfRange { goal, n_states: n });
    }
    let left = (0..n).map(|i| i.saturating_sub(1)).collect();
    let right = (0..n).map(|i| (i + 1).min(n - 1)).collect();
    Ok(Environment {
        geometry: Geometry::Linear(n),
        successors: vec![left, right],
        reward: goal_reward(n, goal),
        goal,
    })
}

/// `width x height` lattice with actions `up`, `down`, `left`, `right`;
/// off-grid moves self-transition.
///
/// A single row or column is accepted as long as there are at least two
/// states, in which case the left/right (or up/down) actions reproduce the
/// linear graph.
pub fn make_lattice<T: Real>(
    width: usize,
    height: usize,
    goal: (usize, usize),
) -> Result<Environment<T>> {
    let n = width * height;
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    let (gx, gy) = goal;
    if gx >= width || gy >= height {
        return Err(Error::GoalOutOfBounds { x: gx, y: gy, width, height });
    }
    let geometry = Geometry::Lattice { width, height };
    let mut up = Vec::with_capacity(n);
    let mut down = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for s in 0..n {
        let (x, y) = geometry.coord(s);
        up.push(geometry.index(x, (y + 1).min(height - 1)));
        down.push(geometry.index(x, y.saturating_sub(1)));
        left.push(geometry.index(x.saturating_sub(1), y));
        right.push(geometry.index((x + 1).min(width - 1), y));
    }
    let goal = geometry.index(gx, gy);
    Ok(Environment {
        geometry,
        successors: vec![up, down, left, right],
        reward: goal_reward(n, goal),
        goal,
    })
}

/// Transition matrix of the homogeneous birth-death chain: `s_i` moves to
/// `s_{min(n-1, i+1)}` with probability `theta` and to `s_{max(0, i-1)}`
/// otherwise.
pub fn birth_death<T: Real>(n: usize, theta: T) -> Result<DMatrix<T>> {
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    if !(theta >= T::zero() && theta <= T::one()) {
        return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, 1]")));
    }
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        p[(i, (i + 1).min(n - 1))] += theta;
        p[(i, i.saturating_sub(1))] += T::one() - theta;
    }
    Ok(p)
}
