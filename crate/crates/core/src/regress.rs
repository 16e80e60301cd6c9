//! Linear value-function approximation on a slow-feature basis.
//!
//! The model is `V(s) = w0 + w^T y(s)`. Coefficients are computed twice:
//! by an orthogonal projection (closed form `w = Y^T W v`, `w0 = 1^T W v`
//! when the basis is already orthonormal and centered under the training
//! weights `W`, weighted Gram-Schmidt otherwise) and by the weighted normal
//! equations. The gap between the two is reported with every fit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::SpectralBasis;

/// State weighting of the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TrainingWeights {
    /// Ordinary least squares over states.
    #[default]
    Uniform,
    /// Weighted by the stationary distribution of the behavior chain.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub weights: DVector<T>,
    pub intercept: T,
    /// Plain mean of the squared error over states.
    pub mse_uniform: T,
    /// `mu`-weighted mean of the squared error.
    pub mse_weighted: T,
    /// `ln(mse_uniform)`.
    pub log_mse: T,
    pub training: TrainingWeights,
    /// Coefficients `[w0, w]` from the normal equations.
    pub generic_coefficients: DVector<T>,
    /// Max-norm difference between the two coefficient routes.
    pub solver_gap: T,
}

impl<T: Real> FitResult<T> {
    pub fn coefficients(&self) -> DVector<T> {
        let mut c = DVector::zeros(self.weights.len() + 1);
        c[0] = self.intercept;
        c.rows_mut(1, self.weights.len()).copy_from(&self.weights);
        c
    }
}

fn design<T: Real>(y: &DMatrix<T>, e: usize) -> DMatrix<T> {
    let n = y.nrows();
    let mut x = DMatrix::from_element(n, e + 1, T::one());
    x.columns_mut(1, e).copy_from(&y.columns(0, e));
    x
}

fn dot_w<T: Real>(a: &DVector<T>, b: &DVector<T>, w: &DVector<T>) -> T {
    a.iter().zip(b.iter()).zip(w.iter()).map(|((&x, &y), &z)| x * y * z).sum()
}

/// Weighted projection of `v` onto the column span of `x` via modified
/// Gram-Schmidt with one reorthogonalization pass.
fn projection_coefficients<T: Real>(x: &DMatrix<T>, w: &DVector<T>, v: &DVector<T>) -> Result<DVector<T>> {
    let k = x.ncols();
    let mut q: Vec<DVector<T>> = Vec::with_capacity(k);
    let mut r = DMatrix::zeros(k, k);
    for j in 0..k {
        let original = x.column(j).into_owned();
        let mut col = original.clone();
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let h = dot_w(qi, &col, w);
                r[(i, j)] += h;
                col.axpy(-h, qi, T::one());
            }
        }
        let norm = dot_w(&col, &col, w).sqrt();
        let scale = dot_w(&original, &original, w).sqrt();
        if !(norm > T::default_epsilon().sqrt() * scale) {
            return Err(Error::RankDeficient);
        }
        r[(j, j)] = norm;
        q.push(col / norm);
    }
    let rhs = DVector::from_iterator(k, q.iter().map(|qi| dot_w(qi, v, w)));
    r.solve_upper_triangular(&rhs).ok_or(Error::RankDeficient)
}

fn normal_equations<T: Real>(x: &DMatrix<T>, w: &DVector<T>, v: &DVector<T>) -> Result<DVector<T>> {
    let wx = DMatrix::from_diagonal(w) * x;
    let a = x.tr_mul(&wx);
    let b = wx.tr_mul(v);
    a.cholesky().map(|c| c.solve(&b)).ok_or(Error::RankDeficient)
}

/// Least-squares fit of `v_star` on the first `e_used` basis columns plus an
/// intercept.
pub fn fit<T: Real>(
    basis: &SpectralBasis<T>,
    mu: &DVector<T>,
    v_star: &DVector<T>,
    e_used: usize,
    training: TrainingWeights,
) -> Result<FitResult<T>> {
    let n = basis.n_states();
    if e_used > basis.n_features() {
        return Err(Error::TooManyFeatures { requested: e_used, available: basis.n_features() });
    }
    if mu.len() != n || v_star.len() != n {
        return Err(Error::Shape(format!(
            "basis has {n} states, mu {} and V* {} entries",
            mu.len(),
            v_star.len()
        )));
    }
    if v_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("V*"));
    }
    let w = match training {
        TrainingWeights::Uniform => DVector::from_element(n, T::one() / T::from_count(n)),
        TrainingWeights::Stationary => mu.clone(),
    };
    let x = design(&basis.y, e_used);

    let total = w.sum();
    let matches_training = (&basis.weighting - &w).amax() <= T::lit(1e-12) && (total - T::one()).abs() <= T::lit(1e-12);
    let closed = if matches_training {
        let mut c = DVector::zeros(e_used + 1);
        c[0] = w.dot(v_star);
        let yv = basis.y.columns(0, e_used).tr_mul(&v_star.component_mul(&w));
        c.rows_mut(1, e_used).copy_from(&yv);
        c
    } else {
        projection_coefficients(&x, &w, v_star)?
    };
    let generic = normal_equations(&x, &w, v_star)?;
    let solver_gap = (&closed - &generic).amax();

    let residual = &x * &closed - v_star;
    let sq = residual.map(|r| r * r);
    let mse_uniform = sq.mean();
    let mse_weighted = sq.dot(mu);
    Ok(FitResult {
        weights: closed.rows(1, e_used).into_owned(),
        intercept: closed[0],
        mse_uniform,
        mse_weighted,
        log_mse: mse_uniform.ln(),
        training,
        generic_coefficients: generic,
        solver_gap,
    })
}

/// `sgn(x) * ln|x|`, and 0 at 0.
pub fn symlog<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.signum() * x.abs().ln()
    }
}

/// `-symlog(mse_before - mse_after)` on the reported (state-uniform) MSE.
pub fn compare<T: Real>(before: &FitResult<T>, after: &FitResult<T>) -> T {
    -symlog(before.mse_uniform - after.mse_uniform)
}
