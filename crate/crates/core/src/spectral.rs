//! Optimal slow features as generalized eigenvectors of `(D - M, D)`.
//!
//! The slowness objective `sum_uv M_uv (y_u - y_v)^2 = 2 y^T (D - M) y` is
//! minimized under `Y^T D Y = I`. Stationarity of the Lagrangian gives
//! `(D - M) Y = D Y Lambda`, which is solved through the symmetric matrix
//! `D^{-1/2} (D - M) D^{-1/2}` and mapped back with `y = D^{-1/2} z`. The
//! constant vector is always a solution with eigenvalue 0; it is deflated
//! before the eigensolve and never returned.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::chain::QuadraticForm;
use crate::error::{Error, Result};
use crate::scalar::Real;

const TRIVIAL_EIGENVALUE_TOL: f64 = 1e-8;
const TRIVIAL_DEVIATION_TOL: f64 = 1e-6;
const NEGATIVE_CLAMP_TOL: f64 = 1e-10;
const SIGN_TIE_TOL: f64 = 1e-9;

/// Tolerance that never drops below a few thousand ulps of `T`.
fn tol<T: Real>(base: f64) -> T {
    T::lit(base).max(T::default_epsilon() * T::lit(1e4))
}

/// Feature matrix `Y` (`n_states x e`) with the trivial constant feature
/// excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis<T> {
    pub y: DMatrix<T>,
    /// Ascending.
    pub lambdas: DVector<T>,
    /// Diagonal under which `Y^T diag(weighting) Y = I`.
    pub weighting: DVector<T>,
}

impl<T: Real> SpectralBasis<T> {
    pub fn n_features(&self) -> usize {
        self.y.ncols()
    }

    pub fn n_states(&self) -> usize {
        self.y.nrows()
    }

    /// Basis restricted to its first `e` features.
    pub fn truncated(&self, e: usize) -> Result<Self> {
        if e > self.n_features() {
            return Err(Error::TooManyFeatures { requested: e, available: self.n_features() });
        }
        Ok(Self {
            y: self.y.columns(0, e).into_owned(),
            lambdas: self.lambdas.rows(0, e).into_owned(),
            weighting: self.weighting.clone(),
        })
    }

    /// `Y^T diag(weighting) Y`.
    pub fn gram(&self) -> DMatrix<T> {
        let wy = DMatrix::from_diagonal(&self.weighting) * &self.y;
        self.y.tr_mul(&wy)
    }

    /// `1^T diag(weighting) Y`, one entry per feature.
    pub fn weighted_means(&self) -> DVector<T> {
        self.y.tr_mul(&self.weighting)
    }
}

fn check_weights<T: Real>(w: &DVector<T>) -> Result<()> {
    match w.iter().position(|&x| !(x > T::zero())) {
        Some(state) => Err(Error::NonPositiveWeight { state, value: w[state].as_f64() }),
        None => Ok(()),
    }
}

/// Flip the column so its largest-magnitude entry is positive; near-ties go
/// to the lowest state index.
fn fix_sign<T: Real>(mut col: nalgebra::DVectorViewMut<'_, T>) {
    let peak = col.amax();
    let cutoff = peak * (T::one() - T::lit(SIGN_TIE_TOL));
    if let Some(&x) = col.iter().find(|x| x.abs() >= cutoff) {
        if x < T::zero() {
            col.neg_mut();
        }
    }
}

/// Solve `(D - M) y = lambda D y` and return the `e` slowest non-trivial
/// features, `D`-orthonormal, with ascending eigenvalues.
pub fn solve_mcsfa<T: Real>(form: &QuadraticForm<T>, e: usize) -> Result<SpectralBasis<T>> {
    let n = form.n_states();
    if e == 0 || e + 1 > n {
        return Err(Error::TooManyFeatures { requested: e, available: n.saturating_sub(1) });
    }
    check_weights(&form.d)?;
    let inv_sqrt: DVector<T> = form.d.map(|d| T::one() / d.sqrt());

    let lap = form.laplacian();
    let mut sym = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let x = inv_sqrt[i] * lap[(i, j)] * inv_sqrt[j];
            sym[(i, j)] = x;
            sym[(j, i)] = x;
        }
    }
    // The trivial solution z0 = D^{1/2} 1 is known exactly. Certify it by its
    // residual, then solve on its orthogonal complement: left inside the
    // eigensolve it mixes with the slowest feature whenever lambda_1 is tiny.
    let sqrt_d = form.d.map(|d| d.sqrt());
    let u = &sqrt_d / sqrt_d.norm();
    let su = &sym * &u;
    let lambda0 = u.dot(&su);
    let deviation = (su - &u * lambda0).amax();
    if !(lambda0.abs() < tol::<T>(TRIVIAL_EIGENVALUE_TOL) && deviation < tol::<T>(TRIVIAL_DEVIATION_TOL)) {
        return Err(Error::TrivialSolution { lambda: lambda0.as_f64(), deviation: deviation.as_f64() });
    }
    // Householder reflector mapping u to -e_0; its other columns span u-perp.
    let mut v = u.clone();
    v[0] += T::one();
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (T::lit(2.0) / v.norm_squared());
    let q = h.columns(1, n - 1);
    let qs = q.tr_mul(&sym) * q;
    let mut reduced = DMatrix::zeros(n - 1, n - 1);
    for j in 0..n - 1 {
        for i in j..n - 1 {
            let x = (qs[(i, j)] + qs[(j, i)]) * T::lit(0.5);
            reduced[(i, j)] = x;
            reduced[(j, i)] = x;
        }
    }
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));

    let mut y = DMatrix::zeros(n, e);
    let mut lambdas = DVector::zeros(e);
    for (c, &k) in order.iter().take(e).enumerate() {
        let mut lambda = eig.eigenvalues[k];
        if lambda < T::zero() {
            if lambda < -tol::<T>(NEGATIVE_CLAMP_TOL) {
                return Err(Error::NegativeEigenvalue(lambda.as_f64()));
            }
            lambda = T::zero();
        }
        lambdas[c] = lambda;
        let z = q * eig.eigenvectors.column(k);
        y.set_column(c, &z.component_mul(&inv_sqrt));
        fix_sign(y.column_mut(c));
    }
    Ok(SpectralBasis { y, lambdas, weighting: form.d.clone() })
}

/// `sum_{u,v} M_uv (y_u - y_v)^2`.
pub fn slowness<T: Real>(form: &QuadraticForm<T>, y: &DVector<T>) -> T {
    let n = form.n_states();
    let mut total = T::zero();
    for u in 0..n {
        for v in 0..n {
            let diff = y[u] - y[v];
            total += form.m[(u, v)] * diff * diff;
        }
    }
    total
}

/// Gradient of the Lagrangian `Tr(Y^T (D-M) Y) - Tr(Lambda (Y^T D Y - I))`:
/// `2 (D - M) Y - 2 D Y Lambda`.
pub fn objective_gradient<T: Real>(
    form: &QuadraticForm<T>,
    y: &DMatrix<T>,
    lambdas: &DVector<T>,
) -> Result<DMatrix<T>> {
    if y.nrows() != form.n_states() || y.ncols() != lambdas.len() {
        return Err(Error::Shape(format!(
            "Y is {}x{}, form has {} states and Lambda has {} entries",
            y.nrows(),
            y.ncols(),
            form.n_states(),
            lambdas.len()
        )));
    }
    let two = T::lit(2.0);
    let dy = DMatrix::from_diagonal(&form.d) * y;
    Ok(form.laplacian() * y * two - dy * DMatrix::from_diagonal(lambdas) * two)
}

/// Scale each row `r` of `Y` by `sqrt(omega_r / phi_r)`, mapping the feasible
/// set of `Y^T Omega Y = I` onto that of `Y^T Phi Y = I`.
pub fn general_rescale<T: Real>(y: &DMatrix<T>, omega: &DVector<T>, phi: &DVector<T>) -> Result<DMatrix<T>> {
    if omega.len() != y.nrows() || phi.len() != y.nrows() {
        return Err(Error::Shape(format!(
            "Y has {} rows, omega {} and phi {} entries",
            y.nrows(),
            omega.len(),
            phi.len()
        )));
    }
    check_weights(omega)?;
    check_weights(phi)?;
    let mut out = y.clone();
    for (r, mut row) in out.row_iter_mut().enumerate() {
        row *= (omega[r] / phi[r]).sqrt();
    }
    Ok(out)
}

/// `Y' = diag(sqrt(mu)) Y`: moves a `mu`-orthonormal basis onto the
/// unweighted constraint `Y'^T Y' = I`.
///
/// The rows are scaled by the basis weighting after checking it agrees with
/// `mu`; in rarely visited states the two can differ in relative terms, and
/// only the weighting keeps `Y'^T Y' = I` exact.
pub fn scale_correct<T: Real>(basis: &SpectralBasis<T>, mu: &DVector<T>) -> Result<SpectralBasis<T>> {
    if mu.len() != basis.n_states() {
        return Err(Error::Shape(format!("mu has {} entries, basis {} states", mu.len(), basis.n_states())));
    }
    check_weights(mu)?;
    let mismatch = (&basis.weighting - mu).amax();
    if mismatch > T::lit(1e-10).max(T::default_epsilon() * T::lit(1e3)) {
        return Err(Error::InvalidParameter(format!(
            "basis weighting differs from mu by {mismatch:e}; scale correction expects a mu-orthonormal basis"
        )));
    }
    let ones = DVector::from_element(mu.len(), T::one());
    Ok(SpectralBasis {
        y: general_rescale(&basis.y, &basis.weighting, &ones)?,
        lambdas: basis.lambdas.clone(),
        weighting: ones,
    })
}
