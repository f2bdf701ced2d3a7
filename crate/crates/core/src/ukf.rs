//! Unscented Kalman filtering for a planar constant-velocity target.
//!
//! The state is `[x, y, vx, vy]` (metres, metres per second) with Gaussian
//! uncertainty. Two operations are exposed:
//!
//! * [`predict_cv`] propagates the state by `dt` under a constant-velocity
//!   model with continuous white-noise acceleration of density
//!   `accel_sigma^2`. The model is linear, so the propagation is exact (no
//!   sigma points needed) and composes exactly: predicting `dt1` then `dt2`
//!   equals predicting `dt1 + dt2` in both mean and covariance.
//! * [`update`] folds in a vector of measurements through an arbitrary
//!   (generally nonlinear) measurement function using the scaled unscented
//!   transform: `2n + 1 = 9` sigma points drawn via a symmetric matrix square
//!   root of the covariance, independent white measurement noise of standard
//!   deviation `noise_sigma` on each component. An empty measurement vector
//!   is the identity. The posterior covariance is re-symmetrised before being
//!   returned.
//!
//! Default transform parameters are `alpha = 0.5`, `beta = 2`, `kappa = 0`;
//! with the 4-dimensional state this gives `n + lambda = 1` and keeps the
//! sigma points within the anchor geometry's scale.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use crate::geometry::Point2;
use crate::real::Real;

/// Scaled unscented transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UkfParams<T> {
    /// Sigma-point spread (0 < alpha <= 1).
    pub alpha: T,
    /// Prior-distribution weighting (2 is optimal for Gaussians).
    pub beta: T,
    /// Secondary scaling, usually 0.
    pub kappa: T,
}

impl<T: Real> Default for UkfParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.5),
            beta: T::lit(2.0),
            kappa: T::zero(),
        }
    }
}

/// Gaussian belief over the `[x, y, vx, vy]` state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    /// Mean state.
    pub mean: Vector4<T>,
    /// State covariance.
    pub cov: Matrix4<T>,
}

impl<T: Real> GaussianState<T> {
    /// A belief centred at `position` with zero velocity and independent
    /// position / velocity standard deviations.
    pub fn at_rest(position: Point2<T>, pos_sigma: T, vel_sigma: T) -> Self {
        let mut cov = Matrix4::zeros();
        cov[(0, 0)] = pos_sigma * pos_sigma;
        cov[(1, 1)] = pos_sigma * pos_sigma;
        cov[(2, 2)] = vel_sigma * vel_sigma;
        cov[(3, 3)] = vel_sigma * vel_sigma;
        Self {
            mean: Vector4::new(position.x, position.y, T::zero(), T::zero()),
            cov,
        }
    }

    /// The position component of the mean.
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.mean[0], self.mean[1])
    }

    /// The velocity component of the mean.
    pub fn velocity(&self) -> Point2<T> {
        Point2::new(self.mean[2], self.mean[3])
    }
}

/// Exact constant-velocity propagation by `dt` seconds.
///
/// Process noise is continuous white acceleration with standard deviation
/// `accel_sigma` (m/s^2 per sqrt-second), integrated over `dt`:
///
/// ```text
/// Q_axis = accel_sigma^2 * [dt^3/3  dt^2/2]
///                          [dt^2/2  dt    ]
/// ```
///
/// which makes two consecutive predictions compose exactly into one.
pub fn predict_cv<T: Real>(state: &GaussianState<T>, dt: T, accel_sigma: T) -> GaussianState<T> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;

    let q2 = accel_sigma * accel_sigma;
    let dt2 = dt * dt;
    let dt3 = dt2 * dt / T::lit(3.0);
    let half_dt2 = dt2 * T::lit(0.5);
    let mut q = Matrix4::zeros();
    q[(0, 0)] = q2 * dt3;
    q[(1, 1)] = q2 * dt3;
    q[(0, 2)] = q2 * half_dt2;
    q[(2, 0)] = q2 * half_dt2;
    q[(1, 3)] = q2 * half_dt2;
    q[(3, 1)] = q2 * half_dt2;
    q[(2, 2)] = q2 * dt;
    q[(3, 3)] = q2 * dt;

    GaussianState {
        mean: f * state.mean,
        cov: f * state.cov * f.transpose() + q,
    }
}

/// Folds a measurement vector into the belief via the unscented transform.
///
/// `h` maps a state to the predicted measurement vector and must return
/// `z.len()` components; each measurement component carries independent
/// Gaussian noise of standard deviation `noise_sigma`. An empty `z` returns
/// the state unchanged. In the numerically impossible event that the
/// innovation covariance cannot be factorised (it includes `noise_sigma^2 I`
/// on the diagonal), the update is skipped and the prior returned.
pub fn update<T: Real>(
    state: &GaussianState<T>,
    z: &[T],
    h: impl Fn(&Vector4<T>) -> Vec<T>,
    noise_sigma: T,
    params: &UkfParams<T>,
) -> GaussianState<T> {
    if z.is_empty() {
        return state.clone();
    }
    let m = z.len();

    let n = T::lit(4.0);
    let lambda = params.alpha * params.alpha * (n + params.kappa) - n;
    let scale = n + lambda; // = alpha^2 (n + kappa)
    let gamma = scale.sqrt();

    let w_mean0 = lambda / scale;
    let w_cov0 = w_mean0 + (T::one() - params.alpha * params.alpha) + params.beta;
    let w_i = T::one() / (T::lit(2.0) * scale);

    // Sigma points around the mean via a symmetric square root.
    let sqrt_cov = symmetric_sqrt(&state.cov);
    let mut sigma_points: Vec<Vector4<T>> = Vec::with_capacity(9);
    sigma_points.push(state.mean);
    for i in 0..4 {
        let col = sqrt_cov.column(i) * gamma;
        sigma_points.push(state.mean + col);
        sigma_points.push(state.mean - col);
    }

    // Transform through the measurement function.
    let predicted: Vec<DVector<T>> = sigma_points
        .iter()
        .map(|sp| {
            let v = h(sp);
            debug_assert_eq!(v.len(), m, "measurement function dimension mismatch");
            DVector::from_vec(v)
        })
        .collect();

    let weight = |j: usize, of_mean: bool| -> T {
        if j == 0 {
            if of_mean {
                w_mean0
            } else {
                w_cov0
            }
        } else {
            w_i
        }
    };

    let mut z_mean = DVector::zeros(m);
    for (j, pz) in predicted.iter().enumerate() {
        z_mean += pz * weight(j, true);
    }

    let mut s = DMatrix::zeros(m, m);
    let mut cross = DMatrix::zeros(4, m);
    for (j, (sp, pz)) in sigma_points.iter().zip(&predicted).enumerate() {
        let dz = pz - &z_mean;
        let dx = sp - state.mean;
        let w = weight(j, false);
        s += &dz * dz.transpose() * w;
        for r in 0..4 {
            for c in 0..m {
                cross[(r, c)] += dx[r] * dz[c] * w;
            }
        }
    }
    let r_var = noise_sigma * noise_sigma;
    for d in 0..m {
        s[(d, d)] += r_var;
    }

    // K = C S^-1  <=>  K' = S^-1 C'  (S is symmetric).
    let Some(chol) = s.clone().cholesky() else {
        return state.clone();
    };
    let k_t = chol.solve(&cross.transpose());
    let k = k_t.transpose();

    let innovation = DVector::from_iterator(m, z.iter().copied()) - z_mean;
    let correction = &k * innovation;
    let mut mean = state.mean;
    for r in 0..4 {
        mean[r] += correction[r];
    }

    let reduction = &k * &s * k.transpose();
    let mut cov = state.cov;
    for r in 0..4 {
        for c in 0..4 {
            cov[(r, c)] -= reduction[(r, c)];
        }
    }
    // Enforce exact symmetry against accumulation drift.
    let cov = (cov + cov.transpose()) * T::lit(0.5);

    GaussianState { mean, cov }
}

/// Symmetric positive square root of a symmetric matrix, with negative
/// eigenvalues (numerical artefacts) clamped to zero.
fn symmetric_sqrt<T: Real>(matrix: &Matrix4<T>) -> Matrix4<T> {
    let eigen = matrix.symmetric_eigen();
    let mut scaled = eigen.eigenvectors;
    for i in 0..4 {
        let root = eigen.eigenvalues[i].max(T::zero()).sqrt();
        for r in 0..4 {
            scaled[(r, i)] *= root;
        }
    }
    scaled * eigen.eigenvectors.transpose()
}

/// Smallest eigenvalue of the symmetric part of a covariance matrix; used to
/// assert positive semidefiniteness in tests and diagnostics.
pub fn min_symmetric_eigenvalue<T: Real>(matrix: &Matrix4<T>) -> T {
    let sym = (matrix + matrix.transpose()) * T::lit(0.5);
    let eigen = sym.symmetric_eigen();
    let mut min = eigen.eigenvalues[0];
    for i in 1..4 {
        min = min.min(eigen.eigenvalues[i]);
    }
    min
}
