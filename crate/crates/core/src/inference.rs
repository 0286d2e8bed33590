//! Unscented transform, UKF prediction and update against the pinhole
//! projection, and ellipsoidal gating.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::{project_vector, BBox2D, CameraModel, Transition};
use crate::rfs::{repair_psd, GaussianDensity};

/// Default gate: Mahalanobis distance bound.
pub const DEFAULT_GATE: f64 = 6.0;

/// Sigma-point spread. The symmetric set has `2n+1` points at
/// `mean ± columns of √((n+κ)P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtConfig {
    pub kappa: f64,
}

impl Default for UtConfig {
    fn default() -> Self {
        Self { kappa: 0.0 }
    }
}

impl UtConfig {
    fn check(&self, n: usize) -> Result<f64> {
        let lambda = n as f64 + self.kappa;
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("n + kappa must be > 0, got {lambda}")));
        }
        Ok(lambda)
    }
}

/// Result of pushing a Gaussian through a nonlinear map.
#[derive(Debug, Clone)]
pub struct UtOutput {
    pub density: GaussianDensity,
    /// `E[(x - m)(f(x) - f̄)ᵀ]`.
    pub cross_cov: DMatrix<f64>,
}

/// Lower-triangular-ish square root of a PSD matrix: Cholesky when it
/// succeeds, otherwise `V·√Λ` from the eigen-decomposition.
pub(crate) fn matrix_sqrt(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = Cholesky::new(p.clone()) {
        return Ok(ch.l());
    }
    let eig = p.clone().symmetric_eigen();
    let scale = p.trace().abs().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|v| !v.is_finite() || *v < -1e-6 * scale) {
        return Err(Error::Factorization("covariance is not positive semi-definite".into()));
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root))
}

/// Classic `2n+1` sigma-point transform.
pub fn unscented_transform<F>(g: &GaussianDensity, f: F, cfg: UtConfig) -> Result<UtOutput>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = g.dim();
    let lambda = cfg.check(n)?;
    let root = matrix_sqrt(&(g.cov() * lambda))?;
    let w0 = cfg.kappa / lambda;
    let wi = 0.5 / lambda;

    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(g.mean().clone());
    for i in 0..n {
        let col = root.column(i);
        points.push(g.mean() + col);
        points.push(g.mean() - col);
    }
    let images = points.iter().map(&f).collect::<Result<Vec<_>>>()?;
    let weight = |i: usize| if i == 0 { w0 } else { wi };

    let m = images[0].len();
    let mut mean = DVector::zeros(m);
    for (i, y) in images.iter().enumerate() {
        mean.axpy(weight(i), y, 1.0);
    }
    let mut cov = DMatrix::zeros(m, m);
    let mut cross = DMatrix::zeros(n, m);
    for (i, (x, y)) in points.iter().zip(&images).enumerate() {
        let w = weight(i);
        if w == 0.0 {
            continue;
        }
        let dy = y - &mean;
        let dx = x - g.mean();
        cov.ger(w, &dy, &dy, 1.0);
        cross.ger(w, &dx, &dy, 1.0);
    }
    Ok(UtOutput {
        density: GaussianDensity::repaired(mean, cov)?,
        cross_cov: cross,
    })
}

/// Linear prediction `x' = F x + m + w`; exact for the pedestrian dynamics.
pub fn ukf_predict(g: &GaussianDensity, tr: &Transition) -> Result<GaussianDensity> {
    let f = &tr.matrix;
    let mean = f * g.mean() + &tr.offset;
    let cov = f * g.cov() * f.transpose() + &tr.noise;
    GaussianDensity::repaired(mean, cov)
}

/// Predicted measurement of one Gaussian, reusable for gating, likelihoods
/// and updates against many measurements.
#[derive(Debug, Clone)]
pub struct PredictedMeasurement {
    prior: GaussianDensity,
    z_hat: DVector<f64>,
    s: DMatrix<f64>,
    s_chol: Cholesky<f64, Dyn>,
    cross: DMatrix<f64>,
    log_norm: f64,
}

impl PredictedMeasurement {
    /// Generic form for any measurement function.
    pub fn with_map<F>(g: &GaussianDensity, h: F, noise: &DMatrix<f64>, cfg: UtConfig) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    {
        let ut = unscented_transform(g, h, cfg)?;
        let (z_hat, pzz) = ut.density.into_parts();
        let mut s = pzz + noise;
        s = (&s + s.transpose()) * 0.5;
        let s_chol = Cholesky::new(s.clone()).ok_or(Error::SingularInnovation)?;
        let log_det: f64 = s_chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        if !log_det.is_finite() {
            return Err(Error::SingularInnovation);
        }
        let m = z_hat.len() as f64;
        Ok(Self {
            prior: g.clone(),
            z_hat,
            s,
            s_chol,
            cross: ut.cross_cov,
            log_norm: -0.5 * (m * (2.0 * std::f64::consts::PI).ln() + log_det),
        })
    }

    /// Through the pinhole projection.
    pub fn new(g: &GaussianDensity, camera: &CameraModel, noise: &DMatrix<f64>) -> Result<Self> {
        Self::with_map(g, |x| project_vector(x, camera), noise, UtConfig::default())
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.z_hat
    }

    pub fn innovation_cov(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn prior(&self) -> &GaussianDensity {
        &self.prior
    }

    pub fn mahalanobis2(&self, z: &DVector<f64>) -> f64 {
        let nu = z - &self.z_hat;
        let y = self.s_chol.l().solve_lower_triangular(&nu).unwrap_or(nu);
        y.norm_squared()
    }

    pub fn log_likelihood(&self, z: &DVector<f64>) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis2(z)
    }

    /// Closed gate: passes when the distance is at most `threshold`.
    pub fn gate(&self, z: &DVector<f64>, threshold: f64) -> (bool, f64) {
        let d2 = self.mahalanobis2(z);
        (d2 <= threshold * threshold, d2)
    }

    /// Posterior density and measurement log-likelihood.
    pub fn update(&self, z: &DVector<f64>) -> Result<(GaussianDensity, f64)> {
        let nu = z - &self.z_hat;
        // K = Pxz S⁻¹, so Kᵀ = S⁻¹ Pxzᵀ.
        let gain = self.s_chol.solve(&self.cross.transpose()).transpose();
        let mean = self.prior.mean() + &gain * &nu;
        let cov = self.prior.cov() - &gain * &self.s * gain.transpose();
        let cov = repair_psd(cov)?;
        Ok((GaussianDensity::new(mean, cov)?, self.log_likelihood(z)))
    }
}

/// UKF update of `g` with a detected box.
pub fn ukf_update(
    g: &GaussianDensity,
    z: &BBox2D,
    camera: &CameraModel,
    noise: &DMatrix<f64>,
) -> Result<(GaussianDensity, f64)> {
    PredictedMeasurement::new(g, camera, noise)?.update(&z.to_vector())
}

/// Ellipsoidal gate; returns the pass flag and the squared distance.
pub fn gate(
    g: &GaussianDensity,
    z: &BBox2D,
    camera: &CameraModel,
    noise: &DMatrix<f64>,
    threshold: f64,
) -> Result<(bool, f64)> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter("gate threshold must be > 0".into()));
    }
    Ok(PredictedMeasurement::new(g, camera, noise)?.gate(&z.to_vector(), threshold))
}

/// Projected 2D box and its covariance.
pub fn project_density(g: &GaussianDensity, camera: &CameraModel) -> Result<GaussianDensity> {
    Ok(unscented_transform(g, |x| project_vector(x, camera), UtConfig::default())?.density)
}
