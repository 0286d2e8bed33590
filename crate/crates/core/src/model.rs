//! The standard point-object model specialized to monocular pedestrian
//! tracking: pinhole projection of a planar 3D box, bounding-box measurement
//! noise, clutter, continuous-time motion, M/M/∞ survival and birth, and the
//! Gaussian-mixture birth design.
//!
//! State layout is `[x ẋ y ẏ z ż ω h]` (metres, metres per second), with
//! `(x, y, z)` the bottom centre of the box in camera coordinates. A
//! measurement is `[x y ω h]` in pixels with `(x, y)` the bottom centre.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rfs::{GaussianDensity, GaussianMixture};

pub const STATE_DIM: usize = 8;
pub const MEAS_DIM: usize = 4;

/// Index of the depth component in the state vector.
pub const DEPTH: usize = 4;

/// Noise-shape matrix of the FRCNN measurement covariance, in units of
/// `γ² · 1e-5` px².
pub const FRCNN_NOISE_SHAPE: [[f64; 4]; 4] = [
    [2.029, 0.223, 0.073, 0.248],
    [0.223, 3.051, 2.549, 0.285],
    [0.073, 2.549, 4.880, 0.179],
    [0.248, 0.285, 0.179, 2.032],
];

/// 2D bounding box in pixels, anchored at its bottom centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2D {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox2D {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Self { x, y, width, height }
    }

    /// From the MOT top-left convention.
    pub fn from_tlwh(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self::new(left + width / 2.0, top + height, width, height)
    }

    pub fn left(&self) -> f64 {
        self.x - self.width / 2.0
    }

    pub fn top(&self) -> f64 {
        self.y - self.height
    }

    pub fn area(&self) -> f64 {
        self.width.max(0.0) * self.height.max(0.0)
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.x, self.y, self.width, self.height])
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Pinhole camera and sequence timing.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub focal_length: f64,
    pub pixel_size: f64,
    pub principal_point: [f64; 2],
    pub image_width: f64,
    pub image_height: f64,
    pub frame_rate: f64,
}

impl CameraModel {
    pub fn new(
        focal_length: f64,
        pixel_size: f64,
        principal_point: [f64; 2],
        image_width: f64,
        image_height: f64,
        frame_rate: f64,
    ) -> Result<Self> {
        let positive = [
            ("focal_length", focal_length),
            ("pixel_size", pixel_size),
            ("image_width", image_width),
            ("image_height", image_height),
            ("frame_rate", frame_rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self {
            focal_length,
            pixel_size,
            principal_point,
            image_width,
            image_height,
            frame_rate,
        })
    }

    /// f = 1 mm, 1 µm pixels, principal point at the image centre.
    pub fn with_default_intrinsics(image_width: f64, image_height: f64, frame_rate: f64) -> Result<Self> {
        Self::new(
            1e-3,
            1e-6,
            [image_width / 2.0, image_height / 2.0],
            image_width,
            image_height,
            frame_rate,
        )
    }

    /// Sampling period in seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.frame_rate
    }

    /// `min(width, height)`.
    pub fn gamma(&self) -> f64 {
        self.image_width.min(self.image_height)
    }

    /// Pixels per metre at depth `z`.
    pub fn scale_at(&self, z: f64) -> f64 {
        self.focal_length / (self.pixel_size * z)
    }
}

/// Projects a 3D state onto the image plane.
pub fn project(state: &DVector<f64>, camera: &CameraModel) -> Result<BBox2D> {
    Ok(BBox2D::from_slice(project_vector(state, camera)?.as_slice()))
}

pub(crate) fn project_vector(state: &DVector<f64>, camera: &CameraModel) -> Result<DVector<f64>> {
    let z = state[DEPTH];
    if !(z > 1e-9) {
        return Err(Error::NonPositiveDepth(z));
    }
    let s = camera.scale_at(z);
    Ok(DVector::from_vec(vec![
        s * state[0] + camera.principal_point[0],
        s * state[2] + camera.principal_point[1],
        s * state[6],
        s * state[7],
    ]))
}

/// Measurement noise covariance `γ²·1e-5·M`.
pub fn measurement_covariance(camera: &CameraModel) -> DMatrix<f64> {
    let g2 = camera.gamma().powi(2) * 1e-5;
    DMatrix::from_fn(MEAS_DIM, MEAS_DIM, |i, j| g2 * FRCNN_NOISE_SHAPE[i][j])
}

/// Single-object motion parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    /// Power spectral densities of the velocity noise, m²s⁻³.
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
    pub mean_width: f64,
    pub mean_height: f64,
    /// Time constants of the width/height mean reversion, s.
    pub tau_width: f64,
    pub tau_height: f64,
    pub sigma_width: f64,
    pub sigma_height: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            q_x: 1.0,
            q_y: 1.0,
            q_z: 1.0,
            mean_width: 0.85,
            mean_height: 1.65,
            tau_width: 0.4,
            tau_height: 4.0,
            sigma_width: 0.15,
            sigma_height: 0.1,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("q_x", self.q_x),
            ("q_y", self.q_y),
            ("q_z", self.q_z),
            ("mean_width", self.mean_width),
            ("mean_height", self.mean_height),
            ("tau_width", self.tau_width),
            ("tau_height", self.tau_height),
            ("sigma_width", self.sigma_width),
            ("sigma_height", self.sigma_height),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("motion.{name} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Linear-Gaussian transition `x' = F x + m + w`, `w ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub noise: DMatrix<f64>,
}

/// Exact discretization of the continuous-time pedestrian dynamics over `dt`.
pub fn transition(dt: f64, params: &MotionParams) -> Result<Transition> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("period must be >= 0, got {dt}")));
    }
    let a_w = (-dt / params.tau_width).exp();
    let a_h = (-dt / params.tau_height).exp();
    let mut f = DMatrix::identity(STATE_DIM, STATE_DIM);
    let mut q = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let t3 = dt.powi(3) / 3.0;
    let t2 = dt.powi(2) / 2.0;
    for (axis, psd) in [params.q_x, params.q_y, params.q_z].into_iter().enumerate() {
        let p = 2 * axis;
        f[(p, p + 1)] = dt;
        q[(p, p)] = psd * t3;
        q[(p, p + 1)] = psd * t2;
        q[(p + 1, p)] = psd * t2;
        q[(p + 1, p + 1)] = psd * dt;
    }
    f[(6, 6)] = a_w;
    f[(7, 7)] = a_h;
    q[(6, 6)] = params.sigma_width.powi(2) * (1.0 - a_w * a_w);
    q[(7, 7)] = params.sigma_height.powi(2) * (1.0 - a_h * a_h);
    let mut offset = DVector::zeros(STATE_DIM);
    offset[6] = (1.0 - a_w) * params.mean_width;
    offset[7] = (1.0 - a_h) * params.mean_height;
    Ok(Transition {
        matrix: f,
        offset,
        noise: q,
    })
}

/// Population dynamics of the M/M/∞ model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationParams {
    /// Mean lifespan `L`, seconds.
    pub mean_lifespan: f64,
    /// Birth rate `η`, objects per second.
    pub birth_rate: f64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        Self {
            mean_lifespan: 7.481,
            birth_rate: 1.925,
        }
    }
}

/// `e^(-T/L)`.
pub fn survival_probability(dt: f64, mean_lifespan: f64) -> f64 {
    (-dt / mean_lifespan).exp()
}

/// `η · L · (1 - e^(-T/L))`.
pub fn birth_expected_count(dt: f64, mean_lifespan: f64, birth_rate: f64) -> f64 {
    birth_rate * mean_lifespan * (1.0 - survival_probability(dt, mean_lifespan))
}

/// Poisson clutter with a product-of-uniforms spatial density that allows
/// boxes to hang partially outside the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterModel {
    pub lambda: f64,
    /// Support as `[lo, hi]` per measurement coordinate.
    pub support: [[f64; 2]; 4],
}

impl ClutterModel {
    pub fn new(lambda: f64, camera: &CameraModel) -> Self {
        let (w, h) = (camera.image_width, camera.image_height);
        Self {
            lambda,
            support: [
                [-0.25 * w, 1.25 * w],
                [0.0, 1.5 * h],
                [0.0, 0.5 * w],
                [0.0, 4.0 / 3.0 * h],
            ],
        }
    }

    pub fn log_density(&self, z: &BBox2D) -> f64 {
        let v = [z.x, z.y, z.width, z.height];
        let mut log = 0.0;
        for (x, [lo, hi]) in v.iter().zip(self.support) {
            if !(lo..=hi).contains(x) {
                return f64::NEG_INFINITY;
            }
            log -= (hi - lo).ln();
        }
        log
    }
}

pub fn clutter_log_density(z: &BBox2D, camera: &CameraModel) -> f64 {
    ClutterModel::new(0.0, camera).log_density(z)
}

/// Geometry of the Gaussian-mixture birth density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirthDesign {
    pub z_min: f64,
    pub z_max: f64,
    pub components: usize,
    /// Maximum pedestrian speed, m/s; velocity std is a third of it.
    pub max_speed: f64,
}

impl Default for BirthDesign {
    fn default() -> Self {
        Self {
            z_min: 2.0,
            z_max: 15.0,
            components: 10,
            max_speed: 3.0,
        }
    }
}

/// Poisson birth: expected count plus a normalized spatial mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthModel {
    pub expected_count: f64,
    pub mixture: GaussianMixture,
}

impl BirthModel {
    pub fn with_expected_count(&self, expected_count: f64) -> Self {
        Self {
            expected_count,
            mixture: self.mixture.clone(),
        }
    }
}

/// Depths of the birth components, uniformly spaced in `1/z`.
pub fn birth_depths(z_min: f64, z_max: f64, n: usize) -> Vec<f64> {
    let (a, b) = (1.0 / z_min, 1.0 / z_max);
    if n == 1 {
        return vec![2.0 / (a + b)];
    }
    (0..n)
        .map(|l| 1.0 / (a + (b - a) * l as f64 / (n - 1) as f64))
        .collect()
}

/// Builds the equal-weight birth mixture spanning the optical axis.
///
/// Each component sits on the ray through the image centre. Its lateral
/// standard deviations put the `√8`-sigma points (the UKF sigma points for an
/// 8-dimensional state) on the image borders, and its depth standard
/// deviation puts them halfway to the nearest neighbouring component.
pub fn build_birth(
    camera: &CameraModel,
    design: &BirthDesign,
    motion: &MotionParams,
    expected_count: f64,
) -> Result<BirthModel> {
    if !(design.z_min > 0.0 && design.z_max > design.z_min) {
        return Err(Error::InvalidDepthRange {
            z_min: design.z_min,
            z_max: design.z_max,
        });
    }
    if design.components == 0 {
        return Err(Error::InvalidParameter("birth.components must be >= 1".into()));
    }
    if !(expected_count >= 0.0) {
        return Err(Error::InvalidParameter("expected birth count must be >= 0".into()));
    }
    let sqrt8 = 8f64.sqrt();
    let depths = birth_depths(design.z_min, design.z_max, design.components);
    let vel_var = (design.max_speed / 3.0).powi(2);
    let n = depths.len();
    let mut comps = Vec::with_capacity(n);
    for (l, &z) in depths.iter().enumerate() {
        let metres_per_px = 1.0 / camera.scale_at(z);
        let half_gap = if n == 1 {
            (z - design.z_min).min(design.z_max - z)
        } else {
            let prev = if l > 0 { z - depths[l - 1] } else { f64::INFINITY };
            let next = if l + 1 < n { depths[l + 1] - z } else { f64::INFINITY };
            prev.abs().min(next.abs()) / 2.0
        };
        let mut mean = DVector::zeros(STATE_DIM);
        mean[0] = (camera.image_width / 2.0 - camera.principal_point[0]) * metres_per_px;
        mean[2] = (camera.image_height / 2.0 - camera.principal_point[1]) * metres_per_px;
        mean[DEPTH] = z;
        mean[6] = motion.mean_width;
        mean[7] = motion.mean_height;
        let sx = camera.image_width / 2.0 * metres_per_px / sqrt8;
        let sy = camera.image_height / 2.0 * metres_per_px / sqrt8;
        let sz = half_gap / sqrt8;
        let diag = DVector::from_vec(vec![
            sx * sx,
            vel_var,
            sy * sy,
            vel_var,
            sz * sz,
            vel_var,
            motion.sigma_width.powi(2),
            motion.sigma_height.powi(2),
        ]);
        comps.push(GaussianDensity::new(mean, DMatrix::from_diagonal(&diag))?);
    }
    let w = 1.0 / n as f64;
    Ok(BirthModel {
        expected_count,
        mixture: GaussianMixture::new(vec![w; n], comps)?,
    })
}

/// Camera intrinsics; the principal point defaults to the image centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntrinsicsParams {
    pub focal_length: f64,
    pub pixel_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub principal_point: Option<[f64; 2]>,
}

impl Default for IntrinsicsParams {
    fn default() -> Self {
        Self {
            focal_length: 1e-3,
            pixel_size: 1e-6,
            principal_point: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    pub probability: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self { probability: 0.529 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterParams {
    pub lambda: f64,
}

impl Default for ClutterParams {
    fn default() -> Self {
        Self { lambda: 1.552 }
    }
}

/// Sequence-independent model parameters, as stored in the config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub camera: IntrinsicsParams,
    pub motion: MotionParams,
    pub population: PopulationParams,
    pub detection: DetectionParams,
    pub clutter: ClutterParams,
    pub birth: BirthDesign,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        if !(self.population.mean_lifespan > 0.0) {
            return Err(Error::InvalidParameter("population.mean_lifespan must be > 0".into()));
        }
        if !(self.population.birth_rate >= 0.0) {
            return Err(Error::InvalidParameter("population.birth_rate must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.detection.probability) {
            return Err(Error::InvalidParameter(
                "detection.probability must be in [0, 1]".into(),
            ));
        }
        if !(self.clutter.lambda >= 0.0) {
            return Err(Error::InvalidParameter("clutter.lambda must be >= 0".into()));
        }
        Ok(())
    }

    /// Camera for a sequence of the given size and frame rate.
    pub fn camera(&self, image_width: f64, image_height: f64, frame_rate: f64) -> Result<CameraModel> {
        CameraModel::new(
            self.camera.focal_length,
            self.camera.pixel_size,
            self.camera
                .principal_point
                .unwrap_or([image_width / 2.0, image_height / 2.0]),
            image_width,
            image_height,
            frame_rate,
        )
    }
}

/// Every model quantity for one sequence, with the period-dependent terms
/// (`F`, `Q`, `P_S`, `β`) evaluated at that sequence's frame rate.
#[derive(Debug, Clone)]
pub struct SpoModel {
    pub camera: CameraModel,
    pub transition: Transition,
    pub survival: f64,
    pub detection: f64,
    pub clutter: ClutterModel,
    pub measurement_noise: DMatrix<f64>,
    pub birth: BirthModel,
}

impl SpoModel {
    pub fn new(params: &ModelParams, camera: CameraModel) -> Result<Self> {
        params.validate()?;
        let dt = camera.period();
        let pop = &params.population;
        let beta = birth_expected_count(dt, pop.mean_lifespan, pop.birth_rate);
        Ok(Self {
            transition: transition(dt, &params.motion)?,
            survival: survival_probability(dt, pop.mean_lifespan),
            detection: params.detection.probability,
            clutter: ClutterModel::new(params.clutter.lambda, &camera),
            measurement_noise: measurement_covariance(&camera),
            birth: build_birth(&camera, &params.birth, &params.motion, beta)?,
            camera,
        })
    }

    pub fn period(&self) -> f64 {
        self.camera.period()
    }
}
