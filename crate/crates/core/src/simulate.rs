//! Generative sampler for the full model: birth-death population, 3D motion,
//! detection with projection noise, and uniform clutter.
//!
//! Randomness comes from `ChaCha8Rng`, so a seed fixes the scenario on every
//! platform.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, WeightedIndex};

use crate::error::{Error, Result};
use crate::inference::matrix_sqrt;
use crate::model::{project, BBox2D, SpoModel, DEPTH};
use crate::trajectory::TrajectorySet;

/// Completed life of one object, in 1-based frames (inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifespan {
    pub id: u64,
    pub first: usize,
    pub last: usize,
}

impl Lifespan {
    pub fn frames(&self) -> usize {
        self.last - self.first + 1
    }
}

/// Everything sampled for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub frame: usize,
    /// Live objects, ordered by id.
    pub objects: Vec<(u64, DVector<f64>)>,
    /// Detections of live objects, in object order, followed by clutter.
    pub detections: Vec<BBox2D>,
    pub births: usize,
    pub clutter: usize,
}

/// Step-by-step sampler; useful when a full scenario would not fit in memory.
pub struct Simulator {
    model: SpoModel,
    rng: ChaCha8Rng,
    motion_sqrt: DMatrix<f64>,
    noise_sqrt: DMatrix<f64>,
    birth_sqrts: Vec<DMatrix<f64>>,
    birth_pick: Option<WeightedIndex<f64>>,
    initial_mean: f64,
    objects: Vec<(u64, usize, DVector<f64>)>,
    finished: Vec<Lifespan>,
    frame: usize,
    next_id: u64,
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |p| p.sample(rng) as usize)
}

fn gaussian(rng: &mut ChaCha8Rng, mean: &DVector<f64>, sqrt: &DMatrix<f64>) -> DVector<f64> {
    let e = DVector::from_fn(mean.len(), |_, _| StandardNormal.sample(rng));
    mean + sqrt * e
}

impl Simulator {
    /// `initial_mean` is the expected population at frame 1; the stationary
    /// choice is `L·η`.
    pub fn new(model: SpoModel, initial_mean: f64, seed: u64) -> Result<Self> {
        if !(initial_mean >= 0.0 && initial_mean.is_finite()) {
            return Err(Error::InvalidParameter("initial population mean must be >= 0".into()));
        }
        let mixture = &model.birth.mixture;
        let birth_sqrts = mixture
            .components()
            .iter()
            .map(|c| matrix_sqrt(c.cov()))
            .collect::<Result<Vec<_>>>()?;
        let birth_pick = if mixture.total_weight() > 0.0 {
            Some(WeightedIndex::new(mixture.weights()).map_err(|e| Error::InvalidDensity(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            motion_sqrt: matrix_sqrt(&model.transition.noise)?,
            noise_sqrt: matrix_sqrt(&model.measurement_noise)?,
            birth_sqrts,
            birth_pick,
            initial_mean,
            rng: ChaCha8Rng::seed_from_u64(seed),
            objects: Vec::new(),
            finished: Vec::new(),
            frame: 0,
            next_id: 1,
            model,
        })
    }

    pub fn model(&self) -> &SpoModel {
        &self.model
    }

    /// Lives that ended before the current frame.
    pub fn finished(&self) -> &[Lifespan] {
        &self.finished
    }

    fn spawn(&mut self, count: usize) -> usize {
        let Some(pick) = &self.birth_pick else {
            return 0;
        };
        for _ in 0..count {
            let c = pick.sample(&mut self.rng);
            let mean = self.model.birth.mixture.components()[c].mean().clone();
            let state = gaussian(&mut self.rng, &mean, &self.birth_sqrts[c]);
            self.objects.push((self.next_id, self.frame, state));
            self.next_id += 1;
        }
        count
    }

    /// Advances one frame and samples its objects and detections.
    pub fn step(&mut self) -> FrameSample {
        self.frame += 1;
        let births = if self.frame == 1 {
            let n = poisson(&mut self.rng, self.initial_mean);
            self.spawn(n)
        } else {
            let ps = self.model.survival;
            let tr = &self.model.transition;
            let mut alive = Vec::with_capacity(self.objects.len());
            for (id, first, state) in std::mem::take(&mut self.objects) {
                if self.rng.gen::<f64>() < ps {
                    let mean = &tr.matrix * &state + &tr.offset;
                    alive.push((id, first, gaussian(&mut self.rng, &mean, &self.motion_sqrt)));
                } else {
                    self.finished.push(Lifespan {
                        id,
                        first,
                        last: self.frame - 1,
                    });
                }
            }
            self.objects = alive;
            let n = poisson(&mut self.rng, self.model.birth.expected_count);
            self.spawn(n)
        };

        let mut detections = Vec::new();
        for (_, _, state) in &self.objects {
            if self.rng.gen::<f64>() >= self.model.detection {
                continue;
            }
            // Objects behind the camera are not observable.
            let Ok(b) = project(state, &self.model.camera) else {
                continue;
            };
            let z = gaussian(&mut self.rng, &b.to_vector(), &self.noise_sqrt);
            detections.push(BBox2D::new(z[0], z[1], z[2].max(0.0), z[3].max(0.0)));
        }
        let clutter = poisson(&mut self.rng, self.model.clutter.lambda);
        for _ in 0..clutter {
            let s = self.model.clutter.support;
            let v: Vec<f64> = s.iter().map(|[lo, hi]| self.rng.gen_range(*lo..=*hi)).collect();
            detections.push(BBox2D::from_slice(&v));
        }

        FrameSample {
            frame: self.frame,
            objects: self.objects.iter().map(|(id, _, s)| (*id, s.clone())).collect(),
            detections,
            births,
            clutter,
        }
    }
}

/// A fully sampled scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Projected ground truth; objects at non-positive depth are omitted.
    pub gt: TrajectorySet,
    /// 3D states per frame, keyed by id.
    pub gt3d: Vec<BTreeMap<u64, DVector<f64>>>,
    pub detections: Vec<Vec<BBox2D>>,
    /// Newborn count per frame (frame 1 holds the initial population).
    pub births: Vec<usize>,
}

/// Samples `frames` frames with a stationary initial population `Poisson(L·η)`.
pub fn sample_scenario(model: &SpoModel, frames: usize, seed: u64, initial_mean: f64) -> Result<Scenario> {
    if frames == 0 {
        return Err(Error::InvalidParameter("frames must be >= 1".into()));
    }
    let mut sim = Simulator::new(model.clone(), initial_mean, seed)?;
    let mut gt = TrajectorySet::new(frames);
    let mut gt3d = Vec::with_capacity(frames);
    let mut detections = Vec::with_capacity(frames);
    let mut births = Vec::with_capacity(frames);
    for _ in 0..frames {
        let s = sim.step();
        for (id, state) in &s.objects {
            if state[DEPTH] > 1e-9 {
                let mut b = project(state, &model.camera)?;
                b.width = b.width.max(0.0);
                b.height = b.height.max(0.0);
                gt.insert(s.frame, *id, b);
            }
        }
        gt3d.push(s.objects.into_iter().collect());
        detections.push(s.detections);
        births.push(s.births);
    }
    Ok(Scenario {
        gt,
        gt3d,
        detections,
        births,
    })
}
