//! Random-finite-set building blocks: Gaussian densities and mixtures,
//! Bernoulli and Poisson components, global data-association hypotheses,
//! and the weight bookkeeping shared by the PMBM filter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue tolerance for accepting a covariance as PSD.
const PSD_CHECK_TOL: f64 = 1e-9;
/// Relative eigenvalue tolerance below which repair refuses to clamp.
const PSD_REPAIR_TOL: f64 = 1e-6;

/// Gaussian density over a real vector space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianDensity {
    /// Validates dimensions, symmetry and positive semi-definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_shape(&mean, &cov)?;
        let scale = cov.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::InvalidDensity(format!(
                "covariance not symmetric (max asymmetry {asym:e})"
            )));
        }
        let min_eig = min_eigenvalue(&cov);
        if min_eig < -PSD_CHECK_TOL * cov.trace().abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidDensity(format!(
                "covariance not PSD (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { mean, cov })
    }

    /// Symmetrizes the covariance and clamps slightly negative eigenvalues
    /// to zero. Fails when an eigenvalue is below `-1e-6 * trace`.
    pub fn repaired(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_shape(&mean, &cov)?;
        let cov = repair_psd(cov)?;
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }

    /// Log of the density at `x`.
    pub fn log_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        log_normal_pdf(&(x - &self.mean), &self.cov)
    }
}

fn check_shape(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<()> {
    if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
        return Err(Error::InvalidDensity(format!(
            "mean has dimension {} but covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidDensity("non-finite entry".into()));
    }
    Ok(())
}

fn min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    if cov.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(cov.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetrize `(C + Cᵀ)/2`, then clamp eigenvalues in `[-1e-6·tr, 0)` to 0.
pub fn repair_psd(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (&cov + cov.transpose()) * 0.5;
    if sym.is_empty() || nalgebra::Cholesky::new(sym.clone()).is_some() {
        return Ok(sym);
    }
    let tol = PSD_REPAIR_TOL * sym.trace().abs();
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 || sym.is_empty() {
        return Ok(sym);
    }
    if min < -tol {
        return Err(Error::InvalidDensity(format!(
            "covariance has eigenvalue {min:e} below -1e-6·trace"
        )));
    }
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    Ok((&rebuilt + rebuilt.transpose()) * 0.5)
}

/// `log N(d; 0, cov)` for an innovation `d`.
pub fn log_normal_pdf(d: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let chol = cov.clone().cholesky().ok_or(Error::SingularInnovation)?;
    let n = d.len() as f64;
    let sol = chol.solve(d);
    let maha = d.dot(&sol);
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + maha))
}

/// Weighted list of Gaussian densities of a common dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<GaussianDensity>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianDensity>) -> Result<Self> {
        if weights.len() != components.len() {
            return Err(Error::InvalidDensity("weight and component counts differ".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDensity("negative or non-finite weight".into()));
        }
        if let Some(first) = components.first() {
            if components.iter().any(|c| c.dim() != first.dim()) {
                return Err(Error::InvalidDensity("component dimensions differ".into()));
            }
        }
        Ok(Self { weights, components })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianDensity] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &GaussianDensity)> {
        self.weights.iter().copied().zip(self.components.iter())
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for w in &mut self.weights {
            *w *= factor;
        }
        self
    }

    pub fn push(&mut self, weight: f64, component: GaussianDensity) {
        self.weights.push(weight);
        self.components.push(component);
    }

    /// Moment-matched single Gaussian. `None` when the total weight is zero.
    pub fn moment_match(&self) -> Option<Result<GaussianDensity>> {
        let total = self.total_weight();
        if self.is_empty() || total <= 0.0 {
            return None;
        }
        let dim = self.components[0].dim();
        let mut mean = DVector::zeros(dim);
        for (w, c) in self.iter() {
            mean += c.mean() * (w / total);
        }
        let mut cov = DMatrix::zeros(dim, dim);
        for (w, c) in self.iter() {
            let d = c.mean() - &mean;
            cov += (c.cov() + &d * d.transpose()) * (w / total);
        }
        Some(GaussianDensity::repaired(mean, cov))
    }
}

/// A Bernoulli RFS: empty with probability `1 - existence`, otherwise a single
/// state drawn from `density`. The label identifies the track it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub existence: f64,
    pub density: GaussianDensity,
    pub label: u64,
}

impl BernoulliComponent {
    pub fn new(existence: f64, density: GaussianDensity, label: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&existence) {
            return Err(Error::InvalidParameter(format!(
                "existence probability {existence} outside [0, 1]"
            )));
        }
        Ok(Self {
            existence,
            density,
            label,
        })
    }
}

/// Intensity of a Poisson point process as an unnormalized Gaussian mixture.
/// Total mass is the expected number of points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoissonIntensity {
    pub mixture: GaussianMixture,
}

impl PoissonIntensity {
    pub fn new(mixture: GaussianMixture) -> Self {
        Self { mixture }
    }

    pub fn total_mass(&self) -> f64 {
        self.mixture.total_weight()
    }

    /// Drops components with mass below `min_mass` and keeps at most `cap`
    /// of the heaviest ones. Order among survivors is preserved.
    pub fn prune(&mut self, min_mass: f64, cap: usize) {
        let mut keep: Vec<usize> = (0..self.mixture.len())
            .filter(|&i| self.mixture.weights[i] >= min_mass)
            .collect();
        if keep.len() > cap {
            keep.sort_by(|&a, &b| {
                self.mixture.weights[b]
                    .total_cmp(&self.mixture.weights[a])
                    .then(a.cmp(&b))
            });
            keep.truncate(cap);
            keep.sort_unstable();
        }
        let weights = keep.iter().map(|&i| self.mixture.weights[i]).collect();
        let components = keep.iter().map(|&i| self.mixture.components[i].clone()).collect();
        self.mixture = GaussianMixture { weights, components };
    }
}

/// One consistent data-association history: for each track, the index of
/// the local hypothesis it uses, or `None` when the track holds no object
/// under this hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalHypothesis {
    pub log_weight: f64,
    pub assignment: Vec<Option<usize>>,
}

/// A track: the local hypotheses (single-Bernoulli alternatives) that global
/// hypotheses may select for one potential object.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub label: u64,
    pub hypotheses: Vec<BernoulliComponent>,
}

/// Poisson multi-Bernoulli mixture posterior.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PmbmPosterior {
    pub undetected: PoissonIntensity,
    pub tracks: Vec<Track>,
    pub globals: Vec<GlobalHypothesis>,
    /// Label handed to the next new track.
    pub next_label: u64,
}

impl PmbmPosterior {
    /// Highest-weight global hypothesis.
    pub fn best_global(&self) -> Option<&GlobalHypothesis> {
        self.globals.iter().max_by(|a, b| a.log_weight.total_cmp(&b.log_weight))
    }

    /// Prunes and caps the global hypotheses, then garbage-collects local
    /// hypotheses no global references and tracks whose referenced
    /// hypotheses all have existence below `min_existence`.
    pub fn prune_and_cap(&mut self, log_threshold: f64, cap: usize, min_existence: f64) {
        let globals = std::mem::take(&mut self.globals);
        self.globals = prune_and_cap(globals, log_threshold, cap);
        self.collect_garbage(min_existence);
    }

    fn collect_garbage(&mut self, min_existence: f64) {
        let n_tracks = self.tracks.len();
        // Drop tracks that only ever hold negligible existence.
        for t in 0..n_tracks {
            let alive = self.globals.iter().any(|g| {
                g.assignment[t]
                    .map(|l| self.tracks[t].hypotheses[l].existence >= min_existence)
                    .unwrap_or(false)
            });
            if !alive {
                for g in &mut self.globals {
                    g.assignment[t] = None;
                }
            }
        }
        let mut new_tracks = Vec::new();
        let mut track_map = vec![None; n_tracks];
        for (t, track) in self.tracks.iter().enumerate() {
            let mut used: Vec<usize> = self.globals.iter().filter_map(|g| g.assignment[t]).collect();
            if used.is_empty() {
                continue;
            }
            used.sort_unstable();
            used.dedup();
            let mut remap = vec![usize::MAX; track.hypotheses.len()];
            let hyps = used
                .iter()
                .enumerate()
                .map(|(new, &old)| {
                    remap[old] = new;
                    track.hypotheses[old].clone()
                })
                .collect();
            track_map[t] = Some((new_tracks.len(), remap));
            new_tracks.push(Track {
                label: track.label,
                hypotheses: hyps,
            });
        }
        for g in &mut self.globals {
            let mut assignment = vec![None; new_tracks.len()];
            for (t, entry) in g.assignment.iter().enumerate() {
                if let (Some(l), Some((nt, remap))) = (entry, &track_map[t]) {
                    assignment[*nt] = Some(remap[*l]);
                }
            }
            g.assignment = assignment;
        }
        self.tracks = new_tracks;
    }
}

/// Result of converting a multi-Bernoulli birth into its best Poisson fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonFit {
    /// Expected number of points.
    pub beta: f64,
    /// Normalized spatial density; empty when `beta == 0`.
    pub spatial: GaussianMixture,
    /// Set when `beta == 0` and the spatial density is undefined.
    pub degenerate: bool,
}

/// Best Poisson approximation of a multi-Bernoulli RFS: the expected count is
/// the sum of existence probabilities and the spatial density weights each
/// component by `r / beta`.
pub fn mb_to_poisson(components: &[(f64, GaussianDensity)]) -> Result<PoissonFit> {
    if let Some((r, _)) = components.iter().find(|(r, _)| !(0.0..=1.0).contains(r)) {
        return Err(Error::InvalidParameter(format!(
            "existence probability {r} outside [0, 1]"
        )));
    }
    let beta: f64 = components.iter().map(|(r, _)| r).sum();
    if beta <= 0.0 {
        return Ok(PoissonFit {
            beta: 0.0,
            spatial: GaussianMixture::empty(),
            degenerate: true,
        });
    }
    let spatial = GaussianMixture::new(
        components.iter().map(|(r, _)| r / beta).collect(),
        components.iter().map(|(_, d)| d.clone()).collect(),
    )?;
    Ok(PoissonFit {
        beta,
        spatial,
        degenerate: false,
    })
}

/// Normalizes log-weights with the max-shift log-sum-exp. Returns the
/// normalized log-weights and the log normalizer.
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    let max = log_weights
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if log_weights.is_empty() || !max.is_finite() {
        return Err(Error::DegenerateHypotheses);
    }
    let sum: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    let norm = max + sum.ln();
    Ok((log_weights.iter().map(|w| w - norm).collect(), norm))
}

/// Removes hypotheses whose normalized log-weight falls below
/// `log_threshold`, keeps at most `cap` of the best, and renormalizes.
/// The best hypothesis always survives. Output is sorted by decreasing
/// weight, ties broken by assignment order.
pub fn prune_and_cap(globals: Vec<GlobalHypothesis>, log_threshold: f64, cap: usize) -> Vec<GlobalHypothesis> {
    if globals.is_empty() {
        return globals;
    }
    let mut globals = globals;
    globals.sort_by(|a, b| {
        b.log_weight
            .total_cmp(&a.log_weight)
            .then_with(|| a.assignment.cmp(&b.assignment))
    });
    let best = globals[0].log_weight;
    let weights: Vec<f64> = globals.iter().map(|g| g.log_weight).collect();
    let norm = match normalize_log_weights(&weights) {
        Ok((_, norm)) => norm,
        Err(_) => best,
    };
    let cap = cap.max(1);
    let mut kept: Vec<GlobalHypothesis> = globals
        .into_iter()
        .enumerate()
        .filter(|(i, g)| *i == 0 || g.log_weight - norm >= log_threshold)
        .map(|(_, g)| g)
        .take(cap)
        .collect();
    let weights: Vec<f64> = kept.iter().map(|g| g.log_weight).collect();
    if let Ok((normalized, _)) = normalize_log_weights(&weights) {
        for (g, w) in kept.iter_mut().zip(normalized) {
            g.log_weight = w;
        }
    } else {
        let uniform = -(kept.len() as f64).ln();
        for g in &mut kept {
            g.log_weight = uniform;
        }
    }
    kept
}
