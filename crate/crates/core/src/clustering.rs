//! End-to-end recovery of a finite set from samples, descent-based cluster
//! assignment, accuracy scoring and synthetic data generators.

use std::time::Instant;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descent::{minimize, DescentOptions};
use crate::error::{check_dim, Error, Result};
use crate::extraction::{extract_zeros, real_projection, ZeroSet};
use crate::fitting::{fit_g, FitOptions, FitResult, SampleSet};
use crate::generating::{solve_g, GeneratingMatrix, PointSet};
use crate::loss::{loss_g, LossEval, TransformedLoss};

/// Derive an independent stream seed from a master seed (splitmix64 step).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossChoice {
    #[default]
    Transformed,
    Fg,
}

/// The loss built for the recovered set.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RecoveryLoss {
    Transformed(TransformedLoss),
    Fg(GeneratingMatrix),
}

impl RecoveryLoss {
    pub fn eval(&self, x: &[f64]) -> Result<LossEval> {
        match self {
            RecoveryLoss::Transformed(tl) => tl.eval(x),
            RecoveryLoss::Fg(g) => loss_g(g, x),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.value)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Timings {
    pub fit_s: f64,
    pub extract_s: f64,
    pub loss_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryPipelineResult {
    pub fit: FitResult,
    pub zeros: ZeroSet,
    /// Real parts of the zeros.
    pub s_star: PointSet,
    pub loss: RecoveryLoss,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub timings: Timings,
}

/// Fit a generating matrix, extract its zeros and build a loss for them.
///
/// With `want_real` the `f_G` loss is rebuilt from the real parts so that it
/// vanishes on `s_star`; otherwise the fitted `G*` is used directly. The
/// transformed loss is always built from the real parts.
pub fn recover_set(
    t: &SampleSet,
    k: usize,
    opts: &FitOptions,
    want_real: bool,
    choice: LossChoice,
) -> Result<RecoveryPipelineResult> {
    let clock = Instant::now();
    let fit = fit_g(t, k, opts).map_err(|e| e.in_stage("fit"))?;
    let fit_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let zeros =
        extract_zeros(&fit.g_star, sub_seed(opts.seed, 1)).map_err(|e| e.in_stage("extract"))?;
    let (s_star, mut warnings) = real_projection(&zeros).map_err(|e| e.in_stage("extract"))?;
    let extract_s = clock.elapsed().as_secs_f64();
    warnings.extend(fit.warnings.iter().cloned());
    if zeros.approximate {
        warnings.push("zeros extracted from an approximately commuting system".into());
    }

    let clock = Instant::now();
    let loss = match choice {
        LossChoice::Transformed => RecoveryLoss::Transformed(
            TransformedLoss::build(&s_star).map_err(|e| e.in_stage("loss"))?,
        ),
        LossChoice::Fg if want_real => {
            RecoveryLoss::Fg(solve_g(&s_star).map_err(|e| e.in_stage("loss"))?)
        }
        LossChoice::Fg => RecoveryLoss::Fg(fit.g_star.clone()),
    };
    let loss_s = clock.elapsed().as_secs_f64();
    Ok(RecoveryPipelineResult {
        fit,
        zeros,
        s_star,
        loss,
        warnings,
        timings: Timings {
            fit_s,
            extract_s,
            loss_s,
        },
    })
}

#[derive(Clone, Debug)]
pub struct MinimizeOutcome {
    pub x_star: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Quasi-Newton descent on a loss from `v` (`||grad|| <= 1e-8` or 500 steps).
pub fn minimize_from(loss: &RecoveryLoss, v: &[f64]) -> Result<MinimizeOutcome> {
    minimize_with(loss, v, &DescentOptions::default())
}

pub fn minimize_with(
    loss: &RecoveryLoss,
    v: &[f64],
    opts: &DescentOptions,
) -> Result<MinimizeOutcome> {
    // surface dimension errors before the closure swallows them
    loss.eval(v)?;
    let r = minimize(
        |x| match loss.eval(x.as_slice()) {
            Ok(e) => (e.value, e.gradient),
            Err(_) => (f64::NAN, DVector::zeros(x.len())),
        },
        &DVector::from_column_slice(v),
        opts,
    );
    Ok(MinimizeOutcome {
        x_star: r.x,
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Label of the nearest vertex of the standard simplex in `R^{k-1}`:
/// `e_i` is label `i - 1` and the origin is the anchor, label `k - 1`.
/// Ties go to the lowest label. Returns the label and the distance.
pub fn vertex_label(z: &DVector<f64>) -> (usize, f64) {
    let m = z.len();
    let sq = z.norm_squared();
    let mut best = (m, sq.sqrt());
    for i in 0..m {
        let d = (sq - z[i] * z[i] + (z[i] - 1.0).powi(2)).max(0.0).sqrt();
        if d < best.1 || (d == best.1 && i < best.0) {
            best = (i, d);
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Distance from the label's target (simplex vertex in z-space for the
    /// transformed loss, recovered point for `f_G`).
    pub target_distance: Vec<f64>,
}

impl ClusterAssignment {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn non_converged(&self) -> usize {
        self.converged.iter().filter(|c| !**c).count()
    }
}

fn nearest_point(s: &PointSet, x: &DVector<f64>) -> (usize, f64) {
    s.points().iter().map(|u| (u - x).norm()).enumerate().fold(
        (0, f64::INFINITY),
        |best, (i, d)| if d < best.1 { (i, d) } else { best },
    )
}

/// Label one sample by descending from it.
pub fn label_sample(
    loss: &RecoveryLoss,
    s_star: &PointSet,
    v: &[f64],
) -> Result<(usize, f64, MinimizeOutcome)> {
    let out = minimize_from(loss, v)?;
    let (label, dist) = match loss {
        RecoveryLoss::Transformed(tl) => vertex_label(&tl.z_of(out.x_star.as_slice())?),
        RecoveryLoss::Fg(_) => nearest_point(s_star, &out.x_star),
    };
    Ok((label, dist, out))
}

/// Descend from every sample and label it by the point of `s_star` it reaches.
/// Non-converged descents are labeled from their last iterate.
pub fn assign_labels(
    loss: &RecoveryLoss,
    s_star: &PointSet,
    t: &SampleSet,
    threads: usize,
) -> Result<ClusterAssignment> {
    if let RecoveryLoss::Transformed(tl) = loss {
        if tl.k() != s_star.k() {
            return Err(Error::invalid("loss and recovered set disagree on k"));
        }
    }
    check_dim(s_star.n(), t.n(), "samples")?;
    let run = |v: &DVector<f64>| label_sample(loss, s_star, v.as_slice());
    let results: Vec<Result<_>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?;
        pool.install(|| t.samples().par_iter().map(run).collect())
    } else {
        t.samples().iter().map(run).collect()
    };
    let mut a = ClusterAssignment {
        labels: Vec::with_capacity(t.len()),
        points: Vec::with_capacity(t.len()),
        iterations: Vec::with_capacity(t.len()),
        converged: Vec::with_capacity(t.len()),
        target_distance: Vec::with_capacity(t.len()),
    };
    for r in results {
        let (label, dist, out) = r?;
        a.labels.push(label);
        a.points.push(out.x_star.iter().copied().collect());
        a.iterations.push(out.iterations);
        a.converged.push(out.converged);
        a.target_distance.push(dist);
    }
    Ok(a)
}

/// Fraction of samples whose label, after the cheapest matching of the
/// recovered points to the true means, equals the true component.
pub fn accuracy(
    labels: &[usize],
    truth: &[usize],
    s_star: &PointSet,
    true_means: &PointSet,
) -> Result<f64> {
    check_dim(labels.len(), truth.len(), "truth labels")?;
    check_dim(true_means.k(), s_star.k(), "recovered set size")?;
    check_dim(true_means.n(), s_star.n(), "recovered set dimension")?;
    let k = s_star.k();
    if k > 8 {
        return Err(Error::NotSupported(format!(
            "accuracy alignment is exhaustive and limited to k <= 8 (k = {k})"
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no labels to score"));
    }
    let cost = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| (s_star.point(i) - true_means.point(j)).norm_squared())
            .sum()
    };
    let best = (0..k)
        .permutations(k)
        .min_by(|a, b| cost(a).total_cmp(&cost(b)))
        .expect("at least one permutation");
    let hits = labels
        .iter()
        .zip(truth)
        .filter(|(&l, &t)| l < k && best[l] == t)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// A Gaussian mixture `(w_i, mu_i, Sigma_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGmm", into = "RawGmm")]
pub struct GmmSpec {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    diagonal: bool,
}

#[derive(Serialize, Deserialize)]
struct RawGmm {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    diagonal: bool,
}

impl TryFrom<RawGmm> for GmmSpec {
    type Error = Error;
    fn try_from(raw: RawGmm) -> Result<Self> {
        let means = raw
            .means
            .iter()
            .map(|m| DVector::from_column_slice(m))
            .collect();
        let covariances = raw
            .covariances
            .iter()
            .map(|c| {
                let n = c.len();
                if c.iter().any(|r| r.len() != n) {
                    return Err(Error::invalid("covariance must be square"));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| c[i][j]))
            })
            .collect::<Result<_>>()?;
        GmmSpec::new(raw.weights, means, covariances, raw.diagonal)
    }
}

impl From<GmmSpec> for RawGmm {
    fn from(g: GmmSpec) -> Self {
        RawGmm {
            weights: g.weights,
            means: g
                .means
                .iter()
                .map(|m| m.iter().copied().collect())
                .collect(),
            covariances: g
                .covariances
                .iter()
                .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
            diagonal: g.diagonal,
        }
    }
}

impl GmmSpec {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
        diagonal: bool,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::invalid(
                "mixture needs matching weights, means and covariances",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("mixture weights must be positive"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mixture weights must sum to one"));
        }
        let n = means[0].len();
        for (m, c) in means.iter().zip(&covariances) {
            check_dim(n, m.len(), "mixture mean")?;
            if c.shape() != (n, n) {
                return Err(Error::invalid("covariance shape does not match the means"));
            }
            if (c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
                return Err(Error::invalid("covariance must be symmetric"));
            }
            if c.clone().cholesky().is_none() {
                return Err(Error::invalid("covariance must be positive definite"));
            }
        }
        Ok(GmmSpec {
            weights,
            means,
            covariances,
            diagonal,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn n(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub fn means(&self) -> PointSet {
        PointSet::new_unchecked(self.means.clone()).expect("means share a dimension")
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

/// `N` draws from the mixture with their component indices.
pub fn gmm_sample(spec: &GmmSpec, count: usize, seed: u64) -> Result<(SampleSet, Vec<usize>)> {
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let factors: Vec<DMatrix<f64>> = spec
        .covariances
        .iter()
        .map(|c| c.clone().cholesky().map(|ch| ch.l()))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid("covariance must be positive definite"))?;
    let pick = WeightedIndex::new(&spec.weights).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n();
    let mut samples = Vec::with_capacity(count);
    let mut truth = Vec::with_capacity(count);
    for _ in 0..count {
        let c = pick.sample(&mut rng);
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        samples.push(&spec.means[c] + &factors[c] * z);
        truth.push(c);
    }
    Ok((SampleSet::new(samples)?, truth))
}

/// A random mixture in the style of the benchmark: `Sigma_i = R^T R` with
/// random `R` (diagonal if requested), weights from 1000 uniform component
/// draws, and means whose pairwise distances are at least
/// `separation * max_i sigma_max(R_i)`.
pub fn random_gmm(
    n: usize,
    k: usize,
    diagonal: bool,
    separation: f64,
    seed: u64,
) -> Result<GmmSpec> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("random mixture needs n, k >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; k];
    while counts.contains(&0) {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..1000 {
            counts[rng.random_range(0..k)] += 1;
        }
    }
    let weights: Vec<f64> = counts.iter().map(|c| *c as f64 / 1000.0).collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut factors = Vec::with_capacity(k);
    for _ in 0..k {
        loop {
            let r = if diagonal {
                DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.2..1.0)))
            } else {
                DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.6..0.6))
            };
            let sv = r.singular_values();
            if sv.min() > 0.1 * sv.max() {
                factors.push(r);
                break;
            }
        }
    }
    let spread = factors
        .iter()
        .map(|r| r.singular_values().max())
        .fold(0.0, f64::max);
    let min_dist = separation * spread;
    let half_width = min_dist * (k as f64).max(2.0) * 0.75;
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    while means.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::NumericalFailure(
                "could not place separated means".into(),
            ));
        }
        let m = DVector::from_fn(n, |_, _| rng.random_range(-half_width..half_width));
        if means.iter().all(|o| (o - &m).norm() >= min_dist) {
            means.push(m);
        }
    }
    let covariances = factors.iter().map(|r| r.tr_mul(r)).collect();
    GmmSpec::new(weights, means, covariances, diagonal)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    Uniform,
    /// Standard normal coordinates rejected outside `[-1, 1]`, scaled by the radius.
    #[default]
    TruncatedNormal,
}

/// `counts[i]` samples in the box `u_i + eps * [-1, 1]^n` around each point.
pub fn bounded_noise_sample(
    s: &PointSet,
    eps: f64,
    counts: &[usize],
    seed: u64,
    model: NoiseModel,
) -> Result<(SampleSet, Vec<usize>)> {
    bounded_noise_sample_radii(s, &vec![eps; s.k()], counts, seed, model)
}

/// As `bounded_noise_sample` with a separate box radius per point.
pub fn bounded_noise_sample_radii(
    s: &PointSet,
    radii: &[f64],
    counts: &[usize],
    seed: u64,
    model: NoiseModel,
) -> Result<(SampleSet, Vec<usize>)> {
    check_dim(s.k(), counts.len(), "counts")?;
    check_dim(s.k(), radii.len(), "radii")?;
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::invalid("noise radius must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        match model {
            NoiseModel::Uniform => rng.random_range(-1.0..=1.0),
            NoiseModel::TruncatedNormal => loop {
                let z: f64 = StandardNormal.sample(rng);
                if z.abs() <= 1.0 {
                    break z;
                }
            },
        }
    };
    let mut samples = Vec::with_capacity(counts.iter().sum());
    let mut truth = Vec::with_capacity(samples.capacity());
    for (i, (&c, &r)) in counts.iter().zip(radii).enumerate() {
        for _ in 0..c {
            let p = s.point(i).map(|x| x + r * draw(&mut rng));
            samples.push(p);
            truth.push(i);
        }
    }
    Ok((SampleSet::new(samples)?, truth))
}
