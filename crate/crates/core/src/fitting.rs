//! Fitting a generating matrix to noisy samples.
//!
//! Minimizes `theta(G) = (1/N) sum_j ||phi[G](v_j)||^2` subject to the
//! multiplication matrices `M_{x_i}(G)` commuting. The constraint is handled
//! by an augmented-Lagrangian outer loop around a Levenberg-Marquardt solver
//! on the stacked residuals `phi[G](v_j) / sqrt(N)` and `sqrt(rho) * C(G)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::generating::{multiplication_structure, ColumnSource, GeneratingMatrix, PointSet};
use crate::linalg::{min_eigenvalue_sym, singular_value_ratio, RANK_MIN_RATIO};
use crate::monomial::{build_b0, build_b1, MonomialBasis};

/// Samples `v_1, ..., v_N` in `R^n`; duplicates allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampleSet", into = "RawSampleSet")]
pub struct SampleSet {
    n: usize,
    samples: Vec<DVector<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawSampleSet {
    n: usize,
    samples: Vec<Vec<f64>>,
}

impl TryFrom<RawSampleSet> for SampleSet {
    type Error = Error;
    fn try_from(raw: RawSampleSet) -> Result<Self> {
        let s = SampleSet::from_rows(&raw.samples)?;
        check_dim(raw.n, s.n, "sample set")?;
        Ok(s)
    }
}

impl From<SampleSet> for RawSampleSet {
    fn from(s: SampleSet) -> Self {
        RawSampleSet {
            n: s.n,
            samples: s.rows(),
        }
    }
}

impl SampleSet {
    pub fn new(samples: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::invalid("sample set is empty"));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::invalid("samples must have dimension >= 1"));
        }
        for v in &samples {
            check_dim(n, v.len(), "sample")?;
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("sample coordinates must be finite"));
            }
        }
        Ok(SampleSet { n, samples })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect()
    }
}

impl From<&PointSet> for SampleSet {
    fn from(s: &PointSet) -> Self {
        SampleSet {
            n: s.n(),
            samples: s.points().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Initial penalty weight.
    pub rho0: f64,
    /// Penalty growth per outer round when feasibility stalls.
    pub growth: f64,
    pub max_rounds: usize,
    pub max_inner: usize,
    /// Inner stop: norm of the gradient of the penalized objective.
    pub grad_tol: f64,
    /// Inner stop: relative step length.
    pub step_tol: f64,
    /// Inner stop: relative decrease of the penalized objective.
    pub decrease_tol: f64,
    /// Commutator target, relative to `1 + ||G||_F`.
    pub feasibility_tol: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            rho0: 1.0,
            growth: 10.0,
            max_rounds: 8,
            max_inner: 200,
            grad_tol: 1e-10,
            step_tol: 1e-14,
            decrease_tol: 1e-15,
            feasibility_tol: 1e-8,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho0", self.rho0),
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("decrease_tol", self.decrease_tol),
            ("feasibility_tol", self.feasibility_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if !(self.growth > 1.0) {
            return Err(Error::invalid("growth must exceed 1"));
        }
        if self.max_rounds == 0 || self.max_inner == 0 {
            return Err(Error::invalid("iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub g_star: GeneratingMatrix,
    pub objective: f64,
    /// `theta` at the unconstrained least-squares start.
    pub initial_objective: f64,
    pub commutator_norm: f64,
    pub feasibility_target: f64,
    pub h_min_eig: f64,
    pub iterations: usize,
    pub rounds: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Rows `[v_j]_B0^T` and `[v_j]_B1^T`.
fn sample_matrices(
    t: &SampleSet,
    b0: &MonomialBasis,
    b1: &MonomialBasis,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_dim(b0.n(), t.n(), "sample set")?;
    let n_s = t.len();
    let mut a = DMatrix::zeros(n_s, b0.len());
    let mut y = DMatrix::zeros(n_s, b1.len());
    for (j, v) in t.samples().iter().enumerate() {
        a.set_row(j, &b0.eval(v.as_slice())?.transpose());
        y.set_row(j, &b1.eval(v.as_slice())?.transpose());
    }
    Ok((a, y))
}

/// `theta(G) = (1/N) sum_j ||phi[G](v_j)||^2`.
pub fn theta(g: &GeneratingMatrix, t: &SampleSet) -> Result<f64> {
    let (a, y) = sample_matrices(t, g.b0(), g.b1())?;
    Ok((y - a * g.matrix()).norm_squared() / t.len() as f64)
}

/// Moment matrix `H = (2/N) sum_j [v_j]_B0 [v_j]_B0^T` and its smallest eigenvalue.
pub fn conditioning(t: &SampleSet, k: usize) -> Result<(DMatrix<f64>, f64)> {
    let b0 = build_b0(t.n(), k)?;
    let mut a = DMatrix::zeros(t.len(), k);
    for (j, v) in t.samples().iter().enumerate() {
        a.set_row(j, &b0.eval(v.as_slice())?.transpose());
    }
    let h = a.tr_mul(&a) * (2.0 / t.len() as f64);
    let min = min_eigenvalue_sym(&h)?.max(0.0);
    // rank <= N
    let min = if t.len() < k { 0.0 } else { min };
    Ok((h, min))
}

fn least_squares(a: &DMatrix<f64>, y: &DMatrix<f64>, h_min: f64) -> Result<DMatrix<f64>> {
    let ratio = singular_value_ratio(a);
    if a.nrows() < a.ncols() || !(ratio >= RANK_MIN_RATIO) {
        return Err(Error::degenerate(
            format!("sample moment matrix is rank deficient (lambda_min(H) = {h_min:e})"),
            h_min,
        ));
    }
    a.clone()
        .svd(true, true)
        .solve(y, 0.0)
        .map_err(|e| Error::NumericalFailure(e.to_string()))
}

/// Unconstrained minimizer of `theta`, one linear least-squares problem per column.
pub fn init_least_squares(t: &SampleSet, k: usize) -> Result<GeneratingMatrix> {
    let b0 = build_b0(t.n(), k)?;
    let b1 = build_b1(&b0);
    let (a, y) = sample_matrices(t, &b0, &b1)?;
    let (_, h_min) = conditioning(t, k)?;
    let g = least_squares(&a, &y, h_min)?;
    GeneratingMatrix::new(b0, b1, g)
}

/// Derivative structure of the commutators in the entries of `G`.
struct CommutatorModel {
    k: usize,
    m: usize,
    sources: Vec<Vec<ColumnSource>>,
    /// `cols[i][a]`: columns of `M_{x_i}` that copy column `a` of `G`.
    cols: Vec<Vec<Vec<usize>>>,
}

impl CommutatorModel {
    fn new(b0: &MonomialBasis, b1: &MonomialBasis) -> Self {
        let sources = multiplication_structure(b0, b1);
        let (k, m) = (b0.len(), b1.len());
        let cols = sources
            .iter()
            .map(|src| {
                let mut c = vec![Vec::new(); m];
                for (nu, s) in src.iter().enumerate() {
                    if let ColumnSource::GColumn(a) = s {
                        c[*a].push(nu);
                    }
                }
                c
            })
            .collect();
        CommutatorModel {
            k,
            m,
            sources,
            cols,
        }
    }

    fn n(&self) -> usize {
        self.sources.len()
    }

    fn pairs(&self) -> usize {
        self.n() * (self.n() - 1) / 2
    }

    fn mats(&self, g: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        self.sources
            .iter()
            .map(|src| {
                let mut mi = DMatrix::zeros(self.k, self.k);
                for (nu, s) in src.iter().enumerate() {
                    match s {
                        ColumnSource::Unit(r) => mi[(*r, nu)] = 1.0,
                        ColumnSource::GColumn(a) => mi.set_column(nu, &g.column(*a)),
                    }
                }
                mi
            })
            .collect()
    }

    /// Stacked commutator entries, pair-major, each pair column-major.
    fn residual(&self, mats: &[DMatrix<f64>]) -> DVector<f64> {
        let kk = self.k * self.k;
        let mut out = DVector::zeros(self.pairs() * kk);
        let mut p = 0;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let c = &mats[i] * &mats[j] - &mats[j] * &mats[i];
                out.rows_mut(p * kk, kk).copy_from_slice(c.as_slice());
                p += 1;
            }
        }
        out
    }

    /// Jacobian of `residual` with respect to `vec(G)` (column-major).
    fn jacobian(&self, mats: &[DMatrix<f64>]) -> DMatrix<f64> {
        let (k, m, n) = (self.k, self.m, self.n());
        let kk = k * k;
        let mut jac = DMatrix::zeros(self.pairs() * kk, k * m);
        let mut dm = vec![DMatrix::zeros(k, k); n];
        for a in 0..m {
            for beta in 0..k {
                for (i, d) in dm.iter_mut().enumerate() {
                    d.fill(0.0);
                    for &nu in &self.cols[i][a] {
                        d[(beta, nu)] = 1.0;
                    }
                }
                let col = a * k + beta;
                let mut p = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        let dc = &dm[i] * &mats[j] + &mats[i] * &dm[j]
                            - &dm[j] * &mats[i]
                            - &mats[j] * &dm[i];
                        jac.view_mut((p * kk, col), (kk, 1))
                            .copy_from_slice(dc.as_slice());
                        p += 1;
                    }
                }
            }
        }
        jac
    }
}

/// Stacked residuals `[phi[G](v_j)/sqrt(N); sqrt(rho) * commutator entries]`.
///
/// The sample block is ordered column of `G` first, then sample.
pub fn penalty_residuals(g: &GeneratingMatrix, t: &SampleSet, rho: f64) -> Result<DVector<f64>> {
    let (a, y) = sample_matrices(t, g.b0(), g.b1())?;
    let model = CommutatorModel::new(g.b0(), g.b1());
    let r = (y - a * g.matrix()) / (t.len() as f64).sqrt();
    let c = model.residual(&model.mats(g.matrix())) * rho.sqrt();
    let mut out = DVector::zeros(r.len() + c.len());
    out.rows_mut(0, r.len()).copy_from_slice(r.as_slice());
    out.rows_mut(r.len(), c.len()).copy_from(&c);
    Ok(out)
}

/// Jacobian of `penalty_residuals` with respect to `vec(G)` (column-major).
pub fn penalty_jacobian(g: &GeneratingMatrix, t: &SampleSet, rho: f64) -> Result<DMatrix<f64>> {
    let (a, _) = sample_matrices(t, g.b0(), g.b1())?;
    let model = CommutatorModel::new(g.b0(), g.b1());
    let (n_s, k, m) = (t.len(), g.k(), g.b1().len());
    let jc = model.jacobian(&model.mats(g.matrix())) * rho.sqrt();
    let mut jac = DMatrix::zeros(n_s * m + jc.nrows(), k * m);
    let scale = -1.0 / (n_s as f64).sqrt();
    for col in 0..m {
        jac.view_mut((col * n_s, col * k), (n_s, k))
            .copy_from(&(&a * scale));
    }
    jac.view_mut((n_s * m, 0), jc.shape()).copy_from(&jc);
    Ok(jac)
}

struct Problem<'a> {
    a: &'a DMatrix<f64>,
    y: &'a DMatrix<f64>,
    /// `A^T A / N`, the per-column Gauss-Newton block of the sample residuals.
    ata: DMatrix<f64>,
    model: CommutatorModel,
    inv_n: f64,
}

impl Problem<'_> {
    fn theta(&self, g: &DMatrix<f64>) -> f64 {
        (self.y - self.a * g).norm_squared() * self.inv_n
    }

    /// Augmented objective `theta + rho * ||C + mult / rho||^2`.
    fn merit(&self, g: &DMatrix<f64>, rho: f64, mult: &DVector<f64>) -> f64 {
        let c = self.model.residual(&self.model.mats(g));
        self.theta(g) + rho * (c + mult / rho).norm_squared()
    }
}

struct InnerOutcome {
    iterations: usize,
}

/// Levenberg-Marquardt on the augmented residuals for fixed `rho`, `mult`.
fn lm_inner(
    prob: &Problem,
    g: &mut DMatrix<f64>,
    rho: f64,
    mult: &DVector<f64>,
    opts: &FitOptions,
) -> InnerOutcome {
    let (k, m) = (g.nrows(), g.ncols());
    let dim = k * m;
    let mut lambda = 1e-3;
    let mut merit = prob.merit(g, rho, mult);
    let mut iterations = 0;
    while iterations < opts.max_inner {
        iterations += 1;
        let mats = prob.model.mats(g);
        let c = prob.model.residual(&mats) + mult / rho;
        let jc = prob.model.jacobian(&mats);
        // half-gradient of the merit function
        let sample_grad = (prob.a.tr_mul(&(prob.a * &*g - prob.y))) * prob.inv_n;
        let grad = DVector::from_column_slice(sample_grad.as_slice()) + jc.tr_mul(&c) * rho;
        if grad.norm() <= opts.grad_tol {
            break;
        }
        let mut normal = jc.tr_mul(&jc) * rho;
        for col in 0..m {
            let mut blk = normal.view_mut((col * k, col * k), (k, k));
            blk += &prob.ata;
        }
        let diag_floor = 1e-12 * normal.diagonal().max().max(1e-300);
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = normal.clone();
            for d in 0..dim {
                damped[(d, d)] += lambda * normal[(d, d)].max(diag_floor);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = &*g + DMatrix::from_column_slice(k, m, step.as_slice());
            let trial_merit = prob.merit(&trial, rho, mult);
            if trial_merit.is_finite() && trial_merit < merit {
                let decrease = (merit - trial_merit) / merit.max(1e-300);
                let small_step = step.norm() <= opts.step_tol * (g.norm() + opts.step_tol);
                *g = trial;
                merit = trial_merit;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if decrease <= opts.decrease_tol || small_step {
                    return InnerOutcome { iterations };
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    InnerOutcome { iterations }
}

/// Local solution of the commutator-constrained least-squares problem.
pub fn fit_g(t: &SampleSet, k: usize, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let b0 = build_b0(t.n(), k)?;
    let b1 = build_b1(&b0);
    let (a, y) = sample_matrices(t, &b0, &b1)?;
    let (_, h_min) = conditioning(t, k)?;
    let mut warnings = Vec::new();
    if t.len() < k {
        warnings.push(format!("only {} samples for k = {k}", t.len()));
    }
    let mut g = least_squares(&a, &y, h_min)?;
    let inv_n = 1.0 / t.len() as f64;
    let prob = Problem {
        ata: a.tr_mul(&a) * inv_n,
        a: &a,
        y: &y,
        model: CommutatorModel::new(&b0, &b1),
        inv_n,
    };
    let initial_objective = prob.theta(&g);
    let comm_norm = |g: &DMatrix<f64>| prob.model.residual(&prob.model.mats(g)).norm();
    let target = |g: &DMatrix<f64>| opts.feasibility_tol * (1.0 + g.norm());

    let mut rho = opts.rho0;
    let mut mult = DVector::zeros(prob.model.pairs() * k * k);
    let mut comm = comm_norm(&g);
    let mut iterations = 0;
    let mut rounds = 0;
    while comm > target(&g) && rounds < opts.max_rounds {
        rounds += 1;
        iterations += lm_inner(&prob, &mut g, rho, &mult, opts).iterations;
        let c = prob.model.residual(&prob.model.mats(&g));
        let new_comm = c.norm();
        mult += &c * rho;
        if new_comm > 0.25 * comm {
            rho *= opts.growth;
        }
        comm = new_comm;
    }
    let converged = comm <= target(&g);
    if !converged {
        warnings.push(format!(
            "commutator norm {comm:e} above target {:e} after {rounds} rounds",
            target(&g)
        ));
    }
    Ok(FitResult {
        objective: prob.theta(&g),
        initial_objective,
        commutator_norm: comm,
        feasibility_target: target(&g),
        h_min_eig: h_min,
        iterations,
        rounds,
        converged,
        warnings,
        g_star: GeneratingMatrix::new(b0, b1, g)?,
    })
}
