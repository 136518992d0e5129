//! Generating polynomials of a finite set.
//!
//! For `S = {u_1, ..., u_k}` the matrix `G` (rows `B0`, columns `B1`) defines
//! `phi[G, alpha](x) = x^alpha - sum_beta G(beta, alpha) x^beta`. With
//! `G = X0^{-T} X1^T` the tuple vanishes exactly on `S` and generates its
//! vanishing ideal.

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{solve_linear_guarded, RANK_MIN_RATIO};
use crate::monomial::{build_b0, build_b1, MonomialBasis};
use crate::render::fmt_polynomial;

/// Points closer than this in the infinity norm are considered equal.
pub const DISTINCT_TOL: f64 = 1e-12;

/// An ordered finite set of real points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSet", into = "RawPointSet")]
pub struct PointSet {
    n: usize,
    points: Vec<DVector<f64>>,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawPointSet {
    n: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<RawPointSet> for PointSet {
    type Error = Error;

    fn try_from(raw: RawPointSet) -> Result<Self> {
        let mut ps = PointSet::from_rows(&raw.points)?;
        check_dim(raw.n, ps.n, "point set")?;
        if let Some(labels) = raw.labels {
            ps = ps.with_labels(labels)?;
        }
        Ok(ps)
    }
}

impl From<PointSet> for RawPointSet {
    fn from(ps: PointSet) -> Self {
        RawPointSet {
            n: ps.n,
            points: ps
                .points
                .iter()
                .map(|p| p.iter().copied().collect())
                .collect(),
            labels: ps.labels,
        }
    }
}

impl PointSet {
    /// Validated set: nonempty, equal dimensions, finite, pairwise distinct.
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let ps = Self::new_unchecked(points)?;
        for i in 0..ps.points.len() {
            for j in 0..i {
                if (&ps.points[i] - &ps.points[j]).amax() <= DISTINCT_TOL {
                    return Err(Error::invalid(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(ps)
    }

    /// Like [`PointSet::new`] but tolerates repeated points.
    pub fn new_unchecked(points: Vec<DVector<f64>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::invalid("point set must not be empty"))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::invalid("points must have positive dimension"));
        }
        for p in &points {
            check_dim(n, p.len(), "point set")?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("point coordinates must be finite"));
            }
        }
        Ok(PointSet {
            n,
            points,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.points.len(), labels.len(), "point labels")?;
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.iter().copied().collect())
            .collect()
    }
}

/// Matrix whose `j`-th column is `[u_j]_basis`, shape `|basis| x k`.
pub fn vandermonde(s: &PointSet, basis: &MonomialBasis) -> Result<DMatrix<f64>> {
    check_dim(basis.n(), s.n(), "vandermonde")?;
    let cols: Vec<DVector<f64>> = s
        .points()
        .iter()
        .map(|p| basis.eval(p.as_slice()))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// The matrix `G` of a generating system, rows indexed by `B0` and columns by `B1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeneratingMatrix", into = "RawGeneratingMatrix")]
pub struct GeneratingMatrix {
    b0: MonomialBasis,
    b1: MonomialBasis,
    g: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawGeneratingMatrix {
    n: usize,
    k: usize,
    b0: MonomialBasis,
    b1: MonomialBasis,
    g: Vec<Vec<f64>>,
}

impl TryFrom<RawGeneratingMatrix> for GeneratingMatrix {
    type Error = Error;

    fn try_from(raw: RawGeneratingMatrix) -> Result<Self> {
        check_dim(raw.n, raw.b0.n(), "generating matrix n")?;
        check_dim(raw.k, raw.b0.len(), "generating matrix k")?;
        check_dim(raw.k, raw.g.len(), "generating matrix rows")?;
        let cols = raw.b1.len();
        let mut g = DMatrix::zeros(raw.k, cols);
        for (r, row) in raw.g.iter().enumerate() {
            check_dim(cols, row.len(), "generating matrix columns")?;
            for (c, v) in row.iter().enumerate() {
                g[(r, c)] = *v;
            }
        }
        GeneratingMatrix::new(raw.b0, raw.b1, g)
    }
}

impl From<GeneratingMatrix> for RawGeneratingMatrix {
    fn from(gm: GeneratingMatrix) -> Self {
        RawGeneratingMatrix {
            n: gm.n(),
            k: gm.k(),
            g: gm
                .g
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            b0: gm.b0,
            b1: gm.b1,
        }
    }
}

/// Where a column of a multiplication matrix comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ColumnSource {
    /// `x_i * x^nu` is the `B0` member at this row.
    Unit(usize),
    /// `x_i * x^nu` is the `B1` member at this column of `G`.
    GColumn(usize),
}

/// `sources[i][nu]` describes column `nu` of `M_{x_i}`.
pub(crate) fn multiplication_structure(
    b0: &MonomialBasis,
    b1: &MonomialBasis,
) -> Vec<Vec<ColumnSource>> {
    (0..b0.n())
        .map(|i| {
            b0.members()
                .iter()
                .map(|nu| {
                    let shifted = nu.shifted(i);
                    if let Some(r) = b0.index_of(&shifted) {
                        ColumnSource::Unit(r)
                    } else {
                        ColumnSource::GColumn(
                            b1.index_of(&shifted)
                                .expect("one-step shifts of B0 lie in B0 or B1"),
                        )
                    }
                })
                .collect()
        })
        .collect()
}

impl GeneratingMatrix {
    pub fn new(b0: MonomialBasis, b1: MonomialBasis, g: DMatrix<f64>) -> Result<Self> {
        check_dim(b0.n(), b1.n(), "B0/B1 dimension")?;
        if g.shape() != (b0.len(), b1.len()) {
            return Err(Error::invalid(format!(
                "G must be {}x{}, got {}x{}",
                b0.len(),
                b1.len(),
                g.nrows(),
                g.ncols()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("G entries must be finite"));
        }
        Ok(GeneratingMatrix { b0, b1, g })
    }

    /// `G` for dimension `n` and cardinality `k` from raw entries, using the
    /// standard `B0`/`B1`.
    pub fn from_entries(n: usize, k: usize, g: DMatrix<f64>) -> Result<Self> {
        let b0 = build_b0(n, k)?;
        let b1 = build_b1(&b0);
        Self::new(b0, b1, g)
    }

    pub fn n(&self) -> usize {
        self.b0.n()
    }

    pub fn k(&self) -> usize {
        self.b0.len()
    }

    pub fn b0(&self) -> &MonomialBasis {
        &self.b0
    }

    pub fn b1(&self) -> &MonomialBasis {
        &self.b1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Same bases, new entries.
    pub fn with_matrix(&self, g: DMatrix<f64>) -> Result<Self> {
        Self::new(self.b0.clone(), self.b1.clone(), g)
    }

    fn g_as<T: ComplexField>(&self) -> DMatrix<T> {
        self.g.map(|v| T::from_subset(&v))
    }

    /// `phi[G](x) = [x]_B1 - G^T [x]_B0`.
    pub fn eval_phi<T: ComplexField>(&self, x: &[T]) -> Result<DVector<T>> {
        check_dim(self.n(), x.len(), "eval_phi")?;
        let m0 = self.b0.eval(x)?;
        let m1 = self.b1.eval(x)?;
        Ok(m1 - self.g_as::<T>().tr_mul(&m0))
    }

    /// Jacobian of `phi[G]`, shape `|B1| x n`.
    pub fn phi_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.n(), x.len(), "phi_jacobian")?;
        let j0 = self.b0.jacobian(x)?;
        let j1 = self.b1.jacobian(x)?;
        Ok(j1 - self.g.tr_mul(&j0))
    }

    /// Hessian of each `phi[G, alpha]`, in `B1` order.
    pub fn phi_hessians(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let h0 = self.b0.hessians(x)?;
        let h1 = self.b1.hessians(x)?;
        Ok(h1
            .into_iter()
            .enumerate()
            .map(|(a, mut h)| {
                for (b, hb) in h0.iter().enumerate() {
                    let c = self.g[(b, a)];
                    if c != 0.0 {
                        h -= hb * c;
                    }
                }
                h
            })
            .collect())
    }

    /// Multiplication matrices `M_{x_1}(G), ..., M_{x_n}(G)`.
    pub fn mult_matrices(&self) -> MultiplicationMatrices {
        let k = self.k();
        let mats = multiplication_structure(&self.b0, &self.b1)
            .into_iter()
            .map(|sources| {
                let mut m = DMatrix::zeros(k, k);
                for (nu, src) in sources.into_iter().enumerate() {
                    match src {
                        ColumnSource::Unit(r) => m[(r, nu)] = 1.0,
                        ColumnSource::GColumn(a) => m.set_column(nu, &self.g.column(a)),
                    }
                }
                m
            })
            .collect();
        MultiplicationMatrices { mats }
    }

    /// All pairwise commutators and their combined Frobenius norm.
    pub fn commutator_residual(&self) -> CommutatorResidual {
        self.mult_matrices().commutators()
    }

    /// The polynomials of `phi[G]`, one line each.
    pub fn describe(&self) -> Vec<String> {
        self.b1
            .members()
            .iter()
            .enumerate()
            .map(|(a, alpha)| {
                let mut terms = vec![(1.0, alpha)];
                for (b, beta) in self.b0.members().iter().enumerate().rev() {
                    terms.push((-self.g[(b, a)], beta));
                }
                fmt_polynomial(terms, "x")
            })
            .collect()
    }
}

/// `G = X0^{-T} X1^T` for the standard bases of `S`.
pub fn solve_g(s: &PointSet) -> Result<GeneratingMatrix> {
    let b0 = build_b0(s.n(), s.k())?;
    let b1 = build_b1(&b0);
    let x0 = vandermonde(s, &b0)?;
    let x1 = vandermonde(s, &b1)?;
    let g = solve_linear_guarded(
        &x0.transpose(),
        &x1.transpose(),
        RANK_MIN_RATIO,
        "Vandermonde matrix X0",
    )?;
    GeneratingMatrix::new(b0, b1, g)
}

#[derive(Clone, Debug)]
pub struct MultiplicationMatrices {
    pub mats: Vec<DMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct CommutatorResidual {
    pub total: f64,
    /// `M_i M_j - M_j M_i` for `i < j`, in lexicographic pair order.
    pub pairs: Vec<DMatrix<f64>>,
}

impl MultiplicationMatrices {
    pub fn n(&self) -> usize {
        self.mats.len()
    }

    pub fn commutators(&self) -> CommutatorResidual {
        let mut pairs = Vec::new();
        for i in 0..self.mats.len() {
            for j in i + 1..self.mats.len() {
                pairs.push(&self.mats[i] * &self.mats[j] - &self.mats[j] * &self.mats[i]);
            }
        }
        let total = pairs.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
        CommutatorResidual { total, pairs }
    }
}
