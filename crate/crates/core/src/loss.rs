//! Loss functions for finite sets.
//!
//! * `f_G = ||phi[G]||^2`, the minimum-degree sum-of-squares loss;
//! * the simplicial loss of `Delta_n(a) = {0, a_1 e_1, ..., a_n e_n}`,
//!   `sum x_i^2 (x_i - a_i)^2 + sum_{i<j} x_i^2 x_j^2`, which has no spurious
//!   local minimizers;
//! * transformed simplicial losses `F_{k-1}(z(x))` where `z(x)` maps the set
//!   onto the vertices of the standard simplex in `R^{k-1}`.

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::generating::{GeneratingMatrix, PointSet};
use crate::linalg::{pseudo_inverse, singular_value_ratio, RANK_MIN_RATIO};
use crate::monomial::{build_b0, omega_jacobian, omega_lift, MonomialBasis};
use crate::render::{fmt_magnitude, fmt_polynomial};

/// Value and gradient of a loss at a point.
#[derive(Clone, Debug)]
pub struct LossEval {
    pub value: f64,
    pub gradient: DVector<f64>,
}

/// `f_G(x) = ||phi[G](x)||^2` with its gradient `2 J^T phi`.
pub fn loss_g(g: &GeneratingMatrix, x: &[f64]) -> Result<LossEval> {
    let phi = g.eval_phi(x)?;
    let jac = g.phi_jacobian(x)?;
    Ok(LossEval {
        value: phi.norm_squared(),
        gradient: jac.tr_mul(&phi) * 2.0,
    })
}

/// Hessian of `f_G`: `2 J^T J + 2 sum_alpha phi_alpha * hess(phi_alpha)`.
pub fn loss_g_hessian(g: &GeneratingMatrix, x: &[f64]) -> Result<DMatrix<f64>> {
    let phi = g.eval_phi(x)?;
    let jac = g.phi_jacobian(x)?;
    let mut h = jac.tr_mul(&jac);
    for (p, hp) in phi.iter().zip(g.phi_hessians(x)?) {
        h += hp * *p;
    }
    Ok(h * 2.0)
}

/// Loss of the simplex vertex set `Delta_n(a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialLoss {
    a: DVector<f64>,
}

/// Value, gradient and Hessian of a simplicial loss.
#[derive(Clone, Debug)]
pub struct SimplicialEval {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl SimplicialLoss {
    pub fn new(a: DVector<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("simplicial loss needs n >= 1"));
        }
        if a.iter().any(|v| !(v.abs() > 1e-12) || !v.is_finite()) {
            return Err(Error::invalid("simplex scales a_i must be nonzero"));
        }
        Ok(SimplicialLoss { a })
    }

    /// The standard simplex `Delta_n`, all scales one.
    pub fn standard(n: usize) -> Self {
        SimplicialLoss {
            a: DVector::from_element(n, 1.0),
        }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn scales(&self) -> &DVector<f64> {
        &self.a
    }

    /// The vertices `0, a_1 e_1, ..., a_n e_n`.
    pub fn vertices(&self) -> Vec<DVector<f64>> {
        let n = self.n();
        let mut out = vec![DVector::zeros(n)];
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = self.a[i];
            out.push(v);
        }
        out
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let mut f = 0.0;
        let mut cross = 0.0;
        for (&xi, &ai) in x.iter().zip(self.a.iter()) {
            let d = xi - ai;
            f += xi * xi * d * d;
            cross += xi * xi * (sq - xi * xi);
        }
        f + 0.5 * cross
    }

    pub fn value_gradient(&self, x: &[f64]) -> LossEval {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let gradient = DVector::from_iterator(
            x.len(),
            x.iter().zip(self.a.iter()).map(|(&xi, &ai)| {
                let rest = sq - xi * xi;
                2.0 * xi * (2.0 * xi * xi - 3.0 * ai * xi + rest + ai * ai)
            }),
        );
        LossEval {
            value: self.value(x),
            gradient,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<SimplicialEval> {
        check_dim(self.n(), x.len(), "simplicial loss")?;
        let LossEval { value, gradient } = self.value_gradient(x);
        let n = self.n();
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let hessian = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let (xi, ai) = (x[i], self.a[i]);
                12.0 * xi * xi - 12.0 * ai * xi + 2.0 * (sq - xi * xi + ai * ai)
            } else {
                4.0 * x[i] * x[j]
            }
        });
        Ok(SimplicialEval {
            value,
            gradient,
            hessian,
        })
    }
}

/// Value, gradient and Hessian of the simplicial loss for `Delta_n(a)` at `x`.
pub fn simplicial_loss(a: &[f64], x: &[f64]) -> Result<SimplicialEval> {
    SimplicialLoss::new(DVector::from_column_slice(a))?.eval(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    /// `k <= n + 1`: affine map through the pseudo-inverse of `U`.
    CaseI,
    /// `k > n + 1`: monomial lift followed by the inverse of `L`.
    CaseII,
}

#[derive(Clone, Debug)]
enum TransformMap {
    Affine {
        u: DMatrix<f64>,
        u_pinv: DMatrix<f64>,
    },
    Lifted {
        l: DMatrix<f64>,
        lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        lu_t: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        b0: MonomialBasis,
        anchor_lift: DVector<f64>,
    },
}

/// Simplicial loss `F_{k-1}` composed with a map sending `u_i -> e_i`
/// (`i < k`) and the anchor `u_k -> 0`.
#[derive(Clone, Debug)]
pub struct TransformedLoss {
    points: PointSet,
    map: TransformMap,
    inner: SimplicialLoss,
}

#[derive(Serialize, Deserialize)]
struct RawTransformedLoss {
    kind: TransformKind,
    points: PointSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u_pinv: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l_inv: Option<Vec<Vec<f64>>>,
}

fn mat_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl Serialize for TransformedLoss {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut raw = RawTransformedLoss {
            kind: self.kind(),
            points: self.points.clone(),
            u: None,
            u_pinv: None,
            l: None,
            l_inv: None,
        };
        match &self.map {
            TransformMap::Affine { u, u_pinv } => {
                raw.u = Some(mat_rows(u));
                raw.u_pinv = Some(mat_rows(u_pinv));
            }
            TransformMap::Lifted { l, lu, .. } => {
                raw.l = Some(mat_rows(l));
                raw.l_inv = lu.try_inverse().map(|m| mat_rows(&m));
            }
        }
        raw.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for TransformedLoss {
    /// The stored matrices are derived data; the loss is rebuilt from the points.
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTransformedLoss::deserialize(de)?;
        let built = match raw.kind {
            TransformKind::CaseI => TransformedLoss::case1(&raw.points),
            TransformKind::CaseII => TransformedLoss::case2(&raw.points),
        };
        built.map_err(serde::de::Error::custom)
    }
}

impl TransformedLoss {
    /// Case I when `k <= n + 1`, Case II otherwise.
    pub fn build(s: &PointSet) -> Result<Self> {
        if s.k() <= s.n() + 1 {
            Self::case1(s)
        } else {
            Self::case2(s)
        }
    }

    /// `f(x) = F_{k-1}(U^+ (x - u_k))` with `U = [u_1 - u_k, ..., u_{k-1} - u_k]`.
    pub fn case1(s: &PointSet) -> Result<Self> {
        let (n, k) = (s.n(), s.k());
        if k < 2 {
            return Err(Error::invalid(
                "transformed losses need at least two points",
            ));
        }
        if k > n + 1 {
            return Err(Error::invalid(format!(
                "case I needs k <= n + 1 (k = {k}, n = {n})"
            )));
        }
        let anchor = s.point(k - 1);
        let cols: Vec<DVector<f64>> = (0..k - 1).map(|i| s.point(i) - anchor).collect();
        let u = DMatrix::from_columns(&cols);
        let u_pinv = pseudo_inverse(&u)?;
        Ok(TransformedLoss {
            points: s.clone(),
            map: TransformMap::Affine { u, u_pinv },
            inner: SimplicialLoss::standard(k - 1),
        })
    }

    /// `f(x) = F_{k-1}(L^{-1} (omega(x) - omega(u_k)))`.
    pub fn case2(s: &PointSet) -> Result<Self> {
        let (n, k) = (s.n(), s.k());
        if k <= n + 1 {
            return Err(Error::invalid(format!(
                "case II needs k > n + 1 (k = {k}, n = {n})"
            )));
        }
        let b0 = build_b0(n, k)?;
        let lifts: Vec<DVector<f64>> = s
            .points()
            .iter()
            .map(|p| omega_lift(p.as_slice(), &b0))
            .collect::<Result<_>>()?;
        let anchor_lift = lifts[k - 1].clone();
        let cols: Vec<DVector<f64>> = lifts[..k - 1].iter().map(|w| w - &anchor_lift).collect();
        let l = DMatrix::from_columns(&cols);
        let ratio = singular_value_ratio(&l);
        if !(ratio >= RANK_MIN_RATIO) {
            return Err(Error::degenerate(
                "lifted difference matrix L is singular",
                ratio,
            ));
        }
        let lu = l.clone().lu();
        let lu_t = l.transpose().lu();
        Ok(TransformedLoss {
            points: s.clone(),
            map: TransformMap::Lifted {
                l,
                lu,
                lu_t,
                b0,
                anchor_lift,
            },
            inner: SimplicialLoss::standard(k - 1),
        })
    }

    pub fn kind(&self) -> TransformKind {
        match self.map {
            TransformMap::Affine { .. } => TransformKind::CaseI,
            TransformMap::Lifted { .. } => TransformKind::CaseII,
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.n()
    }

    pub fn k(&self) -> usize {
        self.points.k()
    }

    /// `U` (Case I only).
    pub fn u(&self) -> Option<&DMatrix<f64>> {
        match &self.map {
            TransformMap::Affine { u, .. } => Some(u),
            _ => None,
        }
    }

    /// `U^+` (Case I only).
    pub fn u_pinv(&self) -> Option<&DMatrix<f64>> {
        match &self.map {
            TransformMap::Affine { u_pinv, .. } => Some(u_pinv),
            _ => None,
        }
    }

    /// `L` (Case II only).
    pub fn l(&self) -> Option<&DMatrix<f64>> {
        match &self.map {
            TransformMap::Lifted { l, .. } => Some(l),
            _ => None,
        }
    }

    /// `L^{-1}` (Case II only).
    pub fn l_inverse(&self) -> Option<DMatrix<f64>> {
        match &self.map {
            TransformMap::Lifted { lu, .. } => lu.try_inverse(),
            _ => None,
        }
    }

    /// Image of `x` in `R^{k-1}`, where the set maps onto the simplex vertices.
    pub fn z_of(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.n(), x.len(), "transformed loss")?;
        let anchor = self.points.point(self.k() - 1);
        match &self.map {
            TransformMap::Affine { u_pinv, .. } => {
                Ok(u_pinv * (DVector::from_column_slice(x) - anchor))
            }
            TransformMap::Lifted {
                lu,
                b0,
                anchor_lift,
                ..
            } => {
                let d = omega_lift(x, b0)? - anchor_lift;
                lu.solve(&d)
                    .ok_or_else(|| Error::NumericalFailure("singular L in solve".into()))
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let z = self.z_of(x)?;
        Ok(self.inner.value(z.as_slice()))
    }

    /// Value and gradient via the chain rule through `z(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<LossEval> {
        let z = self.z_of(x)?;
        let inner = self.inner.value_gradient(z.as_slice());
        let gradient = match &self.map {
            TransformMap::Affine { u_pinv, .. } => u_pinv.tr_mul(&inner.gradient),
            TransformMap::Lifted { lu_t, b0, .. } => {
                let w = lu_t
                    .solve(&inner.gradient)
                    .ok_or_else(|| Error::NumericalFailure("singular L in solve".into()))?;
                omega_jacobian(x, b0)?.tr_mul(&w)
            }
        };
        Ok(LossEval {
            value: inner.value,
            gradient,
        })
    }

    /// Closed-form text of the loss for small cases (`n <= 3`, `k <= 4`).
    pub fn describe(&self) -> Option<String> {
        if self.n() > 3 || self.k() > 4 {
            return None;
        }
        let m = self.k() - 1;
        let anchor = self.points.point(self.k() - 1);
        // affine expression of each z_i in terms of x-monomials
        let (basis, coeffs): (Vec<crate::monomial::ExponentVector>, DMatrix<f64>) = match &self.map
        {
            TransformMap::Affine { u_pinv, .. } => {
                let n = self.n();
                let mut basis: Vec<_> = (0..n)
                    .map(|i| crate::monomial::ExponentVector::unit(n, i))
                    .collect();
                basis.push(crate::monomial::ExponentVector::zero(n));
                let offset = -(u_pinv * anchor);
                let mut c = DMatrix::zeros(m, n + 1);
                c.view_mut((0, 0), (m, n)).copy_from(u_pinv);
                c.set_column(n, &offset);
                (basis, c)
            }
            TransformMap::Lifted {
                lu,
                b0,
                anchor_lift,
                ..
            } => {
                let l_inv = lu.try_inverse()?;
                let mut basis: Vec<_> = b0.members()[1..].to_vec();
                basis.push(b0.members()[0].clone());
                let offset = -(&l_inv * anchor_lift);
                let mut c = DMatrix::zeros(m, m + 1);
                c.view_mut((0, 0), (m, m)).copy_from(&l_inv);
                c.set_column(m, &offset);
                (basis, c)
            }
        };
        let z: Vec<String> = (0..m)
            .map(|i| {
                fmt_polynomial(
                    basis.iter().enumerate().map(|(j, b)| (coeffs[(i, j)], b)),
                    "x",
                )
            })
            .collect();
        let zm1: Vec<String> = (0..m)
            .map(|i| {
                let mut terms: Vec<(f64, &crate::monomial::ExponentVector)> = basis
                    .iter()
                    .enumerate()
                    .map(|(j, b)| (coeffs[(i, j)], b))
                    .collect();
                let last = terms.len() - 1;
                terms[last].0 -= 1.0;
                fmt_polynomial(terms, "x")
            })
            .collect();
        let mut parts = Vec::new();
        for i in 0..m {
            parts.push(format!("({})^2*({})^2", z[i], zm1[i]));
        }
        for i in 0..m {
            for j in i + 1..m {
                parts.push(format!("({})^2*({})^2", z[i], z[j]));
            }
        }
        Some(parts.join(" + "))
    }
}

/// Short text of the simplicial loss for `Delta_n(a)`.
pub fn describe_simplicial(loss: &SimplicialLoss) -> String {
    let n = loss.n();
    let mut parts = Vec::new();
    for i in 0..n {
        parts.push(format!(
            "x{}^2*(x{} {} {})^2",
            i + 1,
            i + 1,
            if loss.a[i] < 0.0 { "+" } else { "-" },
            fmt_magnitude(loss.a[i])
        ));
    }
    for i in 0..n {
        for j in i + 1..n {
            parts.push(format!("x{}^2*x{}^2", i + 1, j + 1));
        }
    }
    parts.join(" + ")
}
