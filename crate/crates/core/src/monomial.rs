//! Exponent vectors, graded lexicographic order and the power sets `B0`/`B1`.
//!
//! `B0` holds the first `k` exponents of `N^n` in grlex order; `B1` is the set
//! of one-variable shifts of `B0` that fall outside it. The stored order of
//! both sets is the row/column order of every generating matrix downstream.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Exponent vector `alpha` of the monomial `x^alpha`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct ExponentVector {
    exps: Vec<u32>,
    degree: u32,
}

impl ExponentVector {
    pub fn new(exps: Vec<u32>) -> Self {
        let degree = exps.iter().sum();
        ExponentVector { exps, degree }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    /// The unit vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        Self::new(exps)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.degree == 0
    }

    /// `self + e_i`.
    pub fn shifted(&self, i: usize) -> Self {
        let mut exps = self.exps.clone();
        exps[i] += 1;
        ExponentVector {
            exps,
            degree: self.degree + 1,
        }
    }

    /// Evaluate `x^alpha`.
    pub fn eval<T: ComplexField>(&self, x: &[T]) -> T {
        self.exps
            .iter()
            .zip(x)
            .filter(|(&a, _)| a > 0)
            .fold(T::one(), |acc, (&a, xi)| acc * xi.clone().powi(a as i32))
    }

    /// Partial derivative of `x^alpha` with respect to `x_i`.
    pub fn eval_partial<T: ComplexField>(&self, x: &[T], i: usize) -> T {
        let a = self.exps[i];
        if a == 0 {
            return T::zero();
        }
        let mut lowered = self.exps.clone();
        lowered[i] -= 1;
        let m = ExponentVector::new(lowered).eval(x);
        m * T::from_subset(&(a as f64))
    }

    /// Second partial derivative of `x^alpha` with respect to `x_i, x_j`.
    pub fn eval_second_partial<T: ComplexField>(&self, x: &[T], i: usize, j: usize) -> T {
        let mut lowered = self.exps.clone();
        let mut coef = 1.0;
        for idx in [i, j] {
            if lowered[idx] == 0 {
                return T::zero();
            }
            coef *= lowered[idx] as f64;
            lowered[idx] -= 1;
        }
        ExponentVector::new(lowered).eval(x) * T::from_subset(&coef)
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        ExponentVector::new(v)
    }
}

impl From<ExponentVector> for Vec<u32> {
    fn from(e: ExponentVector) -> Self {
        e.exps
    }
}

impl fmt::Debug for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps)
    }
}

/// Graded lexicographic comparison with `x_1 > x_2 > ... > x_n`.
///
/// "Less" means "enumerated first": for `n = 2` the order begins
/// `00, 10, 01, 20, 11, 02`.
pub fn grlex_compare(a: &ExponentVector, b: &ExponentVector) -> Result<Ordering> {
    check_dim(a.dim(), b.dim(), "grlex_compare")?;
    Ok(grlex_cmp(a, b))
}

fn grlex_cmp(a: &ExponentVector, b: &ExponentVector) -> Ordering {
    a.degree
        .cmp(&b.degree)
        // a larger leading exponent is enumerated earlier
        .then_with(|| b.exps.cmp(&a.exps))
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exps
            .len()
            .cmp(&other.exps.len())
            .then_with(|| grlex_cmp(self, other))
    }
}

/// All exponent vectors of total degree `d` in `n` variables, grlex order.
fn exponents_of_degree(n: usize, d: u32) -> Vec<ExponentVector> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<ExponentVector>) {
        if prefix.len() == n - 1 {
            prefix.push(d);
            out.push(ExponentVector::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=d).rev() {
            prefix.push(first);
            rec(n, d - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Ordered set of exponent vectors in a fixed dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct MonomialBasis {
    n: usize,
    members: Vec<ExponentVector>,
}

#[derive(Deserialize)]
struct RawBasis {
    n: usize,
    members: Vec<ExponentVector>,
}

impl TryFrom<RawBasis> for MonomialBasis {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        MonomialBasis::from_members(raw.n, raw.members)
    }
}

impl MonomialBasis {
    /// Build from explicit members, keeping their order.
    pub fn from_members(n: usize, members: Vec<ExponentVector>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("basis dimension must be positive"));
        }
        for m in &members {
            check_dim(n, m.dim(), "basis member")?;
        }
        let mut sorted = members.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("basis members must be distinct"));
        }
        Ok(MonomialBasis { n, members })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[ExponentVector] {
        &self.members
    }

    pub fn get(&self, idx: usize) -> &ExponentVector {
        &self.members[idx]
    }

    /// Position of `alpha` in the stored order.
    pub fn index_of(&self, alpha: &ExponentVector) -> Option<usize> {
        self.members.iter().position(|m| m == alpha)
    }

    /// `[x]_B`: the monomial vector of `x` in basis order.
    pub fn eval<T: ComplexField>(&self, x: &[T]) -> Result<DVector<T>> {
        check_dim(self.n, x.len(), "eval_basis")?;
        Ok(DVector::from_iterator(
            self.len(),
            self.members.iter().map(|m| m.eval(x)),
        ))
    }

    /// Jacobian of `[x]_B`, shape `|B| x n`.
    pub fn jacobian<T: ComplexField>(&self, x: &[T]) -> Result<DMatrix<T>> {
        check_dim(self.n, x.len(), "basis jacobian")?;
        Ok(DMatrix::from_fn(self.len(), self.n, |r, c| {
            self.members[r].eval_partial(x, c)
        }))
    }

    /// Hessians of each monomial of the basis, in basis order.
    pub fn hessians<T: ComplexField>(&self, x: &[T]) -> Result<Vec<DMatrix<T>>> {
        check_dim(self.n, x.len(), "basis hessian")?;
        Ok(self
            .members
            .iter()
            .map(|m| DMatrix::from_fn(self.n, self.n, |i, j| m.eval_second_partial(x, i, j)))
            .collect())
    }
}

/// The first `k` exponent vectors of `N^n` in grlex order.
pub fn build_b0(n: usize, k: usize) -> Result<MonomialBasis> {
    if n == 0 || k == 0 {
        return Err(Error::invalid(format!(
            "build_b0 needs n >= 1 and k >= 1 (got n = {n}, k = {k})"
        )));
    }
    let mut members = Vec::with_capacity(k);
    let mut d = 0;
    while members.len() < k {
        for e in exponents_of_degree(n, d) {
            if members.len() == k {
                break;
            }
            members.push(e);
        }
        d += 1;
    }
    Ok(MonomialBasis { n, members })
}

/// `((e_1 + B0) u ... u (e_n + B0)) \ B0`, sorted in grlex order.
pub fn build_b1(b0: &MonomialBasis) -> MonomialBasis {
    let mut members: Vec<ExponentVector> = b0
        .members
        .iter()
        .flat_map(|beta| (0..b0.n).map(move |i| beta.shifted(i)))
        .filter(|alpha| !b0.members.contains(alpha))
        .collect();
    members.sort();
    members.dedup();
    MonomialBasis { n: b0.n, members }
}

/// `omega(x)`: `[x]_B0` with its leading constant entry dropped.
pub fn omega_lift<T: ComplexField>(x: &[T], b0: &MonomialBasis) -> Result<DVector<T>> {
    check_leading_constant(b0)?;
    let full = b0.eval(x)?;
    Ok(full.rows(1, full.len() - 1).into_owned())
}

/// Jacobian of `omega`, shape `(k-1) x n`.
pub fn omega_jacobian<T: ComplexField>(x: &[T], b0: &MonomialBasis) -> Result<DMatrix<T>> {
    check_leading_constant(b0)?;
    let full = b0.jacobian(x)?;
    Ok(full.rows(1, full.nrows() - 1).into_owned())
}

fn check_leading_constant(b0: &MonomialBasis) -> Result<()> {
    match b0.members.first() {
        Some(m) if m.is_zero() => Ok(()),
        _ => Err(Error::InvalidState(
            "omega lift requires a basis starting with the constant monomial".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(v: &[u32]) -> ExponentVector {
        ExponentVector::new(v.to_vec())
    }

    fn members(b: &MonomialBasis) -> Vec<Vec<u32>> {
        b.members().iter().map(|m| m.exponents().to_vec()).collect()
    }

    #[test]
    fn grlex_examples() {
        assert_eq!(
            grlex_compare(&ev(&[0, 0]), &ev(&[1, 0])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            grlex_compare(&ev(&[2, 0]), &ev(&[1, 1])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            grlex_compare(&ev(&[1, 0, 0]), &ev(&[0, 1, 0])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            grlex_compare(&ev(&[1, 1]), &ev(&[1, 1])).unwrap(),
            Ordering::Equal
        );
        assert!(matches!(
            grlex_compare(&ev(&[1]), &ev(&[1, 0])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn b0_examples() {
        assert_eq!(
            members(&build_b0(3, 2).unwrap()),
            vec![vec![0, 0, 0], vec![1, 0, 0]]
        );
        assert_eq!(
            members(&build_b0(2, 4).unwrap()),
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0]]
        );
        assert_eq!(members(&build_b0(2, 1).unwrap()), vec![vec![0, 0]]);
        assert_eq!(
            members(&build_b0(2, 6).unwrap()),
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
        assert!(build_b0(0, 2).is_err());
        assert!(build_b0(2, 0).is_err());
    }

    #[test]
    fn b1_examples() {
        let b1 = build_b1(&build_b0(3, 2).unwrap());
        assert_eq!(
            members(&b1),
            vec![
                vec![0, 1, 0],
                vec![0, 0, 1],
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1]
            ]
        );
        let b1 = build_b1(&build_b0(2, 3).unwrap());
        assert_eq!(members(&b1), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let b1 = build_b1(&build_b0(2, 4).unwrap());
        assert_eq!(
            members(&b1),
            vec![vec![1, 1], vec![0, 2], vec![3, 0], vec![2, 1]]
        );
    }

    #[test]
    fn eval_examples() {
        let b0 = build_b0(2, 4).unwrap();
        let v = b0.eval(&[2.0, 3.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0]);

        let v = b0.eval(&[0.0, 0.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 0.0]);

        // (-1)^2, (-1)(-2), (-2)^2
        let b1 = build_b1(&build_b0(2, 3).unwrap());
        let v = b1.eval(&[-1.0, -2.0]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 4.0]);

        assert!(b0.eval(&[1.0]).is_err());
    }

    #[test]
    fn omega_examples() {
        let b0 = build_b0(2, 4).unwrap();
        assert_eq!(
            omega_lift(&[2.0, 3.0], &b0).unwrap().as_slice(),
            &[2.0, 3.0, 4.0]
        );
        assert_eq!(
            omega_lift(&[-2.0, 2.0], &b0).unwrap().as_slice(),
            &[-2.0, 2.0, 4.0]
        );
        assert_eq!(
            omega_lift(&[0.0, 0.0], &b0).unwrap().as_slice(),
            &[0.0, 0.0, 0.0]
        );

        let shifted = MonomialBasis::from_members(2, vec![ev(&[1, 0]), ev(&[0, 1])]).unwrap();
        assert!(matches!(
            omega_lift(&[1.0, 1.0], &shifted),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn jacobian_matches_differences() {
        let b = build_b0(3, 10).unwrap();
        let x = [0.3, -1.2, 0.7];
        let jac = b.jacobian(&x).unwrap();
        let h = 1e-6;
        for c in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let fd = (b.eval(&xp).unwrap() - b.eval(&xm).unwrap()) / (2.0 * h);
            for r in 0..b.len() {
                assert!((fd[r] - jac[(r, c)]).abs() < 1e-8);
            }
        }
        let hs = b.hessians(&x).unwrap();
        for (r, hess) in hs.iter().enumerate() {
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let jp = b.jacobian(&xp).unwrap();
                let jm = b.jacobian(&xm).unwrap();
                for j in 0..3 {
                    let fd = (jp[(r, j)] - jm[(r, j)]) / (2.0 * h);
                    assert!((fd - hess[(i, j)]).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn json_shape() {
        let b = build_b0(2, 3).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"n":2,"members":[[0,0],[1,0],[0,1]]}"#);
        let back: MonomialBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert!(
            serde_json::from_str::<MonomialBasis>(r#"{"n":2,"members":[[0,0],[0,0]]}"#).is_err()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn exps(n: usize) -> impl Strategy<Value = ExponentVector> {
            proptest::collection::vec(0u32..5, n).prop_map(ExponentVector::new)
        }

        proptest! {
            #[test]
            fn grlex_is_total_order(a in exps(3), b in exps(3), c in exps(3)) {
                let ab = grlex_compare(&a, &b).unwrap();
                prop_assert_eq!(ab.reverse(), grlex_compare(&b, &a).unwrap());
                prop_assert_eq!(ab == Ordering::Equal, a == b);
                if ab != Ordering::Greater && grlex_compare(&b, &c).unwrap() != Ordering::Greater {
                    prop_assert_ne!(grlex_compare(&a, &c).unwrap(), Ordering::Greater);
                }
            }

            #[test]
            fn sorting_a_permutation_restores_b0(n in 1usize..4, k in 1usize..15, seed in any::<u64>()) {
                let b0 = build_b0(n, k).unwrap();
                let mut shuffled = b0.members().to_vec();
                // deterministic shuffle by rotating with the seed
                let len = shuffled.len();
                shuffled.rotate_left((seed as usize) % len);
                shuffled.reverse();
                shuffled.sort_by(|a, b| grlex_compare(a, b).unwrap());
                prop_assert_eq!(shuffled, b0.members().to_vec());
            }

            #[test]
            fn b0_prefix_and_b1_structure(n in 1usize..4, k in 1usize..15) {
                let b0 = build_b0(n, k).unwrap();
                let next = build_b0(n, k + 1).unwrap();
                prop_assert_eq!(&next.members()[..k], b0.members());

                let b1 = build_b1(&b0);
                prop_assert!(b1.len() <= n * k);
                for alpha in b1.members() {
                    prop_assert!(b0.index_of(alpha).is_none());
                    let from_shift = (0..n).any(|i| {
                        alpha.exponents()[i] > 0 && {
                            let mut e = alpha.exponents().to_vec();
                            e[i] -= 1;
                            b0.index_of(&ExponentVector::new(e)).is_some()
                        }
                    });
                    prop_assert!(from_shift);
                }
                prop_assert!(b1.members().windows(2).all(|w| w[0] < w[1]));
            }

            #[test]
            fn leading_entry_is_one(x in proptest::collection::vec(-5.0f64..5.0, 3), k in 1usize..12) {
                let b0 = build_b0(3, k).unwrap();
                prop_assert_eq!(b0.eval(&x).unwrap()[0], 1.0);
            }
        }
    }
}
