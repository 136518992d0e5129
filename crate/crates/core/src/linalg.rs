//! Dense linear-algebra kernels: guarded solves, pseudo-inverse, complex
//! Schur factorization and symmetric minimum eigenvalue.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Reject systems whose `sigma_min / sigma_max` falls below this.
pub const SOLVE_MIN_RATIO: f64 = 1e-12;
/// Rank threshold for pseudo-inverses and Vandermonde-type matrices.
pub const RANK_MIN_RATIO: f64 = 1e-10;

/// `sigma_min / sigma_max` of `a`; zero for an all-zero or empty matrix.
pub fn singular_value_ratio(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sv = a.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Solve `A X = B` for square `A`.
pub fn solve_linear(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve_linear_guarded(a, b, SOLVE_MIN_RATIO, "linear system")
}

/// Solve `A X = B`, rejecting `A` when `sigma_min / sigma_max < min_ratio`.
pub(crate) fn solve_linear_guarded(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    min_ratio: f64,
    what: &str,
) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "{what}: matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::invalid(format!(
            "{what}: right-hand side has {} rows, expected {}",
            b.nrows(),
            a.nrows()
        )));
    }
    let ratio = singular_value_ratio(a);
    if !(ratio >= min_ratio) {
        return Err(Error::degenerate(format!("{what} is singular"), ratio));
    }
    a.clone()
        .col_piv_qr()
        .solve(b)
        .ok_or_else(|| Error::degenerate(format!("{what} is singular"), ratio))
}

/// Moore-Penrose pseudo-inverse of a full-column-rank `n x m` matrix (`m <= n`).
pub fn pseudo_inverse(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, m) = u.shape();
    if m > n {
        return Err(Error::invalid(format!(
            "pseudo_inverse expects m <= n, got {n}x{m}"
        )));
    }
    if m == 0 {
        return Ok(DMatrix::zeros(0, n));
    }
    let svd = u.clone().svd(true, true);
    let max = svd.singular_values.max();
    let ratio = if max > 0.0 {
        svd.singular_values.min() / max
    } else {
        0.0
    };
    if ratio < RANK_MIN_RATIO {
        return Err(Error::degenerate("matrix is rank deficient", ratio));
    }
    let uu = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let mut vs = vt.transpose();
    for (j, s) in svd.singular_values.iter().enumerate() {
        vs.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(vs * uu.transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym(a: &DMatrix<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::invalid("min_eigenvalue_sym expects a square matrix"));
    }
    if a.is_empty() {
        return Err(Error::invalid("min_eigenvalue_sym of an empty matrix"));
    }
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let sym = (a + a.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.min())
}

/// `Q^H M Q = P` with `Q` unitary and `P` upper triangular.
#[derive(Clone, Debug)]
pub struct ComplexSchurDecomposition {
    pub q: DMatrix<C64>,
    pub p: DMatrix<C64>,
}

impl ComplexSchurDecomposition {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Diagonal of `P`, sorted by real part then imaginary part.
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.p.diagonal().iter().copied().collect()
    }

    /// `||Q^H Q - I||_F`.
    pub fn unitarity_error(&self) -> f64 {
        let k = self.dim();
        (self.q.adjoint() * &self.q - DMatrix::<C64>::identity(k, k)).norm()
    }

    /// Largest modulus in the strictly lower triangle of `P`.
    pub fn lower_magnitude(&self) -> f64 {
        let k = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..k {
            for j in 0..i {
                m = m.max(self.p[(i, j)].norm());
            }
        }
        m
    }

    /// `||Q^H M Q - P||_F`.
    pub fn reconstruction_error(&self, m: &DMatrix<f64>) -> f64 {
        let mc = m.map(|v| C64::new(v, 0.0));
        (self.q.adjoint() * mc * &self.q - &self.p).norm()
    }
}

/// Givens pair `(c, s)` with real `c` such that
/// `[[c, s], [-conj(s), c]] * [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let na = a.norm();
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let norm = na.hypot(nb);
    (na / norm, (a / na) * b.conj() / norm)
}

/// Apply the rotation to rows `i, i+1` over the column range `cols`.
fn rotate_rows(a: &mut DMatrix<C64>, i: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = a[(i, j)];
        let y = a[(i + 1, j)];
        a[(i, j)] = x * c + s * y;
        a[(i + 1, j)] = -s.conj() * x + y * c;
    }
}

/// Multiply columns `i, i+1` by the adjoint rotation over the row range `rows`.
fn rotate_cols(a: &mut DMatrix<C64>, i: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for r in rows {
        let x = a[(r, i)];
        let y = a[(r, i + 1)];
        a[(r, i)] = x * c + y * s.conj();
        a[(r, i + 1)] = -x * s + y * c;
    }
}

/// Householder reduction of `a` to upper Hessenberg form, accumulating into `q`.
fn hessenberg(a: &mut DMatrix<C64>, q: &mut DMatrix<C64>) {
    let k = a.nrows();
    for j in 0..k.saturating_sub(2) {
        let x: Vec<C64> = (j + 1..k).map(|r| a[(r, j)]).collect();
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|t| t.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // a <- (I - beta v v^H) a
        for col in 0..k {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(t, vt)| vt.conj() * a[(j + 1 + t, col)])
                .sum();
            for (t, vt) in v.iter().enumerate() {
                a[(j + 1 + t, col)] -= vt * dot * beta;
            }
        }
        // a <- a (I - beta v v^H), q likewise
        for m in [&mut *a, &mut *q] {
            for row in 0..k {
                let dot: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| m[(row, j + 1 + t)] * vt)
                    .sum();
                for (t, vt) in v.iter().enumerate() {
                    m[(row, j + 1 + t)] -= dot * vt.conj() * beta;
                }
            }
        }
        for r in j + 2..k {
            a[(r, j)] = C64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn sort_key_less(a: C64, b: C64) -> bool {
    a.re < b.re || (a.re == b.re && a.im < b.im)
}

/// Complex Schur factorization of a real square matrix. The diagonal of `P`
/// is ordered by real part, then imaginary part, both ascending.
pub fn complex_schur(m: &DMatrix<f64>) -> Result<ComplexSchurDecomposition> {
    if !m.is_square() {
        return Err(Error::invalid("complex_schur expects a square matrix"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("complex_schur input has non-finite entries"));
    }
    let k = m.nrows();
    let mut a = m.map(|v| C64::new(v, 0.0));
    let mut q = DMatrix::<C64>::identity(k, k);
    if k == 0 {
        return Ok(ComplexSchurDecomposition { q, p: a });
    }
    hessenberg(&mut a, &mut q);

    let eps = f64::EPSILON;
    let anorm = a.norm().max(f64::MIN_POSITIVE);
    let max_sweeps = 100 * k;
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let mut hi = k - 1;
    while hi > 0 {
        // zero negligible subdiagonal entries
        for i in 1..=hi {
            let sub = a[(i, i - 1)].norm();
            let diag = a[(i, i)].norm() + a[(i - 1, i - 1)].norm();
            let tol = if diag > 0.0 { eps * diag } else { eps * anorm };
            if sub <= tol {
                a[(i, i - 1)] = C64::new(0.0, 0.0);
            }
        }
        if a[(hi, hi - 1)].norm() == 0.0 {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && a[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }

        if sweeps >= max_sweeps {
            return Err(Error::NumericalFailure(format!(
                "complex Schur QR iteration did not converge within {max_sweeps} sweeps"
            )));
        }
        sweeps += 1;
        since_deflation += 1;

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            a[(hi, hi)] + C64::new(0.75 * a[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                a[(hi - 1, hi - 1)],
                a[(hi - 1, hi)],
                a[(hi, hi - 1)],
                a[(hi, hi)],
            )
        };

        for i in lo..=hi {
            a[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s) = givens(a[(i, i)], a[(i + 1, i)]);
            rotate_rows(&mut a, i, c, s, i..k);
            a[(i + 1, i)] = C64::new(0.0, 0.0);
            rots.push((i, c, s));
        }
        for &(i, c, s) in &rots {
            rotate_cols(&mut a, i, c, s, 0..(i + 2).min(hi + 1));
            rotate_cols(&mut q, i, c, s, 0..k);
        }
        for i in lo..=hi {
            a[(i, i)] += shift;
        }
    }

    // zero the strictly lower part left by the iteration
    for i in 0..k {
        for j in 0..i {
            a[(i, j)] = C64::new(0.0, 0.0);
        }
    }

    // bubble the diagonal into sorted order with unitary swaps
    for pass in 0..k {
        let mut swapped = false;
        for i in 0..k - 1 - pass.min(k - 1) {
            let (t11, t22) = (a[(i, i)], a[(i + 1, i + 1)]);
            if sort_key_less(t22, t11) {
                let (c, s) = givens(a[(i, i + 1)], t22 - t11);
                rotate_rows(&mut a, i, c, s, i..k);
                rotate_cols(&mut a, i, c, s, 0..i + 2);
                rotate_cols(&mut q, i, c, s, 0..k);
                a[(i + 1, i)] = C64::new(0.0, 0.0);
                a[(i, i)] = t22;
                a[(i + 1, i + 1)] = t11;
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }

    Ok(ComplexSchurDecomposition { q, p: a })
}
