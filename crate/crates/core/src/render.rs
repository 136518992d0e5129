//! Plain-text rendering of small polynomials.

use crate::monomial::ExponentVector;

/// Best rational `p/q` with `q <= max_den` matching `x` to `1e-9` relative.
fn as_rational(x: f64, max_den: i64) -> Option<(i64, i64)> {
    let tol = 1e-9 * x.abs().max(1.0);
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        if (p / q as f64 - x).abs() <= tol && p.abs() < 1e12 {
            return Some((p as i64, q));
        }
    }
    None
}

/// Format a nonnegative magnitude as an integer, a fraction, or a decimal.
pub fn fmt_magnitude(x: f64) -> String {
    let x = x.abs();
    match as_rational(x, 1000) {
        Some((p, 1)) => p.to_string(),
        Some((p, q)) => format!("{p}/{q}"),
        None => {
            let s = format!("{x:.10}");
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        }
    }
}

pub fn fmt_monomial(alpha: &ExponentVector, var: &str) -> String {
    alpha
        .exponents()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| {
            if e == 1 {
                format!("{var}{}", i + 1)
            } else {
                format!("{var}{}^{e}", i + 1)
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Render `sum c_j * m_j`; terms with negligible coefficients are skipped.
pub fn fmt_polynomial<'a>(
    terms: impl IntoIterator<Item = (f64, &'a ExponentVector)>,
    var: &str,
) -> String {
    let mut out = String::new();
    for (c, alpha) in terms {
        if c.abs() < 1e-14 {
            continue;
        }
        let mono = fmt_monomial(alpha, var);
        let mag = fmt_magnitude(c);
        let body = if mono.is_empty() {
            mag
        } else if mag == "1" {
            mono
        } else {
            format!("{mag}*{mono}")
        };
        if out.is_empty() {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitudes() {
        assert_eq!(fmt_magnitude(2.0), "2");
        assert_eq!(fmt_magnitude(11.0 / 3.0), "11/3");
        assert_eq!(fmt_magnitude(-58.0 / 19.0), "58/19");
        assert_eq!(fmt_magnitude(std::f64::consts::PI), "3.1415926536");
    }

    #[test]
    fn polynomial() {
        let x2 = ExponentVector::new(vec![2, 0]);
        let x1 = ExponentVector::new(vec![1, 0]);
        let one = ExponentVector::new(vec![0, 0]);
        let s = fmt_polynomial([(1.0, &x2), (-1.0, &x1), (-2.0, &one)], "x");
        assert_eq!(s, "x1^2 - x1 - 2");
        let s = fmt_polynomial([(-0.5, &x1), (0.0, &one)], "x");
        assert_eq!(s, "-1/2*x1");
    }
}
