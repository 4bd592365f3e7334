//! Brent's method for a bracketed scalar root.

use crate::error::{Error, Result};

/// Result of a bracketed root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentRoot {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Finds `x ∈ [a, b]` with `f(x) = 0` to absolute tolerance `tol`.
///
/// `f(a)` and `f(b)` must have opposite signs (or one of them be zero).
pub fn brent<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<BrentRoot>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(BrentRoot { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(BrentRoot { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            lo: a,
            hi: b,
            gap_lo: fa,
            gap_hi: fb,
        });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(BrentRoot { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, or secant when only two points differ.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Err(Error::SolverConvergence { iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0 * x - 5.0), 2.0, 3.0, 1e-12, 100).unwrap();
        assert!((r.x - 2.094_551_481_542_327).abs() < 1e-11);
    }

    #[test]
    fn finds_transcendental_root() {
        let r = brent(|x| Ok(x.cos() - x), 0.0, 1.0, 1e-12, 100).unwrap();
        assert!((r.x - 0.739_085_133_215_160_6).abs() < 1e-11);
        assert!(r.iterations < 20);
    }

    #[test]
    fn reports_missing_bracket() {
        assert!(matches!(
            brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-10, 50),
            Err(Error::NoBracket { .. })
        ));
    }
}
