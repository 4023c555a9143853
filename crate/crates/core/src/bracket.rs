//! Bracketed root refinement that never leaves the bracket.

use crate::error::{RabiError, Result};

const MAX_ITER: usize = 200;

/// Refined root and the final enclosing interval.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Refined {
    pub x: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub lo: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub hi: f64,
}

/// Brent's method on `[a, b]` with `f(a) f(b) < 0`; stops when the enclosing
/// interval is narrower than `xtol`.
pub(crate) fn brent<F>(f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> Result<Refined>
where
    F: Fn(f64) -> Result<f64>,
{
    debug_assert!(fa.signum() != fb.signum());
    if fa == 0.0 {
        return Ok(Refined { x: a, lo: a, hi: a });
    }
    if fb == 0.0 {
        return Ok(Refined { x: b, lo: b, hi: b });
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * xtol;
        let m = 0.5 * (c - b);
        if fb == 0.0 {
            return Ok(Refined { x: b, lo: b, hi: b });
        }
        if m.abs() <= tol1 {
            let (lo, hi) = if b < c { (b, c) } else { (c, b) };
            return Ok(Refined { x: b, lo, hi });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // secant or inverse quadratic interpolation
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b)?;
    }
    Err(RabiError::NoConvergence {
        what: "bracketed root refinement",
        iterations: MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0);
        let r = brent(f, 0.0, 2.0, -2.0, 6.0, 1e-13).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
        assert!(r.hi - r.lo < 1e-12, "{:?}", r);
        assert!(r.lo <= r.x && r.x <= r.hi);
    }

    #[test]
    fn stays_in_bracket_next_to_pole() {
        // 1/(x - 1) + 2 has a root at 0.5 and a pole at 1
        let f = |x: f64| Ok(1.0 / (x - 1.0) + 2.0);
        let r = brent(f, 0.0, 0.99, 1.0, -98.0, 1e-13).unwrap();
        assert!((r.x - 0.5).abs() < 1e-12);
    }
}
