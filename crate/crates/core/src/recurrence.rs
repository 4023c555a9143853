//! The three-term recurrence `n K_n = f_{n-1}(x) K_{n-1} - K_{n-2}` and its
//! broken-parity variant, together with the backward (minimal-solution)
//! machinery and the finite continued fraction for `V_1 = K_1 / K_0`.
//!
//! Everything here works in `ω = 1` units on a [`NormalizedParams`].

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::model::NormalizedParams;
use crate::real::Real;
use crate::sum::NeumaierSum;

/// Number of consecutive negligible terms required before truncating a series.
pub const TAIL_RUN: usize = 5;

/// Magnitude below which a backward-recursion denominator counts as zero.
const TINY_DENOMINATOR: f64 = 1e-300;

/// Working precision of the series kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    /// Plain `f64`.
    Double,
    /// Double-double throughout.
    Extended,
    /// `f64`, re-evaluated in double-double when the sum shows heavy cancellation.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative size of a weighted term, compared with the largest partial sum
    /// seen so far, below which the term is negligible.
    pub tail_tolerance: f64,
    /// Hard cap on the truncation order.
    pub n_max: usize,
    /// Evaluation refuses inside this radius around any pole.
    pub pole_exclusion: f64,
    pub precision: Precision,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tail_tolerance: 1e-14,
            n_max: 500,
            pole_exclusion: 1e-8,
            precision: Precision::Auto,
        }
    }
}

impl Tolerances {
    pub(crate) fn tail_for<T: Real>(&self) -> f64 {
        // the extended path would be pointless if truncated at f64 accuracy
        if T::UNIT_ROUNDOFF < 1e-20 {
            self.tail_tolerance * 1e-16
        } else {
            self.tail_tolerance
        }
    }
}

/// Branch of the broken-parity recurrence. `Plus` shifts `x - n` by `+ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// Shift `s` such that the branch's poles sit at `x = n - s`.
    pub fn shift(self, p: &NormalizedParams) -> f64 {
        self.sign() * p.epsilon
    }
}

/// Coefficients `K_0..K_N` at a fixed `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub x: f64,
    pub values: Vec<f64>,
    /// Weighted terms `K_n g^n`.
    pub terms: Vec<f64>,
    pub converged: bool,
    pub n_used: usize,
    /// Magnitude of the last retained weighted term.
    pub tail_estimate: f64,
}

/// Checks `x` against the pole of `f_n` at `x = n - shift`.
pub(crate) fn check_pole(x: f64, n: usize, shift: f64, radius: f64) -> Result<()> {
    let pole = n as f64 - shift;
    let distance = (x - pole).abs();
    if distance < radius {
        Err(RabiError::Pole {
            x,
            pole,
            distance,
            radius,
        })
    } else {
        Ok(())
    }
}

/// Index of the pole nearest to `x` for the shift `s` (poles at `n - s`, `n ≥ 0`).
pub(crate) fn nearest_pole(x: f64, shift: f64) -> (usize, f64) {
    let n = (x + shift).round().max(0.0);
    (n as usize, (x - (n - shift)).abs())
}

/// `f_n` in generic precision with the branch shift `s`.
#[inline]
pub(crate) fn f_generic<T: Real>(n: usize, x: T, shift: T, g: T, delta_sq: T) -> T {
    let two = T::lift(2.0);
    // n - x + s + Δ²/(x - n + s): the shift enters both terms with the same sign
    let d = x - T::lift(n as f64) + shift;
    let mut inner = shift - (x - T::lift(n as f64));
    if delta_sq != T::zero() {
        inner = inner + delta_sq.quot(d);
    }
    two * g + inner.quot(two * g)
}

fn f_checked(n: usize, x: f64, shift: f64, p: &NormalizedParams, radius: f64) -> Result<f64> {
    p.require_coupling()?;
    if p.delta != 0.0 {
        check_pole(x, n, shift, radius)?;
    }
    Ok(f_generic(n, x, shift, p.g, p.delta * p.delta))
}

/// `f_n(x) = 2g + (n - x + Δ²/(x - n)) / (2g)`.
pub fn f_coeff(n: usize, x: f64, p: &NormalizedParams) -> Result<f64> {
    f_checked(n, x, 0.0, p, Tolerances::default().pole_exclusion)
}

/// `f^±_n(x) = 2g + (n - x ± ε + Δ²/(x - n ± ε)) / (2g)`.
pub fn f_coeff_eps(n: usize, x: f64, p: &NormalizedParams, branch: Branch) -> Result<f64> {
    f_checked(n, x, branch.shift(p), p, Tolerances::default().pole_exclusion)
}

/// Forward recurrence with adaptive truncation, in generic precision.
pub(crate) struct RawSeries<T> {
    pub k: Vec<T>,
    pub w: Vec<T>,
    pub converged: bool,
}

pub(crate) fn forward_series<T: Real>(
    x: f64,
    shift: f64,
    p: &NormalizedParams,
    tol: &Tolerances,
    min_order: usize,
) -> Result<RawSeries<T>> {
    p.require_coupling()?;
    let has_poles = p.delta != 0.0;
    if has_poles {
        let (n, _) = nearest_pole(x, shift);
        check_pole(x, n, shift, tol.pole_exclusion)?;
    }
    let xt = T::lift(x);
    let st = T::lift(shift);
    let g = T::lift(p.g);
    let d2 = T::lift(p.delta * p.delta);
    let tail = T::lift(tol.tail_for::<T>());
    // past the hump of the terms before truncation is allowed
    let hump = (x + shift).max(0.0).ceil() as usize + 1;
    let floor = min_order.max(hump);

    let mut k: Vec<T> = Vec::with_capacity(64);
    let mut w: Vec<T> = Vec::with_capacity(64);
    let mut partial = NeumaierSum::<T>::new();
    let mut max_partial = T::zero();
    let mut quiet = 0usize;
    let mut gpow = T::one();
    let mut n = 0usize;
    loop {
        let kn = match n {
            0 => T::one(),
            1 => f_generic(0, xt, st, g, d2),
            _ => {
                let nf = T::lift(n as f64);
                (f_generic(n - 1, xt, st, g, d2) * k[n - 1] - k[n - 2]).quot(nf)
            }
        };
        let wn = kn * gpow;
        k.push(kn);
        w.push(wn);
        partial += wn;
        let s = partial.sum().abs();
        if s > max_partial {
            max_partial = s;
        }
        if wn.abs() < tail * max_partial {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= TAIL_RUN && n + 1 >= floor {
            return Ok(RawSeries {
                k,
                w,
                converged: true,
            });
        }
        n += 1;
        if n >= tol.n_max {
            return Ok(RawSeries {
                k,
                w,
                converged: false,
            });
        }
        gpow = gpow * g;
    }
}

fn table_from(x: f64, raw: RawSeries<f64>, n_max: usize) -> Result<CoefficientTable> {
    if !raw.converged {
        return Err(RabiError::NoConvergence {
            what: "coefficient series",
            iterations: n_max,
        });
    }
    let n_used = raw.k.len();
    let tail_estimate = raw.w.last().map(|v| v.abs()).unwrap_or(0.0);
    Ok(CoefficientTable {
        x,
        values: raw.k,
        terms: raw.w,
        converged: true,
        n_used,
        tail_estimate,
    })
}

/// `K_0..K_N` for the symmetric model with adaptive truncation.
pub fn k_table(x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<CoefficientTable> {
    let raw = forward_series::<f64>(x, 0.0, p, tol, 0)?;
    table_from(x, raw, tol.n_max)
}

/// `K^±_0..K^±_N` for the broken-parity model.
pub fn k_table_eps(
    x: f64,
    p: &NormalizedParams,
    branch: Branch,
    tol: &Tolerances,
) -> Result<CoefficientTable> {
    let raw = forward_series::<f64>(x, branch.shift(p), p, tol, 0)?;
    table_from(x, raw, tol.n_max)
}

/// Plain forward recurrence for `len` coefficients, without truncation logic.
/// Poles of every `f_m` used are checked.
pub fn k_sequence(x: f64, p: &NormalizedParams, len: usize) -> Result<Vec<f64>> {
    let radius = Tolerances::default().pole_exclusion;
    let mut k = Vec::with_capacity(len);
    for n in 0..len {
        let kn = match n {
            0 => 1.0,
            1 => f_checked(0, x, 0.0, p, radius)?,
            _ => (f_checked(n - 1, x, 0.0, p, radius)? * k[n - 1] - k[n - 2]) / n as f64,
        };
        k.push(kn);
    }
    Ok(k)
}

/// `K_0(x)..K_n(x)` at `x = n`: only `f_0..f_{n-1}` enter, none singular there.
pub(crate) fn k_up_to_baseline<T: Real>(n: usize, p: &NormalizedParams) -> Vec<T> {
    let x = T::lift(n as f64);
    let g = T::lift(p.g);
    let d2 = T::lift(p.delta * p.delta);
    let mut k: Vec<T> = Vec::with_capacity(n + 1);
    k.push(T::one());
    for m in 1..=n {
        let km = if m == 1 {
            f_generic(0, x, T::zero(), g, d2)
        } else {
            (f_generic(m - 1, x, T::zero(), g, d2) * k[m - 1] - k[m - 2]).quot(T::lift(m as f64))
        };
        k.push(km);
    }
    k
}

/// `K_n(n)`, whose vanishing is the exceptional-point condition on the `n`-th baseline.
pub fn k_at_baseline(n: usize, p: &NormalizedParams) -> Result<f64> {
    p.require_coupling()?;
    Ok(k_up_to_baseline::<f64>(n, p)[n])
}

/// `K_n(n) (2g)^n`, a polynomial in `g²` and `Δ²` with the same positive zeros
/// in `g` as `K_n(n)`, and finite at `g = 0`.
pub fn exceptional_polynomial(n: usize, g: f64, delta: f64) -> f64 {
    // P_m = K_m (2g)^m obeys m P_m = (4g² + m-1-x + Δ²/(x-m+1)) P_{m-1} - 4g² P_{m-2}
    let x = n as f64;
    let g2 = 4.0 * g * g;
    let d2 = delta * delta;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for m in 1..=n {
        let c = g2 + (m as f64 - 1.0 - x) + d2 / (x - m as f64 + 1.0);
        let next = (c * cur - g2 * prev) / m as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Ratios `V_n = K_n / K_{n-1}` of the minimal solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalSolution {
    pub x: f64,
    /// `ratios[i]` is `V_{i+1}`.
    pub ratios: Vec<f64>,
    /// Backward starting depth of the accepted run.
    pub depth: usize,
}

impl MinimalSolution {
    pub fn v1(&self) -> f64 {
        self.ratios[0]
    }
}

/// One backward sweep `V_n = 1 / (f_n - (n+1) V_{n+1})` from `V_depth = tail`.
fn backward_sweep(
    x: f64,
    p: &NormalizedParams,
    depth: usize,
    tail: f64,
    what: &'static str,
) -> Result<Vec<f64>> {
    let radius = Tolerances::default().pole_exclusion;
    let mut ratios = vec![0.0; depth];
    ratios[depth - 1] = tail;
    for n in (1..depth).rev() {
        let den = f_checked(n, x, 0.0, p, radius)? - (n + 1) as f64 * ratios[n];
        if den.abs() < TINY_DENOMINATOR {
            return Err(RabiError::NearZeroDenominator { what, depth: n });
        }
        ratios[n - 1] = 1.0 / den;
    }
    Ok(ratios)
}

fn backward_restarting(x: f64, p: &NormalizedParams, depth: usize) -> Result<Vec<f64>> {
    let mut d = depth;
    for _ in 0..8 {
        match backward_sweep(x, p, d, 0.0, "minimal solution") {
            Err(RabiError::NearZeroDenominator { .. }) => d += 1,
            other => return other,
        }
    }
    backward_sweep(x, p, d, 0.0, "minimal solution")
}

/// Minimal solution by backward recurrence from `V_{n_start} = 0`, doubling the
/// depth until `V_1` is stable to 1e-12 relative.
pub fn minimal_solution(x: f64, p: &NormalizedParams, n_start: usize) -> Result<MinimalSolution> {
    p.require_coupling()?;
    let mut depth = n_start.max(2);
    let mut prev = backward_restarting(x, p, depth)?;
    for _ in 0..12 {
        let next_depth = depth * 2;
        let next = backward_restarting(x, p, next_depth)?;
        let (a, b) = (prev[0], next[0]);
        if (a - b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE) {
            return Ok(MinimalSolution {
                x,
                ratios: next,
                depth: next_depth,
            });
        }
        prev = next;
        depth = next_depth;
    }
    Err(RabiError::NoConvergence {
        what: "minimal solution depth doubling",
        iterations: depth,
    })
}

/// Default backward starting depth for the minimal solution.
pub const MINIMAL_DEPTH: usize = 100;

/// `f_0(x) - V_1^min(x)`; vanishes on the spectrum of both parities.
pub fn schweber_residual(x: f64, p: &NormalizedParams) -> Result<f64> {
    let v1 = minimal_solution(x, p, MINIMAL_DEPTH)?.v1();
    Ok(f_coeff(0, x, p)? - v1)
}

/// Finite continued fraction `V_1 = 1/(f_1 - 2/(f_2 - ... - n_cut V_{n_cut}))`
/// with `V_{n_cut} = tail`.
pub fn continued_fraction_demo(x: f64, p: &NormalizedParams, n_cut: usize, tail: f64) -> Result<f64> {
    p.require_coupling()?;
    if n_cut < 2 {
        return Err(RabiError::InvalidParams(format!("n_cut must be at least 2, got {n_cut}")));
    }
    Ok(backward_sweep(x, p, n_cut, tail, "continued fraction")?[0])
}

/// Forward nonlinear recurrence `V_n = f_{n-1}/n - 1/(n V_{n-1})` from `V_1 = f_0`.
/// Returns `V_1..V_len`.
pub fn forward_ratios(x: f64, p: &NormalizedParams, len: usize) -> Result<Vec<f64>> {
    let radius = Tolerances::default().pole_exclusion;
    let mut v = Vec::with_capacity(len);
    v.push(f_checked(0, x, 0.0, p, radius)?);
    for n in 2..=len {
        let prev = v[n - 2];
        if prev.abs() < TINY_DENOMINATOR {
            return Err(RabiError::NearZeroDenominator {
                what: "forward ratio recurrence",
                depth: n,
            });
        }
        v.push(f_checked(n - 1, x, 0.0, p, radius)? / n as f64 - 1.0 / (n as f64 * prev));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(g: f64, d: f64) -> NormalizedParams {
        NormalizedParams::rabi(g, d).unwrap()
    }

    #[test]
    fn f0_at_delta_zero() {
        // 2(0.5) + (0 - 1)/1 = 0
        assert_eq!(f_coeff(0, 1.0, &p(0.5, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn f0_vanishes_on_judd_curve() {
        // 4g² + Δ² = 1
        let v = f_coeff(0, 1.0, &p(0.4, 0.6)).unwrap();
        assert!(v.abs() < 1e-15, "{v}");
    }

    #[test]
    fn f_refuses_poles_and_zero_coupling() {
        let q = p(0.7, 0.4);
        assert!(matches!(f_coeff(2, 2.0 + 1e-9, &q), Err(RabiError::Pole { .. })));
        assert!(f_coeff(2, 2.0 + 1e-7, &q).is_ok());
        let z = NormalizedParams::rabi(0.0, 0.4).unwrap();
        assert_eq!(f_coeff(0, 0.3, &z), Err(RabiError::SingularCoupling));
    }

    #[test]
    fn eps_branches() {
        let q = NormalizedParams::new(0.7, 0.4, 0.0).unwrap();
        for n in 0..6 {
            for x in [-0.3, 0.41, 2.7] {
                let a = f_coeff(n, x, &q).unwrap();
                assert_eq!(f_coeff_eps(n, x, &q, Branch::Plus).unwrap(), a);
                assert_eq!(f_coeff_eps(n, x, &q, Branch::Minus).unwrap(), a);
            }
        }
        let q = NormalizedParams::new(0.7, 0.4, 0.2).unwrap();
        assert!(f_coeff_eps(1, 0.8, &q, Branch::Plus).is_err());
        assert!(f_coeff_eps(1, 0.8, &q, Branch::Minus).is_ok());
        assert!(f_coeff_eps(1, 1.2, &q, Branch::Minus).is_err());
    }

    #[test]
    fn table_initial_conditions_and_recurrence() {
        let q = p(0.7, 0.4);
        let t = k_table(0.3, &q, &Tolerances::default()).unwrap();
        assert_eq!(t.values[0], 1.0);
        assert_eq!(t.values[1], f_coeff(0, 0.3, &q).unwrap());
        assert!(t.converged);
        for n in 2..t.values.len() {
            let f = f_coeff(n - 1, 0.3, &q).unwrap();
            let r = n as f64 * t.values[n] - f * t.values[n - 1] + t.values[n - 2];
            let scale = (n as f64 * t.values[n]).abs() + (f * t.values[n - 1]).abs() + t.values[n - 2].abs();
            assert!(r.abs() <= 1e-14 * scale, "n={n} r={r}");
        }
        // final run of negligible terms
        let partial_max = t
            .terms
            .iter()
            .scan(0.0, |s, w| {
                *s += w;
                Some(f64::abs(*s))
            })
            .fold(0.0, f64::max);
        for w in &t.terms[t.n_used - TAIL_RUN..] {
            assert!(w.abs() < 1e-14 * partial_max);
        }
    }

    #[test]
    fn table_depends_on_delta_squared_only() {
        let a = k_table(0.3, &p(0.7, 0.4), &Tolerances::default()).unwrap();
        let b = k_table(0.3, &p(0.7, -0.4), &Tolerances::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dominant_ratio_approaches_inverse_radius() {
        // The approach is O(1/n); measured onset of the 1% band at x = 0.3 is n = 133.
        let k = k_sequence(0.3, &p(0.7, 0.4), 201).unwrap();
        let target = 1.0 / 1.4;
        let outside = |n: usize| ((k[n] / k[n - 1]) - target).abs() >= 0.01 * target;
        assert!(outside(132));
        for n in 133..=200 {
            let r = k[n] / k[n - 1];
            assert!((r - target).abs() < 0.01 * target, "n={n} ratio={r}");
        }
    }

    #[test]
    fn table_refuses_pole_and_reports_no_convergence() {
        let q = p(0.7, 0.4);
        assert!(matches!(
            k_table(3.0 + 5e-9, &q, &Tolerances::default()),
            Err(RabiError::Pole { .. })
        ));
        let tight = Tolerances {
            n_max: 8,
            ..Tolerances::default()
        };
        assert!(matches!(
            k_table(0.3, &q, &tight),
            Err(RabiError::NoConvergence { .. })
        ));
    }

    #[test]
    fn exceptional_polynomial_matches_scaled_k() {
        let q = p(0.55, 0.3);
        for n in 1..8 {
            let k = k_at_baseline(n, &q).unwrap();
            let poly = exceptional_polynomial(n, q.g, q.delta);
            let scaled = k * (2.0 * q.g).powi(n as i32);
            assert!((poly - scaled).abs() <= 1e-12 * scaled.abs().max(1.0), "n={n}");
        }
        // n = 1: 4g² + Δ² - 1
        assert!((exceptional_polynomial(1, 0.4, 0.6)).abs() < 1e-15);
    }

    #[test]
    fn minimal_solution_is_depth_independent() {
        let q = p(0.7, 0.4);
        let a = backward_sweep(0.3, &q, 100, 0.0, "t").unwrap()[0];
        let b = backward_sweep(0.3, &q, 200, 0.0, "t").unwrap()[0];
        assert!((a - b).abs() <= 1e-12 * b.abs());
        let m = minimal_solution(0.3, &q, 100).unwrap();
        assert!((m.v1() - b).abs() <= 1e-12 * b.abs());
        // minimal ratios decay
        assert!(m.ratios[150].abs() < 0.05);
    }

    #[test]
    fn continued_fraction_with_zero_tail_is_minimal() {
        let q = p(0.7, 0.4);
        let m = minimal_solution(0.3, &q, 100).unwrap().v1();
        let cf = continued_fraction_demo(0.3, &q, 200, 0.0).unwrap();
        assert!((cf - m).abs() < 1e-10);
    }

    #[test]
    fn forward_then_backward_is_the_identity() {
        let q = p(0.7, 0.4);
        for x in [0.3, 1.5, 2.5] {
            let f0 = f_coeff(0, x, &q).unwrap();
            // backward steps undo forward ones exactly in exact arithmetic; in f64
            // the round-off of V_n is amplified going down, so keep the depth shallow
            for n in [3, 5, 8] {
                let v = forward_ratios(x, &q, n).unwrap();
                // f_0 = 1|f_1 - 2|f_2 - ... - n V_n, i.e. V_1 rebuilt from V_n
                let back = continued_fraction_demo(x, &q, n, v[n - 1]).unwrap();
                assert!((back - f0).abs() <= 1e-10 * f0.abs().max(1.0), "x={x} n={n}");
            }
        }
    }
}
