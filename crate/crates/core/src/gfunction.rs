//! Spectral functions whose zeros are the eigenvalues.
//!
//! * `G_±(x) = Σ K_n(x) [1 ∓ Δ/(x - n)] g^n` for the parity sectors of the
//!   symmetric model,
//! * `G_ε(x) = Δ² R̄⁺ R̄⁻ - R⁺ R⁻` for the broken-parity model, with
//!   `R± = Σ K±_n g^n` and `R̄± = Σ K±_n g^n / (x - n ± ε)`.
//!
//! Both are evaluated as compensated partial sums over the forward recurrence.
//! A sample whose terms cancel by more than [`CANCELLATION_LIMIT`] is redone
//! in double-double when [`Precision::Auto`] is selected.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{RabiError, Result};
use crate::model::{NormalizedParams, Parity};
use crate::real::Real;
use crate::recurrence::{
    forward_series, k_up_to_baseline, nearest_pole, f_generic, Branch, Precision, Tolerances, TAIL_RUN,
};
use crate::sum::NeumaierSum;

/// Samples closer than this to a pole are flagged as near-pole.
pub const NEAR_POLE_WINDOW: f64 = 1e-3;

/// Ratio of summed term magnitudes to result magnitude above which `f64`
/// evaluation is abandoned under [`Precision::Auto`].
pub const CANCELLATION_LIMIT: f64 = 1e6;

/// One evaluation of a spectral function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSample {
    pub x: f64,
    pub value: f64,
    /// Index `n` of the closest pole.
    pub nearest_pole: usize,
    /// Location of that pole (`n` for the symmetric model, `n ∓ ε` otherwise).
    pub pole_position: f64,
    pub pole_distance: f64,
    pub converged: bool,
    pub n_used: usize,
    pub near_pole: bool,
    /// Σ|terms| / |largest partial result|; large values mean lost digits.
    pub cancellation: f64,
    pub extended: bool,
}

/// Compensated sums `A = Σ w_n` and `B = Σ w_n / (x - n + s)`.
struct Sums<T> {
    a: T,
    b: T,
    abs_a: f64,
    abs_b: f64,
    n_used: usize,
    converged: bool,
}

fn sums<T: Real>(
    x: f64,
    shift: f64,
    p: &NormalizedParams,
    tol: &Tolerances,
    min_order: usize,
) -> Result<Sums<T>> {
    let raw = forward_series::<T>(x, shift, p, tol, min_order)?;
    let xt = T::lift(x + shift);
    let mut a = NeumaierSum::<T>::new();
    let mut b = NeumaierSum::<T>::new();
    let (mut abs_a, mut abs_b) = (0.0, 0.0);
    for (n, &w) in raw.w.iter().enumerate() {
        a += w;
        abs_a += w.abs().lower();
        if p.delta != 0.0 {
            let t = w.quot(xt - T::lift(n as f64));
            b += t;
            abs_b += t.abs().lower();
        }
    }
    Ok(Sums {
        a: a.sum(),
        b: b.sum(),
        abs_a,
        abs_b,
        n_used: raw.w.len(),
        converged: raw.converged,
    })
}

fn pole_context(x: f64, shift: f64) -> (usize, f64, f64) {
    let (n, d) = nearest_pole(x, shift);
    (n, n as f64 - shift, d)
}

fn require_converged(converged: bool, tol: &Tolerances) -> Result<()> {
    if converged {
        Ok(())
    } else {
        Err(RabiError::NoConvergence {
            what: "spectral series",
            iterations: tol.n_max,
        })
    }
}

fn ratio(abs_sum: f64, magnitude: f64) -> f64 {
    if magnitude > 0.0 {
        abs_sum / magnitude
    } else if abs_sum > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Runs `eval` at the precision requested by `tol`.
fn dispatch<F64, EXT>(tol: &Tolerances, f: F64, e: EXT) -> Result<GSample>
where
    F64: Fn() -> Result<GSample>,
    EXT: Fn() -> Result<GSample>,
{
    match tol.precision {
        Precision::Double => f(),
        Precision::Extended => e(),
        Precision::Auto => {
            let s = f()?;
            if s.cancellation > CANCELLATION_LIMIT {
                e()
            } else {
                Ok(s)
            }
        }
    }
}

fn eval_g_in<T: Real>(parity: Parity, x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<GSample> {
    let s = sums::<T>(x, 0.0, p, tol, 0)?;
    require_converged(s.converged, tol)?;
    let d = T::lift(parity.sign() * p.delta);
    let value = s.a - d * s.b;
    let mag = s.a.abs().lower().max((d * s.b).abs().lower());
    let (n, pole, dist) = pole_context(x, 0.0);
    Ok(GSample {
        x,
        value: value.lower(),
        nearest_pole: n,
        pole_position: pole,
        pole_distance: dist,
        converged: true,
        n_used: s.n_used,
        near_pole: p.delta != 0.0 && dist < NEAR_POLE_WINDOW,
        cancellation: ratio(s.abs_a + p.delta.abs() * s.abs_b, mag),
        extended: T::UNIT_ROUNDOFF < 1e-20,
    })
}

fn require_symmetric(p: &NormalizedParams) -> Result<()> {
    if p.epsilon != 0.0 {
        Err(RabiError::InvalidParams(
            "G± is defined for the parity-symmetric model (epsilon = 0)".into(),
        ))
    } else {
        Ok(())
    }
}

/// `G_±(x)` for the parity sector `parity`.
pub fn eval_g(parity: Parity, x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<GSample> {
    require_symmetric(p)?;
    dispatch(
        tol,
        || eval_g_in::<f64>(parity, x, p, tol),
        || eval_g_in::<TwoFloat>(parity, x, p, tol),
    )
}

/// `(x - n) G_±(x)`, continuous through the pole at `x = n`.
pub fn eval_g_cleared(
    parity: Parity,
    x: f64,
    pole: usize,
    p: &NormalizedParams,
    tol: &Tolerances,
) -> Result<f64> {
    let s = eval_g(parity, x, p, tol)?;
    Ok((x - pole as f64) * s.value)
}

/// `R±(x)`.
pub fn eval_r(branch: Branch, x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<f64> {
    Ok(eval_r_pair(branch, x, p, tol)?.0)
}

/// `R̄±(x)`.
pub fn eval_rbar(branch: Branch, x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<f64> {
    Ok(eval_r_pair(branch, x, p, tol)?.1)
}

fn eval_r_pair(branch: Branch, x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<(f64, f64)> {
    let shift = branch.shift(p);
    let s = sums::<f64>(x, shift, p, tol, 0)?;
    require_converged(s.converged, tol)?;
    let mag = s.a.abs().max(p.delta.abs() * s.b.abs());
    let bad = ratio(s.abs_a + p.delta.abs() * s.abs_b, mag) > CANCELLATION_LIMIT;
    if tol.precision == Precision::Extended || (tol.precision == Precision::Auto && bad) {
        let s = sums::<TwoFloat>(x, shift, p, tol, 0)?;
        return Ok((s.a.lower(), s.b.lower()));
    }
    Ok((s.a, s.b))
}

fn eval_g_eps_in<T: Real>(x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<GSample> {
    let sp = Branch::Plus.shift(p);
    let sm = Branch::Minus.shift(p);
    let mut plus = sums::<T>(x, sp, p, tol, 0)?;
    let mut minus = sums::<T>(x, sm, p, tol, 0)?;
    // shared truncation order
    if plus.n_used < minus.n_used {
        plus = sums::<T>(x, sp, p, tol, minus.n_used)?;
    } else if minus.n_used < plus.n_used {
        minus = sums::<T>(x, sm, p, tol, plus.n_used)?;
    }
    require_converged(plus.converged && minus.converged, tol)?;
    let d2 = T::lift(p.delta * p.delta);
    let first = d2 * plus.b * minus.b;
    let second = plus.a * minus.a;
    let value = first - second;
    let mag_p = plus.a.abs().lower().max(p.delta.abs() * plus.b.abs().lower());
    let mag_m = minus.a.abs().lower().max(p.delta.abs() * minus.b.abs().lower());
    let canc_p = ratio(plus.abs_a + p.delta.abs() * plus.abs_b, mag_p);
    let canc_m = ratio(minus.abs_a + p.delta.abs() * minus.abs_b, mag_m);
    let canc_outer = ratio(
        first.abs().lower() + second.abs().lower(),
        first.abs().lower().max(second.abs().lower()),
    );
    let (np, pp, dp) = pole_context(x, sp);
    let (nm, pm, dm) = pole_context(x, sm);
    let (n, pole, dist) = if dp <= dm { (np, pp, dp) } else { (nm, pm, dm) };
    Ok(GSample {
        x,
        value: value.lower(),
        nearest_pole: n,
        pole_position: pole,
        pole_distance: dist,
        converged: true,
        n_used: plus.n_used,
        near_pole: p.delta != 0.0 && dist < NEAR_POLE_WINDOW,
        cancellation: canc_p.max(canc_m).max(canc_outer),
        extended: T::UNIT_ROUNDOFF < 1e-20,
    })
}

/// `G_ε(x) = Δ² R̄⁺(x) R̄⁻(x) - R⁺(x) R⁻(x)`.
pub fn eval_g_eps(x: f64, p: &NormalizedParams, tol: &Tolerances) -> Result<GSample> {
    dispatch(
        tol,
        || eval_g_eps_in::<f64>(x, p, tol),
        || eval_g_eps_in::<TwoFloat>(x, p, tol),
    )
}

/// Poles of `G_ε` (both branches) inside `[lo, hi]`, ascending.
pub fn eps_poles(p: &NormalizedParams, lo: f64, hi: f64) -> Vec<f64> {
    if p.delta == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for s in [Branch::Plus.shift(p), Branch::Minus.shift(p)] {
        let first = (lo + s).ceil().max(0.0) as usize;
        let mut n = first;
        while (n as f64 - s) <= hi {
            out.push(n as f64 - s);
            n += 1;
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn residue_in<T: Real>(parity: Parity, n: usize, p: &NormalizedParams, tol: &Tolerances) -> (f64, f64) {
    // Near x = n only f_n is singular: f_n ~ Δ²/(2g (x-n)). K_0..K_n are regular,
    // and each K_m with m > n inherits a simple pole whose residue r_m obeys the
    // same recurrence with r_n = 0, r_{n+1} = Δ² K_n(n) / (2g (n+1)).
    let k = k_up_to_baseline::<T>(n, p);
    let kn = k[n];
    let x = T::lift(n as f64);
    let g = T::lift(p.g);
    let d = T::lift(parity.sign() * p.delta);
    let d2 = T::lift(p.delta * p.delta);
    let two = T::lift(2.0);
    let tail = T::lift(tol.tail_for::<T>());

    let mut gpow = g.powi(n as i32);
    let own = -d * kn * gpow;
    let mut acc = NeumaierSum::<T>::new();
    acc += own;
    let mut abs_sum = own.abs().lower();
    let mut max_partial = own.abs();

    let mut r_prev = T::zero();
    let mut r = (d2 * kn).quot(two * g * T::lift((n + 1) as f64));
    let mut quiet = 0usize;
    let mut m = n + 1;
    while m < n + tol.n_max {
        gpow = gpow * g;
        let term = r * gpow * (T::one() - d.quot(x - T::lift(m as f64)));
        acc += term;
        abs_sum += term.abs().lower();
        let s = acc.sum().abs();
        if s > max_partial {
            max_partial = s;
        }
        if term.abs() <= tail * max_partial {
            quiet += 1;
            if quiet >= TAIL_RUN {
                break;
            }
        } else {
            quiet = 0;
        }
        let next = (f_generic(m, x, T::zero(), g, d2) * r - r_prev).quot(T::lift((m + 1) as f64));
        r_prev = r;
        r = next;
        m += 1;
    }
    let h = acc.sum().lower();
    (h, ratio(abs_sum, h.abs()))
}

/// Residue `h±_n` of `G_±` at the simple pole `x = n`.
///
/// Besides the explicit `∓Δ K_n(n) g^n / (x - n)` term, every `K_m` with
/// `m > n` carries a pole at `x = n` inherited from `f_n`; all contributions
/// are proportional to `K_n(n)`, so the residue vanishes exactly at
/// exceptional points.
pub fn residue_h(parity: Parity, n: usize, p: &NormalizedParams) -> Result<f64> {
    require_symmetric(p)?;
    p.require_coupling()?;
    let tol = Tolerances::default();
    let (h, canc) = residue_in::<f64>(parity, n, p, &tol);
    if canc > CANCELLATION_LIMIT {
        return Ok(residue_in::<TwoFloat>(parity, n, p, &tol).0);
    }
    Ok(h)
}

/// Large-`x` approximation `(1 ∓ Δ/x) exp(-x/2)` of the entire part of `G_±`.
pub fn entire_part_asymptotic(parity: Parity, x: f64, p: &NormalizedParams) -> f64 {
    (1.0 - parity.sign() * p.delta / x) * (-x / 2.0).exp()
}

/// `G_±(x)` minus the pole terms `h_n / (x - n)` with `|x - n| ≤ window`.
pub fn entire_part_estimate(
    parity: Parity,
    x: f64,
    window: f64,
    p: &NormalizedParams,
    tol: &Tolerances,
) -> Result<f64> {
    let g = eval_g(parity, x, p, tol)?.value;
    let lo = (x - window).ceil().max(0.0) as usize;
    let hi = (x + window).floor().max(0.0) as usize;
    let mut poles = 0.0;
    if x + window >= 0.0 {
        for n in lo..=hi {
            poles += residue_h(parity, n, p)? / (x - n as f64);
        }
    }
    Ok(g - poles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(g: f64, d: f64) -> NormalizedParams {
        NormalizedParams::rabi(g, d).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn parity_difference_is_the_pole_weighted_sum() {
        let q = p(0.7, 0.4);
        let x = 0.3;
        let plus = eval_g(Parity::Plus, x, &q, &tol()).unwrap().value;
        let minus = eval_g(Parity::Minus, x, &q, &tol()).unwrap().value;
        let t = crate::recurrence::k_table(x, &q, &tol()).unwrap();
        let direct: f64 = t
            .terms
            .iter()
            .enumerate()
            .map(|(n, w)| w / (x - n as f64))
            .sum();
        assert!((plus - minus + 2.0 * 0.4 * direct).abs() < 1e-13);
    }

    #[test]
    fn delta_zero_collapses_parities() {
        let q = p(0.7, 0.0);
        for x in [-0.5, 0.0, 0.3, 1.0, 2.2] {
            let a = eval_g(Parity::Plus, x, &q, &tol()).unwrap().value;
            let b = eval_g(Parity::Minus, x, &q, &tol()).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn parity_relation_under_delta_flip() {
        let q = p(0.7, 0.4);
        let r = p(0.7, -0.4);
        for x in [-0.6, 0.3, 1.7, 3.4] {
            let a = eval_g(Parity::Plus, x, &q, &tol()).unwrap().value;
            let b = eval_g(Parity::Minus, x, &r, &tol()).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ground_state_sector() {
        // No sign change of G+ on [-0.6, -0.4]; the ground state is a G- zero below 0.
        let q = p(0.7, 0.4);
        let a = eval_g(Parity::Plus, -0.6, &q, &tol()).unwrap().value;
        let b = eval_g(Parity::Plus, -0.4, &q, &tol()).unwrap().value;
        assert_eq!(a.signum(), b.signum());
        let lo = eval_g(Parity::Minus, -0.5, &q, &tol()).unwrap().value;
        let hi = eval_g(Parity::Minus, -0.1, &q, &tol()).unwrap().value;
        assert_ne!(lo.signum(), hi.signum());
    }

    #[test]
    fn sample_metadata() {
        let q = p(0.7, 0.4);
        let s = eval_g(Parity::Plus, 2.0005, &q, &tol()).unwrap();
        assert_eq!(s.nearest_pole, 2);
        assert!(s.near_pole);
        assert!((s.pole_distance - 5e-4).abs() < 1e-12);
        assert!(eval_g(Parity::Plus, 2.0 + 1e-9, &q, &tol()).is_err());
        let eps = NormalizedParams::new(0.7, 0.4, 0.1).unwrap();
        assert!(eval_g(Parity::Plus, 0.3, &eps, &tol()).is_err());
    }

    #[test]
    fn eps_branches_coincide_at_zero_eps() {
        let q = NormalizedParams::new(0.5, 0.7, 0.0).unwrap();
        for x in [-0.4, 0.35, 1.6] {
            assert_eq!(
                eval_r(Branch::Plus, x, &q, &tol()).unwrap(),
                eval_r(Branch::Minus, x, &q, &tol()).unwrap()
            );
            assert_eq!(
                eval_rbar(Branch::Plus, x, &q, &tol()).unwrap(),
                eval_rbar(Branch::Minus, x, &q, &tol()).unwrap()
            );
        }
    }

    #[test]
    fn g_eps_factorizes_at_zero_eps() {
        // Δ²R̄² - R² = (ΔR̄ - R)(ΔR̄ + R) = -G+ G-
        let q = NormalizedParams::new(0.7, 0.4, 0.0).unwrap();
        for x in [-0.4, 0.3, 1.6, 2.8] {
            let e = eval_g_eps(x, &q, &tol()).unwrap().value;
            let gp = eval_g(Parity::Plus, x, &q, &tol()).unwrap().value;
            let gm = eval_g(Parity::Minus, x, &q, &tol()).unwrap().value;
            assert!((e + gp * gm).abs() < 1e-12 * (gp * gm).abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn g_eps_even_in_eps() {
        let a = NormalizedParams::new(0.4, 0.7, 0.2).unwrap();
        let b = NormalizedParams::new(0.4, 0.7, -0.2).unwrap();
        for x in [-0.5, 0.5, 1.5, 2.3] {
            let u = eval_g_eps(x, &a, &tol()).unwrap().value;
            let v = eval_g_eps(x, &b, &tol()).unwrap().value;
            assert!((u - v).abs() <= 1e-14 * u.abs().max(1e-300), "x={x}");
        }
    }

    #[test]
    fn eps_pole_bookkeeping() {
        let q = NormalizedParams::new(0.4, 0.7, 0.2).unwrap();
        let s = eval_g_eps(0.85, &q, &tol()).unwrap();
        assert!((s.pole_position - 0.8).abs() < 1e-15);
        assert_eq!(s.nearest_pole, 1);
        assert_eq!(eps_poles(&q, -1.0, 2.0), vec![-0.2, 0.2, 0.8, 1.2, 1.8]);
    }

    #[test]
    fn residues_are_limits_of_the_cleared_function() {
        let q = p(0.7, 0.4);
        for n in 0..=5usize {
            for parity in Parity::BOTH {
                let h = residue_h(parity, n, &q).unwrap();
                for side in [-1.0, 1.0] {
                    let x = n as f64 + side * 1e-7;
                    let c = eval_g_cleared(parity, x, n, &q, &tol()).unwrap();
                    assert!((c - h).abs() < 1e-6, "n={n} {parity} {c} vs {h}");
                }
            }
        }
    }

    #[test]
    fn residue_vanishes_at_judd_point() {
        let q = p(0.4, 0.6);
        assert_eq!(crate::recurrence::k_at_baseline(1, &q).unwrap().abs() < 1e-15, true);
        for parity in Parity::BOTH {
            assert!(residue_h(parity, 1, &q).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn asymptotic_form_shape() {
        let q = p(0.7, 0.4);
        // d/dx < 0 once x² - Δx - 2Δ > 0
        let start = (0.4 + (0.16f64 + 3.2).sqrt()) / 2.0;
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let x = start + 1e-9 + 0.1 * i as f64;
            let v = entire_part_asymptotic(Parity::Plus, x, &q);
            assert!(v > 0.0);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn auto_precision_escalates_at_large_x() {
        let q = p(0.7, 0.4);
        let s = eval_g(Parity::Plus, 40.3, &q, &tol()).unwrap();
        assert!(s.extended);
        let d = eval_g(
            Parity::Plus,
            40.3,
            &q,
            &Tolerances {
                precision: Precision::Double,
                ..tol()
            },
        )
        .unwrap();
        assert!(d.cancellation > CANCELLATION_LIMIT);
        let s = eval_g(Parity::Plus, 0.3, &q, &tol()).unwrap();
        assert!(!s.extended);
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let q = p(0.7, 0.4);
        let a = eval_g(Parity::Minus, 1.234, &q, &tol()).unwrap();
        let b = eval_g(Parity::Minus, 1.234, &q, &tol()).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
