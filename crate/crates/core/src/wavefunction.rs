//! Eigenfunctions in the Bargmann representation and their Fock amplitudes.
//!
//! At a root `x` of `G_±` the wavefunction has two series forms,
//!
//! * `ψ(z) = e^{gz} Σ K_n(x) (g - z)^n`,
//! * `ψ(z) = e^{-gz} Σ K_n(x) (±Δ)/(x - n) (z + g)^n`,
//!
//! each convergent for `|z| < g` and equal there exactly when `G_±(x) = 0`.
//! The Taylor coefficients of `ψ` around `z = 0` give the Fock amplitudes
//! of one spin component in the `σx` eigenbasis; the other component is the
//! parity image `ψ(-z)`.
//!
//! Taylor coefficients come from a cancelling sum whose relative error grows
//! like `√(m!)/g^m`, so they are computed in double-double at a root polished
//! in double-double, and truncated where the amplitudes stop decreasing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{RabiError, Result};
use crate::model::{ModelParams, NormalizedParams, Parity};
use crate::real::Real;
use crate::recurrence::{f_generic, k_table, Tolerances};

/// Highest Taylor order ever computed.
pub const MAX_ORDER: usize = 48;

/// Largest accepted distance between a supplied root and its polished value.
const POLISH_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Route {
    /// `e^{gz} Σ K_n (g - z)^n`.
    Phi2,
    /// `e^{-gz} Σ K_n (±Δ)/(x - n) (z + g)^n`.
    Phi1,
}

/// Taylor expansion `ψ(z) = Σ c_m z^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BargmannSeries {
    pub taylor: Vec<f64>,
    pub source: Route,
    pub parity: Parity,
    pub x_root: f64,
    /// `|c_M| √(M!)` relative to the largest such amplitude.
    pub tail_ratio: f64,
}

impl BargmannSeries {
    pub fn order(&self) -> usize {
        self.taylor.len().saturating_sub(1)
    }

    /// Sums the truncated Taylor series at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.taylor
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `e^{αz}` (a coherent state), used for the `Δ = 0` limit.
    pub fn coherent(alpha: f64, parity: Parity, order: usize) -> Self {
        let mut taylor = Vec::with_capacity(order + 1);
        let mut c = 1.0;
        for m in 0..=order {
            taylor.push(c);
            c *= alpha / (m + 1) as f64;
        }
        let last = taylor[order].abs() * factorial_sqrt(order);
        Self {
            taylor,
            source: Route::Phi2,
            parity,
            x_root: 0.0,
            tail_ratio: last,
        }
    }
}

/// Spin components `|↑, m⟩`, `|↓, m⟩` of a normalized state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub parity: Parity,
}

impl FockVector {
    /// Layout of the oracle's full basis: all `↑` states, then all `↓` states.
    pub fn to_full_basis(&self, n_tr: usize) -> Vec<f64> {
        let mut v = vec![0.0; 2 * n_tr];
        for (m, (&u, &d)) in self.up.iter().zip(&self.down).enumerate().take(n_tr) {
            v[m] = u;
            v[n_tr + m] = d;
        }
        v
    }

    pub fn norm(&self) -> f64 {
        self.up.iter().chain(&self.down).map(|a| a * a).sum::<f64>().sqrt()
    }
}

fn factorial_sqrt(m: usize) -> f64 {
    (1..=m).map(|k| (k as f64).sqrt()).product()
}

fn symmetric(params: &ModelParams) -> Result<NormalizedParams> {
    let p = params.normalize()?;
    if p.epsilon != 0.0 {
        return Err(RabiError::InvalidParams(
            "wavefunctions are built for the parity-symmetric model".into(),
        ));
    }
    p.require_coupling()?;
    Ok(p)
}

/// `K_0..K_{len-1}` at `x` in precision `T`.
fn k_values<T: Real>(x: T, p: &NormalizedParams, len: usize) -> Vec<T> {
    let g = T::lift(p.g);
    let d = T::lift(p.delta);
    let d2 = d * d;
    let mut k = Vec::with_capacity(len);
    k.push(T::one());
    if len > 1 {
        k.push(f_generic(0, x, T::zero(), g, d2));
    }
    for n in 2..len {
        let next = (f_generic(n - 1, x, T::zero(), g, d2) * k[n - 1] - k[n - 2]).quot(T::lift(n as f64));
        k.push(next);
    }
    k
}

/// Length of the coefficient sequence: terms decay like `2^-n` past the hump,
/// and the binomial sums up to `MAX_ORDER` need a long tail.
fn series_len(x: f64) -> usize {
    x.max(0.0) as usize + 8 * MAX_ORDER + 160
}

/// `Σ K_n g^n (1 ∓ Δ/(x - n))` in precision `T` at a precise `x`.
fn g_value<T: Real>(parity: Parity, x: T, p: &NormalizedParams) -> T {
    let len = series_len(x.lower());
    let k = k_values(x, p, len);
    let g = T::lift(p.g);
    let d = T::lift(parity.sign() * p.delta);
    let mut gpow = T::one();
    let mut acc = T::zero();
    for (n, &kn) in k.iter().enumerate() {
        acc = acc + kn * gpow * (T::one() - d.quot(x - T::lift(n as f64)));
        gpow = gpow * g;
    }
    acc
}

/// Newton iteration on `G_±` in double-double, starting from an `f64` root.
fn polish(parity: Parity, x_root: f64, p: &NormalizedParams) -> TwoFloat {
    let start = TwoFloat::from(x_root);
    let h = TwoFloat::from(1e-9);
    let mut x = start;
    for _ in 0..12 {
        let gx = g_value(parity, x, p);
        let slope = (g_value(parity, x + h, p) - g_value(parity, x - h, p)).quot(TwoFloat::from(2.0) * h);
        if slope == TwoFloat::from(0.0) {
            break;
        }
        let step = gx.quot(slope);
        x -= step;
        if (x - start).abs().lower() > POLISH_RADIUS {
            return start;
        }
        if step.abs().lower() < 1e-30 * x.abs().lower().max(1.0) {
            break;
        }
    }
    x
}

fn taylor_coefficients(parity: Parity, route: Route, x: TwoFloat, p: &NormalizedParams, order: usize) -> Vec<TwoFloat> {
    let one = TwoFloat::from(1.0);
    let zero = TwoFloat::from(0.0);
    let g = TwoFloat::from(p.g);
    let len = series_len(x.lower());
    let k = k_values(x, p, len);
    // weights and the expansion point: (g - z)^n or (g + z)^n
    let (weights, sign): (Vec<TwoFloat>, TwoFloat) = match route {
        Route::Phi2 => (k.clone(), -one),
        Route::Phi1 => {
            let d = TwoFloat::from(parity.sign() * p.delta);
            let w = k
                .iter()
                .enumerate()
                .map(|(n, &kn)| (kn * d).quot(x - TwoFloat::from(n as f64)))
                .collect();
            (w, one)
        }
    };
    // s_m = sign^m Σ_n w_n C(n, m) g^(n-m), with b_{n,m} = C(n, m) g^(n-m)
    let mut s = vec![zero; order + 1];
    let mut gpow = one;
    for (n, &w) in weights.iter().enumerate() {
        let mut b = gpow;
        for (m, sm) in s.iter_mut().enumerate().take(order.min(n) + 1) {
            *sm += w * b;
            if m < n {
                b = (b * TwoFloat::from((n - m) as f64)).quot(TwoFloat::from((m + 1) as f64) * g);
            }
        }
        gpow = gpow * g;
    }
    let mut sp = one;
    for sm in s.iter_mut() {
        *sm *= sp;
        sp *= sign;
    }
    // times e^{∓gz}: exponent rate +g for the first route, -g for the second
    let rate = match route {
        Route::Phi2 => g,
        Route::Phi1 => -g,
    };
    let mut e = vec![one; order + 1];
    for m in 1..=order {
        e[m] = (e[m - 1] * rate).quot(TwoFloat::from(m as f64));
    }
    (0..=order)
        .map(|m| (0..=m).fold(zero, |acc, j| acc + e[j] * s[m - j]))
        .collect()
}

/// Index where the smoothed `|c_m| √(m!)` is smallest;
/// beyond it the amplitudes are dominated by rounding and root error.
fn cut_order(amps: &[f64]) -> usize {
    let env: Vec<f64> = (0..amps.len())
        .map(|m| amps[m..(m + 3).min(amps.len())].iter().fold(0.0, |a: f64, b| a.max(b.abs())))
        .collect();
    // the contaminated tail grows without bound, so the envelope minimum is the cut
    (0..env.len())
        .min_by(|&a, &b| env[a].total_cmp(&env[b]).then(a.cmp(&b)))
        .unwrap_or(env.len() - 1)
}

fn build_series(
    parity: Parity,
    route: Route,
    x_root: f64,
    params: &ModelParams,
    order: Option<usize>,
) -> Result<BargmannSeries> {
    let p = symmetric(params)?;
    if let Some(m) = order {
        if m == 0 || m > MAX_ORDER {
            return Err(RabiError::InvalidParams(format!("Taylor order must be in 1..={MAX_ORDER}")));
        }
    }
    // refuse points on a pole
    k_table(x_root, &p, &Tolerances::default())?;
    let x = polish(parity, x_root, &p);
    let coeffs = taylor_coefficients(parity, route, x, &p, MAX_ORDER);
    let taylor: Vec<f64> = coeffs.iter().map(|c| c.lower()).collect();
    if taylor.iter().any(|c| !c.is_finite()) {
        return Err(RabiError::NoConvergence {
            what: "Bargmann Taylor coefficients",
            iterations: MAX_ORDER,
        });
    }
    let amps: Vec<f64> = taylor
        .iter()
        .enumerate()
        .map(|(m, c)| c * factorial_sqrt(m))
        .collect();
    let cut = cut_order(&amps);
    let keep = order.map_or(cut, |m| m.min(cut));
    let peak = amps[..=keep].iter().fold(0.0f64, |a, b| a.max(b.abs()));
    Ok(BargmannSeries {
        tail_ratio: if peak > 0.0 { amps[keep].abs() / peak } else { 0.0 },
        taylor: taylor[..=keep].to_vec(),
        source: route,
        parity,
        x_root,
    })
}

/// Taylor series of `e^{gz} Σ K_n (g - z)^n` at a root of `G_±`.
/// `order = None` picks the order adaptively.
pub fn psi_from_phi2(parity: Parity, x_root: f64, params: &ModelParams, order: Option<usize>) -> Result<BargmannSeries> {
    build_series(parity, Route::Phi2, x_root, params, order)
}

/// Taylor series of `e^{-gz} Σ K_n (±Δ)/(x - n) (z + g)^n` at a root of `G_±`.
pub fn psi_from_phi1(parity: Parity, x_root: f64, params: &ModelParams, order: Option<usize>) -> Result<BargmannSeries> {
    build_series(parity, Route::Phi1, x_root, params, order)
}

/// Both closed forms of `ψ` summed directly at `z`.
pub fn route_values(parity: Parity, x: f64, params: &ModelParams, z: Complex64) -> Result<(Complex64, Complex64)> {
    let p = symmetric(params)?;
    if z.norm() >= p.g {
        return Err(RabiError::OutsideDisc {
            z: z.norm(),
            radius: p.g,
        });
    }
    let table = k_table(x, &p, &Tolerances::default())?;
    let g = p.g;
    let d = parity.sign() * p.delta;
    // terms decay like (|g ± z| / 2g)^n; run until far below f64 resolution
    let ratio = (g + z.norm()) / (2.0 * g);
    let needed = ((1e-18f64).ln() / ratio.ln()).ceil() as usize + x.max(0.0) as usize + 10;
    let len = needed.max(table.values.len()).min(20_000);
    let k = k_values(x, &p, len);
    let (u, v) = (Complex64::new(g, 0.0) - z, Complex64::new(g, 0.0) + z);
    let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let (mut pu, mut pv) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    for (n, &kn) in k.iter().enumerate() {
        a += pu * kn;
        b += pv * (kn * d / (x - n as f64));
        pu *= u;
        pv *= v;
    }
    Ok(((z * g).exp() * a, (-z * g).exp() * b))
}

/// Largest `|φ_2(-z) - φ_1(z)|` over the samples; zero (to rounding) exactly
/// on the spectrum of the given parity.
pub fn consistency_check(parity: Parity, x: f64, params: &ModelParams, z_samples: &[Complex64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in z_samples {
        let (a, b) = route_values(parity, x, params, z)?;
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

/// `count` points on the circle `|z| = radius`.
pub fn circle_samples(radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / count as f64))
        .collect()
}

/// Normalized two-component Fock vector from a Bargmann series.
///
/// `A_m = c_m √(m!)` are the amplitudes of the `σx = +1` component and
/// `B_m = ±(-1)^m A_m` those of its parity image; `|↑⟩, |↓⟩` components are
/// `(A ± B)/√2`.
pub fn fock_amplitudes(series: &BargmannSeries, parity: Parity) -> Result<FockVector> {
    let s = parity.sign();
    let mut up = Vec::with_capacity(series.taylor.len());
    let mut down = Vec::with_capacity(series.taylor.len());
    for (m, &c) in series.taylor.iter().enumerate() {
        let a = c * factorial_sqrt(m);
        let b = if m % 2 == 0 { s * a } else { -s * a };
        up.push((a + b) / std::f64::consts::SQRT_2);
        down.push((a - b) / std::f64::consts::SQRT_2);
    }
    let norm = up.iter().chain(&down).map(|a| a * a).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(RabiError::NoConvergence {
            what: "Fock amplitude normalization",
            iterations: series.taylor.len(),
        });
    }
    up.iter_mut().chain(down.iter_mut()).for_each(|a| *a /= norm);
    Ok(FockVector { up, down, parity })
}
