//! Certified eigenvalue lists from sign data of the spectral functions.
//!
//! The scan range is cut into pieces: ordinary stretches sampled every
//! `step`, and short windows of half-width [`NEAR_POLE_WINDOW`] around each
//! pole where the pole-cleared function `Π (x - p) G(x)` is sampled instead.
//! Each sign change is refined with a bracketed Brent iteration. The whole scan
//! is repeated with halved steps until the root count stops changing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bracket::brent;
use crate::error::{RabiError, Result};
use crate::gfunction::{eval_g, eval_g_eps, NEAR_POLE_WINDOW};
use crate::model::{ModelParams, NormalizedParams, Parity};
use crate::recurrence::{exceptional_polynomial, k_up_to_baseline, schweber_residual, Tolerances};

/// Relative size of `K_n(n) g^n` below which baseline `n` counts as exceptional.
pub const EXCEPTIONAL_THRESHOLD: f64 = 1e-10;

/// Largest accepted `|f_0 - V_1|` at a refined Schweber root; larger values
/// mark sign changes caused by poles.
pub const SCHWEBER_ACCEPT: f64 = 1e-6;

/// Pieces inside a pole window stop this far from the pole itself.
const POLE_GAP: f64 = 2e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelKind {
    Regular,
    Exceptional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    /// Spectral variable in `ω = 1` units.
    pub x_root: f64,
    /// `x_root - g²/ω` in user units.
    pub energy: f64,
    /// `None` for the broken-parity model.
    pub parity: Option<Parity>,
    /// Position within its parity sector (or the whole list when there is no parity).
    pub index: usize,
    pub kind: LevelKind,
    /// `|G(x_root)|` for regular roots, relative `|K_n(n) g^n|` for exceptional ones.
    pub residual: f64,
    /// Isolating interval (a grid cell) in `ω = 1` units.
    pub bracket: (f64, f64),
    /// Another level of the other parity coincides with this one.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Initial grid step in `ω = 1` units.
    pub step: f64,
    /// Samples per piece inside a pole window.
    pub window_points: usize,
    /// Maximum number of step halvings while root counts keep changing.
    pub max_halvings: usize,
    /// Final bracket width.
    pub x_tol: f64,
    pub tolerances: Tolerances,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            step: 1.0 / 200.0,
            window_points: 16,
            max_halvings: 4,
            x_tol: 1e-12,
            tolerances: Tolerances::default(),
        }
    }
}

/// A doubly degenerate level sitting on a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub n: usize,
    /// Coupling in user units.
    pub g: f64,
    /// `nω - g²/ω`.
    pub energy: f64,
    /// `|K_n(n) g^n|` at the refined coupling.
    pub residual: f64,
}

/// A root located by the scanner.
#[derive(Debug, Clone, Copy)]
struct Found {
    x: f64,
    cell: (f64, f64),
    residual: f64,
}

struct Piece {
    lo: f64,
    hi: f64,
    points: usize,
    /// Poles cleared by multiplying with `Π (x - p)`.
    poles: Vec<f64>,
}

impl Piece {
    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.points;
        (0..=n).map(move |i| {
            if i == n {
                self.hi
            } else {
                self.lo + (self.hi - self.lo) * i as f64 / n as f64
            }
        })
    }

    fn factor(&self, x: f64) -> f64 {
        self.poles.iter().map(|p| x - p).product()
    }
}

fn pieces(x_min: f64, x_max: f64, poles: &[f64], step: f64, window_points: usize) -> Vec<Piece> {
    // merge overlapping pole windows
    let mut windows: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for &p in poles {
        let (lo, hi) = (p - NEAR_POLE_WINDOW, p + NEAR_POLE_WINDOW);
        if hi < x_min || lo > x_max {
            continue;
        }
        match windows.last_mut() {
            Some(w) if lo <= w.1 => {
                w.1 = w.1.max(hi);
                w.2.push(p);
            }
            _ => windows.push((lo, hi, vec![p])),
        }
    }
    let mut out = Vec::new();
    let push_plain = |lo: f64, hi: f64, out: &mut Vec<Piece>| {
        if hi > lo {
            let points = ((hi - lo) / step).ceil().max(1.0) as usize;
            out.push(Piece {
                lo,
                hi,
                points,
                poles: Vec::new(),
            });
        }
    };
    let mut cursor = x_min;
    for (wlo, whi, group) in windows {
        push_plain(cursor, wlo.min(x_max), &mut out);
        let mut edges = vec![wlo.max(x_min)];
        for &p in &group {
            edges.push(p - POLE_GAP);
            edges.push(p + POLE_GAP);
        }
        edges.push(whi.min(x_max));
        for pair in edges.chunks(2) {
            let (lo, hi) = (pair[0].max(x_min), pair[1].min(x_max));
            if hi > lo {
                out.push(Piece {
                    lo,
                    hi,
                    points: window_points,
                    poles: group.clone(),
                });
            }
        }
        cursor = whi.max(cursor);
    }
    push_plain(cursor, x_max, &mut out);
    out
}

fn finite(v: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RabiError::Unsupported(format!("non-finite spectral function at x = {x}")))
    }
}

fn scan_once<F>(f: &F, x_min: f64, x_max: f64, poles: &[f64], opts: &ScanOptions, level: u32) -> Result<Vec<Found>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let scale = 2f64.powi(level as i32);
    let pieces = pieces(
        x_min,
        x_max,
        poles,
        opts.step / scale,
        opts.window_points * scale as usize,
    );
    let samples: Vec<(usize, f64)> = pieces
        .iter()
        .enumerate()
        .flat_map(|(i, pc)| pc.grid().map(move |x| (i, x)))
        .collect();
    let values: Vec<f64> = samples
        .par_iter()
        .map(|&(i, x)| f(x).and_then(|v| finite(pieces[i].factor(x) * v, x)))
        .collect::<Result<_>>()?;

    let mut brackets = Vec::new();
    for k in 1..samples.len() {
        let ((i, a), (j, b)) = (samples[k - 1], samples[k]);
        if i != j {
            continue;
        }
        let (fa, fb) = (values[k - 1], values[k]);
        if (fa < 0.0) != (fb < 0.0) {
            brackets.push((i, a, b, fa, fb));
        }
    }
    brackets
        .par_iter()
        .map(|&(i, a, b, fa, fb)| {
            let pc = &pieces[i];
            let cleared = |x: f64| f(x).map(|v| pc.factor(x) * v);
            let r = brent(cleared, a, b, fa, fb, opts.x_tol)?;
            Ok(Found {
                x: r.x,
                cell: (a, b),
                residual: f(r.x)?.abs(),
            })
        })
        .collect()
}

/// Scans, then halves the step until the number of roots is unchanged.
fn scan_stable<F>(f: &F, x_min: f64, x_max: f64, poles: &[f64], opts: &ScanOptions) -> Result<Vec<Found>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(RabiError::InvalidParams(format!("bad scan range [{x_min}, {x_max}]")));
    }
    if !(opts.step > 0.0) || opts.window_points == 0 {
        return Err(RabiError::InvalidParams("scan step must be positive".into()));
    }
    let mut prev = scan_once(f, x_min, x_max, poles, opts, 0)?;
    for level in 1..=opts.max_halvings as u32 {
        let next = scan_once(f, x_min, x_max, poles, opts, level)?;
        if next.len() == prev.len() {
            return Ok(next);
        }
        prev = next;
    }
    Err(RabiError::NoConvergence {
        what: "root count under grid refinement",
        iterations: opts.max_halvings,
    })
}

fn baseline_poles(x_min: f64, x_max: f64, delta: f64) -> Vec<f64> {
    if delta == 0.0 {
        return Vec::new();
    }
    let lo = (x_min - NEAR_POLE_WINDOW).ceil().max(0.0) as i64;
    let hi = (x_max + NEAR_POLE_WINDOW).floor() as i64;
    (lo..=hi).map(|n| n as f64).collect()
}

fn symmetric_params(params: &ModelParams) -> Result<NormalizedParams> {
    let p = params.normalize()?;
    if p.epsilon != 0.0 {
        return Err(RabiError::InvalidParams(
            "parity-resolved spectra need epsilon = 0".into(),
        ));
    }
    p.require_coupling()?;
    Ok(p)
}

fn regular(params: &ModelParams, parity: Option<Parity>, index: usize, f: &Found) -> Eigenvalue {
    Eigenvalue {
        x_root: f.x,
        energy: params.energy_from_x(f.x),
        parity,
        index,
        kind: LevelKind::Regular,
        residual: f.residual,
        bracket: f.cell,
        degenerate: false,
    }
}

/// Zeros of `G_±` in `[x_min, x_max]` (`ω = 1` units), ascending.
pub fn find_regular(
    parity: Parity,
    x_min: f64,
    x_max: f64,
    params: &ModelParams,
    opts: &ScanOptions,
) -> Result<Vec<Eigenvalue>> {
    let p = symmetric_params(params)?;
    let f = |x: f64| eval_g(parity, x, &p, &opts.tolerances).map(|s| s.value);
    let poles = baseline_poles(x_min, x_max, p.delta);
    let found = scan_stable(&f, x_min, x_max, &poles, opts)?;
    Ok(found
        .iter()
        .enumerate()
        .map(|(i, r)| regular(params, Some(parity), i, r))
        .collect())
}

/// Start of every scan that should catch the ground state.
fn scan_floor(params: &ModelParams) -> f64 {
    params.x_lower_bound() - 0.05
}

/// The lowest `m` regular levels of one parity.
pub fn lowest_levels(parity: Parity, m: usize, params: &ModelParams, opts: &ScanOptions) -> Result<Vec<Eigenvalue>> {
    let x_min = scan_floor(params);
    let mut x_max = x_min + m as f64 + 1.5;
    for _ in 0..16 {
        let mut levels = find_regular(parity, x_min, x_max, params, opts)?;
        if levels.len() >= m {
            levels.truncate(m);
            return Ok(levels);
        }
        x_max += (m - levels.len()) as f64 + 1.0;
    }
    Err(RabiError::NoConvergence {
        what: "extending the scan range",
        iterations: 16,
    })
}

/// `|K_n(n) g^n|` relative to the largest `|K_m(n) g^m|`, `m < n`.
pub fn exceptional_measure(n: usize, params: &ModelParams) -> Result<f64> {
    let p = symmetric_params(params)?;
    if n == 0 {
        return Ok(1.0);
    }
    let k = k_up_to_baseline::<f64>(n, &p);
    let mut scale = 0.0f64;
    let mut gpow = 1.0;
    for km in &k[..n] {
        scale = scale.max((km * gpow).abs());
        gpow *= p.g;
    }
    Ok((k[n] * gpow).abs() / scale)
}

/// Couplings in `[g_min, g_max]` where baseline `n` carries an exceptional
/// eigenvalue, i.e. `K_n(n) = 0` at fixed `Δ`.
pub fn find_exceptional(
    n: usize,
    params: &ModelParams,
    g_min: f64,
    g_max: f64,
    opts: &ScanOptions,
) -> Result<Vec<ExceptionalPoint>> {
    params.validate()?;
    if n == 0 {
        return Err(RabiError::InvalidParams("baseline 0 has no exceptional points".into()));
    }
    if !(g_min >= 0.0 && g_max > g_min && g_max.is_finite()) {
        return Err(RabiError::InvalidParams(format!("bad coupling range [{g_min}, {g_max}]")));
    }
    let w = params.omega;
    let delta = params.delta / w;
    let f = |g: f64| Ok(exceptional_polynomial(n, g, delta));
    let gopts = ScanOptions {
        step: ((g_max - g_min) / w / 400.0).min(opts.step),
        x_tol: 1e-15,
        ..*opts
    };
    let roots = scan_stable(&f, g_min / w, g_max / w, &[], &gopts)?;
    roots
        .into_iter()
        .filter(|r| r.x > 0.0)
        .map(|r| {
            let at = params.with_g(r.x * w);
            Ok(ExceptionalPoint {
                n,
                g: at.g,
                energy: at.energy_from_x(n as f64),
                residual: (exceptional_polynomial(n, r.x, delta) / 2f64.powi(n as i32)).abs(),
            })
        })
        .collect()
}

fn mark_degenerate(levels: &mut [Eigenvalue]) {
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            let (a, b) = (levels[i], levels[j]);
            if b.x_root - a.x_root > 1e-9 * a.x_root.abs().max(1.0) {
                break;
            }
            if a.parity != b.parity {
                levels[i].degenerate = true;
                levels[j].degenerate = true;
            }
        }
    }
}

/// Both parity sectors plus exceptional levels below `x_max`, sorted by energy.
pub fn full_spectrum(params: &ModelParams, x_max: f64, opts: &ScanOptions) -> Result<Vec<Eigenvalue>> {
    let p = symmetric_params(params)?;
    let x_min = scan_floor(params);
    let (plus, minus) = rayon::join(
        || find_regular(Parity::Plus, x_min, x_max, params, opts),
        || find_regular(Parity::Minus, x_min, x_max, params, opts),
    );
    let mut all = plus?;
    all.extend(minus?);
    // at Δ = 0 every baseline is a doubly degenerate level and G± has no zeros
    if x_max >= 0.0 {
        let first = if p.delta == 0.0 { 0 } else { 1 };
        for n in first..=x_max.floor() as usize {
            let measure = if p.delta == 0.0 { 0.0 } else { exceptional_measure(n, params)? };
            if measure < EXCEPTIONAL_THRESHOLD {
                for parity in Parity::BOTH {
                    all.push(Eigenvalue {
                        x_root: n as f64,
                        energy: params.energy_from_x(n as f64),
                        parity: Some(parity),
                        index: 0,
                        kind: LevelKind::Exceptional,
                        residual: measure,
                        bracket: (n as f64, n as f64),
                        degenerate: true,
                    });
                }
            }
        }
    }
    all.sort_by(|a, b| a.x_root.total_cmp(&b.x_root).then(a.parity.cmp(&b.parity)));
    for parity in Parity::BOTH {
        for (i, e) in all.iter_mut().filter(|e| e.parity == Some(parity)).enumerate() {
            e.index = i;
        }
    }
    mark_degenerate(&mut all);
    Ok(all)
}

/// Zeros of `G_ε` in `[x_min, x_max]`, ascending.
pub fn spectrum_eps(params: &ModelParams, x_min: f64, x_max: f64, opts: &ScanOptions) -> Result<Vec<Eigenvalue>> {
    let p = params.normalize()?;
    p.require_coupling()?;
    let f = |x: f64| eval_g_eps(x, &p, &opts.tolerances).map(|s| s.value);
    // keep coinciding poles twice: at ε = 0 every pole is double
    let mut poles = Vec::new();
    if p.delta != 0.0 {
        for shift in [p.epsilon, -p.epsilon] {
            let lo = (x_min - NEAR_POLE_WINDOW + shift).ceil().max(0.0) as i64;
            let hi = (x_max + NEAR_POLE_WINDOW + shift).floor() as i64;
            poles.extend((lo..=hi).map(|n| n as f64 - shift));
        }
    }
    poles.sort_by(f64::total_cmp);
    let found = scan_stable(&f, x_min, x_max, &poles, opts)?;
    Ok(found
        .iter()
        .enumerate()
        .map(|(i, r)| regular(params, None, i, r))
        .collect())
}

/// The lowest `m` levels of the broken-parity model.
pub fn lowest_levels_eps(m: usize, params: &ModelParams, opts: &ScanOptions) -> Result<Vec<Eigenvalue>> {
    let x_min = scan_floor(params);
    let mut x_max = x_min + (m as f64) / 2.0 + 1.5;
    for _ in 0..16 {
        let mut levels = spectrum_eps(params, x_min, x_max, opts)?;
        if levels.len() >= m {
            levels.truncate(m);
            return Ok(levels);
        }
        x_max += (m - levels.len()) as f64 / 2.0 + 1.0;
    }
    Err(RabiError::NoConvergence {
        what: "extending the scan range",
        iterations: 16,
    })
}

/// Regular levels of `parity` per interval `[n, n+1)`, `n = 0..intervals`.
/// Levels below `x = 0` are not counted.
pub fn interval_counts(levels: &[Eigenvalue], parity: Parity, intervals: usize) -> Vec<usize> {
    let mut counts = vec![0; intervals];
    for e in levels {
        if e.kind == LevelKind::Regular && e.parity == Some(parity) && e.x_root >= 0.0 {
            let n = e.x_root.floor() as usize;
            if n < intervals {
                counts[n] += 1;
            }
        }
    }
    counts
}

/// Zeros of `f_0(x) - V_1^min(x)` in `[x_min, x_max]`; these are the
/// eigenvalues of both parities.
pub fn schweber_roots(params: &ModelParams, x_min: f64, x_max: f64, opts: &ScanOptions) -> Result<Vec<f64>> {
    let p = symmetric_params(params)?;
    let f = |x: f64| schweber_residual(x, &p);
    let poles = baseline_poles(x_min, x_max, p.delta);
    let found = scan_stable(&f, x_min, x_max, &poles, opts)?;
    Ok(found
        .into_iter()
        .filter(|r| r.residual < SCHWEBER_ACCEPT)
        .map(|r| r.x)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rabi(g: f64, d: f64) -> ModelParams {
        ModelParams::rabi(1.0, g, d).unwrap()
    }

    #[test]
    fn pieces_cover_range() {
        let ps = pieces(-1.0, 2.0, &[0.0, 1.0, 2.0], 0.1, 4);
        assert_eq!(ps.first().unwrap().lo, -1.0);
        assert_eq!(ps.last().unwrap().hi, 2.0 - POLE_GAP);
        for w in ps.windows(2) {
            assert!(w[1].lo >= w[0].hi);
            assert!(w[1].lo - w[0].hi <= 2.0 * POLE_GAP + 1e-15);
        }
    }

    #[test]
    fn double_pole_window() {
        let ps = pieces(0.5, 1.5, &[1.0, 1.0], 0.1, 4);
        let window: Vec<_> = ps.iter().filter(|p| !p.poles.is_empty()).collect();
        assert_eq!(window.len(), 2);
        assert_eq!(window[0].poles, vec![1.0, 1.0]);
    }

    #[test]
    fn reference_counts_and_ground_state() {
        let params = rabi(0.7, 0.4);
        let opts = ScanOptions::default();
        let plus = find_regular(Parity::Plus, -1.0, 5.0, &params, &opts).unwrap();
        let minus = find_regular(Parity::Minus, -1.0, 5.0, &params, &opts).unwrap();
        assert_eq!((plus.len(), minus.len()), (6, 5));
        assert!(minus[0].x_root < plus[0].x_root);
        for r in plus.iter().chain(&minus) {
            assert!(r.bracket.0 < r.x_root && r.x_root < r.bracket.1);
        }
    }

    #[test]
    fn judd_coupling() {
        let pts = find_exceptional(1, &rabi(0.5, 0.6), 0.05, 1.0, &ScanOptions::default()).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].g - 0.4).abs() < 1e-12);
        assert!((pts[0].energy - 0.84).abs() < 1e-12);
    }

    #[test]
    fn exceptional_levels_are_listed_twice() {
        let levels = full_spectrum(&rabi(0.4, 0.6), 3.0, &ScanOptions::default()).unwrap();
        let ex: Vec<_> = levels.iter().filter(|e| e.kind == LevelKind::Exceptional).collect();
        assert_eq!(ex.len(), 2);
        assert!(ex.iter().all(|e| e.x_root == 1.0 && e.degenerate));
    }

    #[test]
    fn no_exceptional_at_reference_point() {
        let params = rabi(0.7, 0.4);
        for n in 1..=5 {
            assert!(exceptional_measure(n, &params).unwrap() > 1e-6);
        }
    }

    #[test]
    fn rejects_broken_parity_and_zero_coupling() {
        let opts = ScanOptions::default();
        let eps = ModelParams::new(1.0, 0.5, 0.7, 0.2).unwrap();
        assert!(find_regular(Parity::Plus, -1.0, 1.0, &eps, &opts).is_err());
        assert!(matches!(
            find_regular(Parity::Plus, -1.0, 1.0, &rabi(0.0, 0.4), &opts),
            Err(RabiError::SingularCoupling)
        ));
    }
}
