//! Independent ground truth from truncated Fock-space diagonalization.
//!
//! Basis states are `|s, n⟩` with spin `s ∈ {↑, ↓}` (eigenstates of `σz`) and
//! boson number `n < N_tr`. The full matrices order the basis as all `↑`
//! states followed by all `↓` states; parity blocks use `|s_k, k⟩` with the
//! spin fixed by the parity `Π = σz (−1)^{a†a}`.

mod eigen;
mod jc;

pub use eigen::{symmetric_eigen, tridiagonal_eigen, DenseMatrix, SymmetricEigen};
pub use jc::{jc_level, jc_spectrum, JcBranch, JcLevel};

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};
use crate::model::{ModelParams, Parity};

/// Largest dense matrix dimension accepted.
pub const MAX_DIMENSION: usize = 4000;

/// Largest truncation tried by [`converged_spectrum`].
pub const MAX_TRUNCATION: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// One basis label `|spin, n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisState {
    pub spin: Spin,
    pub n: usize,
}

impl BasisState {
    /// Eigenvalue of `σz (−1)^n` on this state.
    pub fn parity(&self) -> Parity {
        let s = self.spin.sz() * if self.n % 2 == 0 { 1.0 } else { -1.0 };
        if s > 0.0 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    Rabi,
    RabiEps,
    ParityBlockPlus,
    ParityBlockMinus,
    JaynesCummings,
}

impl ModelTag {
    pub fn parity_block(parity: Parity) -> Self {
        match parity {
            Parity::Plus => ModelTag::ParityBlockPlus,
            Parity::Minus => ModelTag::ParityBlockMinus,
        }
    }
}

/// A truncated Hamiltonian in user energy units.
#[derive(Debug, Clone)]
pub struct TruncatedHamiltonian {
    pub model_tag: ModelTag,
    /// Boson cutoff `N_tr`.
    pub n_tr: usize,
    pub basis: Vec<BasisState>,
    pub matrix: DenseMatrix,
}

impl TruncatedHamiltonian {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Position of `|spin, n⟩` in [`TruncatedHamiltonian::basis`].
    pub fn index_of(&self, spin: Spin, n: usize) -> Option<usize> {
        self.basis.iter().position(|b| b.spin == spin && b.n == n)
    }
}

fn full_basis(n_tr: usize) -> Vec<BasisState> {
    let mut basis = Vec::with_capacity(2 * n_tr);
    for spin in [Spin::Up, Spin::Down] {
        for n in 0..n_tr {
            basis.push(BasisState { spin, n });
        }
    }
    basis
}

fn block_basis(parity: Parity, n_tr: usize) -> Vec<BasisState> {
    (0..n_tr)
        .map(|k| {
            let even = k % 2 == 0;
            let up = match parity {
                Parity::Plus => even,
                Parity::Minus => !even,
            };
            BasisState {
                spin: if up { Spin::Up } else { Spin::Down },
                n: k,
            }
        })
        .collect()
}

fn check_size(n_tr: usize, dim: usize) -> Result<()> {
    if n_tr < 2 {
        return Err(RabiError::InvalidParams(format!("truncation must be at least 2, got {n_tr}")));
    }
    if dim > MAX_DIMENSION {
        return Err(RabiError::DimensionOverflow(dim));
    }
    Ok(())
}

/// Matrix of the requested model in the truncated product basis.
pub fn build(model: ModelTag, params: &ModelParams, n_tr: usize) -> Result<TruncatedHamiltonian> {
    params.validate()?;
    let ModelParams {
        omega,
        g,
        delta,
        epsilon,
    } = *params;
    match model {
        ModelTag::ParityBlockPlus | ModelTag::ParityBlockMinus => {
            let parity = if model == ModelTag::ParityBlockPlus {
                Parity::Plus
            } else {
                Parity::Minus
            };
            let (plus, minus) = parity_blocks(params, n_tr)?;
            Ok(if parity == Parity::Plus { plus } else { minus })
        }
        ModelTag::Rabi | ModelTag::RabiEps | ModelTag::JaynesCummings => {
            if model == ModelTag::Rabi && epsilon != 0.0 {
                return Err(RabiError::InvalidParams(
                    "the Rabi tag requires epsilon = 0; use RabiEps".into(),
                ));
            }
            if model == ModelTag::JaynesCummings && epsilon != 0.0 {
                return Err(RabiError::InvalidParams(
                    "the Jaynes-Cummings matrix has no epsilon term".into(),
                ));
            }
            check_size(n_tr, 2 * n_tr)?;
            let basis = full_basis(n_tr);
            let up = |n: usize| n;
            let down = |n: usize| n_tr + n;
            let mut m = DenseMatrix::zeros(2 * n_tr);
            for n in 0..n_tr {
                m.set(up(n), up(n), omega * n as f64 + delta);
                m.set(down(n), down(n), omega * n as f64 - delta);
                if epsilon != 0.0 {
                    m.set_sym(up(n), down(n), epsilon);
                }
                if n + 1 < n_tr {
                    let c = g * ((n + 1) as f64).sqrt();
                    // σ+ a : |↓, n+1⟩ → |↑, n⟩
                    m.set_sym(up(n), down(n + 1), c);
                    if model != ModelTag::JaynesCummings {
                        // σ- a : |↑, n+1⟩ → |↓, n⟩ (counter-rotating partner)
                        m.set_sym(up(n + 1), down(n), c);
                    }
                }
            }
            Ok(TruncatedHamiltonian {
                model_tag: model,
                n_tr,
                basis,
                matrix: m,
            })
        }
    }
}

/// The Rabi matrix restricted to the `Π = +1` and `Π = −1` subspaces, each a
/// tridiagonal `N_tr × N_tr` block.
pub fn parity_blocks(
    params: &ModelParams,
    n_tr: usize,
) -> Result<(TruncatedHamiltonian, TruncatedHamiltonian)> {
    params.validate()?;
    if params.epsilon != 0.0 {
        return Err(RabiError::InvalidParams(
            "parity blocks exist only for epsilon = 0".into(),
        ));
    }
    check_size(n_tr, n_tr)?;
    let make = |parity: Parity| {
        let basis = block_basis(parity, n_tr);
        let mut m = DenseMatrix::zeros(n_tr);
        for (k, b) in basis.iter().enumerate() {
            m.set(k, k, params.omega * k as f64 + params.delta * b.spin.sz());
            if k + 1 < n_tr {
                m.set_sym(k, k + 1, params.g * ((k + 1) as f64).sqrt());
            }
        }
        TruncatedHamiltonian {
            model_tag: ModelTag::parity_block(parity),
            n_tr,
            basis,
            matrix: m,
        }
    };
    Ok((make(Parity::Plus), make(Parity::Minus)))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors.
pub fn eigensolve(h: &TruncatedHamiltonian) -> Result<SymmetricEigen> {
    symmetric_eigen(&h.matrix, true)
}

/// Eigenvalues only.
pub fn eigenvalues(h: &TruncatedHamiltonian) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(&h.matrix, false)?.values)
}

/// Embeds a parity-block vector into the full `|s, n⟩` basis of size `2 N_tr`.
pub fn embed_block_vector(block: &TruncatedHamiltonian, v: &[f64]) -> Vec<f64> {
    let n_tr = block.n_tr;
    let mut out = vec![0.0; 2 * n_tr];
    for (b, &a) in block.basis.iter().zip(v) {
        let i = match b.spin {
            Spin::Up => b.n,
            Spin::Down => n_tr + b.n,
        };
        out[i] = a;
    }
    out
}

/// Applies `Π = σz (−1)^{a†a}` to a vector in the full basis.
pub fn apply_parity(n_tr: usize, v: &[f64]) -> Vec<f64> {
    full_basis(n_tr)
        .iter()
        .zip(v)
        .map(|(b, &a)| a * b.parity().sign())
        .collect()
}

/// Lowest levels certified against truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergedSpectrum {
    pub levels: Vec<f64>,
    /// Smallest truncation whose levels already agreed with the next one.
    pub n_tr: usize,
    /// Truncation the returned levels were computed at.
    pub n_tr_final: usize,
}

fn truncation_ladder() -> impl Iterator<Item = usize> {
    // 100, 200, then steps of 50
    [100usize]
        .into_iter()
        .chain((0..).map(|i| 200 + 50 * i))
        .take_while(|&n| n <= MAX_TRUNCATION)
}

fn lowest_levels(model: ModelTag, params: &ModelParams, n_tr: usize, m: usize) -> Result<Vec<f64>> {
    let mut levels = match model {
        ModelTag::Rabi => {
            let (plus, minus) = parity_blocks(params, n_tr)?;
            let mut all = eigenvalues(&plus)?;
            all.extend(eigenvalues(&minus)?);
            all.sort_by(f64::total_cmp);
            all
        }
        _ => eigenvalues(&build(model, params, n_tr)?)?,
    };
    levels.truncate(m);
    Ok(levels)
}

/// First `m` eigenvalues, increasing the truncation until they move by less
/// than `tol` (default 1e-10 in user units).
pub fn converged_spectrum(
    model: ModelTag,
    params: &ModelParams,
    m: usize,
    tol: Option<f64>,
) -> Result<ConvergedSpectrum> {
    if m == 0 {
        return Err(RabiError::InvalidParams("need at least one level".into()));
    }
    let tol = tol.unwrap_or(1e-10);
    let mut prev: Option<(usize, Vec<f64>)> = None;
    for n_tr in truncation_ladder() {
        if n_tr < m {
            continue;
        }
        let levels = lowest_levels(model, params, n_tr, m)?;
        if let Some((n_prev, old)) = &prev {
            let moved = old
                .iter()
                .zip(&levels)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if old.len() == levels.len() && moved < tol {
                return Ok(ConvergedSpectrum {
                    levels,
                    n_tr: *n_prev,
                    n_tr_final: n_tr,
                });
            }
        }
        prev = Some((n_tr, levels));
    }
    Err(RabiError::NoConvergence {
        what: "truncated diagonalization",
        iterations: MAX_TRUNCATION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rabi(g: f64, d: f64) -> ModelParams {
        ModelParams::rabi(1.0, g, d).unwrap()
    }

    #[test]
    fn uncoupled_levels() {
        let h = build(ModelTag::Rabi, &rabi(0.0, 0.4), 10).unwrap();
        let ev = eigenvalues(&h).unwrap();
        let mut want: Vec<f64> = (0..10).flat_map(|n| [n as f64 - 0.4, n as f64 + 0.4]).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn displaced_oscillator_at_zero_splitting() {
        let ev = converged_spectrum(ModelTag::Rabi, &rabi(0.7, 0.0), 8, None).unwrap().levels;
        for (i, e) in ev.iter().enumerate() {
            let want = (i / 2) as f64 - 0.49;
            assert!((e - want).abs() < 1e-10, "{i}: {e}");
        }
    }

    #[test]
    fn matrix_invariants() {
        let p = ModelParams::new(1.0, 0.7, 0.4, 0.2).unwrap();
        let h = build(ModelTag::RabiEps, &p, 30).unwrap();
        assert_eq!(h.dimension(), 60);
        assert_eq!(h.matrix.max_asymmetry(), 0.0);
        assert!(h.matrix.is_finite());
        let (a, b) = parity_blocks(&rabi(0.7, 0.4), 30).unwrap();
        assert_eq!((a.dimension(), b.dimension()), (30, 30));
        assert!(a.matrix.is_tridiagonal());
        assert!(build(ModelTag::Rabi, &p, 30).is_err());
        assert!(parity_blocks(&p, 30).is_err());
        assert!(build(ModelTag::Rabi, &rabi(0.7, 0.4), 1).is_err());
        assert!(matches!(
            build(ModelTag::Rabi, &rabi(0.7, 0.4), 3000),
            Err(RabiError::DimensionOverflow(6000))
        ));
    }

    #[test]
    fn blocks_sum_to_full_matrix() {
        let p = rabi(0.7, 0.4);
        let full = eigenvalues(&build(ModelTag::Rabi, &p, 120).unwrap()).unwrap();
        let (a, b) = parity_blocks(&p, 120).unwrap();
        let mut merged = eigenvalues(&a).unwrap();
        merged.extend(eigenvalues(&b).unwrap());
        merged.sort_by(f64::total_cmp);
        for i in 0..20 {
            assert!((full[i] - merged[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn block_spectra_are_nondegenerate() {
        let (a, b) = parity_blocks(&rabi(0.7, 0.4), 150).unwrap();
        for blk in [a, b] {
            let ev = eigenvalues(&blk).unwrap();
            for w in ev[..15].windows(2) {
                assert!(w[1] - w[0] > 1e-3);
            }
        }
    }

    #[test]
    fn judd_point_is_in_both_blocks() {
        // 4g² + Δ² = 1 at g = 0.4, Δ = 0.6: E = 1 - g² = 0.84
        let (a, b) = parity_blocks(&rabi(0.4, 0.6), 200).unwrap();
        for blk in [a, b] {
            let ev = eigenvalues(&blk).unwrap();
            let best = ev.iter().map(|e| (e - 0.84).abs()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{best}");
        }
    }

    #[test]
    fn ground_state_has_odd_parity() {
        let (a, b) = parity_blocks(&rabi(0.7, 0.4), 150).unwrap();
        assert!(eigenvalues(&b).unwrap()[0] < eigenvalues(&a).unwrap()[0]);
    }

    #[test]
    fn variational_monotonicity() {
        let p = rabi(0.9, 0.4);
        let mut last: Option<Vec<f64>> = None;
        for n in [10, 15, 20, 30, 45, 60] {
            let ev = lowest_levels(ModelTag::Rabi, &p, n, 8).unwrap();
            if let Some(prev) = &last {
                for (a, b) in prev.iter().zip(&ev) {
                    assert!(b <= &(a + 1e-12));
                }
            }
            last = Some(ev);
        }
    }

    #[test]
    fn convergence_budgets() {
        let c = converged_spectrum(ModelTag::Rabi, &rabi(0.7, 0.4), 11, None).unwrap();
        assert!(c.n_tr <= 300);
        let e = ModelParams::new(1.0, 0.5, 0.7, 0.2).unwrap();
        let c = converged_spectrum(ModelTag::RabiEps, &e, 10, None).unwrap();
        assert!(c.n_tr <= 300);
        let c = converged_spectrum(ModelTag::Rabi, &rabi(0.0, 0.4), 6, None).unwrap();
        assert_eq!(c.n_tr, 100);
    }

    #[test]
    fn parity_operator_on_blocks() {
        let (a, _) = parity_blocks(&rabi(0.7, 0.4), 20).unwrap();
        let r = eigensolve(&a).unwrap();
        let v = embed_block_vector(&a, &r.vectors.unwrap().column(0));
        let pv = apply_parity(20, &v);
        assert_eq!(v, pv);
    }
}
