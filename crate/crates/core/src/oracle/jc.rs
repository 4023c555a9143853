//! Closed-form Jaynes-Cummings spectrum.
//!
//! `C = a†a + (σz + 1)/2` commutes with `H_JC`. `C = 0` holds only `|↓, 0⟩`
//! with `E = −Δ`; for `C = n + 1` the block over `{|↑, n⟩, |↓, n + 1⟩}` is
//!
//! ```text
//! [ ωn + Δ        g√(n+1)     ]
//! [ g√(n+1)       ω(n+1) − Δ  ]
//! ```
//!
//! with eigenvalues `ω(n + ½) ± sqrt((ω/2 − Δ)² + g²(n + 1))`.

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, Parity};

/// Two-valued index within a `C` sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JcBranch {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcLevel {
    pub c: u32,
    pub branch: JcBranch,
    pub energy: f64,
}

impl JcLevel {
    /// Parity `σz (−1)^{a†a}` of the sector: `(−1)^{C+1}`.
    pub fn parity(&self) -> Parity {
        if self.c % 2 == 1 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }
}

/// Energy of one labeled level; `C = 0` has only the `Minus` branch.
pub fn jc_level(params: &ModelParams, c: u32, branch: JcBranch) -> Option<f64> {
    let ModelParams { omega, g, delta, .. } = *params;
    if c == 0 {
        return (branch == JcBranch::Minus).then_some(-delta);
    }
    let n = (c - 1) as f64;
    let detuning = omega / 2.0 - delta;
    let root = (detuning * detuning + g * g * (n + 1.0)).sqrt();
    let centre = omega * (n + 0.5);
    Some(match branch {
        JcBranch::Minus => centre - root,
        JcBranch::Plus => centre + root,
    })
}

/// All levels with `C ≤ c_max`, ordered by `(C, branch)`.
pub fn jc_spectrum(params: &ModelParams, c_max: u32) -> Vec<JcLevel> {
    let mut out = Vec::with_capacity(2 * c_max as usize + 1);
    for c in 0..=c_max {
        for branch in [JcBranch::Minus, JcBranch::Plus] {
            if let Some(energy) = jc_level(params, c, branch) {
                out.push(JcLevel { c, branch, energy });
            }
        }
    }
    out
}
