//! Parameter records and unit normalization.
//!
//! All spectral mathematics runs in units where the boson frequency is one.
//! [`ModelParams`] carries user units; [`NormalizedParams`] is the dimensionless
//! record obtained by dividing every field by `omega`.

use serde::{Deserialize, Serialize};

use crate::error::{RabiError, Result};

/// Parameters of `H = ω a†a + g σx (a + a†) + ε σx + Δ σz`.
///
/// `epsilon == 0` is the parity-symmetric Rabi model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub g: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl ModelParams {
    /// Validated constructor.
    pub fn new(omega: f64, g: f64, delta: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            omega,
            g,
            delta,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric Rabi model (`ε = 0`).
    pub fn rabi(omega: f64, g: f64, delta: f64) -> Result<Self> {
        Self::new(omega, g, delta, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega", self.omega),
            ("g", self.g),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(RabiError::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if self.omega <= 0.0 {
            return Err(RabiError::InvalidParams(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.g < 0.0 {
            return Err(RabiError::InvalidParams(format!(
                "g must be non-negative, got {}",
                self.g
            )));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.epsilon == 0.0
    }

    /// Dimensionless parameters in `ω = 1` units.
    pub fn normalize(&self) -> Result<NormalizedParams> {
        self.validate()?;
        Ok(NormalizedParams {
            g: self.g / self.omega,
            delta: self.delta / self.omega,
            epsilon: self.epsilon / self.omega,
        })
    }

    /// Copy with a different coupling.
    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..*self }
    }

    /// Copy with `Δ → −Δ`.
    pub fn flip_delta(&self) -> Self {
        Self {
            delta: -self.delta,
            ..*self
        }
    }

    /// Converts the spectral variable `x` (ω = 1 units) to an energy in user units.
    pub fn energy_from_x(&self, x: f64) -> f64 {
        let g = self.g / self.omega;
        self.omega * (x - g * g)
    }

    /// Inverse of [`ModelParams::energy_from_x`].
    pub fn x_from_energy(&self, energy: f64) -> f64 {
        let g = self.g / self.omega;
        energy / self.omega + g * g
    }

    /// Lower bound on the spectrum in `x`: `H ≥ −g²/ω − sqrt(Δ² + ε²)`.
    pub fn x_lower_bound(&self) -> f64 {
        -(self.delta * self.delta + self.epsilon * self.epsilon).sqrt() / self.omega
    }
}

/// Dimensionless `(g/ω, Δ/ω, ε/ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    pub g: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl NormalizedParams {
    /// Direct construction in `ω = 1` units.
    pub fn new(g: f64, delta: f64, epsilon: f64) -> Result<Self> {
        ModelParams::new(1.0, g, delta, epsilon)?.normalize()
    }

    pub fn rabi(g: f64, delta: f64) -> Result<Self> {
        Self::new(g, delta, 0.0)
    }

    pub fn as_model(&self) -> ModelParams {
        ModelParams {
            omega: 1.0,
            g: self.g,
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }

    /// The G-function route divides by `2g`.
    pub(crate) fn require_coupling(&self) -> Result<()> {
        if self.g > 0.0 {
            Ok(())
        } else {
            Err(RabiError::SingularCoupling)
        }
    }
}

/// Eigenvalue of the parity operator `Π = σz (−1)^{a†a}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Plus, Parity::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Baseline energy `E = nω − g²/ω` (user units).
pub fn baseline_energy(n: u32, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(n as f64 * params.omega - params.g * params.g / params.omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_divides_each_field() {
        let p = ModelParams::rabi(2.0, 1.4, 0.8).unwrap().normalize().unwrap();
        assert_eq!(p.g, 1.4 / 2.0);
        assert_eq!(p.delta, 0.8 / 2.0);
        assert_eq!(p.epsilon, 0.0);
        assert!((p.g - 0.7).abs() < 1e-15 && (p.delta - 0.4).abs() < 1e-15);
    }

    #[test]
    fn normalize_is_identity_at_unit_omega() {
        let p = ModelParams::rabi(1.0, 0.7, 0.4).unwrap().normalize().unwrap();
        assert_eq!((p.g, p.delta, p.epsilon), (0.7, 0.4, 0.0));
    }

    #[test]
    fn rejects_bad_records() {
        assert!(ModelParams::rabi(0.0, 0.7, 0.4).is_err());
        assert!(ModelParams::rabi(-1.0, 0.7, 0.4).is_err());
        assert!(ModelParams::rabi(1.0, -0.1, 0.4).is_err());
        assert!(ModelParams::new(1.0, 0.7, f64::NAN, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.7, 0.4, f64::INFINITY).is_err());
        // negative delta is fine
        assert!(ModelParams::rabi(1.0, 0.7, -0.4).is_ok());
    }

    #[test]
    fn baselines() {
        let p = ModelParams::rabi(1.0, 0.7, 0.4).unwrap();
        assert!((baseline_energy(0, &p).unwrap() + 0.49).abs() < 1e-15);
        let p = ModelParams::rabi(1.0, 0.0, 0.4).unwrap();
        assert_eq!(baseline_energy(3, &p).unwrap(), 3.0);
        let p = ModelParams::rabi(2.0, 1.0, 0.4).unwrap();
        assert_eq!(baseline_energy(1, &p).unwrap(), 1.5);
    }

    #[test]
    fn energy_x_roundtrip() {
        let p = ModelParams::rabi(2.0, 1.4, 0.8).unwrap();
        let e = p.energy_from_x(1.25);
        assert!((p.x_from_energy(e) - 1.25).abs() < 1e-14);
        assert!((e - 2.0 * (1.25 - 0.49)).abs() < 1e-14);
    }
}
