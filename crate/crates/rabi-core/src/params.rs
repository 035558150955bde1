//! Model parameters and the small domain types shared across the crate.

use core::fmt;

use crate::error::{Error, Result};

/// Parameters of the Rabi Hamiltonian
/// `H = sigma_z * delta + omega * a'a + g * sigma_x * (a + a')`.
///
/// Invariants: `omega > 0`, `delta >= 0`, everything finite. `g` may have
/// either sign; the spectrum is even in `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Half the atomic transition energy (the `sigma_z` prefactor).
    pub delta: f64,
    /// Cavity mode frequency.
    pub omega: f64,
    /// Atom-cavity coupling strength.
    pub g: f64,
}

impl ModelParams {
    pub fn new(delta: f64, omega: f64, g: f64) -> Result<Self> {
        let p = ModelParams { delta, omega, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.omega.is_finite() && self.g.is_finite()) {
            return Err(Error::InvalidParams("delta, omega, g must be finite"));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams("omega must be positive"));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParams("delta must be non-negative"));
        }
        Ok(())
    }

    /// Same atom and cavity, different coupling.
    pub fn with_coupling(&self, g: f64) -> Self {
        ModelParams { g, ..*self }
    }

    /// Dimensionless coupling `|g| / omega`.
    pub fn coupling_ratio(&self) -> f64 {
        self.g.abs() / self.omega
    }

    /// Ultra-strong coupling regime: `|g| / omega > 0.1`. Beyond this the
    /// rotating-wave (Jaynes-Cummings) spectrum stops being a faithful
    /// approximation and only the full diagonalization is trustworthy.
    pub fn ultra_strong(&self) -> bool {
        self.coupling_ratio() > 0.1
    }
}

/// Fock-space cutoff: boson levels `0..=n_max` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockTruncation {
    n_max: usize,
}

impl FockTruncation {
    /// Requires `n_max >= 1` (a single Fock level cannot carry the coupling).
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidArgument("n_max must be at least 1"));
        }
        Ok(FockTruncation { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Dimension of one parity block: `n_max + 1`.
    pub fn block_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Dimension of the full truncated two-level-plus-mode space.
    pub fn full_dim(&self) -> usize {
        2 * (self.n_max + 1)
    }
}

/// Eigenvalue of the parity operator `sigma_x (-1)^(a'a)`, which commutes
/// with the Rabi Hamiltonian and splits it into two tridiagonal blocks.
///
/// At `g = 0` the ground state (atom down, cavity empty) lies in [`Plus`].
///
/// [`Plus`]: ParitySector::Plus
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParitySector {
    Plus,
    Minus,
}

impl ParitySector {
    pub const BOTH: [ParitySector; 2] = [ParitySector::Plus, ParitySector::Minus];

    pub fn sign(&self) -> f64 {
        match self {
            ParitySector::Plus => 1.0,
            ParitySector::Minus => -1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ParitySector::Plus => "+1",
            ParitySector::Minus => "-1",
        }
    }
}

impl fmt::Display for ParitySector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Two-level state along the coupling axis, as seen by the path sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(&self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn flip(&self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Spin::Up => "+1",
            Spin::Down => "-1",
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(ModelParams::new(0.5, 1.0, 0.3).is_ok());
        assert!(ModelParams::new(0.5, 0.0, 0.3).is_err());
        assert!(ModelParams::new(0.5, -1.0, 0.3).is_err());
        assert!(ModelParams::new(-0.1, 1.0, 0.3).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.3).is_err());
        assert!(ModelParams::new(0.5, 1.0, f64::INFINITY).is_err());
        // negative coupling is allowed
        assert!(ModelParams::new(0.5, 1.0, -2.0).is_ok());
    }

    #[test]
    fn ultra_strong_threshold() {
        let p = ModelParams::new(0.5, 2.0, 0.2).unwrap();
        assert!(!p.ultra_strong()); // ratio 0.1 is not beyond the threshold
        assert!(p.with_coupling(0.21).ultra_strong());
        assert!(p.with_coupling(-0.21).ultra_strong());
    }

    #[test]
    fn truncation_dims() {
        assert!(FockTruncation::new(0).is_err());
        let t = FockTruncation::new(60).unwrap();
        assert_eq!(t.block_dim(), 61);
        assert_eq!(t.full_dim(), 122);
    }

    #[test]
    fn sector_and_spin_labels() {
        assert_eq!(ParitySector::Plus.sign(), 1.0);
        assert_eq!(ParitySector::Minus.label(), "-1");
        assert_eq!(Spin::Up.flip(), Spin::Down);
        assert_eq!(Spin::Down.flip().value(), 1.0);
    }
}
