//! Diagonal operators on the torus: the Stokes operator, its powers,
//! semigroups and resolvents. All are scalar functions of `|k|²`, so they
//! commute with each other and preserve divergence-freeness and conjugate
//! symmetry.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::FourierField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectralMultiplier {
    /// `A`: `|k|²`.
    Stokes,
    /// `A^z`: `|k|^{2z}`; negative `z` gives inverse powers on mean-zero fields.
    Power(f64),
    /// `T(t) = e^{-tA}`.
    Heat(f64),
    /// `S(t) = e^{ωt} T(t)`.
    Shifted { t: f64, omega: f64 },
    /// Semigroup generated by `-A^{1/2}`: `e^{-|k| t}`.
    HalfHeat(f64),
    /// `(I + s A)^{-1}`.
    Resolvent(f64),
}

impl SpectralMultiplier {
    pub fn symbol(&self, k2: f64) -> f64 {
        match *self {
            Self::Stokes => k2,
            Self::Power(z) => {
                if z == 0.0 {
                    1.0
                } else {
                    k2.powf(z)
                }
            }
            Self::Heat(t) => (-k2 * t).exp(),
            Self::Shifted { t, omega } => ((omega - k2) * t).exp(),
            Self::HalfHeat(t) => (-k2.sqrt() * t).exp(),
            Self::Resolvent(s) => 1.0 / (1.0 + s * k2),
        }
    }

    pub fn apply(&self, u: &FourierField) -> FourierField {
        u.map_modes(|k2| self.symbol(k2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SemigroupKind {
    /// `T(t) = e^{-tA}`
    T,
    /// `S(t) = e^{ωt} T(t)`
    S { omega: f64 },
    /// `e^{-t A^{1/2}}`
    SHalf,
}

/// `Au = -PΔu`; on divergence-free fields this is the multiplier `|k|²`.
pub fn stokes_apply(u: &FourierField) -> FourierField {
    SpectralMultiplier::Stokes.apply(u)
}

pub fn semigroup_apply(u: &FourierField, t: f64, kind: SemigroupKind) -> Result<FourierField> {
    if !(t >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "semigroup time must be >= 0, got {t}"
        )));
    }
    let m = match kind {
        SemigroupKind::T => SpectralMultiplier::Heat(t),
        SemigroupKind::S { omega } => SpectralMultiplier::Shifted { t, omega },
        SemigroupKind::SHalf => SpectralMultiplier::HalfHeat(t),
    };
    Ok(m.apply(u))
}

pub fn fractional_apply(u: &FourierField, z: f64) -> Result<FourierField> {
    if !(z >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "fractional power must be >= 0, got {z}"
        )));
    }
    Ok(SpectralMultiplier::Power(z).apply(u))
}
