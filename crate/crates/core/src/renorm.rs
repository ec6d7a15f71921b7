//! The renormed inner product `⟨u, v⟩_{H,1} = ⟨S(r)u, S(r)v⟩_H`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_grid, LabError, Result};
use crate::field::FourierField;
use crate::grid::Grid;

/// Renorming data: the fixed time `r`, the shift `ω < λ₁`, and the
/// equivalence constants realized on the grid's truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormContext {
    pub grid: Grid,
    pub r: f64,
    pub omega: f64,
    pub lambda1: f64,
    pub k2_max: f64,
}

impl RenormContext {
    /// `omega` defaults to `λ₁/2`.
    pub fn new(grid: Grid, r: f64, omega: Option<f64>) -> Result<Self> {
        let lambda1 = grid.lambda1();
        let omega = omega.unwrap_or(0.5 * lambda1);
        if !(r > 0.0) || !r.is_finite() {
            return Err(LabError::InvalidArgument(format!("r must be > 0, got {r}")));
        }
        if !(omega > 0.0 && omega < lambda1) {
            return Err(LabError::InvalidArgument(format!(
                "omega must lie in (0, λ₁ = {lambda1}), got {omega}"
            )));
        }
        Ok(Self {
            grid,
            r,
            omega,
            lambda1,
            k2_max: grid.k2_max(),
        })
    }

    /// `S(r)` symbol `e^{(ω - |k|²) r}`.
    pub fn weight(&self, k2: f64) -> f64 {
        ((self.omega - k2) * self.r).exp()
    }

    /// `ln M` with `M = e^{(K²max - ω) r}`.
    pub fn ln_m(&self) -> f64 {
        (self.k2_max - self.omega) * self.r
    }

    /// Lower equivalence constant: `‖u‖_H ≤ M ‖u‖_{H,1}`.
    pub fn m(&self) -> f64 {
        self.ln_m().exp()
    }

    /// Upper constant in `‖u‖_{H,1} ≤ M₁ ‖u‖_H`; `S(r)` contracts since `ω < λ₁`.
    pub fn m1(&self) -> f64 {
        1.0
    }

    pub fn apply_s(&self, u: &FourierField) -> FourierField {
        u.map_modes(|k2| self.weight(k2))
    }

    fn check(&self, u: &FourierField) -> Result<()> {
        ensure_same_grid(self.grid, u.grid())
    }
}

pub fn renormed_inner(u: &FourierField, v: &FourierField, ctx: &RenormContext) -> Result<f64> {
    ctx.check(u)?;
    ctx.check(v)?;
    Ok(u.weighted_inner(v, |k2| {
        let w = ctx.weight(k2);
        w * w
    }))
}

pub fn renormed_norm(u: &FourierField, ctx: &RenormContext) -> Result<f64> {
    Ok(renormed_inner(u, u, ctx)?.max(0.0).sqrt())
}
