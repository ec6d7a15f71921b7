//! Constants, the dissipativity thresholds `u±`, `γ`, `δ`, and randomized
//! certification of the dissipativity predicates on the admissible annulus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::evolution::NavierStokesOperator;
use crate::field::FourierField;
use crate::grid::Grid;
use crate::nonlinear::{estimate_trilinear_constant, ExponentTriple, TrilinearConstant, BOUND_SLACK};
use crate::operators::SpectralMultiplier;
use crate::renorm::{renormed_inner, renormed_norm, RenormContext};
use crate::seeds::{sub_seed, SeedPlan};

/// Smallest `c_z` with `‖A^z T(r) u‖_H ≤ (c_z / r^z) ‖u‖_H` on the truncation:
/// `c_z = r^z max_k |k|^{2z} e^{-|k|² r}`.
pub fn estimate_smoothing_constant(ctx: &RenormContext, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "smoothing exponent must be >= 0, got {z}"
        )));
    }
    let r = ctx.r;
    let best = ctx
        .grid
        .active_k2_values()
        .into_iter()
        .map(|q| {
            let q = q as f64;
            (z * r.ln() + z * q.ln() - q * r).exp()
        })
        .fold(0.0, f64::max);
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMethod {
    /// `α = (1 - max_k e^{-|k|√r})²`, from `‖S_half(√r)u - u‖ ≥ α^{1/2}‖u‖`.
    Lemma7Construction,
    /// `α = r λ₁`, the per-mode optimum.
    SharpSpectral,
}

/// Reverse-Poincaré constant: `α^{1/2} ‖u‖_{H,1} ≤ r^{1/2} ‖A^{1/2}u‖_{H,1}`.
pub fn compute_alpha(ctx: &RenormContext, method: AlphaMethod) -> f64 {
    match method {
        AlphaMethod::Lemma7Construction => {
            // the multiplier e^{-|k|√r} is largest on the lowest mode
            let m = SpectralMultiplier::HalfHeat(ctx.r.sqrt()).symbol(ctx.lambda1);
            (1.0 - m).powi(2)
        }
        AlphaMethod::SharpSpectral => ctx.r * ctx.lambda1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSettings {
    pub plan: SeedPlan,
    pub spectrum_decay: f64,
    pub alpha_method: AlphaMethod,
    /// Multiplies the estimated trilinear constant; 1 except in
    /// fault-injection runs.
    pub c_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsEstimate {
    pub r: f64,
    pub omega: f64,
    pub lambda1: f64,
    pub k2_max: f64,
    pub m: f64,
    pub ln_m: f64,
    pub m1: f64,
    /// Trilinear constant for exponents `(0, 1, 1/2)`.
    pub c: f64,
    /// Smoothing constant for `A` at time `r`.
    pub c1: f64,
    /// Smoothing constant for `A^{1/4}` at time `r`.
    pub c2: f64,
    /// `‖Au‖_{H,1} ≤ (M c₃ / r) ‖u‖_{H,1}` on the truncation.
    pub c3: f64,
    pub alpha: f64,
    pub alpha_method: AlphaMethod,
    /// `α / r`.
    pub kappa: f64,
    /// Provenance of `c`; absent when the constants were supplied by hand.
    pub trilinear: Option<TrilinearConstant>,
}

impl ConstantsEstimate {
    pub fn estimate(ctx: &RenormContext, settings: &ConstantsSettings) -> Result<Self> {
        if !(settings.c_scale > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "c_scale must be > 0, got {}",
                settings.c_scale
            )));
        }
        let trilinear = estimate_trilinear_constant(
            ctx.grid,
            ExponentTriple::RENORMED,
            settings.plan,
            settings.spectrum_decay,
        )?;
        Self::from_trilinear(ctx, trilinear, settings.alpha_method, settings.c_scale)
    }

    pub fn from_trilinear(
        ctx: &RenormContext,
        trilinear: TrilinearConstant,
        alpha_method: AlphaMethod,
        c_scale: f64,
    ) -> Result<Self> {
        let alpha = compute_alpha(ctx, alpha_method);
        let ln_m = ctx.ln_m();
        Ok(Self {
            r: ctx.r,
            omega: ctx.omega,
            lambda1: ctx.lambda1,
            k2_max: ctx.k2_max,
            m: ctx.m(),
            ln_m,
            m1: ctx.m1(),
            c: trilinear.c * c_scale,
            c1: estimate_smoothing_constant(ctx, 1.0)?,
            c2: estimate_smoothing_constant(ctx, 0.25)?,
            c3: ((ctx.k2_max * ctx.r).ln() - ln_m).exp(),
            alpha,
            alpha_method,
            kappa: alpha / ctx.r,
            trilinear: Some(trilinear),
        })
    }

    /// `ln(M⁴ c c₁ c₂ / r^{5/4})`.
    pub fn ln_nonlinear_bound(&self) -> f64 {
        4.0 * self.ln_m + self.c.ln() + self.c1.ln() + self.c2.ln() - 1.25 * self.r.ln()
    }

    /// `K = M⁴ c c₁ c₂ / r^{5/4}`, the constant of the renormed bounds on `C`.
    pub fn nonlinear_bound(&self) -> f64 {
        self.ln_nonlinear_bound().exp()
    }

    /// `ν M c₃ / r`, the Lipschitz constant of `νA` in `‖·‖_{H,1}`.
    pub fn viscous_lipschitz(&self, nu: f64) -> f64 {
        nu * (self.ln_m + self.c3.ln() - self.r.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    Distinct,
    Double,
    Complex,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub nu: f64,
    pub f_sup: f64,
    pub r: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub ln_nonlinear_bound: f64,
    pub nonlinear_bound: f64,
    pub gamma: f64,
    pub u_plus: Option<f64>,
    pub u_minus: Option<f64>,
    pub delta: Option<f64>,
    pub nu_min: f64,
    pub roots: RootKind,
    pub admissible: bool,
}

/// Evaluates `γ`, `u±`, `δ` and `ν_min` for
/// `-(να/r) u + (M⁴cc₁c₂/r^{5/4}) u² + f = 0`.
///
/// Roots are formed without cancellation: `u₋ = u₊ γ / (1 + √(1-γ))²`
/// is written as `(να/(2rK)) γ / (1 + √(1-γ))`.
pub fn compute_thresholds(
    nu: f64,
    f_sup: f64,
    consts: &ConstantsEstimate,
    ctx: &RenormContext,
) -> Result<ThresholdReport> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(LabError::InvalidArgument(format!("nu must be > 0, got {nu}")));
    }
    if !(f_sup >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "f_sup must be >= 0, got {f_sup}"
        )));
    }
    if !(consts.c > 0.0 && consts.c1 > 0.0 && consts.c2 > 0.0 && consts.alpha > 0.0) {
        return Err(LabError::InvalidArgument(
            "constants must be positive to form thresholds".into(),
        ));
    }
    let r = ctx.r;
    let alpha = consts.alpha;
    let kappa = alpha / r;
    let ln_k = consts.ln_nonlinear_bound();
    let gamma = if f_sup == 0.0 {
        0.0
    } else {
        (4f64.ln() + f_sup.ln() + ln_k + 2.0 * r.ln() - 2.0 * nu.ln() - 2.0 * alpha.ln()).exp()
    };
    let nu_min = if f_sup == 0.0 {
        0.0
    } else {
        (2f64.ln() + 2.0 * consts.ln_m + 0.375 * r.ln() - alpha.ln()
            + 0.5 * (f_sup.ln() + consts.c.ln() + consts.c1.ln() + consts.c2.ln()))
        .exp()
    };
    // να / (2rK)
    let half_root = ((0.5 * nu * kappa).ln() - ln_k).exp();
    let (roots, u_plus, u_minus, delta) = if gamma < 1.0 {
        let s = (1.0 - gamma).sqrt();
        (
            RootKind::Distinct,
            Some(half_root * (1.0 + s)),
            Some(half_root * gamma / (1.0 + s)),
            Some(0.5 * nu * kappa * gamma / (1.0 + s)),
        )
    } else if gamma == 1.0 {
        (RootKind::Double, Some(half_root), Some(half_root), Some(0.0))
    } else {
        (RootKind::Complex, None, None, None)
    };
    Ok(ThresholdReport {
        nu,
        f_sup,
        r,
        kappa,
        alpha,
        ln_nonlinear_bound: ln_k,
        nonlinear_bound: ln_k.exp(),
        gamma,
        u_plus,
        u_minus,
        delta,
        nu_min,
        roots,
        admissible: gamma < 1.0,
    })
}

impl ThresholdReport {
    /// `K x`, formed in log space so huge `K` with tiny `x` stays finite.
    fn k_times(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            (self.ln_nonlinear_bound + x.ln()).exp()
        }
    }

    /// Right side of the 0-dissipativity bound at `x = ‖u‖_{H,1}`:
    /// `-ν(α/r)x² + K x³ + f x`.
    pub fn bound_polynomial(&self, x: f64) -> f64 {
        x * (self.f_sup - self.nu * self.kappa * x + self.k_times(x) * x)
    }

    /// `|q(x)| / (ν(α/r)x + K x² + f)` with `q(x) = -ν(α/r)x + K x² + f`.
    pub fn quadratic_residual(&self, x: f64) -> f64 {
        let a = self.nu * self.kappa * x;
        let b = self.k_times(x) * x;
        let q = self.f_sup - a + b;
        let scale = a + b + self.f_sup;
        if scale == 0.0 {
            0.0
        } else {
            q.abs() / scale
        }
    }

    /// Radius of the ball `𝔹`, `u₊/2`.
    pub fn ball_radius(&self) -> Option<f64> {
        self.u_plus.map(|u| 0.5 * u)
    }

    /// `dt_max = r^{5/4} / (4 M⁴cc₁c₂ u₊)`, half the fixed-point contraction
    /// threshold on `𝔹`; equal to `1 / (2νκ(1 + √(1-γ)))`.
    pub fn step_cap(&self) -> Option<f64> {
        if self.gamma > 1.0 {
            return None;
        }
        Some(1.0 / (2.0 * self.nu * self.kappa * (1.0 + (1.0 - self.gamma).sqrt())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallClass {
    InsideD,
    BelowUMinus,
    AboveHalfUPlus,
}

pub fn ball_membership(u: &FourierField, report: &ThresholdReport, ctx: &RenormContext) -> Result<BallClass> {
    let (Some(lo), Some(radius)) = (report.u_minus, report.ball_radius()) else {
        return Err(LabError::InvalidArgument(
            "ball membership needs real thresholds".into(),
        ));
    };
    let x = renormed_norm(u, ctx)?;
    Ok(if x > radius {
        BallClass::AboveHalfUPlus
    } else if x < lo {
        BallClass::BelowUMinus
    } else {
        BallClass::InsideD
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroDissipativeMargin {
    /// `⟨𝒜(u,t), u⟩_{H,1}`.
    pub value: f64,
    pub bound: f64,
    pub norm_h1: f64,
    /// `ν ‖A^{1/2}u‖²_{H,1}`, the scale the margins are measured against.
    pub dissipation: f64,
}

impl ZeroDissipativeMargin {
    pub fn holds(&self) -> bool {
        let slack = BOUND_SLACK * self.dissipation;
        self.value <= slack && self.value <= self.bound + slack
    }
}

pub fn check_zero_dissipative(
    u: &FourierField,
    t: f64,
    op: &NavierStokesOperator,
    report: &ThresholdReport,
) -> Result<ZeroDissipativeMargin> {
    let ctx = &op.ctx;
    let value = renormed_inner(&op.apply(u, t)?, u, ctx)?;
    let norm_h1 = renormed_norm(u, ctx)?;
    let half = renormed_norm(&SpectralMultiplier::Power(0.5).apply(u), ctx)?;
    Ok(ZeroDissipativeMargin {
        value,
        bound: report.bound_polynomial(norm_h1),
        norm_h1,
        dissipation: op.nu * half * half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrongDissipativeMargin {
    /// `⟨𝒜(u,t) - 𝒜(v,t), u - v⟩_{H,1}`.
    pub g: f64,
    /// `-δ ‖u - v‖²_{H,1}`.
    pub bound: f64,
    pub diff_norm_h1: f64,
}

impl StrongDissipativeMargin {
    pub fn holds(&self) -> bool {
        self.g <= self.bound * (1.0 - BOUND_SLACK)
    }
}

pub fn check_strong_dissipative(
    u: &FourierField,
    v: &FourierField,
    t: f64,
    op: &NavierStokesOperator,
    report: &ThresholdReport,
) -> Result<StrongDissipativeMargin> {
    let delta = report.delta.ok_or_else(|| {
        LabError::InvalidArgument("strong dissipativity needs real thresholds".into())
    })?;
    let ctx = &op.ctx;
    let diff = u.axpy(-1.0, v)?;
    let d_op = &op.apply(u, t)? - &op.apply(v, t)?;
    let g = renormed_inner(&d_op, &diff, ctx)?;
    let dn = renormed_norm(&diff, ctx)?;
    Ok(StrongDissipativeMargin {
        g,
        bound: -delta * dn * dn,
        diff_norm_h1: dn,
    })
}

/// Random direction rescaled to a uniformly drawn `‖·‖_{H,1}` in `[lo, hi]`.
pub fn sample_in_annulus(
    grid: Grid,
    ctx: &RenormContext,
    seed: u64,
    spectrum_decay: f64,
    lo: f64,
    hi: f64,
) -> Result<FourierField> {
    let direction = FourierField::random(grid, sub_seed(seed, 0), spectrum_decay)?;
    let mut rng = ChaCha20Rng::seed_from_u64(sub_seed(seed, 1));
    let target = lo + rng.random::<f64>() * (hi - lo);
    let norm = renormed_norm(&direction, ctx)?;
    Ok(direction.scale(target / norm))
}

/// Summary of one randomized predicate check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckStats {
    pub name: String,
    pub count: usize,
    pub plan: Option<SeedPlan>,
    /// Largest normalized violation; `<= 0` means every sample satisfied
    /// the predicate with room to spare.
    pub worst_margin: f64,
    pub witness_seed: Option<u64>,
    pub pass: bool,
}

fn fold_margins(name: &str, plan: Option<SeedPlan>, rows: Vec<(u64, f64, bool)>) -> CheckStats {
    let mut worst: Option<(f64, u64)> = None;
    for (seed, m, _) in &rows {
        if worst.is_none_or(|(w, _)| *m > w) {
            worst = Some((*m, *seed));
        }
    }
    CheckStats {
        name: name.to_string(),
        count: rows.len(),
        plan,
        worst_margin: worst.map_or(0.0, |w| w.0),
        witness_seed: worst.map(|w| w.1),
        pass: rows.iter().all(|r| r.2),
    }
}

fn thresholds_or_err(report: &ThresholdReport) -> Result<(f64, f64)> {
    match (report.u_minus, report.u_plus) {
        (Some(lo), Some(hi)) if report.admissible => Ok((lo, hi)),
        _ => Err(LabError::InvalidArgument(
            "randomized certification needs an admissible report".into(),
        )),
    }
}

/// `⟨𝒜(u,t), u⟩_{H,1} ≤ min(0, bound)` for fields drawn in `[u₋, u₊]`.
pub fn certify_zero_dissipative(
    op: &NavierStokesOperator,
    report: &ThresholdReport,
    plan: SeedPlan,
    spectrum_decay: f64,
    t: f64,
) -> Result<CheckStats> {
    let (lo, hi) = thresholds_or_err(report)?;
    let grid = op.ctx.grid;
    let rows = plan
        .seeds()
        .into_par_iter()
        .map(|s| -> Result<(u64, f64, bool)> {
            let u = sample_in_annulus(grid, &op.ctx, s, spectrum_decay, lo, hi)?;
            let m = check_zero_dissipative(&u, t, op, report)?;
            let margin = m.value.max(m.value - m.bound) / m.dissipation.max(f64::MIN_POSITIVE);
            Ok((s, margin, m.holds()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fold_margins("zero_dissipative", Some(plan), rows))
}

/// `⟨𝒜(u)-𝒜(v), u-v⟩_{H,1} ≤ -δ‖u-v‖²_{H,1}` for pairs drawn in `[u₋, u₊/2]`.
pub fn certify_strong_dissipative(
    op: &NavierStokesOperator,
    report: &ThresholdReport,
    plan: SeedPlan,
    spectrum_decay: f64,
    t: f64,
) -> Result<CheckStats> {
    let (lo, hi) = thresholds_or_err(report)?;
    if lo > 0.5 * hi {
        // γ > 8/9: the annulus is empty and the check holds vacuously
        return Ok(fold_margins("strong_dissipative", Some(plan), Vec::new()));
    }
    let grid = op.ctx.grid;
    let rows = plan
        .seeds()
        .into_par_iter()
        .map(|s| -> Result<(u64, f64, bool)> {
            let u = sample_in_annulus(grid, &op.ctx, sub_seed(s, 10), spectrum_decay, lo, 0.5 * hi)?;
            let v = sample_in_annulus(grid, &op.ctx, sub_seed(s, 11), spectrum_decay, lo, 0.5 * hi)?;
            let m = check_strong_dissipative(&u, &v, t, op, report)?;
            let scale = (op.nu * op.ctx.lambda1 * m.diff_norm_h1 * m.diff_norm_h1).max(f64::MIN_POSITIVE);
            Ok((s, (m.g - m.bound) / scale, m.holds()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fold_margins("strong_dissipative", Some(plan), rows))
}

/// `α^{1/2} ‖u‖_{H,1} ≤ r^{1/2} ‖A^{1/2}u‖_{H,1}` on random fields.
pub fn check_reverse_poincare(
    ctx: &RenormContext,
    alpha: f64,
    plan: SeedPlan,
    spectrum_decay: f64,
) -> Result<CheckStats> {
    let rows = plan
        .seeds()
        .into_par_iter()
        .map(|s| -> Result<(u64, f64, bool)> {
            let u = FourierField::random(ctx.grid, s, spectrum_decay)?;
            let lhs = alpha.sqrt() * renormed_norm(&u, ctx)?;
            let rhs = ctx.r.sqrt() * renormed_norm(&SpectralMultiplier::Power(0.5).apply(&u), ctx)?;
            let q = lhs / rhs;
            Ok((s, q - 1.0, q <= 1.0 + 1e-12))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fold_margins("reverse_poincare", Some(plan), rows))
}

#[derive(Debug, Clone)]
pub struct ContinuitySample {
    pub seed: u64,
    pub u_n: FourierField,
    pub t_n: f64,
    pub u: FourierField,
    pub t: f64,
}

/// Sequences `(uₙ, tₙ) → (u, t)` inside the annulus: per seed, a time-only,
/// a state-only and a joint family with geometric step `2^{-n}`.
pub fn continuity_samples(
    op: &NavierStokesOperator,
    report: &ThresholdReport,
    plan: SeedPlan,
    spectrum_decay: f64,
    levels: usize,
) -> Result<Vec<ContinuitySample>> {
    let (lo, hi) = thresholds_or_err(report)?;
    let ctx = &op.ctx;
    let grid = ctx.grid;
    let pad = 0.05 * (0.5 * hi - lo);
    let mut out = Vec::new();
    if pad < 0.0 {
        return Ok(out);
    }
    for s in plan.seeds() {
        let u = sample_in_annulus(grid, ctx, sub_seed(s, 20), spectrum_decay, lo + pad, 0.5 * hi - pad)?;
        let h = sample_in_annulus(grid, ctx, sub_seed(s, 21), spectrum_decay, pad, pad)?;
        let mut rng = ChaCha20Rng::seed_from_u64(sub_seed(s, 22));
        let t = rng.random::<f64>() * 2.0;
        let tau = 0.5 + rng.random::<f64>();
        for n in 0..levels {
            let eps = 0.5f64.powi(n as i32);
            for (du, dt) in [(0.0, eps), (eps, 0.0), (eps, eps)] {
                out.push(ContinuitySample {
                    seed: s,
                    u_n: u.axpy(du, &h)?,
                    t_n: t + dt * tau,
                    u: u.clone(),
                    t,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub count: usize,
    pub holder_constant: f64,
    pub theta: f64,
    pub state_lipschitz: f64,
    pub worst_ratio: f64,
    pub witness_seed: Option<u64>,
    pub pass: bool,
}

/// `‖𝒜(uₙ,tₙ) - 𝒜(u,t)‖_{H,1} ≤ d|tₙ-t|^θ + [νMc₃/r + K u₊] ‖uₙ-u‖_{H,1}`.
pub fn verify_continuity_modulus(
    op: &NavierStokesOperator,
    samples: &[ContinuitySample],
    consts: &ConstantsEstimate,
    report: &ThresholdReport,
) -> Result<ContinuityReport> {
    let ctx = &op.ctx;
    let u_plus = report
        .u_plus
        .ok_or_else(|| LabError::InvalidArgument("continuity check needs u₊".into()))?;
    let d = op.forcing.holder_constant(ctx)?;
    let theta = op.forcing.theta;
    let lipschitz = consts.viscous_lipschitz(op.nu) + report.k_times(u_plus);
    let rows = samples
        .par_iter()
        .map(|s| -> Result<(u64, f64)> {
            let lhs = renormed_norm(&(&op.apply(&s.u_n, s.t_n)? - &op.apply(&s.u, s.t)?), ctx)?;
            let rhs = d * (s.t_n - s.t).abs().powf(theta) + lipschitz * renormed_norm(&(&s.u_n - &s.u), ctx)?;
            let q = if lhs == 0.0 {
                0.0
            } else if rhs == 0.0 {
                f64::INFINITY
            } else {
                lhs / rhs
            };
            Ok((s.seed, q))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1));
    Ok(ContinuityReport {
        count: rows.len(),
        holder_constant: d,
        theta,
        state_lipschitz: lipschitz,
        worst_ratio: worst.map_or(0.0, |w| w.1),
        witness_seed: worst.map(|w| w.0),
        pass: worst.is_none_or(|w| w.1 <= 1.0 + BOUND_SLACK),
    })
}
