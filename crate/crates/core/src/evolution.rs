//! The nonlinear operator `𝒜(u, t) = -νAu - C(u, u) + Pf(t)` and its
//! time integration by resolvent (implicit Euler) steps.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::ThresholdReport;
use crate::error::{ensure_same_grid, LabError, Result};
use crate::field::FourierField;
use crate::nonlinear::{convect, BOUND_SLACK};
use crate::operators::{stokes_apply, SpectralMultiplier};
use crate::renorm::{renormed_norm, RenormContext};
use crate::seeds::SeedPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    Zero,
    ConstantField,
    HolderModulated,
}

/// Divergence-free body force `f(t) = g(t) · base`.
///
/// For the Hölder-modulated kind `g(t) = min(d t^θ, 1)`, which satisfies
/// `|g(t) - g(τ)| ≤ d |t - τ|^θ` on `[0, ∞)`; the force therefore has Hölder
/// constant `d ‖base‖_{H,1}` in the renormed norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingModel {
    pub kind: ForcingKind,
    pub base: FourierField,
    pub theta: f64,
    pub d: f64,
}

impl ForcingModel {
    pub fn zero(grid: crate::grid::Grid) -> Self {
        Self {
            kind: ForcingKind::Zero,
            base: FourierField::zeros(grid),
            theta: 0.5,
            d: 0.0,
        }
    }

    pub fn constant(base: FourierField) -> Self {
        Self {
            kind: ForcingKind::ConstantField,
            base,
            theta: 0.5,
            d: 0.0,
        }
    }

    pub fn holder_modulated(base: FourierField, theta: f64, d: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "Hölder exponent must lie in (0, 1), got {theta}"
            )));
        }
        if !(d > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "Hölder constant must be > 0, got {d}"
            )));
        }
        Ok(Self {
            kind: ForcingKind::HolderModulated,
            base,
            theta,
            d,
        })
    }

    pub fn profile(&self, t: f64) -> f64 {
        match self.kind {
            ForcingKind::Zero => 0.0,
            ForcingKind::ConstantField => 1.0,
            ForcingKind::HolderModulated => (self.d * t.max(0.0).powf(self.theta)).min(1.0),
        }
    }

    pub fn at(&self, t: f64) -> FourierField {
        match self.kind {
            ForcingKind::Zero => FourierField::zeros(self.base.grid()),
            _ => self.base.scale(self.profile(t)),
        }
    }

    /// `sup_t ‖Pf(t)‖_{H,1}`, in closed form: every profile attains its
    /// supremum 1 except the zero force.
    pub fn sup_norm(&self, ctx: &RenormContext) -> Result<f64> {
        match self.kind {
            ForcingKind::Zero => Ok(0.0),
            _ => renormed_norm(&self.base, ctx),
        }
    }

    /// Hölder constant of `t ↦ f(t)` in `‖·‖_{H,1}` for exponent `theta`.
    pub fn holder_constant(&self, ctx: &RenormContext) -> Result<f64> {
        match self.kind {
            ForcingKind::HolderModulated => Ok(self.d * renormed_norm(&self.base, ctx)?),
            _ => Ok(0.0),
        }
    }
}

/// `𝒜(·, t)` with its data.
#[derive(Debug, Clone)]
pub struct NavierStokesOperator {
    pub nu: f64,
    pub forcing: ForcingModel,
    pub ctx: RenormContext,
}

impl NavierStokesOperator {
    pub fn new(nu: f64, forcing: ForcingModel, ctx: RenormContext) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(LabError::InvalidArgument(format!("nu must be > 0, got {nu}")));
        }
        ensure_same_grid(forcing.base.grid(), ctx.grid)?;
        Ok(Self { nu, forcing, ctx })
    }

    /// `(-νAu, -C(u, u), Pf(t))`.
    pub fn terms(&self, u: &FourierField, t: f64) -> Result<[FourierField; 3]> {
        ensure_same_grid(u.grid(), self.ctx.grid)?;
        Ok([
            stokes_apply(u).scale(-self.nu),
            convect(u, u).scale(-1.0),
            self.forcing.at(t),
        ])
    }

    pub fn apply(&self, u: &FourierField, t: f64) -> Result<FourierField> {
        let [a, b, c] = self.terms(u, t)?;
        Ok(&(&a + &b) + &c)
    }
}

/// Same as [`NavierStokesOperator::apply`]; kept as a free function for
/// symmetry with the other operations.
pub fn nonlinear_operator_apply(op: &NavierStokesOperator, u: &FourierField, t: f64) -> Result<FourierField> {
    op.apply(u, t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderReport {
    pub pairs: usize,
    pub theta: f64,
    pub holder_constant: f64,
    pub worst_ratio_forcing: f64,
    pub worst_ratio_operator: f64,
    pub pass: bool,
}

fn holder_ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs <= 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Checks `‖f(t) - f(τ)‖_{H,1} ≤ d|t-τ|^θ` and, for the fixed state `u`,
/// `‖𝒜(u,t) - 𝒜(u,τ)‖_{H,1} ≤ d|t-τ|^θ` on every pair.
pub fn verify_holder_modulus(
    op: &NavierStokesOperator,
    u: &FourierField,
    pairs: &[(f64, f64)],
) -> Result<HolderReport> {
    let ctx = &op.ctx;
    let d = op.forcing.holder_constant(ctx)?;
    let theta = op.forcing.theta;
    let mut worst_f: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    for &(t, tau) in pairs {
        let rhs = d * (t - tau).abs().powf(theta);
        let df = &op.forcing.at(t) - &op.forcing.at(tau);
        worst_f = worst_f.max(holder_ratio(renormed_norm(&df, ctx)?, rhs));
        let da = &op.apply(u, t)? - &op.apply(u, tau)?;
        worst_a = worst_a.max(holder_ratio(renormed_norm(&da, ctx)?, rhs));
    }
    Ok(HolderReport {
        pairs: pairs.len(),
        theta,
        holder_constant: d,
        worst_ratio_forcing: worst_f,
        worst_ratio_operator: worst_a,
        pass: worst_f <= 1.0 + BOUND_SLACK && worst_a <= 1.0 + BOUND_SLACK,
    })
}

/// Random time pairs on `[0, t_max]`, half of them at small separations.
pub fn holder_pairs(plan: SeedPlan, t_max: f64) -> Vec<(f64, f64)> {
    plan.seeds()
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            let t: f64 = rng.random::<f64>() * t_max;
            let gap = if i % 2 == 0 {
                rng.random::<f64>() * t_max
            } else {
                t_max * 10f64.powf(-6.0 * rng.random::<f64>())
            };
            (t, (t + gap).min(t_max))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ResolventSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub u: FourierField,
    pub iterations: usize,
    /// `‖u - β𝒜(u,t) - b‖_{H,1}` relative to `max(‖b‖_{H,1}, β‖f(t)‖_{H,1})`.
    pub residual: f64,
}

/// Solves `u - β𝒜(u, t) = b` by the fixed-point map
/// `u ← (I + βνA)⁻¹ (b - βC(u, u) + βPf(t))`.
pub fn resolvent_solve(
    op: &NavierStokesOperator,
    b: &FourierField,
    beta: f64,
    t: f64,
    settings: ResolventSettings,
) -> Result<ResolventSolution> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(LabError::InvalidArgument(format!("beta must be >= 0, got {beta}")));
    }
    if !(settings.tol > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "tolerance must be > 0, got {}",
            settings.tol
        )));
    }
    ensure_same_grid(b.grid(), op.ctx.grid)?;
    if beta == 0.0 {
        return Ok(ResolventSolution {
            u: b.clone(),
            iterations: 0,
            residual: 0.0,
        });
    }
    let ctx = &op.ctx;
    let forcing = op.forcing.at(t);
    let rhs = b.axpy(beta, &forcing)?;
    let scale = renormed_norm(b, ctx)?.max(beta * renormed_norm(&forcing, ctx)?);
    if scale == 0.0 {
        return Ok(ResolventSolution {
            u: FourierField::zeros(b.grid()),
            iterations: 0,
            residual: 0.0,
        });
    }
    let solve = SpectralMultiplier::Resolvent(beta * op.nu);
    let mut u = solve.apply(&rhs);
    let mut cu = convect(&u, &u);
    // at u = L⁻¹(rhs - βC(w)) the residual is β(C(u,u) - C(w,w)); here w = 0
    let mut residual = beta * renormed_norm(&cu, ctx)? / scale;
    let mut iterations = 0;
    while residual > settings.tol {
        if iterations == settings.max_iter || !residual.is_finite() {
            return Err(LabError::NonConvergence {
                iterations,
                residual,
            });
        }
        let next = solve.apply(&rhs.axpy(-beta, &cu)?);
        let c_next = convect(&next, &next);
        residual = beta * renormed_norm(&(&c_next - &cu), ctx)? / scale;
        u = next;
        cu = c_next;
        iterations += 1;
    }
    Ok(ResolventSolution {
        u,
        iterations,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    ImplicitEuler,
    Exponential,
}

/// Per-step record of a run. Row 0 is the initial datum.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub integrator: Integrator,
    pub dt: f64,
    pub times: Vec<f64>,
    pub norm_h: Vec<f64>,
    pub norm_h1: Vec<f64>,
    pub norm_v: Vec<f64>,
    pub norm_a_half: Vec<f64>,
    /// `‖u‖_{H,1} ≤ u₊/2`, when a threshold report was supplied.
    pub in_ball: Vec<Option<bool>>,
    pub resolvent_iters: Vec<usize>,
    pub residual: Vec<f64>,
    pub divergence: Vec<f64>,
    /// `u₀` was outside the annulus `[u₋, u₊/2]`.
    pub started_outside: bool,
    pub snapshots: Vec<(usize, FourierField)>,
    pub final_state: FourierField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct IntegratorSettings {
    pub resolvent: ResolventSettings,
    /// Keep a snapshot every this many steps; 0 disables.
    pub snapshot_every: usize,
}


fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}"
        )));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(LabError::InvalidArgument(format!(
            "t_end={t_end} is not a multiple of dt={dt}"
        )));
    }
    Ok(steps as usize)
}

struct TraceBuilder<'a> {
    trace: SimulationTrace,
    ctx: &'a RenormContext,
    ball: Option<(f64, f64)>,
    snapshot_every: usize,
}

impl<'a> TraceBuilder<'a> {
    fn new(
        integrator: Integrator,
        dt: f64,
        ctx: &'a RenormContext,
        report: Option<&ThresholdReport>,
        snapshot_every: usize,
        u0: &FourierField,
    ) -> Self {
        let ball = report.and_then(|r| Some((r.u_minus?, 0.5 * r.u_plus?)));
        Self {
            trace: SimulationTrace {
                integrator,
                dt,
                times: Vec::new(),
                norm_h: Vec::new(),
                norm_h1: Vec::new(),
                norm_v: Vec::new(),
                norm_a_half: Vec::new(),
                in_ball: Vec::new(),
                resolvent_iters: Vec::new(),
                residual: Vec::new(),
                divergence: Vec::new(),
                started_outside: false,
                snapshots: Vec::new(),
                final_state: u0.clone(),
            },
            ctx,
            ball,
            snapshot_every,
        }
    }

    fn record(&mut self, step: usize, t: f64, u: &FourierField, iters: usize, residual: f64) -> Result<()> {
        let h1 = renormed_norm(u, self.ctx)?;
        let tr = &mut self.trace;
        tr.times.push(t);
        tr.norm_h.push(u.norm());
        tr.norm_h1.push(h1);
        tr.norm_v.push(u.sobolev_norm(1)?);
        tr.norm_a_half
            .push(renormed_norm(&SpectralMultiplier::Power(0.5).apply(u), self.ctx)?);
        let in_ball = self.ball.map(|(_, radius)| h1 <= radius * (1.0 + 1e-12));
        if step == 0 {
            tr.started_outside = match self.ball {
                Some((lo, radius)) => h1 > radius * (1.0 + 1e-12) || h1 < lo * (1.0 - 1e-12),
                None => false,
            };
        }
        tr.in_ball.push(in_ball);
        tr.resolvent_iters.push(iters);
        tr.residual.push(residual);
        tr.divergence.push(u.divergence_residual());
        if self.snapshot_every > 0 && step.is_multiple_of(self.snapshot_every) {
            tr.snapshots.push((step, u.clone()));
        }
        Ok(())
    }

    fn finish(mut self, u: FourierField) -> SimulationTrace {
        self.trace.final_state = u;
        self.trace
    }
}

/// Implicit Euler: `u_{n+1} = (I - dt 𝒜(·, t_{n+1}))⁻¹ u_n`.
///
/// When the report is admissible, `dt` must not exceed
/// [`ThresholdReport::step_cap`]. Data outside the annulus is integrated
/// anyway and flagged through `started_outside`.
pub fn evolve_implicit_euler(
    op: &NavierStokesOperator,
    u0: &FourierField,
    dt: f64,
    t_end: f64,
    report: &ThresholdReport,
    settings: IntegratorSettings,
) -> Result<SimulationTrace> {
    ensure_same_grid(u0.grid(), op.ctx.grid)?;
    let steps = step_count(dt, t_end)?;
    if let Some(cap) = report.step_cap() {
        if dt > cap {
            return Err(LabError::InvalidArgument(format!(
                "dt={dt} exceeds the resolvent step cap {cap}"
            )));
        }
    }
    let mut builder = TraceBuilder::new(
        Integrator::ImplicitEuler,
        dt,
        &op.ctx,
        Some(report),
        settings.snapshot_every,
        u0,
    );
    builder.record(0, 0.0, u0, 0, 0.0)?;
    let mut u = u0.clone();
    for n in 1..=steps {
        let t = n as f64 * dt;
        let sol = resolvent_solve(op, &u, dt, t, settings.resolvent).map_err(|e| LabError::Step {
            step: n,
            source: Box::new(e),
        })?;
        builder.record(n, t, &sol.u, sol.iterations, sol.residual)?;
        u = sol.u;
    }
    Ok(builder.finish(u))
}

/// Step bound for the explicit nonlinear increment: `dt ≤ 1/(2 |k|max Σ|û₀|)`,
/// where `Σ|û₀|` bounds `sup_x |u₀(x)|`.
pub fn exponential_step_cap(u0: &FourierField) -> f64 {
    let sup_bound: f64 = u0
        .coeffs()
        .iter()
        .map(|m| m.iter().map(|c| c.norm()).sum::<f64>())
        .sum();
    if sup_bound == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * u0.grid().k2_max().sqrt() * sup_bound)
    }
}

/// Growth of `‖u‖_H` over one step that the explicit integrator treats as
/// blow-up.
pub const INSTABILITY_GROWTH: f64 = 10.0;

/// Cross-check integrator: exact Stokes flow composed with an explicit
/// nonlinear increment, `u_{n+1} = e^{-νA dt}(u_n + dt(-C(u_n,u_n) + Pf(t_n)))`.
pub fn evolve_exponential(
    op: &NavierStokesOperator,
    u0: &FourierField,
    dt: f64,
    t_end: f64,
) -> Result<SimulationTrace> {
    ensure_same_grid(u0.grid(), op.ctx.grid)?;
    let steps = step_count(dt, t_end)?;
    let flow = SpectralMultiplier::Heat(op.nu * dt);
    let mut builder = TraceBuilder::new(Integrator::Exponential, dt, &op.ctx, None, 0, u0);
    builder.record(0, 0.0, u0, 0, 0.0)?;
    let mut u = u0.clone();
    for n in 1..=steps {
        let t_prev = (n - 1) as f64 * dt;
        let increment = op.forcing.at(t_prev).axpy(-1.0, &convect(&u, &u))?;
        let next = flow.apply(&u.axpy(dt, &increment)?);
        let before = u.norm();
        let after = next.norm();
        if !after.is_finite() || (before > 0.0 && after > INSTABILITY_GROWTH * before) {
            return Err(LabError::Instability {
                step: n,
                growth: if before > 0.0 { after / before } else { f64::INFINITY },
            });
        }
        builder.record(n, n as f64 * dt, &next, 0, 0.0)?;
        u = next;
    }
    Ok(builder.finish(u))
}

pub const TRACE_CSV_HEADER: &str = "t,norm_H,norm_H1,norm_V,norm_A_half,in_ball,resolvent_iters,residual";

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for i in 0..self.len() {
            let ball = match self.in_ball[i] {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{},{},{:?}",
                self.times[i],
                self.norm_h[i],
                self.norm_h1[i],
                self.norm_v[i],
                self.norm_a_half[i],
                ball,
                self.resolvent_iters[i],
                self.residual[i]
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionClassReport {
    /// Trapezoidal `∫₀ᵀ ‖u‖²_H dt`.
    pub energy_integral: f64,
    pub sup_norm_v: f64,
    pub max_divergence: f64,
    pub ball_exit_events: usize,
    pub started_outside: bool,
    pub final_time: f64,
    pub steps: usize,
    pub max_resolvent_iters: usize,
    /// Largest one-step relative increase of `‖u‖_{H,1}`; `<= 0` for a
    /// monotone non-increasing run.
    pub max_h1_increase: f64,
}

pub fn monitor_solution_class(trace: &SimulationTrace) -> SolutionClassReport {
    let energy_integral = trace
        .times
        .windows(2)
        .zip(trace.norm_h.windows(2))
        .map(|(t, h)| 0.5 * (t[1] - t[0]) * (h[0] * h[0] + h[1] * h[1]))
        .sum();
    let ball_exit_events = trace
        .in_ball
        .windows(2)
        .filter(|w| w[0] == Some(true) && w[1] == Some(false))
        .count();
    SolutionClassReport {
        energy_integral,
        sup_norm_v: trace.norm_v.iter().copied().fold(0.0, f64::max),
        max_divergence: trace.divergence.iter().copied().fold(0.0, f64::max),
        ball_exit_events,
        started_outside: trace.started_outside,
        final_time: trace.times.last().copied().unwrap_or(0.0),
        steps: trace.len().saturating_sub(1),
        max_resolvent_iters: trace.resolvent_iters.iter().copied().max().unwrap_or(0),
        max_h1_increase: trace
            .norm_h1
            .windows(2)
            .map(|w| if w[0] > 0.0 { (w[1] - w[0]) / w[0] } else { w[1] })
            .fold(f64::NEG_INFINITY, f64::max),
    }
}
