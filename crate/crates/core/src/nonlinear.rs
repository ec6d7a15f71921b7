//! The projected convective term `C(u, v) = P[(u·∇)v]` and the trilinear
//! form `b(u, v, w) = ⟨C(u, v), w⟩` in the base and renormed inner products.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::ConstantsEstimate;
use crate::error::{ensure_same_grid, LabError, Result};
use crate::fft::Fft3;
use crate::field::{leray_project, FourierField, Mode};
use crate::grid::Grid;
use crate::operators::SpectralMultiplier;
use crate::renorm::{renormed_inner, renormed_norm, RenormContext};
use crate::seeds::{sub_seed, SeedPlan};

/// Relative slack allowed when an inequality is checked against a constant
/// that was itself estimated in floating point.
pub const BOUND_SLACK: f64 = 1e-8;

const ORACLE_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvectiveMethod {
    Pseudospectral,
    ConvolutionOracle,
}

pub fn convective_term(
    u: &FourierField,
    v: &FourierField,
    method: ConvectiveMethod,
) -> Result<FourierField> {
    ensure_same_grid(u.grid(), v.grid())?;
    let n = u.grid().n();
    if method == ConvectiveMethod::ConvolutionOracle && n > ORACLE_MAX_N {
        return Err(LabError::OracleTooLarge { n });
    }
    if u.is_zero() || v.is_zero() {
        return Ok(FourierField::zeros(u.grid()));
    }
    match method {
        ConvectiveMethod::Pseudospectral => Ok(pseudospectral(u, v)),
        ConvectiveMethod::ConvolutionOracle => Ok(convolution_oracle(u, v)),
    }
}

/// `C(u, v)` through the transform path; the hot kernel of the crate.
pub fn convect(u: &FourierField, v: &FourierField) -> FourierField {
    if u.is_zero() || v.is_zero() {
        return FourierField::zeros(u.grid());
    }
    pseudospectral(u, v)
}

fn pseudospectral(u: &FourierField, v: &FourierField) -> FourierField {
    let grid = u.grid();
    let len = grid.len();
    let fft = Fft3::for_size(grid.n());
    let wavevectors: Vec<[i64; 3]> = (0..len).map(|i| grid.wavevector(i)).collect();

    let velocity: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            let mut buf: Vec<Complex64> = u.coeffs().iter().map(|m| m[c]).collect();
            fft.to_physical(&mut buf);
            buf.into_iter().map(|z| z.re).collect()
        })
        .collect();

    let mut raw: Vec<Mode> = vec![[Complex64::default(); 3]; len];
    let mut buf = vec![Complex64::default(); len];
    let mut product = vec![Complex64::default(); len];
    for i in 0..3 {
        product.iter_mut().for_each(|p| *p = Complex64::default());
        for (j, uj) in velocity.iter().enumerate() {
            for (idx, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(0.0, wavevectors[idx][j] as f64) * v.coeffs()[idx][i];
            }
            fft.to_physical(&mut buf);
            for ((p, b), a) in product.iter_mut().zip(&buf).zip(uj) {
                p.re += a * b.re;
            }
        }
        fft.to_spectral(&mut product);
        for (m, p) in raw.iter_mut().zip(&product) {
            m[i] = *p;
        }
    }
    symmetrize(grid, &mut raw);
    leray_project(grid, &raw).expect("length matches grid")
}

/// Averages `x(k)` with `conj(x(-k))` so the result is exactly Hermitian.
fn symmetrize(grid: Grid, raw: &mut [Mode]) {
    for idx in 0..grid.len() {
        let mirror = grid.mirror(idx);
        if mirror < idx || !grid.is_active(idx) {
            continue;
        }
        for c in 0..3 {
            let avg = 0.5 * (raw[idx][c] + raw[mirror][c].conj());
            raw[idx][c] = avg;
            raw[mirror][c] = avg.conj();
        }
    }
}

/// Direct evaluation of `Σ_{p+q=k} (û(p)·iq) v̂(q)` over active pairs.
fn convolution_oracle(u: &FourierField, v: &FourierField) -> FourierField {
    let grid = u.grid();
    let active = grid.active_indices();
    let mut raw: Vec<Mode> = vec![[Complex64::default(); 3]; grid.len()];
    for &pi in &active {
        let p = grid.wavevector(pi);
        let up = u.coeffs()[pi];
        for &qi in &active {
            let q = grid.wavevector(qi);
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            if !grid.is_active_k(k) {
                continue;
            }
            let u_dot_q = up[0] * q[0] as f64 + up[1] * q[1] as f64 + up[2] * q[2] as f64;
            let factor = Complex64::i() * u_dot_q;
            let ki = grid.index_of(k).expect("active modes are representable");
            let vq = v.coeffs()[qi];
            for c in 0..3 {
                raw[ki][c] += factor * vq[c];
            }
        }
    }
    leray_project(grid, &raw).expect("length matches grid")
}

/// Which inner product a trilinear form is taken in.
#[derive(Debug, Clone, Copy)]
pub enum Form<'a> {
    Base,
    /// `⟨S C(u, v), S w⟩_H` with `S = S(r)`.
    Renormed(&'a RenormContext),
}

pub fn trilinear(u: &FourierField, v: &FourierField, w: &FourierField, form: Form<'_>) -> Result<f64> {
    ensure_same_grid(u.grid(), w.grid())?;
    let c = convective_term(u, v, ConvectiveMethod::Pseudospectral)?;
    match form {
        Form::Base => Ok(c.inner(w)),
        Form::Renormed(ctx) => renormed_inner(&c, w, ctx),
    }
}

/// Exponents `(α₁, α₂, α₃)` of the trilinear estimate
/// `|b(u,v,w)| ≤ c ‖A^{α₁/2}u‖ ‖A^{(1+α₂)/2}v‖ ‖A^{α₃/2}w‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple(pub f64, pub f64, pub f64);

impl ExponentTriple {
    /// The triple used for the renormed bound.
    pub const RENORMED: ExponentTriple = ExponentTriple(0.0, 1.0, 0.5);

    pub fn validate(&self) -> Result<()> {
        let ExponentTriple(a, b, c) = *self;
        if a < 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.5).abs() > 1e-12 {
            return Err(LabError::InvalidArgument(format!(
                "exponents must be nonnegative and sum to 3/2, got ({a}, {b}, {c})"
            )));
        }
        let corner = |x: f64, y: f64, z: f64| (x - 1.5).abs() < 1e-12 && y == 0.0 && z == 0.0;
        if corner(a, b, c) || corner(b, a, c) || corner(c, a, b) {
            return Err(LabError::ExcludedExponents(a, b, c));
        }
        Ok(())
    }

    fn denominator(&self, u: &FourierField, v: &FourierField, w: &FourierField) -> f64 {
        power_norm(u, 0.5 * self.0) * power_norm(v, 0.5 * (1.0 + self.1)) * power_norm(w, 0.5 * self.2)
    }
}

/// `‖A^z u‖_H`.
pub fn power_norm(u: &FourierField, z: f64) -> f64 {
    if z == 0.0 {
        u.norm()
    } else {
        u.weighted_norm(|q| q.powf(2.0 * z))
    }
}

/// One random triple with both forms of `b(u, v, w)` evaluated.
#[derive(Debug, Clone)]
pub struct TrilinearSample {
    pub seed: u64,
    pub u: FourierField,
    pub v: FourierField,
    pub w: FourierField,
    pub b_h: f64,
    pub b_h1: f64,
}

impl TrilinearSample {
    pub fn from_fields(
        seed: u64,
        u: FourierField,
        v: FourierField,
        w: FourierField,
        ctx: &RenormContext,
    ) -> Result<Self> {
        ensure_same_grid(u.grid(), v.grid())?;
        ensure_same_grid(u.grid(), w.grid())?;
        let c = convect(&u, &v);
        let b_h = c.inner(&w);
        let b_h1 = renormed_inner(&c, &w, ctx)?;
        Ok(Self {
            seed,
            u,
            v,
            w,
            b_h,
            b_h1,
        })
    }

    pub fn draw(grid: Grid, seed: u64, spectrum_decay: f64, ctx: &RenormContext) -> Result<Self> {
        let field = |j| FourierField::random(grid, sub_seed(seed, j), spectrum_decay);
        Self::from_fields(seed, field(0)?, field(1)?, field(2)?, ctx)
    }
}

/// A reproducible sample corpus; samples are generated on demand so large
/// corpora never sit in memory at once.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrilinearCorpus {
    pub grid: Grid,
    pub plan: SeedPlan,
    pub spectrum_decay: f64,
}

impl TrilinearCorpus {
    pub fn new(grid: Grid, plan: SeedPlan, spectrum_decay: f64) -> Self {
        Self {
            grid,
            plan,
            spectrum_decay,
        }
    }

    pub fn draw_all(&self, ctx: &RenormContext) -> Result<Vec<TrilinearSample>> {
        self.plan
            .seeds()
            .into_par_iter()
            .map(|s| TrilinearSample::draw(self.grid, s, self.spectrum_decay, ctx))
            .collect()
    }

    fn map_samples<T: Send>(
        &self,
        ctx: &RenormContext,
        f: impl Fn(&TrilinearSample) -> T + Sync + Send,
    ) -> Result<Vec<T>> {
        self.plan
            .seeds()
            .into_par_iter()
            .map(|s| TrilinearSample::draw(self.grid, s, self.spectrum_decay, ctx).map(|x| f(&x)))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrilinearReport {
    pub exponents: ExponentTriple,
    pub sample_count: usize,
    pub skipped: usize,
    pub seeds: Vec<u64>,
    /// Empirical constant over the non-degenerate samples; `None` if all
    /// samples were skipped.
    pub c_hat: Option<f64>,
    /// Constant the verdict is taken against: the supplied reference, or
    /// `c_hat`.
    pub constant: Option<f64>,
    pub worst_ratio: Option<f64>,
    pub witness_seed: Option<u64>,
    pub pass: bool,
}

fn trilinear_report(
    exponents: ExponentTriple,
    seeds: Vec<u64>,
    ratios: Vec<(f64, f64)>,
    reference: Option<f64>,
) -> TrilinearReport {
    let sample_count = ratios.len();
    let mut skipped = 0;
    let mut c_hat: Option<f64> = None;
    let mut usable = Vec::with_capacity(sample_count);
    for (seed, (lhs, rhs)) in seeds.iter().zip(&ratios) {
        if *rhs == 0.0 || !rhs.is_finite() {
            skipped += 1;
            continue;
        }
        let q = lhs / rhs;
        c_hat = Some(c_hat.map_or(q, |c| c.max(q)));
        usable.push((*seed, q));
    }
    let constant = reference.or(c_hat);
    let mut worst: Option<(f64, u64)> = None;
    if let Some(c) = constant {
        for (seed, q) in &usable {
            let ratio = if c > 0.0 {
                q / c
            } else if *q == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if worst.is_none_or(|(w, _)| ratio > w) {
                worst = Some((ratio, *seed));
            }
        }
    }
    let pass = worst.is_none_or(|(w, _)| w <= 1.0 + BOUND_SLACK);
    TrilinearReport {
        exponents,
        sample_count,
        skipped,
        seeds,
        c_hat,
        constant,
        worst_ratio: worst.map(|w| w.0),
        witness_seed: worst.map(|w| w.1),
        pass,
    }
}

/// Empirical constant of the trilinear estimate over explicit samples and
/// the verdict against `reference` (or against `ĉ` itself when absent).
pub fn verify_trilinear_estimate(
    samples: &[TrilinearSample],
    exponents: ExponentTriple,
    reference: Option<f64>,
) -> Result<TrilinearReport> {
    exponents.validate()?;
    let ratios = samples
        .iter()
        .map(|s| (s.b_h.abs(), exponents.denominator(&s.u, &s.v, &s.w)))
        .collect();
    Ok(trilinear_report(
        exponents,
        samples.iter().map(|s| s.seed).collect(),
        ratios,
        reference,
    ))
}

/// Corpus-driven form of [`verify_trilinear_estimate`].
pub fn verify_trilinear_corpus(
    corpus: &TrilinearCorpus,
    ctx: &RenormContext,
    exponents: ExponentTriple,
    reference: Option<f64>,
) -> Result<TrilinearReport> {
    exponents.validate()?;
    let ratios = corpus.map_samples(ctx, |s| (s.b_h.abs(), exponents.denominator(&s.u, &s.v, &s.w)))?;
    Ok(trilinear_report(exponents, corpus.plan.seeds(), ratios, reference))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrilinearConstant {
    pub exponents: ExponentTriple,
    pub c: f64,
    pub sample_count: usize,
    pub plan: SeedPlan,
    pub spectrum_decay: f64,
    pub argmax_seed: Option<u64>,
}

/// Estimates `c` for the trilinear estimate from random pairs `(u, v)`,
/// taking for each pair the supremum over `w` in closed form:
/// `sup_w |⟨C(u,v), w⟩| / ‖A^{α₃/2}w‖ = ‖A^{-α₃/2} C(u,v)‖`.
pub fn estimate_trilinear_constant(
    grid: Grid,
    exponents: ExponentTriple,
    plan: SeedPlan,
    spectrum_decay: f64,
) -> Result<TrilinearConstant> {
    exponents.validate()?;
    let ExponentTriple(a1, a2, a3) = exponents;
    let ratios: Vec<(u64, f64)> = plan
        .seeds()
        .into_par_iter()
        .map(|s| -> Result<(u64, f64)> {
            let u = FourierField::random(grid, sub_seed(s, 0), spectrum_decay)?;
            let v = FourierField::random(grid, sub_seed(s, 1), spectrum_decay)?;
            let den = power_norm(&u, 0.5 * a1) * power_norm(&v, 0.5 * (1.0 + a2));
            if den == 0.0 {
                return Ok((s, 0.0));
            }
            let c = convect(&u, &v);
            let num = SpectralMultiplier::Power(-0.5 * a3).apply(&c).norm();
            Ok((s, num / den))
        })
        .collect::<Result<_>>()?;
    let best = ratios
        .iter()
        .copied()
        .fold(None, |acc: Option<(u64, f64)>, (s, q)| match acc {
            Some((_, b)) if b >= q => acc,
            _ => Some((s, q)),
        });
    Ok(TrilinearConstant {
        exponents,
        c: best.map_or(0.0, |b| b.1),
        sample_count: ratios.len(),
        plan,
        spectrum_decay,
        argmax_seed: best.map(|b| b.0),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenormedBoundsReport {
    pub nonlinear_bound: f64,
    pub sample_count: usize,
    pub degenerate: usize,
    pub seeds: Vec<u64>,
    /// Worst `|⟨C(u,v),w⟩_{H,1}|` or `|⟨C(v,u),w⟩_{H,1}|` over
    /// `K ‖u‖_{H,1} ‖v‖_{H,1} ‖w‖_{H,1}`.
    pub worst_ratio_trilinear: f64,
    /// Worst `max(‖C(u,v)‖_{H,1}, ‖C(v,u)‖_{H,1})` over `K ‖u‖_{H,1} ‖v‖_{H,1}`.
    pub worst_ratio_norm: f64,
    pub witness_seed: Option<u64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy)]
struct RenormedRatios {
    seed: u64,
    trilinear: f64,
    norm: f64,
    degenerate: bool,
}

fn ratio(lhs: f64, scale: f64, k: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        lhs / scale / k
    }
}

fn renormed_ratios(s: &TrilinearSample, ctx: &RenormContext, k: f64) -> Result<RenormedRatios> {
    let nu = renormed_norm(&s.u, ctx)?;
    let nv = renormed_norm(&s.v, ctx)?;
    let nw = renormed_norm(&s.w, ctx)?;
    let cvu = convect(&s.v, &s.u);
    let b_vu = renormed_inner(&cvu, &s.w, ctx)?;
    let cuv = convect(&s.u, &s.v);
    let norm_lhs = renormed_norm(&cuv, ctx)?.max(renormed_norm(&cvu, ctx)?);
    let tri_lhs = s.b_h1.abs().max(b_vu.abs());
    Ok(RenormedRatios {
        seed: s.seed,
        trilinear: ratio(tri_lhs, nu * nv * nw, k),
        norm: ratio(norm_lhs, nu * nv, k),
        degenerate: nu * nv * nw == 0.0,
    })
}

fn renormed_report(k: f64, seeds: Vec<u64>, rows: Vec<RenormedRatios>) -> RenormedBoundsReport {
    let worst_t = rows.iter().map(|r| r.trilinear).fold(0.0, f64::max);
    let worst_n = rows.iter().map(|r| r.norm).fold(0.0, f64::max);
    let witness = rows
        .iter()
        .max_by(|a, b| a.trilinear.max(a.norm).total_cmp(&b.trilinear.max(b.norm)))
        .filter(|r| r.trilinear.max(r.norm) > 0.0)
        .map(|r| r.seed);
    RenormedBoundsReport {
        nonlinear_bound: k,
        sample_count: rows.len(),
        degenerate: rows.iter().filter(|r| r.degenerate).count(),
        seeds,
        worst_ratio_trilinear: worst_t,
        worst_ratio_norm: worst_n,
        witness_seed: witness,
        pass: worst_t <= 1.0 + BOUND_SLACK && worst_n <= 1.0 + BOUND_SLACK,
    }
}

/// Checks the renormed trilinear bound and the renormed norm bound of the
/// convective term, both with constant `K = M⁴ c c₁ c₂ / r^{5/4}`.
pub fn verify_renormed_bounds(
    ctx: &RenormContext,
    constants: &ConstantsEstimate,
    samples: &[TrilinearSample],
) -> Result<RenormedBoundsReport> {
    let k = constants.nonlinear_bound();
    let rows = samples
        .iter()
        .map(|s| renormed_ratios(s, ctx, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(renormed_report(k, samples.iter().map(|s| s.seed).collect(), rows))
}

pub fn verify_renormed_corpus(
    ctx: &RenormContext,
    constants: &ConstantsEstimate,
    corpus: &TrilinearCorpus,
) -> Result<RenormedBoundsReport> {
    let k = constants.nonlinear_bound();
    let rows = corpus
        .map_samples(ctx, |s| renormed_ratios(s, ctx, k))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(renormed_report(k, corpus.plan.seeds(), rows))
}

/// Largest relative gap between the transform path and the convolution
/// oracle over random pairs.
pub fn oracle_discrepancy(grid: Grid, plan: SeedPlan, spectrum_decay: f64) -> Result<f64> {
    plan.seeds()
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let u = FourierField::random(grid, sub_seed(s, 0), spectrum_decay)?;
            let v = FourierField::random(grid, sub_seed(s, 1), spectrum_decay)?;
            let fast = convective_term(&u, &v, ConvectiveMethod::Pseudospectral)?;
            let slow = convective_term(&u, &v, ConvectiveMethod::ConvolutionOracle)?;
            Ok((&fast - &slow).norm() / slow.norm().max(f64::MIN_POSITIVE))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
