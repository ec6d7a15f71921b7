mod common;

use std::sync::OnceLock;

use common::*;
use nse_lab::certificate::*;
use nse_lab::evolution::{ForcingKind, ForcingModel, NavierStokesOperator};
use nse_lab::operators::SpectralMultiplier;
use nse_lab::seeds::{SeedPlan, Stream};
use nse_lab::workflow::{prepare, Setup};
use nse_lab::{renormed_inner, renormed_norm, FourierField, LabError, RenormContext};

fn forced() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| prepare(&quick_config(100)).unwrap())
}

fn unforced() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let mut cfg = quick_config(100);
        cfg.forcing_kind = ForcingKind::Zero;
        prepare(&cfg).unwrap()
    })
}

/// `ν = α = r = M = 1` with `c c₁ c₂ = 0.25`, so `K = 0.25`.
fn hand_constants() -> (ConstantsEstimate, RenormContext) {
    let ctx = RenormContext::new(grid(4), 1.0, None).unwrap();
    let consts = ConstantsEstimate {
        r: 1.0,
        omega: ctx.omega,
        lambda1: 1.0,
        k2_max: ctx.k2_max,
        m: 1.0,
        ln_m: 0.0,
        m1: 1.0,
        c: 0.25,
        c1: 1.0,
        c2: 1.0,
        c3: 1.0,
        alpha: 1.0,
        alpha_method: AlphaMethod::SharpSpectral,
        kappa: 1.0,
        trilinear: None,
    };
    (consts, ctx)
}

#[test]
fn smoothing_constant_closed_forms() {
    let g = grid(16);
    for r in [0.01, 0.3, 1.0, 2.0] {
        let ctx = RenormContext::new(g, r, None).unwrap();
        let c0 = estimate_smoothing_constant(&ctx, 0.0).unwrap();
        assert!(rel(c0, (-r).exp()) < 1e-14);
    }
    let ctx = RenormContext::new(g, 1.0, None).unwrap();
    let c1 = estimate_smoothing_constant(&ctx, 1.0).unwrap();
    assert!((c1 - 0.367879).abs() < 1e-6);
    assert!(rel(c1, (-1f64).exp()) < 1e-14);
    assert!(matches!(
        estimate_smoothing_constant(&ctx, -0.5),
        Err(LabError::InvalidArgument(_))
    ));
}

#[test]
fn smoothing_bound_is_saturated_by_the_argmax_mode() {
    let g = grid(16);
    for r in [0.001, 0.05, 0.3, 1.0] {
        let ctx = RenormContext::new(g, r, None).unwrap();
        for z in [0.25, 0.5, 1.0, 1.5] {
            let cz = estimate_smoothing_constant(&ctx, z).unwrap();
            let argmax = g
                .active_k2_values()
                .into_iter()
                .max_by(|a, b| {
                    let f = |q: u64| (q as f64).powf(z) * (-(q as f64) * r).exp();
                    f(*a).total_cmp(&f(*b))
                })
                .unwrap();
            let u = mode_with_k2(g, argmax);
            let lhs = SpectralMultiplier::Power(z).apply(&SpectralMultiplier::Heat(r).apply(&u)).norm();
            let ratio = lhs * r.powf(z) / (cz * u.norm());
            assert!((ratio - 1.0).abs() < 1e-12, "r={r} z={z}: {ratio}");
            for seed in 0..5 {
                let v = FourierField::random(g, seed, 0.0).unwrap();
                let lhs = SpectralMultiplier::Power(z).apply(&SpectralMultiplier::Heat(r).apply(&v)).norm();
                assert!(lhs * r.powf(z) <= cz * v.norm() * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn alpha_examples_and_dominance() {
    let g = grid(16);
    let ctx = RenormContext::new(g, 1.0, None).unwrap();
    let a = compute_alpha(&ctx, AlphaMethod::Lemma7Construction);
    assert!((a.sqrt() - 0.632121).abs() < 1e-6);
    assert!(rel(a.sqrt(), 1.0 - (-1f64).exp()) < 1e-14);
    assert_eq!(compute_alpha(&ctx, AlphaMethod::SharpSpectral), 1.0);
    for r in [1e-4, 0.001, 0.1, 0.25, 1.0, 4.0, 9.0] {
        let ctx = RenormContext::new(g, r, None).unwrap();
        let lo = compute_alpha(&ctx, AlphaMethod::Lemma7Construction);
        let hi = compute_alpha(&ctx, AlphaMethod::SharpSpectral);
        assert!(lo <= hi, "r={r}");
        assert!(rel(lo, (1.0 - (-r.sqrt()).exp()).powi(2)) < 1e-14);
    }
}

#[test]
fn reverse_poincare_holds_for_both_alphas() {
    let g = grid(16);
    for r in [0.001, 0.25, 1.0, 4.0] {
        let ctx = RenormContext::new(g, r, None).unwrap();
        for method in [AlphaMethod::Lemma7Construction, AlphaMethod::SharpSpectral] {
            let plan = SeedPlan::new(4, Stream::ReversePoincare, 50);
            let stats = check_reverse_poincare(&ctx, compute_alpha(&ctx, method), plan, 1.0).unwrap();
            assert!(stats.pass, "r={r} {method:?}: {}", stats.worst_margin);
        }
    }
    // the sharp value is attained on the lowest shell
    let ctx = RenormContext::new(g, 0.5, None).unwrap();
    let u = mode_with_k2(g, 1);
    let lhs = compute_alpha(&ctx, AlphaMethod::SharpSpectral).sqrt() * renormed_norm(&u, &ctx).unwrap();
    let rhs = ctx.r.sqrt() * renormed_norm(&SpectralMultiplier::Power(0.5).apply(&u), &ctx).unwrap();
    assert!(rel(lhs, rhs) < 1e-14);
}

#[test]
fn threshold_example_gamma_half() {
    let (consts, ctx) = hand_constants();
    let rep = compute_thresholds(1.0, 0.5, &consts, &ctx).unwrap();
    assert!(rel(rep.gamma, 0.5) < 1e-14);
    let s = 0.5f64.sqrt();
    assert!(rel(rep.u_plus.unwrap(), 2.0 * (1.0 + s)) < 1e-14);
    assert!(rel(rep.u_minus.unwrap(), 2.0 * (1.0 - s)) < 1e-14);
    assert!((rep.u_plus.unwrap() - 3.41421).abs() < 1e-5);
    assert!((rep.u_minus.unwrap() - 0.585786).abs() < 1e-6);
    assert_eq!(rep.roots, RootKind::Distinct);
    assert!(rep.admissible);
    // roots of 0.25u² - u + 0.5
    for x in [rep.u_plus.unwrap(), rep.u_minus.unwrap()] {
        assert!((0.25 * x * x - x + 0.5).abs() < 1e-14);
        assert!(rep.quadratic_residual(x) < 1e-10);
        assert!(rep.bound_polynomial(x).abs() < 1e-10 * x * (1.0 + x + 0.25 * x * x));
    }
    assert!(rel(rep.delta.unwrap(), 0.5 * (1.0 - s)) < 1e-14);
}

#[test]
fn roots_satisfy_quadratic_on_estimated_constants() {
    let s = forced();
    let rep = &s.thresholds;
    assert!(rep.admissible);
    for x in [rep.u_plus.unwrap(), rep.u_minus.unwrap()] {
        assert!(rep.quadratic_residual(x) < 1e-10);
    }
    assert!(rep.u_minus.unwrap() <= rep.u_plus.unwrap());
}

#[test]
fn zero_forcing_closed_forms() {
    let s = unforced();
    let rep = &s.thresholds;
    let k = &s.constants;
    assert_eq!(rep.gamma, 0.0);
    assert_eq!(rep.u_minus, Some(0.0));
    assert_eq!(rep.delta, Some(0.0));
    assert_eq!(rep.nu_min, 0.0);
    let closed = (rep.nu.ln() + k.alpha.ln() + 0.25 * k.r.ln()
        - (4.0 * k.ln_m + k.c.ln() + k.c1.ln() + k.c2.ln()))
    .exp();
    assert!(rel(rep.u_plus.unwrap(), closed) < 1e-12);
    let (consts, ctx) = hand_constants();
    let rep = compute_thresholds(2.0, 0.0, &consts, &ctx).unwrap();
    assert_eq!(rep.u_minus, Some(0.0));
    assert!(rel(rep.u_plus.unwrap(), 8.0) < 1e-14);
}

#[test]
fn double_and_complex_roots() {
    let (consts, ctx) = hand_constants();
    // γ = 4 f K r² / (ν² α²) = f
    let rep = compute_thresholds(1.0, 1.0, &consts, &ctx).unwrap();
    assert_eq!(rep.gamma, 1.0);
    assert_eq!(rep.roots, RootKind::Double);
    assert_eq!(rep.u_plus, rep.u_minus);
    assert_eq!(rep.delta, Some(0.0));
    assert!(!rep.admissible);
    assert!(rep.quadratic_residual(rep.u_plus.unwrap()) < 1e-10);

    let rep = compute_thresholds(1.0, 1.5, &consts, &ctx).unwrap();
    assert_eq!(rep.roots, RootKind::Complex);
    assert!(!rep.admissible);
    assert_eq!((rep.u_plus, rep.u_minus, rep.delta), (None, None, None));
    assert!(rep.step_cap().is_none());

    // below the double root δ follows (νκ/2)(1 - √(1-γ)), increasing
    // towards νκ/2; at γ = 1 the annulus [u₋, u₊/2] is empty and δ = 0
    let mut last = 0.0;
    for f in [0.5, 0.9, 0.99, 0.9999, 0.999999] {
        let rep = compute_thresholds(1.0, f, &consts, &ctx).unwrap();
        let d = rep.delta.unwrap();
        assert!(d > last);
        assert!(rel(d, 0.5 * (1.0 - (1.0 - rep.gamma).sqrt())) < 1e-12);
        // the annulus is nonempty exactly when γ ≤ 8/9
        assert_eq!(rep.u_minus.unwrap() <= 0.5 * rep.u_plus.unwrap(), rep.gamma <= 8.0 / 9.0);
        last = d;
    }
    assert!(last < 0.5);
}

#[test]
fn threshold_errors() {
    let (consts, ctx) = hand_constants();
    for nu in [0.0, -1.0, f64::NAN] {
        assert!(matches!(
            compute_thresholds(nu, 0.1, &consts, &ctx),
            Err(LabError::InvalidArgument(_))
        ));
    }
    assert!(compute_thresholds(1.0, -0.1, &consts, &ctx).is_err());
}

#[test]
fn monotonicity_and_delta_consistency() {
    let s = forced();
    let (k, ctx) = (&s.constants, &s.ctx);
    let f = s.thresholds.f_sup;
    let nus = [0.7, 0.8, 1.0, 1.5, 3.0, 10.0];
    let reps: Vec<_> = nus.iter().map(|&nu| compute_thresholds(nu, f, k, ctx).unwrap()).collect();
    for w in reps.windows(2) {
        assert!(w[1].u_plus.unwrap() > w[0].u_plus.unwrap());
        assert!(w[1].gamma < w[0].gamma);
    }
    let fs = [0.0, 0.001, 0.005, 0.01, 0.02];
    let reps: Vec<_> = fs.iter().map(|&f| compute_thresholds(1.0, f, k, ctx).unwrap()).collect();
    for w in reps.windows(2) {
        assert!(w[1].u_plus.unwrap() < w[0].u_plus.unwrap());
        assert!(w[1].u_minus.unwrap() > w[0].u_minus.unwrap());
    }
    for r in &reps {
        let closed = 0.5 * r.nu * r.kappa * (1.0 - (1.0 - r.gamma).sqrt());
        assert!((r.delta.unwrap() - closed).abs() <= 1e-10 * r.nu * r.kappa);
        assert!(rel(r.kappa, k.alpha / k.r) < 1e-15);
        assert!(r.kappa <= ctx.lambda1);
    }
}

#[test]
fn nu_min_is_the_admissibility_crossover() {
    let s = forced();
    let (k, ctx) = (&s.constants, &s.ctx);
    let f = s.thresholds.f_sup;
    let nu_min = s.thresholds.nu_min;
    assert!(nu_min > 0.0);
    let at = compute_thresholds(nu_min, f, k, ctx).unwrap();
    assert!((at.gamma - 1.0).abs() < 1e-12);
    assert!(compute_thresholds(nu_min * (1.0 + 1e-9), f, k, ctx).unwrap().admissible);
    assert!(!compute_thresholds(nu_min * (1.0 - 1e-9), f, k, ctx).unwrap().admissible);
    for nu in [1.1 * nu_min, 2.0 * nu_min] {
        assert!(compute_thresholds(nu, f, k, ctx).unwrap().delta.unwrap() > 0.0);
    }
}

#[test]
fn constants_invariants() {
    let k = &forced().constants;
    assert!(k.m >= 1.0 && k.m1 >= 1.0);
    for v in [k.c, k.c1, k.c2, k.c3, k.alpha, k.kappa] {
        assert!(v > 0.0 && v.is_finite());
    }
    assert!(k.kappa <= k.lambda1);
    assert!(rel(k.c3, k.k2_max * k.r / k.m) < 1e-12);
    assert!(rel(k.nonlinear_bound(), k.m.powi(4) * k.c * k.c1 * k.c2 / k.r.powf(1.25)) < 1e-10);
}

#[test]
fn ball_membership_examples() {
    let s = unforced();
    let rep = &s.thresholds;
    let z = FourierField::zeros(s.grid);
    assert_eq!(ball_membership(&z, rep, &s.ctx).unwrap(), BallClass::InsideD);
    let u = FourierField::random(s.grid, 3, 1.0).unwrap();
    let unit = u.scale(1.0 / renormed_norm(&u, &s.ctx).unwrap());
    let above = unit.scale(0.6 * rep.u_plus.unwrap());
    assert_eq!(ball_membership(&above, rep, &s.ctx).unwrap(), BallClass::AboveHalfUPlus);

    let s = forced();
    let rep = &s.thresholds;
    let below = unit.scale(0.5 * rep.u_minus.unwrap());
    assert_eq!(ball_membership(&below, rep, &s.ctx).unwrap(), BallClass::BelowUMinus);
    let inside = unit.scale(0.5 * (rep.u_minus.unwrap() + 0.5 * rep.u_plus.unwrap()));
    assert_eq!(ball_membership(&inside, rep, &s.ctx).unwrap(), BallClass::InsideD);
}

#[test]
fn zero_dissipative_examples() {
    let s = unforced();
    let rep = &s.thresholds;
    let u0 = FourierField::single_mode(s.grid, [0, 0, 2], [1.0, 0.0, 0.0]).unwrap();
    let u = u0.scale(0.3 * rep.u_plus.unwrap() / renormed_norm(&u0, &s.ctx).unwrap());
    let m = check_zero_dissipative(&u, 0.0, &s.op, rep).unwrap();
    let half = renormed_norm(&SpectralMultiplier::Power(0.5).apply(&u), &s.ctx).unwrap();
    assert!(rel(m.value, -s.op.nu * half * half) < 1e-12);
    assert!(m.value < 0.0 && m.holds());

    for setup in [forced(), unforced()] {
        let stats = certify_zero_dissipative(
            &setup.op,
            &setup.thresholds,
            SeedPlan::new(5, Stream::ZeroDissipative, 100),
            1.0,
            setup.check_time(),
        )
        .unwrap();
        assert!(stats.pass, "{stats:?}");
        assert_eq!(stats.count, 100);
        assert!(stats.worst_margin <= 0.0);
    }

    let rep = &forced().thresholds;
    let up = rep.u_plus.unwrap();
    assert!(rep.bound_polynomial(1.01 * up) > 0.0);
    assert!(rep.bound_polynomial(0.99 * up) < 0.0);
    assert!(rep.bound_polynomial(0.99 * rep.u_minus.unwrap()) > 0.0);
}

#[test]
fn strong_dissipative_examples() {
    let s = forced();
    let rep = &s.thresholds;
    let (lo, hi) = (rep.u_minus.unwrap(), rep.u_plus.unwrap());
    let u = sample_in_annulus(s.grid, &s.ctx, 11, 1.0, lo, 0.5 * hi).unwrap();
    let m = check_strong_dissipative(&u, &u, 1.0, &s.op, rep).unwrap();
    assert_eq!((m.g, m.bound), (0.0, 0.0));

    for setup in [forced(), unforced()] {
        let stats = certify_strong_dissipative(
            &setup.op,
            &setup.thresholds,
            SeedPlan::new(6, Stream::StrongDissipative, 100),
            1.0,
            setup.check_time(),
        )
        .unwrap();
        assert!(stats.pass, "{stats:?}");
        assert_eq!(stats.count, 100);
    }

    // v = 0 and f = 0 reduce to the zero-dissipativity value
    let s = unforced();
    let rep = &s.thresholds;
    let u = sample_in_annulus(s.grid, &s.ctx, 12, 1.0, 0.0, 0.5 * rep.u_plus.unwrap()).unwrap();
    let z = FourierField::zeros(s.grid);
    let strong = check_strong_dissipative(&u, &z, 0.0, &s.op, rep).unwrap();
    let zero = check_zero_dissipative(&u, 0.0, &s.op, rep).unwrap();
    assert!(rel(strong.g, zero.value) < 1e-14);
}

#[test]
fn certification_is_sound_on_fresh_seeds() {
    let s = forced();
    for master in [100, 200] {
        let z = certify_zero_dissipative(&s.op, &s.thresholds, SeedPlan::new(master, Stream::ZeroDissipative, 30), 1.0, s.check_time()).unwrap();
        let st = certify_strong_dissipative(&s.op, &s.thresholds, SeedPlan::new(master, Stream::StrongDissipative, 30), 1.0, s.check_time()).unwrap();
        assert!(z.pass && st.pass);
    }
}

#[test]
fn annulus_sampling_lands_in_range() {
    let s = forced();
    let (lo, hi) = (s.thresholds.u_minus.unwrap(), 0.5 * s.thresholds.u_plus.unwrap());
    for seed in 0..20 {
        let u = sample_in_annulus(s.grid, &s.ctx, seed, 1.0, lo, hi).unwrap();
        let x = renormed_norm(&u, &s.ctx).unwrap();
        assert!(x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12));
        assert!(u.divergence_residual() < 1e-12);
    }
}

#[test]
fn continuity_modulus_examples() {
    let s = forced();
    let (k, rep) = (&s.constants, &s.thresholds);
    let plan = SeedPlan::new(7, Stream::Continuity, 5);
    let samples = continuity_samples(&s.op, rep, plan, 1.0, 8).unwrap();
    assert_eq!(samples.len(), 5 * 8 * 3);
    let report = verify_continuity_modulus(&s.op, &samples, k, rep).unwrap();
    assert!(report.pass && report.worst_ratio <= 1.0, "{report:?}");

    // identical points give 0 ≤ 0
    let same = ContinuitySample {
        seed: 0,
        u_n: samples[0].u.clone(),
        t_n: samples[0].t,
        u: samples[0].u.clone(),
        t: samples[0].t,
    };
    let r = verify_continuity_modulus(&s.op, &[same], k, rep).unwrap();
    assert_eq!(r.worst_ratio, 0.0);

    // time-only sequences are bounded by the forcing modulus alone
    let d = s.op.forcing.holder_constant(&s.ctx).unwrap();
    for smp in samples.iter().filter(|x| x.u_n == x.u && x.t_n != x.t) {
        let lhs = renormed_norm(&(&s.op.apply(&smp.u, smp.t_n).unwrap() - &s.op.apply(&smp.u, smp.t).unwrap()), &s.ctx).unwrap();
        assert!(lhs <= d * (smp.t_n - smp.t).abs().powf(s.op.forcing.theta) * (1.0 + 1e-12));
    }
}

#[test]
fn randomized_checks_need_an_admissible_report() {
    let (consts, ctx) = hand_constants();
    let rep = compute_thresholds(1.0, 2.0, &consts, &ctx).unwrap();
    let op = NavierStokesOperator::new(1.0, ForcingModel::zero(ctx.grid), ctx).unwrap();
    let plan = SeedPlan::new(1, Stream::ZeroDissipative, 3);
    assert!(certify_zero_dissipative(&op, &rep, plan, 1.0, 0.0).is_err());
    assert!(certify_strong_dissipative(&op, &rep, plan, 1.0, 0.0).is_err());
    // admissible with γ > 8/9: no pairs fit in [u₋, u₊/2], so the check is vacuous
    let thin = compute_thresholds(1.0, 0.95, &consts, &ctx).unwrap();
    assert!(thin.admissible);
    let stats = certify_strong_dissipative(&op, &thin, plan, 1.0, 0.0).unwrap();
    assert!(stats.pass && stats.count == 0);
    assert!(continuity_samples(&op, &thin, plan, 1.0, 4).unwrap().is_empty());
    let u = FourierField::random(ctx.grid, 1, 1.0).unwrap();
    assert!(ball_membership(&u, &rep, &ctx).is_err());
    // the renormed inner product is what the margins are measured in
    assert!(renormed_inner(&u, &u, &ctx).unwrap() > 0.0);
}
