#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use nse_lab::{FourierField, Grid, Mode};

pub fn grid(n: usize) -> Grid {
    Grid::new(n).expect("valid grid")
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn field_rel(a: &FourierField, b: &FourierField) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

fn canonical(k: [i64; 3]) -> bool {
    k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)))
}

/// Conjugate-symmetric array on the active set built from per-mode values
/// `f(k, rng)`.
fn symmetric_array(grid: Grid, seed: u64, f: impl Fn([i64; 3], &mut ChaCha20Rng) -> Mode) -> Vec<Mode> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = vec![Mode::default(); grid.len()];
    for idx in grid.active_indices() {
        let k = grid.wavevector(idx);
        if !canonical(k) {
            continue;
        }
        let m = f(k, &mut rng);
        out[idx] = m;
        out[grid.mirror(idx)] = m.map(|c| c.conj());
    }
    out
}

fn gaussian_c(rng: &mut ChaCha20Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

/// Arbitrary (not divergence-free) real vector field.
pub fn raw_random(grid: Grid, seed: u64) -> Vec<Mode> {
    symmetric_array(grid, seed, |_, rng| [gaussian_c(rng), gaussian_c(rng), gaussian_c(rng)])
}

/// `∇q` for a random real scalar `q`: `i k q̂(k)`.
pub fn raw_gradient(grid: Grid, seed: u64) -> Vec<Mode> {
    symmetric_array(grid, seed, |k, rng| {
        let q = gaussian_c(rng) * Complex64::i();
        [q * k[0] as f64, q * k[1] as f64, q * k[2] as f64]
    })
}

pub fn raw_inner(a: &[Mode], b: &[Mode]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (0..3).map(|c| (x[c] * y[c].conj()).re).sum::<f64>())
        .sum()
}

pub fn raw_norm(a: &[Mode]) -> f64 {
    raw_inner(a, a).sqrt()
}

/// Unit-norm eigenmode `e sin(k·x)` of the Stokes operator.
pub fn unit_mode(grid: Grid, k: [i64; 3], e: [f64; 3]) -> FourierField {
    let u = FourierField::single_mode(grid, k, e).expect("valid mode");
    u.scale(1.0 / u.norm())
}

pub fn random_fields(grid: Grid, seeds: std::ops::Range<u64>, decay: f64) -> Vec<FourierField> {
    seeds.map(|s| FourierField::random(grid, s, decay).unwrap()).collect()
}

/// Unit-amplitude single mode on some active `k` with `|k|² = k2`.
pub fn mode_with_k2(grid: Grid, k2: u64) -> FourierField {
    let kmax = grid.kmax();
    for a in 0..=kmax {
        for b in -kmax..=kmax {
            for c in -kmax..=kmax {
                let k = [a, b, c];
                if (a * a + b * b + c * c) as u64 != k2 || !grid.is_active_k(k) {
                    continue;
                }
                let e = if a != 0 || b != 0 { [-(b as f64), a as f64, 0.0] } else { [1.0, 0.0, 0.0] };
                return FourierField::single_mode(grid, k, e).unwrap();
            }
        }
    }
    panic!("no active mode with |k|² = {k2}");
}

/// Default config with reduced sample counts.
pub fn quick_config(samples: usize) -> nse_lab::config::RunConfig {
    let mut cfg = nse_lab::config::RunConfig::default();
    cfg.samples_constants = samples;
    cfg.samples_verify = samples;
    cfg.samples_zero_dissipative = samples;
    cfg.samples_strong_dissipative = samples;
    cfg.samples_continuity = samples.min(10);
    cfg.samples_holder = samples;
    cfg.samples_reverse_poincare = samples;
    cfg.samples_smoothing = samples;
    cfg.samples_oracle = samples.min(50);
    cfg
}
