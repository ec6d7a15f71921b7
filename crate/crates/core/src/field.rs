//! Divergence-free, mean-zero, real vector fields in Fourier representation.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_same_grid, LabError, Result};
use crate::grid::{k2, Grid};

pub type Mode = [Complex64; 3];

const ZERO_MODE: Mode = [Complex64::new(0.0, 0.0); 3];

/// Tolerance used when validating externally supplied coefficients.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Truncated velocity field `u(x) = Σ_k û(k) e^{ik·x}` on the active spectrum.
///
/// The `ℍ` inner product is `⟨u, v⟩ = Re Σ_k û(k)·conj(v̂(k))`, i.e. the mean
/// over the torus of `u·v`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    grid: Grid,
    coeffs: Vec<Mode>,
}

fn dot(a: &Mode, b: &Mode) -> f64 {
    (0..3).map(|c| (a[c] * b[c].conj()).re).sum()
}

fn k_dot(k: [i64; 3], m: &Mode) -> Complex64 {
    m[0] * k[0] as f64 + m[1] * k[1] as f64 + m[2] * k[2] as f64
}

impl FourierField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO_MODE; grid.len()],
        }
    }

    /// Accepts coefficients only if they already satisfy the field invariants
    /// (active support, conjugate symmetry, divergence-free) to
    /// [`VALIDATION_TOL`] relative to the norm.
    pub fn from_coefficients(grid: Grid, coeffs: Vec<Mode>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "expected {} modes, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let field = Self { grid, coeffs };
        let scale = field.norm().max(f64::MIN_POSITIVE);
        let outside = (0..grid.len())
            .filter(|&i| !grid.is_active(i))
            .map(|i| field.coeffs[i].iter().map(|c| c.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if outside > VALIDATION_TOL * scale {
            return Err(LabError::InvalidArgument(
                "coefficients outside the dealiased active spectrum".into(),
            ));
        }
        if field.conjugate_symmetry_residual() > VALIDATION_TOL {
            return Err(LabError::InvalidArgument(
                "coefficients are not conjugate-symmetric".into(),
            ));
        }
        if field.divergence_residual() > VALIDATION_TOL {
            return Err(LabError::InvalidArgument(
                "coefficients are not divergence-free".into(),
            ));
        }
        Ok(field)
    }

    /// `u(x) = e sin(k·x)` with `e ⊥ k`.
    pub fn single_mode(grid: Grid, k: [i64; 3], amplitude: [f64; 3]) -> Result<Self> {
        if !grid.is_active_k(k) {
            return Err(LabError::InvalidArgument(format!(
                "wavevector {k:?} is not in the active spectrum of N={}",
                grid.n()
            )));
        }
        let e_dot_k: f64 = (0..3).map(|c| amplitude[c] * k[c] as f64).sum();
        let e_norm = amplitude.iter().map(|a| a * a).sum::<f64>().sqrt();
        if e_dot_k.abs() > 1e-12 * e_norm * k2(k).sqrt() {
            return Err(LabError::InvalidArgument(
                "amplitude must be orthogonal to the wavevector".into(),
            ));
        }
        let mut field = Self::zeros(grid);
        let plus = grid.index_of(k).expect("active modes are representable");
        let minus = grid.mirror(plus);
        // sin θ = (e^{iθ} - e^{-iθ}) / 2i
        for c in 0..3 {
            field.coeffs[plus][c] = Complex64::new(0.0, -0.5 * amplitude[c]);
            field.coeffs[minus][c] = Complex64::new(0.0, 0.5 * amplitude[c]);
        }
        Ok(field)
    }

    /// Random field with Gaussian coefficients of envelope
    /// `(1 + |k|²)^{-decay/2}`, projected off `k` mode by mode.
    pub fn random(grid: Grid, seed: u64, spectrum_decay: f64) -> Result<Self> {
        if !(spectrum_decay >= 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "spectrum_decay must be >= 0, got {spectrum_decay}"
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut field = Self::zeros(grid);
        for idx in grid.active_indices() {
            let k = grid.wavevector(idx);
            if !is_canonical(k) {
                continue;
            }
            let envelope = (1.0 + k2(k)).powf(-0.5 * spectrum_decay);
            let mut mode = ZERO_MODE;
            for c in mode.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *c = Complex64::new(re, im) * envelope;
            }
            let mode = project_mode(k, mode);
            let mirror = grid.mirror(idx);
            field.coeffs[idx] = mode;
            field.coeffs[mirror] = mode.map(|c| c.conj());
        }
        Ok(field)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Mode] {
        &self.coeffs
    }

    pub fn mode(&self, k: [i64; 3]) -> Option<Mode> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| dot(a, b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.weighted_norm(|_| 1.0)
    }

    /// `sqrt(Σ_k weight(|k|²) |û(k)|²)`.
    pub fn weighted_norm(&self, weight: impl Fn(f64) -> f64) -> f64 {
        self.weighted_inner(self, weight).max(0.0).sqrt()
    }

    pub fn weighted_inner(&self, other: &Self, weight: impl Fn(f64) -> f64) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let grid = self.grid;
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .filter(|(_, (a, _))| **a != ZERO_MODE)
            .map(|(i, (a, b))| weight(k2(grid.wavevector(i))) * dot(a, b))
            .sum()
    }

    /// `sqrt(Σ_k (1 + |k|²)^order |û(k)|²)`.
    pub fn sobolev_norm(&self, order: u32) -> Result<f64> {
        if order > 2 {
            return Err(LabError::InvalidArgument(format!(
                "Sobolev order must be 0, 1 or 2, got {order}"
            )));
        }
        Ok(self.weighted_norm(|q| (1.0 + q).powi(order as i32)))
    }

    /// `max_k |k·û(k)| / ‖u‖`, zero for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let norm = self.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let worst = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, m)| k_dot(self.grid.wavevector(i), m).norm())
            .fold(0.0, f64::max);
        worst / norm
    }

    /// `max_k |û(-k) - conj(û(k))| / ‖u‖`, zero for the zero field.
    pub fn conjugate_symmetry_residual(&self) -> f64 {
        let norm = self.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let worst = (0..self.grid.len())
            .map(|i| {
                let j = self.grid.mirror(i);
                (0..3)
                    .map(|c| (self.coeffs[j][c] - self.coeffs[i][c].conj()).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        worst / norm
    }

    /// Multiplies every mode by `symbol(|k|²)`.
    pub fn map_modes(&self, symbol: impl Fn(f64) -> f64) -> Self {
        let grid = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if *m == ZERO_MODE {
                    ZERO_MODE
                } else {
                    let s = symbol(k2(grid.wavevector(i)));
                    m.map(|c| c * s)
                }
            })
            .collect();
        Self { grid, coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|m| m.map(|c| c * s)).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        ensure_same_grid(self.grid, other.grid)?;
        Ok(self.zip_with(other, |a, b| a + b * s))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| [f(a[0], b[0]), f(a[1], b[1]), f(a[2], b[2])])
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|m| *m == ZERO_MODE)
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    /// Panics on grid mismatch; use [`FourierField::axpy`] for a checked sum.
    fn add(self, rhs: Self) -> FourierField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: Self) -> FourierField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<&FourierField> for f64 {
    type Output = FourierField;
    fn mul(self, rhs: &FourierField) -> FourierField {
        rhs.scale(self)
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(-1.0)
    }
}

/// Representative of `{k, -k}`: the lexicographically positive member.
fn is_canonical(k: [i64; 3]) -> bool {
    k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)))
}

fn project_mode(k: [i64; 3], m: Mode) -> Mode {
    let q = k2(k);
    if q == 0.0 {
        return ZERO_MODE;
    }
    let s = k_dot(k, &m) / q;
    [
        m[0] - s * k[0] as f64,
        m[1] - s * k[1] as f64,
        m[2] - s * k[2] as f64,
    ]
}

/// Leray projection of an arbitrary coefficient array: removes the
/// longitudinal part `k(k·û)/|k|²` mode by mode and truncates to the active
/// spectrum (which also zeroes the mean).
pub fn leray_project(grid: Grid, raw: &[Mode]) -> Result<FourierField> {
    if raw.len() != grid.len() {
        return Err(LabError::InvalidArgument(format!(
            "expected {} modes, got {}",
            grid.len(),
            raw.len()
        )));
    }
    let coeffs = raw
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let k = grid.wavevector(i);
            if grid.is_active_k(k) {
                project_mode(k, *m)
            } else {
                ZERO_MODE
            }
        })
        .collect();
    Ok(FourierField { grid, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn random_is_deterministic_and_valid() {
        let g = grid(8);
        let a = FourierField::random(g, 7, 1.0).unwrap();
        let b = FourierField::random(g, 7, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.divergence_residual() < 1e-12);
        assert!(a.conjugate_symmetry_residual() == 0.0);
        assert_eq!(a.mode([0, 0, 0]), Some(ZERO_MODE));
        let c = FourierField::random(g, 8, 1.0).unwrap();
        assert!((a.norm() - c.norm()).abs() > 0.0);
    }

    #[test]
    fn random_rejects_negative_decay() {
        assert!(FourierField::random(grid(4), 0, -1.0).is_err());
    }

    #[test]
    fn single_mode_norms() {
        let g = grid(8);
        // unit ℍ norm needs |e|²/2 = 1
        let u = FourierField::single_mode(g, [1, 0, 0], [0.0, 2f64.sqrt(), 0.0]).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-15);
        assert!((u.sobolev_norm(1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(FourierField::single_mode(g, [1, 0, 0], [1.0, 0.0, 0.0]).is_err());
        assert!(FourierField::single_mode(g, [3, 0, 0], [0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn sobolev_rejects_order_three() {
        assert!(FourierField::zeros(grid(4)).sobolev_norm(3).is_err());
    }

    #[test]
    fn projection_kills_gradients() {
        let g = grid(8);
        let q = FourierField::random(g, 3, 0.0).unwrap();
        // use the x component as a scalar potential, symmetric by construction
        let raw: Vec<Mode> = (0..g.len())
            .map(|i| {
                let k = g.wavevector(i);
                let qh = q.coeffs()[i][0];
                [0, 1, 2].map(|c| Complex64::new(0.0, k[c] as f64) * qh)
            })
            .collect();
        let p = leray_project(g, &raw).unwrap();
        let raw_norm: f64 = raw.iter().map(|m| dot(m, m)).sum::<f64>().sqrt();
        assert!(p.norm() <= 1e-14 * raw_norm);
    }

    #[test]
    fn from_coefficients_validates() {
        let g = grid(4);
        let u = FourierField::random(g, 1, 0.0).unwrap();
        assert!(FourierField::from_coefficients(g, u.coeffs().to_vec()).is_ok());
        let mut bad = u.coeffs().to_vec();
        let idx = g.index_of([1, 0, 0]).unwrap();
        bad[idx][0] += Complex64::new(1.0, 0.0);
        assert!(FourierField::from_coefficients(g, bad).is_err());
        assert!(FourierField::from_coefficients(g, vec![ZERO_MODE; 3]).is_err());
    }
}
