//! Periodic grid on the torus `[0, 2π)³`.
//!
//! Coefficients are stored in FFT order: index `i` along an axis carries the
//! wavenumber `i` for `i < N/2` and `i - N` otherwise. The active spectrum is
//! the dealiased cube `3|k_i| < N` with the zero mode removed; every field in
//! the crate is supported there, which makes quadratic products exact under
//! the pseudospectral transform.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(LabError::InvalidArgument(format!(
                "grid size must be an even integer >= 4, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored modes, `N³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    fn axis_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.n;
        [
            self.wavenumber(idx / (n * n)),
            self.wavenumber((idx / n) % n),
            self.wavenumber(idx % n),
        ]
    }

    /// Storage index of `k`, if `k` is representable on the grid.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k.iter().any(|&c| c < -half || c >= half) {
            return None;
        }
        Some(self.index(
            self.axis_index(k[0]),
            self.axis_index(k[1]),
            self.axis_index(k[2]),
        ))
    }

    /// Index of `-k`. The Nyquist plane maps onto itself.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let m = |i: usize| (n - i) % n;
        self.index(m(idx / (n * n)), m((idx / n) % n), m(idx % n))
    }

    /// Largest retained wavenumber per axis under the 2/3 rule.
    pub fn kmax(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }

    pub fn is_active_k(&self, k: [i64; 3]) -> bool {
        let kmax = self.kmax();
        k != [0, 0, 0] && k.iter().all(|c| c.abs() <= kmax)
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.is_active_k(self.wavevector(idx))
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_active(i)).collect()
    }

    /// Smallest active `|k|²` (the first Stokes eigenvalue).
    pub fn lambda1(&self) -> f64 {
        1.0
    }

    /// Largest active `|k|²`.
    pub fn k2_max(&self) -> f64 {
        let k = self.kmax() as f64;
        3.0 * k * k
    }

    /// Distinct active `|k|²` values in increasing order.
    pub fn active_k2_values(&self) -> Vec<u64> {
        let kmax = self.kmax();
        let mut values = Vec::new();
        for a in 0..=kmax {
            for b in a..=kmax {
                for c in b..=kmax {
                    let s = (a * a + b * b + c * c) as u64;
                    if s > 0 {
                        values.push(s);
                    }
                }
            }
        }
        values.sort_unstable();
        values.dedup();
        values
    }
}

pub fn k2(k: [i64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}
