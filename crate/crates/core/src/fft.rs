//! Three-dimensional complex transforms built from `rustfft` line transforms.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Arc<Fft3>>> = RefCell::new(HashMap::new());
}

impl Fft3 {
    pub(crate) fn for_size(n: usize) -> Arc<Fft3> {
        PLANS.with(|plans| {
            plans
                .borrow_mut()
                .entry(n)
                .or_insert_with(|| {
                    let mut planner = FftPlanner::new();
                    Arc::new(Fft3 {
                        n,
                        forward: planner.plan_fft_forward(n),
                        inverse: planner.plan_fft_inverse(n),
                    })
                })
                .clone()
        })
    }

    /// Spectral coefficients to grid values: `u(x) = Σ û(k) e^{ik·x}`.
    pub(crate) fn to_physical(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    /// Grid values to spectral coefficients, normalized by `1/N³`.
    pub(crate) fn to_spectral(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // z lines are contiguous
        plan.process_with_scratch(data, &mut scratch);

        let mut line = vec![Complex64::default(); n];
        // y lines: stride n
        for ix in 0..n {
            for iz in 0..n {
                let base = ix * n * n + iz;
                for (iy, v) in line.iter_mut().enumerate() {
                    *v = data[base + iy * n];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (iy, v) in line.iter().enumerate() {
                    data[base + iy * n] = *v;
                }
            }
        }
        // x lines: stride n²
        for iy in 0..n {
            for iz in 0..n {
                let base = iy * n + iz;
                for (ix, v) in line.iter_mut().enumerate() {
                    *v = data[base + ix * n * n];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (ix, v) in line.iter().enumerate() {
                    data[base + ix * n * n] = *v;
                }
            }
        }
    }
}
