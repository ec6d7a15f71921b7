//! Named sub-seeds derived from one master seed.
//!
//! Sample `i` of stream `s` under master seed `m` uses
//! `splitmix64(splitmix64(m ^ (s · φ)) + i)` where `φ = 0x9E3779B97F4A7C15`.
//! Fields inside a sample use [`sub_seed`] on the sample seed.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u64)]
pub enum Stream {
    TrilinearEstimate = 1,
    TrilinearVerify = 2,
    RenormedVerify = 3,
    ZeroDissipative = 4,
    StrongDissipative = 5,
    Continuity = 6,
    Holder = 7,
    ReversePoincare = 8,
    Forcing = 9,
    InitialData = 10,
    OracleCheck = 11,
    Smoothing = 12,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ (stream as u64).wrapping_mul(GOLDEN)).wrapping_add(index))
}

pub fn sub_seed(seed: u64, j: u64) -> u64 {
    splitmix64(seed.wrapping_add(GOLDEN.wrapping_mul(j + 1)))
}

/// A reproducible block of sample seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub stream: Stream,
    pub count: usize,
}

impl SeedPlan {
    pub fn new(master: u64, stream: Stream, count: usize) -> Self {
        Self {
            master,
            stream,
            count,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.count as u64)
            .map(|i| derive(self.master, self.stream, i))
            .collect()
    }
}
