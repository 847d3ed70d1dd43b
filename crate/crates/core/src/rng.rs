//! Deterministic random streams and order-independent ensemble execution.
//!
//! Every path of a Monte Carlo ensemble draws from its own ChaCha8 stream
//! keyed by `(master_seed, path_index)`. Within a path, independent
//! sources (one per coordinate and purpose) are separate ChaCha streams of
//! the same key, so adding coordinates never perturbs the draws of the
//! existing ones. Results are therefore independent of how paths are
//! scheduled across worker threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// What a substream is used for. Part of the ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Jump records of one coordinate.
    Jumps = 1,
    /// Gaussian (diffusion plus small-jump substitute) draws of one coordinate.
    Gaussian = 2,
    /// Full-process increments sampled directly (no decomposition).
    Increment = 3,
    /// Random probes drawn by the assumption checkers.
    Probe = 4,
    /// Continuations of a path prefix (bundle averaging).
    Continuation = 5,
    /// Brownian-bridge draws that split a grid cell at a refinement node.
    Bridge = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub path_index: u64,
}

/// A seeded random source with recorded provenance.
#[derive(Debug, Clone)]
pub struct RandomStream {
    provenance: Provenance,
    rng: ChaCha8Rng,
}

fn key(master_seed: u64, path_index: u64) -> [u8; 32] {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&path_index.to_le_bytes());
    // domain separation tag, keeps the key away from all-zero seeds
    seed[16..24].copy_from_slice(b"cylevy\x00\x01");
    seed
}

impl RandomStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            provenance: Provenance {
                master_seed,
                path_index,
            },
            rng: ChaCha8Rng::from_seed(key(master_seed, path_index)),
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Independent stream for `(coordinate, purpose)` under the same key.
    pub fn substream(&self, coordinate: usize, purpose: Purpose) -> RandomStream {
        let mut rng = ChaCha8Rng::from_seed(key(
            self.provenance.master_seed,
            self.provenance.path_index,
        ));
        rng.set_stream(((coordinate as u64 + 1) << 8) | purpose as u64);
        RandomStream {
            provenance: self.provenance,
            rng,
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Run `f(path_index)` for every path and return results in index order.
///
/// `workers == 0` uses the global rayon pool; otherwise a dedicated pool of
/// that size is built for the call.
pub fn run_ensemble<T, F>(n_paths: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let body = || {
        (0..n_paths as u64)
            .into_par_iter()
            .map(&f)
            .collect::<Vec<_>>()
    };
    if workers == 0 {
        return body();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(body),
        Err(_) => (0..n_paths as u64).map(&f).collect(),
    }
}

/// Fixed-shape pairwise summation. The tree depends only on `values.len()`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Sample mean and standard error of the mean, both via [`pairwise_sum`].
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
