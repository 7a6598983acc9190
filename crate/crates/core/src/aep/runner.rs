use rayon::prelude::*;

use crate::rng::RandomStream;

/// Splits Monte Carlo trials over a fixed number of workers.
///
/// Worker `w` draws from stream `(seed, base + w)` and results are
/// concatenated in worker order, so output depends only on the seed, the
/// stream base and the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Runner {
    seed: u64,
    base: u64,
    workers: usize,
}

impl Runner {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self { seed, base: 0, workers: workers.max(1) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Independent runner for a sub-experiment identified by `key`.
    pub fn child(&self, key: u64) -> Self {
        Self { base: splitmix64(self.base ^ splitmix64(key)), ..*self }
    }

    pub fn stream(&self, worker: usize) -> RandomStream {
        RandomStream::new(self.seed, self.base.wrapping_add(worker as u64))
    }

    /// Run `trials` calls of `f`, in parallel across workers.
    pub fn run<T, F>(&self, trials: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut RandomStream) -> T + Sync,
    {
        let per = trials / self.workers;
        let extra = trials % self.workers;
        let chunks: Vec<Vec<T>> = (0..self.workers)
            .into_par_iter()
            .map(|w| {
                let mut stream = self.stream(w);
                let count = per + usize::from(w < extra);
                (0..count).map(|_| f(&mut stream)).collect()
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
