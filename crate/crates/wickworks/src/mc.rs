//! Seeded Monte Carlo plumbing shared by the samplers.
//!
//! Batch `b` of a run with master seed `s` draws from ChaCha8 seeded with `s`
//! on stream `b`, so results do not depend on how batches are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const BATCH: usize = 4096;

pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Running mean and variance (Welford); merged in batch order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, o: &Stats) -> Stats {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let mean = self.mean + d * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        Stats { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Run `samples` draws of `f` split into fixed batches, in parallel, reducing in batch order.
pub fn run_batched<F>(samples: usize, seed: u64, f: F) -> Stats
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let nb = samples.div_ceil(BATCH);
    let parts: Vec<Stats> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b as u64);
            let len = BATCH.min(samples - b * BATCH);
            let mut s = Stats::default();
            for _ in 0..len {
                s.push(f(&mut rng));
            }
            s
        })
        .collect();
    parts.iter().fold(Stats::default(), |a, b| a.merge(b))
}

/// Like [`run_batched`] for vector-valued draws; returns one `Stats` per component.
pub fn run_batched_vec<F>(samples: usize, seed: u64, dim: usize, f: F) -> Vec<Stats>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let nb = samples.div_ceil(BATCH);
    let parts: Vec<Vec<Stats>> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b as u64);
            let len = BATCH.min(samples - b * BATCH);
            let mut s = vec![Stats::default(); dim];
            let mut buf = vec![0.0; dim];
            for _ in 0..len {
                f(&mut rng, &mut buf);
                for (si, &v) in s.iter_mut().zip(&buf) {
                    si.push(v);
                }
            }
            s
        })
        .collect();
    parts.iter().fold(vec![Stats::default(); dim], |acc, p| {
        acc.iter().zip(p).map(|(a, b)| a.merge(b)).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Stats::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Stats::default();
        let mut b = Stats::default();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert!((m.mean - all.mean).abs() < 1e-14);
        assert!((m.variance() - all.variance()).abs() < 1e-13);
    }

    #[test]
    fn deterministic_under_seed() {
        let f = |r: &mut ChaCha8Rng| r.random::<f64>();
        let a = run_batched(10_000, 7, f);
        let b = run_batched(10_000, 7, f);
        assert_eq!(a, b);
        assert!((a.mean - 0.5).abs() < 4.0 * a.stderr());
    }
}
