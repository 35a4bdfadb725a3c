//! Seeded random streams and the block-parallel mean/variance reduction.
//!
//! Samples are drawn in fixed-size blocks; block `k` of a stream always uses
//! ChaCha stream `k` of a generator seeded from `(seed, stream tag)`. Each block
//! is reduced sequentially and the block summaries are merged in index order,
//! so results do not depend on how rayon schedules the blocks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::ModelConstants;
use crate::error::{Error, Result};

pub(crate) const BLOCK_SIZE: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A seed for the `index`-th independent run under a user seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5eed)))
}

/// Identifies one independent random stream under a user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct StreamTag {
    /// What is being estimated (factor kind, joint moment, …).
    pub purpose: u64,
    /// Index of the ε point in a sweep.
    pub point: u64,
    /// λ slot for factorized estimates.
    pub slot: u64,
}

impl StreamTag {
    fn derive(&self, seed: u64) -> u64 {
        [self.purpose, self.point, self.slot].iter().fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
    }
}

fn block_rng(seed: u64, tag: StreamTag, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(tag.derive(seed));
    rng.set_stream(block);
    rng
}

/// Count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * weight,
        }
    }

    /// Standard error of the mean from the unbiased sample variance.
    pub fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        (self.m2.max(0.0) / (n - 1.0) / n).sqrt()
    }
}

/// Mean and variance of `draw` over `n` samples of the tagged stream.
pub(crate) fn reduce<F>(n: usize, seed: u64, tag: StreamTag, draw: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = n.div_ceil(BLOCK_SIZE);
    let summaries: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = block_rng(seed, tag, k as u64);
            let len = BLOCK_SIZE.min(n - k * BLOCK_SIZE);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    summaries.into_iter().fold(Moments::default(), Moments::merge)
}

/// Draw `λ = ε·(β/ε)^u` with `u ~ U[0, 1)`, i.e. log-uniform on `[ε, β]`.
///
/// Returns `(λ, ln(β/ε))`; the weight is the importance ratio of the target
/// `1/λ` against the log-uniform proposal. The negative half-line is never
/// sampled because `θ(λ)` vanishes there.
pub fn sample_lambda<R: Rng + ?Sized>(epsilon: f64, constants: &ModelConstants, rng: &mut R) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon < constants.beta) {
        return Err(Error::domain(format!("epsilon must lie in (0, beta = {}), got {epsilon}", constants.beta)));
    }
    let proposal = LogUniform::new(epsilon, constants.beta);
    Ok(proposal.draw(rng))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogUniform {
    log_lo: f64,
    pub log_width: f64,
}

impl LogUniform {
    pub fn new(lo: f64, hi: f64) -> Self {
        let log_lo = lo.ln();
        Self { log_lo, log_width: hi.ln() - log_lo }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        ((self.log_lo + u * self.log_width).exp(), self.log_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAG: StreamTag = StreamTag { purpose: 1, point: 2, slot: 3 };

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (l, r) = xs.split_at(313);
        let mut a = Moments::default();
        l.iter().for_each(|&x| a.push(x));
        let mut b = Moments::default();
        r.iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9);
    }

    #[test]
    fn reduce_is_independent_of_thread_count() {
        let draw = |r: &mut ChaCha8Rng| r.random::<f64>();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| reduce(50_000, 9, TAG, draw));
        let b = four.install(|| reduce(50_000, 9, TAG, draw));
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.m2.to_bits(), b.m2.to_bits());
    }

    #[test]
    fn distinct_tags_give_distinct_streams() {
        let draw = |r: &mut ChaCha8Rng| r.random::<f64>();
        let a = reduce(100, 9, TAG, draw);
        let b = reduce(100, 9, StreamTag { point: 3, ..TAG }, draw);
        let c = reduce(100, 10, TAG, draw);
        assert_ne!(a.mean, b.mean);
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn sample_lambda_stays_in_range() {
        let k = ModelConstants::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (l, w) = sample_lambda(1e-3, &k, &mut rng).unwrap();
            assert!((1e-3..=k.beta).contains(&l));
            assert!((w - (k.beta / 1e-3f64).ln()).abs() < 1e-12);
        }
        assert!(sample_lambda(0.0, &k, &mut rng).is_err());
        assert!(sample_lambda(k.beta, &k, &mut rng).is_err());
    }

    #[test]
    fn weight_vanishes_near_beta() {
        let k = ModelConstants::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, w) = sample_lambda(k.beta * (1.0 - 1e-12), &k, &mut rng).unwrap();
        assert!(w.abs() < 1e-11);
    }
}
