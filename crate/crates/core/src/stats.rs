//! Streaming sample moments with a deterministic parallel reduction.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{stream_rng, StreamRng};
use crate::scalar::Scalar;

/// Number of samples drawn from one random stream in [`sample_moments`].
pub const BLOCK_SIZE: usize = 4096;

/// Welford accumulator for count, mean and centered second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    pub count: usize,
    pub mean: T,
    m2: T,
}

impl<T: Scalar> Default for Moments<T> {
    fn default() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }
}

impl<T: Scalar> Moments<T> {
    pub fn push(&mut self, value: T) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean = self.mean + delta / T::from_count(self.count);
        self.m2 = self.m2 + delta * (value - self.mean);
    }

    /// Chan et al. pairwise combination. A constant stream stays exactly constant.
    pub fn merge(self, other: Self) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let count = self.count + other.count;
        let n = T::from_count(count);
        let na = T::from_count(self.count);
        let nb = T::from_count(other.count);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            self.m2 / T::from_count(self.count - 1)
        }
    }

    pub fn std_error(&self) -> T {
        if self.count == 0 {
            T::zero()
        } else {
            (self.variance() / T::from_count(self.count)).sqrt()
        }
    }
}

impl<T: Scalar> FromIterator<T> for Moments<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Self::default();
        for v in iter {
            m.push(v);
        }
        m
    }
}

/// Draws `n` samples via `sample(rng, global_index)` and returns their moments.
///
/// Samples are grouped into blocks of [`BLOCK_SIZE`]; block `b` uses stream `b`
/// of `seed`. Blocks run in parallel and are merged in block order.
pub fn sample_moments<T, F>(n: usize, seed: u64, sample: F) -> Result<Moments<T>>
where
    T: Scalar,
    F: Fn(&mut StreamRng, usize) -> Result<T> + Sync,
{
    let blocks = n.div_ceil(BLOCK_SIZE);
    let partial: Vec<Result<Moments<T>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let start = b * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(n);
            let mut m = Moments::default();
            for i in start..end {
                m.push(sample(&mut rng, i)?);
            }
            Ok(m)
        })
        .collect();
    partial
        .into_iter()
        .try_fold(Moments::default(), |acc, m| Ok(acc.merge(m?)))
}
