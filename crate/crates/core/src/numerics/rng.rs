use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Named consumers of randomness. Each gets its own stream derived from the
/// master seed so that, e.g., changing the batch size does not perturb the
/// initial embeddings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamPurpose {
    Init,
    Split,
    Negatives,
    Gumbel,
    Dropout,
}

impl StreamPurpose {
    pub fn label(self) -> &'static str {
        match self {
            StreamPurpose::Init => "init",
            StreamPurpose::Split => "split",
            StreamPurpose::Negatives => "negatives",
            StreamPurpose::Gumbel => "gumbel",
            StreamPurpose::Dropout => "dropout",
        }
    }
}

/// Deterministic random stream seeded by a 64-bit integer.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for `purpose`, derived from `master_seed`.
    pub fn for_purpose(master_seed: u64, purpose: StreamPurpose) -> Self {
        Self::for_label(master_seed, purpose.label())
    }

    pub fn for_label(master_seed: u64, label: &str) -> Self {
        Self::seed_from_u64(splitmix64(master_seed ^ fnv1a64(label.as_bytes())))
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
