//! Seed-deterministic Brownian and Poisson increments.
//!
//! Path `i` draws from a ChaCha8 stream keyed by the run seed with stream
//! number `i`, so every path can be regenerated on its own and the order
//! in which paths are produced does not matter. Each step consumes two
//! standard normals followed by one uniform, always in that order.

use alloc::vec::Vec;

use rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, StandardNormal};

use crate::exec::Executor;

/// Increments of `W¹`, `W²` and `N` over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepNoise {
    pub dw1: f64,
    pub dw2: f64,
    pub dn: u32,
}

impl StepNoise {
    /// `dW̄ = ρ dW¹ + √(1-ρ²) dW²`
    pub fn dw_bar(&self, rho: f64) -> f64 {
        rho * self.dw1 + libm::sqrt(1.0 - rho * rho) * self.dw2
    }

    /// `dM = dN - λΔt`
    pub fn dm(&self, lambda: f64, dt: f64) -> f64 {
        self.dn as f64 - lambda * dt
    }
}

/// What is needed to draw the increments of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub seed: u64,
    pub n_steps: usize,
    pub dt: f64,
    pub lambda: f64,
}

/// The random stream of path `path`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Streams increments of one path step by step without storing them.
#[derive(Debug, Clone)]
pub struct PathNoiseIter {
    rng: ChaCha8Rng,
    sqrt_dt: f64,
    jump_mean: f64,
    remaining: usize,
}

impl PathNoiseIter {
    pub fn new(spec: &NoiseSpec, path: u64) -> Self {
        Self {
            rng: path_rng(spec.seed, path),
            sqrt_dt: libm::sqrt(spec.dt),
            jump_mean: spec.lambda * spec.dt,
            remaining: spec.n_steps,
        }
    }
}

impl Iterator for PathNoiseIter {
    type Item = StepNoise;

    fn next(&mut self) -> Option<StepNoise> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let z1: f64 = StandardNormal.sample(&mut self.rng);
        let z2: f64 = StandardNormal.sample(&mut self.rng);
        let u: f64 = Open01.sample(&mut self.rng);
        Some(StepNoise { dw1: self.sqrt_dt * z1, dw2: self.sqrt_dt * z2, dn: poisson_inverse(u, self.jump_mean) })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for PathNoiseIter {}

/// All increments of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNoise {
    pub steps: Vec<StepNoise>,
}

impl PathNoise {
    pub fn generate(spec: &NoiseSpec, path: u64) -> Self {
        Self { steps: PathNoiseIter::new(spec, path).collect() }
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn jumps(&self) -> u64 {
        self.steps.iter().map(|s| s.dn as u64).sum()
    }

    /// Sums consecutive blocks of `factor` steps: the same path seen on a
    /// grid `factor` times coarser. Panics unless `factor` divides the
    /// number of steps.
    pub fn aggregate(&self, factor: usize) -> Self {
        assert!(factor > 0 && self.steps.len().is_multiple_of(factor), "factor must divide the step count");
        let steps = self
            .steps
            .chunks(factor)
            .map(|block| {
                block.iter().fold(StepNoise { dw1: 0.0, dw2: 0.0, dn: 0 }, |acc, s| StepNoise {
                    dw1: acc.dw1 + s.dw1,
                    dw2: acc.dw2 + s.dw2,
                    dn: acc.dn + s.dn,
                })
            })
            .collect();
        Self { steps }
    }
}

/// Increments for a whole ensemble, stored path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrements {
    pub spec: NoiseSpec,
    pub paths: Vec<PathNoise>,
}

impl NoiseIncrements {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }
}

pub fn generate_noise<E: Executor>(spec: &NoiseSpec, n_paths: usize, exec: &E) -> NoiseIncrements {
    let paths = exec.map(n_paths, |i| PathNoise::generate(spec, i as u64));
    NoiseIncrements { spec: *spec, paths }
}

const INVERSION_CHUNK: f64 = 10.0;
const MAX_COUNT: u32 = u32::MAX - 1;

/// Smallest `k` with `P(N ≤ k) ≥ u` for `N ~ Poisson(mean)`.
///
/// Small means search upward from zero. For `mean ≥ 10` the search starts at
/// the mode, whose probability comes from `lgamma`, and walks toward `u`.
pub fn poisson_inverse(u: f64, mean: f64) -> u32 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < INVERSION_CHUNK {
        let mut p = libm::exp(-mean);
        let mut cdf = p;
        let mut k = 0u32;
        while u > cdf && k < MAX_COUNT {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                break;
            }
            cdf = next;
        }
        return k;
    }
    let mode = libm::floor(mean);
    let p_mode = libm::exp(-mean + mode * libm::log(mean) - libm::lgamma(mode + 1.0));
    let mut cdf_mode = p_mode;
    let mut p = p_mode;
    let mut j = mode;
    while j > 0.0 {
        p *= j / mean;
        if p < cdf_mode * 1e-18 {
            break;
        }
        cdf_mode += p;
        j -= 1.0;
    }
    let mut k = mode as u32;
    let mut cdf = cdf_mode;
    let mut p = p_mode;
    if u <= cdf {
        while k > 0 && u <= cdf - p {
            cdf -= p;
            p *= k as f64 / mean;
            k -= 1;
        }
    } else {
        while u > cdf && k < MAX_COUNT {
            k += 1;
            p *= mean / k as f64;
            let next = cdf + p;
            if next == cdf {
                break;
            }
            cdf = next;
        }
    }
    k
}
