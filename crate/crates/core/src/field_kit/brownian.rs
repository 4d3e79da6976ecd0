//! Reproducible Brownian increments.
//!
//! Generator: SplitMix64 used in counter mode. Draw `k` of stream `seed` is
//! `mix(seed + (k + 1)·GOLDEN)`, where `mix` is the SplitMix64 finalizer.
//! Uniforms take the top 53 bits. Normals come from the Box–Muller transform
//! on consecutive uniform pairs, with `log`, `cos` and `sin` taken from the
//! portable `libm` implementations so the stream is bit-identical on every
//! platform.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// SplitMix64 increment (2⁶⁴/φ).
pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
/// First SplitMix64 finalizer multiplier.
pub const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
/// Second SplitMix64 finalizer multiplier.
pub const MIX2: u64 = 0x94D0_49BB_1331_11EB;
/// 2⁻⁵³.
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// Raw 64-bit draw `k` of stream `seed`.
pub fn draw(seed: u64, k: u64) -> u64 {
    mix(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Seed of the `index`-th independent sub-stream of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(GOLDEN)))
}

/// Uniform in `(0, 1]`.
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * UNIT
}

/// Standard normal pair `k` of stream `seed`.
pub fn normal_pair(seed: u64, k: u64) -> (f64, f64) {
    let u1 = open_unit(draw(seed, 2 * k));
    let u2 = (draw(seed, 2 * k + 1) >> 11) as f64 * UNIT;
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let a = 2.0 * std::f64::consts::PI * u2;
    (r * libm::cos(a), r * libm::sin(a))
}

/// Sequential convenience wrapper over the counter generator.
#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
    spare: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            seed,
            counter: 0,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = open_unit(self.next_u64());
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let a = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(a));
        r * libm::cos(a)
    }
}

/// Increments of one Brownian path on a uniform time mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub seed: u64,
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl BrownianPath {
    /// The path with every increment zero (deterministic runs).
    pub fn zero(dt: f64, steps: usize) -> Self {
        BrownianPath {
            seed: 0,
            dt,
            increments: vec![0.0; steps],
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// `Σ (ΔW)²` over the whole path.
    pub fn quadratic_variation(&self) -> f64 {
        self.increments.iter().map(|w| w * w).sum()
    }

    /// `W(t_k)` for `k = 0..=len`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len() + 1);
        let mut acc = 0.0;
        w.push(0.0);
        for dw in &self.increments {
            acc += dw;
            w.push(acc);
        }
        w
    }
}

/// Increment `k` of the path with `seed`, distributed `N(0, dt)`.
pub fn increment(seed: u64, dt: f64, k: u64) -> f64 {
    let (z0, z1) = normal_pair(seed, k / 2);
    let z = if k.is_multiple_of(2) { z0 } else { z1 };
    z * dt.sqrt()
}

/// Samples a path on `[0, t_max]`; `dt` must divide `t_max`.
pub fn sample_brownian(seed: u64, dt: f64, t_max: f64) -> Result<BrownianPath> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(LabError::Precondition(format!(
            "dt = {dt} and t_max = {t_max} must be positive"
        )));
    }
    let ratio = t_max / dt;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps {
        return Err(LabError::Precondition(format!(
            "dt = {dt} does not divide t_max = {t_max}"
        )));
    }
    let steps = steps as usize;
    let sd = dt.sqrt();
    let mut increments = Vec::with_capacity(steps);
    for k in 0..steps.div_ceil(2) {
        let (z0, z1) = normal_pair(seed, k as u64);
        increments.push(z0 * sd);
        if increments.len() < steps {
            increments.push(z1 * sd);
        }
    }
    Ok(BrownianPath {
        seed,
        dt,
        increments,
    })
}
