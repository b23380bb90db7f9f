//! Unbiased stochastic scalar quantizer applied entry-wise to gradients.
//!
//! A gradient entry in [g_min, g_max] is mapped affinely onto [0, q−1] and
//! randomly rounded to one of the two neighboring levels with probability
//! proportional to proximity, which preserves the expectation. The matching
//! dequantizer recovers a sum of K quantized entries.

use crate::error::{Error, Result};
use rand::{Rng, RngExt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    levels: u32,
    g_min: f64,
    g_max: f64,
}

impl QuantizerConfig {
    pub fn new(levels: u32, g_min: f64, g_max: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 quantization levels, got {levels}"
            )));
        }
        if !(g_max > g_min) || !g_min.is_finite() || !g_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid quantization interval [{g_min}, {g_max}]"
            )));
        }
        Ok(QuantizerConfig {
            levels,
            g_min,
            g_max,
        })
    }

    /// Symmetric interval [−bound, bound].
    pub fn symmetric(levels: u32, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "symmetric bound must be positive, got {bound}"
            )));
        }
        Self::new(levels, -bound, bound)
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn g_min(&self) -> f64 {
        self.g_min
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    /// Stochastically rounds one gradient entry to a level index in [0, q−1].
    ///
    /// Entries outside [g_min, g_max] are clipped first. The rounding is
    /// deterministic when the affine image is already integral, so the
    /// expectation over the rng equals the affine image of the clipped entry.
    pub fn quantize<R: Rng + ?Sized>(&self, g: f64, rng: &mut R) -> u32 {
        let clipped = g.clamp(self.g_min, self.g_max);
        let x = (self.levels - 1) as f64 * (clipped - self.g_min) / (self.g_max - self.g_min);
        let lo = x.floor();
        let frac = x - lo;
        let rounded = if frac == 0.0 {
            lo
        } else if rng.random::<f64>() < frac {
            lo + 1.0
        } else {
            lo
        };
        (rounded as u32).min(self.levels - 1)
    }

    /// Inverse map for a sum of `devices` quantized entries:
    /// K·g_min + (g_max − g_min)·x/(q−1).
    pub fn dequantize_sum(&self, x: i64, devices: u32) -> Result<f64> {
        if devices < 1 {
            return Err(Error::InvalidParameter("need at least one device".into()));
        }
        let max = devices as i64 * (self.levels - 1) as i64;
        if x < 0 || x > max {
            return Err(Error::OutOfRange {
                value: x,
                min: 0,
                max,
            });
        }
        Ok(devices as f64 * self.g_min
            + (self.g_max - self.g_min) * x as f64 / (self.levels - 1) as f64)
    }
}
