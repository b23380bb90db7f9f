//! Balanced-numeral lattice code: signed-digit integer representation, the
//! scaled cubic transmit lattice, and the linear sum decoder.
//!
//! An integer is written with `digits` signed digits in an odd base, each
//! digit drawn from [−(β−1)/2, (β−1)/2]. Digits map one-to-one onto channel
//! uses, scaled so the per-use amplitude never exceeds √power. Because the
//! encoder and the per-coordinate lattice decoder are both linear, a sum of
//! codewords decodes to the sum of the represented integers, and the error
//! event depends only on the noise realization.

use crate::error::{Error, Result};
use crate::lattice::Lattice;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalancedConfig {
    base: u32,
    digits: u32,
    levels: u32,
    power: f64,
}

impl BalancedConfig {
    /// `base` must be odd and at least 3, `levels` odd with
    /// base^digits >= levels, and `power` positive.
    pub fn new(base: u32, digits: u32, levels: u32, power: f64) -> Result<Self> {
        if base < 3 || base % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "base must be an odd integer >= 3, got {base}"
            )));
        }
        if digits < 1 {
            return Err(Error::InvalidParameter("need at least one digit".into()));
        }
        if levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 levels, got {levels}"
            )));
        }
        if levels % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "levels must be odd so the recentering shift is integral, got {levels}"
            )));
        }
        let capacity = (base as i64)
            .checked_pow(digits)
            .ok_or_else(|| Error::InvalidParameter("base^digits overflows".into()))?;
        if capacity < levels as i64 {
            return Err(Error::InvalidParameter(format!(
                "base^digits = {capacity} cannot represent {levels} levels"
            )));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power must be positive, got {power}"
            )));
        }
        Ok(BalancedConfig {
            base,
            digits,
            levels,
            power,
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Largest digit magnitude, (β−1)/2.
    pub fn digit_bound(&self) -> i64 {
        (self.base as i64 - 1) / 2
    }

    /// Per-digit amplitude: √power / ((β−1)/2).
    pub fn scale(&self) -> f64 {
        self.power.sqrt() / self.digit_bound() as f64
    }

    /// Largest representable integer, (β^α − 1)/2.
    pub fn max_value(&self) -> i64 {
        ((self.base as i64).pow(self.digits) - 1) / 2
    }

    /// The scaled cubic transmit lattice, one dimension per digit.
    pub fn lattice(&self) -> Lattice {
        Lattice::cubic(self.digits as usize, self.scale())
            .expect("validated config yields a valid cubic lattice")
    }

    /// Balanced signed-digit expansion of `z`, least significant digit first.
    pub fn to_digits(&self, z: i64) -> Result<Vec<i64>> {
        let bound = self.max_value();
        if z < -bound || z > bound {
            return Err(Error::OutOfRange {
                value: z,
                min: -bound,
                max: bound,
            });
        }
        let base = self.base as i64;
        let half = self.digit_bound();
        let mut rest = z;
        let mut out = Vec::with_capacity(self.digits as usize);
        for _ in 0..self.digits {
            let mut r = rest.rem_euclid(base);
            if r > half {
                r -= base;
            }
            out.push(r);
            rest = (rest - r) / base;
        }
        debug_assert_eq!(rest, 0);
        Ok(out)
    }

    /// Digit-weighted sum Σ d_ℓ β^ℓ. Digits outside the alphabet are allowed;
    /// sums of several codewords produce them.
    pub fn from_digits(&self, digits: &[i64]) -> i64 {
        let base = self.base as i64;
        digits
            .iter()
            .rev()
            .fold(0i64, |acc, &d| acc * base + d)
    }

    /// Shifts a quantizer level from [0, q−1] onto the symmetric range
    /// [−(q−1)/2, (q−1)/2].
    pub fn recenter(&self, level: u32) -> Result<i64> {
        if level >= self.levels {
            return Err(Error::OutOfRange {
                value: level as i64,
                min: 0,
                max: self.levels as i64 - 1,
            });
        }
        Ok(level as i64 - (self.levels as i64 - 1) / 2)
    }

    /// Decoder-side inverse of [`recenter`](Self::recenter) for a sum over
    /// `devices` senders.
    pub fn restore_sum(&self, decoded: i64, devices: u32) -> i64 {
        decoded + devices as i64 * (self.levels as i64 - 1) / 2
    }

    /// Transmit vector for a digit word: coordinate ℓ carries digit d_ℓ times
    /// the per-digit amplitude.
    pub fn encode(&self, digits: &[i64]) -> Result<Vec<f64>> {
        if digits.len() != self.digits as usize {
            return Err(Error::DimensionMismatch {
                expected: self.digits as usize,
                got: digits.len(),
            });
        }
        let half = self.digit_bound();
        for &d in digits {
            if d < -half || d > half {
                return Err(Error::DigitOutOfAlphabet {
                    digit: d,
                    base: self.base,
                });
            }
        }
        let s = self.scale();
        Ok(digits.iter().map(|&d| s * d as f64).collect())
    }

    /// Convenience: encode the balanced expansion of an integer.
    pub fn encode_value(&self, z: i64) -> Result<Vec<f64>> {
        self.encode(&self.to_digits(z)?)
    }

    /// Per-coordinate nearest-multiple decode of a (noisy) superposition.
    /// The digits are deliberately not clamped to the alphabet.
    pub fn decode_digits(&self, received: &[f64]) -> Vec<i64> {
        let s = self.scale();
        received.iter().map(|&y| (y / s).round() as i64).collect()
    }

    /// Digit-weighted integer decoded from a received vector.
    ///
    /// `received` must have one coordinate per digit.
    pub fn decode_sum(&self, received: &[f64]) -> i64 {
        assert_eq!(received.len(), self.digits as usize);
        let s = self.scale();
        let base = self.base as i64;
        let mut acc = 0i64;
        let mut weight = 1i64;
        for &y in received {
            acc += weight * (y / s).round() as i64;
            weight *= base;
        }
        acc
    }
}
