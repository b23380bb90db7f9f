//! AWGN multiple-access channel: superposition of the device signals plus
//! i.i.d. Gaussian noise.

use crate::error::{Error, Result};
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub noise_power: f64,
    pub num_devices: u32,
    pub snr_db: f64,
    /// Skips noise generation entirely; avoids dividing by a zero noise
    /// power elsewhere (e.g. in the MMSE receiver scale).
    pub noiseless: bool,
}

impl ChannelConfig {
    /// Per-device SNR convention: noise power = power · 10^(−snr/10).
    pub fn from_snr_db(snr_db: f64, power: f64, num_devices: u32) -> Result<Self> {
        if !(power > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power must be positive, got {power}"
            )));
        }
        if num_devices < 1 {
            return Err(Error::InvalidParameter("need at least one device".into()));
        }
        Ok(ChannelConfig {
            noise_power: snr_to_noise_power(snr_db, power),
            num_devices,
            snr_db,
            noiseless: false,
        })
    }

    pub fn from_noise_power(noise_power: f64, power: f64, num_devices: u32) -> Result<Self> {
        if !(noise_power > 0.0) || !(power > 0.0) {
            return Err(Error::InvalidParameter(
                "noise power and signal power must be positive".into(),
            ));
        }
        if num_devices < 1 {
            return Err(Error::InvalidParameter("need at least one device".into()));
        }
        Ok(ChannelConfig {
            noise_power,
            num_devices,
            snr_db: 10.0 * (power / noise_power).log10(),
            noiseless: false,
        })
    }

    pub fn noiseless(num_devices: u32) -> Self {
        ChannelConfig {
            noise_power: 0.0,
            num_devices,
            snr_db: f64::INFINITY,
            noiseless: true,
        }
    }

    /// Received superposition Σᵢ Xᵢ + N with N per-coordinate Gaussian of
    /// variance `noise_power`.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        signals: &[Vec<f64>],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if signals.is_empty() {
            return Err(Error::EmptySignals);
        }
        let dim = signals[0].len();
        for s in signals {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
        }
        let mut out = vec![0.0; dim];
        for s in signals {
            for (acc, x) in out.iter_mut().zip(s) {
                *acc += x;
            }
        }
        if !self.noiseless {
            add_noise(rng, self.noise_power, &mut out);
        }
        Ok(out)
    }
}

/// Noise power for a per-device SNR in dB: power · 10^(−snr/10).
pub fn snr_to_noise_power(snr_db: f64, power: f64) -> f64 {
    power * 10f64.powf(-snr_db / 10.0)
}

/// Adds i.i.d. Gaussian noise of per-coordinate variance `noise_power`.
pub fn add_noise<R: Rng + ?Sized>(rng: &mut R, noise_power: f64, out: &mut [f64]) {
    let sigma = noise_power.sqrt();
    for x in out.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *x += sigma * n;
    }
}
