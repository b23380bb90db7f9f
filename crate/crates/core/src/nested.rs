//! Nested lattice codes built from a linear code over a prime field, with
//! dithered transmission and modulo-lattice reception.
//!
//! The fine lattice is the shaping lattice refined by the lifted codewords
//! of a length-n, dimension-1 linear code over F_p: every message w maps to
//! the coset representative of B·(G·w mod p)/p inside the fundamental
//! Voronoi region. Addition of codewords is homomorphic with addition in
//! F_p, so the receiver recovers the message sum modulo p; choosing p larger
//! than the maximum possible integer sum makes the recovery exact.

use crate::error::{Error, Result};
use crate::lattice::{Lattice, MAX_DIM};
use rand::{Rng, RngExt};

/// Primality by trial division; the field sizes here are small.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Checks that `p` is prime and large enough to hold every possible sum of
/// `devices` quantized values without wraparound: p > devices·(levels−1).
pub fn validate_prime(p: u64, devices: u32, levels: u32) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime { p });
    }
    let required = devices as u64 * (levels as u64 - 1);
    if p <= required {
        return Err(Error::PrimeTooSmall {
            p,
            devices,
            levels,
            required,
        });
    }
    Ok(())
}

/// Smallest prime exceeding devices·(levels−1).
pub fn smallest_valid_prime(devices: u32, levels: u32) -> u64 {
    let mut candidate = devices as u64 * (levels as u64 - 1) + 1;
    if candidate < 2 {
        candidate = 2;
    }
    while !is_prime(candidate) {
        candidate += 1;
    }
    candidate
}

/// Receiver-side scaling of the observation before dither removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    /// K·P_X / (P_N + K·P_X), minimizing the effective noise.
    Mmse,
    /// Unit scale; removes the dither self-noise entirely.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    pub mmse_scale: f64,
    pub num_devices: u32,
    pub noise_power: f64,
    pub power: f64,
}

impl ReceiverConfig {
    pub fn new(mode: ScaleMode, num_devices: u32, power: f64, noise_power: f64) -> Self {
        let mmse_scale = match mode {
            ScaleMode::Mmse => mmse_scale(num_devices, power, noise_power),
            ScaleMode::Unit => 1.0,
        };
        ReceiverConfig {
            mmse_scale,
            num_devices,
            noise_power,
            power,
        }
    }

    pub fn mmse(num_devices: u32, power: f64, noise_power: f64) -> Self {
        Self::new(ScaleMode::Mmse, num_devices, power, noise_power)
    }

    pub fn unit(num_devices: u32, power: f64, noise_power: f64) -> Self {
        Self::new(ScaleMode::Unit, num_devices, power, noise_power)
    }
}

/// K·P_X / (P_N + K·P_X).
pub fn mmse_scale(devices: u32, power: f64, noise_power: f64) -> f64 {
    let kp = devices as f64 * power;
    kp / (noise_power + kp)
}

/// Asymptotic rate bound in bits per channel use for decoding the sum:
/// ½·log₂⁺(P_X / (α²·P_N + K·(1−α)²·P_X)).
pub fn achievable_rate(power: f64, noise_power: f64, devices: u32, scale: f64) -> f64 {
    let denom = scale * scale * noise_power
        + devices as f64 * (1.0 - scale) * (1.0 - scale) * power;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    (0.5 * (power / denom).log2()).max(0.0)
}

/// Rate bound at the MMSE scale, ½·log₂⁺(P_X/P_N + 1/K).
pub fn achievable_rate_mmse(power: f64, noise_power: f64, devices: u32) -> f64 {
    achievable_rate(
        power,
        noise_power,
        devices,
        mmse_scale(devices, power, noise_power),
    )
}

#[derive(Debug, Clone)]
pub struct NestedCode {
    prime: u64,
    generator: Vec<u64>,
    shaping: Lattice,
    /// Coset representative of every message, flattened p × n.
    reps: Vec<f64>,
}

impl NestedCode {
    /// Builds the code from a shaping lattice, a field size, and a generator
    /// column over F_p (entries reduced mod p, not all zero).
    pub fn build(shaping: Lattice, prime: u64, generator: &[u64]) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime { p: prime });
        }
        let n = shaping.dim();
        if generator.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: generator.len(),
            });
        }
        let generator: Vec<u64> = generator.iter().map(|&g| g % prime).collect();
        if generator.iter().all(|&g| g == 0) {
            return Err(Error::InvalidParameter(
                "generator is zero over the field".into(),
            ));
        }
        let mut reps = vec![0.0; prime as usize * n];
        let mut coords = [0.0; MAX_DIM];
        let mut point = [0.0; MAX_DIM];
        let basis = shaping.generator().to_vec();
        for w in 0..prime {
            for (i, &g) in generator.iter().enumerate() {
                coords[i] = ((g as u128 * w as u128) % prime as u128) as f64 / prime as f64;
            }
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += basis[i * n + j] * coords[j];
                }
                point[i] = acc;
            }
            let offset = w as usize * n;
            shaping.reduce_into(&point[..n], &mut reps[offset..offset + n]);
        }
        Ok(NestedCode {
            prime,
            generator,
            shaping,
            reps,
        })
    }

    /// Uniformly random nonzero generator column over F_p.
    pub fn random_generator<R: Rng + ?Sized>(prime: u64, dim: usize, rng: &mut R) -> Vec<u64> {
        loop {
            let g: Vec<u64> = (0..dim).map(|_| rng.random_range(0..prime)).collect();
            if g.iter().any(|&x| x != 0) {
                return g;
            }
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    pub fn shaping(&self) -> &Lattice {
        &self.shaping
    }

    pub fn dim(&self) -> usize {
        self.shaping.dim()
    }

    /// Rate in bits per channel use, log₂(p)/n.
    pub fn rate(&self) -> f64 {
        (self.prime as f64).log2() / self.dim() as f64
    }

    /// Coset representative of message `w` inside the Voronoi region.
    pub fn coset_representative(&self, message: u64) -> Result<&[f64]> {
        if message >= self.prime {
            return Err(Error::UnknownMessage {
                message,
                prime: self.prime,
            });
        }
        let n = self.dim();
        let offset = message as usize * n;
        Ok(&self.reps[offset..offset + n])
    }

    /// Transmit vector [c_w − dither] mod Λ; lies in the Voronoi region, and
    /// over random dithers its average per-dimension power equals the
    /// shaping lattice's second moment.
    pub fn encode(&self, message: u64, dither: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if dither.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dither.len(),
            });
        }
        self.coset_representative(message)?;
        let mut out = vec![0.0; n];
        self.encode_into(message, dither, &mut out);
        Ok(out)
    }

    /// Allocation-free variant of [`encode`](Self::encode); `message` must be
    /// a valid field element.
    pub fn encode_into(&self, message: u64, dither: &[f64], out: &mut [f64]) {
        let n = self.dim();
        assert!(message < self.prime);
        assert_eq!(dither.len(), n);
        let offset = message as usize * n;
        let rep = &self.reps[offset..offset + n];
        let mut shifted = [0.0; MAX_DIM];
        for i in 0..n {
            shifted[i] = rep[i] - dither[i];
        }
        self.shaping.reduce_into(&shifted[..n], out);
    }

    /// Recovers the message sum modulo p from a received superposition.
    ///
    /// The observation is scaled by the receiver's MMSE factor, the dithers
    /// are added back, and the result is reduced modulo the shaping lattice;
    /// the coset of the nearest fine-lattice point is the decoded sum. When
    /// [`validate_prime`] holds for the number of devices, a correct decode
    /// is the exact integer sum.
    ///
    /// `dithers` must hold one dither per transmitting device.
    pub fn decode_sum(&self, rcfg: &ReceiverConfig, received: &[f64], dithers: &[Vec<f64>]) -> u64 {
        let n = self.dim();
        assert_eq!(received.len(), n);
        debug_assert_eq!(dithers.len(), rcfg.num_devices as usize);
        let mut combined = [0.0; MAX_DIM];
        for i in 0..n {
            combined[i] = rcfg.mmse_scale * received[i];
        }
        for d in dithers {
            assert_eq!(d.len(), n);
            for i in 0..n {
                combined[i] += d[i];
            }
        }
        self.decode_combined(&combined[..n])
    }

    /// Decode step after scaling and dither addition: nearest fine-lattice
    /// point search via exact per-coset reduction modulo the shaping lattice.
    ///
    /// Equivalent to enumerating the fine points in the block of shaping
    /// cells around the reduced observation; ties resolve to the smallest
    /// message index.
    pub fn decode_combined(&self, combined: &[f64]) -> u64 {
        let n = self.dim();
        assert_eq!(combined.len(), n);
        let mut reduced = [0.0; MAX_DIM];
        self.shaping.reduce_into(combined, &mut reduced[..n]);
        let mut diff = [0.0; MAX_DIM];
        let mut best = f64::INFINITY;
        let mut best_w = 0u64;
        for w in 0..self.prime {
            let offset = w as usize * n;
            let rep = &self.reps[offset..offset + n];
            for i in 0..n {
                diff[i] = reduced[i] - rep[i];
            }
            let dist = self.shaping.distance_squared(&diff[..n]);
            if dist < best {
                best = dist;
                best_w = w;
            }
        }
        best_w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::hexagonal_for_power;
    use crate::stream::derive_rng;
    use approx::assert_relative_eq;

    #[test]
    fn prime_validation_examples() {
        assert_eq!(smallest_valid_prime(5, 25), 127);
        assert!(validate_prime(2, 1, 2).is_ok());
        assert!(matches!(
            validate_prime(47, 2, 25),
            Err(Error::PrimeTooSmall { p: 47, required: 48, .. })
        ));
        assert!(matches!(validate_prime(49, 2, 25), Err(Error::NotPrime { p: 49 })));
        assert!(validate_prime(127, 5, 25).is_ok());
    }

    #[test]
    fn coset_representative_examples() {
        let shaping = Lattice::cubic(2, 1.0).unwrap();
        let code = NestedCode::build(shaping, 5, &[1, 2]).unwrap();
        assert_eq!(code.coset_representative(0).unwrap(), &[0.0, 0.0]);
        let r1 = code.coset_representative(1).unwrap();
        assert_relative_eq!(r1[0], 0.2, epsilon = 1e-12);
        assert_relative_eq!(r1[1], 0.4, epsilon = 1e-12);
        assert!(code.coset_representative(5).is_err());
    }

    #[test]
    fn representatives_are_distinct_for_nonzero_generators() {
        let mut rng = derive_rng(51, &[1]);
        for &p in &[5u64, 29, 127, 131] {
            let (shaping, _) = hexagonal_for_power(1.0).unwrap();
            let g = NestedCode::random_generator(p, 2, &mut rng);
            let code = NestedCode::build(shaping, p, &g).unwrap();
            for a in 0..p {
                let ra = code.coset_representative(a).unwrap().to_vec();
                for b in (a + 1)..p {
                    let rb = code.coset_representative(b).unwrap();
                    let dist: f64 = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
                    assert!(dist > 1e-18, "p={p} cosets {a} and {b} collide");
                }
            }
        }
    }

    #[test]
    fn zero_generator_rejected() {
        let shaping = Lattice::cubic(2, 1.0).unwrap();
        assert!(NestedCode::build(shaping.clone(), 5, &[0, 5]).is_err());
        assert!(NestedCode::build(shaping, 4, &[1, 2]).is_err());
    }

    #[test]
    fn coarse_points_are_fine_points() {
        let (shaping, _) = hexagonal_for_power(1.0).unwrap();
        let code = NestedCode::build(shaping.clone(), 7, &[3, 5]).unwrap();
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                let p = shaping.point(&[a, b]).unwrap();
                // A coarse point reduces to the zero coset at distance zero.
                assert_eq!(code.decode_combined(&p), 0);
                let r = shaping.reduce(&p).unwrap();
                assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn encode_zero_with_zero_dither_is_zero() {
        let (shaping, _) = hexagonal_for_power(1.0).unwrap();
        let code = NestedCode::build(shaping, 29, &[4, 9]).unwrap();
        assert_eq!(code.encode(0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(code.encode(29, &[0.0, 0.0]).is_err());
        assert!(code.encode(1, &[0.0]).is_err());
    }

    #[test]
    fn encoded_signal_lies_in_voronoi_and_meets_power() {
        let (shaping, stats) = hexagonal_for_power(1.0).unwrap();
        let code = NestedCode::build(shaping.clone(), 29, &[7, 11]).unwrap();
        let mut rng = derive_rng(52, &[2]);
        let samples = 100_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let u = shaping.sample_dither(&mut rng);
            let x = code.encode(3, &u).unwrap();
            acc += x[0] * x[0] + x[1] * x[1];
        }
        let per_dim = acc / (2.0 * samples as f64);
        // Dithering makes the transmit point uniform over the cell.
        assert_relative_eq!(per_dim, stats.second_moment, max_relative = 0.02);
        let x = code.encode(5, &shaping.sample_dither(&mut rng)).unwrap();
        assert_eq!(shaping.nearest_point(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn coset_addition_is_homomorphic() {
        let (shaping, _) = hexagonal_for_power(1.0).unwrap();
        let code = NestedCode::build(shaping.clone(), 7, &[2, 3]).unwrap();
        for a in 0..7u64 {
            for b in 0..7u64 {
                let ra = code.coset_representative(a).unwrap().to_vec();
                let rb = code.coset_representative(b).unwrap().to_vec();
                let sum = [ra[0] + rb[0], ra[1] + rb[1]];
                let decoded = code.decode_combined(&sum);
                assert_eq!(decoded, (a + b) % 7, "cosets {a}+{b}");
            }
        }
    }

    #[test]
    fn noiseless_exhaustive_sum_small_field() {
        let shaping = Lattice::cubic(2, 1.0).unwrap();
        let code = NestedCode::build(shaping.clone(), 5, &[1, 2]).unwrap();
        let rcfg = ReceiverConfig::unit(2, 1.0, 1.0);
        let mut rng = derive_rng(53, &[3]);
        for wa in 0..5u64 {
            for wb in 0..5u64 {
                let ua = shaping.sample_dither(&mut rng);
                let ub = shaping.sample_dither(&mut rng);
                let xa = code.encode(wa, &ua).unwrap();
                let xb = code.encode(wb, &ub).unwrap();
                let y: Vec<f64> = xa.iter().zip(&xb).map(|(a, b)| a + b).collect();
                let decoded = code.decode_sum(&rcfg, &y, &[ua, ub]);
                assert_eq!(decoded, (wa + wb) % 5, "messages {wa}+{wb}");
            }
        }
    }

    #[test]
    fn noiseless_random_sums_large_field() {
        let (shaping, _) = hexagonal_for_power(1.0).unwrap();
        let mut rng = derive_rng(54, &[4]);
        let g = NestedCode::random_generator(127, 2, &mut rng);
        let code = NestedCode::build(shaping.clone(), 127, &g).unwrap();
        let rcfg = ReceiverConfig::unit(5, 1.0, 1.0);
        for _ in 0..2_000 {
            let mut y = vec![0.0; 2];
            let mut dithers = Vec::with_capacity(5);
            let mut truth = 0u64;
            for _ in 0..5 {
                let w = rng.random_range(0..25u64);
                truth += w;
                let u = shaping.sample_dither(&mut rng);
                let x = code.encode(w, &u).unwrap();
                y[0] += x[0];
                y[1] += x[1];
                dithers.push(u);
            }
            assert_eq!(code.decode_sum(&rcfg, &y, &dithers), truth);
        }
    }

    #[test]
    fn rate_formula_examples() {
        assert_relative_eq!(achievable_rate_mmse(1.0, 1.0, 1), 0.5, epsilon = 1e-12);
        // MMSE rate equals ½ log2(P/P_N + 1/K) for any K.
        for k in [1u32, 2, 5, 50] {
            let direct = 0.5 * (1.0 / 0.25 + 1.0 / k as f64).log2();
            assert_relative_eq!(achievable_rate_mmse(1.0, 0.25, k), direct, epsilon = 1e-12);
        }
        // Unit scale gives the point-to-point expression for all K.
        for k in [1u32, 3, 10] {
            assert_relative_eq!(
                achievable_rate(4.0, 1.0, k, 1.0),
                0.5 * 4f64.log2(),
                epsilon = 1e-12
            );
        }
        // Clamped at zero.
        assert_eq!(achievable_rate(1.0, 100.0, 1, 1.0), 0.0);
    }

    #[test]
    fn mmse_rate_monotone_and_exceeds_unit_rate() {
        let power = 2.0;
        let noise = 1.0; // power/noise >= 1
        let mut prev = f64::INFINITY;
        for k in 1..=10u32 {
            let r = achievable_rate_mmse(power, noise, k);
            assert!(r < prev);
            prev = r;
            let gap = r - achievable_rate(power, noise, k, 1.0);
            let expected = 0.5 * (1.0 + noise / (k as f64 * power)).log2();
            assert_relative_eq!(gap, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn code_rate_is_field_size_over_dimension() {
        let (shaping, _) = hexagonal_for_power(1.0).unwrap();
        let code = NestedCode::build(shaping, 127, &[1, 5]).unwrap();
        assert_relative_eq!(code.rate(), (127f64).log2() / 2.0, epsilon = 1e-15);
    }
}
