//! Closed-form and numerically evaluated error probabilities: the exact
//! (truncated) per-dimension error of the balanced-numeral code, its
//! zero-truncation upper bound, and the ensemble upper bounds for the nested
//! lattice construction.

use crate::balanced::BalancedConfig;
use crate::error::{Error, Result};
use crate::lattice::{ball_normalized_second_moment, LatticeStats};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_cdf(dof: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(dof as f64 / 2.0, x / 2.0)
}

/// Digit words whose digit-weighted sum is zero; adding one to a transmitted
/// word leaves the decoded integer unchanged, so these are exactly the noise
/// outcomes that still decode correctly.
#[derive(Debug, Clone)]
pub struct ZeroSumDigitSet {
    pub base: u32,
    pub digits: u32,
    pub max_abs: i64,
    pub members: Vec<Vec<i64>>,
}

impl ZeroSumDigitSet {
    /// Enumerates all words with coordinates in [−max_abs, max_abs] and zero
    /// digit-weighted sum.
    pub fn enumerate(base: u32, digits: u32, max_abs: i64) -> Self {
        assert!(max_abs >= 0);
        let b = base as i64;
        let mut members = Vec::new();
        let mut word = vec![-max_abs; digits as usize];
        'outer: loop {
            let value: i64 = word.iter().rev().fold(0, |acc, &d| acc * b + d);
            if value == 0 {
                members.push(word.clone());
            }
            let mut k = word.len();
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                if word[k] < max_abs {
                    word[k] += 1;
                    for entry in word.iter_mut().skip(k + 1) {
                        *entry = -max_abs;
                    }
                    break;
                }
            }
        }
        ZeroSumDigitSet {
            base,
            digits,
            max_abs,
            members,
        }
    }
}

/// Probability that a N(0, noise_power) sample decodes to digit `m` of the
/// balanced code: the noise scaled by (β−1)/√P_X must land in
/// [2m−1, 2m+1].
fn digit_probability(cfg: &BalancedConfig, noise_power: f64, m: i64) -> f64 {
    let a = cfg.power().sqrt() / (cfg.base() as f64 - 1.0);
    let sigma = noise_power.sqrt();
    normal_cdf((2 * m + 1) as f64 * a / sigma) - normal_cdf((2 * m - 1) as f64 * a / sigma)
}

/// Exact per-dimension error probability of the balanced-numeral code with
/// the zero-sum set truncated at `max_abs`, extended to `grad_dims` gradient
/// dimensions.
///
/// The result is nonincreasing in `max_abs` (each additional word only adds
/// success mass) and overestimates the true error for any finite truncation.
pub fn balanced_exact_error(
    cfg: &BalancedConfig,
    noise_power: f64,
    grad_dims: u32,
    max_abs: i64,
) -> f64 {
    if noise_power <= 0.0 {
        return 0.0;
    }
    let set = ZeroSumDigitSet::enumerate(cfg.base(), cfg.digits(), max_abs);
    let mut success = 0.0;
    for word in &set.members {
        let mut term = 1.0;
        for &d in word {
            term *= digit_probability(cfg, noise_power, d);
        }
        success += term;
    }
    let success = success.clamp(0.0, 1.0);
    1.0 - success.powi(grad_dims as i32)
}

/// ⌈q^{1/α} − 1⌉ with protection against floating-point roots of perfect
/// powers landing on either side of the integer.
fn ceil_root_minus_one(levels: u32, digits: u32) -> f64 {
    let t = (levels as f64).powf(1.0 / digits as f64);
    let r = t.round();
    let t = if (t - r).abs() < 1e-9 { r } else { t };
    (t - 1.0).ceil()
}

/// Upper bound on the balanced-code error over `grad_dims` dimensions,
/// keeping only the zero word of the zero-sum set:
/// 1 − (1 − 2F(−√P_X/⌈q^{1/α}−1⌉))^{k·α}.
pub fn balanced_error_upper_bound(
    levels: u32,
    digits: u32,
    power: f64,
    noise_power: f64,
    grad_dims: u32,
) -> f64 {
    if noise_power <= 0.0 {
        return 0.0;
    }
    let denom = ceil_root_minus_one(levels, digits);
    let tail = normal_cdf(-power.sqrt() / (denom * noise_power.sqrt()));
    1.0 - (1.0 - 2.0 * tail).powi((grad_dims * digits) as i32)
}

/// Per-device, per-dimension exponent of the Gaussian envelope that bounds
/// the density of the combined dither self-noise:
/// ln(r_cov/r_effec) + ½·ln(2πe·G_n*) + 1/n.
pub fn gaussian_envelope_exponent(stats: &LatticeStats, dim: usize) -> Result<f64> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let ratio = stats.covering_radius / stats.effective_radius;
    if !(ratio > 0.0) {
        return Err(Error::InvalidParameter("invalid lattice radii".into()));
    }
    let g_ball = ball_normalized_second_moment(dim);
    Ok(ratio.ln()
        + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * g_ball).ln()
        + 1.0 / dim as f64)
}

/// Ensemble upper bound on the nested-code error probability at receiver
/// scale `scale`:
/// min(e^{K·ε·n}·(1 − F_{χ²(n)}(r_pack²/(p²·P_eq))), 1) with
/// P_eq = α²·P_N + K·(1−α)²·(r_cov/r_effec)²·P_X.
pub fn nested_error_upper_bound(
    stats: &LatticeStats,
    dim: usize,
    prime: u64,
    devices: u32,
    scale: f64,
    power: f64,
    noise_power: f64,
) -> Result<f64> {
    let eps = gaussian_envelope_exponent(stats, dim)?;
    let ratio = stats.covering_radius / stats.effective_radius;
    let p_eq = scale * scale * noise_power
        + devices as f64 * (1.0 - scale) * (1.0 - scale) * ratio * ratio * power;
    if !(p_eq > 0.0) {
        return Ok(0.0);
    }
    let x = stats.packing_radius.powi(2) / ((prime * prime) as f64 * p_eq);
    let tail = 1.0 - chi_square_cdf(dim as u32, x);
    let bound = (devices as f64 * eps * dim as f64).exp() * tail;
    Ok(bound.clamp(0.0, 1.0))
}

/// Upper bound for the unit receiver scale, which has no dither self-noise
/// and drops the envelope factor: 1 − F_{χ²(n)}(r_pack²/(p²·P_N)).
pub fn nested_error_upper_bound_unit(
    stats: &LatticeStats,
    dim: usize,
    prime: u64,
    noise_power: f64,
) -> f64 {
    if noise_power <= 0.0 {
        return 0.0;
    }
    let x = stats.packing_radius.powi(2) / ((prime * prime) as f64 * noise_power);
    (1.0 - chi_square_cdf(dim as u32, x)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::snr_to_noise_power;
    use crate::lattice::LatticeStats;
    use crate::stream::derive_rng;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg525() -> BalancedConfig {
        BalancedConfig::new(5, 2, 25, 1.0).unwrap()
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(normal_cdf(0.25), 0.5987063256829237, epsilon = 1e-13);
        assert_relative_eq!(normal_cdf(0.5), 0.6914624612740131, epsilon = 1e-13);
        assert_relative_eq!(normal_cdf(1.0), 0.8413447460685429, epsilon = 1e-13);
        assert_relative_eq!(normal_cdf(1.96), 0.9750021048517796, epsilon = 1e-13);
        assert_relative_eq!(normal_cdf(2.0), 0.9772498680518208, epsilon = 1e-13);
        assert_relative_eq!(normal_cdf(-1.5), 0.06680720126885807, epsilon = 1e-13);
        for x in [0.1, 0.7, 1.3, 2.9] {
            assert_relative_eq!(normal_cdf(-x), 1.0 - normal_cdf(x), epsilon = 1e-13);
        }
    }

    #[test]
    fn chi_square_matches_closed_form_at_two_dof() {
        for x in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0] {
            assert_relative_eq!(
                chi_square_cdf(2, x),
                1.0 - (-x / 2.0).exp(),
                epsilon = 1e-12
            );
        }
        assert_eq!(chi_square_cdf(2, 0.0), 0.0);
        assert_eq!(chi_square_cdf(4, -1.0), 0.0);
    }

    #[test]
    fn zero_sum_set_structure() {
        let set = ZeroSumDigitSet::enumerate(5, 2, 4);
        assert_eq!(set.members, vec![vec![0, 0]]);
        let set = ZeroSumDigitSet::enumerate(5, 2, 5);
        assert_eq!(set.members.len(), 3);
        assert!(set.members.contains(&vec![0, 0]));
        assert!(set.members.contains(&vec![5, -1]));
        assert!(set.members.contains(&vec![-5, 1]));
        // Closure under negation, any parameters.
        let set = ZeroSumDigitSet::enumerate(3, 3, 4);
        for m in &set.members {
            let neg: Vec<i64> = m.iter().map(|d| -d).collect();
            assert!(set.members.contains(&neg));
        }
        assert!(set.members.contains(&vec![0, 0, 0]));
    }

    #[test]
    fn balanced_exact_error_frozen_values() {
        let cfg = cfg525();
        // Zero-word truncation at 2 dB and 0 dB, one gradient dimension.
        let pe2 = balanced_exact_error(&cfg, snr_to_noise_power(2.0, 1.0), 1, 0);
        assert_relative_eq!(pe2, 0.938974023453935, epsilon = 1e-12);
        let pe0 = balanced_exact_error(&cfg, snr_to_noise_power(0.0, 1.0), 1, 0);
        assert_relative_eq!(pe0, 0.961028245080706, epsilon = 1e-12);
        // Vanishing noise.
        assert!(balanced_exact_error(&cfg, 1e-12, 1, 3) < 1e-12);
        assert_eq!(balanced_exact_error(&cfg, 0.0, 1, 3), 0.0);
    }

    #[test]
    fn truncation_is_monotone_and_levels_off() {
        let cfg = cfg525();
        let pn = snr_to_noise_power(2.0, 1.0);
        let values: Vec<f64> = (0..=8)
            .map(|d| balanced_exact_error(&cfg, pn, 1, d))
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        // No zero-sum words appear between magnitudes 0 and 4 at base 5.
        assert!((values[3] - values[4]).abs() < 1e-6);
        // The first nonzero words enter at magnitude 5.
        assert!(values[5] < values[4]);
    }

    #[test]
    fn zero_truncation_equals_upper_bound_at_one_dimension() {
        let cfg = cfg525();
        for snr in [0.0, 2.0, 4.0, 6.0] {
            let pn = snr_to_noise_power(snr, 1.0);
            let exact0 = balanced_exact_error(&cfg, pn, 1, 0);
            let upper = balanced_error_upper_bound(25, 2, 1.0, pn, 1);
            assert_relative_eq!(exact0, upper, epsilon = 1e-12);
        }
    }

    #[test]
    fn upper_bound_examples() {
        // ⌈√25 − 1⌉ = 4.
        let pn = snr_to_noise_power(2.0, 1.0);
        let upper = balanced_error_upper_bound(25, 2, 1.0, pn, 1);
        let direct = 1.0 - (1.0 - 2.0 * normal_cdf(-0.25 / pn.sqrt())).powi(2);
        assert_relative_eq!(upper, direct, epsilon = 1e-14);
        assert_eq!(balanced_error_upper_bound(25, 2, 1.0, 0.0, 1), 0.0);
        // Non-perfect-power root still ceils correctly: ⌈√24 − 1⌉ = 4.
        let a = balanced_error_upper_bound(24, 2, 1.0, pn, 1);
        assert_relative_eq!(a, direct, epsilon = 1e-14);
    }

    #[test]
    fn exact_error_matches_monte_carlo() {
        // Converged truncation against an empirical decode of pure noise.
        let cfg = cfg525();
        let pn = snr_to_noise_power(2.0, 1.0);
        let sigma = pn.sqrt();
        let exact = balanced_exact_error(&cfg, pn, 1, 6);
        let trials = 200_000u64;
        let mut rng = derive_rng(61, &[1]);
        let mut errors = 0u64;
        for _ in 0..trials {
            let n0: f64 = StandardNormal.sample(&mut rng);
            let n1: f64 = StandardNormal.sample(&mut rng);
            if cfg.decode_sum(&[sigma * n0, sigma * n1]) != 0 {
                errors += 1;
            }
        }
        let empirical = errors as f64 / trials as f64;
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(
            (empirical - exact).abs() < 4.0 * se,
            "empirical {empirical} exact {exact} se {se}"
        );
    }

    #[test]
    fn envelope_exponent_frozen_value() {
        let stats = LatticeStats::hexagonal(1.0).unwrap();
        let eps = gaussian_envelope_exponent(&stats, 2).unwrap();
        assert_relative_eq!(eps, 0.7484057264236178, epsilon = 1e-12);
        // Scale invariance.
        let stats_big = LatticeStats::hexagonal(3.7947).unwrap();
        assert_relative_eq!(
            gaussian_envelope_exponent(&stats_big, 2).unwrap(),
            eps,
            epsilon = 1e-12
        );
        assert!(eps > 0.0);
        assert!(gaussian_envelope_exponent(&LatticeStats::cubic(2, 1.0).unwrap(), 2).unwrap() > 0.0);
    }

    #[test]
    fn envelope_exponent_degenerate_radii_limit() {
        // With covering = effective radius only the ball term and 1/n remain.
        let stats = LatticeStats {
            packing_radius: 1.0,
            covering_radius: 2.0,
            effective_radius: 2.0,
            cell_volume: 1.0,
            second_moment: 1.0,
            normalized_second_moment: 1.0,
        };
        let eps = gaussian_envelope_exponent(&stats, 2).unwrap();
        let expected = 0.5
            * (2.0 * std::f64::consts::PI * std::f64::consts::E * ball_normalized_second_moment(2))
                .ln()
            + 0.5;
        assert_relative_eq!(eps, expected, epsilon = 1e-14);
    }

    #[test]
    fn nested_bound_unit_scale_closed_form() {
        let stats = LatticeStats::hexagonal(3.794733192202055).unwrap();
        let pn = snr_to_noise_power(2.0, 1.0);
        for p in [29u64, 127] {
            let bound = nested_error_upper_bound_unit(&stats, 2, p, pn);
            let x = stats.packing_radius.powi(2) / ((p * p) as f64 * pn);
            assert_relative_eq!(bound, (-x / 2.0).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn nested_bound_monotone_in_prime_and_devices() {
        let stats = LatticeStats::hexagonal(3.794733192202055).unwrap();
        let pn = 0.001; // low enough noise that the bound is not clipped at 1
        let mut prev = 0.0;
        for p in [2u64, 3, 5, 11, 29] {
            let b = nested_error_upper_bound_unit(&stats, 2, p, pn);
            assert!(b >= prev);
            prev = b;
        }
        let mut prev = 0.0;
        for k in 1..=6u32 {
            let scale = crate::nested::mmse_scale(k, 1.0, pn);
            let b = nested_error_upper_bound(&stats, 2, 3, k, scale, 1.0, pn).unwrap();
            assert!(b >= prev - 1e-15, "k={k} bound {b} prev {prev}");
            prev = b;
        }
    }

    #[test]
    fn nested_bound_is_clipped_to_unit_interval() {
        let stats = LatticeStats::hexagonal(3.794733192202055).unwrap();
        let scale = crate::nested::mmse_scale(5, 1.0, 0.63);
        let b = nested_error_upper_bound(&stats, 2, 127, 5, scale, 1.0, 0.63).unwrap();
        assert!((0.0..=1.0).contains(&b));
        // Unit-scale substitution removes the envelope factor.
        let generic_at_unit = nested_error_upper_bound(&stats, 2, 127, 5, 1.0, 1.0, 0.63).unwrap();
        let dedicated = nested_error_upper_bound_unit(&stats, 2, 127, 0.63);
        assert!(generic_at_unit >= dedicated);
    }
}
