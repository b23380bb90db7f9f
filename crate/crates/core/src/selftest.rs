//! Brute-force oracle checks runnable from the CLI.
//!
//! Each check validates a codec path against an independent exhaustive or
//! closed-form computation. They are fast enough to run routinely.

use crate::balanced::BalancedConfig;
use crate::bounds::{balanced_error_upper_bound, balanced_exact_error, chi_square_cdf, normal_cdf};
use crate::channel::snr_to_noise_power;
use crate::error::Error;
use crate::lattice::Lattice;
use crate::nested::{
    achievable_rate, achievable_rate_mmse, smallest_valid_prime, validate_prime, NestedCode,
    ReceiverConfig,
};
use crate::quantizer::QuantizerConfig;
use crate::stream::derive_rng;
use rand::RngExt;

type Check = (&'static str, fn() -> Result<(), String>);

fn balanced_digit_round_trip() -> Result<(), String> {
    for base in [3u32, 5, 7] {
        for digits in [1u32, 2, 3] {
            let cfg = BalancedConfig::new(base, digits, 3, 1.0)
                .map_err(|e| e.to_string())?;
            let bound = cfg.max_value();
            for z in -bound..=bound {
                let word = cfg.to_digits(z).map_err(|e| e.to_string())?;
                if word.iter().any(|d| d.abs() > cfg.digit_bound()) {
                    return Err(format!("digit out of alphabet for z={z}"));
                }
                if cfg.from_digits(&word) != z {
                    return Err(format!("round trip failed at base {base}, z={z}"));
                }
            }
        }
    }
    Ok(())
}

fn balanced_noiseless_sums_exhaustive() -> Result<(), String> {
    // Every 3-device tuple of 2-digit base-3 words decodes to the exact sum.
    let cfg = BalancedConfig::new(3, 2, 3, 1.0).map_err(|e| e.to_string())?;
    let bound = cfg.max_value();
    let values: Vec<i64> = (-bound..=bound).collect();
    for &a in &values {
        for &b in &values {
            for &c in &values {
                let mut y = vec![0.0; 2];
                for z in [a, b, c] {
                    let x = cfg.encode_value(z).map_err(|e| e.to_string())?;
                    for (acc, xi) in y.iter_mut().zip(x) {
                        *acc += xi;
                    }
                }
                if cfg.decode_sum(&y) != a + b + c {
                    return Err(format!("sum decode failed for ({a},{b},{c})"));
                }
            }
        }
    }
    Ok(())
}

fn nested_exhaustive_small_field() -> Result<(), String> {
    let shaping = Lattice::cubic(2, 1.0).map_err(|e| e.to_string())?;
    let code = NestedCode::build(shaping.clone(), 5, &[1, 2]).map_err(|e| e.to_string())?;
    let rcfg = ReceiverConfig::unit(2, 1.0, 1.0);
    let mut rng = derive_rng(99, &[1]);
    for wa in 0..5u64 {
        for wb in 0..5u64 {
            let ua = shaping.sample_dither(&mut rng);
            let ub = shaping.sample_dither(&mut rng);
            let xa = code.encode(wa, &ua).map_err(|e| e.to_string())?;
            let xb = code.encode(wb, &ub).map_err(|e| e.to_string())?;
            let y: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| p + q).collect();
            let decoded = code.decode_sum(&rcfg, &y, &[ua, ub]);
            if decoded != (wa + wb) % 5 {
                return Err(format!("nested decode failed for ({wa},{wb})"));
            }
        }
    }
    Ok(())
}

fn prime_conditions() -> Result<(), String> {
    if smallest_valid_prime(5, 25) != 127 {
        return Err("smallest prime above 120 should be 127".into());
    }
    match validate_prime(47, 2, 25) {
        Err(Error::PrimeTooSmall { required: 48, .. }) => {}
        other => return Err(format!("expected PrimeTooSmall, got {other:?}")),
    }
    match validate_prime(49, 2, 25) {
        Err(Error::NotPrime { p: 49 }) => {}
        other => return Err(format!("expected NotPrime, got {other:?}")),
    }
    validate_prime(127, 5, 25).map_err(|e| e.to_string())
}

fn lattice_nearest_brute_force() -> Result<(), String> {
    let lat = Lattice::hexagonal(1.0).map_err(|e| e.to_string())?;
    let mut rng = derive_rng(99, &[2]);
    for _ in 0..200 {
        let v = [rng.random::<f64>() * 6.0 - 3.0, rng.random::<f64>() * 6.0 - 3.0];
        let fast = lat.distance_squared(&v);
        let mut best = f64::INFINITY;
        let center = lat.basis_coords(&v).map_err(|e| e.to_string())?;
        for da in -3i64..=3 {
            for db in -3i64..=3 {
                let coords = [center[0].round() as i64 + da, center[1].round() as i64 + db];
                let p = lat.point(&coords).map_err(|e| e.to_string())?;
                let d = (p[0] - v[0]).powi(2) + (p[1] - v[1]).powi(2);
                best = best.min(d);
            }
        }
        if (fast - best).abs() > 1e-9 {
            return Err(format!("nearest-point mismatch at {v:?}"));
        }
    }
    Ok(())
}

fn quantizer_endpoints() -> Result<(), String> {
    let cfg = QuantizerConfig::symmetric(25, 1.0).map_err(|e| e.to_string())?;
    let mut rng = derive_rng(99, &[3]);
    for _ in 0..50 {
        if cfg.quantize(1.0, &mut rng) != 24
            || cfg.quantize(-1.0, &mut rng) != 0
            || cfg.quantize(0.0, &mut rng) != 12
        {
            return Err("endpoint quantization is not deterministic".into());
        }
    }
    let deq = cfg.dequantize_sum(24, 2).map_err(|e| e.to_string())?;
    if deq.abs() > 1e-12 {
        return Err(format!("dequantize_sum(24, 2) = {deq}, want 0"));
    }
    Ok(())
}

fn rate_identities() -> Result<(), String> {
    if (achievable_rate_mmse(1.0, 1.0, 1) - 0.5).abs() > 1e-12 {
        return Err("MMSE rate at K=1, unit SNR should be 1/2".into());
    }
    for k in [1u32, 2, 10] {
        let direct = 0.5 * (2.0f64 + 1.0 / k as f64).log2();
        if (achievable_rate_mmse(2.0, 1.0, k) - direct).abs() > 1e-12 {
            return Err(format!("MMSE rate identity failed at K={k}"));
        }
        let unit = achievable_rate(2.0, 1.0, k, 1.0);
        if (unit - 0.5 * 2.0f64.log2()).abs() > 1e-12 {
            return Err(format!("unit-scale rate identity failed at K={k}"));
        }
    }
    Ok(())
}

fn bounds_consistency() -> Result<(), String> {
    let cfg = BalancedConfig::new(5, 2, 25, 1.0).map_err(|e| e.to_string())?;
    let pn = snr_to_noise_power(2.0, 1.0);
    let exact0 = balanced_exact_error(&cfg, pn, 1, 0);
    let upper = balanced_error_upper_bound(25, 2, 1.0, pn, 1);
    if (exact0 - upper).abs() > 1e-12 {
        return Err("zero truncation should match the upper bound".into());
    }
    for x in [0.1, 1.0, 4.0] {
        if (chi_square_cdf(2, x) - (1.0 - (-x / 2.0).exp())).abs() > 1e-12 {
            return Err("chi-square CDF mismatch at two degrees of freedom".into());
        }
    }
    if (normal_cdf(0.0) - 0.5).abs() > 1e-15 {
        return Err("normal CDF symmetry point failed".into());
    }
    Ok(())
}

/// Runs every check, printing one line each; returns the failure count.
pub fn run_all() -> usize {
    let checks: &[Check] = &[
        ("balanced digit round trip", balanced_digit_round_trip),
        ("balanced noiseless sums (exhaustive)", balanced_noiseless_sums_exhaustive),
        ("nested noiseless sums (exhaustive, p=5)", nested_exhaustive_small_field),
        ("prime conditions", prime_conditions),
        ("lattice nearest point vs brute force", lattice_nearest_brute_force),
        ("quantizer endpoints", quantizer_endpoints),
        ("rate identities", rate_identities),
        ("bound consistency", bounds_consistency),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                failures += 1;
            }
        }
    }
    failures
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_selftests_pass() {
        assert_eq!(super::run_all(), 0);
    }
}
