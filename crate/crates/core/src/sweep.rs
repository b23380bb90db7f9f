//! Monte-Carlo error-rate sweeps over (scheme, device count, SNR), bound
//! tabulation, and CSV emission.
//!
//! Every trial draws its randomness from a stream addressed by
//! (seed, scheme, devices, SNR, generator index, trial index), so results
//! are bit-identical across runs and thread counts. The balanced scheme
//! shares its noise draws across device counts within an (SNR, trial) pair:
//! its error event depends only on the noise, so the reported rates are
//! exactly equal for every K. The nested scheme transmits the zero message
//! tuple on the fast path (dithering makes the error rate independent of
//! the messages); `random_messages` enables the slow path that checks this
//! empirically.

use crate::balanced::BalancedConfig;
use crate::bounds;
use crate::channel::snr_to_noise_power;
use crate::error::{Error, Result};
use crate::lattice::{hexagonal_for_power, LatticeStats, MAX_DIM};
use crate::nested::{
    mmse_scale, smallest_valid_prime, validate_prime, NestedCode, ScaleMode,
};
use crate::stream::{derive_rng, f64_tag, tag};
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Balanced,
    Nested,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub schemes: Vec<Scheme>,
    pub snr_db: Vec<f64>,
    pub devices: Vec<u32>,
    /// Noise draws per (scheme, K, SNR, generator) point.
    pub samples: u64,
    /// Random fine-lattice generators per nested point.
    pub generators: u32,
    pub levels: u32,
    pub base: u32,
    pub digits: u32,
    pub power: f64,
    pub seed: u64,
    pub scale_mode: ScaleMode,
    pub noiseless: bool,
    /// Transmit random message tuples instead of the zero tuple.
    pub random_messages: bool,
    /// Field size override; by default the smallest prime exceeding
    /// K·(levels−1) is chosen per device count.
    pub prime: Option<u64>,
    /// Zero-sum set truncation for the tabulated exact error.
    pub truncation: i64,
    pub include_bounds: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            schemes: vec![Scheme::Balanced, Scheme::Nested],
            snr_db: vec![2.0, 2.35],
            devices: vec![1, 2, 3, 4, 5],
            samples: 100_000,
            generators: 20,
            levels: 25,
            base: 5,
            digits: 2,
            power: 1.0,
            seed: 7,
            scale_mode: ScaleMode::Mmse,
            noiseless: false,
            random_messages: false,
            prime: None,
            truncation: 3,
            include_bounds: false,
        }
    }
}

impl SweepConfig {
    pub fn balanced_config(&self) -> Result<BalancedConfig> {
        BalancedConfig::new(self.base, self.digits, self.levels, self.power)
    }

    /// Field size for a row with `devices` senders.
    pub fn prime_for(&self, devices: u32) -> u64 {
        self.prime
            .unwrap_or_else(|| smallest_valid_prime(devices, self.levels))
    }

    fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidParameter("no scheme selected".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidParameter("no SNR values".into()));
        }
        if self.devices.is_empty() || self.devices.iter().any(|&k| k == 0) {
            return Err(Error::InvalidParameter(
                "device counts must be positive".into(),
            ));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        self.balanced_config()?;
        if self.schemes.contains(&Scheme::Nested) {
            if self.generators == 0 {
                return Err(Error::InvalidParameter(
                    "need at least one generator draw".into(),
                ));
            }
            // An explicit prime must hold for every row; auto-derived primes
            // hold by construction.
            for &k in &self.devices {
                validate_prime(self.prime_for(k), k, self.levels)?;
            }
        }
        if !(self.power > 0.0) {
            return Err(Error::InvalidParameter("power must be positive".into()));
        }
        if self.truncation < 0 {
            return Err(Error::InvalidParameter(
                "truncation must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Min/median/max over the code draws at one sweep point, plus the binomial
/// standard error of the median estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub std_error: f64,
}

impl SchemeStats {
    fn from_rates(rates: &mut Vec<f64>, samples: u64) -> Self {
        rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = rates.len();
        let median = if n % 2 == 1 {
            rates[n / 2]
        } else {
            (rates[n / 2 - 1] + rates[n / 2]) / 2.0
        };
        SchemeStats {
            min: rates[0],
            median,
            max: rates[n - 1],
            std_error: (median * (1.0 - median) / samples as f64).sqrt(),
        }
    }
}

/// Theoretical values tabulated alongside the empirical rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowBounds {
    pub balanced_exact: f64,
    pub balanced_upper: f64,
    pub nested_mmse: f64,
    pub nested_unit: f64,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub snr_db: f64,
    pub devices: u32,
    /// Field size used by the nested rows.
    pub prime: Option<u64>,
    pub balanced: Option<SchemeStats>,
    pub nested: Option<SchemeStats>,
    pub bounds: Option<RowBounds>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub samples: u64,
    pub elapsed: Duration,
}

impl SweepResult {
    pub fn row(&self, snr_db: f64, devices: u32) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.devices == devices)
    }
}

/// Balanced-scheme error count on the zero-digit fast path; the decode input
/// is exactly the noise vector, so the result holds for every device count.
fn balanced_errors_fast(
    cfg: &BalancedConfig,
    seed: u64,
    snr_db: f64,
    noise_power: f64,
    noiseless: bool,
    samples: u64,
) -> u64 {
    let digits = cfg.digits() as usize;
    let sigma = noise_power.sqrt();
    (0..samples)
        .into_par_iter()
        .map(|trial| {
            let mut noise = [0.0; MAX_DIM];
            if !noiseless {
                let mut rng = derive_rng(seed, &[tag::BALANCED, f64_tag(snr_db), trial]);
                for x in noise[..digits].iter_mut() {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    *x = sigma * n;
                }
            }
            u64::from(cfg.decode_sum(&noise[..digits]) != 0)
        })
        .sum()
}

/// Slow path: random message tuples per device, noise still shared across
/// device counts within an (SNR, trial) pair.
fn balanced_errors_random(
    cfg: &BalancedConfig,
    seed: u64,
    snr_db: f64,
    noise_power: f64,
    noiseless: bool,
    samples: u64,
    devices: u32,
) -> u64 {
    let digits = cfg.digits() as usize;
    let sigma = noise_power.sqrt();
    (0..samples)
        .into_par_iter()
        .map(|trial| {
            let mut received = [0.0; MAX_DIM];
            if !noiseless {
                let mut noise_rng = derive_rng(seed, &[tag::BALANCED, f64_tag(snr_db), trial]);
                for x in received[..digits].iter_mut() {
                    let n: f64 = StandardNormal.sample(&mut noise_rng);
                    *x = sigma * n;
                }
            }
            let mut msg_rng = derive_rng(
                seed,
                &[tag::BALANCED_MSG, devices as u64, f64_tag(snr_db), trial],
            );
            let mut truth = 0i64;
            for _ in 0..devices {
                let level = msg_rng.random_range(0..cfg.levels());
                let value = cfg.recenter(level).expect("level is in range");
                truth += value;
                let word = cfg.to_digits(value).expect("recentered value fits");
                let x = cfg.encode(&word).expect("extracted digits are valid");
                for (acc, xi) in received[..digits].iter_mut().zip(x) {
                    *acc += xi;
                }
            }
            u64::from(cfg.decode_sum(&received[..digits]) != truth)
        })
        .sum()
}

/// Error count for one nested code draw.
#[allow(clippy::too_many_arguments)]
fn nested_errors(
    code: &NestedCode,
    seed: u64,
    snr_db: f64,
    devices: u32,
    gen_index: u32,
    scale: f64,
    noise_power: f64,
    noiseless: bool,
    random_messages: bool,
    levels: u32,
    samples: u64,
) -> u64 {
    let n = code.dim();
    let sigma = noise_power.sqrt();
    let shaping = code.shaping();
    (0..samples)
        .into_par_iter()
        .map(|trial| {
            let mut rng = derive_rng(
                seed,
                &[
                    tag::NESTED,
                    devices as u64,
                    f64_tag(snr_db),
                    gen_index as u64,
                    trial,
                ],
            );
            let mut received = [0.0; MAX_DIM];
            let mut dither_sum = [0.0; MAX_DIM];
            let mut dither = [0.0; MAX_DIM];
            let mut signal = [0.0; MAX_DIM];
            let mut truth = 0u64;
            for _ in 0..devices {
                shaping.sample_dither_into(&mut rng, &mut dither[..n]);
                let message = if random_messages {
                    rng.random_range(0..levels as u64)
                } else {
                    0
                };
                truth += message;
                code.encode_into(message, &dither[..n], &mut signal[..n]);
                for i in 0..n {
                    received[i] += signal[i];
                    dither_sum[i] += dither[i];
                }
            }
            if !noiseless {
                for x in received[..n].iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x += sigma * z;
                }
            }
            let mut combined = [0.0; MAX_DIM];
            for i in 0..n {
                combined[i] = scale * received[i] + dither_sum[i];
            }
            u64::from(code.decode_combined(&combined[..n]) != truth)
        })
        .sum()
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    let balanced_cfg = cfg.balanced_config()?;
    let run_balanced = cfg.schemes.contains(&Scheme::Balanced);
    let run_nested = cfg.schemes.contains(&Scheme::Nested);
    let (shaping, stats) = hexagonal_for_power(cfg.power)?;

    let mut rows = Vec::new();
    for &snr_db in &cfg.snr_db {
        let noise_power = snr_to_noise_power(snr_db, cfg.power);

        let balanced_shared = if run_balanced && !cfg.random_messages {
            let errors = balanced_errors_fast(
                &balanced_cfg,
                cfg.seed,
                snr_db,
                noise_power,
                cfg.noiseless,
                cfg.samples,
            );
            let rate = errors as f64 / cfg.samples as f64;
            Some(SchemeStats::from_rates(&mut vec![rate], cfg.samples))
        } else {
            None
        };

        for &devices in &cfg.devices {
            let balanced = if run_balanced {
                if let Some(stats) = balanced_shared {
                    Some(stats)
                } else {
                    let errors = balanced_errors_random(
                        &balanced_cfg,
                        cfg.seed,
                        snr_db,
                        noise_power,
                        cfg.noiseless,
                        cfg.samples,
                        devices,
                    );
                    let rate = errors as f64 / cfg.samples as f64;
                    Some(SchemeStats::from_rates(&mut vec![rate], cfg.samples))
                }
            } else {
                None
            };

            let mut prime = None;
            let nested = if run_nested {
                let p = cfg.prime_for(devices);
                validate_prime(p, devices, cfg.levels)?;
                prime = Some(p);
                let scale = match (cfg.scale_mode, cfg.noiseless) {
                    (ScaleMode::Unit, _) => 1.0,
                    (ScaleMode::Mmse, true) => 1.0,
                    (ScaleMode::Mmse, false) => mmse_scale(devices, cfg.power, noise_power),
                };
                let mut rates = Vec::with_capacity(cfg.generators as usize);
                for gen_index in 0..cfg.generators {
                    let mut gen_rng =
                        derive_rng(cfg.seed, &[tag::GENERATOR, p, gen_index as u64]);
                    let generator =
                        NestedCode::random_generator(p, shaping.dim(), &mut gen_rng);
                    let code = NestedCode::build(shaping.clone(), p, &generator)?;
                    let errors = nested_errors(
                        &code,
                        cfg.seed,
                        snr_db,
                        devices,
                        gen_index,
                        scale,
                        noise_power,
                        cfg.noiseless,
                        cfg.random_messages,
                        cfg.levels,
                        cfg.samples,
                    );
                    rates.push(errors as f64 / cfg.samples as f64);
                }
                Some(SchemeStats::from_rates(&mut rates, cfg.samples))
            } else {
                None
            };

            let bounds = if cfg.include_bounds {
                Some(tabulate_bounds(
                    cfg,
                    &balanced_cfg,
                    &stats,
                    shaping.dim(),
                    devices,
                    noise_power,
                )?)
            } else {
                None
            };

            rows.push(SweepRow {
                snr_db,
                devices,
                prime,
                balanced,
                nested,
                bounds,
            });
        }
    }

    Ok(SweepResult {
        rows,
        samples: cfg.samples,
        elapsed: start.elapsed(),
    })
}

fn tabulate_bounds(
    cfg: &SweepConfig,
    balanced_cfg: &BalancedConfig,
    stats: &LatticeStats,
    dim: usize,
    devices: u32,
    noise_power: f64,
) -> Result<RowBounds> {
    let prime = cfg.prime_for(devices);
    let scale = mmse_scale(devices, cfg.power, noise_power);
    Ok(RowBounds {
        balanced_exact: bounds::balanced_exact_error(
            balanced_cfg,
            noise_power,
            1,
            cfg.truncation,
        ),
        balanced_upper: bounds::balanced_error_upper_bound(
            cfg.levels,
            cfg.digits,
            cfg.power,
            noise_power,
            1,
        ),
        nested_mmse: bounds::nested_error_upper_bound(
            stats,
            dim,
            prime,
            devices,
            scale,
            cfg.power,
            noise_power,
        )?,
        nested_unit: bounds::nested_error_upper_bound_unit(stats, dim, prime, noise_power),
    })
}

fn fmt(value: f64) -> String {
    format!("{value:.5e}")
}

fn field(stats: Option<&SchemeStats>, pick: fn(&SchemeStats) -> f64) -> String {
    stats.map(|s| fmt(pick(s))).unwrap_or_default()
}

/// CSV table for one SNR value, one row per device count.
pub fn render_csv(result: &SweepResult, snr_db: f64) -> String {
    let rows: Vec<&SweepRow> = result
        .rows
        .iter()
        .filter(|r| r.snr_db == snr_db)
        .collect();
    let with_bounds = rows.iter().any(|r| r.bounds.is_some());
    let mut out = String::from(
        "Num_Devices,Median_Nested,Min_Nested,Max_Nested,Median_Balanced,Min_Balanced,Max_Balanced",
    );
    if with_bounds {
        out.push_str(",Bound_Balanced_Exact,Bound_Balanced_Upper,Bound_Nested_Mmse,Bound_Nested_Unit");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            row.devices,
            field(row.nested.as_ref(), |s| s.median),
            field(row.nested.as_ref(), |s| s.min),
            field(row.nested.as_ref(), |s| s.max),
            field(row.balanced.as_ref(), |s| s.median),
            field(row.balanced.as_ref(), |s| s.min),
            field(row.balanced.as_ref(), |s| s.max),
        ));
        if with_bounds {
            match &row.bounds {
                Some(b) => out.push_str(&format!(
                    ",{},{},{},{}",
                    fmt(b.balanced_exact),
                    fmt(b.balanced_upper),
                    fmt(b.nested_mmse),
                    fmt(b.nested_unit),
                )),
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes one CSV per SNR value. A single-SNR result lands exactly at
/// `path`; multi-SNR results get a `_snr<value>` suffix per file.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<Vec<PathBuf>> {
    let mut snrs: Vec<f64> = Vec::new();
    for row in &result.rows {
        if !snrs.contains(&row.snr_db) {
            snrs.push(row.snr_db);
        }
    }
    let mut written = Vec::new();
    for &snr in &snrs {
        let target = if snrs.len() == 1 {
            path.to_path_buf()
        } else {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("sweep");
            let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            path.with_file_name(format!("{stem}_snr{snr:.2}.{ext}"))
        };
        std::fs::write(&target, render_csv(result, snr))?;
        written.push(target);
    }
    Ok(written)
}
