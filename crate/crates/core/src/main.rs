//! Command-line driver: error-rate sweeps, bound tabulation, the federated
//! training demo, and the self-test oracles.

use aircomp::bounds;
use aircomp::channel::snr_to_noise_power;
use aircomp::feel::{emit_loss_csv, train, TrainConfig, TrainScheme};
use aircomp::lattice::hexagonal_for_power;
use aircomp::nested::{mmse_scale, ScaleMode};
use aircomp::sweep::{emit_csv, run_sweep, Scheme, SweepConfig, SweepResult};
use aircomp::BalancedConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "aircomp",
    version,
    about = "Lattice codes for over-the-air gradient aggregation: Monte-Carlo sweeps, \
             error bounds, and a federated training demo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo error-rate sweep over device counts and SNRs
    Sweep(SweepArgs),
    /// Tabulate the theoretical error expressions for one configuration
    Bounds(BoundsArgs),
    /// Federated linear-regression training through the coded channel
    Train(TrainArgs),
    /// Run the built-in brute-force oracle checks
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Both,
    Balanced,
    Nested,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mmse,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainSchemeArg {
    Balanced,
    Nested,
    Baseline,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated SNR values in dB
    #[arg(long = "snr-db", value_delimiter = ',')]
    snr_db: Option<Vec<f64>>,
    /// Comma-separated device counts
    #[arg(long, value_delimiter = ',')]
    devices: Option<Vec<u32>>,
    /// Noise draws per sweep point
    #[arg(long)]
    samples: Option<u64>,
    /// Random nested-code generators per point
    #[arg(long)]
    generators: Option<u32>,
    /// Quantization levels (odd)
    #[arg(long)]
    q: Option<u32>,
    /// Balanced-numeral base (odd)
    #[arg(long)]
    beta: Option<u32>,
    /// Balanced-numeral digits per entry
    #[arg(long)]
    digits: Option<u32>,
    /// Per-device transmit power
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Receiver scaling for the nested code
    #[arg(long = "mmse-mode", value_enum)]
    mmse_mode: Option<ModeArg>,
    /// CSV output path (one file per SNR)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable channel noise
    #[arg(long)]
    noiseless: bool,
    /// Zero-sum set truncation for tabulated bounds
    #[arg(long)]
    dmax: Option<i64>,
    /// Field size override (default: smallest prime > K(q-1) per row)
    #[arg(long)]
    prime: Option<u64>,
    /// Transmit random messages instead of the zero tuple
    #[arg(long = "random-messages")]
    random_messages: bool,
    /// Append bound columns to the CSV
    #[arg(long = "with-bounds")]
    with_bounds: bool,
    /// key=value defaults file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long = "snr-db")]
    snr_db: Option<f64>,
    #[arg(long)]
    devices: Option<u32>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    dmax: Option<i64>,
    #[arg(long)]
    prime: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    clients: Option<u32>,
    /// Model dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Gradient clip bound
    #[arg(long)]
    gb: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<TrainSchemeArg>,
    #[arg(long = "snr-db")]
    snr_db: Option<f64>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "samples-per-client")]
    samples_per_client: Option<usize>,
    #[arg(long = "label-noise")]
    label_noise: Option<f64>,
    #[arg(long)]
    noiseless: bool,
    /// Loss trajectory CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("AIRCOMP_THREADS") {
        match threads.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("thread pool is built before any parallel work");
            }
            _ => {
                eprintln!("error: AIRCOMP_THREADS must be a positive integer");
                std::process::exit(1);
            }
        }
    }
    let status = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Train(args) => cmd_train(args),
        Command::Selftest => {
            let failures = aircomp::selftest::run_all();
            if failures == 0 {
                Ok(())
            } else {
                Err(format!("{failures} self-test(s) failed"))
            }
        }
    };
    if let Err(message) = status {
        eprintln!("error: {message}");
        std::process::exit(1);
    }
}

/// key=value file with '#' comments.
fn load_config(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected key=value, got {raw:?}",
                path.display(),
                lineno + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn cfg_value<T: FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<T>, String> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
    }
}

fn cfg_list<T: FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<Vec<T>>, String> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .split(',')
            .map(|s| s.trim().parse::<T>())
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
            .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
    }
}

fn cfg_flag(map: &HashMap<String, String>, key: &str) -> Result<bool, String> {
    match map.get(key).map(|s| s.as_str()) {
        None => Ok(false),
        Some("true") | Some("1") | Some("yes") => Ok(true),
        Some("false") | Some("0") | Some("no") => Ok(false),
        Some(other) => Err(format!("config key {key}: expected a boolean, got {other:?}")),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let defaults = SweepConfig::default();
    let schemes = match args.scheme.or(match file.get("scheme").map(|s| s.as_str()) {
        None => None,
        Some("both") => Some(SchemeArg::Both),
        Some("balanced") => Some(SchemeArg::Balanced),
        Some("nested") => Some(SchemeArg::Nested),
        Some(other) => return Err(format!("config key scheme: unknown value {other:?}")),
    }) {
        None | Some(SchemeArg::Both) => vec![Scheme::Balanced, Scheme::Nested],
        Some(SchemeArg::Balanced) => vec![Scheme::Balanced],
        Some(SchemeArg::Nested) => vec![Scheme::Nested],
    };
    let scale_mode = match args.mmse_mode.or(match file.get("mmse-mode").map(|s| s.as_str()) {
        None => None,
        Some("mmse") => Some(ModeArg::Mmse),
        Some("unit") => Some(ModeArg::Unit),
        Some(other) => return Err(format!("config key mmse-mode: unknown value {other:?}")),
    }) {
        None | Some(ModeArg::Mmse) => ScaleMode::Mmse,
        Some(ModeArg::Unit) => ScaleMode::Unit,
    };
    let cfg = SweepConfig {
        schemes,
        snr_db: args
            .snr_db
            .or(cfg_list(&file, "snr-db")?)
            .unwrap_or(defaults.snr_db),
        devices: args
            .devices
            .or(cfg_list(&file, "devices")?)
            .unwrap_or(defaults.devices),
        samples: args
            .samples
            .or(cfg_value(&file, "samples")?)
            .unwrap_or(defaults.samples),
        generators: args
            .generators
            .or(cfg_value(&file, "generators")?)
            .unwrap_or(defaults.generators),
        levels: args.q.or(cfg_value(&file, "q")?).unwrap_or(defaults.levels),
        base: args
            .beta
            .or(cfg_value(&file, "beta")?)
            .unwrap_or(defaults.base),
        digits: args
            .digits
            .or(cfg_value(&file, "digits")?)
            .unwrap_or(defaults.digits),
        power: args
            .power
            .or(cfg_value(&file, "power")?)
            .unwrap_or(defaults.power),
        seed: args
            .seed
            .or(cfg_value(&file, "seed")?)
            .unwrap_or(defaults.seed),
        scale_mode,
        noiseless: args.noiseless || cfg_flag(&file, "noiseless")?,
        random_messages: args.random_messages || cfg_flag(&file, "random-messages")?,
        prime: args.prime.or(cfg_value(&file, "prime")?),
        truncation: args
            .dmax
            .or(cfg_value(&file, "dmax")?)
            .unwrap_or(defaults.truncation),
        include_bounds: args.with_bounds || cfg_flag(&file, "with-bounds")?,
    };
    let out = args.out.or(cfg_value::<PathBuf>(&file, "out")?);

    let result = run_sweep(&cfg).map_err(|e| e.to_string())?;
    print_sweep_summary(&result);
    if let Some(path) = out {
        let written = emit_csv(&result, &path).map_err(|e| e.to_string())?;
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn print_sweep_summary(result: &SweepResult) {
    println!(
        "{:>7} {:>4} {:>6} {:>14} {:>14} {:>14} {:>14}",
        "SNR(dB)", "K", "p", "bal_median", "nest_median", "nest_min", "nest_max"
    );
    for row in &result.rows {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.6}"),
            None => "-".to_string(),
        };
        println!(
            "{:>7.2} {:>4} {:>6} {:>14} {:>14} {:>14} {:>14}",
            row.snr_db,
            row.devices,
            row.prime.map(|p| p.to_string()).unwrap_or_else(|| "-".into()),
            fmt_opt(row.balanced.map(|s| s.median)),
            fmt_opt(row.nested.map(|s| s.median)),
            fmt_opt(row.nested.map(|s| s.min)),
            fmt_opt(row.nested.map(|s| s.max)),
        );
    }
    println!(
        "{} samples per point, {:.1}s elapsed",
        result.samples,
        result.elapsed.as_secs_f64()
    );
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), String> {
    let levels = args.q.unwrap_or(25);
    let base = args.beta.unwrap_or(5);
    let digits = args.digits.unwrap_or(2);
    let snr_db = args.snr_db.unwrap_or(2.0);
    let devices = args.devices.unwrap_or(5);
    let power = args.power.unwrap_or(1.0);
    let dmax = args.dmax.unwrap_or(3);

    let bal = BalancedConfig::new(base, digits, levels, power).map_err(|e| e.to_string())?;
    let noise_power = snr_to_noise_power(snr_db, power);
    let prime = args
        .prime
        .unwrap_or_else(|| aircomp::nested::smallest_valid_prime(devices, levels));
    aircomp::nested::validate_prime(prime, devices, levels).map_err(|e| e.to_string())?;
    let (shaping, stats) = hexagonal_for_power(power).map_err(|e| e.to_string())?;
    let scale = mmse_scale(devices, power, noise_power);

    println!(
        "config: q={levels} beta={base} digits={digits} snr={snr_db}dB K={devices} p={prime} P_X={power}"
    );
    println!(
        "balanced exact error (truncation {dmax}):     {:.6e}",
        bounds::balanced_exact_error(&bal, noise_power, 1, dmax)
    );
    println!(
        "balanced upper bound:                      {:.6e}",
        bounds::balanced_error_upper_bound(levels, digits, power, noise_power, 1)
    );
    println!(
        "nested upper bound (mmse scale):           {:.6e}",
        bounds::nested_error_upper_bound(
            &stats,
            shaping.dim(),
            prime,
            devices,
            scale,
            power,
            noise_power
        )
        .map_err(|e| e.to_string())?
    );
    println!(
        "nested upper bound (unit scale):           {:.6e}",
        bounds::nested_error_upper_bound_unit(&stats, shaping.dim(), prime, noise_power)
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), String> {
    let defaults = TrainConfig::default();
    let scheme = match args.scheme {
        None | Some(TrainSchemeArg::Balanced) => TrainScheme::Balanced,
        Some(TrainSchemeArg::Nested) => TrainScheme::Nested,
        Some(TrainSchemeArg::Baseline) => TrainScheme::Baseline,
    };
    let cfg = TrainConfig {
        dim: args.dim.unwrap_or(defaults.dim),
        clients: args.clients.unwrap_or(defaults.clients),
        rounds: args.rounds.unwrap_or(defaults.rounds),
        learning_rate: args.lr.unwrap_or(defaults.learning_rate),
        clip_bound: args.gb.unwrap_or(defaults.clip_bound),
        scheme,
        snr_db: args.snr_db.unwrap_or(defaults.snr_db),
        power: args.power.unwrap_or(defaults.power),
        levels: args.q.unwrap_or(defaults.levels),
        base: args.beta.unwrap_or(defaults.base),
        digits: args.digits.unwrap_or(defaults.digits),
        samples_per_client: args.samples_per_client.unwrap_or(defaults.samples_per_client),
        label_noise: args.label_noise.unwrap_or(defaults.label_noise),
        seed: args.seed.unwrap_or(defaults.seed),
        noiseless: args.noiseless,
        scale_mode: defaults.scale_mode,
    };
    let result = train(&cfg).map_err(|e| e.to_string())?;
    let every = (cfg.rounds / 10).max(1) as usize;
    for (round, loss) in result.losses.iter().enumerate() {
        if round % every == 0 || round == result.losses.len() - 1 {
            println!("round {round:>4}  loss {loss:.6e}");
        }
    }
    if let Some(path) = args.out {
        emit_loss_csv(&result, scheme, &path).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
