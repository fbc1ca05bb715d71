use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use sfma::bench::csv::{emit_csv, to_csv};
use sfma::bench::{run_sweep_with_profile, DropSetup, RhoProfileSpec, ScenarioConfig, Scheme};
use sfma::channel::db_to_linear;
use sfma::power::{kkt_residuals, solve, SolverConfig};
use sfma::semantic_rate::{calibrate_table, parse_mse_csv};
use sfma::{Error, Result};

#[derive(Parser)]
#[command(name = "sfma", version, about = "SFMA user pairing, power allocation and Monte Carlo sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep described by a TOML config and write CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path; `-` writes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve one random drop and print pairing, allocation and KKT residuals.
    Solve {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 30.0)]
        p_max_dbw: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 4)]
        delta_max: u64,
        #[arg(long, default_value_t = 1.0)]
        min_rate: f64,
        #[arg(long, default_value = "default")]
        rho: String,
    },
    /// Build a rho table from measured distortions.
    Calibrate {
        /// CSV with columns group_power_dbw,snr_db,noise_w,mse.
        #[arg(long)]
        mse_csv: PathBuf,
        /// Table destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the brute-force oracle checks on small random instances.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, output } => sweep(&config, output),
        Command::Solve {
            users,
            seed,
            p_max_dbw,
            alpha,
            delta_max,
            min_rate,
            rho,
        } => solve_one(users, seed, p_max_dbw, alpha, delta_max, min_rate, &rho),
        Command::Calibrate { mse_csv, output } => calibrate(&mse_csv, output.as_deref()),
        Command::Verify { seed, cases } => verify(seed, cases),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidTable(_) | Error::InvalidConfig(_) | Error::Io { .. } => 2,
        Error::Infeasible { .. } => 3,
        Error::NoConvergence { .. } => 1,
    }
}

fn sweep(config_path: &Path, output: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = ScenarioConfig::load(config_path)?;
    let profile = cfg.profile(config_path.parent())?;
    let report = run_sweep_with_profile(&cfg, profile)?;
    for &m in &cfg.user_counts {
        for &p in &cfg.p_max_dbw {
            let mean = |s| report.cell(s, m, p).map_or(f64::NAN, |c| c.mean_sum_rate);
            let sfma = mean(Scheme::Sfma);
            let gains: Vec<String> = [Scheme::Fnoma, Scheme::Ojscc, Scheme::Ofdma]
                .iter()
                .map(|&s| format!("{s} {:+.1}%", 100.0 * (sfma / mean(s) - 1.0)))
                .collect();
            eprintln!("M={m} P={p} dBW: sfma vs {}", gains.join(", "));
        }
    }
    match output.or(cfg.output.clone()) {
        Some(p) if p.as_os_str() != "-" => {
            emit_csv(&report, &p)?;
            eprintln!("wrote {}", p.display());
        }
        _ => print!("{}", to_csv(&report)),
    }
    Ok(ExitCode::SUCCESS)
}

fn solve_one(
    m: usize,
    seed: u64,
    p_max_dbw: f64,
    alpha: f64,
    delta_max: u64,
    min_rate: f64,
    rho: &str,
) -> Result<ExitCode> {
    let spec: RhoProfileSpec = rho.parse()?;
    let mut cfg = ScenarioConfig::new(vec![m], vec![p_max_dbw], 1, seed);
    cfg.alpha = alpha;
    cfg.delta_max = delta_max;
    cfg.min_rate = min_rate;
    cfg.validate()?;
    let profile = Arc::new(spec.build(None)?);
    let users = DropSetup::from_config(&cfg).users(m, seed)?;
    let p_max = db_to_linear(p_max_dbw);
    let mut solver = SolverConfig::new(p_max, profile);
    solver.alpha = alpha;
    solver.delta_max = delta_max;
    let s = solve(&users, &solver)?;

    println!("users {m}, seed {seed}, p_max {p_max_dbw} dBW ({p_max:.6} W)");
    println!("group  users     gap  p_k [W]        p_k1 [W]       p_k2 [W]       r1       r2");
    for (k, (((&(a, b), gap), &p), (&(x, y), r))) in s
        .pairing
        .pairs
        .iter()
        .zip(&s.pairing.gaps)
        .zip(&s.allocation.group_totals)
        .zip(s.allocation.splits.iter().zip(&s.rates))
        .enumerate()
    {
        println!(
            "{k:<5}  {a:>3},{b:<3}  {gap:>3}  {p:<13.6e}  {x:<13.6e}  {y:<13.6e}  {:<7.4}  {:<7.4}",
            r[0], r[1]
        );
    }
    println!(
        "total power {:.9e} W, mu {:.6e}, budget {:?}",
        s.allocation.total_power(),
        s.allocation.mu,
        s.allocation.budget
    );
    println!("sum rate {:.6} bits/s/Hz", s.sum_rate);
    let kkt = kkt_residuals(&s.groups, &s.allocation, p_max);
    let worst_stat = kkt.stationarity.iter().cloned().fold(0.0, f64::max);
    println!(
        "kkt: max normalized {:.3e}, max stationarity {:.3e}, budget slackness {:.3e}, budget excess {:.3e}",
        kkt.max_normalized, worst_stat, kkt.budget_slackness, kkt.budget_excess
    );
    Ok(ExitCode::SUCCESS)
}

fn calibrate(mse_csv: &Path, output: Option<&Path>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(mse_csv).map_err(|e| Error::Io {
        path: mse_csv.to_path_buf(),
        source: e,
    })?;
    let (table, clamped) = calibrate_table(&parse_mse_csv(&text)?)?;
    if clamped > 0 {
        eprintln!("warning: {clamped} rho values clamped into [0, 1]");
    }
    match output {
        Some(p) => std::fs::write(p, table.to_csv()).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => print!("{}", table.to_csv()),
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(seed: u64, cases: usize) -> Result<ExitCode> {
    let checks = sfma::verify::run_all(seed, cases);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
