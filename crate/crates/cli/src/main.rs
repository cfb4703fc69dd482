use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anderson_cli::commands::{run, Report, Status};
use anderson_cli::config::ExperimentConfig;
use anderson_cli::CliError;
use clap::{Args, Parser, Subcommand};

/// Numerical experiments on the one-dimensional Anderson model.
///
/// Settings come from an optional TOML config (one section per command),
/// overridden by flags. Every CSV starts with
/// `# anderson <command> v1 config_hash=<sha256>` and every JSON carries a
/// `config_hash` field, the hash of the canonical config of that command.
///
/// Exit codes: 0 success, 1 failed check or runtime error, 2 invalid
/// configuration, 3 numerical result not converged.
#[derive(Parser, Debug)]
#[command(name = "anderson", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed of the counter-based random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-site law: point:a | bernoulli:a,b[,p] | atoms:v@w,... | uniform:a,b | piecewise:b0,..;h1,..
    #[arg(long, global = true)]
    dist: Option<String>,
    /// Output file for the main artifact (stdout when absent). The `ks`
    /// norm report goes next to it with a `.json` extension.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the effective config (after flag overrides) to this file.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// Worker threads; 0 lets the runtime choose.
    #[arg(long, global = true, env = "ANDERSON_WORKERS", default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lyapunov exponents on an energy grid from direct cocycle products (CSV).
    Lyapunov {
        /// `a:b:step`, both ends included.
        #[arg(long, allow_hyphen_values = true)]
        energy_grid: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Invariant measure on the projective line and the resulting exponent (JSON).
    Furstenberg {
        #[arg(long, allow_hyphen_values = true)]
        energy: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Eigenvector decay census of finite chains (CSV).
    Spectrum {
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Eigenfunction correlator and sampled sup over time versus distance (CSV).
    Dynlocal {
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Spectral averaging over rank-one couplings for δ₀ and δ₁ (JSON).
    SpectralAvg {
        /// Matrix size 2L + 1.
        #[arg(long)]
        size: Option<usize>,
        /// `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long)]
        lambda_max: Option<f64>,
    },
    /// Kunz-Souillard operator route against Monte Carlo (CSV) and the norm certificate (JSON).
    Ks {
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long = "grid-N")]
        grid_n: Option<usize>,
        #[arg(long = "grid-X")]
        grid_x: Option<f64>,
        #[arg(long)]
        e_points: Option<usize>,
        /// Monte Carlo realizations.
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long = "norm-grid-N")]
        norm_grid_n: Option<usize>,
        #[arg(long = "norm-grid-X")]
        norm_grid_x: Option<f64>,
    },
    /// The invariant suite (CSV); exit code 1 if any check fails.
    Check {
        /// Reduced sizes.
        #[arg(long)]
        quick: bool,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_z(s: &str) -> Result<[f64; 2], CliError> {
    let bad = || CliError::Validation {
        field: "spectral_avg.z".into(),
        reason: format!("expected re,im, got `{s}`"),
    };
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re, im] => Ok([re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?]),
        _ => Err(bad()),
    }
}

/// Loads the config file and applies flag overrides; returns the command name.
fn effective_config(cli: Cli) -> Result<(&'static str, ExperimentConfig), CliError> {
    let mut cfg = match &cli.global.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    set(&mut cfg.seed, cli.global.seed);
    set(&mut cfg.distribution, cli.global.dist);
    let name = match cli.command {
        Command::Lyapunov {
            energy_grid,
            steps,
            realizations,
        } => {
            let c = &mut cfg.lyapunov;
            set(&mut c.energy_grid, energy_grid);
            set(&mut c.steps, steps);
            set(&mut c.realizations, realizations);
            "lyapunov"
        }
        Command::Furstenberg {
            energy,
            grid,
            tol,
            max_iter,
        } => {
            let c = &mut cfg.furstenberg;
            set(&mut c.energy, energy);
            set(&mut c.grid, grid);
            set(&mut c.tol, tol);
            set(&mut c.max_iter, max_iter);
            "furstenberg"
        }
        Command::Spectrum { l, realizations } => {
            set(&mut cfg.spectrum.l, l);
            set(&mut cfg.spectrum.realizations, realizations);
            "spectrum"
        }
        Command::Dynlocal { l, m_max, realizations } => {
            let c = &mut cfg.dynlocal;
            set(&mut c.l, l);
            set(&mut c.m_max, m_max);
            set(&mut c.realizations, realizations);
            "dynlocal"
        }
        Command::SpectralAvg { size, z, lambda_max } => {
            let c = &mut cfg.spectral_avg;
            set(&mut c.size, size);
            set(&mut c.z, z.as_deref().map(parse_z).transpose()?);
            set(&mut c.lambda_max, lambda_max);
            "spectral-avg"
        }
        Command::Ks {
            l,
            m_max,
            grid_n,
            grid_x,
            e_points,
            realizations,
            norm_grid_n,
            norm_grid_x,
        } => {
            let c = &mut cfg.ks;
            set(&mut c.l, l);
            set(&mut c.m_max, m_max);
            set(&mut c.grid_n, grid_n);
            set(&mut c.grid_x, grid_x);
            set(&mut c.e_points, e_points);
            set(&mut c.realizations, realizations);
            set(&mut c.norm_grid_n, norm_grid_n);
            set(&mut c.norm_grid_x, norm_grid_x);
            "ks"
        }
        Command::Check { quick } => {
            cfg.check.quick |= quick;
            "check"
        }
    };
    Ok((name, cfg))
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, &report.primary.content)?;
            if let Some(extra) = &report.secondary {
                std::fs::write(path.with_extension(extra.extension), &extra.content)?;
            }
        }
        None => {
            print!("{}", report.primary.content);
            if let Some(extra) = &report.secondary {
                eprint!("{}", extra.content);
            }
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<Status, CliError> {
    if cli.global.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.workers)
            .build_global()
            .map_err(|e| CliError::Validation {
                field: "workers".into(),
                reason: e.to_string(),
            })?;
    }
    let out = cli.global.out.clone();
    let save = cli.global.save_config.clone();
    let (name, cfg) = effective_config(cli)?;
    cfg.validate()?;
    if let Some(path) = save {
        std::fs::write(path, cfg.to_toml())?;
    }
    let report = run(name, &cfg)?;
    emit(&report, out.as_deref())?;
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Unconverged(msg)) => {
            eprintln!("anderson: not converged: {msg}");
            ExitCode::from(3)
        }
        Ok(Status::ChecksFailed(names)) => {
            eprintln!("anderson: failed checks: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("anderson: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
