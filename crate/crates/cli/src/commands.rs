//! One runner per subcommand. Each returns its artifacts as text so the
//! caller decides where they go; payloads are deterministic for a fixed
//! config.

use anderson_core::checks::{run_quick_suite, run_suite};
use anderson_core::dynamics::{correlator_profile, default_time_grid, rho_l_monte_carlo};
use anderson_core::furstenberg::{furstenberg_gamma, invariant_measure, MatrixDistribution};
use anderson_core::kunz_souillard::{norm_certify, rho_operator_with_budget, sigma0_grid, PowerParams, RealGrid};
use anderson_core::model::{build_hamiltonian, sample_path};
use anderson_core::num_complex::Complex64;
use anderson_core::rank_one::spectral_average_check;
use anderson_core::spectra::localization_census;
use anderson_core::transfer::lyapunov_estimate;
use serde_json::{json, Value};

use crate::config::{parse_energy_grid, ExperimentConfig};
use crate::dist::parse_distribution;
use crate::CliError;

pub const COMMANDS: [&str; 7] = ["lyapunov", "furstenberg", "spectrum", "dynlocal", "spectral-avg", "ks", "check"];

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Unconverged(String),
    ChecksFailed(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct Artifact {
    /// `csv` or `json`.
    pub extension: &'static str,
    pub content: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub primary: Artifact,
    pub secondary: Option<Artifact>,
    pub status: Status,
}

fn csv(command: &str, hash: &str, columns: &str, rows: Vec<String>) -> Artifact {
    let mut content = format!("# anderson {command} v1 config_hash={hash}\n{columns}\n");
    for r in rows {
        content.push_str(&r);
        content.push('\n');
    }
    Artifact {
        extension: "csv",
        content,
    }
}

fn json_artifact(command: &str, hash: &str, body: Value) -> Artifact {
    let mut v = json!({ "command": command, "version": 1, "config_hash": hash });
    if let (Value::Object(head), Value::Object(rest)) = (&mut v, body) {
        head.extend(rest);
    }
    Artifact {
        extension: "json",
        content: serde_json::to_string_pretty(&v).expect("json serializes") + "\n",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn run(command: &str, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let hash = cfg.hash(command);
    match command {
        "lyapunov" => lyapunov(cfg, &hash),
        "furstenberg" => furstenberg(cfg, &hash),
        "spectrum" => spectrum(cfg, &hash),
        "dynlocal" => dynlocal(cfg, &hash),
        "spectral-avg" => spectral_avg(cfg, &hash),
        "ks" => ks(cfg, &hash),
        "check" => check(cfg, &hash),
        other => Err(CliError::Validation {
            field: "command".into(),
            reason: format!("unknown command `{other}`"),
        }),
    }
}

fn lyapunov(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let d = parse_distribution(&cfg.distribution)?;
    let c = &cfg.lyapunov;
    let rows = parse_energy_grid(&c.energy_grid)?
        .into_iter()
        .map(|e| {
            let est = lyapunov_estimate(&d, e, c.steps, c.realizations, cfg.seed)?;
            Ok(format!("{},{},{},{},{}", e, est.gamma, est.stderr, est.steps, est.realizations))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Report {
        primary: csv("lyapunov", hash, "E,gamma,stderr,n,R", rows),
        secondary: None,
        status: Status::Ok,
    })
}

fn furstenberg(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let d = parse_distribution(&cfg.distribution)?;
    let c = &cfg.furstenberg;
    let md = MatrixDistribution::anderson(&d, c.energy);
    let inv = invariant_measure(&md, c.grid, c.tol, c.max_iter)?;
    let gamma = furstenberg_gamma(&md, &inv.measure);
    let status = if inv.converged {
        Status::Ok
    } else {
        Status::Unconverged(format!(
            "invariant measure residual {:e} above tol {:e} after {} iterations",
            inv.residual, c.tol, inv.iterations
        ))
    };
    Ok(Report {
        primary: json_artifact(
            "furstenberg",
            hash,
            json!({
                "energy": c.energy,
                "grid": c.grid,
                "gamma": gamma,
                "residual": inv.residual,
                "max_bin_weight": inv.measure.max_bin_weight(),
                "iterations": inv.iterations,
                "converged": inv.converged,
            }),
        ),
        secondary: None,
        status,
    })
}

fn spectrum(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let d = parse_distribution(&cfg.distribution)?;
    let c = &cfg.spectrum;
    let census = localization_census(&d, c.l, c.realizations, cfg.seed)?;
    let rows = census
        .rows
        .iter()
        .map(|r| format!("{},{},{},{},{},{}", r.realization, r.k, r.energy, r.rate, r.center, r.r_squared))
        .collect();
    Ok(Report {
        primary: csv("spectrum", hash, "realization,k,E,gamma,center,r2", rows),
        secondary: None,
        status: Status::Ok,
    })
}

fn dynlocal(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let d = parse_distribution(&cfg.distribution)?;
    let c = &cfg.dynlocal;
    let rows = correlator_profile(&d, c.l, c.m_max, c.realizations, cfg.seed, &default_time_grid())?
        .iter()
        .map(|r| format!("{},{},{},{}", r.m, r.rho_mean, r.rho_stderr, r.sup_sampled_mean))
        .collect();
    Ok(Report {
        primary: csv("dynlocal", hash, "m,rho_mean,rho_stderr,sup_sampled_mean", rows),
        secondary: None,
        status: Status::Ok,
    })
}

fn spectral_avg(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let d = parse_distribution(&cfg.distribution)?;
    let c = &cfg.spectral_avg;
    let l = (c.size / 2) as i64;
    let h = build_hamiltonian(&sample_path(&d, cfg.seed, 0, (-l, l))?)?;
    let z = Complex64::new(c.z[0], c.z[1]);
    let mut reports = Vec::new();
    for site in [0i64, 1] {
        let mut phi = vec![0.0; c.size];
        phi[(l + site) as usize] = 1.0;
        let r = spectral_average_check(&h, &phi, z, c.lambda_max, c.tol, c.max_intervals)?;
        reports.push(json!({
            "phi": format!("delta_{site}"),
            "integral_re": r.integral.re,
            "integral_im": r.integral.im,
            "target": [r.target.re, r.target.im],
            "defect": r.defect,
            "tail_re": r.tail.re,
            "tail_im": r.tail.im,
            "quadrature_error": r.quadrature_error,
            "evaluations": r.evaluations,
        }));
    }
    Ok(Report {
        primary: json_artifact(
            "spectral-avg",
            hash,
            json!({ "size": c.size, "z": c.z, "lambda_max": c.lambda_max, "reports": reports }),
        ),
        secondary: None,
        status: Status::Ok,
    })
}

fn ks(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let d = parse_distribution(&cfg.distribution)?;
    let c = &cfg.ks;
    let rho = rho_operator_with_budget(&d, c.l, c.e_points, RealGrid::new(c.grid_x, c.grid_n)?)?;
    let rows = rho[..c.m_max]
        .iter()
        .map(|v| {
            let mc = rho_l_monte_carlo(&d, c.l, v.m as i64, 0, c.realizations, cfg.seed)?;
            Ok(format!("{},{},{},{},{}", v.m, v.value, mc.value, mc.stderr, v.budget))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let params = PowerParams {
        max_iter: c.power_max_iter,
        tol: c.power_tol,
    };
    let norms = norm_certify(
        &d,
        &sigma0_grid(&d, c.e_points),
        RealGrid::new(c.norm_grid_x, c.norm_grid_n)?,
        params,
    )?;
    let rows_json: Vec<Value> = norms
        .rows
        .iter()
        .map(|r| {
            json!({
                "energy": r.energy,
                "t0_1_1": r.t0_1_1,
                "t0_1_2": r.t0_1_2,
                "t1_2_2": r.t1_2_2,
                "t1_squared_2_2": r.t1_squared_2_2,
                "power_converged": r.power_converged,
            })
        })
        .collect();
    let b = &norms.budgets;
    let status = if norms.converged {
        Status::Ok
    } else {
        Status::Unconverged(format!(
            "norm certificate: budget {:e} against margin δ = {:e} (needs budget <= 0.1·δ and converged power iterations)",
            b.t1_squared_2_2, norms.delta
        ))
    };
    let report = json_artifact(
        "ks",
        hash,
        json!({
            "grid_x": norms.grid.half_width(),
            "grid_n": norms.grid.points(),
            "sup_t0_1_1": norms.sup_t0_1_1,
            "sup_t0_1_2": norms.sup_t0_1_2,
            "sup_t1_2_2": norms.sup_t1_2_2,
            "sup_t1_squared_2_2": norms.sup_t1_squared_2_2,
            "delta": norms.delta,
            "spread_t1_squared": norms.spread_t1_squared,
            "refined_sup_t1_squared": norms.refined_sup_t1_squared,
            "budgets": {
                "t0_1_1": b.t0_1_1,
                "t0_1_2": b.t0_1_2,
                "t1_2_2": b.t1_2_2,
                "t1_squared_2_2": b.t1_squared_2_2,
            },
            "converged": norms.converged,
            "rows": rows_json,
        }),
    );
    Ok(Report {
        primary: csv("ks", hash, "m,rho_operator,rho_mc,mc_stderr,budget", rows),
        secondary: Some(report),
        status,
    })
}

fn check(cfg: &ExperimentConfig, hash: &str) -> Result<Report, CliError> {
    let outcomes = if cfg.check.quick {
        run_quick_suite(cfg.seed)?
    } else {
        run_suite(cfg.seed)?
    };
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.to_string()).collect();
    let rows = outcomes
        .iter()
        .map(|o| format!("{},{},{:.3},{}", quote(o.name), o.passed, o.seconds, quote(&o.detail)))
        .collect();
    Ok(Report {
        primary: csv("check", hash, "check,passed,seconds,detail", rows),
        secondary: None,
        status: if failed.is_empty() {
            Status::Ok
        } else {
            Status::ChecksFailed(failed)
        },
    })
}
