//! Text form of single-site laws.
//!
//! | form | law |
//! |---|---|
//! | `point:a` | atom at `a` |
//! | `bernoulli:a,b[,p]` | `a` w.p. `1 − p`, `b` w.p. `p` (default `p = 1/2`) |
//! | `atoms:v@w,v@w,…` | finite law, weights summing to 1 |
//! | `uniform:a,b` | uniform density on `[a, b]` |
//! | `piecewise:b0,…,bk;h1,…,hk` | piecewise-constant density |

use anderson_core::model::SiteDistribution;

use crate::CliError;

fn bad(reason: impl Into<String>) -> CliError {
    CliError::Validation {
        field: "distribution".into(),
        reason: reason.into(),
    }
}

fn numbers(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("`{p}` is not a number")))
        })
        .collect()
}

pub fn parse_distribution(text: &str) -> Result<SiteDistribution, CliError> {
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| bad(format!("expected kind:arguments, got `{text}`")))?;
    let core = |r: anderson_core::Result<SiteDistribution>| r.map_err(|e| bad(e.to_string()));
    match kind.trim() {
        "point" => match numbers(args)?.as_slice() {
            [a] => core(SiteDistribution::point(*a)),
            _ => Err(bad("point takes one value")),
        },
        "bernoulli" => match numbers(args)?.as_slice() {
            [a, b] => core(SiteDistribution::atoms(&[(*a, 0.5), (*b, 0.5)])),
            [a, b, p] if *p > 0.0 && *p < 1.0 => core(SiteDistribution::atoms(&[(*a, 1.0 - p), (*b, *p)])),
            [_, _, p] => Err(bad(format!("bernoulli probability {p} outside (0, 1)"))),
            _ => Err(bad("bernoulli takes a,b or a,b,p")),
        },
        "atoms" => {
            let atoms = args
                .split(',')
                .map(|item| {
                    let (v, w) = item
                        .split_once('@')
                        .ok_or_else(|| bad(format!("atom `{item}` is not value@weight")))?;
                    let v: f64 = v.trim().parse().map_err(|_| bad(format!("`{v}` is not a number")))?;
                    let w: f64 = w.trim().parse().map_err(|_| bad(format!("`{w}` is not a number")))?;
                    Ok((v, w))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            core(SiteDistribution::atoms(&atoms))
        }
        "uniform" => match numbers(args)?.as_slice() {
            [a, b] => core(SiteDistribution::uniform(*a, *b)),
            _ => Err(bad("uniform takes a,b")),
        },
        "piecewise" => {
            let (breaks, heights) = args
                .split_once(';')
                .ok_or_else(|| bad("piecewise takes breaks;heights"))?;
            core(SiteDistribution::piecewise(&numbers(breaks)?, &numbers(heights)?))
        }
        other => Err(bad(format!(
            "unknown kind `{other}` (point, bernoulli, atoms, uniform, piecewise)"
        ))),
    }
}
