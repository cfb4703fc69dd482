use rayon::prelude::*;

use super::grid::{dot, RealGrid};
use super::operators::{InversionMaps, KsOperators};
use super::sigma0_grid;
use crate::model::SiteDistribution;
use crate::{Error, Result};

/// `ρ_L(m, 0)` from the operator-product formula with its refinement budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoOperatorValue {
    pub m: usize,
    pub value: f64,
    pub budget: f64,
}

/// `⟨T1^{m−1} T0^{L−m} φ, U T0^L φ⟩` for `m = 1..=L` at one energy.
fn integrands(dist: &SiteDistribution, energy: f64, l: usize, maps: &InversionMaps) -> Result<Vec<f64>> {
    let ops = KsOperators::new(dist, energy, maps)?;
    let h = maps.grid().spacing();
    let mut powers = vec![ops.phi().values];
    for k in 0..l {
        let next = ops.apply_t0(&powers[k]);
        powers.push(next);
    }
    let right = ops.apply_u(&powers[l]);
    Ok((1..=l)
        .map(|m| {
            let mut left = powers[l - m].clone();
            for _ in 1..m {
                left = ops.apply_t1(&left);
            }
            h * dot(&left, &right)
        })
        .collect())
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

fn check_l(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// `ρ_L(m, 0)` for every `m = 1..=L`, integrated over `energies` (which
/// should cover `Σ0`) by the trapezoid rule.
pub fn rho_operator_profile(
    dist: &SiteDistribution,
    l: usize,
    energies: &[f64],
    grid: RealGrid,
) -> Result<Vec<f64>> {
    check_l(l)?;
    if energies.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "energies",
            reason: "need at least two energies".into(),
        });
    }
    let maps = InversionMaps::new(grid);
    let per_e: Vec<Vec<f64>> = energies
        .par_iter()
        .map(|&e| integrands(dist, e, l, &maps))
        .collect::<Result<_>>()?;
    Ok((0..l)
        .map(|i| {
            let y: Vec<f64> = per_e.iter().map(|row| row[i]).collect();
            trapezoid(energies, &y)
        })
        .collect())
}

/// `ρ_L(m, 0)` for a single `1 ≤ m ≤ L`.
pub fn rho_operator(
    dist: &SiteDistribution,
    l: usize,
    m: usize,
    energies: &[f64],
    grid: RealGrid,
) -> Result<f64> {
    check_l(l)?;
    if m == 0 || m > l {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("must lie in 1..={l}, got {m}"),
        });
    }
    Ok(rho_operator_profile(dist, l, energies, grid)?[m - 1])
}

/// Profile over `e_points` energies on `Σ0` with budget
/// `|v − v_{h/2}| + |v − v_{2X}| + |v − v_{2·e_points}|`.
pub fn rho_operator_with_budget(
    dist: &SiteDistribution,
    l: usize,
    e_points: usize,
    grid: RealGrid,
) -> Result<Vec<RhoOperatorValue>> {
    let energies = sigma0_grid(dist, e_points);
    let base = rho_operator_profile(dist, l, &energies, grid)?;
    let fine_h = rho_operator_profile(dist, l, &energies, grid.refined())?;
    let wide = rho_operator_profile(dist, l, &energies, grid.widened())?;
    let fine_e = rho_operator_profile(dist, l, &sigma0_grid(dist, 2 * e_points - 1), grid)?;
    Ok((0..l)
        .map(|i| RhoOperatorValue {
            m: i + 1,
            value: base[i],
            budget: (base[i] - fine_h[i]).abs() + (base[i] - wide[i]).abs() + (base[i] - fine_e[i]).abs(),
        })
        .collect())
}
