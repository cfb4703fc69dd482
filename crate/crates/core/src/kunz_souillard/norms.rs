use rayon::prelude::*;

use super::grid::{dot, RealGrid};
use super::operators::{InversionMaps, KsOperators};
use crate::model::SiteDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams {
    pub max_iter: usize,
    /// Stop once the relative change of the estimate drops below this.
    pub tol: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    /// `‖A x‖` for the final unit iterate `x`, a lower bound on `‖A‖`.
    pub norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub vector: Vec<f64>,
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Largest singular value of `A` by power iteration on `AᵀA`.
pub fn power_norm(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_transpose: impl Fn(&[f64]) -> Vec<f64>,
    start: Vec<f64>,
    params: PowerParams,
) -> PowerResult {
    let mut x = start;
    if normalize(&mut x) == 0.0 {
        return PowerResult {
            norm: 0.0,
            iterations: 0,
            converged: true,
            vector: x,
        };
    }
    let mut norm = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let y = apply(&x);
        let sigma = dot(&y, &y).sqrt();
        iterations += 1;
        let change = (sigma - norm).abs();
        norm = sigma;
        if sigma == 0.0 {
            converged = true;
            break;
        }
        let mut z = apply_transpose(&y);
        if normalize(&mut z) == 0.0 {
            converged = true;
            break;
        }
        x = z;
        if iterations > 1 && change <= params.tol * sigma {
            converged = true;
            break;
        }
    }
    PowerResult {
        norm,
        iterations,
        converged,
        vector: x,
    }
}

/// Per-energy operator norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub energy: f64,
    pub t0_1_1: f64,
    pub t0_1_2: f64,
    pub t1_2_2: f64,
    pub t1_squared_2_2: f64,
    pub power_converged: bool,
}

/// Empirical discretization gaps, one per reported norm: the largest
/// change over the energy grid when `h` is halved plus the largest change
/// when `X` is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormBudgets {
    pub t0_1_1: f64,
    pub t0_1_2: f64,
    pub t1_2_2: f64,
    pub t1_squared_2_2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub grid: RealGrid,
    pub rows: Vec<NormRow>,
    pub sup_t0_1_1: f64,
    pub sup_t0_1_2: f64,
    pub sup_t1_2_2: f64,
    pub sup_t1_squared_2_2: f64,
    /// `1 − sup ‖T1²‖`.
    pub delta: f64,
    /// `max − min` of `‖T1²‖` over the energy grid.
    pub spread_t1_squared: f64,
    pub budgets: NormBudgets,
    /// `sup ‖T1²‖` on the grid with half the spacing.
    pub refined_sup_t1_squared: f64,
    /// False when the budget exceeds 10% of `δ` or a power iteration
    /// stalled.
    pub converged: bool,
}

struct Computed {
    row: NormRow,
    v1: Vec<f64>,
    v2: Vec<f64>,
}

fn norms_at(
    dist: &SiteDistribution,
    energy: f64,
    maps: &InversionMaps,
    params: PowerParams,
    warm: Option<(Vec<f64>, Vec<f64>)>,
) -> Result<Computed> {
    let ops = KsOperators::new(dist, energy, maps)?;
    let n = maps.grid().points();
    let (s1, s2) = warm.unwrap_or_else(|| (vec![1.0; n], vec![1.0; n]));
    let t1 = power_norm(|f| ops.apply_t1(f), |f| ops.apply_t1_transpose(f), s1, params);
    let t1sq = power_norm(
        |f| ops.apply_t1(&ops.apply_t1(f)),
        |f| ops.apply_t1_transpose(&ops.apply_t1_transpose(f)),
        s2,
        params,
    );
    Ok(Computed {
        row: NormRow {
            energy,
            t0_1_1: ops.t0_norm_1_1(),
            t0_1_2: ops.t0_norm_1_2(),
            t1_2_2: t1.norm,
            t1_squared_2_2: t1sq.norm,
            power_converged: t1.converged && t1sq.converged,
        },
        v1: t1.vector,
        v2: t1sq.vector,
    })
}

fn rows_on(
    dist: &SiteDistribution,
    energies: &[f64],
    grid: RealGrid,
    params: PowerParams,
    warm: Option<Vec<(Vec<f64>, Vec<f64>)>>,
) -> Result<Vec<Computed>> {
    let maps = InversionMaps::new(grid);
    let warm: Vec<Option<(Vec<f64>, Vec<f64>)>> = match warm {
        Some(w) => w.into_iter().map(Some).collect(),
        None => vec![None; energies.len()],
    };
    energies
        .par_iter()
        .zip(warm)
        .map(|(&e, w)| norms_at(dist, e, &maps, params, w))
        .collect()
}

fn duplicate(v: &[f64]) -> Vec<f64> {
    v.iter().flat_map(|x| [*x, *x]).collect()
}

fn pad(v: &[f64]) -> Vec<f64> {
    let q = v.len() / 2;
    let mut out = vec![0.0; q];
    out.extend_from_slice(v);
    out.extend(std::iter::repeat_n(0.0, q));
    out
}

fn max_gap(a: &[Computed], b: &[Computed], f: impl Fn(&NormRow) -> f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (f(&x.row) - f(&y.row)).abs())
        .fold(0.0, f64::max)
}

fn sup(rows: &[NormRow], f: impl Fn(&NormRow) -> f64) -> f64 {
    rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Norms of the discretized `T0`, `T1`, `T1²` on each energy of `energies`,
/// with budgets from one `h`-halving and one `X`-doubling run. The refined
/// runs are warm-started from the base singular vectors.
pub fn norm_certify(
    dist: &SiteDistribution,
    energies: &[f64],
    grid: RealGrid,
    params: PowerParams,
) -> Result<NormReport> {
    if energies.is_empty() {
        return Err(Error::InvalidParameter {
            name: "energies",
            reason: "must be non-empty".into(),
        });
    }
    let base = rows_on(dist, energies, grid, params, None)?;
    let warm_h = base.iter().map(|c| (duplicate(&c.v1), duplicate(&c.v2))).collect();
    let refined = rows_on(dist, energies, grid.refined(), params, Some(warm_h))?;
    let warm_x = base.iter().map(|c| (pad(&c.v1), pad(&c.v2))).collect();
    let widened = rows_on(dist, energies, grid.widened(), params, Some(warm_x))?;

    let budget = |f: fn(&NormRow) -> f64| max_gap(&base, &refined, f) + max_gap(&base, &widened, f);
    let budgets = NormBudgets {
        t0_1_1: budget(|r| r.t0_1_1),
        t0_1_2: budget(|r| r.t0_1_2),
        t1_2_2: budget(|r| r.t1_2_2),
        t1_squared_2_2: budget(|r| r.t1_squared_2_2),
    };
    let rows: Vec<NormRow> = base.iter().map(|c| c.row).collect();
    let sup_t1_squared_2_2 = sup(&rows, |r| r.t1_squared_2_2);
    let min_t1_squared = rows.iter().map(|r| r.t1_squared_2_2).fold(f64::INFINITY, f64::min);
    let delta = 1.0 - sup_t1_squared_2_2;
    let refined_rows: Vec<NormRow> = refined.iter().map(|c| c.row).collect();
    let all_converged = base.iter().chain(&refined).chain(&widened).all(|c| c.row.power_converged);
    Ok(NormReport {
        grid,
        sup_t0_1_1: sup(&rows, |r| r.t0_1_1),
        sup_t0_1_2: sup(&rows, |r| r.t0_1_2),
        sup_t1_2_2: sup(&rows, |r| r.t1_2_2),
        sup_t1_squared_2_2,
        delta,
        spread_t1_squared: sup_t1_squared_2_2 - min_t1_squared,
        refined_sup_t1_squared: sup(&refined_rows, |r| r.t1_squared_2_2),
        converged: all_converged && delta > 0.0 && budgets.t1_squared_2_2 <= 0.1 * delta,
        budgets,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_on_diagonal() {
        let d = [3.0, -5.0, 1.0, 0.5];
        let apply = |x: &[f64]| x.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let r = power_norm(apply, apply, vec![1.0; 4], PowerParams::default());
        assert!(r.converged);
        assert!((r.norm - 5.0).abs() < 1e-8);
    }

    #[test]
    fn power_iteration_non_symmetric() {
        // [[1, 2], [0, 1]] has norm 1 + √2
        let a = |x: &[f64]| vec![x[0] + 2.0 * x[1], x[1]];
        let at = |x: &[f64]| vec![x[0], 2.0 * x[0] + x[1]];
        let r = power_norm(a, at, vec![1.0, 0.0], PowerParams::default());
        assert!((r.norm - (1.0 + 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn small_grid_report_is_consistent() {
        let d = SiteDistribution::uniform(0.0, 1.0).unwrap();
        let energies = [-1.0, 0.5, 2.0];
        let rep = norm_certify(&d, &energies, RealGrid::new(8.0, 512).unwrap(), PowerParams::default()).unwrap();
        assert_eq!(rep.rows.len(), 3);
        for r in &rep.rows {
            assert!(r.t0_1_1 <= 1.0 + 1e-12);
            assert!(r.t1_2_2 <= 1.0 + 1e-9);
            assert!(r.t1_squared_2_2 <= r.t1_2_2 * r.t1_2_2 + 1e-9);
            assert!(r.t0_1_2 > 0.0);
        }
        assert_eq!(rep.sup_t1_squared_2_2, rep.rows.iter().map(|r| r.t1_squared_2_2).fold(0.0, f64::max));
        assert!(rep.delta > 0.0);
    }
}
