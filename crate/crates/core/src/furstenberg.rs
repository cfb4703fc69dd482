//! Projective dynamics on P¹: the discretized convolution `m ↦ ν ∗ m`, its
//! fixed point, the exponent formula `γ = ∬ log ‖Mv‖ dν(M) dm(v)` and a
//! Dirac-concentration diagnostic.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::model::{DistKind, SiteDistribution};
use crate::quadrature::gauss_legendre;
use crate::rng::CounterRng;
use crate::transfer::{step_matrix, Mat2, ScaledProduct, Sl2};
use crate::{Error, Result};

/// Gauss-Legendre points per density piece when expanding an Anderson law.
pub const DENSITY_NODES: usize = 64;

/// A point of P¹, represented by its angle in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePoint(f64);

impl ProjectivePoint {
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(PI);
        if t >= PI {
            t = 0.0;
        }
        Self(t)
    }

    pub fn from_vector(v: [f64; 2]) -> Self {
        Self::new(v[1].atan2(v[0]))
    }

    pub fn theta(&self) -> f64 {
        self.0
    }

    pub fn unit_vector(&self) -> [f64; 2] {
        [self.0.cos(), self.0.sin()]
    }

    /// Distance on P¹ (angles identified mod π).
    pub fn distance(a: Self, b: Self) -> f64 {
        let d = (a.0 - b.0).abs();
        d.min(PI - d)
    }
}

pub fn project_action(m: &Sl2, p: ProjectivePoint) -> ProjectivePoint {
    ProjectivePoint::from_vector(m.matrix().apply(p.unit_vector()))
}

/// Probability weights on the bin centers `θ_j = (j + ½)π/G`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasure {
    weights: Vec<f64>,
}

impl ProjectiveMeasure {
    pub fn uniform(grid: usize) -> Self {
        Self {
            weights: vec![1.0 / grid as f64; grid],
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "must be non-empty and nonnegative".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Unnormalized { total });
        }
        Ok(Self { weights })
    }

    pub fn grid_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * PI / self.weights.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_bin_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// `½ Σ |a_j − b_j|`.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// `1 − |Σ m_j e^{2iθ_j}|`; zero exactly for a point mass.
    pub fn circular_variance(&self) -> f64 {
        let angles: Vec<f64> = (0..self.grid_size()).map(|j| self.center(j)).collect();
        circular_variance_of(&self.weights, &angles)
    }
}

fn circular_variance_of(weights: &[f64], angles: &[f64]) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (w, t) in weights.iter().zip(angles) {
        re += w * (2.0 * t).cos();
        im += w * (2.0 * t).sin();
    }
    (1.0 - re.hypot(im)).max(0.0)
}

/// A finitely supported law on SL(2,R). An Anderson law built from a site
/// distribution remembers its source so that sampling stays exact even when
/// the support list is a quadrature of a density.
#[derive(Debug, Clone)]
pub struct MatrixDistribution {
    support: Vec<(Sl2, f64)>,
    cumulative: Vec<f64>,
    source: Option<(SiteDistribution, f64)>,
}

impl MatrixDistribution {
    pub fn new(support: Vec<(Sl2, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty matrix support".into()));
        }
        if support.iter().any(|(_, w)| !(*w > 0.0)) {
            return Err(Error::InvalidDistribution("weights must be positive".into()));
        }
        let total: f64 = support.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Unnormalized { total });
        }
        Ok(Self::build(support, None))
    }

    fn build(support: Vec<(Sl2, f64)>, source: Option<(SiteDistribution, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = support
            .iter()
            .map(|(_, w)| {
                acc += w;
                acc
            })
            .collect();
        Self {
            support,
            cumulative,
            source,
        }
    }

    /// Law of the one-step matrix `[[E − v, −1], [1, 0]]` with `v ~ ν`.
    /// Densities are expanded piece by piece with a 64-point Gauss-Legendre
    /// rule.
    pub fn anderson(dist: &SiteDistribution, energy: f64) -> Self {
        let support = match dist.kind() {
            DistKind::Atomic => dist
                .atom_list()
                .unwrap_or(&[])
                .iter()
                .map(|a| (step_matrix(energy, a.value), a.weight))
                .collect(),
            DistKind::Density => {
                let (x, w) = gauss_legendre(DENSITY_NODES);
                let mut out = Vec::new();
                for (a, b, h) in dist.density_pieces().unwrap_or_default() {
                    if h == 0.0 {
                        continue;
                    }
                    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                    for (xi, wi) in x.iter().zip(&w) {
                        out.push((step_matrix(energy, mid + half * xi), wi * half * h));
                    }
                }
                out
            }
        };
        Self::build(support, Some((dist.clone(), energy)))
    }

    pub fn support(&self) -> &[(Sl2, f64)] {
        &self.support
    }

    /// Draws a matrix from a uniform variate `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> Sl2 {
        if let Some((dist, energy)) = &self.source {
            return step_matrix(*energy, dist.quantile(u));
        }
        let target = u * self.cumulative.last().copied().unwrap_or(1.0);
        let i = self.cumulative.partition_point(|c| *c <= target);
        self.support[i.min(self.support.len() - 1)].0
    }
}

/// Linear-interpolation deposit table of one matrix on a grid of `G` bins.
struct Deposit {
    lower: Vec<u32>,
    frac: Vec<f64>,
}

fn deposit_table(m: &Mat2, grid: usize) -> Deposit {
    let bin = PI / grid as f64;
    let mut lower = Vec::with_capacity(grid);
    let mut frac = Vec::with_capacity(grid);
    for j in 0..grid {
        let t = (j as f64 + 0.5) * bin;
        let image = ProjectivePoint::from_vector(m.apply([t.cos(), t.sin()])).theta();
        let x = image / bin - 0.5;
        let i0 = x.floor();
        lower.push((i0 as i64).rem_euclid(grid as i64) as u32);
        frac.push(x - i0);
    }
    Deposit { lower, frac }
}

/// Precomputed discretized convolution operator `m ↦ ν ∗ m` on `G` bins.
pub struct Convolution {
    grid: usize,
    tables: Vec<(Deposit, f64)>,
}

impl Convolution {
    pub fn new(md: &MatrixDistribution, grid: usize) -> Self {
        let tables = md
            .support
            .par_iter()
            .map(|(m, w)| (deposit_table(m.matrix(), grid), *w))
            .collect();
        Self { grid, tables }
    }

    pub fn apply(&self, m: &ProjectiveMeasure) -> ProjectiveMeasure {
        let g = self.grid;
        let partials: Vec<Vec<f64>> = self
            .tables
            .par_iter()
            .map(|(t, w)| {
                let mut out = vec![0.0; g];
                for (j, &mj) in m.weights.iter().enumerate() {
                    let mass = w * mj;
                    let lo = t.lower[j] as usize;
                    let hi = if lo + 1 == g { 0 } else { lo + 1 };
                    out[lo] += mass * (1.0 - t.frac[j]);
                    out[hi] += mass * t.frac[j];
                }
                out
            })
            .collect();
        let mut weights = vec![0.0; g];
        for p in &partials {
            for (acc, v) in weights.iter_mut().zip(p) {
                *acc += v;
            }
        }
        ProjectiveMeasure { weights }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantMeasure {
    pub measure: ProjectiveMeasure,
    /// Total-variation change of the last iteration.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fixed-point iteration of the discretized convolution from the uniform
/// measure, stopped once the total-variation change drops below `tol`.
pub fn invariant_measure(
    md: &MatrixDistribution,
    grid: usize,
    tol: f64,
    max_iter: usize,
) -> Result<InvariantMeasure> {
    if grid < 64 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("need at least 64 bins, got {grid}"),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: "must be positive".into(),
        });
    }
    let op = Convolution::new(md, grid);
    let mut m = ProjectiveMeasure::uniform(grid);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = op.apply(&m);
        residual = next.tv_distance(&m);
        m = next;
        iterations += 1;
        if residual < tol {
            break;
        }
    }
    Ok(InvariantMeasure {
        measure: m,
        residual,
        iterations,
        converged: residual < tol,
    })
}

/// `Σ_M w(M) Σ_j m_j log ‖M u(θ_j)‖`.
pub fn furstenberg_gamma(md: &MatrixDistribution, m: &ProjectiveMeasure) -> f64 {
    let units: Vec<[f64; 2]> = (0..m.grid_size())
        .map(|j| {
            let t = m.center(j);
            [t.cos(), t.sin()]
        })
        .collect();
    let per: Vec<f64> = md
        .support
        .par_iter()
        .map(|(mat, w)| {
            let mut s = 0.0;
            for (u, mj) in units.iter().zip(&m.weights) {
                let v = mat.matrix().apply(*u);
                s += mj * v[0].hypot(v[1]).ln();
            }
            w * s
        })
        .collect();
    per.iter().sum()
}

/// Mean over `trials` sampled products `M_n(ω)` of the circular variance of
/// the pushforward `M_n(ω) · m`. Values near 0 mean the pushed measure is
/// close to a point mass.
pub fn concentration_diagnostic(
    md: &MatrixDistribution,
    m: &ProjectiveMeasure,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "must be at least 1".into(),
        });
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = CounterRng::at(seed, trial, 0);
            let mut p = ScaledProduct::identity();
            for _ in 0..n {
                p.push(md.sample(rng.next_uniform()).matrix());
            }
            let p = p.matrix();
            let angles: Vec<f64> = (0..m.grid_size())
                .map(|j| {
                    let t = m.center(j);
                    ProjectivePoint::from_vector(p.apply([t.cos(), t.sin()])).theta()
                })
                .collect();
            circular_variance_of(&m.weights, &angles)
        })
        .collect();
    Ok(values.iter().sum::<f64>() / trials as f64)
}
