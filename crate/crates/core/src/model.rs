//! Single-site distributions, sampled potential paths and finite-volume
//! Hamiltonians `H_L` on `{-L, ..., L}` with Dirichlet truncation.

use serde::{Deserialize, Serialize};

use crate::rng::CounterRng;
use crate::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistKind {
    Atomic,
    Density,
}

/// The single-site measure: finitely many atoms, or a piecewise-constant
/// density on a declared partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteDistribution {
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Atoms {
        atoms: Vec<Atom>,
        cumulative: Vec<f64>,
    },
    Density {
        breaks: Vec<f64>,
        heights: Vec<f64>,
        /// CDF at each break.
        cumulative: Vec<f64>,
    },
}

impl SiteDistribution {
    /// Atomic measure; atoms are sorted by value and must carry positive
    /// weights summing to 1.
    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut list: Vec<Atom> = atoms
            .iter()
            .map(|&(value, weight)| Atom { value, weight })
            .collect();
        for a in &list {
            if !a.value.is_finite() || !a.weight.is_finite() || a.weight <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "atom ({}, {}) needs a finite value and positive weight",
                    a.value, a.weight
                )));
            }
        }
        let total: f64 = list.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { total });
        }
        list.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mut acc = 0.0;
        let cumulative = list
            .iter()
            .map(|a| {
                acc += a.weight;
                acc
            })
            .collect();
        Ok(Self {
            repr: Repr::Atoms {
                atoms: list,
                cumulative,
            },
        })
    }

    /// Point mass at `a` (constant potential).
    pub fn point(a: f64) -> Result<Self> {
        Self::atoms(&[(a, 1.0)])
    }

    /// Uniform density on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidDistribution(format!(
                "uniform support [{a}, {b}] must be a finite non-degenerate interval"
            )));
        }
        Self::piecewise(&[a, b], &[1.0 / (b - a)])
    }

    /// Piecewise-constant density: `heights[i]` on `[breaks[i], breaks[i+1]]`.
    pub fn piecewise(breaks: &[f64], heights: &[f64]) -> Result<Self> {
        if breaks.len() < 2 || heights.len() + 1 != breaks.len() {
            return Err(Error::InvalidDistribution(
                "piecewise density needs n+1 breaks for n heights".into(),
            ));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "breaks must be finite and strictly increasing".into(),
            ));
        }
        if heights.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::InvalidDistribution(
                "heights must be finite and non-negative".into(),
            ));
        }
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (w, h) in breaks.windows(2).zip(heights) {
            acc += h * (w[1] - w[0]);
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized { total: acc });
        }
        Ok(Self {
            repr: Repr::Density {
                breaks: breaks.to_vec(),
                heights: heights.to_vec(),
                cumulative,
            },
        })
    }

    pub fn kind(&self) -> DistKind {
        match self.repr {
            Repr::Atoms { .. } => DistKind::Atomic,
            Repr::Density { .. } => DistKind::Density,
        }
    }

    pub fn atom_list(&self) -> Option<&[Atom]> {
        match &self.repr {
            Repr::Atoms { atoms, .. } => Some(atoms),
            Repr::Density { .. } => None,
        }
    }

    /// `(a, b, height)` for each piece of a density, `None` for atoms.
    pub fn density_pieces(&self) -> Option<Vec<(f64, f64, f64)>> {
        match &self.repr {
            Repr::Atoms { .. } => None,
            Repr::Density {
                breaks, heights, ..
            } => Some(
                breaks
                    .windows(2)
                    .zip(heights)
                    .map(|(w, &h)| (w[0], w[1], h))
                    .collect(),
            ),
        }
    }

    /// Smallest closed interval containing the support.
    pub fn support_hull(&self) -> (f64, f64) {
        let pieces = self.support_pieces();
        (pieces[0].0, pieces[pieces.len() - 1].1)
    }

    /// The support as a sorted list of disjoint closed intervals (degenerate
    /// for atoms).
    pub fn support_pieces(&self) -> Vec<(f64, f64)> {
        match &self.repr {
            Repr::Atoms { atoms, .. } => atoms.iter().map(|a| (a.value, a.value)).collect(),
            Repr::Density {
                breaks, heights, ..
            } => {
                let raw: Vec<(f64, f64)> = breaks
                    .windows(2)
                    .zip(heights)
                    .filter(|(_, &h)| h > 0.0)
                    .map(|(w, _)| (w[0], w[1]))
                    .collect();
                merge_intervals(raw, MERGE_TOL)
            }
        }
    }

    /// `M = max{|E| : E in supp}`.
    pub fn support_radius(&self) -> f64 {
        let (lo, hi) = self.support_hull();
        lo.abs().max(hi.abs())
    }

    /// `‖r‖_∞` for densities, `None` for atoms.
    pub fn density_max(&self) -> Option<f64> {
        match &self.repr {
            Repr::Atoms { .. } => None,
            Repr::Density { heights, .. } => Some(heights.iter().cloned().fold(0.0, f64::max)),
        }
    }

    /// Density value (right-continuous at breaks). Zero for atoms.
    pub fn density(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { .. } => 0.0,
            Repr::Density {
                breaks, heights, ..
            } => {
                if x < breaks[0] || x >= breaks[breaks.len() - 1] {
                    return 0.0;
                }
                let i = breaks.partition_point(|b| *b <= x) - 1;
                heights[i]
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { atoms, cumulative } => {
                let i = atoms.partition_point(|a| a.value <= x);
                if i == 0 {
                    0.0
                } else {
                    cumulative[i - 1]
                }
            }
            Repr::Density {
                breaks,
                heights,
                cumulative,
            } => {
                if x <= breaks[0] {
                    return 0.0;
                }
                if x >= breaks[breaks.len() - 1] {
                    return 1.0;
                }
                let i = breaks.partition_point(|b| *b <= x) - 1;
                cumulative[i] + heights[i] * (x - breaks[i])
            }
        }
    }

    /// Inverse CDF: maps a uniform variate in `[0, 1)` to a sample.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { atoms, cumulative } => {
                let i = cumulative.partition_point(|c| *c <= u);
                atoms[i.min(atoms.len() - 1)].value
            }
            Repr::Density {
                breaks,
                heights,
                cumulative,
            } => {
                let n = heights.len();
                // first piece whose upper CDF exceeds u and carries mass
                let mut i = cumulative[1..].partition_point(|c| *c <= u).min(n - 1);
                while heights[i] == 0.0 && i + 1 < n {
                    i += 1;
                }
                let x = breaks[i] + (u - cumulative[i]) / heights[i];
                x.clamp(breaks[i], breaks[i + 1])
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.repr {
            Repr::Atoms { atoms, .. } => atoms.iter().map(|a| a.value * a.weight).sum(),
            Repr::Density {
                breaks, heights, ..
            } => breaks
                .windows(2)
                .zip(heights)
                .map(|(w, h)| h * 0.5 * (w[1] * w[1] - w[0] * w[0]))
                .sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        match &self.repr {
            Repr::Atoms { atoms, .. } => atoms
                .iter()
                .map(|a| a.weight * (a.value - m).powi(2))
                .sum(),
            Repr::Density {
                breaks, heights, ..
            } => breaks
                .windows(2)
                .zip(heights)
                .map(|(w, h)| h * ((w[1] - m).powi(3) - (w[0] - m).powi(3)) / 3.0)
                .sum(),
        }
    }

    /// `∫ r(s) (h - |s - c|)_+ ds`, the density integrated against a hat of
    /// half-width `h` centred at `c`. Exact for piecewise-constant densities.
    pub fn hat_integral(&self, c: f64, h: f64) -> f64 {
        let Repr::Density {
            breaks, heights, ..
        } = &self.repr
        else {
            return 0.0;
        };
        // ∫_{lo}^{hi} (h - |s - c|) ds on each side of c
        let left = |a: f64, b: f64| -> f64 {
            // s in [a, b] ⊂ [c - h, c]: integrand h - (c - s)
            let (a, b) = (a.max(c - h), b.min(c));
            if b <= a {
                return 0.0;
            }
            (h - c) * (b - a) + 0.5 * (b * b - a * a)
        };
        let right = |a: f64, b: f64| -> f64 {
            let (a, b) = (a.max(c), b.min(c + h));
            if b <= a {
                return 0.0;
            }
            (h + c) * (b - a) - 0.5 * (b * b - a * a)
        };
        let first = breaks.partition_point(|b| *b <= c - h).saturating_sub(1);
        let mut total = 0.0;
        for i in first..heights.len() {
            let (a, b) = (breaks[i], breaks[i + 1]);
            if a >= c + h {
                break;
            }
            if heights[i] != 0.0 {
                total += heights[i] * (left(a, b) + right(a, b));
            }
        }
        total
    }
}

/// Sorts and merges closed intervals whose gaps are at most `tol`.
pub fn merge_intervals(mut raw: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for (a, b) in raw {
        match out.last_mut() {
            Some(last) if a <= last.1 + tol => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// A realization of the potential restricted to a finite window of sites.
///
/// `values[i]` is the potential at site `lo + i` of the shifted sequence
/// `T^shift ω`, i.e. it equals `ω_{lo + i + shift}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPath {
    lo: i64,
    hi: i64,
    values: Vec<f64>,
    seed: u64,
    realization: u64,
    shift: i64,
}

impl PotentialPath {
    /// Path with explicitly given values on `[lo, lo + len - 1]`.
    pub fn from_values(lo: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "empty path".into(),
            });
        }
        let hi = lo + values.len() as i64 - 1;
        Ok(Self {
            lo,
            hi,
            values,
            seed: 0,
            realization: 0,
            shift: 0,
        })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, site: i64) -> Result<f64> {
        if site < self.lo || site > self.hi {
            return Err(Error::SiteOutOfWindow {
                site,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(self.values[(site - self.lo) as usize])
    }

    /// Values at sites `from..=to`.
    pub fn slice(&self, from: i64, to: i64) -> Result<&[f64]> {
        if from < self.lo || to > self.hi || to < from {
            return Err(Error::WindowTooShort {
                lo: self.lo,
                hi: self.hi,
                need_lo: from,
                need_hi: to,
            });
        }
        Ok(&self.values[(from - self.lo) as usize..=(to - self.lo) as usize])
    }

    /// The path of `T^k ω`: `(T^k ω)_n = ω_{n+k}`. Pure reindexing.
    pub fn shifted(&self, k: i64) -> Self {
        Self {
            lo: self.lo - k,
            hi: self.hi - k,
            values: self.values.clone(),
            seed: self.seed,
            realization: self.realization,
            shift: self.shift + k,
        }
    }

    /// Mirror image `n ↦ -n`, used to run the rightward cocycle leftwards.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            lo: -self.hi,
            hi: -self.lo,
            values,
            seed: self.seed,
            realization: self.realization,
            shift: self.shift,
        }
    }
}

/// i.i.d. samples of `dist` on `window = (lo, hi)`, keyed by
/// `(seed, realization, site)`.
pub fn sample_path(
    dist: &SiteDistribution,
    seed: u64,
    realization: u64,
    window: (i64, i64),
) -> Result<PotentialPath> {
    let (lo, hi) = window;
    if hi < lo {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: format!("[{lo}, {hi}] is empty"),
        });
    }
    let mut rng = CounterRng::at(seed, realization, lo);
    let values = (lo..=hi).map(|_| dist.quantile(rng.next_uniform())).collect();
    Ok(PotentialPath {
        lo,
        hi,
        values,
        seed,
        realization,
        shift: 0,
    })
}

/// `H_L`: the restriction to `{-L, ..., L}`, diagonal = potential, unit
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHamiltonian {
    half_width: usize,
    diagonal: Vec<f64>,
}

impl FiniteHamiltonian {
    /// From a diagonal of odd length `2L + 1`.
    pub fn from_diagonal(diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "diagonal",
                reason: format!("length {} is not odd", diagonal.len()),
            });
        }
        Ok(Self {
            half_width: diagonal.len() / 2,
            diagonal,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn diagonal_mut(&mut self) -> &mut [f64] {
        &mut self.diagonal
    }

    /// Array index of site `n ∈ [-L, L]`.
    pub fn index_of(&self, site: i64) -> Result<usize> {
        let l = self.half_width as i64;
        if site < -l || site > l {
            return Err(Error::SiteOutOfWindow {
                site,
                lo: -l,
                hi: l,
            });
        }
        Ok((site + l) as usize)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut acc = self.diagonal[i] * v[i];
                if i > 0 {
                    acc += v[i - 1];
                }
                if i + 1 < n {
                    acc += v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diagonal[i];
            if i + 1 < n {
                m[i][i + 1] = 1.0;
                m[i + 1][i] = 1.0;
            }
        }
        m
    }
}

/// `H_L` for a path on the symmetric window `[-L, L]`.
pub fn build_hamiltonian(path: &PotentialPath) -> Result<FiniteHamiltonian> {
    let (lo, hi) = path.window();
    if lo != -hi {
        return Err(Error::AsymmetricWindow { lo, hi });
    }
    FiniteHamiltonian::from_diagonal(path.values().to_vec())
}

/// `Σ0 = [-2 - M, 2 + M]`, containing every finite-volume spectrum.
pub fn gershgorin_window(dist: &SiteDistribution) -> (f64, f64) {
    let m = dist.support_radius();
    (-2.0 - m, 2.0 + m)
}

/// A finite union of disjoint closed intervals, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(a, b)| x >= a - tol && x <= b + tol)
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// `Σ = [-2, 2] + supp ν` as a minimal union of closed intervals.
pub fn almost_sure_spectrum(dist: &SiteDistribution) -> IntervalUnion {
    let raw = dist
        .support_pieces()
        .into_iter()
        .map(|(a, b)| (a - 2.0, b + 2.0))
        .collect();
    IntervalUnion {
        intervals: merge_intervals(raw, MERGE_TOL),
    }
}

/// `(1/n) Σ_{m=0}^{n-1} ω_m`, the Birkhoff average of `f(ω) = ω_0` along the
/// shift.
pub fn birkhoff_average(dist: &SiteDistribution, seed: u64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    let mut rng = CounterRng::at(seed, 0, 0);
    let sum: f64 = (0..n).map(|_| dist.quantile(rng.next_uniform())).sum();
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::diagonalize;

    fn bernoulli() -> SiteDistribution {
        SiteDistribution::atoms(&[(0.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            SiteDistribution::atoms(&[(0.0, 0.5), (1.0, 0.4)]),
            Err(Error::Unnormalized { .. })
        ));
        assert!(SiteDistribution::piecewise(&[0.0, 1.0, 2.0], &[0.5, 0.6]).is_err());
        assert!(SiteDistribution::uniform(1.0, 1.0).is_err());
    }

    #[test]
    fn single_atom_path_is_constant() {
        let d = SiteDistribution::point(0.0).unwrap();
        let p = sample_path(&d, 99, 4, (-2, 2)).unwrap();
        assert_eq!(p.values(), &[0.0; 5]);
    }

    #[test]
    fn bernoulli_sample_mean() {
        let d = bernoulli();
        let n = 100_000;
        let p = sample_path(&d, 5, 0, (0, n - 1)).unwrap();
        let mean = p.values().iter().sum::<f64>() / n as f64;
        // stderr of a fair coin mean
        let stderr = 0.5 / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * stderr, "mean {mean}");
        assert!(p.values().iter().all(|v| *v == 0.0 || *v == 1.0));
    }

    #[test]
    fn sampling_is_deterministic_and_extends() {
        let d = SiteDistribution::uniform(0.0, 1.0).unwrap();
        let a = sample_path(&d, 11, 2, (-10, 10)).unwrap();
        let b = sample_path(&d, 11, 2, (-10, 10)).unwrap();
        assert_eq!(a, b);
        let wide = sample_path(&d, 11, 2, (-20, 30)).unwrap();
        assert_eq!(wide.slice(-10, 10).unwrap(), a.values());
        let other = sample_path(&d, 11, 3, (-10, 10)).unwrap();
        assert_ne!(other.values(), a.values());
    }

    #[test]
    fn shift_is_reindexing() {
        let d = bernoulli();
        let (a, b) = (-7, 12);
        let moved = sample_path(&d, 3, 1, (a + 1, b + 1)).unwrap();
        let extended = sample_path(&d, 3, 1, (a, b + 1)).unwrap();
        assert_eq!(moved.values(), &extended.values()[1..]);
        // T ω restricted to [a, b] is ω on [a+1, b+1]
        let t_omega = moved.shifted(1);
        assert_eq!(t_omega.window(), (a, b));
        for n in a..=b {
            assert_eq!(t_omega.value(n).unwrap(), extended.value(n + 1).unwrap());
        }
    }

    #[test]
    fn hamiltonian_shapes() {
        let p = PotentialPath::from_values(-1, vec![0.0, 0.0, 0.0]).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        assert_eq!(
            h.to_dense(),
            vec![
                vec![0.0, 1.0, 0.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0]
            ]
        );
        let es = diagonalize(&h).unwrap();
        let s2 = 2f64.sqrt();
        for (e, want) in es.eigenvalues().iter().zip([-s2, 0.0, s2]) {
            assert!((e - want).abs() < 1e-14);
        }

        let single = PotentialPath::from_values(0, vec![0.7]).unwrap();
        let h = build_hamiltonian(&single).unwrap();
        assert_eq!(h.diagonal(), &[0.7]);

        let skew = PotentialPath::from_values(-1, vec![0.0; 4]).unwrap();
        assert!(matches!(
            build_hamiltonian(&skew),
            Err(Error::AsymmetricWindow { .. })
        ));
    }

    #[test]
    fn small_bernoulli_spectrum_in_window() {
        let d = bernoulli();
        let (lo, hi) = gershgorin_window(&d);
        assert_eq!((lo, hi), (-3.0, 3.0));
        for r in 0..50 {
            let p = sample_path(&d, 1, r, (-2, 2)).unwrap();
            let es = diagonalize(&build_hamiltonian(&p).unwrap()).unwrap();
            assert!(es.eigenvalues().iter().all(|e| *e >= lo && *e <= hi));
        }
    }

    #[test]
    fn almost_sure_spectrum_examples() {
        let s = almost_sure_spectrum(&SiteDistribution::point(0.4).unwrap());
        assert_eq!(s.intervals, vec![(0.4 - 2.0, 0.4 + 2.0)]);
        let s = almost_sure_spectrum(&SiteDistribution::uniform(0.0, 1.0).unwrap());
        assert_eq!(s.intervals, vec![(-2.0, 3.0)]);
        let s = almost_sure_spectrum(&SiteDistribution::atoms(&[(0.0, 0.5), (10.0, 0.5)]).unwrap());
        assert_eq!(s.intervals, vec![(-2.0, 2.0), (8.0, 12.0)]);
        // overlapping translates merge
        let s = almost_sure_spectrum(&bernoulli());
        assert_eq!(s.intervals, vec![(-2.0, 3.0)]);
    }

    #[test]
    fn birkhoff_examples() {
        let c = SiteDistribution::point(1.25).unwrap();
        assert_eq!(birkhoff_average(&c, 0, 1000).unwrap(), 1.25);
        let n = 1_000_000;
        let u = SiteDistribution::uniform(0.0, 1.0).unwrap();
        let avg = birkhoff_average(&u, 17, n).unwrap();
        assert!((avg - 0.5).abs() < 3.0 / (12.0 * n as f64).sqrt());
        let avg = birkhoff_average(&bernoulli(), 17, n).unwrap();
        assert!((avg - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn piecewise_density_functions() {
        let d = SiteDistribution::piecewise(&[-1.0, 0.0, 2.0], &[0.5, 0.25]).unwrap();
        assert_eq!(d.density(-0.5), 0.5);
        assert_eq!(d.density(1.0), 0.25);
        assert_eq!(d.density(3.0), 0.0);
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((d.quantile(0.75) - 1.0).abs() < 1e-15);
        assert_eq!(d.support_radius(), 2.0);
        assert_eq!(d.density_max(), Some(0.5));
        // mean = 0.5 * (-0.5) + 0.5 * 1
        assert!((d.mean() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hat_integral_matches_midpoint_quadrature() {
        let d = SiteDistribution::piecewise(&[-1.0, 0.0, 2.0], &[0.5, 0.25]).unwrap();
        for &(c, h) in &[(0.0, 0.3), (-0.95, 0.1), (2.05, 0.2), (5.0, 0.1), (0.7, 0.05)] {
            let m = 200_000;
            let ds = 2.0 * h / m as f64;
            let brute: f64 = (0..m)
                .map(|i| {
                    let s = c - h + (i as f64 + 0.5) * ds;
                    d.density(s) * (h - (s - c).abs()) * ds
                })
                .sum();
            assert!((d.hat_integral(c, h) - brute).abs() < 1e-8, "c={c} h={h}");
        }
    }
}
