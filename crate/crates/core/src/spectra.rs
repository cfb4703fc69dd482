//! Finite-volume diagonalization by implicit QL and exponential-decay fits of
//! the eigenvectors.

use rayon::prelude::*;

use crate::model::{build_hamiltonian, sample_path, FiniteHamiltonian, SiteDistribution};
use crate::stats::linear_fit;
use crate::{Error, Result};

const MAX_QL_SWEEPS: usize = 60;
/// Sites with `|ψ(n)|` at or below this are left out of decay fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Eigenvalues (ascending) and orthonormal eigenvectors of `H_L`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    half_width: usize,
    eigenvalues: Vec<f64>,
    /// `vectors[k][i]` is the component of eigenvector `k` at array index `i`
    /// (site `i - L`).
    vectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    /// Assemble from already orthonormal eigenpairs; sorts by eigenvalue.
    pub fn from_parts(eigenvalues: Vec<f64>, vectors: Vec<Vec<f64>>) -> Self {
        let n = eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| {
                let mut v = vectors[k].clone();
                fix_sign(&mut v);
                v
            })
            .collect();
        Self {
            half_width: n / 2,
            eigenvalues,
            vectors,
        }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k]
    }

    fn index_of(&self, site: i64) -> Result<usize> {
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

    /// `φ_k(site)` for `site ∈ [-L, L]`.
    pub fn component(&self, k: usize, site: i64) -> Result<f64> {
        Ok(self.vectors[k][self.index_of(site)?])
    }

    /// All `φ_k(site)` over `k`.
    pub fn site_row(&self, site: i64) -> Result<Vec<f64>> {
        let i = self.index_of(site)?;
        Ok(self.vectors.iter().map(|v| v[i]).collect())
    }

    /// `max_k ‖H φ_k − E_k φ_k‖₂`.
    pub fn max_residual(&self, h: &FiniteHamiltonian) -> f64 {
        self.vectors
            .iter()
            .zip(&self.eigenvalues)
            .map(|(v, &e)| {
                h.apply(v)
                    .iter()
                    .zip(v)
                    .map(|(hv, x)| (hv - e * x).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_{j,k} |⟨φ_j, φ_k⟩ − δ_jk|`.
    pub fn max_orthogonality_defect(&self) -> f64 {
        let n = self.size();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                let dot: f64 = self.vectors[j]
                    .iter()
                    .zip(&self.vectors[k])
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max_m |Σ_k φ_k(m)² − 1|`.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.size();
        (0..n)
            .map(|i| (self.vectors.iter().map(|v| v[i] * v[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `offdiag[i]` couples
/// `i` and `i + 1`. When `vectors` is given it must hold the identity (or any
/// orthogonal basis to be rotated) with `vectors[k]` the `k`-th column.
fn tql(d: &mut [f64], offdiag: &[f64], mut vectors: Option<&mut [Vec<f64>]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&offdiag[..n - 1]);
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence {
                    iterations: sweeps,
                    diagonal: d.to_vec(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = vectors.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let (zi, zi1) = (&mut lo[i], &mut hi[0]);
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full eigensystem of `H_L`.
pub fn diagonalize(h: &FiniteHamiltonian) -> Result<EigenSystem> {
    let n = h.size();
    let mut d = h.diagonal().to_vec();
    let off = vec![1.0; n.saturating_sub(1)];
    let mut vectors: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            v
        })
        .collect();
    tql(&mut d, &off, Some(&mut vectors))?;
    Ok(EigenSystem::from_parts(d, vectors))
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &FiniteHamiltonian) -> Result<Vec<f64>> {
    let mut d = h.diagonal().to_vec();
    let off = vec![1.0; h.size().saturating_sub(1)];
    tql(&mut d, &off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Exponential profile `|ψ(n)| ≈ C e^{-γ|n - n_k|}` fitted in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Site of the largest `|ψ|` (smallest on ties).
    pub center: i64,
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// Standard error of the fitted rate.
    pub rate_stderr: f64,
    pub usable_sites: usize,
}

/// Least-squares fit of `log|ψ(n)|` against `|n − n_k|`; `first_site` labels
/// `psi[0]`.
pub fn decay_profile(psi: &[f64], first_site: i64) -> Result<DecayFit> {
    let mut center = 0;
    for (i, x) in psi.iter().enumerate() {
        if x.abs() > psi[center].abs() {
            center = i;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = psi
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > FIT_FLOOR)
        .map(|(i, v)| ((i as f64 - center as f64).abs(), v.abs().ln()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::TooFewSites {
            needed: 4,
            got: xs.len(),
        });
    }
    let fit = linear_fit(&xs, &ys);
    Ok(DecayFit {
        center: first_site + center as i64,
        rate: -fit.slope,
        prefactor: fit.intercept.exp(),
        r_squared: fit.r_squared,
        rate_stderr: fit.slope_stderr,
        usable_sites: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusRow {
    pub realization: u64,
    pub k: usize,
    pub energy: f64,
    pub rate: f64,
    pub center: i64,
    pub r_squared: f64,
}

#[derive(Debug, Clone)]
pub struct Census {
    pub rows: Vec<CensusRow>,
    /// Worst completeness defect seen over all realizations.
    pub max_completeness_defect: f64,
}

impl Census {
    /// Fraction of eigenvectors with `r² > min_r2` and rate `> min_rate`.
    pub fn pass_fraction(&self, min_r2: f64, min_rate: f64) -> f64 {
        let ok = self
            .rows
            .iter()
            .filter(|r| r.r_squared > min_r2 && r.rate > min_rate)
            .count();
        ok as f64 / self.rows.len() as f64
    }

    /// Empirical quantile of the fitted rates (nearest rank).
    pub fn rate_quantile(&self, q: f64) -> f64 {
        let mut rates: Vec<f64> = self.rows.iter().map(|r| r.rate).collect();
        rates.sort_by(f64::total_cmp);
        let idx = ((q * (rates.len() - 1) as f64).round() as usize).min(rates.len() - 1);
        rates[idx]
    }
}

/// Decay fits for every eigenvector of `realizations` samples of `H_L`.
pub fn localization_census(
    dist: &SiteDistribution,
    half_width: usize,
    realizations: usize,
    seed: u64,
) -> Result<Census> {
    if half_width < 20 {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: format!("census needs L >= 20, got {half_width}"),
        });
    }
    let l = half_width as i64;
    let per: Vec<Result<(Vec<CensusRow>, f64)>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let path = sample_path(dist, seed, r, (-l, l))?;
            let es = diagonalize(&build_hamiltonian(&path)?)?;
            let rows = (0..es.size())
                .map(|k| {
                    let fit = decay_profile(es.vector(k), -l)?;
                    Ok(CensusRow {
                        realization: r,
                        k,
                        energy: es.eigenvalues()[k],
                        rate: fit.rate,
                        center: fit.center,
                        r_squared: fit.r_squared,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((rows, es.completeness_defect()))
        })
        .collect();
    let mut rows = Vec::with_capacity(realizations * (2 * half_width + 1));
    let mut worst: f64 = 0.0;
    for item in per {
        let (r, c) = item?;
        rows.extend(r);
        worst = worst.max(c);
    }
    Ok(Census {
        rows,
        max_completeness_defect: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialPath;

    fn random_h(l: usize, seed: u64) -> FiniteHamiltonian {
        let d = SiteDistribution::uniform(-1.0, 2.0).unwrap();
        let path = sample_path(&d, seed, 0, (-(l as i64), l as i64)).unwrap();
        build_hamiltonian(&path).unwrap()
    }

    #[test]
    fn free_three_site() {
        let h = FiniteHamiltonian::from_diagonal(vec![0.0; 3]).unwrap();
        let es = diagonalize(&h).unwrap();
        let s2 = 2f64.sqrt();
        for (e, want) in es.eigenvalues().iter().zip([-s2, 0.0, s2]) {
            assert!((e - want).abs() < 1e-14);
        }
        // ground state (1/2, 1/√2, 1/2) up to sign
        let v = es.vector(0);
        assert!((v[0].abs() - 0.5).abs() < 1e-14);
        assert!((v[1].abs() - 1.0 / s2).abs() < 1e-14);
    }

    #[test]
    fn single_site() {
        let h = FiniteHamiltonian::from_diagonal(vec![-0.3]).unwrap();
        let es = diagonalize(&h).unwrap();
        assert_eq!(es.eigenvalues(), &[-0.3]);
        assert_eq!(es.vector(0), &[1.0]);
    }

    #[test]
    fn random_41_site_invariants() {
        let h = random_h(20, 3);
        let es = diagonalize(&h).unwrap();
        let scale = 2.0 + 2.0 + es.eigenvalues().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        assert!(es.max_residual(&h) <= 1e-10 * scale);
        assert!(es.max_orthogonality_defect() <= 1e-10);
        assert!(es.completeness_defect() <= 1e-10);
        assert!(es.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        let only = eigenvalues(&h).unwrap();
        for (a, b) in only.iter().zip(es.eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_are_simple() {
        for seed in 0..20 {
            let es = diagonalize(&random_h(15, seed)).unwrap();
            assert!(es.min_gap() > 1e-12);
        }
    }

    #[test]
    fn interlacing_under_growth() {
        let d = SiteDistribution::atoms(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        for r in 0..10 {
            let l = 12i64;
            let big = sample_path(&d, 8, r, (-l - 1, l + 1)).unwrap();
            let small =
                PotentialPath::from_values(-l, big.slice(-l, l).unwrap().to_vec()).unwrap();
            let eb = eigenvalues(&build_hamiltonian(&big).unwrap()).unwrap();
            let es = eigenvalues(&build_hamiltonian(&small).unwrap()).unwrap();
            for (k, e) in es.iter().enumerate() {
                assert!(*e >= eb[k] - 1e-12 && *e <= eb[k + 2] + 1e-12);
            }
        }
    }

    #[test]
    fn decay_profile_exact_exponential() {
        let raw: Vec<f64> = (-20..=20)
            .map(|n: i64| (-0.5 * (n - 3).abs() as f64).exp())
            .collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let psi: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let fit = decay_profile(&psi, -20).unwrap();
        assert_eq!(fit.center, 3);
        assert!((fit.rate - 0.5).abs() < 1e-6);
        assert!(fit.r_squared > 0.999_999);
        assert!((fit.prefactor - 1.0 / norm).abs() < 1e-10);
    }

    #[test]
    fn decay_profile_flat_and_ties() {
        let psi = vec![1.0 / 5f64.sqrt(); 5];
        let fit = decay_profile(&psi, 0).unwrap();
        assert_eq!(fit.center, 0);
        assert!(fit.rate.abs() < 1e-12);
        assert_eq!(fit.r_squared, 0.0);
        assert!(matches!(
            decay_profile(&[1.0, 0.0, 0.0, 0.0, 0.0], 0),
            Err(Error::TooFewSites { .. })
        ));
    }

    #[test]
    fn free_eigenvectors_are_extended() {
        let h = FiniteHamiltonian::from_diagonal(vec![0.0; 61]).unwrap();
        let es = diagonalize(&h).unwrap();
        // in-band standing waves: no exponential decay
        for k in 10..50 {
            let fit = decay_profile(es.vector(k), -30).unwrap();
            assert!(fit.rate.abs() < 0.05, "k={k} rate={}", fit.rate);
        }
    }
}
