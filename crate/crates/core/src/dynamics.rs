//! Time evolution in finite volume and the correlator bounds
//! `sup_t |⟨δ_m, e^{−itH}δ_n⟩| ≤ ρ_L(m, n) = Σ_k |φ_k(m)| |φ_k(n)|`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::{build_hamiltonian, sample_path, SiteDistribution};
use crate::spectra::{diagonalize, EigenSystem};
use crate::stats::{linear_fit, mean_stderr};
use crate::{Error, Result};

/// `Σ_k e^{−itE_k} ⟨φ_k, ψ₀⟩ φ_k`.
pub fn evolve(es: &EigenSystem, psi0: &[f64], t: f64) -> Result<Vec<Complex64>> {
    if psi0.len() != es.size() {
        return Err(Error::InvalidParameter {
            name: "psi0",
            reason: format!("length {} does not match size {}", psi0.len(), es.size()),
        });
    }
    let norm = psi0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); es.size()];
    for (k, &e) in es.eigenvalues().iter().enumerate() {
        let phi = es.vector(k);
        let c: f64 = phi.iter().zip(psi0).map(|(a, b)| a * b).sum();
        let coef = Complex64::from_polar(c, -t * e);
        for (o, p) in out.iter_mut().zip(phi) {
            *o += coef * p;
        }
    }
    Ok(out)
}

/// `⟨δ_m, e^{−itH} δ_n⟩`.
pub fn correlator(es: &EigenSystem, m: i64, n: i64, t: f64) -> Result<Complex64> {
    let (rm, rn) = (es.site_row(m)?, es.site_row(n)?);
    Ok(correlator_rows(es.eigenvalues(), &rm, &rn, t))
}

fn correlator_rows(energies: &[f64], rm: &[f64], rn: &[f64], t: f64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for ((e, a), b) in energies.iter().zip(rm).zip(rn) {
        s += Complex64::from_polar(a * b, -t * e);
    }
    s
}

/// `Σ_k |φ_k(m)| |φ_k(n)|`.
pub fn rho_contribution(es: &EigenSystem, m: i64, n: i64) -> Result<f64> {
    if m == n {
        es.site_row(m)?;
        return Ok(1.0);
    }
    let (rm, rn) = (es.site_row(m)?, es.site_row(n)?);
    Ok(rm.iter().zip(&rn).map(|(a, b)| (a * b).abs()).sum())
}

/// `0` followed by 256 points log-spaced over `[0.1, 10³]`.
pub fn default_time_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let (a, b) = (0.1f64.ln(), 1e3f64.ln());
    grid.extend((0..256).map(|i| (a + (b - a) * i as f64 / 255.0).exp()));
    grid
}

/// `max_{t ∈ grid} |⟨δ_m, e^{−itH} δ_n⟩|`, a lower bound on the true sup.
pub fn sup_correlator_sampled(es: &EigenSystem, m: i64, n: i64, t_grid: &[f64]) -> Result<f64> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: "must be non-empty".into(),
        });
    }
    let (rm, rn) = (es.site_row(m)?, es.site_row(n)?);
    Ok(t_grid
        .iter()
        .map(|&t| correlator_rows(es.eigenvalues(), &rm, &rn, t).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelatorKind {
    RhoBound,
    SupSampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorEstimate {
    pub m: i64,
    pub n: i64,
    pub value: f64,
    pub kind: CorrelatorKind,
    pub realizations: usize,
    pub stderr: f64,
}

fn check_sites(l: usize, sites: &[i64]) -> Result<()> {
    for &s in sites {
        if s.unsigned_abs() as usize > l {
            return Err(Error::SiteOutOfWindow {
                site: s,
                lo: -(l as i64),
                hi: l as i64,
            });
        }
    }
    Ok(())
}

fn sample_system(dist: &SiteDistribution, l: usize, seed: u64, r: u64) -> Result<EigenSystem> {
    let path = sample_path(dist, seed, r, (-(l as i64), l as i64))?;
    diagonalize(&build_hamiltonian(&path)?)
}

/// Monte Carlo mean of `ρ_L(m, n)` over realizations `0..realizations`.
pub fn rho_l_monte_carlo(
    dist: &SiteDistribution,
    l: usize,
    m: i64,
    n: i64,
    realizations: usize,
    seed: u64,
) -> Result<CorrelatorEstimate> {
    check_sites(l, &[m, n])?;
    if realizations == 0 {
        return Err(Error::InvalidParameter {
            name: "realizations",
            reason: "must be at least 1".into(),
        });
    }
    let samples: Vec<f64> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| rho_contribution(&sample_system(dist, l, seed, r)?, m, n))
        .collect::<Result<_>>()?;
    let (value, stderr) = mean_stderr(&samples);
    Ok(CorrelatorEstimate {
        m,
        n,
        value,
        kind: CorrelatorKind::RhoBound,
        realizations,
        stderr,
    })
}

/// One row of the `m ↦ (ρ_L(m, 0), sampled sup)` profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub m: usize,
    pub rho_mean: f64,
    pub rho_stderr: f64,
    pub sup_sampled_mean: f64,
}

/// `ρ_L(m, 0)` and the sampled correlator sup for `m = 0..=m_max`, averaged
/// over realizations; each realization is diagonalized once.
pub fn correlator_profile(
    dist: &SiteDistribution,
    l: usize,
    m_max: usize,
    realizations: usize,
    seed: u64,
    t_grid: &[f64],
) -> Result<Vec<ProfileRow>> {
    check_sites(l, &[m_max as i64])?;
    if realizations == 0 {
        return Err(Error::InvalidParameter {
            name: "realizations",
            reason: "must be at least 1".into(),
        });
    }
    let per: Vec<Vec<(f64, f64)>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let es = sample_system(dist, l, seed, r)?;
            (0..=m_max as i64)
                .map(|m| {
                    Ok((
                        rho_contribution(&es, m, 0)?,
                        sup_correlator_sampled(&es, m, 0, t_grid)?,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..=m_max)
        .map(|m| {
            let rho: Vec<f64> = per.iter().map(|row| row[m].0).collect();
            let sup: Vec<f64> = per.iter().map(|row| row[m].1).collect();
            let (rho_mean, rho_stderr) = mean_stderr(&rho);
            ProfileRow {
                m,
                rho_mean,
                rho_stderr,
                sup_sampled_mean: sup.iter().sum::<f64>() / sup.len() as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRateFit {
    pub prefactor: f64,
    pub rate: f64,
    pub rate_stderr: f64,
    pub r_squared: f64,
    /// `rate > 3 · rate_stderr`.
    pub localized: bool,
}

/// Least squares of `log values[m]` against `m = 0, 1, …`.
pub fn decay_rate_fit(values: &[f64]) -> Result<DecayRateFit> {
    if values.len() < 5 {
        return Err(Error::TooFewSites {
            needed: 5,
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositive { index });
    }
    let x: Vec<f64> = (0..values.len()).map(|m| m as f64).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&x, &y);
    let rate = -fit.slope;
    Ok(DecayRateFit {
        prefactor: fit.intercept.exp(),
        rate,
        rate_stderr: fit.slope_stderr,
        r_squared: fit.r_squared,
        localized: rate > 3.0 * fit.slope_stderr,
    })
}
