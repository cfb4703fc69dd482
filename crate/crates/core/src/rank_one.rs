//! Rank-one perturbations `A_λ = A + λ⟨φ, ·⟩φ` at finite volume: Borel
//! transforms, the Aronszajn-Krein formula and numerical spectral averaging.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::model::FiniteHamiltonian;
use crate::quadrature::integrate_adaptive;
use crate::spectra::diagonalize;
use crate::{Error, Result};

/// A value `F(z)` of a Herglotz function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerglotzSample {
    pub z: Complex64,
    pub f: Complex64,
}

impl HerglotzSample {
    /// `sign Im F = sign Im z`.
    pub fn sign_ok(&self) -> bool {
        self.f.im * self.z.im > 0.0
    }
}

fn check_z(z: Complex64) -> Result<()> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::RealSpectralParameter { re: z.re, im: z.im });
    }
    Ok(())
}

fn check_unit(phi: &[f64], size: usize) -> Result<()> {
    if phi.len() != size {
        return Err(Error::InvalidParameter {
            name: "phi",
            reason: format!("length {} does not match size {size}", phi.len()),
        });
    }
    let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// The spectral measure of a vector: atoms `|⟨φ_k, φ⟩|²` at `E_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralMeasure {
    /// `Σ_k w_k / (E_k − z)`.
    pub fn borel(&self, z: Complex64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| *w / (*e - z))
            .sum()
    }
}

fn measure_of(energies: Vec<f64>, vectors: impl Iterator<Item = Vec<f64>>, phi: &[f64]) -> SpectralMeasure {
    let weights = vectors
        .map(|v| {
            let c: f64 = v.iter().zip(phi).map(|(a, b)| a * b).sum();
            c * c
        })
        .collect();
    SpectralMeasure { energies, weights }
}

/// Position `j` if `phi = ±δ_j`.
fn as_delta(phi: &[f64]) -> Option<usize> {
    let mut nz = phi.iter().enumerate().filter(|(_, x)| **x != 0.0);
    let (j, x) = nz.next()?;
    (nz.next().is_none() && x.abs() == 1.0).then_some(j)
}

/// `A + λ⟨φ, ·⟩φ`: tridiagonal when `φ = ±δ_j`, dense otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum RankOneOperator {
    Tridiagonal(FiniteHamiltonian),
    Dense(DMatrix<f64>),
}

impl RankOneOperator {
    pub fn size(&self) -> usize {
        match self {
            RankOneOperator::Tridiagonal(h) => h.size(),
            RankOneOperator::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            RankOneOperator::Tridiagonal(h) => dense_of(h),
            RankOneOperator::Dense(m) => m.clone(),
        }
    }

    pub fn spectral_measure(&self, phi: &[f64]) -> Result<SpectralMeasure> {
        check_unit(phi, self.size())?;
        match self {
            RankOneOperator::Tridiagonal(h) => {
                let es = diagonalize(h)?;
                let vecs = (0..es.size()).map(|k| es.vector(k).to_vec());
                Ok(measure_of(es.eigenvalues().to_vec(), vecs, phi))
            }
            RankOneOperator::Dense(m) => {
                let eig = SymmetricEigen::new(m.clone());
                let vecs = (0..m.nrows()).map(|k| eig.eigenvectors.column(k).iter().copied().collect());
                Ok(measure_of(eig.eigenvalues.iter().copied().collect(), vecs, phi))
            }
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            RankOneOperator::Tridiagonal(h) => crate::spectra::eigenvalues(h),
            RankOneOperator::Dense(m) => {
                let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
                v.sort_by(f64::total_cmp);
                Ok(v)
            }
        }
    }
}

fn dense_of(h: &FiniteHamiltonian) -> DMatrix<f64> {
    let n = h.size();
    let mut m = DMatrix::zeros(n, n);
    for (i, v) in h.diagonal().iter().enumerate() {
        m[(i, i)] = *v;
        if i + 1 < n {
            m[(i, i + 1)] = 1.0;
            m[(i + 1, i)] = 1.0;
        }
    }
    m
}

pub fn rank_one_perturb(h: &FiniteHamiltonian, phi: &[f64], lambda: f64) -> Result<RankOneOperator> {
    check_unit(phi, h.size())?;
    if let Some(j) = as_delta(phi) {
        let mut out = h.clone();
        out.diagonal_mut()[j] += lambda;
        return Ok(RankOneOperator::Tridiagonal(out));
    }
    let mut m = dense_of(h);
    for i in 0..phi.len() {
        for j in 0..phi.len() {
            m[(i, j)] += lambda * phi[i] * phi[j];
        }
    }
    Ok(RankOneOperator::Dense(m))
}

/// `F(z) = ⟨φ, (H − z)^{-1} φ⟩` through the eigensystem of `H`.
pub fn borel_transform(h: &FiniteHamiltonian, phi: &[f64], z: Complex64) -> Result<HerglotzSample> {
    check_z(z)?;
    let mu = rank_one_perturb(h, phi, 0.0)?.spectral_measure(phi)?;
    Ok(HerglotzSample { z, f: mu.borel(z) })
}

/// `|F_λ(z) − F(z)/(1 + λF(z))|` with `F_λ` from a fresh eigensystem of
/// `H + λ⟨φ, ·⟩φ`.
pub fn aronszajn_krein_check(
    h: &FiniteHamiltonian,
    phi: &[f64],
    lambda: f64,
    z: Complex64,
) -> Result<f64> {
    check_z(z)?;
    let f = borel_transform(h, phi, z)?.f;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let f_lambda = rank_one_perturb(h, phi, lambda)?.spectral_measure(phi)?.borel(z);
    Ok((f_lambda - f / (1.0 + lambda * f)).norm())
}

/// Cross ratio `(a−c)(b−d) / ((a−d)(b−c))`.
pub fn cross_ratio(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    (a - c) * (b - d) / ((a - d) * (b - c))
}

/// `|CR(F_{λ1..4}(z)) − CR(λ1..4)|`, zero when `λ ↦ F_λ(z)` is Möbius.
pub fn mobius_defect(h: &FiniteHamiltonian, phi: &[f64], lambdas: [f64; 4], z: Complex64) -> Result<f64> {
    check_z(z)?;
    let f: Vec<Complex64> = lambdas
        .iter()
        .map(|&l| Ok(rank_one_perturb(h, phi, l)?.spectral_measure(phi)?.borel(z)))
        .collect::<Result<_>>()?;
    let l: Vec<Complex64> = lambdas.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok((cross_ratio(f[0], f[1], f[2], f[3]) - cross_ratio(l[0], l[1], l[2], l[3])).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAverage {
    /// Quadrature over `[−Λ, Λ]` plus the closed-form tails.
    pub integral: Complex64,
    pub tail: Complex64,
    /// `2πi` for `Im z > 0`, `0` for `Im z < 0`.
    pub target: Complex64,
    pub defect: f64,
    pub quadrature_error: f64,
    pub evaluations: usize,
}

/// `∫ h_z(λ) dλ` with `h_z(λ) = F_λ(z) − F_λ(−i)`.
///
/// By Aronszajn-Krein `F_λ(w) = 1/(λ − p(w))` with `p(w) = −1/F(w)`, so
/// `h_z` is a difference of two simple poles and the tails beyond `±Λ`
/// integrate to complex logarithms.
pub fn spectral_average_check(
    h: &FiniteHamiltonian,
    phi: &[f64],
    z: Complex64,
    lambda_max: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<SpectralAverage> {
    check_z(z)?;
    let minus_i = Complex64::new(0.0, -1.0);
    if (z - minus_i).norm() == 0.0 {
        return Err(Error::InvalidParameter {
            name: "z",
            reason: "z = −i makes the integrand vanish identically".into(),
        });
    }
    let mu = rank_one_perturb(h, phi, 0.0)?.spectral_measure(phi)?;
    let p1 = -1.0 / mu.borel(z);
    let p2 = -1.0 / mu.borel(minus_i);
    let pole_radius = p1.norm().max(p2.norm());
    if !(lambda_max >= 10.0 * pole_radius) {
        return Err(Error::TailTooLarge {
            lambda_max,
            pole_radius,
            suggested: 10.0 * pole_radius,
        });
    }
    let lm = Complex64::new(lambda_max, 0.0);
    let tail = ((-lm - p1) / (-lm - p2)).ln() - ((lm - p1) / (lm - p2)).ln();

    let mut breaks = vec![-lambda_max, lambda_max];
    for p in [p1, p2] {
        if p.re.abs() < lambda_max {
            breaks.push(p.re);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = integrate_adaptive(
        |l| 1.0 / (l - p1) - 1.0 / (l - p2),
        &breaks,
        tol,
        max_intervals,
    )?;
    let integral = q.value + tail;
    let target = if z.im > 0.0 {
        Complex64::new(0.0, 2.0 * PI)
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(SpectralAverage {
        integral,
        tail,
        target,
        defect: (integral - target).norm(),
        quadrature_error: q.error_estimate,
        evaluations: q.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, sample_path, SiteDistribution};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn anderson(l: i64, seed: u64) -> FiniteHamiltonian {
        let d = SiteDistribution::uniform(-1.0, 1.0).unwrap();
        build_hamiltonian(&sample_path(&d, seed, 0, (-l, l)).unwrap()).unwrap()
    }

    fn delta(size: usize, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; size];
        v[j] = 1.0;
        v
    }

    #[test]
    fn scalar_borel() {
        let h = FiniteHamiltonian::from_diagonal(vec![0.0]).unwrap();
        for z in [c(0.3, 1.0), c(-2.0, -0.1)] {
            let s = borel_transform(&h, &[1.0], z).unwrap();
            assert!((s.f + 1.0 / z).norm() < 1e-15);
            assert!(s.sign_ok());
        }
        assert!(matches!(
            borel_transform(&h, &[1.0], c(1.0, 0.0)),
            Err(Error::RealSpectralParameter { .. })
        ));
    }

    #[test]
    fn free_borel_matches_dense_solve() {
        let h = FiniteHamiltonian::from_diagonal(vec![0.0; 5]).unwrap();
        let z = c(0.0, 1.0);
        let f = borel_transform(&h, &delta(5, 2), z).unwrap().f;
        // (H − z) x = δ₀ by complex Gaussian elimination
        let mut a: Vec<Vec<Complex64>> = dense_of(&h)
            .row_iter()
            .map(|r| r.iter().map(|x| c(*x, 0.0)).collect())
            .collect();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= z;
        }
        let mut b: Vec<Complex64> = delta(5, 2).iter().map(|x| c(*x, 0.0)).collect();
        for k in 0..5 {
            for i in k + 1..5 {
                let factor = a[i][k] / a[k][k];
                for j in k..5 {
                    let t = a[k][j];
                    a[i][j] -= factor * t;
                }
                let t = b[k];
                b[i] -= factor * t;
            }
        }
        let mut x = vec![c(0.0, 0.0); 5];
        for i in (0..5).rev() {
            let mut s = b[i];
            for j in i + 1..5 {
                s -= a[i][j] * x[j];
            }
            x[i] = s / a[i][i];
        }
        assert!((f - x[2]).norm() < 1e-13);
    }

    #[test]
    fn perturb_examples() {
        let h = anderson(3, 1);
        let phi = delta(7, 3);
        assert_eq!(rank_one_perturb(&h, &phi, 0.0).unwrap(), RankOneOperator::Tridiagonal(h.clone()));
        let RankOneOperator::Tridiagonal(p) = rank_one_perturb(&h, &phi, 2.0).unwrap() else {
            panic!("expected tridiagonal");
        };
        for i in 0..7 {
            let want = h.diagonal()[i] + if i == 3 { 2.0 } else { 0.0 };
            assert_eq!(p.diagonal()[i], want);
        }
        let spread: Vec<f64> = vec![0.5; 4].into_iter().chain(vec![0.0; 3]).collect();
        assert!(matches!(rank_one_perturb(&h, &spread, 1.0).unwrap(), RankOneOperator::Dense(_)));
        assert!(rank_one_perturb(&h, &[1.0; 7], 1.0).is_err());
    }

    #[test]
    fn positive_perturbation_interlaces() {
        let h = anderson(5, 2);
        let e = crate::spectra::eigenvalues(&h).unwrap();
        let f = rank_one_perturb(&h, &delta(11, 5), 1.3).unwrap().eigenvalues().unwrap();
        for k in 0..11 {
            assert!(f[k] >= e[k] - 1e-12);
            if k + 1 < 11 {
                assert!(f[k] <= e[k + 1] + 1e-12);
            }
        }
    }

    #[test]
    fn aronszajn_krein_examples() {
        let h = anderson(10, 3);
        let phi = delta(21, 10);
        let z = c(0.7, 0.2);
        assert_eq!(aronszajn_krein_check(&h, &phi, 0.0, z).unwrap(), 0.0);
        for l in [-1.0, 0.3, 5.0] {
            assert!(aronszajn_krein_check(&h, &phi, l, z).unwrap() < 1e-10);
        }
        let s = FiniteHamiltonian::from_diagonal(vec![0.4]).unwrap();
        assert!(aronszajn_krein_check(&s, &[1.0], 2.5, c(0.1, -0.3)).unwrap() < 1e-15);
    }

    #[test]
    fn dense_route_agrees() {
        let h = anderson(4, 5);
        let mut phi = vec![0.0; 9];
        phi[3] = 0.6;
        phi[6] = -0.8;
        for l in [-2.0, 0.5] {
            assert!(aronszajn_krein_check(&h, &phi, l, c(-0.4, 0.7)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn mobius_in_lambda() {
        let h = anderson(10, 6);
        let d = mobius_defect(&h, &delta(21, 11), [-1.0, 0.5, 2.0, 7.0], c(0.2, 0.4)).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn spectral_average_targets() {
        let h = anderson(10, 7);
        let phi = delta(21, 10);
        let up = spectral_average_check(&h, &phi, c(0.5, 1.0), 1e4, 1e-10, 4000).unwrap();
        assert!(up.defect < 1e-6, "{up:?}");
        let down = spectral_average_check(&h, &phi, c(0.5, -1.0), 1e4, 1e-10, 4000).unwrap();
        assert!(down.defect < 1e-6, "{down:?}");
        let s = FiniteHamiltonian::from_diagonal(vec![0.3]).unwrap();
        for z in [c(-1.0, 0.5), c(2.0, -0.25)] {
            let r = spectral_average_check(&s, &[1.0], z, 1e3, 1e-12, 4000).unwrap();
            assert!(r.defect < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn spectral_average_short_window_refused() {
        let h = anderson(3, 8);
        let r = spectral_average_check(&h, &delta(7, 3), c(0.0, 0.01), 1.0, 1e-9, 100);
        assert!(matches!(r, Err(Error::TailTooLarge { .. })));
    }
}
