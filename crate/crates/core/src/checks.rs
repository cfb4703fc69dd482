//! The invariant suite: each check samples its own inputs from a seed and
//! reports a pass/fail line with the worst observed value.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::kunz_souillard::{GridFunction, InversionMaps, KsOperators, RealGrid};
use crate::model::{almost_sure_spectrum, build_hamiltonian, gershgorin_window, sample_path, SiteDistribution};
use crate::rank_one::borel_transform;
use crate::rng::CounterRng;
use crate::spectra::eigenvalues;
use crate::transfer::cocycle_product;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Result<CheckOutcome> {
    let start = Instant::now();
    let (passed, detail) = f()?;
    Ok(CheckOutcome {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn bernoulli() -> SiteDistribution {
    SiteDistribution::atoms(&[(0.0, 0.5), (1.0, 0.5)]).expect("fair coin")
}

fn uniform01() -> SiteDistribution {
    SiteDistribution::uniform(0.0, 1.0).expect("unit interval")
}

/// `|det − 1|` of renormalized products of length `steps` stays below 1e-6.
pub fn determinant_preservation(seed: u64, steps: usize) -> Result<CheckOutcome> {
    timed("det preservation", || {
        let mut worst: f64 = 0.0;
        for (r, d) in [bernoulli(), uniform01()].iter().enumerate() {
            let path = sample_path(d, seed, r as u64, (1, steps as i64))?;
            for e in [-2.5, 0.0, 0.7, 3.5] {
                worst = worst.max(cocycle_product(e, &path, steps)?.det_defect());
            }
        }
        Ok((worst <= 1e-6, format!("max |det - 1| = {worst:.3e} at n = {steps}")))
    })
}

/// `log‖M(n+m)‖ ≤ log‖M(n)‖ + log‖M(m)∘Tⁿ‖ + 1e-9` on `samples` draws.
pub fn kingman_subadditivity(seed: u64, samples: usize) -> Result<CheckOutcome> {
    timed("Kingman subadditivity", || {
        let d = bernoulli();
        let mut worst = f64::NEG_INFINITY;
        for s in 0..samples as u64 {
            let mut rng = CounterRng::at(seed, s, 0);
            let n = 1 + (rng.next_uniform() * 1000.0) as usize;
            let m = 1 + (rng.next_uniform() * 1000.0) as usize;
            let e = -3.0 + 6.0 * rng.next_uniform();
            let path = sample_path(&d, seed, s, (1, (n + m) as i64))?;
            let whole = cocycle_product(e, &path, n + m)?.log_norm();
            let head = cocycle_product(e, &path, n)?.log_norm();
            let tail = cocycle_product(e, &path.shifted(n as i64), m)?.log_norm();
            worst = worst.max(whole - head - tail);
        }
        Ok((worst <= 1e-9, format!("max excess = {worst:.3e} over {samples} draws")))
    })
}

/// `sign Im F(z) = sign Im z` for random Hamiltonians, vectors and `z`.
pub fn herglotz_sign(seed: u64, samples: usize) -> Result<CheckOutcome> {
    timed("Herglotz sign", || {
        let d = SiteDistribution::uniform(-2.0, 2.0)?;
        let bad: Vec<usize> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = CounterRng::at(seed, s as u64, 0);
                let l = (rng.next_uniform() * 10.0) as i64;
                let h = build_hamiltonian(&sample_path(&d, seed ^ 0x5eed, s as u64, (-l, l))?)?;
                let mut phi: Vec<f64> = (0..h.size()).map(|_| rng.next_uniform() - 0.5).collect();
                let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
                phi.iter_mut().for_each(|x| *x /= norm);
                let re = -6.0 + 12.0 * rng.next_uniform();
                let mag = 10f64.powf(-3.0 + 4.0 * rng.next_uniform());
                let im = if rng.next_uniform() < 0.5 { -mag } else { mag };
                let sample = borel_transform(&h, &phi, Complex64::new(re, im))?;
                Ok(usize::from(!sample.sign_ok()))
            })
            .collect::<Result<_>>()?;
        let failures: usize = bad.iter().sum();
        Ok((failures == 0, format!("{failures} sign violations in {samples} samples")))
    })
}

fn bump(x: f64, center: f64, half: f64) -> f64 {
    let t = (x - center) / half;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// `‖U(Uf) − f‖₂ ≤ h ‖(Uf)′‖₂` for a smooth bump supported in
/// `0.5 ≤ |x| ≤ 2`, on three successively halved grids.
pub fn u_involution() -> Result<CheckOutcome> {
    timed("U involution", || {
        let f = |x: f64| bump(x, 1.25, 0.75) + 0.5 * bump(x, -1.0, 0.5);
        // (Uf)(x) = f(1/x)/|x|; its derivative norm by central differences
        let uf = |x: f64| if x == 0.0 { 0.0 } else { f(1.0 / x) / x.abs() };
        let dx = 1e-4;
        let deriv_sq: f64 = (0..((4.0 / dx) as usize))
            .map(|i| {
                let x = -2.0 + (i as f64 + 0.5) * dx;
                let d = (uf(x + 1e-6) - uf(x - 1e-6)) / 2e-6;
                d * d * dx
            })
            .sum();
        let c = deriv_sq.sqrt();
        let mut lines = Vec::new();
        let mut ok = true;
        for n in [1024, 2048, 4096] {
            let grid = RealGrid::new(4.0, n)?;
            let maps = InversionMaps::new(grid);
            let g = GridFunction::from_fn(grid, f);
            let err = maps.op_u(&maps.op_u(&g)).sub(&g).l2_norm();
            let bound = c * grid.spacing();
            ok &= err <= bound;
            lines.push(format!("N={n}: {err:.3e} <= {bound:.3e}"));
        }
        Ok((ok, lines.join(", ")))
    })
}

/// Nonnegative `f` with support in `1/X ≤ |y| ≤ X` whose image stays on the
/// grid: `‖T0 f‖₁ = ‖f‖₁` up to the gap to the refined grid and rounding.
pub fn mass_preservation() -> Result<CheckOutcome> {
    timed("mass preservation", || {
        let d = uniform01();
        let grid = RealGrid::new(16.0, 4096)?;
        let maps = InversionMaps::new(grid);
        let fine = InversionMaps::new(grid.refined());
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for e in [-1.5, -0.5, 1.5, 2.5] {
            let ops = KsOperators::new(&d, e, &maps)?;
            let fine_ops = KsOperators::new(&d, e, &fine)?;
            let tests = [
                (ops.phi(), fine_ops.phi()),
                (
                    GridFunction::from_fn(grid, |x| bump(x, 3.0, 1.5)),
                    GridFunction::from_fn(grid.refined(), |x| bump(x, 3.0, 1.5)),
                ),
            ];
            for (f, f_fine) in tests {
                let defect = (ops.op_t0(&f).l1_norm() - f.l1_norm()).abs();
                let fine_defect = (fine_ops.op_t0(&f_fine).l1_norm() - f_fine.l1_norm()).abs();
                let budget = (defect - fine_defect).abs() + 1e-12 * f.l1_norm();
                ok &= defect <= budget;
                worst = worst.max(defect);
            }
        }
        Ok((ok, format!("max | ||T0 f||_1 - ||f||_1 | = {worst:.3e}")))
    })
}

/// Every eigenvalue of `per_l` sampled Hamiltonians at each `L = 1..=max_l`
/// lies in `Σ0` (with tolerance 1e-10).
pub fn spectrum_containment(seed: u64, per_l: usize, max_l: usize) -> Result<CheckOutcome> {
    timed("spectrum containment", || {
        let mut worst = f64::NEG_INFINITY;
        for d in [bernoulli(), uniform01(), SiteDistribution::uniform(-3.0, 1.0)?] {
            let (lo, hi) = gershgorin_window(&d);
            for l in 1..=max_l {
                let excess: Vec<f64> = (0..per_l as u64)
                    .into_par_iter()
                    .map(|r| {
                        let path = sample_path(&d, seed, r + 1_000_000 * l as u64, (-(l as i64), l as i64))?;
                        let ev = eigenvalues(&build_hamiltonian(&path)?)?;
                        Ok((lo - ev[0]).max(ev[ev.len() - 1] - hi))
                    })
                    .collect::<Result<_>>()?;
                worst = excess.into_iter().fold(worst, f64::max);
            }
        }
        Ok((
            worst <= 1e-10,
            format!("max excursion beyond Sigma0 = {worst:.3e} ({per_l} per L, L = 1..{max_l})"),
        ))
    })
}

/// Union of eigenvalues over `realizations` chains of half width `l` meets
/// every subinterval of length 0.1 of the almost-sure spectrum.
pub fn spectrum_coverage(seed: u64, l: usize, realizations: usize) -> Result<CheckOutcome> {
    timed("almost-sure spectrum coverage", || {
        let d = bernoulli();
        let sigma = almost_sure_spectrum(&d);
        let per: Vec<Vec<f64>> = (0..realizations as u64)
            .into_par_iter()
            .map(|r| {
                let path = sample_path(&d, seed, r, (-(l as i64), l as i64))?;
                eigenvalues(&build_hamiltonian(&path)?)
            })
            .collect::<Result<_>>()?;
        let mut all: Vec<f64> = per.into_iter().flatten().collect();
        all.sort_by(f64::total_cmp);
        let mut max_gap: f64 = 0.0;
        for &(a, b) in &sigma.intervals {
            let mut prev = a;
            for &e in all.iter().filter(|e| **e >= a && **e <= b) {
                max_gap = max_gap.max(e - prev);
                prev = e;
            }
            max_gap = max_gap.max(b - prev);
        }
        Ok((
            max_gap < 0.1,
            format!("largest uncovered gap = {max_gap:.4} over {realizations} realizations at L = {l}"),
        ))
    })
}

/// All checks at full size.
pub fn run_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        determinant_preservation(seed, 1_000_000)?,
        kingman_subadditivity(seed, 100)?,
        herglotz_sign(seed, 1000)?,
        u_involution()?,
        mass_preservation()?,
        spectrum_containment(seed, 1000, 20)?,
        spectrum_coverage(seed, 50, 10_000)?,
    ])
}

/// The same checks at reduced sizes.
pub fn run_quick_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        determinant_preservation(seed, 20_000)?,
        kingman_subadditivity(seed, 20)?,
        herglotz_sign(seed, 100)?,
        u_involution()?,
        mass_preservation()?,
        spectrum_containment(seed, 20, 5)?,
        spectrum_coverage(seed, 50, 2000)?,
    ])
}
