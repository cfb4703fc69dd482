use anderson_core::dynamics::rho_l_monte_carlo;
use anderson_core::furstenberg::{furstenberg_gamma, invariant_measure, MatrixDistribution};
use anderson_core::kunz_souillard::{jacobian_check, rho_operator_with_budget, RealGrid};
use anderson_core::model::{build_hamiltonian, sample_path, SiteDistribution};
use anderson_core::rng::CounterRng;
use anderson_core::spectra::{decay_profile, diagonalize, localization_census};
use anderson_core::transfer::lyapunov_estimate;

fn bernoulli() -> SiteDistribution {
    SiteDistribution::atoms(&[(0.0, 0.5), (1.0, 0.5)]).unwrap()
}

#[test]
fn median_eigenvector_rate_brackets_lyapunov() {
    let d = bernoulli();
    let es = diagonalize(&build_hamiltonian(&sample_path(&d, 3, 0, (-100, 100)).unwrap()).unwrap()).unwrap();
    let k = es.size() / 2;
    let e = es.eigenvalues()[k];
    let fit = decay_profile(es.vector(k), -100).unwrap();
    let gamma = lyapunov_estimate(&d, e, 100_000, 8, 3).unwrap().gamma;
    assert!(fit.rate > 0.5 * gamma && fit.rate < 2.0 * gamma, "rate {} vs γ {gamma}", fit.rate);
}

#[test]
fn free_chain_is_not_localized() {
    let d = SiteDistribution::point(0.0).unwrap();
    let c = localization_census(&d, 40, 1, 0).unwrap();
    let inner: Vec<_> = c.rows.iter().filter(|r| r.energy.abs() < 1.8).collect();
    assert!(inner.iter().all(|r| r.rate < 0.05), "{:?}", inner.iter().map(|r| r.rate).fold(0.0, f64::max));
}

#[test]
fn furstenberg_value_settles_under_refinement() {
    let d = SiteDistribution::uniform(0.0, 1.0).unwrap();
    let md = MatrixDistribution::anderson(&d, 0.5);
    let gammas: Vec<f64> = [256, 512, 1024, 2048]
        .iter()
        .map(|&g| furstenberg_gamma(&md, &invariant_measure(&md, g, 1e-11, 50_000).unwrap().measure))
        .collect();
    let gaps: Vec<f64> = gammas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(gaps[2] <= gaps[0] + 1e-6, "{gammas:?}");
    let direct = lyapunov_estimate(&d, 0.5, 100_000, 16, 5).unwrap();
    assert!((gammas[3] - direct.gamma).abs() < (3.0 * direct.stderr).max(5e-3));
}

#[test]
fn operator_and_monte_carlo_routes_agree() {
    // the density route needs an absolutely continuous law, so the uniform
    // law stands in for the Bernoulli one
    let d = SiteDistribution::uniform(0.0, 1.0).unwrap();
    let ops = rho_operator_with_budget(&d, 6, 48, RealGrid::new(32.0, 8192).unwrap()).unwrap();
    let v = ops[3];
    let mc = rho_l_monte_carlo(&d, 6, 4, 0, 10_000, 1).unwrap();
    assert!(
        (v.value - mc.value).abs() <= 3.0 * (mc.stderr + v.budget),
        "operator {} ± {} vs MC {} ± {}",
        v.value,
        v.budget,
        mc.value,
        mc.stderr
    );
}

#[test]
fn jacobian_matches_on_random_chains() {
    let mut rng = CounterRng::at(8, 0, 0);
    for l in 1..=3usize {
        for _ in 0..5 {
            let v: Vec<f64> = (0..2 * l + 1).map(|_| 4.0 * rng.next_uniform() - 2.0).collect();
            let k = (rng.next_uniform() * (2 * l + 1) as f64) as usize;
            let rep = jacobian_check(&v, k, 1e-5).unwrap();
            assert!(rep.relative_defect < 1e-4, "{rep:?}");
            assert!((rep.det_continued_fraction - rep.phi0_inverse_square).abs() < 1e-9 * rep.phi0_inverse_square);
            assert!(rep.ratio_defect < 1e-9);
        }
    }
}
