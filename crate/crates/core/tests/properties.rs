use anderson_core::dynamics::{default_time_grid, rho_contribution, sup_correlator_sampled};
use anderson_core::furstenberg::{Convolution, MatrixDistribution, ProjectiveMeasure};
use anderson_core::kunz_souillard::{GridFunction, InversionMaps, KsOperators, RealGrid};
use anderson_core::model::{build_hamiltonian, FiniteHamiltonian, PotentialPath, SiteDistribution};
use anderson_core::rank_one::{borel_transform, mobius_defect, rank_one_perturb};
use anderson_core::spectra::{decay_profile, diagonalize, eigenvalues};
use anderson_core::transfer::{cocycle_product, product_of, step_matrix, Mat2};
use num_complex::Complex64;
use proptest::prelude::*;

fn potential(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len)
}

/// Diagonals of odd length `2L + 1`, `L` in `half`.
fn odd_potential(half: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    half.prop_flat_map(|l| prop::collection::vec(-3.0f64..3.0, 2 * l + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kingman_subadditivity(v in potential(20..200), e in -4.0f64..4.0, split in 1usize..19) {
        let n = v.len();
        let path = PotentialPath::from_values(1, v).unwrap();
        let whole = cocycle_product(e, &path, n).unwrap().log_norm();
        let head = cocycle_product(e, &path, split).unwrap().log_norm();
        let tail = cocycle_product(e, &path.shifted(split as i64), n - split).unwrap().log_norm();
        prop_assert!(whole <= head + tail + 1e-9 * (1.0 + whole.abs()));
    }

    #[test]
    fn determinant_stays_one(v in potential(1000..3000), e in -5.0f64..5.0) {
        let path = PotentialPath::from_values(1, v).unwrap();
        let p = cocycle_product(e, &path, path.len()).unwrap();
        prop_assert!(p.det_defect() < 1e-6);
    }

    #[test]
    fn short_products_reconstruct(v in potential(1..12), e in -3.0f64..3.0) {
        let steps: Vec<Mat2> = v.iter().map(|&x| *step_matrix(e, x).matrix()).collect();
        let mut naive = Mat2::diag(1.0, 1.0);
        for a in &steps {
            naive = a.mul(&naive);
        }
        let p = product_of(&steps).reconstruct();
        let scale = naive.max_abs();
        prop_assert!((p.a - naive.a).abs() <= 1e-12 * scale);
        prop_assert!((p.b - naive.b).abs() <= 1e-12 * scale);
        prop_assert!((p.c - naive.c).abs() <= 1e-12 * scale);
        prop_assert!((p.d - naive.d).abs() <= 1e-12 * scale);
    }

    #[test]
    fn herglotz_sign(v in odd_potential(1..15), x in -6.0f64..6.0, y in prop_oneof![-3.0f64..-1e-3, 1e-3f64..3.0]) {
        let h = FiniteHamiltonian::from_diagonal(v).unwrap();
        let mut phi = vec![0.0; h.size()];
        phi[0] = 1.0;
        let s = borel_transform(&h, &phi, Complex64::new(x, y)).unwrap();
        prop_assert!(s.sign_ok());
        prop_assert!(s.f.im * y > 0.0);
    }

    #[test]
    fn rank_one_interlacing(v in odd_potential(2..12), lambda in 0.01f64..10.0, j in 0usize..3) {
        let h = FiniteHamiltonian::from_diagonal(v).unwrap();
        let mut phi = vec![0.0; h.size()];
        phi[j] = 1.0;
        let before = eigenvalues(&h).unwrap();
        let after = rank_one_perturb(&h, &phi, lambda).unwrap().eigenvalues().unwrap();
        for k in 0..before.len() {
            prop_assert!(after[k] >= before[k] - 1e-10);
            if k + 1 < before.len() {
                prop_assert!(after[k] <= before[k + 1] + 1e-10);
            }
        }
    }

    #[test]
    fn mobius_cross_ratio(v in odd_potential(2..10), x in -3.0f64..3.0, y in 0.2f64..2.0) {
        let h = FiniteHamiltonian::from_diagonal(v).unwrap();
        let mut phi = vec![0.0; h.size()];
        phi[h.size() / 2] = 1.0;
        let d = mobius_defect(&h, &phi, [-2.0, -0.5, 1.0, 3.0], Complex64::new(x, y)).unwrap();
        prop_assert!(d < 1e-8);
    }

    #[test]
    fn cauchy_interlacing_under_growth(v in odd_potential(2..30)) {
        // H_L is H_{L+1} with its two end sites deleted
        let n = v.len();
        let small = eigenvalues(&FiniteHamiltonian::from_diagonal(v[1..n - 1].to_vec()).unwrap()).unwrap();
        let big = eigenvalues(&FiniteHamiltonian::from_diagonal(v).unwrap()).unwrap();
        for k in 0..small.len() {
            prop_assert!(big[k] <= small[k] + 1e-10 && small[k] <= big[k + 2] + 1e-10);
        }
    }

    #[test]
    fn completeness_and_domination(v in odd_potential(5..20)) {
        let l = (v.len() / 2) as i64;
        let es = diagonalize(&build_hamiltonian(&PotentialPath::from_values(-l, v).unwrap()).unwrap()).unwrap();
        prop_assert!(es.completeness_defect() < 1e-10);
        let t = default_time_grid();
        for m in [-l, -1, 0, 1, l] {
            let a = sup_correlator_sampled(&es, m, 0, &t).unwrap();
            prop_assert!(a <= rho_contribution(&es, m, 0).unwrap() + 1e-10);
        }
    }

    #[test]
    fn exact_exponentials_are_recovered(rate in 0.05f64..2.0, center in -10i64..10) {
        let psi: Vec<f64> = (-20..=20).map(|n: i64| (-rate * (n - center).abs() as f64).exp()).collect();
        let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let psi: Vec<f64> = psi.iter().map(|x| x / norm).collect();
        let fit = decay_profile(&psi, -20).unwrap();
        prop_assert_eq!(fit.center, center);
        prop_assert!((fit.rate - rate).abs() < 1e-9);
    }

    #[test]
    fn convolution_preserves_mass(e in -3.0f64..4.0, shift in 0usize..256) {
        let d = SiteDistribution::atoms(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let conv = Convolution::new(&MatrixDistribution::anderson(&d, e), 256);
        let mut w = vec![0.0; 256];
        w[shift] = 0.75;
        w[(shift + 100) % 256] = 0.25;
        let m = ProjectiveMeasure::from_weights(w).unwrap();
        let out = conv.apply(&m);
        prop_assert!((out.total() - 1.0).abs() < 1e-12);
        prop_assert!(out.weights().iter().all(|w| *w >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn inversion_is_an_l2_contraction(a in 0.3f64..1.5, w in 0.2f64..2.0) {
        let grid = RealGrid::new(8.0, 2048).unwrap();
        let maps = InversionMaps::new(grid);
        let f = GridFunction::from_fn(grid, |x| if x > a && x < a + w { 1.0 } else { 0.0 });
        let uf = maps.op_u(&f);
        prop_assert!(uf.l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn transfer_kernel_preserves_mass(e in -2.5f64..3.5, c in 1.5f64..4.0) {
        // nonnegative f supported away from 0 loses nothing to truncation
        let d = SiteDistribution::uniform(0.0, 1.0).unwrap();
        let grid = RealGrid::new(16.0, 4096).unwrap();
        let maps = InversionMaps::new(grid);
        let ops = KsOperators::new(&d, e, &maps).unwrap();
        let f = GridFunction::from_fn(grid, |x| (1.0 - (x - c).abs()).max(0.0));
        let tf = ops.op_t0(&f);
        let fine_grid = grid.refined();
        let fine_maps = InversionMaps::new(fine_grid);
        let fine_ops = KsOperators::new(&d, e, &fine_maps).unwrap();
        let ff = GridFunction::from_fn(fine_grid, |x| (1.0 - (x - c).abs()).max(0.0));
        let budget = (tf.l1_norm() - fine_ops.op_t0(&ff).l1_norm()).abs() + 1e-12 * f.l1_norm();
        prop_assert!((tf.l1_norm() - f.l1_norm()).abs() <= budget);
        prop_assert!(tf.l1_norm() <= f.l1_norm() + budget);
    }
}
