use betaldp::bernstein::{
    bm_constant, bm_sequence, kernel_sup_ratio, monic_lower_bound_check, monic_margin, monic_slack, sup_ratio,
    sup_restriction_check, tail_integrability, tail_mass_check, tail_neighbourhood, tail_ratio, WeightedBasis,
};
use betaldp::potential::solve_equilibrium;
use betaldp::{Complex64, Domain, DomainGrid, EquilibriumSolution, Error, FieldSpec, Potential, SolverOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn half_square() -> FieldSpec {
    FieldSpec::from_weight_exponent(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap()
}

fn disc_solution() -> EquilibriumSolution {
    let f = FieldSpec::from_weight_exponent(2.0, Potential::RadialPolynomial { coeffs: vec![0.0, 0.0, 1.0] }).unwrap();
    let grid = DomainGrid::cells(&Domain::Disc { radius: 2.0 }, 70).unwrap();
    solve_equilibrium(&grid, &f, &SolverOptions::default()).unwrap()
}

fn quadratic_solution() -> EquilibriumSolution {
    let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 1200).unwrap();
    solve_equilibrium(&grid, &half_square(), &SolverOptions::default()).unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn lebesgue_interval_is_bernstein_markov() {
    let grid = DomainGrid::cells(&Domain::interval(-1.0, 1.0), 4000).unwrap();
    let rep = bm_sequence(&grid, &half_square(), &[10, 20, 30, 40, 50]).unwrap();
    assert!(rep.decreasing, "{:?}", rep.rows);
    assert!(rep.final_root <= 1.1, "{}", rep.final_root);
    let basis = WeightedBasis::build(&grid, &half_square(), 50).unwrap();
    assert!(basis.orthonormality_defect() <= 1e-8);
}

#[test]
fn atomic_measure_is_singular() {
    let d = Domain::Discrete {
        points: (0..5).map(|k| [-1.0 + 0.5 * k as f64, 0.0]).collect(),
        masses: vec![0.2; 5],
    };
    let g = DomainGrid::cells(&d, 1).unwrap();
    match WeightedBasis::build(&g, &half_square(), 10) {
        Err(Error::SingularGram { degree }) => assert_eq!(degree, 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn kernel_polynomial_is_extremal_and_tau_covariant() {
    let grid = DomainGrid::cells(&Domain::interval(-1.0, 1.0), 2000).unwrap();
    let basis = WeightedBasis::build(&grid, &half_square(), 20).unwrap();
    let (m, _) = bm_constant(&basis);
    assert!((kernel_sup_ratio(&basis) - m).abs() <= 1e-6 * m);
    let scaled = WeightedBasis::build(&grid.clone().with_tau_scale(9.0), &half_square(), 20).unwrap();
    let (ms, _) = bm_constant(&scaled);
    assert!((ms - m / 3.0).abs() <= 1e-12 * m);
}

#[test]
fn sup_norm_lives_on_support() {
    let sol = disc_solution();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rep = sup_restriction_check(&sol, 20, 200, &mut rng).unwrap();
    assert!(rep.pass, "{rep:?}");
    let z = [c(0.0), c(1.0)];
    assert!(sup_ratio(&sol, 1, &z).unwrap() <= rep.tolerance);
}

#[test]
fn unit_circle_ratio_is_one() {
    let grid = DomainGrid::cells(&Domain::Circle { radius: 1.0 }, 256).unwrap();
    let f = FieldSpec::new(2.0, Potential::zero()).unwrap();
    let sol = solve_equilibrium(&grid, &f, &SolverOptions::default()).unwrap();
    assert_eq!(sol.support_sr.len(), grid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rep = sup_restriction_check(&sol, 6, 20, &mut rng).unwrap();
    assert_eq!(rep.max_ratio, 1.0);
}

#[test]
fn monic_bound() {
    let sol = disc_solution();
    for n in [5, 10, 20] {
        let mut p = vec![c(0.0); n + 1];
        p[n] = c(1.0);
        let m = monic_margin(&sol, n, &p).unwrap();
        // equality case: the margin vanishes up to discretisation
        assert!(m.abs() <= monic_slack(&sol, n), "n={n}: {m}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rep = monic_lower_bound_check(&sol, 30, 100, None, &mut rng).unwrap();
    assert_eq!(rep.violations, 0, "{rep:?}");

    let q = quadratic_solution();
    for k in 0..20 {
        let shift = -2.0 + 0.2 * k as f64;
        let m = monic_margin(&q, 1, &[c(-shift), c(1.0)]).unwrap();
        assert!(m >= -monic_slack(&q, 1), "c={shift}: {m}");
    }
}

#[test]
fn tail_mass_decays() {
    let sol = quadratic_solution();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rep = tail_mass_check(&sol, &[10, 20, 40], 2.0, 60, 50, &mut rng).unwrap();
    assert!(rep.pass, "{rep:?}");
    for w in rep.ratio_out.windows(2) {
        assert!(w[1] <= 0.1 * w[0], "{:?}", rep.ratio_out);
    }
    // p = 1
    let nb = tail_neighbourhood(&sol, 60).unwrap();
    let ones: Vec<f64> = [10, 40, 160].iter().map(|&n| tail_ratio(&sol, n, 2.0, &nb, &[c(1.0)])).collect();
    assert!(ones[2] < 1e-12 && ones.windows(2).all(|w| w[1] < w[0]), "{ones:?}");
    // nested neighbourhoods
    let wide = tail_neighbourhood(&sol, 120).unwrap();
    let p = [c(0.3), c(-1.0), c(0.5), c(2.0)];
    assert!(tail_ratio(&sol, 3, 2.0, &wide, &p) <= tail_ratio(&sol, 3, 2.0, &nb, &p));
    assert!(matches!(tail_neighbourhood(&sol, 5000), Err(Error::VacuousNeighbourhood)));
}

#[test]
fn lebesgue_tail_integrability() {
    let f = FieldSpec::new(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap();
    let grid = DomainGrid::truncated_line(&f, 1.0, 2000).unwrap();
    assert!(tail_integrability(&grid, 2.0).pass);
    assert!(!tail_integrability(&grid, 1.0).pass);
    let bounded = DomainGrid::cells(&Domain::interval(-1.0, 1.0), 100).unwrap();
    assert!(tail_integrability(&bounded, 0.5).pass);
}
