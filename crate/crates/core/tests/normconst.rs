use betaldp::ensembles::ChainOptions;
use betaldp::field::Potential;
use betaldp::normconst::{
    energy_scaling_check, exact_partition_small_n, ratio_estimate_h_n, small_n_quadrature, telescope,
};
use betaldp::{Domain, DomainGrid, FieldSpec, Window};

fn quadratic() -> (DomainGrid, FieldSpec) {
    let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 200).unwrap();
    let field = FieldSpec::new(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap();
    (grid, field)
}

#[test]
fn gaussian_two_point_closed_form() {
    // Z_2 = int int (x-y)^2 exp(-2(x^2+y^2)) over R^2 = pi/4 up to the mass beyond 3 (about 1e-7)
    let (grid, field) = quadratic();
    let z = exact_partition_small_n(&grid, &field, 2, 16).unwrap();
    assert!((z.log_value - (std::f64::consts::PI / 4.0).ln()).abs() < 1e-6, "{} {}", z.log_value, (std::f64::consts::PI / 4.0).ln());
    assert!(z.error < 1e-10);
}

#[test]
fn ratio_matches_quadrature_quotient_at_two() {
    let (grid, field) = quadratic();
    let z2 = exact_partition_small_n(&grid, &field, 2, 16).unwrap();
    let z1 = exact_partition_small_n(&grid, &field.scaled(2.0), 1, 16).unwrap();
    let exact = z2.log_value - z1.log_value;
    let opts = ChainOptions::new(30_000, 0);
    let est = ratio_estimate_h_n(&grid, &field, 2, &opts, &[11, 12, 13, 14], 5).unwrap();
    assert!(est.equilibrated, "rhat {}", est.rhat);
    assert!(
        (est.log_h - exact).abs() <= 3.0 * est.log_h_se,
        "{} vs {exact} (se {})",
        est.log_h,
        est.log_h_se
    );
}

#[test]
fn ratio_scales_with_tau() {
    let (grid, field) = quadratic();
    let opts = ChainOptions::new(8_000, 0);
    let a = ratio_estimate_h_n(&grid, &field, 4, &opts, &[5], 4).unwrap();
    let b = ratio_estimate_h_n(&grid.clone().with_tau_scale(3.0), &field, 4, &opts, &[5], 4).unwrap();
    assert!((b.log_h - a.log_h - 3f64.ln()).abs() < 1e-10);
}

#[test]
fn telescoped_three_matches_quadrature() {
    let (grid, field) = quadratic();
    let z2 = exact_partition_small_n(&grid, &field, 2, 16).unwrap();
    let z3 = exact_partition_small_n(&grid, &field, 3, 16).unwrap();
    let opts = ChainOptions::new(30_000, 0);
    let step = ratio_estimate_h_n(&grid, &field, 3, &opts, &[21, 22, 23, 24], 5).unwrap();
    let t = telescope(&z2, &[step]).unwrap();
    let tele = &t[1];
    assert!(
        (tele.log_value - z3.log_value).abs() <= 3.0 * tele.error,
        "{} vs {} (err {})",
        tele.log_value,
        z3.log_value,
        tele.error
    );
    let rep = energy_scaling_check(&t, 1.0).unwrap();
    assert_eq!(rep.sequence.len(), 2);
}

#[test]
fn planar_three_point_quadrature() {
    // Ginibre: Z_n = pi^n prod_{k<n} k! / (2n)^{n(n+1)/2} * n! over the plane
    let grid = DomainGrid::cells(&Domain::Disc { radius: 2.0 }, 8).unwrap();
    let field = FieldSpec::new(2.0, Potential::RadialPolynomial { coeffs: vec![0.0, 0.0, 1.0] }).unwrap();
    let w = Window::Annulus {
        center: Default::default(),
        inner: 0.5,
        outer: 2.0,
    };
    for n in 2..=3usize {
        let q = small_n_quadrature(&grid, &field, &w, n, 6).unwrap();
        let nf = n as f64;
        let mut exact = nf * std::f64::consts::PI.ln() - 0.5 * nf * (nf + 1.0) * (2.0 * nf).ln();
        let lfact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        exact += (0..n).map(lfact).sum::<f64>() + lfact(n);
        // the mass beyond radius 2 is of order 1e-6
        assert!((q.log_z - exact).abs() < 1e-5, "n={n}: {} vs {exact}", q.log_z);
        assert!(q.psi > 0.0 && q.psi < 1.0);
        assert!(q.psi <= q.psi_any && q.psi_any <= nf * q.psi + 1e-12);
    }
}
