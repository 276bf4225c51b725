use std::f64::consts::PI;

use betaldp::potential::*;
use betaldp::{Complex64, DiscreteMeasure, Domain, DomainGrid, FieldSpec, Potential};

fn disc_field() -> FieldSpec {
    FieldSpec::from_weight_exponent(2.0, Potential::RadialPolynomial { coeffs: vec![0.0, 0.0, 1.0] }).unwrap()
}

fn quadratic_real() -> FieldSpec {
    FieldSpec::from_weight_exponent(2.0, Potential::RealPolynomial { coeffs: vec![0.0, 0.0, 0.5] }).unwrap()
}

fn disc_solution() -> EquilibriumSolution {
    let grid = DomainGrid::cells(&Domain::Disc { radius: 2.0 }, 60).unwrap();
    solve_equilibrium(&grid, &disc_field(), &SolverOptions::default()).unwrap()
}

fn circle_solution(n: usize) -> EquilibriumSolution {
    let grid = DomainGrid::cells(&Domain::Circle { radius: 1.0 }, n).unwrap();
    let f = FieldSpec::new(2.0, Potential::zero()).unwrap();
    solve_equilibrium(&grid, &f, &SolverOptions::default()).unwrap()
}

#[test]
fn disc_equilibrium_matches_closed_form() {
    let sol = disc_solution();
    assert!(sol.converged);
    assert!(sol.kkt_residual <= 1e-3, "kkt {}", sol.kkt_residual);
    let h = sol.grid.cell_size;
    let t0 = 0.5f64.sqrt();
    assert!((sol.support_radius() - t0).abs() <= 2.0 * h, "radius {}", sol.support_radius());
    // Hausdorff distance between support nodes and the disc of radius T0
    let uncovered = sol
        .grid
        .nodes
        .iter()
        .filter(|z| z.norm() < t0 - 2.0 * h)
        .any(|z| !sol.support_sr.iter().any(|&i| (sol.grid.nodes[i] - z).norm() <= 2.0 * h));
    assert!(!uncovered);
    // uniform density 2/pi
    let density: Vec<f64> = sol
        .grid
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() < t0 - 2.0 * h)
        .map(|(i, _)| sol.measure.weights()[i] / sol.grid.tau_mass[i])
        .collect();
    let mean = density.iter().sum::<f64>() / density.len() as f64;
    assert!((mean - 2.0 / PI).abs() < 0.05 * 2.0 / PI, "mean density {mean}");
    let exact = 0.5 + 0.5 * 2f64.ln();
    assert!((sol.rho - exact).abs() < 0.02, "rho {}", sol.rho);
    assert!((robin_constant(&sol).unwrap() - sol.rho).abs() < 1e-9);
}

#[test]
fn disc_green_and_rate_functions() {
    let sol = disc_solution();
    let exact = 0.5 + 0.5 * 2f64.ln();
    let z = Complex64::new(0.6, 0.8);
    assert!((green_function(&sol, z) - exact).abs() < 0.02);
    let j = rate_function(&sol, z);
    assert!((j - 2.0 * (1.0 - exact)).abs() < 0.05, "J {j}");
    for &i in &sol.support_sr {
        let zi = sol.grid.nodes[i];
        let (v, hit) = green_function_flagged(&sol, zi);
        assert!(hit);
        assert!((v - sol.field.r(zi)).abs() <= sol.kkt_residual + 1e-12);
        assert!(rate_function(&sol, zi).abs() <= 3.0 * sol.kkt_residual * 2.0);
    }
    let far = Complex64::new(10.0 * sol.grid.domain.diameter(), 0.0);
    assert!((green_function(&sol, far) - far.norm().ln() - sol.rho).abs() <= 0.05);
}

#[test]
fn disc_supports_agree_and_counterexample_fails() {
    let sol = disc_solution();
    let report = extract_supports(&sol, 1e-3, sol.default_tol_eq());
    assert_eq!(report.verdict, SupportVerdict::Holds, "fraction {}", report.fraction);
    let sr: std::collections::HashSet<_> = report.support_sr.iter().collect();
    assert!(report.support_sr.iter().all(|i| report.support_srstar.contains(i)) || sr.is_empty());
    let counter = contact_counterexample(&sol).unwrap();
    let bad = extract_supports(&counter, 1e-3, counter.default_tol_eq());
    assert_eq!(bad.verdict, SupportVerdict::Fails);
    assert!(bad.support_srstar.len() as f64 >= 0.9 * counter.grid.len() as f64);
}

#[test]
fn uniform_disc_energy_close_to_solver() {
    let sol = disc_solution();
    let t0 = 0.5f64.sqrt();
    let w: Vec<f64> = sol
        .grid
        .nodes
        .iter()
        .zip(&sol.grid.tau_mass)
        .map(|(z, m)| if z.norm() <= t0 { *m } else { 0.0 })
        .collect();
    let mu = DiscreteMeasure::normalized(w).unwrap();
    let e = weighted_energy(&mu, &sol.grid, &sol.field).unwrap();
    assert!((e - sol.energy).abs() <= 0.05);
    assert!(e >= sol.energy - 1e-12);
}

#[test]
fn circle_equilibrium_is_uniform() {
    let sol = circle_solution(512);
    let n = sol.grid.len() as f64;
    let dev = sol
        .measure
        .weights()
        .iter()
        .map(|w| (w - 1.0 / n).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 2.0 / n);
    assert!(sol.rho.abs() < 0.02);
    assert!(green_function(&sol, Complex64::new(0.0, 0.0)).abs() < 0.02);
    let e = weighted_energy(&DiscreteMeasure::uniform(512).unwrap(), &sol.grid, &sol.field).unwrap();
    assert!(e.abs() <= 0.02);
}

#[test]
fn quadratic_real_case_kkt_and_symmetry() {
    let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 2000).unwrap();
    let sol = solve_equilibrium(&grid, &quadratic_real(), &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    assert!(sol.kkt_residual <= 1e-3);
    let (lo, hi) = sol.support_extent();
    assert!((lo + hi).abs() <= 2.0 * grid.cell_size, "extent {lo} {hi}");
    // nodes strictly inside the support carry weight
    let inner = sol.support_sr.len();
    assert!(inner as f64 >= 0.95 * ((hi - lo) / grid.cell_size));
    for (i, z) in grid.nodes.iter().enumerate() {
        assert!(rate_function(&sol, *z) >= -3.0 * sol.kkt_residual * 2.0, "node {i}");
    }
}

#[test]
fn doubling_beta_keeps_rate_nonnegative() {
    let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 400).unwrap();
    let f = quadratic_real().with_beta(4.0).unwrap();
    let sol = solve_equilibrium(&grid, &f, &SolverOptions::default()).unwrap();
    for z in &grid.nodes {
        assert!(rate_function(&sol, *z) >= 0.0);
    }
}

#[test]
fn refinement_is_roughly_first_order() {
    let steps = refinement_study(&Domain::interval(-3.0, 3.0), &quadratic_real(), 100, 4, &SolverOptions::default()).unwrap();
    let diffs: Vec<f64> = steps.windows(2).map(|w| (w[1].rho - w[0].rho).abs()).collect();
    for d in diffs.windows(2) {
        assert!(d[1] < d[0], "{diffs:?}");
    }
}

#[test]
fn solution_json_roundtrip() {
    let grid = DomainGrid::cells(&Domain::interval(-3.0, 3.0), 200).unwrap();
    let sol = solve_equilibrium(&grid, &quadratic_real(), &SolverOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sol.json");
    sol.save_json(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for key in ["\"nodes\"", "\"weights\"", "\"rho\"", "\"kkt_residual\"", "\"support_SR\"", "\"support_SRstar\""] {
        assert!(text.contains(key), "{key}");
    }
    let back = EquilibriumSolution::load_json(&path).unwrap();
    assert_eq!(back.measure, sol.measure);
    assert_eq!(back.grid, sol.grid);
    assert_eq!(back.support_sr, sol.support_sr);
    assert!((back.kkt_residual - sol.kkt_residual).abs() < 1e-9);
}
