use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Estimator, ExperimentConfig, RateSource, Scenario};
use super::{write_json, ExperimentOutcome, Verdict};
use crate::bernstein::{bm_sequence, tail_integrability, tail_mass_check, write_bm_csv, write_tail_csv};
use crate::domain::{Domain, DomainGrid, Window};
use crate::ensembles::{
    estimate_any_coordinate_prob, estimate_conditional_prob, estimate_exchangeable_prob, estimate_outlier_prob,
    fit_rate, predicted_rate, run_chains, sandwich_holds, write_chain_csv, write_chain_stats, ChainOutput,
    EnsembleConfig, LdpReport, OutlierRecord,
};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::normconst::{
    energy_scaling_check, exact_partition_small_n, ratio_estimate_h_n, small_n_quadrature, telescope,
    write_partition_csv, EnergyScalingReport, RatioEstimate,
};
use crate::potential::{
    contact_counterexample, extract_supports, radial_rate_function, radial_support_radius, solve_equilibrium,
    validate_superlogarithmic, EquilibriumSolution, SupportReport, SupportVerdict,
};

/// Gauss–Legendre order for the exact `n = 1, 2` partition functions.
pub const QUADRATURE_ORDER: usize = 16;
/// Acceptance rates outside this band fail the sample verdict.
const ACCEPTANCE_BAND: [f64; 2] = [0.05, 0.95];

fn outcome(scenario: Scenario) -> ExperimentOutcome {
    ExperimentOutcome {
        scenario,
        verdicts: Vec::new(),
        files: Vec::new(),
    }
}

fn solve(config: &ExperimentConfig, grid: &DomainGrid, field: &FieldSpec) -> Result<EquilibriumSolution> {
    let sol = solve_equilibrium(grid, field, &config.solver_options())?;
    if !sol.converged {
        return Err(Error::Unconverged { iterations: sol.iterations });
    }
    Ok(sol)
}

fn supports(sol: &EquilibriumSolution) -> SupportReport {
    extract_supports(sol, sol.tol_weight, sol.default_tol_eq())
}

fn kkt_verdict(sol: &EquilibriumSolution, tol: f64) -> Verdict {
    Verdict::new(
        "equilibrium-kkt",
        sol.converged && sol.kkt_residual <= tol,
        sol.kkt_residual,
        tol,
        format!("rho = {:.6}, energy = {:.6}, iterations = {}", sol.rho, sol.energy, sol.iterations),
    )
}

/// Solve, write `solution.json` and `support.json`, report KKT and support verdicts.
pub fn run_equilibrium_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let grid = config.build_grid()?;
    let sol = solve_equilibrium(&grid, &config.field, &config.solver_options())?;
    let mut o = outcome(Scenario::Equilibrium);
    sol.save_json(&out.join("solution.json"))?;
    let rep = supports(&sol);
    write_json(&out.join("support.json"), &rep)?;
    o.files.extend(["solution.json".into(), "support.json".into()]);
    o.verdicts.push(kkt_verdict(&sol, config.tolerances.kkt));
    o.verdicts.push(Verdict::new(
        "support-equality",
        rep.verdict != SupportVerdict::Fails,
        rep.fraction,
        crate::potential::SUPPORT_FAILS_FRACTION,
        format!("{:?}", rep.verdict).to_lowercase(),
    ));
    Ok(o)
}

fn chain_options(config: &ExperimentConfig, conditional: bool) -> crate::ensembles::ChainOptions {
    crate::ensembles::ChainOptions {
        snapshot_every: config.snapshot_every,
        conditional_every: if conditional { config.evaluate_every.max(1) } else { 0 },
        ..config.chain_options(0)
    }
}

fn seeds_for(config: &ExperimentConfig, n: usize) -> Vec<u64> {
    config.seeds.iter().map(|&s| super::derived_seed(s, n)).collect()
}

fn run_n(config: &ExperimentConfig, ens: &EnsembleConfig, conditional: bool) -> Result<Vec<ChainOutput>> {
    run_chains(ens, &chain_options(config, conditional), &seeds_for(config, ens.n))
}

fn psi_record(estimator: Estimator, ens: &EnsembleConfig, chains: &[ChainOutput]) -> OutlierRecord {
    match estimator {
        Estimator::Hits => estimate_outlier_prob(ens, chains),
        Estimator::Exchangeable => estimate_exchangeable_prob(ens, chains),
        Estimator::Conditional => estimate_conditional_prob(ens, chains),
    }
}

/// Chains per `n`: snapshot CSV, per-chain stats, acceptance verdict.
pub fn run_sample_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let grid = config.build_grid()?;
    let mut o = outcome(Scenario::Sample);
    let base = EnsembleConfig::new(config.n_grid[0], config.field.clone(), grid, config.window.clone())?;
    let mut worst = f64::NAN;
    let mut pass = true;
    for &n in &config.n_grid {
        let ens = base.with_n(n)?;
        let chains = run_n(config, &ens, false)?;
        let csv = format!("chain_n{n}.csv");
        let stats = format!("chain_stats_n{n}.jsonl");
        write_chain_csv(&out.join(&csv), &chains)?;
        write_chain_stats(&out.join(&stats), &chains)?;
        o.files.extend([csv, stats]);
        for c in &chains {
            let a = c.stats.acceptance_rate;
            if !(a >= ACCEPTANCE_BAND[0] && a <= ACCEPTANCE_BAND[1]) {
                pass = false;
                worst = a;
            } else if worst.is_nan() || (a - 0.3).abs() > (worst - 0.3).abs() {
                worst = a;
            }
        }
    }
    o.verdicts.push(Verdict::new(
        "chain-acceptance",
        pass,
        worst,
        ACCEPTANCE_BAND[0],
        format!("acceptance rates must lie in [{}, {}]", ACCEPTANCE_BAND[0], ACCEPTANCE_BAND[1]),
    ));
    Ok(o)
}

fn violation(id: &'static str, detail: String) -> Error {
    Error::HypothesisViolation { id, detail }
}

/// Hypotheses checked before sampling; the first failure is returned as an error.
fn check_hypotheses(config: &ExperimentConfig, sol: &EquilibriumSolution) -> Result<Vec<Verdict>> {
    let mut v = Vec::new();
    let rep = supports(sol);
    if rep.verdict == SupportVerdict::Fails {
        return Err(violation(
            "support-equality",
            format!(
                "S_R ≠ S_R*: {} of {} nodes differ ({:.1}%)",
                rep.symmetric_difference,
                rep.support_sr.len().max(rep.support_srstar.len()),
                100.0 * rep.fraction
            ),
        ));
    }
    v.push(Verdict::new(
        "support-equality",
        true,
        rep.fraction,
        crate::potential::SUPPORT_FAILS_FRACTION,
        format!("{:?}", rep.verdict).to_lowercase(),
    ));
    let grid = &sol.grid;
    if grid.unbounded {
        let s = validate_superlogarithmic(&sol.field, grid);
        if !s.pass {
            return Err(violation("superlogarithmic-growth", s.detail));
        }
        v.push(Verdict::new("superlogarithmic-growth", true, s.values[0], s.margin, s.detail));
        let a = config
            .hypotheses
            .tail_exponent
            .unwrap_or(grid.domain.dimension() as f64 + 1.0);
        let t = tail_integrability(grid, a);
        if !t.pass {
            return Err(violation(
                "tail-integrability",
                format!("exponent {a} does not exceed dimension {}", t.dimension),
            ));
        }
        v.push(Verdict::new("tail-integrability", true, a, t.dimension as f64, ""));
    }
    if config.hypotheses.check_bm {
        let bm = bm_sequence(grid, &sol.field, &config.hypotheses.bm_n_grid)?;
        if !bm.pass {
            return Err(violation(
                "bernstein-markov",
                format!("M_n^(1/n) decreasing = {}, final = {:.4}", bm.decreasing, bm.final_root),
            ));
        }
        v.push(Verdict::new(
            "bernstein-markov",
            true,
            bm.final_root,
            crate::bernstein::BM_ROOT_BAND,
            "",
        ));
    }
    Ok(v)
}

/// Radial field on a centred disc containing the support: closed form.
fn closed_form_rate(field: &FieldSpec, domain: &Domain, window: &Window) -> Option<f64> {
    let Domain::Disc { radius } = domain else {
        return None;
    };
    let t0 = radial_support_radius(field).ok()?;
    if t0 >= *radius {
        return None;
    }
    window
        .sample_points(domain, crate::ensembles::WINDOW_SAMPLES)
        .into_iter()
        .map(|z| radial_rate_function(field, z).ok())
        .try_fold(f64::INFINITY, |m, j| j.map(|j| m.min(j)))
}

#[derive(Serialize)]
struct LdpOutput<'a> {
    report: &'a LdpReport,
    rate_source: &'static str,
    rho: f64,
    kkt_residual: f64,
    any_coordinate: &'a [OutlierRecord],
}

fn write_psi_csv(path: &Path, psi: &[OutlierRecord], any: &[OutlierRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n", "psi_hat", "ci_low", "ci_high", "std_error", "method", "samples", "psi_any", "psi_any_se",
    ])?;
    for (p, a) in psi.iter().zip(any) {
        let method = serde_json::to_value(p.method)?;
        w.write_record([
            p.n.to_string(),
            p.psi_hat.to_string(),
            p.ci_low.to_string(),
            p.ci_high.to_string(),
            p.std_error.to_string(),
            method.as_str().unwrap_or_default().to_string(),
            p.samples.to_string(),
            a.psi_hat.to_string(),
            a.std_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Equilibrium, hypothesis checks, chains per `n`, rate fit.
pub fn run_ldp_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let grid = config.build_grid()?;
    let mut sol = solve(config, &grid, &config.field)?;
    if config.hypotheses.contact_counterexample {
        sol = contact_counterexample(&sol)?;
    }
    let mut o = outcome(Scenario::Ldp);
    o.verdicts.extend(check_hypotheses(config, &sol)?);
    sol.save_json(&out.join("solution.json"))?;
    o.files.push("solution.json".into());

    let field = sol.field.clone();
    let base = EnsembleConfig::new(config.n_grid[0], field.clone(), grid, config.window.clone())?;
    let conditional = config.estimator == Estimator::Conditional;
    let mut psi = Vec::new();
    let mut any = Vec::new();
    for &n in &config.n_grid {
        let ens = base.with_n(n)?;
        let chains = run_n(config, &ens, conditional)?;
        let p = psi_record(config.estimator, &ens, &chains);
        if let Some(w) = &p.warning {
            log::warn!("n = {n}: {w}");
        }
        psi.push(p);
        any.push(estimate_any_coordinate_prob(&ens, &chains));
    }
    write_psi_csv(&out.join("psi.csv"), &psi, &any)?;
    o.files.push("psi.csv".into());

    let bad: Vec<usize> = psi
        .iter()
        .zip(&any)
        .filter(|(p, a)| p.psi_hat > 0.0 && !sandwich_holds(p, a))
        .map(|(p, _)| p.n)
        .collect();
    o.verdicts.push(Verdict::new(
        "outlier-sandwich",
        bad.is_empty(),
        bad.len() as f64,
        0.0,
        format!("n values violating psi <= psi' <= n psi: {bad:?}"),
    ));

    let (predicted, source) = match config.rate_source {
        RateSource::Auto => match closed_form_rate(&field, &base.grid.domain, &config.window) {
            Some(r) => (r, "closed-form"),
            None => (predicted_rate(&sol, &config.window), "solver"),
        },
        RateSource::Solver => (predicted_rate(&sol, &config.window), "solver"),
    };
    let report = fit_rate(&psi, config.fit_model, predicted)?;
    let tol = &config.tolerances;
    if predicted.abs() < tol.zero_rate {
        let bound = tol.degenerate_se * report.fitted_rate_se;
        o.verdicts.push(Verdict::new(
            "ldp-degenerate",
            report.fitted_rate.abs() <= bound,
            report.fitted_rate,
            bound,
            "window meets the support; fitted rate must vanish within the standard-error band",
        ));
    } else {
        o.verdicts.push(Verdict::new(
            "ldp-rate",
            report.relative_gap <= tol.ldp_relative_gap,
            report.relative_gap,
            tol.ldp_relative_gap,
            format!("fitted {:.5} vs predicted {:.5} ({source})", report.fitted_rate, predicted),
        ));
    }
    write_json(
        &out.join("ldp_report.json"),
        &LdpOutput {
            report: &report,
            rate_source: source,
            rho: sol.rho,
            kkt_residual: sol.kkt_residual,
            any_coordinate: &any,
        },
    )?;
    o.files.push("ldp_report.json".into());
    Ok(o)
}

/// `log h_2` from exact quadrature: `log Z_2(Q) - log Z_1(2Q)`.
pub(crate) fn exact_log_h2(grid: &DomainGrid, field: &FieldSpec) -> Result<(f64, f64)> {
    let z2 = small_n_quadrature(grid, field, &Window::All, 2, QUADRATURE_ORDER)?;
    let z1 = small_n_quadrature(grid, &field.scaled(2.0), &Window::All, 1, QUADRATURE_ORDER)?;
    Ok((z2.log_z - z1.log_z, z2.error + z1.error))
}

fn write_ratio_csv(path: &Path, rows: &[RatioEstimate], target: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "log_h_over_n", "std_error", "target", "rhat"])?;
    for r in rows {
        let n = r.n as f64;
        w.write_record([
            r.n.to_string(),
            (r.log_h / n).to_string(),
            (r.log_h_se / n).to_string(),
            target.to_string(),
            r.rhat.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_scaling_csv(path: &Path, rep: &EnergyScalingReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "log_z_over_n2", "std_error", "target"])?;
    for (n, v, e) in &rep.sequence {
        w.write_record([n.to_string(), v.to_string(), e.to_string(), rep.target.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `(1/n) log h_n` over `n_grid` against `-rho beta`; optionally telescoped
/// `log Z_n` against `-(beta/2) E`.
pub fn run_ratio_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let grid = config.build_grid()?;
    let field = &config.field;
    let sol = solve(config, &grid, field)?;
    let target = -sol.rho * field.beta;
    let every = config.evaluate_every;
    let opts = config.chain_options(0);
    let ratio = |n: usize| ratio_estimate_h_n(&grid, field, n, &opts, &seeds_for(config, n), every);
    let mut o = outcome(Scenario::Ratio);

    let rows = config
        .n_grid
        .iter()
        .filter(|&&n| n >= 2)
        .map(|&n| ratio(n))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::Config("ratio scenario needs some n >= 2".into()));
    }
    write_ratio_csv(&out.join("ratio.csv"), &rows, target)?;
    o.files.push("ratio.csv".into());
    let last = rows.last().expect("non-empty");
    let value = last.log_h / last.n as f64;
    let gap = (value - target).abs() / target.abs().max(f64::MIN_POSITIVE);
    o.verdicts.push(Verdict::new(
        "h_n-limit",
        gap <= config.tolerances.ratio_relative_gap,
        gap,
        config.tolerances.ratio_relative_gap,
        format!("(1/n) log h_n = {value:.5} at n = {} vs -rho beta = {target:.5}", last.n),
    ));
    let unequilibrated: Vec<usize> = rows.iter().filter(|r| !r.equilibrated).map(|r| r.n).collect();
    o.verdicts.push(Verdict::new(
        "chain-equilibration",
        unequilibrated.is_empty(),
        rows.iter().map(|r| r.rhat).fold(f64::NEG_INFINITY, f64::max),
        crate::normconst::RHAT_THRESHOLD,
        format!("R-hat above threshold for n = {unequilibrated:?}"),
    ));
    if let Some(r2) = rows.iter().find(|r| r.n == 2) {
        let (exact, qerr) = exact_log_h2(&grid, field)?;
        let z = (r2.log_h - exact).abs() / (r2.log_h_se.hypot(qerr)).max(f64::MIN_POSITIVE);
        o.verdicts.push(Verdict::new(
            "h_2-anchor",
            z <= 3.0,
            z,
            3.0,
            format!("log h_2 chain {:.6} vs quadrature {exact:.6}", r2.log_h),
        ));
    }

    if config.telescope {
        let top = *config.n_grid.last().expect("validated");
        let anchor = exact_partition_small_n(&grid, field, 2, QUADRATURE_ORDER)?;
        let steps = (3..=top)
            .map(|n| match rows.iter().find(|r| r.n == n) {
                Some(r) => Ok(r.clone()),
                None => ratio(n),
            })
            .collect::<Result<Vec<_>>>()?;
        let records = telescope(&anchor, &steps)?;
        write_partition_csv(&out.join("partition.csv"), &records)?;
        let rep = energy_scaling_check(&records, sol.energy)?;
        write_scaling_csv(&out.join("energy_scaling.csv"), &rep)?;
        o.files.extend(["partition.csv".into(), "energy_scaling.csv".into()]);
        let tol = config.tolerances.scaling_gap;
        let (value, rule) = if rep.target != 0.0 {
            (rep.final_relative_gap, "relative")
        } else {
            (rep.final_gap, "absolute")
        };
        o.verdicts.push(Verdict::new(
            "energy-scaling",
            value <= tol,
            value,
            tol,
            format!("{rule} gap of (1/n^2) log Z_n to {:.5}", rep.target),
        ));
    }
    Ok(o)
}

/// `M_n` table and, if `tail_n_grid` is set, tail-mass decay.
pub fn run_bm_experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    let grid = config.build_grid()?;
    let mut o = outcome(Scenario::Bm);
    let bm = bm_sequence(&grid, &config.field, &config.n_grid)?;
    write_bm_csv(&out.join("bm.csv"), &bm.rows)?;
    o.files.push("bm.csv".into());
    o.verdicts.push(Verdict::new(
        "bernstein-markov",
        bm.pass,
        bm.final_root,
        crate::bernstein::BM_ROOT_BAND,
        format!("decreasing = {}", bm.decreasing),
    ));
    if !config.tail_n_grid.is_empty() {
        let sol = solve(config, &grid, &config.field)?;
        let seed = config.seeds.first().copied().unwrap_or(0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tail = tail_mass_check(
            &sol,
            &config.tail_n_grid,
            config.field.beta,
            config.tail_dilation_cells,
            config.trials,
            &mut rng,
        )?;
        write_tail_csv(&out.join("tail.csv"), &tail)?;
        o.files.push("tail.csv".into());
        o.verdicts.push(Verdict::new(
            "tail-decay",
            tail.pass,
            tail.fit_slope,
            0.0,
            format!("R^2 = {:.4}", tail.r2),
        ));
    }
    Ok(o)
}
