use std::path::Path;

use betaldp::experiments::{error_exit_code, run_experiment, ExperimentConfig};
use betaldp::Error;

const DISC_FIELD: &str = r#""field":{"beta":2,"q":{"kind":"radial_polynomial","coeffs":[0,0,1]}},"domain":{"kind":"disc","radius":2}"#;

fn cfg(body: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!("{{{body}}}")).unwrap()
}

fn small_ldp(extra: &str) -> ExperimentConfig {
    cfg(&format!(
        r#""scenario":"ldp",{DISC_FIELD},"grid":{{"resolution":30}},
        "window":{{"kind":"annulus","inner":0.95,"outer":1.05}},
        "n_grid":[4,6,8,10],"seeds":[1,2],"sweeps":1500,"burn_in":500,
        "hypotheses":{{"check_bm":false{extra}}}"#
    ))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn unknown_keys_and_bad_grids_are_rejected() {
    let bad = [
        format!(r#"{{"scenario":"equilibrium",{DISC_FIELD},"colour":1}}"#),
        format!(r#"{{"scenario":"equilibrium",{DISC_FIELD},"grid":{{"resolutoin":3}}}}"#),
        format!(r#"{{"scenario":"ldp",{DISC_FIELD},"n_grid":[8,4],"seeds":[1],"sweeps":10000}}"#),
        format!(r#"{{"scenario":"ldp",{DISC_FIELD},"n_grid":[4,8],"seeds":[1],"sweeps":100,"burn_in":100}}"#),
        format!(r#"{{"scenario":"ratio",{DISC_FIELD},"n_grid":[4],"seeds":[],"sweeps":10000}}"#),
        r#"{"scenario":"bm","field":{"beta":2,"q":{"kind":"real_polynomial","coeffs":[0,0,1]}},"n_grid":[3]}"#.to_string(),
    ];
    for text in bad {
        match ExperimentConfig::from_json(&text) {
            Err(e @ Error::Config(_)) => assert_eq!(error_exit_code(&e), 3),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn equilibrium_scenario_writes_solution() {
    let c = cfg(&format!(r#""scenario":"equilibrium",{DISC_FIELD},"grid":{{"resolution":40}}"#));
    let dir = tempfile::tempdir().unwrap();
    let o = run_experiment(&c, dir.path()).unwrap();
    assert_eq!(o.exit_code(), 0, "{o:?}");
    for f in ["solution.json", "support.json", "verdicts.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn ldp_outputs_are_byte_reproducible() {
    let c = small_ldp("");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run_experiment(&c, a.path()).unwrap();
    run_experiment(&c, b.path()).unwrap();
    for f in &oa.files {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let header = String::from_utf8(read(a.path(), "psi.csv")).unwrap();
    assert!(header.starts_with("n,psi_hat,ci_low,ci_high,std_error,method,samples,psi_any,psi_any_se\n"));
}

#[test]
fn contact_counterexample_is_refused() {
    let c = small_ldp(r#","contact_counterexample":true"#);
    let dir = tempfile::tempdir().unwrap();
    match run_experiment(&c, dir.path()) {
        Err(e @ Error::HypothesisViolation { id: "support-equality", .. }) => {
            assert!(e.to_string().contains("S_R ≠ S_R*"));
            assert_eq!(error_exit_code(&e), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncated_line_needs_growth_parameter() {
    let text = r#"{"scenario":"bm","field":{"beta":2,"q":{"kind":"real_polynomial","coeffs":[0,0,0.5]}},
        "grid":{"truncate":"line"},"n_grid":[4]}"#;
    assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Config(_))));
    let text = r#"{"scenario":"bm","field":{"beta":2,"q":{"kind":"real_polynomial","coeffs":[0,0,0.5]},"superlog_b":1},
        "grid":{"truncate":"line","resolution":600},"n_grid":[5,10,20]}"#;
    let dir = tempfile::tempdir().unwrap();
    let o = run_experiment(&ExperimentConfig::from_json(text).unwrap(), dir.path()).unwrap();
    assert_eq!(o.verdicts[0].id, "bernstein-markov");
    let csv = std::fs::read_to_string(dir.path().join("bm.csv")).unwrap();
    assert!(csv.starts_with("n,M_n,M_n_root\n"));
}

#[test]
fn ratio_scenario_anchor() {
    let c = cfg(r#""scenario":"ratio","field":{"beta":2,"q":{"kind":"real_polynomial","coeffs":[0,0,0.5]}},
        "domain":{"kind":"intervals","intervals":[[-3,3]]},"grid":{"resolution":600},
        "n_grid":[2,3],"seeds":[1,2,3],"sweeps":8000,"burn_in":1000,"evaluate_every":2,"telescope":true"#);
    let dir = tempfile::tempdir().unwrap();
    let o = run_experiment(&c, dir.path()).unwrap();
    let anchor = o.verdicts.iter().find(|v| v.id == "h_2-anchor").unwrap();
    assert!(anchor.pass, "{anchor:?}");
    let part = std::fs::read_to_string(dir.path().join("partition.csv")).unwrap();
    assert!(part.starts_with("n,beta,method,log_value,error\n2,"), "{part}");
    assert!(o.files.iter().any(|f| f == "ratio.csv"));
}
