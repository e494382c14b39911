use std::collections::BTreeMap;

use regensip::config::ExperimentConfig;
use regensip::coupling::{phi_decomposition, CouplingBundle, CouplingMode};
use regensip::generators::{true_greeks, ModelSpec};
use regensip::harness::{certify_bound, run_phi_diagnostics, run_rate_experiment, run_tail_experiment};
use regensip::output::{ExperimentOutput, RunManifest, Table};
use regensip::stats::{wilson, Z95};
use regensip::Error;
use statrs::distribution::{Binomial, Discrete};

fn small_config() -> ExperimentConfig {
    ExperimentConfig::parse(
        "[model]\nfamily = \"gamma-gaussian\"\n[experiment]\np = 3.0\nt_grid = [32.0, 64.0, 128.0, 256.0]\n\
         replications = 50\nbootstrap = 100\n[rng]\nroot_seed = 17\n",
    )
    .unwrap()
}

#[test]
fn snapshot_reparses_to_the_same_config() {
    let cfg = small_config();
    let again = ExperimentConfig::parse(&cfg.snapshot().unwrap()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.experiment.replications, 50);
    assert_eq!(again.coupling.mode, CouplingMode::SharedInnovations);
}

#[test]
fn config_errors_are_reported_by_kind() {
    let err = ExperimentConfig::parse("[model]\nfamily = \"gamma-gaussian\"\n[experiment]\np = \n").unwrap_err();
    assert!(matches!(err, Error::ConfigParse(_)), "{err}");

    let err = ExperimentConfig::parse("[model]\nfamily = \"gamma-gaussian\"\n[experiment]\np = 3.0\nbogus = 1\n")
        .unwrap_err();
    assert!(matches!(err, Error::ConfigParse(_)), "{err}");

    let err = ExperimentConfig::parse("[model]\nfamily = \"pareto-cycle\"\n[experiment]\np = 4.0\n").unwrap_err();
    assert!(matches!(err, Error::ConfigInvalid(_)), "{err}");
    assert!(err.to_string().contains("pareto"), "{err}");

    let mut cfg = small_config();
    cfg.experiment.replications = 10;
    assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
}

/// Exact coverage of the Wilson interval under Binomial(n, p), summed over
/// all outcomes; it should sit near the nominal 95% for moderate n.
#[test]
fn wilson_interval_has_near_nominal_coverage() {
    for &(n, p) in &[(200u64, 0.05), (500, 0.3), (1000, 0.01)] {
        let binom = Binomial::new(p, n).unwrap();
        let coverage: f64 = (0..=n)
            .filter(|&k| {
                let (lo, hi) = wilson(k, n, Z95);
                lo <= p && p <= hi
            })
            .map(|k| binom.pmf(k))
            .sum();
        assert!(coverage > 0.92 && coverage < 0.98, "n={n} p={p}: coverage {coverage}");
    }
}

#[test]
fn experiments_are_deterministic_in_the_seed() {
    let cfg = small_config();
    let a = run_rate_experiment(&cfg).unwrap();
    let b = run_rate_experiment(&cfg).unwrap();
    assert_eq!(a.slope.to_bits(), b.slope.to_bits());
    assert_eq!(a.per_t, b.per_t);

    let mut other = cfg.clone();
    other.rng.root_seed = 18;
    let c = run_rate_experiment(&other).unwrap();
    assert_ne!(a.slope.to_bits(), c.slope.to_bits());

    let t1 = run_tail_experiment(&cfg).unwrap();
    let t2 = run_tail_experiment(&cfg).unwrap();
    assert_eq!(t1.estimates, t2.estimates);
}

#[test]
fn decomposition_holds_for_every_replication_in_a_bundle_sweep() {
    let model = ModelSpec::default_for("compound-jump").unwrap();
    let g = true_greeks(&model, 3.0).unwrap();
    for rep in 0..5 {
        let b = CouplingBundle::build(&model, &g, CouplingMode::Independent, 500.0, 3, rep).unwrap();
        let d = phi_decomposition(&b, 500.0, 0.5).unwrap();
        assert!(d.residual <= d.tolerance(), "rep {rep}: {} > {}", d.residual, d.tolerance());
    }
}

#[test]
fn phi_report_names_the_dominant_terms() {
    let mut cfg = small_config();
    cfg.experiment.t_grid = vec![64.0, 256.0];
    cfg.experiment.replications = 60;
    let rep = run_phi_diagnostics(&cfg).unwrap();
    assert!(rep.max_residual < 1e-8);
    let dominant = rep.dominant_terms();
    assert!(!dominant.is_empty());
}

#[test]
fn outputs_and_manifest_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let out = run_rate_experiment(&cfg).unwrap().to_output(&cfg).unwrap();
    out.write(dir.path()).unwrap();
    for f in ["config.snapshot", "results.csv", "report.json", "plotdata_rate.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["root_seed"], 17);
    assert!(report["verdict"].is_string());

    let m = RunManifest::new("rate", "cfg.toml".as_ref(), dir.path(), 17);
    m.append(dir.path()).unwrap();
    m.append(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");

    let mut table = Table::new(&["a", "b"]);
    table.push(vec!["1".into(), "x,y".into()]);
    let plain = ExperimentOutput {
        snapshot: String::new(),
        results: table,
        report: serde_json::json!({}),
        plots: Vec::new(),
    };
    plain.write(dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv, "a,b\n1,\"x,y\"\n");
}

#[test]
fn certification_rejects_unknown_names_and_accepts_overrides() {
    assert!(certify_bound("no-such-bound", &BTreeMap::new(), 0).is_err());
    let mut params = BTreeMap::new();
    params.insert("t".to_string(), 30.0);
    let rec = certify_bound("poisson-inverse-tail", &params, 0).unwrap();
    assert_eq!(rec.points.len(), 1);
    assert!(rec.verdict.is_pass());
}
