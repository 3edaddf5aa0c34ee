use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use emphace_core::harness::analyze::analyze;
use emphace_core::harness::log::COLUMNS;
use emphace_core::harness::sweep::{halves, read_record, record_from, summarize, traces};
use emphace_core::harness::{run, sweep, RankBy, RunConfig, RunLog, SweepSpec};

const QUICK: &str = "env=counterexample\nagent=ace\nactor.alpha=0.1\ntotal_steps=2000\neval.every=500\n\
                     eval.rollouts=5\neval.pool_horizon=2000\neval.pool_stride=50\n";

#[test]
fn same_seed_gives_identical_logs() {
    let cfg = RunConfig::from_text(QUICK).unwrap().with_seed(3).unwrap();
    let a = run(&cfg).unwrap().to_csv();
    let b = run(&cfg).unwrap().to_csv();
    assert_eq!(a, b);
    let c = run(&cfg.with_seed(4).unwrap()).unwrap().to_csv();
    assert_ne!(a, c);
}

#[test]
fn log_header_echoes_the_config() {
    let cfg = RunConfig::from_text(QUICK).unwrap().with_seed(7).unwrap();
    let log = run(&cfg).unwrap();
    assert!(log.is_ok());
    let csv = log.to_csv();
    for line in cfg.echo() {
        assert!(csv.contains(&format!("# {line}\n")), "missing {line}");
    }
    assert!(csv.contains("# status=ok\n"));
    assert!(log.header.iter().any(|h| h.starts_with("version=")));
    let steps: Vec<usize> = log.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 500, 1000, 1500, 2000]);
}

#[test]
fn offpac_matches_ace_without_emphasis() {
    let base = RunConfig::from_text(QUICK).unwrap();
    let ace = run(&base.with_overrides([("actor.eta", "0".to_string())]).unwrap()).unwrap();
    let offpac = run(&base.with_overrides([("agent", "offpac".to_string())]).unwrap()).unwrap();
    let body = |log: &RunLog| log.to_csv().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&ace), body(&offpac));
}

#[test]
fn config_errors_are_reported() {
    assert!(RunConfig::from_text("actor.alpah=0.1\n").is_err());
    assert!(RunConfig::from_text("actor.alpha=fast\n").is_err());
    assert!(RunConfig::from_text("env=atari\n").is_err());
    assert!(RunConfig::from_text("actor.eta=1.5\n").is_err());
    assert!(RunConfig::from_text("agent=dpg\n").is_err());
}

#[test]
fn log_parses_back() {
    let text = format!(
        "# env=counterexample\n# status=failed: critic diverged\n{}\n\
         0,1.0e0,0.0e0,2.0e0,0.0e0,NaN,5.0e-1,1.0e0,1.0e0,0.0e0,0.0e0\n\
         10,3.0e0,0.0e0,4.0e0,0.0e0,NaN,5.0e-1,1.0e0,1.0e0,0.0e0,0.0e0\n",
        COLUMNS.join(",")
    );
    let log = RunLog::parse(&text).unwrap();
    assert_eq!(log.header, vec!["env=counterexample".to_string()]);
    assert_eq!(log.failure.as_deref(), Some("critic diverged"));
    assert_eq!(log.rows.len(), 2);
    assert_eq!(log.auc("episodic_score"), 2.0);
    assert_eq!(log.auc("excursions_score"), 3.0);
    assert_eq!(log.last("step"), 10.0);
    assert!(log.last("exact_objective").is_nan());
    assert!(RunLog::parse("step,score\n").is_err());
}

#[test]
fn grids_have_the_documented_values() {
    assert_eq!(halves(0, 3), vec![1.0, 0.5, 0.25, 0.125]);
    assert_eq!(traces(0, 2), vec![0.0, 0.5, 0.75]);
    assert_eq!(halves(0, 15).len(), 16);
    let spec = SweepSpec::from_text("actor.alpha=halves(0..15)\ncritic.lambda=traces(0..6)\nsweep.seeds=2\n").unwrap();
    assert_eq!(spec.combos().len(), 16 * 7);
    assert_eq!(spec.n_seeds, 2);
    // The last axis varies fastest.
    let c = spec.combos();
    assert_eq!((c[0]["actor.alpha"].as_str(), c[1]["critic.lambda"].as_str()), ("1", "0.5"));
    assert!(SweepSpec::from_text("actor.alpha=halves(3..1)\n").is_err());
    assert!(SweepSpec::from_text("sweep.seeds=0\n").is_err());
}

#[test]
fn singleton_sweep_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec::from_text(QUICK).unwrap();
    let summary = sweep(&spec, dir.path(), 1).unwrap();
    assert_eq!(summary.rows.len(), 1);
    for f in ["manifest.jsonl", "summary.csv", "summary.json", "runs/c0000_s000.csv", "runs/c0000_s000.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    // A doctored record proves the second pass reuses it instead of rerunning.
    let mut rec = read_record(dir.path(), 0, 0).unwrap();
    rec.auc_excursions = 123.0;
    std::fs::write(dir.path().join("runs/c0000_s000.json"), serde_json::to_string(&rec).unwrap()).unwrap();
    let again = sweep(&spec, dir.path(), 1).unwrap();
    assert_eq!(again.rows[0].excursions.mean, 123.0);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
    assert!(manifest.contains("123"));
}

fn fake_log(scores: &[f64]) -> RunLog {
    let text = format!(
        "{}\n{}",
        COLUMNS.join(","),
        scores
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{i},{s},0,{s},0,{s},0,1,1,0,0\n"))
            .collect::<String>()
    );
    RunLog::parse(&text).unwrap()
}

#[test]
fn summary_ranks_by_auc_and_puts_failures_last() {
    let spec = SweepSpec::from_text("actor.alpha=0.1,0.2,0.3\nsweep.seeds=2\n").unwrap();
    let combos = spec.combos();
    let low = [0.0, 1.0, 2.0];
    let high = [0.5, 1.5, 2.5];
    let mut failed = fake_log(&[9.0, 9.0, 9.0]);
    failed.failure = Some("actor diverged".into());
    let outcomes = [
        (0, fake_log(&low)),
        (0, fake_log(&low)),
        (1, fake_log(&high)),
        (1, fake_log(&high)),
        (2, fake_log(&[9.0, 9.0, 9.0])),
        (2, failed),
    ];
    let records: Vec<_> = outcomes
        .into_iter()
        .enumerate()
        .map(|(k, (c, log))| record_from(&combos[c], c, (k % 2) as u64, &Ok(log)))
        .collect();
    let summary = summarize(&spec, &records);
    assert_eq!(summary.rank_by, RankBy::Excursions);
    let order: Vec<usize> = summary.rows.iter().map(|r| r.config).collect();
    // The pointwise-dominant curve wins; the configuration with a failed seed
    // ranks last despite its higher scores.
    assert_eq!(order, vec![1, 0, 2]);
    assert_eq!(summary.rows[2].n_failed, 1);
    assert_abs_diff_eq!(summary.rows[0].excursions.mean, 1.5, epsilon = 1e-15);
    assert_eq!(summary.rows[0].excursions.stderr, 0.0);
    assert_eq!(summary.rows[0].params, BTreeMap::from([("actor.alpha".to_string(), "0.2".to_string())]));
}

#[test]
fn analyze_reports_exact_quantities() {
    let report = analyze("counterexample", r#"{"bin_probs": [[0.9, 0.1], [0.9, 0.1]], "eta": 1.0}"#).unwrap();
    let vec = |k: &str| -> Vec<f64> { serde_json::from_value(report[k].clone()).unwrap() };
    for (got, want) in vec("d_mu").iter().zip([0.5, 0.125, 0.375]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
    }
    for (got, want) in vec("m").iter().zip([0.5, 0.575, 0.425]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
    }
    assert!(report["true_gradient"].is_array());
    assert!(report["semi_gradient"].is_array());
    assert!(report["implicit_weighting"].is_array());
    assert!(analyze("counterexample", r#"{"colour": 1}"#).is_err());
    assert!(analyze("mountain-car", r#"{"theta": [0, 0, 0, 0]}"#).is_err());
}
