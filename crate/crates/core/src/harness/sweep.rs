//! Cartesian parameter sweeps over seeds, run in parallel, with per-run
//! logs, a resumable manifest and an AUC-ranked summary.
//!
//! A sweep file uses the run-config syntax. A key with one value is fixed; a
//! key with a comma-separated list, `halves(a..b)` (the values `(1/2)^i`) or
//! `traces(a..b)` (the values `1 - (1/2)^j`) becomes an axis. `sweep.seeds`
//! sets the number of seeds and `sweep.rank_by` the score used to order the
//! summary (`excursions`, `episodic` or `exact`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{parse_pairs, RunConfig};
use super::log::{fmt_f64, RunLog};
use super::{run, HarnessError};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: BTreeMap<String, String>,
    /// Swept keys in enumeration order; the last key varies fastest.
    pub axes: Vec<(String, Vec<String>)>,
    pub n_seeds: usize,
    pub rank_by: RankBy,
}

/// Score whose AUC orders the summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankBy {
    Episodic,
    Excursions,
    /// The exact objective column, where a model exists.
    Exact,
}

fn parse_range(body: &str) -> Result<(u32, u32), HarnessError> {
    let (a, b) = body
        .split_once("..")
        .ok_or_else(|| HarnessError::Sweep(format!("expected a..b, got {body:?}")))?;
    let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| HarnessError::Sweep(format!("bad bound {s:?}")));
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(HarnessError::Sweep(format!("empty range {body:?}")));
    }
    Ok((a, b))
}

/// `(1/2)^i` for `i` in `a..=b`.
pub fn halves(a: u32, b: u32) -> Vec<f64> {
    (a..=b).map(|i| 0.5f64.powi(i as i32)).collect()
}

/// `1 - (1/2)^j` for `j` in `a..=b`.
pub fn traces(a: u32, b: u32) -> Vec<f64> {
    (a..=b).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect()
}

fn expand(value: &str) -> Result<Vec<String>, HarnessError> {
    let v = value.trim();
    let grid = |body: &str, f: fn(u32, u32) -> Vec<f64>| -> Result<Vec<String>, HarnessError> {
        let (a, b) = parse_range(body)?;
        Ok(f(a, b).into_iter().map(|x| format!("{x}")).collect())
    };
    if let Some(body) = v.strip_prefix("halves(").and_then(|r| r.strip_suffix(')')) {
        return grid(body, halves);
    }
    if let Some(body) = v.strip_prefix("traces(").and_then(|r| r.strip_suffix(')')) {
        return grid(body, traces);
    }
    Ok(v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
}

impl SweepSpec {
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let pairs = parse_pairs(text)?;
        let mut base = BTreeMap::new();
        let mut axes = Vec::new();
        let mut n_seeds = 1;
        let mut rank_by = RankBy::Excursions;
        for (k, v) in pairs {
            match k.as_str() {
                "sweep.seeds" => {
                    n_seeds = v.parse().map_err(|_| HarnessError::Sweep(format!("bad sweep.seeds {v:?}")))?;
                }
                "sweep.rank_by" => {
                    rank_by = match v.as_str() {
                        "episodic" => RankBy::Episodic,
                        "excursions" => RankBy::Excursions,
                        "exact" => RankBy::Exact,
                        other => return Err(HarnessError::Sweep(format!("unknown ranking {other:?}"))),
                    };
                }
                _ => {
                    let values = expand(&v)?;
                    match values.len() {
                        0 => return Err(HarnessError::Sweep(format!("{k} has no values"))),
                        1 => {
                            base.insert(k, values.into_iter().next().unwrap_or_default());
                        }
                        _ => axes.push((k, values)),
                    }
                }
            }
        }
        if n_seeds == 0 {
            return Err(HarnessError::Sweep("sweep.seeds must be positive".into()));
        }
        let spec = Self { base, axes, n_seeds, rank_by };
        for combo in spec.combos() {
            RunConfig::from_pairs(combo)?;
        }
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Every parameter combination, base keys included.
    pub fn combos(&self) -> Vec<BTreeMap<String, String>> {
        let mut out = vec![self.base.clone()];
        for (k, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|m| {
                    values.iter().map(move |v| {
                        let mut m = m.clone();
                        m.insert(k.clone(), v.clone());
                        m
                    })
                })
                .collect();
        }
        out
    }

    /// The swept values of one combination.
    pub fn assignment(&self, combo: &BTreeMap<String, String>) -> BTreeMap<String, String> {
        self.axes.iter().filter_map(|(k, _)| combo.get(k).map(|v| (k.clone(), v.clone()))).collect()
    }
}

/// JSON has no NaN; non-finite values are written as `null` and read back as NaN.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(x: &[f64], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(x.iter().map(|v| v.is_finite().then_some(*v)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Option<f64>>::deserialize(d)?.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        }
    }
}

/// Manifest entry for one finished `(config, seed)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: usize,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub file: String,
    pub ok: bool,
    pub message: Option<String>,
    #[serde(with = "nan_as_null")]
    pub auc_episodic: f64,
    #[serde(with = "nan_as_null")]
    pub auc_excursions: f64,
    #[serde(with = "nan_as_null")]
    pub auc_exact: f64,
    #[serde(with = "nan_as_null")]
    pub final_episodic: f64,
    #[serde(with = "nan_as_null")]
    pub final_excursions: f64,
    #[serde(with = "nan_as_null")]
    pub final_exact: f64,
    #[serde(with = "nan_as_null")]
    pub final_probe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucStats {
    #[serde(with = "nan_as_null")]
    pub mean: f64,
    #[serde(with = "nan_as_null")]
    pub stderr: f64,
    /// 95% Student-t half-width.
    #[serde(with = "nan_as_null")]
    pub t95: f64,
}

impl AucStats {
    fn of(x: &[f64]) -> Self {
        Self { mean: stats::mean(x), stderr: stats::stderr(x), t95: stats::t_half_width(x, 0.95) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: usize,
    pub params: BTreeMap<String, String>,
    pub n_runs: usize,
    pub n_failed: usize,
    pub episodic: AucStats,
    pub excursions: AucStats,
    pub exact: AucStats,
    pub final_exact: AucStats,
    pub final_probe: AucStats,
    pub rank_episodic: usize,
    pub rank_excursions: usize,
    pub rank_exact: usize,
    pub seeds: Vec<u64>,
    #[serde(with = "nan_as_null::vec")]
    pub auc_episodic: Vec<f64>,
    #[serde(with = "nan_as_null::vec")]
    pub auc_excursions: Vec<f64>,
    #[serde(with = "nan_as_null::vec")]
    pub auc_exact: Vec<f64>,
    #[serde(with = "nan_as_null::vec")]
    pub final_exact_values: Vec<f64>,
    #[serde(with = "nan_as_null::vec")]
    pub final_probe_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub rank_by: RankBy,
    /// Ordered by rank on `rank_by`.
    pub rows: Vec<SummaryRow>,
}

impl SweepSummary {
    pub fn best(&self) -> Option<&SummaryRow> {
        self.rows.first()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "rank,config,params,n_runs,n_failed,\
             episodic_auc_mean,episodic_auc_stderr,episodic_auc_t95,\
             excursions_auc_mean,excursions_auc_stderr,excursions_auc_t95,\
             exact_auc_mean,exact_auc_stderr,exact_auc_t95,\
             final_exact_mean,final_exact_stderr,final_probe_mean,final_probe_stderr,\
             rank_episodic,rank_excursions,rank_exact\n",
        );
        for (i, r) in self.rows.iter().enumerate() {
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let nums = [
                r.episodic.mean,
                r.episodic.stderr,
                r.episodic.t95,
                r.excursions.mean,
                r.excursions.stderr,
                r.excursions.t95,
                r.exact.mean,
                r.exact.stderr,
                r.exact.t95,
                r.final_exact.mean,
                r.final_exact.stderr,
                r.final_probe.mean,
                r.final_probe.stderr,
            ];
            out.push_str(&format!("{},{},\"{}\",{},{}", i + 1, r.config, params.join(";"), r.n_runs, r.n_failed));
            for v in nums {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
            out.push_str(&format!(",{},{},{}\n", r.rank_episodic, r.rank_excursions, r.rank_exact));
        }
        out
    }
}

fn run_id(config: usize, seed: u64) -> String {
    format!("c{config:04}_s{seed:03}")
}

/// Turns a run outcome into its manifest record.
pub fn record_from(
    combo: &BTreeMap<String, String>,
    config: usize,
    seed: u64,
    outcome: &Result<RunLog, HarnessError>,
) -> RunRecord {
    let mut record = RunRecord {
        config,
        seed,
        params: combo.clone(),
        file: format!("runs/{}.csv", run_id(config, seed)),
        ok: false,
        message: None,
        auc_episodic: f64::NAN,
        auc_excursions: f64::NAN,
        auc_exact: f64::NAN,
        final_episodic: f64::NAN,
        final_excursions: f64::NAN,
        final_exact: f64::NAN,
        final_probe: f64::NAN,
    };
    match outcome {
        Ok(log) => {
            record.ok = log.is_ok();
            record.message = log.failure.clone();
            record.auc_episodic = log.auc("episodic_score");
            record.auc_excursions = log.auc("excursions_score");
            record.auc_exact = log.auc("exact_objective");
            record.final_episodic = log.last("episodic_score");
            record.final_excursions = log.last("excursions_score");
            record.final_exact = log.last("exact_objective");
            record.final_probe = log.last("probe");
        }
        Err(e) => record.message = Some(e.to_string()),
    }
    record
}

fn run_pair(combo: &BTreeMap<String, String>, seed: u64) -> Result<RunLog, HarnessError> {
    RunConfig::from_pairs(combo.clone()).and_then(|c| c.with_seed(seed)).and_then(|c| run(&c))
}

fn execute(combo: &BTreeMap<String, String>, config: usize, seed: u64, runs_dir: &Path) -> Result<RunRecord, HarnessError> {
    let id = run_id(config, seed);
    let outcome = run_pair(combo, seed);
    if let Ok(log) = &outcome {
        log.write(&runs_dir.join(format!("{id}.csv")))?;
    }
    let record = record_from(combo, config, seed, &outcome);
    let tmp = runs_dir.join(format!("{id}.json.tmp"));
    std::fs::write(&tmp, serde_json::to_string(&record)?)?;
    std::fs::rename(&tmp, runs_dir.join(format!("{id}.json")))?;
    Ok(record)
}

/// Runs every pair on the current rayon pool without touching the file
/// system.
pub fn sweep_in_memory(spec: &SweepSpec) -> SweepSummary {
    let combos = spec.combos();
    let jobs: Vec<(usize, u64)> = (0..combos.len())
        .flat_map(|c| (0..spec.n_seeds as u64).map(move |s| (c, s)))
        .collect();
    let records: Vec<RunRecord> =
        jobs.par_iter().map(|&(c, s)| record_from(&combos[c], c, s, &run_pair(&combos[c], s))).collect();
    summarize(spec, &records)
}

fn existing(runs_dir: &Path, combo: &BTreeMap<String, String>, config: usize, seed: u64) -> Option<RunRecord> {
    let text = std::fs::read_to_string(runs_dir.join(format!("{}.json", run_id(config, seed)))).ok()?;
    let rec: RunRecord = serde_json::from_str(&text).ok()?;
    (rec.params == *combo && rec.seed == seed).then_some(rec)
}

fn rank(rows: &[SummaryRow], key: impl Fn(&SummaryRow) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let score = |r: &SummaryRow| {
        let v = key(r);
        if r.n_failed > 0 || !v.is_finite() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    order.sort_by(|&a, &b| score(&rows[b]).total_cmp(&score(&rows[a])).then(rows[a].config.cmp(&rows[b].config)));
    let mut ranks = vec![0; rows.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Aggregates run records into an AUC-ranked summary. Configurations with any
/// failed seed rank after every configuration without failures.
pub fn summarize(spec: &SweepSpec, records: &[RunRecord]) -> SweepSummary {
    let combos = spec.combos();
    let mut rows: Vec<SummaryRow> = combos
        .iter()
        .enumerate()
        .map(|(config, combo)| {
            let mut recs: Vec<&RunRecord> = records.iter().filter(|r| r.config == config).collect();
            recs.sort_by_key(|r| r.seed);
            let col = |f: fn(&RunRecord) -> f64| recs.iter().filter(|r| r.ok).map(|r| f(r)).collect::<Vec<f64>>();
            let (ep, ex, exa) = (col(|r| r.auc_episodic), col(|r| r.auc_excursions), col(|r| r.auc_exact));
            let (fe, fp) = (col(|r| r.final_exact), col(|r| r.final_probe));
            SummaryRow {
                config,
                params: spec.assignment(combo),
                n_runs: recs.len(),
                n_failed: recs.iter().filter(|r| !r.ok).count(),
                episodic: AucStats::of(&ep),
                excursions: AucStats::of(&ex),
                exact: AucStats::of(&exa),
                final_exact: AucStats::of(&fe),
                final_probe: AucStats::of(&fp),
                rank_episodic: 0,
                rank_excursions: 0,
                rank_exact: 0,
                seeds: recs.iter().filter(|r| r.ok).map(|r| r.seed).collect(),
                auc_episodic: ep,
                auc_excursions: ex,
                auc_exact: exa,
                final_exact_values: fe,
                final_probe_values: fp,
            }
        })
        .collect();
    let re = rank(&rows, |r| r.episodic.mean);
    let rx = rank(&rows, |r| r.excursions.mean);
    let rj = rank(&rows, |r| r.exact.mean);
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank_episodic = re[i];
        row.rank_excursions = rx[i];
        row.rank_exact = rj[i];
    }
    rows.sort_by_key(|r| match spec.rank_by {
        RankBy::Episodic => r.rank_episodic,
        RankBy::Excursions => r.rank_excursions,
        RankBy::Exact => r.rank_exact,
    });
    SweepSummary { rank_by: spec.rank_by, rows }
}

/// Runs every `(combination, seed)` pair not already completed in `out`,
/// using `workers` threads, then writes `manifest.jsonl`, `summary.csv` and
/// `summary.json`.
pub fn sweep(spec: &SweepSpec, out: &Path, workers: usize) -> Result<SweepSummary, HarnessError> {
    let runs_dir: PathBuf = out.join("runs");
    std::fs::create_dir_all(&runs_dir)?;
    let combos = spec.combos();
    let jobs: Vec<(usize, u64)> = (0..combos.len())
        .flat_map(|c| (0..spec.n_seeds as u64).map(move |s| (c, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Sweep(e.to_string()))?;
    let records: Result<Vec<RunRecord>, HarnessError> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, s)| match existing(&runs_dir, &combos[c], c, s) {
                Some(rec) => Ok(rec),
                None => execute(&combos[c], c, s, &runs_dir),
            })
            .collect()
    });
    let records = records?;
    let mut manifest = String::new();
    for r in &records {
        manifest.push_str(&serde_json::to_string(r)?);
        manifest.push('\n');
    }
    std::fs::write(out.join("manifest.jsonl"), manifest)?;
    let summary = summarize(spec, &records);
    std::fs::write(out.join("summary.csv"), summary.to_csv())?;
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Reads the per-run record of a completed pair, if present.
pub fn read_record(out: &Path, config: usize, seed: u64) -> Result<RunRecord, HarnessError> {
    let text = std::fs::read_to_string(out.join("runs").join(format!("{}.json", run_id(config, seed))))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a finished run's log.
pub fn read_log(out: &Path, record: &RunRecord) -> Result<RunLog, HarnessError> {
    RunLog::read(&out.join(&record.file))
}
