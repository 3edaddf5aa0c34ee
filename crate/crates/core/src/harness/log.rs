//! Per-run CSV log: `#`-prefixed provenance header, then one row per
//! evaluation point.

use std::fmt::Write as _;
use std::path::Path;

use super::HarnessError;

pub const COLUMNS: [&str; 11] = [
    "step",
    "episodic_score",
    "episodic_stderr",
    "excursions_score",
    "excursions_stderr",
    "exact_objective",
    "probe",
    "max_rho",
    "max_f",
    "actor_norm",
    "critic_norm",
];

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Float rendering with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub episodic: f64,
    pub episodic_stderr: f64,
    pub excursions: f64,
    pub excursions_stderr: f64,
    /// Exact weighted-excursions objective of the current policy, where a
    /// model exists.
    pub exact_objective: f64,
    /// Environment-specific policy probe, e.g. `π(a0)` in the aliased bin.
    pub probe: f64,
    pub max_rho: f64,
    pub max_f: f64,
    pub actor_norm: f64,
    pub critic_norm: f64,
}

impl LogRow {
    fn values(&self) -> [f64; 10] {
        [
            self.episodic,
            self.episodic_stderr,
            self.excursions,
            self.excursions_stderr,
            self.exact_objective,
            self.probe,
            self.max_rho,
            self.max_f,
            self.actor_norm,
            self.critic_norm,
        ]
    }

    /// Value of a named score column.
    pub fn get(&self, column: &str) -> Option<f64> {
        let i = COLUMNS.iter().position(|c| *c == column)?;
        if i == 0 {
            Some(self.step as f64)
        } else {
            Some(self.values()[i - 1])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// `key=value` provenance lines.
    pub header: Vec<String>,
    pub rows: Vec<LogRow>,
    pub failure: Option<String>,
}

impl RunLog {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new(), failure: None }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for h in &self.header {
            let _ = writeln!(out, "# {h}");
        }
        match &self.failure {
            None => out.push_str("# status=ok\n"),
            Some(msg) => {
                let _ = writeln!(out, "# status=failed: {}", msg.replace('\n', " "));
            }
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.step.to_string());
            for v in r.values() {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("csv.tmp");
        std::fs::write(&tmp, self.to_csv())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut log = RunLog::new(Vec::new());
        let mut seen_columns = false;
        for line in text.lines() {
            if let Some(h) = line.strip_prefix("# ") {
                if let Some(status) = h.strip_prefix("status=") {
                    if let Some(msg) = status.strip_prefix("failed: ") {
                        log.failure = Some(msg.to_string());
                    }
                } else {
                    log.header.push(h.to_string());
                }
                continue;
            }
            if !seen_columns {
                if line.split(',').ne(COLUMNS.iter().copied()) {
                    return Err(HarnessError::Log(format!("unexpected columns {line:?}")));
                }
                seen_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != COLUMNS.len() {
                return Err(HarnessError::Log(format!("row has {} fields", fields.len())));
            }
            let step = fields[0].parse().map_err(|_| HarnessError::Log(format!("bad step {:?}", fields[0])))?;
            let mut v = [0.0; 10];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f.parse().map_err(|_| HarnessError::Log(format!("bad number {f:?}")))?;
            }
            log.rows.push(LogRow {
                step,
                episodic: v[0],
                episodic_stderr: v[1],
                excursions: v[2],
                excursions_stderr: v[3],
                exact_objective: v[4],
                probe: v[5],
                max_rho: v[6],
                max_f: v[7],
                actor_norm: v[8],
                critic_norm: v[9],
            });
        }
        Ok(log)
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Mean of a score column over all rows (area under the learning curve
    /// per evaluation point).
    pub fn auc(&self, column: &str) -> f64 {
        let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.get(column)).collect();
        if vals.is_empty() {
            return f64::NAN;
        }
        vals.iter().sum::<f64>() / vals.len() as f64
    }

    pub fn last(&self, column: &str) -> f64 {
        self.rows.last().and_then(|r| r.get(column)).unwrap_or(f64::NAN)
    }
}
