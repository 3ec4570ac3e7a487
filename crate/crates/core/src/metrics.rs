//! Success rate, oracle success rate, SPL and the compute-adjusted success rate.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no episodes to aggregate")]
    Empty,
    #[error("episode {0} has no shortest-path length")]
    MissingShortestPath(usize),
}

/// What the metrics need from one finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub level: u8,
    /// Declared found, confirmed by the oracle at the final pose, within budget.
    pub success: bool,
    /// Some trajectory point satisfied the goal oracle.
    pub oracle_success: bool,
    /// Shortest obstacle-free path length from the start, m.
    pub shortest_length: Option<f64>,
    /// Length actually traveled, m.
    pub actual_length: f64,
    /// Compute time, s.
    pub ct: f64,
    /// Travel time, s.
    pub tt: f64,
}

/// `1 - (ct + tt) / t_max`, clamped to `[0, 1]`; zero for a non-positive budget.
pub fn interaction_term(ct: f64, tt: f64, t_max: f64) -> f64 {
    if !(t_max > 0.0) {
        return 0.0;
    }
    (1.0 - (ct + tt) / t_max).clamp(0.0, 1.0)
}

fn fraction(outcomes: &[EpisodeOutcome], pred: impl Fn(&EpisodeOutcome) -> bool) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(outcomes.iter().filter(|o| pred(o)).count() as f64 / outcomes.len() as f64)
}

pub fn sr(outcomes: &[EpisodeOutcome]) -> Result<f64, MetricsError> {
    fraction(outcomes, |o| o.success)
}

pub fn osr(outcomes: &[EpisodeOutcome]) -> Result<f64, MetricsError> {
    fraction(outcomes, |o| o.oracle_success)
}

/// Mean of `success · l / max(p, l)`. A success with `l = p = 0` counts fully.
pub fn spl(outcomes: &[EpisodeOutcome]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut total = 0.0;
    for (i, o) in outcomes.iter().enumerate() {
        let l = o.shortest_length.ok_or(MetricsError::MissingShortestPath(i))?;
        if o.success {
            let denom = o.actual_length.max(l);
            total += if denom > 0.0 { (l / denom).clamp(0.0, 1.0) } else { 1.0 };
        }
    }
    Ok(total / outcomes.len() as f64)
}

/// SR times the mean interaction term over every episode.
pub fn casr(outcomes: &[EpisodeOutcome], t_max: f64) -> Result<f64, MetricsError> {
    let sr = sr(outcomes)?;
    let mean_i = outcomes.iter().map(|o| interaction_term(o.ct, o.tt, t_max)).sum::<f64>() / outcomes.len() as f64;
    Ok((sr * mean_i).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub episodes: usize,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub casr: f64,
    pub mean_ct: f64,
    pub mean_tt: f64,
}

impl LevelMetrics {
    pub fn compute(outcomes: &[EpisodeOutcome], t_max: f64) -> Result<Self, MetricsError> {
        let n = outcomes.len() as f64;
        Ok(LevelMetrics {
            episodes: outcomes.len(),
            sr: sr(outcomes)?,
            osr: osr(outcomes)?,
            spl: spl(outcomes)?,
            casr: casr(outcomes, t_max)?,
            mean_ct: outcomes.iter().map(|o| o.ct).sum::<f64>() / n,
            mean_tt: outcomes.iter().map(|o| o.tt).sum::<f64>() / n,
        })
    }
}

/// Per-level metrics plus the pooled average over all episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub method: String,
    pub t_max: f64,
    /// Keyed `L1`..`L4`; levels without episodes are absent.
    pub levels: BTreeMap<String, LevelMetrics>,
    pub average: LevelMetrics,
    /// Episodes that aborted and are excluded from every metric.
    #[serde(default)]
    pub aborted: usize,
}

const COLUMNS: [&str; 5] = ["L1", "L2", "L3", "L4", "Avg"];

impl MetricsReport {
    pub fn from_outcomes(method: &str, outcomes: &[EpisodeOutcome], t_max: f64) -> Result<Self, MetricsError> {
        let mut by_level: BTreeMap<String, Vec<EpisodeOutcome>> = BTreeMap::new();
        for o in outcomes {
            by_level.entry(format!("L{}", o.level)).or_default().push(o.clone());
        }
        let levels = by_level
            .iter()
            .map(|(k, v)| LevelMetrics::compute(v, t_max).map(|m| (k.clone(), m)))
            .collect::<Result<_, _>>()?;
        Ok(MetricsReport {
            schema_version: REPORT_SCHEMA_VERSION,
            method: method.to_string(),
            t_max,
            levels,
            average: LevelMetrics::compute(outcomes, t_max)?,
            aborted: 0,
        })
    }

    fn column(&self, name: &str) -> Option<&LevelMetrics> {
        if name == "Avg" {
            Some(&self.average)
        } else {
            self.levels.get(name)
        }
    }

    /// Aligned text table: one row per metric, one column per level plus Avg.
    pub fn to_table(&self) -> String {
        let mut out = format!("{} (t_max = {} s)\n", self.method, self.t_max);
        let _ = write!(out, "{:<8}", "");
        for c in COLUMNS {
            let _ = write!(out, "{c:>9}");
        }
        out.push('\n');
        for (name, get) in metric_rows() {
            let _ = write!(out, "{name:<8}");
            for c in COLUMNS {
                let cell = self.column(c).map(|m| format_cell(name, get(m))).unwrap_or_else(|| "-".into());
                let _ = write!(out, "{cell:>9}");
            }
            out.push('\n');
        }
        if self.aborted > 0 {
            let _ = writeln!(out, "aborted episodes: {}", self.aborted);
        }
        out
    }
}

type Getter = fn(&LevelMetrics) -> f64;

fn metric_rows() -> [(&'static str, Getter); 7] {
    [
        ("SR", |m| m.sr),
        ("OSR", |m| m.osr),
        ("SPL", |m| m.spl),
        ("CASR", |m| m.casr),
        ("CT [s]", |m| m.mean_ct),
        ("TT [s]", |m| m.mean_tt),
        ("N", |m| m.episodes as f64),
    ]
}

fn format_cell(metric: &str, v: f64) -> String {
    match metric {
        "N" => format!("{v:.0}"),
        "CT [s]" | "TT [s]" => format!("{v:.1}"),
        _ => format!("{v:.3}"),
    }
}

/// Methods side by side: for each metric, one row per method across L1..L4 and Avg.
pub fn comparison_table(reports: &[MetricsReport]) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6) + 2;
    let mut out = String::new();
    for (name, get) in metric_rows() {
        let _ = write!(out, "{name:<width$}");
        for c in COLUMNS {
            let _ = write!(out, "{c:>9}");
        }
        out.push('\n');
        for r in reports {
            let _ = write!(out, "{:<width$}", r.method);
            for c in COLUMNS {
                let cell = r.column(c).map(|m| format_cell(name, get(m))).unwrap_or_else(|| "-".into());
                let _ = write!(out, "{cell:>9}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
