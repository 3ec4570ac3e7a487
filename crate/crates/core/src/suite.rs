//! Experiment orchestration: batches of episodes, depth sweeps and plot data.
//!
//! Every episode's inputs (goal, start pose, seed) are a pure function of the
//! master seed, the level and the episode index, so the same scenario is
//! replayed for every method and results never depend on list order or on
//! the number of worker threads.

use crate::frontier::BufferSnapshot;
use crate::geometry::Point;
use crate::metrics::{comparison_table, EpisodeOutcome, MetricsError, MetricsReport};
use crate::planner::{run_episode, EpisodeLog, EpisodeSpec, Method, PlannerParams, Sensing};
use crate::reasoning::{
    ReasoningBackend, RemoteBackend, RemoteConfig, RemoteSetupError, ScriptedBackend, ScriptedOracleParams,
};
use crate::seed;
use crate::world::{
    distance_to_goal_region, generate_goals, load_world_file, shortest_path_length, GoalParams, GoalSpec, Pose,
    SemanticWorld, WorldError,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use thiserror::Error;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "run-manifest.json";

const TAG_GOALS: u64 = 0x676f;
const TAG_START: u64 = 0x7374;
const TAG_REPETITION: u64 = 0x7265;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("malformed config: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("backend setup failed: {0}")]
    Backend(#[from] RemoteSetupError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed episode log {path}: {message}")]
    Log { path: String, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

fn config_err(field: &str, message: impl Into<String>) -> SuiteError {
    SuiteError::Config { field: field.to_string(), message: message.into() }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SuiteError + '_ {
    move |source| SuiteError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    Scripted(ScriptedOracleParams),
    Remote(RemoteConfig),
}

/// Where episodes start relative to the goal region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartParams {
    /// Straight-line distance band to the nearest success disk, m.
    pub min_distance: f64,
    pub max_distance: f64,
    pub attempts: usize,
}

impl Default for StartParams {
    fn default() -> Self {
        StartParams { min_distance: 15.0, max_distance: 30.0, attempts: 2000 }
    }
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    /// World file; relative paths resolve against the config file's directory.
    pub world: PathBuf,
    /// Output directory; relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub levels: Vec<u8>,
    pub episodes_per_level: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub planner: PlannerParams,
    #[serde(default)]
    pub sensing: Sensing,
    #[serde(default)]
    pub goals: GoalParams,
    #[serde(default)]
    pub start: StartParams,
    pub backend: BackendConfig,
}

impl SuiteConfig {
    /// Parses and validates, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, SuiteError> {
        let mut config: SuiteConfig = toml::from_str(text)?;
        if config.world.is_relative() {
            config.world = base.join(&config.world);
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn validate(&self) -> Result<(), SuiteError> {
        if !self.world.is_file() {
            return Err(config_err("world", format!("file not found: {}", self.world.display())));
        }
        if self.levels.is_empty() {
            return Err(config_err("levels", "at least one level is required"));
        }
        let mut seen = Vec::new();
        for &l in &self.levels {
            if !(1..=4).contains(&l) {
                return Err(config_err("levels", format!("level {l} is not in 1..=4")));
            }
            if seen.contains(&l) {
                return Err(config_err("levels", format!("level {l} listed twice")));
            }
            seen.push(l);
        }
        if self.episodes_per_level == 0 {
            return Err(config_err("episodes_per_level", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(config_err("methods", format!("{m} listed twice")));
            }
        }
        if self.workers == 0 {
            return Err(config_err("workers", "must be at least 1"));
        }
        self.planner.validate().map_err(|e| config_err("planner", e.to_string()))?;
        if !(self.planner.t_max > 0.0) {
            return Err(config_err("planner.t_max", "must be positive"));
        }
        if !self.sensing.noise.is_valid() {
            return Err(config_err("sensing.noise", "probabilities must lie in [0, 1]"));
        }
        let obs = &self.sensing.observation;
        if !(obs.range > 0.0 && obs.fov_deg > 0.0 && obs.fov_deg <= 360.0) {
            return Err(config_err("sensing.observation", "range must be positive and fov_deg in (0, 360]"));
        }
        if !(self.goals.success_radius > 0.0) {
            return Err(config_err("goals.success_radius", "must be positive"));
        }
        let s = &self.start;
        if !(s.min_distance >= 0.0 && s.max_distance > s.min_distance && s.attempts > 0) {
            return Err(config_err("start", "need 0 <= min_distance < max_distance and attempts > 0"));
        }
        match &self.backend {
            BackendConfig::Scripted(p) => {
                if !(0.0..=1.0).contains(&p.score_noise) {
                    return Err(config_err("backend.score_noise", "must lie in [0, 1]"));
                }
                if [p.latency_evaluate, p.latency_envision, p.latency_found].iter().any(|v| v.is_nan() || *v < 0.0) {
                    return Err(config_err("backend", "latencies must be non-negative"));
                }
            }
            BackendConfig::Remote(r) => {
                if r.replay_path.is_none() && r.url.is_empty() {
                    return Err(config_err("backend.url", "required unless replay_path is set"));
                }
            }
        }
        Ok(())
    }

    /// Hash of everything that affects results (not workers or output location).
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.workers = 1;
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        format!("{:016x}", seed::label(&json))
    }
}

/// One (level, episode) cell shared by every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub level: u8,
    pub index: usize,
    pub goal: GoalSpec,
    pub start: Pose,
    pub seed: u64,
}

/// Draws a start pose whose distance to the goal region lies in the band,
/// widening the band if nothing qualifies. Level-3 episodes start at the
/// corridor's first vertex, facing along it.
pub fn sample_start(
    world: &SemanticWorld,
    goal: &GoalSpec,
    params: &StartParams,
    seed: u64,
) -> Result<Pose, WorldError> {
    let mut rng = seed::rng(seed);
    if let Some(c) = goal.corridor() {
        let (a, b) = (c.polyline[0], c.polyline[1]);
        return Ok(Pose::new(a, a.bearing_to(b)));
    }
    let bands = [
        (params.min_distance, params.max_distance),
        (params.min_distance * 0.5, params.max_distance * 1.5),
        (0.0, f64::INFINITY),
    ];
    let bb = &world.bounds;
    for (lo, hi) in bands {
        for _ in 0..params.attempts {
            let p = Point::new(
                rng.random_range(bb.min_x + 1.0..bb.max_x - 1.0),
                rng.random_range(bb.min_y + 1.0..bb.max_y - 1.0),
            );
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            if !world.is_free(p) {
                continue;
            }
            let Some(d) = distance_to_goal_region(world, p, goal) else { continue };
            if d < lo || d > hi || d <= 0.0 {
                continue;
            }
            let pose = Pose::new(p, heading);
            if shortest_path_length(world, pose, goal).is_ok() {
                return Ok(pose);
            }
        }
    }
    Err(WorldError::UnreachableGoal { x: f64::NAN, y: f64::NAN })
}

/// Goals and start poses for every (level, episode) of the config.
pub fn scenarios(config: &SuiteConfig, world: &SemanticWorld) -> Result<Vec<Scenario>, SuiteError> {
    let mut levels = config.levels.clone();
    levels.sort_unstable();
    let mut out = Vec::new();
    for level in levels {
        let goals = generate_goals(
            world,
            level,
            config.episodes_per_level,
            seed::mix(&[config.master_seed, TAG_GOALS]),
            &config.goals,
        )?;
        for (index, goal) in goals.into_iter().enumerate() {
            let cell = [config.master_seed, level as u64, index as u64];
            let start = sample_start(world, &goal, &config.start, seed::mix(&[cell[0], cell[1], cell[2], TAG_START]))?;
            out.push(Scenario { level, index, goal, start, seed: seed::mix(&cell) });
        }
    }
    Ok(out)
}

pub fn build_backend(config: &SuiteConfig, world: Arc<SemanticWorld>) -> Result<Arc<dyn ReasoningBackend>, SuiteError> {
    Ok(match &config.backend {
        BackendConfig::Scripted(p) => Arc::new(ScriptedBackend::new(
            world,
            *p,
            crate::world::ObservationParams { n_headings: config.planner.n, ..config.sensing.observation },
            config.sensing.noise,
            config.planner.edge_length,
        )),
        BackendConfig::Remote(r) => Arc::new(RemoteBackend::from_config(r.clone(), config.planner.edge_length)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub method: Method,
    pub level: u8,
    pub index: usize,
    pub status: EpisodeStatus,
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Index of every file a suite wrote, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub episodes: Vec<ManifestEntry>,
    pub files: Vec<String>,
}

impl RunManifest {
    fn new(fingerprint: String) -> Self {
        RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            config_fingerprint: fingerprint,
            episodes: Vec::new(),
            files: Vec::new(),
        }
    }

    fn upsert(&mut self, entry: ManifestEntry) {
        self.episodes.retain(|e| (e.method, e.level, e.index) != (entry.method, entry.level, entry.index));
        self.episodes.push(entry);
        self.episodes.sort_by_key(|a| (a.method, a.level, a.index));
        self.files = self
            .episodes
            .iter()
            .filter_map(|e| e.file.clone())
            .chain(self.files.iter().filter(|f| !f.starts_with("episodes/")).cloned())
            .collect();
        self.files.sort();
        self.files.dedup();
    }

    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| SuiteError::Log { path: path.display().to_string(), message: e.to_string() })
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), SuiteError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn episode_file(method: Method, level: u8, index: usize) -> String {
    format!("episodes/{}/L{level}_e{index:03}.json", method.label())
}

pub fn read_episode_log(path: &Path) -> Result<EpisodeLog, SuiteError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|e| SuiteError::Log { path: path.display().to_string(), message: e.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbortedEpisode {
    pub method: Method,
    pub level: u8,
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub reports: Vec<MetricsReport>,
    pub aborted: Vec<AbortedEpisode>,
    /// Episodes taken from a previous interrupted run.
    pub resumed: usize,
    pub manifest: RunManifest,
}

impl SuiteSummary {
    pub fn report(&self, method: Method) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.method == method.label())
    }
}

/// Runs every (level, episode, method) cell and writes logs, per-method
/// metrics, a comparison table and the run manifest. Completed episodes
/// listed in an existing manifest for the same config are reused.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteSummary, SuiteError> {
    config.validate()?;
    let world = Arc::new(load_world_file(&config.world)?);
    let cells = scenarios(config, &world)?;
    let backend = build_backend(config, world.clone())?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;

    let manifest_path = out.join(MANIFEST_FILE);
    let fingerprint = config.fingerprint();
    let previous = ManifestPath(&manifest_path).load_matching(&fingerprint);
    let manifest = Mutex::new(previous.clone().unwrap_or_else(|| RunManifest::new(fingerprint.clone())));

    let mut jobs: Vec<(Method, &Scenario)> = Vec::new();
    for &m in &config.methods {
        jobs.extend(cells.iter().map(|c| (m, c)));
    }
    let sensing = config.sensing;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| SuiteError::Pool(e.to_string()))?;

    type JobResult = Result<(Method, u8, usize, Result<EpisodeLog, String>, bool), SuiteError>;
    let results: Vec<JobResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(method, cell)| {
                let rel = episode_file(method, cell.level, cell.index);
                let path = out.join(&rel);
                let done_before = previous.as_ref().is_some_and(|m| {
                    m.episodes.iter().any(|e| {
                        (e.method, e.level, e.index) == (method, cell.level, cell.index)
                            && e.status == EpisodeStatus::Completed
                    })
                });
                if done_before {
                    if let Ok(log) = read_episode_log(&path) {
                        return Ok((method, cell.level, cell.index, Ok(log), true));
                    }
                }
                let spec = EpisodeSpec { goal: cell.goal.clone(), start: cell.start, method, seed: cell.seed };
                let outcome = run_episode(&world, &spec, backend.as_ref(), &config.planner, &sensing);
                let entry = match &outcome {
                    Ok(log) => {
                        write_atomic(&path, &to_json(log))?;
                        ManifestEntry {
                            method,
                            level: cell.level,
                            index: cell.index,
                            status: EpisodeStatus::Completed,
                            file: Some(rel),
                            error: None,
                        }
                    }
                    Err(e) => {
                        log::warn!("{method} L{} e{}: {e}", cell.level, cell.index);
                        ManifestEntry {
                            method,
                            level: cell.level,
                            index: cell.index,
                            status: EpisodeStatus::Aborted,
                            file: None,
                            error: Some(e.to_string()),
                        }
                    }
                };
                let mut m = manifest.lock().unwrap_or_else(|p| p.into_inner());
                m.upsert(entry);
                write_atomic(&manifest_path, &to_json(&*m))?;
                Ok((method, cell.level, cell.index, outcome.map_err(|e| e.to_string()), false))
            })
            .collect()
    });

    let mut by_method: BTreeMap<Method, Vec<(u8, usize, EpisodeOutcome)>> = BTreeMap::new();
    let mut aborted = Vec::new();
    let mut resumed = 0;
    for r in results {
        let (method, level, index, log, reused) = r?;
        resumed += reused as usize;
        match log {
            Ok(log) => by_method.entry(method).or_default().push((level, index, log.outcome)),
            Err(error) => aborted.push(AbortedEpisode { method, level, index, error }),
        }
    }

    let mut manifest = manifest.into_inner().unwrap_or_else(|p| p.into_inner());
    let mut reports = Vec::new();
    for &method in &config.methods {
        let mut outcomes = by_method.remove(&method).unwrap_or_default();
        outcomes.sort_by_key(|(l, i, _)| (*l, *i));
        let outcomes: Vec<EpisodeOutcome> = outcomes.into_iter().map(|(_, _, o)| o).collect();
        if outcomes.is_empty() {
            continue;
        }
        let mut report = MetricsReport::from_outcomes(method.label(), &outcomes, config.planner.t_max)?;
        report.aborted = aborted.iter().filter(|a| a.method == method).count();
        for (ext, body) in [("json", to_json(&report)), ("txt", report.to_table())] {
            let rel = format!("metrics/{}.{ext}", method.label());
            write_atomic(&out.join(&rel), &body)?;
            manifest.files.push(rel);
        }
        reports.push(report);
    }
    write_atomic(&out.join("comparison.txt"), &comparison_table(&reports))?;
    manifest.files.push("comparison.txt".into());
    manifest.files.sort();
    manifest.files.dedup();
    write_atomic(&manifest_path, &to_json(&manifest))?;
    aborted.sort_by_key(|a| (a.method, a.level, a.index));
    Ok(SuiteSummary { reports, aborted, resumed, manifest })
}

struct ManifestPath<'a>(&'a Path);

impl ManifestPath<'_> {
    fn load_matching(&self, fingerprint: &str) -> Option<RunManifest> {
        if !self.0.is_file() {
            return None;
        }
        match RunManifest::load(self.0) {
            Ok(m) if m.config_fingerprint == fingerprint => Some(m),
            Ok(_) => {
                log::info!("existing manifest belongs to a different config; starting fresh");
                None
            }
            Err(e) => {
                log::warn!("ignoring unreadable manifest: {e}");
                None
            }
        }
    }
}

/// One row of the depth sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l: usize,
    pub casr_mean: f64,
    /// Sample standard deviation over repetitions.
    pub casr_std: f64,
    pub sr_mean: f64,
    pub casr_runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub repetitions: usize,
    pub t_max: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_table(&self) -> String {
        let mut s = format!("{:>4} {:>8} {:>8} {:>8}\n", "L", "CASR", "sigma", "SR");
        for r in &self.rows {
            s.push_str(&format!("{:>4} {:>8.3} {:>8.3} {:>8.3}\n", r.l, r.casr_mean, r.casr_std, r.sr_mean));
        }
        s
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs the reasoned explorer once per depth in `l_values`, `repetitions`
/// times each. Repetition `r` uses the same derived master seed for every
/// depth, so depths are compared on identical scenarios.
pub fn sweep_l(config: &SuiteConfig, l_values: &[usize], repetitions: usize) -> Result<SweepReport, SuiteError> {
    if l_values.is_empty() {
        return Err(config_err("l_values", "at least one depth is required"));
    }
    if repetitions < 2 {
        return Err(config_err("repetitions", "at least 2 repetitions are needed for a standard deviation"));
    }
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for &l in l_values {
        let mut casr = Vec::new();
        let mut sr = Vec::new();
        for rep in 0..repetitions {
            let mut c = config.clone();
            c.planner.l = l;
            c.methods = vec![Method::ReasonedExplorer];
            c.master_seed = seed::mix(&[config.master_seed, TAG_REPETITION, rep as u64]);
            let sub = format!("sweep/l{l}/rep{rep}");
            c.output_dir = config.output_dir.join(&sub);
            let summary = run_suite(&c)?;
            files.push(format!("{sub}/{MANIFEST_FILE}"));
            let report = summary.report(Method::ReasonedExplorer).ok_or(MetricsError::Empty)?;
            casr.push(report.average.casr);
            sr.push(report.average.sr);
        }
        let (casr_mean, casr_std) = mean_std(&casr);
        rows.push(SweepRow { l, casr_mean, casr_std, sr_mean: mean_std(&sr).0, casr_runs: casr });
    }
    let report =
        SweepReport { schema_version: MANIFEST_SCHEMA_VERSION, repetitions, t_max: config.planner.t_max, rows };
    let out = &config.output_dir;
    write_atomic(&out.join("sweep-l.json"), &to_json(&report))?;
    write_atomic(&out.join("sweep-l.txt"), &report.to_table())?;
    files.extend(["sweep-l.json".to_string(), "sweep-l.txt".to_string()]);
    files.sort();
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        config_fingerprint: config.fingerprint(),
        episodes: Vec::new(),
        files,
    };
    write_atomic(&out.join("sweep-manifest.json"), &to_json(&manifest))?;
    Ok(report)
}

#[derive(Serialize)]
struct PathRow {
    order: usize,
    pathpoint_id: u64,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct TrajectoryRow {
    index: usize,
    x: f64,
    y: f64,
    heading: f64,
}

#[derive(Serialize)]
struct FrontierRow {
    step: usize,
    id: u64,
    x: f64,
    y: f64,
    parent_pathpoint: u64,
    score_q: Option<f64>,
    distance: f64,
    penalty: f64,
    selected: bool,
}

#[derive(Serialize)]
struct OutlineRow<'a> {
    kind: &'a str,
    index: usize,
    label: &'a str,
    vertex: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct ObjectRow<'a> {
    id: &'a str,
    category: &'a str,
    x: f64,
    y: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), SuiteError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| SuiteError::Io { path: path.display().to_string(), source: e.into() })?;
    for row in rows {
        w.serialize(row).map_err(|e| SuiteError::Io { path: path.display().to_string(), source: e.into() })?;
    }
    w.flush().map_err(io_err(path))
}

fn frontier_rows(snapshots: &[BufferSnapshot]) -> Vec<FrontierRow> {
    snapshots
        .iter()
        .flat_map(|s| {
            s.open.iter().map(move |f| FrontierRow {
                step: s.step,
                id: f.id,
                x: f.position.x,
                y: f.position.y,
                parent_pathpoint: f.parent_pathpoint,
                score_q: f.score_q,
                distance: f.distance,
                penalty: f.penalty,
                selected: s.selected == Some(f.id),
            })
        })
        .collect()
}

/// Writes CSV layers for each named log into `out/<name>/` (committed path,
/// dense trajectory, open frontiers per step) and, with a world, its
/// outlines and objects into `out/`. Returns the files written.
pub fn emit_plot_data(
    logs: &[(String, EpisodeLog)],
    world: Option<&SemanticWorld>,
    out: &Path,
) -> Result<Vec<PathBuf>, SuiteError> {
    let mut written = Vec::new();
    for (name, log) in logs {
        let dir = out.join(name);
        let path = dir.join("path.csv");
        write_csv(
            &path,
            log.pathpoints.iter().enumerate().map(|(order, p)| PathRow {
                order,
                pathpoint_id: p.id,
                x: p.position.x,
                y: p.position.y,
            }),
        )?;
        written.push(path);
        let path = dir.join("trajectory.csv");
        write_csv(
            &path,
            log.trajectory.iter().enumerate().map(|(index, p)| TrajectoryRow {
                index,
                x: p.position.x,
                y: p.position.y,
                heading: p.heading,
            }),
        )?;
        written.push(path);
        let path = dir.join("frontiers.csv");
        write_csv(&path, frontier_rows(&log.snapshots))?;
        written.push(path);
    }
    if let Some(w) = world {
        let mut outlines = Vec::new();
        for (i, r) in w.regions.iter().enumerate() {
            for (v, p) in r.polygon.vertices.iter().enumerate() {
                outlines.push(OutlineRow { kind: "region", index: i, label: &r.label, vertex: v, x: p.x, y: p.y });
            }
        }
        for (i, o) in w.obstacles.iter().enumerate() {
            for (v, p) in o.vertices.iter().enumerate() {
                outlines.push(OutlineRow { kind: "obstacle", index: i, label: "", vertex: v, x: p.x, y: p.y });
            }
        }
        let path = out.join("world_outlines.csv");
        write_csv(&path, outlines)?;
        written.push(path);
        let path = out.join("world_objects.csv");
        write_csv(
            &path,
            w.objects.iter().map(|o| ObjectRow { id: &o.id, category: &o.category, x: o.position.x, y: o.position.y }),
        )?;
        written.push(path);
    }
    Ok(written)
}
