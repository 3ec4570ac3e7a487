use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use frontier_nav::metrics::{comparison_table, MetricsReport};
use frontier_nav::planner::{run_episode, EpisodeLog, EpisodeSpec, Method};
use frontier_nav::suite::{
    build_backend, emit_plot_data, read_episode_log, run_suite, scenarios, sweep_l, SuiteConfig,
};
use frontier_nav::world::load_world_file;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "frontier-nav", version, about = "Language-guided frontier exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (level, episode, method) cell of a suite.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the worker-thread count.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep the rollout depth and report CASR mean and standard deviation.
    SweepL {
        #[arg(short, long)]
        config: PathBuf,
        /// Depths to compare, e.g. `0,1,2,3`.
        #[arg(long = "l", value_delimiter = ',', required = true)]
        l_values: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one episode of a suite and write its log.
    Episode {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        level: u8,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value = "reasoned-explorer")]
        method: Method,
        /// Where to write the episode log; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from episode logs (files or directories).
    Metrics {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Write `<method>.json` / `.txt` reports here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit CSV layers for plotting trajectories and frontiers.
    PlotData {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also emit region, obstacle and object layers for this world.
        #[arg(long)]
        world: Option<PathBuf>,
    },
    /// Check a suite config, or a world file, without running anything.
    Validate {
        #[arg(short, long, conflicts_with = "world")]
        config: Option<PathBuf>,
        #[arg(short, long)]
        world: Option<PathBuf>,
    },
}

fn load_config(path: &Path, workers: Option<usize>, output: Option<PathBuf>) -> Result<SuiteConfig> {
    let mut config = SuiteConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(w) = workers {
        config.workers = w;
    }
    if let Some(o) = output {
        config.output_dir = o;
    }
    config.validate()?;
    Ok(config)
}

fn collect_logs(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, EpisodeLog)>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            collect_json(input, &mut files)?;
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    files.into_iter().map(|f| Ok((f.clone(), read_episode_log(&f)?))).collect()
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, workers, output } => {
            let config = load_config(&config, workers, output)?;
            let summary = run_suite(&config)?;
            print!("{}", comparison_table(&summary.reports));
            println!("outputs: {}", config.output_dir.display());
            if summary.resumed > 0 {
                println!("resumed {} completed episodes", summary.resumed);
            }
            if !summary.aborted.is_empty() {
                for a in &summary.aborted {
                    eprintln!("aborted: {} L{} e{}: {}", a.method, a.level, a.index, a.error);
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::SweepL { config, l_values, repetitions, output } => {
            let config = load_config(&config, None, output)?;
            let report = sweep_l(&config, &l_values, repetitions)?;
            print!("{}", report.to_table());
        }
        Command::Episode { config, level, index, method, out } => {
            let config = load_config(&config, None, None)?;
            if !config.levels.contains(&level) {
                bail!("level {level} is not part of this suite");
            }
            let world = Arc::new(load_world_file(&config.world)?);
            let cell = scenarios(&config, &world)?
                .into_iter()
                .find(|s| s.level == level && s.index == index)
                .with_context(|| format!("no episode {index} at level {level}"))?;
            let backend = build_backend(&config, world.clone())?;
            let spec = EpisodeSpec { goal: cell.goal, start: cell.start, method, seed: cell.seed };
            let log = run_episode(&world, &spec, backend.as_ref(), &config.planner, &config.sensing)?;
            let json = serde_json::to_string_pretty(&log)? + "\n";
            match out {
                Some(path) => {
                    std::fs::write(&path, json)?;
                    println!(
                        "{:?} after {} steps, success={}, ct={:.1}s tt={:.1}s -> {}",
                        log.termination,
                        log.steps,
                        log.outcome.success,
                        log.compute_time,
                        log.travel_time,
                        path.display()
                    );
                }
                None => print!("{json}"),
            }
        }
        Command::Metrics { logs, out } => {
            let logs = collect_logs(&logs)?;
            if logs.is_empty() {
                bail!("no episode logs found");
            }
            let mut groups: BTreeMap<(Method, u64), (f64, Vec<_>)> = BTreeMap::new();
            for (_, log) in logs {
                let g =
                    groups.entry((log.method, log.params.t_max.to_bits())).or_insert((log.params.t_max, Vec::new()));
                g.1.push(log.outcome);
            }
            let mut reports = Vec::new();
            for ((method, _), (t_max, outcomes)) in groups {
                reports.push(MetricsReport::from_outcomes(method.label(), &outcomes, t_max)?);
            }
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    for r in &reports {
                        std::fs::write(
                            dir.join(format!("{}.json", r.method)),
                            serde_json::to_string_pretty(r)? + "\n",
                        )?;
                        std::fs::write(dir.join(format!("{}.txt", r.method)), r.to_table())?;
                    }
                    std::fs::write(dir.join("comparison.txt"), comparison_table(&reports))?;
                    println!("wrote {} reports to {}", reports.len(), dir.display());
                }
                None => print!("{}", comparison_table(&reports)),
            }
        }
        Command::PlotData { logs, out, world } => {
            let logs = collect_logs(&logs)?;
            let named: Vec<(String, EpisodeLog)> = logs
                .into_iter()
                .map(|(path, log)| {
                    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    (format!("{}_{stem}", log.method), log)
                })
                .collect();
            let world = world.map(load_world_file).transpose()?;
            let files = emit_plot_data(&named, world.as_ref(), &out)?;
            println!("wrote {} files under {}", files.len(), out.display());
        }
        Command::Validate { config, world } => match (config, world) {
            (Some(c), _) => {
                let config = load_config(&c, None, None)?;
                let world = load_world_file(&config.world)?;
                let cells = scenarios(&config, &world)?;
                println!(
                    "ok: {} levels x {} episodes x {} methods = {} episodes",
                    config.levels.len(),
                    config.episodes_per_level,
                    config.methods.len(),
                    cells.len() * config.methods.len()
                );
            }
            (None, Some(w)) => {
                let world = load_world_file(&w)?;
                println!(
                    "ok: {} regions, {} objects, {} obstacles, {} categories, {} affordance tags",
                    world.regions.len(),
                    world.objects.len(),
                    world.obstacles.len(),
                    world.categories().len(),
                    world.affordance_tags().len()
                );
            }
            (None, None) => bail!("pass --config or --world"),
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
