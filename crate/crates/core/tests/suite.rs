mod common;

use common::{small_config, tree};
use frontier_nav::planner::Method;
use frontier_nav::suite::{emit_plot_data, read_episode_log, run_suite, sweep_l, RunManifest, MANIFEST_FILE};

#[test]
fn suite_writes_one_log_per_cell_and_one_report_per_method() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config("park.world", tmp.path(), "");
    let summary = run_suite(&config).unwrap();
    let files = tree(tmp.path());
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("episodes/")).count(), 4);
    assert_eq!(names.iter().filter(|n| n.starts_with("metrics/") && n.ends_with(".json")).count(), 2);
    assert_eq!(names.iter().filter(|n| n.starts_with("metrics/") && n.ends_with(".txt")).count(), 2);
    assert_eq!(names.iter().filter(|n| **n == "comparison.txt").count(), 1);
    assert!(names.contains(&MANIFEST_FILE));
    assert_eq!(summary.reports.len(), 2);
    assert!(summary.aborted.is_empty());
    assert_eq!(summary.resumed, 0);
    let manifest = RunManifest::load(&tmp.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.episodes.len(), 4);
    let listed: Vec<&str> = manifest.files.iter().map(String::as_str).collect();
    let mut on_disk: Vec<&str> = names.iter().copied().filter(|n| *n != MANIFEST_FILE).collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    for r in &summary.reports {
        assert_eq!(r.average.episodes, 2);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let noisy = "[sensing.noise]\np_drop = 0.2\n";
    let mut one = small_config("campus.world", a.path(), noisy);
    let mut four = small_config("campus.world", b.path(), noisy);
    for (c, w) in [(&mut one, 1), (&mut four, 4)] {
        c.levels = vec![1, 2, 3, 4];
        c.methods = Method::ALL.to_vec();
        c.workers = w;
    }
    run_suite(&one).unwrap();
    run_suite(&four).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn interrupted_runs_resume_without_changing_results() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config("park.world", tmp.path(), "");
    run_suite(&config).unwrap();
    let reference = tree(tmp.path());

    // lose one episode, as if the run had been killed before writing it
    let manifest_path = tmp.path().join(MANIFEST_FILE);
    let mut manifest = RunManifest::load(&manifest_path).unwrap();
    let lost = manifest.episodes.pop().unwrap();
    manifest.files.retain(|f| Some(f) != lost.file.as_ref());
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap() + "\n").unwrap();
    std::fs::remove_file(tmp.path().join(lost.file.unwrap())).unwrap();

    let summary = run_suite(&config).unwrap();
    assert_eq!(summary.resumed, 3);
    assert_eq!(tree(tmp.path()), reference);

    // a different config starts over
    let mut changed = config.clone();
    changed.master_seed += 1;
    assert_eq!(run_suite(&changed).unwrap().resumed, 0);
}

#[test]
fn plot_data_layers() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config("campus.world", &tmp.path().join("run"), "");
    run_suite(&config).unwrap();
    let log = read_episode_log(&tmp.path().join("run/episodes/reasoned-explorer/L1_e000.json")).unwrap();
    let world = frontier_nav::world::load_world_file(&config.world).unwrap();
    let out = tmp.path().join("plot");
    let files = emit_plot_data(&[("re".into(), log.clone())], Some(&world), &out).unwrap();
    assert_eq!(files.len(), 5);

    let mut rdr = csv::Reader::from_path(out.join("re/path.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["order", "pathpoint_id", "x", "y"]);
    assert_eq!(rdr.records().count(), log.pathpoints.len());
    let rdr = csv::Reader::from_path(out.join("re/trajectory.csv")).unwrap();
    assert_eq!(rdr.into_records().count(), log.trajectory.len());
    let rdr = csv::Reader::from_path(out.join("re/frontiers.csv")).unwrap();
    let open: usize = log.snapshots.iter().map(|s| s.open.len()).sum();
    assert_eq!(rdr.into_records().count(), open);
    let rdr = csv::Reader::from_path(out.join("world_objects.csv")).unwrap();
    assert_eq!(rdr.into_records().count(), world.objects.len());
    let rdr = csv::Reader::from_path(out.join("world_outlines.csv")).unwrap();
    let vertices: usize = world.regions.iter().map(|r| r.polygon.vertices.len()).sum::<usize>()
        + world.obstacles.iter().map(|o| o.vertices.len()).sum::<usize>();
    assert_eq!(rdr.into_records().count(), vertices);
}

#[test]
fn depth_sweep_compares_depths_on_shared_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config("park.world", tmp.path(), "");
    let report = sweep_l(&config, &[0, 2], 2).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert_eq!(row.casr_runs.len(), 2);
        assert!(row.casr_std >= 0.0);
        assert!((0.0..=1.0).contains(&row.casr_mean));
    }
    assert!(sweep_l(&config, &[2], 1).is_err());
    assert!(sweep_l(&config, &[], 2).is_err());
}

#[test]
fn partial_tables_keep_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = "[planner.penalty]\nk = 1.0\n[sensing.observation]\nrange = 15.0\n[sensing.noise]\np_drop = 0.1\n";
    let c = small_config("park.world", tmp.path(), extra);
    assert_eq!(c.planner.penalty.k, 1.0);
    assert_eq!(c.planner.penalty.d0, 15.0);
    assert_eq!(c.sensing.observation.range, 15.0);
    assert_eq!(c.sensing.observation.fov_deg, 120.0);
    assert_eq!(c.sensing.noise.p_drop, 0.1);
    assert_eq!(c.sensing.noise.p_hallucinate, 0.0);
}
