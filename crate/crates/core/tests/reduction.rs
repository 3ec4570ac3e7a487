mod common;

use common::{small_config, world_path};
use frontier_nav::planner::{run_episode, EpisodeSpec, Method, PlannerParams};
use frontier_nav::suite::{build_backend, scenarios};
use frontier_nav::world::load_world_file;
use std::sync::Arc;

/// Depth-0, single-rollout imagined scoring is exactly the greedy evaluator.
#[test]
fn depth_zero_explorer_reduces_to_greedy_evaluation() {
    let mut episodes = 0;
    for (name, seed) in [("park.world", 3u64), ("campus.world", 5)] {
        let tmp = tempfile::tempdir().unwrap();
        let mut config = small_config(name, tmp.path(), "[sensing.noise]\np_drop = 0.2\np_hallucinate = 0.05\n");
        config.levels = vec![1, 2, 3, 4];
        config.episodes_per_level = 7;
        config.master_seed = seed;
        if let frontier_nav::suite::BackendConfig::Scripted(p) = &mut config.backend {
            p.score_noise = 0.3;
        }
        let world = Arc::new(load_world_file(world_path(name)).unwrap());
        let backend = build_backend(&config, world.clone()).unwrap();
        let reduced = PlannerParams { l: 0, b: Some(1), ..config.planner };
        for cell in scenarios(&config, &world).unwrap() {
            let run = |method, params: &PlannerParams| {
                let spec = EpisodeSpec { goal: cell.goal.clone(), start: cell.start, method, seed: cell.seed };
                run_episode(&world, &spec, backend.as_ref(), params, &config.sensing).unwrap()
            };
            let a = run(Method::ReasonedExplorer, &reduced);
            let b = run(Method::LlmAsEval, &config.planner);
            assert_eq!(a.pathpoints, b.pathpoints, "{name} L{} e{}", cell.level, cell.index);
            assert_eq!(a.trajectory, b.trajectory);
            assert_eq!(a.ledger, b.ledger, "call-for-call");
            assert_eq!(a.termination, b.termination);
            episodes += 1;
        }
    }
    assert!(episodes >= 50, "{episodes}");
}
