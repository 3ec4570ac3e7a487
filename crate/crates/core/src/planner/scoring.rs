//! Frontier scorers. Every backend call goes through a [`CallLog`], and each
//! call's key is derived from the frontier key and the call's position in the
//! imagined structure, so results never depend on scheduling.

use super::{Method, PlannerParams};
use crate::frontier::FrontierNode;
use crate::reasoning::{normalize_likert, CallLog, ReasoningBackend};
use crate::seed;
use crate::world::{GoalSpec, SceneDescription};
use rayon::prelude::*;

/// UCT exploration constant, applied to values in `[0, 1]`.
pub const UCT_EXPLORATION: f64 = std::f64::consts::SQRT_2;

const TAG_EVAL: u64 = 1;
const TAG_ENVISION: u64 = 2;
const TAG_MCTS: u64 = 3;

/// Likert value of an evaluation, 1 on failure.
fn evaluate_or_low(
    log: &mut CallLog,
    backend: &dyn ReasoningBackend,
    goal: &GoalSpec,
    scene: &SceneDescription,
    key: u64,
) -> u8 {
    log.evaluate(backend, goal, scene, key).map(|s| s.value()).unwrap_or(1)
}

/// Uniform mean over depths within each rollout, then over rollouts, normalized to `[0, 1]`.
/// `rollouts[r]` holds the scores at depths `1..=l`; `root` is the shared depth-0 score.
pub(crate) fn aggregate(root: u8, rollouts: &[Vec<u8>]) -> f64 {
    if rollouts.is_empty() {
        return normalize_likert(root as f64);
    }
    let raw: f64 = rollouts
        .iter()
        .map(|r| (root as f64 + r.iter().map(|&v| v as f64).sum::<f64>()) / (r.len() + 1) as f64)
        .sum::<f64>()
        / rollouts.len() as f64;
    normalize_likert(raw)
}

fn rollout(
    frontier: &FrontierNode,
    goal: &GoalSpec,
    backend: &dyn ReasoningBackend,
    depth: usize,
    r: usize,
    key: u64,
    log: &mut CallLog,
) -> Vec<u8> {
    let mut scores = Vec::with_capacity(depth);
    let mut scene = Some(frontier.scene.clone());
    for j in 1..=depth {
        let path = [key, r as u64, j as u64];
        scene = scene.and_then(|s| {
            log.envision(backend, &s, seed::mix(&[path[0], path[1], path[2], TAG_ENVISION])).ok().map(|e| e.scene)
        });
        // a failed imagination leaves the rest of the chain at the floor
        scores.push(match &scene {
            Some(s) => evaluate_or_low(log, backend, goal, s, seed::mix(&[path[0], path[1], path[2], TAG_EVAL])),
            None => 1,
        });
    }
    scores
}

fn rollout_score(
    frontier: &FrontierNode,
    goal: &GoalSpec,
    backend: &dyn ReasoningBackend,
    depth: usize,
    rollouts: usize,
    key: u64,
    log: &mut CallLog,
) -> f64 {
    let root = evaluate_or_low(log, backend, goal, &frontier.scene, seed::mix(&[key, 0, 0, TAG_EVAL]));
    if depth == 0 {
        return aggregate(root, &[]);
    }
    let (step, id) = (log.step, log.frontier);
    let results: Vec<(Vec<u8>, CallLog)> = (0..rollouts)
        .into_par_iter()
        .map(|r| {
            let mut sub = CallLog::new(step, id);
            let scores = rollout(frontier, goal, backend, depth, r + 1, key, &mut sub);
            (scores, sub)
        })
        .collect();
    let mut chains = Vec::with_capacity(rollouts);
    for (scores, sub) in results {
        log.absorb(sub);
        chains.push(scores);
    }
    aggregate(root, &chains)
}

/// Scores a frontier by `b` imagined rollouts of depth `l`; the depth-0
/// evaluation is shared. Returns a value in `[0, 1]`.
pub fn rrt_score(
    frontier: &FrontierNode,
    goal: &GoalSpec,
    backend: &dyn ReasoningBackend,
    params: &PlannerParams,
    key: u64,
    log: &mut CallLog,
) -> f64 {
    rollout_score(frontier, goal, backend, params.l, params.rollouts(), key, log)
}

/// A single evaluation of the frontier's own scene: rollouts with `l = 0, b = 1`.
pub fn greedy_eval_score(
    frontier: &FrontierNode,
    goal: &GoalSpec,
    backend: &dyn ReasoningBackend,
    key: u64,
    log: &mut CallLog,
) -> f64 {
    rollout_score(frontier, goal, backend, 0, 1, key, log)
}

struct TreeNode {
    scene: Option<SceneDescription>,
    depth: usize,
    value: f64,
    visits: u32,
    total: f64,
    children: Vec<usize>,
}

/// UCT over an imagined tree rooted at the frontier scene. Each iteration
/// either expands one child (envision + evaluate) or, on reaching the depth
/// cap or a failed imagination, re-propagates that leaf's value without
/// querying. Returns the root's mean normalized value.
pub fn mcts_score(
    frontier: &FrontierNode,
    goal: &GoalSpec,
    backend: &dyn ReasoningBackend,
    params: &PlannerParams,
    key: u64,
    log: &mut CallLog,
) -> f64 {
    let root_value = normalize_likert(evaluate_or_low(
        log,
        backend,
        goal,
        &frontier.scene,
        seed::mix(&[key, 0, 0, TAG_EVAL]),
    ) as f64);
    let mut tree = vec![TreeNode {
        scene: Some(frontier.scene.clone()),
        depth: 0,
        value: root_value,
        visits: 1,
        total: root_value,
        children: Vec::new(),
    }];
    for _ in 0..params.mcts_iterations {
        let mut path = vec![0usize];
        let mut cur = 0usize;
        let value = loop {
            let node = &tree[cur];
            if node.depth >= params.l || node.scene.is_none() {
                break node.mean();
            }
            if node.children.len() < params.n {
                let index = tree.len() as u64;
                let parent_scene = node.scene.clone().expect("checked above");
                let depth = node.depth + 1;
                let scene = log
                    .envision(backend, &parent_scene, seed::mix(&[key, TAG_MCTS, index, TAG_ENVISION]))
                    .ok()
                    .map(|e| e.scene);
                let value = match &scene {
                    Some(s) => normalize_likert(evaluate_or_low(
                        log,
                        backend,
                        goal,
                        s,
                        seed::mix(&[key, TAG_MCTS, index, TAG_EVAL]),
                    ) as f64),
                    None => 0.0,
                };
                tree.push(TreeNode { scene, depth, value, visits: 0, total: 0.0, children: Vec::new() });
                let child = tree.len() - 1;
                tree[cur].children.push(child);
                path.push(child);
                break value;
            }
            let ln_n = (node.visits as f64).ln();
            let mut best = node.children[0];
            let mut best_u = f64::NEG_INFINITY;
            for &c in &node.children {
                let ch = &tree[c];
                let u = ch.mean() + UCT_EXPLORATION * (ln_n / ch.visits.max(1) as f64).sqrt();
                if u > best_u {
                    best_u = u;
                    best = c;
                }
            }
            cur = best;
            path.push(cur);
        };
        for &i in &path {
            tree[i].visits += 1;
            tree[i].total += value;
        }
    }
    tree[0].mean().clamp(0.0, 1.0)
}

impl TreeNode {
    fn mean(&self) -> f64 {
        if self.visits == 0 {
            self.value
        } else {
            self.total / self.visits as f64
        }
    }
}

/// Dispatches to the scorer for `method`.
pub fn score_frontier(
    method: Method,
    frontier: &FrontierNode,
    goal: &GoalSpec,
    backend: &dyn ReasoningBackend,
    params: &PlannerParams,
    key: u64,
    log: &mut CallLog,
) -> f64 {
    match method {
        Method::ReasonedExplorer => rrt_score(frontier, goal, backend, params, key, log),
        Method::LlmMcts => mcts_score(frontier, goal, backend, params, key, log),
        Method::LlmAsEval => greedy_eval_score(frontier, goal, backend, key, log),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::reasoning::{CallFailure, Envisioned, EvalScore, FailureKind, Role, Verdict};
    use crate::world::{GoalKind, Pose};
    use proptest::prelude::*;

    /// Scores a scene by its imagined depth, read back from the text.
    struct DepthStub {
        by_depth: Vec<i64>,
        fail_envision_at: Option<usize>,
    }

    fn depth_of(scene: &SceneDescription) -> usize {
        scene.text.parse().unwrap()
    }

    impl ReasoningBackend for DepthStub {
        fn evaluate(&self, _: &GoalSpec, scene: &SceneDescription, _: u64) -> Result<EvalScore, CallFailure> {
            Ok(EvalScore::new(self.by_depth[depth_of(scene).min(self.by_depth.len() - 1)], 2.0))
        }
        fn envision(&self, scene: &SceneDescription, _: u64) -> Result<Envisioned, CallFailure> {
            let d = depth_of(scene) + 1;
            if self.fail_envision_at == Some(d) {
                return Err(CallFailure { kind: FailureKind::Unparseable("?".into()), latency: 2.5 });
            }
            let mut next = scene.clone();
            next.text = d.to_string();
            Ok(Envisioned { scene: next, latency: 2.5 })
        }
        fn check_found(&self, _: &GoalSpec, _: &SceneDescription, _: u64) -> Result<Verdict, CallFailure> {
            Ok(Verdict { found: false, latency: 1.5 })
        }
    }

    fn frontier() -> FrontierNode {
        FrontierNode {
            id: 7,
            position: Point::new(10.0, 0.0),
            parent_pathpoint: 0,
            heading_index: 0,
            heading: 0.0,
            scene: SceneDescription {
                source_pose: Pose::new(Point::new(0.0, 0.0), 0.0),
                heading_index: 0,
                heading: 0.0,
                region: None,
                text: "0".into(),
                mentioned_objects: vec![],
                blocked: false,
            },
            score_q: None,
            distance_from_current: 10.0,
        }
    }

    fn goal() -> GoalSpec {
        GoalSpec {
            text: "Find a bench.".into(),
            kind: GoalKind::Object { target_category: "bench".into() },
            success_radius: 5.0,
        }
    }

    fn params(n: usize, l: usize, b: Option<usize>) -> PlannerParams {
        PlannerParams { n, l, b, ..Default::default() }
    }

    fn count(log: &CallLog, role: Role) -> usize {
        log.entries.iter().filter(|e| e.role == role).count()
    }

    #[test]
    fn depth_zero_top_score_is_one() {
        let stub = DepthStub { by_depth: vec![5], fail_envision_at: None };
        let mut log = CallLog::new(0, Some(7));
        assert_eq!(rrt_score(&frontier(), &goal(), &stub, &params(3, 0, None), 1, &mut log), 1.0);
        assert_eq!(log.calls(), 1);
    }

    #[test]
    fn one_rollout_of_depth_one() {
        let stub = DepthStub { by_depth: vec![3, 5], fail_envision_at: None };
        let mut log = CallLog::new(0, Some(7));
        let q = rrt_score(&frontier(), &goal(), &stub, &params(3, 1, Some(1)), 1, &mut log);
        assert_eq!(q, 0.75);
    }

    #[test]
    fn all_ones_score_zero() {
        let stub = DepthStub { by_depth: vec![1], fail_envision_at: None };
        let mut log = CallLog::new(0, None);
        assert_eq!(rrt_score(&frontier(), &goal(), &stub, &params(3, 2, None), 1, &mut log), 0.0);
    }

    #[test]
    fn call_counts_share_depth_zero() {
        let stub = DepthStub { by_depth: vec![4], fail_envision_at: None };
        let mut log = CallLog::new(0, Some(7));
        rrt_score(&frontier(), &goal(), &stub, &params(3, 2, Some(3)), 1, &mut log);
        assert_eq!(count(&log, Role::Envision), 6);
        assert_eq!(count(&log, Role::Evaluate), 7);
        let ct: f64 = log.entries.iter().map(|e| e.latency).sum();
        assert_eq!(ct, 7.0 * 2.0 + 6.0 * 2.5);
    }

    #[test]
    fn failed_imagination_floors_the_rest_of_the_chain() {
        let stub = DepthStub { by_depth: vec![5, 5, 5], fail_envision_at: Some(2) };
        let mut log = CallLog::new(0, None);
        let q = rrt_score(&frontier(), &goal(), &stub, &params(3, 2, Some(1)), 1, &mut log);
        // depths: 5, 5, 1 -> mean 11/3
        assert!((q - (11.0 / 3.0 - 1.0) / 4.0).abs() < 1e-12);
        assert_eq!(log.entries.iter().filter(|e| !e.ok).count(), 1);
    }

    #[test]
    fn greedy_matches_depth_zero_single_rollout() {
        let stub = DepthStub { by_depth: vec![2], fail_envision_at: None };
        let (mut a, mut b) = (CallLog::new(0, None), CallLog::new(0, None));
        let g = greedy_eval_score(&frontier(), &goal(), &stub, 9, &mut a);
        let r = rrt_score(&frontier(), &goal(), &stub, &params(3, 0, Some(1)), 9, &mut b);
        assert_eq!(g, 0.25);
        assert_eq!(g, r);
        assert_eq!(a.entries, b.entries);
    }

    struct Down;
    impl ReasoningBackend for Down {
        fn evaluate(&self, _: &GoalSpec, _: &SceneDescription, _: u64) -> Result<EvalScore, CallFailure> {
            Err(CallFailure { kind: FailureKind::Unavailable("down".into()), latency: 0.1 })
        }
        fn envision(&self, _: &SceneDescription, _: u64) -> Result<Envisioned, CallFailure> {
            Err(CallFailure { kind: FailureKind::Unavailable("down".into()), latency: 0.1 })
        }
        fn check_found(&self, _: &GoalSpec, _: &SceneDescription, _: u64) -> Result<Verdict, CallFailure> {
            Err(CallFailure { kind: FailureKind::Unavailable("down".into()), latency: 0.1 })
        }
    }

    #[test]
    fn greedy_failure_scores_zero_and_is_recorded() {
        let mut log = CallLog::new(0, None);
        assert_eq!(greedy_eval_score(&frontier(), &goal(), &Down, 1, &mut log), 0.0);
        assert_eq!(log.unavailable, 1);
        assert!(!log.entries[0].ok);
    }

    #[test]
    fn mcts_degenerate_tree() {
        let stub = DepthStub { by_depth: vec![4], fail_envision_at: None };
        let mut log = CallLog::new(0, None);
        assert_eq!(mcts_score(&frontier(), &goal(), &stub, &params(3, 0, None), 1, &mut log), 0.75);
        assert_eq!(log.calls(), 1);
    }

    #[test]
    fn mcts_constant_scores() {
        let stub = DepthStub { by_depth: vec![3], fail_envision_at: None };
        let mut log = CallLog::new(0, None);
        assert_eq!(mcts_score(&frontier(), &goal(), &stub, &params(3, 2, None), 1, &mut log), 0.5);
    }

    #[test]
    fn mcts_call_budget() {
        let stub = DepthStub { by_depth: vec![2, 4, 5], fail_envision_at: None };
        let mut log = CallLog::new(0, None);
        mcts_score(&frontier(), &goal(), &stub, &params(3, 2, None), 1, &mut log);
        assert!(log.calls() >= 10 && log.calls() <= 10 * 2 + 1, "{} calls", log.calls());
        assert_eq!(count(&log, Role::Envision) + 1, count(&log, Role::Evaluate));
    }

    #[test]
    fn mcts_prefers_better_subtrees() {
        let stub = DepthStub { by_depth: vec![1, 5, 5], fail_envision_at: None };
        let mut log = CallLog::new(0, None);
        let q = mcts_score(&frontier(), &goal(), &stub, &params(3, 2, None), 1, &mut log);
        // root contributes one 0.0; every other backup is 1.0
        assert!((q - 10.0 / 11.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn aggregate_in_unit_interval(root in 1u8..=5, chains in prop::collection::vec(prop::collection::vec(1u8..=5, 0..4), 1..5)) {
            let l = chains[0].len();
            let chains: Vec<Vec<u8>> = chains.into_iter().map(|mut c| { c.resize(l, 3); c }).collect();
            let q = aggregate(root, &chains);
            prop_assert!((0.0..=1.0).contains(&q));
        }

        #[test]
        fn raising_any_score_never_lowers_q(
            root in 1u8..=5,
            chains in prop::collection::vec(prop::collection::vec(1u8..=5, 3), 1..4),
            pick in any::<prop::sample::Index>(),
        ) {
            let before = aggregate(root, &chains);
            let mut raised = chains.clone();
            let flat = raised.len() * 3 + 1;
            let i = pick.index(flat);
            let mut root2 = root;
            if i == 0 {
                root2 = (root + 1).min(5);
            } else {
                let (r, j) = ((i - 1) / 3, (i - 1) % 3);
                raised[r][j] = (raised[r][j] + 1).min(5);
            }
            prop_assert!(aggregate(root2, &raised) >= before);
        }
    }
}
