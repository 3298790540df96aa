//! Discrete RRT over the tensor product of per-robot roadmaps.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::{scaled_distance_sq, team_segment, Clock, Ctx, Failure, PlanOutcome, PlannerConfig, PlanningProblem};
use crate::model::{discretize_motion, Configuration, Path};

const START: usize = 0;
const GOAL: usize = 1;

/// Probabilistic roadmap of one robot. Vertex 0 is the start, 1 the goal.
struct Roadmap {
    robot: usize,
    vertices: Vec<Configuration>,
    adjacency: Vec<Vec<usize>>,
    /// Validated waypoints for edge `(u, v)` with `u < v`.
    edges: BTreeMap<(usize, usize), Path>,
}

impl Roadmap {
    fn build(ctx: &mut Ctx<'_>, robot: usize) -> Option<Roadmap> {
        let p = ctx.problem;
        let mut vertices = vec![p.starts[robot].clone(), p.goals[robot].clone()];
        let mut attempts = 0;
        while vertices.len() < ctx.config.roadmap_vertices && attempts < 20 * ctx.config.roadmap_vertices {
            if ctx.expired() {
                return None;
            }
            attempts += 1;
            let q = ctx.sample(robot);
            if ctx.motion_valid(&[Path::stationary(robot, q.clone())], true) {
                vertices.push(q);
            }
        }
        let spec = ctx.robot(robot);
        let mut candidates = BTreeSet::new();
        for (u, qu) in vertices.iter().enumerate() {
            let mut by_distance: Vec<(f64, usize)> =
                vertices.iter().enumerate().filter(|&(v, _)| v != u).map(|(v, qv)| (scaled_distance_sq(spec, qu, qv), v)).collect();
            by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, v) in by_distance.iter().take(ctx.config.roadmap_neighbors) {
                candidates.insert((u.min(v), u.max(v)));
            }
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        let mut edges = BTreeMap::new();
        for (u, v) in candidates {
            if ctx.expired() {
                return None;
            }
            let path = discretize_motion(spec, robot, &vertices[u], &vertices[v]);
            if ctx.motion_valid(core::slice::from_ref(&path), true) {
                adjacency[u].push(v);
                adjacency[v].push(u);
                edges.insert((u, v), path);
            }
        }
        Some(Roadmap { robot, vertices, adjacency, edges })
    }

    /// Waypoints for traversing `u -> v`.
    fn traverse(&self, u: usize, v: usize) -> Vec<Configuration> {
        if u == v {
            return vec![self.vertices[u].clone()];
        }
        let w = self.edges[&(u.min(v), u.max(v))].waypoints();
        if u < v {
            w.to_vec()
        } else {
            w.iter().rev().cloned().collect()
        }
    }

    /// Shortest start-to-goal vertex sequence, weighted by edge timesteps.
    fn shortest(&self) -> Option<Vec<usize>> {
        let mut dist = vec![usize::MAX; self.vertices.len()];
        let mut prev = vec![usize::MAX; self.vertices.len()];
        let mut heap = BinaryHeap::new();
        dist[START] = 0;
        heap.push(Reverse((0, START)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == GOAL {
                break;
            }
            for &v in &self.adjacency[u] {
                let nd = d + self.edges[&(u.min(v), u.max(v))].len() - 1;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        if dist[GOAL] == usize::MAX {
            return None;
        }
        let mut seq = vec![GOAL];
        while *seq.last().unwrap() != START {
            seq.push(prev[*seq.last().unwrap()]);
        }
        seq.reverse();
        Some(seq)
    }
}

/// One composite move: each robot traverses one roadmap edge (or stays),
/// then waits until the slowest finishes.
fn step_paths(maps: &[Roadmap], from: &[usize], to: &[usize]) -> Vec<Path> {
    maps.iter().zip(from.iter().zip(to)).map(|(m, (&u, &v))| Path::new(m.robot, m.traverse(u, v)).expect("non-empty")).collect()
}

fn append_padded(paths: &mut [Path], step: &[Path]) {
    let len = step.iter().map(Path::len).max().unwrap_or(1);
    for (p, s) in paths.iter_mut().zip(step) {
        let s = s.padded(len);
        let mut w = core::mem::replace(p, Path::stationary(0, Configuration::default())).into_waypoints();
        w.extend(s.waypoints().iter().skip(1).cloned());
        *p = Path::new(s.robot, w).expect("non-empty");
    }
}

struct DNode {
    v: Vec<usize>,
    parent: Option<usize>,
}

pub fn plan_mr_drrt(problem: &PlanningProblem, config: &PlannerConfig, clock: &dyn Clock) -> PlanOutcome {
    let mut ctx = Ctx::new(problem, config, clock);
    if ctx.expired() {
        return ctx.finish(None);
    }
    let n = problem.robot_count();
    let mut maps = Vec::with_capacity(n);
    for r in 0..n {
        let Some(m) = Roadmap::build(&mut ctx, r) else { return ctx.finish(None) };
        maps.push(m);
    }
    let mut singles = Vec::with_capacity(n);
    for m in &maps {
        match m.shortest() {
            Some(seq) => singles.push(seq),
            None => {
                ctx.failure = Some(Failure::Disconnected { robot: m.robot });
                return ctx.finish(None);
            }
        }
    }
    if n == 1 {
        let seq = &singles[0];
        let mut path = Path::stationary(0, problem.starts[0].clone());
        for w in seq.windows(2) {
            path.extend_from(&maps[0].traverse(w[0], w[1]));
        }
        return ctx.finish(Some(vec![path]));
    }

    let root = vec![START; n];
    let goal = vec![GOAL; n];
    let mut tree = vec![DNode { v: root.clone(), parent: None }];
    let mut seen = BTreeMap::from([(root, 0usize)]);
    let members: Vec<usize> = (0..n).collect();
    let mut found = connect_to_target(&mut ctx, &maps, &members, &tree, 0);
    let mut expansions = 0;
    while found.is_none() {
        if ctx.iterations >= config.max_iterations as u64 || ctx.expired() {
            return ctx.finish(None);
        }
        ctx.iterations += 1;
        let q_rand: Vec<Configuration> = (0..n).map(|r| ctx.sample(r)).collect();
        let near = nearest(&ctx, &maps, &tree, &q_rand);
        let from = tree[near].v.clone();
        let to: Vec<usize> = (0..n)
            .map(|r| {
                let spec = ctx.robot(r);
                let m = &maps[r];
                let mut best = (scaled_distance_sq(spec, &m.vertices[from[r]], &q_rand[r]), from[r]);
                for &v in &m.adjacency[from[r]] {
                    let d = scaled_distance_sq(spec, &m.vertices[v], &q_rand[r]);
                    if d < best.0 {
                        best = (d, v);
                    }
                }
                best.1
            })
            .collect();
        if seen.contains_key(&to) {
            continue;
        }
        if !ctx.motion_valid(&step_paths(&maps, &from, &to), false) {
            continue;
        }
        tree.push(DNode { v: to.clone(), parent: Some(near) });
        let k = tree.len() - 1;
        seen.insert(to.clone(), k);
        if to == goal {
            found = Some((k, None));
            break;
        }
        expansions += 1;
        if expansions % config.connect_every.max(1) == 0 {
            found = connect_to_target(&mut ctx, &maps, &members, &tree, k);
        }
    }
    let (k, tail) = found.expect("loop exits with a connection");
    let mut chain = vec![k];
    while let Some(p) = tree[*chain.last().unwrap()].parent {
        chain.push(p);
    }
    chain.reverse();
    let mut paths: Vec<Path> = (0..n).map(|r| Path::stationary(r, problem.starts[r].clone())).collect();
    for w in chain.windows(2) {
        append_padded(&mut paths, &step_paths(&maps, &tree[w[0]].v, &tree[w[1]].v));
    }
    if let Some(tail) = tail {
        append_padded(&mut paths, &tail);
    }
    ctx.finish(Some(paths))
}

fn nearest(ctx: &Ctx<'_>, maps: &[Roadmap], tree: &[DNode], q: &[Configuration]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, node) in tree.iter().enumerate() {
        let d: f64 = node.v.iter().enumerate().map(|(r, &v)| scaled_distance_sq(ctx.robot(r), &maps[r].vertices[v], &q[r])).sum();
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Straight composite motion from tree node `k` to the goal, validated with
/// obstacle checks since it leaves the roadmaps.
fn connect_to_target(
    ctx: &mut Ctx<'_>,
    maps: &[Roadmap],
    members: &[usize],
    tree: &[DNode],
    k: usize,
) -> Option<(usize, Option<Vec<Path>>)> {
    let from: Vec<Configuration> = tree[k].v.iter().enumerate().map(|(r, &v)| maps[r].vertices[v].clone()).collect();
    let seg = team_segment(&ctx.problem.robots, members, &from, &ctx.problem.goals);
    ctx.motion_valid(&seg, true).then_some((k, Some(seg)))
}
