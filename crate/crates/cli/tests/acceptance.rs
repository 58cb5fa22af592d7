//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on
//! any failure. Every expected value comes from an oracle written here,
//! not from the library under test.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gazenav_cli::commands::{default_models, group_by_object};
use gazenav_core::classify::{
    cross_validate, cross_validate_with, predict_knn, stratified_folds, train_knn, train_svm_with, LabeledPoint,
    Model, ModelSpec, SmoConfig,
};
use gazenav_core::gaze::{synthesize_dataset, DatasetConfig, GazeGenParams, TaskClass};
use gazenav_core::intent::IntentBuffer;
use gazenav_core::nav::plan_dijkstra;
use gazenav_core::sim::{pack, replay, run_scenario, EventLog, SimConfig, SimEvent};
use gazenav_core::world::{Cell, CellIndex, OccupancyGrid, Pose, Scenario, VelocityCommand};

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { name, pass, detail }
}

// ---------------------------------------------------------------- KNN

fn knn_oracle(train: &[LabeledPoint], k: usize, q: [f64; 2]) -> TaskClass {
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (du, dv) = (p.u - q[0], p.v - q[1]);
            (du * du + dv * dv, i)
        })
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let nn = &all[..k];
    let hits: Vec<TaskClass> = nn.iter().filter(|(d, _)| *d == 0.0).map(|&(_, i)| train[i].label).collect();
    let (mut wi, mut wn) = (0.0, 0.0);
    if hits.is_empty() {
        for &(d, i) in nn {
            match train[i].label {
                TaskClass::Interactive => wi += 1.0 / d,
                TaskClass::NonInteractive => wn += 1.0 / d,
            }
        }
    } else {
        wi = hits.iter().filter(|c| **c == TaskClass::Interactive).count() as f64;
        wn = hits.len() as f64 - wi;
    }
    if wi > wn {
        TaskClass::Interactive
    } else {
        TaskClass::NonInteractive
    }
}

fn check_knn() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let train: Vec<LabeledPoint> = (0..500)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            let near = (u - 0.5).hypot(v - 0.45) < 0.25;
            let label = TaskClass::from_bool(if rng.random_bool(0.8) { near } else { !near });
            LabeledPoint::new(u, v, label)
        })
        .collect();
    let mut queries: Vec<[f64; 2]> = (0..190).map(|_| [rng.random(), rng.random()]).collect();
    queries.extend(train.iter().step_by(50).map(|p| p.xy()));
    let model = train_knn(&train, 10).unwrap();
    let t0 = Instant::now();
    let got: Vec<TaskClass> = queries.iter().map(|&q| predict_knn(&model, q).0).collect();
    let elapsed = t0.elapsed().as_secs_f64();
    let mismatches = queries
        .iter()
        .zip(&got)
        .filter(|(q, g)| knn_oracle(&train, 10, **q) != **g)
        .count();
    verdict(
        "KNN oracle equivalence",
        mismatches == 0 && elapsed < 1.0 && queries.len() == 200,
        format!("{} queries, k=10, {mismatches} mismatches, {:.4} s", queries.len(), elapsed),
    )
}

// ---------------------------------------------------------------- SVM

fn kernel(a: [f64; 2], b: [f64; 2], s: f64) -> f64 {
    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    (-d2 / (2.0 * s * s)).exp()
}

fn signed_q(data: &[LabeledPoint], s: f64) -> Vec<Vec<f64>> {
    data.iter()
        .map(|a| data.iter().map(|b| a.label.sign() * b.label.sign() * kernel(a.xy(), b.xy(), s)).collect())
        .collect()
}

fn dual_value(q: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let n = lambda.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += lambda[i] * lambda[j] * q[i][j];
        }
    }
    lambda.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto `{0 ≤ λ ≤ C, Σ yᵢλᵢ = 0}` by bisection on
/// the equality multiplier.
fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { z.iter().zip(y).map(|(zi, yi)| (zi - mu * yi).clamp(0.0, c)).collect() };
    let balance = |l: &[f64]| l.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let span = z.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected gradient ascent on the SVM dual.
fn reference_qp(data: &[LabeledPoint], c: f64, s: f64) -> f64 {
    let q = signed_q(data, s);
    let n = data.len();
    let y: Vec<f64> = data.iter().map(|p| p.label.sign()).collect();
    // Largest eigenvalue by power iteration.
    let mut x = vec![1.0; n];
    let mut l = 1.0;
    for _ in 0..500 {
        let qx: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * x[j]).sum()).collect();
        l = qx.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = qx.iter().map(|v| v / l).collect();
    }
    let step = 1.0 / (l * 1.01);
    let mut lam = vec![0.0; n];
    let mut mom = lam.clone();
    let mut t = 1.0f64;
    for _ in 0..40_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * mom[j]).sum::<f64>()).collect();
        let z: Vec<f64> = (0..n).map(|i| mom[i] + step * grad[i]).collect();
        let next = project(&z, &y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        mom = (0..n).map(|i| next[i] + (t - 1.0) / t_next * (next[i] - lam[i])).collect();
        lam = next;
        t = t_next;
    }
    dual_value(&q, &lam)
}

fn blobs(seed: u64, n: usize, noise: f64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let cls = TaskClass::from_bool(k % 2 == 1);
            let c = if cls.is_interactive() { [0.62, 0.55] } else { [0.38, 0.45] };
            let u = (c[0] + noise * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            let v = (c[1] + noise * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            LabeledPoint::new(u, v, cls)
        })
        .collect()
}

/// Largest KKT violation over the training points.
fn kkt_residual(data: &[LabeledPoint], lambda: &[f64], c: f64, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let eps = 1e-12;
    data.iter()
        .zip(lambda)
        .map(|(p, &l)| {
            let m = p.label.sign() * f(p.xy());
            if l <= eps {
                (1.0 - m).max(0.0)
            } else if l >= c - eps {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn check_svm() -> Verdict {
    let t0 = Instant::now();
    let cfg = SmoConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let separable: Vec<LabeledPoint> = (0..20)
        .map(|k| {
            let cls = TaskClass::from_bool(k % 2 == 1);
            let base = if cls.is_interactive() { 0.65 } else { 0.05 };
            LabeledPoint::new(base + 0.3 * rng.random::<f64>(), base + 0.3 * rng.random::<f64>(), cls)
        })
        .collect();
    let sol = train_svm_with(&separable, &cfg).unwrap();
    let correct = separable
        .iter()
        .filter(|p| TaskClass::from_bool(sol.model.decision(p.xy()) > 0.0) == p.label)
        .count();

    let mut worst_kkt: f64 = 0.0;
    for data in [separable.clone(), blobs(1, 30, 0.5), blobs(2, 200, 0.6)] {
        let s = train_svm_with(&data, &cfg).unwrap();
        worst_kkt = worst_kkt.max(kkt_residual(&data, &s.lambda, cfg.c, |q| s.model.decision(q)));
    }

    let inst = blobs(3, 30, 0.5);
    let s = train_svm_with(&inst, &cfg).unwrap();
    let smo = dual_value(&signed_q(&inst, cfg.kernel_scale), &s.lambda);
    let reference = reference_qp(&inst, cfg.c, cfg.kernel_scale);
    let gap = (smo - reference).abs();
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        "SVM correctness",
        correct == 20 && worst_kkt <= cfg.tol && gap <= 1e-3 && elapsed < 10.0,
        format!(
            "separable {correct}/20, max KKT residual {worst_kkt:.2e} (tol {:.0e}), dual {smo:.6} vs reference {reference:.6} (gap {gap:.1e}), {elapsed:.2} s",
            cfg.tol
        ),
    )
}

// ---------------------------------------------------------------- CV

fn default_corpus() -> BTreeMap<String, Vec<LabeledPoint>> {
    let records = synthesize_dataset(&DatasetConfig::default(), &GazeGenParams::default(), 0).unwrap();
    group_by_object(&records)
}

fn check_cv(corpus: &BTreeMap<String, Vec<LabeledPoint>>) -> Verdict {
    let mut problems = Vec::new();
    for (object, pts) in corpus {
        let labels: Vec<TaskClass> = pts.iter().map(|p| p.label).collect();
        let folds = stratified_folds(&labels, 10, 0).unwrap();
        let mut size = [0usize; 10];
        let mut per_class = [[0usize; 10]; 2];
        for (i, &f) in folds.iter().enumerate() {
            size[f] += 1;
            per_class[labels[i] as usize][f] += 1;
        }
        let spread = |xs: &[usize]| xs.iter().max().unwrap() - xs.iter().min().unwrap();
        if folds.len() != pts.len() || size.iter().sum::<usize>() != pts.len() || spread(&size) > 1 {
            problems.push(format!("{object}: fold sizes {size:?}"));
        }
        for c in &per_class {
            if spread(c) > 1 {
                problems.push(format!("{object}: class split {c:?}"));
            }
        }
        let report = cross_validate_with(pts, 10, 0, |_| Ok(|_: [f64; 2]| TaskClass::NonInteractive)).unwrap();
        let n_non = labels.iter().filter(|l| **l == TaskClass::NonInteractive).count();
        let prior = n_non as f64 / pts.len() as f64;
        let tested: u64 = report.confusion.iter().flatten().sum();
        if report.pooled_accuracy != prior || tested != pts.len() as u64 {
            problems.push(format!("{object}: constant accuracy {} vs prior {prior}", report.pooled_accuracy));
        }
    }
    verdict(
        "10-fold CV harness",
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} objects: exact partition, stratified, constant classifier = class prior", corpus.len())
        } else {
            problems.join("; ")
        },
    )
}

fn check_accuracy_floor(corpus: &BTreeMap<String, Vec<LabeledPoint>>) -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for (object, pts) in corpus {
        let knn = cross_validate(pts, &ModelSpec::default_knn(), 10, 0).unwrap().mean_accuracy;
        let svm = cross_validate(pts, &ModelSpec::default_svm(), 10, 0).unwrap().mean_accuracy;
        let best = knn.max(svm);
        ok &= best >= 0.78;
        lines.push(format!("{object} n={} knn {knn:.3} svm {svm:.3}", pts.len()));
    }
    verdict("Classifier accuracy floor (>= 0.78)", ok, lines.join(", "))
}

// ---------------------------------------------------------------- ring buffer

fn buffer_vote(frames: &[TaskClass]) -> TaskClass {
    let mut b = IntentBuffer::new(40);
    for &f in frames {
        b.push_frame(Some("tv"), Some(f));
    }
    b.vote()
}

fn check_ring_buffer() -> Verdict {
    use TaskClass::*;
    let mut bad = 0;
    let mut cases = 0;
    for fill in 0..=40usize {
        for count in 0..=fill {
            let frames: Vec<TaskClass> = (0..fill).map(|i| if i < count { Interactive } else { NonInteractive }).collect();
            let expect = TaskClass::from_bool(fill == 40 && count >= 21);
            bad += (buffer_vote(&frames) != expect) as usize;
            cases += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut perm_bad = 0;
    for _ in 0..1000 {
        let extra = rng.random_range(0..30);
        let mut frames: Vec<TaskClass> = (0..40 + extra).map(|_| TaskClass::from_bool(rng.random_bool(0.52))).collect();
        let tail_count = frames[extra..].iter().filter(|c| c.is_interactive()).count();
        let expect = TaskClass::from_bool(tail_count >= 21);
        let before = buffer_vote(&frames);
        frames[extra..].shuffle(&mut rng);
        let after = buffer_vote(&frames);
        perm_bad += (before != expect || after != before) as usize;
    }
    verdict(
        "Ring-buffer vote",
        bad == 0 && perm_bad == 0,
        format!("{cases} fill/count cases, {bad} wrong; 1000 shuffles, {perm_bad} disagreements"),
    )
}

// ---------------------------------------------------------------- Dijkstra

/// Uniform-cost search over exact (straight, diagonal) step counts.
fn ucs(grid: &OccupancyGrid, s: CellIndex, g: CellIndex) -> Option<(u32, u32)> {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let free = |i: isize, j: isize| i >= 0 && j >= 0 && i < w && j < h && grid.get(CellIndex::new(i as usize, j as usize)) == Cell::Free;
    let cost = |c: (u32, u32)| c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2;
    let idx = |i: isize, j: isize| (j * w + i) as usize;
    let mut best: Vec<Option<(u32, u32)>> = vec![None; (w * h) as usize];
    let mut closed = vec![false; (w * h) as usize];
    best[idx(s.i as isize, s.j as isize)] = Some((0, 0));
    loop {
        let open = (0..best.len())
            .filter(|&k| !closed[k] && best[k].is_some())
            .min_by(|&a, &b| cost(best[a].unwrap()).partial_cmp(&cost(best[b].unwrap())).unwrap());
        let Some(k) = open else { return None };
        closed[k] = true;
        let (i, j) = ((k as isize) % w, (k as isize) / w);
        if (i as usize, j as usize) == (g.i, g.j) {
            return best[k];
        }
        let cur = best[k].unwrap();
        for di in -1..=1isize {
            for dj in -1..=1isize {
                if (di, dj) == (0, 0) || !free(i + di, j + dj) {
                    continue;
                }
                let diagonal = di != 0 && dj != 0;
                if diagonal && !(free(i + di, j) && free(i, j + dj)) {
                    continue;
                }
                let cand = if diagonal { (cur.0, cur.1 + 1) } else { (cur.0 + 1, cur.1) };
                let n = idx(i + di, j + dj);
                if !closed[n] && best[n].is_none_or(|b| cost(cand) < cost(b)) {
                    best[n] = Some(cand);
                }
            }
        }
    }
}

fn random_free(rng: &mut ChaCha8Rng, grid: &OccupancyGrid) -> CellIndex {
    loop {
        let c = CellIndex::new(rng.random_range(0..grid.width()), rng.random_range(0..grid.height()));
        if grid.get(c) == Cell::Free {
            return c;
        }
    }
}

fn plan_steps(grid: &OccupancyGrid, s: CellIndex, g: CellIndex) -> Option<(u32, u32)> {
    let [x, y] = grid.world_of(s);
    plan_dijkstra(grid, &Pose::new(x, y, 0.0), grid.world_of(g))
        .ok()
        .map(|p| (p.straight_steps, p.diagonal_steps))
}

fn check_dijkstra() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut deviations = 0;
    let mut reachable = 0;
    for _ in 0..200 {
        let density = rng.random_range(0.05..0.4);
        let mut grid = OccupancyGrid::new(15, 15, 1.0);
        for j in 0..15 {
            for i in 0..15 {
                if rng.random_bool(density) {
                    grid.set(CellIndex::new(i, j), Cell::Occupied);
                }
            }
        }
        let (s, g) = (random_free(&mut rng, &grid), random_free(&mut rng, &grid));
        let want = ucs(&grid, s, g);
        reachable += want.is_some() as usize;
        deviations += (plan_steps(&grid, s, g) != want) as usize;
    }
    let mut mono_bad = 0;
    for _ in 0..100 {
        let mut grid = OccupancyGrid::new(15, 15, 1.0);
        let (s, g) = (random_free(&mut rng, &grid), random_free(&mut rng, &grid));
        let value = |st: Option<(u32, u32)>| st.map_or(f64::INFINITY, |(a, b)| a as f64 + b as f64 * std::f64::consts::SQRT_2);
        let mut prev = value(plan_steps(&grid, s, g));
        for _ in 0..40 {
            let c = random_free(&mut rng, &grid);
            if c == s || c == g {
                continue;
            }
            grid.set(c, Cell::Occupied);
            let now = value(plan_steps(&grid, s, g));
            if now < prev - 1e-12 {
                mono_bad += 1;
            }
            prev = now;
        }
    }
    verdict(
        "Dijkstra exactness",
        deviations == 0 && mono_bad == 0,
        format!("200 grids ({reachable} reachable), {deviations} deviations from UCS; 100 obstacle sequences, {mono_bad} monotonicity violations"),
    )
}

// ---------------------------------------------------------------- pack runs

struct PackRun {
    family: String,
    target: String,
    script: String,
    has_wink: bool,
    scenario: Scenario,
    log: EventLog,
}

fn run_pack(models: &BTreeMap<String, Model>, cfg: &SimConfig) -> Vec<PackRun> {
    let mut out = Vec::new();
    for entry in pack::standard_pack(pack::DEFAULT_PACK_SEEDS).unwrap() {
        for r in entry.runs() {
            let res = run_scenario(&r.scenario, &r.script, models, cfg, r.seed).unwrap();
            out.push(PackRun {
                family: r.family.clone(),
                target: entry.target.clone(),
                script: r.script_name.clone(),
                has_wink: r.script.has_wink(),
                scenario: r.scenario,
                log: res.log,
            });
        }
    }
    out
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
}

fn advance(p: Pose, c: VelocityCommand, dt: f64) -> Pose {
    Pose::new(p.x + c.v * p.theta.cos() * dt, p.y + c.v * p.theta.sin() * dt, p.theta + c.omega * dt)
}

/// Exact static gap by scanning every occupied square; zero clearance
/// outside the map.
struct StaticWorld {
    squares: Vec<[f64; 2]>,
    half: f64,
    extent: [f64; 2],
}

impl StaticWorld {
    fn new(sc: &Scenario) -> Self {
        let g = sc.grid.without_inflation();
        let squares = g.iter_cells().filter(|(_, c)| *c == Cell::Occupied).map(|(c, _)| g.world_of(c)).collect();
        let res = g.resolution();
        Self { squares, half: 0.5 * res, extent: [g.width() as f64 * res, g.height() as f64 * res] }
    }

    fn clearance(&self, p: [f64; 2]) -> f64 {
        if !(p[0] >= 0.0 && p[1] >= 0.0 && p[0] < self.extent[0] && p[1] < self.extent[1]) {
            return 0.0;
        }
        self.squares
            .iter()
            .map(|c| ((p[0] - c[0]).abs() - self.half).max(0.0).hypot(((p[1] - c[1]).abs() - self.half).max(0.0)))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Default)]
struct DwaAudit {
    nav_ticks: usize,
    estop_ticks: usize,
    window_violations: usize,
    estop_violations: usize,
    attributable: usize,
    collisions: usize,
}

fn audit_run(run: &PackRun, audit: &mut DwaAudit) {
    let sc = &run.scenario;
    let cfg = &run.log.header.config.dwa;
    let r = sc.robot_radius;
    let world = StaticWorld::new(sc);
    let ticks = &run.log.ticks;
    let mut goal: Option<[f64; 2]> = None;
    let mut in_collision = false;
    for (k, rec) in ticks.iter().enumerate() {
        for e in &rec.events {
            match e {
                SimEvent::GoalDispatched(_) => goal = None,
                SimEvent::Planned { waypoints, .. } => goal = waypoints.last().copied(),
                _ => {}
            }
        }
        let p = rec.pose.position();
        let colliding = world.clearance(p) < r
            || sc.dynamic_obstacles.iter().zip(&rec.obstacles).any(|(o, q)| (p[0] - q[0]).hypot(p[1] - q[1]) < r + o.radius);
        audit.collisions += (colliding && !in_collision) as usize;
        in_collision = colliding;

        let Some(diag) = &rec.nav else { continue };
        audit.nav_ticks += 1;
        let prev = if k == 0 { VelocityCommand::STOP } else { ticks[k - 1].cmd };
        let goal = goal.expect("navigation without a plan");
        let approach = (2.0 * cfg.a_v * (p[0] - goal[0]).hypot(p[1] - goal[1])).sqrt();
        let v_lo = (prev.v - cfg.a_v * cfg.tick_dt).max(0.0);
        let v_hi = (prev.v + cfg.a_v * cfg.tick_dt).min(cfg.v_max).min(approach).max(v_lo);
        let w_lo = (prev.omega - cfg.a_omega * cfg.tick_dt).max(-cfg.omega_max);
        let w_hi = (prev.omega + cfg.a_omega * cfg.tick_dt).min(cfg.omega_max).max(w_lo);

        let tracks: Vec<([f64; 2], [f64; 2], f64)> = sc
            .dynamic_obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let now = rec.obstacles[i];
                let vel = if k == 0 {
                    [0.0, 0.0]
                } else {
                    let before = ticks[k - 1].obstacles[i];
                    [(now[0] - before[0]) / cfg.tick_dt, (now[1] - before[1]) / cfg.tick_dt]
                };
                (now, vel, o.radius)
            })
            .collect();
        let gap_at = |q: [f64; 2], tau: f64| {
            let moving = tracks
                .iter()
                .map(|(pos, vel, rad)| (q[0] - pos[0] - vel[0] * tau).hypot(q[1] - pos[1] - vel[1] * tau) - rad - r)
                .fold(f64::INFINITY, f64::min);
            (world.clearance(q) - r).min(moving)
        };
        let arc_gap = |c: VelocityCommand| {
            let mut g = gap_at(advance(rec.pose, c, cfg.tick_dt).position(), cfg.tick_dt);
            let mut q = rec.pose;
            let steps = (cfg.horizon / cfg.sim_dt).round() as usize;
            for s in 1..=steps {
                q = advance(q, c, cfg.sim_dt);
                g = g.min(gap_at(q.position(), s as f64 * cfg.sim_dt));
            }
            g
        };

        if diag.emergency_stop {
            audit.estop_ticks += 1;
            // Every candidate in the window must be inadmissible.
            let any_ok = linspace(v_lo, v_hi, cfg.n_v)
                .flat_map(|v| linspace(w_lo, w_hi, cfg.n_omega).map(move |w| VelocityCommand::new(v, w)))
                .any(|c| arc_gap(c) > cfg.safety_radius + 1e-9);
            audit.estop_violations += (any_ok || rec.cmd != VelocityCommand::STOP) as usize;
        } else {
            let c = rec.cmd;
            let inside = c.v >= v_lo - 1e-12 && c.v <= v_hi + 1e-12 && c.omega >= w_lo - 1e-12 && c.omega <= w_hi + 1e-12;
            audit.window_violations += !inside as usize;
            audit.estop_violations += (arc_gap(c) <= cfg.safety_radius - 1e-9) as usize;
            // The pose this command leads to, against the world the
            // controller was shown.
            if let Some(next) = ticks.get(k + 1) {
                let q = next.pose.position();
                let hits_static = world.clearance(q) < r;
                let hits_predicted = tracks.iter().enumerate().any(|(i, (pos, vel, rad))| {
                    let actual = next.obstacles[i];
                    let pred = [pos[0] + vel[0] * cfg.tick_dt, pos[1] + vel[1] * cfg.tick_dt];
                    (q[0] - actual[0]).hypot(q[1] - actual[1]) < r + rad && (q[0] - pred[0]).hypot(q[1] - pred[1]) < r + rad
                });
                audit.attributable += (hits_static || hits_predicted) as usize;
            }
        }
    }
}

fn check_dwa(runs: &[PackRun]) -> Verdict {
    let mut a = DwaAudit::default();
    for run in runs {
        audit_run(run, &mut a);
    }
    verdict(
        "DWA invariants",
        a.nav_ticks >= 10_000 && a.window_violations == 0 && a.estop_violations == 0 && a.attributable == 0,
        format!(
            "{} control ticks ({} e-stop): window violations {}, e-stop/admissibility mismatches {}, attributable collisions {} (ground-truth collision episodes {})",
            a.nav_ticks, a.estop_ticks, a.window_violations, a.estop_violations, a.attributable, a.collisions
        ),
    )
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len().max(1) as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

fn positive<'a>(runs: &'a [PackRun], family: &'a str) -> impl Iterator<Item = &'a PackRun> + 'a {
    runs.iter().filter(move |r| r.family == family && r.script == "positive")
}

fn check_happy_path(runs: &[PackRun]) -> Verdict {
    let mut good = 0;
    let mut total = 0;
    let mut stops = Vec::new();
    let mut to_goal = Vec::new();
    let mut sim = Vec::new();
    for r in positive(runs, "empty-room") {
        total += 1;
        let m = &r.log.summary;
        let right = m.dispatched_object.as_deref() == Some(r.target.as_str());
        let stopped = m.stop_distance.is_some_and(|d| d <= 0.25);
        good += (right && stopped) as usize;
        stops.extend(m.stop_distance);
        to_goal.extend(m.time_to_goal);
        sim.push(m.sim_time);
    }
    let (ts, tsd) = mean_sd(&to_goal);
    let (ss, ssd) = mean_sd(&sim);
    let worst_stop = stops.iter().copied().fold(0.0, f64::max);
    verdict(
        "End-to-end happy path",
        total == 20 && good == 20,
        format!(
            "{good}/{total} correct dispatch + arrival; max stop distance {worst_stop:.3} m; time to goal {ts:.1} ± {tsd:.1} s after dispatch, total sim time {ss:.1} ± {ssd:.1} s"
        ),
    )
}

fn check_negative(runs: &[PackRun]) -> Verdict {
    let negatives: Vec<_> = runs.iter().filter(|r| !r.has_wink).collect();
    let dispatched = negatives.iter().filter(|r| r.log.summary.goal_dispatched).count();
    verdict(
        "Safety negative control",
        dispatched == 0 && !negatives.is_empty(),
        format!("{} runs without a wink, {dispatched} goals dispatched", negatives.len()),
    )
}

fn check_avoidance(runs: &[PackRun]) -> Verdict {
    let free_rate = |family: &str| {
        let rs: Vec<_> = positive(runs, family).collect();
        let clean = rs.iter().filter(|r| r.log.summary.static_collisions + r.log.summary.dynamic_collisions == 0).count();
        (clean, rs.len())
    };
    let (cs, cn) = free_rate("cluttered-static");
    let (dp, dn) = free_rate("crossing-pedestrian");
    let stops: Vec<f64> = runs.iter().filter(|r| r.script == "positive").map(|r| r.log.summary.emergency_stops as f64).collect();
    let (ms, _) = mean_sd(&stops);
    let per_family: Vec<String> = pack::FAMILIES
        .iter()
        .map(|f| {
            let s: Vec<f64> = positive(runs, f).map(|r| r.log.summary.emergency_stops as f64).collect();
            format!("{f} {:.2}", mean_sd(&s).0)
        })
        .collect();
    let (cr, dr) = (cs as f64 / cn as f64, dp as f64 / dn as f64);
    verdict(
        "Avoidance rates",
        cn == 20 && dn == 20 && cr >= 0.95 && dr >= 0.90 && ms <= 1.0,
        format!(
            "cluttered-static {cs}/{cn} collision-free ({:.0}%), crossing-pedestrian {dp}/{dn} ({:.0}%), e-stops per run {ms:.2} ({})",
            cr * 100.0,
            dr * 100.0,
            per_family.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- determinism

fn cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gazenav"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Every artifact and stdout of a full command session, keyed by name.
fn cli_session(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let steps: &[&[&str]] = &[
        &["synth", "--seed", "7", "--trials", "6", "--out", "d.jsonl"],
        &["train", "--dataset", "d.jsonl", "--kind", "knn", "--out", "knn"],
        &["train", "--dataset", "d.jsonl", "--kind", "svm", "--out", "svm"],
        &["cv", "--dataset", "d.jsonl", "--kind", "svm", "--seed", "3", "--out", "cv.json"],
        &["pack", "--seeds", "1", "--out", "pack"],
        &[
            "run", "--scenario", "pack/crossing-pedestrian/seed-00.scenario.json", "--script",
            "pack/scripts/positive-laptop.json", "--models", "svm", "--seed", "9", "--log", "run.jsonl", "--out", "run.json",
        ],
        &["replay", "--log", "run.jsonl", "--out", "replay.json"],
        &["bench", "--pack", "pack", "--seeds", "1", "--out", "bench.json"],
    ];
    let mut out = BTreeMap::new();
    for (k, args) in steps.iter().enumerate() {
        out.insert(format!("stdout-{k}-{}", args[0]), cli(dir, args)?);
    }
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(name, std::fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn check_determinism(runs: &[PackRun], models: &BTreeMap<String, Model>, cfg: &SimConfig) -> Verdict {
    let mut replay_bad = 0;
    for r in runs {
        let parsed = EventLog::parse(r.log.to_jsonl().as_bytes()).unwrap();
        match replay(&parsed) {
            Ok(m) if m == r.log.summary => {}
            _ => replay_bad += 1,
        }
    }
    let mut rerun_bad = 0;
    for r in runs.iter().step_by(23) {
        let again = run_scenario(&r.log.header.scenario, &r.log.header.script, models, cfg, r.log.header.seed).unwrap();
        rerun_bad += (again.log.to_jsonl() != r.log.to_jsonl()) as usize;
    }
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cli_result = cli_session(a.path()).and_then(|x| cli_session(b.path()).map(|y| (x, y)));
    let (cli_ok, cli_detail) = match cli_result {
        Ok((x, y)) => {
            let differing: Vec<&String> = x.keys().filter(|k| x.get(*k) != y.get(*k)).collect();
            let ok = differing.is_empty() && x.len() == y.len();
            (ok, format!("{} CLI outputs compared, {} differ {:?}", x.len(), differing.len(), differing))
        }
        Err(e) => (false, format!("CLI failed: {e}")),
    };
    verdict(
        "Determinism",
        replay_bad == 0 && rerun_bad == 0 && cli_ok,
        format!(
            "replay of {} logs: {replay_bad} mismatches; {} re-runs: {rerun_bad} byte differences; {cli_detail}",
            runs.len(),
            runs.len().div_ceil(23)
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut results = vec![check_knn(), check_svm()];
    let corpus = default_corpus();
    results.push(check_cv(&corpus));
    results.push(check_accuracy_floor(&corpus));
    results.push(check_ring_buffer());
    results.push(check_dijkstra());

    let models = default_models(0).unwrap();
    let cfg = SimConfig::default();
    let runs = run_pack(&models, &cfg);
    results.push(check_dwa(&runs));
    results.push(check_happy_path(&runs));
    results.push(check_negative(&runs));
    results.push(check_avoidance(&runs));
    results.push(check_determinism(&runs, &models, &cfg));

    println!();
    for v in &results {
        println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    let failed = results.iter().filter(|v| !v.pass).count();
    println!(
        "\nacceptance: {} passed, {failed} failed ({:.1} s)",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
