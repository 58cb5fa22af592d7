use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run_scenario, RunMetrics};
use super::script::GazeScript;
use super::session::SimConfig;
use crate::classify::Model;
use crate::world::Scenario;
use crate::{Error, Result};

/// Mean and standard error of one metric over the runs where it is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation over √n; needs n ≥ 2.
    pub se: Option<f64>,
}

impl Stat {
    /// Values are summed in sorted order so the result does not depend on
    /// run order.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { n, mean: None, se: None };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / n as f64;
        let se = (n >= 2).then(|| {
            let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
            dev.sort_by(f64::total_cmp);
            (dev.iter().sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        });
        Self { n, mean: Some(mean), se }
    }
}

/// Share of exposed runs that stayed collision-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceRate {
    pub exposed: usize,
    pub with_collision: usize,
    pub rate: Option<f64>,
}

impl AvoidanceRate {
    fn of(flags: impl Iterator<Item = (bool, bool)>) -> Self {
        let (mut exposed, mut with_collision) = (0, 0);
        for (e, c) in flags {
            if e {
                exposed += 1;
                with_collision += c as usize;
            }
        }
        let rate = (exposed > 0).then(|| 1.0 - with_collision as f64 / exposed as f64);
        Self { exposed, with_collision, rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub reached: usize,
    pub time_to_goal: Stat,
    pub stop_distance: Stat,
    pub static_collisions: Stat,
    pub dynamic_collisions: Stat,
    pub emergency_stops: Stat,
    pub goal_dispatched: Stat,
    pub goal_correct: Stat,
    pub intent_latency: Stat,
    pub sim_time: Stat,
    pub distance_travelled: Stat,
    pub static_avoidance: AvoidanceRate,
    pub dynamic_avoidance: AvoidanceRate,
    /// Goals dispatched in runs whose script has no wink; must be zero.
    pub dispatched_without_wink: usize,
}

/// One run's outcome with enough context to aggregate and audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    pub name: String,
    pub script: String,
    pub seed: u64,
    pub has_wink: bool,
    pub metrics: RunMetrics,
}

pub fn aggregate(runs: &[RunRecord]) -> Result<AggregateReport> {
    if runs.len() < 2 {
        return Err(Error::InvalidParams(format!("aggregation needs at least 2 runs, got {}", runs.len())));
    }
    let stat = |f: &dyn Fn(&RunMetrics) -> Option<f64>| {
        Stat::of(&runs.iter().filter_map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(AggregateReport {
        n_runs: runs.len(),
        reached: runs.iter().filter(|r| r.metrics.time_to_goal.is_some()).count(),
        time_to_goal: stat(&|m| m.time_to_goal),
        stop_distance: stat(&|m| m.stop_distance),
        static_collisions: stat(&|m| Some(m.static_collisions as f64)),
        dynamic_collisions: stat(&|m| Some(m.dynamic_collisions as f64)),
        emergency_stops: stat(&|m| Some(m.emergency_stops as f64)),
        goal_dispatched: stat(&|m| Some(flag(m.goal_dispatched))),
        goal_correct: stat(&|m| Some(flag(m.goal_correct))),
        intent_latency: stat(&|m| m.intent_latency),
        sim_time: stat(&|m| Some(m.sim_time)),
        distance_travelled: stat(&|m| Some(m.distance_travelled)),
        static_avoidance: AvoidanceRate::of(
            runs.iter().map(|r| (r.metrics.exposed_static, r.metrics.static_collisions > 0)),
        ),
        dynamic_avoidance: AvoidanceRate::of(
            runs.iter().map(|r| (r.metrics.exposed_dynamic, r.metrics.dynamic_collisions > 0)),
        ),
        dispatched_without_wink: runs.iter().filter(|r| !r.has_wink && r.metrics.goal_dispatched).count(),
    })
}

/// A single scheduled run.
#[derive(Debug, Clone)]
pub struct BatchRun {
    pub family: String,
    pub name: String,
    pub script_name: String,
    pub scenario: Scenario,
    pub script: GazeScript,
    pub seed: u64,
}

/// Runs everything (in parallel; results keep input order).
pub fn run_batch(
    runs: &[BatchRun],
    models: &BTreeMap<String, Model>,
    cfg: &SimConfig,
) -> Result<Vec<RunRecord>> {
    runs.par_iter()
        .map(|r| {
            let out = run_scenario(&r.scenario, &r.script, models, cfg, r.seed)?;
            Ok(RunRecord {
                family: r.family.clone(),
                name: r.name.clone(),
                script: r.script_name.clone(),
                seed: r.seed,
                has_wink: r.script.has_wink(),
                metrics: out.metrics,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub flags: serde_json::Value,
    pub overall: AggregateReport,
    pub families: BTreeMap<String, AggregateReport>,
    pub runs: Vec<RunRecord>,
}

pub fn bench_report(runs: Vec<RunRecord>, flags: serde_json::Value) -> Result<BenchReport> {
    let mut by_family: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    for r in &runs {
        by_family.entry(r.family.clone()).or_default().push(r.clone());
    }
    let families = by_family
        .iter()
        .map(|(k, v)| Ok((k.clone(), aggregate(v)?)))
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        format_version: crate::FORMAT_VERSION,
        flags,
        overall: aggregate(&runs)?,
        families,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(t: Option<f64>, collisions: u32) -> RunMetrics {
        RunMetrics {
            time_to_goal: t,
            stop_distance: t.map(|_| 0.2),
            static_collisions: collisions,
            dynamic_collisions: 0,
            emergency_stops: 0,
            goal_dispatched: t.is_some(),
            dispatched_object: t.map(|_| "tv".into()),
            goal_correct: true,
            intent_latency: None,
            sim_time: 10.0,
            ticks: 250,
            exposed_static: true,
            exposed_dynamic: false,
            distance_travelled: 3.0,
        }
    }

    fn record(m: RunMetrics) -> RunRecord {
        RunRecord {
            family: "f".into(),
            name: "n".into(),
            script: "positive".into(),
            seed: 0,
            has_wink: true,
            metrics: m,
        }
    }

    #[test]
    fn standard_error_matches_formula() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, Some(2.5));
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.se.unwrap() - sd / 2.0).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0; 6]).se, Some(0.0));
        assert_eq!(Stat::of(&[1.0]).se, None);
        assert_eq!(Stat::of(&[]).mean, None);
    }

    #[test]
    fn order_does_not_matter() {
        let xs: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() * 1e3).collect();
        let mut ys = xs.clone();
        ys.reverse();
        assert_eq!(Stat::of(&xs), Stat::of(&ys));
    }

    #[test]
    fn avoidance_rates() {
        let clean: Vec<_> = (0..4).map(|_| record(metrics(Some(9.0), 0))).collect();
        let r = aggregate(&clean).unwrap();
        assert_eq!(r.static_avoidance.rate, Some(1.0));
        assert_eq!(r.dynamic_avoidance.rate, None);
        assert_eq!(r.time_to_goal.se, Some(0.0));

        let mut mixed = clean.clone();
        mixed.push(record(metrics(None, 2)));
        let r = aggregate(&mixed).unwrap();
        assert_eq!(r.static_avoidance.exposed, 5);
        assert_eq!(r.static_avoidance.rate, Some(0.8));
        assert_eq!(r.reached, 4);
        assert_eq!(r.time_to_goal.n, 4);
    }

    #[test]
    fn needs_two_runs() {
        assert!(aggregate(&[record(metrics(None, 0))]).is_err());
    }
}
