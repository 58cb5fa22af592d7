use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use gazenav_core::classify::{
    cross_validate, load_model, save_model, LabeledPoint, Model, ModelSpec, DEFAULT_C, DEFAULT_K,
    DEFAULT_KERNEL_SCALE, DEFAULT_TOL,
};
use gazenav_core::gaze::{read_dataset, synthesize_dataset, write_dataset, DatasetConfig, DatasetRecord, GazeGenParams};
use gazenav_core::sim::{bench_report, pack, replay, run_batch, run_scenario, EventLog, GazeScript, SimConfig};
use gazenav_core::world::Scenario;
use gazenav_core::FORMAT_VERSION;

use crate::args::{BenchArgs, Command, CvArgs, Kind, ModelArgs, PackArgs, ReplayArgs, RunArgs, SynthArgs, TrainArgs};
use crate::error::{CliError, CliResult};

/// Runs a headless command and returns what goes to stdout. `serve` is
/// handled by [`crate::serve`].
pub fn execute(cmd: &Command) -> CliResult<String> {
    let flags = flags_of(cmd);
    match cmd {
        Command::Synth(a) => synth(a, flags),
        Command::Train(a) => train(a, flags),
        Command::Cv(a) => cv(a, flags),
        Command::Run(a) => run(a, flags),
        Command::Bench(a) => bench(a, flags),
        Command::Replay(a) => replay_log(a, flags),
        Command::Pack(a) => write_standard_pack(a, flags),
        Command::Serve(_) => Err(CliError::usage("serve is not a headless command")),
    }
}

/// The full flag set, embedded in every artifact.
pub fn flags_of(cmd: &Command) -> Value {
    serde_json::to_value(cmd).expect("flags serialize")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::new("io", format!("{}: {e}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::new("json", format!("{}: {e}", path.display())))
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes the document to `out` when given and returns it for stdout.
fn emit(value: &impl Serialize, out: Option<&Path>) -> CliResult<String> {
    let text = to_json(value);
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        std::fs::write(path, &text).map_err(|e| io_err(path, e))?;
    }
    Ok(text)
}

pub fn load_config(path: Option<&Path>) -> CliResult<SimConfig> {
    let cfg = match path {
        Some(p) => read_json(p)?,
        None => SimConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn model_spec(a: &ModelArgs) -> CliResult<ModelSpec> {
    match a.kind {
        Kind::Knn => {
            if a.c.is_some() || a.kernel_scale.is_some() || a.tol.is_some() {
                return Err(CliError::usage("--c, --kernel-scale and --tol apply to --kind svm only"));
            }
            let k = a.k.unwrap_or(DEFAULT_K);
            if k == 0 {
                return Err(CliError::usage("--k must be at least 1"));
            }
            Ok(ModelSpec::Knn { k })
        }
        Kind::Svm => {
            if a.k.is_some() {
                return Err(CliError::usage("--k applies to --kind knn only"));
            }
            let c = a.c.unwrap_or(DEFAULT_C);
            let kernel_scale = a.kernel_scale.unwrap_or(DEFAULT_KERNEL_SCALE);
            let tol = a.tol.unwrap_or(DEFAULT_TOL);
            if !(c > 0.0 && kernel_scale > 0.0 && tol > 0.0) {
                return Err(CliError::usage("--c, --kernel-scale and --tol must be positive"));
            }
            Ok(ModelSpec::Svm { c, kernel_scale, tol })
        }
    }
}

/// Dataset points grouped by object, in label order.
pub fn group_by_object(records: &[DatasetRecord]) -> BTreeMap<String, Vec<LabeledPoint>> {
    let mut out: BTreeMap<String, Vec<LabeledPoint>> = BTreeMap::new();
    for r in records {
        out.entry(r.object.clone()).or_default().push(LabeledPoint::from(r));
    }
    out
}

fn load_points(path: &Path) -> CliResult<BTreeMap<String, Vec<LabeledPoint>>> {
    let grouped = group_by_object(&read_dataset(path)?);
    if grouped.is_empty() {
        return Err(CliError::new("invalid_params", format!("{}: dataset is empty", path.display())));
    }
    Ok(grouped)
}

/// KNN (k = 10) per default object, trained on the default synthetic
/// corpus drawn with `seed`.
pub fn default_models(seed: u64) -> CliResult<BTreeMap<String, Model>> {
    let records = synthesize_dataset(&DatasetConfig::default(), &GazeGenParams::default(), seed)?;
    group_by_object(&records)
        .into_iter()
        .map(|(object, pts)| Ok((object, ModelSpec::default_knn().train(&pts)?)))
        .collect()
}

/// Every `*.json` model file in `dir`, keyed by its object label.
pub fn load_models_dir(dir: &Path) -> CliResult<BTreeMap<String, Model>> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut models = BTreeMap::new();
    for f in files {
        let (object, model) = load_model(&f)?;
        if models.insert(object.clone(), model).is_some() {
            return Err(CliError::new(
                "model_file",
                format!("{}: second model for object `{object}`", dir.display()),
            ));
        }
    }
    if models.is_empty() {
        return Err(CliError::new("model_file", format!("{}: no model files", dir.display())));
    }
    Ok(models)
}

pub fn resolve_models(dir: Option<&Path>, model_seed: Option<u64>) -> CliResult<BTreeMap<String, Model>> {
    match (dir, model_seed) {
        (Some(_), Some(_)) => Err(CliError::usage("--model-seed only applies without --models")),
        (Some(d), None) => load_models_dir(d),
        (None, seed) => default_models(seed.unwrap_or(0)),
    }
}

fn check_label(label: &str) -> CliResult<()> {
    let ok = !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("object label `{label}` is not a plain identifier")))
    }
}

fn synth(a: &SynthArgs, flags: Value) -> CliResult<String> {
    if a.objects.is_empty() || a.subjects == 0 || a.trials < 2 {
        return Err(CliError::usage("need at least one object, one subject and two trials"));
    }
    for o in &a.objects {
        check_label(o)?;
    }
    let params: GazeGenParams = match &a.params {
        Some(p) => read_json(p)?,
        None => GazeGenParams::default(),
    };
    params.validate()?;
    for o in &a.objects {
        params.object(o)?;
    }
    let cfg = DatasetConfig {
        objects: a.objects.clone(),
        subjects: a.subjects,
        trials_per_subject: a.trials,
        ..DatasetConfig::default()
    };
    let records = synthesize_dataset(&cfg, &params, a.seed)?;
    write_dataset(&a.out, &records, &flags)?;
    let counts: BTreeMap<String, usize> = group_by_object(&records).into_iter().map(|(k, v)| (k, v.len())).collect();
    emit(&json!({ "format_version": FORMAT_VERSION, "flags": flags, "records": records.len(), "per_object": counts }), None)
}

fn train(a: &TrainArgs, flags: Value) -> CliResult<String> {
    let spec = model_spec(&a.model)?;
    let grouped = load_points(&a.dataset)?;
    for o in grouped.keys() {
        check_label(o)?;
    }
    std::fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    let mut written = BTreeMap::new();
    for (object, pts) in &grouped {
        let model = spec.train(pts)?;
        let path = a.out.join(format!("{object}.json"));
        let provenance = json!({ "flags": flags, "spec": spec, "n_points": pts.len() });
        save_model(&path, object, &model, &provenance)?;
        written.insert(object.clone(), path.display().to_string());
    }
    emit(&json!({ "format_version": FORMAT_VERSION, "flags": flags, "models": written }), None)
}

fn cv(a: &CvArgs, flags: Value) -> CliResult<String> {
    let spec = model_spec(&a.model)?;
    if a.folds < 2 {
        return Err(CliError::usage("--folds must be at least 2"));
    }
    let grouped = load_points(&a.dataset)?;
    let mut reports = BTreeMap::new();
    for (object, pts) in &grouped {
        reports.insert(object.clone(), cross_validate(pts, &spec, a.folds, a.seed)?);
    }
    let doc = json!({ "format_version": FORMAT_VERSION, "flags": flags, "spec": spec, "reports": reports });
    emit(&doc, a.out.as_deref())
}

fn run(a: &RunArgs, flags: Value) -> CliResult<String> {
    if a.models.is_some() && a.model_seed.is_some() {
        return Err(CliError::usage("--model-seed only applies without --models"));
    }
    let cfg = load_config(a.config.as_deref())?;
    let scenario = Scenario::load(&a.scenario)?;
    let script = GazeScript::load(&a.script)?;
    let models = resolve_models(a.models.as_deref(), a.model_seed)?;
    let seed = a.seed.unwrap_or(scenario.rng_seed);
    let mut out = run_scenario(&scenario, &script, &models, &cfg, seed)?;
    out.log.header.flags = flags.clone();
    if let Some(path) = &a.log {
        out.log.write(path)?;
    }
    emit(&json!({ "format_version": FORMAT_VERSION, "flags": flags, "metrics": out.metrics }), a.out.as_deref())
}

fn bench(a: &BenchArgs, flags: Value) -> CliResult<String> {
    if a.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    if a.models.is_some() && a.model_seed.is_some() {
        return Err(CliError::usage("--model-seed only applies without --models"));
    }
    let cfg = load_config(a.config.as_deref())?;
    let entries = match &a.pack {
        Some(dir) => pack::read_pack(dir, Some(a.seeds))?,
        None => pack::standard_pack(a.seeds)?,
    };
    let models = resolve_models(a.models.as_deref(), a.model_seed)?;
    let runs: Vec<_> = entries.iter().flat_map(|e| e.runs()).collect();
    let records = run_batch(&runs, &models, &cfg)?;
    emit(&bench_report(records, flags)?, a.out.as_deref())
}

fn replay_log(a: &ReplayArgs, flags: Value) -> CliResult<String> {
    let log = EventLog::read(&a.log)?;
    let metrics = replay(&log)?;
    let doc = json!({ "format_version": FORMAT_VERSION, "flags": flags, "metrics": metrics, "consistent": true });
    emit(&doc, a.out.as_deref())
}

fn write_standard_pack(a: &PackArgs, flags: Value) -> CliResult<String> {
    if a.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let entries = pack::standard_pack(a.seeds)?;
    pack::write_pack(&a.out, &entries, &flags)?;
    emit(&json!({ "format_version": FORMAT_VERSION, "flags": flags, "entries": entries.len() }), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gazenav_core::gaze::TaskClass;

    fn margs(kind: Kind) -> ModelArgs {
        ModelArgs { kind, k: None, c: None, kernel_scale: None, tol: None }
    }

    #[test]
    fn model_flags_are_checked_against_kind() {
        assert_eq!(model_spec(&margs(Kind::Knn)).unwrap(), ModelSpec::default_knn());
        assert_eq!(model_spec(&margs(Kind::Svm)).unwrap(), ModelSpec::default_svm());
        let knn_with_c = ModelArgs { c: Some(2.0), ..margs(Kind::Knn) };
        assert_eq!(model_spec(&knn_with_c).unwrap_err().kind, "usage");
        let svm_with_k = ModelArgs { k: Some(3), ..margs(Kind::Svm) };
        assert_eq!(model_spec(&svm_with_k).unwrap_err().kind, "usage");
        let zero_k = ModelArgs { k: Some(0), ..margs(Kind::Knn) };
        assert!(model_spec(&zero_k).is_err());
        let neg_c = ModelArgs { c: Some(-1.0), ..margs(Kind::Svm) };
        assert!(model_spec(&neg_c).is_err());
    }

    #[test]
    fn grouping_keeps_every_record() {
        let rec = |object: &str, label| DatasetRecord {
            object: object.into(),
            u: 0.1,
            v: 0.2,
            label,
            subject: 0,
            trial: 0,
            t: 0.0,
        };
        let g = group_by_object(&[
            rec("tv", TaskClass::Interactive),
            rec("chair", TaskClass::NonInteractive),
            rec("tv", TaskClass::NonInteractive),
        ]);
        assert_eq!(g.keys().collect::<Vec<_>>(), ["chair", "tv"]);
        assert_eq!(g["tv"].len(), 2);
        assert_eq!(g["tv"][1].label, TaskClass::NonInteractive);
    }

    #[test]
    fn labels_must_be_safe_file_names() {
        assert!(check_label("tv").is_ok());
        assert!(check_label("coffee_table-2").is_ok());
        for bad in ["", "../x", "a b", "a/b"] {
            assert!(check_label(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_name_the_command() {
        let cmd = Command::Pack(PackArgs { seeds: 3, out: "p".into() });
        assert_eq!(flags_of(&cmd), json!({ "command": "pack", "seeds": 3, "out": "p" }));
    }

    #[test]
    fn model_dir_round_trip_and_conflicts() {
        let dir = tempfile::tempdir().unwrap();
        let models = default_models(0).unwrap();
        assert_eq!(models.len(), 3);
        for (object, m) in &models {
            save_model(&dir.path().join(format!("{object}.json")), object, m, &Value::Null).unwrap();
        }
        let loaded = load_models_dir(dir.path()).unwrap();
        assert_eq!(loaded.keys().collect::<Vec<_>>(), models.keys().collect::<Vec<_>>());
        save_model(&dir.path().join("copy.json"), "tv", &models["tv"], &Value::Null).unwrap();
        assert_eq!(load_models_dir(dir.path()).unwrap_err().kind, "model_file");
        assert_eq!(resolve_models(Some(dir.path()), Some(1)).unwrap_err().kind, "usage");
    }
}
