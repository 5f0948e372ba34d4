use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use protrans_core::learn::ConfusionMatrix;
use protrans_core::waveform::{write_csv, RecordKind, SamplingSpec, ThreePhaseRecord};

fn protrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_protrans")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// A 12-class corpus of `per_class` records per class, written under `dir/corpus`.
fn corpus(dir: &Path, per_class: usize) -> PathBuf {
    let cfg = write_config(dir, "gen.json", &json!({"seed": 3, "gen": {"n_cycles": 6, "per_class": per_class, "snr_db": 40.0}}));
    let out = dir.join("corpus");
    ok(&protrans(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    out.join("corpus.csv")
}

#[test]
fn gen_prints_counts_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({"seed": 9, "gen": {"n_cycles": 6, "per_class": 2}}));
    let run = |sub: &str| {
        let out = tmp.path().join(sub);
        let stdout = ok(&protrans(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
        (stdout, fs::read(out.join("corpus.csv")).unwrap(), read_json(&out.join("gen_report.json")))
    };
    let (stdout, a, report) = run("a");
    assert!(stdout.contains("magnetizing_inrush\t2"), "{stdout}");
    assert!(stdout.contains("total\t24"));
    assert_eq!(report["schema"], "report_v1");
    assert_eq!(report["records"], 24);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    let (_, b, _) = run("b");
    assert_eq!(a, b);

    // a different seed changes both the corpus and the config hash
    let out = tmp.path().join("c");
    ok(&protrans(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "10"]));
    assert_ne!(fs::read(out.join("corpus.csv")).unwrap(), a);
    assert_ne!(read_json(&out.join("gen_report.json"))["config_sha256"], report["config_sha256"]);
}

#[test]
fn empty_scenario_list_writes_header_only() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({"gen": {"n_cycles": 6, "scenarios": []}}));
    let out = tmp.path().join("o");
    ok(&protrans(&["gen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(fs::read_to_string(out.join("corpus.csv")).unwrap(), "t,pa,pb,pc,label\n");
    assert_eq!(read_json(&out.join("gen_report.json"))["records"], 0);
}

#[test]
fn train_eval_classify_round_trip() {
    let tmp = TempDir::new().unwrap();
    let data = corpus(tmp.path(), 12);
    let out = tmp.path().join("run");
    let cfg = write_config(
        tmp.path(),
        "train.json",
        &json!({
            "seed": 1,
            "data": {"corpus": data},
            "cascade": {"preset": "three_stage", "trainer": {"family": "decision_tree"}, "cv_folds": 3},
            "model": out.join("model.json"),
            "out": out,
            "jobs": 2,
        }),
    );
    let c = cfg.to_str().unwrap();
    let stdout = ok(&protrans(&["train", "--config", c]));
    assert_eq!(stdout.lines().count(), 3, "{stdout}");
    let train = read_json(&out.join("train_report.json"));
    assert_eq!(train["stages"].as_array().unwrap().len(), 3);
    assert!(train["stages"][0]["cv_balanced_accuracy"].as_f64().unwrap() > 0.5);
    assert!(train["wall_time_s"].as_f64().unwrap() >= 0.0);

    // an unpruned tree memorizes its training set
    ok(&protrans(&["eval", "--config", c]));
    let ev = read_json(&out.join("eval_report.json"));
    for s in ev["stages"].as_array().unwrap() {
        let cm: ConfusionMatrix = serde_json::from_value(s["confusion"].clone()).unwrap();
        let ba = s["balanced_accuracy"].as_f64().unwrap();
        assert_eq!(ba, 1.0, "{}", s["name"]);
        assert!((cm.balanced_accuracy().unwrap() - ba).abs() < 1e-12);
    }
    assert!(out.join("confusion_detect.csv").exists());

    let stdout = ok(&protrans(&["classify", "--config", c, "--jobs", "3"]));
    let lines: Vec<Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 144);
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["record"], i);
    }
    assert_eq!(fs::read_to_string(out.join("decisions.jsonl")).unwrap(), stdout);
    // ordering and content do not depend on the worker count
    assert_eq!(ok(&protrans(&["classify", "--config", c, "--jobs", "1"])), stdout);

    // a steady sinusoid never triggers
    let spec = SamplingSpec::new(10_000.0, 60.0).unwrap();
    let w = 2.0 * std::f64::consts::PI * 60.0 / 10_000.0;
    let phases = [0.0, 2.0944, 4.18879].map(|ph: f64| (0..1002).map(|i| (w * i as f64 + ph).sin()).collect::<Vec<_>>());
    let steady = ThreePhaseRecord::new(phases, RecordKind::Current, spec).unwrap();
    let steady_csv = tmp.path().join("steady.csv");
    write_csv(&[steady], &steady_csv).unwrap();
    let stdout = ok(&protrans(&["classify", "--config", c, "--set", &format!("data.corpus={}", steady_csv.display())]));
    let d: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(d["verdict"], "no_event");

    // features for the same corpus
    let fcfg = write_config(
        tmp.path(),
        "features.json",
        &json!({"data": {"corpus": data}, "features": {"set": {"set": "td5", "change_quantile_bounds": [[0.4, 0.8]]}}, "out": tmp.path().join("feat")}),
    );
    ok(&protrans(&["features", "--config", fcfg.to_str().unwrap()]));
    let text = fs::read_to_string(tmp.path().join("feat/features.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("record,label,"));
    assert_eq!(header.split(',').count(), 2 + 15);

    // exit code 4 for a model whose stage width was tampered with, naming the stage
    let mut model = read_json(&out.join("model.json"));
    model["stages"][0]["feature_names"].as_array_mut().unwrap().pop();
    let bad = tmp.path().join("bad_model.json");
    fs::write(&bad, model.to_string()).unwrap();
    let o = protrans(&["eval", "--config", c, "--set", &format!("model={}", bad.display())]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage detect"));

    let mut model = read_json(&out.join("model.json"));
    model["version"] = json!("cascade_v0");
    fs::write(&bad, model.to_string()).unwrap();
    let o = protrans(&["classify", "--config", c, "--set", &format!("model={}", bad.display())]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("version"));
}

#[test]
fn exit_codes_for_config_and_data_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let o = tmp.path().to_str().unwrap();

    let bad = write_config(tmp.path(), "typo.json", &json!({"sede": 1}));
    assert_eq!(protrans(&["gen", "--config", bad.to_str().unwrap(), "--out", o]).status.code(), Some(2));

    let both = write_config(tmp.path(), "both.json", &json!({"gen": {"n_cycles": 6, "per_class": 1, "scenarios": []}}));
    assert_eq!(protrans(&["gen", "--config", both.to_str().unwrap(), "--out", o]).status.code(), Some(2));

    assert_eq!(protrans(&["gen", "--set", "gen.n_cycles=6"]).status.code(), Some(2));

    let missing = write_config(
        tmp.path(),
        "missing.json",
        &json!({"data": {"corpus": tmp.path().join("nope.csv")}, "cascade": {"preset": "three_stage"}, "out": out}),
    );
    assert_eq!(protrans(&["train", "--config", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn shipped_schema_covers_every_config_key() {
    let schema = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run_config.schema.json"));
    let props = schema["properties"].as_object().unwrap();
    let keys: Vec<&str> = props.keys().map(String::as_str).collect();
    for k in ["seed", "sampling", "out", "jobs", "gen", "data", "features", "cascade", "model", "relay"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert_eq!(keys.len(), 10);
    assert_eq!(schema["additionalProperties"], false);
}
