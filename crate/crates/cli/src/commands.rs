use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use protrans_core::detector::{capture_at, cdf_scan, ed_scan};
use protrans_core::relay::{
    build_cascade, build_swing_cascade, classify_event, classify_swing, stage_features, CascadeModel, DetectorKind,
    RelayDecision, StageKind, StageSpec,
};
use protrans_core::txmodel::{
    derive_seed, generate_corpus, generate_swing_corpus, synthesize, synthesize_swing_pair, CorpusSpec,
};
use protrans_core::waveform::{read_csv, write_csv, Category, ThreePhaseRecord, TransientLabel};

use crate::config::{Family, Loaded, RunConfig};
use crate::exit::CliError;

pub const REPORT_SCHEMA: &str = "report_v1";

type Pair = (ThreePhaseRecord, ThreePhaseRecord);

fn out_dir(c: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = c
        .out
        .clone()
        .ok_or_else(|| CliError::config("an output directory is required (`out` or --out)"))?;
    fs::create_dir_all(&dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Writes `<dir>/<name>` as a `report_v1` envelope around `body`.
fn write_report(dir: &Path, name: &str, command: &str, l: &Loaded, body: Value) -> Result<(), CliError> {
    let mut obj = Map::new();
    obj.insert("schema".into(), REPORT_SCHEMA.into());
    obj.insert("command".into(), command.into());
    obj.insert("config_sha256".into(), l.sha256.clone().into());
    obj.insert("seed".into(), l.config.seed.into());
    if let Value::Object(b) = body {
        obj.extend(b);
    }
    write_json(&dir.join(name), &Value::Object(obj))
}

/// Corpus class of a label: category, plus the unit for internal faults
/// and stability/symmetry for swings.
fn class_key(label: Option<TransientLabel>) -> String {
    let Some(l) = label else { return "unlabelled".into() };
    let cat = l.category();
    match (cat, l.fault_detail().and_then(|d| d.unit), l.swing_detail()) {
        (Category::InternalFault, Some(u), _) => format!("{}/{}", cat.as_str(), u.as_str()),
        (_, _, Some(s)) => format!("{}/{}/{}", cat.as_str(), s.stability.as_str(), s.symmetry.as_str()),
        _ => cat.as_str().to_string(),
    }
}

fn counts<'a>(labels: impl Iterator<Item = Option<TransientLabel>> + 'a) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for l in labels {
        *m.entry(class_key(l)).or_insert(0) += 1;
    }
    m
}

fn write_records(records: &[ThreePhaseRecord], path: &Path) -> Result<(), CliError> {
    write_csv(records, path).map_err(CliError::data)
}

pub fn gen(l: &Loaded) -> Result<(), CliError> {
    let c = &l.config;
    let g = c.gen.as_ref().ok_or_else(|| CliError::config("gen: the `gen` section is required"))?;
    let dir = out_dir(c)?;
    let spec = c.sampling;
    let noisy = |r: ThreePhaseRecord, seed: u64| match g.snr_db {
        Some(snr) => r.add_noise(snr, seed),
        None => Ok(r),
    };
    let (current, voltage): (Vec<ThreePhaseRecord>, Option<Vec<ThreePhaseRecord>>) = match (g.family, g.per_class, &g.scenarios) {
        (Family::Differential, Some(per_class), _) => {
            let cs = CorpusSpec { per_class, n_cycles: g.n_cycles, snr_db: g.snr_db, seed: c.seed };
            (generate_corpus(&spec, &cs).map_err(CliError::config)?, None)
        }
        (Family::Swing, Some(per_class), _) => {
            let cs = CorpusSpec { per_class, n_cycles: g.n_cycles, snr_db: g.snr_db, seed: c.seed };
            let pairs = generate_swing_corpus(&spec, &cs).map_err(CliError::config)?;
            let (v, i): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            (i, Some(v))
        }
        (family, None, Some(list)) => {
            let made: Vec<Pair> = list
                .par_iter()
                .enumerate()
                .map(|(k, sc)| {
                    let seed = derive_seed(c.seed, k as u64, 0);
                    let (v, i) = match family {
                        Family::Differential => {
                            let i = synthesize(sc, &spec, g.n_cycles)?;
                            (i.clone(), i)
                        }
                        Family::Swing => synthesize_swing_pair(sc, &spec, g.n_cycles)?,
                    };
                    Ok((noisy(v, derive_seed(seed, 2, 0))?, noisy(i, derive_seed(seed, 1, 0))?))
                })
                .collect::<protrans_core::Result<_>>()
                .map_err(|e| CliError::config(format!("gen: invalid scenario: {e}")))?;
            let (v, i): (Vec<_>, Vec<_>) = made.into_iter().unzip();
            (i, (family == Family::Swing).then_some(v))
        }
        (_, None, None) => unreachable!("validated"),
    };

    write_records(&current, &dir.join("corpus.csv"))?;
    let mut files = vec!["corpus.csv"];
    if let Some(v) = &voltage {
        write_records(v, &dir.join("voltage.csv"))?;
        files.push("voltage.csv");
    }
    let per_class = counts(current.iter().map(|r| r.label()));
    for (k, n) in &per_class {
        println!("{k}\t{n}");
    }
    println!("total\t{}", current.len());
    write_report(
        &dir,
        "gen_report.json",
        "gen",
        l,
        json!({"records": current.len(), "counts": per_class, "files": files}),
    )
}

fn load_records(path: &Path) -> Result<Vec<ThreePhaseRecord>, CliError> {
    read_csv(path).map_err(CliError::data)
}

/// Current records and, when configured, the aligned voltage records.
fn load_data(c: &RunConfig) -> Result<(Vec<ThreePhaseRecord>, Option<Vec<ThreePhaseRecord>>), CliError> {
    let d = c.data.as_ref().ok_or_else(|| CliError::config("the `data` section is required"))?;
    let current = load_records(&d.corpus)?;
    let voltage = match &d.voltage {
        Some(p) => {
            let v = load_records(p)?;
            if v.len() != current.len() {
                return Err(CliError::data(format!(
                    "{} voltage records for {} current records",
                    v.len(),
                    current.len()
                )));
            }
            Some(v)
        }
        None => None,
    };
    Ok((current, voltage))
}

fn pairs(current: Vec<ThreePhaseRecord>, voltage: Option<Vec<ThreePhaseRecord>>) -> Result<Vec<Pair>, CliError> {
    let v = voltage.ok_or_else(|| CliError::config("the swing pipeline needs `data.voltage`"))?;
    Ok(v.into_iter().zip(current).collect())
}

pub fn features(l: &Loaded) -> Result<(), CliError> {
    let c = &l.config;
    let f = c.features.as_ref().ok_or_else(|| CliError::config("features: the `features` section is required"))?;
    let dir = out_dir(c)?;
    let (current, voltage) = load_data(c)?;
    let spec = StageSpec::new("features", StageKind::Detect, f.set.clone(), f.detector.pre_cycles, f.detector.post_cycles);
    let rows: Vec<Option<(Vec<String>, Vec<f64>)>> = current
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let det = match f.detector_kind {
                DetectorKind::Ed => ed_scan(rec, &f.detector),
                DetectorKind::Cdf => cdf_scan(rec, &f.detector),
            }?;
            let Some(t) = det.trigger_index else { return Ok(None) };
            let fv = stage_features(&spec, rec, voltage.as_ref().map(|v| &v[i]), t)?;
            Ok(Some((fv.names, fv.values)))
        })
        .collect::<protrans_core::Result<_>>()
        .map_err(CliError::from_core)?;

    let path = dir.join("features.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let names = rows.iter().flatten().next().map(|(n, _)| n.clone()).unwrap_or_default();
    let mut header = vec!["record".to_string(), "label".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let mut untriggered = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match row {
            Some((_, values)) => {
                let mut rec = vec![i.to_string(), current[i].label().map(|l| l.to_string()).unwrap_or_default()];
                rec.extend(values.iter().map(f64::to_string));
                w.write_record(&rec).map_err(csv_err)?;
            }
            None => untriggered.push(i),
        }
    }
    w.flush().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    println!("{} of {} records triggered, {} features", current.len() - untriggered.len(), current.len(), names.len());
    write_report(
        &dir,
        "features_report.json",
        "features",
        l,
        json!({
            "records": current.len(),
            "triggered": current.len() - untriggered.len(),
            "untriggered_records": untriggered,
            "feature_names": names,
        }),
    )
}

fn is_swing(m: &protrans_core::relay::CascadeConfig) -> bool {
    m.stages
        .iter()
        .any(|s| matches!(s.kind, StageKind::SwingEvent | StageKind::SwingStability | StageKind::SwingSymmetry))
}

pub fn train(l: &Loaded) -> Result<(), CliError> {
    let c = &l.config;
    let section = c.cascade.as_ref().ok_or_else(|| CliError::config("train: the `cascade` section is required"))?;
    let cfg = section.resolve(c.seed)?;
    let dir = out_dir(c)?;
    let (current, voltage) = load_data(c)?;
    let start = Instant::now();
    let model = if is_swing(&cfg) {
        build_swing_cascade(&pairs(current, voltage)?, &cfg)
    } else {
        build_cascade(&current, &cfg)
    }
    .map_err(CliError::from_core)?;
    let wall = start.elapsed().as_secs_f64();
    model.save(&dir.join("model.json")).map_err(CliError::data)?;
    let stages: Vec<Value> = model
        .stages
        .iter()
        .map(|s| {
            println!(
                "{}\tcv balanced accuracy {}",
                s.spec.name,
                s.cv_score.map_or("n/a".to_string(), |v| format!("{v:.4}"))
            );
            json!({
                "name": s.spec.name,
                "cv_balanced_accuracy": s.cv_score,
                "class_names": s.model.class_names,
                "class_counts": s.class_counts,
                "n_features": s.model.n_features,
            })
        })
        .collect();
    write_report(
        &dir,
        "train_report.json",
        "train",
        l,
        json!({"stages": stages, "untriggered": model.untriggered, "wall_time_s": wall, "model": "model.json"}),
    )
}

fn load_model(c: &RunConfig) -> Result<CascadeModel, CliError> {
    let path = c.model.as_ref().ok_or_else(|| CliError::config("a `model` path is required"))?;
    CascadeModel::load(path).map_err(|e| CliError::model(format!("{}: {e}", path.display())))
}

fn file_stem(stage: &str) -> String {
    stage.replace(['/', '\\'], "_")
}

pub fn eval(l: &Loaded) -> Result<(), CliError> {
    let c = &l.config;
    let model = load_model(c)?;
    let dir = out_dir(c)?;
    let (current, voltage) = load_data(c)?;
    let ev = if is_swing(&model.config) {
        model.evaluate_swing(&pairs(current, voltage)?)
    } else {
        model.evaluate(&current)
    }
    .map_err(CliError::from_core)?;
    for s in &ev.stages {
        println!("{}\tbalanced accuracy {:.4}", s.name, s.balanced_accuracy);
        let path = dir.join(format!("confusion_{}.csv", file_stem(&s.name)));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let csv_err = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
        let mut header = vec!["truth".to_string()];
        header.extend(s.class_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (name, row) in s.class_names.iter().zip(&s.confusion.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    }
    let body = serde_json::to_value(&ev).expect("evaluation serializes");
    write_report(&dir, "eval_report.json", "eval", l, body)
}

pub fn classify(l: &Loaded) -> Result<(), CliError> {
    let c = &l.config;
    let model = load_model(c)?;
    let dir = out_dir(c)?;
    let (current, voltage) = load_data(c)?;
    let swing = is_swing(&model.config);
    if swing && voltage.is_none() {
        return Err(CliError::config("the swing pipeline needs `data.voltage`"));
    }
    let det = model.config.effective_detector();
    let decide = |i: usize| -> protrans_core::Result<RelayDecision> {
        let mut d = match &voltage {
            Some(v) if swing => classify_swing(&model, &v[i], &current[i])?,
            _ => classify_event(&model, &current[i])?,
        };
        if let (Some(ar), Some(t)) = (&c.relay, d.trigger_index) {
            let cap = capture_at(&current[i], t, det.pre_cycles, det.post_cycles)?;
            d.annotate_ar(&cap, ar)?;
        }
        Ok(d)
    };
    // parallel evaluation, output in input order
    let results: Vec<protrans_core::Result<RelayDecision>> = (0..current.len()).into_par_iter().map(decide).collect();

    let path = dir.join("decisions.jsonl");
    let file = fs::File::create(&path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut file = BufWriter::new(file);
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    let mut first_err = None;
    for (i, r) in results.into_iter().enumerate() {
        let line = match r {
            Ok(d) => {
                let mut v = serde_json::to_value(&d).expect("decision serializes");
                v.as_object_mut().expect("object").insert("record".into(), i.into());
                v
            }
            Err(e) => {
                let line = json!({"record": i, "error": e.to_string()});
                first_err.get_or_insert(CliError::from_core(e));
                line
            }
        };
        let text = serde_json::to_string(&line).expect("values serialize");
        writeln!(file, "{text}").map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        // a closed stdout (e.g. piped into head) must not abort the file output
        let _ = writeln!(stdout, "{text}");
    }
    file.flush().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
