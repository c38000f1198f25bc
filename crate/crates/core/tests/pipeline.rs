mod common;

use std::fs;

use eeg_audio::cli::{run_pipeline, Method, ReportBundle, Scenario, SUMMARY_FILE};
use eeg_audio::dataset::io::{read_json, save_corpus};
use eeg_audio::cli::prepare_corpus;
use eeg_audio::retrieval::RetrievalReport;

fn strip_times(mut b: ReportBundle) -> ReportBundle {
    b.metadata.started_unix = 0;
    b.metadata.finished_unix = 0;
    b
}

#[test]
fn run_writes_every_listed_file() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run_pipeline(&common::small_config(dir.path())).unwrap();
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let mut listed = bundle.files.clone();
    listed.sort();
    assert_eq!(on_disk, listed);
    for f in &listed {
        assert!(fs::metadata(dir.path().join(f)).unwrap().len() > 0, "{f} is empty");
    }
    for s in [Scenario::Audio, Scenario::Eeg, Scenario::Fused] {
        assert!(listed.contains(&format!("confusion_{}.csv", s.as_str())));
    }
    let saved: ReportBundle = read_json(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(saved, bundle);
    saved.check_complete().unwrap();
}

#[test]
fn retrieval_csv_parses_back_to_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run_pipeline(&common::small_config(dir.path())).unwrap();
    for m in Method::ALL {
        let text = fs::read_to_string(dir.path().join(format!("retrieval_{}.csv", m.as_str()))).unwrap();
        let rows = RetrievalReport::parse_csv(&text).unwrap();
        let report = bundle.method(m).unwrap();
        assert_eq!(rows.len(), report.ks().len());
        for (k, mm, ms, pm, ps) in rows {
            let r = report.row(k).unwrap();
            assert_eq!((mm, ms, pm, ps), (r.mrr1_mean(), r.mrr1_std(), r.map_mean(), r.map_std()));
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = strip_times(run_pipeline(&common::small_config(a.path())).unwrap());
    let rb = strip_times(run_pipeline(&common::small_config(b.path())).unwrap());
    assert_eq!(ra, rb);
    for f in &ra.files {
        if f != SUMMARY_FILE {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn saved_features_reproduce_the_generated_run() {
    let gen_dir = tempfile::tempdir().unwrap();
    let cfg = common::small_config(gen_dir.path());
    let generated = strip_times(run_pipeline(&cfg).unwrap());

    let feats = tempfile::tempdir().unwrap();
    save_corpus(feats.path(), &prepare_corpus(&cfg).unwrap()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut loaded_cfg = common::small_config(out.path());
    loaded_cfg.features_dir = Some(feats.path().to_path_buf());
    let loaded = strip_times(run_pipeline(&loaded_cfg).unwrap());
    assert_eq!(generated.scenarios, loaded.scenarios);
    assert_eq!(generated.retrieval, loaded.retrieval);
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let cfg = common::small_config(&blocker.join("out"));
    assert!(run_pipeline(&cfg).is_err());
}

#[test]
fn oversized_k_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::small_config(dir.path());
    cfg.correlation.ks = vec![2, 50];
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}
