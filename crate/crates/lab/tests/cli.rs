//! End-to-end runs of every subcommand at tiny scale, in process, plus exit
//! code checks on the compiled binary.

use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use clap::Parser;
use malgan_lab::runner::{run, Cli};
use malgan_lab::{dataset_csv, manifest::Manifest, report};

/// Runs one invocation in process with the shared tiny-scale knobs.
fn lab(out: &Path, args: &[&str]) -> malgan_lab::Result<()> {
    let mut full = vec![
        "malgan-lab",
        "--out",
        out.to_str().unwrap(),
        "--n",
        "400",
        "--epochs",
        "2",
        "--batch-size",
        "32",
        "--hidden-width",
        "16",
        "--detectors",
        "DT",
        "--variants",
        "Mal-D2GAN",
        "--rounds",
        "2",
        "--retrain-epochs",
        "1",
    ];
    full.extend_from_slice(args);
    run(&Cli::try_parse_from(full).expect("test arguments parse"))
}

fn fixture(rel: &str) -> String {
    format!("{}/fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn pipeline_runs_end_to_end_at_tiny_scale() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    lab(out, &["synth-data"]).unwrap();
    let dataset = dataset_csv::load_dataset(&out.join("dataset.csv")).unwrap();
    assert_eq!(dataset.len(), 400);
    assert_eq!(dataset.num_features(), 160);
    let manifest = Manifest::load(&out.join("synth-data/manifest.json")).unwrap();
    assert_eq!(manifest.subcommand, "synth-data");
    assert_eq!(manifest.seed, 42);

    lab(out, &["train-blackbox"]).unwrap();
    assert!(out.join("train-blackbox/DT.bin").is_file());

    lab(out, &["train-gan"]).unwrap();
    assert!(out.join("train-gan/Mal-D2GAN_DT.bin").is_file());
    // Row 0 is the untouched baseline, then one row per epoch.
    let stats = report::load_train_stats(&out.join("train-gan/stats/Mal-D2GAN_DT.csv")).unwrap();
    assert_eq!(stats.len(), 3);
    assert_eq!(stats[0].epoch, 0);
    assert_eq!(stats[2].epoch, 2);

    lab(out, &["evaluate"]).unwrap();
    let rows = report::load_attack_csv(&out.join("evaluate/attack_report.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    // Path columns resolve relative to the report's directory.
    for rel in [&row.stats_csv, &row.detector_model, &row.gan_checkpoint] {
        assert!(out.join("evaluate").join(rel).is_file(), "{rel} missing");
    }
    assert!(out.join("evaluate/attack_report.md").is_file());

    lab(out, &["retrain-defense"]).unwrap();
    let defense = report::load_retrain_csv(&out.join("retrain-defense/retrain_report.csv")).unwrap();
    assert_eq!(defense.len(), 1);
    assert_eq!(defense[0].rounds, 2);
    for rel in [&defense[0].detector_model, &defense[0].gan_checkpoint] {
        assert!(out.join("retrain-defense").join(rel).is_file(), "{rel} missing");
    }

    lab(out, &["gradcheck", "--seeds", "2"]).unwrap();
    let text = fs::read_to_string(out.join("gradcheck/report.txt")).unwrap();
    assert!(text.contains("12 checks across 2 seeds"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn evaluate_reports_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    lab(out, &["synth-data"]).unwrap();
    lab(out, &["evaluate"]).unwrap();
    let csv_a = fs::read(out.join("evaluate/attack_report.csv")).unwrap();
    let md_a = fs::read(out.join("evaluate/attack_report.md")).unwrap();
    let manifest_a = fs::read(out.join("evaluate/manifest.json")).unwrap();
    lab(out, &["evaluate"]).unwrap();
    assert_eq!(fs::read(out.join("evaluate/attack_report.csv")).unwrap(), csv_a);
    assert_eq!(fs::read(out.join("evaluate/attack_report.md")).unwrap(), md_a);
    assert_eq!(fs::read(out.join("evaluate/manifest.json")).unwrap(), manifest_a);
}

#[test]
fn missing_prerequisites_name_the_producing_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    let err = lab(out, &["evaluate"]).unwrap_err();
    assert!(err.to_string().contains("synth-data"), "{err}");

    lab(out, &["synth-data"]).unwrap();
    let err = lab(out, &["train-gan"]).unwrap_err();
    assert!(err.to_string().contains("train-blackbox"), "{err}");
}

#[test]
fn featurize_and_select_features_produce_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();

    lab(
        out,
        &[
            "featurize",
            "--reports",
            &fixture("cuckoo"),
            "--vocab",
            &fixture("vocab.txt"),
        ],
    )
    .unwrap();
    let featurized = dataset_csv::load_dataset(&out.join("featurize/dataset.csv")).unwrap();
    assert_eq!(featurized.len(), 3);
    assert_eq!(featurized.num_features(), 160);
    assert_eq!(featurized.count_label(1), 2);

    lab(out, &["synth-data"]).unwrap();
    lab(out, &["select-features", "--k", "10"]).unwrap();
    let reduced = dataset_csv::load_dataset(&out.join("select-features/dataset.csv")).unwrap();
    assert_eq!(reduced.num_features(), 10);
    assert_eq!(reduced.len(), 400);
    let kept = fs::read_to_string(out.join("select-features/kept_features.txt")).unwrap();
    assert_eq!(kept.lines().count(), 10);
}

#[test]
fn binary_reports_documented_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_malgan-lab");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let help = Proc::new(exe).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));

    let bad = Proc::new(exe)
        .args(["synth-data", "--out", out, "--alpha", "1.5"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alpha"));

    let missing = Proc::new(exe)
        .args(["evaluate", "--out", out])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("synth-data"));

    let ok = Proc::new(exe)
        .args(["synth-data", "--out", out, "--n", "50"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
}
