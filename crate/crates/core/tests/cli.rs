mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::*;
use subspace_rto::cli::*;
use subspace_rto::problems::{preset, Problem, PRESETS};
use subspace_rto::Error;

fn write_config(dir: &Path, body: &str) -> RunConfig {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    RunConfig::from_file(&path).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn scalar_problem_from_files_recovers_the_posterior_mean() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "1 1 dense\n2.0\n").unwrap();
    fs::write(dir.path().join("b.txt"), "3.0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\noperator = \"a.txt\"\ndata = \"b.txt\"\n[sampling]\nsamples = 20000\nseed = 3\n[output]\ndir = \"out\"\n",
    );
    let report = run(&cfg).unwrap();
    assert_eq!(report.output_dir, dir.path().join("out"));
    // posterior of b = 2x + e, x ~ N(0, 1): mean 6/5, variance 1/5
    let rows = csv_rows(&dir.path().join("out/summary.csv"));
    assert_eq!(rows[0], ["coordinate", "mean", "std", "q25", "q50", "q75"]);
    let mean: f64 = rows[1][1].parse().unwrap();
    let std: f64 = rows[1][2].parse().unwrap();
    assert!((mean - 1.2).abs() < 4.0 * (0.2f64 / 20000.0).sqrt(), "mean {mean}");
    assert!((std - 0.2f64.sqrt()).abs() < 0.01, "std {std}");
    for name in ["samples.csv", "summary.csv", "stats.csv", "manifest.toml"] {
        assert!(dir.path().join("out").join(name).exists(), "{name} missing");
    }
}

#[test]
fn desk_run_output_shape_and_bitwise_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\npreset = \"crossborehole-desk\"\n[sampling]\nsamples = 1000\nseed = 1\n",
    );
    run(&cfg).unwrap();
    let out = dir.path().join("output");
    let first = fs::read(out.join("samples.csv")).unwrap();
    let rows = csv_rows(&out.join("samples.csv"));
    assert_eq!(rows.len(), 1001);
    assert_eq!(rows[0].len(), 800);
    assert_eq!(rows[0][0], "x0");
    assert!(rows[1..].iter().all(|r| r.len() == 800));
    // 17 significant digits round-trip exactly
    let v: f64 = rows[1][0].parse().unwrap();
    assert_eq!(format!("{v:.16e}").parse::<f64>().unwrap(), v);

    let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml")).unwrap().parse().unwrap();
    let run_section = manifest["run"].as_table().unwrap();
    assert_eq!(run_section["seed"].as_integer(), Some(1));
    assert_eq!(run_section["samples"].as_integer(), Some(1000));
    assert_eq!(run_section["config_sha256"].as_str().unwrap(), cfg.config_hash);

    run(&cfg).unwrap();
    assert_eq!(fs::read(out.join("samples.csv")).unwrap(), first);
}

#[test]
fn bench_refuses_square_operators() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "2 2 dense\n1\n0\n0\n1\n").unwrap();
    fs::write(dir.path().join("b.txt"), "1\n1\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\noperator = \"a.txt\"\ndata = \"b.txt\"\n[benchmark]\nsizes = [10]\n",
    );
    match benchmark(&cfg) {
        Err(Error::InvalidArgument(msg)) => assert!(msg.contains("m < n"), "{msg}"),
        other => panic!("expected a refusal, got {other:?}"),
    }
}

#[test]
fn bench_writes_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = rng(2);
    let a = random_matrix(&mut g, 3, 9);
    let mut text = String::from("3 9 dense\n");
    for v in a.as_slice() {
        text.push_str(&format!("{v:e}\n"));
    }
    fs::write(dir.path().join("a.txt"), text).unwrap();
    fs::write(dir.path().join("b.txt"), "1\n-1\n0.5\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\noperator = \"a.txt\"\ndata = \"b.txt\"\n[benchmark]\nsizes = [5, 20]\n",
    );
    let rows = benchmark(&cfg).unwrap();
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), [5, 20]);
    let csv = csv_rows(&dir.path().join("output/benchmark.csv"));
    assert_eq!(csv[0], ["k", "t_normal", "t_adjoint", "ratio_percent"]);
    assert_eq!(csv.len(), 3);
}

#[test]
fn unknown_keys_suggest_the_nearest_valid_key() {
    let err = RunConfig::parse("[problem]\npreset = \"crossborehole-desk\"\n[sampling]\nsamles = 10\n", Path::new("."))
        .unwrap_err();
    assert!(err.to_string().contains("did you mean `sampling.samples`"), "{err}");
    let err = RunConfig::parse("[sampling]\nseed = 1\n[problm]\n", Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("did you mean `[problem]`"), "{err}");
    let err = RunConfig::parse("[problem]\npreset = \"crossborehole-dsk\"\n", Path::new(".")).unwrap_err();
    assert!(err.to_string().contains("crossborehole-desk"), "{err}");
}

#[test]
fn invalid_values_are_config_errors() {
    for text in [
        "[problem]\npreset = \"blocks-meg-toy\"\n[sampling]\nsamples = 0\n",
        "[problem]\npreset = \"blocks-meg-toy\"\n[sampling]\nstrategy = \"sideways\"\n",
        "[problem]\npreset = \"blocks-meg-toy\"\n[pcn]\nh = 1.5\n",
        "[sampling]\nseed = 1\n",
    ] {
        assert!(matches!(RunConfig::parse(text, Path::new(".")), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn every_registered_preset_builds() {
    for name in PRESETS {
        let cfg = RunConfig::parse(&format!("[problem]\npreset = \"{name}\"\n"), Path::new(".")).unwrap();
        assert!(matches!(cfg.problem, ProblemSpec::Preset { .. }));
        if name != "crossborehole-paper" {
            let p = preset(name, 0).unwrap();
            assert_eq!(matches!(p, Problem::Blocks(_)), name == "blocks-meg-toy");
        }
    }
}

#[test]
fn schema_lists_sections_presets_and_environment() {
    let s = config_schema();
    for (section, keys) in SCHEMA {
        assert!(s.contains(&format!("[{section}]")));
        for k in *keys {
            assert!(s.contains(k.name), "{section}.{} missing", k.name);
        }
    }
    for p in PRESETS {
        assert!(s.contains(p));
    }
    assert!(s.contains(ENV_OUTPUT_DIR) && s.contains(ENV_WORKERS));
}

#[test]
fn overrides_replace_output_dir_and_workers() {
    let mut cfg = RunConfig::parse("[problem]\npreset = \"blocks-meg-toy\"\n", Path::new("/tmp")).unwrap();
    assert_eq!(cfg.output_dir, Path::new("/tmp/output"));
    cfg.apply_overrides(Some("/elsewhere"), Some("3")).unwrap();
    assert_eq!(cfg.output_dir, Path::new("/elsewhere"));
    assert_eq!(cfg.sampling.workers, Some(3));
    assert!(cfg.apply_overrides(None, Some("0")).is_err());
    assert!(cfg.apply_overrides(None, Some("many")).is_err());
}

#[test]
fn quantiles_interpolate_linearly() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(quantile(&xs, 0.0), 1.0);
    assert_eq!(quantile(&xs, 1.0), 4.0);
    assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-15);
    assert!((quantile(&xs, 0.25) - 1.75).abs() < 1e-15);
}

const BIN: &str = env!("CARGO_BIN_EXE_subspace-rto");

#[test]
fn binary_without_arguments_prints_usage() {
    let out = Command::new(BIN).output().unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn binary_schema_and_env_output_dir() {
    let out = Command::new(BIN).arg("schema").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[sampling]"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("blocks.toml");
    fs::write(&cfg, "[problem]\npreset = \"blocks-meg-toy\"\n[hierarchical]\nmethod = \"ias\"\n").unwrap();
    let target = dir.path().join("elsewhere");
    let out = Command::new(BIN)
        .args(["run", cfg.to_str().unwrap()])
        .env(ENV_OUTPUT_DIR, &target)
        .env(ENV_WORKERS, "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("map_theta.csv").exists());
    let manifest = fs::read_to_string(target.join("manifest.toml")).unwrap();
    assert!(manifest.contains("workers = 2"), "{manifest}");

    let out = Command::new(BIN).args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
