use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenic_cli::config::{PipelineConfig, KEYS};
use scenic_core::model::load_model;
use scenic_core::Dataset;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scenic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenic")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = scenic(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const J48_GOLDEN: [&str; 8] = [
    "--learner",
    "j48",
    "--ensemble",
    "none",
    "--k-folds",
    "4",
    "--seed",
    "7",
];

fn run_j48(dir: &TempDir, name: &str, extra: &[&str]) -> (Vec<u8>, String) {
    let report = dir.path().join(name);
    let dataset = fixture("dataset.csv");
    let mut args = vec!["run", "--dataset", path_str(&dataset), "--report", path_str(&report)];
    args.extend(J48_GOLDEN);
    args.extend(extra);
    let stdout = ok(&args);
    (std::fs::read(&report).unwrap(), stdout)
}

#[test]
fn golden_report_for_j48_without_ensemble() {
    let dir = TempDir::new().unwrap();
    let (report, stdout) = run_j48(&dir, "r.json", &[]);
    assert_eq!(report, std::fs::read(fixture("golden_j48_report.json")).unwrap());
    assert!(stdout.contains("J48"));
    assert!(stdout.contains("45.83"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = run_j48(&dir, "a.json", &["--threads", "1"]);
    let b = run_j48(&dir, "b.json", &["--threads", "4"]);
    assert_eq!(a, b);
}

#[test]
fn report_has_documented_fields() {
    let dir = TempDir::new().unwrap();
    let (report, _) = run_j48(&dir, "r.json", &[]);
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    for key in [
        "accuracy",
        "macro_precision",
        "macro_recall",
        "per_class",
        "confusion_matrix",
        "mode",
        "seed",
        "pipeline",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["mode"], "leakage_safe");
    let undefined = v["fold_reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["macro_precision"] == "undefined")
        .count();
    assert!(undefined > 0);
}

#[test]
fn help_documents_every_flag_with_its_default() {
    let help = ok(&["run", "--help"]);
    let defaults = PipelineConfig::default();
    for key in KEYS {
        let flag = format!("--{}", key.replace('_', "-"));
        let line = help
            .lines()
            .find(|l| l.trim_start().starts_with(&format!("{flag} ")))
            .unwrap_or_else(|| panic!("{flag} missing from help"));
        let want = format!("[default: {}]", defaults.get(key).unwrap());
        assert!(line.contains(&want), "{line}");
    }
    for sub in ["ingest", "run", "histogram", "smote", "predict"] {
        let help = ok(&[sub, "--help"]);
        for line in help.lines().filter(|l| l.trim_start().starts_with("--")) {
            if line.contains("--help") {
                continue;
            }
            assert!(
                line.contains("[default:") || line.contains("(required)"),
                "{sub}: {line}"
            );
        }
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(scenic(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(scenic(&[]).status.code(), Some(1));
    let dataset = fixture("dataset.csv");
    let d = path_str(&dataset);
    assert_eq!(
        scenic(&["run", "--dataset", d, "--learner", "svm"]).status.code(),
        Some(1)
    );
    assert_eq!(
        scenic(&["run", "--dataset", d, "--k-folds", "1"]).status.code(),
        Some(1)
    );
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(
        scenic(&["run", "--dataset", d, "--config", path_str(&cfg)])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(scenic(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2_and_leave_no_output() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("photos.csv");
    std::fs::write(&bad, "photo_id,owner_id,latitude,longitude,views,favorites,comments\np1,u1,41.9,12.5,10,1,0\np2,u1,41.9,12.5,-3,1,0\n").unwrap();
    let out = dir.path().join("dataset.csv");
    let locations = fixture("locations.csv");
    let res = scenic(&[
        "ingest",
        "--photos",
        path_str(&bad),
        "--locations",
        path_str(&locations),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("parse photos") && stderr.contains("line 3"), "{stderr}");
    assert!(!out.exists());
    assert_eq!(
        std::fs::read_dir(dir.path()).unwrap().count(),
        1,
        "no temp files left behind"
    );

    let missing = dir.path().join("nope.csv");
    let res = scenic(&["run", "--dataset", path_str(&missing)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("read dataset"));

    let dataset = fixture("dataset.csv");
    let hist = dir.path().join("h.csv");
    let res = scenic(&[
        "histogram",
        "--dataset",
        path_str(&dataset),
        "--bins",
        "0",
        "--out",
        path_str(&hist),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!hist.exists());
}

#[test]
fn ingest_examples() {
    let dir = TempDir::new().unwrap();
    let photos = dir.path().join("p.csv");
    let locations = dir.path().join("l.csv");
    std::fs::write(
        &photos,
        "photo_id,owner_id,latitude,longitude,views,favorites,comments\n\
         p1,u1,41.9028,12.4964,10,1,0\np2,u1,41.9028,12.4965,20,3,2\np3,u2,41.9029,12.4964,30,2,2\n",
    )
    .unwrap();
    std::fs::write(
        &locations,
        "location_id,name,latitude,longitude,rating\nL1,\"Trevi\",41.9028,12.4964,4.5\n",
    )
    .unwrap();
    let out = dir.path().join("d.csv");
    let stdout = ok(&[
        "ingest",
        "--photos",
        path_str(&photos),
        "--locations",
        path_str(&locations),
        "--out",
        path_str(&out),
    ]);
    assert!(stdout.contains("rows: 1"), "{stdout}");
    let ds = Dataset::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(ds.rows[0].values[..4], [3.0, 60.0, 6.0, 4.0]);
    assert_eq!(ds.rows[0].values[9..], [2.0, 2.0]);

    std::fs::write(
        &photos,
        "photo_id,owner_id,latitude,longitude,views,favorites,comments\n",
    )
    .unwrap();
    ok(&[
        "ingest",
        "--photos",
        path_str(&photos),
        "--locations",
        path_str(&locations),
        "--out",
        path_str(&out),
    ]);
    let ds = Dataset::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(ds.rows[0].values, [0.0; 11]);
    ok(&[
        "ingest",
        "--photos",
        path_str(&photos),
        "--locations",
        path_str(&locations),
        "--out",
        path_str(&out),
        "--drop-empty",
    ]);
    let ds = Dataset::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(ds.is_empty());
}

#[test]
fn fixture_dataset_matches_ingest() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.csv");
    let (p, l) = (fixture("photos.csv"), fixture("locations.csv"));
    ok(&[
        "ingest",
        "--photos",
        path_str(&p),
        "--locations",
        path_str(&l),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixture("dataset.csv")).unwrap()
    );
}

fn histogram_rows(bins: usize) -> Vec<(String, String, usize)> {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("h.csv");
    let dataset = fixture("dataset.csv");
    ok(&[
        "histogram",
        "--dataset",
        path_str(&dataset),
        "--bins",
        &bins.to_string(),
        "--out",
        path_str(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("feature,bin_low,bin_high,class,count"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[3].to_string(), f[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn histogram_shape_and_sums() {
    let ds = Dataset::read_csv(std::fs::File::open(fixture("dataset.csv")).unwrap()).unwrap();
    let k = ds.class_set.len();
    let rows = histogram_rows(10);
    assert_eq!(rows.len(), 11 * 10 * k);
    for name in scenic_core::FEATURE_NAMES {
        let total: usize = rows.iter().filter(|r| r.0 == name).map(|r| r.2).sum();
        assert_eq!(total, ds.len(), "{name}");
    }
    let counts = ds.class_counts();
    let one = histogram_rows(1);
    assert_eq!(one.len(), 11 * k);
    for (i, r) in one.iter().enumerate() {
        assert_eq!(r.2, counts[i % k]);
        assert_eq!(r.1, ds.class_set[i % k].to_string());
    }
}

#[test]
fn smote_balances_and_marks_synthetic_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b.csv");
    let dataset = fixture("dataset.csv");
    let stdout = ok(&[
        "smote",
        "--dataset",
        path_str(&dataset),
        "--out",
        path_str(&out),
        "--seed",
        "3",
    ]);
    assert!(stdout.contains("synthetic rows: 12"), "{stdout}");
    let original = Dataset::read_csv(std::fs::File::open(&dataset).unwrap()).unwrap();
    let balanced = Dataset::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .ends_with(",label,synthetic"));
    assert_eq!(balanced.class_counts(), vec![12, 12, 12]);
    assert_eq!(&balanced.rows[..original.len()], &original.rows[..]);
    assert!(balanced.rows[original.len()..].iter().all(|r| r.synthetic));
}

#[test]
fn saved_model_predicts_like_the_trained_one() {
    let dir = TempDir::new().unwrap();
    let model_path = dir.path().join("m.json");
    let preds = dir.path().join("p.csv");
    let dataset = fixture("dataset.csv");
    let d = path_str(&dataset);
    ok(&[
        "run",
        "--dataset",
        d,
        "--learner",
        "reptree",
        "--ensemble",
        "boosting",
        "--k-folds",
        "3",
        "--model-out",
        path_str(&model_path),
    ]);
    ok(&[
        "predict",
        "--model",
        path_str(&model_path),
        "--dataset",
        d,
        "--out",
        path_str(&preds),
    ]);
    let model = load_model(std::fs::File::open(&model_path).unwrap()).unwrap();
    let ds = Dataset::read_csv(std::fs::File::open(&dataset).unwrap()).unwrap();
    let text = std::fs::read_to_string(&preds).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("location_id,label,predicted,p_3.5,p_4.0,p_4.5"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), ds.len());
    for (line, row) in body.iter().zip(&ds.rows) {
        let p = model.predict(&row.values).unwrap();
        assert!(line.ends_with(&format!(
            ",{},{}",
            p.label,
            p.distribution.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        )));
    }
    let res = scenic(&["predict", "--model", d, "--dataset", d, "--out", path_str(&preds)]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.cfg");
    let mut config = PipelineConfig::default();
    for (k, v) in [
        ("learner", "j48"),
        ("ensemble", "none"),
        ("k_folds", "4"),
        ("seed", "3"),
    ] {
        config.set(k, v).unwrap();
    }
    std::fs::write(&cfg, config.to_text()).unwrap();
    let dataset = fixture("dataset.csv");
    let report = dir.path().join("r.json");
    ok(&[
        "run",
        "--dataset",
        path_str(&dataset),
        "--config",
        path_str(&cfg),
        "--seed",
        "7",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(
        std::fs::read(&report).unwrap(),
        std::fs::read(fixture("golden_j48_report.json")).unwrap()
    );
}

#[test]
fn config_text_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let choices: &[(&str, &[&str])] = &[
        (
            "smote",
            &["none", "majority", "count:40", "percent:150", "percent:33.5"],
        ),
        ("learner", &["j48", "reptree", "rf"]),
        ("criterion", &["default", "gain_ratio", "info_gain"]),
        ("min_leaf", &["default", "1", "2.5"]),
        ("max_depth", &["default", "unlimited", "7"]),
        ("pruning", &["default", "none", "pessimistic", "reduced_error"]),
        ("ensemble", &["none", "bagging", "boosting"]),
        ("boost_mode", &["reweight", "resample"]),
        ("mode", &["paper_faithful", "leakage_safe"]),
        ("bootstrap", &["true", "false"]),
        ("drop_empty", &["true", "false"]),
    ];
    for _ in 0..200 {
        let mut c = PipelineConfig::default();
        for (k, vals) in choices {
            c.set(k, vals[rng.gen_range(0..vals.len())]).unwrap();
        }
        c.radius_m = rng.gen_range(1.0..500.0);
        c.confidence = rng.gen_range(0.01..0.49);
        c.holdout_fraction = rng.gen_range(0.05..0.95);
        c.seed = rng.gen();
        c.k_folds = rng.gen_range(2..20);
        c.n_trees = rng.gen_range(1..200);
        let back = PipelineConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), c.to_text());
    }
}

#[test]
fn sweep_emits_six_rows_in_table_order() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("s.json");
    let summary = dir.path().join("s.csv");
    let dataset = fixture("dataset.csv");
    let stdout = ok(&[
        "run",
        "--dataset",
        path_str(&dataset),
        "--sweep",
        "--k-folds",
        "3",
        "--n-trees",
        "5",
        "--iterations",
        "3",
        "--report",
        path_str(&report),
        "--summary-csv",
        path_str(&summary),
    ]);
    let names: Vec<&str> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split("  ").next().unwrap().trim())
        .collect();
    assert_eq!(
        names,
        [
            "Bagging with J48",
            "Bagging with REPTree",
            "Bagging with RF",
            "Boosting with J48",
            "Boosting with REPTree",
            "Boosting with RF"
        ]
    );
    let reports: Vec<serde_json::Value> = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(reports.len(), 6);
    let csv = std::fs::read_to_string(&summary).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(csv.lines().next(), Some("classifier,accuracy,precision,recall"));
}
