mod common;

use std::fs;

use common::{code, field, fitted_weights, ok, plrank, write_rankings};
use tempfile::tempdir;

const SMALL: &[&str] = &["--n-objects", "12", "--low-noise", "--seed", "4"];

fn synth_small(dir: &std::path::Path, out: &str) {
    let mut args = vec!["synth", "--out", out, "--quiet"];
    args.extend_from_slice(SMALL);
    ok(dir, &args);
}

#[test]
fn synth_is_deterministic_and_writes_ground_truth() {
    let dir = tempdir().unwrap();
    synth_small(dir.path(), "a.jsonl");
    synth_small(dir.path(), "b.jsonl");
    let a = fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.jsonl")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.jsonl.truth.json")).unwrap(),
        fs::read(dir.path().join("b.jsonl.truth.json")).unwrap()
    );
    ok(
        dir.path(),
        &[
            "synth",
            "--out",
            "c.jsonl",
            "--n-objects",
            "12",
            "--low-noise",
            "--seed",
            "5",
        ],
    );
    assert_ne!(a, fs::read(dir.path().join("c.jsonl")).unwrap());
}

#[test]
fn fit_three_to_one_gives_three_quarters() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    write_rankings(
        &path,
        &["a", "b"],
        &[vec![0, 1], vec![0, 1], vec![0, 1], vec![1, 0]],
    );
    for method in ["mm", "gradient"] {
        let out = ok(
            dir.path(),
            &[
                "fit",
                "--data",
                "d.jsonl",
                "--method",
                method,
                "--smoothing",
                "0",
            ],
        );
        let w = fitted_weights(&out);
        assert_eq!(w[0].0, "a");
        assert!((w[0].1 - 0.75).abs() < 1e-3, "{method}: {out}");
        assert!((w[1].1 - 0.25).abs() < 1e-3);
    }
}

#[test]
fn fit_methods_agree_and_output_is_stable() {
    let dir = tempdir().unwrap();
    synth_small(dir.path(), "d.jsonl");
    let mm = ok(dir.path(), &["fit", "--data", "d.jsonl"]);
    assert_eq!(mm, ok(dir.path(), &["fit", "--data", "d.jsonl"]));
    let gd = ok(
        dir.path(),
        &["fit", "--data", "d.jsonl", "--method", "gradient"],
    );
    let (mut a, mut b) = (fitted_weights(&mm), fitted_weights(&gd));
    a.sort_by(|x, y| x.0.cmp(&y.0));
    b.sort_by(|x, y| x.0.cmp(&y.0));
    assert_eq!(a.len(), 5);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
        assert!((x.1 - y.1).abs() < 1e-3);
    }
    let ll = field(&mm, "log_likelihood");
    assert!((ll - field(&gd, "log_likelihood")).abs() < 1e-4);
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    synth_small(p, "train.jsonl");
    ok(
        p,
        &[
            "synth",
            "--out",
            "test.jsonl",
            "--n-objects",
            "6",
            "--low-noise",
            "--seed",
            "4",
            "--quiet",
        ],
    );
    let args = [
        "train",
        "--train",
        "train.jsonl",
        "--test",
        "test.jsonl",
        "--model-out",
        "m.json",
        "--epochs",
        "15",
        "--quiet",
    ];
    let report = ok(p, &args);
    let model = fs::read(p.join("m.json")).unwrap();
    assert_eq!(report, ok(p, &args));
    assert_eq!(model, fs::read(p.join("m.json")).unwrap());

    let preds = ok(p, &["predict", "--model", "m.json", "--data", "test.jsonl"]);
    assert_eq!(
        preds,
        ok(p, &["predict", "--model", "m.json", "--data", "test.jsonl"])
    );
    fs::write(p.join("p.jsonl"), &preds).unwrap();
    let json = ok(
        p,
        &[
            "evaluate",
            "--predictions",
            "p.jsonl",
            "--references",
            "test.jsonl",
        ],
    );
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let acc = value["mean_overlap_accuracy"].as_f64().unwrap();
    assert!((acc - field(&report, "test_mean_overlap_accuracy")).abs() < 1e-9);
    assert_eq!(value["n_instances"], 24);
    assert!(value["mean_kendall_tau"].is_f64());
    assert!(value["mean_entropy"].is_f64());

    let instance = ok(
        p,
        &[
            "evaluate",
            "--predictions",
            "p.jsonl",
            "--references",
            "test.jsonl",
            "--mode",
            "instance",
        ],
    );
    let value: serde_json::Value = serde_json::from_str(&instance).unwrap();
    assert_eq!(value["mode"], "instance");
}

#[test]
fn mlp_training_runs() {
    let dir = tempdir().unwrap();
    synth_small(dir.path(), "d.jsonl");
    let out = ok(
        dir.path(),
        &[
            "train",
            "--train",
            "d.jsonl",
            "--arch",
            "mlp1",
            "--hidden-dim",
            "8",
            "--epochs",
            "3",
            "--model-out",
            "m.json",
            "--quiet",
        ],
    );
    assert!(field(&out, "final_train_loss").is_finite());
    let model: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(model["architecture"], "mlp1");
    assert_eq!(model["hidden_dim"], 8);
}

#[test]
fn evaluate_accepts_reordered_labels() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    write_rankings(
        &p.join("ref.jsonl"),
        &["a", "b", "c"],
        &[vec![0, 1, 2], vec![1, 0, 2]],
    );
    write_rankings(
        &p.join("ref2.jsonl"),
        &["c", "b", "a"],
        &[vec![2, 1, 0], vec![1, 2, 0]],
    );
    fs::write(
        p.join("p.jsonl"),
        "{\"format\":\"plrank-predictions\",\"version\":1,\"n_classes\":3,\"labels\":[\"a\",\"b\",\"c\"]}\n\
         {\"object_id\":\"obj000\",\"orientation_id\":\"0\",\"weights\":[0.5,0.3,0.2],\"ranking\":[\"a\",\"b\",\"c\"]}\n",
    )
    .unwrap();
    let a = ok(
        p,
        &[
            "evaluate",
            "--predictions",
            "p.jsonl",
            "--references",
            "ref.jsonl",
        ],
    );
    let b = ok(
        p,
        &[
            "evaluate",
            "--predictions",
            "p.jsonl",
            "--references",
            "ref2.jsonl",
        ],
    );
    assert_eq!(a, b);
    let value: serde_json::Value = serde_json::from_str(&a).unwrap();
    // Overlaps 1 and (0 + 1 + 1) / 3.
    let expected = (1.0 + 2.0 / 3.0) / 2.0;
    assert!((value["mean_overlap_accuracy"].as_f64().unwrap() - expected).abs() < 1e-12);

    write_rankings(&p.join("bad.jsonl"), &["a", "b", "x"], &[vec![0, 1, 2]]);
    assert_eq!(
        code(
            p,
            &[
                "evaluate",
                "--predictions",
                "p.jsonl",
                "--references",
                "bad.jsonl"
            ]
        ),
        1
    );
}

#[test]
fn evaluate_rejects_missing_references() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    write_rankings(&p.join("ref.jsonl"), &["a", "b"], &[vec![0, 1]]);
    fs::write(
        p.join("p.jsonl"),
        "{\"format\":\"plrank-predictions\",\"version\":1,\"n_classes\":2,\"labels\":[\"a\",\"b\"]}\n\
         {\"object_id\":\"obj999\",\"orientation_id\":\"0\",\"weights\":[0.5,0.5],\"ranking\":[\"a\",\"b\"]}\n",
    )
    .unwrap();
    assert_eq!(
        code(
            p,
            &[
                "evaluate",
                "--predictions",
                "p.jsonl",
                "--references",
                "ref.jsonl"
            ]
        ),
        1
    );
}

#[test]
fn sample_is_seeded_and_uses_labels() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    let args = [
        "sample",
        "--weights",
        "0.5,0.3,0.2",
        "--count",
        "50",
        "--seed",
        "9",
        "--labels",
        "x,y,z",
    ];
    let a = ok(p, &args);
    assert_eq!(a, ok(p, &args));
    assert_eq!(a.lines().count(), 50);
    for line in a.lines() {
        let mut names: Vec<String> = serde_json::from_str(line).unwrap();
        names.sort();
        assert_eq!(names, ["x", "y", "z"]);
    }
    assert_ne!(
        a,
        ok(
            p,
            &[
                "sample",
                "--weights",
                "0.5,0.3,0.2",
                "--count",
                "50",
                "--seed",
                "10",
                "--labels",
                "x,y,z"
            ]
        )
    );
    assert_eq!(ok(p, &["sample", "--weights", "1,1", "--count", "0"]), "");
    // Unnormalized weights are scaled by their sum.
    assert_eq!(
        a,
        ok(
            p,
            &[
                "sample",
                "--weights",
                "5,3,2",
                "--count",
                "50",
                "--seed",
                "9",
                "--labels",
                "x,y,z"
            ]
        )
    );
}

#[test]
fn output_flag_redirects_primary_output() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    let stdout = ok(
        p,
        &[
            "sample",
            "--weights",
            "1,2",
            "--count",
            "5",
            "--output",
            "s.txt",
        ],
    );
    assert_eq!(stdout, "");
    assert_eq!(
        fs::read_to_string(p.join("s.txt")).unwrap().lines().count(),
        5
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("c.toml"),
        "seed = 9\n\n[sample]\nweights = [0.5, 0.3, 0.2]\ncount = 50\nlabels = [\"x\", \"y\", \"z\"]\n",
    )
    .unwrap();
    let direct = ok(
        p,
        &[
            "sample",
            "--weights",
            "0.5,0.3,0.2",
            "--count",
            "50",
            "--seed",
            "9",
            "--labels",
            "x,y,z",
        ],
    );
    assert_eq!(ok(p, &["--config", "c.toml", "sample"]), direct);
    assert_eq!(
        ok(p, &["--config", "c.toml", "sample", "--count", "3"])
            .lines()
            .count(),
        3
    );
    assert_ne!(
        ok(p, &["--config", "c.toml", "sample", "--seed", "10"]),
        direct
    );

    fs::write(p.join("bad.toml"), "[sample]\nwieghts = [1.0]\n").unwrap();
    assert_eq!(code(p, &["--config", "bad.toml", "sample"]), 1);
    assert_eq!(
        code(p, &["--config", "absent.toml", "sample", "--weights", "1"]),
        2
    );
}

#[test]
fn validation_errors_exit_one_and_name_the_field() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    let out = plrank(p, &["synth", "--out", "x.jsonl", "--n-objects", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_objects"));

    synth_small(p, "d.jsonl");
    let out = plrank(
        p,
        &[
            "train",
            "--train",
            "d.jsonl",
            "--model-out",
            "m.json",
            "--lr",
            "-1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));

    assert_eq!(code(p, &["sample", "--weights", "1,-1"]), 1);
    assert_eq!(code(p, &["sample", "--weights", "1,0"]), 1);
    assert_eq!(code(p, &["sample", "--weights", "1,1", "--labels", "a"]), 1);
    assert_eq!(
        code(p, &["fit", "--data", "d.jsonl", "--method", "newton"]),
        1
    );
    assert_eq!(
        code(
            p,
            &["synth", "--out", "y.jsonl", "--temperature-range", "1,2,3"]
        ),
        1
    );
    assert_eq!(code(p, &["fit"]), 1);
    assert_eq!(code(p, &["frobnicate"]), 1);
    assert_eq!(code(p, &["--help"]), 0);

    fs::write(p.join("empty.jsonl"), "").unwrap();
    assert_eq!(code(p, &["fit", "--data", "empty.jsonl"]), 1);
    fs::write(p.join("junk.jsonl"), "not json\n").unwrap();
    assert_eq!(code(p, &["fit", "--data", "junk.jsonl"]), 1);

    write_rankings(&p.join("other.jsonl"), &["a", "b"], &[vec![0, 1]]);
    assert_eq!(
        code(
            p,
            &[
                "train",
                "--train",
                "d.jsonl",
                "--test",
                "other.jsonl",
                "--model-out",
                "m.json"
            ]
        ),
        1
    );
    ok(
        p,
        &[
            "train",
            "--train",
            "d.jsonl",
            "--model-out",
            "m.json",
            "--epochs",
            "1",
            "--quiet",
        ],
    );
    assert_eq!(
        code(
            p,
            &["predict", "--model", "m.json", "--data", "other.jsonl"]
        ),
        1
    );
}

#[test]
fn io_errors_exit_two() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(p, &["fit", "--data", "missing.jsonl"]), 2);
    assert_eq!(code(p, &["synth", "--out", "no/such/dir/d.jsonl"]), 2);
    assert_eq!(
        code(p, &["predict", "--model", "missing.json", "--data", "x"]),
        2
    );
}

#[test]
fn divergent_training_exits_three() {
    let dir = tempdir().unwrap();
    let p = dir.path();
    synth_small(p, "d.jsonl");
    let out = plrank(
        p,
        &[
            "train",
            "--train",
            "d.jsonl",
            "--model-out",
            "m.json",
            "--lr",
            "1e300",
            "--init-scale",
            "1",
            "--epochs",
            "5",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
