#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::process::{Command, Output};

use plrank::io::{write_dataset, Dataset, Labels};
use plrank::pl::Ranking;
use plrank::synth::LabelledInstance;

pub fn plrank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plrank"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs and asserts success, returning stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = plrank(dir, args);
    assert!(
        out.status.success(),
        "plrank {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(dir: &Path, args: &[&str]) -> i32 {
    plrank(dir, args).status.code().expect("exit code")
}

pub fn write_records(
    path: &Path,
    labels: &[&str],
    input_dim: usize,
    records: Vec<LabelledInstance>,
) {
    let dataset = Dataset {
        labels: Labels::new(labels.iter().map(|s| s.to_string()).collect()).unwrap(),
        input_dim,
        records,
    };
    write_dataset(BufWriter::new(File::create(path).unwrap()), &dataset).unwrap();
}

/// A featureless dataset holding only rankings, one labeller per ranking.
pub fn write_rankings(path: &Path, labels: &[&str], rankings: &[Vec<usize>]) {
    let records = rankings
        .iter()
        .enumerate()
        .map(|(i, order)| LabelledInstance {
            object_id: "obj000".into(),
            orientation_id: "0".into(),
            labeller_id: format!("L{i:02}"),
            features: vec![0.0],
            ranking: Ranking::new(order.clone()).unwrap(),
        })
        .collect();
    write_records(path, labels, 1, records);
}

/// Parses the `label\tweight` lines of `fit` output.
pub fn fitted_weights(stdout: &str) -> Vec<(String, f64)> {
    stdout
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(label, w)| (label.to_string(), w.parse().unwrap()))
        .collect()
}

pub fn field(stdout: &str, name: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{name}: ")))
        .unwrap_or_else(|| panic!("no {name} in {stdout}"))
        .parse()
        .unwrap()
}
