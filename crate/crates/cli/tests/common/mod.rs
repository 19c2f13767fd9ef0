#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn ebmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebmc"))
        .args(args)
        .env_remove("EBMC_RNG_MODE")
        .output()
        .expect("spawn ebmc")
}

pub fn ebmc_ok(args: &[&str]) -> Output {
    let out = ebmc(args);
    assert!(
        out.status.success(),
        "ebmc {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a headed CSV as column-name maps.
pub fn read_csv(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

/// Every regular file under `dir`, relative path to contents.
pub fn snapshot(dir: &Path) -> HashMap<PathBuf, Vec<u8>> {
    let mut out = HashMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Compares two output directories file by file. Wall-clock timings are
/// excluded, and the echoed configs may differ only in `out`.
pub fn diff_outputs(a: &Path, b: &Path) -> Vec<String> {
    let sa = snapshot(a);
    let sb = snapshot(b);
    let mut problems = Vec::new();
    let mut names: Vec<&PathBuf> = sa.keys().chain(sb.keys()).collect();
    names.sort();
    names.dedup();
    for name in names {
        if name.file_name().unwrap() == "timings.csv" {
            continue;
        }
        match (sa.get(name), sb.get(name)) {
            (Some(x), Some(y)) if name.file_name().unwrap() == "config.toml" => {
                let strip = |v: &Vec<u8>| -> Vec<String> {
                    String::from_utf8_lossy(v)
                        .lines()
                        .filter(|l| !l.starts_with("out = "))
                        .map(String::from)
                        .collect()
                };
                if strip(x) != strip(y) {
                    problems.push(format!("{} differs", name.display()));
                }
            }
            (Some(x), Some(y)) if x == y => {}
            (Some(_), Some(_)) => problems.push(format!("{} differs", name.display())),
            _ => problems.push(format!("{} present on one side only", name.display())),
        }
    }
    problems
}

/// `mean` of `metric` for `variant` in a synth-bench results table.
pub fn bench_mean(rows: &[HashMap<String, String>], variant: &str, metric: &str) -> f64 {
    let row = rows
        .iter()
        .find(|r| r["variant"] == variant && r["metric"] == metric)
        .unwrap_or_else(|| panic!("no {variant}/{metric} row"));
    assert_eq!(row["status"], "ok", "{variant}/{metric} failed");
    row["mean"].parse().unwrap()
}
