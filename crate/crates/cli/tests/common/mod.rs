#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

pub const MODELS: [&str; 4] = ["m1", "m2", "m3", "m4"];

pub fn core_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn proofgauge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proofgauge"))
        .current_dir(dir)
        .env_remove("PROOFGAUGE_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Ids of the published bank, and which of them nobody proved.
fn published_ids() -> Vec<(String, bool)> {
    let mut reader = csv::Reader::from_path(core_fixture("graded_bank.csv")).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), &r[6] == "true")
        })
        .collect()
}

/// Four models on the published theorem ids. The published unsolved
/// theorems stay unsolved and the strongest model proves every other one,
/// so grading lands on the published level sizes.
pub fn write_matrix(path: &Path, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skill = [0.2, 0.4, 0.6, 0.85];
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["model_id", "theorem_id", "attempts", "successes"]).unwrap();
    for (id, unsolved) in published_ids() {
        let ease: f64 = rng.gen_range(0.0..1.0);
        for (m, s) in MODELS.iter().zip(skill) {
            let p = (ease + s - 1.0 + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0);
            let mut successes = (0..128).filter(|_| rng.gen_bool(p)).count();
            if unsolved {
                successes = 0;
            } else if *m == "m4" {
                successes = successes.max(1);
            }
            w.write_record([m.to_string(), id.clone(), "128".into(), successes.to_string()])
                .unwrap();
        }
    }
    w.flush().unwrap();
}

pub fn write_abilities(path: &Path, abilities: &[(&str, f64)]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["model_id", "ability"]).unwrap();
    for (m, a) in abilities {
        w.write_record([m.to_string(), a.to_string()]).unwrap();
    }
    w.flush().unwrap();
}

pub const RUN_TOML: &str = r#"seed = 11

[paths]
matrix = "matrix.csv"
corpus = "corpus.csv"
bank = "bank.csv"
abilities = "abilities.csv"

[backend]
kind = "replay"
model = "m2"

[simulate]
examinees = [0.2, 0.5, 0.8]
bank_size = 200
"#;

/// A directory holding a matrix, corpus, annotated bank, abilities and
/// `run.toml`, ready for every command.
pub fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_matrix(&p.join("matrix.csv"), 42);
    std::fs::copy(core_fixture("graded_corpus.csv"), p.join("corpus.csv")).unwrap();
    write_abilities(
        &p.join("abilities.csv"),
        &[("m1", 0.31), ("m2", 0.42), ("m3", 0.55), ("m4", 0.63)],
    );
    std::fs::write(p.join("run.toml"), RUN_TOML).unwrap();
    let out = proofgauge(p, &["--config", "run.toml", "--out", "seeded", "-q", "annotate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    std::fs::copy(p.join("seeded/bank.csv"), p.join("bank.csv")).unwrap();
    dir
}

/// Every file under `dir` except the run log, keyed by relative path.
pub fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if path.is_file() && name != "run.log" {
            files.insert(name, std::fs::read(&path).unwrap());
        }
    }
    files
}
