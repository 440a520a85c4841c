mod common;
#[path = "../../core/tests/common/mod.rs"]
mod golden;

use common::{code, outputs, proofgauge, stderr, workspace};

fn read(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn annotation_reaches_the_published_level_sizes() {
    let ws = workspace();
    let grading = read(&ws.path().join("seeded/grading.csv"));
    let counts: Vec<&str> = grading.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["120", "120", "121", "127"]);
    assert!(read(&ws.path().join("seeded/bank_display.csv")).contains("Level 4"));
}

#[test]
fn zero_epsilon_changes_difficulty_but_not_discrimination() {
    let ws = workspace();
    let out = proofgauge(ws.path(), &["--config", "run.toml", "--out", "plain", "-q", "annotate", "--epsilon", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let load = |dir: &str| proofgauge::ItemBank::load(ws.path().join(dir).join("bank.csv")).unwrap();
    let (with, without) = (load("seeded"), load("plain"));
    let mut moved = 0;
    for (a, b) in with.items().iter().zip(without.items()) {
        assert_eq!(a.discrimination, b.discrimination, "{}", a.theorem_id);
        if a.difficulty != b.difficulty {
            moved += 1;
        }
    }
    assert!(moved > 0);
}

#[test]
fn unknown_annotation_model_is_an_input_error() {
    let ws = workspace();
    let out = proofgauge(ws.path(), &["--config", "run.toml", "--out", "o", "annotate", "--models", "m1,nobody"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nobody"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_an_input_error() {
    let ws = workspace();
    std::fs::write(ws.path().join("bad.toml"), "eval.windw = 3\n").unwrap();
    let out = proofgauge(ws.path(), &["--config", "bad.toml", "--out", "o", "simulate"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("windw"), "{}", stderr(&out));
}

#[test]
fn replay_evaluation_writes_report_and_trace() {
    let ws = workspace();
    let out = proofgauge(ws.path(), &["--config", "run.toml", "--out", "o", "evaluate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ability score:"), "{stdout}");
    let report = proofgauge::EvalReport::from_json(&read(&ws.path().join("o/report.json"))).unwrap();
    assert!(report.converged);
    assert_eq!(report.trace.len(), report.administrations);
    assert!(read(&ws.path().join("o/trace.csv")).lines().count() == report.administrations + 1);
    assert!(read(&ws.path().join("o/run.log")).contains("exit=0"));
}

#[test]
fn exhausting_the_round_budget_exits_four_with_a_report() {
    let ws = workspace();
    std::fs::write(
        ws.path().join("short.toml"),
        format!("{}\n[eval]\nmax_rounds = 10\nconv_eps = 1e-9\n", common::RUN_TOML),
    )
    .unwrap();
    let out = proofgauge(ws.path(), &["--config", "short.toml", "--out", "s", "evaluate"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let report = proofgauge::EvalReport::from_json(&read(&ws.path().join("s/report.json"))).unwrap();
    assert!(!report.converged);
    assert_eq!(report.rounds, 10);
}

#[test]
fn slow_external_prover_exits_three() {
    let ws = workspace();
    std::fs::write(
        ws.path().join("slow.toml"),
        "paths.bank = \"bank.csv\"\n[backend]\nkind = \"external\"\ncommand = \"sleep 5\"\ntimeout_secs = 0.5\n",
    )
    .unwrap();
    let out = proofgauge(ws.path(), &["--config", "slow.toml", "--out", "o", "evaluate"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(read(&ws.path().join("o/run.log")).contains("exit=3"));
}

#[test]
fn flat_bank_with_even_odds_stays_at_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let mut bank = String::from("theorem_id,difficulty,discrimination,level,raw_difficulty,raw_discrimination,zero_success\n");
    for t in 0..60 {
        bank.push_str(&format!("t{t:02},0.{t:02},0,,,,false\n"));
    }
    std::fs::write(dir.path().join("flat.csv"), bank).unwrap();
    let cmd = r#"cat >/dev/null; printf '{"theorem_id":"{theorem_id}","successes":64}'"#;
    std::fs::write(
        dir.path().join("run.toml"),
        format!("paths.bank = \"flat.csv\"\n[backend]\nkind = \"external\"\ncommand = \'\'\'{cmd}\'\'\'\ntimeout_secs = 10\n"),
    )
    .unwrap();
    let out = proofgauge(dir.path(), &["--config", "run.toml", "--out", "o", "-q", "evaluate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = proofgauge::EvalReport::from_json(&read(&dir.path().join("o/report.json"))).unwrap();
    assert_eq!(report.final_theta, 0.5);
    assert!(report.converged);
    assert_eq!(report.rounds, 10);
}

#[test]
fn analysis_writes_every_export() {
    let ws = workspace();
    let out = proofgauge(ws.path(), &["--config", "run.toml", "--out", "o", "-q", "analyze"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let files = outputs(&ws.path().join("o"));
    for name in ["level_pass.csv", "category_summary.csv", "scatter.csv", "concordance.json"] {
        assert!(files.contains_key(name), "{name} missing from {:?}", files.keys());
    }
    let levels = read(&ws.path().join("o/level_pass.csv"));
    assert!(levels.lines().count() >= 5, "{levels}");
}

#[test]
fn single_model_ranking_is_skipped_not_fatal() {
    let ws = workspace();
    common::write_abilities(&ws.path().join("abilities.csv"), &[("m2", 0.4)]);
    let out = proofgauge(ws.path(), &["--config", "run.toml", "--out", "o", "analyze"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("concordance: skipped"));
    assert!(!ws.path().join("o/concordance.json").exists());
    assert!(ws.path().join("o/scatter.csv").exists());
}

#[test]
fn analysis_without_inputs_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = proofgauge(dir.path(), &["--out", "o", "analyze"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn one_examinee_has_no_rank_agreement() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "simulate.examinees = [0.4]\nsimulate.bank_size = 100\n").unwrap();
    let out = proofgauge(dir.path(), &["--config", "run.toml", "--out", "o", "simulate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("o/simulation_summary.json"))).unwrap();
    assert!(summary["kendall_tau"].is_null());
    assert!(summary["note"].is_string());
}

#[test]
fn environment_overrides_the_output_flag() {
    let ws = workspace();
    let env_out = ws.path().join("from_env");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_proofgauge"))
        .current_dir(ws.path())
        .env("PROOFGAUGE_OUT", &env_out)
        .args(["--config", "run.toml", "--out", "from_flag", "-q", "grade"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(env_out.join("grading.csv").exists());
    assert!(!ws.path().join("from_flag").exists());
}

#[test]
fn ingest_writes_normalized_copies() {
    let ws = workspace();
    let out = proofgauge(ws.path(), &["--config", "run.toml", "--out", "o", "-q", "ingest"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let priors = read(&ws.path().join("o/priors.csv"));
    assert_eq!(priors.lines().count(), 5);
    assert!(priors.contains("m4,128,0.73975"), "{priors}");
    assert!(ws.path().join("o/corpus.csv").exists());
    assert!(!ws.path().join("o/attempts.csv").exists());
}

#[test]
fn traced_replay_lands_on_the_published_ability() {
    let dir = tempfile::tempdir().unwrap();
    golden::trace_bank().save(dir.path().join("bank.csv")).unwrap();
    golden::trace_matrix().save_aggregates(dir.path().join("matrix.csv")).unwrap();
    std::fs::write(dir.path().join("run.toml"), "paths.bank = \"bank.csv\"\npaths.matrix = \"matrix.csv\"\n").unwrap();
    let out = proofgauge(
        dir.path(),
        &["--config", "run.toml", "--out", "o", "evaluate", "--model", golden::TRACE_MODEL, "--window", "10"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = proofgauge::EvalReport::from_json(&read(&dir.path().join("o/report.json"))).unwrap();
    assert!((report.final_theta - 0.5323).abs() < 5e-3, "{}", report.final_theta);
    assert!((50..=60).contains(&report.administrations), "{}", report.administrations);
}
