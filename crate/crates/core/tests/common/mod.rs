#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use proofgauge::{AggregateCell, ItemBank, ItemParams, ResponseMatrix};

pub const TRACE_MODEL: &str = "DeepSeek-Prover-V1";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

#[derive(Debug, Clone)]
pub struct TraceLine {
    pub number: usize,
    pub theorem_id: String,
    pub difficulty: f64,
    pub discrimination: f64,
    pub success_rate: f64,
    pub ability_score: f64,
    pub delta: f64,
}

pub fn trace() -> Vec<TraceLine> {
    let mut reader = csv::Reader::from_path(fixture("evaluation_trace.csv")).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let num = |i: usize| r[i].parse::<f64>().unwrap();
            TraceLine {
                number: r[0].parse().unwrap(),
                theorem_id: r[1].to_string(),
                difficulty: num(2),
                discrimination: num(3),
                success_rate: num(4),
                ability_score: num(5),
                delta: num(6),
            }
        })
        .collect()
}

/// The traced theorems in order of first appearance, as a bank.
pub fn trace_bank() -> ItemBank {
    let mut seen = HashMap::new();
    let mut items = Vec::new();
    for line in trace() {
        if seen.insert(line.theorem_id.clone(), ()).is_none() {
            items.push(ItemParams {
                theorem_id: line.theorem_id,
                raw_difficulty: None,
                raw_discrimination: None,
                difficulty: line.difficulty,
                discrimination: line.discrimination,
                level: None,
                zero_success: line.difficulty == 1.0,
            });
        }
    }
    ItemBank::new(items).unwrap()
}

/// One model's recorded counts on the traced theorems.
pub fn trace_matrix() -> ResponseMatrix {
    let mut seen = HashMap::new();
    let mut rows = Vec::new();
    for line in trace() {
        let successes = (line.success_rate * 128.0).round() as u32;
        assert_eq!(f64::from(successes) / 128.0, line.success_rate);
        match seen.insert(line.theorem_id.clone(), successes) {
            Some(prev) => assert_eq!(prev, successes, "{} measured twice", line.theorem_id),
            None => rows.push((TRACE_MODEL, line.theorem_id, AggregateCell { attempts: 128, successes })),
        }
    }
    ResponseMatrix::from_aggregates(rows).unwrap()
}
