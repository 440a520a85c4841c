//! Independent reference for the annotation metrics, written as plain
//! loops over a count table, plus the random matrices it is checked on.

#![allow(clippy::needless_range_loop)]

use proofgauge::{AggregateCell, ResponseMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const MODELS: [&str; 4] = ["m1", "m2", "m3", "m4"];

/// Counts[model][theorem] out of 128, with distinct nonzero pass@128 per
/// model and a few theorems nobody proves.
pub fn random_counts(rng: &mut ChaCha8Rng, theorems: usize) -> Vec<Vec<u32>> {
    loop {
        let mut skill: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..0.9)).collect();
        skill.sort_by(f64::total_cmp);
        let mut counts = vec![vec![0u32; theorems]; 4];
        for t in 0..theorems {
            let d: f64 = rng.gen_range(0.0..1.0);
            let unsolved = rng.gen_bool(0.15);
            for m in 0..4 {
                let p = (skill[m] - d + rng.gen_range(-0.15..0.15)).clamp(0.0, 1.0);
                counts[m][t] = if unsolved { 0 } else { (0..128).filter(|_| rng.gen_bool(p)).count() as u32 };
            }
        }
        let mut solved: Vec<usize> = counts.iter().map(|c| c.iter().filter(|&&s| s > 0).count()).collect();
        if solved.contains(&0) {
            continue;
        }
        solved.sort_unstable();
        solved.dedup();
        if solved.len() == 4 {
            return counts;
        }
    }
}

pub fn to_matrix(counts: &[Vec<u32>]) -> ResponseMatrix {
    let mut rows = Vec::new();
    for (m, row) in counts.iter().enumerate() {
        for (t, &s) in row.iter().enumerate() {
            rows.push((MODELS[m], format!("t{t:02}"), AggregateCell { attempts: 128, successes: s }));
        }
    }
    ResponseMatrix::from_aggregates(rows).unwrap()
}

/// Straight-line reference: (raw difficulty, raw discrimination, difficulty,
/// discrimination) per theorem.
pub fn oracle(counts: &[Vec<u32>], eps: f64) -> Vec<(f64, f64, f64, f64)> {
    let nm = counts.len();
    let nt = counts[0].len();
    let mut prior = vec![0.0; nm];
    for m in 0..nm {
        let mut solved = 0.0;
        for t in 0..nt {
            if counts[m][t] > 0 {
                solved += 1.0;
            }
        }
        prior[m] = solved / nt as f64;
    }
    let mut order: Vec<usize> = (0..nm).collect();
    order.sort_by(|&x, &y| prior[x].total_cmp(&prior[y]));
    let mut raw = Vec::new();
    for t in 0..nt {
        let rates: Vec<f64> = order.iter().map(|&m| counts[m][t] as f64 / 128.0).collect();
        let thetas: Vec<f64> = order.iter().map(|&m| prior[m]).collect();
        let mut mean = 0.0;
        for r in &rates {
            mean += r;
        }
        mean /= nm as f64;
        let mut correction = 0.0;
        for i in 0..nm {
            if rates[i] > 0.0 {
                correction += 1.0 / thetas[i];
            }
        }
        let zero = rates.iter().all(|&r| r == 0.0);
        let difficulty = if zero {
            0.0
        } else {
            let p = (mean - eps * correction).clamp(1e-6, 0.9999);
            -p / (1.0 - p)
        };
        let mut slope = 0.0;
        let mut pairs = 0.0;
        for i in 0..nm {
            for j in i + 1..nm {
                slope += (rates[i] - rates[j]) / (thetas[i] - thetas[j]);
                pairs += 1.0;
            }
        }
        raw.push((difficulty, slope / pairs));
    }
    let lo = raw.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let scale = raw.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    raw.iter()
        .map(|&(d, a)| (d, a, (d - lo) / (0.0 - lo), if scale > 0.0 { a / scale } else { 0.0 }))
        .collect()
}
