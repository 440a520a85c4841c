//! Comparison artifacts over an annotated bank: pass rates per level,
//! category means, scatter data, rank agreement between ability scores and
//! pass@n, and a grid search over the selection exponent and step size.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{run_adaptive, EvalConfig};
use crate::annotate::ItemBank;
use crate::corpus::{create_csv, write_row, Corpus, Provenance, ResponseMatrix};
use crate::error::{Error, Result};
use crate::examinee::ExamineeBackend;

/// Which theorems enter a level pass-rate table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSubset {
    #[default]
    All,
    /// Only theorems whose provenance is the MATH dataset.
    Math,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPassTable {
    pub levels: Vec<u8>,
    /// Theorems per level after subsetting.
    pub counts: Vec<usize>,
    /// Pass rate per level, one row per model in the requested order.
    pub rows: Vec<(String, Vec<f64>)>,
    /// Mean over models, per level.
    pub averages: Vec<f64>,
}

impl LevelPassTable {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        let mut header = vec!["model_id".to_string()];
        header.extend(self.levels.iter().map(|l| format!("level_{l}")));
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        write_row(&mut w, path, &refs)?;
        let rows = self
            .rows
            .iter()
            .map(|(m, v)| (m.as_str(), v))
            .chain(std::iter::once(("average", &self.averages)));
        for (model, values) in rows {
            let mut cells = vec![model.to_string()];
            cells.extend(values.iter().map(|v| v.to_string()));
            let refs: Vec<&str> = cells.iter().map(String::as_str).collect();
            write_row(&mut w, path, &refs)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Pass@`n` per model restricted to each level's theorems.
pub fn level_pass_table<S: AsRef<str>>(
    matrix: &ResponseMatrix,
    bank: &ItemBank,
    corpus: Option<&Corpus>,
    models: &[S],
    subset: LevelSubset,
    n: u32,
) -> Result<LevelPassTable> {
    if models.is_empty() {
        return Err(Error::invalid("no models given"));
    }
    let mut by_level: BTreeMap<u8, Vec<&str>> = BTreeMap::new();
    for it in bank.items() {
        let level = it
            .level
            .ok_or_else(|| Error::invalid(format!("theorem {} is not graded", it.theorem_id)))?;
        let keep = match subset {
            LevelSubset::All => true,
            LevelSubset::Math => {
                let corpus = corpus.ok_or_else(|| Error::invalid("the MATH subset needs corpus metadata"))?;
                corpus
                    .get(&it.theorem_id)
                    .is_some_and(|r| r.provenance == Provenance::Math)
            }
        };
        by_level.entry(level).or_default();
        if keep {
            by_level.entry(level).or_default().push(&it.theorem_id);
        }
    }
    if let Some((level, _)) = by_level.iter().find(|(_, ids)| ids.is_empty()) {
        return Err(Error::invalid(format!("level {level} is empty after subsetting")));
    }
    let levels: Vec<u8> = by_level.keys().copied().collect();
    let counts = by_level.values().map(Vec::len).collect();
    let rows = models
        .iter()
        .map(|m| {
            let m = m.as_ref();
            let rates = by_level
                .values()
                .map(|ids| matrix.pass_at_n(m, n, ids))
                .collect::<Result<Vec<_>>>()?;
            Ok((m.to_string(), rates))
        })
        .collect::<Result<Vec<_>>>()?;
    let averages = (0..levels.len())
        .map(|j| rows.iter().map(|(_, r): &(String, Vec<f64>)| r[j]).sum::<f64>() / rows.len() as f64)
        .collect();
    Ok(LevelPassTable {
        levels,
        counts,
        rows,
        averages,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    /// `split`, `provenance`, `problem_type` or `overall`.
    pub categorization: String,
    pub category: String,
    pub mean_difficulty: f64,
    pub mean_discrimination: f64,
    pub count: usize,
}

pub const CATEGORY_HEADER: [&str; 5] = [
    "categorization",
    "category",
    "mean_difficulty",
    "mean_discrimination",
    "count",
];

/// Mean difficulty and discrimination grouped by split, provenance and
/// problem type, followed by the overall row. Theorems missing from the
/// corpus fall into the `unknown` group of every categorization.
pub fn category_summary(bank: &ItemBank, corpus: &Corpus) -> Vec<CategoryRow> {
    type Key = fn(&crate::corpus::TheoremRecord) -> String;
    let categorizations: [(&str, Key); 3] = [
        ("split", |r| r.split.to_string()),
        ("provenance", |r| r.provenance.to_string()),
        ("problem_type", |r| r.problem_type.to_string()),
    ];
    let mut rows = Vec::new();
    for (name, key) in categorizations {
        let mut groups: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
        for it in bank.items() {
            let category = corpus
                .get(&it.theorem_id)
                .map(key)
                .unwrap_or_else(|| "unknown".to_string());
            let g = groups.entry(category).or_default();
            g.0 += it.difficulty;
            g.1 += it.discrimination;
            g.2 += 1;
        }
        rows.extend(groups.into_iter().map(|(category, (d, a, n))| CategoryRow {
            categorization: name.to_string(),
            category,
            mean_difficulty: d / n as f64,
            mean_discrimination: a / n as f64,
            count: n,
        }));
    }
    let n = bank.len();
    let mean = |f: fn(&crate::annotate::ItemParams) -> f64| {
        if n == 0 {
            0.0
        } else {
            bank.items().iter().map(f).sum::<f64>() / n as f64
        }
    };
    rows.push(CategoryRow {
        categorization: "overall".into(),
        category: "overall".into(),
        mean_difficulty: mean(|i| i.difficulty),
        mean_discrimination: mean(|i| i.discrimination),
        count: n,
    });
    rows
}

pub fn save_category_summary(rows: &[CategoryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_csv(path)?;
    write_row(&mut w, path, &CATEGORY_HEADER)?;
    for r in rows {
        write_row(
            &mut w,
            path,
            &[
                &r.categorization,
                &r.category,
                &r.mean_difficulty.to_string(),
                &r.mean_discrimination.to_string(),
                &r.count.to_string(),
            ],
        )?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `theorem_id,category,difficulty,discrimination` with the problem
/// type as category.
pub fn scatter_export(bank: &ItemBank, corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_csv(path)?;
    write_row(&mut w, path, &["theorem_id", "category", "difficulty", "discrimination"])?;
    for it in bank.items() {
        let category = corpus
            .get(&it.theorem_id)
            .map(|r| r.problem_type.to_string())
            .unwrap_or_else(|| "unknown".to_string());
        write_row(
            &mut w,
            path,
            &[
                &it.theorem_id,
                &category,
                &it.difficulty.to_string(),
                &it.discrimination.to_string(),
            ],
        )?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Kendall's tau over paired scores, with tied pairs counting as neither
/// concordant nor discordant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tau {
    pub tau: f64,
    pub concordant: usize,
    pub discordant: usize,
    /// Some pair was tied in either score.
    pub ties: bool,
}

/// `None` for fewer than two pairs.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<Tau> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let (mut c, mut d, mut ties) = (0usize, 0usize, false);
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if s > 0.0 {
                c += 1;
            } else if s < 0.0 {
                d += 1;
            } else {
                ties = true;
            }
        }
    }
    let pairs = n * (n - 1) / 2;
    Some(Tau {
        tau: (c as f64 - d as f64) / pairs as f64,
        concordant: c,
        discordant: d,
        ties,
    })
}

/// Models ordered best first by descending score, ties by model id.
fn rank(scores: &BTreeMap<String, f64>) -> (Vec<String>, bool) {
    let mut order: Vec<(&String, f64)> = scores.iter().map(|(m, &s)| (m, s)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let ties = order.windows(2).any(|w| w[0].1 == w[1].1);
    (order.into_iter().map(|(m, _)| m.clone()).collect(), ties)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub first: String,
    pub second: String,
    pub concordant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassNComparison {
    pub n: u32,
    pub scores: BTreeMap<String, f64>,
    /// Best first.
    pub rank: Vec<String>,
    pub ties: bool,
    pub concordant: usize,
    pub discordant: usize,
    pub kendall_tau: f64,
    pub pairs: Vec<PairVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingComparison {
    /// Sorted by id.
    pub models: Vec<String>,
    pub ability: BTreeMap<String, f64>,
    /// Best first.
    pub ability_rank: Vec<String>,
    pub ability_ties: bool,
    pub passn: Vec<PassNComparison>,
}

impl RankingComparison {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Compares the ranking by ability against the ranking by pass@n over every
/// theorem of the matrix, for each requested n. Both rankings are strict
/// permutations; tied scores are ordered by model id and flagged.
pub fn ranking_concordance(
    ability: &BTreeMap<String, f64>,
    matrix: &ResponseMatrix,
    n_values: &[u32],
) -> Result<RankingComparison> {
    if ability.len() < 2 {
        return Err(Error::invalid("ranking comparison needs at least two models"));
    }
    let (ability_rank, ability_ties) = rank(ability);
    let position = |order: &[String]| -> HashMap<String, usize> {
        order.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect()
    };
    let ability_pos = position(&ability_rank);
    let models: Vec<String> = ability.keys().cloned().collect();
    let mut passn = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let scores = models
            .iter()
            .map(|m| Ok((m.clone(), matrix.pass_at_n(m, n, matrix.theorems())?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let (order, ties) = rank(&scores);
        let pos = position(&order);
        let mut pairs = Vec::new();
        let (mut c, mut d) = (0, 0);
        for i in 0..models.len() {
            for j in i + 1..models.len() {
                let (a, b) = (&models[i], &models[j]);
                let same = (ability_pos[a] < ability_pos[b]) == (pos[a] < pos[b]);
                if same {
                    c += 1;
                } else {
                    d += 1;
                }
                pairs.push(PairVerdict {
                    first: a.clone(),
                    second: b.clone(),
                    concordant: same,
                });
            }
        }
        passn.push(PassNComparison {
            n,
            scores,
            rank: order,
            ties,
            concordant: c,
            discordant: d,
            kendall_tau: (c as f64 - d as f64) / (c + d) as f64,
            pairs,
        });
    }
    Ok(RankingComparison {
        models,
        ability: ability.clone(),
        ability_rank,
        ability_ties,
        passn,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunePoint {
    pub f: f64,
    pub eta: f64,
    /// Kendall tau of final abilities against the reference scores.
    pub tau: f64,
    pub ties: bool,
    pub mean_administrations: f64,
    pub all_converged: bool,
    /// Final ability per model, in input order.
    pub thetas: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_f: f64,
    pub best_eta: f64,
    /// One entry per grid point, in grid order.
    pub table: Vec<TunePoint>,
}

impl TuneResult {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(
            &mut w,
            path,
            &["f", "eta", "tau", "ties", "mean_administrations", "all_converged"],
        )?;
        for p in &self.table {
            write_row(
                &mut w,
                path,
                &[
                    &p.f.to_string(),
                    &p.eta.to_string(),
                    &p.tau.to_string(),
                    &p.ties.to_string(),
                    &p.mean_administrations.to_string(),
                    &p.all_converged.to_string(),
                ],
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Runs the adaptive loop for every model at every `(f, eta)` grid point and
/// returns the point whose final abilities best agree with `reference`
/// (highest tau, then fewest mean administrations, then earliest in the
/// grid).
pub fn tune_hyperparams<B: ExamineeBackend>(
    grid: &[(f64, f64)],
    bank: &ItemBank,
    backends: &[(String, B)],
    reference: &BTreeMap<String, f64>,
    base: &EvalConfig,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    if backends.len() < 2 {
        return Err(Error::invalid("tuning needs at least two models"));
    }
    let expected: Vec<f64> = backends
        .iter()
        .map(|(m, _)| {
            reference
                .get(m)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no reference score for model {m}")))
        })
        .collect::<Result<_>>()?;

    let table = grid
        .par_iter()
        .map(|&(f, eta)| {
            let cfg = EvalConfig { f, eta, ..base.clone() };
            let mut thetas = Vec::with_capacity(backends.len());
            let mut administrations = 0usize;
            let mut all_converged = true;
            for (model, backend) in backends {
                let report = run_adaptive(backend, bank, &cfg).map_err(|e| Error::Tuning {
                    f,
                    eta,
                    model: model.clone(),
                    source: Box::new(e),
                })?;
                administrations += report.administrations;
                all_converged &= report.converged;
                thetas.push((model.clone(), report.final_theta));
            }
            let got: Vec<f64> = thetas.iter().map(|t| t.1).collect();
            let tau = kendall_tau(&got, &expected).expect("at least two models");
            Ok(TunePoint {
                f,
                eta,
                tau: tau.tau,
                ties: tau.ties,
                mean_administrations: administrations as f64 / backends.len() as f64,
                all_converged,
                thetas,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = table
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.tau
                .total_cmp(&b.tau)
                .then_with(|| b.mean_administrations.total_cmp(&a.mean_administrations))
                .then_with(|| j.cmp(i))
        })
        .map(|(_, p)| p)
        .expect("grid is nonempty");
    Ok(TuneResult {
        best_f: best.f,
        best_eta: best.eta,
        table,
    })
}
