//! Per-theorem difficulty and discrimination from a multi-model response
//! matrix, linear normalization, and grading into difficulty levels.
//!
//! Difficulty starts from the mean attempt success rate across the annotation
//! models, lowered by `epsilon / prior` for every model that proved the
//! theorem at least once, and is mapped through `-p / (1 - p)`. Theorems no
//! annotation model proved get raw difficulty 0, which the normalization
//! sends to exactly 1. Discrimination is the mean slope of success rate
//! against prior ability over all model pairs.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{create_csv, open_csv, write_row, ResponseMatrix};
use crate::error::{csv_error, Error, Result};

pub const BANK_HEADER: [&str; 7] = [
    "theorem_id",
    "difficulty",
    "discrimination",
    "level",
    "raw_difficulty",
    "raw_discrimination",
    "zero_success",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationConfig {
    /// Weight of the solved-by-weak-model correction. Zero disables it.
    pub epsilon: f64,
    /// Corrected rates of proven theorems are clamped into
    /// `[pprime_floor, pprime_ceiling]` before the difficulty map.
    pub pprime_floor: f64,
    pub pprime_ceiling: f64,
    /// Number of levels; the top level holds the zero-success theorems.
    pub level_count: u8,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            epsilon: 0.005,
            pprime_floor: 1e-6,
            pprime_ceiling: 0.9999,
            level_count: 4,
        }
    }
}

impl AnnotationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if !(0.0 <= self.pprime_floor
            && self.pprime_floor < self.pprime_ceiling
            && self.pprime_ceiling < 1.0)
        {
            return Err(Error::invalid(format!(
                "need 0 <= pprime_floor ({}) < pprime_ceiling ({}) < 1",
                self.pprime_floor, self.pprime_ceiling
            )));
        }
        if self.level_count < 2 {
            return Err(Error::invalid("level_count must be at least 2"));
        }
        Ok(())
    }
}

/// Annotated parameters of one theorem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemParams {
    pub theorem_id: String,
    /// Unnormalized difficulty; absent for banks imported from published
    /// tables that only carry normalized values.
    pub raw_difficulty: Option<f64>,
    pub raw_discrimination: Option<f64>,
    /// Normalized difficulty in `[0, 1]`.
    pub difficulty: f64,
    /// Normalized discrimination in `[-1, 1]`.
    pub discrimination: f64,
    /// Grade level, once graded.
    pub level: Option<u8>,
    /// No annotation model proved the theorem.
    pub zero_success: bool,
}

/// Raw metrics of one theorem before normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawItem {
    pub theorem_id: String,
    pub raw_difficulty: f64,
    pub raw_discrimination: f64,
    pub zero_success: bool,
}

/// Anchors of the linear maps applied by [`normalize_bank`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub raw_difficulty_min: f64,
    pub raw_difficulty_max: f64,
    pub raw_discrimination_max_abs: f64,
}

impl NormalizationRecord {
    pub fn denormalize_difficulty(&self, difficulty: f64) -> f64 {
        self.raw_difficulty_min + difficulty * (self.raw_difficulty_max - self.raw_difficulty_min)
    }

    pub fn denormalize_discrimination(&self, discrimination: f64) -> f64 {
        discrimination * self.raw_discrimination_max_abs
    }
}

/// The annotated theorems available for selection, in a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemBank {
    items: Vec<ItemParams>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    /// Present for banks produced by [`normalize_bank`].
    pub normalization: Option<NormalizationRecord>,
}

impl ItemBank {
    pub fn new(items: Vec<ItemParams>) -> Result<Self> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, it) in items.iter().enumerate() {
            if it.theorem_id.is_empty() {
                return Err(Error::invalid("empty theorem id in bank"));
            }
            if !(0.0..=1.0).contains(&it.difficulty) {
                return Err(Error::invalid(format!(
                    "difficulty {} of {} outside [0, 1]",
                    it.difficulty, it.theorem_id
                )));
            }
            if !(-1.0..=1.0).contains(&it.discrimination) {
                return Err(Error::invalid(format!(
                    "discrimination {} of {} outside [-1, 1]",
                    it.discrimination, it.theorem_id
                )));
            }
            if it.zero_success != (it.difficulty == 1.0) {
                return Err(Error::invalid(format!(
                    "{}: zero_success must hold exactly when difficulty is 1",
                    it.theorem_id
                )));
            }
            if index.insert(it.theorem_id.clone(), i).is_some() {
                return Err(Error::Duplicate(format!("theorem {} in bank", it.theorem_id)));
            }
        }
        Ok(ItemBank {
            items,
            index,
            normalization: None,
        })
    }

    pub fn items(&self) -> &[ItemParams] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&ItemParams> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Keeps only the listed theorems, in bank order.
    pub fn restrict<S: AsRef<str>>(&self, ids: &[S]) -> Result<ItemBank> {
        let wanted: std::collections::HashSet<&str> = ids.iter().map(AsRef::as_ref).collect();
        for id in &wanted {
            if !self.index.contains_key(*id) {
                return Err(Error::invalid(format!("theorem {id} not in bank")));
            }
        }
        let items = self
            .items
            .iter()
            .filter(|it| wanted.contains(it.theorem_id.as_str()))
            .cloned()
            .collect();
        ItemBank::new(items)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = open_csv(path, &BANK_HEADER)?;
        let mut items = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| csv_error(path, e))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message,
            };
            let real = |i: usize| -> Result<f64> {
                row[i]
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("bad {} {:?}", BANK_HEADER[i], &row[i])))
            };
            let optional = |i: usize| -> Result<Option<f64>> {
                match row[i].trim() {
                    "" => Ok(None),
                    _ => real(i).map(Some),
                }
            };
            let level = match row[3].trim() {
                "" => None,
                s => Some(s.parse::<u8>().map_err(|_| bad(format!("bad level {s:?}")))?),
            };
            let zero_success = match row[6].trim() {
                "true" | "1" => true,
                "false" | "0" => false,
                s => return Err(bad(format!("bad zero_success {s:?}"))),
            };
            items.push(ItemParams {
                theorem_id: row[0].trim().to_string(),
                difficulty: real(1)?,
                discrimination: real(2)?,
                level,
                raw_difficulty: optional(4)?,
                raw_discrimination: optional(5)?,
                zero_success,
            });
        }
        ItemBank::new(items)
    }

    /// Writes the bank with full-precision values.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &BANK_HEADER)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for it in &self.items {
            write_row(
                &mut w,
                path,
                &[
                    &it.theorem_id,
                    &it.difficulty.to_string(),
                    &it.discrimination.to_string(),
                    &it.level.map(|l| l.to_string()).unwrap_or_default(),
                    &opt(it.raw_difficulty),
                    &opt(it.raw_discrimination),
                    if it.zero_success { "true" } else { "false" },
                ],
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes the four-decimal presentation form:
    /// `theorem_id,difficulty,discrimination,level`.
    pub fn save_display(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &["theorem_id", "difficulty", "discrimination", "level"])?;
        for it in &self.items {
            write_row(
                &mut w,
                path,
                &[
                    &it.theorem_id,
                    &format!("{:.4}", it.difficulty),
                    &format!("{:.4}", it.discrimination),
                    &it.level.map(|l| format!("Level {l}")).unwrap_or_default(),
                ],
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| (it.theorem_id.clone(), i))
            .collect();
    }
}

/// Mean rate minus `epsilon * sum(1 / prior)` over the models that proved the
/// theorem at least once. Not clamped.
pub fn corrected_success(mean_rate: f64, per_model_rates: &[f64], priors: &[f64], epsilon: f64) -> Result<f64> {
    if per_model_rates.len() != priors.len() {
        return Err(Error::invalid(format!(
            "{} rates but {} priors",
            per_model_rates.len(),
            priors.len()
        )));
    }
    if let Some(p) = priors.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::invalid(format!("prior ability {p} must be positive")));
    }
    let correction: f64 = per_model_rates
        .iter()
        .zip(priors)
        .filter(|(&r, _)| r > 0.0)
        .map(|(_, &prior)| 1.0 / prior)
        .sum();
    Ok(mean_rate - epsilon * correction)
}

/// Zero for theorems nobody proved, else `-p / (1 - p)` on the clamped
/// corrected rate (always strictly negative).
pub fn raw_difficulty(p_prime: f64, zero_success: bool, cfg: &AnnotationConfig) -> f64 {
    if zero_success {
        return 0.0;
    }
    let p = p_prime.clamp(cfg.pprime_floor, cfg.pprime_ceiling);
    -p / (1.0 - p)
}

/// Mean over all model pairs of `(P_i - P_j) / (prior_i - prior_j)`.
pub fn raw_discrimination(per_model_rates: &[f64], priors: &[f64]) -> Result<f64> {
    let n = per_model_rates.len();
    if n != priors.len() {
        return Err(Error::invalid(format!("{n} rates but {} priors", priors.len())));
    }
    if n < 2 {
        return Err(Error::invalid("discrimination needs at least two models"));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let spread = priors[i] - priors[j];
            if spread == 0.0 {
                return Err(Error::invalid(format!(
                    "duplicate prior ability {} makes discrimination undefined",
                    priors[i]
                )));
            }
            total += (per_model_rates[i] - per_model_rates[j]) / spread;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Linearly maps raw difficulty onto `[0, 1]` and raw discrimination onto
/// `[-1, 1]`.
///
/// The difficulty map sends the bank minimum to 0 and raw 0 to 1. Raw 0 is
/// where zero-success theorems sit and the supremum of `-p / (1 - p)`, so
/// only zero-success theorems ever reach difficulty 1. Discrimination is
/// divided by its largest magnitude so signs and exact zeros survive.
pub fn normalize_bank(raw: Vec<RawItem>) -> Result<ItemBank> {
    if raw.is_empty() {
        return Err(Error::invalid("cannot normalize an empty bank"));
    }
    let raw_min = raw.iter().map(|r| r.raw_difficulty).fold(f64::INFINITY, f64::min);
    let raw_max = 0.0;
    if let Some(r) = raw.iter().find(|r| r.raw_difficulty > 0.0 || !r.raw_difficulty.is_finite()) {
        return Err(Error::invalid(format!(
            "raw difficulty {} of {} must be finite and <= 0",
            r.raw_difficulty, r.theorem_id
        )));
    }
    if !(raw_min < raw_max) {
        return Err(Error::invalid(
            "degenerate bank: fewer than two distinct difficulty values",
        ));
    }
    let max_abs = raw
        .iter()
        .map(|r| r.raw_discrimination.abs())
        .fold(0.0, f64::max);
    let span = raw_max - raw_min;
    let items = raw
        .into_iter()
        .map(|r| ItemParams {
            difficulty: (r.raw_difficulty - raw_min) / span,
            discrimination: if max_abs > 0.0 {
                r.raw_discrimination / max_abs
            } else {
                0.0
            },
            theorem_id: r.theorem_id,
            raw_difficulty: Some(r.raw_difficulty),
            raw_discrimination: Some(r.raw_discrimination),
            level: None,
            zero_success: r.zero_success,
        })
        .collect();
    let mut bank = ItemBank::new(items)?;
    bank.normalization = Some(NormalizationRecord {
        raw_difficulty_min: raw_min,
        raw_difficulty_max: raw_max,
        raw_discrimination_max_abs: max_abs,
    });
    Ok(bank)
}

/// Raw metrics for one theorem given each model's success rate and whether
/// any model solved it.
pub fn raw_item(
    theorem_id: &str,
    per_model_rates: &[f64],
    priors: &[f64],
    zero_success: bool,
    cfg: &AnnotationConfig,
) -> Result<RawItem> {
    let mean = per_model_rates.iter().sum::<f64>() / per_model_rates.len() as f64;
    let p_prime = corrected_success(mean, per_model_rates, priors, cfg.epsilon)?;
    Ok(RawItem {
        theorem_id: theorem_id.to_string(),
        raw_difficulty: raw_difficulty(p_prime, zero_success, cfg),
        raw_discrimination: raw_discrimination(per_model_rates, priors)?,
        zero_success,
    })
}

/// Orders models by prior ability, rejecting ties and non-positive priors.
fn sorted_by_prior(models: &[String], priors: &[f64]) -> Result<(Vec<String>, Vec<f64>)> {
    let mut pairs: Vec<(String, f64)> = models.iter().cloned().zip(priors.iter().copied()).collect();
    for (m, p) in &pairs {
        if !(*p > 0.0) {
            return Err(Error::invalid(format!(
                "annotation model {m} has prior ability {p}; priors must be positive"
            )));
        }
    }
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
    for w in pairs.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(Error::invalid(format!(
                "annotation models {} and {} share prior ability {}",
                w[0].0, w[1].0, w[0].1
            )));
        }
    }
    Ok(pairs.into_iter().unzip())
}

/// Annotates every theorem of the matrix using the given models, with prior
/// abilities taken as each model's pass rate at the common attempt budget.
pub fn annotate<S: AsRef<str>>(matrix: &ResponseMatrix, models: &[S], cfg: &AnnotationConfig) -> Result<ItemBank> {
    let models: Vec<String> = models.iter().map(|m| m.as_ref().to_string()).collect();
    for m in &models {
        if !matrix.has_model(m) {
            return Err(Error::UnknownModel(m.clone()));
        }
    }
    let budget = matrix.common_budget(&models)?;
    let priors = models
        .iter()
        .map(|m| matrix.prior_ability_at(m, budget))
        .collect::<Result<Vec<_>>>()?;
    annotate_with_priors(matrix, &models, &priors, cfg)
}

/// [`annotate`] with caller-supplied prior abilities.
pub fn annotate_with_priors<S: AsRef<str>>(
    matrix: &ResponseMatrix,
    models: &[S],
    priors: &[f64],
    cfg: &AnnotationConfig,
) -> Result<ItemBank> {
    cfg.validate()?;
    let models: Vec<String> = models.iter().map(|m| m.as_ref().to_string()).collect();
    if models.len() < 2 {
        return Err(Error::invalid("annotation needs at least two models"));
    }
    if models.len() != priors.len() {
        return Err(Error::invalid("one prior ability per annotation model"));
    }
    let (models, priors) = sorted_by_prior(&models, priors)?;
    matrix.common_budget(&models)?;

    let raw = matrix
        .theorems()
        .par_iter()
        .map(|t| {
            let mut rates = Vec::with_capacity(models.len());
            let mut any_success = false;
            for m in &models {
                let cell = matrix.cell(m, t).ok_or_else(|| Error::MissingCell {
                    model: m.clone(),
                    theorem: t.clone(),
                })?;
                any_success |= cell.successes > 0;
                rates.push(cell.rate());
            }
            raw_item(t, &rates, &priors, !any_success, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_bank(raw)
}

/// Level counts and the largest difficulty in each level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    /// Items per level, level 1 first.
    pub counts: Vec<usize>,
    /// Realized upper difficulty bound of each level (`None` when empty).
    pub upper_bounds: Vec<Option<f64>>,
}

impl Grading {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &["level", "count", "lower_exclusive", "upper_inclusive"])?;
        let mut lower: Option<f64> = None;
        for (i, (count, upper)) in self.counts.iter().zip(&self.upper_bounds).enumerate() {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
            write_row(
                &mut w,
                path,
                &[&(i + 1).to_string(), &count.to_string(), &fmt(lower), &fmt(*upper)],
            )?;
            lower = upper.or(lower);
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Assigns levels: the top level takes every zero-success theorem; the rest,
/// sorted by difficulty (ties by id), are cut into equal-count groups with
/// any remainder going to the harder groups.
pub fn grade(bank: &mut ItemBank, level_count: u8) -> Result<Grading> {
    if bank.is_empty() {
        return Err(Error::invalid("cannot grade an empty bank"));
    }
    if level_count < 2 {
        return Err(Error::invalid("level_count must be at least 2"));
    }
    let top = level_count;
    let groups = usize::from(level_count - 1);
    let mut proven: Vec<usize> = (0..bank.items.len())
        .filter(|&i| !bank.items[i].zero_success)
        .collect();
    proven.sort_by(|&x, &y| {
        let (a, b) = (&bank.items[x], &bank.items[y]);
        a.difficulty
            .total_cmp(&b.difficulty)
            .then_with(|| a.theorem_id.cmp(&b.theorem_id))
    });
    let base = proven.len() / groups;
    let remainder = proven.len() % groups;
    let mut counts = vec![0usize; usize::from(level_count)];
    let mut upper_bounds = vec![None; usize::from(level_count)];
    let mut cursor = 0;
    for g in 0..groups {
        let size = base + usize::from(g >= groups - remainder);
        for &i in &proven[cursor..cursor + size] {
            bank.items[i].level = Some(g as u8 + 1);
        }
        if size > 0 {
            upper_bounds[g] = Some(bank.items[proven[cursor + size - 1]].difficulty);
        }
        counts[g] = size;
        cursor += size;
    }
    for it in bank.items.iter_mut().filter(|it| it.zero_success) {
        it.level = Some(top);
        counts[usize::from(top) - 1] += 1;
        upper_bounds[usize::from(top) - 1] = Some(1.0);
    }
    bank.rebuild_index();
    Ok(Grading {
        counts,
        upper_bounds,
    })
}
