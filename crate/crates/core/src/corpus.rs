//! Theorem metadata, recorded prover attempts, and pass-rate primitives.
//!
//! Two on-disk layouts are supported for attempt data. The attempt-level
//! layout keeps every attempt in order, which Pass@N for N below the full
//! budget needs. The aggregate layout keeps only `(attempts, successes)` per
//! cell, which is all annotation needs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{csv_error, Error, Result};

/// Attempt budget used for prior abilities and the level pass tables.
pub const FULL_BUDGET: u32 = 128;

pub const ATTEMPT_HEADER: [&str; 4] = ["model_id", "theorem_id", "attempt_index", "success"];
pub const AGGREGATE_HEADER: [&str; 4] = ["model_id", "theorem_id", "attempts", "successes"];
pub const CORPUS_HEADER: [&str; 5] = [
    "theorem_id",
    "split",
    "provenance",
    "problem_type",
    "human_level",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Test,
    Valid,
    #[default]
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Imo,
    Aime,
    Amc,
    Math,
    Custom,
    #[default]
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemType {
    Algebra,
    NumberTheory,
    Induction,
    Other,
    #[default]
    Unknown,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Test, Split::Valid, Split::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Test => "test",
            Split::Valid => "valid",
            Split::Unknown => "",
        }
    }
}

impl Provenance {
    pub const ALL: [Provenance; 6] = [
        Provenance::Imo,
        Provenance::Aime,
        Provenance::Amc,
        Provenance::Math,
        Provenance::Custom,
        Provenance::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Imo => "IMO",
            Provenance::Aime => "AIME",
            Provenance::Amc => "AMC",
            Provenance::Math => "MATH",
            Provenance::Custom => "CUSTOM",
            Provenance::Unknown => "",
        }
    }
}

impl ProblemType {
    pub const ALL: [ProblemType; 5] = [
        ProblemType::Algebra,
        ProblemType::NumberTheory,
        ProblemType::Induction,
        ProblemType::Other,
        ProblemType::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemType::Algebra => "algebra",
            ProblemType::NumberTheory => "number_theory",
            ProblemType::Induction => "induction",
            ProblemType::Other => "other",
            ProblemType::Unknown => "",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "test" => Ok(Split::Test),
            "valid" | "validation" => Ok(Split::Valid),
            "" | "unknown" => Ok(Split::Unknown),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IMO" => Ok(Provenance::Imo),
            "AIME" => Ok(Provenance::Aime),
            "AMC" => Ok(Provenance::Amc),
            "MATH" => Ok(Provenance::Math),
            "CUSTOM" => Ok(Provenance::Custom),
            "" | "UNKNOWN" => Ok(Provenance::Unknown),
            other => Err(format!("unknown provenance {other:?}")),
        }
    }
}

impl FromStr for ProblemType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "algebra" => Ok(ProblemType::Algebra),
            "number_theory" | "numbertheory" => Ok(ProblemType::NumberTheory),
            "induction" => Ok(ProblemType::Induction),
            "other" | "others" => Ok(ProblemType::Other),
            "" | "unknown" => Ok(ProblemType::Unknown),
            other => Err(format!("unknown problem type {other:?}")),
        }
    }
}

macro_rules! display_via_as_str {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.as_str() {
                    "" => f.write_str("unknown"),
                    s => f.write_str(s),
                }
            }
        }
    )*};
}
display_via_as_str!(Split, Provenance, ProblemType);

/// Metadata for one benchmark theorem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub id: String,
    /// Formal statement handed to external provers. Not part of the corpus
    /// file.
    pub statement: Option<String>,
    pub split: Split,
    pub provenance: Provenance,
    pub problem_type: ProblemType,
    /// Human-assigned difficulty level (1 to 5), when the source provides one.
    pub human_level: Option<u8>,
}

impl TheoremRecord {
    pub fn new(id: impl Into<String>) -> Self {
        TheoremRecord {
            id: id.into(),
            statement: None,
            split: Split::Unknown,
            provenance: Provenance::Unknown,
            problem_type: ProblemType::Unknown,
            human_level: None,
        }
    }
}

/// An ordered collection of theorem records with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<TheoremRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(records: Vec<TheoremRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, rec) in records.iter().enumerate() {
            if rec.id.is_empty() {
                return Err(Error::invalid("empty theorem id in corpus"));
            }
            if let Some(level) = rec.human_level {
                if !(1..=5).contains(&level) {
                    return Err(Error::invalid(format!(
                        "human level {level} for {} outside 1..=5",
                        rec.id
                    )));
                }
            }
            if index.insert(rec.id.clone(), i).is_some() {
                return Err(Error::Duplicate(format!("theorem {}", rec.id)));
            }
        }
        Ok(Corpus { records, index })
    }

    pub fn records(&self) -> &[TheoremRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&TheoremRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = open_csv(path, &CORPUS_HEADER)?;
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| csv_error(path, e))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message,
            };
            let id = row[0].trim().to_string();
            if id.is_empty() {
                return Err(bad("empty theorem_id".into()));
            }
            let human_level = match row[4].trim() {
                "" => None,
                s => Some(
                    s.parse::<u8>()
                        .map_err(|_| bad(format!("bad human_level {s:?}")))?,
                ),
            };
            records.push(TheoremRecord {
                id,
                statement: None,
                split: row[1].parse().map_err(bad)?,
                provenance: row[2].parse().map_err(bad)?,
                problem_type: row[3].parse().map_err(bad)?,
                human_level,
            });
        }
        Corpus::new(records)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &CORPUS_HEADER)?;
        for r in &self.records {
            let level = r.human_level.map(|l| l.to_string()).unwrap_or_default();
            write_row(
                &mut w,
                path,
                &[
                    r.id.as_str(),
                    r.split.as_str(),
                    r.provenance.as_str(),
                    r.problem_type.as_str(),
                    level.as_str(),
                ],
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// One recorded proof attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptRecord {
    pub model_id: String,
    pub theorem_id: String,
    /// 1-based position of the attempt.
    pub attempt_index: u32,
    pub success: bool,
}

/// Success count over a fixed number of attempts for one (model, theorem).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub attempts: u32,
    pub successes: u32,
}

impl AggregateCell {
    pub fn new(attempts: u32, successes: u32) -> Result<Self> {
        if attempts == 0 {
            return Err(Error::invalid("cell with zero attempts"));
        }
        if successes > attempts {
            return Err(Error::invalid(format!(
                "{successes} successes exceed {attempts} attempts"
            )));
        }
        Ok(AggregateCell {
            attempts,
            successes,
        })
    }

    /// Attempt success rate, divided once from the integer counts.
    pub fn rate(&self) -> f64 {
        f64::from(self.successes) / f64::from(self.attempts)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct CellKey(usize, usize);

/// Recorded outcomes for every (model, theorem) pair that was attempted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseMatrix {
    models: Vec<String>,
    theorems: Vec<String>,
    model_index: HashMap<String, usize>,
    theorem_index: HashMap<String, usize>,
    cells: BTreeMap<CellKey, AggregateCell>,
    detail: BTreeMap<CellKey, Vec<bool>>,
    /// Cell insertion order; saving in this order reproduces the model and
    /// theorem orders on reload.
    order: Vec<CellKey>,
}

/// Incremental builder keeping first-appearance order of models and theorems.
#[derive(Default)]
struct Ids {
    list: Vec<String>,
    index: HashMap<String, usize>,
}

impl Ids {
    fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.list.len();
        self.list.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }
}

impl ResponseMatrix {
    fn assemble(
        models: Ids,
        theorems: Ids,
        cells: BTreeMap<CellKey, AggregateCell>,
        detail: BTreeMap<CellKey, Vec<bool>>,
        order: Vec<CellKey>,
    ) -> Self {
        ResponseMatrix {
            models: models.list,
            theorems: theorems.list,
            model_index: models.index,
            theorem_index: theorems.index,
            cells,
            detail,
            order,
        }
    }

    /// Builds a matrix from aggregate cells. Duplicate keys are rejected.
    pub fn from_aggregates<I, M, T>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (M, T, AggregateCell)>,
        M: AsRef<str>,
        T: AsRef<str>,
    {
        let (mut models, mut theorems) = (Ids::default(), Ids::default());
        let mut cells = BTreeMap::new();
        let mut order = Vec::new();
        for (m, t, cell) in rows {
            let (m, t) = (m.as_ref(), t.as_ref());
            AggregateCell::new(cell.attempts, cell.successes)?;
            let key = CellKey(models.intern(m), theorems.intern(t));
            if cells.insert(key.clone(), cell).is_some() {
                return Err(Error::Duplicate(format!("cell ({m}, {t})")));
            }
            order.push(key);
        }
        Ok(Self::assemble(models, theorems, cells, BTreeMap::new(), order))
    }

    /// Builds a matrix from individual attempts, deriving aggregates. Every
    /// cell's attempt indices must be exactly `1..=k`.
    pub fn from_attempts<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = AttemptRecord>,
    {
        let (mut models, mut theorems) = (Ids::default(), Ids::default());
        let mut staged: BTreeMap<CellKey, BTreeMap<u32, bool>> = BTreeMap::new();
        let mut order = Vec::new();
        for rec in rows {
            if rec.attempt_index == 0 {
                return Err(Error::invalid(format!(
                    "attempt_index 0 for ({}, {}); indices start at 1",
                    rec.model_id, rec.theorem_id
                )));
            }
            let key = CellKey(models.intern(&rec.model_id), theorems.intern(&rec.theorem_id));
            if !staged.contains_key(&key) {
                order.push(key.clone());
            }
            if staged
                .entry(key)
                .or_default()
                .insert(rec.attempt_index, rec.success)
                .is_some()
            {
                return Err(Error::Duplicate(format!(
                    "attempt ({}, {}, {})",
                    rec.model_id, rec.theorem_id, rec.attempt_index
                )));
            }
        }
        let mut cells = BTreeMap::new();
        let mut detail = BTreeMap::new();
        for (key, attempts) in staged {
            let mut outcomes = Vec::with_capacity(attempts.len());
            for (expected, (index, success)) in (1u32..).zip(attempts) {
                if index != expected {
                    return Err(Error::NonContiguous {
                        model: models.list[key.0].clone(),
                        theorem: theorems.list[key.1].clone(),
                        expected,
                        found: index,
                    });
                }
                outcomes.push(success);
            }
            let successes = outcomes.iter().filter(|&&s| s).count() as u32;
            cells.insert(key.clone(), AggregateCell::new(outcomes.len() as u32, successes)?);
            detail.insert(key, outcomes);
        }
        Ok(Self::assemble(models, theorems, cells, detail, order))
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn theorems(&self) -> &[String] {
        &self.theorems
    }

    pub fn has_model(&self, model: &str) -> bool {
        self.model_index.contains_key(model)
    }

    /// Number of populated cells.
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// True when every cell carries its ordered attempt outcomes.
    pub fn has_full_detail(&self) -> bool {
        !self.cells.is_empty() && self.detail.len() == self.cells.len()
    }

    fn key(&self, model: &str, theorem: &str) -> Option<CellKey> {
        Some(CellKey(
            *self.model_index.get(model)?,
            *self.theorem_index.get(theorem)?,
        ))
    }

    pub fn cell(&self, model: &str, theorem: &str) -> Option<AggregateCell> {
        self.key(model, theorem).and_then(|k| self.cells.get(&k).copied())
    }

    pub fn detail(&self, model: &str, theorem: &str) -> Option<&[bool]> {
        self.key(model, theorem)
            .and_then(|k| self.detail.get(&k))
            .map(Vec::as_slice)
    }

    fn require_cell(&self, model: &str, theorem: &str) -> Result<AggregateCell> {
        self.cell(model, theorem).ok_or_else(|| Error::MissingCell {
            model: model.to_string(),
            theorem: theorem.to_string(),
        })
    }

    pub fn attempt_success_rate(&self, model: &str, theorem: &str) -> Result<f64> {
        Ok(self.require_cell(model, theorem)?.rate())
    }

    /// Whether the first `n` attempts of a cell contain a success.
    pub fn solved_within(&self, model: &str, theorem: &str, n: u32) -> Result<bool> {
        let cell = self.require_cell(model, theorem)?;
        if let Some(outcomes) = self.detail(model, theorem) {
            if outcomes.len() >= n as usize {
                return Ok(outcomes[..n as usize].iter().any(|&s| s));
            }
        }
        if n == cell.attempts {
            return Ok(cell.successes > 0);
        }
        Err(Error::InsufficientDepth {
            model: model.to_string(),
            theorem: theorem.to_string(),
            n,
            available: self.detail(model, theorem).map_or(0, |d| d.len() as u32),
        })
    }

    /// Fraction of `theorems` with at least one success in the model's first
    /// `n` attempts.
    pub fn pass_at_n<S: AsRef<str>>(&self, model: &str, n: u32, theorems: &[S]) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("pass@n needs n >= 1"));
        }
        if theorems.is_empty() {
            return Err(Error::invalid("pass@n over an empty theorem set"));
        }
        if !self.has_model(model) {
            return Err(Error::UnknownModel(model.to_string()));
        }
        let mut solved = 0usize;
        for t in theorems {
            if self.solved_within(model, t.as_ref(), n)? {
                solved += 1;
            }
        }
        Ok(solved as f64 / theorems.len() as f64)
    }

    /// Pass@budget over every theorem in the matrix, used as the model's
    /// prior ability during annotation.
    pub fn prior_ability_at(&self, model: &str, budget: u32) -> Result<f64> {
        for t in &self.theorems {
            let cell = self.require_cell(model, t)?;
            if cell.attempts < budget {
                return Err(Error::InsufficientDepth {
                    model: model.to_string(),
                    theorem: t.clone(),
                    n: budget,
                    available: cell.attempts,
                });
            }
        }
        self.pass_at_n(model, budget, &self.theorems)
    }

    /// Pass@128 over the full item bank.
    pub fn prior_ability(&self, model: &str) -> Result<f64> {
        self.prior_ability_at(model, FULL_BUDGET)
    }

    /// Attempt budget shared by every cell of `models`, if there is one.
    pub fn common_budget<S: AsRef<str>>(&self, models: &[S]) -> Result<u32> {
        let mut budget = None;
        for m in models {
            for t in &self.theorems {
                let cell = self.require_cell(m.as_ref(), t)?;
                match budget {
                    None => budget = Some(cell.attempts),
                    Some(b) if b != cell.attempts => {
                        return Err(Error::invalid(format!(
                            "unequal attempt budgets ({b} vs {} at ({}, {t}))",
                            cell.attempts,
                            m.as_ref()
                        )))
                    }
                    _ => {}
                }
            }
        }
        budget.ok_or_else(|| Error::invalid("no models given"))
    }

    /// Restricts the matrix to the given models, keeping theorem order.
    pub fn select_models<S: AsRef<str>>(&self, models: &[S]) -> Result<ResponseMatrix> {
        let mut rows = Vec::new();
        let mut detailed = Vec::new();
        for m in models {
            let m = m.as_ref();
            if !self.has_model(m) {
                return Err(Error::UnknownModel(m.to_string()));
            }
            for t in &self.theorems {
                if let Some(cell) = self.cell(m, t) {
                    rows.push((m.to_string(), t.clone(), cell));
                    if let Some(d) = self.detail(m, t) {
                        detailed.push((m.to_string(), t.clone(), d.to_vec()));
                    }
                }
            }
        }
        let mut out = ResponseMatrix::from_aggregates(rows)?;
        for (m, t, d) in detailed {
            let key = out.key(&m, &t).expect("cell was just inserted");
            out.detail.insert(key, d);
        }
        Ok(out)
    }

    /// Iterates cells in (model, theorem) order of first appearance.
    pub fn iter_cells(&self) -> impl Iterator<Item = (&str, &str, AggregateCell)> + '_ {
        self.order.iter().map(move |k| {
            (
                self.models[k.0].as_str(),
                self.theorems[k.1].as_str(),
                self.cells[k],
            )
        })
    }

    pub fn load_attempts(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = open_csv(path, &ATTEMPT_HEADER)?;
        let mut rows = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| csv_error(path, e))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message,
            };
            let (model, theorem) = (row[0].trim(), row[1].trim());
            if model.is_empty() || theorem.is_empty() {
                return Err(bad("empty model_id or theorem_id".into()));
            }
            let attempt_index = row[2]
                .trim()
                .parse::<u32>()
                .map_err(|_| bad(format!("bad attempt_index {:?}", &row[2])))?;
            if attempt_index == 0 {
                return Err(bad("attempt_index must be positive".into()));
            }
            let success = match row[3].trim() {
                "1" => true,
                "0" => false,
                other => return Err(bad(format!("success must be 0 or 1, got {other:?}"))),
            };
            rows.push(AttemptRecord {
                model_id: model.to_string(),
                theorem_id: theorem.to_string(),
                attempt_index,
                success,
            });
        }
        if rows.is_empty() {
            return Err(Error::NoRecords(path.to_path_buf()));
        }
        ResponseMatrix::from_attempts(rows)
    }

    pub fn load_aggregates(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = open_csv(path, &AGGREGATE_HEADER)?;
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for row in reader.records() {
            let row = row.map_err(|e| csv_error(path, e))?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message,
            };
            let (model, theorem) = (row[0].trim(), row[1].trim());
            if model.is_empty() || theorem.is_empty() {
                return Err(bad("empty model_id or theorem_id".into()));
            }
            let count = |i: usize, name: &str| {
                row[i]
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| bad(format!("bad {name} {:?}", &row[i])))
            };
            let (attempts, successes) = (count(2, "attempts")?, count(3, "successes")?);
            let cell = AggregateCell::new(attempts, successes).map_err(|e| bad(e.to_string()))?;
            if !seen.insert((model.to_string(), theorem.to_string())) {
                return Err(Error::Duplicate(format!(
                    "cell ({model}, {theorem}) at {}:{line}",
                    path.display()
                )));
            }
            rows.push((model.to_string(), theorem.to_string(), cell));
        }
        if rows.is_empty() {
            return Err(Error::NoRecords(path.to_path_buf()));
        }
        ResponseMatrix::from_aggregates(rows)
    }

    /// Loads either layout, chosen by the header line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut first = String::new();
        BufReader::new(file)
            .read_line(&mut first)
            .map_err(|e| Error::io(path, e))?;
        let header: Vec<&str> = first.trim().split(',').map(str::trim).collect();
        if header == ATTEMPT_HEADER {
            Self::load_attempts(path)
        } else {
            Self::load_aggregates(path)
        }
    }

    /// Writes every attempt. Fails if any cell lacks attempt detail.
    pub fn save_attempts(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if !self.has_full_detail() && !self.cells.is_empty() {
            return Err(Error::invalid(
                "attempt-level output needs attempt detail for every cell",
            ));
        }
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &ATTEMPT_HEADER)?;
        for key in &self.order {
            let outcomes = &self.detail[key];
            for (i, &s) in outcomes.iter().enumerate() {
                let idx = (i + 1).to_string();
                write_row(
                    &mut w,
                    path,
                    &[
                        self.models[key.0].as_str(),
                        self.theorems[key.1].as_str(),
                        idx.as_str(),
                        if s { "1" } else { "0" },
                    ],
                )?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn save_aggregates(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &AGGREGATE_HEADER)?;
        for (m, t, c) in self.iter_cells() {
            write_row(
                &mut w,
                path,
                &[m, t, &c.attempts.to_string(), &c.successes.to_string()],
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Saves in the attempt-level layout when every cell has detail,
    /// otherwise in the aggregate layout.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.has_full_detail() {
            self.save_attempts(path)
        } else {
            self.save_aggregates(path)
        }
    }
}

pub(crate) fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?;
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != header {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {:?}, found {:?}", header.join(","), found.join(",")),
        });
    }
    Ok(reader)
}

pub(crate) fn create_csv(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

pub(crate) fn write_row<W: Write>(w: &mut csv::Writer<W>, path: &Path, row: &[&str]) -> Result<()> {
    w.write_record(row).map_err(|e| csv_error(path, e))
}
