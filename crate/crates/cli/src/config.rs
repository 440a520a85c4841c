//! Run configuration.
//!
//! A run is described by one TOML file. Every key is optional and falls back
//! to the defaults below; nested keys may be written either as sections or
//! as dotted keys (`eval.window = 10`). Relative paths are resolved against
//! the directory holding the config file.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! corpus = "corpus.csv"        # theorem metadata
//! matrix = "attempts.csv"      # attempt-level or aggregate results
//! bank = "bank.csv"            # annotated bank
//! statements = "stmts.csv"     # theorem_id,statement for external provers
//! abilities = "abilities.csv"  # model_id,ability for rank comparison
//! out = "out"
//!
//! [annotation]
//! models = ["m1", "m2", "m3", "m4"]
//! epsilon = 0.005
//!
//! [eval]
//! eta = 0.004
//! window = 50
//!
//! [backend]
//! kind = "replay"              # or "synthetic", "external"
//! model = "m1"
//!
//! [simulate]
//! examinees = [0.05, 0.15, 0.25]
//!
//! [analyze]
//! exports = ["levels", "categories", "scatter", "concordance"]
//! ```

use std::path::{Path, PathBuf};

use proofgauge::analysis::LevelSubset;
use proofgauge::{AnnotationConfig, EvalConfig};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for synthetic examinees and simulated banks.
    pub seed: u64,
    pub paths: Paths,
    pub annotation: AnnotationSection,
    pub eval: EvalConfig,
    pub backend: Option<BackendSection>,
    pub simulate: SimulateSection,
    pub analyze: AnalyzeSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub bank: Option<PathBuf>,
    pub statements: Option<PathBuf>,
    pub abilities: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationSection {
    /// Models whose results define the metrics; all models when empty.
    pub models: Vec<String>,
    pub epsilon: Option<f64>,
    pub pprime_floor: Option<f64>,
    pub pprime_ceiling: Option<f64>,
    pub level_count: Option<u8>,
}

impl AnnotationSection {
    pub fn settings(&self) -> AnnotationConfig {
        let d = AnnotationConfig::default();
        AnnotationConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            pprime_floor: self.pprime_floor.unwrap_or(d.pprime_floor),
            pprime_ceiling: self.pprime_ceiling.unwrap_or(d.pprime_ceiling),
            level_count: self.level_count.unwrap_or(d.level_count),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSection {
    /// Recorded results of one model from `paths.matrix`.
    Replay { model: String },
    /// Simulated prover answering with the bank's own parameters, the
    /// discrimination scaled by `sharpness`.
    Synthetic {
        true_theta: f64,
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    /// Shell command speaking the JSON request/response protocol.
    External {
        command: String,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// True abilities of the simulated examinees.
    pub examinees: Vec<f64>,
    pub bank_size: usize,
    pub sharpness: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            examinees: (0..10).map(|i| f64::from(5 + 10 * i) / 100.0).collect(),
            bank_size: 488,
            sharpness: default_sharpness(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Export {
    Levels,
    Categories,
    Scatter,
    Concordance,
}

impl Export {
    pub const ALL: [Export; 4] = [Export::Levels, Export::Categories, Export::Scatter, Export::Concordance];

    pub fn name(self) -> &'static str {
        match self {
            Export::Levels => "levels",
            Export::Categories => "categories",
            Export::Scatter => "scatter",
            Export::Concordance => "concordance",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub exports: Vec<Export>,
    /// Models in the level table; all matrix models when empty.
    pub models: Vec<String>,
    pub subset: LevelSubset,
    /// Attempt budget of the level table.
    pub pass_n: u32,
    /// Budgets compared against the ability ranking.
    pub n_values: Vec<u32>,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        AnalyzeSection {
            exports: Export::ALL.to_vec(),
            models: Vec::new(),
            subset: LevelSubset::All,
            pass_n: 128,
            n_values: vec![128],
        }
    }
}

fn default_sharpness() -> f64 {
    20.0
}

fn default_timeout() -> f64 {
    600.0
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(base) = path.parent() {
            cfg.paths.resolve(base);
        }
        Ok(cfg)
    }
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.matrix,
            &mut self.bank,
            &mut self.statements,
            &mut self.abilities,
            &mut self.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}
