use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Duration;

use proofgauge::analysis::{
    category_summary, level_pass_table, ranking_concordance, save_category_summary, scatter_export,
};
use proofgauge::{
    annotate, grade, kendall_tau, run_adaptive, run_adaptive_with_statements, synthetic_bank, Corpus,
    ExamineeBackend, ExternalBackend, ItemBank, ReplayBackend, ResponseMatrix, SyntheticExaminee, TrueParams,
};
use serde::Serialize;

use crate::config::{BackendSection, Export, RunConfig};

/// Why a command stopped; each maps to a distinct exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Backend(String),
    NotConverged,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Backend(_) => 3,
            Failure::NotConverged => 4,
        }
    }
}

impl From<proofgauge::Error> for Failure {
    fn from(e: proofgauge::Error) -> Self {
        match e {
            proofgauge::Error::Invalid(m) => Failure::Input(m),
            e if e.is_backend() => Failure::Backend(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "invalid input: {m}"),
            Failure::Backend(m) => write!(f, "backend failure: {m}"),
            Failure::NotConverged => f.write_str("ability did not converge within max_rounds"),
        }
    }
}

pub type Outcome = Result<(), Failure>;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, Failure> {
        let p = path
            .as_deref()
            .ok_or_else(|| Failure::Input(format!("paths.{key} is not set")))?;
        if !p.exists() {
            return Err(Failure::Input(format!("paths.{key}: {} does not exist", p.display())));
        }
        Ok(p)
    }

    fn matrix(&self) -> Result<ResponseMatrix, Failure> {
        Ok(ResponseMatrix::load(self.require(&self.cfg.paths.matrix, "matrix")?)?)
    }

    fn bank(&self) -> Result<ItemBank, Failure> {
        Ok(ItemBank::load(self.require(&self.cfg.paths.bank, "bank")?)?)
    }
}

fn write_bank(ctx: &Context, bank: &ItemBank, grading: &proofgauge::Grading) -> Outcome {
    bank.save(ctx.output("bank.csv"))?;
    bank.save_display(ctx.output("bank_display.csv"))?;
    grading.save(ctx.output("grading.csv"))?;
    let counts: Vec<String> = grading.counts.iter().map(usize::to_string).collect();
    let bounds: Vec<String> = grading
        .upper_bounds
        .iter()
        .map(|b| b.map_or("-".into(), |v| format!("{v:.4}")))
        .collect();
    ctx.say(format!("{} theorems graded", bank.len()));
    ctx.say(format!("level counts: {}", counts.join(", ")));
    ctx.say(format!("level upper bounds: {}", bounds.join(", ")));
    Ok(())
}

pub fn annotate_cmd(ctx: &Context) -> Outcome {
    let matrix = ctx.matrix()?;
    let settings = ctx.cfg.annotation.settings();
    settings.validate()?;
    let models = if ctx.cfg.annotation.models.is_empty() {
        matrix.models().to_vec()
    } else {
        ctx.cfg.annotation.models.clone()
    };
    let mut bank = annotate(&matrix, &models, &settings)?;
    let grading = grade(&mut bank, settings.level_count)?;
    write_bank(ctx, &bank, &grading)
}

pub fn grade_cmd(ctx: &Context) -> Outcome {
    let loaded = ctx.bank()?;
    let mut items = loaded.items().to_vec();
    for it in &mut items {
        it.level = None;
    }
    let mut bank = ItemBank::new(items)?;
    let grading = grade(&mut bank, ctx.cfg.annotation.settings().level_count)?;
    write_bank(ctx, &bank, &grading)
}

fn load_statements(path: &Path) -> Result<HashMap<String, String>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        if row.len() != 2 {
            return Err(Failure::Input(format!("{}: expected theorem_id,statement", path.display())));
        }
        out.insert(row[0].to_string(), row[1].to_string());
    }
    Ok(out)
}

fn backend(ctx: &Context, bank: &ItemBank) -> Result<Box<dyn ExamineeBackend>, Failure> {
    let section = ctx
        .cfg
        .backend
        .clone()
        .ok_or_else(|| Failure::Input("no [backend] configured".into()))?;
    Ok(match section {
        BackendSection::Replay { model } => Box::new(ReplayBackend::new(&ctx.matrix()?, &model)?),
        BackendSection::Synthetic { true_theta, sharpness } => {
            if !(true_theta.is_finite() && sharpness.is_finite() && sharpness > 0.0) {
                return Err(Failure::Input("synthetic backend needs finite true_theta and positive sharpness".into()));
            }
            let truth = bank
                .items()
                .iter()
                .map(|it| {
                    let params = TrueParams {
                        a: it.discrimination * sharpness,
                        b: it.difficulty,
                    };
                    (it.theorem_id.clone(), params)
                })
                .collect();
            Box::new(SyntheticExaminee::new(true_theta, truth, ctx.cfg.seed))
        }
        BackendSection::External { command, timeout_secs } => {
            let timeout = Duration::try_from_secs_f64(timeout_secs)
                .map_err(|_| Failure::Input(format!("bad timeout {timeout_secs}")))?;
            Box::new(ExternalBackend::new(command, timeout))
        }
    })
}

pub fn evaluate_cmd(ctx: &Context) -> Outcome {
    let bank = ctx.bank()?;
    let backend = backend(ctx, &bank)?;
    let statements = match &ctx.cfg.paths.statements {
        Some(_) => load_statements(ctx.require(&ctx.cfg.paths.statements, "statements")?)?,
        None => HashMap::new(),
    };
    let report = run_adaptive_with_statements(&backend, &bank, &ctx.cfg.eval, &statements)?;
    report.save_json(ctx.output("report.json"))?;
    report.save_trace(ctx.output("trace.csv"))?;
    ctx.say(format!("ability score: {:.4}", report.final_theta));
    ctx.say(format!("administrations: {}", report.administrations));
    ctx.say(format!("cost change: {:.2}%", report.cost_change));
    if report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    examinees: usize,
    kendall_tau: Option<f64>,
    ties: bool,
    mean_administrations: f64,
    note: Option<String>,
}

pub fn simulate_cmd(ctx: &Context) -> Outcome {
    let sim = &ctx.cfg.simulate;
    if sim.examinees.is_empty() {
        return Err(Failure::Input("simulate.examinees is empty".into()));
    }
    if let Some(t) = sim.examinees.iter().find(|t| !t.is_finite()) {
        return Err(Failure::Input(format!("true ability {t} is not finite")));
    }
    let (bank, truth) = synthetic_bank(sim.bank_size, ctx.cfg.seed, sim.sharpness)?;

    let path = ctx.output("simulation.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Failure::Input(format!("{}: {e}", path.display()));
    w.write_record(["examinee", "true_theta", "estimated_theta", "administrations", "rounds", "converged"])
        .map_err(csv_err)?;
    let mut estimates = Vec::with_capacity(sim.examinees.len());
    let mut administrations = 0usize;
    for (i, &theta) in sim.examinees.iter().enumerate() {
        let examinee = SyntheticExaminee::new(theta, truth.clone(), ctx.cfg.seed.wrapping_add(1 + i as u64));
        let report = run_adaptive(&examinee, &bank, &ctx.cfg.eval)?;
        w.write_record([
            (i + 1).to_string(),
            theta.to_string(),
            report.final_theta.to_string(),
            report.administrations.to_string(),
            report.rounds.to_string(),
            report.converged.to_string(),
        ])
        .map_err(csv_err)?;
        administrations += report.administrations;
        estimates.push(report.final_theta);
    }
    w.flush().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;

    let tau = kendall_tau(&sim.examinees, &estimates);
    let summary = SimulationSummary {
        examinees: estimates.len(),
        kendall_tau: tau.map(|t| t.tau),
        ties: tau.is_some_and(|t| t.ties),
        mean_administrations: administrations as f64 / estimates.len() as f64,
        note: tau.is_none().then(|| "rank agreement needs at least two examinees".to_string()),
    };
    write_json(&ctx.output("simulation_summary.json"), &summary)?;
    match summary.kendall_tau {
        Some(t) => ctx.say(format!("kendall tau: {t:.4}")),
        None => ctx.say("kendall tau: undefined for a single examinee"),
    }
    ctx.say(format!("mean administrations: {:.1}", summary.mean_administrations));
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_abilities(path: &Path) -> Result<BTreeMap<String, f64>, Failure> {
    let bad = |m: String| Failure::Input(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut out = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let score: f64 = row
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(format!("bad ability row {row:?}")))?;
        if out.insert(row[0].trim().to_string(), score).is_some() {
            return Err(bad(format!("duplicate model {}", &row[0])));
        }
    }
    Ok(out)
}

/// What one analysis export did.
enum Produced {
    Written(PathBuf),
    Skipped(String),
}

fn export(ctx: &Context, which: Export) -> Result<Produced, Failure> {
    let paths = &ctx.cfg.paths;
    let missing = |keys: &[(&Option<PathBuf>, &str)]| -> Option<String> {
        keys.iter()
            .find(|(p, _)| p.as_ref().is_none_or(|p| !p.exists()))
            .map(|(_, k)| format!("paths.{k} missing"))
    };
    let corpus = || -> Result<Corpus, Failure> { Ok(Corpus::load(ctx.require(&paths.corpus, "corpus")?)?) };
    match which {
        Export::Levels => {
            if let Some(why) = missing(&[(&paths.bank, "bank"), (&paths.matrix, "matrix")]) {
                return Ok(Produced::Skipped(why));
            }
            let (bank, matrix) = (ctx.bank()?, ctx.matrix()?);
            let models = if ctx.cfg.analyze.models.is_empty() {
                matrix.models().to_vec()
            } else {
                ctx.cfg.analyze.models.clone()
            };
            let corpus = match paths.corpus {
                Some(_) => Some(corpus()?),
                None => None,
            };
            let table = level_pass_table(
                &matrix,
                &bank,
                corpus.as_ref(),
                &models,
                ctx.cfg.analyze.subset,
                ctx.cfg.analyze.pass_n,
            )?;
            let out = ctx.output("level_pass.csv");
            table.save(&out)?;
            Ok(Produced::Written(out))
        }
        Export::Categories | Export::Scatter => {
            if let Some(why) = missing(&[(&paths.bank, "bank"), (&paths.corpus, "corpus")]) {
                return Ok(Produced::Skipped(why));
            }
            let (bank, corpus) = (ctx.bank()?, corpus()?);
            if which == Export::Categories {
                let out = ctx.output("category_summary.csv");
                save_category_summary(&category_summary(&bank, &corpus), &out)?;
                Ok(Produced::Written(out))
            } else {
                let out = ctx.output("scatter.csv");
                scatter_export(&bank, &corpus, &out)?;
                Ok(Produced::Written(out))
            }
        }
        Export::Concordance => {
            if let Some(why) = missing(&[(&paths.abilities, "abilities"), (&paths.matrix, "matrix")]) {
                return Ok(Produced::Skipped(why));
            }
            let ability = load_abilities(ctx.require(&paths.abilities, "abilities")?)?;
            if ability.len() < 2 {
                return Ok(Produced::Skipped(format!(
                    "rank comparison needs at least two models, {} given",
                    ability.len()
                )));
            }
            let comparison = ranking_concordance(&ability, &ctx.matrix()?, &ctx.cfg.analyze.n_values)?;
            let out = ctx.output("concordance.json");
            comparison.save_json(&out)?;
            Ok(Produced::Written(out))
        }
    }
}

pub fn analyze_cmd(ctx: &Context) -> Outcome {
    let mut written = 0;
    let mut skipped = Vec::new();
    for &which in &ctx.cfg.analyze.exports {
        match export(ctx, which)? {
            Produced::Written(path) => {
                written += 1;
                ctx.say(format!("{}: wrote {}", which.name(), path.display()));
            }
            Produced::Skipped(why) => {
                ctx.say(format!("{}: skipped ({why})", which.name()));
                skipped.push(format!("{}: {why}", which.name()));
            }
        }
    }
    if written == 0 {
        return Err(Failure::Input(format!("no export could be produced ({})", skipped.join("; "))));
    }
    Ok(())
}

pub fn ingest_cmd(ctx: &Context) -> Outcome {
    let matrix = ctx.matrix()?;
    matrix.save_aggregates(ctx.output("matrix.csv"))?;
    if matrix.has_full_detail() {
        matrix.save_attempts(ctx.output("attempts.csv"))?;
    }
    let path = ctx.output("priors.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Failure::Input(format!("{}: {e}", path.display()));
    w.write_record(["model_id", "budget", "prior_ability"]).map_err(csv_err)?;
    for m in matrix.models() {
        let budget = matrix.common_budget(&[m])?;
        let prior = matrix.prior_ability_at(m, budget)?;
        w.write_record([m.clone(), budget.to_string(), prior.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    ctx.say(format!(
        "{} models, {} theorems, {} cells",
        matrix.models().len(),
        matrix.theorems().len(),
        matrix.cell_count()
    ));
    if ctx.cfg.paths.corpus.is_some() {
        let corpus = Corpus::load(ctx.require(&ctx.cfg.paths.corpus, "corpus")?)?;
        corpus.save(ctx.output("corpus.csv"))?;
        ctx.say(format!("{} corpus records", corpus.len()));
    }
    Ok(())
}
