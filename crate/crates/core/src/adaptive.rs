//! Information-driven theorem selection and the adaptive ability loop.
//!
//! Each round picks the `batch` most informative theorems at the current
//! ability that were not administered within the last `window` selections,
//! measures them, and nudges the ability toward each observed success rate in
//! turn. The ability is clamped once per round, and the loop stops once the
//! round-to-round change has stayed below `conv_eps` for `conv_rounds`
//! consecutive rounds.

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::ItemBank;
use crate::corpus::{create_csv, write_row};
use crate::error::{Error, Result};
use crate::examinee::{checked_prove, BackendError, Cached, ExamineeBackend};
use crate::irt::{fisher_info, p_2pl, DEFAULT_INFO_EXPONENT};

pub const TRACE_HEADER: [&str; 7] = [
    "number",
    "theorem_id",
    "difficulty",
    "discrimination",
    "success_rate",
    "ability_score",
    "delta",
];

/// Order among theorems with identical information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Earlier position in the bank wins.
    #[default]
    BankOrder,
    /// Smaller theorem id wins.
    TheoremId,
}

/// Form of the per-administration ability step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// `theta + eta * (r - P)`; reproduces the published evaluation trace.
    #[default]
    Unit,
    /// `theta + eta * a * (r - P)`, the gradient-style form.
    Discrimination,
}

/// Exclusion window over recent selections.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionState {
    /// Most recent last.
    pub recent: VecDeque<String>,
    pub window: usize,
    pub batch: usize,
    pub tie_break: TieBreak,
}

impl SelectionState {
    pub fn new(window: usize, batch: usize) -> Self {
        SelectionState {
            recent: VecDeque::with_capacity(window + batch),
            window,
            batch,
            tie_break: TieBreak::default(),
        }
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    fn remember(&mut self, ids: &[String]) {
        self.recent.extend(ids.iter().cloned());
        while self.recent.len() > self.window {
            self.recent.pop_front();
        }
    }
}

impl Default for SelectionState {
    fn default() -> Self {
        SelectionState::new(50, 5)
    }
}

/// Top `state.batch` theorems by information at `theta`, excluding the
/// window; the selection is then pushed into the window.
pub fn select_theorems(theta: f64, bank: &ItemBank, state: &mut SelectionState, f: f64) -> Result<Vec<String>> {
    if state.batch == 0 {
        return Err(Error::invalid("batch must be at least 1"));
    }
    let recent: HashSet<&str> = state.recent.iter().map(String::as_str).collect();
    let mut eligible: Vec<(f64, usize)> = bank
        .items()
        .iter()
        .enumerate()
        .filter(|(_, it)| !recent.contains(it.theorem_id.as_str()))
        .map(|(i, it)| (fisher_info(theta, it.discrimination, it.difficulty, f), i))
        .collect();
    if eligible.len() < state.batch {
        return Err(Error::InsufficientItems {
            eligible: eligible.len(),
            batch: state.batch,
        });
    }
    let items = bank.items();
    eligible.sort_by(|x, y| {
        y.0.total_cmp(&x.0).then_with(|| match state.tie_break {
            TieBreak::BankOrder => x.1.cmp(&y.1),
            TieBreak::TheoremId => items[x.1].theorem_id.cmp(&items[y.1].theorem_id),
        })
    });
    let chosen: Vec<String> = eligible[..state.batch]
        .iter()
        .map(|&(_, i)| items[i].theorem_id.clone())
        .collect();
    state.remember(&chosen);
    Ok(chosen)
}

/// `ln(1 + r)` for `0 < r < 0.1`, identity elsewhere on `[0, 1]`.
pub fn transform_rate(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!("success rate {r} outside [0, 1]")));
    }
    Ok(if r > 0.0 && r < 0.1 { r.ln_1p() } else { r })
}

/// `theta + eta * a * (r - P(theta))`, unclamped.
pub fn update_ability(theta: f64, a: f64, b: f64, r: f64, eta: f64) -> f64 {
    theta + eta * a * (r - p_2pl(theta, a, b))
}

impl UpdateRule {
    pub fn apply(self, theta: f64, a: f64, b: f64, r: f64, eta: f64) -> f64 {
        match self {
            UpdateRule::Unit => theta + eta * (r - p_2pl(theta, a, b)),
            UpdateRule::Discrimination => update_ability(theta, a, b, r, eta),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub eta: f64,
    pub f: f64,
    pub theta_init: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub conv_eps: f64,
    pub conv_rounds: u32,
    pub max_rounds: u32,
    pub attempts: u32,
    pub window: usize,
    pub batch: usize,
    pub update_rule: UpdateRule,
    pub tie_break: TieBreak,
    /// Measure each theorem once per run and reuse the count.
    pub cache: bool,
    /// Size the cost change is measured against; defaults to the bank size.
    pub cost_reference: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            eta: 0.004,
            f: DEFAULT_INFO_EXPONENT,
            theta_init: 0.5,
            theta_min: 0.0,
            theta_max: 1.0,
            conv_eps: 0.01,
            conv_rounds: 10,
            max_rounds: 200,
            attempts: 128,
            window: 50,
            batch: 5,
            update_rule: UpdateRule::default(),
            tie_break: TieBreak::default(),
            cache: true,
            cost_reference: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta, self.f, self.theta_init, self.theta_min, self.theta_max, self.conv_eps];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("evaluation parameters must be finite"));
        }
        if !(self.theta_min <= self.theta_init && self.theta_init <= self.theta_max) {
            return Err(Error::invalid(format!(
                "need theta_min ({}) <= theta_init ({}) <= theta_max ({})",
                self.theta_min, self.theta_init, self.theta_max
            )));
        }
        if !(self.conv_eps > 0.0) {
            return Err(Error::invalid("conv_eps must be positive"));
        }
        if self.conv_rounds < 1 {
            return Err(Error::invalid("conv_rounds must be at least 1"));
        }
        if self.max_rounds < self.conv_rounds {
            return Err(Error::invalid("max_rounds must be at least conv_rounds"));
        }
        if self.eta < 0.0 {
            return Err(Error::invalid("eta must be >= 0"));
        }
        if !(self.f > 0.0) {
            return Err(Error::invalid("f must be positive"));
        }
        if self.attempts == 0 {
            return Err(Error::invalid("attempts must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch must be at least 1"));
        }
        if self.cost_reference == Some(0) {
            return Err(Error::invalid("cost_reference must be positive"));
        }
        Ok(())
    }
}

/// One administration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub number: usize,
    pub theorem_id: String,
    pub difficulty: f64,
    pub discrimination: f64,
    pub success_rate: f64,
    pub transformed_rate: f64,
    /// Ability after this administration; the last row of a round includes
    /// the round-end clamp.
    pub theta_after: f64,
    pub delta: f64,
}

/// Ability loop state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbilityState {
    pub theta: f64,
    pub theta_prev: f64,
    pub streak: u32,
    pub round: u32,
    pub trace: Vec<TraceRow>,
}

impl AbilityState {
    pub fn new(theta_init: f64) -> Self {
        AbilityState {
            theta: theta_init,
            theta_prev: theta_init,
            streak: 0,
            round: 0,
            trace: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub final_theta: f64,
    pub administrations: usize,
    pub unique_theorems: usize,
    pub rounds: u32,
    pub converged: bool,
    /// Calls that reached the backend.
    pub backend_calls: usize,
    pub bank_size: usize,
    pub cost_reference: usize,
    /// Signed percentage change of administrations against `cost_reference`.
    pub cost_change: f64,
    pub trace: Vec<TraceRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Writes the flat trace table.
    pub fn save_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_csv(path)?;
        write_row(&mut w, path, &TRACE_HEADER)?;
        for row in &self.trace {
            write_row(
                &mut w,
                path,
                &[
                    &row.number.to_string(),
                    &row.theorem_id,
                    &row.difficulty.to_string(),
                    &row.discrimination.to_string(),
                    &row.success_rate.to_string(),
                    &row.theta_after.to_string(),
                    &row.delta.to_string(),
                ],
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Signed percentage change from `bank_size` to `administrations`, rounded
/// to two decimals.
pub fn cost_metrics(administrations: usize, bank_size: usize) -> Result<f64> {
    if bank_size == 0 {
        return Err(Error::invalid("bank size must be positive"));
    }
    let change = (administrations as f64 - bank_size as f64) / bank_size as f64 * 100.0;
    Ok((change * 100.0).round() / 100.0)
}

/// Runs the adaptive loop without theorem statements.
pub fn run_adaptive<B: ExamineeBackend + ?Sized>(backend: &B, bank: &ItemBank, cfg: &EvalConfig) -> Result<EvalReport> {
    run_adaptive_with_statements(backend, bank, cfg, &HashMap::new())
}

/// Runs the adaptive loop, passing each theorem's statement (when known) to
/// the backend.
pub fn run_adaptive_with_statements<B: ExamineeBackend + ?Sized>(
    backend: &B,
    bank: &ItemBank,
    cfg: &EvalConfig,
    statements: &HashMap<String, String>,
) -> Result<EvalReport> {
    cfg.validate()?;
    if bank.is_empty() {
        return Err(Error::invalid("empty item bank"));
    }
    if cfg.cache {
        let cached = Cached::new(backend);
        let mut report = drive(&cached, bank, cfg, statements)?;
        report.backend_calls = cached.misses() as usize;
        Ok(report)
    } else {
        drive(backend, bank, cfg, statements)
    }
}

fn drive<B: ExamineeBackend + ?Sized>(
    backend: &B,
    bank: &ItemBank,
    cfg: &EvalConfig,
    statements: &HashMap<String, String>,
) -> Result<EvalReport> {
    let mut selection = SelectionState::new(cfg.window, cfg.batch).with_tie_break(cfg.tie_break);
    let mut state = AbilityState::new(cfg.theta_init);
    let mut calls = 0usize;
    let concurrent = backend.capabilities().concurrent_safe;
    let converged = loop {
        let chosen = select_theorems(state.theta, bank, &mut selection, cfg.f)?;
        let counts = measure(backend, &chosen, statements, cfg.attempts, concurrent)?;
        calls += chosen.len();

        let mut theta = state.theta;
        for (id, successes) in chosen.iter().zip(counts) {
            let item = bank.get(id).expect("selected from the bank");
            let rate = f64::from(successes) / f64::from(cfg.attempts);
            let transformed = transform_rate(rate)?;
            theta = cfg
                .update_rule
                .apply(theta, item.discrimination, item.difficulty, transformed, cfg.eta);
            state.trace.push(TraceRow {
                number: state.trace.len() + 1,
                theorem_id: id.clone(),
                difficulty: item.difficulty,
                discrimination: item.discrimination,
                success_rate: rate,
                transformed_rate: transformed,
                theta_after: theta,
                delta: 0.0,
            });
        }
        theta = theta.clamp(cfg.theta_min, cfg.theta_max);
        let start = state.trace.len() - chosen.len();
        state.trace.last_mut().expect("batch >= 1").theta_after = theta;
        let mut before = if start == 0 {
            cfg.theta_init
        } else {
            state.trace[start - 1].theta_after
        };
        for row in &mut state.trace[start..] {
            row.delta = row.theta_after - before;
            before = row.theta_after;
        }

        state.theta = theta;
        state.round += 1;
        if (state.theta - state.theta_prev).abs() < cfg.conv_eps {
            state.streak += 1;
        } else {
            state.streak = 0;
        }
        state.theta_prev = state.theta;
        if state.streak >= cfg.conv_rounds {
            break true;
        }
        if state.round >= cfg.max_rounds {
            break false;
        }
    };

    let unique: HashSet<&str> = state.trace.iter().map(|r| r.theorem_id.as_str()).collect();
    let reference = cfg.cost_reference.unwrap_or(bank.len());
    Ok(EvalReport {
        final_theta: state.theta,
        administrations: state.trace.len(),
        unique_theorems: unique.len(),
        rounds: state.round,
        converged,
        backend_calls: calls,
        bank_size: bank.len(),
        cost_reference: reference,
        cost_change: cost_metrics(state.trace.len(), reference)?,
        trace: state.trace,
    })
}

/// Success counts for one batch, in selection order. Calls run in parallel
/// when the backend allows it; the first failure in selection order wins.
fn measure<B: ExamineeBackend + ?Sized>(
    backend: &B,
    ids: &[String],
    statements: &HashMap<String, String>,
    attempts: u32,
    concurrent: bool,
) -> Result<Vec<u32>> {
    let call = |id: &String| -> std::result::Result<u32, BackendError> {
        checked_prove(backend, id, statements.get(id).map(String::as_str), attempts)
    };
    let results: Vec<std::result::Result<u32, BackendError>> = if concurrent && ids.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = ids.iter().map(|id| s.spawn(move || call(id))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("backend call panicked"))
                .collect()
        })
    } else {
        ids.iter().map(call).collect()
    };
    ids.iter()
        .zip(results)
        .map(|(id, r)| {
            r.map_err(|source| Error::Backend {
                theorem: id.clone(),
                source,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::ItemParams;
    use crate::examinee::Capabilities;
    use proptest::prelude::*;

    fn item(id: &str, a: f64, b: f64) -> ItemParams {
        ItemParams {
            theorem_id: id.into(),
            raw_difficulty: None,
            raw_discrimination: None,
            difficulty: b,
            discrimination: a,
            level: None,
            zero_success: b == 1.0,
        }
    }

    fn bank(items: Vec<ItemParams>) -> ItemBank {
        ItemBank::new(items).unwrap()
    }

    #[test]
    fn selection_prefers_matching_difficulty() {
        let b = bank(vec![item("far", 1.0, 0.9), item("near", 1.0, 0.5)]);
        let mut st = SelectionState::new(1, 1);
        assert_eq!(select_theorems(0.5, &b, &mut st, 0.49).unwrap(), ["near"]);
        assert_eq!(select_theorems(0.5, &b, &mut st, 0.49).unwrap(), ["far"]);
        assert_eq!(st.recent, ["far"]);
    }

    #[test]
    fn selection_needs_enough_items() {
        let b = bank(vec![item("x", 1.0, 0.5), item("y", 1.0, 0.4)]);
        let mut st = SelectionState::new(50, 2);
        select_theorems(0.5, &b, &mut st, 0.49).unwrap();
        assert!(matches!(
            select_theorems(0.5, &b, &mut st, 0.49),
            Err(Error::InsufficientItems { eligible: 0, batch: 2 })
        ));
    }

    #[test]
    fn tie_break_modes() {
        let b = bank(vec![item("z", 0.5, 0.4), item("a", 0.5, 0.4)]);
        let mut st = SelectionState::new(0, 1);
        assert_eq!(select_theorems(0.5, &b, &mut st, 0.49).unwrap(), ["z"]);
        let mut st = SelectionState::new(0, 1).with_tie_break(TieBreak::TheoremId);
        assert_eq!(select_theorems(0.5, &b, &mut st, 0.49).unwrap(), ["a"]);
    }

    #[test]
    fn selection_matches_exhaustive_argmax() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let items: Vec<ItemParams> = (0..10)
            .map(|i| item(&format!("t{i}"), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..0.99)))
            .collect();
        let b = bank(items.clone());
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(0.0..1.0);
            let mut st = SelectionState::new(0, 1);
            let got = select_theorems(theta, &b, &mut st, 0.49).unwrap();
            let mut best = &items[0];
            for it in &items[1..] {
                if fisher_info(theta, it.discrimination, it.difficulty, 0.49)
                    > fisher_info(theta, best.discrimination, best.difficulty, 0.49)
                {
                    best = it;
                }
            }
            assert_eq!(got[0], best.theorem_id);
        }
    }

    #[test]
    fn transform_examples() {
        assert!((transform_rate(0.05).unwrap() - 0.048790).abs() < 1e-6);
        assert_eq!(transform_rate(0.0).unwrap(), 0.0);
        assert_eq!(transform_rate(0.5).unwrap(), 0.5);
        assert_eq!(transform_rate(0.1).unwrap(), 0.1);
        assert!((transform_rate(3.0 / 128.0).unwrap() - 0.023167).abs() < 1e-6);
        assert!(transform_rate(1.5).is_err());
        assert!(transform_rate(-0.1).is_err());
    }

    #[test]
    fn update_examples() {
        let t = update_ability(0.5, 0.9594, 0.4083, 0.5859375, 0.004);
        assert!((t - 0.500245).abs() < 5e-5, "{t}");
        let p = p_2pl(0.5, 0.9594, 0.4083);
        assert_eq!(update_ability(0.5, 0.9594, 0.4083, p, 0.004), 0.5);
        assert_eq!(update_ability(0.3, 0.0, 0.4083, 0.9, 0.004), 0.3);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(cost_metrics(55, 488).unwrap(), -88.73);
        assert_eq!(cost_metrics(195, 488).unwrap(), -60.04);
        assert_eq!(cost_metrics(488, 488).unwrap(), 0.0);
        assert!(cost_metrics(5, 0).is_err());
    }

    /// Answers each theorem with the rate the model predicts at `theta`.
    struct FixedPoint {
        bank: ItemBank,
        theta: f64,
    }

    impl ExamineeBackend for FixedPoint {
        fn capabilities(&self) -> Capabilities {
            Capabilities {
                deterministic: true,
                concurrent_safe: false,
            }
        }
        fn prove(&self, id: &str, _s: Option<&str>, attempts: u32) -> std::result::Result<u32, BackendError> {
            let it = self.bank.get(id).unwrap();
            let p = p_2pl(self.theta, it.discrimination, it.difficulty);
            Ok((p * f64::from(attempts)) as u32)
        }
    }

    #[test]
    fn fixed_point_backend_never_moves() {
        // a = 0 items predict exactly 0.5 everywhere
        let items: Vec<_> = (0..8).map(|i| item(&format!("t{i}"), 0.0, 0.1 * f64::from(i))).collect();
        let b = bank(items);
        let backend = FixedPoint {
            bank: b.clone(),
            theta: 0.5,
        };
        let cfg = EvalConfig {
            window: 0,
            ..EvalConfig::default()
        };
        let rep = run_adaptive(&backend, &b, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.final_theta, 0.5);
        assert_eq!(rep.rounds, cfg.conv_rounds);
        assert_eq!(rep.administrations, 50);
    }

    struct Always(u32);

    impl ExamineeBackend for Always {
        fn capabilities(&self) -> Capabilities {
            Capabilities {
                deterministic: true,
                concurrent_safe: true,
            }
        }
        fn prove(&self, _id: &str, _s: Option<&str>, _attempts: u32) -> std::result::Result<u32, BackendError> {
            Ok(self.0)
        }
    }

    fn spread_bank(n: usize) -> ItemBank {
        bank((0..n)
            .map(|i| item(&format!("t{i:03}"), 0.2 + 0.6 * (i % 7) as f64 / 7.0, i as f64 / n as f64))
            .collect())
    }

    #[test]
    fn clamp_is_folded_into_last_delta() {
        let b = spread_bank(40);
        let cfg = EvalConfig {
            eta: 0.5,
            window: 10,
            ..EvalConfig::default()
        };
        let rep = run_adaptive(&Always(128), &b, &cfg).unwrap();
        assert_eq!(rep.final_theta, 1.0);
        let mut theta = cfg.theta_init;
        for row in &rep.trace {
            assert!((row.theta_after - theta - row.delta).abs() < 1e-12);
            theta = row.theta_after;
        }
        assert_eq!(theta, rep.final_theta);
    }

    #[test]
    fn non_convergence_stops_at_cap() {
        // every round moves theta by well over conv_eps
        let b = spread_bank(60);
        let cfg = EvalConfig {
            eta: 0.05,
            theta_min: -1e9,
            theta_max: 1e9,
            conv_rounds: 3,
            max_rounds: 4,
            ..EvalConfig::default()
        };
        let rep = run_adaptive(&Always(128), &b, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.rounds, 4);
        assert_eq!(rep.administrations, 20);
    }

    #[test]
    fn backend_errors_name_the_theorem() {
        struct Broken;
        impl ExamineeBackend for Broken {
            fn capabilities(&self) -> Capabilities {
                Capabilities::default()
            }
            fn prove(&self, id: &str, _s: Option<&str>, _a: u32) -> std::result::Result<u32, BackendError> {
                Err(BackendError::MissingTheorem(id.into()))
            }
        }
        let err = run_adaptive(&Broken, &spread_bank(10), &EvalConfig::default()).unwrap_err();
        assert!(err.is_backend());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let b = spread_bank(10);
        for cfg in [
            EvalConfig { theta_init: 2.0, ..EvalConfig::default() },
            EvalConfig { conv_rounds: 0, ..EvalConfig::default() },
            EvalConfig { max_rounds: 5, ..EvalConfig::default() },
            EvalConfig { conv_eps: 0.0, ..EvalConfig::default() },
        ] {
            assert!(run_adaptive(&Always(1), &b, &cfg).is_err());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn loop_invariants(k in 0u32..=128, eta in 0.0f64..0.2, window in 0usize..20, n in 25usize..60) {
            let b = spread_bank(n);
            let cfg = EvalConfig { eta, window, ..EvalConfig::default() };
            let rep = run_adaptive(&Always(k), &b, &cfg).unwrap();
            prop_assert!(rep.rounds <= cfg.max_rounds);
            prop_assert_eq!(rep.administrations, rep.rounds as usize * cfg.batch);
            prop_assert!((0.0..=1.0).contains(&rep.final_theta));
            let total: f64 = cfg.theta_init + rep.trace.iter().map(|r| r.delta).sum::<f64>();
            prop_assert!((total - rep.final_theta).abs() < 1e-12);
            for r in 0..rep.rounds as usize {
                let ids: Vec<&str> = rep.trace[r * 5..r * 5 + 5].iter().map(|x| x.theorem_id.as_str()).collect();
                let mut dedup = ids.clone();
                dedup.sort_unstable();
                dedup.dedup();
                prop_assert_eq!(dedup.len(), 5);
                let start = (r * 5).saturating_sub(window);
                for prev in &rep.trace[start..r * 5] {
                    prop_assert!(!ids.contains(&prev.theorem_id.as_str()));
                }
            }
        }
    }
}
