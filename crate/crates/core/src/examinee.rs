//! Backends answering "out of k attempts on theorem t, how many succeed".
//!
//! Three implementations ship here: replay of a recorded response matrix, a
//! seeded synthetic examinee following the two-parameter logistic law, and
//! an external command speaking a one-shot JSON protocol. [`Cached`] wraps
//! any of them with measured-once semantics.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::corpus::ResponseMatrix;
use crate::irt::p_2pl;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no recorded result for theorem {0}")]
    MissingTheorem(String),

    #[error("theorem {theorem}: {requested} attempts requested but {recorded} recorded")]
    BudgetMismatch {
        theorem: String,
        requested: u32,
        recorded: u32,
    },

    #[error("no true parameters for theorem {0}")]
    MissingParams(String),

    #[error("failed to run `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("theorem {theorem}: timed out after {timeout:?}")]
    Timeout { theorem: String, timeout: Duration },

    #[error("theorem {theorem}: command exited with {status}")]
    ExitStatus { theorem: String, status: String },

    #[error("theorem {theorem}: malformed response: {message}")]
    Malformed { theorem: String, message: String },

    #[error("theorem {theorem}: {successes} successes out of {attempts} attempts")]
    OutOfRange {
        theorem: String,
        successes: u32,
        attempts: u32,
    },

    #[error("{0}")]
    Other(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    /// Identical inputs always give identical counts.
    pub deterministic: bool,
    /// `prove` may be called from several threads at once.
    pub concurrent_safe: bool,
}

pub trait ExamineeBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// Number of successful attempts out of `attempts`.
    fn prove(&self, theorem_id: &str, statement: Option<&str>, attempts: u32) -> Result<u32, BackendError>;
}

impl<B: ExamineeBackend + ?Sized> ExamineeBackend for &B {
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn prove(&self, theorem_id: &str, statement: Option<&str>, attempts: u32) -> Result<u32, BackendError> {
        (**self).prove(theorem_id, statement, attempts)
    }
}

impl<B: ExamineeBackend + ?Sized> ExamineeBackend for Box<B> {
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }

    fn prove(&self, theorem_id: &str, statement: Option<&str>, attempts: u32) -> Result<u32, BackendError> {
        (**self).prove(theorem_id, statement, attempts)
    }
}

/// Calls `backend` and rejects counts above the budget.
pub fn checked_prove<B: ExamineeBackend + ?Sized>(
    backend: &B,
    theorem_id: &str,
    statement: Option<&str>,
    attempts: u32,
) -> Result<u32, BackendError> {
    let successes = backend.prove(theorem_id, statement, attempts)?;
    if successes > attempts {
        return Err(BackendError::OutOfRange {
            theorem: theorem_id.to_string(),
            successes,
            attempts,
        });
    }
    Ok(successes)
}

/// Answers from one model's recorded results.
#[derive(Clone, Debug)]
pub struct ReplayBackend {
    model: String,
    cells: HashMap<String, (u32, u32, Option<Vec<bool>>)>,
}

impl ReplayBackend {
    pub fn new(matrix: &ResponseMatrix, model: &str) -> crate::Result<Self> {
        if !matrix.has_model(model) {
            return Err(crate::Error::UnknownModel(model.to_string()));
        }
        let cells = matrix
            .theorems()
            .iter()
            .filter_map(|t| {
                matrix.cell(model, t).map(|c| {
                    let detail = matrix.detail(model, t).map(<[bool]>::to_vec);
                    (t.clone(), (c.attempts, c.successes, detail))
                })
            })
            .collect();
        Ok(ReplayBackend {
            model: model.to_string(),
            cells,
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }
}

impl ExamineeBackend for ReplayBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            concurrent_safe: true,
        }
    }

    fn prove(&self, theorem_id: &str, _statement: Option<&str>, attempts: u32) -> Result<u32, BackendError> {
        let (recorded, successes, detail) = self
            .cells
            .get(theorem_id)
            .ok_or_else(|| BackendError::MissingTheorem(theorem_id.to_string()))?;
        if *recorded == attempts {
            return Ok(*successes);
        }
        // A shorter budget is answered exactly when the ordered attempts are
        // on record; nothing is ever extrapolated.
        match detail {
            Some(d) if (attempts as usize) < d.len() => {
                Ok(d[..attempts as usize].iter().filter(|&&s| s).count() as u32)
            }
            _ => Err(BackendError::BudgetMismatch {
                theorem: theorem_id.to_string(),
                requested: attempts,
                recorded: *recorded,
            }),
        }
    }
}

/// True item parameters of the synthetic response law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub a: f64,
    pub b: f64,
}

/// Simulated prover whose attempts on a theorem succeed independently with
/// probability `p_2pl(true_theta, a, b)`.
#[derive(Clone, Debug)]
pub struct SyntheticExaminee {
    pub true_theta: f64,
    pub true_params: HashMap<String, TrueParams>,
    pub seed: u64,
}

impl SyntheticExaminee {
    pub fn new(true_theta: f64, true_params: HashMap<String, TrueParams>, seed: u64) -> Self {
        SyntheticExaminee {
            true_theta,
            true_params,
            seed,
        }
    }

    /// Generator for one theorem, independent of query order.
    fn rng_for(&self, theorem_id: &str, attempts: u32) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(attempts.to_le_bytes());
        h.update(theorem_id.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }
}

impl ExamineeBackend for SyntheticExaminee {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            concurrent_safe: true,
        }
    }

    fn prove(&self, theorem_id: &str, _statement: Option<&str>, attempts: u32) -> Result<u32, BackendError> {
        let params = self
            .true_params
            .get(theorem_id)
            .ok_or_else(|| BackendError::MissingParams(theorem_id.to_string()))?;
        let p = p_2pl(self.true_theta, params.a, params.b);
        let law = Bernoulli::new(p).map_err(|e| BackendError::Other(format!("{theorem_id}: {e}")))?;
        let mut rng = self.rng_for(theorem_id, attempts);
        Ok((0..attempts).filter(|_| law.sample(&mut rng)).count() as u32)
    }
}

/// Random bank for recovery studies: `n` items with discrimination uniform on
/// `[0.3, 1)` and difficulty uniform on `[0, 1)`. The true response law uses
/// the same difficulty and the discrimination scaled by `sharpness`, since
/// normalized discriminations are far flatter than real success curves.
pub fn synthetic_bank(
    n: usize,
    seed: u64,
    sharpness: f64,
) -> crate::Result<(crate::annotate::ItemBank, HashMap<String, TrueParams>)> {
    use rand::Rng;

    if !(sharpness > 0.0 && sharpness.is_finite()) {
        return Err(crate::Error::Invalid(format!("sharpness {sharpness} must be positive")));
    }
    let width = n.saturating_sub(1).to_string().len().max(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n);
    let mut truth = HashMap::with_capacity(n);
    for i in 0..n {
        let a: f64 = rng.gen_range(0.3..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        let id = format!("syn_{i:0width$}");
        truth.insert(id.clone(), TrueParams { a: a * sharpness, b });
        items.push(crate::annotate::ItemParams {
            theorem_id: id,
            raw_difficulty: None,
            raw_discrimination: None,
            difficulty: b,
            discrimination: a,
            level: None,
            zero_success: false,
        });
    }
    Ok((crate::annotate::ItemBank::new(items)?, truth))
}

#[derive(Serialize)]
struct Request<'a> {
    theorem_id: &'a str,
    statement: Option<&'a str>,
    attempts: u32,
}

#[derive(Deserialize)]
struct Response {
    theorem_id: String,
    successes: u32,
}

/// Runs a shell command once per query.
///
/// The request document goes to the child's stdin and one response document
/// is read from its stdout. `{theorem_id}` and `{attempts}` in the template
/// are substituted before the command is handed to `sh -c`.
#[derive(Clone, Debug)]
pub struct ExternalBackend {
    pub command: String,
    pub timeout: Duration,
}

impl ExternalBackend {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        ExternalBackend {
            command: command.into(),
            timeout,
        }
    }

    fn render(&self, theorem_id: &str, attempts: u32) -> String {
        self.command
            .replace("{theorem_id}", theorem_id)
            .replace("{attempts}", &attempts.to_string())
    }
}

impl ExamineeBackend for ExternalBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: false,
            concurrent_safe: true,
        }
    }

    fn prove(&self, theorem_id: &str, statement: Option<&str>, attempts: u32) -> Result<u32, BackendError> {
        let command = self.render(theorem_id, attempts);
        let malformed = |message: String| BackendError::Malformed {
            theorem: theorem_id.to_string(),
            message,
        };
        let request = serde_json::to_vec(&Request {
            theorem_id,
            statement,
            attempts,
        })
        .map_err(|e| malformed(e.to_string()))?;

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| BackendError::Spawn {
                command: command.clone(),
                source,
            })?;

        // A child that exits without reading its input closes the pipe, so
        // a failed write is not an error by itself.
        if let Some(mut stdin) = child.stdin.take() {
            let _ = stdin.write_all(&request);
        }
        // Read on a helper thread so a child that fills the pipe cannot stall
        // the timeout wait.
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });

        let status = match child.wait_timeout(self.timeout) {
            Ok(Some(status)) => status,
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                // The reader finishes once every holder of the pipe exits;
                // it is left detached rather than joined.
                drop(reader);
                return Err(BackendError::Timeout {
                    theorem: theorem_id.to_string(),
                    timeout: self.timeout,
                });
            }
            Err(source) => return Err(BackendError::Spawn { command, source }),
        };
        if !status.success() {
            return Err(BackendError::ExitStatus {
                theorem: theorem_id.to_string(),
                status: status.to_string(),
            });
        }
        let output = reader
            .join()
            .map_err(|_| malformed("reader thread panicked".into()))?
            .map_err(|e| malformed(e.to_string()))?;
        let response: Response = serde_json::from_slice(&output).map_err(|e| malformed(e.to_string()))?;
        if response.theorem_id != theorem_id {
            return Err(malformed(format!("response names theorem {}", response.theorem_id)));
        }
        if response.successes > attempts {
            return Err(BackendError::OutOfRange {
                theorem: theorem_id.to_string(),
                successes: response.successes,
                attempts,
            });
        }
        Ok(response.successes)
    }
}

type Slot = Arc<Mutex<Option<u32>>>;

/// Measured-once wrapper: the first successful answer per
/// `(theorem, attempts)` is stored and returned for every later call.
///
/// Concurrent first calls on the same key are serialized so the inner
/// backend runs at most once per key. Failures are not stored.
pub struct Cached<B> {
    inner: B,
    slots: Mutex<HashMap<(String, u32), Slot>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<B: ExamineeBackend> Cached<B> {
    pub fn new(inner: B) -> Self {
        Cached {
            inner,
            slots: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Calls that reached the inner backend.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: ExamineeBackend> ExamineeBackend for Cached<B> {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            ..self.inner.capabilities()
        }
    }

    fn prove(&self, theorem_id: &str, statement: Option<&str>, attempts: u32) -> Result<u32, BackendError> {
        let slot = {
            let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
            slots
                .entry((theorem_id.to_string(), attempts))
                .or_default()
                .clone()
        };
        let mut value = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(v) = *value {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = checked_prove(&self.inner, theorem_id, statement, attempts)?;
        *value = Some(v);
        Ok(v)
    }
}
