//! Dialogue policies behind one dispatch enum.

pub mod a2c;
pub mod dqn;
pub mod enac;
pub mod gp;
pub mod handcrafted;
pub mod schedule;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Ontology;
use crate::error::{Error, Result};
use crate::tracker::BeliefState;

pub use a2c::{A2c, A2cConfig};
pub use dqn::{Dqn, DqnConfig};
pub use enac::{Enac, EnacConfig};
pub use gp::{GpConfig, GpSarsa};
pub use handcrafted::Handcrafted;
pub use schedule::EpsilonSchedule;

/// What a policy sees before acting.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub features: &'a [f64],
    pub mask: &'a [bool],
    /// Structured belief; only the handcrafted policy reads it.
    pub belief: Option<&'a BeliefState>,
}

#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub features: &'a [f64],
    pub mask: &'a [bool],
    pub action: usize,
    pub reward: f64,
    pub next_features: &'a [f64],
    pub next_mask: &'a [bool],
    pub done: bool,
}

/// Highest legal score; ties go to the lowest index.
pub fn argmax_legal(scores: &[f64], mask: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, (&s, &m)) in scores.iter().zip(mask).enumerate() {
        if m && best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best.expect("mask has a legal action")
}

pub fn uniform_legal<R: Rng + ?Sized>(mask: &[bool], rng: &mut R) -> usize {
    let legal: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    legal[rng.random_range(0..legal.len())]
}

/// `(1 - eps) * probs + eps * uniform(legal)`.
pub fn mixture(probs: &[f64], mask: &[bool], eps: f64) -> Vec<f64> {
    let n_legal = mask.iter().filter(|&&m| m).count().max(1) as f64;
    probs
        .iter()
        .zip(mask)
        .map(|(&p, &m)| {
            if m {
                (1.0 - eps) * p + eps / n_legal
            } else {
                0.0
            }
        })
        .collect()
}

/// Inverse-CDF draw; falls back to the last positive entry on round-off.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gp,
    Dqn,
    A2c,
    Enac,
    Handcrafted,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Gp,
        Algorithm::Dqn,
        Algorithm::A2c,
        Algorithm::Enac,
        Algorithm::Handcrafted,
    ];
    pub const LEARNERS: [Algorithm; 4] = [
        Algorithm::Gp,
        Algorithm::Dqn,
        Algorithm::A2c,
        Algorithm::Enac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gp => "gp",
            Algorithm::Dqn => "dqn",
            Algorithm::A2c => "a2c",
            Algorithm::Enac => "enac",
            Algorithm::Handcrafted => "handcrafted",
        }
    }

    pub fn is_learner(self) -> bool {
        self != Algorithm::Handcrafted
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower || (lower == "gp-sarsa" && *a == Algorithm::Gp))
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Hyperparameters for every learner; only the selected one is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub gp: GpConfig,
    pub dqn: DqnConfig,
    pub a2c: A2cConfig,
    pub enac: EnacConfig,
}

impl PolicyConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gp.gamma = gamma;
        self.dqn.gamma = gamma;
        self.a2c.gamma = gamma;
        self.enac.gamma = gamma;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "lowercase")]
pub enum AnyPolicy {
    Gp(GpSarsa),
    Dqn(Dqn),
    A2c(A2c),
    Enac(Enac),
    Handcrafted(Handcrafted),
}

impl AnyPolicy {
    pub fn new<R: Rng + ?Sized>(
        algorithm: Algorithm,
        ontology: Arc<Ontology>,
        belief_dim: usize,
        n_actions: usize,
        config: &PolicyConfig,
        rng: &mut R,
    ) -> Self {
        match algorithm {
            Algorithm::Gp => AnyPolicy::Gp(GpSarsa::new(n_actions, config.gp.clone())),
            Algorithm::Dqn => {
                AnyPolicy::Dqn(Dqn::new(belief_dim, n_actions, config.dqn.clone(), rng))
            }
            Algorithm::A2c => {
                AnyPolicy::A2c(A2c::new(belief_dim, n_actions, config.a2c.clone(), rng))
            }
            Algorithm::Enac => {
                AnyPolicy::Enac(Enac::new(belief_dim, n_actions, config.enac.clone(), rng))
            }
            Algorithm::Handcrafted => AnyPolicy::Handcrafted(Handcrafted::new(ontology)),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            AnyPolicy::Gp(_) => Algorithm::Gp,
            AnyPolicy::Dqn(_) => Algorithm::Dqn,
            AnyPolicy::A2c(_) => Algorithm::A2c,
            AnyPolicy::Enac(_) => Algorithm::Enac,
            AnyPolicy::Handcrafted(_) => Algorithm::Handcrafted,
        }
    }

    /// Re-links state that is not serialised.
    pub fn attach(&mut self, ontology: Arc<Ontology>) {
        if let AnyPolicy::Handcrafted(h) = self {
            h.attach(ontology);
        }
    }

    pub fn greedy(&self, obs: &Observation) -> usize {
        match self {
            AnyPolicy::Gp(p) => p.greedy(obs),
            AnyPolicy::Dqn(p) => p.greedy(obs),
            AnyPolicy::A2c(p) => p.greedy(obs),
            AnyPolicy::Enac(p) => p.greedy(obs),
            AnyPolicy::Handcrafted(p) => p.choose(
                obs.belief.expect("handcrafted policy reads the belief"),
                obs.mask,
            ),
        }
    }

    pub fn explore<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> usize {
        match self {
            AnyPolicy::Gp(p) => p.explore(obs, rng),
            AnyPolicy::Dqn(p) => p.explore(obs, rng),
            AnyPolicy::A2c(p) => p.explore(obs, rng),
            AnyPolicy::Enac(p) => p.explore(obs, rng),
            AnyPolicy::Handcrafted(_) => self.greedy(obs),
        }
    }

    pub fn observe<R: Rng + ?Sized>(&mut self, t: &Transition, rng: &mut R) {
        match self {
            AnyPolicy::Gp(p) => p.observe(t),
            AnyPolicy::Dqn(p) => p.observe(t, rng),
            AnyPolicy::A2c(p) => p.observe(t),
            AnyPolicy::Enac(p) => p.observe(t),
            AnyPolicy::Handcrafted(_) => {}
        }
    }

    pub fn end_episode(&mut self) {
        match self {
            AnyPolicy::Gp(p) => p.end_episode(),
            AnyPolicy::Dqn(p) => p.end_episode(),
            AnyPolicy::A2c(p) => {
                p.end_episode();
            }
            AnyPolicy::Enac(p) => {
                p.end_episode();
            }
            AnyPolicy::Handcrafted(_) => {}
        }
    }

    /// Training dialogues seen so far.
    pub fn dialogues(&self) -> u64 {
        match self {
            AnyPolicy::Gp(p) => p.dialogues,
            AnyPolicy::Dqn(p) => p.dialogues,
            AnyPolicy::A2c(p) => p.dialogues,
            AnyPolicy::Enac(p) => p.dialogues,
            AnyPolicy::Handcrafted(_) => 0,
        }
    }
}

pub const CHECKPOINT_FORMAT: &str = "dialbench-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A saved policy with enough header to reject a mismatched task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub task: String,
    pub domain: String,
    pub belief_dim: usize,
    pub n_actions: usize,
    pub dialogues: u64,
    pub policy: AnyPolicy,
}

impl Checkpoint {
    pub fn new(
        policy: AnyPolicy,
        task: &str,
        ontology: &Ontology,
        belief_dim: usize,
        n_actions: usize,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            algorithm: policy.algorithm(),
            task: task.to_string(),
            domain: ontology.code().to_string(),
            belief_dim,
            n_actions,
            dialogues: policy.dialogues(),
            policy,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads and checks the header against the task dimensions.
    pub fn load(
        path: &Path,
        ontology: Arc<Ontology>,
        belief_dim: usize,
        n_actions: usize,
    ) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "{}: expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, got {} v{}",
                path.display(),
                ck.format,
                ck.version
            )));
        }
        if ck.domain != ontology.code() {
            return Err(Error::Schema(format!(
                "checkpoint domain {} does not match task domain {}",
                ck.domain,
                ontology.code()
            )));
        }
        if ck.belief_dim != belief_dim {
            return Err(Error::Dimension {
                expected: belief_dim,
                got: ck.belief_dim,
            });
        }
        if ck.n_actions != n_actions {
            return Err(Error::Dimension {
                expected: n_actions,
                got: ck.n_actions,
            });
        }
        ck.policy.attach(ontology);
        Ok(ck)
    }
}
