//! TOML run configuration. Every section is optional; omitted keys keep
//! their defaults.
//!
//! ```toml
//! [task]
//! id = "env3-SFR"
//!
//! [policy]
//! algorithm = "dqn"
//! [policy.dqn]
//! lr = 0.0005
//!
//! [simuser]
//! patience = [2, 3]     # interval, or a scalar for a fixed value
//!
//! [errormodel]
//! preset = "G6"         # optional; then per-field overrides
//! ser = 0.2
//!
//! [harness]
//! seeds = [0, 1, 2]
//! dialogues = 1000
//! eval_at = [100, 1000]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::load_ontology;
use crate::env::{make_task, Environment};
use crate::error::{Error, Result};
use crate::error_channel::{ErrorGroup, ErrorPreset};
use crate::exec::ExecMode;
use crate::policy::{Algorithm, PolicyConfig};
use crate::user::ProfileKind;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub id: Option<String>,
    /// Ontology file replacing the generated domain of the task.
    pub ontology: Option<PathBuf>,
    pub profile: Option<ProfileKind>,
    pub masks: Option<bool>,
    pub max_turns: Option<usize>,
    pub gamma: Option<f64>,
    pub success_reward: Option<f64>,
    pub turn_penalty: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub algorithm: Option<Algorithm>,
    #[serde(flatten)]
    pub params: PolicyConfig,
}

/// Error channel: an optional preset replacing the task's own, then
/// per-parameter overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorModelSection {
    pub preset: Option<ErrorGroup>,
    #[serde(flatten)]
    pub overrides: BTreeMap<String, f64>,
}

/// A fixed value or a sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Interval {
    Fixed(f64),
    Range([f64; 2]),
}

impl Interval {
    pub fn bounds(self) -> [f64; 2] {
        match self {
            Interval::Fixed(x) => [x, x],
            Interval::Range(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSection {
    pub seeds: Vec<u64>,
    pub dialogues: usize,
    pub eval_at: Vec<usize>,
    pub test_dialogues: usize,
    pub out: PathBuf,
    pub exec: ExecMode,
}

impl Default for HarnessSection {
    fn default() -> Self {
        HarnessSection {
            seeds: (0..10).collect(),
            dialogues: 10_000,
            eval_at: vec![1000, 4000, 10_000],
            test_dialogues: 500,
            out: PathBuf::from("results"),
            exec: ExecMode::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub task: TaskSection,
    pub policy: PolicySection,
    pub simuser: BTreeMap<String, Interval>,
    pub errormodel: ErrorModelSection,
    pub harness: HarnessSection,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Settings = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.harness;
        if h.seeds.is_empty() {
            return Err(Error::Config("harness.seeds is empty".into()));
        }
        let mut seeds = h.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != h.seeds.len() {
            return Err(Error::Config("harness.seeds must be distinct".into()));
        }
        if h.eval_at.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "harness.eval_at must be strictly ascending".into(),
            ));
        }
        if h.eval_at.last().is_some_and(|&e| e > h.dialogues) {
            return Err(Error::Config(
                "harness.eval_at exceeds harness.dialogues".into(),
            ));
        }
        if h.test_dialogues == 0 {
            return Err(Error::Config(
                "harness.test_dialogues must be positive".into(),
            ));
        }
        if let Some(g) = self.task.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::Config(format!("task.gamma {g} outside [0, 1]")));
            }
        }
        if self.task.max_turns == Some(0) {
            return Err(Error::Config("task.max_turns must be positive".into()));
        }
        Ok(())
    }

    pub fn policy_config(&self) -> PolicyConfig {
        match self.task.gamma {
            Some(g) => self.policy.params.clone().with_gamma(g),
            None => self.policy.params.clone(),
        }
    }

    /// Builds the environment for `task_id` with every override applied.
    pub fn environment(&self, task_id: &str) -> Result<Environment> {
        let mut task = make_task(task_id)?;
        let t = &self.task;
        if let Some(p) = t.profile {
            task.user_profile = p;
        }
        if let Some(m) = t.masks {
            task.masks_enabled = m;
        }
        if let Some(n) = t.max_turns {
            task.max_turns = n;
        }
        if let Some(g) = t.gamma {
            task.gamma = g;
        }
        if let Some(r) = t.success_reward {
            task.success_reward = r;
        }
        if let Some(p) = t.turn_penalty {
            task.turn_penalty = p;
        }
        let mut env = match &t.ontology {
            Some(path) => {
                let o = load_ontology(path)?;
                if o.code() != task.domain.as_str() {
                    return Err(Error::Config(format!(
                        "ontology {} is domain {}, task {task_id} needs {}",
                        path.display(),
                        o.code(),
                        task.domain.as_str()
                    )));
                }
                Environment::with_ontology(task, Arc::new(o))
            }
            None => Environment::new(task),
        };
        let user: BTreeMap<String, [f64; 2]> = self
            .simuser
            .iter()
            .map(|(k, v)| (k.clone(), v.bounds()))
            .collect();
        env.profile.apply_overrides(&user)?;
        if let Some(group) = self.errormodel.preset {
            env.error_params = ErrorPreset::new(group).params;
        }
        for (name, &value) in &self.errormodel.overrides {
            env.error_params.set(name, value)?;
        }
        env.error_params.validate()?;
        Ok(env)
    }
}
