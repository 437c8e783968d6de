//! Episodic dialogue MDP and the 18-task catalog.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{compute_mask, n_actions, summary_to_master, SummaryAction};
use crate::domain::{generate_domain, DomainCode, Ontology};
use crate::error::{Error, Result};
use crate::error_channel::{corrupt, preset_for_env, ErrorParams};
use crate::semantics::{ActType, DialogueAct, NBestList};
use crate::tracker::{init_belief, BeliefState};
use crate::user::{
    is_goal_fulfilled, sample_goal, sample_params, ProfileDistribution, ProfileKind, SimulatedUser,
    UserGoal,
};

pub const MAX_TURNS: usize = 25;
pub const GAMMA: f64 = 0.99;
pub const SUCCESS_REWARD: f64 = 20.0;
pub const TURN_PENALTY: f64 = 1.0;
pub const N_ENVS: usize = 6;

/// Seed of the shipped ontologies under `data/`.
pub const DOMAIN_SEED: u64 = 20171204;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub env_index: usize,
    pub domain: DomainCode,
    pub ser: f64,
    pub masks_enabled: bool,
    pub user_profile: ProfileKind,
    pub max_turns: usize,
    pub gamma: f64,
    pub success_reward: f64,
    pub turn_penalty: f64,
}

impl TaskConfig {
    pub fn id(&self) -> String {
        format!("env{}-{}", self.env_index, self.domain)
    }
}

impl fmt::Display for TaskConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// `(ser, masks, profile)` per environment row.
const ENV_ROWS: [(f64, bool, ProfileKind); N_ENVS] = [
    (0.0, true, ProfileKind::Standard),
    (0.0, false, ProfileKind::Standard),
    (0.15, true, ProfileKind::Standard),
    (0.15, false, ProfileKind::Standard),
    (0.15, true, ProfileKind::Unfriendly),
    (0.30, true, ProfileKind::Standard),
];

pub fn make_task_for(env_index: usize, domain: DomainCode) -> Result<TaskConfig> {
    let &(ser, masks_enabled, user_profile) = ENV_ROWS
        .get(env_index.wrapping_sub(1))
        .ok_or_else(|| Error::Config(format!("environment index {env_index} outside 1..=6")))?;
    Ok(TaskConfig {
        env_index,
        domain,
        ser,
        masks_enabled,
        user_profile,
        max_turns: MAX_TURNS,
        gamma: GAMMA,
        success_reward: SUCCESS_REWARD,
        turn_penalty: TURN_PENALTY,
    })
}

/// Parses ids of the form `env3-SFR`.
pub fn make_task(task_id: &str) -> Result<TaskConfig> {
    let bad = || Error::Config(format!("unknown task id `{task_id}`"));
    let rest = task_id.strip_prefix("env").ok_or_else(bad)?;
    let (env, domain) = rest.split_once('-').ok_or_else(bad)?;
    let env: usize = env.parse().map_err(|_| bad())?;
    let domain = DomainCode::from_str(domain).map_err(|_| bad())?;
    make_task_for(env, domain).map_err(|_| bad())
}

/// All 18 task ids, environment-major.
pub fn all_task_ids() -> Vec<String> {
    (1..=N_ENVS)
        .flat_map(|e| DomainCode::ALL.iter().map(move |d| format!("env{e}-{d}")))
        .collect()
}

/// The shipped ontology for `code`, built once per process.
pub fn standard_ontology(code: DomainCode) -> Arc<Ontology> {
    static CACHE: [OnceLock<Arc<Ontology>>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let i = DomainCode::ALL.iter().position(|&c| c == code).unwrap();
    CACHE[i]
        .get_or_init(|| Arc::new(generate_domain(code, DOMAIN_SEED)))
        .clone()
}

/// One logged turn. Turn 0 is the user's opening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub action: Option<usize>,
    pub system_act: Option<DialogueAct>,
    /// Set when the summary mapping had to fall back.
    pub fallback: bool,
    pub user_act: Option<DialogueAct>,
    pub nbest: Option<NBestList>,
    /// Non-zero belief entries after the turn.
    pub belief: Vec<(usize, f64)>,
    pub goal_changed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub belief: BeliefState,
    pub mask: Vec<bool>,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub turns: usize,
    pub final_reward: f64,
    pub discounted_return: f64,
    pub rewards: Vec<f64>,
    pub trace: Vec<TurnRecord>,
}

/// `sum_t gamma^t r_t`.
pub fn compute_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, &r| r + gamma * acc)
}

/// A task bound to its ontology, user profile and channel parameters.
#[derive(Debug, Clone)]
pub struct Environment {
    pub task: TaskConfig,
    pub ontology: Arc<Ontology>,
    pub profile: ProfileDistribution,
    pub error_params: ErrorParams,
}

impl Environment {
    pub fn new(task: TaskConfig) -> Self {
        let ontology = standard_ontology(task.domain);
        Self::with_ontology(task, ontology)
    }

    pub fn with_ontology(task: TaskConfig, ontology: Arc<Ontology>) -> Self {
        let profile = ProfileDistribution::for_kind(task.user_profile);
        let error_params = preset_for_env(task.env_index)
            .expect("task env index is validated")
            .params;
        Environment {
            task,
            ontology,
            profile,
            error_params,
        }
    }

    pub fn from_id(task_id: &str) -> Result<Self> {
        Ok(Self::new(make_task(task_id)?))
    }

    pub fn n_actions(&self) -> usize {
        n_actions(&self.ontology)
    }

    pub fn belief_dim(&self) -> usize {
        crate::tracker::belief_dim(&self.ontology)
    }

    /// Starts a dialogue: samples a user and goal and observes the opening.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Episode {
        let params = sample_params(&self.profile, rng);
        let goal = sample_goal(&self.ontology, &params, rng);
        self.reset_with(params, goal, rng)
    }

    pub fn reset_with<R: Rng + ?Sized>(
        &self,
        params: crate::user::UserParams,
        goal: UserGoal,
        rng: &mut R,
    ) -> Episode {
        let mut user = SimulatedUser::new(self.ontology.clone(), params, goal);
        let opening = user.open(rng);
        let nbest = corrupt(&opening, &self.error_params, &self.ontology, rng);
        let belief = init_belief(&self.ontology).update(&nbest, None, &self.ontology);
        let mask = compute_mask(&belief, &self.ontology, self.task.masks_enabled);
        let trace = vec![TurnRecord {
            turn: 0,
            action: None,
            system_act: None,
            fallback: false,
            user_act: Some(opening),
            nbest: Some(nbest),
            belief: belief.sparse(),
            goal_changed: false,
        }];
        Episode {
            user,
            belief,
            mask,
            turn: 0,
            done: false,
            success: false,
            rewards: Vec::new(),
            trace,
        }
    }

    /// Executes summary action `action`.
    pub fn step<R: Rng + ?Sized>(
        &self,
        ep: &mut Episode,
        action: usize,
        rng: &mut R,
    ) -> Result<StepResult> {
        if ep.done {
            return Err(Error::Terminated);
        }
        if !ep.mask.get(action).copied().unwrap_or(false) {
            return Err(Error::IllegalAction(action));
        }
        let summary = SummaryAction::from_index(action, self.ontology.constraint_slots().len())
            .ok_or(Error::IllegalAction(action))?;
        let master = summary_to_master(summary, &ep.belief, &self.ontology);
        ep.turn += 1;

        let mut record = TurnRecord {
            turn: ep.turn,
            action: Some(action),
            system_act: Some(master.act.clone()),
            fallback: master.fallback,
            user_act: None,
            nbest: None,
            belief: Vec::new(),
            goal_changed: false,
        };
        let mut done = master.act.act_type == ActType::Bye;
        if !done {
            let user_act = ep.user.respond(&master.act, rng);
            record.goal_changed = ep.user.goal_changed();
            let nbest = corrupt(&user_act, &self.error_params, &self.ontology, rng);
            ep.belief = ep.belief.update(&nbest, Some(&master.act), &self.ontology);
            ep.mask = compute_mask(&ep.belief, &self.ontology, self.task.masks_enabled);
            done = user_act.act_type == ActType::Bye;
            record.user_act = Some(user_act);
            record.nbest = Some(nbest);
        }
        record.belief = ep.belief.sparse();
        ep.trace.push(record);
        if ep.turn >= self.task.max_turns {
            done = true;
        }

        let mut reward = -self.task.turn_penalty;
        if done {
            ep.done = true;
            ep.success = is_goal_fulfilled(&self.ontology, ep.user.goal(), &ep.trace);
            if ep.success {
                reward += self.task.success_reward;
            }
        }
        ep.rewards.push(reward);
        Ok(StepResult {
            belief: ep.belief.clone(),
            mask: ep.mask.clone(),
            reward,
            done,
        })
    }
}

/// Mutable state of one running dialogue.
#[derive(Debug, Clone)]
pub struct Episode {
    pub user: SimulatedUser,
    pub belief: BeliefState,
    pub mask: Vec<bool>,
    pub turn: usize,
    pub done: bool,
    pub success: bool,
    pub rewards: Vec<f64>,
    pub trace: Vec<TurnRecord>,
}

impl Episode {
    pub fn goal(&self) -> &UserGoal {
        self.user.goal()
    }

    pub fn into_result(self, gamma: f64) -> EpisodeResult {
        let final_reward = self.rewards.iter().sum();
        EpisodeResult {
            success: self.success,
            turns: self.turn,
            final_reward,
            discounted_return: compute_return(&self.rewards, gamma),
            rewards: self.rewards,
            trace: self.trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_rows() {
        let t = make_task("env1-CR").unwrap();
        assert_eq!(
            (t.ser, t.masks_enabled, t.user_profile),
            (0.0, true, ProfileKind::Standard)
        );
        let t = make_task("env4-LAP").unwrap();
        assert_eq!(
            (t.ser, t.masks_enabled, t.user_profile),
            (0.15, false, ProfileKind::Standard)
        );
        let t = make_task("env5-SFR").unwrap();
        assert_eq!(
            (t.ser, t.masks_enabled, t.user_profile),
            (0.15, true, ProfileKind::Unfriendly)
        );
        let ids = all_task_ids();
        assert_eq!(ids.len(), 18);
        for id in &ids {
            assert_eq!(&make_task(id).unwrap().id(), id);
        }
        for bad in ["env0-CR", "env7-CR", "env1-XX", "CR", "env1CR", "envx-CR"] {
            assert!(make_task(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn returns() {
        assert_eq!(compute_return(&[-1.0, -1.0, 19.0], 1.0), 17.0);
        assert!((compute_return(&[-1.0, -1.0, 19.0], 0.99) - 16.6319).abs() < 1e-12);
        assert_eq!(compute_return(&[], 0.99), 0.0);
    }

    #[test]
    fn bye_first_fails() {
        let env = Environment::from_id("env1-CR").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ep = env.reset(&mut rng);
        let r = env
            .step(&mut ep, SummaryAction::Bye.index(), &mut rng)
            .unwrap();
        assert!(r.done);
        let res = ep.into_result(GAMMA);
        assert!(!res.success);
        assert_eq!(res.final_reward, -1.0);
    }

    #[test]
    fn reset_state_masks_confirms_and_is_deterministic() {
        let env = Environment::from_id("env1-CR").unwrap();
        let a = env.reset(&mut ChaCha8Rng::seed_from_u64(9));
        let b = env.reset(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.belief.flatten(), b.belief.flatten());
        let opening = a.trace[0].user_act.clone().unwrap();
        assert_eq!(
            a.trace[0].nbest.as_ref().unwrap().top().unwrap().act,
            opening
        );
        let fresh = init_belief(&env.ontology);
        let m = compute_mask(&fresh, &env.ontology, true);
        for k in 0..3 {
            assert!(!m[SummaryAction::Confirm(k).index()]);
        }
    }

    #[test]
    fn illegal_and_terminated() {
        let env = Environment::from_id("env1-CR").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = env.reset(&mut rng);
        let illegal = ep.mask.iter().position(|&m| !m).unwrap();
        assert!(matches!(
            env.step(&mut ep, illegal, &mut rng),
            Err(Error::IllegalAction(_))
        ));
        assert!(matches!(
            env.step(&mut ep, 99, &mut rng),
            Err(Error::IllegalAction(99))
        ));
        env.step(&mut ep, SummaryAction::Bye.index(), &mut rng)
            .unwrap();
        assert!(matches!(
            env.step(&mut ep, 3, &mut rng),
            Err(Error::Terminated)
        ));
    }

    #[test]
    fn turn_cap_gives_minus_25() {
        let env = Environment::from_id("env2-CR").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ep = env.reset(&mut rng);
        let mut steps = 0;
        while !ep.done {
            env.step(&mut ep, SummaryAction::Reqmore.index(), &mut rng)
                .unwrap();
            steps += 1;
        }
        assert!(steps <= MAX_TURNS);
        let res = ep.into_result(GAMMA);
        assert!(!res.success);
        assert_eq!(res.final_reward, -(res.turns as f64));
    }
}
