//! Deep Q-network with experience replay and a periodically synced target.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{Adam, Net2};

use super::schedule::EpsilonSchedule;
use super::{argmax_legal, uniform_legal, Observation, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: [usize; 2],
    pub lr: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub buffer_capacity: usize,
    pub minibatch: usize,
    pub warmup: usize,
    pub target_sync_dialogues: u64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        DqnConfig {
            hidden: [300, 100],
            lr: 1e-3,
            gamma: crate::env::GAMMA,
            eps0: 0.3,
            buffer_capacity: 6000,
            minibatch: 64,
            warmup: 192,
            target_sync_dialogues: 2,
        }
    }
}

/// One replayed step. `next_mask` restricts the bootstrap max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stored {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub next_mask: Vec<bool>,
    pub done: bool,
}

/// `y = r` on terminal steps, else `r + gamma * max_{legal a'} Q_target(s', a')`.
pub fn bellman_targets(target: &Net2, batch: &[&Stored], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return t.reward;
            }
            let q = target
                .forward(&t.next_state)
                .expect("replayed state matches the net");
            let best = q
                .iter()
                .zip(&t.next_mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            t.reward + gamma * if best.is_finite() { best } else { 0.0 }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dqn {
    pub config: DqnConfig,
    pub q: Net2,
    pub target: Net2,
    adam: Adam,
    pub schedule: EpsilonSchedule,
    pub dialogues: u64,
    #[serde(skip)]
    buffer: VecDeque<Stored>,
}

impl Dqn {
    pub fn new<R: Rng + ?Sized>(
        n_in: usize,
        n_actions: usize,
        config: DqnConfig,
        rng: &mut R,
    ) -> Self {
        let q = Net2::new([n_in, config.hidden[0], config.hidden[1], n_actions], rng);
        let adam = Adam::new(q.n_params(), config.lr);
        Dqn {
            target: q.clone(),
            q,
            adam,
            schedule: EpsilonSchedule::new(config.eps0),
            dialogues: 0,
            buffer: VecDeque::new(),
            config,
        }
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn greedy(&self, obs: &Observation) -> usize {
        let q = self
            .q
            .forward(obs.features)
            .expect("belief matches the net");
        argmax_legal(&q, obs.mask)
    }

    pub fn explore<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> usize {
        let eps = self.schedule.at(self.dialogues);
        if rng.random_bool(eps) {
            uniform_legal(obs.mask, rng)
        } else {
            self.greedy(obs)
        }
    }

    pub fn observe<R: Rng + ?Sized>(&mut self, t: &Transition, rng: &mut R) {
        if self.buffer.len() == self.config.buffer_capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(Stored {
            state: t.features.to_vec(),
            action: t.action,
            reward: t.reward,
            next_state: t.next_features.to_vec(),
            next_mask: t.next_mask.to_vec(),
            done: t.done,
        });
        if self.buffer.len() >= self.config.warmup.max(self.config.minibatch) {
            self.train_step(rng);
        }
    }

    pub fn end_episode(&mut self) {
        self.dialogues += 1;
        if self.config.target_sync_dialogues > 0
            && self
                .dialogues
                .is_multiple_of(self.config.target_sync_dialogues)
        {
            self.target = self.q.clone();
        }
    }

    /// One Adam step on a uniformly drawn minibatch; returns the mean
    /// squared TD error before the step.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let n = self.buffer.len();
        let batch: Vec<&Stored> = (0..self.config.minibatch)
            .map(|_| &self.buffer[rng.random_range(0..n)])
            .collect();
        let targets = bellman_targets(&self.target, &batch, self.config.gamma);
        let (loss, grads) = squared_td_gradient(&self.q, &batch, &targets);
        self.adam.step(&mut self.q.params, &grads);
        loss
    }
}

/// Mean of `(y - Q(s, a))^2` and its gradient.
pub fn squared_td_gradient(q: &Net2, batch: &[&Stored], targets: &[f64]) -> (f64, Vec<f64>) {
    let mut grads = vec![0.0; q.n_params()];
    let mut loss = 0.0;
    let b = batch.len() as f64;
    let mut dout = vec![0.0; q.n_out()];
    for (t, &y) in batch.iter().zip(targets) {
        let cache = q
            .forward_cached(&t.state)
            .expect("replayed state matches the net");
        let err = cache.out[t.action] - y;
        loss += err * err / b;
        dout.iter_mut().for_each(|d| *d = 0.0);
        dout[t.action] = 2.0 * err / b;
        q.backward(&t.state, &cache, &dout, &mut grads);
    }
    (loss, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stored(reward: f64, done: bool) -> Stored {
        Stored {
            state: vec![0.5, -0.5],
            action: 1,
            reward,
            next_state: vec![1.0, 0.0],
            next_mask: vec![true, false, true],
            done,
        }
    }

    #[test]
    fn terminal_targets_are_rewards() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Net2::new([2, 4, 4, 3], &mut rng);
        let batch = [stored(3.0, true), stored(-1.0, true)];
        let refs: Vec<&Stored> = batch.iter().collect();
        assert_eq!(bellman_targets(&net, &refs, 0.99), vec![3.0, -1.0]);
    }

    #[test]
    fn zero_lr_leaves_loss_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let config = DqnConfig {
            hidden: [8, 8],
            lr: 0.0,
            minibatch: 4,
            warmup: 4,
            ..DqnConfig::default()
        };
        let mut dqn = Dqn::new(2, 3, config, &mut rng);
        for i in 0..4 {
            dqn.buffer.push_back(stored(i as f64, i % 2 == 0));
        }
        let before = dqn.q.clone();
        let batch: Vec<&Stored> = dqn.buffer.iter().collect();
        let targets = bellman_targets(&dqn.target, &batch, 0.99);
        let (l0, _) = squared_td_gradient(&dqn.q, &batch, &targets);
        dqn.train_step(&mut rng);
        dqn.target = dqn.q.clone();
        assert_eq!(dqn.q, before);
        let batch: Vec<&Stored> = dqn.buffer.iter().collect();
        let targets = bellman_targets(&dqn.target, &batch, 0.99);
        let (l1, _) = squared_td_gradient(&dqn.q, &batch, &targets);
        assert_eq!(l0, l1);
    }
}
