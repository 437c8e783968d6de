//! Advantage actor-critic on a shared trunk. The last output unit is the
//! state value; the others are policy logits.
//!
//! Each update replays a window of recent episodes. Steps generated by an
//! older or exploratory behaviour are reweighted by `min(pi/mu, rho_cap)`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{dlogpi_dlogits, masked_softmax, Adam, Net2};

use super::schedule::EpsilonSchedule;
use super::{argmax_legal, mixture, sample_index, Observation, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct A2cConfig {
    pub hidden: [usize; 2],
    pub lr: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub window: usize,
    pub rho_cap: f64,
    pub entropy_weight: f64,
    pub value_weight: f64,
}

impl Default for A2cConfig {
    fn default() -> Self {
        A2cConfig {
            hidden: [200, 75],
            lr: 1e-3,
            gamma: crate::env::GAMMA,
            eps0: 0.5,
            window: 32,
            rho_cap: 2.0,
            entropy_weight: 0.01,
            value_weight: 0.5,
        }
    }
}

/// One replayed step with its return-to-go and behaviour probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2cStep {
    pub state: Vec<f64>,
    pub mask: Vec<bool>,
    pub action: usize,
    pub ret: f64,
    pub behaviour_prob: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

/// Quantities held constant when differentiating: advantage and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detached {
    pub advantage: f64,
    pub rho: f64,
}

fn split_head(out: &[f64]) -> (&[f64], f64) {
    let n = out.len() - 1;
    (&out[..n], out[n])
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Detached advantage and truncated weight of each step under `net`.
pub fn detach(net: &Net2, steps: &[A2cStep], rho_cap: f64) -> Vec<Detached> {
    steps
        .iter()
        .map(|s| {
            let out = net.forward(&s.state).expect("state matches the net");
            let (logits, v) = split_head(&out);
            let p = masked_softmax(logits, &s.mask);
            Detached {
                advantage: s.ret - v,
                rho: (p[s.action] / s.behaviour_prob.max(1e-12)).min(rho_cap),
            }
        })
        .collect()
}

/// Surrogate loss, averaged over steps, with `detached` held fixed.
pub fn objective(
    net: &Net2,
    steps: &[A2cStep],
    detached: &[Detached],
    config: &A2cConfig,
) -> LossBreakdown {
    let n = steps.len().max(1) as f64;
    let mut l = LossBreakdown::default();
    for (s, d) in steps.iter().zip(detached) {
        let out = net.forward(&s.state).expect("state matches the net");
        let (logits, v) = split_head(&out);
        let p = masked_softmax(logits, &s.mask);
        let a = s.ret - v;
        l.policy -= d.rho * p[s.action].max(1e-300).ln() * d.advantage / n;
        l.value += a * a / n;
        l.entropy += entropy(&p) / n;
    }
    l.total = l.policy + config.value_weight * l.value - config.entropy_weight * l.entropy;
    l
}

/// Loss and gradient of [`objective`] with detached terms taken from `net`.
pub fn gradient(net: &Net2, steps: &[A2cStep], config: &A2cConfig) -> (LossBreakdown, Vec<f64>) {
    let detached = detach(net, steps, config.rho_cap);
    let n = steps.len().max(1) as f64;
    let mut grads = vec![0.0; net.n_params()];
    let mut l = LossBreakdown::default();
    for (s, d) in steps.iter().zip(&detached) {
        let cache = net.forward_cached(&s.state).expect("state matches the net");
        let (logits, v) = split_head(&cache.out);
        let p = masked_softmax(logits, &s.mask);
        let a = s.ret - v;
        let h = entropy(&p);
        l.policy -= d.rho * p[s.action].max(1e-300).ln() * d.advantage / n;
        l.value += a * a / n;
        l.entropy += h / n;

        let glog = dlogpi_dlogits(&p, &s.mask, s.action);
        let mut dout = vec![0.0; cache.out.len()];
        for i in 0..logits.len() {
            let dh = if s.mask[i] && p[i] > 0.0 {
                -p[i] * (p[i].ln() + h)
            } else {
                0.0
            };
            dout[i] = (-d.rho * d.advantage * glog[i] - config.entropy_weight * dh) / n;
        }
        dout[logits.len()] = config.value_weight * (-2.0 * a) / n;
        net.backward(&s.state, &cache, &dout, &mut grads);
    }
    l.total = l.policy + config.value_weight * l.value - config.entropy_weight * l.entropy;
    (l, grads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2c {
    pub config: A2cConfig,
    pub net: Net2,
    adam: Adam,
    pub schedule: EpsilonSchedule,
    pub dialogues: u64,
    #[serde(skip)]
    window: VecDeque<Vec<A2cStep>>,
    #[serde(skip)]
    current: Vec<(A2cStep, f64)>,
    #[serde(skip)]
    pending_prob: f64,
}

impl A2c {
    pub fn new<R: Rng + ?Sized>(
        n_in: usize,
        n_actions: usize,
        config: A2cConfig,
        rng: &mut R,
    ) -> Self {
        let net = Net2::new(
            [n_in, config.hidden[0], config.hidden[1], n_actions + 1],
            rng,
        );
        let adam = Adam::new(net.n_params(), config.lr);
        A2c {
            net,
            adam,
            schedule: EpsilonSchedule::new(config.eps0),
            dialogues: 0,
            window: VecDeque::new(),
            current: Vec::new(),
            pending_prob: 1.0,
            config,
        }
    }

    pub fn policy(&self, obs: &Observation) -> Vec<f64> {
        let out = self
            .net
            .forward(obs.features)
            .expect("belief matches the net");
        masked_softmax(split_head(&out).0, obs.mask)
    }

    pub fn greedy(&self, obs: &Observation) -> usize {
        argmax_legal(&self.policy(obs), obs.mask)
    }

    pub fn explore<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> usize {
        let eps = self.schedule.at(self.dialogues);
        let mu = mixture(&self.policy(obs), obs.mask, eps);
        let a = sample_index(&mu, rng);
        self.pending_prob = mu[a];
        a
    }

    pub fn observe(&mut self, t: &Transition) {
        let step = A2cStep {
            state: t.features.to_vec(),
            mask: t.mask.to_vec(),
            action: t.action,
            ret: 0.0,
            behaviour_prob: self.pending_prob,
        };
        self.current.push((step, t.reward));
    }

    pub fn end_episode(&mut self) -> Option<LossBreakdown> {
        self.dialogues += 1;
        let mut episode: Vec<A2cStep> = Vec::with_capacity(self.current.len());
        let mut g = 0.0;
        for (mut step, r) in std::mem::take(&mut self.current).into_iter().rev() {
            g = r + self.config.gamma * g;
            step.ret = g;
            episode.push(step);
        }
        episode.reverse();
        if episode.is_empty() {
            return None;
        }
        if self.window.len() == self.config.window {
            self.window.pop_front();
        }
        self.window.push_back(episode);
        let steps: Vec<A2cStep> = self.window.iter().flatten().cloned().collect();
        let (loss, grads) = gradient(&self.net, &steps, &self.config);
        self.adam.step(&mut self.net.params, &grads);
        Some(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_advantage_zero_policy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Net2::new([3, 5, 4, 4], &mut rng);
        let state = vec![0.2, -0.4, 0.9];
        let v = net.forward(&state).unwrap()[3];
        let steps = vec![A2cStep {
            state,
            mask: vec![true; 3],
            action: 1,
            ret: v,
            behaviour_prob: 0.5,
        }];
        let config = A2cConfig {
            entropy_weight: 0.0,
            ..A2cConfig::default()
        };
        let (l, g) = gradient(&net, &steps, &config);
        assert!(l.policy.abs() < 1e-15 && l.value.abs() < 1e-15);
        assert!(g.iter().all(|x| x.abs() < 1e-15));
    }
}
