//! Episodic natural actor-critic.
//!
//! For every episode the score `phi = sum_t grad log mu(a_t | b_t)` of the
//! behaviour policy is accumulated. A batch is regressed onto the episode
//! returns with a free intercept; the slope is the natural gradient.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{dlogpi_dlogits, masked_softmax, Cache, Net2};

use super::schedule::EpsilonSchedule;
use super::{argmax_legal, mixture, sample_index, Observation, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnacConfig {
    pub hidden: [usize; 2],
    pub gamma: f64,
    pub eps0: f64,
    pub batch: usize,
    pub ridge: f64,
    pub step: f64,
}

impl Default for EnacConfig {
    fn default() -> Self {
        EnacConfig {
            hidden: [130, 50],
            gamma: crate::env::GAMMA,
            eps0: 0.3,
            batch: 20,
            ridge: 1e-4,
            step: 0.1,
        }
    }
}

fn solve_spd(mut a: DMatrix<f64>, b: DVector<f64>) -> DVector<f64> {
    match a.clone().cholesky() {
        Some(c) => c.solve(&b),
        None => {
            let n = a.nrows();
            for i in 0..n {
                a[(i, i)] += 1e-9;
            }
            a.lu().solve(&b).unwrap_or_else(|| DVector::zeros(n))
        }
    }
}

/// Ridge regression of `returns` on `[phi, 1]` with an unpenalised
/// intercept; returns the slope `w`. Uses the dual form when there are
/// fewer episodes than parameters.
pub fn natural_gradient(phis: &[Vec<f64>], returns: &[f64], ridge: f64) -> Vec<f64> {
    let e = phis.len();
    if e == 0 {
        return Vec::new();
    }
    let p = phis[0].len();
    let mean_r = returns.iter().sum::<f64>() / e as f64;
    let mut mean_phi = vec![0.0; p];
    for phi in phis {
        for (m, x) in mean_phi.iter_mut().zip(phi) {
            *m += x / e as f64;
        }
    }
    let centered = DMatrix::from_fn(e, p, |i, j| phis[i][j] - mean_phi[j]);
    let rc = DVector::from_iterator(e, returns.iter().map(|r| r - mean_r));
    let w = if e < p {
        let mut gram = &centered * centered.transpose();
        for i in 0..e {
            gram[(i, i)] += ridge;
        }
        centered.transpose() * solve_spd(gram, rc)
    } else {
        let mut normal = centered.transpose() * &centered;
        for i in 0..p {
            normal[(i, i)] += ridge;
        }
        solve_spd(normal, centered.transpose() * rc)
    };
    w.iter().copied().collect()
}

/// Behaviour probabilities and `grad log mu(action)` for the mixture
/// `mu = (1 - eps) pi + eps uniform`. Returns `(mu, score)`.
pub fn behaviour_score(
    net: &Net2,
    features: &[f64],
    mask: &[bool],
    eps: f64,
    action: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut score = vec![0.0; net.n_params()];
    let cache = net
        .forward_cached(features)
        .expect("belief matches the net");
    let pi = masked_softmax(&cache.out, mask);
    let mu = mixture(&pi, mask, eps);
    accumulate_score(net, features, &cache, &pi, &mu, eps, action, &mut score);
    (mu, score)
}

#[allow(clippy::too_many_arguments)]
fn accumulate_score(
    net: &Net2,
    features: &[f64],
    cache: &Cache,
    pi: &[f64],
    mu: &[f64],
    eps: f64,
    action: usize,
    into: &mut [f64],
) {
    let mask: Vec<bool> = mu.iter().map(|&m| m > 0.0).collect();
    // grad log mu = (1 - eps) pi(a) / mu(a) * grad log pi.
    let coef = (1.0 - eps) * pi[action] / mu[action].max(1e-300);
    let dout: Vec<f64> = dlogpi_dlogits(pi, &mask, action)
        .into_iter()
        .map(|g| coef * g)
        .collect();
    net.backward(features, cache, &dout, into);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enac {
    pub config: EnacConfig,
    pub net: Net2,
    pub schedule: EpsilonSchedule,
    pub dialogues: u64,
    #[serde(skip)]
    phi: Vec<f64>,
    #[serde(skip)]
    ret: f64,
    #[serde(skip)]
    discount: f64,
    #[serde(skip)]
    batch: Vec<(Vec<f64>, f64)>,
}

impl Enac {
    pub fn new<R: Rng + ?Sized>(
        n_in: usize,
        n_actions: usize,
        config: EnacConfig,
        rng: &mut R,
    ) -> Self {
        let net = Net2::new([n_in, config.hidden[0], config.hidden[1], n_actions], rng);
        Enac {
            phi: vec![0.0; net.n_params()],
            net,
            schedule: EpsilonSchedule::new(config.eps0),
            dialogues: 0,
            ret: 0.0,
            discount: 1.0,
            batch: Vec::new(),
            config,
        }
    }

    pub fn policy(&self, obs: &Observation) -> Vec<f64> {
        masked_softmax(
            &self
                .net
                .forward(obs.features)
                .expect("belief matches the net"),
            obs.mask,
        )
    }

    pub fn greedy(&self, obs: &Observation) -> usize {
        argmax_legal(&self.policy(obs), obs.mask)
    }

    /// Samples from the exploration mixture and adds its score to `phi`.
    pub fn explore<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> usize {
        if self.phi.len() != self.net.n_params() {
            self.phi = vec![0.0; self.net.n_params()];
            self.discount = 1.0;
        }
        let cache = self
            .net
            .forward_cached(obs.features)
            .expect("belief matches the net");
        let pi = masked_softmax(&cache.out, obs.mask);
        let eps = self.schedule.at(self.dialogues);
        let mu = mixture(&pi, obs.mask, eps);
        let a = sample_index(&mu, rng);
        accumulate_score(
            &self.net,
            obs.features,
            &cache,
            &pi,
            &mu,
            eps,
            a,
            &mut self.phi,
        );
        a
    }

    pub fn observe(&mut self, t: &Transition) {
        self.ret += self.discount * t.reward;
        self.discount *= self.config.gamma;
    }

    /// Closes the episode; applies an update when the batch is full and
    /// returns the step taken.
    pub fn end_episode(&mut self) -> Option<Vec<f64>> {
        self.dialogues += 1;
        let phi = std::mem::replace(&mut self.phi, vec![0.0; self.net.n_params()]);
        self.batch.push((phi, self.ret));
        self.ret = 0.0;
        self.discount = 1.0;
        if self.batch.len() < self.config.batch {
            return None;
        }
        let (phis, rets): (Vec<Vec<f64>>, Vec<f64>) =
            std::mem::take(&mut self.batch).into_iter().unzip();
        let w = natural_gradient(&phis, &rets, self.config.ridge);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            for (p, g) in self.net.params.iter_mut().zip(&w) {
                *p += self.config.step * g / norm;
            }
        }
        Some(w)
    }
}
