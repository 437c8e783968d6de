//! GP-SARSA with a linear belief kernel and a delta action kernel.
//!
//! The delta kernel splits the Gaussian process into one independent block
//! per action. Each block keeps a sparse dictionary, the inverse of its Gram
//! matrix, and the Gaussian posterior `(mu, sigma)` over the Q-values at the
//! dictionary points. Episodes are learned with the Monte-Carlo form of
//! GP temporal differences: each visited `(b, a)` is regressed onto its
//! discounted return-to-go with observation noise `sigma2`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::nn::linear_kernel;

use super::{argmax_legal, Observation, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub sigma2: f64,
    pub nu: f64,
    pub scale: f64,
    pub gamma: f64,
    pub dictionary_cap: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            sigma2: 25.0,
            nu: 0.001,
            scale: 3.0,
            gamma: crate::env::GAMMA,
            dictionary_cap: 1000,
        }
    }
}

/// Posterior for one action. Matrices are dense row-major `d x d`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Block {
    points: Vec<Vec<f64>>,
    /// Residual of each point when it entered the dictionary.
    residuals: Vec<f64>,
    kinv: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

struct Projection {
    alpha: Vec<f64>,
    residual: f64,
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d)
        .map(|i| linear_kernel(&m[i * d..(i + 1) * d], v))
        .collect()
}

impl Block {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn project(&self, x: &[f64]) -> Projection {
        let k: Vec<f64> = self.points.iter().map(|p| linear_kernel(p, x)).collect();
        let alpha = mat_vec(&self.kinv, &k);
        let residual = (linear_kernel(x, x) - linear_kernel(&k, &alpha)).max(0.0);
        Projection { alpha, residual }
    }

    fn mean_var(&self, x: &[f64]) -> (f64, f64) {
        let p = self.project(x);
        let s_alpha = mat_vec(&self.sigma, &p.alpha);
        (
            linear_kernel(&p.alpha, &self.mu),
            (linear_kernel(&p.alpha, &s_alpha) + p.residual).max(0.0),
        )
    }

    /// Extends the dictionary with `x`, whose projection is `p`.
    fn insert(&mut self, x: &[f64], p: &Projection) {
        let d = self.len();
        let n = d + 1;
        let delta = p.residual;
        let a = &p.alpha;

        let mut kinv = vec![0.0; n * n];
        for i in 0..d {
            for j in 0..d {
                kinv[i * n + j] = self.kinv[i * d + j] + a[i] * a[j] / delta;
            }
            kinv[i * n + d] = -a[i] / delta;
            kinv[d * n + i] = -a[i] / delta;
        }
        kinv[d * n + d] = 1.0 / delta;

        let s_alpha = mat_vec(&self.sigma, a);
        let mut sigma = vec![0.0; n * n];
        for i in 0..d {
            sigma[i * n..i * n + d].copy_from_slice(&self.sigma[i * d..(i + 1) * d]);
            sigma[i * n + d] = s_alpha[i];
            sigma[d * n + i] = s_alpha[i];
        }
        sigma[d * n + d] = linear_kernel(a, &s_alpha) + delta;

        self.mu.push(linear_kernel(a, &self.mu));
        self.kinv = kinv;
        self.sigma = sigma;
        self.points.push(x.to_vec());
        self.residuals.push(delta);
    }

    /// Drops point `j`, marginalising it out of the posterior.
    fn evict(&mut self, j: usize) {
        let d = self.len();
        let n = d - 1;
        let pjj = self.kinv[j * d + j];
        let keep: Vec<usize> = (0..d).filter(|&i| i != j).collect();
        let mut kinv = vec![0.0; n * n];
        let mut sigma = vec![0.0; n * n];
        for (r, &i) in keep.iter().enumerate() {
            for (c, &k) in keep.iter().enumerate() {
                kinv[r * n + c] =
                    self.kinv[i * d + k] - self.kinv[i * d + j] * self.kinv[j * d + k] / pjj;
                sigma[r * n + c] = self.sigma[i * d + k];
            }
        }
        self.kinv = kinv;
        self.sigma = sigma;
        self.mu.remove(j);
        self.points.remove(j);
        self.residuals.remove(j);
    }

    /// Kalman update with observation `y = Q(x) + noise`.
    fn condition(&mut self, p: &Projection, y: f64, noise: f64) {
        let d = self.len();
        let s_alpha = mat_vec(&self.sigma, &p.alpha);
        let s = linear_kernel(&p.alpha, &s_alpha) + p.residual + noise;
        let err = y - linear_kernel(&p.alpha, &self.mu);
        for (m, sa) in self.mu.iter_mut().zip(&s_alpha) {
            *m += sa * err / s;
        }
        for i in 0..d {
            for j in 0..d {
                self.sigma[i * d + j] -= s_alpha[i] * s_alpha[j] / s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSarsa {
    pub config: GpConfig,
    blocks: Vec<Block>,
    pub dialogues: u64,
    #[serde(skip)]
    episode: Vec<(Vec<f64>, usize, f64)>,
}

impl GpSarsa {
    pub fn new(n_actions: usize, config: GpConfig) -> Self {
        GpSarsa {
            config,
            blocks: vec![Block::default(); n_actions],
            dialogues: 0,
            episode: Vec::new(),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.blocks.len()
    }

    pub fn dictionary_size(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }

    /// Posterior mean and variance of `Q(x, a)`.
    pub fn posterior(&self, x: &[f64], action: usize) -> (f64, f64) {
        self.blocks[action].mean_var(x)
    }

    /// Regresses `Q(x, a)` onto the target `y`, growing the dictionary when
    /// `x` is not already well represented.
    pub fn observe_point(&mut self, x: &[f64], action: usize, y: f64) {
        let cap = self.config.dictionary_cap;
        let total = self.dictionary_size();
        let block = &mut self.blocks[action];
        let mut p = block.project(x);
        if p.residual > self.config.nu {
            let mut room = total < cap;
            if !room {
                let weakest = block
                    .residuals
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(j, &r)| (j, r));
                if let Some((j, r)) = weakest {
                    if r < p.residual {
                        block.evict(j);
                        p = block.project(x);
                        room = true;
                    }
                }
            }
            if room {
                block.insert(x, &p);
                p = block.project(x);
            }
        }
        block.condition(&p, y, self.config.sigma2);
    }

    pub fn greedy(&self, obs: &Observation) -> usize {
        let means: Vec<f64> = (0..self.n_actions())
            .map(|a| {
                if obs.mask[a] {
                    self.posterior(obs.features, a).0
                } else {
                    0.0
                }
            })
            .collect();
        argmax_legal(&means, obs.mask)
    }

    /// Samples each legal Q-value from its posterior, stretched by `scale`.
    pub fn explore<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> usize {
        let samples: Vec<f64> = (0..self.n_actions())
            .map(|a| {
                if !obs.mask[a] {
                    return 0.0;
                }
                let (m, v) = self.posterior(obs.features, a);
                let z: f64 = rng.sample(StandardNormal);
                m + self.config.scale * v.sqrt() * z
            })
            .collect();
        argmax_legal(&samples, obs.mask)
    }

    pub fn observe(&mut self, t: &Transition) {
        self.episode.push((t.features.to_vec(), t.action, t.reward));
    }

    pub fn end_episode(&mut self) {
        let episode = std::mem::take(&mut self.episode);
        let mut g = 0.0;
        let mut targets = vec![0.0; episode.len()];
        for (i, (_, _, r)) in episode.iter().enumerate().rev() {
            g = r + self.config.gamma * g;
            targets[i] = g;
        }
        for ((x, a, _), y) in episode.iter().zip(targets) {
            self.observe_point(x, *a, y);
        }
        self.dialogues += 1;
    }
}
