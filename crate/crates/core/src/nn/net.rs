use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `in -> h1 -> h2 -> out` with rectifier hidden units and a linear output.
/// Parameters live in one flat vector: `W1, b1, W2, b2, W3, b3`, each weight
/// matrix row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net2 {
    pub sizes: [usize; 4],
    pub params: Vec<f64>,
}

/// Activations kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Cache {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub out: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn layer(w: &[f64], b: &[f64], x: &[f64], relu: bool, out: &mut Vec<f64>) {
    let n_in = x.len();
    out.clear();
    out.extend(b.iter().enumerate().map(|(o, &bo)| {
        let z = bo + dot(&w[o * n_in..(o + 1) * n_in], x);
        if relu {
            z.max(0.0)
        } else {
            z
        }
    }));
}

/// Accumulates the weight and bias gradients of one layer and, when
/// `dx` is given, the gradient with respect to its input.
fn layer_back(
    w: &[f64],
    x: &[f64],
    dz: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    dx: Option<&mut Vec<f64>>,
) {
    let n_in = x.len();
    for (o, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        gb[o] += d;
        for (g, &xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
            *g += d * xi;
        }
    }
    if let Some(dx) = dx {
        dx.clear();
        dx.resize(n_in, 0.0);
        for (o, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (g, &wi) in dx.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                *g += d * wi;
            }
        }
    }
}

impl Net2 {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new<R: Rng + ?Sized>(sizes: [usize; 4], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let off = net.offsets();
        for (l, &(w, b)) in [(off[0], off[1]), (off[2], off[3]), (off[4], off[5])]
            .iter()
            .enumerate()
        {
            let bound = 1.0 / (sizes[l] as f64).sqrt();
            for p in &mut net.params[w..b] {
                *p = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn zeros(sizes: [usize; 4]) -> Self {
        let [i, h1, h2, o] = sizes;
        let n = h1 * i + h1 + h2 * h1 + h2 + o * h2 + o;
        Net2 {
            sizes,
            params: vec![0.0; n],
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_out(&self) -> usize {
        self.sizes[3]
    }

    /// Start offsets of `W1, b1, W2, b2, W3, b3` plus the end.
    fn offsets(&self) -> [usize; 7] {
        let [i, h1, h2, o] = self.sizes;
        let w1 = 0;
        let b1 = w1 + h1 * i;
        let w2 = b1 + h1;
        let b2 = w2 + h2 * h1;
        let w3 = b2 + h2;
        let b3 = w3 + o * h2;
        [w1, b1, w2, b2, w3, b3, b3 + o]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.out)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<Cache> {
        if x.len() != self.sizes[0] {
            return Err(Error::Dimension {
                expected: self.sizes[0],
                got: x.len(),
            });
        }
        let off = self.offsets();
        let p = &self.params;
        let mut c = Cache::default();
        layer(&p[off[0]..off[1]], &p[off[1]..off[2]], x, true, &mut c.a1);
        layer(
            &p[off[2]..off[3]],
            &p[off[3]..off[4]],
            &c.a1,
            true,
            &mut c.a2,
        );
        layer(
            &p[off[4]..off[5]],
            &p[off[5]..off[6]],
            &c.a2,
            false,
            &mut c.out,
        );
        Ok(c)
    }

    /// Adds `d(dout · out)/d(params)` into `grads`.
    pub fn backward(&self, x: &[f64], cache: &Cache, dout: &[f64], grads: &mut [f64]) {
        let off = self.offsets();
        let p = &self.params;
        let (g12, g3) = grads.split_at_mut(off[4]);
        let (gw3, gb3) = g3.split_at_mut(off[5] - off[4]);
        let mut da2 = Vec::new();
        layer_back(
            &p[off[4]..off[5]],
            &cache.a2,
            dout,
            gw3,
            gb3,
            Some(&mut da2),
        );
        for (d, &a) in da2.iter_mut().zip(&cache.a2) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        let (g1, g2) = g12.split_at_mut(off[2]);
        let (gw2, gb2) = g2.split_at_mut(off[3] - off[2]);
        let mut da1 = Vec::new();
        layer_back(
            &p[off[2]..off[3]],
            &cache.a1,
            &da2,
            gw2,
            gb2,
            Some(&mut da1),
        );
        for (d, &a) in da1.iter_mut().zip(&cache.a1) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        let (gw1, gb1) = g1.split_at_mut(off[1]);
        layer_back(&p[off[0]..off[1]], x, &da1, gw1, gb1, None);
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

/// Softmax over the entries with `mask[i] == true`; masked entries are 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let z: f64 = p.iter().sum();
    if z > 0.0 && z.is_finite() {
        p.iter_mut().for_each(|x| *x /= z);
    }
    p
}

/// Gradient of `log pi(action)` with respect to the logits.
pub fn dlogpi_dlogits(probs: &[f64], mask: &[bool], action: usize) -> Vec<f64> {
    probs
        .iter()
        .zip(mask)
        .enumerate()
        .map(|(i, (&p, &m))| {
            if !m {
                0.0
            } else if i == action {
                1.0 - p
            } else {
                -p
            }
        })
        .collect()
}
