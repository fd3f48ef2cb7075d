//! Fully connected network with rectifier hidden layers and a linear output,
//! trained with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeding::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            out.push(b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer inputs and pre-activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut rng = rng_from_seed(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut d = Dense::zeros(w[0], w[1]);
                let bound = 1.0 / (w[0] as f64).sqrt();
                d.weights.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound));
                d.biases.iter_mut().for_each(|x| *x = rng.gen_range(-bound..bound));
                d
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, &mut next);
            if k < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn forward_traced(&self, x: &[f64], trace: &mut Trace) -> Vec<f64> {
        trace.inputs.clear();
        trace.pre.clear();
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut pre = Vec::with_capacity(layer.outputs);
            layer.forward_into(&cur, &mut pre);
            let post = if k < last {
                pre.iter().map(|v| v.max(0.0)).collect()
            } else {
                pre.clone()
            };
            trace.inputs.push(std::mem::replace(&mut cur, post));
            trace.pre.push(pre);
        }
        cur
    }

    /// Adds `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, trace: &Trace, d_out: &[f64], grads: &mut Mlp) {
        let mut delta = d_out.to_vec();
        let last = self.layers.len() - 1;
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if k < last {
                for (d, &z) in delta.iter_mut().zip(&trace.pre[k]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &trace.inputs[k];
            let g = &mut grads.layers[k];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (w, &x) in row.iter_mut().zip(input) {
                    *w += d * x;
                }
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Same shape, all parameters zero.
    pub fn zeros_like(&self) -> Mlp {
        Mlp::zeros(&self.sizes())
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn scale(&mut self, k: f64) {
        self.params_mut().for_each(|p| *p *= k);
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }
}

/// SGD with classical momentum: `v <- mu v + g; theta <- theta - lr v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Mlp,
}

impl Sgd {
    pub fn new(net: &Mlp, learning_rate: f64, momentum: f64) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: net.zeros_like(),
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Mlp) {
        let (lr, mu) = (self.learning_rate, self.momentum);
        for ((p, v), g) in net.params_mut().zip(self.velocity.params_mut()).zip(grads.params()) {
            *v = mu * *v + g;
            *p -= lr * *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_output_biases() {
        let mut net = Mlp::zeros(&[3, 4, 2]);
        net.layers[1].biases = vec![0.5, -1.5];
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]), vec![0.5, -1.5]);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Mlp::new(&[48, 64, 64, 8], 7);
        let b = Mlp::new(&[48, 64, 64, 8], 7);
        assert_eq!(a, b);
        assert_ne!(a, Mlp::new(&[48, 64, 64, 8], 8));
        let bound = 1.0 / 48f64.sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= bound));
        assert_eq!(a.num_params(), 48 * 64 + 64 + 64 * 64 + 64 + 64 * 8 + 8);
    }

    #[test]
    fn traced_forward_matches_plain() {
        let net = Mlp::new(&[5, 7, 3], 1);
        let x = [0.3, -0.2, 0.9, 0.0, 1.0];
        let mut t = Trace::default();
        assert_eq!(net.forward(&x), net.forward_traced(&x, &mut t));
    }

    #[test]
    fn backward_matches_finite_differences() {
        // loss = sum_k c_k * out_k, so d loss / d out = c
        let net = Mlp::new(&[4, 6, 5, 3], 3);
        let x = [0.5, -1.0, 0.25, 2.0];
        let c = [1.0, -2.0, 0.5];
        let loss = |n: &Mlp| n.forward(&x).iter().zip(&c).map(|(o, w)| o * w).sum::<f64>();
        let mut t = Trace::default();
        net.forward_traced(&x, &mut t);
        let mut g = net.zeros_like();
        net.backward(&t, &c, &mut g);
        let analytic: Vec<f64> = g.params().copied().collect();
        let h = 1e-6;
        for i in 0..net.num_params() {
            let mut plus = net.clone();
            *plus.params_mut().nth(i).unwrap() += h;
            let mut minus = net.clone();
            *minus.params_mut().nth(i).unwrap() -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!(
                (fd - analytic[i]).abs() <= 1e-6 * (1.0 + fd.abs()),
                "param {i}: {fd} vs {}",
                analytic[i]
            );
        }
    }

    #[test]
    fn sgd_momentum_update() {
        let mut net = Mlp::zeros(&[1, 1]);
        let mut g = net.zeros_like();
        g.layers[0].weights[0] = 1.0;
        let mut opt = Sgd::new(&net, 0.1, 0.9);
        opt.step(&mut net, &g);
        assert!((net.layers[0].weights[0] + 0.1).abs() < 1e-15);
        opt.step(&mut net, &g);
        // v = 0.9 * 1 + 1 = 1.9
        assert!((net.layers[0].weights[0] + 0.1 + 0.19).abs() < 1e-15);
    }
}
