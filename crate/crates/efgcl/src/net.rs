//! Small dense networks with hand-rolled forward and backward passes.
//!
//! Hidden layers use tanh, the output layer is linear. Everything is `f64`
//! so analytic gradients can be checked against central finite differences
//! at tight tolerances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dense layer, weights stored row-major (`out_dim` rows of `in_dim`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    /// y = W x + b
    fn affine(&self, input: &[f64], out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for (row, slot) in out.iter_mut().enumerate() {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = self.biases[row];
            for (wi, xi) in w.iter().zip(input) {
                acc += wi * xi;
            }
            *slot = acc;
        }
    }
}

/// Multilayer perceptron with tanh hidden activations and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer activations cached by [`Mlp::forward_cached`] for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l+1]` is layer `l`'s output
    /// after its activation function.
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache never empty")
    }
}

impl Mlp {
    /// Builds a zero-initialized net with the given layer sizes
    /// (`sizes = [in, h1, ..., out]`).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config("mlp needs at least two layer sizes".into()));
        }
        let layers = sizes
            .windows(2)
            .map(|w| DenseLayer::zeros(w[0], w[1]))
            .collect();
        Ok(Self { layers })
    }

    /// Uniform Glorot-style init. `last_layer_scale` shrinks the output layer,
    /// which keeps initial policy means near zero.
    pub fn init(sizes: &[usize], rng: &mut ChaCha8Rng, last_layer_scale: f64) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let n_layers = net.layers.len();
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let bound = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            let scale = if l + 1 == n_layers { last_layer_scale } else { 1.0 };
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound) * scale;
            }
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "mlp input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let n = self.layers.len();
        let mut cur = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine(&cur, &mut next);
            if l + 1 < n {
                for v in &mut next {
                    *v = v.tanh();
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Forward pass that keeps per-layer activations for [`Mlp::backward`].
    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        self.check_input(input)?;
        let n = self.layers.len();
        let mut activations = Vec::with_capacity(n + 1);
        activations.push(input.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.out_dim];
            layer.affine(&activations[l], &mut next);
            if l + 1 < n {
                for v in &mut next {
                    *v = v.tanh();
                }
            }
            activations.push(next);
        }
        Ok(ForwardCache { activations })
    }

    /// Backpropagates `grad_output` (dL/dy) through the cached pass,
    /// accumulating parameter gradients into `grads` and returning dL/dx.
    ///
    /// tanh' is recovered from the cached post-activation: 1 - a^2.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut Mlp,
    ) -> Vec<f64> {
        let n = self.layers.len();
        debug_assert_eq!(grad_output.len(), self.output_dim());
        let mut delta = grad_output.to_vec();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let input = &cache.activations[l];
            // Output layer is linear; hidden layers need the tanh jacobian.
            if l + 1 < n {
                let act = &cache.activations[l + 1];
                for (d, a) in delta.iter_mut().zip(act) {
                    *d *= 1.0 - a * a;
                }
            }
            let g = &mut grads.layers[l];
            let mut grad_input = vec![0.0; layer.in_dim];
            for (row, &d) in delta.iter().enumerate() {
                g.biases[row] += d;
                let w_row = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                let g_row = &mut g.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                for ((gw, xi), (gi, wi)) in g_row
                    .iter_mut()
                    .zip(input)
                    .zip(grad_input.iter_mut().zip(w_row))
                {
                    *gw += d * xi;
                    *gi += d * wi;
                }
            }
            delta = grad_input;
        }
        delta
    }

    /// Same shape, all parameters zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flattened view of all parameters, weights before biases per layer.
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
    }

    /// Inverse of [`Mlp::flatten_into`]; returns how many values were consumed.
    pub fn unflatten_from(&mut self, flat: &[f64]) -> usize {
        let mut idx = 0;
        for l in &mut self.layers {
            l.weights.copy_from_slice(&flat[idx..idx + l.weights.len()]);
            idx += l.weights.len();
            l.biases.copy_from_slice(&flat[idx..idx + l.biases.len()]);
            idx += l.biases.len();
        }
        idx
    }

    /// In-place `self += scale * other`, used when reducing worker gradients.
    pub fn add_scaled(&mut self, other: &Mlp, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += scale * y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_net_maps_everything_to_zero() {
        let net = Mlp::zeros(&[3, 4, 2]).unwrap();
        let out = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_single_layer() {
        let mut net = Mlp::zeros(&[2, 2]).unwrap();
        net.layers[0].weights = vec![1.0, 0.0, 0.0, 1.0];
        let out = net.forward(&[1.0, 2.0]).unwrap();
        assert_eq!(out, vec![1.0, 2.0]);
    }

    /// Independent dense-algebra oracle: explicit loops over a 2-4-1 net.
    #[test]
    fn forward_matches_hand_rolled_matmul() {
        let mut r = rng(7);
        let net = Mlp::init(&[2, 4, 1], &mut r, 1.0).unwrap();
        let input = [0.3, -1.2];

        // Oracle written without reusing any Mlp machinery.
        let l0 = &net.layers[0];
        let mut hidden = [0.0; 4];
        for i in 0..4 {
            let mut acc = l0.biases[i];
            for j in 0..2 {
                acc += l0.weights[i * 2 + j] * input[j];
            }
            hidden[i] = acc.tanh();
        }
        let l1 = &net.layers[1];
        let mut expected = l1.biases[0];
        for j in 0..4 {
            expected += l1.weights[j] * hidden[j];
        }

        let out = net.forward(&input).unwrap();
        assert!((out[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn flatten_round_trip() {
        let mut r = rng(11);
        let net = Mlp::init(&[3, 5, 2], &mut r, 1.0).unwrap();
        let mut flat = Vec::new();
        net.flatten_into(&mut flat);
        assert_eq!(flat.len(), net.param_count());
        let mut copy = net.zeros_like();
        let used = copy.unflatten_from(&flat);
        assert_eq!(used, flat.len());
        assert_eq!(copy, net);
    }

    /// Backprop vs central finite differences on a scalar loss.
    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng(3);
        let net = Mlp::init(&[3, 8, 2], &mut r, 1.0).unwrap();
        let input = [0.4, -0.9, 1.7];
        // Loss: sum of squared outputs.
        let loss = |n: &Mlp| -> f64 {
            n.forward(&input).unwrap().iter().map(|y| y * y).sum()
        };

        let cache = net.forward_cached(&input).unwrap();
        let grad_out: Vec<f64> = cache.output().iter().map(|y| 2.0 * y).collect();
        let mut grads = net.zeros_like();
        net.backward(&cache, &grad_out, &mut grads);

        let mut flat_g = Vec::new();
        grads.flatten_into(&mut flat_g);
        let mut flat_p = Vec::new();
        net.flatten_into(&mut flat_p);

        let h = 1e-5;
        for k in 0..flat_p.len() {
            let mut plus = net.clone();
            let mut minus = net.clone();
            let mut pp = flat_p.clone();
            pp[k] += h;
            plus.unflatten_from(&pp);
            pp[k] -= 2.0 * h;
            minus.unflatten_from(&pp);
            let num = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let ana = flat_g[k];
            let rel = (num - ana).abs() / (num.abs() + ana.abs()).max(1e-4);
            assert!(rel < 1e-6, "param {k}: numeric {num} vs analytic {ana}");
        }
    }
}
