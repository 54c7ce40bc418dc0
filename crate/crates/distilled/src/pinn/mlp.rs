//! Dense feed-forward network on (r, θ) with tanh hidden layers, an identity
//! output, forward jet propagation for input derivatives, reverse
//! accumulation for parameter gradients, and Adam.
//!
//! Parameters live in one flat buffer laid out [W1, b1, W2, b2, ...] with
//! weights row-major (out × in), which keeps the optimizer a plain loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::jet::Jet2;
use crate::error::{DistillError, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy)]
pub struct LayerLayout {
    pub w_off: usize,
    pub b_off: usize,
    pub n_in: usize,
    pub n_out: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Xavier-uniform initialization, biases zero, deterministic per seed.
    pub fn new(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 || widths[0] != 2 || *widths.last().unwrap() != 1 {
            return Err(DistillError::InvalidConfig(format!(
                "mlp widths must run from 2 inputs to 1 output, got {widths:?}"
            )));
        }
        let mut rng = rng_from(seed);
        let mut params = Vec::new();
        for w in widths.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            for _ in 0..n_in * n_out {
                params.push(rng.gen_range(-bound..bound));
            }
            params.extend(std::iter::repeat_n(0.0, n_out));
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            params,
        })
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params.len() != expected {
            return Err(DistillError::ShapeMismatch {
                context: "mlp params",
                expected,
                got: params.len(),
            });
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            params,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn layouts(&self) -> Vec<LayerLayout> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let l = LayerLayout {
                    w_off: off,
                    b_off: off + w[0] * w[1],
                    n_in: w[0],
                    n_out: w[1],
                };
                off += w[0] * w[1] + w[1];
                l
            })
            .collect()
    }

    /// Plain scalar forward pass.
    pub fn value(&self, r: f64, theta: f64) -> f64 {
        let layouts = self.layouts();
        let mut a = vec![r, theta];
        for (l, lay) in layouts.iter().enumerate() {
            let mut z = vec![0.0; lay.n_out];
            for o in 0..lay.n_out {
                let mut acc = self.params[lay.b_off + o];
                let w_row = &self.params[lay.w_off + o * lay.n_in..lay.w_off + (o + 1) * lay.n_in];
                for (wi, ai) in w_row.iter().zip(&a) {
                    acc += wi * ai;
                }
                z[o] = acc;
            }
            if l + 1 < layouts.len() {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            a = z;
        }
        a[0]
    }

    /// Jet forward pass in one input direction (0 = r, 1 = θ); returns the
    /// output jet and the cached intermediate state for reverse accumulation.
    pub fn forward_jet(&self, r: f64, theta: f64, direction: usize) -> (Jet2, JetTrace) {
        let layouts = self.layouts();
        let input = if direction == 0 {
            vec![Jet2::seeded(r), Jet2::constant(theta)]
        } else {
            vec![Jet2::constant(r), Jet2::seeded(theta)]
        };
        let mut trace = JetTrace {
            inputs: Vec::with_capacity(layouts.len()),
            pre: Vec::with_capacity(layouts.len()),
        };
        let mut a = input;
        for (l, lay) in layouts.iter().enumerate() {
            let mut z = vec![Jet2::constant(0.0); lay.n_out];
            for o in 0..lay.n_out {
                let w_row = &self.params[lay.w_off + o * lay.n_in..lay.w_off + (o + 1) * lay.n_in];
                let mut acc = Jet2 {
                    v: self.params[lay.b_off + o],
                    d: 0.0,
                    dd: 0.0,
                };
                for (wi, ai) in w_row.iter().zip(&a) {
                    acc.v += wi * ai.v;
                    acc.d += wi * ai.d;
                    acc.dd += wi * ai.dd;
                }
                z[o] = acc;
            }
            trace.inputs.push(a);
            trace.pre.push(z.clone());
            if l + 1 < layouts.len() {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            a = z;
        }
        (a[0], trace)
    }

    /// Reverse accumulation through a cached jet pass. `out_adj` are the
    /// loss adjoints with respect to the output (value, first, second);
    /// parameter gradients accumulate into `grads` (same flat layout).
    pub fn backward_jet(&self, trace: &JetTrace, out_adj: (f64, f64, f64), grads: &mut [f64]) {
        let layouts = self.layouts();
        // Adjoints with respect to the current layer's pre-activation jets.
        let mut gz_v = vec![out_adj.0];
        let mut gz_d = vec![out_adj.1];
        let mut gz_dd = vec![out_adj.2];
        for l in (0..layouts.len()).rev() {
            let lay = layouts[l];
            let a_in = &trace.inputs[l];
            // Parameter gradients: z = W a + b separately per jet component.
            for o in 0..lay.n_out {
                grads[lay.b_off + o] += gz_v[o];
                let row = lay.w_off + o * lay.n_in;
                for (i, ai) in a_in.iter().enumerate() {
                    grads[row + i] += gz_v[o] * ai.v + gz_d[o] * ai.d + gz_dd[o] * ai.dd;
                }
            }
            if l == 0 {
                break;
            }
            // Adjoints of the previous layer's post-activation jets.
            let mut ga_v = vec![0.0; lay.n_in];
            let mut ga_d = vec![0.0; lay.n_in];
            let mut ga_dd = vec![0.0; lay.n_in];
            for o in 0..lay.n_out {
                let row = lay.w_off + o * lay.n_in;
                for i in 0..lay.n_in {
                    let w = self.params[row + i];
                    ga_v[i] += w * gz_v[o];
                    ga_d[i] += w * gz_d[o];
                    ga_dd[i] += w * gz_dd[o];
                }
            }
            // Through tanh of layer l−1 (the last layer has no activation,
            // which is why this sits after the l == 0 break).
            let prev_pre = &trace.pre[l - 1];
            gz_v = vec![0.0; lay.n_in];
            gz_d = vec![0.0; lay.n_in];
            gz_dd = vec![0.0; lay.n_in];
            for i in 0..lay.n_in {
                let z = prev_pre[i];
                let t = z.v.tanh();
                let s = 1.0 - t * t;
                let s2 = -2.0 * t * s; // σ''
                let s3 = -2.0 * s * (1.0 - 3.0 * t * t); // σ'''
                gz_v[i] = ga_v[i] * s + ga_d[i] * s2 * z.d + ga_dd[i] * (s3 * z.d * z.d + s2 * z.dd);
                gz_d[i] = ga_d[i] * s + ga_dd[i] * 2.0 * s2 * z.d;
                gz_dd[i] = ga_dd[i] * s;
            }
        }
    }

    /// Value-only forward caching activations for the cheap backprop path
    /// used by labeled points without a residual term.
    pub fn forward_value(&self, r: f64, theta: f64) -> (f64, ValueTrace) {
        let layouts = self.layouts();
        let mut trace = ValueTrace {
            inputs: Vec::with_capacity(layouts.len()),
            pre: Vec::with_capacity(layouts.len()),
        };
        let mut a = vec![r, theta];
        for (l, lay) in layouts.iter().enumerate() {
            let mut z = vec![0.0; lay.n_out];
            for o in 0..lay.n_out {
                let mut acc = self.params[lay.b_off + o];
                let row = &self.params[lay.w_off + o * lay.n_in..lay.w_off + (o + 1) * lay.n_in];
                for (wi, ai) in row.iter().zip(&a) {
                    acc += wi * ai;
                }
                z[o] = acc;
            }
            trace.inputs.push(a);
            trace.pre.push(z.clone());
            if l + 1 < layouts.len() {
                for v in z.iter_mut() {
                    *v = v.tanh();
                }
            }
            a = z;
        }
        (a[0], trace)
    }

    pub fn backward_value(&self, trace: &ValueTrace, out_adj: f64, grads: &mut [f64]) {
        let layouts = self.layouts();
        let mut gz = vec![out_adj];
        for l in (0..layouts.len()).rev() {
            let lay = layouts[l];
            let a_in = &trace.inputs[l];
            for o in 0..lay.n_out {
                grads[lay.b_off + o] += gz[o];
                let row = lay.w_off + o * lay.n_in;
                for (i, ai) in a_in.iter().enumerate() {
                    grads[row + i] += gz[o] * ai;
                }
            }
            if l == 0 {
                break;
            }
            let mut ga = vec![0.0; lay.n_in];
            for o in 0..lay.n_out {
                let row = lay.w_off + o * lay.n_in;
                for i in 0..lay.n_in {
                    ga[i] += self.params[row + i] * gz[o];
                }
            }
            let prev_pre = &trace.pre[l - 1];
            gz = (0..lay.n_in)
                .map(|i| {
                    let t = prev_pre[i].tanh();
                    ga[i] * (1.0 - t * t)
                })
                .collect();
        }
    }
}

/// Cached jet intermediates: per layer, the input jets and pre-activation
/// jets.
pub struct JetTrace {
    inputs: Vec<Vec<Jet2>>,
    pre: Vec<Vec<Jet2>>,
}

pub struct ValueTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// Adam with bias correction over a flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    t: usize,
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], p: AdamParams) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - p.beta1.powi(self.t as i32);
        let bc2 = 1.0 - p.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * g;
            self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= p.lr * m_hat / (v_hat.sqrt() + p.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_network_is_its_output_bias() {
        let widths = [2usize, 3, 1];
        let n: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let mut params = vec![0.0; n];
        *params.last_mut().unwrap() = 0.7; // output bias
        let net = Mlp::from_params(&widths, params).unwrap();
        let (out, _) = net.forward_jet(0.3, 1.1, 0);
        assert_eq!(out.v, 0.7);
        assert_eq!(out.d, 0.0);
        assert_eq!(out.dd, 0.0);
    }

    #[test]
    fn single_linear_layer_derivatives() {
        // y = 2 r + 3 θ: gradient (2, 3), pure seconds zero.
        let net = Mlp::from_params(&[2, 1], vec![2.0, 3.0, 0.0]).unwrap();
        let (jr, _) = net.forward_jet(0.4, -0.2, 0);
        let (jt, _) = net.forward_jet(0.4, -0.2, 1);
        assert!((jr.d - 2.0).abs() < 1e-15);
        assert!((jt.d - 3.0).abs() < 1e-15);
        assert_eq!(jr.dd, 0.0);
        assert_eq!(jt.dd, 0.0);
    }

    #[test]
    fn jet_derivatives_match_finite_differences_on_random_nets() {
        let h = 1e-4;
        for seed in 0..20 {
            let net = Mlp::new(&[2, 6, 6, 1], seed).unwrap();
            let (r, theta) = (0.3 + 0.01 * seed as f64, 0.9 - 0.02 * seed as f64);
            let (jet, _) = net.forward_jet(r, theta, 0);
            let f = |x: f64| net.value(x, theta);
            let d_fd = (f(r + h) - f(r - h)) / (2.0 * h);
            let dd_fd = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            let rel_d = (jet.d - d_fd).abs() / d_fd.abs().max(1e-6);
            let rel_dd = (jet.dd - dd_fd).abs() / dd_fd.abs().max(1e-6);
            assert!(rel_d < 1e-4, "seed {seed}: d {} vs fd {d_fd}", jet.d);
            assert!(rel_dd < 1e-3, "seed {seed}: dd {} vs fd {dd_fd}", jet.dd);
        }
    }

    #[test]
    fn value_and_jet_forward_agree() {
        let net = Mlp::new(&[2, 5, 5, 1], 3).unwrap();
        let (j, _) = net.forward_jet(0.25, 2.5, 1);
        assert!((j.v - net.value(0.25, 2.5)).abs() < 1e-14);
    }

    #[test]
    fn backward_value_matches_parameter_finite_differences() {
        let net = Mlp::new(&[2, 4, 1], 11).unwrap();
        let (r, theta) = (0.6, 1.3);
        let (_, trace) = net.forward_value(r, theta);
        let mut grads = vec![0.0; net.n_params()];
        net.backward_value(&trace, 1.0, &mut grads);
        let h = 1e-6;
        for i in 0..net.n_params() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (plus.value(r, theta) - minus.value(r, theta)) / (2.0 * h);
            assert!(
                (grads[i] - fd).abs() < 1e-6 * fd.abs().max(1.0),
                "param {i}: {} vs {fd}",
                grads[i]
            );
        }
    }

    #[test]
    fn backward_jet_matches_parameter_finite_differences() {
        // Scalar functional touching value, first and second output
        // components: F = y + 2 y_r + 3 y_rr.
        let net = Mlp::new(&[2, 4, 4, 1], 19).unwrap();
        let (r, theta) = (0.35, 0.8);
        let functional = |n: &Mlp| {
            let (j, _) = n.forward_jet(r, theta, 0);
            j.v + 2.0 * j.d + 3.0 * j.dd
        };
        let (_, trace) = net.forward_jet(r, theta, 0);
        let mut grads = vec![0.0; net.n_params()];
        net.backward_jet(&trace, (1.0, 2.0, 3.0), &mut grads);
        let h = 1e-5;
        for i in (0..net.n_params()).step_by(3) {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (functional(&plus) - functional(&minus)) / (2.0 * h);
            let rel = (grads[i] - fd).abs() / fd.abs().max(1e-4);
            assert!(rel < 1e-3, "param {i}: {} vs {fd}", grads[i]);
        }
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters_unchanged() {
        let mut params = vec![0.5, -0.25];
        let mut st = AdamState::new(2);
        st.step(&mut params, &[0.0, 0.0], AdamParams::with_lr(0.001));
        assert_eq!(params, vec![0.5, -0.25]);
    }

    #[test]
    fn adam_first_step_is_minus_lr() {
        // With g = 1: m̂ = v̂ = 1 after bias correction, so Δ ≈ −lr.
        let mut params = vec![0.0];
        let mut st = AdamState::new(1);
        st.step(&mut params, &[1.0], AdamParams::with_lr(0.001));
        assert!((params[0] + 0.001).abs() < 1e-8, "Δ = {}", params[0]);
    }
}
