//! Batched two-layer LSTM forward pass and backpropagation through time.
//!
//! Rows of a batch are sorted by length, longest first, so the rows still
//! running at step `t` are always a prefix. Each step only touches that
//! prefix; the state of a finished row stays frozen at its last real frame,
//! which is where the pose description vector is read.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::{LstmLayer, ModelInput, ModelParams};
use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Largest value below 1 and smallest positive value; keeps the output
/// strictly inside (0, 1) when the logistic function saturates.
fn open_unit(y: f64) -> f64 {
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub(crate) struct Batch {
    /// Row `r` holds caller item `order[r]`.
    pub order: Vec<usize>,
    /// `steps[t]` is `active(t) x input_dim`.
    pub steps: Vec<Array2<f64>>,
    pub emotions: Array2<f64>,
}

impl Batch {
    pub fn new(params: &ModelParams, inputs: &[ModelInput<'_>]) -> Result<Batch> {
        let dim = params.input_dim();
        let k = params.emotion_count();
        if inputs.is_empty() {
            return Err(Error::Dimension {
                what: "batch size",
                expected: 1,
                actual: 0,
            });
        }
        for input in inputs {
            if input.frames.is_empty() || input.frames.len() % dim != 0 {
                return Err(Error::Dimension {
                    what: "frame width",
                    expected: dim,
                    actual: input.frames.len(),
                });
            }
            if input.emotion.len() != k {
                return Err(Error::Dimension {
                    what: "emotion vector length",
                    expected: k,
                    actual: input.emotion.len(),
                });
            }
        }
        let len = |i: usize| inputs[i].frames.len() / dim;
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(len(i)));
        let max_len = len(order[0]);

        let mut steps = Vec::with_capacity(max_len);
        for t in 0..max_len {
            let active = order.iter().take_while(|&&i| len(i) > t).count();
            let mut x = Array2::zeros((active, dim));
            for (r, &i) in order[..active].iter().enumerate() {
                x.row_mut(r)
                    .as_slice_mut()
                    .unwrap()
                    .copy_from_slice(&inputs[i].frames[t * dim..(t + 1) * dim]);
            }
            steps.push(x);
        }
        let mut emotions = Array2::zeros((inputs.len(), k));
        for (r, &i) in order.iter().enumerate() {
            emotions.row_mut(r).as_slice_mut().unwrap().copy_from_slice(inputs[i].emotion);
        }
        Ok(Batch {
            order,
            steps,
            emotions,
        })
    }

    pub fn rows(&self) -> usize {
        self.order.len()
    }
}

pub(crate) struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// Activated gates, blocks `i, f, g, o`.
    gates: Array2<f64>,
    tanh_c: Array2<f64>,
}

fn step_forward(layer: &LstmLayer, x: ArrayView2<'_, f64>, h: &mut Array2<f64>, c: &mut Array2<f64>) -> StepCache {
    let n = x.nrows();
    let hid = layer.hidden();
    let mut a = Array2::zeros((n, 4 * hid));
    a.assign(&layer.bias);
    general_mat_mul(1.0, &x, &layer.w_input, 1.0, &mut a);
    let h_prev = h.slice(s![..n, ..]).to_owned();
    let c_prev = c.slice(s![..n, ..]).to_owned();
    general_mat_mul(1.0, &h_prev, &layer.w_hidden, 1.0, &mut a);

    let mut tanh_c = Array2::zeros((n, hid));
    for r in 0..n {
        let ar = a.row_mut(r).into_slice().unwrap();
        let cp = c_prev.row(r);
        let mut cr = c.row_mut(r);
        let mut hr = h.row_mut(r);
        for j in 0..hid {
            let i = sigmoid(ar[j]);
            let f = sigmoid(ar[hid + j]);
            let g = ar[2 * hid + j].tanh();
            let o = sigmoid(ar[3 * hid + j]);
            ar[j] = i;
            ar[hid + j] = f;
            ar[2 * hid + j] = g;
            ar[3 * hid + j] = o;
            let cn = f * cp[j] + i * g;
            let tc = cn.tanh();
            cr[j] = cn;
            tanh_c[[r, j]] = tc;
            hr[j] = o * tc;
        }
    }
    StepCache {
        x: x.to_owned(),
        h_prev,
        c_prev,
        gates: a,
        tanh_c,
    }
}

/// Backward through one step. On entry `dh`/`dc` hold the gradient with
/// respect to this step's outputs; on exit, with respect to its inputs.
fn step_backward(
    layer: &LstmLayer,
    grad: &mut LstmLayer,
    cache: &StepCache,
    dh: &mut Array2<f64>,
    dc: &mut Array2<f64>,
    want_dx: bool,
) -> Option<Array2<f64>> {
    let n = cache.x.nrows();
    let hid = layer.hidden();
    let mut da = Array2::zeros((n, 4 * hid));
    for r in 0..n {
        let gr = cache.gates.row(r);
        let dar = da.row_mut(r).into_slice().unwrap();
        for j in 0..hid {
            let (i, f, g, o) = (gr[j], gr[hid + j], gr[2 * hid + j], gr[3 * hid + j]);
            let tc = cache.tanh_c[[r, j]];
            let dhv = dh[[r, j]];
            let dcv = dc[[r, j]] + dhv * o * (1.0 - tc * tc);
            dar[j] = dcv * g * i * (1.0 - i);
            dar[hid + j] = dcv * cache.c_prev[[r, j]] * f * (1.0 - f);
            dar[2 * hid + j] = dcv * i * (1.0 - g * g);
            dar[3 * hid + j] = dhv * tc * o * (1.0 - o);
            dc[[r, j]] = dcv * f;
        }
    }
    general_mat_mul(1.0, &cache.x.t(), &da, 1.0, &mut grad.w_input);
    general_mat_mul(1.0, &cache.h_prev.t(), &da, 1.0, &mut grad.w_hidden);
    grad.bias += &da.sum_axis(Axis(0));
    let mut dh_rows = dh.slice_mut(s![..n, ..]);
    general_mat_mul(1.0, &da, &layer.w_hidden.t(), 0.0, &mut dh_rows);
    want_dx.then(|| da.dot(&layer.w_input.t()))
}

pub(crate) struct Forward {
    /// Per row, in batch row order.
    pub outputs: Vec<f64>,
    pub descriptor: Array2<f64>,
    layer1: Vec<StepCache>,
    layer2: Vec<StepCache>,
}

/// With `keep_cache` false the per-step caches are dropped as soon as they
/// are used, and [`backward`] must not be called on the result.
pub(crate) fn forward(params: &ModelParams, batch: &Batch, keep_cache: bool) -> Forward {
    let b = batch.rows();
    let (h1n, h2n) = (params.hidden1(), params.hidden2());
    let (mut h1, mut c1) = (Array2::zeros((b, h1n)), Array2::zeros((b, h1n)));
    let (mut h2, mut c2) = (Array2::zeros((b, h2n)), Array2::zeros((b, h2n)));
    let mut layer1 = Vec::with_capacity(batch.steps.len());
    let mut layer2 = Vec::with_capacity(batch.steps.len());
    for x in &batch.steps {
        let n = x.nrows();
        let s1 = step_forward(&params.layer1, x.view(), &mut h1, &mut c1);
        let s2 = step_forward(&params.layer2, h1.slice(s![..n, ..]), &mut h2, &mut c2);
        if keep_cache {
            layer1.push(s1);
            layer2.push(s2);
        }
    }
    let w_d = params.head_weights.slice(s![..h2n]);
    let w_e = params.head_weights.slice(s![h2n..]);
    let z = h2.dot(&w_d) + batch.emotions.dot(&w_e) + params.head_bias[0];
    Forward {
        outputs: z.iter().map(|&v| open_unit(sigmoid(v))).collect(),
        descriptor: h2,
        layer1,
        layer2,
    }
}

/// Gradient of `sum_r d_out[r] * output[r]` with `d_out` in batch row order.
pub(crate) fn backward(params: &ModelParams, batch: &Batch, fwd: &Forward, d_out: &[f64]) -> ModelParams {
    let b = batch.rows();
    let (h1n, h2n) = (params.hidden1(), params.hidden2());
    let mut grad = params.zeros_like();

    let dz: Array1<f64> = d_out
        .iter()
        .zip(&fwd.outputs)
        .map(|(&d, &y)| d * y * (1.0 - y))
        .collect();
    grad.head_weights
        .slice_mut(s![..h2n])
        .assign(&fwd.descriptor.t().dot(&dz));
    grad.head_weights
        .slice_mut(s![h2n..])
        .assign(&batch.emotions.t().dot(&dz));
    grad.head_bias[0] = dz.sum();

    let w_d = params.head_weights.slice(s![..h2n]);
    let mut dh2 = Array2::zeros((b, h2n));
    for r in 0..b {
        dh2.row_mut(r).scaled_add(dz[r], &w_d);
    }
    let mut dc2 = Array2::zeros((b, h2n));
    let mut dh1 = Array2::zeros((b, h1n));
    let mut dc1 = Array2::zeros((b, h1n));
    for t in (0..batch.steps.len()).rev() {
        let dx = step_backward(&params.layer2, &mut grad.layer2, &fwd.layer2[t], &mut dh2, &mut dc2, true)
            .expect("dx requested");
        let n = dx.nrows();
        let mut rows = dh1.slice_mut(s![..n, ..]);
        rows += &dx;
        step_backward(&params.layer1, &mut grad.layer1, &fwd.layer1[t], &mut dh1, &mut dc1, false);
    }
    grad
}
