//! Single-layer LSTM with a linear read-out, batched over samples.
//!
//! Gate pre-activations are stacked in one `4H`-row block in the order
//! input, forget, output, candidate:
//!
//! ```text
//! z = W x + A h_prev + b
//! i = sigmoid(z_i)   f = sigmoid(z_f)   o = sigmoid(z_o)   g = tanh(z_g)
//! c = f * c_prev + i * g
//! h = o * tanh(c)
//! y = V h_s + v          (after the last step of a window)
//! ```
//!
//! Batched tensors keep one sample per column, so every product is a plain
//! gemm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RomError};
use crate::rng::SplitMix64;

/// Gate order within the stacked blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];
}

/// Trainable parameters. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// 4H x D_in
    pub w: DMatrix<f64>,
    /// 4H x H
    pub a: DMatrix<f64>,
    /// 4H
    pub b: DVector<f64>,
    /// D_out x H
    pub head_w: DMatrix<f64>,
    /// D_out
    pub head_b: DVector<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize, output_size: usize) -> Self {
        Self {
            w: DMatrix::zeros(4 * hidden_size, input_size),
            a: DMatrix::zeros(4 * hidden_size, hidden_size),
            b: DVector::zeros(4 * hidden_size),
            head_w: DMatrix::zeros(output_size, hidden_size),
            head_b: DVector::zeros(output_size),
        }
    }

    /// Glorot-uniform weights drawn gate by gate (W then A), then the head;
    /// zero biases except the forget gate, which starts at 1.
    pub fn glorot(input_size: usize, hidden_size: usize, output_size: usize, seed: u64) -> Self {
        let h = hidden_size;
        let mut p = Self::zeros(input_size, h, output_size);
        let mut rng = SplitMix64::new(seed);
        let mut fill = |m: &mut DMatrix<f64>, rows: std::ops::Range<usize>, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for j in 0..m.ncols() {
                for r in rows.clone() {
                    m[(r, j)] = rng.uniform(-limit, limit);
                }
            }
        };
        for gate in Gate::ALL {
            let rows = gate as usize * h..(gate as usize + 1) * h;
            fill(&mut p.w, rows.clone(), input_size, h);
            fill(&mut p.a, rows, h, h);
        }
        fill(&mut p.head_w, 0..output_size, h, output_size);
        p.b.rows_mut(Gate::Forget as usize * h, h).fill(1.0);
        p
    }

    pub fn input_size(&self) -> usize {
        self.w.ncols()
    }

    pub fn hidden_size(&self) -> usize {
        self.a.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.head_w.nrows()
    }

    pub fn slices(&self) -> [&[f64]; 5] {
        [
            self.w.as_slice(),
            self.a.as_slice(),
            self.b.as_slice(),
            self.head_w.as_slice(),
            self.head_b.as_slice(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.w.as_mut_slice(),
            self.a.as_mut_slice(),
            self.b.as_mut_slice(),
            self.head_w.as_mut_slice(),
            self.head_b.as_mut_slice(),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Rows of gate `gate` in the stacked matrices.
    pub fn gate_rows(&self, gate: Gate) -> std::ops::Range<usize> {
        let h = self.hidden_size();
        gate as usize * h..(gate as usize + 1) * h
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Everything the backward pass needs from one batched forward pass over a
/// window of `s` steps.
#[derive(Debug, Clone)]
pub struct SequenceCache {
    /// `s` inputs, each D_in x N
    pub inputs: Vec<DMatrix<f64>>,
    /// `s + 1` hidden states (index 0 is the zero initial state), H x N
    pub h: Vec<DMatrix<f64>>,
    /// `s + 1` cell states, H x N
    pub c: Vec<DMatrix<f64>>,
    /// `s` activated gate blocks (i, f, o sigmoid; g tanh), 4H x N
    pub gates: Vec<DMatrix<f64>>,
    /// `s` values of tanh(c_t)
    pub tanh_c: Vec<DMatrix<f64>>,
}

/// Pre-activations `W x + A h_prev + b` for a batch.
fn pre_activation(p: &LstmParams, x: &DMatrix<f64>, h_prev: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let mut z = DMatrix::zeros(p.w.nrows(), n);
    z.gemm(1.0, &p.w, x, 0.0);
    z.gemm(1.0, &p.a, h_prev, 1.0);
    for mut col in z.column_iter_mut() {
        col += &p.b;
    }
    z
}

/// One cell step for a batch. Returns `(gates, c, tanh_c, h)`.
fn step_batch(
    p: &LstmParams,
    x: &DMatrix<f64>,
    h_prev: &DMatrix<f64>,
    c_prev: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let hs = p.hidden_size();
    let n = x.ncols();
    let mut gates = pre_activation(p, x, h_prev);
    let mut c = DMatrix::zeros(hs, n);
    let mut tanh_c = DMatrix::zeros(hs, n);
    let mut h = DMatrix::zeros(hs, n);
    for j in 0..n {
        let g = &mut gates.as_mut_slice()[j * 4 * hs..(j + 1) * 4 * hs];
        for v in &mut g[..3 * hs] {
            *v = sigmoid(*v);
        }
        for v in &mut g[3 * hs..] {
            *v = v.tanh();
        }
        let (ig, rest) = g.split_at(hs);
        let (fg, rest) = rest.split_at(hs);
        let (og, cg) = rest.split_at(hs);
        for k in 0..hs {
            let ck = fg[k] * c_prev[(k, j)] + ig[k] * cg[k];
            let tk = ck.tanh();
            c[(k, j)] = ck;
            tanh_c[(k, j)] = tk;
            h[(k, j)] = og[k] * tk;
        }
    }
    (gates, c, tanh_c, h)
}

/// Run all windows of a batch. `inputs[t]` holds step `t` of every sample.
/// Returns predictions (D_out x N) and the cache for backpropagation.
pub fn forward_batch(p: &LstmParams, inputs: &[DMatrix<f64>]) -> Result<(DMatrix<f64>, SequenceCache)> {
    let s = inputs.len();
    if s == 0 {
        return Err(RomError::InvalidInput("empty input window".into()));
    }
    let n = inputs[0].ncols();
    for (t, x) in inputs.iter().enumerate() {
        if x.nrows() != p.input_size() || x.ncols() != n {
            return Err(RomError::Dimension(format!(
                "input step {t} is {}x{}, expected {}x{n}",
                x.nrows(),
                x.ncols(),
                p.input_size()
            )));
        }
    }
    let hs = p.hidden_size();
    let mut cache = SequenceCache {
        inputs: inputs.to_vec(),
        h: vec![DMatrix::zeros(hs, n)],
        c: vec![DMatrix::zeros(hs, n)],
        gates: Vec::with_capacity(s),
        tanh_c: Vec::with_capacity(s),
    };
    for x in inputs {
        let (gates, c, tanh_c, h) =
            step_batch(p, x, &cache.h[cache.h.len() - 1], &cache.c[cache.c.len() - 1]);
        cache.gates.push(gates);
        cache.c.push(c);
        cache.tanh_c.push(tanh_c);
        cache.h.push(h);
    }
    let mut y = DMatrix::zeros(p.output_size(), n);
    y.gemm(1.0, &p.head_w, &cache.h[s], 0.0);
    for mut col in y.column_iter_mut() {
        col += &p.head_b;
    }
    Ok((y, cache))
}

/// Mean of the squared residuals over all entries.
pub fn mse_loss(predictions: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<f64> {
    if predictions.shape() != targets.shape() {
        return Err(RomError::Dimension(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    let n = predictions.len();
    if n == 0 {
        return Err(RomError::InvalidInput("MSE of empty arrays".into()));
    }
    let sum: f64 = predictions.iter().zip(targets.iter()).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / n as f64)
}

/// Reverse-mode gradients of the MSE through the read-out and all `s` steps
/// of every window (state reset at window start).
pub fn backward_batch(
    p: &LstmParams,
    cache: &SequenceCache,
    predictions: &DMatrix<f64>,
    targets: &DMatrix<f64>,
) -> Result<LstmParams> {
    if predictions.shape() != targets.shape() {
        return Err(RomError::Dimension(format!(
            "predictions {:?} vs targets {:?}",
            predictions.shape(),
            targets.shape()
        )));
    }
    let hs = p.hidden_size();
    let n = predictions.ncols();
    let s = cache.gates.len();
    let mut grads = LstmParams::zeros(p.input_size(), hs, p.output_size());

    let scale = 2.0 / predictions.len() as f64;
    let dy = (predictions - targets) * scale;
    grads.head_w.gemm(1.0, &dy, &cache.h[s].transpose(), 0.0);
    for col in dy.column_iter() {
        grads.head_b += col;
    }

    let a_t = p.a.transpose();
    let mut dh = p.head_w.transpose() * &dy;
    let mut dc = DMatrix::<f64>::zeros(hs, n);
    let mut dz = DMatrix::<f64>::zeros(4 * hs, n);
    for t in (0..s).rev() {
        let gates = &cache.gates[t];
        let tanh_c = &cache.tanh_c[t];
        let c_prev = &cache.c[t];
        for j in 0..n {
            let g = gates.column(j);
            let g = g.as_slice();
            let dzj = &mut dz.as_mut_slice()[j * 4 * hs..(j + 1) * 4 * hs];
            for k in 0..hs {
                let (ig, fg, og, cg) = (g[k], g[hs + k], g[2 * hs + k], g[3 * hs + k]);
                let tc = tanh_c[(k, j)];
                let dhk = dh[(k, j)];
                let dck = dc[(k, j)] + dhk * og * (1.0 - tc * tc);
                dzj[k] = dck * cg * ig * (1.0 - ig);
                dzj[hs + k] = dck * c_prev[(k, j)] * fg * (1.0 - fg);
                dzj[2 * hs + k] = dhk * tc * og * (1.0 - og);
                dzj[3 * hs + k] = dck * ig * (1.0 - cg * cg);
                dc[(k, j)] = dck * fg;
            }
        }
        grads.w.gemm(1.0, &dz, &cache.inputs[t].transpose(), 1.0);
        grads.a.gemm(1.0, &dz, &cache.h[t].transpose(), 1.0);
        for col in dz.column_iter() {
            grads.b += col;
        }
        if t > 0 {
            dh.gemm(1.0, &a_t, &dz, 0.0);
        }
    }
    Ok(grads)
}

/// Single-sample cell state for the unbatched API.
#[derive(Debug, Clone)]
pub struct CellCache {
    /// Pre-activations `W x + A h_prev + b`, stacked i, f, o, g.
    pub pre_activations: DVector<f64>,
    /// Activated gates, same layout.
    pub gates: DVector<f64>,
    pub c_prev: DVector<f64>,
    pub h_prev: DVector<f64>,
    pub tanh_c: DVector<f64>,
}

/// One LSTM step for a single input vector.
pub fn cell_forward(
    p: &LstmParams,
    x: &DVector<f64>,
    h_prev: &DVector<f64>,
    c_prev: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, CellCache)> {
    let hs = p.hidden_size();
    if x.len() != p.input_size() || h_prev.len() != hs || c_prev.len() != hs {
        return Err(RomError::Dimension(format!(
            "cell expects x[{}], h[{hs}], c[{hs}], got x[{}], h[{}], c[{}]",
            p.input_size(),
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let xm = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    let hm = DMatrix::from_column_slice(hs, 1, h_prev.as_slice());
    let cm = DMatrix::from_column_slice(hs, 1, c_prev.as_slice());
    let z = pre_activation(p, &xm, &hm);
    let (gates, c, tanh_c, h) = step_batch(p, &xm, &hm, &cm);
    let col = |m: &DMatrix<f64>| DVector::from_column_slice(m.as_slice());
    Ok((
        col(&h),
        col(&c),
        CellCache {
            pre_activations: col(&z),
            gates: col(&gates),
            c_prev: c_prev.clone(),
            h_prev: h_prev.clone(),
            tanh_c: col(&tanh_c),
        },
    ))
}

/// Run one window (D_in x s, one column per step) from zero state and apply
/// the read-out.
pub fn forward_sequence(p: &LstmParams, window: &DMatrix<f64>) -> Result<DVector<f64>> {
    if window.nrows() != p.input_size() {
        return Err(RomError::Dimension(format!(
            "window has {} rows, model input size is {}",
            window.nrows(),
            p.input_size()
        )));
    }
    let inputs: Vec<DMatrix<f64>> =
        window.column_iter().map(|c| DMatrix::from_column_slice(c.nrows(), 1, c.as_slice())).collect();
    let (y, _) = forward_batch(p, &inputs)?;
    Ok(DVector::from_column_slice(y.as_slice()))
}
