//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rom_core::lstm::{Gate, LstmParams, SequenceDataset};
use rom_core::SplitMix64;

/// `X_k = sum_n x_n exp(-2 pi i k n / N)` by direct summation, as (re, im).
pub fn brute_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (j, &v) in x.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let ang = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re, im)
        })
        .collect()
}

pub fn random_series(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

pub fn random_matrix(rng: &mut SplitMix64, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

/// One-sided Jacobi SVD of a matrix with at least as many rows as columns.
/// Returns singular values (descending) and matching left vectors.
pub fn jacobi_svd(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    assert!(m.nrows() >= m.ncols());
    let mut a = m.clone();
    let n = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a.column(p).norm_squared();
                let beta: f64 = a.column(q).norm_squared();
                let gamma: f64 = a.column(p).dot(&a.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.nrows() {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    a[(i, p)] = c * ap - s * aq;
                    a[(i, q)] = s * ap + c * aq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|j| {
            let norm = a.column(j).norm();
            let u = if norm > 0.0 { a.column(j) / norm } else { a.column(j).into_owned() };
            (norm, u)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let sigma = pairs.iter().map(|p| p.0).collect();
    let u = DMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    (sigma, u)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single-sample LSTM with explicit per-unit loops.
pub fn scalar_cell(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hs = p.hidden_size();
    let z = |gate: Gate, k: usize| {
        let r = p.gate_rows(gate).start + k;
        let mut acc = p.b[r];
        for (j, xj) in x.iter().enumerate() {
            acc += p.w[(r, j)] * xj;
        }
        for (j, hj) in h.iter().enumerate() {
            acc += p.a[(r, j)] * hj;
        }
        acc
    };
    let mut h_new = vec![0.0; hs];
    let mut c_new = vec![0.0; hs];
    for k in 0..hs {
        let i = sigmoid(z(Gate::Input, k));
        let f = sigmoid(z(Gate::Forget, k));
        let o = sigmoid(z(Gate::Output, k));
        let g = z(Gate::Candidate, k).tanh();
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * c_new[k].tanh();
    }
    (h_new, c_new)
}

/// Window (D_in x s) from zero state through the read-out.
pub fn scalar_sequence(p: &LstmParams, window: &DMatrix<f64>) -> Vec<f64> {
    let hs = p.hidden_size();
    let mut h = vec![0.0; hs];
    let mut c = vec![0.0; hs];
    for t in 0..window.ncols() {
        let x: Vec<f64> = window.column(t).iter().copied().collect();
        let (h2, c2) = scalar_cell(p, &x, &h, &c);
        h = h2;
        c = c2;
    }
    (0..p.output_size())
        .map(|d| p.head_b[d] + (0..hs).map(|k| p.head_w[(d, k)] * h[k]).sum::<f64>())
        .collect()
}

/// MSE over a dataset using the scalar oracle.
pub fn scalar_loss(p: &LstmParams, ds: &SequenceDataset) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 0..ds.n_samples() {
        let y = scalar_sequence(p, &ds.window(j));
        for (d, yd) in y.iter().enumerate() {
            let r = yd - ds.targets[(d, j)];
            sum += r * r;
            count += 1;
        }
    }
    sum / count as f64
}

/// Random parameters with all entries (biases included) drawn from
/// uniform[-scale, scale].
pub fn random_params(d_in: usize, h: usize, d_out: usize, seed: u64, scale: f64) -> LstmParams {
    let mut p = LstmParams::zeros(d_in, h, d_out);
    let mut rng = SplitMix64::new(seed);
    for s in p.slices_mut() {
        for v in s.iter_mut() {
            *v = rng.uniform(-scale, scale);
        }
    }
    p
}

/// Random dataset: `n_time` random vectors of dimension `d`, windows of `s`.
pub fn random_dataset(d: usize, n_time: usize, s: usize, seed: u64) -> SequenceDataset {
    let mut rng = SplitMix64::new(seed);
    let series = random_matrix(&mut rng, d, n_time);
    SequenceDataset::from_series(&series, &series, s).unwrap()
}
