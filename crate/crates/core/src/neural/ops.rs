//! Forward and backward kernels. Each backward returns exact gradients of a
//! downstream scalar given the gradient with respect to the forward output.

use rand::Rng;

use super::tensor::{gemm, Mat, Tensor};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub fn dense(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    x.expect_rank(2, "dense input")?;
    w.expect_rank(2, "dense weight")?;
    let (batch, inp) = (x.dim(0), x.dim(1));
    let out = w.dim(1);
    if w.dim(0) != inp {
        return Err(Error::Shape(format!(
            "dense: input width {inp} vs weight {:?}",
            w.shape()
        )));
    }
    b.expect_shape(&[out], "dense bias")?;
    let mut y = Tensor::zeros(&[batch, out]);
    for row in y.data_mut().chunks_mut(out) {
        row.copy_from_slice(b.data());
    }
    gemm(
        Mat::new(x.data(), batch, inp),
        Mat::new(w.data(), inp, out),
        y.data_mut(),
        1.0,
    );
    Ok(y)
}

/// Returns `(dx, dW, db)`.
pub fn dense_backward(x: &Tensor, w: &Tensor, gy: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (batch, inp) = (x.dim(0), x.dim(1));
    let out = w.dim(1);
    let mut gx = Tensor::zeros(&[batch, inp]);
    gemm(
        Mat::new(gy.data(), batch, out),
        Mat::new(w.data(), inp, out).t(),
        gx.data_mut(),
        0.0,
    );
    let mut gw = Tensor::zeros(&[inp, out]);
    gemm(
        Mat::new(x.data(), batch, inp).t(),
        Mat::new(gy.data(), batch, out),
        gw.data_mut(),
        0.0,
    );
    let mut gb = Tensor::zeros(&[out]);
    for row in gy.data().chunks(out) {
        for (g, &v) in gb.data_mut().iter_mut().zip(row) {
            *g += v;
        }
    }
    (gx, gw, gb)
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { slope * v })
}

/// Subgradient at exactly 0 uses `slope`.
pub fn leaky_relu_backward(x: &Tensor, gy: &Tensor, slope: f64) -> Tensor {
    let mut g = gy.clone();
    for (g, &v) in g.data_mut().iter_mut().zip(x.data()) {
        if v <= 0.0 {
            *g *= slope;
        }
    }
    g
}

pub fn conv_output_len(len: usize, kernel: usize, stride: usize) -> Result<usize> {
    if stride == 0 || kernel == 0 {
        return Err(Error::Shape("kernel and stride must be positive".into()));
    }
    if len < kernel {
        return Err(Error::Shape(format!("input length {len} shorter than kernel {kernel}")));
    }
    Ok((len - kernel) / stride + 1)
}

/// Unfolded input of a 1-D convolution, `[C_in·K, batch·L_out]`.
pub struct Conv1dCols {
    pub cols: Vec<f64>,
    pub out_len: usize,
}

/// Valid-padding strided cross-correlation.
/// `x: [batch, C_in, L]`, `w: [C_out, C_in, K]`, `b: [C_out]`.
pub fn conv1d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize) -> Result<(Tensor, Conv1dCols)> {
    x.expect_rank(3, "conv1d input")?;
    w.expect_rank(3, "conv1d kernel")?;
    let (batch, cin, len) = (x.dim(0), x.dim(1), x.dim(2));
    let (cout, k) = (w.dim(0), w.dim(2));
    if w.dim(1) != cin {
        return Err(Error::Shape(format!(
            "conv1d: {cin} input channels vs kernel {:?}",
            w.shape()
        )));
    }
    b.expect_shape(&[cout], "conv1d bias")?;
    let lout = conv_output_len(len, k, stride)?;
    let ncol = batch * lout;
    let mut cols = vec![0.0; cin * k * ncol];
    let xd = x.data();
    for ci in 0..cin {
        for kk in 0..k {
            let row = &mut cols[(ci * k + kk) * ncol..(ci * k + kk + 1) * ncol];
            for bi in 0..batch {
                let src = &xd[(bi * cin + ci) * len..];
                for t in 0..lout {
                    row[bi * lout + t] = src[t * stride + kk];
                }
            }
        }
    }
    let mut flat = vec![0.0; cout * ncol];
    gemm(
        Mat::new(w.data(), cout, cin * k),
        Mat::new(&cols, cin * k, ncol),
        &mut flat,
        0.0,
    );
    let mut y = Tensor::zeros(&[batch, cout, lout]);
    let yd = y.data_mut();
    for co in 0..cout {
        for bi in 0..batch {
            let dst = &mut yd[(bi * cout + co) * lout..(bi * cout + co + 1) * lout];
            let src = &flat[co * ncol + bi * lout..co * ncol + (bi + 1) * lout];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s + b.data()[co];
            }
        }
    }
    Ok((y, Conv1dCols { cols, out_len: lout }))
}

/// Returns `(dx, dW, db)`.
pub fn conv1d_backward(
    x_shape: &[usize],
    cols: &Conv1dCols,
    w: &Tensor,
    stride: usize,
    gy: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (batch, cin, len) = (x_shape[0], x_shape[1], x_shape[2]);
    let (cout, k) = (w.dim(0), w.dim(2));
    let lout = cols.out_len;
    let ncol = batch * lout;
    let mut gflat = vec![0.0; cout * ncol];
    let mut gb = Tensor::zeros(&[cout]);
    let gyd = gy.data();
    for co in 0..cout {
        for bi in 0..batch {
            let src = &gyd[(bi * cout + co) * lout..(bi * cout + co + 1) * lout];
            gflat[co * ncol + bi * lout..co * ncol + (bi + 1) * lout].copy_from_slice(src);
            gb.data_mut()[co] += src.iter().sum::<f64>();
        }
    }
    let mut gw = Tensor::zeros(&[cout, cin, k]);
    gemm(
        Mat::new(&gflat, cout, ncol),
        Mat::new(&cols.cols, cin * k, ncol).t(),
        gw.data_mut(),
        0.0,
    );
    let mut gcols = vec![0.0; cin * k * ncol];
    gemm(
        Mat::new(w.data(), cout, cin * k).t(),
        Mat::new(&gflat, cout, ncol),
        &mut gcols,
        0.0,
    );
    let mut gx = Tensor::zeros(&[batch, cin, len]);
    let gxd = gx.data_mut();
    for ci in 0..cin {
        for kk in 0..k {
            let row = &gcols[(ci * k + kk) * ncol..(ci * k + kk + 1) * ncol];
            for bi in 0..batch {
                let dst = &mut gxd[(bi * cin + ci) * len..(bi * cin + ci + 1) * len];
                for t in 0..lout {
                    dst[t * stride + kk] += row[bi * lout + t];
                }
            }
        }
    }
    (gx, gw, gb)
}

/// Unfolded input of a 2-D convolution, `[C_in·Kh·Kw, batch·H_out·W_out]`.
pub struct Conv2dCols {
    pub cols: Vec<f64>,
    pub out_hw: (usize, usize),
}

/// `x: [batch, C_in, H, W]`, `w: [C_out, C_in, Kh, Kw]`, strides `(Sh, Sw)`.
pub fn conv2d(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    stride: (usize, usize),
) -> Result<(Tensor, Conv2dCols)> {
    x.expect_rank(4, "conv2d input")?;
    w.expect_rank(4, "conv2d kernel")?;
    let (batch, cin, h, wd) = (x.dim(0), x.dim(1), x.dim(2), x.dim(3));
    let (cout, kh, kw) = (w.dim(0), w.dim(2), w.dim(3));
    if w.dim(1) != cin {
        return Err(Error::Shape(format!(
            "conv2d: {cin} input channels vs kernel {:?}",
            w.shape()
        )));
    }
    b.expect_shape(&[cout], "conv2d bias")?;
    let ho = conv_output_len(h, kh, stride.0)?;
    let wo = conv_output_len(wd, kw, stride.1)?;
    let spatial = ho * wo;
    let ncol = batch * spatial;
    let krows = cin * kh * kw;
    let mut cols = vec![0.0; krows * ncol];
    let xd = x.data();
    for ci in 0..cin {
        for a in 0..kh {
            for c in 0..kw {
                let r = (ci * kh + a) * kw + c;
                let row = &mut cols[r * ncol..(r + 1) * ncol];
                for bi in 0..batch {
                    let plane = &xd[(bi * cin + ci) * h * wd..(bi * cin + ci + 1) * h * wd];
                    for oy in 0..ho {
                        let src = &plane[(oy * stride.0 + a) * wd..];
                        let dst = &mut row[bi * spatial + oy * wo..bi * spatial + (oy + 1) * wo];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            *d = src[ox * stride.1 + c];
                        }
                    }
                }
            }
        }
    }
    let mut flat = vec![0.0; cout * ncol];
    gemm(
        Mat::new(w.data(), cout, krows),
        Mat::new(&cols, krows, ncol),
        &mut flat,
        0.0,
    );
    let mut y = Tensor::zeros(&[batch, cout, ho, wo]);
    let yd = y.data_mut();
    for co in 0..cout {
        for bi in 0..batch {
            let dst = &mut yd[(bi * cout + co) * spatial..(bi * cout + co + 1) * spatial];
            let src = &flat[co * ncol + bi * spatial..co * ncol + (bi + 1) * spatial];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = s + b.data()[co];
            }
        }
    }
    Ok((y, Conv2dCols { cols, out_hw: (ho, wo) }))
}

/// Returns `(dx, dW, db)`.
pub fn conv2d_backward(
    x_shape: &[usize],
    cols: &Conv2dCols,
    w: &Tensor,
    stride: (usize, usize),
    gy: &Tensor,
) -> (Tensor, Tensor, Tensor) {
    let (batch, cin, h, wd) = (x_shape[0], x_shape[1], x_shape[2], x_shape[3]);
    let (cout, kh, kw) = (w.dim(0), w.dim(2), w.dim(3));
    let (ho, wo) = cols.out_hw;
    let spatial = ho * wo;
    let ncol = batch * spatial;
    let krows = cin * kh * kw;
    let mut gflat = vec![0.0; cout * ncol];
    let mut gb = Tensor::zeros(&[cout]);
    let gyd = gy.data();
    for co in 0..cout {
        for bi in 0..batch {
            let src = &gyd[(bi * cout + co) * spatial..(bi * cout + co + 1) * spatial];
            gflat[co * ncol + bi * spatial..co * ncol + (bi + 1) * spatial].copy_from_slice(src);
            gb.data_mut()[co] += src.iter().sum::<f64>();
        }
    }
    let mut gw = Tensor::zeros(&[cout, cin, kh, kw]);
    gemm(
        Mat::new(&gflat, cout, ncol),
        Mat::new(&cols.cols, krows, ncol).t(),
        gw.data_mut(),
        0.0,
    );
    let mut gcols = vec![0.0; krows * ncol];
    gemm(
        Mat::new(w.data(), cout, krows).t(),
        Mat::new(&gflat, cout, ncol),
        &mut gcols,
        0.0,
    );
    let mut gx = Tensor::zeros(&[batch, cin, h, wd]);
    let gxd = gx.data_mut();
    for ci in 0..cin {
        for a in 0..kh {
            for c in 0..kw {
                let r = (ci * kh + a) * kw + c;
                let row = &gcols[r * ncol..(r + 1) * ncol];
                for bi in 0..batch {
                    let plane = &mut gxd[(bi * cin + ci) * h * wd..(bi * cin + ci + 1) * h * wd];
                    for oy in 0..ho {
                        let base = (oy * stride.0 + a) * wd;
                        let src = &row[bi * spatial + oy * wo..bi * spatial + (oy + 1) * wo];
                        for (ox, &g) in src.iter().enumerate() {
                            plane[base + ox * stride.1 + c] += g;
                        }
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-step activations kept for backpropagation through time.
pub struct LstmCache {
    /// `[T][batch·4H]` post-activation gates in order i, f, g, o.
    gates: Vec<Vec<f64>>,
    /// `[T][batch·H]` cell states.
    cells: Vec<Vec<f64>>,
    /// `[T][batch·H]` tanh of the cell states.
    tanh_cells: Vec<Vec<f64>>,
}

/// One LSTM layer over `x: [batch, T, F]` with `wx: [F, 4H]`,
/// `wh: [H, 4H]`, `b: [4H]`; zero initial state. Returns `[batch, T, H]`.
pub fn lstm(x: &Tensor, wx: &Tensor, wh: &Tensor, b: &Tensor) -> Result<(Tensor, LstmCache)> {
    x.expect_rank(3, "lstm input")?;
    let (batch, steps, feat) = (x.dim(0), x.dim(1), x.dim(2));
    let hidden = wh.dim(0);
    let g4 = 4 * hidden;
    wx.expect_shape(&[feat, g4], "lstm input weight")?;
    wh.expect_shape(&[hidden, g4], "lstm hidden weight")?;
    b.expect_shape(&[g4], "lstm bias")?;

    let mut xw = vec![0.0; batch * steps * g4];
    gemm(
        Mat::new(x.data(), batch * steps, feat),
        Mat::new(wx.data(), feat, g4),
        &mut xw,
        0.0,
    );
    let mut out = Tensor::zeros(&[batch, steps, hidden]);
    let mut cache = LstmCache {
        gates: Vec::with_capacity(steps),
        cells: Vec::with_capacity(steps),
        tanh_cells: Vec::with_capacity(steps),
    };
    let mut h_prev = vec![0.0; batch * hidden];
    let mut c_prev = vec![0.0; batch * hidden];
    let mut z = vec![0.0; batch * g4];
    for t in 0..steps {
        for bi in 0..batch {
            let src = &xw[(bi * steps + t) * g4..(bi * steps + t + 1) * g4];
            for ((zz, &s), &bb) in z[bi * g4..(bi + 1) * g4].iter_mut().zip(src).zip(b.data()) {
                *zz = s + bb;
            }
        }
        if t > 0 {
            gemm(
                Mat::new(&h_prev, batch, hidden),
                Mat::new(wh.data(), hidden, g4),
                &mut z,
                1.0,
            );
        }
        let mut c = vec![0.0; batch * hidden];
        let mut tc = vec![0.0; batch * hidden];
        let mut gates = z.clone();
        for bi in 0..batch {
            let gr = &mut gates[bi * g4..(bi + 1) * g4];
            for j in 0..hidden {
                let i_g = sigmoid(gr[j]);
                let f_g = sigmoid(gr[hidden + j]);
                let g_g = gr[2 * hidden + j].tanh();
                let o_g = sigmoid(gr[3 * hidden + j]);
                gr[j] = i_g;
                gr[hidden + j] = f_g;
                gr[2 * hidden + j] = g_g;
                gr[3 * hidden + j] = o_g;
                let k = bi * hidden + j;
                c[k] = f_g * c_prev[k] + i_g * g_g;
                tc[k] = c[k].tanh();
                h_prev[k] = o_g * tc[k];
            }
            out.data_mut()[(bi * steps + t) * hidden..(bi * steps + t + 1) * hidden]
                .copy_from_slice(&h_prev[bi * hidden..(bi + 1) * hidden]);
        }
        c_prev.copy_from_slice(&c);
        cache.gates.push(gates);
        cache.cells.push(c);
        cache.tanh_cells.push(tc);
    }
    Ok((out, cache))
}

/// Backpropagation through time. `h_seq` is the forward output. Returns
/// `(dx, dWx, dWh, db)`.
pub fn lstm_backward(
    x: &Tensor,
    h_seq: &Tensor,
    cache: &LstmCache,
    wx: &Tensor,
    wh: &Tensor,
    g_seq: &Tensor,
) -> (Tensor, Tensor, Tensor, Tensor) {
    let (batch, steps, feat) = (x.dim(0), x.dim(1), x.dim(2));
    let hidden = wh.dim(0);
    let g4 = 4 * hidden;
    let mut dz_all = vec![0.0; batch * steps * g4];
    let mut gwh = Tensor::zeros(&[hidden, g4]);
    let mut dh_next = vec![0.0; batch * hidden];
    let mut dc_next = vec![0.0; batch * hidden];
    let mut dz = vec![0.0; batch * g4];
    let mut h_prev = vec![0.0; batch * hidden];
    for t in (0..steps).rev() {
        let gates = &cache.gates[t];
        let tc = &cache.tanh_cells[t];
        for bi in 0..batch {
            let gr = &gates[bi * g4..(bi + 1) * g4];
            for j in 0..hidden {
                let k = bi * hidden + j;
                let (i_g, f_g, g_g, o_g) =
                    (gr[j], gr[hidden + j], gr[2 * hidden + j], gr[3 * hidden + j]);
                let dh = g_seq.data()[(bi * steps + t) * hidden + j] + dh_next[k];
                let c_prev = if t > 0 { cache.cells[t - 1][k] } else { 0.0 };
                let d_o = dh * tc[k];
                let dc = dh * o_g * (1.0 - tc[k] * tc[k]) + dc_next[k];
                let d_i = dc * g_g;
                let d_g = dc * i_g;
                let d_f = dc * c_prev;
                dc_next[k] = dc * f_g;
                let row = &mut dz[bi * g4..(bi + 1) * g4];
                row[j] = d_i * i_g * (1.0 - i_g);
                row[hidden + j] = d_f * f_g * (1.0 - f_g);
                row[2 * hidden + j] = d_g * (1.0 - g_g * g_g);
                row[3 * hidden + j] = d_o * o_g * (1.0 - o_g);
            }
            dz_all[(bi * steps + t) * g4..(bi * steps + t + 1) * g4]
                .copy_from_slice(&dz[bi * g4..(bi + 1) * g4]);
        }
        if t > 0 {
            for bi in 0..batch {
                h_prev[bi * hidden..(bi + 1) * hidden].copy_from_slice(
                    &h_seq.data()[(bi * steps + t - 1) * hidden..(bi * steps + t) * hidden],
                );
            }
            gemm(
                Mat::new(&h_prev, batch, hidden).t(),
                Mat::new(&dz, batch, g4),
                gwh.data_mut(),
                1.0,
            );
            gemm(
                Mat::new(&dz, batch, g4),
                Mat::new(wh.data(), hidden, g4).t(),
                &mut dh_next,
                0.0,
            );
        }
    }
    let mut gb = Tensor::zeros(&[g4]);
    for row in dz_all.chunks(g4) {
        for (g, &v) in gb.data_mut().iter_mut().zip(row) {
            *g += v;
        }
    }
    let mut gwx = Tensor::zeros(&[feat, g4]);
    gemm(
        Mat::new(x.data(), batch * steps, feat).t(),
        Mat::new(&dz_all, batch * steps, g4),
        gwx.data_mut(),
        0.0,
    );
    let mut gx = Tensor::zeros(&[batch, steps, feat]);
    gemm(
        Mat::new(&dz_all, batch * steps, g4),
        Mat::new(wx.data(), feat, g4).t(),
        gx.data_mut(),
        0.0,
    );
    (gx, gwx, gwh, gb)
}

/// Inverted dropout. Returns the output and the per-element multiplier.
pub fn dropout(x: &Tensor, rate: f64, mode: Mode, seed: u64) -> Result<(Tensor, Vec<f64>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.clone(), vec![1.0; x.len()]));
    }
    let mut rng = seed::rng(seed);
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let mut y = x.clone();
    for (v, m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((y, mask))
}

pub fn dropout_backward(mask: &[f64], gy: &Tensor) -> Tensor {
    let mut g = gy.clone();
    for (v, m) in g.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
    g
}

/// Mean over every axis after the channel axis: `[batch, C, ...] → [batch, C]`.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor> {
    if x.shape().len() < 3 {
        return Err(Error::Shape(format!(
            "global pooling needs spatial axes, got {:?}",
            x.shape()
        )));
    }
    let (batch, ch) = (x.dim(0), x.dim(1));
    let spatial: usize = x.shape()[2..].iter().product();
    let data = x
        .data()
        .chunks(spatial)
        .map(|c| c.iter().sum::<f64>() / spatial as f64)
        .collect();
    Tensor::new(vec![batch, ch], data)
}

pub fn global_avg_pool_backward(x_shape: &[usize], gy: &Tensor) -> Tensor {
    let spatial: usize = x_shape[2..].iter().product();
    let inv = 1.0 / spatial as f64;
    let mut g = Tensor::zeros(x_shape);
    for (chunk, &v) in g.data_mut().chunks_mut(spatial).zip(gy.data()) {
        chunk.iter_mut().for_each(|c| *c = v * inv);
    }
    g
}

/// Row-wise max-subtracted softmax of `[batch, classes]`.
pub fn softmax(logits: &Tensor) -> Tensor {
    let classes = logits.dim(logits.shape().len() - 1);
    let mut p = logits.clone();
    for row in p.data_mut().chunks_mut(classes) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    p
}

/// Vector-Jacobian product of softmax given its output `p`.
pub fn softmax_backward(p: &Tensor, gy: &Tensor) -> Tensor {
    let classes = p.dim(p.shape().len() - 1);
    let mut g = gy.clone();
    for (grow, prow) in g.data_mut().chunks_mut(classes).zip(p.data().chunks(classes)) {
        let dot: f64 = grow.iter().zip(prow).map(|(a, b)| a * b).sum();
        for (gv, &pv) in grow.iter_mut().zip(prow) {
            *gv = pv * (*gv - dot);
        }
    }
    g
}

/// Mean categorical cross-entropy over the batch and its logit gradient.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    logits.expect_rank(2, "logits")?;
    let (batch, classes) = (logits.dim(0), logits.dim(1));
    if targets.len() != batch {
        return Err(Error::Shape(format!(
            "{batch} logit rows but {} targets",
            targets.len()
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::Shape(format!("target class {t} out of {classes}")));
    }
    let mut grad = Tensor::zeros(&[batch, classes]);
    let mut loss = 0.0;
    for (bi, (row, &t)) in logits.data().chunks(classes).zip(targets).enumerate() {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[t];
        let g = &mut grad.data_mut()[bi * classes..(bi + 1) * classes];
        for (k, gv) in g.iter_mut().enumerate() {
            let p = (row[k] - lse).exp();
            *gv = (p - if k == t { 1.0 } else { 0.0 }) / batch as f64;
        }
    }
    Ok((loss / batch as f64, grad))
}

/// Mean absolute error and its gradient (0 where prediction equals target).
pub fn mae_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "mae: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.len() as f64;
    let mut grad = Tensor::zeros(pred.shape());
    let mut loss = 0.0;
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        loss += d.abs();
        *g = if d > 0.0 {
            1.0 / n
        } else if d < 0.0 {
            -1.0 / n
        } else {
            0.0
        };
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn dense_identity_and_bias() {
        let x = t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let eye = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(dense(&x, &eye, &Tensor::zeros(&[2])).unwrap(), x);
        let b = t(&[2], &[0.5, -1.5]);
        let y = dense(&Tensor::zeros(&[3, 2]), &eye, &b).unwrap();
        assert_eq!(y.data(), &[0.5, -1.5, 0.5, -1.5, 0.5, -1.5]);
        assert!(dense(&x, &Tensor::zeros(&[3, 2]), &b).is_err());
    }

    #[test]
    fn leaky_relu_values() {
        let y = leaky_relu(&t(&[2], &[2.0, -1.0]), 0.01);
        assert_eq!(y.data(), &[2.0, -0.01]);
        let g = leaky_relu_backward(&t(&[1], &[0.0]), &t(&[1], &[1.0]), 0.01);
        assert_eq!(g.data(), &[0.01]);
    }

    #[test]
    fn conv1d_shapes_and_channel_sum() {
        assert_eq!(conv_output_len(100, 5, 2).unwrap(), 48);
        assert!(conv_output_len(3, 5, 1).is_err());
        let x = t(&[1, 3, 4], &(0..12).map(|v| v as f64).collect::<Vec<_>>());
        let w = Tensor::filled(&[1, 3, 1], 1.0);
        let (y, _) = conv1d(&x, &w, &Tensor::zeros(&[1]), 1).unwrap();
        assert_eq!(y.data(), &[12.0, 15.0, 18.0, 21.0]);
    }

    #[test]
    fn conv2d_shapes_and_delta_kernel() {
        let x = Tensor::zeros(&[1, 1, 18, 100]);
        let w = Tensor::zeros(&[2, 1, 3, 3]);
        let (y, _) = conv2d(&x, &w, &Tensor::zeros(&[2]), (2, 2)).unwrap();
        assert_eq!(y.shape(), &[1, 2, 8, 49]);

        let data: Vec<f64> = (0..35).map(|v| v as f64).collect();
        let x = t(&[1, 1, 5, 7], &data);
        let mut w = Tensor::zeros(&[1, 1, 3, 3]);
        w.data_mut()[4] = 1.0; // centre tap
        let (y, _) = conv2d(&x, &w, &Tensor::zeros(&[1]), (2, 2)).unwrap();
        // rows 1, 3 and columns 1, 3, 5
        assert_eq!(y.data(), &[8.0, 10.0, 12.0, 22.0, 24.0, 26.0]);
        assert!(conv2d(&t(&[1, 1, 2, 2], &[0.0; 4]), &w, &Tensor::zeros(&[1]), (1, 1)).is_err());
    }

    #[test]
    fn lstm_zero_weights_give_zero_hidden() {
        let x = Tensor::filled(&[2, 5, 3], 0.7);
        let (h, _) = lstm(
            &x,
            &Tensor::zeros(&[3, 8]),
            &Tensor::zeros(&[2, 8]),
            &Tensor::zeros(&[8]),
        )
        .unwrap();
        assert!(h.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_single_step_is_one_cell() {
        let x = t(&[1, 1, 2], &[0.3, -0.2]);
        let wx = t(&[2, 4], &[0.1, 0.2, 0.3, 0.4, -0.5, 0.6, -0.7, 0.8]);
        let wh = t(&[1, 4], &[9.0, 9.0, 9.0, 9.0]);
        let b = t(&[4], &[0.0, 1.0, 0.0, 0.0]);
        let (h, _) = lstm(&x, &wx, &wh, &b).unwrap();
        let z: Vec<f64> = (0..4).map(|k| 0.3 * wx.data()[k] - 0.2 * wx.data()[4 + k] + b.data()[k]).collect();
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let c = s(z[0]) * z[2].tanh();
        let expected = s(z[3]) * c.tanh();
        assert!((h.data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::filled(&[10], 2.0);
        assert_eq!(dropout(&x, 0.0, Mode::Train, 1).unwrap().0, x);
        assert_eq!(dropout(&x, 0.5, Mode::Eval, 1).unwrap().0, x);
        assert!(dropout(&x, 1.0, Mode::Train, 1).is_err());
        let (a, _) = dropout(&x, 0.5, Mode::Train, 9).unwrap();
        let (b, _) = dropout(&x, 0.5, Mode::Train, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let x = Tensor::filled(&[100_000], 1.0);
        let (y, mask) = dropout(&x, 0.5, Mode::Train, 123).unwrap();
        let n = x.len() as f64;
        let survivors = mask.iter().filter(|&&m| m > 0.0).count() as f64;
        let sigma = (n * 0.25).sqrt();
        assert!((survivors - 0.5 * n).abs() < 3.0 * sigma);
        let mean = y.data().iter().sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 0.02);
    }

    #[test]
    fn pooling() {
        assert_eq!(global_avg_pool(&Tensor::filled(&[2, 3, 4, 5], 1.5)).unwrap().data(), &[1.5; 6]);
        let p = global_avg_pool(&t(&[1, 1, 4], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(p.data(), &[2.5]);
        let g = global_avg_pool_backward(&[1, 1, 4], &t(&[1, 1], &[1.0]));
        assert_eq!(g.data(), &[0.25; 4]);
    }

    #[test]
    fn cross_entropy_reference_values() {
        let (l, _) = softmax_cross_entropy(&Tensor::zeros(&[1, 3]), &[1]).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-15);
        let (l, g) = softmax_cross_entropy(&t(&[1, 3], &[1000.0, 0.0, 0.0]), &[0]).unwrap();
        assert!(l.abs() < 1e-12 && l.is_finite());
        assert!(g.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax(&t(&[2, 3], &[1.0, 2.0, 3.0, -700.0, 0.0, 700.0]));
        for row in p.data().chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn mae_values() {
        let a = t(&[2], &[1.0, -1.0]);
        let (l, g) = mae_loss(&a, &Tensor::zeros(&[2])).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.data(), &[0.5, -0.5]);
        let (l, g) = mae_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.data(), &[0.0, 0.0]);
        assert!(mae_loss(&a, &Tensor::zeros(&[3])).is_err());
    }
}
