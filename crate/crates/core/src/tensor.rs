//! Dense row-major `f32` tensors and the numerical kernels built on them.
//!
//! Reductions accumulate in `f64` and round once to `f32`. Kernels that run
//! on the rayon pool split work by output row only, so every output element
//! sees the same summation order as the sequential definition.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f32 = 1e-5;
pub const LEAKY_SLOPE: f32 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Argument(format!(
                "tensor extents must be >= 1, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} holds {n} elements but data has {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn full(shape: &[usize], value: f32) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&d| d > 0),
            "tensor extents must be >= 1, got {shape:?}"
        );
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> f32) -> Self {
        let mut t = Self::zeros(shape);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = f(i);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Extent of the last dimension.
    pub fn last_dim(&self) -> usize {
        *self.shape.last().expect("rank >= 1")
    }

    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(Error::Argument(format!(
                "index {index:?} has rank {} but tensor has rank {}",
                index.len(),
                self.shape.len()
            )));
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return Err(Error::Argument(format!(
                    "index {index:?} out of bounds for shape {:?}",
                    self.shape
                )));
            }
            off = off * d + i;
        }
        Ok(off)
    }

    pub fn get(&self, index: &[usize]) -> Result<f32> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f32) -> Result<()> {
        let off = self.offset(index)?;
        self.data[off] = value;
        Ok(())
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::dims("reshape", &self.shape, shape));
        }
        Tensor::new(shape.to_vec(), self.data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f32, f32) -> f32) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dims("elementwise", &self.shape, &other.shape));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f32) -> Self {
        self.map(|v| v * s)
    }

    pub fn transpose2d(&self) -> Result<Self> {
        let (m, n) = self.as_matrix()?;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = self.data[i * n + j];
            }
        }
        Tensor::new(vec![n, m], out)
    }

    /// Largest absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f32> {
        if self.shape != other.shape {
            return Err(Error::dims("max_abs_diff", &self.shape, &other.shape));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max))
    }

    fn as_matrix(&self) -> Result<(usize, usize)> {
        match self.shape[..] {
            [m, n] => Ok((m, n)),
            _ => Err(Error::Dimension(format!(
                "expected a matrix, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// Interprets the tensor as `[batch.., H, W, C]` with `batch` the product
    /// of leading dimensions (1 for rank 3).
    fn as_images(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape[..] {
            [h, w, c] => Ok((1, h, w, c)),
            [b, h, w, c] => Ok((b, h, w, c)),
            _ => Err(Error::Dimension(format!(
                "expected H×W×C or B×H×W×C, got {:?}",
                self.shape
            ))),
        }
    }

    fn with_image_shape(&self, h: usize, w: usize, c: usize) -> Vec<usize> {
        if self.rank() == 4 {
            vec![self.shape[0], h, w, c]
        } else {
            vec![h, w, c]
        }
    }
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// `c[i][j] = Σ_k a[i][k]·b[k][j]`, accumulated in `f64`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, p) = a.as_matrix()?;
    let (p2, q) = b.as_matrix()?;
    if p != p2 {
        return Err(Error::dims("matmul inner extents", a.shape(), b.shape()));
    }
    let b64 = widen(&b.data);
    let mut out = vec![0.0f32; m * q];
    out.par_chunks_mut(q).enumerate().for_each(|(i, row)| {
        let mut acc = vec![0.0f64; q];
        let arow = &a.data[i * p..(i + 1) * p];
        for (k, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let av = av as f64;
            let brow = &b64[k * q..(k + 1) * q];
            for (s, &bv) in acc.iter_mut().zip(brow) {
                *s += av * bv;
            }
        }
        for (o, s) in row.iter_mut().zip(&acc) {
            *o = *s as f32;
        }
    });
    Tensor::new(vec![m, q], out)
}

/// Applies `x·W + b` along the last dimension of `x`.
///
/// `weight` is `[in, out]`, `bias` is `[out]`.
pub fn linear(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (din, dout) = weight.as_matrix()?;
    if x.last_dim() != din {
        return Err(Error::dims("linear input", x.shape(), weight.shape()));
    }
    if bias.shape() != [dout] {
        return Err(Error::dims("linear bias", bias.shape(), &[dout]));
    }
    let rows = x.numel() / din;
    let w64 = widen(&weight.data);
    let mut out = vec![0.0f32; rows * dout];
    out.par_chunks_mut(dout).enumerate().for_each(|(i, row)| {
        let mut acc: Vec<f64> = bias.data.iter().map(|&v| v as f64).collect();
        let xrow = &x.data[i * din..(i + 1) * din];
        for (k, &xv) in xrow.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let xv = xv as f64;
            let wrow = &w64[k * dout..(k + 1) * dout];
            for (s, &wv) in acc.iter_mut().zip(wrow) {
                *s += xv * wv;
            }
        }
        for (o, s) in row.iter_mut().zip(&acc) {
            *o = *s as f32;
        }
    });
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = dout;
    Tensor::new(shape, out)
}

pub fn softmax_lastdim(x: &Tensor) -> Tensor {
    let n = x.last_dim();
    let mut out = x.data.clone();
    out.par_chunks_mut(n).for_each(softmax_in_place);
    Tensor {
        shape: x.shape.clone(),
        data: out,
    }
}

pub(crate) fn softmax_in_place(row: &mut [f32]) {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0f64;
    let mut exps = Vec::with_capacity(row.len());
    for &v in row.iter() {
        let e = ((v - max) as f64).exp();
        sum += e;
        exps.push(e);
    }
    for (o, e) in row.iter_mut().zip(exps) {
        *o = (e / sum) as f32;
    }
}

/// Normalizes each last-dim slice to zero mean and unit variance.
pub fn layer_norm(x: &Tensor, eps: f32) -> Tensor {
    let n = x.last_dim();
    let mut out = x.data.clone();
    out.par_chunks_mut(n)
        .for_each(|row| normalize_row(row, eps, None));
    Tensor {
        shape: x.shape.clone(),
        data: out,
    }
}

/// Layer norm followed by a per-channel affine `scale·x̂ + shift`.
pub fn layer_norm_affine(x: &Tensor, scale: &Tensor, shift: &Tensor, eps: f32) -> Result<Tensor> {
    let n = x.last_dim();
    if scale.shape() != [n] || shift.shape() != [n] {
        return Err(Error::Dimension(format!(
            "layer norm affine expects [{n}], got {:?} and {:?}",
            scale.shape(),
            shift.shape()
        )));
    }
    let mut out = x.data.clone();
    out.par_chunks_mut(n)
        .for_each(|row| normalize_row(row, eps, Some((&scale.data, &shift.data))));
    Ok(Tensor {
        shape: x.shape.clone(),
        data: out,
    })
}

fn normalize_row(row: &mut [f32], eps: f32, affine: Option<(&[f32], &[f32])>) {
    let n = row.len() as f64;
    let mean = row.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = row
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let inv = 1.0 / (var + eps as f64).sqrt();
    match affine {
        None => {
            for v in row.iter_mut() {
                *v = ((*v as f64 - mean) * inv) as f32;
            }
        }
        Some((scale, shift)) => {
            for ((v, &g), &b) in row.iter_mut().zip(scale).zip(shift) {
                *v = ((*v as f64 - mean) * inv * g as f64 + b as f64) as f32;
            }
        }
    }
}

/// Indices of the `k` largest scores in ascending index order.
///
/// Ties are broken in favour of the lower index. NaN scores rank below
/// every number.
pub fn top_k_indices(scores: &[f32], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::Argument(format!(
            "k = {k} must lie in [1, {}]",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (scores[a], scores[b]);
        match (sa.is_nan(), sb.is_nan()) {
            (true, true) => a.cmp(&b),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            _ => sb.partial_cmp(&sa).unwrap().then(a.cmp(&b)),
        }
    });
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

/// 3×3 cross-correlation, stride 1, zero padding 1.
///
/// `x` is `H×W×Cin` or `B×H×W×Cin`; `kernel` is `3×3×Cin×Cout`.
pub fn conv2d(x: &Tensor, kernel: &Tensor, bias: &Tensor) -> Result<Tensor> {
    conv2d_strided(x, kernel, bias, 1)
}

/// 3×3 cross-correlation with zero padding 1 and the given stride.
///
/// Output extent is `(H + 2 − 3) / stride + 1` per spatial axis.
pub fn conv2d_strided(x: &Tensor, kernel: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    if stride == 0 {
        return Err(Error::Argument("conv stride must be >= 1".into()));
    }
    let (b, h, w, cin) = x.as_images()?;
    let (kh, kw, kcin, cout) = match kernel.shape()[..] {
        [kh, kw, ci, co] => (kh, kw, ci, co),
        _ => {
            return Err(Error::Dimension(format!(
                "conv kernel must be 3×3×Cin×Cout, got {:?}",
                kernel.shape()
            )))
        }
    };
    if kh != 3 || kw != 3 {
        return Err(Error::Dimension(format!(
            "conv kernel must be 3×3, got {kh}×{kw}"
        )));
    }
    if kcin != cin {
        return Err(Error::dims("conv input channels", x.shape(), kernel.shape()));
    }
    if bias.shape() != [cout] {
        return Err(Error::dims("conv bias", bias.shape(), &[cout]));
    }
    let oh = (h + 2 - 3) / stride + 1;
    let ow = (w + 2 - 3) / stride + 1;
    let k64 = widen(&kernel.data);
    let mut out = vec![0.0f32; b * oh * ow * cout];
    let row_len = ow * cout;
    out.par_chunks_mut(row_len).enumerate().for_each(|(r, orow)| {
        let bi = r / oh;
        let oy = r % oh;
        let img = &x.data[bi * h * w * cin..(bi + 1) * h * w * cin];
        let mut acc = vec![0.0f64; cout];
        for ox in 0..ow {
            for (a, &bv) in acc.iter_mut().zip(&bias.data) {
                *a = bv as f64;
            }
            for ky in 0..3 {
                let iy = (oy * stride + ky) as isize - 1;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let ix = (ox * stride + kx) as isize - 1;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let px = &img[(iy as usize * w + ix as usize) * cin..][..cin];
                    let kbase = (ky * 3 + kx) * cin * cout;
                    for (ci, &xv) in px.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let xv = xv as f64;
                        let krow = &k64[kbase + ci * cout..][..cout];
                        for (a, &kv) in acc.iter_mut().zip(krow) {
                            *a += xv * kv;
                        }
                    }
                }
            }
            for (o, &a) in orow[ox * cout..(ox + 1) * cout].iter_mut().zip(&acc) {
                *o = a as f32;
            }
        }
    });
    Tensor::new(x.with_image_shape(oh, ow, cout), out)
}

/// Nearest-neighbour 2× upsampling: `out[i][j] = x[i/2][j/2]`.
pub fn upsample_nn2x(x: &Tensor) -> Result<Tensor> {
    let (b, h, w, c) = x.as_images()?;
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![0.0f32; b * oh * ow * c];
    for bi in 0..b {
        for i in 0..oh {
            for j in 0..ow {
                let src = ((bi * h + i / 2) * w + j / 2) * c;
                let dst = ((bi * oh + i) * ow + j) * c;
                out[dst..dst + c].copy_from_slice(&x.data[src..src + c]);
            }
        }
    }
    Tensor::new(x.with_image_shape(oh, ow, c), out)
}

pub fn leaky_relu(x: &Tensor, slope: f32) -> Tensor {
    x.map(|v| if v >= 0.0 { v } else { slope * v })
}

/// Tanh-approximated GELU.
pub fn gelu(x: &Tensor) -> Tensor {
    const K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    x.map(|v| {
        let v = v as f64;
        (0.5 * v * (1.0 + (K * (v + 0.044715 * v * v * v)).tanh())) as f32
    })
}
