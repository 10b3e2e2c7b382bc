//! Reference executor for the pointwise (1x1) convolution variants.
//!
//! The grouped rewrite never needs a grouped kernel on the device: folding
//! the group dimension into the spatial map turns it into an ordinary
//! pointwise convolution over a taller tensor. This module implements that
//! folding and enough of a pointwise executor to check, numerically, that
//! the rewrite computes the same function as the layer it replaces. It is a
//! correctness reference — plain nested loops over `NHWC` data, no blocking,
//! no parallelism — sized for small shapes in tests.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::Scalar;

/// Errors from shape-checked tensor operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    /// Backing data length disagrees with the declared shape.
    #[error("data length {got} does not match shape {n}x{h}x{w}x{c}")]
    DataLength {
        n: usize,
        h: usize,
        w: usize,
        c: usize,
        got: usize,
    },
    /// Group count must be at least 1.
    #[error("group count must be at least 1")]
    ZeroGroups,
    /// Channels cannot be split into the requested groups.
    #[error("channel count {c} is not divisible by group count {g}")]
    NonDivisibleChannels { c: usize, g: usize },
    /// Rows cannot be split back into the requested groups.
    #[error("row count {h} is not divisible by group count {g}")]
    NonDivisibleRows { h: usize, g: usize },
    /// Input channels disagree with the weight matrix.
    #[error("input channels {c} do not match weight rows {rows}")]
    ChannelMismatch { c: usize, rows: usize },
    /// Two tensors that must share a shape do not.
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: [usize; 4], right: [usize; 4] },
    /// Per-group weight matrices of differing shapes.
    #[error("group matrices must all share one shape")]
    RaggedGroups,
}

/// Dense rank-4 tensor in `NHWC` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<R> {
    n: usize,
    h: usize,
    w: usize,
    c: usize,
    data: Vec<R>,
}

impl<R: Scalar> Tensor4<R> {
    /// Wraps existing data, checking the length.
    pub fn new(n: usize, h: usize, w: usize, c: usize, data: Vec<R>) -> Result<Self, TensorError> {
        if data.len() != n * h * w * c {
            return Err(TensorError::DataLength {
                n,
                h,
                w,
                c,
                got: data.len(),
            });
        }
        Ok(Self { n, h, w, c, data })
    }

    /// All-zero tensor.
    pub fn zeros(n: usize, h: usize, w: usize, c: usize) -> Self {
        Self {
            n,
            h,
            w,
            c,
            data: vec![R::zero(); n * h * w * c],
        }
    }

    /// Deterministically random tensor, uniform in [-1, 1).
    pub fn seeded(n: usize, h: usize, w: usize, c: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * h * w * c)
            .map(|_| R::from_f64(rng.gen_range(-1.0..1.0)).expect("unit interval fits scalar"))
            .collect();
        Self { n, h, w, c, data }
    }

    /// Shape as `[n, h, w, c]`.
    pub fn shape(&self) -> [usize; 4] {
        [self.n, self.h, self.w, self.c]
    }

    /// Flat borrowed view of the data, `NHWC` order.
    pub fn data(&self) -> &[R] {
        &self.data
    }

    fn idx(&self, n: usize, y: usize, x: usize, c: usize) -> usize {
        ((n * self.h + y) * self.w + x) * self.c + c
    }

    /// Element accessor (bounds-checked by the underlying slice).
    pub fn at(&self, n: usize, y: usize, x: usize, c: usize) -> R {
        self.data[self.idx(n, y, x, c)]
    }

    /// Folds the channel groups into the spatial map: splits the channels
    /// into `g` contiguous groups and stacks the groups as row blocks, so
    /// `[n, h, w, c]` becomes `[n, g*h, w, c/g]` with group `j` occupying
    /// rows `j*h .. (j+1)*h`.
    pub fn fold_groups(&self, g: usize) -> Result<Self, TensorError> {
        if g == 0 {
            return Err(TensorError::ZeroGroups);
        }
        if !self.c.is_multiple_of(g) {
            return Err(TensorError::NonDivisibleChannels { c: self.c, g });
        }
        let cg = self.c / g;
        let mut out = Self::zeros(self.n, g * self.h, self.w, cg);
        for n in 0..self.n {
            for j in 0..g {
                for y in 0..self.h {
                    for x in 0..self.w {
                        for cc in 0..cg {
                            let slot = out.idx(n, j * self.h + y, x, cc);
                            out.data[slot] = self.at(n, y, x, j * cg + cc);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`Tensor4::fold_groups`]: gathers `g` row blocks back into
    /// channel groups, turning `[n, g*h, w, c]` into `[n, h, w, g*c]`.
    pub fn unfold_groups(&self, g: usize) -> Result<Self, TensorError> {
        if g == 0 {
            return Err(TensorError::ZeroGroups);
        }
        if !self.h.is_multiple_of(g) {
            return Err(TensorError::NonDivisibleRows { h: self.h, g });
        }
        let h = self.h / g;
        let mut out = Self::zeros(self.n, h, self.w, g * self.c);
        for n in 0..self.n {
            for j in 0..g {
                for y in 0..h {
                    for x in 0..self.w {
                        for cc in 0..self.c {
                            let slot = out.idx(n, y, x, j * self.c + cc);
                            out.data[slot] = self.at(n, j * h + y, x, cc);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Weights of one pointwise convolution: a `c_in x c_out` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseWeights<R> {
    c_in: usize,
    c_out: usize,
    /// Row-major `[c_in][c_out]`.
    data: Vec<R>,
}

impl<R: Scalar> PointwiseWeights<R> {
    /// Wraps a row-major `c_in x c_out` matrix, checking the length.
    pub fn new(c_in: usize, c_out: usize, data: Vec<R>) -> Result<Self, TensorError> {
        if data.len() != c_in * c_out {
            return Err(TensorError::DataLength {
                n: 1,
                h: 1,
                w: c_in,
                c: c_out,
                got: data.len(),
            });
        }
        Ok(Self { c_in, c_out, data })
    }

    /// Deterministically random matrix, uniform in [-1, 1).
    pub fn seeded(c_in: usize, c_out: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..c_in * c_out)
            .map(|_| R::from_f64(rng.gen_range(-1.0..1.0)).expect("unit interval fits scalar"))
            .collect();
        Self { c_in, c_out, data }
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    /// Weight of the `(input, output)` channel pair.
    pub fn at(&self, i: usize, o: usize) -> R {
        self.data[i * self.c_out + o]
    }

    /// Matrix product: applying `self` then `next` equals applying the
    /// composition once.
    pub fn compose(&self, next: &Self) -> Result<Self, TensorError> {
        if self.c_out != next.c_in {
            return Err(TensorError::ChannelMismatch {
                c: self.c_out,
                rows: next.c_in,
            });
        }
        let mut data = vec![R::zero(); self.c_in * next.c_out];
        for i in 0..self.c_in {
            for j in 0..self.c_out {
                let a = self.at(i, j);
                for o in 0..next.c_out {
                    data[i * next.c_out + o] += a * next.at(j, o);
                }
            }
        }
        Ok(Self {
            c_in: self.c_in,
            c_out: next.c_out,
            data,
        })
    }
}

/// Plain pointwise convolution: every output channel is a weighted sum over
/// all input channels at the same position.
pub fn pointwise_conv<R: Scalar>(
    x: &Tensor4<R>,
    weights: &PointwiseWeights<R>,
) -> Result<Tensor4<R>, TensorError> {
    let [n, h, w, c] = x.shape();
    if c != weights.c_in {
        return Err(TensorError::ChannelMismatch {
            c,
            rows: weights.c_in,
        });
    }
    let mut out = Tensor4::zeros(n, h, w, weights.c_out);
    for nn in 0..n {
        for y in 0..h {
            for xx in 0..w {
                for o in 0..weights.c_out {
                    let mut acc = R::zero();
                    for i in 0..c {
                        acc += x.at(nn, y, xx, i) * weights.at(i, o);
                    }
                    let slot = out.idx(nn, y, xx, o);
                    out.data[slot] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Grouped pointwise convolution with one weight matrix per group: group `j`
/// of the input feeds group `j` of the output through `matrices[j]`.
pub fn group_conv_pointwise<R: Scalar>(
    x: &Tensor4<R>,
    matrices: &[PointwiseWeights<R>],
) -> Result<Tensor4<R>, TensorError> {
    let g = matrices.len();
    if g == 0 {
        return Err(TensorError::ZeroGroups);
    }
    let [n, h, w, c] = x.shape();
    if c % g != 0 {
        return Err(TensorError::NonDivisibleChannels { c, g });
    }
    let (cg_in, cg_out) = (matrices[0].c_in, matrices[0].c_out);
    if matrices
        .iter()
        .any(|m| m.c_in != cg_in || m.c_out != cg_out)
    {
        return Err(TensorError::RaggedGroups);
    }
    if c / g != cg_in {
        return Err(TensorError::ChannelMismatch {
            c: c / g,
            rows: cg_in,
        });
    }
    let mut out = Tensor4::zeros(n, h, w, g * cg_out);
    for nn in 0..n {
        for y in 0..h {
            for xx in 0..w {
                for (j, mat) in matrices.iter().enumerate() {
                    for o in 0..cg_out {
                        let mut acc = R::zero();
                        for i in 0..cg_in {
                            acc += x.at(nn, y, xx, j * cg_in + i) * mat.at(i, o);
                        }
                        let slot = out.idx(nn, y, xx, j * cg_out + o);
                        out.data[slot] = acc;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The shared-weight grouped rewrite, executed the way hardware would run
/// it: fold the groups into the spatial map, run one plain pointwise
/// convolution with the shared matrix, unfold. Equivalent to
/// [`group_conv_pointwise`] with `g` copies of `shared`.
pub fn abconv_forward<R: Scalar>(
    x: &Tensor4<R>,
    shared: &PointwiseWeights<R>,
    g: usize,
) -> Result<Tensor4<R>, TensorError> {
    let folded = x.fold_groups(g)?;
    let convolved = pointwise_conv(&folded, shared)?;
    convolved.unfold_groups(g)
}

/// The expanded rewrite: fold, expand to the intermediate width with
/// `expansion`, apply the shared `main` matrix, unfold. Equivalent to
/// [`abconv_forward`] with the composed matrix `expansion * main`.
pub fn abconv_exp_forward<R: Scalar>(
    x: &Tensor4<R>,
    expansion: &PointwiseWeights<R>,
    main: &PointwiseWeights<R>,
    g: usize,
) -> Result<Tensor4<R>, TensorError> {
    let folded = x.fold_groups(g)?;
    let expanded = pointwise_conv(&folded, expansion)?;
    let convolved = pointwise_conv(&expanded, main)?;
    convolved.unfold_groups(g)
}

/// Largest pointwise discrepancy between two same-shaped tensors, relative
/// above magnitude 1 and absolute below it.
pub fn max_relative_error<R: Scalar>(a: &Tensor4<R>, b: &Tensor4<R>) -> Result<R, TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut worst = R::zero();
    for (&x, &y) in a.data.iter().zip(&b.data) {
        let scale = x.abs().max(y.abs()).max(R::one());
        worst = worst.max((x - y).abs() / scale);
    }
    Ok(worst)
}
