//! Minimal neural-network building blocks with explicit reverse-mode
//! backward passes: dense layers, 3x3 convolutions over board grids, and
//! direction-wise graph message gathering. Everything is f64 so analytic
//! gradients can be checked against central finite differences.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum NnError {
    #[error("non-finite gradient in tensor {0}")]
    NonFiniteGradient(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Adam hyperparameters. `t` is the shared step counter.
#[derive(Debug, Clone, Copy)]
pub struct AdamCfg {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamCfg {
    fn default() -> Self {
        AdamCfg {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Visitor over every parameter tensor: name, values, accumulated
/// gradient, and the two Adam moment buffers. All four slices have equal
/// length. Used by the optimizer step, gradient checking, and snapshots.
pub trait VisitTensors {
    fn visit(&mut self, f: &mut dyn FnMut(&str, &mut [f64], &mut [f64], &mut [f64], &mut [f64]));

    fn zero_grad(&mut self) {
        self.visit(&mut |_, _, g, _, _| g.fill(0.0));
    }

    /// One Adam update using the accumulated gradients. `t` must start at 1.
    fn adam_step(&mut self, cfg: &AdamCfg, t: u64) -> Result<(), NnError> {
        let mut bad: Option<String> = None;
        let bc1 = 1.0 - cfg.beta1.powi(t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(t as i32);
        self.visit(&mut |name, w, g, m, v| {
            if bad.is_some() {
                return;
            }
            if g.iter().any(|x| !x.is_finite()) {
                bad = Some(name.to_string());
                return;
            }
            for i in 0..w.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                w[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        });
        match bad {
            Some(name) => Err(NnError::NonFiniteGradient(name)),
            None => Ok(()),
        }
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, w, _, _, _| n += w.len());
        n
    }
}

fn uniform_init(rng: &mut ChaCha8Rng, fan_in: usize, shape: (usize, usize)) -> Array2<f64> {
    let scale = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_fn(shape, |_| rng.random_range(-scale..scale))
}

/// Fully connected layer, inputs as rows: `(rows, fan_in) -> (rows, fan_out)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub gw: Array2<f64>,
    pub gb: Array1<f64>,
    mw: Array2<f64>,
    vw: Array2<f64>,
    mb: Array1<f64>,
    vb: Array1<f64>,
}

impl Dense {
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Dense {
        let w = uniform_init(rng, fan_in, (fan_in, fan_out));
        Dense {
            gw: Array2::zeros(w.dim()),
            mw: Array2::zeros(w.dim()),
            vw: Array2::zeros(w.dim()),
            w,
            b: Array1::zeros(fan_out),
            gb: Array1::zeros(fan_out),
            mb: Array1::zeros(fan_out),
            vb: Array1::zeros(fan_out),
        }
    }

    pub fn zero_grad(&mut self) {
        self.gw.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        self.gw += &x.t().dot(dy);
        self.gb += &dy.sum_axis(Axis(0));
        dy.dot(&self.w.t())
    }

    pub fn visit(
        &mut self,
        prefix: &str,
        f: &mut dyn FnMut(&str, &mut [f64], &mut [f64], &mut [f64], &mut [f64]),
    ) {
        f(
            &format!("{prefix}.w"),
            self.w.as_slice_mut().unwrap(),
            self.gw.as_slice_mut().unwrap(),
            self.mw.as_slice_mut().unwrap(),
            self.vw.as_slice_mut().unwrap(),
        );
        f(
            &format!("{prefix}.b"),
            self.b.as_slice_mut().unwrap(),
            self.gb.as_slice_mut().unwrap(),
            self.mb.as_slice_mut().unwrap(),
            self.vb.as_slice_mut().unwrap(),
        );
    }
}

/// 3x3 convolution over a row-major grid, implemented as im2col + matmul.
/// Out-of-bounds taps read zero.
#[derive(Debug, Clone)]
pub struct Conv3x3 {
    pub cin: usize,
    pub cout: usize,
    pub lin: Dense,
}

impl Conv3x3 {
    pub fn new(cin: usize, cout: usize, rng: &mut ChaCha8Rng) -> Conv3x3 {
        Conv3x3 {
            cin,
            cout,
            lin: Dense::new(9 * cin, cout, rng),
        }
    }

    /// `(cells, cin) -> (cells, 9*cin)` patch matrix for an h x w grid.
    pub fn im2col(&self, x: &Array2<f64>, h: usize, w: usize) -> Array2<f64> {
        debug_assert_eq!(x.nrows(), h * w);
        debug_assert_eq!(x.ncols(), self.cin);
        let mut patches = Array2::zeros((h * w, 9 * self.cin));
        for r in 0..h {
            for c in 0..w {
                let cell = r * w + c;
                for (tap, (dr, dc)) in TAPS.iter().enumerate() {
                    let rr = r as i64 + dr;
                    let cc = c as i64 + dc;
                    if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
                        continue;
                    }
                    let src = rr as usize * w + cc as usize;
                    for ch in 0..self.cin {
                        patches[(cell, tap * self.cin + ch)] = x[(src, ch)];
                    }
                }
            }
        }
        patches
    }

    fn col2im(&self, dpatches: &Array2<f64>, h: usize, w: usize) -> Array2<f64> {
        let mut dx = Array2::zeros((h * w, self.cin));
        for r in 0..h {
            for c in 0..w {
                let cell = r * w + c;
                for (tap, (dr, dc)) in TAPS.iter().enumerate() {
                    let rr = r as i64 + dr;
                    let cc = c as i64 + dc;
                    if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
                        continue;
                    }
                    let src = rr as usize * w + cc as usize;
                    for ch in 0..self.cin {
                        dx[(src, ch)] += dpatches[(cell, tap * self.cin + ch)];
                    }
                }
            }
        }
        dx
    }

    pub fn forward(&self, x: &Array2<f64>, h: usize, w: usize) -> (Array2<f64>, Array2<f64>) {
        let patches = self.im2col(x, h, w);
        let y = self.lin.forward(&patches);
        (y, patches)
    }

    pub fn backward(
        &mut self,
        patches: &Array2<f64>,
        dy: &Array2<f64>,
        h: usize,
        w: usize,
    ) -> Array2<f64> {
        let dpatches = self.lin.backward(patches, dy);
        self.col2im(&dpatches, h, w)
    }

    pub fn visit(
        &mut self,
        prefix: &str,
        f: &mut dyn FnMut(&str, &mut [f64], &mut [f64], &mut [f64], &mut [f64]),
    ) {
        self.lin.visit(prefix, f);
    }
}

const TAPS: [(i64, i64); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Per-direction neighbor indices for a node set; `None` when the edge
/// leaves the board. Directions follow the canonical Up/Down/Left/Right
/// order.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub neigh: [Vec<Option<u32>>; 4],
}

impl Adjacency {
    pub fn grid(h: usize, w: usize) -> Adjacency {
        let mut neigh: [Vec<Option<u32>>; 4] = Default::default();
        for (d, (dr, dc)) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().enumerate() {
            let mut v = Vec::with_capacity(h * w);
            for r in 0..h {
                for c in 0..w {
                    let rr = r as i64 + dr;
                    let cc = c as i64 + dc;
                    if rr < 0 || cc < 0 || rr >= h as i64 || cc >= w as i64 {
                        v.push(None);
                    } else {
                        v.push(Some((rr as usize * w + cc as usize) as u32));
                    }
                }
            }
            neigh[d] = v;
        }
        Adjacency { neigh }
    }

    pub fn n_nodes(&self) -> usize {
        self.neigh[0].len()
    }

    /// Relabel nodes: node i moves to position perm[i].
    pub fn permuted(&self, perm: &[usize]) -> Adjacency {
        let n = self.n_nodes();
        let mut neigh: [Vec<Option<u32>>; 4] = Default::default();
        for d in 0..4 {
            let mut v = vec![None; n];
            for i in 0..n {
                v[perm[i]] = self.neigh[d][i].map(|j| perm[j as usize] as u32);
            }
            neigh[d] = v;
        }
        Adjacency { neigh }
    }
}

/// Stack `[x, up(x), down(x), left(x), right(x)]` into `(nodes, 5*h)`;
/// missing neighbors contribute zeros. The companion scatter routine is the
/// exact transpose, so one dense layer over the stack implements self plus
/// per-direction linear maps.
pub fn gather_directions(x: &Array2<f64>, adj: &Adjacency) -> Array2<f64> {
    let (n, h) = x.dim();
    debug_assert_eq!(n, adj.n_nodes());
    let mut out = Array2::zeros((n, 5 * h));
    for i in 0..n {
        for k in 0..h {
            out[(i, k)] = x[(i, k)];
        }
        for d in 0..4 {
            if let Some(j) = adj.neigh[d][i] {
                for k in 0..h {
                    out[(i, (d + 1) * h + k)] = x[(j as usize, k)];
                }
            }
        }
    }
    out
}

pub fn scatter_directions(dgathered: &Array2<f64>, adj: &Adjacency) -> Array2<f64> {
    let n = dgathered.nrows();
    let h = dgathered.ncols() / 5;
    let mut dx = Array2::zeros((n, h));
    for i in 0..n {
        for k in 0..h {
            dx[(i, k)] += dgathered[(i, k)];
        }
        for d in 0..4 {
            if let Some(j) = adj.neigh[d][i] {
                for k in 0..h {
                    dx[(j as usize, k)] += dgathered[(i, (d + 1) * h + k)];
                }
            }
        }
    }
    dx
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient through relu given the forward output.
pub fn relu_backward(y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = dy.clone();
    dx.zip_mut_with(y, |d, &yy| {
        if yy <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}

pub fn softplus(x: f64) -> f64 {
    // Numerically stable: ln(1 + e^x).
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn softplus_grad(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Softmax over an arbitrary logit subset, numerically stable.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Cross entropy `-sum(target * ln p)` with the standard softmax-combined
/// gradient `p - target` returned alongside.
pub fn cross_entropy_with_grad(p: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    debug_assert_eq!(p.len(), target.len());
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        if target[i] > 0.0 {
            loss -= target[i] * p[i].max(1e-300).ln();
        }
        grad.push(p[i] - target[i]);
    }
    (loss, grad)
}
