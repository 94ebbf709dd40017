//! Per-point forward/reverse workspace.
//!
//! Forward pass (layer ℓ, `d` tangent directions):
//!
//! ```text
//!   z  = A h + b          Z = A J          (J_0 = I_d)
//!   h  = ρ(z)             J = ρ'(z) ⊙ Z    (hidden layers)
//!   u  = z_D              ∇ₓu = Z_D
//! ```
//!
//! Reverse pass, given adjoints `ū` and `ḡ = ∂loss/∂(∇ₓu)`:
//!
//! ```text
//!   z̄ = h̄ ⊙ ρ'(z) + Σ_k J̄_k ⊙ Z_k ⊙ ρ''(z)      Z̄ = J̄ ⊙ ρ'(z)
//!   Ā += z̄ hᵀ + Z̄ Jᵀ     b̄ += z̄     h̄_prev = Aᵀ z̄     J̄_prev = Aᵀ Z̄
//! ```

use super::{LayerShape, NetworkArch};
use crate::ritz::{LossAccumulator, LossBreakdown, PreparedBatch};
use crate::summation::KahanSum;

/// Points folded into the compensated gradient accumulator at a time.
const GRAD_CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct Tape {
    dim: usize,
    shapes: Vec<LayerShape>,
    widths: Vec<usize>,
    /// `h[ℓ]`: layer outputs, `h[0] = x`.
    h: Vec<Vec<f64>>,
    /// `jac[ℓ]`: `n_ℓ × d` tangents of `h[ℓ]`.
    jac: Vec<Vec<f64>>,
    /// `zt[ℓ]`: `n_ℓ × d` tangents of the pre-activation.
    zt: Vec<Vec<f64>>,
    d1: Vec<Vec<f64>>,
    d2: Vec<Vec<f64>>,
    out: f64,
    out_grad: Vec<f64>,
    // adjoint scratch
    zbar: Vec<f64>,
    ztbar: Vec<f64>,
    hbar: Vec<f64>,
    jbar: Vec<f64>,
}

impl Tape {
    pub fn empty() -> Self {
        Tape {
            dim: 0,
            shapes: Vec::new(),
            widths: Vec::new(),
            h: Vec::new(),
            jac: Vec::new(),
            zt: Vec::new(),
            d1: Vec::new(),
            d2: Vec::new(),
            out: 0.0,
            out_grad: Vec::new(),
            zbar: Vec::new(),
            ztbar: Vec::new(),
            hbar: Vec::new(),
            jbar: Vec::new(),
        }
    }

    pub fn new(arch: &NetworkArch) -> Self {
        let mut t = Tape::empty();
        t.reshape(arch);
        t
    }

    /// Resizes buffers for `arch`; a no-op when the widths already match.
    pub fn reshape(&mut self, arch: &NetworkArch) {
        if self.widths == arch.widths() {
            return;
        }
        let d = arch.input_dim();
        let widths = arch.widths().to_vec();
        let max_w = *widths.iter().max().unwrap();
        self.dim = d;
        self.shapes = arch.layer_offsets().collect();
        self.h = widths.iter().map(|&n| vec![0.0; n]).collect();
        self.jac = widths.iter().map(|&n| vec![0.0; n * d]).collect();
        self.zt = widths.iter().map(|&n| vec![0.0; n * d]).collect();
        self.d1 = widths.iter().map(|&n| vec![0.0; n]).collect();
        self.d2 = widths.iter().map(|&n| vec![0.0; n]).collect();
        for k in 0..d {
            self.jac[0][k * d + k] = 1.0;
        }
        self.out_grad = vec![0.0; d];
        self.zbar = vec![0.0; max_w];
        self.ztbar = vec![0.0; max_w * d];
        self.hbar = vec![0.0; max_w];
        self.jbar = vec![0.0; max_w * d];
        self.widths = widths;
    }

    pub fn input_gradient(&self) -> &[f64] {
        &self.out_grad
    }

    /// Runs the forward recursion; tangents are propagated only when
    /// `with_grad` is set.
    pub fn forward(
        &mut self,
        arch: &NetworkArch,
        theta: &[f64],
        x: &[f64],
        with_grad: bool,
    ) -> f64 {
        let d = self.dim;
        let depth = self.shapes.len();
        let act = arch.activation();
        self.h[0].copy_from_slice(x);
        for l in 1..=depth {
            let s = self.shapes[l - 1];
            let a = &theta[s.weights..s.bias];
            let b = &theta[s.bias..s.bias + s.rows];
            let (prev, rest) = self.h.split_at_mut(l);
            let h_prev = &prev[l - 1];
            let last = l == depth;
            for i in 0..s.rows {
                let row = &a[i * s.cols..(i + 1) * s.cols];
                let z = b[i] + dot(row, h_prev);
                if last {
                    self.out = z;
                } else {
                    let (v, g1, g2) = act.eval(z);
                    rest[0][i] = v;
                    self.d1[l][i] = g1;
                    self.d2[l][i] = g2;
                }
            }
            if with_grad {
                let (jprev, _) = self.jac.split_at(l);
                let j_prev = &jprev[l - 1];
                let zt = &mut self.zt[l];
                for i in 0..s.rows {
                    let row = &a[i * s.cols..(i + 1) * s.cols];
                    let zt_row = &mut zt[i * d..(i + 1) * d];
                    zt_row.fill(0.0);
                    for (j, &aij) in row.iter().enumerate() {
                        let jr = &j_prev[j * d..(j + 1) * d];
                        for k in 0..d {
                            zt_row[k] += aij * jr[k];
                        }
                    }
                }
                if last {
                    self.out_grad.copy_from_slice(&self.zt[l][..d]);
                } else {
                    let (zt, d1) = (&self.zt[l], &self.d1[l]);
                    let jac = &mut self.jac[l];
                    for i in 0..s.rows {
                        for k in 0..d {
                            jac[i * d + k] = d1[i] * zt[i * d + k];
                        }
                    }
                }
            }
        }
        self.out
    }

    /// Accumulates `∂loss/∂θ` into `grad` given `ū` and (optionally) `ḡ`.
    /// Must follow a [`forward`](Self::forward) at the same point with
    /// `with_grad == gbar.is_some()`.
    pub fn backward(&mut self, theta: &[f64], ubar: f64, gbar: Option<&[f64]>, grad: &mut [f64]) {
        let d = self.dim;
        let depth = self.shapes.len();
        let with_grad = gbar.is_some();
        self.zbar[0] = ubar;
        if let Some(g) = gbar {
            self.ztbar[..d].copy_from_slice(g);
        }
        for l in (1..=depth).rev() {
            let s = self.shapes[l - 1];
            let a = &theta[s.weights..s.bias];
            let h_prev = &self.h[l - 1];
            let j_prev = &self.jac[l - 1];
            // parameter adjoints
            for i in 0..s.rows {
                let zb = self.zbar[i];
                let ga = &mut grad[s.weights + i * s.cols..s.weights + (i + 1) * s.cols];
                for (j, gaij) in ga.iter_mut().enumerate() {
                    let mut acc = zb * h_prev[j];
                    if with_grad {
                        let ztb = &self.ztbar[i * d..(i + 1) * d];
                        let jr = &j_prev[j * d..(j + 1) * d];
                        for k in 0..d {
                            acc += ztb[k] * jr[k];
                        }
                    }
                    *gaij += acc;
                }
                grad[s.bias + i] += zb;
            }
            if l == 1 {
                break;
            }
            // adjoints of the previous layer's outputs
            let n_prev = s.cols;
            self.hbar[..n_prev].fill(0.0);
            if with_grad {
                self.jbar[..n_prev * d].fill(0.0);
            }
            for i in 0..s.rows {
                let zb = self.zbar[i];
                let row = &a[i * s.cols..(i + 1) * s.cols];
                for (j, &aij) in row.iter().enumerate() {
                    self.hbar[j] += aij * zb;
                    if with_grad {
                        for k in 0..d {
                            self.jbar[j * d + k] += aij * self.ztbar[i * d + k];
                        }
                    }
                }
            }
            // through the activation of layer l-1
            let (d1, d2, zt) = (&self.d1[l - 1], &self.d2[l - 1], &self.zt[l - 1]);
            for j in 0..n_prev {
                let mut zb = self.hbar[j] * d1[j];
                if with_grad {
                    for k in 0..d {
                        let jb = self.jbar[j * d + k];
                        zb += jb * zt[j * d + k] * d2[j];
                        self.ztbar[j * d + k] = jb * d1[j];
                    }
                }
                self.zbar[j] = zb;
            }
        }
    }

    /// Empirical loss `ℒ̂` and its θ-gradient over a prepared batch.
    pub(crate) fn loss_and_gradient(
        &mut self,
        arch: &NetworkArch,
        theta: &[f64],
        batch: &PreparedBatch<'_>,
        grad: &mut [f64],
    ) -> LossBreakdown {
        let d = self.dim;
        let mut acc = LossAccumulator::new(batch);
        let mut chunk = vec![0.0; grad.len()];
        let mut total: Vec<KahanSum> = vec![KahanSum::new(); grad.len()];
        let mut in_chunk = 0;
        let flush = |chunk: &mut Vec<f64>, total: &mut Vec<KahanSum>| {
            for (t, c) in total.iter_mut().zip(chunk.iter_mut()) {
                t.add(*c);
                *c = 0.0;
            }
        };
        let c_int = batch.interior_weight();
        let mut gbar = vec![0.0; d];
        for (i, x) in batch.interior_points().enumerate() {
            let u = self.forward(arch, theta, x, true);
            let (w, f) = (batch.w[i], batch.f[i]);
            acc.add_interior(u, &self.out_grad, w, f);
            for (gb, g) in gbar.iter_mut().zip(&self.out_grad) {
                *gb = c_int * g;
            }
            self.backward(theta, c_int * (w * u - f), Some(&gbar), &mut chunk);
            in_chunk += 1;
            if in_chunk == GRAD_CHUNK {
                flush(&mut chunk, &mut total);
                in_chunk = 0;
            }
        }
        let c_bd = batch.boundary_weight();
        let alpha = batch.alpha();
        for (j, y) in batch.boundary_points().enumerate() {
            let u = self.forward(arch, theta, y, false);
            let g = batch.g[j];
            acc.add_boundary(u, g);
            self.backward(theta, c_bd * (alpha * u - g), None, &mut chunk);
            in_chunk += 1;
            if in_chunk == GRAD_CHUNK {
                flush(&mut chunk, &mut total);
                in_chunk = 0;
            }
        }
        flush(&mut chunk, &mut total);
        for (g, t) in grad.iter_mut().zip(&total) {
            *g = t.value();
        }
        acc.finish()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
