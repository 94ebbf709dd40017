//! Brute-force counterparts of the closed-form bounds, usable at tiny scale.

use rand::Rng as _;
use serde::Serialize;

use super::class_constants;
use crate::error::{Error, Result};
use crate::function::TrialFunction;
use crate::network::{Network, NetworkArch, NetworkParams};
use crate::rng::{seeded, stream};

/// Largest `N` accepted by [`exact_rademacher`] (2^N sign patterns).
pub const MAX_ENUMERATION: usize = 20;

/// `𝔼_σ sup_{a∈A} (1/N) Σ σ_i a_i`, computed exactly over all `2^N` sign vectors.
pub fn exact_rademacher(set: &[Vec<f64>]) -> Result<f64> {
    let n = set
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("the set must be non-empty".into()))?;
    if n == 0 || n > MAX_ENUMERATION || set.iter().any(|a| a.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "set members must share a length in 1..={MAX_ENUMERATION}"
        )));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let best = set
            .iter()
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -*v })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        total += best;
    }
    Ok(total / (1u64 << n) as f64 / n as f64)
}

/// Exact Rademacher complexities of `A` and of `{(w_i a_i)_i : a ∈ A}`, the
/// two sides of the contraction inequality `ℜ(w·A) ≤ max|w_i| · ℜ(A)`.
pub fn contraction_check(set: &[Vec<f64>], multiplier: &[f64]) -> Result<(f64, f64)> {
    let scaled: Vec<Vec<f64>> = set
        .iter()
        .map(|a| a.iter().zip(multiplier).map(|(x, w)| x * w).collect())
        .collect();
    if set.iter().any(|a| a.len() != multiplier.len()) {
        return Err(Error::InvalidArgument(
            "multiplier length must match the set".into(),
        ));
    }
    let bound = multiplier.iter().map(|w| w.abs()).fold(0.0, f64::max);
    Ok((exact_rademacher(&scaled)?, bound * exact_rademacher(set)?))
}

/// Size of a greedy `ε`-cover of the grid with `per_axis` points per axis in
/// `[-B, B]^n`: grid points are visited in order and every point not yet
/// within `ε` of a centre becomes a centre.
pub fn greedy_cover_size(eps: f64, radius: f64, n: usize, per_axis: usize) -> Result<usize> {
    if !(eps > 0.0) || !(radius > 0.0) || !(1..=3).contains(&n) || per_axis < 2 {
        return Err(Error::InvalidArgument(
            "greedy cover needs ε > 0, B > 0, 1 ≤ n ≤ 3 and at least two grid points per axis"
                .into(),
        ));
    }
    let h = 2.0 * radius / (per_axis - 1) as f64;
    let total = per_axis.pow(n as u32);
    let reach = (eps / h).floor() as isize;
    let mut covered = vec![false; total];
    let coord = |idx: usize| -> [isize; 3] {
        let mut c = [0isize; 3];
        let mut r = idx;
        for slot in c.iter_mut().take(n) {
            *slot = (r % per_axis) as isize;
            r /= per_axis;
        }
        c
    };
    let mut centres = 0;
    for idx in 0..total {
        if covered[idx] {
            continue;
        }
        centres += 1;
        let c = coord(idx);
        let lo = |k: usize| if k < n { -reach } else { 0 };
        let hi = |k: usize| if k < n { reach } else { 0 };
        for o2 in lo(2)..=hi(2) {
            for o1 in lo(1)..=hi(1) {
                for o0 in lo(0)..=hi(0) {
                    let offs = [o0, o1, o2];
                    let dist2: f64 = offs.iter().map(|&o| (o as f64 * h).powi(2)).sum();
                    if dist2 > eps * eps {
                        continue;
                    }
                    let mut j = 0usize;
                    let mut stride = 1usize;
                    let mut inside = true;
                    for k in 0..n {
                        let v = c[k] + offs[k];
                        if v < 0 || v >= per_axis as isize {
                            inside = false;
                            break;
                        }
                        j += v as usize * stride;
                        stride *= per_axis;
                    }
                    if inside {
                        covered[j] = true;
                    }
                }
            }
        }
    }
    Ok(centres)
}

/// Largest observed θ-difference quotients of `u(x; θ)` and `∂u/∂x_p`
/// next to the Lipschitz constants that should dominate them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzCheck {
    pub probes: usize,
    pub skipped: usize,
    pub value_ratio: f64,
    pub value_bound: f64,
    pub derivative_ratio: f64,
    pub derivative_bound: f64,
}

impl LipschitzCheck {
    pub fn holds(&self) -> bool {
        self.value_ratio <= self.value_bound && self.derivative_ratio <= self.derivative_bound
    }
}

/// Probes pairs `(θ, θ̃)` in `[-B, B]^𝔫` and points `x ∈ [0, 1]^d`. Even
/// probes use independent draws; odd probes perturb `θ` by a small random
/// step to sample local slopes. Pairs with `θ = θ̃` are skipped.
pub fn lipschitz_in_theta_check(
    arch: &NetworkArch,
    n_probes: usize,
    seed: u64,
) -> Result<LipschitzCheck> {
    if n_probes < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 probes, got {n_probes}"
        )));
    }
    let c = class_constants(arch);
    let bound = arch.weight_bound();
    let np = arch.param_count();
    let d = arch.input_dim();
    let mut rng = seeded(seed, stream::PROBE);
    let mut out = LipschitzCheck {
        probes: n_probes,
        skipped: 0,
        value_ratio: 0.0,
        value_bound: c.value_lipschitz.get(),
        derivative_ratio: 0.0,
        derivative_bound: c.derivative_lipschitz.get(),
    };
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    for probe in 0..n_probes {
        let theta: Vec<f64> = (0..np).map(|_| rng.random_range(-bound..=bound)).collect();
        let other: Vec<f64> = if probe % 2 == 0 {
            (0..np).map(|_| rng.random_range(-bound..=bound)).collect()
        } else {
            let step = 1e-3 * bound;
            theta
                .iter()
                .map(|t| (t + rng.random_range(-step..=step)).clamp(-bound, bound))
                .collect()
        };
        let dist = theta
            .iter()
            .zip(&other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist == 0.0 {
            out.skipped += 1;
            continue;
        }
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let pa = NetworkParams::from_flat(arch, theta)?;
        let pb = NetworkParams::from_flat(arch, other)?;
        let va = Network::new(arch, &pa)?.value_and_gradient(&x, &mut ga);
        let vb = Network::new(arch, &pb)?.value_and_gradient(&x, &mut gb);
        out.value_ratio = out.value_ratio.max((va - vb).abs() / dist);
        let dmax = ga
            .iter()
            .zip(&gb)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.derivative_ratio = out.derivative_ratio.max(dmax / dist);
    }
    Ok(out)
}
