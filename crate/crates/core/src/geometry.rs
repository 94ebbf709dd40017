//! Sampleable domains Ω ⊂ [0,1]^d.
//!
//! Two shapes are supported: the unit hypercube (the natural desk-scale
//! testbed, though its boundary is not smooth) and a ball contained in the
//! unit cube. Both have analytic boundary parameterisations, so uniform
//! boundary sampling and exact measures are available.

use rand::distr::Open01;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::{self, stream, Rng};

/// Tolerance used by the boundary membership test.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    UnitHypercube,
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    dim: usize,
}

/// Serialised form used by experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainShape,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    Hypercube,
    Ball,
}

impl Domain {
    pub fn unit_hypercube(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        Ok(Domain {
            kind: DomainKind::UnitHypercube,
            dim,
        })
    }

    /// Ball with the given centre. The radius is clipped so that the ball
    /// stays inside `[0,1]^d`.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = center.len();
        if dim == 0 {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let room = center
            .iter()
            .map(|&c| c.min(1.0 - c))
            .fold(f64::INFINITY, f64::min);
        if !(room > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "ball centre {center:?} is not inside the open unit cube"
            )));
        }
        Ok(Domain {
            kind: DomainKind::Ball {
                center,
                radius: radius.min(room),
            },
            dim,
        })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        match spec.kind {
            DomainShape::Hypercube => {
                if spec.center.is_some() || spec.radius.is_some() {
                    return Err(Error::InvalidDomain(
                        "hypercube takes no centre or radius".into(),
                    ));
                }
                Domain::unit_hypercube(spec.d)
            }
            DomainShape::Ball => {
                let center = spec.center.clone().unwrap_or_else(|| vec![0.5; spec.d]);
                if center.len() != spec.d {
                    return Err(Error::InvalidDomain(format!(
                        "centre has {} coordinates but d = {}",
                        center.len(),
                        spec.d
                    )));
                }
                let radius = spec
                    .radius
                    .ok_or_else(|| Error::InvalidDomain("ball needs a radius".into()))?;
                Domain::ball(center, radius)
            }
        }
    }

    pub fn to_spec(&self) -> DomainSpec {
        match &self.kind {
            DomainKind::UnitHypercube => DomainSpec {
                kind: DomainShape::Hypercube,
                d: self.dim,
                center: None,
                radius: None,
            },
            DomainKind::Ball { center, radius } => DomainSpec {
                kind: DomainShape::Ball,
                d: self.dim,
                center: Some(center.clone()),
                radius: Some(*radius),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    /// `(|Ω|, |∂Ω|)`. In one dimension the boundary measure is the counting
    /// measure of the two endpoints.
    pub fn measures(&self) -> (f64, f64) {
        match &self.kind {
            DomainKind::UnitHypercube => (1.0, 2.0 * self.dim as f64),
            DomainKind::Ball { radius, .. } => {
                let vol = unit_ball_volume(self.dim) * radius.powi(self.dim as i32);
                (vol, self.dim as f64 * vol / radius)
            }
        }
    }

    pub fn interior_measure(&self) -> f64 {
        self.measures().0
    }

    pub fn boundary_measure(&self) -> f64 {
        self.measures().1
    }

    /// End points of a one-dimensional domain.
    pub fn interval(&self) -> Option<(f64, f64)> {
        if self.dim != 1 {
            return None;
        }
        Some(match &self.kind {
            DomainKind::UnitHypercube => (0.0, 1.0),
            DomainKind::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        })
    }

    /// Strict interior membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim {
            return false;
        }
        match &self.kind {
            DomainKind::UnitHypercube => x.iter().all(|&v| v > 0.0 && v < 1.0),
            DomainKind::Ball { center, radius } => dist(x, center) < *radius,
        }
    }

    /// Boundary membership to within [`BOUNDARY_TOL`].
    pub fn on_boundary(&self, y: &[f64]) -> bool {
        if y.len() != self.dim {
            return false;
        }
        match &self.kind {
            DomainKind::UnitHypercube => {
                let inside = y
                    .iter()
                    .all(|&v| v >= -BOUNDARY_TOL && v <= 1.0 + BOUNDARY_TOL);
                let on_face = y
                    .iter()
                    .any(|&v| v.abs() <= BOUNDARY_TOL || (v - 1.0).abs() <= BOUNDARY_TOL);
                inside && on_face
            }
            DomainKind::Ball { center, radius } => (dist(y, center) - radius).abs() <= BOUNDARY_TOL,
        }
    }

    /// Outward unit normal at a boundary point. Hypercube faces use ±e_k for
    /// the nearest face; the ball uses `(y - c)/r`.
    pub fn outward_normal(&self, y: &[f64], normal: &mut [f64]) {
        normal.fill(0.0);
        match &self.kind {
            DomainKind::UnitHypercube => {
                let mut best = (f64::INFINITY, 0usize, 1.0);
                for (k, &v) in y.iter().enumerate() {
                    if v.abs() < best.0 {
                        best = (v.abs(), k, -1.0);
                    }
                    if (1.0 - v).abs() < best.0 {
                        best = ((1.0 - v).abs(), k, 1.0);
                    }
                }
                normal[best.1] = best.2;
            }
            DomainKind::Ball { center, radius } => {
                for ((n, &yk), &ck) in normal.iter_mut().zip(y).zip(center) {
                    *n = (yk - ck) / radius;
                }
            }
        }
    }

    pub fn sample_interior(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "interior sample count must be ≥ 1".into(),
            ));
        }
        let mut rng = rng::seeded(seed, stream::INTERIOR);
        let mut coords = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            self.push_interior_point(&mut rng, &mut coords);
        }
        Ok(PointSet {
            dim: self.dim,
            coords,
        })
    }

    pub fn sample_boundary(&self, m: usize, seed: u64) -> Result<PointSet> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "boundary sample count must be ≥ 1".into(),
            ));
        }
        let mut rng = rng::seeded(seed, stream::BOUNDARY);
        let mut coords = Vec::with_capacity(m * self.dim);
        for _ in 0..m {
            self.push_boundary_point(&mut rng, &mut coords);
        }
        Ok(PointSet {
            dim: self.dim,
            coords,
        })
    }

    fn push_interior_point(&self, rng: &mut Rng, out: &mut Vec<f64>) {
        match &self.kind {
            DomainKind::UnitHypercube => {
                for _ in 0..self.dim {
                    out.push(rng.sample::<f64, _>(Open01));
                }
            }
            DomainKind::Ball { center, radius } => {
                let start = out.len();
                push_unit_direction(rng, self.dim, out);
                // inverse CDF of the radial law: P(r ≤ s) = (s/R)^d
                let u: f64 = rng.sample(Open01);
                let r = radius * u.powf(1.0 / self.dim as f64);
                for (v, &c) in out[start..].iter_mut().zip(center) {
                    *v = c + r * *v;
                }
            }
        }
    }

    fn push_boundary_point(&self, rng: &mut Rng, out: &mut Vec<f64>) {
        match &self.kind {
            DomainKind::UnitHypercube => {
                // every face of the unit cube has measure 1, so faces are equiprobable
                let face = rng.random_range(0..2 * self.dim);
                let (axis, side) = (face / 2, (face % 2) as f64);
                for k in 0..self.dim {
                    if k == axis {
                        out.push(side);
                    } else {
                        out.push(rng.random::<f64>());
                    }
                }
            }
            DomainKind::Ball { center, radius } => {
                let start = out.len();
                push_unit_direction(rng, self.dim, out);
                for (v, &c) in out[start..].iter_mut().zip(center) {
                    *v = c + radius * *v;
                }
            }
        }
    }
}

fn push_unit_direction(rng: &mut Rng, dim: usize, out: &mut Vec<f64>) {
    let start = out.len();
    loop {
        out.truncate(start);
        let mut norm2 = 0.0;
        for _ in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            norm2 += z * z;
            out.push(z);
        }
        if norm2 > 1e-300 {
            let inv = norm2.sqrt().recip();
            out[start..].iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Volume of the unit ball in ℝ^d via `V_d = V_{d-2}·2π/d`.
fn unit_ball_volume(dim: usize) -> f64 {
    let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if dim % 2 == 0 { 2 } else { 3 };
    while k <= dim {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Row-major list of points in ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            crate::error::check_dim(dim, p.len())?;
            coords.extend_from_slice(p);
        }
        Ok(PointSet { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

/// Interior and boundary samples `{X_i}`, `{Y_j}` together with their seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub interior: PointSet,
    pub boundary: PointSet,
    pub seed: u64,
}

impl SampleBatch {
    /// Draws `n` interior and `m` boundary points. Interior and boundary use
    /// separate streams of the same seed, so this equals
    /// `(sample_interior(n, seed), sample_boundary(m, seed))`.
    pub fn draw(domain: &Domain, n: usize, m: usize, seed: u64) -> Result<Self> {
        Ok(SampleBatch {
            interior: domain.sample_interior(n, seed)?,
            boundary: domain.sample_boundary(m, seed)?,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.interior.len()
    }

    pub fn m(&self) -> usize {
        self.boundary.len()
    }

    pub fn dim(&self) -> usize {
        self.interior.dim()
    }
}
