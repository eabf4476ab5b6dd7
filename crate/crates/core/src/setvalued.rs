//! Set-valued primitives on the quadrature lattice: tube sets, half-spaces,
//! their intersection, and Hausdorff/Kuratowski diagnostics for finite clouds.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{fmt_f64, FemSpace, NodalFunction};

/// `{ f : |f(x) - center(x)| <= radius(x) }`, sampled at quadrature points.
#[derive(Debug, Clone)]
pub struct TubeSet {
    space: Arc<FemSpace>,
    center: Vec<f64>,
    radius: Vec<f64>,
}

impl TubeSet {
    pub fn new(space: Arc<FemSpace>, center: Vec<f64>, radius: Vec<f64>) -> Result<Self> {
        let n = space.n_quad();
        for len in [center.len(), radius.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if let Some(r) = radius.iter().find(|r| !(**r >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative tube radius {r}")));
        }
        Ok(Self {
            space,
            center,
            radius,
        })
    }

    pub fn space(&self) -> &Arc<FemSpace> {
        &self.space
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    /// Largest pointwise excess `|f - center| - radius` (negative inside).
    pub fn max_violation(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(self.center.iter().zip(&self.radius))
            .map(|(v, (c, r))| (v - c).abs() - r)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, f: &[f64], tol: f64) -> bool {
        self.max_violation(f) <= tol
    }

    /// Exact `H`-nearest point: the pointwise clamp.
    pub fn project(&self, target: &[f64]) -> Vec<f64> {
        assert_eq!(target.len(), self.center.len());
        target
            .iter()
            .zip(self.center.iter().zip(&self.radius))
            .map(|(t, (c, r))| t.clamp(c - r, c + r))
            .collect()
    }

    /// `H`-distance from `target` to the tube.
    pub fn dist(&self, target: &[f64]) -> f64 {
        let excess: Vec<f64> = target
            .iter()
            .zip(self.center.iter().zip(&self.radius))
            .map(|(t, (c, r))| ((t - c).abs() - r).max(0.0))
            .collect();
        self.space.quad_norm(&excess)
    }

    /// `sup { ‖f‖_H : f in tube } = ‖ |center| + radius ‖_H`.
    pub fn norm(&self) -> f64 {
        let s: Vec<f64> = self
            .center
            .iter()
            .zip(&self.radius)
            .map(|(c, r)| c.abs() + r)
            .collect();
        self.space.quad_norm(&s)
    }

    /// Offset field `θ` with `f = center + θ·radius`; `θ = 0` where the radius vanishes.
    pub fn offset_of(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(self.center.iter().zip(&self.radius))
            .map(|(v, (c, r))| {
                if *r > 0.0 {
                    ((v - c) / r).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `center + θ·radius` for a given offset field.
    pub fn point_at_offset(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.center.iter().zip(&self.radius))
            .map(|(t, (c, r))| c + t.clamp(-1.0, 1.0) * r)
            .collect()
    }

    /// Nearest point of `tube ∩ hs` to `target`.
    pub fn project_with_halfspace(
        &self,
        hs: &HalfSpace,
        target: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<Vec<f64>> {
        let lo: Vec<f64> = self
            .center
            .iter()
            .zip(&self.radius)
            .map(|(c, r)| c - r)
            .collect();
        let hi: Vec<f64> = self
            .center
            .iter()
            .zip(&self.radius)
            .map(|(c, r)| c + r)
            .collect();
        dykstra_box_halfspace(
            &lo,
            &hi,
            self.space.quad_weights(),
            &hs.normal,
            hs.offset,
            target,
            tol,
            max_iter,
        )
    }
}

/// Free-function form of [`TubeSet::project`].
pub fn tube_project(tube: &TubeSet, target: &[f64]) -> Vec<f64> {
    tube.project(target)
}

/// Free-function form of [`TubeSet::dist`].
pub fn tube_dist(tube: &TubeSet, target: &[f64]) -> f64 {
    tube.dist(target)
}

/// `{ g : (normal, g)_H <= offset }` with the normal sampled at quadrature points.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn from_nodal(normal: &NodalFunction, offset: f64) -> Self {
        Self {
            normal: normal.eval_quad(),
            offset,
        }
    }
}

/// Default stopping tolerance for [`project_tube_halfspace`].
pub const DYKSTRA_TOL: f64 = 1e-10;
/// Default iteration cap for [`project_tube_halfspace`].
pub const DYKSTRA_MAX_ITER: usize = 10_000;

pub fn project_tube_halfspace(
    tube: &TubeSet,
    hs: &HalfSpace,
    target: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    tube.project_with_halfspace(hs, target, tol, max_iter)
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

fn project_halfspace(w: &[f64], normal: &[f64], offset: f64, nn: f64, x: &[f64]) -> Vec<f64> {
    let excess = weighted_dot(w, normal, x) - offset;
    if excess <= 0.0 {
        return x.to_vec();
    }
    let s = excess / nn;
    x.iter().zip(normal).map(|(xi, di)| xi - s * di).collect()
}

fn project_box(lo: &[f64], hi: &[f64], x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| v.clamp(*l, *h))
        .collect()
}

fn box_violation(lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| (l - v).max(v - h))
        .fold(0.0, f64::max)
}

/// Dykstra's alternating projections onto `{lo <= x <= hi} ∩ {(d, x)_w <= c}`
/// in the diagonal-weighted inner product `(a, b)_w = Σ w_i a_i b_i`.
///
/// Stops when successive iterates and both correction terms differ by at most
/// `tol` (sup norm, scaled by the target magnitude) and the iterate violates
/// both constraints by at most `tol`.
#[allow(clippy::too_many_arguments)]
pub fn dykstra_box_halfspace(
    lo: &[f64],
    hi: &[f64],
    weights: &[f64],
    normal: &[f64],
    offset: f64,
    target: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = target.len();
    for len in [lo.len(), hi.len(), weights.len(), normal.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let nn = weighted_dot(weights, normal, normal);
    let hs_violation = |x: &[f64]| (weighted_dot(weights, normal, x) - offset).max(0.0);
    if nn <= 0.0 {
        if offset < 0.0 {
            return Err(Error::InvalidArgument("empty half-space".into()));
        }
        return Ok(project_box(lo, hi, target));
    }

    // Constraint slack at either single projection settles it exactly.
    let boxed = project_box(lo, hi, target);
    if hs_violation(&boxed) == 0.0 {
        return Ok(boxed);
    }
    let flat = project_halfspace(weights, normal, offset, nn, target);
    if box_violation(lo, hi, &flat) == 0.0 {
        return Ok(flat);
    }

    let scale = target.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut x = target.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = project_box(lo, hi, &xp);
        let mut drift = 0.0f64;
        for i in 0..n {
            let next = xp[i] - y[i];
            drift = drift.max((next - p[i]).abs());
            p[i] = next;
        }
        let yq: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let x_new = project_halfspace(weights, normal, offset, nn, &yq);
        for i in 0..n {
            let next = yq[i] - x_new[i];
            drift = drift.max((next - q[i]).abs());
            q[i] = next;
        }
        let change = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(drift, f64::max);
        x = x_new;
        let viol = box_violation(lo, hi, &x).max(hs_violation(&x) / nn.sqrt());
        residual = change.max(viol);
        if change <= tol * scale && viol <= tol {
            return Ok(x);
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        last_iterate: x,
    })
}

fn check_nonempty<T>(a: &[T]) -> Result<()> {
    if a.is_empty() {
        Err(Error::EmptyCloud)
    } else {
        Ok(())
    }
}

/// Dense matrix of pairwise distances between two clouds.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// `sup_i inf_j d(a_i, b_j)`.
    pub fn semidist_rows(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// `sup_j inf_i d(a_i, b_j)`.
    pub fn semidist_cols(&self) -> f64 {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.get(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `i,j,distance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,distance\n");
        for i in 0..self.rows {
            for j in 0..self.cols {
                s.push_str(&format!("{i},{j},{}\n", fmt_f64(self.get(i, j))));
            }
        }
        s
    }
}

/// All pairwise distances; rows are evaluated in parallel.
pub fn distance_matrix<T, D>(a: &[T], b: &[T], metric: D) -> Result<DistanceMatrix>
where
    T: Sync,
    D: Fn(&T, &T) -> f64 + Sync,
{
    check_nonempty(a)?;
    check_nonempty(b)?;
    let values: Vec<f64> = a
        .par_iter()
        .flat_map_iter(|x| b.iter().map(|y| metric(x, y)).collect::<Vec<_>>())
        .collect();
    Ok(DistanceMatrix {
        rows: a.len(),
        cols: b.len(),
        values,
    })
}

/// `dist(A, B) = sup_{a in A} inf_{b in B} d(a, b)`.
pub fn hausdorff_semidist<T, D>(a: &[T], b: &[T], metric: D) -> Result<f64>
where
    T: Sync,
    D: Fn(&T, &T) -> f64 + Sync,
{
    check_nonempty(a)?;
    check_nonempty(b)?;
    Ok(a.par_iter()
        .map(|x| b.iter().map(|y| metric(x, y)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max))
}

/// Symmetric Hausdorff distance.
pub fn hausdorff_dist<T, D>(a: &[T], b: &[T], metric: D) -> Result<f64>
where
    T: Sync,
    D: Fn(&T, &T) -> f64 + Sync,
{
    Ok(hausdorff_semidist(a, b, &metric)?.max(hausdorff_semidist(b, a, &metric)?))
}

/// Finite-sample diagnostics for Kuratowski limits of a sequence of clouds.
#[derive(Debug, Clone, PartialEq)]
pub struct KuratowskiReport {
    /// `lower[c][n] = dist(candidate_c, M_n)`; tends to zero for points of the lower limit.
    pub lower: Vec<Vec<f64>>,
    /// Distance from each point of the last cloud to the candidate set.
    pub upper: Vec<f64>,
    /// `max_c dist(candidate_c, M_last)`.
    pub lower_max_last: f64,
    /// `max(upper)`.
    pub upper_max: f64,
}

pub fn kuratowski_report<T, D>(
    sequence: &[Vec<T>],
    candidate: &[T],
    metric: D,
) -> Result<KuratowskiReport>
where
    T: Sync,
    D: Fn(&T, &T) -> f64 + Sync,
{
    let last = sequence.last().ok_or(Error::EmptyCloud)?;
    check_nonempty(candidate)?;
    for m in sequence {
        check_nonempty(m)?;
    }
    let lower: Vec<Vec<f64>> = candidate
        .par_iter()
        .map(|x| {
            sequence
                .iter()
                .map(|m| m.iter().map(|y| metric(x, y)).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect();
    let upper: Vec<f64> = last
        .par_iter()
        .map(|y| {
            candidate
                .iter()
                .map(|x| metric(y, x))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let lower_max_last = lower
        .iter()
        .map(|row| *row.last().unwrap())
        .fold(0.0, f64::max);
    let upper_max = upper.iter().copied().fold(0.0, f64::max);
    Ok(KuratowskiReport {
        lower,
        upper,
        lower_max_last,
        upper_max,
    })
}
