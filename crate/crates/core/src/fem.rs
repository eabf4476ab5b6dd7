//! Piecewise-linear finite elements on nested dyadic grids of an interval.
//!
//! A [`FemSpace`] at level `k` holds the hat functions attached to the
//! `2^k - 1` interior nodes of a uniform grid (homogeneous Dirichlet data).
//! The `H` inner product is the `L^2` product, represented by the mass matrix;
//! the `V` inner product is the Dirichlet form `∫ v'w'`, represented by the
//! stiffness matrix. Non-polynomial integrands are evaluated on a fixed
//! lattice of five Gauss points per cell, which is also the carrier for all
//! set-valued data (tubes, forcings).

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::{random_coeffs, rng_for};
use crate::tridiag::{TridiagonalFactor, TridiagonalMatrix};

/// Gauss–Legendre nodes on `[-1, 1]`, five points.
pub const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

/// Gauss–Legendre weights matching [`GAUSS5_NODES`].
pub const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

pub const QUAD_PER_CELL: usize = 5;

/// Uniform dyadic grid of `[x_lo, x_hi]` with `2^level` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub level: u32,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, level: u32) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(Error::InvalidArgument(format!(
                "degenerate interval [{x_lo}, {x_hi}]"
            )));
        }
        if level > 30 {
            return Err(Error::InvalidArgument(format!("level {level} too large")));
        }
        Ok(Self { x_lo, x_hi, level })
    }

    pub fn n_cells(&self) -> usize {
        1usize << self.level
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn mesh_width(&self) -> f64 {
        self.length() / self.n_cells() as f64
    }

    /// Coordinate of node `i`, `0 <= i <= n_cells`.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells() {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.mesh_width()
        }
    }

    pub fn same_interval(&self, other: &Grid1D) -> bool {
        self.x_lo == other.x_lo && self.x_hi == other.x_hi
    }

    /// True when every node of `coarse` is a node of `self`.
    pub fn refines(&self, coarse: &Grid1D) -> bool {
        self.same_interval(coarse) && self.level >= coarse.level
    }
}

/// P1 space with homogeneous Dirichlet conditions on a [`Grid1D`].
#[derive(Debug)]
pub struct FemSpace {
    grid: Grid1D,
    mass: TridiagonalMatrix,
    stiffness: TridiagonalMatrix,
    mass_factor: TridiagonalFactor,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
}

/// Builds the level-`level` space on `[x_lo, x_hi]`.
pub fn build_space(x_lo: f64, x_hi: f64, level: u32) -> Result<Arc<FemSpace>> {
    FemSpace::new(x_lo, x_hi, level)
}

impl FemSpace {
    pub fn new(x_lo: f64, x_hi: f64, level: u32) -> Result<Arc<Self>> {
        let grid = Grid1D::new(x_lo, x_hi, level)?;
        if level == 0 {
            return Err(Error::InvalidArgument(
                "level 0 has no interior nodes".into(),
            ));
        }
        let n = grid.n_cells() - 1;
        let h = grid.mesh_width();
        let mass = TridiagonalMatrix::constant(n, h / 6.0, 2.0 * h / 3.0, h / 6.0);
        let stiffness = TridiagonalMatrix::constant(n, -1.0 / h, 2.0 / h, -1.0 / h);
        let mass_factor = mass.factor()?;

        let mut quad_points = Vec::with_capacity(grid.n_cells() * QUAD_PER_CELL);
        let mut quad_weights = Vec::with_capacity(grid.n_cells() * QUAD_PER_CELL);
        for cell in 0..grid.n_cells() {
            let a = grid.node(cell);
            for (xi, w) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS.iter()) {
                quad_points.push(a + 0.5 * h * (1.0 + xi));
                quad_weights.push(0.5 * h * w);
            }
        }

        Ok(Arc::new(Self {
            grid,
            mass,
            stiffness,
            mass_factor,
            quad_points,
            quad_weights,
        }))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn level(&self) -> u32 {
        self.grid.level
    }

    pub fn dim(&self) -> usize {
        self.grid.n_cells() - 1
    }

    pub fn mass(&self) -> &TridiagonalMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &TridiagonalMatrix {
        &self.stiffness
    }

    pub fn quad_points(&self) -> &[f64] {
        &self.quad_points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn n_quad(&self) -> usize {
        self.quad_points.len()
    }

    /// Reference coordinate in `[0, 1]` of quadrature point `q` inside its cell.
    fn local_coord(q: usize) -> f64 {
        0.5 * (1.0 + GAUSS5_NODES[q % QUAD_PER_CELL])
    }

    /// Coefficient of node `i` (0..=n_cells), zero on the boundary.
    fn node_value(&self, coeffs: &[f64], i: usize) -> f64 {
        if i == 0 || i == self.grid.n_cells() {
            0.0
        } else {
            coeffs[i - 1]
        }
    }

    /// Values of the piecewise-linear interpolant at every quadrature point.
    pub fn eval_quad(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.dim());
        let mut out = Vec::with_capacity(self.n_quad());
        for cell in 0..self.grid.n_cells() {
            let left = self.node_value(coeffs, cell);
            let right = self.node_value(coeffs, cell + 1);
            for q in 0..QUAD_PER_CELL {
                let s = Self::local_coord(q);
                out.push(left * (1.0 - s) + right * s);
            }
        }
        out
    }

    /// Point evaluation of the interpolant; zero outside the interval.
    pub fn eval_at(&self, coeffs: &[f64], x: f64) -> f64 {
        let g = &self.grid;
        if !(x > g.x_lo && x < g.x_hi) {
            return 0.0;
        }
        let t = (x - g.x_lo) / g.mesh_width();
        let cell = (t.floor() as usize).min(g.n_cells() - 1);
        let s = t - cell as f64;
        self.node_value(coeffs, cell) * (1.0 - s) + self.node_value(coeffs, cell + 1) * s
    }

    /// Load vector `b_i = (f, φ_i)` of quadrature-point data.
    pub fn load_vector(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n_quad());
        let n_cells = self.grid.n_cells();
        let mut b = vec![0.0; self.dim()];
        for cell in 0..n_cells {
            let mut to_left = 0.0;
            let mut to_right = 0.0;
            for q in 0..QUAD_PER_CELL {
                let idx = cell * QUAD_PER_CELL + q;
                let s = Self::local_coord(q);
                let wf = self.quad_weights[idx] * values[idx];
                to_left += wf * (1.0 - s);
                to_right += wf * s;
            }
            if cell > 0 {
                b[cell - 1] += to_left;
            }
            if cell + 1 < n_cells {
                b[cell] += to_right;
            }
        }
        b
    }

    /// Weighted sum `Σ w_q a_q b_q` over the quadrature lattice.
    pub fn quad_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quad_weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    pub fn quad_norm(&self, a: &[f64]) -> f64 {
        self.quad_inner(a, a).max(0.0).sqrt()
    }

    pub fn inner_h(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.bilinear(a, b)
    }

    pub fn inner_v(&self, a: &[f64], b: &[f64]) -> f64 {
        self.stiffness.bilinear(a, b)
    }

    pub fn norm_h(&self, a: &[f64]) -> f64 {
        self.inner_h(a, a).max(0.0).sqrt()
    }

    pub fn norm_v(&self, a: &[f64]) -> f64 {
        self.inner_v(a, a).max(0.0).sqrt()
    }

    /// Solves `M c = b`.
    pub fn solve_mass(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.mass_factor.solve(b)
    }

    pub fn zero(self: &Arc<Self>) -> NodalFunction {
        NodalFunction {
            space: Arc::clone(self),
            coeffs: vec![0.0; self.dim()],
        }
    }

    pub fn function(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<NodalFunction> {
        NodalFunction::new(Arc::clone(self), coeffs)
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> NodalFunction {
        let coeffs = (1..=self.dim()).map(|i| f(self.grid.node(i))).collect();
        NodalFunction {
            space: Arc::clone(self),
            coeffs,
        }
    }

    /// `H`-orthogonal projection of a function given pointwise.
    pub fn project_fn(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> NodalFunction {
        let values: Vec<f64> = self.quad_points.iter().map(|&x| f(x)).collect();
        self.project_quad(&values)
            .expect("mass matrix is SPD and values have lattice length")
    }

    /// `H`-orthogonal projection of quadrature-point data.
    pub fn project_quad(self: &Arc<Self>, values: &[f64]) -> Result<NodalFunction> {
        if values.len() != self.n_quad() {
            return Err(Error::DimensionMismatch {
                expected: self.n_quad(),
                got: values.len(),
            });
        }
        let coeffs = self.solve_mass(&self.load_vector(values))?;
        Ok(NodalFunction {
            space: Arc::clone(self),
            coeffs,
        })
    }
}

/// Element of a [`FemSpace`], stored by interior nodal values.
#[derive(Debug, Clone)]
pub struct NodalFunction {
    space: Arc<FemSpace>,
    coeffs: Vec<f64>,
}

impl NodalFunction {
    pub fn new(space: Arc<FemSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &Arc<FemSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    fn check_same(&self, other: &NodalFunction) -> Result<()> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                got: other.coeffs.len(),
            });
        }
        if !self.space.grid.same_interval(&other.space.grid) {
            return Err(Error::SpaceMismatch("different intervals".into()));
        }
        Ok(())
    }

    pub fn inner_h(&self, other: &NodalFunction) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.space.inner_h(&self.coeffs, &other.coeffs))
    }

    pub fn inner_v(&self, other: &NodalFunction) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.space.inner_v(&self.coeffs, &other.coeffs))
    }

    pub fn norm_h(&self) -> f64 {
        self.space.norm_h(&self.coeffs)
    }

    pub fn norm_v(&self) -> f64 {
        self.space.norm_v(&self.coeffs)
    }

    /// Sup norm; attained at a node for piecewise-linear functions.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn sub(&self, other: &NodalFunction) -> Result<NodalFunction> {
        self.check_same(other)?;
        Ok(NodalFunction {
            space: Arc::clone(&self.space),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> NodalFunction {
        NodalFunction {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    pub fn eval_quad(&self) -> Vec<f64> {
        self.space.eval_quad(&self.coeffs)
    }

    pub fn eval_at(&self, x: f64) -> f64 {
        self.space.eval_at(&self.coeffs, x)
    }

    /// Exact representation in the nested space `fine`.
    pub fn prolong(&self, fine: &Arc<FemSpace>) -> Result<NodalFunction> {
        let coeffs = prolong_coeffs(&self.coeffs, self.space.grid(), fine.grid())?;
        Ok(NodalFunction {
            space: Arc::clone(fine),
            coeffs,
        })
    }

    /// `level,x_lo,x_hi,c_1,...,c_dim`.
    pub fn to_csv_line(&self) -> String {
        let g = self.space.grid();
        let mut s = format!("{},{},{}", g.level, fmt_f64(g.x_lo), fmt_f64(g.x_hi));
        for c in &self.coeffs {
            s.push(',');
            s.push_str(&fmt_f64(*c));
        }
        s
    }

    pub fn from_csv_line(line: &str) -> Result<NodalFunction> {
        let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::Parse(format!("nodal line too short: {line:?}")));
        }
        let level: u32 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad level {:?}", fields[0])))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))
        };
        let x_lo = num(fields[1])?;
        let x_hi = num(fields[2])?;
        let coeffs = fields[3..]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>>>()?;
        let space = FemSpace::new(x_lo, x_hi, level)?;
        NodalFunction::new(space, coeffs)
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One dyadic refinement: copy old nodes, average at new midpoints.
pub fn prolong_once(coarse: &[f64]) -> Vec<f64> {
    let n_cells = coarse.len() + 1;
    let at = |i: usize| {
        if i == 0 || i == n_cells {
            0.0
        } else {
            coarse[i - 1]
        }
    };
    let mut fine = Vec::with_capacity(2 * n_cells - 1);
    for j in 1..2 * n_cells {
        if j % 2 == 0 {
            fine.push(at(j / 2));
        } else {
            fine.push(0.5 * (at(j / 2) + at(j / 2 + 1)));
        }
    }
    fine
}

/// Transpose of [`prolong_once`]; maps fine load vectors to coarse ones.
pub fn restrict_once(fine: &[f64]) -> Vec<f64> {
    let n_fine_cells = fine.len() + 1;
    assert!(
        n_fine_cells % 2 == 0,
        "fine vector is not from a dyadic grid"
    );
    let n_cells = n_fine_cells / 2;
    (1..n_cells)
        .map(|i| fine[2 * i - 1] + 0.5 * (fine[2 * i - 2] + fine[2 * i]))
        .collect()
}

pub fn prolong_coeffs(coeffs: &[f64], from: &Grid1D, to: &Grid1D) -> Result<Vec<f64>> {
    if !to.refines(from) {
        return Err(Error::SpaceMismatch(format!(
            "cannot prolong level {} on [{}, {}] to level {} on [{}, {}]",
            from.level, from.x_lo, from.x_hi, to.level, to.x_lo, to.x_hi
        )));
    }
    let mut c = coeffs.to_vec();
    for _ in from.level..to.level {
        c = prolong_once(&c);
    }
    Ok(c)
}

/// Applies the transpose prolongation from `from` (fine) down to `to` (coarse).
pub fn restrict_load(b: &[f64], from: &Grid1D, to: &Grid1D) -> Result<Vec<f64>> {
    if !from.refines(to) {
        return Err(Error::SpaceMismatch(format!(
            "cannot restrict level {} to level {}",
            from.level, to.level
        )));
    }
    let mut c = b.to_vec();
    for _ in to.level..from.level {
        c = restrict_once(&c);
    }
    Ok(c)
}

/// `H`-orthogonal projection `P_N v` of a nodal function from any nested level.
///
/// Fine-to-coarse projection is exact: the load vector is `Pᵀ M_fine c`.
pub fn l2_project(space: &Arc<FemSpace>, v: &NodalFunction) -> Result<NodalFunction> {
    let from = v.space().grid();
    let to = space.grid();
    if !from.same_interval(to) {
        return Err(Error::SpaceMismatch("different intervals".into()));
    }
    if from.level <= to.level {
        return v.prolong(space);
    }
    let fine_load = v.space().mass().mul_vec(v.coeffs());
    let load = restrict_load(&fine_load, from, to)?;
    let coeffs = space.solve_mass(&load)?;
    NodalFunction::new(Arc::clone(space), coeffs)
}

/// Ratios `‖v‖_H / ‖v‖_V` and `‖v‖_∞ / ‖v‖_V`, or `None` for (near) zero `v`.
pub fn embedding_ratios(v: &NodalFunction) -> Option<(f64, f64)> {
    let nv = v.norm_v();
    if nv < 1e-8 {
        return None;
    }
    Some((v.norm_h() / nv, v.norm_inf() / nv))
}

/// Sampled lower estimates of the embedding constants `c_VH` and `C_∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingEstimate {
    pub c_vh: f64,
    pub c_inf: f64,
}

/// Running maximum of [`embedding_ratios`] over `n_samples` random functions.
pub fn estimate_embedding_constants(
    space: &Arc<FemSpace>,
    n_samples: usize,
    seed: u64,
) -> Result<EmbeddingEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let mut est = EmbeddingEstimate {
        c_vh: 0.0,
        c_inf: 0.0,
    };
    for i in 0..n_samples {
        let mut rng = rng_for(seed, i as u64);
        let v = space.function(random_coeffs(space, &mut rng, 1.0))?;
        if let Some((r_h, r_inf)) = embedding_ratios(&v) {
            est.c_vh = est.c_vh.max(r_h);
            est.c_inf = est.c_inf.max(r_inf);
        }
    }
    Ok(est)
}

/// Observed `max ‖P_N v‖_V / ‖v‖_V` per level, over random functions drawn on
/// a space two levels finer than the finest requested level.
pub fn estimate_projection_stability(
    x_lo: f64,
    x_hi: f64,
    levels: &[u32],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(u32, f64)>> {
    let finest = *levels
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("levels must be nonempty".into()))?;
    let fine = FemSpace::new(x_lo, x_hi, finest + 2)?;
    let coarse: Vec<Arc<FemSpace>> = levels
        .iter()
        .map(|&l| FemSpace::new(x_lo, x_hi, l))
        .collect::<Result<_>>()?;
    let mut maxima = vec![0.0f64; levels.len()];
    for i in 0..n_samples {
        let mut rng = rng_for(seed, i as u64);
        // Mix in functions that already live on a coarse level.
        let v = if rng.gen_bool(0.1) {
            let k = rng.gen_range(0..coarse.len());
            let c = random_coeffs(&coarse[k], &mut rng, 1.0);
            coarse[k].function(c)?.prolong(&fine)?
        } else {
            fine.function(random_coeffs(&fine, &mut rng, 1.0))?
        };
        let nv = v.norm_v();
        if nv < 1e-8 {
            continue;
        }
        for (space, m) in coarse.iter().zip(maxima.iter_mut()) {
            let p = l2_project(space, &v)?;
            *m = m.max(p.norm_v() / nv);
        }
    }
    Ok(levels.iter().copied().zip(maxima).collect())
}
