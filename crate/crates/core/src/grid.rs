//! Uniform grids over `B₁′ ⊂ R^{n-1}` and discrete operators on node fields.
//!
//! Nodes sit at `x' = h·k` for integer multi-indices `k ∈ [−K, K]^{n-1}`, so
//! the slice `{x_{n-1} = 0}` is always a node layer. `K` leaves a collar of
//! width at least `0.1` (and at least one node) around the unit ball; collar
//! nodes carry Dirichlet data and never move during a solve.
//!
//! The mean-curvature operator is the negative variational derivative of the
//! discrete area
//!
//! ```text
//! A_h(f) = h^d / 2^d · Σ_cells Σ_corners √(1 + |g_c|²)
//! ```
//!
//! where `g_c` collects the one-sided differences along the cell edges that
//! leave corner `c`. Each node's value therefore enters through fluxes across
//! the faces of its cells, the descent direction of `A_h` is exactly `H_h`,
//! and linearising at zero slope gives the standard `(2d+1)`-point Laplacian.

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::math::{ceil, round, sqrt};

/// Largest supported graph dimension `d = n − 1`.
pub const MAX_DIM: usize = 3;

/// Which nodes are unknowns; all other nodes hold boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Nodes with `|x'| < 1`.
    UnitBall,
    /// Nodes with `|k_j| < half_width_nodes` on every axis.
    Cube { half_width_nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
    per_unit: usize,
    half: usize,
    domain: Domain,
}

impl GridSpec {
    /// Grid over the unit ball of `R^{n-1}` with spacing `h`; `1/h` must be an
    /// integer of at least 8.
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if !(2..=MAX_DIM + 1).contains(&n) {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "grids cover n - 1 in {1, 2, 3}",
            });
        }
        if !(h > 0.0) || !h.is_finite() {
            bail!(Parameter, "spacing must be positive and finite, got {h}");
        }
        let inv = 1.0 / h;
        let per_unit = round(inv);
        if (inv - per_unit).abs() > 1e-9 * inv {
            bail!(Parameter, "1/h must be an integer so the slice is grid aligned, got h = {h}");
        }
        let per_unit = per_unit as usize;
        if per_unit < 8 {
            bail!(Parameter, "1/h must be at least 8, got {per_unit}");
        }
        let collar = (ceil(0.1 * per_unit as f64 - 1e-9) as usize).max(1);
        Ok(GridSpec {
            n,
            per_unit,
            half: per_unit + collar,
            domain: Domain::UnitBall,
        })
    }

    /// Replaces the unknown region.
    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if let Domain::Cube { half_width_nodes } = domain {
            if half_width_nodes < 2 || half_width_nodes > self.half {
                bail!(
                    Parameter,
                    "cube half width {half_width_nodes} must lie in [2, {}]",
                    self.half
                );
            }
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Dimension `d = n − 1` of the graph domain.
    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.per_unit as f64
    }

    pub fn per_unit(&self) -> usize {
        self.per_unit
    }

    pub fn half_nodes(&self) -> usize {
        self.half
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Nodes per axis.
    pub fn side(&self) -> usize {
        2 * self.half + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Half-width `K h` of the bounding box.
    pub fn extent(&self) -> f64 {
        self.half as f64 * self.spacing()
    }

    /// Linear stride of `axis` (row-major, last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.side().pow((self.dim() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, idx: usize) -> [i64; MAX_DIM] {
        let mut k = [0i64; MAX_DIM];
        let side = self.side();
        let mut rem = idx;
        for axis in (0..self.dim()).rev() {
            k[axis] = (rem % side) as i64 - self.half as i64;
            rem /= side;
        }
        k
    }

    pub fn index(&self, k: &[i64]) -> Option<usize> {
        let half = self.half as i64;
        let mut idx = 0usize;
        for axis in 0..self.dim() {
            let kk = k[axis];
            if kk < -half || kk > half {
                return None;
            }
            idx = idx * self.side() + (kk + half) as usize;
        }
        Some(idx)
    }

    /// Coordinates of node `idx`; unused trailing entries are zero.
    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let k = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = k[axis] as f64 * h;
        }
        x
    }

    /// Node nearest to `x'`, if inside the box.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut k = [0i64; MAX_DIM];
        for axis in 0..self.dim() {
            k[axis] = round(x[axis] * self.per_unit as f64) as i64;
        }
        self.index(&k)
    }

    /// Whether node `idx` is an unknown of the solve.
    pub fn is_unknown(&self, idx: usize) -> bool {
        let k = self.multi_index(idx);
        match self.domain {
            Domain::UnitBall => {
                let r2: i64 = k[..self.dim()].iter().map(|v| v * v).sum();
                let n2 = (self.per_unit * self.per_unit) as i64;
                r2 < n2
            }
            Domain::Cube { half_width_nodes } => k[..self.dim()]
                .iter()
                .all(|v| v.unsigned_abs() < half_width_nodes as u64),
        }
    }

    /// Whether node `idx` lies on the slice `{x_{n-1} = 0}`.
    pub fn is_slice(&self, idx: usize) -> bool {
        self.multi_index(idx)[self.dim() - 1] == 0
    }

    /// Whether every axis neighbour of `idx` exists.
    pub fn has_halo(&self, idx: usize) -> bool {
        let half = self.half as i64;
        self.multi_index(idx)[..self.dim()]
            .iter()
            .all(|v| v.abs() < half)
    }

    /// Neighbour of `idx` one step along `axis` in direction `dir = ±1`.
    pub fn neighbor(&self, idx: usize, axis: usize, dir: i64) -> Option<usize> {
        let mut k = self.multi_index(idx);
        k[axis] += dir;
        self.index(&k)
    }

    pub fn node_set<F: Fn(usize) -> bool>(&self, pred: F) -> NodeSet {
        NodeSet {
            members: (0..self.len()).map(pred).collect(),
        }
    }

    /// Nodes whose coordinates satisfy `pred`.
    pub fn nodes_where<F: Fn(&[f64]) -> bool>(&self, pred: F) -> NodeSet {
        let d = self.dim();
        self.node_set(|i| pred(&self.coords(i)[..d]))
    }

    pub fn unknowns(&self) -> NodeSet {
        self.node_set(|i| self.is_unknown(i))
    }

    /// Unknown nodes on the slice.
    pub fn slice_unknowns(&self) -> NodeSet {
        self.node_set(|i| self.is_unknown(i) && self.is_slice(i))
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            bail!(Grid, "fields live on different grids");
        }
        Ok(())
    }
}

/// A subset of grid nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    members: Vec<bool>,
}

impl NodeSet {
    pub fn contains(&self, idx: usize) -> bool {
        self.members.get(idx).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, m)| if *m { Some(i) } else { None })
    }

    pub fn intersect(&self, other: &NodeSet) -> NodeSet {
        NodeSet {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }
}

/// Real values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: alloc::vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(Grid, "{} values for a grid of {} nodes", values.len(), grid.len());
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            bail!(Input, "non-finite value at node {i}");
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: GridSpec, f: F) -> Self {
        let d = grid.dim();
        Field {
            grid,
            values: (0..grid.len()).map(|i| f(&grid.coords(i)[..d])).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Max-norm distance to `other` over `set` (or every node).
    pub fn max_abs_diff(&self, other: &Field, set: Option<&NodeSet>) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok((0..self.grid.len())
            .filter(|i| set.is_none_or(|s| s.contains(*i)))
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max))
    }

    /// Bilinear (multilinear) interpolation at `x'`; `None` outside the box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let d = self.grid.dim();
        let h = self.grid.spacing();
        let half = self.grid.half_nodes() as i64;
        let mut base = [0i64; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for axis in 0..d {
            let t = x[axis] / h;
            if !t.is_finite() || t < -(half as f64) - 1e-9 || t > half as f64 + 1e-9 {
                return None;
            }
            let mut b = crate::math::floor(t) as i64;
            b = b.clamp(-half, half - 1);
            base[axis] = b;
            frac[axis] = (t - b as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut k = base;
            let mut w = 1.0;
            for axis in 0..d {
                if corner >> axis & 1 == 1 {
                    k[axis] += 1;
                    w *= frac[axis];
                } else {
                    w *= 1.0 - frac[axis];
                }
            }
            if w != 0.0 {
                acc += w * self.values[self.grid.index(&k)?];
            }
        }
        Some(acc)
    }
}

/// Values on the `3^d` patch around a node, indexed base-3 by offset + 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Patch {
    pub(crate) v: [f64; 27],
    pub(crate) d: usize,
}

impl Patch {
    #[inline]
    fn slot(&self, off: [i64; MAX_DIM]) -> usize {
        let mut s = 0usize;
        for axis in 0..self.d {
            s = s * 3 + (off[axis] + 1) as usize;
        }
        s
    }

    #[inline]
    pub(crate) fn at(&self, off: [i64; MAX_DIM]) -> f64 {
        self.v[self.slot(off)]
    }

    pub(crate) fn gather<F: FnMut([i64; MAX_DIM]) -> f64>(d: usize, mut f: F) -> Patch {
        let mut p = Patch { v: [0.0; 27], d };
        let count = 3usize.pow(d as u32);
        for s in 0..count {
            let mut off = [0i64; MAX_DIM];
            let mut rem = s;
            for axis in (0..d).rev() {
                off[axis] = (rem % 3) as i64 - 1;
                rem /= 3;
            }
            p.v[s] = f(off);
        }
        p
    }

    fn from_field(f: &Field, idx: usize) -> Result<Patch> {
        let g = f.grid();
        if !g.has_halo(idx) {
            bail!(Grid, "node {idx} lacks a one-node halo");
        }
        let k = g.multi_index(idx);
        let d = g.dim();
        Ok(Patch::gather(d, |off| {
            let mut kk = k;
            for axis in 0..d {
                kk[axis] += off[axis];
            }
            f.values[g.index(&kk).expect("halo checked")]
        }))
    }
}

#[inline]
fn unit(axis: usize, s: i64) -> [i64; MAX_DIM] {
    let mut o = [0i64; MAX_DIM];
    o[axis] = s;
    o
}

pub(crate) fn laplacian_patch(p: &Patch, h: f64) -> f64 {
    let c = p.at([0; MAX_DIM]);
    let mut acc = 0.0;
    for axis in 0..p.d {
        acc += p.at(unit(axis, 1)) + p.at(unit(axis, -1)) - 2.0 * c;
    }
    acc / (h * h)
}

/// `H_h` at the patch centre from the corner-quadrature area.
pub(crate) fn curvature_patch(p: &Patch, h: f64) -> f64 {
    let d = p.d;
    let mut grad = 0.0;
    // Cells around the centre: lower corner at -b for b ∈ {0,1}^d; the centre
    // is corner `b` of that cell.
    for b in 0..(1usize << d) {
        let lower = {
            let mut o = [0i64; MAX_DIM];
            for axis in 0..d {
                o[axis] = -((b >> axis & 1) as i64);
            }
            o
        };
        let node = |c: usize| {
            let mut o = lower;
            for axis in 0..d {
                o[axis] += (c >> axis & 1) as i64;
            }
            p.at(o)
        };
        let corner_grad = |c: usize, g: &mut [f64; MAX_DIM]| -> f64 {
            let fc = node(c);
            let mut s2 = 0.0;
            for axis in 0..d {
                let sigma = if c >> axis & 1 == 0 { 1.0 } else { -1.0 };
                g[axis] = sigma * (node(c ^ (1 << axis)) - fc) / h;
                s2 += g[axis] * g[axis];
            }
            sqrt(1.0 + s2)
        };
        let mut g = [0.0; MAX_DIM];
        let j = corner_grad(b, &mut g);
        for axis in 0..d {
            let sigma = if b >> axis & 1 == 0 { 1.0 } else { -1.0 };
            grad -= g[axis] / j * sigma / h;
        }
        for m in 0..d {
            let c = b ^ (1 << m);
            let j = corner_grad(c, &mut g);
            let sigma = if c >> m & 1 == 0 { 1.0 } else { -1.0 };
            grad += g[m] / j * sigma / h;
        }
    }
    -grad / (1u64 << d) as f64
}

/// Centred-difference `M(D²f, ∇f) = (1+|∇f|²)Δf − ∇fᵀ D²f ∇f`.
pub(crate) fn m_patch(p: &Patch, h: f64) -> f64 {
    let d = p.d;
    let c = p.at([0; MAX_DIM]);
    let mut grad = [0.0; MAX_DIM];
    let mut hess = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..d {
        grad[i] = (p.at(unit(i, 1)) - p.at(unit(i, -1))) / (2.0 * h);
        hess[i][i] = (p.at(unit(i, 1)) + p.at(unit(i, -1)) - 2.0 * c) / (h * h);
        for j in i + 1..d {
            let mut pp = [0i64; MAX_DIM];
            pp[i] = 1;
            pp[j] = 1;
            let mut pm = pp;
            pm[j] = -1;
            let mut mp = pp;
            mp[i] = -1;
            let mut mm = pm;
            mm[i] = -1;
            let v = (p.at(pp) - p.at(pm) - p.at(mp) + p.at(mm)) / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let g2: f64 = grad[..d].iter().map(|v| v * v).sum();
    let lap: f64 = (0..d).map(|i| hess[i][i]).sum();
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += grad[i] * hess[i][j] * grad[j];
        }
    }
    (1.0 + g2) * lap - quad
}

fn apply_everywhere(f: &Field, op: fn(&Patch, f64) -> f64) -> Field {
    let g = *f.grid();
    let h = g.spacing();
    let mut out = Field::zeros(g);
    for idx in 0..g.len() {
        if g.has_halo(idx) {
            let p = Patch::from_field(f, idx).expect("halo checked");
            out.values[idx] = op(&p, h);
        }
    }
    out
}

/// Centred `(2d+1)`-point Laplacian; the outer ring (no halo) is left at 0.
pub fn discrete_laplacian(f: &Field) -> Field {
    apply_everywhere(f, laplacian_patch)
}

/// Laplacian at a single node.
pub fn laplacian_at(f: &Field, idx: usize) -> Result<f64> {
    Ok(laplacian_patch(&Patch::from_field(f, idx)?, f.grid().spacing()))
}

/// Flux-form mean curvature `div(∇f/√(1+|∇f|²))`; outer ring left at 0.
pub fn mean_curvature(f: &Field) -> Field {
    apply_everywhere(f, curvature_patch)
}

pub fn mean_curvature_at(f: &Field, idx: usize) -> Result<f64> {
    Ok(curvature_patch(&Patch::from_field(f, idx)?, f.grid().spacing()))
}

/// The minimal-surface operator `M`; outer ring left at 0.
pub fn m_operator(f: &Field) -> Field {
    apply_everywhere(f, m_patch)
}

pub fn m_operator_at(f: &Field, idx: usize) -> Result<f64> {
    Ok(m_patch(&Patch::from_field(f, idx)?, f.grid().spacing()))
}

/// Lower corners of every cell of the grid.
pub(crate) fn cells(g: &GridSpec) -> impl Iterator<Item = usize> + '_ {
    let half = g.half_nodes() as i64;
    (0..g.len()).filter(move |&i| g.multi_index(i)[..g.dim()].iter().all(|k| *k < half))
}

/// Offsets (in linear index) of the `2^d` corners of a cell.
pub(crate) fn corner_offsets(g: &GridSpec) -> [usize; 8] {
    let mut offs = [0usize; 8];
    for (c, o) in offs.iter_mut().enumerate().take(1 << g.dim()) {
        *o = (0..g.dim())
            .filter(|axis| c >> axis & 1 == 1)
            .map(|axis| g.stride(axis))
            .sum();
    }
    offs
}

/// Mean of `√(1+|g_c|²)` over the corners of the cell with lower corner `base`.
pub(crate) fn cell_area_density(vals: &[f64], base: usize, offs: &[usize; 8], d: usize, h: f64) -> f64 {
    let mut acc = 0.0;
    for c in 0..(1usize << d) {
        let fc = vals[base + offs[c]];
        let mut s2 = 0.0;
        for axis in 0..d {
            let diff = (vals[base + offs[c ^ (1 << axis)]] - fc) / h;
            s2 += diff * diff;
        }
        acc += sqrt(1.0 + s2);
    }
    acc / (1u64 << d) as f64
}

/// Area of the graph over the cells whose corners all belong to `region`.
pub fn area_energy(f: &Field, region: &NodeSet) -> f64 {
    let g = f.grid();
    let d = g.dim();
    let h = g.spacing();
    let offs = corner_offsets(g);
    let cell_measure = h.powi(d as i32);
    cells(g)
        .filter(|&base| (0..(1usize << d)).all(|c| region.contains(base + offs[c])))
        .map(|base| cell_measure * cell_area_density(f.values(), base, &offs, d, h))
        .sum()
}

/// `H^{n-1}` of the graph of `f` inside the ball `B_r(center)`, `center ∈ R^n`.
///
/// Exact for `n = 2` (segment clipping of the piecewise-linear interpolant).
/// For `n = 3`, cells wholly inside the ball use the corner quadrature and
/// cells cut by the sphere are subsampled with the bilinear interpolant.
pub fn subgraph_perimeter_in_ball(f: &Field, center: &[f64], r: f64) -> Result<f64> {
    let g = f.grid();
    let d = g.dim();
    if center.len() != d + 1 {
        bail!(Input, "center needs {} coordinates, got {}", d + 1, center.len());
    }
    if !(r > 0.0) {
        bail!(Parameter, "radius must be positive, got {r}");
    }
    let ext = g.extent();
    for axis in 0..d {
        if center[axis] - r < -ext - 1e-12 || center[axis] + r > ext + 1e-12 {
            bail!(Range, "ball of radius {r} leaves the sampled box [-{ext}, {ext}]");
        }
    }
    match d {
        1 => Ok(perimeter_1d(f, center, r)),
        2 => Ok(perimeter_2d(f, center, r)),
        _ => Err(Error::UnsupportedDimension {
            n: g.ambient_dim(),
            reason: "graph perimeter is implemented for n in {2, 3}",
        }),
    }
}

fn perimeter_1d(f: &Field, c: &[f64], r: f64) -> f64 {
    let g = f.grid();
    let h = g.spacing();
    let mut total = 0.0;
    for i in 0..g.len() - 1 {
        let x0 = g.coords(i)[0];
        let p0 = [x0 - c[0], f.values[i] - c[1]];
        let p1 = [x0 + h - c[0], f.values[i + 1] - c[1]];
        total += segment_length_in_disk(p0, p1, r);
    }
    total
}

/// Length of the segment `p0 p1` inside the disk of radius `r` at the origin.
pub(crate) fn segment_length_in_disk(p0: [f64; 2], p1: [f64; 2], r: f64) -> f64 {
    let dx = [p1[0] - p0[0], p1[1] - p0[1]];
    let a = dx[0] * dx[0] + dx[1] * dx[1];
    if a == 0.0 {
        return 0.0;
    }
    let b = 2.0 * (p0[0] * dx[0] + p0[1] * dx[1]);
    let cc = p0[0] * p0[0] + p0[1] * p0[1] - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = sqrt(disc);
    let t0 = ((-b - sq) / (2.0 * a)).max(0.0);
    let t1 = ((-b + sq) / (2.0 * a)).min(1.0);
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * sqrt(a)
    }
}

fn perimeter_2d(f: &Field, c: &[f64], r: f64) -> f64 {
    let g = f.grid();
    let h = g.spacing();
    let offs = corner_offsets(g);
    let r2 = r * r;
    let sub = ((128.0 * h / r) as usize).max(4);
    let mut total = 0.0;
    let v = f.values();
    for base in cells(g) {
        let x = g.coords(base);
        let (xlo, ylo) = (x[0], x[1]);
        let (xhi, yhi) = (xlo + h, ylo + h);
        // Cheap rejection on the projected square.
        let dx = (c[0] - c[0].clamp(xlo, xhi)).abs();
        let dy = (c[1] - c[1].clamp(ylo, yhi)).abs();
        if dx * dx + dy * dy > r2 {
            continue;
        }
        let f00 = v[base];
        let f10 = v[base + offs[1]];
        let f01 = v[base + offs[2]];
        let f11 = v[base + offs[3]];
        let fmin = f00.min(f10).min(f01).min(f11);
        let fmax = f00.max(f10).max(f01).max(f11);
        let dz_min = if c[2] < fmin {
            fmin - c[2]
        } else if c[2] > fmax {
            c[2] - fmax
        } else {
            0.0
        };
        if dx * dx + dy * dy + dz_min * dz_min > r2 {
            continue;
        }
        let far_x = (c[0] - xlo).abs().max((c[0] - xhi).abs());
        let far_y = (c[1] - ylo).abs().max((c[1] - yhi).abs());
        let far_z = (fmin - c[2]).abs().max((fmax - c[2]).abs());
        if far_x * far_x + far_y * far_y + far_z * far_z <= r2 {
            total += h * h * cell_area_density(v, base, &offs, 2, h);
            continue;
        }
        let w = 1.0 / sub as f64;
        for i in 0..sub {
            let s = (i as f64 + 0.5) * w;
            for j in 0..sub {
                let t = (j as f64 + 0.5) * w;
                let z = f00 * (1.0 - s) * (1.0 - t) + f10 * s * (1.0 - t) + f01 * (1.0 - s) * t + f11 * s * t;
                let px = xlo + s * h - c[0];
                let py = ylo + t * h - c[1];
                let pz = z - c[2];
                if px * px + py * py + pz * pz <= r2 {
                    let gx = ((f10 - f00) * (1.0 - t) + (f11 - f01) * t) / h;
                    let gy = ((f01 - f00) * (1.0 - s) + (f11 - f10) * s) / h;
                    total += h * h * w * w * sqrt(1.0 + gx * gx + gy * gy);
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{tan, PI};

    fn grid(n: usize, inv_h: usize) -> GridSpec {
        GridSpec::new(n, 1.0 / inv_h as f64).unwrap()
    }

    #[test]
    fn construction_rules() {
        assert!(GridSpec::new(3, 0.3).is_err());
        assert!(GridSpec::new(3, 1.0 / 7.0).is_err());
        assert!(GridSpec::new(5, 1.0 / 8.0).is_err());
        assert!(GridSpec::new(1, 1.0 / 8.0).is_err());
        let g = grid(3, 8);
        assert_eq!(g.half_nodes(), 9);
        let g = grid(3, 128);
        assert!(g.extent() >= 1.1);
        assert!(g.is_slice(g.nearest(&[0.5, 0.0]).unwrap()));
        assert!(g.is_unknown(g.nearest(&[0.0, 0.0]).unwrap()));
        assert!(!g.is_unknown(g.nearest(&[1.0, 0.0]).unwrap()));
    }

    #[test]
    fn index_roundtrip() {
        let g = grid(4, 8);
        for idx in [0, 17, 400, g.len() - 1] {
            let k = g.multi_index(idx);
            assert_eq!(g.index(&k), Some(idx));
        }
    }

    #[test]
    fn laplacian_examples() {
        let g = grid(3, 16);
        let affine = Field::from_fn(g, |x| 1.0 + 2.0 * x[0] - 3.0 * x[1]);
        let harmonic = Field::from_fn(g, |x| x[0] * x[0] - x[1] * x[1]);
        let quad = Field::from_fn(g, |x| x[0] * x[0] + x[1] * x[1]);
        let la = discrete_laplacian(&affine);
        let lh = discrete_laplacian(&harmonic);
        let lq = discrete_laplacian(&quad);
        for idx in 0..g.len() {
            if g.has_halo(idx) {
                assert!(la.get(idx).abs() < 1e-10);
                assert!(lh.get(idx).abs() < 1e-10);
                assert!((lq.get(idx) - 4.0).abs() < 1e-10);
            }
        }
        assert!(laplacian_at(&quad, 0).is_err());
    }

    #[test]
    fn curvature_of_affine_is_zero() {
        for n in [2, 3, 4] {
            let g = grid(n, 8);
            let f = Field::from_fn(g, |x| 0.3 - 0.7 * x[0] + 0.2 * x[x.len() - 1]);
            let hf = mean_curvature(&f);
            let mf = m_operator(&f);
            assert!(hf.values().iter().all(|v| v.abs() < 1e-12));
            assert!(mf.values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn curvature_linearises_to_laplacian() {
        let g = grid(3, 16);
        let f = Field::from_fn(g, |x| 1e-6 * (x[0] * x[0] * x[1] + 3.0 * x[1] * x[1]));
        let hf = mean_curvature(&f);
        let lf = discrete_laplacian(&f);
        for idx in 0..g.len() {
            if g.has_halo(idx) {
                assert!((hf.get(idx) - lf.get(idx)).abs() < 1e-15, "{idx}");
            }
        }
    }

    fn phi(beta: f64, n: usize) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| {
            let d = x.len();
            let r2: f64 = x[..d - 1].iter().map(|v| v * v).sum();
            beta * (r2 - 2.0 * (n as f64 - 2.0) * x[d - 1] * x[d - 1])
        }
    }

    #[test]
    fn curvature_of_barrier_at_origin() {
        // Δφ_β = −2(n−2)β and ∇φ_β(0) = 0.
        for (n, beta) in [(3usize, 0.05), (4, 0.02)] {
            let g = grid(n, 32);
            let f = Field::from_fn(g, phi(beta, n));
            let o = g.nearest(&[0.0; 3]).unwrap();
            let expect = -2.0 * (n as f64 - 2.0) * beta;
            let h2 = g.spacing().powi(2);
            assert!((mean_curvature_at(&f, o).unwrap() - expect).abs() < 10.0 * h2);
            assert!((m_operator_at(&f, o).unwrap() - expect).abs() < 10.0 * h2);
        }
    }

    #[test]
    fn curvature_of_hemisphere() {
        // div(-x') = -2 on the upper hemisphere over B_{1/2}.
        let mut errs = [0.0f64; 2];
        for (k, inv_h) in [32usize, 64].into_iter().enumerate() {
            let g = grid(3, inv_h);
            let f = Field::from_fn(g, |x| sqrt((1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)));
            for idx in 0..g.len() {
                let x = g.coords(idx);
                if x[0] * x[0] + x[1] * x[1] <= 0.25 {
                    errs[k] = errs[k].max((mean_curvature_at(&f, idx).unwrap() + 2.0).abs());
                }
            }
        }
        assert!(errs[0] < 5e-3, "{errs:?}");
        // second-order consistency
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn m_equals_laplacian_where_gradient_vanishes() {
        let g = grid(3, 16);
        let f = Field::from_fn(g, |x| x[0] * x[0] + 0.5 * x[1] * x[1] + x[0] * x[1]);
        let o = g.nearest(&[0.0, 0.0]).unwrap();
        assert!((m_operator_at(&f, o).unwrap() - laplacian_at(&f, o).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn m_and_h_agree_in_sign() {
        let g = grid(3, 32);
        let f = Field::from_fn(g, |x| 0.4 * libm::sin(2.0 * x[0]) * libm::cos(1.5 * x[1]) + 0.2 * x[0] * x[1] * x[1]);
        let hf = mean_curvature(&f);
        let mf = m_operator(&f);
        let thresh = 10.0 * g.spacing().powi(2);
        let disagreements = (0..g.len())
            .filter(|&i| hf.get(i).abs() > thresh && mf.get(i).abs() > thresh)
            .filter(|&i| hf.get(i).signum() != mf.get(i).signum())
            .count();
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn area_examples() {
        let g = grid(3, 16);
        let square = g.nodes_where(|x| (0.0..=1.0).contains(&x[0]) && (0.0..=1.0).contains(&x[1]));
        let flat = Field::from_fn(g, |_| 0.7);
        assert!((area_energy(&flat, &square) - 1.0).abs() < 1e-12);
        let a = 0.6;
        let tilted = Field::from_fn(g, |x| a * x[0]);
        assert!((area_energy(&tilted, &square) - sqrt(1.0 + a * a)).abs() < 1e-12);

        // Wedge graph over the disk: two planar pieces of total area π / cos θ.
        let theta: f64 = 0.2;
        let mut errs = [0.0; 2];
        for (k, inv_h) in [32usize, 64].into_iter().enumerate() {
            let g = grid(3, inv_h);
            let w = Field::from_fn(g, |x| -tan(theta) * x[1].abs());
            let ball = g.nodes_where(|x| x[0] * x[0] + x[1] * x[1] <= 1.0);
            errs[k] = (area_energy(&w, &ball) - PI / libm::cos(theta)).abs();
        }
        assert!(errs[0] < 8.0 / 32.0 && errs[1] < 8.0 / 64.0, "{errs:?}");
    }

    #[test]
    fn area_dominates_measure() {
        let g = grid(3, 16);
        let square = g.nodes_where(|x| x[0].abs() <= 0.5 && x[1].abs() <= 0.5);
        let f = Field::from_fn(g, |x| libm::sin(3.0 * x[0]) * x[1]);
        assert!(area_energy(&f, &square) > 1.0);
    }

    #[test]
    fn perimeter_examples() {
        let g3 = grid(3, 32);
        let zero3 = Field::zeros(g3);
        for r in [0.2, 0.5, 0.9] {
            let p = subgraph_perimeter_in_ball(&zero3, &[0.0, 0.0, 0.0], r).unwrap();
            assert!((p - PI * r * r).abs() < 0.05 * r * g3.spacing() * 10.0, "{r}: {p}");
        }
        let g2 = grid(2, 32);
        let zero2 = Field::zeros(g2);
        let p = subgraph_perimeter_in_ball(&zero2, &[0.0, 0.0], 0.7).unwrap();
        assert!((p - 1.4).abs() < 1e-12);
        let w = Field::from_fn(g2, |x| -tan(0.4) * x[0].abs());
        for r in [0.1, 0.33, 0.8] {
            let p = subgraph_perimeter_in_ball(&w, &[0.0, 0.0], r).unwrap();
            assert!((p - 2.0 * r).abs() < 1e-12);
        }
        assert!(subgraph_perimeter_in_ball(&zero2, &[0.9, 0.0], 0.5).is_err());
    }

    #[test]
    fn perimeter_monotone_in_radius() {
        let g = grid(3, 32);
        let f = Field::from_fn(g, |x| 0.3 * x[0] * x[1] - 0.1 * x[1].abs());
        let mut prev = 0.0;
        for k in 1..=20 {
            let p = subgraph_perimeter_in_ball(&f, &[0.0, 0.0, 0.0], k as f64 * 0.05).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn interpolation_is_exact_on_multilinear() {
        let g = grid(3, 8);
        let f = Field::from_fn(g, |x| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[0] * x[1]);
        let v = f.interpolate(&[0.3, -0.41]).unwrap();
        assert!((v - (1.0 + 0.3 + 0.82 - 0.5 * 0.3 * 0.41)).abs() < 1e-12);
        assert!(f.interpolate(&[3.0, 0.0]).is_none());
    }
}
