//! The quadratic barrier `φ_β(x') = β(|x''|² − 2(n−2)x_{n-1}²)` and the
//! flat / full-contact dichotomy for solved wedge instances.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::geometry::Wedge;
use crate::grid::{curvature_patch, Field, GridSpec, Patch, MAX_DIM};
use crate::math::{pow, tan, FRAC_PI_2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    beta: f64,
    n: usize,
}

impl BarrierSpec {
    /// Needs `n ∈ {3, 4}` and `0 < β < 1/(10(n−2))`.
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n == 2 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "the barrier needs a nontrivial x'' and vanishes identically for n = 2",
            });
        }
        if !(3..=MAX_DIM + 1).contains(&n) {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "barriers are evaluated for n in {3, 4}",
            });
        }
        let cap = beta_cap(n);
        if !(beta > 0.0 && beta < cap) {
            bail!(Parameter, "beta must lie in (0, {cap}) for n = {n}, got {beta}");
        }
        Ok(BarrierSpec { beta, n })
    }

    /// Skips the range check on `β`, for probing the barrier at or beyond
    /// the edge of the admissible interval. The dimension is still checked.
    pub fn new_unchecked(n: usize, beta: f64) -> Result<Self> {
        BarrierSpec::new(n, beta_cap(n).min(0.5) * 0.5)?;
        if !beta.is_finite() {
            bail!(Parameter, "beta must be finite");
        }
        Ok(BarrierSpec { beta, n })
    }

    /// Whether `β` lies in the admissible open interval.
    pub fn admissible(&self) -> bool {
        self.beta > 0.0 && self.beta < beta_cap(self.n)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `φ_β` at `x' ∈ R^{n-1}`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.n - 1;
        let r2: f64 = x[..d - 1].iter().map(|v| v * v).sum();
        let y = x[d - 1];
        self.beta * (r2 - 2.0 * (self.n as f64 - 2.0) * y * y)
    }

    /// Certificate threshold `−(n−2)β`.
    pub fn threshold(&self) -> f64 {
        -(self.n as f64 - 2.0) * self.beta
    }

    /// Closed-form upper bound `β(2(n−2) − 4(n−2)λ)` on the continuum `Hφ_β` over `B₁'`,
    /// with `λ = (1 + 16β²(n−2)²)^{-3/2}`.
    pub fn analytic_bound(&self) -> f64 {
        let m = self.n as f64 - 2.0;
        let lambda = pow(1.0 + 16.0 * self.beta * self.beta * m * m, -1.5);
        self.beta * (2.0 * m - 4.0 * m * lambda)
    }
}

/// Supremum of admissible `β` for dimension `n ≥ 3`.
pub fn beta_cap(n: usize) -> f64 {
    1.0 / (10.0 * (n as f64 - 2.0))
}

pub fn barrier_phi(s: &BarrierSpec, grid: GridSpec) -> Result<Field> {
    check_dim(s, &grid)?;
    Ok(Field::from_fn(grid, |x| s.value(x)))
}

fn check_dim(s: &BarrierSpec, grid: &GridSpec) -> Result<()> {
    if grid.ambient_dim() != s.n {
        bail!(
            Grid,
            "barrier for n = {} evaluated on a grid for n = {}",
            s.n,
            grid.ambient_dim()
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierCertificate {
    /// Grid maximum of `H_h φ_β` over nodes with `|x'| ≤ 1`.
    pub max_h: f64,
    pub threshold: f64,
    pub pass: bool,
    pub nodes: usize,
}

/// Evaluates `H_h φ_β` node by node from the closed form, so no field is
/// stored; every node of the closed unit ball is covered.
///
/// `φ_β` is even in every coordinate and symmetric in the `x''` coordinates,
/// and the corner-quadrature stencil is invariant under the reflections and
/// axis permutations of the grid, so only nodes with `k_1 ≥ … ≥ k_{n-2} ≥ 0`
/// and `k_{n-1} ≥ 0` are evaluated.
pub fn verify_supersolution(s: &BarrierSpec, grid: GridSpec) -> Result<BarrierCertificate> {
    scan(s, grid, true)
}

fn scan(s: &BarrierSpec, grid: GridSpec, reduced: bool) -> Result<BarrierCertificate> {
    check_dim(s, &grid)?;
    let d = grid.dim();
    let h = grid.spacing();
    let n_unit = grid.per_unit() as i64;
    let mut max_h = f64::NEG_INFINITY;
    let mut nodes = 0usize;
    let mut k = [0i64; MAX_DIM];
    let mut x = [0.0; MAX_DIM];
    let side = 2 * n_unit + 1;
    for flat in 0..side.pow(d as u32) {
        let mut rem = flat;
        let mut r2 = 0i64;
        for axis in (0..d).rev() {
            k[axis] = rem % side - n_unit;
            rem /= side;
            r2 += k[axis] * k[axis];
        }
        if r2 > n_unit * n_unit {
            continue;
        }
        nodes += 1;
        if reduced && !(k[..d].iter().all(|v| *v >= 0) && k[..d - 1].windows(2).all(|w| w[0] >= w[1])) {
            continue;
        }
        let patch = Patch::gather(d, |off| {
            for axis in 0..d {
                x[axis] = (k[axis] + off[axis]) as f64 * h;
            }
            s.value(&x[..d])
        });
        max_h = max_h.max(curvature_patch(&patch, h));
    }
    let threshold = s.threshold();
    Ok(BarrierCertificate {
        max_h,
        threshold,
        pass: max_h <= threshold,
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Flat,
    FullContact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyResult {
    pub branch: Branch,
    pub wedge: Wedge,
    pub epsilon: f64,
    /// Fraction of unknown slice nodes in `B_{1/2}` with `u − ψ ≤ h²`.
    pub contact_fraction: f64,
    /// `min (u + h² − top of Λ_{γ,θ+C0ε})` over columns in `B_{1/2}`; `None`
    /// when `θ + C0ε ≥ π/2 − |γ|`, where the inclusion is not claimed.
    pub lower_margin: Option<f64>,
    /// `min (top of Λ_{γ,θ−C0ε} + h² − u)`; only checked on the full-contact branch.
    pub upper_margin: Option<f64>,
}

/// Largest `x_n` in the column `{x_{n-1} = y}` of the wedge, if any.
fn column_top(w: &Wedge, y: f64) -> Option<f64> {
    let a = w.gamma() + w.theta();
    let b = w.gamma() - w.theta();
    let mut top = f64::INFINITY;
    for omega in [a, b] {
        if (omega.abs() - FRAC_PI_2).abs() < 1e-12 {
            // vertical face: sin ω · y ≤ 0
            if omega.signum() * y > 0.0 {
                return None;
            }
        } else {
            top = top.min(-tan(omega) * y);
        }
    }
    Some(top)
}

/// Dichotomy constant used when none is given.
pub const DEFAULT_C0: f64 = 10.0;
/// Frozen outcome of [`calibrate_c0`] on the 5×5 wedge grid at `h = 1/32`,
/// rounded up from the measured `0.787`.
pub const CALIBRATED_C0: f64 = 1.0;

fn in_half_ball(x: &[f64]) -> bool {
    x.iter().map(|v| v * v).sum::<f64>() < 0.25
}

/// Classifies a solved instance and checks both wedge inclusions on `B_{1/2}`.
///
/// The inclusion `Λ_{γ,θ+C0ε} ⊂ {x_n ≤ u}` is checked in both branches
/// whenever `θ + C0ε < π/2 − |γ|`. When `θ ≥ C0ε` the branch is full contact, which
/// also requires `{x_n ≤ u} ⊂ Λ_{γ,θ−C0ε}` and a fully touching slice. All
/// comparisons allow a slack of `h²`.
pub fn dichotomy(u: &Field, psi: &Field, w: &Wedge, epsilon: f64, c0: f64) -> Result<DichotomyResult> {
    if u.grid() != psi.grid() {
        bail!(Grid, "fields live on different grids");
    }
    if !(epsilon >= 0.0) || !(c0 >= 0.0) {
        bail!(Parameter, "epsilon and C0 must be nonnegative");
    }
    let grid = u.grid();
    let d = grid.dim();
    let h2 = grid.spacing() * grid.spacing();
    let spread = c0 * epsilon;
    let theta_hi = w.theta() + spread;
    let outer = if theta_hi < FRAC_PI_2 - w.gamma().abs() {
        Some(Wedge::new(w.gamma(), theta_hi)?)
    } else {
        None
    };
    let full = w.theta() >= spread;
    let inner = if full {
        Some(Wedge::new(w.gamma(), w.theta() - spread)?)
    } else {
        None
    };

    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let (mut slice_nodes, mut touching) = (0usize, 0usize);
    for idx in 0..grid.len() {
        let x = grid.coords(idx);
        if !in_half_ball(&x[..d]) {
            continue;
        }
        let y = x[d - 1];
        let v = u.get(idx);
        if let Some(outer) = &outer {
            let top = column_top(outer, y).expect("outer wedge is a subgraph");
            lower_margin = lower_margin.min(v + h2 - top);
        }
        if let Some(inner) = &inner {
            let top = column_top(inner, y).expect("inner wedge is a subgraph");
            upper_margin = upper_margin.min(top + h2 - v);
        }
        if grid.is_unknown(idx) && grid.is_slice(idx) {
            slice_nodes += 1;
            if v - psi.get(idx) <= h2 {
                touching += 1;
            }
        }
    }
    let contact_fraction = if slice_nodes == 0 {
        0.0
    } else {
        touching as f64 / slice_nodes as f64
    };
    if outer.is_some() && lower_margin < 0.0 {
        bail!(
            TheoremViolation,
            "Lambda(gamma={}, theta={theta_hi}) is not below the graph on B_1/2 (margin {lower_margin:.3e}); C0 = {c0} is too small",
            w.gamma()
        );
    }
    if full {
        if upper_margin < 0.0 {
            bail!(
                TheoremViolation,
                "graph leaves Lambda(gamma={}, theta={}) on B_1/2 (margin {upper_margin:.3e})",
                w.gamma(),
                w.theta() - spread
            );
        }
        if touching != slice_nodes {
            bail!(
                TheoremViolation,
                "theta >= C0 eps but only {touching} of {slice_nodes} slice nodes touch the obstacle"
            );
        }
    }
    Ok(DichotomyResult {
        branch: if full { Branch::FullContact } else { Branch::Flat },
        wedge: *w,
        epsilon,
        contact_fraction,
        lower_margin: outer.map(|_| lower_margin),
        upper_margin: if full { Some(upper_margin) } else { None },
    })
}

/// A solved instance for [`calibrate_c0`].
#[derive(Debug, Clone, Copy)]
pub struct SolvedInstance<'a> {
    pub u: &'a Field,
    pub psi: &'a Field,
    pub wedge: Wedge,
    pub epsilon: f64,
}

/// Smallest `C0 ∈ [lo, hi]` (to within `tol`) for which [`dichotomy`]
/// succeeds on every instance, by bisection. Success is monotone in `C0`.
pub fn calibrate_c0(instances: &[SolvedInstance<'_>], lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(0.0 <= lo && lo < hi) || !(tol > 0.0) {
        bail!(Parameter, "need 0 <= lo < hi and tol > 0");
    }
    let ok = |c0: f64| -> Result<bool> {
        for inst in instances {
            match dichotomy(inst.u, inst.psi, &inst.wedge, inst.epsilon, c0) {
                Ok(_) => {}
                Err(Error::TheoremViolation(_)) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    };
    if !ok(hi)? {
        bail!(Range, "dichotomy fails even at C0 = {hi}");
    }
    if ok(lo)? {
        return Ok(lo);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if ok(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}

/// Sample values of `β` spanning the admissible range for dimension `n`.
pub fn beta_samples(n: usize, count: usize) -> Vec<f64> {
    let cap = beta_cap(n);
    (1..=count).map(|i| cap * i as f64 / (count + 1) as f64).collect()
}
