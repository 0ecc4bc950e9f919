//! Nonparametric minimal graphs above a thin obstacle.
//!
//! The discrete area of [`crate::grid::area_energy`] is minimised over the
//! unknown nodes by projected gradient descent. The descent direction is the
//! curvature `H_h`, trial steps follow the Barzilai–Borwein rule and are
//! accepted by monotone Armijo backtracking. Energy changes are accumulated
//! per quadrature corner as `(|g'|² − |g|²)/(J' + J)`, which keeps the Armijo
//! test meaningful when the change is far below the rounding level of the
//! total area.

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::families::Family;
use crate::geometry::Wedge;
use crate::grid::{cells, corner_offsets, mean_curvature, Field, GridSpec};
use crate::math::sqrt;
use crate::signorini::{check_data, complementarity_report, report_with, solve_signorini_from, ComplementarityReport, SignoriniProblem};

/// Line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Upper bound on a step, in units of `h²`.
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            max_step: 1e6,
        }
    }
}

/// Initial guess for [`solve_min_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmStart {
    /// Zero on the unknowns, lifted to the obstacle on the slice.
    #[default]
    Zero,
    /// Solution of the thin obstacle problem with the same data.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphProblem {
    psi: Field,
    g: Field,
    tol: f64,
    max_iters: usize,
    step: StepControl,
    warm_start: WarmStart,
}

impl GraphProblem {
    pub fn new(psi: Field, g: Field, tol: f64, max_iters: usize) -> Result<Self> {
        check_data(&psi, &g, tol)?;
        Ok(GraphProblem {
            psi,
            g,
            tol,
            max_iters,
            step: StepControl::default(),
            warm_start: WarmStart::default(),
        })
    }

    pub fn with_step(mut self, step: StepControl) -> Result<Self> {
        if !(step.armijo > 0.0 && step.armijo < 1.0) || !(step.shrink > 0.0 && step.shrink < 1.0) {
            bail!(Parameter, "armijo and shrink factors must lie in (0, 1)");
        }
        if !(step.max_step > 0.0) {
            bail!(Parameter, "max_step must be positive");
        }
        self.step = step;
        Ok(self)
    }

    pub fn with_warm_start(mut self, warm_start: WarmStart) -> Self {
        self.warm_start = warm_start;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.g.grid()
    }

    pub fn psi(&self) -> &Field {
        &self.psi
    }

    pub fn g(&self) -> &Field {
        &self.g
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    /// The thin obstacle problem with the same data.
    pub fn dirichlet(&self) -> Result<SignoriniProblem> {
        SignoriniProblem::new(self.psi.clone(), self.g.clone(), self.tol, self.max_iters.max(1_000_000))
    }
}

/// Output of a minimal-graph solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSolution {
    pub field: Field,
    pub iterations: usize,
    /// Final `h² · max |projected H|`.
    pub residual: f64,
    /// `(iteration, area)` sampled every 50 accepted steps.
    pub energy_trace: Vec<(usize, f64)>,
    /// Largest energy change over accepted steps; never positive.
    pub max_energy_change: f64,
}

/// Curvature tolerance matching a solver tolerance: `10·tol/h²`.
pub fn curvature_tolerance(tol: f64, h: f64) -> f64 {
    10.0 * tol / (h * h)
}

struct Kernel {
    d: usize,
    h: f64,
    weight: f64,
    offs: [usize; 8],
    cells: Vec<usize>,
}

impl Kernel {
    fn new(grid: &GridSpec) -> Self {
        let d = grid.dim();
        let h = grid.spacing();
        let offs = corner_offsets(grid);
        let cells = cells(grid)
            .filter(|&b| (0..(1usize << d)).any(|c| grid.is_unknown(b + offs[c])))
            .collect();
        Kernel {
            d,
            h,
            weight: h.powi(d as i32) / (1u64 << d) as f64,
            offs,
            cells,
        }
    }

    /// `G = ∂A_h/∂f` accumulated into `grad` (zeroed first).
    fn gradient(&self, f: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut diffs = [0.0; 3];
        for &base in &self.cells {
            for c in 0..(1usize << self.d) {
                let ic = base + self.offs[c];
                let fc = f[ic];
                let mut s2 = 0.0;
                for (j, dj) in diffs.iter_mut().enumerate().take(self.d) {
                    *dj = f[base + self.offs[c ^ (1 << j)]] - fc;
                    s2 += *dj * *dj;
                }
                let coef = self.weight * inv_h2 / sqrt(1.0 + s2 * inv_h2);
                for (j, dj) in diffs.iter().enumerate().take(self.d) {
                    let t = coef * dj;
                    grad[base + self.offs[c ^ (1 << j)]] += t;
                    grad[ic] -= t;
                }
            }
        }
    }

    fn energy(&self, f: &[f64]) -> f64 {
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut e = 0.0;
        for &base in &self.cells {
            for c in 0..(1usize << self.d) {
                let fc = f[base + self.offs[c]];
                let mut s2 = 0.0;
                for j in 0..self.d {
                    let dj = f[base + self.offs[c ^ (1 << j)]] - fc;
                    s2 += dj * dj;
                }
                e += sqrt(1.0 + s2 * inv_h2);
            }
        }
        self.weight * e
    }

    /// `A_h(f + df) − A_h(f)` without forming either total.
    fn energy_change(&self, f: &[f64], df: &[f64]) -> f64 {
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut e = 0.0;
        for &base in &self.cells {
            for c in 0..(1usize << self.d) {
                let ic = base + self.offs[c];
                let (fc, dc) = (f[ic], df[ic]);
                let (mut s_old, mut s_new, mut ds) = (0.0, 0.0, 0.0);
                for j in 0..self.d {
                    let inb = base + self.offs[c ^ (1 << j)];
                    let old = f[inb] - fc;
                    let dd = df[inb] - dc;
                    let new = old + dd;
                    s_old += old * old;
                    s_new += new * new;
                    ds += dd * (old + new);
                }
                let j_old = sqrt(1.0 + s_old * inv_h2);
                let j_new = sqrt(1.0 + s_new * inv_h2);
                e += ds * inv_h2 / (j_old + j_new);
            }
        }
        self.weight * e
    }
}

/// Minimises the discrete area subject to `u ≥ ψ` on the slice.
pub fn solve_min_graph(p: &GraphProblem) -> Result<Field> {
    solve_min_graph_detailed(p).map(|s| s.field)
}

pub fn solve_min_graph_detailed(p: &GraphProblem) -> Result<GraphSolution> {
    let grid = *p.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let hd = h.powi(d as i32);
    let h2 = h * h;
    let kernel = Kernel::new(&grid);
    let unknowns: Vec<(usize, bool)> = (0..grid.len())
        .filter(|&i| grid.is_unknown(i))
        .map(|i| (i, grid.is_slice(i)))
        .collect();
    let psi = p.psi.values();

    let mut u = match p.warm_start {
        WarmStart::Dirichlet => {
            let sp = SignoriniProblem::new(p.psi.clone(), p.g.clone(), p.tol.min(1e-8), 10_000_000)?;
            solve_signorini_from(&sp, None)?.field
        }
        WarmStart::Zero => {
            let mut f = p.g.clone();
            for &(i, s) in &unknowns {
                f.values_mut()[i] = if s { psi[i].max(0.0) } else { 0.0 };
            }
            f
        }
    };

    let n = grid.len();
    let mut grad = alloc::vec![0.0; n];
    let mut grad_new = alloc::vec![0.0; n];
    let mut trial = alloc::vec![0.0; n];
    let mut df = alloc::vec![0.0; n];
    kernel.gradient(u.values(), &mut grad);

    // Descent direction is H = −G/h^d; steps are measured in units of h².
    let projected_residual = |vals: &[f64], grad: &[f64]| -> f64 {
        let mut r = 0.0f64;
        for &(i, s) in &unknowns {
            let mut gi = grad[i] / hd;
            if s && vals[i] <= psi[i] {
                gi = gi.min(0.0);
            }
            r = r.max(gi.abs());
        }
        r * h2
    };

    let mut step = 1.0 / (2 * d) as f64;
    let mut energy = kernel.energy(u.values());
    let mut trace = alloc::vec![(0usize, energy)];
    let mut history = Vec::new();
    let mut max_change = f64::NEG_INFINITY;
    let mut residual = projected_residual(u.values(), &grad);
    let mut iterations = 0;
    while residual >= p.tol {
        if iterations == p.max_iters {
            return Err(Error::NotConverged {
                iterations,
                residual,
                history,
            });
        }
        iterations += 1;
        let vals = u.values();
        let mut t = step.min(p.step.max_step);
        let mut accepted = None;
        for _ in 0..=p.step.max_backtracks {
            let mut predicted = 0.0;
            for &(i, s) in &unknowns {
                let mut v = vals[i] - t * h2 * grad[i] / hd;
                if s && v < psi[i] {
                    v = psi[i];
                }
                trial[i] = v;
                df[i] = v - vals[i];
                predicted += grad[i] * df[i];
            }
            let change = kernel.energy_change(vals, &df);
            if change <= p.step.armijo * predicted {
                accepted = Some(change);
                break;
            }
            t *= p.step.shrink;
        }
        let change = match accepted {
            Some(c) => c,
            None => {
                return Err(Error::NotConverged {
                    iterations,
                    residual,
                    history,
                })
            }
        };
        max_change = max_change.max(change);
        energy += change;
        for &(i, _) in &unknowns {
            u.values_mut()[i] = trial[i];
        }
        kernel.gradient(u.values(), &mut grad_new);
        // Barzilai–Borwein step for the next iteration.
        let (mut ss, mut sy) = (0.0, 0.0);
        for &(i, _) in &unknowns {
            let s = df[i];
            let y = (grad_new[i] - grad[i]) / hd * h2;
            ss += s * s;
            sy += s * y;
        }
        step = if sy > 0.0 { ss / sy } else { p.step.max_step };
        core::mem::swap(&mut grad, &mut grad_new);
        residual = projected_residual(u.values(), &grad);
        if iterations % 50 == 0 {
            trace.push((iterations, energy));
            history.push(residual);
        }
    }
    if trace.last().is_none_or(|e| e.0 != iterations) {
        trace.push((iterations, energy));
    }
    Ok(GraphSolution {
        field: u,
        iterations,
        residual,
        energy_trace: trace,
        max_energy_change: if max_change == f64::NEG_INFINITY { 0.0 } else { max_change },
    })
}

/// Nonlinear complementarity residuals with `H_h` in place of `Δ_h`.
pub fn viscosity_check(u: &Field, psi: &Field) -> Result<ComplementarityReport> {
    report_with(u, psi, &mean_curvature(u))
}

/// Whether a report meets the viscosity conditions at curvature tolerance `tol_h`.
pub fn viscosity_passes(r: &ComplementarityReport, tol_h: f64) -> bool {
    r.max_offcontact_residual <= tol_h && r.max_contact_sign_violation <= tol_h && r.min_constraint >= -1e-12
}

/// Laplacian residuals of a graph solution, for comparison with the Dirichlet problem.
pub fn linear_check(u: &Field, psi: &Field) -> Result<ComplementarityReport> {
    complementarity_report(u, psi)
}

/// Default tolerance of [`wedge_instance`].
pub const WEDGE_TOL: f64 = 1e-10;

/// Wedge-trace data `W_{γ,θ} + ε x_{n-1}²` with `ψ = 0`.
///
/// The perturbation vanishes on the slice, is nonnegative, and is smooth, so
/// the data stays compatible with the obstacle and depart from the wedge by
/// at most `ε` on the unit ball.
pub fn wedge_instance(grid: GridSpec, gamma: f64, theta: f64, epsilon: f64) -> Result<GraphProblem> {
    Wedge::new(gamma, theta)?;
    let fam = Family::WedgeTrace {
        gamma,
        theta,
        epsilon,
    };
    let g = fam.field(grid)?;
    GraphProblem::new(Field::zeros(grid), g, WEDGE_TOL, 200_000)
}
