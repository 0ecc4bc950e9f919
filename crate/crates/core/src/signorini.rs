//! The scalar thin obstacle problem: minimise the Dirichlet energy subject to
//! `u ≥ ψ` on the slice, with `u = g` off the unknown region.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::grid::{discrete_laplacian, Field, GridSpec, NodeSet};
use crate::math::{ln, ls_slope, sqrt};

/// Relaxation factor of the projected SOR sweep.
pub const OMEGA: f64 = 1.5;
/// Sweeps between two samples of the energy trace.
pub const ENERGY_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SignoriniProblem {
    psi: Field,
    g: Field,
    tol: f64,
    max_iters: usize,
}

impl SignoriniProblem {
    /// `psi` is read on unknown slice nodes, `g` on every other node.
    pub fn new(psi: Field, g: Field, tol: f64, max_iters: usize) -> Result<Self> {
        check_data(&psi, &g, tol)?;
        Ok(SignoriniProblem {
            psi,
            g,
            tol,
            max_iters,
        })
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

    /// Same problem with data `(λψ, λg)` and tolerance `λ·tol`, `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            bail!(Parameter, "scale must be positive, got {lambda}");
        }
        Ok(SignoriniProblem {
            psi: self.psi.map(|v| lambda * v),
            g: self.g.map(|v| lambda * v),
            tol: self.tol * lambda,
            ..self.clone()
        })
    }
}

pub(crate) fn check_data(psi: &Field, g: &Field, tol: f64) -> Result<()> {
    if psi.grid() != g.grid() {
        bail!(Grid, "obstacle and boundary data live on different grids");
    }
    if !(tol > 0.0) || !tol.is_finite() {
        bail!(Parameter, "tolerance must be positive, got {tol}");
    }
    let grid = g.grid();
    // Where the slice meets the fixed nodes the data must respect the obstacle.
    for idx in 0..grid.len() {
        if grid.is_slice(idx) && !grid.is_unknown(idx) && is_adjacent_to_unknown(grid, idx) {
            let (p, b) = (psi.get(idx), g.get(idx));
            if p > b + 1e-12 {
                bail!(
                    Input,
                    "obstacle {p} exceeds boundary value {b} at boundary slice node {idx}"
                );
            }
        }
    }
    Ok(())
}

fn is_adjacent_to_unknown(grid: &GridSpec, idx: usize) -> bool {
    (0..grid.dim()).any(|axis| {
        [-1, 1].iter().any(|&s| {
            grid.neighbor(idx, axis, s)
                .is_some_and(|nb| grid.is_unknown(nb))
        })
    })
}

/// Output of a projected SOR solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SignoriniSolution {
    pub field: Field,
    pub sweeps: usize,
    pub last_update: f64,
    /// `(sweep, Dirichlet energy)` sampled every [`ENERGY_EVERY`] sweeps.
    pub energy_trace: Vec<(usize, f64)>,
}

pub fn solve_signorini(p: &SignoriniProblem) -> Result<Field> {
    solve_signorini_from(p, None).map(|s| s.field)
}

/// Projected SOR from `initial` (or from `max(0, ψ)` on the unknowns).
pub fn solve_signorini_from(p: &SignoriniProblem, initial: Option<&Field>) -> Result<SignoriniSolution> {
    let grid = *p.grid();
    if let Some(init) = initial {
        if init.grid() != &grid {
            bail!(Grid, "initial guess lives on a different grid");
        }
    }
    let d = grid.dim();
    let mut u = p.g.clone();
    let psi = p.psi.values();
    let strides: Vec<usize> = (0..d).map(|a| grid.stride(a)).collect();
    let mut unknowns = Vec::new();
    for idx in 0..grid.len() {
        if grid.is_unknown(idx) {
            let slice = grid.is_slice(idx);
            let start = initial.map_or(0.0, |f| f.get(idx));
            u.values_mut()[idx] = if slice { start.max(psi[idx]) } else { start };
            unknowns.push((idx, slice));
        }
    }
    let inv = 1.0 / (2 * d) as f64;
    let vals = u.values_mut();
    let mut trace = Vec::new();
    let mut history = Vec::new();
    let mut last = f64::INFINITY;
    for sweep in 1..=p.max_iters {
        let mut max_update = 0.0f64;
        for &(idx, slice) in &unknowns {
            let mut acc = 0.0;
            for &s in &strides {
                acc += vals[idx - s] + vals[idx + s];
            }
            let old = vals[idx];
            let mut new = old + OMEGA * (acc * inv - old);
            if slice && new < psi[idx] {
                new = psi[idx];
            }
            vals[idx] = new;
            max_update = max_update.max((new - old).abs());
        }
        last = max_update;
        if sweep % ENERGY_EVERY == 0 {
            trace.push((sweep, dirichlet_energy_values(&grid, vals)));
            history.push(max_update);
        }
        if max_update < p.tol {
            return Ok(SignoriniSolution {
                field: u,
                sweeps: sweep,
                last_update: max_update,
                energy_trace: trace,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: p.max_iters,
        residual: last,
        history,
    })
}

/// `½ Σ_edges h^{d-2} (Δ_edge u)²` over edges touching an unknown node.
pub fn dirichlet_energy(u: &Field) -> f64 {
    dirichlet_energy_values(u.grid(), u.values())
}

fn dirichlet_energy_values(grid: &GridSpec, vals: &[f64]) -> f64 {
    let d = grid.dim();
    let scale = grid.spacing().powi(d as i32 - 2);
    let mut e = 0.0;
    for idx in 0..grid.len() {
        for axis in 0..d {
            if let Some(nb) = grid.neighbor(idx, axis, 1) {
                if grid.is_unknown(idx) || grid.is_unknown(nb) {
                    let diff = vals[nb] - vals[idx];
                    e += diff * diff;
                }
            }
        }
    }
    0.5 * scale * e
}

/// Discrete residuals of the complementarity system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityReport {
    /// `max |L u|` over unknowns off the contact set.
    pub max_offcontact_residual: f64,
    /// `max (L u)⁺` over the contact set.
    pub max_contact_sign_violation: f64,
    /// `min (u − ψ)` over unknown slice nodes.
    pub min_constraint: f64,
    pub contact_nodes: usize,
}

/// Unknown slice nodes with `u − ψ ≤ h²`.
pub fn contact_set(u: &Field, psi: &Field) -> NodeSet {
    let grid = u.grid();
    let h2 = grid.spacing() * grid.spacing();
    grid.node_set(|i| grid.is_unknown(i) && grid.is_slice(i) && u.get(i) - psi.get(i) <= h2)
}

pub(crate) fn report_with(u: &Field, psi: &Field, op: &Field) -> Result<ComplementarityReport> {
    if u.grid() != psi.grid() || u.grid() != op.grid() {
        bail!(Grid, "fields live on different grids");
    }
    let grid = u.grid();
    let contact = contact_set(u, psi);
    let mut r = ComplementarityReport {
        max_offcontact_residual: 0.0,
        max_contact_sign_violation: 0.0,
        min_constraint: f64::INFINITY,
        contact_nodes: contact.count(),
    };
    for idx in 0..grid.len() {
        if !grid.is_unknown(idx) {
            continue;
        }
        let l = op.get(idx);
        if contact.contains(idx) {
            r.max_contact_sign_violation = r.max_contact_sign_violation.max(l);
        } else {
            r.max_offcontact_residual = r.max_offcontact_residual.max(l.abs());
        }
        if grid.is_slice(idx) {
            r.min_constraint = r.min_constraint.min(u.get(idx) - psi.get(idx));
        }
    }
    if r.min_constraint == f64::INFINITY {
        r.min_constraint = 0.0;
    }
    Ok(r)
}

pub fn complementarity_report(u: &Field, psi: &Field) -> Result<ComplementarityReport> {
    report_with(u, psi, &discrete_laplacian(u))
}

/// Contact nodes with a non-contact neighbour inside the slice. Fixed nodes
/// beyond the unknown region count as non-contact.
pub fn free_boundary(u: &Field, psi: &Field) -> Result<NodeSet> {
    if u.grid() != psi.grid() {
        bail!(Grid, "fields live on different grids");
    }
    let grid = u.grid();
    let contact = contact_set(u, psi);
    let d = grid.dim();
    Ok(grid.node_set(|idx| {
        contact.contains(idx)
            && (0..d - 1).any(|axis| {
                [-1, 1].iter().any(|&s| {
                    grid.neighbor(idx, axis, s)
                        .is_none_or(|nb| !contact.contains(nb))
                })
            })
    }))
}

/// Result of fitting `osc_{B_r}(u − ℓ) ~ r^κ` at a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub kappa: f64,
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// Gradient of the tangent plane `ℓ`.
    pub slope: Vec<f64>,
}

/// Minimum number of dyadic radii for [`exponent_fit`].
pub const MIN_RADII: usize = 8;

/// Fits the growth exponent of `u` minus its tangent plane at node `x0`.
///
/// The plane passes through `u(x0)`. At a contact node its slice-tangential
/// slopes are those of `ψ` and the normal slope is a least-squares fit on the
/// non-contact nodes of the annulus `4h ≤ |x − x0| ≤ 8h`; elsewhere the full
/// gradient is fitted on that annulus. Radii are `2^{-k} ≥ h` with the ball
/// inside the grid box.
pub fn exponent_fit(u: &Field, psi: &Field, x0: usize) -> Result<ExponentFit> {
    if u.grid() != psi.grid() {
        bail!(Grid, "fields live on different grids");
    }
    let grid = u.grid();
    if x0 >= grid.len() {
        bail!(Input, "node {x0} is not on the grid");
    }
    let d = grid.dim();
    let h = grid.spacing();
    let c = grid.coords(x0);
    let ext = grid.extent();
    let mut radii = Vec::new();
    let mut r = 1.0;
    while r >= h * (1.0 - 1e-12) {
        if (0..d).all(|a| c[a].abs() + r <= ext + 1e-12) {
            radii.push(r);
        }
        r *= 0.5;
    }
    if radii.len() < MIN_RADII {
        bail!(
            Range,
            "only {} dyadic radii fit around the node, need {MIN_RADII}",
            radii.len()
        );
    }
    let contact = contact_set(u, psi);
    let u0 = u.get(x0);
    let slope = tangent_slope(u, psi, &contact, x0)?;
    let rmax = radii[0];
    let mut osc = alloc::vec![(f64::INFINITY, f64::NEG_INFINITY); radii.len()];
    for idx in 0..grid.len() {
        let x = grid.coords(idx);
        let mut dist2 = 0.0;
        let mut lin = 0.0;
        for a in 0..d {
            let dx = x[a] - c[a];
            dist2 += dx * dx;
            lin += slope[a] * dx;
        }
        if dist2 > rmax * rmax * (1.0 + 1e-12) {
            continue;
        }
        let v = u.get(idx) - u0 - lin;
        for (k, r) in radii.iter().enumerate() {
            if dist2 <= r * r * (1.0 + 1e-12) {
                let o = &mut osc[k];
                o.0 = o.0.min(v);
                o.1 = o.1.max(v);
            }
        }
    }
    let oscillations: Vec<f64> = osc.iter().map(|(lo, hi)| hi - lo).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&oscillations)
        .filter(|(_, o)| **o > 0.0)
        .map(|(r, o)| (ln(*r), ln(*o)))
        .unzip();
    let kappa = ls_slope(&xs, &ys).ok_or_else(|| {
        Error::Input(alloc::string::String::from(
            "oscillation vanishes at too many radii to fit an exponent",
        ))
    })?;
    Ok(ExponentFit {
        kappa,
        radii,
        oscillations,
        slope,
    })
}

fn tangent_slope(u: &Field, psi: &Field, contact: &NodeSet, x0: usize) -> Result<Vec<f64>> {
    let grid = u.grid();
    let d = grid.dim();
    let h = grid.spacing();
    let c = grid.coords(x0);
    let u0 = u.get(x0);
    let at_contact = contact.contains(x0);
    let mut slope = alloc::vec![0.0; d];
    if at_contact {
        for (a, s) in slope.iter_mut().enumerate().take(d - 1) {
            let (p, m) = match (grid.neighbor(x0, a, 1), grid.neighbor(x0, a, -1)) {
                (Some(p), Some(m)) => (p, m),
                _ => bail!(Grid, "node {x0} lacks tangential neighbours"),
            };
            *s = (psi.get(p) - psi.get(m)) / (2.0 * h);
        }
    }
    // Least squares for the free slopes on the annulus.
    let free: Vec<usize> = if at_contact { alloc::vec![d - 1] } else { (0..d).collect() };
    let m = free.len();
    let mut ata = alloc::vec![0.0; m * m];
    let mut atb = alloc::vec![0.0; m];
    let (r_in, r_out) = (4.0 * h, 8.0 * h);
    let reach = 8i64;
    let k0 = grid.multi_index(x0);
    let mut used = 0usize;
    let mut off = [-reach; 3];
    loop {
        let mut k = k0;
        for a in 0..d {
            k[a] += off[a];
        }
        if let Some(idx) = grid.index(&k) {
            let x = grid.coords(idx);
            let dist = sqrt((0..d).map(|a| (x[a] - c[a]) * (x[a] - c[a])).sum());
            if dist >= r_in * (1.0 - 1e-12) && dist <= r_out * (1.0 + 1e-12) && !contact.contains(idx) {
                let mut rhs = u.get(idx) - u0;
                for a in 0..d {
                    if !free.contains(&a) {
                        rhs -= slope[a] * (x[a] - c[a]);
                    }
                }
                for (i, &ai) in free.iter().enumerate() {
                    let xi = x[ai] - c[ai];
                    atb[i] += xi * rhs;
                    for (j, &aj) in free.iter().enumerate() {
                        ata[i * m + j] += xi * (x[aj] - c[aj]);
                    }
                }
                used += 1;
            }
        }
        // odometer over the (2·reach+1)^d box
        let mut a = 0;
        loop {
            if a == d {
                let sol = if used > m {
                    crate::linalg::solve_dense(ata, atb)
                } else {
                    None
                };
                let sol = sol.ok_or_else(|| {
                    Error::Input(alloc::string::String::from(
                        "too few non-contact annulus nodes for a tangent plane",
                    ))
                })?;
                for (i, &ai) in free.iter().enumerate() {
                    slope[ai] = sol[i];
                }
                return Ok(slope);
            }
            off[a] += 1;
            if off[a] <= reach {
                break;
            }
            off[a] = -reach;
            a += 1;
        }
    }
}

/// Observed order `p` of `err(h) ~ h^p` from least squares on logs.
pub fn convergence_order(hs: &[f64], errs: &[f64]) -> Option<f64> {
    let xs: Vec<f64> = hs.iter().map(|h| ln(*h)).collect();
    let ys: Vec<f64> = errs.iter().map(|e| ln(*e)).collect();
    ls_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Family;

    fn grid(inv_h: usize) -> GridSpec {
        GridSpec::new(3, 1.0 / inv_h as f64).unwrap()
    }

    #[test]
    fn rejects_bad_problems() {
        let g = grid(8);
        let zero = Field::zeros(g);
        assert!(SignoriniProblem::new(zero.clone(), zero.clone(), 0.0, 10).is_err());
        let high = Field::from_fn(g, |_| 1.0);
        assert!(SignoriniProblem::new(high, zero.clone(), 1e-8, 10).is_err());
        let other = Field::zeros(GridSpec::new(3, 1.0 / 16.0).unwrap());
        assert!(SignoriniProblem::new(other, zero, 1e-8, 10).is_err());
    }

    #[test]
    fn zero_data_gives_zero_residuals() {
        let g = grid(16);
        let zero = Field::zeros(g);
        let p = SignoriniProblem::new(zero.clone(), zero.clone(), 1e-12, 1000).unwrap();
        let u = solve_signorini(&p).unwrap();
        let r = complementarity_report(&u, &zero).unwrap();
        assert_eq!(r.max_offcontact_residual, 0.0);
        assert_eq!(r.max_contact_sign_violation, 0.0);
        assert_eq!(r.min_constraint, 0.0);
    }

    #[test]
    fn harmonic_instance() {
        let g = grid(16);
        let data = Family::HarmonicQuadratic { amplitude: 1.0 }.field(g).unwrap();
        let psi = Field::from_fn(g, |_| -1.0);
        let tol = 1e-11;
        let p = SignoriniProblem::new(psi.clone(), data.clone(), tol, 100_000).unwrap();
        let u = solve_signorini(&p).unwrap();
        // the quadratic is discretely harmonic, so only the solver tolerance remains
        let err = u.max_abs_diff(&data, None).unwrap();
        assert!(err < 1e-7, "{err}");
        let r = complementarity_report(&u, &psi).unwrap();
        assert_eq!(r.contact_nodes, 0);
        let h2 = g.spacing() * g.spacing();
        assert!(r.max_offcontact_residual <= 10.0 * tol / h2);
        assert!(free_boundary(&u, &psi).unwrap().is_empty());
    }

    #[test]
    fn max_iters_exhaustion_reports() {
        let g = grid(16);
        let data = Family::HarmonicQuadratic { amplitude: 1.0 }.field(g).unwrap();
        let psi = Field::from_fn(g, |_| -1.0);
        let p = SignoriniProblem::new(psi, data, 1e-14, 120).unwrap();
        match solve_signorini(&p) {
            Err(Error::NotConverged { iterations, residual, history }) => {
                assert_eq!(iterations, 120);
                assert!(residual > 0.0);
                assert_eq!(history.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_trace_is_non_increasing() {
        let g = grid(16);
        let data = Family::Homogeneous32 { amplitude: 1.0 }.field(g).unwrap();
        let psi = Field::zeros(g);
        let p = SignoriniProblem::new(psi, data, 1e-10, 100_000).unwrap();
        let s = solve_signorini_from(&p, None).unwrap();
        assert!(s.energy_trace.len() > 2);
        for w in s.energy_trace.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn homogeneous_instance_contact_and_free_boundary() {
        let g = grid(32);
        let data = Family::Homogeneous32 { amplitude: 1.0 }.field(g).unwrap();
        let psi = Field::zeros(g);
        let p = SignoriniProblem::new(psi.clone(), data.clone(), 1e-11, 200_000).unwrap();
        let u = solve_signorini(&p).unwrap();
        let h = g.spacing();
        assert!(u.max_abs_diff(&data, None).unwrap() < 2.0 * h);
        let r = complementarity_report(&u, &psi).unwrap();
        assert!(r.min_constraint >= -1e-12);
        assert!(r.max_contact_sign_violation <= 10.0 * 1e-11 / (h * h));
        // strictly negative Laplacian in the interior of the contact set
        let lap = discrete_laplacian(&u);
        let inner = g.nearest(&[-0.5, 0.0]).unwrap();
        assert!(lap.get(inner) < -1.0);
        let fb = free_boundary(&u, &psi).unwrap();
        assert!(!fb.is_empty());
        for idx in fb.iter() {
            let x = g.coords(idx);
            let interior = x[0] * x[0] < 0.9;
            if interior {
                assert!(x[0].abs() <= 2.0 * h + 1e-12, "{x:?}");
            }
        }
    }

    #[test]
    fn scaling_covariance() {
        let g = grid(16);
        let data = Family::Homogeneous32 { amplitude: 1.0 }.field(g).unwrap();
        let p = SignoriniProblem::new(Field::zeros(g), data, 1e-12, 200_000).unwrap();
        let u = solve_signorini(&p).unwrap();
        let u2 = solve_signorini(&p.scaled(2.0).unwrap()).unwrap();
        // the powers of two keep every operation exact
        for (a, b) in u.values().iter().zip(u2.values()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn convergence_order_helper() {
        let p = convergence_order(&[0.1, 0.05, 0.025], &[0.01, 0.0025, 0.000625]).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponent_fit_needs_radii() {
        let g = GridSpec::new(3, 1.0 / 64.0).unwrap();
        let z = Field::zeros(g);
        let o = g.nearest(&[0.0, 0.0]).unwrap();
        assert!(matches!(exponent_fit(&z, &z, o), Err(Error::Range(_))));
    }
}
