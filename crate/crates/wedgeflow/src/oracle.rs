//! Exhaustive active-set solution of small discrete Signorini problems.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use wedgeflow_core::signorini::SignoriniProblem;
use wedgeflow_core::Field;

use crate::error::{CliError, CliResult};

/// Largest number of slice unknowns enumerated (`2^16` active sets).
pub const MAX_SLICE_NODES: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct BruteForce {
    #[serde(skip)]
    pub field: Field,
    pub active_sets: usize,
    pub feasible_sets: usize,
    /// Feasible sets whose contact multipliers are all nonnegative.
    pub kkt_sets: usize,
    pub energy: f64,
}

/// Minimises the 5-point Dirichlet energy subject to `u ≥ ψ` on the slice by
/// solving the equality problem for every candidate contact set.
pub fn brute_force_signorini(p: &SignoriniProblem) -> CliResult<BruteForce> {
    let grid = *p.grid();
    let d = grid.dim();
    let unknowns: Vec<usize> = grid.unknowns().iter().collect();
    let slice: Vec<usize> = unknowns.iter().copied().filter(|&i| grid.is_slice(i)).collect();
    if slice.len() > MAX_SLICE_NODES {
        return Err(CliError::Usage(format!(
            "{} slice unknowns exceed the enumeration limit {MAX_SLICE_NODES}",
            slice.len()
        )));
    }
    let psi = p.psi();
    let data = p.g();
    let neighbors = |idx: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * d);
        for axis in 0..d {
            for dir in [-1, 1] {
                if let Some(j) = grid.neighbor(idx, axis, dir) {
                    out.push(j);
                }
            }
        }
        out
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_sets = 0;
    let mut kkt_sets = 0;
    let total = 1usize << slice.len();
    for mask in 0..total {
        let mut u: Vec<f64> = data.values().to_vec();
        let mut fixed = vec![false; grid.len()];
        for (b, &i) in slice.iter().enumerate() {
            if mask & (1 << b) != 0 {
                u[i] = psi.get(i);
                fixed[i] = true;
            }
        }
        let free: Vec<usize> = unknowns.iter().copied().filter(|&i| !fixed[i]).collect();
        let pos: HashMap<usize, usize> = free.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let m = free.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (row, &i) in free.iter().enumerate() {
            let nb = neighbors(i);
            a[(row, row)] = nb.len() as f64;
            for j in nb {
                match pos.get(&j) {
                    Some(&col) => a[(row, col)] -= 1.0,
                    None => rhs[row] += u[j],
                }
            }
        }
        let Some(sol) = a.lu().solve(&rhs) else { continue };
        for (k, &i) in free.iter().enumerate() {
            u[i] = sol[k];
        }
        if slice.iter().any(|&i| u[i] < psi.get(i) - 1e-12) {
            continue;
        }
        feasible_sets += 1;
        let multipliers_ok = slice
            .iter()
            .filter(|&&i| fixed[i])
            .all(|&i| neighbors(i).iter().map(|&j| u[i] - u[j]).sum::<f64>() >= -1e-10);
        if multipliers_ok {
            kkt_sets += 1;
        }
        let energy = dirichlet(&u, &unknowns, &neighbors);
        if best.as_ref().is_none_or(|(e, _)| energy < *e) {
            best = Some((energy, u));
        }
    }
    let (energy, values) = best.ok_or_else(|| CliError::Failed("no feasible active set".into()))?;
    Ok(BruteForce {
        field: Field::from_values(grid, values)?,
        active_sets: total,
        feasible_sets,
        kkt_sets,
        energy,
    })
}

/// `½ Σ (u_i − u_j)²` over grid edges touching an unknown.
fn dirichlet(u: &[f64], unknowns: &[usize], neighbors: &dyn Fn(usize) -> Vec<usize>) -> f64 {
    let is_unknown: std::collections::HashSet<usize> = unknowns.iter().copied().collect();
    let mut e = 0.0;
    for &i in unknowns {
        for j in neighbors(i) {
            // count each unknown-unknown edge once
            if is_unknown.contains(&j) && j < i {
                continue;
            }
            e += 0.5 * (u[i] - u[j]).powi(2);
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use wedgeflow_core::signorini::solve_signorini;
    use wedgeflow_core::{Domain, GridSpec};

    #[test]
    fn inactive_obstacle_is_the_harmonic_solve() {
        let g = GridSpec::new(3, 0.125).unwrap().with_domain(Domain::Cube { half_width_nodes: 3 }).unwrap();
        let data = Field::from_fn(g, |x| x[0] * x[0] - x[1] * x[1]);
        let psi = Field::from_fn(g, |_| -10.0);
        let p = SignoriniProblem::new(psi, data.clone(), 1e-13, 10_000).unwrap();
        let bf = brute_force_signorini(&p).unwrap();
        // discrete harmonic data is reproduced exactly
        assert!(bf.field.max_abs_diff(&data, None).unwrap() < 1e-12);
        assert_eq!(bf.feasible_sets, bf.active_sets);
        let u = solve_signorini(&p).unwrap();
        assert!(u.max_abs_diff(&bf.field, None).unwrap() < 1e-10);
    }
}
