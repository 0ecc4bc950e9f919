//! Wedge geometry in the plane spanned by the last two coordinate axes.
//!
//! A wedge `Λ_{γ,θ}` is the intersection of the closed half-spaces
//! `{e_{γ+θ}·x <= 0}` and `{e_{γ-θ}·x <= 0}` with `e_ω = sin ω e_{n-1} + cos ω e_n`.
//! Everything here depends on a point only through its last two
//! coordinates, except ball membership, which uses the full norm.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::math::{cos, sin, sqrt, tan, FRAC_PI_2, PI};

const ANGLE_SLACK: f64 = 1e-12;

/// The wedge `Λ_{γ,θ}`; aperture `π − 2θ`, rotated by `γ` from `e_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    gamma: f64,
    theta: f64,
}

impl Wedge {
    /// Validates `|γ| <= π/2` and `0 <= θ <= π/2 − |γ|`.
    pub fn new(gamma: f64, theta: f64) -> Result<Self> {
        if !gamma.is_finite() || !theta.is_finite() {
            bail!(Parameter, "wedge angles must be finite (gamma={gamma}, theta={theta})");
        }
        if gamma.abs() > FRAC_PI_2 + ANGLE_SLACK {
            bail!(Parameter, "|gamma| = {} exceeds pi/2", gamma.abs());
        }
        if theta < -ANGLE_SLACK || theta > FRAC_PI_2 - gamma.abs() + ANGLE_SLACK {
            bail!(
                Parameter,
                "theta = {theta} outside [0, pi/2 - |gamma|] for gamma = {gamma}"
            );
        }
        Ok(Wedge {
            gamma: gamma.clamp(-FRAC_PI_2, FRAC_PI_2),
            theta: theta.clamp(0.0, FRAC_PI_2 - gamma.abs()),
        })
    }

    /// `Λ_{0,0}`, the half-space `{x_n <= 0}`.
    pub fn half_space() -> Self {
        Wedge {
            gamma: 0.0,
            theta: 0.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Outer normals `(e_{γ+θ}, e_{γ−θ})` as `(y, z)` pairs.
    fn normals(&self) -> ([f64; 2], [f64; 2]) {
        let a = self.gamma + self.theta;
        let b = self.gamma - self.theta;
        ([sin(a), cos(a)], [sin(b), cos(b)])
    }

    /// Unit directions of the two boundary rays, for `x_{n-1} > 0` and
    /// `x_{n-1} < 0` respectively.
    fn face_rays(&self) -> ([f64; 2], [f64; 2]) {
        let a = self.gamma + self.theta;
        let b = self.gamma - self.theta;
        ([cos(a), -sin(a)], [-cos(b), sin(b)])
    }

    /// Planar membership test on `(x_{n-1}, x_n)`. Boundary counts as inside.
    pub fn contains_planar(&self, y: f64, z: f64) -> bool {
        let (na, nb) = self.normals();
        na[0] * y + na[1] * z <= 0.0 && nb[0] * y + nb[1] * z <= 0.0
    }

    /// Planar signed distance: negative inside, positive outside.
    pub fn signed_distance_planar(&self, y: f64, z: f64) -> f64 {
        let (ra, rb) = self.face_rays();
        let d = ray_distance(y, z, ra).min(ray_distance(y, z, rb));
        if self.contains_planar(y, z) {
            -d
        } else {
            d
        }
    }

    /// Height of the upper boundary over `x_{n-1} = y`, when the wedge is a
    /// subgraph (`|γ| + θ < π/2`). The wedge is then `{x_n <= height(x_{n-1})}`.
    pub fn graph_height(&self, y: f64) -> Option<f64> {
        if self.gamma.abs() + self.theta >= FRAC_PI_2 - ANGLE_SLACK {
            return None;
        }
        Some(if y >= 0.0 {
            -tan(self.gamma + self.theta) * y
        } else {
            -tan(self.gamma - self.theta) * y
        })
    }
}

fn ray_distance(y: f64, z: f64, dir: [f64; 2]) -> f64 {
    let s = y * dir[0] + z * dir[1];
    if s >= 0.0 {
        (y * dir[1] - z * dir[0]).abs()
    } else {
        sqrt(y * y + z * z)
    }
}

fn planar(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    (x[n - 2], x[n - 1])
}

fn norm(x: &[f64]) -> f64 {
    sqrt(x.iter().map(|v| v * v).sum())
}

/// `e_ω = sin ω e_{n-1} + cos ω e_n` in `R^n`.
pub fn unit_direction(omega: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "directions need at least two axes",
        });
    }
    let mut v = alloc::vec![0.0; n];
    v[n - 2] = sin(omega);
    v[n - 1] = cos(omega);
    Ok(v)
}

/// Membership of `x ∈ R^n` (`n >= 2`) in the closed wedge.
pub fn wedge_contains(w: &Wedge, x: &[f64]) -> Result<bool> {
    if x.len() < 2 {
        bail!(Input, "points need at least two coordinates");
    }
    let (y, z) = planar(x);
    Ok(w.contains_planar(y, z))
}

/// Signed Euclidean distance to `∂Λ`, constant in `x''`.
pub fn wedge_signed_distance(w: &Wedge, x: &[f64]) -> f64 {
    let (y, z) = planar(x);
    w.signed_distance_planar(y, z)
}

/// The sharp wedge `Λ^δ = Λ_{0, π/2 − δ}` around the obstacle.
pub fn sharp_wedge(delta: f64) -> Result<Wedge> {
    if !(delta > 0.0 && delta < FRAC_PI_2) {
        bail!(Parameter, "sharp wedge needs 0 < delta < pi/2, got {delta}");
    }
    Wedge::new(0.0, FRAC_PI_2 - delta)
}

/// Points in `R^dim` stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        PointCloud {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a [f64]>>(dim: usize, pts: I) -> Result<Self> {
        let mut c = PointCloud::new(dim);
        for p in pts {
            c.push(p)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim || self.dim < 2 {
            bail!(Input, "point has {} coordinates, cloud expects {}", p.len(), self.dim);
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    /// Planar `(x_{n-1}, x_n)` pairs of the points inside the closed ball `B_r`.
    fn planar_in_ball(&self, r: f64) -> Vec<(f64, f64)> {
        let r2 = r * r * (1.0 + 1e-12);
        self.iter()
            .filter(|p| p.iter().map(|v| v * v).sum::<f64>() <= r2)
            .map(planar)
            .collect()
    }
}

/// Which inclusion a sample encodes.
#[derive(Debug, Clone, Copy)]
pub enum Sample<'a> {
    /// Points of ∂E.
    Boundary(&'a PointCloud),
    /// Points with membership labels, `labels[i]` true iff point `i` ∈ E.
    Labeled(&'a PointCloud, &'a [bool]),
}

/// Outcome of a sandwich test `Λ^{-ε} ⊂ E ⊂ Λ^{ε}` in `B_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub epsilon: f64,
    pub wedge: Wedge,
    pub ball_radius: f64,
}

/// Least `ε` for which the sampled set is sandwiched between `Λ^{±ε}` in `B_r`.
pub fn closeness(sample: Sample<'_>, w: &Wedge, r: f64) -> Result<ClosenessReport> {
    if !(r > 0.0) {
        bail!(Parameter, "ball radius must be positive, got {r}");
    }
    let epsilon = match sample {
        Sample::Boundary(cloud) => {
            let pts = cloud.planar_in_ball(r);
            if pts.is_empty() {
                bail!(Input, "no sample points inside B_{r}");
            }
            boundary_epsilon(w, &pts)
        }
        Sample::Labeled(cloud, labels) => {
            if labels.len() != cloud.len() {
                bail!(Input, "{} labels for {} points", labels.len(), cloud.len());
            }
            let r2 = r * r * (1.0 + 1e-12);
            let mut eps = 0.0f64;
            let mut seen = false;
            for (p, &inside) in cloud.iter().zip(labels) {
                if p.iter().map(|v| v * v).sum::<f64>() > r2 {
                    continue;
                }
                seen = true;
                let sd = wedge_signed_distance(w, p);
                let violation = if inside { sd } else { -sd };
                eps = eps.max(violation);
            }
            if !seen {
                bail!(Input, "no sample points inside B_{r}");
            }
            eps
        }
    };
    Ok(ClosenessReport {
        epsilon,
        wedge: *w,
        ball_radius: r,
    })
}

fn boundary_epsilon(w: &Wedge, pts: &[(f64, f64)]) -> f64 {
    pts.iter()
        .map(|&(y, z)| w.signed_distance_planar(y, z).abs())
        .fold(0.0, f64::max)
}

/// Coarse grid size per axis of the `(γ, θ)` search.
pub const FIT_GRID: usize = 64;
/// Number of alternating golden-section refinement rounds.
pub const FIT_REFINEMENTS: usize = 20;

/// Angular step of the coarse `(γ, θ)` search grid.
pub fn fit_grid_step() -> (f64, f64) {
    (PI / (FIT_GRID - 1) as f64, FRAC_PI_2 / (FIT_GRID - 1) as f64)
}

/// Best wedge for a cloud of boundary points in `B_r`, with its closeness.
///
/// Exhaustive search over the feasible triangle on a `64 × 64` grid, ties
/// going to the smallest `θ` and then the smallest `|γ|`, followed by
/// alternating golden-section line searches in `γ` and `θ`.
pub fn fit_wedge(cloud: &PointCloud, r: f64) -> Result<(Wedge, f64)> {
    if !(r > 0.0) {
        bail!(Parameter, "ball radius must be positive, got {r}");
    }
    let pts = cloud.planar_in_ball(r);
    if pts.is_empty() {
        bail!(Input, "no boundary points inside B_{r}");
    }
    let spread = cloud
        .iter()
        .map(norm)
        .fold(0.0, f64::max);
    if spread < 1e-300 {
        bail!(Input, "degenerate cloud: every point sits at the origin");
    }
    let objective = |g: f64, t: f64| -> f64 {
        match Wedge::new(g, t) {
            Ok(w) => boundary_epsilon(&w, &pts),
            Err(_) => f64::INFINITY,
        }
    };

    let (dg, dt) = fit_grid_step();
    let mut best = (0.0, 0.0, f64::INFINITY);
    for j in 0..FIT_GRID {
        let theta = j as f64 * dt;
        // |γ| ascending so exact ties keep the smallest |γ|.
        let mut gammas: Vec<f64> = (0..FIT_GRID)
            .map(|i| -FRAC_PI_2 + i as f64 * dg)
            .filter(|g| theta <= FRAC_PI_2 - g.abs() + ANGLE_SLACK)
            .collect();
        gammas.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        for g in gammas {
            let e = objective(g, theta);
            if e < best.2 - 1e-15 {
                best = (g, theta, e);
            }
        }
    }

    let (mut g, mut t, mut e) = best;
    let mut half_g = dg;
    let mut half_t = dt;
    for _ in 0..FIT_REFINEMENTS {
        let lo = (g - half_g).max(-FRAC_PI_2);
        let hi = (g + half_g).min(FRAC_PI_2);
        let (g_new, e_new) = golden_section(|x| objective(x, t.min(FRAC_PI_2 - x.abs())), lo, hi);
        if e_new < e {
            t = t.min(FRAC_PI_2 - g_new.abs());
            g = g_new;
            e = e_new;
        }
        let lo = (t - half_t).max(0.0);
        let hi = (t + half_t).min(FRAC_PI_2 - g.abs());
        if hi > lo {
            let (t_new, e_new) = golden_section(|x| objective(g, x), lo, hi);
            if e_new < e {
                t = t_new;
                e = e_new;
            }
        }
        half_g *= 0.5;
        half_t *= 0.5;
    }
    Ok((Wedge::new(g, t)?, e))
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..48 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const SQRT_HALF: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_direction_examples() {
        assert_eq!(unit_direction(0.0, 3).unwrap(), vec![0.0, 0.0, 1.0]);
        let v = unit_direction(FRAC_PI_2, 3).unwrap();
        assert!(close(v[0], 0.0, 0.0) && close(v[1], 1.0, 1e-15) && close(v[2], 0.0, 1e-15));
        let v = unit_direction(PI / 4.0, 2).unwrap();
        assert!(close(v[0], SQRT_HALF, 1e-15) && close(v[1], SQRT_HALF, 1e-15));
        assert!(unit_direction(0.3, 1).is_err());
    }

    #[test]
    fn wedge_invariants_enforced() {
        assert!(Wedge::new(0.2, 0.3).is_ok());
        assert!(Wedge::new(1.7, 0.0).is_err());
        assert!(Wedge::new(0.5, FRAC_PI_2 - 0.4).is_err());
        assert!(Wedge::new(0.0, -0.1).is_err());
        assert!(Wedge::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn contains_examples() {
        let flat = Wedge::half_space();
        assert!(wedge_contains(&flat, &[0.0, 0.0, -1.0]).unwrap());
        assert!(!wedge_contains(&flat, &[0.0, 0.0, 1.0]).unwrap());
        let w = Wedge::new(0.0, PI / 4.0).unwrap();
        // e_{π/4}·(1,0) = √2/2 > 0.
        assert!(!wedge_contains(&w, &[0.0, 1.0, 0.0]).unwrap());
        // both products are -√2/2·(1+1)/... <= 0.
        assert!(wedge_contains(&w, &[0.0, -1.0, -1.0]).unwrap());
    }

    #[test]
    fn signed_distance_examples() {
        let flat = Wedge::half_space();
        for t in [-0.7, 0.0, 0.4] {
            assert!(close(wedge_signed_distance(&flat, &[0.3, 0.0, t]), t, 1e-15));
        }
        let w = Wedge::new(0.3, 0.2).unwrap();
        assert_eq!(wedge_signed_distance(&w, &[0.0, 0.0]), 0.0);
        let w = Wedge::new(0.0, PI / 4.0).unwrap();
        assert!(close(wedge_signed_distance(&w, &[0.0, 0.0, -1.0]), -SQRT_HALF, 1e-15));
        // outside, nearest point is the apex
        let d = wedge_signed_distance(&w, &[0.0, 0.0, 2.0]);
        assert!(close(d, 2.0, 1e-15));
    }

    #[test]
    fn sharp_wedge_examples() {
        let w = sharp_wedge(FRAC_PI_2 - 0.1).unwrap();
        assert!(close(w.gamma(), 0.0, 0.0) && close(w.theta(), 0.1, 1e-15));
        let w = sharp_wedge(FRAC_PI_2 - 1e-13).unwrap();
        assert!(w.theta() < 1e-12);
        let w = sharp_wedge(0.01).unwrap();
        assert!(close(w.theta(), FRAC_PI_2 - 0.01, 1e-15));
        for k in 0..=100 {
            let z = -(k as f64) / 100.0;
            assert!(wedge_contains(&w, &[0.4, 0.0, z]).unwrap());
        }
        assert!(sharp_wedge(0.0).is_err());
        assert!(sharp_wedge(FRAC_PI_2).is_err());
    }

    fn lattice(r: f64, m: usize) -> PointCloud {
        let mut c = PointCloud::new(2);
        for i in 0..=m {
            for j in 0..=m {
                let y = -r + 2.0 * r * i as f64 / m as f64;
                let z = -r + 2.0 * r * j as f64 / m as f64;
                c.push(&[y, z]).unwrap();
            }
        }
        c
    }

    fn wedge_boundary(w: &Wedge, r: f64, m: usize) -> PointCloud {
        let mut c = PointCloud::new(2);
        let (ra, rb) = w.face_rays();
        for k in 0..=m {
            let s = r * k as f64 / m as f64;
            c.push(&[s * ra[0], s * ra[1]]).unwrap();
            c.push(&[s * rb[0], s * rb[1]]).unwrap();
        }
        c
    }

    #[test]
    fn closeness_examples() {
        let w = Wedge::new(0.3, 0.2).unwrap();
        let grid = lattice(1.0, 80);
        let labels: Vec<bool> = grid.iter().map(|p| w.contains_planar(p[0], p[1])).collect();
        let rep = closeness(Sample::Labeled(&grid, &labels), &w, 1.0).unwrap();
        assert_eq!(rep.epsilon, 0.0);

        let flat = Wedge::half_space();
        let t = 0.125;
        let labels: Vec<bool> = grid.iter().map(|p| p[1] <= t).collect();
        let rep = closeness(Sample::Labeled(&grid, &labels), &flat, 1.0).unwrap();
        assert!(close(rep.epsilon, t, 1e-12));

        // Λ_{0,0.1} against the half-space: deepest deviation at the unit ray tip.
        let thin = Wedge::new(0.0, 0.1).unwrap();
        let cloud = wedge_boundary(&thin, 1.0, 200);
        let rep = closeness(Sample::Boundary(&cloud), &flat, 1.0).unwrap();
        assert!(close(rep.epsilon, sin(0.1), 1e-12));

        let empty = PointCloud::new(2);
        assert!(closeness(Sample::Boundary(&empty), &flat, 1.0).is_err());
    }

    #[test]
    fn fit_recovers_member_of_search_family() {
        let target = Wedge::new(0.2, 0.3).unwrap();
        let cloud = wedge_boundary(&target, 1.0, 100);
        let (w, eps) = fit_wedge(&cloud, 1.0).unwrap();
        let (dg, dt) = fit_grid_step();
        assert!((w.gamma() - 0.2).abs() <= dg && (w.theta() - 0.3).abs() <= dt);
        assert!(eps <= 1e-6, "eps = {eps}");

        let mut plane = PointCloud::new(3);
        for i in 0..=40 {
            for j in 0..=40 {
                let x = -0.7 + 1.4 * i as f64 / 40.0;
                let y = -0.7 + 1.4 * j as f64 / 40.0;
                plane.push(&[x, y, 0.0]).unwrap();
            }
        }
        let (w, eps) = fit_wedge(&plane, 1.0).unwrap();
        assert!(w.theta() < 1e-6 && w.gamma().abs() < 1e-6 && eps < 1e-6);
    }

    #[test]
    fn fit_rejects_degenerate_clouds() {
        let c = PointCloud::from_points(2, [[0.0, 0.0].as_slice(), &[0.0, 0.0]]).unwrap();
        assert!(fit_wedge(&c, 1.0).is_err());
        assert!(fit_wedge(&PointCloud::new(2), 1.0).is_err());
    }

    #[test]
    fn fit_under_noise_is_within_noise_plus_resolution() {
        // Deterministic pseudo-noise of amplitude a applied to the boundary.
        let target = Wedge::new(0.2, 0.3).unwrap();
        let clean = wedge_boundary(&target, 0.95, 120);
        let a = 0.01;
        let mut noisy = PointCloud::new(2);
        let mut state = 12345u64;
        for p in clean.iter() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
            noisy.push(&[p[0], p[1] + a * u]).unwrap();
        }
        let (_, eps) = fit_wedge(&noisy, 1.0).unwrap();
        // Brute-force sweep: the noiseless wedge itself achieves <= a.
        let oracle = boundary_epsilon(&target, &noisy.planar_in_ball(1.0));
        assert!(oracle <= a + 1e-12);
        let (dg, _) = fit_grid_step();
        assert!(eps <= a + dg * 1e-3, "eps = {eps}");
        assert!(eps <= oracle + 1e-9);
    }

    proptest! {
        #[test]
        fn containment_matches_signed_distance(
            g in -1.5f64..1.5, tf in 0.0f64..1.0, y in -2.0f64..2.0, z in -2.0f64..2.0
        ) {
            let theta = tf * (FRAC_PI_2 - g.abs());
            let w = Wedge::new(g, theta).unwrap();
            let inside = w.contains_planar(y, z);
            let sd = w.signed_distance_planar(y, z);
            prop_assert!(inside == (sd <= 0.0) || sd.abs() < 1e-12);
        }

        #[test]
        fn unit_direction_has_unit_norm(omega in -10.0f64..10.0, n in 2usize..7) {
            let v = unit_direction(omega, n).unwrap();
            prop_assert!((norm(&v) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sharp_wedge_contains_obstacle(delta in 1e-4f64..1.5, s in 0.0f64..3.0, x in -2.0f64..2.0) {
            let w = sharp_wedge(delta).unwrap();
            prop_assert!(wedge_contains(&w, &[x, 0.0, -s]).unwrap());
        }

        #[test]
        fn closeness_monotone_under_sandwich(t1 in -0.3f64..0.0, t2 in 0.0f64..0.3, s in 0.0f64..1.0) {
            // A = {z <= t1} ⊂ B = {z <= t1 + s(t2 - t1)} ⊂ C = {z <= t2}
            let tb = t1 + s * (t2 - t1);
            let grid = lattice(1.0, 30);
            let eps_of = |t: f64| {
                let labels: Vec<bool> = grid.iter().map(|p| p[1] <= t).collect();
                closeness(Sample::Labeled(&grid, &labels), &Wedge::half_space(), 1.0).unwrap().epsilon
            };
            prop_assert!(eps_of(tb) <= eps_of(t1).max(eps_of(t2)) + 1e-15);
        }

        #[test]
        fn fit_recovers_exact_wedges(g in -0.6f64..0.6, tf in 0.05f64..0.9) {
            let theta = tf * (FRAC_PI_2 - g.abs() - 0.05);
            let target = Wedge::new(g, theta).unwrap();
            let cloud = wedge_boundary(&target, 1.0, 40);
            let (w, _) = fit_wedge(&cloud, 1.0).unwrap();
            let (dg, dt) = fit_grid_step();
            prop_assert!((w.gamma() - g).abs() <= dg);
            prop_assert!((w.theta() - theta).abs() <= dt);
        }
    }
}
