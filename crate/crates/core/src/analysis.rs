//! Diagnostics on solved surfaces: the density ratio `A(r)`, vertical
//! rescalings, blow-up sequences with wedge fits, and the decay rate of
//! closeness under dyadic zooms.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::barriers::DEFAULT_C0;
use crate::error::{bail, Result};
use crate::flatland::PlanarSet;
use crate::geometry::{fit_wedge, PointCloud, Wedge};
use crate::grid::{subgraph_perimeter_in_ball, Field};
use crate::math::{ln, ls_slope, pow, sqrt, PI};

/// Constant `C` in the per-radius slack `C h / r` for graphs.
pub const GRAPH_SLACK: f64 = 10.0;
/// Slack for exact planar polylines.
pub const PLANAR_SLACK: f64 = 1e-12;
/// Boundary samples per radius when building blow-up clouds.
pub const SAMPLES_PER_RADIUS: usize = 24;
/// Smallest feasible blow-up radius, in grid spacings.
pub const MIN_SCALE_NODES: f64 = 4.0;
/// Closeness below which a scale counts as exact.
pub const EXACT_EPS: f64 = 1e-12;

/// A surface as a subgraph over a grid or a planar set.
#[derive(Debug, Clone, Copy)]
pub enum Surface<'a> {
    Graph(&'a Field),
    Planar(&'a PlanarSet),
}

impl Surface<'_> {
    fn ambient(&self) -> usize {
        match self {
            Surface::Graph(f) => f.grid().ambient_dim(),
            Surface::Planar(_) => 2,
        }
    }

    /// Ambient coordinates of the base point: `x'` lifted to the graph, or
    /// a planar point that must lie on the boundary.
    fn anchor(&self, point: &[f64]) -> Result<Vec<f64>> {
        match self {
            Surface::Graph(f) => {
                let d = f.grid().dim();
                if point.len() != d {
                    bail!(Input, "graph point needs {d} coordinates, got {}", point.len());
                }
                let Some(z) = f.interpolate(point) else {
                    bail!(Range, "point lies outside the sampled box");
                };
                let mut x = point.to_vec();
                x.push(z);
                Ok(x)
            }
            Surface::Planar(s) => {
                if point.len() != 2 {
                    bail!(Input, "planar point needs 2 coordinates, got {}", point.len());
                }
                let p = [point[0], point[1]];
                if !s.boundary().windows(2).any(|w| crate::flatland::point_segment_distance(p, w[0], w[1]) <= 1e-9) {
                    bail!(Input, "point ({}, {}) is not on the boundary", p[0], p[1]);
                }
                Ok(point.to_vec())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slack: Vec<f64>,
    /// Indices `i` with `A(r_{i+1}) < A(r_i) − slack_i`.
    pub violations: Vec<usize>,
}

impl MonotonicityProfile {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// `max A − min A`.
    pub fn variation(&self) -> f64 {
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    /// Largest drop `A(r_i) − A(r_{i+1})` over adjacent radii.
    pub fn max_drop(&self) -> f64 {
        self.values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

/// `A(r) = H^{n-1}(∂E ∩ B_r(x∘)) / r^{n-1}` at the given radii.
///
/// Graph centers are given as `x'` and lifted to the graph. Planar balls may
/// not contain either endpoint of the boundary polyline, since the boundary
/// continues along the circle there.
pub fn monotonicity_profile(s: Surface<'_>, center: &[f64], radii: &[f64]) -> Result<MonotonicityProfile> {
    if radii.is_empty() {
        bail!(Input, "need at least one radius");
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        bail!(Parameter, "radii must be positive and finite");
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.total_cmp(b));
    let x0 = s.anchor(center)?;
    let k = (s.ambient() - 1) as i32;
    let mut values = Vec::with_capacity(radii.len());
    let mut slack = Vec::with_capacity(radii.len());
    for &r in &radii {
        let measure = match s {
            Surface::Graph(f) => {
                slack.push(GRAPH_SLACK * f.grid().spacing() / r);
                subgraph_perimeter_in_ball(f, &x0, r)?
            }
            Surface::Planar(set) => {
                slack.push(PLANAR_SLACK);
                let b = set.boundary();
                for p in [b[0], b[b.len() - 1]] {
                    let d = sqrt((p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2));
                    if d < r {
                        bail!(Range, "ball of radius {r} contains a boundary endpoint");
                    }
                }
                set.length_in_ball([x0[0], x0[1]], r)
            }
        };
        values.push(measure / r.powi(k));
    }
    let violations = (0..values.len().saturating_sub(1))
        .filter(|&i| values[i + 1] < values[i] - slack[i])
        .collect();
    Ok(MonotonicityProfile {
        radii,
        values,
        slack,
        violations,
    })
}

/// `u / (2ε)`: the graph of the vertically stretched set `{(x', x_n / 2ε)}`.
pub fn vertical_rescale(u: &Field, epsilon: f64) -> Result<Field> {
    check_epsilon(epsilon)?;
    Ok(u.map(|v| v / (2.0 * epsilon)))
}

/// Inverse of [`vertical_rescale`].
pub fn vertical_unscale(w: &Field, epsilon: f64) -> Result<Field> {
    check_epsilon(epsilon)?;
    Ok(w.map(|v| v * (2.0 * epsilon)))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        bail!(Parameter, "epsilon must be positive and finite, got {epsilon}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupStep {
    pub scale: f64,
    pub wedge: Wedge,
    /// Closeness of `(E − x∘)/r` in `B₁`.
    pub epsilon: f64,
}

/// Samples of `(∂E − x∘)/r` inside `B₁`, or `None` if the scale is infeasible.
fn rescaled_cloud(s: Surface<'_>, x0: &[f64], r: f64) -> Result<Option<PointCloud>> {
    let m = SAMPLES_PER_RADIUS as i64;
    let step = r / m as f64;
    match s {
        Surface::Graph(f) => {
            let g = f.grid();
            let d = g.dim();
            if r < MIN_SCALE_NODES * g.spacing() || (0..d).any(|i| x0[i].abs() + r > g.extent() + 1e-12) {
                return Ok(None);
            }
            let mut cloud = PointCloud::new(d + 1);
            let side = (2 * m + 1) as usize;
            let total = side.pow(d as u32);
            let mut p = Vec::with_capacity(d + 1);
            let mut x = Vec::with_capacity(d);
            for idx in 0..total {
                x.clear();
                let mut rest = idx;
                for i in 0..d {
                    let k = (rest % side) as i64 - m;
                    rest /= side;
                    x.push(x0[i] + k as f64 * step);
                }
                let Some(z) = f.interpolate(&x) else { continue };
                p.clear();
                p.extend((0..d).map(|i| (x[i] - x0[i]) / r));
                p.push((z - x0[d]) / r);
                if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                    cloud.push(&p)?;
                }
            }
            Ok(Some(cloud))
        }
        Surface::Planar(set) => {
            let mut cloud = PointCloud::new(2);
            for (a, b) in set.segments() {
                let len = sqrt((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2));
                let pieces = ((len / step).ceil() as usize).max(1);
                for j in 0..=pieces {
                    let t = j as f64 / pieces as f64;
                    let q = [(a[0] + t * (b[0] - a[0]) - x0[0]) / r, (a[1] + t * (b[1] - a[1]) - x0[1]) / r];
                    if q[0] * q[0] + q[1] * q[1] <= 1.0 {
                        cloud.push(&q)?;
                    }
                }
            }
            let b = set.boundary();
            let far = [b[0], b[b.len() - 1]]
                .iter()
                .all(|p| (p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2) >= r * r);
            Ok(if far && cloud.len() >= 2 { Some(cloud) } else { None })
        }
    }
}

/// Rescales the boundary around `point` by each scale and fits a wedge.
pub fn blowup_sequence(s: Surface<'_>, point: &[f64], scales: &[f64]) -> Result<Vec<BlowupStep>> {
    if scales.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        bail!(Parameter, "scales must be positive and finite");
    }
    let x0 = s.anchor(point)?;
    let mut out = Vec::new();
    for &r in scales {
        let Some(cloud) = rescaled_cloud(s, &x0, r)? else { continue };
        if cloud.is_empty() {
            continue;
        }
        let (wedge, epsilon) = fit_wedge(&cloud, 1.0)?;
        out.push(BlowupStep { scale: r, wedge, epsilon });
    }
    if out.len() < 3 {
        bail!(Range, "only {} of {} scales are feasible; need 3", out.len(), scales.len());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub rho0: f64,
    pub alpha: f64,
    pub eps0: f64,
    pub c0: f64,
    /// Number of scales `ρ∘^k`, `k = 0, …, scales − 1`.
    pub scales: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            rho0: 0.5,
            alpha: 0.4,
            eps0: 0.1,
            c0: DEFAULT_C0,
            scales: 5,
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            bail!(Parameter, "rho0 must lie in (0, 1), got {}", self.rho0);
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            bail!(Parameter, "alpha must lie in (0, 1/2), got {}", self.alpha);
        }
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            bail!(Parameter, "eps0 must be positive, got {}", self.eps0);
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            bail!(Parameter, "C0 must be positive, got {}", self.c0);
        }
        if self.scales < 3 {
            bail!(Parameter, "need at least 3 scales, got {}", self.scales);
        }
        Ok(())
    }

    pub fn scale_list(&self) -> Vec<f64> {
        (0..self.scales).map(|k| pow(self.rho0, k as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementRow {
    pub k: usize,
    pub scale: f64,
    pub gamma: f64,
    pub theta: f64,
    /// Closeness in `B_{scale}` in original units, `scale · ε((E − x∘)/scale)`.
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementTable {
    pub rows: Vec<ImprovementRow>,
    /// Fitted `p` in `ε_k ≈ ε₁ ρ∘^{k(1+p)}`; `None` when every scale is exact.
    pub rate: Option<f64>,
    pub alpha: f64,
    pub pass: bool,
}

/// Closeness decay over the scales `ρ∘^k`, with the rate fitted on `k ≥ 1`.
pub fn improvement_report(s: Surface<'_>, point: &[f64], params: &ExperimentParams) -> Result<ImprovementTable> {
    params.validate()?;
    let scales = params.scale_list();
    let steps = blowup_sequence(s, point, &scales)?;
    let rows: Vec<ImprovementRow> = steps
        .iter()
        .map(|st| {
            let k = scales.iter().position(|r| *r == st.scale).expect("scale from list");
            ImprovementRow {
                k,
                scale: st.scale,
                gamma: st.wedge.gamma(),
                theta: st.wedge.theta(),
                eps: st.scale * st.epsilon,
            }
        })
        .collect();
    let fit: Vec<&ImprovementRow> = rows.iter().filter(|r| r.k >= 1).collect();
    let (rate, pass) = if fit.iter().all(|r| r.eps / r.scale < EXACT_EPS) {
        (None, true)
    } else if fit.iter().any(|r| r.eps <= 0.0) || fit.len() < 2 {
        (None, false)
    } else {
        let xs: Vec<f64> = fit.iter().map(|r| ln(r.scale)).collect();
        let ys: Vec<f64> = fit.iter().map(|r| ln(r.eps)).collect();
        let p = ls_slope(&xs, &ys).map(|s| s - 1.0);
        (p, p.is_some_and(|p| p >= params.alpha))
    };
    Ok(ImprovementTable {
        rows,
        rate,
        alpha: params.alpha,
        pass,
    })
}

/// `A(r)` of a flat hyperplane through the center, `ω_{n-1}`.
pub fn flat_density(n: usize) -> f64 {
    match n {
        2 => 2.0,
        3 => PI,
        4 => 4.0 * PI / 3.0,
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatland::{on_circle, taut_minimizer, PlanarConfig, Side};
    use crate::grid::GridSpec;

    #[test]
    fn planar_wedge_is_constant_two() {
        let s = PlanarSet::region(alloc::vec![on_circle(0.4), [0.0, 0.0], on_circle(2.5)], Side::Ccw).unwrap();
        let radii = [0.1, 0.3, 0.5, 0.9];
        let prof = monotonicity_profile(Surface::Planar(&s), &[0.0, 0.0], &radii).unwrap();
        assert!(prof.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(prof.is_monotone());
    }

    #[test]
    fn flat_graph_is_constant_pi() {
        let g = GridSpec::new(3, 1.0 / 16.0).unwrap();
        let f = Field::zeros(g);
        let prof = monotonicity_profile(Surface::Graph(&f), &[0.1, 0.0], &[0.2, 0.4, 0.6]).unwrap();
        for v in &prof.values {
            assert!((v - PI).abs() < 1e-2, "{v}");
        }
        assert!(prof.variation() <= g.spacing());
    }

    #[test]
    fn bend_profile_is_two_below_the_chord_length() {
        let c = PlanarConfig::new(-45.0, 225.0, Side::Ccw);
        let s = taut_minimizer(&c).unwrap();
        let chord = 2.0 * (0.5 + (1.0 - 0.5f64.sqrt()).powi(2)).sqrt() / 2.0;
        let radii = [0.05, 0.2, 0.5, 0.75];
        let prof = monotonicity_profile(Surface::Planar(&s), &[0.0, -1.0], &radii).unwrap();
        assert!(radii.iter().all(|r| *r < chord));
        assert!(prof.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(monotonicity_profile(Surface::Planar(&s), &[0.0, -1.0], &[0.8]).is_err());
        assert!(monotonicity_profile(Surface::Planar(&s), &[0.3, 0.3], &[0.1]).is_err());
    }

    #[test]
    fn rescale_round_trip() {
        let g = GridSpec::new(3, 1.0 / 8.0).unwrap();
        let u = Field::from_fn(g, |x| x[0] - 0.3 * x[1]);
        let w = vertical_rescale(&u, 0.25).unwrap();
        assert_eq!(vertical_unscale(&w, 0.25).unwrap(), u);
        assert!(vertical_rescale(&Field::zeros(g), 0.1).unwrap().values().iter().all(|v| *v == 0.0));
        assert!(vertical_rescale(&u, 0.0).is_err());
    }

    #[test]
    fn planar_blowup_at_the_tip_is_exact() {
        let s = taut_minimizer(&PlanarConfig::new(-30.0, -150.0, Side::Cw)).unwrap();
        let steps = blowup_sequence(Surface::Planar(&s), &[0.0, 0.0], &[0.5, 0.25, 0.125]).unwrap();
        for st in &steps {
            assert!(st.epsilon < 1e-9, "{st:?}");
        }
    }

    #[test]
    fn too_few_scales_is_a_range_error() {
        let s = taut_minimizer(&PlanarConfig::new(0.0, 180.0, Side::Cw)).unwrap();
        assert!(blowup_sequence(Surface::Planar(&s), &[0.0, 0.0], &[2.0, 3.0, 0.5]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ExperimentParams::default().validate().is_ok());
        let bad = ExperimentParams { alpha: 0.6, ..ExperimentParams::default() };
        assert!(bad.validate().is_err());
        assert_eq!(ExperimentParams::default().scale_list(), alloc::vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
    }
}
