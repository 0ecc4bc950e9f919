//! Exact relative-perimeter minimisers in the unit disk with a radial thin
//! obstacle.
//!
//! The obstacle is the slit from the origin (the tip) to the foot `e_obs` on
//! the circle. Its δ-thickening is the sector of half-angle δ around the
//! slit, with corners `q± = e_{obs ± δ}` on the circle. A set `E` is
//! described by a polyline from `a` to `b` together with the arc of the
//! circle, traversed from `a` to `b` in the declared orientation, that bounds
//! `E` on the outside. Minimisers are shortest polylines on the visibility
//! graph of `{a, b, tip, q+, q−}` whose region contains the obstacle. The
//! trace outside the disk stays fixed as δ varies, so when the sector hangs
//! from the complementary arc the boundary runs along the circle between
//! `q+` and `q−` and that arc counts toward the length.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::grid::segment_length_in_disk;
use crate::math::{atan2, cos, sin, sqrt, wrap_tau, FRAC_PI_2, PI, TAU};

/// Geometric slack for visibility and touching tests.
pub const GEOM_EPS: f64 = 1e-12;
/// Length difference below which two paths count as tied.
pub const TIE_EPS: f64 = 1e-12;

pub type Point = [f64; 2];

/// Orientation of the arc of `E`'s trace, from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Ccw,
    Cw,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Ccw => 1.0,
            Side::Cw => -1.0,
        }
    }
}

fn default_obstacle() -> f64 {
    -90.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    pub a_deg: f64,
    pub b_deg: f64,
    pub side: Side,
    #[serde(default = "default_obstacle")]
    pub obstacle_deg: f64,
    /// Thickening angle in radians.
    #[serde(default)]
    pub delta: f64,
}

impl PlanarConfig {
    pub fn new(a_deg: f64, b_deg: f64, side: Side) -> Self {
        PlanarConfig {
            a_deg,
            b_deg,
            side,
            obstacle_deg: default_obstacle(),
            delta: 0.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_obstacle(mut self, obstacle_deg: f64) -> Self {
        self.obstacle_deg = obstacle_deg;
        self
    }

    pub fn slit(&self) -> Slit {
        Slit {
            foot: on_circle(self.obstacle_deg.to_radians()),
        }
    }
}

/// The thin obstacle `{t e_obs : 0 ≤ t ≤ 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slit {
    pub foot: Point,
}

impl Slit {
    pub fn tip(&self) -> Point {
        [0.0, 0.0]
    }
}

pub fn on_circle(angle: f64) -> Point {
    [cos(angle), sin(angle)]
}

fn sub(p: Point, q: Point) -> Point {
    [p[0] - q[0], p[1] - q[1]]
}

fn cross(u: Point, v: Point) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn dot(u: Point, v: Point) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn dist(p: Point, q: Point) -> f64 {
    let d = sub(p, q);
    sqrt(dot(d, d))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Distance from `p` to the segment `s0 s1`.
pub fn point_segment_distance(p: Point, s0: Point, s1: Point) -> f64 {
    let d = sub(s1, s0);
    let l2 = dot(d, d);
    if l2 == 0.0 {
        return dist(p, s0);
    }
    let t = (dot(sub(p, s0), d) / l2).clamp(0.0, 1.0);
    dist(p, [s0[0] + t * d[0], s0[1] + t * d[1]])
}

/// A subset of the closed unit disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanarSet {
    Empty,
    FullDisk,
    /// Bounded by `boundary` (from `a` to `b`) and the arc from `a` to `b`
    /// in orientation `side`. Edges listed in `arcs` follow the minor arc of
    /// the circle between their endpoints instead of the chord.
    Region {
        boundary: Vec<Point>,
        side: Side,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        arcs: Vec<usize>,
    },
}

impl PlanarSet {
    pub fn region(boundary: Vec<Point>, side: Side) -> Result<Self> {
        Self::region_with_arcs(boundary, side, Vec::new())
    }

    pub fn region_with_arcs(boundary: Vec<Point>, side: Side, arcs: Vec<usize>) -> Result<Self> {
        if boundary.len() < 2 {
            bail!(Input, "a region boundary needs at least two vertices");
        }
        for p in [boundary[0], boundary[boundary.len() - 1]] {
            if (dot(p, p) - 1.0).abs() > 1e-9 {
                bail!(Input, "boundary endpoints must lie on the unit circle");
            }
        }
        if boundary.iter().any(|p| dot(*p, *p) > 1.0 + 1e-9) {
            bail!(Input, "boundary leaves the closed unit disk");
        }
        for &i in &arcs {
            if i + 1 >= boundary.len() {
                bail!(Input, "arc edge {i} out of range");
            }
            if [boundary[i], boundary[i + 1]].iter().any(|p| (dot(*p, *p) - 1.0).abs() > 1e-9) {
                bail!(Input, "arc edge {i} does not join two points of the circle");
            }
        }
        Ok(PlanarSet::Region { boundary, side, arcs })
    }

    pub fn boundary(&self) -> &[Point] {
        match self {
            PlanarSet::Region { boundary, .. } => boundary,
            _ => &[],
        }
    }

    /// Indices of edges that run along the circle.
    pub fn arc_edges(&self) -> &[usize] {
        match self {
            PlanarSet::Region { arcs, .. } => arcs,
            _ => &[],
        }
    }

    /// Straight edges of the boundary, which are its part inside the open disk.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let arcs = self.arc_edges();
        self.boundary()
            .windows(2)
            .enumerate()
            .filter(move |(i, _)| !arcs.contains(i))
            .map(|(_, w)| (w[0], w[1]))
    }

    /// Boundary length: straight edges plus edges along the circle, where
    /// `E` disagrees with its fixed trace.
    pub fn length(&self) -> f64 {
        let b = self.boundary();
        let arcs: f64 = self
            .arc_edges()
            .iter()
            .map(|&i| angular_distance(angle(b[i]), angle(b[i + 1])))
            .sum();
        self.segments().map(|(p, q)| dist(p, q)).sum::<f64>() + arcs
    }

    /// Length of the boundary inside the open disk.
    pub fn interior_length(&self) -> f64 {
        self.segments().map(|(p, q)| dist(p, q)).sum()
    }

    /// Boundary length inside the ball `B_r(center)`.
    pub fn length_in_ball(&self, center: Point, r: f64) -> f64 {
        self.segments()
            .map(|(p, q)| segment_length_in_disk(sub(p, center), sub(q, center), r))
            .sum()
    }

    /// Whether `p` lies within [`GEOM_EPS`] of a straight boundary edge.
    pub fn on_boundary(&self, p: Point) -> bool {
        self.segments().any(|(s0, s1)| point_segment_distance(p, s0, s1) <= GEOM_EPS)
    }

    /// Membership in the closed set, for `p` in the closed disk.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            PlanarSet::Empty => false,
            PlanarSet::FullDisk => dot(p, p) <= 1.0 + GEOM_EPS,
            PlanarSet::Region { boundary, side, arcs } => {
                if self.on_boundary(p) {
                    return true;
                }
                let a = boundary[0];
                let b = boundary[boundary.len() - 1];
                if dot(p, p) > 1.0 - GEOM_EPS {
                    // on the circle: inside on the declared arc and on glued arcs
                    let ang = angle(p);
                    return on_arc(ang, angle(a), angle(b), *side, 0.0)
                        || arcs.iter().any(|&i| between_minor(p, boundary[i], boundary[i + 1]));
                }
                // the segment cut off by a glued arc lies in E
                if arcs.iter().any(|&i| beyond_chord(p, boundary[i], boundary[i + 1])) {
                    return true;
                }
                let mut w = 0.0;
                for s in boundary.windows(2) {
                    let u = sub(s[0], p);
                    let v = sub(s[1], p);
                    w += atan2(cross(u, v), dot(u, v));
                }
                // the closing arc runs from b back to a against `side`
                let (pa, pb) = (sub(a, p), sub(b, p));
                let back = -side.sign();
                w += back * wrap_tau(back * (angle(pa) - angle(pb)));
                (w / TAU).abs() > 0.5
            }
        }
    }

    /// Area by Green's theorem; arcs contribute half their signed sweep.
    pub fn area(&self) -> f64 {
        match self {
            PlanarSet::Empty => 0.0,
            PlanarSet::FullDisk => PI,
            PlanarSet::Region { boundary, side, arcs } => {
                let mut twice = 0.0;
                for s in boundary.windows(2) {
                    twice += cross(s[0], s[1]);
                }
                let a = angle(boundary[0]);
                let b = angle(boundary[boundary.len() - 1]);
                let back = -side.sign();
                twice += back * wrap_tau(back * (a - b));
                let segments: f64 = arcs
                    .iter()
                    .map(|&i| {
                        let t = angular_distance(angle(boundary[i]), angle(boundary[i + 1]));
                        0.5 * (t - sin(t))
                    })
                    .sum();
                0.5 * twice.abs() + segments
            }
        }
    }
}

/// Whether the circle point `p` lies on the minor arc from `u` to `v`.
fn between_minor(p: Point, u: Point, v: Point) -> bool {
    let span = angular_distance(angle(u), angle(v));
    angular_distance(angle(p), angle(u)) + angular_distance(angle(p), angle(v)) <= span + 1e-12
}

/// Whether `p` lies strictly between the chord `u v` and its minor arc.
fn beyond_chord(p: Point, u: Point, v: Point) -> bool {
    let mid = [0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])];
    let o = orient(u, v, p);
    let o_center = orient(u, v, [0.0, 0.0]);
    dot(mid, mid) > 0.0 && o * o_center < 0.0 && o.abs() > GEOM_EPS
}

fn angle(p: Point) -> f64 {
    atan2(p[1], p[0])
}

/// Whether angle `x` lies on the arc from `from` to `to` in orientation
/// `side`, at angular distance more than `margin` from both ends.
fn on_arc(x: f64, from: f64, to: f64, side: Side, margin: f64) -> bool {
    let s = side.sign();
    let span = wrap_tau(s * (to - from));
    let pos = wrap_tau(s * (x - from));
    pos > margin && pos < span - margin
}

fn angular_distance(x: f64, y: f64) -> f64 {
    let d = wrap_tau(x - y);
    d.min(TAU - d)
}

/// Vertices of the visibility graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertex {
    A,
    B,
    Tip,
    QPlus,
    QMinus,
}

const VERTICES: [Vertex; 5] = [Vertex::A, Vertex::B, Vertex::Tip, Vertex::QPlus, Vertex::QMinus];

fn vindex(v: Vertex) -> usize {
    VERTICES.iter().position(|w| *w == v).expect("listed")
}

/// A validated configuration with concrete positions.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub config: PlanarConfig,
    a_ang: f64,
    b_ang: f64,
    obs: f64,
    /// Whether the foot of the obstacle lies on `E`'s arc.
    pub foot_on_trace: bool,
}

impl Layout {
    pub fn new(c: &PlanarConfig) -> Result<Self> {
        for (v, what) in [(c.a_deg, "a_deg"), (c.b_deg, "b_deg"), (c.obstacle_deg, "obstacle_deg"), (c.delta, "delta")] {
            if !v.is_finite() {
                bail!(Parameter, "{what} must be finite");
            }
        }
        if !(c.delta >= 0.0 && c.delta < FRAC_PI_2) {
            bail!(Parameter, "delta must lie in [0, pi/2), got {}", c.delta);
        }
        let a_ang = c.a_deg.to_radians();
        let b_ang = c.b_deg.to_radians();
        let obs = c.obstacle_deg.to_radians();
        if angular_distance(a_ang, b_ang) < 1e-12 {
            bail!(Parameter, "trace endpoints a and b coincide");
        }
        for (x, what) in [(a_ang, "a"), (b_ang, "b")] {
            if angular_distance(x, obs) <= c.delta + 1e-12 {
                bail!(
                    Parameter,
                    "trace endpoint {what} lies within the thickened obstacle (angular distance <= delta)"
                );
            }
        }
        Ok(Layout {
            config: *c,
            a_ang,
            b_ang,
            obs,
            foot_on_trace: on_arc(obs, a_ang, b_ang, c.side, 0.0),
        })
    }

    pub fn position(&self, v: Vertex) -> Point {
        let d = self.config.delta;
        match v {
            Vertex::A => on_circle(self.a_ang),
            Vertex::B => on_circle(self.b_ang),
            Vertex::Tip => [0.0, 0.0],
            Vertex::QPlus => on_circle(self.obs + d),
            Vertex::QMinus => on_circle(self.obs - d),
        }
    }

    /// Position with the thickening removed.
    pub fn limit_position(&self, v: Vertex) -> Point {
        match v {
            Vertex::QPlus | Vertex::QMinus => on_circle(self.obs),
            other => self.position(other),
        }
    }

    fn foot(&self) -> Point {
        on_circle(self.obs)
    }

    /// Side of `p` relative to the obstacle line; `q+` is on the positive side.
    fn side_of(&self, p: Point) -> f64 {
        cross(self.foot(), p)
    }

    /// Visibility of the segment `u v`.
    pub fn visible(&self, u: Vertex, v: Vertex) -> bool {
        let (p, r) = (self.position(u), self.position(v));
        if self.config.delta > 0.0 {
            return !crosses_triangle(p, r, [self.position(Vertex::Tip), self.position(Vertex::QMinus), self.position(Vertex::QPlus)]);
        }
        // the zero-width slit: the two copies of the foot leave on their own side
        for (w, other) in [(u, r), (v, p)] {
            let sigma = match w {
                Vertex::QPlus => 1.0,
                Vertex::QMinus => -1.0,
                _ => continue,
            };
            if sigma * self.side_of(other) < -GEOM_EPS {
                return false;
            }
        }
        !properly_crosses(p, r, [0.0, 0.0], self.foot())
    }
}

/// Whether the open segments `p r` and `s0 s1` cross at a single interior point.
fn properly_crosses(p: Point, r: Point, s0: Point, s1: Point) -> bool {
    let d1 = orient(p, r, s0);
    let d2 = orient(p, r, s1);
    let d3 = orient(s0, s1, p);
    let d4 = orient(s0, s1, r);
    ((d1 > GEOM_EPS && d2 < -GEOM_EPS) || (d1 < -GEOM_EPS && d2 > GEOM_EPS))
        && ((d3 > GEOM_EPS && d4 < -GEOM_EPS) || (d3 < -GEOM_EPS && d4 > GEOM_EPS))
}

/// Cyrus–Beck clipping: does segment `p r` pass through the open triangle?
fn crosses_triangle(p: Point, r: Point, tri: [Point; 3]) -> bool {
    let mut t = tri;
    if orient(t[0], t[1], t[2]) < 0.0 {
        t.swap(1, 2);
    }
    let dir = sub(r, p);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..3 {
        let e = sub(t[(i + 1) % 3], t[i]);
        // inside: cross(e, x − v) ≥ 0
        let f0 = cross(e, sub(p, t[i]));
        let df = cross(e, dir);
        if df.abs() < 1e-300 {
            if f0 < 0.0 {
                return false;
            }
            continue;
        }
        let tc = -f0 / df;
        if df > 0.0 {
            t0 = t0.max(tc);
        } else {
            t1 = t1.min(tc);
        }
    }
    if t1 - t0 <= GEOM_EPS {
        return false;
    }
    let tm = 0.5 * (t0 + t1);
    let m = [p[0] + tm * dir[0], p[1] + tm * dir[1]];
    (0..3).all(|i| {
        let e = sub(t[(i + 1) % 3], t[i]);
        cross(e, sub(m, t[i])) > GEOM_EPS * sqrt(dot(e, e))
    })
}

/// Shortest paths from `src` over `allowed` vertices; all tight paths to `dst`.
fn shortest_paths(l: &Layout, src: Vertex, dst: Vertex, allowed: &[Vertex]) -> Option<(f64, Vec<Vec<Vertex>>)> {
    let n = VERTICES.len();
    let ok = |v: Vertex| allowed.contains(&v);
    let weight = |u: Vertex, v: Vertex| -> Option<f64> {
        if u == v || !ok(u) || !ok(v) {
            return None;
        }
        let base = matches!((u, v), (Vertex::QPlus, Vertex::QMinus) | (Vertex::QMinus, Vertex::QPlus));
        if base || !l.visible(u, v) {
            return None;
        }
        Some(dist(l.position(u), l.position(v)))
    };
    // Dijkstra from dst, so tight edges can be followed forward from src.
    let mut d = [f64::INFINITY; 5];
    let mut done = [false; 5];
    d[vindex(dst)] = 0.0;
    for _ in 0..n {
        let mut best = None;
        for i in 0..n {
            if !done[i] && d[i].is_finite() && best.is_none_or(|b: usize| d[i] < d[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        done[i] = true;
        for j in 0..n {
            if let Some(w) = weight(VERTICES[i], VERTICES[j]) {
                if d[i] + w < d[j] {
                    d[j] = d[i] + w;
                }
            }
        }
    }
    let total = d[vindex(src)];
    if !total.is_finite() {
        return None;
    }
    let mut paths = Vec::new();
    let mut stack = alloc::vec![src];
    collect_tight(&weight, &d, dst, &mut stack, &mut paths);
    Some((total, paths))
}

fn collect_tight<W: Fn(Vertex, Vertex) -> Option<f64>>(
    weight: &W,
    d: &[f64; 5],
    dst: Vertex,
    stack: &mut Vec<Vertex>,
    out: &mut Vec<Vec<Vertex>>,
) {
    let u = *stack.last().expect("nonempty");
    if u == dst {
        out.push(stack.clone());
        return;
    }
    for v in VERTICES {
        if stack.contains(&v) {
            continue;
        }
        if let Some(w) = weight(u, v) {
            if w + d[vindex(v)] <= d[vindex(u)] + TIE_EPS {
                stack.push(v);
                collect_tight(weight, d, dst, stack, out);
                stack.pop();
            }
        }
    }
}

/// A minimiser with its vertex labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TautPath {
    pub set: PlanarSet,
    pub labels: Vec<Vertex>,
    pub length: f64,
    /// Another path of equal length (within [`TIE_EPS`]) was discarded.
    pub tied: bool,
}

/// Vertex positions with repeats merged, and the edges that follow the circle.
fn polyline(l: &Layout, labels: &[Vertex], limit: bool) -> (Vec<Point>, Vec<usize>) {
    let mut pts: Vec<Point> = Vec::new();
    let mut arcs = Vec::new();
    let mut prev: Option<Vertex> = None;
    for v in labels {
        let p = if limit { l.limit_position(*v) } else { l.position(*v) };
        if pts.last().is_none_or(|q| dist(*q, p) > GEOM_EPS) {
            if matches!((prev, v), (Some(Vertex::QPlus), Vertex::QMinus) | (Some(Vertex::QMinus), Vertex::QPlus)) {
                arcs.push(pts.len() - 1);
            }
            pts.push(p);
        }
        prev = Some(*v);
    }
    (pts, arcs)
}

pub fn taut_minimizer(c: &PlanarConfig) -> Result<PlanarSet> {
    taut_path(c).map(|t| t.set)
}

/// Shortest admissible boundary for `c`, ties broken toward the larger region.
pub fn taut_path(c: &PlanarConfig) -> Result<TautPath> {
    let l = Layout::new(c)?;
    use Vertex::*;
    let mut candidates: Vec<(f64, Vec<Vertex>)> = Vec::new();
    if l.foot_on_trace {
        // The obstacle hangs from E's own arc: avoid it.
        if let Some((len, paths)) = shortest_paths(&l, A, B, &[A, B, Tip]) {
            candidates.extend(paths.into_iter().map(|p| (len, p)));
        }
    } else {
        // The obstacle hangs from the complementary arc, so the boundary
        // runs through both corners of the sector and along the circle.
        for (q1, q2) in [(QPlus, QMinus), (QMinus, QPlus)] {
            let first = shortest_paths(&l, A, q1, &[A, Tip, q1]);
            let second = shortest_paths(&l, q2, B, &[q2, Tip, B]);
            if let (Some((l1, p1)), Some((l2, p2))) = (first, second) {
                for s1 in &p1 {
                    for s2 in &p2 {
                        if s1.contains(&Tip) && s2.contains(&Tip) {
                            continue;
                        }
                        let mut seq = s1.clone();
                        seq.extend(s2.iter().copied());
                        candidates.push((l1 + 2.0 * c.delta + l2, seq));
                    }
                }
            }
        }
    }
    if candidates.is_empty() {
        bail!(Input, "no admissible boundary exists for this side declaration");
    }
    let best = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let mut chosen: Option<(f64, TautPath)> = None;
    let mut distinct = 0usize;
    let mut seen: Vec<Vec<Point>> = Vec::new();
    for (len, labels) in candidates.into_iter().filter(|c| c.0 <= best + TIE_EPS) {
        let (pts, arcs) = polyline(&l, &labels, false);
        if !seen.iter().any(|s| same_polyline(s, &pts)) {
            seen.push(pts.clone());
            distinct += 1;
        }
        let set = PlanarSet::region_with_arcs(pts, c.side, arcs)?;
        let area = set.area();
        if chosen.as_ref().is_none_or(|(a, _)| area > *a + TIE_EPS) {
            chosen = Some((
                area,
                TautPath {
                    set,
                    labels,
                    length: len,
                    tied: false,
                },
            ));
        }
    }
    let (_, mut path) = chosen.expect("at least one candidate");
    path.tied = distinct > 1;
    Ok(path)
}

fn same_polyline(a: &[Point], b: &[Point]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| dist(*p, *q) <= 1e-12)
}

/// `P(F; B₁) + 2 H¹(O \ F)`, with `F` taken closed.
pub fn degiorgi_perimeter(s: &PlanarSet, obstacle: &Slit) -> f64 {
    s.length() + 2.0 * uncovered_length(s, obstacle)
}

/// Length of the slit outside the closed set `s`.
pub fn uncovered_length(s: &PlanarSet, obstacle: &Slit) -> f64 {
    let (p0, p1) = (obstacle.tip(), obstacle.foot);
    let dir = sub(p1, p0);
    let len = sqrt(dot(dir, dir));
    // Split the slit where the boundary meets it, then test midpoints.
    let mut cuts = alloc::vec![0.0, 1.0];
    for (w0, w1) in s.segments() {
        let w = [w0, w1];
        for p in [w[0], w[1]] {
            if point_segment_distance(p, p0, p1) <= GEOM_EPS {
                cuts.push((dot(sub(p, p0), dir) / (len * len)).clamp(0.0, 1.0));
            }
        }
        let e = sub(w[1], w[0]);
        let den = cross(dir, e);
        if den.abs() > 1e-300 {
            let t = cross(sub(w[0], p0), e) / den;
            let u = cross(sub(w[0], p0), dir) / den;
            if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
                cuts.push(t.clamp(0.0, 1.0));
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut missed = 0.0;
    for w in cuts.windows(2) {
        if w[1] - w[0] <= 1e-15 {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let m = [p0[0] + tm * dir[0], p0[1] + tm * dir[1]];
        if !s.contains(m) {
            missed += (w[1] - w[0]) * len;
        }
    }
    missed
}

/// One row of a thickening sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub length: f64,
    /// Largest distance between the vertices and their unthickened positions.
    pub vertex_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaLimit {
    /// The vertexwise limit of the minimisers.
    pub limit: PlanarSet,
    pub labels: Vec<Vertex>,
    pub table: Vec<DeltaRow>,
    /// Whether the label sequence was identical over the last three runs.
    pub stabilized: bool,
}

/// Runs [`taut_path`] for each `δ_k` and takes the vertexwise limit.
pub fn delta_limit(c: &PlanarConfig, deltas: &[f64]) -> Result<DeltaLimit> {
    if deltas.is_empty() {
        bail!(Input, "need at least one thickening value");
    }
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        bail!(Parameter, "thickening values must be positive and strictly decreasing");
    }
    let mut table = Vec::new();
    let mut runs: Vec<Vec<Vertex>> = Vec::new();
    let mut last_layout = None;
    for &d in deltas {
        let cfg = c.with_delta(d);
        let l = Layout::new(&cfg)?;
        let t = taut_path(&cfg)?;
        let vertex_distance = t
            .labels
            .iter()
            .map(|v| dist(l.position(*v), l.limit_position(*v)))
            .fold(0.0, f64::max);
        table.push(DeltaRow {
            delta: d,
            length: t.length,
            vertex_distance,
        });
        runs.push(t.labels);
        last_layout = Some(l);
    }
    let l = last_layout.expect("nonempty");
    let labels = runs.last().expect("nonempty").clone();
    let tail = runs.len().min(3);
    let stabilized = runs[runs.len() - tail..].iter().all(|r| *r == labels);
    let (pts, arcs) = polyline(&l, &labels, true);
    let limit = PlanarSet::region_with_arcs(pts, c.side, arcs)?;
    Ok(DeltaLimit {
        limit,
        labels,
        table,
        stabilized,
    })
}

/// Largest vertex distance between two polylines with equally many vertices.
pub fn polyline_distance(a: &PlanarSet, b: &PlanarSet) -> Option<f64> {
    let (pa, pb) = (a.boundary(), b.boundary());
    if pa.len() != pb.len() {
        return None;
    }
    Some(pa.iter().zip(pb).map(|(p, q)| dist(*p, *q)).fold(0.0, f64::max))
}

/// Whether every boundary segment lies on a line through the origin (within `tol`).
pub fn cone_check(s: &PlanarSet, tol: f64) -> bool {
    s.segments().all(|(p, q)| {
        let d = sub(q, p);
        let l = sqrt(dot(d, d));
        l == 0.0 || cross(d, sub([0.0, 0.0], p)).abs() / l <= tol
    })
}

/// Disjoint arcs of the unit circle, each given as `(start, length)` in
/// radians, listed counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    arcs: Vec<(f64, f64)>,
}

impl Trace {
    pub fn new(mut arcs: Vec<(f64, f64)>) -> Result<Self> {
        if arcs.is_empty() {
            bail!(Input, "a trace needs at least one arc");
        }
        for a in arcs.iter_mut() {
            if !(a.1 > 0.0) {
                bail!(Input, "arc lengths must be positive");
            }
            a.0 = wrap_tau(a.0);
        }
        arcs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
        let t = Trace { arcs };
        let total: f64 = t.arcs.iter().map(|a| a.1).sum::<f64>() + t.gaps().iter().sum::<f64>();
        if (total - TAU).abs() > 1e-9 || t.gaps().iter().any(|g| *g <= 0.0) {
            bail!(Input, "arcs overlap");
        }
        Ok(t)
    }

    /// Angular gaps between consecutive arcs.
    pub fn gaps(&self) -> Vec<f64> {
        let n = self.arcs.len();
        (0..n)
            .map(|i| {
                let (s, len) = self.arcs[i];
                if n == 1 {
                    TAU - len
                } else {
                    wrap_tau(self.arcs[(i + 1) % n].0 - s - len)
                }
            })
            .collect()
    }

    /// Perimeter in `B₁` of the cone over the trace: two radii per arc.
    pub fn cone_perimeter(&self) -> f64 {
        2.0 * self.arcs.len() as f64
    }

    /// Perimeter in `B₁` of the convex hull of the trace: one chord per gap.
    pub fn hull_perimeter(&self) -> f64 {
        self.gaps().iter().map(|g| 2.0 * sin(0.5 * g)).sum()
    }
}
