//! Planar geometry kernel: points, half-planes, convex polygons, circumdisks.
//!
//! Everything is binary64. Degeneracy tests use [`EPS_GEOM`] relative to the
//! local length scale.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

pub mod voronoi;

/// Relative tolerance for collinearity and duplicate-vertex tests.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("coincident points")]
    Coincident,
    #[error("degenerate triangle (collinear points)")]
    Collinear,
    #[error("need at least two sites, got {0}")]
    TooFewSites(usize),
    #[error("cell still unbounded after {doublings} radius doublings (radius {radius})")]
    Unbounded { doublings: u32, radius: f64 },
}

pub type Result<T> = std::result::Result<T, GeomError>;

/// A point of the plane, also used as a complex number `re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PlanarPoint {
    pub re: f64,
    pub im: f64,
}

impl PlanarPoint {
    pub const ZERO: PlanarPoint = PlanarPoint { re: 0.0, im: 0.0 };
    pub const ONE: PlanarPoint = PlanarPoint { re: 1.0, im: 0.0 };
    pub const I: PlanarPoint = PlanarPoint { re: 0.0, im: 1.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(r * c, r * s)
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.re * other.re + self.im * other.im
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.re * other.im - self.im * other.re
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for PlanarPoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for PlanarPoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for PlanarPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl Mul<f64> for PlanarPoint {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }
}

impl Mul for PlanarPoint {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Div for PlanarPoint {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        Self::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

impl Div<f64> for PlanarPoint {
    type Output = Self;
    fn div(self, k: f64) -> Self {
        Self::new(self.re / k, self.im / k)
    }
}

/// `{ζ : |ζ − anchor| ≤ |ζ − other|}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub anchor: PlanarPoint,
    pub other: PlanarPoint,
}

impl HalfPlane {
    pub fn new(anchor: PlanarPoint, other: PlanarPoint) -> Result<Self> {
        if anchor == other {
            return Err(GeomError::Coincident);
        }
        Ok(Self { anchor, other })
    }

    fn constraint(&self) -> LinearConstraint {
        let normal = self.other - self.anchor;
        let mid = (self.anchor + self.other) * 0.5;
        LinearConstraint {
            normal,
            offset: normal.dot(mid),
        }
    }
}

/// `{p : normal·p ≤ offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LinearConstraint {
    pub normal: PlanarPoint,
    pub offset: f64,
}

impl LinearConstraint {
    fn eval(&self, p: PlanarPoint) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disk {
    pub center: PlanarPoint,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, p: PlanarPoint) -> bool {
        p.distance(self.center) <= self.radius
    }
}

/// Counter-clockwise convex polygon; fewer than three vertices means empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<PlanarPoint>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Wraps vertices already in counter-clockwise order.
    pub fn from_ccw(vertices: Vec<PlanarPoint>) -> Self {
        let mut poly = Self { vertices };
        poly.dedup();
        poly
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self::from_ccw(vec![
            PlanarPoint::new(x0, y0),
            PlanarPoint::new(x1, y0),
            PlanarPoint::new(x1, y1),
            PlanarPoint::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[PlanarPoint] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn translate(&self, by: PlanarPoint) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v + by).collect(),
        }
    }

    /// Maps every vertex; `reverse` restores counter-clockwise order after a reflection.
    pub fn map(&self, f: impl Fn(PlanarPoint) -> PlanarPoint, reverse: bool) -> Self {
        let mut vertices: Vec<_> = self.vertices.iter().map(|&v| f(v)).collect();
        if reverse {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn max_distance_from(&self, p: PlanarPoint) -> f64 {
        self.vertices.iter().map(|v| v.distance(p)).fold(0.0, f64::max)
    }

    fn scale(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.re.abs().max(v.im.abs()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    }

    fn dedup(&mut self) {
        let tol = EPS_GEOM * 1e-3 * self.scale();
        let mut out: Vec<PlanarPoint> = Vec::with_capacity(self.vertices.len());
        for &v in &self.vertices {
            if out.last().is_none_or(|&l: &PlanarPoint| l.distance(v) > tol) {
                out.push(v);
            }
        }
        while out.len() > 1 && out[0].distance(out[out.len() - 1]) <= tol {
            out.pop();
        }
        self.vertices = out;
    }

    /// Convexity and orientation within tolerance.
    pub fn is_valid(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let n = self.vertices.len();
        let s = self.scale();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            (b - a).cross(c - b) >= -EPS_GEOM * s * s
        })
    }

    pub fn contains(&self, p: PlanarPoint) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a) >= 0.0
        })
    }

    /// Strictly inside, with a relative margin.
    pub fn contains_strictly(&self, p: PlanarPoint) -> bool {
        if self.is_empty() {
            return false;
        }
        let n = self.vertices.len();
        let s = self.scale();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a) > EPS_GEOM * s * (b - a).norm()
        })
    }

    fn edge_constraints(&self) -> impl Iterator<Item = LinearConstraint> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| {
            let a = self.vertices[i];
            let e = self.vertices[(i + 1) % n] - a;
            let normal = PlanarPoint::new(e.im, -e.re);
            LinearConstraint {
                normal,
                offset: normal.dot(a),
            }
        })
    }
}

/// Sutherland–Hodgman against one constraint, carrying a label per edge.
///
/// `labels[i]` belongs to the edge from `vertices[i]` to `vertices[i+1]`;
/// edges created along the clip line get `new_label`.
pub(crate) fn clip_labeled<L: Clone>(
    vertices: &[PlanarPoint],
    labels: &[L],
    c: &LinearConstraint,
    new_label: L,
) -> (Vec<PlanarPoint>, Vec<L>) {
    let n = vertices.len();
    let mut out_v = Vec::with_capacity(n + 1);
    let mut out_l = Vec::with_capacity(n + 1);
    if n < 3 {
        return (out_v, out_l);
    }
    let vals: Vec<f64> = vertices.iter().map(|&p| c.eval(p)).collect();
    if vals.iter().all(|&v| v <= 0.0) {
        return (vertices.to_vec(), labels.to_vec());
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let (cur, next) = (vertices[i], vertices[j]);
        let (sc, sn) = (vals[i], vals[j]);
        let crossing = || {
            let t = sc / (sc - sn);
            cur + (next - cur) * t
        };
        match (sc <= 0.0, sn <= 0.0) {
            (true, true) => {
                out_v.push(cur);
                out_l.push(labels[i].clone());
            }
            (true, false) => {
                out_v.push(cur);
                out_l.push(labels[i].clone());
                if sc < 0.0 {
                    out_v.push(crossing());
                    out_l.push(new_label.clone());
                } else if let Some(last) = out_l.last_mut() {
                    // cur sits on the line: the edge leaving it follows the line
                    *last = new_label.clone();
                }
            }
            (false, true) => {
                if sn < 0.0 {
                    out_v.push(crossing());
                    out_l.push(labels[i].clone());
                }
            }
            (false, false) => {}
        }
    }
    if out_v.len() < 3 {
        out_v.clear();
        out_l.clear();
    }
    (out_v, out_l)
}

fn clip_constraint(poly: &ConvexPolygon, c: &LinearConstraint) -> ConvexPolygon {
    let labels = vec![(); poly.vertices.len()];
    let (v, _) = clip_labeled(&poly.vertices, &labels, c, ());
    ConvexPolygon::from_ccw(v)
}

/// `poly ∩ hp`.
pub fn clip(poly: &ConvexPolygon, hp: &HalfPlane) -> ConvexPolygon {
    clip_constraint(poly, &hp.constraint())
}

/// Restricts `poly` to an axis-aligned rectangle.
pub fn clip_to_rect(poly: &ConvexPolygon, x0: f64, x1: f64, y0: f64, y1: f64) -> ConvexPolygon {
    let cs = [
        LinearConstraint { normal: PlanarPoint::new(1.0, 0.0), offset: x1 },
        LinearConstraint { normal: PlanarPoint::new(-1.0, 0.0), offset: -x0 },
        LinearConstraint { normal: PlanarPoint::new(0.0, 1.0), offset: y1 },
        LinearConstraint { normal: PlanarPoint::new(0.0, -1.0), offset: -y0 },
    ];
    cs.iter().fold(poly.clone(), |p, c| clip_constraint(&p, c))
}

/// Shoelace area.
pub fn area(poly: &ConvexPolygon) -> f64 {
    if poly.is_empty() {
        return 0.0;
    }
    let v = &poly.vertices;
    let n = v.len();
    // centered at the first vertex to limit cancellation far from the origin
    let o = v[0];
    let twice: f64 = (1..n - 1).map(|i| (v[i] - o).cross(v[i + 1] - o)).sum();
    0.5 * twice
}

pub fn intersection(a: &ConvexPolygon, b: &ConvexPolygon) -> ConvexPolygon {
    if a.is_empty() || b.is_empty() {
        return ConvexPolygon::empty();
    }
    b.edge_constraints().fold(a.clone(), |p, c| {
        if p.is_empty() {
            p
        } else {
            clip_constraint(&p, &c)
        }
    })
}

/// `|poly ∩ disk|`, exact up to rounding.
///
/// Sums over the edges the signed area of triangle `(center, a, b)`
/// intersected with the disk: pieces of the edge inside the circle add a
/// triangle, pieces outside add a circular sector.
pub fn disk_intersection_area(poly: &ConvexPolygon, disk: &Disk) -> f64 {
    if poly.is_empty() || disk.radius <= 0.0 {
        return 0.0;
    }
    let v = &poly.vertices;
    let n = v.len();
    let r = disk.radius;
    let mut total = 0.0;
    for i in 0..n {
        let a = v[i] - disk.center;
        let b = v[(i + 1) % n] - disk.center;
        let d = b - a;
        // |a + t d|² = r² ⇔ t² |d|² + 2t a·d + |a|² − r² = 0
        let (qa, qb, qc) = (d.norm_sqr(), a.dot(d), a.norm_sqr() - r * r);
        let mut cuts = vec![0.0, 1.0];
        let disc = qb * qb - qa * qc;
        if qa > 0.0 && disc > 0.0 {
            let s = disc.sqrt();
            for t in [(-qb - s) / qa, (-qb + s) / qa] {
                if t > 0.0 && t < 1.0 {
                    cuts.push(t);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let p = a + d * w[0];
            let q = a + d * w[1];
            let m = a + d * (0.5 * (w[0] + w[1]));
            total += if m.norm_sqr() <= r * r {
                0.5 * p.cross(q)
            } else {
                0.5 * r * r * p.cross(q).atan2(p.dot(q))
            };
        }
    }
    total.abs()
}

/// `|a △ b| = |a| + |b| − 2|a ∩ b|`.
pub fn symmetric_difference_area(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let d = area(a) + area(b) - 2.0 * area(&intersection(a, b));
    d.max(0.0)
}

/// `Arg((w1 − w2)/(w3 − w2))` in `(−π, π]`.
pub fn angle(w1: PlanarPoint, w2: PlanarPoint, w3: PlanarPoint) -> Result<f64> {
    if w1 == w2 || w3 == w2 {
        return Err(GeomError::Coincident);
    }
    let q = (w1 - w2) / (w3 - w2);
    let a = q.arg();
    // atan2 returns −π for (−x, −0.0)
    Ok(if a <= -std::f64::consts::PI { std::f64::consts::PI } else { a })
}

fn twice_signed_area(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint) -> f64 {
    ((w1 - w0).conj() * (w2 - w0)).im
}

fn check_triangle(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint) -> Result<f64> {
    let im = twice_signed_area(w0, w1, w2);
    let scale = (w1 - w0).norm().max((w2 - w0).norm()).max((w2 - w1).norm());
    if im.abs() <= EPS_GEOM * scale * scale {
        return Err(GeomError::Collinear);
    }
    Ok(im)
}

pub fn circumcenter(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint) -> Result<Disk> {
    check_triangle(w0, w1, w2)?;
    let b = w1 - w0;
    let c = w2 - w0;
    let d = 2.0 * b.cross(c);
    let (b2, c2) = (b.norm_sqr(), c.norm_sqr());
    let rel = PlanarPoint::new((c.im * b2 - b.im * c2) / d, (b.re * c2 - c.re * b2) / d);
    let center = w0 + rel;
    let radius = (rel.norm() + center.distance(w1) + center.distance(w2)) / 3.0;
    Ok(Disk { center, radius })
}

/// `f(w0) = cot ∠(w2, w0, w1)`, the function whose gradient is bounded in the perturbation lemmas.
pub fn cot_angle(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint) -> Result<f64> {
    let im = check_triangle(w0, w1, w2)?;
    let re = ((w1 - w0).conj() * (w2 - w0)).re;
    Ok(re / im)
}

/// `|grad f| = |(w2−w1)(w1−w0)(w2−w0)| / Im(conj(w1−w0)(w2−w0))²`, symmetric in its arguments.
pub fn cot_gradient_norm(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint) -> Result<f64> {
    let im = check_triangle(w0, w1, w2)?;
    let num = (w2 - w1).norm() * (w1 - w0).norm() * (w2 - w0).norm();
    Ok(num / (im * im))
}

/// Whether the segment `pA pB` is a Delaunay edge of `sites`.
///
/// Circles through `pA` and `pB` form a pencil parametrized by the signed
/// offset `t` of the center along the chord's normal. Each other site rules
/// out a half-line of `t`; the edge exists iff an open interval survives.
/// A site exactly on the circle counts as inside, so cocircular quadruples
/// do not produce edges.
pub fn empty_circumdisk(pa: PlanarPoint, pb: PlanarPoint, sites: &[PlanarPoint]) -> Result<bool> {
    if sites.len() < 2 {
        return Err(GeomError::TooFewSites(sites.len()));
    }
    if pa == pb {
        return Err(GeomError::Coincident);
    }
    let mid = (pa + pb) * 0.5;
    let half = (pb - pa) * 0.5;
    let h2 = half.norm_sqr();
    let normal = PlanarPoint::new(-half.im, half.re) / half.norm();
    let tol = EPS_GEOM * half.norm();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for &s in sites {
        if s == pa || s == pb {
            continue;
        }
        let rel = s - mid;
        let sigma = normal.dot(rel);
        let kappa = rel.norm_sqr() - h2;
        // s is inside-or-on the circle with center mid + t·normal iff κ ≤ 2tσ
        if sigma.abs() <= tol * 1e-3 {
            if kappa <= 0.0 {
                return Ok(false);
            }
            continue;
        }
        let t = kappa / (2.0 * sigma);
        if sigma > 0.0 {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
    }
    Ok(hi - lo > tol)
}
