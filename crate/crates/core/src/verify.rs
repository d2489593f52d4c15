//! Randomized certification of the perturbation bounds and of the area
//! convergence law.
//!
//! Every check compares a measured quantity with its proven bound and records
//! a normalized margin: positive means the bound holds with room to spare,
//! negative means a violation. Each suite draws from its own ChaCha8 stream
//! of the user seed, so suites can run in parallel and still give identical
//! reports for identical seeds.
//!
//! `bound_scale` multiplies every bound (and divides every lower bound). It
//! exists so the failure path can be exercised; the proven bounds use 1.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geom::voronoi::certified_cell;
use crate::geom::{
    self, circumcenter, clip, cot_angle, cot_gradient_norm, symmetric_difference_area, ConvexPolygon, GeomError,
    HalfPlane, PlanarPoint,
};
use crate::linlattice::{voronoi_cell_origin, LatticeError};
use crate::spiral::{
    area_rate_constant, area_rate_floor, linear_height, linearization, local_perturbation_floor, phi, to_lambda_mu,
    SiteId, SpiralConfig, SpiralError, SpiralFamily, SpiralSet,
};
use crate::tessellation::{cells_for, family_cell, TessellationError};

pub const DEFAULT_SEED: u64 = 1729;
pub const DEFAULT_SAMPLES: usize = 1000;

/// Largest `Im w` drawn from `D_0`.
pub const V_MAX: f64 = 3.0;

/// Margin recorded when a sample could not be evaluated at all.
const BROKEN: f64 = f64::MIN;

/// Relative tolerance of the finite-difference gradient comparison.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("j_list must span at least two decades")]
    TooFewDecades,
    #[error(transparent)]
    Tessellation(#[from] TessellationError),
    #[error(transparent)]
    Spiral(#[from] SpiralError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random samples per suite; adversarial samples come on top.
    pub samples: usize,
    pub bound_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            bound_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

/// Outcome of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCheck {
    pub passed: bool,
    pub margin: f64,
}

impl SampleCheck {
    /// Passes when `margin ≥ 0`.
    fn at_least(margin: f64) -> Self {
        Self {
            passed: margin >= 0.0,
            margin,
        }
    }

    /// Passes when `margin > 0`, for strict inequalities.
    fn strictly(margin: f64) -> Self {
        Self {
            passed: margin > 0.0,
            margin,
        }
    }

    fn broken() -> Self {
        Self {
            passed: false,
            margin: BROKEN,
        }
    }

    fn and(self, other: Self) -> Self {
        Self {
            passed: self.passed && other.passed,
            margin: self.margin.min(other.margin),
        }
    }
}

#[derive(Debug, Clone)]
struct Tally {
    samples: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            samples: 0,
            violations: 0,
            worst: f64::MAX,
        }
    }

    fn push(&mut self, c: SampleCheck) {
        self.samples += 1;
        if !c.passed {
            self.violations += 1;
        }
        self.worst = self.worst.min(c.margin);
    }

    fn report(self, seed: u64) -> CheckReport {
        CheckReport {
            passed: self.violations == 0 && self.samples > 0,
            samples: self.samples,
            violations: self.violations,
            worst_margin: self.worst,
            seed,
            details: BTreeMap::new(),
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A lattice `Z + wZ` with `w ∈ D_0` and a finite displacement map `φ(λ) − λ`.
///
/// Lattice points are keyed by `(j, k)` for `j + kw`; points without an entry
/// stay fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSample {
    pub w: PlanarPoint,
    pub epsilon: f64,
    pub displacements: BTreeMap<(i64, i64), PlanarPoint>,
    /// `(R1, R2)` of a local perturbation: only points with `|λ| ≤ R2` are
    /// bound by ε, the others are merely kept outside `U(0, R1)`.
    pub local: Option<(f64, f64)>,
}

impl PerturbationSample {
    pub fn identity(w: PlanarPoint, epsilon: f64) -> Self {
        Self {
            w,
            epsilon,
            displacements: BTreeMap::new(),
            local: None,
        }
    }

    pub fn v(&self) -> f64 {
        self.w.im
    }

    pub fn lattice_point(&self, j: i64, k: i64) -> PlanarPoint {
        PlanarPoint::new(j as f64, 0.0) + self.w * k as f64
    }

    pub fn image(&self, j: i64, k: i64) -> PlanarPoint {
        let d = self.displacements.get(&(j, k)).copied().unwrap_or(PlanarPoint::ZERO);
        self.lattice_point(j, k) + d
    }

    /// `ε ≤ 1/(45+10v)`, the regime of the circumcenter and adjacency lemmas.
    pub fn epsilon_is_small(&self) -> bool {
        self.epsilon <= small_epsilon(self.v())
    }

    pub fn is_valid(&self) -> bool {
        if !in_d0(self.w) || self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return false;
        }
        self.displacements.iter().all(|(&(j, k), d)| {
            let lam = self.lattice_point(j, k);
            match self.local {
                Some((r1, r2)) if lam.norm() > r2 => (lam + *d).norm() >= r1,
                _ => d.norm() < self.epsilon,
            }
        })
    }
}

/// `1/(45+10v)`.
pub fn small_epsilon(v: f64) -> f64 {
    1.0 / (45.0 + 10.0 * v)
}

/// `0 ≤ u ≤ ½`, `v ≥ √3/2`, `|w| ≥ 1`, up to rounding.
pub fn in_d0(w: PlanarPoint) -> bool {
    const SLACK: f64 = 1e-12;
    w.re >= -SLACK && w.re <= 0.5 + SLACK && w.im >= 0.75f64.sqrt() - SLACK && w.norm() >= 1.0 - SLACK
}

/// Five representative points of `D_0`: both corners, an interior point and
/// two tall lattices.
pub fn d0_grid() -> [PlanarPoint; 5] {
    [
        PlanarPoint::new(0.0, 1.0),
        PlanarPoint::new(0.5, 0.75f64.sqrt()),
        PlanarPoint::new(0.25, 1.25),
        PlanarPoint::new(0.0, 2.0),
        PlanarPoint::new(0.5, V_MAX),
    ]
}

pub fn random_w(rng: &mut impl Rng) -> PlanarPoint {
    loop {
        let w = PlanarPoint::new(rng.gen_range(0.0..=0.5), rng.gen_range(0.75f64.sqrt()..=V_MAX));
        if w.norm() >= 1.0 {
            return w;
        }
    }
}

/// Uniform in the open disk of radius `eps`.
fn random_displacement(rng: &mut impl Rng, eps: f64) -> PlanarPoint {
    let r = eps * rng.gen::<f64>().sqrt();
    PlanarPoint::from_polar(r, rng.gen_range(0.0..2.0 * PI))
}

/// Lattice keys with `|j + kw| ≤ radius`.
pub fn lattice_window(w: PlanarPoint, radius: f64) -> Vec<(i64, i64)> {
    let k_max = (radius / w.im).floor() as i64;
    let mut out = Vec::new();
    for k in -k_max..=k_max {
        let c = k as f64 * w.re;
        let half = (radius * radius - (k as f64 * w.im).powi(2)).max(0.0).sqrt();
        for j in (-half - c).ceil() as i64..=(half - c).floor() as i64 {
            out.push((j, k));
        }
    }
    out
}

/// Independent ε-displacements of every point with `|j|, |k| ≤ window`.
pub fn random_perturbation(rng: &mut impl Rng, w: PlanarPoint, epsilon: f64, window: i64) -> PerturbationSample {
    let mut s = PerturbationSample::identity(w, epsilon);
    for j in -window..=window {
        for k in -window..=window {
            s.displacements.insert((j, k), random_displacement(rng, epsilon));
        }
    }
    s
}

/// A local `(ε, 3+3v, 4+4v)`-perturbation: ε-displacements inside radius
/// `4+4v`, and random radial compression (never below `3+3v`) in a ring
/// beyond it. With `fix_origin` the origin stays put.
pub fn random_local_perturbation(
    rng: &mut impl Rng,
    w: PlanarPoint,
    epsilon: f64,
    fix_origin: bool,
) -> PerturbationSample {
    let v = w.im;
    let (r1, r2) = (3.0 + 3.0 * v, 4.0 + 4.0 * v);
    let mut s = PerturbationSample::identity(w, epsilon);
    s.local = Some((r1, r2));
    for (j, k) in lattice_window(w, r2 + 4.0) {
        let lam = s.lattice_point(j, k);
        let n = lam.norm();
        let d = if (j, k) == (0, 0) && fix_origin {
            PlanarPoint::ZERO
        } else if n <= r2 {
            random_displacement(rng, epsilon)
        } else {
            let t = rng.gen_range(r1 / n..=1.0);
            lam * (t - 1.0)
        };
        s.displacements.insert((j, k), d);
    }
    s
}

/// The 64 ways of pushing each of `0, 1, w` by almost ε along an axis.
pub fn adversarial_triangles(w: PlanarPoint, epsilon: f64) -> Vec<PerturbationSample> {
    let m = epsilon * (1.0 - 1e-9);
    let dirs = [
        PlanarPoint::new(m, 0.0),
        PlanarPoint::new(-m, 0.0),
        PlanarPoint::new(0.0, m),
        PlanarPoint::new(0.0, -m),
    ];
    let mut out = Vec::with_capacity(64);
    for a in dirs {
        for b in dirs {
            for c in dirs {
                let mut s = PerturbationSample::identity(w, epsilon);
                s.displacements.insert((0, 0), a);
                s.displacements.insert((1, 0), b);
                s.displacements.insert((0, 1), c);
                out.push(s);
            }
        }
    }
    out
}

fn triangle(s: &PerturbationSample) -> (PlanarPoint, PlanarPoint, PlanarPoint) {
    (s.image(0, 0), s.image(1, 0), s.image(0, 1))
}

/// `|grad f| ≤ 7/3` for the perturbed `(0, 1, w)` when `ε ≤ 1/50`.
pub fn check_gradient_bound(sample: &PerturbationSample, scale: f64) -> SampleCheck {
    let (a, b, c) = triangle(sample);
    match cot_gradient_norm(a, b, c) {
        Ok(g) => SampleCheck::at_least(1.0 - g / (7.0 / 3.0 * scale)),
        Err(_) => SampleCheck::broken(),
    }
}

/// The circumcenter of the perturbed `(0, 1, w)` lies in `[¼, ¾] × [v/4, 3v/4]`.
///
/// The margin is the smallest slack to a side, relative to the box half-width.
pub fn check_circumcenter_box(sample: &PerturbationSample, scale: f64) -> SampleCheck {
    let (a, b, c) = triangle(sample);
    let Ok(disk) = circumcenter(a, b, c) else {
        return SampleCheck::broken();
    };
    let v = sample.v();
    let (hx, hy) = (0.25 * scale, 0.25 * v * scale);
    let dx = hx - (disk.center.re - 0.5).abs();
    let dy = hy - (disk.center.im - 0.5 * v).abs();
    SampleCheck::at_least((dx / hx).min(dy / hy))
}

/// The perturbed `j + kw` lies strictly outside the perturbed circumdisk.
pub fn check_empty_disk(sample: &PerturbationSample, (j, k): (i64, i64), scale: f64) -> SampleCheck {
    debug_assert!(![(0, 0), (1, 0), (0, 1), (1, 1)].contains(&(j, k)));
    let (a, b, c) = triangle(sample);
    let Ok(disk) = circumcenter(a, b, c) else {
        return SampleCheck::broken();
    };
    let d = sample.image(j, k).distance(disk.center);
    SampleCheck::strictly(d * scale / disk.radius - 1.0)
}

/// Every `(j, k) ≠` the triangle and `1 + w`, with `|j|, |k| ≤ 4`.
pub fn empty_disk_points() -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for j in -4..=4 {
        for k in -4..=4 {
            if ![(0, 0), (1, 0), (0, 1), (1, 1)].contains(&(j, k)) {
                out.push((j, k));
            }
        }
    }
    out
}

/// Voronoi cell of `φ(0)` in the perturbed lattice, keyed by `(j, k)`.
///
/// Fails if the certificate needs sites beyond the sample's window.
fn perturbed_origin_cell(sample: &PerturbationSample) -> std::result::Result<geom::voronoi::CertifiedCell<(i64, i64)>, GeomError> {
    let sites: Vec<((i64, i64), PlanarPoint)> = sample
        .displacements
        .keys()
        .copied()
        .filter(|&key| key != (0, 0))
        .map(|(j, k)| ((j, k), sample.image(j, k)))
        .collect();
    let reach = sample
        .displacements
        .keys()
        .map(|&(j, k)| sample.lattice_point(j, k).norm())
        .fold(0.0, f64::max);
    let center = sample.image(0, 0);
    let cell = certified_cell(center, 1.6 * (1.0 + sample.v()), |_| sites.clone())?;
    // fixed points just outside the window must not be needed
    if cell.certified_radius + center.norm() > reach {
        return Err(GeomError::Unbounded { doublings: cell.doublings, radius: cell.certified_radius });
    }
    Ok(cell)
}

/// Adjacency stays in the window `|j|, |k| ≤ 1`, and the cell lies in
/// `U(0, ¾(1+v))`. The two outcomes are returned separately.
///
/// The window margin is how far the sites outside the window stay from
/// cutting the cell: the least `|x − p| − |x − φ(0)|` over cell vertices `x`
/// and such sites `p`, relative to `1+v`.
pub fn check_adjacency_window(sample: &PerturbationSample, scale: f64) -> (SampleCheck, SampleCheck) {
    let Ok(cell) = perturbed_origin_cell(sample) else {
        return (SampleCheck::broken(), SampleCheck::broken());
    };
    let center = sample.image(0, 0);
    let in_window = |(j, k): (i64, i64)| j.abs() <= 1 && k.abs() <= 1;
    let gap = sample
        .displacements
        .keys()
        .filter(|&&key| !in_window(key))
        .flat_map(|&(j, k)| {
            let p = sample.image(j, k);
            cell.polygon.vertices().iter().map(move |&x| x.distance(p) - x.distance(center))
        })
        .fold(f64::MAX, f64::min);
    let window = SampleCheck {
        passed: cell.neighbors.iter().all(|&key| in_window(key)),
        margin: gap / (1.0 + sample.v()),
    };
    let reach = cell.polygon.max_distance_from(PlanarPoint::ZERO);
    let containment = SampleCheck::at_least(1.0 - reach / (0.75 * (1.0 + sample.v()) * scale));
    (window, containment)
}

/// `|W(d) ∩ (H(1) △ H(w′))| < 4εd(2d+1)` for `|w′ − 1| < ε < ½`, with
/// `H(w) = {|ζ| ≤ |ζ − w|}` and `W(d) = {|Im ζ| ≤ d}`.
pub fn check_strip(w_prime: PlanarPoint, epsilon: f64, d: f64, scale: f64) -> SampleCheck {
    let measured = strip_symmetric_difference(w_prime, d);
    let bound = 4.0 * epsilon * d * (2.0 * d + 1.0) * scale;
    SampleCheck::strictly(1.0 - measured / bound)
}

/// Both bisectors cross the strip within `(2d+1)/2` of `½`, so a box of
/// half-width `2d+3` holds the whole difference.
pub fn strip_symmetric_difference(w_prime: PlanarPoint, d: f64) -> f64 {
    let b = 2.0 * d + 3.0;
    let window = ConvexPolygon::rectangle(-b, b, -d, d);
    let h = |w: PlanarPoint| HalfPlane::new(PlanarPoint::ZERO, w).map(|hp| clip(&window, &hp));
    match (h(PlanarPoint::ONE), h(w_prime)) {
        (Ok(a), Ok(c)) => symmetric_difference_area(&a, &c),
        _ => f64::INFINITY,
    }
}

/// `|V(0, Λ) △ V(0, φ(Λ))| ≤ 12ε(1+v)(5+3v)` for a local perturbation with `φ(0) = 0`.
pub fn check_symdiff(sample: &PerturbationSample, scale: f64) -> SampleCheck {
    let mut fixed = sample.clone();
    for d in fixed.displacements.values_mut() {
        *d = PlanarPoint::ZERO;
    }
    let (Ok(a), Ok(b)) = (perturbed_origin_cell(&fixed), perturbed_origin_cell(sample)) else {
        return SampleCheck::broken();
    };
    let measured = symmetric_difference_area(&a.polygon, &b.polygon);
    let v = sample.v();
    let bound = 12.0 * sample.epsilon * (1.0 + v) * (5.0 + 3.0 * v) * scale;
    SampleCheck::at_least(1.0 - measured / bound)
}

/// Both halves for a sample fixing the origin: the strip bound for
/// `w′ = φ(1)` at half-width `d`, and the cell symmetric difference.
pub fn check_strip_and_symdiff(sample: &PerturbationSample, d: f64, scale: f64) -> SampleCheck {
    let w_prime = sample.image(1, 0) - sample.image(0, 0);
    check_strip(w_prime, sample.epsilon, d, scale).and(check_symdiff(sample, scale))
}

/// Central-difference gradient of `w0 ↦ cot ∠(w2, w0, w1)`.
fn numeric_gradient(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint, h: f64) -> Option<PlanarPoint> {
    let f = |p: PlanarPoint| cot_angle(p, w1, w2).ok();
    let gx = (f(w0 + PlanarPoint::new(h, 0.0))? - f(w0 - PlanarPoint::new(h, 0.0))?) / (2.0 * h);
    let gy = (f(w0 + PlanarPoint::new(0.0, h))? - f(w0 - PlanarPoint::new(0.0, h))?) / (2.0 * h);
    Some(PlanarPoint::new(gx, gy))
}

/// Closed-form gradient norm against central differences with step `1e-6`.
pub fn check_gradient_identity(w0: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint, scale: f64) -> SampleCheck {
    let (Ok(formula), Some(fd)) = (cot_gradient_norm(w0, w1, w2), numeric_gradient(w0, w1, w2, 1e-6)) else {
        return SampleCheck::broken();
    };
    let rel = (fd.norm() - formula).abs() / formula;
    SampleCheck::at_least(1.0 - rel / (GRADIENT_TOLERANCE * scale))
}

/// `|f(z′) − f(z)| ≤ M0 |z′ − z|` with `M0` the largest gradient norm
/// sampled on the segment (33 points, 1% slack for the sampling).
pub fn check_lipschitz(w0: PlanarPoint, w0_end: PlanarPoint, w1: PlanarPoint, w2: PlanarPoint, scale: f64) -> SampleCheck {
    let mut m0: f64 = 0.0;
    for n in 0..=32 {
        let t = n as f64 / 32.0;
        match cot_gradient_norm(w0 + (w0_end - w0) * t, w1, w2) {
            Ok(g) => m0 = m0.max(g),
            Err(_) => return SampleCheck::broken(),
        }
    }
    let (Ok(a), Ok(b)) = (cot_angle(w0, w1, w2), cot_angle(w0_end, w1, w2)) else {
        return SampleCheck::broken();
    };
    let bound = 1.01 * m0 * w0.distance(w0_end) * scale;
    SampleCheck::at_least(1.0 - (a - b).abs() / bound)
}

/// Three points in `[−1, 1]²` whose angles all exceed 0.2 rad.
pub fn random_triangle(rng: &mut impl Rng) -> [PlanarPoint; 3] {
    loop {
        let mut p = [PlanarPoint::ZERO; 3];
        for q in &mut p {
            *q = PlanarPoint::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let ok = (0..3).all(|i| {
            geom::angle(p[(i + 1) % 3], p[i], p[(i + 2) % 3]).is_ok_and(|a| a.abs() > 0.2 && a.abs() < PI - 0.4)
        });
        if ok {
            return p;
        }
    }
}

fn suite<F>(seed: u64, stream: u64, samples: usize, mut body: F) -> CheckReport
where
    F: FnMut(&mut ChaCha8Rng, &mut Tally, usize),
{
    let mut rng = rng_for(seed, stream);
    let mut tally = Tally::new();
    for n in 0..samples {
        body(&mut rng, &mut tally, n);
    }
    tally.report(seed)
}

pub fn gradient_bound_suite(opts: &VerifyOptions) -> CheckReport {
    let eps = 1.0 / 50.0;
    let mut r = suite(opts.seed, 1, opts.samples, |rng, t, _| {
        let w = random_w(rng);
        t.push(check_gradient_bound(&random_perturbation(rng, w, eps, 1), opts.bound_scale));
    });
    extend(&mut r, d0_grid().iter().flat_map(|&w| adversarial_triangles(w, eps)), |s| {
        check_gradient_bound(s, opts.bound_scale)
    });
    r
}

pub fn circumcenter_box_suite(opts: &VerifyOptions) -> CheckReport {
    let mut r = suite(opts.seed, 2, opts.samples, |rng, t, _| {
        let w = random_w(rng);
        let s = random_perturbation(rng, w, small_epsilon(w.im), 1);
        t.push(check_circumcenter_box(&s, opts.bound_scale));
    });
    extend(
        &mut r,
        d0_grid().iter().flat_map(|&w| adversarial_triangles(w, small_epsilon(w.im))),
        |s| check_circumcenter_box(s, opts.bound_scale),
    );
    r
}

pub fn empty_disk_suite(opts: &VerifyOptions) -> CheckReport {
    let points = empty_disk_points();
    let mut rng = rng_for(opts.seed, 3);
    let mut tally = Tally::new();
    let per_point = |s: &PerturbationSample, t: &mut Tally| {
        let worst = points
            .iter()
            .map(|&p| check_empty_disk(s, p, opts.bound_scale))
            .reduce(SampleCheck::and)
            .unwrap();
        t.push(worst);
    };
    for _ in 0..opts.samples {
        let w = random_w(&mut rng);
        let s = random_perturbation(&mut rng, w, small_epsilon(w.im), 4);
        per_point(&s, &mut tally);
    }
    // outer points pushed almost ε straight toward the perturbed circumcenter
    for w in d0_grid() {
        for mut s in adversarial_triangles(w, small_epsilon(w.im)) {
            let (a, b, c) = triangle(&s);
            let Ok(disk) = circumcenter(a, b, c) else {
                tally.push(SampleCheck::broken());
                continue;
            };
            for &(j, k) in &points {
                let toward = disk.center - s.lattice_point(j, k);
                let d = toward * (s.epsilon * (1.0 - 1e-9) / toward.norm());
                s.displacements.insert((j, k), d);
            }
            per_point(&s, &mut tally);
        }
    }
    tally.report(opts.seed)
}

/// Runs the adjacency window and containment checks on the same samples:
/// `samples / 2` random local perturbations per grid point of `D_0`
/// (at least 500), plus random `w`.
pub fn adjacency_suites(opts: &VerifyOptions) -> (CheckReport, CheckReport) {
    let per_w = (opts.samples / 2).max(500);
    let mut rng = rng_for(opts.seed, 4);
    let (mut window, mut containment) = (Tally::new(), Tally::new());
    let mut run = |s: &PerturbationSample| {
        let (a, b) = check_adjacency_window(s, opts.bound_scale);
        window.push(a);
        containment.push(b);
    };
    for w in d0_grid() {
        run(&PerturbationSample {
            local: Some((3.0 + 3.0 * w.im, 4.0 + 4.0 * w.im)),
            displacements: lattice_window(w, 8.0 + 4.0 * w.im).into_iter().map(|key| (key, PlanarPoint::ZERO)).collect(),
            ..PerturbationSample::identity(w, small_epsilon(w.im))
        });
        for _ in 0..per_w {
            let s = random_local_perturbation(&mut rng, w, small_epsilon(w.im), false);
            run(&s);
        }
    }
    for _ in 0..per_w {
        let w = random_w(&mut rng);
        let s = random_local_perturbation(&mut rng, w, small_epsilon(w.im), false);
        run(&s);
    }
    (window.report(opts.seed), containment.report(opts.seed))
}

pub fn strip_suite(opts: &VerifyOptions) -> CheckReport {
    suite(opts.seed, 5, opts.samples, |rng, t, n| {
        let d = [0.5, 1.0, 2.0][n % 3];
        let eps = rng.gen_range(1e-6..0.5);
        let w_prime = PlanarPoint::ONE + random_displacement(rng, eps);
        t.push(check_strip(w_prime, eps, d, opts.bound_scale));
    })
}

pub fn symdiff_suite(opts: &VerifyOptions) -> CheckReport {
    let mut r = suite(opts.seed, 6, opts.samples, |rng, t, n| {
        let w = if n % 2 == 0 { random_w(rng) } else { d0_grid()[n / 2 % 5] };
        let s = random_local_perturbation(rng, w, small_epsilon(w.im), true);
        t.push(check_symdiff(&s, opts.bound_scale));
    });
    // every vertex of the inner ring pushed outward by almost ε
    let outward: Vec<PerturbationSample> = d0_grid()
        .iter()
        .map(|&w| {
            let mut s = random_local_perturbation(&mut rng_for(opts.seed, 60), w, small_epsilon(w.im), true);
            for (&(j, k), d) in s.displacements.iter_mut() {
                let lam = PlanarPoint::new(j as f64, 0.0) + w * k as f64;
                if (j, k) != (0, 0) && lam.norm() <= 4.0 + 4.0 * w.im {
                    *d = lam * (s.epsilon * (1.0 - 1e-9) / lam.norm());
                }
            }
            s
        })
        .collect();
    extend(&mut r, outward.iter(), |s| check_symdiff(s, opts.bound_scale));
    r
}

pub fn gradient_identity_suite(opts: &VerifyOptions) -> CheckReport {
    suite(opts.seed, 7, opts.samples, |rng, t, _| {
        let [a, b, c] = random_triangle(rng);
        t.push(check_gradient_identity(a, b, c, opts.bound_scale));
    })
}

pub fn lipschitz_suite(opts: &VerifyOptions) -> CheckReport {
    suite(opts.seed, 8, opts.samples, |rng, t, _| {
        let [a, b, c] = random_triangle(rng);
        let short = a.distance(b).min(a.distance(c));
        let end = a + random_displacement(rng, 0.1 * short);
        t.push(check_lipschitz(a, end, b, c, opts.bound_scale));
    })
}

fn extend<S, I, F>(report: &mut CheckReport, samples: I, check: F)
where
    S: Borrow<PerturbationSample>,
    I: IntoIterator<Item = S>,
    F: Fn(&PerturbationSample) -> SampleCheck,
{
    for s in samples {
        let c = check(s.borrow());
        report.samples += 1;
        if !c.passed {
            report.violations += 1;
            report.passed = false;
        }
        report.worst_margin = report.worst_margin.min(c.margin);
    }
}

/// Near the site `1` of `Σ_μ`, `ψ` is a local `(ε_μ δ_μ, (3+3v_μ)δ_μ, (4+4v_μ)δ_μ)`-perturbation
/// of `Λ_μ` for every μ above the certificate floor.
///
/// Samples μ log-uniformly in `[floor, 10·floor]`. Each sample checks one
/// point inside the inner disk and one outside it.
pub fn local_perturbation_suite(cfg: &SpiralConfig, opts: &VerifyOptions) -> Result<Option<CheckReport>> {
    let Some(m2) = cfg.m2() else {
        return Ok(None);
    };
    let alpha = cfg.alpha();
    let floor = local_perturbation_floor(alpha, m2);
    let mut rng = rng_for(opts.seed, 9);
    let mut tally = Tally::new();
    for _ in 0..opts.samples {
        let mu = floor * 10f64.powf(rng.gen::<f64>());
        let lin = linearization(cfg, mu)?;
        let (delta, v) = (lin.delta_mu, lin.v_mu);
        let eps = lin.epsilon_mu.expect("M1 is known");
        let (r1, r2) = ((3.0 + 3.0 * v) * delta, (4.0 + 4.0 * v) * delta);

        let inner = PlanarPoint::from_polar(r2 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI));
        let near = match phi(cfg, inner) {
            Ok(p) => SampleCheck::strictly(1.0 - (p - PlanarPoint::ONE - inner).norm() / (eps * delta * opts.bound_scale)),
            Err(_) => SampleCheck::broken(),
        };
        let outer = loop {
            let r = r2 * (3.0 / r2).powf(rng.gen::<f64>());
            let z = PlanarPoint::from_polar(r, rng.gen_range(0.0..2.0 * PI));
            if let Ok(p) = phi(cfg, z) {
                break p;
            }
        };
        let far = SampleCheck::at_least((outer - PlanarPoint::ONE).norm() * opts.bound_scale / r1 - 1.0);
        tally.push(near.and(far));
    }
    let mut report = tally.report(opts.seed);
    report.details.insert("mu_floor".into(), floor);
    Ok(Some(report))
}

/// `|V(0, Λ_μ) △ (V(1, Σ_μ) − 1)| / |V(0, Λ_μ)|`, both cells computed directly.
pub fn linearization_deviation(cfg: &SpiralConfig, mu: f64) -> Result<f64> {
    let lat = cfg.linear_lattice(linear_height(cfg.alpha(), mu))?;
    // p ↦ 2πi·conj(p) reverses orientation
    let lin = voronoi_cell_origin(&lat)?.map(to_lambda_mu, true);
    let fam = SpiralFamily::new(cfg, SpiralSet::Normalized { mu })?;
    let r0 = 2.5 * fam.area_guess(0).sqrt();
    let cell = family_cell(&fam, SiteId::Index(0), Some(r0))?;
    let shifted = cell.polygon.translate(-PlanarPoint::ONE);
    Ok(symmetric_difference_area(&lin, &shifted) / geom::area(&lin))
}

/// The symmetric-difference rate `C/√μ` at μ equal to one and four times the
/// floor where it is guaranteed. The empirical `√μ·ratio` is also reported at
/// accessible μ, where the bound is not asserted.
pub fn area_rate_suite(cfg: &SpiralConfig, opts: &VerifyOptions) -> Result<Option<CheckReport>> {
    let Some(m2) = cfg.m2() else {
        return Ok(None);
    };
    let alpha = cfg.alpha();
    let floor = area_rate_floor(alpha, m2);
    let c = area_rate_constant(alpha, m2);
    let mut tally = Tally::new();
    let mut details = BTreeMap::new();
    for factor in [1.0, 4.0] {
        let mu = floor * factor;
        let ratio = linearization_deviation(cfg, mu)?;
        details.insert(format!("empirical_constant_at_floor_x{factor}"), ratio * mu.sqrt());
        tally.push(SampleCheck::at_least(1.0 - ratio * mu.sqrt() / (c * opts.bound_scale)));
    }
    for mu in [1e3, 1e4, 1e5, 1e6] {
        let ratio = linearization_deviation(cfg, mu)?;
        details.insert(format!("empirical_constant_at_mu_1e{}", mu.log10().round()), ratio * mu.sqrt());
    }
    details.insert("mu_floor".into(), floor);
    details.insert("proven_constant".into(), c);
    let mut report = tally.report(opts.seed);
    report.details = details;
    Ok(Some(report))
}

/// `dev(j) = |j^{1−2α}|V(z_j)| / (2πα) − 1|`, paired with `j`.
pub fn normalized_deviations(cfg: &SpiralConfig, js: &[u64]) -> Result<Vec<(u64, f64)>> {
    let target = 2.0 * PI * cfg.alpha();
    Ok(cells_for(cfg, js)?
        .into_iter()
        .map(|rec| (rec.j, (rec.normalized_area.unwrap_or(f64::NAN) / target - 1.0).abs()))
        .collect())
}

/// Index of the decade `[j_min·10^k, j_min·10^{k+1})` holding `j`; the
/// right end `j_max` joins the last full decade.
fn decade(j: u64, j_min: u64, n_decades: u32) -> u32 {
    let k = ((j as f64 / j_min as f64).log10() + 1e-12).floor() as u32;
    k.min(n_decades - 1)
}

/// `sup √j·dev(j)` over each decade of `j_list` must not exceed twice its
/// value on the first decade. The overall supremum is the empirical constant.
pub fn check_convergence_rate(cfg: &SpiralConfig, j_list: &[u64], seed: u64, scale: f64) -> Result<CheckReport> {
    let js: Vec<u64> = j_list.iter().copied().filter(|&j| j >= 1).collect();
    let (Some(&j_min), Some(&j_max)) = (js.iter().min(), js.iter().max()) else {
        return Err(VerifyError::TooFewDecades);
    };
    let n_decades = ((j_max as f64 / j_min as f64).log10() + 1e-12).floor() as u32;
    if n_decades < 2 {
        return Err(VerifyError::TooFewDecades);
    }
    let devs = normalized_deviations(cfg, &js)?;
    let mut decades: BTreeMap<u32, f64> = BTreeMap::new();
    for &(j, dev) in &devs {
        let e = decades.entry(decade(j, j_min, n_decades)).or_insert(0.0);
        *e = e.max((j as f64).sqrt() * dev);
    }
    let first = decades[&0];
    let mut tally = Tally::new();
    let mut details = BTreeMap::new();
    for (&k, &sup) in &decades {
        let lo = j_min * 10u64.pow(k);
        details.insert(format!("sup_sqrt_j_dev_from_j_{lo}"), sup);
        tally.push(SampleCheck::at_least(1.0 - sup / (2.0 * first * scale)));
    }
    let overall = decades.values().copied().fold(0.0, f64::max);
    details.insert("empirical_constant".into(), overall);
    if let Some(&(_, last)) = devs.iter().max_by_key(|(j, _)| *j) {
        details.insert("dev_at_largest_j".into(), last);
    }
    let mut report = tally.report(seed);
    report.samples = devs.len();
    report.details = details;
    Ok(report)
}

/// Every `j` in `[100, 10000]`.
pub fn default_j_list() -> Vec<u64> {
    (100..=10_000).collect()
}

/// Runs every suite; spiral-dependent ones use `cfg`. Reports are keyed by
/// check name, so the result does not depend on scheduling.
pub fn run_all(cfg: &SpiralConfig, opts: &VerifyOptions) -> Result<BTreeMap<String, CheckReport>> {
    type Job<'a> = Box<dyn Fn() -> Result<Vec<(String, CheckReport)>> + Send + Sync + 'a>;
    let one = |name: &'static str, r: CheckReport| Ok(vec![(name.to_string(), r)]);
    let jobs: Vec<Job> = vec![
        Box::new(|| one("gradient_bound", gradient_bound_suite(opts))),
        Box::new(|| one("circumcenter_box", circumcenter_box_suite(opts))),
        Box::new(|| one("empty_disk", empty_disk_suite(opts))),
        Box::new(|| {
            let (w, c) = adjacency_suites(opts);
            Ok(vec![("adjacency_window".into(), w), ("cell_containment".into(), c)])
        }),
        Box::new(|| one("strip_symmetric_difference", strip_suite(opts))),
        Box::new(|| one("cell_symmetric_difference", symdiff_suite(opts))),
        Box::new(|| one("gradient_identity", gradient_identity_suite(opts))),
        Box::new(|| one("lipschitz", lipschitz_suite(opts))),
        Box::new(|| Ok(local_perturbation_suite(cfg, opts)?.map(|r| ("local_perturbation".into(), r)).into_iter().collect())),
        Box::new(|| Ok(area_rate_suite(cfg, opts)?.map(|r| ("area_rate".into(), r)).into_iter().collect())),
        Box::new(|| one("convergence_rate", check_convergence_rate(cfg, &default_j_list(), opts.seed, opts.bound_scale)?)),
    ];
    let results: Vec<Result<Vec<(String, CheckReport)>>> = jobs.par_iter().map(|job| job()).collect();
    let mut out = BTreeMap::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            samples: 200,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn unperturbed_circumcenter_is_inside_the_box() {
        let w = PlanarPoint::new(0.5, 0.75f64.sqrt());
        let s = PerturbationSample::identity(w, small_epsilon(w.im));
        let c = check_circumcenter_box(&s, 1.0);
        assert!(c.passed);
        // center ½ + (u² − u + v²)/(2v)·i
        let disk = circumcenter(PlanarPoint::ZERO, PlanarPoint::ONE, w).unwrap();
        let (u, v) = (w.re, w.im);
        assert_relative_eq!(disk.center.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(disk.center.im, (u * u - u + v * v) / (2.0 * v), epsilon = 1e-15);
    }

    #[test]
    fn lattice_point_outside_unperturbed_disk() {
        let s = PerturbationSample::identity(PlanarPoint::new(0.5, 1.0), 0.01);
        assert!(check_empty_disk(&s, (2, 0), 1.0).passed);
        assert!(empty_disk_points().iter().all(|&p| check_empty_disk(&s, p, 1.0).passed));
        assert_eq!(empty_disk_points().len(), 81 - 4);
    }

    #[test]
    fn identity_perturbation_has_classical_neighbors() {
        // hexagonal lattice: six neighbors, all in the window
        let w = PlanarPoint::new(0.5, 0.75f64.sqrt());
        let mut s = PerturbationSample::identity(w, small_epsilon(w.im));
        for key in lattice_window(w, 12.0) {
            s.displacements.insert(key, PlanarPoint::ZERO);
        }
        let cell = perturbed_origin_cell(&s).unwrap();
        let mut n = cell.neighbors.clone();
        n.sort();
        assert_eq!(n, vec![(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)]);
        let (window, containment) = check_adjacency_window(&s, 1.0);
        assert!(window.passed && window.margin > 0.0);
        assert!(containment.passed);
        assert_relative_eq!(geom::area(&cell.polygon), w.im, max_relative = 1e-12);
    }

    #[test]
    fn strip_identity_and_examples() {
        assert_eq!(strip_symmetric_difference(PlanarPoint::ONE, 1.0), 0.0);
        // a shift along the real axis moves the bisector by δ/2 over height 2d
        let d = 1.0;
        let delta = 0.1;
        let m = strip_symmetric_difference(PlanarPoint::new(1.0 + delta, 0.0), d);
        assert_relative_eq!(m, delta / 2.0 * 2.0 * d, max_relative = 1e-12);
        assert!(check_strip(PlanarPoint::new(1.0 + delta, 0.0), 0.11, d, 1.0).passed);
    }

    #[test]
    fn symdiff_of_identity_is_zero() {
        let w = PlanarPoint::new(0.25, 1.25);
        let mut rng = rng_for(1, 0);
        let mut s = random_local_perturbation(&mut rng, w, small_epsilon(w.im), true);
        for d in s.displacements.values_mut() {
            *d = PlanarPoint::ZERO;
        }
        let c = check_symdiff(&s, 1.0);
        assert!(c.passed);
        assert_relative_eq!(c.margin, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn combined_strip_and_symdiff() {
        let mut rng = rng_for(2, 0);
        for w in d0_grid() {
            let s = random_local_perturbation(&mut rng, w, small_epsilon(w.im), true);
            assert!(check_strip_and_symdiff(&s, 1.0, 1.0).passed);
        }
    }

    #[test]
    fn gradient_identity_on_right_triangle() {
        // cot at the right angle is 0; |grad| = |w2−w1|·|w1−w0|·|w2−w0| / (2·area)²
        let c = check_gradient_identity(PlanarPoint::ZERO, PlanarPoint::ONE, PlanarPoint::I, 1.0);
        assert!(c.passed, "{c:?}");
        assert_relative_eq!(
            cot_gradient_norm(PlanarPoint::ZERO, PlanarPoint::ONE, PlanarPoint::I).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn suites_pass_on_quick_runs() {
        let o = quick();
        for (name, r) in [
            ("gradient_bound", gradient_bound_suite(&o)),
            ("circumcenter_box", circumcenter_box_suite(&o)),
            ("empty_disk", empty_disk_suite(&o)),
            ("strip", strip_suite(&o)),
            ("symdiff", symdiff_suite(&o)),
            ("gradient_identity", gradient_identity_suite(&o)),
            ("lipschitz", lipschitz_suite(&o)),
        ] {
            assert!(r.passed, "{name}: {r:?}");
            assert_eq!(r.violations, 0);
            assert!(r.samples >= 200);
            assert_eq!(r.seed, o.seed);
        }
        let (w, c) = adjacency_suites(&VerifyOptions { samples: 0, ..o });
        assert!(w.passed && c.passed);
        assert_eq!(w.samples, 5 * 501 + 500);
    }

    #[test]
    fn shrunken_bounds_fail() {
        let o = VerifyOptions {
            bound_scale: 0.5,
            ..quick()
        };
        assert!(!gradient_bound_suite(&o).passed);
        assert!(!circumcenter_box_suite(&o).passed);
        let r = gradient_bound_suite(&o);
        assert!(r.violations > 0 && r.worst_margin < 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let o = quick();
        let a = serde_json::to_string(&empty_disk_suite(&o)).unwrap();
        let b = serde_json::to_string(&empty_disk_suite(&o)).unwrap();
        assert_eq!(a, b);
        let other = VerifyOptions { seed: 7, ..o };
        assert_ne!(a, serde_json::to_string(&empty_disk_suite(&other)).unwrap());
        assert!(a.contains("\"seed\":1729"));
    }

    #[test]
    fn local_perturbation_needs_quotient_bound() {
        let cfg = SpiralConfig::new(0.5, 2.0 * PI * std::f64::consts::E).unwrap();
        assert_eq!(cfg.m1(), None);
        assert_eq!(local_perturbation_suite(&cfg, &quick()).unwrap(), None);
        assert_eq!(area_rate_suite(&cfg, &quick()).unwrap(), None);
        let golden = SpiralConfig::golden(0.5).unwrap();
        let r = local_perturbation_suite(&golden, &VerifyOptions { samples: 100, ..quick() }).unwrap().unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn linearization_deviation_is_small_at_accessible_mu() {
        let cfg = SpiralConfig::golden(0.5).unwrap();
        let c = area_rate_constant(0.5, cfg.m2().unwrap());
        for mu in [1e3, 1e4] {
            let r = linearization_deviation(&cfg, mu).unwrap();
            assert!(r * mu.sqrt() < 5.0, "mu={mu} ratio={r}");
            assert!(r * mu.sqrt() < c);
        }
    }

    #[test]
    fn convergence_rate_needs_two_decades() {
        let cfg = SpiralConfig::golden(0.5).unwrap();
        let js: Vec<u64> = (100..900).collect();
        assert_eq!(check_convergence_rate(&cfg, &js, 0, 1.0), Err(VerifyError::TooFewDecades));
        let js: Vec<u64> = (10..=1000).collect();
        let r = check_convergence_rate(&cfg, &js, 0, 1.0).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.details.contains_key("sup_sqrt_j_dev_from_j_100"));
        assert!(!r.details.contains_key("sup_sqrt_j_dev_from_j_1000"));
    }

    #[test]
    fn decade_grouping() {
        assert_eq!(decade(100, 100, 2), 0);
        assert_eq!(decade(999, 100, 2), 0);
        assert_eq!(decade(1000, 100, 2), 1);
        assert_eq!(decade(10_000, 100, 2), 1);
    }

    proptest! {
        #[test]
        fn generated_samples_are_valid(seed in any::<u64>()) {
            let mut rng = rng_for(seed, 0);
            let w = random_w(&mut rng);
            prop_assert!(in_d0(w));
            let eps = small_epsilon(w.im);
            let s = random_perturbation(&mut rng, w, eps, 4);
            prop_assert!(s.is_valid() && s.epsilon_is_small());
            let l = random_local_perturbation(&mut rng, w, eps, true);
            prop_assert!(l.is_valid());
            prop_assert_eq!(l.image(0, 0), PlanarPoint::ZERO);
            for a in adversarial_triangles(w, eps) {
                prop_assert!(a.is_valid());
            }
        }

        #[test]
        fn lattice_window_is_complete(u in 0.0f64..0.5, v in 0.9f64..3.0, r in 1.0f64..10.0) {
            let w = PlanarPoint::new(u, v);
            let win = lattice_window(w, r);
            for j in -15i64..=15 {
                for k in -15i64..=15 {
                    let inside = (PlanarPoint::new(j as f64, 0.0) + w * k as f64).norm() <= r;
                    prop_assert_eq!(inside, win.contains(&(j, k)));
                }
            }
        }
    }
}
