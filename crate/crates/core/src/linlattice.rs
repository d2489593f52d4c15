//! Voronoi cells of linear lattices `Λ(z) = zZ + Z`, `z = x + iy`.
//!
//! The site `m·z − a` carries the parastichy index `a/m`. Which indices are
//! edge-adjacent to the origin is decided by Richards' thresholds `η_{i,k}`
//! computed from the continued fraction of `x`.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::diophantine::{self, cf_expand, convergents, CfInput, ContinuedFraction, ConvergentTable, Fraction};
use crate::geom::voronoi::{certified_cell, CertifiedCell};
use crate::geom::{self, ConvexPolygon, PlanarPoint};

/// Relative width of the zone around a threshold classified as a rectangle.
pub const THRESHOLD_TIE: f64 = 1e-9;

/// Partial quotients requested when expanding a float `x`.
pub const FLOAT_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("lattice needs x > 0 and y > 0, got x={x}, y={y}")]
    InvalidParameter { x: f64, y: f64 },
    #[error("(i, k) = (0, 0) has no Richards threshold")]
    TrivialIndex,
    #[error(
        "y = {y} lies above the first threshold η_(0,1) = {eta}; the cell is cut by the trivial pair ±1"
    )]
    AboveThresholds { y: f64, eta: f64 },
    #[error("continued fraction exhausted at depth {depth} before reaching y = {y}")]
    DepthExhausted { depth: usize, y: f64 },
    #[error("no pair of parastichy vectors is reduced (internal failure)")]
    NoReducedPair,
    #[error("reduced basis violates v·δ² = y: v·δ² = {product}, y = {y}")]
    AreaMismatch { product: f64, y: f64 },
    #[error(transparent)]
    Diophantine(#[from] diophantine::DiophantineError),
    #[error(transparent)]
    Geom(#[from] geom::GeomError),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// The site `m·z − a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LatticeSiteIndex {
    pub m: i64,
    pub a: i64,
}

impl LatticeSiteIndex {
    pub fn new(m: i64, a: i64) -> Self {
        Self { m, a }
    }

    /// The index `a/m` shared by `±(m z − a)`, with positive denominator.
    /// Returns `None` for `m = 0`.
    pub fn parastichy_index(&self) -> Option<Fraction> {
        (self.m != 0).then(|| Fraction::new(self.a as i128, self.m as i128).expect("m ≠ 0"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellShape {
    Rectangle,
    Hexagon,
}

/// Position of `y` among the Richards thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ParastichyState {
    pub i: usize,
    pub k: u64,
    /// `η_{i,k}`
    pub eta_hi: f64,
    /// `η_{i,k+1}`
    pub eta_lo: f64,
    /// `p_i/q_i`, `p_{i,k}/q_{i,k}` and, for a hexagon, `p_{i,k+1}/q_{i,k+1}`.
    pub indices: Vec<Fraction>,
    pub shape: CellShape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedBasis {
    pub lambda1: PlanarPoint,
    pub lambda2: PlanarPoint,
    /// `|Im(λ2/λ1)|`
    pub v: f64,
    /// `|λ1|`
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct LinearLattice {
    x: f64,
    y: f64,
    cf: ContinuedFraction,
    table: ConvergentTable,
}

impl LinearLattice {
    /// Lattice with `z = x + iy`, expanding `x` as a float.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(LatticeError::InvalidParameter { x, y });
        }
        let cf = cf_expand(&CfInput::Float(x), FLOAT_DEPTH)?;
        Self::from_cf(cf, y)
    }

    /// Lattice with `x` given by its continued fraction.
    pub fn from_cf(cf: ContinuedFraction, y: f64) -> Result<Self> {
        let x = cf.value();
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(LatticeError::InvalidParameter { x, y });
        }
        let mut depth = cf.reliable_depth().min(cf.depth());
        let table = loop {
            match convergents(&cf, depth) {
                Ok(t) => break t,
                Err(diophantine::DiophantineError::Overflow(_)) if depth > 0 => depth -= 1,
                Err(e) => return Err(e.into()),
            }
        };
        Ok(Self { x, y, cf, table })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> PlanarPoint {
        PlanarPoint::new(self.x, self.y)
    }

    pub fn cf(&self) -> &ContinuedFraction {
        &self.cf
    }

    pub fn table(&self) -> &ConvergentTable {
        &self.table
    }

    /// Same `x`, different `y`.
    pub fn with_y(&self, y: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(LatticeError::InvalidParameter { x: self.x, y });
        }
        Ok(Self { y, ..self.clone() })
    }

    /// `m·z − a`, with `m·x − a` formed as `⟨m x⟩ + (nearest(m x) − a)`.
    pub fn point(&self, site: LatticeSiteIndex) -> PlanarPoint {
        let f = self.cf.frac_mul(site.m);
        let n = (site.m as f64 * self.x - f).round() as i64;
        PlanarPoint::new(f + (n - site.a) as f64, site.m as f64 * self.y)
    }

    /// `q_{i,k} z − p_{i,k}`, with the real part taken from the residue table.
    pub fn convergent_vector(&self, i: usize, k: u64) -> Result<PlanarPoint> {
        let i = i as isize;
        let q = self.table.q_ik(i, k)?;
        let r = self.table.residue(i, k)?;
        Ok(PlanarPoint::new(r, q as f64 * self.y))
    }

    fn principal_vector(&self, i: usize) -> Result<PlanarPoint> {
        let i = i as isize;
        let r = self.table.principal_residue(i)?;
        Ok(PlanarPoint::new(r, self.table.q(i) as f64 * self.y))
    }

    /// Number of principal indices with a known next quotient.
    fn usable_depth(&self) -> usize {
        let last = self.table.last_index().max(0) as usize;
        (0..=last)
            .take_while(|&i| self.table.a(i + 1).is_some())
            .count()
    }
}

/// Richards' threshold `η_{i,k} = sqrt(−r_i r_{i,k} / (q_i q_{i,k}))`.
pub fn richards_eta(lat: &LinearLattice, i: usize, k: u64) -> Result<f64> {
    if i == 0 && k == 0 {
        return Err(LatticeError::TrivialIndex);
    }
    let t = lat.table();
    let ii = i as isize;
    let r_i = t.principal_residue(ii)?;
    let r_ik = t.residue(ii, k)?;
    let q_i = t.q(ii) as f64;
    let q_ik = t.q_ik(ii, k)? as f64;
    Ok((-(r_i * r_ik) / (q_i * q_ik)).sqrt())
}

fn fraction_ik(t: &ConvergentTable, i: usize, k: u64) -> Result<Fraction> {
    Ok(t.intermediate(i as isize, k)?)
}

/// Locates `y` with `η_{i,k+1} < y ≤ η_{i,k}`, `0 ≤ k < a_{i+1}`.
pub fn parastichy_state(lat: &LinearLattice) -> Result<ParastichyState> {
    let y = lat.y();
    let t = lat.table();
    let usable = lat.usable_depth();
    let exhausted = LatticeError::DepthExhausted { depth: usable, y };
    if usable == 0 {
        return Err(exhausted);
    }
    let top = richards_eta(lat, 0, 1)?;
    let tie = |eta: f64| (y - eta).abs() <= THRESHOLD_TIE * eta;
    if y > top && !tie(top) {
        return Err(LatticeError::AboveThresholds { y, eta: top });
    }
    for i in 0..usable {
        let a_next = t.a(i + 1).expect("usable index");
        let k_start = if i == 0 { 1 } else { 0 };
        for k in k_start..a_next {
            let hi = richards_eta(lat, i, k)?;
            let lo = richards_eta(lat, i, k + 1)?;
            let principal = t.convergent(i as isize);
            if tie(hi) {
                return Ok(ParastichyState {
                    i,
                    k,
                    eta_hi: hi,
                    eta_lo: lo,
                    indices: vec![principal, fraction_ik(t, i, k)?],
                    shape: CellShape::Rectangle,
                });
            }
            if y > lo && !tie(lo) {
                return Ok(ParastichyState {
                    i,
                    k,
                    eta_hi: hi,
                    eta_lo: lo,
                    indices: vec![principal, fraction_ik(t, i, k)?, fraction_ik(t, i, k + 1)?],
                    shape: CellShape::Hexagon,
                });
            }
        }
    }
    Err(exhausted)
}

/// Voronoi cell of the origin with its edge-adjacent sites.
pub fn voronoi_cell_origin_certified(lat: &LinearLattice) -> Result<CertifiedCell<LatticeSiteIndex>> {
    let (x, y) = (lat.x(), lat.y());
    let initial = 2.0 * y.sqrt().min(1.0);
    let cell = certified_cell(PlanarPoint::ZERO, initial, |radius| {
        let m_max = (radius / y).floor() as i64;
        let mut out = Vec::new();
        for m in -m_max..=m_max {
            // m x − a = f + t with f = ⟨m x⟩ and t = nearest(m x) − a
            let f = lat.cf.frac_mul(m);
            let n = (m as f64 * x - f).round() as i64;
            let t_lo = (-radius - f).ceil() as i64;
            let t_hi = (radius - f).floor() as i64;
            for t in t_lo..=t_hi {
                let a = n - t;
                if (m, a) != (0, 0) {
                    let site = LatticeSiteIndex::new(m, a);
                    out.push((site, PlanarPoint::new(f + t as f64, m as f64 * y)));
                }
            }
        }
        out
    })?;
    Ok(cell)
}

pub fn voronoi_cell_origin(lat: &LinearLattice) -> Result<ConvexPolygon> {
    Ok(voronoi_cell_origin_certified(lat)?.polygon)
}

/// Parastichy indices read off the geometric cell; `m = 0` sites map to `None`.
pub fn geometric_indices(neighbors: &[LatticeSiteIndex]) -> BTreeSet<Option<Fraction>> {
    neighbors.iter().map(LatticeSiteIndex::parastichy_index).collect()
}

fn in_fundamental_domain(w: PlanarPoint) -> bool {
    const TOL: f64 = 1e-9;
    w.re.abs() <= 0.5 + TOL && w.norm() >= 1.0 - TOL
}

/// Reduced pair `λ1, λ2` among the parastichy vectors of the current regime.
pub fn reduced_basis(lat: &LinearLattice) -> Result<ReducedBasis> {
    let state = parastichy_state(lat)?;
    let mut vectors = vec![lat.principal_vector(state.i)?, lat.convergent_vector(state.i, state.k)?];
    if state.shape == CellShape::Hexagon {
        vectors.push(lat.convergent_vector(state.i, state.k + 1)?);
    }
    vectors.sort_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()));
    let lambda1 = vectors[0];
    let lambda2 = vectors[1..]
        .iter()
        .copied()
        .find(|&l2| in_fundamental_domain(l2 / lambda1))
        .ok_or(LatticeError::NoReducedPair)?;
    let v = (lambda2 / lambda1).im.abs();
    let delta = lambda1.norm();
    let product = v * delta * delta;
    if (product - lat.y()).abs() > 1e-10 * lat.y() {
        return Err(LatticeError::AreaMismatch { product, y: lat.y() });
    }
    Ok(ReducedBasis {
        lambda1,
        lambda2,
        v,
        delta,
    })
}
