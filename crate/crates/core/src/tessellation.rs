//! Certified Voronoi cells of spiral lattices.
//!
//! Sites are generated lazily: every site within distance `R` of `z_j` has
//! modulus within `R` of `|z_j|`, so the modulus band is a complete candidate
//! set. The shared doubling scheme in [`crate::geom::voronoi`] then certifies
//! each cell against the infinite lattice.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geom::voronoi::{certified_cell, CertifiedCell};
use crate::geom::{self, empty_circumdisk, ConvexPolygon, Disk, GeomError, PlanarPoint};
use crate::spiral::{SiteId, SpiralConfig, SpiralError, SpiralFamily};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TessellationError {
    #[error("cell of site {site:?}: {source}")]
    Cell { site: SiteId, source: GeomError },
    #[error("invalid index range {j_min}..={j_max}")]
    InvalidRange { j_min: u64, j_max: u64 },
    #[error(transparent)]
    Spiral(#[from] SpiralError),
}

pub type Result<T> = std::result::Result<T, TessellationError>;

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub j: u64,
    pub cell: ConvexPolygon,
    pub area: f64,
    /// `j^{1−2α}·area`; undefined for `j = 0`.
    pub normalized_area: Option<f64>,
    /// Indices of the edge-adjacent sites; `0` is the origin.
    pub neighbors: Vec<u64>,
    pub certified_radius: f64,
    pub max_vertex_distance: f64,
}

/// Every `j′ ≥ 0`, `j′ ≠ j`, with `|j′^α − j^α| ≤ radius`.
pub fn candidate_indices(cfg: &SpiralConfig, j: u64, radius: f64) -> Vec<u64> {
    let a = cfg.alpha();
    let r = (j as f64).powf(a);
    let lo = if r - radius <= 0.0 {
        0
    } else {
        (r - radius).powf(1.0 / a).ceil() as u64
    };
    let hi = (r + radius).powf(1.0 / a).floor() as u64;
    (lo..=hi).filter(|&k| k != j).collect()
}

/// Initial search radius: six times the square root of the expected area.
fn initial_radius(fam: &SpiralFamily, site: SiteId) -> f64 {
    match site {
        SiteId::Index(j) => 6.0 * fam.area_guess(j).sqrt(),
        // the first ring of sites bounds the central cell
        SiteId::Origin => 2.0 * fam.modulus(fam.min_index() + 1),
    }
}

/// Certified cell of `site` in any spiral family, starting from `initial`
/// (or the default guess).
pub fn family_cell(fam: &SpiralFamily, site: SiteId, initial: Option<f64>) -> Result<CertifiedCell<SiteId>> {
    let center = fam.position(site);
    let rho = center.norm();
    let r0 = initial.unwrap_or_else(|| initial_radius(fam, site));
    certified_cell(center, r0, |radius| {
        fam.sites_in_band(rho - radius, rho + radius)
            .into_iter()
            .filter(|(id, _)| *id != site)
            .collect()
    })
    .map_err(|source| TessellationError::Cell { site, source })
}

fn standard_id(j: u64) -> SiteId {
    if j == 0 {
        SiteId::Origin
    } else {
        SiteId::Index(j as i64)
    }
}

fn index_of(id: SiteId) -> u64 {
    match id {
        SiteId::Origin => 0,
        SiteId::Index(j) => j as u64,
    }
}

fn record(cfg: &SpiralConfig, j: u64, c: CertifiedCell<SiteId>) -> CellRecord {
    let area = c.area();
    let normalized_area = (j >= 1).then(|| (j as f64).powf(1.0 - 2.0 * cfg.alpha()) * area);
    CellRecord {
        j,
        area,
        normalized_area,
        neighbors: c.neighbors.iter().map(|&n| index_of(n)).collect(),
        certified_radius: c.certified_radius,
        max_vertex_distance: c.max_vertex_distance,
        cell: c.polygon,
    }
}

/// The Voronoi cell `V(z_j, S)`.
pub fn cell(cfg: &SpiralConfig, j: u64) -> Result<CellRecord> {
    cell_with_initial_radius(cfg, j, None)
}

pub fn cell_with_initial_radius(cfg: &SpiralConfig, j: u64, initial: Option<f64>) -> Result<CellRecord> {
    let fam = SpiralFamily::standard(cfg);
    let c = family_cell(&fam, standard_id(j), initial)?;
    Ok(record(cfg, j, c))
}

/// Cells for `j_min..=j_max`, computed in parallel and returned in index order.
pub fn area_sweep(cfg: &SpiralConfig, j_min: u64, j_max: u64) -> Result<Vec<CellRecord>> {
    if j_min < 1 || j_min > j_max {
        return Err(TessellationError::InvalidRange { j_min, j_max });
    }
    (j_min..=j_max).into_par_iter().map(|j| cell(cfg, j)).collect()
}

/// Cells for an arbitrary list of indices, in the given order.
pub fn cells_for(cfg: &SpiralConfig, js: &[u64]) -> Result<Vec<CellRecord>> {
    js.par_iter().map(|&j| cell(cfg, j)).collect()
}

/// `{|j′ − j| : j′ adjacent to j}`, sorted and deduplicated.
pub fn parastichy_numbers_empirical(cfg: &SpiralConfig, j: u64) -> Result<Vec<u64>> {
    let rec = cell(cfg, j)?;
    Ok(difference_set(&rec))
}

pub fn difference_set(rec: &CellRecord) -> Vec<u64> {
    let mut out: Vec<u64> = rec.neighbors.iter().map(|&n| n.abs_diff(rec.j)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Whether every reported neighbor passes the empty-circumdisk test.
///
/// A witness disk for a shared edge is centered on that edge with radius at
/// most the largest vertex distance `d`, so only sites within `2d` matter,
/// and the certified radius covers them.
pub fn adjacencies_are_delaunay(cfg: &SpiralConfig, rec: &CellRecord) -> Result<bool> {
    let fam = SpiralFamily::standard(cfg);
    let center = fam.position(standard_id(rec.j));
    let rho = center.norm();
    let r = rec.certified_radius;
    let sites: Vec<PlanarPoint> = fam
        .sites_in_band(rho - r, rho + r)
        .into_iter()
        .map(|(_, p)| p)
        .filter(|p| p.distance(center) <= r)
        .collect();
    for &n in &rec.neighbors {
        let other = fam.position(standard_id(n));
        let ok = empty_circumdisk(center, other, &sites).map_err(|source| TessellationError::Cell {
            site: standard_id(rec.j),
            source,
        })?;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TilingReport {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub annulus_area: f64,
    /// `Σ |V(z_j) ∩ annulus|` over the cells that can meet the annulus.
    pub covered_area: f64,
    pub relative_error: f64,
    pub cells: usize,
}

/// Checks that the cells around the annulus `|z_{j_lo}| ≤ |ζ| ≤ |z_{j_hi}|`
/// tile it: the areas of their intersections with it add up to its area.
pub fn annulus_tiling(cfg: &SpiralConfig, j_lo: u64, j_hi: u64) -> Result<TilingReport> {
    if j_lo < 1 || j_lo >= j_hi {
        return Err(TessellationError::InvalidRange { j_min: j_lo, j_max: j_hi });
    }
    let fam = SpiralFamily::standard(cfg);
    let r1 = fam.modulus(j_lo as i64);
    let r2 = fam.modulus(j_hi as i64);
    let mut margin = 4.0 * fam.area_guess(j_lo as i64).sqrt().max(fam.area_guess(j_hi as i64).sqrt());
    loop {
        let a = cfg.alpha();
        let lo = if r1 - margin <= 0.0 {
            0
        } else {
            (r1 - margin).powf(1.0 / a).ceil() as u64
        };
        let hi = (r2 + margin).powf(1.0 / a).floor() as u64;
        let js: Vec<u64> = (lo..=hi).collect();
        let recs = js
            .par_iter()
            .map(|&j| cell(cfg, j))
            .collect::<Result<Vec<_>>>()?;
        let reach = recs.iter().map(|r| r.max_vertex_distance).fold(0.0, f64::max);
        // cells outside the band are assumed no larger than twice those inside it
        if 2.0 * reach > margin {
            margin = 4.0 * reach;
            continue;
        }
        let outer = Disk { center: PlanarPoint::ZERO, radius: r2 };
        let inner = Disk { center: PlanarPoint::ZERO, radius: r1 };
        let covered: f64 = recs
            .iter()
            .map(|r| geom::disk_intersection_area(&r.cell, &outer) - geom::disk_intersection_area(&r.cell, &inner))
            .sum();
        let annulus_area = std::f64::consts::PI * (r2 * r2 - r1 * r1);
        return Ok(TilingReport {
            inner_radius: r1,
            outer_radius: r2,
            annulus_area,
            covered_area: covered,
            relative_error: (covered / annulus_area - 1.0).abs(),
            cells: recs.len(),
        });
    }
}
