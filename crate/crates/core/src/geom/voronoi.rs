//! Certified Voronoi cell of one site against a lazily enumerated site set.
//!
//! The caller supplies `candidates(radius)`, which must return every site
//! within `radius` of the center (extra sites are fine). A box of half-width
//! `2·radius` around the center is clipped against their bisectors. If the
//! farthest vertex `d` satisfies `2d ≤ radius`, no site outside the window can
//! cut the cell, since a site cuts it only if it lies within `2d`. Otherwise
//! the radius doubles.

use super::{clip_labeled, area, ConvexPolygon, GeomError, HalfPlane, PlanarPoint, Result};

pub const MAX_DOUBLINGS: u32 = 20;

/// Relative edge length below which two cells only touch at a corner.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CertifiedCell<K> {
    pub polygon: ConvexPolygon,
    /// Site whose bisector carries edge `i` (from vertex `i` to `i+1`).
    pub edge_sites: Vec<K>,
    /// Sites sharing an edge of positive length, in edge order, deduplicated.
    pub neighbors: Vec<K>,
    pub certified_radius: f64,
    pub max_vertex_distance: f64,
    pub doublings: u32,
}

impl<K> CertifiedCell<K> {
    pub fn area(&self) -> f64 {
        area(&self.polygon)
    }
}

pub fn certified_cell<K, F>(center: PlanarPoint, initial_radius: f64, mut candidates: F) -> Result<CertifiedCell<K>>
where
    K: Clone + PartialEq,
    F: FnMut(f64) -> Vec<(K, PlanarPoint)>,
{
    assert!(initial_radius > 0.0 && initial_radius.is_finite());
    let mut radius = initial_radius;
    for doublings in 0..=MAX_DOUBLINGS {
        let mut sites: Vec<(f64, K, PlanarPoint)> = candidates(radius)
            .into_iter()
            .filter_map(|(k, p)| {
                let d = p.distance(center);
                (d > 0.0 && d <= radius).then_some((d, k, p))
            })
            .collect();
        sites.sort_by(|a, b| a.0.total_cmp(&b.0));

        let b = 2.0 * radius;
        let mut verts = vec![
            center + PlanarPoint::new(-b, -b),
            center + PlanarPoint::new(b, -b),
            center + PlanarPoint::new(b, b),
            center + PlanarPoint::new(-b, b),
        ];
        let mut labels: Vec<Option<K>> = vec![None; 4];
        let mut reach = verts.iter().map(|v| v.distance(center)).fold(0.0, f64::max);
        for (d, key, p) in sites {
            if d >= 2.0 * reach {
                // sorted by distance: nothing further can cut
                break;
            }
            let hp = HalfPlane { anchor: center, other: p };
            let (v, l) = clip_labeled(&verts, &labels, &hp.constraint(), Some(key));
            verts = v;
            labels = l;
            if verts.is_empty() {
                // cannot happen for a center strictly inside every half-plane
                break;
            }
            reach = verts.iter().map(|v| v.distance(center)).fold(0.0, f64::max);
        }
        if verts.len() >= 3 && 2.0 * reach <= radius && labels.iter().all(Option::is_some) {
            let polygon = ConvexPolygon { vertices: verts };
            let edge_sites: Vec<K> = labels.into_iter().map(|l| l.expect("checked")).collect();
            let neighbors = edge_neighbors(&polygon, &edge_sites, reach);
            return Ok(CertifiedCell {
                polygon,
                edge_sites,
                neighbors,
                certified_radius: radius,
                max_vertex_distance: reach,
                doublings,
            });
        }
        radius *= 2.0;
    }
    Err(GeomError::Unbounded {
        doublings: MAX_DOUBLINGS,
        radius,
    })
}

fn edge_neighbors<K: Clone + PartialEq>(polygon: &ConvexPolygon, edge_sites: &[K], scale: f64) -> Vec<K> {
    let v = polygon.vertices();
    let n = v.len();
    let mut out: Vec<K> = Vec::new();
    for i in 0..n {
        let len = v[i].distance(v[(i + 1) % n]);
        if len > EDGE_TOLERANCE * scale && !out.contains(&edge_sites[i]) {
            out.push(edge_sites[i].clone());
        }
    }
    out
}
