use std::collections::BTreeMap;

use super::{ConvexPolygon, GeometryError, Point2, Segment, TOLERANCE};

/// What generated an edge of a clipped cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSource {
    /// Edge `k` of the domain polygon.
    Domain(usize),
    /// Perpendicular bisector with the given site.
    Bisector(usize),
}

/// Voronoi tessellation of point sites, clipped to a convex domain.
#[derive(Debug, Clone)]
pub struct VoronoiDiagram {
    pub sites: Vec<Point2>,
    pub cells: Vec<ConvexPolygon>,
    pub neighbors: Vec<Vec<usize>>,
    /// Keyed by `(i, j)` with `i < j`; the segment is oriented along cell `i`.
    pub shared_edges: BTreeMap<(usize, usize), Segment>,
    edge_sources: Vec<Vec<EdgeSource>>,
}

impl VoronoiDiagram {
    /// Common boundary of cells `i` and `j`, if they are Voronoi-adjacent.
    pub fn shared_edge(&self, i: usize, j: usize) -> Option<Segment> {
        if i == j {
            return None;
        }
        if i < j {
            self.shared_edges.get(&(i, j)).copied()
        } else {
            self.shared_edges.get(&(j, i)).map(Segment::reversed)
        }
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.shared_edge(i, j).is_some()
    }

    pub fn cell_area(&self, i: usize) -> f64 {
        self.cells[i].area()
    }

    /// Generator of every edge of cell `i`, aligned with its vertex list
    /// (edge `k` runs from vertex `k` to vertex `k + 1`).
    pub fn edge_sources(&self, i: usize) -> &[EdgeSource] {
        &self.edge_sources[i]
    }

    /// Index of the first cell that contains `q`.
    pub fn locate(&self, q: Point2) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(q, TOLERANCE))
    }
}

/// Builds the bounded Voronoi diagram by intersecting the domain with the
/// bisector half-planes of every other site.
pub fn clipped_voronoi(
    sites: &[Point2],
    domain: &ConvexPolygon,
) -> Result<VoronoiDiagram, GeometryError> {
    if sites.is_empty() {
        return Err(GeometryError::NoSites);
    }
    for (i, s) in sites.iter().enumerate() {
        if !s.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !domain.contains(*s, TOLERANCE) {
            return Err(GeometryError::SiteOutsideDomain { index: i });
        }
    }
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            if sites[i].distance(sites[j]) <= TOLERANCE {
                return Err(GeometryError::CoincidentSites { first: i, second: j });
            }
        }
    }

    let mut cells = Vec::with_capacity(sites.len());
    let mut edge_sources = Vec::with_capacity(sites.len());
    for (i, &site) in sites.iter().enumerate() {
        let mut ring: Vec<(Point2, EdgeSource)> = domain
            .vertices()
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, EdgeSource::Domain(k)))
            .collect();
        for (j, &other) in sites.iter().enumerate() {
            if j == i {
                continue;
            }
            ring = clip_half_plane(&ring, site, other, j);
            if ring.is_empty() {
                break;
            }
        }
        let (verts, labels): (Vec<_>, Vec<_>) = ring.into_iter().unzip();
        cells.push(ConvexPolygon::from_ccw_unchecked(verts));
        edge_sources.push(labels);
    }

    let mut shared_edges = BTreeMap::new();
    let mut neighbors = vec![Vec::new(); sites.len()];
    for i in 0..sites.len() {
        let verts = cells[i].vertices();
        let n = verts.len();
        for (k, src) in edge_sources[i].iter().enumerate() {
            if let EdgeSource::Bisector(j) = *src {
                if j <= i {
                    continue;
                }
                let seg = Segment::new(verts[k], verts[(k + 1) % n]);
                if seg.length() > TOLERANCE {
                    shared_edges.insert((i, j), seg);
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }

    Ok(VoronoiDiagram {
        sites: sites.to_vec(),
        cells,
        neighbors,
        shared_edges,
        edge_sources,
    })
}

/// Keeps the part of a labelled convex ring that is at least as close to
/// `site` as to `other`. Each entry pairs a vertex with the source of the edge
/// leaving it.
fn clip_half_plane(
    ring: &[(Point2, EdgeSource)],
    site: Point2,
    other: Point2,
    other_index: usize,
) -> Vec<(Point2, EdgeSource)> {
    let normal = other - site;
    let mid = site.midpoint(other);
    let inv = 1.0 / normal.norm();
    let side = |q: Point2| (q - mid).dot(normal) * inv;
    // Vertices within this band of the bisector count as on it.
    const ON_LINE: f64 = 1e-12;

    let n = ring.len();
    let mut out: Vec<(Point2, EdgeSource)> = Vec::with_capacity(n + 2);
    for k in 0..n {
        let (p, label) = ring[k];
        let q = ring[(k + 1) % n].0;
        let sp = side(p);
        let sq = side(q);
        let p_in = sp <= ON_LINE;
        let q_in = sq <= ON_LINE;
        match (p_in, q_in) {
            (true, true) => out.push((p, label)),
            (true, false) => {
                out.push((p, label));
                if sp < -ON_LINE {
                    let t = sp / (sp - sq);
                    out.push((p + (q - p) * t, EdgeSource::Bisector(other_index)));
                } else if let Some(last) = out.last_mut() {
                    // p already lies on the bisector: the edge leaving it follows the cut.
                    last.1 = EdgeSource::Bisector(other_index);
                }
            }
            (false, true) => {
                if sq < -ON_LINE {
                    let t = sp / (sp - sq);
                    out.push((p + (q - p) * t, label));
                }
            }
            (false, false) => {}
        }
    }

    // Drop zero-length edges; a dropped vertex hands its position to the next.
    let mut cleaned: Vec<(Point2, EdgeSource)> = Vec::with_capacity(out.len());
    for (v, label) in out {
        if let Some(last) = cleaned.last_mut() {
            if last.0.distance(v) <= ON_LINE {
                *last = (last.0, label);
                continue;
            }
        }
        cleaned.push((v, label));
    }
    while cleaned.len() > 1 && cleaned[0].0.distance(cleaned[cleaned.len() - 1].0) <= ON_LINE {
        cleaned.pop();
    }
    if cleaned.len() < 3 {
        cleaned.clear();
    }
    cleaned
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPolygon {
        ConvexPolygon::square(10.0)
    }

    #[test]
    fn single_site_owns_domain() {
        let d = clipped_voronoi(&[Point2::new(5.0, 5.0)], &square()).unwrap();
        assert_eq!(d.cells.len(), 1);
        assert!((d.cell_area(0) - 100.0).abs() < 1e-12);
        assert!(d.neighbors[0].is_empty());
    }

    #[test]
    fn two_sites_split_along_bisector() {
        let d = clipped_voronoi(&[Point2::new(2.0, 5.0), Point2::new(8.0, 5.0)], &square()).unwrap();
        assert!((d.cell_area(0) - 50.0).abs() < 1e-12);
        assert!((d.cell_area(1) - 50.0).abs() < 1e-12);
        let e = d.shared_edge(0, 1).unwrap();
        assert!((e.length() - 10.0).abs() < 1e-12);
        let c = e.centroid();
        assert!((c.x - 5.0).abs() < 1e-12 && (c.y - 5.0).abs() < 1e-12);
        assert!(e.a.x == 5.0 && e.b.x == 5.0);
        let (lo, hi) = d.cells[0].bounding_box();
        assert_eq!((lo.x, lo.y, hi.x, hi.y), (0.0, 0.0, 5.0, 10.0));
    }

    #[test]
    fn collinear_far_sites_are_not_adjacent() {
        let sites = [Point2::new(1.0, 5.0), Point2::new(5.0, 5.0), Point2::new(9.0, 5.0)];
        let d = clipped_voronoi(&sites, &square()).unwrap();
        assert!(d.shared_edge(0, 2).is_none());
        assert!(d.shared_edge(0, 1).is_some());
        assert!(d.shared_edge(2, 1).is_some());
        assert_eq!(d.neighbors[1], vec![0, 2]);
    }

    #[test]
    fn shared_edge_is_symmetric() {
        let sites = [Point2::new(1.0, 1.0), Point2::new(9.0, 1.0), Point2::new(5.0, 9.0)];
        let d = clipped_voronoi(&sites, &square()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let a = d.shared_edge(i, j).unwrap();
                let b = d.shared_edge(j, i).unwrap();
                assert_eq!(a.length(), b.length());
                assert_eq!(a.centroid(), b.centroid());
            }
        }
    }

    #[test]
    fn errors_for_bad_sites() {
        let dup = [Point2::new(1.0, 1.0), Point2::new(1.0, 1.0 + 1e-12)];
        assert!(matches!(
            clipped_voronoi(&dup, &square()),
            Err(GeometryError::CoincidentSites { first: 0, second: 1 })
        ));
        assert!(matches!(
            clipped_voronoi(&[Point2::new(11.0, 1.0)], &square()),
            Err(GeometryError::SiteOutsideDomain { index: 0 })
        ));
        assert!(matches!(clipped_voronoi(&[], &square()), Err(GeometryError::NoSites)));
    }

    #[test]
    fn site_on_boundary_gets_a_cell() {
        let sites = [Point2::new(0.0, 0.0), Point2::new(10.0, 5.0)];
        let d = clipped_voronoi(&sites, &square()).unwrap();
        let total: f64 = d.cells.iter().map(|c| c.area()).sum();
        assert!((total - 100.0).abs() < 1e-9);
        assert!(d.cells[0].contains(sites[0], 1e-9));
    }
}
