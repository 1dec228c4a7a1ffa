//! Planar geometry: points, convex polygons and bounded Voronoi diagrams.

mod point;
mod polygon;
mod voronoi;

use thiserror::Error;

pub use point::{Point2, Segment};
pub use polygon::{polygon_area, polygon_centroid, ConvexPolygon};
pub use voronoi::{clipped_voronoi, EdgeSource, VoronoiDiagram};

/// Distance below which two points are treated as the same, and shorter
/// edges as absent.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate polygon with {vertices} distinct vertices")]
    Degenerate { vertices: usize },
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon is not convex at vertex {vertex}")]
    NotConvex { vertex: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("no sites given")]
    NoSites,
    #[error("sites {first} and {second} coincide")]
    CoincidentSites { first: usize, second: usize },
    #[error("site {index} lies outside the domain")]
    SiteOutsideDomain { index: usize },
}
