//! The four control laws. Every function returns a unit heading (or the zero
//! vector where standing still is the correct response).

use crate::geometry::{Point2, VoronoiDiagram, TOLERANCE};

use super::ControlError;

/// Heading straight at the nearest target; ties go to the lowest index.
pub fn pure_distance_control(pursuer: Point2, evaders: &[Point2]) -> Result<Point2, ControlError> {
    let nearest = nearest_index(pursuer, evaders).ok_or(ControlError::NoTargets)?;
    (evaders[nearest] - pursuer)
        .normalized(TOLERANCE)
        .ok_or(ControlError::ZeroDirection)
}

/// Index of the point closest to `from`, first one on ties.
pub fn nearest_index(from: Point2, points: &[Point2]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = from.distance(*p);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Gradient of the evader cell area with respect to a neighbouring
/// pursuer's position: `L / ‖x_p − x_e‖ · (x_p − C_b)`, where `L` is the
/// length of the shared boundary and `C_b` its midpoint.
pub fn area_gradient(
    diagram: &VoronoiDiagram,
    pursuer: usize,
    evader: usize,
) -> Result<Point2, ControlError> {
    let edge = diagram
        .shared_edge(pursuer, evader)
        .ok_or(ControlError::NotNeighbors)?;
    let xp = diagram.sites[pursuer];
    let xe = diagram.sites[evader];
    let separation = xp.distance(xe);
    if separation <= TOLERANCE {
        return Err(ControlError::Singular);
    }
    Ok((xp - edge.centroid()) * (edge.length() / separation))
}

/// Area-minimizing pursuit: steer toward the midpoint of the boundary shared
/// with the evader (the normalized negative area gradient).
pub fn area_min_control(
    diagram: &VoronoiDiagram,
    pursuer: usize,
    evader: usize,
) -> Result<Point2, ControlError> {
    let edge = diagram
        .shared_edge(pursuer, evader)
        .ok_or(ControlError::NotNeighbors)?;
    (edge.centroid() - diagram.sites[pursuer])
        .normalized(TOLERANCE)
        .ok_or(ControlError::ZeroDirection)
}

/// Constant-area evasion: steer toward the midpoint of the boundary shared
/// with the given pursuer.
pub fn constant_area_control(
    diagram: &VoronoiDiagram,
    evader: usize,
    pursuer: usize,
) -> Result<Point2, ControlError> {
    let edge = diagram
        .shared_edge(evader, pursuer)
        .ok_or(ControlError::NotNeighbors)?;
    (edge.centroid() - diagram.sites[evader])
        .normalized(TOLERANCE)
        .ok_or(ControlError::ZeroDirection)
}

/// Move toward the centroid of the evader's own cell; zero at the centroid.
pub fn move_to_centroid_control(diagram: &VoronoiDiagram, evader: usize) -> Point2 {
    let c = diagram.cells[evader].centroid();
    (c - diagram.sites[evader])
        .normalized(TOLERANCE)
        .unwrap_or(Point2::ZERO)
}

/// Move toward a fixed point; zero once there.
pub fn move_to_target_control(position: Point2, target: Point2) -> Point2 {
    (target - position).normalized(TOLERANCE).unwrap_or(Point2::ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{clipped_voronoi, ConvexPolygon};

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    fn diagram(sites: &[(f64, f64)]) -> VoronoiDiagram {
        let pts: Vec<Point2> = sites.iter().map(|&p| p.into()).collect();
        clipped_voronoi(&pts, &ConvexPolygon::square(10.0)).unwrap()
    }

    #[test]
    fn pure_distance_examples() {
        let u = pure_distance_control(Point2::new(0.0, 0.0), &[Point2::new(3.0, 4.0)]).unwrap();
        assert!(close(u, Point2::new(0.6, 0.8), 1e-15));
        let u = pure_distance_control(
            Point2::new(5.0, 5.0),
            &[Point2::new(5.0, 9.0), Point2::new(5.0, 6.0)],
        )
        .unwrap();
        assert!(close(u, Point2::new(0.0, 1.0), 1e-15));
        let u = pure_distance_control(
            Point2::new(1.0, 1.0),
            &[Point2::new(1.0, 3.0), Point2::new(3.0, 1.0)],
        )
        .unwrap();
        assert!(close(u, Point2::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn pure_distance_errors() {
        assert_eq!(
            pure_distance_control(Point2::new(1.0, 1.0), &[]),
            Err(ControlError::NoTargets)
        );
        assert_eq!(
            pure_distance_control(Point2::new(1.0, 1.0), &[Point2::new(1.0, 1.0)]),
            Err(ControlError::ZeroDirection)
        );
    }

    #[test]
    fn gradient_two_site_example_and_mirror() {
        // sites: 0 = evader (8,5), 1 = pursuer (2,5)
        let d = diagram(&[(8.0, 5.0), (2.0, 5.0)]);
        let g = area_gradient(&d, 1, 0).unwrap();
        assert!(close(g, Point2::new(-5.0, 0.0), 1e-12));
        let m = diagram(&[(2.0, 5.0), (8.0, 5.0)]);
        let g = area_gradient(&m, 1, 0).unwrap();
        assert!(close(g, Point2::new(5.0, 0.0), 1e-12));
    }

    #[test]
    fn gradient_requires_neighbors() {
        let d = diagram(&[(1.0, 5.0), (5.0, 5.0), (9.0, 5.0)]);
        assert_eq!(area_gradient(&d, 0, 2), Err(ControlError::NotNeighbors));
        assert_eq!(area_min_control(&d, 0, 2), Err(ControlError::NotNeighbors));
    }

    #[test]
    fn area_min_examples() {
        let d = diagram(&[(8.0, 5.0), (2.0, 5.0)]);
        assert!(close(area_min_control(&d, 1, 0).unwrap(), Point2::new(1.0, 0.0), 1e-15));
        let d = diagram(&[(5.0, 8.0), (5.0, 2.0)]);
        assert!(close(area_min_control(&d, 1, 0).unwrap(), Point2::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn constant_area_examples() {
        let d = diagram(&[(8.0, 5.0), (2.0, 5.0)]);
        let ue = constant_area_control(&d, 0, 1).unwrap();
        assert!(close(ue, Point2::new(-1.0, 0.0), 1e-15));
        let up = area_min_control(&d, 1, 0).unwrap();
        assert!((ue.dot(up) + 1.0).abs() < 1e-12, "headings must be antiparallel");

        let d = diagram(&[(5.0, 5.0), (5.0, 1.0)]);
        let c = d.shared_edge(0, 1).unwrap().centroid();
        assert!(close(c, Point2::new(5.0, 3.0), 1e-12));
        assert!(close(constant_area_control(&d, 0, 1).unwrap(), Point2::new(0.0, -1.0), 1e-15));
    }

    #[test]
    fn move_to_centroid_examples() {
        let d = diagram(&[(8.0, 5.0), (2.0, 5.0)]);
        assert!(close(move_to_centroid_control(&d, 0), Point2::new(-1.0, 0.0), 1e-12));

        let d = diagram(&[(7.5, 5.0), (2.5, 5.0)]);
        assert_eq!(move_to_centroid_control(&d, 0), Point2::ZERO);

        let d = diagram(&[(1.0, 1.0)]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(move_to_centroid_control(&d, 0), Point2::new(h, h), 1e-12));
    }

    #[test]
    fn move_to_target_holds_at_target() {
        let p = Point2::new(2.0, 2.0);
        assert_eq!(move_to_target_control(p, p), Point2::ZERO);
        assert!(close(move_to_target_control(p, Point2::new(0.0, 2.0)), Point2::new(-1.0, 0.0), 0.0));
    }
}
