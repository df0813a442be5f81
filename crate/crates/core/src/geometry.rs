//! Plane-geometry helpers for level curves: segment intersection, polyline
//! self-intersection, discrete Hausdorff distance, point-in-polygon.

pub type Point2 = [f64; 2];

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Exact segment-intersection predicate (shared endpoints count).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Self-intersection of a closed polyline (`points[0] == points[last]`).
/// Adjacent segments (sharing an endpoint, including the closing wrap) are
/// skipped; everything else is tested pairwise.
pub fn polyline_self_intersects(points: &[Point2]) -> bool {
    let m = points.len();
    if m < 4 {
        return false;
    }
    let nseg = m - 1;
    for i in 0..nseg {
        for j in i + 2..nseg {
            // The closing segment nseg-1 is adjacent to segment 0.
            if i == 0 && j == nseg - 1 {
                continue;
            }
            if segments_intersect(points[i], points[i + 1], points[j], points[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// Symmetric discrete Hausdorff distance between two point sets.
pub fn hausdorff_distance(a: &[Point2], b: &[Point2]) -> f64 {
    fn directed(from: &[Point2], to: &[Point2]) -> f64 {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
    directed(a, b).max(directed(b, a))
}

/// Ray-casting point-in-polygon test on a closed polyline.
pub fn point_in_polygon(p: Point2, polygon: &[Point2]) -> bool {
    let mut inside = false;
    let m = polygon.len();
    if m < 4 {
        return false;
    }
    for i in 0..m - 1 {
        let [x1, y1] = polygon[i];
        let [x2, y2] = polygon[i + 1];
        if (y1 > p[1]) != (y2 > p[1]) {
            let x_cross = x1 + (p[1] - y1) / (y2 - y1) * (x2 - x1);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize, radius: f64) -> Vec<Point2> {
        let mut pts: Vec<Point2> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [radius * t.cos(), radius * t.sin()]
            })
            .collect();
        pts.push(pts[0]);
        pts
    }

    #[test]
    fn circle_never_flags() {
        assert!(!polyline_self_intersects(&circle(128, 1.0)));
        assert!(!polyline_self_intersects(&circle(512, 0.3)));
    }

    #[test]
    fn figure_eight_always_flags() {
        // Lemniscate-like closed polyline crossing itself at the origin.
        let n = 128;
        let mut pts: Vec<Point2> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [t.sin(), t.sin() * t.cos()]
            })
            .collect();
        pts.push(pts[0]);
        assert!(polyline_self_intersects(&pts));
    }

    #[test]
    fn crossing_segments_detected() {
        assert!(segments_intersect([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
    }

    #[test]
    fn hausdorff_of_shifted_circles() {
        let a = circle(256, 1.0);
        let b: Vec<Point2> = a.iter().map(|p| [p[0] + 0.05, p[1]]).collect();
        let d = hausdorff_distance(&a, &b);
        assert!(d <= 0.05 + 1e-12);
        assert!(d > 0.04);
    }

    #[test]
    fn point_in_unit_circle() {
        let c = circle(256, 1.0);
        assert!(point_in_polygon([0.0, 0.0], &c));
        assert!(point_in_polygon([0.7, 0.1], &c));
        assert!(!point_in_polygon([1.1, 0.0], &c));
        assert!(!point_in_polygon([0.8, 0.8], &c));
    }
}
