//! Planar geometry kernel: oriented rectangles, convex clipping, areas, IoU
//! and circle/rectangle contact queries.
//!
//! Everything here is a pure function over `f64` meters and radians.

use std::f64::consts::PI;

/// Tolerance used when clipping; vertices closer than this to an edge line
/// are treated as lying on it and collinear output vertices are dropped.
pub const EPS_GEOM: f64 = 1e-9;

/// A 2D vector / point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    /// Rotates counter-clockwise by `theta` radians.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > PI {
        t -= two_pi;
    }
    t
}

/// Planar pose; `theta` is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a point from the pose's local frame into the world frame.
    pub fn to_world(&self, local: Vec2) -> Vec2 {
        local.rotate(self.theta) + self.position()
    }

    /// Maps a world point into the pose's local frame.
    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.position()).rotate(-self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("rectangle half extents must be positive and finite, got ({hx}, {hy})")]
pub struct DegenerateRect {
    pub hx: f64,
    pub hy: f64,
}

/// Rectangle given by a center pose and positive half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub pose: Pose2D,
    hx: f64,
    hy: f64,
}

impl OrientedRect {
    pub fn new(pose: Pose2D, hx: f64, hy: f64) -> Result<Self, DegenerateRect> {
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(DegenerateRect { hx, hy });
        }
        Ok(Self { pose, hx, hy })
    }

    pub fn half_extents(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn center(&self) -> Vec2 {
        self.pose.position()
    }

    pub fn area(&self) -> f64 {
        4.0 * self.hx * self.hy
    }

    pub fn with_pose(&self, pose: Pose2D) -> Self {
        Self { pose, ..*self }
    }
}

/// Convex polygon with counter-clockwise winding. May be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    pub vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Self { vertices }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Point membership, boundary inclusive.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a) >= 0.0
        })
    }
}

pub fn rect_vertices(r: &OrientedRect) -> ConvexPolygon {
    let (hx, hy) = r.half_extents();
    let corners = [
        Vec2::new(-hx, -hy),
        Vec2::new(hx, -hy),
        Vec2::new(hx, hy),
        Vec2::new(-hx, hy),
    ];
    ConvexPolygon::new(corners.iter().map(|&c| r.pose.to_world(c)).collect())
}

/// Sutherland-Hodgman clipping of `subject` against the convex `clip`.
pub fn clip_convex(subject: &ConvexPolygon, clip: &ConvexPolygon) -> ConvexPolygon {
    if subject.len() < 3 || clip.len() < 3 {
        return ConvexPolygon::default();
    }
    let mut output = subject.vertices.clone();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip.vertices[i];
        let b = clip.vertices[(i + 1) % m];
        let edge = b - a;
        let len = edge.norm();
        if len <= EPS_GEOM {
            continue;
        }
        // signed distance to the edge line, positive on the inside (left)
        let side = |p: Vec2| edge.cross(p - a) / len;

        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let next = input[(j + 1) % n];
            let dc = side(cur);
            let dn = side(next);
            let cur_in = dc >= -EPS_GEOM;
            let next_in = dn >= -EPS_GEOM;
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in && (dc - dn).abs() > 0.0 {
                let t = dc / (dc - dn);
                if t > 0.0 && t < 1.0 {
                    output.push(cur + (next - cur).scale(t));
                }
            }
        }
    }
    ConvexPolygon::new(cleanup(output))
}

/// Drops duplicate and collinear vertices; fewer than 3 survivors means empty.
fn cleanup(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.dedup_by(|a, b| (*a - *b).norm() <= EPS_GEOM);
    while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= EPS_GEOM {
        pts.pop();
    }
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        let n = pts.len();
        for i in 0..n {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            let base = (next - prev).norm();
            let twice_area = (cur - prev).cross(next - prev).abs();
            if base <= EPS_GEOM || twice_area / base <= EPS_GEOM {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }
    if pts.len() < 3 {
        pts.clear();
    }
    pts
}

/// Shoelace area; zero for fewer than three vertices.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| p.vertices[i].cross(p.vertices[(i + 1) % n]))
        .sum();
    (0.5 * twice).max(0.0)
}

/// Intersection over union of two rectangle footprints.
pub fn rect_iou(a: &OrientedRect, b: &OrientedRect) -> f64 {
    // Order operands canonically so that iou(a, b) and iou(b, a) run the
    // exact same arithmetic.
    let (a, b) = if rect_key(a) <= rect_key(b) { (a, b) } else { (b, a) };
    if same_footprint(a, b) {
        return 1.0;
    }
    let inter = polygon_area(&clip_convex(&rect_vertices(a), &rect_vertices(b)));
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Identical centre and extents with orientations equal modulo the
/// rectangle's symmetry (π, or π/2 for squares).
fn same_footprint(a: &OrientedRect, b: &OrientedRect) -> bool {
    if a.pose.x != b.pose.x || a.pose.y != b.pose.y {
        return false;
    }
    let dtheta = normalize_angle(a.pose.theta - b.pose.theta);
    let half_turn = |d: f64| d == 0.0 || (d.abs() - PI).abs() <= EPS_GEOM * 1e-3;
    if a.half_extents() == b.half_extents() && half_turn(dtheta) {
        return true;
    }
    let (ahx, ahy) = a.half_extents();
    let (bhx, bhy) = b.half_extents();
    let quarter = (dtheta.abs() - PI / 2.0).abs() <= EPS_GEOM * 1e-3;
    (ahx, ahy) == (bhy, bhx) && quarter
}

fn rect_key(r: &OrientedRect) -> [u64; 5] {
    let (hx, hy) = r.half_extents();
    [r.pose.x, r.pose.y, r.pose.theta, hx, hy].map(|v| {
        // total order on finite floats, including sign
        let bits = v.to_bits();
        if bits >> 63 == 1 {
            !bits
        } else {
            bits | (1 << 63)
        }
    })
}

/// Result of a circle (effector) vs rectangle (block) query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Gap between the circle and the rectangle; zero when touching or overlapping.
    pub clearance: f64,
    /// Unit direction in which the effector pushes the block.
    pub push_normal: Vec2,
    /// Overlap depth; zero when the circle is clear of the rectangle.
    pub penetration: f64,
    /// Closest point on the rectangle boundary, world frame.
    pub contact_point: Vec2,
}

pub fn circle_rect_contact(center: Vec2, radius: f64, r: &OrientedRect) -> Contact {
    let (hx, hy) = r.half_extents();
    let local = r.pose.to_local(center);
    let inside = local.x.abs() < hx && local.y.abs() < hy;

    let (closest, normal_local, signed_dist) = if inside {
        // nearest face; block is pushed away from the effector, i.e. along
        // the inward normal of that face
        let dx = hx - local.x.abs();
        let dy = hy - local.y.abs();
        if dx <= dy {
            let sx = if local.x >= 0.0 { 1.0 } else { -1.0 };
            (Vec2::new(sx * hx, local.y), Vec2::new(-sx, 0.0), -dx)
        } else {
            let sy = if local.y >= 0.0 { 1.0 } else { -1.0 };
            (Vec2::new(local.x, sy * hy), Vec2::new(0.0, -sy), -dy)
        }
    } else {
        let closest = Vec2::new(local.x.clamp(-hx, hx), local.y.clamp(-hy, hy));
        let d = closest - local;
        let dist = d.norm();
        let normal = if dist > 0.0 {
            d.scale(1.0 / dist)
        } else {
            // on the boundary: push along the inward normal of the face hit
            boundary_inward_normal(local, hx, hy)
        };
        (closest, normal, dist)
    };

    let clearance = (signed_dist - radius).max(0.0);
    let penetration = (radius - signed_dist).max(0.0);
    Contact {
        clearance,
        push_normal: normal_local.rotate(r.pose.theta),
        penetration,
        contact_point: r.pose.to_world(closest),
    }
}

fn boundary_inward_normal(local: Vec2, hx: f64, hy: f64) -> Vec2 {
    let dx = hx - local.x.abs();
    let dy = hy - local.y.abs();
    if dx <= dy {
        Vec2::new(if local.x >= 0.0 { -1.0 } else { 1.0 }, 0.0)
    } else {
        Vec2::new(0.0, if local.y >= 0.0 { -1.0 } else { 1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square(x: f64, y: f64, theta: f64, h: f64) -> OrientedRect {
        OrientedRect::new(Pose2D::new(x, y, theta), h, h).unwrap()
    }

    #[test]
    fn axis_aligned_unit_square_vertices() {
        let v = rect_vertices(&square(0.0, 0.0, 0.0, 0.5)).vertices;
        let expected = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
        for (p, (ex, ey)) in v.iter().zip(expected) {
            assert_abs_diff_eq!(p.x, ex, epsilon = 1e-15);
            assert_abs_diff_eq!(p.y, ey, epsilon = 1e-15);
        }
    }

    #[test]
    fn quarter_turn_square_is_cyclic_shift() {
        let a = rect_vertices(&square(0.0, 0.0, 0.0, 0.5)).vertices;
        let b = rect_vertices(&square(0.0, 0.0, PI / 2.0, 0.5)).vertices;
        // rotated vertex i lands on original vertex i+1
        for i in 0..4 {
            assert_abs_diff_eq!(b[i].x, a[(i + 1) % 4].x, epsilon = 1e-12);
            assert_abs_diff_eq!(b[i].y, a[(i + 1) % 4].y, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_square_vertices() {
        assert!(OrientedRect::new(Pose2D::new(0.0, 0.0, PI / 4.0), 1.0, 0.0).is_err());
        let v = rect_vertices(&square(0.0, 0.0, PI / 4.0, 0.5)).vertices;
        for p in &v {
            assert_abs_diff_eq!(p.norm(), 0.5f64.sqrt(), epsilon = 1e-12);
            // on a diagonal: one coordinate is zero after a 45° turn
            assert!(p.x.abs() < 1e-12 || p.y.abs() < 1e-12);
        }
        assert!(is_ccw(&v));
    }

    fn is_ccw(v: &[Vec2]) -> bool {
        let n = v.len();
        (0..n).all(|i| (v[(i + 1) % n] - v[i]).cross(v[(i + 2) % n] - v[(i + 1) % n]) > 0.0)
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&rect_vertices(&square(0.0, 0.0, 0.0, 0.5))), 1.0);
        let tri = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]);
        assert_eq!(polygon_area(&tri), 0.5);
        assert_eq!(polygon_area(&ConvexPolygon::default()), 0.0);
    }

    #[test]
    fn clip_identical_disjoint_offset() {
        let a = rect_vertices(&square(0.0, 0.0, 0.0, 0.5));
        let same = clip_convex(&a, &a);
        assert_abs_diff_eq!(polygon_area(&same), 1.0, epsilon = 1e-12);
        assert_eq!(same.len(), 4);

        let far = rect_vertices(&square(10.0, 10.0, 0.0, 0.5));
        assert!(clip_convex(&a, &far).is_empty());

        let shifted = rect_vertices(&square(0.5, 0.0, 0.0, 0.5));
        let c = clip_convex(&a, &shifted);
        assert_abs_diff_eq!(polygon_area(&c), 0.5, epsilon = 1e-12);
        let xs: Vec<f64> = c.vertices.iter().map(|p| p.x).collect();
        let w = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn touching_edges_give_empty_clip() {
        let a = rect_vertices(&square(0.0, 0.0, 0.0, 0.5));
        let b = rect_vertices(&square(1.0, 0.0, 0.0, 0.5));
        assert_eq!(polygon_area(&clip_convex(&a, &b)), 0.0);
    }

    #[test]
    fn iou_cases() {
        let a = square(0.0, 0.0, 0.3, 0.5);
        assert_eq!(rect_iou(&a, &a), 1.0);
        assert_eq!(rect_iou(&a, &square(5.0, 0.0, 0.0, 0.5)), 0.0);
        let u = square(0.0, 0.0, 0.0, 0.5);
        let v = square(0.5, 0.0, 0.0, 0.5);
        assert_abs_diff_eq!(rect_iou(&u, &v), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(rect_iou(&u, &v), rect_iou(&v, &u));
    }

    #[test]
    fn contact_cases() {
        let r = square(0.0, 0.0, 0.0, 0.5);
        let c = circle_rect_contact(Vec2::new(0.6, 0.0), 0.05, &r);
        assert_abs_diff_eq!(c.clearance, 0.05, epsilon = 1e-12);
        assert_eq!(c.penetration, 0.0);
        assert_abs_diff_eq!(c.push_normal.x, -1.0, epsilon = 1e-12);

        let on = circle_rect_contact(Vec2::new(0.5, 0.1), 0.01, &r);
        assert_eq!(on.clearance, 0.0);
        assert_abs_diff_eq!(on.penetration, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(on.push_normal.x, -1.0, epsilon = 1e-15);

        let far = circle_rect_contact(Vec2::new(3.5, 4.5), 0.1, &r);
        assert_abs_diff_eq!(far.clearance, 5.0 - 0.1, epsilon = 1e-12);
        assert_eq!(far.penetration, 0.0);

        // inside, near the +y face: block is pushed toward -y
        let inside = circle_rect_contact(Vec2::new(0.0, 0.45), 0.02, &r);
        assert_abs_diff_eq!(inside.penetration, 0.07, epsilon = 1e-12);
        assert_abs_diff_eq!(inside.push_normal.y, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn contact_normal_rotates_with_block() {
        let r = square(0.0, 0.0, PI / 2.0, 0.5);
        let c = circle_rect_contact(Vec2::new(0.0, 0.54), 0.05, &r);
        assert_abs_diff_eq!(c.penetration, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(c.push_normal.y, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.push_normal.x, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_normalization() {
        assert_abs_diff_eq!(normalize_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_eq!(normalize_angle(-PI), PI);
        assert_abs_diff_eq!(normalize_angle(-PI / 2.0 - 4.0 * PI), -PI / 2.0, epsilon = 1e-12);
    }
}
