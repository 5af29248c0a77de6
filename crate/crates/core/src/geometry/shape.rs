use alloc::vec::Vec;
use core::f64::consts::PI;


use super::{closest_on_segment, Aabb, Region, SignedDistance};
use crate::{Error, Result, Vec2};

/// A simple closed planar shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk {
        center: Vec2,
        radius: f64,
    },
    /// Ellipse with semi-axes `(a, b)` along the frame rotated by `angle`.
    Ellipse {
        center: Vec2,
        semi_axes: Vec2,
        angle: f64,
    },
    /// Simple polygon, counter-clockwise.
    Polygon { vertices: Vec<Vec2> },
}

impl Shape {
    pub fn disk(center: Vec2, radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn ellipse(center: Vec2, semi_axes: Vec2, angle: f64) -> Self {
        Shape::Ellipse {
            center,
            semi_axes,
            angle,
        }
    }

    /// Build a polygon, reversing the vertex order if it is clockwise.
    pub fn polygon(mut vertices: Vec<Vec2>) -> Self {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Shape::Polygon { vertices }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Disk { radius, center } => {
                if !(radius.is_finite() && *radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::Geometry(alloc::format!("disk radius must be positive, got {radius}")));
                }
            }
            Shape::Ellipse { semi_axes, .. } => {
                if !(semi_axes.x > 0.0 && semi_axes.y > 0.0) || !semi_axes.iter().all(|c| c.is_finite()) {
                    return Err(Error::Geometry(alloc::format!(
                        "ellipse semi-axes must be positive, got ({}, {})",
                        semi_axes.x,
                        semi_axes.y
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Geometry("polygon needs at least 3 vertices".into()));
                }
                if signed_area(vertices) <= 0.0 {
                    return Err(Error::Geometry("polygon must be counter-clockwise with positive area".into()));
                }
                let n = vertices.len();
                for i in 0..n {
                    for j in i + 1..n {
                        if j == i + 1 || (i == 0 && j == n - 1) {
                            continue;
                        }
                        if segments_cross(&vertices[i], &vertices[(i + 1) % n], &vertices[j], &vertices[(j + 1) % n]) {
                            return Err(Error::Geometry("polygon is self-intersecting".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        match self {
            Shape::Disk { center, radius } => (p - center).norm_squared() < radius * radius,
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let q = to_frame(p - center, *angle);
                (q.x / semi_axes.x).powi(2) + (q.y / semi_axes.y).powi(2) < 1.0
            }
            Shape::Polygon { vertices } => point_in_polygon(p, vertices),
        }
    }

    /// Signed Euclidean distance to the boundary, negative inside.
    pub fn signed_distance(&self, p: &Vec2) -> f64 {
        match self {
            Shape::Disk { center, radius } => (p - center).norm() - radius,
            Shape::Ellipse { .. } | Shape::Polygon { .. } => {
                let d = (p - self.closest_boundary_point(p)).norm();
                if self.contains(p) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Nearest point of the boundary curve.
    pub fn closest_boundary_point(&self, p: &Vec2) -> Vec2 {
        match self {
            Shape::Disk { center, radius } => {
                let d = p - center;
                let n = d.norm();
                if n == 0.0 {
                    center + Vec2::new(*radius, 0.0)
                } else {
                    center + d * (radius / n)
                }
            }
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let q = to_frame(p - center, *angle);
                let foot = closest_on_ellipse(semi_axes.x, semi_axes.y, q);
                center + from_frame(foot, *angle)
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = vertices[0];
                let mut best_d = f64::INFINITY;
                for i in 0..n {
                    let c = closest_on_segment(p, &vertices[i], &vertices[(i + 1) % n]);
                    let d = (p - c).norm_squared();
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            }
        }
    }

    /// Outward unit normal at a boundary point (for polygons, of the nearest edge).
    pub fn outward_normal(&self, q: &Vec2) -> Vec2 {
        match self {
            Shape::Disk { center, .. } => (q - center).normalize(),
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let l = to_frame(q - center, *angle);
                let g = Vec2::new(l.x / (semi_axes.x * semi_axes.x), l.y / (semi_axes.y * semi_axes.y));
                from_frame(g, *angle).normalize()
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for i in 0..n {
                    let d = super::segment_distance(q, &vertices[i], &vertices[(i + 1) % n]);
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                let e = vertices[(best + 1) % n] - vertices[best];
                Vec2::new(e.y, -e.x).normalize()
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { semi_axes, .. } => PI * semi_axes.x * semi_axes.y,
            Shape::Polygon { vertices } => signed_area(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => 2.0 * PI * radius,
            Shape::Ellipse { semi_axes, .. } => ellipse_arclength_table(semi_axes.x, semi_axes.y, 4096).1,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| (vertices[(i + 1) % n] - vertices[i]).norm()).sum()
            }
        }
    }

    pub fn bbox(&self) -> Aabb {
        match self {
            Shape::Disk { center, radius } => {
                let r = Vec2::new(*radius, *radius);
                Aabb::new(center - r, center + r)
            }
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let hx = ((semi_axes.x * c).powi(2) + (semi_axes.y * s).powi(2)).sqrt();
                let hy = ((semi_axes.x * s).powi(2) + (semi_axes.y * c).powi(2)).sqrt();
                let h = Vec2::new(hx, hy);
                Aabb::new(center - h, center + h)
            }
            Shape::Polygon { vertices } => Aabb::from_points(vertices),
        }
    }

    /// Counter-clockwise boundary samples with spacing at most `h`
    /// (equal arclength for curved shapes; polygon corners are kept).
    pub fn boundary_polyline(&self, h: f64) -> Vec<Vec2> {
        match self {
            Shape::Disk { center, radius } => {
                let n = ((2.0 * PI * radius / h).ceil() as usize).max(8);
                (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        center + Vec2::new(radius * t.cos(), radius * t.sin())
                    })
                    .collect()
            }
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let (a, b) = (semi_axes.x, semi_axes.y);
                let m = 4096usize.max((8.0 * PI * a.max(b) / h) as usize);
                let (table, total) = ellipse_arclength_table(a, b, m);
                let n = ((total / h).ceil() as usize).max(8);
                let mut out = Vec::with_capacity(n);
                let mut j = 0;
                for k in 0..n {
                    let s = total * k as f64 / n as f64;
                    while j + 1 < table.len() && table[j + 1] < s {
                        j += 1;
                    }
                    let t0 = 2.0 * PI * j as f64 / m as f64;
                    let span = table[j + 1] - table[j];
                    let frac = if span > 0.0 { (s - table[j]) / span } else { 0.0 };
                    let t = t0 + frac * 2.0 * PI / m as f64;
                    out.push(center + from_frame(Vec2::new(a * t.cos(), b * t.sin()), *angle));
                }
                out
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut out = Vec::new();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let k = (((b - a).norm() / h).ceil() as usize).max(1);
                    for j in 0..k {
                        out.push(a + (b - a) * (j as f64 / k as f64));
                    }
                }
                out
            }
        }
    }
}

impl Region for Shape {
    fn contains(&self, p: &Vec2) -> bool {
        Shape::contains(self, p)
    }
    fn bbox(&self) -> Aabb {
        Shape::bbox(self)
    }
}

impl SignedDistance for Shape {
    fn signed_distance(&self, p: &Vec2) -> f64 {
        Shape::signed_distance(self, p)
    }
    fn sd_bbox(&self) -> Aabb {
        Shape::bbox(self)
    }
}

pub(crate) fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        s += a.x * b.y - a.y * b.x;
    }
    0.5 * s
}

pub(crate) fn point_in_polygon(p: &Vec2, v: &[Vec2]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 && d2 != 0.0
}

fn to_frame(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x + s * v.y, -s * v.x + c * v.y)
}

fn from_frame(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Cumulative arclength at `m + 1` equally spaced parameter values of
/// `(a cos t, b sin t)`, and the total length.
fn ellipse_arclength_table(a: f64, b: f64, m: usize) -> (Vec<f64>, f64) {
    let mut table = Vec::with_capacity(m + 1);
    table.push(0.0);
    let dt = 2.0 * PI / m as f64;
    let mut acc = 0.0;
    // Simpson on each parameter cell.
    let speed = |t: f64| ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
    for k in 0..m {
        let t0 = k as f64 * dt;
        acc += dt / 6.0 * (speed(t0) + 4.0 * speed(t0 + 0.5 * dt) + speed(t0 + dt));
        table.push(acc);
    }
    (table, acc)
}

/// Closest point on the axis-aligned ellipse `(x/a)^2 + (y/b)^2 = 1` to `q`,
/// by bisection on the Lagrange-multiplier equation (Eberly's method).
fn closest_on_ellipse(a: f64, b: f64, q: Vec2) -> Vec2 {
    if a < b {
        let r = closest_on_ellipse(b, a, Vec2::new(q.y, q.x));
        return Vec2::new(r.y, r.x);
    }
    let (sx, sy) = (q.x.signum(), q.y.signum());
    let (y0, y1) = (q.x.abs(), q.y.abs());
    let (x0, x1) = if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / a;
            let z1 = y1 / b;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (a / b) * (a / b);
                let s = robust_root(r0, z0, z1, g);
                (r0 * y0 / (s + r0), y1 / (s + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, b)
        }
    } else {
        let numer = a * y0;
        let denom = a * a - b * b;
        if numer < denom {
            let xd = numer / denom;
            (a * xd, b * (1.0 - xd * xd).max(0.0).sqrt())
        } else {
            (a, 0.0)
        }
    };
    Vec2::new(sx * x0, if q.y == 0.0 { x1 } else { sy * x1 })
}

fn robust_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { (n0 * n0 + z1 * z1).sqrt() - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let r0_ = n0 / (s + r0);
        let r1_ = z1 / (s + 1.0);
        let g = r0_ * r0_ + r1_ * r1_ - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ellipse_distance_matches_brute_force() {
        let e = Shape::ellipse(Vec2::new(0.1, -0.2), Vec2::new(0.5, 0.2), 0.4);
        let pts = e.boundary_polyline(1e-4);
        for p in [Vec2::new(0.0, 0.0), Vec2::new(0.9, 0.3), Vec2::new(0.1, -0.2), Vec2::new(-0.5, 0.5)] {
            let brute = pts.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
            let sd = e.signed_distance(&p);
            assert_relative_eq!(sd.abs(), brute, epsilon = 1e-6);
            assert_eq!(sd < 0.0, e.contains(&p));
        }
    }

    #[test]
    fn ellipse_perimeter_circle_limit() {
        let e = Shape::ellipse(Vec2::zeros(), Vec2::new(0.3, 0.3), 0.0);
        assert_relative_eq!(e.perimeter(), 2.0 * PI * 0.3, max_relative = 1e-10);
    }

    #[test]
    fn polyline_spacing_and_orientation() {
        for s in [
            Shape::disk(Vec2::zeros(), 1.0),
            Shape::ellipse(Vec2::zeros(), Vec2::new(1.0, 0.4), 0.3),
            Shape::polygon(alloc::vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)]),
        ] {
            let pts = s.boundary_polyline(0.05);
            assert!(signed_area(&pts) > 0.0);
            let n = pts.len();
            for i in 0..n {
                assert!((pts[(i + 1) % n] - pts[i]).norm() <= 0.05 + 1e-9);
            }
        }
    }

    #[test]
    fn polygon_validation() {
        let bow = Shape::Polygon {
            vertices: alloc::vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0)
            ],
        };
        assert!(bow.validate().is_err());
        assert!(Shape::disk(Vec2::zeros(), -1.0).validate().is_err());
    }

    #[test]
    fn ellipse_normal_is_gradient_direction() {
        let e = Shape::ellipse(Vec2::zeros(), Vec2::new(2.0, 1.0), 0.0);
        let n = e.outward_normal(&Vec2::new(2.0, 0.0));
        assert_relative_eq!(n.x, 1.0, epsilon = 1e-14);
    }
}
