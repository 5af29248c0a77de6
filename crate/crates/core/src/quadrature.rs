//! Quadrature rules on triangles and intervals.

use alloc::vec::Vec;

use crate::Vec2;

/// A rule on the reference triangle: barycentric coordinates and weights
/// summing to one (multiply by the triangle area).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Exact for degree 1.
    pub fn centroid() -> Self {
        TriangleRule {
            points: alloc::vec![[1.0 / 3.0; 3]],
            weights: alloc::vec![1.0],
        }
    }

    /// Exact for degree 2.
    pub fn degree2() -> Self {
        let a = 2.0 / 3.0;
        let b = 1.0 / 6.0;
        TriangleRule {
            points: alloc::vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: alloc::vec![1.0 / 3.0; 3],
        }
    }

    /// Seven-point rule exact for degree 5.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let b1 = (9.0 + 2.0 * s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let b2 = (9.0 - 2.0 * s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        TriangleRule {
            points: alloc::vec![
                [1.0 / 3.0; 3],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: alloc::vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
        }
    }

    pub fn map(&self, tri: &[Vec2; 3]) -> impl Iterator<Item = (Vec2, [f64; 3], f64)> + '_ {
        let area = triangle_area(tri);
        let t = *tri;
        self.points.iter().zip(&self.weights).map(move |(b, w)| {
            let p = t[0] * b[0] + t[1] * b[1] + t[2] * b[2];
            (p, *b, w * area)
        })
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Signed area (positive for counter-clockwise vertices).
pub fn signed_area(t: &[Vec2; 3]) -> f64 {
    0.5 * ((t[1] - t[0]).perp(&(t[2] - t[0])))
}

pub fn triangle_area(t: &[Vec2; 3]) -> f64 {
    signed_area(t).abs()
}

/// Barycentric coordinates of `p` with respect to `t`.
pub fn barycentric(t: &[Vec2; 3], p: &Vec2) -> [f64; 3] {
    let d = (t[1] - t[0]).perp(&(t[2] - t[0]));
    let l1 = (p - t[0]).perp(&(t[2] - t[0])) / d;
    let l2 = (t[1] - t[0]).perp(&(p - t[0])) / d;
    [1.0 - l1 - l2, l1, l2]
}

/// Gradients of the three P1 hat functions on `t`.
pub fn hat_gradients(t: &[Vec2; 3]) -> [Vec2; 3] {
    let d = (t[1] - t[0]).perp(&(t[2] - t[0]));
    let g = |a: &Vec2, b: &Vec2| Vec2::new(a.y - b.y, b.x - a.x) / d;
    [g(&t[1], &t[2]), g(&t[2], &t[0]), g(&t[0], &t[1])]
}
