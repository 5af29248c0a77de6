use alloc::vec::Vec;

use super::Region;
use crate::Vec2;

/// Centers on a curve whose `radius`-balls are pairwise disjoint.
#[derive(Debug, Clone)]
pub struct VitaliCover {
    pub centers: Vec<Vec2>,
    pub radius: f64,
    /// Length of the covered part of the curve.
    pub length: f64,
    /// `N * radius / length`, the constant in `N <= C length / radius`.
    pub constant: f64,
}

impl VitaliCover {
    /// Whether `p` lies in one of the `5 * radius` balls.
    pub fn covers(&self, p: &Vec2) -> bool {
        let r = 5.0 * self.radius;
        self.centers.iter().any(|c| (p - c).norm_squared() < r * r)
    }

    pub fn min_center_distance(&self) -> f64 {
        let mut m = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                m = m.min((a - b).norm());
            }
        }
        m
    }
}

/// Greedy selection along a polyline (closed if `closed`), restricted to
/// points in `filter`. A point becomes a center when it is more than
/// `2 radius` from every center chosen so far, so every curve point ends up
/// within `2 radius` of a center.
pub fn vitali_cover(curve: &[Vec2], closed: bool, filter: Option<&dyn Region>, radius: f64) -> VitaliCover {
    let step = radius / 4.0;
    let mut samples = Vec::new();
    let mut length = 0.0;
    let segs = if closed { curve.len() } else { curve.len().saturating_sub(1) };
    let keep = |p: &Vec2| filter.is_none_or(|f| f.contains(p));
    for i in 0..segs {
        let a = curve[i];
        let b = curve[(i + 1) % curve.len()];
        let len = (b - a).norm();
        let k = ((len / step).ceil() as usize).max(1);
        for j in 0..k {
            let p = a + (b - a) * (j as f64 / k as f64);
            if keep(&p) {
                samples.push(p);
            }
        }
        let mid = a + (b - a) * 0.5;
        if keep(&mid) {
            length += len;
        }
    }
    if !closed {
        if let Some(last) = curve.last() {
            if keep(last) {
                samples.push(*last);
            }
        }
    }
    let mut centers: Vec<Vec2> = Vec::new();
    let lim = 4.0 * radius * radius;
    for p in samples {
        if centers.iter().all(|c| (p - c).norm_squared() > lim) {
            centers.push(p);
        }
    }
    let constant = if length > 0.0 {
        centers.len() as f64 * radius / length
    } else {
        0.0
    };
    VitaliCover {
        centers,
        radius,
        length,
        constant,
    }
}
