//! Domain, interface and inclusion geometry, Carleman-weight level-set
//! regions, interface flattening charts, offsets and coverings.

mod flatten;
mod scene;
mod shape;
mod vitali;
mod weight;

pub use flatten::{FlatteningMap, GraphFn};
pub use scene::{Scene, Side};
pub use shape::Shape;
pub(crate) use shape::point_in_polygon;
pub use vitali::{vitali_cover, VitaliCover};
pub use weight::{z_value, RegionKind, RegionTriple, WeightParams};

use crate::Vec2;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Aabb { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec2>) -> Self {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        Aabb { min, max }
    }

    pub fn expand(&self, s: f64) -> Self {
        let d = Vec2::new(s, s);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diameter(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn is_empty(&self) -> bool {
        !(self.min.x <= self.max.x && self.min.y <= self.max.y)
    }
}

/// A planar point set given by a membership predicate.
pub trait Region {
    fn contains(&self, p: &Vec2) -> bool;
    /// A box containing every member point.
    fn bbox(&self) -> Aabb;
}

/// A closed set described by a signed distance (negative inside).
pub trait SignedDistance {
    fn signed_distance(&self, p: &Vec2) -> f64;
    fn sd_bbox(&self) -> Aabb;
}

impl<T: SignedDistance + ?Sized> SignedDistance for &T {
    fn signed_distance(&self, p: &Vec2) -> f64 {
        (**self).signed_distance(p)
    }
    fn sd_bbox(&self) -> Aabb {
        (**self).sd_bbox()
    }
}

impl<T: Region + ?Sized> Region for &T {
    fn contains(&self, p: &Vec2) -> bool {
        (**self).contains(p)
    }
    fn bbox(&self) -> Aabb {
        (**self).bbox()
    }
}

/// Erosion `U_s = {x in U : dist(x, dU) > s}` or dilation
/// `U^s = {x : dist(x, U) < s}` of a set with a signed distance.
#[derive(Debug, Clone)]
pub struct Offset<S> {
    pub base: S,
    /// Positive for dilation, negative for erosion.
    pub offset: f64,
}

impl<S: SignedDistance> Region for Offset<S> {
    fn contains(&self, p: &Vec2) -> bool {
        self.base.signed_distance(p) < self.offset
    }
    fn bbox(&self) -> Aabb {
        self.base.sd_bbox().expand(self.offset.max(0.0))
    }
}

pub fn erode<S: SignedDistance>(base: S, s: f64) -> Offset<S> {
    debug_assert!(s >= 0.0);
    Offset { base, offset: -s }
}

pub fn dilate<S: SignedDistance>(base: S, s: f64) -> Offset<S> {
    debug_assert!(s >= 0.0);
    Offset { base, offset: s }
}

/// Set difference `a \ b`.
#[derive(Debug, Clone)]
pub struct Difference<A, B>(pub A, pub B);

impl<A: Region, B: Region> Region for Difference<A, B> {
    fn contains(&self, p: &Vec2) -> bool {
        self.0.contains(p) && !self.1.contains(p)
    }
    fn bbox(&self) -> Aabb {
        self.0.bbox()
    }
}

/// Area of a region by the composite midpoint rule on a `cells x cells` grid
/// over its bounding box.
pub fn measure<R: Region + ?Sized>(region: &R, cells: usize) -> f64 {
    let bb = region.bbox();
    if bb.is_empty() || cells == 0 {
        return 0.0;
    }
    let dx = bb.width() / cells as f64;
    let dy = bb.height() / cells as f64;
    let mut hits = 0usize;
    for i in 0..cells {
        let x = bb.min.x + (i as f64 + 0.5) * dx;
        for j in 0..cells {
            let y = bb.min.y + (j as f64 + 0.5) * dy;
            if region.contains(&Vec2::new(x, y)) {
                hits += 1;
            }
        }
    }
    hits as f64 * dx * dy
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

pub(crate) fn closest_on_segment(p: &Vec2, a: &Vec2, b: &Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn erode_and_dilate_disk() {
        let disk = Shape::disk(Vec2::zeros(), 1.0);
        let eroded = erode(&disk, 0.25);
        let dilated = dilate(&disk, 0.25);
        for i in 0..200 {
            let r = 1.5 * i as f64 / 200.0;
            let p = Vec2::new(r * 0.6, r * 0.8);
            assert_eq!(eroded.contains(&p), r < 0.75);
            assert_eq!(dilated.contains(&p), r < 1.25);
        }
        assert_relative_eq!(measure(&eroded, 800), core::f64::consts::PI * 0.5625, max_relative = 2e-3);
    }

    #[test]
    fn erode_everything_away() {
        let disk = Shape::disk(Vec2::zeros(), 1.0);
        assert_eq!(measure(&erode(&disk, 2.0), 100), 0.0);
    }
}
