//! Empirical checks of quantitative unique continuation for discrete
//! solutions: the three-region inequality across the interface, three-ball
//! inequalities, the chain-of-balls propagation of smallness, the scaling law
//! of the region integrals and the Lipschitz propagation / boundary-layer
//! estimates for the background solution.
//!
//! The constants in these inequalities are not known in closed form, so every
//! check reports the smallest constant that makes the inequality true for the
//! field at hand. Over a family of fields the interesting quantity is how
//! uniform those constants are.

mod ball;
mod chain;
mod layer;
mod region;

pub use ball::{
    ball_l2_sq, check_three_ball, check_three_ball_family, fit_uniform_exponent, t1_exponent, BallMode,
    BallQuadrature, ExponentRule, ThreeBallCheck, ThreeBallOptions,
};
pub use chain::{propagate_chain, Chain, ChainCertificate, ChainOptions};
pub use layer::{boundary_layer, lipschitz_smallness, BoundaryLayerReport, LipschitzReport};
pub use region::{
    check_three_region, check_three_region_family, region_integrals, scaling_identity_check, RegionIntegrals,
    RegionQuadrature, ScalingReport,
};

use alloc::vec::Vec;

use crate::geometry::Aabb;
use crate::mesh::Mesh;
use crate::Vec2;

/// Below this fraction of the outer integral a middle integral counts as zero.
pub const ZERO_REL: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckParams {
    ThreeRegion { r1: f64, r2: f64, theta: f64 },
    ThreeBall { r1: f64, r2: f64, r3: f64 },
}

/// An interpolation inequality `mid <= C inner^xi outer^(1 - xi)` evaluated
/// on one field.
///
/// `lhs`, `inner` and `outer` are squared `L^2` norms. The three-region
/// inequality is stated for squared norms and the three-ball inequality for
/// norms, and `c_fit` follows the form of each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub inner: f64,
    pub outer: f64,
    /// Exponent on `inner`; `outer` carries `1 - xi`.
    pub xi: f64,
    /// `0` if `lhs` vanishes, `inf` if only `inner` does.
    pub c_fit: f64,
    /// `ln c_ref - ln c_fit`: nonnegative iff the inequality holds with `c_ref`.
    pub margin: f64,
    pub params: CheckParams,
    /// `inner = 0` but `lhs > 0`, which the inequality forbids.
    pub violation_candidate: bool,
}

impl InequalityCheck {
    pub(crate) fn new(lhs: f64, inner: f64, outer: f64, xi: f64, squared: bool, params: CheckParams) -> Self {
        let zero = |v: f64| v <= ZERO_REL * outer || v == 0.0;
        let (c_fit, violation_candidate) = if zero(lhs) {
            (0.0, false)
        } else if zero(inner) {
            (f64::INFINITY, true)
        } else {
            let c = lhs / (inner.powf(xi) * outer.powf(1.0 - xi));
            (if squared { c } else { c.sqrt() }, false)
        };
        InequalityCheck {
            lhs,
            inner,
            outer,
            xi,
            c_fit,
            margin: 0.0,
            params,
            violation_candidate,
        }
        .with_reference(1.0)
    }

    /// Same check with the margin measured against the constant `c_ref`.
    pub fn with_reference(mut self, c_ref: f64) -> Self {
        self.margin = if self.c_fit == 0.0 {
            f64::INFINITY
        } else {
            c_ref.ln() - self.c_fit.ln()
        };
        self
    }

    pub fn holds_with(&self, c: f64) -> bool {
        self.c_fit <= c
    }
}

/// Fitted constants over a family of fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySummary {
    /// Checks with margins measured against `c_max`.
    pub checks: Vec<InequalityCheck>,
    pub c_max: f64,
    /// Median over members with a nonzero left side.
    pub c_median: f64,
    /// `c_max / c_median`; `1` when every member is trivial.
    pub uniformity: f64,
    pub violations: usize,
}

pub fn summarize(checks: Vec<InequalityCheck>) -> FamilySummary {
    let mut cs: Vec<f64> = checks.iter().map(|c| c.c_fit).filter(|c| *c > 0.0).collect();
    cs.sort_by(f64::total_cmp);
    let c_max = cs.last().copied().unwrap_or(0.0);
    let c_median = if cs.is_empty() {
        0.0
    } else if cs.len() % 2 == 1 {
        cs[cs.len() / 2]
    } else {
        0.5 * (cs[cs.len() / 2 - 1] + cs[cs.len() / 2])
    };
    let uniformity = if c_median > 0.0 { c_max / c_median } else { 1.0 };
    let violations = checks.iter().filter(|c| c.violation_candidate).count();
    let reference = if c_max > 0.0 { c_max } else { 1.0 };
    let checks = checks.into_iter().map(|c| c.with_reference(reference)).collect();
    FamilySummary {
        checks,
        c_max,
        c_median,
        uniformity,
        violations,
    }
}

/// `sum_e int_{T_e cap M} f(e, x) dx` with the mask `M` tested at the
/// centroids of a uniform `level x level` subdivision of each element.
/// Elements whose bounding box misses `window` are skipped.
pub(crate) fn masked_integral<M, F>(mesh: &Mesh, level: usize, window: Option<&Aabb>, mask: M, f: F) -> f64
where
    M: Fn(&Vec2) -> bool,
    F: Fn(usize, &Vec2) -> f64,
{
    let l = level.max(1);
    let lf = l as f64;
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let t = mesh.triangle(e);
        if let Some(w) = window {
            let tb = Aabb::from_points(t.iter());
            if tb.max.x < w.min.x || tb.min.x > w.max.x || tb.max.y < w.min.y || tb.min.y > w.max.y {
                continue;
            }
        }
        let (e1, e2) = (t[1] - t[0], t[2] - t[0]);
        let wsub = mesh.area(e) / (lf * lf);
        let mut acc = 0.0;
        for i in 0..l {
            for j in 0..l - i {
                let mut visit = |a: f64, b: f64| {
                    let p = t[0] + e1 * (a / lf) + e2 * (b / lf);
                    if mask(&p) {
                        acc += f(e, &p);
                    }
                };
                visit(i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0);
                if i + j + 1 < l {
                    visit(i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0);
                }
            }
        }
        total += acc * wsub;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Scene, Shape};
    use crate::mesh::MeshOptions;

    #[test]
    fn exponents_and_trivial_cases() {
        let p = CheckParams::ThreeRegion {
            r1: 1.0,
            r2: 1.0,
            theta: 1.0,
        };
        let c = InequalityCheck::new(0.0, 0.0, 0.0, 0.2, true, p);
        assert_eq!(c.c_fit, 0.0);
        assert_eq!(c.margin, f64::INFINITY);
        assert!(!c.violation_candidate);
        let c = InequalityCheck::new(1.0, 0.0, 2.0, 0.2, true, p);
        assert!(c.violation_candidate);
        assert_eq!(c.c_fit, f64::INFINITY);
        let c = InequalityCheck::new(1.0, 1.0, 1.0, 0.2, true, p).with_reference(2.0);
        assert_eq!(c.c_fit, 1.0);
        assert!((c.margin - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn summary_of_constants() {
        let p = CheckParams::ThreeBall {
            r1: 1.0,
            r2: 2.0,
            r3: 3.0,
        };
        let checks = [1.0, 4.0, 2.0, 0.0]
            .iter()
            .map(|l| InequalityCheck::new(*l, 1.0, 1.0, 0.5, true, p))
            .collect();
        let s = summarize(checks);
        assert_eq!(s.c_max, 4.0);
        assert_eq!(s.c_median, 2.0);
        assert_eq!(s.uniformity, 2.0);
        assert!(s.checks.iter().all(|c| c.margin >= 0.0));
    }

    #[test]
    fn masked_area_of_half_disk() {
        let scene = Scene::homogeneous(Shape::disk(Vec2::zeros(), 1.0), None, 0.1, 0.1).unwrap();
        let mesh = Mesh::build(&scene, &MeshOptions::new(0.1)).unwrap();
        let a = masked_integral(&mesh, 8, None, |p| p.y > 0.0, |_, _| 1.0);
        assert!((a - 0.5 * mesh.total_area()).abs() < 1e-3);
    }
}
