use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{masked_integral, summarize, CheckParams, FamilySummary, InequalityCheck};
use crate::geometry::{FlatteningMap, Region, RegionKind, RegionTriple};
use crate::quadrature::gauss_legendre;
use crate::solver::Solution;
use crate::{Error, Result, Vec2, DIM};

/// Resolution of the region quadrature: composite midpoint rule with
/// `lateral` panels across the region and `normal`-point Gauss-Legendre on
/// each vertical section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionQuadrature {
    pub lateral: usize,
    pub normal: usize,
}

impl Default for RegionQuadrature {
    fn default() -> Self {
        RegionQuadrature {
            lateral: 256,
            normal: 8,
        }
    }
}

/// `int |u|^2` over the pulled-back regions `Psi^{-1}(theta U_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

/// Height `t` with `z(s, t) = c` on the near branch, or `None` if `z > c`
/// on the whole section.
fn level_height(triple: &RegionTriple, s: f64, c: f64) -> Option<f64> {
    let wp = &triple.wp;
    let (am, b, d) = (wp.alpha_minus, wp.beta, wp.delta);
    let k = c + s * s / (2.0 * d);
    if b == 0.0 {
        return Some(d * k / am);
    }
    let disc = am * am + 2.0 * b * k;
    if disc < 0.0 {
        None
    } else {
        // (d / b) (-am + sqrt(disc)) without cancellation.
        Some(2.0 * d * k / (am + disc.sqrt()))
    }
}

/// Vertical section `(lo, hi)` of the unscaled region `U_k` at lateral
/// coordinate `s`; the level sets of `z` are graphs over `s` on the near branch.
fn section(triple: &RegionTriple, kind: RegionKind, s: f64) -> Option<(f64, f64)> {
    let a = triple.a();
    let floor = triple.branch_floor();
    let above = |c: f64| level_height(triple, s, c).unwrap_or(floor).max(floor);
    let (lo, hi) = match kind {
        RegionKind::U1 => (above(-4.0 * triple.r2).max(triple.r1 / (8.0 * a)), triple.r1 / a),
        RegionKind::U2 => {
            let top = level_height(triple, s, triple.r1 / (2.0 * a))?;
            (above(-triple.r2), top.min(triple.r1 / (8.0 * a)))
        }
        RegionKind::U3 => (above(-4.0 * triple.r2), triple.r1 / a),
    };
    (hi > lo).then_some((lo, hi))
}

fn integrate_region(
    u: &Solution,
    triple: &RegionTriple,
    chart: &FlatteningMap,
    kind: RegionKind,
    q: &RegionQuadrature,
) -> Result<f64> {
    let theta = triple.theta;
    let (w, _, _) = triple.local_bounds(kind);
    let w = w / theta;
    let n = q.lateral.max(1);
    let ds = 2.0 * w / n as f64;
    let (gx, gw) = gauss_legendre(q.normal.max(1));
    let mut total = 0.0;
    for i in 0..n {
        let s = -w + (i as f64 + 0.5) * ds;
        let Some((lo, hi)) = section(triple, kind, s) else {
            continue;
        };
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut col = 0.0;
        for (x, wt) in gx.iter().zip(&gw) {
            let y = Vec2::new(s, mid + half * x) * theta;
            let p = chart.unflatten(&y)?;
            let v = u.value_at(&p).ok_or_else(|| {
                Error::Coverage(format!(
                    "point ({:.6}, {:.6}) of {:?} lies outside the mesh",
                    p.x, p.y, kind
                ))
            })?;
            col += wt * half * v.norm_sqr();
        }
        total += col * ds;
    }
    // dx = theta^2 dy under y -> theta y; the chart itself preserves area.
    Ok(total * theta * theta)
}

pub fn region_integrals(
    u: &Solution,
    triple: &RegionTriple,
    chart: &FlatteningMap,
    q: &RegionQuadrature,
) -> Result<RegionIntegrals> {
    Ok(RegionIntegrals {
        i1: integrate_region(u, triple, chart, RegionKind::U1, q)?,
        i2: integrate_region(u, triple, chart, RegionKind::U2, q)?,
        i3: integrate_region(u, triple, chart, RegionKind::U3, q)?,
    })
}

/// `int_{U2} |u|^2 <= C (int_{U1} |u|^2)^xi (int_{U3} |u|^2)^(1 - xi)` with
/// `xi = R2 / (2 R1 + 3 R2)`, on the regions pulled back through `chart`.
pub fn check_three_region(
    u: &Solution,
    triple: &RegionTriple,
    chart: &FlatteningMap,
    q: &RegionQuadrature,
) -> Result<InequalityCheck> {
    let r = region_integrals(u, triple, chart, q)?;
    Ok(InequalityCheck::new(
        r.i2,
        r.i1,
        r.i3,
        triple.xi(),
        true,
        CheckParams::ThreeRegion {
            r1: triple.r1,
            r2: triple.r2,
            theta: triple.theta,
        },
    ))
}

pub fn check_three_region_family(
    family: &[Solution],
    triple: &RegionTriple,
    chart: &FlatteningMap,
    q: &RegionQuadrature,
) -> Result<FamilySummary> {
    let checks = family
        .iter()
        .map(|u| check_three_region(u, triple, chart, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(checks))
}

/// Both sides of `int_{theta U} |u|^2 = theta^(n+4) int_U |u^theta|^2`,
/// `u^theta(y) = theta^-2 u(theta y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / |lhs|`.
    pub residual: f64,
}

/// The left side is integrated on the mesh of `u` by element subdivision
/// (`level`), the right side on the mesh scaled by `1 / theta` with a
/// `cells x cells` midpoint grid over `U`, so the two sides share no
/// quadrature points.
pub fn scaling_identity_check<R: Region + ?Sized>(
    u: &Solution,
    region: &R,
    theta: f64,
    level: usize,
    cells: usize,
) -> Result<ScalingReport> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::input(format!("theta must lie in (0, 1], got {theta}")));
    }
    let bb = region.bbox();
    let window = crate::geometry::Aabb::new(bb.min * theta, bb.max * theta);
    let lhs = masked_integral(
        &u.mesh,
        level,
        Some(&window),
        |p| region.contains(&(p / theta)),
        |e, p| u.value_at_in(e, p).norm_sqr(),
    );

    let scaled = Arc::new(u.mesh.scaled(1.0 / theta));
    let nodal = u.u.iter().map(|v| v / (theta * theta)).collect();
    let ut = Solution::from_nodal(scaled, nodal);
    let n = cells.max(1);
    let (dx, dy) = (bb.width() / n as f64, bb.height() / n as f64);
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let y = Vec2::new(bb.min.x + (i as f64 + 0.5) * dx, bb.min.y + (j as f64 + 0.5) * dy);
            if !region.contains(&y) {
                continue;
            }
            let v = ut
                .value_at(&y)
                .ok_or_else(|| Error::Coverage(format!("scaled region point ({:.4}, {:.4}) is outside the mesh", y.x, y.y)))?;
            sum += v.norm_sqr();
        }
    }
    let rhs = theta.powi(DIM as i32 + 4) * sum * dx * dy;
    let residual = if lhs != 0.0 { (lhs - rhs).abs() / lhs.abs() } else { rhs.abs() };
    Ok(ScalingReport {
        theta,
        lhs,
        rhs,
        residual,
    })
}
