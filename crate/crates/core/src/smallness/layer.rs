use alloc::format;
use alloc::vec::Vec;

use super::ball::BallQuadrature;
use super::masked_integral;
use crate::geometry::Shape;
use crate::solver::Solution;
use crate::{Error, Result, Vec2};

/// Smallest share of the gradient energy carried by a ball of radius `a`
/// centred in `Omega_{4a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub a: f64,
    /// `min_x int_{B_a(x)} |grad u|^2 / int_Omega |grad u|^2`.
    pub c_emp: f64,
    pub argmin: Vec2,
    pub samples: usize,
    pub total_energy: f64,
}

fn grad_sq_at(u: &Solution, p: &Vec2) -> Result<f64> {
    let (e, _) = u
        .mesh
        .locate(p)
        .ok_or_else(|| Error::Coverage(format!("point ({:.4}, {:.4}) is outside the mesh", p.x, p.y)))?;
    let g = u.grad(e);
    Ok(g[0].norm_sqr() + g[1].norm_sqr())
}

/// Centres are taken on a grid of the given spacing restricted to
/// `{dist(., boundary) > 4a}`.
pub fn lipschitz_smallness(
    u0: &Solution,
    outer: &Shape,
    a: f64,
    spacing: f64,
    q: &BallQuadrature,
) -> Result<LipschitzReport> {
    if !(a > 0.0 && spacing > 0.0) {
        return Err(Error::input("a and the sample spacing must be positive"));
    }
    let bb = outer.bbox();
    let nx = (bb.width() / spacing).floor() as usize + 1;
    let ny = (bb.height() / spacing).floor() as usize + 1;
    let total_energy = u0.grad_energy(|_| true);
    let mut best = (f64::INFINITY, Vec2::zeros());
    let mut samples = 0;
    for j in 0..ny {
        for i in 0..nx {
            let x = bb.min + Vec2::new(i as f64 * spacing, j as f64 * spacing);
            if outer.signed_distance(&x) >= -4.0 * a {
                continue;
            }
            samples += 1;
            let mut e = 0.0;
            for (p, w) in q.nodes(&x, a) {
                e += w * grad_sq_at(u0, &p)?;
            }
            if e < best.0 {
                best = (e, x);
            }
        }
    }
    if samples == 0 {
        return Err(Error::input(format!("Omega_(4a) is empty for a = {a}")));
    }
    let c_emp = if total_energy > 0.0 { best.0 / total_energy } else { 0.0 };
    Ok(LipschitzReport {
        a,
        c_emp,
        argmin: best.1,
        samples,
        total_energy,
    })
}

/// Gradient energy in the boundary layer `Omega \ Omega_{a/4}` as a function of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLayerReport {
    pub a: Vec<f64>,
    pub energy: Vec<f64>,
    /// Least-squares slope of `ln energy` against `ln a`.
    pub exponent: f64,
    /// `energy / (a^(1/n) ||g||^2)`.
    pub normalized: Vec<f64>,
}

pub fn boundary_layer(u0: &Solution, outer: &Shape, a_values: &[f64], g_l2_sq: f64, level: usize) -> Result<BoundaryLayerReport> {
    if a_values.len() < 2 {
        return Err(Error::input("the decay fit needs at least two values of a"));
    }
    let mut energy = Vec::with_capacity(a_values.len());
    for &a in a_values {
        if !(a > 0.0) {
            return Err(Error::input("layer widths must be positive"));
        }
        // The interior set Omega_{4a} must exist for the estimate to apply.
        let inradius = -outer.signed_distance(&outer_center(outer));
        if 4.0 * a >= inradius {
            return Err(Error::input(format!("Omega_(4a) is empty for a = {a}")));
        }
        let e = masked_integral(
            &u0.mesh,
            level,
            None,
            |p| outer.signed_distance(p) > -a / 4.0,
            |e, _| {
                let g = u0.grad(e);
                g[0].norm_sqr() + g[1].norm_sqr()
            },
        );
        energy.push(e);
    }
    let pts: Vec<(f64, f64)> = a_values
        .iter()
        .zip(&energy)
        .filter(|(_, e)| **e > 0.0)
        .map(|(a, e)| (a.ln(), e.ln()))
        .collect();
    let exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let normalized = a_values
        .iter()
        .zip(&energy)
        .map(|(a, e)| if g_l2_sq > 0.0 { e / (a.sqrt() * g_l2_sq) } else { 0.0 })
        .collect();
    Ok(BoundaryLayerReport {
        a: a_values.to_vec(),
        energy,
        exponent,
        normalized,
    })
}

/// Deepest point of the shape, found on a coarse grid.
fn outer_center(outer: &Shape) -> Vec2 {
    match outer {
        Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => *center,
        Shape::Polygon { .. } => {
            let bb = outer.bbox();
            let n = 64;
            let mut best = (f64::INFINITY, bb.min);
            for j in 0..=n {
                for i in 0..=n {
                    let p = bb.min + Vec2::new(bb.width() * i as f64 / n as f64, bb.height() * j as f64 / n as f64);
                    let d = outer.signed_distance(&p);
                    if d < best.0 {
                        best = (d, p);
                    }
                }
            }
            best.1
        }
    }
}
