use alloc::format;
use alloc::vec::Vec;

use super::{summarize, CheckParams, FamilySummary, InequalityCheck};
use crate::geometry::Scene;
use crate::quadrature::gauss_legendre;
use crate::solver::Solution;
use crate::{Error, Result, Vec2};

/// Polar product rule on a disk: Gauss-Legendre in the radius, trapezoidal
/// in the angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallQuadrature {
    pub radial: usize,
    pub angular: usize,
}

impl Default for BallQuadrature {
    fn default() -> Self {
        BallQuadrature {
            radial: 8,
            angular: 48,
        }
    }
}

impl BallQuadrature {
    /// Points and weights of the rule on `B_r(center)`.
    pub fn nodes(&self, center: &Vec2, r: f64) -> Vec<(Vec2, f64)> {
        let (x, w) = gauss_legendre(self.radial.max(1));
        let na = self.angular.max(3);
        let dphi = core::f64::consts::TAU / na as f64;
        let mut out = Vec::with_capacity(x.len() * na);
        for (xi, wi) in x.iter().zip(&w) {
            let rho = 0.5 * r * (xi + 1.0);
            let wr = 0.5 * r * wi * rho * dphi;
            for k in 0..na {
                let phi = (k as f64 + 0.5) * dphi;
                out.push((center + Vec2::new(rho * phi.cos(), rho * phi.sin()), wr));
            }
        }
        out
    }
}

/// `int_{B_r(center)} |u|^2`.
pub fn ball_l2_sq(u: &Solution, center: &Vec2, r: f64, q: &BallQuadrature) -> Result<f64> {
    let mut s = 0.0;
    for (p, w) in q.nodes(center, r) {
        let v = u.value_at(&p).ok_or_else(|| {
            Error::Coverage(format!(
                "ball of radius {r:.4} around ({:.4}, {:.4}) leaves the mesh",
                center.x, center.y
            ))
        })?;
        s += w * v.norm_sqr();
    }
    Ok(s)
}

/// Exponent of the three-ball inequality for Lipschitz coefficients with
/// radii `r0`, `r1`, `r2` and ellipticity `lambda0`:
/// `((2 r1 / (r2 lambda0))^-s - 1) / ((r0 / r2)^-s - 1)`.
///
/// Only `0 < tau < 1` is enforced, i.e. `0 < r0 < 2 r1 / lambda0` and
/// `2 r1 < lambda0 r2`.
pub fn t1_exponent(r0: f64, r1: f64, r2: f64, lambda0: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && lambda0 > 0.0) {
        return Err(Error::input("the exponent needs s > 0 and lambda0 > 0"));
    }
    if !(0.0 < r0 && r0 < 2.0 * r1 / lambda0 && 2.0 * r1 < lambda0 * r2) {
        return Err(Error::input(format!(
            "radii give no exponent in (0, 1): need 0 < r0 < 2 r1 / lambda0 and 2 r1 < lambda0 r2; \
             got r0 = {r0}, r1 = {r1}, r2 = {r2}, lambda0 = {lambda0}"
        )));
    }
    let num = (2.0 * r1 / (r2 * lambda0)).powf(-s) - 1.0;
    let den = (r0 / r2).powf(-s) - 1.0;
    Ok(num / den)
}

/// How the exponent of a three-ball check is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentRule {
    /// The Lipschitz-coefficient formula, see [`t1_exponent`].
    Carleman { s: f64, lambda0: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeBallOptions {
    pub rule: ExponentRule,
    /// Exponent used when the outer ball meets the interface. `None` keeps the
    /// rule's exponent for single checks and fits one over a family.
    pub interface_tau: Option<f64>,
    pub quadrature: BallQuadrature,
}

impl ThreeBallOptions {
    pub fn carleman(lambda0: f64) -> Self {
        ThreeBallOptions {
            rule: ExponentRule::Carleman { s: 1.0, lambda0 },
            interface_tau: None,
            quadrature: BallQuadrature::default(),
        }
    }

    pub(crate) fn rule_tau(&self, r1: f64, r2: f64, r3: f64) -> Result<f64> {
        match self.rule {
            ExponentRule::Carleman { s, lambda0 } => t1_exponent(r1, r2, r3, lambda0, s),
            ExponentRule::Fixed(t) if t > 0.0 && t < 1.0 => Ok(t),
            ExponentRule::Fixed(t) => Err(Error::input(format!("fixed exponent {t} is not in (0, 1)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    /// The outer ball stays on one side of the interface.
    OneSided,
    /// The outer ball meets the interface; the exponent is empirical.
    NearInterface,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeBallCheck {
    pub check: InequalityCheck,
    pub tau: f64,
    pub mode: BallMode,
    pub center: Vec2,
}

fn validate_balls(scene: &Scene, q: &Vec2, r1: f64, r2: f64, r3: f64) -> Result<BallMode> {
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::input(format!(
            "three-ball radii must satisfy 0 < r1 < r2 < r3; got {r1}, {r2}, {r3}"
        )));
    }
    let depth = -scene.outer.signed_distance(q);
    if depth <= r3 {
        return Err(Error::Geometry(format!(
            "dist(Q, boundary) = {depth:.4} does not exceed r3 = {r3:.4}"
        )));
    }
    let near = scene.interface.as_ref().is_some_and(|s| s.signed_distance(q).abs() < r3);
    Ok(if near { BallMode::NearInterface } else { BallMode::OneSided })
}

fn ball_norms(u: &Solution, q: &Vec2, radii: [f64; 3], quad: &BallQuadrature) -> Result<[f64; 3]> {
    Ok([
        ball_l2_sq(u, q, radii[0], quad)?,
        ball_l2_sq(u, q, radii[1], quad)?,
        ball_l2_sq(u, q, radii[2], quad)?,
    ])
}

fn make_check(n: [f64; 3], tau: f64, r1: f64, r2: f64, r3: f64) -> InequalityCheck {
    InequalityCheck::new(n[1], n[0], n[2], tau, false, CheckParams::ThreeBall { r1, r2, r3 })
}

/// `||u||_{B_r2(Q)} <= C ||u||_{B_r1(Q)}^tau ||u||_{B_r3(Q)}^(1 - tau)`.
pub fn check_three_ball(
    u: &Solution,
    scene: &Scene,
    q: &Vec2,
    r1: f64,
    r2: f64,
    r3: f64,
    opts: &ThreeBallOptions,
) -> Result<ThreeBallCheck> {
    let mode = validate_balls(scene, q, r1, r2, r3)?;
    let tau = match (mode, opts.interface_tau) {
        (BallMode::NearInterface, Some(t)) => t,
        _ => opts.rule_tau(r1, r2, r3)?,
    };
    let n = ball_norms(u, q, [r1, r2, r3], &opts.quadrature)?;
    Ok(ThreeBallCheck {
        check: make_check(n, tau, r1, r2, r3),
        tau,
        mode,
        center: *q,
    })
}

/// Exponent in `[0.01, 0.99]` that makes the fitted constants of a family
/// most uniform, i.e. minimises `max ln C - min ln C`.
///
/// Each member gives `ln C(tau) = ln(mid / outer) + tau ln(outer / inner)`
/// (norms), so the spread is convex and piecewise linear in `tau`.
pub fn fit_uniform_exponent(norms: &[[f64; 3]]) -> Option<f64> {
    let lines: Vec<(f64, f64)> = norms
        .iter()
        .filter(|n| n.iter().all(|v| *v > 0.0))
        .map(|n| (0.5 * (n[1] / n[2]).ln(), 0.5 * (n[2] / n[0]).ln()))
        .collect();
    if lines.is_empty() {
        return None;
    }
    let spread = |t: f64| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in &lines {
            let v = a + t * b;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    };
    let (mut a, mut b) = (0.01, 0.99);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if spread(m1) <= spread(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    Some(0.5 * (a + b))
}

/// Three-ball checks of a family of fields at one center with one exponent.
pub fn check_three_ball_family(
    family: &[Solution],
    scene: &Scene,
    q: &Vec2,
    r1: f64,
    r2: f64,
    r3: f64,
    opts: &ThreeBallOptions,
) -> Result<(FamilySummary, f64, BallMode)> {
    let mode = validate_balls(scene, q, r1, r2, r3)?;
    let norms = family
        .iter()
        .map(|u| ball_norms(u, q, [r1, r2, r3], &opts.quadrature))
        .collect::<Result<Vec<_>>>()?;
    let tau = match (mode, opts.interface_tau) {
        (BallMode::NearInterface, Some(t)) => t,
        (BallMode::NearInterface, None) => match fit_uniform_exponent(&norms) {
            Some(t) => t,
            None => opts.rule_tau(r1, r2, r3)?,
        },
        (BallMode::OneSided, _) => opts.rule_tau(r1, r2, r3)?,
    };
    let checks = norms.into_iter().map(|n| make_check(n, tau, r1, r2, r3)).collect();
    Ok((summarize(checks), tau, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_example() {
        // s = 1, r0 = r2 / 4, r1 = lambda0 r2 / 4.
        let (r2, l0) = (1.0, 0.8);
        let t = t1_exponent(r2 / 4.0, l0 * r2 / 4.0, r2, l0, 1.0).unwrap();
        assert_relative_eq!(t, 1.0 / 3.0, epsilon = 1e-14);
        assert!(t1_exponent(0.9, 0.4, 1.0, 1.0, 1.0).is_err());
        assert!(t1_exponent(0.1, 0.6, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn ball_rule_integrates_polynomials() {
        let q = BallQuadrature::default();
        let c = Vec2::new(0.3, -0.2);
        let area: f64 = q.nodes(&c, 0.5).iter().map(|(_, w)| w).sum();
        assert_relative_eq!(area, core::f64::consts::PI * 0.25, epsilon = 1e-13);
        // int (x - cx)^2 over the ball is pi r^4 / 4.
        let m2: f64 = q.nodes(&c, 0.5).iter().map(|(p, w)| w * (p.x - c.x).powi(2)).sum();
        assert_relative_eq!(m2, core::f64::consts::PI * 0.0625 / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn uniform_exponent_of_identical_members() {
        let n = [[1.0, 2.0, 4.0], [2.0, 4.0, 8.0]];
        // Both members give the same constant for every tau, so any tau is optimal.
        let t = fit_uniform_exponent(&n).unwrap();
        assert!(t > 0.0 && t < 1.0);
        assert!(fit_uniform_exponent(&[[0.0, 1.0, 1.0]]).is_none());
    }
}
