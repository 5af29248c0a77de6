use alloc::format;

use crate::{Error, Result, Vec2};

/// Parameters of the piecewise-quadratic Carleman weight.
///
/// Points are written in local interface coordinates `(x', x_n)` with
/// `x.x = x'` and `x.y = x_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
    pub delta: f64,
    pub kappa0: f64,
    /// Upper bound for `delta`.
    pub delta0: f64,
    /// Support radius used by the region-size constraint.
    pub r0: f64,
}

impl WeightParams {
    pub fn new(
        alpha_plus: f64,
        alpha_minus: f64,
        beta: f64,
        delta: f64,
        kappa0: f64,
        delta0: f64,
        r0: f64,
    ) -> Result<Self> {
        let wp = WeightParams {
            alpha_plus,
            alpha_minus,
            beta,
            delta,
            kappa0,
            delta0,
            r0,
        };
        wp.validate()?;
        Ok(wp)
    }

    /// Defaults `(alpha_-, alpha_+) = (1, 2)`, `beta = 0.1`,
    /// `delta = min(delta0, rho0 / 2)`, and `r0 = rho0`.
    pub fn with_defaults(rho0: f64, delta0: f64) -> Result<Self> {
        Self::new(2.0, 1.0, 0.1, delta0.min(0.5 * rho0), 2.0, delta0, rho0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha_plus,
            self.alpha_minus,
            self.beta,
            self.delta,
            self.kappa0,
            self.delta0,
            self.r0,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::input("weight parameters must be finite and positive"));
        }
        if self.kappa0 <= 1.0 {
            return Err(Error::input(format!("kappa0 must exceed 1, got {}", self.kappa0)));
        }
        if self.alpha_plus / self.alpha_minus < self.kappa0 {
            return Err(Error::input(format!(
                "alpha_plus/alpha_minus = {} is below kappa0 = {}",
                self.alpha_plus / self.alpha_minus,
                self.kappa0
            )));
        }
        if self.delta > self.delta0 {
            return Err(Error::input(format!("delta = {} exceeds delta0 = {}", self.delta, self.delta0)));
        }
        Ok(())
    }

    /// One-dimensional weight: slope `alpha_+` above the interface and
    /// `alpha_-` below, with common curvature `beta`.
    pub fn varphi(&self, t: f64) -> f64 {
        let alpha = if t >= 0.0 { self.alpha_plus } else { self.alpha_minus };
        alpha * t + 0.5 * self.beta * t * t
    }

    /// `varphi(x_n) - eps |x'|^2 / 2`.
    pub fn psi_eps(&self, x: &Vec2, eps: f64) -> f64 {
        self.varphi(x.y) - 0.5 * eps * x.x * x.x
    }

    /// The scaled weight `psi_delta(x / delta)`.
    pub fn phi_delta(&self, x: &Vec2) -> f64 {
        self.psi_eps(&(x / self.delta), self.delta)
    }

    /// `a = alpha_+ / delta`.
    pub fn a(&self) -> f64 {
        self.alpha_plus / self.delta
    }

    /// Largest admissible `r`: `min{r0^2, 13 alpha_- / (8 beta), 2 delta r0 / (19 alpha_- + 8 beta)}`.
    pub fn support_radius(&self) -> f64 {
        let am = self.alpha_minus;
        (self.r0 * self.r0)
            .min(13.0 * am / (8.0 * self.beta))
            .min(2.0 * self.delta * self.r0 / (19.0 * am + 8.0 * self.beta))
    }

    /// `R = alpha_- r / 16`, the cap on `R1` and `R2`.
    pub fn max_region_parameter(&self) -> f64 {
        self.alpha_minus * self.support_radius() / 16.0
    }
}

/// `alpha_- x_n / delta + beta x_n^2 / (2 delta^2) - |x'|^2 / (2 delta)`.
pub fn z_value(x: &Vec2, wp: &WeightParams) -> f64 {
    let d = wp.delta;
    wp.alpha_minus * x.y / d + wp.beta * x.y * x.y / (2.0 * d * d) - x.x * x.x / (2.0 * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionKind {
    U1,
    U2,
    U3,
}

/// The three level-set regions of the weight, scaled by `theta`.
///
/// Only the branch of `{z >= c}` around the interface is used: points with
/// `x_n <= -alpha_- delta / beta` belong to the far sheet of the hyperbola and
/// are excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTriple {
    pub wp: WeightParams,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
}

impl RegionTriple {
    pub fn new(wp: WeightParams, r1: f64, r2: f64, theta: f64) -> Result<Self> {
        let cap = wp.max_region_parameter();
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::input("R1 and R2 must be positive"));
        }
        if r1 > cap * (1.0 + 1e-12) || r2 > cap * (1.0 + 1e-12) {
            return Err(Error::input(format!("R1 = {r1} and R2 = {r2} must not exceed R = {cap}")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::input(format!("theta must lie in (0, 1], got {theta}")));
        }
        Ok(RegionTriple { wp, r1, r2, theta })
    }

    pub fn a(&self) -> f64 {
        self.wp.a()
    }

    /// Exponent on the `U1` integral in the three-region inequality.
    pub fn xi(&self) -> f64 {
        self.r2 / (2.0 * self.r1 + 3.0 * self.r2)
    }

    /// Lower edge of the near branch in unscaled coordinates.
    pub fn branch_floor(&self) -> f64 {
        -self.wp.alpha_minus * self.wp.delta / self.wp.beta
    }

    /// Membership of an unscaled point in `U_k`.
    pub fn in_unscaled(&self, kind: RegionKind, y: &Vec2) -> bool {
        if y.y <= self.branch_floor() {
            return false;
        }
        let z = z_value(y, &self.wp);
        let a = self.a();
        match kind {
            RegionKind::U1 => z >= -4.0 * self.r2 && y.y > self.r1 / (8.0 * a) && y.y < self.r1 / a,
            RegionKind::U2 => z >= -self.r2 && z <= self.r1 / (2.0 * a) && y.y < self.r1 / (8.0 * a),
            RegionKind::U3 => z >= -4.0 * self.r2 && y.y < self.r1 / a,
        }
    }

    /// Membership in `theta U_k`.
    pub fn contains(&self, kind: RegionKind, y: &Vec2) -> bool {
        self.in_unscaled(kind, &(y / self.theta))
    }

    /// Box `[-w, w] x [lo, hi]` in local flattened coordinates that contains
    /// `theta U_k`.
    pub fn local_bounds(&self, kind: RegionKind) -> (f64, f64, f64) {
        let wp = &self.wp;
        let a = self.a();
        let (c, hi) = match kind {
            RegionKind::U1 => (4.0 * self.r2, self.r1 / a),
            RegionKind::U2 => (self.r2, self.r1 / (8.0 * a)),
            RegionKind::U3 => (4.0 * self.r2, self.r1 / a),
        };
        // Lowest x_n on the axis with z >= -c.
        let disc = (wp.alpha_minus * wp.alpha_minus - 2.0 * wp.beta * c).max(0.0);
        let lo = match kind {
            RegionKind::U1 => self.r1 / (8.0 * a),
            _ => (wp.delta / wp.beta * (-wp.alpha_minus + disc.sqrt())).max(self.branch_floor()),
        };
        let zmax = wp.alpha_minus * hi / wp.delta + wp.beta * hi * hi / (2.0 * wp.delta * wp.delta) + c;
        let w = (2.0 * wp.delta * zmax).max(0.0).sqrt();
        (self.theta * w, self.theta * lo, self.theta * hi)
    }

    /// Radius of the ball around the anchor that contains the preimage of
    /// `theta U_3` under a flattening with graph ratio bound `eta_norm`.
    pub fn u3_ball_radius(&self, eta_norm: f64) -> f64 {
        let wp = &self.wp;
        let a = self.a();
        let e = 1.0 + 2.0 * eta_norm * eta_norm;
        let (r1, r2, d, b, am) = (self.r1, self.r2, wp.delta, wp.beta, wp.alpha_minus);
        let root = (am * am - 8.0 * b * r2).max(0.0).sqrt();
        let s = e * (2.0 * am / a * r1 + 8.0 * d * r2)
            + (2.0 + e * b / d) * r1 * r1 / (a * a)
            + 128.0 * d * d * r2 * r2 / ((am + root) * (am + root));
        self.theta * s.sqrt()
    }

    /// Supremum of radii `r` whose ball around the anchor flattens into
    /// `theta U_2`.
    pub fn u2_inner_radius(&self, eta_norm: f64, rho0: f64) -> f64 {
        let wp = &self.wp;
        let a = self.a();
        let (d, b, am) = (wp.delta, wp.beta, wp.alpha_minus);
        let rho1 = am * d / (d + b);
        // 2 e r + e^2 r^2 < 1/2  <=>  (1 + e r)^2 < 3/2.
        let rho2 = if eta_norm > 0.0 {
            (1.5f64.sqrt() - 1.0) / eta_norm
        } else {
            f64::INFINITY
        };
        let rho3 = 2.0 * am * d / b;
        let m = (d * self.r1 / (6.0 * a * am))
            .min(2.0 * d * self.r2 / (3.0 * am))
            .min(self.r1 / (12.0 * a))
            .min(rho0 / self.theta)
            .min(rho1)
            .min(rho2)
            .min(rho3);
        self.theta * m
    }

    /// Lower bound on the distance from the preimage of `theta U_1` to the interface.
    pub fn u1_separation(&self) -> f64 {
        self.theta * self.r1 / (16.0 * self.a())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wp(am: f64, beta: f64, delta: f64) -> WeightParams {
        WeightParams {
            alpha_plus: 2.0 * am,
            alpha_minus: am,
            beta,
            delta,
            kappa0: 2.0,
            delta0: 1.0,
            r0: 1.0,
        }
    }

    #[test]
    fn z_value_examples() {
        let p = wp(1.0, 0.0, 1.0);
        assert_eq!(z_value(&Vec2::zeros(), &p), 0.0);
        assert_eq!(z_value(&Vec2::new(0.0, 0.5), &p), 0.5);
        assert_eq!(z_value(&Vec2::new(1.0, 0.0), &p), -0.5);
    }

    #[test]
    fn phi_delta_is_scaled_psi() {
        let p = wp(1.0, 0.1, 0.25);
        for x in [Vec2::new(0.1, 0.2), Vec2::new(-0.3, -0.05)] {
            let direct = p.varphi(x.y / p.delta) - x.x * x.x / (2.0 * p.delta);
            assert_relative_eq!(p.phi_delta(&x), direct, epsilon = 1e-15);
        }
    }

    #[test]
    fn region_examples() {
        let p = WeightParams::with_defaults(0.25, 1.0).unwrap();
        let cap = p.max_region_parameter();
        let t = RegionTriple::new(p, 0.5 * cap, cap, 1.0).unwrap();
        let a = t.a();
        // z = -R2/2 on the axis: solve alpha_- y/d + beta y^2/(2 d^2) = -R2/2.
        let (d, b, am) = (p.delta, p.beta, p.alpha_minus);
        let y = d / b * (-am + (am * am - b * t.r2).sqrt());
        let q = Vec2::new(0.0, y);
        assert_relative_eq!(z_value(&q, &p), -t.r2 / 2.0, max_relative = 1e-9);
        assert!(t.contains(RegionKind::U2, &q));
        assert!(t.contains(RegionKind::U3, &q));
        assert!(!t.contains(RegionKind::U1, &q));
        let q = Vec2::new(0.0, t.r1 / (2.0 * a));
        assert!(z_value(&q, &p) >= 0.0);
        assert!(t.contains(RegionKind::U1, &q));
        assert!(t.contains(RegionKind::U3, &q));
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = WeightParams::with_defaults(0.25, 1.0).unwrap();
        let cap = p.max_region_parameter();
        assert!(RegionTriple::new(p, 2.0 * cap, cap, 1.0).is_err());
        assert!(RegionTriple::new(p, cap, cap, 1.5).is_err());
        assert!(RegionTriple::new(p, cap, cap, 0.0).is_err());
        assert!(WeightParams::new(1.5, 1.0, 0.1, 0.1, 2.0, 1.0, 1.0).is_err());
    }
}
