use alloc::format;

use super::{Aabb, Shape};
use crate::{Error, Result, Vec2};

/// Which component of the two-phase split a point lies in. `Plus` is the
/// component touching the outer boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

/// Outer domain, optional interface curve enclosing the inner phase, optional
/// inclusion, and the geometric constants of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub outer: Shape,
    pub interface: Option<Shape>,
    pub inclusion: Option<Shape>,
    /// Chart radius of the interface.
    pub rho0: f64,
    /// Curvature bound of the interface.
    pub k0: f64,
    /// Required separation of the inclusion from the outer boundary.
    pub d0: f64,
    /// Fatness depth of the inclusion.
    pub d1: f64,
}

const SAMPLES: usize = 2048;

impl Scene {
    pub fn new(
        outer: Shape,
        interface: Option<Shape>,
        inclusion: Option<Shape>,
        rho0: f64,
        k0: f64,
        d0: f64,
        d1: f64,
    ) -> Result<Self> {
        let s = Scene {
            outer,
            interface,
            inclusion,
            rho0,
            k0,
            d0,
            d1,
        };
        s.validate()?;
        Ok(s)
    }

    /// Single-phase scene without an interface.
    pub fn homogeneous(outer: Shape, inclusion: Option<Shape>, d0: f64, d1: f64) -> Result<Self> {
        Self::new(outer, None, inclusion, 1.0, 0.0, d0, d1)
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        for (name, v) in [("rho0", self.rho0), ("d0", self.d0), ("d1", self.d1)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Geometry(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.k0.is_finite() && self.k0 >= 0.0) {
            return Err(Error::Geometry(format!("k0 must be non-negative, got {}", self.k0)));
        }
        if let Some(sigma) = &self.interface {
            sigma.validate()?;
            let d = self.interface_boundary_distance().unwrap_or(0.0);
            if d <= 0.0 {
                return Err(Error::Geometry("interface must lie strictly inside the outer domain".into()));
            }
        }
        if let Some(incl) = &self.inclusion {
            incl.validate()?;
            let d = self.inclusion_boundary_distance().unwrap_or(0.0);
            if d < self.d0 - 1e-9 {
                return Err(Error::Geometry(format!(
                    "inclusion is {d:.4} from the outer boundary, less than d0 = {}",
                    self.d0
                )));
            }
        }
        Ok(())
    }

    /// `dist(Sigma, dOmega)`, non-positive when the interface leaves the domain.
    pub fn interface_boundary_distance(&self) -> Option<f64> {
        self.interface.as_ref().map(|s| inner_distance(&self.outer, s))
    }

    /// `dist(D, dOmega)`, non-positive when the inclusion leaves the domain.
    pub fn inclusion_boundary_distance(&self) -> Option<f64> {
        self.inclusion.as_ref().map(|s| inner_distance(&self.outer, s))
    }

    pub fn side_of(&self, p: &Vec2) -> Side {
        match &self.interface {
            Some(s) if s.contains(p) => Side::Minus,
            _ => Side::Plus,
        }
    }

    pub fn in_inclusion(&self, p: &Vec2) -> bool {
        self.inclusion.as_ref().is_some_and(|d| d.contains(p))
    }

    pub fn bbox(&self) -> Aabb {
        self.outer.bbox()
    }

    /// Whether the inclusion meets the interface curve.
    pub fn inclusion_crosses_interface(&self) -> bool {
        match (&self.inclusion, &self.interface) {
            (Some(d), Some(s)) => {
                let pts = d.boundary_polyline(d.perimeter() / SAMPLES as f64);
                let inside = pts.iter().filter(|p| s.contains(p)).count();
                inside > 0 && inside < pts.len()
            }
            _ => false,
        }
    }
}

/// Minimum over the boundary of `inner` of the distance to the boundary of
/// `outer`, signed so that it is negative if `inner` pokes outside.
fn inner_distance(outer: &Shape, inner: &Shape) -> f64 {
    let pts = inner.boundary_polyline(inner.perimeter() / SAMPLES as f64);
    pts.iter()
        .map(|p| -outer.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}
