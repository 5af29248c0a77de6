use super::Shape;
use crate::{Error, Result, Vec2};

/// Local graph `x_n = psi(x')` of the interface near an anchor, in the frame
/// whose second axis is the normal pointing into the outer phase.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFn {
    Flat,
    Constant(f64),
    /// `c |x'|^2`.
    Paraboloid(f64),
    /// Circle of the given radius through the anchor, bulging towards `+x_n`.
    Circle { radius: f64 },
    /// Ellipse in global coordinates; `psi` is the signed normal offset of the
    /// nearest intersection with the line `x' = const`.
    Ellipse {
        center: Vec2,
        semi_axes: Vec2,
        angle: f64,
    },
}

/// The flattening chart `(x', x_n) -> (x', x_n - psi(x'))` around an interface point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatteningMap {
    pub anchor: Vec2,
    /// Unit normal pointing into the outer phase.
    pub normal: Vec2,
    pub graph: GraphFn,
    pub rho0: f64,
    pub k0: f64,
}

impl FlatteningMap {
    pub fn new(anchor: Vec2, normal: Vec2, graph: GraphFn, rho0: f64, k0: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || !(rho0 > 0.0) {
            return Err(Error::input("flattening map needs a nonzero normal and positive rho0"));
        }
        Ok(FlatteningMap {
            anchor,
            normal: normal / n,
            graph,
            rho0,
            k0,
        })
    }

    /// Chart of `interface` at the boundary point nearest to `hint`.
    pub fn for_interface(interface: &Shape, hint: &Vec2, rho0: f64, k0: f64) -> Result<Self> {
        let anchor = interface.closest_boundary_point(hint);
        let normal = interface.outward_normal(&anchor);
        let graph = match interface {
            Shape::Disk { radius, .. } => GraphFn::Circle { radius: *radius },
            Shape::Ellipse {
                center,
                semi_axes,
                angle,
            } => GraphFn::Ellipse {
                center: *center,
                semi_axes: *semi_axes,
                angle: *angle,
            },
            Shape::Polygon { .. } => {
                return Err(Error::Geometry(
                    "flattening charts need a C^{1,1} interface; polygons have corners".into(),
                ))
            }
        };
        Self::new(anchor, normal, graph, rho0, k0)
    }

    pub fn tangent(&self) -> Vec2 {
        Vec2::new(self.normal.y, -self.normal.x)
    }

    /// Rigid change to local coordinates `(x', x_n)`.
    pub fn to_local(&self, x: &Vec2) -> Vec2 {
        let d = x - self.anchor;
        Vec2::new(d.dot(&self.tangent()), d.dot(&self.normal))
    }

    pub fn from_local(&self, y: &Vec2) -> Vec2 {
        self.anchor + self.tangent() * y.x + self.normal * y.y
    }

    /// Graph function value at lateral coordinate `s`; `NaN` if the line
    /// `x' = s` misses the interface.
    pub fn psi(&self, s: f64) -> f64 {
        match &self.graph {
            GraphFn::Flat => 0.0,
            GraphFn::Constant(c) => *c,
            GraphFn::Paraboloid(c) => c * s * s,
            GraphFn::Circle { radius } => {
                let d = radius * radius - s * s;
                if d < 0.0 {
                    f64::NAN
                } else {
                    // -r + sqrt(r^2 - s^2), written without cancellation.
                    -s * s / (radius + d.sqrt())
                }
            }
            GraphFn::Ellipse {
                center,
                semi_axes,
                angle,
            } => {
                let (sn, cs) = angle.sin_cos();
                let rot = |v: Vec2| Vec2::new(cs * v.x + sn * v.y, -sn * v.x + cs * v.y);
                let p = rot(self.anchor + self.tangent() * s - center);
                let m = rot(self.normal);
                let e2 = Vec2::new(semi_axes.x * semi_axes.x, semi_axes.y * semi_axes.y);
                let qa = m.x * m.x / e2.x + m.y * m.y / e2.y;
                let qb = 2.0 * (p.x * m.x / e2.x + p.y * m.y / e2.y);
                let qc = p.x * p.x / e2.x + p.y * p.y / e2.y - 1.0;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    return f64::NAN;
                }
                let sq = disc.sqrt();
                let q = -0.5 * (qb + qb.signum() * sq);
                let (t1, t2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, qc / q) };
                if t1.abs() < t2.abs() {
                    t1
                } else {
                    t2
                }
            }
        }
    }

    fn check_chart(&self, s: f64) -> Result<f64> {
        if s.abs() >= self.rho0 {
            return Err(Error::ChartOutOfRange {
                x: s,
                y: 0.0,
                rho0: self.rho0,
            });
        }
        let v = self.psi(s);
        if !v.is_finite() {
            return Err(Error::ChartOutOfRange { x: s, y: v, rho0: self.rho0 });
        }
        Ok(v)
    }

    /// `(x', x_n) -> (x', x_n - psi(x'))` on local coordinates.
    pub fn flatten_local(&self, x: &Vec2) -> Result<Vec2> {
        let p = self.check_chart(x.x).map_err(|_| Error::ChartOutOfRange {
            x: x.x,
            y: x.y,
            rho0: self.rho0,
        })?;
        Ok(Vec2::new(x.x, x.y - p))
    }

    pub fn unflatten_local(&self, y: &Vec2) -> Result<Vec2> {
        let p = self.check_chart(y.x).map_err(|_| Error::ChartOutOfRange {
            x: y.x,
            y: y.y,
            rho0: self.rho0,
        })?;
        Ok(Vec2::new(y.x, y.y + p))
    }

    /// Global point to flattened local coordinates.
    pub fn flatten(&self, x: &Vec2) -> Result<Vec2> {
        self.flatten_local(&self.to_local(x))
    }

    /// Flattened local coordinates to a global point.
    pub fn unflatten(&self, y: &Vec2) -> Result<Vec2> {
        Ok(self.from_local(&self.unflatten_local(y)?))
    }

    /// `sup |psi(x')| / |x'|^2` over the chart, sampled.
    pub fn eta_norm(&self) -> f64 {
        let n = 2000;
        let mut m: f64 = 0.0;
        for k in 1..n {
            let s = self.rho0 * k as f64 / n as f64;
            for s in [s, -s] {
                let v = self.psi(s);
                if v.is_finite() {
                    m = m.max(v.abs() / (s * s));
                }
            }
        }
        m
    }
}
