//! Interface- and inclusion-conforming triangulations of a [`Scene`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::geometry::{point_in_polygon, Aabb, Scene, Side};
#[cfg(test)]
use crate::geometry::Shape;
use crate::quadrature::{barycentric, hat_gradients, signed_area};
use crate::{Error, Result, Vec2};

/// Meshing options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Target edge length.
    pub h: f64,
    /// Smallest interior angle accepted in the final mesh, in degrees.
    pub min_angle_deg: f64,
}

impl MeshOptions {
    pub fn new(h: f64) -> Self {
        MeshOptions { h, min_angle_deg: 5.0 }
    }
}

/// An edge on the interface with the elements on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceEdge {
    pub nodes: [usize; 2],
    pub plus: usize,
    pub minus: usize,
}

/// Mesh statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub h: f64,
    pub min_edge: f64,
    pub max_edge: f64,
    pub min_angle_deg: f64,
    pub components: usize,
}

/// Conforming P1 triangulation with phase and inclusion tags.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Vec2>,
    /// Counter-clockwise triangles.
    pub tris: Vec<[usize; 3]>,
    pub side: Vec<Side>,
    pub in_d: Vec<bool>,
    /// Boundary edges oriented with the domain on their left.
    pub boundary_edges: Vec<[usize; 2]>,
    pub interface_edges: Vec<InterfaceEdge>,
    pub stats: MeshStats,
    locator: Locator,
}

impl Mesh {
    /// Build a conforming mesh of `scene`.
    pub fn build(scene: &Scene, opts: &MeshOptions) -> Result<Mesh> {
        let h = opts.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::input(format!("mesh size must be positive, got {h}")));
        }
        let bb = scene.outer.bbox();
        let extent = bb.width().min(bb.height());
        if h >= 0.5 * extent {
            return Err(Error::Mesh {
                reason: format!("h = {h} is not smaller than the domain (extent {extent:.4})"),
                suggested_h: extent / 10.0,
            });
        }
        if let Some(gap) = scene.interface_boundary_distance() {
            if gap < h {
                return Err(Error::Mesh {
                    reason: format!("interface is {gap:.4} from the boundary, below h = {h}"),
                    suggested_h: 0.5 * gap,
                });
            }
        }
        for (name, s) in [("interface", &scene.interface), ("inclusion", &scene.inclusion)] {
            if let Some(s) = s {
                let thickness = 2.0 * s.area() / s.perimeter();
                if thickness < h {
                    return Err(Error::Mesh {
                        reason: format!("{name} thickness {thickness:.4} is below h = {h}"),
                        suggested_h: 0.5 * thickness,
                    });
                }
            }
        }

        let outer = scene.outer.boundary_polyline(h);
        let sigma = scene.interface.as_ref().map(|s| s.boundary_polyline(h));
        let incl = scene.inclusion.as_ref().map(|s| s.boundary_polyline(h));

        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
        for poly in core::iter::once(&outer).chain(sigma.iter()).chain(incl.iter()) {
            insert_loop(&mut cdt, poly)?;
        }
        let area = scene.outer.area();
        let params = RefinementParameters::<f64>::new()
            .with_max_allowed_area(0.433 * h * h)
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .with_max_additional_vertices((40.0 * area / (h * h)) as usize + 20_000)
            .exclude_outer_faces(false);
        cdt.refine(params);

        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        let mut nodes = Vec::new();
        let mut tris = Vec::new();
        let mut side = Vec::new();
        let mut in_d = Vec::new();
        for face in cdt.inner_faces() {
            let vs = face.vertices();
            let pts = vs.map(|v| {
                let p = v.position();
                Vec2::new(p.x, p.y)
            });
            let c = (pts[0] + pts[1] + pts[2]) / 3.0;
            if !point_in_polygon(&c, &outer) {
                continue;
            }
            let mut ids = [0usize; 3];
            for k in 0..3 {
                let key = vs[k].fix().index();
                let next = nodes.len();
                let id = *index.entry(key).or_insert(next);
                if id == next {
                    nodes.push(pts[k]);
                }
                ids[k] = id;
            }
            if signed_area(&pts) < 0.0 {
                ids.swap(1, 2);
            }
            tris.push(ids);
            side.push(match &sigma {
                Some(s) if point_in_polygon(&c, s) => Side::Minus,
                _ => Side::Plus,
            });
            in_d.push(incl.as_ref().is_some_and(|d| point_in_polygon(&c, d)));
        }
        if tris.is_empty() {
            return Err(Error::Mesh {
                reason: "triangulation produced no elements".into(),
                suggested_h: 0.5 * h,
            });
        }
        Self::assemble(nodes, tris, side, in_d, h, opts.min_angle_deg, scene.interface.is_some())
    }

    /// Finish a mesh from raw arrays: derive edges, statistics and the locator.
    pub fn from_parts(
        nodes: Vec<Vec2>,
        tris: Vec<[usize; 3]>,
        side: Vec<Side>,
        in_d: Vec<bool>,
        h: f64,
    ) -> Result<Mesh> {
        let two = side.contains(&Side::Minus);
        Self::assemble(nodes, tris, side, in_d, h, 0.0, two)
    }

    fn assemble(
        nodes: Vec<Vec2>,
        mut tris: Vec<[usize; 3]>,
        side: Vec<Side>,
        in_d: Vec<bool>,
        h: f64,
        min_angle_deg: f64,
        expect_two: bool,
    ) -> Result<Mesh> {
        for t in tris.iter_mut() {
            if signed_area(&[nodes[t[0]], nodes[t[1]], nodes[t[2]]]) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut edge_map: BTreeMap<(usize, usize), Vec<(usize, [usize; 2])>> = BTreeMap::new();
        for (e, t) in tris.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                edge_map.entry((a.min(b), a.max(b))).or_default().push((e, [a, b]));
            }
        }
        let mut boundary_edges = Vec::new();
        let mut interface_edges = Vec::new();
        let mut min_edge = f64::INFINITY;
        let mut max_edge: f64 = 0.0;
        // Union-find over elements, merging across non-interface edges.
        let mut parent: Vec<usize> = (0..tris.len()).collect();
        for ((a, b), users) in &edge_map {
            let len = (nodes[*a] - nodes[*b]).norm();
            min_edge = min_edge.min(len);
            max_edge = max_edge.max(len);
            match users.as_slice() {
                [(_, dir)] => boundary_edges.push(*dir),
                [(e0, _), (e1, _)] => {
                    if side[*e0] != side[*e1] {
                        let (plus, minus) = if side[*e0] == Side::Plus { (*e0, *e1) } else { (*e1, *e0) };
                        interface_edges.push(InterfaceEdge {
                            nodes: [*a, *b],
                            plus,
                            minus,
                        });
                    } else {
                        union(&mut parent, *e0, *e1);
                    }
                }
                _ => {
                    return Err(Error::Mesh {
                        reason: format!("edge ({a}, {b}) is shared by {} elements", users.len()),
                        suggested_h: 0.5 * h,
                    })
                }
            }
        }
        let mut roots: Vec<usize> = (0..tris.len()).map(|e| find(&mut parent, e)).collect();
        roots.sort_unstable();
        roots.dedup();
        let components = roots.len();
        let expected = if expect_two { 2 } else { 1 };
        if components != expected {
            return Err(Error::Mesh {
                reason: format!("domain minus interface has {components} components, expected {expected}"),
                suggested_h: 0.5 * h,
            });
        }

        let mut min_angle = f64::INFINITY;
        for t in &tris {
            let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
                min_angle = min_angle.min(ang.to_degrees());
            }
        }
        if min_angle < min_angle_deg {
            return Err(Error::Mesh {
                reason: format!("smallest angle {min_angle:.2} deg is below {min_angle_deg} deg; geometry is too thin for h"),
                suggested_h: 0.5 * h,
            });
        }
        let locator = Locator::new(&nodes, &tris, h);
        Ok(Mesh {
            nodes,
            tris,
            side,
            in_d,
            boundary_edges,
            interface_edges,
            stats: MeshStats {
                h,
                min_edge,
                max_edge,
                min_angle_deg: min_angle,
                components,
            },
            locator,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.tris.len()
    }

    pub fn triangle(&self, e: usize) -> [Vec2; 3] {
        let t = self.tris[e];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn area(&self, e: usize) -> f64 {
        signed_area(&self.triangle(e))
    }

    pub fn centroid(&self, e: usize) -> Vec2 {
        let t = self.triangle(e);
        (t[0] + t[1] + t[2]) / 3.0
    }

    pub fn hat_gradients(&self, e: usize) -> [Vec2; 3] {
        hat_gradients(&self.triangle(e))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.area(e)).sum()
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(&self.nodes)
    }

    /// Nodes lying on the outer boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().flat_map(|e| e.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Element containing `p` and the barycentric coordinates of `p` there.
    pub fn locate(&self, p: &Vec2) -> Option<(usize, [f64; 3])> {
        self.locator.locate(self, p)
    }

    /// Copy with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Mesh {
        let nodes: Vec<Vec2> = self.nodes.iter().map(|p| p * factor).collect();
        let locator = Locator::new(&nodes, &self.tris, self.stats.h * factor);
        let mut stats = self.stats;
        stats.h *= factor;
        stats.min_edge *= factor;
        stats.max_edge *= factor;
        Mesh {
            nodes,
            tris: self.tris.clone(),
            side: self.side.clone(),
            in_d: self.in_d.clone(),
            boundary_edges: self.boundary_edges.clone(),
            interface_edges: self.interface_edges.clone(),
            stats,
            locator,
        }
    }

    /// Area of the elements on the given phase.
    pub fn side_area(&self, s: Side) -> f64 {
        (0..self.num_elements()).filter(|e| self.side[*e] == s).map(|e| self.area(e)).sum()
    }

    /// Area of the elements tagged as inclusion.
    pub fn inclusion_area(&self) -> f64 {
        (0..self.num_elements()).filter(|e| self.in_d[*e]).map(|e| self.area(e)).sum()
    }

    /// Elements sharing each node.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.num_nodes()];
        for (e, t) in self.tris.iter().enumerate() {
            for &n in t {
                out[n].push(e);
            }
        }
        out
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

fn insert_loop(cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, poly: &[Vec2]) -> Result<()> {
    let mut handles = Vec::with_capacity(poly.len());
    for p in poly {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh {
                reason: format!("vertex insertion failed: {e:?}"),
                suggested_h: 0.0,
            })?;
        handles.push(h);
    }
    for i in 0..handles.len() {
        let a = handles[i];
        let b = handles[(i + 1) % handles.len()];
        if a != b {
            cdt.add_constraint_and_split(a, b, |p| p);
        }
    }
    Ok(())
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Debug, Clone)]
struct Locator {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn new(nodes: &[Vec2], tris: &[[usize; 3]], h: f64) -> Self {
        let bb = Aabb::from_points(nodes);
        let cell = h.max(bb.diameter() / 4096.0).max(f64::MIN_POSITIVE);
        let nx = ((bb.width() / cell).ceil() as usize).max(1);
        let ny = ((bb.height() / cell).ceil() as usize).max(1);
        let mut buckets = alloc::vec![Vec::new(); nx * ny];
        for (e, t) in tris.iter().enumerate() {
            let tb = Aabb::from_points(t.iter().map(|i| &nodes[*i]));
            let (i0, j0) = cell_of(&bb.min, cell, nx, ny, &tb.min);
            let (i1, j1) = cell_of(&bb.min, cell, nx, ny, &tb.max);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(e as u32);
                }
            }
        }
        Locator {
            origin: bb.min,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn locate(&self, mesh: &Mesh, p: &Vec2) -> Option<(usize, [f64; 3])> {
        let rel = p - self.origin;
        let tol = 1e-10;
        if rel.x < -tol || rel.y < -tol {
            return None;
        }
        let (i, j) = cell_of(&self.origin, self.cell, self.nx, self.ny, p);
        if rel.x > (self.nx as f64) * self.cell + tol || rel.y > (self.ny as f64) * self.cell + tol {
            return None;
        }
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &e in &self.buckets[j * self.nx + i] {
            let b = barycentric(&mesh.triangle(e as usize), p);
            let m = b[0].min(b[1]).min(b[2]);
            if best.as_ref().is_none_or(|x| m > x.2) {
                best = Some((e as usize, b, m));
            }
        }
        match best {
            Some((e, b, m)) if m >= -tol => Some((e, b)),
            _ => None,
        }
    }
}

fn cell_of(origin: &Vec2, cell: f64, nx: usize, ny: usize, p: &Vec2) -> (usize, usize) {
    let i = ((p.x - origin.x) / cell).floor().max(0.0) as usize;
    let j = ((p.y - origin.y) / cell).floor().max(0.0) as usize;
    (i.min(nx - 1), j.min(ny - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn disk_scene(sigma: Option<f64>) -> Scene {
        Scene::new(
            Shape::disk(Vec2::zeros(), 1.0),
            sigma.map(|r| Shape::disk(Vec2::zeros(), r)),
            None,
            0.25,
            2.0,
            0.5,
            0.05,
        )
        .unwrap()
    }

    #[test]
    fn unit_disk_mesh() {
        let m = Mesh::build(&disk_scene(None), &MeshOptions::new(0.1)).unwrap();
        assert!(m.num_elements() > 300 && m.num_elements() < 1500, "{}", m.num_elements());
        assert!(m.side.iter().all(|s| *s == Side::Plus));
        assert_relative_eq!(m.total_area(), PI, max_relative = 0.02);
        assert!(m.stats.min_angle_deg > 20.0);
        // Boundary edges form a closed ccw loop of total length ~2 pi.
        let len: f64 = m.boundary_edges.iter().map(|e| (m.nodes[e[1]] - m.nodes[e[0]]).norm()).sum();
        assert_relative_eq!(len, 2.0 * PI, max_relative = 0.01);
        let turn: f64 = m
            .boundary_edges
            .iter()
            .map(|e| m.nodes[e[0]].perp(&m.nodes[e[1]]))
            .sum();
        assert!(turn > 0.0);
    }

    #[test]
    fn interface_tags_split_by_radius() {
        for h in [0.1, 0.05] {
            let m = Mesh::build(&disk_scene(Some(0.5)), &MeshOptions::new(h)).unwrap();
            assert_relative_eq!(m.side_area(Side::Minus), PI / 4.0, max_relative = 2.0 * h);
            for e in 0..m.num_elements() {
                let r = m.centroid(e).norm();
                assert_eq!(m.side[e] == Side::Minus, r < 0.5);
            }
            assert_eq!(m.stats.components, 2);
            assert!(!m.interface_edges.is_empty());
        }
    }

    #[test]
    fn refinement_quadruples() {
        let a = Mesh::build(&disk_scene(None), &MeshOptions::new(0.1)).unwrap();
        let b = Mesh::build(&disk_scene(None), &MeshOptions::new(0.05)).unwrap();
        let ratio = b.num_elements() as f64 / a.num_elements() as f64;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn too_coarse() {
        let r = Mesh::build(&disk_scene(None), &MeshOptions::new(2.0));
        assert!(matches!(r, Err(Error::Mesh { .. })));
    }

    #[test]
    fn inclusion_crossing_interface_is_conforming() {
        let s = Scene::new(
            Shape::disk(Vec2::zeros(), 1.0),
            Some(Shape::disk(Vec2::zeros(), 0.5)),
            Some(Shape::disk(Vec2::new(0.5, 0.0), 0.15)),
            0.25,
            2.0,
            0.3,
            0.05,
        )
        .unwrap();
        let m = Mesh::build(&s, &MeshOptions::new(0.04)).unwrap();
        let a = m.inclusion_area();
        assert_relative_eq!(a, PI * 0.0225, max_relative = 0.03);
        let both = (0..m.num_elements()).filter(|e| m.in_d[*e] && m.side[*e] == Side::Minus).count();
        assert!(both > 0);
    }

    #[test]
    fn locate_finds_points() {
        let m = Mesh::build(&disk_scene(Some(0.5)), &MeshOptions::new(0.1)).unwrap();
        for p in [Vec2::new(0.0, 0.0), Vec2::new(0.3, -0.4), Vec2::new(-0.9, 0.1)] {
            let (e, b) = m.locate(&p).unwrap();
            let t = m.triangle(e);
            let q = t[0] * b[0] + t[1] * b[1] + t[2] * b[2];
            assert_relative_eq!(q, p, epsilon = 1e-12);
        }
        assert!(m.locate(&Vec2::new(1.5, 0.0)).is_none());
    }
}
