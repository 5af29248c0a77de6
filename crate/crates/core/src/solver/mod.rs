//! P1 finite-element solver for the background and the perturbed
//! (real-linear) conductivity problems with Neumann data.
//!
//! The complex unknown is split into real and imaginary parts, so both the
//! complex-linear background law and the chiral inclusion law lead to a real
//! block system. The mean of `u` is fixed by two Lagrange multipliers and the
//! bordered system is factored once by an envelope LU in reverse
//! Cuthill-McKee order.

pub mod profile;

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::coefficients::{CVec2, Coefficients, Law, LowerOrderTerms};
pub use crate::mesh::{InterfaceEdge, Mesh, MeshOptions, MeshStats};
use crate::quadrature::barycentric;
use crate::{Error, Result, Vec2, C64};
use profile::{reverse_cuthill_mckee, FactorStats, ProfileMatrix};

/// One Fourier mode `cos_coef cos(k t) + sin_coef sin(k t)` in the polar
/// angle `t` around a center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: u32,
    pub cos: C64,
    pub sin: C64,
}

/// Boundary current density as a finite Fourier series in the polar angle.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierData {
    pub center: Vec2,
    pub modes: Vec<FourierMode>,
}

impl FourierData {
    /// `cos(k t)` around the origin.
    pub fn cos_mode(k: u32) -> Self {
        FourierData {
            center: Vec2::zeros(),
            modes: alloc::vec![FourierMode {
                k,
                cos: C64::new(1.0, 0.0),
                sin: C64::new(0.0, 0.0),
            }],
        }
    }

    pub fn eval(&self, p: &Vec2) -> C64 {
        let d = p - self.center;
        let t = d.y.atan2(d.x);
        self.modes
            .iter()
            .map(|m| {
                let (s, c) = (m.k as f64 * t).sin_cos();
                m.cos * c + m.sin * s
            })
            .sum()
    }
}

/// Discrete Neumann data: the load vector `F_i = int g phi_i` on the boundary.
#[derive(Debug, Clone)]
pub struct NeumannData {
    pub load: Vec<C64>,
    /// `|int g|` before projection.
    pub defect: f64,
    /// `||g||_{L^2(dOmega)}` after projection.
    pub l2_norm: f64,
}

impl NeumannData {
    /// Load vector of `g` by two-point Gauss quadrature on boundary edges.
    /// With `project`, the constant part is removed so that `sum F_i = 0`.
    pub fn from_fn<G: Fn(&Vec2) -> C64>(mesh: &Mesh, g: G, project: bool) -> Self {
        let n = mesh.num_nodes();
        let mut load = alloc::vec![C64::new(0.0, 0.0); n];
        let mut bmass = alloc::vec![0.0; n];
        let gp = 0.5 / 3f64.sqrt();
        let mut l2 = 0.0;
        let mut l2_mean = C64::new(0.0, 0.0);
        let mut total_len = 0.0;
        let mut samples = Vec::with_capacity(mesh.boundary_edges.len());
        for e in &mesh.boundary_edges {
            let (a, b) = (mesh.nodes[e[0]], mesh.nodes[e[1]]);
            let len = (b - a).norm();
            let mut pair = [C64::new(0.0, 0.0); 2];
            for (q, s) in [(0, 0.5 - gp), (1, 0.5 + gp)] {
                let x = a + (b - a) * s;
                let v = g(&x);
                pair[q] = v;
                load[e[0]] += v * ((1.0 - s) * 0.5 * len);
                load[e[1]] += v * (s * 0.5 * len);
                l2_mean += v * (0.5 * len);
            }
            samples.push((len, pair));
            bmass[e[0]] += 0.5 * len;
            bmass[e[1]] += 0.5 * len;
            total_len += len;
        }
        let total: C64 = load.iter().sum();
        let defect = total.norm();
        let shift = if project { l2_mean / total_len } else { C64::new(0.0, 0.0) };
        if project {
            for (f, m) in load.iter_mut().zip(&bmass) {
                *f -= total * (m / total_len);
            }
        }
        for (len, pair) in samples {
            for v in pair {
                l2 += (v - shift).norm_sqr() * 0.5 * len;
            }
        }
        NeumannData {
            load,
            defect,
            l2_norm: l2.sqrt(),
        }
    }

    pub fn zero(mesh: &Mesh) -> Self {
        NeumannData {
            load: alloc::vec![C64::new(0.0, 0.0); mesh.num_nodes()],
            defect: 0.0,
            l2_norm: 0.0,
        }
    }
}

/// Solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    pub dofs: usize,
    pub envelope: usize,
    pub min_pivot_ratio: f64,
    /// `||K u + C lambda - F|| / ||F||` (absolute when `F = 0`).
    pub weak_residual: f64,
    /// `|int u|`.
    pub mean_abs: f64,
    pub compat_defect: f64,
}

/// A discrete solution together with the data that produced it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Arc<Mesh>,
    /// Per-element laws used in the solve.
    pub laws: Arc<Vec<Law>>,
    pub u: Vec<C64>,
    pub multiplier: C64,
    pub load: Vec<C64>,
    pub diagnostics: SolveDiagnostics,
}

impl Solution {
    /// Wrap nodal values that did not come from a solve, with unit isotropic
    /// laws and zero load. Used for closed-form fields.
    pub fn from_nodal(mesh: Arc<Mesh>, u: Vec<C64>) -> Self {
        assert_eq!(u.len(), mesh.num_nodes(), "one value per node");
        let laws = Arc::new(alloc::vec![Law::isotropic(1.0, 0.0, 0.0); mesh.num_elements()]);
        let load = alloc::vec![C64::new(0.0, 0.0); u.len()];
        let mean_abs = integral(&mesh, &u).norm();
        Solution {
            mesh,
            laws,
            u,
            multiplier: C64::new(0.0, 0.0),
            load,
            diagnostics: SolveDiagnostics {
                dofs: 0,
                envelope: 0,
                min_pivot_ratio: 1.0,
                weak_residual: 0.0,
                mean_abs,
                compat_defect: 0.0,
            },
        }
    }

    /// Constant gradient on element `e`.
    pub fn grad(&self, e: usize) -> CVec2 {
        let g = self.mesh.hat_gradients(e);
        let t = self.mesh.tris[e];
        let mut out = CVec2::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for k in 0..3 {
            out[0] += self.u[t[k]] * g[k].x;
            out[1] += self.u[t[k]] * g[k].y;
        }
        out
    }

    pub fn value_in(&self, e: usize, b: &[f64; 3]) -> C64 {
        let t = self.mesh.tris[e];
        self.u[t[0]] * b[0] + self.u[t[1]] * b[1] + self.u[t[2]] * b[2]
    }

    pub fn value_at(&self, p: &Vec2) -> Option<C64> {
        self.mesh.locate(p).map(|(e, b)| self.value_in(e, &b))
    }

    /// Value at `p` given an element known to contain it.
    pub fn value_at_in(&self, e: usize, p: &Vec2) -> C64 {
        self.value_in(e, &barycentric(&self.mesh.triangle(e), p))
    }

    /// `int_T |u|^2` for element `e` (exact for P1).
    pub fn element_l2_sq(&self, e: usize) -> f64 {
        let t = self.mesh.tris[e];
        let s: f64 = t.iter().map(|i| self.u[*i].norm_sqr()).sum();
        let m = (self.u[t[0]] + self.u[t[1]] + self.u[t[2]]).norm_sqr();
        self.mesh.area(e) / 12.0 * (s + m)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        (0..self.mesh.num_elements()).map(|e| self.element_l2_sq(e)).sum()
    }

    /// `int |grad u|^2` over the elements selected by `filter`.
    pub fn grad_energy<F: Fn(usize) -> bool>(&self, filter: F) -> f64 {
        (0..self.mesh.num_elements())
            .filter(|e| filter(*e))
            .map(|e| {
                let g = self.grad(e);
                self.mesh.area(e) * (g[0].norm_sqr() + g[1].norm_sqr())
            })
            .sum()
    }

    pub fn mean(&self) -> C64 {
        integral(&self.mesh, &self.u)
    }
}

/// `L^2` norm over the interface of the jump of the normal current
/// `I(grad u) . nu` between the two phases. Zero for the exact solution, it
/// measures how well the discrete flux satisfies the transmission condition.
pub fn interface_flux_jump(u: &Solution) -> f64 {
    let mesh = &u.mesh;
    let mut s = 0.0;
    for ie in &mesh.interface_edges {
        let (a, b) = (mesh.nodes[ie.nodes[0]], mesh.nodes[ie.nodes[1]]);
        let t = b - a;
        let len = t.norm();
        let nu = Vec2::new(t.y, -t.x) / len;
        let flux = |e: usize| {
            let j = u.laws[e].ohm_apply(&u.grad(e));
            j[0] * nu.x + j[1] * nu.y
        };
        s += len * (flux(ie.plus) - flux(ie.minus)).norm_sqr();
    }
    s.sqrt()
}

/// `int_Omega u` for nodal P1 values.
pub fn integral(mesh: &Mesh, u: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for (e, t) in mesh.tris.iter().enumerate() {
        s += (u[t[0]] + u[t[1]] + u[t[2]]) * (mesh.area(e) / 3.0);
    }
    s
}

/// Background law at each element centroid.
pub fn background_laws(mesh: &Mesh, coeffs: &Coefficients) -> Vec<Law> {
    (0..mesh.num_elements())
        .map(|e| coeffs.background_law(mesh.side[e], &mesh.centroid(e)))
        .collect()
}

/// Perturbed law at each element centroid.
pub fn perturbed_laws(mesh: &Mesh, coeffs: &Coefficients) -> Vec<Law> {
    (0..mesh.num_elements())
        .map(|e| coeffs.perturbed_law(mesh.side[e], mesh.in_d[e], &mesh.centroid(e)))
        .collect()
}

/// Assembled and factored operator; solves for any number of data sets.
#[derive(Debug, Clone)]
pub struct Operator {
    mesh: Arc<Mesh>,
    laws: Arc<Vec<Law>>,
    has_lower: bool,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// 2x2 blocks `[re-re, re-im, im-re, im-im]`.
    blocks: Vec<[f64; 4]>,
    /// `c_i = int phi_i`.
    c: Vec<f64>,
    rank: Vec<usize>,
    last: usize,
    lu: ProfileMatrix,
    stats: FactorStats,
}

impl Operator {
    pub fn new(mesh: Arc<Mesh>, laws: Vec<Law>, lower: Option<LowerOrderTerms>) -> Result<Self> {
        let n = mesh.num_nodes();
        if laws.len() != mesh.num_elements() {
            return Err(Error::input("one law per element is required"));
        }
        let mut adj: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for t in &mesh.tris {
            for &a in t {
                for &b in t {
                    adj[a].push(b);
                }
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for a in &adj {
            cols.extend_from_slice(a);
            row_ptr.push(cols.len());
        }
        let mut blocks = alloc::vec![[0.0; 4]; cols.len()];
        let mut c = alloc::vec![0.0; n];
        let find = |row_ptr: &[usize], cols: &[usize], a: usize, b: usize| -> usize {
            let s = &cols[row_ptr[a]..row_ptr[a + 1]];
            row_ptr[a] + s.binary_search(&b).expect("pattern entry")
        };
        for (e, t) in mesh.tris.iter().enumerate() {
            let g = mesh.hat_gradients(e);
            let area = mesh.area(e);
            let law = &laws[e];
            let saa = law.sigma + law.zeta;
            let sab = -law.epsilon;
            let sba = law.epsilon;
            let sbb = law.sigma - law.zeta;
            for i in 0..3 {
                c[t[i]] += area / 3.0;
                for j in 0..3 {
                    let q = |s: &crate::Mat2| area * g[i].dot(&(s * g[j]));
                    let mut blk = [q(&saa), q(&sab), q(&sba), q(&sbb)];
                    if let Some(lo) = &lower {
                        let wg = lo.w[0] * g[j].x + lo.w[1] * g[j].y;
                        let m = if i == j { area / 6.0 } else { area / 12.0 };
                        let cc = -(wg * (area / 3.0)) - lo.v * m;
                        blk[0] += cc.re;
                        blk[1] -= cc.im;
                        blk[2] += cc.im;
                        blk[3] += cc.re;
                    }
                    let k = find(&row_ptr, &cols, t[i], t[j]);
                    for (d, s) in blocks[k].iter_mut().zip(blk) {
                        *d += s;
                    }
                }
            }
        }

        let order = reverse_cuthill_mckee(&adj);
        let mut rank = alloc::vec![0; n];
        for (r, v) in order.iter().enumerate() {
            rank[*v] = r;
        }
        let last = order[n - 1];
        let size = 2 * n + 2;
        let pos = |node: usize, comp: usize| -> usize {
            if node == last {
                2 * n + comp
            } else {
                2 * rank[node] + comp
            }
        };
        let mult = |comp: usize| 2 * (n - 1) + comp;
        let mut first: Vec<usize> = (0..size).collect();
        let mut touch = |i: usize, j: usize| {
            let (lo, hi) = (i.min(j), i.max(j));
            if first[hi] > lo {
                first[hi] = lo;
            }
        };
        for a in 0..n {
            for &b in &cols[row_ptr[a]..row_ptr[a + 1]] {
                for ca in 0..2 {
                    for cb in 0..2 {
                        touch(pos(a, ca), pos(b, cb));
                    }
                }
            }
            for comp in 0..2 {
                touch(mult(comp), pos(a, comp));
            }
        }
        let mut lu = ProfileMatrix::new(first);
        for a in 0..n {
            for k in row_ptr[a]..row_ptr[a + 1] {
                let b = cols[k];
                let blk = blocks[k];
                lu.add(pos(a, 0), pos(b, 0), blk[0]);
                lu.add(pos(a, 0), pos(b, 1), blk[1]);
                lu.add(pos(a, 1), pos(b, 0), blk[2]);
                lu.add(pos(a, 1), pos(b, 1), blk[3]);
            }
            for comp in 0..2 {
                lu.add(pos(a, comp), mult(comp), c[a]);
                lu.add(mult(comp), pos(a, comp), c[a]);
            }
        }
        let stats = lu.factor()?;
        Ok(Operator {
            mesh,
            laws: Arc::new(laws),
            has_lower: lower.is_some(),
            row_ptr,
            cols,
            blocks,
            c,
            rank,
            last,
            lu,
            stats,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn laws(&self) -> &Arc<Vec<Law>> {
        &self.laws
    }

    pub fn factor_stats(&self) -> FactorStats {
        self.stats
    }

    fn pos(&self, node: usize, comp: usize) -> usize {
        let n = self.mesh.num_nodes();
        if node == self.last {
            2 * n + comp
        } else {
            2 * self.rank[node] + comp
        }
    }

    /// `K u + C lambda`, as complex nodal values.
    pub fn apply(&self, u: &[C64], lambda: C64) -> Vec<C64> {
        let n = self.mesh.num_nodes();
        let mut out = alloc::vec![C64::new(0.0, 0.0); n];
        for a in 0..n {
            let (mut re, mut im) = (lambda.re * self.c[a], lambda.im * self.c[a]);
            for k in self.row_ptr[a]..self.row_ptr[a + 1] {
                let b = self.cols[k];
                let blk = &self.blocks[k];
                re += blk[0] * u[b].re + blk[1] * u[b].im;
                im += blk[2] * u[b].re + blk[3] * u[b].im;
            }
            out[a] = C64::new(re, im);
        }
        out
    }

    pub fn solve(&self, data: &NeumannData) -> Result<Solution> {
        let n = self.mesh.num_nodes();
        if data.load.len() != n {
            return Err(Error::input("load vector does not match the mesh"));
        }
        let total: C64 = data.load.iter().sum();
        let scale: f64 = data.load.iter().map(|f| f.norm()).sum();
        if !self.has_lower && total.norm() > 1e-10 * scale.max(1e-300) && total.norm() > 1e-14 {
            return Err(Error::input(alloc::format!(
                "Neumann data is incompatible: |int g| = {:e}",
                total.norm()
            )));
        }
        let mut b = alloc::vec![0.0; 2 * n + 2];
        for (i, f) in data.load.iter().enumerate() {
            b[self.pos(i, 0)] = f.re;
            b[self.pos(i, 1)] = f.im;
        }
        self.lu.solve(&mut b);
        let u: Vec<C64> = (0..n).map(|i| C64::new(b[self.pos(i, 0)], b[self.pos(i, 1)])).collect();
        let multiplier = C64::new(b[2 * (n - 1)], b[2 * (n - 1) + 1]);
        let r = self.apply(&u, multiplier);
        let res: f64 = r.iter().zip(&data.load).map(|(a, f)| (a - f).norm_sqr()).sum::<f64>().sqrt();
        let fnorm: f64 = data.load.iter().map(|f| f.norm_sqr()).sum::<f64>().sqrt();
        let weak_residual = if fnorm > 0.0 { res / fnorm } else { res };
        let mean_abs = integral(&self.mesh, &u).norm();
        Ok(Solution {
            mesh: self.mesh.clone(),
            laws: self.laws.clone(),
            u,
            multiplier,
            load: data.load.clone(),
            diagnostics: SolveDiagnostics {
                dofs: 2 * n + 2,
                envelope: self.stats.envelope,
                min_pivot_ratio: self.stats.min_pivot_ratio,
                weak_residual,
                mean_abs,
                compat_defect: data.defect,
            },
        })
    }
}

/// Solve the unperturbed problem.
pub fn solve_background(mesh: &Arc<Mesh>, coeffs: &Coefficients, data: &NeumannData) -> Result<Solution> {
    Operator::new(mesh.clone(), background_laws(mesh, coeffs), coeffs.lower)?.solve(data)
}

/// Solve the problem with the inclusion law inside `D`.
pub fn solve_perturbed(mesh: &Arc<Mesh>, coeffs: &Coefficients, data: &NeumannData) -> Result<Solution> {
    Operator::new(mesh.clone(), perturbed_laws(mesh, coeffs), coeffs.lower)?.solve(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{BackgroundTensor, TensorField};
    use crate::geometry::{Scene, Shape};
    use approx::assert_relative_eq;

    fn disk_mesh(h: f64) -> Arc<Mesh> {
        let s = Scene::homogeneous(Shape::disk(Vec2::zeros(), 1.0), None, 0.5, 0.05).unwrap();
        Arc::new(Mesh::build(&s, &MeshOptions::new(h)).unwrap())
    }

    fn identity() -> Coefficients {
        Coefficients::background_only(BackgroundTensor::real_uniform(TensorField::scalar(1.0), 0.5))
    }

    #[test]
    fn dipole_on_unit_disk() {
        let mesh = disk_mesh(0.05);
        let g = FourierData::cos_mode(1);
        let data = NeumannData::from_fn(&mesh, |p| g.eval(p), true);
        let sol = solve_background(&mesh, &identity(), &data).unwrap();
        let err = mesh
            .nodes
            .iter()
            .zip(&sol.u)
            .map(|(p, u)| (u - C64::new(p.x, 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "max nodal error {err}");
        assert!(sol.diagnostics.weak_residual < 1e-10);
        assert!(sol.diagnostics.mean_abs < 1e-12);
        assert!(sol.multiplier.norm() < 1e-10);
    }

    #[test]
    fn zero_data_zero_solution() {
        let mesh = disk_mesh(0.1);
        let sol = solve_background(&mesh, &identity(), &NeumannData::zero(&mesh)).unwrap();
        assert!(sol.u.iter().all(|u| u.norm() == 0.0));
    }

    #[test]
    fn incompatible_data_rejected() {
        let mesh = disk_mesh(0.1);
        let data = NeumannData::from_fn(&mesh, |_| C64::new(1.0, 0.0), false);
        assert!(data.defect > 6.0);
        let r = solve_background(&mesh, &identity(), &data);
        assert!(matches!(r, Err(Error::Input(_))));
        let projected = NeumannData::from_fn(&mesh, |_| C64::new(1.0, 0.0), true);
        let s: C64 = projected.load.iter().sum();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn complex_background_is_complex_linear() {
        let mesh = disk_mesh(0.1);
        let mut bg = BackgroundTensor::real_uniform(TensorField::diag(1.5, 0.8), 0.5);
        bg.gamma = 0.1;
        let coeffs = Coefficients::background_only(bg);
        let g = FourierData::cos_mode(2);
        let d1 = NeumannData::from_fn(&mesh, |p| g.eval(p), true);
        let di = NeumannData::from_fn(&mesh, |p| g.eval(p) * C64::new(0.0, 1.0), true);
        let op = Operator::new(mesh.clone(), background_laws(&mesh, &coeffs), None).unwrap();
        let s1 = op.solve(&d1).unwrap();
        let si = op.solve(&di).unwrap();
        for (a, b) in s1.u.iter().zip(&si.u) {
            assert_relative_eq!((a * C64::new(0.0, 1.0) - b).norm(), 0.0, epsilon = 1e-10);
        }
    }
}
