use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::ball::{ball_l2_sq, ThreeBallOptions};
use super::masked_integral;
use crate::geometry::{Scene, SignedDistance};
use crate::solver::Solution;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub balls: ThreeBallOptions,
    /// Cap on the number of cube representatives that get a chain; `None`
    /// builds all of them. Representatives are taken at a uniform stride.
    pub max_targets: Option<usize>,
    /// Spacing of the path-finding grid in units of `r1`.
    pub grid_factor: f64,
    /// Subdivision level of the direct `L^2(D)` integral.
    pub level: usize,
}

impl ChainOptions {
    pub fn new(balls: ThreeBallOptions) -> Self {
        ChainOptions {
            balls,
            max_targets: Some(64),
            grid_factor: 1.0,
            level: 4,
        }
    }
}

/// One chain of balls from the start point to a cube representative.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub target: Vec2,
    /// `c(t_0), ..., c(t_N)`.
    pub centers: Vec<Vec2>,
    /// `m_k = ||u||_{B_r1(c_k)} / ||u||_Omega`.
    pub m: Vec<f64>,
    /// `C^((1 - tau^N) / (1 - tau)) m_0^(tau^N)`.
    pub bound: f64,
    pub holds: bool,
}

impl Chain {
    pub fn n(&self) -> usize {
        self.centers.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainCertificate {
    /// `(r1, r2, r3) = (h / 30, h / 10, h / 2)`.
    pub radii: [f64; 3],
    pub tau: f64,
    /// Largest fitted three-ball constant over every link of every chain.
    pub constant: f64,
    pub chains: Vec<Chain>,
    pub n_max: usize,
    /// `|Omega| / (pi r1^2)`, the packing bound on `N`.
    pub n_bound: f64,
    /// Balls `B_r1` of each chain are pairwise disjoint (the terminal pair excepted).
    pub disjoint: bool,
    /// `B_r1(c_{k+1})` lies in `B_r2(c_k)` for every link.
    pub nested: bool,
    /// Steps before the terminal one have length exactly `2 r1`.
    pub steps_exact: bool,
    /// Every chain satisfies its bound.
    pub certified: bool,
    /// Number of cubes of side `sqrt(2) r1` meeting `D`.
    pub targets_total: usize,
    pub d_norm_sq: f64,
    pub omega_norm_sq: f64,
    /// `||u||^2` on the start ball `B_r1(x0)`.
    pub start_norm_sq: f64,
    /// `delta = tau^(n_max)`.
    pub delta: f64,
    /// `J max(C, 1)^(2 / (1 - tau)) start^delta omega^(1 - delta)`.
    pub d_bound_sq: f64,
    pub d_holds: bool,
    /// Whether `r / 2 > h`, which the propagation theorem itself assumes.
    pub theorem_radius_ok: bool,
}

const REL: f64 = 1e-9;

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// Shortest paths on a grid restricted to the admissible set, rooted at the start.
struct PathGrid {
    origin: Vec2,
    step: f64,
    nx: usize,
    ny: usize,
    ok: Vec<bool>,
    prev: Vec<usize>,
    dist: Vec<f64>,
}

impl PathGrid {
    fn point(&self, k: usize) -> Vec2 {
        self.origin + Vec2::new((k % self.nx) as f64, (k / self.nx) as f64) * self.step
    }

    /// Admissible grid node closest to `p` with an admissible segment to it.
    fn attach<A: Fn(&Vec2, &Vec2) -> bool>(&self, p: &Vec2, seg_ok: &A) -> Option<usize> {
        let i0 = ((p.x - self.origin.x) / self.step).round() as isize;
        let j0 = ((p.y - self.origin.y) / self.step).round() as isize;
        let mut best: Option<(f64, usize)> = None;
        for rad in 0..4isize {
            for dj in -rad..=rad {
                for di in -rad..=rad {
                    let (i, j) = (i0 + di, j0 + dj);
                    if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                        continue;
                    }
                    let k = j as usize * self.nx + i as usize;
                    if !self.ok[k] {
                        continue;
                    }
                    let q = self.point(k);
                    let d = (q - p).norm();
                    if best.is_none_or(|(bd, _)| d < bd) && seg_ok(p, &q) {
                        best = Some((d, k));
                    }
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(_, k)| k)
    }
}

fn build_grid<F, A>(x0: &Vec2, lo: Vec2, hi: Vec2, step: f64, allowed: &F, seg_ok: &A) -> Result<PathGrid>
where
    F: Fn(&Vec2) -> bool,
    A: Fn(&Vec2, &Vec2) -> bool,
{
    let nx = (((hi.x - lo.x) / step).ceil() as usize + 1).max(2);
    let ny = (((hi.y - lo.y) / step).ceil() as usize + 1).max(2);
    let mut g = PathGrid {
        origin: lo,
        step,
        nx,
        ny,
        ok: Vec::new(),
        prev: alloc::vec![usize::MAX; nx * ny],
        dist: alloc::vec![f64::INFINITY; nx * ny],
    };
    g.ok = (0..nx * ny).map(|k| allowed(&g.point(k))).collect();
    let start = g
        .attach(x0, seg_ok)
        .ok_or_else(|| Error::Geometry("start point cannot reach the path grid".into()))?;
    g.dist[start] = (g.point(start) - x0).norm();
    let mut heap = BinaryHeap::new();
    heap.push(Item(g.dist[start], start));
    while let Some(Item(d, k)) = heap.pop() {
        if d > g.dist[k] {
            continue;
        }
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                continue;
            }
            let n = b as usize * nx + a as usize;
            if !g.ok[n] {
                continue;
            }
            let (p, q) = (g.point(k), g.point(n));
            if !allowed(&((p + q) * 0.5)) {
                continue;
            }
            let nd = d + (q - p).norm();
            if nd < g.dist[n] {
                g.dist[n] = nd;
                g.prev[n] = k;
                heap.push(Item(nd, n));
            }
        }
    }
    Ok(g)
}

/// Drop intermediate vertices while the shortcut stays admissible.
fn pull_string<A: Fn(&Vec2, &Vec2) -> bool>(path: Vec<Vec2>, seg_ok: &A) -> Vec<Vec2> {
    if path.len() <= 2 {
        return path;
    }
    let mut out = alloc::vec![path[0]];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = path.len() - 1;
        while j > i + 1 && !seg_ok(&path[i], &path[j]) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Centers `c(t_k)` with `t_{k+1} = max{t : |c(t) - c(t_k)| = 2 r1}` on a
/// polyline from `x0` to `y`.
fn chain_centers(curve: &[Vec2], r1: f64, max_steps: usize) -> Result<Vec<Vec2>> {
    let y = *curve.last().expect("curve has an end point");
    let step = 2.0 * r1;
    let mut centers = alloc::vec![curve[0]];
    loop {
        let c = *centers.last().unwrap();
        if (y - c).norm() <= step {
            centers.push(y);
            return Ok(centers);
        }
        if centers.len() > max_steps {
            return Err(Error::Geometry(format!("chain exceeded {max_steps} steps")));
        }
        let mut next = None;
        for i in (0..curve.len() - 1).rev() {
            let (p, d) = (curve[i], curve[i + 1] - curve[i]);
            let (a, b, cc) = (d.norm_squared(), 2.0 * d.dot(&(p - c)), (p - c).norm_squared() - step * step);
            if a == 0.0 {
                continue;
            }
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                continue;
            }
            let s = (-b + disc.sqrt()) / (2.0 * a);
            let s = if s <= 1.0 { s } else { (-b - disc.sqrt()) / (2.0 * a) };
            if (0.0..=1.0).contains(&s) {
                let q = p + d * s;
                // Project back onto the sphere to remove round-off in s.
                next = Some(c + (q - c) * (step / (q - c).norm()));
                break;
            }
        }
        centers.push(next.ok_or_else(|| Error::Geometry("curve never reaches distance 2 r1".into()))?);
    }
}

fn key(p: &Vec2, r: usize) -> (u64, u64, usize) {
    (p.x.to_bits(), p.y.to_bits(), r)
}

/// Chain-of-balls propagation of smallness from `B_r(x0)` to `D`, with
/// `dist(D, boundary) >= h`.
///
/// Representatives `w_j` are the centres of the cubes of side `sqrt(2) r1`
/// meeting `D`; they are joined to `x0` by straight segments when possible and
/// by shortest grid paths otherwise, always inside
/// `{dist(., D) < r1} cap {dist(., boundary) > h / 2}`.
pub fn propagate_chain<S: SignedDistance>(
    u: &Solution,
    scene: &Scene,
    d: &S,
    x0: &Vec2,
    r: f64,
    h: f64,
    opts: &ChainOptions,
) -> Result<ChainCertificate> {
    if !(h > 0.0 && r > 0.0) {
        return Err(Error::input("chain needs h > 0 and r > 0"));
    }
    if d.signed_distance(x0) > -r * (1.0 - 1e-12) {
        return Err(Error::input(format!(
            "B_r(x0) with r = {r} is not contained in D (depth {:.4})",
            -d.signed_distance(x0)
        )));
    }
    let (r3, r2, r1) = (h / 2.0, h / 10.0, h / 30.0);
    let tau = opts.balls.rule_tau(r1, r2, r3)?;
    let allowed = |p: &Vec2| d.signed_distance(p) < r1 && scene.outer.signed_distance(p) < -r3;
    let seg_ok = |a: &Vec2, b: &Vec2| {
        let n = ((b - a).norm() / (0.25 * r1)).ceil() as usize + 1;
        (0..=n).all(|k| allowed(&(a + (b - a) * (k as f64 / n as f64))))
    };

    // Cube cover of D.
    let side = core::f64::consts::SQRT_2 * r1;
    let bb = d.sd_bbox();
    let nx = (bb.width() / side).ceil() as usize + 1;
    let ny = (bb.height() / side).ceil() as usize + 1;
    let mut targets = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = bb.min + Vec2::new((i as f64 + 0.5) * side, (j as f64 + 0.5) * side);
            if d.signed_distance(&c) < r1 {
                targets.push(c);
            }
        }
    }
    let targets_total = targets.len();
    if let Some(m) = opts.max_targets {
        if m > 0 && targets.len() > m {
            let stride = targets.len() as f64 / m as f64;
            targets = (0..m).map(|k| targets[(k as f64 * stride) as usize]).collect();
        }
    }
    if let Some(w) = targets.iter().find(|w| !allowed(w)) {
        return Err(Error::Geometry(format!(
            "representative ({:.4}, {:.4}) is within h/2 of the boundary; the chain would leave Omega_(h/2)",
            w.x, w.y
        )));
    }

    let omega_area = u.mesh.total_area();
    let n_bound = omega_area / (core::f64::consts::PI * r1 * r1);
    let max_steps = 4 * n_bound.ceil() as usize + 16;
    let mut grid: Option<PathGrid> = None;
    let mut norms: BTreeMap<(u64, u64, usize), f64> = BTreeMap::new();
    let radii = [r1, r2, r3];
    let quad = opts.balls.quadrature;
    let mut norm_at = |c: &Vec2, ri: usize| -> Result<f64> {
        if let Some(v) = norms.get(&key(c, ri)) {
            return Ok(*v);
        }
        let v = ball_l2_sq(u, c, radii[ri], &quad)?;
        norms.insert(key(c, ri), v);
        Ok(v)
    };

    let omega_norm_sq = u.l2_norm_sq();
    let omega = omega_norm_sq.sqrt();
    let mut constant: f64 = 0.0;
    let mut raw = Vec::with_capacity(targets.len());
    let (mut disjoint, mut nested, mut steps_exact) = (true, true, true);
    for w in &targets {
        let curve = if seg_ok(x0, w) {
            alloc::vec![*x0, *w]
        } else {
            if grid.is_none() {
                let pad = 2.0 * r1;
                let lo = bb.min - Vec2::new(pad, pad);
                let hi = bb.max + Vec2::new(pad, pad);
                grid = Some(build_grid(x0, lo, hi, opts.grid_factor * r1, &allowed, &seg_ok)?);
            }
            let g = grid.as_ref().unwrap();
            let end = g
                .attach(w, &seg_ok)
                .ok_or_else(|| Error::Geometry(format!("target ({:.4}, {:.4}) cannot reach the path grid", w.x, w.y)))?;
            if !g.dist[end].is_finite() {
                return Err(Error::Geometry(format!(
                    "target ({:.4}, {:.4}) is not connected to the start inside the admissible set",
                    w.x, w.y
                )));
            }
            let mut path = alloc::vec![*w];
            let mut k = end;
            loop {
                path.push(g.point(k));
                if g.prev[k] == usize::MAX {
                    break;
                }
                k = g.prev[k];
            }
            path.push(*x0);
            path.reverse();
            pull_string(path, &seg_ok)
        };
        let centers = chain_centers(&curve, r1, max_steps)?;
        let n = centers.len() - 1;
        for k in 0..n {
            let len = (centers[k + 1] - centers[k]).norm();
            if k + 1 < n && (len - 2.0 * r1).abs() > REL * r1 {
                steps_exact = false;
            }
            if len + r1 > r2 * (1.0 + REL) {
                nested = false;
            }
            for j in 0..k {
                if (centers[k] - centers[j]).norm() < 2.0 * r1 * (1.0 - REL) {
                    disjoint = false;
                }
            }
        }
        for j in 0..n.saturating_sub(1) {
            if (centers[n] - centers[j]).norm() < 2.0 * r1 * (1.0 - REL) {
                disjoint = false;
            }
        }
        for c in &centers {
            if scene.outer.signed_distance(c) >= -r3 {
                return Err(Error::Geometry(format!(
                    "chain center ({:.4}, {:.4}) leaves Omega_(h/2)",
                    c.x, c.y
                )));
            }
        }
        let mut m = Vec::with_capacity(n + 1);
        for (k, c) in centers.iter().enumerate() {
            let small = norm_at(c, 0)?;
            m.push(small.sqrt() / omega);
            if k < n {
                let mid = norm_at(c, 1)?;
                let big = norm_at(c, 2)?;
                let ck = if mid == 0.0 {
                    0.0
                } else if small == 0.0 {
                    f64::INFINITY
                } else {
                    mid.sqrt() / (small.sqrt().powf(tau) * big.sqrt().powf(1.0 - tau))
                };
                constant = constant.max(ck);
            }
        }
        raw.push((*w, centers, m));
    }

    let mut chains = Vec::with_capacity(raw.len());
    let mut n_max = 0;
    for (target, centers, m) in raw {
        let n = centers.len() - 1;
        n_max = n_max.max(n);
        let tn = tau.powi(n as i32);
        let bound = constant.powf((1.0 - tn) / (1.0 - tau)) * m[0].powf(tn);
        let holds = m[n] <= bound * (1.0 + REL);
        chains.push(Chain {
            target,
            centers,
            m,
            bound,
            holds,
        });
    }
    let certified = chains.iter().all(|c| c.holds);

    let dbb = d.sd_bbox();
    let d_norm_sq = masked_integral(
        &u.mesh,
        opts.level,
        Some(&dbb),
        |p| d.signed_distance(p) < 0.0,
        |e, p| u.value_at_in(e, p).norm_sqr(),
    );
    let start_norm_sq = norm_at(x0, 0)?;
    let delta = tau.powi(n_max as i32);
    let d_bound_sq = targets_total as f64
        * constant.max(1.0).powf(2.0 / (1.0 - tau))
        * start_norm_sq.powf(delta)
        * omega_norm_sq.powf(1.0 - delta);
    Ok(ChainCertificate {
        radii: [r1, r2, r3],
        tau,
        constant,
        chains,
        n_max,
        n_bound,
        disjoint,
        nested,
        steps_exact,
        certified,
        targets_total,
        d_norm_sq,
        omega_norm_sq,
        start_norm_sq,
        delta,
        d_bound_sq,
        d_holds: d_norm_sq <= d_bound_sq * (1.0 + REL),
        theorem_radius_ok: r / 2.0 > h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_chain_has_exact_steps() {
        let r1 = 0.01;
        let curve = [Vec2::zeros(), Vec2::new(0.55, 0.0)];
        let c = chain_centers(&curve, r1, 1000).unwrap();
        // ceil(L / (2 r1)) links.
        assert_eq!(c.len() - 1, 28);
        for k in 0..c.len() - 2 {
            assert!(((c[k + 1] - c[k]).norm() - 2.0 * r1).abs() < 1e-14);
        }
        assert!((c.last().unwrap() - curve[1]).norm() == 0.0);
    }

    #[test]
    fn degenerate_chain() {
        let c = chain_centers(&[Vec2::new(0.2, 0.1), Vec2::new(0.2, 0.1)], 0.01, 10).unwrap();
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn bent_curve_takes_last_crossing() {
        // Out and back: the last crossing of the circle is on the return leg.
        let curve = [
            Vec2::zeros(),
            Vec2::new(0.1, 0.0),
            Vec2::new(0.1, 0.03),
            Vec2::new(0.0, 0.03),
            Vec2::new(0.0, 0.2),
        ];
        let c = chain_centers(&curve, 0.02, 100).unwrap();
        assert!((c[1] - Vec2::new(0.0, 0.04)).norm() < 1e-14);
    }
}
