//! Envelope (skyline) LU factorization without pivoting, and reverse
//! Cuthill-McKee ordering.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Square matrix stored inside a symmetric envelope: row `k` of `L` and
/// column `k` of `U` span indices `first[k]..k`.
#[derive(Debug, Clone)]
pub struct ProfileMatrix {
    n: usize,
    first: Vec<usize>,
    lptr: Vec<usize>,
    uptr: Vec<usize>,
    l: Vec<f64>,
    u: Vec<f64>,
    diag: Vec<f64>,
    row_scale: Vec<f64>,
    factored: bool,
}

/// Pivot statistics of a factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorStats {
    pub size: usize,
    pub envelope: usize,
    /// Smallest `|pivot| / max |row entry|` seen during elimination.
    pub min_pivot_ratio: f64,
}

impl ProfileMatrix {
    /// Zero matrix with envelope starts `first[k] <= k`.
    pub fn new(first: Vec<usize>) -> Self {
        let n = first.len();
        let mut lptr = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for (k, f) in first.iter().enumerate() {
            debug_assert!(*f <= k);
            lptr.push(acc);
            acc += k - f;
        }
        lptr.push(acc);
        ProfileMatrix {
            n,
            uptr: lptr.clone(),
            l: alloc::vec![0.0; acc],
            u: alloc::vec![0.0; acc],
            lptr,
            first,
            diag: alloc::vec![0.0; n],
            row_scale: alloc::vec![0.0; n],
            factored: false,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn envelope(&self) -> usize {
        self.l.len()
    }

    /// Add `v` to entry `(i, j)`, which must lie in the envelope.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(!self.factored);
        self.row_scale[i] = self.row_scale[i].max(v.abs());
        if i == j {
            self.diag[i] += v;
        } else if j < i {
            debug_assert!(j >= self.first[i]);
            self.l[self.lptr[i] + j - self.first[i]] += v;
        } else {
            debug_assert!(i >= self.first[j]);
            self.u[self.uptr[j] + i - self.first[j]] += v;
        }
    }

    /// In-place `A = L U` with unit lower `L`.
    pub fn factor(&mut self) -> Result<FactorStats> {
        let mut min_ratio = f64::INFINITY;
        for k in 0..self.n {
            let fk = self.first[k];
            let (lk, uk) = (self.lptr[k], self.uptr[k]);
            for j in fk..k {
                let fj = self.first[j];
                let m = fk.max(fj);
                let (lj, uj) = (self.lptr[j], self.uptr[j]);
                let s = self.u[uk + j - fk] - dot(&self.l[lj + m - fj..lj + j - fj], &self.u[uk + m - fk..uk + j - fk]);
                self.u[uk + j - fk] = s;
                let t = self.l[lk + j - fk] - dot(&self.l[lk + m - fk..lk + j - fk], &self.u[uj + m - fj..uj + j - fj]);
                self.l[lk + j - fk] = t / self.diag[j];
            }
            let d = self.diag[k] - dot(&self.l[lk..lk + k - fk], &self.u[uk..uk + k - fk]);
            self.diag[k] = d;
            let scale = self.row_scale[k].max(f64::MIN_POSITIVE);
            let ratio = d.abs() / scale;
            if !(ratio.is_finite() && ratio > 1e-13) {
                return Err(Error::Solver {
                    reason: alloc::format!("zero pivot at row {k} of {}", self.n),
                    condition_estimate: if ratio > 0.0 { 1.0 / ratio } else { f64::INFINITY },
                });
            }
            min_ratio = min_ratio.min(ratio);
        }
        self.factored = true;
        Ok(FactorStats {
            size: self.n,
            envelope: self.envelope(),
            min_pivot_ratio: min_ratio,
        })
    }

    /// Solve `A x = b` in place using the factorization.
    pub fn solve(&self, b: &mut [f64]) {
        debug_assert!(self.factored);
        for k in 0..self.n {
            let fk = self.first[k];
            let lk = self.lptr[k];
            b[k] -= dot(&self.l[lk..lk + k - fk], &b[fk..k]);
        }
        for k in (0..self.n).rev() {
            b[k] /= self.diag[k];
            let xk = b[k];
            let fk = self.first[k];
            let uk = self.uptr[k];
            for (bi, ui) in b[fk..k].iter_mut().zip(&self.u[uk..uk + k - fk]) {
                *bi -= ui * xk;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// Reverse Cuthill-McKee order of a graph given by adjacency lists.
/// Returns `order[rank] = vertex`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = alloc::vec![false; n];
    while order.len() < n {
        let start = (0..n)
            .filter(|v| !seen[*v])
            .min_by_key(|v| adj[*v].len())
            .expect("unvisited vertex");
        let start = peripheral(adj, start);
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|w| !seen[*w]).collect();
            next.sort_by_key(|w| (adj[*w].len(), *w));
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Pseudo-peripheral vertex in the component of `start`.
fn peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut v = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_far(adj, v);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        v = far;
    }
    v
}

fn bfs_far(adj: &[Vec<usize>], start: usize) -> (usize, usize) {
    let mut level = alloc::vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let depth = level[last];
    // Among the deepest vertices take the one of least degree.
    let best = (0..adj.len())
        .filter(|v| level[*v] == depth)
        .min_by_key(|v| adj[*v].len())
        .unwrap_or(last);
    (best, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factor_matches_dense_solve() {
        let n = 40;
        let band = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        let first: Vec<usize> = (0..n).map(|k| k.saturating_sub(band)).collect();
        let mut pm = ProfileMatrix::new(first.clone());
        for i in 0..n {
            for j in 0..n {
                if i.max(j) - i.min(j) <= band {
                    let v = if i == j { 10.0 } else { rng.random_range(-1.0..1.0) };
                    dense[(i, j)] = v;
                    pm.add(i, j, v);
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let exact = dense.clone().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        pm.factor().unwrap();
        let mut x = b;
        pm.solve(&mut x);
        for i in 0..n {
            assert_relative_eq!(x[i], exact[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_leading_minor_reported() {
        let mut pm = ProfileMatrix::new(alloc::vec![0, 0]);
        pm.add(0, 1, 1.0);
        pm.add(1, 0, 1.0);
        assert!(matches!(pm.factor(), Err(Error::Solver { .. })));
    }

    #[test]
    fn rcm_is_permutation_and_narrows_path() {
        // A path graph numbered badly.
        let n = 50;
        let label = |i: usize| (i * 17) % n;
        let mut adj = alloc::vec![Vec::new(); n];
        for i in 0..n - 1 {
            adj[label(i)].push(label(i + 1));
            adj[label(i + 1)].push(label(i));
        }
        let order = reverse_cuthill_mckee(&adj);
        let mut rank = alloc::vec![0; n];
        for (r, v) in order.iter().enumerate() {
            rank[*v] = r;
        }
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        for v in 0..n {
            for &w in &adj[v] {
                assert!(rank[v].abs_diff(rank[w]) <= 1);
            }
        }
    }
}
