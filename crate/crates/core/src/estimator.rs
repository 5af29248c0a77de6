//! Inclusion size bounds `C1 |Re dW| / Re W0' <= |D| <= C2 |Re dW| / Re W0'`
//! from one boundary measurement, with constants either calibrated on a
//! family of known inclusions or built from quantities measured on the
//! background solution.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::coefficients::{sym_eigs, JumpCase};
use crate::geometry::{erode, measure, Shape};
use crate::mesh::Mesh;
use crate::solver::{NeumannData, Solution};
use crate::{Error, Result};

/// `|D_{d1}| >= |D| / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FatnessReport {
    pub d1: f64,
    pub area: f64,
    pub eroded_area: f64,
    pub ratio: f64,
    pub ok: bool,
}

/// Areas by the midpoint rule on a `cells x cells` grid over the bounding box.
pub fn check_fatness(inclusion: &Shape, d1: f64, cells: usize) -> Result<FatnessReport> {
    if !(d1 > 0.0) {
        return Err(Error::input("fatness depth d1 must be positive"));
    }
    let area = measure(inclusion, cells);
    let eroded_area = measure(&erode(inclusion, d1), cells);
    let ratio = if area > 0.0 { eroded_area / area } else { 0.0 };
    Ok(FatnessReport {
        d1,
        area,
        eroded_area,
        ratio,
        ok: ratio >= 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorGradient {
    /// `sup_D |grad u0|`.
    pub sup: f64,
    /// `||grad u0||_{L^2(Omega)}`.
    pub l2: f64,
    /// `sup / l2`, the empirical interior constant.
    pub ratio: f64,
}

/// The P1 gradient is constant per element, so the supremum over the
/// inclusion is the largest element gradient there. Patch-averaged nodal
/// gradients would underestimate it.
pub fn interior_gradient_sup(u0: &Solution) -> InteriorGradient {
    let mesh = &u0.mesh;
    let sup = (0..mesh.num_elements())
        .filter(|e| mesh.in_d[*e])
        .map(|e| {
            let g = u0.grad(e);
            (g[0].norm_sqr() + g[1].norm_sqr()).sqrt()
        })
        .fold(0.0, f64::max);
    let l2 = u0.grad_energy(|_| true).sqrt();
    InteriorGradient {
        sup,
        l2,
        ratio: if l2 > 0.0 { sup / l2 } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstantsSource {
    AnalyticSurrogate,
    Calibrated,
}

impl ConstantsSource {
    pub fn name(&self) -> &'static str {
        match self {
            ConstantsSource::AnalyticSurrogate => "analytic-surrogate",
            ConstantsSource::Calibrated => "calibrated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeConstants {
    pub c1: f64,
    pub c2: f64,
    pub source: ConstantsSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeEstimate {
    pub delta_w_re: f64,
    pub w0_free_re: f64,
    pub lower: f64,
    pub upper: f64,
    pub true_area: Option<f64>,
    pub fatness_ok: bool,
    /// The upper bound assumes fatness, which failed.
    pub upper_conditional: bool,
    pub constants_source: ConstantsSource,
    /// `dW = 0` although the inclusion has positive area.
    pub counterexample_candidate: bool,
    /// `lower <= true_area <= upper` when the area is known.
    pub brackets_truth: Option<bool>,
}

/// Relative size of `|Re dW| / Re W0'` below which the gap counts as zero.
pub const NULL_GAP: f64 = 1e-12;

pub fn estimate_size(
    delta_w_re: f64,
    w0_free_re: f64,
    case: JumpCase,
    constants: &SizeConstants,
    fatness_ok: bool,
    true_area: Option<f64>,
) -> Result<SizeEstimate> {
    if !(w0_free_re > 1e-14) {
        return Err(Error::Degenerate(format!(
            "Re W0' = {w0_free_re:e}; the background measurement carries no energy"
        )));
    }
    if case == JumpCase::None {
        return Err(Error::hypothesis(
            "jump condition",
            "size bounds need one of the two signs of the jump condition",
        ));
    }
    let SizeConstants { c1, c2, source } = *constants;
    if !(c1 >= 0.0 && c2 >= c1) {
        return Err(Error::input(format!("constants must satisfy 0 <= C1 <= C2, got {c1}, {c2}")));
    }
    let mut x = delta_w_re.abs() / w0_free_re;
    let null = x <= NULL_GAP;
    if null {
        x = 0.0;
    }
    let lower = c1 * x;
    let upper = if c2.is_finite() || x > 0.0 { c2 * x } else { 0.0 };
    Ok(SizeEstimate {
        delta_w_re,
        w0_free_re,
        lower,
        upper,
        true_area,
        fatness_ok,
        upper_conditional: !fatness_ok,
        constants_source: source,
        counterexample_candidate: null && true_area.is_some_and(|a| a > 0.0),
        brackets_truth: true_area.map(|a| lower <= a && a <= upper),
    })
}

/// One scene of a calibration family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    pub area: f64,
    pub delta_w_re: f64,
    pub w0_free_re: f64,
    pub case: JumpCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub constants: SizeConstants,
    pub used: usize,
    /// Indices of members dropped because their gap vanished.
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

/// `C1 = min |D| Re W0' / |Re dW|`, `C2 = max` of the same over the family.
pub fn calibrate_constants(family: &[CalibrationSample]) -> Result<Calibration> {
    if family.is_empty() {
        return Err(Error::input("calibration family is empty"));
    }
    let mut cases: BTreeMap<&'static str, usize> = BTreeMap::new();
    for s in family {
        *cases.entry(s.case.name()).or_default() += 1;
    }
    if cases.len() > 1 || family[0].case == JumpCase::None {
        return Err(Error::input(format!(
            "calibration family must share one jump case, found {:?}",
            cases.keys().collect::<Vec<_>>()
        )));
    }
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for (i, s) in family.iter().enumerate() {
        let x = s.delta_w_re.abs() / s.w0_free_re;
        if !(s.w0_free_re > 0.0) || x <= NULL_GAP {
            excluded.push(i);
            warnings.push(format!("member {i} has a vanishing power gap and was excluded"));
            continue;
        }
        let k = s.area / x;
        c1 = c1.min(k);
        c2 = c2.max(k);
    }
    let used = family.len() - excluded.len();
    if used == 0 {
        return Err(Error::Degenerate("every calibration member has a vanishing power gap".into()));
    }
    Ok(Calibration {
        constants: SizeConstants {
            c1,
            c2,
            source: ConstantsSource::Calibrated,
        },
        used,
        excluded,
        warnings,
    })
}

/// Quantities measured on the background problem that enter the surrogate constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateInputs {
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    /// Empirical interior constant `sup_D |grad u0| / ||grad u0||_{L^2(Omega)}`.
    pub interior_ratio: f64,
    /// Smallest share of gradient energy in a ball of radius `ball_radius`.
    pub lipschitz_c: f64,
    pub ball_radius: f64,
    /// `inf lambda_min(sigma0)` and `sup lambda_max(sigma0)` over `Omega`.
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Constants assembled from the energy bracket, the interior gradient bound
/// and Lipschitz propagation of smallness:
///
/// * `|D| >= int_D |grad u0|^2 / sup_D |grad u0|^2`, with
///   `|Re dW| <= kappa_hi int_D |grad u0|^2` and
///   `sup_D |grad u0|^2 <= k^2 Re W0' / sigma_min`, gives
///   `C1 = sigma_min / (kappa_hi k^2)`;
/// * disjoint balls of radius `rho` inscribed in the squares of side `2 rho`
///   meeting `D_{d1}` lie in `D` and number at least `|D| / (8 rho^2)` under
///   fatness, so `int_D |grad u0|^2 >= |D| c_rho Re W0' / (8 rho^2 sigma_max)`
///   and `C2 = 8 rho^2 sigma_max / (kappa_lo c_rho)`.
///
/// `rho` must satisfy `(1 + sqrt 2) rho <= d1` and `4 rho <= d0`.
pub fn surrogate_constants(s: &SurrogateInputs) -> SizeConstants {
    let c1 = if s.kappa_hi > 0.0 && s.interior_ratio > 0.0 {
        s.sigma_min / (s.kappa_hi * s.interior_ratio * s.interior_ratio)
    } else {
        0.0
    };
    let c2 = if s.kappa_lo > 0.0 && s.lipschitz_c > 0.0 {
        8.0 * s.ball_radius * s.ball_radius * s.sigma_max / (s.kappa_lo * s.lipschitz_c)
    } else {
        f64::INFINITY
    };
    SizeConstants {
        c1,
        c2,
        source: ConstantsSource::AnalyticSurrogate,
    }
}

/// Largest admissible ball radius for [`surrogate_constants`].
pub fn surrogate_ball_radius(d0: f64, d1: f64) -> f64 {
    (d1 / (1.0 + core::f64::consts::SQRT_2)).min(d0 / 4.0)
}

/// `inf lambda_min` and `sup lambda_max` of the real part of the laws of a solution.
pub fn sigma_range(u0: &Solution) -> (f64, f64) {
    u0.laws.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
        let (a, b) = sym_eigs(&l.sigma);
        (lo.min(a), hi.max(b))
    })
}

/// Boundary nodes in counter-clockwise order along the outer boundary.
fn boundary_loop(mesh: &Mesh) -> Result<Vec<usize>> {
    let mut next = BTreeMap::new();
    for e in &mesh.boundary_edges {
        next.insert(e[0], e[1]);
    }
    let start = mesh.boundary_edges.first().ok_or_else(|| Error::Geometry("mesh has no boundary".into()))?[0];
    let mut order = alloc::vec![start];
    let mut cur = next[&start];
    while cur != start {
        if order.len() > mesh.boundary_edges.len() {
            return Err(Error::Geometry("outer boundary is not a single closed loop".into()));
        }
        order.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::Geometry("outer boundary is not a single closed loop".into()))?;
    }
    Ok(order)
}

/// `||g||_{L^2} / ||g||_{H^{-1/2}}` for the load of `data`, with the
/// negative norm from the generalized eigenproblem `K v = mu M v` of P1 mass
/// and stiffness matrices along the boundary: `||g||_{-1/2}^2 = sum mu_k^{-1/2} (v_k . F)^2`
/// over the nonconstant modes.
pub fn boundary_norm_ratio(mesh: &Mesh, data: &NeumannData) -> Result<f64> {
    let order = boundary_loop(mesh)?;
    let n = order.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        let len = (mesh.nodes[order[j]] - mesh.nodes[order[i]]).norm();
        m[(i, i)] += len / 3.0;
        m[(j, j)] += len / 3.0;
        m[(i, j)] += len / 6.0;
        m[(j, i)] += len / 6.0;
        k[(i, i)] += 1.0 / len;
        k[(j, j)] += 1.0 / len;
        k[(i, j)] -= 1.0 / len;
        k[(j, i)] -= 1.0 / len;
    }
    let ch = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("boundary mass matrix is not positive definite".into()))?;
    let li = ch
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("boundary mass factor is singular".into()))?;
    let a = &li * &k * li.transpose();
    let eig = SymmetricEigen::new((&a + a.transpose()) * 0.5);
    let mut neg = 0.0;
    let mut l2 = 0.0;
    for part in 0..2 {
        let f = DVector::from_iterator(
            n,
            order.iter().map(|i| if part == 0 { data.load[*i].re } else { data.load[*i].im }),
        );
        // Coefficients in the M-orthonormal eigenbasis: w = Q^T L^{-1} F.
        let w = eig.eigenvectors.transpose() * (&li * f);
        let mu_floor = 1e-9 * eig.eigenvalues.amax();
        for (c, mu) in w.iter().zip(eig.eigenvalues.iter()) {
            if *mu > mu_floor {
                neg += c * c / mu.sqrt();
                l2 += c * c;
            }
        }
    }
    if neg <= 0.0 {
        return Err(Error::Degenerate("boundary data has no nonconstant component".into()));
    }
    Ok((l2 / neg).sqrt())
}
