//! Boundary power, power gap and free energy, the mixed field/flux
//! (Cherkaev-Gibiansky) reformulation of the constitutive law, the exact
//! power-gap identities, and energy brackets for the power gap.
//!
//! For P1 solutions that share a load vector and have zero mean, the
//! identities below hold exactly in the discrete space, so their residuals
//! only measure round-off.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::coefficients::{CVec2, JumpCase, Law};
use crate::solver::Solution;
use crate::{Error, Mat2, Result, C64};

/// `B` of the mixed formulation, mapping `(Re I, Im grad u)` to `(Re grad u, Im I)`.
pub fn cg_transform(law: &Law) -> Result<Matrix4<f64>> {
    let s = law.sigma + law.zeta;
    let det = s.determinant();
    let scale = s.norm().max(1.0);
    let si = match s.try_inverse() {
        Some(si) if det.abs() > 1e-14 * scale * scale => si,
        _ => {
            return Err(Error::Hypothesis {
                hypothesis: "boundedness and ellipticity",
                detail: alloc::format!("sigma_1 + zeta_1 is singular (det = {det:e})"),
            })
        }
    };
    let eps = law.epsilon;
    let b12 = si * eps;
    let b21 = eps * si;
    let b22 = law.sigma - law.zeta + eps * si * eps;
    let mut b = Matrix4::zeros();
    b.fixed_view_mut::<2, 2>(0, 0).copy_from(&si);
    b.fixed_view_mut::<2, 2>(0, 2).copy_from(&b12);
    b.fixed_view_mut::<2, 2>(2, 0).copy_from(&b21);
    b.fixed_view_mut::<2, 2>(2, 2).copy_from(&b22);
    Ok(b)
}

/// `v = (Re I(p), Im p)`.
pub fn state_vector(law: &Law, p: &CVec2) -> Vector4<f64> {
    let i = law.ohm_apply(p);
    Vector4::new(i[0].re, i[1].re, p[0].im, p[1].im)
}

/// `(Re p, Im I(p))`, the image of the state vector under `B`.
pub fn dual_vector(law: &Law, p: &CVec2) -> Vector4<f64> {
    let i = law.ohm_apply(p);
    Vector4::new(p[0].re, p[1].re, i[0].im, i[1].im)
}

/// Linear map `(Re p, Im p) -> v` for a law without chiral part: `[[sigma, -eps], [0, Id]]`.
fn background_state_map(law: &Law) -> Matrix4<f64> {
    let mut g = Matrix4::zeros();
    g.fixed_view_mut::<2, 2>(0, 0).copy_from(&(law.sigma + law.zeta));
    g.fixed_view_mut::<2, 2>(0, 2).copy_from(&(-law.epsilon));
    g.fixed_view_mut::<2, 2>(2, 2).copy_from(&Mat2::identity());
    g
}

fn sym_extremes(m: &Matrix4<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym).eigenvalues;
    (e.min(), e.max())
}

/// `int u g` on the boundary, with the load vector the solution was computed for.
pub fn boundary_power(u: &Solution) -> C64 {
    u.u.iter().zip(&u.load).map(|(u, f)| u * f).sum()
}

/// `int conj(u) g` on the boundary.
pub fn boundary_power_conj(u: &Solution) -> C64 {
    u.u.iter().zip(&u.load).map(|(u, f)| u.conj() * f).sum()
}

/// Free energy in boundary and volume form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    pub boundary: C64,
    pub volume: C64,
    /// `|boundary - volume| / |boundary|`.
    pub mismatch: f64,
}

/// `int conj(u0) g = int sigma grad u . conj(grad u) + i int eps grad u . conj(grad u)`.
pub fn free_energy(u0: &Solution) -> FreeEnergy {
    let boundary = boundary_power_conj(u0);
    let mut re = 0.0;
    let mut im = 0.0;
    for e in 0..u0.mesh.num_elements() {
        let g = u0.grad(e);
        let gr = g.map(|c| c.re);
        let gi = g.map(|c| c.im);
        let law = &u0.laws[e];
        let a = u0.mesh.area(e);
        re += a * (gr.dot(&(law.sigma * gr)) + gi.dot(&(law.sigma * gi)));
        im += a * (gr.dot(&(law.epsilon * gr)) + gi.dot(&(law.epsilon * gi)));
    }
    let volume = C64::new(re, im);
    let denom = boundary.norm();
    let mismatch = if denom > 0.0 { (boundary - volume).norm() / denom } else { volume.norm() };
    FreeEnergy {
        boundary,
        volume,
        mismatch,
    }
}

/// `Re delta W` evaluated three ways, with `delta W = W1 - W0` and `W = int u g`
/// for the outward current `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `Re int (u1 - u0) g`.
    pub basic: f64,
    /// `int B0 (v0 - v1).(v0 - v1) + int_D (B1 - B0) v1.v1`.
    pub id1: f64,
    /// `-int B1 (v0 - v1).(v0 - v1) + int_D (B1 - B0) v0.v0`.
    pub id2: f64,
    /// Largest pairwise relative difference.
    pub max_rel_diff: f64,
}

fn same_problem(u0: &Solution, u1: &Solution) -> Result<()> {
    if !alloc::sync::Arc::ptr_eq(&u0.mesh, &u1.mesh) && u0.mesh.num_nodes() != u1.mesh.num_nodes() {
        return Err(Error::input("solutions live on different meshes"));
    }
    let same_load = u0.load.iter().zip(&u1.load).all(|(a, b)| (a - b).norm() <= 1e-14 * (1.0 + a.norm()));
    if !same_load {
        return Err(Error::input("solutions were computed for different boundary data"));
    }
    Ok(())
}

pub fn verify_identities(u0: &Solution, u1: &Solution) -> Result<IdentityReport> {
    same_problem(u0, u1)?;
    let basic: f64 = u0
        .u
        .iter()
        .zip(&u1.u)
        .zip(&u0.load)
        .map(|((a, b), f)| ((b - a) * f).re)
        .sum();
    let mut id1 = 0.0;
    let mut id2 = 0.0;
    for e in 0..u0.mesh.num_elements() {
        let (l0, l1) = (&u0.laws[e], &u1.laws[e]);
        let b0 = cg_transform(l0)?;
        let b1 = cg_transform(l1)?;
        let v0 = state_vector(l0, &u0.grad(e));
        let v1 = state_vector(l1, &u1.grad(e));
        let d = v0 - v1;
        let a = u0.mesh.area(e);
        let diff = b1 - b0;
        id1 += a * (d.dot(&(b0 * d)) + v1.dot(&(diff * v1)));
        id2 += a * (-d.dot(&(b1 * d)) + v0.dot(&(diff * v0)));
    }
    let rel = |x: f64, y: f64| {
        let s = x.abs().max(y.abs());
        if s > 0.0 {
            (x - y).abs() / s
        } else {
            0.0
        }
    };
    let max_rel_diff = rel(basic, id1).max(rel(basic, id2)).max(rel(id1, id2));
    Ok(IdentityReport {
        basic,
        id1,
        id2,
        max_rel_diff,
    })
}

/// Energy bracket of `|Re delta W|` by the gradient energy of `u0` in `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketReport {
    pub case: JumpCase,
    pub re_delta_w: f64,
    pub grad_energy_d: f64,
    /// `|Re delta W| / int_D |grad u0|^2`.
    pub ratio: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    /// Sign of `Re delta W` matches the case.
    pub sign_ok: bool,
    /// `kappa_lo (1 - tol) <= ratio <= kappa_hi (1 + tol)` and the sign matches.
    pub holds: bool,
    /// Whether the law difference had the definite sign the case requires.
    pub difference_definite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BracketOutcome {
    Bracket(BracketReport),
    /// The laws coincide on `D` or `u0` has no gradient there: the ratio is `0/0`.
    Degenerate,
}

/// Pointwise surrogate constants of the bracket.
///
/// With `G` the map `(Re grad u0, Im grad u0) -> v0` and `E = G^T X G`:
/// case (i) takes `X` as the parallel sum of `B0` and `B1 - B0` for the lower
/// constant (from the first identity minimised over `v0 - v1`) and
/// `X = B1 - B0` for the upper one (second identity); case (ii) takes
/// `X = B0 - B1` for both, the upper constant scaled by
/// `C = max(1, sup lambda_max(B1^{-1} B0))`.
pub fn bracket_constants(u0: &Solution, u1: &Solution, case: JumpCase) -> Result<(f64, f64, bool)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut c_ratio: f64 = 1.0;
    let mut definite = true;
    for e in (0..u0.mesh.num_elements()).filter(|e| u0.mesh.in_d[*e]) {
        let (l0, l1) = (&u0.laws[e], &u1.laws[e]);
        let b0 = cg_transform(l0)?;
        let b1 = cg_transform(l1)?;
        let g = background_state_map(l0);
        match case {
            JumpCase::CaseI => {
                let p = b1 - b0;
                let (pmin, _) = sym_extremes(&p);
                let (_, emax) = sym_extremes(&(g.transpose() * p * g));
                hi = hi.max(emax);
                if pmin > 0.0 {
                    let b1i = b1.try_inverse().ok_or_else(|| Error::Degenerate("B1 is singular".into()))?;
                    let par = b0 * b1i * p;
                    let (emin, _) = sym_extremes(&(g.transpose() * par * g));
                    lo = lo.min(emin);
                } else {
                    definite = false;
                    lo = 0.0;
                }
            }
            JumpCase::CaseII => {
                let q = b0 - b1;
                let (qmin, _) = sym_extremes(&q);
                if qmin <= 0.0 {
                    definite = false;
                }
                let e4 = g.transpose() * q * g;
                let (emin, emax) = sym_extremes(&e4);
                lo = lo.min(emin.max(0.0));
                hi = hi.max(emax);
                // lambda_max(B1^{-1/2} B0 B1^{-1/2}) via the Cholesky factor of B1.
                let ch = nalgebra::Cholesky::new(b1).ok_or_else(|| Error::Hypothesis {
                    hypothesis: "boundedness and ellipticity",
                    detail: "B1 is not positive definite".into(),
                })?;
                let li = ch.l().try_inverse().ok_or_else(|| Error::Degenerate("B1 factor is singular".into()))?;
                let (_, r) = sym_extremes(&(li * b0 * li.transpose()));
                c_ratio = c_ratio.max(r);
            }
            JumpCase::None => unreachable!(),
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
    }
    if case == JumpCase::CaseII {
        hi *= c_ratio;
    }
    Ok((lo.max(0.0), hi, definite))
}

/// Bracket the power gap for a case of the jump condition.
pub fn energy_bracket(u0: &Solution, u1: &Solution, case: JumpCase, tol: f64) -> Result<BracketOutcome> {
    if case == JumpCase::None {
        return Err(Error::Hypothesis {
            hypothesis: "jump condition",
            detail: "neither sign of the jump condition holds; no bracket is asserted".into(),
        });
    }
    same_problem(u0, u1)?;
    let mesh = &u0.mesh;
    let laws_differ = (0..mesh.num_elements()).filter(|e| mesh.in_d[*e]).any(|e| {
        let (a, b) = (&u0.laws[e], &u1.laws[e]);
        (a.sigma - b.sigma).amax() > 1e-14 || (a.epsilon - b.epsilon).amax() > 1e-14 || b.zeta.amax() > 1e-14
    });
    let grad_energy_d = u0.grad_energy(|e| mesh.in_d[e]);
    if !laws_differ || grad_energy_d <= 0.0 {
        return Ok(BracketOutcome::Degenerate);
    }
    let re_delta_w = (boundary_power(u1) - boundary_power(u0)).re;
    let (kappa_lo, kappa_hi, difference_definite) = bracket_constants(u0, u1, case)?;
    let ratio = re_delta_w.abs() / grad_energy_d;
    let sign_ok = match case {
        JumpCase::CaseI => re_delta_w > 0.0,
        _ => re_delta_w < 0.0,
    };
    let holds = sign_ok && ratio >= kappa_lo * (1.0 - tol) && ratio <= kappa_hi * (1.0 + tol);
    Ok(BracketOutcome::Bracket(BracketReport {
        case,
        re_delta_w,
        grad_energy_d,
        ratio,
        kappa_lo,
        kappa_hi,
        sign_ok,
        holds,
        difference_definite,
    }))
}

/// Everything reported about one background/perturbed pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    pub w0: C64,
    pub w1: C64,
    pub delta_w: C64,
    pub w0_free: C64,
    pub free_energy_mismatch: f64,
    pub grad_energy_d: f64,
    pub identities: IdentityReport,
    pub case: JumpCase,
    pub bracket: Option<BracketOutcome>,
}

pub fn power_report(u0: &Solution, u1: &Solution, case: JumpCase, tol: f64) -> Result<PowerReport> {
    let w0 = boundary_power(u0);
    let w1 = boundary_power(u1);
    let fe = free_energy(u0);
    let identities = verify_identities(u0, u1)?;
    let bracket = if case == JumpCase::None {
        None
    } else {
        Some(energy_bracket(u0, u1, case, tol)?)
    };
    Ok(PowerReport {
        w0,
        w1,
        delta_w: w1 - w0,
        w0_free: fe.boundary,
        free_energy_mismatch: fe.mismatch,
        grad_energy_d: u0.grad_energy(|e| u0.mesh.in_d[e]),
        identities,
        case,
        bracket,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat2;
    use approx::assert_relative_eq;

    #[test]
    fn cg_examples() {
        let b = cg_transform(&Law::isotropic(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(b, Matrix4::identity(), epsilon = 1e-15);
        let b = cg_transform(&Law::isotropic(2.0, 1.0, 0.0)).unwrap();
        // Per-direction blocks [[0.5, 0.5], [0.5, 2.5]].
        assert_relative_eq!(b[(0, 0)], 0.5);
        assert_relative_eq!(b[(0, 2)], 0.5);
        assert_relative_eq!(b[(2, 0)], 0.5);
        assert_relative_eq!(b[(2, 2)], 2.5);
        assert_eq!(b[(0, 1)], 0.0);
    }

    #[test]
    fn singular_sigma_plus_zeta() {
        let law = Law {
            sigma: Mat2::identity(),
            epsilon: Mat2::zeros(),
            zeta: -Mat2::identity(),
        };
        assert!(matches!(cg_transform(&law), Err(Error::Hypothesis { .. })));
    }
}
