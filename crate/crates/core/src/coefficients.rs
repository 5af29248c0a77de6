//! Conductivity tensors, the chiral inclusion law, and checks of the
//! structural hypotheses (symmetry, ellipticity, Lipschitz bounds, the jump
//! condition and closeness of the permittivities).

use alloc::format;
use alloc::vec::Vec;

use nalgebra::Vector2;

use crate::geometry::Side;
use crate::{Error, Mat2, Result, Vec2, C64};

/// Tolerance of the matrix order `A <= B`, tested as `lambda_min(B - A) >= -TOL`.
pub const ORDER_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

/// Complex 2-vector.
pub type CVec2 = Vector2<C64>;

/// A real 2x2 matrix field given in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorField {
    Constant(Mat2),
    /// `base + x dx + y dy`.
    Affine { base: Mat2, dx: Mat2, dy: Mat2 },
}

impl TensorField {
    pub fn scalar(s: f64) -> Self {
        TensorField::Constant(Mat2::identity() * s)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        TensorField::Constant(Mat2::new(a, 0.0, 0.0, b))
    }

    pub fn zero() -> Self {
        TensorField::Constant(Mat2::zeros())
    }

    pub fn eval(&self, p: &Vec2) -> Mat2 {
        match self {
            TensorField::Constant(m) => *m,
            TensorField::Affine { base, dx, dy } => base + dx * p.x + dy * p.y,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TensorField::Constant(_))
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            TensorField::Constant(m) => TensorField::Constant(m * c),
            TensorField::Affine { base, dx, dy } => TensorField::Affine {
                base: base * c,
                dx: dx * c,
                dy: dy * c,
            },
        }
    }
}

/// Background tensors `A_+- = M_+- + i gamma N_+-` on the two phases.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundTensor {
    pub m_plus: TensorField,
    pub m_minus: TensorField,
    pub n_plus: TensorField,
    pub n_minus: TensorField,
    pub gamma: f64,
    pub lambda0: f64,
}

impl BackgroundTensor {
    /// Same real tensor on both phases, no imaginary part.
    pub fn real_uniform(m: TensorField, lambda0: f64) -> Self {
        BackgroundTensor {
            m_plus: m.clone(),
            m_minus: m,
            n_plus: TensorField::scalar(1.0),
            n_minus: TensorField::scalar(1.0),
            gamma: 0.0,
            lambda0,
        }
    }

    /// Conductivity `sigma_0 = M` on the given phase.
    pub fn sigma(&self, side: Side, p: &Vec2) -> Mat2 {
        match side {
            Side::Plus => self.m_plus.eval(p),
            Side::Minus => self.m_minus.eval(p),
        }
    }

    /// Permittivity `epsilon_0 = gamma N` on the given phase.
    pub fn epsilon(&self, side: Side, p: &Vec2) -> Mat2 {
        let n = match side {
            Side::Plus => self.n_plus.eval(p),
            Side::Minus => self.n_minus.eval(p),
        };
        n * self.gamma
    }

    pub fn law(&self, side: Side, p: &Vec2) -> Law {
        Law {
            sigma: self.sigma(side, p),
            epsilon: self.epsilon(side, p),
            zeta: Mat2::zeros(),
        }
    }
}

/// A tensor of the inclusion law, either given outright or as an increment
/// over the background value at the same point.
#[derive(Debug, Clone, PartialEq)]
pub enum LawTensor {
    Absolute(TensorField),
    Offset(TensorField),
}

impl LawTensor {
    pub fn resolve(&self, background: &Mat2, p: &Vec2) -> Mat2 {
        match self {
            LawTensor::Absolute(t) => t.eval(p),
            LawTensor::Offset(t) => background + t.eval(p),
        }
    }
}

/// Real-linear law inside the inclusion:
/// `I(p) = (sigma_1 + i epsilon_1) p + zeta_1 conj(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionLaw {
    pub sigma1: LawTensor,
    pub epsilon1: LawTensor,
    pub zeta1: TensorField,
    pub lambda1: f64,
    pub varrho: f64,
    pub delta_tol: f64,
}

/// Pointwise constitutive law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Law {
    pub sigma: Mat2,
    pub epsilon: Mat2,
    pub zeta: Mat2,
}

impl Law {
    pub fn isotropic(sigma: f64, epsilon: f64, zeta: f64) -> Self {
        Law {
            sigma: Mat2::identity() * sigma,
            epsilon: Mat2::identity() * epsilon,
            zeta: Mat2::identity() * zeta,
        }
    }

    /// Current density for the complex field `p`.
    pub fn ohm_apply(&self, p: &CVec2) -> CVec2 {
        let re = p.map(|c| c.re);
        let im = p.map(|c| c.im);
        // (sigma + i eps)(re + i im) + zeta (re - i im)
        let out_re = self.sigma * re - self.epsilon * im + self.zeta * re;
        let out_im = self.sigma * im + self.epsilon * re - self.zeta * im;
        CVec2::new(C64::new(out_re.x, out_im.x), C64::new(out_re.y, out_im.y))
    }

    pub fn is_complex_linear(&self) -> bool {
        self.zeta.iter().all(|v| *v == 0.0)
    }
}

/// Optional first- and zeroth-order terms: the operator becomes
/// `div(A grad u) + W . grad u + V u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerOrderTerms {
    pub w: CVec2,
    pub v: C64,
}

impl LowerOrderTerms {
    /// `(K1, K2) = (|W|, |V|)`.
    pub fn bounds(&self) -> (f64, f64) {
        ((self.w[0].norm_sqr() + self.w[1].norm_sqr()).sqrt(), self.v.norm())
    }
}

/// Full coefficient set of a forward problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub background: BackgroundTensor,
    pub inclusion: Option<InclusionLaw>,
    pub lower: Option<LowerOrderTerms>,
}

impl Coefficients {
    pub fn background_only(background: BackgroundTensor) -> Self {
        Coefficients {
            background,
            inclusion: None,
            lower: None,
        }
    }

    /// Law of the unperturbed medium.
    pub fn background_law(&self, side: Side, p: &Vec2) -> Law {
        self.background.law(side, p)
    }

    /// Law of the perturbed medium; the inclusion law applies where `in_d`.
    pub fn perturbed_law(&self, side: Side, in_d: bool, p: &Vec2) -> Law {
        let bg = self.background.law(side, p);
        match (&self.inclusion, in_d) {
            (Some(inc), true) => Law {
                sigma: inc.sigma1.resolve(&bg.sigma, p),
                epsilon: inc.epsilon1.resolve(&bg.epsilon, p),
                zeta: inc.zeta1.eval(p),
            },
            _ => bg,
        }
    }
}

/// Eigenvalues `(min, max)` of a symmetric 2x2 matrix.
pub fn sym_eigs(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - r, mean + r)
}

/// Spectral norm of a 2x2 matrix.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let (_, hi) = sym_eigs(&(m.transpose() * m));
    hi.max(0.0).sqrt()
}

/// `a <= b` in the Loewner order, up to [`ORDER_TOL`].
pub fn loewner_le(a: &Mat2, b: &Mat2) -> bool {
    sym_eigs(&(b - a)).0 >= -ORDER_TOL
}

pub fn check_symmetric(m: &Mat2, at: &Vec2) -> Result<()> {
    let scale = m.amax().max(1.0);
    if (m[(0, 1)] - m[(1, 0)]).abs() > SYMMETRY_TOL * scale {
        return Err(Error::Hypothesis {
            hypothesis: "symmetry",
            detail: format!("off-diagonal entries differ by {:e} at ({}, {})", m[(0, 1)] - m[(1, 0)], at.x, at.y),
        });
    }
    Ok(())
}

/// Extremal eigenvalues of a tensor field over sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityReport {
    pub min_eig: f64,
    pub max_eig: f64,
    pub argmin: Vec2,
    pub argmax: Vec2,
    pub lambda0: f64,
    pub pass: bool,
}

/// Tests `lambda0 |xi|^2 <= T xi . xi <= |xi|^2 / lambda0` at every sample.
pub fn check_ellipticity<F: Fn(&Vec2) -> Mat2>(field: F, samples: &[Vec2], lambda0: f64) -> Result<EllipticityReport> {
    if samples.is_empty() {
        return Err(Error::input("ellipticity check needs at least one sample point"));
    }
    let mut rep = EllipticityReport {
        min_eig: f64::INFINITY,
        max_eig: f64::NEG_INFINITY,
        argmin: samples[0],
        argmax: samples[0],
        lambda0,
        pass: false,
    };
    for p in samples {
        let m = field(p);
        check_symmetric(&m, p)?;
        let (lo, hi) = sym_eigs(&m);
        if lo < rep.min_eig {
            rep.min_eig = lo;
            rep.argmin = *p;
        }
        if hi > rep.max_eig {
            rep.max_eig = hi;
            rep.argmax = *p;
        }
    }
    rep.pass = rep.min_eig >= lambda0 - ORDER_TOL && rep.max_eig <= 1.0 / lambda0 + ORDER_TOL;
    Ok(rep)
}

/// `max |T(x) - T(y)|_F / |x - y|` over the given pairs. Callers pass pairs
/// from a single phase.
pub fn estimate_lipschitz<F: Fn(&Vec2) -> Mat2>(field: F, pairs: &[(Vec2, Vec2)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::input("Lipschitz estimate needs at least one sample pair"));
    }
    let mut best: f64 = 0.0;
    for (x, y) in pairs {
        let d = (x - y).norm();
        if d > 0.0 {
            best = best.max((field(x) - field(y)).norm() / d);
        }
    }
    Ok(best)
}

/// Which sign of the jump condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpCase {
    /// `zeta_1 <= +-(sigma_1 - sigma_0) - varrho Id`.
    CaseI,
    /// `zeta_1 >= +-(sigma_1 - sigma_0) + varrho Id`.
    CaseII,
    None,
}

impl JumpCase {
    pub fn name(&self) -> &'static str {
        match self {
            JumpCase::CaseI => "case_i",
            JumpCase::CaseII => "case_ii",
            JumpCase::None => "none",
        }
    }
}

/// Pointwise jump condition.
pub fn check_jump_condition(sigma0: &Mat2, sigma1: &Mat2, zeta1: &Mat2, varrho: f64) -> JumpCase {
    let diff = sigma1 - sigma0;
    let rid = Mat2::identity() * varrho;
    if loewner_le(zeta1, &(diff - rid)) && loewner_le(zeta1, &(-diff - rid)) {
        JumpCase::CaseI
    } else if loewner_le(&(diff + rid), zeta1) && loewner_le(&(-diff + rid), zeta1) {
        JumpCase::CaseII
    } else {
        JumpCase::None
    }
}

/// Jump condition over samples `(sigma0, sigma1, zeta1)`; a case holds only
/// if it holds at every sample.
pub fn check_jump_condition_samples<I>(samples: I, varrho: f64) -> JumpCase
where
    I: IntoIterator<Item = (Mat2, Mat2, Mat2)>,
{
    let mut case: Option<JumpCase> = None;
    for (s0, s1, z1) in samples {
        let c = check_jump_condition(&s0, &s1, &z1, varrho);
        match case {
            None => case = Some(c),
            Some(prev) if prev != c => return JumpCase::None,
            _ => {}
        }
    }
    case.unwrap_or(JumpCase::None)
}

/// `sup |eps_1 - eps_0|_2 <= delta_tol` over the samples.
pub fn check_epsilon_closeness<F0, F1>(eps0: F0, eps1: F1, samples: &[Vec2], delta_tol: f64) -> bool
where
    F0: Fn(&Vec2) -> Mat2,
    F1: Fn(&Vec2) -> Mat2,
{
    epsilon_distance(eps0, eps1, samples) <= delta_tol
}

pub fn epsilon_distance<F0, F1>(eps0: F0, eps1: F1, samples: &[Vec2]) -> f64
where
    F0: Fn(&Vec2) -> Mat2,
    F1: Fn(&Vec2) -> Mat2,
{
    samples
        .iter()
        .map(|p| spectral_norm(&(eps1(p) - eps0(p))))
        .fold(0.0, f64::max)
}

/// Outcome of the boundedness/ellipticity test on the inclusion law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InclusionBoundsReport {
    /// Extremal eigenvalues of `sigma_1 - zeta_1` and `sigma_1 + zeta_1`.
    pub minus_range: (f64, f64),
    pub plus_range: (f64, f64),
    /// Largest spectral norm of `epsilon_0` and `epsilon_1`.
    pub eps_norm: f64,
    pub pass: bool,
}

/// `lambda_1 <= sigma_1 +- zeta_1 <= 1/lambda_1` and `|eps_0|, |eps_1| <= 1/lambda_1`
/// at every sample law. `samples` yields `(background, inclusion)` laws.
pub fn check_inclusion_bounds<I>(samples: I, lambda1: f64) -> Result<InclusionBoundsReport>
where
    I: IntoIterator<Item = (Vec2, Law, Law)>,
{
    let mut minus = (f64::INFINITY, f64::NEG_INFINITY);
    let mut plus = (f64::INFINITY, f64::NEG_INFINITY);
    let mut eps_norm: f64 = 0.0;
    let mut any = false;
    for (p, bg, law) in samples {
        any = true;
        for m in [&law.sigma, &law.epsilon, &law.zeta, &bg.epsilon] {
            check_symmetric(m, &p)?;
        }
        let (lo, hi) = sym_eigs(&(law.sigma - law.zeta));
        minus = (minus.0.min(lo), minus.1.max(hi));
        let (lo, hi) = sym_eigs(&(law.sigma + law.zeta));
        plus = (plus.0.min(lo), plus.1.max(hi));
        eps_norm = eps_norm.max(spectral_norm(&law.epsilon)).max(spectral_norm(&bg.epsilon));
    }
    if !any {
        return Err(Error::input("inclusion bounds check needs at least one sample"));
    }
    let inv = 1.0 / lambda1 + ORDER_TOL;
    let lo = lambda1 - ORDER_TOL;
    let pass = minus.0 >= lo && plus.0 >= lo && minus.1 <= inv && plus.1 <= inv && eps_norm <= inv;
    Ok(InclusionBoundsReport {
        minus_range: minus,
        plus_range: plus,
        eps_norm,
        pass,
    })
}

/// Pairs of nearby points on one phase, for Lipschitz estimates: each sample
/// is paired with its successor when both lie on the same side.
pub fn same_side_pairs<F: Fn(&Vec2) -> Side>(samples: &[Vec2], side: F) -> Vec<(Vec2, Vec2)> {
    let mut out = Vec::new();
    for w in samples.windows(2) {
        if side(&w[0]) == side(&w[1]) {
            out.push((w[0], w[1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ellipticity_examples() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.5)];
        let r = check_ellipticity(|_| Mat2::identity(), &pts, 0.5).unwrap();
        assert!(r.pass);
        assert_eq!((r.min_eig, r.max_eig), (1.0, 1.0));
        let r = check_ellipticity(|_| Mat2::new(2.0, 0.0, 0.0, 0.5), &pts, 0.5).unwrap();
        assert!(r.pass);
        let r = check_ellipticity(|_| Mat2::new(3.0, 0.0, 0.0, 1.0), &pts, 0.5).unwrap();
        assert!(!r.pass);
        assert_eq!(r.max_eig, 3.0);
        let bad = check_ellipticity(|_| Mat2::new(1.0, 0.1, 0.0, 1.0), &pts, 0.5);
        assert!(matches!(bad, Err(Error::Hypothesis { hypothesis: "symmetry", .. })));
    }

    #[test]
    fn ellipticity_scales() {
        let pts = [Vec2::new(0.1, 0.2), Vec2::new(0.9, 0.4)];
        let f = TensorField::Affine {
            base: Mat2::new(1.0, 0.2, 0.2, 1.5),
            dx: Mat2::new(0.3, 0.0, 0.0, 0.1),
            dy: Mat2::zeros(),
        };
        let r1 = check_ellipticity(|p| f.eval(p), &pts, 0.1).unwrap();
        let g = f.scaled(3.0);
        let r3 = check_ellipticity(|p| g.eval(p), &pts, 0.1).unwrap();
        assert_relative_eq!(r3.min_eig, 3.0 * r1.min_eig, max_relative = 1e-14);
        assert_relative_eq!(r3.max_eig, 3.0 * r1.max_eig, max_relative = 1e-14);
    }

    #[test]
    fn lipschitz_examples() {
        let pairs = [(Vec2::new(0.0, 0.0), Vec2::new(0.1, 0.3))];
        assert_eq!(estimate_lipschitz(|_| Mat2::identity(), &pairs).unwrap(), 0.0);
        assert!(estimate_lipschitz(|_| Mat2::identity(), &[]).is_err());
        // x_1 Id has Frobenius slope sqrt(2) along x_1.
        let pairs = [(Vec2::new(0.2, 0.5), Vec2::new(0.3, 0.5))];
        assert_relative_eq!(
            estimate_lipschitz(|p| Mat2::identity() * p.x, &pairs).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn lipschitz_ignores_cross_interface_jump() {
        let side = |p: &Vec2| if p.norm() < 0.5 { Side::Minus } else { Side::Plus };
        let field = |p: &Vec2| {
            let base = if p.norm() < 0.5 { 100.0 } else { 1.0 };
            Mat2::identity() * (base + p.x)
        };
        let samples: Vec<Vec2> = (0..100).map(|k| Vec2::new(k as f64 / 100.0, 0.0)).collect();
        let pairs = same_side_pairs(&samples, side);
        assert_relative_eq!(estimate_lipschitz(field, &pairs).unwrap(), 2f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn jump_examples() {
        let s0 = Mat2::identity() * 2.0;
        let s1 = s0 + Mat2::identity();
        assert_eq!(check_jump_condition(&s0, &s1, &(Mat2::identity() * -2.0), 0.5), JumpCase::CaseI);
        assert_eq!(check_jump_condition(&s0, &s1, &(Mat2::identity() * 2.0), 0.5), JumpCase::CaseII);
        assert_eq!(check_jump_condition(&s0, &s0, &Mat2::zeros(), 0.5), JumpCase::None);
    }

    #[test]
    fn epsilon_examples() {
        let pts = [Vec2::new(0.0, 0.0)];
        let e0 = |_: &Vec2| Mat2::identity() * 0.1;
        let e1 = |_: &Vec2| Mat2::identity() * 0.11;
        assert!(check_epsilon_closeness(e0, e0, &pts, 0.0));
        assert!(!check_epsilon_closeness(e0, e1, &pts, 0.005));
        assert!(check_epsilon_closeness(e0, e1, &pts, 0.02));
    }

    #[test]
    fn ohm_examples() {
        let l = Law::isotropic(1.0, 0.0, 0.0);
        let p = CVec2::new(c(1.0, 0.0), c(0.0, 1.0));
        assert_eq!(l.ohm_apply(&p), p);
        let l = Law::isotropic(1.0, 0.0, 1.0);
        assert_eq!(l.ohm_apply(&CVec2::new(c(1.0, 0.0), c(0.0, 0.0))), CVec2::new(c(2.0, 0.0), c(0.0, 0.0)));
        assert_eq!(l.ohm_apply(&CVec2::new(c(0.0, 1.0), c(0.0, 0.0))), CVec2::new(c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn offset_law_tensor() {
        let bg = BackgroundTensor::real_uniform(TensorField::scalar(2.0), 0.4);
        let coeffs = Coefficients {
            background: bg,
            inclusion: Some(InclusionLaw {
                sigma1: LawTensor::Offset(TensorField::scalar(1.0)),
                epsilon1: LawTensor::Offset(TensorField::zero()),
                zeta1: TensorField::scalar(-2.0),
                lambda1: 0.2,
                varrho: 0.5,
                delta_tol: 0.0,
            }),
            lower: None,
        };
        let law = coeffs.perturbed_law(Side::Plus, true, &Vec2::zeros());
        assert_eq!(law.sigma, Mat2::identity() * 3.0);
        assert_eq!(coeffs.perturbed_law(Side::Plus, false, &Vec2::zeros()).zeta, Mat2::zeros());
    }
}
