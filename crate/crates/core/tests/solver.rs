mod common;

use std::f64::consts::PI;

use common::*;
use eitlab_core::coefficients::{BackgroundTensor, Coefficients, TensorField};
use eitlab_core::energy::{boundary_power, free_energy};
use eitlab_core::quadrature::TriangleRule;
use eitlab_core::solver::{interface_flux_jump, solve_background, Solution};
use eitlab_core::Vec2;

/// `||grad (u_h - x)|| / ||grad x||` for the field `u = x`.
fn dipole_h1_error(u: &Solution) -> f64 {
    let m = &u.mesh;
    let mut err = 0.0;
    for e in 0..m.num_elements() {
        let g = u.grad(e);
        err += m.area(e) * ((g[0].re - 1.0).powi(2) + g[0].im.powi(2) + g[1].norm_sqr());
    }
    (err / m.total_area()).sqrt()
}

#[test]
fn dipole_converges_at_first_order() {
    let coeffs = Coefficients::background_only(identity_background());
    let mut errs = vec![];
    for h in [0.05, 0.025] {
        let mesh = mesh(&disk_scene(None, None), h);
        let data = fourier(&mesh, 1.0, 1.0, 0.0);
        let u = solve_background(&mesh, &coeffs, &data).unwrap();
        errs.push(dipole_h1_error(&u));
        let w0 = boundary_power(&u).re;
        assert!((w0 - PI).abs() < 0.02 * PI, "W0 = {w0}");
    }
    assert!(errs[0] < 0.05, "relative H1 error {}", errs[0]);
    assert!(errs[0] / errs[1] >= 1.8, "error ratio {}", errs[0] / errs[1]);
}

/// Coefficients of `u = (A r + B / r) cos t` on the annulus and `C r cos t`
/// inside radius `rho`, unit conductivity outside and `s` inside.
fn transmission_series(rho: f64, s: f64) -> (f64, f64, f64) {
    let k = (1.0 - s) * rho * rho / (1.0 + s);
    let a = 1.0 / (1.0 - k);
    let b = a * k;
    (a, b, a + b / (rho * rho))
}

fn two_phase(h: f64, s: f64) -> Solution {
    let mut bg = BackgroundTensor::real_uniform(TensorField::scalar(1.0), 0.2);
    bg.m_minus = TensorField::scalar(s);
    let mesh = mesh(&disk_scene(Some(0.5), None), h);
    let data = fourier(&mesh, 1.0, 1.0, 0.0);
    solve_background(&mesh, &Coefficients::background_only(bg), &data).unwrap()
}

#[test]
fn concentric_transmission_matches_series() {
    let s = 4.0;
    let (a, b, c) = transmission_series(0.5, s);
    let exact = |p: &Vec2| {
        let r = p.norm();
        if r < 0.5 {
            c * p.x
        } else {
            (a + b / (r * r)) * p.x
        }
    };
    let u = two_phase(0.02, s);
    let m = &u.mesh;
    let rule = TriangleRule::degree2();
    let (mut err, mut norm) = (0.0, 0.0);
    for e in 0..m.num_elements() {
        for (p, bary, w) in rule.map(&m.triangle(e)) {
            let v = exact(&p);
            err += w * (u.value_in(e, &bary) - v).norm_sqr();
            norm += w * v * v;
        }
    }
    let rel = (err / norm).sqrt();
    assert!(rel < 0.02, "relative L2 error {rel}");

    let coarse = interface_flux_jump(&two_phase(0.04, s));
    let fine = interface_flux_jump(&u);
    assert!(fine < coarse, "flux jump {coarse} -> {fine}");
}

#[test]
fn free_energy_forms_agree() {
    let mesh = mesh(&disk_scene(Some(0.5), None), 0.05);
    let coeffs = Coefficients::background_only(two_phase_background());
    let u = solve_background(&mesh, &coeffs, &fourier(&mesh, 2.0, 0.3, 1.0)).unwrap();
    let fe = free_energy(&u);
    assert!(fe.mismatch < 1e-9, "mismatch {}", fe.mismatch);
    assert!(fe.boundary.re > 0.0 && fe.boundary.im > 0.0);
}
