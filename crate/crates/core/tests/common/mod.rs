#![allow(dead_code)]

use std::sync::Arc;

use eitlab_core::coefficients::{BackgroundTensor, Coefficients, InclusionLaw, LawTensor, TensorField};
use eitlab_core::geometry::{Scene, Shape};
use eitlab_core::mesh::{Mesh, MeshOptions};
use eitlab_core::solver::{background_laws, NeumannData, Operator, Solution};
use eitlab_core::{Vec2, C64};

pub fn unit_disk() -> Shape {
    Shape::disk(Vec2::zeros(), 1.0)
}

/// Unit disk with an optional concentric interface and an optional disk inclusion.
pub fn disk_scene(interface: Option<f64>, inclusion: Option<(Vec2, f64)>) -> Scene {
    Scene::new(
        unit_disk(),
        interface.map(|r| Shape::disk(Vec2::zeros(), r)),
        inclusion.map(|(c, r)| Shape::disk(c, r)),
        0.25,
        2.0,
        0.2,
        0.02,
    )
    .unwrap()
}

pub fn mesh(scene: &Scene, h: f64) -> Arc<Mesh> {
    Arc::new(Mesh::build(scene, &MeshOptions::new(h)).unwrap())
}

/// `a cos(k t) + b sin(k t)` in the polar angle.
pub fn fourier(mesh: &Mesh, k: f64, a: f64, b: f64) -> NeumannData {
    NeumannData::from_fn(
        mesh,
        |p| {
            let t = p.y.atan2(p.x);
            C64::new(a * (k * t).cos() + b * (k * t).sin(), 0.0)
        },
        true,
    )
}

pub fn identity_background() -> BackgroundTensor {
    BackgroundTensor::real_uniform(TensorField::scalar(1.0), 0.5)
}

/// Anisotropic two-phase background with a small permittivity.
pub fn two_phase_background() -> BackgroundTensor {
    let mut bg = BackgroundTensor::real_uniform(TensorField::scalar(2.0), 0.3);
    bg.m_minus = TensorField::diag(3.0, 2.5);
    bg.gamma = 0.1;
    bg
}

/// Inclusion law with the background `sigma`/`epsilon` shifted by
/// `sigma_offset` and an isotropic chiral part `zeta`.
pub fn chiral_inclusion(sigma_offset: f64, zeta: f64) -> InclusionLaw {
    InclusionLaw {
        sigma1: LawTensor::Offset(TensorField::scalar(sigma_offset)),
        epsilon1: LawTensor::Offset(TensorField::zero()),
        zeta1: TensorField::scalar(zeta),
        lambda1: 0.1,
        varrho: 0.05,
        delta_tol: 1.0,
    }
}

pub fn with_inclusion(bg: BackgroundTensor, law: InclusionLaw) -> Coefficients {
    Coefficients {
        background: bg,
        inclusion: Some(law),
        lower: None,
    }
}

/// Background solutions for `n` mixed Fourier data.
pub fn fourier_family(mesh: &Arc<Mesh>, coeffs: &Coefficients, n: u32) -> Vec<Solution> {
    let op = Operator::new(mesh.clone(), background_laws(mesh, coeffs), None).unwrap();
    (1..=n)
        .map(|k| {
            let (a, b) = ((k as f64 * 1.3).sin(), (k as f64 * 0.7).cos());
            let kk = 1.0 + (k % 4) as f64;
            let d = NeumannData::from_fn(
                mesh,
                |p| {
                    let t = p.y.atan2(p.x);
                    C64::new(a * (kk * t).cos() + b * ((kk + 1.0) * t).sin(), 0.0)
                },
                true,
            );
            op.solve(&d).unwrap()
        })
        .collect()
}

/// Nodal interpolant of a closed-form field.
pub fn interpolate(mesh: &Arc<Mesh>, f: impl Fn(&Vec2) -> C64) -> Solution {
    let u = mesh.nodes.iter().map(f).collect();
    Solution::from_nodal(mesh.clone(), u)
}
