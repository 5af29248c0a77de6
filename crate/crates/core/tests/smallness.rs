mod common;

use common::*;
use eitlab_core::coefficients::Coefficients;
use eitlab_core::geometry::{FlatteningMap, GraphFn, RegionKind, RegionTriple, Shape, WeightParams};
use eitlab_core::smallness::*;
use eitlab_core::solver::Solution;
use eitlab_core::{Vec2, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat_setup() -> (Solution, RegionTriple, FlatteningMap) {
    let mesh = mesh(&disk_scene(None, None), 0.1);
    let u = interpolate(&mesh, |p| C64::new(p.y - 0.5, 0.0));
    let wp = WeightParams::new(2.0, 1.0, 0.1, 0.5, 2.0, 0.5, 0.5).unwrap();
    let cap = wp.max_region_parameter();
    let triple = RegionTriple::new(wp, cap, 0.5 * cap, 1.0).unwrap();
    let chart = FlatteningMap::new(Vec2::new(0.0, 0.5), Vec2::new(0.0, 1.0), GraphFn::Flat, 0.5, 0.0).unwrap();
    (u, triple, chart)
}

#[test]
fn region_integrals_match_monte_carlo() {
    let (u, triple, chart) = flat_setup();
    let r = region_integrals(&u, &triple, &chart, &RegionQuadrature::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (kind, computed) in [(RegionKind::U1, r.i1), (RegionKind::U2, r.i2), (RegionKind::U3, r.i3)] {
        let (w, lo, hi) = triple.local_bounds(kind);
        let n = 400_000;
        let mut s = 0.0;
        for _ in 0..n {
            let y = Vec2::new(rng.random_range(-w..w), rng.random_range(lo..hi));
            if triple.contains(kind, &y) {
                s += y.y * y.y;
            }
        }
        let mc = s / n as f64 * 2.0 * w * (hi - lo);
        assert!((computed - mc).abs() < 0.02 * mc, "{kind:?}: {computed} vs {mc}");
    }
}

#[test]
fn zero_field_is_trivial() {
    let (u, triple, chart) = flat_setup();
    let zero = Solution::from_nodal(u.mesh.clone(), vec![C64::new(0.0, 0.0); u.u.len()]);
    let c = check_three_region(&zero, &triple, &chart, &RegionQuadrature::default()).unwrap();
    assert_eq!(c.c_fit, 0.0);
    assert_eq!(c.margin, f64::INFINITY);
    assert!(!c.violation_candidate);
}

fn two_phase_family() -> (eitlab_core::geometry::Scene, Vec<Solution>) {
    let scene = disk_scene(Some(0.5), Some((Vec2::new(0.2, 0.1), 0.2)));
    let mesh = mesh(&scene, 0.04);
    let fam = fourier_family(&mesh, &Coefficients::background_only(two_phase_background()), 20);
    (scene, fam)
}

#[test]
fn solver_fields_on_a_two_phase_disk() {
    let (scene, fam) = two_phase_family();

    // Three-region constants across the curved interface.
    let wp = WeightParams::with_defaults(0.25, 0.5).unwrap();
    let cap = wp.max_region_parameter();
    let chart = FlatteningMap::for_interface(scene.interface.as_ref().unwrap(), &Vec2::new(0.5, 0.2), 0.25, 2.0).unwrap();
    for (r1, r2, theta) in [(cap, cap, 1.0), (cap, 0.5 * cap, 1.0), (0.5 * cap, cap, 0.5)] {
        let t = RegionTriple::new(wp, r1, r2, theta).unwrap();
        let s = check_three_region_family(&fam, &t, &chart, &RegionQuadrature::default()).unwrap();
        assert!(s.uniformity < 50.0, "uniformity {}", s.uniformity);
        assert_eq!(s.violations, 0);
        assert!(s.checks.iter().all(|c| c.margin >= 0.0));
    }

    // Chain of balls from the inclusion center.
    let d = scene.inclusion.clone().unwrap();
    let opts = ChainOptions::new(ThreeBallOptions::carleman(1.0));
    let cert = propagate_chain(&fam[0], &scene, &d, &Vec2::new(0.2, 0.1), 0.1, 0.3, &opts).unwrap();
    assert!(cert.disjoint && cert.nested && cert.steps_exact);
    assert!(cert.certified && cert.d_holds);
    assert!((cert.n_max as f64) <= cert.n_bound);
    assert!(cert.tau > 0.0 && cert.tau < 1.0);
    for ch in &cert.chains {
        assert_eq!(ch.m.len(), ch.centers.len());
        assert!(ch.holds);
    }

    // Scaling identity on a disk that straddles the interface.
    let region = Shape::disk(Vec2::new(0.1, 0.0), 0.5);
    for theta in [0.5, 0.7, 1.0] {
        let r = scaling_identity_check(&fam[1], &region, theta, 32, 3000).unwrap();
        assert!(r.residual < 1e-3, "theta {theta}: {r:?}");
    }
}

#[test]
fn three_ball_constants_scale_free() {
    let (scene, fam) = two_phase_family();
    let opts = ThreeBallOptions::carleman(1.0);
    let q = Vec2::new(0.0, 0.0);
    let a = check_three_ball(&fam[2], &scene, &q, 0.02, 0.06, 0.2, &opts).unwrap();
    let scaled = Solution::from_nodal(fam[2].mesh.clone(), fam[2].u.iter().map(|v| v * 7.5).collect());
    let b = check_three_ball(&scaled, &scene, &q, 0.02, 0.06, 0.2, &opts).unwrap();
    assert_eq!(a.mode, BallMode::OneSided);
    assert!((a.check.c_fit / b.check.c_fit - 1.0).abs() < 1e-12);

    let (s, tau, mode) = check_three_ball_family(&fam, &scene, &Vec2::new(0.45, 0.0), 0.02, 0.06, 0.2, &opts).unwrap();
    assert_eq!(mode, BallMode::NearInterface);
    assert!(tau > 0.0 && tau < 1.0);
    assert!(s.uniformity < 50.0, "uniformity {}", s.uniformity);
}

#[test]
fn dipole_lipschitz_and_layer() {
    let mesh = mesh(&disk_scene(None, None), 0.04);
    let outer = unit_disk();
    // For u = x the energy share of any ball is its area over the disk area.
    let u = interpolate(&mesh, |p| C64::new(p.x, 0.0));
    let a = 0.1;
    let r = lipschitz_smallness(&u, &outer, a, 0.05, &BallQuadrature::default()).unwrap();
    let expect = a * a / mesh.total_area() * std::f64::consts::PI;
    assert!((r.c_emp - expect).abs() < 1e-3 * expect, "{} vs {expect}", r.c_emp);

    let layer = boundary_layer(&u, &outer, &[0.02, 0.04, 0.08, 0.16], 1.0, 8).unwrap();
    assert!(layer.exponent >= 0.4, "exponent {}", layer.exponent);
    assert!(boundary_layer(&u, &outer, &[0.3, 0.1], 1.0, 4).is_err());
}
