//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use eitlab::report::RunReport;
use eitlab::{run, CheckKind, ExperimentConfig};
use eitlab_core::coefficients::{BackgroundTensor, CVec2, Coefficients, JumpCase, TensorField};
use eitlab_core::energy::{boundary_power, cg_transform, dual_vector, state_vector};
use eitlab_core::estimator::{calibrate_constants, estimate_size, CalibrationSample};
use eitlab_core::geometry::{FlatteningMap, RegionTriple, Scene, Shape};
use eitlab_core::mesh::{Mesh, MeshOptions};
use eitlab_core::quadrature::TriangleRule;
use eitlab_core::smallness::{check_three_region, scaling_identity_check, RegionQuadrature};
use eitlab_core::solver::{
    background_laws, interface_flux_jump, perturbed_laws, solve_background, NeumannData, Solution,
};
use eitlab_core::{Vec2, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

const FIXTURES: [&str; 5] = [
    "one_phase_disk",
    "concentric_two_phase",
    "off_center_inclusion",
    "crossing_inclusion",
    "ellipse_interface",
];

fn fixture(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json")))
        .unwrap()
}

fn edit(c: &ExperimentConfig, f: impl FnOnce(&mut serde_json::Value)) -> ExperimentConfig {
    let mut v = serde_json::to_value(c).unwrap();
    f(&mut v);
    serde_json::from_value(v).unwrap()
}

fn with_checks(c: &ExperimentConfig, checks: &[CheckKind]) -> ExperimentConfig {
    let mut c = c.clone();
    c.checks = checks.to_vec();
    c
}

fn run_all(configs: &[ExperimentConfig]) -> Vec<Result<RunReport, String>> {
    configs
        .par_iter()
        .map(|c| run(c).map(|o| o.report).map_err(|e| format!("{}: {e}", c.name)))
        .collect()
}

fn collect_ok(rs: Vec<Result<RunReport, String>>) -> Result<Vec<RunReport>, String> {
    rs.into_iter().collect()
}

/// Background solution of a config, outside the pipeline.
fn background_solution(c: &ExperimentConfig) -> (Scene, Solution) {
    let scene = c.scene().unwrap();
    let mesh = Arc::new(Mesh::build(&scene, &c.mesh_options()).unwrap());
    let f = c.data.to_fourier();
    let data = NeumannData::from_fn(&mesh, |p| f.eval(p), true);
    let u = solve_background(&mesh, &c.coefficients(), &data).unwrap();
    (scene, u)
}

fn cos_data(mesh: &Mesh) -> NeumannData {
    NeumannData::from_fn(mesh, |p| C64::new(p.y.atan2(p.x).cos(), 0.0), true)
}

fn disk_mesh(interface: Option<f64>, h: f64) -> Arc<Mesh> {
    let scene = Scene::new(
        Shape::disk(Vec2::zeros(), 1.0),
        interface.map(|r| Shape::disk(Vec2::zeros(), r)),
        None,
        0.25,
        2.0,
        0.2,
        0.02,
    )
    .unwrap();
    Arc::new(Mesh::build(&scene, &MeshOptions::new(h)).unwrap())
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_dipole() -> Outcome {
    let t = Instant::now();
    let coeffs = Coefficients::background_only(BackgroundTensor::real_uniform(TensorField::scalar(1.0), 0.5));
    let mut errs = Vec::new();
    let mut w0 = 0.0;
    for h in [0.05, 0.025] {
        let mesh = disk_mesh(None, h);
        let u = solve_background(&mesh, &coeffs, &cos_data(&mesh)).map_err(|e| e.to_string())?;
        let mut err = 0.0;
        for e in 0..mesh.num_elements() {
            let g = u.grad(e);
            err += mesh.area(e) * ((g[0].re - 1.0).powi(2) + g[0].im.powi(2) + g[1].norm_sqr());
        }
        errs.push((err / mesh.total_area()).sqrt());
        if h == 0.05 {
            w0 = boundary_power(&u).re;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ratio = errs[0] / errs[1];
    let w0_rel = (w0 - PI).abs() / PI;
    check(
        errs[0] < 0.05 && ratio >= 1.8 && w0_rel < 0.02 && secs < 10.0,
        format!("H1 error {:.4} at h = 0.05, ratio {ratio:.3}, W0 off by {w0_rel:.2e}, {secs:.2} s", errs[0]),
    )
}

fn c2_two_phase() -> Outcome {
    let (s, rho) = (4.0, 0.5);
    let k = (1.0 - s) * rho * rho / (1.0 + s);
    let a = 1.0 / (1.0 - k);
    let b = a * k;
    let c = a + b / (rho * rho);
    let solve = |h: f64| {
        let mut bg = BackgroundTensor::real_uniform(TensorField::scalar(1.0), 0.2);
        bg.m_minus = TensorField::scalar(s);
        let mesh = disk_mesh(Some(rho), h);
        solve_background(&mesh, &Coefficients::background_only(bg), &cos_data(&mesh)).unwrap()
    };
    let u = solve(0.02);
    let m = &u.mesh;
    let (mut err, mut norm) = (0.0, 0.0);
    for e in 0..m.num_elements() {
        for (p, bary, w) in TriangleRule::degree2().map(&m.triangle(e)) {
            let r = p.norm();
            let v = if r < rho { c * p.x } else { (a + b / (r * r)) * p.x };
            err += w * (u.value_in(e, &bary) - v).norm_sqr();
            norm += w * v * v;
        }
    }
    let rel = (err / norm).sqrt();
    let (coarse, fine) = (interface_flux_jump(&solve(0.04)), interface_flux_jump(&u));
    check(
        rel < 0.02 && fine < coarse,
        format!("L2 error {rel:.2e} at h = 0.02, flux jump {coarse:.3e} -> {fine:.3e}"),
    )
}

fn c3_null() -> Outcome {
    let configs: Vec<_> = FIXTURES
        .iter()
        .map(|f| {
            let c = edit(&fixture(f), |v| v["coefficients"]["inclusion"]["zeta1"] = json!({"scalar": 0.0}));
            with_checks(&c, &[CheckKind::Energy, CheckKind::Size])
        })
        .collect();
    let reports = collect_ok(run_all(&configs))?;
    let mut worst: f64 = 0.0;
    let mut zero = true;
    for r in &reports {
        let p = r.power.as_ref().unwrap();
        worst = worst.max(p.delta_w[0].hypot(p.delta_w[1]) / p.w0[0].hypot(p.w0[1]));
        let s = r.size.as_ref().unwrap();
        zero &= s.lower == 0.0 && s.upper == 0.0;
    }
    check(
        worst < 1e-8 && zero,
        format!("{} fixtures, max |dW|/|W0| = {worst:.2e}, bounds all [0, 0]: {zero}", reports.len()),
    )
}

fn c4_identities() -> Outcome {
    let configs: Vec<_> = FIXTURES
        .iter()
        .map(|f| {
            let mut c = with_checks(&fixture(f), &[CheckKind::Energy]);
            c.mesh.h = 0.02;
            c
        })
        .collect();
    let reports = collect_ok(run_all(&configs))?;
    let mut parts = Vec::new();
    let mut ok = true;
    for r in &reports {
        let p = r.power.as_ref().unwrap();
        ok &= p.identities.max_rel_diff < 5e-3 && p.case != "none";
        parts.push(format!("{} {} {:.1e}", r.config.name, p.case, p.identities.max_rel_diff));
    }
    check(ok, format!("max pairwise relative difference: {}", parts.join(", ")))
}

/// Inclusion and data variants of the fixtures with a given jump case.
fn sign_scenarios(bases: &[&str], per_base: usize) -> Vec<ExperimentConfig> {
    let data = [
        json!([{"k": 1, "cos": [1, 0]}]),
        json!([{"k": 2, "sin": [1, 0]}]),
        json!([{"k": 1, "sin": [1, 0]}, {"k": 3, "cos": [0.5, 0]}]),
        json!([{"k": 2, "cos": [1, 0]}, {"k": 1, "sin": [0.3, 0]}]),
        json!([{"k": 3, "sin": [1, 0]}]),
        json!([{"k": 1, "cos": [0.6, 0]}, {"k": 2, "cos": [0.6, 0]}]),
    ];
    let mut out = Vec::new();
    for b in bases {
        let base = with_checks(&fixture(b), &[CheckKind::Energy]);
        for (i, d) in data.iter().take(per_base).enumerate() {
            out.push(edit(&base, |v| {
                v["name"] = json!(format!("{b}_{i}"));
                v["data"]["modes"] = d.clone();
            }));
        }
    }
    out
}

fn c5_bracket() -> Outcome {
    let mut all = sign_scenarios(&["one_phase_disk", "off_center_inclusion", "ellipse_interface"], 4);
    all.extend(sign_scenarios(&["concentric_two_phase", "crossing_inclusion"], 6));
    let reports = collect_ok(run_all(&all))?;
    let (mut n1, mut n2, mut bad) = (0, 0, Vec::new());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for r in &reports {
        let p = r.power.as_ref().unwrap();
        let Some(b) = &p.bracket else {
            bad.push(format!("{}: no bracket", r.config.name));
            continue;
        };
        match p.case.as_str() {
            "case_i" if p.delta_w[0] > 0.0 => n1 += 1,
            "case_ii" if p.delta_w[0] < 0.0 => n2 += 1,
            _ => bad.push(format!("{}: {} with Re dW = {:.3e}", r.config.name, p.case, p.delta_w[0])),
        }
        if !b.holds {
            bad.push(format!("{}: ratio {:.4} outside [{:.4}, {:.4}]", r.config.name, b.ratio, b.kappa_lo, b.kappa_hi));
        }
        lo = lo.min(b.ratio / b.kappa_lo);
        hi = hi.max(b.ratio / b.kappa_hi);
    }
    check(
        n1 >= 10 && n2 >= 10 && bad.is_empty(),
        format!(
            "{n1} case_i with Re dW > 0, {n2} case_ii with Re dW < 0; min ratio/kappa_lo {lo:.3}, max ratio/kappa_hi {hi:.3}{}",
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    )
}

fn c6_transform() -> Outcome {
    let mut points = 0;
    let (mut asym, mut not_pd) = (0.0f64, 0);
    let mut inclusion_laws = Vec::new();
    for f in FIXTURES {
        let c = fixture(f);
        let scene = c.scene().unwrap();
        let mesh = Mesh::build(&scene, &c.mesh_options()).unwrap();
        let coeffs = c.coefficients();
        let laws0 = background_laws(&mesh, &coeffs);
        let laws1 = perturbed_laws(&mesh, &coeffs);
        for (e, law) in laws0.iter().chain(&laws1).enumerate() {
            let b = cg_transform(law).map_err(|e| e.to_string())?;
            asym = asym.max((b - b.transpose()).amax());
            if b.cholesky().is_none() {
                not_pd += 1;
            }
            points += 1;
            if e >= laws0.len() && mesh.in_d[e - laws0.len()] && inclusion_laws.len() < FIXTURES.len() * 4 {
                inclusion_laws.push(*law);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut trip: f64 = 0.0;
    for k in 0..100 {
        let law = &inclusion_laws[k % inclusion_laws.len()];
        let p = CVec2::new(
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
        let b = cg_transform(law).unwrap();
        let v = state_vector(law, &p);
        let w = dual_vector(law, &p);
        trip = trip.max((b * v - w).amax() / w.amax().max(1.0));
    }
    check(
        asym <= 1e-14 && not_pd == 0 && trip <= 1e-12,
        format!("{points} element laws, max asymmetry {asym:.1e}, {not_pd} not positive definite, round trip {trip:.1e} on 100 vectors"),
    )
}

fn c7_three_region() -> Outcome {
    let configs: Vec<_> = FIXTURES
        .iter()
        .map(|f| fixture(f))
        .filter(|c| c.scene.interface.is_some())
        .map(|c| {
            let mut c = with_checks(&c, &[CheckKind::ThreeRegion]);
            c.params.family_size = 20;
            c
        })
        .collect();
    let reports = collect_ok(run_all(&configs))?;
    let mut worst: f64 = 0.0;
    let (mut viol, mut members) = (0, 0);
    for r in &reports {
        for t in &r.checks.three_region {
            worst = worst.max(t.uniformity);
            viol += t.violations;
            members += t.members.len();
        }
    }
    // Zero input on a fixture interface.
    let c = fixture("concentric_two_phase");
    let (scene, u) = background_solution(&c);
    let zero = Solution::from_nodal(u.mesh.clone(), vec![C64::new(0.0, 0.0); u.u.len()]);
    let wp = c.weight_params().unwrap();
    let cap = wp.max_region_parameter();
    let triple = RegionTriple::new(wp, cap, cap, 1.0).unwrap();
    let chart =
        FlatteningMap::for_interface(scene.interface.as_ref().unwrap(), &Vec2::new(0.5, 0.0), scene.rho0, scene.k0)
            .unwrap();
    let z = check_three_region(&zero, &triple, &chart, &RegionQuadrature::default()).map_err(|e| e.to_string())?;
    let zero_ok = z.lhs == 0.0 && !z.violation_candidate;
    check(
        worst < 50.0 && viol == 0 && zero_ok && members >= 20 * reports.len(),
        format!(
            "{} interfaces, {members} member checks, max uniformity {worst:.3}, {viol} zero-input violations, zero field lhs {:.1e}",
            reports.len(),
            z.lhs
        ),
    )
}

fn c8_scaling() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for f in ["concentric_two_phase", "ellipse_interface"] {
        let (_, u) = background_solution(&fixture(f));
        let region = Shape::disk(Vec2::new(0.1, 0.0), 0.5);
        for theta in [0.5, 0.7, 1.0] {
            let r = scaling_identity_check(&u, &region, theta, 32, 3000).map_err(|e| e.to_string())?;
            worst = worst.max(r.residual);
            n += 1;
        }
    }
    check(worst < 1e-3, format!("{n} checks, max relative residual {worst:.2e}"))
}

fn c9_chain() -> Outcome {
    let configs: Vec<_> = FIXTURES.iter().map(|f| with_checks(&fixture(f), &[CheckKind::Chain])).collect();
    let reports = collect_ok(run_all(&configs))?;
    let mut bad = Vec::new();
    let mut chains = 0;
    for r in &reports {
        let c = r.checks.chain.as_ref().unwrap();
        chains += c.chains;
        if !(c.disjoint && c.nested && c.certified && c.d_holds && (c.n_max as f64) <= c.n_bound) {
            bad.push(r.config.name.clone());
        }
    }
    check(
        bad.is_empty(),
        format!("{} fixtures, {chains} chains certified{}", reports.len(), if bad.is_empty() { String::new() } else { format!("; failing: {}", bad.join(", ")) }),
    )
}

fn size_scenario(name: String, center: [f64; 2], radius: f64) -> ExperimentConfig {
    let base = with_checks(&fixture("concentric_two_phase"), &[CheckKind::Energy, CheckKind::Size, CheckKind::Fatness]);
    edit(&base, |v| {
        v["name"] = json!(name);
        v["scene"]["inclusion"] = json!({"kind": "disk", "center": center, "radius": radius});
    })
}

fn c10_size(suite_start: Instant) -> Outcome {
    let train = [
        ([0.0, 0.0], 0.1),
        ([0.0, 0.0], 0.25),
        ([0.2, 0.1], 0.2),
        ([-0.2, 0.0], 0.15),
        ([0.0, 0.3], 0.1),
        ([0.55, 0.0], 0.1),
        ([-0.4, -0.4], 0.12),
        ([0.0, -0.5], 0.2),
        ([0.3, 0.3], 0.08),
        ([-0.6, 0.2], 0.15),
    ];
    let held = [([0.1, -0.1], 0.18), ([-0.3, 0.3], 0.12), ([0.35, -0.35], 0.1), ([-0.1, 0.6], 0.12)];
    let mut configs: Vec<_> = train.iter().enumerate().map(|(i, (c, r))| size_scenario(format!("train{i}"), *c, *r)).collect();
    configs.extend(held.iter().enumerate().map(|(i, (c, r))| size_scenario(format!("held{i}"), *c, *r)));
    configs.push(with_checks(&fixture("crossing_inclusion"), &[CheckKind::Energy, CheckKind::Size, CheckKind::Fatness]));
    let reports = collect_ok(run_all(&configs))?;
    let sample = |r: &RunReport| {
        let p = r.power.as_ref().unwrap();
        CalibrationSample {
            area: r.mesh.inclusion_area,
            delta_w_re: p.delta_w[0],
            w0_free_re: p.w0_free[0],
            case: if p.case == "case_i" { JumpCase::CaseI } else { JumpCase::CaseII },
        }
    };
    let samples: Vec<_> = reports[..train.len()].iter().map(sample).collect();
    let cal = calibrate_constants(&samples).map_err(|e| e.to_string())?;
    let mut misses = Vec::new();
    let crossing = reports.last().unwrap().admissibility.inclusion_crosses_interface;
    for r in &reports[train.len()..] {
        let s = sample(r);
        let fat = r.checks.fatness.as_ref().is_some_and(|f| f.ok);
        let e = estimate_size(s.delta_w_re, s.w0_free_re, s.case, &cal.constants, fat, Some(s.area))
            .map_err(|e| e.to_string())?;
        if !(e.lower <= s.area && s.area <= e.upper) {
            misses.push(format!("{}: |D| {:.4e} not in [{:.4e}, {:.4e}]", r.config.name, s.area, e.lower, e.upper));
        }
    }
    let secs = suite_start.elapsed().as_secs_f64();
    check(
        misses.is_empty() && crossing && secs < 900.0,
        format!(
            "C1 = {:.4}, C2 = {:.4} from {} scenarios; 5 held out, crossing inclusion included: {crossing}; suite time so far {secs:.1} s{}",
            cal.constants.c1,
            cal.constants.c2,
            cal.used,
            if misses.is_empty() { String::new() } else { format!("; {}", misses.join("; ")) }
        ),
    )
}

fn c11_layer() -> Outcome {
    let c = with_checks(&fixture("one_phase_disk"), &[CheckKind::Layer]);
    let r = run(&c).map_err(|e| e.to_string())?.report;
    let l = r.checks.layer.unwrap();
    check(
        l.exponent >= 0.4,
        format!("exponent {:.4} over a = {:?} (threshold 0.4)", l.exponent, l.a),
    )
}

fn main() {
    let start = Instant::now();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("dipole oracle", Box::new(c1_dipole)),
        ("two-phase series oracle", Box::new(c2_two_phase)),
        ("null perturbation", Box::new(c3_null)),
        ("energy identities", Box::new(c4_identities)),
        ("energy bracket and sign", Box::new(c5_bracket)),
        ("mixed-variable transform", Box::new(c6_transform)),
        ("three-region uniformity", Box::new(c7_three_region)),
        ("scaling identity", Box::new(c8_scaling)),
        ("chain propagation", Box::new(c9_chain)),
        ("size estimation", Box::new(move || c10_size(start))),
        ("boundary layer", Box::new(c11_layer)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1} s]", i + 1)
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
