//! One experiment: admissibility, mesh, solves, energy, checks and size bounds.

use std::sync::Arc;
use std::time::Instant;

use eitlab_core::coefficients::{
    check_ellipticity, check_inclusion_bounds, check_jump_condition_samples, epsilon_distance, Coefficients, JumpCase,
};
use eitlab_core::energy::{bracket_constants, power_report, BracketOutcome, PowerReport};
use eitlab_core::estimator::{
    boundary_norm_ratio, check_fatness, estimate_size, interior_gradient_sup, sigma_range, surrogate_ball_radius,
    surrogate_constants, ConstantsSource, SizeConstants, SurrogateInputs,
};
use eitlab_core::geometry::{FlatteningMap, RegionTriple, Scene, Shape, Side};
use eitlab_core::mesh::Mesh;
use eitlab_core::smallness::{
    boundary_layer, check_three_ball_family, check_three_region_family, lipschitz_smallness, propagate_chain,
    BallMode, BallQuadrature, ChainOptions, ExponentRule, FamilySummary, RegionQuadrature, ThreeBallOptions,
};
use eitlab_core::solver::{background_laws, perturbed_laws, NeumannData, Operator, Solution};
use eitlab_core::{Error, Vec2, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{CheckKind, ExperimentConfig};
use crate::report::*;
use crate::LabError;

/// Largest acceptable `max / median` of fitted constants over a family.
pub const UNIFORMITY_LIMIT: f64 = 50.0;
/// Smallest acceptable boundary-layer decay exponent, `1/n - 0.1` with `n = 2`.
pub const LAYER_EXPONENT_MIN: f64 = 0.4;

pub struct RunOutput {
    pub report: RunReport,
    pub timings: Timings,
}

struct Clock {
    t: Instant,
    timings: Timings,
}

impl Clock {
    fn new() -> Self {
        Clock {
            t: Instant::now(),
            timings: Timings::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        *self.timings.entry(stage.to_string()).or_default() += (now - self.t).as_secs_f64();
        self.t = now;
    }
}

fn c2(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn hypothesis(name: &'static str, detail: String) -> LabError {
    LabError::Core(Error::Hypothesis { hypothesis: name, detail })
}

/// Uniform points of `region` drawn from its bounding box.
fn sample_in(rng: &mut ChaCha8Rng, shape: &Shape, n: usize) -> Vec<Vec2> {
    let bb = shape.bbox();
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 200 * n.max(1) {
        tries += 1;
        let p = Vec2::new(rng.random_range(bb.min.x..bb.max.x), rng.random_range(bb.min.y..bb.max.y));
        if shape.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn eigen_range(min: f64, max: f64, pass: bool) -> EigenRange {
    EigenRange { min, max, pass }
}

/// Structural hypotheses on the coefficients, tested at random sample points.
/// Returns the report section and the jump case on the inclusion.
pub fn admissibility(
    config: &ExperimentConfig,
    scene: &Scene,
    coeffs: &Coefficients,
) -> Result<(Admissibility, JumpCase), LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.params.samples.max(1);
    let pts = sample_in(&mut rng, &scene.outer, n);
    let bg = &coeffs.background;
    let lambda0 = bg.lambda0;
    let (plus, minus): (Vec<Vec2>, Vec<Vec2>) = pts.iter().partition(|p| scene.side_of(p) == Side::Plus);
    let mut plus = plus;
    // Extremes of affine fields sit on the boundary.
    plus.extend(scene.outer.boundary_polyline(0.05));
    let rp = check_ellipticity(|p| bg.sigma(Side::Plus, p), &plus, lambda0)?;
    if !rp.pass {
        return Err(hypothesis(
            "boundedness and ellipticity",
            format!(
                "sigma on the outer phase has eigenvalues in [{:.4}, {:.4}], outside [{lambda0}, {}]",
                rp.min_eig,
                rp.max_eig,
                1.0 / lambda0
            ),
        ));
    }
    let sigma_minus = match &scene.interface {
        Some(sigma) => {
            let mut inner = minus;
            inner.extend(sample_in(&mut rng, sigma, n / 4 + 1));
            let rm = check_ellipticity(|p| bg.sigma(Side::Minus, p), &inner, lambda0)?;
            if !rm.pass {
                return Err(hypothesis(
                    "boundedness and ellipticity",
                    format!(
                        "sigma on the inner phase has eigenvalues in [{:.4}, {:.4}], outside [{lambda0}, {}]",
                        rm.min_eig,
                        rm.max_eig,
                        1.0 / lambda0
                    ),
                ));
            }
            Some(eigen_range(rm.min_eig, rm.max_eig, rm.pass))
        }
        None => None,
    };

    let mut adm = Admissibility {
        samples: pts.len(),
        sigma_plus: eigen_range(rp.min_eig, rp.max_eig, rp.pass),
        sigma_minus,
        inclusion_minus: None,
        inclusion_plus: None,
        jump_case: JumpCase::None.name().into(),
        epsilon_distance: None,
        epsilon_close: None,
        inclusion_crosses_interface: scene.inclusion_crosses_interface(),
        identical_laws: false,
    };
    let mut case = JumpCase::None;
    if let (Some(d), Some(law)) = (&scene.inclusion, &coeffs.inclusion) {
        let dpts = sample_in(&mut rng, d, n / 2 + 1);
        let laws: Vec<_> = dpts
            .iter()
            .map(|p| {
                let side = scene.side_of(p);
                (*p, coeffs.background_law(side, p), coeffs.perturbed_law(side, true, p))
            })
            .collect();
        let b = check_inclusion_bounds(laws.iter().copied(), law.lambda1)?;
        adm.inclusion_minus = Some(eigen_range(b.minus_range.0, b.minus_range.1, b.pass));
        adm.inclusion_plus = Some(eigen_range(b.plus_range.0, b.plus_range.1, b.pass));
        if !b.pass {
            return Err(hypothesis(
                "boundedness and ellipticity",
                format!(
                    "inclusion law with lambda1 = {}: sigma1 - zeta1 in [{:.4}, {:.4}], sigma1 + zeta1 in [{:.4}, {:.4}], |eps| <= {:.4}",
                    law.lambda1, b.minus_range.0, b.minus_range.1, b.plus_range.0, b.plus_range.1, b.eps_norm
                ),
            ));
        }
        case = check_jump_condition_samples(laws.iter().map(|(_, l0, l1)| (l0.sigma, l1.sigma, l1.zeta)), law.varrho);
        adm.jump_case = case.name().into();
        let dist = epsilon_distance(
            |p| coeffs.background_law(scene.side_of(p), p).epsilon,
            |p| coeffs.perturbed_law(scene.side_of(p), true, p).epsilon,
            &dpts,
        );
        adm.epsilon_distance = Some(dist);
        adm.epsilon_close = Some(dist <= law.delta_tol);
        adm.identical_laws = laws.iter().all(|(_, l0, l1)| l0 == l1);
        if config.wants(CheckKind::Size) && case == JumpCase::None && !adm.identical_laws {
            return Err(hypothesis(
                "jump condition",
                format!("neither sign holds with varrho = {} on the inclusion", law.varrho),
            ));
        }
        if (config.wants(CheckKind::Energy) || config.wants(CheckKind::Size)) && dist > law.delta_tol {
            return Err(hypothesis(
                "permittivity closeness",
                format!("|eps1 - eps0| reaches {dist:.4}, above delta_tol = {}", law.delta_tol),
            ));
        }
    }
    Ok((adm, case))
}

/// Random Fourier data with modes 1..=4, one per family member.
fn family_data(mesh: &Mesh, seed: u64, n: usize) -> Vec<NeumannData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n)
        .map(|_| {
            let coef: Vec<(f64, f64)> = (0..4).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            NeumannData::from_fn(
                mesh,
                |p| {
                    let t = p.y.atan2(p.x);
                    let v: f64 = coef
                        .iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let k = (k + 1) as f64;
                            a * (k * t).cos() + b * (k * t).sin()
                        })
                        .sum();
                    C64::new(v, 0.0)
                },
                true,
            )
        })
        .collect()
}

fn family_rows(s: &FamilySummary) -> Vec<CheckRow> {
    s.checks
        .iter()
        .map(|c| CheckRow {
            lhs: c.lhs,
            inner: c.inner,
            outer: c.outer,
            c_fit: c.c_fit,
            margin: c.margin,
            violation_candidate: c.violation_candidate,
        })
        .collect()
}

fn shape_center(s: &Shape) -> Vec2 {
    match s {
        Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => *center,
        Shape::Polygon { vertices } => vertices.iter().sum::<Vec2>() / vertices.len() as f64,
    }
}

fn power_summary(r: &PowerReport) -> PowerSummary {
    let (bracket, degenerate) = match r.bracket {
        Some(BracketOutcome::Bracket(b)) => (
            Some(BracketSummary {
                ratio: b.ratio,
                kappa_lo: b.kappa_lo,
                kappa_hi: b.kappa_hi,
                sign_ok: b.sign_ok,
                holds: b.holds,
                difference_definite: b.difference_definite,
            }),
            false,
        ),
        Some(BracketOutcome::Degenerate) => (None, true),
        None => (None, false),
    };
    PowerSummary {
        w0: c2(r.w0),
        w1: c2(r.w1),
        delta_w: c2(r.delta_w),
        w0_free: c2(r.w0_free),
        free_energy_mismatch: r.free_energy_mismatch,
        grad_energy_d: r.grad_energy_d,
        identities: IdentitySummary {
            basic: r.identities.basic,
            id1: r.identities.id1,
            id2: r.identities.id2,
            max_rel_diff: r.identities.max_rel_diff,
        },
        case: r.case.name().into(),
        bracket,
        bracket_degenerate: degenerate,
    }
}

/// Size constants from the measured background solution.
fn surrogate(
    scene: &Scene,
    u0: &Solution,
    u1: &Solution,
    case: JumpCase,
) -> Result<SizeConstants, LabError> {
    let (kappa_lo, kappa_hi, _) = bracket_constants(u0, u1, case)?;
    let rho = surrogate_ball_radius(scene.d0, scene.d1);
    let spacing = scene.outer.bbox().diameter() / 40.0;
    let lip = lipschitz_smallness(u0, &scene.outer, rho, spacing, &BallQuadrature::default())?;
    let (sigma_min, sigma_max) = sigma_range(u0);
    Ok(surrogate_constants(&SurrogateInputs {
        kappa_lo,
        kappa_hi,
        interior_ratio: interior_gradient_sup(u0).ratio,
        lipschitz_c: lip.c_emp,
        ball_radius: rho,
        sigma_min,
        sigma_max,
    }))
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, LabError> {
    let mut clock = Clock::new();
    config.validate_fields()?;
    let scene = config.scene()?;
    let coeffs = config.coefficients();
    let wp = if config.wants(CheckKind::ThreeRegion) {
        Some(config.weight_params()?)
    } else {
        None
    };
    let (admissibility, case) = admissibility(config, &scene, &coeffs)?;
    clock.lap("admissibility");

    let mesh = Arc::new(Mesh::build(&scene, &config.mesh_options())?);
    clock.lap("mesh");

    let fourier = config.data.to_fourier();
    let data = NeumannData::from_fn(&mesh, |p| fourier.eval(p), true);
    let op0 = Operator::new(mesh.clone(), background_laws(&mesh, &coeffs), None)?;
    let u0 = op0.solve(&data)?;
    let stats = op0.factor_stats();
    let needs_u1 = config.wants(CheckKind::Energy) || config.wants(CheckKind::Size);
    let u1 = if needs_u1 {
        Some(Operator::new(mesh.clone(), perturbed_laws(&mesh, &coeffs), None)?.solve(&data)?)
    } else {
        None
    };
    clock.lap("solve");

    let mut violations = Vec::new();
    let true_area = mesh.inclusion_area();
    let power = match &u1 {
        Some(u1) => {
            let r = power_report(&u0, u1, case, config.params.bracket_tol)?;
            if let Some(BracketOutcome::Bracket(b)) = r.bracket {
                if !b.holds {
                    violations.push(format!(
                        "energy bracket: ratio {:.6e} outside [{:.6e}, {:.6e}] or wrong sign (Re dW = {:.6e}, {})",
                        b.ratio,
                        b.kappa_lo,
                        b.kappa_hi,
                        b.re_delta_w,
                        case.name()
                    ));
                }
            }
            Some(r)
        }
        None => None,
    };
    clock.lap("energy");

    let mut checks = CheckResults::default();
    let fatness = if config.wants(CheckKind::Fatness) || config.wants(CheckKind::Size) {
        let d = scene.inclusion.as_ref().expect("validated");
        let f = check_fatness(d, scene.d1, 400)?;
        checks.fatness = Some(FatnessSummary {
            d1: f.d1,
            area: f.area,
            eroded_area: f.eroded_area,
            ratio: f.ratio,
            ok: f.ok,
        });
        Some(f)
    } else {
        None
    };

    let size = match (&power, &u1, config.wants(CheckKind::Size)) {
        // Without an inclusion law both problems coincide: there is nothing to size.
        (Some(p), Some(_), true) if admissibility.identical_laws => Some(SizeSummary {
            delta_w_re: p.delta_w.re,
            w0_free_re: p.w0_free.re,
            lower: 0.0,
            upper: 0.0,
            true_area: None,
            fatness_ok: fatness.is_some_and(|f| f.ok),
            upper_conditional: false,
            constants_source: "none".into(),
            c1: 0.0,
            c2: 0.0,
            counterexample_candidate: false,
            brackets_truth: None,
        }),
        (Some(p), Some(u1), true) => {
            let constants = match &config.params.size_constants {
                Some(c) => SizeConstants {
                    c1: c.c1,
                    c2: c.c2,
                    source: ConstantsSource::Calibrated,
                },
                None => surrogate(&scene, &u0, u1, case)?,
            };
            let fat_ok = fatness.is_some_and(|f| f.ok);
            let e = estimate_size(p.delta_w.re, p.w0_free.re, case, &constants, fat_ok, Some(true_area))?;
            if e.counterexample_candidate {
                violations.push(format!("size: power gap vanishes although |D| = {true_area:.6e}"));
            } else if e.brackets_truth == Some(false) {
                violations.push(format!(
                    "size: |D| = {true_area:.6e} outside [{:.6e}, {:.6e}]",
                    e.lower, e.upper
                ));
            }
            Some(SizeSummary {
                delta_w_re: e.delta_w_re,
                w0_free_re: e.w0_free_re,
                lower: e.lower,
                upper: e.upper,
                true_area: e.true_area,
                fatness_ok: e.fatness_ok,
                upper_conditional: e.upper_conditional,
                constants_source: e.constants_source.name().into(),
                c1: constants.c1,
                c2: constants.c2,
                counterexample_candidate: e.counterexample_candidate,
                brackets_truth: e.brackets_truth,
            })
        }
        _ => None,
    };
    clock.lap("size");

    if config.wants(CheckKind::InteriorGradient) {
        let g = interior_gradient_sup(&u0);
        checks.interior_gradient = Some(InteriorGradientSummary {
            sup: g.sup,
            l2: g.l2,
            ratio: g.ratio,
        });
    }
    if config.wants(CheckKind::BoundaryRatio) {
        checks.boundary_ratio = Some(boundary_norm_ratio(&mesh, &data)?);
    }

    let family = if config.wants(CheckKind::ThreeRegion) || config.wants(CheckKind::ThreeBall) {
        let datas = family_data(&mesh, config.seed, config.params.family_size);
        let fam = datas.par_iter().map(|d| op0.solve(d)).collect::<Result<Vec<_>, _>>()?;
        clock.lap("family");
        fam
    } else {
        Vec::new()
    };

    if let (Some(wp), Some(sigma)) = (wp, scene.interface.as_ref()) {
        let spec = &config.params.three_region;
        let hint = match spec.anchor {
            Some(a) => Vec2::new(a[0], a[1]),
            None => {
                let bb = sigma.bbox();
                Vec2::new(bb.max.x, 0.5 * (bb.min.y + bb.max.y))
            }
        };
        let chart = FlatteningMap::for_interface(sigma, &hint, scene.rho0, scene.k0)?;
        let q = RegionQuadrature {
            lateral: spec.lateral,
            normal: spec.normal,
        };
        let cap = wp.max_region_parameter();
        for t in &spec.triples {
            let triple = RegionTriple::new(wp, t[0] * cap, t[1] * cap, t[2])?;
            let s = check_three_region_family(&family, &triple, &chart, &q)?;
            if s.violations > 0 || s.uniformity >= UNIFORMITY_LIMIT {
                violations.push(format!(
                    "three-region (R1 = {:.3e}, R2 = {:.3e}, theta = {}): uniformity {:.3}, {} zero-input violations",
                    triple.r1, triple.r2, triple.theta, s.uniformity, s.violations
                ));
            }
            checks.three_region.push(ThreeRegionSummary {
                r1: triple.r1,
                r2: triple.r2,
                theta: triple.theta,
                xi: triple.xi(),
                c_max: s.c_max,
                c_median: s.c_median,
                uniformity: s.uniformity,
                violations: s.violations,
                members: family_rows(&s),
            });
        }
        clock.lap("three_region");
    }

    if config.wants(CheckKind::ThreeBall) {
        let spec = &config.params.three_ball;
        let opts = ThreeBallOptions {
            rule: ExponentRule::Carleman {
                s: 1.0,
                lambda0: coeffs.background.lambda0,
            },
            interface_tau: spec.interface_tau,
            quadrature: BallQuadrature::default(),
        };
        let [r1, r2, r3] = spec.radii;
        for c in &spec.centers {
            let q = Vec2::new(c[0], c[1]);
            let (s, tau, mode) = check_three_ball_family(&family, &scene, &q, r1, r2, r3, &opts)?;
            if s.violations > 0 || s.uniformity >= UNIFORMITY_LIMIT {
                violations.push(format!(
                    "three-ball at ({}, {}): uniformity {:.3}, {} zero-input violations",
                    c[0], c[1], s.uniformity, s.violations
                ));
            }
            checks.three_ball.push(ThreeBallSummary {
                center: *c,
                radii: spec.radii,
                tau,
                mode: match mode {
                    BallMode::OneSided => "one_sided".into(),
                    BallMode::NearInterface => "near_interface".into(),
                },
                c_max: s.c_max,
                c_median: s.c_median,
                uniformity: s.uniformity,
                violations: s.violations,
            });
        }
        clock.lap("three_ball");
    }

    if config.wants(CheckKind::Chain) {
        let d = scene.inclusion.as_ref().expect("validated");
        let spec = &config.params.chain;
        let start = spec.start.map(|s| Vec2::new(s[0], s[1])).unwrap_or_else(|| shape_center(d));
        let r = spec.r.unwrap_or(-0.5 * d.signed_distance(&start));
        let h = spec.h.unwrap_or(scene.d0);
        let mut opts = ChainOptions::new(ThreeBallOptions::carleman(coeffs.background.lambda0));
        opts.max_targets = spec.max_targets;
        let c = propagate_chain(&u0, &scene, d, &start, r, h, &opts)?;
        if !(c.certified && c.d_holds && c.disjoint && c.nested) {
            violations.push(format!(
                "chain: certified {}, domain bound {}, disjoint {}, nested {}",
                c.certified, c.d_holds, c.disjoint, c.nested
            ));
        }
        checks.chain = Some(ChainSummary {
            radii: c.radii,
            tau: c.tau,
            constant: c.constant,
            chains: c.chains.len(),
            targets_total: c.targets_total,
            n_max: c.n_max,
            n_bound: c.n_bound,
            disjoint: c.disjoint,
            nested: c.nested,
            steps_exact: c.steps_exact,
            certified: c.certified,
            d_norm_sq: c.d_norm_sq,
            d_bound_sq: c.d_bound_sq,
            d_holds: c.d_holds,
            theorem_radius_ok: c.theorem_radius_ok,
        });
        clock.lap("chain");
    }

    if config.wants(CheckKind::Layer) {
        let spec = &config.params.layer;
        let g2 = data.l2_norm * data.l2_norm;
        let l = boundary_layer(&u0, &scene.outer, &spec.a_values, g2, spec.level)?;
        let a_min = spec.a_values.iter().copied().fold(f64::INFINITY, f64::min);
        let spacing = scene.outer.bbox().diameter() / 40.0;
        let lip = lipschitz_smallness(&u0, &scene.outer, a_min, spacing, &BallQuadrature::default())?;
        if !(l.exponent >= LAYER_EXPONENT_MIN) {
            violations.push(format!("boundary layer: decay exponent {:.4} below {LAYER_EXPONENT_MIN}", l.exponent));
        }
        checks.layer = Some(LayerSummary {
            a: l.a,
            energy: l.energy,
            exponent: l.exponent,
            normalized: l.normalized,
            lipschitz_c: lip.c_emp,
        });
        clock.lap("layer");
    }

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        mesh: MeshSummary {
            h: mesh.stats.h,
            nodes: mesh.num_nodes(),
            elements: mesh.num_elements(),
            min_angle_deg: mesh.stats.min_angle_deg,
            max_edge: mesh.stats.max_edge,
            total_area: mesh.total_area(),
            inclusion_area: true_area,
        },
        admissibility,
        solve: SolveSummary {
            dofs: u0.diagnostics.dofs,
            envelope: stats.envelope,
            min_pivot_ratio: u0.diagnostics.min_pivot_ratio,
            weak_residual_background: u0.diagnostics.weak_residual,
            weak_residual_perturbed: u1.as_ref().map(|u| u.diagnostics.weak_residual),
        },
        power: power.as_ref().map(power_summary),
        size,
        checks,
        violations,
    };
    Ok(RunOutput {
        report,
        timings: clock.timings,
    })
}

/// Validation without solving: config fields, scene geometry, coefficient
/// hypotheses and the mesh.
pub fn validate(config: &ExperimentConfig) -> Result<(Admissibility, MeshSummary), LabError> {
    config.validate_fields()?;
    let scene = config.scene()?;
    if config.wants(CheckKind::ThreeRegion) {
        config.weight_params()?;
    }
    let (adm, _) = admissibility(config, &scene, &config.coefficients())?;
    let mesh = Mesh::build(&scene, &config.mesh_options())?;
    Ok((
        adm,
        MeshSummary {
            h: mesh.stats.h,
            nodes: mesh.num_nodes(),
            elements: mesh.num_elements(),
            min_angle_deg: mesh.stats.min_angle_deg,
            max_edge: mesh.stats.max_edge,
            total_area: mesh.total_area(),
            inclusion_area: mesh.inclusion_area(),
        },
    ))
}
