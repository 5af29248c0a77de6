//! Experiment configuration: one JSON document describing the scene, the
//! coefficients, the boundary data, the mesh and the checks to run.
//!
//! Lengths are in units of the outer domain (the fixtures use the unit disk);
//! conductivities and permittivities are dimensionless, relative to a
//! reference conductivity of 1.

use std::path::Path;

use eitlab_core::coefficients::{BackgroundTensor, Coefficients, InclusionLaw, LawTensor, TensorField};
use eitlab_core::geometry::{Scene, Shape, WeightParams};
use eitlab_core::mesh::MeshOptions;
use eitlab_core::solver::{FourierData, FourierMode};
use eitlab_core::{Mat2, Vec2, C64};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        /// Radians.
        #[serde(default)]
        angle: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl ShapeSpec {
    pub fn to_shape(&self) -> Shape {
        match self {
            ShapeSpec::Disk { center, radius } => Shape::disk(v2(center), *radius),
            ShapeSpec::Ellipse {
                center,
                semi_axes,
                angle,
            } => Shape::ellipse(v2(center), v2(semi_axes), *angle),
            ShapeSpec::Polygon { vertices } => Shape::polygon(vertices.iter().map(v2).collect()),
        }
    }
}

fn v2(p: &[f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn m2(m: &[[f64; 2]; 2]) -> Mat2 {
    Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// A real 2x2 tensor field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TensorSpec {
    Scalar(f64),
    Diag([f64; 2]),
    /// Row-major.
    Matrix([[f64; 2]; 2]),
    /// `base + x dx + y dy`.
    Affine {
        base: [[f64; 2]; 2],
        dx: [[f64; 2]; 2],
        dy: [[f64; 2]; 2],
    },
}

impl TensorSpec {
    pub fn to_field(&self) -> TensorField {
        match self {
            TensorSpec::Scalar(s) => TensorField::scalar(*s),
            TensorSpec::Diag([a, b]) => TensorField::diag(*a, *b),
            TensorSpec::Matrix(m) => TensorField::Constant(m2(m)),
            TensorSpec::Affine { base, dx, dy } => TensorField::Affine {
                base: m2(base),
                dx: m2(dx),
                dy: m2(dy),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LawTensorSpec {
    Absolute(TensorSpec),
    /// Increment over the background value at the same point.
    Offset(TensorSpec),
}

impl LawTensorSpec {
    fn to_law_tensor(&self) -> LawTensor {
        match self {
            LawTensorSpec::Absolute(t) => LawTensor::Absolute(t.to_field()),
            LawTensorSpec::Offset(t) => LawTensor::Offset(t.to_field()),
        }
    }
}

fn default_rho0() -> f64 {
    0.25
}
fn default_k0() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub outer: ShapeSpec,
    #[serde(default)]
    pub interface: Option<ShapeSpec>,
    #[serde(default)]
    pub inclusion: Option<ShapeSpec>,
    /// Chart radius of the interface.
    #[serde(default = "default_rho0")]
    pub rho0: f64,
    /// Curvature bound of the interface.
    #[serde(default = "default_k0")]
    pub k0: f64,
    /// Required distance of the inclusion from the outer boundary.
    pub d0: f64,
    /// Fatness depth of the inclusion.
    pub d1: f64,
}

fn unit_tensor() -> TensorSpec {
    TensorSpec::Scalar(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSpec {
    pub sigma1: LawTensorSpec,
    pub epsilon1: LawTensorSpec,
    pub zeta1: TensorSpec,
    pub lambda1: f64,
    pub varrho: f64,
    /// Allowed distance between inclusion and background permittivities.
    pub delta_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    /// Real conductivity on the outer phase `Omega_+`.
    pub sigma_plus: TensorSpec,
    /// Real conductivity on the phase enclosed by the interface.
    pub sigma_minus: TensorSpec,
    #[serde(default = "unit_tensor")]
    pub n_plus: TensorSpec,
    #[serde(default = "unit_tensor")]
    pub n_minus: TensorSpec,
    /// Permittivity scale: `epsilon_0 = gamma N`.
    #[serde(default)]
    pub gamma: f64,
    pub lambda0: f64,
    #[serde(default)]
    pub inclusion: Option<InclusionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: u32,
    /// `[re, im]` coefficient of `cos(k t)`.
    #[serde(default)]
    pub cos: [f64; 2],
    #[serde(default)]
    pub sin: [f64; 2],
}

/// Boundary current density as Fourier modes in the polar angle around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub center: [f64; 2],
    pub modes: Vec<ModeSpec>,
}

impl DataSpec {
    pub fn to_fourier(&self) -> FourierData {
        FourierData {
            center: v2(&self.center),
            modes: self
                .modes
                .iter()
                .map(|m| FourierMode {
                    k: m.k,
                    cos: C64::new(m.cos[0], m.cos[1]),
                    sin: C64::new(m.sin[0], m.sin[1]),
                })
                .collect(),
        }
    }
}

fn default_min_angle() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Target edge length.
    pub h: f64,
    #[serde(default = "default_min_angle")]
    pub min_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
    /// Defaults to `min(delta0, rho0 / 2)`.
    #[serde(default)]
    pub delta: Option<f64>,
    pub kappa0: f64,
    pub delta0: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec {
            alpha_plus: 2.0,
            alpha_minus: 1.0,
            beta: 0.1,
            delta: None,
            kappa0: 2.0,
            delta0: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Power gap, free energy, identities and the energy bracket.
    Energy,
    Size,
    Fatness,
    InteriorGradient,
    BoundaryRatio,
    ThreeRegion,
    ThreeBall,
    Chain,
    Layer,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Energy,
        CheckKind::Size,
        CheckKind::Fatness,
        CheckKind::InteriorGradient,
        CheckKind::BoundaryRatio,
        CheckKind::ThreeRegion,
        CheckKind::ThreeBall,
        CheckKind::Chain,
        CheckKind::Layer,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Energy => "energy",
            CheckKind::Size => "size",
            CheckKind::Fatness => "fatness",
            CheckKind::InteriorGradient => "interior_gradient",
            CheckKind::BoundaryRatio => "boundary_ratio",
            CheckKind::ThreeRegion => "three_region",
            CheckKind::ThreeBall => "three_ball",
            CheckKind::Chain => "chain",
            CheckKind::Layer => "layer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CheckKind::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Region parameters as fractions of the cap `R`, plus `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThreeRegionSpec {
    /// `[R1 / R, R2 / R, theta]` triples.
    pub triples: Vec<[f64; 3]>,
    /// Point near which the chart is anchored on the interface.
    pub anchor: Option<[f64; 2]>,
    pub lateral: usize,
    pub normal: usize,
}

impl Default for ThreeRegionSpec {
    fn default() -> Self {
        ThreeRegionSpec {
            triples: vec![[1.0, 1.0, 1.0], [1.0, 0.5, 1.0], [0.5, 1.0, 0.5]],
            anchor: None,
            lateral: 256,
            normal: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThreeBallSpec {
    pub centers: Vec<[f64; 2]>,
    pub radii: [f64; 3],
    /// Exponent for balls meeting the interface; fitted over the family if absent.
    pub interface_tau: Option<f64>,
}

impl Default for ThreeBallSpec {
    fn default() -> Self {
        ThreeBallSpec {
            centers: Vec::new(),
            radii: [0.02, 0.05, 0.2],
            interface_tau: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSpec {
    /// Defaults to the inclusion center (disk and ellipse inclusions).
    pub start: Option<[f64; 2]>,
    /// Start ball radius; defaults to half the inclusion inradius at the start.
    pub r: Option<f64>,
    /// Chain scale; defaults to `d0`.
    pub h: Option<f64>,
    pub max_targets: Option<usize>,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            start: None,
            r: None,
            h: None,
            max_targets: Some(64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerSpec {
    pub a_values: Vec<f64>,
    pub level: usize,
}

impl Default for LayerSpec {
    fn default() -> Self {
        LayerSpec {
            a_values: vec![0.02, 0.04, 0.08, 0.16],
            level: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckParamsSpec {
    /// Number of random boundary data in solution families.
    pub family_size: usize,
    /// Sample points for the admissibility checks.
    pub samples: usize,
    /// Relative slack of the energy bracket.
    pub bracket_tol: f64,
    /// Constants of the size bounds; the analytic surrogate is used when absent.
    pub size_constants: Option<ConstantsSpec>,
    pub three_region: ThreeRegionSpec,
    pub three_ball: ThreeBallSpec,
    pub chain: ChainSpec,
    pub layer: LayerSpec,
}

impl Default for CheckParamsSpec {
    fn default() -> Self {
        CheckParamsSpec {
            family_size: 20,
            samples: 400,
            bracket_tol: 0.05,
            size_constants: None,
            three_region: ThreeRegionSpec::default(),
            three_ball: ThreeBallSpec::default(),
            chain: ChainSpec::default(),
            layer: LayerSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub scene: SceneSpec,
    pub coefficients: CoefficientSpec,
    pub data: DataSpec,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub params: CheckParamsSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, c: CheckKind) -> bool {
        self.checks.contains(&c)
    }

    pub fn scene(&self) -> Result<Scene, LabError> {
        let s = &self.scene;
        Ok(Scene::new(
            s.outer.to_shape(),
            s.interface.as_ref().map(ShapeSpec::to_shape),
            s.inclusion.as_ref().map(ShapeSpec::to_shape),
            s.rho0,
            s.k0,
            s.d0,
            s.d1,
        )?)
    }

    pub fn coefficients(&self) -> Coefficients {
        let c = &self.coefficients;
        Coefficients {
            background: BackgroundTensor {
                m_plus: c.sigma_plus.to_field(),
                m_minus: c.sigma_minus.to_field(),
                n_plus: c.n_plus.to_field(),
                n_minus: c.n_minus.to_field(),
                gamma: c.gamma,
                lambda0: c.lambda0,
            },
            inclusion: c.inclusion.as_ref().map(|i| InclusionLaw {
                sigma1: i.sigma1.to_law_tensor(),
                epsilon1: i.epsilon1.to_law_tensor(),
                zeta1: i.zeta1.to_field(),
                lambda1: i.lambda1,
                varrho: i.varrho,
                delta_tol: i.delta_tol,
            }),
            lower: None,
        }
    }

    pub fn mesh_options(&self) -> MeshOptions {
        MeshOptions {
            h: self.mesh.h,
            min_angle_deg: self.mesh.min_angle_deg,
        }
    }

    pub fn weight_params(&self) -> Result<WeightParams, LabError> {
        let w = &self.weight;
        let delta = w.delta.unwrap_or(w.delta0.min(0.5 * self.scene.rho0));
        Ok(WeightParams::new(
            w.alpha_plus,
            w.alpha_minus,
            w.beta,
            delta,
            w.kappa0,
            w.delta0,
            self.scene.rho0,
        )?)
    }

    /// Checks that need no mesh: field ranges and check-specific parameters.
    pub fn validate_fields(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Config(m));
        if !(self.mesh.h > 0.0) {
            return bad(format!("mesh.h must be positive, got {}", self.mesh.h));
        }
        if !(self.coefficients.lambda0 > 0.0 && self.coefficients.lambda0 <= 1.0) {
            return bad(format!("coefficients.lambda0 must lie in (0, 1], got {}", self.coefficients.lambda0));
        }
        if self.data.modes.is_empty() || self.data.modes.iter().any(|m| m.k == 0) {
            return bad("data.modes must be nonempty with k >= 1".into());
        }
        let needs_inclusion = [CheckKind::Energy, CheckKind::Size, CheckKind::Fatness, CheckKind::InteriorGradient, CheckKind::Chain];
        for c in needs_inclusion {
            if self.wants(c) && self.scene.inclusion.is_none() {
                return bad(format!("check `{}` needs scene.inclusion", c.name()));
            }
        }
        if (self.wants(CheckKind::Energy) || self.wants(CheckKind::Size)) && self.coefficients.inclusion.is_none() {
            return bad("checks `energy` and `size` need coefficients.inclusion".into());
        }
        if self.wants(CheckKind::ThreeRegion) && self.scene.interface.is_none() {
            return bad("check `three_region` needs scene.interface".into());
        }
        if self.wants(CheckKind::ThreeBall) && self.params.three_ball.centers.is_empty() {
            return bad("check `three_ball` needs params.three_ball.centers".into());
        }
        if let Some(c) = &self.params.size_constants {
            if !(c.c1 >= 0.0 && c.c2 >= c.c1) {
                return bad(format!("params.size_constants must satisfy 0 <= c1 <= c2, got {} and {}", c.c1, c.c2));
            }
        }
        if self.params.family_size == 0 && (self.wants(CheckKind::ThreeRegion) || self.wants(CheckKind::ThreeBall)) {
            return bad("params.family_size must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "disk",
        "scene": {"outer": {"kind": "disk", "center": [0, 0], "radius": 1}, "d0": 0.2, "d1": 0.02},
        "coefficients": {"sigma_plus": {"scalar": 1}, "sigma_minus": {"scalar": 1}, "lambda0": 0.5},
        "data": {"modes": [{"k": 1, "cos": [1, 0]}]},
        "mesh": {"h": 0.1}
    }"#;

    #[test]
    fn defaults_and_round_trip() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.scene.rho0, 0.25);
        assert_eq!(c.params.family_size, 20);
        assert!(c.checks.is_empty());
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_json(&MINIMAL.replace("\"h\"", "\"hh\"")).unwrap_err();
        let m = e.to_string();
        assert!(m.contains("hh") && m.contains("line"), "{m}");
        let e = ExperimentConfig::from_json(&MINIMAL.replace(r#""mesh": {"h": 0.1}"#, r#""mesh": {}"#)).unwrap_err();
        assert!(e.to_string().contains("missing field `h`"), "{e}");
    }
}
