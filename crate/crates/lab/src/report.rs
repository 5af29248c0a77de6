//! The JSON run report. Complex numbers are written as `[re, im]`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::LabError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub h: f64,
    pub nodes: usize,
    pub elements: usize,
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub total_area: f64,
    pub inclusion_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRange {
    pub min: f64,
    pub max: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub samples: usize,
    pub sigma_plus: EigenRange,
    pub sigma_minus: Option<EigenRange>,
    /// Eigenvalue ranges of `sigma_1 - zeta_1` and `sigma_1 + zeta_1`.
    pub inclusion_minus: Option<EigenRange>,
    pub inclusion_plus: Option<EigenRange>,
    pub jump_case: String,
    pub epsilon_distance: Option<f64>,
    pub epsilon_close: Option<bool>,
    pub inclusion_crosses_interface: bool,
    /// The inclusion law equals the background at every sample: a null perturbation.
    pub identical_laws: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub dofs: usize,
    pub envelope: usize,
    pub min_pivot_ratio: f64,
    pub weak_residual_background: f64,
    pub weak_residual_perturbed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySummary {
    pub basic: f64,
    pub id1: f64,
    pub id2: f64,
    pub max_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketSummary {
    pub ratio: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub sign_ok: bool,
    pub holds: bool,
    pub difference_definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub w0: [f64; 2],
    pub w1: [f64; 2],
    /// `W1 - W0`.
    pub delta_w: [f64; 2],
    pub w0_free: [f64; 2],
    pub free_energy_mismatch: f64,
    pub grad_energy_d: f64,
    pub identities: IdentitySummary,
    pub case: String,
    /// `None` without a jump case; `degenerate` when the ratio is `0/0`.
    pub bracket: Option<BracketSummary>,
    pub bracket_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub delta_w_re: f64,
    pub w0_free_re: f64,
    pub lower: f64,
    pub upper: f64,
    pub true_area: Option<f64>,
    pub fatness_ok: bool,
    pub upper_conditional: bool,
    pub constants_source: String,
    pub c1: f64,
    pub c2: f64,
    pub counterexample_candidate: bool,
    pub brackets_truth: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatnessSummary {
    pub d1: f64,
    pub area: f64,
    pub eroded_area: f64,
    pub ratio: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorGradientSummary {
    pub sup: f64,
    pub l2: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub lhs: f64,
    pub inner: f64,
    pub outer: f64,
    pub c_fit: f64,
    pub margin: f64,
    pub violation_candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeRegionSummary {
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
    pub xi: f64,
    pub c_max: f64,
    pub c_median: f64,
    pub uniformity: f64,
    pub violations: usize,
    pub members: Vec<CheckRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeBallSummary {
    pub center: [f64; 2],
    pub radii: [f64; 3],
    pub tau: f64,
    pub mode: String,
    pub c_max: f64,
    pub c_median: f64,
    pub uniformity: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub radii: [f64; 3],
    pub tau: f64,
    pub constant: f64,
    pub chains: usize,
    pub targets_total: usize,
    pub n_max: usize,
    pub n_bound: f64,
    pub disjoint: bool,
    pub nested: bool,
    pub steps_exact: bool,
    pub certified: bool,
    pub d_norm_sq: f64,
    pub d_bound_sq: f64,
    pub d_holds: bool,
    pub theorem_radius_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub a: Vec<f64>,
    pub energy: Vec<f64>,
    pub exponent: f64,
    pub normalized: Vec<f64>,
    pub lipschitz_c: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckResults {
    pub fatness: Option<FatnessSummary>,
    pub interior_gradient: Option<InteriorGradientSummary>,
    /// `||g||_{L^2} / ||g||_{H^{-1/2}}` of the boundary data.
    pub boundary_ratio: Option<f64>,
    pub three_region: Vec<ThreeRegionSummary>,
    pub three_ball: Vec<ThreeBallSummary>,
    pub chain: Option<ChainSummary>,
    pub layer: Option<LayerSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub mesh: MeshSummary,
    pub admissibility: Admissibility,
    pub solve: SolveSummary,
    pub power: Option<PowerSummary>,
    pub size: Option<SizeSummary>,
    pub checks: CheckResults,
    /// Inequalities that failed empirically; nonempty means exit status 3.
    pub violations: Vec<String>,
}

/// Wall-clock seconds per stage; kept out of the report so reports stay reproducible.
pub type Timings = BTreeMap<String, f64>;

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| LabError::Config(format!("report: {e}")))?;
        match v.get("schema_version").and_then(|s| s.as_u64()) {
            Some(s) if s == SCHEMA_VERSION as u64 => {}
            Some(s) => {
                return Err(LabError::Config(format!(
                    "report schema_version {s} does not match {SCHEMA_VERSION}"
                )))
            }
            None => return Err(LabError::Config("report lacks field `schema_version`".into())),
        }
        serde_json::from_value(v).map_err(|e| LabError::Config(format!("report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
