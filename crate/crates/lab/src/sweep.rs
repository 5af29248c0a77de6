//! Independent runs over values of one numeric config entry.

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::report::RunReport;
use crate::{run, LabError};

/// Copy of `config` with the numeric entry at the dotted `path` (array
/// indices as numbers, e.g. `scene.inclusion.center.0`) set to `value`.
pub fn set_param(config: &ExperimentConfig, path: &str, value: f64) -> Result<ExperimentConfig, LabError> {
    let mut v = serde_json::to_value(config).expect("config serializes");
    let mut cur = &mut v;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get_mut(key),
            Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| LabError::Config(format!("sweep parameter `{path}` does not exist (at `{key}`)")))?;
    }
    if !cur.is_number() {
        return Err(LabError::Config(format!("sweep parameter `{path}` is not numeric")));
    }
    *cur = if cur.is_u64() && value >= 0.0 && value.fract() == 0.0 {
        Value::from(value as u64)
    } else {
        Value::from(value)
    };
    serde_json::from_value(v).map_err(|e| LabError::Config(format!("sweep parameter `{path}` = {value}: {e}")))
}

/// Headline numbers of one sweep member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    /// `ok`, `violation` or `error`.
    pub status: String,
    pub error: String,
    pub w0_re: Option<f64>,
    pub delta_w_re: Option<f64>,
    pub grad_energy_d: Option<f64>,
    pub bracket_ratio: Option<f64>,
    pub kappa_lo: Option<f64>,
    pub kappa_hi: Option<f64>,
    pub true_area: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub three_region_uniformity: Option<f64>,
    pub layer_exponent: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 14] = [
    "value",
    "status",
    "error",
    "w0_re",
    "delta_w_re",
    "grad_energy_d",
    "bracket_ratio",
    "kappa_lo",
    "kappa_hi",
    "true_area",
    "lower",
    "upper",
    "three_region_uniformity",
    "layer_exponent",
];

impl SweepRow {
    fn from_result(value: f64, r: &Result<RunReport, LabError>) -> Self {
        match r {
            Ok(rep) => {
                let p = rep.power.as_ref();
                let b = p.and_then(|p| p.bracket.as_ref());
                let s = rep.size.as_ref();
                SweepRow {
                    value,
                    status: if rep.violations.is_empty() { "ok" } else { "violation" }.into(),
                    error: String::new(),
                    w0_re: p.map(|p| p.w0[0]),
                    delta_w_re: p.map(|p| p.delta_w[0]),
                    grad_energy_d: p.map(|p| p.grad_energy_d),
                    bracket_ratio: b.map(|b| b.ratio),
                    kappa_lo: b.map(|b| b.kappa_lo),
                    kappa_hi: b.map(|b| b.kappa_hi),
                    true_area: Some(rep.mesh.inclusion_area),
                    lower: s.map(|s| s.lower),
                    upper: s.map(|s| s.upper),
                    three_region_uniformity: rep
                        .checks
                        .three_region
                        .iter()
                        .map(|t| t.uniformity)
                        .reduce(f64::max),
                    layer_exponent: rep.checks.layer.as_ref().map(|l| l.exponent),
                }
            }
            Err(e) => SweepRow {
                value,
                status: "error".into(),
                error: e.to_string(),
                w0_re: None,
                delta_w_re: None,
                grad_energy_d: None,
                bracket_ratio: None,
                kappa_lo: None,
                kappa_hi: None,
                true_area: None,
                lower: None,
                upper: None,
                three_region_uniformity: None,
                layer_exponent: None,
            },
        }
    }
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<Result<RunReport, LabError>>,
}

/// Runs every value on the current rayon pool; failures are recorded and the
/// sweep continues. Rows come back in the order of `values`.
pub fn sweep(config: &ExperimentConfig, path: &str, values: &[f64]) -> Result<SweepOutput, LabError> {
    use rayon::prelude::*;
    let configs = values
        .iter()
        .map(|v| set_param(config, path, *v))
        .collect::<Result<Vec<_>, _>>()?;
    let reports: Vec<Result<RunReport, LabError>> = configs.par_iter().map(|c| run(c).map(|o| o.report)).collect();
    let rows = values.iter().zip(&reports).map(|(v, r)| SweepRow::from_result(*v, r)).collect();
    Ok(SweepOutput { rows, reports })
}

/// Observed convergence order from three consecutive members,
/// `ln(|q1 - q2| / |q2 - q3|) / ln(v1 / v2)`, for a geometric parameter sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRow {
    pub quantity: String,
    pub values: [f64; 3],
    pub order: f64,
}

pub fn observed_orders(rows: &[SweepRow]) -> Vec<OrderRow> {
    let pick: [(&str, fn(&SweepRow) -> Option<f64>); 3] = [
        ("w0_re", |r| r.w0_re),
        ("delta_w_re", |r| r.delta_w_re),
        ("grad_energy_d", |r| r.grad_energy_d),
    ];
    let mut out = Vec::new();
    for w in rows.windows(3) {
        for (name, f) in pick {
            let (Some(a), Some(b), Some(c)) = (f(&w[0]), f(&w[1]), f(&w[2])) else { continue };
            let (d1, d2) = ((a - b).abs(), (b - c).abs());
            if d1 > 0.0 && d2 > 0.0 && w[0].value != w[1].value {
                out.push(OrderRow {
                    quantity: name.into(),
                    values: [w[0].value, w[1].value, w[2].value],
                    order: (d1 / d2).ln() / (w[0].value / w[1].value).ln(),
                });
            }
        }
    }
    out
}
