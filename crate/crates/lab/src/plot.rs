//! Tidy CSV tables from run reports, one row per scenario or check, and
//! calibration of the size constants on a set of reports.
//!
//! Tables and headers:
//!
//! * `bracket.csv`: `scenario, case, grad_energy_d, delta_w_re, kappa_lo, kappa_hi, ratio, holds`
//! * `three_region.csv`: `scenario, member, r1, r2, theta, margin, c_fit`
//! * `size.csv`: `scenario, true_area, lower, upper, constants_source`

use std::path::Path;

use eitlab_core::coefficients::JumpCase;
use eitlab_core::estimator::{calibrate_constants, estimate_size, Calibration, CalibrationSample, SizeConstants};
use serde::Serialize;

use crate::report::RunReport;
use crate::{io_err, LabError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Bracket,
    ThreeRegion,
    Size,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::Bracket, PlotKind::ThreeRegion, PlotKind::Size];

    pub fn file_name(&self) -> &'static str {
        match self {
            PlotKind::Bracket => "bracket.csv",
            PlotKind::ThreeRegion => "three_region.csv",
            PlotKind::Size => "size.csv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bracket" => Some(PlotKind::Bracket),
            "three_region" => Some(PlotKind::ThreeRegion),
            "size" => Some(PlotKind::Size),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketRow {
    pub scenario: String,
    pub case: String,
    pub grad_energy_d: f64,
    pub delta_w_re: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeRegionRow {
    pub scenario: String,
    pub member: usize,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
    pub margin: f64,
    pub c_fit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeRow {
    pub scenario: String,
    pub true_area: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub constants_source: String,
}

pub fn bracket_rows(reports: &[RunReport]) -> Vec<BracketRow> {
    reports
        .iter()
        .filter_map(|r| {
            let p = r.power.as_ref()?;
            let b = p.bracket.as_ref()?;
            Some(BracketRow {
                scenario: r.config.name.clone(),
                case: p.case.clone(),
                grad_energy_d: p.grad_energy_d,
                delta_w_re: p.delta_w[0],
                kappa_lo: b.kappa_lo,
                kappa_hi: b.kappa_hi,
                ratio: b.ratio,
                holds: b.holds,
            })
        })
        .collect()
}

pub fn three_region_rows(reports: &[RunReport]) -> Vec<ThreeRegionRow> {
    let mut out = Vec::new();
    for r in reports {
        for t in &r.checks.three_region {
            for (i, m) in t.members.iter().enumerate() {
                out.push(ThreeRegionRow {
                    scenario: r.config.name.clone(),
                    member: i,
                    r1: t.r1,
                    r2: t.r2,
                    theta: t.theta,
                    margin: m.margin,
                    c_fit: m.c_fit,
                });
            }
        }
    }
    out
}

pub fn size_rows(reports: &[RunReport]) -> Vec<SizeRow> {
    reports
        .iter()
        .filter_map(|r| {
            let s = r.size.as_ref()?;
            Some(SizeRow {
                scenario: r.config.name.clone(),
                true_area: s.true_area,
                lower: s.lower,
                upper: s.upper,
                constants_source: s.constants_source.clone(),
            })
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), LabError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    // Written explicitly so that empty tables still carry their header.
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Write the table of `kind` for `reports` into `dir`; returns the row count.
pub fn emit_plot_data(reports: &[RunReport], kind: PlotKind, dir: &Path) -> Result<usize, LabError> {
    let path = dir.join(kind.file_name());
    match kind {
        PlotKind::Bracket => {
            let rows = bracket_rows(reports);
            write_csv(
                &path,
                &rows,
                &["scenario", "case", "grad_energy_d", "delta_w_re", "kappa_lo", "kappa_hi", "ratio", "holds"],
            )?;
            Ok(rows.len())
        }
        PlotKind::ThreeRegion => {
            let rows = three_region_rows(reports);
            write_csv(&path, &rows, &["scenario", "member", "r1", "r2", "theta", "margin", "c_fit"])?;
            Ok(rows.len())
        }
        PlotKind::Size => {
            let rows = size_rows(reports);
            write_csv(&path, &rows, &["scenario", "true_area", "lower", "upper", "constants_source"])?;
            Ok(rows.len())
        }
    }
}

fn parse_case(s: &str) -> JumpCase {
    match s {
        "case_i" => JumpCase::CaseI,
        "case_ii" => JumpCase::CaseII,
        _ => JumpCase::None,
    }
}

/// Calibration samples from reports carrying a power gap; the true area is
/// the meshed inclusion area.
pub fn calibration_samples(reports: &[RunReport]) -> Vec<CalibrationSample> {
    reports
        .iter()
        .filter_map(|r| {
            let p = r.power.as_ref()?;
            Some(CalibrationSample {
                area: r.mesh.inclusion_area,
                delta_w_re: p.delta_w[0],
                w0_free_re: p.w0_free[0],
                case: parse_case(&p.case),
            })
        })
        .collect()
}

pub fn calibrate(reports: &[RunReport]) -> Result<Calibration, LabError> {
    Ok(calibrate_constants(&calibration_samples(reports))?)
}

/// Size bounds of every report under fixed constants.
pub fn size_rows_with(reports: &[RunReport], constants: &SizeConstants) -> Result<Vec<SizeRow>, LabError> {
    let mut out = Vec::new();
    for r in reports {
        let Some(p) = r.power.as_ref() else { continue };
        let fat = r.checks.fatness.as_ref().is_none_or(|f| f.ok);
        let e = estimate_size(
            p.delta_w[0],
            p.w0_free[0],
            parse_case(&p.case),
            constants,
            fat,
            Some(r.mesh.inclusion_area),
        )?;
        out.push(SizeRow {
            scenario: r.config.name.clone(),
            true_area: e.true_area,
            lower: e.lower,
            upper: e.upper,
            constants_source: e.constants_source.name().into(),
        });
    }
    Ok(out)
}
