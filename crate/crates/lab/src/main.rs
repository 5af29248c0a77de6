use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eitlab::plot::{self, PlotKind};
use eitlab::report::RunReport;
use eitlab::sweep::{self, SWEEP_HEADER};
use eitlab::{CheckKind, ExperimentConfig, LabError, EXIT_OK, EXIT_VIOLATION};

#[derive(Parser)]
#[command(name = "eitlab", version, about = "Forward solves and inequality checks for inclusion size estimation")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma separated checks, replacing the config list.
    #[arg(long, value_delimiter = ',')]
    check: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Verb {
    /// Parse the config, check the hypotheses and build the mesh.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario; writes report.json, timings.json and CSV tables.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario once per value of a numeric config entry.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Dotted path such as `mesh.h` or `scene.inclusion.center.0`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// CSV tables from existing reports.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Comma separated subset of bracket, three_region, size.
        #[arg(long, value_delimiter = ',')]
        kind: Option<Vec<String>>,
        /// Fit the size constants on these reports and recompute size.csv.
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.verb) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("eitlab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(verb: Verb) -> Result<i32, LabError> {
    match verb {
        Verb::Validate { common } => {
            let config = load(&common)?;
            let (adm, mesh) = eitlab::validate(&config)?;
            println!(
                "{}: ok, jump case {}, {} nodes, {} elements, min angle {:.1} deg",
                config.name, adm.jump_case, mesh.nodes, mesh.elements, mesh.min_angle_deg
            );
            Ok(EXIT_OK)
        }
        Verb::Run { common, out } => {
            let config = load(&common)?;
            create_dir(&out)?;
            let output = eitlab::run(&config)?;
            let report = &output.report;
            write(&out.join("report.json"), &report.to_json())?;
            write(
                &out.join("timings.json"),
                &serde_json::to_string_pretty(&output.timings).expect("timings serialize"),
            )?;
            emit_all(std::slice::from_ref(report), &out)?;
            for v in &report.violations {
                eprintln!("eitlab: violation: {v}");
            }
            println!("{}: wrote {}", config.name, out.display());
            Ok(if report.violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
        }
        Verb::Sweep {
            common,
            out,
            param,
            values,
        } => {
            let config = load(&common)?;
            create_dir(&out)?;
            let result = sweep::sweep(&config, &param, &values)?;
            plot::write_csv(&out.join("sweep.csv"), &result.rows, &SWEEP_HEADER)?;
            let orders = sweep::observed_orders(&result.rows);
            let flat: Vec<_> = orders
                .iter()
                .map(|o| (o.quantity.as_str(), o.values[0], o.values[1], o.values[2], o.order))
                .collect();
            plot::write_csv(&out.join("orders.csv"), &flat, &["quantity", "v1", "v2", "v3", "order"])?;
            let mut ok = Vec::new();
            for (i, r) in result.reports.iter().enumerate() {
                match r {
                    Ok(rep) => {
                        write(&out.join(format!("report_{i:03}.json")), &rep.to_json())?;
                        ok.push(rep.clone());
                    }
                    Err(e) => eprintln!("eitlab: {param} = {}: {e}", values[i]),
                }
            }
            emit_all(&ok, &out)?;
            println!("{}: {} members, wrote {}", config.name, values.len(), out.display());
            let violated = ok.iter().any(|r| !r.violations.is_empty());
            Ok(if violated { EXIT_VIOLATION } else { EXIT_OK })
        }
        Verb::Report {
            input,
            out,
            kind,
            calibrate,
            threads,
        } => {
            set_threads(threads)?;
            let reports = input.iter().map(|p| RunReport::load(p)).collect::<Result<Vec<_>, _>>()?;
            create_dir(&out)?;
            let kinds = match kind {
                None => PlotKind::ALL.to_vec(),
                Some(list) => list
                    .iter()
                    .map(|k| PlotKind::parse(k).ok_or_else(|| LabError::Config(format!("unknown report kind `{k}`"))))
                    .collect::<Result<_, _>>()?,
            };
            for k in kinds {
                if calibrate && k == PlotKind::Size {
                    continue;
                }
                plot::emit_plot_data(&reports, k, &out)?;
            }
            if calibrate {
                let cal = plot::calibrate(&reports)?;
                for w in &cal.warnings {
                    eprintln!("eitlab: calibration: {w}");
                }
                let rows = plot::size_rows_with(&reports, &cal.constants)?;
                plot::write_csv(
                    &out.join(PlotKind::Size.file_name()),
                    &rows,
                    &["scenario", "true_area", "lower", "upper", "constants_source"],
                )?;
                let summary = serde_json::json!({
                    "c1": cal.constants.c1,
                    "c2": cal.constants.c2,
                    "used": cal.used,
                    "excluded": cal.excluded,
                    "warnings": cal.warnings,
                });
                write(
                    &out.join("calibration.json"),
                    &serde_json::to_string_pretty(&summary).expect("json"),
                )?;
                println!("calibrated on {} reports: c1 = {:.6e}, c2 = {:.6e}", cal.used, cal.constants.c1, cal.constants.c2);
            }
            Ok(EXIT_OK)
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, LabError> {
    set_threads(common.threads)?;
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(list) = &common.check {
        config.checks = list
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| CheckKind::parse(s).ok_or_else(|| LabError::Config(format!("unknown check `{s}`"))))
            .collect::<Result<_, _>>()?;
    }
    config.validate_fields()?;
    Ok(config)
}

fn set_threads(threads: Option<usize>) -> Result<(), LabError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(LabError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn emit_all(reports: &[RunReport], out: &Path) -> Result<(), LabError> {
    for k in PlotKind::ALL {
        plot::emit_plot_data(reports, k, out)?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), LabError> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))
}

fn write(path: &Path, text: &str) -> Result<(), LabError> {
    std::fs::write(path, text).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}
