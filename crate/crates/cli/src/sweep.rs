//! Parallel fidelity maps over loss-rate grids.
//!
//! Cells are independent master-equation runs distributed over a worker
//! pool; results are gathered into a pre-sized table in fixed row-major
//! order, so the emitted bytes never depend on the worker count or on
//! which cell finished first.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use zeno_passage::protocol::dissipative_passage;

use crate::config::Config;
use crate::report;
use crate::{Error, Result};

#[derive(Serialize)]
struct CellDiagnostic {
    row: usize,
    col: usize,
    gamma_over_g: f64,
    kappa_over_g: f64,
    message: String,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    command: &'static str,
    kappa_over_g: &'a [f64],
    gamma_over_g: &'a [f64],
    fidelity: &'a [Vec<f64>],
    min_fidelity: Option<f64>,
    monotonic: bool,
    diagnostics: &'a [CellDiagnostic],
    spec: &'a Config,
}

/// A finished sweep: the emitted summary plus the numbers themselves for
/// callers that want to inspect them.
#[derive(Debug)]
pub struct SweepOutput {
    pub json: String,
    pub files: Vec<PathBuf>,
    pub fidelity: Vec<Vec<f64>>,
    pub min_fidelity: Option<f64>,
    pub warnings: Vec<String>,
}

/// Runs every grid cell's dissipative passage on `workers` threads and
/// writes `sweep.csv` (rows gamma/g, columns kappa/g) plus `sweep.json`.
pub fn sweep(config: &Config, workers: usize, out_dir: &Path) -> Result<SweepOutput> {
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::semantic("[sweep]", "a sweep grid is required for this command"))?;
    let probe = config.scenario()?;
    if probe.family.n_atoms() != 2 {
        return Err(Error::semantic(
            "[system].family",
            "the loss-rate sweep covers single-passage scenarios with one partner",
        ));
    }
    let g = config.system.g;
    let settings = config.integrator_settings(true);

    let n_rows = grid.gamma_over_g.len();
    let n_cols = grid.kappa_over_g.len();
    let cells: Vec<(usize, usize)> =
        (0..n_rows).flat_map(|r| (0..n_cols).map(move |c| (r, c))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Pool(e.to_string()))?;
    let outcomes: Vec<std::result::Result<f64, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(r, c)| {
                let kappa = grid.kappa_over_g[c] * g;
                let gamma = grid.gamma_over_g[r] * g;
                config
                    .scenario_with_rates(kappa, gamma)
                    .and_then(|spec| Ok(dissipative_passage(&spec, &settings)?.fidelity))
                    .map_err(|e| e.to_string())
            })
            .collect()
    });

    let mut fidelity = vec![vec![f64::NAN; n_cols]; n_rows];
    let mut diagnostics = Vec::new();
    for (&(r, c), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(f) => fidelity[r][c] = f,
            Err(message) => diagnostics.push(CellDiagnostic {
                row: r,
                col: c,
                gamma_over_g: grid.gamma_over_g[r],
                kappa_over_g: grid.kappa_over_g[c],
                message,
            }),
        }
    }

    let warnings = monotonicity_warnings(&fidelity, &grid.kappa_over_g, &grid.gamma_over_g);
    let min_fidelity = fidelity
        .iter()
        .flatten()
        .copied()
        .filter(|f| f.is_finite())
        .min_by(f64::total_cmp);

    let mut header = Vec::with_capacity(n_cols + 1);
    header.push("gamma_over_g".to_string());
    header.extend(grid.kappa_over_g.iter().map(|k| report::sci(*k)));
    let rows: Vec<Vec<String>> = grid
        .gamma_over_g
        .iter()
        .zip(&fidelity)
        .map(|(gamma, row)| {
            let mut cells = Vec::with_capacity(n_cols + 1);
            cells.push(report::sci(*gamma));
            cells.extend(row.iter().map(|f| report::sci(*f)));
            cells
        })
        .collect();
    let csv = report::csv_table(&header, &rows)?;

    let summary = SweepSummary {
        command: "sweep",
        kappa_over_g: &grid.kappa_over_g,
        gamma_over_g: &grid.gamma_over_g,
        fidelity: &fidelity,
        min_fidelity,
        monotonic: warnings.is_empty(),
        diagnostics: &diagnostics,
        spec: config,
    };
    let json = report::json(&summary)?;

    let files = vec![
        report::write_file(out_dir, "sweep.csv", &csv)?,
        report::write_file(out_dir, "sweep.json", &json)?,
    ];
    Ok(SweepOutput { json, files, fidelity, min_fidelity, warnings })
}

/// Losing more should never help: flags any cell pair where fidelity
/// rises as a rate grows, a red flag for integration error.
fn monotonicity_warnings(fidelity: &[Vec<f64>], kappa: &[f64], gamma: &[f64]) -> Vec<String> {
    let slack = 1e-9;
    let mut warnings = Vec::new();
    for (r, row) in fidelity.iter().enumerate() {
        for c in 1..row.len() {
            let (prev, next) = (row[c - 1], row[c]);
            if kappa[c] > kappa[c - 1] && prev.is_finite() && next.is_finite() && next > prev + slack
            {
                warnings.push(format!(
                    "monotonicity violation: fidelity rises {prev:.6} -> {next:.6} as \
                     kappa_over_g goes {} -> {} at gamma_over_g = {}",
                    kappa[c - 1],
                    kappa[c],
                    gamma[r]
                ));
            }
        }
    }
    if let Some(row0) = fidelity.first() {
        for c in 0..row0.len() {
            for r in 1..fidelity.len() {
                let (prev, next) = (fidelity[r - 1][c], fidelity[r][c]);
                if gamma[r] > gamma[r - 1]
                    && prev.is_finite()
                    && next.is_finite()
                    && next > prev + slack
                {
                    warnings.push(format!(
                        "monotonicity violation: fidelity rises {prev:.6} -> {next:.6} as \
                         gamma_over_g goes {} -> {} at kappa_over_g = {}",
                        gamma[r - 1],
                        gamma[r],
                        kappa[c]
                    ));
                }
            }
        }
    }
    warnings
}
