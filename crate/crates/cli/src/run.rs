//! The single-run commands: `simulate` (one passage branch with a time
//! series), `zeno` (static spectrum and protected-subspace report), and
//! `protocol` (the full multi-atom entanglement sequence).

use std::path::{Path, PathBuf};

use serde::Serialize;
use zeno_passage::dynamics::{propagate_density, propagate_state};
use zeno_passage::hilbert::{BasisState, Level, StateSpace};
use zeno_passage::linalg::CMat;
use zeno_passage::metrics::{self, Observable, ObservableSet};
use zeno_passage::model::{
    build_jump_operators, enumerate_phase_space, HamiltonianStencil, ScenarioSpec,
};
use zeno_passage::protocol::{dissipative_passage, run_protocol, ProtocolSettings};
use zeno_passage::zeno::{dark_state, effective_model, zeno_decompose, EffectiveModel};
use zeno_passage::C64;

use crate::config::Config;
use crate::report;
use crate::Result;

/// What a command produced: the JSON summary it printed and the files it
/// wrote.
pub struct CommandOutput {
    pub json: String,
    pub files: Vec<PathBuf>,
}

fn one(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// The branch's seed ket: the chosen control level, everyone else ground.
fn branch_seed(spec: &ScenarioSpec<f64>, level: Level) -> BasisState {
    let mut atoms = vec![Level::G; spec.family.n_atoms()];
    atoms[0] = level;
    BasisState::vacuum(atoms, spec.n_modes())
}

/// Where the branch ideally ends: the matching storage level on control
/// and partner, split evenly over storage pairs.
fn branch_target(spec: &ScenarioSpec<f64>, seed: &BasisState) -> Vec<(BasisState, C64)> {
    let chains = spec.family.chains();
    let weight = one(f64::from(chains).sqrt().recip());
    (1..=chains)
        .map(|c| {
            let stored = match seed.atoms[0] {
                Level::One => Level::L(c),
                _ => Level::R(c),
            };
            (seed.with_atom(0, stored).with_atom(1, stored), weight)
        })
        .collect()
}

/// Re-expresses a vector over `from`'s basis in `to`'s indexing.
fn embed_between(from: &StateSpace, to: &StateSpace, coords: &[C64]) -> Result<Vec<C64>> {
    let pairs: Vec<(BasisState, C64)> =
        from.basis().iter().cloned().zip(coords.iter().copied()).collect();
    Ok(to.embed(&pairs)?)
}

fn span_projector(dim: usize, vectors: &[Vec<C64>]) -> CMat<f64> {
    let mut op = CMat::zeros(dim);
    for v in vectors {
        op.add_scaled(one(1.0), &CMat::outer(v));
    }
    op
}

/// The requested CSV columns plus a leakage observable for the summary,
/// appended when not already requested.
struct Columns {
    set: ObservableSet<f64>,
    csv_count: usize,
    leakage_index: usize,
}

fn build_columns(
    config: &Config,
    chain: &StateSpace,
    run_space: &StateSpace,
    model: &EffectiveModel<f64>,
) -> Result<Columns> {
    let dim = run_space.dim();
    let embedded: Vec<Vec<C64>> = model
        .basis()
        .iter()
        .map(|v| embed_between(chain, run_space, v))
        .collect::<Result<_>>()?;
    let bridge_span = &embedded[model.n_start() + model.n_final()..];

    let leakage_projector = || {
        let mut op = CMat::identity(dim);
        op.add_scaled(one(-1.0), &span_projector(dim, &embedded));
        op
    };

    let mut observables = Vec::new();
    let mut leakage_index = None;
    for name in &config.output.observables {
        match name.as_str() {
            "populations" => {
                for state in chain.basis() {
                    observables.push(Observable::Population {
                        label: format!("P({state})"),
                        index: run_space.index_of(state)?,
                    });
                }
            }
            "bridge" => observables.push(Observable::Projector {
                label: "bridge".into(),
                op: span_projector(dim, bridge_span),
            }),
            _ => {
                leakage_index = Some(observables.len());
                observables.push(Observable::Projector {
                    label: "leakage".into(),
                    op: leakage_projector(),
                });
            }
        }
    }
    let csv_count = observables.len();
    let leakage_index = match leakage_index {
        Some(i) => i,
        None => {
            observables.push(Observable::Projector {
                label: "leakage".into(),
                op: leakage_projector(),
            });
            csv_count
        }
    };
    Ok(Columns { set: ObservableSet::new(dim, observables)?, csv_count, leakage_index })
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    command: &'static str,
    branch: &'a str,
    space_dim: usize,
    samples: usize,
    step: f64,
    window: [f64; 2],
    final_fidelity: f64,
    leakage_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hermiticity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_eigenvalue: Option<f64>,
    spec: &'a Config,
}

/// Propagates one passage branch and writes `timeseries.csv` plus
/// `summary.json`.
pub fn simulate(config: &Config, out_dir: &Path) -> Result<CommandOutput> {
    let spec = config.scenario()?;
    let seed = branch_seed(&spec, config.branch_level());
    let chain = enumerate_phase_space(&spec, std::slice::from_ref(&seed), 1, false)?;
    let model = effective_model(&spec, &chain, 1, 1e-9)?;
    let open = config.is_open();
    let window = config.window(&spec);
    let settings = config.integrator_settings(open);

    let run_space = if open {
        enumerate_phase_space(&spec, std::slice::from_ref(&seed), 1, true)?
    } else {
        chain.clone()
    };
    let columns = build_columns(config, &chain, &run_space, &model)?;
    let target = run_space.embed(&branch_target(&spec, &seed))?;
    let stencil = HamiltonianStencil::new(&spec, &run_space, 1)?;

    let times;
    let values: Vec<Vec<f64>>;
    let final_fidelity;
    let step;
    let mut norm_drift = None;
    let mut trace_drift = None;
    let mut hermiticity_residual = None;
    let mut min_eigenvalue = None;
    if open {
        let channels = build_jump_operators(&spec, &run_space, 1)?;
        let rho0 = CMat::outer(&run_space.ket::<f64>(&seed)?);
        let trajectory = propagate_density(&stencil, &rho0, &channels, window, &settings)?;
        values = trajectory.states.iter().map(|rho| columns.set.evaluate_density(rho)).collect();
        final_fidelity = metrics::density_fidelity(&target, trajectory.final_density())?;
        times = trajectory.times;
        step = trajectory.step;
        trace_drift = Some(trajectory.max_trace_drift);
        hermiticity_residual = Some(trajectory.max_hermiticity_residual);
        min_eigenvalue = Some(trajectory.min_eigenvalue);
    } else {
        let psi0 = run_space.ket::<f64>(&seed)?;
        let trajectory = propagate_state(&stencil, &psi0, window, &settings)?;
        values = trajectory.states.iter().map(|psi| columns.set.evaluate_state(psi)).collect();
        final_fidelity = metrics::state_fidelity(&target, trajectory.final_state())?;
        times = trajectory.times;
        step = trajectory.step;
        norm_drift = Some(trajectory.max_norm_drift);
    }

    let leakage_max =
        values.iter().map(|row| row[columns.leakage_index]).fold(0.0_f64, f64::max);

    let labels = columns.set.labels();
    let mut header = Vec::with_capacity(columns.csv_count + 1);
    header.push("t_over_t0".to_string());
    header.extend(labels[..columns.csv_count].iter().map(|l| (*l).to_string()));
    let rows: Vec<Vec<String>> = times
        .iter()
        .zip(&values)
        .map(|(t, row)| {
            let mut cells = Vec::with_capacity(columns.csv_count + 1);
            cells.push(report::sci(*t));
            cells.extend(row[..columns.csv_count].iter().map(|v| report::sci(*v)));
            cells
        })
        .collect();
    let csv = report::csv_table(&header, &rows)?;

    let summary = SimulateSummary {
        command: "simulate",
        branch: &config.system.branch,
        space_dim: run_space.dim(),
        samples: times.len(),
        step,
        window: [window.0, window.1],
        final_fidelity,
        leakage_max,
        norm_drift,
        trace_drift,
        hermiticity_residual,
        min_eigenvalue,
        spec: config,
    };
    let json = report::json(&summary)?;

    let files = vec![
        report::write_file(out_dir, "timeseries.csv", &csv)?,
        report::write_file(out_dir, "summary.json", &json)?,
    ];
    Ok(CommandOutput { json, files })
}

#[derive(Serialize)]
struct ClusterSummary {
    eigenvalue: f64,
    dimension: usize,
}

#[derive(Serialize)]
struct EffectiveSummary {
    dim: usize,
    full_dim: usize,
    n_start: usize,
    n_final: usize,
    n_bridge: usize,
    labels: Vec<String>,
    drive_couplings: [f64; 2],
}

#[derive(Serialize)]
struct DarkComponent {
    label: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct DarkSummary {
    time: f64,
    drive_a: f64,
    drive_b: f64,
    components: Vec<DarkComponent>,
}

#[derive(Serialize)]
struct ZenoSummary<'a> {
    command: &'static str,
    branch: &'a str,
    space_dim: usize,
    eigenvalues: Vec<f64>,
    clusters: Vec<ClusterSummary>,
    effective: EffectiveSummary,
    dark_state: DarkSummary,
    spec: &'a Config,
}

/// Reports the static spectrum, its clusters, and the instantaneous dark
/// state at mid-window, writing `zeno.json`.
pub fn zeno_report(config: &Config, out_dir: &Path) -> Result<CommandOutput> {
    let spec = config.scenario()?;
    let seed = branch_seed(&spec, config.branch_level());
    let chain = enumerate_phase_space(&spec, std::slice::from_ref(&seed), 1, false)?;
    let stencil = HamiltonianStencil::new(&spec, &chain, 1)?;

    let decomposition = zeno_decompose(&stencil.static_part(), 1e-9)?;
    let mut eigenvalues = decomposition.eigenvalues.clone();
    eigenvalues.sort_by(f64::total_cmp);
    let mut clusters: Vec<ClusterSummary> = decomposition
        .clusters
        .iter()
        .map(|c| ClusterSummary { eigenvalue: c.eigenvalue, dimension: c.indices.len() })
        .collect();
    clusters.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));

    let model = effective_model(&spec, &chain, 1, 1e-9)?;
    let (t0, t1) = config.window(&spec);
    let time = 0.5 * (t0 + t1);
    let drive_a = spec.drive_a.value(time);
    let drive_b = spec.drive_b.value(time);
    let dark = dark_state(&model, drive_a, drive_b)?;
    let (coupling_a, coupling_b) = model.drive_couplings();

    let summary = ZenoSummary {
        command: "zeno",
        branch: &config.system.branch,
        space_dim: chain.dim(),
        eigenvalues,
        clusters,
        effective: EffectiveSummary {
            dim: model.dim(),
            full_dim: model.full_dim(),
            n_start: model.n_start(),
            n_final: model.n_final(),
            n_bridge: model.n_bridge(),
            labels: model.labels().to_vec(),
            drive_couplings: [coupling_a, coupling_b],
        },
        dark_state: DarkSummary {
            time,
            drive_a,
            drive_b,
            components: model
                .labels()
                .iter()
                .zip(&dark)
                .map(|(label, c)| DarkComponent { label: label.clone(), re: c.re, im: c.im })
                .collect(),
        },
        spec: config,
    };
    let json = report::json(&summary)?;
    let files = vec![report::write_file(out_dir, "zeno.json", &json)?];
    Ok(CommandOutput { json, files })
}

#[derive(Serialize)]
struct PhaseSummary {
    partner: usize,
    space_dim: usize,
    step: f64,
    norm_drift: f64,
    ideal_fidelity: f64,
}

#[derive(Serialize)]
struct AmplitudeEntry {
    ket: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct ProtocolSummary<'a> {
    command: &'static str,
    family: &'a str,
    n: usize,
    target_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<Vec<PhaseSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_state: Option<Vec<AmplitudeEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    space_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hermiticity_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_eigenvalue: Option<f64>,
    spec: &'a Config,
}

/// Runs the full entanglement protocol (closed system) or its dissipative
/// single-passage counterpart, writing `protocol.json`.
pub fn protocol(config: &Config, out_dir: &Path) -> Result<CommandOutput> {
    let spec = config.scenario()?;
    let summary_json;
    if config.is_open() {
        let outcome = dissipative_passage(&spec, &config.integrator_settings(true))?;
        let summary = ProtocolSummary {
            command: "protocol",
            family: &config.system.family,
            n: config.system.n,
            target_fidelity: outcome.fidelity,
            phases: None,
            final_state: None,
            space_dim: Some(outcome.space.dim()),
            step: Some(outcome.trajectory.step),
            trace_drift: Some(outcome.trajectory.max_trace_drift),
            hermiticity_residual: Some(outcome.trajectory.max_hermiticity_residual),
            min_eigenvalue: Some(outcome.trajectory.min_eigenvalue),
            spec: config,
        };
        summary_json = report::json(&summary)?;
    } else {
        let settings =
            ProtocolSettings { integrator: config.integrator_settings(false), ..Default::default() };
        let record = run_protocol(&spec, &settings)?;
        let summary = ProtocolSummary {
            command: "protocol",
            family: &config.system.family,
            n: config.system.n,
            target_fidelity: record.target_fidelity,
            phases: Some(
                record
                    .phases
                    .iter()
                    .map(|p| PhaseSummary {
                        partner: p.partner,
                        space_dim: p.space_dim,
                        step: p.step,
                        norm_drift: p.norm_drift,
                        ideal_fidelity: p.ideal_fidelity,
                    })
                    .collect(),
            ),
            final_state: Some(
                record
                    .final_state
                    .terms()
                    .map(|(s, a)| AmplitudeEntry { ket: s.to_string(), re: a.re, im: a.im })
                    .collect(),
            ),
            space_dim: None,
            step: None,
            trace_drift: None,
            hermiticity_residual: None,
            min_eigenvalue: None,
            spec: config,
        };
        summary_json = report::json(&summary)?;
    }
    let files = vec![report::write_file(out_dir, "protocol.json", &summary_json)?];
    Ok(CommandOutput { json: summary_json, files })
}
