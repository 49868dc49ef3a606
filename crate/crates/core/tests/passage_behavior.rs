//! End-to-end passage behavior at the reference operating point: population
//! inversion, bridge suppression checked against the reduced-model oracle,
//! leakage bounds, and the protocol-level bookkeeping around a passage.

use std::sync::OnceLock;

use zeno_passage::dynamics::{propagate_state, IntegratorSettings, Trajectory};
use zeno_passage::hilbert::{BasisState, Level};
use zeno_passage::linalg;
use zeno_passage::metrics::{self, Observable, ObservableSet};
use zeno_passage::model::{
    CouplingSpec, DecoherenceSpec, Family, PulseShape, ScenarioSpec,
};
use zeno_passage::protocol::{
    self, passage_phase, run_protocol, PassageOutcome, ProtocolSettings, Superposition,
};
use zeno_passage::zeno::{effective_model, EffectiveModel};
use zeno_passage::{C64, Error};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn reference_spec() -> ScenarioSpec<f64> {
    ScenarioSpec::reference(Family::TwoAtom).unwrap()
}

fn vac(a: Level, b: Level) -> BasisState {
    BasisState::vacuum(vec![a, b], 6)
}

/// One right-branch passage from `|0,g>` plus the reduced model over the
/// same space, shared across the tests in this file.
struct ReferenceRun {
    outcome: PassageOutcome<f64>,
    model: EffectiveModel<f64>,
    reduced: Trajectory<f64>,
}

fn reference_run() -> &'static ReferenceRun {
    static RUN: OnceLock<ReferenceRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let spec = reference_spec();
        let seed = Superposition::from_pairs([(vac(Level::Zero, Level::G), c(1.0, 0.0))]);
        let settings = IntegratorSettings { stride: Some(0.25), ..Default::default() };
        let outcome = passage_phase(&spec, &seed, 1, &settings).unwrap();

        let model = effective_model(&spec, &outcome.space, 1, 1e-9).unwrap();
        assert_eq!(model.dim(), 3);
        assert_eq!(model.n_bridge(), 1);
        let source = model.source().unwrap();
        let mut start = vec![c(0.0, 0.0); model.dim()];
        start[0] = c(1.0, 0.0);
        let window = (0.0, spec.window_end());
        let fine = IntegratorSettings { stride: Some(0.05), ..Default::default() };
        let reduced = propagate_state(&source, &start, window, &fine).unwrap();

        ReferenceRun { outcome, model, reduced }
    })
}

fn sample_at(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .position(|&u| (u - t).abs() < 1e-9)
        .unwrap_or_else(|| panic!("no sample at t = {t}"))
}

#[test]
fn populations_invert_across_the_passage() {
    let run = reference_run();
    let space = &run.outcome.space;
    let trajectory = &run.outcome.trajectory;
    assert!(trajectory.max_norm_drift <= 1e-8);

    let populations = ObservableSet::new(
        space.dim(),
        space
            .basis()
            .iter()
            .enumerate()
            .map(|(index, s)| Observable::Population { label: s.to_string(), index })
            .collect(),
    )
    .unwrap();

    let start = space.index_of(&vac(Level::Zero, Level::G)).unwrap();
    let target = space.index_of(&vac(Level::R(1), Level::R(1))).unwrap();
    let mut series = Vec::with_capacity(trajectory.times.len());
    for psi in &trajectory.states {
        let values = populations.evaluate_state(psi);
        let total: f64 = values.iter().sum();
        let norm = linalg::norm_sqr(psi);
        assert!((total - norm).abs() <= 1e-8, "population sum drifted: {total} vs {norm}");
        series.push(values);
    }

    let last = series.last().unwrap();
    assert!(last[start] <= 0.01, "start population stayed at {}", last[start]);
    assert!(last[target] >= 0.99, "target population only reached {}", last[target]);

    let mid = sample_at(&trajectory.times, 25.0);
    assert!(
        series[mid][target] >= 0.90,
        "transfer incomplete by t = 25: {}",
        series[mid][target]
    );
}

#[test]
fn bridge_population_matches_the_reduced_oracle() {
    let run = reference_run();

    let bridge_index = run.model.n_start() + run.model.n_final();
    let reduced_max = run
        .reduced
        .states
        .iter()
        .map(|psi| psi[bridge_index].norm_sqr())
        .fold(0.0_f64, f64::max);

    let bridge_ket = run.model.basis()[bridge_index].clone();
    let bridge = ObservableSet::new(
        run.outcome.space.dim(),
        vec![Observable::KetProjector { label: "bridge".into(), ket: bridge_ket }],
    )
    .unwrap();
    let full_max = run
        .outcome
        .trajectory
        .states
        .iter()
        .map(|psi| bridge.evaluate_state(psi)[0])
        .fold(0.0_f64, f64::max);

    assert!(full_max <= 0.06, "bridge population reached {full_max}");
    assert!(reduced_max <= 0.06, "reduced bridge population reached {reduced_max}");
    assert!(full_max >= 0.03, "bridge transient implausibly small: {full_max}");
    assert!(
        (full_max - reduced_max).abs() <= 0.15 * reduced_max,
        "full ({full_max}) and reduced ({reduced_max}) bridge peaks disagree"
    );
}

#[test]
fn stray_population_outside_the_passage_span_is_small() {
    let run = reference_run();
    let space = &run.outcome.space;
    let start = space.ket::<f64>(&vac(Level::Zero, Level::G)).unwrap();
    let target = space.ket::<f64>(&vac(Level::R(1), Level::R(1))).unwrap();
    let bridge = &run.model.basis()[run.model.n_start() + run.model.n_final()];

    let mut worst = 0.0_f64;
    for psi in &run.outcome.trajectory.states {
        let kept = linalg::dot(&start, psi).norm_sqr()
            + linalg::dot(&target, psi).norm_sqr()
            + linalg::dot(bridge, psi).norm_sqr();
        worst = worst.max(1.0 - kept);

        let all: Vec<usize> = (0..space.dim()).collect();
        assert!(metrics::leakage_state(psi, &all).abs() <= 1e-12);
    }
    assert!(worst <= 0.02, "leakage outside the passage span reached {worst}");
}

#[test]
fn protocol_reaches_the_three_outcome_target() {
    let spec = reference_spec();
    let initial = protocol::initial_superposition(&spec).unwrap();
    let record = run_protocol(&spec, &ProtocolSettings::default()).unwrap();
    assert!(
        record.target_fidelity >= 0.99,
        "closed-system protocol fidelity {}",
        record.target_fidelity
    );
    assert_eq!(record.phases.len(), 1);
    assert!(record.phases[0].norm_drift <= 1e-8);

    let gg = vac(Level::G, Level::G);
    assert_eq!(record.final_state.amplitude(&gg), initial.amplitude(&gg));
    assert!((initial.amplitude(&gg).re - 1.0 / 3.0_f64.sqrt()).abs() <= 1e-12);

    let pair = ScenarioSpec::reference(Family::NAtom(2)).unwrap();
    let pair_record = run_protocol(&pair, &ProtocolSettings::default()).unwrap();
    assert_eq!(pair_record.final_state, record.final_state);
    assert_eq!(pair_record.target_fidelity.to_bits(), record.target_fidelity.to_bits());
}

#[test]
fn zero_drive_keeps_the_initial_state() {
    let spec = ScenarioSpec::new(
        Family::TwoAtom,
        CouplingSpec::new(20.0, 2000.0).unwrap(),
        PulseShape::new(0.0, 5.27, 31.0).unwrap(),
        PulseShape::new(0.0, 0.0, 31.0).unwrap(),
        DecoherenceSpec::closed(),
        1,
    )
    .unwrap();
    let settings = ProtocolSettings {
        integrator: IntegratorSettings { step: Some(5e-4), ..Default::default() },
        ..Default::default()
    };
    let record = run_protocol(&spec, &settings).unwrap();
    assert_eq!(record.final_state, protocol::initial_superposition(&spec).unwrap());
    assert!(
        (record.target_fidelity - 1.0_f64 / 9.0).abs() <= 1e-12,
        "undriven overlap should be the inert third squared, got {}",
        record.target_fidelity
    );
}

#[test]
fn relabeling_swaps_qubit_and_storage() {
    let s = 1.0 / 3.0_f64.sqrt();
    let stored = Superposition::from_pairs([
        (vac(Level::R(1), Level::R(1)), c(s, 0.0)),
        (vac(Level::L(1), Level::L(1)), c(s, 0.0)),
        (vac(Level::G, Level::G), c(s, 0.0)),
    ]);
    let relabeled = protocol::relabel_control(&stored).unwrap();
    assert_eq!(relabeled.amplitude(&vac(Level::Zero, Level::R(1))), c(s, 0.0));
    assert_eq!(relabeled.amplitude(&vac(Level::One, Level::L(1))), c(s, 0.0));
    assert_eq!(relabeled.amplitude(&vac(Level::G, Level::G)), c(s, 0.0));
    assert_eq!(relabeled.amplitude(&vac(Level::R(1), Level::R(1))), c(0.0, 0.0));
    assert_eq!(relabeled.len(), 3);
    assert_eq!(relabeled.norm_sqr().to_bits(), stored.norm_sqr().to_bits());

    let a = Superposition::from_pairs([
        (vac(Level::Zero, Level::G), c(0.3, 0.4)),
        (vac(Level::L(1), Level::R(1)), c(-0.5, 0.1)),
        (vac(Level::G, Level::L(1)), c(0.0, 0.7)),
    ]);
    let b = Superposition::from_pairs([
        (vac(Level::Zero, Level::G), c(-0.2, 0.0)),
        (vac(Level::L(1), Level::R(1)), c(0.6, -0.3)),
        (vac(Level::One, Level::G), c(0.1, 0.5)),
    ]);
    let before = a.overlap(&b);
    let after = protocol::relabel_control(&a)
        .unwrap()
        .overlap(&protocol::relabel_control(&b).unwrap());
    assert_eq!(after, before);
}

#[test]
fn excited_residue_blocks_relabeling() {
    let tainted = Superposition::from_pairs([
        (vac(Level::R(1), Level::G), c(0.8, 0.0)),
        (vac(Level::ER(1), Level::G), c(0.5, 0.0)),
    ]);
    match protocol::relabel_control(&tainted) {
        Err(Error::ExcitedResidue { atom: 0, amplitude }) => {
            assert!((amplitude - 0.5).abs() <= 1e-15);
        }
        other => panic!("expected an excited-residue refusal, got {other:?}"),
    }

    let relaxed = protocol::relabel_control_with_guard(&tainted, 0.6).unwrap();
    assert_eq!(relaxed.amplitude(&vac(Level::ER(1), Level::G)), c(0.5, 0.0));
    assert_eq!(relaxed.amplitude(&vac(Level::Zero, Level::G)), c(0.8, 0.0));

    let faint = Superposition::from_pairs([
        (vac(Level::R(1), Level::G), c(1.0, 0.0)),
        (vac(Level::ER(1), Level::G), c(1e-12, 0.0)),
    ]);
    assert!(protocol::relabel_control(&faint).is_ok());
}
