//! Multi-phase passage protocols that assemble atom-chain entanglement.
//!
//! A protocol alternates adiabatic passages with exact single-atom
//! operations on the control atom: a storage relabeling that frees the
//! qubit levels for the next partner, and a phase flip on the storage
//! levels that completes each passage. States are tracked as sparse
//! superpositions over named basis kets, so every phase propagates in the
//! smallest state space reachable from its own support.

use std::collections::BTreeMap;

use crate::dynamics::{
    propagate_density, propagate_state, DensityTrajectory, IntegratorSettings, Trajectory,
};
use crate::error::{Error, Result};
use crate::hilbert::{BasisState, Level, StateSpace};
use crate::linalg::CMat;
use crate::metrics;
use crate::model::{
    build_jump_operators, enumerate_phase_space, Family, HamiltonianStencil, ScenarioSpec,
};
use crate::scalar::Scalar;
use crate::zeno;
use crate::Cx;

/// A sparse superposition over named basis kets.
#[derive(Clone, Debug, PartialEq)]
pub struct Superposition<S: Scalar> {
    terms: BTreeMap<BasisState, Cx<S>>,
}

impl<S: Scalar> Superposition<S> {
    /// Collects terms, summing duplicates and dropping exact zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (BasisState, Cx<S>)>) -> Self {
        let mut terms: BTreeMap<BasisState, Cx<S>> = BTreeMap::new();
        for (s, a) in pairs {
            *terms.entry(s).or_insert_with(S::czero) += a;
        }
        terms.retain(|_, a| *a != S::czero());
        Superposition { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisState, &Cx<S>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, s: &BasisState) -> Cx<S> {
        self.terms.get(s).copied().unwrap_or_else(S::czero)
    }

    pub fn support(&self) -> Vec<BasisState> {
        self.terms.keys().cloned().collect()
    }

    pub fn norm_sqr(&self) -> S {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == S::zero() {
            return Err(Error::EmptyState);
        }
        for a in self.terms.values_mut() {
            *a = *a / S::cre(norm);
        }
        Ok(self)
    }

    /// `<self|other>` with the left side conjugated.
    pub fn overlap(&self, other: &Self) -> Cx<S> {
        self.terms
            .iter()
            .filter_map(|(s, a)| other.terms.get(s).map(|b| a.conj() * b))
            .fold(S::czero(), |acc, x| acc + x)
    }

    pub fn fidelity_with(&self, other: &Self) -> S {
        self.overlap(other).norm_sqr()
    }

    /// Rewrites every ket through `f`, merging any collisions.
    pub fn map_states<F: FnMut(&BasisState) -> BasisState>(&self, mut f: F) -> Self {
        Superposition::from_pairs(self.terms.iter().map(|(s, a)| (f(s), *a)))
    }

    /// Expands into a dense vector over `space`, naming any missing ket.
    pub fn dense(&self, space: &StateSpace) -> Result<Vec<Cx<S>>> {
        let mut v = vec![S::czero(); space.dim()];
        for (s, a) in &self.terms {
            let i = space
                .state_index(s)
                .ok_or_else(|| Error::MissingTargetKet(s.to_string()))?;
            v[i] = *a;
        }
        Ok(v)
    }
}

/// Order in which partner atoms are switched into the coupled cavity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchSchedule {
    partners: Vec<usize>,
}

impl SwitchSchedule {
    /// Partners in ascending order, each exactly once.
    pub fn sequential(n_atoms: usize) -> Result<Self> {
        Self::new((1..n_atoms).collect(), n_atoms)
    }

    /// Validates that `partners` visits every partner atom exactly once, in
    /// ascending order.
    pub fn new(partners: Vec<usize>, n_atoms: usize) -> Result<Self> {
        if n_atoms < 2 {
            return Err(Error::ScheduleViolation(format!(
                "a schedule needs at least one partner atom, got {n_atoms} atoms"
            )));
        }
        let mut seen = vec![false; n_atoms];
        for (k, &p) in partners.iter().enumerate() {
            if p == 0 || p >= n_atoms {
                return Err(Error::ScheduleViolation(format!(
                    "partner index {p} is outside 1..{n_atoms}"
                )));
            }
            if seen[p] {
                return Err(Error::ScheduleViolation(format!(
                    "partner index {p} appears more than once"
                )));
            }
            if k > 0 && partners[k - 1] > p {
                return Err(Error::ScheduleViolation(format!(
                    "partner index {p} follows {}; partners must ascend",
                    partners[k - 1]
                )));
            }
            seen[p] = true;
        }
        if let Some(missing) = seen.iter().skip(1).position(|&s| !s) {
            return Err(Error::ScheduleViolation(format!(
                "partner index {} is never visited",
                missing + 1
            )));
        }
        Ok(Self { partners })
    }

    pub fn partners(&self) -> &[usize] {
        &self.partners
    }

    pub fn n_phases(&self) -> usize {
        self.partners.len()
    }
}

fn relabel_level(level: Level) -> Level {
    match level {
        Level::One => Level::L(1),
        Level::L(1) => Level::One,
        Level::Zero => Level::R(1),
        Level::R(1) => Level::Zero,
        other => other,
    }
}

/// Exchanges the control atom's qubit and first storage levels, guarding
/// against residual excited-state amplitude at the default threshold.
pub fn relabel_control<S: Scalar>(state: &Superposition<S>) -> Result<Superposition<S>> {
    relabel_control_with_guard(state, S::real(1e-10))
}

/// Same relabeling with a caller-chosen excited-amplitude guard.
pub fn relabel_control_with_guard<S: Scalar>(
    state: &Superposition<S>,
    guard: S,
) -> Result<Superposition<S>> {
    for (s, a) in state.terms() {
        if s.atoms[0].is_excited() && a.norm() > guard {
            return Err(Error::ExcitedResidue {
                atom: 0,
                amplitude: a.norm().to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(state.map_states(|s| s.with_atom(0, relabel_level(s.atoms[0]))))
}

/// The exact local phase flip on the control atom's storage levels that
/// completes a passage, turning the adiabatic sign into the target sign.
pub fn control_phase_flip<S: Scalar>(state: &Superposition<S>) -> Superposition<S> {
    Superposition::from_pairs(state.terms.iter().map(|(s, a)| {
        let flipped = matches!(s.atoms[0], Level::L(_) | Level::R(_));
        (s.clone(), if flipped { -*a } else { *a })
    }))
}

/// The protocol's initial product state.
///
/// The control atom holds an even qubit-plus-ground superposition; for the
/// high-dimensional family the qubit amplitudes are weighted by the square
/// root of the storage multiplicity so every target component ends up with
/// equal weight. All partners start in their ground level.
pub fn initial_superposition<S: Scalar>(spec: &ScenarioSpec<S>) -> Result<Superposition<S>> {
    let n_atoms = spec.family.n_atoms();
    let n_modes = spec.n_modes();
    let make = |l: Level| {
        let mut atoms = vec![l];
        atoms.extend(std::iter::repeat(Level::G).take(n_atoms - 1));
        BasisState::vacuum(atoms, n_modes)
    };
    let branch_weight = match spec.family {
        Family::HighDim(n) => S::real(n as f64).sqrt(),
        _ => S::one(),
    };
    Superposition::from_pairs([
        (make(Level::One), S::cre(branch_weight)),
        (make(Level::Zero), S::cre(branch_weight)),
        (make(Level::G), S::cone()),
    ])
    .normalized()
}

/// The entangled state the protocol aims for: an even superposition of all
/// atoms sharing each storage level plus all atoms in ground.
pub fn target_superposition<S: Scalar>(spec: &ScenarioSpec<S>) -> Result<Superposition<S>> {
    let n_atoms = spec.family.n_atoms();
    let n_modes = spec.n_modes();
    let all = |l: Level| (BasisState::vacuum(vec![l; n_atoms], n_modes), S::cone());
    let mut pairs = vec![all(Level::G)];
    for chain in 1..=spec.family.chains() {
        pairs.push(all(Level::L(chain)));
        pairs.push(all(Level::R(chain)));
    }
    Superposition::from_pairs(pairs).normalized()
}

/// One adiabatic passage propagated over the drive window.
#[derive(Clone, Debug)]
pub struct PassageOutcome<S: Scalar> {
    pub space: StateSpace,
    pub trajectory: Trajectory<S>,
}

impl<S: Scalar> PassageOutcome<S> {
    /// The end-of-window state as a sparse superposition.
    pub fn final_superposition(&self) -> Superposition<S> {
        Superposition::from_pairs(
            self.space.basis().iter().cloned().zip(self.trajectory.final_state().iter().copied()),
        )
    }
}

/// Propagates one passage phase in the space reachable from the state's
/// own support.
pub fn passage_phase<S: Scalar>(
    spec: &ScenarioSpec<S>,
    state: &Superposition<S>,
    partner: usize,
    settings: &IntegratorSettings<S>,
) -> Result<PassageOutcome<S>> {
    if state.is_empty() {
        return Err(Error::EmptyState);
    }
    let space = enumerate_phase_space(spec, &state.support(), partner, false)?;
    let stencil = HamiltonianStencil::new(spec, &space, partner)?;
    let mut psi0 = vec![S::czero(); space.dim()];
    for (s, a) in state.terms() {
        psi0[space.index_of(s)?] = *a;
    }
    let window = (S::zero(), spec.window_end());
    let trajectory = propagate_state(&stencil, &psi0, window, settings)?;
    Ok(PassageOutcome { space, trajectory })
}

/// The lossless limit of one passage followed by its phase flip: qubit
/// levels transfer into matching storage pairs, everything else is inert.
fn ideal_passage<S: Scalar>(
    spec: &ScenarioSpec<S>,
    state: &Superposition<S>,
    partner: usize,
) -> Superposition<S> {
    let chains = spec.family.chains();
    let weight = S::cre(S::real(f64::from(chains)).sqrt().recip());
    let mut pairs = Vec::new();
    for (s, a) in state.terms() {
        let transfers = s.total_photons() == 0
            && s.atoms[partner] == Level::G
            && matches!(s.atoms[0], Level::One | Level::Zero);
        if transfers {
            for chain in 1..=chains {
                let level = match s.atoms[0] {
                    Level::One => Level::L(chain),
                    _ => Level::R(chain),
                };
                pairs.push((s.with_atom(0, level).with_atom(partner, level), *a * weight));
            }
        } else {
            pairs.push((s.clone(), *a));
        }
    }
    Superposition::from_pairs(pairs)
}

/// Drive-to-coupling ratio above which a protocol run refuses to start.
pub const DEFAULT_ZENO_ERROR_RATIO: f64 = 0.2;

/// Integrator plus protocol-level knobs.
#[derive(Clone, Copy, Debug)]
pub struct ProtocolSettings<S: Scalar> {
    pub integrator: IntegratorSettings<S>,
    /// Excited-amplitude threshold tolerated when relabeling between
    /// phases; real passages leave small nonadiabatic residues.
    pub relabel_guard: S,
    /// Drive-to-coupling ratio above which the protected-subspace
    /// warning becomes a hard error.
    pub zeno_error_ratio: S,
}

impl<S: Scalar> Default for ProtocolSettings<S> {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            relabel_guard: S::real(0.05),
            zeno_error_ratio: S::real(DEFAULT_ZENO_ERROR_RATIO),
        }
    }
}

/// Summary of one protocol phase.
#[derive(Clone, Debug)]
pub struct PhaseRecord<S: Scalar> {
    pub partner: usize,
    pub space_dim: usize,
    pub step: S,
    pub norm_drift: S,
    /// Fidelity against the lossless intermediate after this phase.
    pub ideal_fidelity: S,
}

/// Outcome of a full closed-system protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolRecord<S: Scalar> {
    pub phases: Vec<PhaseRecord<S>>,
    pub final_state: Superposition<S>,
    pub target_fidelity: S,
}

/// Runs the family's protocol with partners in ascending order.
pub fn run_protocol<S: Scalar>(
    spec: &ScenarioSpec<S>,
    settings: &ProtocolSettings<S>,
) -> Result<ProtocolRecord<S>> {
    let schedule = SwitchSchedule::sequential(spec.family.n_atoms())?;
    run_with_schedule(spec, &schedule, settings)
}

/// Runs the protocol with an explicit partner order.
pub fn run_with_schedule<S: Scalar>(
    spec: &ScenarioSpec<S>,
    schedule: &SwitchSchedule,
    settings: &ProtocolSettings<S>,
) -> Result<ProtocolRecord<S>> {
    if !spec.decoherence.is_closed() {
        return Err(Error::InvalidScenario(
            "protocol runs are closed-system; use dissipative_passage for open dynamics".into(),
        ));
    }
    SwitchSchedule::new(schedule.partners.clone(), spec.family.n_atoms())?;
    zeno::zeno_condition(spec).check(settings.zeno_error_ratio)?;

    let mut state = initial_superposition(spec)?;
    let mut ideal = state.clone();
    let mut phases = Vec::with_capacity(schedule.n_phases());
    for (k, &partner) in schedule.partners().iter().enumerate() {
        if k > 0 {
            state = relabel_control_with_guard(&state, settings.relabel_guard)?;
            ideal = relabel_control(&ideal)?;
        }
        let outcome = passage_phase(spec, &state, partner, &settings.integrator)?;
        state = control_phase_flip(&outcome.final_superposition());
        ideal = ideal_passage(spec, &ideal, partner);
        phases.push(PhaseRecord {
            partner,
            space_dim: outcome.space.dim(),
            step: outcome.trajectory.step,
            norm_drift: outcome.trajectory.max_norm_drift,
            ideal_fidelity: ideal.fidelity_with(&state),
        });
    }
    let target = target_superposition(spec)?;
    let target_fidelity = target.fidelity_with(&state);
    Ok(ProtocolRecord { phases, final_state: state, target_fidelity })
}

/// Outcome of a single dissipative passage.
#[derive(Clone, Debug)]
pub struct DissipativeOutcome<S: Scalar> {
    pub space: StateSpace,
    pub trajectory: DensityTrajectory<S>,
    /// Fidelity of the flip-completed final density against the target.
    pub fidelity: S,
}

/// Evolves the full initial superposition through one passage under the
/// decay channels, in the jump-closed state space.
pub fn dissipative_passage<S: Scalar>(
    spec: &ScenarioSpec<S>,
    settings: &IntegratorSettings<S>,
) -> Result<DissipativeOutcome<S>> {
    if spec.family.n_atoms() != 2 {
        return Err(Error::InvalidScenario(
            "dissipative analysis covers single-passage scenarios with one partner".into(),
        ));
    }
    zeno::zeno_condition(spec).check(S::real(DEFAULT_ZENO_ERROR_RATIO))?;
    let initial = initial_superposition(spec)?;
    let space = enumerate_phase_space(spec, &initial.support(), 1, true)?;
    let stencil = HamiltonianStencil::new(spec, &space, 1)?;
    let channels = build_jump_operators(spec, &space, 1)?;
    let mut psi0 = vec![S::czero(); space.dim()];
    for (s, a) in initial.terms() {
        psi0[space.index_of(s)?] = *a;
    }
    let rho0 = CMat::outer(&psi0);
    let window = (S::zero(), spec.window_end());
    let trajectory = propagate_density(&stencil, &rho0, &channels, window, settings)?;

    let target = control_phase_flip(&target_superposition(spec)?);
    let tvec = target.dense(&space)?;
    let fidelity = metrics::density_fidelity(&tvec, trajectory.final_density())?;
    Ok(DissipativeOutcome { space, trajectory, fidelity })
}
