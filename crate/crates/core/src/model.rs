//! Physical scenario description: level schemes, drive pulses, couplings,
//! decoherence channels, and the sparse Hamiltonian built from them.
//!
//! All couplings are expressed in units of the reference drive amplitude,
//! and time in units of its inverse; the reference parameter set uses a
//! cavity coupling of 20 and a fiber coupling 100 times larger.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::hilbert::{
    self, plant_modes, BasisState, Level, Mode, ModeLocation, Pol, StateSpace,
};
use crate::linalg::SparseOp;
use crate::scalar::Scalar;
use crate::Cx;

/// One classical drive envelope: a single clamped `sin^4` lobe.
///
/// The value is `amplitude * sin^4(pi (t - delay) / width)` for `t` inside
/// `[delay, delay + width]` and exactly zero outside, so a delayed pulse
/// never leaks before its start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseShape<S: Scalar> {
    amplitude: S,
    delay: S,
    width: S,
}

impl<S: Scalar> PulseShape<S> {
    pub fn new(amplitude: S, delay: S, width: S) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < S::zero() {
            return Err(Error::InvalidPulse(format!(
                "amplitude must be finite and nonnegative, got {amplitude}"
            )));
        }
        if !delay.is_finite() || delay < S::zero() {
            return Err(Error::InvalidPulse(format!(
                "delay must be finite and nonnegative, got {delay}"
            )));
        }
        if !width.is_finite() || width <= S::zero() {
            return Err(Error::InvalidPulse(format!("width must be positive, got {width}")));
        }
        Ok(Self { amplitude, delay, width })
    }

    pub fn value(&self, t: S) -> S {
        let x = (t - self.delay) / self.width;
        if x < S::zero() || x > S::one() {
            return S::zero();
        }
        let s = (S::PI() * x).sin();
        self.amplitude * s * s * s * s
    }

    pub fn amplitude(&self) -> S {
        self.amplitude
    }

    pub fn delay(&self) -> S {
        self.delay
    }

    pub fn width(&self) -> S {
        self.width
    }

    pub fn support_end(&self) -> S {
        self.delay + self.width
    }
}

/// Atom-cavity and cavity-fiber coupling strengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSpec<S: Scalar> {
    pub g: S,
    pub eta: S,
}

impl<S: Scalar> CouplingSpec<S> {
    pub fn new(g: S, eta: S) -> Result<Self> {
        if !g.is_finite() || g <= S::zero() {
            return Err(Error::InvalidCoupling(format!(
                "cavity coupling must be positive, got {g}"
            )));
        }
        if !eta.is_finite() || eta <= S::zero() {
            return Err(Error::InvalidCoupling(format!(
                "fiber coupling must be positive, got {eta}"
            )));
        }
        Ok(Self { g, eta })
    }

    /// Short-fiber regime default: fiber coupling 100 times the cavity
    /// coupling.
    pub fn with_default_eta(g: S) -> Result<Self> {
        Self::new(g, g * S::real(100.0))
    }
}

/// Decoherence rates.
///
/// `kappa` and `gamma` are overall photon-leakage and spontaneous-emission
/// scales; each fiber and cavity channel defaults to `kappa / 2` and each
/// atomic decay channel to `gamma / 4`, matching a total decay rate of
/// `kappa` per polarization pathway and `gamma` per excited level pair.
/// Individual channel groups can be overridden.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceSpec<S: Scalar> {
    pub kappa: S,
    pub gamma: S,
    pub fiber_rate: Option<S>,
    pub cavity_rate: Option<S>,
    pub control_decay: Option<S>,
    pub partner_decay: Option<S>,
}

impl<S: Scalar> DecoherenceSpec<S> {
    pub fn closed() -> Self {
        Self {
            kappa: S::zero(),
            gamma: S::zero(),
            fiber_rate: None,
            cavity_rate: None,
            control_decay: None,
            partner_decay: None,
        }
    }

    pub fn new(kappa: S, gamma: S) -> Result<Self> {
        let spec = Self { kappa, gamma, ..Self::closed() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("kappa", Some(self.kappa)),
            ("gamma", Some(self.gamma)),
            ("fiber rate", self.fiber_rate),
            ("cavity rate", self.cavity_rate),
            ("control-atom decay", self.control_decay),
            ("partner-atom decay", self.partner_decay),
        ];
        for (name, rate) in named {
            if let Some(r) = rate {
                if !r.is_finite() || r < S::zero() {
                    return Err(Error::InvalidDecoherence(format!(
                        "{name} must be finite and nonnegative, got {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn fiber(&self) -> S {
        self.fiber_rate.unwrap_or(self.kappa / S::real(2.0))
    }

    pub fn cavity(&self) -> S {
        self.cavity_rate.unwrap_or(self.kappa / S::real(2.0))
    }

    pub fn control(&self) -> S {
        self.control_decay.unwrap_or(self.gamma / S::real(4.0))
    }

    pub fn partner(&self) -> S {
        self.partner_decay.unwrap_or(self.gamma / S::real(4.0))
    }

    /// True when every effective channel rate vanishes.
    pub fn is_closed(&self) -> bool {
        self.fiber() == S::zero()
            && self.cavity() == S::zero()
            && self.control() == S::zero()
            && self.partner() == S::zero()
    }
}

/// Which entangled-state family a scenario prepares.
///
/// `TwoAtom` is the base three-dimensional scheme. `NAtom(n)` chains the
/// same passage over `n` atoms, one partner at a time. `HighDim(m)` uses
/// `m` ground-sublevel chains per atom to reach a `2m + 1` dimensional
/// entangled pair; `HighDim(1)` coincides with `TwoAtom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    TwoAtom,
    NAtom(usize),
    HighDim(usize),
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::TwoAtom => Ok(()),
            Family::NAtom(n) if (2..=16).contains(&n) => Ok(()),
            Family::NAtom(n) => Err(Error::InvalidScenario(format!(
                "atom count must lie in 2..=16, got {n}"
            ))),
            Family::HighDim(m) if (1..=12).contains(&m) => Ok(()),
            Family::HighDim(m) => Err(Error::InvalidScenario(format!(
                "sublevel chain count must lie in 1..=12, got {m}"
            ))),
        }
    }

    pub fn n_atoms(&self) -> usize {
        match *self {
            Family::TwoAtom | Family::HighDim(_) => 2,
            Family::NAtom(n) => n,
        }
    }

    /// Number of polarization-chain copies of the mode plant.
    pub fn chains(&self) -> u8 {
        match *self {
            Family::TwoAtom | Family::NAtom(_) => 1,
            Family::HighDim(m) => m as u8,
        }
    }

    /// Levels available to the control atom.
    pub fn control_levels(&self) -> Vec<Level> {
        let mut levels = vec![Level::Zero, Level::One, Level::G];
        for i in 1..=self.chains() {
            levels.push(Level::L(i));
            levels.push(Level::R(i));
        }
        levels.push(Level::EL(1));
        levels.push(Level::ER(1));
        levels
    }

    /// Levels available to each partner atom.
    pub fn partner_levels(&self) -> Vec<Level> {
        let mut levels = vec![Level::G];
        for i in 1..=self.chains() {
            levels.push(Level::L(i));
            levels.push(Level::R(i));
            levels.push(Level::EL(i));
            levels.push(Level::ER(i));
        }
        levels
    }
}

/// Complete description of one simulated scenario.
#[derive(Clone, Debug)]
pub struct ScenarioSpec<S: Scalar> {
    pub family: Family,
    pub coupling: CouplingSpec<S>,
    pub drive_a: PulseShape<S>,
    pub drive_b: PulseShape<S>,
    pub decoherence: DecoherenceSpec<S>,
    pub cutoff: u8,
}

impl<S: Scalar> ScenarioSpec<S> {
    pub fn new(
        family: Family,
        coupling: CouplingSpec<S>,
        drive_a: PulseShape<S>,
        drive_b: PulseShape<S>,
        decoherence: DecoherenceSpec<S>,
        cutoff: u8,
    ) -> Result<Self> {
        family.validate()?;
        decoherence.validate()?;
        if cutoff == 0 {
            return Err(Error::InvalidCutoff);
        }
        Ok(Self { family, coupling, drive_a, drive_b, decoherence, cutoff })
    }

    /// The reference closed-system parameter point: cavity coupling 20,
    /// fiber coupling 2000, unit-amplitude pulses of width 31 with the
    /// control drive delayed by 5.27.
    pub fn reference(family: Family) -> Result<Self> {
        let g = S::real(20.0);
        Self::new(
            family,
            CouplingSpec::with_default_eta(g)?,
            PulseShape::new(S::one(), S::real(5.27), S::real(31.0))?,
            PulseShape::new(S::one(), S::zero(), S::real(31.0))?,
            DecoherenceSpec::closed(),
            1,
        )
    }

    pub fn modes(&self) -> Vec<Mode> {
        plant_modes(self.family.chains())
    }

    pub fn n_modes(&self) -> usize {
        6 * self.family.chains() as usize
    }

    /// Simulation window `[0, end]` covering both pulse lobes.
    pub fn window_end(&self) -> S {
        self.drive_a.support_end().max(self.drive_b.support_end())
    }

    /// Checks that a labeled ket fits this scenario's schemes and cutoff.
    pub fn validate_state(&self, s: &BasisState) -> Result<()> {
        let n_atoms = self.family.n_atoms();
        if s.atoms.len() != n_atoms {
            return Err(Error::DimensionMismatch { expected: n_atoms, got: s.atoms.len() });
        }
        if s.photons.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                got: s.photons.len(),
            });
        }
        let control = self.family.control_levels();
        let partner = self.family.partner_levels();
        for (i, level) in s.atoms.iter().enumerate() {
            let scheme = if i == 0 { &control } else { &partner };
            if !scheme.contains(level) {
                return Err(Error::LevelOutsideScheme { atom: i, level: level.to_string() });
            }
        }
        for &n in &s.photons {
            if n > self.cutoff {
                return Err(Error::InvalidState(format!(
                    "photon count {n} exceeds cutoff {}",
                    self.cutoff
                )));
            }
        }
        Ok(())
    }

    fn check_partner(&self, partner: usize) -> Result<()> {
        if partner == 0 || partner >= self.family.n_atoms() {
            return Err(Error::InvalidScenario(format!(
                "partner index {partner} out of range for {} atoms",
                self.family.n_atoms()
            )));
        }
        Ok(())
    }
}

/// A basis-level transition: optionally one atomic transition plus photon
/// creations and annihilations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermAction {
    pub transition: Option<(usize, Level, Level)>,
    pub modes: Vec<(usize, i8)>,
}

impl TermAction {
    pub fn atomic(atom: usize, from: Level, to: Level) -> Self {
        Self { transition: Some((atom, from, to)), modes: Vec::new() }
    }

    pub fn with_mode(mut self, mode: usize, delta: i8) -> Self {
        self.modes.push((mode, delta));
        self
    }

    pub fn bosonic(modes: Vec<(usize, i8)>) -> Self {
        Self { transition: None, modes }
    }

    /// Applies the action to a basis ket, returning the image ket and the
    /// bosonic matrix-element weight. `None` when the action annihilates
    /// the ket or the image exceeds the photon cutoff.
    pub fn apply<S: Scalar>(&self, s: &BasisState, cutoff: u8) -> Option<(BasisState, S)> {
        let mut out = s.clone();
        if let Some((atom, from, to)) = self.transition {
            if out.atoms[atom] != from {
                return None;
            }
            out.atoms[atom] = to;
        }
        let mut weight = S::one();
        for &(mode, delta) in &self.modes {
            let n = out.photons[mode];
            match delta {
                -1 => {
                    if n == 0 {
                        return None;
                    }
                    weight = weight * S::real(n as f64).sqrt();
                    out.photons[mode] = n - 1;
                }
                1 => {
                    if n >= cutoff {
                        return None;
                    }
                    weight = weight * S::real((n + 1) as f64).sqrt();
                    out.photons[mode] = n + 1;
                }
                _ => unreachable!("mode shifts are single quanta"),
            }
        }
        Some((out, weight))
    }

    /// The image ket alone.
    pub fn target(&self, s: &BasisState, cutoff: u8) -> Option<BasisState> {
        self.apply::<f64>(s, cutoff).map(|(t, _)| t)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            transition: self.transition.map(|(atom, from, to)| (atom, to, from)),
            modes: self.modes.iter().rev().map(|&(m, d)| (m, -d)).collect(),
        }
    }
}

/// Which scalar multiplies a Hamiltonian term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffSource {
    Static,
    DriveA,
    DriveB,
}

/// One Hamiltonian term `weight * coeff(t) * action`, implicitly
/// accompanied by its Hermitian conjugate.
#[derive(Clone, Debug)]
pub struct HTerm<S: Scalar> {
    pub source: CoeffSource,
    pub weight: S,
    pub action: TermAction,
}

/// The coherent terms active during a passage phase between the control
/// atom and the given partner.
pub fn terms_for_phase<S: Scalar>(
    spec: &ScenarioSpec<S>,
    partner: usize,
) -> Result<Vec<HTerm<S>>> {
    spec.check_partner(partner)?;
    let modes = spec.modes();
    let chains = spec.family.chains();
    let g = spec.coupling.g;
    let eta = spec.coupling.eta;
    let midx = |loc, pol, chain| {
        hilbert::mode_index(&modes, loc, pol, chain).expect("mode present in plant")
    };

    let mut terms = Vec::new();
    terms.push(HTerm {
        source: CoeffSource::DriveA,
        weight: S::one(),
        action: TermAction::atomic(0, Level::One, Level::EL(1)),
    });
    terms.push(HTerm {
        source: CoeffSource::DriveA,
        weight: S::one(),
        action: TermAction::atomic(0, Level::Zero, Level::ER(1)),
    });
    for i in 1..=chains {
        terms.push(HTerm {
            source: CoeffSource::DriveB,
            weight: S::one(),
            action: TermAction::atomic(partner, Level::L(i), Level::EL(i)),
        });
        terms.push(HTerm {
            source: CoeffSource::DriveB,
            weight: S::one(),
            action: TermAction::atomic(partner, Level::R(i), Level::ER(i)),
        });
        terms.push(HTerm {
            source: CoeffSource::Static,
            weight: g,
            action: TermAction::atomic(0, Level::L(i), Level::EL(1))
                .with_mode(midx(ModeLocation::CavityControl, Pol::L, i), -1),
        });
        terms.push(HTerm {
            source: CoeffSource::Static,
            weight: g,
            action: TermAction::atomic(0, Level::R(i), Level::ER(1))
                .with_mode(midx(ModeLocation::CavityControl, Pol::R, i), -1),
        });
        terms.push(HTerm {
            source: CoeffSource::Static,
            weight: g,
            action: TermAction::atomic(partner, Level::G, Level::EL(i))
                .with_mode(midx(ModeLocation::CavityPartner, Pol::L, i), -1),
        });
        terms.push(HTerm {
            source: CoeffSource::Static,
            weight: g,
            action: TermAction::atomic(partner, Level::G, Level::ER(i))
                .with_mode(midx(ModeLocation::CavityPartner, Pol::R, i), -1),
        });
        for pol in [Pol::L, Pol::R] {
            for cavity in [ModeLocation::CavityControl, ModeLocation::CavityPartner] {
                terms.push(HTerm {
                    source: CoeffSource::Static,
                    weight: eta,
                    action: TermAction::bosonic(vec![
                        (midx(ModeLocation::Fiber, pol, i), -1),
                        (midx(cavity, pol, i), 1),
                    ]),
                });
            }
        }
    }
    Ok(terms)
}

/// Time-dependent sparse Hamiltonian with a fixed sparsity pattern.
///
/// The pattern is shared between the static couplings and the two drive
/// envelopes, so evaluating `H(t)` is a scale-and-add over three value
/// arrays with no allocation.
#[derive(Clone, Debug)]
pub struct HamiltonianStencil<S: Scalar> {
    pattern: SparseOp<S>,
    static_vals: Vec<Cx<S>>,
    drive_a_vals: Vec<Cx<S>>,
    drive_b_vals: Vec<Cx<S>>,
    drive_a: PulseShape<S>,
    drive_b: PulseShape<S>,
    rate_bound: S,
}

impl<S: Scalar> HamiltonianStencil<S> {
    pub fn new(spec: &ScenarioSpec<S>, space: &StateSpace, partner: usize) -> Result<Self> {
        let terms = terms_for_phase(spec, partner)?;
        let dim = space.dim();
        let mut triplets: Vec<(CoeffSource, usize, usize, S)> = Vec::new();
        for (col, s) in space.basis().iter().enumerate() {
            for term in &terms {
                for action in [term.action.clone(), term.action.adjoint()] {
                    if let Some((t, bose)) = action.apply::<S>(s, spec.cutoff) {
                        if let Some(row) = space.state_index(&t) {
                            triplets.push((term.source, row, col, term.weight * bose));
                        }
                    }
                }
            }
        }

        let keys: BTreeSet<(usize, usize)> =
            triplets.iter().map(|&(_, r, c, _)| (r, c)).collect();
        let dummy: Vec<(usize, usize, Cx<S>)> =
            keys.iter().map(|&(r, c)| (r, c, S::cone())).collect();
        let mut pattern = SparseOp::from_triplets(dim, &dummy)?;
        let slot: BTreeMap<(usize, usize), usize> =
            pattern.iter().enumerate().map(|(k, (r, c, _))| ((r, c), k)).collect();

        let nnz = pattern.nnz();
        let mut static_vals = vec![S::czero(); nnz];
        let mut drive_a_vals = vec![S::czero(); nnz];
        let mut drive_b_vals = vec![S::czero(); nnz];
        for (source, r, c, w) in triplets {
            let k = slot[&(r, c)];
            let dst = match source {
                CoeffSource::Static => &mut static_vals,
                CoeffSource::DriveA => &mut drive_a_vals,
                CoeffSource::DriveB => &mut drive_b_vals,
            };
            dst[k] += S::cre(w);
        }
        pattern.values_mut().copy_from_slice(&static_vals);

        let pa = spec.drive_a.amplitude();
        let pb = spec.drive_b.amplitude();
        let mut row_sums = vec![S::zero(); dim];
        for (k, (r, _, _)) in pattern.iter().enumerate() {
            row_sums[r] += static_vals[k].norm()
                + pa * drive_a_vals[k].norm()
                + pb * drive_b_vals[k].norm();
        }
        let rate_bound = row_sums.into_iter().fold(S::zero(), S::max);

        Ok(Self {
            pattern,
            static_vals,
            drive_a_vals,
            drive_b_vals,
            drive_a: spec.drive_a,
            drive_b: spec.drive_b,
            rate_bound,
        })
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    /// A sparse operator sharing this stencil's pattern, for use as an
    /// `eval_into` buffer.
    pub fn template(&self) -> SparseOp<S> {
        self.pattern.clone()
    }

    /// Writes `H(t)` into a buffer cloned from `template`.
    pub fn eval_into(&self, t: S, op: &mut SparseOp<S>) {
        let oa = S::cre(self.drive_a.value(t));
        let ob = S::cre(self.drive_b.value(t));
        let vals = op.values_mut();
        debug_assert_eq!(vals.len(), self.static_vals.len());
        for (k, v) in vals.iter_mut().enumerate() {
            *v = self.static_vals[k] + oa * self.drive_a_vals[k] + ob * self.drive_b_vals[k];
        }
    }

    /// Gershgorin bound on `|H(t)|` over the whole window, drives at peak.
    pub fn rate_bound(&self) -> S {
        self.rate_bound
    }

    /// The drive-independent part of the Hamiltonian.
    pub fn static_part(&self) -> SparseOp<S> {
        let mut op = self.pattern.clone();
        op.values_mut().copy_from_slice(&self.static_vals);
        op
    }

    /// The operator multiplying one drive envelope.
    pub fn drive_part(&self, source: CoeffSource) -> SparseOp<S> {
        let vals = match source {
            CoeffSource::Static => &self.static_vals,
            CoeffSource::DriveA => &self.drive_a_vals,
            CoeffSource::DriveB => &self.drive_b_vals,
        };
        let mut op = self.pattern.clone();
        op.values_mut().copy_from_slice(vals);
        op
    }
}

/// Builds `H(t)` directly; convenience for tests and one-shot uses.
pub fn build_hamiltonian<S: Scalar>(
    spec: &ScenarioSpec<S>,
    space: &StateSpace,
    partner: usize,
    t: S,
) -> Result<SparseOp<S>> {
    let stencil = HamiltonianStencil::new(spec, space, partner)?;
    let mut op = stencil.template();
    stencil.eval_into(t, &mut op);
    Ok(op)
}

/// One Lindblad channel: a bare jump operator and its rate.
#[derive(Clone, Debug)]
pub struct JumpChannel<S: Scalar> {
    pub label: String,
    pub rate: S,
    pub op: SparseOp<S>,
}

fn jump_actions<S: Scalar>(
    spec: &ScenarioSpec<S>,
    partner: usize,
) -> Result<Vec<(String, S, TermAction)>> {
    spec.check_partner(partner)?;
    let modes = spec.modes();
    let chains = spec.family.chains();
    let dec = &spec.decoherence;
    let mut actions = Vec::new();
    for (loc, rate) in [
        (ModeLocation::Fiber, dec.fiber()),
        (ModeLocation::CavityControl, dec.cavity()),
        (ModeLocation::CavityPartner, dec.cavity()),
    ] {
        for i in 1..=chains {
            for pol in [Pol::L, Pol::R] {
                let idx = hilbert::mode_index(&modes, loc, pol, i).expect("mode present");
                let mode = modes[idx];
                actions.push((mode.to_string(), rate, TermAction::bosonic(vec![(idx, -1)])));
            }
        }
    }
    for (excited, ground) in [(Level::EL(1), Level::One), (Level::ER(1), Level::Zero)] {
        actions.push((
            format!("A:{excited}->{ground}"),
            dec.control(),
            TermAction::atomic(0, excited, ground),
        ));
    }
    for i in 1..=chains {
        for (excited, ground) in [(Level::EL(1), Level::L(i)), (Level::ER(1), Level::R(i))] {
            actions.push((
                format!("A:{excited}->{ground}"),
                dec.control(),
                TermAction::atomic(0, excited, ground),
            ));
        }
    }
    for i in 1..=chains {
        for (excited, ground) in [
            (Level::EL(i), Level::L(i)),
            (Level::EL(i), Level::G),
            (Level::ER(i), Level::R(i)),
            (Level::ER(i), Level::G),
        ] {
            actions.push((
                format!("B:{excited}->{ground}"),
                dec.partner(),
                TermAction::atomic(partner, excited, ground),
            ));
        }
    }
    Ok(actions)
}

/// The Lindblad channels active during a passage phase, in a fixed order:
/// fiber and cavity leakage first, then control-atom decay, then
/// partner-atom decay. Channels with zero rate are retained so the channel
/// list does not change shape across a rate sweep.
pub fn build_jump_operators<S: Scalar>(
    spec: &ScenarioSpec<S>,
    space: &StateSpace,
    partner: usize,
) -> Result<Vec<JumpChannel<S>>> {
    let actions = jump_actions(spec, partner)?;
    let mut channels = Vec::with_capacity(actions.len());
    for (label, rate, action) in actions {
        let mut triplets = Vec::new();
        for (col, s) in space.basis().iter().enumerate() {
            if let Some((t, bose)) = action.apply::<S>(s, spec.cutoff) {
                if let Some(row) = space.state_index(&t) {
                    triplets.push((row, col, S::cre(bose)));
                }
            }
        }
        channels.push(JumpChannel {
            label,
            rate,
            op: SparseOp::from_triplets(space.dim(), &triplets)?,
        });
    }
    Ok(channels)
}

/// Enumerates the subspace reachable from `seeds` during a passage phase.
///
/// Coherent couplings connect states in both directions; when
/// `with_jumps` is set, decay channels extend the space forward so a
/// dissipative trajectory stays inside it.
pub fn enumerate_phase_space<S: Scalar>(
    spec: &ScenarioSpec<S>,
    seeds: &[BasisState],
    partner: usize,
    with_jumps: bool,
) -> Result<StateSpace> {
    let terms = terms_for_phase(spec, partner)?;
    let cutoff = spec.cutoff;
    let coherent = |s: &BasisState| {
        let mut out = Vec::new();
        for term in &terms {
            if let Some(t) = term.action.target(s, cutoff) {
                out.push(t);
            }
            if let Some(t) = term.action.adjoint().target(s, cutoff) {
                out.push(t);
            }
        }
        out
    };
    let jump_list =
        if with_jumps { jump_actions(spec, partner)? } else { Vec::new() };
    let jumps = |s: &BasisState| {
        jump_list.iter().filter_map(|(_, _, a)| a.target(s, cutoff)).collect()
    };
    hilbert::enumerate_closure(seeds, coherent, jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_atom_spec() -> ScenarioSpec<f64> {
        ScenarioSpec::reference(Family::TwoAtom).unwrap()
    }

    fn vac(a: Level, b: Level) -> BasisState {
        BasisState::vacuum(vec![a, b], 6)
    }

    #[test]
    fn test_pulse_shape() {
        let p = PulseShape::new(2.0, 5.0, 31.0).unwrap();
        assert_eq!(p.value(4.9), 0.0);
        assert_eq!(p.value(36.1), 0.0);
        assert_eq!(p.value(5.0), 0.0);
        assert_abs_diff_eq!(p.value(5.0 + 15.5), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.value(5.0 + 31.0 / 4.0), 0.5, epsilon = 1e-14);
        assert!(PulseShape::new(1.0, 0.0, 0.0).is_err());
        assert!(PulseShape::new(-1.0, 0.0, 1.0).is_err());
        assert!(PulseShape::new(1.0, -0.5, 1.0).is_err());
    }

    #[test]
    fn test_coupling_defaults() {
        let c = CouplingSpec::with_default_eta(20.0).unwrap();
        assert_eq!(c.eta, 2000.0);
        assert!(CouplingSpec::new(0.0, 1.0).is_err());
    }

    #[test]
    fn test_decoherence_defaults_and_overrides() {
        let d = DecoherenceSpec::new(0.4, 0.8).unwrap();
        assert_abs_diff_eq!(d.fiber(), 0.2);
        assert_abs_diff_eq!(d.cavity(), 0.2);
        assert_abs_diff_eq!(d.control(), 0.2);
        assert_abs_diff_eq!(d.partner(), 0.2);
        let mut d = d;
        d.fiber_rate = Some(0.05);
        assert_abs_diff_eq!(d.fiber(), 0.05);
        assert!(!d.is_closed());
        assert!(DecoherenceSpec::new(-0.1, 0.0).is_err());
        assert!(DecoherenceSpec::<f64>::closed().is_closed());
    }

    #[test]
    fn test_family_schemes() {
        let f = Family::TwoAtom;
        assert_eq!(f.control_levels().len(), 7);
        assert_eq!(f.partner_levels().len(), 5);
        let f = Family::HighDim(2);
        assert_eq!(f.control_levels().len(), 9);
        assert_eq!(f.partner_levels().len(), 9);
        assert!(Family::NAtom(1).validate().is_err());
        assert!(Family::HighDim(0).validate().is_err());
    }

    #[test]
    fn test_validate_state() {
        let spec = two_atom_spec();
        assert!(spec.validate_state(&vac(Level::Zero, Level::G)).is_ok());
        let err = spec.validate_state(&vac(Level::G, Level::Zero)).unwrap_err();
        assert!(err.to_string().contains("atom 1"));
        let over = BasisState::new(vec![Level::G, Level::G], vec![2, 0, 0, 0, 0, 0]);
        assert!(spec.validate_state(&over).is_err());
    }

    fn chain_states() -> Vec<BasisState> {
        let photon = |idx: usize| {
            let mut p = vec![0u8; 6];
            p[idx] = 1;
            p
        };
        vec![
            vac(Level::Zero, Level::G),
            vac(Level::ER(1), Level::G),
            BasisState::new(vec![Level::R(1), Level::G], photon(1)),
            BasisState::new(vec![Level::R(1), Level::G], photon(3)),
            BasisState::new(vec![Level::R(1), Level::G], photon(5)),
            vac(Level::R(1), Level::ER(1)),
            vac(Level::R(1), Level::R(1)),
        ]
    }

    #[test]
    fn test_single_branch_closure_order() {
        let spec = two_atom_spec();
        let space =
            enumerate_phase_space(&spec, &[vac(Level::Zero, Level::G)], 1, false).unwrap();
        assert_eq!(space.basis(), chain_states().as_slice());
    }

    #[test]
    fn test_left_branch_closure() {
        let spec = two_atom_spec();
        let space =
            enumerate_phase_space(&spec, &[vac(Level::One, Level::G)], 1, false).unwrap();
        assert_eq!(space.dim(), 7);
        assert_eq!(space.state(1), &vac(Level::EL(1), Level::G));
        assert_eq!(space.state(6), &vac(Level::L(1), Level::L(1)));
    }

    #[test]
    fn test_chain_hamiltonian_elements() {
        let spec = two_atom_spec();
        let space = StateSpace::from_states(chain_states()).unwrap();
        let t = 18.0;
        let h = build_hamiltonian(&spec, &space, 1, t).unwrap().to_dense();
        let oa = spec.drive_a.value(t);
        let ob = spec.drive_b.value(t);
        assert!(oa > 0.0 && ob > 0.0);
        let expect = [oa, 20.0, 2000.0, 2000.0, 20.0, ob];
        for (i, &e) in expect.iter().enumerate() {
            assert_abs_diff_eq!(h[(i + 1, i)].re, e, epsilon = 1e-12);
            assert_abs_diff_eq!(h[(i, i + 1)].re, e, epsilon = 1e-12);
        }
        for i in 0..7usize {
            for j in 0..7 {
                if i.abs_diff(j) != 1 {
                    assert_eq!(h[(i, j)], crate::C64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(h.hermiticity_residual(), 0.0);
    }

    #[test]
    fn test_stencil_matches_direct_build() {
        let spec = two_atom_spec();
        let space = StateSpace::from_states(chain_states()).unwrap();
        let stencil = HamiltonianStencil::new(&spec, &space, 1).unwrap();
        let mut buf = stencil.template();
        for &t in &[0.0, 7.3, 18.0, 31.0, 36.27] {
            stencil.eval_into(t, &mut buf);
            let direct = build_hamiltonian(&spec, &space, 1, t).unwrap();
            assert_eq!(buf.to_dense(), direct.to_dense());
        }
    }

    #[test]
    fn test_rate_bound_covers_peak() {
        let spec = two_atom_spec();
        let space = StateSpace::from_states(chain_states()).unwrap();
        let stencil = HamiltonianStencil::new(&spec, &space, 1).unwrap();
        let bound = stencil.rate_bound();
        assert!(bound >= 4000.0);
        let mut buf = stencil.template();
        for step in 0..=400 {
            let t = 36.27 * step as f64 / 400.0;
            stencil.eval_into(t, &mut buf);
            assert!(buf.gershgorin_bound() <= bound + 1e-9);
        }
    }

    #[test]
    fn test_cutoff_and_bose_weights() {
        let action = TermAction::bosonic(vec![(0, 1)]);
        let s = BasisState::new(vec![Level::G], vec![1]);
        assert!(action.apply::<f64>(&s, 1).is_none());
        let (t, w) = action.apply::<f64>(&s, 2).unwrap();
        assert_eq!(t.photons[0], 2);
        assert_abs_diff_eq!(w, 2f64.sqrt(), epsilon = 1e-15);
        let down = action.adjoint();
        let (t, w) = down.apply::<f64>(&t, 2).unwrap();
        assert_eq!(t.photons[0], 1);
        assert_abs_diff_eq!(w, 2f64.sqrt(), epsilon = 1e-15);
    }

    fn dissipative_seeds() -> Vec<BasisState> {
        vec![
            vac(Level::Zero, Level::G),
            vac(Level::One, Level::G),
            vac(Level::G, Level::G),
        ]
    }

    /// Order-free fixpoint oracle for the reachable set: applies every
    /// coherent action, its adjoint, and every jump action to every member
    /// until the set stops growing.
    fn reachable_fixpoint(spec: &ScenarioSpec<f64>, seeds: &[BasisState]) -> BTreeSet<BasisState> {
        let terms = terms_for_phase(spec, 1).unwrap();
        let jumps = jump_actions(spec, 1).unwrap();
        let mut set: BTreeSet<BasisState> = seeds.iter().cloned().collect();
        loop {
            let mut grew = false;
            let snapshot: Vec<BasisState> = set.iter().cloned().collect();
            for s in &snapshot {
                let mut images = Vec::new();
                for term in &terms {
                    images.extend(term.action.target(s, spec.cutoff));
                    images.extend(term.action.adjoint().target(s, spec.cutoff));
                }
                for (_, _, a) in &jumps {
                    images.extend(a.target(s, spec.cutoff));
                }
                for t in images {
                    grew |= set.insert(t);
                }
            }
            if !grew {
                return set;
            }
        }
    }

    #[test]
    fn test_dissipative_space_matches_fixpoint_oracle() {
        let mut spec = two_atom_spec();
        spec.decoherence = DecoherenceSpec::new(0.1, 0.1).unwrap();
        let seeds = dissipative_seeds();
        let oracle = reachable_fixpoint(&spec, &seeds);
        assert_eq!(oracle.len(), 17);
        let space = enumerate_phase_space(&spec, &seeds, 1, true).unwrap();
        assert_eq!(space.dim(), 17);
        let got: BTreeSet<BasisState> = space.basis().iter().cloned().collect();
        assert_eq!(got, oracle);
        assert!(space.state_index(&vac(Level::R(1), Level::G)).is_some());
        assert!(space.state_index(&vac(Level::L(1), Level::G)).is_some());
    }

    #[test]
    fn test_jump_channels_two_atom() {
        let mut spec = two_atom_spec();
        spec.decoherence = DecoherenceSpec::new(0.2, 0.4).unwrap();
        let seeds = dissipative_seeds();
        let space = enumerate_phase_space(&spec, &seeds, 1, true).unwrap();
        let channels = build_jump_operators(&spec, &space, 1).unwrap();
        assert_eq!(channels.len(), 14);
        let labels: Vec<&str> = channels.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "fib.L", "fib.R", "cavA.L", "cavA.R", "cavB.L", "cavB.R", "A:eL->1",
                "A:eR->0", "A:eL->L", "A:eR->R", "B:eL->L", "B:eL->g", "B:eR->R", "B:eR->g"
            ]
        );
        for c in &channels[..6] {
            assert_abs_diff_eq!(c.rate, 0.1);
        }
        for c in &channels[6..] {
            assert_abs_diff_eq!(c.rate, 0.1);
        }
        let closed = two_atom_spec();
        let channels = build_jump_operators(&closed, &space, 1).unwrap();
        assert_eq!(channels.len(), 14);
        assert!(channels.iter().all(|c| c.rate == 0.0));
    }

    #[test]
    fn test_highdim_branch_dimension() {
        let spec = ScenarioSpec::<f64>::reference(Family::HighDim(2)).unwrap();
        let seed = BasisState::vacuum(vec![Level::Zero, Level::G], spec.n_modes());
        let space = enumerate_phase_space(&spec, &[seed], 1, false).unwrap();
        assert_eq!(space.dim(), 12);
        let finals = [
            BasisState::vacuum(vec![Level::R(1), Level::R(1)], 12),
            BasisState::vacuum(vec![Level::R(2), Level::R(2)], 12),
        ];
        for f in &finals {
            assert!(space.state_index(f).is_some());
        }
    }

    #[test]
    fn test_partner_index_checked() {
        let spec = two_atom_spec();
        assert!(terms_for_phase(&spec, 0).is_err());
        assert!(terms_for_phase(&spec, 2).is_err());
    }
}
