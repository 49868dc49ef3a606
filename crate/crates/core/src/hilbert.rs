//! Labeled basis states and reachable-subspace enumeration.
//!
//! States carry explicit atomic level labels and per-mode photon counts, so
//! every operator and trajectory can be reported against human-readable
//! kets. Subspaces are built by breadth-first closure over the couplings
//! that act in a given phase, which keeps the working dimension at the
//! handful of states the dynamics can actually reach.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Cx;

/// Atomic level label.
///
/// Indexed variants address the ground and excited sublevel ladders of the
/// high-dimensional scheme; index 1 is the base rung and is displayed
/// without a suffix, so the qutrit-scheme labels read `L`, `R`, `eL`, `eR`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Zero,
    One,
    G,
    L(u8),
    R(u8),
    EL(u8),
    ER(u8),
}

impl Level {
    pub fn is_excited(self) -> bool {
        matches!(self, Level::EL(_) | Level::ER(_))
    }

    /// Sublevel ladder index; unindexed labels report 0.
    pub fn chain(self) -> u8 {
        match self {
            Level::Zero | Level::One | Level::G => 0,
            Level::L(i) | Level::R(i) | Level::EL(i) | Level::ER(i) => i,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, idx) = match self {
            Level::Zero => return write!(f, "0"),
            Level::One => return write!(f, "1"),
            Level::G => return write!(f, "g"),
            Level::L(i) => ("L", *i),
            Level::R(i) => ("R", *i),
            Level::EL(i) => ("eL", *i),
            Level::ER(i) => ("eR", *i),
        };
        if idx <= 1 {
            write!(f, "{name}")
        } else {
            write!(f, "{name}{idx}")
        }
    }
}

/// Photon polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    L,
    R,
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pol::L => write!(f, "L"),
            Pol::R => write!(f, "R"),
        }
    }
}

/// Where a bosonic mode lives, ordered along the physical layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeLocation {
    CavityControl,
    Fiber,
    CavityPartner,
}

/// One bosonic mode of the cavity-fiber-cavity plant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub location: ModeLocation,
    pub pol: Pol,
    pub chain: u8,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = match self.location {
            ModeLocation::CavityControl => "cavA",
            ModeLocation::Fiber => "fib",
            ModeLocation::CavityPartner => "cavB",
        };
        if self.chain <= 1 {
            write!(f, "{loc}.{}", self.pol)
        } else {
            write!(f, "{loc}.{}{}", self.pol, self.chain)
        }
    }
}

/// Deterministic mode list for a plant with the given number of
/// polarization-chain copies: chain-major, control cavity to fiber to
/// partner cavity, left polarization first.
pub fn plant_modes(chains: u8) -> Vec<Mode> {
    let mut modes = Vec::with_capacity(6 * chains as usize);
    for chain in 1..=chains {
        for location in [ModeLocation::CavityControl, ModeLocation::Fiber, ModeLocation::CavityPartner]
        {
            for pol in [Pol::L, Pol::R] {
                modes.push(Mode { location, pol, chain });
            }
        }
    }
    modes
}

/// Index of a mode within the `plant_modes` ordering.
pub fn mode_index(modes: &[Mode], location: ModeLocation, pol: Pol, chain: u8) -> Option<usize> {
    modes.iter().position(|m| m.location == location && m.pol == pol && m.chain == chain)
}

/// One product basis ket: a level per atom and a photon count per mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub atoms: Vec<Level>,
    pub photons: Vec<u8>,
}

impl BasisState {
    pub fn new(atoms: Vec<Level>, photons: Vec<u8>) -> Self {
        Self { atoms, photons }
    }

    /// All modes empty.
    pub fn vacuum(atoms: Vec<Level>, n_modes: usize) -> Self {
        Self { atoms, photons: vec![0; n_modes] }
    }

    pub fn with_atom(&self, atom: usize, level: Level) -> Self {
        let mut s = self.clone();
        s.atoms[atom] = level;
        s
    }

    /// Shifts one mode's occupation; `None` when the count would go
    /// negative.
    pub fn with_photon_shifted(&self, mode: usize, delta: i8) -> Option<Self> {
        let count = self.photons[mode] as i16 + delta as i16;
        if count < 0 {
            return None;
        }
        let mut s = self.clone();
        s.photons[mode] = count as u8;
        Some(s)
    }

    pub fn total_photons(&self) -> u32 {
        self.photons.iter().map(|&n| n as u32).sum()
    }

    pub fn has_excited_atom(&self) -> bool {
        self.atoms.iter().any(|l| l.is_excited())
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, level) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{level}")?;
        }
        write!(f, ";")?;
        let wide = self.photons.iter().any(|&n| n > 9);
        for (i, n) in self.photons.iter().enumerate() {
            if wide && i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "\u{27e9}")
    }
}

/// An ordered basis of labeled states with index lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSpace {
    basis: Vec<BasisState>,
    index: BTreeMap<BasisState, usize>,
}

impl StateSpace {
    /// Builds a space from an explicit state list, rejecting duplicates and
    /// mixed label shapes.
    pub fn from_states(states: Vec<BasisState>) -> Result<Self> {
        let mut index = BTreeMap::new();
        if let Some(first) = states.first() {
            let (na, nm) = (first.atoms.len(), first.photons.len());
            for s in &states {
                if s.atoms.len() != na {
                    return Err(Error::DimensionMismatch { expected: na, got: s.atoms.len() });
                }
                if s.photons.len() != nm {
                    return Err(Error::DimensionMismatch { expected: nm, got: s.photons.len() });
                }
            }
        }
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::DuplicateBasisState(s.to_string()));
            }
        }
        Ok(Self { basis: states, index })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.basis[i]
    }

    pub fn state_index(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Index lookup that reports the missing ket by label.
    pub fn index_of(&self, s: &BasisState) -> Result<usize> {
        self.state_index(s).ok_or_else(|| Error::UnknownBasisState(s.to_string()))
    }

    /// Builds a normalized state vector from labeled amplitudes.
    pub fn embed<S: Scalar>(&self, amplitudes: &[(BasisState, Cx<S>)]) -> Result<Vec<Cx<S>>> {
        let mut v = vec![S::czero(); self.dim()];
        for (s, a) in amplitudes {
            v[self.index_of(s)?] += *a;
        }
        crate::linalg::normalize(&mut v)?;
        Ok(v)
    }

    /// Unit vector on one labeled ket.
    pub fn ket<S: Scalar>(&self, s: &BasisState) -> Result<Vec<Cx<S>>> {
        let mut v = vec![S::czero(); self.dim()];
        v[self.index_of(s)?] = S::cone();
        Ok(v)
    }

    /// The sub-basis at the given indices, in the given order.
    pub fn subspace(&self, indices: &[usize]) -> Result<Self> {
        let states = indices.iter().map(|&i| self.basis[i].clone()).collect();
        Self::from_states(states)
    }
}

/// Breadth-first closure of the seed states under the given edges.
///
/// Coherent edges are treated as undirected by the callers (the neighbor
/// function must yield both an operator's action and its adjoint's), jump
/// edges only point forward. Layer zero keeps the seeds in caller order
/// with first-occurrence deduplication; each later layer is sorted, so the
/// resulting basis order is deterministic and enumerating a closed basis
/// again reproduces it unchanged.
pub fn enumerate_closure<F, G>(seeds: &[BasisState], mut coherent: F, mut jumps: G) -> Result<StateSpace>
where
    F: FnMut(&BasisState) -> Vec<BasisState>,
    G: FnMut(&BasisState) -> Vec<BasisState>,
{
    if seeds.is_empty() {
        return Err(Error::EmptyState);
    }
    let mut seen: BTreeSet<BasisState> = BTreeSet::new();
    let mut basis: Vec<BasisState> = Vec::new();
    let mut frontier: Vec<BasisState> = Vec::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            basis.push(s.clone());
            frontier.push(s.clone());
        }
    }
    while !frontier.is_empty() {
        let mut next: BTreeSet<BasisState> = BTreeSet::new();
        for s in &frontier {
            for t in coherent(s).into_iter().chain(jumps(s)) {
                if !seen.contains(&t) {
                    next.insert(t);
                }
            }
        }
        frontier = next.into_iter().collect();
        for s in &frontier {
            seen.insert(s.clone());
            basis.push(s.clone());
        }
    }
    StateSpace::from_states(basis)
}
