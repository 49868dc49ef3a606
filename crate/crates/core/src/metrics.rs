//! Fidelities, populations, and labeled observable sets.
//!
//! Fidelity follows the squared-overlap convention: `|<target|psi>|^2`
//! against a pure state and `<target|rho|target>` against a density
//! matrix. Reported populations are clamped to `[0, 1]` so trailing-digit
//! integrator noise never produces a negative probability in output files.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scalar::Scalar;
use crate::Cx;

fn clamp_unit<S: Scalar>(x: S) -> S {
    x.max(S::zero()).min(S::one())
}

/// Squared overlap of a pure state with a target ket.
pub fn state_fidelity<S: Scalar>(target: &[Cx<S>], psi: &[Cx<S>]) -> Result<S> {
    if target.len() != psi.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: psi.len() });
    }
    Ok(clamp_unit(linalg::dot(target, psi).norm_sqr()))
}

/// Target-ket expectation of a density matrix.
pub fn density_fidelity<S: Scalar>(target: &[Cx<S>], rho: &CMat<S>) -> Result<S> {
    if target.len() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: rho.dim() });
    }
    Ok(clamp_unit(rho.expectation(target).re))
}

/// Probability outside the listed basis indices.
pub fn leakage_state<S: Scalar>(psi: &[Cx<S>], kept: &[usize]) -> S {
    let inside: S = kept.iter().map(|&i| psi[i].norm_sqr()).sum();
    clamp_unit(S::one() - inside)
}

/// Probability weight outside the listed basis indices.
pub fn leakage_density<S: Scalar>(rho: &CMat<S>, kept: &[usize]) -> S {
    let inside: S = kept.iter().map(|&i| rho[(i, i)].re).sum();
    clamp_unit(S::one() - inside)
}

/// `tr(rho^2)`.
pub fn purity<S: Scalar>(rho: &CMat<S>) -> S {
    let mut acc = S::zero();
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            acc += rho[(i, j)].norm_sqr();
        }
    }
    clamp_unit(acc)
}

/// One labeled scalar observable.
#[derive(Clone, Debug)]
pub enum Observable<S: Scalar> {
    /// Occupation of a single basis ket.
    Population { label: String, index: usize },
    /// Squared overlap with a fixed ket.
    KetProjector { label: String, ket: Vec<Cx<S>> },
    /// Expectation of a projection matrix.
    Projector { label: String, op: CMat<S> },
}

impl<S: Scalar> Observable<S> {
    pub fn label(&self) -> &str {
        match self {
            Observable::Population { label, .. }
            | Observable::KetProjector { label, .. }
            | Observable::Projector { label, .. } => label,
        }
    }
}

/// A validated, dimension-consistent list of observables.
#[derive(Clone, Debug)]
pub struct ObservableSet<S: Scalar> {
    dim: usize,
    observables: Vec<Observable<S>>,
}

impl<S: Scalar> ObservableSet<S> {
    pub fn new(dim: usize, observables: Vec<Observable<S>>) -> Result<Self> {
        for obs in &observables {
            match obs {
                Observable::Population { index, .. } => {
                    if *index >= dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: index + 1 });
                    }
                }
                Observable::KetProjector { ket, .. } => {
                    if ket.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: ket.len() });
                    }
                    let norm = linalg::norm_sqr(ket);
                    if (norm - S::one()).abs() > S::epsilon().sqrt() {
                        return Err(Error::InvalidState(format!(
                            "projector ket for {} has norm {}",
                            obs.label(),
                            norm.sqrt()
                        )));
                    }
                }
                Observable::Projector { op, .. } => {
                    if op.dim() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: op.dim() });
                    }
                    let herm = op.hermiticity_residual();
                    if herm > S::real(1e-10) {
                        return Err(Error::NonHermitian {
                            residual: herm.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    let mut sq = op.mul(op);
                    sq.add_scaled(-S::cone(), op);
                    let residual = sq.max_abs();
                    if residual > S::real(1e-10) {
                        return Err(Error::NotAProjector {
                            residual: residual.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
            }
        }
        Ok(Self { dim, observables })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> Vec<&str> {
        self.observables.iter().map(|o| o.label()).collect()
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn evaluate_state(&self, psi: &[Cx<S>]) -> Vec<S> {
        self.observables
            .iter()
            .map(|obs| {
                let raw = match obs {
                    Observable::Population { index, .. } => psi[*index].norm_sqr(),
                    Observable::KetProjector { ket, .. } => linalg::dot(ket, psi).norm_sqr(),
                    Observable::Projector { op, .. } => op.expectation(psi).re,
                };
                clamp_unit(raw)
            })
            .collect()
    }

    pub fn evaluate_density(&self, rho: &CMat<S>) -> Vec<S> {
        self.observables
            .iter()
            .map(|obs| {
                let raw = match obs {
                    Observable::Population { index, .. } => rho[(*index, *index)].re,
                    Observable::KetProjector { ket, .. } => rho.expectation(ket).re,
                    Observable::Projector { op, .. } => {
                        let mut acc = S::zero();
                        for i in 0..self.dim {
                            for j in 0..self.dim {
                                acc += (op[(i, j)] * rho[(j, i)]).re;
                            }
                        }
                        acc
                    }
                };
                clamp_unit(raw)
            })
            .collect()
    }
}
