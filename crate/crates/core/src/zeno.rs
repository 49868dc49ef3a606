//! Invariant-subspace decomposition of the strong coupling Hamiltonian and
//! the reduced model it induces for the driven passage.
//!
//! With the drives off, the cavity-fiber couplings split the reachable
//! space into well-separated eigenvalue clusters. Weak drives cannot move
//! population between clusters, so the passage dynamics reduces to the
//! drive matrix elements projected into the zero-eigenvalue cluster: a few
//! bare endpoint kets plus one or more dressed bridge states.


use crate::dynamics::DrivenHamiltonian;
use crate::error::{Error, Result};
use crate::hilbert::StateSpace;
use crate::linalg::{self, eigh, CMat, SparseOp};
use crate::model::{CoeffSource, HamiltonianStencil, PulseShape, ScenarioSpec};
use crate::scalar::Scalar;
use crate::Cx;

/// One eigenvalue cluster of the static coupling Hamiltonian.
#[derive(Clone, Debug)]
pub struct ZenoCluster<S: Scalar> {
    pub eigenvalue: S,
    pub indices: Vec<usize>,
    pub projector: CMat<S>,
}

/// Full clustered eigendecomposition.
#[derive(Clone, Debug)]
pub struct ZenoDecomposition<S: Scalar> {
    pub eigenvalues: Vec<S>,
    pub vectors: CMat<S>,
    pub clusters: Vec<ZenoCluster<S>>,
    gap_threshold: S,
}

impl<S: Scalar> ZenoDecomposition<S> {
    /// The cluster with eigenvalue zero, which hosts the protected passage.
    pub fn zero_cluster(&self) -> Result<&ZenoCluster<S>> {
        self.clusters
            .iter()
            .find(|c| c.eigenvalue.abs() <= self.gap_threshold)
            .ok_or(Error::NoDarkSubspace)
    }
}

fn check_tolerance<S: Scalar>(tol: S) -> Result<()> {
    if !(tol > S::zero() && tol <= S::real(1e-3)) {
        return Err(Error::InvalidTolerance(tol.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Diagonalizes a static Hamiltonian and groups eigenvalues whose spacing
/// is below `tol` times the spectral radius.
pub fn zeno_decompose<S: Scalar>(
    h_static: &SparseOp<S>,
    tol: S,
) -> Result<ZenoDecomposition<S>> {
    check_tolerance(tol)?;
    let dense = h_static.to_dense();
    let scale = dense.max_abs().max(S::one());
    let residual = dense.hermiticity_residual();
    if residual > scale * S::real(1e-10) {
        return Err(Error::NonHermitian { residual: residual.to_f64().unwrap_or(f64::NAN) });
    }
    let (vals, vecs) = eigh(&dense)?;
    let radius = vals.iter().fold(S::zero(), |a, &v| a.max(v.abs()));
    let gap = tol * radius;

    let mut clusters: Vec<ZenoCluster<S>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for i in 0..vals.len() {
        if let Some(&last) = current.last() {
            if vals[i] - vals[last] > gap {
                clusters.push(close_cluster(&vals, &vecs, std::mem::take(&mut current)));
            }
        }
        current.push(i);
    }
    if !current.is_empty() {
        clusters.push(close_cluster(&vals, &vecs, current));
    }
    Ok(ZenoDecomposition { eigenvalues: vals, vectors: vecs, clusters, gap_threshold: gap })
}

fn close_cluster<S: Scalar>(vals: &[S], vecs: &CMat<S>, indices: Vec<usize>) -> ZenoCluster<S> {
    let mut mean = S::zero();
    let mut projector = CMat::zeros(vecs.dim());
    for &i in &indices {
        mean += vals[i];
        let col = vecs.column(i);
        projector.add_scaled(S::cone(), &CMat::outer(&col));
    }
    mean = mean / S::real(indices.len() as f64);
    ZenoCluster { eigenvalue: mean, indices, projector }
}

/// The drive dynamics projected into the zero cluster.
///
/// The basis is ordered: bare start kets (coupled by the control drive),
/// bare final kets (coupled by the partner drive), then orthonormal bridge
/// states, each phase-fixed so its largest component is real positive.
#[derive(Clone, Debug)]
pub struct EffectiveModel<S: Scalar> {
    full_dim: usize,
    basis: Vec<Vec<Cx<S>>>,
    labels: Vec<String>,
    n_start: usize,
    n_final: usize,
    static_mat: CMat<S>,
    drive_a_mat: CMat<S>,
    drive_b_mat: CMat<S>,
    pulse_a: PulseShape<S>,
    pulse_b: PulseShape<S>,
    start_indices: Vec<usize>,
    final_indices: Vec<usize>,
}

impl<S: Scalar> EffectiveModel<S> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn n_start(&self) -> usize {
        self.n_start
    }

    pub fn n_final(&self) -> usize {
        self.n_final
    }

    pub fn n_bridge(&self) -> usize {
        self.dim() - self.n_start - self.n_final
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basis(&self) -> &[Vec<Cx<S>>] {
        &self.basis
    }

    /// Positions of the bare start kets in the underlying state space.
    pub fn start_indices(&self) -> &[usize] {
        &self.start_indices
    }

    /// Positions of the bare final kets in the underlying state space.
    pub fn final_indices(&self) -> &[usize] {
        &self.final_indices
    }

    /// The reduced Hamiltonian at given instantaneous drive amplitudes.
    pub fn hamiltonian(&self, oa: S, ob: S) -> CMat<S> {
        let mut h = self.static_mat.clone();
        h.add_scaled(S::cre(oa), &self.drive_a_mat);
        h.add_scaled(S::cre(ob), &self.drive_b_mat);
        h
    }

    /// The reduced model as a propagatable time-dependent Hamiltonian.
    pub fn source(&self) -> Result<DrivenHamiltonian<S>> {
        DrivenHamiltonian::new(
            &self.static_mat,
            &self.drive_a_mat,
            &self.drive_b_mat,
            self.pulse_a,
            self.pulse_b,
        )
    }

    /// Expands reduced coordinates into the full state space.
    pub fn embed(&self, coords: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: coords.len() });
        }
        let mut out = vec![S::czero(); self.full_dim];
        for (c, b) in coords.iter().zip(&self.basis) {
            linalg::axpy(*c, b, &mut out);
        }
        Ok(out)
    }

    /// Projects a full-space vector onto the reduced basis.
    pub fn project(&self, psi: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
        if psi.len() != self.full_dim {
            return Err(Error::DimensionMismatch { expected: self.full_dim, got: psi.len() });
        }
        Ok(self.basis.iter().map(|b| linalg::dot(b, psi)).collect())
    }

    /// Largest drive matrix elements between endpoints and bridges, per
    /// unit envelope: `(control, partner)`.
    pub fn drive_couplings(&self) -> (S, S) {
        let bridge0 = self.n_start + self.n_final;
        let mut a = S::zero();
        let mut b = S::zero();
        for k in bridge0..self.dim() {
            for s in 0..self.n_start {
                a = a.max(self.drive_a_mat[(k, s)].norm());
            }
            for f in self.n_start..bridge0 {
                b = b.max(self.drive_b_mat[(k, f)].norm());
            }
        }
        (a, b)
    }
}

/// Builds the reduced passage model for one phase.
pub fn effective_model<S: Scalar>(
    spec: &ScenarioSpec<S>,
    space: &StateSpace,
    partner: usize,
    tol: S,
) -> Result<EffectiveModel<S>> {
    let stencil = HamiltonianStencil::new(spec, space, partner)?;
    let decomposition = zeno_decompose(&stencil.static_part(), tol)?;
    let zero = decomposition.zero_cluster()?;

    let dim = space.dim();
    let a_unit = stencil.drive_part(CoeffSource::DriveA).to_dense();
    let b_unit = stencil.drive_part(CoeffSource::DriveB).to_dense();
    let static_dense = stencil.static_part().to_dense();
    let diag_tol = S::epsilon().sqrt();

    let mut start_indices = Vec::new();
    let mut final_indices = Vec::new();
    let mut bare = Vec::new();
    for i in 0..dim {
        if (zero.projector[(i, i)].re - S::one()).abs() > diag_tol {
            continue;
        }
        bare.push(i);
        let a_act = linalg::norm(&a_unit.column(i)) > diag_tol;
        let b_act = linalg::norm(&b_unit.column(i)) > diag_tol;
        match (a_act, b_act) {
            (true, true) => {
                return Err(Error::InvalidScenario(format!(
                    "state {} is coupled by both drives",
                    space.state(i)
                )))
            }
            (true, false) => start_indices.push(i),
            (false, true) => final_indices.push(i),
            (false, false) => {}
        }
    }
    if start_indices.is_empty() || final_indices.is_empty() {
        return Err(Error::InvalidScenario(
            "dark subspace has no drive-coupled endpoint pair".into(),
        ));
    }

    let mut bridges: Vec<Vec<Cx<S>>> = Vec::new();
    for &col in &zero.indices {
        let mut v = decomposition.vectors.column(col);
        for &i in &bare {
            v[i] = S::czero();
        }
        for b in &bridges {
            let overlap = linalg::dot(b, &v);
            let mut neg = overlap;
            neg = -neg;
            linalg::axpy(neg, b, &mut v);
        }
        if linalg::norm(&v) <= S::real(1e-7) {
            continue;
        }
        linalg::normalize(&mut v)?;
        let mut best = 0usize;
        let mut best_mag = S::zero();
        for (k, x) in v.iter().enumerate() {
            if x.norm() > best_mag {
                best_mag = x.norm();
                best = k;
            }
        }
        let phase = v[best] / S::cre(v[best].norm());
        let fix = phase.conj();
        for x in v.iter_mut() {
            *x *= fix;
        }
        bridges.push(v);
    }

    let mut basis: Vec<Vec<Cx<S>>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for &i in &start_indices {
        basis.push(space.ket(space.state(i))?);
        labels.push(space.state(i).to_string());
    }
    for &i in &final_indices {
        basis.push(space.ket(space.state(i))?);
        labels.push(space.state(i).to_string());
    }
    for (k, b) in bridges.iter().enumerate() {
        basis.push(b.clone());
        labels.push(format!("bridge{}", k + 1));
    }

    let n = basis.len();
    let mut static_mat = CMat::zeros(n);
    let mut drive_a_mat = CMat::zeros(n);
    let mut drive_b_mat = CMat::zeros(n);
    for r in 0..n {
        for c in 0..n {
            static_mat[(r, c)] = linalg::dot(&basis[r], &static_dense.matvec(&basis[c]));
            drive_a_mat[(r, c)] = linalg::dot(&basis[r], &a_unit.matvec(&basis[c]));
            drive_b_mat[(r, c)] = linalg::dot(&basis[r], &b_unit.matvec(&basis[c]));
        }
    }

    Ok(EffectiveModel {
        full_dim: dim,
        basis,
        labels,
        n_start: start_indices.len(),
        n_final: final_indices.len(),
        static_mat,
        drive_a_mat,
        drive_b_mat,
        pulse_a: spec.drive_a,
        pulse_b: spec.drive_b,
        start_indices,
        final_indices,
    })
}

/// The instantaneous dark state of a single-bridge reduced model, in
/// reduced coordinates.
///
/// The overall phase is fixed so the start coefficient is real and
/// nonpositive; with the control drive off this is the start ket itself,
/// with the partner drive off it is the symmetric final combination.
pub fn dark_state<S: Scalar>(
    model: &EffectiveModel<S>,
    oa: S,
    ob: S,
) -> Result<Vec<Cx<S>>> {
    if model.n_bridge() != 1 || model.n_start() != 1 {
        return Err(Error::InvalidScenario(format!(
            "dark state defined for single-start single-bridge models, got {} starts and {} bridges",
            model.n_start(),
            model.n_bridge()
        )));
    }
    if oa == S::zero() && ob == S::zero() {
        return Err(Error::DarkStateUndefined);
    }
    let n = model.dim();
    let bridge = n - 1;
    let a = model.drive_a_mat[(bridge, 0)] * S::cre(oa);
    let finals = model.n_final();
    let b: Vec<Cx<S>> =
        (0..finals).map(|j| model.drive_b_mat[(bridge, 1 + j)] * S::cre(ob)).collect();
    let b_norm_sq: S = b.iter().map(|x| x.norm_sqr()).sum();
    let b_norm = b_norm_sq.sqrt();

    let mut coords = vec![S::czero(); n];
    if b_norm > S::zero() {
        coords[0] = -S::cre(b_norm);
        for j in 0..finals {
            coords[1 + j] = a * b[j].conj() / S::cre(b_norm);
        }
    } else {
        for j in 0..finals {
            coords[1 + j] = model.drive_b_mat[(bridge, 1 + j)].conj();
        }
    }
    linalg::normalize(&mut coords)?;

    let fix = if coords[0].norm() > S::zero() {
        -(coords[0].conj() / S::cre(coords[0].norm()))
    } else {
        let first = coords[1..]
            .iter()
            .find(|x| x.norm() > S::zero())
            .copied()
            .ok_or(Error::EmptyState)?;
        first.conj() / S::cre(first.norm())
    };
    for x in coords.iter_mut() {
        *x *= fix;
    }
    Ok(coords)
}

/// Drive-to-coupling ratios against the protected-subspace validity limit.
#[derive(Clone, Copy, Debug)]
pub struct ZenoConditionReport<S: Scalar> {
    pub ratio_a: S,
    pub ratio_b: S,
    pub ratio_eta: S,
    pub limit: S,
}

impl<S: Scalar> ZenoConditionReport<S> {
    pub fn max_ratio(&self) -> S {
        self.ratio_a.max(self.ratio_b).max(self.ratio_eta)
    }

    pub fn ok(&self) -> bool {
        self.max_ratio() <= self.limit
    }

    pub fn check(&self, limit: S) -> Result<()> {
        if self.max_ratio() <= limit {
            return Ok(());
        }
        Err(Error::ZenoConditionViolated {
            ratio: self.max_ratio().to_f64().unwrap_or(f64::NAN),
            limit: limit.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Peak drive amplitude relative to the cavity and fiber couplings.
pub fn zeno_condition<S: Scalar>(spec: &ScenarioSpec<S>) -> ZenoConditionReport<S> {
    let peak = spec.drive_a.amplitude().max(spec.drive_b.amplitude());
    ZenoConditionReport {
        ratio_a: spec.drive_a.amplitude() / spec.coupling.g,
        ratio_b: spec.drive_b.amplitude() / spec.coupling.g,
        ratio_eta: peak / spec.coupling.eta,
        limit: S::real(0.05),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{BasisState, Level};
    use crate::model::{enumerate_phase_space, Family};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const G: f64 = 20.0;
    const ETA: f64 = 2000.0;

    fn branch_setup() -> (ScenarioSpec<f64>, StateSpace) {
        let spec = ScenarioSpec::reference(Family::TwoAtom).unwrap();
        let seed = BasisState::vacuum(vec![Level::Zero, Level::G], 6);
        let space = enumerate_phase_space(&spec, &[seed], 1, false).unwrap();
        (spec, space)
    }

    #[test]
    fn test_coupling_spectrum_clusters() {
        let (spec, space) = branch_setup();
        let stencil = HamiltonianStencil::new(&spec, &space, 1).unwrap();
        let decomposition = zeno_decompose(&stencil.static_part(), 1e-6).unwrap();
        let eps = (G * G + 2.0 * ETA * ETA).sqrt();
        let expect = [-eps, -G, 0.0, G, eps];
        assert_eq!(decomposition.clusters.len(), 5);
        for (cluster, e) in decomposition.clusters.iter().zip(&expect) {
            assert_abs_diff_eq!(cluster.eigenvalue, e, epsilon = 1e-10 * eps);
        }
        assert_eq!(decomposition.zero_cluster().unwrap().indices.len(), 3);
    }

    #[test]
    fn test_projectors_complete_and_orthogonal() {
        let (spec, space) = branch_setup();
        let stencil = HamiltonianStencil::new(&spec, &space, 1).unwrap();
        let decomposition = zeno_decompose(&stencil.static_part(), 1e-6).unwrap();
        let n = space.dim();
        let mut total = CMat::zeros(n);
        for c in &decomposition.clusters {
            total.add_scaled(crate::C64::new(1.0, 0.0), &c.projector);
            let mut sq = c.projector.mul(&c.projector);
            sq.add_scaled(crate::C64::new(-1.0, 0.0), &c.projector);
            assert!(sq.max_abs() < 1e-10);
        }
        let id = CMat::identity(n);
        total.add_scaled(crate::C64::new(-1.0, 0.0), &id);
        assert!(total.max_abs() < 1e-10);
        for (i, a) in decomposition.clusters.iter().enumerate() {
            for b in decomposition.clusters.iter().skip(i + 1) {
                assert!(a.projector.mul(&b.projector).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn test_bridge_vector_components() {
        let (spec, space) = branch_setup();
        let model = effective_model(&spec, &space, 1, 1e-6).unwrap();
        assert_eq!(model.n_start(), 1);
        assert_eq!(model.n_final(), 1);
        assert_eq!(model.n_bridge(), 1);
        assert_eq!(model.labels()[2], "bridge1");
        let eps = (G * G + 2.0 * ETA * ETA).sqrt();
        let expect = [0.0, ETA / eps, 0.0, -G / eps, 0.0, ETA / eps, 0.0];
        let bridge = &model.basis()[2];
        for (x, e) in bridge.iter().zip(&expect) {
            assert_abs_diff_eq!(x.re, e, epsilon = 1e-10);
            assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn test_effective_couplings() {
        let (spec, space) = branch_setup();
        let model = effective_model(&spec, &space, 1, 1e-6).unwrap();
        let eps = (G * G + 2.0 * ETA * ETA).sqrt();
        let (a, b) = model.drive_couplings();
        assert_abs_diff_eq!(a, ETA / eps, epsilon = 1e-12);
        assert_abs_diff_eq!(b, ETA / eps, epsilon = 1e-12);
        assert!(model.hamiltonian(0.0, 0.0).max_abs() < 1e-9);
        for (r, c) in [(0, 1), (1, 0)] {
            assert!(model.drive_a_mat[(r, c)].norm() < 1e-12);
            assert!(model.drive_b_mat[(r, c)].norm() < 1e-12);
        }
    }

    #[test]
    fn test_dark_state_nullity_random_ratios() {
        let (spec, space) = branch_setup();
        let model = effective_model(&spec, &space, 1, 1e-6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let oa = rng.gen_range(0.0..1.0f64);
            let ob = rng.gen_range(0.0..1.0f64);
            if oa == 0.0 && ob == 0.0 {
                continue;
            }
            let dark = dark_state(&model, oa, ob).unwrap();
            let h = model.hamiltonian(oa, ob);
            let residual = linalg::norm(&h.matvec(&dark));
            assert!(residual <= 1e-12 * h.max_abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn test_dark_state_limits() {
        let (spec, space) = branch_setup();
        let model = effective_model(&spec, &space, 1, 1e-6).unwrap();
        let dark = dark_state(&model, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(dark[0].re, -1.0, epsilon = 1e-12);
        assert!(dark[1].norm() < 1e-12);
        let dark = dark_state(&model, 1.0, 0.0).unwrap();
        assert!(dark[0].norm() < 1e-12);
        assert_abs_diff_eq!(dark[1].re, 1.0, epsilon = 1e-12);
        assert!(matches!(dark_state(&model, 0.0, 0.0), Err(Error::DarkStateUndefined)));
    }

    #[test]
    fn test_dark_state_equal_drives() {
        let (spec, space) = branch_setup();
        let model = effective_model(&spec, &space, 1, 1e-6).unwrap();
        let dark = dark_state(&model, 0.7, 0.7).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(dark[0].re, -s, epsilon = 1e-12);
        assert_abs_diff_eq!(dark[1].re, s, epsilon = 1e-12);
        assert!(dark[2].norm() < 1e-12);
    }

    #[test]
    fn test_highdim_model() {
        let spec = ScenarioSpec::<f64>::reference(Family::HighDim(2)).unwrap();
        let seed = BasisState::vacuum(vec![Level::Zero, Level::G], spec.n_modes());
        let space = enumerate_phase_space(&spec, &[seed], 1, false).unwrap();
        let model = effective_model(&spec, &space, 1, 1e-6).unwrap();
        assert_eq!(model.n_start(), 1);
        assert_eq!(model.n_final(), 2);
        assert_eq!(model.n_bridge(), 1);
        let norm = (ETA * ETA + 2.0 * (G * G + ETA * ETA)).sqrt();
        let (a, b) = model.drive_couplings();
        assert_abs_diff_eq!(a, ETA / norm, epsilon = 1e-10);
        assert_abs_diff_eq!(b, ETA / norm, epsilon = 1e-10);
        let dark = dark_state(&model, 1.0, 1.0).unwrap();
        let expect = [-2.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt()];
        for (x, e) in dark.iter().take(3).zip(&expect) {
            assert_abs_diff_eq!(x.re, e, epsilon = 1e-10);
        }
        assert!(dark[3].norm() < 1e-12);
    }

    #[test]
    fn test_tolerance_and_hermiticity_guards() {
        let (spec, space) = branch_setup();
        let stencil = HamiltonianStencil::new(&spec, &space, 1).unwrap();
        assert!(matches!(
            zeno_decompose(&stencil.static_part(), 0.0),
            Err(Error::InvalidTolerance(_))
        ));
        assert!(matches!(
            zeno_decompose(&stencil.static_part(), 0.5),
            Err(Error::InvalidTolerance(_))
        ));
        let skew =
            SparseOp::from_triplets(2, &[(0, 1, crate::C64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(
            zeno_decompose(&skew, 1e-6),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn test_no_zero_cluster() {
        let shifted = SparseOp::from_triplets(
            2,
            &[(0, 0, crate::C64::new(5.0, 0.0)), (1, 1, crate::C64::new(5.0, 0.0))],
        )
        .unwrap();
        let decomposition = zeno_decompose(&shifted, 1e-6).unwrap();
        assert!(matches!(decomposition.zero_cluster(), Err(Error::NoDarkSubspace)));
    }

    #[test]
    fn test_zeno_condition_report() {
        let spec = ScenarioSpec::<f64>::reference(Family::TwoAtom).unwrap();
        let report = zeno_condition(&spec);
        assert_abs_diff_eq!(report.ratio_a, 0.05);
        assert_abs_diff_eq!(report.ratio_eta, 1.0 / ETA);
        assert!(report.ok());
        assert!(report.check(0.2).is_ok());
        let mut strong = spec;
        strong.drive_a = PulseShape::new(2.0, 5.27, 31.0).unwrap();
        let report = zeno_condition(&strong);
        assert_abs_diff_eq!(report.max_ratio(), 0.1);
        assert!(!report.ok());
        assert!(matches!(report.check(0.05), Err(Error::ZenoConditionViolated { .. })));
        assert!(report.check(0.2).is_ok());
    }
}
