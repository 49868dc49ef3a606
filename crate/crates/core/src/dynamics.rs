//! Fixed-step propagation of pure states and density matrices.
//!
//! The integrator is classical RK4 with a step chosen from a Gershgorin
//! bound on the generator, sampling on an even time grid. Density
//! evolution uses the diagonal-form master equation with jump rates folded
//! into the operators ahead of the loop, so the hot path is sparse
//! matrix-vector and matrix-matrix accumulation with no allocation.


use crate::error::{Error, Result};
use crate::linalg::{self, eigh, CMat, SparseOp};
use crate::model::{HamiltonianStencil, JumpChannel, PulseShape};
use crate::scalar::Scalar;
use crate::Cx;

/// Maximum dimension accepted by the dense reference propagator.
pub const ORACLE_DIM_LIMIT: usize = 64;

/// A possibly time-dependent Hamiltonian with a fixed sparsity pattern.
pub trait HamiltonianSource<S: Scalar> {
    fn dim(&self) -> usize;
    /// A buffer sharing the pattern `eval_into` expects.
    fn template(&self) -> SparseOp<S>;
    /// Writes `H(t)` into a buffer cloned from `template`.
    fn eval_into(&self, t: S, op: &mut SparseOp<S>);
    /// Upper bound on the spectral radius over the whole window.
    fn rate_bound(&self) -> S;
}

impl<S: Scalar> HamiltonianSource<S> for HamiltonianStencil<S> {
    fn dim(&self) -> usize {
        HamiltonianStencil::dim(self)
    }

    fn template(&self) -> SparseOp<S> {
        HamiltonianStencil::template(self)
    }

    fn eval_into(&self, t: S, op: &mut SparseOp<S>) {
        HamiltonianStencil::eval_into(self, t, op)
    }

    fn rate_bound(&self) -> S {
        HamiltonianStencil::rate_bound(self)
    }
}

/// A time-independent Hamiltonian wrapped as a source.
#[derive(Clone, Debug)]
pub struct ConstantHamiltonian<S: Scalar> {
    op: SparseOp<S>,
    bound: S,
}

impl<S: Scalar> ConstantHamiltonian<S> {
    pub fn new(op: SparseOp<S>) -> Self {
        let bound = op.gershgorin_bound();
        Self { op, bound }
    }
}

impl<S: Scalar> HamiltonianSource<S> for ConstantHamiltonian<S> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn template(&self) -> SparseOp<S> {
        self.op.clone()
    }

    fn eval_into(&self, _t: S, op: &mut SparseOp<S>) {
        op.values_mut().copy_from_slice(self.op.values());
    }

    fn rate_bound(&self) -> S {
        self.bound
    }
}

/// A Hamiltonian `H(t) = H0 + oa(t) A + ob(t) B` given as dense matrices
/// and two drive envelopes; the small-matrix counterpart of the model
/// stencil, used for reduced effective dynamics.
#[derive(Clone, Debug)]
pub struct DrivenHamiltonian<S: Scalar> {
    pattern: SparseOp<S>,
    static_vals: Vec<Cx<S>>,
    a_vals: Vec<Cx<S>>,
    b_vals: Vec<Cx<S>>,
    pulse_a: PulseShape<S>,
    pulse_b: PulseShape<S>,
    bound: S,
}

impl<S: Scalar> DrivenHamiltonian<S> {
    pub fn new(
        h0: &CMat<S>,
        a: &CMat<S>,
        b: &CMat<S>,
        pulse_a: PulseShape<S>,
        pulse_b: PulseShape<S>,
    ) -> Result<Self> {
        let dim = h0.dim();
        for m in [a, b] {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
            }
        }
        let mut keys = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let occupied = h0[(i, j)] != S::czero()
                    || a[(i, j)] != S::czero()
                    || b[(i, j)] != S::czero();
                if occupied {
                    keys.push((i, j, S::cone()));
                }
            }
        }
        let pattern = SparseOp::from_triplets(dim, &keys)?;
        let mut static_vals = Vec::with_capacity(pattern.nnz());
        let mut a_vals = Vec::with_capacity(pattern.nnz());
        let mut b_vals = Vec::with_capacity(pattern.nnz());
        let mut row_sums = vec![S::zero(); dim];
        let (pa, pb) = (pulse_a.amplitude(), pulse_b.amplitude());
        for (i, j, _) in pattern.iter() {
            static_vals.push(h0[(i, j)]);
            a_vals.push(a[(i, j)]);
            b_vals.push(b[(i, j)]);
            row_sums[i] +=
                h0[(i, j)].norm() + pa * a[(i, j)].norm() + pb * b[(i, j)].norm();
        }
        let bound = row_sums.into_iter().fold(S::zero(), S::max);
        Ok(Self { pattern, static_vals, a_vals, b_vals, pulse_a, pulse_b, bound })
    }
}

impl<S: Scalar> HamiltonianSource<S> for DrivenHamiltonian<S> {
    fn dim(&self) -> usize {
        self.pattern.dim()
    }

    fn template(&self) -> SparseOp<S> {
        self.pattern.clone()
    }

    fn eval_into(&self, t: S, op: &mut SparseOp<S>) {
        let oa = S::cre(self.pulse_a.value(t));
        let ob = S::cre(self.pulse_b.value(t));
        let vals = op.values_mut();
        for (k, v) in vals.iter_mut().enumerate() {
            *v = self.static_vals[k] + oa * self.a_vals[k] + ob * self.b_vals[k];
        }
    }

    fn rate_bound(&self) -> S {
        self.bound
    }
}

/// Integration controls.
///
/// `step` overrides the automatic choice of `0.1 / rate_bound`; `stride`
/// sets the sample spacing (endpoints are always sampled); `tolerance`
/// bounds the tolerated norm and trace drift before the run aborts.
#[derive(Clone, Copy, Debug)]
pub struct IntegratorSettings<S: Scalar> {
    pub step: Option<S>,
    pub stride: Option<S>,
    pub tolerance: S,
}

impl<S: Scalar> Default for IntegratorSettings<S> {
    fn default() -> Self {
        Self { step: None, stride: None, tolerance: S::real(1e-8) }
    }
}

impl<S: Scalar> IntegratorSettings<S> {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.step {
            if !h.is_finite() || h <= S::zero() {
                return Err(Error::InvalidIntegrator(format!(
                    "step must be positive, got {h}"
                )));
            }
        }
        if let Some(s) = self.stride {
            if !s.is_finite() || s <= S::zero() {
                return Err(Error::InvalidIntegrator(format!(
                    "stride must be positive, got {s}"
                )));
            }
        }
        if !(self.tolerance > S::zero() && self.tolerance <= S::real(1e-3)) {
            return Err(Error::InvalidIntegrator(format!(
                "tolerance must lie in (0, 1e-3], got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    fn nominal_step(&self, bound: S, duration: S) -> S {
        let auto = if bound > S::zero() { S::real(0.1) / bound } else { duration };
        self.step.unwrap_or(auto).min(duration)
    }
}

/// Sample boundaries: start, every stride, and the endpoint.
fn sample_times<S: Scalar>(window: (S, S), stride: Option<S>) -> Vec<S> {
    let (t0, t1) = window;
    let mut times = vec![t0];
    if let Some(s) = stride {
        let guard = s * S::real(1e-9);
        let mut k = 1u64;
        loop {
            let t = t0 + S::real(k as f64) * s;
            if t >= t1 - guard {
                break;
            }
            times.push(t);
            k += 1;
        }
    }
    times.push(t1);
    times
}

/// A sampled pure-state evolution.
#[derive(Clone, Debug)]
pub struct Trajectory<S: Scalar> {
    pub times: Vec<S>,
    pub states: Vec<Vec<Cx<S>>>,
    pub step: S,
    pub max_norm_drift: S,
}

impl<S: Scalar> Trajectory<S> {
    pub fn final_state(&self) -> &[Cx<S>] {
        self.states.last().expect("trajectory holds at least the endpoints")
    }
}

/// A sampled density-matrix evolution with conservation diagnostics.
#[derive(Clone, Debug)]
pub struct DensityTrajectory<S: Scalar> {
    pub times: Vec<S>,
    pub states: Vec<CMat<S>>,
    pub step: S,
    pub max_trace_drift: S,
    pub max_hermiticity_residual: S,
    pub min_eigenvalue: S,
}

impl<S: Scalar> DensityTrajectory<S> {
    pub fn final_density(&self) -> &CMat<S> {
        self.states.last().expect("trajectory holds at least the endpoints")
    }
}

fn check_window<S: Scalar>(window: (S, S)) -> Result<()> {
    if !(window.1 > window.0) {
        return Err(Error::InvalidWindow);
    }
    Ok(())
}

/// Integrates the Schrodinger equation `dpsi/dt = -i H(t) psi`.
pub fn propagate_state<S: Scalar, H: HamiltonianSource<S>>(
    ham: &H,
    psi0: &[Cx<S>],
    window: (S, S),
    settings: &IntegratorSettings<S>,
) -> Result<Trajectory<S>> {
    settings.validate()?;
    check_window(window)?;
    let dim = ham.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: psi0.len() });
    }
    let norm0 = linalg::norm_sqr(psi0);
    if (norm0 - S::one()).abs() > S::epsilon().sqrt() {
        return Err(Error::InvalidState(format!(
            "initial state norm {} is not 1",
            norm0.sqrt()
        )));
    }

    let duration = window.1 - window.0;
    let h_nominal = settings.nominal_step(ham.rate_bound(), duration);
    let times = sample_times(window, settings.stride);

    let mut h_op = ham.template();
    let mut psi = psi0.to_vec();
    let mut k1 = vec![S::czero(); dim];
    let mut k2 = vec![S::czero(); dim];
    let mut k3 = vec![S::czero(); dim];
    let mut k4 = vec![S::czero(); dim];
    let mut stage = vec![S::czero(); dim];

    let minus_i = -S::ci();
    let mut states = Vec::with_capacity(times.len());
    states.push(psi.clone());
    let mut max_drift = S::zero();

    for seg in times.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let span = b - a;
        let n = (span / h_nominal).ceil().to_f64().unwrap_or(1.0).max(1.0) as u64;
        let h = span / S::real(n as f64);
        let half = h * S::real(0.5);
        for i in 0..n {
            let t = a + S::real(i as f64) * h;

            ham.eval_into(t, &mut h_op);
            h_op.matvec_into(&psi, &mut k1);
            linalg::scale(minus_i, &mut k1);

            stage.copy_from_slice(&psi);
            linalg::axpy(S::cre(half), &k1, &mut stage);
            ham.eval_into(t + half, &mut h_op);
            h_op.matvec_into(&stage, &mut k2);
            linalg::scale(minus_i, &mut k2);

            stage.copy_from_slice(&psi);
            linalg::axpy(S::cre(half), &k2, &mut stage);
            h_op.matvec_into(&stage, &mut k3);
            linalg::scale(minus_i, &mut k3);

            stage.copy_from_slice(&psi);
            linalg::axpy(S::cre(h), &k3, &mut stage);
            ham.eval_into(t + h, &mut h_op);
            h_op.matvec_into(&stage, &mut k4);
            linalg::scale(minus_i, &mut k4);

            let w = S::cre(h / S::real(6.0));
            let w2 = S::cre(h / S::real(3.0));
            linalg::axpy(w, &k1, &mut psi);
            linalg::axpy(w2, &k2, &mut psi);
            linalg::axpy(w2, &k3, &mut psi);
            linalg::axpy(w, &k4, &mut psi);

            let drift = (linalg::norm_sqr(&psi) - S::one()).abs();
            max_drift = max_drift.max(drift);
            if drift > settings.tolerance {
                return Err(Error::NormDrift {
                    t: (t + h).to_f64().unwrap_or(f64::NAN),
                    drift: drift.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        states.push(psi.clone());
    }

    Ok(Trajectory { times, states, step: h_nominal, max_norm_drift: max_drift })
}

/// Jump channels with rates folded in, ready for the master-equation RHS.
struct LindbladOps<S: Scalar> {
    pairs: Vec<(SparseOp<S>, SparseOp<S>)>,
    damping: Option<SparseOp<S>>,
    rate_bound: S,
}

impl<S: Scalar> LindbladOps<S> {
    fn new(channels: &[JumpChannel<S>], dim: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut damping_triplets: Vec<(usize, usize, Cx<S>)> = Vec::new();
        let mut rate_bound = S::zero();
        for ch in channels {
            if ch.rate < S::zero() || !ch.rate.is_finite() {
                return Err(Error::InvalidDecoherence(format!(
                    "channel {} has invalid rate {}",
                    ch.label, ch.rate
                )));
            }
            if ch.rate == S::zero() {
                continue;
            }
            if ch.op.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: ch.op.dim() });
            }
            let root = S::cre(ch.rate.sqrt());
            let mut scaled = ch.op.clone();
            for v in scaled.values_mut() {
                *v *= root;
            }
            let row_entries: Vec<Vec<(usize, Cx<S>)>> = {
                let mut rows = vec![Vec::new(); dim];
                for (r, c, v) in scaled.iter() {
                    rows[r].push((c, v));
                }
                rows
            };
            for entries in &row_entries {
                for &(c1, v1) in entries {
                    for &(c2, v2) in entries {
                        damping_triplets.push((c1, c2, v1.conj() * v2));
                    }
                }
            }
            let adj = scaled.adjoint();
            let g = scaled.gershgorin_bound();
            rate_bound += g * g;
            pairs.push((scaled, adj));
        }
        let damping = if damping_triplets.is_empty() {
            None
        } else {
            Some(SparseOp::from_triplets(dim, &damping_triplets)?)
        };
        Ok(Self { pairs, damping, rate_bound })
    }

    /// `out += sum_k L_k rho L_k† - (G rho + rho G) / 2` with `G = sum_k
    /// L_k† L_k`.
    fn accumulate(&self, rho: &CMat<S>, tmp: &mut CMat<S>, out: &mut CMat<S>) {
        let one = S::cone();
        let minus_half = S::cre(S::real(-0.5));
        for (ls, ls_dag) in &self.pairs {
            tmp.fill_zero();
            ls.acc_sparse_dense(one, rho, tmp);
            ls_dag.acc_dense_sparse(one, tmp, out);
        }
        if let Some(g) = &self.damping {
            g.acc_sparse_dense(minus_half, rho, out);
            g.acc_dense_sparse(minus_half, rho, out);
        }
    }
}

fn lindblad_rhs<S: Scalar>(
    h_op: &SparseOp<S>,
    lind: &LindbladOps<S>,
    rho: &CMat<S>,
    tmp: &mut CMat<S>,
    out: &mut CMat<S>,
) {
    out.fill_zero();
    let minus_i = -S::ci();
    let plus_i = S::ci();
    h_op.acc_sparse_dense(minus_i, rho, out);
    h_op.acc_dense_sparse(plus_i, rho, out);
    lind.accumulate(rho, tmp, out);
}

/// Integrates the master equation in diagonal form.
///
/// The generator is `drho/dt = -i[H, rho] + sum_k rate_k (L rho L† -
/// {L†L, rho} / 2)`; trace, Hermiticity, and positivity are checked at
/// every sample and the largest deviations are reported on the result.
pub fn propagate_density<S: Scalar, H: HamiltonianSource<S>>(
    ham: &H,
    rho0: &CMat<S>,
    channels: &[JumpChannel<S>],
    window: (S, S),
    settings: &IntegratorSettings<S>,
) -> Result<DensityTrajectory<S>> {
    settings.validate()?;
    check_window(window)?;
    let dim = ham.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: rho0.dim() });
    }
    let trace0 = rho0.trace();
    if (trace0 - S::cone()).norm() > S::epsilon().sqrt() {
        return Err(Error::InvalidState(format!("initial trace {} is not 1", trace0.re)));
    }
    let herm0 = rho0.hermiticity_residual();
    if herm0 > S::epsilon().sqrt() {
        let residual = herm0.to_f64().unwrap_or(f64::NAN);
        return Err(Error::InvalidState(format!(
            "initial density matrix is not Hermitian (residual {residual:e})"
        )));
    }

    let lind = LindbladOps::new(channels, dim)?;
    let duration = window.1 - window.0;
    let bound = S::real(2.0) * ham.rate_bound() + lind.rate_bound;
    let h_nominal = settings.nominal_step(bound, duration);
    let times = sample_times(window, settings.stride);

    let mut h_op = ham.template();
    let mut rho = rho0.clone();
    let mut k1 = CMat::zeros(dim);
    let mut k2 = CMat::zeros(dim);
    let mut k3 = CMat::zeros(dim);
    let mut k4 = CMat::zeros(dim);
    let mut stage = CMat::zeros(dim);
    let mut tmp = CMat::zeros(dim);

    let mut states = Vec::with_capacity(times.len());
    states.push(rho.clone());
    let mut max_trace_drift = S::zero();
    let mut max_herm = S::zero();
    let mut min_eig = S::zero();

    let check = |rho: &CMat<S>, t: S| -> Result<(S, S, S)> {
        let t_f64 = t.to_f64().unwrap_or(f64::NAN);
        let trace_drift = (rho.trace() - S::cone()).norm();
        if trace_drift > settings.tolerance {
            return Err(Error::TraceDrift {
                t: t_f64,
                drift: trace_drift.to_f64().unwrap_or(f64::NAN),
            });
        }
        let herm = rho.hermiticity_residual();
        if herm > settings.tolerance {
            return Err(Error::HermiticityLoss {
                t: t_f64,
                residual: herm.to_f64().unwrap_or(f64::NAN),
            });
        }
        let low = crate::linalg::eig::min_eigenvalue(&rho)?;
        if low < -settings.tolerance {
            return Err(Error::PositivityLoss {
                t: t_f64,
                eigenvalue: low.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok((trace_drift, herm, low))
    };

    let (d, h0, e) = check(&rho, window.0)?;
    max_trace_drift = max_trace_drift.max(d);
    max_herm = max_herm.max(h0);
    min_eig = min_eig.min(e);

    for seg in times.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let span = b - a;
        let n = (span / h_nominal).ceil().to_f64().unwrap_or(1.0).max(1.0) as u64;
        let h = span / S::real(n as f64);
        let half = S::cre(h * S::real(0.5));
        for i in 0..n {
            let t = a + S::real(i as f64) * h;

            ham.eval_into(t, &mut h_op);
            lindblad_rhs(&h_op, &lind, &rho, &mut tmp, &mut k1);

            stage.copy_from(&rho);
            stage.add_scaled(half, &k1);
            ham.eval_into(t + h * S::real(0.5), &mut h_op);
            lindblad_rhs(&h_op, &lind, &stage, &mut tmp, &mut k2);

            stage.copy_from(&rho);
            stage.add_scaled(half, &k2);
            lindblad_rhs(&h_op, &lind, &stage, &mut tmp, &mut k3);

            stage.copy_from(&rho);
            stage.add_scaled(S::cre(h), &k3);
            ham.eval_into(t + h, &mut h_op);
            lindblad_rhs(&h_op, &lind, &stage, &mut tmp, &mut k4);

            let w = S::cre(h / S::real(6.0));
            let w2 = S::cre(h / S::real(3.0));
            rho.add_scaled(w, &k1);
            rho.add_scaled(w2, &k2);
            rho.add_scaled(w2, &k3);
            rho.add_scaled(w, &k4);
        }
        let (d, hres, e) = check(&rho, b)?;
        max_trace_drift = max_trace_drift.max(d);
        max_herm = max_herm.max(hres);
        min_eig = min_eig.min(e);
        states.push(rho.clone());
    }

    Ok(DensityTrajectory {
        times,
        states,
        step: h_nominal,
        max_trace_drift,
        max_hermiticity_residual: max_herm,
        min_eigenvalue: min_eig,
    })
}

/// Exact `exp(-i H t) psi` for a constant Hermitian `H` through a dense
/// eigendecomposition; the independent check for the RK4 path.
pub fn expm_reference<S: Scalar>(h: &CMat<S>, t: S, psi0: &[Cx<S>]) -> Result<Vec<Cx<S>>> {
    let dim = h.dim();
    if dim > ORACLE_DIM_LIMIT {
        return Err(Error::OracleDimension { dim, max: ORACLE_DIM_LIMIT });
    }
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: psi0.len() });
    }
    let residual = h.hermiticity_residual();
    let scale = h.max_abs().max(S::one());
    if residual > scale * S::real(1e-12) {
        return Err(Error::NonHermitian { residual: residual.to_f64().unwrap_or(f64::NAN) });
    }
    let (vals, vecs) = eigh(h)?;
    let mut out = vec![S::czero(); dim];
    for j in 0..dim {
        let col = vecs.column(j);
        let amp = linalg::dot(&col, psi0);
        let phase = -vals[j] * t;
        let rot = Cx::new(phase.cos(), phase.sin());
        linalg::axpy(amp * rot, &col, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C = Cx<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn pauli_x() -> SparseOp<f64> {
        SparseOp::from_triplets(2, &[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn test_sample_times_grid() {
        let times = sample_times((0.0, 1.0), Some(0.3));
        assert_eq!(times.len(), 5);
        assert_abs_diff_eq!(times[3], 0.9);
        assert_eq!(times[4], 1.0);
        let times = sample_times((0.0, 1.0), Some(0.25));
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let times = sample_times((0.0, 1.0), None);
        assert_eq!(times, vec![0.0, 1.0]);
    }

    #[test]
    fn test_rabi_oscillation() {
        let ham = ConstantHamiltonian::new(pauli_x());
        let psi0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let settings = IntegratorSettings { step: Some(1e-3), ..Default::default() };
        let t = std::f64::consts::FRAC_PI_3;
        let traj = propagate_state(&ham, &psi0, (0.0, t), &settings).unwrap();
        let p1 = traj.final_state()[1].norm_sqr();
        assert_abs_diff_eq!(p1, t.sin().powi(2), epsilon = 1e-10);
        assert!(traj.max_norm_drift < 1e-12);
    }

    #[test]
    fn test_rk4_matches_expm_on_random_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in i..n {
                let re = rng.gen_range(-1.0..1.0);
                let im = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
                triplets.push((i, j, c(re, im)));
                if i != j {
                    triplets.push((j, i, c(re, -im)));
                }
            }
        }
        let op = SparseOp::from_triplets(n, &triplets).unwrap();
        let dense = op.to_dense();
        let ham = ConstantHamiltonian::new(op);
        let mut psi0: Vec<C> = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        crate::linalg::normalize(&mut psi0).unwrap();
        let settings = IntegratorSettings { step: Some(1e-3), ..Default::default() };
        let traj = propagate_state(&ham, &psi0, (0.0, 1.0), &settings).unwrap();
        let exact = expm_reference(&dense, 1.0, &psi0).unwrap();
        for (a, b) in traj.final_state().iter().zip(&exact) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn test_norm_drift_guard_trips() {
        let ham = ConstantHamiltonian::new(pauli_x());
        let psi0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let settings = IntegratorSettings { step: Some(1.5), ..Default::default() };
        let err = propagate_state(&ham, &psi0, (0.0, 15.0), &settings).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }));
    }

    #[test]
    fn test_unnormalized_initial_state_rejected() {
        let ham = ConstantHamiltonian::new(pauli_x());
        let psi0 = vec![c(0.5, 0.0), c(0.0, 0.0)];
        assert!(propagate_state(&ham, &psi0, (0.0, 1.0), &Default::default()).is_err());
    }

    #[test]
    fn test_invalid_window_rejected() {
        let ham = ConstantHamiltonian::new(pauli_x());
        let psi0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let err = propagate_state(&ham, &psi0, (1.0, 1.0), &Default::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidWindow));
    }

    #[test]
    fn test_density_matches_pure_evolution() {
        let ham = ConstantHamiltonian::new(pauli_x());
        let mut psi0 = vec![c(0.8, 0.0), c(0.0, 0.6)];
        crate::linalg::normalize(&mut psi0).unwrap();
        let settings = IntegratorSettings { step: Some(1e-3), ..Default::default() };
        let traj = propagate_state(&ham, &psi0, (0.0, 0.7), &settings).unwrap();
        let rho0 = CMat::outer(&psi0);
        let dtraj = propagate_density(&ham, &rho0, &[], (0.0, 0.7), &settings).unwrap();
        let expect = CMat::outer(traj.final_state());
        let got = dtraj.final_density();
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[(i, j)] - expect[(i, j)]).norm() < 1e-8);
            }
        }
        assert!(dtraj.max_trace_drift < 1e-12);
        assert!(dtraj.min_eigenvalue > -1e-12);
    }

    #[test]
    fn test_spontaneous_decay_analytic() {
        let dim = 2;
        let ham = ConstantHamiltonian::new(SparseOp::zeros(dim));
        let gamma = 0.7;
        let lower = SparseOp::from_triplets(dim, &[(0, 1, c(1.0, 0.0))]).unwrap();
        let channels = vec![JumpChannel { label: "decay".into(), rate: gamma, op: lower }];
        let mut rho0 = CMat::zeros(dim);
        rho0[(1, 1)] = c(0.6, 0.0);
        rho0[(0, 0)] = c(0.4, 0.0);
        rho0[(0, 1)] = c(0.3, 0.1);
        rho0[(1, 0)] = c(0.3, -0.1);
        let settings = IntegratorSettings { step: Some(1e-3), ..Default::default() };
        let t = 2.0;
        let traj = propagate_density(&ham, &rho0, &channels, (0.0, t), &settings).unwrap();
        let rho = traj.final_density();
        let decay = (-gamma * t).exp();
        assert_abs_diff_eq!(rho[(1, 1)].re, 0.6 * decay, epsilon = 1e-6);
        assert_abs_diff_eq!(rho[(0, 0)].re, 1.0 - 0.6 * decay, epsilon = 1e-6);
        let half = (-0.5 * gamma * t).exp();
        assert_abs_diff_eq!(rho[(0, 1)].re, 0.3 * half, epsilon = 1e-6);
        assert_abs_diff_eq!(rho[(0, 1)].im, 0.1 * half, epsilon = 1e-6);
    }

    #[test]
    fn test_zero_rate_channels_ignored() {
        let ham = ConstantHamiltonian::new(pauli_x());
        let lower = SparseOp::from_triplets(2, &[(0, 1, c(1.0, 0.0))]).unwrap();
        let channels = vec![JumpChannel { label: "decay".into(), rate: 0.0, op: lower }];
        let psi0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let rho0 = CMat::outer(&psi0);
        let settings = IntegratorSettings { step: Some(1e-3), ..Default::default() };
        let open = propagate_density(&ham, &rho0, &channels, (0.0, 0.5), &settings).unwrap();
        let closed = propagate_density(&ham, &rho0, &[], (0.0, 0.5), &settings).unwrap();
        assert_eq!(open.final_density(), closed.final_density());
    }

    #[test]
    fn test_expm_guards() {
        let big = CMat::<f64>::zeros(ORACLE_DIM_LIMIT + 1);
        let psi = vec![c(0.0, 0.0); ORACLE_DIM_LIMIT + 1];
        assert!(matches!(
            expm_reference(&big, 1.0, &psi).unwrap_err(),
            Error::OracleDimension { .. }
        ));
        let mut skew = CMat::zeros(2);
        skew[(0, 1)] = c(1.0, 0.0);
        let psi = vec![c(1.0, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            expm_reference(&skew, 1.0, &psi).unwrap_err(),
            Error::NonHermitian { .. }
        ));
    }
}
