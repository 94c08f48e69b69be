//! Master-equation engine: generator application, adaptive time evolution,
//! steady states and expectation values on the internal ⊗ Fock space.
//!
//! The public generator is dense. `evolve` internally precompiles the same
//! Hamiltonian and jump operators into sparse form (they are band/block
//! structured) so long cooling horizons stay affordable; the two paths are
//! equivalence-tested against each other.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{
    dagger, frobenius_norm, hermitian_eigenvalues, hermiticity_error, identity, kernel_pair,
    kron, max_abs, trace, CMatrix, CVector, HilbertSpace, KERNEL_TOL,
};

/// Largest total dimension for which the steady state is solved as a dense
/// kernel of the vectorized Liouvillian; above this, long-time evolution.
pub const KERNEL_METHOD_MAX_DIM: usize = 40;
/// Abort threshold for trace drift during evolution.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-7;

fn im() -> C64 {
    C64::new(0.0, 1.0)
}

/// Density matrix on a spin ⊗ Fock space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, rho: CMatrix) -> Result<Self> {
        if rho.nrows() != space.total_dim() || rho.ncols() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "DensityMatrix::new",
                expected: space.total_dim(),
                got: rho.nrows(),
            });
        }
        Ok(Self { space, rho })
    }

    pub fn from_pure(space: HilbertSpace, psi: &CVector) -> Result<Self> {
        if psi.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                context: "DensityMatrix::from_pure",
                expected: space.total_dim(),
                got: psi.len(),
            });
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let rho = Array2::from_shape_fn((psi.len(), psi.len()), |(i, j)| {
            psi[i] * psi[j].conj() / norm2
        });
        Ok(Self { space, rho })
    }

    /// Hermiticity to 1e-10, unit trace to 1e-9, positivity to -1e-8.
    pub fn validate(&self) -> Result<()> {
        let scale = max_abs(&self.rho).max(f64::MIN_POSITIVE);
        if hermiticity_error(&self.rho) > 1e-10 * scale.max(1.0) {
            return Err(Error::InvalidConfig(
                "density matrix is not Hermitian to 1e-10".into(),
            ));
        }
        let tr = trace(&self.rho);
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "density matrix trace {tr} is not 1 to 1e-9"
            )));
        }
        let min_eig = *hermitian_eigenvalues(&self.rho)?
            .first()
            .expect("non-empty spectrum");
        if min_eig < -1e-8 {
            return Err(Error::InvalidConfig(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    pub fn phonon_number(&self) -> f64 {
        let nf = self.space.fock_dim;
        let mut n = 0.0;
        for i in 0..self.space.internal_dim {
            for k in 0..nf {
                n += k as f64 * self.rho[[self.space.index(i, k), self.space.index(i, k)]].re;
            }
        }
        n
    }

    pub fn internal_populations(&self) -> [f64; 4] {
        let nf = self.space.fock_dim;
        let mut pops = [0.0; 4];
        for (i, p) in pops.iter_mut().enumerate() {
            for k in 0..nf {
                *p += self.rho[[self.space.index(i, k), self.space.index(i, k)]].re;
            }
        }
        pops
    }

    /// Population of the two highest Fock levels; used as a truncation guard.
    pub fn top_fock_population(&self) -> f64 {
        let nf = self.space.fock_dim;
        let mut p = 0.0;
        for i in 0..self.space.internal_dim {
            for k in [nf - 2, nf - 1] {
                p += self.rho[[self.space.index(i, k), self.space.index(i, k)]].re;
            }
        }
        p
    }
}

/// Observable record along one master-equation evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample times, strictly increasing, in units of 1/ω_k.
    pub times: Vec<f64>,
    /// ⟨a†a⟩ per sample.
    pub n_phonon: Vec<f64>,
    /// Populations of the four internal levels per sample.
    pub populations: Vec<[f64; 4]>,
    /// |tr ρ − 1| per sample.
    pub trace_error: Vec<f64>,
    /// Minimum eigenvalue per sample, present when positivity tracking was
    /// requested.
    pub min_eigenvalue: Option<Vec<f64>>,
}

/// One Lindblad generator application:
/// L(ρ) = −i[h,ρ] + Σ (rate/2)(2 oρo† − o†oρ − ρo†o).
pub fn apply_liouvillian(
    h: &CMatrix,
    diss: &[(f64, CMatrix)],
    rho: &CMatrix,
) -> Result<CMatrix> {
    let d = rho.nrows();
    if h.nrows() != d || h.ncols() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "apply_liouvillian",
            expected: d,
            got: h.nrows(),
        });
    }
    let mut out = h.dot(rho) - rho.dot(h);
    out.mapv_inplace(|z| -im() * z);
    for (rate, o) in diss {
        if o.nrows() != d {
            return Err(Error::DimensionMismatch {
                context: "apply_liouvillian jump",
                expected: d,
                got: o.nrows(),
            });
        }
        if *rate == 0.0 {
            continue;
        }
        let od = dagger(o);
        let odo = od.dot(o);
        let gain = o.dot(rho).dot(&od);
        let loss = odo.dot(rho) + rho.dot(&odo);
        out = out + (gain * C64::new(*rate, 0.0) - loss * C64::new(rate / 2.0, 0.0));
    }
    Ok(out)
}

/// Materialize the generator as a d²×d² matrix acting on row-major vec(ρ).
pub fn liouvillian_matrix(h: &CMatrix, diss: &[(f64, CMatrix)]) -> Result<CMatrix> {
    let d = h.nrows();
    let id = identity(d);
    let ht = h.t().to_owned();
    let mut l = (kron(h, &id)? - kron(&id, &ht)?) * (-im());
    for (rate, o) in diss {
        if *rate == 0.0 {
            continue;
        }
        let od = dagger(o);
        let odo = od.dot(o);
        let o_conj = o.mapv(|z| z.conj());
        let odo_t = odo.t().to_owned();
        let gain = kron(o, &o_conj)?;
        let loss = kron(&odo, &id)? + kron(&id, &odo_t)?;
        l = l + (gain - loss * C64::new(0.5, 0.0)) * C64::new(*rate, 0.0);
    }
    Ok(l)
}

pub fn vec_row_major(m: &CMatrix) -> CVector {
    Array1::from_iter(m.iter().cloned())
}

pub fn devec_row_major(v: &CVector, d: usize) -> CMatrix {
    Array2::from_shape_fn((d, d), |(i, j)| v[i * d + j])
}

/// tr(op·ρ).
pub fn expectation(op: &CMatrix, rho: &CMatrix) -> Result<C64> {
    let d = rho.nrows();
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            expected: d,
            got: op.nrows(),
        });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += op[[i, k]] * rho[[k, i]];
        }
    }
    Ok(acc)
}

/// Trace distance ½‖a − b‖₁ for Hermitian a, b.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let diff = a - b;
    let eigs = hermitian_eigenvalues(&diff)?;
    Ok(0.5 * eigs.iter().map(|x| x.abs()).sum::<f64>())
}

/// ⟨ψ|ρ|ψ⟩ for a normalized pure reference state.
pub fn fidelity_with_pure(psi: &CVector, rho: &CMatrix) -> Result<f64> {
    let d = rho.nrows();
    if psi.len() != d {
        return Err(Error::DimensionMismatch {
            context: "fidelity_with_pure",
            expected: d,
            got: psi.len(),
        });
    }
    let image = rho.dot(psi);
    let f: C64 = psi
        .iter()
        .zip(image.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(f.re)
}

// ------------------------------------------------------------------
// sparse generator used by the integrator
// ------------------------------------------------------------------

struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[[i, j]];
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            row_ptr,
            cols,
            vals,
        }
    }
}

struct JumpTriplets {
    rate: f64,
    entries: Vec<(usize, usize, C64)>,
}

/// Precompiled generator: dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ r·oρo†
/// with H_eff = H − (i/2)Σ r·o†o.
struct Generator {
    dim: usize,
    h_eff: Csr,
    h_eff_dag: Csr,
    jumps: Vec<JumpTriplets>,
}

impl Generator {
    fn compile(h: &CMatrix, diss: &[(f64, CMatrix)]) -> Self {
        let dim = h.nrows();
        let mut h_eff = h.clone();
        let mut jumps = Vec::new();
        for (rate, o) in diss {
            if *rate == 0.0 {
                continue;
            }
            let od = dagger(o);
            let odo = od.dot(o);
            h_eff = h_eff - odo * C64::new(0.0, rate / 2.0);
            let mut entries = Vec::new();
            for ((r, c), v) in o.indexed_iter() {
                if *v != C64::new(0.0, 0.0) {
                    entries.push((r, c, *v));
                }
            }
            jumps.push(JumpTriplets {
                rate: *rate,
                entries,
            });
        }
        let h_eff_dag = dagger(&h_eff);
        Self {
            dim,
            h_eff: Csr::from_dense(&h_eff),
            h_eff_dag: Csr::from_dense(&h_eff_dag),
            jumps,
        }
    }

    /// out = L(rho); both are row-major d×d slices.
    fn apply(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.fill(C64::new(0.0, 0.0));
        // −i · H_eff ρ
        let minus_i = C64::new(0.0, -1.0);
        for r in 0..d {
            let (start, end) = (self.h_eff.row_ptr[r], self.h_eff.row_ptr[r + 1]);
            let out_row = &mut out[r * d..(r + 1) * d];
            for idx in start..end {
                let coeff = minus_i * self.h_eff.vals[idx];
                let rho_row = &rho[self.h_eff.cols[idx] * d..(self.h_eff.cols[idx] + 1) * d];
                for (o, x) in out_row.iter_mut().zip(rho_row.iter()) {
                    *o += coeff * x;
                }
            }
        }
        // +i · ρ H_eff†  (iterate rows of ρ against CSR rows of H_eff†)
        let plus_i = C64::new(0.0, 1.0);
        for i in 0..d {
            let rho_row = &rho[i * d..(i + 1) * d];
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let rik = rho_row[k];
                if rik == C64::new(0.0, 0.0) {
                    continue;
                }
                let coeff = plus_i * rik;
                let (start, end) = (self.h_eff_dag.row_ptr[k], self.h_eff_dag.row_ptr[k + 1]);
                for idx in start..end {
                    out_row[self.h_eff_dag.cols[idx]] += coeff * self.h_eff_dag.vals[idx];
                }
            }
        }
        // jump gains r · oρo†, entrywise over triplet pairs
        for jump in &self.jumps {
            let rate = C64::new(jump.rate, 0.0);
            for &(r1, c1, v1) in &jump.entries {
                for &(r2, c2, v2) in &jump.entries {
                    out[r1 * d + r2] += rate * v1 * v2.conj() * rho[c1 * d + c2];
                }
            }
        }
    }
}

// Dormand–Prince 5(4) coefficients. The generator is time-independent, so
// the stage-time row of the tableau is not needed.
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Result of one evolution: the observable record plus the final state.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub trajectory: Trajectory,
    pub final_state: DensityMatrix,
}

/// Adaptive Dormand–Prince 5(4) integration of dρ/dt = L(ρ).
///
/// Observables are recorded at the caller's sample times (strictly
/// increasing, first ≥ 0). Local error per step is held at `tol` (relative,
/// with a small absolute floor). Deterministic for identical inputs.
pub fn evolve(
    h: &CMatrix,
    diss: &[(f64, CMatrix)],
    rho0: &DensityMatrix,
    samples: &[f64],
    tol: f64,
    track_positivity: bool,
) -> Result<Evolution> {
    let d = rho0.space.total_dim();
    if h.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "evolve",
            expected: d,
            got: h.nrows(),
        });
    }
    if samples.is_empty() || samples.windows(2).any(|w| w[1] <= w[0]) || samples[0] < 0.0 {
        return Err(Error::InvalidConfig(
            "sample times must be non-empty and strictly increasing".into(),
        ));
    }
    let t_final = *samples.last().unwrap();
    let gen = Generator::compile(h, diss);
    let n = d * d;
    let mut y: Vec<C64> = rho0.rho.iter().cloned().collect();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut y_stage = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];

    let atol = tol * 1e-3;
    let mut t = 0.0f64;
    let mut hstep = (tol.powf(0.2) * 0.1).min(t_final / 10.0).max(1e-6);
    let mut first = true;

    let mut traj = Trajectory {
        times: Vec::with_capacity(samples.len()),
        n_phonon: Vec::with_capacity(samples.len()),
        populations: Vec::with_capacity(samples.len()),
        trace_error: Vec::with_capacity(samples.len()),
        min_eigenvalue: if track_positivity {
            Some(Vec::with_capacity(samples.len()))
        } else {
            None
        },
    };
    let mut next_sample = 0usize;

    let record = |traj: &mut Trajectory, t: f64, y: &[C64]| -> Result<()> {
        let space = rho0.space;
        let nf = space.fock_dim;
        let mut nbar = 0.0;
        let mut pops = [0.0; 4];
        let mut tr = 0.0;
        for i in 0..space.internal_dim {
            for m in 0..nf {
                let idx = space.index(i, m);
                let p = y[idx * d + idx].re;
                nbar += m as f64 * p;
                pops[i] += p;
                tr += p;
            }
        }
        traj.times.push(t);
        traj.n_phonon.push(nbar);
        traj.populations.push(pops);
        traj.trace_error.push((tr - 1.0).abs());
        if let Some(mins) = traj.min_eigenvalue.as_mut() {
            let rho = devec_row_major(&Array1::from(y.to_vec()), d);
            mins.push(*hermitian_eigenvalues(&rho)?.first().unwrap());
        }
        Ok(())
    };

    if samples[0] == 0.0 {
        record(&mut traj, 0.0, &y)?;
        next_sample = 1;
    }

    while t < t_final {
        // clip to the next sample time so observables land exactly on it
        let target = samples[next_sample.min(samples.len() - 1)];
        let hcur = hstep.min(target - t).min(t_final - t);
        let clipped = hcur < hstep;
        if hcur < 1e-12 * t_final.max(1.0) {
            return Err(Error::StepSizeUnderflow { time: t });
        }
        if first {
            gen.apply(&y, &mut k[0]);
            first = false;
        }
        // stages 2..7 (the generator is time-independent, so the stage
        // times DP_C never enter)
        for s in 0..6 {
            for (i, ys) in y_stage.iter_mut().enumerate() {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        acc += C64::new(hcur * a, 0.0) * kj[i];
                    }
                }
                *ys = acc;
            }
            let (_, tail) = k.split_at_mut(s + 1);
            gen.apply(&y_stage, &mut tail[0]);
        }
        // 5th-order solution and embedded error
        let mut err_sq = 0.0f64;
        for i in 0..n {
            let mut ynew = y[i];
            let mut e = C64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                let b5 = DP_B5[j];
                if b5 != 0.0 {
                    ynew += C64::new(hcur * b5, 0.0) * kj[i];
                }
                let db = DP_B5[j] - DP_B4[j];
                if db != 0.0 {
                    e += C64::new(hcur * db, 0.0) * kj[i];
                }
            }
            y_new[i] = ynew;
            let scale = atol + tol * y[i].norm().max(ynew.norm());
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();

        if err <= 1.0 {
            t += hcur;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: k7 of the accepted step is k1 of the next
            let (head, tail) = k.split_at_mut(6);
            let _ = head;
            gen.apply(&y, &mut tail[0]);
            k.swap(0, 6);

            // trace drift guard; renormalization is deliberately not applied
            let mut tr = 0.0;
            for i in 0..d {
                tr += y[i * d + i].re;
            }
            if (tr - 1.0).abs() > TRACE_DRIFT_LIMIT {
                return Err(Error::TraceDrift {
                    time: t,
                    drift: (tr - 1.0).abs(),
                });
            }

            while next_sample < samples.len() && t >= samples[next_sample] - 1e-12 {
                record(&mut traj, samples[next_sample], &y)?;
                next_sample += 1;
            }
        }
        let grow = if err > 0.0 {
            0.9 * err.powf(-0.2)
        } else {
            5.0
        };
        // a step clipped to a sample time says nothing about the stable step
        // size; keep the controller's estimate unless the step was rejected
        if clipped && err <= 1.0 {
            hstep = hstep.max(hcur * grow.clamp(0.2, 5.0));
        } else {
            hstep = hcur * grow.clamp(0.2, 5.0);
        }
    }
    while next_sample < samples.len() {
        record(&mut traj, samples[next_sample], &y)?;
        next_sample += 1;
    }

    let rho_final = devec_row_major(&Array1::from(y), d);
    Ok(Evolution {
        trajectory: traj,
        final_state: DensityMatrix::new(rho0.space, rho_final)?,
    })
}

/// Steady state of the generator.
///
/// For total dimension ≤ 40 this solves the kernel of the vectorized
/// Liouvillian (dense, with the trace constraint applied afterwards) and
/// reports degenerate kernels instead of averaging. Larger spaces fall back
/// to long-time evolution with a convergence monitor.
pub fn steady_state(
    h: &CMatrix,
    diss: &[(f64, CMatrix)],
    space: &HilbertSpace,
) -> Result<DensityMatrix> {
    steady_state_with_horizon(h, diss, space, None)
}

/// Like [`steady_state`] but with an explicit relaxation-rate hint for the
/// long-time fallback horizon (t = 20/γ_eff).
pub fn steady_state_with_horizon(
    h: &CMatrix,
    diss: &[(f64, CMatrix)],
    space: &HilbertSpace,
    gamma_eff: Option<f64>,
) -> Result<DensityMatrix> {
    if diss.iter().all(|(r, _)| *r == 0.0) {
        return Err(Error::InvalidConfig(
            "steady_state requires a non-empty dissipator list".into(),
        ));
    }
    let d = space.total_dim();
    if h.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "steady_state",
            expected: d,
            got: h.nrows(),
        });
    }
    if d <= KERNEL_METHOD_MAX_DIM {
        let l = liouvillian_matrix(h, diss)?;
        let (v, degenerate) = kernel_pair(&l, KERNEL_TOL)?;
        if degenerate {
            return Err(Error::DegenerateKernel);
        }
        let raw = devec_row_major(&v, d);
        let herm = (&raw + &dagger(&raw)) * C64::new(0.5, 0.0);
        let tr = trace(&herm);
        if tr.norm() < 1e-8 * frobenius_norm(&herm) {
            return Err(Error::DegenerateKernel);
        }
        let rho = herm / tr;
        let residual = frobenius_norm(&apply_liouvillian(h, diss, &rho)?);
        let l_norm = frobenius_norm(&l).max(f64::MIN_POSITIVE);
        if residual > 1e-9 * l_norm {
            return Err(Error::FullRank {
                achieved: residual,
                tol: 1e-9 * l_norm,
            });
        }
        DensityMatrix::new(*space, rho)
    } else {
        // long-time evolution from the maximally mixed state; default rate
        // hint is the slowest jump rate, callers with a better estimate of
        // the relaxation rate should pass it explicitly
        let slowest = gamma_eff.unwrap_or_else(|| {
            diss.iter()
                .map(|(r, _)| *r)
                .filter(|r| *r > 0.0)
                .fold(f64::INFINITY, f64::min)
        });
        let horizon = 20.0 / slowest.max(1e-12);
        let mut state = DensityMatrix::new(*space, identity(d) / C64::new(d as f64, 0.0))?;
        let chunk = horizon / 10.0;
        // generator scale for the residual acceptance test (surrogate for
        // the Frobenius norm of the unmaterialized Liouvillian)
        let gen_scale = 2.0 * frobenius_norm(h)
            + diss
                .iter()
                .map(|(r, o)| {
                    let od = dagger(o);
                    2.0 * r * frobenius_norm(&od.dot(o))
                })
                .sum::<f64>();
        let mut prev = state.rho.clone();
        for step in 1..=200 {
            let samples = [chunk];
            let out = evolve(h, diss, &state, &samples, 1e-9, false)?;
            state = out.final_state;
            let delta = frobenius_norm(&(&state.rho - &prev));
            let residual = frobenius_norm(&apply_liouvillian(h, diss, &state.rho)?);
            if step >= 10 && (delta <= 1e-10 || residual <= 1e-9 * gen_scale) {
                return Ok(state);
            }
            prev = state.rho.clone();
        }
        Err(Error::InvalidConfig(
            "long-time steady-state fallback did not converge; pass a relaxation-rate hint"
                .into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{annihilation, kernel_is_degenerate, null_vector};
    use approx::assert_abs_diff_eq;

    fn two_level_decay(gamma: f64) -> (CMatrix, Vec<(f64, CMatrix)>) {
        let h: CMatrix = Array2::zeros((2, 2));
        let mut o: CMatrix = Array2::zeros((2, 2));
        o[[0, 1]] = C64::new(1.0, 0.0); // |g⟩⟨e|
        (h, vec![(gamma, o)])
    }

    #[test]
    fn generator_is_traceless_and_hermiticity_preserving() {
        let (h, diss) = two_level_decay(2.0);
        let mut rho: CMatrix = Array2::zeros((2, 2));
        rho[[0, 0]] = C64::new(0.25, 0.0);
        rho[[1, 1]] = C64::new(0.75, 0.0);
        rho[[0, 1]] = C64::new(0.1, 0.2);
        rho[[1, 0]] = C64::new(0.1, -0.2);
        let out = apply_liouvillian(&h, &diss, &rho).unwrap();
        assert!(trace(&out).norm() <= 1e-12);
        assert!(hermiticity_error(&out) <= 1e-12);
    }

    #[test]
    fn pure_decay_generator_by_hand() {
        let gamma = 1.7;
        let (h, diss) = two_level_decay(gamma);
        let mut excited: CMatrix = Array2::zeros((2, 2));
        excited[[1, 1]] = C64::new(1.0, 0.0);
        let out = apply_liouvillian(&h, &diss, &excited).unwrap();
        assert_abs_diff_eq!(out[[0, 0]].re, gamma, epsilon = 1e-13);
        assert_abs_diff_eq!(out[[1, 1]].re, -gamma, epsilon = 1e-13);
        assert!(out[[0, 1]].norm() <= 1e-14);
    }

    #[test]
    fn generator_linear_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (h, diss) = two_level_decay(0.8);
        let rand_mat = |rng: &mut rand_chacha::ChaCha8Rng| -> CMatrix {
            Array2::from_shape_fn((2, 2), |_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        for _ in 0..5 {
            let r1 = rand_mat(&mut rng);
            let r2 = rand_mat(&mut rng);
            let (al, be) = (C64::new(0.3, -0.4), C64::new(-1.2, 0.9));
            let lhs =
                apply_liouvillian(&h, &diss, &(&r1 * al + &r2 * be)).unwrap();
            let rhs = apply_liouvillian(&h, &diss, &r1).unwrap() * al
                + apply_liouvillian(&h, &diss, &r2).unwrap() * be;
            assert!(max_abs(&(&lhs - &rhs)) <= 1e-12);
        }
    }

    #[test]
    fn sparse_generator_matches_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let space = HilbertSpace::new(3).unwrap();
        let cfg = crate::scheme::SchemeConfig::asymmetric_gate(0.1, 2.0, 5.0);
        let mut cfg = cfg;
        cfg.gamma_k = 0.01;
        cfg.n_thermal = 0.5;
        let h = crate::scheme::bare_hamiltonian(&cfg, &space).unwrap();
        let diss = crate::scheme::dissipators(&cfg, &space).unwrap();
        let d = space.total_dim();
        let g = Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let rho = (&g + &dagger(&g)) * C64::new(0.5, 0.0);
        let dense = apply_liouvillian(&h, &diss, &rho).unwrap();
        let gen = Generator::compile(&h, &diss);
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        let flat: Vec<C64> = rho.iter().cloned().collect();
        gen.apply(&flat, &mut out);
        let sparse = devec_row_major(&Array1::from(out), d);
        assert!(max_abs(&(&dense - &sparse)) <= 1e-12 * max_abs(&dense).max(1.0));
    }

    #[test]
    fn liouvillian_matrix_matches_direct_application() {
        let space = HilbertSpace::new(2).unwrap();
        let cfg = crate::scheme::SchemeConfig::symmetric_gate(0.1, 1.5, 3.0);
        let h = crate::scheme::bare_hamiltonian(&cfg, &space).unwrap();
        let diss = crate::scheme::dissipators(&cfg, &space).unwrap();
        let l = liouvillian_matrix(&h, &diss).unwrap();
        let d = space.total_dim();
        let mut rho: CMatrix = Array2::zeros((d, d));
        rho[[1, 1]] = C64::new(0.5, 0.0);
        rho[[2, 2]] = C64::new(0.5, 0.0);
        rho[[1, 2]] = C64::new(0.1, 0.05);
        rho[[2, 1]] = C64::new(0.1, -0.05);
        let via_matrix = devec_row_major(&l.dot(&vec_row_major(&rho)), d);
        let direct = apply_liouvillian(&h, &diss, &rho).unwrap();
        assert!(max_abs(&(&via_matrix - &direct)) <= 1e-12 * max_abs(&direct).max(1.0));
    }

    #[test]
    fn decoupled_phonon_stays_put() {
        let space = HilbertSpace::new(4).unwrap();
        let mut cfg = crate::scheme::SchemeConfig::symmetric_gate(0.0, 1.5, 3.0);
        cfg.lambda = 0.0;
        let h = crate::scheme::bare_hamiltonian(&cfg, &space).unwrap();
        let diss = crate::scheme::dissipators(&cfg, &space).unwrap();
        // |D⟩ ⊗ |1⟩: decoupled phonon in Fock state 1
        let dark = crate::scheme::dark_state(&cfg).unwrap();
        let mut psi: CVector = Array1::zeros(space.total_dim());
        for j in 0..4 {
            psi[space.index(j, 1)] = dark[j];
        }
        let rho0 = DensityMatrix::from_pure(space, &psi).unwrap();
        let samples: Vec<f64> = (1..=10).map(|k| k as f64 * 5.0).collect();
        let out = evolve(&h, &diss, &rho0, &samples, 1e-8, false).unwrap();
        for nbar in out.trajectory.n_phonon {
            assert_abs_diff_eq!(nbar, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn damped_oscillator_matches_analytic_decay() {
        // drives off, γ_k > 0, N = 0: ⟨n(t)⟩ = n₀ e^{−γ_k t}
        let space = HilbertSpace::new(6).unwrap();
        let gamma_k = 0.05;
        let h = space
            .embed_phonon(&crate::operators::number_operator(6).unwrap())
            .unwrap();
        let diss = vec![(
            gamma_k,
            space.embed_phonon(&annihilation(6).unwrap()).unwrap(),
        )];
        // internal level |−1⟩ ⊗ Fock |2⟩
        let mut psi: CVector = Array1::zeros(space.total_dim());
        psi[space.index(3, 2)] = C64::new(1.0, 0.0);
        let rho0 = DensityMatrix::from_pure(space, &psi).unwrap();
        let samples: Vec<f64> = (1..=8).map(|k| k as f64 * 4.0).collect();
        let out = evolve(&h, &diss, &rho0, &samples, 1e-9, false).unwrap();
        for (t, nbar) in out.trajectory.times.iter().zip(out.trajectory.n_phonon.iter()) {
            let expect = 2.0 * (-gamma_k * t).exp();
            assert!(
                (nbar - expect).abs() <= 1e-6 * expect,
                "t={t}: {nbar} vs {expect}"
            );
        }
    }

    #[test]
    fn trace_is_conserved_along_trajectories() {
        let space = HilbertSpace::new(5).unwrap();
        let cfg = crate::scheme::SchemeConfig::symmetric_gate(0.05, 1.5, 7.5);
        let h = crate::scheme::bare_hamiltonian(&cfg, &space).unwrap();
        let diss = crate::scheme::dissipators(&cfg, &space).unwrap();
        let dark = crate::scheme::dark_state(&cfg).unwrap();
        let mut psi: CVector = Array1::zeros(space.total_dim());
        for j in 0..4 {
            psi[space.index(j, 1)] = dark[j];
        }
        let rho0 = DensityMatrix::from_pure(space, &psi).unwrap();
        let samples: Vec<f64> = (1..=20).map(|k| k as f64 * 10.0).collect();
        let out = evolve(&h, &diss, &rho0, &samples, 1e-8, true).unwrap();
        for err in &out.trajectory.trace_error {
            assert!(*err <= 1e-9);
        }
        for min in out.trajectory.min_eigenvalue.unwrap() {
            assert!(min >= -1e-8);
        }
    }

    #[test]
    fn steady_state_two_level_decay() {
        // pure decay drives everything into |g⟩⟨g|
        let (h2, diss2) = two_level_decay(1.3);
        let l = liouvillian_matrix(&h2, &diss2).unwrap();
        let v = null_vector(&l, 1e-10).unwrap();
        let rho = devec_row_major(&v, 2);
        let tr = trace(&rho);
        let rho = rho / tr;
        assert_abs_diff_eq!(rho[[0, 0]].re, 1.0, epsilon = 1e-9);
        assert!(rho[[1, 1]].norm() <= 1e-9);
    }

    #[test]
    fn degenerate_kernel_is_reported() {
        // three levels: decay 1→0, level 2 fully decoupled ⇒ kernel contains
        // both |0⟩⟨0| and |2⟩⟨2|
        let h: CMatrix = Array2::zeros((3, 3));
        let mut o: CMatrix = Array2::zeros((3, 3));
        o[[0, 1]] = C64::new(1.0, 0.0);
        let l = liouvillian_matrix(&h, &[(1.0, o)]).unwrap();
        let v = null_vector(&l, 1e-10).unwrap();
        assert!(kernel_is_degenerate(&l, 1e-10, &v));
    }

    #[test]
    fn expectation_basics() {
        let space = HilbertSpace::new(3).unwrap();
        let d = space.total_dim();
        let ident = identity(d);
        let mut rho: CMatrix = Array2::zeros((d, d));
        // |A₂⟩ ⊗ |2⟩
        let idx = space.index(0, 2);
        rho[[idx, idx]] = C64::new(1.0, 0.0);
        assert_abs_diff_eq!(
            expectation(&ident, &rho).unwrap().re,
            1.0,
            epsilon = 1e-14
        );
        let n_full = space
            .embed_phonon(&crate::operators::number_operator(3).unwrap())
            .unwrap();
        assert_abs_diff_eq!(
            expectation(&n_full, &rho).unwrap().re,
            2.0,
            epsilon = 1e-14
        );
        assert!(expectation(&identity(2), &rho).is_err());
    }
}
