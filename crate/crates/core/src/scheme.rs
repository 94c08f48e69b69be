//! Scheme construction: rotating-frame Hamiltonians, dressed bases,
//! dissipator sets, dark states, steady-state ansätze and gate-point
//! residuals for the two four-level cooling schemes and the two
//! three-level reductions used as baselines.
//!
//! Internal level ordering is fixed everywhere as
//! (|A₂⟩, |+1⟩, |0⟩, |−1⟩) = indices (0, 1, 2, 3).
//!
//! All frequencies are in units of the trap frequency ω_k. The rotating
//! frame puts |−1⟩ at zero energy; the ground-manifold diagonal
//! (Δ₊ − Δ₋)(|+1⟩⟨+1| + |0⟩⟨0|) is fixed by the two-photon shift of the
//! laser pair (with a resonant microwave on |0⟩↔|+1⟩), so the dark-state
//! condition Δ₋ = Δ₊ + Ω_g/2 makes that diagonal equal −Ω_g/2 and the
//! dressed expansion reproduces the −Ω_g|Y⟩⟨Y| Stark term.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{
    annihilation, creation, identity, kron, number_operator, CMatrix, CVector,
    HilbertSpace,
};

pub const A2: usize = 0;
pub const PLUS1: usize = 1;
pub const ZERO: usize = 2;
pub const MINUS1: usize = 3;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// |i⟩⟨j| on the 4-level internal space.
pub fn ketbra(i: usize, j: usize) -> CMatrix {
    let mut m = Array2::zeros((4, 4));
    m[[i, j]] = re(1.0);
    m
}

/// σ_x^{i,j} = |i⟩⟨j| + |j⟩⟨i|.
pub fn sigma_x(i: usize, j: usize) -> CMatrix {
    let mut m = Array2::zeros((4, 4));
    m[[i, j]] = re(1.0);
    m[[j, i]] = re(1.0);
    m
}

/// σ_z′ = |+1⟩⟨+1| − |−1⟩⟨−1|, the operator the vibration couples to.
pub fn sigma_z_prime() -> CMatrix {
    let mut m = Array2::zeros((4, 4));
    m[[PLUS1, PLUS1]] = re(1.0);
    m[[MINUS1, MINUS1]] = re(-1.0);
    m
}

fn outer(a: &CVector, b: &CVector) -> CMatrix {
    let n = a.len();
    Array2::from_shape_fn((n, n), |(i, j)| a[i] * b[j].conj())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// EIT plus single Stark-shift gate (modified Λ configuration).
    Asymmetric,
    /// Double Stark-shift gate (combined Λ and V configuration).
    Symmetric,
    /// Closed Λ-scheme reduction on (|±1⟩, |A₂⟩); microwave off.
    EitBaseline,
    /// Closed Stark-shift-gate reduction on (|+1⟩, |0⟩, |A₂⟩); |−1⟩ masked.
    StarkBaseline,
}

impl SchemeKind {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::Asymmetric => "asymmetric",
            SchemeKind::Symmetric => "symmetric",
            SchemeKind::EitBaseline => "eit-baseline",
            SchemeKind::StarkBaseline => "stark-baseline",
        }
    }
}

/// Full parameter set of one cooling scheme, in units of ω_k.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Reference trap frequency; 1.0 in internal units.
    pub omega_k: f64,
    /// Spin-phonon coupling λ.
    pub lambda: f64,
    /// Optical Rabi frequency Ω (both beams).
    pub omega: f64,
    /// Microwave Rabi frequency Ω_g.
    pub omega_g: f64,
    /// Laser detunings Δ± (asymmetric family).
    pub delta_plus: f64,
    pub delta_minus: f64,
    /// Laser detuning Δ and microwave detuning Δ_g (symmetric family).
    pub delta: f64,
    pub delta_g: f64,
    /// Total decay rate Γ of |A₂⟩.
    pub gamma: f64,
    /// Branching fractions Γ_i/Γ for i = +1, 0, −1.
    pub branching: [f64; 3],
    /// Vibrational decay γ_k = ω_k/Q.
    pub gamma_k: f64,
    /// Bath occupation N(ω_k).
    pub n_thermal: f64,
    /// Fock-space truncation.
    pub fock_dim: usize,
}

pub const DEFAULT_FOCK_DIM: usize = 15;

impl SchemeConfig {
    /// Lamb-Dicke parameter η = λ/ω_k.
    pub fn eta(&self) -> f64 {
        self.lambda / self.omega_k
    }

    fn base(kind: SchemeKind, lambda: f64, omega: f64, gamma: f64) -> Self {
        Self {
            kind,
            omega_k: 1.0,
            lambda,
            omega,
            omega_g: 0.0,
            delta_plus: 0.0,
            delta_minus: 0.0,
            delta: 0.0,
            delta_g: 0.0,
            gamma,
            branching: [1.0 / 3.0; 3],
            gamma_k: 0.0,
            n_thermal: 0.0,
            fock_dim: DEFAULT_FOCK_DIM,
        }
    }

    /// Asymmetric scheme with explicit detunings. The dark-state condition
    /// Δ₋ = Δ₊ + Ω_g/2 is *not* enforced; pass detunings that satisfy it to
    /// obtain the interference-protected configuration.
    pub fn asymmetric(
        lambda: f64,
        omega: f64,
        omega_g: f64,
        delta_plus: f64,
        delta_minus: f64,
        gamma: f64,
    ) -> Self {
        Self {
            omega_g,
            delta_plus,
            delta_minus,
            ..Self::base(SchemeKind::Asymmetric, lambda, omega, gamma)
        }
    }

    /// Asymmetric scheme at the Stark-shift-gate point: Ω_g = 4ω_k/3 with the
    /// dark-state condition satisfied and Δ₋ at the cooling-peak detuning
    /// Δ = 3Ω²/(7ω_k) − ω_k.
    pub fn asymmetric_gate(lambda: f64, omega: f64, gamma: f64) -> Self {
        let omega_g = 4.0 / 3.0;
        let delta_minus = 3.0 * omega * omega / 7.0 - 1.0;
        Self::asymmetric(
            lambda,
            omega,
            omega_g,
            delta_minus - omega_g / 2.0,
            delta_minus,
            gamma,
        )
    }

    pub fn symmetric(
        lambda: f64,
        omega: f64,
        omega_g: f64,
        delta: f64,
        delta_g: f64,
        gamma: f64,
    ) -> Self {
        Self {
            omega_g,
            delta,
            delta_g,
            ..Self::base(SchemeKind::Symmetric, lambda, omega, gamma)
        }
    }

    /// Symmetric scheme at its gate point: Ω_g = 2ω_k (microwave-dressed level
    /// at +ω_k once Δ_g = −ω_k) and the laser detuning placing the
    /// laser-dressed level at +ω_k as well.
    pub fn symmetric_gate(lambda: f64, omega: f64, gamma: f64) -> Self {
        Self::symmetric(
            lambda,
            omega,
            2.0,
            (omega * omega - 2.0) / 2.0,
            -1.0,
            gamma,
        )
    }

    /// Λ-type EIT reduction: both beams at the detuning that puts the bright
    /// dressed level at +ω_k, microwave off, |0⟩ decoupled (no decay into it).
    pub fn eit_baseline(lambda: f64, omega: f64, gamma: f64) -> Self {
        let delta = (omega * omega - 2.0) / 2.0;
        Self {
            delta_plus: delta,
            delta_minus: delta,
            branching: [0.5, 0.0, 0.5],
            ..Self::base(SchemeKind::EitBaseline, lambda, omega, gamma)
        }
    }

    /// Stark-shift-gate reduction on (|+1⟩, |0⟩, |A₂⟩): resonant microwave
    /// with dressed splitting Ω_g = ω_k, resonant laser, |−1⟩ masked.
    pub fn stark_baseline(lambda: f64, omega: f64, gamma: f64) -> Self {
        Self {
            omega_g: 1.0,
            delta: 0.0,
            delta_g: 0.0,
            branching: [0.5, 0.5, 0.0],
            ..Self::base(SchemeKind::StarkBaseline, lambda, omega, gamma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_k > 0.0) {
            return Err(Error::InvalidConfig("omega_k must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive".into()));
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidConfig("fock_dim must be >= 2".into()));
        }
        if self.gamma_k < 0.0 || self.n_thermal < 0.0 {
            return Err(Error::InvalidConfig(
                "gamma_k and n_thermal must be >= 0".into(),
            ));
        }
        let sum: f64 = self.branching.iter().sum();
        if self.branching.iter().any(|b| *b < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "branching fractions must be non-negative and sum to 1 (sum = {sum})"
            )));
        }
        match self.kind {
            SchemeKind::Asymmetric | SchemeKind::Symmetric | SchemeKind::StarkBaseline => {
                if !(self.omega > 0.0) || !(self.omega_g > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{} scheme requires positive Omega and Omega_g",
                        self.kind.label()
                    )));
                }
            }
            SchemeKind::EitBaseline => {
                if !(self.omega > 0.0) {
                    return Err(Error::InvalidConfig(
                        "eit-baseline requires positive Omega".into(),
                    ));
                }
                if self.omega_g != 0.0 {
                    return Err(Error::InvalidConfig(
                        "eit-baseline has the microwave off (Omega_g must be 0)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.fock_dim)
    }
}

/// Unitary map from the bare internal basis to a scheme's dressed basis.
/// Rows of `u` are the dressed bras in bare coordinates.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub labels: [&'static str; 4],
    pub u: CMatrix,
}

impl DressedBasis {
    /// Row (dressed state) as a bare-basis ket.
    pub fn state(&self, row: usize) -> CVector {
        Array1::from_shape_fn(4, |j| self.u[[row, j]].conj())
    }
}

/// Asymmetric dressed states |d⟩, |b⟩, |Y⟩ in bare coordinates.
pub fn asymmetric_dressed_states() -> (CVector, CVector, CVector) {
    let s3 = 3.0f64.sqrt();
    let s6 = 6.0f64.sqrt();
    let s2 = 2.0f64.sqrt();
    let d = Array1::from(vec![re(0.0), re(1.0 / s3), re(1.0 / s3), re(-1.0 / s3)]);
    let b = Array1::from(vec![re(0.0), re(1.0 / s6), re(1.0 / s6), re(2.0 / s6)]);
    let y = Array1::from(vec![re(0.0), re(1.0 / s2), re(-1.0 / s2), re(0.0)]);
    (d, b, y)
}

/// Symmetric dressed states |D⟩, |B⟩ in bare coordinates.
pub fn symmetric_dressed_states() -> (CVector, CVector) {
    let s2 = 2.0f64.sqrt();
    let dd = Array1::from(vec![re(0.0), re(1.0 / s2), re(0.0), re(-1.0 / s2)]);
    let bb = Array1::from(vec![re(0.0), re(1.0 / s2), re(0.0), re(1.0 / s2)]);
    (dd, bb)
}

pub fn dressed_basis(kind: SchemeKind) -> Result<DressedBasis> {
    match kind {
        SchemeKind::Asymmetric => {
            let (d, b, y) = asymmetric_dressed_states();
            let mut u: CMatrix = Array2::zeros((4, 4));
            u[[0, A2]] = re(1.0);
            for j in 0..4 {
                u[[1, j]] = d[j].conj();
                u[[2, j]] = b[j].conj();
                u[[3, j]] = y[j].conj();
            }
            Ok(DressedBasis {
                labels: ["A2", "d", "b", "Y"],
                u,
            })
        }
        SchemeKind::Symmetric => {
            let (dd, bb) = symmetric_dressed_states();
            let mut u: CMatrix = Array2::zeros((4, 4));
            u[[0, A2]] = re(1.0);
            for j in 0..4 {
                u[[1, j]] = dd[j].conj();
                u[[2, j]] = bb[j].conj();
            }
            u[[3, ZERO]] = re(1.0);
            Ok(DressedBasis {
                labels: ["A2", "D", "B", "0"],
                u,
            })
        }
        other => Err(Error::UnsupportedKind {
            op: "dressed_basis",
            kind: other.label(),
        }),
    }
}

/// Internal (phonon-free) part of the rotating-frame Hamiltonian, 4x4.
pub fn internal_hamiltonian(cfg: &SchemeConfig) -> Result<CMatrix> {
    cfg.validate()?;
    let mut h: CMatrix = Array2::zeros((4, 4));
    match cfg.kind {
        SchemeKind::Asymmetric | SchemeKind::EitBaseline => {
            h = h - ketbra(A2, A2) * re(cfg.delta_minus);
            let two_photon = cfg.delta_plus - cfg.delta_minus;
            h = h + (ketbra(PLUS1, PLUS1) + ketbra(ZERO, ZERO)) * re(two_photon);
            h = h + (sigma_x(A2, PLUS1) + sigma_x(A2, MINUS1)) * re(cfg.omega / 2.0);
            if cfg.omega_g != 0.0 {
                h = h + sigma_x(PLUS1, ZERO) * re(cfg.omega_g / 2.0);
            }
        }
        SchemeKind::Symmetric => {
            h = h - ketbra(A2, A2) * re(cfg.delta);
            h = h + ketbra(ZERO, ZERO) * re(cfg.delta_g);
            h = h + (sigma_x(A2, PLUS1) + sigma_x(A2, MINUS1)) * re(cfg.omega / 2.0);
            h = h + (sigma_x(PLUS1, ZERO) + sigma_x(MINUS1, ZERO)) * re(cfg.omega_g / 2.0);
        }
        SchemeKind::StarkBaseline => {
            h = h - ketbra(A2, A2) * re(cfg.delta);
            h = h + ketbra(ZERO, ZERO) * re(cfg.delta_g);
            h = h + sigma_x(A2, PLUS1) * re(cfg.omega / 2.0);
            h = h + sigma_x(PLUS1, ZERO) * re(cfg.omega_g / 2.0);
        }
    }
    Ok(h)
}

/// Full rotating-frame generator on internal ⊗ Fock space:
/// H = H_int ⊗ I + ω_k a†a + λ(a + a†)σ_z′.
pub fn bare_hamiltonian(cfg: &SchemeConfig, space: &HilbertSpace) -> Result<CMatrix> {
    if space.fock_dim < 2 {
        return Err(Error::InvalidConfig("fock_dim must be >= 2".into()));
    }
    let h_int = internal_hamiltonian(cfg)?;
    let a = annihilation(space.fock_dim)?;
    let x = &a + &creation(space.fock_dim)?;
    let mut h = space.embed_internal(&h_int)?;
    h = h + space.embed_phonon(&number_operator(space.fock_dim)?)? * re(cfg.omega_k);
    h = h + kron(&sigma_z_prime(), &x)? * re(cfg.lambda);
    Ok(h)
}

/// Effective dressed-basis Hamiltonian rotated to the bare basis.
///
/// For the symmetric scheme this reproduces the bare Hamiltonian exactly.
/// For the asymmetric scheme it drops the residual couplings
/// (λ/2)(a+a†)(|Y⟩⟨Y| − |b⟩⟨b|) + (λ/√12)(a+a†)(|b⟩⟨Y| + |Y⟩⟨b|),
/// which is what makes the steady-state ansatz an exact eigenrelation.
pub fn effective_hamiltonian(cfg: &SchemeConfig, space: &HilbertSpace) -> Result<CMatrix> {
    cfg.validate()?;
    let n_f = space.fock_dim;
    let a = annihilation(n_f)?;
    let x = &a + &creation(n_f)?;
    let ident = identity(n_f);
    let num = number_operator(n_f)?;
    match cfg.kind {
        SchemeKind::Asymmetric => {
            let (d, b, y) = asymmetric_dressed_states();
            let a2: CVector = Array1::from(vec![re(1.0), re(0.0), re(0.0), re(0.0)]);
            let sx = |p: &CVector, q: &CVector| -> CMatrix { outer(p, q) + outer(q, p) };

            // H_f
            let mut h = kron(&identity(4), &num)? * re(cfg.omega_k)
                - kron(&outer(&a2, &a2), &ident)? * re(cfg.delta_minus);
            // H_EIT
            h = h + kron(&sx(&a2, &b), &ident)? * re(6.0f64.sqrt() * cfg.omega / 4.0);
            h = h + kron(&sx(&b, &d), &x)? * re(cfg.lambda / 2.0f64.sqrt());
            // H_Stark
            h = h - kron(&outer(&y, &y), &ident)? * re(cfg.omega_g);
            h = h + kron(&sx(&a2, &y), &ident)? * re(2.0f64.sqrt() * cfg.omega / 4.0);
            h = h + kron(&sx(&d, &y), &x)? * re(cfg.lambda / 6.0f64.sqrt());
            Ok(h)
        }
        SchemeKind::Symmetric => {
            let (dd, bb) = symmetric_dressed_states();
            let a2: CVector = Array1::from(vec![re(1.0), re(0.0), re(0.0), re(0.0)]);
            let zero: CVector = Array1::from(vec![re(0.0), re(0.0), re(1.0), re(0.0)]);
            let sx = |p: &CVector, q: &CVector| -> CMatrix { outer(p, q) + outer(q, p) };

            // H_0^s
            let mut h = kron(&identity(4), &num)? * re(cfg.omega_k)
                + kron(&sx(&bb, &dd), &x)? * re(cfg.lambda);
            // laser Stark gate
            h = h - kron(&(outer(&a2, &a2) - outer(&bb, &bb)), &ident)? * re(cfg.delta);
            h = h + kron(&sx(&a2, &bb), &ident)? * re(2.0f64.sqrt() * cfg.omega / 2.0);
            // microwave Stark gate
            h = h + kron(
                &(outer(&zero, &zero) * re(cfg.delta_g) - outer(&bb, &bb) * re(cfg.delta)),
                &ident,
            )?;
            h = h + kron(&sx(&zero, &bb), &ident)? * re(2.0f64.sqrt() * cfg.omega_g / 2.0);
            Ok(h)
        }
        other => Err(Error::UnsupportedKind {
            op: "effective_hamiltonian",
            kind: other.label(),
        }),
    }
}

/// Lindblad jump operators with their rates: three internal decays
/// |i⟩⟨A₂| at Γ_i = branching_i·Γ, plus phonon damping b at (N+1)γ_k and
/// b† at Nγ_k when γ_k > 0.
pub fn dissipators(cfg: &SchemeConfig, space: &HilbertSpace) -> Result<Vec<(f64, CMatrix)>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (slot, target) in [(0usize, PLUS1), (1, ZERO), (2, MINUS1)] {
        let rate = cfg.branching[slot] * cfg.gamma;
        if rate < 0.0 {
            return Err(Error::InvalidConfig("negative decay rate".into()));
        }
        out.push((rate, space.embed_internal(&ketbra(target, A2))?));
    }
    if cfg.gamma_k > 0.0 {
        let a = annihilation(space.fock_dim)?;
        out.push((
            (cfg.n_thermal + 1.0) * cfg.gamma_k,
            space.embed_phonon(&a)?,
        ));
        if cfg.n_thermal > 0.0 {
            out.push((
                cfg.n_thermal * cfg.gamma_k,
                space.embed_phonon(&creation(space.fock_dim)?)?,
            ));
        }
    }
    Ok(out)
}

/// The drive-decoupled internal superposition of each four-level scheme.
pub fn dark_state(cfg: &SchemeConfig) -> Result<CVector> {
    match cfg.kind {
        SchemeKind::Asymmetric => Ok(asymmetric_dressed_states().0),
        SchemeKind::Symmetric => Ok(symmetric_dressed_states().0),
        other => Err(Error::UnsupportedKind {
            op: "dark_state",
            kind: other.label(),
        }),
    }
}

/// First-order steady-state ansatz on the full space, normalized.
///
/// Asymmetric: |d⟩|0⟩ − (η/√2)(|b⟩ − √3|Y⟩)|1⟩.
/// Symmetric:  |D⟩|0⟩ − (√2 η ω_k/Ω_g)|0⟩|1⟩.
pub fn ansatz_steady_state(cfg: &SchemeConfig, space: &HilbertSpace) -> Result<CVector> {
    let mut v = ansatz_unnormalized(cfg, space)?;
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / norm);
    Ok(v)
}

fn ansatz_unnormalized(cfg: &SchemeConfig, space: &HilbertSpace) -> Result<CVector> {
    cfg.validate()?;
    if space.fock_dim < 2 {
        return Err(Error::InvalidConfig("fock_dim must be >= 2".into()));
    }
    let eta = cfg.eta();
    let dim = space.total_dim();
    let mut v: CVector = Array1::zeros(dim);
    match cfg.kind {
        SchemeKind::Asymmetric => {
            let (d, b, y) = asymmetric_dressed_states();
            for j in 0..4 {
                v[space.index(j, 0)] += d[j];
                v[space.index(j, 1)] +=
                    (b[j] * re(-1.0) + y[j] * re(3.0f64.sqrt())) * re(eta / 2.0f64.sqrt());
            }
        }
        SchemeKind::Symmetric => {
            if cfg.omega_g == 0.0 {
                return Err(Error::InvalidConfig(
                    "symmetric ansatz undefined for Omega_g = 0".into(),
                ));
            }
            let (dd, _) = symmetric_dressed_states();
            for j in 0..4 {
                v[space.index(j, 0)] += dd[j];
            }
            v[space.index(ZERO, 1)] -=
                re(2.0f64.sqrt() * eta * cfg.omega_k / cfg.omega_g);
        }
        other => {
            return Err(Error::UnsupportedKind {
                op: "ansatz_steady_state",
                kind: other.label(),
            })
        }
    }
    Ok(v)
}

/// The leakage ket that the effective Hamiltonian maps the ansatz onto:
/// |Y⟩|1⟩ for the asymmetric scheme, |0⟩|1⟩ for the symmetric one.
pub fn leakage_ket(cfg: &SchemeConfig, space: &HilbertSpace) -> Result<CVector> {
    let dim = space.total_dim();
    let mut v: CVector = Array1::zeros(dim);
    match cfg.kind {
        SchemeKind::Asymmetric => {
            let (_, _, y) = asymmetric_dressed_states();
            for j in 0..4 {
                v[space.index(j, 1)] = y[j];
            }
        }
        SchemeKind::Symmetric => {
            v[space.index(ZERO, 1)] = re(1.0);
        }
        other => {
            return Err(Error::UnsupportedKind {
                op: "leakage_ket",
                kind: other.label(),
            })
        }
    }
    Ok(v)
}

/// Scalar coefficient multiplying the leakage ket in H_eff|ansatz⟩, computed
/// as ⟨leak|H_eff|ansatz⟩ with the unnormalized ansatz. Vanishes exactly at
/// the Stark-shift-gate points 3Ω_g = 4ω_k (asymmetric) and Δ_g = −ω_k
/// (symmetric); the closed forms are
/// √(3/2)·η·(4ω_k/3 − Ω_g) and −(√2ηω_k/Ω_g)(ω_k + Δ_g).
pub fn gate_point_residual(cfg: &SchemeConfig) -> Result<f64> {
    let space = HilbertSpace::new(cfg.fock_dim.max(3))?;
    let h = effective_hamiltonian(cfg, &space)?;
    let phi = ansatz_unnormalized(cfg, &space)?;
    let leak = leakage_ket(cfg, &space)?;
    let image = h.dot(&phi);
    let coeff: C64 = leak
        .iter()
        .zip(image.iter())
        .map(|(l, x)| l.conj() * x)
        .sum();
    debug_assert!(coeff.im.abs() <= 1e-10 * (1.0 + coeff.norm()));
    Ok(coeff.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{dagger, hermiticity_error, is_hermitian, max_abs};
    use approx::assert_abs_diff_eq;

    fn asym_gate(eta: f64) -> SchemeConfig {
        SchemeConfig::asymmetric_gate(eta, 2.0, 5.0)
    }

    fn sym_gate(eta: f64) -> SchemeConfig {
        SchemeConfig::symmetric_gate(eta, 2.0, 5.0)
    }

    #[test]
    fn dressed_bases_are_unitary_and_orthogonal() {
        for kind in [SchemeKind::Asymmetric, SchemeKind::Symmetric] {
            let basis = dressed_basis(kind).unwrap();
            let product = basis.u.dot(&dagger(&basis.u));
            let diff = &product - &identity(4);
            assert!(max_abs(&diff) <= 1e-12);
        }
        let (d, b, y) = asymmetric_dressed_states();
        let dot = |u: &CVector, v: &CVector| -> C64 {
            u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
        };
        assert!(dot(&d, &b).norm() <= 1e-15);
        assert!(dot(&d, &y).norm() <= 1e-15);
        assert!(dot(&b, &y).norm() <= 1e-15);
    }

    #[test]
    fn sigma_z_prime_dressed_elements() {
        let (d, b, y) = asymmetric_dressed_states();
        let sz = sigma_z_prime();
        let elem = |u: &CVector, v: &CVector| -> C64 {
            u.iter()
                .zip(sz.dot(v).iter())
                .map(|(a, b)| a.conj() * *b)
                .sum()
        };
        assert_abs_diff_eq!(elem(&d, &b).re, 1.0 / 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&d, &y).re, 1.0 / 6.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&d, &d).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&b, &b).re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&y, &y).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&b, &y).re, 1.0 / 12.0f64.sqrt(), epsilon = 1e-15);

        let (dd, bb) = symmetric_dressed_states();
        assert_abs_diff_eq!(elem(&bb, &dd).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&dd, &dd).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(elem(&bb, &bb).re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let space = HilbertSpace::new(5).unwrap();
        for cfg in [
            asym_gate(0.1),
            sym_gate(0.1),
            SchemeConfig::eit_baseline(0.1, 2.0, 5.0),
            SchemeConfig::stark_baseline(0.1, 2.0, 5.0),
        ] {
            let h = bare_hamiltonian(&cfg, &space).unwrap();
            assert!(is_hermitian(&h), "{:?}", cfg.kind);
        }
        for cfg in [asym_gate(0.1), sym_gate(0.1)] {
            let h = effective_hamiltonian(&cfg, &space).unwrap();
            assert!(hermiticity_error(&h) <= 1e-12 * max_abs(&h));
        }
    }

    #[test]
    fn asymmetric_dark_state_is_zero_eigenvector() {
        let mut cfg = asym_gate(0.0);
        cfg.lambda = 0.0;
        let h = internal_hamiltonian(&cfg).unwrap();
        let d = dark_state(&cfg).unwrap();
        let image = h.dot(&d);
        assert!(image.iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn symmetric_dark_state_annihilated_by_drive() {
        let mut cfg = sym_gate(0.0);
        cfg.lambda = 0.0;
        // drive part only: remove the diagonal detuning terms
        let h = internal_hamiltonian(&cfg).unwrap()
            + ketbra(A2, A2) * C64::new(cfg.delta, 0.0)
            - ketbra(ZERO, ZERO) * C64::new(cfg.delta_g, 0.0);
        let d = dark_state(&cfg).unwrap();
        let image = h.dot(&d);
        assert!(image.iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn dark_state_components() {
        let asym = dark_state(&asym_gate(0.05)).unwrap();
        let s3 = 1.0 / 3.0f64.sqrt();
        for (i, expect) in [(A2, 0.0), (PLUS1, s3), (ZERO, s3), (MINUS1, -s3)] {
            assert_abs_diff_eq!(asym[i].re, expect, epsilon = 1e-15);
        }
        let sym = dark_state(&sym_gate(0.05)).unwrap();
        let s2 = 1.0 / 2.0f64.sqrt();
        for (i, expect) in [(A2, 0.0), (PLUS1, s2), (ZERO, 0.0), (MINUS1, -s2)] {
            assert_abs_diff_eq!(sym[i].re, expect, epsilon = 1e-15);
        }
        assert!(dark_state(&SchemeConfig::stark_baseline(0.1, 2.0, 5.0)).is_err());
    }

    #[test]
    fn symmetric_effective_equals_bare() {
        let space = HilbertSpace::new(6).unwrap();
        let cfg = sym_gate(0.1);
        let bare = bare_hamiltonian(&cfg, &space).unwrap();
        let eff = effective_hamiltonian(&cfg, &space).unwrap();
        let diff = &bare - &eff;
        assert!(max_abs(&diff) <= 1e-12 * max_abs(&bare));
    }

    #[test]
    fn asymmetric_effective_differs_by_residual_pattern() {
        let space = HilbertSpace::new(6).unwrap();
        let cfg = asym_gate(0.1);
        let bare = bare_hamiltonian(&cfg, &space).unwrap();
        let eff = effective_hamiltonian(&cfg, &space).unwrap();
        let diff = &bare - &eff;

        // expected residual: λ(a+a†) ⊗ [ (|Y⟩⟨Y| − |b⟩⟨b|)/2 + (σx^{b,Y})/√12 ]
        let (_, b, y) = asymmetric_dressed_states();
        let x = annihilation(6).unwrap() + creation(6).unwrap();
        let internal = (outer(&y, &y) - outer(&b, &b)) * re(0.5)
            + (outer(&b, &y) + outer(&y, &b)) * re(1.0 / 12.0f64.sqrt());
        let residual = kron(&internal, &x).unwrap() * re(cfg.lambda);
        let err = &diff - &residual;
        assert!(max_abs(&err) <= 1e-12 * max_abs(&bare));
        assert!(max_abs(&diff) > 0.0);
    }

    #[test]
    fn dissipator_counts_and_structure() {
        let space = HilbertSpace::new(4).unwrap();
        let mut cfg = asym_gate(0.1);
        let diss = dissipators(&cfg, &space).unwrap();
        assert_eq!(diss.len(), 3);
        let total: f64 = diss.iter().map(|(r, _)| r).sum();
        assert_abs_diff_eq!(total, cfg.gamma, epsilon = 1e-12);

        cfg.gamma_k = 1e-3;
        let diss = dissipators(&cfg, &space).unwrap();
        assert_eq!(diss.len(), 4, "zero-temperature case drops b†");

        cfg.n_thermal = 2.0;
        let diss = dissipators(&cfg, &space).unwrap();
        assert_eq!(diss.len(), 5);

        // every jump has a single nonzero internal block, aligned with either
        // an internal decay or a phonon ladder operator
        for (_, jump) in &diss {
            let mut blocks = std::collections::HashSet::new();
            for ((r, c), v) in jump.indexed_iter() {
                if v.norm() > 0.0 {
                    blocks.insert((r / space.fock_dim, c / space.fock_dim));
                }
            }
            let internal_blocks: Vec<_> =
                blocks.iter().filter(|(r, c)| r != c).collect();
            assert!(
                internal_blocks.len() <= 1 || blocks.iter().all(|(r, c)| r == c),
                "jump operator must live in a single internal block"
            );
        }
    }

    #[test]
    fn ansatz_zeroth_order_limit() {
        let space = HilbertSpace::new(4).unwrap();
        for cfg in [asym_gate(0.0), sym_gate(0.0)] {
            let v = ansatz_steady_state(&cfg, &space).unwrap();
            let dark = dark_state(&cfg).unwrap();
            for j in 0..4 {
                assert_abs_diff_eq!(v[space.index(j, 0)].re, dark[j].re, epsilon = 1e-15);
                for n in 1..space.fock_dim {
                    assert_abs_diff_eq!(v[space.index(j, n)].norm(), 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn ansatz_first_order_amplitudes() {
        let space = HilbertSpace::new(4).unwrap();
        let cfg = asym_gate(0.1);
        let v = ansatz_steady_state(&cfg, &space).unwrap();
        let (_, b, y) = asymmetric_dressed_states();
        let comp = |state: &CVector| -> C64 {
            (0..4)
                .map(|j| state[j].conj() * v[space.index(j, 1)])
                .sum()
        };
        let cb = comp(&b);
        let cy = comp(&y);
        assert_abs_diff_eq!((cb / cy).re, -1.0 / 3.0f64.sqrt(), epsilon = 1e-12);

        let cfg = sym_gate(0.1);
        let v = ansatz_steady_state(&cfg, &space).unwrap();
        let expected = -2.0f64.sqrt() * cfg.eta() / cfg.omega_g;
        let norm = (1.0 + expected * expected).sqrt();
        assert_abs_diff_eq!(
            v[space.index(ZERO, 1)].re,
            expected / norm,
            epsilon = 1e-12
        );

        let mut bad = sym_gate(0.1);
        bad.omega_g = 0.0;
        assert!(ansatz_steady_state(&bad, &space).is_err());
    }

    #[test]
    fn gate_point_residual_vanishes_at_gate() {
        assert_abs_diff_eq!(gate_point_residual(&asym_gate(0.1)).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gate_point_residual(&sym_gate(0.1)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gate_point_residual_matches_closed_forms() {
        // asymmetric with Ω_g = ω_k: √(3/2)·η·(4/3 − 1) ≈ 0.020412 for η = 0.05
        let mut cfg = SchemeConfig::asymmetric(0.05, 2.0, 1.0, 0.0, 0.5, 5.0);
        cfg.delta_plus = cfg.delta_minus - cfg.omega_g / 2.0;
        let r = gate_point_residual(&cfg).unwrap();
        let expect = (1.5f64).sqrt() * 0.05 * (4.0 / 3.0 - 1.0);
        assert_abs_diff_eq!(r, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.020412, epsilon = 5e-7);

        // symmetric detuned off the gate point
        let cfg = SchemeConfig::symmetric(0.08, 2.0, 2.0, 1.0, -0.7, 5.0);
        let r = gate_point_residual(&cfg).unwrap();
        let expect = -(2.0f64.sqrt() * cfg.eta() / cfg.omega_g) * (1.0 + cfg.delta_g);
        assert_abs_diff_eq!(r, expect, epsilon = 1e-12);
    }

    #[test]
    fn leakage_identity_is_exact_for_effective_hamiltonian() {
        // H_eff|ansatz⟩ = residual·|leak⟩ exactly; the O(η²) pieces live only
        // in the bare Hamiltonian's residual couplings.
        let space = HilbertSpace::new(5).unwrap();
        for cfg in [
            SchemeConfig::asymmetric(0.08, 2.0, 1.1, 0.5 - 0.55, 0.5, 5.0),
            SchemeConfig::symmetric(0.08, 2.0, 2.0, 1.0, -0.6, 5.0),
        ] {
            let h = effective_hamiltonian(&cfg, &space).unwrap();
            let phi = ansatz_unnormalized(&cfg, &space).unwrap();
            let leak = leakage_ket(&cfg, &space).unwrap();
            let coeff = gate_point_residual(&cfg).unwrap();
            let image = h.dot(&phi);
            let remainder = &image - &(&leak * re(coeff));
            let worst = remainder.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(worst <= 1e-12, "worst remainder {worst}");
        }
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = asym_gate(0.1);
        cfg.branching = [0.5, 0.5, 0.5];
        assert!(cfg.validate().is_err());
        let mut cfg = asym_gate(0.1);
        cfg.gamma = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = asym_gate(0.1);
        cfg.fock_dim = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = SchemeConfig::eit_baseline(0.1, 2.0, 5.0);
        cfg.omega_g = 0.3;
        assert!(cfg.validate().is_err());
    }
}
