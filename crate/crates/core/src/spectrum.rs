//! Force-fluctuation spectrum S(ω) of the internal system and the
//! heating/cooling coefficients A± = 2 Re S(∓ω_k).
//!
//! S(ω) = ∫₀^∞ dt e^{iωt} ⟨δf(t) δf(0)⟩_ss with f = λσ_z′ in frequency
//! units, evaluated by the quantum regression theorem on the phonon-free
//! internal system (the standard leading-order sideband treatment): the
//! correlation evolves under the internal Liouvillian, so
//! S(ω) = tr[ δf · (−L − iω)⁻¹ (δf ρ_ss) ], one dense resolvent solve per
//! frequency. Baseline kinds run on their active three-level sector so the
//! decoupled spectator level cannot fake a degenerate kernel.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lindblad::{devec_row_major, liouvillian_matrix, vec_row_major};
use crate::operators::{
    dagger, frobenius_norm, kernel_is_degenerate, null_vector, trace, CMatrix, CVector,
    LuFactors, KERNEL_TOL,
};
use crate::scheme::{
    asymmetric_dressed_states, internal_hamiltonian, ketbra, sigma_z_prime, SchemeConfig,
    SchemeKind, A2, MINUS1, PLUS1, ZERO,
};

/// Global normalization of S(ω). With f = λσ_z′ in frequency units the
/// regression-theorem spectrum reproduces the closed-form peak coefficients
/// (inverse-square law and square law) with no rescaling, so the calibration
/// constant is exactly one. It is kept explicit so the convention is pinned
/// in a single place.
pub const SPECTRUM_CALIBRATION: f64 = 1.0;

/// Residual tolerance (relative to the right-hand side) above which a
/// resolvent solve is reported as a per-point failure.
const RESOLVENT_RESIDUAL_TOL: f64 = 1e-8;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Force operator f = λσ_z′ = λ(|+1⟩⟨+1| − |−1⟩⟨−1|) in the bare internal
/// basis. The dressed matrix elements ⟨d|f|b⟩ = λ/√2, ⟨d|f|Y⟩ = λ/√6 and
/// ⟨B|f|D⟩ = λ are the two cooling forces of the schemes.
pub fn force_operator(cfg: &SchemeConfig) -> CMatrix {
    sigma_z_prime() * re(cfg.lambda)
}

/// Internal levels that participate in each scheme's dynamics.
fn active_levels(kind: SchemeKind) -> Vec<usize> {
    match kind {
        SchemeKind::Asymmetric | SchemeKind::Symmetric => vec![A2, PLUS1, ZERO, MINUS1],
        SchemeKind::EitBaseline => vec![A2, PLUS1, MINUS1],
        SchemeKind::StarkBaseline => vec![A2, PLUS1, ZERO],
    }
}

fn restrict(m: &CMatrix, levels: &[usize]) -> CMatrix {
    let n = levels.len();
    Array2::from_shape_fn((n, n), |(i, j)| m[[levels[i], levels[j]]])
}

/// Internal (phonon-free) system restricted to its active levels.
struct InternalSystem {
    levels: Vec<usize>,
    liouvillian: CMatrix,
    rho_ss: CMatrix,
}

impl InternalSystem {
    fn build(cfg: &SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let levels = active_levels(cfg.kind);
        let h = restrict(&internal_hamiltonian(cfg)?, &levels);
        let mut diss = Vec::new();
        for (slot, target) in [(0usize, PLUS1), (1, ZERO), (2, MINUS1)] {
            let rate = cfg.branching[slot] * cfg.gamma;
            if rate == 0.0 {
                continue;
            }
            if !levels.contains(&target) {
                return Err(Error::InvalidConfig(format!(
                    "decay into masked level {target} with nonzero rate"
                )));
            }
            diss.push((rate, restrict(&ketbra(target, A2), &levels)));
        }
        let liouvillian = liouvillian_matrix(&h, &diss)?;
        let v = null_vector(&liouvillian, KERNEL_TOL)?;
        if kernel_is_degenerate(&liouvillian, KERNEL_TOL, &v) {
            return Err(Error::DegenerateKernel);
        }
        let raw = devec_row_major(&v, levels.len());
        let herm = (&raw + &dagger(&raw)) * re(0.5);
        let tr = trace(&herm);
        if tr.norm() < 1e-8 * frobenius_norm(&herm) {
            return Err(Error::DegenerateKernel);
        }
        let rho_ss = herm / tr;
        Ok(Self {
            levels,
            liouvillian,
            rho_ss,
        })
    }

    fn delta_force(&self, cfg: &SchemeConfig) -> CMatrix {
        self.delta_of(&restrict(&force_operator(cfg), &self.levels))
    }

    /// δa = a − ⟨a⟩_ss · I.
    fn delta_of(&self, op: &CMatrix) -> CMatrix {
        let avg: C64 = (op.dot(&self.rho_ss)).diag().sum();
        let ident: CMatrix = Array2::eye(op.nrows());
        op - &(ident * avg)
    }

    /// One-sided transform tr[left · (−L − iω)⁻¹ (right · ρ_ss)]. Returns
    /// None when the solve fails its residual check (undamped ω on the
    /// generator spectrum). `ref_scale` sets the physical magnitude against
    /// which the residual is judged; right-hand sides that are pure roundoff
    /// relative to it are accepted as (numerically) zero sources.
    fn resolvent_point_scaled(
        &self,
        omega: f64,
        left: &CMatrix,
        right: &CMatrix,
        ref_scale: f64,
    ) -> Option<C64> {
        let n = self.levels.len();
        let d2 = n * n;
        let rhs = vec_row_major(&right.dot(&self.rho_ss));
        let mut a = self.liouvillian.clone() * re(-1.0);
        for i in 0..d2 {
            a[[i, i]] -= C64::new(0.0, omega);
        }
        // At ω = 0 the matrix is singular (steady-state kernel) but the
        // system is consistent: tr[right·ρ_ss] = 0 after the δ-subtraction,
        // so the pivot-clamped solve returns a valid particular solution, and
        // any kernel admixture vec(ρ_ss) carries no weight in the trace.
        let lu = LuFactors::factor(&a, true).ok()?;
        let x = lu.solve(&rhs).ok()?;
        let residual = &a.dot(&x) - &rhs;
        let rnorm = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let bnorm = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if rnorm > RESOLVENT_RESIDUAL_TOL * bnorm.max(ref_scale).max(f64::MIN_POSITIVE) {
            return None;
        }
        let xmat = devec_row_major(&x, n);
        let value: C64 = left.dot(&xmat).diag().sum();
        Some(value * re(SPECTRUM_CALIBRATION))
    }

    fn resolvent_point(&self, omega: f64, left: &CMatrix, right: &CMatrix) -> Option<C64> {
        self.resolvent_point_scaled(omega, left, right, 0.0)
    }
}

/// Steady state of the internal (phonon-free) system, embedded back into the
/// full 4-level basis with zeros on any masked level.
pub fn internal_steady_state(cfg: &SchemeConfig) -> Result<CMatrix> {
    let sys = InternalSystem::build(cfg)?;
    let mut rho: CMatrix = Array2::zeros((4, 4));
    for (i, &li) in sys.levels.iter().enumerate() {
        for (j, &lj) in sys.levels.iter().enumerate() {
            rho[[li, lj]] = sys.rho_ss[[i, j]];
        }
    }
    Ok(rho)
}

/// Fluctuation spectrum on a frequency grid, with the heating and cooling
/// coefficients extracted at ∓ω_k.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Frequency grid in units of ω_k.
    pub omega: Vec<f64>,
    /// S(ω) per grid point; None marks a failed resolvent solve.
    pub values: Vec<Option<C64>>,
    /// A₊ = 2 Re S(−ω_k).
    pub a_plus: f64,
    /// A₋ = 2 Re S(+ω_k).
    pub a_minus: f64,
    /// EIT / Stark / interference split, when requested.
    pub components: Option<SpectrumComponents>,
}

/// Three-part split of the asymmetric spectrum by force channel.
#[derive(Debug, Clone)]
pub struct SpectrumComponents {
    pub eit: Vec<Option<C64>>,
    pub stark: Vec<Option<C64>>,
    pub interference: Vec<Option<C64>>,
}

/// Evaluate S(ω) over `grid` by per-point resolvent solves.
pub fn spectrum(cfg: &SchemeConfig, grid: &[f64]) -> Result<SpectrumResult> {
    let sys = InternalSystem::build(cfg)?;
    let df = sys.delta_force(cfg);
    let values: Vec<Option<C64>> = grid
        .iter()
        .map(|&w| sys.resolvent_point(w, &df, &df))
        .collect();
    let (a_plus, a_minus) = coefficients_from(&sys, cfg)?;
    Ok(SpectrumResult {
        omega: grid.to_vec(),
        values,
        a_plus,
        a_minus,
        components: None,
    })
}

fn coefficients_from(sys: &InternalSystem, cfg: &SchemeConfig) -> Result<(f64, f64)> {
    let df = sys.delta_force(cfg);
    let sm = sys
        .resolvent_point(-cfg.omega_k, &df, &df)
        .ok_or(Error::SingularPoint { omega: -cfg.omega_k })?;
    let sp = sys
        .resolvent_point(cfg.omega_k, &df, &df)
        .ok_or(Error::SingularPoint { omega: cfg.omega_k })?;
    Ok((2.0 * sm.re, 2.0 * sp.re))
}

/// Heating and cooling coefficients (A₊, A₋) = 2 Re S(∓ω_k).
pub fn coefficients(cfg: &SchemeConfig) -> Result<(f64, f64)> {
    let sys = InternalSystem::build(cfg)?;
    coefficients_from(&sys, cfg)
}

/// Closed-form heating coefficient of the asymmetric scheme:
/// A₊ = Γλ²Ω²(3Ω_g − 4ω_k)² / (12|M(−ω_k)|²), with
/// M(ω) = (−3Ω²/4 + 2Δω + 2ω²)(Ω_g + ω) − ωΩ²/4 + iΓω(ω + Ω_g)
/// and Δ the laser detuning Δ₋.
pub fn analytic_heating(cfg: &SchemeConfig) -> Result<f64> {
    if cfg.kind != SchemeKind::Asymmetric {
        return Err(Error::UnsupportedKind {
            op: "analytic_heating",
            kind: cfg.kind.label(),
        });
    }
    let m = m_function(-cfg.omega_k, cfg);
    if m.norm() < 1e-12 {
        return Err(Error::SingularPoint { omega: -cfg.omega_k });
    }
    let lambda2 = cfg.lambda * cfg.lambda;
    let omega2 = cfg.omega * cfg.omega;
    let gate = 3.0 * cfg.omega_g - 4.0 * cfg.omega_k;
    Ok(cfg.gamma * lambda2 * omega2 * gate * gate / (12.0 * m.norm_sqr()))
}

/// M(ω) of the asymmetric closed forms.
pub fn m_function(omega: f64, cfg: &SchemeConfig) -> C64 {
    let delta = cfg.delta_minus;
    let om2 = cfg.omega * cfg.omega;
    let real = (-3.0 * om2 / 4.0 + 2.0 * delta * omega + 2.0 * omega * omega)
        * (cfg.omega_g + omega)
        - omega * om2 / 4.0;
    let imag = cfg.gamma * omega * (omega + cfg.omega_g);
    C64::new(real, imag)
}

/// A scheme's peak cooling coefficient and the operating point it is
/// attained at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingPeak {
    pub a_minus: f64,
    pub operating_point: OperatingPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    /// Asymmetric scheme: laser detuning Δ = 3Ω²/(7ω_k) − ω_k.
    LaserDetuning(f64),
    /// Symmetric scheme: microwave settings Ω_g = 2ω_k, Δ_g = −ω_k.
    MicrowaveGate { omega_g: f64, delta_g: f64 },
}

/// Printed peak values: A₋ = 48λ²Ω²/(49Γω_k²) for the asymmetric scheme
/// (square law in Ω) and A₋ = 2Γλ²/Ω² for the symmetric one (inverse
/// square law).
pub fn analytic_cooling_peak(cfg: &SchemeConfig) -> Result<CoolingPeak> {
    let l2 = cfg.lambda * cfg.lambda;
    let o2 = cfg.omega * cfg.omega;
    let wk = cfg.omega_k;
    match cfg.kind {
        SchemeKind::Asymmetric => Ok(CoolingPeak {
            a_minus: 48.0 * l2 * o2 / (49.0 * cfg.gamma * wk * wk),
            operating_point: OperatingPoint::LaserDetuning(3.0 * o2 / (7.0 * wk) - wk),
        }),
        SchemeKind::Symmetric => Ok(CoolingPeak {
            a_minus: 2.0 * cfg.gamma * l2 / o2,
            operating_point: OperatingPoint::MicrowaveGate {
                omega_g: 2.0 * wk,
                delta_g: -wk,
            },
        }),
        other => Err(Error::UnsupportedKind {
            op: "analytic_cooling_peak",
            kind: other.label(),
        }),
    }
}

/// Split of the asymmetric force by dressed channel:
/// f_EIT = (λ/√2)(|d⟩⟨b| + |b⟩⟨d|), f_Stark = (λ/√6)(|d⟩⟨Y| + |Y⟩⟨d|),
/// plus the residual diagonal/b–Y remainder that completes f = λσ_z′.
pub fn force_split(cfg: &SchemeConfig) -> Result<[CMatrix; 3]> {
    if cfg.kind != SchemeKind::Asymmetric {
        return Err(Error::UnsupportedKind {
            op: "force_split",
            kind: cfg.kind.label(),
        });
    }
    let (d, b, y) = asymmetric_dressed_states();
    let outer = |u: &CVector, v: &CVector| -> CMatrix {
        Array2::from_shape_fn((4, 4), |(i, j)| u[i] * v[j].conj())
    };
    let f_eit = (outer(&d, &b) + outer(&b, &d)) * re(cfg.lambda / 2.0f64.sqrt());
    let f_stark = (outer(&d, &y) + outer(&y, &d)) * re(cfg.lambda / 6.0f64.sqrt());
    let f_rest = &force_operator(cfg) - &f_eit - &f_stark;
    Ok([f_eit, f_stark, f_rest])
}

/// Spectrum with its EIT/Stark/interference decomposition. The three parts
/// are cross-correlation spectra of the split forces and sum to the total
/// identically (bilinearity of the regression transform).
pub fn spectrum_with_components(cfg: &SchemeConfig, grid: &[f64]) -> Result<SpectrumResult> {
    let sys = InternalSystem::build(cfg)?;
    let parts = force_split(cfg)?;
    let dparts: Vec<CMatrix> = parts
        .iter()
        .map(|p| sys.delta_of(&restrict(p, &sys.levels)))
        .collect();
    let df = sys.delta_force(cfg);
    let ref_scale = {
        let rhs = df.dot(&sys.rho_ss);
        rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    };

    let mut values = Vec::with_capacity(grid.len());
    let mut eit = Vec::with_capacity(grid.len());
    let mut stark = Vec::with_capacity(grid.len());
    let mut interference = Vec::with_capacity(grid.len());
    for &w in grid {
        let mut table = [[None::<C64>; 3]; 3];
        let mut ok = true;
        for (q, dq) in dparts.iter().enumerate() {
            for (p, dp) in dparts.iter().enumerate() {
                match sys.resolvent_point_scaled(w, dp, dq, ref_scale) {
                    Some(v) => table[p][q] = Some(v),
                    None => ok = false,
                }
            }
        }
        if ok {
            let get = |p: usize, q: usize| table[p][q].unwrap();
            let s_eit = get(0, 0);
            let s_stark = get(1, 1);
            let total: C64 = (0..3)
                .flat_map(|p| (0..3).map(move |q| (p, q)))
                .map(|(p, q)| get(p, q))
                .sum();
            eit.push(Some(s_eit));
            stark.push(Some(s_stark));
            interference.push(Some(total - s_eit - s_stark));
            values.push(Some(total));
        } else {
            eit.push(None);
            stark.push(None);
            interference.push(None);
            values.push(sys.resolvent_point(w, &df, &df));
        }
    }
    let (a_plus, a_minus) = coefficients_from(&sys, cfg)?;
    Ok(SpectrumResult {
        omega: grid.to_vec(),
        values,
        a_plus,
        a_minus,
        components: Some(SpectrumComponents {
            eit,
            stark,
            interference,
        }),
    })
}

/// Brute-force time-domain evaluation of S(ω) = ∫₀^T e^{iωt} C(t) dt with
/// C(t) = tr[δf e^{Lt}(δf ρ_ss)], integrated by fixed-step classical RK4 on
/// the vectorized internal state. Slow but independent of the resolvent
/// path; used as the oracle in cross-checks.
pub fn spectrum_time_domain(cfg: &SchemeConfig, omegas: &[f64]) -> Result<Vec<C64>> {
    spectrum_time_domain_of(cfg, omegas, None)
}

/// Time-domain transform of a cross correlation tr[δa e^{Lt}(δb ρ_ss)];
/// `pair = None` uses the full force on both sides.
pub fn spectrum_time_domain_of(
    cfg: &SchemeConfig,
    omegas: &[f64],
    pair: Option<(&CMatrix, &CMatrix)>,
) -> Result<Vec<C64>> {
    let sys = InternalSystem::build(cfg)?;
    let df = sys.delta_force(cfg);
    let (left, right) = match pair {
        Some((a, b)) => (
            sys.delta_of(&restrict(a, &sys.levels)),
            sys.delta_of(&restrict(b, &sys.levels)),
        ),
        None => (df.clone(), df.clone()),
    };
    let n = sys.levels.len();
    let d2 = n * n;
    let l = &sys.liouvillian;

    // stability-limited fixed step from an upper bound on the spectral radius
    let linf = (0..d2)
        .map(|i| (0..d2).map(|j| l[[i, j]].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let h = 0.25 / linf.max(1e-6);

    let corr = |x: &CVector| -> C64 {
        let xm = devec_row_major(x, n);
        left.dot(&xm).diag().sum()
    };

    let mut x = vec_row_major(&right.dot(&sys.rho_ss));
    let c0 = corr(&x).norm().max(f64::MIN_POSITIVE);
    let mut acc: Vec<C64> = vec![C64::new(0.0, 0.0); omegas.len()];
    let mut t = 0.0f64;
    let t_max = 2.0e5;
    let mut quiet_steps = 0usize;
    while t < t_max {
        let k1 = l.dot(&x);
        let x2 = &x + &(&k1 * re(h / 2.0));
        let k2 = l.dot(&x2);
        let x3 = &x + &(&k2 * re(h / 2.0));
        let k3 = l.dot(&x3);
        let x4 = &x + &(&k3 * re(h));
        let k4 = l.dot(&x4);

        let g1 = corr(&x);
        let g2 = corr(&x2);
        let g3 = corr(&x3);
        let g4 = corr(&x4);
        for (a, &w) in acc.iter_mut().zip(omegas.iter()) {
            let p1 = (C64::new(0.0, w * t)).exp();
            let ph = (C64::new(0.0, w * (t + h / 2.0))).exp();
            let p4 = (C64::new(0.0, w * (t + h))).exp();
            *a += re(h / 6.0) * (p1 * g1 + ph * (g2 + g3) * re(2.0) + p4 * g4);
        }
        x = &x + &((k1 + (k2 + k3) * re(2.0) + k4) * re(h / 6.0));
        t += h;
        if corr(&x).norm() <= 1e-12 * c0 {
            quiet_steps += 1;
            if quiet_steps > 32 {
                break;
            }
        } else {
            quiet_steps = 0;
        }
    }
    Ok(acc
        .into_iter()
        .map(|a| a * re(SPECTRUM_CALIBRATION))
        .collect())
}

/// Uniform grid over [min, max] with the exact evaluation points −ω_k, 0,
/// +ω_k inserted (deduplicated, sorted).
pub fn grid_with_exact_points(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = if steps < 2 {
        vec![min]
    } else {
        (0..steps)
            .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
            .collect()
    };
    for special in [-1.0, 0.0, 1.0] {
        if special >= min && special <= max {
            grid.push(special);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}
