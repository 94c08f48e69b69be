//! End-to-end cooling predictions: Boltzmann occupations, rate-equation
//! final phonon numbers, full-dynamics trajectories with fitted rates,
//! robustness scans and multi-scheme comparison.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, DensityMatrix, Trajectory};
use crate::operators::{kron, CMatrix, CVector};
use crate::scheme::{bare_hamiltonian, dark_state, dissipators, SchemeConfig, SchemeKind};
use crate::spectrum::{coefficients, internal_steady_state};

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Bose–Einstein occupation N(ω) = [exp(ħω/k_BT) − 1]⁻¹ for an angular
/// frequency in rad/s and a temperature in kelvin. Returns 0 at T = 0.
pub fn thermal_occupation(omega_si: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega_si / (K_B * temperature);
    1.0 / (x.exp() - 1.0)
}

/// Rate-equation steady occupation
/// ⟨n⟩_ss = [A₊ + N(ω_k)γ_k] / (W + γ_k) with W = A₋ − A₊.
pub fn rate_equation_nss(a_plus: f64, a_minus: f64, n_bath: f64, gamma_k: f64) -> Result<f64> {
    let w = a_minus - a_plus;
    if w + gamma_k <= 0.0 {
        return Err(Error::HeatingDominated { net: w + gamma_k });
    }
    Ok((a_plus + n_bath * gamma_k) / (w + gamma_k))
}

/// Thermal Fock-space density matrix with mean occupation `nbar`,
/// renormalized over the truncated basis.
pub fn thermal_state(n_f: usize, nbar: f64) -> CMatrix {
    let mut diag = vec![0.0f64; n_f];
    if nbar <= 0.0 {
        diag[0] = 1.0;
    } else {
        let ratio = nbar / (nbar + 1.0);
        let mut p = 1.0;
        for d in diag.iter_mut() {
            *d = p;
            p *= ratio;
        }
        let sum: f64 = diag.iter().sum();
        for d in diag.iter_mut() {
            *d /= sum;
        }
    }
    Array2::from_diag(&Array1::from(
        diag.into_iter().map(re).collect::<Vec<_>>(),
    ))
}

/// Internal starting state for a cooling run: the scheme's dark state where
/// one exists, the internal steady state for the Stark reduction.
pub fn initial_internal_state(cfg: &SchemeConfig) -> Result<CMatrix> {
    match cfg.kind {
        SchemeKind::Asymmetric | SchemeKind::Symmetric => {
            let d = dark_state(cfg)?;
            Ok(Array2::from_shape_fn((4, 4), |(i, j)| d[i] * d[j].conj()))
        }
        SchemeKind::EitBaseline => {
            let s2 = 2.0f64.sqrt();
            let d: CVector = Array1::from(vec![
                re(0.0),
                re(1.0 / s2),
                re(0.0),
                re(-1.0 / s2),
            ]);
            Ok(Array2::from_shape_fn((4, 4), |(i, j)| d[i] * d[j].conj()))
        }
        SchemeKind::StarkBaseline => internal_steady_state(cfg),
    }
}

/// Result of one full-dynamics cooling run.
#[derive(Debug, Clone)]
pub struct CoolingResult {
    pub trajectory: Trajectory,
    /// Exponential decay rate fitted to ⟨n(t)⟩ − n_ss over the central
    /// decay window.
    pub fitted_w: f64,
    /// Tail average of ⟨n(t)⟩.
    pub n_ss_dynamic: f64,
    /// Rate-equation prediction from the numeric A±.
    pub n_ss_rate_eq: f64,
    /// False when the decay was not exponential to within 20% fit residual.
    pub fit_ok: bool,
    /// Final population of the two highest Fock levels (truncation guard).
    pub truncation_tail: f64,
    pub scheme: SchemeConfig,
}

/// Run the full master equation from (internal state) ⊗ (thermal n₀) and fit
/// the cooling rate W.
pub fn cooling_trajectory(cfg: &SchemeConfig, n0: f64, t_final: f64) -> Result<CoolingResult> {
    cooling_trajectory_with_tol(cfg, n0, t_final, 1e-8)
}

/// [`cooling_trajectory`] with an explicit integrator tolerance.
pub fn cooling_trajectory_with_tol(
    cfg: &SchemeConfig,
    n0: f64,
    t_final: f64,
    tol: f64,
) -> Result<CoolingResult> {
    cfg.validate()?;
    if n0 < 0.0 || n0 > cfg.fock_dim as f64 / 3.0 {
        return Err(Error::InvalidConfig(format!(
            "initial occupation {n0} not representable in fock_dim {}",
            cfg.fock_dim
        )));
    }
    if !(t_final > 0.0) {
        return Err(Error::InvalidConfig("t_final must be positive".into()));
    }
    let space = cfg.space()?;
    let h = bare_hamiltonian(cfg, &space)?;
    let diss = dissipators(cfg, &space)?;
    let rho_int = initial_internal_state(cfg)?;
    let rho0 = DensityMatrix::new(space, kron(&rho_int, &thermal_state(cfg.fock_dim, n0))?)?;

    let n_samples = 400usize;
    let samples: Vec<f64> = (1..=n_samples)
        .map(|k| t_final * k as f64 / n_samples as f64)
        .collect();
    let out = evolve(&h, &diss, &rho0, &samples, tol, false)?;

    let traj = out.trajectory;
    let tail_start = traj.times.len() - (traj.times.len() / 10).max(1);
    let n_ss_dynamic =
        traj.n_phonon[tail_start..].iter().sum::<f64>() / (traj.times.len() - tail_start) as f64;

    let (a_plus, a_minus) = coefficients(cfg)?;
    let n_ss_rate_eq = match rate_equation_nss(a_plus, a_minus, cfg.n_thermal, cfg.gamma_k) {
        Ok(v) => v,
        // decoupled vibration: no optical rates at all, the occupation keeps
        // its initial (or pure-bath) value
        Err(Error::HeatingDominated { .. }) if a_plus == 0.0 && a_minus == 0.0 => {
            if cfg.gamma_k > 0.0 {
                cfg.n_thermal
            } else {
                n0
            }
        }
        Err(e) => return Err(e),
    };

    let (fitted_w, fit_ok) = fit_decay_rate(&traj.times, &traj.n_phonon, n0, n_ss_dynamic);
    let truncation_tail = out.final_state.top_fock_population();

    Ok(CoolingResult {
        trajectory: traj,
        fitted_w,
        n_ss_dynamic,
        n_ss_rate_eq,
        fit_ok,
        truncation_tail,
        scheme: cfg.clone(),
    })
}

/// Least-squares exponential fit of n(t) − n_ss on the window from the point
/// where n has dropped 10% of its total fall to where it is within 2× of the
/// tail value. Returns (W, residual_ok).
fn fit_decay_rate(times: &[f64], n: &[f64], n0: f64, n_ss: f64) -> (f64, bool) {
    let amplitude = n0 - n_ss;
    if amplitude.abs() < 1e-9 {
        // nothing decays (decoupled phonon); rate is zero by construction
        return (0.0, true);
    }
    let upper = n0 - 0.1 * amplitude;
    let floor = (2.0 * n_ss - n_ss).max(1e-3 * amplitude); // y ≤ n_ss ⇔ n ≤ 2 n_ss
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (&t, &ni) in times.iter().zip(n.iter()) {
        let y = ni - n_ss;
        if ni <= upper && y > floor {
            ts.push(t);
            logs.push(y.ln());
        }
    }
    if ts.len() < 5 {
        // fall back to the widest usable window
        ts.clear();
        logs.clear();
        for (&t, &ni) in times.iter().zip(n.iter()) {
            let y = ni - n_ss;
            if y > 1e-12 * amplitude.abs() {
                ts.push(t);
                logs.push(y.ln());
            }
        }
    }
    if ts.len() < 2 {
        return (0.0, false);
    }
    let nn = ts.len() as f64;
    let st: f64 = ts.iter().sum();
    let sl: f64 = logs.iter().sum();
    let stt: f64 = ts.iter().map(|t| t * t).sum();
    let stl: f64 = ts.iter().zip(logs.iter()).map(|(t, l)| t * l).sum();
    let denom = nn * stt - st * st;
    if denom.abs() < 1e-30 {
        return (0.0, false);
    }
    let slope = (nn * stl - st * sl) / denom;
    let intercept = (sl - slope * st) / nn;
    let mut ss = 0.0;
    for (t, l) in ts.iter().zip(logs.iter()) {
        let r = l - (intercept + slope * t);
        ss += r * r;
    }
    let rms = (ss / nn).sqrt();
    // rms of Δln y ≈ relative residual of y
    (-slope, rms <= 0.2)
}

/// Scannable control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    OmegaG,
    DeltaG,
    Omega,
}

impl ScanParameter {
    pub fn label(&self) -> &'static str {
        match self {
            ScanParameter::OmegaG => "omega_g",
            ScanParameter::DeltaG => "delta_g",
            ScanParameter::Omega => "omega",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "omega_g" => Some(Self::OmegaG),
            "delta_g" => Some(Self::DeltaG),
            "omega" => Some(Self::Omega),
            _ => None,
        }
    }
}

fn perturbed(cfg: &SchemeConfig, parameter: ScanParameter, eps: f64) -> SchemeConfig {
    let mut out = cfg.clone();
    match parameter {
        // detunings are held fixed: an amplitude fluctuation does not retune
        // the lasers, so the dark-state condition degrades with it
        ScanParameter::OmegaG => out.omega_g *= 1.0 + eps,
        ScanParameter::DeltaG => out.delta_g *= 1.0 + eps,
        ScanParameter::Omega => out.omega *= 1.0 + eps,
    }
    out
}

/// Steady occupation from the rate-equation path with numeric coefficients.
pub fn rate_equation_nss_for(cfg: &SchemeConfig) -> Result<f64> {
    let (a_plus, a_minus) = coefficients(cfg)?;
    rate_equation_nss(a_plus, a_minus, cfg.n_thermal, cfg.gamma_k)
}

/// Stark-shift-gate reduction with its laser detuning tuned for the best
/// zero-temperature floor A₊/(A₋ − A₊) by a deterministic coarse-then-fine
/// scan. The plain `SchemeConfig::stark_baseline` runs the laser resonant;
/// for scheme comparisons the tuned variant is the fair baseline.
pub fn tuned_stark_baseline(lambda: f64, omega: f64, gamma: f64) -> Result<SchemeConfig> {
    let base = SchemeConfig::stark_baseline(lambda, omega, gamma);
    let floor_at = |delta: f64| -> Option<f64> {
        let mut c = base.clone();
        c.delta = delta;
        let (a_plus, a_minus) = coefficients(&c).ok()?;
        (a_minus > a_plus).then(|| a_plus / (a_minus - a_plus))
    };
    let span = (2.0 * omega * omega).max(8.0);
    let mut best = (f64::INFINITY, 0.0);
    let mut lo = -span;
    let mut hi = span;
    for _ in 0..3 {
        let n = 81;
        for k in 0..n {
            let delta = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            if let Some(floor) = floor_at(delta) {
                if floor < best.0 {
                    best = (floor, delta);
                }
            }
        }
        let width = (hi - lo) / (n - 1) as f64;
        lo = best.1 - 2.0 * width;
        hi = best.1 + 2.0 * width;
    }
    if !best.0.is_finite() {
        return Err(Error::InvalidConfig(
            "stark baseline does not cool anywhere in the scanned detuning range".into(),
        ));
    }
    let mut cfg = base;
    cfg.delta = best.1;
    Ok(cfg)
}

/// Sensitivity of ⟨n⟩_ss to a relative deviation of one control parameter.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub parameter: ScanParameter,
    /// Relative deviations ε, symmetric about zero.
    pub deviations: Vec<f64>,
    /// δ⟨n⟩_ss(ε) = ⟨n⟩_ss(ε) − ⟨n⟩_ss(0), absolute.
    pub delta_nss: Vec<f64>,
    /// Fitted slope of log|δ⟨n⟩_ss| against log|ε|.
    pub slope: f64,
}

/// Scan ⟨n⟩_ss against relative deviations of one parameter and fit the
/// log-log scaling exponent.
pub fn robustness_scan(
    cfg: &SchemeConfig,
    parameter: ScanParameter,
    deviations: &[f64],
) -> Result<RobustnessReport> {
    if deviations.iter().any(|e| e.abs() > 0.10) {
        return Err(Error::InvalidConfig(
            "deviations must stay within ±10%".into(),
        ));
    }
    let positive = deviations.iter().filter(|e| **e > 0.0).count();
    let negative = deviations.iter().filter(|e| **e < 0.0).count();
    if positive < 5 || negative < 5 {
        return Err(Error::InvalidConfig(
            "need at least 5 deviation points per sign".into(),
        ));
    }
    for e in deviations {
        if *e != 0.0 && !deviations.iter().any(|o| (o + e).abs() < 1e-15) {
            return Err(Error::InvalidConfig(
                "deviations must be symmetric about zero".into(),
            ));
        }
    }
    let baseline = rate_equation_nss_for(cfg)?;
    let mut delta = Vec::with_capacity(deviations.len());
    for &eps in deviations {
        let n = rate_equation_nss_for(&perturbed(cfg, parameter, eps))?;
        delta.push(n - baseline);
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&eps, &d) in deviations.iter().zip(delta.iter()) {
        if eps != 0.0 && d.abs() > 0.0 {
            lx.push(eps.abs().ln());
            ly.push(d.abs().ln());
        }
    }
    let slope = linear_slope(&lx, &ly);
    Ok(RobustnessReport {
        parameter,
        deviations: deviations.to_vec(),
        delta_nss: delta,
        slope,
    })
}

fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Two-variable power-law fit of the joint response to laser and gate
/// deviations. For each pair (ε_Ω, ε_g) the response is measured relative to
/// the ε_Ω = 0 baseline at the same gate deviation, isolating the mixed
/// term; the returned exponents (p, q) fit |Δn| ∝ |ε_Ω|^p |ε_g|^q.
pub fn joint_robustness(
    cfg: &SchemeConfig,
    dev_omega: &[f64],
    dev_gate: &[f64],
) -> Result<(f64, f64)> {
    let gate_param = match cfg.kind {
        SchemeKind::Asymmetric => ScanParameter::OmegaG,
        SchemeKind::Symmetric => ScanParameter::DeltaG,
        other => {
            return Err(Error::UnsupportedKind {
                op: "joint_robustness",
                kind: other.label(),
            })
        }
    };
    let mut rows: Vec<[f64; 3]> = Vec::new(); // ln|εΩ|, ln|εg|, ln|Δn|
    for &eg in dev_gate {
        if eg == 0.0 {
            continue;
        }
        let gate_cfg = perturbed(cfg, gate_param, eg);
        let base = rate_equation_nss_for(&gate_cfg)?;
        for &ew in dev_omega {
            if ew == 0.0 {
                continue;
            }
            let n = rate_equation_nss_for(&perturbed(&gate_cfg, ScanParameter::Omega, ew))?;
            let dn = (n - base).abs();
            if dn > 0.0 {
                rows.push([ew.abs().ln(), eg.abs().ln(), dn.ln()]);
            }
        }
    }
    if rows.len() < 6 {
        return Err(Error::InvalidConfig(
            "not enough usable points for the joint fit".into(),
        ));
    }
    // least squares for ln|Δn| = c + p·ln|εΩ| + q·ln|εg|
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for row in &rows {
        let basis = [1.0, row[0], row[1]];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += basis[i] * basis[j];
            }
            atb[i] += basis[i] * row[2];
        }
    }
    let sol = solve3(ata, atb).ok_or_else(|| {
        Error::InvalidConfig("degenerate joint-fit normal equations".into())
    })?;
    Ok((sol[1], sol[2]))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for k in 0..3 {
        let mut p = k;
        for i in (k + 1)..3 {
            if a[i][k].abs() > a[p][k].abs() {
                p = i;
            }
        }
        if a[p][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in (k + 1)..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut acc = b[i];
        for j in (i + 1)..3 {
            acc -= a[i][j] * x[j];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

/// One row of a multi-scheme comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub label: String,
    pub final_n: Option<f64>,
    pub fitted_w: Option<f64>,
    pub n_ss_dynamic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Row indices ranked by final ⟨n⟩ ascending; failed rows last.
    pub ranking: Vec<usize>,
}

/// Run `cooling_trajectory` for every scheme and rank by final occupation.
/// All configurations must share ω_k, λ, Γ and the bath parameters. Row
/// failures are isolated, not fatal.
pub fn compare_schemes(cfgs: &[SchemeConfig], n0: f64, t_final: f64) -> Result<Comparison> {
    if cfgs.is_empty() {
        return Err(Error::InvalidConfig("no schemes to compare".into()));
    }
    let first = &cfgs[0];
    for cfg in cfgs {
        let shared = [
            (cfg.omega_k, first.omega_k),
            (cfg.lambda, first.lambda),
            (cfg.gamma, first.gamma),
            (cfg.gamma_k, first.gamma_k),
            (cfg.n_thermal, first.n_thermal),
        ];
        if shared.iter().any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::InvalidConfig(
                "compared schemes must share omega_k, lambda, gamma and bath parameters".into(),
            ));
        }
    }
    let results: Vec<(String, Result<CoolingResult>)> = cfgs
        .iter()
        .map(|cfg| {
            (
                cfg.kind.label().to_string(),
                cooling_trajectory(cfg, n0, t_final),
            )
        })
        .collect();
    Ok(comparison_from_results(results))
}

/// Assemble rows and the deterministic ranking from per-scheme results
/// (possibly computed concurrently by the caller, in input order).
pub fn comparison_from_results(results: Vec<(String, Result<CoolingResult>)>) -> Comparison {
    let mut rows = Vec::with_capacity(results.len());
    for (label, result) in results {
        match result {
            Ok(result) => rows.push(ComparisonRow {
                label,
                final_n: result.trajectory.n_phonon.last().copied(),
                fitted_w: Some(result.fitted_w),
                n_ss_dynamic: Some(result.n_ss_dynamic),
                error: None,
            }),
            Err(err) => rows.push(ComparisonRow {
                label,
                final_n: None,
                fitted_w: None,
                n_ss_dynamic: None,
                error: Some(err.to_string()),
            }),
        }
    }
    let mut ranking: Vec<usize> = (0..rows.len()).collect();
    ranking.sort_by(|&i, &j| match (rows[i].final_n, rows[j].final_n) {
        (Some(a), Some(b)) => a.partial_cmp(&b).unwrap().then(i.cmp(&j)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => i.cmp(&j),
    });
    Comparison { rows, ranking }
}
