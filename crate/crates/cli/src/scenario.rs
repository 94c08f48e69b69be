//! Scenario files: JSON descriptions of one cooling run, either in SI units
//! or directly in trap-frequency units, plus the run plan (grids, horizons,
//! output paths). SI quantities are plain (non-angular) frequencies in Hz;
//! internally everything is expressed in units of ω_k.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use phonon_chill::constants::{DIAMOND_DENSITY, G_E, HBAR, MU_B};
use phonon_chill::cooling::thermal_occupation;
use phonon_chill::scheme::{SchemeConfig, SchemeKind, DEFAULT_FOCK_DIM};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub si: Option<SiBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimensionless: Option<DimensionlessBlock>,
    #[serde(default)]
    pub run: RunPlan,
}

/// Scheme parameters in SI units. Frequencies are ν = ω/2π in Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiBlock {
    pub scheme: String,
    pub omega_k_hz: f64,
    /// Spin–phonon coupling, either given directly…
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hz: Option<f64>,
    /// …or derived from a magnetic gradient and the particle size/mass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnetic_gradient_t_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    pub rabi_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_mw_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_plus_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_minus_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_g_hz: Option<f64>,
    pub gamma_hz: f64,
    pub temperature_k: f64,
    pub quality_factor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branching: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_dim: Option<usize>,
}

/// Scheme parameters already in units of ω_k.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessBlock {
    pub scheme: String,
    pub lambda: f64,
    pub omega: f64,
    #[serde(default)]
    pub omega_g: f64,
    #[serde(default)]
    pub delta_plus: f64,
    #[serde(default)]
    pub delta_minus: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub delta_g: f64,
    pub gamma: f64,
    #[serde(default)]
    pub gamma_k: f64,
    #[serde(default)]
    pub n_thermal: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branching: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_dim: Option<usize>,
}

/// Command parameters; CLI flags override these.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunPlan {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_steps: Option<usize>,
    /// Horizon in units of 1/ω_k.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_dim: Option<usize>,
    /// Parameter name for `robust`: omega_g | delta_g | omega.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviations: Option<Vec<f64>>,
}

pub fn parse_kind(name: &str) -> Result<SchemeKind, CliError> {
    match name {
        "asymmetric" => Ok(SchemeKind::Asymmetric),
        "symmetric" => Ok(SchemeKind::Symmetric),
        "eit-baseline" => Ok(SchemeKind::EitBaseline),
        "stark-baseline" => Ok(SchemeKind::StarkBaseline),
        other => Err(CliError::Config(format!(
            "unknown scheme `{other}` (expected asymmetric, symmetric, eit-baseline or stark-baseline)"
        ))),
    }
}

/// Derived quantities of an SI conversion, kept for provenance output.
#[derive(Debug, Clone, Serialize)]
pub struct SiDerived {
    pub omega_k_rad_per_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_point_m: Option<f64>,
    pub lambda_hz: f64,
    pub gamma_k_rad_per_s: f64,
    pub n_thermal: f64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))?;
        scenario.check_blocks()?;
        Ok(scenario)
    }

    fn check_blocks(&self) -> Result<(), CliError> {
        match (&self.si, &self.dimensionless) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(CliError::Config(
                "scenario must contain exactly one of the `si` or `dimensionless` blocks".into(),
            )),
        }
    }

    /// Resolve to a validated `SchemeConfig` in units of ω_k.
    pub fn to_config(&self) -> Result<SchemeConfig, CliError> {
        let (cfg, _) = self.to_config_with_derived()?;
        Ok(cfg)
    }

    pub fn to_config_with_derived(&self) -> Result<(SchemeConfig, Option<SiDerived>), CliError> {
        self.check_blocks()?;
        let (mut cfg, derived) = if let Some(si) = &self.si {
            let (cfg, derived) = si_to_internal(si)?;
            (cfg, Some(derived))
        } else {
            (dimensionless_to_internal(self.dimensionless.as_ref().unwrap())?, None)
        };
        if let Some(fock) = self.run.fock_dim {
            cfg.fock_dim = fock;
        }
        cfg.validate().map_err(CliError::Engine)?;
        Ok((cfg, derived))
    }
}

fn dimensionless_to_internal(block: &DimensionlessBlock) -> Result<SchemeConfig, CliError> {
    let kind = parse_kind(&block.scheme)?;
    let mut cfg = SchemeConfig {
        kind,
        omega_k: 1.0,
        lambda: block.lambda,
        omega: block.omega,
        omega_g: block.omega_g,
        delta_plus: block.delta_plus,
        delta_minus: block.delta_minus,
        delta: block.delta,
        delta_g: block.delta_g,
        gamma: block.gamma,
        branching: block.branching.unwrap_or([1.0 / 3.0; 3]),
        gamma_k: block.gamma_k,
        n_thermal: block.n_thermal,
        fock_dim: block.fock_dim.unwrap_or(DEFAULT_FOCK_DIM),
    };
    if block.branching.is_none() {
        cfg.branching = default_branching(kind);
    }
    Ok(cfg)
}

fn default_branching(kind: SchemeKind) -> [f64; 3] {
    match kind {
        SchemeKind::Asymmetric | SchemeKind::Symmetric => [1.0 / 3.0; 3],
        SchemeKind::EitBaseline => [0.5, 0.0, 0.5],
        SchemeKind::StarkBaseline => [0.5, 0.5, 0.0],
    }
}

/// Convert an SI block to trap-frequency units:
/// z₀ = √(ħ/2Mω_k), λ = gₑμ_B B′(0) z₀ / ħ, γ_k = ω_k/Q, N = N(ω_k, T).
pub fn si_to_internal(si: &SiBlock) -> Result<(SchemeConfig, SiDerived), CliError> {
    let kind = parse_kind(&si.scheme)?;
    if !(si.omega_k_hz > 0.0) {
        return Err(CliError::Config("omega_k_hz must be positive".into()));
    }
    if !(si.quality_factor > 0.0) {
        return Err(CliError::Config("quality_factor must be positive".into()));
    }
    let omega_k_rad = TAU * si.omega_k_hz;

    let mass = match (si.mass_kg, si.diameter_m) {
        (Some(m), _) if m > 0.0 => Some(m),
        (None, Some(d)) if d > 0.0 => {
            let r = d / 2.0;
            Some(DIAMOND_DENSITY * 4.0 / 3.0 * std::f64::consts::PI * r * r * r)
        }
        (None, None) => None,
        _ => return Err(CliError::Config("mass or diameter must be positive".into())),
    };

    let (lambda_hz, zero_point) = match (si.lambda_hz, si.magnetic_gradient_t_per_m) {
        (Some(l), None) => (l, mass.map(|m| (HBAR / (2.0 * m * omega_k_rad)).sqrt())),
        (None, Some(grad)) => {
            let m = mass.ok_or_else(|| {
                CliError::Config(
                    "magnetic-gradient coupling needs mass_kg or diameter_m".into(),
                )
            })?;
            let z0 = (HBAR / (2.0 * m * omega_k_rad)).sqrt();
            let lambda_rad = G_E * MU_B * grad * z0 / HBAR;
            (lambda_rad / TAU, Some(z0))
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either lambda_hz or magnetic_gradient_t_per_m, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of lambda_hz or magnetic_gradient_t_per_m is required".into(),
            ))
        }
    };

    let unit = si.omega_k_hz; // ν-ratios equal ω-ratios
    let need = |v: Option<f64>, name: &str| -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Config(format!("{name} is required for scheme `{}`", si.scheme)))
    };

    let mut cfg = SchemeConfig {
        kind,
        omega_k: 1.0,
        lambda: lambda_hz / unit,
        omega: si.rabi_hz / unit,
        omega_g: si.rabi_mw_hz.unwrap_or(0.0) / unit,
        delta_plus: 0.0,
        delta_minus: 0.0,
        delta: 0.0,
        delta_g: 0.0,
        gamma: si.gamma_hz / unit,
        branching: si.branching.unwrap_or(default_branching(kind)),
        gamma_k: 1.0 / si.quality_factor,
        n_thermal: thermal_occupation(omega_k_rad, si.temperature_k),
        fock_dim: si.fock_dim.unwrap_or(DEFAULT_FOCK_DIM),
    };
    match kind {
        SchemeKind::Asymmetric | SchemeKind::EitBaseline => {
            cfg.delta_minus = need(si.delta_minus_hz, "delta_minus_hz")? / unit;
            cfg.delta_plus = need(si.delta_plus_hz, "delta_plus_hz")? / unit;
        }
        SchemeKind::Symmetric | SchemeKind::StarkBaseline => {
            cfg.delta = need(si.delta_hz, "delta_hz")? / unit;
            cfg.delta_g = need(si.delta_g_hz, "delta_g_hz")? / unit;
        }
    }
    cfg.validate().map_err(CliError::Engine)?;
    let derived = SiDerived {
        omega_k_rad_per_s: omega_k_rad,
        mass_kg: mass,
        zero_point_m: zero_point,
        lambda_hz,
        gamma_k_rad_per_s: omega_k_rad / si.quality_factor,
        n_thermal: cfg.n_thermal,
    };
    Ok((cfg, derived))
}

/// Reconstruct the SI frequencies of a config given the trap frequency;
/// inverse of [`si_to_internal`] up to the λ-derivation route.
pub fn internal_to_si(cfg: &SchemeConfig, omega_k_hz: f64) -> SiBlock {
    SiBlock {
        scheme: cfg.kind.label().to_string(),
        omega_k_hz,
        lambda_hz: Some(cfg.lambda * omega_k_hz),
        magnetic_gradient_t_per_m: None,
        diameter_m: None,
        mass_kg: None,
        rabi_hz: cfg.omega * omega_k_hz,
        rabi_mw_hz: Some(cfg.omega_g * omega_k_hz),
        delta_plus_hz: Some(cfg.delta_plus * omega_k_hz),
        delta_minus_hz: Some(cfg.delta_minus * omega_k_hz),
        delta_hz: Some(cfg.delta * omega_k_hz),
        delta_g_hz: Some(cfg.delta_g * omega_k_hz),
        gamma_hz: cfg.gamma * omega_k_hz,
        temperature_k: 0.0,
        quality_factor: if cfg.gamma_k > 0.0 { 1.0 / cfg.gamma_k } else { f64::INFINITY },
        branching: Some(cfg.branching),
        fock_dim: Some(cfg.fock_dim),
    }
}

pub const PRESET_NAMES: [&str; 2] = ["levitated", "cantilever"];

/// Experimental-feasibility presets.
///
/// `levitated`: nano-diamond in an optical trap, symmetric scheme at its
/// gate point, room-temperature bath, run over 100 µs.
/// `cantilever`: diamond on a cantilever, asymmetric scheme at its gate
/// point and peak detuning, 20 mK bath, run over 90 µs.
pub fn preset(name: &str) -> Result<Scenario, CliError> {
    match name {
        "levitated" => {
            let omega_k_hz = 500e3;
            Ok(Scenario {
                si: Some(SiBlock {
                    scheme: "symmetric".into(),
                    omega_k_hz,
                    lambda_hz: Some(50e3),
                    magnetic_gradient_t_per_m: None,
                    diameter_m: None,
                    mass_kg: None,
                    rabi_hz: 1.5e6,
                    rabi_mw_hz: Some(2.0 * omega_k_hz),
                    delta_plus_hz: None,
                    delta_minus_hz: None,
                    // laser-dressed level at +ω_k: Δ = (Ω² − 2ω_k²)/(2ω_k)
                    delta_hz: Some((1.5e6 * 1.5e6 / omega_k_hz - 2.0 * omega_k_hz) / 2.0),
                    delta_g_hz: Some(-omega_k_hz),
                    gamma_hz: 15e6,
                    temperature_k: 300.0,
                    quality_factor: 1e10,
                    branching: None,
                    fock_dim: Some(12),
                }),
                dimensionless: None,
                run: RunPlan {
                    t_final: Some(TAU * omega_k_hz * 100e-6),
                    n0: Some(1.0),
                    ..RunPlan::default()
                },
            })
        }
        "cantilever" => {
            let omega_k_hz = 8e6;
            let omega_g_hz = 4.0 / 3.0 * omega_k_hz;
            // peak cooling detuning Δ₋ = 3Ω²/(7ω_k) − ω_k
            let delta_minus_hz = 3.0 * 40e6 * 40e6 / (7.0 * omega_k_hz) - omega_k_hz;
            Ok(Scenario {
                si: Some(SiBlock {
                    scheme: "asymmetric".into(),
                    omega_k_hz,
                    lambda_hz: Some(500e3),
                    magnetic_gradient_t_per_m: None,
                    diameter_m: None,
                    mass_kg: None,
                    rabi_hz: 40e6,
                    rabi_mw_hz: Some(omega_g_hz),
                    delta_plus_hz: Some(delta_minus_hz - omega_g_hz / 2.0),
                    delta_minus_hz: Some(delta_minus_hz),
                    delta_hz: None,
                    delta_g_hz: None,
                    gamma_hz: 15e6,
                    temperature_k: 0.020,
                    quality_factor: 1e6,
                    branching: None,
                    fock_dim: Some(10),
                }),
                dimensionless: None,
                run: RunPlan {
                    t_final: Some(TAU * omega_k_hz * 90e-6),
                    n0: Some(1.0),
                    ..RunPlan::default()
                },
            })
        }
        other => Err(CliError::Config(format!(
            "unknown preset `{other}`; available presets: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
