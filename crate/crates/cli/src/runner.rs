//! Command implementations: each subcommand resolves the scenario to a
//! scheme configuration, runs the requested computation and writes CSV/JSON
//! artifacts into the output directory. Outputs are byte-deterministic for
//! identical inputs.

use std::path::{Path, PathBuf};

use phonon_chill::cooling::{
    comparison_from_results, cooling_trajectory_with_tol, rate_equation_nss, robustness_scan,
    CoolingResult, ScanParameter,
};
use phonon_chill::lindblad::{fidelity_with_pure, steady_state_with_horizon};
use phonon_chill::operators::trace;
use phonon_chill::scheme::{
    ansatz_steady_state, bare_hamiltonian, dissipators, SchemeConfig, SchemeKind,
};
use phonon_chill::spectrum::{
    analytic_cooling_peak, analytic_heating, coefficients, grid_with_exact_points, spectrum,
    spectrum_with_components, OperatingPoint,
};

use crate::output::{constants_json, write_json, CsvWriter};
use crate::scenario::Scenario;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Coefficients,
    Evolve,
    SteadyState,
    Robust,
    Compare,
}

/// CLI flag overrides; anything unset falls back to the scenario run plan,
/// then to built-in defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub fock_dim: Option<usize>,
    pub tol: Option<f64>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_steps: Option<usize>,
    pub t_final: Option<f64>,
    pub threads: Option<usize>,
}

struct Resolved {
    cfg: SchemeConfig,
    out_dir: PathBuf,
    tol: f64,
    grid: Vec<f64>,
    t_final: Option<f64>,
    n0: f64,
    threads: usize,
    derived: Option<crate::scenario::SiDerived>,
}

fn resolve(scenario: &Scenario, ov: &Overrides) -> Result<Resolved, CliError> {
    let (mut cfg, derived) = scenario.to_config_with_derived()?;
    if let Some(fock) = ov.fock_dim {
        cfg.fock_dim = fock;
        cfg.validate().map_err(CliError::Engine)?;
    }
    let run = &scenario.run;
    let out_dir = ov
        .out_dir
        .clone()
        .or_else(|| run.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let omega_min = ov.omega_min.or(run.omega_min).unwrap_or(-2.0);
    let omega_max = ov.omega_max.or(run.omega_max).unwrap_or(3.0);
    if omega_max <= omega_min {
        return Err(CliError::Config("omega_max must exceed omega_min".into()));
    }
    let omega_steps = ov.omega_steps.or(run.omega_steps).unwrap_or(1001);
    let threads = ov.threads.unwrap_or(1);
    if threads == 0 {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    Ok(Resolved {
        cfg,
        out_dir,
        tol: ov.tol.or(run.tol).unwrap_or(1e-8),
        grid: grid_with_exact_points(omega_min, omega_max, omega_steps),
        t_final: ov.t_final.or(run.t_final),
        n0: run.n0.unwrap_or(1.0),
        threads,
        derived,
    })
}

fn config_json(cfg: &SchemeConfig, derived: &Option<crate::scenario::SiDerived>) -> serde_json::Value {
    let mut value = serde_json::json!({
        "scheme": cfg.kind.label(),
        "lambda": cfg.lambda,
        "omega": cfg.omega,
        "omega_g": cfg.omega_g,
        "delta_plus": cfg.delta_plus,
        "delta_minus": cfg.delta_minus,
        "delta": cfg.delta,
        "delta_g": cfg.delta_g,
        "gamma": cfg.gamma,
        "branching": cfg.branching,
        "gamma_k": cfg.gamma_k,
        "n_thermal": cfg.n_thermal,
        "fock_dim": cfg.fock_dim,
        "eta": cfg.eta(),
    });
    if let Some(d) = derived {
        value["si_derived"] = serde_json::to_value(d).unwrap();
    }
    value
}

/// Execute one subcommand; returns the paths written.
pub fn run(command: Command, scenario: &Scenario, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve(scenario, ov)?;
    match command {
        Command::Spectrum => run_spectrum(&r),
        Command::Coefficients => run_coefficients(&r),
        Command::Evolve => run_evolve(&r),
        Command::SteadyState => run_steady_state(&r),
        Command::Robust => run_robust(&r, scenario),
        Command::Compare => run_compare(&r),
    }
}

fn run_spectrum(r: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let result = if r.cfg.kind == SchemeKind::Asymmetric {
        spectrum_with_components(&r.cfg, &r.grid)
    } else {
        spectrum(&r.cfg, &r.grid)
    }
    .map_err(CliError::Engine)?;

    let csv_path = r.out_dir.join("spectrum.csv");
    let mut failures = 0usize;
    if let Some(comps) = &result.components {
        let mut csv = CsvWriter::new(&[
            "omega", "s_re", "s_im", "s_abs", "s_eit_re", "s_eit_im", "s_stark_re",
            "s_stark_im", "s_int_re", "s_int_im",
        ]);
        for (i, w) in result.omega.iter().enumerate() {
            match (
                result.values[i],
                comps.eit[i],
                comps.stark[i],
                comps.interference[i],
            ) {
                (Some(s), Some(e), Some(st), Some(int)) => csv.row(&[
                    *w,
                    s.re,
                    s.im,
                    s.norm(),
                    e.re,
                    e.im,
                    st.re,
                    st.im,
                    int.re,
                    int.im,
                ])?,
                _ => failures += 1,
            }
        }
        csv.write(&csv_path)?;
    } else {
        let mut csv = CsvWriter::new(&["omega", "s_re", "s_im", "s_abs"]);
        for (w, v) in result.omega.iter().zip(result.values.iter()) {
            match v {
                Some(s) => csv.row(&[*w, s.re, s.im, s.norm()])?,
                None => failures += 1,
            }
        }
        csv.write(&csv_path)?;
    }

    let json_path = r.out_dir.join("spectrum.json");
    write_json(
        &json_path,
        &serde_json::json!({
            "a_plus": result.a_plus,
            "a_minus": result.a_minus,
            "cooling_rate_w": result.a_minus - result.a_plus,
            "grid_points": result.omega.len(),
            "failed_points": failures,
            "config": config_json(&r.cfg, &r.derived),
            "constants": constants_json(),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

fn run_coefficients(r: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let (a_plus, a_minus) = coefficients(&r.cfg).map_err(CliError::Engine)?;
    let mut body = serde_json::json!({
        "a_plus": a_plus,
        "a_minus": a_minus,
        "cooling_rate_w": a_minus - a_plus,
        "config": config_json(&r.cfg, &r.derived),
        "constants": constants_json(),
    });
    if let Ok(n) = rate_equation_nss(a_plus, a_minus, r.cfg.n_thermal, r.cfg.gamma_k) {
        body["n_ss_rate_equation"] = serde_json::json!(n);
    }
    if r.cfg.kind == SchemeKind::Asymmetric {
        body["analytic_heating"] =
            serde_json::json!(analytic_heating(&r.cfg).map_err(CliError::Engine)?);
    }
    if let Ok(peak) = analytic_cooling_peak(&r.cfg) {
        body["analytic_peak_a_minus"] = serde_json::json!(peak.a_minus);
        body["operating_point"] = match peak.operating_point {
            OperatingPoint::LaserDetuning(d) => serde_json::json!({ "delta": d }),
            OperatingPoint::MicrowaveGate { omega_g, delta_g } => {
                serde_json::json!({ "omega_g": omega_g, "delta_g": delta_g })
            }
        };
    }
    let path = r.out_dir.join("coefficients.json");
    write_json(&path, &body)?;
    Ok(vec![path])
}

fn run_evolve(r: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let t_final = r
        .t_final
        .ok_or_else(|| CliError::Config("evolve needs t_final (flag or run plan)".into()))?;
    let result =
        cooling_trajectory_with_tol(&r.cfg, r.n0, t_final, r.tol).map_err(CliError::Engine)?;

    let csv_path = r.out_dir.join("evolve.csv");
    let mut csv = CsvWriter::new(&[
        "t", "n_phonon", "p_a2", "p_plus1", "p_zero", "p_minus1", "trace_error",
    ]);
    let traj = &result.trajectory;
    for (i, t) in traj.times.iter().enumerate() {
        let p = traj.populations[i];
        csv.row(&[*t, traj.n_phonon[i], p[0], p[1], p[2], p[3], traj.trace_error[i]])?;
    }
    csv.write(&csv_path)?;

    let json_path = r.out_dir.join("evolve.json");
    write_json(
        &json_path,
        &serde_json::json!({
            "fitted_w": result.fitted_w,
            "n_ss_dynamic": result.n_ss_dynamic,
            "n_ss_rate_eq": result.n_ss_rate_eq,
            "n_final": traj.n_phonon.last(),
            "fit_ok": result.fit_ok,
            "truncation_tail": result.truncation_tail,
            "t_final": t_final,
            "n0": r.n0,
            "config": config_json(&r.cfg, &r.derived),
            "constants": constants_json(),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

fn run_steady_state(r: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &r.cfg;
    let space = cfg.space().map_err(CliError::Engine)?;
    let h = bare_hamiltonian(cfg, &space).map_err(CliError::Engine)?;
    let diss = dissipators(cfg, &space).map_err(CliError::Engine)?;
    let hint = coefficients(cfg)
        .ok()
        .map(|(a_plus, a_minus)| a_minus - a_plus)
        .filter(|w| *w > 0.0);
    let rho = steady_state_with_horizon(&h, &diss, &space, hint).map_err(CliError::Engine)?;
    rho.validate().map_err(CliError::Engine)?;

    let purity = {
        let sq = rho.rho.dot(&rho.rho);
        trace(&sq).re
    };
    let mut body = serde_json::json!({
        "n_ss": rho.phonon_number(),
        "populations": rho.internal_populations(),
        "purity": purity,
        "trace_error": (trace(&rho.rho).re - 1.0).abs(),
        "truncation_tail": rho.top_fock_population(),
        "config": config_json(cfg, &r.derived),
        "constants": constants_json(),
    });
    if matches!(cfg.kind, SchemeKind::Asymmetric | SchemeKind::Symmetric) {
        let ansatz = ansatz_steady_state(cfg, &space).map_err(CliError::Engine)?;
        body["ansatz_fidelity"] =
            serde_json::json!(fidelity_with_pure(&ansatz, &rho.rho).map_err(CliError::Engine)?);
    }
    let path = r.out_dir.join("steadystate.json");
    write_json(&path, &body)?;
    Ok(vec![path])
}

fn run_robust(r: &Resolved, scenario: &Scenario) -> Result<Vec<PathBuf>, CliError> {
    let name = scenario
        .run
        .parameter
        .as_deref()
        .ok_or_else(|| CliError::Config("robust needs run.parameter".into()))?;
    let parameter = ScanParameter::parse(name)
        .ok_or_else(|| CliError::Config(format!("unknown scan parameter `{name}`")))?;
    let deviations = scenario.run.deviations.clone().unwrap_or_else(|| {
        [0.005, 0.01, 0.02, 0.03, 0.05]
            .iter()
            .flat_map(|e| [*e, -*e])
            .collect()
    });
    let report = robustness_scan(&r.cfg, parameter, &deviations).map_err(CliError::Engine)?;

    let csv_path = r.out_dir.join("robust.csv");
    let mut csv = CsvWriter::new(&["deviation", "delta_nss"]);
    let mut order: Vec<usize> = (0..report.deviations.len()).collect();
    order.sort_by(|&i, &j| report.deviations[i].partial_cmp(&report.deviations[j]).unwrap());
    for i in order {
        csv.row(&[report.deviations[i], report.delta_nss[i]])?;
    }
    csv.write(&csv_path)?;

    let json_path = r.out_dir.join("robust.json");
    write_json(
        &json_path,
        &serde_json::json!({
            "parameter": report.parameter.label(),
            "slope": report.slope,
            "config": config_json(&r.cfg, &r.derived),
            "constants": constants_json(),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

/// Scheme quartet sharing (λ, Γ, bath, Fock truncation) and the scenario's
/// laser power, each at its own interference/resonance conditions. The Stark
/// reduction gets its laser detuning tuned for its own best floor.
pub fn comparison_quartet(cfg: &SchemeConfig) -> Result<Vec<SchemeConfig>, CliError> {
    let mut quartet = vec![
        SchemeConfig::asymmetric_gate(cfg.lambda, cfg.omega, cfg.gamma),
        SchemeConfig::symmetric_gate(cfg.lambda, cfg.omega, cfg.gamma),
        SchemeConfig::eit_baseline(cfg.lambda, cfg.omega, cfg.gamma),
        phonon_chill::cooling::tuned_stark_baseline(cfg.lambda, cfg.omega, cfg.gamma)
            .map_err(CliError::Engine)?,
    ];
    for q in quartet.iter_mut() {
        q.gamma_k = cfg.gamma_k;
        q.n_thermal = cfg.n_thermal;
        q.fock_dim = cfg.fock_dim;
    }
    Ok(quartet)
}

fn run_compare(r: &Resolved) -> Result<Vec<PathBuf>, CliError> {
    let t_final = r
        .t_final
        .ok_or_else(|| CliError::Config("compare needs t_final (flag or run plan)".into()))?;
    let quartet = comparison_quartet(&r.cfg)?;
    let results = run_rows(&quartet, r.n0, t_final, r.tol, r.threads);
    let cmp = comparison_from_results(results);

    let csv_path = r.out_dir.join("compare.csv");
    let mut csv = CsvWriter::new(&["rank", "scheme_id", "final_n", "fitted_w", "n_ss_dynamic"]);
    for (rank, &i) in cmp.ranking.iter().enumerate() {
        let row = &cmp.rows[i];
        if let (Some(n), Some(w), Some(nss)) = (row.final_n, row.fitted_w, row.n_ss_dynamic) {
            csv.row(&[rank as f64, i as f64, n, w, nss])?;
        }
    }
    csv.write(&csv_path)?;

    let json_path = r.out_dir.join("compare.json");
    let rows: Vec<serde_json::Value> = cmp
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            serde_json::json!({
                "scheme_id": i,
                "scheme": row.label,
                "final_n": row.final_n,
                "fitted_w": row.fitted_w,
                "n_ss_dynamic": row.n_ss_dynamic,
                "error": row.error,
            })
        })
        .collect();
    let ranking_labels: Vec<&str> = cmp.ranking.iter().map(|&i| cmp.rows[i].label.as_str()).collect();
    write_json(
        &json_path,
        &serde_json::json!({
            "ranking": cmp.ranking,
            "ranking_schemes": ranking_labels,
            "rows": rows,
            "t_final": t_final,
            "n0": r.n0,
            "shared": config_json(&r.cfg, &r.derived),
            "constants": constants_json(),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

/// Run the comparison rows, optionally on worker threads. Rows are
/// independent and the aggregation is by input index, so the output does not
/// depend on the thread count.
fn run_rows(
    cfgs: &[SchemeConfig],
    n0: f64,
    t_final: f64,
    tol: f64,
    threads: usize,
) -> Vec<(String, phonon_chill::Result<CoolingResult>)> {
    if threads <= 1 || cfgs.len() <= 1 {
        return cfgs
            .iter()
            .map(|c| {
                (
                    c.kind.label().to_string(),
                    cooling_trajectory_with_tol(c, n0, t_final, tol),
                )
            })
            .collect();
    }
    let mut results: Vec<Option<(String, phonon_chill::Result<CoolingResult>)>> =
        (0..cfgs.len()).map(|_| None).collect();
    let counter = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Option<(String, phonon_chill::Result<CoolingResult>)>>> =
        results.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(cfgs.len()) {
            scope.spawn(|| loop {
                let i = counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= cfgs.len() {
                    break;
                }
                let out = (
                    cfgs[i].kind.label().to_string(),
                    cooling_trajectory_with_tol(&cfgs[i], n0, t_final, tol),
                );
                **slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    results.into_iter().map(|r| r.unwrap()).collect()
}

/// Write a preset scenario file.
pub fn dump_preset(name: &str, out_dir: &Path) -> Result<PathBuf, CliError> {
    let scenario = crate::scenario::preset(name)?;
    let path = out_dir.join(format!("{name}.scenario.json"));
    let value = serde_json::to_value(&scenario)
        .map_err(|e| CliError::Config(format!("serialize preset: {e}")))?;
    write_json(&path, &value)?;
    Ok(path)
}
