//! Subcommand implementations. Every command resolves the config, runs,
//! and emits a JSON report embedding the config digest and seed.

use std::path::Path;

use serde_json::json;

use nessim::analysis::{
    batch_means, dissipation_scaling, gc_symmetry_check, green_kubo, legendre_rate,
    lyapunov_probe, mgf_cumulant, steady_state, GreenKuboSpec, LdpSpec,
};
use nessim::dynamics::{
    simulate as run_trajectory, simulate_ensemble, simulate_gle, IntegratorSpec, StateSampler,
    TrajectoryRecord,
};
use nessim::linear_oracle::{
    assemble_linear, classify_stability, controllability_rank, exact_flux, slowest_decay_rate,
    stationary_covariance, Stability,
};
use nessim::model::{check_h1, check_h2, SystemConfig, SystemState};
use nessim::observables::flow_count;

use crate::config::{AnalysisBlock, ExperimentConfig, ModelBlock};
use crate::emit::Emitter;
use crate::Outcome;

/// Resolved system (absent for the pure-GLE model kind).
pub struct Context {
    pub system: Option<SystemConfig>,
}

impl Context {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self, String> {
        match &config.model {
            ModelBlock::Gle { .. } => Ok(Self { system: None }),
            _ => {
                let system = config.system().map_err(|e| format!("{e:#}"))?;
                Ok(Self { system: Some(system) })
            }
        }
    }

    fn system(&self) -> Result<&SystemConfig, Outcome> {
        self.system
            .as_ref()
            .ok_or_else(|| Outcome::ConfigError("this command needs a lattice model".into()))
    }
}

fn emitter(config: &ExperimentConfig) -> Result<Emitter, Outcome> {
    Emitter::new(config.output.dir.as_deref(), config.output.raw)
        .map_err(|e| Outcome::RuntimeFault(format!("cannot create output dir: {e}")))
}

pub fn check(config: &ExperimentConfig, ctx: &Context, strict: bool) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let growth = check_h1(&system.onsite, &system.pair);
    let nondeg = check_h2(&system.pair, &[-1.0, 0.0, 1.0]);
    let warnings: Vec<String> = system.warnings.iter().map(|w| w.to_string()).collect();

    let quadratic = system.onsite.is_centered_quadratic() && system.pair.is_centered_quadratic();
    let mut rank_deficient = false;
    let linear = if quadratic {
        let model = assemble_linear(system).expect("quadratic");
        let rank = controllability_rank(&model);
        rank_deficient = !rank.full;
        let stability = classify_stability(&model.a);
        json!({
            "controllability": rank,
            "stability": format!("{stability:?}"),
        })
    } else {
        json!(null)
    };

    let pass = growth.holds() && nondeg.holds && (!strict || (!rank_deficient && warnings.is_empty()));
    let report = json!({
        "experiment": "check",
        "config_digest": system.digest(),
        "pass": pass,
        "report": {
            "growth": growth,
            "nondegeneracy": nondeg,
            "warnings": warnings,
            "linear": linear,
            "strict": strict,
        }
    });
    println!("{}", serde_json::to_string_pretty(&crate::emit::round_values(&report)).unwrap());
    if let Some(dir) = config.output.dir.as_deref() {
        if let Ok(em) = Emitter::new(Some(dir), config.output.raw) {
            let _ = em.write_report("check_report", &report);
        }
    }
    if pass {
        Outcome::Success
    } else {
        Outcome::AnalysisFail("structural checks failed (or warnings under --strict)".into())
    }
}

pub fn simulate(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let spec = config.integrator_spec();
    let observers: Vec<&str> = config.run.observers.iter().map(|s| s.as_str()).collect();

    let write_one = |rec: &TrajectoryRecord, stem: &str| -> Result<(), Outcome> {
        em.write_text(&format!("{stem}.csv"), &rec.to_csv())
            .map_err(|e| Outcome::RuntimeFault(e.to_string()))?;
        let header = rec.header_json(system);
        em.write_report(stem, &header)
            .map_err(|e| Outcome::RuntimeFault(e.to_string()))?;
        Ok(())
    };

    if config.run.n_traj == 1 {
        match run_trajectory(
            system,
            &SystemState::zero(system),
            spec,
            config.run.horizon,
            config.run.seed,
            &observers,
            config.run.stride,
            config.run.store_states,
        ) {
            Ok(rec) => match write_one(&rec, "trajectory") {
                Ok(()) => Outcome::Success,
                Err(o) => o,
            },
            Err(e) => Outcome::RuntimeFault(format!("{e}")),
        }
    } else {
        match simulate_ensemble(
            system,
            &StateSampler::Fixed(SystemState::zero(system)),
            spec,
            config.run.horizon,
            config.run.n_traj,
            config.run.seed,
            &observers,
            config.run.stride,
        ) {
            Ok(recs) => {
                for (i, rec) in recs.iter().enumerate() {
                    if let Err(o) = write_one(rec, &format!("traj_{i:04}")) {
                        return o;
                    }
                }
                Outcome::Success
            }
            Err(e) => Outcome::RuntimeFault(format!("{e}")),
        }
    }
}

pub fn steady(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(AnalysisBlock::Steady { burn_in_fraction, batch_count }) = &config.analysis else {
        return Outcome::ConfigError("analysis block with experiment = steady required".into());
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let observers: Vec<&str> = config.run.observers.iter().map(|s| s.as_str()).collect();
    if observers.is_empty() {
        return Outcome::ConfigError("run.observers must name at least one column".into());
    }
    let rec = match run_trajectory(
        system,
        &SystemState::zero(system),
        config.integrator_spec(),
        config.run.horizon,
        config.run.seed,
        &observers,
        config.run.stride,
        false,
    ) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let report = match steady_state(&[rec], *burn_in_fraction, *batch_count) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let mut csv = String::from("observable,mean,std_error,tau_samples,stationarity_ok\n");
    for o in &report.observables {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            o.name, o.estimate.mean, o.estimate.std_error, o.estimate.tau_samples, o.stationarity_ok
        ));
    }
    let envelope = json!({
        "experiment": "steady",
        "config_digest": system.digest(),
        "seed": config.run.seed,
        "pass": !report.mixing_warning,
        "report": report,
    });
    if em.write_text("steady.csv", &csv).is_err()
        || em.write_report("steady_report", &envelope).is_err()
    {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if report.mixing_warning {
        return Outcome::AnalysisFail("batches too short for the measured autocorrelation".into());
    }
    Outcome::Success
}

pub fn ldp(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(AnalysisBlock::Ldp {
        flow_index,
        alpha_grid,
        t_list,
        n_traj,
        burn_in,
        spacing,
        n_boot,
        n_eff_floor,
        w_grid,
    }) = &config.analysis
    else {
        return Outcome::ConfigError("analysis block with experiment = ldp required".into());
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let ldp_spec = LdpSpec {
        flow_index: *flow_index,
        alpha_grid: alpha_grid.clone(),
        t_list: t_list.clone(),
        n_traj: *n_traj,
        base_seed: config.run.seed,
        burn_in: *burn_in,
        spacing: *spacing,
        sample_stride: config.run.stride,
        n_boot: *n_boot,
        n_eff_floor: *n_eff_floor,
    };
    let curve = match mgf_cumulant(system, config.integrator_spec(), &ldp_spec) {
        Ok(c) => c,
        Err(nessim::analysis::AnalysisError::AlphaOutOfDomain { alpha, lo, hi }) => {
            return Outcome::ConfigError(format!(
                "alpha = {alpha} outside the analyticity domain ({lo}, {hi})"
            ))
        }
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let gc = match gc_symmetry_check(&curve, 3.0) {
        Ok(g) => g,
        Err(e) => return Outcome::ConfigError(format!("{e}")),
    };
    let w_grid: Vec<f64> = w_grid.clone().unwrap_or_else(|| {
        let (lo, hi) = curve.empirical_rate_range;
        let span = (hi - lo).max(1e-6);
        (0..=40)
            .map(|k| lo - 0.5 * span + k as f64 * 2.0 * span / 40.0)
            .collect()
    });
    let rate = legendre_rate(&curve, &w_grid, 3.0);

    let mut csv = String::from("alpha,e_hat,std_error,n_eff,usable\n");
    for k in 0..curve.alphas.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            curve.alphas[k], curve.e_hat[k], curve.std_error[k], curve.n_eff[k], curve.usable[k]
        ));
    }
    let _ = em.write_text("cumulant.csv", &csv);
    if let Ok(rate) = &rate {
        let mut csv = String::from("w,e_w,finite,supported\n");
        for k in 0..rate.w.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                rate.w[k], rate.values[k], rate.finite[k], rate.supported[k]
            ));
        }
        let _ = em.write_text("rate.csv", &csv);
    }

    let mut curve_json = serde_json::to_value(&curve).expect("serializable");
    if let Some(obj) = curve_json.as_object_mut() {
        obj.remove("boot_replicates"); // bulky; the errors already summarize it
    }
    let pass = gc.pass;
    let envelope = json!({
        "experiment": "ldp",
        "config_digest": system.digest(),
        "seed": config.run.seed,
        "pass": pass,
        "report": {
            "cumulant": curve_json,
            "gc_symmetry": gc,
            "rate_function": rate.as_ref().ok(),
            "rate_error": rate.as_ref().err().map(|e| e.to_string()),
        }
    });
    if em.write_report("ldp_report", &envelope).is_err() {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if pass {
        Outcome::Success
    } else {
        Outcome::AnalysisFail("fluctuation symmetry outside tolerance".into())
    }
}

pub fn greenkubo(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(AnalysisBlock::Greenkubo {
        flow_index,
        mean_beta,
        probes,
        response_horizon,
        corr_horizon,
        corr_runs,
        max_lag_time,
        burn_in_fraction,
        batch_count,
        average_flows,
        tolerance,
    }) = &config.analysis
    else {
        return Outcome::ConfigError("analysis block with experiment = greenkubo required".into());
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let gk = GreenKuboSpec {
        flow_index: *flow_index,
        mean_beta: *mean_beta,
        probes: probes.clone(),
        response_horizon: *response_horizon,
        corr_horizon: *corr_horizon,
        corr_runs: *corr_runs,
        max_lag_time: *max_lag_time,
        sample_stride: config.run.stride,
        burn_in_fraction: *burn_in_fraction,
        batch_count: *batch_count,
        base_seed: config.run.seed,
        average_flows: *average_flows,
    };
    let report = match green_kubo(system, config.integrator_spec(), &gk) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let pass = report.window_converged && (report.ratio - 1.0).abs() <= *tolerance;
    let envelope = json!({
        "experiment": "greenkubo",
        "config_digest": system.digest(),
        "seed": config.run.seed,
        "pass": pass,
        "tolerance": tolerance,
        "report": report,
    });
    if em.write_report("greenkubo_report", &envelope).is_err() {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if pass {
        Outcome::Success
    } else {
        Outcome::AnalysisFail(format!(
            "Green-Kubo ratio {} outside tolerance {tolerance} (window converged: {})",
            report.ratio, report.window_converged
        ))
    }
}

pub fn lyapunov(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(AnalysisBlock::Lyapunov { theta, horizon, shells, states_per_shell, noise_reps }) =
        &config.analysis
    else {
        return Outcome::ConfigError("analysis block with experiment = lyapunov required".into());
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let report = match lyapunov_probe(
        system,
        config.integrator_spec(),
        *theta,
        *horizon,
        shells,
        *states_per_shell,
        *noise_reps,
        config.run.seed,
    ) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let pass = report.decreasing;
    let envelope = json!({
        "experiment": "lyapunov",
        "config_digest": system.digest(),
        "seed": config.run.seed,
        "pass": pass,
        "report": report,
    });
    if em.write_report("lyapunov_report", &envelope).is_err() {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if pass {
        Outcome::Success
    } else {
        Outcome::AnalysisFail("contraction factor not decreasing across shells".into())
    }
}

pub fn scaling(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(AnalysisBlock::Scaling { energies, dt, directions }) = &config.analysis else {
        return Outcome::ConfigError("analysis block with experiment = scaling required".into());
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let report = match dissipation_scaling(system, energies, *dt, *directions, config.run.seed) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let bound = 2.0 / system.pair.degree() as f64;
    let pass = !report.any_fault && report.exponent >= bound - report.exponent_std_error;
    let mut csv = String::from("energy,worst_drop,mean_drop,faults\n");
    for s in &report.samples {
        csv.push_str(&format!("{},{},{},{}\n", s.energy, s.worst_drop, s.mean_drop, s.faults));
    }
    let _ = em.write_text("scaling.csv", &csv);
    let envelope = json!({
        "experiment": "scaling",
        "config_digest": system.digest(),
        "seed": config.run.seed,
        "pass": pass,
        "exponent_bound": bound,
        "report": report,
    });
    if em.write_report("scaling_report", &envelope).is_err() {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if pass {
        Outcome::Success
    } else {
        Outcome::AnalysisFail(format!(
            "decay exponent {} +- {} below the bound {bound} (or decay fault)",
            report.exponent, report.exponent_std_error
        ))
    }
}

pub fn oracle(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let system = match ctx.system() {
        Ok(s) => s,
        Err(o) => return o,
    };
    if !matches!(config.analysis, Some(AnalysisBlock::Oracle {}) | None) {
        return Outcome::ConfigError("oracle takes an empty analysis block".into());
    }
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let model = match assemble_linear(system) {
        Ok(m) => m,
        Err(e) => return Outcome::ConfigError(format!("{e}")),
    };
    let rank = controllability_rank(&model);
    let stability = classify_stability(&model.a);
    let (covariance, fluxes, residual) = match stationary_covariance(&model) {
        Ok(cov) => {
            let fluxes: Vec<f64> = (0..flow_count(system))
                .map(|j| exact_flux(&model, &cov, system, j).unwrap_or(f64::NAN))
                .collect();
            let sigma: Vec<Vec<f64>> = (0..model.state_dim)
                .map(|i| (0..model.state_dim).map(|j| cov.sigma[(i, j)]).collect())
                .collect();
            (Some(sigma), Some(fluxes), Some(cov.residual))
        }
        Err(_) => (None, None, None),
    };
    let unique = covariance.is_some() && rank.full;
    let envelope = json!({
        "experiment": "oracle",
        "config_digest": system.digest(),
        "pass": unique,
        "report": {
            "state_dim": model.state_dim,
            "noise_dim": model.noise_dim,
            "stability": format!("{stability:?}"),
            "slowest_decay_rate": if matches!(stability, Stability::Hurwitz{..}) { Some(slowest_decay_rate(&model)) } else { None },
            "controllability": rank,
            "stationary_covariance": covariance,
            "lyapunov_residual": residual,
            "exact_fluxes": fluxes,
            "flow_labels": (0..flow_count(system)).map(|j| format!("Phi_{j}")).collect::<Vec<_>>(),
        }
    });
    if em.write_report("oracle_report", &envelope).is_err() {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if unique {
        Outcome::Success
    } else {
        Outcome::AnalysisFail(
            "stationary state not unique (rank deficiency or non-Hurwitz drift)".into(),
        )
    }
}

pub fn gle_compare(config: &ExperimentConfig, ctx: &Context) -> Outcome {
    let _ = ctx;
    let gle = match config.gle() {
        Ok(g) => g,
        Err(e) => return Outcome::ConfigError(format!("{e:#}")),
    };
    let Some(AnalysisBlock::GleCompare { horizon, burn_in_fraction, batch_count }) =
        &config.analysis
    else {
        return Outcome::ConfigError("analysis block with experiment = gle_compare required".into());
    };
    let em = match emitter(config) {
        Ok(e) => e,
        Err(o) => return o,
    };
    let dt = config.integrator.dt;
    let gle_rec = match simulate_gle(&gle, (0.0, 0.0), dt, *horizon, config.run.seed, None, config.run.stride) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    let extended = gle.extended_config();
    let ext_rec = match run_trajectory(
        &extended,
        &SystemState::zero(&extended),
        IntegratorSpec::splitting(dt),
        *horizon,
        config.run.seed ^ 0xa5a5_a5a5,
        &["p_1", "q_1"],
        config.run.stride,
        false,
    ) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };

    let moment = |series: &[f64], power: u32| -> Result<(f64, f64), Outcome> {
        let skip = (series.len() as f64 * burn_in_fraction).floor() as usize;
        let mapped: Vec<f64> = series[skip..].iter().map(|&v| v.powi(power as i32)).collect();
        batch_means(&mapped, *batch_count)
            .map(|e| (e.mean, e.std_error))
            .map_err(|e| Outcome::RuntimeFault(format!("{e}")))
    };

    let mut rows = Vec::new();
    let mut pass = true;
    for (label, gle_name, ext_name, power) in [
        ("E[p]", "p", "p_1", 1u32),
        ("E[q]", "q", "q_1", 1),
        ("E[p^2]", "p", "p_1", 2),
        ("E[q^2]", "q", "q_1", 2),
    ] {
        let a = match moment(gle_rec.series_for(gle_name).unwrap(), power) {
            Ok(v) => v,
            Err(o) => return o,
        };
        let b = match moment(ext_rec.series_for(ext_name).unwrap(), power) {
            Ok(v) => v,
            Err(o) => return o,
        };
        let combined = (a.1 * a.1 + b.1 * b.1).sqrt();
        let ok = (a.0 - b.0).abs() <= 3.0 * combined;
        pass &= ok;
        rows.push(json!({
            "moment": label,
            "gle_mean": a.0,
            "gle_se": a.1,
            "extended_mean": b.0,
            "extended_se": b.1,
            "combined_se": combined,
            "agree_3se": ok,
        }));
    }
    let envelope = json!({
        "experiment": "gle_compare",
        "config_digest": gle_rec.config_digest,
        "seed": config.run.seed,
        "pass": pass,
        "report": {
            "moments": rows,
            "horizon": horizon,
            "dt": dt,
        }
    });
    if em.write_report("gle_compare_report", &envelope).is_err() {
        return Outcome::RuntimeFault("failed writing outputs".into());
    }
    if pass {
        Outcome::Success
    } else {
        Outcome::AnalysisFail("GLE and extended-system moments disagree beyond 3 s.e.".into())
    }
}

/// Re-runs a `simulate` output and byte-compares the CSV.
pub fn verify(dir: &Path) -> Outcome {
    let header_path = dir.join("trajectory.json");
    let csv_path = dir.join("trajectory.csv");
    let header: serde_json::Value = match std::fs::read_to_string(&header_path)
        .map_err(|e| e.to_string())
        .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
    {
        Ok(h) => h,
        Err(e) => return Outcome::ConfigError(format!("cannot load {}: {e}", header_path.display())),
    };
    let stored_csv = match std::fs::read_to_string(&csv_path) {
        Ok(c) => c,
        Err(e) => return Outcome::ConfigError(format!("cannot load {}: {e}", csv_path.display())),
    };

    let system: SystemConfig = match serde_json::from_value(header["config"].clone()) {
        Ok(c) => c,
        Err(e) => return Outcome::ConfigError(format!("bad embedded config: {e}")),
    };
    if system.digest() != header["config_digest"].as_str().unwrap_or_default() {
        return Outcome::AnalysisFail("embedded config does not match its digest".into());
    }
    let spec: IntegratorSpec = match serde_json::from_value(header["integrator"].clone()) {
        Ok(s) => s,
        Err(e) => return Outcome::ConfigError(format!("bad integrator block: {e}")),
    };
    let seed = header["seed"].as_u64().unwrap_or_default();
    let observers: Vec<String> = header["observables"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().map(String::from)).collect())
        .unwrap_or_default();
    let samples = header["samples"].as_u64().unwrap_or(0);
    let t_end = header["t_end"].as_f64().unwrap_or(0.0);
    let steps = (t_end / spec.dt).round() as u64;
    let stride = if samples > 1 { (steps / (samples - 1)).max(1) as usize } else { 1 };

    let names: Vec<&str> = observers.iter().map(|s| s.as_str()).collect();
    let rec = match run_trajectory(
        &system,
        &SystemState::zero(&system),
        spec,
        t_end,
        seed,
        &names,
        stride,
        false,
    ) {
        Ok(r) => r,
        Err(e) => return Outcome::RuntimeFault(format!("{e}")),
    };
    if rec.to_csv() == stored_csv {
        println!("verified: byte-identical reproduction of {}", csv_path.display());
        Outcome::Success
    } else {
        Outcome::AnalysisFail("re-run CSV differs from the stored one".into())
    }
}
