use rayon::prelude::*;
use serde_json::json;
use spin1_entangle::acceptance::{run_criterion, CRITERIA};
use spin1_entangle::cache::SpectrumCache;
use spin1_entangle::coupling::{coupling_inputs_cached, Backend, CouplingInputs};
use spin1_entangle::entanglement::{concurrence_wootters, concurrence_xstate};
use spin1_entangle::fit::saturation_fit;
use spin1_entangle::open_system::{
    integrate_master_equation, p_of_t, thermal_pair_state, xstate_after_channel, HeffMode, TwoQubitXState,
};
use spin1_entangle::quadrature::SphereRule;
use spin1_entangle::teleport::{
    average_fidelity_formula, average_fidelity_with, first_crossing, CLASSICAL_FIDELITY, SPHERE_NODES,
};

use crate::config::{in_window, RunConfig};
use crate::error::CliError;
use crate::output::{num, Document};

fn pool(config: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))
}

fn cache(config: &RunConfig) -> Result<Option<SpectrumCache>, CliError> {
    Ok(config.cache_dir.as_ref().map(SpectrumCache::new).transpose()?)
}

fn inputs(
    config: &RunConfig,
    chain_len: usize,
    theta: f64,
    cache: Option<&SpectrumCache>,
) -> spin1_entangle::Result<CouplingInputs<f64>> {
    let spec = spin1_entangle::ChainSpecF64 { theta, ..config.spec(chain_len) };
    coupling_inputs_cached(&spec, Backend::from(config.backend), cache)
}

pub fn jeff_scaling(config: &RunConfig) -> Result<Document, CliError> {
    config.validate_scaling()?;
    let cache = cache(config)?;
    let s = &config.scaling;
    let backend = Backend::from(config.backend);
    let results: Vec<_> = pool(config)?.install(|| {
        s.chain_lens
            .par_iter()
            .map(|&l| inputs(config, l, config.chain.theta, cache.as_ref()).and_then(|i| i.j_eff_at(s.temperature)))
            .collect()
    });

    let mut doc = Document::new("jeff-scaling", config, &["L", "j_eff", "omega0", "omega1", "gap", "backend", "error"]);
    let mut points = Vec::new();
    for (&l, r) in s.chain_lens.iter().zip(results) {
        match r {
            Ok(e) => {
                points.push((l, e.j_eff));
                doc.row(vec![
                    l.to_string(),
                    num(e.j_eff),
                    num(e.omega0.value),
                    num(e.omega1.value),
                    num(e.gap()),
                    backend.as_str().into(),
                    String::new(),
                ]);
            }
            Err(err) => {
                log::error!("L = {l}: {err}");
                doc.row(vec![
                    l.to_string(),
                    "".into(),
                    "".into(),
                    "".into(),
                    "".into(),
                    backend.as_str().into(),
                    err.to_string(),
                ]);
            }
        }
    }

    let mut sorted = points.clone();
    sorted.sort_by_key(|p| p.0);
    let inc: Vec<f64> = sorted.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let shape = json!({
        "increasing": inc.iter().all(|&d| d > 0.0),
        "decreasing_increments": inc.windows(2).all(|w| w[1] < w[0]),
    });
    let fit = match saturation_fit(&points) {
        Ok(f) => json!({
            "j_inf": f.j_inf,
            "amplitude": f.amplitude,
            "decay_length": f.decay_length,
            "rms_residual": f.residual,
            "relative_residual": f.relative_residual(),
            "converged": f.converged,
            "termination": f.termination,
            "evaluations": f.evaluations,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    doc.footer("shape", &shape);
    doc.footer("fit", &fit);
    Ok(doc)
}

pub fn jeff_surface(config: &RunConfig) -> Result<Document, CliError> {
    config.validate_surface()?;
    let cache = cache(config)?;
    let s = &config.surface;
    let per_theta: Vec<_> = pool(config)?.install(|| {
        s.thetas.par_iter().map(|&th| in_window(th).then(|| inputs(config, s.chain_len, th, cache.as_ref()))).collect()
    });

    let mut doc = Document::new("jeff-surface", config, &["T", "theta", "j_eff", "validity", "error"]);
    for (&th, inp) in s.thetas.iter().zip(&per_theta) {
        for &t in &s.temperatures {
            let row = match inp {
                None => vec![num(t), num(th), String::new(), "out_of_window".into(), String::new()],
                Some(Err(e)) => vec![num(t), num(th), String::new(), "error".into(), e.to_string()],
                Some(Ok(i)) => match i.j_eff_at(t) {
                    Ok(e) => vec![num(t), num(th), num(e.j_eff), e.validity.as_str().into(), String::new()],
                    Err(e) => vec![num(t), num(th), String::new(), "error".into(), e.to_string()],
                },
            };
            doc.row(row);
        }
    }
    Ok(doc)
}

/// Coupling for the dynamics commands and a description of where it came
/// from.
fn dynamics_coupling(config: &RunConfig) -> Result<(f64, String), CliError> {
    let d = &config.dynamics;
    if let Some(j) = d.j_eff {
        return Ok((j, "override".into()));
    }
    let cache = cache(config)?;
    let i = inputs(config, d.chain_len, config.chain.theta, cache.as_ref())?;
    let e = i.j_eff_at(d.temperature)?;
    Ok((e.j_eff, format!("L = {} {} backend", d.chain_len, Backend::from(config.backend).as_str())))
}

fn initial_state(config: &RunConfig, j_eff: f64) -> Result<TwoQubitXState<f64>, CliError> {
    Ok(thermal_pair_state(j_eff, config.chain.omega, config.dynamics.temperature)?)
}

pub fn decoherence(config: &RunConfig) -> Result<Document, CliError> {
    config.validate_dynamics()?;
    let (j_eff, source) = dynamics_coupling(config)?;
    let noise = config.noise()?;
    let omega = config.chain.omega;
    let s0 = initial_state(config, j_eff)?;
    let grid = config.time_grid();
    let tol = config.dynamics.tol;

    let (free, interacting) = pool(config)?.install(|| {
        rayon::join(
            || integrate_master_equation(&s0.to_state(), HeffMode::Free { omega }, &noise, &grid, tol),
            || integrate_master_equation(&s0.to_state(), HeffMode::Interacting { j_eff, omega }, &noise, &grid, tol),
        )
    });
    let (free, interacting) = (free?, interacting?);

    let mut doc =
        Document::new("decoherence", config, &["t", "C_free_kraus", "C_free_ode", "C_interacting_ode", "trace_drift"]);
    doc.note(format!("j_eff: {} ({source})", num(j_eff)));
    doc.note(format!("initial_concurrence: {}", num(concurrence_xstate(&s0))));
    let mut sup_kraus_ode = 0.0f64;
    let mut sup_modes = 0.0f64;
    for (k, &t) in grid.iter().enumerate() {
        let kraus = concurrence_xstate(&xstate_after_channel(&s0, p_of_t(t, &noise)?, noise.n_bar));
        let c_free = concurrence_wootters(&free.states[k])?;
        let c_int = concurrence_wootters(&interacting.states[k])?;
        sup_kraus_ode = sup_kraus_ode.max((kraus - c_free).abs());
        sup_modes = sup_modes.max((c_int - c_free).abs());
        let drift = free.trace_drift[k].abs().max(interacting.trace_drift[k].abs());
        doc.row(vec![num(t), num(kraus), num(c_free), num(c_int), num(drift)]);
    }
    doc.footer(
        "discrepancy",
        &json!({
            "sup_concurrence_free_kraus_vs_free_ode": sup_kraus_ode,
            "sup_concurrence_interacting_vs_free": sup_modes,
            "sup_state_interacting_vs_free": interacting.sup_distance(&free),
            "renormalized_snapshots": free.renormalized + interacting.renormalized,
            "note": "the pair Heisenberg term commutes with every symmetric X state, so both Hamiltonians generate the same trajectory",
        }),
    );
    Ok(doc)
}

pub fn teleport(config: &RunConfig) -> Result<Document, CliError> {
    config.validate_dynamics()?;
    let (j_eff, source) = dynamics_coupling(config)?;
    let noise = config.noise()?;
    let s0 = initial_state(config, j_eff)?;
    let grid = config.time_grid();
    let rule = SphereRule::new(SPHERE_NODES, SPHERE_NODES);

    let channels = grid
        .iter()
        .map(|&t| Ok(xstate_after_channel(&s0, p_of_t(t, &noise)?, noise.n_bar)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let reports: Vec<_> =
        pool(config)?.install(|| channels.par_iter().map(|ch| average_fidelity_with(ch, &rule)).collect());

    let mut doc =
        Document::new("teleport", config, &["t", "F_formula", "F_quadrature", "F_printed", "above_two_thirds"]);
    doc.note(format!("j_eff: {} ({source})", num(j_eff)));
    let mut sup_dev = 0.0f64;
    for (&t, r) in grid.iter().zip(&reports) {
        sup_dev = sup_dev.max((r.f_avg_formula - r.f_avg_quadrature).abs());
        doc.row(vec![
            num(t),
            num(r.f_avg_formula),
            num(r.f_avg_quadrature),
            num(r.f_avg_printed),
            r.above_classical().to_string(),
        ]);
    }
    let fidelity_at = |t: f64| match p_of_t(t, &noise) {
        Ok(p) => average_fidelity_formula(&xstate_after_channel(&s0, p, noise.n_bar)),
        Err(_) => f64::NAN,
    };
    let t_star = first_crossing(fidelity_at, CLASSICAL_FIDELITY, &grid, 1e-10);
    doc.footer(
        "t_star",
        &json!({
            "t_star": t_star,
            "level": CLASSICAL_FIDELITY,
            "initial_fidelity": reports.first().map(|r| r.f_avg_formula),
            "sup_formula_vs_quadrature": sup_dev,
        }),
    );
    Ok(doc)
}

/// Runs the acceptance criteria and returns the report with the failure count.
pub fn selftest(config: &RunConfig, only: &[u8]) -> Result<(String, usize), CliError> {
    let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::Usage(format!("no acceptance criterion {bad}; valid ids are 1-{}", CRITERIA.len())));
    }
    let mut text = String::new();
    let mut failed = 0;
    for id in ids {
        let r = run_criterion(id, config.seed);
        if !r.passed {
            failed += 1;
        }
        text.push_str(&r.line());
        text.push('\n');
    }
    Ok((text, failed))
}
