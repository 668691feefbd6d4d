use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dgsite::grid::{Network, VoltageLimits};
use dgsite::optimizer::{
    pso_optimize, Allocation, AllocationFile, Evaluator, OptimizeError, PenetrationSpec, PsoSettings, SearchSpace,
    SizingRules,
};
use dgsite::powerflow::{solve, write_voltage_profile, InjectionSet, PowerFlowError, PowerFlowResult};
use dgsite::stochastic::{build_state_set, fit_hours, ScenarioSettings, StateSet};
use serde::Serialize;

use crate::config::RunConfig;

/// Report written by `optimize` as `result.json`.
#[derive(Debug, Serialize)]
struct OptimizeResult<'a> {
    allocation: &'a Allocation,
    expected_loss_kw: f64,
    base_loss_kw: f64,
    reduction_pct: f64,
    worst_voltage_pu: f64,
    worst_voltage_bus: u32,
    violation_pu: f64,
    feasible: bool,
    evaluations: usize,
    diagnostics: &'a [String],
    trace: &'a [f64],
    seed: u64,
    settings: ResultSettings<'a>,
}

#[derive(Debug, Serialize)]
struct ResultSettings<'a> {
    pso: &'a PsoSettings,
    scenarios: &'a ScenarioSettings,
    penetration: &'a PenetrationSpec,
    sizing: &'a SizingRules,
    limits: &'a VoltageLimits,
}

fn output_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_resolved(config: &RunConfig, dir: &Path) -> Result<()> {
    let path = dir.join("config_resolved.toml");
    fs::write(&path, config.to_toml()?).with_context(|| format!("cannot write {}", path.display()))
}

fn write_profile(network: &Network, result: &PowerFlowResult, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    write_voltage_profile(network, result, &mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Solves and insists on convergence.
fn solve_converged(config: &RunConfig, network: &Network, injections: &InjectionSet) -> Result<PowerFlowResult> {
    let result = solve(network, injections, &config.powerflow)?;
    if !result.converged {
        return Err(PowerFlowError::NotConverged {
            iterations: result.iterations,
            last_update: result.last_update,
        }
        .into());
    }
    Ok(result)
}

fn bus_id(network: &Network, index: usize) -> u32 {
    network.buses()[index].id
}

fn states(config: &RunConfig) -> Result<StateSet> {
    let (wind, solar) = config.profiles()?;
    Ok(build_state_set(&wind, &solar, &config.scenarios, config.seed)?)
}

pub fn powerflow(config: &RunConfig) -> Result<()> {
    let network = config.network()?;
    let result = solve_converged(config, &network, &InjectionSet::from_loads(&network))?;
    let dir = output_dir(config)?;
    write_profile(&network, &result, &dir.join("voltage_profile.csv"))?;
    write_resolved(config, &dir)?;

    let (min_index, min_v) = result.min_voltage();
    println!("total loss: {:.4} kW", result.total_loss_kw);
    println!("min voltage: {:.6} pu at bus {}", min_v, bus_id(&network, min_index));
    println!("iterations: {}", result.iterations);
    Ok(())
}

pub fn fit(config: &RunConfig) -> Result<()> {
    let (wind, solar) = config.profiles()?;
    let fits = fit_hours(&wind, &solar, &config.scenarios.sigma_rule, config.scenarios.beta_fit)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "hour,wind_mean_ms,rayleigh_c_ms,irradiance_mean,irradiance_sigma,beta_alpha,beta_beta")?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for f in fits {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.hour,
            f.wind_mean,
            opt(f.rayleigh.map(|r| r.c)),
            f.irradiance_mean,
            f.irradiance_sigma,
            opt(f.beta.map(|b| b.alpha)),
            opt(f.beta.map(|b| b.beta)),
        )?;
    }
    Ok(())
}

/// Voltage profile with every unit at its probability-weighted mean output.
fn mean_output_profile(config: &RunConfig, network: &Network, states: &StateSet, allocation: &Allocation) -> Result<PowerFlowResult> {
    let mut injections = InjectionSet::from_loads(network);
    for unit in &allocation.units {
        let index = network
            .index_of(unit.bus)
            .ok_or_else(|| OptimizeError::InvalidAllocation(vec![format!("bus {} is not in the network", unit.bus)]))?;
        let fraction: f64 = states
            .states
            .iter()
            .map(|s| s.weight * config.dg.output_fraction(unit.kind, s))
            .sum();
        injections.inject(index, unit.capacity_kw * fraction);
    }
    solve_converged(config, network, &injections)
}

pub fn optimize(config: &RunConfig, threads: usize) -> Result<()> {
    let network = config.network()?;
    let base = solve_converged(config, &network, &InjectionSet::from_loads(&network))?;
    let space = SearchSpace::new(&network, config.penetration, config.sizing, &config.candidates)?;
    let states = states(config)?;
    let evaluator = Evaluator::new(&network, &states, &config.dg, config.limits).with_sweep(config.powerflow);
    let outcome = pso_optimize(&evaluator, &space, &config.pso, threads)?;
    for line in &outcome.diagnostics {
        eprintln!("note: {line}");
    }
    let report = &outcome.report;
    if !report.converged() {
        let err = PowerFlowError::NotConverged {
            iterations: config.powerflow.max_iterations,
            last_update: f64::NAN,
        };
        return Err(anyhow::Error::new(err).context(format!(
            "best allocation failed to converge in {} of {} states",
            report.non_converged_states,
            states.len()
        )));
    }

    let dir = output_dir(config)?;
    let reduction_pct = reduction_pct(base.total_loss_kw, report.expected_loss_kw);
    let result = OptimizeResult {
        allocation: &outcome.allocation,
        expected_loss_kw: report.expected_loss_kw,
        base_loss_kw: base.total_loss_kw,
        reduction_pct,
        worst_voltage_pu: report.worst_voltage_pu,
        worst_voltage_bus: report.worst_voltage_bus,
        violation_pu: report.violation_pu,
        feasible: report.feasible,
        evaluations: outcome.evaluations,
        diagnostics: &outcome.diagnostics,
        trace: &outcome.trace,
        seed: config.seed,
        settings: ResultSettings {
            pso: &config.pso,
            scenarios: &config.scenarios,
            penetration: &config.penetration,
            sizing: &config.sizing,
            limits: &config.limits,
        },
    };
    write_json(&result, &dir.join("result.json"))?;

    let mut trace = create(&dir.join("trace.csv"))?;
    writeln!(trace, "iteration,gbest_kw")?;
    for (i, kw) in outcome.trace.iter().enumerate() {
        writeln!(trace, "{},{}", i + 1, kw)?;
    }
    trace.flush()?;

    let profile = mean_output_profile(config, &network, &states, &outcome.allocation)?;
    write_profile(&network, &profile, &dir.join("voltage_profile.csv"))?;
    states.write_json(create(&dir.join("states.json"))?)?;
    write_resolved(config, &dir)?;

    println!("base loss: {:.4} kW", base.total_loss_kw);
    println!("optimized expected loss: {:.4} kW", report.expected_loss_kw);
    println!("reduction: {reduction_pct:.2} %");
    println!(
        "worst voltage: {:.6} pu at bus {} ({})",
        report.worst_voltage_pu,
        report.worst_voltage_bus,
        if report.feasible { "feasible" } else { "limits violated" }
    );
    Ok(())
}

pub fn evaluate(config: &RunConfig, allocation_file: &Path) -> Result<()> {
    let text = fs::read_to_string(allocation_file)
        .with_context(|| format!("cannot read allocation {}", allocation_file.display()))?;
    let file: AllocationFile = serde_json::from_str(&text)
        .with_context(|| format!("invalid allocation JSON {}", allocation_file.display()))?;
    let allocation = Allocation::new(file.allocation.units);

    let network = config.network()?;
    let space = SearchSpace::new(&network, config.penetration, config.sizing, &config.candidates)?;
    space
        .validate(&allocation)
        .with_context(|| format!("allocation {} rejected", allocation_file.display()))?;
    let base = solve_converged(config, &network, &InjectionSet::from_loads(&network))?;
    let states = states(config)?;
    let evaluator = Evaluator::new(&network, &states, &config.dg, config.limits).with_sweep(config.powerflow);
    let report = evaluator.evaluate(&allocation)?;

    let dir = output_dir(config)?;
    write_json(&report, &dir.join("report.json"))?;
    states.write_json(create(&dir.join("states.json"))?)?;
    write_resolved(config, &dir)?;

    println!("base loss: {:.4} kW", base.total_loss_kw);
    println!("expected loss: {:.4} kW", report.expected_loss_kw);
    println!("reduction: {:.2} %", reduction_pct(base.total_loss_kw, report.expected_loss_kw));
    println!(
        "worst voltage: {:.6} pu at bus {} ({})",
        report.worst_voltage_pu,
        report.worst_voltage_bus,
        if report.feasible { "feasible" } else { "limits violated" }
    );
    Ok(())
}

fn reduction_pct(base: f64, optimized: f64) -> f64 {
    if base > 0.0 {
        100.0 * (1.0 - optimized / base)
    } else {
        0.0
    }
}
