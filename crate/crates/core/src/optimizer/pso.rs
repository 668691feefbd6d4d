//! Global-best particle swarm over the repaired capacity grid.
//!
//! All random draws come from one seeded stream consumed in particle order;
//! only evaluation runs in parallel, so results do not depend on the number
//! of worker threads.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Allocation, Evaluator, ObjectiveReport, OptimizeError, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoSettings {
    pub swarm_size: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of the per-bus capacity range.
    pub velocity_clamp: f64,
    pub seed: u64,
    /// kW of fitness per pu of aggregate voltage violation.
    pub penalty_kw_per_pu: f64,
}

impl Default for PsoSettings {
    fn default() -> Self {
        Self {
            swarm_size: 50,
            iterations: 200,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            velocity_clamp: 0.5,
            seed: 42,
            penalty_kw_per_pu: 1e4,
        }
    }
}

impl PsoSettings {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |m: String| Err(OptimizeError::Settings(m));
        if self.swarm_size < 2 {
            return bad(format!("swarm_size {} must be >= 2", self.swarm_size));
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1".into());
        }
        if !(self.inertia > 0.0 && self.inertia <= 1.0) {
            return bad(format!("inertia {} must lie in (0, 1]", self.inertia));
        }
        if !(self.cognitive > 0.0 && self.social > 0.0) {
            return bad("cognitive and social coefficients must be positive".into());
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return bad(format!("velocity_clamp {} must be positive", self.velocity_clamp));
        }
        if !(self.penalty_kw_per_pu >= 0.0 && self.penalty_kw_per_pu.is_finite()) {
            return bad(format!("penalty {} must be non-negative", self.penalty_kw_per_pu));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Repaired (on-grid) vector of the best allocation this particle found.
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    pub allocation: Allocation,
    pub report: ObjectiveReport,
    /// Global-best fitness after each iteration, kW.
    pub trace: Vec<f64>,
    /// Distinct allocations scored.
    pub evaluations: usize,
    pub diagnostics: Vec<String>,
}

/// Runs the swarm. `threads = 0` uses rayon's default pool size.
///
/// The swarm is steered by penalized fitness. The returned allocation is the
/// best feasible one encountered if any was, otherwise the global best.
pub fn pso_optimize(
    evaluator: &Evaluator<'_>,
    space: &SearchSpace,
    settings: &PsoSettings,
    threads: usize,
) -> Result<PsoOutcome, OptimizeError> {
    settings.validate()?;
    let evaluator = evaluator.clone().with_penalty(settings.penalty_kw_per_pu);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| OptimizeError::Settings(e.to_string()))?;

    let dim = space.dimension();
    let upper = space.sizing().per_bus_max_kw;
    let v_max = settings.velocity_clamp * upper;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let mut swarm: Vec<Particle> = (0..settings.swarm_size)
        .map(|_| {
            let position: Vec<f64> = (0..dim).map(|_| upper * rng.random::<f64>()).collect();
            let velocity: Vec<f64> = (0..dim).map(|_| v_max * (2.0 * rng.random::<f64>() - 1.0)).collect();
            Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_fitness: f64::INFINITY,
            }
        })
        .collect();

    let mut cache: HashMap<Vec<u32>, ObjectiveReport> = HashMap::new();
    let mut gbest: Option<(Vec<f64>, ObjectiveReport)> = None;
    let mut best_feasible: Option<(Vec<f64>, ObjectiveReport)> = None;
    let mut trace = Vec::with_capacity(settings.iterations);
    let mut diagnostics = Vec::new();

    for iteration in 0..settings.iterations {
        if iteration > 0 {
            let (g, _) = gbest.as_ref().expect("set after the first evaluation");
            for p in &mut swarm {
                for j in 0..dim {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let v = settings.inertia * p.velocity[j]
                        + settings.cognitive * r1 * (p.best_position[j] - p.position[j])
                        + settings.social * r2 * (g[j] - p.position[j]);
                    let v = v.clamp(-v_max, v_max);
                    let x = p.position[j] + v;
                    // stop at the wall and bounce back at half speed
                    if x < 0.0 || x > upper {
                        p.position[j] = x.clamp(0.0, upper);
                        p.velocity[j] = -0.5 * v;
                    } else {
                        p.position[j] = x;
                        p.velocity[j] = v;
                    }
                }
            }
        }

        let grids: Vec<Vec<f64>> = swarm.iter().map(|p| space.repair(&p.position)).collect();
        let keys: Vec<Vec<u32>> = grids.iter().map(|g| space.step_counts(g)).collect();
        let mut pending: Vec<usize> = Vec::new();
        for (i, key) in keys.iter().enumerate() {
            if !cache.contains_key(key) && !pending.iter().any(|&k| keys[k] == *key) {
                pending.push(i);
            }
        }
        let fresh: Vec<Result<ObjectiveReport, OptimizeError>> = pool.install(|| {
            pending
                .par_iter()
                .map(|&i| evaluator.evaluate(&space.decode(&grids[i])))
                .collect()
        });
        for (&i, report) in pending.iter().zip(fresh) {
            cache.insert(keys[i].clone(), report?);
        }

        let mut all_failed = true;
        for (i, p) in swarm.iter_mut().enumerate() {
            let report = &cache[&keys[i]];
            all_failed &= !report.converged();
            if report.fitness_kw < p.best_fitness {
                p.best_fitness = report.fitness_kw;
                p.best_position.clone_from(&grids[i]);
            }
            if gbest.as_ref().is_none_or(|(_, g)| report.fitness_kw < g.fitness_kw) {
                gbest = Some((grids[i].clone(), report.clone()));
            }
            if report.feasible
                && best_feasible
                    .as_ref()
                    .is_none_or(|(_, b)| report.expected_loss_kw < b.expected_loss_kw)
            {
                best_feasible = Some((grids[i].clone(), report.clone()));
            }
        }
        if all_failed {
            diagnostics.push(format!(
                "iteration {}: no particle produced a converged power flow in every state",
                iteration + 1
            ));
        }
        trace.push(gbest.as_ref().expect("swarm is non-empty").1.fitness_kw);
    }

    let (grid, report) = best_feasible.or(gbest).expect("at least one iteration ran");
    if !report.feasible {
        diagnostics.push(format!(
            "no feasible allocation found; best violates voltage limits by {:.6} pu (weighted)",
            report.violation_pu
        ));
    }
    Ok(PsoOutcome {
        allocation: space.decode(&grid),
        report,
        trace,
        evaluations: cache.len(),
        diagnostics,
    })
}
