//! Brute-force optimum over every on-grid allocation of a search space,
//! ranked the way the optimizer ranks its final answer: the lowest-loss
//! feasible allocation if any exists, otherwise the lowest fitness.

#![allow(dead_code)]

use dgsite::dg::DgKind;
use dgsite::optimizer::{Allocation, Evaluator, ObjectiveReport, SearchSpace};

pub struct Exhaustive {
    pub allocation: Allocation,
    pub report: ObjectiveReport,
    pub enumerated: usize,
}

/// Every vector of `slots` step counts in `0..=max` summing to `total`.
fn compositions(slots: usize, total: i64, max: i64) -> Vec<Vec<i64>> {
    fn rec(slots: usize, total: i64, max: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if slots == 0 {
            if total == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for k in 0..=max.min(total) {
            if total - k > max * (slots as i64 - 1) {
                continue;
            }
            prefix.push(k);
            rec(slots - 1, total - k, max, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(slots, total, max, &mut Vec::new(), &mut out);
    out
}

fn better(a: &ObjectiveReport, b: &ObjectiveReport) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.expected_loss_kw < b.expected_loss_kw,
        (false, false) => a.fitness_kw < b.fitness_kw,
    }
}

pub fn exhaustive_optimum(evaluator: &Evaluator<'_>, space: &SearchSpace) -> Exhaustive {
    let step = space.sizing().step_kw;
    let per_kind: Vec<Vec<Vec<i64>>> = DgKind::ALL
        .iter()
        .map(|&k| compositions(space.kind_range(k).len(), space.target_steps(k), space.max_steps()))
        .collect();

    let mut best: Option<(Allocation, ObjectiveReport)> = None;
    let mut enumerated = 0;
    for w in &per_kind[0] {
        for s in &per_kind[1] {
            for b in &per_kind[2] {
                let grid: Vec<f64> = w.iter().chain(s).chain(b).map(|&c| c as f64 * step).collect();
                let allocation = space.decode(&grid);
                let report = evaluator.evaluate(&allocation).expect("enumerated allocations are valid");
                enumerated += 1;
                if best.as_ref().is_none_or(|(_, r)| better(&report, r)) {
                    best = Some((allocation, report));
                }
            }
        }
    }
    let (allocation, report) = best.expect("search space is non-empty");
    Exhaustive {
        allocation,
        report,
        enumerated,
    }
}

#[test]
fn composition_counts() {
    // C(n + k - 1, k) without a cap
    assert_eq!(compositions(3, 2, 2).len(), 6);
    assert_eq!(compositions(3, 4, 4).len(), 15);
    // with a cap of 1, only subsets
    assert_eq!(compositions(4, 2, 1).len(), 6);
    assert_eq!(compositions(2, 5, 2).len(), 0);
}
