use super::{Allocation, SearchSpace};
use crate::dg::DgKind;

impl SearchSpace {
    /// Projects a raw position onto the sizing grid with exact per-kind totals.
    ///
    /// Per kind: clamp to `[0, per_bus_max]`, round to the nearest step, then
    /// add single steps in order of largest rounding remainder (or remove in
    /// order of smallest remainder) until the kind total is met. Ties go to
    /// the lowest bus id. Non-finite coordinates count as zero.
    pub fn repair(&self, raw: &[f64]) -> Vec<f64> {
        assert_eq!(raw.len(), self.dimension(), "position has the wrong dimension");
        let step = self.sizing.step_kw;
        let max_steps = self.max_steps();
        let mut out = vec![0.0; raw.len()];
        for kind in DgKind::ALL {
            let range = self.kind_range(kind);
            let target = self.target_steps(kind);
            let mut steps = Vec::with_capacity(range.len());
            let mut remainder = Vec::with_capacity(range.len());
            for &x in &raw[range.clone()] {
                let x = if x.is_finite() { x.clamp(0.0, self.sizing.per_bus_max_kw) } else { 0.0 };
                let q = x / step;
                let n = (q.round() as i64).clamp(0, max_steps);
                steps.push(n);
                remainder.push(q - n as f64);
            }
            let mut sum: i64 = steps.iter().sum();
            while sum < target {
                let i = pick(&remainder, |i| steps[i] < max_steps, |a, b| a > b)
                    .expect("spec total fits the candidate capacity");
                steps[i] += 1;
                remainder[i] -= 1.0;
                sum += 1;
            }
            while sum > target {
                let i = pick(&remainder, |i| steps[i] > 0, |a, b| a < b).expect("positive sum has a positive slot");
                steps[i] -= 1;
                remainder[i] += 1.0;
                sum -= 1;
            }
            for (o, n) in out[range].iter_mut().zip(steps) {
                *o = n as f64 * step;
            }
        }
        out
    }

    /// Integer step counts of an on-grid vector; handy as a cache key.
    pub fn step_counts(&self, grid: &[f64]) -> Vec<u32> {
        grid.iter().map(|kw| (kw / self.sizing.step_kw).round() as u32).collect()
    }
}

/// First eligible index whose remainder is strictly preferred over every
/// earlier one. Slots are sorted by bus id, so ties resolve to the lowest id.
fn pick(remainder: &[f64], eligible: impl Fn(usize) -> bool, better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in (0..remainder.len()).filter(|&i| eligible(i)) {
        if best.is_none_or(|b| better(remainder[i], remainder[b])) {
            best = Some(i);
        }
    }
    best
}

/// Repairs `raw` and decodes it into an allocation meeting every
/// penetration total exactly.
pub fn repair_penetration(raw: &[f64], space: &SearchSpace) -> Allocation {
    space.decode(&space.repair(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::optimizer::{CandidateBuses, PenetrationSpec, SizingRules};
    use proptest::prelude::*;

    fn wind_only(buses: Vec<u32>, total: f64, max: f64) -> SearchSpace {
        SearchSpace::new(
            &cases::ieee33(),
            PenetrationSpec {
                wind_kw: total,
                solar_kw: 0.0,
                biomass_kw: 0.0,
            },
            SizingRules {
                step_kw: 25.0,
                per_bus_max_kw: max,
            },
            &CandidateBuses {
                wind: Some(buses),
                solar: Some(vec![]),
                biomass: Some(vec![]),
            },
        )
        .unwrap()
    }

    #[test]
    fn on_grid_position_is_a_fixed_point() {
        let space = wind_only(vec![8, 9, 14, 18, 28, 30, 31], 400.0, 100.0);
        let raw = [75.0, 75.0, 75.0, 50.0, 25.0, 75.0, 25.0];
        assert_eq!(space.repair(&raw), raw.to_vec());
    }

    #[test]
    fn single_candidate_is_forced() {
        let space = wind_only(vec![12], 400.0, 400.0);
        for raw in [0.0, 13.0, 1e9, f64::NAN] {
            assert_eq!(space.repair(&[raw]), vec![400.0]);
        }
    }

    #[test]
    fn trims_to_total() {
        let space = wind_only(vec![8, 9, 14, 18, 28, 30, 31], 400.0, 100.0);
        let raw = [80.0, 80.0, 80.0, 60.0, 30.0, 80.0, 30.0];
        let out = space.repair(&raw);
        assert_eq!(out.iter().sum::<f64>(), 400.0);
        assert_eq!(out, vec![75.0, 75.0, 75.0, 50.0, 25.0, 75.0, 25.0]);

        // 90 rounds to 100 (remainder -0.4), 40 rounds to 50 (-0.4): the
        // surplus step leaves the lower bus id first.
        let space = wind_only(vec![3, 4], 125.0, 100.0);
        assert_eq!(space.repair(&[90.0, 40.0]), vec![75.0, 50.0]);
    }

    #[test]
    fn fills_deficit_by_largest_remainder() {
        let space = wind_only(vec![3, 4, 5], 100.0, 100.0);
        // 10/25 = 0.4 and 5/25 = 0.2 round to zero; bus 3 gets steps first
        assert_eq!(space.repair(&[10.0, 5.0, 0.0]), vec![50.0, 25.0, 25.0]);
    }

    proptest! {
        #[test]
        fn totals_always_exact(raw in proptest::collection::vec(-50.0f64..200.0, 96)) {
            let net = cases::ieee33();
            let space = SearchSpace::new(&net, PenetrationSpec::default(), SizingRules::default(), &CandidateBuses::default()).unwrap();
            let alloc = repair_penetration(&raw, &space);
            prop_assert!(space.violations(&alloc).is_empty(), "{:?}", space.violations(&alloc));
            let grid = space.repair(&raw);
            prop_assert_eq!(space.repair(&grid), grid);
        }
    }
}
