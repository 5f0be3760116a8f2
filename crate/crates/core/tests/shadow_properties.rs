mod common;

use proptest::prelude::*;
use shadowlab::lp::{basis_point, is_feasible_basis, is_optimal_basis, oracle_solve, SolveStatus};
use shadowlab::perturb::unit_direction;
use shadowlab::polar::{shadow_vertices, PlaneBasis};
use shadowlab::shadow::{shadow_vertex_run, Entering, ShadowOptions, ShadowStatus};
use shadowlab::{Basis, LpInstance};

/// A unit instance, a start objective and a basis optimal for it.
fn setup(seed: u64, d: usize, n: usize) -> Option<(LpInstance, nalgebra::DVector<f64>, Basis)> {
    let mut rng = common::rng(seed);
    let inst = common::unit_instance(d, n, 0.1, &mut rng);
    let d_obj = unit_direction(d, &mut rng);
    match oracle_solve(&inst.with_objective(d_obj.clone()).ok()?) {
        Ok(SolveStatus::Optimal { basis, .. }) => Some((inst, d_obj, basis)),
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_is_valid_monotone_and_short(seed in any::<u64>(), d in 2usize..=4, extra in 2usize..=7) {
        let Some((inst, d_obj, start)) = setup(seed, d, d + extra) else { return Ok(()); };
        let run = match shadow_vertex_run(&inst, inst.c(), &d_obj, &start, &ShadowOptions::default()) {
            Ok(run) => run,
            Err(e) if e.is_degenerate() => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for pair in run.trace.windows(2) {
            prop_assert!(pair[1].objective_value >= pair[0].objective_value - 1e-9);
            let before: Vec<usize> = pair[0].basis_before.sorted();
            let after: Vec<usize> = pair[1].basis_before.sorted();
            prop_assert_eq!(before.iter().filter(|i| !after.contains(i)).count(), 1);
        }
        for step in &run.trace {
            prop_assert!(is_feasible_basis(&inst, &step.basis_before).unwrap());
            if let Entering::Row(j) = step.entering {
                prop_assert!(!step.basis_before.contains(j));
            }
        }
        let w = PlaneBasis::from_span(&d_obj, inst.c()).unwrap();
        if let Ok(count) = shadow_vertices(&inst, &w) {
            prop_assert!(run.pivot_count <= count, "{} pivots, {} shadow vertices", run.pivot_count, count);
        }
    }

    #[test]
    fn endpoint_matches_oracle_and_reverses(seed in any::<u64>(), d in 2usize..=4, extra in 2usize..=7) {
        let Some((inst, d_obj, start)) = setup(seed, d, d + extra) else { return Ok(()); };
        let Ok(run) = shadow_vertex_run(&inst, inst.c(), &d_obj, &start, &ShadowOptions::default()) else {
            return Ok(());
        };
        let Ok(want) = oracle_solve(&inst) else { return Ok(()); };
        match (&run.status, &want) {
            (ShadowStatus::Optimal(basis), SolveStatus::Optimal { value, .. }) => {
                let got = inst.objective_value(&basis_point(&inst, basis).unwrap());
                prop_assert!((got - value).abs() <= 1e-7 * value.abs().max(1.0));
                let Ok(back) = shadow_vertex_run(&inst, &d_obj, inst.c(), basis, &ShadowOptions::default()) else {
                    return Ok(());
                };
                match back.status {
                    ShadowStatus::Optimal(b) => prop_assert!(is_optimal_basis(&inst, &b, &d_obj).unwrap()),
                    other => prop_assert!(false, "reverse run ended {:?}", other),
                }
            }
            (ShadowStatus::Unbounded { ray }, SolveStatus::Unbounded { .. }) => {
                prop_assert!(inst.c().dot(ray) > 0.0);
                prop_assert!((inst.a() * ray).iter().all(|&v| v <= 1e-9));
            }
            (got, want) => prop_assert!(false, "run ended {:?}, oracle says {}", got, want.label()),
        }
    }
}
