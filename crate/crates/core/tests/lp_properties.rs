mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use shadowlab::lp::{basis_point, feasible_vertices, is_feasible_basis, is_optimal_basis, oracle_solve, SolveStatus};
use shadowlab::{Basis, LpInstance};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_basis_dominates_every_feasible_vertex(seed in any::<u64>(), d in 2usize..=4, extra in 1usize..=5) {
        let mut rng = common::rng(seed);
        let inst = common::unit_instance(d, d + extra, 0.2, &mut rng);
        let vertices = feasible_vertices(&inst).unwrap();
        for (basis, x) in &vertices {
            if is_optimal_basis(&inst, basis, inst.c()).unwrap() {
                let best = inst.objective_value(x);
                for (_, y) in &vertices {
                    prop_assert!(inst.objective_value(y) <= best + 1e-9 * (1.0 + best.abs()));
                }
            }
        }
    }

    #[test]
    fn feasible_basis_matches_direct_evaluation(seed in any::<u64>(), d in 2usize..=4, extra in 0usize..=5) {
        let mut rng = common::rng(seed);
        let inst = common::smooth_instance(d, d + extra, 0.3, &mut rng);
        let mut rows: Vec<usize> = (0..inst.n()).collect();
        rows.shuffle(&mut rng);
        let basis = Basis::new(rows[..d].to_vec());
        let Ok(x) = basis_point(&inst, &basis) else { return Ok(()); };
        let direct = (0..inst.n()).all(|i| inst.row(i).dot(&x) <= inst.b()[i] + inst.feasibility_tol());
        prop_assert_eq!(is_feasible_basis(&inst, &basis).unwrap(), direct);
        for (k, &i) in basis.indices().iter().enumerate() {
            prop_assert!((inst.row(i).dot(&x) - inst.b()[i]).abs() < 1e-8, "row {} at position {}", i, k);
        }
    }

    #[test]
    fn oracle_status_ignores_row_order(seed in any::<u64>(), d in 2usize..=3, extra in 0usize..=6) {
        let mut rng = common::rng(seed);
        let inst = common::smooth_instance(d, d + extra, 0.3, &mut rng);
        let Ok(want) = oracle_solve(&inst) else { return Ok(()); };
        let mut perm: Vec<usize> = (0..inst.n()).collect();
        perm.shuffle(&mut rng);
        let shuffled = LpInstance::new(
            common::permute_rows(inst.a(), &perm),
            DVector::from_fn(inst.n(), |i, _| inst.b()[perm[i]]),
            inst.c().clone(),
        ).unwrap();
        let got = oracle_solve(&shuffled).unwrap();
        prop_assert_eq!(got.label(), want.label());
        if let (Some(a), Some(b)) = (got.value(), want.value()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn oracle_value_scales_with_objective(seed in any::<u64>(), d in 2usize..=4, extra in 1usize..=5, scale in 0.01f64..100.0) {
        let mut rng = common::rng(seed);
        let inst = common::mostly_bounded_instance(d, d + extra, 0.3, &mut rng);
        let Ok(SolveStatus::Optimal { basis, value, .. }) = oracle_solve(&inst) else { return Ok(()); };
        let scaled = inst.with_objective(inst.c() * scale).unwrap();
        match oracle_solve(&scaled).unwrap() {
            SolveStatus::Optimal { basis: b2, value: v2, .. } => {
                prop_assert!((v2 - scale * value).abs() <= 1e-9 * (1.0 + (scale * value).abs()));
                prop_assert_eq!(b2.sorted(), basis.sorted());
            }
            other => prop_assert!(false, "status changed to {}", other.label()),
        }
    }
}
