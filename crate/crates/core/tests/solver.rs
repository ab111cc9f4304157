use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orbitope_mpc::cones::{svec, Cone};
use orbitope_mpc::conic::{solve, ConicProgram, ConstraintBlock, SolveStatus, SolverSettings};
use orbitope_mpc::numerics::SmallMatrix;

fn dense_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, f64)> {
    (0..n).map(|j| (j, rng.gen_range(-1.0..1.0))).collect()
}

fn at(row: &[(usize, f64)], x: &[f64]) -> f64 {
    row.iter().map(|&(j, a)| a * x[j]).sum()
}

/// Convex program with one of each cone, built around a point `x0` that is
/// strictly feasible for every inequality block.
fn feasible_program(seed: u64) -> (ConicProgram, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..7);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut prog = ConicProgram::new(n);
    for _ in 0..rng.gen_range(1..4) {
        let row = dense_row(&mut rng, n);
        prog.add_squared_affine(&row, rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0)).unwrap();
    }
    for j in 0..n {
        prog.add_linear(j, rng.gen_range(-1.0..1.0)).unwrap();
        prog.set_bounds(j, x0[j] - rng.gen_range(0.2..2.0), x0[j] + rng.gen_range(0.2..2.0)).unwrap();
    }

    // offsets − rows·x0 = chosen interior slack
    let mut block = |cone: Cone, slack: Vec<f64>, rng: &mut ChaCha8Rng| {
        let rows: Vec<_> = (0..slack.len()).map(|_| dense_row(rng, n)).collect();
        let offsets = rows.iter().zip(&slack).map(|(r, s)| at(r, &x0) + s).collect();
        prog.add_block(ConstraintBlock::new(cone, rows, offsets).unwrap()).unwrap();
    };
    block(Cone::Zero(1), vec![0.0], &mut rng);
    let k = rng.gen_range(1..3);
    block(Cone::Nonnegative(k), (0..k).map(|_| rng.gen_range(0.05..1.0)).collect(), &mut rng);
    let v: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let t = v.iter().map(|a| a * a).sum::<f64>().sqrt() + rng.gen_range(0.05..1.0);
    block(Cone::SecondOrder(3), vec![t, v[0], v[1]], &mut rng);
    let (a, b) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
    let c = rng.gen_range(-0.9..0.9) * (a * b as f64).sqrt();
    let s = SmallMatrix::from_rows(&[[a, c], [c, b]]).unwrap();
    block(Cone::PositiveSemidefinite { side: 2 }, svec(&s), &mut rng);
    (prog, x0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // A program with a strictly feasible point is never certified
    // infeasible, and the solution beats that point.
    #[test]
    fn feasible_programs_solve(seed in any::<u64>()) {
        let (prog, x0) = feasible_program(seed);
        let settings = SolverSettings::default().with_tol(1e-7);
        let r = solve(&prog, &settings).unwrap();
        prop_assert_eq!(r.status, SolveStatus::Optimal);
        let f0 = prog.objective(&x0);
        let scale = f0.abs().max(1.0);
        prop_assert!(r.objective <= f0 + 1e-5 * scale, "{} vs {f0}", r.objective);
        prop_assert!(prog.max_violation(&r.x) <= 1e-5, "violation {}", prog.max_violation(&r.x));
        prop_assert!(r.bound <= r.objective + 1e-4 * scale, "bound {} above {}", r.bound, r.objective);
    }

    // The dual bound never passes a cutoff placed above the optimum, so the
    // cutoff cannot stop a solve that would have beaten it.
    #[test]
    fn cutoff_above_optimum_changes_nothing(seed in any::<u64>()) {
        let (prog, x0) = feasible_program(seed);
        let plain = solve(&prog, &SolverSettings::default().with_tol(1e-7)).unwrap();
        let mut settings = SolverSettings::default().with_tol(1e-7);
        settings.cutoff = Some(plain.objective + 1e-3 * prog.objective(&x0).abs().max(1.0));
        let cut = solve(&prog, &settings).unwrap();
        prop_assert_eq!(cut.status, SolveStatus::Optimal);
        prop_assert_eq!(cut.iterations, plain.iterations);
    }
}

#[test]
fn cutoff_below_optimum_stops_early() {
    let (prog, _) = feasible_program(15);
    let plain = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(plain.status, SolveStatus::Optimal);
    let mut settings = SolverSettings::default();
    settings.cutoff = Some(plain.objective - 0.5);
    let cut = solve(&prog, &settings).unwrap();
    assert_eq!(cut.status, SolveStatus::IterLimit);
    assert!(cut.bound > plain.objective - 0.5);
    assert!(cut.iterations * 4 < plain.iterations, "{} vs {}", cut.iterations, plain.iterations);
}
