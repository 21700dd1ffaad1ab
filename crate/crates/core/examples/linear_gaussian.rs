//! Linear-Gaussian trellis: exact enumeration of imputation sets with the
//! optimal values from a linear solve, checked against simulation.

use causal_imputation::linear_gaussian::TrellisProblem;
use causal_imputation::oci::{evaluate, ExpectationMode};
use causal_imputation::submodular::Subset;
use nalgebra::DMatrix;

fn main() -> causal_imputation::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.0, 0.7]);
    let horizon = 2;
    let n = 2 * (horizon + 1);
    let problem = TrellisProblem::new(
        a,
        0.5,
        horizon,
        vec![0.1; n],
        vec![3.0, 3.0, 1.5, 1.5, 0.6, 0.6],
        vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0],
    )?;

    let best = problem.enumerate_solve()?;
    println!("optimal set {:?}, objective {:.4}", best.nodes, best.objective);
    for (node, value) in best.nodes.iter().zip(&best.values) {
        println!("  x[state {}, t {}] = {:+.4}", node % 2, node / 2, value[0]);
    }

    let s = best.subset();
    let (xbar, value) = problem.inner_minimize(s)?;
    let sim = evaluate(
        &problem.to_oci_problem()?,
        &problem.plan(s, &xbar),
        ExpectationMode::MonteCarlo {
            samples: 100_000,
            seed: 5,
        },
    )?;
    println!(
        "analytic {value:.4}, simulated {:.4} ± {:.4}",
        sim.objective, sim.std_error
    );
    println!(
        "empty set: {:.4}",
        problem.analytic_objective(Subset::EMPTY, &nalgebra::DVector::zeros(n))?
    );
    Ok(())
}
