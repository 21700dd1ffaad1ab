//! Greedy maximization of weighted coverage under a cardinality bound.

use causal_imputation::submodular::{
    brute_force_extremum, greedy_maximize, ConstraintOracle, Direction, SetFunction, Subset,
};

fn main() -> causal_imputation::Result<()> {
    let sensors: [&[usize]; 5] = [&[0, 1, 2], &[2, 3], &[3, 4, 5], &[0, 5], &[1, 4]];
    let weights = [3.0, 1.0, 2.0, 2.0, 1.0, 4.0];
    let f = SetFunction::new(sensors.len(), move |s: Subset| {
        let mut covered = [false; 6];
        for i in s.members() {
            for &k in sensors[i] {
                covered[k] = true;
            }
        }
        covered.iter().zip(&weights).filter(|(c, _)| **c).map(|(_, w)| w).sum()
    })?;

    for k in 1..=3 {
        let constraint = ConstraintOracle::cardinality(k);
        let g = greedy_maximize(&f, &constraint);
        let (opt, best) = brute_force_extremum(&f, &constraint, Direction::Maximize)?;
        println!("k = {k}: greedy {g} covers {}, optimum {opt} covers {best}", f.eval(g));
    }
    Ok(())
}
