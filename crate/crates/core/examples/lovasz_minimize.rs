//! Minimizes a submodular set function through its Lovász extension and
//! confirms the answer by exhaustive search.

use causal_imputation::submodular::{
    brute_force_extremum, is_submodular, lovasz_extension, minimize_single_value, ConstraintOracle, Direction,
    SetFunction, SubgradientOptions, Subset,
};

fn main() -> causal_imputation::Result<()> {
    // Graph cut on a 6-cycle plus unary rewards and penalties.
    let unary = [-2.0, 1.0, -0.5, 1.5, -1.0, 0.5];
    let f = SetFunction::new(6, move |s: Subset| {
        let cut = (0..6).filter(|&i| s.contains(i) != s.contains((i + 1) % 6)).count() as f64;
        cut + s.members().map(|i| unary[i]).sum::<f64>()
    })?;
    println!("submodular: {}", is_submodular(&f)?);
    println!("extension at (0.5, ..., 0.5): {:.3}", lovasz_extension(&f, &[0.5; 6])?);

    let min = minimize_single_value(&f, SubgradientOptions::default());
    println!(
        "subgradient: {} with value {} after {} iterations",
        min.set, min.value, min.iterations
    );
    let (set, value) = brute_force_extremum(&f, &ConstraintOracle::Unconstrained, Direction::Minimize)?;
    println!("exhaustive:  {set} with value {value}");
    Ok(())
}
