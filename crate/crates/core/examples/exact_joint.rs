//! Exact joint of a binary rain/sprinkler/wet-grass model, with and
//! without an intervention on the sprinkler.

use causal_imputation::graph::Dag;
use causal_imputation::sem::{ConditionalTable, Domain, ImputationPlan, Mechanism, NodeModel, Sem};

fn main() -> causal_imputation::Result<()> {
    let dag = Dag::with_edges(3, [(0, 1), (0, 2), (1, 2)]).validate()?;
    let binary = |t: ConditionalTable| NodeModel::new(Domain::Finite(2), Mechanism::Table(t));
    let sem = Sem::new(
        dag,
        vec![
            binary(ConditionalTable::root(vec![0.8, 0.2])),
            binary(ConditionalTable::new(vec![vec![0.6, 0.4], vec![0.99, 0.01]])),
            // Rows: (rain, sprinkler) = 00, 01, 10, 11.
            binary(ConditionalTable::new(vec![
                vec![1.0, 0.0],
                vec![0.1, 0.9],
                vec![0.2, 0.8],
                vec![0.01, 0.99],
            ])),
        ],
    )?;

    let joint = sem.exact_joint()?;
    for (idx, p) in joint.probs().iter().enumerate() {
        println!("P(rain, sprinkler, wet = {:?}) = {p:.4}", joint.tuple(idx));
    }
    let wet = joint.marginal(&[2]);
    println!("P(wet) = {:.4}", wet.prob(&[1]));

    let forced = sem.exact_joint_under(&ImputationPlan::scalar(&[1], &[1.0])?)?;
    println!("P(wet | do(sprinkler = on)) = {:.4}", forced.marginal(&[2]).prob(&[1]));
    Ok(())
}
