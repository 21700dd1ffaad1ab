//! Builds a small DAG, prints its topological order, ancestry and path
//! counts, then shows the error for a cyclic edge list.

use causal_imputation::graph::Dag;

fn main() -> causal_imputation::Result<()> {
    let dag = Dag::with_edges(5, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).validate()?;
    println!("topological order: {:?}", dag.topological_order());
    for v in 0..dag.node_count() {
        let anc: Vec<_> = dag.ancestors(v).ones().collect();
        let desc: Vec<_> = dag.descendants(v).ones().collect();
        println!(
            "node {v}: parents {:?}, ancestors {anc:?}, descendants {desc:?}",
            dag.parents(v)
        );
    }
    println!("paths 0 -> 4: {}", dag.path_count(0, 4));
    println!("unique path 1 -> 4: {}", dag.unique_path_to(1, 4));

    match Dag::with_edges(3, [(0, 1), (1, 2), (2, 0)]).validate() {
        Err(e) => println!("cyclic input rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
