//! Consensus graph from neighborhood selection on bootstrap-style row subsets.

use sglig::graph_est::{consensus, mb_estimate, MbConfig};
use sglig::numerics::SeededRng;
use sglig::synth::{make_problem, sample_dataset, standardize, ScenarioKind, ScenarioSpec};

fn main() -> sglig::Result<()> {
    let problem = make_problem(&ScenarioSpec::new(ScenarioKind::Blockwise, 40, 5), 4, 4.0)?;
    let data = sample_dataset(&problem, 400, 1.0, 6)?;
    let mut rng = SeededRng::new(7);
    let mut graphs = Vec::new();
    for _ in 0..20 {
        let rows = rng.sample_distinct(data.n(), 300);
        let x = standardize(&data, &rows)?.rows(&rows).0;
        graphs.push(mb_estimate(&x, &MbConfig { lambda: 0.3, ..MbConfig::default() })?);
    }
    for threshold in [5, 10, 15] {
        let (counts, g) = consensus(&graphs, threshold)?;
        let hits = g.edges().filter(|&(i, j)| problem.graph.has_edge(i, j)).count();
        println!(
            "more than {threshold:>2} of {}: {:>3} edges, {hits} true (of {})",
            counts.total,
            g.n_edges(),
            problem.graph.n_edges()
        );
    }
    Ok(())
}
