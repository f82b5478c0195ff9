//! Neighborhood selection on a simulated two-class design, compared with the true graph.
//!
//! ```text
//! cargo run --example estimate_graph -- [n] [mb_lambda]
//! ```

use sglig::graph_est::{mb_estimate, MbConfig, SymmetrizationRule};
use sglig::synth::{make_problem, sample_dataset, standardize, ScenarioKind, ScenarioSpec};

fn main() -> sglig::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(500);
    let lambda: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);

    let problem = make_problem(&ScenarioSpec::new(ScenarioKind::TwoClass, 100, 3), 4, 4.0)?;
    let raw = sample_dataset(&problem, n, 5.0, 4)?;
    let all: Vec<usize> = (0..n).collect();
    let x = standardize(&raw, &all)?.x;
    let truth = &problem.graph;

    for rule in [SymmetrizationRule::Or, SymmetrizationRule::And] {
        let g = mb_estimate(&x, &MbConfig { lambda, rule, ..MbConfig::default() })?;
        let hits = g.edges().filter(|&(i, j)| truth.has_edge(i, j)).count();
        println!(
            "{rule:?}: {} edges, {hits} true ({} in the true graph)",
            g.n_edges(),
            truth.n_edges()
        );
    }
    Ok(())
}
