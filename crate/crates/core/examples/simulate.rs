//! Builds one problem per scenario and prints its calibration and truth.
//!
//! ```text
//! cargo run --example simulate -- [p] [seed]
//! ```

use sglig::synth::{make_problem, sample_dataset, ScenarioKind, ScenarioSpec};

fn main() -> sglig::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(100);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    println!("scenario    edges   delta     support  |beta|_2");
    for kind in ScenarioKind::ALL {
        let problem = make_problem(&ScenarioSpec::new(kind, p, seed), 4, 4.0)?;
        let norm = problem.beta_true.dot(&problem.beta_true).sqrt();
        println!(
            "{:<10} {:>6} {:>9.5} {:>8} {:>9.3}",
            kind.name(),
            problem.graph.n_edges(),
            problem.delta,
            problem.support.len(),
            norm
        );
    }

    let problem = make_problem(&ScenarioSpec::new(ScenarioKind::TwoClass, p, seed), 4, 4.0)?;
    let data = sample_dataset(&problem, 480, 5.0, seed)?;
    println!("\ntwo_class sample: n = {}, p = {}, var(y) = {:.2}", data.n(), data.p(), data.y.var(1.0));
    Ok(())
}
