//! Evaluates the finite-sample estimation error bound for growing sample sizes.

use sglig::eval::{bound_inputs_from_design, error_bound};
use sglig::models::{default_weights, ModelKind};
use sglig::synth::{make_problem, sample_dataset, ScenarioKind, ScenarioSpec};

fn main() -> sglig::Result<()> {
    let problem = make_problem(&ScenarioSpec::new(ScenarioKind::Random, 50, 2), 4, 4.0)?;
    println!("     n  sigma*/n   tau_max   kappa_L      bound");
    for n in [200, 800, 3200] {
        let data = sample_dataset(&problem, n, 1.0, n as u64)?;
        let w = default_weights(ModelKind::Srig, &data.x, data.y.view(), &problem.graph)?;
        let inputs = bound_inputs_from_design(&data.x, &problem.graph, &w, &problem.support, 1.0)?;
        println!(
            "{n:>6} {:>9.3} {:>9.2} {:>9.4} {:>10.3e}",
            inputs.sigma_max_star / n as f64,
            inputs.tau_max,
            inputs.kappa_l,
            error_bound(&inputs)?
        );
    }
    Ok(())
}
