//! Tunes every model on one simulated dataset and prints the selected grid points.

use sglig::eval::{make_splits, tune, SplitScheme, TuneConfig};
use sglig::models::ModelKind;
use sglig::synth::{make_problem, sample_dataset, ScenarioKind, ScenarioSpec};

fn main() -> sglig::Result<()> {
    let problem = make_problem(&ScenarioSpec::new(ScenarioKind::TwoClass, 100, 11), 4, 4.0)?;
    let data = sample_dataset(&problem, 480, 5.0, 12)?;
    let split = make_splits(data.n(), &SplitScheme::FixedCounts { n_train: 40, n_val: 40, n_test: 400, seed: 13 })?
        .remove(0);
    let mut config = TuneConfig::default();
    config.grid.dsrig_n_lambda = Some(10);
    config.grid.n_xi = 10;

    for kind in ModelKind::ALL {
        let r = tune(&data, &problem.graph, kind, &config, &split, Some(problem.beta_true.view()))?;
        println!(
            "{:<6} grid {:>4}  best {:?}  test mse {:.3}  l2 {:.3}  {:.2}s",
            kind.name(),
            r.entries.len(),
            r.best_params,
            r.test_mse_original,
            r.l2_distance.unwrap_or(f64::NAN),
            r.wall_time
        );
    }
    Ok(())
}
