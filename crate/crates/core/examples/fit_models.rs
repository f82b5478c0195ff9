//! Fits SRIG, DSRIG and SGLIG once each on a simulated problem with the true graph.

use sglig::eval::l2_distance;
use sglig::models::{default_weights, lambda_max, radii_for, ModelKind, ModelParams, ModelSpec, RadiusMapping};
use sglig::solver::{fit, step_constant, SolverConfig};
use sglig::synth::{make_problem, sample_dataset, standardize, ScenarioKind, ScenarioSpec};

fn main() -> sglig::Result<()> {
    let problem = make_problem(&ScenarioSpec::new(ScenarioKind::TwoClass, 100, 7), 4, 4.0)?;
    let raw = sample_dataset(&problem, 200, 5.0, 8)?;
    let all: Vec<usize> = (0..raw.n()).collect();
    let data = standardize(&raw, &all)?;
    let graph = &problem.graph;
    let nbs = graph.neighborhoods();
    let sigma = step_constant(&data.x)?;
    let mapping = RadiusMapping::default();

    for kind in ModelKind::ALL {
        let w = default_weights(kind, &data.x, data.y.view(), graph)?;
        let lmax = lambda_max(&data.x, data.y.view(), &nbs, &w, &mapping)?;
        let params = match kind {
            ModelKind::Srig => ModelParams::Srig { lambda: 0.1 * lmax },
            ModelKind::Dsrig => ModelParams::Dsrig { lambda: 0.1 * lmax, xi: 0.5 },
            ModelKind::Sglig => ModelParams::Sglig { lambda_star: lmax / 5.0, alpha: 0.3 },
        };
        let spec = ModelSpec::new(params, w, graph.degrees())?;
        let radii = radii_for(&spec, &nbs, data.p(), sigma, &mapping)?;
        let res = fit(&data.x, data.y.view(), &radii, &SolverConfig::default())?;
        let beta = data.standardization.as_ref().expect("standardized").coefficients_to_original(res.beta.view());
        println!(
            "{:<6} iterations {:>5}  converged {:<5}  nonzero {:>3}  l2 to truth {:.3}",
            kind.name(),
            res.iterations,
            res.converged,
            res.beta.iter().filter(|b| b.abs() > 1e-8).count(),
            l2_distance(beta.view(), problem.beta_true.view())
        );
    }
    Ok(())
}
