//! Fit a sparse GP to a smooth 2-D function, check it against the exact GP,
//! and round-trip the model through its JSON artifact.

use couplekit::sgp::{default_inducing_count, exact_equivalence_gap, fit, FitConfig, ModelArtifact};
use couplekit::space::{DesignSpace, DesignVariable, Role};
use couplekit::sampling::latin_hypercube;

fn truth(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() + 0.5 * x[1] * x[1]
}

fn main() -> couplekit::Result<()> {
    let space = DesignSpace::new(vec![
        DesignVariable::new("u", 0.0, 1.0, 0.5, Role::Plant),
        DesignVariable::new("v", 0.0, 1.0, 0.5, Role::Plant),
    ])?;
    let x = latin_hypercube(&space, 120, 1)?.inputs;
    let y: Vec<f64> = x.iter().map(|p| truth(p)).collect();
    let probe = latin_hypercube(&space, 200, 2)?.inputs;

    let config = FitConfig::default();
    let m = default_inducing_count(x.len());
    let sparse = fit(&x, &y, m, 0, &config)?;
    let k = sparse.kernel();
    println!(
        "m = {m}: sf2 {:.3}, length {:.3}, noise {:.2e}, lml {:.2}",
        k.signal_variance(),
        k.length_scale(),
        k.noise_variance(),
        sparse.log_marginal_likelihood()
    );
    let rmse = (probe.iter().map(|p| (sparse.predict(p).unwrap().0 - truth(p)).powi(2)).sum::<f64>()
        / probe.len() as f64)
        .sqrt();
    println!("held-out rmse {rmse:.2e}");

    // with every sample as an inducing point the approximation is exact
    let small = &x[..30];
    let full = fit(small, &y[..30], 30, 0, &config)?;
    println!("Z = X gap to the exact GP: {:.1e}", exact_equivalence_gap(&full, small, &y[..30], &probe)?);

    let artifact = ModelArtifact::from_model(&sparse, "f", &space.names());
    let back = ModelArtifact::from_json(&artifact.to_json())?.into_model()?;
    let p = [0.3, 0.8];
    println!("artifact round trip: {:?} == {:?}", sparse.predict(&p)?, back.predict(&p)?);
    Ok(())
}
