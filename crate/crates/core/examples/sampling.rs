//! Latin hypercube sampling of a design space, and the normalized view the
//! surrogates are trained on.

use couplekit::bench::fowt_space;
use couplekit::sampling::latin_hypercube;

fn main() -> couplekit::Result<()> {
    let space = fowt_space();
    let ds = latin_hypercube(&space, 12, 7)?;
    let u = ds.normalized_inputs(&space)?;

    println!("{} samples over {} variables", ds.len(), space.dim());
    for (d, var) in space.variables().iter().enumerate() {
        // each of the 12 equal-width bins holds exactly one sample
        let mut strata: Vec<usize> = u.iter().map(|row| (row[d] * 12.0).floor() as usize).collect();
        strata.sort_unstable();
        let lo = ds.inputs.iter().map(|r| r[d]).fold(f64::INFINITY, f64::min);
        let hi = ds.inputs.iter().map(|r| r[d]).fold(f64::NEG_INFINITY, f64::max);
        println!("{:>10}  [{:>9.3}, {:>9.3}]  strata {:?}", var.name, lo, hi, strata);
    }

    let mut csv = Vec::new();
    ds.write_csv(&mut csv).unwrap();
    println!("\n{}", String::from_utf8_lossy(&csv).lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}
