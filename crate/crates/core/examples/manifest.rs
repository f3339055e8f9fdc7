//! Run manifests: input/output digests, seeds, and phase timings, written next
//! to the outputs they describe.

use couplekit::manifest::{manifest_path_for, RunManifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("couplekit-manifest-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("squares.csv");

    let mut m = RunManifest::new("squares");
    m.seed("seed", 0);
    m.config(serde_json::json!({ "n": 5 }));
    let text = m.phase("compute", || (1..=5).map(|i| format!("{i},{}\n", i * i)).collect::<String>());
    std::fs::write(&out, text)?;
    m.output(&out)?;
    let path = manifest_path_for(&out);
    m.save(&path)?;

    let loaded = RunManifest::load(&path)?;
    println!("{}", std::fs::read_to_string(&path)?);
    println!("outputs verified: {}", loaded.verify_outputs()?);
    std::fs::write(&out, "tampered\n")?;
    println!("after edit:       {}", loaded.verify_outputs()?);
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
