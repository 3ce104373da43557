//! The .dt3 container and run manifests: save a tensor and a mask, reload
//! them bitwise, and round-trip a solver configuration through its manifest.
//!
//! Run with: cargo run --release --example tensor_file_io

use lrfmtc::experiments::{generate_tucker, make_mask, MaskSpec, SyntheticSpec};
use lrfmtc::io::{load_mask, load_tensor, save_mask, save_tensor, RunManifest};

fn main() -> lrfmtc::Result<()> {
    let dir = std::env::temp_dir().join("lrfmtc_io_demo");
    std::fs::create_dir_all(&dir)?;

    let (tensor, _) = generate_tucker(&SyntheticSpec::new([6, 5, 4], [2, 2, 2], 1))?;
    let tensor_path = dir.join("demo.dt3");
    save_tensor(&tensor_path, &tensor)?;
    let back = load_tensor(&tensor_path)?;
    let bitwise = tensor
        .data()
        .iter()
        .zip(back.data())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("tensor roundtrip through {} bitwise: {bitwise}", tensor_path.display());

    let mask = make_mask([6, 5, 4], &MaskSpec::random(0.5, 2))?;
    let mask_path = dir.join("demo.mask.dt3");
    save_mask(&mask_path, &mask)?;
    println!(
        "mask roundtrip observed count: {} -> {}",
        mask.observed_count(),
        load_mask(&mask_path)?.observed_count()
    );

    let mut manifest = RunManifest::default();
    manifest.seed = 99;
    manifest.solver.alpha = 12.0;
    let manifest_path = dir.join("demo.manifest.txt");
    manifest.save(&manifest_path)?;
    let reloaded = RunManifest::load(&manifest_path)?;
    println!(
        "manifest roundtrip: seed {} alpha {} (matches: {})",
        reloaded.seed,
        reloaded.solver.alpha,
        reloaded == manifest
    );
    Ok(())
}
