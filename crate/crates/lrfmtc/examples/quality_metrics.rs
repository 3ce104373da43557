//! RSE, PSNR and SSIM on a pair of tensors at a few corruption levels.
//!
//! Run with: cargo run --release --example quality_metrics

use lrfmtc::experiments::{apply_noise, generate_tucker, psnr, rse, ssim, NoiseSpec, SyntheticSpec};

fn main() -> lrfmtc::Result<()> {
    let (truth, _) = generate_tucker(&SyntheticSpec::new([32, 32, 8], [3, 3, 2], 3))?;
    let peak = truth.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));

    println!("{:>8} {:>10} {:>10} {:>8}", "snr", "rse", "psnr", "ssim");
    for snr_db in [40.0, 20.0, 10.0] {
        let estimate = apply_noise(&truth, &NoiseSpec::GaussianSnr { snr_db }, 5)?;
        println!(
            "{snr_db:>6}dB {:>10.4} {:>8.2}dB {:>8.4}",
            rse(&truth, &estimate)?,
            psnr(&truth, &estimate, peak)?,
            ssim(&truth, &estimate, peak)?
        );
    }

    let exact = truth.clone();
    println!(
        "{:>8} {:>10.4} {:>10} {:>8.4}",
        "exact",
        rse(&truth, &exact)?,
        "inf",
        ssim(&truth, &exact, peak)?
    );
    Ok(())
}
