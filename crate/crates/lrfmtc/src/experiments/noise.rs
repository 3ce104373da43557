//! Noise models for the completion experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::util::neumaier_sum;

/// Additive or signal-dependent corruption of a dense tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Additive i.i.d. Gaussian noise calibrated so
    /// `10 log10(var(signal) / var(noise))` equals `snr_db`.
    GaussianSnr { snr_db: f64 },
    /// Shot noise: each entry is replaced by `Poisson(scale * (x - min)) /
    /// scale + min`, so brighter regions are noisier. Larger `scale` means
    /// less noise.
    Poisson { scale: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::GaussianSnr { snr_db } => {
                if !snr_db.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "snr_db must be finite, got {snr_db}"
                    )));
                }
                Ok(())
            }
            NoiseSpec::Poisson { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "poisson scale must be positive and finite, got {scale}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Population variance over all entries.
fn variance(t: &Tensor3) -> f64 {
    let n = t.len() as f64;
    let mean = neumaier_sum(t.data().iter().copied()) / n;
    neumaier_sum(t.data().iter().map(|&v| (v - mean) * (v - mean))) / n
}

/// Applies `spec` to `x` using a dedicated seeded stream.
pub fn apply_noise(x: &Tensor3, spec: &NoiseSpec, seed: u64) -> Result<Tensor3> {
    spec.validate()?;
    match spec {
        NoiseSpec::None => Ok(x.clone()),
        NoiseSpec::GaussianSnr { snr_db } => {
            let var_noise = variance(x) * 10f64.powf(-snr_db / 10.0);
            let mut out = x.clone();
            if var_noise > 0.0 {
                let normal = Normal::new(0.0, var_noise.sqrt())
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for v in out.data_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
            Ok(out)
        }
        NoiseSpec::Poisson { scale } => {
            let min = x.data().iter().cloned().fold(f64::INFINITY, f64::min);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = x.clone();
            for v in out.data_mut() {
                let rate = scale * (*v - min);
                let draw = if rate > 0.0 {
                    Poisson::new(rate)
                        .map_err(|e| Error::Numerical(format!("poisson rate {rate}: {e}")))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
                *v = draw / scale + min;
            }
            Ok(out)
        }
    }
}
