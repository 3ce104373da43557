//! Reconstruction quality metrics: RSE, PSNR and single-scale SSIM.

use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::util::neumaier_sum;

/// Relative signal error `||truth - estimate||_F / ||truth||_F`.
pub fn rse(truth: &Tensor3, estimate: &Tensor3) -> Result<f64> {
    if truth.dims() != estimate.dims() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {:?} vs {:?}",
            truth.dims(),
            estimate.dims()
        )));
    }
    let denom = truth.fro_norm();
    if denom == 0.0 {
        return Err(Error::InvalidArgument("rse is undefined for a zero truth tensor".into()));
    }
    let diff = neumaier_sum(
        truth
            .data()
            .iter()
            .zip(estimate.data())
            .map(|(&t, &e)| (t - e) * (t - e)),
    )
    .sqrt();
    Ok(diff / denom)
}

/// `10 log10(peak^2 / MSE)` over all entries; `+inf` when the estimate is
/// exact.
pub fn psnr(truth: &Tensor3, estimate: &Tensor3, peak: f64) -> Result<f64> {
    if truth.dims() != estimate.dims() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {:?} vs {:?}",
            truth.dims(),
            estimate.dims()
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {peak}")));
    }
    let n = truth.len() as f64;
    let mse = neumaier_sum(
        truth
            .data()
            .iter()
            .zip(estimate.data())
            .map(|(&t, &e)| (t - e) * (t - e)),
    ) / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Mean single-scale SSIM over the frontal slices, computed with an 11x11
/// Gaussian window (sigma 1.5) at every fully interior position.
pub fn ssim(truth: &Tensor3, estimate: &Tensor3, peak: f64) -> Result<f64> {
    if truth.dims() != estimate.dims() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {:?} vs {:?}",
            truth.dims(),
            estimate.dims()
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("peak must be positive, got {peak}")));
    }
    let [rows, cols, slices] = truth.dims();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs frontal slices of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {rows}x{cols}"
        )));
    }

    let kernel = gaussian_kernel();
    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);

    let mut total = 0.0;
    let mut count = 0usize;
    for s in 0..slices {
        let x = truth.frontal_slice(s);
        let y = estimate.frontal_slice(s);
        // Separable filtering of the five statistics maps.
        let mu_x = filter(&kernel, x.data(), rows, cols);
        let mu_y = filter(&kernel, y.data(), rows, cols);
        let xx: Vec<f64> = x.data().iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.data().iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.data().iter().zip(y.data()).map(|(a, b)| a * b).collect();
        let e_xx = filter(&kernel, &xx, rows, cols);
        let e_yy = filter(&kernel, &yy, rows, cols);
        let e_xy = filter(&kernel, &xy, rows, cols);

        for i in 0..mu_x.len() {
            let mx = mu_x[i];
            let my = mu_y[i];
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cxy = e_xy[i] - mx * my;
            let val = ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += val;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut k = [0.0; SSIM_WINDOW];
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = (i as isize - half) as f64;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Valid-region separable Gaussian filter of a column-major `rows x cols`
/// image; output is `(rows - W + 1) x (cols - W + 1)` column-major.
fn filter(kernel: &[f64; SSIM_WINDOW], img: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let out_rows = rows - SSIM_WINDOW + 1;
    let out_cols = cols - SSIM_WINDOW + 1;
    // Vertical pass.
    let mut tmp = vec![0.0; out_rows * cols];
    for c in 0..cols {
        let col = &img[c * rows..(c + 1) * rows];
        for r in 0..out_rows {
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                acc += kv * col[r + t];
            }
            tmp[r + c * out_rows] = acc;
        }
    }
    // Horizontal pass.
    let mut out = vec![0.0; out_rows * out_cols];
    for c in 0..out_cols {
        for r in 0..out_rows {
            let mut acc = 0.0;
            for (t, kv) in kernel.iter().enumerate() {
                acc += kv * tmp[r + (c + t) * out_rows];
            }
            out[r + c * out_rows] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(dims, |_, _, _| rng.random::<f64>())
    }

    #[test]
    fn rse_trivial_values() {
        let t = random_tensor([3, 4, 5], 1);
        assert_eq!(rse(&t, &t).unwrap(), 0.0);
        let zero = Tensor3::zeros([3, 4, 5]);
        assert!((rse(&t, &zero).unwrap() - 1.0).abs() < 1e-15);
        let mut double = t.clone();
        for v in double.data_mut() {
            *v *= 2.0;
        }
        assert!((rse(&t, &double).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rse_rejects_zero_truth() {
        let zero = Tensor3::zeros([2, 2, 2]);
        assert!(rse(&zero, &zero).is_err());
    }

    #[test]
    fn psnr_values() {
        let t = random_tensor([4, 4, 4], 2);
        assert_eq!(psnr(&t, &t, 1.0).unwrap(), f64::INFINITY);

        // MSE equal to peak^2 gives exactly 0 dB.
        let peak = 2.0;
        let mut shifted = t.clone();
        for v in shifted.data_mut() {
            *v += peak;
        }
        assert!(psnr(&t, &shifted, peak).unwrap().abs() < 1e-12);

        // Uniform error e on peak-1 data: psnr = -20 log10(e).
        let e = 0.01;
        let mut off = t.clone();
        for v in off.data_mut() {
            *v += e;
        }
        assert!((psnr(&t, &off, 1.0).unwrap() + 20.0 * e.log10()).abs() < 1e-10);
    }

    #[test]
    fn ssim_identical_is_one() {
        let t = random_tensor([16, 16, 2], 3);
        assert!((ssim(&t, &t, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_estimate_below_one() {
        let t = random_tensor([16, 16, 1], 4);
        let c = Tensor3::from_fn([16, 16, 1], |_, _, _| 0.5);
        let v = ssim(&t, &c, 1.0).unwrap();
        assert!(v < 0.9, "ssim {v}");
    }

    #[test]
    fn ssim_rejects_small_slices() {
        let t = Tensor3::zeros([8, 8, 2]);
        assert!(ssim(&t, &t, 1.0).is_err());
    }

    #[test]
    fn ssim_matches_double_loop_oracle() {
        let a = random_tensor([14, 13, 2], 5);
        let mut b = a.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for v in b.data_mut() {
            *v += 0.05 * (rng.random::<f64>() - 0.5);
        }
        let fast = ssim(&a, &b, 1.0).unwrap();

        // Naive per-window reference.
        let kernel = gaussian_kernel();
        let peak = 1.0;
        let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
        let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);
        let [rows, cols, slices] = a.dims();
        let mut total = 0.0;
        let mut count = 0;
        for s in 0..slices {
            for top in 0..=(rows - SSIM_WINDOW) {
                for left in 0..=(cols - SSIM_WINDOW) {
                    let mut mx = 0.0;
                    let mut my = 0.0;
                    let mut sxx = 0.0;
                    let mut syy = 0.0;
                    let mut sxy = 0.0;
                    for di in 0..SSIM_WINDOW {
                        for dj in 0..SSIM_WINDOW {
                            let w = kernel[di] * kernel[dj];
                            let xv = a[(top + di, left + dj, s)];
                            let yv = b[(top + di, left + dj, s)];
                            mx += w * xv;
                            my += w * yv;
                            sxx += w * xv * xv;
                            syy += w * yv * yv;
                            sxy += w * xv * yv;
                        }
                    }
                    let vx = sxx - mx * mx;
                    let vy = syy - my * my;
                    let cxy = sxy - mx * my;
                    total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                        / ((mx * mx + my * my + c1) * (vx + vy + c2));
                    count += 1;
                }
            }
        }
        let slow = total / count as f64;
        assert!((fast - slow).abs() < 1e-10, "fast {fast} vs slow {slow}");
    }

    #[test]
    fn psnr_consistent_with_rse() {
        // MSE = rse^2 * ||truth||_F^2 / N ties the two metrics together.
        let t = random_tensor([10, 10, 10], 7);
        let e = random_tensor([10, 10, 10], 8);
        let r = rse(&t, &e).unwrap();
        let p = psnr(&t, &e, 1.0).unwrap();
        let n = t.len() as f64;
        let mse = r * r * t.fro_norm().powi(2) / n;
        assert!((p - 10.0 * (1.0 / mse).log10()).abs() < 1e-10);
    }
}
