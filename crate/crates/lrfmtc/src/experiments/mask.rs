//! Observation-mask generation: uniform random sampling and block-wise
//! (l-tuple) missingness along mode fibers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{ObservationMask, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// Uniform without-replacement selection of observed entries.
    Random,
    /// Remove runs of `l` consecutive entries along randomly chosen fibers
    /// of `mode` until the target missing fraction is reached. Runs never
    /// touch each other, so every maximal missing run has length `l` except
    /// a final truncated one.
    BlockLTuple,
}

#[derive(Debug, Clone)]
pub struct MaskSpec {
    pub kind: MaskKind,
    /// Fraction of observed entries, in (0, 1].
    pub sampling_ratio: f64,
    /// Block length for `BlockLTuple`.
    pub l: usize,
    /// Fiber direction for `BlockLTuple`, in {1,2,3}.
    pub mode: usize,
    pub seed: u64,
}

impl MaskSpec {
    pub fn random(sampling_ratio: f64, seed: u64) -> Self {
        Self { kind: MaskKind::Random, sampling_ratio, l: 4, mode: 1, seed }
    }

    pub fn block(sampling_ratio: f64, l: usize, mode: usize, seed: u64) -> Self {
        Self { kind: MaskKind::BlockLTuple, sampling_ratio, l, mode, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_ratio > 0.0 && self.sampling_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sampling ratio must be in (0,1], got {}",
                self.sampling_ratio
            )));
        }
        if self.l == 0 {
            return Err(Error::InvalidArgument("block length must be positive".into()));
        }
        if !(1..=3).contains(&self.mode) {
            return Err(Error::InvalidArgument(format!(
                "mode must be 1, 2 or 3, got {}",
                self.mode
            )));
        }
        Ok(())
    }
}

/// Builds a mask over `dims` with exactly `ceil(sampling_ratio * N)` observed
/// entries.
pub fn make_mask(dims: [usize; 3], spec: &MaskSpec) -> Result<ObservationMask> {
    spec.validate()?;
    let n = dims[0] * dims[1] * dims[2];
    let observed = (spec.sampling_ratio * n as f64).ceil() as usize;
    let observed = observed.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    match spec.kind {
        MaskKind::Random => {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            let (chosen, _) = idx.partial_shuffle(&mut rng, observed);
            let mut ind = Tensor3::zeros(dims);
            for &i in chosen.iter() {
                ind.data_mut()[i as usize] = 1.0;
            }
            ObservationMask::from_indicator(ind)
        }
        MaskKind::BlockLTuple => block_mask(dims, spec, n - observed, &mut rng),
    }
}

/// Fibers along `mode` are contiguous only for mode 1; address fibers by
/// (fiber index, position) instead of touching the tensor layout.
struct FiberView {
    dims: [usize; 3],
    mode: usize,
}

impl FiberView {
    fn fiber_len(&self) -> usize {
        self.dims[self.mode - 1]
    }

    fn n_fibers(&self) -> usize {
        self.dims.iter().product::<usize>() / self.fiber_len()
    }

    /// Linear offset of position `pos` on fiber `fiber`.
    fn offset(&self, fiber: usize, pos: usize) -> usize {
        let [d0, d1, _] = self.dims;
        match self.mode {
            1 => {
                let j = fiber % d1;
                let k = fiber / d1;
                pos + d0 * (j + d1 * k)
            }
            2 => {
                let i = fiber % d0;
                let k = fiber / d0;
                i + d0 * (pos + d1 * k)
            }
            _ => {
                let i = fiber % d0;
                let j = fiber / d0;
                i + d0 * (j + d1 * pos)
            }
        }
    }
}

fn block_mask(
    dims: [usize; 3],
    spec: &MaskSpec,
    target_missing: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ObservationMask> {
    let view = FiberView { dims, mode: spec.mode };
    let fiber_len = view.fiber_len();
    let mut ind = Tensor3::from_fn(dims, |_, _, _| 1.0);
    let mut remaining = target_missing;

    // A placement is valid when the whole window and its two guard cells are
    // still observed; guards stop adjacent runs from merging into one longer
    // than l. Candidates are sampled lazily: stale ones are dropped when hit.
    let enumerate = |ind: &Tensor3, len: usize| -> Vec<(u32, u32)> {
        let mut cand = Vec::new();
        for f in 0..view.n_fibers() {
            for s in 0..=(fiber_len.saturating_sub(len)) {
                if valid_placement(ind, &view, f, s, len) {
                    cand.push((f as u32, s as u32));
                }
            }
        }
        cand
    };

    let mut run_len = spec.l.min(remaining.max(1));
    let mut candidates = if remaining > 0 { enumerate(&ind, run_len) } else { Vec::new() };
    while remaining > 0 {
        let want = spec.l.min(remaining);
        if want != run_len {
            run_len = want;
            candidates = enumerate(&ind, run_len);
        }
        // Drop stale candidates until a valid one comes up.
        let placed = loop {
            if candidates.is_empty() {
                break None;
            }
            let pick = rng.random_range(0..candidates.len());
            let (f, s) = candidates.swap_remove(pick);
            if valid_placement(&ind, &view, f as usize, s as usize, run_len) {
                break Some((f as usize, s as usize));
            }
        };
        let Some((f, s)) = placed else {
            return Err(Error::InvalidArgument(format!(
                "block mask cannot reach sampling ratio {} with l = {} along mode {}: \
                 no non-adjacent placement left after removing {} entries",
                spec.sampling_ratio,
                spec.l,
                spec.mode,
                target_missing - remaining
            )));
        };
        for p in s..s + run_len {
            ind.data_mut()[view.offset(f, p)] = 0.0;
        }
        remaining -= run_len;
    }
    ObservationMask::from_indicator(ind)
}

fn valid_placement(ind: &Tensor3, view: &FiberView, fiber: usize, start: usize, len: usize) -> bool {
    let fiber_len = view.fiber_len();
    if start + len > fiber_len {
        return false;
    }
    if start > 0 && ind.data()[view.offset(fiber, start - 1)] == 0.0 {
        return false;
    }
    if start + len < fiber_len && ind.data()[view.offset(fiber, start + len)] == 0.0 {
        return false;
    }
    (start..start + len).all(|p| ind.data()[view.offset(fiber, p)] == 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn missing_runs(ind: &Tensor3, mode: usize) -> Vec<usize> {
        let view = FiberView { dims: ind.dims(), mode };
        let mut runs = Vec::new();
        for f in 0..view.n_fibers() {
            let mut len = 0;
            for p in 0..view.fiber_len() {
                if ind.data()[view.offset(f, p)] == 0.0 {
                    len += 1;
                } else if len > 0 {
                    runs.push(len);
                    len = 0;
                }
            }
            if len > 0 {
                runs.push(len);
            }
        }
        runs
    }

    #[test]
    fn full_sampling_is_all_ones() {
        let m = make_mask([3, 4, 5], &MaskSpec::random(1.0, 0)).unwrap();
        assert_eq!(m.observed_count(), 60);
    }

    #[test]
    fn random_mask_exact_count() {
        let m = make_mask([50, 50, 50], &MaskSpec::random(0.2, 7)).unwrap();
        assert_eq!(m.observed_count(), 25_000);
        assert!((m.sampling_ratio() - 0.2).abs() < 1.0 / 125_000.0);
    }

    #[test]
    fn random_mask_deterministic() {
        let a = make_mask([6, 6, 6], &MaskSpec::random(0.4, 3)).unwrap();
        let b = make_mask([6, 6, 6], &MaskSpec::random(0.4, 3)).unwrap();
        assert_eq!(a.indicator(), b.indicator());
    }

    #[test]
    fn rejects_out_of_range_ratio() {
        assert!(make_mask([3, 3, 3], &MaskSpec::random(0.0, 0)).is_err());
        assert!(make_mask([3, 3, 3], &MaskSpec::random(1.5, 0)).is_err());
    }

    #[test]
    fn block_mask_run_lengths() {
        for mode in 1..=3 {
            let spec = MaskSpec::block(0.6, 4, mode, 17);
            let m = make_mask([20, 20, 20], &spec).unwrap();
            assert_eq!(m.observed_count(), 4800);
            let runs = missing_runs(m.indicator(), mode);
            assert!(runs.iter().all(|&r| r <= 4), "mode {mode} runs {runs:?}");
            let short = runs.iter().filter(|&&r| r < 4).count();
            assert!(short <= 1, "mode {mode}: more than one truncated run");
        }
    }

    #[test]
    fn block_mask_exact_count_with_truncation() {
        // 7 * 5 * 3 = 105 entries, 30% missing = 31.5 -> 73.5 observed ->
        // ceil 74 observed, 31 missing: 7 runs of 4 plus one of 3.
        let spec = MaskSpec::block(0.7, 4, 1, 5);
        let m = make_mask([7, 5, 3], &spec).unwrap();
        assert_eq!(m.observed_count(), 74);
        let runs = missing_runs(m.indicator(), 1);
        assert_eq!(runs.iter().sum::<usize>(), 31);
    }

    #[test]
    fn block_mask_infeasible_ratio_errors() {
        // l = 4 with guards caps missingness well below 95%.
        let spec = MaskSpec::block(0.05, 4, 1, 1);
        assert!(make_mask([10, 10, 10], &spec).is_err());
    }
}
