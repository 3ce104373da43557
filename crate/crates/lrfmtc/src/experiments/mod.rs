//! Synthetic-data experiment harness: per-trial pipeline (generate, mask,
//! corrupt, solve, score) and Cartesian parameter sweeps with deterministic
//! seeding throughout. Trials inside a sweep run in parallel; aggregation is
//! a sequential reduction in trial order, so results do not depend on
//! scheduling.

mod mask;
mod metrics;
mod noise;
mod synthetic;

pub use mask::{make_mask, MaskKind, MaskSpec};
pub use metrics::{psnr, rse, ssim};
pub use noise::{apply_noise, NoiseSpec};
pub use synthetic::{generate_tucker, SyntheticSpec};

use rayon::prelude::*;

use crate::error::Result;
use crate::halrtc::{halrtc_solve, HalrtcConfig};
use crate::solver::{solve, SolverConfig};
use crate::util::splitmix64;

/// Completion method under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lrfmtc,
    Halrtc,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Lrfmtc => "lrfmtc",
            Method::Halrtc => "halrtc",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lrfmtc" => Ok(Method::Lrfmtc),
            "halrtc" => Ok(Method::Halrtc),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown method '{other}', expected lrfmtc or halrtc"
            ))),
        }
    }
}

/// Derives an independent stream seed from a root seed, a purpose tag and an
/// index, so data, mask, noise and initialization never share a stream.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix64(root ^ h ^ index.wrapping_mul(0x9e3779b97f4a7c15))
}

/// Everything one trial needs. The seeds inside `synth`, `mask` and `solver`
/// are ignored; they are derived per trial from `root_seed`.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub dims: [usize; 3],
    pub rank: [usize; 3],
    pub mask: MaskSpec,
    pub noise: NoiseSpec,
    pub method: Method,
    pub solver: SolverConfig,
    pub halrtc: HalrtcConfig,
    pub root_seed: u64,
}

impl TrialSpec {
    pub fn new(dims: [usize; 3], rank: [usize; 3], sampling_ratio: f64, noise: NoiseSpec) -> Self {
        Self {
            dims,
            rank,
            mask: MaskSpec::random(sampling_ratio, 0),
            noise,
            method: Method::Lrfmtc,
            solver: SolverConfig::default(),
            halrtc: HalrtcConfig::default(),
            root_seed: 0,
        }
    }
}

/// Outcome of a single trial. Solver failures land in `error` instead of
/// aborting a sweep.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub method: Method,
    pub trial: u64,
    pub rse: f64,
    pub estimated_rank: [usize; 3],
    pub converged: bool,
    pub outer_iters: usize,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Runs one trial: synthetic truth, mask and noise from per-trial derived
/// seeds, then the chosen method, then scoring against the noiseless truth.
pub fn run_trial(spec: &TrialSpec, trial: u64) -> TrialRecord {
    match run_trial_inner(spec, trial) {
        Ok(rec) => rec,
        Err(e) => TrialRecord {
            method: spec.method,
            trial,
            rse: f64::NAN,
            estimated_rank: [0, 0, 0],
            converged: false,
            outer_iters: 0,
            wall_time_s: 0.0,
            error: Some(e.to_string()),
        },
    }
}

fn run_trial_inner(spec: &TrialSpec, trial: u64) -> Result<TrialRecord> {
    let root = spec.root_seed;
    let synth = SyntheticSpec {
        dims: spec.dims,
        rank: spec.rank,
        seed: derive_seed(root, "data", trial),
        orthogonalize: true,
    };
    let (truth, _) = generate_tucker(&synth)?;
    let mask = MaskSpec { seed: derive_seed(root, "mask", trial), ..spec.mask.clone() };
    let o = make_mask(spec.dims, &mask)?;
    let y = apply_noise(&truth, &spec.noise, derive_seed(root, "noise", trial))?;

    let rec = match spec.method {
        Method::Lrfmtc => {
            let cfg = SolverConfig { seed: derive_seed(root, "init", trial), ..spec.solver.clone() };
            let (_, model, report) = solve(&y, &o, &cfg)?;
            let estimate = model.reconstruct()?;
            TrialRecord {
                method: spec.method,
                trial,
                rse: rse(&truth, &estimate)?,
                estimated_rank: report.estimated_rank,
                converged: report.converged,
                outer_iters: report.outer_iters,
                wall_time_s: report.wall_time_s,
                error: None,
            }
        }
        Method::Halrtc => {
            let (estimate, report) = halrtc_solve(&y, &o, &spec.halrtc)?;
            TrialRecord {
                method: spec.method,
                trial,
                rse: rse(&truth, &estimate)?,
                estimated_rank: report.estimated_rank,
                converged: report.converged,
                outer_iters: report.outer_iters,
                wall_time_s: report.wall_time_s,
                error: None,
            }
        }
    };
    Ok(rec)
}

/// One sweep cell: a parameter combination plus its aggregated trial results.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub rank: [usize; 3],
    pub sampling_ratio: f64,
    pub noise: NoiseSpec,
    pub method: Method,
    pub alpha: f64,
    pub n_components: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean_rank: [f64; 3],
    pub mean_rse: f64,
    pub std_rse: f64,
    pub mean_wall_time_s: f64,
}

/// Cartesian sweep grid. Every combination of the listed values becomes one
/// cell; `alphas` and `components` apply to the factor solver only (the
/// baseline ignores them).
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub dims: [usize; 3],
    pub ranks: Vec<[usize; 3]>,
    pub sampling_ratios: Vec<f64>,
    pub noises: Vec<NoiseSpec>,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub components: Vec<usize>,
    pub solver: SolverConfig,
    pub halrtc: HalrtcConfig,
    pub mask: MaskSpec,
    pub seed: u64,
}

impl SweepGrid {
    pub fn new(dims: [usize; 3]) -> Self {
        Self {
            dims,
            ranks: vec![[2, 2, 2]],
            sampling_ratios: vec![0.2],
            noises: vec![NoiseSpec::GaussianSnr { snr_db: 20.0 }],
            methods: vec![Method::Lrfmtc],
            alphas: vec![SolverConfig::default().alpha],
            components: vec![SolverConfig::default().n_components],
            solver: SolverConfig::default(),
            halrtc: HalrtcConfig::default(),
            mask: MaskSpec::random(0.2, 0),
            seed: 0,
        }
    }

    fn cells(&self) -> Vec<TrialSpec> {
        let mut out = Vec::new();
        for &rank in &self.ranks {
            for &sr in &self.sampling_ratios {
                for noise in &self.noises {
                    for method in &self.methods {
                        for &alpha in &self.alphas {
                            for &l in &self.components {
                                let mut spec = TrialSpec::new(self.dims, rank, sr, *noise);
                                spec.mask = MaskSpec { sampling_ratio: sr, ..self.mask.clone() };
                                spec.method = *method;
                                spec.solver = SolverConfig {
                                    alpha,
                                    n_components: l,
                                    ..self.solver.clone()
                                };
                                spec.halrtc = self.halrtc.clone();
                                // Cell seed depends on the cell coordinates so
                                // cells are independent but reproducible;
                                // trials reuse data/mask/noise across methods
                                // and solver settings (common random numbers).
                                spec.root_seed = derive_seed(
                                    self.seed,
                                    "cell",
                                    cell_key(rank, sr, noise),
                                );
                                out.push(spec);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Data-defining coordinates only: method/alpha/components reuse the same
/// instances, which makes method comparisons paired.
fn cell_key(rank: [usize; 3], sr: f64, noise: &NoiseSpec) -> u64 {
    let mut key = splitmix64(rank[0] as u64 ^ (rank[1] as u64) << 20 ^ (rank[2] as u64) << 40);
    key = splitmix64(key ^ sr.to_bits());
    key = splitmix64(match noise {
        NoiseSpec::None => key ^ 1,
        NoiseSpec::GaussianSnr { snr_db } => key ^ snr_db.to_bits(),
        NoiseSpec::Poisson { scale } => key ^ scale.to_bits().rotate_left(17),
    });
    key
}

/// Sweep output: aggregated cells plus every raw trial record.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub cells: Vec<(TrialSpec, SweepCell)>,
    pub trial_rows: Vec<(TrialSpec, TrialRecord)>,
}

/// Runs `trials` trials per cell, in parallel across the whole grid.
pub fn run_sweep(grid: &SweepGrid, trials: usize) -> Result<SweepTable> {
    if trials == 0 {
        return Err(crate::Error::InvalidArgument("trial count must be positive".into()));
    }
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(crate::Error::InvalidArgument("sweep grid is empty".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..trials as u64).map(move |t| (c, t)))
        .collect();
    let mut results: Vec<(usize, TrialRecord)> = jobs
        .par_iter()
        .map(|&(c, t)| (c, run_trial(&cells[c], t)))
        .collect();
    results.sort_by_key(|(c, rec)| (*c, rec.trial));

    let mut table = SweepTable { cells: Vec::new(), trial_rows: Vec::new() };
    for (c, spec) in cells.iter().enumerate() {
        let recs: Vec<&TrialRecord> =
            results.iter().filter(|(ci, _)| *ci == c).map(|(_, r)| r).collect();
        let ok: Vec<&&TrialRecord> = recs.iter().filter(|r| r.error.is_none()).collect();
        let nn = ok.len().max(1) as f64;
        let mean_rse = ok.iter().map(|r| r.rse).sum::<f64>() / nn;
        let std_rse = if ok.len() > 1 {
            (ok.iter().map(|r| (r.rse - mean_rse) * (r.rse - mean_rse)).sum::<f64>()
                / (ok.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        let mut mean_rank = [0.0f64; 3];
        for r in &ok {
            for (acc, &est) in mean_rank.iter_mut().zip(&r.estimated_rank) {
                *acc += est as f64;
            }
        }
        for m in &mut mean_rank {
            *m /= nn;
        }
        let cell = SweepCell {
            rank: spec.rank,
            sampling_ratio: spec.mask.sampling_ratio,
            noise: spec.noise,
            method: spec.method,
            alpha: spec.solver.alpha,
            n_components: spec.solver.n_components,
            trials,
            failures: recs.len() - ok.len(),
            mean_rank,
            mean_rse,
            std_rse,
            mean_wall_time_s: ok.iter().map(|r| r.wall_time_s).sum::<f64>() / nn,
        };
        table.cells.push((spec.clone(), cell));
        for rec in recs {
            table.trial_rows.push((spec.clone(), rec.clone()));
        }
    }
    Ok(table)
}
