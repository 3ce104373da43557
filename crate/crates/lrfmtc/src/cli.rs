//! Command-line surface: generate synthetic data, build masks, inject noise,
//! run completions, evaluate reconstructions, and sweep parameter grids.
//! Everything flows through `.dt3` tensor files and CSV reports; see the
//! README for the file and report schemas.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    apply_noise, generate_tucker, make_mask, psnr, rse, run_sweep, ssim, MaskKind, MaskSpec,
    Method, NoiseSpec, SweepGrid, SyntheticSpec,
};
use crate::halrtc::halrtc_solve;
use crate::io::{
    load_mask, load_tensor, save_mask, save_matrix, save_tensor, write_text_atomic, RunManifest,
};
use crate::solver::{solve, SolveReport};

#[derive(Parser)]
#[command(
    name = "lrfmtc",
    about = "Tucker tensor completion with multilinear rank learning",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic low multilinear-rank Tucker tensor.
    Generate(GenerateArgs),
    /// Build an observation mask.
    Mask(MaskArgs),
    /// Corrupt a tensor with Gaussian or Poisson noise.
    Noise(NoiseArgs),
    /// Complete a partially observed tensor.
    Complete(CompleteArgs),
    /// Score an estimate against a reference tensor.
    Evaluate(EvaluateArgs),
    /// Run a Cartesian parameter sweep and emit CSV reports.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Extents as I1,I2,I3.
    #[arg(long, value_parser = parse_triple)]
    dims: [usize; 3],
    /// Multilinear rank as R1,R2,R3.
    #[arg(long, value_parser = parse_triple)]
    rank: [usize; 3],
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output tensor path; the ground-truth model lands next to it as
    /// <out>.model.core.dt3 and <out>.model.u{1,2,3}.dt3.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, value_parser = parse_triple)]
    dims: [usize; 3],
    /// Fraction of observed entries, in (0,1].
    #[arg(long)]
    sampling_ratio: f64,
    /// random | block
    #[arg(long, default_value = "random")]
    kind: String,
    /// Block length for the block kind.
    #[arg(long, default_value_t = 4)]
    block_len: usize,
    /// Fiber mode (1..3) for the block kind.
    #[arg(long, default_value_t = 1)]
    mode: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    input: PathBuf,
    /// gaussian | poisson | none
    #[arg(long)]
    kind: String,
    /// Target SNR in dB (gaussian).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Poisson scale (larger is cleaner).
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CompleteArgs {
    /// lrfmtc | halrtc
    #[arg(long, default_value = "lrfmtc")]
    method: String,
    /// Observed tensor (.dt3).
    #[arg(long)]
    input: PathBuf,
    /// Observation mask (.dt3 with 0/1 payload).
    #[arg(long)]
    mask: PathBuf,
    /// Manifest file to start from; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// CPD components for lrfmtc.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    /// Data-fit weight for halrtc.
    #[arg(long)]
    gamma: Option<f64>,
    /// Completed tensor path; the solve report lands at <out>.report.csv,
    /// the manifest at <out>.manifest.txt and (for lrfmtc) the model at
    /// <out>.model.*.dt3.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    /// Peak value for PSNR/SSIM; defaults to max |truth|.
    #[arg(long)]
    peak: Option<f64>,
    /// Optional CSV output with the same numbers.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid file (key=value lines; see README).
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Aggregated report path; raw trials land at <out purged of .csv>.trials.csv.
    #[arg(short, long)]
    output: PathBuf,
}

fn parse_triple(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got '{s}'"));
    }
    let mut out = [0usize; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.trim().parse().map_err(|_| format!("bad integer '{p}'"))?;
    }
    Ok(out)
}

/// Parses the command line and runs it, mapping errors onto the exit-code
/// contract: 0 success, 2 argument errors, 3 format errors, 4 numerical
/// failures.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version print to stdout and exit 0; real parse errors
            // land on stderr with the argument-error code.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                Error::Format(_) => 3,
                Error::Numerical(_) | Error::Degenerate(_) => 4,
                Error::Io(_) => 3,
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Mask(a) => mask(a),
        Command::Noise(a) => noise(a),
        Command::Complete(a) => complete(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.push_str(suffix);
    path.with_file_name(name)
}

/// <out>.csv -> <out>.trials.csv (appends when there is no .csv extension).
fn trials_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => path.with_extension("trials.csv"),
        _ => with_suffix(path, ".trials.csv"),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = SyntheticSpec::new(a.dims, a.rank, a.seed);
    let (tensor, model) = generate_tucker(&spec)?;
    save_tensor(&a.output, &tensor)?;
    save_tensor(with_suffix(&a.output, ".model.core.dt3"), &model.core)?;
    for k in 1..=3 {
        save_matrix(with_suffix(&a.output, &format!(".model.u{k}.dt3")), model.factor(k))?;
    }
    println!(
        "generated {:?} tensor of multilinear rank {:?} -> {}",
        a.dims,
        a.rank,
        a.output.display()
    );
    Ok(())
}

fn mask(a: MaskArgs) -> Result<()> {
    let kind = match a.kind.as_str() {
        "random" => MaskKind::Random,
        "block" => MaskKind::BlockLTuple,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown mask kind '{other}', expected random or block"
            )))
        }
    };
    let spec = MaskSpec {
        kind,
        sampling_ratio: a.sampling_ratio,
        l: a.block_len,
        mode: a.mode,
        seed: a.seed,
    };
    let m = make_mask(a.dims, &spec)?;
    save_mask(&a.output, &m)?;
    println!(
        "mask over {:?}: {} of {} entries observed -> {}",
        a.dims,
        m.observed_count(),
        m.indicator().len(),
        a.output.display()
    );
    Ok(())
}

fn noise(a: NoiseArgs) -> Result<()> {
    let spec = match a.kind.as_str() {
        "none" => NoiseSpec::None,
        "gaussian" => NoiseSpec::GaussianSnr {
            snr_db: a.snr_db.ok_or_else(|| {
                Error::InvalidArgument("gaussian noise needs --snr-db".into())
            })?,
        },
        "poisson" => NoiseSpec::Poisson {
            scale: a
                .scale
                .ok_or_else(|| Error::InvalidArgument("poisson noise needs --scale".into()))?,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown noise kind '{other}', expected gaussian, poisson or none"
            )))
        }
    };
    let x = load_tensor(&a.input)?;
    let y = apply_noise(&x, &spec, a.seed)?;
    save_tensor(&a.output, &y)?;
    println!("noised {} -> {}", a.input.display(), a.output.display());
    Ok(())
}

fn report_csv(report: &SolveReport) -> String {
    let mut csv = String::from("iteration,objective,elapsed_s\n");
    for (i, (obj, el)) in report
        .objective_trace
        .iter()
        .zip(&report.trace_elapsed_s)
        .enumerate()
    {
        csv.push_str(&format!("{},{},{}\n", i + 1, obj, el));
    }
    csv
}

fn complete(a: CompleteArgs) -> Result<()> {
    let mut manifest = match &a.config {
        Some(path) => RunManifest::load(path)?,
        None => RunManifest::default(),
    };
    if a.config.is_none() || !a.method.is_empty() {
        manifest.method = a.method.parse()?;
    }
    if let Some(v) = a.alpha {
        manifest.solver.alpha = v;
    }
    if let Some(v) = a.components {
        manifest.solver.n_components = v;
    }
    if let Some(v) = a.seed {
        manifest.seed = v;
    }
    if let Some(v) = a.max_outer {
        manifest.solver.max_outer = v;
    }
    if let Some(v) = a.max_inner {
        manifest.solver.max_inner = v;
    }
    if let Some(v) = a.gamma {
        manifest.halrtc.gamma = v;
    }
    manifest.solver.seed = manifest.seed;

    let y = load_tensor(&a.input)?;
    let o = load_mask(&a.mask)?;

    let report = match manifest.method {
        Method::Lrfmtc => {
            let (_, model, report) = solve(&y, &o, &manifest.solver)?;
            let completed = model.reconstruct()?;
            save_tensor(&a.output, &completed)?;
            save_tensor(with_suffix(&a.output, ".model.core.dt3"), &model.core)?;
            for k in 1..=3 {
                save_matrix(with_suffix(&a.output, &format!(".model.u{k}.dt3")), model.factor(k))?;
            }
            report
        }
        Method::Halrtc => {
            let (completed, report) = halrtc_solve(&y, &o, &manifest.halrtc)?;
            save_tensor(&a.output, &completed)?;
            report
        }
    };
    write_text_atomic(with_suffix(&a.output, ".report.csv"), &report_csv(&report))?;
    manifest.save(with_suffix(&a.output, ".manifest.txt"))?;
    println!(
        "completed with {}: estimated rank {:?}, {} outer sweeps, {:.2}s -> {}",
        manifest.method.name(),
        report.estimated_rank,
        report.outer_iters,
        report.wall_time_s,
        a.output.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let truth = load_tensor(&a.truth)?;
    let estimate = load_tensor(&a.estimate)?;
    let peak = match a.peak {
        Some(p) => p,
        None => truth.data().iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    let rse_v = rse(&truth, &estimate)?;
    let psnr_v = psnr(&truth, &estimate, peak)?;
    // SSIM needs 11x11 slices; report NaN for smaller tensors.
    let ssim_v = ssim(&truth, &estimate, peak).unwrap_or(f64::NAN);
    println!("rse={rse_v} psnr={psnr_v} ssim={ssim_v}");
    if let Some(csv) = &a.csv {
        write_text_atomic(csv, &format!("rse,psnr,ssim\n{rse_v},{psnr_v},{ssim_v}\n"))?;
    }
    Ok(())
}

/// Grid file: key=value lines with comma-separated lists. Keys: dims,
/// ranks (semicolon-separated triples), sampling_ratios, snr_dbs (numbers or
/// "none"), methods, alphas, components, seed, mask_kind, block_len,
/// block_mode, plus any manifest key to override solver/baseline defaults.
fn parse_grid(text: &str) -> Result<SweepGrid> {
    let mut grid = SweepGrid::new([0, 0, 0]);
    let mut dims_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("grid line {lineno}: expected key=value"))
        })?;
        let value = value.trim();
        let bad = |what: &str| Error::Format(format!("grid line {lineno}: bad {what} '{value}'"));
        match key.trim() {
            "dims" => {
                grid.dims = parse_triple(value).map_err(|_| bad("dims"))?;
                dims_seen = true;
            }
            "ranks" => {
                grid.ranks = value
                    .split(';')
                    .map(|t| parse_triple(t.trim()).map_err(|_| bad("rank triple")))
                    .collect::<Result<_>>()?;
            }
            "sampling_ratios" => {
                grid.sampling_ratios = value
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad("sampling ratio")))
                    .collect::<Result<_>>()?;
            }
            "snr_dbs" => {
                grid.noises = value
                    .split(',')
                    .map(|v| {
                        let v = v.trim();
                        if v == "none" {
                            Ok(NoiseSpec::None)
                        } else {
                            v.parse()
                                .map(|snr_db| NoiseSpec::GaussianSnr { snr_db })
                                .map_err(|_| bad("snr"))
                        }
                    })
                    .collect::<Result<_>>()?;
            }
            "methods" => {
                grid.methods = value
                    .split(',')
                    .map(|v| v.trim().parse::<Method>())
                    .collect::<Result<_>>()?;
            }
            "alphas" => {
                grid.alphas = value
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad("alpha")))
                    .collect::<Result<_>>()?;
            }
            "components" => {
                grid.components = value
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad("component count")))
                    .collect::<Result<_>>()?;
            }
            "seed" => grid.seed = value.parse().map_err(|_| bad("seed"))?,
            "mask_kind" => {
                grid.mask.kind = match value {
                    "random" => MaskKind::Random,
                    "block" => MaskKind::BlockLTuple,
                    _ => return Err(bad("mask kind")),
                }
            }
            "block_len" => grid.mask.l = value.parse().map_err(|_| bad("block length"))?,
            "block_mode" => grid.mask.mode = value.parse().map_err(|_| bad("block mode"))?,
            "max_outer" => grid.solver.max_outer = value.parse().map_err(|_| bad("max_outer"))?,
            "max_inner" => grid.solver.max_inner = value.parse().map_err(|_| bad("max_inner"))?,
            "gamma" => grid.halrtc.gamma = value.parse().map_err(|_| bad("gamma"))?,
            other => {
                return Err(Error::Format(format!("grid line {lineno}: unknown key '{other}'")))
            }
        }
    }
    if !dims_seen {
        return Err(Error::Format("grid file must set dims".into()));
    }
    Ok(grid)
}

fn noise_label(n: &NoiseSpec) -> String {
    match n {
        NoiseSpec::None => "none".into(),
        NoiseSpec::GaussianSnr { snr_db } => format!("{snr_db}"),
        NoiseSpec::Poisson { scale } => format!("poisson{scale}"),
    }
}

fn sweep(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.grid).map_err(|e| {
        Error::InvalidArgument(format!("cannot open {}: {e}", a.grid.display()))
    })?;
    let grid = parse_grid(&text)?;
    let table = run_sweep(&grid, a.trials)?;

    let mut agg = String::from(
        "r1,r2,r3,sampling_ratio,snr_db,method,alpha,components,trials,failures,\
         mean_est_r1,mean_est_r2,mean_est_r3,mean_rse,std_rse,mean_wall_s\n",
    );
    for (_, cell) in &table.cells {
        agg.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell.rank[0],
            cell.rank[1],
            cell.rank[2],
            cell.sampling_ratio,
            noise_label(&cell.noise),
            cell.method.name(),
            cell.alpha,
            cell.n_components,
            cell.trials,
            cell.failures,
            cell.mean_rank[0],
            cell.mean_rank[1],
            cell.mean_rank[2],
            cell.mean_rse,
            cell.std_rse,
            cell.mean_wall_time_s
        ));
    }
    write_text_atomic(&a.output, &agg)?;

    let mut rows = String::from(
        "r1,r2,r3,sampling_ratio,snr_db,method,alpha,components,trial,\
         est_r1,est_r2,est_r3,rse,wall_s,converged,error\n",
    );
    for (spec, rec) in &table.trial_rows {
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            spec.rank[0],
            spec.rank[1],
            spec.rank[2],
            spec.mask.sampling_ratio,
            noise_label(&spec.noise),
            spec.method.name(),
            spec.solver.alpha,
            spec.solver.n_components,
            rec.trial,
            rec.estimated_rank[0],
            rec.estimated_rank[1],
            rec.estimated_rank[2],
            rec.rse,
            rec.wall_time_s,
            rec.converged,
            rec.error.clone().unwrap_or_default()
        ));
    }
    write_text_atomic(trials_path(&a.output), &rows)?;
    println!(
        "swept {} cells x {} trials -> {} and {}",
        table.cells.len(),
        a.trials,
        a.output.display(),
        trials_path(&a.output).display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_parsing() {
        assert_eq!(parse_triple("50,50,50").unwrap(), [50, 50, 50]);
        assert!(parse_triple("50,50").is_err());
        assert!(parse_triple("a,b,c").is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid(
            "dims=10,10,10\nranks=2,2,2;4,4,4\nsampling_ratios=0.2,0.5\n\
             snr_dbs=20,none\nmethods=lrfmtc,halrtc\nalphas=1,2\ncomponents=8\nseed=3\n",
        )
        .unwrap();
        assert_eq!(g.ranks.len(), 2);
        assert_eq!(g.sampling_ratios.len(), 2);
        assert_eq!(g.noises.len(), 2);
        assert_eq!(g.methods.len(), 2);
        assert_eq!(g.alphas, vec![1.0, 2.0]);
        assert_eq!(g.seed, 3);
    }

    #[test]
    fn grid_rejects_unknown_keys() {
        assert!(parse_grid("dims=2,2,2\nwat=1\n").is_err());
        assert!(parse_grid("ranks=2,2,2\n").is_err());
    }

    #[test]
    fn trials_path_suffix() {
        assert_eq!(trials_path(Path::new("out.csv")), PathBuf::from("out.trials.csv"));
        assert_eq!(trials_path(Path::new("report")), PathBuf::from("report.trials.csv"));
    }
}
