//! File formats: the `.dt3` binary tensor container, CSV ingestion, and the
//! flat key=value run manifest.
//!
//! A `.dt3` file is:
//!
//! ```text
//! bytes 0..4   magic "DT3\0"
//! bytes 4..8   format version, u32 little-endian (currently 1)
//! bytes 8..32  extents I1, I2, I3 as u64 little-endian
//! bytes 32..   I1*I2*I3 IEEE-754 f64 little-endian values, column-major
//!              (first index fastest)
//! ```
//!
//! Masks use the same container with a `{0,1}` payload; matrices are stored
//! with a third extent of 1. All writers go through a temp-file-and-rename so
//! readers never observe partial files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read as _, Write as _};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, ObservationMask, Tensor3};

pub const TENSOR_MAGIC: [u8; 4] = *b"DT3\0";
pub const TENSOR_VERSION: u32 = 1;

/// Writes `t` to `path` atomically.
pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    let path = path.as_ref();
    let tmp = temp_sibling(path);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(&TENSOR_MAGIC)?;
        w.write_all(&TENSOR_VERSION.to_le_bytes())?;
        for d in t.dims() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a tensor written by [`save_tensor`]. Header problems (magic,
/// version, extents) and truncated payloads are format errors; the extents
/// are validated against the file size before anything is allocated.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot open {}: {e}", path.display()))
    })?;
    let file_len = file.metadata()?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    if magic != TENSOR_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad magic {magic:?} at offset 0, expected {TENSOR_MAGIC:?} (\"DT3\\0\")",
            path.display()
        )));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)
        .map_err(|_| Error::Format(format!("{}: truncated version field", path.display())))?;
    let version = u32::from_le_bytes(buf4);
    if version != TENSOR_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported version {version} at offset 4, expected {TENSOR_VERSION}",
            path.display()
        )));
    }
    let mut dims = [0usize; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)
            .map_err(|_| Error::Format(format!("{}: truncated extents", path.display())))?;
        let v = u64::from_le_bytes(buf8);
        if v == 0 || v > usize::MAX as u64 {
            return Err(Error::Format(format!(
                "{}: invalid extent {v} at offset {}",
                path.display(),
                8 + 8 * i
            )));
        }
        *d = v as usize;
    }
    // Cross-check the promised payload against the actual file size before
    // allocating anything.
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|p| p.checked_mul(dims[2]))
        .ok_or_else(|| {
            Error::Format(format!("{}: extent product overflows", path.display()))
        })?;
    let expected = 32u64
        .checked_add(count as u64 * 8)
        .ok_or_else(|| Error::Format(format!("{}: payload size overflows", path.display())))?;
    if file_len != expected {
        return Err(Error::Format(format!(
            "{}: payload length mismatch: extents {dims:?} need {expected} bytes, file has {file_len}",
            path.display()
        )));
    }

    let mut data = vec![0.0f64; count];
    let mut buf8 = [0u8; 8];
    for v in &mut data {
        r.read_exact(&mut buf8)
            .map_err(|_| Error::Format(format!("{}: truncated payload", path.display())))?;
        *v = f64::from_le_bytes(buf8);
    }
    Tensor3::new(dims, data)
}

/// Stores a matrix as an `rows x cols x 1` tensor.
pub fn save_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let t = Tensor3::new([m.rows(), m.cols(), 1], m.data().to_vec())?;
    save_tensor(path, &t)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let t = load_tensor(&path)?;
    let [rows, cols, depth] = t.dims();
    if depth != 1 {
        return Err(Error::Format(format!(
            "{}: expected a matrix (third extent 1), got {:?}",
            path.as_ref().display(),
            t.dims()
        )));
    }
    Matrix::new(rows, cols, t.data().to_vec())
}

pub fn save_mask(path: impl AsRef<Path>, mask: &ObservationMask) -> Result<()> {
    save_tensor(path, mask.indicator())
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    let t = load_tensor(&path)?;
    ObservationMask::from_indicator(t).map_err(|e| {
        Error::Format(format!("{}: not a valid mask: {e}", path.as_ref().display()))
    })
}

/// Imports a dense tensor from CSV rows `i1,i2,i3,value` with 1-based
/// indices. Every cell must appear exactly once unless `allow_missing` is
/// set, in which case the missing cells become unobserved zeros and the
/// derived mask is returned alongside.
pub fn import_csv(
    path: impl AsRef<Path>,
    dims: [usize; 3],
    allow_missing: bool,
) -> Result<(Tensor3, Option<ObservationMask>)> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidArgument(format!("cannot open {}: {e}", path.display()))
    })?;
    let n = dims[0] * dims[1] * dims[2];
    let mut t = Tensor3::zeros(dims);
    let mut seen = vec![false; n];
    let mut filled = 0usize;

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!(
                "{}:{lineno}: expected 4 comma-separated fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        let mut idx = [0usize; 3];
        for (m, f) in idx.iter_mut().zip(&fields[..3]) {
            *m = f.parse::<usize>().map_err(|_| {
                Error::Format(format!("{}:{lineno}: bad index '{f}'", path.display()))
            })?;
        }
        let value: f64 = fields[3].parse().map_err(|_| {
            Error::Format(format!("{}:{lineno}: bad value '{}'", path.display(), fields[3]))
        })?;
        for (m, (&i, &d)) in idx.iter().zip(dims.iter()).enumerate() {
            if i == 0 || i > d {
                return Err(Error::Format(format!(
                    "{}:{lineno}: index {i} out of range 1..={d} in mode {}",
                    path.display(),
                    m + 1
                )));
            }
        }
        let off = (idx[0] - 1) + dims[0] * ((idx[1] - 1) + dims[1] * (idx[2] - 1));
        if seen[off] {
            return Err(Error::Format(format!(
                "{}:{lineno}: duplicate cell ({},{},{})",
                path.display(),
                idx[0],
                idx[1],
                idx[2]
            )));
        }
        seen[off] = true;
        filled += 1;
        t.data_mut()[off] = value;
    }

    if filled < n {
        if !allow_missing {
            return Err(Error::Format(format!(
                "{}: {} of {n} cells missing (pass a mask output to import partial data)",
                path.display(),
                n - filled
            )));
        }
        let ind = Tensor3::new(
            dims,
            seen.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect(),
        )?;
        let mask = ObservationMask::from_indicator(ind)?;
        return Ok((t, Some(mask)));
    }
    Ok((t, None))
}

/// Flat key=value run description; reloading one reproduces a `complete` run
/// bit-for-bit. Unknown keys are rejected so typos do not silently fall back
/// to defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub artifact_version: String,
    pub method: crate::experiments::Method,
    pub seed: u64,
    pub solver: crate::solver::SolverConfig,
    pub halrtc: crate::halrtc::HalrtcConfig,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            method: crate::experiments::Method::Lrfmtc,
            seed: 0,
            solver: crate::solver::SolverConfig::default(),
            halrtc: crate::halrtc::HalrtcConfig::default(),
        }
    }
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let s = &self.solver;
        let h = &self.halrtc;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("artifact_version", self.artifact_version.clone());
        kv("method", self.method.name().to_string());
        kv("seed", self.seed.to_string());
        kv("solver.alpha", s.alpha.to_string());
        kv("solver.n_components", s.n_components.to_string());
        kv("solver.max_outer", s.max_outer.to_string());
        kv("solver.max_inner", s.max_inner.to_string());
        kv("solver.inner_tol", s.inner_tol.to_string());
        kv("solver.outer_tol", s.outer_tol.to_string());
        kv("solver.rank_threshold_ratio", s.rank_threshold_ratio.to_string());
        kv("solver.step_safety", s.step_safety.to_string());
        kv("halrtc.alpha1", h.alphas[0].to_string());
        kv("halrtc.alpha2", h.alphas[1].to_string());
        kv("halrtc.alpha3", h.alphas[2].to_string());
        kv("halrtc.rho", h.rho.to_string());
        kv("halrtc.rho_growth", h.rho_growth.to_string());
        kv("halrtc.rho_max", h.rho_max.to_string());
        kv("halrtc.gamma", h.gamma.to_string());
        kv("halrtc.max_iters", h.max_iters.to_string());
        kv("halrtc.tol", h.tol.to_string());
        kv("halrtc.rank_threshold_ratio", h.rank_threshold_ratio.to_string());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut m = RunManifest::default();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("manifest line {lineno}: expected key=value"))
            })?;
            let err = |what: &str| {
                Error::Format(format!("manifest line {lineno}: bad {what} '{value}'"))
            };
            match key.trim() {
                "artifact_version" => m.artifact_version = value.trim().to_string(),
                "method" => m.method = value.trim().parse()?,
                "seed" => m.seed = value.trim().parse().map_err(|_| err("seed"))?,
                "solver.alpha" => m.solver.alpha = value.trim().parse().map_err(|_| err("alpha"))?,
                "solver.n_components" => {
                    m.solver.n_components = value.trim().parse().map_err(|_| err("n_components"))?
                }
                "solver.max_outer" => {
                    m.solver.max_outer = value.trim().parse().map_err(|_| err("max_outer"))?
                }
                "solver.max_inner" => {
                    m.solver.max_inner = value.trim().parse().map_err(|_| err("max_inner"))?
                }
                "solver.inner_tol" => {
                    m.solver.inner_tol = value.trim().parse().map_err(|_| err("inner_tol"))?
                }
                "solver.outer_tol" => {
                    m.solver.outer_tol = value.trim().parse().map_err(|_| err("outer_tol"))?
                }
                "solver.rank_threshold_ratio" => {
                    m.solver.rank_threshold_ratio =
                        value.trim().parse().map_err(|_| err("rank_threshold_ratio"))?
                }
                "solver.step_safety" => {
                    m.solver.step_safety = value.trim().parse().map_err(|_| err("step_safety"))?
                }
                "halrtc.alpha1" => {
                    m.halrtc.alphas[0] = value.trim().parse().map_err(|_| err("alpha1"))?
                }
                "halrtc.alpha2" => {
                    m.halrtc.alphas[1] = value.trim().parse().map_err(|_| err("alpha2"))?
                }
                "halrtc.alpha3" => {
                    m.halrtc.alphas[2] = value.trim().parse().map_err(|_| err("alpha3"))?
                }
                "halrtc.rho" => m.halrtc.rho = value.trim().parse().map_err(|_| err("rho"))?,
                "halrtc.rho_growth" => {
                    m.halrtc.rho_growth = value.trim().parse().map_err(|_| err("rho_growth"))?
                }
                "halrtc.rho_max" => {
                    m.halrtc.rho_max = value.trim().parse().map_err(|_| err("rho_max"))?
                }
                "halrtc.gamma" => m.halrtc.gamma = value.trim().parse().map_err(|_| err("gamma"))?,
                "halrtc.max_iters" => {
                    m.halrtc.max_iters = value.trim().parse().map_err(|_| err("max_iters"))?
                }
                "halrtc.tol" => m.halrtc.tol = value.trim().parse().map_err(|_| err("tol"))?,
                "halrtc.rank_threshold_ratio" => {
                    m.halrtc.rank_threshold_ratio =
                        value.trim().parse().map_err(|_| err("rank_threshold_ratio"))?
                }
                other => {
                    return Err(Error::Format(format!(
                        "manifest line {lineno}: unknown key '{other}'"
                    )))
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text_atomic(path, &self.to_text())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::InvalidArgument(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::from_text(&text)
    }
}

/// Writes a text file atomically via temp-and-rename.
pub fn write_text_atomic(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    let tmp = temp_sibling(path);
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn tensor_roundtrip_bitwise() {
        let dir = tmpdir();
        let path = dir.path().join("t.dt3");
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let t = Tensor3::from_fn([3, 4, 5], |_, _, _| rng.random::<f64>() * 2.0 - 1.0);
        save_tensor(&path, &t).unwrap();
        let back = load_tensor(&path).unwrap();
        assert_eq!(back.dims(), t.dims());
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupt_magic_names_expectation() {
        let dir = tmpdir();
        let path = dir.path().join("bad.dt3");
        let t = Tensor3::zeros([2, 2, 2]);
        save_tensor(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, bytes).unwrap();
        match load_tensor(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("DT3"), "message: {msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("v9.dt3");
        let t = Tensor3::zeros([2, 2, 2]);
        save_tensor(&path, &t).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 9;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_tensor(&path), Err(Error::Format(_))));
    }

    #[test]
    fn oversized_extents_rejected_before_allocation() {
        let dir = tmpdir();
        let path = dir.path().join("huge.dt3");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&TENSOR_MAGIC);
        bytes.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        for _ in 0..3 {
            bytes.extend_from_slice(&(1u64 << 40).to_le_bytes());
        }
        bytes.extend_from_slice(&[0u8; 16]);
        std::fs::write(&path, bytes).unwrap();
        match load_tensor(&path) {
            Err(Error::Format(msg)) => {
                assert!(msg.contains("overflow") || msg.contains("mismatch"), "{msg}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("short.dt3");
        let t = Tensor3::zeros([2, 2, 2]);
        save_tensor(&path, &t).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        match load_tensor(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("mismatch"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn mask_roundtrip_and_validation() {
        let dir = tmpdir();
        let path = dir.path().join("mask.dt3");
        let ind = Tensor3::new([1, 2, 2], vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        let mask = ObservationMask::from_indicator(ind).unwrap();
        save_mask(&path, &mask).unwrap();
        assert_eq!(load_mask(&path).unwrap().observed_count(), 3);

        let not_mask = Tensor3::new([1, 1, 2], vec![0.25, 1.0]).unwrap();
        save_tensor(&path, &not_mask).unwrap();
        assert!(matches!(load_mask(&path), Err(Error::Format(_))));
    }

    #[test]
    fn csv_full_import() {
        let dir = tmpdir();
        let path = dir.path().join("t.csv");
        let mut text = String::new();
        for k in 1..=2 {
            for j in 1..=2 {
                for i in 1..=2 {
                    let v = (i + 10 * j + 100 * k) as f64;
                    text.push_str(&format!("{i},{j},{k},{v}\n"));
                }
            }
        }
        std::fs::write(&path, text).unwrap();
        let (t, mask) = import_csv(&path, [2, 2, 2], false).unwrap();
        assert!(mask.is_none());
        assert_eq!(t[(0, 0, 0)], 111.0);
        assert_eq!(t[(1, 1, 1)], 222.0);
    }

    #[test]
    fn csv_duplicate_names_line() {
        let dir = tmpdir();
        let path = dir.path().join("dup.csv");
        std::fs::write(&path, "1,1,1,5.0\n1,1,1,6.0\n").unwrap();
        match import_csv(&path, [2, 2, 2], true) {
            Err(Error::Format(msg)) => assert!(msg.contains(":2:"), "message: {msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn csv_bad_cells() {
        let dir = tmpdir();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "3,1,1,5.0\n").unwrap();
        assert!(matches!(import_csv(&path, [2, 2, 2], true), Err(Error::Format(_))));
        std::fs::write(&path, "1,1,1,abc\n").unwrap();
        assert!(matches!(import_csv(&path, [2, 2, 2], true), Err(Error::Format(_))));
        std::fs::write(&path, "1,1,1\n").unwrap();
        assert!(matches!(import_csv(&path, [2, 2, 2], true), Err(Error::Format(_))));
    }

    #[test]
    fn csv_partial_with_mask() {
        let dir = tmpdir();
        let path = dir.path().join("partial.csv");
        std::fs::write(&path, "1,1,1,5.0\n2,2,2,7.0\n").unwrap();
        assert!(import_csv(&path, [2, 2, 2], false).is_err());
        let (t, mask) = import_csv(&path, [2, 2, 2], true).unwrap();
        let mask = mask.unwrap();
        assert_eq!(mask.observed_count(), 2);
        assert_eq!(t[(0, 0, 0)], 5.0);
        assert_eq!(t[(1, 1, 1)], 7.0);
        assert_eq!(mask.indicator()[(1, 0, 0)], 0.0);
    }

    #[test]
    fn manifest_roundtrip() {
        let mut m = RunManifest::default();
        m.seed = 42;
        m.solver.alpha = 12.5;
        m.halrtc.gamma = 3.0;
        let text = m.to_text();
        let back = RunManifest::from_text(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn manifest_rejects_unknown_keys() {
        assert!(matches!(
            RunManifest::from_text("bogus_key=1\n"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tmpdir();
        let path = dir.path().join("x.dt3");
        save_tensor(&path, &Tensor3::zeros([1, 1, 1])).unwrap();
        let t2 = Tensor3::new([1, 1, 2], vec![3.0, 4.0]).unwrap();
        save_tensor(&path, &t2).unwrap();
        assert_eq!(load_tensor(&path).unwrap().dims(), [1, 1, 2]);
    }
}
