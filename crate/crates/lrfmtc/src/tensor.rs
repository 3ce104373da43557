//! Dense 3-mode tensors and the multilinear algebra every solver here needs:
//! unfolding/folding, Khatri–Rao and Kronecker products, mode-n products and
//! CPD/Tucker reconstruction.
//!
//! Storage is column-major (first index fastest), so the mode-1 unfolding is
//! a plain reshape of the backing buffer. All public formulas below use
//! 1-based mode numbers `{1,2,3}`; storage indices are 0-based.
//!
//! Index map (0-based), entry `(i0,i1,i2)` of a tensor with extents
//! `(d0,d1,d2)`:
//!
//! ```text
//! linear offset          = i0 + d0*(i1 + d1*i2)
//! mode-1 unfold (d0 x d1*d2): row i0, col i1 + d1*i2
//! mode-2 unfold (d1 x d0*d2): row i1, col i0 + d0*i2
//! mode-3 unfold (d2 x d0*d1): row i2, col i0 + d0*i1
//! ```
//!
//! Under this convention `X_(1) = A1 G_(1) (A3 (x) A2)^T` holds exactly for a
//! Tucker tensor, and `X_(k) = B_k (kr_complement)^T` for a CPD.

use crate::error::{Error, Result};
use crate::util::neumaier_sum;

/// Dense column-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix extents must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Contiguous storage of column `c`.
    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn fro_norm(&self) -> f64 {
        neumaier_sum(self.data.iter().map(|v| v * v)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self <- self + s * other`; shapes must match.
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        gemm(1.0, self, false, other, false)
    }

    /// `self * other^T`.
    pub fn matmul_transb(&self, other: &Matrix) -> Matrix {
        gemm(1.0, self, false, other, true)
    }

    /// `self^T * other`.
    pub fn matmul_transa(&self, other: &Matrix) -> Matrix {
        gemm(1.0, self, true, other, false)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r + c * self.rows]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r + c * self.rows]
    }
}

/// `alpha * op(a) * op(b)` computed with a single dgemm call.
fn gemm(alpha: f64, a: &Matrix, trans_a: bool, b: &Matrix, trans_b: bool) -> Matrix {
    let (m, k) = if trans_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (kb, n) = if trans_b { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(k, kb, "inner dimensions must agree: {k} vs {kb}");
    let mut out = Matrix::zeros(m, n);
    // Column-major strides: row stride 1, column stride = number of rows.
    let (rsa, csa) = if trans_a { (a.rows as isize, 1) } else { (1, a.rows as isize) };
    let (rsb, csb) = if trans_b { (b.rows as isize, 1) } else { (1, b.rows as isize) };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            0.0,
            out.data.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    out
}

/// Dense 3-mode tensor, column-major (first index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "tensor extents must be positive, got {dims:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::InvalidArgument(format!(
                "tensor data length {} does not match extents {dims:?} (expected {n})",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        Self { dims, data: vec![0.0; dims[0] * dims[1] * dims[2]] }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fro_norm(&self) -> f64 {
        neumaier_sum(self.data.iter().map(|v| v * v)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frontal slice `(:,:,n)` as an `I1 x I2` matrix.
    pub fn frontal_slice(&self, n: usize) -> Matrix {
        let [d0, d1, _] = self.dims;
        let start = n * d0 * d1;
        Matrix { rows: d0, cols: d1, data: self.data[start..start + d0 * d1].to_vec() }
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[i + self.dims[0] * (j + self.dims[1] * k)]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[i + self.dims[0] * (j + self.dims[1] * k)]
    }
}

/// Binary observation indicator with sampling-ratio bookkeeping.
#[derive(Debug, Clone)]
pub struct ObservationMask {
    indicator: Tensor3,
    observed_count: usize,
}

impl ObservationMask {
    /// Builds a mask from a `{0,1}`-valued tensor; any other entry is rejected.
    pub fn from_indicator(indicator: Tensor3) -> Result<Self> {
        let mut count = 0usize;
        for (pos, &v) in indicator.data().iter().enumerate() {
            if v == 1.0 {
                count += 1;
            } else if v != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "mask entries must be exactly 0 or 1, found {v} at linear offset {pos}"
                )));
            }
        }
        Ok(Self { indicator, observed_count: count })
    }

    pub fn all_observed(dims: [usize; 3]) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        Self { indicator: Tensor3 { dims, data: vec![1.0; n] }, observed_count: n }
    }

    pub fn indicator(&self) -> &Tensor3 {
        &self.indicator
    }

    pub fn dims(&self) -> [usize; 3] {
        self.indicator.dims
    }

    pub fn observed_count(&self) -> usize {
        self.observed_count
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.observed_count as f64 / self.indicator.len() as f64
    }
}

/// The three CPD factor matrices `B1, B2, B3` sharing a column count.
///
/// A Tucker tensor with core `G = [[Xi1, Xi2, Xi3]]` and factors `A_k` equals
/// the CPD with factors `B_k = A_k Xi_k`, so a set of wide low-rank factor
/// matrices carries a full Tucker model.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    b1: Matrix,
    b2: Matrix,
    b3: Matrix,
}

impl FactorSet {
    pub fn new(b1: Matrix, b2: Matrix, b3: Matrix) -> Result<Self> {
        if b1.cols() != b2.cols() || b2.cols() != b3.cols() {
            return Err(Error::InvalidArgument(format!(
                "factor column counts must agree, got {}, {}, {}",
                b1.cols(),
                b2.cols(),
                b3.cols()
            )));
        }
        for (k, b) in [&b1, &b2, &b3].iter().enumerate() {
            if !b.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "factor {} contains non-finite entries",
                    k + 1
                )));
            }
        }
        Ok(Self { b1, b2, b3 })
    }

    /// Factor matrix for mode `k` in `{1,2,3}`.
    pub fn factor(&self, k: usize) -> &Matrix {
        match k {
            1 => &self.b1,
            2 => &self.b2,
            3 => &self.b3,
            _ => panic!("mode must be 1, 2 or 3, got {k}"),
        }
    }

    pub fn set_factor(&mut self, k: usize, m: Matrix) -> Result<()> {
        if m.cols() != self.n_components() {
            return Err(Error::InvalidArgument(format!(
                "replacement factor has {} columns, expected {}",
                m.cols(),
                self.n_components()
            )));
        }
        match k {
            1 => self.b1 = m,
            2 => self.b2 = m,
            3 => self.b3 = m,
            _ => {
                return Err(Error::InvalidArgument(format!("mode must be 1, 2 or 3, got {k}")))
            }
        }
        Ok(())
    }

    /// Shared column count (the CPD width).
    pub fn n_components(&self) -> usize {
        self.b1.cols()
    }

    /// Row counts of the three factors, i.e. the tensor extents they span.
    pub fn dims(&self) -> [usize; 3] {
        [self.b1.rows(), self.b2.rows(), self.b3.rows()]
    }
}

fn check_mode(mode: usize) -> Result<()> {
    if !(1..=3).contains(&mode) {
        return Err(Error::InvalidArgument(format!("mode must be 1, 2 or 3, got {mode}")));
    }
    Ok(())
}

/// Mode-`mode` unfolding of `t` (see the module index map).
pub fn unfold(t: &Tensor3, mode: usize) -> Result<Matrix> {
    check_mode(mode)?;
    let [d0, d1, d2] = t.dims;
    let out = match mode {
        // Mode 1 is a reshape of the column-major buffer.
        1 => Matrix { rows: d0, cols: d1 * d2, data: t.data.clone() },
        2 => {
            let mut data = vec![0.0; d0 * d1 * d2];
            for i2 in 0..d2 {
                for i1 in 0..d1 {
                    for i0 in 0..d0 {
                        data[i1 + d1 * (i0 + d0 * i2)] = t.data[i0 + d0 * (i1 + d1 * i2)];
                    }
                }
            }
            Matrix { rows: d1, cols: d0 * d2, data }
        }
        _ => {
            let mut data = vec![0.0; d0 * d1 * d2];
            for i2 in 0..d2 {
                for i1 in 0..d1 {
                    for i0 in 0..d0 {
                        data[i2 + d2 * (i0 + d0 * i1)] = t.data[i0 + d0 * (i1 + d1 * i2)];
                    }
                }
            }
            Matrix { rows: d2, cols: d0 * d1, data }
        }
    };
    Ok(out)
}

/// Exact inverse of [`unfold`] under the same index map.
pub fn fold(m: &Matrix, mode: usize, dims: [usize; 3]) -> Result<Tensor3> {
    check_mode(mode)?;
    let [d0, d1, d2] = dims;
    let other: usize = dims.iter().enumerate().filter(|(i, _)| *i != mode - 1).map(|(_, d)| d).product();
    if m.rows != dims[mode - 1] || m.cols != other {
        return Err(Error::InvalidArgument(format!(
            "cannot fold a {}x{} matrix into {dims:?} along mode {mode}",
            m.rows, m.cols
        )));
    }
    let t = match mode {
        1 => Tensor3 { dims, data: m.data.clone() },
        2 => {
            let mut data = vec![0.0; d0 * d1 * d2];
            for i2 in 0..d2 {
                for i1 in 0..d1 {
                    for i0 in 0..d0 {
                        data[i0 + d0 * (i1 + d1 * i2)] = m.data[i1 + d1 * (i0 + d0 * i2)];
                    }
                }
            }
            Tensor3 { dims, data }
        }
        _ => {
            let mut data = vec![0.0; d0 * d1 * d2];
            for i2 in 0..d2 {
                for i1 in 0..d1 {
                    for i0 in 0..d0 {
                        data[i0 + d0 * (i1 + d1 * i2)] = m.data[i2 + d2 * (i0 + d0 * i1)];
                    }
                }
            }
            Tensor3 { dims, data }
        }
    };
    Ok(t)
}

/// Khatri–Rao (columnwise Kronecker) product; columns counts must agree.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::InvalidArgument(format!(
            "khatri-rao needs equal column counts, got {} and {}",
            a.cols, b.cols
        )));
    }
    let mut data = Vec::with_capacity(a.rows * b.rows * a.cols);
    for l in 0..a.cols {
        let ac = a.col(l);
        let bc = b.col(l);
        for &av in ac {
            for &bv in bc {
                data.push(av * bv);
            }
        }
    }
    Ok(Matrix { rows: a.rows * b.rows, cols: a.cols, data })
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for ja in 0..a.cols {
        for ia in 0..a.rows {
            let av = a[(ia, ja)];
            for jb in 0..b.cols {
                for ib in 0..b.rows {
                    out[(ia * b.rows + ib, ja * b.cols + jb)] = av * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Elementwise (Hadamard) product of equally shaped matrices.
pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::InvalidArgument(format!(
            "hadamard needs equal shapes, got {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    Ok(Matrix { rows: a.rows, cols: a.cols, data })
}

/// Khatri–Rao product of all factors except mode `skip`, in descending mode
/// order: `B3 (.) B2` for skip 1, `B3 (.) B1` for skip 2, `B2 (.) B1` for
/// skip 3. The row ordering matches the unfolding column order, so
/// `unfold(cpd, k) = B_k * kr_complement(f, k)^T`.
pub fn kr_complement(factors: &FactorSet, skip: usize) -> Result<Matrix> {
    check_mode(skip)?;
    match skip {
        1 => khatri_rao(factors.factor(3), factors.factor(2)),
        2 => khatri_rao(factors.factor(3), factors.factor(1)),
        _ => khatri_rao(factors.factor(2), factors.factor(1)),
    }
}

/// Sum of rank-one terms `sum_l b1[:,l] o b2[:,l] o b3[:,l]`.
pub fn cpd_reconstruct(factors: &FactorSet) -> Tensor3 {
    let [d0, d1, d2] = factors.dims();
    let mut t = Tensor3::zeros([d0, d1, d2]);
    for l in 0..factors.n_components() {
        let c1 = factors.b1.col(l);
        let c2 = factors.b2.col(l);
        let c3 = factors.b3.col(l);
        for (i2, &v3) in c3.iter().enumerate() {
            for (i1, &v2) in c2.iter().enumerate() {
                let w = v2 * v3;
                let base = d0 * (i1 + d1 * i2);
                let slab = &mut t.data[base..base + d0];
                for (s, &v1) in slab.iter_mut().zip(c1) {
                    *s += w * v1;
                }
            }
        }
    }
    t
}

/// Mode-`mode` product `t x_mode m` (contracts the mode-`mode` extent of `t`
/// with the columns of `m`).
pub fn mode_product(t: &Tensor3, m: &Matrix, mode: usize) -> Result<Tensor3> {
    check_mode(mode)?;
    if m.cols != t.dims[mode - 1] {
        return Err(Error::InvalidArgument(format!(
            "mode-{mode} product needs {} columns, got {}",
            t.dims[mode - 1],
            m.cols
        )));
    }
    let unfolded = unfold(t, mode)?;
    let product = m.matmul(&unfolded);
    let mut dims = t.dims;
    dims[mode - 1] = m.rows;
    fold(&product, mode, dims)
}

/// Tucker reconstruction `core x1 a1 x2 a2 x3 a3` via successive mode
/// products.
pub fn tucker_reconstruct(core: &Tensor3, a1: &Matrix, a2: &Matrix, a3: &Matrix) -> Result<Tensor3> {
    let t = mode_product(core, a1, 1)?;
    let t = mode_product(&t, a2, 2)?;
    mode_product(&t, a3, 3)
}

/// Masked half squared error `0.5 * sum_observed (y - x)^2`.
pub fn masked_residual(y: &Tensor3, x: &Tensor3, o: &ObservationMask) -> Result<f64> {
    if y.dims != x.dims || y.dims != o.dims() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: y {:?}, x {:?}, mask {:?}",
            y.dims,
            x.dims,
            o.dims()
        )));
    }
    let ind = o.indicator().data();
    let sum = neumaier_sum(
        y.data
            .iter()
            .zip(&x.data)
            .zip(ind)
            .map(|((&yv, &xv), &ov)| {
                let d = (yv - xv) * ov;
                d * d
            }),
    );
    Ok(0.5 * sum)
}
