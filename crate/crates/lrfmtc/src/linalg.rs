//! Matrix-analysis kernels for the solvers: thin SVD, singular value
//! shrinkage (the nuclear-norm proximal map), the Hadamard product of factor
//! Gram matrices, and the dominant eigenvalue that bounds the step size.
//!
//! The SVD is a Householder QR of the (possibly transposed) input followed by
//! a one-sided Jacobi sweep on the small square triangular factor. Every
//! matrix passing through the solvers is short-and-wide (`I_k x L`), so the
//! Jacobi stage only ever sees `min(rows, cols)` columns.

use crate::error::{Error, Result};
use crate::tensor::{hadamard, FactorSet, Matrix};
use crate::util::neumaier_sum;

/// Thin SVD `input = u * diag(s) * vt` with `r = min(rows, cols)` triplets.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x r`, orthonormal columns.
    pub u: Matrix,
    /// Singular values, nonincreasing, all `>= 0`.
    pub s: Vec<f64>,
    /// `r x cols`, orthonormal rows.
    pub vt: Matrix,
}

impl SvdResult {
    /// Sum of singular values.
    pub fn nuclear_norm(&self) -> f64 {
        neumaier_sum(self.s.iter().copied())
    }

    /// `u * diag(s) * vt`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &sv) in self.s.iter().enumerate() {
            for v in us.col_mut(j) {
                *v *= sv;
            }
        }
        us.matmul(&self.vt)
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
const POWER_MAX_ITERS: usize = 5000;

pub fn thin_svd(m: &Matrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument(
            "svd input contains non-finite entries".into(),
        ));
    }
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        // Factor the transpose and swap the roles of u and v.
        let t = svd_tall(&m.transpose())?;
        Ok(SvdResult { u: t.vt.transpose(), s: t.s, vt: t.u.transpose() })
    }
}

/// Thin SVD of a tall (rows >= cols) matrix via QR + one-sided Jacobi.
fn svd_tall(m: &Matrix) -> Result<SvdResult> {
    let (q, r) = householder_qr(m);
    let n = m.cols();
    let (w, v, sweeps_left) = jacobi_orthogonalize(r);
    if sweeps_left == 0 {
        return Err(Error::Numerical(format!(
            "jacobi svd did not converge within {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    // Column norms of w are the singular values; normalized columns span u.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| norm(w.col(j))).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut s = Vec::with_capacity(n);
    let mut ur = Matrix::zeros(n, n);
    let mut vt = Matrix::zeros(n, n);
    let smax = norms[order[0]];
    for (dst, &src) in order.iter().enumerate() {
        let sv = norms[src];
        s.push(sv);
        if sv > smax * f64::EPSILON * n as f64 {
            let inv = 1.0 / sv;
            for (o, &wv) in ur.col_mut(dst).iter_mut().zip(w.col(src)) {
                *o = wv * inv;
            }
        }
        for (i, &vv) in v.col(src).iter().enumerate() {
            vt[(dst, i)] = vv;
        }
    }
    fill_null_columns(&mut ur, &s, smax);
    Ok(SvdResult { u: q.matmul(&ur), s, vt })
}

/// Replaces the (arbitrary) columns belonging to zero singular values with an
/// orthonormal completion so `u^T u = I` holds even for rank-deficient input.
fn fill_null_columns(u: &mut Matrix, s: &[f64], smax: f64) {
    let n = u.rows();
    let tiny = smax * f64::EPSILON * n as f64;
    for j in 0..s.len() {
        if s[j] > tiny {
            continue;
        }
        // Gram-Schmidt a basis vector against the existing columns.
        'basis: for b in 0..n {
            let mut cand = vec![0.0; n];
            cand[b] = 1.0;
            for (prev, &sv) in s.iter().enumerate() {
                if prev == j || (sv <= tiny && prev > j) {
                    continue;
                }
                let dot: f64 = u.col(prev).iter().zip(&cand).map(|(a, c)| a * c).sum();
                for (cv, uv) in cand.iter_mut().zip(u.col(prev)) {
                    *cv -= dot * uv;
                }
            }
            let nrm = norm(&cand);
            if nrm > 0.5 {
                for (o, c) in u.col_mut(j).iter_mut().zip(&cand) {
                    *o = c / nrm;
                }
                break 'basis;
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    neumaier_sum(v.iter().map(|x| x * x)).sqrt()
}

/// Householder QR of a tall matrix: returns thin `q` (rows x cols, orthonormal
/// columns) and square upper-triangular `r` with `m = q * r`.
fn householder_qr(m: &Matrix) -> (Matrix, Matrix) {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);

    for j in 0..cols {
        let mut v: Vec<f64> = a.col(j)[j..].to_vec();
        let sigma = norm(&v);
        if sigma == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -sigma } else { sigma };
        v[0] -= alpha;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            a[(j, j)] = alpha;
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        // Apply H = I - 2vv^T to the trailing columns.
        for c in j..cols {
            let col = a.col_mut(c);
            let dot: f64 = v.iter().zip(&col[j..]).map(|(x, y)| x * y).sum();
            for (x, y) in col[j..].iter_mut().zip(&v) {
                *x -= 2.0 * dot * y;
            }
        }
        a[(j, j)] = alpha;
        for i in j + 1..rows {
            a[(i, j)] = 0.0;
        }
        reflectors.push(v);
    }

    let mut r = Matrix::zeros(cols, cols);
    for c in 0..cols {
        for rr in 0..=c {
            r[(rr, c)] = a[(rr, c)];
        }
    }

    // Accumulate the thin q by applying the reflectors to I's first columns.
    let mut q = Matrix::zeros(rows, cols);
    for j in 0..cols {
        q[(j, j)] = 1.0;
    }
    for j in (0..cols).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..cols {
            let col = q.col_mut(c);
            let dot: f64 = v.iter().zip(&col[j..]).map(|(x, y)| x * y).sum();
            for (x, y) in col[j..].iter_mut().zip(v) {
                *x -= 2.0 * dot * y;
            }
        }
    }
    (q, r)
}

/// One-sided Jacobi: rotates column pairs of `c` until mutually orthogonal,
/// accumulating the rotations in `v`, so `c_in = c_out * v^T` with orthogonal
/// `v`. Returns `(c_out, v, sweeps_remaining)`; zero remaining sweeps means
/// no convergence.
fn jacobi_orthogonalize(c: Matrix) -> (Matrix, Matrix, usize) {
    let n = c.cols();
    let mut w = c;
    let mut v = Matrix::identity(n);
    let tol = 1e-14;

    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        // Squared column norms, refreshed per sweep and updated in place per
        // rotation (app' = app - t*apq, aqq' = aqq + t*apq).
        let mut norms2: Vec<f64> = (0..n)
            .map(|j| w.col(j).iter().map(|x| x * x).sum())
            .collect();
        let floor = norms2.iter().fold(0.0f64, |a, &x| a.max(x)) * (f64::EPSILON * f64::EPSILON);
        for p in 0..n {
            for q in (p + 1)..n {
                let (app, aqq) = (norms2[p].max(0.0), norms2[q].max(0.0));
                // Numerically zero columns are already orthogonal to
                // everything that matters.
                if app <= floor || aqq <= floor {
                    continue;
                }
                let apq: f64 = w.col(p).iter().zip(w.col(q)).map(|(x, y)| x * y).sum();
                if apq == 0.0 || apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_cols(&mut w, p, q, cs, sn);
                rotate_cols(&mut v, p, q, cs, sn);
                norms2[p] = app - t * apq;
                norms2[q] = aqq + t * apq;
            }
        }
        if !rotated {
            return (w, v, JACOBI_MAX_SWEEPS - sweep);
        }
    }
    (w, v, 0)
}

fn rotate_cols(m: &mut Matrix, p: usize, q: usize, cs: f64, sn: f64) {
    let rows = m.rows();
    let (pp, qq) = (p.min(q), p.max(q));
    let data = m.data_mut();
    let (head, tail) = data.split_at_mut(qq * rows);
    let colp = &mut head[pp * rows..pp * rows + rows];
    let colq = &mut tail[..rows];
    if p < q {
        for (x, y) in colp.iter_mut().zip(colq.iter_mut()) {
            let xp = *x;
            *x = cs * xp - sn * *y;
            *y = sn * xp + cs * *y;
        }
    } else {
        for (y, x) in colp.iter_mut().zip(colq.iter_mut()) {
            let xp = *x;
            *x = cs * xp - sn * *y;
            *y = sn * xp + cs * *y;
        }
    }
}

/// Singular value shrinkage: `u * diag(max(s_i - threshold, 0)) * vt`, the
/// proximal map of `threshold * ||.||_*`.
pub fn svt(m: &Matrix, threshold: f64) -> Result<Matrix> {
    Ok(svt_with_values(m, threshold)?.0)
}

/// Like [`svt`] but also returns the shrunk singular values, which the solver
/// reuses as the nuclear norm of the output.
pub fn svt_with_values(m: &Matrix, threshold: f64) -> Result<(Matrix, Vec<f64>)> {
    let (out, shrunk, _) = svt_factored(m, threshold)?;
    Ok((out, shrunk))
}

/// Shrunk matrix, shrunk singular values, and (when available) the
/// rank-truncated `us * vt` factorization of the result.
pub(crate) type SvtFactored = (Matrix, Vec<f64>, Option<(Matrix, Matrix)>);

/// SVT that additionally exposes the rank-truncated factors
/// `out = us * vt` (`us` carries the shrunk singular values); `None` for a
/// fully shrunk (zero) result. The solver leans on the factored form to keep
/// its products proportional to the shrunk rank.
pub(crate) fn svt_factored(m: &Matrix, threshold: f64) -> Result<SvtFactored> {
    if threshold < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "shrinkage threshold must be nonnegative, got {threshold}"
        )));
    }
    if threshold == 0.0 {
        let svd = thin_svd(m)?;
        return Ok((m.clone(), svd.s, None));
    }
    let svd = thin_svd(m)?;
    let shrunk: Vec<f64> = svd.s.iter().map(|&s| (s - threshold).max(0.0)).collect();
    let rank = shrunk.iter().take_while(|&&s| s > 0.0).count();
    if rank == 0 {
        return Ok((Matrix::zeros(m.rows(), m.cols()), shrunk, None));
    }
    // Rank-truncated product of the shrunk triplets.
    let mut us = Matrix::zeros(m.rows(), rank);
    let mut vt = Matrix::zeros(rank, m.cols());
    for j in 0..rank {
        for (o, &uv) in us.col_mut(j).iter_mut().zip(svd.u.col(j)) {
            *o = uv * shrunk[j];
        }
        for c in 0..m.cols() {
            vt[(j, c)] = svd.vt[(j, c)];
        }
    }
    let out = us.matmul(&vt);
    Ok((out, shrunk, Some((us, vt))))
}

/// Hadamard product of the Gram matrices of the two factors other than
/// `skip`: `(B_h^T B_h) .* (B_h'^T B_h')`, an `L x L` symmetric PSD matrix.
pub fn gram_hadamard(factors: &FactorSet, skip: usize) -> Result<Matrix> {
    if !(1..=3).contains(&skip) {
        return Err(Error::InvalidArgument(format!("mode must be 1, 2 or 3, got {skip}")));
    }
    let others: Vec<usize> = (1..=3).filter(|&k| k != skip).collect();
    let g0 = factors.factor(others[0]).matmul_transa(factors.factor(others[0]));
    let g1 = factors.factor(others[1]).matmul_transa(factors.factor(others[1]));
    let mut g = hadamard(&g0, &g1)?;
    // Symmetrize away the rounding noise of the two gemms.
    let n = g.cols();
    for c in 0..n {
        for r in 0..c {
            let avg = 0.5 * (g[(r, c)] + g[(c, r)]);
            g[(r, c)] = avg;
            g[(c, r)] = avg;
        }
    }
    Ok(g)
}

/// Largest eigenvalue of a symmetric matrix by power iteration with a
/// Rayleigh-quotient convergence test (relative change below 1e-10, capped at
/// 5000 iterations). Hitting the cap is a numerical error carrying the last
/// estimate.
pub fn max_eig_sym(m: &Matrix) -> Result<f64> {
    let (lambda, converged) = max_eig_estimate(m)?;
    if !converged {
        return Err(Error::Numerical(format!(
            "power iteration hit the {POWER_MAX_ITERS}-iteration cap, last estimate {lambda}"
        )));
    }
    Ok(lambda)
}

/// Power-iteration estimate plus a convergence flag. Tightly clustered top
/// eigenvalues can keep the Rayleigh test from settling within the cap while
/// the estimate is already accurate to far better than a step-size needs;
/// the solver uses the unconverged estimate with a safety margin.
pub(crate) fn max_eig_estimate(m: &Matrix) -> Result<(f64, bool)> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.data().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for r in 0..n {
        for c in (r + 1)..n {
            if (m[(r, c)] - m[(c, r)]).abs() > 1e-10 * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({r},{c}): {} vs {}",
                    m[(r, c)],
                    m[(c, r)]
                )));
            }
        }
    }
    if scale == 0.0 {
        return Ok((0.0, true));
    }
    let mut sym = m.clone();
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (sym[(r, c)] + sym[(c, r)]);
            sym[(r, c)] = avg;
            sym[(c, r)] = avg;
        }
    }
    // Unshifted pass first: for PSD input (every matrix the solver feeds in)
    // it converges to the top eigenvalue directly. If the dominant eigenvalue
    // turns out negative, rerun shifted so the algebraically largest one wins.
    match power_iterate(&sym, 0.0) {
        (lambda, conv) if lambda >= 0.0 => Ok((lambda, conv)),
        (lambda, _) => {
            let shift = 2.0 * lambda.abs();
            let (shifted, conv) = power_iterate(&sym, shift);
            Ok((shifted, conv))
        }
    }
}

fn power_iterate(sym: &Matrix, shift: f64) -> (f64, bool) {
    let n = sym.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda_prev = f64::NAN;
    let mut reseed: u64 = 1;
    let floor = sym.data().iter().fold(0.0f64, |a, &x| a.max(x.abs())) + shift;
    for iter in 0..POWER_MAX_ITERS {
        let mut w = vec![0.0; n];
        for c in 0..n {
            let vc = v[c];
            for r in 0..n {
                w[r] += sym[(r, c)] * vc;
            }
        }
        if shift != 0.0 {
            for (wr, vr) in w.iter_mut().zip(&v) {
                *wr += shift * vr;
            }
        }
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let wnorm = norm(&w);
        if wnorm <= f64::EPSILON * floor {
            // v landed in the null space; restart from a deterministic
            // pseudo-random direction.
            let mut state = reseed;
            reseed = reseed.wrapping_add(1);
            for x in v.iter_mut() {
                state = crate::util::splitmix64(state);
                *x = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            }
            let nn = norm(&v);
            for x in v.iter_mut() {
                *x /= nn;
            }
            continue;
        }
        for (vr, wr) in v.iter_mut().zip(&w) {
            *vr = wr / wnorm;
        }
        let lambda = rayleigh - shift;
        if iter > 0 {
            let denom = lambda.abs().max(lambda_prev.abs()).max(f64::EPSILON);
            if (lambda - lambda_prev).abs() / denom < 1e-10 {
                return (lambda, true);
            }
        }
        lambda_prev = lambda;
    }
    (lambda_prev, false)
}

/// Cholesky solve of `a * x = rhs^T` for SPD `a`, returning `rhs * a^{-1}`.
/// Used by the ALS initialization on the ridge-regularized normal equations.
pub(crate) fn solve_spd(a: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if n != a.cols() || rhs.cols() != n {
        return Err(Error::InvalidArgument(format!(
            "spd solve shape mismatch: a {}x{}, rhs {}x{}",
            a.rows(),
            a.cols(),
            rhs.rows(),
            rhs.cols()
        )));
    }
    // Lower-triangular factor, a = l * l^T.
    let mut l = a.clone();
    for j in 0..n {
        for k in 0..j {
            let ljk = l[(j, k)];
            for i in j..n {
                l[(i, j)] -= l[(i, k)] * ljk;
            }
        }
        let d = l[(j, j)];
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Numerical(format!(
                "cholesky pivot {d} at column {j}; matrix not positive definite"
            )));
        }
        let inv = 1.0 / d.sqrt();
        for i in j..n {
            l[(i, j)] *= inv;
        }
    }
    // Solve l y = rhs^T row-by-row, then l^T z = y; x = z^T.
    let m = rhs.rows();
    let mut x = rhs.clone();
    for row in 0..m {
        // Forward substitution over the row treated as a vector.
        for j in 0..n {
            let mut acc = x[(row, j)];
            for k in 0..j {
                acc -= l[(j, k)] * x[(row, k)];
            }
            x[(row, j)] = acc / l[(j, j)];
        }
        for j in (0..n).rev() {
            let mut acc = x[(row, j)];
            for k in j + 1..n {
                acc -= l[(k, j)] * x[(row, k)];
            }
            x[(row, j)] = acc / l[(j, j)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::khatri_rao;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn rand_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn to_na(m: &Matrix) -> DMatrix<f64> {
        DMatrix::from_column_slice(m.rows(), m.cols(), m.data())
    }

    fn reconstruction_error(m: &Matrix) -> f64 {
        let svd = thin_svd(m).unwrap();
        let rec = svd.reconstruct();
        let mut diff = 0.0;
        for (a, b) in rec.data().iter().zip(m.data()) {
            diff += (a - b) * (a - b);
        }
        diff.sqrt() / m.fro_norm().max(f64::EPSILON)
    }

    #[test]
    fn svd_of_diagonal() {
        let m = Matrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let svd = thin_svd(&m).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14);
        assert!((svd.s[1] - 1.0).abs() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                assert!((svd.u[(i, j)].abs() - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                assert!((svd.vt[(i, j)].abs() - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn svd_of_orthogonal_is_all_ones() {
        let th: f64 = 0.7;
        let m = Matrix::new(2, 2, vec![th.cos(), th.sin(), -th.sin(), th.cos()]).unwrap();
        let svd = thin_svd(&m).unwrap();
        for s in svd.s {
            assert!((s - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn svd_matches_gram_eigensolver_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = rand_matrix(&mut rng, 5, 3);
        let svd = thin_svd(&m).unwrap();
        let gram = to_na(&m).transpose() * to_na(&m);
        let mut eig: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (s, e) in svd.s.iter().zip(eig) {
            assert!((s - e.max(0.0).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn svd_reconstructs_many_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for (r, c) in [(1, 1), (4, 4), (7, 3), (3, 9), (12, 5), (6, 30)] {
            let m = rand_matrix(&mut rng, r, c);
            assert!(reconstruction_error(&m) < 1e-12, "{r}x{c}");
        }
    }

    #[test]
    fn svd_orthonormal_even_when_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = rand_matrix(&mut rng, 6, 2);
        let b = rand_matrix(&mut rng, 2, 4);
        let m = a.matmul(&b); // rank 2 out of min-dim 4
        let svd = thin_svd(&m).unwrap();
        assert!(reconstruction_error(&m) < 1e-12);
        let gram = svd.u.matmul_transa(&svd.u);
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn svd_values_invariant_under_orthogonal_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = rand_matrix(&mut rng, 4, 4);
        let th: f64 = 1.1;
        let rot = Matrix::new(
            4,
            4,
            vec![
                th.cos(), th.sin(), 0.0, 0.0,
                -th.sin(), th.cos(), 0.0, 0.0,
                0.0, 0.0, 1.0, 0.0,
                0.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        let s0 = thin_svd(&m).unwrap().s;
        let s1 = thin_svd(&rot.matmul(&m)).unwrap().s;
        let s2 = thin_svd(&m.matmul(&rot)).unwrap().s;
        for i in 0..4 {
            assert!((s0[i] - s1[i]).abs() < 1e-12);
            assert!((s0[i] - s2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = Matrix::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(thin_svd(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let m = rand_matrix(&mut rng, 3, 5);
        let out = svt(&m, 0.0).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn svt_large_threshold_zeroes() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let m = rand_matrix(&mut rng, 4, 4);
        let smax = thin_svd(&m).unwrap().s[0];
        let out = svt(&m, smax + 1.0).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn svt_rejects_negative_threshold() {
        let m = Matrix::zeros(2, 2);
        assert!(matches!(svt(&m, -0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn svt_is_prox_optimal_under_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let z = rand_matrix(&mut rng, 4, 4);
        let tau = 0.5;
        let prox = svt(&z, tau).unwrap();
        let objective = |x: &Matrix| {
            let nuc = thin_svd(x).unwrap().nuclear_norm();
            let mut fit = 0.0;
            for (a, b) in x.data().iter().zip(z.data()) {
                fit += (a - b) * (a - b);
            }
            tau * nuc + 0.5 * fit
        };
        let best = objective(&prox);
        for _ in 0..1000 {
            let scale: f64 = rng.random_range(1e-4..1.0);
            let mut cand = prox.clone();
            for v in cand.data_mut() {
                *v += scale * rng.sample::<f64, _>(StandardNormal);
            }
            assert!(objective(&cand) >= best - 1e-12);
        }
    }

    #[test]
    fn gram_hadamard_of_orthonormal_columns_is_identity() {
        // Columns of I stacked: Gram = I, Hadamard of two identities = I.
        let f = FactorSet::new(Matrix::identity(3), Matrix::identity(3), Matrix::identity(3)).unwrap();
        let g = gram_hadamard(&f, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gram_hadamard_matches_kr_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let f = FactorSet::new(
            rand_matrix(&mut rng, 4, 3),
            rand_matrix(&mut rng, 5, 3),
            rand_matrix(&mut rng, 6, 3),
        )
        .unwrap();
        for skip in 1..=3 {
            let g = gram_hadamard(&f, skip).unwrap();
            let others: Vec<usize> = (1..=3).filter(|&k| k != skip).collect();
            // kr_complement order: higher mode first.
            let kr = khatri_rao(f.factor(others[1]), f.factor(others[0])).unwrap();
            let gram = kr.matmul_transa(&kr);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((g[(i, j)] - gram[(i, j)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gram_hadamard_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let f = FactorSet::new(
            rand_matrix(&mut rng, 4, 5),
            rand_matrix(&mut rng, 5, 5),
            rand_matrix(&mut rng, 6, 5),
        )
        .unwrap();
        let g = gram_hadamard(&f, 2).unwrap();
        let eig = to_na(&g).symmetric_eigen().eigenvalues;
        for e in eig.iter() {
            assert!(*e >= -1e-10);
        }
    }

    #[test]
    fn max_eig_diag() {
        let mut m = Matrix::zeros(3, 3);
        m[(0, 0)] = 5.0;
        m[(1, 1)] = 2.0;
        m[(2, 2)] = 1.0;
        assert!((max_eig_sym(&m).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn max_eig_identity() {
        assert!((max_eig_sym(&Matrix::identity(7)).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn max_eig_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let a = rand_matrix(&mut rng, 6, 6);
        let psd = a.matmul_transa(&a);
        let lambda = max_eig_sym(&psd).unwrap();
        let eig = to_na(&psd).symmetric_eigen().eigenvalues;
        let truth = eig.iter().fold(f64::MIN, |m, &e| m.max(e));
        assert!((lambda - truth).abs() / truth < 1e-8);
    }

    #[test]
    fn max_eig_rejects_asymmetric() {
        let m = Matrix::new(2, 2, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(max_eig_sym(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn spd_solve_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = rand_matrix(&mut rng, 5, 5);
        let mut spd = a.matmul_transa(&a);
        for i in 0..5 {
            spd[(i, i)] += 1.0;
        }
        let rhs = rand_matrix(&mut rng, 3, 5);
        let x = solve_spd(&spd, &rhs).unwrap();
        let na_sol = to_na(&spd).lu().solve(&to_na(&rhs).transpose()).unwrap();
        for r in 0..3 {
            for c in 0..5 {
                assert!((x[(r, c)] - na_sol[(c, r)]).abs() < 1e-10);
            }
        }
    }
}
