//! Dense complex kernels shared by the DMD variants.

use nalgebra::{DMatrix, DMatrixView, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column block used by the product kernels.
const CHUNK: usize = 4096;

/// Relative tolerance separating "equal modulus" eigenvalues when ordering.
const MODULUS_TIE: f64 = 1e-10;

/// Thin SVD with singular values in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<Complex64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<Complex64>,
}

pub fn svd(m: DMatrixView<'_, Complex64>) -> Result<Svd> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let wide = m.nrows() < m.ncols();
    let tall = if wide { m.adjoint() } else { m.into_owned() };
    let k = tall.ncols();
    // A = Q R, R = U Σ Wᴴ  ⇒  A = (Q U) Σ Wᴴ.
    let qr = tall.qr();
    let (q, r) = (qr.q(), qr.r());
    let (ur, s, w) = jacobi_svd(r)?;
    let qu = mul(q.as_view(), ur.as_view());
    debug_assert_eq!(qu.ncols(), k);
    Ok(if wide {
        Svd { u: w, s, v_t: qu.adjoint() }
    } else {
        Svd { u: qu, s, v_t: w.adjoint() }
    })
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix, `g = U Σ Wᴴ`, with
/// singular values descending.
fn jacobi_svd(mut g: DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>)> {
    let n = g.ncols();
    debug_assert_eq!(g.nrows(), n);
    let mut w = DMatrix::<Complex64>::identity(n, n);
    let tol = (n as f64).sqrt().max(1.0) * f64::EPSILON;
    // Columns at rounding level count as null.
    let negligible = (f64::EPSILON * g.norm()).powi(2);
    let mut converged = n < 2;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        converged = true;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let (alpha, beta, gamma) = {
                    let gi = g.column(i);
                    let gj = g.column(j);
                    (gi.norm_squared(), gj.norm_squared(), gi.dotc(&gj))
                };
                let mag = gamma.norm();
                if alpha <= negligible || beta <= negligible || mag <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma.conj() / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate_columns(&mut g, i, j, c, sn, phase);
                rotate_columns(&mut w, i, j, c, sn, phase);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence("singular value decomposition"));
    }
    let sigma: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let mut u = DMatrix::zeros(n, n);
    let mut wp = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut null = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        s.push(sigma[src]);
        wp.set_column(dst, &w.column(src));
        if sigma[src] * sigma[src] > negligible {
            u.set_column(dst, &g.column(src).unscale(sigma[src]));
        } else {
            null.push(dst);
        }
    }
    complete_orthonormal(&mut u, &null);
    Ok((u, s, wp))
}

/// `(gᵢ, gⱼ) ← (c gᵢ − s φ gⱼ, s gᵢ + c φ gⱼ)`.
fn rotate_columns(g: &mut DMatrix<Complex64>, i: usize, j: usize, c: f64, s: f64, phase: Complex64) {
    let nrows = g.nrows();
    let data = g.as_mut_slice();
    let (head, tail) = data.split_at_mut(j * nrows);
    let gi = &mut head[i * nrows..(i + 1) * nrows];
    let gj = &mut tail[..nrows];
    for (a, b) in gi.iter_mut().zip(gj.iter_mut()) {
        let bp = *b * phase;
        let new_a = *a * c - bp * s;
        *b = *a * s + bp * c;
        *a = new_a;
    }
}

/// Fills the listed columns of `u` so all its columns are orthonormal.
fn complete_orthonormal(u: &mut DMatrix<Complex64>, missing: &[usize]) {
    let n = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|c| !missing.contains(c)).collect();
    let mut candidate = 0;
    for &col in missing {
        loop {
            let mut v = nalgebra::DVector::<Complex64>::zeros(n);
            v[candidate % n] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj = u.column(f).dotc(&v);
                    v -= u.column(f) * proj;
                }
            }
            let norm = v.norm();
            if norm > 0.5 {
                u.set_column(col, &v.unscale(norm));
                filled.push(col);
                break;
            }
        }
    }
}

/// Default cutoff `max(rows, cols)·ε`.
pub fn default_rtol(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

/// Number of singular values at or above `rtol·σ_max`.
pub fn numerical_rank(s: &[f64], rtol: f64) -> usize {
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    s.iter().take_while(|&&x| x >= rtol * smax).count()
}

/// Moore–Penrose pseudo-inverse, treating `σ < rtol·σ_max` as zero.
pub fn pseudo_inverse(m: &DMatrix<Complex64>, rtol: f64) -> Result<DMatrix<Complex64>> {
    if !(rtol >= 0.0) {
        return Err(Error::invalid(format!("rtol must be ≥ 0, got {rtol}")));
    }
    let Svd { u, s, v_t } = svd(m.as_view())?;
    let r = numerical_rank(&s, rtol);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &sk) in s.iter().enumerate().take(r) {
        let vk = v_t.row(k).adjoint();
        let uk = u.column(k).adjoint();
        out += (vk * uk).unscale(sk);
    }
    Ok(out)
}

/// `a · b`, computed through real matrix products.
pub fn mul(a: DMatrixView<'_, Complex64>, b: DMatrixView<'_, Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (ar, ai) = split(a);
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    let mut start = 0;
    while start < b.ncols() {
        let len = CHUNK.min(b.ncols() - start);
        let (br, bi) = split(b.columns(start, len));
        let mut re = &ar * &br;
        let mut im = DMatrix::<f64>::zeros(a.nrows(), len);
        if let Some(ai) = &ai {
            im.gemm(1.0, ai, &br, 0.0);
        }
        if let Some(bi) = &bi {
            im.gemm(1.0, &ar, bi, 1.0);
            if let Some(ai) = &ai {
                re.gemm(-1.0, ai, bi, 1.0);
            }
        }
        for (dst, (r, i)) in out.columns_mut(start, len).iter_mut().zip(re.iter().zip(im.iter())) {
            *dst = Complex64::new(*r, *i);
        }
        start += len;
    }
    out
}

/// `a · bᴴ` for two matrices with the same column count.
pub fn mul_adjoint(a: DMatrixView<'_, Complex64>, b: DMatrixView<'_, Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.ncols(), b.ncols(), "column counts differ");
    let (p, q) = (a.nrows(), b.nrows());
    let mut re = DMatrix::<f64>::zeros(p, q);
    let mut im = DMatrix::<f64>::zeros(p, q);
    let mut start = 0;
    while start < a.ncols() {
        let len = CHUNK.min(a.ncols() - start);
        let (ar, ai) = split(a.columns(start, len));
        let (br, bi) = split_transposed(b.columns(start, len));
        // (Ar + iAi)(Brᵀ − iBiᵀ)
        re.gemm(1.0, &ar, &br, 1.0);
        if let (Some(ai), Some(bi)) = (&ai, &bi) {
            re.gemm(1.0, ai, bi, 1.0);
        }
        if let Some(ai) = &ai {
            im.gemm(1.0, ai, &br, 1.0);
        }
        if let Some(bi) = &bi {
            im.gemm(-1.0, &ar, bi, 1.0);
        }
        start += len;
    }
    DMatrix::from_fn(p, q, |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// Time average `(1/n) a bᴴ` over the `n` columns.
pub fn cross_moment(a: DMatrixView<'_, Complex64>, b: DMatrixView<'_, Complex64>) -> DMatrix<Complex64> {
    let n = a.ncols() as f64;
    mul_adjoint(a, b).unscale(n)
}

fn split(m: DMatrixView<'_, Complex64>) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let re = m.map(|z| z.re);
    let im = if m.iter().any(|z| z.im != 0.0) { Some(m.map(|z| z.im)) } else { None };
    (re, im)
}

fn split_transposed(m: DMatrixView<'_, Complex64>) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
    let re = DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].re);
    let im = if m.iter().any(|z| z.im != 0.0) {
        Some(DMatrix::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].im))
    } else {
        None
    };
    (re, im)
}

/// Eigenvalues with right vectors (columns of `right`) and left vectors
/// (rows of `left = right⁻¹`, so `left · right = I`).
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right: DMatrix<Complex64>,
    pub left: DMatrix<Complex64>,
    /// Condition number of `right`.
    pub condition: f64,
}

/// Eigen-decomposition through the complex Schur form.
///
/// Right vectors come from back substitution on the triangular factor and
/// are normalized to unit length; left vectors are the rows of their inverse.
/// Eigenvalues are ordered by descending modulus, then descending imaginary
/// part.
pub fn eig_left_right(c: &DMatrix<Complex64>, cond_limit: f64) -> Result<EigenDecomposition> {
    let (q, t) = schur(c)?;
    let n = t.nrows();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let smin = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        y[(j, j)] = Complex64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for l in i + 1..=j {
                s += t[(i, l)] * y[(l, j)];
            }
            let mut d = t[(i, i)] - t[(j, j)];
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            y[(i, j)] = -s / d;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        col.unscale_mut(norm);
    }

    let order = spectral_order(&values);
    let values: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    let right = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);

    let s = svd(right.as_view())?.s;
    let condition = if s[n - 1] > 0.0 { s[0] / s[n - 1] } else { f64::INFINITY };
    if !(condition <= cond_limit) {
        return Err(Error::NearDefective { cond: condition, limit: cond_limit });
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or(Error::NearDefective { cond: condition, limit: cond_limit })?;
    Ok(EigenDecomposition { values, right, left, condition })
}

/// Eigenvalues only, in the same order as [`eig_left_right`].
pub fn eigenvalues(c: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let (_, t) = schur(c)?;
    let values: Vec<Complex64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    Ok(spectral_order(&values).into_iter().map(|i| values[i]).collect())
}

fn schur(c: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if !c.is_square() {
        return Err(Error::Shape(format!("eigenproblem needs a square matrix, got {}×{}", c.nrows(), c.ncols())));
    }
    if c.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = c.nrows();
    let (q, t) = Schur::try_new(c.clone(), f64::EPSILON, 1000 * n)
        .ok_or(Error::NoConvergence("Schur decomposition"))?
        .unpack();
    Ok((q, t))
}

/// Permutation putting `values` in descending modulus; runs of equal modulus
/// (relative gap below 1e-10) are ordered by descending imaginary part.
pub fn spectral_order(values: &[Complex64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .norm()
            .total_cmp(&values[a].norm())
            .then(values[b].im.total_cmp(&values[a].im))
            .then(values[b].re.total_cmp(&values[a].re))
    });
    let mut start = 0;
    while start < idx.len() {
        let head = values[idx[start]].norm();
        let mut end = start + 1;
        while end < idx.len() && head - values[idx[end]].norm() <= MODULUS_TIE * head.max(f64::MIN_POSITIVE) {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| {
            values[b].im.total_cmp(&values[a].im).then(values[b].re.total_cmp(&values[a].re))
        });
        start = end;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn fro(m: &DMatrix<Complex64>) -> f64 {
        m.norm()
    }

    #[test]
    fn pinv_of_identity_and_rank_deficient_diagonal() {
        let i3 = DMatrix::<Complex64>::identity(3, 3);
        assert!(fro(&(pseudo_inverse(&i3, 1e-12).unwrap() - &i3)) < 1e-15);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]));
        let p = pseudo_inverse(&d, 1e-12).unwrap();
        assert!((p[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(p[(1, 1)], c(0.0, 0.0));
        assert!(matches!(pseudo_inverse(&DMatrix::zeros(0, 3), 0.0), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn svd_of_rank_one_and_nearly_deficient_matrices() {
        let outer = random(7, 1, 9) * random(1, 3, 10);
        let mut bumped = outer.clone();
        bumped[(0, 0)] += c(1e-9, 0.0);
        for m in [outer.clone(), outer.adjoint(), bumped, DMatrix::zeros(3, 5)] {
            let d = svd(m.as_view()).unwrap();
            let s = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.s.len(), d.s.iter().map(|&x| c(x, 0.0))));
            assert!(fro(&(&d.u * s * &d.v_t - &m)) <= 1e-13 * fro(&m).max(1.0));
            let k = d.s.len();
            assert!(fro(&(d.u.adjoint() * &d.u - DMatrix::identity(k, k))) < 1e-12);
            assert!(fro(&(&d.v_t * d.v_t.adjoint() - DMatrix::identity(k, k))) < 1e-12);
        }
        let d = svd(outer.as_view()).unwrap();
        assert_eq!(numerical_rank(&d.s, default_rtol(7, 3)), 1);
    }

    #[test]
    fn pinv_full_rank_tall() {
        let m = random(5, 3, 1);
        let p = pseudo_inverse(&m, default_rtol(5, 3)).unwrap();
        assert!(fro(&(&m * &p * &m - &m)) <= 1e-12 * fro(&m));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn svd_reconstructs_low_rank(rows in 1usize..12, cols in 1usize..12, rank_cut in 1usize..12, seed: u64) {
            let r = rank_cut.min(rows).min(cols);
            let m = random(rows, r, seed) * random(r, cols, seed ^ 0x55);
            let d = svd(m.as_view()).unwrap();
            prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
            let s = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.s.len(), d.s.iter().map(|&x| c(x, 0.0))));
            prop_assert!(fro(&(&d.u * s * &d.v_t - &m)) <= 1e-12 * fro(&m));
            let k = d.s.len();
            prop_assert!(fro(&(d.u.adjoint() * &d.u - DMatrix::identity(k, k))) < 1e-12);
            prop_assert!(fro(&(&d.v_t * d.v_t.adjoint() - DMatrix::identity(k, k))) < 1e-12);
        }

        #[test]
        fn penrose_identities(rows in 1usize..12, cols in 1usize..12, rank_cut in 0usize..12, seed: u64) {
            let r = rank_cut.min(rows).min(cols).max(1);
            let m = random(rows, r, seed) * random(r, cols, seed ^ 0x55);
            let p = pseudo_inverse(&m, 1e-10).unwrap();
            let nm = fro(&m);
            let np = fro(&p);
            prop_assert!(fro(&(&m * &p * &m - &m)) <= 1e-10 * nm);
            prop_assert!(fro(&(&p * &m * &p - &p)) <= 1e-10 * np);
            let mp = &m * &p;
            prop_assert!(fro(&(&mp - mp.adjoint())) <= 1e-10 * fro(&mp).max(1.0));
            let pm = &p * &m;
            prop_assert!(fro(&(&pm - pm.adjoint())) <= 1e-10 * fro(&pm).max(1.0));
        }
    }

    #[test]
    fn products_match_naive() {
        let a = random(7, 9000, 2);
        let b = random(5, 9000, 3);
        let fast = mul_adjoint(a.as_view(), b.as_view());
        let slow = &a * b.adjoint();
        assert!(fro(&(fast - &slow)) < 1e-9 * fro(&slow));
        let w = random(4, 7, 4);
        let fast = mul(w.as_view(), a.as_view());
        let slow = &w * &a;
        assert!(fro(&(fast - &slow)) < 1e-10 * fro(&slow));
        let real = a.map(|z| c(z.re, 0.0));
        let slow = &real * real.adjoint();
        assert!(fro(&(mul_adjoint(real.as_view(), real.as_view()) - &slow)) < 1e-9 * fro(&slow));
    }

    #[test]
    fn diagonal_eigenproblem() {
        let d = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let e = eig_left_right(&d, 1e12).unwrap();
        assert_eq!(e.values, vec![c(3.0, 0.0), c(2.0, 0.0)]);
        assert!((e.right[(1, 0)].norm() - 1.0).abs() < 1e-15 && e.right[(0, 0)].norm() < 1e-15);
        assert!((e.right[(0, 1)].norm() - 1.0).abs() < 1e-15 && e.right[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn rotation_generator_has_imaginary_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let e = eig_left_right(&m, 1e12).unwrap();
        assert!((e.values[0] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((e.values[1] - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn jordan_block_is_near_defective() {
        let j = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(eig_left_right(&j, 1e12), Err(Error::NearDefective { .. })));
    }

    #[test]
    fn random_eigenpairs_are_biorthogonal() {
        for seed in 0..20 {
            let n = 2 + (seed as usize % 15);
            let m = random(n, n, 100 + seed);
            let e = eig_left_right(&m, 1e12).unwrap();
            for (k, lam) in e.values.iter().enumerate() {
                let v = e.right.column(k);
                assert!((&m * v - v * *lam).norm() < 1e-10 * fro(&m));
            }
            let wv = &e.left * &e.right;
            assert!(fro(&(wv - DMatrix::identity(n, n))) < 1e-8);
            for w in e.values.windows(2) {
                assert!(w[0].norm() >= w[1].norm() - 1e-12);
            }
        }
    }

    #[test]
    fn real_matrix_conjugate_pairs_order_by_imaginary_part() {
        let a = crate::rds_sim::NoisyLinear::REFERENCE_A;
        let m = DMatrix::from_fn(4, 4, |i, j| c(a[i][j], 0.0));
        let v = eigenvalues(&m).unwrap();
        assert!((v[0] - c(-0.85, 0.0)).norm() < 1e-12);
        assert!((v[1] - c(0.2, 0.8)).norm() < 1e-12);
        assert!((v[2] - c(0.2, -0.8)).norm() < 1e-12);
        assert!((v[3] - c(0.75, 0.0)).norm() < 1e-12);
    }
}
