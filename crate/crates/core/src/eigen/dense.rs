use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};
use num_complex::Complex64;

use super::{effective_shift, quadratic_form, relative_residual, residual_floor, EigenPairs, SpectralRequest};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

fn to_dense(a: &CsrMatrix<Complex64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), a.ncols());
    for (r, c, v) in a.iter() {
        out[(r, c)] = v;
    }
    out
}

fn hermitian_part(a: &Mat<c64>) -> Mat<c64> {
    Mat::<c64>::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Dense shift-invert eigensolve.
///
/// With `A = K - sigma M` and `M = L L^H`, the Hermitian matrix `L^H A^-1 L`
/// has eigenvalues `1 / (lambda - sigma)`, so the wanted pairs sit at the top
/// of its spectrum where a dense decomposition is accurate relative to them.
/// Two rounds of subspace iteration with Rayleigh-Ritz on the pencil polish
/// the result.
pub fn dense_pairs(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, req: &SpectralRequest) -> Result<EigenPairs> {
    let n = k.nrows();
    let nev = req.n_pairs;
    let sigma = effective_shift(k, m, req);
    let kd = to_dense(k);
    let md = to_dense(m);
    let a = Mat::<c64>::from_fn(n, n, |i, j| kd[(i, j)] - md[(i, j)] * sigma);
    let lu = a.partial_piv_lu();
    let llt = md.llt(Side::Lower).map_err(|e| Error::Integrity(format!("mass matrix Cholesky failed: {e:?}")))?;
    let l = llt.L().to_owned();

    let mut w = l.clone();
    lu.solve_in_place(w.as_mut());
    if !(0..n).all(|j| (0..n).all(|i| w[(i, j)].re.is_finite() && w[(i, j)].im.is_finite())) {
        return Err(Error::Integrity("K - sigma M is singular; move the shift".into()));
    }
    let h = hermitian_part(&(l.adjoint() * &w));
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Integrity(format!("dense eigendecomposition failed: {e:?}")))?;
    let mu = evd.S().column_vector();
    let positive: Vec<usize> = (0..n).rev().filter(|&i| mu[i].re > 0.0).collect();
    if positive.len() < nev {
        return Err(Error::invalid(format!(
            "only {} eigenvalues lie above the shift, {nev} requested",
            positive.len()
        )));
    }
    // Take a few extra directions so the refinement separates the wanted pairs.
    let extra = (nev + 4).min(positive.len());
    let u = Mat::<c64>::from_fn(n, extra, |i, j| evd.U()[(i, positive[j])]);
    let mut x = &w * &u;

    for _ in 0..2 {
        let mut y = &md * &x;
        lu.solve_in_place(y.as_mut());
        x = y;
        x = rayleigh_ritz(&kd, &md, &x, sigma)?;
    }

    let k_norm = k.inf_norm();
    let mut pairs: Vec<(f64, Vec<Complex64>, f64)> = Vec::with_capacity(extra);
    for j in 0..extra {
        let v: Vec<Complex64> = (0..n).map(|i| x[(i, j)]).collect();
        let xkx = quadratic_form(k, &v);
        let xmx = quadratic_form(m, &v).re;
        pairs.push((xkx.re / xmx, v, xkx.im / xmx));
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let first = match req.shift {
        Some(s) => pairs.iter().position(|p| p.0 >= s).unwrap_or(pairs.len()),
        None => 0,
    };
    if first + nev > pairs.len() {
        return Err(Error::invalid("too few eigenvalues above the shift".to_string()));
    }
    let scale = pairs[first..first + nev].iter().map(|p| p.0.abs()).fold(f64::MIN_POSITIVE, f64::max);
    let mut out = EigenPairs {
        values: Vec::new(),
        vectors: Vec::new(),
        residuals: Vec::new(),
        floors: Vec::new(),
        max_imaginary: 0.0,
    };
    for (lambda, v, imag) in pairs.into_iter().skip(first).take(nev) {
        let xmx = quadratic_form(m, &v).re;
        let v: Vec<Complex64> = v.iter().map(|z| z / xmx.sqrt()).collect();
        out.max_imaginary = out.max_imaginary.max(imag.abs() / scale);
        out.residuals.push(relative_residual(k, m, k_norm, lambda, &v));
        out.floors.push(residual_floor(k, k_norm, &v));
        out.values.push(lambda);
        out.vectors.push(v);
    }
    Ok(out)
}

/// Ritz vectors of `(K, M)` on the span of `x`, ordered by distance above `sigma`.
fn rayleigh_ritz(kd: &Mat<c64>, md: &Mat<c64>, x: &Mat<c64>, sigma: f64) -> Result<Mat<c64>> {
    let kp = hermitian_part(&(x.adjoint() * (kd * x)));
    let mp = hermitian_part(&(x.adjoint() * (md * x)));
    let c = x.ncols();
    let llt = mp.llt(Side::Lower).map_err(|_| Error::Integrity("projected mass matrix lost definiteness".into()))?;
    let lp = llt.L().to_owned();
    // C = Lp^-1 Kp Lp^-H.
    let lp_inv = {
        let mut id = Mat::<c64>::identity(c, c);
        faer::linalg::triangular_solve::solve_lower_triangular_in_place(lp.as_ref(), id.as_mut(), faer::Par::Seq);
        id
    };
    let cmat = hermitian_part(&(&lp_inv * &kp * lp_inv.adjoint()));
    let evd = cmat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Integrity(format!("projected eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| (s[i].re - sigma).total_cmp(&(s[j].re - sigma)));
    let y = lp_inv.adjoint() * evd.U();
    let ysorted = Mat::<c64>::from_fn(c, c, |i, j| y[(i, order[j])]);
    Ok(x * ysorted)
}
