//! Shift-invert block Krylov iteration with explicit Rayleigh-Ritz restarts.
//!
//! The operator `A = (K - sigma M)^-1 M` is self-adjoint in the `M` inner
//! product. The basis `V` is kept `M`-orthonormal with two passes of classical
//! Gram-Schmidt and `Z = A V` is stored alongside it to generate the next
//! block. Ritz pairs come from projecting `K` and `M` onto the basis. On
//! restart the leading Ritz vectors are kept and the basis is extended from
//! their images under `A`.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, MatRef, Par, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    effective_shift, quadratic_form, relative_residual, residual_floor, EigenPairs, SpectralRequest, START_SEED,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Worst residual at which the subspace polish is tried.
const POLISH_START: f64 = 1e-5;
const POLISH_ROUNDS: usize = 4;

enum Factor {
    RealLlt(Llt<usize, f64>),
    RealLu(Lu<usize, f64>),
    ComplexLlt(Llt<usize, c64>),
    ComplexLu(Lu<usize, c64>),
}

impl Factor {
    fn new(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, sigma: f64, definite: bool) -> Result<Self> {
        let n = k.nrows();
        let mut trips: Vec<(usize, usize, Complex64)> = k.iter().collect();
        trips.extend(m.iter().map(|(r, c, v)| (r, c, -v * sigma)));
        let shifted = CsrMatrix::from_triplets(n, n, trips);
        let fail = |e: String| Error::Integrity(format!("factorization of K - sigma M failed: {e}"));
        if shifted.is_real() {
            let t: Vec<Triplet<usize, usize, f64>> = shifted.iter().map(|(r, c, v)| Triplet::new(r, c, v.re)).collect();
            let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t).map_err(|e| fail(format!("{e:?}")))?;
            if definite {
                if let Ok(f) = a.sp_cholesky(Side::Lower) {
                    return Ok(Factor::RealLlt(f));
                }
            }
            a.sp_lu().map(Factor::RealLu).map_err(|e| fail(format!("{e:?}")))
        } else {
            let t: Vec<Triplet<usize, usize, c64>> = shifted.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
            let a = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &t).map_err(|e| fail(format!("{e:?}")))?;
            if definite {
                if let Ok(f) = a.sp_cholesky(Side::Lower) {
                    return Ok(Factor::ComplexLlt(f));
                }
            }
            a.sp_lu().map(Factor::ComplexLu).map_err(|e| fail(format!("{e:?}")))
        }
    }

    fn solve_in_place(&self, rhs: &mut Mat<c64>) {
        match self {
            Factor::ComplexLlt(f) => f.solve_in_place(rhs.as_mut()),
            Factor::ComplexLu(f) => f.solve_in_place(rhs.as_mut()),
            Factor::RealLlt(_) | Factor::RealLu(_) => {
                let (n, b) = (rhs.nrows(), rhs.ncols());
                let mut split =
                    Mat::<f64>::from_fn(n, 2 * b, |i, j| if j < b { rhs[(i, j)].re } else { rhs[(i, j - b)].im });
                match self {
                    Factor::RealLlt(f) => f.solve_in_place(split.as_mut()),
                    Factor::RealLu(f) => f.solve_in_place(split.as_mut()),
                    _ => unreachable!(),
                }
                for j in 0..b {
                    for i in 0..n {
                        rhs[(i, j)] = c64::new(split[(i, j)], split[(i, j + b)]);
                    }
                }
            }
        }
    }
}

struct Workspace<'a> {
    m: &'a CsrMatrix<Complex64>,
    factor: Factor,
    n: usize,
    /// `M`-orthonormal basis.
    v: Mat<c64>,
    /// `A V`.
    z: Mat<c64>,
    cols: usize,
    rng: ChaCha8Rng,
}

impl Workspace<'_> {
    fn col(&self, mat: &Mat<c64>, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| mat[(i, j)]).collect()
    }

    fn random_vector(&mut self) -> Vec<Complex64> {
        (0..self.n).map(|_| c64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))).collect()
    }

    /// Orthogonalizes `w` against the basis and appends it. Returns false if `w`
    /// was (numerically) inside the span already.
    fn push(&mut self, mut w: Vec<Complex64>) -> Result<bool> {
        let start = self.m.mul_vec(&w);
        let start_norm = quadratic(&w, &start);
        if !(start_norm > 0.0) {
            if start_norm < 0.0 {
                return Err(Error::Integrity("mass matrix is not positive definite".into()));
            }
            return Ok(false);
        }
        for _ in 0..2 {
            if self.cols == 0 {
                break;
            }
            let mw = self.m.mul_vec(&w);
            let mw = Mat::<c64>::from_fn(self.n, 1, |i, _| mw[i]);
            let basis = self.v.subcols(0, self.cols);
            let coeffs = basis.adjoint() * &mw;
            let proj = basis * &coeffs;
            for (i, wi) in w.iter_mut().enumerate() {
                *wi -= proj[(i, 0)];
            }
        }
        let mw = self.m.mul_vec(&w);
        let nrm = quadratic(&w, &mw);
        if nrm < 0.0 {
            return Err(Error::Integrity("mass matrix is not positive definite".into()));
        }
        if nrm <= 1e-20 * start_norm {
            return Ok(false);
        }
        let s = 1.0 / nrm.sqrt();
        let j = self.cols;
        for i in 0..self.n {
            self.v[(i, j)] = w[i] * s;
        }
        self.cols += 1;
        Ok(true)
    }

    /// Orthonormalizes the candidate block into the basis, applies the operator
    /// to the new columns.
    fn extend(&mut self, candidates: Vec<Vec<Complex64>>, capacity: usize) -> Result<usize> {
        let first = self.cols;
        for w in candidates {
            if self.cols >= capacity {
                break;
            }
            if !self.push(w)? {
                // Replace a dependent direction by a fresh random one.
                for _ in 0..3 {
                    let r = self.random_vector();
                    if self.push(r)? {
                        break;
                    }
                }
            }
        }
        let added = self.cols - first;
        if added == 0 {
            return Ok(0);
        }
        let mut block = Mat::<c64>::zeros(self.n, added);
        for j in 0..added {
            let mv = self.m.mul_vec(&self.col(&self.v, first + j));
            for i in 0..self.n {
                block[(i, j)] = mv[i];
            }
        }
        self.factor.solve_in_place(&mut block);
        for j in 0..added {
            for i in 0..self.n {
                self.z[(i, first + j)] = block[(i, j)];
            }
        }
        Ok(added)
    }
}

fn quadratic(x: &[Complex64], ax: &[Complex64]) -> f64 {
    x.iter().zip(ax).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
}

struct Ritz {
    theta: Vec<f64>,
    /// Columns are eigenvectors of the projected matrix.
    y: Mat<c64>,
}

/// Rayleigh-Ritz on the original pencil: `X^H K X y = lambda X^H M X y`.
///
/// Projecting `K` itself rather than the shift-invert operator keeps the
/// Ritz pairs accurate in the residual measure used for convergence.
/// Returns the Ritz values and the coefficient matrix, ascending.
fn project(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, x: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let (n, c) = (x.nrows(), x.ncols());
    let mut kx = Mat::<c64>::zeros(n, c);
    let mut mx = Mat::<c64>::zeros(n, c);
    for j in 0..c {
        let col: Vec<Complex64> = (0..n).map(|i| x[(i, j)]).collect();
        for (i, v) in k.mul_vec(&col).into_iter().enumerate() {
            kx[(i, j)] = v;
        }
        for (i, v) in m.mul_vec(&col).into_iter().enumerate() {
            mx[(i, j)] = v;
        }
    }
    let hermitian = |a: Mat<c64>| Mat::<c64>::from_fn(c, c, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let kp = hermitian(x.adjoint() * &kx);
    let mp = hermitian(x.adjoint() * &mx);
    let llt = mp.llt(Side::Lower).map_err(|_| Error::Integrity("projected mass matrix lost definiteness".into()))?;
    let mut linv = Mat::<c64>::identity(c, c);
    solve_lower_triangular_in_place(llt.L(), linv.as_mut(), Par::Seq);
    let cmat = hermitian(&linv * &kp * linv.adjoint());
    let evd = cmat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Integrity(format!("projected eigenproblem failed: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(((0..c).map(|i| s[i].re).collect(), linv.adjoint() * evd.U()))
}

/// Shift-invert Ritz pairs of the current basis: eigenpairs of `V^H M A V`,
/// `theta = 1 / (lambda - sigma)`. The wanted pairs are extremal here even
/// when the shift sits inside the spectrum, so selection and restarts use
/// these rather than a projection of `K`, which yields spurious interior values.
fn rayleigh_ritz(ws: &Workspace) -> Result<Ritz> {
    let c = ws.cols;
    let mut mz = Mat::<c64>::zeros(ws.n, c);
    for j in 0..c {
        for (i, v) in ws.m.mul_vec(&ws.col(&ws.z, j)).into_iter().enumerate() {
            mz[(i, j)] = v;
        }
    }
    let h = ws.v.subcols(0, c).adjoint() * &mz;
    let h = Mat::<c64>::from_fn(c, c, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Integrity(format!("projected eigenproblem failed: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(Ritz { theta: (0..c).map(|i| s[i].re).collect(), y: evd.U().to_owned() })
}

type Pair = (f64, Vec<Complex64>, f64, f64);

/// Projects `K` onto the leading shift-invert Ritz vectors (plus `extra`)
/// and evaluates the lowest `nev` refined pairs above the shift.
#[allow(clippy::too_many_arguments)]
fn refine(
    k: &CsrMatrix<Complex64>,
    m: &CsrMatrix<Complex64>,
    ws: &Workspace,
    ritz: &Ritz,
    wanted: &[usize],
    nev: usize,
    extra: usize,
    sigma: f64,
    k_norm: f64,
    tolerance: f64,
) -> Result<(Vec<Pair>, Vec<bool>)> {
    let sel: Vec<usize> = wanted.iter().take(nev + extra).copied().collect();
    let ysel = Mat::<c64>::from_fn(ws.cols, sel.len(), |r, c| ritz.y[(r, sel[c])]);
    let xsel = ws.v.subcols(0, ws.cols) * &ysel;
    let (values, coeffs) = project(k, m, xsel.as_ref())?;
    let above: Vec<usize> = (0..values.len()).filter(|&i| values[i] > sigma).take(nev).collect();
    let pick = Mat::<c64>::from_fn(coeffs.nrows(), above.len(), |r, c| coeffs[(r, above[c])]);
    let xs = &xsel * &pick;
    Ok(evaluate(k, m, k_norm, tolerance, xs.as_ref()))
}

/// Evaluates Ritz vectors (columns of `xs`) as candidate pairs with their
/// residuals and convergence flags.
fn evaluate(
    k: &CsrMatrix<Complex64>,
    m: &CsrMatrix<Complex64>,
    k_norm: f64,
    tolerance: f64,
    xs: MatRef<'_, c64>,
) -> (Vec<Pair>, Vec<bool>) {
    let n = xs.nrows();
    let mut pairs = Vec::with_capacity(xs.ncols());
    let mut converged = Vec::with_capacity(xs.ncols());
    for c in 0..xs.ncols() {
        let x: Vec<Complex64> = (0..n).map(|r| xs[(r, c)]).collect();
        let xkx = quadratic_form(k, &x);
        let xmx = quadratic_form(m, &x).re;
        let lambda = xkx.re / xmx;
        let r = relative_residual(k, m, k_norm, lambda, &x);
        converged.push(r <= tolerance.max(residual_floor(k, k_norm, &x)));
        pairs.push((lambda, x, r, xkx.im / xmx));
    }
    (pairs, converged)
}

/// A few rounds of shift-invert subspace iteration with Rayleigh-Ritz on
/// nearly converged vectors; removes the slow tail of the Krylov iteration.
fn polish(
    k: &CsrMatrix<Complex64>,
    ws: &Workspace,
    sigma: f64,
    mut x: Mat<c64>,
    nev: usize,
    k_norm: f64,
    tolerance: f64,
) -> Result<Option<Vec<Pair>>> {
    for _ in 0..POLISH_ROUNDS {
        let mut y = Mat::<c64>::zeros(ws.n, x.ncols());
        for j in 0..x.ncols() {
            let col: Vec<Complex64> = (0..ws.n).map(|i| x[(i, j)]).collect();
            for (i, v) in ws.m.mul_vec(&col).into_iter().enumerate() {
                y[(i, j)] = v;
            }
        }
        ws.factor.solve_in_place(&mut y);
        let (values, coeffs) = project(k, ws.m, y.as_ref())?;
        let order: Vec<usize> = (0..values.len()).filter(|&i| values[i] > sigma).collect();
        if order.len() < nev {
            return Ok(None);
        }
        let pick = Mat::<c64>::from_fn(coeffs.nrows(), order.len(), |r, c| coeffs[(r, order[c])]);
        x = &y * &pick;
        let (pairs, converged) = evaluate(k, ws.m, k_norm, tolerance, x.subcols(0, nev));
        if converged.iter().all(|&c| c) {
            return Ok(Some(pairs));
        }
    }
    Ok(None)
}

/// Restarts without progress after which the iteration gives up.
const STALL_RESTARTS: usize = 12;

/// Sparse shift-invert path; see the module documentation.
pub fn krylov_pairs(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, req: &SpectralRequest) -> Result<EigenPairs> {
    let n = k.nrows();
    let nev = req.n_pairs;
    let b = req.block_size.min(n);

    let sigma = effective_shift(k, m, req);
    // K is positive semidefinite, so a shift below zero leaves K - sigma M definite.
    let definite = sigma < 0.0;
    let factor = Factor::new(k, m, sigma, definite)?;

    // Guard vectors beyond the wanted ones speed up the last wanted pairs.
    let guard = (nev / 2).max(b);
    let capacity = n.min((2 * (nev + guard) + 4 * b).max(32));
    let mut ws = Workspace {
        m,
        factor,
        n,
        v: Mat::zeros(n, capacity),
        z: Mat::zeros(n, capacity),
        cols: 0,
        rng: ChaCha8Rng::seed_from_u64(START_SEED ^ n as u64),
    };
    let k_norm = k.inf_norm();

    let start: Vec<Vec<Complex64>> = (0..b).map(|_| ws.random_vector()).collect();
    let mut last_added = ws.extend(start, capacity)?;
    let mut restarts = 0usize;
    let (mut best_pending, mut best_at) = (f64::INFINITY, 0usize);
    let mut worst;
    let mut residuals: Vec<f64>;

    loop {
        let full = ws.cols + b > capacity || last_added == 0;
        let check = ws.cols >= (nev + b).min(n) || full;
        if check {
            let ritz = rayleigh_ritz(&ws)?;
            // Wanted: largest positive theta, i.e. smallest eigenvalues above sigma.
            let mut wanted: Vec<usize> = (0..ritz.theta.len()).filter(|&i| ritz.theta[i] > 0.0).collect();
            wanted.sort_by(|&a, &b| ritz.theta[b].total_cmp(&ritz.theta[a]));
            let (pairs, converged) = refine(k, m, &ws, &ritz, &wanted, nev, b, sigma, k_norm, req.tolerance)?;
            residuals = pairs.iter().map(|p| p.2).collect();
            worst = residuals.iter().cloned().fold(0.0, f64::max);
            if pairs.len() == nev && converged.iter().all(|&c| c) {
                return Ok(finish(k, m, pairs));
            }
            let pending = residuals.iter().zip(&converged).filter(|(_, &c)| !c).map(|(r, _)| *r).fold(0.0, f64::max);
            if pairs.len() == nev && pending <= POLISH_START {
                let extra: Vec<usize> = wanted.iter().take(nev + b).copied().collect();
                let yx = Mat::<c64>::from_fn(ws.cols, extra.len(), |r, c| ritz.y[(r, extra[c])]);
                let x0 = ws.v.subcols(0, ws.cols) * &yx;
                if let Some(done) = polish(k, &ws, sigma, x0, nev, k_norm, req.tolerance)? {
                    return Ok(finish(k, m, done));
                }
            }
            if full || ws.cols == n {
                if ws.cols == n && pairs.len() < nev {
                    return Err(Error::invalid(format!(
                        "only {} eigenvalues lie above the shift, {nev} requested",
                        pairs.len()
                    )));
                }
                restarts += 1;
                if pending < 0.5 * best_pending {
                    (best_pending, best_at) = (pending, restarts);
                }
                // Halving nothing in a dozen restarts means the block is too narrow.
                let stalled = restarts - best_at > STALL_RESTARTS;
                if restarts > req.max_iterations || stalled {
                    return Err(Error::NonConvergence { iterations: restarts - 1, worst_residual: worst, residuals });
                }
                last_added = restart(&mut ws, &ritz, &wanted, &converged, nev, guard + b, b, capacity)?;
                continue;
            }
        }
        // Plain block Krylov step: the next block is A applied to the newest block.
        let first = ws.cols - last_added;
        let next: Vec<Vec<Complex64>> = (first..ws.cols).map(|j| ws.col(&ws.z, j)).collect();
        last_added = ws.extend(next, capacity)?;
        if last_added == 0 && ws.cols < capacity {
            let fresh: Vec<Vec<Complex64>> = (0..b).map(|_| ws.random_vector()).collect();
            last_added = ws.extend(fresh, capacity)?;
        }
    }
}

/// Keeps the leading Ritz vectors and seeds the next block with the residual
/// directions of unconverged wanted pairs.
#[allow(clippy::too_many_arguments)]
fn restart(
    ws: &mut Workspace,
    ritz: &Ritz,
    wanted: &[usize],
    converged: &[bool],
    nev: usize,
    extra: usize,
    b: usize,
    capacity: usize,
) -> Result<usize> {
    let mut order: Vec<usize> = (0..ritz.theta.len()).collect();
    order.sort_by(|&a, &c| ritz.theta[c].abs().total_cmp(&ritz.theta[a].abs()));
    let target_pos = (nev + extra).min(wanted.len());
    let limit = capacity.saturating_sub(2 * b).max(nev);
    let mut keep = Vec::new();
    let mut positives = 0;
    for &i in &order {
        if positives >= target_pos || keep.len() >= limit {
            break;
        }
        if ritz.theta[i] > 0.0 {
            positives += 1;
        }
        keep.push(i);
    }

    let n = ws.n;
    let cols = ws.cols;
    let y = Mat::<c64>::from_fn(cols, keep.len(), |r, c| ritz.y[(r, keep[c])]);
    let vs = ws.v.subcols(0, cols) * &y;
    let zs = ws.z.subcols(0, cols) * &y;
    ws.v.fill(c64::new(0.0, 0.0));
    ws.z.fill(c64::new(0.0, 0.0));
    for j in 0..keep.len() {
        for i in 0..n {
            ws.v[(i, j)] = vs[(i, j)];
            ws.z[(i, j)] = zs[(i, j)];
        }
    }
    ws.cols = keep.len();

    let mut seeds: Vec<Vec<Complex64>> = Vec::new();
    for (slot, &i) in wanted.iter().take(nev).enumerate() {
        if seeds.len() >= b {
            break;
        }
        if converged.get(slot).copied().unwrap_or(false) {
            continue;
        }
        if let Some(pos) = keep.iter().position(|&kk| kk == i) {
            seeds.push(ws.col(&ws.z, pos));
        }
    }
    while seeds.len() < b {
        seeds.push(ws.random_vector());
    }
    ws.extend(seeds, capacity)
}

fn finish(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, mut pairs: Vec<Pair>) -> EigenPairs {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = pairs.iter().map(|p| p.0.abs()).fold(f64::MIN_POSITIVE, f64::max);
    let k_norm = k.inf_norm();
    let mut out = EigenPairs {
        values: Vec::new(),
        vectors: Vec::new(),
        residuals: Vec::new(),
        floors: Vec::new(),
        max_imaginary: 0.0,
    };
    for (lambda, x, _, imag) in pairs {
        let xmx = quadratic_form(m, &x).re;
        let x: Vec<Complex64> = x.iter().map(|z| z / xmx.sqrt()).collect();
        out.max_imaginary = out.max_imaginary.max(imag.abs() / scale);
        out.residuals.push(relative_residual(k, m, k_norm, lambda, &x));
        out.floors.push(residual_floor(k, k_norm, &x));
        out.values.push(lambda);
        out.vectors.push(x);
    }
    out
}
