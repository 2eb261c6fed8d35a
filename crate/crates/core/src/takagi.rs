//! The anti-linear eigenvalue problem of a truncated Toeplitz compression.
//!
//! For a symbol `f` and a box `Λ_n`, the operator `q ↦ P_n(f·q*)` acts on
//! coefficient vectors as `q ↦ A·conj(q)` with the complex symmetric matrix
//! `A[β,γ] = f_{β+γ−n}`. Its con-eigenvalues `A·conj(q) = σq`, `σ ≥ 0`, are
//! the singular values of `A`.
//!
//! The solver writes `A = P + iQ`, `q = x + iy` and diagonalizes the real
//! symmetric matrix `[[P, Q], [Q, −P]]`, whose spectrum is `{±σ_k}`. An
//! eigenvector `(x, y)` for `+σ` is exactly a con-eigenvector `x + iy`, so no
//! phase recovery is needed. Anti-linearity leaves only a sign of freedom
//! (`λq` solves the problem iff `λ = ±1`), which is fixed canonically.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::frob;
use crate::polyseries::{c64, FourierTable, MultiIndex, MultiIndexBox, TrigPoly, TruncatedPoly, C64};

/// Residual tolerance relative to `‖A‖_F`.
pub const RTOL: f64 = 1e-10;

/// Relative gap below which two con-eigenvalues count as one cluster.
const CLUSTER_TOL: f64 = 1e-9;

/// Matrix of the anti-linear operator `q ↦ P_n(f·q*)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConSymMatrix {
    bx: Arc<MultiIndexBox>,
    a: DMatrix<C64>,
    /// Set when some entry needed a coefficient beyond the symbol table.
    pub incomplete: bool,
}

impl ConSymMatrix {
    /// Wraps an arbitrary complex symmetric matrix, indexed by a 1-D box.
    pub fn from_matrix(a: DMatrix<C64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::InvalidInput("con-eigen matrix must be square and nonempty".into()));
        }
        let scale = frob(&a).max(f64::MIN_POSITIVE);
        let asym = frob(&(&a - a.transpose()));
        if asym > 1e-13 * scale {
            return Err(Error::InvalidInput(format!("matrix is not symmetric (deviation {asym:e})")));
        }
        let n = a.nrows() - 1;
        Ok(Self { bx: Arc::new(MultiIndexBox::new(MultiIndex::uniform(1, n))), a, incomplete: false })
    }

    pub fn bx(&self) -> &Arc<MultiIndexBox> {
        &self.bx
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.a
    }

    pub fn size(&self) -> usize {
        self.a.nrows()
    }

    /// `A·conj(q)` for a coefficient vector over the box.
    pub fn apply(&self, q: &[C64]) -> DVector<C64> {
        let qc = DVector::from_iterator(q.len(), q.iter().map(|c| c.conj()));
        &self.a * qc
    }
}

/// A con-eigenvalue with a unit con-eigenvector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConEigPair {
    pub sigma: f64,
    pub q: TruncatedPoly,
    /// `‖A·conj(q) − σq‖₂`.
    pub residual: f64,
    /// Number of con-eigenvalues (with multiplicity) in the cluster of `sigma`.
    pub multiplicity: usize,
}

/// `A[β,γ] = f_{β+γ−n}`; entries with a negative index are zero.
pub fn build_con_matrix(f: &FourierTable, n: &MultiIndex) -> ConSymMatrix {
    let bx = Arc::new(MultiIndexBox::new(n.clone()));
    let size = bx.len();
    let nn = n.components();
    let d = n.dim();
    let mut a = DMatrix::zeros(size, size);
    let mut incomplete = false;
    let mut idx = vec![0i64; d];
    for (i, beta) in bx.iter().enumerate() {
        for (j, gamma) in bx.iter().enumerate().skip(i) {
            let mut neg = false;
            for k in 0..d {
                let v = beta.components()[k] as i64 + gamma.components()[k] as i64 - nn[k] as i64;
                neg |= v < 0;
                idx[k] = v;
            }
            if neg {
                continue;
            }
            match f.get_signed(&idx) {
                Some(v) => {
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
                None => incomplete = true,
            }
        }
    }
    ConSymMatrix { bx, a, incomplete }
}

/// Real symmetric embedding `[[P, Q], [Q, −P]]` of `A = P + iQ`.
fn real_embedding(a: &DMatrix<C64>) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let v = a[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) => v.re,
            (false, false) => -v.re,
            _ => v.im,
        }
    })
}

/// Eigenpairs of the embedding, eigenvalues in descending order.
fn sorted_embedding_eigen(a: &DMatrix<C64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(real_embedding(a));
    let m = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn to_complex(v: &[f64]) -> Vec<C64> {
    let n = v.len() / 2;
    (0..n).map(|k| c64(v[k], v[n + k])).collect()
}

fn residual(a: &DMatrix<C64>, q: &[C64], sigma: f64) -> f64 {
    let qc = DVector::from_iterator(q.len(), q.iter().map(|c| c.conj()));
    let aq = a * qc;
    aq.iter().zip(q).map(|(x, y)| (x - y * sigma).norm_sqr()).sum::<f64>().sqrt()
}

/// Picks a canonical unit vector inside the span of `basis` (real columns):
/// the projection of the coordinate axis that the span sees best, signed so
/// that this coordinate is positive. The choice depends on the span only.
fn canonical_in_span(basis: &DMatrix<f64>) -> Vec<f64> {
    let rows = basis.nrows();
    let weights: Vec<f64> = (0..rows).map(|r| basis.row(r).norm_squared()).collect();
    let best = weights.iter().copied().fold(0.0, f64::max);
    let k = weights.iter().position(|&w| w >= best * (1.0 - 1e-9)).unwrap_or(0);
    let coeffs = basis.row(k).transpose();
    let mut v = basis * coeffs;
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    if v[k] < 0.0 {
        v = -v;
    }
    v.iter().copied().collect()
}

fn cluster_len(vals: &[f64], start: usize, scale: f64) -> usize {
    let tol = CLUSTER_TOL * scale.max(f64::MIN_POSITIVE);
    vals[start..].iter().take_while(|&&v| (vals[start] - v).abs() <= tol).count()
}

/// Largest con-eigenvalue with a canonical con-eigenvector.
///
/// Inside a degenerate cluster any unit vector of the con-eigenspace is a
/// valid answer; the one returned is fixed by [`canonical_in_span`] and the
/// cluster size is reported in `multiplicity`.
pub fn con_eig_max(a: &ConSymMatrix) -> Result<ConEigPair> {
    let mat = a.matrix();
    let n = mat.nrows();
    let (vals, vecs) = sorted_embedding_eigen(mat);
    let sigma = vals[0].max(0.0);
    let mult = cluster_len(&vals[..n], 0, vals[0].abs());
    // When sigma = 0 the cluster also contains the mirrored -sigma vectors; this
    // only enlarges the null space the canonical vector is drawn from.
    let span = if sigma == 0.0 { vecs.clone() } else { vecs.columns(0, mult).into_owned() };
    let q = to_complex(&canonical_in_span(&span));
    finish_pair(a, q, sigma, mult)
}

fn finish_pair(a: &ConSymMatrix, q: Vec<C64>, sigma: f64, mult: usize) -> Result<ConEigPair> {
    let res = residual(a.matrix(), &q, sigma);
    let tol = RTOL * frob(a.matrix()).max(1e-300);
    if res > tol && res > 1e-300 {
        return Err(Error::ConvergenceFailure { residual: res, tol });
    }
    let q = TruncatedPoly::from_coeffs(a.bx().clone(), q)?;
    Ok(ConEigPair { sigma, q, residual: res, multiplicity: mult })
}

/// All con-eigenvalues (the singular values of `A`) in descending order, each
/// with a con-eigenvector. Vectors inside a cluster are linearly independent.
pub fn con_eig_all(a: &ConSymMatrix) -> Result<Vec<ConEigPair>> {
    let mat = a.matrix();
    let n = mat.nrows();
    let (vals, vecs) = sorted_embedding_eigen(mat);
    let scale = vals[0].abs();
    let zero_tol = CLUSTER_TOL * scale.max(f64::MIN_POSITIVE);
    let positive = vals[..n].iter().take_while(|&&v| v > zero_tol).count();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < positive {
        let len = cluster_len(&vals[..positive], i, scale);
        for k in i..i + len {
            let mut q = to_complex(vecs.column(k).as_slice());
            canonical_sign(&mut q);
            out.push(finish_pair(a, q, vals[k], len)?);
        }
        i += len;
    }
    // Null space of q ↦ A·conj(q) is complex-linear; extract n − positive
    // complex-independent vectors from its real basis.
    let missing = n - positive;
    if missing > 0 {
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for k in positive..2 * n - positive {
            let mut v = to_complex(vecs.column(k).as_slice());
            for b in &basis {
                let dot: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
            let nv = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if nv > 1e-6 {
                v.iter_mut().for_each(|c| *c /= nv);
                basis.push(v);
                if basis.len() == missing {
                    break;
                }
            }
        }
        if basis.len() < missing {
            return Err(Error::ConvergenceFailure { residual: f64::NAN, tol: RTOL });
        }
        for mut q in basis {
            canonical_sign(&mut q);
            out.push(finish_pair(a, q, 0.0, missing)?);
        }
    }
    Ok(out)
}

/// Makes the first coordinate of largest modulus point along the positive real
/// or imaginary axis, whichever part is larger. Only `±1` is allowed.
fn canonical_sign(q: &mut [C64]) {
    let best = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if let Some(c) = q.iter().find(|c| c.norm() >= best * (1.0 - 1e-9)).copied() {
        let lead = if c.re.abs() >= c.im.abs() { c.re } else { c.im };
        if lead < 0.0 {
            q.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Residuals of the Schmidt-pair relations `A·conj(q) = σq` and `A*q = σ·conj(q)`.
pub fn schmidt_check(a: &ConSymMatrix, pair: &ConEigPair) -> (f64, f64) {
    let q = pair.q.coeffs();
    let r1 = residual(a.matrix(), q, pair.sigma);
    let qv = DVector::from_column_slice(q);
    let aq = a.matrix().adjoint() * qv;
    let r2 = aq
        .iter()
        .zip(q)
        .map(|(x, y)| (x - y.conj() * pair.sigma).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (r1, r2)
}

/// Matrix of the linear compression `q ↦ P_n(f·q)`, `M[β,γ] = f_{β−γ}`.
pub fn toeplitz_matrix(f: &FourierTable, n: &MultiIndex) -> DMatrix<C64> {
    let bx = MultiIndexBox::new(n.clone());
    let size = bx.len();
    let d = n.dim();
    let mut idx = vec![0i64; d];
    DMatrix::from_fn(size, size, |i, j| {
        for (k, v) in idx.iter_mut().enumerate() {
            *v = bx.get(i).components()[k] as i64 - bx.get(j).components()[k] as i64;
        }
        f.get_signed(&idx).unwrap_or(C64::new(0.0, 0.0))
    })
}

/// Frobenius deviation `‖J·conj(M)·J − M*‖` where `J` reverses the box.
pub fn c_symmetry_check(f: &FourierTable, n: &MultiIndex) -> f64 {
    let m = toeplitz_matrix(f, n);
    let bx = MultiIndexBox::new(n.clone());
    let size = bx.len();
    let rev: Vec<usize> = bx
        .iter()
        .map(|b| {
            let r: Vec<usize> = b.components().iter().zip(n.components()).map(|(x, y)| y - x).collect();
            bx.index_of(&r).unwrap()
        })
        .collect();
    let mut dev = 0.0;
    for i in 0..size {
        for j in 0..size {
            let lhs = m[(rev[i], rev[j])].conj();
            let rhs = m[(j, i)].conj();
            dev += (lhs - rhs).norm_sqr();
        }
    }
    dev.sqrt()
}

/// Bilinear Hankel form `H_f(q, r) = ∫ f q r dm = Σ f_α q_β r_γ` over
/// `α + β + γ = 0`, for `q, r` with frequencies in `∏[−n_j, n_j]`.
pub fn hankel_form(f: &FourierTable, q: &TrigPoly, r: &TrigPoly, n: &MultiIndex) -> Result<C64> {
    if !q.supported_in(n) || !r.supported_in(n) {
        return Err(Error::SupportMismatch(format!("arguments must have frequencies within ±{n}")));
    }
    if !n.scaled(2).le(f.bound()) {
        return Err(Error::SupportMismatch(format!(
            "symbol table {} does not cover {}",
            f.bound(),
            n.scaled(2)
        )));
    }
    let mut alpha = vec![0i64; n.dim()];
    let mut total = C64::new(0.0, 0.0);
    for (kb, qb) in q.iter() {
        for (kc, rc) in r.iter() {
            for (a, (x, y)) in alpha.iter_mut().zip(kb.iter().zip(kc)) {
                *a = -(x + y);
            }
            if let Some(fa) = f.get_signed(&alpha) {
                total += fa * qb * rc;
            }
        }
    }
    Ok(total)
}

/// The element of `Trig_n` maximizing `Re H_f(q, q)` built from a
/// con-eigenvector of the box `Λ_{2n}`: `q(ζ) = ζ^n · conj(h(ζ))`.
pub fn extremal_element(pair: &ConEigPair, n: &MultiIndex) -> TrigPoly {
    let shift: Vec<i64> = n.components().iter().map(|&x| x as i64).collect();
    TrigPoly::from_conj_analytic(&pair.q, &shift)
}

/// Con-eigen solve of the symbol table on box `n` in one call.
pub fn solve(f: &FourierTable, n: &MultiIndex) -> Result<(ConSymMatrix, ConEigPair)> {
    let a = build_con_matrix(f, n);
    let pair = con_eig_max(&a)?;
    Ok((a, pair))
}
