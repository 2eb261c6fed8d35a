//! Carathéodory–Fejér interpolation by Cayley rational inner functions.
//!
//! Given data `c_β`, `β ∈ Λ`, `c_0 = 1`, the pipeline is
//!
//! 1. find positive semidefinite `Γ_1, …, Γ_d` with
//!    `Σ_j (Γ_j − T_j Γ_j T_j*) = 2(E C* + C E*)` (an Agler certificate),
//! 2. read off the isometry `W` sending
//!    `[⊕Γ_j^{1/2} h; h(0) − (X*h)(0)]` to `[⊕Γ_j^{1/2} T_j* h; h(0) + (X*h)(0)]`,
//! 3. extend `W` to a unitary `𝒰 = [[U11, U12], [U21, U22]]` (then `U22 = 0`),
//!    put `V = −U12`, `U = U11 − U12·U21`,
//! 4. evaluate `φ(z) = 1 + 2 V* U (I − Δ(z)U)^{-1} Δ(z) V`.
//!
//! The certificate search uses Dykstra-corrected alternating projections
//! between the affine solution set of the linear identity and a (shifted)
//! cone of positive semidefinite tuples. Alternating projections cannot prove
//! infeasibility, so a failed search is reported as undecided unless the
//! necessary condition `X + X* ⪰ 0` already fails.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frob, herm_eig, min_eig, spectral_map};
use crate::polyseries::{
    c64, cayley_forward, coefficients_from_samples, kronecker_points, sample_torus_grid, taylor_default,
    FourierTable, MultiIndex, MultiIndexBox, TruncatedPoly, C64,
};

/// Largest `d·|Λ|` for which [`realization_to_rational`] expands determinants.
pub const MAX_RATIONAL_SIZE: usize = 12;

/// Normalized interpolation data (`c_0 = 1`) over a box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfData {
    pub c: TruncatedPoly,
}

/// Affine map `φ = scale·φ' + i·shift` relating raw Herglotz data to normalized data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Normalization {
    pub scale: f64,
    pub shift: f64,
}

impl Normalization {
    pub const IDENTITY: Self = Self { scale: 1.0, shift: 0.0 };

    pub fn apply(&self, phi: C64) -> C64 {
        phi * self.scale + c64(0.0, self.shift)
    }
}

impl CfData {
    /// Accepts data whose constant term is 1 (within 1e−12).
    pub fn new(c: TruncatedPoly) -> Result<Self> {
        let c0 = c.coeffs()[0];
        if (c0 - 1.0).norm() > 1e-12 {
            return Err(Error::InvalidInput(format!("interpolation data needs c_0 = 1, got {c0}")));
        }
        let mut c = c;
        c.coeffs_mut()[0] = c64(1.0, 0.0);
        Ok(Self { c })
    }

    /// Normalizes data with `Re c_0 > 0` by `c ↦ (c − i·Im c_0)/Re c_0`.
    pub fn normalize(c: &TruncatedPoly) -> Result<(Self, Normalization)> {
        let c0 = c.coeffs()[0];
        if !(c0.re > 0.0) {
            return Err(Error::Domain(format!("Herglotz data needs Re c_0 > 0, got {c0}")));
        }
        let mut p = c.scale(c64(1.0 / c0.re, 0.0));
        p.coeffs_mut()[0] = c64(1.0, 0.0);
        Ok((Self { c: p }, Normalization { scale: c0.re, shift: c0.im }))
    }

    pub fn bx(&self) -> &Arc<MultiIndexBox> {
        self.c.bx()
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    pub fn len(&self) -> usize {
        self.c.bx().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The matrices `X`, `C`, `E`, `T_r` built from the data.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureMatrices {
    pub x: DMatrix<C64>,
    pub c_col: DVector<C64>,
    pub e_col: DVector<C64>,
    pub t: Vec<DMatrix<C64>>,
}

impl StructureMatrices {
    /// Right-hand side `2(E C* + C E*)` of the certificate identity.
    pub fn rhs(&self) -> DMatrix<C64> {
        let ec = &self.e_col * self.c_col.adjoint();
        (&ec + ec.adjoint()) * c64(2.0, 0.0)
    }

    /// `X + X*`, whose positivity is necessary for solvability.
    pub fn x_plus_adjoint(&self) -> DMatrix<C64> {
        &self.x + self.x.adjoint()
    }
}

pub fn build_structure(data: &CfData) -> StructureMatrices {
    let bx = data.bx();
    let n = bx.len();
    let d = bx.dim();
    let mut diff = vec![0i64; d];
    let x = DMatrix::from_fn(n, n, |i, j| {
        for (k, v) in diff.iter_mut().enumerate() {
            *v = bx.get(i).components()[k] as i64 - bx.get(j).components()[k] as i64;
        }
        bx.index_of_signed(&diff).map_or(c64(0.0, 0.0), |p| data.c.coeffs()[p])
    });
    let c_col = DVector::from_column_slice(data.c.coeffs());
    let mut e_col = DVector::zeros(n);
    e_col[0] = c64(1.0, 0.0);
    let t = (0..d)
        .map(|r| {
            let mut m = DMatrix::zeros(n, n);
            for (j, gamma) in bx.iter().enumerate() {
                let mut up = gamma.components().to_vec();
                up[r] += 1;
                if let Some(i) = bx.index_of(&up) {
                    m[(i, j)] = c64(1.0, 0.0);
                }
            }
            m
        })
        .collect();
    StructureMatrices { x, c_col, e_col, t }
}

/// Knobs of the certificate search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeasibilityOptions {
    /// Accepted Frobenius residual of the linear identity.
    pub ftol: f64,
    /// Accepted negative eigenvalue of any `Γ_j`.
    pub ptol: f64,
    pub max_iters: usize,
    /// Initial shift `μ` of the cone `{Γ ⪰ μI}`.
    pub mu0: f64,
    /// Iterations without success before `μ` is reduced tenfold.
    pub stall: usize,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self { ftol: 1e-9, ptol: 1e-10, max_iters: 20_000, mu0: 1e-2, stall: 500 }
    }
}

/// PSD matrices `Γ_j` satisfying the certificate identity.
#[derive(Clone, Debug, PartialEq)]
pub struct AglerCertificate {
    pub gammas: Vec<DMatrix<C64>>,
    /// `‖2(EC*+CE*) − Σ_j(Γ_j − T_jΓ_jT_j*)‖_F`.
    pub eq_residual: f64,
    /// Smallest eigenvalue over all `Γ_j`.
    pub min_eig: f64,
    pub iterations: usize,
}

/// `L(Γ) = Σ_j (Γ_j − T_j Γ_j T_j*)`.
pub fn agler_map(s: &StructureMatrices, gammas: &[DMatrix<C64>]) -> DMatrix<C64> {
    let n = s.x.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (g, t) in gammas.iter().zip(&s.t) {
        out += g - t * g * t.adjoint();
    }
    out
}

/// Orthogonal projection onto `{Γ : L(Γ) = R}`. `L` only couples entries
/// `(β, γ)` with the same difference `β − γ`, so it splits into small blocks
/// whose pseudoinverses are computed once.
struct AffineProjector {
    d: usize,
    blocks: Vec<AffineBlock>,
}

struct AffineBlock {
    pairs: Vec<(usize, usize)>,
    // variable k = j * m + p  <->  Γ_j[pairs[p]]
    lmat: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl AffineProjector {
    fn new(bx: &MultiIndexBox) -> Self {
        let d = bx.dim();
        let n = bx.len();
        let mut groups: BTreeMap<Vec<i64>, Vec<(usize, usize)>> = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                let delta = bx
                    .get(i)
                    .components()
                    .iter()
                    .zip(bx.get(j).components())
                    .map(|(&a, &b)| a as i64 - b as i64)
                    .collect();
                groups.entry(delta).or_default().push((i, j));
            }
        }
        let blocks = groups
            .into_values()
            .map(|pairs| {
                let m = pairs.len();
                let pos: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(p, &ij)| (ij, p)).collect();
                let mut lmat = DMatrix::zeros(m, d * m);
                for (row, &(i, k)) in pairs.iter().enumerate() {
                    for jv in 0..d {
                        lmat[(row, jv * m + row)] += 1.0;
                        let (bi, bk) = (bx.get(i).components(), bx.get(k).components());
                        if bi[jv] >= 1 && bk[jv] >= 1 {
                            let mut a = bi.to_vec();
                            let mut b = bk.to_vec();
                            a[jv] -= 1;
                            b[jv] -= 1;
                            let src = (bx.index_of(&a).unwrap(), bx.index_of(&b).unwrap());
                            lmat[(row, jv * m + pos[&src])] -= 1.0;
                        }
                    }
                }
                let pinv = lmat.clone().pseudo_inverse(1e-12).expect("pseudo-inverse of a real matrix");
                AffineBlock { pairs, lmat, pinv }
            })
            .collect();
        Self { d, blocks }
    }

    fn project(&self, gammas: &mut [DMatrix<C64>], rhs: &DMatrix<C64>) {
        for blk in &self.blocks {
            let m = blk.pairs.len();
            let mut v = DVector::<C64>::zeros(self.d * m);
            for j in 0..self.d {
                for (p, &(a, b)) in blk.pairs.iter().enumerate() {
                    v[j * m + p] = gammas[j][(a, b)];
                }
            }
            let lv = blk.lmat.map(|x| c64(x, 0.0)) * &v;
            let res = DVector::from_iterator(m, blk.pairs.iter().enumerate().map(|(p, &(a, b))| lv[p] - rhs[(a, b)]));
            let corr = blk.pinv.map(|x| c64(x, 0.0)) * res;
            for j in 0..self.d {
                for (p, &(a, b)) in blk.pairs.iter().enumerate() {
                    gammas[j][(a, b)] -= corr[j * m + p];
                }
            }
        }
        for g in gammas.iter_mut() {
            *g = (&*g + g.adjoint()) * c64(0.5, 0.0);
        }
    }
}

fn cone_project(g: &DMatrix<C64>, mu: f64) -> DMatrix<C64> {
    let (vals, vecs) = herm_eig(g);
    spectral_map(&vals, &vecs, |l| l.max(mu))
}

/// Searches for an Agler certificate of the data.
///
/// Returns [`Error::Infeasible`] when `X + X*` has a negative eigenvalue (a
/// conclusive obstruction) and [`Error::IterationLimit`] when the search is
/// undecided.
pub fn agler_feasibility(data: &CfData, opts: &FeasibilityOptions) -> Result<AglerCertificate> {
    let s = build_structure(data);
    let scale = 1.0 + data.c.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let pre = min_eig(&s.x_plus_adjoint());
    if pre < -1e-12 * scale {
        return Err(Error::Infeasible(format!("X + X* has eigenvalue {pre:e} < 0")));
    }
    let n = data.len();
    let d = data.dim();
    let rhs = s.rhs();
    let proj = AffineProjector::new(data.bx());
    let mut x: Vec<DMatrix<C64>> = (0..d).map(|_| DMatrix::identity(n, n) * c64(2.0, 0.0)).collect();
    proj.project(&mut x, &rhs);
    let mut corr: Vec<DMatrix<C64>> = (0..d).map(|_| DMatrix::zeros(n, n)).collect();
    let mut mu = opts.mu0;
    let mut since_reset = 0usize;
    let mut best = f64::INFINITY;
    let mut polish_budget = 3usize;
    for it in 0..opts.max_iters {
        if it % 10 == 0 || since_reset == 0 {
            let me = x.iter().map(min_eig).fold(f64::INFINITY, f64::min);
            best = best.min((-me).max(0.0));
            if me >= -opts.ptol {
                let eq_residual = frob(&(agler_map(&s, &x) - &rhs));
                if eq_residual <= opts.ftol {
                    return Ok(AglerCertificate { gammas: x, eq_residual, min_eig: me, iterations: it });
                }
            }
        }
        let mut y = Vec::with_capacity(d);
        for j in 0..d {
            let yj = cone_project(&(&x[j] + &corr[j]), mu);
            corr[j] = &x[j] + &corr[j] - &yj;
            y.push(yj);
        }
        let mut next = y.clone();
        proj.project(&mut next, &rhs);
        let gap = next.iter().zip(&y).map(|(a, b)| frob(&(a - b)).powi(2)).sum::<f64>().sqrt();
        x = next;
        since_reset += 1;
        if mu > 0.0 && gap <= mu {
            // Weyl: every Γ_j is within `gap` of a matrix ⪰ μI
            since_reset = 0;
            continue;
        }
        if since_reset >= opts.stall {
            if mu == 0.0 && polish_budget > 0 {
                // boundary data: the PSD solutions are singular and the
                // projections converge sublinearly
                polish_budget -= 1;
                if let Some(g) = factored_polish(&s, &rhs, &x, opts.ftol) {
                    let me = g.iter().map(min_eig).fold(f64::INFINITY, f64::min);
                    let eq_residual = frob(&(agler_map(&s, &g) - &rhs));
                    if me >= -opts.ptol && eq_residual <= opts.ftol {
                        return Ok(AglerCertificate { gammas: g, eq_residual, min_eig: me, iterations: it });
                    }
                }
            }
            mu = if mu > 1e-8 { mu / 10.0 } else { 0.0 };
            corr.iter_mut().for_each(|c| c.fill(c64(0.0, 0.0)));
            since_reset = 0;
        }
    }
    let me = x.iter().map(min_eig).fold(f64::INFINITY, f64::min);
    best = best.min((-me).max(0.0));
    let eq_residual = frob(&(agler_map(&s, &x) - &rhs));
    if me >= -opts.ptol && eq_residual <= opts.ftol {
        return Ok(AglerCertificate { gammas: x, eq_residual, min_eig: me, iterations: opts.max_iters });
    }
    Err(Error::IterationLimit { iterations: opts.max_iters, best_residual: best })
}

fn factored_residual(s: &StructureMatrices, rhs: &DMatrix<C64>, g: &[DMatrix<C64>]) -> DVector<f64> {
    let gam: Vec<DMatrix<C64>> = g.iter().map(|x| x * x.adjoint()).collect();
    let r = agler_map(s, &gam) - rhs;
    DVector::from_iterator(2 * r.len(), r.iter().flat_map(|c| [c.re, c.im]))
}

/// Levenberg–Marquardt on `Γ_j = G_j G_j*`, started from the square roots of
/// the clipped iterate. Positive semidefiniteness holds by construction, and
/// the factored form handles the singular certificates of boundary data.
fn factored_polish(
    s: &StructureMatrices,
    rhs: &DMatrix<C64>,
    start: &[DMatrix<C64>],
    ftol: f64,
) -> Option<Vec<DMatrix<C64>>> {
    let d = start.len();
    let n = rhs.nrows();
    let nvar = 2 * d * n * n;
    if nvar > 3000 {
        return None;
    }
    let mut g: Vec<DMatrix<C64>> = start
        .iter()
        .map(|x| {
            let (vals, vecs) = herm_eig(x);
            spectral_map(&vals, &vecs, |l| l.max(0.0).sqrt())
        })
        .collect();
    let unpack = |g: &mut [DMatrix<C64>], step: &DVector<f64>| {
        for (k, chunk) in step.as_slice().chunks(2).enumerate() {
            let (j, rest) = (k / (n * n), k % (n * n));
            g[j][(rest / n, rest % n)] += c64(chunk[0], chunk[1]);
        }
    };
    let mut res = factored_residual(s, rhs, &g);
    let mut cost = res.norm();
    let mut lambda = 1e-6;
    for _ in 0..200 {
        if cost <= 0.1 * ftol {
            return Some(g.iter().map(|x| x * x.adjoint()).collect());
        }
        let mut jac = DMatrix::<f64>::zeros(res.len(), nvar);
        for k in 0..nvar {
            let (j, rest) = (k / (2 * n * n), (k / 2) % (n * n));
            let (a, b) = (rest / n, rest % n);
            let unit = if k % 2 == 0 { c64(1.0, 0.0) } else { c64(0.0, 1.0) };
            let mut h = DMatrix::<C64>::zeros(n, n);
            h[(a, b)] = unit;
            let dg = &h * g[j].adjoint() + &g[j] * h.adjoint();
            let dl = &dg - &s.t[j] * &dg * s.t[j].adjoint();
            for (row, c) in dl.iter().enumerate() {
                jac[(2 * row, k)] = c.re;
                jac[(2 * row + 1, k)] = c.im;
            }
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &res;
        let mut improved = false;
        for _ in 0..30 {
            let sys = &jtj + DMatrix::<f64>::identity(nvar, nvar) * lambda;
            let Some(chol) = sys.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -chol.solve(&grad);
            let mut trial = g.clone();
            unpack(&mut trial, &step);
            let tres = factored_residual(s, rhs, &trial);
            let tcost = tres.norm();
            if tcost < cost {
                g = trial;
                res = tres;
                cost = tcost;
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (cost <= ftol).then(|| g.iter().map(|x| x * x.adjoint()).collect())
}

/// The columns `a_β`, `b_β` of the isometry `W: A h ↦ B h`.
fn isometry_columns(cert: &AglerCertificate, data: &CfData) -> (DMatrix<C64>, DMatrix<C64>) {
    let s = build_structure(data);
    let n = data.len();
    let d = data.dim();
    let rows = d * n + 1;
    let roots: Vec<DMatrix<C64>> = cert
        .gammas
        .iter()
        .map(|g| {
            let (vals, vecs) = herm_eig(g);
            spectral_map(&vals, &vecs, |l| l.max(0.0).sqrt())
        })
        .collect();
    let mut a = DMatrix::zeros(rows, n);
    let mut b = DMatrix::zeros(rows, n);
    for j in 0..d {
        let rt = &roots[j] * s.t[j].adjoint();
        a.view_mut((j * n, 0), (n, n)).copy_from(&roots[j]);
        b.view_mut((j * n, 0), (n, n)).copy_from(&rt);
    }
    for beta in 0..n {
        let delta = if beta == 0 { 1.0 } else { 0.0 };
        let cb = data.c.coeffs()[beta].conj();
        a[(rows - 1, beta)] = delta - cb;
        b[(rows - 1, beta)] = delta + cb;
    }
    (a, b)
}

/// `‖A*A − B*B‖_F`: the defect of the quadratic identity behind the isometry.
pub fn isometry_defect(cert: &AglerCertificate, data: &CfData) -> f64 {
    let (a, b) = isometry_columns(cert, data);
    frob(&(a.adjoint() * &a - b.adjoint() * &b))
}

/// A transfer-function realization `φ(z) = 1 + 2V*U(I − Δ(z)U)^{-1}Δ(z)V`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Realization {
    pub d: usize,
    /// Size of each diagonal block of `Δ(z)`.
    pub block: usize,
    #[serde(skip)]
    pub u: DMatrix<C64>,
    #[serde(skip)]
    pub v: DVector<C64>,
    /// `|U22|` of the unitary extension before polishing.
    pub u22: f64,
    /// `‖U*U − I‖_F` of the (polished) unitary.
    pub unitarity_defect: f64,
}

fn orth_complement(q: &DMatrix<C64>) -> DMatrix<C64> {
    let m = q.nrows();
    let r = q.ncols();
    let mut aug = DMatrix::zeros(m, r + m);
    aug.view_mut((0, 0), (m, r)).copy_from(q);
    aug.view_mut((0, r), (m, m)).copy_from(&DMatrix::identity(m, m));
    let full = aug.qr().q();
    full.columns(r, m - r).into_owned()
}

/// Default tolerance on `|U22|`.
pub const UTOL: f64 = 1e-8;

/// Builds the realization of an accepted certificate.
pub fn build_realization(cert: &AglerCertificate, data: &CfData, utol: f64) -> Result<Realization> {
    let (a, b) = isometry_columns(cert, data);
    let m = a.nrows();
    let n = data.len();
    let d = data.dim();
    let svd = a.clone().svd(true, true);
    let (pu, sv, qv) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap().adjoint());
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Err(Error::RankDefect("isometry domain is trivial".into()));
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > 1e-10 * smax).collect();
    let r = keep.len();
    let p_r = DMatrix::from_fn(m, r, |i, k| pu[(i, keep[k])]);
    let mut q_b = DMatrix::zeros(m, r);
    for (k, &i) in keep.iter().enumerate() {
        let col = &b * qv.column(i) / c64(sv[i], 0.0);
        q_b.set_column(k, &col);
    }
    let ortho = frob(&(q_b.adjoint() * &q_b - DMatrix::identity(r, r)));
    if ortho > 1e-6 {
        return Err(Error::RankDefect(format!("image of the isometry is not orthonormal ({ortho:e})")));
    }
    let p_perp = orth_complement(&p_r);
    let q_perp = orth_complement(&q_b);
    let full = &q_b * p_r.adjoint() + &q_perp * p_perp.adjoint();
    let k = m - 1;
    let u22 = full[(k, k)].norm();
    if u22 > utol {
        return Err(Error::U22NotZero(u22));
    }
    let u11 = full.view((0, 0), (k, k)).into_owned();
    let u12 = full.view((0, k), (k, 1)).into_owned();
    let u21 = full.view((k, 0), (1, k)).into_owned();
    let u = u11 - &u12 * &u21;
    let svd = u.svd(true, true);
    let u = svd.u.unwrap() * svd.v_t.unwrap();
    let mut v = DVector::from_iterator(k, u12.iter().map(|x| -x));
    let vn = v.norm();
    v /= c64(vn, 0.0);
    let unitarity_defect = frob(&(u.adjoint() * &u - DMatrix::identity(k, k)));
    debug_assert_eq!(k, d * n);
    Ok(Realization { d, block: n, u, v, u22, unitarity_defect })
}

impl Realization {
    fn delta(&self, z: &[C64]) -> Vec<C64> {
        (0..self.d * self.block).map(|i| z[i / self.block]).collect()
    }

    /// `φ(z)`. Points with some `|z_j| > 1` are rejected.
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        eval_realization(self, z)
    }
}

pub fn eval_realization(r: &Realization, z: &[C64]) -> Result<C64> {
    if z.len() != r.d {
        return Err(Error::InvalidInput(format!("expected a point of C^{}", r.d)));
    }
    if z.iter().any(|c| c.norm() > 1.0 + 1e-12) {
        return Err(Error::Domain("evaluation point outside the closed polydisk".into()));
    }
    let m = r.u.nrows();
    let dz = r.delta(z);
    let mut lhs = DMatrix::<C64>::identity(m, m);
    for i in 0..m {
        for j in 0..m {
            lhs[(i, j)] -= dz[i] * r.u[(i, j)];
        }
    }
    let rhs = DVector::from_iterator(m, (0..m).map(|i| dz[i] * r.v[i]));
    let x = lhs.lu().solve(&rhs).ok_or(Error::SingularResolvent)?;
    let val = (r.v.adjoint() * (&r.u * x))[(0, 0)];
    if !val.is_finite() {
        return Err(Error::SingularResolvent);
    }
    Ok(c64(1.0, 0.0) + val * 2.0)
}

/// Smallest eigenvalue of `I − UΔ(z)Δ(z)*U*`, nonnegative on the polydisk.
pub fn cayley_inner_gram_min_eig(r: &Realization, z: &[C64]) -> f64 {
    let m = r.u.nrows();
    let dz = r.delta(z);
    let ud = DMatrix::from_fn(m, m, |i, j| r.u[(i, j)] * dz[j]);
    min_eig(&(DMatrix::identity(m, m) - &ud * ud.adjoint()))
}

/// `φ = num/den` with `den = det(I − Δ(z)U)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalForm {
    pub num: TruncatedPoly,
    pub den: TruncatedPoly,
}

impl RationalForm {
    pub fn eval(&self, z: &[C64]) -> C64 {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn multi_degree(&self) -> Vec<usize> {
        let scale = self.den.coeffs().iter().chain(self.num.coeffs()).map(|c| c.norm()).fold(0.0, f64::max);
        let tol = 1e-10 * scale.max(1.0);
        self.num
            .multi_degree(tol)
            .iter()
            .zip(self.den.multi_degree(tol))
            .map(|(a, b)| (*a).max(b))
            .collect()
    }
}

fn det_poly(m: &DMatrix<C64>, d: usize, block: usize) -> TruncatedPoly {
    let size = m.nrows();
    let grid = vec![block + 1; d];
    let bound = MultiIndex::uniform(d, block);
    let f = |z: &[C64]| {
        let mut a = DMatrix::<C64>::identity(size, size);
        for i in 0..size {
            for j in 0..size {
                a[(i, j)] -= z[i / block] * m[(i, j)];
            }
        }
        a.determinant()
    };
    let samples = sample_torus_grid(&f, 1.0, &grid);
    coefficients_from_samples(&samples, &bound, 1.0, &grid)
}

/// Numerator and denominator polynomials of the realization, via the matrix
/// determinant lemma `num = det(I − Δ(z)(I − 2VV*)U)`.
pub fn realization_to_rational(r: &Realization) -> Result<RationalForm> {
    let size = r.u.nrows();
    if size > MAX_RATIONAL_SIZE {
        return Err(Error::Unavailable(format!(
            "determinant expansion limited to d|Λ| <= {MAX_RATIONAL_SIZE}, got {size}"
        )));
    }
    let den = det_poly(&r.u, r.d, r.block);
    let refl = DMatrix::identity(size, size) - &r.v * r.v.adjoint() * c64(2.0, 0.0);
    let num = det_poly(&(refl * &r.u), r.d, r.block);
    let out = RationalForm { num, den };
    for deg in out.multi_degree() {
        if deg > size {
            return Err(Error::DegreeBoundViolated { degree: deg, bound: size });
        }
    }
    Ok(out)
}

/// Verification of a realization against its data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterpolantReport {
    pub max_coeff_err: f64,
    pub min_re: f64,
    pub samples: usize,
    /// `(r, median Re φ(rζ))` over torus samples.
    pub boundary_profile: Vec<(f64, f64)>,
    pub coeff_pass: bool,
    pub positivity_pass: bool,
    pub decay_pass: bool,
}

/// Radii of the boundary decay profile.
pub const PROFILE_RADII: [f64; 3] = [0.9, 0.99, 0.999];

/// Compares Taylor data, samples `Re φ` at quasi-random interior points and
/// records the radial decay of `Re φ` towards the torus.
pub fn verify_interpolant(
    r: &Realization,
    data: &CfData,
    vtol: f64,
    samples: usize,
    seed: u64,
) -> Result<InterpolantReport> {
    let d = r.d;
    let eval = |z: &[C64]| eval_realization(r, z).unwrap_or(c64(f64::NAN, f64::NAN));
    let table = taylor_default(&eval, data.c.bound())?;
    let max_coeff_err = table.coeffs.max_abs_diff(&data.c);
    let offset = seed_offset(seed, 2 * d);
    let pts = kronecker_points(samples, 2 * d, &offset);
    let mut min_re = f64::INFINITY;
    let mut z = vec![c64(0.0, 0.0); d];
    for p in &pts {
        for j in 0..d {
            z[j] = C64::from_polar(p[2 * j] * (1.0 - 1e-9), 2.0 * std::f64::consts::PI * p[2 * j + 1]);
        }
        min_re = min_re.min(eval_realization(r, &z)?.re);
    }
    let torus = kronecker_points(512, d, &offset);
    let mut boundary_profile = Vec::new();
    for &rad in &PROFILE_RADII {
        let mut vals: Vec<f64> = torus
            .iter()
            .filter_map(|t| {
                let z: Vec<C64> =
                    t.iter().map(|&x| C64::from_polar(rad, 2.0 * std::f64::consts::PI * x)).collect();
                eval_realization(r, &z).ok().map(|v| v.re)
            })
            .filter(|v| v.is_finite())
            .collect();
        vals.sort_by(f64::total_cmp);
        let med = if vals.is_empty() { f64::NAN } else { vals[vals.len() / 2] };
        boundary_profile.push((rad, med));
    }
    let decay_pass = boundary_profile.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(InterpolantReport {
        max_coeff_err,
        min_re,
        samples,
        boundary_profile,
        coeff_pass: max_coeff_err <= vtol,
        positivity_pass: min_re >= -1e-6,
        decay_pass,
    })
}

/// Cranley–Patterson shift derived from a seed.
pub fn seed_offset(seed: u64, dim: usize) -> Vec<f64> {
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    (0..dim)
        .map(|_| {
            // splitmix64
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Certificate, realization and rational form for one data set.
#[derive(Clone, Debug)]
pub struct CfSolution {
    pub data: CfData,
    pub certificate: AglerCertificate,
    pub realization: Realization,
}

/// Runs the full pipeline on normalized data.
pub fn solve_cf(data: &CfData, opts: &FeasibilityOptions) -> Result<CfSolution> {
    let certificate = agler_feasibility(data, opts)?;
    let realization = build_realization(&certificate, data, UTOL)?;
    Ok(CfSolution { data: data.clone(), certificate, realization })
}

/// A rational inner function `f_n = (φ − 1)/(φ + 1)` matching a Schur-class
/// function through the box `(n, …, n)`.
#[derive(Clone, Debug)]
pub struct CfInner {
    pub solution: CfSolution,
    pub normalization: Normalization,
    pub max_coeff_err: f64,
    /// Per-variable degree of the rational representation, when computed.
    pub multi_degree: Option<Vec<usize>>,
}

impl CfInner {
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        let phi = self.normalization.apply(eval_realization(&self.solution.realization, z)?);
        Ok((phi - 1.0) / (phi + 1.0))
    }
}

/// Rational inner approximant of a Schur-class evaluator (assumed in the Agler
/// class) through total box `(n, …, n)`.
pub fn cf_inner_sequence(
    f: &(dyn Fn(&[C64]) -> C64 + Sync),
    d: usize,
    n: usize,
    opts: &FeasibilityOptions,
) -> Result<CfInner> {
    let bound = MultiIndex::uniform(d, n);
    let ftab = taylor_default(f, &bound)?;
    let herglotz: FourierTable = cayley_forward(&ftab)?;
    let (data, normalization) = CfData::normalize(&herglotz.coeffs)?;
    let solution = solve_cf(&data, opts)?;
    let mut out = CfInner { solution, normalization, max_coeff_err: 0.0, multi_degree: None };
    let fn_eval = |z: &[C64]| out.eval(z).unwrap_or(c64(f64::NAN, f64::NAN));
    let table = taylor_default(&fn_eval, &bound)?;
    let err = table.coeffs.max_abs_diff(&ftab.coeffs);
    let deg = match realization_to_rational(&out.solution.realization) {
        Ok(rf) => Some(rf.multi_degree()),
        Err(Error::Unavailable(_)) => None,
        Err(e) => return Err(e),
    };
    out.max_coeff_err = err;
    out.multi_degree = deg;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn data(bound: &[usize], pairs: &[(&[usize], C64)]) -> CfData {
        let mut all = vec![(&[0usize; 4][..bound.len()], c64(1.0, 0.0))];
        all.extend_from_slice(pairs);
        CfData::new(TruncatedPoly::from_pairs(&MultiIndex::new(bound.to_vec()).unwrap(), &all).unwrap()).unwrap()
    }

    #[test]
    fn structure_examples() {
        let (a, b, c) = (c64(0.1, 0.2), c64(-0.3, 0.0), c64(0.05, -0.4));
        let s = build_structure(&data(&[1, 1], &[(&[1, 0], a), (&[0, 1], b), (&[1, 1], c)]));
        let col: Vec<C64> = s.x.column(0).iter().copied().collect();
        assert_eq!(col, vec![c64(1.0, 0.0), a, b, c]);
        assert_eq!(s.x[(3, 1)], b);
        assert_eq!(s.x[(3, 2)], a);
        assert_eq!(s.x[(1, 2)], c64(0.0, 0.0));
        assert!((0..4).all(|i| s.x[(i, i)] == c64(1.0, 0.0)));

        let s = build_structure(&data(&[2, 1], &[]));
        assert_eq!(s.x, DMatrix::identity(6, 6));

        let (a, b) = (c64(0.3, 0.0), c64(0.0, 0.2));
        let s = build_structure(&data(&[2], &[(&[1], a), (&[2], b)]));
        let want = DMatrix::from_row_slice(
            3,
            3,
            &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), a, c64(1.0, 0.0), c64(0.0, 0.0), b, a, c64(1.0, 0.0)],
        );
        assert_eq!(s.x, want);
        // T_1 shifts e_0 -> e_1 -> e_2
        assert_eq!(s.t[0][(1, 0)], c64(1.0, 0.0));
        assert_eq!(s.t[0][(2, 1)], c64(1.0, 0.0));
    }

    #[test]
    fn unnormalized_data_is_rejected_or_normalized() {
        let p = TruncatedPoly::from_pairs(&MultiIndex::uniform(1, 1), &[(&[0], c64(2.0, 1.0)), (&[1], c64(1.0, 0.0))])
            .unwrap();
        assert!(CfData::new(p.clone()).is_err());
        let (d, nm) = CfData::normalize(&p).unwrap();
        assert_eq!(d.c.coeffs()[0], c64(1.0, 0.0));
        assert_eq!(d.c.coeffs()[1], c64(0.5, 0.0));
        assert_eq!(nm.apply(c64(1.0, 0.0)), c64(2.0, 1.0));
    }

    #[test]
    fn trivial_data_pipeline() {
        let dat = data(&[1, 1], &[]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        assert!(sol.certificate.eq_residual <= 1e-9);
        assert_eq!(sol.realization.eval(&[c64(0.0, 0.0), c64(0.0, 0.0)]).unwrap(), c64(1.0, 0.0));
        let rep = verify_interpolant(&sol.realization, &dat, 1e-10, 1000, 0).unwrap();
        assert!(rep.max_coeff_err <= 1e-10, "{}", rep.max_coeff_err);
        assert!(rep.min_re >= -1e-10);
    }

    #[test]
    fn infeasible_data_is_reported() {
        let dat = data(&[1, 1], &[(&[1, 1], c64(3.0, 0.0))]);
        assert!(matches!(agler_feasibility(&dat, &FeasibilityOptions::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn interior_bidisk_point() {
        let dat = data(&[1, 1], &[(&[1, 0], c64(0.5, 0.0)), (&[0, 1], c64(0.5, 0.0)), (&[1, 1], c64(0.25, 0.0))]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        assert!(sol.realization.u22 <= 1e-8);
        assert!(isometry_defect(&sol.certificate, &dat) <= 1e-8);
        let rep = verify_interpolant(&sol.realization, &dat, 1e-6, 1000, 1).unwrap();
        assert!(rep.coeff_pass, "coefficient error {}", rep.max_coeff_err);
        assert!(rep.positivity_pass);
        assert!(rep.decay_pass, "{:?}", rep.boundary_profile);
        let z = [c64(0.3, 0.0), c64(0.2, 0.0)];
        assert!(sol.realization.eval(&z).unwrap().re >= 0.0);
        assert!(cayley_inner_gram_min_eig(&sol.realization, &z) >= -1e-12);
    }

    #[test]
    fn one_variable_interior_and_boundary() {
        let dat = data(&[1], &[(&[1], c64(1.0, 0.0))]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        let rep = verify_interpolant(&sol.realization, &dat, 1e-6, 200, 0).unwrap();
        assert!(rep.coeff_pass);

        // |c_1| = 2 forces the certificate Γ = [[4,4],[4,4]] and φ = (1+z)/(1−z)
        let dat = data(&[1], &[(&[1], c64(2.0, 0.0))]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        let z = c64(0.3, -0.2);
        let want = (1.0 + z) / (1.0 - z);
        assert_abs_diff_eq!((sol.realization.eval(&[z]).unwrap() - want).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn rational_form_degrees_and_values() {
        let dat = data(&[1, 1], &[(&[1, 0], c64(0.5, 0.0)), (&[0, 1], c64(0.5, 0.0)), (&[1, 1], c64(0.25, 0.0))]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        let rf = realization_to_rational(&sol.realization).unwrap();
        assert!(rf.multi_degree().iter().all(|&k| k <= 8));
        let z = [c64(0.4, 0.1), c64(-0.3, 0.5)];
        assert_abs_diff_eq!((rf.eval(&z) - sol.realization.eval(&z).unwrap()).norm(), 0.0, epsilon = 1e-10);

        let dat = data(&[1], &[(&[1], c64(0.5, 0.3))]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        let rf = realization_to_rational(&sol.realization).unwrap();
        assert!(rf.multi_degree()[0] <= 2);
    }

    #[test]
    fn rational_form_size_limit() {
        let dat = data(&[2, 2], &[]);
        let sol = solve_cf(&dat, &FeasibilityOptions::default()).unwrap();
        assert!(matches!(realization_to_rational(&sol.realization), Err(Error::Unavailable(_))));
    }

    #[test]
    fn inner_sequence_examples() {
        let opts = FeasibilityOptions::default();
        let half = |z: &[C64]| (z[0] + z[1]) * 0.5;
        let res = cf_inner_sequence(&half, 2, 1, &opts).unwrap();
        assert!(res.max_coeff_err <= 1e-6, "{}", res.max_coeff_err);
        let z = [C64::from_polar(1.0, 0.7), C64::from_polar(1.0, -2.1)];
        assert_abs_diff_eq!(res.eval(&z).unwrap().norm(), 1.0, epsilon = 1e-6);

        let res = cf_inner_sequence(&|z: &[C64]| z[0], 1, 1, &opts).unwrap();
        let z = c64(0.2, 0.4);
        assert_abs_diff_eq!((res.eval(&[z]).unwrap() - z).norm(), 0.0, epsilon = 1e-6);

        let res = cf_inner_sequence(&|_: &[C64]| c64(0.0, 0.0), 2, 1, &opts).unwrap();
        assert!(res.max_coeff_err <= 1e-8);
    }

    #[test]
    fn seed_offsets_are_deterministic() {
        assert_eq!(seed_offset(7, 3), seed_offset(7, 3));
        assert_ne!(seed_offset(7, 3), seed_offset(8, 3));
    }
}
