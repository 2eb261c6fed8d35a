//! Padé-type approximation from con-eigenvectors.
//!
//! For a bounded symbol `f` and a box `Λ_n`, the top con-eigenpair `(σ, q)`
//! of [`crate::takagi`] gives the splitting
//!
//! ```text
//! f·q* = σ·q + r,        r has no coefficients in Λ_n,
//! ```
//!
//! so `R = σq/q*` agrees with `f` through `Λ_n` wherever `q*(0) ≠ 0`. This
//! module computes `R`, the remainder norms and bounds, probes `q*` for zeros
//! in the polydisk, and runs the surrounding sweeps: Pfister's inner scheme,
//! the tensor-product shortcut, plateau diagnostics and convergence tables.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyseries::{
    c64, enumerate_box, reflect, sample_torus_grid, series_div, taylor_default, FourierTable, MultiIndex,
    MultiIndexBox, TruncatedPoly, C64,
};
use crate::takagi::{build_con_matrix, con_eig_max};

/// Symbol evaluator on a neighbourhood of the closed polydisk.
pub type Evaluator<'a> = &'a (dyn Fn(&[C64]) -> C64 + Sync);

/// Tolerances and grids of the driver.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PadeOptions {
    /// Agreement tolerance of Taylor data.
    pub mtol: f64,
    /// Modulus below which a grid value of `q*` counts as a near-zero.
    pub ztol: f64,
    /// Quadrature tolerance folded into remainder checks.
    pub qtol: f64,
    /// `|q*(0)|` must exceed this for Taylor matching.
    pub q0_tol: f64,
    pub probe_radii: Vec<f64>,
    /// Tolerance on `‖f‖∞ ≈ 1` in rational-inner detection; the sampled
    /// estimate at radius 0.999 underestimates the supremum.
    pub sup_tol: f64,
}

impl Default for PadeOptions {
    fn default() -> Self {
        Self {
            mtol: 1e-7,
            ztol: 1e-6,
            qtol: 1e-7,
            q0_tol: 1e-8,
            probe_radii: vec![0.5, 0.9, 0.99, 1.0],
            sup_tol: 1e-2,
        }
    }
}

/// Radius of the torus on which `‖f‖∞` is estimated.
pub const SUP_RADIUS: f64 = 0.999;

/// Points per axis of the sup-norm grid (`256^min(d,2)` points overall).
pub fn sup_grid_per_axis(d: usize) -> usize {
    match d {
        1 | 2 => 256,
        _ => (65536f64.powf(1.0 / d as f64)).ceil() as usize,
    }
}

/// Max modulus of `f` over a torus tensor grid at radius 0.999.
pub fn sup_estimate(f: Evaluator, d: usize) -> f64 {
    let k = sup_grid_per_axis(d);
    sample_torus_grid(f, SUP_RADIUS, &vec![k; d]).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Minimum modulus of `q*` per radius, with grid points below `ztol` and
/// zeros found by slicing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub min_modulus_by_radius: Vec<(f64, f64)>,
    /// Grid points (radius < 1) where `|q*| < ztol`, at most [`MAX_REPORTED`].
    pub near_zeros: Vec<Vec<[f64; 2]>>,
    /// Zeros inside the open polydisk found on one-variable slices, at most [`MAX_REPORTED`].
    pub interior_zeros: Vec<Vec<[f64; 2]>>,
    /// Total number of interior slice zeros found.
    pub interior_zero_count: usize,
}

pub const MAX_REPORTED: usize = 16;

impl ProbeReport {
    pub fn has_interior_zero(&self) -> bool {
        !self.near_zeros.is_empty() || self.interior_zero_count > 0
    }

    pub fn min_modulus(&self) -> f64 {
        self.min_modulus_by_radius.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn min_at(&self, radius: f64) -> Option<f64> {
        self.min_modulus_by_radius.iter().find(|p| p.0 == radius).map(|p| p.1)
    }
}

fn to_pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

/// Default probe grid per axis.
pub fn probe_grid_per_axis(d: usize) -> usize {
    if d <= 2 { 128 } else { 32 }
}

/// Roots of `Σ c_k t^k` via the companion matrix.
fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let Some(deg) = coeffs.iter().rposition(|c| c.norm() > 1e-14 * scale) else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let mut comp = DMatrix::<C64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = c64(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    Schur::new(comp).eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

/// Samples `|q*|` on tensor torus grids at each radius and searches for zeros
/// in the open polydisk along slices in the last variable.
pub fn pole_probe(q_star: &TruncatedPoly, radii: &[f64], grid: usize, ztol: f64) -> Result<ProbeReport> {
    if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("probe radii must increase strictly within (0, 1]".into()));
    }
    let d = q_star.dim();
    let mut min_modulus_by_radius = Vec::with_capacity(radii.len());
    let mut near_zeros = Vec::new();
    let total = grid.pow(d as u32);
    for &r in radii {
        let mut best = f64::INFINITY;
        let mut z = vec![c64(0.0, 0.0); d];
        for pos in 0..total {
            let mut rem = pos;
            for zj in z.iter_mut().rev() {
                *zj = C64::from_polar(r, 2.0 * PI * (rem % grid) as f64 / grid as f64);
                rem /= grid;
            }
            let m = q_star.eval(&z).norm();
            best = best.min(m);
            if m < ztol && r < 1.0 && near_zeros.len() < MAX_REPORTED {
                near_zeros.push(to_pairs(&z));
            }
        }
        min_modulus_by_radius.push((r, best));
    }
    let (interior_zeros, interior_zero_count) = slice_zeros(q_star);
    Ok(ProbeReport { min_modulus_by_radius, near_zeros, interior_zeros, interior_zero_count })
}

/// Zeros with `|z_d| < 1` of `q*(z_1, …, z_{d−1}, ·)` for `(z_1, …, z_{d−1})`
/// on a polar grid of the closed polydisk.
fn slice_zeros(q: &TruncatedPoly) -> (Vec<Vec<[f64; 2]>>, usize) {
    let d = q.dim();
    let nd = q.bound().components()[d - 1];
    let radii = [0.0, 0.25, 0.5, 0.75, 0.9, 0.99];
    let angles = if d <= 2 { 24 } else { 8 };
    let mut pts: Vec<C64> = vec![c64(0.0, 0.0)];
    for &r in &radii[1..] {
        for a in 0..angles {
            pts.push(C64::from_polar(r, 2.0 * PI * a as f64 / angles as f64));
        }
    }
    let slices = pts.len().pow((d - 1) as u32);
    let mut found = Vec::new();
    let mut count = 0;
    let mut head = vec![c64(0.0, 0.0); d - 1];
    for s in 0..slices {
        let mut rem = s;
        for h in head.iter_mut() {
            *h = pts[rem % pts.len()];
            rem /= pts.len();
        }
        let mut coeffs = vec![c64(0.0, 0.0); nd + 1];
        for (alpha, c) in q.bx().iter().zip(q.coeffs()) {
            let a = alpha.components();
            let w = head.iter().zip(a).fold(*c, |acc, (z, &k)| acc * z.powi(k as i32));
            coeffs[a[d - 1]] += w;
        }
        for t in poly_roots(&coeffs) {
            if t.norm() < 1.0 - 1e-9 {
                count += 1;
                if found.len() < MAX_REPORTED {
                    let mut z = head.clone();
                    z.push(t);
                    found.push(to_pairs(&z));
                }
            }
        }
    }
    (found, count)
}

/// Outcome of one Padé step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PadeReport {
    pub n: MultiIndex,
    pub sigma: f64,
    /// Size of the top con-eigenvalue cluster; above 1 the choice of `q` is not unique.
    pub multiplicity: usize,
    pub q: TruncatedPoly,
    pub q_star: TruncatedPoly,
    /// `‖f·q* − σq‖₂` by torus quadrature.
    pub remainder_l2: f64,
    /// `(‖f‖∞ − σ)·‖q‖₂`.
    pub bound_l2: f64,
    /// `sqrt(‖f‖∞² − σ²)·‖q‖₂`, which the remainder obeys because `r ⟂ σq`.
    pub orthogonal_bound_l2: f64,
    pub sup_f: f64,
    pub pole_probe: ProbeReport,
    pub taylor_match_depth: Option<MultiIndex>,
}

impl PadeReport {
    /// `R(z) = σ q(z)/q*(z)`.
    pub fn eval_approximant(&self, z: &[C64]) -> C64 {
        self.q.eval(z) * self.sigma / self.q_star.eval(z)
    }

    /// `f(z)·q*(z) − σ q(z)`.
    pub fn remainder_at(&self, f: Evaluator, z: &[C64]) -> C64 {
        f(z) * self.q_star.eval(z) - self.q.eval(z) * self.sigma
    }
}

/// Strips the largest common monomial factor of `a` and `b`.
fn strip_common_monomial(a: &TruncatedPoly, b: &TruncatedPoly, tol: f64) -> (TruncatedPoly, TruncatedPoly) {
    let d = a.dim();
    let mut low = vec![usize::MAX; d];
    for p in [a, b] {
        for (alpha, c) in p.bx().iter().zip(p.coeffs()) {
            if c.norm() > tol {
                for (l, &x) in low.iter_mut().zip(alpha.components()) {
                    *l = (*l).min(x);
                }
            }
        }
    }
    if low.contains(&usize::MAX) || low.iter().all(|&l| l == 0) {
        return (a.clone(), b.clone());
    }
    let shift = |p: &TruncatedPoly| {
        TruncatedPoly::from_fn(p.bx().clone(), |alpha| {
            let src: Vec<usize> = alpha.components().iter().zip(&low).map(|(x, l)| x + l).collect();
            p.coeff(&src)
        })
    };
    (shift(a), shift(b))
}

/// Taylor coefficients of `σ q/q*` over `bound`, or `None` when `q*` vanishes
/// at the origin after cancelling common monomial factors.
pub fn approximant_series(
    sigma: f64,
    q: &TruncatedPoly,
    q_star: &TruncatedPoly,
    bound: &MultiIndex,
    q0_tol: f64,
) -> Option<TruncatedPoly> {
    let scale = q.coeffs().iter().chain(q_star.coeffs()).map(|c| c.norm()).fold(0.0, f64::max);
    let (num, den) = strip_common_monomial(q, q_star, 1e-13 * scale.max(f64::MIN_POSITIVE));
    if den.coeffs()[0].norm() <= q0_tol {
        return None;
    }
    let bx = Arc::new(enumerate_box(bound));
    let big = bound
        .components()
        .iter()
        .zip(num.bound().components())
        .map(|(a, b)| *a.max(b))
        .collect::<Vec<_>>();
    let big = Arc::new(enumerate_box(&MultiIndex::new(big).ok()?));
    let num = num.embed(big.clone()).ok()?;
    let den = den.embed(big.clone()).ok()?;
    series_div(&num, &den, &big).ok().map(|s| s.restrict(bx).scale(c64(sigma, 0.0)))
}

/// Largest box, grown greedily one coordinate at a time from the origin,
/// on which `series` agrees with `f` within `mtol`.
pub fn taylor_match_depth(series: &TruncatedPoly, f: &FourierTable, mtol: f64) -> Option<MultiIndex> {
    let d = f.bound().dim();
    let limit: Vec<usize> =
        f.bound().components().iter().zip(series.bound().components()).map(|(a, b)| *a.min(b)).collect();
    let agrees = |alpha: &[usize]| (series.coeff(alpha) - f.get(alpha)).norm() <= mtol;
    if !agrees(&vec![0; d]) {
        return None;
    }
    let mut m = vec![0usize; d];
    loop {
        let mut grew = false;
        for j in 0..d {
            if m[j] >= limit[j] {
                continue;
            }
            // new face of Λ_{m + e_j}
            let mut next = m.clone();
            next[j] += 1;
            let face = enumerate_box(&MultiIndex::new(next.clone()).ok()?);
            if face.iter().filter(|a| a.components()[j] == next[j]).all(|a| agrees(a.components())) {
                m = next;
                grew = true;
            }
        }
        if !grew {
            return MultiIndex::new(m).ok();
        }
    }
}

/// One step of the scheme on box `n`.
///
/// `f` must tabulate the symbol at least over `Λ_n`; a larger table extends
/// the range over which Taylor matching is measured. `sup_f` is the
/// `‖f‖∞` estimate (computed by [`sup_estimate`] when absent).
pub fn pade_step(
    f: &FourierTable,
    eval: Evaluator,
    n: &MultiIndex,
    sup_f: Option<f64>,
    opts: &PadeOptions,
) -> Result<PadeReport> {
    if !n.le(f.bound()) {
        return Err(Error::BoxMismatch(format!("symbol table {} does not cover {n}", f.bound())));
    }
    let a = build_con_matrix(f, n);
    let pair = con_eig_max(&a)?;
    let q = pair.q;
    let q_star = reflect(&q, n)?;
    let d = n.dim();
    let sigma = pair.sigma;
    let grid: Vec<usize> = n.components().iter().map(|&k| 4 * k + 8).collect();
    let rfun = |z: &[C64]| eval(z) * q_star.eval(z) - q.eval(z) * sigma;
    let samples = sample_torus_grid(&rfun, 1.0, &grid);
    let remainder_l2 = (samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / samples.len() as f64).sqrt();
    let sup_f = sup_f.unwrap_or_else(|| sup_estimate(eval, d));
    let qn = q.norm2();
    let bound_l2 = (sup_f - sigma) * qn;
    let orthogonal_bound_l2 = (sup_f * sup_f - sigma * sigma).max(0.0).sqrt() * qn;
    let pole_probe = pole_probe(&q_star, &opts.probe_radii, probe_grid_per_axis(d), opts.ztol)?;
    let taylor_match_depth = approximant_series(sigma, &q, &q_star, f.bound(), opts.q0_tol)
        .and_then(|s| taylor_match_depth(&s, f, opts.mtol));
    Ok(PadeReport {
        n: n.clone(),
        sigma,
        multiplicity: pair.multiplicity,
        q,
        q_star,
        remainder_l2,
        bound_l2,
        orthogonal_bound_l2,
        sup_f,
        pole_probe,
        taylor_match_depth,
    })
}

/// Tabulates `f` over `Λ_{2n}` and runs [`pade_step`].
pub fn pade_step_eval(eval: Evaluator, n: &MultiIndex, sup_f: Option<f64>, opts: &PadeOptions) -> Result<PadeReport> {
    let table = taylor_default(eval, &n.scaled(2))?;
    pade_step(&table, eval, n, sup_f, opts)
}

/// `(‖f‖∞ − σ)·‖q‖₂·δ^m/(1 − δ²)^{d/2}` for points with `max|z_j| ≤ δ`.
pub fn remainder_pointwise_bound(sup_f: f64, sigma: f64, q_norm: f64, delta: f64, m: usize, d: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1)")));
    }
    Ok((sup_f - sigma) * q_norm * delta.powi(m as i32) / (1.0 - delta * delta).powf(d as f64 / 2.0))
}

/// Whether the step has recovered a rational inner function `f = q/q*`.
pub fn detect_rational_inner(report: &PadeReport, tol: f64, opts: &PadeOptions) -> bool {
    let candidate = report.sigma >= 1.0 - tol
        && (report.sup_f - 1.0).abs() <= tol.max(opts.sup_tol)
        && report.remainder_l2 <= tol;
    candidate && !report.pole_probe.has_interior_zero()
}

/// A rational inner function `φ = num/den` of Pfister's scheme.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PfisterStep {
    pub kappa: usize,
    /// Total-degree-κ Taylor truncation of `f_ρ`.
    pub p: TruncatedPoly,
    pub num: TruncatedPoly,
    pub den: TruncatedPoly,
}

impl PfisterStep {
    pub fn eval(&self, z: &[C64]) -> C64 {
        self.num.eval(z) / self.den.eval(z)
    }
}

/// `φ_κ = (p + z_1⋯z_d z^N)/(1 + z_1⋯z_d p*)`, `N = (κ, …, κ)`, where `p` is
/// the total-degree-κ truncation of `f_ρ(z) = f(ρz)`.
pub fn pfister_sequence(f: Evaluator, d: usize, rho: f64, kappas: &[usize]) -> Result<Vec<PfisterStep>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    let scaled = |z: &[C64]| {
        let w: Vec<C64> = z.iter().map(|c| c * rho).collect();
        f(&w)
    };
    let mut out = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let nbox = MultiIndex::uniform(d, kappa);
        let table = taylor_default(&scaled, &nbox)?;
        let p = TruncatedPoly::from_fn(table.bx().clone(), |a| {
            if a.degree() <= kappa { table.get(a.components()) } else { c64(0.0, 0.0) }
        });
        let p_star = reflect(&p, &nbox)?;
        let big = Arc::new(enumerate_box(&MultiIndex::uniform(d, kappa + 1)));
        let mut num = p.embed(big.clone())?;
        num.add_to(&vec![kappa + 1; d], c64(1.0, 0.0))?;
        let mut den = TruncatedPoly::zeros(big.clone());
        den.add_to(&vec![0; d], c64(1.0, 0.0))?;
        for (a, c) in p_star.bx().iter().zip(p_star.coeffs()) {
            let shifted: Vec<usize> = a.components().iter().map(|x| x + 1).collect();
            den.add_to(&shifted, *c)?;
        }
        out.push(PfisterStep { kappa, p, num, den });
    }
    Ok(out)
}

/// Checks of one [`PfisterStep`] against `f_ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PfisterDiagnostics {
    pub kappa: usize,
    /// Sup of `|φ − f_ρ|` over the torus of radius 0.5.
    pub sup_err: f64,
    /// Max of `||φ| − 1|` on torus samples where `|den| > 1e−6`.
    pub unimodular_defect: f64,
    /// Max deviation of the Taylor coefficients of `φ` from `p` through total degree κ.
    pub taylor_err: f64,
}

pub fn pfister_diagnostics(step: &PfisterStep, f: Evaluator, rho: f64) -> Result<PfisterDiagnostics> {
    let d = step.p.dim();
    let per_axis = if d <= 2 { 64 } else { 16 };
    let phi = |z: &[C64]| step.eval(z);
    let f_rho = |z: &[C64]| {
        let w: Vec<C64> = z.iter().map(|c| c * rho).collect();
        f(&w)
    };
    let sup_err = sup_difference(&phi, &f_rho, d, 0.5, per_axis);
    let num = sample_torus_grid(&|z: &[C64]| step.num.eval(z), 1.0, &vec![per_axis; d]);
    let den = sample_torus_grid(&|z: &[C64]| step.den.eval(z), 1.0, &vec![per_axis; d]);
    let unimodular_defect = num
        .iter()
        .zip(&den)
        .filter(|(_, b)| b.norm() > 1e-6)
        .map(|(a, b)| ((a / b).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let table = taylor_default(&phi, step.p.bound())?;
    let taylor_err = step
        .p
        .bx()
        .iter()
        .filter(|a| a.degree() <= step.kappa)
        .map(|a| (table.get(a.components()) - step.p.coeff(a.components())).norm())
        .fold(0.0, f64::max);
    Ok(PfisterDiagnostics { kappa: step.kappa, sup_err, unimodular_defect, taylor_err })
}

/// Sup of `|g − h|` over a torus grid of the given radius.
pub fn sup_difference(g: Evaluator, h: Evaluator, d: usize, radius: f64, per_axis: usize) -> f64 {
    let diff = |z: &[C64]| g(z) - h(z);
    sample_torus_grid(&diff, radius, &vec![per_axis; d]).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Tensor-product step for `f(z, w) = g(z)·h(w)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorReport {
    pub sigma_g: f64,
    pub sigma_h: f64,
    /// `σ_g·σ_h`.
    pub sigma: f64,
    /// `q(z, w) = p(z)·q(w)`.
    pub q: TruncatedPoly,
    /// Top con-eigenvalue of the directly assembled two-variable problem.
    pub sigma_direct: f64,
}

pub fn tensor_pade(g: &FourierTable, h: &FourierTable, n1: usize, n2: usize) -> Result<TensorReport> {
    if g.bound().dim() != 1 || h.bound().dim() != 1 {
        return Err(Error::InvalidInput("tensor factors must be one-variable tables".into()));
    }
    let pg = con_eig_max(&build_con_matrix(g, &MultiIndex::uniform(1, n1)))?;
    let ph = con_eig_max(&build_con_matrix(h, &MultiIndex::uniform(1, n2)))?;
    let n = MultiIndex::new(vec![n1, n2])?;
    let bx = Arc::new(enumerate_box(&n));
    let q = TruncatedPoly::from_fn(bx, |a| pg.q.coeff(&a.components()[..1]) * ph.q.coeff(&a.components()[1..]));
    let fb = MultiIndex::new(vec![g.bound().components()[0], h.bound().components()[0]])?;
    let ftab = FourierTable {
        coeffs: TruncatedPoly::from_fn(Arc::new(enumerate_box(&fb)), |a| {
            g.get(&a.components()[..1]) * h.get(&a.components()[1..])
        }),
        trunc_error_estimate: g.trunc_error_estimate + h.trunc_error_estimate,
    };
    let direct = con_eig_max(&build_con_matrix(&ftab, &n))?;
    Ok(TensorReport {
        sigma_g: pg.sigma,
        sigma_h: ph.sigma,
        sigma: pg.sigma * ph.sigma,
        q,
        sigma_direct: direct.sigma,
    })
}

/// Distribution of `|q(ζ)|² dm(ζ)` against the level sets of `|f|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateauHistogram {
    pub grid: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub total_mass: f64,
    pub sup_f: f64,
    /// Mass on `{|f| ≥ sup − ε}` over total mass.
    pub concentration_ratio: f64,
}

impl PlateauHistogram {
    /// Torus point of sample `i` (row-major, last axis fastest).
    pub fn point(&self, i: usize) -> Vec<C64> {
        let mut rem = i;
        let mut z = vec![c64(0.0, 0.0); self.dim];
        for zj in z.iter_mut().rev() {
            *zj = C64::from_polar(1.0, 2.0 * PI * (rem % self.grid) as f64 / self.grid as f64);
            rem /= self.grid;
        }
        z
    }
}

pub fn plateau_histogram(q: &TruncatedPoly, f: Evaluator, grid: usize, eps: f64) -> PlateauHistogram {
    let d = q.dim();
    let gridv = vec![grid; d];
    let weights: Vec<f64> = sample_torus_grid(&|z: &[C64]| q.eval(z), 1.0, &gridv)
        .iter()
        .map(|v| v.norm_sqr() / grid.pow(d as u32) as f64)
        .collect();
    let magnitudes: Vec<f64> = sample_torus_grid(f, 1.0, &gridv).iter().map(|v| v.norm()).collect();
    let sup_f = magnitudes.iter().copied().fold(0.0, f64::max);
    let total_mass: f64 = weights.iter().sum();
    let top: f64 = weights.iter().zip(&magnitudes).filter(|(_, &m)| m >= sup_f - eps).map(|(w, _)| w).sum();
    let concentration_ratio = if total_mass > 0.0 { top / total_mass } else { 0.0 };
    PlateauHistogram { grid, dim: d, weights, magnitudes, total_mass, sup_f, concentration_ratio }
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: MultiIndex,
    pub sigma: f64,
    /// `(radius, sup |f − R|)` over the torus of that radius, masked near zeros of `q*`.
    pub sup_err: Vec<(f64, f64)>,
    pub pole_count: usize,
}

/// `|q*|` below which a sample is excluded from approximation errors.
pub const POLE_MASK: f64 = 1e-3;

/// Approximation error of `R = σq/q*` on the torus of radius `radius`.
pub fn approximation_error(report: &PadeReport, f: Evaluator, radius: f64, per_axis: usize) -> f64 {
    let d = report.n.dim();
    let mut worst: f64 = 0.0;
    let total = per_axis.pow(d as u32);
    let mut z = vec![c64(0.0, 0.0); d];
    for pos in 0..total {
        let mut rem = pos;
        for zj in z.iter_mut().rev() {
            *zj = C64::from_polar(radius, 2.0 * PI * (rem % per_axis) as f64 / per_axis as f64);
            rem /= per_axis;
        }
        let den = report.q_star.eval(&z);
        if den.norm() < POLE_MASK {
            continue;
        }
        let r = report.q.eval(&z) * report.sigma / den;
        worst = worst.max((f(&z) - r).norm());
    }
    worst
}

pub fn convergence_study(
    f: Evaluator,
    schedule: &[MultiIndex],
    compacts: &[f64],
    opts: &PadeOptions,
) -> Result<Vec<ConvergenceRow>> {
    let d = schedule.first().map(|n| n.dim()).ok_or_else(|| Error::InvalidInput("empty schedule".into()))?;
    let sup_f = sup_estimate(f, d);
    let per_axis = if d <= 2 { 64 } else { 16 };
    schedule
        .iter()
        .map(|n| {
            let rep = pade_step_eval(f, n, Some(sup_f), opts)?;
            let sup_err = compacts.iter().map(|&r| (r, approximation_error(&rep, f, r, per_axis))).collect();
            Ok(ConvergenceRow {
                n: n.clone(),
                sigma: rep.sigma,
                sup_err,
                pole_count: rep.pole_probe.interior_zero_count,
            })
        })
        .collect()
}

pub fn box_of(n: &MultiIndex) -> Arc<MultiIndexBox> {
    Arc::new(enumerate_box(n))
}
