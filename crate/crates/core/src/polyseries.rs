//! Multi-index boxes and truncated multivariate power series.
//!
//! Every polynomial in this crate lives on a box `Λ_n = {β : β ≤ n}` of
//! multi-indices. The box fixes a graded-lexicographic enumeration which is
//! also the row/column order of every matrix built on top of it: indices are
//! sorted by total degree, and within one degree the lexicographically larger
//! index comes first, so `n = (1, 1)` enumerates as
//! `(0,0), (1,0), (0,1), (1,1)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the constant term of a series denominator.
pub const POLE_TOL: f64 = 1e-12;

/// Default sampling radius for Taylor extraction.
pub const DEFAULT_RADIUS: f64 = 0.5;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A multi-index `(n_1, …, n_d)` of nonnegative exponents, `d ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("multi-index needs d >= 1 components".into()));
        }
        Ok(Self(components))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d.max(1)])
    }

    pub fn uniform(d: usize, k: usize) -> Self {
        Self(vec![k; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn min(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }

    /// Entrywise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn scaled(&self, k: usize) -> Self {
        Self(self.0.iter().map(|&a| a * k).collect())
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(v: &[usize]) -> Self {
        Self(v.to_vec())
    }
}

/// The index set `Λ_n` with its graded-lexicographic enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexBox {
    bound: MultiIndex,
    elems: Vec<MultiIndex>,
    // mixed-radix position -> ordinal
    lookup: Vec<usize>,
    strides: Vec<usize>,
}

impl MultiIndexBox {
    pub fn new(bound: MultiIndex) -> Self {
        let d = bound.dim();
        let mut strides = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * (bound.0[j + 1] + 1);
        }
        let card: usize = bound.0.iter().map(|&n| n + 1).product();
        let mut elems = Vec::with_capacity(card);
        for pos in 0..card {
            let mut rem = pos;
            let comps = strides
                .iter()
                .map(|&s| {
                    let c = rem / s;
                    rem %= s;
                    c
                })
                .collect();
            elems.push(MultiIndex(comps));
        }
        elems.sort_by(|a, b| a.degree().cmp(&b.degree()).then_with(|| b.0.cmp(&a.0)));
        let mut lookup = vec![0; card];
        for (ord, e) in elems.iter().enumerate() {
            let pos: usize = e.0.iter().zip(&strides).map(|(c, s)| c * s).sum();
            lookup[pos] = ord;
        }
        Self { bound, elems, lookup, strides }
    }

    pub fn bound(&self) -> &MultiIndex {
        &self.bound
    }

    pub fn dim(&self) -> usize {
        self.bound.dim()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn get(&self, ordinal: usize) -> &MultiIndex {
        &self.elems[ordinal]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.elems.iter()
    }

    /// Ordinal of `alpha`, or `None` when it lies outside the box.
    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.dim() || alpha.iter().zip(&self.bound.0).any(|(a, n)| a > n) {
            return None;
        }
        let pos: usize = alpha.iter().zip(&self.strides).map(|(c, s)| c * s).sum();
        Some(self.lookup[pos])
    }

    /// Ordinal of a signed index, `None` if any component is negative or too large.
    pub fn index_of_signed(&self, alpha: &[i64]) -> Option<usize> {
        if alpha.len() != self.dim() {
            return None;
        }
        let mut pos = 0usize;
        for ((&a, &n), &s) in alpha.iter().zip(&self.bound.0).zip(&self.strides) {
            if a < 0 || a as usize > n {
                return None;
            }
            pos += a as usize * s;
        }
        Some(self.lookup[pos])
    }

    pub fn contains_box(&self, other: &MultiIndexBox) -> bool {
        other.bound.le(&self.bound)
    }
}

/// Enumerates `Λ_n` in graded-lexicographic order.
pub fn enumerate_box(n: &MultiIndex) -> MultiIndexBox {
    MultiIndexBox::new(n.clone())
}

/// One serialized coefficient: `{alpha, re, im}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub alpha: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// A complex polynomial with coefficients over a box `Λ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPoly {
    bx: Arc<MultiIndexBox>,
    coeffs: Vec<C64>,
}

impl TruncatedPoly {
    pub fn zeros(bx: Arc<MultiIndexBox>) -> Self {
        let coeffs = vec![C64::new(0.0, 0.0); bx.len()];
        Self { bx, coeffs }
    }

    pub fn from_coeffs(bx: Arc<MultiIndexBox>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != bx.len() {
            return Err(Error::BoxMismatch(format!(
                "{} coefficients for a box of size {}",
                coeffs.len(),
                bx.len()
            )));
        }
        Ok(Self { bx, coeffs })
    }

    pub fn from_fn(bx: Arc<MultiIndexBox>, mut f: impl FnMut(&MultiIndex) -> C64) -> Self {
        let coeffs = bx.iter().map(&mut f).collect();
        Self { bx, coeffs }
    }

    /// Builds a polynomial over `Λ_bound` from `(alpha, value)` pairs.
    pub fn from_pairs(bound: &MultiIndex, pairs: &[(&[usize], C64)]) -> Result<Self> {
        let mut p = Self::zeros(Arc::new(MultiIndexBox::new(bound.clone())));
        for (alpha, v) in pairs {
            p.add_to(alpha, *v)?;
        }
        Ok(p)
    }

    /// Builds a polynomial from serialized terms; the box is `bound` if given,
    /// otherwise the smallest box containing every listed index.
    pub fn from_terms(d: usize, terms: &[Term], bound: Option<&MultiIndex>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.alpha.len() != d) {
            return Err(Error::InvalidInput(format!(
                "term {:?} does not have {d} components",
                t.alpha
            )));
        }
        let bound = match bound {
            Some(b) => b.clone(),
            None => {
                let mut b = vec![0usize; d];
                for t in terms {
                    for (bj, &a) in b.iter_mut().zip(&t.alpha) {
                        *bj = (*bj).max(a);
                    }
                }
                MultiIndex::new(b)?
            }
        };
        let mut p = Self::zeros(Arc::new(MultiIndexBox::new(bound)));
        for t in terms {
            p.add_to(&t.alpha, c64(t.re, t.im))?;
        }
        Ok(p)
    }

    /// Nonzero coefficients in box order.
    pub fn to_terms(&self) -> Vec<Term> {
        self.bx
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(a, c)| Term { alpha: a.0.clone(), re: c.re, im: c.im })
            .collect()
    }

    pub fn bx(&self) -> &Arc<MultiIndexBox> {
        &self.bx
    }

    pub fn bound(&self) -> &MultiIndex {
        self.bx.bound()
    }

    pub fn dim(&self) -> usize {
        self.bx.dim()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Coefficient of `z^alpha`; zero outside the box.
    pub fn coeff(&self, alpha: &[usize]) -> C64 {
        self.bx.index_of(alpha).map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn add_to(&mut self, alpha: &[usize], v: C64) -> Result<()> {
        let i = self.bx.index_of(alpha).ok_or_else(|| {
            Error::BoxMismatch(format!("index {alpha:?} outside box {}", self.bound()))
        })?;
        self.coeffs[i] += v;
        Ok(())
    }

    /// Re-indexes into a larger box, padding with zeros.
    pub fn embed(&self, bx: Arc<MultiIndexBox>) -> Result<Self> {
        if !bx.contains_box(&self.bx) {
            return Err(Error::BoxMismatch(format!(
                "cannot embed box {} into {}",
                self.bound(),
                bx.bound()
            )));
        }
        let mut out = Self::zeros(bx);
        for (a, c) in self.bx.iter().zip(&self.coeffs) {
            out.add_to(&a.0, *c)?;
        }
        Ok(out)
    }

    /// Keeps only the coefficients whose index lies in `bx`.
    pub fn restrict(&self, bx: Arc<MultiIndexBox>) -> Self {
        Self::from_fn(bx, |a| self.coeff(&a.0))
    }

    /// Coefficient 2-norm (the `H²(T^d)` norm).
    pub fn norm2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { bx: self.bx.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &TruncatedPoly) -> f64 {
        let mut m: f64 = 0.0;
        for (a, c) in self.bx.iter().zip(&self.coeffs) {
            m = m.max((c - other.coeff(&a.0)).norm());
        }
        for (a, c) in other.bx.iter().zip(&other.coeffs) {
            if self.bx.index_of(&a.0).is_none() {
                m = m.max(c.norm());
            }
        }
        m
    }

    /// Per-variable degree (largest exponent with a coefficient above `tol`).
    pub fn multi_degree(&self, tol: f64) -> Vec<usize> {
        let mut deg = vec![0; self.dim()];
        for (a, c) in self.bx.iter().zip(&self.coeffs) {
            if c.norm() > tol {
                for (dj, &aj) in deg.iter_mut().zip(&a.0) {
                    *dj = (*dj).max(aj);
                }
            }
        }
        deg
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        eval_poly(self, z)
    }

    pub fn reflect(&self) -> Self {
        reflect(self, self.bound()).expect("a polynomial reflects within its own box")
    }
}

impl Serialize for TruncatedPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_terms().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedPoly {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<Term>::deserialize(de)?;
        let d = terms
            .first()
            .map(|t| t.alpha.len())
            .ok_or_else(|| serde::de::Error::custom("cannot infer dimension from an empty term list"))?;
        TruncatedPoly::from_terms(d, &terms, None).map_err(serde::de::Error::custom)
    }
}

/// Taylor/Fourier coefficients of a function over a box, with an estimate of
/// the aliasing error incurred when they were sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    pub coeffs: TruncatedPoly,
    pub trunc_error_estimate: f64,
}

impl FourierTable {
    pub fn exact(coeffs: TruncatedPoly) -> Self {
        Self { coeffs, trunc_error_estimate: 0.0 }
    }

    pub fn bx(&self) -> &Arc<MultiIndexBox> {
        self.coeffs.bx()
    }

    pub fn bound(&self) -> &MultiIndex {
        self.coeffs.bound()
    }

    pub fn get(&self, alpha: &[usize]) -> C64 {
        self.coeffs.coeff(alpha)
    }

    pub fn get_signed(&self, alpha: &[i64]) -> Option<C64> {
        self.coeffs.bx().index_of_signed(alpha).map(|i| self.coeffs.coeffs()[i])
    }
}

/// Product of two polynomials truncated to `out_box`.
pub fn poly_mul_trunc(
    p: &TruncatedPoly,
    q: &TruncatedPoly,
    out_box: &Arc<MultiIndexBox>,
) -> Result<TruncatedPoly> {
    if !out_box.contains_box(p.bx()) || !out_box.contains_box(q.bx()) {
        return Err(Error::BoxMismatch(format!(
            "factors over {} and {} do not fit in {}",
            p.bound(),
            q.bound(),
            out_box.bound()
        )));
    }
    let mut out = TruncatedPoly::zeros(out_box.clone());
    let mut sum = vec![0usize; p.dim()];
    for (a, pa) in p.bx.iter().zip(&p.coeffs) {
        if pa.re == 0.0 && pa.im == 0.0 {
            continue;
        }
        for (b, qb) in q.bx.iter().zip(&q.coeffs) {
            for ((s, x), y) in sum.iter_mut().zip(&a.0).zip(&b.0) {
                *s = x + y;
            }
            if let Some(i) = out_box.index_of(&sum) {
                out.coeffs[i] += pa * qb;
            }
        }
    }
    Ok(out)
}

/// Reflection `p*(z) = z^n conj(p(1/z̄))`, i.e. `(p*)_β = conj(p_{n−β})`.
///
/// `p` may live on any box contained in `Λ_n`; the result lives on `Λ_n`.
pub fn reflect(p: &TruncatedPoly, n: &MultiIndex) -> Result<TruncatedPoly> {
    let bx = if p.bound() == n { p.bx.clone() } else { Arc::new(MultiIndexBox::new(n.clone())) };
    if !bx.contains_box(p.bx()) {
        return Err(Error::BoxMismatch(format!(
            "cannot reflect a polynomial over {} with respect to {n}",
            p.bound()
        )));
    }
    let nn = n.components();
    let mut rev = vec![0usize; n.dim()];
    Ok(TruncatedPoly::from_fn(bx, |beta| {
        for ((r, &nj), &bj) in rev.iter_mut().zip(nn).zip(&beta.0) {
            *r = nj - bj;
        }
        p.coeff(&rev).conj()
    }))
}

/// Evaluates `p` at a point of `C^d`.
pub fn eval_poly(p: &TruncatedPoly, z: &[C64]) -> C64 {
    assert_eq!(z.len(), p.dim(), "point dimension must match the polynomial");
    let powers: Vec<Vec<C64>> = z
        .iter()
        .zip(p.bound().components())
        .map(|(&zj, &nj)| {
            let mut v = Vec::with_capacity(nj + 1);
            let mut acc = C64::new(1.0, 0.0);
            for _ in 0..=nj {
                v.push(acc);
                acc *= zj;
            }
            v
        })
        .collect();
    p.bx.iter()
        .zip(&p.coeffs)
        .map(|(a, c)| a.0.iter().zip(&powers).fold(*c, |acc, (&aj, pw)| acc * pw[aj]))
        .sum()
}

/// Truncated power-series reciprocal `1/p` over the box of `p`.
pub fn series_inverse(p: &TruncatedPoly) -> Result<TruncatedPoly> {
    let p0 = p.coeffs[0];
    if p0.norm() < POLE_TOL {
        return Err(Error::DegeneratePole { modulus: p0.norm(), tol: POLE_TOL });
    }
    let bx = p.bx.clone();
    let mut h = TruncatedPoly::zeros(bx.clone());
    let inv0 = p0.inv();
    let mut diff = vec![0usize; p.dim()];
    // Graded order guarantees alpha - beta precedes alpha.
    for (i, alpha) in bx.iter().enumerate() {
        let mut acc = if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        for (k, beta) in bx.iter().enumerate().skip(1).take_while(|(_, b)| b.degree() <= alpha.degree()) {
            if !beta.le(alpha) {
                continue;
            }
            let pb = p.coeffs[k];
            if pb.re == 0.0 && pb.im == 0.0 {
                continue;
            }
            for ((d, &a), &b) in diff.iter_mut().zip(&alpha.0).zip(&beta.0) {
                *d = a - b;
            }
            acc -= pb * h.coeffs[bx.index_of(&diff).unwrap()];
        }
        h.coeffs[i] = acc * inv0;
    }
    Ok(h)
}

/// Truncated quotient `num/den` over `bx`.
pub fn series_div(num: &TruncatedPoly, den: &TruncatedPoly, bx: &Arc<MultiIndexBox>) -> Result<TruncatedPoly> {
    let den_inv = series_inverse(&den.restrict(bx.clone()))?;
    poly_mul_trunc(&num.restrict(bx.clone()), &den_inv, bx)
}

/// Taylor coefficients of `g = (1+f)/(1−f)` over the box of `f`.
pub fn cayley_forward(f: &FourierTable) -> Result<FourierTable> {
    let mut one_minus = f.coeffs.scale(c64(-1.0, 0.0));
    one_minus.coeffs[0] += 1.0;
    let mut g = series_inverse(&one_minus)?.scale(c64(2.0, 0.0));
    g.coeffs[0] -= 1.0;
    Ok(FourierTable { coeffs: g, trunc_error_estimate: f.trunc_error_estimate })
}

/// Taylor coefficients of `g = (φ−1)/(φ+1)` over the box of `φ`.
pub fn cayley_inverse(phi: &FourierTable) -> Result<FourierTable> {
    let mut one_plus = phi.coeffs.clone();
    one_plus.coeffs[0] += 1.0;
    let mut g = series_inverse(&one_plus)?.scale(c64(-2.0, 0.0));
    g.coeffs[0] += 1.0;
    Ok(FourierTable { coeffs: g, trunc_error_estimate: phi.trunc_error_estimate })
}

/// Default per-axis grid for Taylor extraction at radius `r`: enough points
/// that the aliased tail `r^K` falls below double precision.
pub fn default_grid(bound: &MultiIndex, radius: f64) -> Vec<usize> {
    let extra = (53.0 * 2f64.ln() / (1.0 / radius).ln()).ceil() as usize;
    bound.components().iter().map(|&n| n + 1 + extra).collect()
}

/// Samples of `f` on the tensor grid `z_j = r·exp(2πi k_j / K_j)`, last axis fastest.
pub fn sample_torus_grid(
    f: &(dyn Fn(&[C64]) -> C64 + Sync),
    radius: f64,
    grid: &[usize],
) -> Vec<C64> {
    let total: usize = grid.iter().product();
    let d = grid.len();
    let roots: Vec<Vec<C64>> = grid
        .iter()
        .map(|&k| (0..k).map(|i| C64::from_polar(radius, 2.0 * PI * i as f64 / k as f64)).collect())
        .collect();
    let mut idx = vec![0usize; d];
    let mut z = vec![C64::new(0.0, 0.0); d];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        for j in 0..d {
            z[j] = roots[j][idx[j]];
        }
        out.push(f(&z));
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < grid[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    out
}

/// Forward DFT along every axis of a row-major tensor, in place.
fn tensor_fft(data: &mut [C64], grid: &[usize]) {
    let mut planner = FftPlanner::<f64>::new();
    let d = grid.len();
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * grid[j + 1];
    }
    let total = data.len();
    for axis in 0..d {
        let len = grid[axis];
        let stride = strides[axis];
        let fft = planner.plan_fft_forward(len);
        let mut line = vec![C64::new(0.0, 0.0); len];
        for start in 0..total {
            if !(start / stride).is_multiple_of(len) {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[start + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[start + k * stride] = *v;
            }
        }
    }
}

/// Coefficients of a polynomial (or of the aliased Taylor series) from torus
/// samples taken by [`sample_torus_grid`].
pub(crate) fn coefficients_from_samples(
    samples: &[C64],
    bound: &MultiIndex,
    radius: f64,
    grid: &[usize],
) -> TruncatedPoly {
    let mut data = samples.to_vec();
    tensor_fft(&mut data, grid);
    let total = data.len() as f64;
    let d = grid.len();
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * grid[j + 1];
    }
    let bx = Arc::new(MultiIndexBox::new(bound.clone()));
    TruncatedPoly::from_fn(bx, |alpha| {
        let pos: usize = alpha.0.iter().zip(&strides).map(|(a, s)| a * s).sum();
        data[pos] / total * radius.powi(-(alpha.degree() as i32))
    })
}

/// Taylor coefficients over `Λ_bound` of a function holomorphic on a
/// neighbourhood of the closed polydisk of radius `radius`.
pub fn taylor_from_evaluator(
    f: &(dyn Fn(&[C64]) -> C64 + Sync),
    bound: &MultiIndex,
    radius: f64,
    grid: &[usize],
) -> Result<FourierTable> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::Domain(format!("sampling radius {radius} outside (0, 1]")));
    }
    if grid.len() != bound.dim() {
        return Err(Error::InvalidInput("grid dimension differs from the box".into()));
    }
    for (axis, (&k, &n)) in grid.iter().zip(bound.components()).enumerate() {
        if k <= n {
            return Err(Error::GridTooSmall { axis, grid: k, degree: n });
        }
    }
    let samples = sample_torus_grid(f, radius, grid);
    let sup = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let alias: f64 = grid
        .iter()
        .map(|&k| {
            let rk = radius.powi(k as i32);
            if rk >= 1.0 { f64::INFINITY } else { rk / (1.0 - rk) }
        })
        .sum();
    let coeffs = coefficients_from_samples(&samples, bound, radius, grid);
    Ok(FourierTable { coeffs, trunc_error_estimate: sup * alias })
}

/// [`taylor_from_evaluator`] with the default radius and grid.
pub fn taylor_default(f: &(dyn Fn(&[C64]) -> C64 + Sync), bound: &MultiIndex) -> Result<FourierTable> {
    taylor_from_evaluator(f, bound, DEFAULT_RADIUS, &default_grid(bound, DEFAULT_RADIUS))
}

/// A trigonometric polynomial on `T^d`, indexed by signed multi-indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    coeffs: BTreeMap<Vec<i64>, C64>,
}

/// Densities on the torus share the trigonometric polynomial representation.
pub type TrigDensity = TrigPoly;

impl TrigPoly {
    pub fn new(dim: usize) -> Self {
        Self { dim, coeffs: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, k: Vec<i64>, v: C64) {
        assert_eq!(k.len(), self.dim, "frequency dimension must match");
        *self.coeffs.entry(k).or_insert(C64::new(0.0, 0.0)) += v;
    }

    pub fn get(&self, k: &[i64]) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &C64)> {
        self.coeffs.iter()
    }

    /// `L²(T^d)` norm with respect to normalized Haar measure.
    pub fn norm2(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `ζ^{shift} · p(ζ)` for an analytic polynomial `p`.
    pub fn from_analytic(p: &TruncatedPoly, shift: &[i64]) -> Self {
        let mut t = Self::new(p.dim());
        for (a, c) in p.bx().iter().zip(p.coeffs()) {
            if c.re != 0.0 || c.im != 0.0 {
                t.insert(a.components().iter().zip(shift).map(|(&x, &s)| x as i64 + s).collect(), *c);
            }
        }
        t
    }

    /// `ζ^{shift} · conj(p(ζ))` for an analytic polynomial `p`.
    pub fn from_conj_analytic(p: &TruncatedPoly, shift: &[i64]) -> Self {
        let mut t = Self::new(p.dim());
        for (a, c) in p.bx().iter().zip(p.coeffs()) {
            if c.re != 0.0 || c.im != 0.0 {
                t.insert(a.components().iter().zip(shift).map(|(&x, &s)| s - x as i64).collect(), c.conj());
            }
        }
        t
    }

    pub fn eval(&self, zeta: &[C64]) -> C64 {
        self.coeffs
            .iter()
            .map(|(k, c)| k.iter().zip(zeta).fold(*c, |acc, (&kj, zj)| acc * zj.powi(kj as i32)))
            .sum()
    }

    /// Whether every frequency lies in `∏[−n_j, n_j]`.
    pub fn supported_in(&self, n: &MultiIndex) -> bool {
        self.coeffs
            .keys()
            .all(|k| k.iter().zip(n.components()).all(|(&kj, &nj)| kj.unsigned_abs() as usize <= nj))
    }
}

/// Outcome of the Korányi–Pukánszky moment test.
#[derive(Clone, Debug, PartialEq)]
pub struct KpReport {
    pub pass: bool,
    /// Mixed-sign indices whose coefficient modulus exceeds the tolerance.
    pub violations: Vec<(Vec<i64>, f64)>,
}

/// Checks that every coefficient at a mixed-sign index (some component
/// positive, some negative) has modulus at most `tol`.
pub fn kp_moment_check(rho: &TrigDensity, tol: f64) -> KpReport {
    let violations: Vec<_> = rho
        .iter()
        .filter(|(k, _)| k.iter().any(|&x| x > 0) && k.iter().any(|&x| x < 0))
        .filter(|(_, c)| c.norm() > tol)
        .map(|(k, c)| (k.clone(), c.norm()))
        .collect();
    KpReport { pass: violations.is_empty(), violations }
}

/// Deterministic low-discrepancy points in `[0,1)^dim` (Kronecker sequence on
/// the generalized golden ratio), shifted by `offset` modulo 1.
pub fn kronecker_points(count: usize, dim: usize, offset: &[f64]) -> Vec<Vec<f64>> {
    // root of x^{dim+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
    (1..=count)
        .map(|i| {
            alpha
                .iter()
                .enumerate()
                .map(|(j, a)| (0.5 + i as f64 * a + offset.get(j).copied().unwrap_or(0.0)).fract())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn poly(bound: &[usize], pairs: &[(&[usize], C64)]) -> TruncatedPoly {
        TruncatedPoly::from_pairs(&mi(bound), pairs).unwrap()
    }

    const ONE: C64 = C64::new(1.0, 0.0);

    #[test]
    fn graded_lex_enumeration() {
        let b = enumerate_box(&mi(&[1, 1]));
        let got: Vec<_> = b.iter().map(|a| a.components().to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);

        let b = enumerate_box(&mi(&[2]));
        let got: Vec<_> = b.iter().map(|a| a.components()[0]).collect();
        assert_eq!(got, vec![0, 1, 2]);

        let b = enumerate_box(&mi(&[0, 0, 0]));
        assert_eq!(b.len(), 1);
        assert_eq!(b.get(0).components(), &[0, 0, 0]);
    }

    #[test]
    fn box_lookup_is_a_bijection() {
        let b = enumerate_box(&mi(&[2, 3, 1]));
        assert_eq!(b.len(), 3 * 4 * 2);
        for (i, a) in b.iter().enumerate() {
            assert_eq!(b.index_of(a.components()), Some(i));
            assert!(a.le(b.bound()));
        }
        assert_eq!(b.index_of(&[3, 0, 0]), None);
        assert_eq!(b.index_of_signed(&[-1, 0, 0]), None);
    }

    #[test]
    fn empty_multi_index_is_rejected() {
        assert!(MultiIndex::new(vec![]).is_err());
    }

    #[test]
    fn truncated_products() {
        let p = poly(&[1], &[(&[0], ONE), (&[1], ONE)]);
        let q = poly(&[1], &[(&[0], ONE), (&[1], -ONE)]);
        let out = Arc::new(enumerate_box(&mi(&[2])));
        let r = poly_mul_trunc(&p, &q, &out).unwrap();
        assert_eq!(r.coeffs(), &[ONE, C64::new(0.0, 0.0), -ONE]);

        let z = poly(&[1, 0], &[(&[1, 0], ONE)]);
        let w = poly(&[0, 1], &[(&[0, 1], ONE)]);
        let out = Arc::new(enumerate_box(&mi(&[1, 1])));
        let zw = poly_mul_trunc(&z, &w, &out).unwrap();
        assert_eq!(zw.coeff(&[1, 1]), ONE);
        assert_abs_diff_eq!(zw.norm2(), 1.0);

        let out = Arc::new(enumerate_box(&mi(&[1])));
        let sq = poly_mul_trunc(&p, &p, &out).unwrap();
        assert_eq!(sq.coeffs(), &[ONE, c64(2.0, 0.0)]);
    }

    #[test]
    fn product_rejects_oversized_factors() {
        let p = poly(&[2], &[(&[2], ONE)]);
        let out = Arc::new(enumerate_box(&mi(&[1])));
        assert!(matches!(poly_mul_trunc(&p, &p, &out), Err(Error::BoxMismatch(_))));
    }

    #[test]
    fn reflection_examples() {
        let p = poly(&[1], &[(&[0], ONE), (&[1], c64(2.0, 0.0))]);
        let r = p.reflect();
        assert_eq!(r.coeffs(), &[c64(2.0, 0.0), ONE]);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = poly(
            &[1, 1],
            &[(&[1, 0], c64(0.5, 0.0)), (&[0, 1], c64(0.5, 0.0)), (&[1, 1], c64(s, 0.0))],
        );
        let r = p.reflect();
        assert_eq!(r.coeff(&[0, 0]), c64(s, 0.0));
        assert_eq!(r.coeff(&[1, 0]), c64(0.5, 0.0));
        assert_eq!(r.coeff(&[0, 1]), c64(0.5, 0.0));
        assert_eq!(r.coeff(&[1, 1]), C64::new(0.0, 0.0));

        let c = poly(&[0], &[(&[0], c64(1.0, 3.0))]);
        assert_eq!(c.reflect().coeffs(), &[c64(1.0, -3.0)]);
    }

    #[test]
    fn reflection_into_larger_box() {
        let p = poly(&[1], &[(&[0], ONE)]);
        let r = reflect(&p, &mi(&[3])).unwrap();
        assert_eq!(r.coeff(&[3]), ONE);
        assert!(reflect(&p, &mi(&[0])).is_err());
    }

    #[test]
    fn cayley_forward_bidisk_formula() {
        // c_11(g) = 2c + 4ab when c_00 = 0
        let (a, b, c) = (c64(0.3, -0.1), c64(0.2, 0.4), c64(-0.25, 0.05));
        let f = FourierTable::exact(poly(&[1, 1], &[(&[1, 0], a), (&[0, 1], b), (&[1, 1], c)]));
        let g = cayley_forward(&f).unwrap();
        assert_abs_diff_eq!((g.get(&[1, 1]) - (2.0 * c + 4.0 * a * b)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((g.get(&[0, 0]) - ONE).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cayley_forward_general_bidisk_formula() {
        // c_11(g) = 2((1−c00)c11 + 2 c10 c01)/(1−c00)^3
        let (c00, a, b, c) = (c64(0.2, 0.1), c64(0.3, -0.1), c64(0.2, 0.4), c64(-0.25, 0.05));
        let f = FourierTable::exact(poly(
            &[1, 1],
            &[(&[0, 0], c00), (&[1, 0], a), (&[0, 1], b), (&[1, 1], c)],
        ));
        let g = cayley_forward(&f).unwrap();
        let om = ONE - c00;
        let expect = 2.0 * (om * c + 2.0 * a * b) / (om * om * om);
        assert_abs_diff_eq!((g.get(&[1, 1]) - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cayley_forward_trivial_and_geometric() {
        let zero = FourierTable::exact(TruncatedPoly::zeros(Arc::new(enumerate_box(&mi(&[2, 1])))));
        let g = cayley_forward(&zero).unwrap();
        assert_eq!(g.get(&[0, 0]), ONE);
        assert!(g.coeffs.coeffs()[1..].iter().all(|c| c.norm() == 0.0));

        // (1 + z/2)/(1 − z/2) = 1 + z + z²/2 + …
        let f = FourierTable::exact(poly(&[2], &[(&[1], c64(0.5, 0.0))]));
        let g = cayley_forward(&f).unwrap();
        for (got, want) in g.coeffs.coeffs().iter().zip([1.0, 1.0, 0.5]) {
            assert_abs_diff_eq!((got - c64(want, 0.0)).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cayley_forward_pole() {
        let f = FourierTable::exact(poly(&[1], &[(&[0], ONE)]));
        assert!(matches!(cayley_forward(&f), Err(Error::DegeneratePole { .. })));
    }

    #[test]
    fn cayley_inverse_examples() {
        let one = FourierTable::exact(poly(&[1, 1], &[(&[0, 0], ONE)]));
        let g = cayley_inverse(&one).unwrap();
        assert!(g.coeffs.coeffs().iter().all(|c| c.norm() < 1e-15));

        // zw/(2 + zw) = zw/2 − …
        let phi = FourierTable::exact(poly(&[1, 1], &[(&[0, 0], ONE), (&[1, 1], ONE)]));
        let g = cayley_inverse(&phi).unwrap();
        assert_abs_diff_eq!((g.get(&[1, 1]) - c64(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(&[0, 0]).norm(), 0.0, epsilon = 1e-15);

        let bad = FourierTable::exact(poly(&[1], &[(&[0], -ONE)]));
        assert!(matches!(cayley_inverse(&bad), Err(Error::DegeneratePole { .. })));
    }

    #[test]
    fn taylor_extraction_examples() {
        let t = taylor_from_evaluator(&|z: &[C64]| z[0], &mi(&[2]), 0.5, &[8]).unwrap();
        for (got, want) in t.coeffs.coeffs().iter().zip([0.0, 1.0, 0.0]) {
            assert_abs_diff_eq!((got - c64(want, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }

        let t = taylor_default(&|z: &[C64]| (z[0] + z[1]) * 0.5, &mi(&[2, 2])).unwrap();
        for (a, c) in t.bx().iter().zip(t.coeffs.coeffs()) {
            let want = if a.components() == [1, 0] || a.components() == [0, 1] { 0.5 } else { 0.0 };
            assert_abs_diff_eq!((c - c64(want, 0.0)).norm(), 0.0, epsilon = 1e-10);
        }

        let t = taylor_default(&|z: &[C64]| (ONE - z[0] * 0.5).inv(), &mi(&[3])).unwrap();
        for (got, want) in t.coeffs.coeffs().iter().zip([1.0, 0.5, 0.25, 0.125]) {
            assert_abs_diff_eq!((got - c64(want, 0.0)).norm(), 0.0, epsilon = 1e-8);
        }
        assert!(t.trunc_error_estimate < 1e-14);
    }

    #[test]
    fn taylor_extraction_rejects_small_grid() {
        let err = taylor_from_evaluator(&|z: &[C64]| z[0], &mi(&[3]), 0.5, &[3]).unwrap_err();
        assert_eq!(err, Error::GridTooSmall { axis: 0, grid: 3, degree: 3 });
    }

    #[test]
    fn kp_examples() {
        let mut one = TrigDensity::new(2);
        one.insert(vec![0, 0], ONE);
        assert!(kp_moment_check(&one, 1e-12).pass);

        let mut rho = TrigDensity::new(2);
        rho.insert(vec![0, 0], ONE);
        rho.insert(vec![1, 1], c64(0.5, 0.0));
        rho.insert(vec![-1, -1], c64(0.5, 0.0));
        assert!(kp_moment_check(&rho, 1e-12).pass);

        rho.insert(vec![1, -1], c64(0.3, 0.0));
        let rep = kp_moment_check(&rho, 1e-12);
        assert!(!rep.pass);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].0, vec![1, -1]);
    }

    #[test]
    fn evaluation_examples() {
        let p = poly(&[1, 1], &[(&[0, 0], ONE), (&[1, 1], ONE)]);
        assert_abs_diff_eq!((p.eval(&[c64(0.5, 0.0), c64(0.5, 0.0)]) - c64(1.25, 0.0)).norm(), 0.0);

        let zero = TruncatedPoly::zeros(Arc::new(enumerate_box(&mi(&[2, 2]))));
        assert_eq!(zero.eval(&[c64(0.3, 0.1), c64(-2.0, 1.0)]), C64::new(0.0, 0.0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = poly(
            &[1, 1],
            &[(&[1, 0], c64(0.5, 0.0)), (&[0, 1], c64(0.5, 0.0)), (&[1, 1], c64(s, 0.0))],
        );
        assert_abs_diff_eq!((p.eval(&[ONE, ONE]) - c64(1.0 + s, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn terms_roundtrip_and_zero_omission() {
        let p = poly(&[2, 1], &[(&[0, 0], ONE), (&[2, 1], c64(0.0, -1.5))]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"[{"alpha":[0,0],"re":1.0,"im":0.0},{"alpha":[2,1],"re":0.0,"im":-1.5}]"#);
        let back: TruncatedPoly = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<TruncatedPoly>("[]").is_err());
        assert!(serde_json::from_str::<TruncatedPoly>(r#"[{"alpha":[0],"re":1,"im":0,"x":1}]"#).is_err());
    }

    #[test]
    fn series_division_recovers_rational_function() {
        // (1 + z w)/(1 − z/3) over Λ_(3,2)
        let bx = Arc::new(enumerate_box(&mi(&[3, 2])));
        let num = poly(&[1, 1], &[(&[0, 0], ONE), (&[1, 1], ONE)]);
        let den = poly(&[1, 0], &[(&[0, 0], ONE), (&[1, 0], c64(-1.0 / 3.0, 0.0))]);
        let q = series_div(&num, &den, &bx).unwrap();
        for (a, c) in bx.iter().zip(q.coeffs()) {
            let (i, j) = (a.components()[0] as i32, a.components()[1]);
            let want = match j {
                0 => 3f64.powi(-i),
                1 if i >= 1 => 3f64.powi(-(i - 1)),
                _ => 0.0,
            };
            assert_abs_diff_eq!((c - c64(want, 0.0)).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn kronecker_points_are_in_unit_cube() {
        let pts = kronecker_points(100, 3, &[0.1, 0.2, 0.3]);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().flatten().all(|&x| (0.0..1.0).contains(&x)));
    }
}
