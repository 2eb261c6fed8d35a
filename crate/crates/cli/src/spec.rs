//! Problem descriptions read from JSON or assembled from flags.

use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use polydisk::polyseries::{MultiIndex, Term, TruncatedPoly};
use polydisk::{c64, Complex64 as C64};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// A complex number as `{re, im}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl From<Cplx> for C64 {
    fn from(c: Cplx) -> Self {
        c64(c.re, c.im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinName {
    /// Mean of the coordinates.
    HalfSum,
    /// `z^alpha`.
    Monomial,
    /// Product of one-variable Blaschke factors.
    BlaschkeTensor,
    /// `(p − 1)/(p + 1)` for a polynomial `p` with positive real part.
    CayleyOfPoly,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<usize>>,
    /// One zero per variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<Cplx>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Poly { coeffs: Vec<Term> },
    Builtin {
        name: BuiltinName,
        #[serde(default)]
        params: BuiltinParams,
    },
}

/// Tolerance overrides; absent fields keep library defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ztol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ftol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vtol: Option<f64>,
}

impl Tolerances {
    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        let mut map = match serde_json::to_value(&*self)? {
            serde_json::Value::Object(m) => m,
            _ => unreachable!("tolerances serialize to an object"),
        };
        for p in pairs {
            let (k, v) = p.split_once('=').with_context(|| format!("--tol expects key=value, got {p:?}"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("tolerance {k:?}: {v:?} is not a number"))?;
            map.insert(k.trim().to_string(), serde_json::json!(v));
        }
        *self = serde_json::from_value(serde_json::Value::Object(map)).context("invalid --tol override")?;
        Ok(())
    }
}

/// The four Taylor coefficients of a bidisk function through `zw`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct K11Data {
    pub c00: Cplx,
    pub c01: Cplx,
    pub c10: Cplx,
    pub c11: Cplx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub version: u32,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default)]
    pub schedule: Vec<MultiIndex>,
    #[serde(default)]
    pub options: Tolerances,
    /// Herglotz-side Taylor data for `cf-interp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cf_data: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k11: Option<K11Data>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<usize>>,
}

impl ProblemSpec {
    pub fn new(d: usize) -> Self {
        Self {
            version: SCHEMA_VERSION,
            d,
            function: None,
            schedule: Vec::new(),
            options: Tolerances::default(),
            cf_data: None,
            k11: None,
            rho: None,
            kappas: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.version == SCHEMA_VERSION, "unsupported schema version {} (expected {SCHEMA_VERSION})", self.version);
        ensure!(self.d >= 1, "dimension must be at least 1");
        for n in &self.schedule {
            ensure!(n.dim() == self.d, "schedule entry {n} has dimension {} but d = {}", n.dim(), self.d);
        }
        Ok(())
    }

    pub fn symbol(&self) -> Result<Symbol> {
        match &self.function {
            None => bail!("the problem has no function"),
            Some(f) => Symbol::new(self.d, f),
        }
    }
}

pub type Eval = Arc<dyn Fn(&[C64]) -> C64 + Send + Sync>;

/// A symbol ready for evaluation.
pub struct Symbol {
    pub d: usize,
    pub eval: Eval,
}

fn poly_from_terms(d: usize, terms: &[Term]) -> Result<TruncatedPoly> {
    ensure!(!terms.is_empty(), "empty coefficient list");
    Ok(TruncatedPoly::from_terms(d, terms, None)?)
}

impl Symbol {
    pub fn new(d: usize, f: &FunctionSpec) -> Result<Self> {
        let eval: Eval = match f {
            FunctionSpec::Poly { coeffs } => {
                let p = poly_from_terms(d, coeffs)?;
                Arc::new(move |z| p.eval(z))
            }
            FunctionSpec::Builtin { name, params } => match name {
                BuiltinName::HalfSum => {
                    let w = 1.0 / d as f64;
                    Arc::new(move |z| z.iter().sum::<C64>() * w)
                }
                BuiltinName::Monomial => {
                    let alpha = params.alpha.clone().unwrap_or_else(|| vec![1; d]);
                    ensure!(alpha.len() == d, "monomial exponent has {} entries, d = {d}", alpha.len());
                    Arc::new(move |z| z.iter().zip(&alpha).map(|(x, &k)| x.powi(k as i32)).product())
                }
                BuiltinName::BlaschkeTensor => {
                    let zeros: Vec<C64> = params.zeros.as_ref().context("blaschke_tensor needs params.zeros")?
                        .iter()
                        .map(|&c| c.into())
                        .collect();
                    ensure!(zeros.len() == d, "blaschke_tensor needs one zero per variable");
                    ensure!(zeros.iter().all(|a| a.norm() < 1.0), "Blaschke zeros must lie in the open disk");
                    Arc::new(move |z| z.iter().zip(&zeros).map(|(x, a)| (x - a) / (1.0 - a.conj() * x)).product())
                }
                BuiltinName::CayleyOfPoly => {
                    let terms = params.coeffs.as_ref().context("cayley_of_poly needs params.coeffs")?;
                    let p = poly_from_terms(d, terms)?;
                    Arc::new(move |z| {
                        let v = p.eval(z);
                        (v - 1.0) / (v + 1.0)
                    })
                }
            },
        };
        Ok(Self { d, eval })
    }
}

/// Parses `1,2` or `(1,2)` into a multi-index.
pub fn parse_index(s: &str) -> std::result::Result<MultiIndex, String> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let v: std::result::Result<Vec<usize>, _> = t.split(',').map(|x| x.trim().parse::<usize>()).collect();
    let v = v.map_err(|e| format!("bad multi-index {s:?}: {e}"))?;
    MultiIndex::new(v).map_err(|e| e.to_string())
}

/// Parses `re,im` into a complex number.
pub fn parse_complex(s: &str) -> std::result::Result<Cplx, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re = re.trim().parse::<f64>().map_err(|e| format!("bad real part in {s:?}: {e}"))?;
    let im = im.trim().parse::<f64>().map_err(|e| format!("bad imaginary part in {s:?}: {e}"))?;
    Ok(Cplx { re, im })
}
