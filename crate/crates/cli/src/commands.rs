//! Subcommand bodies. Each returns a [`RunReport`] and, where the command has
//! a tabular form, CSV text.

use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use polydisk::cf_interp::{
    agler_feasibility, build_realization, eval_realization, realization_to_rational, verify_interpolant, CfData,
    FeasibilityOptions, Normalization, UTOL,
};
use polydisk::k11::{
    automorphism_transform, k11_check, k11_construct, mobius_from_c00, K11Point, K11Verdict,
};
use polydisk::pade::{
    approximation_error, detect_rational_inner, pade_step, pfister_diagnostics, pfister_sequence, sup_estimate,
    PadeOptions, PadeReport,
};
use polydisk::polyseries::{
    cayley_forward, default_grid, taylor_default, taylor_from_evaluator, MultiIndex, TruncatedPoly,
};
use polydisk::{c64, Complex64 as C64, Error};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::spec::{Cplx, ProblemSpec, Symbol, SCHEMA_VERSION};

fn cx(c: C64) -> Cplx {
    Cplx { re: c.re, im: c.im }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Infeasible,
    Undecided,
    NotMember,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub spec: ProblemSpec,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub wall_time_s: f64,
    pub steps: Vec<Value>,
}

pub struct Outcome {
    pub report: RunReport,
    pub csv: Option<String>,
}

fn finish(
    command: &str,
    spec: &ProblemSpec,
    seed: u64,
    started: Instant,
    status: Status,
    message: Option<String>,
    steps: Vec<Value>,
) -> RunReport {
    RunReport {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        spec: spec.clone(),
        status,
        message,
        wall_time_s: started.elapsed().as_secs_f64(),
        steps,
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn pade_options(spec: &ProblemSpec) -> PadeOptions {
    let t = &spec.options;
    let mut o = PadeOptions::default();
    if let Some(v) = t.mtol {
        o.mtol = v;
    }
    if let Some(v) = t.ztol {
        o.ztol = v;
    }
    if let Some(v) = t.qtol {
        o.qtol = v;
    }
    if let Some(v) = t.sup_tol {
        o.sup_tol = v;
    }
    o
}

fn nonempty_schedule(spec: &ProblemSpec) -> Result<&[MultiIndex]> {
    ensure!(!spec.schedule.is_empty(), "the schedule is empty; pass --n or a schedule in the spec");
    Ok(&spec.schedule)
}

fn step_at(sym: &Symbol, n: &MultiIndex, radius: f64, sup: f64, opts: &PadeOptions) -> Result<PadeReport> {
    let bound = n.scaled(2);
    let table = taylor_from_evaluator(&*sym.eval, &bound, radius, &default_grid(&bound, radius))?;
    Ok(pade_step(&table, &*sym.eval, n, Some(sup), opts)?)
}

#[derive(Serialize)]
struct TakagiStep<'a> {
    #[serde(flatten)]
    report: &'a PadeReport,
    rational_inner: bool,
}

pub fn cmd_takagi(spec: &ProblemSpec, seed: u64, radius: f64) -> Result<Outcome> {
    let started = Instant::now();
    ensure!(radius > 0.0 && radius < 1.0, "--radius must lie in (0, 1)");
    let sym = spec.symbol()?;
    let opts = pade_options(spec);
    let sup = sup_estimate(&*sym.eval, sym.d);
    let mut steps = Vec::new();
    for n in nonempty_schedule(spec)? {
        let report = step_at(&sym, n, radius, sup, &opts)?;
        let rational_inner = detect_rational_inner(&report, opts.qtol, &opts);
        steps.push(serde_json::to_value(TakagiStep { report: &report, rational_inner })?);
    }
    Ok(Outcome { report: finish("takagi", spec, seed, started, Status::Ok, None, steps), csv: None })
}

#[derive(Serialize)]
struct SweepRow {
    n: String,
    sigma: f64,
    remainder_l2: f64,
    bound_l2: f64,
    min_qstar_modulus: f64,
    sup_err: f64,
}

pub fn cmd_pade_sweep(spec: &ProblemSpec, seed: u64, compact: f64) -> Result<Outcome> {
    let started = Instant::now();
    ensure!(compact > 0.0 && compact < 1.0, "--compact must lie in (0, 1)");
    let sym = spec.symbol()?;
    let opts = pade_options(spec);
    let sup = sup_estimate(&*sym.eval, sym.d);
    let per_axis = if sym.d <= 2 { 64 } else { 16 };
    let mut rows = Vec::new();
    let mut steps = Vec::new();
    for n in nonempty_schedule(spec)? {
        let rep = step_at(&sym, n, 0.5, sup, &opts)?;
        let row = SweepRow {
            n: n.to_string(),
            sigma: rep.sigma,
            remainder_l2: rep.remainder_l2,
            bound_l2: rep.bound_l2,
            min_qstar_modulus: rep.pole_probe.min_modulus(),
            sup_err: approximation_error(&rep, &*sym.eval, compact, per_axis),
        };
        steps.push(json!({
            "n": n,
            "sigma": row.sigma,
            "multiplicity": rep.multiplicity,
            "remainder_l2": row.remainder_l2,
            "bound_l2": row.bound_l2,
            "orthogonal_bound_l2": rep.orthogonal_bound_l2,
            "min_qstar_modulus": row.min_qstar_modulus,
            "interior_zero_count": rep.pole_probe.interior_zero_count,
            "sup_err": row.sup_err,
            "taylor_match_depth": rep.taylor_match_depth,
        }));
        rows.push(row);
    }
    let csv = to_csv(&rows)?;
    Ok(Outcome { report: finish("pade-sweep", spec, seed, started, Status::Ok, None, steps), csv: Some(csv) })
}

fn cf_data_of(spec: &ProblemSpec) -> Result<(CfData, Normalization)> {
    if let Some(terms) = &spec.cf_data {
        ensure!(!terms.is_empty(), "cf_data is empty");
        let c = TruncatedPoly::from_terms(spec.d, terms, None)?;
        return Ok(CfData::normalize(&c)?);
    }
    let sym = spec.symbol().context("cf-interp needs cf_data or a function")?;
    let n = nonempty_schedule(spec)?.first().expect("nonempty");
    let table = taylor_default(&*sym.eval, n)?;
    let herglotz = cayley_forward(&table)?;
    Ok(CfData::normalize(&herglotz.coeffs)?)
}

#[derive(Serialize)]
struct CoeffRow {
    alpha: MultiIndex,
    target: Cplx,
    got: Cplx,
    err: f64,
}

pub const VERIFY_SAMPLES: usize = 4096;

pub fn cmd_cf_interp(spec: &ProblemSpec, seed: u64, max_iters: Option<usize>) -> Result<Outcome> {
    let started = Instant::now();
    let (data, normalization) = cf_data_of(spec)?;
    let mut fopts = FeasibilityOptions::default();
    if let Some(v) = spec.options.ftol {
        fopts.ftol = v;
    }
    if let Some(v) = spec.options.ptol {
        fopts.ptol = v;
    }
    if let Some(m) = max_iters {
        fopts.max_iters = m;
    }
    let utol = spec.options.utol.unwrap_or(UTOL);
    let vtol = spec.options.vtol.unwrap_or(1e-6);
    let outcome = agler_feasibility(&data, &fopts).and_then(|cert| {
        let r = build_realization(&cert, &data, utol)?;
        Ok((cert, r))
    });
    let (cert, real) = match outcome {
        Ok(v) => v,
        Err(
            e @ (Error::Infeasible(_)
            | Error::IterationLimit { .. }
            | Error::ConvergenceFailure { .. }
            | Error::U22NotZero(_)
            | Error::RankDefect(_)),
        ) => {
            let report = finish("cf-interp", spec, seed, started, Status::Infeasible, Some(e.to_string()), vec![]);
            return Ok(Outcome { report, csv: None });
        }
        Err(e) => return Err(e.into()),
    };
    let verify = verify_interpolant(&real, &data, vtol, VERIFY_SAMPLES, seed)?;
    let eval = |z: &[C64]| eval_realization(&real, z).unwrap_or(c64(f64::NAN, f64::NAN));
    let table = taylor_default(&eval, data.c.bound())?;
    let coefficients: Vec<CoeffRow> = data
        .bx()
        .iter()
        .map(|a| {
            let t = data.c.coeff(a.components());
            let g = table.get(a.components());
            CoeffRow { alpha: a.clone(), target: cx(t), got: cx(g), err: (t - g).norm() }
        })
        .collect();
    let multi_degree = match realization_to_rational(&real) {
        Ok(rf) => Some(rf.multi_degree()),
        Err(Error::Unavailable(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let status = if verify.coeff_pass && verify.positivity_pass { Status::Ok } else { Status::Undecided };
    let step = json!({
        "normalization": normalization,
        "eq_residual": cert.eq_residual,
        "min_eig": cert.min_eig,
        "iterations": cert.iterations,
        "realization": real,
        "coefficients": coefficients,
        "verification": verify,
        "multi_degree": multi_degree,
    });
    Ok(Outcome { report: finish("cf-interp", spec, seed, started, status, None, vec![step]), csv: None })
}

pub fn cmd_k11(spec: &ProblemSpec, seed: u64) -> Result<Outcome> {
    let started = Instant::now();
    ensure!(spec.d == 2, "k11 works on the bidisk (d = 2)");
    let k = spec.k11.context("k11 needs the four coefficients c00, c01, c10, c11")?;
    let p = K11Point { c00: k.c00.into(), c01: k.c01.into(), c10: k.c10.into(), c11: k.c11.into() };
    let (normalized, mobius) = if p.c00 == c64(1.0, 0.0) {
        (p, None)
    } else {
        let m = mobius_from_c00(p.c00)?;
        (automorphism_transform(&p, m.deriv(p.c00), m.deriv2(p.c00)), Some(m))
    };
    let verdict: K11Verdict = k11_check(normalized.c01, normalized.c10, normalized.c11);
    let point = |p: &K11Point| json!({ "c00": cx(p.c00), "c01": cx(p.c01), "c10": cx(p.c10), "c11": cx(p.c11) });
    let mobius = mobius.map(|m| json!({ "a": cx(m.a), "b": cx(m.b), "c": cx(m.c), "d": cx(m.d) }));
    let mut step = json!({ "verdict": verdict, "normalized": point(&normalized), "mobius": mobius });
    let status = if verdict.member {
        let interp = k11_construct(normalized.c01, normalized.c10, normalized.c11)?;
        let (num, den) = interp.phi_rational();
        step["interpolant"] = json!({
            "branch": interp.branch,
            "sigma": interp.sigma.map(cx),
            "g_num": interp.g_num,
            "g_den": interp.g_den,
            "phi_num": num,
            "phi_den": den,
        });
        Status::Ok
    } else {
        Status::NotMember
    };
    Ok(Outcome { report: finish("k11", spec, seed, started, status, None, vec![step]), csv: None })
}

pub fn cmd_pfister(spec: &ProblemSpec, seed: u64) -> Result<Outcome> {
    let started = Instant::now();
    let sym = spec.symbol()?;
    let rho = spec.rho.unwrap_or(0.9);
    let kappas = spec.kappas.clone().unwrap_or_else(|| (1..=6).collect());
    if kappas.is_empty() {
        bail!("the kappa schedule is empty");
    }
    let seq = pfister_sequence(&*sym.eval, sym.d, rho, &kappas)?;
    let mut rows = Vec::new();
    let mut steps = Vec::new();
    for s in &seq {
        let diag = pfister_diagnostics(s, &*sym.eval, rho)?;
        steps.push(json!({ "diagnostics": diag, "num": s.num, "den": s.den }));
        rows.push(diag);
    }
    let csv = to_csv(&rows)?;
    Ok(Outcome { report: finish("pfister", spec, seed, started, Status::Ok, None, steps), csv: Some(csv) })
}
