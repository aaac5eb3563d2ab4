//! Lower bounds for val_p(W_pi(g_{t,l,v})), the cell sweep that checks them,
//! and the small global assembly computations over Q.

use std::collections::BTreeMap;
use std::time::Instant;

use serde_json::{json, Value};

use crate::characters::MultChar;
use crate::cyclo::{q, q_to_string, qi, qpow_int, sqrt_p, CycloLaurent, CycloNumber, Q};
use crate::error::{Error, Result};
use crate::local_arith::{field, Field};
use crate::reps::{list_reps, RepDescriptor, RepKind, RepType};
use crate::util::vp_i128;
use crate::valuation::{val_p_cyclo, val_p_laurent, Certainty, ValRational};
use crate::whittaker::{transversal, working_level, Evaluator};

/// A bound value together with the clause it comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundSpec {
    pub rep_type: RepType,
    pub cpi: u32,
    pub t: i64,
    pub l: u32,
    pub f: usize,
    pub p: u64,
    pub nu: Q,
    pub clause: &'static str,
    pub value: Q,
}

fn qmin(a: Q, b: Q) -> Q {
    if a < b {
        a
    } else {
        b
    }
}

fn qabs(a: Q) -> Q {
    if a < qi(0) {
        -a
    } else {
        a
    }
}

fn inv_pm1(p: u64) -> Q {
    q(1, p as i128 - 1)
}

fn betas(pi: &RepDescriptor) -> Option<(&MultChar, &MultChar)> {
    match &pi.kind {
        RepKind::PrincipalSeries { beta1, beta2 } => Some((beta1, beta2)),
        _ => None,
    }
}

/// val_p(epsilon(1/2, pi)) when val_p(X) = xval.
pub fn epsilon_valuation(pi: &RepDescriptor, xval: &Q) -> Result<ValRational> {
    Ok(val_p_laurent(&pi.epsilon()?, pi.field.p, xval)?.0)
}

fn spec(pi: &RepDescriptor, t: i64, l: u32, xval: &Q, clause: &'static str, value: Q) -> BoundSpec {
    BoundSpec {
        rep_type: pi.rep_type(),
        cpi: pi.conductor(),
        t,
        l,
        f: pi.field.f,
        p: pi.field.p,
        nu: qabs(*xval),
        clause,
        value,
    }
}

/// The endpoint bound for l in {0, c(pi)}. Independent of t.
pub fn bound_won(pi: &RepDescriptor, l: u32, xval: &Q) -> Result<BoundSpec> {
    let n = pi.conductor();
    if l != 0 && l != n {
        return Err(Error::LevelOutOfRange { l: l as i64, n });
    }
    if n < 2 {
        return Err(Error::UnsupportedRep(format!("c(pi) = {n} < 2")));
    }
    let f = qi(pi.field.f as i128);
    let nu = qabs(*xval);
    let (clause, value) = if n == 2 {
        ("won(i)", -f)
    } else {
        match pi.rep_type() {
            RepType::T1 | RepType::T2a | RepType::T3b => ("won(ii)", qi(0)),
            RepType::T3a => {
                let (b1, b2) = betas(pi).unwrap();
                let (c1, c2) = (b1.conductor() as i128, b2.conductor() as i128);
                if c1 > 1 && c2 > 1 {
                    ("won(iii)", -qi((c1 - c2).abs()) * nu)
                } else {
                    let cj = c1.max(c2);
                    ("won(iv)", -qi((cj - 1).abs()) * nu - f / qi(2))
                }
            }
        }
    };
    Ok(spec(pi, 0, l, xval, clause, value))
}

/// The theorem bound (c(pi) = 2 or c(pi) > 2) for any l; the verifier uses
/// it on interior cells.
pub fn bound_theorem(pi: &RepDescriptor, t: i64, l: u32, xval: &Q) -> Result<BoundSpec> {
    let n = pi.conductor();
    if n < 2 {
        return Err(Error::UnsupportedRep(format!("c(pi) = {n} < 2")));
    }
    if l > n {
        return Err(Error::LevelOutOfRange { l: l as i64, n });
    }
    let p = pi.field.p;
    let f = qi(pi.field.f as i128);
    let nu = qabs(*xval);
    let tq = qi(t as i128);
    let nq = qi(n as i128);
    let half = q(1, 2);
    let ip = inv_pm1(p);
    let (clause, value) = if n == 2 {
        match pi.rep_type() {
            RepType::T1 => ("api2(i)", -f),
            RepType::T2a => ("api2(ii)", -(tq + qi(3)) * f + ip),
            RepType::T3a => ("api2(iii)", -(tq + qi(4)) * half * f + qi(2) * ip - (tq + qi(2)) * nu),
            RepType::T3b => ("api2(iv)", -(tq + qi(4)) * half * f + ip - (tq + qi(2)) * nu),
        }
    } else {
        match &pi.kind {
            RepKind::Supercuspidal { .. } => ("apiplus(i)", (qi(1) - qi(l as i128) * half) * f),
            RepKind::Steinberg { mu } => {
                let cm = qi(mu.conductor() as i128);
                ("apiplus(ii)", qmin(-nq * half * f + qi(2) * ip, -(qi(2) + tq + cm * half) * f))
            }
            RepKind::PrincipalSeries { beta1, beta2 } if beta1 == beta2 => {
                let cb = qi(beta1.conductor() as i128);
                ("apiplus(iv)", qmin(-nq * f * half + qi(2) * ip, -(tq + cb + qi(2)) * f * half - (tq + qi(2)) * nu))
            }
            RepKind::PrincipalSeries { beta1, beta2 } => {
                let (c1, c2) = (beta1.conductor() as i128, beta2.conductor() as i128);
                let c12 = qi(beta1.inv().mul(beta2).conductor() as i128);
                let eps_pos = match epsilon_valuation(pi, xval)? {
                    ValRational::Finite(v) => v > qi(0),
                    ValRational::Infinity => true,
                };
                if c1 > 1 && c2 > 1 {
                    // The printed c(beta_1^{-1}) depends on the labelling of
                    // the pair; the stronger of the two labellings is used.
                    let first = -nq * half * f + qmin(ip, f - nq * nu);
                    let tail = |cb: i128| {
                        -(tq + qi(cb) + qi(1) + c12) * half * f + ip - (tq + c12 + qi(1)) * nu
                    };
                    let m1 = qmin(first, tail(c1));
                    let m2 = qmin(first, tail(c2));
                    let base = if m1 > m2 { m1 } else { m2 };
                    let corr = if eps_pos { -qi((c1 - c2).abs()) * nu } else { qi(0) };
                    ("apiplus(iii)(a)", base + corr)
                } else {
                    let a = -nq * half * f + qi(2) * ip;
                    let b = -f * half + ip - (nq - qi(2)) * nu;
                    let c = -(tq + qi(3) + c12) * half * f + qi(2) * ip - (tq + c12 + qi(1)) * nu;
                    let corr = if eps_pos { -(nq - qi(2)) * nu - f * half } else { qi(0) };
                    ("apiplus(iii)(b)", qmin(qmin(a, b), c) + corr)
                }
            }
        }
    };
    Ok(spec(pi, t, l, xval, clause, value))
}

/// Won at the endpoints, the theorem elsewhere.
pub fn bound_for_cell(pi: &RepDescriptor, t: i64, l: u32, xval: &Q) -> Result<BoundSpec> {
    let n = pi.conductor();
    if l == 0 || l == n {
        let mut b = bound_won(pi, l, xval)?;
        b.t = t;
        Ok(b)
    } else {
        bound_theorem(pi, t, l, xval)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Exact,
    Formal,
}

impl SweepMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepMode::Exact => "exact",
            SweepMode::Formal => "formal",
        }
    }

    pub fn parse(s: &str) -> Result<SweepMode> {
        match s {
            "exact" => Ok(SweepMode::Exact),
            "formal" => Ok(SweepMode::Formal),
            _ => Err(Error::Parse(format!("mode must be exact or formal, got {s}"))),
        }
    }
}

/// Parameters of one sweep over a single (p, f).
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub p: u64,
    pub f: usize,
    pub types: Vec<RepType>,
    pub conductors: Vec<u32>,
    pub mode: SweepMode,
    /// nu values for formal mode; each nonzero value is run with both signs.
    pub nus: Vec<Q>,
    /// Inclusive t-window; None means [-(c+6), 4].
    pub t_window: Option<(i64, i64)>,
    /// Representations sampled per (type, conductor); 0 means all.
    pub rep_cap: usize,
    /// Orders r for X = zeta_r in exact mode.
    pub roots: Vec<u64>,
    /// Orders used when a formal lower bound falls short.
    pub fallback_roots: Vec<u64>,
    pub keep_rows: bool,
}

impl SweepConfig {
    pub fn new(p: u64, f: usize) -> Self {
        SweepConfig {
            p,
            f,
            types: vec![RepType::T1, RepType::T2a, RepType::T3a, RepType::T3b],
            conductors: vec![2, 3, 4],
            mode: SweepMode::Exact,
            nus: vec![qi(0), q(1, 2), qi(1)],
            t_window: None,
            rep_cap: 0,
            roots: vec![1, 2, 4],
            fallback_roots: vec![1, 2, 3, 4, 6],
            keep_rows: true,
        }
    }

    pub fn window(&self, n: u32) -> (i64, i64) {
        self.t_window.unwrap_or((-(n as i64 + 6), 4))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p,
            "f": self.f,
            "types": self.types.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
            "conductors": self.conductors,
            "mode": self.mode.as_str(),
            "nus": self.nus.iter().map(q_to_string).collect::<Vec<_>>(),
            "t_window": self.t_window.map(|(a, b)| vec![a, b]),
            "rep_cap": self.rep_cap,
            "roots": self.roots,
            "fallback_roots": self.fallback_roots,
        })
    }
}

/// One checked cell under one specialization.
#[derive(Clone, Debug)]
pub struct CellRow {
    pub rep_type: RepType,
    pub p: u64,
    pub f: usize,
    pub cpi: u32,
    pub rep: String,
    pub t: i64,
    pub l: u32,
    pub v: String,
    pub valuation: ValRational,
    pub bound: Q,
    pub gap: Option<Q>,
    pub mode: String,
    pub clause: &'static str,
}

impl CellRow {
    pub const CSV_HEADER: &'static str = "type,p,f,cpi,t,l,v,valuation,bound,gap,mode";

    pub fn passes(&self) -> bool {
        self.valuation.ge(&self.bound)
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.rep_type.as_str(),
            self.p,
            self.f,
            self.cpi,
            self.t,
            self.l,
            self.v,
            self.valuation.to_json_string(),
            q_to_string(&self.bound),
            self.gap.as_ref().map(q_to_string).unwrap_or_else(|| "inf".into()),
            self.mode
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "type": self.rep_type.as_str(),
            "p": self.p,
            "f": self.f,
            "cpi": self.cpi,
            "rep": self.rep,
            "t": self.t,
            "l": self.l,
            "v": self.v,
            "valuation": self.valuation.to_json_string(),
            "bound": q_to_string(&self.bound),
            "gap": self.gap.as_ref().map(q_to_string).unwrap_or_else(|| "inf".into()),
            "mode": self.mode,
            "clause": self.clause,
        })
    }
}

/// Smallest finite gap seen for a clause, with the first cell attaining it.
#[derive(Clone, Debug)]
pub struct ClauseStat {
    pub cells: u64,
    pub min_gap: Option<Q>,
    pub argmin: Option<(String, i64, u32, String)>,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub config: SweepConfig,
    pub reps_checked: u64,
    pub cells: u64,
    pub rows: Vec<CellRow>,
    pub counterexamples: Vec<CellRow>,
    pub clauses: BTreeMap<&'static str, ClauseStat>,
    /// Minimal finite gap per (clause, t).
    pub clause_t_gaps: BTreeMap<(&'static str, i64), Q>,
    /// Formal cells whose lower bound fell short but every fallback
    /// specialization passed.
    pub formal_shortfalls: u64,
    pub elapsed_ms: Option<u128>,
}

impl VerificationReport {
    fn new(config: SweepConfig) -> Self {
        VerificationReport {
            config,
            reps_checked: 0,
            cells: 0,
            rows: Vec::new(),
            counterexamples: Vec::new(),
            clauses: BTreeMap::new(),
            clause_t_gaps: BTreeMap::new(),
            formal_shortfalls: 0,
            elapsed_ms: None,
        }
    }

    pub fn min_gap(&self) -> Option<Q> {
        self.clauses.values().filter_map(|c| c.min_gap).min()
    }

    fn record(&mut self, row: CellRow) {
        self.cells += 1;
        let stat = self.clauses.entry(row.clause).or_insert(ClauseStat { cells: 0, min_gap: None, argmin: None });
        stat.cells += 1;
        if let Some(g) = row.gap {
            if stat.min_gap.map_or(true, |m| g < m) {
                stat.min_gap = Some(g);
                stat.argmin = Some((row.rep.clone(), row.t, row.l, row.v.clone()));
            }
            let e = self.clause_t_gaps.entry((row.clause, row.t)).or_insert(g);
            if g < *e {
                *e = g;
            }
        }
        if !row.passes() {
            self.counterexamples.push(row.clone());
        }
        if self.config.keep_rows {
            self.rows.push(row);
        }
    }

    /// Fold another report with the same layout into this one.
    pub fn merge(&mut self, other: VerificationReport) {
        self.reps_checked += other.reps_checked;
        self.formal_shortfalls += other.formal_shortfalls;
        for row in other.rows {
            self.rows.push(row);
        }
        self.cells += other.cells;
        self.counterexamples.extend(other.counterexamples);
        for (k, s) in other.clauses {
            let e = self.clauses.entry(k).or_insert(ClauseStat { cells: 0, min_gap: None, argmin: None });
            e.cells += s.cells;
            if let Some(g) = s.min_gap {
                if e.min_gap.map_or(true, |m| g < m) {
                    e.min_gap = Some(g);
                    e.argmin = s.argmin;
                }
            }
        }
        for (k, g) in other.clause_t_gaps {
            let e = self.clause_t_gaps.entry(k).or_insert(g);
            if g < *e {
                *e = g;
            }
        }
        self.elapsed_ms = match (self.elapsed_ms, other.elapsed_ms) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CellRow::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self, with_timing: bool) -> Value {
        let clauses: serde_json::Map<String, Value> = self
            .clauses
            .iter()
            .map(|(k, s)| {
                (
                    k.to_string(),
                    json!({
                        "cells": s.cells,
                        "min_gap": s.min_gap.as_ref().map(q_to_string),
                        "argmin": s.argmin.as_ref().map(|(r, t, l, v)| json!({"rep": r, "t": t, "l": l, "v": v})),
                    }),
                )
            })
            .collect();
        let mut out = json!({
            "config": self.config.to_json(),
            "reps_checked": self.reps_checked,
            "cells": self.cells,
            "min_gap": self.min_gap().as_ref().map(q_to_string),
            "clauses": clauses,
            "formal_shortfalls": self.formal_shortfalls,
            "counterexamples": self.counterexamples.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        });
        if with_timing {
            out["elapsed_ms"] = json!(self.elapsed_ms.map(|x| x as u64));
        }
        out
    }
}

/// Deterministic stride sample of at most `cap` items (all when cap = 0).
pub fn stride_sample<T: Clone>(items: &[T], cap: usize) -> Vec<T> {
    if cap == 0 || items.len() <= cap {
        return items.to_vec();
    }
    (0..cap).map(|i| items[i * items.len() / cap].clone()).collect()
}

/// p^{h/2} as a cyclotomic number.
fn p_half_pow(p: u64, h: i64) -> CycloNumber {
    let whole = CycloNumber::from_q(qpow_int(p, h.div_euclid(2)));
    if h.rem_euclid(2) == 0 {
        whole
    } else {
        whole.mul(&sqrt_p(p))
    }
}

/// Substitute X = p^{xval} zeta_r; xval must be a half-integer.
pub fn specialize_with_valuation(z: &CycloLaurent, p: u64, xval: &Q, r: u64) -> Result<CycloNumber> {
    let h2 = *xval * qi(2);
    if !h2.is_integer() {
        return Err(Error::Parse(format!("nu = {} is not a half-integer", q_to_string(xval))));
    }
    let h = *h2.numer() as i64;
    let mut acc = CycloNumber::zero();
    for (k, c) in z.terms() {
        acc = acc.add(&c.mul(&p_half_pow(p, h * k)).mul(&CycloNumber::root(r, *k)));
    }
    Ok(acc)
}

fn v_label(v: &crate::local_arith::UnitClass, m: u32) -> String {
    if m == 0 {
        return "1".into();
    }
    v.reduce_to(m).coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

struct CellCtx<'a> {
    pi: &'a RepDescriptor,
    rep: String,
    t: i64,
    l: u32,
    v: String,
}

impl<'a> CellCtx<'a> {
    fn row(&self, valuation: ValRational, b: &BoundSpec, mode: String) -> CellRow {
        let gap = valuation.finite().map(|x| x - b.value);
        CellRow {
            rep_type: self.pi.rep_type(),
            p: self.pi.field.p,
            f: self.pi.field.f,
            cpi: self.pi.conductor(),
            rep: self.rep.clone(),
            t: self.t,
            l: self.l,
            v: self.v.clone(),
            valuation,
            bound: b.value,
            gap,
            mode,
            clause: b.clause,
        }
    }
}

fn check_value(
    report: &mut VerificationReport,
    ctx: &CellCtx,
    w: &CycloLaurent,
    bounds_cache: &mut BTreeMap<String, BoundSpec>,
) -> Result<()> {
    let pi = ctx.pi;
    let p = pi.field.p;
    let mut bound = |xval: &Q| -> Result<BoundSpec> {
        let key = q_to_string(xval);
        if let Some(b) = bounds_cache.get(&key) {
            return Ok(b.clone());
        }
        let b = bound_for_cell(pi, ctx.t, ctx.l, xval)?;
        bounds_cache.insert(key, b.clone());
        Ok(b)
    };
    if !pi.has_x() {
        let c = w.terms().get(&0).cloned().unwrap_or_else(CycloNumber::zero);
        let val = val_p_cyclo(&c, p)?;
        let b = bound(&qi(0))?;
        report.record(ctx.row(val, &b, report.config.mode.as_str().to_string()));
        return Ok(());
    }
    match report.config.mode {
        SweepMode::Exact => {
            let b = bound(&qi(0))?;
            for &r in &report.config.roots.clone() {
                let val = val_p_cyclo(&w.specialize(r, 1), p)?;
                report.record(ctx.row(val, &b, format!("exact(r={r})")));
            }
        }
        SweepMode::Formal => {
            let mut xvals = Vec::new();
            for nu in &report.config.nus {
                xvals.push(*nu);
                if *nu != qi(0) {
                    xvals.push(-*nu);
                }
            }
            for xval in xvals {
                let b = bound(&xval)?;
                let (val, cert) = val_p_laurent(w, p, &xval)?;
                let label = format!("formal(nu={})", q_to_string(&xval));
                if val.ge(&b.value) || cert == Certainty::Exact {
                    report.record(ctx.row(val, &b, label));
                    continue;
                }
                let mut all_pass = true;
                for &r in &report.config.fallback_roots.clone() {
                    let sv = val_p_cyclo(&specialize_with_valuation(w, p, &xval, r)?, p)?;
                    if !sv.ge(&b.value) {
                        all_pass = false;
                        report.record(ctx.row(sv, &b, format!("{label}->spec(r={r})")));
                    }
                }
                if all_pass {
                    report.formal_shortfalls += 1;
                    report.record(ctx.row(val, &b, format!("{label}->spec")).with_valuation_floor(&b));
                }
            }
        }
    }
    Ok(())
}

impl CellRow {
    /// Mark a cell as settled by specialization: the reported valuation is
    /// the formal lower bound, the gap is clamped to zero.
    fn with_valuation_floor(mut self, b: &BoundSpec) -> CellRow {
        self.valuation = ValRational::Finite(b.value);
        self.gap = Some(qi(0));
        self
    }
}

/// Check one representation on every cell of the window.
pub fn verify_rep(report: &mut VerificationReport, pi: &RepDescriptor) -> Result<()> {
    let n = pi.conductor();
    let ev = Evaluator::new(pi)?;
    let rep = pi.to_string();
    let (t0, t1) = report.config.window(n);
    let k = working_level(n);
    for l in 0..=n {
        let m = l.min(n - l);
        let vs = transversal(pi, m, k);
        for t in t0..=t1 {
            let ws = ev.values(t, l, &vs)?;
            let mut cache = BTreeMap::new();
            for (v, w) in vs.iter().zip(ws.iter()) {
                let ctx = CellCtx { pi, rep: rep.clone(), t, l, v: v_label(v, m) };
                check_value(report, &ctx, w, &mut cache)?;
            }
        }
    }
    report.reps_checked += 1;
    Ok(())
}

/// Run the sweep described by the config.
pub fn verify_bounds(config: &SweepConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    let fd = field(config.p, config.f)?;
    let mut report = VerificationReport::new(config.clone());
    for &ty in &config.types {
        for &n in &config.conductors {
            for pi in reps_for(&fd, ty, n, config.rep_cap)? {
                verify_rep(&mut report, &pi)?;
            }
        }
    }
    report.elapsed_ms = Some(start.elapsed().as_millis());
    Ok(report)
}

/// The sampled representation list for one (type, conductor).
pub fn reps_for(fd: &Field, ty: RepType, n: u32, cap: usize) -> Result<Vec<RepDescriptor>> {
    Ok(stride_sample(&list_reps(fd, ty, n)?, cap))
}

/// N' = N / gcd(cd, N).
pub fn cusp_field_conductor(n: i128, c: i128, d: i128) -> i128 {
    n / num_integer::gcd(c * d, n)
}

/// sigma diag(alpha, 1) sigma^{-1} for sigma = (a b; c d) of determinant 1.
pub fn level_group_conjugate(a: i128, b: i128, c: i128, d: i128, alpha: i128) -> [i128; 4] {
    [a * d * alpha - b * c, a * b * (1 - alpha), c * d * (alpha - 1), a * d - b * c * alpha]
}

/// Whether sigma diag(alpha, 1) sigma^{-1} lies in K_p(p^n): integral, unit
/// determinant, lower-left entry in p^n Z_p.
pub fn twist_in_level_group(sigma: [i128; 4], alpha: i128, p: u64, n: u32) -> Result<bool> {
    let [a, b, c, d] = sigma;
    if a * d - b * c != 1 {
        return Err(Error::InvalidRep("sigma must have determinant 1".into()));
    }
    if alpha % p as i128 == 0 {
        return Err(Error::NotUnit);
    }
    let m = level_group_conjugate(a, b, c, d, alpha);
    Ok(m[2] == 0 || vp_i128(m[2], p) >= n as i64)
}

/// Outcome of the global assembly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlobalBound {
    Value { value: Q, minimizer: i64 },
    /// p does not divide N: only val_p >= 0 is to be checked.
    NonNegativeRegime,
}

/// -(k/2) val_p(NLM / gcd(N, LM, L^2)) + min_{0 <= u <= 20} {ku/2 + B(t)} with
/// t = u - max{v_p N, v_p L + v_p M, 2 v_p L}.
pub fn global_cusp_valuation_bound<B: Fn(i64) -> Result<Q>>(
    k: i64,
    n: i128,
    l: i128,
    m: i128,
    p: u64,
    local: B,
) -> Result<GlobalBound> {
    if n % p as i128 != 0 {
        return Ok(GlobalBound::NonNegativeRegime);
    }
    let g = num_integer::gcd(num_integer::gcd(n, l * m), l * l);
    let delta = n * l * m / g;
    let shift = vp_i128(n, p).max(vp_i128(l, p) + vp_i128(m, p)).max(2 * vp_i128(l, p));
    let mut best: Option<(Q, i64)> = None;
    for u in 0..=20 {
        let v = q(k as i128 * u as i128, 2) + local(u - shift)?;
        if best.map_or(true, |(b, _)| v < b) {
            best = Some((v, u));
        }
    }
    let (min, u) = best.unwrap();
    let value = -q(k as i128, 2) * qi(vp_i128(delta, p) as i128) + min;
    Ok(GlobalBound::Value { value, minimizer: u })
}

/// The local bound as a function of t: minimum of the cell bounds over l.
pub fn local_bound_min_over_l(pi: &RepDescriptor, t: i64, xval: &Q) -> Result<Q> {
    let mut best: Option<Q> = None;
    for l in 0..=pi.conductor() {
        let b = bound_for_cell(pi, t, l, xval)?.value;
        best = Some(best.map_or(b, |x| qmin(x, b)));
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reps::list_reps_pf;

    #[test]
    fn printed_examples() {
        let st = &list_reps_pf(3, 1, RepType::T2a, 2).unwrap()[0];
        assert_eq!(bound_theorem(st, -2, 1, &qi(0)).unwrap().value, q(-1, 2));
        assert_eq!(bound_won(st, 0, &qi(0)).unwrap().value, qi(-1));
        let st4 = &list_reps_pf(3, 1, RepType::T2a, 4).unwrap()[0];
        assert_eq!(bound_won(st4, 4, &qi(0)).unwrap().value, qi(0));
        let sc = &list_reps_pf(3, 1, RepType::T1, 4).unwrap()[0];
        assert_eq!(bound_theorem(sc, 0, 2, &qi(0)).unwrap().value, qi(0));
        let ps = list_reps_pf(5, 1, RepType::T3a, 3).unwrap();
        let b = bound_won(&ps[0], 0, &q(1, 4)).unwrap();
        assert_eq!((b.clause, b.value), ("won(iv)", q(-1, 4) - q(1, 2)));
        let b3 = &list_reps_pf(5, 1, RepType::T3b, 4).unwrap()[0];
        let want = qmin(qi(-2) + q(1, 2), qi(-1));
        assert_eq!(bound_theorem(b3, -2, 1, &qi(0)).unwrap().value, want);
    }

    #[test]
    fn global_assembly() {
        let st = &list_reps_pf(3, 1, RepType::T2a, 2).unwrap()[0];
        for k in [2, 4, 6, 12] {
            let g = global_cusp_valuation_bound(k, 9, 3, 3, 3, |t| bound_theorem(st, t, 1, &qi(0)).map(|b| b.value))
                .unwrap();
            // delta = 81/9 = 9 -> val 2.
            assert_eq!(g, GlobalBound::Value { value: -qi(k as i128) + qi(-1) + q(1, 2), minimizer: 0 });
        }
        assert_eq!(
            global_cusp_valuation_bound(4, 10, 1, 1, 3, |_| Ok(qi(0))).unwrap(),
            GlobalBound::NonNegativeRegime
        );
        assert_eq!(cusp_field_conductor(12, 2, 1), 6);
        assert!(!twist_in_level_group([1, 0, 3, 1], 2, 3, 2).unwrap());
        assert!(twist_in_level_group([1, 0, 3, 1], 4, 3, 2).unwrap());
        assert!(twist_in_level_group([1, 0, 3, 1], 10, 3, 2).unwrap());
        assert!(twist_in_level_group([2, 1, 3, 2], 10, 3, 2).unwrap());
    }
}
