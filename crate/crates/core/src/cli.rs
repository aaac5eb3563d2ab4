//! Command-line front end. `run` parses arguments, merges an optional JSON
//! config file under the flags and returns the exit status with the text to
//! print.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bounds::{
    bound_for_cell, cusp_field_conductor, global_cusp_valuation_bound, local_bound_min_over_l, verify_bounds,
    GlobalBound, SweepConfig, SweepMode,
};
use crate::characters::{enumerate_chars_capped, MultChar};
use crate::cyclo::{parse_q, q_to_string, qi, CycloLaurent, CycloNumber, Q};
use crate::error::{Error, Result};
use crate::gauss_eps::{check_l1, digit_oracle_s, epsilon_gl1, gauss_bruteforce, gauss_closed};
use crate::local_arith::{field, FracElement, UnitClass};
use crate::reps::{list_reps, RepDescriptor, RepType};
use crate::valuation::{val_p_cyclo, val_p_laurent};
use crate::whittaker::{
    atkin_lehner_sides, decompose_gl2, galois_act_sides, in_cell, transversal, working_level, AlVariant, CellPoint,
    CoefficientTable, KField, Mat2,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MATH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_CAP: i32 = 4;

/// Largest character list a CLI enumeration may produce.
const CHAR_CAP: u64 = 200_000;

#[derive(Parser, Debug)]
#[command(name = "whittaker", about = "Exact local Whittaker newform values and valuation bounds")]
pub struct Cli {
    /// JSON object whose keys fill any flag not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Drop timing fields so that output is byte-identical across runs.
    #[arg(long, global = true)]
    pub no_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Characters of O^x trivial on 1 + p^level.
    EnumerateChars(CharsArgs),
    /// The Gauss sum G(p^valx, chi).
    Gauss(GaussArgs),
    /// epsilon(1/2, chi) with its valuation and s-invariant.
    Eps(CharArgs),
    /// Representation descriptors of one type and conductor.
    ListReps(RepArgs),
    /// Fourier coefficients c_{t,l}(chi).
    Ctl(CtlArgs),
    /// W_pi(g_{t,l,v}).
    Whittaker(WhittakerArgs),
    /// Cell decomposition of a matrix in GL_2(F).
    Decompose(DecomposeArgs),
    /// The Atkin-Lehner relation over the sweep window.
    AtkinLehner(AlArgs),
    /// Galois equivariance over the sweep window.
    GaloisCheck(GaloisArgs),
    /// Check the valuation bounds on every cell of a sweep.
    VerifyBounds(VerifyArgs),
    /// Assemble the global cusp valuation bound over Q.
    GlobalBound(GlobalArgs),
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct CharsArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct CharArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub f: Option<usize>,
    /// Index into the character list at --level.
    #[arg(long)]
    pub char_index: Option<usize>,
    /// Level of the character list (default 1).
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct GaussArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long)]
    pub char_index: Option<usize>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Valuation of x = p^valx.
    #[arg(long, allow_hyphen_values = true)]
    pub valx: Option<i64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct RepArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub f: Option<usize>,
    #[arg(long, alias = "cond")]
    pub conductor: Option<u32>,
    /// 1, 2a, 3a or 3b.
    #[arg(long = "type")]
    #[serde(rename = "type")]
    pub rep_type: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct PiArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rep: RepArgs,
    #[arg(long)]
    pub rep_index: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct CtlArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pi: PiArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<i64>,
    #[arg(long)]
    pub l: Option<u32>,
    /// Index among characters of level max(l, 1); all entries when absent.
    #[arg(long)]
    pub char_index: Option<usize>,
    /// Valuation of X for the formal valuation (rational, default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// Specialize X to zeta_r instead of the formal valuation.
    #[arg(long)]
    pub r: Option<u64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct WhittakerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pi: PiArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<i64>,
    #[arg(long)]
    pub l: Option<u32>,
    /// Unit v as comma-separated power-basis coefficients (default 1).
    #[arg(long)]
    pub v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    #[arg(long)]
    pub r: Option<u64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub f: Option<usize>,
    /// Level n of K_1(p^n).
    #[arg(long)]
    pub n: Option<u32>,
    /// Entries a b c d, each 0 or val:unit.
    #[arg(long, num_args = 4, allow_hyphen_values = true)]
    pub matrix: Option<Vec<String>>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct AlArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pi: PiArgs,
    /// derived (default) or printed sign in the psi factor.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct GaloisArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pi: PiArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<i64>,
    /// Order of the root of unity X is specialized to (default 1).
    #[arg(long)]
    pub r: Option<u64>,
    /// literal (default) or normalized.
    #[arg(long)]
    pub identity: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct VerifyArgs {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub f: Option<usize>,
    /// Comma-separated types (default all).
    #[arg(long)]
    pub ctype: Option<String>,
    /// Comma-separated conductors (default 2,3,4).
    #[arg(long)]
    pub cond: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated nu values for formal mode.
    #[arg(long)]
    pub nu: Option<String>,
    /// Report path ending in .csv or .json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Representations sampled per type and conductor (0 = all).
    #[arg(long)]
    pub rep_cap: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<i64>,
}

#[derive(Args, Serialize, Deserialize, Debug, Default)]
pub struct GlobalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pi: PiArgs,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub level_n: Option<i128>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level_l: Option<i128>,
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub level_m: Option<i128>,
    /// Fix l in the local bound instead of minimizing over l.
    #[arg(long)]
    pub l: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// Cusp c/d: also report N' = N / gcd(cd, N).
    #[arg(long)]
    pub cusp_c: Option<i128>,
    #[arg(long)]
    pub cusp_d: Option<i128>,
}

/// What a command produced, before mapping to an exit status.
enum Outcome {
    Ok(Value),
    /// A mathematical check failed; the value describes it.
    Failed(Value),
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Cap(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn need<T>(x: Option<T>, name: &str) -> CliResult<T> {
    x.ok_or_else(|| CliError::Usage(format!("missing required option --{name}")))
}

/// Overlay the flags that were given on top of the config object.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: &Map<String, Value>) -> CliResult<T> {
    let mut base = config.clone();
    if let Value::Object(m) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(format!("config: {e}")))
}

fn load_config(path: &Option<PathBuf>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Config("config must be a JSON object".into())),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

fn parse_rational(s: &Option<String>) -> CliResult<Q> {
    match s {
        None => Ok(qi(0)),
        Some(s) => Ok(parse_q(s)?),
    }
}

fn char_at(p: u64, f: usize, level: u32, idx: usize) -> CliResult<MultChar> {
    let fd = field(p, f)?;
    let chars = enumerate_chars_capped(&fd, level, CHAR_CAP)?;
    let n = chars.len();
    chars
        .into_iter()
        .nth(idx)
        .ok_or_else(|| CliError::Config(format!("char-index {idx} out of range (level {level} has {n} characters)")))
}

fn pick_rep(a: &PiArgs) -> CliResult<RepDescriptor> {
    let p = need(a.rep.p, "p")?;
    let f = a.rep.f.unwrap_or(1);
    let n = need(a.rep.conductor, "conductor")?;
    let ty = RepType::parse(&need(a.rep.rep_type.clone(), "type")?)?;
    let reps = list_reps(&field(p, f)?, ty, n)?;
    let idx = a.rep_index.unwrap_or(0);
    let len = reps.len();
    reps.into_iter()
        .nth(idx)
        .ok_or_else(|| CliError::Config(format!("rep-index {idx} out of range ({len} representations)")))
}

fn number_json(z: &CycloNumber) -> Value {
    match z.as_rational() {
        Some(r) => Value::String(q_to_string(&r)),
        None => z.to_json(),
    }
}

/// Valuation of a Laurent value: specialized at zeta_r if r is given, else
/// term-wise with val(X) = nu.
fn laurent_valuation(z: &CycloLaurent, p: u64, nu: &Q, r: Option<u64>) -> CliResult<(String, &'static str)> {
    Ok(match r {
        Some(r) => (val_p_cyclo(&z.specialize(r, 1), p)?.to_json_string(), "exact"),
        None => {
            let (v, c) = val_p_laurent(z, p, nu)?;
            (v.to_json_string(), c.as_str())
        }
    })
}

fn parse_unit(pi: &RepDescriptor, s: &Option<String>, level: u32) -> CliResult<UnitClass> {
    let coeffs: Vec<i64> = match s {
        None => vec![1],
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|_| CliError::Config(format!("bad unit {s:?}"))))
            .collect::<CliResult<_>>()?,
    };
    Ok(UnitClass::new(&pi.field, level, &coeffs)?)
}

fn cmd_enumerate(a: CharsArgs) -> CliResult<Outcome> {
    let fd = field(need(a.p, "p")?, a.f.unwrap_or(1))?;
    let chars = enumerate_chars_capped(&fd, a.level.unwrap_or(1), CHAR_CAP)?;
    let rows: Vec<Value> = chars
        .iter()
        .enumerate()
        .map(|(i, c)| json!({"index": i, "conductor": c.conductor(), "order": c.order(), "exponents": c.exponents()}))
        .collect();
    Ok(Outcome::Ok(Value::Array(rows)))
}

fn cmd_gauss(a: GaussArgs) -> CliResult<Outcome> {
    let (p, f) = (need(a.p, "p")?, a.f.unwrap_or(1));
    let chi = char_at(p, f, a.level.unwrap_or(1), need(a.char_index, "char-index")?)?;
    let valx = need(a.valx, "valx")?;
    let fd = field(p, f)?;
    let x = FracElement::new(valx, UnitClass::one(&fd, (-valx).max(1) as u32));
    let g = gauss_closed(&chi, &x)?;
    let brute = gauss_bruteforce(&chi, &x)?;
    let val = val_p_cyclo(&g, p)?;
    let out = json!({
        "value": number_json(&g),
        "valuation": val.to_json_string(),
        "s": Value::Null,
        "matches_bruteforce": g == brute,
    });
    Ok(if g == brute { Outcome::Ok(out) } else { Outcome::Failed(out) })
}

fn cmd_eps(a: CharArgs) -> CliResult<Outcome> {
    let (p, f) = (need(a.p, "p")?, a.f.unwrap_or(1));
    let chi = char_at(p, f, a.level.unwrap_or(1), need(a.char_index, "char-index")?)?;
    let e = epsilon_gl1(&chi)?;
    let rep = check_l1(&chi)?;
    let digit = if f == 1 && chi.conductor() == 1 { Some(digit_oracle_s(&chi)?) } else { None };
    let s = e.s_invariant;
    let ok = rep.in_range && (digit.is_none() || digit == s);
    let out = json!({
        "value": number_json(&e.value),
        "valuation": e.valuation.to_json_string(),
        "s": s,
        "digit_s": digit,
        "law_holds": rep.in_range,
    });
    Ok(if ok { Outcome::Ok(out) } else { Outcome::Failed(out) })
}

fn cmd_list_reps(a: RepArgs) -> CliResult<Outcome> {
    let fd = field(need(a.p, "p")?, a.f.unwrap_or(1))?;
    let ty = RepType::parse(&need(a.rep_type, "type")?)?;
    let reps = list_reps(&fd, ty, need(a.conductor, "conductor")?)?;
    let rows: Vec<Value> = reps
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.to_json();
            v["index"] = json!(i);
            v
        })
        .collect();
    Ok(Outcome::Ok(Value::Array(rows)))
}

fn cmd_ctl(a: CtlArgs) -> CliResult<Outcome> {
    let pi = pick_rep(&a.pi)?;
    let (t, l) = (need(a.t, "t")?, need(a.l, "l")?);
    let nu = parse_rational(&a.nu)?;
    let p = pi.field.p;
    let table = CoefficientTable::build(&pi, t, l)?;
    let entry = |chi: &MultChar, c: &CycloLaurent| -> CliResult<Value> {
        let (val, cert) = laurent_valuation(c, p, &nu, a.r)?;
        Ok(json!({"chi": chi.to_json(), "laurent": c.to_json(), "valuation": val, "certainty": cert}))
    };
    let out = match a.char_index {
        Some(idx) => {
            let chi = char_at(p, pi.field.f, l.max(1), idx)?;
            let c = crate::whittaker::c_tl(&pi, &chi, t, l)?;
            entry(&chi, &c)?
        }
        None => {
            let rows = table.entries.iter().map(|(chi, c)| entry(chi, c)).collect::<CliResult<Vec<_>>>()?;
            json!({"rep": pi.to_json(), "t": t, "l": l, "entries": rows})
        }
    };
    Ok(Outcome::Ok(out))
}

fn cmd_whittaker(a: WhittakerArgs) -> CliResult<Outcome> {
    let pi = pick_rep(&a.pi)?;
    let n = pi.conductor();
    let (t, l) = (need(a.t, "t")?, need(a.l, "l")?);
    let v = parse_unit(&pi, &a.v, working_level(n))?;
    let point = CellPoint::new(t, l, v, n)?;
    let w = crate::whittaker::whittaker_value(&pi, &point)?;
    let (val, cert) = laurent_valuation(&w, pi.field.p, &parse_rational(&a.nu)?, a.r)?;
    Ok(Outcome::Ok(json!({
        "rep": pi.to_json(),
        "t": t,
        "l": l,
        "laurent": w.to_json(),
        "valuation": val,
        "certainty": cert,
    })))
}

fn kelem_json(e: &crate::whittaker::KElem) -> Value {
    Value::Array(e.c.iter().map(|x| Value::String(format!("{}/{}", x.numer(), x.denom()))).collect())
}

fn cmd_decompose(a: DecomposeArgs) -> CliResult<Outcome> {
    let fd = field(need(a.p, "p")?, a.f.unwrap_or(1))?;
    let n = need(a.n, "n")?;
    let m = need(a.matrix, "matrix")?;
    if m.len() != 4 {
        return Err(CliError::Usage("--matrix takes four entries".into()));
    }
    let kf = KField::new(&fd);
    let e: Vec<_> = m.iter().map(|s| kf.parse_entry(s)).collect::<Result<_>>()?;
    let g = Mat2 { a: e[0].clone(), b: e[1].clone(), c: e[2].clone(), d: e[3].clone() };
    let dec = decompose_gl2(&g, n, &kf)?;
    let ok = in_cell(&g, &dec, &kf);
    let out = json!({
        "t": dec.point.t,
        "l": dec.point.l,
        "v": dec.point.v.reduce_to(dec.point.v.level.min(dec.point.l.min(n - dec.point.l).max(1))).coeffs,
        "z": kelem_json(&dec.z),
        "x": kelem_json(&dec.x),
        "k": [kelem_json(&dec.k.a), kelem_json(&dec.k.b), kelem_json(&dec.k.c), kelem_json(&dec.k.d)],
        "in_cell": ok,
    });
    Ok(if ok { Outcome::Ok(out) } else { Outcome::Failed(out) })
}

/// Cells of the standard t-window with the quotient transversal carried at
/// the working level.
fn window_cells(pi: &RepDescriptor) -> Vec<(i64, u32, UnitClass)> {
    let n = pi.conductor();
    let mut out = Vec::new();
    for l in 0..=n {
        for v in transversal(pi, l.min(n - l), working_level(n)) {
            for t in -(n as i64 + 6)..=4 {
                out.push((t, l, v.clone()));
            }
        }
    }
    out
}

fn cmd_atkin_lehner(a: AlArgs) -> CliResult<Outcome> {
    let pi = pick_rep(&a.pi)?;
    let variant = match a.variant.as_deref().unwrap_or("derived") {
        "derived" => AlVariant::Derived,
        "printed" => AlVariant::Printed,
        s => return Err(CliError::Config(format!("variant must be derived or printed, got {s}"))),
    };
    let mut cells = 0u64;
    let mut failures = Vec::new();
    for (t, l, v) in window_cells(&pi) {
        let (lhs, rhs) = atkin_lehner_sides(&pi, t, l, &v, variant)?;
        cells += 1;
        if lhs != rhs {
            failures.push(json!({"t": t, "l": l, "v": v.coeffs}));
        }
    }
    let out = json!({"rep": pi.to_json(), "cells": cells, "failures": failures.len(), "first_failures": failures.iter().take(10).collect::<Vec<_>>()});
    Ok(if failures.is_empty() { Outcome::Ok(out) } else { Outcome::Failed(out) })
}

fn cmd_galois(a: GaloisArgs) -> CliResult<Outcome> {
    let pi = pick_rep(&a.pi)?;
    let ta = a.a.unwrap_or(2);
    let r = a.r.unwrap_or(1);
    let literal = match a.identity.as_deref().unwrap_or("literal") {
        "literal" => true,
        "normalized" => false,
        s => return Err(CliError::Config(format!("identity must be literal or normalized, got {s}"))),
    };
    let n = pi.conductor();
    let (mut cells, mut lit_fail, mut norm_fail) = (0u64, 0u64, 0u64);
    let mut lift = 0;
    for (t, l, v) in window_cells(&pi) {
        let s = galois_act_sides(&pi, &CellPoint::new(t, l, v, n)?, ta, r, 1)?;
        lift = s.lift;
        cells += 1;
        lit_fail += (!s.literal_holds()) as u64;
        norm_fail += (!s.normalized_holds()) as u64;
    }
    let out = json!({
        "rep": pi.to_json(),
        "a": ta,
        "lift": lift,
        "cells": cells,
        "literal_failures": lit_fail,
        "normalized_failures": norm_fail,
    });
    let failed = if literal { lit_fail } else { norm_fail };
    Ok(if failed == 0 { Outcome::Ok(out) } else { Outcome::Failed(out) })
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(|x| x.trim()).filter(|x| !x.is_empty()).collect()
}

/// Sweep limits: p in {3,5,7}, f = 1 (or f = 2 at p = 3), c in [2, 4],
/// t-window inside [-(c+6), 4].
fn check_sweep_caps(c: &SweepConfig) -> CliResult<()> {
    if ![3, 5, 7].contains(&c.p) {
        return Err(CliError::Cap(format!("p = {} outside the sweep primes 3, 5, 7", c.p)));
    }
    if !(c.f == 1 || (c.f == 2 && c.p == 3)) {
        return Err(CliError::Cap(format!("f = {} not allowed at p = {}", c.f, c.p)));
    }
    if let Some(n) = c.conductors.iter().find(|&&n| !(2..=4).contains(&n)) {
        return Err(CliError::Cap(format!("conductor {n} outside [2, 4]")));
    }
    if let Some((a, b)) = c.t_window {
        let nmax = *c.conductors.iter().max().unwrap_or(&4) as i64;
        if a > b || a < -(nmax + 6) || b > 4 {
            return Err(CliError::Cap(format!("t-window [{a}, {b}] outside [-(c+6), 4]")));
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs, no_timing: bool) -> CliResult<Outcome> {
    let mut cfg = SweepConfig::new(need(a.p, "p")?, a.f.unwrap_or(1));
    if let Some(s) = &a.ctype {
        cfg.types = split_list(s).into_iter().map(RepType::parse).collect::<Result<_>>()?;
    }
    if let Some(s) = &a.cond {
        cfg.conductors = split_list(s)
            .into_iter()
            .map(|x| x.parse::<u32>().map_err(|_| CliError::Config(format!("bad conductor {x:?}"))))
            .collect::<CliResult<_>>()?;
    }
    if let Some(m) = &a.mode {
        cfg.mode = SweepMode::parse(m)?;
    }
    if let Some(s) = &a.nu {
        cfg.nus = split_list(s).into_iter().map(parse_q).collect::<Result<_>>()?;
    }
    if let Some(c) = a.rep_cap {
        cfg.rep_cap = c;
    }
    if a.t_min.is_some() || a.t_max.is_some() {
        cfg.t_window = Some((a.t_min.unwrap_or(-10), a.t_max.unwrap_or(4)));
    }
    check_sweep_caps(&cfg)?;
    cfg.keep_rows = a.out.is_some();
    let report = verify_bounds(&cfg)?;
    if let Some(path) = &a.out {
        let body = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => report.to_csv(),
            Some("json") => serde_json::to_string_pretty(&report.to_json(!no_timing)).unwrap() + "\n",
            _ => return Err(CliError::Config("--out must end in .csv or .json".into())),
        };
        std::fs::write(path, body).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    let mut summary = report.to_json(!no_timing);
    summary.as_object_mut().unwrap().remove("rows");
    Ok(if report.counterexamples.is_empty() { Outcome::Ok(summary) } else { Outcome::Failed(summary) })
}

fn cmd_global(a: GlobalArgs) -> CliResult<Outcome> {
    let pi = pick_rep(&a.pi)?;
    let k = need(a.k, "k")?;
    let n = need(a.level_n, "N")?;
    let (l, m) = (a.level_l.unwrap_or(1), a.level_m.unwrap_or(1));
    let nu = parse_rational(&a.nu)?;
    let fixed_l = a.l;
    let local = |t: i64| -> Result<Q> {
        match fixed_l {
            Some(l) => Ok(bound_for_cell(&pi, t, l, &nu)?.value),
            None => local_bound_min_over_l(&pi, t, &nu),
        }
    };
    let g = global_cusp_valuation_bound(k, n, l, m, pi.field.p, local)?;
    let mut out = match g {
        GlobalBound::Value { value, minimizer } => json!({"value": q_to_string(&value), "minimizer": minimizer}),
        GlobalBound::NonNegativeRegime => json!({"regime": ">=0"}),
    };
    if let (Some(c), Some(d)) = (a.cusp_c, a.cusp_d) {
        out["cusp_field_conductor"] = json!(cusp_field_conductor(n, c, d).to_string());
    }
    Ok(Outcome::Ok(out))
}

fn dispatch(cli: Cli) -> CliResult<Outcome> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::EnumerateChars(a) => cmd_enumerate(merge(&a, &cfg)?),
        Command::Gauss(a) => cmd_gauss(merge(&a, &cfg)?),
        Command::Eps(a) => cmd_eps(merge(&a, &cfg)?),
        Command::ListReps(a) => cmd_list_reps(merge(&a, &cfg)?),
        Command::Ctl(a) => cmd_ctl(merge(&a, &cfg)?),
        Command::Whittaker(a) => cmd_whittaker(merge(&a, &cfg)?),
        Command::Decompose(a) => cmd_decompose(merge(&a, &cfg)?),
        Command::AtkinLehner(a) => cmd_atkin_lehner(merge(&a, &cfg)?),
        Command::GaloisCheck(a) => cmd_galois(merge(&a, &cfg)?),
        Command::VerifyBounds(a) => cmd_verify(merge(&a, &cfg)?, cli.no_timing),
        Command::GlobalBound(a) => cmd_global(merge(&a, &cfg)?),
    }
}

/// Run the CLI on the given arguments (including the program name).
/// Returns the exit status and the text for stdout and stderr.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            return if code == EXIT_OK { (code, e.to_string(), String::new()) } else { (code, String::new(), e.to_string()) };
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Ok(v)) => (EXIT_OK, serde_json::to_string_pretty(&v).unwrap() + "\n", String::new()),
        Ok(Outcome::Failed(v)) => (EXIT_MATH, serde_json::to_string_pretty(&v).unwrap() + "\n", String::new()),
        Err(CliError::Usage(m)) => (EXIT_USAGE, String::new(), format!("error: {m}\n")),
        Err(CliError::Config(m)) => (EXIT_CONFIG, String::new(), format!("error: {m}\n")),
        Err(CliError::Cap(m)) => (EXIT_CAP, String::new(), format!("error: {m}\n")),
    }
}
