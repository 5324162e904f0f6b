//! Problem-spec validation and dispatch.

use jr_core::arch::{self, Iwasawa};
use jr_core::gen;
use jr_core::lattice::HermSpace;
use jr_core::linalg::Mat;
use jr_core::orbit::{
    check_symmetric_identities, check_unitary_identities, lift_symmetric, lift_unitary, reduce_symmetric,
    reduce_unitary, transfer_factor, InvariantVector, SemiLiePair, Side, UnitaryPair, Variant,
};
use jr_core::orbital::{fl_sweep, fl_verify, orb_gl_detailed, orb_u, special_values, FlReport};
use jr_core::padic::{int, LocalFieldCtx, QuadExtElem};
use jr_core::serial::{
    laurent_to_json, mat_from_json, mat_to_json, poly_from_json, quad_from_json, quad_to_json, quad_vec_from_json,
    rat_to_json, SerialError,
};
use jr_core::series::tate_fe_check;
use jr_core::weil::{agree, fourier, weil_constant, FourthRoot, WeilCtx};
use num_traits::One;
use serde_json::{json, Map, Value};
use thiserror::Error;

pub const COMMANDS: [&str; 8] = ["orb-gl", "orb-u", "fl-check", "fl-sweep", "reduce", "weil-check", "arch", "tate-fe"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }
}

impl From<SerialError> for CliError {
    fn from(e: SerialError) -> Self {
        CliError::Schema(e.to_string())
    }
}

fn pre<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Precondition(e.to_string())
}

/// Result of one command: a JSON result object, optional tabular rows and
/// an optional verdict.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub rows: Option<Vec<Map<String, Value>>>,
    pub verdict: Option<bool>,
}

/// Checked accessor over a params object restricted to a key list.
struct Params<'a> {
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    fn new(v: &'a Value, allowed: &[&str]) -> Result<Self, CliError> {
        let map = v.as_object().ok_or_else(|| CliError::Schema("params must be an object".into()))?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::Schema(format!("unknown parameter {k:?}; expected one of {allowed:?}")));
        }
        Ok(Self { map })
    }
    fn get(&self, k: &str) -> Option<&'a Value> {
        self.map.get(k).filter(|v| !v.is_null())
    }
    fn req(&self, k: &str) -> Result<&'a Value, CliError> {
        self.get(k).ok_or_else(|| CliError::Schema(format!("missing parameter {k:?}")))
    }
    fn typed<T>(&self, k: &str, what: &str, f: impl Fn(&Value) -> Option<T>) -> Result<Option<T>, CliError> {
        self.get(k).map(|v| f(v).ok_or_else(|| CliError::Schema(format!("{k}: expected {what}")))).transpose()
    }
    fn u64(&self, k: &str) -> Result<Option<u64>, CliError> {
        self.typed(k, "a nonnegative integer", Value::as_u64)
    }
    fn i64(&self, k: &str) -> Result<Option<i64>, CliError> {
        self.typed(k, "an integer", Value::as_i64)
    }
    fn f64(&self, k: &str) -> Result<Option<f64>, CliError> {
        self.typed(k, "a number", Value::as_f64)
    }
    fn bool(&self, k: &str) -> Result<Option<bool>, CliError> {
        self.typed(k, "a boolean", Value::as_bool)
    }
    fn str(&self, k: &str) -> Result<Option<&'a str>, CliError> {
        self.get(k).map(|v| v.as_str().ok_or_else(|| CliError::Schema(format!("{k}: expected a string")))).transpose()
    }
    /// Local context from `p` (required) and `d` (default: first negative nonresidue).
    fn ctx(&self) -> Result<LocalFieldCtx, CliError> {
        let p = self.u64("p")?.ok_or_else(|| CliError::Schema("missing parameter \"p\"".into()))?;
        ctx_for(p, self.i64("d")?)
    }
    fn d(&self) -> Result<i64, CliError> {
        Ok(self.i64("d")?.unwrap_or(-1))
    }
}

fn ctx_for(p: u64, d: Option<i64>) -> Result<LocalFieldCtx, CliError> {
    match d {
        Some(d) => LocalFieldCtx::new(p, d).map_err(pre),
        None => LocalFieldCtx::with_default_d(p).map_err(pre),
    }
}

fn verdict_str(v: bool) -> &'static str {
    if v {
        "PASS"
    } else {
        "FAIL"
    }
}

fn side_str(s: Side) -> &'static str {
    match s {
        Side::Split => "split",
        Side::Nonsplit => "nonsplit",
    }
}

fn quads_json(v: &[QuadExtElem]) -> Value {
    Value::Array(v.iter().map(quad_to_json).collect())
}

fn quads_text(v: &[QuadExtElem]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Validates the top-level spec `{"command": .., "params": {..}}`.
pub fn parse_spec(v: &Value) -> Result<(String, Value), CliError> {
    let obj = v.as_object().ok_or_else(|| CliError::Schema("spec must be a JSON object".into()))?;
    if let Some(k) = obj.keys().find(|k| !["command", "params"].contains(&k.as_str())) {
        return Err(CliError::Schema(format!("unknown top-level key {k:?}")));
    }
    let cmd = obj
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Schema("\"command\" must be a string".into()))?;
    if !COMMANDS.contains(&cmd) {
        return Err(CliError::Schema(format!("unknown command {cmd:?}; expected one of {COMMANDS:?}")));
    }
    let params = obj.get("params").cloned().unwrap_or_else(|| json!({}));
    if !params.is_object() {
        return Err(CliError::Schema("\"params\" must be an object".into()));
    }
    Ok((cmd.to_string(), params))
}

pub fn dispatch(cmd: &str, params: &Value) -> Result<Outcome, CliError> {
    match cmd {
        "orb-gl" => orb_gl_cmd(params),
        "orb-u" => orb_u_cmd(params),
        "fl-check" => fl_check_cmd(params),
        "fl-sweep" => fl_sweep_cmd(params),
        "reduce" => reduce_cmd(params),
        "weil-check" => weil_check_cmd(params),
        "arch" => arch_cmd(params),
        "tate-fe" => tate_fe_cmd(params),
        _ => Err(CliError::Schema(format!("unknown command {cmd:?}"))),
    }
}

fn orb_gl_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["p", "d", "gamma", "u1", "u2"])?;
    let ctx = p.ctx()?;
    let d = ctx.d;
    let gamma = mat_from_json(p.req("gamma")?, d, "gamma")?;
    let u1 = quad_vec_from_json(p.req("u1")?, d, "u1")?;
    let u2 = quad_vec_from_json(p.req("u2")?, d, "u2")?;
    let x = SemiLiePair::new(gamma, u1, u2).map_err(pre)?;
    let omega = transfer_factor(&x, &ctx).map_err(pre)?;
    let r = orb_gl_detailed(&x, &ctx).map_err(pre)?;
    let sv = special_values(&r.value, omega);
    Ok(Outcome {
        result: json!({
            "orbital": laurent_to_json(&r.value),
            "omega": omega,
            "value0": rat_to_json(&sv.value0),
            "dvalue0": rat_to_json(&sv.dvalue0),
            "lattices_counted": r.lattices_counted,
        }),
        rows: None,
        verdict: None,
    })
}

fn orb_u_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["p", "d", "gram", "g", "u"])?;
    let ctx = p.ctx()?;
    let d = ctx.d;
    let g = mat_from_json(p.req("g")?, d, "g")?;
    let gram = match p.get("gram") {
        Some(x) => mat_from_json(x, d, "gram")?,
        None => Mat::identity(g.rows, d),
    };
    let space = HermSpace::new(gram).map_err(pre)?;
    let u = quad_vec_from_json(p.req("u")?, d, "u")?;
    let x = UnitaryPair::new(space, g, u).map_err(pre)?;
    let n = orb_u(&x, &ctx).map_err(pre)?;
    Ok(Outcome { result: json!({ "count": n }), rows: None, verdict: None })
}

fn fl_report_json(r: &FlReport) -> Value {
    json!({
        "side": side_str(r.side),
        "omega": r.omega,
        "orbital": laurent_to_json(&r.orb_gl),
        "value0": rat_to_json(&r.orb_gl_special.value0),
        "dvalue0": rat_to_json(&r.orb_gl_special.dvalue0),
        "orb_u": r.orb_u,
        "verdict": verdict_str(r.verdict),
    })
}

fn fl_check_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["p", "d", "m", "charpoly", "moments"])?;
    let ctx = p.ctx()?;
    let d = ctx.d;
    let charpoly = poly_from_json(p.req("charpoly")?, d, "charpoly")?;
    let moments = quad_vec_from_json(p.req("moments")?, d, "moments")?;
    if let Some(m) = p.u64("m")? {
        if m as usize != moments.len() {
            return Err(CliError::Schema(format!("m = {m} but {} moments given", moments.len())));
        }
    }
    if charpoly.degree() != Some(moments.len()) {
        return Err(CliError::Schema("charpoly degree must equal the number of moments".into()));
    }
    let iv = InvariantVector::new(charpoly, moments);
    iv.check_consistent().map_err(pre)?;
    let r = fl_verify(&iv, &ctx).map_err(pre)?;
    Ok(Outcome { result: fl_report_json(&r), rows: None, verdict: Some(r.verdict) })
}

fn fl_sweep_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["p", "d", "m", "max_valuation", "seed"])?;
    let primes = match p.u64("p")? {
        Some(q) => vec![q],
        None => {
            if p.get("d").is_some() {
                return Err(CliError::Schema("\"d\" requires \"p\"".into()));
            }
            vec![3, 5]
        }
    };
    let m = p.u64("m")?.unwrap_or(1) as usize;
    if !(1..=2).contains(&m) {
        return Err(CliError::Precondition(format!("sweeps support m = 1 or 2, got {m}")));
    }
    let maxv = p.u64("max_valuation")?.unwrap_or(4) as u32;
    let seed = p.u64("seed")?.unwrap_or(0);
    let mut rows = Vec::new();
    let mut passed = 0usize;
    for &q in &primes {
        let ctx = ctx_for(q, p.i64("d")?)?;
        for (iv, r) in fl_sweep(&ctx, m, maxv, seed) {
            let r = r.map_err(pre)?;
            passed += r.verdict as usize;
            let mut row = Map::new();
            row.insert("p".into(), json!(q));
            row.insert("d".into(), json!(ctx.d));
            row.insert("m".into(), json!(m));
            row.insert("charpoly".into(), json!(quads_text(iv.charpoly.coeffs())));
            row.insert("moments".into(), json!(quads_text(&iv.moments)));
            row.insert("side".into(), json!(side_str(r.side)));
            row.insert("value0".into(), rat_to_json(&r.orb_gl_special.value0));
            row.insert("orb_u".into(), r.orb_u.map_or(Value::Null, |n| json!(n)));
            row.insert("verdict".into(), json!(verdict_str(r.verdict)));
            rows.push(row);
        }
    }
    let total = rows.len();
    Ok(Outcome {
        result: json!({ "instances": total, "passed": passed, "rows": rows }),
        rows: Some(rows),
        verdict: Some(passed == total),
    })
}

fn reduce_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["d", "gram", "g", "gamma", "xi", "variant"])?;
    let d = p.d()?;
    let xi = match p.get("xi") {
        Some(x) => quad_from_json(x, d, "xi")?,
        None => QuadExtElem::one(d),
    };
    if !xi.norm().is_one() {
        return Err(CliError::Precondition(format!("xi = {xi} must have norm one")));
    }
    let variant = match p.str("variant")?.unwrap_or("r") {
        "r" => Variant::R,
        "r-natural" => Variant::RNatural,
        other => return Err(CliError::Schema(format!("variant: expected \"r\" or \"r-natural\", got {other:?}"))),
    };
    match (p.get("g"), p.get("gamma")) {
        (Some(g), None) => {
            let gp = mat_from_json(g, d, "g")?;
            let m = gp.rows.checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| CliError::Schema("g must be at least 2x2".into()))?;
            let gram = match p.get("gram") {
                Some(x) => mat_from_json(x, d, "gram")?,
                None => Mat::identity(m, d),
            };
            let space = HermSpace::new(gram).map_err(pre)?;
            let red = reduce_unitary(&gp, &space, variant, &xi).map_err(pre)?;
            let identities = check_unitary_identities(&gp, &space, &xi).map_err(pre)?;
            let lift_ok = lift_unitary(&red, &space).map_err(pre)? == gp;
            Ok(Outcome {
                result: json!({
                    "side": "unitary",
                    "g": mat_to_json(&red.g),
                    "u": quads_json(&red.u),
                    "e": quad_to_json(&red.e),
                    "identities": identities,
                    "lift_round_trip": lift_ok,
                }),
                rows: None,
                verdict: Some(identities && lift_ok),
            })
        }
        (None, Some(g)) => {
            if p.get("gram").is_some() {
                return Err(CliError::Schema("\"gram\" applies to the unitary side only".into()));
            }
            let gp = mat_from_json(g, d, "gamma")?;
            let red = reduce_symmetric(&gp, variant, &xi).map_err(pre)?;
            let identities = check_symmetric_identities(&gp, &xi).map_err(pre)?;
            let lift_ok = lift_symmetric(&red).map_err(pre)? == gp;
            Ok(Outcome {
                result: json!({
                    "side": "symmetric",
                    "gamma": mat_to_json(&red.gamma),
                    "u1": quads_json(&red.u1),
                    "u2": quads_json(&red.u2),
                    "e": quad_to_json(&red.e),
                    "identities": identities,
                    "lift_round_trip": lift_ok,
                }),
                rows: None,
                verdict: Some(identities && lift_ok),
            })
        }
        _ => Err(CliError::Schema("give exactly one of \"g\" (unitary) or \"gamma\" (symmetric)".into())),
    }
}

fn weil_check_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["p", "d", "m", "samples", "phase_level", "seed"])?;
    let q = p.u64("p")?.unwrap_or(3);
    let ctx = ctx_for(q, p.i64("d")?)?;
    let m = p.u64("m")?.unwrap_or(1) as usize;
    if !(1..=3).contains(&m) {
        return Err(CliError::Precondition(format!("weil-check supports 1 <= m <= 3, got {m}")));
    }
    let samples = p.u64("samples")?.unwrap_or(10);
    let level = p.u64("phase_level")?.unwrap_or(4) as u32;
    let seed = p.u64("seed")?.unwrap_or(0);
    let mut rng = gen::seeded(seed);
    let space = gen::diagonal_space(&mut rng, m, ctx.d, q, 1);
    let w = WeilCtx::from_hermitian(&space, &ctx, level);
    let mut involutions = 0u64;
    for _ in 0..samples {
        let f = gen::coset_function(&mut rng, &w);
        let ff = fourier(&fourier(&f, &w).map_err(pre)?, &w).map_err(pre)?;
        involutions += agree(&ff, &f.reflect(), &w).map_err(pre)? as u64;
    }
    let square_law = w.gamma.mul(w.gamma) == FourthRoot::from_sign(w.chi(&int(-1)));
    let split_trivial = weil_constant(&HermSpace::standard(m, ctx.d), &ctx) == FourthRoot::ONE;
    let ok = involutions == samples && square_law && split_trivial;
    Ok(Outcome {
        result: json!({
            "p": q,
            "d": ctx.d,
            "gram_diagonal": quads_json(&(0..m).map(|i| space.gram[(i, i)].clone()).collect::<Vec<_>>()),
            "weil_constant_power_of_i": w.gamma.0,
            "fourier_involutions": format!("{involutions}/{samples}"),
            "gamma_squared_is_chi_minus_one": square_law,
            "split_space_constant_is_one": split_trivial,
        }),
        rows: None,
        verdict: Some(ok),
    })
}

fn arch_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["xi", "s", "deriv", "a", "b", "theta", "tolerance"])?;
    let xi = p.f64("xi")?.ok_or_else(|| CliError::Schema("missing parameter \"xi\"".into()))?;
    let s = p.f64("s")?.unwrap_or(0.0);
    let deriv = p.bool("deriv")?.unwrap_or(false);
    let h = Iwasawa::new(p.f64("a")?.unwrap_or(1.0), p.f64("b")?.unwrap_or(0.0), p.f64("theta")?.unwrap_or(0.0))
        .map_err(pre)?;
    let tol = p.f64("tolerance")?.unwrap_or_else(arch::default_tol::<f64>);
    let val = arch::orb_arch_tol(xi, s, deriv, h, tol).map_err(pre)?;
    if val.err > tol.max(arch::default_tol::<f64>()) * val.value.norm().max(1.0) {
        return Err(pre(format!("error bound {:e} exceeds tolerance {tol:e}", val.err)));
    }
    let general = "chi_1(theta) e^{pi i xi b} a^{(1+s)/2} 2^{-1/2} X^{(1-s)/2} (K_{(1-s)/2}(pi X) + sgn(xi) K_{(1+s)/2}(pi X)), X = a|xi|";
    let mut result = json!({
        "value": { "re": val.value.re, "im": val.value.im },
        "error_bound": val.err,
        "formula": if deriv { format!("d/ds of {general}") } else { general.to_string() },
    });
    if s == 0.0 {
        let (v0, d0) = arch::orb_arch_special(xi, h).map_err(pre)?;
        let (sv, formula) = match (xi > 0.0, deriv) {
            (true, false) => (v0, "chi_1(theta) a^{1/2} e^{pi i xi (b + i a)}"),
            (true, true) => (d0, "-(1/2) log(xi) chi_1(theta) a^{1/2} e^{pi i xi (b + i a)}"),
            (false, false) => (v0, "0"),
            (false, true) => (d0, "(1/2) chi_1(theta) a^{1/2} e^{pi i xi (b + i a)} Ei(-2 pi a |xi|)"),
        };
        result["special_value"] = json!({
            "value": { "re": sv.value.re, "im": sv.value.im },
            "error_bound": sv.err,
            "formula": formula,
            "distance": (sv.value - val.value).norm(),
        });
    }
    Ok(Outcome { result, rows: None, verdict: None })
}

fn tate_fe_cmd(v: &Value) -> Result<Outcome, CliError> {
    let p = Params::new(v, &["disc", "s", "truncation", "tolerance"])?;
    let disc = p.i64("disc")?.unwrap_or(-4);
    let s = p.f64("s")?.unwrap_or(0.0);
    let x = p.u64("truncation")?.unwrap_or(50);
    let tol = p.f64("tolerance")?.unwrap_or(1e-6);
    let r = tate_fe_check(disc, s, x, tol).map_err(pre)?;
    Ok(Outcome {
        result: json!({
            "disc": r.disc,
            "s": r.s,
            "truncation": r.truncation,
            "j": r.j.value,
            "j_error_bound": r.j.err,
            "jhat": r.jhat.value,
            "jhat_error_bound": r.jhat.err,
            "diff": r.diff,
            "tail_bound": r.tail_bound,
            "tolerance": r.tolerance,
            "terms": r.terms,
        }),
        rows: None,
        verdict: Some(r.pass),
    })
}

/// Canonical scalar text of a JSON value for CSV cells.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

