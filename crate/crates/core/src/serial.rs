//! Canonical JSON forms. Rationals are strings `"n"` or `"n/d"`, field
//! elements are `{"a": .., "b": ..}` (or a bare rational), and maps are
//! emitted with sorted keys so equal values serialize to equal bytes.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::lattice::{Lattice, LatticeError, Ring};
use crate::linalg::{Mat, Poly};
use crate::orbital::LaurentX;
use crate::padic::{fmt_rat, parse_rat, QuadExtElem, Rat};
use crate::series::{LogLinear, QExp, SeriesError};

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("{field}: expected {expected}")]
    Schema { field: String, expected: &'static str },
    #[error("{field}: {source}")]
    Value { field: String, source: Box<dyn std::error::Error + Send + Sync> },
}

fn schema(field: &str, expected: &'static str) -> SerialError {
    SerialError::Schema { field: field.to_string(), expected }
}

fn obj<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>, SerialError> {
    v.as_object().ok_or_else(|| schema(field, "an object"))
}

pub fn rat_to_json(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

/// Accepts `"n/d"`, `"n"` or a JSON integer.
pub fn rat_from_json(v: &Value, field: &str) -> Result<Rat, SerialError> {
    match v {
        Value::String(s) => {
            parse_rat(s).map_err(|e| SerialError::Value { field: field.to_string(), source: Box::new(e) })
        }
        Value::Number(n) => n
            .as_i64()
            .map(|n| Rat::from_integer(n.into()))
            .ok_or_else(|| schema(field, "an integer or a rational string")),
        _ => Err(schema(field, "a rational string")),
    }
}

pub fn quad_to_json(x: &QuadExtElem) -> Value {
    json!({ "a": fmt_rat(&x.a), "b": fmt_rat(&x.b) })
}

pub fn quad_from_json(v: &Value, d: i64, field: &str) -> Result<QuadExtElem, SerialError> {
    match v {
        Value::Object(m) => {
            let a = m.get("a").map(|x| rat_from_json(x, field)).transpose()?.unwrap_or_default();
            let b = m.get("b").map(|x| rat_from_json(x, field)).transpose()?.unwrap_or_default();
            Ok(QuadExtElem::new(a, b, d))
        }
        _ => Ok(QuadExtElem::from_rat(rat_from_json(v, field)?, d)),
    }
}

pub fn quad_vec_from_json(v: &Value, d: i64, field: &str) -> Result<Vec<QuadExtElem>, SerialError> {
    v.as_array()
        .ok_or_else(|| schema(field, "an array"))?
        .iter()
        .map(|x| quad_from_json(x, d, field))
        .collect()
}

/// Coefficients low to high, leading coefficient included.
pub fn poly_from_json(v: &Value, d: i64, field: &str) -> Result<Poly, SerialError> {
    let c = quad_vec_from_json(v, d, field)?;
    if c.is_empty() {
        return Err(schema(field, "a nonempty coefficient array"));
    }
    Ok(Poly::new(c, d))
}

pub fn mat_to_json(m: &Mat) -> Value {
    Value::Array((0..m.rows).map(|i| Value::Array((0..m.cols).map(|j| quad_to_json(&m[(i, j)])).collect())).collect())
}

pub fn mat_from_json(v: &Value, d: i64, field: &str) -> Result<Mat, SerialError> {
    let rows: Vec<Vec<QuadExtElem>> = v
        .as_array()
        .ok_or_else(|| schema(field, "an array of rows"))?
        .iter()
        .map(|r| quad_vec_from_json(r, d, field))
        .collect::<Result<_, _>>()?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(schema(field, "a rectangular matrix"));
    }
    Ok(Mat::from_rows(rows, d))
}

pub fn lattice_to_json(l: &Lattice) -> Value {
    json!({ "basis": mat_to_json(l.basis()) })
}

pub fn lattice_from_json(v: &Value, ring: Ring, p: u64, d: i64, field: &str) -> Result<Lattice, SerialError> {
    let basis = mat_from_json(obj(v, field)?.get("basis").ok_or_else(|| schema(field, "a basis"))?, d, field)?;
    Lattice::new(ring, basis, p)
        .map_err(|e: LatticeError| SerialError::Value { field: field.to_string(), source: Box::new(e) })
}

pub fn laurent_to_json(x: &LaurentX) -> Value {
    let coeffs: Map<String, Value> = x.coeffs.iter().map(|(k, c)| (k.to_string(), rat_to_json(c))).collect();
    json!({ "coeffs": coeffs })
}

pub fn laurent_from_json(v: &Value, field: &str) -> Result<LaurentX, SerialError> {
    let mut out = LaurentX::zero();
    let coeffs = obj(obj(v, field)?.get("coeffs").ok_or_else(|| schema(field, "coeffs"))?, field)?;
    for (k, c) in coeffs {
        let k: i64 = k.parse().map_err(|_| schema(field, "integer exponents"))?;
        out.add_term(k, rat_from_json(c, field)?);
    }
    Ok(out)
}

pub fn loglinear_to_json(x: &LogLinear) -> Value {
    let logs: Map<String, Value> = x.logs.iter().map(|(p, c)| (p.to_string(), rat_to_json(c))).collect();
    json!({ "constant": rat_to_json(&x.constant), "logs": logs })
}

pub fn loglinear_from_json(v: &Value, field: &str) -> Result<LogLinear, SerialError> {
    let m = obj(v, field)?;
    let constant = m.get("constant").map(|c| rat_from_json(c, field)).transpose()?.unwrap_or_default();
    let mut out = LogLinear::constant(constant);
    if let Some(logs) = m.get("logs") {
        for (p, c) in obj(logs, field)? {
            let p: u64 = p.parse().map_err(|_| schema(field, "prime keys"))?;
            out = out.add(&LogLinear::log_term(p, rat_from_json(c, field)?));
        }
    }
    Ok(out)
}

/// Exponents are keyed by their canonical rational string; `BTreeMap` on
/// `Rat` fixes the order before the keys become strings.
pub fn qexp_to_json(f: &QExp) -> Value {
    let coeffs: Map<String, Value> = f.coeffs().iter().map(|(xi, c)| (fmt_rat(xi), loglinear_to_json(c))).collect();
    json!({ "weight": f.weight, "level": f.level, "coeffs": coeffs })
}

pub fn qexp_from_json(v: &Value) -> Result<QExp, SerialError> {
    let m = obj(v, "qexp")?;
    let weight = m.get("weight").and_then(Value::as_i64).ok_or_else(|| schema("weight", "an integer"))?;
    let level = m.get("level").and_then(Value::as_u64).ok_or_else(|| schema("level", "a positive integer"))?;
    let mut out = QExp::new(weight, level);
    let coeffs: BTreeMap<String, Value> = match m.get("coeffs") {
        Some(c) => obj(c, "coeffs")?.clone().into_iter().collect(),
        None => BTreeMap::new(),
    };
    for (xi, c) in &coeffs {
        let x = parse_rat(xi).map_err(|e| SerialError::Value { field: "coeffs".into(), source: Box::new(e) })?;
        out.add_term(x, &loglinear_from_json(c, xi)?)
            .map_err(|e: SeriesError| SerialError::Value { field: xi.clone(), source: Box::new(e) })?;
    }
    Ok(out)
}
