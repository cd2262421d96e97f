//! Values exchanged with workers and their JSON encodings.
//!
//! Matrices travel either as nested lists or in the packed form
//! `{"shape":[r,c],"dtype":"f64","data_b64":...}` (little-endian, row-major).
//! Decoding accepts both; encoding always packs matrices.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde_json::{json, Map, Number, Value as Json};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    IntVector(Vec<i64>),
    Vector(Vec<f64>),
    Matrix(Matrix),
    /// Tuples and heterogeneous lists.
    List(Vec<Value>),
}

/// Named call arguments in declaration order.
pub type Args = Vec<(String, Value)>;

const NAN: &str = "\u{0}NaN";
const POS_INF: &str = "\u{0}Infinity";
const NEG_INF: &str = "\u{0}-Infinity";

fn special(s: &str) -> Option<f64> {
    match s {
        NAN => Some(f64::NAN),
        POS_INF => Some(f64::INFINITY),
        NEG_INF => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

/// Rewrites the bare `NaN`, `Infinity` and `-Infinity` tokens that Python's
/// json module emits into sentinel strings so strict JSON parsing succeeds.
pub fn tolerate_non_finite(line: &str) -> std::borrow::Cow<'_, str> {
    if !(line.contains("NaN") || line.contains("Infinity")) {
        return std::borrow::Cow::Borrowed(line);
    }
    let mut out = String::with_capacity(line.len() + 16);
    let mut in_str = false;
    let mut escaped = false;
    let mut rest = line;
    while let Some(ch) = rest.chars().next() {
        if in_str {
            out.push(ch);
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_str = false;
            }
            rest = &rest[ch.len_utf8()..];
            continue;
        }
        let token = [("-Infinity", NEG_INF), ("Infinity", POS_INF), ("NaN", NAN)]
            .into_iter()
            .find(|(t, _)| rest.starts_with(t));
        if let Some((t, sentinel)) = token {
            out.push_str(&serde_json::to_string(sentinel).expect("string"));
            rest = &rest[t.len()..];
            continue;
        }
        if ch == '"' {
            in_str = true;
        }
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    std::borrow::Cow::Owned(out)
}

fn float_of(j: &Json) -> Option<f64> {
    match j {
        Json::Number(n) => n.as_f64(),
        Json::String(s) => special(s),
        _ => None,
    }
}

fn is_int(j: &Json) -> bool {
    matches!(j, Json::Number(n) if n.is_i64() || n.is_u64())
}

fn unpack(obj: &Map<String, Json>) -> Result<Value, String> {
    let shape: Vec<usize> = obj
        .get("shape")
        .and_then(Json::as_array)
        .ok_or("packed array without shape")?
        .iter()
        .map(|d| d.as_u64().map(|v| v as usize).ok_or("bad shape entry"))
        .collect::<Result<_, _>>()?;
    match obj.get("dtype").and_then(Json::as_str) {
        Some("f64") | None => {}
        Some(other) => return Err(format!("unsupported dtype {other}")),
    }
    let raw = B64
        .decode(obj.get("data_b64").and_then(Json::as_str).ok_or("packed array without data_b64")?)
        .map_err(|e| format!("bad base64: {e}"))?;
    if raw.len() % 8 != 0 {
        return Err("packed data length not a multiple of 8".into());
    }
    let data: Vec<f64> =
        raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    match shape.as_slice() {
        [n] if *n == data.len() => Ok(Value::Vector(data)),
        [r, c] => Matrix::from_vec(*r, *c, data).map(Value::Matrix).ok_or_else(|| "packed shape mismatch".into()),
        _ => Err(format!("unsupported packed shape {shape:?}")),
    }
}

impl Value {
    pub fn from_json(j: &Json) -> Result<Value, String> {
        match j {
            Json::Number(n) => Ok(match n.as_i64() {
                Some(i) if is_int(j) => Value::Int(i),
                _ => Value::Float(n.as_f64().ok_or("number out of range")?),
            }),
            Json::String(s) => special(s).map(Value::Float).ok_or_else(|| format!("unexpected string {s:?}")),
            Json::Bool(b) => Ok(Value::Int(i64::from(*b))),
            Json::Null => Ok(Value::Float(f64::NAN)),
            Json::Object(obj) => unpack(obj),
            Json::Array(items) => {
                if items.iter().all(is_int) && !items.is_empty() {
                    return Ok(Value::IntVector(items.iter().map(|v| v.as_i64().unwrap_or(i64::MAX)).collect()));
                }
                if let Some(v) = items.iter().map(float_of).collect::<Option<Vec<f64>>>() {
                    return Ok(Value::Vector(v));
                }
                let parts = items.iter().map(Value::from_json).collect::<Result<Vec<_>, _>>()?;
                let rows: Option<Vec<Vec<f64>>> = parts.iter().map(Value::numeric_vector).collect();
                if let Some(rows) = rows.filter(|r| !r.is_empty() && !r[0].is_empty()) {
                    if let Some(m) = Matrix::from_rows(&rows) {
                        return Ok(Value::Matrix(m));
                    }
                }
                Ok(Value::List(parts))
            }
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(i) => json!(i),
            Value::Float(f) => float_json(*f),
            Value::IntVector(v) => json!(v),
            Value::Vector(v) => Json::Array(v.iter().map(|&f| float_json(f)).collect()),
            Value::Matrix(m) => pack(m),
            Value::List(items) => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }

    fn numeric_vector(&self) -> Option<Vec<f64>> {
        match self {
            Value::IntVector(v) => Some(v.iter().map(|&i| i as f64).collect()),
            Value::Vector(v) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Float(f) if f.fract() == 0.0 && f.is_finite() => Some(*f as i64),
            _ => None,
        }
    }

    /// A one-dimensional numeric result. Empty lists decode as empty vectors.
    pub fn as_f64_vec(&self) -> Option<Vec<f64>> {
        match self {
            Value::List(items) if items.is_empty() => Some(Vec::new()),
            Value::Matrix(m) if m.rows() == 1 => Some(m.row(0).to_vec()),
            other => other.numeric_vector(),
        }
    }

    /// Integer entries; floats are accepted only when integral.
    pub fn as_i64_vec(&self) -> Option<Vec<i64>> {
        match self {
            Value::IntVector(v) => Some(v.clone()),
            Value::Vector(v) => v.iter().map(|&f| Value::Float(f).as_i64()).collect(),
            Value::List(items) if items.is_empty() => Some(Vec::new()),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<Matrix> {
        match self {
            Value::Matrix(m) => Some(m.clone()),
            _ => None,
        }
    }

    /// Components of a tuple result.
    pub fn as_tuple(&self) -> Option<Vec<Value>> {
        match self {
            Value::List(items) => Some(items.clone()),
            // A pair of equal-length vectors decodes as a two-row matrix.
            Value::Matrix(m) => Some((0..m.rows()).map(|r| Value::Vector(m.row(r).to_vec())).collect()),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::IntVector(_) => "int vector",
            Value::Vector(_) => "vector",
            Value::Matrix(_) => "matrix",
            Value::List(_) => "list",
        }
    }
}

fn float_json(f: f64) -> Json {
    match Number::from_f64(f) {
        Some(n) => Json::Number(n),
        None if f.is_nan() => Json::String(NAN.into()),
        None if f > 0.0 => Json::String(POS_INF.into()),
        None => Json::String(NEG_INF.into()),
    }
}

pub fn pack(m: &Matrix) -> Json {
    let mut bytes = Vec::with_capacity(m.as_slice().len() * 8);
    for v in m.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    json!({ "shape": [m.rows(), m.cols()], "dtype": "f64", "data_b64": B64.encode(bytes) })
}

pub fn args_to_json(args: &[(String, Value)]) -> Json {
    Json::Object(args.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

pub fn args_from_json(j: &Json) -> Result<Args, String> {
    let obj = j.as_object().ok_or("args must be an object")?;
    obj.iter().map(|(k, v)| Ok((k.clone(), Value::from_json(v)?))).collect()
}

/// Serializes a message as one line, writing non-finite floats as the bare
/// tokens Python emits.
pub fn to_line(j: &Json) -> String {
    let s = serde_json::to_string(j).expect("json serialization");
    if !s.contains("\\u0000") {
        return s;
    }
    s.replace(&format!("\"\\u0000{}\"", "-Infinity"), "-Infinity")
        .replace(&format!("\"\\u0000{}\"", "Infinity"), "Infinity")
        .replace(&format!("\"\\u0000{}\"", "NaN"), "NaN")
}

/// Parses one protocol line, tolerating bare non-finite tokens.
pub fn from_line(line: &str) -> Result<Json, String> {
    serde_json::from_str(&tolerate_non_finite(line)).map_err(|e| format!("invalid JSON: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packed_and_nested_agree() {
        let m = Matrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 4.0]]).unwrap();
        let packed = pack(&m);
        assert_eq!(Value::from_json(&packed).unwrap(), Value::Matrix(m.clone()));
        let nested = json!([[1.0, 2.5], [-3, 4]]);
        assert_eq!(Value::from_json(&nested).unwrap(), Value::Matrix(m));
    }

    #[test]
    fn packed_bytes_are_little_endian_row_major() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let j = pack(&m);
        let raw = B64.decode(j["data_b64"].as_str().unwrap()).unwrap();
        assert_eq!(&raw[..8], &1.0f64.to_le_bytes());
        assert_eq!(&raw[8..], &2.0f64.to_le_bytes());
        assert_eq!(j["shape"], json!([1, 2]));
    }

    #[test]
    fn python_tokens() {
        let j = from_line(r#"{"ok":true,"result":[1.0,NaN,-Infinity,Infinity],"note":"NaN stays"}"#).unwrap();
        assert_eq!(j["note"], "NaN stays");
        let v = Value::from_json(&j["result"]).unwrap().as_f64_vec().unwrap();
        assert!(v[1].is_nan());
        assert_eq!(v[2], f64::NEG_INFINITY);
        assert_eq!(v[3], f64::INFINITY);
        let line = to_line(&Value::Vector(vec![f64::NAN, 1.0, f64::NEG_INFINITY]).to_json());
        assert_eq!(line, "[NaN,1.0,-Infinity]");
        assert!(from_line("[1, nope]").is_err());
    }

    #[test]
    fn tuple_and_scalars() {
        let j = json!([[[1.0, 2.0], [3.0, 4.0]], [0, 1]]);
        let parts = Value::from_json(&j).unwrap().as_tuple().unwrap();
        assert_eq!(parts.len(), 2);
        assert!(parts[0].as_matrix().is_some());
        assert_eq!(parts[1].as_i64_vec().unwrap(), vec![0, 1]);
        assert_eq!(Value::from_json(&json!(3)).unwrap(), Value::Int(3));
        assert_eq!(Value::from_json(&json!(3.5)).unwrap(), Value::Float(3.5));
        assert_eq!(Value::from_json(&json!([])).unwrap().as_f64_vec(), Some(vec![]));
    }

    proptest! {
        #[test]
        fn matrix_roundtrip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let m = Matrix::from_fn(rows, cols, |i, j| ((seed ^ (i * 31 + j) as u64) % 1000) as f64 / 7.0 - 50.0);
            let line = to_line(&Value::Matrix(m.clone()).to_json());
            let back = Value::from_json(&from_line(&line).unwrap()).unwrap();
            prop_assert_eq!(back, Value::Matrix(m));
        }

        #[test]
        fn vector_roundtrip(v in proptest::collection::vec(-1e6f64..1e6, 1..20)) {
            let line = to_line(&Value::Vector(v.clone()).to_json());
            let back = Value::from_json(&from_line(&line).unwrap()).unwrap().as_f64_vec().unwrap();
            prop_assert_eq!(back, v);
        }
    }
}
