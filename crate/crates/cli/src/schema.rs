//! A small JSON Schema subset, enough for the checked-in output schemas:
//! `type`, `required`, `properties`, `additionalProperties: false`,
//! `items`, `enum` and `minimum`.

use serde_json::Value;

pub const MANIFEST: &str = include_str!("../schemas/manifest.schema.json");
pub const RESIDUALS: &str = include_str!("../schemas/residuals.schema.json");
pub const SIMULATE: &str = include_str!("../schemas/simulate.schema.json");
pub const SPECTRUM: &str = include_str!("../schemas/spectrum.schema.json");
pub const ILLPOSED: &str = include_str!("../schemas/illposed.schema.json");
pub const NORMS_SCAN: &str = include_str!("../schemas/norms_scan.schema.json");
pub const MASS_CHECK: &str = include_str!("../schemas/mass_check.schema.json");

/// Schema text for an output file name, if that file has one.
pub fn for_file(name: &str) -> Option<&'static str> {
    Some(match name {
        "manifest.json" => MANIFEST,
        "residuals.json" => RESIDUALS,
        "simulate.json" => SIMULATE,
        "spectrum.json" => SPECTRUM,
        "illposed.json" => ILLPOSED,
        "norms_scan.json" => NORMS_SCAN,
        "mass_check.json" => MASS_CHECK,
        _ => return None,
    })
}

/// All violations, each prefixed by a JSON-pointer-like path.
pub fn validate(schema: &Value, doc: &Value) -> Vec<String> {
    let mut errs = Vec::new();
    check(schema, doc, "", &mut errs);
    errs
}

pub fn validate_str(schema: &str, doc: &Value) -> Vec<String> {
    match serde_json::from_str::<Value>(schema) {
        Ok(s) => validate(&s, doc),
        Err(e) => vec![format!("schema does not parse: {e}")],
    }
}

fn type_ok(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

fn check(schema: &Value, v: &Value, path: &str, errs: &mut Vec<String>) {
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(name) => type_ok(name, v),
            Value::Array(names) => names.iter().filter_map(Value::as_str).any(|n| type_ok(n, v)),
            _ => false,
        };
        if !ok {
            errs.push(format!("{path}: expected type {t}, got {v}"));
            return;
        }
    }
    if let Some(Value::Array(allowed)) = schema.get("enum") {
        if !allowed.contains(v) {
            errs.push(format!("{path}: {v} not in {allowed:?}"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errs.push(format!("{path}: {x} below minimum {min}"));
        }
    }
    if let Value::Object(map) = v {
        if let Some(Value::Array(req)) = schema.get("required") {
            for key in req.iter().filter_map(Value::as_str) {
                if !map.contains_key(key) {
                    errs.push(format!("{path}: missing '{key}'"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, val) in map {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => check(sub, val, &format!("{path}/{key}"), errs),
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errs.push(format!("{path}: unexpected '{key}'"))
                }
                None => {}
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (v, schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            check(sub, item, &format!("{path}/{i}"), errs);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn subset_semantics() {
        let s = json!({
            "type": "object",
            "required": ["a"],
            "additionalProperties": false,
            "properties": {
                "a": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "b": {"enum": ["x", "y"]},
                "c": {"type": ["number", "null"]}
            }
        });
        assert!(validate(&s, &json!({"a": [1, 2.5], "b": "x", "c": null})).is_empty());
        assert_eq!(validate(&s, &json!({"b": "x"})).len(), 1);
        assert_eq!(validate(&s, &json!({"a": [-1]})).len(), 1);
        assert_eq!(validate(&s, &json!({"a": [], "b": "z"})).len(), 1);
        assert_eq!(validate(&s, &json!({"a": [], "d": 1})).len(), 1);
        assert_eq!(validate(&s, &json!({"a": "no"})).len(), 1);
    }

    #[test]
    fn checked_in_schemas_parse() {
        for s in [MANIFEST, RESIDUALS, SIMULATE, SPECTRUM, ILLPOSED, NORMS_SCAN, MASS_CHECK] {
            let v: Value = serde_json::from_str(s).unwrap();
            assert_eq!(v["type"], "object");
        }
    }
}
