//! JSON helpers: every rational is written as an exact `"n/d"` string with
//! a sibling `<key>_decimal` number rendered to 12 significant digits.

use serde_json::{Map, Number, Value};

use crate::rational::{decimal12, Rational};

pub type Object = Map<String, Value>;

pub fn decimal_value(v: f64) -> Value {
    decimal12(v).parse::<f64>().ok().and_then(Number::from_f64).map(Value::Number).unwrap_or(Value::Null)
}

pub fn put_rational(obj: &mut Object, key: &str, v: &Rational) {
    obj.insert(key.to_string(), Value::String(v.to_string()));
    obj.insert(format!("{key}_decimal"), decimal_value(v.to_f64()));
}

pub fn put_opt_rational(obj: &mut Object, key: &str, v: Option<&Rational>) {
    match v {
        Some(v) => put_rational(obj, key, v),
        None => {
            obj.insert(key.to_string(), Value::Null);
            obj.insert(format!("{key}_decimal"), Value::Null);
        }
    }
}

pub fn put_real(obj: &mut Object, key: &str, v: f64) {
    obj.insert(key.to_string(), decimal_value(v));
}

pub fn put<V: Into<Value>>(obj: &mut Object, key: &str, v: V) {
    obj.insert(key.to_string(), v.into());
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values always serialize");
    s.push('\n');
    s
}
