//! Compile-time constant values: literals, `py(...)` bindings and IR `Const`
//! payloads share this representation.

use crate::types::Type;
use serde_json::{json, Value as Json};

#[derive(Clone, Debug, PartialEq)]
pub enum ConstValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    None,
    Tuple(Vec<ConstValue>),
    /// Element type is kept so that empty lists stay typed.
    List(Type, Vec<ConstValue>),
}

impl ConstValue {
    pub fn ty(&self) -> Type {
        match self {
            ConstValue::Bool(_) => Type::Bool,
            ConstValue::Int(_) => Type::Int,
            ConstValue::Float(_) => Type::Float,
            ConstValue::None => Type::None,
            ConstValue::Tuple(items) => Type::Tuple(items.iter().map(ConstValue::ty).collect()),
            ConstValue::List(elem, _) => Type::list(elem.clone()),
        }
    }

    /// Untagged JSON form; the type travels separately as a tag.
    pub fn to_json(&self) -> Json {
        match self {
            ConstValue::Bool(b) => json!(b),
            ConstValue::Int(i) => json!(i),
            ConstValue::Float(f) => float_json(*f),
            ConstValue::None => Json::Null,
            ConstValue::Tuple(items) | ConstValue::List(_, items) => {
                Json::Array(items.iter().map(ConstValue::to_json).collect())
            }
        }
    }

    /// Reads an untagged JSON value at the given type. Ints are accepted
    /// where floats are expected; nothing else is coerced.
    pub fn from_json(ty: &Type, v: &Json) -> Result<ConstValue, String> {
        let mismatch = || format!("value `{v}` does not have type `{}`", ty.tag());
        match ty {
            Type::Bool => v.as_bool().map(ConstValue::Bool).ok_or_else(mismatch),
            Type::Int => v.as_i64().map(ConstValue::Int).ok_or_else(mismatch),
            Type::Float => match v {
                Json::Number(n) => n.as_f64().map(ConstValue::Float).ok_or_else(mismatch),
                // Non-finite floats have no JSON number form.
                Json::String(s) => match s.as_str() {
                    "inf" => Ok(ConstValue::Float(f64::INFINITY)),
                    "-inf" => Ok(ConstValue::Float(f64::NEG_INFINITY)),
                    "nan" => Ok(ConstValue::Float(f64::NAN)),
                    _ => Err(mismatch()),
                },
                _ => Err(mismatch()),
            },
            Type::None => v.is_null().then_some(ConstValue::None).ok_or_else(mismatch),
            Type::Tuple(elems) => {
                let items = v.as_array().ok_or_else(mismatch)?;
                if items.len() != elems.len() {
                    return Err(mismatch());
                }
                Ok(ConstValue::Tuple(
                    elems
                        .iter()
                        .zip(items)
                        .map(|(t, i)| ConstValue::from_json(t, i))
                        .collect::<Result<_, _>>()?,
                ))
            }
            Type::List(elem) => {
                let items = v.as_array().ok_or_else(mismatch)?;
                Ok(ConstValue::List(
                    (**elem).clone(),
                    items
                        .iter()
                        .map(|i| ConstValue::from_json(elem, i))
                        .collect::<Result<_, _>>()?,
                ))
            }
            Type::Qubit | Type::Function(..) => {
                Err(format!("type `{}` cannot be a constant", ty.tag()))
            }
        }
    }
}

pub(crate) fn float_json(f: f64) -> Json {
    if f.is_nan() {
        json!("nan")
    } else if f.is_infinite() {
        json!(if f > 0.0 { "inf" } else { "-inf" })
    } else {
        json!(f)
    }
}

/// Whether a type may appear as a constant.
pub fn is_constant_type(ty: &Type) -> bool {
    match ty {
        Type::Bool | Type::Int | Type::Float | Type::None => true,
        Type::Tuple(items) => items.iter().all(is_constant_type),
        Type::List(elem) => is_constant_type(elem),
        Type::Qubit | Type::Function(..) => false,
    }
}
