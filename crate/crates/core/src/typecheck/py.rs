//! `py(...)` support: the bindings file and the literal-arithmetic fallback.

use std::collections::BTreeMap;

use serde_json::Value as Json;

use crate::constant::{is_constant_type, ConstValue};
use crate::frontend::ast::normalize_key;
use crate::frontend::{Token, TokenKind};
use crate::types::Type;

/// Compile-time constants keyed by whitespace-normalized expression text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstBindings {
    map: BTreeMap<String, ConstValue>,
}

impl ConstBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: &str, value: ConstValue) {
        self.map.insert(normalize_key(key), value);
    }

    pub fn get(&self, key: &str) -> Option<&ConstValue> {
        self.map.get(&normalize_key(key))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Parses `{"<expr>": {"type": "<tag>", "value": <json>}, ...}`.
    pub fn from_json(doc: &Json) -> Result<Self, String> {
        let obj = doc
            .as_object()
            .ok_or("bindings file must contain a JSON object")?;
        let mut out = ConstBindings::new();
        for (key, entry) in obj {
            let tag = entry
                .get("type")
                .and_then(Json::as_str)
                .ok_or_else(|| format!("binding `{key}` needs a string `type`"))?;
            let value = entry
                .get("value")
                .ok_or_else(|| format!("binding `{key}` needs a `value`"))?;
            let ty = Type::parse_tag(tag).map_err(|e| format!("binding `{key}`: {e}"))?;
            if !is_constant_type(&ty) {
                return Err(format!("binding `{key}`: type `{tag}` cannot be a constant"));
            }
            let v = ConstValue::from_json(&ty, value).map_err(|e| format!("binding `{key}`: {e}"))?;
            out.insert(key, v);
        }
        Ok(out)
    }

    pub fn from_json_str(text: &str) -> Result<Self, String> {
        let doc: Json = serde_json::from_str(text).map_err(|e| format!("invalid bindings JSON: {e}"))?;
        Self::from_json(&doc)
    }
}

#[derive(Debug, PartialEq)]
pub enum LiteralError {
    /// The text uses something other than literals and `+ - * / ( )`.
    NotLiteral,
    Overflow,
    DivisionByZero,
}

/// Evaluates pure literal arithmetic with the numeric tower: `bool < int <
/// float`, `/` always yields a float.
pub fn eval_literal(tokens: &[Token]) -> Result<ConstValue, LiteralError> {
    let mut p = LitParser { toks: tokens, pos: 0 };
    let v = p.sum()?;
    if p.pos != tokens.len() {
        return Err(LiteralError::NotLiteral);
    }
    Ok(v)
}

struct LitParser<'a> {
    toks: &'a [Token],
    pos: usize,
}

#[derive(Clone, Copy)]
enum Num {
    Int(i64),
    Float(f64),
}

fn to_num(v: &ConstValue) -> Num {
    match v {
        ConstValue::Bool(b) => Num::Int(*b as i64),
        ConstValue::Int(i) => Num::Int(*i),
        ConstValue::Float(f) => Num::Float(*f),
        _ => unreachable!(),
    }
}

fn as_f64(n: Num) -> f64 {
    match n {
        Num::Int(i) => i as f64,
        Num::Float(f) => f,
    }
}

impl LitParser<'_> {
    fn peek_op(&self) -> Option<&str> {
        self.toks
            .get(self.pos)
            .filter(|t| matches!(t.kind, TokenKind::Op | TokenKind::Delim))
            .map(|t| t.text.as_str())
    }

    fn sum(&mut self) -> Result<ConstValue, LiteralError> {
        let mut lhs = self.product()?;
        while let Some(op @ ("+" | "-")) = self.peek_op() {
            let op = op.to_string();
            self.pos += 1;
            let rhs = self.product()?;
            lhs = binary(&op, &lhs, &rhs)?;
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<ConstValue, LiteralError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ("*" | "/")) = self.peek_op() {
            let op = op.to_string();
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = binary(&op, &lhs, &rhs)?;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ConstValue, LiteralError> {
        match self.peek_op() {
            Some("-") => {
                self.pos += 1;
                // `-9223372036854775808` is representable even though its
                // magnitude is not.
                if let Some(t) = self.toks.get(self.pos) {
                    if t.kind == TokenKind::Int && int_magnitude(&t.text) == Some(1u128 << 63) {
                        self.pos += 1;
                        return Ok(ConstValue::Int(i64::MIN));
                    }
                }
                let v = self.unary()?;
                match to_num(&v) {
                    Num::Int(i) => i.checked_neg().map(ConstValue::Int).ok_or(LiteralError::Overflow),
                    Num::Float(f) => Ok(ConstValue::Float(-f)),
                }
            }
            Some("+") => {
                self.pos += 1;
                let v = self.unary()?;
                Ok(match to_num(&v) {
                    Num::Int(i) => ConstValue::Int(i),
                    Num::Float(f) => ConstValue::Float(f),
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<ConstValue, LiteralError> {
        let tok = self.toks.get(self.pos).ok_or(LiteralError::NotLiteral)?;
        self.pos += 1;
        match tok.kind {
            TokenKind::Int => {
                let m = int_magnitude(&tok.text).ok_or(LiteralError::Overflow)?;
                i64::try_from(m).map(ConstValue::Int).map_err(|_| LiteralError::Overflow)
            }
            TokenKind::Float => tok
                .text
                .replace('_', "")
                .parse()
                .map(ConstValue::Float)
                .map_err(|_| LiteralError::NotLiteral),
            TokenKind::Bool => Ok(ConstValue::Bool(tok.text == "True")),
            TokenKind::Delim if tok.text == "(" => {
                let v = self.sum()?;
                if self.peek_op() != Some(")") {
                    return Err(LiteralError::NotLiteral);
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(LiteralError::NotLiteral),
        }
    }
}

fn int_magnitude(text: &str) -> Option<u128> {
    let clean = text.replace('_', "");
    let lower = clean.to_ascii_lowercase();
    if let Some(h) = lower.strip_prefix("0x") {
        u128::from_str_radix(h, 16).ok()
    } else if let Some(o) = lower.strip_prefix("0o") {
        u128::from_str_radix(o, 8).ok()
    } else if let Some(b) = lower.strip_prefix("0b") {
        u128::from_str_radix(b, 2).ok()
    } else {
        clean.parse().ok()
    }
}

fn binary(op: &str, a: &ConstValue, b: &ConstValue) -> Result<ConstValue, LiteralError> {
    let (x, y) = (to_num(a), to_num(b));
    if op == "/" {
        let d = as_f64(y);
        if d == 0.0 {
            return Err(LiteralError::DivisionByZero);
        }
        return Ok(ConstValue::Float(as_f64(x) / d));
    }
    match (x, y) {
        (Num::Int(i), Num::Int(j)) => {
            let r = match op {
                "+" => i.checked_add(j),
                "-" => i.checked_sub(j),
                "*" => i.checked_mul(j),
                _ => unreachable!(),
            };
            r.map(ConstValue::Int).ok_or(LiteralError::Overflow)
        }
        _ => {
            let (i, j) = (as_f64(x), as_f64(y));
            Ok(ConstValue::Float(match op {
                "+" => i + j,
                "-" => i - j,
                "*" => i * j,
                _ => unreachable!(),
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::tokenize;

    fn eval(text: &str) -> Result<ConstValue, LiteralError> {
        let mut toks = tokenize(text).unwrap();
        toks.retain(|t| !matches!(t.kind, TokenKind::Eof | TokenKind::Newline));
        eval_literal(&toks)
    }

    #[test]
    fn literal_arithmetic() {
        assert_eq!(eval("2 + 2"), Ok(ConstValue::Int(4)));
        assert_eq!(eval("(1 + 2) * 3 - 1"), Ok(ConstValue::Int(8)));
        assert_eq!(eval("1 / 2"), Ok(ConstValue::Float(0.5)));
        assert_eq!(eval("True + 1.5"), Ok(ConstValue::Float(2.5)));
        assert_eq!(eval("-9223372036854775808"), Ok(ConstValue::Int(i64::MIN)));
        assert_eq!(eval("9223372036854775807 + 1"), Err(LiteralError::Overflow));
        assert_eq!(eval("1 / 0"), Err(LiteralError::DivisionByZero));
        assert_eq!(eval("g.edges()"), Err(LiteralError::NotLiteral));
        assert_eq!(eval("2 ** 3"), Err(LiteralError::NotLiteral));
    }

    #[test]
    fn bindings_keys_are_normalized() {
        let b = ConstBindings::from_json_str(
            r#"{"g.edges()": {"type": "list[tuple[int,int]]", "value": [[0,1],[1,2]]},
                "n  +  1": {"type": "int", "value": 3}}"#,
        )
        .unwrap();
        assert!(b.get("g.edges()").is_some());
        assert_eq!(b.get("n + 1"), Some(&ConstValue::Int(3)));
        assert!(ConstBindings::from_json_str(r#"{"q": {"type": "qubit", "value": 0}}"#).is_err());
        assert!(ConstBindings::from_json_str(r#"{"q": {"type": "int", "value": 1.5}}"#).is_err());
    }
}
