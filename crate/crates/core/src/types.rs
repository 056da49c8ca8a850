//! The semantic type lattice and its textual tag form.
//!
//! Tags are the spelling used by bindings files, IR documents and CLI
//! arguments: `int`, `float`, `bool`, `none`, `qubit`, `tuple[int,float]`,
//! `list[qubit]` and `callable[[qubit,float],qubit]`.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Int,
    Float,
    None,
    Tuple(Vec<Type>),
    List(Box<Type>),
    Qubit,
    Function(Vec<Type>, Box<Type>),
}

impl Type {
    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    pub fn function(params: Vec<Type>, result: Type) -> Type {
        Type::Function(params, Box::new(result))
    }

    /// Qubits are linear, and so is any tuple or list that holds one.
    /// Functions never are.
    pub fn is_linear(&self) -> bool {
        match self {
            Type::Qubit => true,
            Type::Tuple(elems) => elems.iter().any(Type::is_linear),
            Type::List(elem) => elem.is_linear(),
            _ => false,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Bool | Type::Int | Type::Float)
    }

    /// Position in the numeric tower `bool < int < float`.
    pub fn numeric_rank(&self) -> Option<u8> {
        match self {
            Type::Bool => Some(0),
            Type::Int => Some(1),
            Type::Float => Some(2),
            _ => None,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Type::Bool => "bool".into(),
            Type::Int => "int".into(),
            Type::Float => "float".into(),
            Type::None => "none".into(),
            Type::Qubit => "qubit".into(),
            Type::Tuple(elems) => format!(
                "tuple[{}]",
                elems.iter().map(Type::tag).collect::<Vec<_>>().join(",")
            ),
            Type::List(elem) => format!("list[{}]", elem.tag()),
            Type::Function(params, result) => format!(
                "callable[[{}],{}]",
                params.iter().map(Type::tag).collect::<Vec<_>>().join(","),
                result.tag()
            ),
        }
    }

    pub fn parse_tag(text: &str) -> Result<Type, String> {
        let mut parser = TagParser { text: text.as_bytes(), pos: 0 };
        let ty = parser.parse()?;
        parser.skip_ws();
        if parser.pos != parser.text.len() {
            return Err(format!("trailing characters in type tag `{text}`"));
        }
        Ok(ty)
    }
}

/// Source-level spelling, as a user would write it in an annotation.
impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("bool"),
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::None => f.write_str("None"),
            Type::Qubit => f.write_str("Qubit"),
            Type::Tuple(elems) => {
                f.write_str("tuple[")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str("]")
            }
            Type::List(elem) => write!(f, "list[{elem}]"),
            Type::Function(params, result) => {
                f.write_str("Callable[[")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "], {result}]")
            }
        }
    }
}

struct TagParser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl TagParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.text.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), String> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(format!("expected `{}` at offset {} in type tag", c as char, self.pos))
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.text[start..self.pos]).into_owned()
    }

    /// Comma-separated types up to (and consuming) `]`.
    fn list_until_close(&mut self) -> Result<Vec<Type>, String> {
        let mut out = Vec::new();
        if self.eat(b']') {
            return Ok(out);
        }
        loop {
            out.push(self.parse()?);
            if self.eat(b']') {
                return Ok(out);
            }
            self.expect(b',')?;
        }
    }

    fn parse(&mut self) -> Result<Type, String> {
        let name = self.ident();
        match name.as_str() {
            "int" => Ok(Type::Int),
            "float" => Ok(Type::Float),
            "bool" => Ok(Type::Bool),
            "none" => Ok(Type::None),
            "qubit" => Ok(Type::Qubit),
            "tuple" => {
                self.expect(b'[')?;
                Ok(Type::Tuple(self.list_until_close()?))
            }
            "list" => {
                self.expect(b'[')?;
                let elem = self.parse()?;
                self.expect(b']')?;
                Ok(Type::list(elem))
            }
            "callable" => {
                self.expect(b'[')?;
                self.expect(b'[')?;
                let params = self.list_until_close()?;
                self.expect(b',')?;
                let result = self.parse()?;
                self.expect(b']')?;
                Ok(Type::function(params, result))
            }
            "" => Err(format!("expected a type tag at offset {}", self.pos)),
            other => Err(format!("unknown type tag `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linearity_predicate() {
        assert!(Type::Qubit.is_linear());
        assert!(Type::list(Type::Qubit).is_linear());
        assert!(Type::Tuple(vec![Type::Int, Type::Qubit]).is_linear());
        assert!(!Type::Tuple(vec![Type::Int, Type::Float]).is_linear());
        assert!(!Type::function(vec![Type::Qubit], Type::Qubit).is_linear());
    }

    #[test]
    fn parses_binding_tags() {
        assert_eq!(
            Type::parse_tag("list[tuple[int,int]]").unwrap(),
            Type::list(Type::Tuple(vec![Type::Int, Type::Int]))
        );
        assert_eq!(Type::parse_tag(" tuple[ ] ").unwrap(), Type::Tuple(vec![]));
        assert!(Type::parse_tag("list[str]").is_err());
        assert!(Type::parse_tag("int]").is_err());
    }

    pub(crate) fn arb_type() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![
            Just(Type::Bool),
            Just(Type::Int),
            Just(Type::Float),
            Just(Type::None),
            Just(Type::Qubit),
        ];
        leaf.prop_recursive(3, 16, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..3).prop_map(Type::Tuple),
                inner.clone().prop_map(Type::list),
                (prop::collection::vec(inner.clone(), 0..3), inner)
                    .prop_map(|(p, r)| Type::function(p, r)),
            ]
        })
    }

    proptest! {
        #[test]
        fn tag_roundtrip(ty in arb_type()) {
            prop_assert_eq!(Type::parse_tag(&ty.tag()).unwrap(), ty);
        }
    }
}
