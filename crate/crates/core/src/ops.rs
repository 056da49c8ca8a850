//! Primitive operation tables shared by the checker, the IR and the executor.

use crate::types::Type;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuantumOp {
    Qalloc,
    H,
    X,
    Z,
    T,
    Tdg,
    Rz,
    Cx,
    Zz,
    Measure,
    Discard,
}

impl QuantumOp {
    pub const ALL: [QuantumOp; 11] = [
        QuantumOp::Qalloc,
        QuantumOp::H,
        QuantumOp::X,
        QuantumOp::Z,
        QuantumOp::T,
        QuantumOp::Tdg,
        QuantumOp::Rz,
        QuantumOp::Cx,
        QuantumOp::Zz,
        QuantumOp::Measure,
        QuantumOp::Discard,
    ];

    /// IR operation name.
    pub fn name(self) -> &'static str {
        match self {
            QuantumOp::Qalloc => "qalloc",
            QuantumOp::H => "h",
            QuantumOp::X => "x",
            QuantumOp::Z => "z",
            QuantumOp::T => "t",
            QuantumOp::Tdg => "tdg",
            QuantumOp::Rz => "rz",
            QuantumOp::Cx => "cx",
            QuantumOp::Zz => "zz",
            QuantumOp::Measure => "measure",
            QuantumOp::Discard => "discard",
        }
    }

    pub fn from_name(s: &str) -> Option<QuantumOp> {
        QuantumOp::ALL.into_iter().find(|o| o.name() == s)
    }

    /// Name of the source-level builtin.
    pub fn source_name(self) -> &'static str {
        match self {
            QuantumOp::Qalloc => "Qubit",
            other => other.name(),
        }
    }

    pub fn from_source_name(s: &str) -> Option<QuantumOp> {
        QuantumOp::ALL.into_iter().find(|o| o.source_name() == s)
    }

    pub fn inputs(self) -> Vec<Type> {
        match self {
            QuantumOp::Qalloc => vec![],
            QuantumOp::Rz => vec![Type::Qubit, Type::Float],
            QuantumOp::Cx | QuantumOp::Zz => vec![Type::Qubit, Type::Qubit],
            _ => vec![Type::Qubit],
        }
    }

    /// IR out-ports. `discard` has none; at source level it returns `None`.
    pub fn outputs(self) -> Vec<Type> {
        match self {
            QuantumOp::Cx | QuantumOp::Zz => vec![Type::Qubit, Type::Qubit],
            QuantumOp::Measure => vec![Type::Bool],
            QuantumOp::Discard => vec![],
            _ => vec![Type::Qubit],
        }
    }

    /// Source-level result type: several outputs form a tuple.
    pub fn result_type(self) -> Type {
        let outs = self.outputs();
        match outs.len() {
            0 => Type::None,
            1 => outs.into_iter().next().unwrap(),
            _ => Type::Tuple(outs),
        }
    }

    pub fn function_type(self) -> Type {
        Type::function(self.inputs(), self.result_type())
    }

    pub fn is_single_qubit_gate(self) -> bool {
        matches!(
            self,
            QuantumOp::H | QuantumOp::X | QuantumOp::Z | QuantumOp::T | QuantumOp::Tdg | QuantumOp::Rz
        )
    }
}

/// Classical arithmetic on `int` or `float` operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    Neg,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Invert,
}

impl ArithOp {
    pub const ALL: [ArithOp; 14] = [
        ArithOp::Add,
        ArithOp::Sub,
        ArithOp::Mul,
        ArithOp::Div,
        ArithOp::FloorDiv,
        ArithOp::Mod,
        ArithOp::Pow,
        ArithOp::Neg,
        ArithOp::BitAnd,
        ArithOp::BitOr,
        ArithOp::BitXor,
        ArithOp::Shl,
        ArithOp::Shr,
        ArithOp::Invert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
            ArithOp::FloorDiv => "floordiv",
            ArithOp::Mod => "mod",
            ArithOp::Pow => "pow",
            ArithOp::Neg => "neg",
            ArithOp::BitAnd => "and",
            ArithOp::BitOr => "or",
            ArithOp::BitXor => "xor",
            ArithOp::Shl => "shl",
            ArithOp::Shr => "shr",
            ArithOp::Invert => "invert",
        }
    }

    pub fn from_name(s: &str) -> Option<ArithOp> {
        ArithOp::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            ArithOp::Neg | ArithOp::Invert => 1,
            _ => 2,
        }
    }

    /// Whether the op exists on `float` operands (all exist on `int` except
    /// true division).
    pub fn on_float(self) -> bool {
        matches!(
            self,
            ArithOp::Add | ArithOp::Sub | ArithOp::Mul | ArithOp::Div | ArithOp::Pow | ArithOp::Neg
        )
    }

    pub fn on_int(self) -> bool {
        self != ArithOp::Div
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for op in QuantumOp::ALL {
            assert_eq!(QuantumOp::from_name(op.name()), Some(op));
            assert_eq!(QuantumOp::from_source_name(op.source_name()), Some(op));
        }
        for op in ArithOp::ALL {
            assert_eq!(ArithOp::from_name(op.name()), Some(op));
        }
    }

    #[test]
    fn gate_signatures() {
        assert_eq!(QuantumOp::H.function_type(), Type::function(vec![Type::Qubit], Type::Qubit));
        assert_eq!(
            QuantumOp::Cx.result_type(),
            Type::Tuple(vec![Type::Qubit, Type::Qubit])
        );
        assert_eq!(QuantumOp::Measure.result_type(), Type::Bool);
        assert_eq!(QuantumOp::Discard.result_type(), Type::None);
    }
}
