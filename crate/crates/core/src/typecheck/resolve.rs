//! Fixed operator table over the builtin types, following the numeric tower
//! `bool < int < float`.

use crate::frontend::ast::{BinOp, CmpOp, UnaryOp};
use crate::ops::ArithOp;
use crate::types::Type;

#[derive(Clone, Debug, PartialEq)]
pub enum ResolvedOp {
    Arith(ArithOp),
    /// Unary `+`: only the coercion remains.
    Identity,
    Not,
    /// Comparison carried out at the (common) operand type.
    Cmp(CmpOp),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub op: ResolvedOp,
    /// Type each operand is coerced to, in operand order.
    pub operands: Vec<Type>,
    pub result: Type,
}

fn rank_type(rank: u8) -> Type {
    match rank {
        0 => Type::Bool,
        1 => Type::Int,
        _ => Type::Float,
    }
}

fn arith(op: BinOp) -> ArithOp {
    match op {
        BinOp::Add => ArithOp::Add,
        BinOp::Sub => ArithOp::Sub,
        BinOp::Mul => ArithOp::Mul,
        BinOp::Div => ArithOp::Div,
        BinOp::FloorDiv => ArithOp::FloorDiv,
        BinOp::Mod => ArithOp::Mod,
        BinOp::Pow => ArithOp::Pow,
        BinOp::BitAnd => ArithOp::BitAnd,
        BinOp::BitOr => ArithOp::BitOr,
        BinOp::BitXor => ArithOp::BitXor,
        BinOp::Shl => ArithOp::Shl,
        BinOp::Shr => ArithOp::Shr,
    }
}

fn mismatch(op: &str, l: &Type, r: &Type) -> String {
    format!("unsupported operand types for `{op}`: `{l}` and `{r}`")
}

pub fn resolve_binary(op: BinOp, l: &Type, r: &Type) -> Result<Resolution, String> {
    let (Some(lr), Some(rr)) = (l.numeric_rank(), r.numeric_rank()) else {
        return Err(mismatch(op.symbol(), l, r));
    };
    // Arithmetic never stays at `bool`.
    let rank = lr.max(rr).max(1);
    let aop = arith(op);
    let ty = match aop {
        ArithOp::Div => Type::Float,
        _ if rank == 2 && !aop.on_float() => return Err(mismatch(op.symbol(), l, r)),
        _ => rank_type(rank),
    };
    Ok(Resolution {
        op: ResolvedOp::Arith(aop),
        operands: vec![ty.clone(), ty.clone()],
        result: ty,
    })
}

pub fn resolve_unary(op: UnaryOp, t: &Type) -> Result<Resolution, String> {
    let err = || format!("unsupported operand type for `{}`: `{t}`", op.symbol());
    match op {
        UnaryOp::Not => {
            if *t == Type::Bool {
                Ok(Resolution {
                    op: ResolvedOp::Not,
                    operands: vec![Type::Bool],
                    result: Type::Bool,
                })
            } else {
                Err(format!("`not` needs a `bool` operand, found `{t}`"))
            }
        }
        UnaryOp::Neg | UnaryOp::Pos | UnaryOp::Invert => {
            let rank = t.numeric_rank().ok_or_else(err)?.max(1);
            if op == UnaryOp::Invert && rank == 2 {
                return Err(err());
            }
            let ty = rank_type(rank);
            Ok(Resolution {
                op: match op {
                    UnaryOp::Neg => ResolvedOp::Arith(ArithOp::Neg),
                    UnaryOp::Invert => ResolvedOp::Arith(ArithOp::Invert),
                    _ => ResolvedOp::Identity,
                },
                operands: vec![ty.clone()],
                result: ty,
            })
        }
    }
}

/// Types admitting `==`: scalars and immutable classical aggregates.
fn equatable(t: &Type) -> bool {
    match t {
        Type::Bool | Type::Int | Type::Float | Type::None => true,
        Type::Tuple(items) => items.iter().all(equatable),
        Type::List(e) => equatable(e),
        Type::Qubit | Type::Function(..) => false,
    }
}

pub fn resolve_compare(op: CmpOp, l: &Type, r: &Type) -> Result<Resolution, String> {
    let domain = match (l.numeric_rank(), r.numeric_rank()) {
        (Some(a), Some(b)) => rank_type(a.max(b)),
        _ => {
            if l.is_linear() || r.is_linear() {
                return Err(format!(
                    "linear values cannot be compared: `{l}` {} `{r}`",
                    op.symbol()
                ));
            }
            if !matches!(op, CmpOp::Eq | CmpOp::Ne) || l != r || !equatable(l) {
                return Err(mismatch(op.symbol(), l, r));
            }
            l.clone()
        }
    };
    Ok(Resolution {
        op: ResolvedOp::Cmp(op),
        operands: vec![domain.clone(), domain],
        result: Type::Bool,
    })
}

/// Numeric upcast allowed at call arguments and returns.
pub fn can_coerce(from: &Type, to: &Type) -> bool {
    from == to
        || matches!((from.numeric_rank(), to.numeric_rank()), (Some(a), Some(b)) if a < b && b >= 1)
}

/// Dunder method names accepted in method-call form on numeric receivers.
pub enum Dunder {
    Bin(BinOp),
    Cmp(CmpOp),
    Unary(UnaryOp),
    /// `__bool__` on a `bool`.
    Bool,
}

pub fn dunder(name: &str) -> Option<Dunder> {
    const BINS: [BinOp; 12] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::FloorDiv,
        BinOp::Mod,
        BinOp::Pow,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::Shl,
        BinOp::Shr,
    ];
    const CMPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
    if let Some(b) = BINS.iter().find(|b| b.dunder() == name) {
        return Some(Dunder::Bin(*b));
    }
    if let Some(c) = CMPS.iter().find(|c| c.dunder() == name) {
        return Some(Dunder::Cmp(*c));
    }
    match name {
        "__neg__" => Some(Dunder::Unary(UnaryOp::Neg)),
        "__pos__" => Some(Dunder::Unary(UnaryOp::Pos)),
        "__invert__" => Some(Dunder::Unary(UnaryOp::Invert)),
        "__bool__" => Some(Dunder::Bool),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn int_plus_float_coerces_lhs() {
        let r = resolve_binary(BinOp::Add, &Type::Int, &Type::Float).unwrap();
        assert_eq!(r.operands, vec![Type::Float, Type::Float]);
        assert_eq!(r.result, Type::Float);
        let r = resolve_binary(BinOp::Add, &Type::Int, &Type::Int).unwrap();
        assert_eq!(r.result, Type::Int);
    }

    #[test]
    fn division_and_int_only_ops() {
        assert_eq!(resolve_binary(BinOp::Div, &Type::Int, &Type::Int).unwrap().result, Type::Float);
        assert!(resolve_binary(BinOp::FloorDiv, &Type::Float, &Type::Int).is_err());
        assert!(resolve_binary(BinOp::BitAnd, &Type::Float, &Type::Int).is_err());
        assert_eq!(resolve_binary(BinOp::BitAnd, &Type::Bool, &Type::Bool).unwrap().result, Type::Int);
    }

    #[test]
    fn qubits_are_not_comparable() {
        let e = resolve_compare(CmpOp::Eq, &Type::Qubit, &Type::Qubit).unwrap_err();
        assert!(e.contains("Qubit"), "{e}");
        assert!(resolve_compare(CmpOp::Lt, &Type::None, &Type::None).is_err());
        assert!(resolve_compare(CmpOp::Eq, &Type::None, &Type::None).is_ok());
    }

    #[test]
    fn boolean_ops_need_bool() {
        assert!(resolve_unary(UnaryOp::Not, &Type::Int).is_err());
        assert_eq!(resolve_unary(UnaryOp::Neg, &Type::Bool).unwrap().result, Type::Int);
    }

    fn scalar() -> impl Strategy<Value = Type> {
        prop_oneof![Just(Type::Bool), Just(Type::Int), Just(Type::Float), Just(Type::None), Just(Type::Qubit)]
    }

    fn binop() -> impl Strategy<Value = BinOp> {
        prop::sample::select(vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::FloorDiv,
            BinOp::Mod,
            BinOp::Pow,
            BinOp::BitAnd,
            BinOp::BitOr,
            BinOp::BitXor,
            BinOp::Shl,
            BinOp::Shr,
        ])
    }

    proptest! {
        // Coercions only go up the tower and a float operand never yields
        // an integer result.
        #[test]
        fn coercion_is_monotone(op in binop(), l in scalar(), r in scalar()) {
            if let Ok(res) = resolve_binary(op, &l, &r) {
                prop_assert!(res.operands[0].numeric_rank() >= l.numeric_rank());
                prop_assert!(res.operands[1].numeric_rank() >= r.numeric_rank());
                if l == Type::Float || r == Type::Float {
                    prop_assert_eq!(res.result, Type::Float);
                }
            }
        }
    }
}
