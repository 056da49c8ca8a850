//! Classical arithmetic: signed 64-bit integers that trap on overflow and
//! IEEE floats, with the source language's floor/modulo conventions.

use super::ErrorKind;
use crate::ops::ArithOp;

pub(super) type Fault = (ErrorKind, String);

fn overflow(op: ArithOp) -> Fault {
    (ErrorKind::IntegerOverflow, format!("integer overflow in `{}`", op.name()))
}

fn div_zero() -> Fault {
    (ErrorKind::DivisionByZero, "division by zero".into())
}

pub(super) fn int_op(op: ArithOp, args: &[i64]) -> Result<i64, Fault> {
    let a = args[0];
    let b = args.get(1).copied().unwrap_or(0);
    let r = match op {
        ArithOp::Add => a.checked_add(b),
        ArithOp::Sub => a.checked_sub(b),
        ArithOp::Mul => a.checked_mul(b),
        ArithOp::Neg => a.checked_neg(),
        ArithOp::Invert => Some(!a),
        ArithOp::BitAnd => Some(a & b),
        ArithOp::BitOr => Some(a | b),
        ArithOp::BitXor => Some(a ^ b),
        ArithOp::FloorDiv => {
            if b == 0 {
                return Err(div_zero());
            }
            a.checked_div(b).map(|q| if a % b != 0 && (a < 0) != (b < 0) { q - 1 } else { q })
        }
        ArithOp::Mod => {
            if b == 0 {
                return Err(div_zero());
            }
            // `i64::MIN % -1` overflows in Rust but the result is 0.
            let r = a.checked_rem(b).unwrap_or(0);
            Some(if r != 0 && (r < 0) != (b < 0) { r + b } else { r })
        }
        ArithOp::Pow => {
            if b < 0 {
                return Err((ErrorKind::InvalidOperand, "negative integer exponent".into()));
            }
            match a {
                0 => Some(if b == 0 { 1 } else { 0 }),
                1 => Some(1),
                -1 => Some(if b % 2 == 0 { 1 } else { -1 }),
                _ if b > 63 => None,
                _ => a.checked_pow(b as u32),
            }
        }
        ArithOp::Shl => {
            if b < 0 {
                return Err((ErrorKind::InvalidOperand, "negative shift count".into()));
            }
            if a == 0 {
                Some(0)
            } else if b >= 64 {
                None
            } else {
                let r = a << b;
                (r >> b == a).then_some(r)
            }
        }
        ArithOp::Shr => {
            if b < 0 {
                return Err((ErrorKind::InvalidOperand, "negative shift count".into()));
            }
            Some(a >> b.min(63))
        }
        ArithOp::Div => unreachable!("true division is a float op"),
    };
    r.ok_or_else(|| overflow(op))
}

pub(super) fn float_op(op: ArithOp, args: &[f64]) -> Result<f64, Fault> {
    let a = args[0];
    let b = args.get(1).copied().unwrap_or(0.0);
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Neg => -a,
        ArithOp::Div => {
            if b == 0.0 {
                return Err(div_zero());
            }
            a / b
        }
        ArithOp::Pow => {
            if a == 0.0 && b < 0.0 {
                return Err(div_zero());
            }
            a.powf(b)
        }
        other => unreachable!("`{}` has no float form", other.name()),
    })
}

/// `int(x)` truncates toward zero.
pub(super) fn float_to_int(x: f64) -> Result<i64, Fault> {
    if x.is_nan() {
        return Err((ErrorKind::InvalidOperand, "cannot convert NaN to int".into()));
    }
    let t = x.trunc();
    // 2^63 is exactly representable; anything at or above it overflows.
    if !(-9_223_372_036_854_775_808.0..9_223_372_036_854_775_808.0).contains(&t) {
        return Err((ErrorKind::IntegerOverflow, format!("float {x} does not fit in int")));
    }
    Ok(t as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_semantics() {
        assert_eq!(int_op(ArithOp::FloorDiv, &[7, 2]), Ok(3));
        assert_eq!(int_op(ArithOp::FloorDiv, &[-7, 2]), Ok(-4));
        assert_eq!(int_op(ArithOp::FloorDiv, &[7, -2]), Ok(-4));
        assert_eq!(int_op(ArithOp::Mod, &[-7, 2]), Ok(1));
        assert_eq!(int_op(ArithOp::Mod, &[7, -2]), Ok(-1));
        assert_eq!(int_op(ArithOp::Mod, &[i64::MIN, -1]), Ok(0));
        assert_eq!(int_op(ArithOp::FloorDiv, &[i64::MIN, -1]).unwrap_err().0, ErrorKind::IntegerOverflow);
    }

    #[test]
    fn overflow_traps() {
        assert_eq!(int_op(ArithOp::Add, &[i64::MAX, 1]).unwrap_err().0, ErrorKind::IntegerOverflow);
        assert_eq!(int_op(ArithOp::Sub, &[i64::MIN, 1]).unwrap_err().0, ErrorKind::IntegerOverflow);
        assert_eq!(int_op(ArithOp::Neg, &[i64::MIN]).unwrap_err().0, ErrorKind::IntegerOverflow);
        assert_eq!(int_op(ArithOp::Shl, &[1, 63]).unwrap_err().0, ErrorKind::IntegerOverflow);
        assert_eq!(int_op(ArithOp::Shl, &[-1, 63]), Ok(i64::MIN));
        assert_eq!(int_op(ArithOp::Pow, &[2, 62]), Ok(1 << 62));
        assert_eq!(int_op(ArithOp::Pow, &[-1, 1 << 40]), Ok(1));
        assert_eq!(int_op(ArithOp::Pow, &[2, 63]).unwrap_err().0, ErrorKind::IntegerOverflow);
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(int_op(ArithOp::Mod, &[1, 0]).unwrap_err().0, ErrorKind::DivisionByZero);
        assert_eq!(float_op(ArithOp::Div, &[1.0, 0.0]).unwrap_err().0, ErrorKind::DivisionByZero);
    }

    #[test]
    fn float_conversion_bounds() {
        assert_eq!(float_to_int(-2.9), Ok(-2));
        assert_eq!(float_to_int(-9_223_372_036_854_775_808.0), Ok(i64::MIN));
        assert!(float_to_int(9_223_372_036_854_775_808.0).is_err());
        assert!(float_to_int(f64::INFINITY).is_err());
    }
}
