//! Source printer for the syntax tree, plus a span-erasing pass used to
//! compare trees structurally.

use super::ast::*;
use crate::diagnostic::Span;

pub fn print_module(m: &Module) -> String {
    let mut out = String::new();
    for (i, f) in m.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(f, 0, &mut out);
    }
    out
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn print_function(f: &FunctionDef, level: usize, out: &mut String) {
    for d in &f.decorators {
        indent(level, out);
        out.push('@');
        out.push_str(&d.name);
        out.push('\n');
    }
    indent(level, out);
    out.push_str("def ");
    out.push_str(&f.name);
    out.push('(');
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&p.name);
        if let Some(a) = &p.annotation {
            out.push_str(": ");
            out.push_str(&type_expr(a));
        }
    }
    out.push(')');
    if let Some(r) = &f.returns {
        out.push_str(" -> ");
        out.push_str(&type_expr(r));
    }
    out.push_str(":\n");
    print_body(&f.body, level + 1, out);
}

pub fn type_expr(t: &TypeExpr) -> String {
    match &t.kind {
        TypeExprKind::Name(n) => n.clone(),
        TypeExprKind::NoneLit => "None".into(),
        TypeExprKind::Subscript(base, args) => format!(
            "{}[{}]",
            base,
            args.iter().map(type_expr).collect::<Vec<_>>().join(", ")
        ),
        TypeExprKind::List(items) => format!(
            "[{}]",
            items.iter().map(type_expr).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn print_body(body: &[Stmt], level: usize, out: &mut String) {
    for s in body {
        print_stmt(s, level, out);
    }
}

fn print_stmt(s: &Stmt, level: usize, out: &mut String) {
    if let StmtKind::FunctionDef(f) = &s.kind {
        print_function(f, level, out);
        return;
    }
    indent(level, out);
    match &s.kind {
        StmtKind::Assign { target, value } => {
            out.push_str(&print_target(target));
            out.push_str(" = ");
            out.push_str(&expr(value));
        }
        StmtKind::AugAssign { target, op, value } => {
            out.push_str(&print_target(target));
            out.push_str(&format!(" {}= ", op.symbol()));
            out.push_str(&expr(value));
        }
        StmtKind::Expr(e) => out.push_str(&expr(e)),
        StmtKind::If { cond, body, orelse } => {
            out.push_str("if ");
            out.push_str(&expr(cond));
            out.push_str(":\n");
            print_body(body, level + 1, out);
            let mut orelse = orelse;
            loop {
                match orelse.as_slice() {
                    [] => return,
                    // An `if` alone in an else-branch prints as `elif`; the
                    // parser produces exactly this shape back.
                    [Stmt {
                        kind: StmtKind::If { cond, body, orelse: inner },
                        ..
                    }] => {
                        indent(level, out);
                        out.push_str("elif ");
                        out.push_str(&expr(cond));
                        out.push_str(":\n");
                        print_body(body, level + 1, out);
                        orelse = inner;
                    }
                    _ => {
                        indent(level, out);
                        out.push_str("else:\n");
                        print_body(orelse, level + 1, out);
                        return;
                    }
                }
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str("while ");
            out.push_str(&expr(cond));
            out.push_str(":\n");
            print_body(body, level + 1, out);
            return;
        }
        StmtKind::For { target, iter, body } => {
            out.push_str("for ");
            match target {
                Target::Tuple(items, _) if !items.is_empty() => out.push_str(
                    &items.iter().map(print_target).collect::<Vec<_>>().join(", "),
                ),
                t => out.push_str(&print_target(t)),
            }
            out.push_str(" in ");
            out.push_str(&expr(iter));
            out.push_str(":\n");
            print_body(body, level + 1, out);
            return;
        }
        StmtKind::Break => out.push_str("break"),
        StmtKind::Continue => out.push_str("continue"),
        StmtKind::Return(None) => out.push_str("return"),
        StmtKind::Return(Some(e)) => {
            out.push_str("return ");
            out.push_str(&expr(e));
        }
        StmtKind::Pass => out.push_str("pass"),
        StmtKind::FunctionDef(_) => unreachable!(),
    }
    out.push('\n');
}

fn print_target(t: &Target) -> String {
    match t {
        Target::Name(n, _) => n.clone(),
        Target::Tuple(items, _) => tuple_text(items.iter().map(print_target).collect()),
    }
}

fn tuple_text(items: Vec<String>) -> String {
    match items.len() {
        1 => format!("({},)", items[0]),
        _ => format!("({})", items.join(", ")),
    }
}

// Binding strength, loosest first.
const P_TEST: u8 = 0;
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_NOT: u8 = 3;
const P_CMP: u8 = 4;
const P_BITOR: u8 = 5;
const P_XOR: u8 = 6;
const P_BITAND: u8 = 7;
const P_SHIFT: u8 = 8;
const P_ARITH: u8 = 9;
const P_TERM: u8 = 10;
const P_FACTOR: u8 = 11;
const P_POWER: u8 = 12;
const P_ATOM: u8 = 13;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::BitOr => P_BITOR,
        BinOp::BitXor => P_XOR,
        BinOp::BitAnd => P_BITAND,
        BinOp::Shl | BinOp::Shr => P_SHIFT,
        BinOp::Add | BinOp::Sub => P_ARITH,
        BinOp::Mul | BinOp::Div | BinOp::FloorDiv | BinOp::Mod => P_TERM,
        BinOp::Pow => P_POWER,
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::IfExp { .. } => P_TEST,
        ExprKind::BoolOp { op: BoolOp::Or, .. } => P_OR,
        ExprKind::BoolOp { op: BoolOp::And, .. } => P_AND,
        ExprKind::Unary { op: UnaryOp::Not, .. } => P_NOT,
        ExprKind::Compare { .. } => P_CMP,
        ExprKind::Binary { op, .. } => binop_prec(*op),
        ExprKind::Unary { .. } => P_FACTOR,
        _ => P_ATOM,
    }
}

/// Prints `e`, parenthesized when it binds looser than `min`.
fn expr_at(e: &Expr, min: u8) -> String {
    let s = expr(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Float(v) => format!("{v:?}"),
        ExprKind::Bool(b) => if *b { "True" } else { "False" }.into(),
        ExprKind::None => "None".into(),
        ExprKind::Str(s) => s.clone(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Unary { op: UnaryOp::Not, operand } => format!("not {}", expr_at(operand, P_NOT)),
        ExprKind::Unary { op, operand } => format!("{}{}", op.symbol(), expr_at(operand, P_FACTOR)),
        ExprKind::Binary { op: BinOp::Pow, lhs, rhs } => {
            format!("{} ** {}", expr_at(lhs, P_ATOM), expr_at(rhs, P_FACTOR))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = binop_prec(*op);
            format!("{} {} {}", expr_at(lhs, p), op.symbol(), expr_at(rhs, p + 1))
        }
        ExprKind::BoolOp { op, lhs, rhs } => {
            let (p, word) = match op {
                BoolOp::Or => (P_OR, "or"),
                BoolOp::And => (P_AND, "and"),
            };
            format!("{} {} {}", expr_at(lhs, p), word, expr_at(rhs, p + 1))
        }
        ExprKind::Compare { first, rest } => {
            let mut s = expr_at(first, P_BITOR);
            for (op, e) in rest {
                s.push_str(&format!(" {} {}", op.symbol(), expr_at(e, P_BITOR)));
            }
            s
        }
        ExprKind::Call { func, args } => format!("{}({})", expr_at(func, P_ATOM), args_text(args)),
        ExprKind::MethodCall { receiver, method, args, .. } => {
            format!("{}.{}({})", expr_at(receiver, P_ATOM), method, args_text(args))
        }
        ExprKind::Tuple(items) => tuple_text(items.iter().map(|i| expr_at(i, P_TEST)).collect()),
        ExprKind::List(items) => format!("[{}]", args_text(items)),
        ExprKind::ListComp { elt, target, iter, conditions } => {
            let target = match target {
                Target::Tuple(items, _) if !items.is_empty() => {
                    items.iter().map(print_target).collect::<Vec<_>>().join(", ")
                }
                t => print_target(t),
            };
            let mut s = format!("[{} for {} in {}", expr_at(elt, P_TEST), target, expr_at(iter, P_OR));
            for c in conditions {
                s.push_str(&format!(" if {}", expr_at(c, P_OR)));
            }
            s.push(']');
            s
        }
        ExprKind::Subscript { value, index } => format!("{}[{}]", expr_at(value, P_ATOM), expr(index)),
        ExprKind::IfExp { cond, then, orelse } => format!(
            "{} if {} else {}",
            expr_at(then, P_OR),
            expr_at(cond, P_OR),
            expr_at(orelse, P_TEST)
        ),
        ExprKind::Py { tokens } => format!("py({})", py_key(tokens)),
    }
}

fn args_text(args: &[Expr]) -> String {
    args.iter().map(|a| expr_at(a, P_TEST)).collect::<Vec<_>>().join(", ")
}

/// Copy of `m` with every span zeroed, for structural comparison.
pub fn erase_spans(m: &Module) -> Module {
    let mut m = m.clone();
    m.span = Span::default();
    m.functions.iter_mut().for_each(erase_function);
    m
}

fn erase_function(f: &mut FunctionDef) {
    f.span = Span::default();
    f.name_span = Span::default();
    for d in &mut f.decorators {
        d.span = Span::default();
    }
    for p in &mut f.params {
        p.span = Span::default();
        if let Some(a) = &mut p.annotation {
            erase_type(a);
        }
    }
    if let Some(r) = &mut f.returns {
        erase_type(r);
    }
    f.body.iter_mut().for_each(erase_stmt);
}

fn erase_type(t: &mut TypeExpr) {
    t.span = Span::default();
    match &mut t.kind {
        TypeExprKind::Subscript(_, items) | TypeExprKind::List(items) => {
            items.iter_mut().for_each(erase_type)
        }
        _ => {}
    }
}

fn erase_target(t: &mut Target) {
    match t {
        Target::Name(_, s) => *s = Span::default(),
        Target::Tuple(items, s) => {
            *s = Span::default();
            items.iter_mut().for_each(erase_target);
        }
    }
}

fn erase_stmt(s: &mut Stmt) {
    s.span = Span::default();
    match &mut s.kind {
        StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
            erase_target(target);
            erase_expr(value);
        }
        StmtKind::Expr(e) | StmtKind::Return(Some(e)) => erase_expr(e),
        StmtKind::If { cond, body, orelse } => {
            erase_expr(cond);
            body.iter_mut().for_each(erase_stmt);
            orelse.iter_mut().for_each(erase_stmt);
        }
        StmtKind::While { cond, body } => {
            erase_expr(cond);
            body.iter_mut().for_each(erase_stmt);
        }
        StmtKind::For { target, iter, body } => {
            erase_target(target);
            erase_expr(iter);
            body.iter_mut().for_each(erase_stmt);
        }
        StmtKind::FunctionDef(f) => erase_function(f),
        StmtKind::Break | StmtKind::Continue | StmtKind::Return(None) | StmtKind::Pass => {}
    }
}

fn erase_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Unary { operand, .. } => erase_expr(operand),
        ExprKind::Binary { lhs, rhs, .. } | ExprKind::BoolOp { lhs, rhs, .. } => {
            erase_expr(lhs);
            erase_expr(rhs);
        }
        ExprKind::Compare { first, rest } => {
            erase_expr(first);
            rest.iter_mut().for_each(|(_, e)| erase_expr(e));
        }
        ExprKind::Call { func, args } => {
            erase_expr(func);
            args.iter_mut().for_each(erase_expr);
        }
        ExprKind::MethodCall { receiver, method_span, args, .. } => {
            erase_expr(receiver);
            *method_span = Span::default();
            args.iter_mut().for_each(erase_expr);
        }
        ExprKind::Tuple(items) | ExprKind::List(items) => items.iter_mut().for_each(erase_expr),
        ExprKind::ListComp { elt, target, iter, conditions } => {
            erase_expr(elt);
            erase_target(target);
            erase_expr(iter);
            conditions.iter_mut().for_each(erase_expr);
        }
        ExprKind::Subscript { value, index } => {
            erase_expr(value);
            erase_expr(index);
        }
        ExprKind::IfExp { cond, then, orelse } => {
            erase_expr(cond);
            erase_expr(then);
            erase_expr(orelse);
        }
        ExprKind::Py { tokens } => tokens.iter_mut().for_each(|t| t.span = Span::default()),
        ExprKind::Int(_)
        | ExprKind::Float(_)
        | ExprKind::Bool(_)
        | ExprKind::None
        | ExprKind::Str(_)
        | ExprKind::Name(_) => {}
    }
}
