//! Typed syntax tree produced by the checker and consumed by lowering.
//!
//! Operators are resolved, coercions are explicit [`TExprKind::Convert`]
//! nodes, `py(...)` is a constant, and nested functions are lifted into the
//! module's function table.

use std::collections::BTreeSet;

use crate::constant::ConstValue;
use crate::diagnostic::Span;
use crate::frontend::ast::{BoolOp, CmpOp};
use crate::ops::{ArithOp, QuantumOp};
use crate::types::Type;

pub type FnId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct TModule {
    /// Top-level functions first, in source order; lifted nested
    /// functions follow.
    pub functions: Vec<TFunction>,
}

impl TModule {
    pub fn find(&self, name: &str) -> Option<FnId> {
        self.functions.iter().position(|f| f.top_level && f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TFunction {
    /// Unique symbol; nested functions are qualified by their parents.
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: Vec<TStmt>,
    /// Captured variables, in environment-tuple order.
    pub captures: Vec<VarSlot>,
    /// Source name a nested function uses to refer to itself.
    pub self_name: Option<String>,
    pub top_level: bool,
    pub span: Span,
}

impl TFunction {
    pub fn signature(&self) -> Type {
        Type::function(self.params.iter().map(|(_, t)| t.clone()).collect(), self.ret.clone())
    }
}

/// A variable live across a control-flow join.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarSlot {
    pub name: String,
    pub ty: Type,
    /// Set when the variable names a nested function.
    pub closure: Option<FnId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TStmtKind {
    Assign { target: TTarget, value: TExpr },
    /// Evaluated for effect; the result is non-linear and dropped.
    Expr(TExpr),
    If { cond: TExpr, body: Vec<TStmt>, orelse: Vec<TStmt>, joined: Vec<VarSlot> },
    While { cond: TExpr, body: Vec<TStmt>, carried: Vec<VarSlot>, exits: Vec<VarSlot> },
    For { target: TTarget, iter: TIter, body: Vec<TStmt>, carried: Vec<VarSlot>, exits: Vec<VarSlot> },
    Break,
    Continue,
    Return(TExpr),
    Def { name: String, func: FnId },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TTarget {
    Name(String, Type),
    Tuple(Vec<TTarget>),
}

impl TTarget {
    pub fn names(&self, out: &mut BTreeSet<String>) {
        match self {
            TTarget::Name(n, _) => {
                out.insert(n.clone());
            }
            TTarget::Tuple(items) => items.iter().for_each(|i| i.names(out)),
        }
    }

    pub fn ty(&self) -> Type {
        match self {
            TTarget::Name(_, t) => t.clone(),
            TTarget::Tuple(items) => Type::Tuple(items.iter().map(TTarget::ty).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TIter {
    /// `range(bound)`, counting from zero.
    Range(Box<TExpr>),
    List(Box<TExpr>),
}

impl TIter {
    pub fn elem_type(&self) -> Type {
        match self {
            TIter::Range(_) => Type::Int,
            TIter::List(l) => match &l.ty {
                Type::List(e) => (**e).clone(),
                other => panic!("iterating a non-list of type {other}"),
            },
        }
    }

    pub fn expr(&self) -> &TExpr {
        match self {
            TIter::Range(e) | TIter::List(e) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TExprKind {
    Const(ConstValue),
    /// Reads a local; consumes it when the type is linear.
    Var(String),
    /// A function used as a value.
    FuncRef(FnId),
    GateRef(QuantumOp),
    Call { target: FnId, args: Vec<TExpr> },
    /// Call of a nested function through the variable naming it, which
    /// holds its captured environment.
    CallClosure { target: FnId, var: String, args: Vec<TExpr> },
    CallIndirect { func: Box<TExpr>, args: Vec<TExpr> },
    Gate { op: QuantumOp, args: Vec<TExpr> },
    /// Linear lists return `(elem, rest)`; classical lists just the element.
    ListGet { list: Box<TExpr>, index: Box<TExpr> },
    /// Linear lists return `(len, list)`.
    ListLen { list: Box<TExpr> },
    ListApply { list: Box<TExpr>, func: Box<TExpr>, indices: Box<TExpr> },
    TupleGet { tuple: Box<TExpr>, index: usize },
    /// `range(n)` used as a list value.
    Range(Box<TExpr>),
    /// Operands already coerced to the result's numeric type.
    Arith { op: ArithOp, args: Vec<TExpr> },
    Convert { arg: Box<TExpr>, to: Type },
    Not(Box<TExpr>),
    /// Each comparison is carried out at its domain type; every operand is
    /// evaluated at most once and later links short-circuit.
    Compare { first: Box<TExpr>, rest: Vec<(CmpOp, Type, TExpr)> },
    BoolOp { op: BoolOp, lhs: Box<TExpr>, rhs: Box<TExpr> },
    IfExp { cond: Box<TExpr>, then: Box<TExpr>, orelse: Box<TExpr> },
    Tuple(Vec<TExpr>),
    List(Vec<TExpr>),
    ListComp { elt: Box<TExpr>, target: TTarget, iter: TIter },
    /// Evaluates a non-linear expression and drops it; typed `None`.
    Discard(Box<TExpr>),
}

impl TExpr {
    pub fn new(kind: TExprKind, ty: Type, span: Span) -> Self {
        TExpr { kind, ty, span }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&TExpr> {
        match &self.kind {
            TExprKind::Const(_)
            | TExprKind::Var(_)
            | TExprKind::FuncRef(_)
            | TExprKind::GateRef(_) => vec![],
            TExprKind::Call { args, .. }
            | TExprKind::CallClosure { args, .. }
            | TExprKind::Gate { args, .. }
            | TExprKind::Arith { args, .. }
            | TExprKind::Tuple(args)
            | TExprKind::List(args) => args.iter().collect(),
            TExprKind::CallIndirect { func, args } => {
                std::iter::once(&**func).chain(args.iter()).collect()
            }
            TExprKind::ListGet { list, index } => vec![list, index],
            TExprKind::ListLen { list } => vec![list],
            TExprKind::ListApply { list, func, indices } => vec![list, func, indices],
            TExprKind::TupleGet { tuple, .. } => vec![tuple],
            TExprKind::Range(e)
            | TExprKind::Convert { arg: e, .. }
            | TExprKind::Not(e)
            | TExprKind::Discard(e) => vec![e],
            TExprKind::Compare { first, rest } => {
                std::iter::once(&**first).chain(rest.iter().map(|(_, _, e)| e)).collect()
            }
            TExprKind::BoolOp { lhs, rhs, .. } => vec![lhs, rhs],
            TExprKind::IfExp { cond, then, orelse } => vec![cond, then, orelse],
            TExprKind::ListComp { elt, iter, .. } => vec![iter.expr(), elt],
        }
    }

    /// Free local variables read by this expression.
    pub fn reads(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            TExprKind::Var(n) | TExprKind::CallClosure { var: n, .. } => {
                out.insert(n.clone());
            }
            TExprKind::ListComp { elt, target, iter } => {
                iter.expr().reads(out);
                let mut inner = BTreeSet::new();
                elt.reads(&mut inner);
                let mut bound = BTreeSet::new();
                target.names(&mut bound);
                out.extend(inner.difference(&bound).cloned());
                return;
            }
            _ => {}
        }
        for c in self.children() {
            c.reads(out);
        }
    }
}

/// Names read anywhere in `stmts` (nested function bodies excluded; their
/// captures count as reads at the definition).
pub fn stmts_reads(stmts: &[TStmt], module: &TModule, out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            TStmtKind::Assign { value, .. } | TStmtKind::Expr(value) | TStmtKind::Return(value) => {
                value.reads(out)
            }
            TStmtKind::If { cond, body, orelse, .. } => {
                cond.reads(out);
                stmts_reads(body, module, out);
                stmts_reads(orelse, module, out);
            }
            TStmtKind::While { cond, body, .. } => {
                cond.reads(out);
                stmts_reads(body, module, out);
            }
            TStmtKind::For { iter, body, .. } => {
                iter.expr().reads(out);
                stmts_reads(body, module, out);
            }
            TStmtKind::Def { func, .. } => {
                out.extend(module.functions[*func].captures.iter().map(|c| c.name.clone()))
            }
            TStmtKind::Break | TStmtKind::Continue => {}
        }
    }
}

/// Names bound anywhere in `stmts`.
pub fn stmts_assigns(stmts: &[TStmt], out: &mut BTreeSet<String>) {
    for s in stmts {
        match &s.kind {
            TStmtKind::Assign { target, .. } => target.names(out),
            TStmtKind::If { body, orelse, .. } => {
                stmts_assigns(body, out);
                stmts_assigns(orelse, out);
            }
            TStmtKind::While { body, .. } => stmts_assigns(body, out),
            TStmtKind::For { target, body, .. } => {
                target.names(out);
                stmts_assigns(body, out);
            }
            TStmtKind::Def { name, .. } => {
                out.insert(name.clone());
            }
            TStmtKind::Expr(_) | TStmtKind::Return(_) | TStmtKind::Break | TStmtKind::Continue => {}
        }
    }
}

/// Whether control can leave `stmts` other than by falling through:
/// `return` anywhere, or `break`/`continue` not enclosed by a nested loop.
pub fn escapes(stmts: &[TStmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        TStmtKind::Return(_) | TStmtKind::Break | TStmtKind::Continue => true,
        TStmtKind::If { body, orelse, .. } => escapes(body) || escapes(orelse),
        TStmtKind::While { body, .. } | TStmtKind::For { body, .. } => contains_return(body),
        _ => false,
    })
}

pub fn contains_return(stmts: &[TStmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        TStmtKind::Return(_) => true,
        TStmtKind::If { body, orelse, .. } => contains_return(body) || contains_return(orelse),
        TStmtKind::While { body, .. } | TStmtKind::For { body, .. } => contains_return(body),
        _ => false,
    })
}

/// Whether some `return` sits inside a loop, which structured lowering
/// cannot express.
pub fn return_in_loop(stmts: &[TStmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        TStmtKind::If { body, orelse, .. } => return_in_loop(body) || return_in_loop(orelse),
        TStmtKind::While { body, .. } | TStmtKind::For { body, .. } => contains_return(body),
        _ => false,
    })
}
