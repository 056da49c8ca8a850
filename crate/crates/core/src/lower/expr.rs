use std::collections::BTreeSet;

use super::{Cx, Lowerer};
use crate::constant::ConstValue;
use crate::frontend::ast::{BoolOp, CmpOp};
use crate::ir::{ListOpKind, NodeKind, Port, PortType};
use crate::typecheck::tast::{TExpr, TExprKind, TIter, TTarget};
use crate::types::Type;

impl<'m> Lowerer<'m> {
    fn exprs(&mut self, cx: &mut Cx, es: &[TExpr]) -> Vec<Port> {
        es.iter().map(|e| self.expr(cx, e)).collect()
    }

    /// Lowers `e` into `cx`, left to right, and returns its value.
    pub(super) fn expr(&mut self, cx: &mut Cx, e: &TExpr) -> Port {
        match &e.kind {
            TExprKind::Const(v) => self.constant(cx, v.clone()),
            TExprKind::Var(n) => self.take(cx, n),
            TExprKind::FuncRef(fid) => {
                let kind = NodeKind::LoadFunction { target: self.funcs[*fid], sig: self.sig(*fid) };
                (self.op(cx, kind, &[]), 0)
            }
            TExprKind::GateRef(op) => {
                let target = self.gate_fn(*op);
                (self.op(cx, NodeKind::LoadFunction { target, sig: op.function_type() }, &[]), 0)
            }
            TExprKind::Call { target, args } => {
                let ps = self.exprs(cx, args);
                let kind = NodeKind::Call { target: self.funcs[*target], sig: self.sig(*target) };
                (self.op(cx, kind, &ps), 0)
            }
            TExprKind::CallClosure { target, var, args } => {
                let mut ps = self.exprs(cx, args);
                if !self.m.functions[*target].captures.is_empty() {
                    ps.push(self.take(cx, var));
                }
                let kind = NodeKind::Call { target: self.funcs[*target], sig: self.sig(*target) };
                (self.op(cx, kind, &ps), 0)
            }
            TExprKind::CallIndirect { func, args } => {
                let mut ps = vec![self.expr(cx, func)];
                ps.extend(self.exprs(cx, args));
                (self.op(cx, NodeKind::CallIndirect { sig: func.ty.clone() }, &ps), 0)
            }
            TExprKind::Gate { op, args } => {
                let ps = self.exprs(cx, args);
                let g = self.op(cx, NodeKind::Quantum(*op), &ps);
                self.gate_result(cx, *op, g)
            }
            TExprKind::ListGet { list, index } => {
                let ps = [self.expr(cx, list), self.expr(cx, index)];
                let elem = super::list_elem(&list.ty);
                let n = self.op(cx, NodeKind::ListOp { op: ListOpKind::Get, elem: elem.clone() }, &ps);
                self.pack_if_linear(cx, n, elem, &list.ty)
            }
            TExprKind::ListLen { list } => {
                let l = self.expr(cx, list);
                let elem = super::list_elem(&list.ty);
                let linear = elem.is_linear();
                let n = self.op(cx, NodeKind::ListOp { op: ListOpKind::Len, elem }, &[l]);
                if linear {
                    let types = vec![Type::Int, list.ty.clone()];
                    (self.op(cx, NodeKind::MakeTuple { types }, &[(n, 0), (n, 1)]), 0)
                } else {
                    (n, 0)
                }
            }
            TExprKind::ListApply { list, func, indices } => {
                let ps = [self.expr(cx, list), self.expr(cx, func), self.expr(cx, indices)];
                let Type::Tuple(ix) = &indices.ty else { panic!("compiler bug: apply indices must be a tuple") };
                let kind = NodeKind::ListOp { op: ListOpKind::ApplyIdx(ix.len()), elem: super::list_elem(&list.ty) };
                (self.op(cx, kind, &ps), 0)
            }
            TExprKind::TupleGet { tuple, index } => {
                let t = self.expr(cx, tuple);
                let Type::Tuple(types) = tuple.ty.clone() else { panic!("compiler bug: indexing a non-tuple") };
                (self.op(cx, NodeKind::UnpackTuple { types }, &[t]), *index)
            }
            TExprKind::Range(bound) => {
                let i = self.fresh("r");
                let iter = TIter::Range(bound.clone());
                let elt = TExpr::new(TExprKind::Var(i.clone()), Type::Int, e.span);
                self.list_comp(cx, &e.ty, &elt, &TTarget::Name(i, Type::Int), &iter)
            }
            TExprKind::Arith { op, args } => {
                let ps = self.exprs(cx, args);
                let kind = if e.ty == Type::Float { NodeKind::FloatOp(*op) } else { NodeKind::IntOp(*op) };
                (self.op(cx, kind, &ps), 0)
            }
            TExprKind::Convert { arg, to } => {
                let p = self.expr(cx, arg);
                (self.op(cx, NodeKind::Convert { from: arg.ty.clone(), to: to.clone() }, &[p]), 0)
            }
            TExprKind::Not(a) => {
                let p = self.expr(cx, a);
                (self.op(cx, NodeKind::Not, &[p]), 0)
            }
            TExprKind::Compare { first, rest } => {
                let l = self.expr(cx, first);
                self.compare_chain(cx, l, rest)
            }
            TExprKind::BoolOp { op, lhs, rhs } => {
                let c = self.expr(cx, lhs);
                let mut reads = BTreeSet::new();
                rhs.reads(&mut reads);
                let short = ConstValue::Bool(*op == BoolOp::Or);
                let (f0, f1): (Branch, Branch) = match op {
                    BoolOp::And => (Box::new(move |me, cx| me.constant(cx, short)), Box::new(|me, cx| me.expr(cx, rhs))),
                    BoolOp::Or => (Box::new(|me, cx| me.expr(cx, rhs)), Box::new(move |me, cx| me.constant(cx, short))),
                };
                self.cond_expr(cx, c, reads, Type::Bool, f0, f1)
            }
            TExprKind::IfExp { cond, then, orelse } => {
                let c = self.expr(cx, cond);
                let mut reads = BTreeSet::new();
                then.reads(&mut reads);
                orelse.reads(&mut reads);
                self.cond_expr(
                    cx,
                    c,
                    reads,
                    e.ty.clone(),
                    Box::new(|me, cx| me.expr(cx, orelse)),
                    Box::new(|me, cx| me.expr(cx, then)),
                )
            }
            TExprKind::Tuple(items) => {
                let ps = self.exprs(cx, items);
                let types = items.iter().map(|i| i.ty.clone()).collect();
                (self.op(cx, NodeKind::MakeTuple { types }, &ps), 0)
            }
            TExprKind::List(items) => {
                let elem = super::list_elem(&e.ty);
                let mut acc = (self.op(cx, NodeKind::ListOp { op: ListOpKind::Nil, elem: elem.clone() }, &[]), 0);
                for item in items {
                    let v = self.expr(cx, item);
                    acc = (self.op(cx, NodeKind::ListOp { op: ListOpKind::Cons, elem: elem.clone() }, &[acc, v]), 0);
                }
                acc
            }
            TExprKind::ListComp { elt, target, iter } => self.list_comp(cx, &e.ty, elt, target, iter),
            TExprKind::Discard(inner) => {
                self.expr(cx, inner);
                self.constant(cx, ConstValue::None)
            }
        }
    }

    /// Linear `get` yields `(elem, rest)` as a tuple.
    fn pack_if_linear(&mut self, cx: &Cx, n: crate::ir::NodeId, elem: Type, list: &Type) -> Port {
        if elem.is_linear() {
            let types = vec![elem, list.clone()];
            (self.op(cx, NodeKind::MakeTuple { types }, &[(n, 0), (n, 1)]), 0)
        } else {
            (n, 0)
        }
    }

    /// `l op1 r op2 ...`: each later link runs only if the previous holds;
    /// every operand is evaluated once.
    fn compare_chain(&mut self, cx: &mut Cx, l: Port, rest: &[(CmpOp, Type, TExpr)]) -> Port {
        let (op, ty, e) = &rest[0];
        let r = self.expr(cx, e);
        let c = (self.op(cx, NodeKind::Compare { op: *op, ty: ty.clone() }, &[l, r]), 0);
        if rest.len() == 1 {
            return c;
        }
        let hold = self.fresh("cmp");
        cx.env.insert(hold.clone(), r);
        let mut reads = BTreeSet::from([hold.clone()]);
        for (_, _, e) in &rest[1..] {
            e.reads(&mut reads);
        }
        let out = self.cond_expr(
            cx,
            c,
            reads,
            Type::Bool,
            Box::new(|me, cx| me.constant(cx, ConstValue::Bool(false))),
            Box::new(|me, cx| {
                let r = cx.env[&hold];
                me.compare_chain(cx, r, &rest[1..])
            }),
        );
        cx.env.remove(&hold);
        out
    }

    /// Expression-level Conditional on a `bool`: variables in `reads` go in,
    /// one value of type `ty` comes out.
    fn cond_expr<'e>(
        &mut self,
        cx: &mut Cx,
        pred: Port,
        reads: BTreeSet<String>,
        ty: Type,
        f0: Branch<'e, 'm>,
        f1: Branch<'e, 'm>,
    ) -> Port {
        let ins = self.row_of(cx, &reads);
        let cond = self.add(
            cx.node,
            NodeKind::Conditional {
                pred: PortType::Value(Type::Bool),
                others: super::types(&ins),
                outputs: vec![PortType::Value(ty)],
            },
        );
        self.wire(pred, (cond, 0));
        let ports = self.take_row(cx, &ins);
        for (i, p) in ports.into_iter().enumerate() {
            self.wire(p, (cond, i + 1));
        }
        for (index, f) in [(0, f0), (1, f1)] {
            let case = self.add(cond, NodeKind::Case { index });
            let mut inner = self.enter(case, &ins, 0);
            let v = f(self, &mut inner);
            let out = self.output(&inner);
            self.wire(v, (out, 0));
        }
        (cond, 0)
    }
}

type Branch<'e, 'm> = Box<dyn FnOnce(&mut Lowerer<'m>, &mut Cx) -> Port + 'e>;
