use std::collections::BTreeSet;

use super::{types, Cx, IterState, Lowerer, Term};
use crate::ir::{NodeId, NodeKind, PortType};
use crate::typecheck::tast::{self, FnId, TExpr, TIter, TStmt, TStmtKind, TTarget, VarSlot};
use crate::types::Type;

impl Lowerer<'_> {
    pub(super) fn structured_function(&mut self, fid: FnId) {
        let f = &self.m.functions[fid];
        let node = self.funcs[fid];
        let mut cx = self.prologue(f, fid, node);
        let term = Term::Return(f.ret.clone());
        self.tail(&mut cx, &f.body, &term);
    }

    /// Lowers `stmts` as the rest of the container, which they terminate.
    fn tail(&mut self, cx: &mut Cx, stmts: &[TStmt], term: &Term) {
        for (k, s) in stmts.iter().enumerate() {
            match &s.kind {
                TStmtKind::Return(e) => {
                    let p = self.expr(cx, e);
                    let out = self.output(cx);
                    self.wire(p, (out, 0));
                    return;
                }
                TStmtKind::Continue => return self.emit_loop(cx, term, 0),
                TStmtKind::Break => return self.emit_loop(cx, term, 1),
                TStmtKind::If { cond, body, orelse, .. } if tast::escapes(body) || tast::escapes(orelse) => {
                    let rest = &stmts[k + 1..];
                    let c = self.expr(cx, cond);
                    let then: Vec<TStmt> = body.iter().chain(rest).cloned().collect();
                    let other: Vec<TStmt> = orelse.iter().chain(rest).cloned().collect();
                    self.escape_branch(
                        cx,
                        c,
                        term,
                        |me, cx| me.tail(cx, &other, term),
                        |me, cx| me.tail(cx, &then, term),
                    );
                    return;
                }
                _ => self.stmt(cx, s),
            }
        }
        match term {
            Term::Loop { .. } => self.emit_loop(cx, term, 0),
            Term::Return(_) => panic!("compiler bug: function body falls through"),
        }
    }

    /// Sends the continue (0) or break (1) row to the loop body's Output.
    fn emit_loop(&mut self, cx: &mut Cx, term: &Term, variant: usize) {
        let Term::Loop { row, exits } = term else {
            panic!("compiler bug: break/continue outside a loop body")
        };
        let vals = if variant == 0 { row } else { exits };
        let ports = self.take_row(cx, vals);
        let tag = self.op(
            cx,
            NodeKind::Tag { variant, rows: vec![types(row), types(exits)] },
            &ports,
        );
        let out = self.output(cx);
        self.wire((tag, 0), (out, 0));
    }

    /// Branch on `pred` where each case terminates the enclosing container;
    /// case 0 runs `f0`, case 1 runs `f1`. Every variable goes in.
    fn escape_branch(
        &mut self,
        cx: &mut Cx,
        pred: crate::ir::Port,
        term: &Term,
        f0: impl FnOnce(&mut Self, &mut Cx),
        f1: impl FnOnce(&mut Self, &mut Cx),
    ) {
        let row = self.env_row(cx);
        let outputs = term.output_ports();
        let cond = self.add(
            cx.node,
            NodeKind::Conditional { pred: self.b.out_type(pred).clone(), others: types(&row), outputs: outputs.clone() },
        );
        self.wire(pred, (cond, 0));
        let ins = self.take_row(cx, &row);
        for (i, p) in ins.into_iter().enumerate() {
            self.wire(p, (cond, i + 1));
        }
        let case0 = self.add(cond, NodeKind::Case { index: 0 });
        let mut c0 = self.enter(case0, &row, 0);
        f0(self, &mut c0);
        let case1 = self.add(cond, NodeKind::Case { index: 1 });
        let mut c1 = self.enter(case1, &row, 0);
        f1(self, &mut c1);
        let out = self.output(cx);
        for i in 0..outputs.len() {
            self.wire((cond, i), (out, i));
        }
        cx.env.clear();
    }

    /// A statement that does not leave the block.
    fn stmt(&mut self, cx: &mut Cx, s: &TStmt) {
        match &s.kind {
            TStmtKind::If { cond, body, orelse, joined } => self.if_stmt(cx, cond, body, orelse, joined),
            TStmtKind::While { cond, body, carried, exits } => {
                let mut used = BTreeSet::new();
                cond.reads(&mut used);
                let row = self.loop_row(cx, body, used, carried, &[]);
                let exits = self.loop_exits_row(&row, exits);
                self.tail_loop(cx, row, exits, |me, inner, term| {
                    let c = me.expr(inner, cond);
                    me.escape_branch(
                        inner,
                        c,
                        term,
                        |me, cx| me.emit_loop(cx, term, 1),
                        |me, cx| me.tail(cx, body, term),
                    );
                });
            }
            TStmtKind::For { target, iter, body, carried, exits } => {
                let st = self.iter_init(cx, iter);
                let hidden = self.iter_vars(&st);
                let mut used = BTreeSet::new();
                target.names(&mut used);
                let row = self.loop_row(cx, body, used, carried, &hidden);
                let exits = self.loop_exits_row(&row, exits);
                self.tail_loop(cx, row, exits, |me, inner, term| {
                    me.for_step(inner, &st, target, term, |me, cx| me.tail(cx, body, term));
                });
                for h in hidden {
                    cx.env.remove(&h);
                }
            }
            _ => self.simple_stmt(cx, s),
        }
    }

    /// One iteration of a `for` loop: exit when exhausted, otherwise bind
    /// the target and run `body`.
    fn for_step(
        &mut self,
        cx: &mut Cx,
        st: &IterState,
        target: &TTarget,
        term: &Term,
        body: impl FnOnce(&mut Self, &mut Cx),
    ) {
        let c = self.iter_test(cx, st);
        self.escape_branch(
            cx,
            c,
            term,
            |me, cx| {
                me.iter_finish(cx, st);
                me.emit_loop(cx, term, 1)
            },
            |me, cx| {
                me.iter_next(cx, st, target);
                body(me, cx)
            },
        );
    }

    /// Loop-carried row: variables the loop reads or assigns (the checker's
    /// slots and captured variables) and the hidden iteration state.
    fn loop_row(
        &self,
        cx: &Cx,
        body: &[TStmt],
        mut used: BTreeSet<String>,
        carried: &[VarSlot],
        hidden: &[String],
    ) -> Vec<(String, Type)> {
        tast::stmts_reads(body, self.m, &mut used);
        tast::stmts_assigns(body, &mut used);
        let names: Vec<String> = carried
            .iter()
            .map(|s| s.name.clone())
            .chain(self.pinned.iter().map(|(n, _)| n.clone()))
            .filter(|n| used.contains(n))
            .chain(hidden.iter().cloned())
            .collect();
        self.row_of(cx, &names)
    }

    /// Variables live after the loop that it may have changed; the others
    /// keep their outer wires.
    fn loop_exits_row(&self, row: &[(String, Type)], exits: &[VarSlot]) -> Vec<(String, Type)> {
        self.slots(exits)
            .into_iter()
            .filter(|(n, _)| row.iter().any(|(r, _)| r == n))
            .collect()
    }

    /// TailLoop over `row`; afterwards the `exits` variables are its outputs.
    fn tail_loop(
        &mut self,
        cx: &mut Cx,
        row: Vec<(String, Type)>,
        exits: Vec<(String, Type)>,
        body: impl FnOnce(&mut Self, &mut Cx, &Term),
    ) -> NodeId {
        let tl = self.add(cx.node, NodeKind::TailLoop { carried: types(&row), exits: types(&exits) });
        let ins = self.take_row(cx, &row);
        for (i, p) in ins.into_iter().enumerate() {
            self.wire(p, (tl, i));
        }
        let mut inner = self.enter(tl, &row, 0);
        let term = Term::Loop { row, exits: exits.clone() };
        body(self, &mut inner, &term);
        for (i, (n, _)) in exits.iter().enumerate() {
            cx.env.insert(n.clone(), (tl, i));
        }
        tl
    }

    fn if_stmt(&mut self, cx: &mut Cx, cond: &TExpr, body: &[TStmt], orelse: &[TStmt], joined: &[VarSlot]) {
        let c = self.expr(cx, cond);
        let mut assigned = BTreeSet::new();
        tast::stmts_assigns(body, &mut assigned);
        tast::stmts_assigns(orelse, &mut assigned);
        let outs: Vec<(String, Type)> = self
            .slots(joined)
            .into_iter()
            .filter(|(n, _)| assigned.contains(n))
            .collect();
        let mut reads = BTreeSet::new();
        tast::stmts_reads(body, self.m, &mut reads);
        tast::stmts_reads(orelse, self.m, &mut reads);
        reads.extend(outs.iter().map(|(n, _)| n.clone()));
        let ins = self.row_of(cx, &reads);
        let cond = self.add(
            cx.node,
            NodeKind::Conditional {
                pred: PortType::Value(Type::Bool),
                others: types(&ins),
                outputs: types(&outs).into_iter().map(PortType::Value).collect(),
            },
        );
        self.wire(c, (cond, 0));
        let ports = self.take_row(cx, &ins);
        for (i, p) in ports.into_iter().enumerate() {
            self.wire(p, (cond, i + 1));
        }
        for (index, stmts) in [(0, orelse), (1, body)] {
            let case = self.add(cond, NodeKind::Case { index });
            let mut inner = self.enter(case, &ins, 0);
            for s in stmts {
                self.stmt(&mut inner, s);
            }
            let vals = self.take_row(&mut inner, &outs);
            let out = self.output(&inner);
            for (i, p) in vals.into_iter().enumerate() {
                self.wire(p, (out, i));
            }
        }
        for (i, (n, _)) in outs.iter().enumerate() {
            cx.env.insert(n.clone(), (cond, i));
        }
    }

    /// `[elt for target in iter]` as a TailLoop appending to an accumulator.
    pub(super) fn list_comp(
        &mut self,
        cx: &mut Cx,
        ty: &Type,
        elt: &TExpr,
        target: &TTarget,
        iter: &TIter,
    ) -> crate::ir::Port {
        use crate::ir::ListOpKind;
        let elem = super::list_elem(ty);
        let st = self.iter_init(cx, iter);
        let acc = self.fresh("acc");
        let nil = self.op(cx, NodeKind::ListOp { op: ListOpKind::Nil, elem: elem.clone() }, &[]);
        cx.env.insert(acc.clone(), (nil, 0));
        let mut bound = BTreeSet::new();
        target.names(&mut bound);
        let mut reads = BTreeSet::new();
        elt.reads(&mut reads);
        let mut names: Vec<String> = reads.difference(&bound).cloned().collect();
        names.push(acc.clone());
        names.extend(self.iter_vars(&st));
        let row = self.row_of(cx, &names);
        let exits = vec![(acc.clone(), ty.clone())];
        let tl = self.tail_loop(cx, row, exits, |me, inner, term| {
            me.for_step(inner, &st, target, term, |me, cx| {
                let v = me.expr(cx, elt);
                let list = me.take(cx, &acc);
                let cons = me.op(cx, NodeKind::ListOp { op: ListOpKind::Cons, elem: elem.clone() }, &[list, v]);
                cx.env.insert(acc.clone(), (cons, 0));
                me.emit_loop(cx, term, 0);
            });
        });
        cx.env.remove(&acc);
        for h in self.iter_vars(&st) {
            cx.env.remove(&h);
        }
        (tl, 0)
    }
}
