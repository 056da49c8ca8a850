//! Typed syntax tree to IR.
//!
//! Every variable in scope maps to the out-port carrying its current value.
//! Structured lowering turns `if` into Conditional and loops into TailLoop;
//! an `if` whose branches leave the enclosing block takes the rest of the
//! block into each of its cases. A function with `return` inside a loop,
//! or any function under [`Lowering::Cfg`], becomes one CFG instead.

mod cfg;
mod expr;
mod structured;

use std::collections::{BTreeMap, BTreeSet};

use crate::constant::ConstValue;
use crate::ir::{Builder, Graph, NodeId, NodeKind, Port, PortType};
use crate::ops::QuantumOp;
use crate::typecheck::tast::{self, FnId, TExpr, TExprKind, TFunction, TModule, TStmt, TStmtKind, TTarget, VarSlot};
use crate::types::Type;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Lowering {
    /// Conditional and TailLoop where possible, CFG per function otherwise.
    #[default]
    Structured,
    /// Every function body as a CFG.
    Cfg,
}

impl std::str::FromStr for Lowering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "structured" => Ok(Lowering::Structured),
            "cfg" => Ok(Lowering::Cfg),
            other => Err(format!("unknown lowering mode `{other}` (expected `structured` or `cfg`)")),
        }
    }
}

/// Lowers a checked module. The result passes [`crate::ir::validate`].
pub fn lower_module(m: &TModule, mode: Lowering) -> Graph {
    let mut l = Lowerer {
        m,
        b: Builder::new(),
        funcs: Vec::new(),
        gates: BTreeMap::new(),
        fresh: 0,
        pinned: Vec::new(),
        ret: Type::None,
    };
    for fid in 0..m.functions.len() {
        let node = l.add(l.b.root(), NodeKind::FuncDefn { name: m.functions[fid].name.clone(), sig: l.sig(fid) });
        l.funcs.push(node);
    }
    for fid in 0..m.functions.len() {
        let f = &m.functions[fid];
        if mode == Lowering::Cfg || tast::return_in_loop(&f.body) {
            l.cfg_function(fid);
        } else {
            l.structured_function(fid);
        }
    }
    l.b.finish()
}

/// A dataflow container being filled and the variables visible in it.
#[derive(Clone, Debug)]
pub(crate) struct Cx {
    pub node: NodeId,
    pub env: BTreeMap<String, Port>,
}

/// How a block that runs to its end leaves its container.
#[derive(Clone, Debug)]
pub(crate) enum Term {
    /// Function body: Output takes the return value.
    Return(Type),
    /// TailLoop body: Output takes `sum[row, exits]`.
    Loop { row: Vec<(String, Type)>, exits: Vec<(String, Type)> },
}

impl Term {
    fn output_ports(&self) -> Vec<PortType> {
        match self {
            Term::Return(t) => vec![PortType::Value(t.clone())],
            Term::Loop { row, exits } => vec![PortType::Sum(vec![types(row), types(exits)])],
        }
    }
}

fn types(row: &[(String, Type)]) -> Vec<Type> {
    row.iter().map(|(_, t)| t.clone()).collect()
}

/// Hidden state of a `for` loop or comprehension.
#[derive(Clone, Debug)]
pub(crate) enum IterState {
    Range { i: String, n: String },
    List { i: String, l: String },
    /// Destructive iteration over a linear list.
    Linear { l: String, elem: Type },
}

pub(crate) struct Lowerer<'m> {
    m: &'m TModule,
    b: Builder,
    funcs: Vec<NodeId>,
    gates: BTreeMap<QuantumOp, NodeId>,
    fresh: usize,
    /// Captured variables of the function being lowered; they stay valid
    /// throughout its body.
    pinned: Vec<(String, Type)>,
    ret: Type,
}

impl<'m> Lowerer<'m> {
    // ---- graph plumbing ----

    fn add(&mut self, parent: NodeId, kind: NodeKind) -> NodeId {
        self.b
            .add(parent, kind)
            .unwrap_or_else(|e| panic!("compiler bug: lowering built an invalid node: {e}"))
    }

    fn wire(&mut self, src: Port, dst: Port) {
        self.b
            .connect(src, dst)
            .unwrap_or_else(|e| panic!("compiler bug: lowering built an invalid edge: {e}"))
    }

    /// Adds a node to `cx` fed by `inputs` in order.
    fn op(&mut self, cx: &Cx, kind: NodeKind, inputs: &[Port]) -> NodeId {
        let n = self.add(cx.node, kind);
        for (i, &p) in inputs.iter().enumerate() {
            self.wire(p, (n, i));
        }
        n
    }

    fn ty(&self, p: Port) -> Type {
        match self.b.out_type(p) {
            PortType::Value(t) => t.clone(),
            other => panic!("compiler bug: expected a value port, found `{other}`"),
        }
    }

    fn constant(&mut self, cx: &Cx, value: ConstValue) -> Port {
        (self.op(cx, NodeKind::Const { value }, &[]), 0)
    }

    fn output(&self, cx: &Cx) -> NodeId {
        self.b.io(cx.node).1
    }

    fn fresh(&mut self, stem: &str) -> String {
        self.fresh += 1;
        format!("%{stem}{}", self.fresh)
    }

    /// Reads a variable; linear values leave the environment.
    fn take(&mut self, cx: &mut Cx, name: &str) -> Port {
        let p = *cx
            .env
            .get(name)
            .unwrap_or_else(|| panic!("compiler bug: no wire for `{name}`"));
        if self.b.out_type(p).is_linear() {
            cx.env.remove(name);
        }
        p
    }

    fn bind(&mut self, cx: &mut Cx, target: &TTarget, p: Port) {
        match target {
            TTarget::Name(n, _) => {
                cx.env.insert(n.clone(), p);
            }
            TTarget::Tuple(items) => {
                let Type::Tuple(ts) = self.ty(p) else { panic!("compiler bug: unpacking a non-tuple") };
                let n = self.op(cx, NodeKind::UnpackTuple { types: ts }, &[p]);
                for (i, item) in items.iter().enumerate() {
                    self.bind(cx, item, (n, i));
                }
            }
        }
    }

    /// Container whose Input ports become the variables of `row`.
    fn enter(&self, node: NodeId, row: &[(String, Type)], skip: usize) -> Cx {
        let input = self.b.io(node).0;
        Cx {
            node,
            env: row.iter().enumerate().map(|(i, (n, _))| (n.clone(), (input, skip + i))).collect(),
        }
    }

    /// Current variables with their wire types, in name order.
    fn env_row(&self, cx: &Cx) -> Vec<(String, Type)> {
        cx.env.iter().map(|(n, &p)| (n.clone(), self.ty(p))).collect()
    }

    /// Variables of `names` present in `cx`, with their wire types.
    fn row_of<'a>(&self, cx: &Cx, names: impl IntoIterator<Item = &'a String>) -> Vec<(String, Type)> {
        let set: BTreeSet<&String> = names.into_iter().collect();
        set.into_iter()
            .filter_map(|n| cx.env.get(n).map(|&p| (n.clone(), self.ty(p))))
            .collect()
    }

    fn take_row(&mut self, cx: &mut Cx, row: &[(String, Type)]) -> Vec<Port> {
        row.iter().map(|(n, _)| self.take(cx, n)).collect()
    }

    // ---- functions ----

    /// Wire type of a variable slot; a nested function is represented by
    /// its captured environment.
    fn slot_type(&self, s: &VarSlot) -> Type {
        match s.closure {
            Some(fid) => self.env_type(fid),
            None => s.ty.clone(),
        }
    }

    fn slots(&self, slots: &[VarSlot]) -> Vec<(String, Type)> {
        slots.iter().map(|s| (s.name.clone(), self.slot_type(s))).collect()
    }

    fn env_type(&self, fid: FnId) -> Type {
        Type::Tuple(self.m.functions[fid].captures.iter().map(|c| self.slot_type(c)).collect())
    }

    /// Lifted signature: a capturing function takes its environment last.
    fn sig(&self, fid: FnId) -> Type {
        let f = &self.m.functions[fid];
        let mut params: Vec<Type> = f.params.iter().map(|(_, t)| t.clone()).collect();
        if !f.captures.is_empty() {
            params.push(self.env_type(fid));
        }
        Type::function(params, f.ret.clone())
    }

    fn input_row(&self, fid: FnId) -> Vec<Type> {
        match self.sig(fid) {
            Type::Function(p, _) => p,
            _ => unreachable!(),
        }
    }

    /// Binds parameters, captures and the function's own name from the
    /// container's Input ports.
    fn prologue(&mut self, f: &TFunction, fid: FnId, node: NodeId) -> Cx {
        let input = self.b.io(node).0;
        let mut cx = Cx { node, env: BTreeMap::new() };
        for (i, (n, _)) in f.params.iter().enumerate() {
            cx.env.insert(n.clone(), (input, i));
        }
        let env = if f.captures.is_empty() {
            None
        } else {
            let env = (input, f.params.len());
            let types: Vec<Type> = f.captures.iter().map(|c| self.slot_type(c)).collect();
            let un = self.op(&cx, NodeKind::UnpackTuple { types }, &[env]);
            for (i, c) in f.captures.iter().enumerate() {
                cx.env.insert(c.name.clone(), (un, i));
            }
            Some(env)
        };
        if let Some(me) = &f.self_name {
            let env = env.unwrap_or_else(|| (self.op(&cx, NodeKind::MakeTuple { types: vec![] }, &[]), 0));
            cx.env.insert(me.clone(), env);
        }
        let mut assigned = BTreeSet::new();
        tast::stmts_assigns(&f.body, &mut assigned);
        let mut pinned: Vec<(String, Type)> =
            f.captures.iter().map(|c| (c.name.clone(), self.slot_type(c))).collect();
        if let Some(me) = &f.self_name {
            pinned.push((me.clone(), self.env_type(fid)));
        }
        pinned.retain(|(n, _)| !assigned.contains(n) && f.params.iter().all(|(p, _)| p != n));
        self.pinned = pinned;
        self.ret = f.ret.clone();
        cx
    }

    /// `row` extended by the pinned variables it does not already bind.
    fn with_pinned(&self, mut row: Vec<(String, Type)>) -> Vec<(String, Type)> {
        for (n, t) in &self.pinned {
            if !row.iter().any(|(r, _)| r == n) {
                row.push((n.clone(), t.clone()));
            }
        }
        row.sort();
        row
    }

    /// Wrapper function for a gate used as a value.
    fn gate_fn(&mut self, op: QuantumOp) -> NodeId {
        if let Some(&n) = self.gates.get(&op) {
            return n;
        }
        let f = self.add(self.b.root(), NodeKind::FuncDefn { name: format!("%{}", op.name()), sig: op.function_type() });
        let (input, output) = self.b.io(f);
        let cx = Cx { node: f, env: BTreeMap::new() };
        let args: Vec<Port> = (0..op.inputs().len()).map(|i| (input, i)).collect();
        let g = self.op(&cx, NodeKind::Quantum(op), &args);
        let r = self.gate_result(&cx, op, g);
        self.wire(r, (output, 0));
        self.gates.insert(op, f);
        f
    }

    /// Source-level result of a gate node.
    fn gate_result(&mut self, cx: &Cx, op: QuantumOp, g: NodeId) -> Port {
        let outs = op.outputs();
        match outs.len() {
            0 => self.constant(cx, ConstValue::None),
            1 => (g, 0),
            k => {
                let ports: Vec<Port> = (0..k).map(|i| (g, i)).collect();
                (self.op(cx, NodeKind::MakeTuple { types: outs }, &ports), 0)
            }
        }
    }

    /// Tuple literals and multi-output gates assigned to a tuple target are
    /// bound component-wise, without a tuple in between.
    fn unpacked(&self, value: &TExpr) -> bool {
        match &value.kind {
            TExprKind::Tuple(_) => true,
            TExprKind::Gate { op, .. } => op.outputs().len() > 1,
            _ => false,
        }
    }

    // ---- statements shared by both strategies ----

    /// Straight-line statements; control flow is handled by the caller.
    fn simple_stmt(&mut self, cx: &mut Cx, s: &TStmt) {
        match &s.kind {
            TStmtKind::Assign { target: TTarget::Tuple(items), value } if self.unpacked(value) => {
                let ports: Vec<Port> = match &value.kind {
                    TExprKind::Tuple(es) => es.iter().map(|e| self.expr(cx, e)).collect(),
                    TExprKind::Gate { op, args } => {
                        let ps: Vec<Port> = args.iter().map(|a| self.expr(cx, a)).collect();
                        let g = self.op(cx, NodeKind::Quantum(*op), &ps);
                        (0..op.outputs().len()).map(|i| (g, i)).collect()
                    }
                    _ => unreachable!(),
                };
                for (item, p) in items.iter().zip(ports) {
                    self.bind(cx, item, p);
                }
            }
            TStmtKind::Assign { target, value } => {
                let p = self.expr(cx, value);
                self.bind(cx, target, p);
            }
            TStmtKind::Expr(e) => {
                self.expr(cx, e);
            }
            TStmtKind::Def { name, func } => {
                let f = &self.m.functions[*func];
                let types: Vec<Type> = f.captures.iter().map(|c| self.slot_type(c)).collect();
                let ports: Vec<Port> = f.captures.iter().map(|c| self.take(cx, &c.name)).collect();
                let env = self.op(cx, NodeKind::MakeTuple { types }, &ports);
                cx.env.insert(name.clone(), (env, 0));
            }
            other => panic!("compiler bug: not a simple statement: {other:?}"),
        }
    }

    // ---- iteration ----

    /// Evaluates the iterable into hidden variables.
    fn iter_init(&mut self, cx: &mut Cx, iter: &tast::TIter) -> IterState {
        match iter {
            tast::TIter::Range(bound) => {
                let n = self.expr(cx, bound);
                let zero = self.constant(cx, ConstValue::Int(0));
                let (i_name, n_name) = (self.fresh("i"), self.fresh("n"));
                cx.env.insert(i_name.clone(), zero);
                cx.env.insert(n_name.clone(), n);
                IterState::Range { i: i_name, n: n_name }
            }
            tast::TIter::List(list) => {
                let l = self.expr(cx, list);
                let l_name = self.fresh("l");
                cx.env.insert(l_name.clone(), l);
                let elem = iter.elem_type();
                if elem.is_linear() {
                    IterState::Linear { l: l_name, elem }
                } else {
                    let zero = self.constant(cx, ConstValue::Int(0));
                    let i_name = self.fresh("i");
                    cx.env.insert(i_name.clone(), zero);
                    IterState::List { i: i_name, l: l_name }
                }
            }
        }
    }

    fn iter_vars(&self, st: &IterState) -> Vec<String> {
        match st {
            IterState::Range { i, n } => vec![i.clone(), n.clone()],
            IterState::List { i, l } => vec![i.clone(), l.clone()],
            IterState::Linear { l, .. } => vec![l.clone()],
        }
    }

    /// Whether another element remains.
    fn iter_test(&mut self, cx: &mut Cx, st: &IterState) -> Port {
        use crate::frontend::ast::CmpOp;
        let lt = NodeKind::Compare { op: CmpOp::Lt, ty: Type::Int };
        match st {
            IterState::Range { i, n } => {
                let (i, n) = (cx.env[i], cx.env[n]);
                (self.op(cx, lt, &[i, n]), 0)
            }
            IterState::List { i, l } => {
                let (i, l) = (cx.env[i], cx.env[l]);
                let elem = list_elem(&self.ty(l));
                let len = self.op(cx, NodeKind::ListOp { op: crate::ir::ListOpKind::Len, elem }, &[l]);
                (self.op(cx, lt, &[i, (len, 0)]), 0)
            }
            IterState::Linear { l, elem } => {
                let list = self.take(cx, l);
                let len = self.op(cx, NodeKind::ListOp { op: crate::ir::ListOpKind::Len, elem: elem.clone() }, &[list]);
                cx.env.insert(l.clone(), (len, 1));
                let zero = self.constant(cx, ConstValue::Int(0));
                (self.op(cx, lt, &[zero, (len, 0)]), 0)
            }
        }
    }

    /// Binds the next element to `target` and advances.
    fn iter_next(&mut self, cx: &mut Cx, st: &IterState, target: &TTarget) {
        use crate::ir::ListOpKind;
        match st {
            IterState::Range { i, .. } => {
                let cur = cx.env[i];
                self.advance(cx, i);
                self.bind(cx, target, cur);
            }
            IterState::List { i, l } => {
                let (ip, lp) = (cx.env[i], cx.env[l]);
                let elem = list_elem(&self.ty(lp));
                let get = self.op(cx, NodeKind::ListOp { op: ListOpKind::Get, elem }, &[lp, ip]);
                self.advance(cx, i);
                self.bind(cx, target, (get, 0));
            }
            IterState::Linear { l, elem } => {
                let list = self.take(cx, l);
                let zero = self.constant(cx, ConstValue::Int(0));
                let get = self.op(cx, NodeKind::ListOp { op: ListOpKind::Get, elem: elem.clone() }, &[list, zero]);
                cx.env.insert(l.clone(), (get, 1));
                self.bind(cx, target, (get, 0));
            }
        }
    }

    fn advance(&mut self, cx: &mut Cx, i: &str) {
        let cur = cx.env[i];
        let one = self.constant(cx, ConstValue::Int(1));
        let next = self.op(cx, NodeKind::IntOp(crate::ops::ArithOp::Add), &[cur, one]);
        cx.env.insert(i.to_string(), (next, 0));
    }

    /// Releases the exhausted iteration state.
    fn iter_finish(&mut self, cx: &mut Cx, st: &IterState) {
        for v in self.iter_vars(st) {
            let p = self.take(cx, &v);
            if self.b.out_type(p).is_linear() {
                let elem = list_elem(&self.ty(p));
                self.op(cx, NodeKind::ListOp { op: crate::ir::ListOpKind::Free, elem }, &[p]);
            }
            cx.env.remove(&v);
        }
    }
}

fn list_elem(t: &Type) -> Type {
    match t {
        Type::List(e) => (**e).clone(),
        other => panic!("compiler bug: expected a list, found `{other}`"),
    }
}
