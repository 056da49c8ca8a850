//! Statement-level abstract interpretation: every variable carries its type,
//! whether it is definitely assigned, and (for linear types) whether it is
//! still unconsumed. Control-flow joins merge these facts.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::py::{eval_literal, ConstBindings, LiteralError};
use super::resolve::{self, can_coerce, Dunder, ResolvedOp};
use super::tast::*;
use crate::constant::ConstValue;
use crate::diagnostic::{Category, Diagnostic, Span};
use crate::frontend::ast::*;
use crate::frontend::TokenKind;
use crate::ops::QuantumOp;
use crate::types::Type;

type CResult<T> = Result<T, Diagnostic>;

#[derive(Clone, Debug)]
struct VarInfo {
    ty: Type,
    /// Second type seen at a join; any use is an error.
    conflict: Option<Type>,
    definite: bool,
    /// For linear types: not yet consumed.
    live: bool,
    consumed_at: Option<Span>,
    closure: Option<FnId>,
    /// Inherited from an enclosing function; reading it is a capture.
    capture: bool,
    /// A linearity error was already reported; further uses are ignored.
    poisoned: bool,
    def_span: Span,
}

impl VarInfo {
    fn new(ty: Type, span: Span) -> Self {
        VarInfo {
            ty,
            conflict: None,
            definite: true,
            live: true,
            consumed_at: None,
            closure: None,
            capture: false,
            poisoned: false,
            def_span: span,
        }
    }

    fn linear(&self) -> bool {
        self.ty.is_linear()
    }

    fn live_linear(&self) -> bool {
        self.linear() && self.live && !self.poisoned && !self.capture
    }

    /// Equality on the facts that matter for the loop fixpoint.
    fn same(&self, other: &VarInfo) -> bool {
        self.ty == other.ty
            && self.conflict == other.conflict
            && self.definite == other.definite
            && (!self.linear() || self.live == other.live)
            && self.closure == other.closure
            && self.poisoned == other.poisoned
    }
}

type State = BTreeMap<String, VarInfo>;

/// State after the loop test, test result, body, continue states, break states.
type LoopPass<T> = (State, T, Vec<TStmt>, Vec<State>, Vec<State>);

fn same_state(a: &State, b: &State) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|((n1, v1), (n2, v2))| n1 == n2 && v1.same(v2))
}

/// A linear variable whose status differs between joined paths.
struct JoinIssue {
    name: String,
    note: Option<Span>,
}

fn join_two(a: &State, b: &State, issues: &mut Vec<JoinIssue>) -> State {
    let mut out = State::new();
    let names: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    for name in names {
        match (a.get(name), b.get(name)) {
            (Some(x), Some(y)) => {
                let mut v = x.clone();
                v.definite = x.definite && y.definite;
                v.poisoned = x.poisoned || y.poisoned;
                if x.ty != y.ty || x.closure != y.closure {
                    if x.linear() || y.linear() {
                        if !v.poisoned {
                            issues.push(JoinIssue { name: name.clone(), note: None });
                        }
                        v.poisoned = true;
                    } else {
                        v.conflict = Some(y.ty.clone());
                        v.closure = None;
                    }
                } else if v.conflict.is_none() {
                    v.conflict = y.conflict.clone();
                }
                if x.linear() && x.ty == y.ty && x.live != y.live {
                    if !v.poisoned {
                        issues.push(JoinIssue {
                            name: name.clone(),
                            note: x.consumed_at.or(y.consumed_at),
                        });
                    }
                    v.poisoned = true;
                    v.live = false;
                }
                out.insert(name.clone(), v);
            }
            (Some(x), None) | (None, Some(x)) => {
                let mut v = x.clone();
                if x.live_linear() {
                    issues.push(JoinIssue { name: name.clone(), note: None });
                    v.poisoned = true;
                    v.live = false;
                }
                v.definite = false;
                out.insert(name.clone(), v);
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn join_all<'s>(states: impl IntoIterator<Item = &'s State>, issues: &mut Vec<JoinIssue>) -> Option<State> {
    let mut acc: Option<State> = None;
    for s in states {
        acc = Some(match acc {
            None => s.clone(),
            Some(a) => join_two(&a, s, issues),
        });
    }
    acc
}

/// Join of two types on converging paths: defined only when they agree.
pub fn join_types(a: &Type, b: &Type) -> Option<Type> {
    (a == b).then(|| a.clone())
}

/// Variables usable after a join point.
fn slots(state: &State) -> Vec<VarSlot> {
    state
        .iter()
        .filter(|(_, v)| {
            v.definite && v.conflict.is_none() && !v.poisoned && !v.capture && (!v.linear() || v.live)
        })
        .map(|(n, v)| VarSlot {
            name: n.clone(),
            ty: v.ty.clone(),
            closure: v.closure,
        })
        .collect()
}

struct LoopCtx {
    /// Linear variables live when the loop was entered.
    live_before: BTreeSet<String>,
    breaks: Vec<State>,
    continues: Vec<State>,
    /// Iterating a linear list: `break` would drop the remaining elements.
    linear_iter: bool,
}

struct FnCtx {
    id: FnId,
    ret: Type,
    loops: Vec<LoopCtx>,
    captures_used: BTreeSet<String>,
    self_value_uses: Vec<Span>,
}

struct Sig {
    name: String,
    params: Vec<(String, Type)>,
    ret: Type,
    top_level: bool,
    self_name: Option<String>,
    span: Span,
}

pub struct Checker<'a> {
    bindings: &'a ConstBindings,
    globals: BTreeMap<String, FnId>,
    sigs: Vec<Sig>,
    bodies: Vec<Option<TFunction>>,
    nested_ids: HashMap<usize, FnId>,
    diags: Vec<Diagnostic>,
    mute: usize,
    ctx: Vec<FnCtx>,
}

fn err(cat: Category, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(cat, span, msg)
}

fn mismatch(span: Span, expected: &Type, found: &Type) -> Diagnostic {
    err(
        Category::TypeMismatch,
        span,
        format!("expected `{expected}`, found `{found}`"),
    )
}

fn texpr(kind: TExprKind, ty: Type, span: Span) -> TExpr {
    TExpr::new(kind, ty, span)
}

fn coerce(e: TExpr, to: &Type) -> CResult<TExpr> {
    if &e.ty == to {
        Ok(e)
    } else if can_coerce(&e.ty, to) {
        let span = e.span;
        Ok(texpr(
            TExprKind::Convert {
                arg: Box::new(e),
                to: to.clone(),
            },
            to.clone(),
            span,
        ))
    } else {
        Err(mismatch(e.span, to, &e.ty))
    }
}

fn none_const(span: Span) -> TExpr {
    texpr(TExprKind::Const(ConstValue::None), Type::None, span)
}

pub fn check_module(module: &Module, bindings: &ConstBindings) -> Result<TModule, Vec<Diagnostic>> {
    let mut c = Checker {
        bindings,
        globals: BTreeMap::new(),
        sigs: Vec::new(),
        bodies: Vec::new(),
        nested_ids: HashMap::new(),
        diags: Vec::new(),
        mute: 0,
        ctx: Vec::new(),
    };
    let mut registered = Vec::new();
    for f in &module.functions {
        if c.globals.contains_key(&f.name) {
            c.report(err(
                Category::UnsupportedFeature,
                f.name_span,
                format!("function `{}` is defined more than once", f.name),
            ));
            continue;
        }
        match c.signature(f) {
            Ok((params, ret)) => {
                let id = c.sigs.len();
                c.sigs.push(Sig {
                    name: f.name.clone(),
                    params,
                    ret,
                    top_level: true,
                    self_name: None,
                    span: f.span,
                });
                c.bodies.push(None);
                c.globals.insert(f.name.clone(), id);
                registered.push((id, f));
            }
            Err(d) => c.report(d),
        }
    }
    for (id, f) in registered {
        let mut state = State::new();
        for ((n, t), p) in c.sigs[id].params.iter().zip(&f.params) {
            state.insert(n.clone(), VarInfo::new(t.clone(), p.span));
        }
        let (body, _) = c.function_body(id, f, state);
        c.finish_function(id, body, Vec::new());
    }
    if !c.diags.is_empty() {
        return Err(c.diags);
    }
    Ok(TModule {
        functions: c.bodies.into_iter().map(|b| b.expect("function body checked")).collect(),
    })
}

impl<'a> Checker<'a> {
    fn report(&mut self, d: Diagnostic) {
        if self.mute == 0 {
            self.diags.push(d);
        }
    }

    fn fctx(&mut self) -> &mut FnCtx {
        self.ctx.last_mut().expect("inside a function")
    }

    fn annotation(&self, te: &TypeExpr) -> CResult<Type> {
        let bad = |msg: String| err(Category::TypeMismatch, te.span, msg);
        match &te.kind {
            TypeExprKind::NoneLit => Ok(Type::None),
            TypeExprKind::Name(n) => match n.as_str() {
                "bool" => Ok(Type::Bool),
                "int" => Ok(Type::Int),
                "float" => Ok(Type::Float),
                "Qubit" => Ok(Type::Qubit),
                _ => Err(err(Category::NotDefined, te.span, format!("unknown type `{n}`"))),
            },
            TypeExprKind::Subscript(base, args) => match (base.as_str(), args.as_slice()) {
                ("list", [elem]) => Ok(Type::list(self.annotation(elem)?)),
                ("tuple", items) => Ok(Type::Tuple(
                    items.iter().map(|i| self.annotation(i)).collect::<CResult<_>>()?,
                )),
                ("Callable", [params, ret]) => {
                    let TypeExprKind::List(ps) = &params.kind else {
                        return Err(bad("`Callable` needs a parameter list".into()));
                    };
                    Ok(Type::function(
                        ps.iter().map(|p| self.annotation(p)).collect::<CResult<_>>()?,
                        self.annotation(ret)?,
                    ))
                }
                ("list" | "Callable", _) => Err(bad(format!("wrong number of arguments for `{base}`"))),
                _ => Err(err(Category::NotDefined, te.span, format!("unknown type `{base}`"))),
            },
            TypeExprKind::List(_) => Err(bad("unexpected parameter list".into())),
        }
    }

    fn signature(&self, f: &FunctionDef) -> CResult<(Vec<(String, Type)>, Type)> {
        let mut params = Vec::new();
        for p in &f.params {
            let Some(a) = &p.annotation else {
                return Err(err(
                    Category::SignatureMissing,
                    p.span,
                    format!("parameter `{}` of `{}` needs a type annotation", p.name, f.name),
                ));
            };
            if params.iter().any(|(n, _)| n == &p.name) {
                return Err(err(
                    Category::Syntax,
                    p.span,
                    format!("duplicate parameter `{}`", p.name),
                ));
            }
            params.push((p.name.clone(), self.annotation(a)?));
        }
        let Some(r) = &f.returns else {
            return Err(err(
                Category::SignatureMissing,
                f.name_span,
                format!("function `{}` needs a return type annotation", f.name),
            ));
        };
        Ok((params, self.annotation(r)?))
    }

    fn finish_function(&mut self, id: FnId, body: Vec<TStmt>, captures: Vec<VarSlot>) {
        let s = &self.sigs[id];
        self.bodies[id] = Some(TFunction {
            name: s.name.clone(),
            params: s.params.clone(),
            ret: s.ret.clone(),
            body,
            captures,
            self_name: s.self_name.clone(),
            top_level: s.top_level,
            span: s.span,
        });
    }

    fn function_body(&mut self, id: FnId, f: &FunctionDef, state: State) -> (Vec<TStmt>, FnCtx) {
        let ret = self.sigs[id].ret.clone();
        self.ctx.push(FnCtx {
            id,
            ret: ret.clone(),
            loops: Vec::new(),
            captures_used: BTreeSet::new(),
            self_value_uses: Vec::new(),
        });
        let mut st = Some(state);
        let mut body = self.block(&f.body, &mut st);
        if let Some(state) = st {
            let end = Span::new(f.span.end, f.span.end, f.name_span.line, f.name_span.col);
            if ret != Type::None {
                self.report(err(
                    Category::TypeMismatch,
                    f.name_span,
                    format!("function `{}` may reach its end without returning `{ret}`", f.name),
                ));
            } else if let Err(d) = self.leak_check(&state, f.name_span, "the end of the function") {
                self.report(d);
            }
            body.push(TStmt {
                kind: TStmtKind::Return(none_const(end)),
                span: end,
            });
        }
        let ctx = self.ctx.pop().unwrap();
        (body, ctx)
    }

    fn leak_check(&self, state: &State, span: Span, where_: &str) -> CResult<()> {
        if let Some((n, v)) = state.iter().find(|(_, v)| v.live_linear()) {
            return Err(err(
                Category::LinearityDiscard,
                span,
                format!("linear variable `{n}` of type `{}` is not consumed before {where_}", v.ty),
            )
            .with_note(v.def_span, format!("`{n}` defined here")));
        }
        Ok(())
    }

    // ---- statements ----

    fn block(&mut self, stmts: &[Stmt], state: &mut Option<State>) -> Vec<TStmt> {
        let mut out = Vec::new();
        for s in stmts {
            let Some(st) = state.as_mut() else { break };
            match self.stmt(s, st) {
                Ok(Flow::Next(t)) => out.extend(t),
                Ok(Flow::Stop(t)) => {
                    out.extend(t);
                    *state = None;
                }
                Err(d) => {
                    self.report(d);
                    if matches!(s.kind, StmtKind::Return(_) | StmtKind::Break | StmtKind::Continue) {
                        *state = None;
                    }
                }
            }
        }
        out
    }

    fn stmt(&mut self, s: &Stmt, state: &mut State) -> CResult<Flow> {
        let span = s.span;
        let one = |kind| Ok(Flow::Next(Some(TStmt { kind, span })));
        match &s.kind {
            StmtKind::Pass => Ok(Flow::Next(None)),
            StmtKind::Expr(e) => {
                let te = self.expr(e, state, None)?;
                if te.ty.is_linear() {
                    return Err(err(
                        Category::LinearityDiscard,
                        e.span,
                        format!("value of linear type `{}` is not used", te.ty),
                    ));
                }
                one(TStmtKind::Expr(te))
            }
            StmtKind::Assign { target, value } => {
                if let (Target::Name(name, tspan), ExprKind::IfExp { cond, then, orelse }) =
                    (target, &value.kind)
                {
                    let (te, other) = self.if_exp(value.span, cond, then, orelse, state, None, true)?;
                    if let Some(other) = other {
                        // Differently typed branches: the variable exists
                        // but any later use is a conflict.
                        let ty = match &te.kind {
                            TExprKind::IfExp { then, .. } => match &then.kind {
                                TExprKind::Discard(inner) => inner.ty.clone(),
                                _ => unreachable!(),
                            },
                            _ => unreachable!(),
                        };
                        self.bind(state, name, ty, *tspan)?;
                        state.get_mut(name).unwrap().conflict = Some(other);
                        return one(TStmtKind::Expr(te));
                    }
                    let t = self.bind_target(state, target, &te.ty)?;
                    return one(TStmtKind::Assign { target: t, value: te });
                }
                let te = self.expr(value, state, None)?;
                let t = self.bind_target(state, target, &te.ty)?;
                one(TStmtKind::Assign { target: t, value: te })
            }
            StmtKind::AugAssign { target, op, value } => {
                let Target::Name(name, tspan) = target else { unreachable!() };
                let read = Expr {
                    kind: ExprKind::Name(name.clone()),
                    span: *tspan,
                };
                let lhs = self.expr(&read, state, None)?;
                let rhs = self.expr(value, state, None)?;
                let te = self.binary(*op, lhs, rhs, span)?;
                let old = state.get(name).map(|v| v.ty.clone());
                if let Some(old) = old {
                    if old != te.ty {
                        return Err(err(
                            Category::TypeMismatch,
                            span,
                            format!("`{name}` has type `{old}` but `{}=` produces `{}`", op.symbol(), te.ty),
                        ));
                    }
                }
                let t = self.bind_target(state, target, &te.ty)?;
                one(TStmtKind::Assign { target: t, value: te })
            }
            StmtKind::If { cond, body, orelse } => {
                let c = self.condition(cond, state)?;
                let mut then_st = Some(state.clone());
                let mut else_st = Some(state.clone());
                let tbody = self.block(body, &mut then_st);
                let ebody = self.block(orelse, &mut else_st);
                let mut issues = Vec::new();
                let joined = join_all(then_st.iter().chain(else_st.iter()), &mut issues);
                if let Some(j) = &joined {
                    *state = j.clone();
                }
                self.join_issues(issues, span)?;
                let kind = TStmtKind::If {
                    cond: c,
                    body: tbody,
                    orelse: ebody,
                    joined: joined.as_ref().map(slots).unwrap_or_default(),
                };
                match joined {
                    Some(j) => {
                        *state = j;
                        one(kind)
                    }
                    None => Ok(Flow::Stop(Some(TStmt { kind, span }))),
                }
            }
            StmtKind::While { cond, body } => self.while_loop(span, cond, body, state),
            StmtKind::For { target, iter, body } => self.for_loop(span, target, iter, body, state),
            StmtKind::Break | StmtKind::Continue => {
                let is_break = matches!(s.kind, StmtKind::Break);
                let lp = self.fctx().loops.last().expect("parser rejects loose break");
                if is_break && lp.linear_iter {
                    return Err(err(
                        Category::LinearityDiscard,
                        span,
                        "`break` would discard the remaining elements of a linear list",
                    ));
                }
                let live_before = lp.live_before.clone();
                let mut st = state.clone();
                let mut result = Ok(());
                for (n, v) in st.iter_mut() {
                    if v.live_linear() && !live_before.contains(n) {
                        if result.is_ok() {
                            result = Err(err(
                                Category::LinearityDiscard,
                                span,
                                format!(
                                    "linear variable `{n}` is not consumed before `{}`",
                                    if is_break { "break" } else { "continue" }
                                ),
                            )
                            .with_note(v.def_span, format!("`{n}` defined here")));
                        }
                        v.poisoned = true;
                    }
                }
                let lp = self.fctx().loops.last_mut().unwrap();
                if is_break {
                    lp.breaks.push(st);
                } else {
                    lp.continues.push(st);
                }
                result?;
                Ok(Flow::Stop(Some(TStmt {
                    kind: if is_break { TStmtKind::Break } else { TStmtKind::Continue },
                    span,
                })))
            }
            StmtKind::Return(value) => {
                let ret = self.fctx().ret.clone();
                let te = match value {
                    Some(v) => {
                        let te = self.expr(v, state, Some(&ret))?;
                        coerce(te, &ret)?
                    }
                    None => {
                        if ret != Type::None {
                            return Err(err(
                                Category::TypeMismatch,
                                span,
                                format!("expected a return value of type `{ret}`"),
                            ));
                        }
                        none_const(span)
                    }
                };
                if self.fctx().loops.iter().any(|l| l.linear_iter) {
                    return Err(err(
                        Category::LinearityDiscard,
                        span,
                        "`return` would discard the remaining elements of a linear list",
                    ));
                }
                self.leak_check(state, span, "returning")?;
                Ok(Flow::Stop(Some(TStmt {
                    kind: TStmtKind::Return(te),
                    span,
                })))
            }
            StmtKind::FunctionDef(f) => {
                let (fid, info) = self.nested_def(f, state)?;
                if let Some(old) = state.get(&f.name) {
                    if old.live_linear() {
                        return Err(err(
                            Category::LinearityDiscard,
                            f.name_span,
                            format!("linear variable `{}` is overwritten before being consumed", f.name),
                        ));
                    }
                }
                state.insert(f.name.clone(), info);
                one(TStmtKind::Def {
                    name: f.name.clone(),
                    func: fid,
                })
            }
        }
    }

    fn join_issues(&mut self, issues: Vec<JoinIssue>, span: Span) -> CResult<()> {
        if let Some(i) = issues.into_iter().next() {
            let mut d = err(
                Category::LinearityConditionalUse,
                span,
                format!("linear variable `{}` is consumed on some control-flow paths but not others", i.name),
            );
            if let Some(n) = i.note {
                d = d.with_note(n, format!("`{}` consumed here", i.name));
            }
            return Err(d);
        }
        Ok(())
    }

    fn condition(&mut self, cond: &Expr, state: &mut State) -> CResult<TExpr> {
        let c = self.expr(cond, state, None)?;
        if c.ty != Type::Bool {
            return Err(err(
                Category::TypeMismatch,
                cond.span,
                format!("condition must be `bool`, found `{}`", c.ty),
            ));
        }
        Ok(c)
    }

    fn live_linear_names(state: &State) -> BTreeSet<String> {
        state
            .iter()
            .filter(|(_, v)| v.live_linear())
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Runs one abstract iteration of a loop body from `head`.
    /// Returns the state after the loop test, the typed pieces and the
    /// collected continue/break states.
    fn loop_pass<T>(
        &mut self,
        head: &State,
        pre: &State,
        linear_iter: bool,
        test: &mut dyn FnMut(&mut Self, &mut State) -> CResult<T>,
        body: &[Stmt],
        bind: &mut dyn FnMut(&mut Self, &mut State) -> CResult<()>,
    ) -> CResult<LoopPass<T>> {
        let mut st = head.clone();
        let t = test(self, &mut st)?;
        let after_test = st.clone();
        bind(self, &mut st)?;
        self.fctx().loops.push(LoopCtx {
            live_before: Self::live_linear_names(pre),
            breaks: Vec::new(),
            continues: Vec::new(),
            linear_iter,
        });
        let mut body_st = Some(st);
        let tbody = self.block(body, &mut body_st);
        let lp = self.fctx().loops.pop().unwrap();
        let mut continues = lp.continues;
        if let Some(mut end) = body_st {
            // Falling off the end continues; body-local linear values must
            // be gone by then.
            for (n, v) in end.iter_mut() {
                if v.live_linear() && !pre.get(n).is_some_and(|p| p.live_linear()) {
                    let span = body.last().map_or(Span::default(), |s| s.span);
                    self.report(
                        err(
                            Category::LinearityDiscard,
                            v.def_span,
                            format!("linear variable `{n}` is not consumed by the end of the loop body"),
                        )
                        .with_note(span, "loop body ends here"),
                    );
                    v.poisoned = true;
                }
            }
            continues.push(end);
        }
        Ok((after_test, t, tbody, continues, lp.breaks))
    }

    #[allow(clippy::type_complexity)]
    fn run_loop<T>(
        &mut self,
        span: Span,
        state: &mut State,
        linear_iter: bool,
        mut test: impl FnMut(&mut Self, &mut State) -> CResult<T>,
        body: &[Stmt],
        mut bind: impl FnMut(&mut Self, &mut State) -> CResult<()>,
    ) -> CResult<(T, Vec<TStmt>, Vec<VarSlot>, Vec<VarSlot>)> {
        let pre = state.clone();
        let mut head = pre.clone();
        self.mute += 1;
        let mut rounds = 0;
        loop {
            rounds += 1;
            let r = self.loop_pass(&head, &pre, linear_iter, &mut test, body, &mut bind);
            let Ok((_, _, _, continues, _)) = r else { break };
            let mut ignored = Vec::new();
            let next = join_all(std::iter::once(&pre).chain(continues.iter()), &mut ignored).unwrap();
            if same_state(&next, &head) || rounds > 64 {
                break;
            }
            head = next;
        }
        self.mute -= 1;
        let (after_test, t, tbody, continues, breaks) =
            self.loop_pass(&head, &pre, linear_iter, &mut test, body, &mut bind)?;
        let mut issues = Vec::new();
        let _ = join_all(std::iter::once(&pre).chain(continues.iter()), &mut issues);
        let exit = join_all(std::iter::once(&after_test).chain(breaks.iter()), &mut issues).unwrap();
        let carried = slots(&head);
        let exits = slots(&exit);
        *state = exit;
        self.join_issues(issues, span)?;
        Ok((t, tbody, carried, exits))
    }

    fn while_loop(&mut self, span: Span, cond: &Expr, body: &[Stmt], state: &mut State) -> CResult<Flow> {
        let (c, tbody, carried, exits) = self.run_loop(
            span,
            state,
            false,
            |me, st| me.condition(cond, st),
            body,
            |_, _| Ok(()),
        )?;
        Ok(Flow::Next(Some(TStmt {
            kind: TStmtKind::While {
                cond: c,
                body: tbody,
                carried,
                exits,
            },
            span,
        })))
    }

    fn is_builtin_name(&self, state: &State, e: &Expr, name: &str) -> bool {
        matches!(&e.kind, ExprKind::Name(n) if n == name)
            && !state.contains_key(name)
            && !self.globals.contains_key(name)
    }

    /// `range(n)` call, when `range` is the builtin.
    fn as_range<'e>(&self, state: &State, e: &'e Expr) -> Option<&'e [Expr]> {
        match &e.kind {
            ExprKind::Call { func, args } if self.is_builtin_name(state, func, "range") => Some(args),
            _ => None,
        }
    }

    fn range_bound(&mut self, args: &[Expr], span: Span, state: &mut State) -> CResult<TExpr> {
        if args.len() != 1 {
            return Err(err(
                Category::Arity,
                span,
                format!("`range` expects 1 argument, got {}", args.len()),
            ));
        }
        let n = self.expr(&args[0], state, None)?;
        coerce(n, &Type::Int)
    }

    fn iter(&mut self, iter: &Expr, state: &mut State) -> CResult<TIter> {
        if let Some(args) = self.as_range(state, iter) {
            return Ok(TIter::Range(Box::new(self.range_bound(args, iter.span, state)?)));
        }
        let e = self.expr(iter, state, None)?;
        match &e.ty {
            Type::List(_) => Ok(TIter::List(Box::new(e))),
            other => Err(err(
                Category::TypeMismatch,
                iter.span,
                format!("can only iterate over lists or `range(...)`, found `{other}`"),
            )),
        }
    }

    fn for_loop(
        &mut self,
        span: Span,
        target: &Target,
        iter: &Expr,
        body: &[Stmt],
        state: &mut State,
    ) -> CResult<Flow> {
        let titer = self.iter(iter, state)?;
        let elem = titer.elem_type();
        let linear_iter = elem.is_linear();
        let mut ttarget = None;
        let (_, tbody, carried, exits) = self.run_loop(
            span,
            state,
            linear_iter,
            |_, _| Ok(()),
            body,
            |me, st| {
                ttarget = Some(me.bind_target(st, target, &elem)?);
                Ok(())
            },
        )?;
        Ok(Flow::Next(Some(TStmt {
            kind: TStmtKind::For {
                target: ttarget.expect("loop body was checked"),
                iter: titer,
                body: tbody,
                carried,
                exits,
            },
            span,
        })))
    }

    fn bind(&mut self, state: &mut State, name: &str, ty: Type, span: Span) -> CResult<()> {
        if let Some(old) = state.get(name) {
            if old.live_linear() {
                return Err(err(
                    Category::LinearityDiscard,
                    span,
                    format!("linear variable `{name}` is overwritten before being consumed"),
                )
                .with_note(old.def_span, format!("`{name}` defined here")));
            }
        }
        state.insert(name.to_string(), VarInfo::new(ty, span));
        Ok(())
    }

    fn bind_target(&mut self, state: &mut State, target: &Target, ty: &Type) -> CResult<TTarget> {
        match target {
            Target::Name(n, span) => {
                self.bind(state, n, ty.clone(), *span)?;
                Ok(TTarget::Name(n.clone(), ty.clone()))
            }
            Target::Tuple(items, span) => {
                let Type::Tuple(elems) = ty else {
                    return Err(err(
                        Category::TypeMismatch,
                        *span,
                        format!("cannot unpack a value of type `{ty}`"),
                    ));
                };
                if elems.len() != items.len() {
                    return Err(err(
                        Category::Arity,
                        *span,
                        format!("cannot unpack `{ty}` into {} targets", items.len()),
                    ));
                }
                let mut seen = BTreeSet::new();
                for (n, s) in target.names() {
                    if !seen.insert(n) {
                        return Err(err(Category::Syntax, s, format!("`{n}` is assigned twice")));
                    }
                }
                Ok(TTarget::Tuple(
                    items
                        .iter()
                        .zip(elems)
                        .map(|(i, t)| self.bind_target(state, i, t))
                        .collect::<CResult<_>>()?,
                ))
            }
        }
    }

    fn nested_def(&mut self, f: &FunctionDef, outer: &State) -> CResult<(FnId, VarInfo)> {
        let (params, ret) = self.signature(f)?;
        let pid = self.fctx().id;
        let parent = self.sigs[pid].name.clone();
        let sig = Sig {
            name: format!("{parent}.{}", f.name),
            params: params.clone(),
            ret: ret.clone(),
            top_level: false,
            self_name: Some(f.name.clone()),
            span: f.span,
        };
        let id = match self.nested_ids.get(&f.span.start) {
            Some(&id) => {
                self.sigs[id] = sig;
                id
            }
            None => {
                let id = self.sigs.len();
                self.sigs.push(sig);
                self.bodies.push(None);
                self.nested_ids.insert(f.span.start, id);
                id
            }
        };
        let fn_ty = Type::function(params.iter().map(|(_, t)| t.clone()).collect(), ret);
        let mut state: State = outer
            .iter()
            .map(|(n, v)| {
                let mut v = v.clone();
                v.capture = true;
                (n.clone(), v)
            })
            .collect();
        let mut me = VarInfo::new(fn_ty.clone(), f.name_span);
        me.closure = Some(id);
        state.insert(f.name.clone(), me.clone());
        for ((n, t), p) in params.iter().zip(&f.params) {
            state.insert(n.clone(), VarInfo::new(t.clone(), p.span));
        }
        let (body, ctx) = self.function_body(id, f, state);
        let captures: Vec<VarSlot> = ctx
            .captures_used
            .iter()
            .map(|n| {
                let v = &outer[n];
                VarSlot {
                    name: n.clone(),
                    ty: v.ty.clone(),
                    closure: v.closure,
                }
            })
            .collect();
        if !captures.is_empty() {
            if let Some(s) = ctx.self_value_uses.first() {
                return Err(err(
                    Category::UnsupportedFeature,
                    *s,
                    format!("`{}` captures variables and cannot be used as a value", f.name),
                ));
            }
        }
        // Captures of the nested function are reads in this one.
        for c in &captures {
            if outer[&c.name].capture {
                self.fctx().captures_used.insert(c.name.clone());
            }
        }
        self.finish_function(id, body, captures);
        Ok((id, me))
    }

    // ---- expressions ----

    fn use_var(&mut self, state: &mut State, name: &str, span: Span) -> CResult<Option<TExpr>> {
        let Some(v) = state.get_mut(name) else {
            return Ok(None);
        };
        if v.poisoned {
            return Ok(Some(texpr(TExprKind::Var(name.into()), v.ty.clone(), span)));
        }
        if !v.definite {
            return Err(err(
                Category::NotDefinitelyAssigned,
                span,
                format!("variable `{name}` is not definitely assigned"),
            ));
        }
        if let Some(other) = &v.conflict {
            return Err(err(
                Category::BranchTypeConflict,
                span,
                format!("variable `{name}` could be `{}` or `{other}`", v.ty),
            ));
        }
        if v.capture && v.linear() {
            return Err(err(
                Category::LinearityCopy,
                span,
                format!("nested functions cannot capture linear variable `{name}`"),
            )
            .with_note(v.def_span, format!("`{name}` defined here")));
        }
        if v.linear() {
            if !v.live {
                let mut d = err(
                    Category::LinearityCopy,
                    span,
                    format!("linear variable `{name}` is used after being consumed"),
                );
                if let Some(c) = v.consumed_at {
                    d = d.with_note(c, format!("`{name}` consumed here"));
                }
                return Err(d);
            }
            v.live = false;
            v.consumed_at = Some(span);
        }
        let ty = v.ty.clone();
        let captured = v.capture;
        let closure = v.closure;
        if captured {
            self.fctx().captures_used.insert(name.to_string());
        }
        if let Some(fid) = closure {
            // A nested function used as a value.
            if self.fctx().id == fid {
                self.fctx().self_value_uses.push(span);
            } else if self.bodies[fid].as_ref().is_some_and(|b| !b.captures.is_empty()) {
                return Err(err(
                    Category::UnsupportedFeature,
                    span,
                    format!("`{name}` captures variables and cannot be used as a value"),
                ));
            }
            return Ok(Some(texpr(TExprKind::FuncRef(fid), ty, span)));
        }
        Ok(Some(texpr(TExprKind::Var(name.into()), ty, span)))
    }

    fn name(&mut self, state: &mut State, name: &str, span: Span) -> CResult<TExpr> {
        if let Some(e) = self.use_var(state, name, span)? {
            return Ok(e);
        }
        if let Some(&fid) = self.globals.get(name) {
            let s = &self.sigs[fid];
            let ty = Type::function(s.params.iter().map(|(_, t)| t.clone()).collect(), s.ret.clone());
            return Ok(texpr(TExprKind::FuncRef(fid), ty, span));
        }
        if let Some(op) = QuantumOp::from_source_name(name) {
            return Ok(texpr(TExprKind::GateRef(op), op.function_type(), span));
        }
        if matches!(name, "get" | "len" | "apply" | "range" | "float" | "int" | "py") {
            return Err(err(
                Category::UnsupportedFeature,
                span,
                format!("builtin `{name}` can only be called, not used as a value"),
            ));
        }
        Err(err(Category::NotDefined, span, format!("name `{name}` is not defined")))
    }

    fn expr(&mut self, e: &Expr, state: &mut State, expected: Option<&Type>) -> CResult<TExpr> {
        let span = e.span;
        match &e.kind {
            ExprKind::Int(v) => {
                let v = i64::try_from(*v).map_err(|_| {
                    err(
                        Category::OverflowLiteral,
                        span,
                        format!("integer literal {v} does not fit in 64 bits"),
                    )
                })?;
                Ok(texpr(TExprKind::Const(ConstValue::Int(v)), Type::Int, span))
            }
            ExprKind::Float(v) => Ok(texpr(TExprKind::Const(ConstValue::Float(*v)), Type::Float, span)),
            ExprKind::Bool(b) => Ok(texpr(TExprKind::Const(ConstValue::Bool(*b)), Type::Bool, span)),
            ExprKind::None => Ok(none_const(span)),
            ExprKind::Str(_) => Err(err(Category::UnsupportedFeature, span, "strings are not supported")),
            ExprKind::Name(n) => self.name(state, n, span),
            ExprKind::Unary { op, operand } => {
                if *op == UnaryOp::Neg {
                    if let ExprKind::Int(m) = operand.kind {
                        if m == 1u128 << 63 {
                            return Ok(texpr(TExprKind::Const(ConstValue::Int(i64::MIN)), Type::Int, span));
                        }
                    }
                }
                let arg = self.expr(operand, state, None)?;
                self.unary(*op, arg, span)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, state, None)?;
                let r = self.expr(rhs, state, None)?;
                self.binary(*op, l, r, span)
            }
            ExprKind::BoolOp { op, lhs, rhs } => {
                let l = self.expr(lhs, state, None)?;
                if l.ty != Type::Bool {
                    return Err(mismatch(lhs.span, &Type::Bool, &l.ty));
                }
                let mut rstate = state.clone();
                let r = self.expr(rhs, &mut rstate, None)?;
                if r.ty != Type::Bool {
                    return Err(mismatch(rhs.span, &Type::Bool, &r.ty));
                }
                let mut issues = Vec::new();
                *state = join_two(state, &rstate, &mut issues);
                self.join_issues(issues, span)?;
                Ok(texpr(
                    TExprKind::BoolOp {
                        op: *op,
                        lhs: Box::new(l),
                        rhs: Box::new(r),
                    },
                    Type::Bool,
                    span,
                ))
            }
            ExprKind::Compare { first, rest } => {
                let f = self.expr(first, state, None)?;
                let mut prev = f.ty.clone();
                let mut trest = Vec::new();
                let mut cond_state: Option<State> = None;
                for (i, (op, e)) in rest.iter().enumerate() {
                    // Operands after the first link run only if the chain
                    // has not failed yet.
                    let st = if i == 0 {
                        &mut *state
                    } else {
                        cond_state.get_or_insert_with(|| state.clone())
                    };
                    let te = self.expr(e, st, None)?;
                    let r = resolve::resolve_compare(*op, &prev, &te.ty)
                        .map_err(|m| err(Category::TypeMismatch, span, m))?;
                    prev = te.ty.clone();
                    trest.push((*op, r.operands[0].clone(), te));
                }
                if let Some(cs) = cond_state {
                    let mut issues = Vec::new();
                    *state = join_two(state, &cs, &mut issues);
                    self.join_issues(issues, span)?;
                }
                Ok(texpr(
                    TExprKind::Compare {
                        first: Box::new(f),
                        rest: trest,
                    },
                    Type::Bool,
                    span,
                ))
            }
            ExprKind::IfExp { cond, then, orelse } => {
                Ok(self.if_exp(span, cond, then, orelse, state, expected, false)?.0)
            }
            ExprKind::Tuple(items) => {
                let exp_items = match expected {
                    Some(Type::Tuple(ts)) if ts.len() == items.len() => Some(ts),
                    _ => None,
                };
                let mut out = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    out.push(self.expr(item, state, exp_items.map(|ts| &ts[i]))?);
                }
                let ty = Type::Tuple(out.iter().map(|e| e.ty.clone()).collect());
                Ok(texpr(TExprKind::Tuple(out), ty, span))
            }
            ExprKind::List(items) => {
                let exp_elem = match expected {
                    Some(Type::List(t)) => Some(&**t),
                    _ => None,
                };
                let mut out = Vec::new();
                for item in items {
                    let te = self.expr(item, state, exp_elem)?;
                    out.push(te);
                }
                let elem = match (out.first(), exp_elem) {
                    (_, Some(t)) => t.clone(),
                    (Some(f), None) => f.ty.clone(),
                    (None, None) => {
                        return Err(err(
                            Category::TypeMismatch,
                            span,
                            "cannot infer the element type of an empty list here",
                        ))
                    }
                };
                let out = out
                    .into_iter()
                    .map(|e| coerce(e, &elem))
                    .collect::<CResult<Vec<_>>>()?;
                Ok(texpr(TExprKind::List(out), Type::list(elem), span))
            }
            ExprKind::ListComp { elt, target, iter, conditions } => {
                if let Some(c) = conditions.first() {
                    return Err(err(
                        Category::UnsupportedFeature,
                        c.span,
                        "conditions in list comprehensions are not supported",
                    ));
                }
                let titer = self.iter(iter, state)?;
                let elem = titer.elem_type();
                let mut inner = state.clone();
                let ttarget = self.bind_target(&mut inner, target, &elem)?;
                let te = self.expr(elt, &mut inner, None)?;
                for (n, _) in target.names() {
                    if inner[n].live_linear() {
                        return Err(err(
                            Category::LinearityDiscard,
                            target.span(),
                            format!("linear comprehension variable `{n}` is not consumed"),
                        ));
                    }
                }
                let bound: BTreeSet<&str> = target.names().into_iter().map(|(n, _)| n).collect();
                for (n, v) in state.iter() {
                    if v.live_linear() && !bound.contains(n.as_str()) && !inner[n].live {
                        return Err(err(
                            Category::LinearityCopy,
                            span,
                            format!("comprehension would consume linear variable `{n}` once per element"),
                        ));
                    }
                }
                // Captures recorded while checking `elt` remain recorded;
                // nothing else of the inner scope escapes.
                let ty = Type::list(te.ty.clone());
                Ok(texpr(
                    TExprKind::ListComp {
                        elt: Box::new(te),
                        target: ttarget,
                        iter: titer,
                    },
                    ty,
                    span,
                ))
            }
            ExprKind::Subscript { value, index } => {
                let v = self.expr(value, state, None)?;
                match &v.ty {
                    Type::List(elem) if elem.is_linear() => Err(err(
                        Category::TypeMismatch,
                        span,
                        "elements of a linear list must be taken with `get`",
                    )),
                    Type::List(elem) => {
                        let elem = (**elem).clone();
                        let i = self.expr(index, state, None)?;
                        let i = coerce(i, &Type::Int)?;
                        Ok(texpr(
                            TExprKind::ListGet {
                                list: Box::new(v),
                                index: Box::new(i),
                            },
                            elem,
                            span,
                        ))
                    }
                    Type::Tuple(elems) => {
                        if v.ty.is_linear() {
                            return Err(err(
                                Category::TypeMismatch,
                                span,
                                "cannot index a linear tuple; unpack it instead",
                            ));
                        }
                        let k = match &index.kind {
                            ExprKind::Int(k) => Some(*k as i128),
                            ExprKind::Unary { op: UnaryOp::Neg, operand } => match operand.kind {
                                ExprKind::Int(k) => Some(-(k as i128)),
                                _ => None,
                            },
                            _ => None,
                        }
                        .ok_or_else(|| {
                            err(Category::TypeMismatch, index.span, "tuple index must be an integer literal")
                        })?;
                        let n = elems.len() as i128;
                        let idx = if k < 0 { k + n } else { k };
                        if idx < 0 || idx >= n {
                            return Err(err(
                                Category::TypeMismatch,
                                index.span,
                                format!("tuple index {k} out of range for `{}`", v.ty),
                            ));
                        }
                        let ty = elems[idx as usize].clone();
                        Ok(texpr(
                            TExprKind::TupleGet {
                                tuple: Box::new(v),
                                index: idx as usize,
                            },
                            ty,
                            span,
                        ))
                    }
                    other => Err(err(
                        Category::TypeMismatch,
                        span,
                        format!("type `{other}` cannot be indexed"),
                    )),
                }
            }
            ExprKind::Call { func, args } => self.call(func, args, span, state),
            ExprKind::MethodCall { receiver, method, method_span, args } => {
                self.method_call(receiver, method, *method_span, args, span, state)
            }
            ExprKind::Py { tokens } => self.py(tokens, span, state),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn if_exp(
        &mut self,
        span: Span,
        cond: &Expr,
        then: &Expr,
        orelse: &Expr,
        state: &mut State,
        expected: Option<&Type>,
        allow_conflict: bool,
    ) -> CResult<(TExpr, Option<Type>)> {
        let c = self.condition(cond, state)?;
        let mut tstate = state.clone();
        let mut estate = state.clone();
        let t = self.expr(then, &mut tstate, expected)?;
        let e = self.expr(orelse, &mut estate, expected)?;
        let mut issues = Vec::new();
        *state = join_two(&tstate, &estate, &mut issues);
        self.join_issues(issues, span)?;
        if t.ty != e.ty {
            if allow_conflict && !t.ty.is_linear() && !e.ty.is_linear() {
                let other = e.ty.clone();
                let wrap = |x: TExpr| {
                    let s = x.span;
                    texpr(TExprKind::Discard(Box::new(x)), Type::None, s)
                };
                return Ok((
                    texpr(
                        TExprKind::IfExp {
                            cond: Box::new(c),
                            then: Box::new(wrap(t)),
                            orelse: Box::new(wrap(e)),
                        },
                        Type::None,
                        span,
                    ),
                    Some(other),
                ));
            }
            return Err(err(
                Category::BranchTypeConflict,
                span,
                format!("conditional expression could be `{}` or `{}`", t.ty, e.ty),
            ));
        }
        let ty = t.ty.clone();
        Ok((
            texpr(
                TExprKind::IfExp {
                    cond: Box::new(c),
                    then: Box::new(t),
                    orelse: Box::new(e),
                },
                ty,
                span,
            ),
            None,
        ))
    }

    fn unary(&mut self, op: UnaryOp, arg: TExpr, span: Span) -> CResult<TExpr> {
        let r = resolve::resolve_unary(op, &arg.ty).map_err(|m| err(Category::TypeMismatch, span, m))?;
        let arg = coerce(arg, &r.operands[0])?;
        Ok(match r.op {
            ResolvedOp::Identity => {
                let mut a = arg;
                a.span = span;
                a
            }
            ResolvedOp::Not => texpr(TExprKind::Not(Box::new(arg)), Type::Bool, span),
            ResolvedOp::Arith(aop) => texpr(TExprKind::Arith { op: aop, args: vec![arg] }, r.result, span),
            ResolvedOp::Cmp(_) => unreachable!(),
        })
    }

    fn binary(&mut self, op: BinOp, l: TExpr, r: TExpr, span: Span) -> CResult<TExpr> {
        let res = resolve::resolve_binary(op, &l.ty, &r.ty).map_err(|m| err(Category::TypeMismatch, span, m))?;
        let l = coerce(l, &res.operands[0])?;
        let r = coerce(r, &res.operands[1])?;
        let ResolvedOp::Arith(aop) = res.op else { unreachable!() };
        Ok(texpr(TExprKind::Arith { op: aop, args: vec![l, r] }, res.result, span))
    }

    fn compare(&mut self, op: CmpOp, l: TExpr, r: TExpr, span: Span) -> CResult<TExpr> {
        let res = resolve::resolve_compare(op, &l.ty, &r.ty).map_err(|m| err(Category::TypeMismatch, span, m))?;
        Ok(texpr(
            TExprKind::Compare {
                first: Box::new(l),
                rest: vec![(op, res.operands[0].clone(), r)],
            },
            Type::Bool,
            span,
        ))
    }

    fn arity(&self, what: &str, expected: usize, args: &[Expr], span: Span) -> CResult<()> {
        if args.len() != expected {
            return Err(err(
                Category::Arity,
                span,
                format!(
                    "`{what}` expects {expected} argument{}, got {}",
                    if expected == 1 { "" } else { "s" },
                    args.len()
                ),
            ));
        }
        Ok(())
    }

    fn args(&mut self, params: &[Type], args: &[Expr], state: &mut State) -> CResult<Vec<TExpr>> {
        params
            .iter()
            .zip(args)
            .map(|(p, a)| {
                let te = self.expr(a, state, Some(p))?;
                coerce(te, p)
            })
            .collect()
    }

    fn call(&mut self, func: &Expr, args: &[Expr], span: Span, state: &mut State) -> CResult<TExpr> {
        if let ExprKind::Name(name) = &func.kind {
            if let Some(v) = state.get(name) {
                if let (Some(fid), false) = (v.closure, v.poisoned) {
                    // Direct call of a nested function through its name.
                    if v.capture {
                        self.fctx().captures_used.insert(name.clone());
                    }
                    let Type::Function(params, ret) = v.ty.clone() else { unreachable!() };
                    self.arity(name, params.len(), args, span)?;
                    let targs = self.args(&params, args, state)?;
                    return Ok(texpr(
                        TExprKind::CallClosure {
                            target: fid,
                            var: name.clone(),
                            args: targs,
                        },
                        *ret,
                        span,
                    ));
                }
            } else if let Some(&fid) = self.globals.get(name) {
                let params: Vec<Type> = self.sigs[fid].params.iter().map(|(_, t)| t.clone()).collect();
                let ret = self.sigs[fid].ret.clone();
                self.arity(name, params.len(), args, span)?;
                let targs = self.args(&params, args, state)?;
                return Ok(texpr(TExprKind::Call { target: fid, args: targs }, ret, span));
            } else {
                return self.builtin_call(name, func.span, args, span, state);
            }
        }
        let f = self.expr(func, state, None)?;
        let Type::Function(params, ret) = f.ty.clone() else {
            return Err(err(
                Category::TypeMismatch,
                func.span,
                format!("value of type `{}` is not callable", f.ty),
            ));
        };
        self.arity("function", params.len(), args, span)?;
        let targs = self.args(&params, args, state)?;
        Ok(texpr(
            TExprKind::CallIndirect {
                func: Box::new(f),
                args: targs,
            },
            *ret,
            span,
        ))
    }

    fn builtin_call(
        &mut self,
        name: &str,
        name_span: Span,
        args: &[Expr],
        span: Span,
        state: &mut State,
    ) -> CResult<TExpr> {
        if let Some(op) = QuantumOp::from_source_name(name) {
            let params = op.inputs();
            self.arity(name, params.len(), args, span)?;
            let targs = self.args(&params, args, state)?;
            return Ok(texpr(TExprKind::Gate { op, args: targs }, op.result_type(), span));
        }
        match name {
            "get" | "len" | "apply" => {
                let Some((recv, rest)) = args.split_first() else {
                    return Err(err(Category::Arity, span, format!("`{name}` expects a list argument")));
                };
                let r = self.expr(recv, state, None)?;
                self.list_method(r, name, rest, span, state)
            }
            "range" => {
                let n = self.range_bound(args, span, state)?;
                Ok(texpr(TExprKind::Range(Box::new(n)), Type::list(Type::Int), span))
            }
            "float" | "int" => {
                self.arity(name, 1, args, span)?;
                let a = self.expr(&args[0], state, None)?;
                let to = if name == "float" { Type::Float } else { Type::Int };
                if !a.ty.is_numeric() {
                    return Err(err(
                        Category::TypeMismatch,
                        args[0].span,
                        format!("cannot convert `{}` to `{to}`", a.ty),
                    ));
                }
                if a.ty == to {
                    return Ok(a);
                }
                Ok(texpr(TExprKind::Convert { arg: Box::new(a), to: to.clone() }, to, span))
            }
            "py" => Err(err(Category::Syntax, span, "`py` expects one expression")),
            _ => Err(err(Category::NotDefined, name_span, format!("name `{name}` is not defined"))),
        }
    }

    fn list_method(&mut self, list: TExpr, method: &str, args: &[Expr], span: Span, state: &mut State) -> CResult<TExpr> {
        let Type::List(elem) = list.ty.clone() else {
            return Err(err(
                Category::TypeMismatch,
                list.span,
                format!("`{method}` needs a list, found `{}`", list.ty),
            ));
        };
        let elem = *elem;
        let linear = elem.is_linear();
        match method {
            "get" => {
                self.arity("get", 1, args, span)?;
                let i = self.expr(&args[0], state, None)?;
                let i = coerce(i, &Type::Int)?;
                let ty = if linear {
                    Type::Tuple(vec![elem.clone(), list.ty.clone()])
                } else {
                    elem
                };
                Ok(texpr(TExprKind::ListGet { list: Box::new(list), index: Box::new(i) }, ty, span))
            }
            "len" => {
                self.arity("len", 0, args, span)?;
                let ty = if linear {
                    Type::Tuple(vec![Type::Int, list.ty.clone()])
                } else {
                    Type::Int
                };
                Ok(texpr(TExprKind::ListLen { list: Box::new(list) }, ty, span))
            }
            "apply" => {
                self.arity("apply", 2, args, span)?;
                let f = self.expr(&args[0], state, None)?;
                let Type::Function(params, ret) = &f.ty else {
                    return Err(err(
                        Category::TypeMismatch,
                        args[0].span,
                        format!("`apply` needs a function, found `{}`", f.ty),
                    ));
                };
                let k = params.len();
                let want_ret = if k == 1 { elem.clone() } else { Type::Tuple(vec![elem.clone(); k]) };
                if k == 0 || params.iter().any(|p| p != &elem) || **ret != want_ret {
                    return Err(err(
                        Category::TypeMismatch,
                        args[0].span,
                        format!(
                            "`apply` on `{}` needs a function of type `{}`, found `{}`",
                            list.ty,
                            Type::function(vec![elem.clone(); k.max(1)], if k <= 1 { elem.clone() } else { want_ret }),
                            f.ty
                        ),
                    ));
                }
                let want_idx = Type::Tuple(vec![Type::Int; k]);
                let idx = self.expr(&args[1], state, Some(&want_idx))?;
                let idx = if k == 1 && idx.ty == Type::Int {
                    let s = idx.span;
                    texpr(TExprKind::Tuple(vec![idx]), want_idx.clone(), s)
                } else {
                    idx
                };
                if idx.ty != want_idx {
                    return Err(mismatch(args[1].span, &want_idx, &idx.ty));
                }
                let ty = list.ty.clone();
                Ok(texpr(
                    TExprKind::ListApply {
                        list: Box::new(list),
                        func: Box::new(f),
                        indices: Box::new(idx),
                    },
                    ty,
                    span,
                ))
            }
            _ => unreachable!(),
        }
    }

    fn method_call(
        &mut self,
        receiver: &Expr,
        method: &str,
        method_span: Span,
        args: &[Expr],
        span: Span,
        state: &mut State,
    ) -> CResult<TExpr> {
        let r = self.expr(receiver, state, None)?;
        if matches!(method, "get" | "len" | "apply") && matches!(r.ty, Type::List(_)) {
            return self.list_method(r, method, args, span, state);
        }
        if r.ty.is_numeric() {
            if let Some(d) = resolve::dunder(method) {
                return match d {
                    Dunder::Bin(op) => {
                        self.arity(method, 1, args, span)?;
                        let a = self.expr(&args[0], state, None)?;
                        self.binary(op, r, a, span)
                    }
                    Dunder::Cmp(op) => {
                        self.arity(method, 1, args, span)?;
                        let a = self.expr(&args[0], state, None)?;
                        self.compare(op, r, a, span)
                    }
                    Dunder::Unary(op) => {
                        self.arity(method, 0, args, span)?;
                        self.unary(op, r, span)
                    }
                    Dunder::Bool => {
                        self.arity(method, 0, args, span)?;
                        if r.ty != Type::Bool {
                            return Err(err(
                                Category::TypeMismatch,
                                span,
                                format!("`__bool__` is only available on `bool`, not `{}`", r.ty),
                            ));
                        }
                        Ok(r)
                    }
                };
            }
        }
        Err(err(
            Category::TypeMismatch,
            method_span,
            format!("type `{}` has no method `{method}`", r.ty),
        ))
    }

    fn py(&mut self, tokens: &[crate::frontend::Token], span: Span, state: &State) -> CResult<TExpr> {
        for (i, t) in tokens.iter().enumerate() {
            let after_dot = i > 0 && tokens[i - 1].is(TokenKind::Op, ".");
            if t.kind == TokenKind::Ident && !after_dot && state.get(&t.text).is_some_and(|v| !v.capture || v.definite) {
                return Err(err(
                    Category::PyUsesGuppyVar,
                    t.span,
                    format!("variable `{}` may not be used inside `py`", t.text),
                ));
            }
        }
        let key = py_key(tokens);
        if let Some(v) = self.bindings.get(&key) {
            let ty = v.ty();
            return Ok(texpr(TExprKind::Const(v.clone()), ty, span));
        }
        match eval_literal(tokens) {
            Ok(v) => {
                let ty = v.ty();
                Ok(texpr(TExprKind::Const(v), ty, span))
            }
            Err(LiteralError::Overflow) => Err(err(
                Category::OverflowLiteral,
                span,
                format!("`{key}` overflows a 64-bit integer"),
            )),
            Err(LiteralError::DivisionByZero) => Err(err(
                Category::TypeMismatch,
                span,
                format!("`{key}` divides by zero"),
            )),
            Err(LiteralError::NotLiteral) => Err(err(
                Category::PyBindingMissing,
                span,
                format!("no binding for `{key}`; add it to the bindings file"),
            )),
        }
    }
}

enum Flow {
    /// Control continues to the next statement.
    Next(Option<TStmt>),
    /// Control never reaches the next statement.
    Stop(Option<TStmt>),
}
