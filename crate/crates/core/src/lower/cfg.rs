use super::{types, Cx, Lowerer};
use crate::ir::{NodeId, NodeKind, Port, PortType};
use crate::typecheck::tast::{FnId, TStmt, TStmtKind, VarSlot};
use crate::types::Type;

/// A basic block and the variables its inputs carry.
#[derive(Clone, Debug)]
struct Block {
    id: NodeId,
    row: Vec<(String, Type)>,
}

struct CfgState {
    cfg: NodeId,
    exit: Block,
    /// `(head, exit)` of the enclosing loops.
    loops: Vec<(Block, Block)>,
    /// Iteration state of the enclosing `for` loops.
    hidden: Vec<(String, Type)>,
}

const RET: &str = "%ret";

impl Lowerer<'_> {
    pub(super) fn cfg_function(&mut self, fid: FnId) {
        let f = &self.m.functions[fid];
        let node = self.funcs[fid];
        let inputs = self.input_row(fid);
        let (fi, fo) = self.b.io(node);
        let (cfg, entry, exit) = self
            .b
            .add_cfg(node, inputs.clone(), vec![f.ret.clone()], unit_sum(), vec![])
            .expect("compiler bug: cannot add CFG");
        for i in 0..inputs.len() {
            self.wire((fi, i), (cfg, i));
        }
        self.wire((cfg, 0), (fo, 0));
        let cx = self.prologue(f, fid, entry);
        let mut st = CfgState {
            cfg,
            exit: Block { id: exit, row: vec![(RET.into(), f.ret.clone())] },
            loops: Vec::new(),
            hidden: Vec::new(),
        };
        let mut cur = Some(cx);
        self.cfg_block(&mut st, &mut cur, &f.body);
        assert!(cur.is_none(), "compiler bug: function body falls through");
    }

    fn new_block(&mut self, st: &CfgState, row: Vec<(String, Type)>) -> Block {
        let id = self.add(
            st.cfg,
            NodeKind::BasicBlock {
                block: crate::ir::BlockKind::Dataflow,
                inputs: types(&row),
                pred: Some(unit_sum()),
                extras: vec![],
            },
        );
        Block { id, row }
    }

    fn enter_block(&self, b: &Block) -> Cx {
        self.enter(b.id, &b.row, 0)
    }

    /// Ends the block of `cx`. With a predicate, successor 0 is taken on
    /// `False`; all successors share one input row.
    fn end_block(&mut self, mut cx: Cx, pred: Option<Port>, succs: &[&Block]) {
        let row = &succs[0].row;
        debug_assert!(succs.iter().all(|s| &s.row == row));
        let NodeKind::BasicBlock { block, inputs, .. } = self.b.graph().kind(cx.node).clone() else {
            panic!("compiler bug: not a block")
        };
        let pred_ty = match pred {
            Some(p) => self.b.out_type(p).clone(),
            None => unit_sum(),
        };
        self.b.set_kind(cx.node, NodeKind::BasicBlock { block, inputs, pred: Some(pred_ty), extras: types(row) });
        let p = match pred {
            Some(p) => p,
            None => (self.op(&cx, NodeKind::Tag { variant: 0, rows: vec![vec![]] }, &[]), 0),
        };
        let out = self.output(&cx);
        self.wire(p, (out, 0));
        let vals = self.take_row(&mut cx, row);
        for (i, v) in vals.into_iter().enumerate() {
            self.wire(v, (out, i + 1));
        }
        for (i, s) in succs.iter().enumerate() {
            self.b
                .connect_control(cx.node, i, s.id)
                .expect("compiler bug: bad control edge");
        }
    }

    fn jump(&mut self, cx: Cx, target: &Block) {
        self.end_block(cx, None, &[target]);
    }

    /// Join-point row: the checker's slots plus captured variables and the
    /// iteration state of enclosing loops.
    fn cfg_row(&self, st: &CfgState, slots: &[VarSlot]) -> Vec<(String, Type)> {
        let mut row = self.with_pinned(self.slots(slots));
        for (n, t) in &st.hidden {
            if !row.iter().any(|(r, _)| r == n) {
                row.push((n.clone(), t.clone()));
            }
        }
        row.sort();
        row
    }

    /// Loop head: carried variables as currently wired in `cx`.
    fn head_row(&self, st: &CfgState, cx: &Cx, carried: &[VarSlot]) -> Vec<(String, Type)> {
        let names: Vec<String> = carried
            .iter()
            .map(|s| s.name.clone())
            .chain(self.pinned.iter().map(|(n, _)| n.clone()))
            .chain(st.hidden.iter().map(|(n, _)| n.clone()))
            .collect();
        self.row_of(cx, &names)
    }

    /// Lowers `stmts` into the current block; `cur` becomes `None` once
    /// control has left.
    fn cfg_block(&mut self, st: &mut CfgState, cur: &mut Option<Cx>, stmts: &[TStmt]) {
        for s in stmts {
            let Some(cx) = cur.as_mut() else { return };
            match &s.kind {
                TStmtKind::Return(e) => {
                    let p = self.expr(cx, e);
                    cx.env.insert(RET.into(), p);
                    let exit = st.exit.clone();
                    self.jump(cur.take().unwrap(), &exit);
                }
                TStmtKind::Break | TStmtKind::Continue => {
                    let (head, exit) = st.loops.last().cloned().expect("compiler bug: loose break");
                    let target = if matches!(s.kind, TStmtKind::Break) { exit } else { head };
                    self.jump(cur.take().unwrap(), &target);
                }
                TStmtKind::If { cond, body, orelse, joined } => {
                    let c = self.expr(cx, cond);
                    let row = self.env_row(cx);
                    let then_b = self.new_block(st, row.clone());
                    let else_b = self.new_block(st, row);
                    self.end_block(cur.take().unwrap(), Some(c), &[&else_b, &then_b]);
                    let join_row = self.cfg_row(st, joined);
                    let mut join: Option<Block> = None;
                    for (b, stmts) in [(then_b, body), (else_b, orelse)] {
                        let mut inner = Some(self.enter_block(&b));
                        self.cfg_block(st, &mut inner, stmts);
                        if let Some(inner) = inner {
                            let j = match &join {
                                Some(j) => j.clone(),
                                None => {
                                    let j = self.new_block(st, join_row.clone());
                                    join = Some(j.clone());
                                    j
                                }
                            };
                            self.jump(inner, &j);
                        }
                    }
                    *cur = join.map(|j| self.enter_block(&j));
                }
                TStmtKind::While { cond, body, carried, exits } => {
                    let head = self.new_block(st, self.head_row(st, cx, carried));
                    self.jump(cur.take().unwrap(), &head);
                    let mut hc = self.enter_block(&head);
                    let c = self.expr(&mut hc, cond);
                    let exit = self.loop_exits(st, hc, c, exits, |_, _| {});
                    self.loop_body(st, head, exit.clone(), |me, st, cur| me.cfg_block(st, cur, body));
                    *cur = Some(self.enter_block(&exit.1));
                }
                TStmtKind::For { target, iter, body, carried, exits } => {
                    let it = self.iter_init(cx, iter);
                    let hidden: Vec<(String, Type)> = self
                        .iter_vars(&it)
                        .into_iter()
                        .map(|v| {
                            let t = self.ty(cx.env[&v]);
                            (v, t)
                        })
                        .collect();
                    let mark = st.hidden.len();
                    st.hidden.extend(hidden.iter().cloned());
                    let head = self.new_block(st, self.head_row(st, cx, carried));
                    self.jump(cur.take().unwrap(), &head);
                    let mut hc = self.enter_block(&head);
                    let c = self.iter_test(&mut hc, &it);
                    st.hidden.truncate(mark);
                    let exit = self.loop_exits(st, hc, c, exits, |me, cx| me.iter_finish(cx, &it));
                    st.hidden.extend(hidden);
                    self.loop_body(st, head, exit.clone(), |me, st, cur| {
                        me.iter_next(cur.as_mut().unwrap(), &it, target);
                        me.cfg_block(st, cur, body)
                    });
                    st.hidden.truncate(mark);
                    *cur = Some(self.enter_block(&exit.1));
                }
                _ => self.simple_stmt(cx, s),
            }
        }
    }

    /// Branches the tested head into a body block (returned first) and,
    /// through a trampoline running `finish`, the loop's exit block.
    fn loop_exits(
        &mut self,
        st: &CfgState,
        hc: Cx,
        c: Port,
        exits: &[VarSlot],
        finish: impl FnOnce(&mut Self, &mut Cx),
    ) -> (Block, Block) {
        let row = self.env_row(&hc);
        let body = self.new_block(st, row.clone());
        let tramp = self.new_block(st, row);
        self.end_block(hc, Some(c), &[&tramp, &body]);
        let exit = self.new_block(st, self.cfg_row(st, exits));
        let mut tc = self.enter_block(&tramp);
        finish(self, &mut tc);
        self.jump(tc, &exit);
        (body, exit)
    }

    fn loop_body(
        &mut self,
        st: &mut CfgState,
        head: Block,
        (body, exit): (Block, Block),
        lower: impl FnOnce(&mut Self, &mut CfgState, &mut Option<Cx>),
    ) {
        st.loops.push((head.clone(), exit));
        let mut bc = Some(self.enter_block(&body));
        lower(self, st, &mut bc);
        if let Some(bc) = bc {
            self.jump(bc, &head);
        }
        st.loops.pop();
    }
}

fn unit_sum() -> PortType {
    PortType::Sum(vec![vec![]])
}
