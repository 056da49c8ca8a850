use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

use super::arith::{self, Fault};
use super::state::{gate_matrix, QuantumState, QubitId};
use super::{entry_params, ErrorKind, RunError, RunReport, RuntimeError, Value, DEFAULT_MAX_STEPS};
use crate::constant::ConstValue;
use crate::frontend::ast::CmpOp;
use crate::ir::{BlockKind, Graph, ListOpKind, NodeId, NodeKind};
use crate::ops::QuantumOp;
use crate::types::Type;

/// Nested calls allowed before `recursion-limit`.
const MAX_DEPTH: usize = 10_000;
/// Interpreter stack; deep guest recursion recurses on the host.
const STACK_BYTES: usize = 1 << 30;

/// Execution order of one dataflow container.
struct Plan {
    entries: Vec<Entry>,
    /// Consumers per out-port slot.
    uses: Vec<u32>,
}

struct Entry {
    node: NodeId,
    /// Slot feeding each in-port.
    ins: Vec<usize>,
    /// Slot of out-port 0.
    base: usize,
}

/// One execution: a graph, its quantum state and counters.
pub struct Machine<'g> {
    g: &'g Graph,
    state: QuantumState,
    measurements: Vec<(QubitId, bool)>,
    steps: u64,
    max_steps: u64,
    depth: usize,
    plans: HashMap<NodeId, Arc<Plan>>,
}

impl<'g> Machine<'g> {
    pub fn new(g: &'g Graph, seed: u64) -> Machine<'g> {
        Machine {
            g,
            state: QuantumState::new(ChaCha8Rng::seed_from_u64(seed)),
            measurements: Vec::new(),
            steps: 0,
            max_steps: DEFAULT_MAX_STEPS,
            depth: 0,
            plans: HashMap::new(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Machine<'g> {
        self.max_steps = max_steps;
        self
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn measurements(&self) -> &[(QubitId, bool)] {
        &self.measurements
    }

    /// A fresh qubit in `|0>`.
    pub fn alloc(&mut self) -> Value {
        Value::Qubit(self.state.alloc())
    }

    /// A fresh qubit in `a|0> + b|1>`.
    pub fn prepare(&mut self, a: Complex64, b: Complex64) -> Value {
        Value::Qubit(self.state.prepare(a, b))
    }

    pub fn args_from_json(&mut self, entry: &str, args: &[Json]) -> Result<Vec<Value>, RunError> {
        let params = entry_params(self.g, entry)?;
        if params.len() != args.len() {
            return Err(RunError::Setup(format!(
                "`{entry}` takes {} argument(s), got {}",
                params.len(),
                args.len()
            )));
        }
        params
            .iter()
            .zip(args)
            .map(|(t, a)| self.arg_value(t, a).map_err(RunError::Setup))
            .collect()
    }

    fn arg_value(&mut self, ty: &Type, v: &Json) -> Result<Value, String> {
        let mismatch = || format!("argument `{v}` does not have type `{}`", ty.tag());
        match ty {
            Type::Qubit if v == "qubit" => Ok(self.alloc()),
            Type::Qubit => Err(mismatch()),
            Type::Tuple(ts) if ty.is_linear() => {
                let items = v.as_array().filter(|a| a.len() == ts.len()).ok_or_else(mismatch)?;
                Ok(Value::Tuple(ts.iter().zip(items).map(|(t, i)| self.arg_value(t, i)).collect::<Result<_, _>>()?))
            }
            Type::List(e) if ty.is_linear() => {
                let items = v.as_array().ok_or_else(mismatch)?;
                Ok(Value::List(items.iter().map(|i| self.arg_value(e, i)).collect::<Result<_, _>>()?))
            }
            _ => ConstValue::from_json(ty, v).map(|c| Value::from_const(&c)),
        }
    }

    /// Calls the top-level function `entry`.
    pub fn call(&mut self, entry: &str, args: Vec<Value>) -> Result<Value, RunError> {
        let f = self
            .g
            .find_function(entry)
            .ok_or_else(|| RunError::Setup(format!("no function named `{entry}`")))?;
        if entry_params(self.g, entry)?.len() != args.len() {
            return Err(RunError::Setup(format!("wrong number of arguments for `{entry}`")));
        }
        let out = std::thread::scope(|s| {
            let h = std::thread::Builder::new()
                .stack_size(STACK_BYTES)
                .spawn_scoped(s, || self.call_fn(f, args, f))
                .expect("spawn interpreter thread");
            h.join().unwrap_or_else(|e| std::panic::resume_unwind(e))
        });
        Ok(out?)
    }

    pub fn report(&self, result: Value) -> RunReport {
        let held: BTreeSet<QubitId> = result.qubits().into_iter().collect();
        let leaked = self.state.live().iter().filter(|q| !held.contains(q)).count();
        RunReport {
            result,
            measurements: self.measurements.clone(),
            qubits_leaked: leaked,
            steps: self.steps,
            max_norm_error: self.state.max_norm_error(),
        }
    }

    fn fault(node: NodeId) -> impl Fn(Fault) -> RuntimeError {
        move |(kind, message)| RuntimeError { kind, node, message }
    }

    fn tick(&mut self, node: NodeId) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(RuntimeError {
                kind: ErrorKind::StepLimitExceeded,
                node,
                message: format!("more than {} steps", self.max_steps),
            });
        }
        Ok(())
    }

    fn plan(&mut self, c: NodeId) -> Arc<Plan> {
        if let Some(p) = self.plans.get(&c) {
            return p.clone();
        }
        let g = self.g;
        let kids: Vec<NodeId> = g.children(c).collect();
        let mut pending: HashMap<NodeId, usize> = kids.iter().map(|&k| (k, g.node(k).inputs.len())).collect();
        let mut ready: BTreeSet<NodeId> = kids.iter().copied().filter(|k| pending[k] == 0).collect();
        let mut order = Vec::with_capacity(kids.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            for p in 0..g.node(n).outputs.len() {
                for (t, _) in g.targets((n, p)) {
                    let k = pending.get_mut(&t).expect("edge stays in the container");
                    *k -= 1;
                    if *k == 0 {
                        ready.insert(t);
                    }
                }
            }
        }
        assert_eq!(order.len(), kids.len(), "container {c} has a cycle");
        let mut base = HashMap::new();
        let mut next = 0;
        for &n in &order {
            base.insert(n, next);
            next += g.node(n).outputs.len();
        }
        let mut uses = vec![0u32; next];
        let entries = order
            .iter()
            .map(|&n| {
                let ins = (0..g.node(n).inputs.len())
                    .map(|p| {
                        let (s, sp) = g.source((n, p)).expect("in-port has a source");
                        let slot = base[&s] + sp;
                        uses[slot] += 1;
                        slot
                    })
                    .collect();
                Entry { node: n, ins, base: base[&n] }
            })
            .collect();
        let plan = Arc::new(Plan { entries, uses });
        self.plans.insert(c, plan.clone());
        plan
    }

    /// Runs a dataflow container on its Input values; returns what reaches
    /// its Output.
    fn run_container(&mut self, c: NodeId, inputs: Vec<Value>) -> Result<Vec<Value>, RuntimeError> {
        self.tick(c)?;
        let plan = self.plan(c);
        let mut slots: Vec<Option<Value>> = vec![None; plan.uses.len()];
        let mut uses = plan.uses.clone();
        let mut inputs = Some(inputs);
        let mut result = None;
        for e in &plan.entries {
            self.tick(e.node)?;
            let ins: Vec<Value> = e
                .ins
                .iter()
                .map(|&s| {
                    uses[s] -= 1;
                    if uses[s] == 0 {
                        slots[s].take()
                    } else {
                        slots[s].clone()
                    }
                    .expect("value is produced before use")
                })
                .collect();
            let outs = match self.g.kind(e.node) {
                NodeKind::Input { .. } => inputs.take().expect("one Input"),
                NodeKind::Output { .. } => {
                    result = Some(ins);
                    Vec::new()
                }
                _ => self.exec(e.node, ins)?,
            };
            for (i, v) in outs.into_iter().enumerate() {
                slots[e.base + i] = Some(v);
            }
        }
        Ok(result.expect("container has an Output"))
    }

    fn call_fn(&mut self, f: NodeId, args: Vec<Value>, at: NodeId) -> Result<Value, RuntimeError> {
        if self.depth >= MAX_DEPTH {
            return Err(RuntimeError {
                kind: ErrorKind::RecursionLimit,
                node: at,
                message: format!("more than {MAX_DEPTH} nested calls"),
            });
        }
        self.depth += 1;
        let out = self.run_container(f, args);
        self.depth -= 1;
        Ok(out?.into_iter().next().expect("function has one result"))
    }

    fn exec(&mut self, n: NodeId, mut ins: Vec<Value>) -> Result<Vec<Value>, RuntimeError> {
        let g = self.g;
        let fault = Self::fault(n);
        Ok(match g.kind(n) {
            NodeKind::Const { value } => vec![Value::from_const(value)],
            NodeKind::LoadFunction { target, .. } => vec![Value::Func(*target)],
            NodeKind::Call { target, .. } => vec![self.call_fn(*target, ins, n)?],
            NodeKind::CallIndirect { .. } => {
                let Value::Func(f) = ins.remove(0) else { panic!("indirect call of a non-function") };
                vec![self.call_fn(f, ins, n)?]
            }
            NodeKind::Quantum(op) => self.quantum(*op, ins),
            NodeKind::IntOp(op) => {
                let a: Vec<i64> = ins.iter().map(int).collect();
                vec![Value::Int(arith::int_op(*op, &a).map_err(fault)?)]
            }
            NodeKind::FloatOp(op) => {
                let a: Vec<f64> = ins.iter().map(float).collect();
                vec![Value::Float(arith::float_op(*op, &a).map_err(fault)?)]
            }
            NodeKind::Compare { op, .. } => vec![Value::Bool(compare(*op, &ins[0], &ins[1]))],
            NodeKind::Not => vec![Value::Bool(!matches!(ins[0], Value::Bool(true)))],
            NodeKind::Convert { to, .. } => {
                let v = match (to, &ins[0]) {
                    (Type::Float, v) => Value::Float(float(v)),
                    (Type::Int, Value::Float(f)) => Value::Int(arith::float_to_int(*f).map_err(fault)?),
                    (Type::Int, v) => Value::Int(int(v)),
                    (Type::Bool, v) => Value::Bool(int(v) != 0),
                    (t, _) => panic!("conversion to `{}`", t.tag()),
                };
                vec![v]
            }
            NodeKind::MakeTuple { .. } => vec![Value::Tuple(ins)],
            NodeKind::UnpackTuple { .. } => match ins.pop() {
                Some(Value::Tuple(items)) => items,
                other => panic!("unpacking {other:?}"),
            },
            NodeKind::Tag { variant, .. } => vec![Value::Sum(*variant, ins)],
            NodeKind::ListOp { op, elem } => self.list_op(n, *op, elem.is_linear(), ins)?,
            NodeKind::Conditional { .. } => {
                let mut it = ins.into_iter();
                let (v, mut row) = variant(it.next().expect("predicate"));
                row.extend(it);
                let case = g
                    .children(n)
                    .find(|&c| matches!(g.kind(c), NodeKind::Case { index } if *index == v))
                    .expect("case for every variant");
                self.run_container(case, row)?
            }
            NodeKind::TailLoop { .. } => {
                let mut carried = ins;
                loop {
                    let out = self.run_container(n, carried)?;
                    match variant(out.into_iter().next().expect("loop control")) {
                        (0, row) => carried = row,
                        (_, row) => break row,
                    }
                }
            }
            NodeKind::Cfg { .. } => self.cfg(n, ins)?,
            k => panic!("cannot execute {} here", k.name()),
        })
    }

    fn cfg(&mut self, n: NodeId, ins: Vec<Value>) -> Result<Vec<Value>, RuntimeError> {
        let g = self.g;
        let mut block = g
            .children(n)
            .find(|&c| matches!(g.kind(c), NodeKind::BasicBlock { block: BlockKind::Entry, .. }))
            .expect("CFG has an entry block");
        let mut vals = ins;
        loop {
            let mut out = self.run_container(block, vals)?.into_iter();
            let (v, mut row) = variant(out.next().expect("block predicate"));
            row.extend(out);
            let succ = g.targets((block, v)).next().expect("successor per variant").0;
            if matches!(g.kind(succ), NodeKind::BasicBlock { block: BlockKind::Exit, .. }) {
                return Ok(row);
            }
            block = succ;
            vals = row;
        }
    }

    fn quantum(&mut self, op: QuantumOp, ins: Vec<Value>) -> Vec<Value> {
        let qs: Vec<QubitId> = ins
            .iter()
            .filter_map(|v| match v {
                Value::Qubit(q) => Some(*q),
                _ => None,
            })
            .collect();
        match op {
            QuantumOp::Qalloc => vec![self.alloc()],
            QuantumOp::Cx => {
                self.state.cx(qs[0], qs[1]);
                ins
            }
            QuantumOp::Zz => {
                self.state.zz(qs[0], qs[1]);
                ins
            }
            QuantumOp::Measure => {
                let b = self.state.measure(qs[0]);
                self.measurements.push((qs[0], b));
                vec![Value::Bool(b)]
            }
            QuantumOp::Discard => {
                self.state.measure(qs[0]);
                vec![]
            }
            _ => {
                let theta = ins.get(1).map_or(0.0, float);
                let m = gate_matrix(op, theta).expect("single-qubit gate");
                self.state.apply1(qs[0], &m);
                vec![Value::Qubit(qs[0])]
            }
        }
    }

    fn list_op(&mut self, n: NodeId, op: ListOpKind, linear: bool, ins: Vec<Value>) -> Result<Vec<Value>, RuntimeError> {
        let mut it = ins.into_iter();
        let list = match op {
            ListOpKind::Nil => return Ok(vec![Value::List(Vec::new())]),
            _ => match it.next() {
                Some(Value::List(items)) => items,
                other => panic!("list op on {other:?}"),
            },
        };
        let index = |items: &[Value], i: i64| -> Result<usize, RuntimeError> {
            usize::try_from(i).ok().filter(|&i| i < items.len()).ok_or_else(|| RuntimeError {
                kind: ErrorKind::IndexOutOfRange,
                node: n,
                message: format!("index {i} out of range for length {}", items.len()),
            })
        };
        Ok(match op {
            ListOpKind::Nil => unreachable!(),
            ListOpKind::Cons => {
                let mut items = list;
                items.push(it.next().expect("element"));
                vec![Value::List(items)]
            }
            ListOpKind::Get => {
                let i = index(&list, int(&it.next().expect("index")))?;
                if linear {
                    let mut items = list;
                    let e = items.remove(i);
                    vec![e, Value::List(items)]
                } else {
                    vec![list[i].clone()]
                }
            }
            ListOpKind::Len => {
                let len = Value::Int(list.len() as i64);
                if linear {
                    vec![len, Value::List(list)]
                } else {
                    vec![len]
                }
            }
            ListOpKind::Free => vec![],
            ListOpKind::ApplyIdx(k) => {
                let Some(Value::Func(f)) = it.next() else { panic!("apply needs a function") };
                let Some(Value::Tuple(ix)) = it.next() else { panic!("apply needs an index tuple") };
                let mut items = list;
                let mut pos = Vec::with_capacity(k);
                for v in &ix {
                    let i = index(&items, int(v))?;
                    if pos.contains(&i) {
                        return Err(RuntimeError {
                            kind: ErrorKind::ApplyDuplicateIndex,
                            node: n,
                            message: format!("index {i} is used twice"),
                        });
                    }
                    pos.push(i);
                }
                let args: Vec<Value> = pos.iter().map(|&i| std::mem::replace(&mut items[i], Value::None)).collect();
                let r = self.call_fn(f, args, n)?;
                let results = if k == 1 {
                    vec![r]
                } else {
                    match r {
                        Value::Tuple(rs) => rs,
                        other => panic!("apply result {other:?}"),
                    }
                };
                for (&i, v) in pos.iter().zip(results) {
                    items[i] = v;
                }
                vec![Value::List(items)]
            }
        })
    }
}

fn int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        Value::Bool(b) => *b as i64,
        other => panic!("expected int, found {other:?}"),
    }
}

fn float(v: &Value) -> f64 {
    match v {
        Value::Float(f) => *f,
        Value::Int(i) => *i as f64,
        Value::Bool(b) => *b as i64 as f64,
        other => panic!("expected float, found {other:?}"),
    }
}

/// A branch predicate as `(variant, row)`; `bool` is the unit 2-sum.
fn variant(v: Value) -> (usize, Vec<Value>) {
    match v {
        Value::Sum(t, row) => (t, row),
        Value::Bool(b) => (b as usize, Vec::new()),
        other => panic!("branch on {other:?}"),
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> bool {
    use std::cmp::Ordering;
    let ord = match (a, b) {
        (Value::Float(_), _) | (_, Value::Float(_)) => float(a).partial_cmp(&float(b)),
        (Value::Int(_) | Value::Bool(_), Value::Int(_) | Value::Bool(_)) => Some(int(a).cmp(&int(b))),
        _ => match op {
            CmpOp::Eq => return a == b,
            CmpOp::Ne => return a != b,
            _ => panic!("ordering on {a:?}"),
        },
    };
    match op {
        CmpOp::Eq => ord == Some(Ordering::Equal),
        CmpOp::Ne => ord != Some(Ordering::Equal),
        CmpOp::Lt => ord == Some(Ordering::Less),
        CmpOp::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
        CmpOp::Gt => ord == Some(Ordering::Greater),
        CmpOp::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
    }
}
