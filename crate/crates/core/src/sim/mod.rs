//! Reference executor: runs a validated graph on a seeded statevector
//! backend.
//!
//! Nodes of a dataflow container run in topological order, lowest id first
//! among ready nodes. Measurements draw one `f64` in `[0, 1)` from a
//! ChaCha8 generator seeded with the run's seed; the outcome is `true` when
//! the draw is below the probability of `|1>`.

mod arith;
mod exec;
mod state;

use num_complex::Complex64;
use serde_json::{json, Value as Json};

pub use exec::Machine;
pub use state::{gate_matrix, Matrix2, QuantumState, QubitId};

use crate::constant::{float_json, ConstValue};
use crate::ir::{Graph, NodeId, NodeKind};
use crate::types::Type;

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    None,
    Tuple(Vec<Value>),
    List(Vec<Value>),
    Qubit(QubitId),
    /// A loaded FuncDefn.
    Func(NodeId),
    Sum(usize, Vec<Value>),
}

impl Value {
    pub fn from_const(c: &ConstValue) -> Value {
        match c {
            ConstValue::Bool(b) => Value::Bool(*b),
            ConstValue::Int(i) => Value::Int(*i),
            ConstValue::Float(f) => Value::Float(*f),
            ConstValue::None => Value::None,
            ConstValue::Tuple(items) => Value::Tuple(items.iter().map(Value::from_const).collect()),
            ConstValue::List(_, items) => Value::List(items.iter().map(Value::from_const).collect()),
        }
    }

    /// Qubits held anywhere inside, in left-to-right order.
    pub fn qubits(&self) -> Vec<QubitId> {
        let mut out = Vec::new();
        self.collect_qubits(&mut out);
        out
    }

    fn collect_qubits(&self, out: &mut Vec<QubitId>) {
        match self {
            Value::Qubit(q) => out.push(*q),
            Value::Tuple(items) | Value::List(items) | Value::Sum(_, items) => {
                items.iter().for_each(|i| i.collect_qubits(out))
            }
            _ => {}
        }
    }

    pub fn to_json(&self, g: &Graph) -> Json {
        match self {
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Float(f) => float_json(*f),
            Value::None => Json::Null,
            Value::Tuple(items) | Value::List(items) => Json::Array(items.iter().map(|i| i.to_json(g)).collect()),
            Value::Qubit(q) => json!({ "qubit": q }),
            Value::Func(id) => match g.get(*id).map(|n| &n.kind) {
                Some(NodeKind::FuncDefn { name, .. }) => json!({ "function": name }),
                _ => json!({ "function": id }),
            },
            Value::Sum(tag, items) => {
                json!({ "tag": tag, "values": items.iter().map(|i| i.to_json(g)).collect::<Vec<_>>() })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    IntegerOverflow,
    DivisionByZero,
    IndexOutOfRange,
    ApplyDuplicateIndex,
    StepLimitExceeded,
    /// Negative exponents or shift counts, NaN to `int`.
    InvalidOperand,
    RecursionLimit,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::IntegerOverflow => "integer-overflow",
            ErrorKind::DivisionByZero => "division-by-zero",
            ErrorKind::IndexOutOfRange => "index-out-of-range",
            ErrorKind::ApplyDuplicateIndex => "apply-duplicate-index",
            ErrorKind::StepLimitExceeded => "step-limit-exceeded",
            ErrorKind::InvalidOperand => "invalid-operand",
            ErrorKind::RecursionLimit => "recursion-limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("runtime error [{}] at node {node}: {message}", kind.name())]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub node: NodeId,
    pub message: String,
}

impl RuntimeError {
    pub fn to_json(&self) -> Json {
        json!({ "kind": self.kind.name(), "node": self.node, "message": self.message })
    }
}

/// Why a run did not produce a report.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RunError {
    /// Unknown entry point or arguments not matching its signature.
    #[error("{0}")]
    Setup(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub result: Value,
    /// `(qubit, outcome)` in execution order; `discard` is not recorded.
    pub measurements: Vec<(QubitId, bool)>,
    /// Live qubits not reachable from the result.
    pub qubits_leaked: usize,
    pub steps: u64,
    pub max_norm_error: f64,
}

impl RunReport {
    pub fn to_json(&self, g: &Graph) -> Json {
        json!({
            "result": self.result.to_json(g),
            "measurements": self.measurements.iter().map(|(q, b)| json!([q, b])).collect::<Vec<_>>(),
            "qubits_leaked": self.qubits_leaked,
            "steps": self.steps,
        })
    }
}

/// Parameter types of `entry`.
pub fn entry_params(g: &Graph, entry: &str) -> Result<Vec<Type>, RunError> {
    let f = g
        .find_function(entry)
        .ok_or_else(|| RunError::Setup(format!("no function named `{entry}`")))?;
    let NodeKind::FuncDefn { sig: Type::Function(params, _), .. } = g.kind(f) else {
        unreachable!("FuncDefn has a function type")
    };
    Ok(params.clone())
}

/// Runs `entry` with arguments given as JSON at its parameter types; the
/// string `"qubit"` allocates a fresh qubit in `|0>`.
pub fn run(g: &Graph, entry: &str, args: &[Json], seed: u64, max_steps: u64) -> Result<RunReport, RunError> {
    let mut m = Machine::new(g, seed).with_max_steps(max_steps);
    let vals = m.args_from_json(entry, args)?;
    let result = m.call(entry, vals)?;
    Ok(m.report(result))
}

/// Runs `entry` and returns its result together with the state of the
/// qubits it returns, in return order (first = most significant).
pub fn final_statevector(
    g: &Graph,
    entry: &str,
    args: &[Json],
    seed: u64,
) -> Result<(Value, Vec<Complex64>), RunError> {
    let mut m = Machine::new(g, seed);
    let vals = m.args_from_json(entry, args)?;
    let result = m.call(entry, vals)?;
    let v = m
        .state()
        .vector_over(&result.qubits())
        .ok_or_else(|| RunError::Setup("qubits other than the returned ones are still live".into()))?;
    Ok((result, v))
}
