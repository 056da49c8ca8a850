use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use guppy_core::ir::Graph;
use guppy_core::lower::Lowering;
use guppy_core::pipeline::compile;
use guppy_core::sim::{self, ErrorKind, Machine, RunError, Value, DEFAULT_MAX_STEPS};
use guppy_core::typecheck::ConstBindings;

type C = Complex64;
type M2 = [[C; 2]; 2];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn build(src: &str) -> Graph {
    compile(src, &ConstBindings::new(), Lowering::Structured).unwrap_or_else(|d| panic!("{d:?}"))
}

fn corpus(name: &str) -> Graph {
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)).unwrap();
    build(&src)
}

fn run(g: &Graph, entry: &str, args: serde_json::Value, seed: u64) -> Result<sim::RunReport, RunError> {
    sim::run(g, entry, args.as_array().unwrap(), seed, DEFAULT_MAX_STEPS)
}

fn runtime_kind(r: Result<sim::RunReport, RunError>) -> ErrorKind {
    match r {
        Err(RunError::Runtime(e)) => e.kind,
        other => panic!("expected a runtime error, got {other:?}"),
    }
}

// Independent oracle: dense 2x2 algebra.

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn apply(m: &M2, v: [C; 2]) -> [C; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn h_m() -> M2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
}

fn rz_m(t: f64) -> M2 {
    [[C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), C::from_polar(1.0, t / 2.0)]]
}

/// `|<a|b>|^2` for normalised vectors.
fn fidelity(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>().norm_sqr()
}

fn random_state(seed: u64) -> [C; 2] {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let v = [c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)), c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))];
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

#[test]
fn identity_returns_argument() {
    let g = build("def f(x: int) -> int:\n  return x\n");
    let r = run(&g, "f", json!([5]), 0).unwrap();
    assert_eq!(r.result, Value::Int(5));
    assert!(r.steps >= 2);
    assert_eq!(r.qubits_leaked, 0);
}

#[test]
fn identity_on_fresh_qubit_is_ket_zero() {
    let g = build("def f(q: Qubit) -> Qubit:\n  return q\n");
    let (_, v) = sim::final_statevector(&g, "f", &[json!("qubit")], 0).unwrap();
    assert_eq!(v, vec![c(1.0, 0.0), c(0.0, 0.0)]);
}

#[test]
fn integer_overflow_traps() {
    let g = build(
        "def up() -> int:\n  return 9223372036854775807 + 1\n\ndef down() -> int:\n  return -9223372036854775808 - 1\n",
    );
    assert_eq!(runtime_kind(run(&g, "up", json!([]), 0)), ErrorKind::IntegerOverflow);
    assert_eq!(runtime_kind(run(&g, "down", json!([]), 0)), ErrorKind::IntegerOverflow);
}

#[test]
fn classical_runtime_errors() {
    let g = build(
        "def d(a: int, b: int) -> int:\n  return a // b\n\ndef ix(xs: list[int], i: int) -> int:\n  return xs[i]\n\ndef spin() -> int:\n  i = 0\n  while True:\n    i = i + 0\n  return i\n",
    );
    assert_eq!(runtime_kind(run(&g, "d", json!([1, 0]), 0)), ErrorKind::DivisionByZero);
    assert_eq!(run(&g, "d", json!([-7, 2]), 0).unwrap().result, Value::Int(-4));
    assert_eq!(runtime_kind(run(&g, "ix", json!([[1, 2], 2]), 0)), ErrorKind::IndexOutOfRange);
    assert_eq!(runtime_kind(run(&g, "ix", json!([[1, 2], -1]), 0)), ErrorKind::IndexOutOfRange);
    let r = sim::run(&g, "spin", &[], 0, 10_000);
    assert!(matches!(r, Err(RunError::Runtime(e)) if e.kind == ErrorKind::StepLimitExceeded));
}

#[test]
fn apply_duplicate_index_traps_for_every_index() {
    let g = build("def f(qs: list[Qubit], i: int) -> list[Qubit]:\n  return qs.apply(cx, (i, i))\n");
    for len in 1..5 {
        for i in 0..len {
            let qs: Vec<_> = (0..len).map(|_| json!("qubit")).collect();
            assert_eq!(runtime_kind(run(&g, "f", json!([qs, i]), 0)), ErrorKind::ApplyDuplicateIndex);
        }
    }
}

#[test]
fn setup_errors_are_not_runtime_errors() {
    let g = build("def f(x: int) -> int:\n  return x\n");
    assert!(matches!(run(&g, "nope", json!([]), 0), Err(RunError::Setup(_))));
    assert!(matches!(run(&g, "f", json!([]), 0), Err(RunError::Setup(_))));
    assert!(matches!(run(&g, "f", json!([true]), 0), Err(RunError::Setup(_))));
}

#[test]
fn hadamard_measurement_statistics() {
    let g = build("def f() -> bool:\n  return measure(h(Qubit()))\n");
    let n = 10_000;
    let ones = (0..n).filter(|&s| run(&g, "f", json!([]), s).unwrap().result == Value::Bool(true)).count();
    let freq = ones as f64 / n as f64;
    assert!((freq - 0.5).abs() <= 0.02, "{freq}");
}

#[test]
fn fresh_qubit_measures_false() {
    let g = build("def f() -> bool:\n  return measure(Qubit())\n");
    for s in 0..100 {
        assert_eq!(run(&g, "f", json!([]), s).unwrap().result, Value::Bool(false));
    }
}

#[test]
fn rx_matches_analytic_product() {
    let g = corpus("rx.gpy");
    for (k, theta) in [0.0, 0.4, 1.3, -2.2, std::f64::consts::PI].into_iter().enumerate() {
        let psi = random_state(k as u64);
        let mut m = Machine::new(&g, 0);
        let q = m.prepare(psi[0], psi[1]);
        let out = m.call("rx", vec![q, Value::Float(theta)]).unwrap();
        let got = m.state().vector_over(&out.qubits()).unwrap();
        let want = apply(&mul(&h_m(), &mul(&rz_m(theta), &h_m())), psi);
        assert!(fidelity(&got, &want) > 1.0 - 1e-12, "theta {theta}");
    }
}

#[test]
fn teleport_reproduces_input_on_every_branch() {
    let g = corpus("teleport.gpy");
    let mut branches = std::collections::BTreeSet::new();
    for seed in 0..200 {
        let psi = random_state(seed);
        let mut m = Machine::new(&g, seed);
        let src = m.prepare(psi[0], psi[1]);
        let tgt = m.alloc();
        let out = m.call("teleport", vec![src, tgt]).unwrap();
        let got = m.state().vector_over(&out.qubits()).unwrap();
        assert!(fidelity(&got, &psi) >= 1.0 - 1e-9, "seed {seed}");
        let outcomes: Vec<bool> = m.measurements().iter().map(|&(_, b)| b).collect();
        branches.insert(outcomes);
        assert!(m.state().max_norm_error() <= 1e-12);
    }
    assert_eq!(branches.len(), 4);
}

/// Three-qubit brute force of one RUS attempt, `q` being bit 2 and the
/// ancillas `a`, `b` bits 1 and 0: the operator applied to `q` given the
/// two measurement outcomes.
fn rus_attempt(m1: bool, m2: bool) -> M2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let one = |v: &mut [C; 8], bit: usize, m: M2| {
        for i in 0..8 {
            if i & (1 << bit) == 0 {
                let j = i | (1 << bit);
                let (a0, a1) = (v[i], v[j]);
                v[i] = m[0][0] * a0 + m[0][1] * a1;
                v[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    };
    let cx = |v: &mut [C; 8], ctl: usize, tgt: usize| {
        for i in 0..8 {
            if i & (1 << ctl) != 0 && i & (1 << tgt) == 0 {
                v.swap(i, i | (1 << tgt));
            }
        }
    };
    let project = |v: &mut [C; 8], bit: usize, m: bool| {
        for (i, a) in v.iter_mut().enumerate() {
            if (i & (1 << bit) != 0) != m {
                *a = c(0.0, 0.0);
            }
        }
    };
    let (z, o) = (c(0.0, 0.0), c(1.0, 0.0));
    let h = [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]];
    let tm = [[o, z], [z, t]];
    let tdg = [[o, z], [z, t.conj()]];
    let zm = [[o, z], [z, -o]];
    let mut k = [[z; 2]; 2];
    for qi in 0..2 {
        let mut v = [z; 8];
        v[qi << 2] = o;
        one(&mut v, 1, h);
        one(&mut v, 0, h);
        one(&mut v, 1, tdg);
        cx(&mut v, 0, 1);
        one(&mut v, 1, tm);
        project(&mut v, 1, m1);
        one(&mut v, 2, tm);
        one(&mut v, 2, zm);
        cx(&mut v, 2, 0);
        one(&mut v, 0, tm);
        project(&mut v, 0, m2);
        for qo in 0..2 {
            k[qo][qi] = v[(qo << 2) | ((m1 as usize) << 1) | m2 as usize];
        }
    }
    k
}

fn normalised(v: [C; 2]) -> [C; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

#[test]
fn rus_success_operator_is_a_fixed_unitary() {
    let u = rus_attempt(true, true);
    // Proportional to Z.
    assert!(u[0][1].norm() < 1e-12 && u[1][0].norm() < 1e-12);
    assert!((u[0][0] + u[1][1]).norm() < 1e-12);
}

#[test]
fn rus_single_attempt_matches_enumeration() {
    let g = corpus("rus.gpy");
    let x = [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..300 {
        let psi = random_state(seed);
        let mut m = Machine::new(&g, seed);
        let q = m.prepare(psi[0], psi[1]);
        let out = m.call("rus", vec![q, Value::Int(1)]).unwrap();
        let got = m.state().vector_over(&out.qubits()).unwrap();
        let outcomes: Vec<bool> = m.measurements().iter().map(|&(_, b)| b).collect();
        let want = match outcomes.as_slice() {
            [false] => psi,
            [true, true] => normalised(apply(&rus_attempt(true, true), psi)),
            [true, false] => normalised(apply(&mul(&x, &rus_attempt(true, false)), psi)),
            other => panic!("unexpected transcript {other:?}"),
        };
        assert!(fidelity(&got, &want) >= 1.0 - 1e-9, "seed {seed} {outcomes:?}");
        seen.insert(outcomes);
        assert_eq!(m.report(out).qubits_leaked, 0);
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn corrected_rus_failure_is_not_the_identity() {
    let x = [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
    let r = mul(&x, &rus_attempt(true, false));
    assert!(r[0][0].norm() < 1e-12 && r[1][1].norm() < 1e-12);
}

#[test]
fn features_run() {
    let g = compile(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/features.gpy")).unwrap(),
        &ConstBindings::new(),
        Lowering::Structured,
    )
    .unwrap();
    assert_eq!(run(&g, "fib", json!([10]), 0).unwrap().result, Value::Int(55));
    assert_eq!(run(&g, "is_even", json!([7]), 0).unwrap().result, Value::Bool(false));
    assert_eq!(run(&g, "first_true", json!([[false, false, true]]), 0).unwrap().result, Value::Int(2));
    assert_eq!(run(&g, "first_true", json!([[false]]), 0).unwrap().result, Value::Int(-1));
    for seed in 0..20 {
        let r = run(&g, "ghz_parity", json!([4]), seed).unwrap();
        assert_eq!(r.result, Value::Bool(false));
        let bits: Vec<bool> = r.measurements.iter().map(|&(_, b)| b).collect();
        assert!(bits.iter().all(|&b| b == bits[0]));
        let r = run(&g, "bell", json!([]), seed).unwrap();
        let Value::Tuple(ab) = &r.result else { panic!() };
        assert_eq!(ab[0], ab[1]);
    }
    let r = run(&g, "scaled_rotation", json!(["qubit", 6]), 0).unwrap();
    assert_eq!(r.qubits_leaked, 0);
    assert!(matches!(r.result, Value::Qubit(_)));
}

#[test]
fn deep_recursion_runs() {
    let g = build("def f(n: int) -> int:\n  if n == 0:\n    return 0\n  return 1 + f(n - 1)\n");
    assert_eq!(run(&g, "f", json!([5000]), 0).unwrap().result, Value::Int(5000));
    assert_eq!(runtime_kind(run(&g, "f", json!([20000]), 0)), ErrorKind::RecursionLimit);
}
