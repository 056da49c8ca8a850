//! Random well-typed programs for property testing: straight-line gates,
//! measurements, reallocation, branches and loops over at most five qubits.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_QUBITS: usize = 5;

struct Gen {
    rng: ChaCha8Rng,
    out: String,
    /// Liveness of `q0..q4`.
    live: [bool; MAX_QUBITS],
    stmts: usize,
    budget: usize,
    fresh: usize,
}

/// Source of a function `main() -> ...` with at most `max_stmts` statements
/// (nested ones included). Deterministic in `seed`.
pub fn generate(seed: u64, max_stmts: usize) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: String::new(),
        live: [false; MAX_QUBITS],
        stmts: 0,
        budget: max_stmts.max(1),
        fresh: 0,
    };
    let nq = g.rng.gen_range(1..=MAX_QUBITS);
    let mut body = String::new();
    for i in 0..nq {
        g.live[i] = true;
        writeln!(body, "  q{i} = Qubit()").unwrap();
    }
    body += "  c = 0\n  b = False\n";
    g.stmts = nq + 2;
    g.out = body;
    while g.stmts < g.budget {
        g.stmt(1, true);
    }
    let live: Vec<usize> = (0..MAX_QUBITS).filter(|&i| g.live[i]).collect();
    let mut rets: Vec<String> = live.iter().map(|i| format!("q{i}")).collect();
    let mut tys: Vec<&str> = vec!["Qubit"; live.len()];
    rets.push("c".into());
    tys.push("int");
    rets.push("b".into());
    tys.push("bool");
    format!(
        "def main() -> tuple[{}]:\n{}  return {}\n",
        tys.join(", "),
        g.out,
        rets.join(", ")
    )
}

impl Gen {
    fn line(&mut self, depth: usize, s: &str) {
        for _ in 0..depth {
            self.out += "  ";
        }
        self.out += s;
        self.out += "\n";
        self.stmts += 1;
    }

    fn live(&self) -> Vec<usize> {
        (0..MAX_QUBITS).filter(|&i| self.live[i]).collect()
    }

    fn dead(&self) -> Vec<usize> {
        (0..MAX_QUBITS).filter(|&i| !self.live[i]).collect()
    }

    fn angle(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 => format!("{:.3}", self.rng.gen_range(-3.2..3.2)),
            1 => "c * 0.5".into(),
            _ => "float(c) / 3".into(),
        }
    }

    fn cond(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => "b".into(),
            1 => format!("c > {}", self.rng.gen_range(-2..3)),
            2 => "not b and c % 2 == 0".into(),
            _ => format!("0 <= c < {}", self.rng.gen_range(1..4)),
        }
    }

    /// One statement at `depth`. `free` allows changing which qubits are
    /// live (not inside branches or loops).
    fn stmt(&mut self, depth: usize, free: bool) {
        let live = self.live();
        let room = self.budget.saturating_sub(self.stmts);
        let choice = self.rng.gen_range(0..12);
        match choice {
            0..=2 if !live.is_empty() => {
                let q = *live.choose(&mut self.rng).unwrap();
                let g = *["h", "x", "z", "t", "tdg"].choose(&mut self.rng).unwrap();
                self.line(depth, &format!("q{q} = {g}(q{q})"));
            }
            3 if !live.is_empty() => {
                let q = *live.choose(&mut self.rng).unwrap();
                let a = self.angle();
                self.line(depth, &format!("q{q} = rz(q{q}, {a})"));
            }
            4 if live.len() >= 2 => {
                let mut two = live.clone();
                two.shuffle(&mut self.rng);
                let (a, b) = (two[0], two[1]);
                let g = *["cx", "zz"].choose(&mut self.rng).unwrap();
                self.line(depth, &format!("q{a}, q{b} = {g}(q{a}, q{b})"));
            }
            5 if !live.is_empty() => {
                let q = *live.choose(&mut self.rng).unwrap();
                if free {
                    if self.rng.gen_bool(0.5) {
                        self.line(depth, &format!("b = measure(q{q})"));
                    } else {
                        self.line(depth, &format!("discard(q{q})"));
                    }
                    self.live[q] = false;
                } else {
                    // Measure and replace, keeping the qubit live.
                    self.line(depth, &format!("b = measure(q{q})"));
                    self.line(depth, &format!("q{q} = Qubit()"));
                }
            }
            6 if free && !self.dead().is_empty() => {
                let q = *self.dead().choose(&mut self.rng).unwrap();
                self.live[q] = true;
                self.line(depth, &format!("q{q} = Qubit()"));
            }
            7 => {
                let e = match self.rng.gen_range(0..4) {
                    0 => format!("c + {}", self.rng.gen_range(1..4)),
                    1 => format!("c * {} - 1", self.rng.gen_range(-2..3)),
                    2 => format!("c // {}", self.rng.gen_range(1..3)),
                    _ => "c % 5".into(),
                };
                self.line(depth, &format!("c = {e}"));
            }
            8 => {
                let e = match self.rng.gen_range(0..3) {
                    0 => "not b".into(),
                    1 => format!("b or c == {}", self.rng.gen_range(0..3)),
                    _ => "c > 0 if b else c < 0".into(),
                };
                self.line(depth, &format!("b = {e}"));
            }
            9 if room >= 3 && depth < 3 => {
                let c = self.cond();
                self.line(depth, &format!("if {c}:"));
                self.block(depth + 1);
                if self.rng.gen_bool(0.5) && self.budget > self.stmts + 1 {
                    self.line(depth, "else:");
                    self.block(depth + 1);
                }
            }
            10 if room >= 3 && depth < 3 => {
                let k = self.rng.gen_range(0..4);
                let v = self.fresh_name();
                self.line(depth, &format!("for {v} in range({k}):"));
                self.block(depth + 1);
            }
            11 if room >= 4 && depth < 3 => {
                let v = self.fresh_name();
                let k = self.rng.gen_range(0..4);
                self.line(depth, &format!("{v} = 0"));
                self.line(depth, &format!("while {v} < {k}:"));
                self.line(depth + 1, &format!("{v} += 1"));
                if self.rng.gen_bool(0.3) {
                    self.line(depth + 1, "if b:");
                    let jump = if self.rng.gen_bool(0.5) { "break" } else { "continue" };
                    self.line(depth + 2, jump);
                }
                self.block(depth + 1);
            }
            _ => self.line(depth, "c = c + 1"),
        }
    }

    fn block(&mut self, depth: usize) {
        let n = self.rng.gen_range(1..=3);
        for i in 0..n {
            if i > 0 && self.stmts >= self.budget {
                break;
            }
            self.stmt(depth, false);
        }
    }

    fn fresh_name(&mut self) -> String {
        self.fresh += 1;
        format!("k{}", self.fresh)
    }
}

/// Statements in generated source: non-blank lines of the body.
pub fn statement_count(src: &str) -> usize {
    src.lines().skip(1).filter(|l| !l.trim().is_empty()).count()
}
