//! Statevector over the live qubits. Qubit `k` in `positions` is bit `k` of
//! the basis index.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ops::QuantumOp;

/// Identifies one allocation for the lifetime of a run; gates keep it.
pub type QubitId = u64;

pub type Matrix2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Matrix of a single-qubit gate; `theta` is used by `rz` only.
pub fn gate_matrix(op: QuantumOp, theta: f64) -> Option<Matrix2> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (zero, one) = (c(0.0, 0.0), c(1.0, 0.0));
    Some(match op {
        QuantumOp::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        QuantumOp::X => [[zero, one], [one, zero]],
        QuantumOp::Z => [[one, zero], [zero, -one]],
        QuantumOp::T => [[one, zero], [zero, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        QuantumOp::Tdg => [[one, zero], [zero, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
        QuantumOp::Rz => [
            [Complex64::from_polar(1.0, -theta / 2.0), zero],
            [zero, Complex64::from_polar(1.0, theta / 2.0)],
        ],
        _ => return None,
    })
}

#[derive(Clone, Debug)]
pub struct QuantumState {
    amps: Vec<Complex64>,
    positions: Vec<QubitId>,
    next_id: QubitId,
    rng: ChaCha8Rng,
    max_norm_error: f64,
}

impl QuantumState {
    pub fn new(rng: ChaCha8Rng) -> QuantumState {
        QuantumState { amps: vec![c(1.0, 0.0)], positions: Vec::new(), next_id: 0, rng, max_norm_error: 0.0 }
    }

    pub fn live(&self) -> &[QubitId] {
        &self.positions
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Largest deviation of the norm from 1 seen after any operation.
    pub fn max_norm_error(&self) -> f64 {
        self.max_norm_error
    }

    fn pos(&self, q: QubitId) -> usize {
        self.positions
            .iter()
            .position(|&p| p == q)
            .unwrap_or_else(|| panic!("qubit {q} is not live"))
    }

    fn check_norm(&mut self) {
        let n: f64 = self.amps.iter().map(Complex64::norm_sqr).sum();
        self.max_norm_error = self.max_norm_error.max((n - 1.0).abs());
    }

    /// A fresh qubit in `|0>`, as the most significant bit.
    pub fn alloc(&mut self) -> QubitId {
        let id = self.next_id;
        self.next_id += 1;
        self.amps.resize(self.amps.len() * 2, c(0.0, 0.0));
        self.positions.push(id);
        id
    }

    /// A fresh qubit in `a|0> + b|1>` (normalised here).
    pub fn prepare(&mut self, a: Complex64, b: Complex64) -> QubitId {
        let id = self.alloc();
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        self.apply1(id, &[[a / norm, -b.conj() / norm], [b / norm, a.conj() / norm]]);
        id
    }

    pub fn apply1(&mut self, q: QubitId, m: &Matrix2) {
        let bit = 1usize << self.pos(q);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        self.check_norm();
    }

    pub fn cx(&mut self, control: QubitId, target: QubitId) {
        assert_ne!(control, target, "cx on one qubit");
        let (cb, tb) = (1usize << self.pos(control), 1usize << self.pos(target));
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
        self.check_norm();
    }

    /// `diag(1, -1, -1, 1)`.
    pub fn zz(&mut self, a: QubitId, b: QubitId) {
        assert_ne!(a, b, "zz on one qubit");
        let (ab, bb) = (1usize << self.pos(a), 1usize << self.pos(b));
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if (i & ab != 0) != (i & bb != 0) {
                *amp = -*amp;
            }
        }
        self.check_norm();
    }

    /// Born-rule measurement with one draw; the qubit is removed.
    pub fn measure(&mut self, q: QubitId) -> bool {
        let k = self.pos(q);
        let bit = 1usize << k;
        let p1: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum();
        let outcome = self.rng.gen::<f64>() < p1;
        let p = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / p.sqrt();
        let low = bit - 1;
        let mut out = vec![c(0.0, 0.0); self.amps.len() / 2];
        for (i, a) in self.amps.iter().enumerate() {
            if (i & bit != 0) == outcome {
                out[(i & low) | ((i >> (k + 1)) << k)] = a * scale;
            }
        }
        self.amps = out;
        self.positions.remove(k);
        self.check_norm();
        outcome
    }

    /// Amplitudes over exactly `qubits`, the first being the most
    /// significant. `None` unless they are all and only the live qubits.
    pub fn vector_over(&self, qubits: &[QubitId]) -> Option<Vec<Complex64>> {
        if qubits.len() != self.positions.len() {
            return None;
        }
        let m = qubits.len();
        let mut place = Vec::with_capacity(m);
        for (r, &q) in qubits.iter().enumerate() {
            let p = self.positions.iter().position(|&x| x == q)?;
            if place.iter().any(|&(pp, _)| pp == p) {
                return None;
            }
            place.push((p, m - 1 - r));
        }
        let mut out = vec![c(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = place.iter().fold(0, |j, &(p, r)| j | (((i >> p) & 1) << r));
            out[j] = *a;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn state(seed: u64) -> QuantumState {
        QuantumState::new(ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn gate_matrices_are_unitary() {
        for op in QuantumOp::ALL {
            for theta in [0.0, 0.3, -2.0] {
                let Some(m) = gate_matrix(op, theta) else { continue };
                for i in 0..2 {
                    for j in 0..2 {
                        let dot: Complex64 = (0..2).map(|k| m[i][k] * m[j][k].conj()).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - want).norm() < 1e-12, "{op:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn measure_fresh_is_false() {
        let mut s = state(3);
        let q = s.alloc();
        assert!(!s.measure(q));
        assert!(s.live().is_empty());
        assert_eq!(s.amplitudes().len(), 1);
    }

    #[test]
    fn bell_pair_outcomes_agree() {
        for seed in 0..50 {
            let mut s = state(seed);
            let a = s.alloc();
            let b = s.alloc();
            s.apply1(a, &gate_matrix(QuantumOp::H, 0.0).unwrap());
            s.cx(a, b);
            let ma = s.measure(a);
            assert_eq!(s.measure(b), ma);
            assert!(s.max_norm_error() < 1e-12);
        }
    }

    #[test]
    fn vector_over_reorders() {
        let mut s = state(0);
        let a = s.alloc();
        let b = s.alloc();
        s.apply1(a, &gate_matrix(QuantumOp::X, 0.0).unwrap());
        // a is bit 0 internally; asking for [a, b] puts a first (MSB).
        let v = s.vector_over(&[a, b]).unwrap();
        assert!((v[2].re - 1.0).abs() < 1e-12);
        let v = s.vector_over(&[b, a]).unwrap();
        assert!((v[1].re - 1.0).abs() < 1e-12);
        assert!(s.vector_over(&[a]).is_none());
    }

    #[test]
    fn prepare_sets_amplitudes() {
        let mut s = state(0);
        let q = s.prepare(c(0.6, 0.0), c(0.0, 0.8));
        let v = s.vector_over(&[q]).unwrap();
        assert!((v[0] - c(0.6, 0.0)).norm() < 1e-12 && (v[1] - c(0.0, 0.8)).norm() < 1e-12);
    }
}
