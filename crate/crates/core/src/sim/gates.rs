//! Gate matrices shared by the exact and trajectory simulators.

use num_complex::Complex;

use crate::primitives::{Axis, TwoQubitKind};
use crate::scalar::Real;
use crate::state::{c, QuantumState};

/// exp(−iθσ/2) about `axis`.
pub fn rotation<T: Real>(axis: Axis, angle: T) -> [[Complex<T>; 2]; 2] {
    let half = angle / T::lit(2.0);
    let (s, co) = half.sin_cos();
    let z = T::zero();
    match axis {
        Axis::X => [[c(co, z), c(z, -s)], [c(z, -s), c(co, z)]],
        Axis::Y => [[c(co, z), c(-s, z)], [c(s, z), c(co, z)]],
        Axis::Z => [[c(co, -s), c(z, z)], [c(z, z), c(co, s)]],
    }
}

/// exp(−iπ/4 P⊗P) with P = X (Mølmer–Sørensen) or Z.
pub fn entangler<T: Real>(kind: TwoQubitKind) -> [[Complex<T>; 4]; 4] {
    let h = T::FRAC_1_SQRT_2();
    let z = c(T::zero(), T::zero());
    let d = c(h, T::zero());
    match kind {
        TwoQubitKind::Ms => {
            let o = c(T::zero(), -h);
            [[d, z, z, o], [z, d, o, z], [z, o, d, z], [o, z, z, d]]
        }
        TwoQubitKind::Zz => {
            let minus = c(h, -h);
            let plus = c(h, h);
            [[minus, z, z, z], [z, plus, z, z], [z, z, plus, z], [z, z, z, minus]]
        }
    }
}

pub fn apply_gate1<T: Real>(state: &mut QuantumState<T>, q: usize, axis: Axis, angle: f64) {
    state.apply_1q(q, &rotation(axis, T::lit(angle)));
}

pub fn apply_gate2<T: Real>(state: &mut QuantumState<T>, q1: usize, q2: usize, kind: TwoQubitKind) {
    state.apply_2q(q1, q2, &entangler(kind));
}
