//! Fixed one- and two-qubit gates. Qubit 1 is the leftmost tensor factor.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::tensor::{ComplexMatrix, C64, I, ONE, ZERO};

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]])
}

pub fn hadamard() -> ComplexMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_rows(&[vec![h, h], vec![h, -h]])
}

/// diag(1, i)
pub fn phase_s() -> ComplexMatrix {
    ComplexMatrix::diagonal(&[ONE, I])
}

/// Control qubit 1, target qubit 2.
pub fn cnot_12() -> ComplexMatrix {
    permutation_matrix(&[0, 1, 3, 2])
}

/// Control qubit 2, target qubit 1.
pub fn cnot_21() -> ComplexMatrix {
    permutation_matrix(&[0, 3, 2, 1])
}

/// Matrix sending |j⟩ to |targets[j]⟩.
pub fn permutation_matrix(targets: &[usize]) -> ComplexMatrix {
    let n = targets.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (j, &t) in targets.iter().enumerate() {
        m[(t, j)] = ONE;
    }
    m
}

/// Cyclic shift X|j⟩ = |j+1 mod d⟩.
pub fn shift(d: usize) -> ComplexMatrix {
    let targets: Vec<usize> = (0..d).map(|j| (j + 1) % d).collect();
    permutation_matrix(&targets)
}

/// Clock Z|j⟩ = ω^j|j⟩ with ω = e^{2πi/d}.
pub fn clock(d: usize) -> ComplexMatrix {
    let diag: Vec<C64> = (0..d)
        .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / d as f64))
        .collect();
    ComplexMatrix::diagonal(&diag)
}

/// Swap of two d-level systems.
pub fn swap(d: usize) -> ComplexMatrix {
    let targets: Vec<usize> = (0..d * d).map(|x| (x % d) * d + x / d).collect();
    permutation_matrix(&targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::kron;

    #[test]
    fn gates_are_unitary() {
        for g in [pauli_x(), pauli_y(), pauli_z(), hadamard(), phase_s(), cnot_12(), cnot_21(), swap(3), shift(4), clock(5)] {
            assert!(g.is_unitary(1e-14));
        }
    }

    #[test]
    fn cnot_actions() {
        // |10⟩ -> |11⟩ under control 1.
        let v = cnot_12().matmul(&ComplexMatrix::ket(4, 2));
        assert_eq!(v, ComplexMatrix::ket(4, 3));
        // |01⟩ -> |11⟩ under control 2.
        let v = cnot_21().matmul(&ComplexMatrix::ket(4, 1));
        assert_eq!(v, ComplexMatrix::ket(4, 3));
        let h2 = kron(&hadamard(), &hadamard());
        assert!(cnot_21().max_abs_diff(&h2.matmul(&cnot_12()).matmul(&h2)) < 1e-15);
    }

    #[test]
    fn weyl_commutation() {
        let d = 3;
        let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
        let zx = clock(d).matmul(&shift(d));
        let xz = shift(d).matmul(&clock(d));
        assert!(zx.max_abs_diff(&xz.scale(omega)) < 1e-15);
    }
}
