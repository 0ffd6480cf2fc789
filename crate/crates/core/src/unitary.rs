//! Pauli and Clifford groups, unitary-design verification and state orbits.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{cnot_12, cnot_21, hadamard, pauli_x, pauli_z, phase_s};
use crate::projective::{binomial, DesignCheck, WeightedStateSet};
use crate::tensor::{kron, ComplexMatrix, C64, DEFAULT_TOL, I, ONE};

/// Unitaries with positive weights, pairwise distinct modulo global phase.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "UnitarySetJson")]
pub struct UnitarySet {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct UnitarySetJson {
    dim: usize,
    elements: Vec<ComplexMatrix>,
    weights: Option<Vec<f64>>,
}

impl TryFrom<UnitarySetJson> for UnitarySet {
    type Error = Error;
    fn try_from(raw: UnitarySetJson) -> Result<Self> {
        let n = raw.elements.len();
        Self::new(raw.dim, raw.elements, raw.weights.unwrap_or_else(|| vec![1.0; n]))
    }
}

impl UnitarySet {
    pub fn new(dim: usize, elements: Vec<ComplexMatrix>, weights: Vec<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Empty("unitary set has no elements".into()));
        }
        if elements.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: elements.len(),
                got: weights.len(),
            });
        }
        for u in &elements {
            if u.rows() != dim || u.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "element is {}x{}, expected {dim}x{dim}",
                    u.rows(),
                    u.cols()
                )));
            }
            let defect = u.unitarity_defect();
            if defect > DEFAULT_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!("weights must be positive, got {w}")));
        }
        let mut seen = HashMap::new();
        for (i, u) in elements.iter().enumerate() {
            if let Some(j) = seen.insert(PhaseKey::of(u), i) {
                return Err(Error::Domain(format!(
                    "elements {j} and {i} coincide up to a global phase"
                )));
            }
        }
        Ok(Self {
            dim,
            elements,
            weights,
        })
    }

    pub fn uniform(dim: usize, elements: Vec<ComplexMatrix>) -> Result<Self> {
        let n = elements.len();
        Self::new(dim, elements, vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Index of the element equal to `u` up to a global phase.
    pub fn index_table(&self) -> HashMap<PhaseKey, usize> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, u)| (PhaseKey::of(u), i))
            .collect()
    }
}

const PIVOT_TOL: f64 = 1e-9;

/// Representative of U modulo global phase: the first entry with modulus
/// above 1e-9 is made real and positive. Idempotent bit for bit.
pub fn canonical_phase(u: &ComplexMatrix) -> ComplexMatrix {
    let Some(pivot) = u.data().iter().position(|z| z.norm() > PIVOT_TOL) else {
        return u.clone();
    };
    let z = u.data()[pivot];
    if z.im == 0.0 && z.re > 0.0 {
        return u.clone();
    }
    let phase = z.conj() / z.norm();
    let mut out = u.scale(phase);
    out.data_mut()[pivot] = C64::new(z.norm(), 0.0);
    out
}

/// Hash key of a phase-canonicalized matrix rounded to 12 decimal digits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhaseKey(Vec<(i64, i64)>);

impl PhaseKey {
    pub fn of(u: &ComplexMatrix) -> Self {
        Self::of_canonical(&canonical_phase(u))
    }

    fn of_canonical(c: &ComplexMatrix) -> Self {
        let round = |x: f64| (x * 1e12).round() as i64;
        Self(c.data().iter().map(|z| (round(z.re), round(z.im))).collect())
    }
}

pub const MAX_PAULI_QUBITS: usize = 5;

/// The full n-qubit Pauli group i^l ⊗_a X^{j_a} Z^{k_a}, phases included.
#[derive(Clone, Debug)]
pub struct PauliGroup {
    qubits: usize,
    elements: Vec<ComplexMatrix>,
}

impl PauliGroup {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// All 4^{n+1} elements.
    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// The 4^n phase-free operators (l = 0), as a unitary set.
    pub fn operators(&self) -> UnitarySet {
        let ops: Vec<ComplexMatrix> = self.elements.iter().step_by(4).cloned().collect();
        UnitarySet::uniform(1 << self.qubits, ops).expect("Pauli operators are distinct")
    }

    /// Whether `m` equals one of the group elements (phase included).
    pub fn contains(&self, m: &ComplexMatrix) -> bool {
        // m = c·P for a Pauli operator P iff |Tr(P†m)| = dim; then c must be a power of i.
        let dim = (1usize << self.qubits) as f64;
        self.elements.iter().step_by(4).any(|p| {
            let c = p.dagger().matmul(m).trace() / dim;
            [ONE, I, -ONE, -I].iter().any(|&phase| (c - phase).norm() < 1e-9)
                && m.max_abs_diff(&p.scale(c)) < 1e-9
        })
    }
}

pub fn pauli_group(qubits: usize) -> Result<PauliGroup> {
    if qubits == 0 || qubits > MAX_PAULI_QUBITS {
        return Err(Error::Capacity(format!(
            "Pauli groups are enumerated for 1..={MAX_PAULI_QUBITS} qubits, got {qubits}"
        )));
    }
    let single: Vec<ComplexMatrix> = (0..4)
        .map(|jk| {
            let x = if jk & 2 != 0 { pauli_x() } else { ComplexMatrix::identity(2) };
            let z = if jk & 1 != 0 { pauli_z() } else { ComplexMatrix::identity(2) };
            x.matmul(&z)
        })
        .collect();
    let mut ops = vec![ComplexMatrix::identity(1)];
    for _ in 0..qubits {
        ops = ops
            .iter()
            .flat_map(|o| single.iter().map(move |s| kron(o, s)))
            .collect();
    }
    let phases = [ONE, I, -ONE, -I];
    let elements = ops
        .iter()
        .flat_map(|p| phases.iter().map(move |&ph| p.scale(ph)))
        .collect();
    Ok(PauliGroup { qubits, elements })
}

/// Generators {H_a, S_a, CNOT_{a→b}} of the n-qubit Clifford group.
pub fn clifford_generators(qubits: usize) -> Result<Vec<ComplexMatrix>> {
    let id = ComplexMatrix::identity(2);
    match qubits {
        1 => Ok(vec![hadamard(), phase_s()]),
        2 => Ok(vec![
            kron(&hadamard(), &id),
            kron(&id, &hadamard()),
            kron(&phase_s(), &id),
            kron(&id, &phase_s()),
            cnot_12(),
            cnot_21(),
        ]),
        _ => Err(Error::Capacity(format!(
            "Clifford enumeration is limited to 1 or 2 qubits, got {qubits}"
        ))),
    }
}

/// The Clifford group modulo global phase, by breadth-first closure over the
/// generators. Element order is deterministic; the identity comes first.
pub fn clifford_group(qubits: usize) -> Result<UnitarySet> {
    let generators = clifford_generators(qubits)?;
    let dim = 1usize << qubits;
    let start = ComplexMatrix::identity(dim);
    let mut index: HashMap<PhaseKey, usize> = HashMap::new();
    index.insert(PhaseKey::of(&start), 0);
    let mut elements = vec![start];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in &generators {
            let next = canonical_phase(&g.matmul(&elements[i]));
            let key = PhaseKey::of_canonical(&next);
            if !index.contains_key(&key) {
                index.insert(key, elements.len());
                queue.push_back(elements.len());
                elements.push(next);
            }
        }
    }
    let n = elements.len();
    Ok(UnitarySet {
        dim,
        elements,
        weights: vec![1.0; n],
    })
}

/// Frame sum Σ_a Σ_{i,j} w_i w_j |⟨a|U_i†U_j|a⟩|^{2t} against d·W²/C(d+t−1, t).
/// The sum is saturated exactly by unitary t-designs.
pub fn unitary_design_residual(set: &UnitarySet, t: usize, tol: f64) -> DesignCheck {
    let d = set.dim;
    let n = set.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ui = set.elements[i].data();
            let mut acc = 0.0;
            for (uj, &wj) in set.elements.iter().zip(&set.weights) {
                let uj = uj.data();
                let mut inner = 0.0;
                for a in 0..d {
                    let mut z = C64::new(0.0, 0.0);
                    for b in 0..d {
                        z += ui[b * d + a].conj() * uj[b * d + a];
                    }
                    inner += z.norm_sqr().powi(t as i32);
                }
                acc += wj * inner;
            }
            acc * set.weights[i]
        })
        .collect();
    let sum: f64 = rows.iter().sum();
    let w = set.total_weight();
    let bound = d as f64 * w * w / binomial(d + t - 1, t);
    DesignCheck::new(sum, bound, tol)
}

/// Overlap-squared above which two orbit states are merged.
const MERGE_OVERLAP: f64 = 1.0 - 1e-10;

/// The states U_i|ψ⟩, with coincident rays merged into summed weights.
pub fn orbit_state(set: &UnitarySet, psi: &ComplexMatrix) -> Result<WeightedStateSet> {
    if psi.rows() != set.dim || psi.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "state must be a column of length {}",
            set.dim
        )));
    }
    let mut states: Vec<ComplexMatrix> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (u, &w) in set.elements.iter().zip(&set.weights) {
        let image = u.matmul(psi);
        match states
            .iter()
            .position(|s| s.inner(&image).norm_sqr() >= MERGE_OVERLAP)
        {
            Some(k) => weights[k] += w,
            None => {
                states.push(image);
                weights.push(w);
            }
        }
    }
    WeightedStateSet::new(set.dim, states, weights)
}
