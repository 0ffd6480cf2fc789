//! Complex-projective designs: Welch sums, SIC and MUB constructions, and
//! linear-inversion state reconstruction from 2-design measurements.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{clock, hadamard, phase_s, shift, cnot_12, cnot_21};
use crate::tensor::{kron, ComplexMatrix, C64, DEFAULT_TOL, ONE};

/// Pure states with positive weights. Weights need not be normalized.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StateSetJson")]
pub struct WeightedStateSet {
    dim: usize,
    states: Vec<ComplexMatrix>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct StateSetJson {
    dim: usize,
    states: Vec<ComplexMatrix>,
    weights: Vec<f64>,
}

impl TryFrom<StateSetJson> for WeightedStateSet {
    type Error = Error;
    fn try_from(raw: StateSetJson) -> Result<Self> {
        Self::new(raw.dim, raw.states, raw.weights)
    }
}

impl WeightedStateSet {
    pub fn new(dim: usize, states: Vec<ComplexMatrix>, weights: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("state set has no states".into()));
        }
        if states.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: states.len(),
                got: weights.len(),
            });
        }
        for (i, s) in states.iter().enumerate() {
            if s.rows() != dim || s.cols() != 1 {
                return Err(Error::DimensionMismatch(format!(
                    "state {i} is {}x{}, expected a column of length {dim}",
                    s.rows(),
                    s.cols()
                )));
            }
            let norm = s.vector_norm();
            if (norm - 1.0).abs() > DEFAULT_TOL {
                return Err(Error::Domain(format!("state {i} has norm {norm}")));
            }
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!("weights must be positive, got {w}")));
        }
        Ok(Self {
            dim,
            states,
            weights,
        })
    }

    pub fn uniform(dim: usize, states: Vec<ComplexMatrix>) -> Result<Self> {
        let n = states.len();
        Self::new(dim, states, vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[ComplexMatrix] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Applies the same unitary to every state.
    pub fn rotated(&self, u: &ComplexMatrix) -> Self {
        Self {
            dim: self.dim,
            states: self.states.iter().map(|s| u.matmul(s)).collect(),
            weights: self.weights.clone(),
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Σ_{i,j} w_i w_j |⟨ψ_i|ψ_j⟩|^{2t}.
pub fn welch_sum(set: &WeightedStateSet, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Domain("Welch sums need t >= 1".into()));
    }
    let rows: Vec<f64> = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let si = &set.states[i];
            set.states
                .iter()
                .zip(&set.weights)
                .map(|(sj, &wj)| wj * si.inner(sj).norm_sqr().powi(t as i32))
                .sum::<f64>()
                * set.weights[i]
        })
        .collect();
    Ok(rows.iter().sum())
}

/// W² / C(d+t−1, t) with W the total weight.
pub fn welch_bound(dim: usize, total_weight: f64, t: usize) -> f64 {
    total_weight * total_weight / binomial(dim + t - 1, t)
}

/// Outcome of comparing a frame sum against its lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DesignCheck {
    pub sum: f64,
    pub bound: f64,
    /// sum − bound
    pub residual: f64,
    pub passed: bool,
}

impl DesignCheck {
    pub(crate) fn new(sum: f64, bound: f64, tol: f64) -> Self {
        let residual = sum - bound;
        Self {
            sum,
            bound,
            residual,
            passed: residual <= tol * bound,
        }
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual / self.bound
    }
}

/// Welch-saturation test, relative tolerance on the bound.
pub fn is_projective_design(set: &WeightedStateSet, t: usize, tol: f64) -> Result<DesignCheck> {
    let sum = welch_sum(set, t)?;
    let bound = welch_bound(set.dim, set.total_weight(), t);
    Ok(DesignCheck::new(sum, bound, tol))
}

/// sin θ·(0,1,−1)/√2 + cos θ·(2,−1,−1)/√6.
pub fn sic_fiducial_d3(theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    let a = s / 2f64.sqrt();
    let b = c / 6f64.sqrt();
    ComplexMatrix::column(vec![
        C64::new(2.0 * b, 0.0),
        C64::new(a - b, 0.0),
        C64::new(-a - b, 0.0),
    ])
}

/// Qubit fiducial whose Weyl–Heisenberg orbit is the tetrahedral SIC.
pub fn sic_fiducial_d2() -> ComplexMatrix {
    // Bloch vector (1,1,1)/√3.
    let theta = (1.0 / 3f64.sqrt()).acos();
    let phi = PI / 4.0;
    ComplexMatrix::column(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// The d² states X^a Z^b |ψ⟩ with unit weights.
pub fn wh_orbit(fiducial: &ComplexMatrix, dim: usize) -> Result<WeightedStateSet> {
    if fiducial.rows() != dim || fiducial.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "fiducial must be a column of length {dim}"
        )));
    }
    let x = shift(dim);
    let z = clock(dim);
    let mut states = Vec::with_capacity(dim * dim);
    let mut xa = ComplexMatrix::identity(dim);
    for _ in 0..dim {
        let mut op = xa.clone();
        for _ in 0..dim {
            states.push(op.matmul(fiducial));
            op = op.matmul(&z);
        }
        xa = xa.matmul(&x);
    }
    WeightedStateSet::uniform(dim, states)
}

/// Orthonormal basis given by the columns of a unitary.
pub fn basis_of(u: &ComplexMatrix) -> Vec<ComplexMatrix> {
    (0..u.cols()).map(|c| u.col(c)).collect()
}

/// The five two-qubit preparation unitaries U_0..U_4 whose columns form a complete MUB.
pub fn mub_unitaries_d4() -> [ComplexMatrix; 5] {
    let u0 = ComplexMatrix::identity(4);
    let u1 = kron(&hadamard(), &hadamard());
    let u2 = kron(&phase_s(), &phase_s()).matmul(&u1);
    let u3 = cnot_12().matmul(&cnot_21()).matmul(&u2);
    let u4 = cnot_21().matmul(&cnot_12()).matmul(&u2);
    [u0, u1, u2, u3, u4]
}

/// Complete sets of d+1 mutually unbiased bases for d ∈ {2, 3, 4}.
pub fn mub_family(dim: usize) -> Result<Vec<Vec<ComplexMatrix>>> {
    match dim {
        2 => {
            let s = 1.0 / 2f64.sqrt();
            let y = ComplexMatrix::from_rows(&[
                vec![C64::new(s, 0.0), C64::new(s, 0.0)],
                vec![C64::new(0.0, s), C64::new(0.0, -s)],
            ]);
            Ok(vec![
                basis_of(&ComplexMatrix::identity(2)),
                basis_of(&hadamard()),
                basis_of(&y),
            ])
        }
        3 => {
            // Computational basis plus ω^{b j² + m j}/√3 for b = 0, 1, 2.
            let omega = |k: usize| C64::from_polar(1.0 / 3f64.sqrt(), 2.0 * PI * (k % 3) as f64 / 3.0);
            let mut bases = vec![basis_of(&ComplexMatrix::identity(3))];
            for b in 0..3 {
                bases.push(
                    (0..3)
                        .map(|m| ComplexMatrix::column((0..3).map(|j| omega(b * j * j + m * j)).collect()))
                        .collect(),
                );
            }
            Ok(bases)
        }
        4 => Ok(mub_unitaries_d4().iter().map(basis_of).collect()),
        _ => Err(Error::Domain(format!(
            "MUB families are provided for d in {{2, 3, 4}}, got {dim}"
        ))),
    }
}

/// Flattens a family of bases into a unit-weight state set.
pub fn bases_to_state_set(dim: usize, bases: &[Vec<ComplexMatrix>]) -> Result<WeightedStateSet> {
    WeightedStateSet::uniform(dim, bases.iter().flatten().cloned().collect())
}

/// Amplitudes p_0..p_3 of the isocoherent MUB; their squares sum to one.
pub fn isocoherent_amplitudes() -> [f64; 4] {
    let r5 = 5f64.sqrt();
    let plus = (10.0 + 2.0 * r5).sqrt() / 5.0;
    let minus = (10.0 - 2.0 * r5).sqrt() / 5.0;
    [
        0.5 * (1.0 + 1.0 / r5 + plus).sqrt(),
        0.5 * (1.0 - 1.0 / r5 + minus).sqrt(),
        0.5 * (1.0 + 1.0 / r5 - plus).sqrt(),
        0.5 * (1.0 - 1.0 / r5 - minus).sqrt(),
    ]
}

/// Five mutually unbiased bases in d = 4 whose states all decohere to permutations
/// of one probability vector. Basis vectors are the columns of P ⊙ exp(iΦ_j).
pub fn isocoherent_mub() -> Vec<Vec<ComplexMatrix>> {
    let [p0, p1, p2, p3] = isocoherent_amplitudes();
    let amp = [[p3, p2, p1, p0], [p0, p3, p2, p1], [p2, p1, p0, p3], [p1, p0, p3, p2]];
    let r5 = 5f64.sqrt();
    let theta = |a: f64, b: f64| ((a + b * r5) / 4.0).acos();
    let (tmm, tmp, tpm, tpp) = (theta(-1.0, -1.0), theta(-1.0, 1.0), theta(1.0, -1.0), theta(1.0, 1.0));
    let phases: [[[f64; 4]; 4]; 5] = [
        [[0.0; 4], [0.0, 0.0, 0.0, PI], [0.0, 0.0, PI, 0.0], [0.0, PI, PI, 0.0]],
        [[0.0; 4], [-tmm, -tmm, -tmm, tpp], [tmp, tmp, -tpm, tmp], [-tmp, tpm, tpm, -tmp]],
        [[0.0; 4], [tmm, tmm, tmm, -tpp], [-tmp, -tmp, tpm, -tmp], [tmp, -tpm, -tpm, tmp]],
        [[0.0; 4], [-tmp, -tmp, -tmp, tpm], [-tmm, -tmm, tpp, -tmm], [tmm, -tpp, -tpp, tmm]],
        [[0.0; 4], [tmp, tmp, tmp, -tpm], [tmm, tmm, -tpp, tmm], [-tmm, tpp, tpp, -tmm]],
    ];
    phases
        .iter()
        .map(|phi| {
            let b = ComplexMatrix::from_fn(4, 4, |r, c| C64::from_polar(amp[r][c], phi[r][c]));
            basis_of(&b)
        })
        .collect()
}

/// Isocoherence cost of the bases rotated by U: for every state the sorted
/// probabilities |⟨ψ|U|j⟩|² are matched against a shared target (the
/// componentwise median of the sorted vectors) in L1. Zero iff every state
/// decoheres to a permutation of one probability vector.
pub fn isocoherence_cost(u: &ComplexMatrix, bases: &[Vec<ComplexMatrix>]) -> Result<f64> {
    let defect = u.unitarity_defect();
    if defect > DEFAULT_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let ud = u.dagger();
    let mut sorted: Vec<Vec<f64>> = Vec::new();
    for state in bases.iter().flatten() {
        if state.rows() != u.rows() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for a {}x{} unitary",
                state.rows(),
                u.rows(),
                u.cols()
            )));
        }
        // ⟨ψ|U|j⟩ = conj((U†ψ)_j)
        let rotated = ud.matmul(state);
        let mut probs: Vec<f64> = rotated.data().iter().map(|z| z.norm_sqr()).collect();
        probs.sort_by(|a, b| b.total_cmp(a));
        sorted.push(probs);
    }
    if sorted.is_empty() {
        return Err(Error::Empty("no states to evaluate".into()));
    }
    let d = u.rows();
    let target: Vec<f64> = (0..d)
        .map(|j| {
            let mut column: Vec<f64> = sorted.iter().map(|p| p[j]).collect();
            column.sort_by(f64::total_cmp);
            let n = column.len();
            if n % 2 == 1 {
                column[n / 2]
            } else {
                0.5 * (column[n / 2 - 1] + column[n / 2])
            }
        })
        .collect();
    Ok(sorted
        .iter()
        .map(|p| p.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum())
}

/// Born probabilities Tr(ρ|ψ_i⟩⟨ψ_i|) for every state of the set.
pub fn born_probabilities(set: &WeightedStateSet, rho: &ComplexMatrix) -> Vec<f64> {
    set.states
        .iter()
        .map(|s| s.inner(&rho.matmul(s)).re)
        .collect()
}

/// ρ = (d(d+1)/W)·Σ w_i p_i |ψ_i⟩⟨ψ_i| − I, valid when the set is a 2-design.
pub fn state_reconstruct(set: &WeightedStateSet, probs: &[f64]) -> Result<ComplexMatrix> {
    if probs.len() != set.len() {
        return Err(Error::LengthMismatch {
            expected: set.len(),
            got: probs.len(),
        });
    }
    let d = set.dim;
    let factor = (d * (d + 1)) as f64 / set.total_weight();
    let mut rho = ComplexMatrix::identity(d).scale_real(-1.0);
    for ((s, &w), &p) in set.states.iter().zip(&set.weights).zip(probs) {
        rho.add_scaled(&s.projector(), ONE * (factor * w * p));
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, RngStream};
    use crate::tensor::{partial_trace, SubsystemShape};

    fn overlap_sq(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        a.inner(b).norm_sqr()
    }

    fn tetrahedron() -> WeightedStateSet {
        wh_orbit(&sic_fiducial_d2(), 2).unwrap()
    }

    #[test]
    fn single_state_welch() {
        let set = WeightedStateSet::uniform(3, vec![ComplexMatrix::ket(3, 1)]).unwrap();
        for t in 1..4 {
            let sum = welch_sum(&set, t).unwrap();
            let bound = welch_bound(3, 1.0, t);
            assert_eq!(sum, 1.0);
            assert!((bound - 1.0 / binomial(3 + t - 1, t)).abs() < 1e-15);
            assert!(sum >= bound);
        }
        let trivial = WeightedStateSet::uniform(1, vec![ComplexMatrix::ket(1, 0)]).unwrap();
        assert!(is_projective_design(&trivial, 1, 1e-12).unwrap().passed);
    }

    #[test]
    fn tetrahedral_sic() {
        let set = tetrahedron();
        assert_eq!(set.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((overlap_sq(&set.states()[i], &set.states()[j]) - 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
        let check = is_projective_design(&set, 2, 1e-10).unwrap();
        assert!((check.sum - 16.0 / 3.0).abs() < 1e-12);
        assert!((check.bound - 16.0 / 3.0).abs() < 1e-12);
        assert!(check.passed);
    }

    #[test]
    fn computational_basis_is_not_a_two_design() {
        let set = bases_to_state_set(2, &[basis_of(&ComplexMatrix::identity(2))]).unwrap();
        let check = is_projective_design(&set, 2, 1e-10).unwrap();
        assert!((check.sum - 2.0).abs() < 1e-15);
        assert!((check.bound - 4.0 / 3.0).abs() < 1e-15);
        assert!(!check.passed);
    }

    #[test]
    fn complete_mubs_saturate_welch() {
        let d3 = bases_to_state_set(3, &mub_family(3).unwrap()).unwrap();
        let check = is_projective_design(&d3, 2, 1e-10).unwrap();
        assert!((check.sum - 24.0).abs() < 1e-10 && (check.bound - 24.0).abs() < 1e-12);
        let d4 = bases_to_state_set(4, &mub_family(4).unwrap()).unwrap();
        let check = is_projective_design(&d4, 2, 1e-10).unwrap();
        assert!((check.sum - 40.0).abs() < 1e-10 && (check.bound - 40.0).abs() < 1e-12);
        assert!(mub_family(5).is_err());
    }

    #[test]
    fn mub_unbiasedness() {
        for d in 2..=4 {
            let bases = mub_family(d).unwrap();
            assert_eq!(bases.len(), d + 1);
            for (x, bx) in bases.iter().enumerate() {
                for (i, e) in bx.iter().enumerate() {
                    for (j, f) in bx.iter().enumerate() {
                        let expected = if i == j { 1.0 } else { 0.0 };
                        assert!((overlap_sq(e, f) - expected).abs() < 1e-12);
                    }
                    for by in bases.iter().skip(x + 1) {
                        for f in by {
                            assert!((overlap_sq(e, f) - 1.0 / d as f64).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sic_fiducial_values() {
        let f0 = sic_fiducial_d3(0.0);
        let s6 = 6f64.sqrt();
        let expected = [2.0 / s6, -1.0 / s6, -1.0 / s6];
        for (z, e) in f0.data().iter().zip(expected) {
            assert!((z.re - e).abs() < 1e-15 && z.im == 0.0);
        }
        let f1 = sic_fiducial_d3(PI / 2.0);
        let s2 = 2f64.sqrt();
        let expected = [0.0, 1.0 / s2, -1.0 / s2];
        for (z, e) in f1.data().iter().zip(expected) {
            assert!((z.re - e).abs() < 1e-15);
        }
        for k in 0..10 {
            assert!((sic_fiducial_d3(0.37 * k as f64).vector_norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn wh_orbit_overlaps_and_sizes() {
        let set = wh_orbit(&sic_fiducial_d3(0.4), 3).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    assert!((overlap_sq(&set.states()[i], &set.states()[j]) - 0.25).abs() < 1e-12);
                }
            }
        }
        for d in 2..=4 {
            let orbit = wh_orbit(&ComplexMatrix::ket(d, 0), d).unwrap();
            assert_eq!(orbit.len(), d * d);
        }
        assert!(wh_orbit(&ComplexMatrix::ket(3, 0), 2).is_err());
    }

    #[test]
    fn isocoherent_mub_properties() {
        let p = isocoherent_amplitudes();
        assert!((p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p.iter().map(|x| x.powi(4)).sum::<f64>() - 0.4).abs() < 1e-10);
        let bases = isocoherent_mub();
        let set = bases_to_state_set(4, &bases).unwrap();
        assert!(is_projective_design(&set, 2, 1e-10).unwrap().passed);
        let cost = isocoherence_cost(&ComplexMatrix::identity(4), &bases).unwrap();
        assert!(cost < 1e-8, "cost {cost}");
    }

    /// Two reduced purities, 4/5 ± 1/(5√5), each attained by ten states.
    #[test]
    fn isocoherent_reduced_purities() {
        let shape = SubsystemShape::uniform(2, 2);
        let high = 0.8 + 1.0 / (5.0 * 5f64.sqrt());
        let low = 0.8 - 1.0 / (5.0 * 5f64.sqrt());
        let (mut n_high, mut n_low) = (0, 0);
        for s in isocoherent_mub().iter().flatten() {
            let reduced = partial_trace(&s.projector(), &shape, &[0]).unwrap();
            let purity = reduced.purity();
            if (purity - high).abs() < 1e-10 {
                n_high += 1;
            } else if (purity - low).abs() < 1e-10 {
                n_low += 1;
            }
        }
        assert_eq!((n_high, n_low), (10, 10));
    }

    #[test]
    fn isocoherence_cost_behaviour() {
        let standard = mub_family(4).unwrap();
        assert!(isocoherence_cost(&ComplexMatrix::identity(4), &standard).unwrap() > 0.1);
        let bases = isocoherent_mub();
        let mut rng = RngStream::new(21);
        let u = haar_unitary(4, &mut rng);
        let phases = ComplexMatrix::diagonal(&[
            C64::from_polar(1.0, 0.3),
            C64::from_polar(1.0, -1.1),
            C64::from_polar(1.0, 2.0),
            C64::from_polar(1.0, 0.7),
        ]);
        let a = isocoherence_cost(&u, &bases).unwrap();
        let b = isocoherence_cost(&u.matmul(&phases), &bases).unwrap();
        assert!((a - b).abs() < 1e-12);
        let not_unitary = ComplexMatrix::identity(4).scale_real(2.0);
        assert!(matches!(isocoherence_cost(&not_unitary, &bases), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn reconstruct_from_octahedron() {
        let octahedron = bases_to_state_set(2, &mub_family(2).unwrap()).unwrap();
        let rho = ComplexMatrix::ket(2, 0).projector();
        let probs = born_probabilities(&octahedron, &rho);
        let back = state_reconstruct(&octahedron, &probs).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-12);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        let probs = vec![0.5; 6];
        assert!(state_reconstruct(&octahedron, &probs).unwrap().max_abs_diff(&mixed) < 1e-15);
        assert!(state_reconstruct(&octahedron, &probs[..5]).is_err());
    }

    #[test]
    fn reconstruction_factor_is_one_for_d4_mubs() {
        let set = bases_to_state_set(4, &mub_family(4).unwrap()).unwrap();
        let factor = (4 * 5) as f64 / set.total_weight();
        assert_eq!(factor, 1.0);
    }

    #[test]
    fn json_rejects_unnormalized_states() {
        let text = r#"{"dim":2,"states":[{"rows":2,"cols":1,"data":[[1,0],[1,0]]}],"weights":[1]}"#;
        assert!(serde_json::from_str::<WeightedStateSet>(text).is_err());
    }
}
