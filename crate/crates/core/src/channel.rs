//! Quantum channels, Choi–Jamiołkowski states and channel designs.
//!
//! Choi layout: `σ_Φ = (1/d) Σ_{a,b} Φ(|a⟩⟨b|) ⊗ |a⟩⟨b|`, outputs on the left
//! factor and inputs on the right, normalized to unit trace. The t-copy Choi
//! state of Φ^{⊗t} orders factors as (out₁ … out_t)(in₁ … in_t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{clock, cnot_21, hadamard, pauli_x, phase_s, shift};
use crate::linalg::{hermitian_eigen, min_eigenvalue};
use crate::tensor::{
    hs_norm, kron, kron_all, partial_trace, permute_subsystems, ComplexMatrix, SubsystemShape, C64,
    DEFAULT_TOL, ONE, ZERO,
};
use crate::unitary::clifford_group;
use crate::weingarten::{cycle_count, enumerate_symmetric_group, weingarten_table, Permutation};

/// Largest copy number handled by the t-copy Choi machinery.
pub const MAX_CHOI_COPIES: usize = 3;

/// Choi-state equality tolerance used to identify channels.
pub const CHANNEL_DEDUP_TOL: f64 = 1e-8;

/// A CPTP map given by Kraus operators with Σ K†K = I.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson")]
pub struct QuantumChannel {
    #[serde(skip)]
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Deserialize)]
struct ChannelJson {
    kraus: Vec<ComplexMatrix>,
}

impl TryFrom<ChannelJson> for QuantumChannel {
    type Error = Error;
    fn try_from(raw: ChannelJson) -> Result<Self> {
        Self::new(raw.kraus)
    }
}

impl QuantumChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Empty("channel needs at least one Kraus operator".into()))?;
        let dim = first.rows();
        let mut completeness = ComplexMatrix::zeros(dim, dim);
        for k in &kraus {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim}x{dim}",
                    k.rows(),
                    k.cols()
                )));
            }
            completeness = &completeness + &k.dagger().matmul(k);
        }
        let defect = hs_norm(&(&completeness - &ComplexMatrix::identity(dim)));
        if defect > DEFAULT_TOL {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(Self { dim, kraus })
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::new(vec![u.clone()])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// ρ ↦ Tr(ρ)·I/d, with the d² Weyl operators X^a Z^b / d as Kraus operators.
    pub fn depolarizing(dim: usize) -> Self {
        let x = shift(dim);
        let z = clock(dim);
        let mut kraus = Vec::with_capacity(dim * dim);
        let mut xa = ComplexMatrix::identity(dim);
        for _ in 0..dim {
            let mut op = xa.clone();
            for _ in 0..dim {
                kraus.push(op.scale_real(1.0 / dim as f64));
                op = op.matmul(&z);
            }
            xa = xa.matmul(&x);
        }
        Self { dim, kraus }
    }

    /// ρ ↦ Tr(ρ)·|ψ⟩⟨ψ|.
    pub fn contraction(target: &ComplexMatrix) -> Self {
        let dim = target.rows();
        let kraus = (0..dim)
            .map(|a| target.matmul(&ComplexMatrix::ket(dim, a).dagger()))
            .collect();
        Self { dim, kraus }
    }

    /// Kraus operators from the spectral decomposition of a t = 1 Choi state.
    pub fn from_choi(choi: &ChoiState) -> Result<Self> {
        if choi.copies != 1 {
            return Err(Error::Domain("Kraus extraction needs a single-copy Choi state".into()));
        }
        let d = choi.dim;
        let (values, vectors) = hermitian_eigen(&choi.matrix);
        let mut kraus = Vec::new();
        for (c, &lambda) in values.iter().enumerate() {
            if lambda <= 1e-12 {
                continue;
            }
            let s = (d as f64 * lambda).sqrt();
            kraus.push(ComplexMatrix::from_fn(d, d, |i, a| vectors[(i * d + a, c)] * s));
        }
        Self::new(kraus)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out = &out + &rho.conjugate_by(k);
        }
        out
    }

    /// Φ ⊗ Ψ acting on the product space, Φ on the left factor.
    pub fn tensor(&self, other: &Self) -> Self {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| kron(a, b)))
            .collect();
        Self {
            dim: self.dim * other.dim,
            kraus,
        }
    }

    pub fn choi(&self) -> ChoiState {
        choi_of_channel(self)
    }

    /// Number of Choi eigenvalues above 1e-9.
    pub fn kraus_rank(&self) -> usize {
        hermitian_eigen(&self.choi().matrix)
            .0
            .iter()
            .filter(|&&l| l > 1e-9)
            .count()
    }
}

/// Trace-one Choi state of a channel (or of its t-fold tensor power).
#[derive(Clone, Debug, Serialize)]
pub struct ChoiState {
    dim: usize,
    copies: usize,
    matrix: ComplexMatrix,
}

impl ChoiState {
    /// Checks shape, hermiticity and unit trace (both to 1e-10).
    pub fn new(dim: usize, copies: usize, matrix: ComplexMatrix) -> Result<Self> {
        let side = dim.pow(2 * copies as u32);
        if !matrix.is_square() || matrix.rows() != side {
            return Err(Error::DimensionMismatch(format!(
                "Choi state for d = {dim}, t = {copies} must be {side}x{side}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_defect();
        if herm > DEFAULT_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > DEFAULT_TOL {
            return Err(Error::Domain(format!("Choi state has trace {tr}")));
        }
        Ok(Self {
            dim,
            copies,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.matrix.distance(&other.matrix)
    }
}

/// σ_Φ = (1/d) Σ_{a,b} Φ(|a⟩⟨b|) ⊗ |a⟩⟨b|.
pub fn choi_of_channel(channel: &QuantumChannel) -> ChoiState {
    let d = channel.dim;
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    let inv = 1.0 / d as f64;
    for k in &channel.kraus {
        for i in 0..d {
            for a in 0..d {
                let left = k[(i, a)] * inv;
                if left == ZERO {
                    continue;
                }
                for j in 0..d {
                    for b in 0..d {
                        m[(i * d + a, j * d + b)] += left * k[(j, b)].conj();
                    }
                }
            }
        }
    }
    ChoiState {
        dim: d,
        copies: 1,
        matrix: m,
    }
}

/// Reorders σ^{⊗t} from (out₁ in₁)…(out_t in_t) into (out₁…out_t)(in₁…in_t).
fn tensor_power_choi(single: &ComplexMatrix, d: usize, t: usize) -> Result<ComplexMatrix> {
    let power = kron_all(std::iter::repeat_n(single, t));
    let perm: Vec<usize> = (0..t).map(|n| 2 * n).chain((0..t).map(|n| 2 * n + 1)).collect();
    permute_subsystems(&power, &SubsystemShape::uniform(d, 2 * t), &perm)
}

fn check_copies(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Domain("copy number must be at least 1".into()));
    }
    if t > MAX_CHOI_COPIES {
        return Err(Error::Capacity(format!(
            "t-copy Choi states are limited to t <= {MAX_CHOI_COPIES}, got {t}"
        )));
    }
    Ok(())
}

/// σ_{Φ^{⊗t}} in the (outputs)(inputs) layout.
pub fn choi_tcopy(channel: &QuantumChannel, t: usize) -> Result<ChoiState> {
    check_copies(t)?;
    let single = choi_of_channel(channel);
    if t == 1 {
        return Ok(single);
    }
    let matrix = tensor_power_choi(&single.matrix, channel.dim, t)?;
    Ok(ChoiState {
        dim: channel.dim,
        copies: t,
        matrix,
    })
}

/// For every multi-index X over t digits base d, the index Y with y_{π(n)} = x_n.
fn digit_permutation_map(p: &Permutation, d: usize, t: usize) -> Vec<usize> {
    let size = d.pow(t as u32);
    let weight = |n: usize| d.pow((t - 1 - n) as u32);
    (0..size)
        .map(|x| {
            (0..t)
                .map(|n| ((x / weight(n)) % d) * weight(p.image(n)))
                .sum()
        })
        .collect()
}

/// Σ_{σ,τ} coeff(σ,τ)·Π_n δ(a_n, b_{σ(n)}) δ(i_n, j_{τ(n)}) assembled in the
/// t-copy Choi layout; σ acts on inputs, τ on outputs.
fn assemble_permutation_sum(
    d: usize,
    t: usize,
    coeff: impl Fn(&Permutation, &Permutation) -> f64,
) -> Result<ComplexMatrix> {
    let group = enumerate_symmetric_group(t)?;
    let maps: Vec<Vec<usize>> = group.iter().map(|p| digit_permutation_map(p, d, t)).collect();
    let block = d.pow(t as u32);
    let mut m = ComplexMatrix::zeros(block * block, block * block);
    for (s, sigma) in group.iter().enumerate() {
        for (u, tau) in group.iter().enumerate() {
            let c = coeff(sigma, tau);
            if c == 0.0 {
                continue;
            }
            for out in 0..block {
                let out_col = maps[u][out];
                for inp in 0..block {
                    let in_col = maps[s][inp];
                    m[(out * block + inp, out_col * block + in_col)] += C64::new(c, 0.0);
                }
            }
        }
    }
    Ok(m)
}

/// Haar average of σ_{Φ^{⊗t}} over channels induced by U(dk) with a pure
/// environment of dimension k (k may be non-integer):
/// `(1/d^t) Σ_{σ,τ} Wg(στ⁻¹, dk) k^{Cl(τ)} Π δ(a_n, b_{σ(n)}) δ(i_n, j_{τ(n)})`.
pub fn average_choi(d: usize, k: f64, t: usize) -> Result<ChoiState> {
    check_copies(t)?;
    if !(k >= 1.0) {
        return Err(Error::Domain(format!("environment dimension must be >= 1, got {k}")));
    }
    let big_d = d as f64 * k;
    if big_d < t as f64 {
        return Err(Error::Domain(format!("dk = {big_d} is below t = {t}")));
    }
    let table = weingarten_table(t, big_d)?;
    let prefactor = (d as f64).powi(-(t as i32));
    let matrix = assemble_permutation_sum(d, t, |sigma, tau| {
        prefactor
            * table.value(&sigma.compose(&tau.inverse()))
            * k.powi(cycle_count(tau) as i32)
    })?;
    Ok(ChoiState {
        dim: d,
        copies: t,
        matrix,
    })
}

/// Haar average of σ_{Ξ^{⊗t}} for unistochastic channels Ξ_U, U ∈ U(d²):
/// `(1/d^{2t}) Σ_{σ,τ} Wg(στ⁻¹, d²) d^{Cl(σ)+Cl(τ)} Π δ δ`.
pub fn average_choi_unistochastic(d: usize, t: usize) -> Result<ChoiState> {
    check_copies(t)?;
    let big_d = (d * d) as f64;
    if big_d < t as f64 {
        return Err(Error::Domain(format!("d² = {big_d} is below t = {t}")));
    }
    let table = weingarten_table(t, big_d)?;
    let df = d as f64;
    let prefactor = df.powi(-2 * t as i32);
    let matrix = assemble_permutation_sum(d, t, |sigma, tau| {
        prefactor
            * table.value(&sigma.compose(&tau.inverse()))
            * df.powi((cycle_count(sigma) + cycle_count(tau)) as i32)
    })?;
    Ok(ChoiState {
        dim: d,
        copies: t,
        matrix,
    })
}

/// Channels with real weights; negative weights are allowed for
/// analytically continued models and reported by `has_negative_weights`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ChannelSetJson")]
pub struct WeightedChannelSet {
    dim: usize,
    channels: Vec<QuantumChannel>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct ChannelSetJson {
    dim: usize,
    channels: Vec<QuantumChannel>,
    weights: Vec<f64>,
}

impl TryFrom<ChannelSetJson> for WeightedChannelSet {
    type Error = Error;
    fn try_from(raw: ChannelSetJson) -> Result<Self> {
        Self::new(raw.dim, raw.channels, raw.weights)
    }
}

impl WeightedChannelSet {
    pub fn new(dim: usize, channels: Vec<QuantumChannel>, weights: Vec<f64>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Empty("channel set has no channels".into()));
        }
        if channels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: channels.len(),
                got: weights.len(),
            });
        }
        if let Some(c) = channels.iter().find(|c| c.dim != dim) {
            return Err(Error::DimensionMismatch(format!(
                "channel of dimension {} in a set of dimension {dim}",
                c.dim
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) || weights.iter().map(|w| w.abs()).sum::<f64>() <= 0.0 {
            return Err(Error::Domain("weights must be finite and not all zero".into()));
        }
        Ok(Self {
            dim,
            channels,
            weights,
        })
    }

    pub fn uniform(dim: usize, channels: Vec<QuantumChannel>) -> Result<Self> {
        let n = channels.len();
        Self::new(dim, channels, vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[QuantumChannel] {
        &self.channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_negative_weights(&self) -> bool {
        self.weights.iter().any(|&w| w < 0.0)
    }

    /// Drops channels whose weight is exactly zero.
    pub fn without_zero_weights(&self) -> Self {
        let (channels, weights) = self
            .channels
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w != 0.0)
            .map(|(c, &w)| (c.clone(), w))
            .unzip();
        Self {
            dim: self.dim,
            channels,
            weights,
        }
    }

    /// Σ w_i σ_{Φ_i^{⊗t}} / Σ w_i.
    pub fn mean_choi(&self, t: usize) -> Result<ComplexMatrix> {
        let total = self.total_weight();
        if total.abs() < 1e-300 {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        let side = self.dim.pow(2 * t as u32);
        let mut acc = ComplexMatrix::zeros(side, side);
        for (c, &w) in self.channels.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            acc.add_scaled(choi_tcopy(c, t)?.matrix(), C64::new(w / total, 0.0));
        }
        Ok(acc)
    }
}

/// ‖Σ w_i σ_{Φ_i^{⊗t}} / Σ w_i − ⟨σ_{Φ^{⊗t}}⟩_{U(dk)}‖_HS; zero iff the set is a channel [t,k]-design.
pub fn design_distance(set: &WeightedChannelSet, d: usize, k: f64, t: usize) -> Result<f64> {
    if set.dim != d {
        return Err(Error::DimensionMismatch(format!(
            "set acts on d = {}, asked for d = {d}",
            set.dim
        )));
    }
    let target = average_choi(d, k, t)?;
    Ok(set.mean_choi(t)?.distance(&target.matrix))
}

/// Distance of the weighted t-copy mean from the unistochastic Haar average.
pub fn unistochastic_design_distance(set: &WeightedChannelSet, t: usize) -> Result<f64> {
    let target = average_choi_unistochastic(set.dim, t)?;
    Ok(set.mean_choi(t)?.distance(&target.matrix))
}

/// Φ(ρ) = Tr_E[U(ρ ⊗ |e⟩⟨e|)U†] with the system on the left factor of U.
pub fn channel_from_stinespring(u: &ComplexMatrix, d: usize, k: usize, env_index: usize) -> Result<QuantumChannel> {
    if u.rows() != d * k || u.cols() != d * k {
        return Err(Error::DimensionMismatch(format!(
            "dilation must be {0}x{0}, got {1}x{2}",
            d * k,
            u.rows(),
            u.cols()
        )));
    }
    if env_index >= k {
        return Err(Error::DimensionMismatch(format!(
            "environment index {env_index} out of range for k = {k}"
        )));
    }
    let defect = u.unitarity_defect();
    if defect > DEFAULT_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let kraus = (0..k)
        .map(|l| ComplexMatrix::from_fn(d, d, |i, a| u[(i * k + l, a * k + env_index)]))
        .collect();
    QuantumChannel::new(kraus)
}

/// Ξ_U(ρ) = Tr_E[U(ρ ⊗ I/d)U†] for U acting on d² = d·d.
pub fn unistochastic_channel(u: &ComplexMatrix, d: usize) -> Result<QuantumChannel> {
    if u.rows() != d * d || u.cols() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "unistochastic dilation must be {0}x{0}",
            d * d
        )));
    }
    let defect = u.unitarity_defect();
    if defect > DEFAULT_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let s = 1.0 / (d as f64).sqrt();
    let mut kraus = Vec::with_capacity(d * d);
    for l in 0..d {
        for o in 0..d {
            kraus.push(ComplexMatrix::from_fn(d, d, |i, a| u[(i * d + l, a * d + o)] * s));
        }
    }
    QuantumChannel::new(kraus)
}

/// Distinct channels of a pushforward together with their multiplicities.
#[derive(Clone, Debug)]
pub struct InducedChannels {
    pub channels: Vec<QuantumChannel>,
    pub chois: Vec<ChoiState>,
    pub multiplicities: Vec<usize>,
}

impl InducedChannels {
    fn collect(channels: impl IntoIterator<Item = Result<QuantumChannel>>) -> Result<Self> {
        let mut out = Self {
            channels: Vec::new(),
            chois: Vec::new(),
            multiplicities: Vec::new(),
        };
        for channel in channels {
            let channel = channel?;
            let choi = choi_of_channel(&channel);
            match out
                .chois
                .iter()
                .position(|c| c.distance(&choi) <= CHANNEL_DEDUP_TOL)
            {
                Some(i) => out.multiplicities[i] += 1,
                None => {
                    out.channels.push(channel);
                    out.chois.push(choi);
                    out.multiplicities.push(1);
                }
            }
        }
        Ok(out)
    }

    /// Weights proportional to multiplicity, divided by the smallest multiplicity.
    pub fn weighted_set(&self) -> Result<WeightedChannelSet> {
        let min = *self.multiplicities.iter().min().expect("non-empty") as f64;
        let weights = self.multiplicities.iter().map(|&m| m as f64 / min).collect();
        WeightedChannelSet::new(self.channels[0].dim, self.channels.clone(), weights)
    }

    /// (multiplicity, number of channels with it), ascending.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut hist = std::collections::BTreeMap::new();
        for &m in &self.multiplicities {
            *hist.entry(m).or_insert(0) += 1;
        }
        hist.into_iter().collect()
    }
}

/// Partial-trace pushforward of the two-qubit Clifford group onto one qubit
/// with the second qubit as a pure environment.
pub fn clifford_induced_channels() -> Result<InducedChannels> {
    let c2 = clifford_group(2)?;
    InducedChannels::collect(
        c2.elements()
            .iter()
            .map(|u| channel_from_stinespring(u, 2, 2, 0)),
    )
}

/// Unistochastic pushforward of the two-qubit Clifford group.
pub fn clifford_induced_unistochastic() -> Result<InducedChannels> {
    let c2 = clifford_group(2)?;
    InducedChannels::collect(c2.elements().iter().map(|u| unistochastic_channel(u, 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankTwoKind {
    /// Maps every input onto one fixed pure state.
    Contraction,
    /// Equal mixture of two Clifford unitaries.
    MixedUnitary,
}

/// The 24 distinct Kraus-rank-2 qubit channels of the Clifford pushforward.
#[derive(Clone, Debug)]
pub struct RankTwoFamily {
    pub channels: Vec<QuantumChannel>,
    pub kinds: Vec<RankTwoKind>,
}

impl RankTwoFamily {
    pub fn set(&self) -> WeightedChannelSet {
        WeightedChannelSet::uniform(2, self.channels.clone()).expect("non-empty family")
    }

    pub fn of_kind(&self, kind: RankTwoKind) -> Vec<QuantumChannel> {
        self.channels
            .iter()
            .zip(&self.kinds)
            .filter(|(_, &k)| k == kind)
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// The contraction onto |0⟩⟨0|.
    pub fn ground_state_contraction(&self) -> QuantumChannel {
        let ground = ComplexMatrix::ket(2, 0).projector();
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        self.of_kind(RankTwoKind::Contraction)
            .into_iter()
            .find(|c| c.apply(&half).max_abs_diff(&ground) < 1e-10)
            .expect("family contains the ground-state contraction")
    }
}

/// Choi states ½Σ_i |ψ_i⟩⟨ψ_i| with |ψ_i⟩ = (A⊗B)·CNOT₂→₁^c·(X^j⊗I)|0 i⟩,
/// j, c ∈ {0,1}, A, B ∈ {I, H, SH}, deduplicated.
pub fn r2_channels() -> Result<RankTwoFamily> {
    let id = ComplexMatrix::identity(2);
    let locals = [id.clone(), hadamard(), phase_s().matmul(&hadamard())];
    let mut chois: Vec<ChoiState> = Vec::new();
    let mut channels = Vec::new();
    let mut kinds = Vec::new();
    let half = ComplexMatrix::identity(2).scale_real(0.5);
    for c in 0..2 {
        for j in 0..2 {
            for a in &locals {
                for b in &locals {
                    let mut prep = kron(&pauli_x_pow(j), &id);
                    if c == 1 {
                        prep = cnot_21().matmul(&prep);
                    }
                    let op = kron(a, b).matmul(&prep);
                    let mut m = ComplexMatrix::zeros(4, 4);
                    for i in 0..2 {
                        let psi = op.matmul(&ComplexMatrix::ket(4, i));
                        m.add_scaled(&psi.projector(), C64::new(0.5, 0.0));
                    }
                    let choi = ChoiState::new(2, 1, m)?;
                    if chois.iter().any(|x| x.distance(&choi) <= CHANNEL_DEDUP_TOL) {
                        continue;
                    }
                    let channel = QuantumChannel::from_choi(&choi)?;
                    let image = channel.apply(&half);
                    kinds.push(if (image.purity() - 1.0).abs() < 1e-10 {
                        RankTwoKind::Contraction
                    } else {
                        RankTwoKind::MixedUnitary
                    });
                    chois.push(choi);
                    channels.push(channel);
                }
            }
        }
    }
    Ok(RankTwoFamily { channels, kinds })
}

fn pauli_x_pow(j: usize) -> ComplexMatrix {
    if j == 0 {
        ComplexMatrix::identity(2)
    } else {
        pauli_x()
    }
}

/// Unitary channels of the single-qubit Clifford group.
pub fn clifford_unitary_channels() -> Result<Vec<QuantumChannel>> {
    clifford_group(1)?
        .elements()
        .iter()
        .map(QuantumChannel::unitary)
        .collect()
}

/// Weights (a, b, c) = (1, 4(k−1), 32(k²−3k+2)) of the qubit channel design.
pub fn qubit_design_weights(k: f64) -> (f64, f64, f64) {
    (1.0, 4.0 * (k - 1.0), 32.0 * (k * k - 3.0 * k + 2.0))
}

/// 49 channels: the 24 Clifford unitaries (weight 1), the 24 rank-2 channels
/// (weight 4(k−1)) and the maximally depolarizing channel (weight
/// 32(k²−3k+2), negative for 1 < k < 2). A channel [2,k]-design for k ≥ 1.
pub fn qubit_channel_design(k: f64) -> Result<WeightedChannelSet> {
    if !(k >= 1.0) {
        return Err(Error::Domain(format!("k must be >= 1, got {k}")));
    }
    let (a, b, c) = qubit_design_weights(k);
    let unitaries = clifford_unitary_channels()?;
    let rank_two = r2_channels()?;
    let mut weights = vec![a; unitaries.len()];
    weights.extend(std::iter::repeat_n(b, rank_two.channels.len()));
    weights.push(c);
    let mut channels = unitaries;
    channels.extend(rank_two.channels);
    channels.push(QuantumChannel::depolarizing(2));
    WeightedChannelSet::new(2, channels, weights)
}

/// 43 channels: Clifford unitaries (weight 1), the 18 mixed-unitary rank-2
/// channels (weight 12) and the maximally depolarizing channel (weight 240).
pub fn unistochastic_design_qubit() -> Result<WeightedChannelSet> {
    let unitaries = clifford_unitary_channels()?;
    let mixed = r2_channels()?.of_kind(RankTwoKind::MixedUnitary);
    let mut weights = vec![1.0; unitaries.len()];
    weights.extend(std::iter::repeat_n(12.0, mixed.len()));
    weights.push(240.0);
    let mut channels = unitaries;
    channels.extend(mixed);
    channels.push(QuantumChannel::depolarizing(2));
    WeightedChannelSet::new(2, channels, weights)
}

/// Tr_out σ, which equals I/d for trace-preserving maps.
pub fn input_marginal(choi: &ChoiState) -> Result<ComplexMatrix> {
    let d = choi.dim.pow(choi.copies as u32);
    partial_trace(&choi.matrix, &SubsystemShape::new(vec![d, d])?, &[1])
}
