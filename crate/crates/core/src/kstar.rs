//! Effective environment dimension k*: the k whose analytic two-copy channel
//! average is closest (Hilbert–Schmidt) to a measured two-copy Choi state.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channel::{
    average_choi, choi_tcopy, clifford_unitary_channels, qubit_design_weights, r2_channels, ChoiState,
    QuantumChannel,
};
use crate::error::{Error, Result};
use crate::tensor::{permute_subsystems, ComplexMatrix, SubsystemShape, DEFAULT_TOL};

pub const K_MAX: f64 = 64.0;
pub const W_MAX: f64 = 1000.0;
const GRID_POINTS: usize = 64;

/// Summed two-copy Choi matrices of the qubit design's building blocks.
struct Components {
    unitaries: ComplexMatrix,
    rank_two: ComplexMatrix,
    emission: ComplexMatrix,
    depolarizing: ComplexMatrix,
    n_unitaries: f64,
    n_rank_two: f64,
}

fn components() -> &'static Components {
    static CACHE: OnceLock<Components> = OnceLock::new();
    CACHE.get_or_init(|| {
        let sum = |chs: &[QuantumChannel]| {
            chs.iter().fold(ComplexMatrix::zeros(16, 16), |acc, c| {
                &acc + choi_tcopy(c, 2).expect("t = 2 is supported").matrix()
            })
        };
        let unitaries = clifford_unitary_channels().expect("C1 enumerates");
        let family = r2_channels().expect("rank-two family builds");
        Components {
            unitaries: sum(&unitaries),
            rank_two: sum(&family.channels),
            emission: choi_tcopy(&family.ground_state_contraction(), 2)
                .expect("t = 2 is supported")
                .into_matrix(),
            depolarizing: ComplexMatrix::identity(16).scale_real(1.0 / 16.0),
            n_unitaries: unitaries.len() as f64,
            n_rank_two: family.channels.len() as f64,
        }
    })
}

/// The qubit channel-design average with extra weight `w` on the contraction
/// to |0⟩, renormalized. Valid for any k ≥ 1, w ≥ 0.
fn emission_matrix(k: f64, w: f64) -> ComplexMatrix {
    let c = components();
    let (a, b, dep) = qubit_design_weights(k);
    let mut m = c.unitaries.scale_real(a);
    m = &m + &c.rank_two.scale_real(b);
    m = &m + &c.emission.scale_real(w);
    m = &m + &c.depolarizing.scale_real(dep);
    let total = a * c.n_unitaries + b * c.n_rank_two + w + dep;
    m.scale_real(1.0 / total)
}

/// average_choi(2, k, 2).
pub fn model_choi_uniform(k: f64) -> Result<ChoiState> {
    average_choi(2, k, 2)
}

pub fn model_choi_emission(k: f64, w: f64) -> Result<ChoiState> {
    check_params(k, w)?;
    ChoiState::new(2, 2, emission_matrix(k, w))
}

fn check_params(k: f64, w: f64) -> Result<()> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Domain(format!("k must be >= 1, got {k}")));
    }
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::Domain(format!("w must be >= 0, got {w}")));
    }
    Ok(())
}

/// The two-qubit channel Σ p_i Φ_i ⊗ Φ_i whose Choi state is the emission
/// model. Requires non-negative weights, i.e. k = 1 or k ≥ 2.
pub fn emission_pair_channel(k: f64, w: f64) -> Result<QuantumChannel> {
    check_params(k, w)?;
    let (a, b, dep) = qubit_design_weights(k);
    if b < 0.0 || dep < -1e-12 {
        return Err(Error::Domain(format!(
            "k = {k} gives negative mixture weights; no physical pair channel exists"
        )));
    }
    let family = r2_channels()?;
    let mut parts: Vec<(f64, QuantumChannel)> = clifford_unitary_channels()?.into_iter().map(|c| (a, c)).collect();
    parts.extend(family.channels.iter().cloned().map(|c| (b, c)));
    parts.push((w, family.ground_state_contraction()));
    parts.push((dep.max(0.0), QuantumChannel::depolarizing(2)));
    let total: f64 = parts.iter().map(|(p, _)| p).sum();
    let mut kraus = Vec::new();
    for (p, ch) in parts.iter().filter(|(p, _)| *p > 0.0) {
        let pair = ch.tensor(ch);
        let s = (p / total).sqrt();
        kraus.extend(pair.kraus().iter().map(|k| k.scale_real(s)));
    }
    QuantumChannel::new(kraus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Uniform,
    Emission,
}

impl std::fmt::Display for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitModel::Uniform => "uniform",
            FitModel::Emission => "emission",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KStarFit {
    pub k_star: f64,
    pub epsilon_star: f64,
    /// Extra emission weight; zero for the uniform model.
    pub w: f64,
    pub model: FitModel,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizer of a unimodal `f` on [lo, hi], endpoints included.
fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // The interior estimate competes with the bracket ends so boundary optima survive.
    [lo, hi, mid]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .expect("three candidates")
}

const REFINE_TOL: f64 = 1e-10;

fn check_measured(sigma: &ChoiState) -> Result<()> {
    if sigma.dim() != 2 || sigma.copies() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "k* fits need a d = 2, t = 2 Choi state, got d = {}, t = {}",
            sigma.dim(),
            sigma.copies()
        )));
    }
    let h = sigma.matrix().hermiticity_defect();
    if h > DEFAULT_TOL {
        return Err(Error::NotHermitian(h));
    }
    Ok(())
}

/// Hilbert–Schmidt distance between `sigma` and the model at (k, w).
pub fn objective(sigma: &ChoiState, model: FitModel, k: f64, w: f64) -> f64 {
    let m = match model {
        FitModel::Uniform => emission_matrix(k, 0.0),
        FitModel::Emission => emission_matrix(k, w),
    };
    sigma.matrix().distance(&m)
}

/// Grid search followed by golden-section (uniform) or coordinate
/// golden-section plus a Gauss–Newton polish (emission). Deterministic.
pub fn fit_kstar(sigma: &ChoiState, model: FitModel) -> Result<KStarFit> {
    check_measured(sigma)?;
    let (k, w) = match model {
        FitModel::Uniform => (fit_uniform(sigma), 0.0),
        FitModel::Emission => fit_emission(sigma),
    };
    Ok(KStarFit {
        k_star: k,
        epsilon_star: objective(sigma, model, k, w),
        w,
        model,
    })
}

fn bracket(grid: &[f64], best: usize) -> (f64, f64) {
    (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)])
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid")
}

fn fit_uniform(sigma: &ChoiState) -> f64 {
    let f = |k: f64| objective(sigma, FitModel::Uniform, k, 0.0);
    let grid = log_grid(1.0, K_MAX, GRID_POINTS);
    let best = argmin(grid.iter().map(|&k| f(k)));
    let (lo, hi) = bracket(&grid, best);
    golden_section(f, lo, hi, REFINE_TOL)
}

fn w_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(1e-3, W_MAX, GRID_POINTS - 1));
    g
}

fn fit_emission(sigma: &ChoiState) -> (f64, f64) {
    let f = |k: f64, w: f64| objective(sigma, FitModel::Emission, k, w);
    let kg = log_grid(1.0, K_MAX, GRID_POINTS);
    let wg = w_grid();
    let best = argmin(
        kg.iter()
            .flat_map(|&k| wg.iter().map(move |&w| (k, w)))
            .map(|(k, w)| f(k, w)),
    );
    let (ki, wi) = (best / wg.len(), best % wg.len());
    let (klo, khi) = bracket(&kg, ki);
    let (wlo, whi) = bracket(&wg, wi);
    let (mut k, mut w) = (kg[ki], wg[wi]);
    for _ in 0..100 {
        let (k_old, w_old) = (k, w);
        k = golden_section(|x| f(x, w), klo, khi, REFINE_TOL);
        w = golden_section(|y| f(k, y), wlo, whi, REFINE_TOL);
        if (k - k_old).abs() < REFINE_TOL && (w - w_old).abs() < REFINE_TOL {
            break;
        }
    }
    gauss_newton_polish(sigma, k, w)
}

/// Residual vector (real and imaginary parts) of σ − model(k, w).
fn residuals(sigma: &ChoiState, k: f64, w: f64) -> Vec<f64> {
    let m = emission_matrix(k, w);
    sigma
        .matrix()
        .data()
        .iter()
        .zip(m.data())
        .flat_map(|(a, b)| {
            let d = a - b;
            [d.re, d.im]
        })
        .collect()
}

/// Bounded Gauss–Newton steps from (k, w); a step is kept only if it lowers
/// the objective, so the result is never worse than the input.
fn gauss_newton_polish(sigma: &ChoiState, mut k: f64, mut w: f64) -> (f64, f64) {
    let sq = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut r = residuals(sigma, k, w);
    let mut cost = sq(&r);
    for _ in 0..50 {
        let hk = 1e-6 * k.max(1.0);
        let hw = 1e-6 * w.max(1.0);
        let kp = (k + hk, k - hk);
        let wp = (w + hw, (w - hw).max(0.0));
        let jk: Vec<f64> = residuals(sigma, kp.0, w)
            .iter()
            .zip(residuals(sigma, kp.1.max(1.0), w))
            .map(|(a, b)| (a - b) / (kp.0 - kp.1.max(1.0)))
            .collect();
        let jw: Vec<f64> = residuals(sigma, k, wp.0)
            .iter()
            .zip(residuals(sigma, k, wp.1))
            .map(|(a, b)| (a - b) / (wp.0 - wp.1))
            .collect();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let (a11, a12, a22) = (dot(&jk, &jk), dot(&jk, &jw), dot(&jw, &jw));
        let (g1, g2) = (dot(&jk, &r), dot(&jw, &r));
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 1e-300) {
            break;
        }
        // Solve (JᵀJ)δ = −Jᵀr.
        let dk = -(a22 * g1 - a12 * g2) / det;
        let dw = -(a11 * g2 - a12 * g1) / det;
        let (nk, nw) = ((k + dk).clamp(1.0, K_MAX), (w + dw).clamp(0.0, W_MAX));
        let nr = residuals(sigma, nk, nw);
        let ncost = sq(&nr);
        if !(ncost < cost) {
            break;
        }
        let done = (nk - k).abs() < 1e-13 && (nw - w).abs() < 1e-13;
        (k, w, r, cost) = (nk, nw, nr, ncost);
        if done {
            break;
        }
    }
    (k, w)
}

/// Reads a two-qubit (d = 4, t = 1) Choi state as a single-qubit two-copy
/// state, identifying qubit n with copy n. Both layouts order factors as
/// (out₁ out₂)(in₁ in₂), so the subsystem permutation is the identity; the
/// map is its own inverse.
pub fn pair_choi_from_twoqubit(sigma: &ChoiState) -> Result<ChoiState> {
    let (dim, copies) = (sigma.dim(), sigma.copies());
    let target = match (dim, copies) {
        (4, 1) => (2, 2),
        (2, 2) => (4, 1),
        _ => {
            return Err(Error::DimensionMismatch(format!(
                "expected a d = 4 single-copy or d = 2 two-copy Choi state, got d = {dim}, t = {copies}"
            )))
        }
    };
    let shape = SubsystemShape::uniform(2, 4);
    let m = permute_subsystems(sigma.matrix(), &shape, &[0, 1, 2, 3])?;
    ChoiState::new(target.0, target.1, m)
}
