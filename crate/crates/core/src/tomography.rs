//! Ancilla-free two-qubit process tomography with the five-basis MUB scheme.
//!
//! Preparation (b, i) is U_b|i⟩ and measurement basis j reads outcomes in the
//! columns of U_j, so the 20 preparations and the 20 measurement projectors
//! are the same complete set of mutually unbiased bases.

use std::io::{Read, Write};

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::channel::{ChoiState, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, pseudo_inverse};
use crate::projective::{bases_to_state_set, mub_family, mub_unitaries_d4, state_reconstruct, WeightedStateSet};
use crate::random::RngStream;
use crate::tensor::{ComplexMatrix, C64};

pub const TOMO_DIM: usize = 4;
pub const BASES: usize = 5;
/// Preparations (and measurement projectors): 5 bases × 4 states.
pub const STATES: usize = BASES * TOMO_DIM;

/// U_0 = I, U_1 = H⊗H, U_2 = (S⊗S)U_1, U_3 = CNOT₁→₂CNOT₂→₁U_2, U_4 = CNOT₂→₁CNOT₁→₂U_2.
pub fn mub_prep_unitaries() -> [ComplexMatrix; 5] {
    mub_unitaries_d4()
}

fn mub_states() -> WeightedStateSet {
    bases_to_state_set(TOMO_DIM, &mub_family(TOMO_DIM).expect("d = 4 is supported"))
        .expect("MUB vectors are normalized")
}

/// The 20 ideal input projectors, ordered by (basis, index).
pub fn ideal_prep_states() -> Vec<ComplexMatrix> {
    mub_states().states().iter().map(ComplexMatrix::projector).collect()
}

/// One row of the counts CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub delay_us: f64,
    pub prep_basis: usize,
    pub prep_index: usize,
    pub meas_basis: usize,
    pub outcome: usize,
    pub count: u64,
}

impl CountsRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if !self.delay_us.is_finite() {
            return Err(format!("delay {} is not finite", self.delay_us));
        }
        if self.prep_basis >= BASES || self.meas_basis >= BASES {
            return Err(format!(
                "basis indices must be below {BASES}, got prep {} meas {}",
                self.prep_basis, self.meas_basis
            ));
        }
        if self.prep_index >= TOMO_DIM || self.outcome >= TOMO_DIM {
            return Err(format!(
                "state indices must be below {TOMO_DIM}, got prep {} outcome {}",
                self.prep_index, self.outcome
            ));
        }
        Ok(())
    }

    fn circuit(&self) -> usize {
        (self.prep_basis * TOMO_DIM + self.prep_index) * BASES + self.meas_basis
    }
}

/// Counts for one or more delays, one record per (circuit, outcome).
#[derive(Clone, Debug, Default)]
pub struct TomographyDataset {
    records: Vec<CountsRecord>,
}

impl TomographyDataset {
    pub fn new(records: Vec<CountsRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.check().map_err(|message| Error::Domain(format!("record {i}: {message}")))?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[CountsRecord] {
        &self.records
    }

    pub fn extend(&mut self, other: TomographyDataset) {
        self.records.extend(other.records);
    }

    /// Distinct delays in ascending order.
    pub fn delays(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.records.iter().map(|r| r.delay_us).collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }

    /// Outcome frequencies at one delay. Every circuit needs at least one
    /// record; absent outcome rows count as zero. All circuits must have
    /// the same number of shots.
    pub fn grid(&self, delay: f64) -> Result<ProbabilityGrid> {
        let mut counts = vec![[0u64; TOMO_DIM]; STATES * BASES];
        let mut present = vec![false; STATES * BASES];
        for r in self.records.iter().filter(|r| r.delay_us == delay) {
            counts[r.circuit()][r.outcome] += r.count;
            present[r.circuit()] = true;
        }
        let missing: Vec<String> = present
            .iter()
            .enumerate()
            .filter(|(_, &p)| !p)
            .map(|(c, _)| {
                let (prep, meas) = (c / BASES, c % BASES);
                format!(
                    "(delay {delay}, prep_basis {}, prep_index {}, meas_basis {meas})",
                    prep / TOMO_DIM,
                    prep % TOMO_DIM
                )
            })
            .collect();
        if !missing.is_empty() {
            return Err(Error::Incomplete(missing.join(", ")));
        }
        let shots: u64 = counts[0].iter().sum();
        if shots == 0 {
            return Err(Error::Domain(format!("circuits at delay {delay} have no shots")));
        }
        if let Some(c) = counts.iter().position(|c| c.iter().sum::<u64>() != shots) {
            return Err(Error::Domain(format!(
                "circuit {c} at delay {delay} has {} shots, expected {shots}",
                counts[c].iter().sum::<u64>()
            )));
        }
        let probs = counts
            .iter()
            .map(|c| c.map(|n| n as f64 / shots as f64))
            .collect();
        Ok(ProbabilityGrid { probs })
    }

    /// Parses the counts CSV (header delay_us,prep_basis,prep_index,meas_basis,outcome,count).
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| csv_error(&e, 1))?
            .clone();
        let expected = ["delay_us", "prep_basis", "prep_index", "meas_basis", "outcome", "count"];
        if headers.iter().ne(expected) {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header {}, got {}", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut records = Vec::new();
        for row in rdr.deserialize::<CountsRecord>() {
            let record = row.map_err(|e| csv_error(&e, 0))?;
            records.push(record);
        }
        for (i, r) in records.iter().enumerate() {
            r.check().map_err(|message| Error::Csv {
                line: i as u64 + 2,
                message,
            })?;
        }
        Ok(Self { records })
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r).map_err(|e| csv_error(&e, 0))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Csv { line, message }
}

/// Outcome probabilities for the 100 circuits, indexed by
/// (prep_basis·4 + prep_index)·5 + meas_basis.
#[derive(Clone, Debug)]
pub struct ProbabilityGrid {
    probs: Vec<[f64; TOMO_DIM]>,
}

impl ProbabilityGrid {
    /// Infinite-shot probabilities of `channel` on every circuit.
    pub fn exact(channel: &QuantumChannel) -> Result<Self> {
        if channel.dim() != TOMO_DIM {
            return Err(Error::DimensionMismatch(format!(
                "tomography is for d = {TOMO_DIM}, got d = {}",
                channel.dim()
            )));
        }
        let inputs = ideal_prep_states();
        let measured = mub_states();
        let mut probs = Vec::with_capacity(STATES * BASES);
        for rho in &inputs {
            let out = channel.apply(rho);
            for j in 0..BASES {
                probs.push(std::array::from_fn(|o| {
                    let phi = &measured.states()[j * TOMO_DIM + o];
                    phi.inner(&out.matmul(phi)).re
                }));
            }
        }
        Ok(Self { probs })
    }

    pub fn probabilities(&self, prep: usize, meas_basis: usize) -> &[f64; TOMO_DIM] {
        &self.probs[prep * BASES + meas_basis]
    }
}

/// Linear-inversion estimates of the 20 output states. With `psd_project`
/// negative eigenvalues are clipped and the trace restored; by default the
/// raw (possibly non-positive) estimates are returned.
pub fn reconstruct_states(grid: &ProbabilityGrid, psd_project: bool) -> Result<Vec<ComplexMatrix>> {
    let set = mub_states();
    (0..STATES)
        .map(|prep| {
            let probs: Vec<f64> = (0..BASES)
                .flat_map(|j| grid.probabilities(prep, j).iter().copied())
                .collect();
            let rho = state_reconstruct(&set, &probs)?;
            Ok(if psd_project { project_psd(&rho) } else { rho })
        })
        .collect()
}

fn project_psd(rho: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(rho);
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let n = rho.rows();
    let scaled = ComplexMatrix::from_fn(n, n, |r, c| vectors[(r, c)] * (clipped[c] / total));
    scaled.matmul(&vectors.dagger())
}

/// Choi state of the linear map sending each `inputs[n]` to `outputs[n]`:
/// row ab of A⁺B is the row-wise vectorization of N(|a⟩⟨b|).
pub fn reconstruct_channel(inputs: &[ComplexMatrix], outputs: &[ComplexMatrix]) -> Result<ChoiState> {
    if inputs.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            expected: inputs.len(),
            got: outputs.len(),
        });
    }
    let first = inputs
        .first()
        .ok_or_else(|| Error::Empty("no input states".into()))?;
    let d = first.rows();
    let n = inputs.len();
    let vec_rows = |states: &[ComplexMatrix]| -> Result<ComplexMatrix> {
        let mut data = Vec::with_capacity(n * d * d);
        for s in states {
            if s.rows() != d || s.cols() != d {
                return Err(Error::DimensionMismatch(format!("all states must be {d}x{d}")));
            }
            data.extend_from_slice(s.data());
        }
        ComplexMatrix::new(n, d * d, data)
    };
    let a = vec_rows(inputs)?;
    let b = vec_rows(outputs)?;
    let (pinv, rank) = pseudo_inverse(&a, 1e-10)?;
    if rank < d * d {
        return Err(Error::RankDeficient {
            rank,
            required: d * d,
        });
    }
    let images = pinv.matmul(&b);
    // σ[(i,a),(j,b)] = N(|a⟩⟨b|)[i,j] / d.
    let side = d * d;
    let mut sigma = ComplexMatrix::from_fn(side, side, |r, c| {
        let (i, a) = (r / d, r % d);
        let (j, bb) = (c / d, c % d);
        images[(a * d + bb, i * d + j)] / d as f64
    });
    sigma = (&sigma + &sigma.dagger()).scale_real(0.5);
    let tr = sigma.trace().re;
    if !(tr.abs() > 1e-12) {
        return Err(Error::Numeric("reconstructed map has zero trace".into()));
    }
    ChoiState::new(d, 1, sigma.scale(C64::new(1.0 / tr, 0.0)))
}

/// Full pipeline for one delay: frequencies → states → Choi state.
pub fn reconstruct_choi(grid: &ProbabilityGrid) -> Result<ChoiState> {
    let outputs = reconstruct_states(grid, false)?;
    reconstruct_channel(&ideal_prep_states(), &outputs)
}

/// Multinomial counts for all 100 circuits of `channel` at one delay.
pub fn simulate_counts(channel: &QuantumChannel, shots: u64, delay_us: f64, rng: &mut RngStream) -> Result<TomographyDataset> {
    if shots == 0 {
        return Err(Error::Domain("shots must be positive".into()));
    }
    let exact = ProbabilityGrid::exact(channel)?;
    let mut records = Vec::with_capacity(STATES * BASES * TOMO_DIM);
    for prep in 0..STATES {
        for meas in 0..BASES {
            let p = exact.probabilities(prep, meas).map(|x| x.max(0.0));
            let mut left = shots;
            let mut mass: f64 = p.iter().sum();
            for (o, &po) in p.iter().enumerate() {
                let count = if o + 1 == TOMO_DIM {
                    left
                } else if left == 0 || mass <= 0.0 {
                    0
                } else {
                    let q = (po / mass).clamp(0.0, 1.0);
                    Binomial::new(left, q)
                        .map_err(|e| Error::Numeric(e.to_string()))?
                        .sample(rng)
                };
                left -= count;
                mass -= po;
                records.push(CountsRecord {
                    delay_us,
                    prep_basis: prep / TOMO_DIM,
                    prep_index: prep % TOMO_DIM,
                    meas_basis: meas,
                    outcome: o,
                    count,
                });
            }
        }
    }
    Ok(TomographyDataset { records })
}
