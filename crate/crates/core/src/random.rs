//! Random-matrix ensembles and random channel constructions.
//!
//! All sampling goes through [`RngStream`], a ChaCha20 generator. A stream is
//! identified by `(seed, stream_index)`: the key is derived from the seed with
//! `SeedableRng::seed_from_u64` and the index selects the ChaCha stream, so
//! parallel workers with distinct indices never share output.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::channel::{channel_from_stinespring, ChoiState, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::inverse_sqrt;
use crate::tensor::{kron, partial_trace, ComplexMatrix, SubsystemShape, C64};

/// Reproducible random stream (ChaCha20).
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn algorithm(&self) -> &'static str {
        "chacha20"
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Entries (x + iy)/√2 with x, y independent standard normals, so E|G_ij|² = 1.
pub fn ginibre(rows: usize, cols: usize, rng: &mut RngStream) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re = rng.normal();
        let im = rng.normal();
        C64::new(re * s, im * s)
    })
}

/// H = (G + G†)/2.
pub fn gue(d: usize, rng: &mut RngStream) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    (&g + &g.dagger()).scale_real(0.5)
}

/// W = G G† with G a d×s Ginibre matrix.
pub fn wishart(d: usize, s: usize, rng: &mut RngStream) -> ComplexMatrix {
    let g = ginibre(d, s, rng);
    g.matmul(&g.dagger())
}

/// Haar-distributed unitary: Q factor of a Ginibre matrix with the
/// triangular factor's diagonal made real positive.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let mut cols: Vec<Vec<C64>> = (0..dim).map(|c| (0..dim).map(|r| g[(r, c)]).collect()).collect();
    // Modified Gram–Schmidt, run twice per column for stability. Dividing by
    // the (positive) norm is exactly the positive-diagonal convention.
    for c in 0..dim {
        for _ in 0..2 {
            for p in 0..c {
                let (done, rest) = cols.split_at_mut(c);
                let q = &done[p];
                let v = &mut rest[0];
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[c].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[c].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |r, c| cols[c][r])
}

/// Initial draw plus this many resamples before giving up on a singular H.
const MAX_RESAMPLES: usize = 3;
const SINGULAR_FLOOR: f64 = 1e-12;

fn with_resampling<T>(what: &str, mut draw: impl FnMut() -> Result<T>) -> Result<T> {
    let mut last = None;
    for _ in 0..=MAX_RESAMPLES {
        match draw() {
            Ok(v) => return Ok(v),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::Numeric(format!(
        "{what}: normalization stayed singular after {MAX_RESAMPLES} resamples ({})",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Construction 1: K_i = G_i H^{-1/2} with H = Σ G_i† G_i.
pub fn sample_kraus_channel(d: usize, s: usize, rng: &mut RngStream) -> Result<QuantumChannel> {
    if s == 0 {
        return Err(Error::Domain("need at least one Kraus operator".into()));
    }
    with_resampling("Kraus construction", || {
        let gs: Vec<ComplexMatrix> = (0..s).map(|_| ginibre(d, d, rng)).collect();
        let mut h = ComplexMatrix::zeros(d, d);
        for g in &gs {
            h = &h + &g.dagger().matmul(g);
        }
        let h_inv = inverse_sqrt(&h, SINGULAR_FLOOR)?;
        QuantumChannel::new(gs.iter().map(|g| g.matmul(&h_inv)).collect())
    })
}

/// Construction 2: a Wishart Choi matrix W = GG† (G of size d²×s) rescaled as
/// (I ⊗ H^{-1/2}) W (I ⊗ H^{-1/2}) / d, where H is W traced over the output
/// factor. The result has unit trace and input marginal I/d.
pub fn sample_choi_channel(d: usize, s: usize, rng: &mut RngStream) -> Result<ChoiState> {
    if s == 0 {
        return Err(Error::Domain("Wishart rank must be positive".into()));
    }
    let shape = SubsystemShape::uniform(d, 2);
    with_resampling("Choi construction", || {
        let w = wishart(d * d, s, rng);
        let h = partial_trace(&w, &shape, &[1])?;
        let lift = kron(&ComplexMatrix::identity(d), &inverse_sqrt(&h, SINGULAR_FLOOR)?);
        let sigma = lift.matmul(&w).matmul(&lift).scale_real(1.0 / d as f64);
        let sym = (&sigma + &sigma.dagger()).scale_real(0.5);
        ChoiState::new(d, 1, sym)
    })
}

/// Construction 3: Φ(ρ) = Tr_E[U(ρ ⊗ |0⟩⟨0|)U†] for Haar U on d·M.
pub fn sample_stinespring_channel(d: usize, m: usize, rng: &mut RngStream) -> Result<QuantumChannel> {
    if m == 0 {
        return Err(Error::Domain("environment dimension must be positive".into()));
    }
    channel_from_stinespring(&haar_unitary(d * m, rng), d, m, 0)
}
