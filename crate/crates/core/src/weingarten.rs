//! Symmetric-group enumeration and Weingarten function tables.
//!
//! Tables are obtained by solving the Gram system
//! `Σ_ρ Wg(ρ, D) · D^{Cl(ρ⁻¹σ)} = δ_{σ,id}` over the full group algebra and
//! collapsing the solution onto cycle types.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::linalg::solve_real;

/// Largest number of copies for which the symmetric group is enumerated.
pub const MAX_COPIES: usize = 6;

/// A bijection on {0, …, t−1}; `self.image(n)` is σ(n).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() || seen[m] {
                return Err(Error::InvalidPermutation(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Self(mapping))
    }

    pub fn identity(t: usize) -> Self {
        Self((0..t).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn image(&self, n: usize) -> usize {
        self.0[n]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m] = i;
        }
        Self(inv)
    }

    /// (self ∘ other)(n) = self(other(n)).
    pub fn compose(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(other.0.iter().map(|&m| self.0[m]).collect())
    }

    /// Cycle lengths in non-increasing order.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut visited = vec![false; self.0.len()];
        let mut lengths = Vec::new();
        for start in 0..self.0.len() {
            if visited[start] {
                continue;
            }
            let mut len = 0;
            let mut n = start;
            while !visited[n] {
                visited[n] = true;
                n = self.0[n];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.0)
    }
}

/// Number of disjoint cycles, fixed points included.
pub fn cycle_count(p: &Permutation) -> usize {
    p.cycle_type().len()
}

/// All t! permutations of S_t in lexicographic order (identity first).
pub fn enumerate_symmetric_group(t: usize) -> Result<Vec<Permutation>> {
    if t == 0 {
        return Err(Error::Domain("the symmetric group needs t >= 1".into()));
    }
    if t > MAX_COPIES {
        return Err(Error::Capacity(format!(
            "S_{t} has {} elements; enumeration is limited to t <= {MAX_COPIES}",
            factorial(t)
        )));
    }
    let mut out = Vec::with_capacity(factorial(t));
    let mut current = Vec::with_capacity(t);
    let mut used = vec![false; t];
    fn recurse(t: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        if current.len() == t {
            out.push(Permutation(current.clone()));
            return;
        }
        for m in 0..t {
            if !used[m] {
                used[m] = true;
                current.push(m);
                recurse(t, current, used, out);
                current.pop();
                used[m] = false;
            }
        }
    }
    recurse(t, &mut current, &mut used, &mut out);
    Ok(out)
}

pub(crate) fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Weingarten values Wg(·, D) on S_t keyed by cycle type.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    t: usize,
    dimension: f64,
    values: BTreeMap<Vec<usize>, f64>,
}

impl WeingartenTable {
    pub fn copies(&self) -> usize {
        self.t
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.values
    }

    pub fn value(&self, p: &Permutation) -> f64 {
        self.values[&p.cycle_type()]
    }

    /// `{ "[2, 1]": value, … }`, for debugging output.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|(k, &v)| (format!("{k:?}"), serde_json::json!(v)))
            .collect();
        serde_json::Value::Object(map)
    }

    /// max_σ |Σ_ρ Wg(ρ)·D^{Cl(ρ⁻¹σ)} − δ_{σ,id}|.
    pub fn gram_residual(&self) -> f64 {
        let group = enumerate_symmetric_group(self.t).expect("table exists only for valid t");
        group
            .iter()
            .map(|sigma| {
                let lhs: f64 = group
                    .iter()
                    .map(|rho| {
                        self.value(rho)
                            * self.dimension.powi(cycle_count(&rho.inverse().compose(sigma)) as i32)
                    })
                    .sum();
                let rhs = if sigma.is_identity() { 1.0 } else { 0.0 };
                (lhs - rhs).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the full (un-collapsed) Gram system; entry i belongs to `group[i]`.
pub(crate) fn solve_gram_system(group: &[Permutation], dimension: f64) -> Result<Vec<f64>> {
    let n = group.len();
    let mut gram = Vec::with_capacity(n * n);
    for sigma in group {
        for rho in group {
            gram.push(dimension.powi(cycle_count(&rho.inverse().compose(sigma)) as i32));
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[0] = 1.0;
    solve_real(gram, n, rhs)
}

fn build_table(t: usize, dimension: f64) -> Result<WeingartenTable> {
    let group = enumerate_symmetric_group(t)?;
    let solution = solve_gram_system(&group, dimension)?;
    let mut sums: BTreeMap<Vec<usize>, (f64, usize)> = BTreeMap::new();
    for (p, w) in group.iter().zip(solution) {
        let e = sums.entry(p.cycle_type()).or_insert((0.0, 0));
        e.0 += w;
        e.1 += 1;
    }
    let values = sums
        .into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect();
    Ok(WeingartenTable {
        t,
        dimension,
        values,
    })
}

type Cache = RwLock<HashMap<(usize, u64), Arc<WeingartenTable>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 4096;

/// Weingarten table for `t` copies at (possibly non-integer) dimension `D ≥ t`.
pub fn weingarten_table(t: usize, dimension: f64) -> Result<Arc<WeingartenTable>> {
    if !(dimension >= t as f64) {
        return Err(Error::Domain(format!(
            "Weingarten tables need D >= t, got D = {dimension}, t = {t}"
        )));
    }
    let key = (t, dimension.to_bits());
    if let Some(table) = cache().read().expect("cache lock").get(&key) {
        return Ok(table.clone());
    }
    let table = Arc::new(build_table(t, dimension)?);
    let mut guard = cache().write().expect("cache lock");
    if guard.len() >= CACHE_LIMIT {
        guard.clear();
    }
    Ok(guard.entry(key).or_insert(table).clone())
}
