//! Designs on the probability simplex: decoherence pushforward, flat-measure
//! moments, the generalized Simpson rule, affine transport and mesh averaging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projective::WeightedStateSet;
use crate::tensor::{ComplexMatrix, DEFAULT_TOL};

/// Points closer than this in the max norm are merged by `decohere`.
pub const MERGE_TOL: f64 = 1e-9;

/// Weighted probability vectors in Δ_d.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SimplexDesignJson")]
pub struct SimplexDesign {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct SimplexDesignJson {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<SimplexDesignJson> for SimplexDesign {
    type Error = Error;
    fn try_from(raw: SimplexDesignJson) -> Result<Self> {
        Self::new(raw.dim, raw.points, raw.weights)
    }
}

impl SimplexDesign {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("simplex design has no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&x| x < -1e-12) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("point {i} is not a probability vector: {p:?}")));
            }
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!("weights must be positive, got {w}")));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted mean of `f` over the points.
    pub fn average(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let s: f64 = self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum();
        s / self.total_weight()
    }

    /// Weights divided by their smallest value.
    pub fn weight_ratios(&self) -> Vec<f64> {
        let min = self.weights.iter().cloned().fold(f64::INFINITY, f64::min);
        self.weights.iter().map(|w| w / min).collect()
    }
}

/// Pushes a state set to Δ_d through the measurement in the basis given by
/// the columns of `basis`: p_i = |⟨b_i|ψ⟩|². Coincident images are merged.
pub fn decohere(set: &WeightedStateSet, basis: &ComplexMatrix) -> Result<SimplexDesign> {
    let d = set.dim();
    if basis.rows() != d || basis.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "basis must be {d}x{d}, got {}x{}",
            basis.rows(),
            basis.cols()
        )));
    }
    let defect = basis.unitarity_defect();
    if defect > DEFAULT_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let bdag = basis.dagger();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (psi, &w) in set.states().iter().zip(set.weights()) {
        let amps = bdag.matmul(psi);
        let p: Vec<f64> = amps.data().iter().map(|z| z.norm_sqr()).collect();
        match points.iter().position(|q| linf(q, &p) <= MERGE_TOL) {
            Some(i) => weights[i] += w,
            None => {
                points.push(p);
                weights.push(w);
            }
        }
    }
    // Absorb rounding so each point sums to one exactly enough for validation.
    for p in &mut points {
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x = (*x / s).max(0.0));
    }
    SimplexDesign::new(d, points, weights)
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// E[Π p_i^{a_i}] under the flat (Dirichlet(1,…,1)) measure on Δ_d:
/// (d−1)! Π a_i! / (d−1+Σa_i)!.
pub fn flat_simplex_moment(d: usize, exponents: &[u32]) -> f64 {
    debug_assert_eq!(d, exponents.len());
    let total: u32 = exponents.iter().sum();
    let d1 = d as u32 - 1;
    // Ratio of factorials computed incrementally to stay in range.
    let mut value: f64 = exponents.iter().map(|&a| factorial(a)).product();
    for m in (d1 + 1)..=(d1 + total) {
        value /= f64::from(m);
    }
    value
}

/// All multi-indices of length `d` with total degree ≤ `max_degree`.
pub fn multi_indices(d: usize, max_degree: u32) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(d, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, max_degree, &mut Vec::with_capacity(d), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexCheck {
    pub max_residual: f64,
    pub passed: bool,
}

/// Compares weighted moments of every degree ≤ t with the flat measure.
pub fn is_simplex_design(design: &SimplexDesign, t: u32, tol: f64) -> SimplexCheck {
    let max_residual = multi_indices(design.dim, t)
        .iter()
        .map(|a| {
            let avg = design.average(|p| p.iter().zip(a).map(|(x, &e)| x.powi(e as i32)).product());
            (avg - flat_simplex_moment(design.dim, a)).abs()
        })
        .fold(0.0, f64::max);
    SimplexCheck {
        max_residual,
        passed: max_residual <= tol,
    }
}

/// Vertices with weight 1 and the barycentre with weight d².
pub fn generalized_simpson(d: usize) -> Result<SimplexDesign> {
    if d < 2 {
        return Err(Error::Domain(format!("the Simpson rule needs d >= 2, got {d}")));
    }
    let mut points: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    points.push(vec![1.0 / d as f64; d]);
    let mut weights = vec![1.0; d];
    weights.push((d * d) as f64);
    SimplexDesign::new(d, points, weights)
}

/// Volume of the simplex spanned by `vertices` (any ambient dimension):
/// √det(G) / (n−1)! with G the Gram matrix of edge vectors from vertex 0.
pub fn simplex_measure(vertices: &[&[f64]]) -> f64 {
    let n = vertices.len();
    if n < 2 {
        return 0.0;
    }
    let v0 = vertices[0];
    let edges: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect())
        .collect();
    let m = n - 1;
    let gram: Vec<f64> = (0..m * m)
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum()
        })
        .collect();
    determinant(gram, m).max(0.0).sqrt() / factorial(m as u32)
}

fn determinant(mut a: Vec<f64>, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let pivot = (c..n)
            .max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))
            .expect("non-empty range");
        if a[pivot * n + c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            for k in 0..n {
                a.swap(pivot * n + k, c * n + k);
            }
            det = -det;
        }
        let p = a[c * n + c];
        det *= p;
        for r in (c + 1)..n {
            let f = a[r * n + c] / p;
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
        }
    }
    det
}

/// Relative size below which a simplex counts as degenerate: its measure
/// compared with the product of its edge lengths.
const DEGENERACY_TOL: f64 = 1e-12;

fn is_degenerate(vertices: &[&[f64]]) -> bool {
    let v0 = vertices[0];
    let scale: f64 = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(v0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .product();
    let m = (vertices.len() - 1) as u32;
    simplex_measure(vertices) * factorial(m) <= DEGENERACY_TOL * scale.max(f64::MIN_POSITIVE)
}

/// Design points mapped into an arbitrary simplex of ℝ^m.
#[derive(Clone, Debug, Serialize)]
pub struct TransportedDesign {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TransportedDesign {
    pub fn average(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum::<f64>() / total
    }
}

/// Barycentric map x = Σ p_i v_i of every design point into the simplex with
/// vertices `target`; weights are unchanged.
pub fn affine_transport(design: &SimplexDesign, target: &[Vec<f64>]) -> Result<TransportedDesign> {
    if target.len() != design.dim {
        return Err(Error::DimensionMismatch(format!(
            "design on Δ_{} needs {} target vertices, got {}",
            design.dim,
            design.dim,
            target.len()
        )));
    }
    let m = target[0].len();
    if target.iter().any(|v| v.len() != m) {
        return Err(Error::DimensionMismatch("target vertices differ in length".into()));
    }
    let refs: Vec<&[f64]> = target.iter().map(|v| v.as_slice()).collect();
    if is_degenerate(&refs) {
        return Err(Error::Domain("target simplex has zero measure".into()));
    }
    let points = design
        .points
        .iter()
        .map(|p| {
            (0..m)
                .map(|c| p.iter().zip(target).map(|(w, v)| w * v[c]).sum())
                .collect()
        })
        .collect();
    Ok(TransportedDesign {
        points,
        weights: design.weights.clone(),
    })
}

/// Simplicial mesh in ℝ^m with per-simplex measures.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "TriangulationJson")]
pub struct Triangulation {
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    #[serde(skip)]
    measures: Vec<f64>,
}

#[derive(Deserialize)]
struct TriangulationJson {
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
}

impl TryFrom<TriangulationJson> for Triangulation {
    type Error = Error;
    fn try_from(raw: TriangulationJson) -> Result<Self> {
        Self::new(raw.vertices, raw.simplices)
    }
}

impl Triangulation {
    pub fn new(vertices: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        if simplices.is_empty() {
            return Err(Error::Empty("mesh has no simplices".into()));
        }
        let m = vertices.first().map(Vec::len).unwrap_or(0);
        if vertices.iter().any(|v| v.len() != m) {
            return Err(Error::DimensionMismatch("mesh vertices differ in length".into()));
        }
        let arity = simplices[0].len();
        let mut measures = Vec::with_capacity(simplices.len());
        for (s, simplex) in simplices.iter().enumerate() {
            if simplex.len() != arity || arity < 2 {
                return Err(Error::DimensionMismatch(format!(
                    "simplex {s} has {} vertices, expected {arity}",
                    simplex.len()
                )));
            }
            if let Some(&bad) = simplex.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "simplex {s} refers to vertex {bad}, but there are {}",
                    vertices.len()
                )));
            }
            let refs: Vec<&[f64]> = simplex.iter().map(|&i| vertices[i].as_slice()).collect();
            if is_degenerate(&refs) {
                return Err(Error::Domain(format!("simplex {s} is degenerate")));
            }
            measures.push(simplex_measure(&refs));
        }
        Ok(Self {
            vertices,
            simplices,
            measures,
        })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Number of vertices per simplex.
    pub fn arity(&self) -> usize {
        self.simplices[0].len()
    }

    pub fn total_measure(&self) -> f64 {
        pairwise_sum(&self.measures)
    }

    pub fn simplex_vertices(&self, s: usize) -> Vec<Vec<f64>> {
        self.simplices[s].iter().map(|&i| self.vertices[i].clone()).collect()
    }
}

/// Sum by recursive halving; the order depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Measure-weighted mean of `f` over the mesh, using `design` on each simplex.
pub fn mesh_average(mesh: &Triangulation, f: impl Fn(&[f64]) -> f64 + Sync, design: &SimplexDesign) -> Result<f64> {
    if design.dim != mesh.arity() {
        return Err(Error::DimensionMismatch(format!(
            "design on Δ_{} cannot integrate simplices with {} vertices",
            design.dim,
            mesh.arity()
        )));
    }
    let contributions: Vec<f64> = (0..mesh.simplices.len())
        .into_par_iter()
        .map(|s| {
            let moved = affine_transport(design, &mesh.simplex_vertices(s))?;
            Ok(mesh.measures[s] * moved.average(&f))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&contributions) / mesh.total_measure())
}

/// Sparse polynomial Σ c·Π x_i^{e_i}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl Polynomial {
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|m| m.exponents.iter().sum()).max().unwrap_or(0)
    }

    /// Number of variables the terms refer to.
    pub fn arity(&self) -> usize {
        self.terms.iter().map(|m| m.exponents.len()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coeff * m.exponents.iter().zip(x).map(|(&e, v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::{mub_family, bases_to_state_set};
    use crate::random::RngStream;
    use crate::tensor::C64;
    use rand::Rng;

    fn octahedron() -> WeightedStateSet {
        bases_to_state_set(2, &mub_family(2).unwrap()).unwrap()
    }

    #[test]
    fn octahedron_gives_simpson() {
        let design = decohere(&octahedron(), &ComplexMatrix::identity(2)).unwrap();
        let mut pairs: Vec<(f64, f64)> = design.points().iter().zip(design.weights()).map(|(p, &w)| (p[0], w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(pairs.len(), 3);
        let expect = [(0.0, 1.0), (0.5, 4.0), (1.0, 1.0)];
        for (got, want) in pairs.iter().zip(expect) {
            assert!((got.0 - want.0).abs() < 1e-12 && got.1 == want.1);
        }
        assert!(is_simplex_design(&design, 3, 1e-12).passed);
        assert!(!is_simplex_design(&design, 4, 1e-6).passed);
    }

    #[test]
    fn rotated_octahedron_gives_gauss_points() {
        // Rotate so the Bloch z-axis points along (1,1,1)/√3: every vertex then
        // has z-coordinate ±1/√3.
        let theta = (1.0 / 3f64.sqrt()).acos();
        let phi = std::f64::consts::FRAC_PI_4;
        let top = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
        let basis = ComplexMatrix::from_rows(&[
            vec![top[0], -top[1].conj()],
            vec![top[1], top[0]],
        ]);
        let design = decohere(&octahedron(), &basis).unwrap();
        assert_eq!(design.len(), 2);
        let s = 1.0 / 3f64.sqrt();
        let mut xs: Vec<f64> = design.points().iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] - (1.0 - s) / 2.0).abs() < 1e-12);
        assert!((xs[1] - (1.0 + s) / 2.0).abs() < 1e-12);
        assert_eq!(design.weights(), &[3.0, 3.0]);
        assert!(is_simplex_design(&design, 3, 1e-12).passed);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(flat_simplex_moment(2, &[1, 0]), 0.5);
        assert!((flat_simplex_moment(3, &[2, 0, 0]) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(flat_simplex_moment(4, &[0, 0, 0, 0]), 1.0);
    }

    #[test]
    fn moment_matches_monte_carlo() {
        // Uniform points on Δ_3 from normalized exponentials.
        let mut rng = RngStream::new(17);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let e: Vec<f64> = (0..3).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let tot: f64 = e.iter().sum();
            let v = (e[0] / tot).powi(2) * (e[1] / tot);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - flat_simplex_moment(3, &[2, 1, 0])).abs() < 5.0 * se);
    }

    #[test]
    fn simpson_examples() {
        let d3 = generalized_simpson(3).unwrap();
        assert_eq!(d3.weight_ratios(), vec![1.0, 1.0, 1.0, 9.0]);
        let d5 = generalized_simpson(5).unwrap();
        assert_eq!(d5.weights(), &[1.0, 1.0, 1.0, 1.0, 1.0, 25.0]);
        for d in 2..=6 {
            let check = is_simplex_design(&generalized_simpson(d).unwrap(), 2, 1e-12);
            assert!(check.passed, "d={d}: {}", check.max_residual);
        }
        assert!(generalized_simpson(1).is_err());
    }

    #[test]
    fn vertices_alone_fail() {
        let points = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let design = SimplexDesign::new(3, points, vec![1.0; 3]).unwrap();
        let check = is_simplex_design(&design, 2, 1e-9);
        assert!(!check.passed);
        assert!((check.max_residual - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn transport_examples() {
        let d = generalized_simpson(3).unwrap();
        let identity: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let moved = affine_transport(&d, &identity).unwrap();
        assert_eq!(moved.points, d.points().to_vec());

        let interval = affine_transport(&generalized_simpson(2).unwrap(), &[vec![-1.0], vec![3.0]]).unwrap();
        assert!((interval.points[2][0] - 1.0).abs() < 1e-15);

        let flat = [vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(affine_transport(&d, &flat).is_err());
    }

    /// ∫_T f for a quadratic f via λ-expansion: ∫λ_iλ_j = |T|(1+δ_ij)/12.
    fn triangle_integral_quadratic(v: &[Vec<f64>], c: &[f64; 6]) -> f64 {
        // f = c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y²
        let area = simplex_measure(&[&v[0], &v[1], &v[2]]);
        let mut second = [[0.0; 2]; 2];
        for i in 0..3 {
            for j in 0..3 {
                let m = area * if i == j { 2.0 } else { 1.0 } / 12.0;
                for a in 0..2 {
                    for b in 0..2 {
                        second[a][b] += m * v[i][a] * v[j][b];
                    }
                }
            }
        }
        let first: Vec<f64> = (0..2).map(|a| area * (v[0][a] + v[1][a] + v[2][a]) / 3.0).collect();
        c[0] * area + c[1] * first[0] + c[2] * first[1] + c[3] * second[0][0] + c[4] * second[0][1] + c[5] * second[1][1]
    }

    fn quad(c: [f64; 6]) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]
    }

    #[test]
    fn transported_simpson_integrates_quadratics() {
        let mut rng = RngStream::new(23);
        let s3 = generalized_simpson(3).unwrap();
        for _ in 0..20 {
            let v: Vec<Vec<f64>> = (0..3).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
            let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let area = simplex_measure(&[&v[0], &v[1], &v[2]]);
            let got = affine_transport(&s3, &v).unwrap().average(quad(c)) * area;
            let want = triangle_integral_quadratic(&v, &c);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    /// A fan triangulation of a random star-shaped polygon.
    fn random_polygon(rng: &mut RngStream, n: usize) -> Triangulation {
        let mut vertices = vec![vec![0.0, 0.0]];
        for i in 0..n {
            let angle = 2.0 * std::f64::consts::PI * (i as f64 + rng.random_range(0.1..0.9)) / n as f64;
            let r = rng.random_range(0.5..2.0);
            vertices.push(vec![r * angle.cos(), r * angle.sin()]);
        }
        let simplices = (0..n).map(|i| vec![0, 1 + i, 1 + (i + 1) % n]).collect();
        Triangulation::new(vertices, simplices).unwrap()
    }

    #[test]
    fn mesh_average_examples() {
        let mut rng = RngStream::new(29);
        let mesh = random_polygon(&mut rng, 20);
        let s3 = generalized_simpson(3).unwrap();
        assert!((mesh_average(&mesh, |_| 1.0, &s3).unwrap() - 1.0).abs() < 1e-15);

        // Linear: exact centroid average.
        let lin = |x: &[f64]| 2.0 * x[0] - x[1] + 0.5;
        let mut want = 0.0;
        for s in 0..mesh.simplices().len() {
            let v = mesh.simplex_vertices(s);
            let centroid: Vec<f64> = (0..2).map(|c| (v[0][c] + v[1][c] + v[2][c]) / 3.0).collect();
            want += mesh.measures()[s] * lin(&centroid);
        }
        want /= mesh.total_measure();
        assert!((mesh_average(&mesh, lin, &s3).unwrap() - want).abs() < 1e-12);

        let c = [0.3, -1.0, 0.2, 1.5, -0.7, 0.9];
        let mut exact = 0.0;
        for s in 0..mesh.simplices().len() {
            exact += triangle_integral_quadratic(&mesh.simplex_vertices(s), &c);
        }
        exact /= mesh.total_measure();
        assert!((mesh_average(&mesh, quad(c), &s3).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn mesh_average_matches_monte_carlo() {
        let mut rng = RngStream::new(31);
        let mesh = random_polygon(&mut rng, 12);
        let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let f = quad(c);
        let value = mesh_average(&mesh, &f, &generalized_simpson(3).unwrap()).unwrap();
        // Sample uniformly: pick a triangle by area, then a uniform point in it.
        let total = mesh.total_measure();
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let mut u = rng.random::<f64>() * total;
            let mut idx = 0;
            while idx + 1 < mesh.measures().len() && u > mesh.measures()[idx] {
                u -= mesh.measures()[idx];
                idx += 1;
            }
            let v = mesh.simplex_vertices(idx);
            let (mut a, mut b) = (rng.random::<f64>(), rng.random::<f64>());
            if a + b > 1.0 {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            let x: Vec<f64> = (0..2).map(|k| v[0][k] + a * (v[1][k] - v[0][k]) + b * (v[2][k] - v[0][k])).collect();
            let y = f(&x);
            s += y;
            s2 += y * y;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - value).abs() < 5.0 * se);
    }

    #[test]
    fn measure_in_higher_ambient_dimension() {
        // Unit right triangle embedded in ℝ³ has area 1/2.
        let v = [vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
        assert!((simplex_measure(&[&v[0], &v[1], &v[2]]) - 0.5).abs() < 1e-15);
        assert!(Triangulation::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]], vec![vec![0, 1, 2]]).is_err());
        assert!(Triangulation::new(vec![vec![0.0, 0.0]], vec![]).is_err());
    }

    #[test]
    fn polynomial_and_json() {
        let p: Polynomial = serde_json::from_str(r#"{"terms":[{"exponents":[2,0],"coeff":1.0},{"exponents":[0,1],"coeff":-2.0}]}"#).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(&[3.0, 1.0]), 7.0);
        let mesh: Triangulation = serde_json::from_str(r#"{"vertices":[[0,0],[1,0],[0,1]],"simplices":[[0,1,2]]}"#).unwrap();
        assert!((mesh.total_measure() - 0.5).abs() < 1e-15);
        let d: SimplexDesign = serde_json::from_str(&serde_json::to_string(&generalized_simpson(4).unwrap()).unwrap()).unwrap();
        assert_eq!(d.len(), 5);
        assert!(serde_json::from_str::<SimplexDesign>(r#"{"dim":2,"points":[[0.4,0.4]],"weights":[1]}"#).is_err());
    }
}
