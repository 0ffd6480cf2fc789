//! `qdesign`: construct and verify designs, estimate k* from tomography counts.
//!
//! Exit codes: 0 pass, 1 verified fail, 2 input error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use qdesign::channel::{
    average_choi, choi_tcopy, design_distance, qubit_channel_design, unistochastic_design_distance,
    unistochastic_design_qubit, QuantumChannel, WeightedChannelSet,
};
use qdesign::kstar::{emission_pair_channel, fit_kstar, pair_choi_from_twoqubit, FitModel};
use qdesign::projective::{
    bases_to_state_set, is_projective_design, isocoherent_mub, mub_family, sic_fiducial_d2, sic_fiducial_d3,
    wh_orbit, WeightedStateSet,
};
use qdesign::random::{sample_choi_channel, sample_kraus_channel, sample_stinespring_channel, RngStream};
use qdesign::simplex::{generalized_simpson, is_simplex_design, mesh_average, Polynomial, SimplexDesign, Triangulation};
use qdesign::tomography::{reconstruct_choi, simulate_counts, TomographyDataset};
use qdesign::unitary::{clifford_group, pauli_group, unitary_design_residual, UnitarySet};
use qdesign::ComplexMatrix;

#[derive(Parser)]
#[command(name = "qdesign", version, about = "Quantum design construction and verification")]
struct Cli {
    /// Worker threads for parallel sections (1 keeps runs reproducible).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a serialized set against its design criterion.
    Verify(VerifyArgs),
    /// Write a known design or group as JSON.
    Generate(GenerateArgs),
    /// Fit the effective environment dimension for every delay in a counts CSV.
    Kstar(KstarArgs),
    /// Average a polynomial over a triangulated mesh with a simplex design.
    MeshAverage(MeshArgs),
    /// Monte-Carlo mean of t-copy Choi states of random channels.
    Sample(SampleArgs),
    /// Synthetic tomography counts for a two-qubit channel.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Projective,
    Unitary,
    /// Interval designs use Δ₂ points: a Bloch coordinate z maps to p = ((1+z)/2, (1−z)/2).
    Simplex,
    Channel,
    Unistochastic,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    kind: VerifyKind,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    t: usize,
    /// Environment dimension (channel designs only).
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenerateObject {
    Clifford,
    Pauli,
    Mub,
    IsocoherentMub,
    Sic,
    Simpson,
    ChannelDesign,
    UnistochasticDesign,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    object: GenerateObject,
    /// Number of qubits (clifford, pauli).
    #[arg(long)]
    n: Option<usize>,
    /// Dimension (mub, sic, simpson).
    #[arg(long)]
    d: Option<usize>,
    /// Environment dimension (channel-design).
    #[arg(long)]
    k: Option<f64>,
    /// Fiducial angle of the d = 3 SIC family.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct KstarArgs {
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, value_enum, default_value = "uniform")]
    model: ModelArg,
    /// Fit CSV; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Uniform,
    Emission,
}

impl From<ModelArg> for FitModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Uniform => FitModel::Uniform,
            ModelArg::Emission => FitModel::Emission,
        }
    }
}

#[derive(Args)]
struct MeshArgs {
    /// Triangulation JSON {"vertices": [...], "simplices": [...]}, optionally
    /// with a "function" entry holding the polynomial.
    #[arg(long)]
    mesh: PathBuf,
    /// Polynomial JSON {"terms": [{"exponents": [..], "coeff": c}, ...]}.
    #[arg(long)]
    function: Option<PathBuf>,
    /// `simpson` or a path to a simplex design JSON.
    #[arg(long, default_value = "simpson")]
    design: String,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Construction {
    Kraus,
    Choi,
    Stinespring,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    construction: Construction,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Kraus count, Wishart rank or environment dimension.
    #[arg(long, default_value_t = 4)]
    s: usize,
    #[arg(long, default_value_t = 1)]
    t: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Summary JSON; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the sampled single-copy Choi matrices as a JSON array.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Two-qubit channel JSON {"kraus": [...]}.
    #[arg(long, conflicts_with_all = ["emission_k", "identity"])]
    channel: Option<PathBuf>,
    /// Build Φ⊗Φ noise from the emission model with this k (needs k = 1 or k ≥ 2).
    #[arg(long, requires = "emission_w")]
    emission_k: Option<f64>,
    #[arg(long)]
    emission_w: Option<f64>,
    /// Noiseless two-qubit identity channel.
    #[arg(long)]
    identity: bool,
    #[arg(long, default_value_t = 1000)]
    shots: u64,
    #[arg(long)]
    seed: u64,
    /// Comma-separated delays in microseconds; the same channel is used at each.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    delays: Vec<f64>,
    #[arg(long, short)]
    output: PathBuf,
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<bool, InputError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Generate(a) => generate(a),
        Command::Kstar(a) => kstar(a),
        Command::MeshAverage(a) => mesh(a),
        Command::Sample(a) => sample(a),
        Command::Simulate(a) => simulate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let file = File::open(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), InputError> {
    let file = File::create(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn output_writer(path: Option<&Path>) -> Result<Box<dyn Write>, InputError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| InputError(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn report(residual: f64, bound: Option<f64>, passed: bool) -> bool {
    println!("residual: {residual:.6e}");
    if let Some(b) = bound {
        println!("bound: {b:.6e}");
    }
    println!("verdict: {}", if passed { "PASS" } else { "FAIL" });
    passed
}

fn verify(a: VerifyArgs) -> CmdResult {
    if !(a.tol > 0.0) {
        return Err(InputError("--tol must be positive".into()));
    }
    match a.kind {
        VerifyKind::Projective => {
            let set: WeightedStateSet = read_json(&a.input)?;
            let check = is_projective_design(&set, a.t, a.tol)?;
            Ok(report(check.residual, Some(check.bound), check.passed))
        }
        VerifyKind::Unitary => {
            let set: UnitarySet = read_json(&a.input)?;
            let check = unitary_design_residual(&set, a.t, a.tol);
            Ok(report(check.residual, Some(check.bound), check.passed))
        }
        VerifyKind::Simplex => {
            let design: SimplexDesign = read_json(&a.input)?;
            let check = is_simplex_design(&design, a.t as u32, a.tol);
            Ok(report(check.max_residual, None, check.passed))
        }
        VerifyKind::Channel => {
            let k = a.k.ok_or_else(|| InputError("--k is required for channel designs".into()))?;
            let set: WeightedChannelSet = read_json(&a.input)?;
            if set.has_negative_weights() {
                println!("note: set has negative weights (analytic continuation)");
            }
            let dist = design_distance(&set, set.dim(), k, a.t)?;
            Ok(report(dist, None, dist <= a.tol))
        }
        VerifyKind::Unistochastic => {
            let set: WeightedChannelSet = read_json(&a.input)?;
            let dist = unistochastic_design_distance(&set, a.t)?;
            Ok(report(dist, None, dist <= a.tol))
        }
    }
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T, InputError> {
    value.ok_or_else(|| InputError(format!("--{flag} is required for this object")))
}

fn generate(a: GenerateArgs) -> CmdResult {
    match a.object {
        GenerateObject::Clifford => write_json(&a.output, &clifford_group(need(a.n, "n")?)?)?,
        GenerateObject::Pauli => write_json(&a.output, &pauli_group(need(a.n, "n")?)?.operators())?,
        GenerateObject::Mub => {
            let d = need(a.d, "d")?;
            write_json(&a.output, &bases_to_state_set(d, &mub_family(d)?)?)?
        }
        GenerateObject::IsocoherentMub => write_json(&a.output, &bases_to_state_set(4, &isocoherent_mub())?)?,
        GenerateObject::Sic => {
            let set = match need(a.d, "d")? {
                2 => wh_orbit(&sic_fiducial_d2(), 2)?,
                3 => wh_orbit(&sic_fiducial_d3(a.theta), 3)?,
                d => return Err(InputError(format!("SIC generation supports d = 2 or 3, got {d}"))),
            };
            write_json(&a.output, &set)?
        }
        GenerateObject::Simpson => write_json(&a.output, &generalized_simpson(need(a.d, "d")?)?)?,
        GenerateObject::ChannelDesign => {
            let set = qubit_channel_design(need(a.k, "k")?)?;
            if set.has_negative_weights() {
                eprintln!("note: 1 < k < 2 gives a negative depolarizing weight");
            }
            write_json(&a.output, &set)?
        }
        GenerateObject::UnistochasticDesign => write_json(&a.output, &unistochastic_design_qubit()?)?,
    }
    Ok(true)
}

#[derive(Serialize)]
struct FitRow {
    delay_us: f64,
    k_star: f64,
    epsilon_star: f64,
    w: f64,
    model: FitModel,
}

fn kstar(a: KstarArgs) -> CmdResult {
    let file = File::open(&a.counts).map_err(|e| InputError(format!("{}: {e}", a.counts.display())))?;
    let data = TomographyDataset::read_csv(BufReader::new(file))
        .map_err(|e| InputError(format!("{}: {e}", a.counts.display())))?;
    let delays = data.delays();
    if delays.is_empty() {
        return Err(InputError("counts file has no rows".into()));
    }
    let model = FitModel::from(a.model);
    let rows: Vec<FitRow> = delays
        .par_iter()
        .map(|&delay| {
            let sigma = reconstruct_choi(&data.grid(delay)?)?;
            let fit = fit_kstar(&pair_choi_from_twoqubit(&sigma)?, model)?;
            Ok(FitRow {
                delay_us: delay,
                k_star: fit.k_star,
                epsilon_star: fit.epsilon_star,
                w: fit.w,
                model,
            })
        })
        .collect::<Result<_, qdesign::Error>>()?;
    let mut w = csv::Writer::from_writer(output_writer(a.output.as_deref())?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(true)
}

/// Largest t ≤ 6 for which the design passes the moment test.
fn design_strength(design: &SimplexDesign) -> u32 {
    (1..=6)
        .take_while(|&t| is_simplex_design(design, t, 1e-9).passed)
        .last()
        .unwrap_or(0)
}

fn mesh(a: MeshArgs) -> CmdResult {
    let raw: serde_json::Value = read_json(&a.mesh)?;
    let mesh: Triangulation =
        serde_json::from_value(raw.clone()).map_err(|e| InputError(format!("{}: {e}", a.mesh.display())))?;
    let poly: Polynomial = match (&a.function, raw.get("function")) {
        (Some(path), _) => read_json(path)?,
        (None, Some(f)) => serde_json::from_value(f.clone())?,
        (None, None) => return Err(InputError("no polynomial: pass --function or add \"function\" to the mesh".into())),
    };
    let ambient = mesh.vertices()[0].len();
    if poly.arity() > ambient {
        return Err(InputError(format!(
            "polynomial has {} variables but the mesh lives in R^{ambient}",
            poly.arity()
        )));
    }
    let design = if a.design == "simpson" {
        generalized_simpson(mesh.arity())?
    } else {
        read_json(Path::new(&a.design))?
    };
    let strength = design_strength(&design);
    if poly.degree() > strength {
        eprintln!(
            "warning: polynomial degree {} exceeds design strength {strength}; the average is not guaranteed exact",
            poly.degree()
        );
    }
    let value = mesh_average(&mesh, |x| poly.eval(x), &design)?;
    println!("{value:.17e}");
    Ok(true)
}

#[derive(Serialize)]
struct SampleSummary {
    construction: Construction,
    d: usize,
    s: usize,
    t: usize,
    samples: usize,
    seed: u64,
    rng: &'static str,
    mean: ComplexMatrix,
    /// Standard errors of the real and imaginary parts, packed as a matrix.
    standard_error: ComplexMatrix,
    reference_distance: f64,
    max_abs_z: f64,
}

fn draw_channel(c: Construction, d: usize, s: usize, rng: &mut RngStream) -> qdesign::Result<QuantumChannel> {
    match c {
        Construction::Kraus => sample_kraus_channel(d, s, rng),
        Construction::Choi => QuantumChannel::from_choi(&sample_choi_channel(d, s, rng)?),
        Construction::Stinespring => sample_stinespring_channel(d, s, rng),
    }
}

fn sample(a: SampleArgs) -> CmdResult {
    if a.samples < 2 {
        return Err(InputError("--samples must be at least 2".into()));
    }
    // Sample i draws from stream i of the seed, so results do not depend on --threads.
    let draws: Vec<(QuantumChannel, ComplexMatrix)> = (0..a.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::with_stream(a.seed, i as u64);
            let ch = draw_channel(a.construction, a.d, a.s, &mut rng)?;
            let m = choi_tcopy(&ch, a.t)?.into_matrix();
            Ok((ch, m))
        })
        .collect::<qdesign::Result<_>>()?;
    let n = a.samples as f64;
    let side = draws[0].1.rows();
    let mut sum = vec![(0.0, 0.0); side * side];
    let mut sq = vec![(0.0, 0.0); side * side];
    for (_, m) in &draws {
        for (i, z) in m.data().iter().enumerate() {
            sum[i].0 += z.re;
            sum[i].1 += z.im;
            sq[i].0 += z.re * z.re;
            sq[i].1 += z.im * z.im;
        }
    }
    let se = |s: f64, q: f64| ((q / n - (s / n).powi(2)).max(0.0) / (n - 1.0)).sqrt();
    let mean = ComplexMatrix::new(side, side, sum.iter().map(|&(r, i)| qdesign::C64::new(r / n, i / n)).collect())?;
    let errors = ComplexMatrix::new(
        side,
        side,
        sum.iter().zip(&sq).map(|(&(sr, si), &(qr, qi))| qdesign::C64::new(se(sr, qr), se(si, qi))).collect(),
    )?;
    let reference = average_choi(a.d, a.s as f64, a.t)?;
    let mut max_z: f64 = 0.0;
    for ((m, r), e) in mean.data().iter().zip(reference.matrix().data()).zip(errors.data()) {
        for (diff, err) in [((m - r).re, e.re), ((m - r).im, e.im)] {
            if err > 0.0 {
                max_z = max_z.max(diff.abs() / err);
            } else if diff.abs() > 1e-12 {
                max_z = f64::INFINITY;
            }
        }
    }
    if let Some(path) = &a.export {
        let chois: Vec<ComplexMatrix> = draws.iter().map(|(ch, _)| ch.choi().into_matrix()).collect();
        write_json(path, &chois)?;
    }
    let summary = SampleSummary {
        construction: a.construction,
        d: a.d,
        s: a.s,
        t: a.t,
        samples: a.samples,
        seed: a.seed,
        rng: "chacha20",
        reference_distance: mean.distance(reference.matrix()),
        mean,
        standard_error: errors,
        max_abs_z: max_z,
    };
    let mut out = output_writer(a.output.as_deref())?;
    serde_json::to_writer(&mut out, &summary)?;
    out.write_all(b"\n")?;
    out.flush()?;
    eprintln!("max |z| against average_choi: {max_z:.3}");
    Ok(max_z <= 5.0)
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let channel = match (&a.channel, a.emission_k, a.identity) {
        (Some(path), None, false) => read_json::<QuantumChannel>(path)?,
        (None, Some(k), false) => emission_pair_channel(k, need(a.emission_w, "emission-w")?)?,
        (None, None, true) => QuantumChannel::identity(4),
        _ => return Err(InputError("choose exactly one of --channel, --emission-k, --identity".into())),
    };
    let mut data = TomographyDataset::default();
    for (i, &delay) in a.delays.iter().enumerate() {
        let mut rng = RngStream::with_stream(a.seed, i as u64);
        data.extend(simulate_counts(&channel, a.shots, delay, &mut rng)?);
    }
    let file = File::create(&a.output).map_err(|e| InputError(format!("{}: {e}", a.output.display())))?;
    data.write_csv(BufWriter::new(file))?;
    Ok(true)
}
