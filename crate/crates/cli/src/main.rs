use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use stochastic_dmd::dmd::{self, Algorithm, DmdOptions, DmdReport, RankSelection};
use stochastic_dmd::harness::{list_presets, match_spectra, preset, resolve_config, run_experiment_with};
use stochastic_dmd::observables::{
    align, build_dual, evaluate, hankel_embed, read_series, snapshot_pair, write_series, DictionaryPreset,
    EmbeddingPlan, NoiseKind, NoiseSpec, SeriesMatrix,
};
use stochastic_dmd::rds_sim::{read_trajectory, simulate, simulate_from, true_spectrum, write_trajectory, SystemSpec};
use stochastic_dmd::Error;

/// Koopman spectra of random dynamical systems from noisy data.
///
/// Exit codes: 0 success, 2 usage, 3 I/O, 4 malformed input, 5 invalid
/// argument or config, 6 rank, 7 numerical (conditioning, defective operator,
/// no convergence, zero eigenvalue), 8 simulation (divergence, domain),
/// 1 anything else.
#[derive(Parser)]
#[command(name = "sdmd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory.
    Simulate(SimulateArgs),
    /// Evaluate an observable dictionary on a trajectory.
    Observe(ObserveArgs),
    /// Run one decomposition on a stored series.
    Dmd(DmdArgs),
    /// Run an experiment config or preset over all its realizations.
    Experiment(ExperimentArgs),
    /// Match estimated eigenvalues to a reference spectrum.
    Compare(CompareArgs),
    /// List the bundled experiment presets.
    Presets(PresetsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// `rotation`, `linear`, `stuart-landau`, or a JSON system file.
    #[arg(long)]
    system: String,
    /// Number of recorded samples.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Discarded steps before recording; defaults to the system's own.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Comma-separated initial state.
    #[arg(long, allow_hyphen_values = true)]
    initial: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ObserveArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// `kind:arg` (e.g. `rotation_trig:5`) or a JSON dictionary object.
    #[arg(long)]
    dictionary: String,
    /// JSON noise object, e.g. `{"kind":"uniform_real","halfwidth":0.5}`.
    #[arg(long)]
    noise: Option<String>,
    /// Seed of the measurement-noise stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DmdArgs {
    /// alg1..alg4; defaults to alg1, or alg2 when a rank is requested.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Observable series file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Dual series file (alg3, alg4).
    #[arg(long, conflicts_with = "dual_shift")]
    dual: Option<PathBuf>,
    /// Build the dual from the input, this many samples in the past.
    #[arg(long)]
    dual_shift: Option<usize>,
    /// Delay-embed the input with this many rows per input row.
    #[arg(long)]
    delays: Option<usize>,
    #[arg(long, conflicts_with = "energy")]
    rank: Option<usize>,
    /// Keep the leading singular values carrying this fraction of the energy.
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    pinv_rtol: Option<f64>,
    #[arg(long)]
    cond_limit: Option<f64>,
    /// Sampling interval; adds continuous-time eigenvalues to the output.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    with_modes: bool,
    #[arg(long)]
    with_eigenfunctions: bool,
    /// Result JSON; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file or preset name (`rotation-hankel`, `presets/rotation-hankel.json`).
    #[arg(long)]
    config: String,
    /// Report directory (report.json, pairs.csv).
    #[arg(long, env = "SDMD_OUT_DIR")]
    out: Option<PathBuf>,
    /// Maximum number of realizations run at once.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference eigenvalues: `re,im` lines or a JSON list of pairs.
    #[arg(long, required_unless_present = "truth_preset", conflicts_with = "truth_preset")]
    truth: Option<PathBuf>,
    /// Use the analytic spectrum of a preset as the reference.
    #[arg(long)]
    truth_preset: Option<String>,
    /// Estimates: `re,im` lines, a JSON list of pairs, or a `dmd` result.
    #[arg(long)]
    estimates: PathBuf,
    /// Convert estimates to continuous time, `log(λ)/dt`, before matching.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
struct PresetsArgs {
    /// Print the full config of one preset.
    #[arg(long)]
    show: Option<String>,
}

struct Failure {
    stage: &'static str,
    error: Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, error: e.into() })
    }
}

fn exit_code(error: &Error) -> u8 {
    match error.root() {
        Error::Io(_) => 3,
        Error::Parse(_) | Error::Json(_) => 4,
        Error::InvalidArgument(_) | Error::EmptyMatrix | Error::Shape(_) | Error::InsufficientLength { .. } => 5,
        Error::Rank { .. } => 6,
        Error::Conditioning { .. }
        | Error::NearDefective { .. }
        | Error::NoConvergence(_)
        | Error::ZeroEigenvalue { .. } => 7,
        Error::Diverged { .. } | Error::Domain { .. } => 8,
        Error::Realization { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Observe(a) => cmd_observe(a),
        Command::Dmd(a) => cmd_dmd(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Presets(a) => cmd_presets(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { stage, error }) => {
            eprintln!("sdmd: {stage} failed: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> io::Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn read_text(path: &Path) -> Result<String, Error> {
    Ok(std::fs::read_to_string(path)?)
}

fn parse_system(arg: &str) -> Result<SystemSpec, Error> {
    let spec = match arg {
        "rotation" => SystemSpec::rotation(),
        "linear" => SystemSpec::linear(),
        "stuart-landau" | "stuart_landau" => SystemSpec::stuart_landau(),
        path => serde_json::from_str(&read_text(Path::new(path))?)?,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{v}': {e}"))))
        .collect()
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let spec = parse_system(&a.system).stage("reading the system")?;
    let burn_in = a.burn_in.unwrap_or_else(|| spec.default_burn_in());
    let traj = match &a.initial {
        Some(x0) => {
            let x0 = parse_floats(x0).stage("parsing --initial")?;
            simulate_from(&spec, &x0, a.n, a.seed, burn_in)
        }
        None => simulate(&spec, a.n, a.seed, burn_in),
    }
    .stage("simulation")?;
    let mut out = output(a.out.as_deref()).stage("opening the output")?;
    write_trajectory(&traj, &mut out).stage("writing the trajectory")?;
    out.flush().stage("writing the trajectory")
}

fn parse_dictionary(arg: &str) -> Result<DictionaryPreset, Error> {
    if arg.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(arg)?);
    }
    let (kind, n) = arg
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("dictionary '{arg}' is neither JSON nor kind:arg")))?;
    let n: u64 = n.parse().map_err(|e| Error::Parse(format!("dictionary argument '{n}': {e}")))?;
    let key = if kind.starts_with("linear") { "dim" } else { "harmonics" };
    Ok(serde_json::from_value(serde_json::json!({ "kind": kind, key: n }))?)
}

fn cmd_observe(a: ObserveArgs) -> Result<(), Failure> {
    let file = File::open(&a.trajectory).stage("opening the trajectory")?;
    let traj = read_trajectory(BufReader::new(file)).stage("reading the trajectory")?;
    let dict = parse_dictionary(&a.dictionary).and_then(|d| d.build()).stage("parsing the dictionary")?;
    let noise: NoiseKind = match &a.noise {
        Some(n) => serde_json::from_str(n).stage("parsing the noise")?,
        None => NoiseKind::None,
    };
    noise.validate().stage("parsing the noise")?;
    let series = evaluate(&dict, &traj, &NoiseSpec::new(noise, a.seed)).stage("evaluating observables")?;
    let mut out = output(a.out.as_deref()).stage("opening the output")?;
    write_series(&series, &mut out).stage("writing the series")?;
    out.flush().stage("writing the series")
}

fn read_series_file(path: &Path) -> Result<SeriesMatrix, Error> {
    read_series(BufReader::new(File::open(path)?))
}

fn cmd_dmd(a: DmdArgs) -> Result<(), Failure> {
    let rank = match (a.rank, a.energy) {
        (Some(k), _) => RankSelection::Fixed(k),
        (None, Some(f)) => RankSelection::Energy(f),
        (None, None) => RankSelection::Numerical,
    };
    let algorithm = a.algorithm.unwrap_or(if matches!(rank, RankSelection::Numerical) {
        Algorithm::Standard
    } else {
        Algorithm::Svd
    });
    let mut opts = DmdOptions { rank, pinv_rtol: a.pinv_rtol, ..DmdOptions::default() };
    if let Some(limit) = a.cond_limit {
        opts.eig_cond_limit = limit;
    }
    opts.validate().stage("checking options")?;

    let series = read_series_file(&a.input).stage("reading the input series")?;
    let (x, y, z) = match a.delays {
        Some(delays) => {
            let plan = EmbeddingPlan { delays, dual_shift: a.dual_shift.unwrap_or(0) };
            let (x, y, z) = hankel_embed(&series, &plan).stage("delay embedding")?;
            match &a.dual {
                Some(path) => {
                    let d = read_series_file(path).stage("reading the dual series")?;
                    let v = align(&[&x, &y, &d]).stage("aligning the dual")?;
                    (v[0].clone(), v[1].clone(), v[2].clone())
                }
                None => (x, y, z),
            }
        }
        None => {
            let (x, y) = snapshot_pair(&series).stage("building snapshots")?;
            let z = match (&a.dual, a.dual_shift) {
                (Some(path), _) => Some(read_series_file(path).stage("reading the dual series")?),
                (None, Some(s)) => Some(build_dual(&series, s, &[], 0).stage("building the dual")?),
                (None, None) => None,
            };
            match z {
                Some(z) => {
                    let v = align(&[&x, &y, &z]).stage("aligning the dual")?;
                    (v[0].clone(), v[1].clone(), v[2].clone())
                }
                None => {
                    let z = x.clone();
                    (x, y, z)
                }
            }
        }
    };
    let result = dmd::run(algorithm, &x, &y, Some(&z), &opts).stage("decomposition")?;
    let mut report = DmdReport::new(&result, &opts);
    if let Some(dt) = a.dt {
        report = report.with_continuous(&result, dt).stage("continuous-time conversion")?;
    }
    if a.with_modes {
        report = report.with_modes(&result);
    }
    if a.with_eigenfunctions {
        report = report.with_eigenfunctions(&result);
    }
    let json = report.to_json().stage("serializing the result")?;
    write_text(a.out.as_deref(), &json).stage("writing the result")
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), Failure> {
    let cfg = resolve_config(&a.config).stage("loading the config")?;
    let report = run_experiment_with(&cfg, a.jobs.max(1)).stage("running the experiment")?;
    if let Some(dir) = &a.out {
        report.write_to_dir(dir).stage("writing the report")?;
    }
    let mut out = String::new();
    out.push_str(&format!("experiment {} ({})\n", report.name, report.config.algorithm));
    for r in &report.realizations {
        out.push_str(&format!(
            "  realization {}  seed {:#018x}  mean error {:.6}  max error {:.6}\n",
            r.index, r.seed, r.comparison.mean_error, r.comparison.max_error
        ));
    }
    out.push_str(&format!(
        "mean error {:.6}  worst max error {:.6}  ({:.2}s)\n",
        report.aggregate.mean_of_mean_errors, report.aggregate.worst_max_error, report.wall_time_secs
    ));
    write_text(None, &out).stage("printing the summary")
}

/// Eigenvalues from `re,im` (or `re im`) lines, a JSON list of pairs, or a `dmd` result.
fn parse_eigenvalues(text: &str) -> Result<Vec<Complex64>, Error> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return dmd::read_result_eigenvalues(text);
    }
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let parts: Vec<&str> = l.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{l}': {e}")));
            match parts.as_slice() {
                [re] => Ok(Complex64::new(num(re)?, 0.0)),
                [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
                _ => Err(Error::Parse(format!("expected 're,im', got '{l}'"))),
            }
        })
        .collect()
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let truth = match (&a.truth, &a.truth_preset) {
        (Some(path), _) => read_text(path).and_then(|t| parse_eigenvalues(&t)).stage("reading the truth")?,
        (None, Some(name)) => {
            let cfg = preset(name).stage("loading the preset")?;
            true_spectrum(&cfg.system, &cfg.truth).stage("computing the analytic spectrum")?.eigenvalues
        }
        (None, None) => unreachable!("clap requires one of --truth, --truth-preset"),
    };
    let mut estimates =
        read_text(&a.estimates).and_then(|t| parse_eigenvalues(&t)).stage("reading the estimates")?;
    if let Some(dt) = a.dt {
        estimates = dmd::to_continuous_spectrum(&estimates, dt)
            .stage("continuous-time conversion")?
            .into_iter()
            .map(|c| c.value)
            .collect();
    }
    let cmp = match_spectra(&truth, &estimates).stage("matching")?;
    let json = serde_json::to_string_pretty(&cmp).stage("serializing the comparison")?;
    write_text(None, &json).stage("printing the comparison")
}

fn cmd_presets(a: PresetsArgs) -> Result<(), Failure> {
    let text = match &a.show {
        Some(name) => preset(name).and_then(|c| c.to_json()).stage("loading the preset")?,
        None => list_presets()
            .stage("loading presets")?
            .into_iter()
            .map(|(name, desc)| format!("{name:<20} {desc}\n"))
            .collect(),
    };
    write_text(None, &text).stage("printing presets")
}
