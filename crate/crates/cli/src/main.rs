//! `sphamoeba`: amoeba clouds, boundary curves, valuation cones, curve
//! tropicalization and convergence reports from the command line.

mod selftest;
mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sphamoeba::kuratowski::{convergence_report, KuratowskiError};
use sphamoeba::slog::{amoeba, boundary_group3, AmoebaConfig, SlogError};
use sphamoeba::spaces::{FamilyId, PolyCone};
use sphamoeba::tropical::{
    generic_valuation, in_valuation_cone, Curve, CurveFamily, TropicalError, DEFAULT_TRIALS,
};

#[derive(Parser)]
#[command(name = "sphamoeba", version, about = "Spherical amoebae, valuation cones and spherical tropicalization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a spherical amoeba and write it as CSV (optionally as SVG).
    Amoeba(AmoebaArgs),
    /// Trace both boundary curves of the group3 amoeba.
    Boundary(BoundaryArgs),
    /// Print the valuation cone as JSON rays and halfspaces.
    Cone(ConeArgs),
    /// Compute the spherical tropicalization of a curve given as JSON.
    Tropicalize(TropicalizeArgs),
    /// Report discrepancy and coverage of amoebae against the cone.
    Converge(ConvergeArgs),
    /// Run the built-in invariant suites.
    Selftest,
}

#[derive(Args)]
struct AmoebaArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep points with max-norm at most this value.
    #[arg(long)]
    window: Option<f64>,
    /// Mix constructed points aimed at a jittered grid of cone targets.
    #[arg(long)]
    stratified: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long, default_value = "group3")]
    family: String,
    #[arg(long)]
    t: f64,
    /// Number of parameter values x, spaced geometrically in [1, xmax].
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 100.0)]
    xmax: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConeArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TropicalizeArgs {
    /// Expected family; must match the curve file when given.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    family: String,
    /// Comma-separated list of t values.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    window: f64,
    /// Grid step of the coverage gap.
    #[arg(long, default_value_t = 0.25)]
    grid: f64,
    #[arg(long)]
    stratified: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<SlogError> for CliError {
    fn from(e: SlogError) -> Self {
        match e {
            SlogError::InvalidT(_) | SlogError::Unsupported(_) | SlogError::Dimension { .. } => {
                CliError::Usage(e.to_string())
            }
            SlogError::Csv(_) | SlogError::CsvFormat(_) => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<TropicalError> for CliError {
    fn from(e: TropicalError) -> Self {
        match e {
            TropicalError::Json(_)
            | TropicalError::UnknownFamily(_)
            | TropicalError::Unsupported(_)
            | TropicalError::CoordinateCount { .. }
            | TropicalError::InvalidCurve(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<KuratowskiError> for CliError {
    fn from(e: KuratowskiError) -> Self {
        match e {
            KuratowskiError::Slog(s) => s.into(),
            KuratowskiError::BadParameter { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn parse_family(s: &str) -> Result<FamilyId, CliError> {
    s.parse()
        .map_err(|e: sphamoeba::spaces::SpaceError| CliError::Usage(e.to_string()))
}

fn check_t(t: f64) -> Result<(), CliError> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("t = {t} is not in (0, 1)")))
    }
}

/// Writes through `f` to `path`, or to stdout when no path is given.
fn emit(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_error(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| io_error(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output types serialize");
    emit(path, |w| {
        writeln!(w, "{text}").map_err(|e| CliError::Io(e.to_string()))
    })
}

fn cmd_amoeba(a: AmoebaArgs) -> Result<(), CliError> {
    let family = parse_family(&a.family)?;
    check_t(a.t)?;
    let mut cfg = AmoebaConfig::new(a.samples, a.seed);
    cfg.window = a.window;
    cfg.stratified = a.stratified;
    let cloud = amoeba(family, a.t, &cfg)?;
    emit(a.out.as_deref(), |w| Ok(cloud.write_csv(w)?))?;
    if let Some(path) = a.svg.as_deref() {
        let boundary = match family {
            FamilyId::Group(3) => Some(boundary_group3(a.t, &geometric_grid(400, 1e4))?),
            _ => None,
        };
        let doc = svg::render(&cloud, &family.valuation_cone(), boundary.as_ref());
        std::fs::write(path, doc).map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn geometric_grid(points: usize, xmax: f64) -> Vec<f64> {
    if points <= 1 {
        return vec![1.0];
    }
    (0..points)
        .map(|k| xmax.powf(k as f64 / (points - 1) as f64))
        .collect()
}

fn cmd_boundary(a: BoundaryArgs) -> Result<(), CliError> {
    if parse_family(&a.family)? != FamilyId::Group(3) {
        return Err(CliError::Usage(format!(
            "boundary curves are available for group3 only, not {}",
            a.family
        )));
    }
    check_t(a.t)?;
    if !(a.xmax >= 1.0) || a.points == 0 {
        return Err(CliError::Usage("need --points >= 1 and --xmax >= 1".into()));
    }
    let curves = boundary_group3(a.t, &geometric_grid(a.points, a.xmax))?;
    emit(a.out.as_deref(), |w| Ok(curves.write_csv(w)?))
}

#[derive(Serialize)]
struct ConeOutput<'a> {
    family: FamilyId,
    generators: Vec<String>,
    #[serde(flatten)]
    cone: &'a PolyCone,
}

fn cmd_cone(a: ConeArgs) -> Result<(), CliError> {
    let family = parse_family(&a.family)?;
    let cone = family.valuation_cone();
    write_json(
        a.out.as_deref(),
        &ConeOutput {
            family,
            generators: family.generator_labels(),
            cone: &cone,
        },
    )
}

#[derive(Serialize)]
struct Valuation {
    generator: String,
    valuation: String,
    value: f64,
}

#[derive(Serialize)]
struct TropicalizeOutput {
    family: CurveFamily,
    strop: Vec<String>,
    valuations: Vec<Valuation>,
    in_valuation_cone: bool,
    seed: u64,
    trials: usize,
}

fn cmd_tropicalize(a: TropicalizeArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.curve).map_err(|e| io_error(&a.curve, e))?;
    let curve = Curve::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.curve.display())))?;
    if let Some(name) = &a.family {
        let expected: CurveFamily = name.parse()?;
        if expected != curve.family() {
            return Err(CliError::Usage(format!(
                "--family {expected} does not match the curve file's family {}",
                curve.family()
            )));
        }
    }
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let family = curve.family();
    let labels = match family {
        CurveFamily::Space(id) => id.generator_labels(),
        CurveFamily::Sl2Plane => vec!["w".into()],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut strop = Vec::with_capacity(family.rank());
    let mut valuations = Vec::with_capacity(family.rank());
    for (i, label) in labels.into_iter().enumerate() {
        let f = family.highest_weight_function(i)?;
        let v = generic_valuation(&f, &curve, &mut rng, a.trials)?;
        valuations.push(Valuation {
            generator: label,
            valuation: v.to_string(),
            value: *v.numer() as f64 / *v.denom() as f64,
        });
        strop.push(v);
    }
    write_json(
        a.out.as_deref(),
        &TropicalizeOutput {
            family,
            in_valuation_cone: in_valuation_cone(family, &strop),
            strop: strop.iter().map(|v| v.to_string()).collect(),
            valuations,
            seed: a.seed,
            trials: a.trials,
        },
    )
}

fn cmd_converge(a: ConvergeArgs) -> Result<(), CliError> {
    let family = parse_family(&a.family)?;
    for &t in &a.t {
        check_t(t)?;
    }
    let report = convergence_report(family, &a.t, a.samples, a.seed, a.stratified, a.window, a.grid)?;
    write_json(a.out.as_deref(), &report)
}

fn cmd_selftest() -> Result<(), CliError> {
    let results = selftest::run_all();
    let mut failed = 0;
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("PASS {}", r.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL {}: {msg}", r.name);
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("{failed} of {} suites failed", results.len())))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Amoeba(a) => cmd_amoeba(a),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Cone(a) => cmd_cone(a),
        Command::Tropicalize(a) => cmd_tropicalize(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Selftest => cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
