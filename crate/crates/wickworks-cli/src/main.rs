use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wickworks::budget::Budget;
use wickworks::feynman::{degree_symbolic, generate_diagrams};
use wickworks::lattice::fft_size;
use wickworks::phi4;
use wickworks::polyalg::{hermite, hermite_scaled};
use wickworks::torusfield::{
    export_field, sample_field, FieldHeader, ModeLattice, SpectralProfile, Synthesis,
};
use wickworks::verify;
use wickworks::Rational;

const HERMITE_SCHEMA: &str = "wickworks.hermite/1";
const DIAGRAMS_SCHEMA: &str = "wickworks.diagrams/1";
const FIELD_SCHEMA: &str = "wickworks.field/1";
const MAX_HERMITE: usize = 64;

#[derive(Parser)]
#[command(
    name = "wickworks",
    version,
    about = "Hermite algebra, Feynman diagrams and Φ⁴ expansions"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Torus dimension
    #[arg(long = "d", global = true)]
    d: Option<f64>,
    /// Fourier cutoff
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Expansion order
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Coupling
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Monte Carlo sample count
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// RNG seed, required by every stochastic command
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Table of Hermite polynomials H_0..H_n
    Hermite {
        n: usize,
        /// Variance of the scaled family, e.g. 2 or 1/3
        #[arg(long)]
        sigma2: Option<String>,
    },
    /// Isomorphism classes of leg matchings with their counts
    Diagrams {
        vertices: usize,
        #[arg(long, default_value_t = 4)]
        arity: u32,
        /// Keep connected classes only
        #[arg(long)]
        connected: bool,
        /// External point labels, comma separated
        #[arg(long, value_delimiter = ',')]
        externals: Vec<String>,
    },
    /// Φ⁴ partition-function expansion report
    Phi4 {
        /// Add a Monte Carlo estimate (needs --alpha and --seed)
        #[arg(long)]
        mc: bool,
    },
    /// Sample a Gaussian field on the torus
    Field {
        /// white, gff or fractional:<s>
        profile: String,
    },
    /// Run the acceptance oracle suite
    Verify {
        /// Run only these criteria, comma separated
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Include wall-clock seconds (output is then not reproducible)
        #[arg(long)]
        timings: bool,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<wickworks::Error> for Failure {
    fn from(e: wickworks::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(format!("I/O: {e}"))
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => Cli::command().error(ErrorKind::ValueValidation, msg).exit(),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Res<bool> {
    let c = &cli.common;
    if let Err(e) = Budget::try_from_env() {
        return usage(e.to_string());
    }
    if let Some(t) = c.threads {
        if t == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Run(e.to_string()))?;
    }
    match &cli.command {
        Command::Hermite { n, sigma2 } => cmd_hermite(c, *n, sigma2.as_deref()),
        Command::Diagrams {
            vertices,
            arity,
            connected,
            externals,
        } => cmd_diagrams(c, *vertices, *arity, *connected, externals),
        Command::Phi4 { mc } => cmd_phi4(c, *mc),
        Command::Field { profile } => cmd_field(c, profile),
        Command::Verify { only, timings } => cmd_verify(c, only, *timings),
    }
}

fn emit(c: &Common, body: &str) -> Res<()> {
    match &c.out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(body.as_bytes())?;
            f.flush()?;
        }
        None => {
            let mut s = io::stdout().lock();
            s.write_all(body.as_bytes())?;
            s.flush()?;
        }
    }
    Ok(())
}

fn emit_json(c: &Common, v: &Value) -> Res<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Run(e.to_string()))?;
    s.push('\n');
    emit(c, &s)
}

fn integer_d(c: &Common, default: usize) -> Res<usize> {
    match c.d {
        None => Ok(default),
        Some(d) if d.fract() == 0.0 && (1.0..=3.0).contains(&d) => Ok(d as usize),
        Some(d) => usage(format!("--d must be 1, 2 or 3 here, got {d}")),
    }
}

fn require_seed(c: &Common, what: &str) -> Res<u64> {
    c.seed.map_or_else(
        || usage(format!("{what} is stochastic and needs --seed")),
        Ok,
    )
}

fn cmd_hermite(c: &Common, n: usize, sigma2: Option<&str>) -> Res<bool> {
    if n > MAX_HERMITE {
        return usage(format!("n must be at most {MAX_HERMITE}"));
    }
    let s2 = match sigma2 {
        None => None,
        Some(s) => match Rational::from_str(s) {
            Ok(r) => Some(r),
            Err(_) => {
                return usage(format!(
                    "--sigma2 must be a rational like 2 or 1/3, got {s:?}"
                ))
            }
        },
    };
    let rows: Vec<(usize, wickworks::polyalg::Polynomial)> = (0..=n)
        .map(|k| {
            (
                k,
                s2.as_ref()
                    .map_or_else(|| hermite(k), |s| hermite_scaled(k, s)),
            )
        })
        .collect();
    match c.format {
        Format::Json => emit_json(
            c,
            &json!({
                "schema": HERMITE_SCHEMA,
                "sigma2": s2.as_ref().map_or("1".to_string(), |s| s.to_string()),
                "rows": rows.iter().map(|(k, p)| json!({
                    "n": k,
                    "polynomial": p.to_string(),
                    "coefficients": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }),
        )?,
        Format::Csv => {
            let mut s = String::from("n,polynomial\n");
            for (k, p) in &rows {
                s.push_str(&format!("{k},{p}\n"));
            }
            emit(c, &s)?;
        }
        Format::Dot => return usage("hermite supports --format json or csv"),
    }
    Ok(true)
}

fn cmd_diagrams(
    c: &Common,
    vertices: usize,
    arity: u32,
    connected: bool,
    externals: &[String],
) -> Res<bool> {
    if arity == 0 {
        return usage("--arity must be positive");
    }
    let ext: Vec<&str> = externals.iter().map(String::as_str).collect();
    let mut sum = generate_diagrams(&vec![arity; vertices], &ext)?;
    if connected {
        sum = sum.connected_part();
    }
    match c.format {
        Format::Json => {
            let classes: Vec<Value> = sum
                .iter()
                .map(|(g, n)| {
                    let (a, b) = degree_symbolic(g);
                    json!({
                        "diagram": g.to_json(true),
                        "text": g.to_string(),
                        "count": n.to_string(),
                        "connected": g.is_connected(),
                        "degree": { "d": a, "constant": b },
                    })
                })
                .collect();
            emit_json(
                c,
                &json!({
                    "schema": DIAGRAMS_SCHEMA,
                    "vertices": vertices,
                    "arity": arity,
                    "externals": externals,
                    "connected_only": connected,
                    "total": sum.total().to_string(),
                    "classes": classes,
                }),
            )?;
        }
        Format::Csv => {
            let mut s = String::from("index,count,connected,diagram\n");
            for (i, (g, n)) in sum.iter().enumerate() {
                s.push_str(&format!("{i},{n},{},\"{g}\"\n", g.is_connected()));
            }
            emit(c, &s)?;
        }
        Format::Dot => {
            let mut s = String::new();
            for (i, (g, n)) in sum.iter().enumerate() {
                s.push_str(&format!("// count {n}\n"));
                s.push_str(&g.to_dot(&format!("g{i}")));
            }
            emit(c, &s)?;
        }
    }
    Ok(true)
}

fn cmd_phi4(c: &Common, mc: bool) -> Res<bool> {
    let d = c.d.unwrap_or(1.0);
    let n_cut = c.n.unwrap_or(8);
    let order = c.order.unwrap_or(3);
    if order > phi4::DEFAULT_MAX_ORDER {
        return usage(format!(
            "--order must be at most {}",
            phi4::DEFAULT_MAX_ORDER
        ));
    }
    if !(1.0..4.0).contains(&d) {
        return usage(format!("--d must lie in [1, 4), got {d}"));
    }
    let estimate = if mc {
        let seed = require_seed(c, "phi4 --mc")?;
        let dm = integer_d(c, 1)?;
        let alpha = match c.alpha {
            Some(a) if a.is_finite() && a >= 0.0 => a,
            Some(a) => return usage(format!("--alpha must be a nonnegative number, got {a}")),
            None => return usage("phi4 --mc needs --alpha"),
        };
        let samples = c.samples.unwrap_or(10_000);
        if samples == 0 {
            return usage("--samples must be positive");
        }
        Some(phi4::mc_partition_ratios(dm, n_cut, &[alpha], samples, seed, c.grid)?.remove(0))
    } else {
        None
    };
    let mut report = phi4::report_json(d, n_cut, order, estimate.as_ref())?;
    if let (true, Some(a)) = (d == 3.0, c.alpha) {
        report["counterterms"] = phi4::counterterms_d3(a, n_cut)?.to_json();
    }
    match c.format {
        Format::Json => emit_json(c, &report)?,
        Format::Csv => {
            let mut s = String::from("n,ratio,log_ratio\n");
            let full = &report["partition_ratio"]["coefficients"];
            let log = &report["log_partition"]["coefficients"];
            for k in 0..=order {
                s.push_str(&format!("{k},{},{}\n", full[k]["value"], log[k]["value"]));
            }
            emit(c, &s)?;
        }
        Format::Dot => return usage("phi4 supports --format json or csv"),
    }
    Ok(true)
}

fn parse_profile(s: &str) -> Res<SpectralProfile> {
    let p = match s {
        "white" => SpectralProfile::White,
        "gff" => SpectralProfile::Gff,
        _ => match s.strip_prefix("fractional:").map(f64::from_str) {
            Some(Ok(x)) => SpectralProfile::Fractional(x),
            _ => {
                return usage(format!(
                    "profile must be white, gff or fractional:<s>, got {s:?}"
                ))
            }
        },
    };
    if p.validate().is_err() {
        return usage(format!("invalid profile exponent in {s:?}"));
    }
    Ok(p)
}

fn cmd_field(c: &Common, profile: &str) -> Res<bool> {
    let p = parse_profile(profile)?;
    let seed = require_seed(c, "field")?;
    let d = integer_d(c, 1)?;
    let n_cut = c.n.unwrap_or(8);
    let m = c.grid.unwrap_or_else(|| fft_size(2 * n_cut + 1));
    if m == 0 {
        return usage("--grid must be positive");
    }
    let lat = ModeLattice::new(d, n_cut)?;
    let sample = sample_field(p, &lat, seed)?;
    match c.format {
        Format::Csv => {
            let mut buf = Vec::new();
            export_field(&sample, m, &mut buf)?;
            emit(c, &String::from_utf8(buf).expect("export is UTF-8"))?;
        }
        Format::Json => {
            let header = FieldHeader {
                schema: FIELD_SCHEMA.into(),
                d,
                n: n_cut,
                profile: p.name(),
                seed: Some(seed),
                grid: m,
                modes: lat.len(),
            };
            let mut v = serde_json::to_value(&header).expect("plain data");
            v["values"] = json!(sample.grid_values(m, Synthesis::Fft));
            emit_json(c, &v)?;
        }
        Format::Dot => return usage("field supports --format json or csv"),
    }
    Ok(true)
}

fn cmd_verify(c: &Common, only: &[usize], timings: bool) -> Res<bool> {
    let seed = require_seed(c, "verify")?;
    let ids: Vec<usize> = if only.is_empty() {
        (1..=verify::CRITERIA).collect()
    } else {
        only.to_vec()
    };
    if let Some(bad) = ids.iter().find(|&&i| verify::criterion_name(i).is_none()) {
        return usage(format!(
            "no criterion {bad}; ids run from 1 to {}",
            verify::CRITERIA
        ));
    }
    let mut results = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, seed)?;
        eprintln!("{}", if timings { r.line() } else { r.line_untimed() });
        results.push(r);
    }
    let all = results.iter().all(|r| r.passed);
    match c.format {
        Format::Json => emit_json(c, &verify::to_json(&results, seed, timings))?,
        Format::Csv => {
            let mut s = String::from("id,name,passed,detail\n");
            for r in &results {
                s.push_str(&format!(
                    "{},{},{},\"{}\"\n",
                    r.id,
                    r.name,
                    r.passed,
                    r.detail.replace('"', "'")
                ));
            }
            emit(c, &s)?;
        }
        Format::Dot => return usage("verify supports --format json or csv"),
    }
    Ok(all)
}
