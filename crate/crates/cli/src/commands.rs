use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use cohen_lenstra::measures::{self, MassValue, Measure};
use cohen_lenstra::rational::{self, format_rational, parse_rational, ExactRational};
use cohen_lenstra::sampler::{self, ColumnSampler, SamplerConfig};
use cohen_lenstra::sandpile::{self, ExperimentConfig, Graph, DEFAULT_VALUATION_CAP};
use cohen_lenstra::verify::{self, Suite, SuiteParams};
use cohen_lenstra::{qseries, BoundedReal, Partition, Prime};
use num_traits::{One, Zero};
use serde::Serialize;

/// What a command produced.
pub struct Outcome {
    pub payload: Vec<u8>,
    /// Diagnostics for stderr.
    pub notes: Vec<String>,
    /// Also print the payload to stdout when it goes to a file.
    pub echo: bool,
    pub failed: bool,
}

impl Outcome {
    fn text(payload: String) -> Self {
        Outcome {
            payload: payload.into_bytes(),
            notes: Vec::new(),
            echo: false,
            failed: false,
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// Anything else that stops a run; exit code 1.
    Runtime(String),
}

impl From<cohen_lenstra::Error> for CliError {
    fn from(e: cohen_lenstra::Error) -> Self {
        use cohen_lenstra::Error as E;
        match e {
            E::InvalidPartition(_)
            | E::NotPrime(_)
            | E::OutOfRange(_)
            | E::EnumerationCap { .. }
            | E::TooManyParts { .. }
            | E::KernelSupport { .. }
            | E::NotSquare { .. }
            | E::Parse(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<Outcome, CliError>;

pub fn prime_arg(s: &str) -> Result<u64, String> {
    let v: u64 = s.trim().parse().map_err(|_| format!("not an integer: {s:?}"))?;
    Prime::new(v).map(|p| p.get() as u64).map_err(|e| e.to_string())
}

fn prime(v: u64) -> Prime {
    Prime::new(v).expect("validated by the argument parser")
}

fn rational_arg(flag: &str, s: &str) -> Result<ExactRational, CliError> {
    parse_rational(s).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn output_enclosure(b: BoundedReal) -> BoundedReal {
    if b.is_exact() {
        b
    } else {
        b.rounded(measures::OUTPUT_BITS)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Wood,
    Deformed,
    Truncated,
    Size,
    Parts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Serialize)]
pub struct PmfArgs {
    #[arg(long, value_enum)]
    pub measure: MeasureKind,
    #[arg(long, value_parser = prime_arg)]
    pub p: u64,
    /// Single partition, e.g. "[2,1]".
    #[arg(long, conflicts_with = "max_size")]
    pub partition: Option<String>,
    /// Tabulate every partition (or size / part count) up to this size.
    #[arg(long)]
    pub max_size: Option<u32>,
    /// Deformation parameter, 0 < u < p.
    #[arg(long)]
    pub u: Option<String>,
    /// Part-count bound for the truncated measure.
    #[arg(long)]
    pub r: Option<u32>,
    /// Size, for `--measure size`.
    #[arg(long, conflicts_with = "max_size")]
    pub n: Option<u32>,
    /// Number of parts, for `--measure parts`.
    #[arg(long, conflicts_with = "max_size")]
    pub a: Option<u32>,
    /// Defaults to text for a single value and json for tables.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct SingleJson<'a> {
    measure: &'a str,
    p: u32,
    params: std::collections::BTreeMap<String, serde_json::Value>,
    partition: String,
    constant: String,
    rational: String,
    mid: String,
    rad: String,
}

#[derive(Serialize)]
struct ScalarRow {
    #[serde(flatten)]
    key: std::collections::BTreeMap<&'static str, u32>,
    constant: String,
    rational: String,
    mid: String,
    rad: String,
}

#[derive(Serialize)]
struct ScalarTable<'a> {
    measure: &'a str,
    p: u32,
    entries: Vec<ScalarRow>,
}

fn constant_note(p: Prime, measure: &Measure) -> Result<String, CliError> {
    let tol = measures::constant_tolerance();
    Ok(match measure {
        Measure::Wood => format!("C_P (p={p}) = {}", qseries::odd_constant(p, &tol)?),
        Measure::Deformed { u } => format!(
            "DEFORMED({}) (p={p}) = {}",
            format_rational(u),
            qseries::deformed_constant(p, u, &tol)?
        ),
        Measure::Truncated { .. } => "exact rational measure, no infinite product".to_string(),
    })
}

fn build_measure(args: &PmfArgs) -> Result<Measure, CliError> {
    match args.measure {
        MeasureKind::Deformed => {
            let u = args
                .u
                .as_deref()
                .ok_or_else(|| CliError::Usage("--u is required for the deformed measure".into()))?;
            Ok(Measure::Deformed {
                u: rational_arg("u", u)?,
            })
        }
        MeasureKind::Truncated => {
            let r = args
                .r
                .ok_or_else(|| CliError::Usage("--r is required for the truncated measure".into()))?;
            Ok(Measure::Truncated { r })
        }
        _ => Ok(Measure::Wood),
    }
}

pub fn pmf(args: &PmfArgs) -> CmdResult {
    let p = prime(args.p);
    let tol = measures::constant_tolerance();
    if matches!(args.measure, MeasureKind::Size | MeasureKind::Parts) {
        return pmf_scalar(args, p);
    }
    let measure = build_measure(args)?;
    let note = constant_note(p, &measure)?;
    if let Some(text) = &args.partition {
        let lambda: Partition = text.parse()?;
        let mass = measure.mass(&lambda, p)?;
        let value = output_enclosure(mass.enclose(p, &tol)?);
        let payload = match args.format.unwrap_or(Format::Text) {
            Format::Text => format!(
                "{} p={p} {lambda}\nmass  {mass}\nvalue {value}\n",
                measure.name()
            ),
            Format::Csv => format!(
                "partition,midpoint,radius\n\"{lambda}\",{:e},{:e}\n",
                value.mid_f64(),
                value.rad_f64()
            ),
            Format::Json => json_line(&SingleJson {
                measure: measure.name(),
                p: p.get(),
                params: measure.params(),
                partition: lambda.to_string(),
                constant: mass.tag.to_string(),
                rational: format_rational(&mass.rational),
                mid: format_rational(value.mid()),
                rad: format_rational(value.rad()),
            }),
        };
        return Ok(Outcome::text(payload).note(note));
    }
    let max_size = args
        .max_size
        .ok_or_else(|| CliError::Usage("one of --partition or --max-size is required".into()))?;
    let table = measures::tabulate(p, max_size, &measure)?;
    let payload = match args.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut s = table.to_json()?;
            s.push('\n');
            s
        }
        Format::Csv => table.to_csv()?,
        Format::Text => {
            let mut s = String::new();
            for (lambda, mass) in &table.entries {
                let v = mass.enclose(p, &tol)?;
                writeln!(s, "{lambda}\t{mass}\t{v}").unwrap();
            }
            writeln!(s, "tail\t\t{}", table.tail_mass).unwrap();
            s
        }
    };
    Ok(Outcome::text(payload).note(note))
}

fn pmf_scalar(args: &PmfArgs, p: Prime) -> CmdResult {
    let (key, single) = match args.measure {
        MeasureKind::Size => ("n", args.n),
        _ => ("a", args.a),
    };
    let range = match (single, args.max_size) {
        (Some(k), _) => k..=k,
        (None, Some(m)) => 0..=m,
        (None, None) => {
            return Err(CliError::Usage(format!(
                "one of --{key} or --max-size is required"
            )))
        }
    };
    let tol = measures::constant_tolerance();
    let mut rows = Vec::new();
    for k in range {
        let mass: MassValue = match args.measure {
            MeasureKind::Size => measures::pmf_size(k, p),
            _ => measures::pmf_parts(k, p),
        };
        let value = output_enclosure(mass.enclose(p, &tol)?);
        rows.push((k, mass, value));
    }
    let name = if key == "n" { "size" } else { "parts" };
    let payload = match args.format.unwrap_or(if single.is_some() { Format::Text } else { Format::Json }) {
        Format::Text => rows
            .iter()
            .map(|(k, m, v)| format!("{name} p={p} {key}={k}\nmass  {m}\nvalue {v}\n"))
            .collect(),
        Format::Csv => {
            let mut s = format!("{key},midpoint,radius\n");
            for (k, _, v) in &rows {
                writeln!(s, "{k},{:e},{:e}", v.mid_f64(), v.rad_f64()).unwrap();
            }
            s
        }
        Format::Json => json_line(&ScalarTable {
            measure: name,
            p: p.get(),
            entries: rows
                .into_iter()
                .map(|(k, m, v)| ScalarRow {
                    key: [(key, k)].into(),
                    constant: m.tag.to_string(),
                    rational: format_rational(&m.rational),
                    mid: format_rational(v.mid()),
                    rad: format_rational(v.rad()),
                })
                .collect(),
        }),
    };
    Ok(Outcome::text(payload).note(constant_note(p, &Measure::Wood)?))
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long, value_parser = prime_arg)]
    pub p: u64,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Tail mass at which the first column's support is truncated.
    #[arg(long)]
    pub cutoff: Option<String>,
    /// Write a frequency table instead of one partition per line.
    #[arg(long)]
    pub summary: bool,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn sample(args: &SampleArgs) -> CmdResult {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut config = SamplerConfig::new(prime(args.p), args.seed);
    if let Some(c) = &args.cutoff {
        let c = rational_arg("cutoff", c)?;
        if c <= ExactRational::zero() || c >= ExactRational::one() {
            return Err(CliError::Usage("--cutoff must lie strictly inside (0,1)".into()));
        }
        config.initial_tail_cutoff = c;
    }
    let column = ColumnSampler::from_config(&config)?;
    let note = format!(
        "first column truncated at height {}, dropped mass <= {:.3e}",
        column.max_height(),
        rational::to_f64(&column.initial().tail_bound)
    );
    let payload = if args.summary {
        let mut s = sampler::empirical_distribution(&config, args.trials)?.to_json()?;
        s.push('\n');
        s
    } else {
        let mut s = String::new();
        for t in 0..args.trials {
            let lambda = column.sample(&mut sampler::trial_rng(args.seed, t))?;
            writeln!(s, "{lambda}").unwrap();
        }
        s
    };
    Ok(Outcome::text(payload).note(note))
}

#[derive(Args, Debug, Serialize)]
pub struct GraphsArgs {
    /// Number of vertices.
    #[arg(long)]
    pub n: usize,
    /// Edge probability, "a/b" or decimal-free integer form.
    #[arg(long)]
    pub q: String,
    #[arg(long, value_parser = prime_arg)]
    pub p: u64,
    /// Graphs generated; disconnected ones are counted and skipped.
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Valuations at or above this are recorded as the cap.
    #[arg(long, default_value_t = DEFAULT_VALUATION_CAP)]
    pub cap: u32,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn graphs(args: &GraphsArgs) -> CmdResult {
    if args.n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {}", args.n)));
    }
    let q = rational_arg("q", &args.q)?;
    if q <= ExactRational::zero() || q >= ExactRational::one() {
        return Err(CliError::Usage(format!(
            "--q must lie strictly inside (0,1), got {}",
            format_rational(&q)
        )));
    }
    if args.trials == 0 || args.cap == 0 {
        return Err(CliError::Usage("--trials and --cap must be at least 1".into()));
    }
    let result = sandpile::run_experiment(&ExperimentConfig {
        n: args.n,
        q,
        p: prime(args.p),
        trials: args.trials,
        seed: args.seed,
        cap: args.cap,
    })?;
    let note = format!(
        "connected {} of {}, discarded {}, capped {}",
        result.connected, args.trials, result.discarded_disconnected, result.capped_count
    );
    if result.connected == 0 {
        return Err(CliError::Runtime(format!("no connected graphs ({note})")));
    }
    let mut s = result.to_distribution()?.to_json()?;
    s.push('\n');
    let trivial = rational::to_f64(&sandpile::trivial_frequency(&result));
    Ok(Outcome::text(s)
        .note(note)
        .note(format!("trivial {}-part frequency {trivial:.4}", args.p)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Identities,
    Recursions,
    Chain,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteKind,
    /// Comma-separated primes.
    #[arg(long, value_parser = prime_arg, value_delimiter = ',', default_value = "2,3")]
    pub p: Vec<u64>,
    /// Enumeration depth for truncated sums.
    #[arg(long, default_value_t = 40)]
    pub depth: u32,
    /// Largest part count / column height checked.
    #[arg(long, default_value_t = 30)]
    pub a_max: u32,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    if args.depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let suite = match args.suite {
        SuiteKind::Identities => Suite::Identities,
        SuiteKind::Recursions => Suite::Recursions,
        SuiteKind::Chain => Suite::Chain,
    };
    let params = SuiteParams {
        primes: args.p.iter().map(|&p| prime(p)).collect(),
        depth: args.depth,
        a_max: args.a_max,
    };
    let checks = verify::run_suite(suite, &params)?;
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut s = String::new();
    for c in &checks {
        writeln!(s, "{c}").unwrap();
    }
    writeln!(s, "{passed}/{} checks passed", checks.len()).unwrap();
    let mut out = Outcome::text(s);
    out.echo = true;
    out.failed = passed != checks.len();
    Ok(out)
}

#[derive(Args, Debug, Serialize)]
pub struct SylowArgs {
    /// Edge-list file: header "n <count>", then one "u v" per line.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_parser = prime_arg)]
    pub p: u64,
    /// Vertex removed from the Laplacian; defaults to the highest label.
    #[arg(long)]
    pub root: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_VALUATION_CAP)]
    pub cap: u32,
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn sylow(args: &SylowArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.graph)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.graph.display())))?;
    let g: Graph = text.parse()?;
    if !g.is_connected() {
        return Err(CliError::Usage("graph is disconnected; its sandpile group is infinite".into()));
    }
    let root = args.root.unwrap_or(g.vertex_count() - 1);
    let m = sandpile::reduced_laplacian(&g, root)?;
    let (lambda, capped) = sandpile::p_sylow_partition(&m, prime(args.p), args.cap)?;
    let trees = sandpile::spanning_tree_count(&g)?;
    Ok(Outcome::text(format!(
        "partition {lambda}\ncapped {capped}\nspanning_trees {trees}\n"
    )))
}
