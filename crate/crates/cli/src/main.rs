mod reproduce;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deltahazard::datasets;
use deltahazard::*;
use serde::Serialize;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(
    name = "deltahazard",
    version,
    about = "Hazard-rate inference from delta-records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract records and near-records from a raw sequence.
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, short)]
        k: u32,
        /// Print the count table instead of the sample.
        #[arg(long)]
        counts: bool,
    },
    /// Estimate the hazard rates.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, short)]
        k: u32,
        #[arg(long, value_enum, default_value_t = VariantArg::Auto)]
        variant: VariantArg,
        /// Constrain the estimate to be monotone.
        #[arg(long, value_enum)]
        monotone: Option<MonotoneArg>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Confidence interval for h_j.
    Ci {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, short)]
        k: u32,
        /// Value j on the original scale.
        #[arg(long, short)]
        j: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Bootstrap likelihood-ratio goodness-of-fit test.
    Gof {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, short)]
        k: u32,
        /// `geometric` or `poisson` (parameters fitted), or a fully
        /// specified family such as `geometric:p=0.4`.
        #[arg(long)]
        null: NullSpec,
        #[arg(long = "B", short = 'B', default_value_t = inference::DEFAULT_BOOTSTRAP)]
        b: usize,
        #[arg(long, env = "DELTAHAZARD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Resampling design; defaults to the raw length for sequences and
        /// the record count for pre-collected samples.
        #[arg(long, value_enum)]
        design: Option<DesignArg>,
    },
    /// Exact law of the estimator.
    ExactDist {
        #[command(subcommand)]
        query: DistQuery,
    },
    /// Simulate delta-record samples as JSON lines.
    Simulate {
        #[arg(long)]
        family: ParametricFamily,
        #[arg(long, short)]
        k: u32,
        /// `length:N`, `nrecords:N` or `threshold:T`.
        #[arg(long)]
        stop: StopRule,
        #[arg(long, visible_alias = "reps", default_value_t = 1)]
        replicates: usize,
        #[arg(long, env = "DELTAHAZARD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = sim::DEFAULT_ITERATION_CAP)]
        iteration_cap: u64,
        /// Write the samples here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate a published table or figure data set.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
        #[arg(long, env = "DELTAHAZARD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long = "B", short = 'B', default_value_t = inference::DEFAULT_BOOTSTRAP)]
        b: usize,
        /// Directory for plot data and sidecars.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Data file, or `-` for standard input. A JSON object is read as a
    /// pre-collected delta-record sample.
    #[arg(default_value = "-", conflicts_with = "dataset")]
    input: String,
    /// Use an embedded data set instead of a file.
    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    /// Smallest value of the support.
    #[arg(long, default_value_t = 0)]
    offset: u64,
}

#[derive(Subcommand)]
enum DistQuery {
    Pmf {
        #[command(flatten)]
        params: LawArgs,
        /// Rational point `a/b`.
        #[arg(long)]
        q: String,
    },
    Cdf {
        #[command(flatten)]
        params: LawArgs,
        #[arg(long, required_unless_present = "curve")]
        x: Option<f64>,
        /// Print the cdf on this many grid points of [0, 1] as two columns.
        #[arg(long, conflicts_with = "x")]
        curve: Option<usize>,
    },
    Moments {
        #[command(flatten)]
        params: LawArgs,
    },
}

#[derive(Args)]
struct LawArgs {
    #[arg(long, requires = "d", conflicts_with = "family")]
    h: Option<f64>,
    #[arg(long, requires = "h")]
    d: Option<f64>,
    /// Take (h, d) from a family at `--j` and `--k`; these may also be
    /// given inside the family, as in `geometric:p=0.5,k=2`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, short)]
    j: Option<u64>,
    #[arg(long, short)]
    k: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    XieGoh,
    Earthquakes,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Auto,
    Plain,
    Incomplete,
}

#[derive(Clone, Copy, ValueEnum)]
enum MonotoneArg {
    Inc,
    Dec,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    Raw,
    Records,
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::IterationCap { .. } => 3,
            Error::InvalidParameter(_) => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::data(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

enum Input {
    Sequence(IntSequence),
    Sample(DeltaRecordSample),
}

impl Input {
    fn sample(&self, k: u32) -> CliResult<DeltaRecordSample> {
        match self {
            Self::Sequence(seq) => Ok(extract_delta_records(seq, k)?),
            Self::Sample(s) if s.k() == k => Ok(s.clone()),
            Self::Sample(s) if k < s.k() => Ok(reduce_k(s, k)?),
            Self::Sample(s) => Err(Failure::usage(format!(
                "the sample was collected with k = {}; cannot analyse it with k = {k}",
                s.k()
            ))),
        }
    }
}

fn read_input(args: &InputArgs) -> CliResult<Input> {
    if let Some(d) = args.dataset {
        return Ok(Input::Sequence(match d {
            DatasetArg::XieGoh => datasets::xie_goh(),
            DatasetArg::Earthquakes => datasets::earthquakes(),
        }));
    }
    let mut text = String::new();
    if args.input == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(&args.input)
            .map_err(|e| Failure::data(format!("{}: {e}", args.input)))?;
    }
    if text.trim_start().starts_with('{') {
        let sample: DeltaRecordSample = serde_json::from_str(&text)
            .map_err(|e| Failure::data(format!("invalid sample JSON: {e}")))?;
        Ok(Input::Sample(sample))
    } else {
        Ok(Input::Sequence(IntSequence::parse(&text, args.offset)?))
    }
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn run(command: Command) -> CliResult<String> {
    match command {
        Command::Extract { input, k, counts } => {
            let sample = read_input(&input)?.sample(k)?;
            Ok(if counts {
                json(&count_table(&sample))
            } else {
                json(&sample)
            })
        }
        Command::Estimate {
            input,
            k,
            variant,
            monotone,
            format,
        } => {
            let counts = count_table(&read_input(&input)?.sample(k)?);
            let likelihood = match variant {
                VariantArg::Auto => counts.default_likelihood(),
                VariantArg::Plain => Likelihood::Complete,
                VariantArg::Incomplete => Likelihood::Incomplete,
            };
            let est = match monotone {
                Some(MonotoneArg::Inc) => {
                    npmle_isotonic(&counts, Direction::Increasing, likelihood)
                }
                Some(MonotoneArg::Dec) => {
                    npmle_isotonic(&counts, Direction::Decreasing, likelihood)
                }
                None if likelihood == Likelihood::Complete => npmle_plain(&counts),
                None => npmle_incomplete(&counts),
            };
            Ok(match format {
                Format::Csv => est.to_csv(),
                Format::Json => json(&est),
            })
        }
        Command::Ci { input, k, j, alpha } => {
            let counts = count_table(&read_input(&input)?.sample(k)?);
            let internal = j.checked_sub(counts.offset()).ok_or_else(|| {
                Failure::data(format!(
                    "j = {j} is below the support offset {}",
                    counts.offset()
                ))
            })?;
            Ok(json(&confidence_interval(&counts, internal, alpha)?))
        }
        Command::Gof {
            input,
            k,
            null,
            b,
            seed,
            design,
        } => {
            let input = read_input(&input)?;
            let sample = input.sample(k)?;
            let design = match (design, &input) {
                (Some(DesignArg::Raw), Input::Sequence(seq)) | (None, Input::Sequence(seq)) => {
                    Design::RawLength(seq.len() as u64)
                }
                (Some(DesignArg::Raw), Input::Sample(_)) => {
                    return Err(Failure::usage(
                        "a raw-length design needs a raw sequence as input",
                    ))
                }
                (Some(DesignArg::Records), _) | (None, Input::Sample(_)) => {
                    Design::Records(sample.record_count())
                }
            };
            let sample = match design {
                Design::Records(_) => sample.with_last_record_complete(true),
                Design::RawLength(_) => sample,
            };
            Ok(json(&bootstrap_pvalue(&sample, design, null, b, seed)?))
        }
        Command::ExactDist { query } => exact_dist(query),
        Command::Simulate {
            family,
            k,
            stop,
            replicates,
            seed,
            iteration_cap,
            out: path,
        } => {
            let spec = SimSpec {
                iteration_cap,
                ..SimSpec::new(family, k, stop, seed, replicates)
            };
            let mut out = String::new();
            for (i, r) in simulate(&spec)?.into_iter().enumerate() {
                let sample =
                    r.map_err(|e| Failure::from(e).with_context(&format!("replicate {i}")))?;
                let line = serde_json::json!({ "replicate": i, "seed": seed, "sample": sample });
                out.push_str(&line.to_string());
                out.push('\n');
            }
            match path {
                Some(path) => {
                    std::fs::write(&path, out)
                        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
                    Ok(format!("seed {seed}\n"))
                }
                None => Ok(out),
            }
        }
        Command::Reproduce {
            target,
            seed,
            b,
            out,
        } => reproduce::run(target, seed, b, &out),
    }
}

impl Failure {
    fn with_context(mut self, context: &str) -> Self {
        self.message = format!("{context}: {}", self.message);
        self
    }
}

fn law(params: &LawArgs) -> CliResult<EstimatorLaw> {
    match (params.h, params.d, &params.family) {
        (Some(h), Some(d), None) => Ok(EstimatorLaw::new(h, d)?),
        (None, None, Some(spec)) => {
            let (mut j, mut k) = (params.j, params.k);
            let mut rest = Vec::new();
            let (name, list) = spec.split_once(':').unwrap_or((spec, ""));
            for kv in list.split(',') {
                match kv.split_once('=').map(|(a, b)| (a.trim(), b.trim())) {
                    Some(("j", v)) => {
                        j = Some(
                            v.parse()
                                .map_err(|_| Failure::usage(format!("bad j {v:?}")))?,
                        )
                    }
                    Some(("k", v)) => {
                        k = Some(
                            v.parse()
                                .map_err(|_| Failure::usage(format!("bad k {v:?}")))?,
                        )
                    }
                    _ => rest.push(kv),
                }
            }
            let fam: ParametricFamily = format!("{name}:{}", rest.join(",")).parse()?;
            let (j, k) = (
                j.unwrap_or(0),
                k.ok_or_else(|| Failure::usage("--family needs k"))?,
            );
            let hv = HazardVector::of_family(fam, j + u64::from(k))?;
            let cq = hv.conditional_quantities(j, k)?;
            Ok(EstimatorLaw::with_gap(cq.hazards[0], cq.survival)?)
        }
        _ => Err(Failure::usage(
            "give either --h and --d, or --family with k (and j, default 0)",
        )),
    }
}

fn exact_dist(query: DistQuery) -> CliResult<String> {
    #[derive(Serialize)]
    struct Point {
        h: f64,
        d: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        q: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        pmf: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cdf: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        moments: Option<Moments>,
    }
    let (params, mut point) = match &query {
        DistQuery::Pmf { params, .. }
        | DistQuery::Cdf { params, .. }
        | DistQuery::Moments { params } => {
            let l = law(params)?;
            (
                l,
                Point {
                    h: l.h(),
                    d: l.d(),
                    q: None,
                    x: None,
                    pmf: None,
                    cdf: None,
                    moments: None,
                },
            )
        }
    };
    match query {
        DistQuery::Pmf { q, .. } => {
            let (a, b) = q
                .split_once('/')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Failure::usage(format!("expected a/b, got {q:?}")))?;
            let r = RationalQ::new(a, b)?;
            point.q = Some(format!("{}/{}", r.numer(), r.denom()));
            point.pmf = Some(params.pmf(r));
        }
        DistQuery::Cdf { curve: Some(n), .. } => {
            let n = n.max(2);
            let mut out = format!("# h = {} d = {}\n", params.h(), params.d());
            for i in 0..n {
                let x = i as f64 / (n - 1) as f64;
                // The estimator is below 1 almost surely.
                let g = if i + 1 == n { 1.0 } else { params.cdf(x)? };
                out.push_str(&format!("{x:.6} {g:.10}\n"));
            }
            return Ok(out);
        }
        DistQuery::Cdf { x, .. } => {
            let x = x.expect("clap requires x without curve");
            point.x = Some(x);
            point.cdf = Some(params.cdf(x)?);
        }
        DistQuery::Moments { .. } => point.moments = Some(params.moments()?),
    }
    Ok(json(&point))
}
