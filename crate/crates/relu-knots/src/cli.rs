//! The `relu-knots` command line.
//!
//! Exit codes: 0 success, 2 input error, 3 ineligible architecture,
//! 4 oracle mismatch, 5 depth error. Internal failures exit with 1.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relu_knots_core::bounds::ineligibility_reason;
use relu_knots_core::canonical::{to_forward_facing, CanonicalShallowForm};
use relu_knots_core::construct::{build_tight_network, ConstructError};
use relu_knots_core::rational::{self, Rational};
use relu_knots_core::{Architecture, ScalarInputNetwork};
use serde::Serialize;
use serde_json::json;

use crate::export::{read_csv, write_csv};
use crate::format::{load_network, network_to_json};
use crate::verify::{self, SamplingConfig, DEFAULT_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INELIGIBLE: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_DEPTH: i32 = 5;

pub const SEED_ENV: &str = "RELU_KNOTS_SEED";

/// Random points used by `canonicalize` to check the rewritten form.
const EQUIVALENCE_POINTS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "relu-knots",
    version,
    about = "Exact knot analysis of scalar-input ReLU networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Knot bound of an architecture given by its hidden widths.
    Bound {
        #[arg(required = true)]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long)]
        json: bool,
    },
    /// Build a network that attains the knot bound.
    Build {
        #[arg(required = true)]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// Write the network JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the exact knots of a network file.
    Analyze {
        file: PathBuf,
        /// Also print the knot count of every hidden neuron.
        #[arg(long)]
        layers: bool,
        /// Write the per-output knot table here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Check the exact knots against floating-point sampling.
    Verify(VerifyArgs),
    /// Rewrite a one-hidden-layer network with forward-facing ReLUs.
    Canonicalize {
        file: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Args)]
struct SeedArg {
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Also run this many random networks of the file's architecture
    /// against the bound.
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Sampling interval; defaults to [-1, n1] widened to cover every knot.
    #[arg(long, allow_hyphen_values = true)]
    low: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    high: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Compare against this knot table (as written by `analyze --csv`)
    /// instead of a fresh extraction.
    #[arg(long)]
    knots: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

/// A failed command: exit code plus message for stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }

    fn input(message: impl ToString) -> Self {
        Self::new(EXIT_INPUT, message)
    }
}

type Outcome = Result<i32, Failure>;

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Bound { widths, p, json } => cmd_bound(widths, p, json, out),
        Command::Build {
            widths,
            p,
            out: path,
        } => cmd_build(widths, p, path.as_deref(), out),
        Command::Analyze {
            file,
            layers,
            csv,
            json,
        } => cmd_analyze(&file, layers, csv.as_deref(), json, out),
        Command::Verify(args) => cmd_verify(args, out),
        Command::Canonicalize { file, seed } => cmd_canonicalize(&file, seed.seed, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(EXIT_INTERNAL, e)
}

fn architecture(widths: Vec<usize>, p: usize) -> Result<Architecture, Failure> {
    Architecture::try_new(widths, p, 1).map_err(Failure::input)
}

fn load(path: &Path) -> Result<ScalarInputNetwork, Failure> {
    load_network(path).map_err(Failure::input)
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_INTERNAL, e))?;
    writeln!(out, "{text}").map_err(io_failure)
}

fn list<T: ToString>(items: &[T]) -> String {
    let items: Vec<String> = items.iter().map(T::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn bound_error(e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_INTERNAL, e)
}

fn cmd_bound(widths: Vec<usize>, p: usize, as_json: bool, out: &mut dyn Write) -> Outcome {
    let arch = architecture(widths, p)?;
    let bound = arch.knot_bound().map_err(bound_error)?;
    let prefixes = arch.prefix_bounds().map_err(bound_error)?;
    let approx = arch.approx_bound().map_err(bound_error)?;
    let params = arch.param_count();
    let tightness = arch.tightness();
    if as_json {
        let strings = |v: &[BigUint]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        print_json(
            out,
            &json!({
                "widths": arch.widths(),
                "p": arch.output_dim(),
                "bound": bound.to_string(),
                "prefix_bounds": strings(&prefixes),
                "approx_bound": approx.to_string(),
                "param_count": params.to_string(),
                "tightness": tightness.as_str(),
                "reason": ineligibility_reason(arch.widths()).map(|r| r.to_string()),
            }),
        )?;
    } else {
        let mut text = format!(
            "bound: {bound}\nprefix_bounds: {}\napprox_bound: {approx}\nparam_count: {params}\ntightness: {tightness}\n",
            list(&prefixes)
        );
        if let Some(reason) = ineligibility_reason(arch.widths()) {
            text.push_str(&format!("reason: {reason}\n"));
        }
        out.write_all(text.as_bytes()).map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

fn cmd_build(widths: Vec<usize>, p: usize, path: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let arch = architecture(widths, p)?;
    let net = build_tight_network(&arch).map_err(|e| match e {
        ConstructError::Ineligible(reason) => Failure::new(EXIT_INELIGIBLE, reason),
        ConstructError::TooNarrow { .. } => Failure::new(EXIT_INELIGIBLE, e),
        other => Failure::new(EXIT_INTERNAL, other),
    })?;
    let report = net.knot_report();
    if !report.meets_bound {
        return Err(Failure::new(
            EXIT_INTERNAL,
            format!(
                "built network has {} knots, bound is {}",
                report.output_knots, report.bound
            ),
        ));
    }
    if let Some(path) = path {
        std::fs::write(path, network_to_json(&net) + "\n")
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    writeln!(
        out,
        "knots: {} (bound {})",
        report.output_knots, report.bound
    )
    .map_err(io_failure)?;
    Ok(EXIT_OK)
}

fn cmd_analyze(
    path: &Path,
    layers: bool,
    csv: Option<&Path>,
    as_json: bool,
    out: &mut dyn Write,
) -> Outcome {
    let net = load(path)?;
    let trace = net.extract();
    let report = net.knot_report();
    let neuron_counts: Vec<Vec<usize>> = trace
        .per_layer_neuron_splines
        .iter()
        .map(|v| v.components().iter().map(|f| f.knot_count()).collect())
        .collect();
    if let Some(csv_path) = csv {
        std::fs::write(csv_path, write_csv(&trace.output_splines))
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    if as_json {
        print_json(
            out,
            &json!({
                "widths": net.widths(),
                "layer_knot_counts": report.layer_knot_counts,
                "neuron_knot_counts": layers.then_some(&neuron_counts),
                "per_output_knots": report.per_output_knots,
                "output_knots": report.output_knots,
                "bound": report.bound.to_string(),
                "meets_bound": report.meets_bound,
                "tightness": report.tightness.as_str(),
            }),
        )?;
    } else {
        let mut text = format!("layer_knot_counts: {}\n", list(&report.layer_knot_counts));
        if layers {
            for (i, counts) in neuron_counts.iter().enumerate() {
                text.push_str(&format!(
                    "layer {} neuron_knot_counts: {}\n",
                    i + 1,
                    list(counts)
                ));
            }
        }
        text.push_str(&format!(
            "per_output_knots: {}\noutput_knots: {}\nbound: {}\nmeets_bound: {}\n",
            list(&report.per_output_knots),
            report.output_knots,
            report.bound,
            report.meets_bound
        ));
        out.write_all(text.as_bytes()).map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

fn parse_endpoint(text: Option<&str>, name: &str) -> Result<Option<Rational>, Failure> {
    text.map(|t| rational::parse(t).map_err(|e| Failure::input(format!("--{name}: {e}"))))
        .transpose()
}

/// Knot locations from a table written by `analyze --csv`, merged over
/// outputs.
fn knots_from_table(path: &Path) -> Result<Vec<Rational>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let exports =
        read_csv(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut knots: Vec<Rational> = exports
        .into_iter()
        .flat_map(|e| e.knots.into_iter().map(|k| k.x))
        .collect();
    knots.sort();
    knots.dedup();
    Ok(knots)
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let net = load(&args.file)?;
    let exact = match &args.knots {
        Some(path) => knots_from_table(path)?,
        None => net.extract().output_knot_union(),
    };
    let n1 = net.widths()[0] as i64;
    let low = parse_endpoint(args.low.as_deref(), "low")?.unwrap_or_else(|| {
        let default = rational::int(-1);
        match exact.first() {
            Some(k) if *k <= default => k - rational::int(1),
            _ => default,
        }
    });
    let high = parse_endpoint(args.high.as_deref(), "high")?.unwrap_or_else(|| {
        let default = rational::int(n1);
        match exact.last() {
            Some(k) if *k >= default => k + rational::int(1),
            _ => default,
        }
    });
    let cfg =
        SamplingConfig::new(low, high, args.samples, args.tolerance).map_err(Failure::input)?;
    let comparison = verify::oracle_agreement(&net, &exact, &cfg);
    let stress = (args.trials > 0)
        .then(|| verify::stress_bound(&net.architecture(), args.trials, args.seed.seed))
        .transpose()
        .map_err(|e| Failure::new(EXIT_INTERNAL, e))?;
    if args.json {
        print_json(
            out,
            &json!({
                "interval": [cfg.low().to_string(), cfg.high().to_string()],
                "samples": cfg.samples(),
                "tolerance": cfg.tolerance(),
                "comparison": comparison,
                "stress": stress,
            }),
        )?;
    } else {
        let mut text = format!(
            "interval: [{}, {}]\nsamples: {}\nexact_knots: {}\ndetected_knots: {}\nmax_error: {:e}\ngrid_step: {:e}\nagree: {}\n",
            cfg.low(),
            cfg.high(),
            cfg.samples(),
            comparison.exact_knots,
            comparison.detected_knots,
            comparison.max_error,
            comparison.grid_step,
            comparison.agree
        );
        if let Some(s) = &stress {
            text.push_str(&format!(
                "stress: {} trials, seed {}, max observed {}, bound {}, violations {}\n",
                s.trials, s.seed, s.max_observed, s.bound, s.violations
            ));
            if let Some(gap) = &s.gap {
                text.push_str(&format!("stress gap: {gap} ({})\n", s.note));
            }
        }
        out.write_all(text.as_bytes()).map_err(io_failure)?;
    }
    let bound_held = stress.as_ref().is_none_or(|s| s.violations == 0);
    Ok(if comparison.agree && bound_held {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

/// `count` points `n/d` with `n` in [-1000, 1000] and `d` in [1, 100].
pub fn seeded_points(seed: u64, count: usize) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| rational::ratio(rng.random_range(-1000..=1000), rng.random_range(1..=100)))
        .collect()
}

fn strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(ToString::to_string).collect()
}

fn canonical_json(form: &CanonicalShallowForm, seed: u64, agree: bool) -> serde_json::Value {
    json!({
        "knot_locations": strings(&form.knot_locations),
        "ray_slopes": form.ray_slopes.iter().map(|r| strings(r)).collect::<Vec<_>>(),
        "line_slope": strings(&form.line_slope),
        "line_intercept": strings(&form.line_intercept),
        "folded_neurons": form.folded_neurons,
        "equivalence": { "points": EQUIVALENCE_POINTS, "seed": seed, "agree": agree },
    })
}

fn cmd_canonicalize(path: &Path, seed: u64, out: &mut dyn Write) -> Outcome {
    let net = load(path)?;
    let form = to_forward_facing(&net).map_err(|e| Failure::new(EXIT_DEPTH, e))?;
    let agree = seeded_points(seed, EQUIVALENCE_POINTS)
        .iter()
        .all(|x| form.eval(x) == net.evaluate(x));
    print_json(out, &canonical_json(&form, seed, agree))?;
    Ok(if agree { EXIT_OK } else { EXIT_MISMATCH })
}
