use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use multirr::bench::{self, ChisqConfig, SweepOptions};
use multirr::calibration::calibrate;
use multirr::dataset::{load_schema, Dataset};
use multirr::heuristic::heuristic_build_with;
use multirr::lp::LinearProgram;
use multirr::mechanism::{self, build_mechanism, perturb_all, Sampler};
use multirr::{AttributeSchema, DistortionSpec, MechanismReport, Method, PrivacyBudget};
use serde_json::json;

#[derive(Parser)]
#[command(name = "multirr", version, about = "Build, audit and apply multi-attribute randomized response")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct mechanisms.
    Mechanism {
        #[command(subcommand)]
        action: MechanismCmd,
    },
    /// Perturb a CSV dataset with a mechanism.
    Perturb {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the privacy levels of a mechanism.
    Audit {
        #[arg(long)]
        spec: PathBuf,
        /// Also audit the explicit matrix (domain size at most 1024).
        #[arg(long)]
        materialize: bool,
    },
    /// Find per-attribute levels that fit a total level.
    Calibrate {
        #[command(flatten)]
        schema: SchemaArgs,
        #[arg(long)]
        total: f64,
        /// Comma-separated ratios; uniform when omitted.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value = "heuristic")]
        method: Method,
        /// Write the calibrated mechanism here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random levels at a fixed domain size.
    SweepEps {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        a: u32,
        #[arg(long, default_value_t = 1.0)]
        eps_min: f64,
        #[arg(long, default_value_t = 8.0)]
        eps_max: f64,
        #[command(flatten)]
        common: SweepArgs,
    },
    /// Random domain sizes at a fixed level.
    SweepA {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 3.0)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        a_min: u32,
        #[arg(long, default_value_t = 6)]
        a_max: u32,
        #[command(flatten)]
        common: SweepArgs,
    },
    /// χ² utility experiment on synthetic SNP tables.
    Chisq {
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Overall level every method is calibrated to.
        #[arg(long)]
        total: f64,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "heuristic,kronecker")]
        methods: Vec<Method>,
        /// Per-(method, run, SNP) errors as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median build time per method and k.
    BenchRuntime {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,10,100,1000")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "optimal,heuristic,kronecker")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = bench::LP_BENCH_MAX_K)]
        lp_max_k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MechanismCmd {
    /// Build a mechanism for given domain sizes and levels.
    Build {
        #[command(flatten)]
        schema: SchemaArgs,
        /// One level per attribute, or a single level for all.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value = "heuristic")]
        method: Method,
        /// Spec file to write; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the LP matrices as CSV into this directory.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Fold heuristic attributes in input order instead of by
        /// descending level.
        #[arg(long)]
        input_order: bool,
    },
}

#[derive(Args)]
struct SchemaArgs {
    /// Comma-separated domain sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "schema", required_unless_present = "schema")]
    sizes: Option<Vec<u32>>,
    /// Schema JSON file `{"a": [..]}`.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl SchemaArgs {
    fn load(&self) -> Result<AttributeSchema> {
        match (&self.sizes, &self.schema) {
            (Some(a), _) => Ok(AttributeSchema::new(a.clone())?),
            (None, Some(p)) => load_schema(p).with_context(|| format!("reading {}", p.display())),
            (None, None) => bail!("give --sizes or --schema"),
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the LP only up to this many attributes.
    #[arg(long, default_value_t = bench::LP_BENCH_MAX_K)]
    lp_max_k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_spec(path: &Path) -> Result<DistortionSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(DistortionSpec::from_json(&text)?)
}

fn expand_eps(eps: &[f64], k: usize) -> Result<PrivacyBudget> {
    let v = match eps.len() {
        1 => vec![eps[0]; k],
        n if n == k => eps.to_vec(),
        n => bail!("{n} levels for {k} attributes"),
    };
    Ok(PrivacyBudget::new(v)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mechanism {
            action:
                MechanismCmd::Build {
                    schema,
                    eps,
                    method,
                    out,
                    dump_lp,
                    input_order,
                },
        } => {
            let schema = schema.load()?;
            let budget = expand_eps(&eps, schema.k())?;
            if let Some(dir) = dump_lp {
                LinearProgram::build(&schema, &budget)?.write_csv(&dir)?;
            }
            let (spec, report) = if input_order && method == Method::Heuristic {
                let start = Instant::now();
                let order: Vec<usize> = (0..schema.k()).collect();
                let spec = heuristic_build_with(&schema, &budget, Some(&order))?.spec;
                let report = MechanismReport::from_spec(&spec, start.elapsed().as_secs_f64());
                (spec, report)
            } else {
                build_mechanism(&schema, &budget, method)?
            };
            match out {
                Some(p) => {
                    fs::write(&p, spec.to_json()?)?;
                    println!("{}", serde_json::to_string_pretty(&report)?);
                }
                None => println!("{}", spec.to_json()?),
            }
        }
        Command::Perturb { spec, input, out, seed } => {
            let spec = read_spec(&spec)?;
            let data = Dataset::load(&input).with_context(|| format!("reading {}", input.display()))?;
            data.validate(spec.schema())?;
            let sampler = Sampler::new(&spec)?;
            let records = perturb_all(&data.records, &sampler, seed)?;
            Dataset {
                names: data.names,
                records,
            }
            .save(&out)?;
        }
        Command::Audit { spec, materialize } => {
            let spec = read_spec(&spec)?;
            let mut report = json!({
                "method": spec.method(),
                "kind": spec.kind(),
                "requested_eps": spec.requested_eps().values(),
                "recorded_eps": spec.achieved_eps().values(),
                "audited_eps": mechanism::audit_levels(&spec),
                "eps_total": mechanism::audit_total(&spec),
            });
            if materialize {
                let m = mechanism::materialize(&spec)?;
                let levels = (0..spec.k())
                    .map(|i| m.audit_attribute(i))
                    .collect::<multirr::Result<Vec<f64>>>()?;
                let worst = m
                    .column_sums()
                    .iter()
                    .map(|s| (s.to_f64() - 1.0).abs())
                    .fold(0.0, f64::max);
                report["matrix"] = json!({
                    "dim": m.dim(),
                    "audited_eps": levels,
                    "eps_total": m.audit_total(),
                    "max_column_sum_error": worst,
                });
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Calibrate {
            schema,
            total,
            weights,
            method,
            out,
        } => {
            let schema = schema.load()?;
            let weights = weights.unwrap_or_else(|| vec![1.0; schema.k()]);
            let c = calibrate(&schema, &weights, total, method)?;
            if let Some(p) = out {
                fs::write(p, c.spec.to_json()?)?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "method": method,
                    "scale": c.scale,
                    "eps": c.budget.values(),
                    "achieved_eps": c.spec.achieved_eps().values(),
                    "eps_total": c.eps_total,
                }))?
            );
        }
        Command::SweepEps {
            k,
            a,
            eps_min,
            eps_max,
            common,
        } => {
            let opts = SweepOptions {
                lp_max_k: common.lp_max_k,
                ..Default::default()
            };
            let rows = bench::sweep_eps(k, a, (eps_min, eps_max), common.trials, common.seed, &opts)?;
            bench::write_sweep_csv(&rows, "sum_eps", output(&common.out)?)?;
        }
        Command::SweepA {
            k,
            eps,
            a_min,
            a_max,
            common,
        } => {
            let opts = SweepOptions {
                lp_max_k: common.lp_max_k,
                ..Default::default()
            };
            let rows = bench::sweep_a(k, eps, (a_min, a_max), common.trials, common.seed, &opts)?;
            bench::write_sweep_csv(&rows, "sum_a", output(&common.out)?)?;
        }
        Command::Chisq {
            k,
            n,
            total,
            weights,
            runs,
            seed,
            methods,
            out,
        } => {
            let mut cfg = ChisqConfig::new(k, n, total, runs, seed);
            if let Some(w) = weights {
                cfg.weights = w;
            }
            cfg.methods = methods;
            let res = bench::chisq_experiment(&cfg)?;
            if let Some(p) = &out {
                bench::write_chisq_csv(&res, io::BufWriter::new(fs::File::create(p)?))?;
            }
            let summary: Vec<_> = res
                .methods
                .iter()
                .map(|m| {
                    json!({
                        "method": m.method,
                        "eps": m.budget,
                        "eps_total": m.achieved_total,
                        "mean_error": m.mean_error,
                        "run_means": m.run_means,
                        "degenerate_tables": m.degenerate,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::BenchRuntime {
            ks,
            trials,
            seed,
            methods,
            lp_max_k,
            out,
        } => {
            let rows = bench::runtime_bench(&ks, trials, seed, &methods, lp_max_k)?;
            bench::write_runtime_csv(&rows, output(&out)?)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
