//! Command-line front end for `structctl`.
//!
//! Exit codes: 0 on success (for `check`: structurally controllable), 1 when
//! `check` finds the system not structurally controllable, 2 on usage or
//! input errors, 3 when the analyses contradict each other.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use structctl::cactus::best_cactus_decomposition;
use structctl::checker::{check, dim_bounds, CheckError, CheckOptions, DEFAULT_SEED, DEFAULT_TRIALS};
use structctl::dot::{cactus_dot, mdg_dot, union_graph_dot};
use structctl::field::{Prime, MERSENNE_61};
use structctl::mdg::{build_mdg, max_linking, MdgLimits};
use structctl::rankcore::lti_reduction_rank_of;
use structctl::unigraph::{build_union_graph, grank_concat};
use structctl::{parse_system, sample_realization, FieldTag, SwitchedStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "structctl", version, about = "Structural controllability of switched linear systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for random realizations.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Number of oracle realizations.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Field modulus; must be a prime between 2^31 and 2^63.
    #[arg(long, global = true, default_value_t = MERSENNE_61)]
    pub prime: u64,
    /// Maximum number of MDG layers to materialize.
    #[arg(long, global = true, default_value_t = MdgLimits::default().max_layers)]
    pub layer_cap: usize,
    /// Maximum number of MDG vertices to materialize.
    #[arg(long, global = true, default_value_t = MdgLimits::default().max_vertices)]
    pub max_vertices: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output to this file instead of stdout.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide structural controllability and print the verdict.
    Check { input: PathBuf },
    /// Generic rank of [A_1 .. A_N, B_1 .. B_N].
    Grank { input: PathBuf },
    /// Lower and upper bounds on the generic controllable dimension.
    Bounds { input: PathBuf },
    /// Best cactus configuration found.
    Cactus { input: PathBuf },
    /// Multi-layer dynamic graph and a maximum linking.
    Mdg {
        input: PathBuf,
        #[arg(long)]
        layers: usize,
        /// With `--format dot`, also write the linking certificate here.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Sample a realization.
    Realize {
        input: PathBuf,
        /// Sample real values in [-1, 1] instead of field residues.
        #[arg(long)]
        real: bool,
    },
    /// Largest rank of [sum w_i A_i, sum w_i B_i] over random weights, with
    /// `--trials` realizations per weight vector.
    Counterexample {
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn load(path: &PathBuf) -> Result<SwitchedStructure, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_system(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn unsupported(command: &str, format: Format) -> Failure {
    Failure::input(format!("`{command}` does not support --format {format:?}").to_lowercase())
}

#[derive(Serialize)]
struct GrankOut {
    n: usize,
    grank_concat: usize,
}

#[derive(Serialize)]
struct MdgOut {
    layers: usize,
    vertices: usize,
    edges: usize,
    linking: structctl::mdg::LinkingCertificate,
}

#[derive(Serialize)]
struct CounterexampleOut {
    n: usize,
    samples: usize,
    realizations_per_sample: usize,
    max_rank: usize,
    full_rank_samples: usize,
}

fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    let prime = Prime::new(cli.prime).map_err(|e| Failure::input(e.to_string()))?;
    let opts = CheckOptions {
        seed: cli.seed,
        trials: cli.trials,
        prime: prime.get(),
        limits: MdgLimits {
            max_layers: cli.layer_cap,
            max_vertices: cli.max_vertices,
        },
    };
    if cli.trials == 0 {
        return Err(Failure::input("--trials must be at least 1"));
    }
    match &cli.command {
        Command::Check { input } => {
            let sys = load(input)?;
            let verdict = check(&sys, &opts).map_err(|e| match e {
                CheckError::Inconsistent(_) => Failure {
                    code: 3,
                    message: e.to_string(),
                },
                CheckError::Rank(_) => Failure::input(e.to_string()),
            })?;
            let code = if verdict.structurally_controllable { 0 } else { 1 };
            let out = match cli.format {
                Format::Json => json(&verdict),
                Format::Text => format!(
                    "structurally controllable: {}\nreachable: {}/{}\ngrank_concat: {}\noracle dim: {}\nbounds: [{}, {}]\n",
                    verdict.structurally_controllable,
                    verdict.criterion_a.reachable_count,
                    verdict.n,
                    verdict.criterion_a.grank_concat,
                    verdict.oracle_c.dim,
                    verdict.bounds.lower,
                    verdict.bounds.upper
                ),
                Format::Dot => union_graph_dot(&build_union_graph(&sys)),
            };
            Ok((out, code))
        }
        Command::Grank { input } => {
            let sys = load(input)?;
            let g = grank_concat(&sys);
            match cli.format {
                Format::Json => Ok((
                    json(&GrankOut {
                        n: sys.n(),
                        grank_concat: g,
                    }),
                    0,
                )),
                Format::Text => Ok((format!("{g}\n"), 0)),
                Format::Dot => Err(unsupported("grank", cli.format)),
            }
        }
        Command::Bounds { input } => {
            let sys = load(input)?;
            let b = dim_bounds(&sys, &opts);
            match cli.format {
                Format::Json => Ok((json(&b), 0)),
                Format::Text => Ok((format!("{} {}\n", b.lower, b.upper), 0)),
                Format::Dot => Err(unsupported("bounds", cli.format)),
            }
        }
        Command::Cactus { input } => {
            let sys = load(input)?;
            let g = build_union_graph(&sys);
            let d = best_cactus_decomposition(&g);
            match cli.format {
                Format::Json => Ok((json(&d.config.certificate()), 0)),
                Format::Dot => Ok((cactus_dot(&g, &d.config, &d.dropped), 0)),
                Format::Text => {
                    let covered: Vec<String> = d.config.certificate().covered.iter().map(|v| v.to_string()).collect();
                    Ok((format!("{} covered: {}\n", d.config.size(), covered.join(" ")), 0))
                }
            }
        }
        Command::Mdg {
            input,
            layers,
            certificate,
        } => {
            let sys = load(input)?;
            let mdg = build_mdg(&sys, *layers, opts.limits).map_err(|e| Failure::input(e.to_string()))?;
            let linking = max_linking(&mdg);
            let cert = MdgOut {
                layers: mdg.layers(),
                vertices: mdg.vertex_count(),
                edges: mdg.edges().len(),
                linking: linking.certificate(&mdg),
            };
            match cli.format {
                Format::Json => Ok((json(&cert), 0)),
                Format::Dot => {
                    if let Some(path) = certificate {
                        fs::write(path, json(&cert))
                            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                    }
                    Ok((mdg_dot(&mdg, Some(&linking)), 0))
                }
                Format::Text => Ok((format!("max linking size: {}\n", linking.size()), 0)),
            }
        }
        Command::Realize { input, real } => {
            let sys = load(input)?;
            let field = if *real { FieldTag::Real } else { FieldTag::FiniteField(prime) };
            match cli.format {
                Format::Json => {
                    let mut s = sample_realization(&sys, field, cli.seed).to_json();
                    s.push('\n');
                    Ok((s, 0))
                }
                other => Err(unsupported("realize", other)),
            }
        }
        Command::Counterexample { input, samples } => {
            let sys = load(input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut max_rank = 0;
            let mut full = 0;
            for _ in 0..*samples {
                let weights: Vec<u64> = (0..sys.num_subsystems())
                    .map(|_| rng.gen_range(1..prime.get()))
                    .collect();
                for _ in 0..cli.trials {
                    let r = sample_realization(&sys, FieldTag::FiniteField(prime), rng.gen());
                    let rank = lti_reduction_rank_of(&sys, &weights, &r);
                    max_rank = max_rank.max(rank);
                    if rank == sys.n() {
                        full += 1;
                    }
                }
            }
            let out = CounterexampleOut {
                n: sys.n(),
                samples: *samples,
                realizations_per_sample: cli.trials,
                max_rank,
                full_rank_samples: full,
            };
            match cli.format {
                Format::Json => Ok((json(&out), 0)),
                Format::Text => Ok((format!("max rank {max_rank} of {}\n", sys.n()), 0)),
                Format::Dot => Err(unsupported("counterexample", cli.format)),
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Output
/// goes to `stdout` unless `-o` is given; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    2
                }
            }
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
