//! `dymax` — verification CLI for the tree maximal operator, its sharp
//! Kolmogorov-type constant, and near-extremal sequences.

// negated float comparisons reject NaN as well; see dymax-core
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dymax_cli::campaign::{fmt_f64, run_verification_campaign, CampaignConfig};
use dymax_cli::config::{apply_config_file, resolve_out_path};
use dymax_cli::textfmt;
use dymax_core::bellman::{bellman_value, invert_hq, omega_q, BellmanPoint};
use dymax_core::extremal::{convergence_study, StudyOptions};
use dymax_core::rearrange::rearrangement_search;
use dymax_core::tree::{dyadic_tree, StepFunction};

#[derive(Parser)]
#[command(
    name = "dymax",
    version,
    about = "Tree maximal operator toolkit: sharp constants, spike sweeps, seeded verification campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sharp-constant computations
    Bellman {
        #[command(subcommand)]
        command: BellmanCommand,
    },
    /// Near-extremal spike sequences
    Extremal {
        #[command(subcommand)]
        command: ExtremalCommand,
    },
    /// Randomized inequality campaigns
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
    /// Brute-force enumeration oracles
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Tree inspection and serialization
    Tree {
        #[command(subcommand)]
        command: TreeCommand,
    },
}

#[derive(Subcommand)]
enum BellmanCommand {
    /// Evaluate the sharp constant at one point
    Eval {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        h: f64,
    },
    /// Emit a CSV of (z, omega_q(z)) samples
    Curve {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 100)]
        samples: u32,
        #[arg(long, default_value_t = 100.0)]
        z_max: f64,
    },
}

#[derive(Subcommand)]
enum ExtremalCommand {
    /// Depth sweep of the spike sequence at one admissible point
    Sweep {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 2)]
        min_depth: u32,
        #[arg(long)]
        max_depth: u32,
        /// depth up to which closed forms are cross-checked on the tree
        #[arg(long, default_value_t = 10)]
        crosscheck_depth: u32,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u32>,
    /// exponents, repeatable (defaults to 0.25 0.5 0.75)
    #[arg(long = "q")]
    qs: Vec<f64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    max_depth: Option<u32>,
    /// exact rational backend instead of f64
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    lambdas: Option<u32>,
    #[arg(long)]
    subsets: Option<u32>,
    /// replace every check's own tolerance with this relative one
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; entries override the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Run every inequality campaign; exit status 1 on any violation
    All(VerifyArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exhaustive rearrangement search on a small dyadic tree
    Search {
        #[arg(long)]
        depth: u32,
        /// comma-separated leaf values, e.g. 8,4,2,1,0,0,0,0
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value_t = 8)]
        cap: usize,
    },
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Print a dyadic tree (optionally with leaf values) as nested records
    Dump {
        #[arg(long)]
        depth: u32,
        /// comma-separated leaf values; rationals or decimals
        #[arg(long)]
        values: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bellman { command } => match command {
            BellmanCommand::Eval { q, f, h } => {
                let point = BellmanPoint::new(q, f, h)?;
                let z = point.ratio();
                let c = invert_hq(q, z)?;
                let omega = omega_q(q, z)?;
                println!("z={}", fmt_f64(z));
                println!("c={}", fmt_f64(c));
                println!("omega={}", fmt_f64(omega));
                println!("B={}", fmt_f64(bellman_value(&point)));
            }
            BellmanCommand::Curve { q, samples, z_max } => {
                if samples < 2 {
                    bail!("need at least 2 samples");
                }
                if !(z_max >= 1.0) {
                    bail!("z_max must be at least 1");
                }
                println!("z,omega");
                for i in 0..samples {
                    let z = 1.0 + (z_max - 1.0) * i as f64 / (samples - 1) as f64;
                    println!("{},{}", fmt_f64(z), fmt_f64(omega_q(q, z)?));
                }
            }
        },
        Command::Extremal { command } => match command {
            ExtremalCommand::Sweep {
                q,
                f,
                h,
                min_depth,
                max_depth,
                crosscheck_depth,
            } => {
                if min_depth < 2 || max_depth < min_depth {
                    bail!("need 2 <= min_depth <= max_depth");
                }
                let point = BellmanPoint::new(q, f, h)?;
                let depths: Vec<u32> = (min_depth..=max_depth).collect();
                let reports =
                    convergence_study(&point, &depths, StudyOptions { crosscheck_depth })?;
                println!(
                    "depth,i_m,h_m,bellman,ratio,bellman_own,ratio_own,eigen_residual,rearranged_residual"
                );
                for r in reports {
                    println!(
                        "{},{},{},{},{},{},{},{},{}",
                        r.depth,
                        fmt_f64(r.integral),
                        fmt_f64(r.h_m),
                        fmt_f64(r.bellman),
                        fmt_f64(r.ratio),
                        fmt_f64(r.bellman_own),
                        fmt_f64(r.ratio_own),
                        fmt_f64(r.eigen_residual),
                        fmt_f64(r.rearranged_residual)
                    );
                }
            }
        },
        Command::Verify { command } => match command {
            VerifyCommand::All(args) => return verify_all(args),
        },
        Command::Oracle { command } => match command {
            OracleCommand::Search {
                depth,
                values,
                q,
                cap,
            } => {
                let vals = parse_f64_list(&values)?;
                let tree = dyadic_tree::<f64>(depth)?;
                let report = rearrangement_search(&tree, &vals, q, cap)?;
                println!("best_value={}", fmt_f64(report.best_value));
                println!(
                    "best_permutation={}",
                    report
                        .best_permutation
                        .iter()
                        .map(|v| format!("{v}"))
                        .collect::<Vec<_>>()
                        .join(",")
                );
                println!("left_value={}", fmt_f64(report.left_value));
                println!("hardy_bound={}", fmt_f64(report.hardy_bound));
                println!("placements={}", report.placements);
                println!("holds={}", report.holds);
                if !report.holds {
                    return Ok(ExitCode::from(1));
                }
            }
        },
        Command::Tree { command } => match command {
            TreeCommand::Dump { depth, values } => {
                let tree = dyadic_tree::<num_rational::BigRational>(depth)?;
                match values {
                    None => print!("{}", textfmt::render_tree_text(&tree)),
                    Some(list) => {
                        let vals = list
                            .split(',')
                            .map(textfmt::parse_rational)
                            .collect::<Result<Vec<_>>>()?;
                        let phi = StepFunction::from_values(tree, vals)?;
                        print!("{}", textfmt::render_step_text(&phi));
                    }
                }
            }
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_all(args: VerifyArgs) -> Result<ExitCode> {
    let mut cfg = CampaignConfig::default();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if !args.qs.is_empty() {
        cfg.qs = args.qs.clone();
    }
    if let Some(depth) = args.depth {
        cfg.min_depth = depth;
        cfg.max_depth = depth;
    }
    if let Some(max_depth) = args.max_depth {
        cfg.max_depth = max_depth;
    }
    cfg.exact = args.exact;
    if let Some(lambdas) = args.lambdas {
        cfg.lambdas_per_fn = lambdas;
    }
    if let Some(subsets) = args.subsets {
        cfg.subsets_per_fn = subsets;
    }
    if args.tol.is_some() {
        cfg.tol_override = args.tol;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    cfg.out = resolve_out_path(cfg.out);
    // config file entries take precedence over flags
    if let Some(path) = &args.config {
        apply_config_file(&mut cfg, path).context("applying config file")?;
    }
    if cfg.min_depth < 1 || cfg.max_depth < cfg.min_depth {
        bail!("need 1 <= min depth <= max depth");
    }

    let summary = run_verification_campaign(&cfg)?;
    println!(
        "campaign: {} functions, {} rows -> {}",
        summary.functions,
        summary.rows,
        summary.out_path.display()
    );
    if summary.violations.is_empty() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{} violation(s) under seed {}:",
            summary.violations.len(),
            cfg.seed
        );
        for v in &summary.violations {
            eprintln!("  {v}");
        }
        Ok(ExitCode::from(1))
    }
}

fn parse_f64_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad value `{s}`"))
        })
        .collect()
}
