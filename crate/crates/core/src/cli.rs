//! `coop-msr` command line. Node numbers on the command line and in every
//! report are 1-based.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{cutset_centralized, cutset_cooperative, fmt_ratio, node_size_table, NodeSize};
use crate::cluster::Cluster;
use crate::code::{CodeParams, ParamOptions, DEFAULT_MAX_SYMBOLS};
use crate::field::Symbol;
use crate::io::{
    read_message, read_params, read_shard_dir, shard_path, write_atomic, write_params, write_shard,
};

#[derive(Debug, Parser)]
#[command(
    name = "coop-msr",
    version,
    about = "Cooperative MSR codes: encode, repair, meter"
)]
struct Cli {
    /// Refuse codes whose n*l symbol count exceeds this.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_SYMBOLS)]
    max_symbols: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build code parameters and write a params file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        d: usize,
        /// Shuffle evaluation points with this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Field width in bits (4, 8 or 16).
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a raw symbol file into n shard files.
    Encode {
        #[arg(long)]
        params: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check that the shards present agree with one codeword.
    Verify {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        shards: PathBuf,
    },
    /// Rebuild failed shards and report the traffic.
    Repair {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        shards: PathBuf,
        /// Failed nodes, e.g. 1,4.
        #[arg(long, value_delimiter = ',', required = true)]
        failed: Vec<usize>,
        /// Helper nodes, e.g. 2,3,5,6. Required unless --naive.
        #[arg(long, value_delimiter = ',')]
        helpers: Vec<usize>,
        /// Download k whole nodes per failed node instead.
        #[arg(long)]
        naive: bool,
        #[arg(long)]
        report: PathBuf,
    },
    /// Cut-set bounds and node sizes for a parameter set.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        d: usize,
    },
    /// Random repairs with correctness and bound checks.
    Bench {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn zero_based(nodes: &[usize], n: usize) -> Result<Vec<usize>> {
    nodes
        .iter()
        .map(|&i| {
            ensure!((1..=n).contains(&i), "node {i} is outside 1..={n}");
            Ok(i - 1)
        })
        .collect()
}

fn one_based(nodes: &[usize]) -> String {
    nodes
        .iter()
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn describe(params: &CodeParams) -> String {
    format!(
        "n={} k={} h={} d={} s={} m={} l={} field=GF(2^{}) poly={:#x} points={}",
        params.n(),
        params.k(),
        params.h(),
        params.d(),
        params.s(),
        params.m(),
        params.l(),
        params.field().width(),
        params.field().polynomial(),
        params
            .seed()
            .map_or_else(|| "canonical".to_string(), |s| format!("seed {s}"))
    )
}

fn fmt_log2(size: &NodeSize) -> String {
    size.log2()
        .map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

/// Parses `args` (including the program name) and runs the command,
/// writing the report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let guard = cli.max_symbols;
    match cli.command {
        Command::Gen {
            n,
            k,
            h,
            d,
            seed,
            width,
            out: path,
        } => {
            let opts = ParamOptions {
                width,
                seed,
                max_symbols: guard,
            };
            let params = CodeParams::with_options(n, k, h, d, &opts)?;
            write_params(&path, &params).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "{}", describe(&params))?;
            if h == 1 {
                writeln!(
                    out,
                    "note: h = 1 repairs a single node; round two carries no traffic"
                )?;
            }
            if params.s() == 1 {
                writeln!(
                    out,
                    "note: d = k gives s = 1, every plane holds a single symbol"
                )?;
            }
            writeln!(out, "wrote {}", path.display())?;
        }

        Command::Encode {
            params,
            input,
            out_dir,
        } => {
            let params = read_params(&params, guard)?;
            let message = read_message(&input, &params)?;
            let cluster = Cluster::init(params.clone(), &message)?;
            fs::create_dir_all(&out_dir)?;
            for i in 0..params.n() {
                let node = cluster.node(i).expect("fresh cluster");
                write_shard(&shard_path(&out_dir, i), &params, i, node)?;
            }
            writeln!(out, "{}", describe(&params))?;
            writeln!(out, "wrote {} shards to {}", params.n(), out_dir.display())?;
        }

        Command::Verify { params, shards } => {
            let params = read_params(&params, guard)?;
            let cluster = Cluster::from_slots(params.clone(), read_shard_dir(&shards, &params)?)?;
            let ok = cluster.verify()?;
            let missing = cluster.failed();
            writeln!(
                out,
                "{} of {} shards present{}",
                params.n() - missing.len(),
                params.n(),
                if missing.is_empty() {
                    String::new()
                } else {
                    format!(" (missing {})", one_based(&missing))
                }
            )?;
            writeln!(out, "consistent: {}", if ok { "yes" } else { "no" })?;
            writeln!(out, "#CHECK verify={}", if ok { "ok" } else { "fail" })?;
            ensure!(ok, "shards are not consistent with a single codeword");
        }

        Command::Repair {
            params,
            shards,
            failed,
            helpers,
            naive,
            report,
        } => {
            let params = read_params(&params, guard)?;
            let failed = zero_based(&failed, params.n())?;
            let helpers = zero_based(&helpers, params.n())?;
            let mut cluster =
                Cluster::from_slots(params.clone(), read_shard_dir(&shards, &params)?)?;
            cluster.fail_nodes(&failed)?;
            let missing = cluster.failed();
            if let Some(i) = missing.iter().find(|i| !failed.contains(i)) {
                bail!(
                    "shard for node {} is missing but not listed in --failed",
                    i + 1
                );
            }

            let result = if naive {
                cluster.run_naive_repair(&failed)?
            } else {
                ensure!(
                    !helpers.is_empty(),
                    "--helpers is required for cooperative repair"
                );
                cluster.run_cooperative_repair(&failed, &helpers)?
            };
            for &i in &failed {
                let node = cluster.node(i).expect("repaired");
                write_shard(&shard_path(&shards, i), &params, i, node)?;
            }
            let consistent = cluster.verify()?;

            let mut text = String::new();
            text.push_str(&format!("{}\n", describe(&params)));
            text.push_str(&format!(
                "repair mode={} failed={} helpers={}\n",
                if naive { "naive" } else { "cooperative" },
                one_based(&failed),
                if naive {
                    "-".to_string()
                } else {
                    one_based(&helpers)
                }
            ));
            text.push_str(&cluster.event_log().join("\n"));
            text.push('\n');
            let mut checks = result.check_lines();
            checks.push(format!(
                "#CHECK verify={}",
                if consistent { "ok" } else { "fail" }
            ));
            for line in &checks {
                text.push_str(line);
                text.push('\n');
            }
            write_atomic(&report, text.as_bytes())?;

            for line in result.summary_lines() {
                writeln!(out, "{line}")?;
            }
            for line in &checks {
                writeln!(out, "{line}")?;
            }
            writeln!(out, "report written to {}", report.display())?;
            ensure!(consistent, "repaired shards are not consistent");
            if !naive {
                ensure!(
                    result.co_met && result.ce_met,
                    "repair traffic does not meet the cut-set bounds"
                );
            }
        }

        Command::Bounds { n, k, h, d } => {
            let table = node_size_table(n as u64, k as u64, h as u64, d as u64)?;
            let l = u64::try_from(table.replicated.exact().context("node size overflows")?)?;
            let (k64, h64, d64) = (k as u64, h as u64, d as u64);
            let co = cutset_cooperative(k64, l, h64, d64)?;
            let ce = cutset_centralized(k64, l, h64, d64)?;
            let naive = h64 * k64 * l;
            let show = |r| fmt_ratio(&r);
            writeln!(
                out,
                "parameters: n={n} k={k} h={h} d={d} s={} l={l}",
                d + 1 - k
            )?;
            writeln!(out, "repair bandwidth (symbols)")?;
            writeln!(out, "  {:<36}{:>14}", "cooperative cut-set", show(co))?;
            writeln!(out, "  {:<36}{:>14}", "centralized cut-set", show(ce))?;
            writeln!(out, "  {:<36}{:>14}", "naive h*k*l", naive)?;
            writeln!(out, "node size (log2)")?;
            writeln!(
                out,
                "  {:<36}{:>14}",
                "lcm(d-k+1..d-k+h)^n",
                fmt_log2(&table.centralized_lcm)
            )?;
            writeln!(
                out,
                "  {:<36}{:>14}",
                "((h+d-k)(d-k)^(h-1))^C(n,h)",
                fmt_log2(&table.transform)
            )?;
            writeln!(
                out,
                "  {:<36}{:>14}",
                "(h+d-k)(d-k+1)^n",
                fmt_log2(&table.replicated)
            )?;
            writeln!(out, "#CHECK co={} ce={} naive={naive}", show(co), show(ce))?;
            writeln!(
                out,
                "#CHECK log2_lcm={} log2_transform={} log2_replicated={}",
                fmt_log2(&table.centralized_lcm),
                fmt_log2(&table.transform),
                fmt_log2(&table.replicated)
            )?;
        }

        Command::Bench {
            params,
            trials,
            seed,
        } => {
            let params = read_params(&params, guard)?;
            let (n, h, d) = (params.n(), params.h(), params.d());
            let order = params.field().order();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let started = Instant::now();
            writeln!(out, "{}", describe(&params))?;
            let mut failures = 0usize;
            for trial in 1..=trials {
                let message: Vec<Symbol> = (0..params.k() * params.l())
                    .map(|_| rng.gen_range(0..order) as Symbol)
                    .collect();
                let mut failed = sample(&mut rng, n, h).into_vec();
                failed.sort_unstable();
                let rest: Vec<usize> = (0..n).filter(|i| !failed.contains(i)).collect();
                let mut helpers: Vec<usize> = sample(&mut rng, rest.len(), d)
                    .into_iter()
                    .map(|j| rest[j])
                    .collect();
                helpers.sort_unstable();

                let mut cluster = Cluster::init(params.clone(), &message)?;
                cluster.fail_nodes(&failed)?;
                let report = cluster.run_cooperative_repair(&failed, &helpers)?;
                let exact = cluster.matches_oracle() == Some(true) && cluster.verify()?;
                let ok = exact && report.co_met && report.ce_met;
                if !ok {
                    failures += 1;
                }
                writeln!(
                    out,
                    "#CHECK trial={trial} failed={} helpers={} total={} co_met={} ce_met={} exact={}",
                    one_based(&failed),
                    one_based(&helpers),
                    report.total,
                    report.co_met,
                    report.ce_met,
                    exact
                )?;
            }
            writeln!(out, "#CHECK trials={trials} failures={failures}")?;
            writeln!(
                out,
                "bench: {trials} trials, {failures} failures, {:.1} ms",
                started.elapsed().as_secs_f64() * 1e3
            )?;
            ensure!(failures == 0, "{failures} of {trials} trials failed");
        }
    }
    Ok(())
}
