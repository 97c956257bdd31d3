//! The `ctm` command line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    compare_rankings, complexity_of, complexity_table, misplaced_strings, runtime_tables,
    summary_stats,
};
use crate::checkpoint::{merge_checkpoints, BlankMode, IndexRange, ShardCheckpoint};
use crate::distribution::{
    build_distribution, complete_by_symmetry, length_distribution, ones_count_distribution,
    string_groups, strings_per_length, Distribution,
};
use crate::enumeration::{index_to_machine, machine_count};
use crate::error::{CtmError, Result};
use crate::machine::simulate;
use crate::sweep::{busy_beaver, run_sweep_report, Engine, SweepConfig};

pub const CHECKPOINT_DIR_ENV: &str = "CTM_CHECKPOINT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "ctm",
    version,
    about = "Output distributions of small Turing machines and coding-theorem complexity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Number of machines in (n,2)
    Count {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
        states: u32,
    },
    /// Decode an enumeration index into a transition table
    Show {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
        states: u32,
        #[arg(long)]
        index: u64,
    },
    /// Simulate a single machine
    Run {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
        states: u32,
        #[arg(long)]
        index: u64,
        #[arg(long, default_value = "0", value_parser = ["0", "1"])]
        blank: String,
        /// Defaults to the busy-beaver step count S(n)
        #[arg(long)]
        max_steps: Option<u32>,
    },
    /// Sweep an index range and write a checkpoint
    Sweep(SweepArgs),
    /// Merge checkpoints over disjoint ranges
    Merge {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a distribution from a full-range checkpoint
    Dist {
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coding-theorem complexity table of a distribution
    Complexity {
        #[arg(long)]
        dist: PathBuf,
        /// Restrict the table to strings of this length
        #[arg(long)]
        length: Option<usize>,
        /// Print the complexity of a single string
        #[arg(long)]
        string: Option<String>,
        /// Constant subtracted from every displayed value
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank comparison of two distributions: --dist <coarse> --dist <fine>
    Compare {
        #[arg(long, num_args = 1, required = true)]
        dist: Vec<PathBuf>,
    },
    /// Length, ones-count, group and same-length summary statistics
    Stats {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        length: Option<usize>,
    },
    /// Runtime tables P(length | step) and P(length, step) as CSV
    Runtimes {
        checkpoint: PathBuf,
        #[arg(long)]
        length: Option<u32>,
        #[arg(long)]
        max_steps: Option<u32>,
        /// Writes <out>.conditional.csv and <out>.joint.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep, merge, build the distribution and the complexity table
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    pub states: u32,
    #[arg(long, default_value = "dual", value_parser = ["0", "dual"])]
    pub blank: String,
    #[arg(long)]
    pub max_steps: Option<u32>,
    #[arg(long, requires = "shard_id")]
    pub shards: Option<u32>,
    #[arg(long, requires = "shards")]
    pub shard_id: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// prefix (default) or exhaustive
    #[arg(long, default_value = "prefix")]
    pub engine: Engine,
    /// Report the longest-running halting machine
    #[arg(long)]
    pub track_max_steps: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
    pub states: u32,
    #[arg(long)]
    pub shards: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory for d<n>.ckpt, d<n>.dist and d<n>.cplx
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "prefix")]
    pub engine: Engine,
    /// Required for n >= 4
    #[arg(long)]
    pub yes_long_run: bool,
}

/// Exit status for an error: 1 invariant violation, 2 usage, 3 I/O.
pub fn exit_code(err: &CtmError) -> u8 {
    match err {
        CtmError::Invariant(_) => 1,
        CtmError::Io { .. } | CtmError::CorruptCheckpoint { .. } | CtmError::Parse { .. } => 3,
        _ => 2,
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn default_max_steps(states: u32, max_steps: Option<u32>) -> Result<u32> {
    match max_steps {
        Some(t) => Ok(t),
        None => busy_beaver(states)
            .map(|bb| bb.max_steps)
            .ok_or(CtmError::UnsupportedStates(states)),
    }
}

fn checkpoint_dir(fallback: &Path) -> PathBuf {
    std::env::var_os(CHECKPOINT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.join("checkpoints"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CtmError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CtmError::io(path, e))
}

fn read_dist(path: &Path) -> Result<Distribution> {
    let text = fs::read_to_string(path).map_err(|e| CtmError::io(path, e))?;
    Distribution::parse(&text)
}

/// Runs one subcommand and returns what it prints on stdout.
pub fn execute(command: Command) -> Result<String> {
    let mut out = String::new();
    match command {
        Command::Count { states } => {
            writeln!(out, "{}", machine_count(states)?).unwrap();
        }
        Command::Show { states, index } => {
            let m = index_to_machine(states, index)?;
            writeln!(out, "{m}").unwrap();
        }
        Command::Run {
            states,
            index,
            blank,
            max_steps,
        } => {
            let m = index_to_machine(states, index)?;
            let max_steps = default_max_steps(states, max_steps)?;
            let blank: u8 = if blank == "1" { 1 } else { 0 };
            let outcome = simulate(&m, blank, max_steps)?;
            writeln!(out, "machine ({states},2) #{index}\n{m}").unwrap();
            if outcome.halted {
                writeln!(
                    out,
                    "halted after {} steps, output {}",
                    outcome.steps,
                    outcome.output.as_deref().unwrap_or("")
                )
                .unwrap();
            } else {
                writeln!(out, "no halt within {max_steps} steps").unwrap();
            }
            writeln!(
                out,
                "result\tstates={states}\tindex={index}\tblank={blank}\tmax_steps={max_steps}\thalted={}\tsteps={}\toutput={}",
                outcome.halted,
                outcome.steps,
                outcome.output.as_deref().unwrap_or("-")
            )
            .unwrap();
        }
        Command::Sweep(args) => sweep(args, &mut out)?,
        Command::Merge { inputs, out: path } => {
            let parts = inputs
                .iter()
                .map(|p| ShardCheckpoint::load(p))
                .collect::<Result<Vec<_>>>()?;
            let merged = merge_checkpoints(&parts)?;
            emit(&mut out, path.as_deref(), &merged.to_text())?;
        }
        Command::Dist {
            checkpoint,
            out: path,
        } => {
            let ckpt = ShardCheckpoint::load(&checkpoint)?;
            let ckpt = if ckpt.header.blank_mode == BlankMode::ZeroOnly {
                eprintln!("note: completing zero-blank checkpoint by symmetry");
                complete_by_symmetry(&ckpt)?
            } else {
                ckpt
            };
            let dist = build_distribution(&ckpt)?;
            emit(&mut out, path.as_deref(), &dist.to_text())?;
        }
        Command::Complexity {
            dist,
            length,
            string,
            offset,
            out: path,
        } => {
            let d = read_dist(&dist)?;
            if let Some(s) = string {
                crate::distribution::validate_binary(&s)?;
                let c = complexity_of(&d, &s)?;
                writeln!(out, "{s}\t{}", crate::distribution::format_sig(c - offset)).unwrap();
            } else {
                let table = complexity_table(&d, length);
                emit(&mut out, path.as_deref(), &table.to_text(offset))?;
            }
        }
        Command::Compare { dist } => {
            let [coarse, fine] = &dist[..] else {
                return Err(CtmError::InvalidComparison(
                    "expected exactly two --dist arguments".into(),
                ));
            };
            let c = compare_rankings(&read_dist(coarse)?, &read_dist(fine)?)?;
            writeln!(out, "common_strings\t{}", c.common_strings).unwrap();
            writeln!(out, "spearman\t{}", sig3(c.spearman)).unwrap();
            writeln!(out, "displaced\t{}", c.displaced).unwrap();
            let first = c.first_displaced.map_or("-".to_string(), |p| p.to_string());
            writeln!(out, "first_displaced\t{first}").unwrap();
            writeln!(out, "max_rank_distance\t{}", c.max_rank_distance).unwrap();
            writeln!(out, "mean_rank_distance\t{}", sig3(c.mean_rank_distance)).unwrap();
            writeln!(
                out,
                "stddev_rank_distance\t{}",
                sig3(c.stddev_rank_distance)
            )
            .unwrap();
        }
        Command::Stats { dist, length } => stats(&read_dist(&dist)?, length, &mut out)?,
        Command::Runtimes {
            checkpoint,
            length,
            max_steps,
            out: path,
        } => {
            let tables = runtime_tables(&ShardCheckpoint::load(&checkpoint)?);
            let l = length.unwrap_or_else(|| tables.max_length());
            let t = max_steps.unwrap_or_else(|| tables.max_steps());
            let (cond, joint) = (tables.conditional_csv(l, t), tables.joint_csv(l, t));
            match path {
                Some(prefix) => {
                    let name = |suffix: &str| {
                        let mut s = prefix.clone().into_os_string();
                        s.push(suffix);
                        PathBuf::from(s)
                    };
                    write_file(&name(".conditional.csv"), &cond)?;
                    write_file(&name(".joint.csv"), &joint)?;
                }
                None => {
                    write!(out, "# P(length | step)\n{cond}# P(length, step)\n{joint}").unwrap()
                }
            }
        }
        Command::Pipeline(args) => pipeline(args, &mut out)?,
    }
    Ok(out)
}

fn emit(out: &mut String, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            out.push_str(text);
            Ok(())
        }
    }
}

fn sweep(args: SweepArgs, out: &mut String) -> Result<()> {
    let mode = if args.blank == "dual" {
        BlankMode::Dual
    } else {
        BlankMode::ZeroOnly
    };
    let max_steps = default_max_steps(args.states, args.max_steps)?;
    let mut config = SweepConfig::with_bound(args.states, mode, max_steps)?
        .jobs(args.jobs)
        .engine(args.engine);
    if let (Some(total), Some(k)) = (args.shards, args.shard_id) {
        config = config.shard(k, total)?;
    }
    if config.below_busy_beaver() {
        eprintln!(
            "WARNING: max_steps={max_steps} is below S({})={}; halting machines will be undercounted",
            args.states,
            busy_beaver(args.states).unwrap().max_steps
        );
    }
    let report = run_sweep_report(&config)?;
    let path = args.out.unwrap_or_else(|| {
        checkpoint_dir(Path::new(".")).join(format!(
            "n{}-{}-{}-{}.ckpt",
            config.states, mode, config.range.lo, config.range.hi
        ))
    });
    report.checkpoint.save_atomic(&path)?;
    let c = &report.checkpoint;
    writeln!(
        out,
        "wrote {}\thalting={}\tnonhalting={}\tstrings={}",
        path.display(),
        c.halting,
        c.nonhalting,
        c.strings.len()
    )
    .unwrap();
    if args.track_max_steps {
        match report.champion {
            Some(ch) => writeln!(
                out,
                "champion\tsteps={}\tindex={}\tblank={}",
                ch.steps, ch.index, ch.blank
            ),
            None => writeln!(out, "champion\tnone"),
        }
        .unwrap();
    }
    Ok(())
}

/// Three significant digits, switching to scientific notation below 1e-3.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if magnitude < -3 {
        format!("{x:.2e}")
    } else {
        format!("{x:.*}", (2 - magnitude).max(0) as usize)
    }
}

fn stats(d: &Distribution, length: Option<usize>, out: &mut String) -> Result<()> {
    writeln!(
        out,
        "n\t{}\nd\t{}\nstrings\t{}",
        d.states,
        d.halting_total,
        d.len()
    )
    .unwrap();
    writeln!(out, "# length\tstrings\tprobability").unwrap();
    let per = strings_per_length(d);
    for (l, p) in length_distribution(d) {
        writeln!(out, "{l}\t{}\t{}", per[&l], sig3(p)).unwrap();
    }
    writeln!(out, "# ones\tprobability").unwrap();
    for (k, p) in ones_count_distribution(d) {
        writeln!(out, "{k}\t{}", sig3(p)).unwrap();
    }
    let groups = string_groups(d);
    let full = groups.iter().filter(|g| g.members.len() == 4).count();
    writeln!(out, "groups\t{}\tfull_size_groups\t{full}", groups.len()).unwrap();
    let misplaced = misplaced_strings(d);
    writeln!(out, "misplaced\t{}", misplaced.len()).unwrap();
    if let Some(l) = length {
        let s = summary_stats(d, l)?;
        writeln!(
            out,
            "# length {l} ({} strings, probabilities conditioned on length)",
            s.strings
        )
        .unwrap();
        let rows = [
            ("mean", s.mean),
            ("median", s.median),
            ("median_midpoint", s.median_midpoint),
            ("variance", s.variance),
            ("skewness", s.skewness),
            ("kurtosis", s.kurtosis),
            ("excess_kurtosis", s.excess_kurtosis),
        ];
        for (name, value) in rows {
            writeln!(out, "{name}\t{}", sig3(value)).unwrap();
        }
    }
    Ok(())
}

fn pipeline(args: PipelineArgs, out: &mut String) -> Result<()> {
    let states = args.states;
    if states >= 4 && !args.yes_long_run {
        return Err(CtmError::LongRunNotConfirmed(states));
    }
    let count = machine_count(states)?;
    let total = args.shards.unwrap_or(if states >= 4 { 8 } else { 1 });
    let dir = checkpoint_dir(&args.out);
    let started = Instant::now();
    let mut parts = Vec::with_capacity(total as usize);
    for k in 0..total {
        let config = SweepConfig::new(states, BlankMode::Dual)?
            .shard(k, total)?
            .jobs(args.jobs)
            .engine(args.engine);
        let path = dir.join(format!("n{states}-dual-shard{k}of{total}.ckpt"));
        let part = if path.exists() {
            let part = ShardCheckpoint::load(&path)?;
            if part.header.ranges != [config.range]
                || part.header.max_steps != config.max_steps
                || part.header.blank_mode != BlankMode::Dual
            {
                return Err(CtmError::CorruptCheckpoint {
                    path,
                    message: "header does not match this shard".into(),
                });
            }
            eprintln!("resumed {}", path.display());
            part
        } else {
            let part = run_sweep_report(&config)?.checkpoint;
            part.save_atomic(&path)?;
            eprintln!("shard {}/{} done ({:.1?})", k + 1, total, started.elapsed());
            part
        };
        parts.push(part);
    }
    let merged = merge_checkpoints(&parts)?;
    if merged.header.ranges != [IndexRange::new(0, count)] {
        return Err(CtmError::Invariant(
            "merged shards do not cover the space".into(),
        ));
    }
    let dist = build_distribution(&merged)?;
    let base = args.out.join(format!("d{states}"));
    let with_ext = |ext: &str| base.with_extension(ext);
    merged.save_atomic(&with_ext("ckpt"))?;
    write_file(&with_ext("dist"), &dist.to_text())?;
    write_file(
        &with_ext("cplx"),
        &complexity_table(&dist, None).to_text(0.0),
    )?;
    let secs = started.elapsed().as_secs_f64();
    writeln!(
        out,
        "n={states}\td={}\truns={}\tstrings={}\twall={secs:.2}s\tmachines_per_second={:.0}",
        dist.halting_total,
        merged.halting + merged.nonhalting,
        dist.len(),
        count as f64 / secs.max(1e-9)
    )
    .unwrap();
    writeln!(
        out,
        "wrote {}, {}, {}",
        with_ext("ckpt").display(),
        with_ext("dist").display(),
        with_ext("cplx").display()
    )
    .unwrap();
    Ok(())
}
