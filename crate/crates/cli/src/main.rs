use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use lcm_dilate::commands::{run, Command, Options, UsageError};
use lcm_dilate::instance::Instance;
use lcm_dilate::report::{emit, Format};
use lcm_dilation::kernel::DEFAULT_MAX_DIM;
use rayon::prelude::*;

/// Validate right LCM systems, test complete positivity and Nica-type
/// conditions, and build or re-verify covariant dilations.
#[derive(Parser)]
#[command(name = "lcm-dilate", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check ideal ranges, injectivity and lcm multiplicativity of the action.
    Validate(Args),
    /// Test complete positivity of φ and of its lift to the given depth.
    CheckCp(Args),
    /// Test positivity of the Nica defect over subsets of bounded elements.
    CheckNica(Args),
    /// Build the truncated covariant dilation and verify it.
    Dilate(Args),
    /// Re-verify a stored dilation result against its instance.
    Verify(Args),
    /// Run every applicable check and print a summary.
    Report(Args),
}

#[derive(clap::Args, Clone)]
struct Args {
    /// Instance files; several run as independent jobs.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    /// Truncation depth, overriding the instance.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    tol_psd: Option<f64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here (a directory when several instances are given).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Dilation result file written by `dilate` and read by `verify`.
    #[arg(long)]
    result: Option<PathBuf>,
    /// Largest Gram dimension attempted.
    #[arg(long, env = "LCM_DILATE_MAX_DIM", default_value_t = DEFAULT_MAX_DIM)]
    max_dim: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Number of instances processed concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

struct JobOutput {
    text: String,
    code: u8,
}

fn run_job(cmd: Command, path: &Path, args: &Args, many: bool) -> anyhow::Result<JobOutput> {
    let inst = Instance::load(path).map_err(UsageError::from)?;
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let opts = Options {
        depth: args.depth,
        tol_psd: args.tol_psd,
        tol_rank: args.tol_rank,
        seed: args.seed,
        max_dim: args.max_dim,
        result: args.result.clone(),
    };
    let outcome = run(cmd, &inst, &name, &opts)?;
    if let (Some(stored), Some(dest), Command::Dilate) = (&outcome.stored, &args.result, cmd) {
        let json = serde_json::to_string(stored)?;
        std::fs::write(dest, json).with_context(|| format!("writing {}", dest.display()))?;
    }
    let text = emit(&outcome.report, args.format);
    let code = if outcome.report.passed { 0 } else { 1 };
    match &args.output {
        Some(out) if many => {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            let ext = match args.format {
                Format::Json => "json",
                Format::Text => "txt",
            };
            std::fs::create_dir_all(out)?;
            let file = out.join(format!("{stem}.{}.{ext}", cmd.name()));
            std::fs::write(&file, &text).with_context(|| format!("writing {}", file.display()))?;
            Ok(JobOutput {
                text: String::new(),
                code,
            })
        }
        Some(out) => {
            std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
            Ok(JobOutput {
                text: String::new(),
                code,
            })
        }
        None => Ok(JobOutput { text, code }),
    }
}

fn main_inner(cli: Cli) -> anyhow::Result<u8> {
    let (cmd, args) = match cli.cmd {
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::CheckCp(a) => (Command::CheckCp, a),
        Cmd::CheckNica(a) => (Command::CheckNica, a),
        Cmd::Dilate(a) => (Command::Dilate, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Report(a) => (Command::Report, a),
    };
    let many = args.instances.len() > 1;
    if many && args.result.is_some() {
        bail!("--result takes a single instance");
    }
    if args.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()?;
    let outputs: Vec<(PathBuf, anyhow::Result<JobOutput>)> = pool.install(|| {
        args.instances
            .par_iter()
            .map(|p| (p.clone(), run_job(cmd, p, &args, many)))
            .collect()
    });
    let mut code = 0;
    for (path, out) in outputs {
        match out {
            Ok(o) => {
                print!("{}", o.text);
                code = code.max(o.code);
            }
            Err(e) => {
                eprintln!("error: {}: {e:#}", path.display());
                code = 2;
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
