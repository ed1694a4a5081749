/// `println!` that ignores a closed stdout (for example when piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod jobs;

use clap::{Args, Parser, Subcommand};
use implosion_core::config::JobConfig;
use implosion_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Default worker count for every job, overridden by `--threads`.
pub const THREADS_ENV: &str = "IMPLOSION_THREADS";

#[derive(Parser)]
#[command(name = "implosion", version, about = "Parabolic implosion laboratory for quadratic complex Henon maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Green function or class image on a complex line (eigenline, unstable-2cycle, line).
    Slice(JobArgs),
    /// Integer-level bands of the transition map over a window of the cylinder.
    FatouGrid(JobArgs),
    /// Tri-state image of K+(F, T_alpha) over a zeta window.
    Lavaurs(JobArgs),
    /// Distances between F^{n_j m} and T^m_alpha along an alpha-sequence.
    Converge(JobArgs),
    /// Almost-Fatou coordinate values and measured constants for a model family.
    AlmostFatouTable(JobArgs),
    /// Newton search for a periodic orbit, or the closed-form two-cycle.
    Periodic(JobArgs),
    /// Periodic saddles of F_{eps_j} near (phi_out)^{-1}(zeta0).
    SaddleCreation(JobArgs),
    /// Run the acceptance criteria and print the report.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct JobArgs {
    /// Plain-text key=value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output path prefix; extensions are appended.
    #[arg(short, long)]
    out: Option<String>,
    /// Image format: png or ppm.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 uses every core).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write a CSV table.
    #[arg(long)]
    csv: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    show_config: bool,
    /// Overrides as KEY=VALUE.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Multiply every tolerance; 0 forces failures.
    #[arg(long)]
    tolerance_scale: Option<f64>,
    /// Comma-separated criterion ids.
    #[arg(long)]
    only: Option<String>,
}

/// Process exit status for a failed job.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn resolve(command: &str, args: &JobArgs, extra: Vec<(String, String)>) -> implosion_core::Result<JobConfig> {
    let mut cfg = jobs::defaults(command);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_file_text(&text)?;
    }
    let mut flags: Vec<(String, String)> = Vec::new();
    for kv in &args.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| Error::InvalidParams(format!("expected KEY=VALUE, got {kv:?}")))?;
        flags.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(o) = &args.out {
        flags.push(("out".into(), o.clone()));
    }
    if let Some(f) = &args.format {
        flags.push(("format".into(), f.clone()));
    }
    if let Some(t) = args.threads {
        flags.push(("threads".into(), t.to_string()));
    }
    if args.csv {
        flags.push(("csv".into(), "true".into()));
    }
    flags.extend(extra);
    cfg.apply_flags(flags.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    Ok(cfg)
}

fn install_threads(cfg: &JobConfig) -> implosion_core::Result<()> {
    let n = cfg.usize("threads")?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> implosion_core::Result<u8> {
    let (name, args, extra) = match &cli.cmd {
        Cmd::Slice(a) => ("slice", a, vec![]),
        Cmd::FatouGrid(a) => ("fatou-grid", a, vec![]),
        Cmd::Lavaurs(a) => ("lavaurs", a, vec![]),
        Cmd::Converge(a) => ("converge", a, vec![]),
        Cmd::AlmostFatouTable(a) => ("almost-fatou-table", a, vec![]),
        Cmd::Periodic(a) => ("periodic", a, vec![]),
        Cmd::SaddleCreation(a) => ("saddle-creation", a, vec![]),
        Cmd::Verify(v) => {
            let mut extra = Vec::new();
            if let Some(s) = v.tolerance_scale {
                extra.push(("tolerance_scale".to_string(), s.to_string()));
            }
            if let Some(o) = &v.only {
                extra.push(("only".to_string(), o.clone()));
            }
            ("verify", &v.job, extra)
        }
    };
    let cfg = resolve(name, args, extra)?;
    if args.show_config {
        say!("{}", serde_json::to_string_pretty(&cfg.to_json()).expect("config serializes"));
        return Ok(0);
    }
    install_threads(&cfg)?;
    jobs::run(name, &cfg)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors by itself.
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("implosion: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
