use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use boxprove::cli::{self, Options, EXIT_INPUT};
use boxprove::search::Weights;

/// Saturation-based prover over assumption boxes.
#[derive(Parser, Debug)]
#[command(name = "prover", version)]
struct Args {
    /// Problem file.
    problem: PathBuf,
    /// Theory file; repeatable, loaded in order. Defaults to the bundled
    /// theory of naturals.
    #[arg(long = "theory", value_name = "FILE")]
    theories: Vec<PathBuf>,
    #[arg(long, default_value_t = 2000, value_name = "N")]
    max_updates: usize,
    /// Print the update trace.
    #[arg(long)]
    trace: bool,
    /// Write the trace as line-delimited JSON.
    #[arg(long, value_name = "PATH")]
    trace_json: Option<PathBuf>,
    /// Replay every justification with the kernel.
    #[arg(long)]
    check: bool,
    /// Print the rewrite table after the run.
    #[arg(long)]
    dump_rewrites: bool,
    #[arg(long, default_value_t = Weights::default().base)]
    w_base: i64,
    #[arg(long, default_value_t = Weights::default().size)]
    w_size: i64,
    #[arg(long, default_value_t = Weights::default().depth)]
    w_box: i64,
    /// Dispatch steps on one thread.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let mut opts = Options::new(args.problem);
    opts.theories = args.theories;
    opts.max_updates = args.max_updates;
    opts.trace = args.trace;
    opts.trace_json = args.trace_json;
    opts.check = args.check;
    opts.dump_rewrites = args.dump_rewrites;
    opts.weights = Weights { base: args.w_base, size: args.w_size, depth: args.w_box };
    opts.parallel &= !args.sequential;

    let out = match cli::execute(&opts) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    if opts.trace {
        print!("{}", out.trace_text);
    }
    if let Some(path) = &opts.trace_json {
        if let Err(e) = std::fs::write(path, &out.trace_json) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_INPUT as u8);
        }
    }
    if opts.dump_rewrites {
        print!("{}", out.rewrites);
    }
    print!("{}", cli::render_report(&out.report));
    eprintln!("wall time {:.3}s", out.report.wall.as_secs_f64());
    ExitCode::from(out.report.exit as u8)
}
