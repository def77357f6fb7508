//! Run orchestration behind the `prover` binary: load theories and the
//! problem, run the search under the script, check and report.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::boxes::BoxSet;
use crate::kernel::{self, Ctx};
use crate::problem::Problem;
use crate::script::{self, Interpreter, ScriptError};
use crate::search::{Outcome, SearchConfig, SearchState, TraceRecord, Weights};
use crate::theory::Theory;

pub const EXIT_PROVED: i32 = 0;
pub const EXIT_SATURATED: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
/// A derivation failed replay under `--check`.
pub const EXIT_CHECK: i32 = 4;

/// Trace records shown for a stuck script command.
const STUCK_TAIL: usize = 20;

#[derive(Clone, Debug)]
pub struct Options {
    pub theories: Vec<PathBuf>,
    pub problem: PathBuf,
    pub max_updates: usize,
    pub trace: bool,
    pub trace_json: Option<PathBuf>,
    pub check: bool,
    pub dump_rewrites: bool,
    pub weights: Weights,
    pub parallel: bool,
}

impl Options {
    pub fn new(problem: impl Into<PathBuf>) -> Options {
        let cfg = SearchConfig::default();
        Options {
            theories: Vec::new(),
            problem: problem.into(),
            max_updates: cfg.max_updates,
            trace: false,
            trace_json: None,
            check: false,
            dump_rewrites: false,
            weights: cfg.weights,
            parallel: cfg.parallel,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: String,
    pub pulled: usize,
    pub wall: Duration,
    pub stuck: Option<ScriptError>,
    /// Trace records in the stuck subgoal box, oldest first.
    pub stuck_tail: Vec<TraceRecord>,
    pub check: Option<Result<usize, String>>,
    pub exit: i32,
}

/// Deterministic summary; wall time is left out so repeated runs print
/// the same bytes.
pub fn render_report(r: &RunReport) -> String {
    let mut s = String::new();
    let verb = match r.outcome.as_str() {
        "Proved" => "PROVED in",
        "Saturated" => "SATURATED after",
        _ => "TIMEOUT after",
    };
    let _ = writeln!(s, "{verb} {} updates", r.pulled);
    if let Some(ScriptError::ScriptStuck { cmd, cbox }) = &r.stuck {
        match cbox {
            Some(b) => {
                let _ = writeln!(s, "script stuck at {cmd} (box {b})");
            }
            None => {
                let _ = writeln!(s, "script stuck at {cmd} (terms not in scope)");
            }
        }
        for rec in &r.stuck_tail {
            let _ = writeln!(s, "  {}", rec.render());
        }
    }
    match &r.check {
        Some(Ok(n)) => {
            let _ = writeln!(s, "check: {n} justifications replayed");
        }
        Some(Err(e)) => {
            let _ = writeln!(s, "check FAILED: {e}");
        }
        None => {}
    }
    s
}

/// Everything a run produced, for the binary and for tests.
pub struct RunOutput {
    pub report: RunReport,
    pub trace_text: String,
    pub trace_json: String,
    pub rewrites: String,
}

fn input_error(msg: String) -> Result<RunOutput, String> {
    Err(msg)
}

/// Execute a run; `Err` carries an input diagnostic (exit code 3).
pub fn execute(opts: &Options) -> Result<RunOutput, String> {
    let start = Instant::now();
    let problem = Problem::read(&opts.problem).map_err(|e| e.to_string())?;
    let base = if opts.theories.is_empty() {
        Theory::builtin_nat()
    } else {
        Theory::load(&opts.theories).map_err(|e| e.to_string())?
    };
    let theory = problem.theory(base).map_err(|e| e.to_string())?;
    let goal = problem.goal(&theory).map_err(|e| e.to_string())?;
    let parsed = match problem.script.as_deref().map(script::parse).transpose() {
        Ok(s) => s.flatten(),
        Err(e) => return input_error(e.to_string()),
    };
    if let Some(sc) = &parsed {
        script::check_fresh(sc, &goal.vars).map_err(|e| e.to_string())?;
    }
    if opts.max_updates == 0 {
        return input_error("--max-updates must be at least 1".into());
    }
    let mut st = SearchState::init(&goal, &theory).map_err(|e| e.to_string())?;
    let cfg = SearchConfig { max_updates: opts.max_updates, weights: opts.weights, parallel: opts.parallel };
    let mut interp = Interpreter::new(parsed);
    let outcome = script::run(&mut st, &cfg, &mut interp);
    let mut exit = match outcome {
        Outcome::Proved(_) => EXIT_PROVED,
        Outcome::Saturated => EXIT_SATURATED,
        Outcome::Timeout => EXIT_TIMEOUT,
    };
    let stuck = match outcome {
        Outcome::Proved(_) => None,
        _ => interp.stuck(&st),
    };
    let stuck_tail = match &stuck {
        Some(ScriptError::ScriptStuck { cbox: Some(b), .. }) => tail_in_box(&st, b),
        _ => Vec::new(),
    };
    let check = opts.check.then(|| check_all(&st, &outcome));
    if matches!(check, Some(Err(_))) {
        exit = EXIT_CHECK;
    }
    let report = RunReport {
        outcome: outcome.name().into(),
        pulled: st.pulled,
        wall: start.elapsed(),
        stuck,
        stuck_tail,
        check,
        exit,
    };
    Ok(RunOutput {
        report,
        trace_text: st.trace_text(),
        trace_json: st.trace_json(),
        rewrites: if opts.dump_rewrites { st.table.dump() } else { String::new() },
    })
}

fn tail_in_box(st: &SearchState<'_>, b: &BoxSet) -> Vec<TraceRecord> {
    let inside: Vec<TraceRecord> = st
        .trace
        .iter()
        .filter(|r| r.items.iter().any(|&i| st.boxes.leq(b, &st.items[i].cbox)))
        .cloned()
        .collect();
    inside[inside.len().saturating_sub(STUCK_TAIL)..].to_vec()
}

/// Replay every stored justification, and the proof as a closed one.
fn check_all(st: &SearchState<'_>, outcome: &Outcome) -> Result<usize, String> {
    let ctx = Ctx { theory: st.theory, boxes: &st.boxes };
    let mut n = 0;
    for it in &st.items {
        if let Some(j) = &it.just {
            kernel::replay_checked(ctx, j, false).map_err(|e| format!("item #{} {}: {e}", it.id, it.tname))?;
            n += 1;
        }
    }
    if let Outcome::Proved(j) = outcome {
        kernel::replay_checked(ctx, j, true).map_err(|e| format!("proof: {e}"))?;
        if !j.cbox().is_empty() && j.cbox() != &BoxSet::single(0) {
            return Err(format!("proof lives in box {}", j.cbox()));
        }
        n += 1;
    }
    Ok(n)
}
