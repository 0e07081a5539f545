//! Command-line front end: synthesis, checking, signature inspection and
//! simulation.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sigsyn::engine::{dump_signatures, eval_program, verdict, SigCtx};
use sigsyn::ioi::{oracle_verdict, simulate};
use sigsyn::nba::{parse_nba, SpecAutomaton};
use sigsyn::program::{BoolFunction, Prog, VariableSet};
use sigsyn::synth::{synthesize, Alphabet, SaturateOpts, SynthError, SynthOutcome};
use sigsyn::syntax::{parse_program, render_program};

const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

#[derive(Parser)]
#[command(name = "sigsyn", version, about = "Synthesis and verification of structured reactive programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonSpec {
    /// Comma-separated variable set, e.g. `b` or `b1,b2`.
    #[arg(long)]
    vars: String,
    /// Delay bound k.
    #[arg(long)]
    delay: usize,
    /// NBA file recognizing the complement of the specification.
    #[arg(long)]
    nba: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a height-minimal correct program, or report UNREALIZABLE.
    Synth {
        #[command(flatten)]
        spec: CommonSpec,
        /// Bound the search by witness height instead of running to fixpoint.
        #[arg(long)]
        max_height: Option<usize>,
        /// Abort when the state table exceeds this many states.
        #[arg(long, default_value_t = 500_000)]
        max_states: usize,
        /// Cross-check the synthesized program against the semantic oracles.
        #[arg(long)]
        verify: bool,
        /// Restrict conditions and assignment right-hand sides to these
        /// expressions (comma-separated, e.g. `true,false,b,!b`).
        #[arg(long)]
        exprs: Option<String>,
        /// Write the program to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a program file; exit 0 iff all three verdicts hold.
    Check {
        #[command(flatten)]
        spec: CommonSpec,
        /// Program file.
        #[arg(long)]
        prog: PathBuf,
        /// Also print the brute-force oracle verdicts.
        #[arg(long)]
        oracle: bool,
    },
    /// Print the signature dump of a program.
    Sig {
        #[command(flatten)]
        spec: CommonSpec,
        /// Program file.
        #[arg(long)]
        prog: PathBuf,
    },
    /// Simulate a program on a finite input word.
    Sim {
        /// Comma-separated variable set.
        #[arg(long)]
        vars: String,
        /// Program file.
        #[arg(long)]
        prog: PathBuf,
        /// Input bits, e.g. `011`.
        #[arg(long)]
        inputs: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
}

fn fail(code: u8, msg: impl fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load_vars(spec: &str) -> Result<VariableSet, ExitCode> {
    VariableSet::parse_list(spec).map_err(|e| fail(EXIT_USAGE, e))
}

fn load_nba(path: &PathBuf) -> Result<SpecAutomaton, ExitCode> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    parse_nba(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn load_prog(path: &PathBuf, vars: &VariableSet) -> Result<Prog, ExitCode> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    parse_program(&text, vars).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn run() -> Result<ExitCode, ExitCode> {
    match Cli::parse().command {
        Command::Synth { spec, max_height, max_states, verify, exprs, out } => {
            let vars = load_vars(&spec.vars)?;
            let nba = load_nba(&spec.nba)?;
            let alphabet = match exprs {
                Some(list) => {
                    let mut funs = Vec::new();
                    for part in list.split(',') {
                        let text = format!("_x := {}", part.trim());
                        // reuse the program parser for single expressions
                        let mut names: Vec<String> =
                            vars.vars().map(|v| vars.name(v).to_string()).collect();
                        names.push("_x".to_string());
                        let ext = VariableSet::new(names).map_err(|e| fail(EXIT_USAGE, e))?;
                        let p = parse_program(&text, &ext)
                            .map_err(|e| fail(EXIT_USAGE, format!("--exprs: {e}")))?;
                        let Prog::Assign(_, e) = p else { unreachable!() };
                        funs.push(BoolFunction::of_expr(&e, &vars));
                    }
                    Alphabet::from_functions(funs)
                }
                None => {
                    if vars.len() > 4 {
                        return Err(fail(
                            EXIT_USAGE,
                            "the default expression pool is only enumerable for up to 4 variables; pass --exprs",
                        ));
                    }
                    Alphabet::full(vars.len())
                }
            };
            let ctx = SigCtx::new(&vars, &nba, spec.delay);
            let opts = SaturateOpts { max_height, max_states, stop_on_accept: true };
            match synthesize(&ctx, &alphabet, &opts, verify) {
                Ok(SynthOutcome::Realizable(prog)) => {
                    let text = render_program(&prog, &vars);
                    match out {
                        Some(path) => fs::write(&path, format!("{text}\n"))
                            .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?,
                        None => println!("{text}"),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Ok(SynthOutcome::Unrealizable { exact, searched_height }) => {
                    if exact {
                        println!("UNREALIZABLE");
                    } else {
                        println!("UNREALIZABLE up to height {searched_height}");
                    }
                    Ok(ExitCode::from(1))
                }
                Err(e @ SynthError::ResourceLimit { .. }) => Err(fail(EXIT_RESOURCE, e)),
                Err(e) => Err(fail(EXIT_RESOURCE, e)),
            }
        }
        Command::Check { spec, prog, oracle } => {
            let vars = load_vars(&spec.vars)?;
            let nba = load_nba(&spec.nba)?;
            let p = load_prog(&prog, &vars)?;
            let ctx = SigCtx::new(&vars, &nba, spec.delay);
            let v = verdict(&eval_program(&p, &ctx), &ctx);
            println!("{v}");
            if oracle {
                let ov = oracle_verdict(&p, &vars, &nba, spec.delay);
                println!("oracle: {ov}");
                if ov != v {
                    eprintln!("MISMATCH between signature engine and oracle");
                }
            }
            Ok(if v.holds() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sig { spec, prog } => {
            let vars = load_vars(&spec.vars)?;
            let nba = load_nba(&spec.nba)?;
            let p = load_prog(&prog, &vars)?;
            let ctx = SigCtx::new(&vars, &nba, spec.delay);
            print!("{}", dump_signatures(&eval_program(&p, &ctx), &ctx));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sim { vars, prog, inputs, max_steps } => {
            let vars = load_vars(&vars)?;
            let p = load_prog(&prog, &vars)?;
            let mut bits = Vec::new();
            for c in inputs.chars() {
                match c {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => return Err(fail(EXIT_USAGE, format!("--inputs: invalid bit `{c}`"))),
                }
            }
            let trace = simulate(&p, &vars, &bits, max_steps);
            let word: String =
                trace.output_word.iter().map(|&b| if b { '1' } else { '0' }).collect();
            println!("outputs={} status={}", word, trace.status);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(code) => code,
    }
}
