// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynlang::extract::{aux_arity, extract_dfa};
use dynlang::regular::compile_regular;
use dynlang::Engine;
use dynlang_harness::bench::{bench, to_csv};
use dynlang_harness::formats::print_dfa;
use dynlang_harness::{difftest, parse_script, run_script, Family, Limits, Spec};

#[derive(Parser)]
#[command(name = "dynlang", version, about = "Dynamic membership programs for formal languages")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an update script against a compiled spec.
    Run {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        script: PathBuf,
        /// Print `step=<i> update=<text> accept=<bool>` per update.
        #[arg(long)]
        trace: bool,
    },
    /// Compare random specs and sequences against the oracles.
    Difftest {
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        max_len: Option<usize>,
        /// Sequences per generated spec.
        #[arg(long, default_value_t = 1)]
        seqs: usize,
    },
    /// Extract a DFA from the program compiled from a regular spec.
    ExtractDfa {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 16)]
        maxlen: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time updates against from-scratch membership, as CSV.
    Bench {
        #[arg(long)]
        family: Family,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cmd: Cmd) -> Result<bool, String> {
    match cmd {
        Cmd::Run { family, spec, script, trace } => {
            let sp = Spec::parse(family, &read(&spec)?).map_err(|e| format!("{}: {e}", spec.display()))?;
            let sc = parse_script(&read(&script)?).map_err(|e| format!("{}: {e}", script.display()))?;
            let sc = sp.resolve_script(&sc);
            let (p, _) = sp.compile().map_err(|e| e.to_string())?;
            let engine = Engine::new(&p).map_err(|e| e.to_string())?.with_env_timeout();
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            let sink: Option<&mut dyn Write> = if trace { Some(&mut lock) } else { None };
            let (out, st) = run_script(&engine, &sc, sink).map_err(|e| e.to_string())?;
            for (i, expected) in &out.misses {
                eprintln!("assertion at item {}: expected accept {expected}", i + 1);
            }
            if !trace {
                println!("accept={}", st.accept());
            }
            Ok(out.misses.is_empty())
        }
        Cmd::Difftest { family, seed, cases, max_n, max_len, seqs } => {
            let d = Limits::for_family(family);
            let limits = Limits {
                max_n: max_n.unwrap_or(d.max_n),
                max_len: max_len.unwrap_or(d.max_len),
                seqs,
                audit: true,
            };
            limits.check(family)?;
            let report = difftest(family, seed, cases, &limits);
            print!("{report}");
            eprintln!("{}", report.timing_line());
            Ok(report.passed())
        }
        Cmd::ExtractDfa { spec, maxlen, out } => {
            let Spec::Regular(a) = Spec::parse(Family::Regular, &read(&spec)?).map_err(|e| e.to_string())? else {
                unreachable!()
            };
            let p = compile_regular(&a);
            let x = extract_dfa(&p, aux_arity(&p), maxlen).map_err(|e| e.to_string())?;
            let dfa = x.dfa.minimize();
            fs::write(&out, print_dfa(&dfa)).map_err(|e| format!("{}: {e}", out.display()))?;
            let same = dfa.equivalent(&a);
            eprintln!(
                "{} states ({} before minimizing) from {} types, depth {}, {} the input",
                dfa.num_states(),
                x.dfa.num_states(),
                x.types.len(),
                x.depth,
                if same { "equivalent to" } else { "NOT equivalent to" }
            );
            Ok(same)
        }
        Cmd::Bench { family, sizes, reps, seed } => {
            let rows = bench(family, &sizes, reps, seed).map_err(|e| e.to_string())?;
            print!("{}", to_csv(&rows));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
