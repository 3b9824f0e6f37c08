//! `coreff`: check, run, rewrite and compare core Eff programs, and run the
//! state-handler law suites.
//!
//! Exit codes: 0 success, 1 type error, 2 parse error, 3 TIMEOUT, 4 STUCK,
//! 5 negative verdict (not equivalent, a law suite with distinctions, or a
//! rewrite that ran out of fuel), 64 usage error, 66 unreadable file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coreff::equiv::{lab_table, law_suite, normalize, op_equiv, EquivVerdict, Law, LawConfig, RuleSet};
use coreff::eval::{eval_big, run_small, trace, EvalError, EvalOutcome};
use coreff::surface::{parse_program, print_comp, print_dirty, ProgramFile};
use coreff::typing::{synth_comp, TypingContext};
use coreff::types::DirtyType;

const DEFAULT_FUEL: &str = "10000";

#[derive(Parser)]
#[command(name = "coreff", version, about = "Core Eff: algebraic effects and handlers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the synthesized dirty type of the program body.
    Check { file: PathBuf },
    /// Evaluate the program body.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Semantics::Small)]
        semantics: Semantics,
        /// Step budget.
        #[arg(long, env = "COREFF_FUEL", default_value = DEFAULT_FUEL)]
        fuel: usize,
        /// Print every intermediate computation (small-step only).
        #[arg(long)]
        trace: bool,
    },
    /// Rewrite the program body to normal form, leftmost-outermost.
    Rewrite {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Rules::Beta)]
        rules: Rules,
        /// Maximum number of rewrite steps.
        #[arg(long, env = "COREFF_FUEL", default_value = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Compare two programs with the operational equivalence oracle.
    Equiv {
        file1: PathBuf,
        file2: PathBuf,
        /// Number of answers tried for each operation result type.
        #[arg(long, default_value_t = 3)]
        probe_depth: u64,
        /// Step budget per evaluation.
        #[arg(long, env = "COREFF_FUEL", default_value = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Run state-handler law suites (all of them when --law is absent).
    Laws {
        #[arg(long, value_parser = |s: &str| s.parse::<Law>())]
        law: Option<Law>,
        /// Body term size; each law has its own default.
        #[arg(long)]
        size: Option<usize>,
        /// Print the reports as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    Small,
    Big,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rules {
    Beta,
    BetaEta,
}

mod code {
    pub const TYPE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const TIMEOUT: u8 = 3;
    pub const STUCK: u8 = 4;
    pub const NEGATIVE: u8 = 5;
    pub const USAGE: u8 = 64;
    pub const NO_INPUT: u8 = 66;
}

struct Failure(u8);

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Check { file } => check(&file),
        Command::Run {
            file,
            semantics,
            fuel,
            trace,
        } => run(&file, semantics, fuel, trace),
        Command::Rewrite { file, rules, fuel } => rewrite(&file, rules, fuel),
        Command::Equiv {
            file1,
            file2,
            probe_depth,
            fuel,
        } => equiv(&file1, &file2, probe_depth, fuel),
        Command::Laws { law, size, json } => laws(law, size, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(c)) => ExitCode::from(c),
    }
}

fn load(path: &Path) -> Result<ProgramFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        Failure(code::NO_INPUT)
    })?;
    parse_program(&text).map_err(|e| {
        eprintln!("{}:{e}", path.display());
        Failure(code::PARSE)
    })
}

fn typecheck(path: &Path, p: &ProgramFile) -> Result<DirtyType, Failure> {
    synth_comp(&p.table, &TypingContext::new(), &p.body).map_err(|e| {
        eprintln!("{}", e.render(&path.display().to_string(), &p.spans));
        Failure(code::TYPE)
    })
}

fn check(path: &Path) -> CmdResult {
    let p = load(path)?;
    let ty = typecheck(path, &p)?;
    println!("{}", print_dirty(&ty));
    Ok(())
}

fn report(outcome: &EvalOutcome) -> CmdResult {
    match outcome {
        Ok(r) => {
            println!("{}", print_comp(&r.to_comp()));
            Ok(())
        }
        Err(EvalError::Timeout) => {
            println!("TIMEOUT");
            Err(Failure(code::TIMEOUT))
        }
        Err(e @ EvalError::Stuck { .. }) => {
            println!("{e}");
            Err(Failure(code::STUCK))
        }
    }
}

fn run(path: &Path, semantics: Semantics, fuel: usize, with_trace: bool) -> CmdResult {
    if with_trace && matches!(semantics, Semantics::Big) {
        eprintln!("error: --trace requires --semantics small");
        return Err(Failure(code::USAGE));
    }
    let p = load(path)?;
    typecheck(path, &p)?;
    match semantics {
        Semantics::Small if with_trace => {
            let tr = trace(&p.table, &p.body, fuel);
            print!("{tr}");
            match tr.outcome {
                Ok(_) => Ok(()),
                Err(EvalError::Timeout) => Err(Failure(code::TIMEOUT)),
                Err(EvalError::Stuck { .. }) => Err(Failure(code::STUCK)),
            }
        }
        Semantics::Small => report(&run_small(&p.table, &p.body, fuel)),
        Semantics::Big => report(&eval_big(&p.table, &p.body, fuel)),
    }
}

fn rewrite(path: &Path, rules: Rules, fuel: usize) -> CmdResult {
    let p = load(path)?;
    typecheck(path, &p)?;
    let rules = match rules {
        Rules::Beta => RuleSet::beta(),
        Rules::BetaEta => RuleSet::beta_eta(),
    };
    let n = normalize(&p.table, &p.body, &rules, fuel);
    println!("do {}", print_comp(&n.term));
    eprintln!("{} steps", n.steps);
    if n.exhausted {
        eprintln!("fuel exhausted before a normal form was reached");
        return Err(Failure(code::NEGATIVE));
    }
    Ok(())
}

fn equiv(path1: &Path, path2: &Path, probe_depth: u64, fuel: usize) -> CmdResult {
    let p1 = load(path1)?;
    let p2 = load(path2)?;
    typecheck(path1, &p1)?;
    typecheck(path2, &p2)?;
    if p1.table != p2.table {
        eprintln!(
            "{} and {} declare different effects or instances",
            path1.display(),
            path2.display()
        );
        return Err(Failure(code::USAGE));
    }
    let verdict = op_equiv(&p1.table, &p1.body, &p2.body, probe_depth, fuel);
    println!("{verdict}");
    match verdict {
        EquivVerdict::Equivalent => Ok(()),
        _ => Err(Failure(code::NEGATIVE)),
    }
}

fn laws(law: Option<Law>, size: Option<usize>, json: bool) -> CmdResult {
    let table = lab_table();
    let cfg = LawConfig {
        size,
        ..LawConfig::default()
    };
    let selected: Vec<Law> = law.map_or_else(|| Law::ALL.to_vec(), |l| vec![l]);
    let reports: Vec<_> = selected.into_iter().map(|l| law_suite(&table, l, &cfg)).collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize"));
    } else {
        for r in &reports {
            print!("{r}");
        }
    }
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(Failure(code::NEGATIVE))
    }
}
