//! `dynmatch`: solve and inspect dynamic matching markets from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 enumeration limit, 3 empty
//! solution set, 4 failed check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use dynmatch::dsl::{parse_document, validate_ordinal};
use dynmatch::framework::{check_consistency, check_generalized_consistency, is_phi_solution, SolutionVerdict};
use dynmatch::matching::enumerate_matchings;
use dynmatch::report::{render, solve_report_json, ReportOptions};
use dynmatch::reproduce::{example1_claims, example2_claims, Claim};
use dynmatch::{
    fixtures, format_matching, parse_matching, solve, Concept, EmptyPolicy, Engine, Error, History, SolverConfig,
};
use serde_json::json;

const EXIT_INPUT: u8 = 1;
const EXIT_LIMIT: u8 = 2;
const EXIT_EMPTY: u8 = 3;
const EXIT_FAIL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "dynmatch",
    version,
    about = "Exact solutions of two-sided dynamic matching markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Vacuous,
    Strict,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    /// The matching is a solution under the concept.
    Solution,
    /// Consistency at a candidate matching.
    Cc,
    /// Consistency at every solution of the economy.
    Generalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Example1,
    Example2,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Conjecture family.
    #[arg(long, value_parser = parse_concept)]
    concept: Concept,
    /// How an empty conjecture set bounds its owner.
    #[arg(long, value_enum, default_value = "vacuous")]
    empty_conjectures: Policy,
    /// Abort once this many matchings or plans would be enumerated.
    #[arg(long, default_value_t = dynmatch::matching::DEFAULT_MAX_MATCHINGS)]
    max_matchings: usize,
    /// Worker threads for the direct filter; 0 picks a default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            empty_conjectures: match self.empty_conjectures {
                Policy::Vacuous => EmptyPolicy::Vacuous,
                Policy::Strict => EmptyPolicy::Strict,
            },
            max_matchings: self.max_matchings,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse an economy file, check its ordinal claims, print canonical text.
    Parse {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// List every dynamic matching, optionally leaving one agent single at period 1.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        unmatched: Option<String>,
        #[arg(long, default_value_t = dynmatch::matching::DEFAULT_MAX_MATCHINGS)]
        max_matchings: usize,
        /// Print only the number of matchings.
        #[arg(long)]
        count: bool,
    },
    /// Compute the solution set under a concept.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        json: bool,
        /// Rejected matchings reported with a witness; all by default.
        #[arg(long)]
        max_witnesses: Option<usize>,
        /// Include wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Check one matching, or the whole economy for generalized consistency.
    Check {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Inline matching such as `t=1: a1-b1 | t=2: a2-b2`, or a file holding one.
        #[arg(long)]
        matching: Option<String>,
        #[arg(long = "check", value_enum, default_value = "solution")]
        kind: CheckKind,
        #[arg(long)]
        json: bool,
    },
    /// Re-derive the claims about a bundled example.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
        /// Use this economy file instead of the bundled one.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

fn parse_concept(s: &str) -> Result<Concept, String> {
    s.parse::<Concept>().map_err(|e| e.to_string())
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::SizeLimitExceeded { .. }) {
            EXIT_LIMIT
        } else {
            EXIT_INPUT
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Parses an economy file, returning the economy and its content digest.
fn load(path: &Path) -> Result<(dynmatch::Economy, String), Failure> {
    let text = read(path)?;
    let doc = parse_document(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let econ = doc.to_economy()?;
    Ok((econ, doc.digest()))
}

fn cmd_parse(file: &Path, as_json: bool) -> Result<u8, Failure> {
    let text = read(file)?;
    let doc = parse_document(&text).map_err(|e| input_error(format!("{}: {e}", file.display())))?;
    let econ = doc.to_economy()?;
    let checked =
        validate_ordinal(&econ, &doc.ordinals).map_err(|e| input_error(format!("ordinal claim fails: {e}")))?;
    if as_json {
        let out = json!({
            "economy_digest": doc.digest(),
            "periods": econ.horizon(),
            "agents": econ.len(),
            "ordinal_comparisons": checked,
            "canonical": doc.serialize(),
        });
        print!("{}", render(&out));
    } else {
        print!("{}", doc.serialize());
        eprintln!("digest {}; {} ordinal comparisons hold", doc.digest(), checked);
    }
    Ok(0)
}

fn cmd_enumerate(file: &Path, unmatched: Option<&str>, cap: usize, count: bool) -> Result<u8, Failure> {
    let (econ, _) = load(file)?;
    let k = unmatched.map(|n| econ.agent_ix(n)).transpose()?;
    let all = enumerate_matchings(&econ, &History::root(), k, cap)?;
    if count {
        println!("{}", all.len());
    } else {
        for m in &all {
            println!("{}", format_matching(&econ, m));
        }
    }
    Ok(0)
}

fn cmd_solve(
    file: &Path,
    solver: &SolverArgs,
    as_json: bool,
    max_witnesses: Option<usize>,
    timing: bool,
) -> Result<u8, Failure> {
    let (econ, digest) = load(file)?;
    let start = Instant::now();
    let report = solve(&econ, solver.concept, solver.config())?;
    let elapsed = start.elapsed().as_millis();
    let opts = ReportOptions {
        max_witnesses,
        timing_ms: timing.then_some(elapsed),
    };
    if as_json {
        print!("{}", render(&solve_report_json(&econ, &digest, &report, opts)));
    } else {
        println!(
            "concept {} on {} ({} agents, {} periods)",
            report.concept,
            file.display(),
            econ.len(),
            econ.horizon()
        );
        println!("solutions: {}", report.solutions.len());
        for m in &report.solutions {
            println!("  {}", format_matching(&econ, m));
        }
        println!("candidates: {}", report.candidates.len());
        for (m, v) in report.candidates.iter().zip(&report.consistency) {
            let failures: Vec<String> = v
                .failures
                .iter()
                .map(|&(t, k)| format!("(t={t}, {})", econ.name(k)))
                .collect();
            let verdict = if v.pass {
                "consistent".to_string()
            } else {
                format!("inconsistent at {}", failures.join(" "))
            };
            println!("  {}  [{verdict}]", format_matching(&econ, m));
        }
        println!(
            "checked {} matchings directly; filter and recursion {}",
            report.enumerated,
            if report.definitions_agree { "agree" } else { "DISAGREE" }
        );
        if timing {
            println!("time {elapsed} ms");
        }
    }
    Ok(if report.solutions.is_empty() { EXIT_EMPTY } else { 0 })
}

fn matching_text(spec: &str) -> Result<String, Failure> {
    let path = Path::new(spec);
    if !spec.contains(':') && path.is_file() {
        return Ok(read(path)?.trim().to_string());
    }
    Ok(spec.to_string())
}

fn cmd_check(
    file: &Path,
    solver: &SolverArgs,
    spec: Option<&str>,
    kind: CheckKind,
    as_json: bool,
) -> Result<u8, Failure> {
    let (econ, digest) = load(file)?;
    let mut engine = Engine::new(&econ, solver.config());
    let fam = solver.concept.family();
    let matching = match (kind, spec) {
        (CheckKind::Generalized, _) => None,
        (_, Some(s)) => Some(parse_matching(&econ, &matching_text(s)?)?),
        (_, None) => return Err(input_error("--matching is required for this check")),
    };
    let (pass, mut detail) = match (kind, &matching) {
        (CheckKind::Solution, Some(m)) => match is_phi_solution(&mut engine, &fam, m)? {
            SolutionVerdict::Solution => (true, json!({})),
            SolutionVerdict::Blocked(w) => {
                let comparisons: Vec<_> = w
                    .comparisons
                    .iter()
                    .map(|c| {
                        json!({
                            "agent": econ.name(c.agent),
                            "alternative": c.alternative.as_ref().map(|p| p.to_string()),
                            "current": c.current.to_string(),
                        })
                    })
                    .collect();
                (
                    false,
                    json!({ "witness": {
                        "kind": w.kind.as_str(),
                        "period": w.period,
                        "agents": w.agents.iter().map(|&k| econ.name(k)).collect::<Vec<_>>(),
                        "comparisons": comparisons,
                    }}),
                )
            }
        },
        (CheckKind::Cc, Some(m)) => match check_consistency(&mut engine, &fam, m) {
            Ok(v) => {
                let pairs = |xs: &[(usize, usize)]| -> Vec<_> {
                    xs.iter()
                        .map(|&(t, k)| json!({ "period": t, "agent": econ.name(k) }))
                        .collect()
                };
                (
                    v.pass,
                    json!({ "checked": pairs(&v.checked), "failures": pairs(&v.failures) }),
                )
            }
            Err(Error::NotACandidate(_)) => (false, json!({ "not_a_candidate": true })),
            Err(e) => return Err(e.into()),
        },
        _ => {
            let v = check_generalized_consistency(&mut engine, &fam)?;
            let first = v
                .violation
                .as_ref()
                .map(|(m, t, k)| json!({ "matching": format_matching(&econ, m), "period": t, "agent": econ.name(*k) }));
            (
                v.pass,
                json!({ "solutions_checked": v.solutions_checked, "violations": v.violations, "first_violation": first }),
            )
        }
    };
    let check_name = match kind {
        CheckKind::Solution => "solution",
        CheckKind::Cc => "cc",
        CheckKind::Generalized => "generalized",
    };
    detail["pass"] = json!(pass);
    detail["check"] = json!(check_name);
    detail["concept"] = json!(solver.concept.name());
    detail["economy_digest"] = json!(digest);
    if let Some(m) = &matching {
        detail["matching"] = json!(format_matching(&econ, m));
    }
    if as_json {
        print!("{}", render(&detail));
    } else {
        println!(
            "{check_name} check under {}: {}",
            solver.concept,
            if pass { "pass" } else { "FAIL" }
        );
        if let Some(failures) = detail.get("failures").and_then(|f| f.as_array()) {
            for f in failures {
                println!(
                    "  fails at t={} for {}",
                    f["period"],
                    f["agent"].as_str().unwrap_or("?")
                );
            }
        }
        if let Some(w) = detail.get("witness") {
            println!("  blocked: {w}");
        }
        if detail.get("not_a_candidate").is_some() {
            println!("  not a candidate matching");
        }
        if let Some(v) = detail.get("first_violation").filter(|v| !v.is_null()) {
            println!("  first violation: {v}");
        }
    }
    Ok(if pass { 0 } else { EXIT_FAIL })
}

fn cmd_reproduce(example: Example, fixture: Option<&Path>) -> Result<u8, Failure> {
    let econ = match (fixture, example) {
        (Some(path), _) => load(path)?.0,
        (None, Example::Example1) => fixtures::example1(),
        (None, Example::Example2) => fixtures::example2(),
    };
    let config = SolverConfig::default();
    let claims: Vec<Claim> = match example {
        Example::Example1 => example1_claims(&econ, config),
        Example::Example2 => example2_claims(&econ, config),
    };
    for c in &claims {
        println!(
            "{} {}: {} ({})",
            c.id,
            if c.pass { "PASS" } else { "FAIL" },
            c.statement,
            c.detail
        );
    }
    let passed = claims.iter().filter(|c| c.pass).count();
    println!("{passed}/{} claims hold", claims.len());
    match claims.iter().find(|c| !c.pass) {
        Some(c) => {
            eprintln!("first failing claim: {}", c.id);
            Ok(EXIT_FAIL)
        }
        None => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse { file, json } => cmd_parse(file, *json),
        Command::Enumerate {
            file,
            unmatched,
            max_matchings,
            count,
        } => cmd_enumerate(file, unmatched.as_deref(), *max_matchings, *count),
        Command::Solve {
            file,
            solver,
            json,
            max_witnesses,
            timing,
        } => cmd_solve(file, solver, *json, *max_witnesses, *timing),
        Command::Check {
            file,
            solver,
            matching,
            kind,
            json,
        } => cmd_check(file, solver, matching.as_deref(), *kind, *json),
        Command::Reproduce { example, fixture } => cmd_reproduce(*example, fixture.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
