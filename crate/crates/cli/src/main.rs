//! Command-line front end: build functionals and boxes as JSON artifacts,
//! evaluate them, check no-signaling, solve archived LPs, and run the
//! monogamy verification harness with certified exact arithmetic.
//!
//! Exit codes: 0 success/verified, 1 claim failure, 2 usage error,
//! 3 resource limit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use bellmono::behavior::Behavior;
use bellmono::bell::{
    build_bkp, build_bkp_multipartite, build_i3322, build_i_prime, decompose_bkp_cglmp,
    BellFunctional,
};
use bellmono::boxes::{local_box, mix, nl_box_bipartite, nl_box_multipartite, uniform_box, MixtureSpec};
use bellmono::error::Error;
use bellmono::lp::{solve, verify_certificate, LpProblem, LpStatus};
use bellmono::monogamy::{
    correlation_monogamy, counterexample_i3322, counterexample_iprime, guessing_bound,
    sweep_csv, verify_observation1, verify_pb, verify_theorem1, verify_theorem2,
    MonogamyReport, VerifyConfig,
};
use bellmono::rational::{format as fmt_q, parse as parse_q, Rational};
use bellmono::scenario::Scenario;

const ENV_VAR_LIMIT: &str = "BELLMONO_LP_VAR_LIMIT";

#[derive(Parser)]
#[command(
    name = "bellmono",
    version,
    about = "Exact rational construction and verification of no-signaling monogamy relations",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build or evaluate Bell functionals.
    Bell {
        #[command(subcommand)]
        cmd: BellCmd,
    },
    /// Construct canonical behaviors.
    #[command(name = "box")]
    BoxCmd {
        #[command(subcommand)]
        cmd: BoxSub,
    },
    /// Behavior sanity checks.
    Ns {
        #[command(subcommand)]
        cmd: NsCmd,
    },
    /// Exact linear programming on archived problems.
    Lp {
        #[command(subcommand)]
        cmd: LpCmd,
    },
    /// The verification harness.
    Monogamy {
        #[command(subcommand)]
        cmd: MonogamyCmd,
    },
}

#[derive(Subcommand)]
enum BellCmd {
    /// Write a functional family member as a JSON artifact.
    Build(BuildArgs),
    /// Evaluate a functional artifact on a behavior artifact; prints the
    /// exact value as num/den.
    Eval {
        #[arg(long)]
        expr: PathBuf,
        #[arg(long)]
        behavior: PathBuf,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "d")]
    d: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Two-party chained functional.
    Bkp,
    /// Multipartite chained functional.
    BkpN,
    /// Four-term pieces recombined with their constant.
    CglmpDecomp,
    /// The modified three-setting chain.
    Iprime,
    /// The three-setting correlator functional.
    I3322,
}

#[derive(Subcommand)]
enum BoxSub {
    /// Write a canonical behavior as a JSON artifact.
    Make(MakeArgs),
}

#[derive(Args)]
struct MakeArgs {
    #[arg(long, value_enum)]
    kind: BoxKind,
    /// Mixture weight for --kind mixture, as num/den.
    #[arg(long)]
    q: Option<String>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "d")]
    d: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoxKind {
    /// Two-party extremal no-signaling box.
    Nl,
    /// Multipartite extremal no-signaling box.
    NlN,
    /// All-zeros deterministic box.
    Local,
    /// Uniform noise.
    Uniform,
    /// q * extremal + (1-q) * local.
    Mixture,
}

#[derive(Subcommand)]
enum NsCmd {
    /// Validate a behavior artifact: probabilities, normalization,
    /// no-signaling.
    Check {
        #[arg(long)]
        behavior: PathBuf,
    },
}

#[derive(Subcommand)]
enum LpCmd {
    /// Solve an archived LP and verify its certificate.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum MonogamyCmd {
    /// Run one verification check (or `all`) and write its report.
    Verify(VerifyArgs),
    /// Tabulate the witness family of the weighted pair relation as CSV.
    Sweep {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "d")]
        d: usize,
        /// Comma-separated list of mixture weights, each num/den.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "d")]
    d: Option<usize>,
    /// Pinned functional value where the check takes one, as num/den.
    #[arg(long)]
    value: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    /// Weighted pair minima (both orders) with witness line.
    Thm1,
    /// Unweighted pair minimum with feasibility scan.
    Obs1,
    /// One Alice against M Bobs.
    Pb,
    /// Multipartite weighted pair minima.
    Thm2,
    /// Modified-chain counterexample.
    Iprime,
    /// Three-setting correlator counterexample.
    I3322,
    /// Guessing-probability bound at a pinned value.
    Guess,
    /// Agreement-vs-value tradeoff, all four setting pairs.
    Corr,
    /// The whole battery at its canonical parameters.
    All,
}

/// A terminal failure: message plus process exit code (2 usage, 3 resource).
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Resource(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

type RunResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> RunResult {
    match cli.cmd {
        Cmd::Bell { cmd: BellCmd::Build(args) } => bell_build(args),
        Cmd::Bell { cmd: BellCmd::Eval { expr, behavior } } => bell_eval(&expr, &behavior),
        Cmd::BoxCmd { cmd: BoxSub::Make(args) } => box_make(args),
        Cmd::Ns { cmd: NsCmd::Check { behavior } } => ns_check(&behavior),
        Cmd::Lp { cmd: LpCmd::Solve { problem, out } } => lp_solve(&problem, &out),
        Cmd::Monogamy { cmd: MonogamyCmd::Verify(args) } => monogamy_verify(args),
        Cmd::Monogamy { cmd: MonogamyCmd::Sweep { m, d, grid, out } } => {
            monogamy_sweep(m, d, &grid, &out)
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, Failure> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| Failure::usage(format!("{} file {} is malformed: {e}", what, path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::usage(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_file(path, &text)
}

fn require(name: &str, v: Option<usize>, context: &str) -> Result<usize, Failure> {
    v.ok_or_else(|| Failure::usage(format!("{context} requires --{name}")))
}

fn parse_rational(s: &str, what: &str) -> Result<Rational, Failure> {
    parse_q(s).map_err(|e| Failure::usage(format!("{what}: {e}")))
}

/// The LP variable limit: default unless the environment overrides it.
fn verify_config() -> Result<VerifyConfig, Failure> {
    let mut config = VerifyConfig::default();
    if let Ok(raw) = std::env::var(ENV_VAR_LIMIT) {
        config.max_lp_vars = raw.parse().map_err(|_| {
            Failure::usage(format!("{ENV_VAR_LIMIT} must be an integer, got {raw:?}"))
        })?;
    }
    Ok(config)
}

fn config_echo(config: &VerifyConfig, params: Value) -> Value {
    json!({
        "parameters": params,
        "lp_var_limit": config.max_lp_vars,
        "q_grid": config.q_grid.iter().map(fmt_q).collect::<Vec<_>>(),
    })
}

/// Report envelope: the resolved configuration is echoed into the header of
/// every report artifact so a reader can reproduce the run.
fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({
        "command": command,
        "config": config,
        "result": result,
    })
}

fn bell_build(args: BuildArgs) -> RunResult {
    let f = match args.family {
        Family::Bkp => {
            let m = require("M", args.m, "--family bkp")?;
            let d = require("d", args.d, "--family bkp")?;
            build_bkp(m, d)?
        }
        Family::BkpN => {
            let n = require("N", args.n, "--family bkp-n")?;
            let m = require("M", args.m, "--family bkp-n")?;
            let d = require("d", args.d, "--family bkp-n")?;
            build_bkp_multipartite(n, m, d)?
        }
        Family::CglmpDecomp => {
            let m = require("M", args.m, "--family cglmp-decomp")?;
            let d = require("d", args.d, "--family cglmp-decomp")?;
            let (parts, constant) = decompose_bkp_cglmp(m, d)?;
            let weighted: Vec<(Rational, &BellFunctional)> = parts
                .iter()
                .map(|p| (Rational::from_integer(1.into()), p))
                .collect();
            BellFunctional::combine(&weighted, format!("decomposition sum for ({m},{d})"))?
                .with_offset_added(&constant)
        }
        Family::Iprime => build_i_prime(),
        Family::I3322 => build_i3322(),
    };
    write_json(&args.out, &f)?;
    println!(
        "built {} on {} -> {}",
        f.label(),
        f.scenario(),
        args.out.display()
    );
    Ok(0)
}

fn bell_eval(expr: &Path, behavior: &Path) -> RunResult {
    let f: BellFunctional = read_json(expr, "functional")?;
    let b: Behavior = read_json(behavior, "behavior")?;
    if f.scenario() != b.scenario() {
        return Err(Failure::usage(format!(
            "scenario mismatch: functional is on {}, behavior on {}",
            f.scenario(),
            b.scenario()
        )));
    }
    let v = f.value(&b)?;
    println!("{}", fmt_q(&v));
    Ok(0)
}

fn box_make(args: MakeArgs) -> RunResult {
    let describe: String;
    let b = match args.kind {
        BoxKind::Nl => {
            let m = require("M", args.m, "--kind nl")?;
            let d = require("d", args.d, "--kind nl")?;
            describe = format!("box make --kind nl --M {m} --d {d}");
            nl_box_bipartite(m, d)?
        }
        BoxKind::NlN => {
            let n = require("N", args.n, "--kind nl-n")?;
            let m = require("M", args.m, "--kind nl-n")?;
            let d = require("d", args.d, "--kind nl-n")?;
            describe = format!("box make --kind nl-n --N {n} --M {m} --d {d}");
            nl_box_multipartite(n, m, d)?
        }
        BoxKind::Local => {
            let n = args.n.unwrap_or(2);
            let m = require("M", args.m, "--kind local")?;
            let d = require("d", args.d, "--kind local")?;
            describe = format!("box make --kind local --N {n} --M {m} --d {d}");
            local_box(n, m, d)?
        }
        BoxKind::Uniform => {
            let n = args.n.unwrap_or(2);
            let m = require("M", args.m, "--kind uniform")?;
            let d = require("d", args.d, "--kind uniform")?;
            describe = format!("box make --kind uniform --N {n} --M {m} --d {d}");
            uniform_box(Scenario::new(n, m, d)?)
        }
        BoxKind::Mixture => {
            let q_raw = args
                .q
                .as_deref()
                .ok_or_else(|| Failure::usage("--kind mixture requires --q"))?;
            let q = parse_rational(q_raw, "--q")?;
            let n = args.n.unwrap_or(2);
            let m = require("M", args.m, "--kind mixture")?;
            let d = require("d", args.d, "--kind mixture")?;
            let extremal = if n == 2 {
                nl_box_bipartite(m, d)?
            } else {
                nl_box_multipartite(n, m, d)?
            };
            describe = format!("box make --kind mixture --q {} --N {n} --M {m} --d {d}", fmt_q(&q));
            mix(&MixtureSpec::new(q, extremal, local_box(n, m, d)?)?)
        }
    };
    let b = b.with_provenance(describe);
    write_json(&args.out, &b)?;
    println!("built box on {} -> {}", b.scenario(), args.out.display());
    Ok(0)
}

fn ns_check(path: &Path) -> RunResult {
    let b: Behavior = read_json(path, "behavior")?;
    let invalid = b.validate();
    if !invalid.is_empty() {
        println!(
            "invalid behavior: {} failures, first: {:?}",
            invalid.len(),
            invalid[0]
        );
        return Ok(1);
    }
    let violations = b.check_no_signaling();
    if !violations.is_empty() {
        println!(
            "signaling: {} violations, first: {:?}",
            violations.len(),
            violations[0]
        );
        return Ok(1);
    }
    println!("no-signaling: ok ({})", b.scenario());
    Ok(0)
}

fn lp_solve(problem_path: &Path, out: &Path) -> RunResult {
    let problem: LpProblem = read_json(problem_path, "LP problem")?;
    let solution = solve(&problem);
    let certified = solution.status == LpStatus::Optimal && verify_certificate(&problem, &solution);
    let config = json!({
        "num_vars": problem.num_vars(),
        "constraints": problem.eq_constraints().len(),
        "sense": format!("{:?}", problem.sense()),
    });
    let result = json!({
        "solution": serde_json::to_value(&solution)
            .map_err(|e| Failure::usage(format!("serialization failed: {e}")))?,
        "certificate_ok": certified,
    });
    write_json(out, &envelope("lp solve", config, result))?;
    let optimum = solution
        .optimum
        .as_ref()
        .map(fmt_q)
        .unwrap_or_else(|| "-".into());
    println!(
        "status {:?}, optimum {}, certificate {} -> {}",
        solution.status,
        optimum,
        if certified { "ok" } else { "failed" },
        out.display()
    );
    match solution.status {
        LpStatus::Optimal if !certified => Ok(1),
        _ => Ok(0),
    }
}

/// One check's worth of reports plus the parameters that produced them.
struct CheckRun {
    check: &'static str,
    params: Value,
    reports: Vec<MonogamyReport>,
}

impl CheckRun {
    fn verified(&self) -> bool {
        self.reports.iter().all(|r| r.verified)
    }

    fn to_value(&self) -> Result<Value, Failure> {
        let reports = serde_json::to_value(&self.reports)
            .map_err(|e| Failure::usage(format!("serialization failed: {e}")))?;
        Ok(json!({
            "check": self.check,
            "parameters": self.params,
            "reports": reports,
        }))
    }
}

fn reject_unused(args: &VerifyArgs, context: &str, uses_value: bool) -> Result<(), Failure> {
    if args.n.is_some() && !context.contains("thm2") {
        return Err(Failure::usage(format!("check {context} does not take --N")));
    }
    if !uses_value && args.value.is_some() {
        return Err(Failure::usage(format!("check {context} does not take --value")));
    }
    Ok(())
}

fn run_check(args: &VerifyArgs, config: &VerifyConfig) -> Result<Vec<CheckRun>, Failure> {
    let runs = match args.check {
        Check::Thm1 => {
            reject_unused(args, "thm1", false)?;
            let m = require("M", args.m, "check thm1")?;
            let d = require("d", args.d, "check thm1")?;
            let (first, swapped) = verify_theorem1(m, d, config)?;
            vec![CheckRun {
                check: "thm1",
                params: json!({"M": m, "d": d}),
                reports: vec![first, swapped],
            }]
        }
        Check::Obs1 => {
            reject_unused(args, "obs1", false)?;
            let m = require("M", args.m, "check obs1")?;
            let d = require("d", args.d, "check obs1")?;
            vec![CheckRun {
                check: "obs1",
                params: json!({"M": m, "d": d}),
                reports: vec![verify_observation1(m, d, config)?],
            }]
        }
        Check::Pb => {
            reject_unused(args, "pb", false)?;
            let m = require("M", args.m, "check pb")?;
            let d = require("d", args.d, "check pb")?;
            vec![CheckRun {
                check: "pb",
                params: json!({"M": m, "d": d}),
                reports: vec![verify_pb(m, d, config)?],
            }]
        }
        Check::Thm2 => {
            let n = require("N", args.n, "check thm2")?;
            let m = require("M", args.m, "check thm2")?;
            let d = require("d", args.d, "check thm2")?;
            if args.value.is_some() {
                return Err(Failure::usage("check thm2 does not take --value"));
            }
            let (first, swapped) = verify_theorem2(n, m, d, config)?;
            vec![CheckRun {
                check: "thm2",
                params: json!({"N": n, "M": m, "d": d}),
                reports: vec![first, swapped],
            }]
        }
        Check::Iprime => {
            reject_unused(args, "iprime", false)?;
            if args.m.is_some() || args.d.is_some() {
                return Err(Failure::usage("check iprime takes no --M/--d"));
            }
            vec![CheckRun {
                check: "iprime",
                params: json!({}),
                reports: vec![counterexample_iprime(config)?],
            }]
        }
        Check::I3322 => {
            reject_unused(args, "i3322", false)?;
            if args.m.is_some() || args.d.is_some() {
                return Err(Failure::usage("check i3322 takes no --M/--d"));
            }
            vec![CheckRun {
                check: "i3322",
                params: json!({}),
                reports: vec![counterexample_i3322(config)?],
            }]
        }
        Check::Guess => {
            reject_unused(args, "guess", true)?;
            let d = require("d", args.d, "check guess")?;
            if args.m.is_some() {
                return Err(Failure::usage("check guess does not take --M"));
            }
            let raw = args
                .value
                .as_deref()
                .ok_or_else(|| Failure::usage("check guess requires --value"))?;
            let v = parse_rational(raw, "--value")?;
            vec![CheckRun {
                check: "guess",
                params: json!({"d": d, "x": 0, "value": fmt_q(&v)}),
                reports: vec![guessing_bound(d, 0, &v, config)?],
            }]
        }
        Check::Corr => {
            reject_unused(args, "corr", false)?;
            let d = require("d", args.d, "check corr")?;
            if args.m.is_some() {
                return Err(Failure::usage("check corr does not take --M"));
            }
            let mut reports = Vec::with_capacity(4);
            for i in 0..2 {
                for j in 0..2 {
                    reports.push(correlation_monogamy(d, i, j, config)?);
                }
            }
            vec![CheckRun {
                check: "corr",
                params: json!({"d": d, "setting_pairs": [[0,0],[0,1],[1,0],[1,1]]}),
                reports,
            }]
        }
        Check::All => {
            reject_unused(args, "all", false)?;
            if args.m.is_some() || args.d.is_some() {
                return Err(Failure::usage("check all takes no parameters"));
            }
            let (t1a, t1b) = verify_theorem1(2, 2, config)?;
            let (t2a, t2b) = verify_theorem2(3, 2, 2, config)?;
            let mut corr_reports = Vec::with_capacity(4);
            for i in 0..2 {
                for j in 0..2 {
                    corr_reports.push(correlation_monogamy(2, i, j, config)?);
                }
            }
            vec![
                CheckRun {
                    check: "thm1",
                    params: json!({"M": 2, "d": 2}),
                    reports: vec![t1a, t1b],
                },
                CheckRun {
                    check: "obs1",
                    params: json!({"M": 3, "d": 2}),
                    reports: vec![verify_observation1(3, 2, config)?],
                },
                CheckRun {
                    check: "pb",
                    params: json!({"M": 2, "d": 2}),
                    reports: vec![verify_pb(2, 2, config)?],
                },
                CheckRun {
                    check: "thm2",
                    params: json!({"N": 3, "M": 2, "d": 2}),
                    reports: vec![t2a, t2b],
                },
                CheckRun {
                    check: "iprime",
                    params: json!({}),
                    reports: vec![counterexample_iprime(config)?],
                },
                CheckRun {
                    check: "i3322",
                    params: json!({}),
                    reports: vec![counterexample_i3322(config)?],
                },
                CheckRun {
                    check: "guess",
                    params: json!({"d": 2, "x": 0, "value": "0/1"}),
                    reports: vec![guessing_bound(2, 0, &Rational::from_integer(0.into()), config)?],
                },
                CheckRun {
                    check: "corr",
                    params: json!({"d": 2, "setting_pairs": [[0,0],[0,1],[1,0],[1,1]]}),
                    reports: corr_reports,
                },
            ]
        }
    };
    Ok(runs)
}

fn monogamy_verify(args: VerifyArgs) -> RunResult {
    let config = verify_config()?;
    let runs = run_check(&args, &config)?;
    let all_verified = runs.iter().all(CheckRun::verified);

    let result = if runs.len() == 1 {
        runs[0].to_value()?
    } else {
        let items: Result<Vec<Value>, Failure> = runs.iter().map(CheckRun::to_value).collect();
        Value::Array(items?)
    };
    let params = runs[0].params.clone();
    let echoed = config_echo(
        &config,
        if runs.len() == 1 { params } else { json!("all") },
    );
    write_json(&args.out, &envelope("monogamy verify", echoed, result))?;

    if runs.len() == 1 {
        let run = &runs[0];
        let head = &run.reports[0];
        let optimum = head
            .lp_optimum
            .as_ref()
            .map(fmt_q)
            .unwrap_or_else(|| "-".into());
        println!(
            "check {}: {} ({} reports, first optimum {}, predicted {}) -> {}",
            run.check,
            if run.verified() { "verified" } else { "claim failed" },
            run.reports.len(),
            optimum,
            fmt_q(&head.predicted_bound),
            args.out.display()
        );
    } else {
        let passed = runs.iter().filter(|r| r.verified()).count();
        let failed: Vec<&str> = runs
            .iter()
            .filter(|r| !r.verified())
            .map(|r| r.check)
            .collect();
        if failed.is_empty() {
            println!("all checks verified ({passed}/{}) -> {}", runs.len(), args.out.display());
        } else {
            println!(
                "{passed}/{} checks verified; claim failed: {} -> {}",
                runs.len(),
                failed.join(", "),
                args.out.display()
            );
        }
    }
    Ok(u8::from(!all_verified))
}

fn monogamy_sweep(m: usize, d: usize, grid_raw: &str, out: &Path) -> RunResult {
    let mut grid = Vec::new();
    for piece in grid_raw.split(',') {
        grid.push(parse_rational(piece, "--grid entry")?);
    }
    if grid.is_empty() {
        return Err(Failure::usage("--grid must list at least one weight"));
    }
    let csv = sweep_csv(m, d, &grid)?;
    write_file(out, &csv)?;
    println!(
        "swept M={m} d={d} over {} points -> {}",
        grid.len(),
        out.display()
    );
    Ok(0)
}
