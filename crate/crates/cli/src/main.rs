//! `sumcheck` command-line front end.
//!
//! Exit codes: 0 accept/success, 1 reject or bound violation, 2 usage,
//! parse or precondition error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use sumcheck_core::adversary::Strategy;
use sumcheck_core::analysis::{
    bound_report, generate_instance, padded_schedule, reclaim_over, true_sum_over, AnalysisConfig, BoundReport,
    GenParams, InstanceKind, Probability, ReportMode, DEFAULT_BUDGET,
};
use sumcheck_core::doc::InstanceDocument;
use sumcheck_core::field::{sample_uniform, seeded_rng, Modulus};
use sumcheck_core::mpoly::{Substitution, Var};
use sumcheck_core::protocol::{sumcheck_run, Prover, RunMode, SumcheckInstance, Transcript};
use sumcheck_core::structure::{default_moduli, run_conformance, BrokenInst, LawReport, MPolyStructure};

// A closed stdout (for example `| head`) is not an error worth a panic.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "sumcheck", version, about = "Run and analyse the sumcheck protocol over prime fields")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Cap on protocol runs per exact computation.
    #[arg(long, global = true, env = "SUMCHECK_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the protocol once and print the transcript.
    Run(RunArgs),
    /// Decide whether an instance's claimed sum is correct.
    Membership { instance: PathBuf },
    /// Compare acceptance probabilities against the soundness bound.
    VerifyBounds(VerifyArgs),
    /// Check the structure axioms and derived lemmas on random inputs.
    Conformance(ConformanceArgs),
    /// Generate a random instance document.
    Gen(GenArgs),
    /// Time protocol runs, evaluation and instantiation.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long, default_value = "honest")]
    prover: Strategy,
    /// Seed for the verifier's randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated variable order; overrides the document's schedule.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<Var>>,
    /// Stop at the first failed check.
    #[arg(long)]
    short_circuit: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct GenParamsArgs {
    #[arg(long, default_value_t = 7)]
    modulus: u64,
    #[arg(long, default_value_t = 2)]
    arity: usize,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long = "h-size", default_value_t = 2)]
    h_size: usize,
    #[arg(long = "max-terms", default_value_t = 6)]
    max_terms: usize,
}

impl GenParamsArgs {
    fn params(self) -> GenParams {
        GenParams { max_terms: self.max_terms, ..GenParams::new(self.modulus, self.arity, self.degree, self.h_size) }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Instance document; omit when using --gen.
    #[arg(required_unless_present = "gen", conflicts_with = "gen")]
    instance: Option<PathBuf>,
    /// Generate the instance instead of reading one.
    #[arg(long, value_parser = parse_kind)]
    gen: Option<InstanceKind>,
    #[command(flatten)]
    params: GenParamsArgs,
    #[arg(long = "gen-seed", default_value_t = 0)]
    gen_seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Seed for Monte-Carlo sampling and the random adversary.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strategies to check; defaults to honest and all adversaries.
    #[arg(long = "prover", value_delimiter = ',')]
    provers: Vec<Strategy>,
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<Var>>,
}

#[derive(Args, Debug)]
struct ConformanceArgs {
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Moduli to draw structures from.
    #[arg(long, value_delimiter = ',')]
    moduli: Option<Vec<u64>>,
    /// Check a deliberately broken instantiation (negative control).
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind, default_value = "valid")]
    kind: InstanceKind,
    #[command(flatten)]
    params: GenParamsArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append this many unused variables to the written schedule.
    #[arg(long, default_value_t = 0)]
    pad: usize,
    /// Write to a file instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated `p:n:d` triples (modulus, arity, degree).
    #[arg(long, value_delimiter = ',', value_parser = parse_size, default_value = "7:2:2,13:3:3,101:4:3")]
    sizes: Vec<(u64, usize, u32)>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Iterations per timed repeat.
    #[arg(long, default_value_t = 200)]
    iterations: usize,
}

fn parse_kind(s: &str) -> std::result::Result<InstanceKind, String> {
    s.parse().map_err(|e: sumcheck_core::Error| e.to_string())
}

fn parse_size(s: &str) -> std::result::Result<(u64, usize, u32), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected p:n:d, got {s:?}");
    match parts.as_slice() {
        [p, n, d] => Ok((p.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

/// Verdict carried back to `main`.
enum Outcome {
    Accept,
    Reject,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(Outcome::Accept) => ExitCode::SUCCESS,
        Ok(Outcome::Reject) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let config = AnalysisConfig::with_budget(cli.budget);
    match &cli.command {
        Command::Run(args) => cmd_run(cli.format, args),
        Command::Membership { instance } => cmd_membership(cli.format, instance, config),
        Command::VerifyBounds(args) => cmd_verify_bounds(cli.format, args, config),
        Command::Conformance(args) => cmd_conformance(cli.format, args),
        Command::Gen(args) => cmd_gen(args, config),
        Command::Bench(args) => cmd_bench(cli.format, args),
    }
}

fn load(path: &Path) -> Result<(MPolyStructure, SumcheckInstance<MPolyStructure>, Option<Vec<Var>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = InstanceDocument::parse(&text)
        .and_then(|d| d.to_instance())
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok((parsed.structure, parsed.instance, parsed.schedule))
}

fn default_schedule(inst: &SumcheckInstance<MPolyStructure>) -> Vec<Var> {
    inst.p.vars().into_iter().collect()
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    out!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Accept
    } else {
        Outcome::Reject
    }
}

fn cmd_run(format: Format, args: &RunArgs) -> Result<Outcome> {
    let (s, inst, doc_schedule) = load(&args.instance)?;
    let vars = args.schedule.clone().or(doc_schedule).unwrap_or_else(|| default_schedule(&inst));
    let mut rng = seeded_rng(args.seed);
    let schedule: Vec<_> = vars.iter().map(|&x| (x, sample_uniform(s.modulus(), &mut rng))).collect();
    let mode = if args.short_circuit { RunMode::ShortCircuit } else { RunMode::Full };
    let r0 = s.modulus().zero();
    let (accept, transcript) =
        sumcheck_run(&s, &args.prover, args.prover.initial_state(), &inst, &r0, &schedule, mode)?;
    match format {
        Format::Json => print_json(&json!({
            "accept": accept,
            "prover": args.prover,
            "seed": args.seed,
            "transcript": transcript,
        }))?,
        Format::Text => print_transcript(&inst, &args.prover, &transcript),
    }
    Ok(verdict(accept))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn print_transcript(inst: &SumcheckInstance<MPolyStructure>, prover: &Strategy, t: &Transcript<MPolyStructure>) {
    out!("prover {prover}; claim v = {} over H = {:?}", inst.v, inst.h.iter().map(|h| h.value()).collect::<Vec<_>>());
    out!("p = {}", inst.p);
    for (i, r) in t.rounds.iter().enumerate() {
        out!("round {} (x{}):", i + 1, r.variable);
        out!("  message     q = {}", r.message);
        out!(
            "  checks      variable {} | degree {} | evaluation {}",
            mark(r.variable_ok),
            mark(r.degree_ok),
            mark(r.evaluation_ok)
        );
        out!("  randomness  r = {}", r.randomness);
        out!("  reduced     p = {}, v = {}", r.reduced_poly, r.reduced_value);
        if let Some(note) = &r.note {
            out!("  note        {note}");
        }
    }
    match t.final_check {
        Some(ok) => out!("final check: {}", mark(ok)),
        None => out!("final check: skipped"),
    }
    out!("{}", if t.accept { "ACCEPT" } else { "REJECT" });
}

fn cmd_membership(format: Format, path: &Path, config: AnalysisConfig) -> Result<Outcome> {
    let (s, inst, schedule) = load(path)?;
    let vars = match schedule {
        Some(sched) => sched.into_iter().collect(),
        None => inst.p.vars(),
    };
    let sum = true_sum_over(&s, &inst, &vars, config.budget)?;
    let member = sum == inst.v;
    match format {
        Format::Json => print_json(&json!({ "member": member, "claimed": inst.v, "true_sum": sum }))?,
        Format::Text => {
            out!("claimed {} true sum {} -> {}", inst.v, sum, if member { "member" } else { "not a member" })
        }
    }
    Ok(verdict(member))
}

fn cmd_verify_bounds(format: Format, args: &VerifyArgs, config: AnalysisConfig) -> Result<Outcome> {
    let (s, inst, doc_schedule) = match (&args.instance, args.gen) {
        (Some(path), _) => load(path)?,
        (None, Some(kind)) => {
            let inst = generate_instance(kind, args.params.params(), args.gen_seed, config.budget)?;
            (MPolyStructure::new(inst.p.modulus()), inst, None)
        }
        (None, None) => bail!("an instance file or --gen is required"),
    };
    let schedule = args.schedule.clone().or(doc_schedule).unwrap_or_else(|| default_schedule(&inst));
    let strategies = if args.provers.is_empty() {
        let mut all = vec![Strategy::Honest];
        all.extend(Strategy::adversaries(args.seed));
        all
    } else {
        args.provers.clone()
    };
    let mode = match args.mode {
        Mode::Exact => ReportMode::Exact,
        Mode::Mc => ReportMode::MonteCarlo { trials: args.trials, seed: args.seed },
    };
    let report = bound_report(&s, &inst, &schedule, &strategies, mode, config)?;
    match format {
        Format::Json => print_json(&report)?,
        Format::Text => print_report(&report),
    }
    Ok(verdict(report.pass))
}

fn print_report(r: &BoundReport) {
    out!("instance {} over F_{}; deg {}; schedule {:?}", r.digest, r.modulus, r.degree, r.schedule);
    out!("membership: {}", r.membership);
    out!("bound n*d/|F| = {}", r.bound);
    for row in &r.rows {
        let verdict = if row.pass { "pass" } else { "FAIL" };
        let claim = format!("{:?}", row.claim).to_lowercase();
        match &row.error {
            Some(e) => out!("  {:<14} {:<13} error: {e}  {verdict}", row.strategy.to_string(), claim),
            None => {
                let relation = match (&row.probability, row.claim) {
                    (_, sumcheck_core::analysis::Claim::Soundness) => format!("<= {}", r.bound),
                    (_, sumcheck_core::analysis::Claim::Completeness) => "== 1".to_string(),
                    _ => String::new(),
                };
                out!("  {:<14} {:<13} {}  {relation}  {verdict}", row.strategy.to_string(), claim, row.probability);
                if let Probability::Exact { breakdown, .. } = &row.probability {
                    if !breakdown.first_failures.is_empty() {
                        let parts: Vec<String> =
                            breakdown.first_failures.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        out!("      first failures: {}", parts.join(" "));
                    }
                    out!(
                        "      accepted: first message honest {} / dishonest {}",
                        breakdown.accepted_honest_first,
                        breakdown.accepted_dishonest_first
                    );
                }
            }
        }
    }
    out!("{}", if r.pass { "PASS" } else { "FAIL" });
}

fn cmd_conformance(format: Format, args: &ConformanceArgs) -> Result<Outcome> {
    let moduli = match &args.moduli {
        Some(ps) => ps.iter().map(|&p| Modulus::new(p)).collect::<std::result::Result<Vec<_>, _>>()?,
        None => default_moduli(),
    };
    let structures: Vec<MPolyStructure> = moduli.into_iter().map(MPolyStructure::new).collect();
    let reports: Vec<LawReport> = if args.inject_fault {
        let broken: Vec<_> = structures.into_iter().map(BrokenInst).collect();
        run_conformance(&broken, args.cases, args.seed)
    } else {
        run_conformance(&structures, args.cases, args.seed)
    };
    let pass = reports.iter().all(LawReport::passed);
    match format {
        Format::Json => print_json(&reports)?,
        Format::Text => {
            for r in &reports {
                out!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            out!("{} laws, {} failed", reports.len(), failed);
        }
    }
    Ok(verdict(pass))
}

fn cmd_gen(args: &GenArgs, config: AnalysisConfig) -> Result<Outcome> {
    let inst = generate_instance(args.kind, args.params.params(), args.seed, config.budget)?;
    let text = if args.pad > 0 {
        let schedule = padded_schedule(&inst.p.vars(), args.pad);
        let padded = reclaim_over(&inst, &schedule.iter().copied().collect(), config.budget)?;
        InstanceDocument::from_instance(&padded, Some(schedule)).to_json()
    } else {
        InstanceDocument::from_instance(&inst, None).to_json()
    };
    match &args.out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => out!("{text}"),
    }
    Ok(Outcome::Accept)
}

#[derive(Serialize)]
struct BenchRow {
    modulus: u64,
    arity: usize,
    degree: u32,
    runs_per_sec: Stat,
    evals_per_sec: Stat,
    insts_per_sec: Stat,
}

#[derive(Serialize, Clone, Copy)]
struct Stat {
    mean: f64,
    stddev: f64,
}

impl Stat {
    fn of(samples: &[f64]) -> Stat {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var =
            if samples.len() > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stat { mean, stddev: var.sqrt() }
    }
}

fn rate(iterations: usize, mut f: impl FnMut(usize) -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for i in 0..iterations {
        f(i)?;
    }
    Ok(iterations as f64 / start.elapsed().as_secs_f64().max(1e-9))
}

fn cmd_bench(format: Format, args: &BenchArgs) -> Result<Outcome> {
    if args.repeats == 0 || args.iterations == 0 {
        bail!("--repeats and --iterations must be positive");
    }
    let mut rows = Vec::new();
    for &(p, n, d) in &args.sizes {
        let inst = generate_instance(InstanceKind::Valid, GenParams::new(p, n, d, 2), 1, DEFAULT_BUDGET)?;
        let m = inst.p.modulus();
        let s = MPolyStructure::new(m);
        let vars: Vec<Var> = (1..=n as Var).collect();
        let mut rng = seeded_rng(2);
        let points: Vec<Substitution> =
            (0..args.iterations).map(|_| vars.iter().map(|&v| (v, sample_uniform(m, &mut rng))).collect()).collect();
        let (mut runs, mut evals, mut insts) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..args.repeats {
            runs.push(rate(args.iterations, |i| {
                let sched: Vec<_> = points[i].iter().map(|(v, r)| (*v, *r)).collect();
                sumcheck_run(&s, &Strategy::Honest, Default::default(), &inst, &m.zero(), &sched, RunMode::Full)?;
                Ok(())
            })?);
            evals.push(rate(args.iterations, |i| {
                std::hint::black_box(inst.p.eval(&points[i])?);
                Ok(())
            })?);
            insts.push(rate(args.iterations, |i| {
                let first: Substitution = points[i].iter().take(1).map(|(v, r)| (*v, *r)).collect();
                std::hint::black_box(inst.p.inst(&first)?);
                Ok(())
            })?);
        }
        rows.push(BenchRow {
            modulus: p,
            arity: n,
            degree: d,
            runs_per_sec: Stat::of(&runs),
            evals_per_sec: Stat::of(&evals),
            insts_per_sec: Stat::of(&insts),
        });
    }
    match format {
        Format::Json => print_json(&rows)?,
        Format::Text => {
            out!("{:>6} {:>3} {:>3} {:>24} {:>24} {:>24}", "p", "n", "d", "runs/s", "evals/s", "insts/s");
            let cell = |s: Stat| format!("{:.0} ± {:.0}", s.mean, s.stddev);
            for r in &rows {
                out!(
                    "{:>6} {:>3} {:>3} {:>24} {:>24} {:>24}",
                    r.modulus,
                    r.arity,
                    r.degree,
                    cell(r.runs_per_sec),
                    cell(r.evals_per_sec),
                    cell(r.insts_per_sec)
                );
            }
        }
    }
    Ok(Outcome::Accept)
}
