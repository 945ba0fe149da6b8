//! Subcommands other than `run`.

use crate::error::{CliError, Outcome};
use crate::run::{read, read_tm, write_atomic};
use crate::OutArg;
use clap::{Args, Subcommand, ValueEnum};
use fixpoint::directions::*;
use fixpoint::params::*;
use fixpoint::permlang::compile::DEFAULT_COMPILE_BUDGET;
use fixpoint::permlang::{compile_to_tm, parse, Env, Measurement};
use fixpoint::rules::reductions::{build_enumeration_sequence, HaltingReduction, TablePermutation};
use fixpoint::suites::{self, Budget, SuiteReport, Toy};
use fixpoint::turing::{toys, TmProgram};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Duration;

fn emit(out: &OutArg, v: &str) -> Result<(), CliError> {
    match &out.out {
        Some(p) => write_atomic(p, v.as_bytes()),
        None => {
            print!("{v}");
            Ok(())
        }
    }
}

fn emit_json(out: &OutArg, v: &Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    emit(out, &s)
}

/// The budget from `FIXPOINT_BUDGET_MS`, unlimited when unset.
pub fn env_budget() -> Result<Budget, CliError> {
    match std::env::var("FIXPOINT_BUDGET_MS") {
        Err(_) => Ok(Budget::unlimited()),
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(|ms| Budget::within(Duration::from_millis(ms)))
            .map_err(|_| CliError::validation(format!("FIXPOINT_BUDGET_MS=`{v}` is not a number of milliseconds"))),
    }
}

fn rats(s: &str) -> Result<Vec<Rat>, CliError> {
    s.split(',').map(|x| parse_rat(x).map_err(|e| CliError::parse(e.to_string()))).collect()
}

/// `ε` for `n` levels: one value per level, the last one repeated.
fn eps_for(s: &str, n: usize) -> Result<Vec<Rat>, CliError> {
    let mut v = rats(s)?;
    let last = v.last().cloned().expect("split yields one item");
    v.resize(n.max(v.len()), last);
    Ok(v)
}

fn parse_word(s: &str) -> Result<Vec<Directive>, CliError> {
    s.chars()
        .map(|c| match c.to_digit(10) {
            Some(d) if d < 3 => Ok(DIRECTIVES[d as usize]),
            _ => Err(CliError::parse(format!("directive letters are 0, 1, 2; got `{c}`"))),
        })
        .collect()
}

fn word_digits(w: &[Directive]) -> String {
    w.iter().map(|a| DIRECTIVES.iter().position(|d| d == a).expect("directive letter").to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    #[value(name = "gammaU", alias = "gamma-u")]
    GammaU,
    Reversibility,
    Koo,
    Compute,
    Shift,
    Unive,
    Sonfather,
    Composition,
    Periods,
    Cover,
    Ne,
    Sequences,
    Params,
    Halting,
    Compiler,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    suite: Suite,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// gammaU: random machines.
    #[arg(long, default_value_t = 100)]
    machines: usize,
    /// gammaU: steps per machine.
    #[arg(long, default_value_t = 30)]
    steps: usize,
    /// Samples per rule or per grid.
    #[arg(long)]
    samples: Option<usize>,
    /// koo: largest S and T; sonfather: largest S.
    #[arg(long)]
    max_s: Option<u64>,
    /// cover and ne: depth.
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// cover: comma-separated ε values.
    #[arg(long, default_value = "0,1/10,41/100")]
    eps: String,
    /// unive: the simulated toy (identity, flip, swap).
    #[arg(long, default_value = "swap")]
    toy: String,
    /// shift: colony sizes.
    #[arg(long, value_delimiter = ',', default_value = "16,64")]
    sizes: Vec<u64>,
    /// periods: search horizon in work periods.
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    /// halting: halting time of the machine.
    #[arg(long, default_value_t = 6)]
    halt: usize,
    /// halting: levels instantiated as rules.
    #[arg(long, value_delimiter = ',', default_value = "0,5,6,9")]
    levels: Vec<u64>,
    /// sequences: deepest level.
    #[arg(long, default_value_t = 64)]
    max_n: u64,
    #[command(flatten)]
    out: OutArg,
}

fn run_suite(s: Suite, a: &VerifyArgs, budget: Budget) -> Result<Vec<SuiteReport>, CliError> {
    let toy: Toy = a.toy.parse().map_err(CliError::validation)?;
    Ok(match s {
        Suite::GammaU => vec![suites::gamma_u(
            &suites::GammaOptions { machines: a.machines, steps: a.steps, seed: a.seed, ..Default::default() },
            budget,
        )],
        Suite::Reversibility => {
            let d = suites::ReversibilityOptions::default();
            vec![suites::reversibility(
                &suites::ReversibilityOptions { samples: a.samples.unwrap_or(d.samples), seed: a.seed },
                budget,
            )]
        }
        Suite::Koo => {
            let d = suites::KooOptions::default();
            let m = a.max_s.unwrap_or(d.max_s);
            vec![suites::koo(
                &suites::KooOptions { max_s: m, max_t: m, samples: a.samples.unwrap_or(d.samples), seed: a.seed },
                budget,
            )]
        }
        Suite::Compute => vec![suites::compute(budget)],
        Suite::Shift => {
            vec![suites::shift(&suites::ShiftOptions { colony_sizes: a.sizes.clone(), seed: a.seed }, budget)]
        }
        Suite::Unive => {
            let d = suites::UniveOptions::default();
            vec![suites::unive(
                &suites::UniveOptions { toy, perturbations: a.samples.unwrap_or(d.perturbations), seed: a.seed },
                budget,
            )]
        }
        Suite::Sonfather => vec![suites::sonfather(a.max_s.unwrap_or(32) as usize, budget)],
        Suite::Composition => vec![suites::composition(budget)],
        Suite::Periods => vec![suites::periods(a.horizon, budget)],
        Suite::Cover => {
            vec![suites::cover(&suites::CoverOptions { depth: a.depth, eps: rats(&a.eps)?, seed: a.seed }, budget)]
        }
        Suite::Ne => vec![suites::ne_pipeline(a.depth, a.seed, budget)],
        Suite::Sequences => vec![suites::sequences(a.max_n, budget)],
        Suite::Params => vec![suites::params(budget)],
        Suite::Halting => {
            vec![suites::halting(&suites::HaltingOptions { h: a.halt, levels: a.levels.clone() }, budget)]
        }
        Suite::Compiler => vec![suites::compiler(budget)],
        Suite::All => {
            let mut v = vec![];
            for s in Suite::value_variants().iter().filter(|s| **s != Suite::All) {
                v.extend(run_suite(*s, a, budget)?);
            }
            v
        }
    })
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let reports = run_suite(a.suite, a, env_budget()?)?;
    emit(&a.out, &reports.iter().map(SuiteReport::to_ndjson).collect::<String>())?;
    Ok(if reports.iter().any(|r| !r.failures().is_empty()) {
        Outcome::Negative
    } else if reports.iter().any(SuiteReport::budget_exhausted) {
        Outcome::Budget
    } else {
        Outcome::Success
    })
}

/// A machine pair given as a toy, machine files or a program.
#[derive(Debug, Args)]
pub struct MachineArgs {
    /// A toy machine (identity, flip, swap), its own inverse.
    #[arg(long, conflicts_with_all = ["tm", "perm"])]
    toy: Option<String>,
    /// A machine in text form.
    #[arg(long, requires = "tm_inv", conflicts_with = "perm")]
    tm: Option<PathBuf>,
    /// Its inverse in text form.
    #[arg(long)]
    tm_inv: Option<PathBuf>,
    /// A program compiled on the simulated layout.
    #[arg(long)]
    perm: Option<PathBuf>,
}

fn machines(m: &MachineArgs, kprime: &[usize]) -> Result<(TmProgram, TmProgram), CliError> {
    if let Some(t) = &m.toy {
        let p = t.parse::<Toy>().map_err(CliError::validation)?.program();
        return Ok((p.clone(), p));
    }
    if let (Some(p), Some(q)) = (&m.tm, &m.tm_inv) {
        return Ok((read_tm(p)?, read_tm(q)?));
    }
    if let Some(path) = &m.perm {
        let c = compile_file(path, kprime)?;
        return Ok((c.forward, c.backward));
    }
    Err(CliError::usage("give --toy, --tm with --tm-inv, or --perm"))
}

fn compile_file(path: &Path, k: &[usize]) -> Result<fixpoint::permlang::CompiledTm, CliError> {
    let p = parse(&read(path)?).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    compile_to_tm(&p, k, &Env::new(), DEFAULT_COMPILE_BUDGET).map_err(|e| CliError::validation(e.to_string()))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RecipeKind {
    #[value(name = "hieraA")]
    HieraA,
    #[value(name = "hieraB")]
    HieraB,
    Reali,
}

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    /// The tightest toy universal witness for a machine pair.
    ToyUnive {
        #[arg(long, value_delimiter = ',', required = true)]
        kprime: Vec<usize>,
        #[command(flatten)]
        machine: MachineArgs,
        #[arg(long, default_value_t = 0)]
        t0: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Self-simulation parameters from polynomial bounds.
    SelfSim {
        /// Coefficients of the alphabet bound, lowest degree first.
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        p1: Vec<i64>,
        /// Coefficients of the time bound, lowest degree first.
        #[arg(long, value_delimiter = ',', conflicts_with = "samples")]
        p2: Option<Vec<i64>>,
        /// Measured `x:steps` pairs fitted for the time bound.
        #[arg(long, value_delimiter = ',')]
        samples: Option<Vec<String>>,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 4000)]
        prog_len: usize,
        #[arg(long, default_value_t = 40)]
        head: usize,
        #[arg(long, default_value = "9/10")]
        min_ratio: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Level sequences and their inequalities.
    Sequences {
        #[arg(long, value_enum)]
        recipe: RecipeKind,
        #[arg(long, default_value_t = 2)]
        q: u64,
        #[arg(long)]
        n0: u64,
        #[arg(long, default_value_t = 1)]
        r: u32,
        #[arg(long, default_value_t = 4000)]
        prog_len: usize,
        #[arg(long, default_value_t = 40)]
        head: usize,
        /// Time bound coefficients, lowest degree first.
        #[arg(long, value_delimiter = ',', default_value = "0,0,1")]
        time: Vec<i64>,
        #[arg(long, default_value_t = 64)]
        levels: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn ratio(s: &str) -> Result<BigRational, CliError> {
    parse_rat(s).map_err(|e| CliError::parse(e.to_string()))
}

pub fn solve(c: &SolveCmd) -> Result<Outcome, CliError> {
    let invalid = |e: ParamError| CliError::validation(e.to_string());
    match c {
        SolveCmd::ToyUnive { kprime, machine, t0, out } => {
            let (p, pinv) = machines(machine, kprime)?;
            let w = solve_toy_unive(kprime, &p, &pinv, *t0).map_err(invalid)?;
            emit_json(out, &w.to_json())?;
            Ok(if w.check().passed() { Outcome::Success } else { Outcome::Negative })
        }
        SolveCmd::SelfSim { p1, p2, samples, degree, prog_len, head, min_ratio, out } => {
            let (p2, source) = match (p2, samples) {
                (Some(c), None) => (Poly::from_ints(c), FitSource::Supplied),
                (None, Some(s)) => {
                    let pts = s
                        .iter()
                        .map(|x| {
                            let (a, b) = x
                                .split_once(':')
                                .ok_or_else(|| CliError::parse(format!("sample `{x}` is not x:steps")))?;
                            let n =
                                |v: &str| v.trim().parse::<u64>().map_err(|_| CliError::parse(format!("sample `{x}`")));
                            Ok((n(a)?, n(b)?))
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    (fit_polynomial(&pts, *degree).map_err(invalid)?, FitSource::Measured { samples: pts })
                }
                _ => return Err(CliError::usage("give --p2 or --samples")),
            };
            let model = SelfSimModel {
                prog_len: *prog_len,
                rev_len: *prog_len,
                head_bound: *head,
                p1: Poly::from_ints(p1),
                p2,
                source,
            };
            match solve_self_sim(&model, &ratio(min_ratio)?, &SelfSimLimits::default()) {
                SelfSimOutcome::Witness(w) => {
                    emit_json(
                        out,
                        &json!({
                            "fit": model.p2.to_string_poly(),
                            "r": w.r,
                            "S0": w.s0.to_string(),
                            "S": w.s.to_string(),
                            "T": w.t.to_string(),
                            "U": w.u.to_string(),
                            "k": w.k,
                            "ratio": fmt_rat(&w.ratio),
                            "certified": w.certified,
                            "executable": w.executable,
                            "inequalities": w.report.to_json(),
                        }),
                    )?;
                    Ok(Outcome::Success)
                }
                SelfSimOutcome::Infeasible(c) => {
                    emit_json(out, &json!({"infeasible": c.reason}))?;
                    Ok(Outcome::Negative)
                }
            }
        }
        SolveCmd::Sequences { recipe, q, n0, r, prog_len, head, time, levels, out } => {
            let recipe = match recipe {
                RecipeKind::HieraA => Recipe::HieraA { q: *q, n0: *n0, r: *r },
                RecipeKind::HieraB => Recipe::HieraB { q: *q, n0: *n0 },
                RecipeKind::Reali => Recipe::Reali { q: *q, n0: *n0, r: *r },
            };
            let seq = make_sequences(recipe, *prog_len, *head, TimeModel(Poly::from_ints(time))).map_err(invalid)?;
            let mut ok = true;
            let rows: Vec<Value> = (0..=*levels)
                .map(|n| {
                    let rep = seq.level_inequalities(n);
                    ok &= rep.passed();
                    json!({
                        "n": n,
                        "S": seq.s(n).to_string(),
                        "T": seq.t_max(n).to_string(),
                        "U": seq.u(n).to_string(),
                        "passed": rep.passed(),
                        "failures": rep.failures().iter().map(|c| &c.name).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let ratio = ratio_product(&seq, *levels);
            emit_json(
                out,
                &json!({
                    "recipe": format!("{:?}", seq.recipe),
                    "levels": rows,
                    "ratio_verdict": ratio.verdict,
                    "ratio_lower_bound": ratio.lower_bound.as_ref().map(fmt_rat),
                }),
            )?;
            Ok(if ok { Outcome::Success } else { Outcome::Negative })
        }
    }
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Program source.
    program: PathBuf,
    /// Field lengths of the compiled layout.
    #[arg(long, value_delimiter = ',', required = true)]
    layout: Vec<usize>,
    /// Where to write the forward machine; standard output when absent.
    #[command(flatten)]
    out: OutArg,
    /// Where to write the inverse machine.
    #[arg(long)]
    inverse_out: Option<PathBuf>,
}

fn measure_json(m: &Measurement) -> Value {
    json!({
        "code_length": m.size,
        "states": m.states,
        "max_steps": m.time.max_steps,
        "accepted": m.time.accepted,
        "empty_accepted_set": m.time.empty_accepted_set,
    })
}

pub fn compile(a: &CompileArgs) -> Result<Outcome, CliError> {
    let c = compile_file(&a.program, &a.layout)?;
    emit(&a.out, &c.forward.to_text())?;
    if let Some(p) = &a.inverse_out {
        write_atomic(p, c.backward.to_text().as_bytes())?;
    }
    eprintln!(
        "{}",
        json!({"forward": measure_json(&c.forward_measure), "backward": measure_json(&c.backward_measure)})
    );
    Ok(Outcome::Success)
}

#[derive(Debug, Subcommand)]
pub enum DirectionsCmd {
    /// The interval of a directive word, letters 0, 1, 2.
    Theta {
        #[arg(long)]
        word: String,
        /// ε per level, comma-separated; the last value repeats.
        #[arg(long, default_value = "0")]
        eps: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// The union over every word of a given length.
    Cover {
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value = "0")]
        eps: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// A word whose interval contains a slope.
    Search {
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value = "0")]
        eps: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// The nested interval of a tower given as `S:T:D` levels, outermost first.
    Nested {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        levels: Vec<String>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn interval_json(i: &SlopeInterval) -> Value {
    json!({"interval": i.to_json(), "diameter": fmt_rat(&i.diameter()), "midpoint": fmt_rat(&i.midpoint())})
}

pub fn directions(c: &DirectionsCmd) -> Result<Outcome, CliError> {
    let dir = |e: DirError| CliError::validation(e.to_string());
    match c {
        DirectionsCmd::Theta { word, eps, out } => {
            let w = parse_word(word)?;
            let i = theta_interval(&w, &eps_for(eps, w.len())?).map_err(dir)?;
            let mut v = interval_json(&i);
            v["word"] = json!(word);
            emit_json(out, &v)?;
        }
        DirectionsCmd::Cover { depth, eps, out } => {
            if env_budget()?.exhausted() {
                return Ok(Outcome::Budget);
            }
            let mut e = eps_for(eps, *depth)?;
            e.truncate(*depth);
            let rep = cover_check(&e);
            let mut v = rep.to_json();
            v["hole"] = json!(rep.hole.as_ref().map(|(a, b)| [word_digits(a), word_digits(b)]));
            emit_json(out, &v)?;
        }
        DirectionsCmd::Search { x, depth, eps, out } => {
            let w = directive_search(&ratio(x)?, &eps_for(eps, *depth)?, *depth).map_err(dir)?;
            let i = theta_interval(&w, &eps_for(eps, *depth)?).map_err(dir)?;
            let mut v = interval_json(&i);
            v["word"] = json!(word_digits(&w));
            emit_json(out, &v)?;
        }
        DirectionsCmd::Nested { levels, out } => {
            let ls = levels
                .iter()
                .map(|l| {
                    let parts: Vec<&str> = l.split(':').collect();
                    let n = |s: &str| s.trim().parse::<BigInt>().map_err(|_| CliError::parse(format!("level `{l}`")));
                    match parts.as_slice() {
                        [s, t, d] => {
                            let (s, t) = (n(s)?, n(t)?);
                            if s <= BigInt::from(0) || t <= BigInt::from(0) {
                                return Err(CliError::validation(format!("level `{l}`: S and T must be positive")));
                            }
                            Ok(Level::new(s, t, n(d)?))
                        }
                        _ => Err(CliError::parse(format!("level `{l}` is not S:T:D"))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            emit_json(out, &interval_json(&nested_ne_interval(&ls)))?;
        }
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Subcommand)]
pub enum ReduceCmd {
    /// `α_n` is defined while the machine runs for `n` steps on `0^n`.
    Halting {
        /// The machine in text form.
        #[arg(long, conflicts_with = "halts_at")]
        tm: Option<PathBuf>,
        /// A built-in machine halting after exactly this many steps.
        #[arg(long)]
        halts_at: Option<usize>,
        #[arg(long, default_value_t = 16)]
        levels: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// `α_n` is the last table an enumerator emitted within `n` steps.
    Enumeration {
        #[arg(long)]
        tm: PathBuf,
        /// States that mark an emission, as digit strings.
        #[arg(long, value_delimiter = ',', required = true)]
        emit: Vec<String>,
        /// Field length of the table entries.
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

pub fn reduce(c: &ReduceCmd) -> Result<Outcome, CliError> {
    match c {
        ReduceCmd::Halting { tm, halts_at, levels, out } => {
            let m = match (tm, halts_at) {
                (Some(p), None) => read_tm(p)?,
                (None, Some(h)) => toys::halts_at(*h),
                _ => return Err(CliError::usage("give --tm or --halts-at")),
            };
            emit_json(out, &HaltingReduction::new(m).manifest(*levels))?;
        }
        ReduceCmd::Enumeration { tm, emit, l, horizon, out } => {
            let m = read_tm(tm)?;
            let states = emit
                .iter()
                .map(|s| fixpoint::encoding::parse_word(s).map_err(|e| CliError::parse(format!("state `{s}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let fallback = TablePermutation::new(vec![*l; 3], vec![]).map_err(CliError::validation)?;
            emit_json(out, &build_enumeration_sequence(&m, &states, *l, fallback, *horizon).manifest())?;
        }
    }
    Ok(Outcome::Success)
}
