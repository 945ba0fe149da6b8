//! Run manifests: a rule, an initial configuration, step counts and
//! export targets.

use crate::error::{CliError, Outcome};
use fixpoint::encoding::{bin_encode, format_letter, parse_letter, sharp_pad, LengthVector, Letter};
use fixpoint::params::{solve_toy_unive, ToyWitness};
use fixpoint::permlang::{parse, Compiled, Env};
use fixpoint::ppa::{to_csv, to_ndjson, to_pgm, Automaton, PeriodicConfig, PpaRule, StepReject, StripPattern};
use fixpoint::rules::gamma_u::{embed_config, tm_embedding};
use fixpoint::rules::library::*;
use fixpoint::simulation::unive_spec;
use fixpoint::suites::Toy;
use fixpoint::turing::{TmConfig, TmProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Path to a rule manifest, relative to this file, or the rule inline.
    pub rule: Value,
    pub initial: Initial,
    #[serde(default)]
    pub steps: Steps,
    #[serde(default)]
    pub export: Export,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Steps {
    #[serde(default)]
    pub down: usize,
    #[serde(default)]
    pub up: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Export {
    /// NDJSON trace; standard output when absent.
    pub trace: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
    /// Field rendered in the PGM, by label or index.
    pub pgm_field: Option<Value>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Initial {
    /// Letters repeated cyclically up to `period`.
    Letters { letters: Vec<String>, period: Option<usize> },
    /// Uniformly random digits in every field, from the seed.
    Random { period: usize },
    /// A coordinate grid for the coordinate rule.
    Grid { cells: usize, phase: u64, clock: u64 },
    /// Encoding of a simulated configuration, for the universal rule.
    Simulated { letters: Vec<String> },
    /// A machine configuration, for the embedding rule.
    Machine { input: String, period: usize, offset: i64 },
}

/// A machine named by toy or loaded from a text file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MachineRef {
    Named(String),
    Pair { tm: PathBuf, inverse: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleManifest {
    Coordi {
        #[serde(rename = "S")]
        s: u64,
        #[serde(rename = "T")]
        t: u64,
    },
    #[serde(rename = "gammaU")]
    GammaU { machine: MachineRef },
    Compute {
        #[serde(rename = "S")]
        s: u64,
        #[serde(rename = "T")]
        t: u64,
        #[serde(rename = "U")]
        u: u64,
        #[serde(default)]
        t0: u64,
        machine: MachineRef,
    },
    Shift {
        nu: Vec<i8>,
        kprime: Vec<usize>,
        #[serde(rename = "S")]
        s: u64,
        #[serde(rename = "T")]
        t: u64,
        #[serde(default)]
        t0: u64,
    },
    Unive {
        nu: Vec<i8>,
        kprime: Vec<usize>,
        machine: MachineRef,
        #[serde(default)]
        t0: u64,
        #[serde(default = "yes")]
        son_father_check: bool,
    },
    Chekka {
        kprime: Vec<usize>,
        #[serde(rename = "S")]
        s: u64,
    },
    Hier {
        kprime: Vec<usize>,
        #[serde(rename = "S")]
        s: u64,
        i: usize,
        t: String,
    },
    /// A program file with optional field lengths.
    Program { source: PathBuf, layout: Option<Vec<usize>> },
}

fn yes() -> bool {
    true
}

/// A rule ready to run.
pub struct Built {
    pub rule: PpaRule,
    pub labels: Vec<String>,
    pub manifest: Value,
    pub witness: Option<ToyWitness>,
}

pub fn load_machine(m: &MachineRef, base: &Path) -> Result<(TmProgram, TmProgram), CliError> {
    match m {
        MachineRef::Named(name) => {
            let toy: Toy = name.parse().map_err(|e: String| CliError::validation(e))?;
            let p = toy.program();
            Ok((p.clone(), p))
        }
        MachineRef::Pair { tm, inverse } => Ok((read_tm(&base.join(tm))?, read_tm(&base.join(inverse))?)),
    }
}

pub fn read_tm(path: &Path) -> Result<TmProgram, CliError> {
    let src = read(path)?;
    TmProgram::from_text(&src).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn from_instance(inst: RuleInstance, witness: Option<ToyWitness>) -> Built {
    let labels = inst.program.fields.iter().map(|f| f.label.clone()).collect();
    Built { manifest: inst.manifest(), rule: inst.rule, labels, witness }
}

pub fn build_rule(m: &RuleManifest, base: &Path) -> Result<Built, CliError> {
    let inst = |r: Result<RuleInstance, RuleError>| r.map_err(|e| CliError::validation(e.to_string()));
    Ok(match m {
        RuleManifest::Coordi { s, t } => from_instance(inst(make_coordi(*s, *t))?, None),
        RuleManifest::GammaU { machine } => {
            let (p, _) = load_machine(machine, base)?;
            let rule = tm_embedding(Arc::new(p));
            let labels = ["Tape", "Head_-1", "Head_+1"].map(String::from).to_vec();
            Built { manifest: json!({"generator": "gammaU", "alphabet": rule.alphabet}), rule, labels, witness: None }
        }
        RuleManifest::Compute { s, t, u, t0, machine } => {
            let (p, pinv) = load_machine(machine, base)?;
            from_instance(inst(make_compute(&ComputeParams { s: *s, t: *t, u: *u, t0: *t0, p, pinv }))?, None)
        }
        RuleManifest::Shift { nu, kprime, s, t, t0 } => from_instance(inst(make_shift(nu, kprime, *s, *t, *t0))?, None),
        RuleManifest::Unive { nu, kprime, machine, t0, son_father_check } => {
            let (p, pinv) = load_machine(machine, base)?;
            let w = solve_toy_unive(kprime, &p, &pinv, *t0).map_err(|e| CliError::validation(e.to_string()))?;
            let opts = UniveOptions { force: false, son_father_check: *son_father_check };
            from_instance(inst(make_unive(&w, nu, &p, &pinv, opts))?, Some(w))
        }
        RuleManifest::Chekka { kprime, s } => from_instance(inst(make_chekka(kprime, *s))?, None),
        RuleManifest::Hier { kprime, s, i, t } => {
            let t = fixpoint::encoding::parse_word(t).map_err(|e| CliError::parse(e.to_string()))?;
            from_instance(inst(make_hier(kprime, *s, *i, &t))?, None)
        }
        RuleManifest::Program { source, layout } => {
            let path = base.join(source);
            let program = parse(&read(&path)?).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
            let labels: Vec<String> = program.fields.iter().map(|f| f.label.clone()).collect();
            let compiled = Compiled::new(program.clone(), Arc::new(Env::new()))
                .map_err(|names| CliError::validation(format!("unbound names: {}", names.join(", "))))?;
            let mut rule = PpaRule::new("program", program.directions(), Arc::new(compiled));
            if let Some(k) = layout {
                if k.len() != labels.len() {
                    return Err(CliError::validation(format!("{} lengths for {} fields", k.len(), labels.len())));
                }
                rule = rule.with_alphabet(k.clone());
            }
            Built {
                manifest: json!({"generator": "program", "fields": labels, "layout": layout}),
                rule,
                labels,
                witness: None,
            }
        }
    })
}

fn pad(l: usize, v: u64) -> Result<Vec<u8>, CliError> {
    sharp_pad(l, &bin_encode(v.into())).map_err(|e| CliError::validation(e.to_string()))
}

fn letters(src: &[String]) -> Result<Vec<Letter>, CliError> {
    src.iter().map(|s| parse_letter(s).map_err(|e| CliError::parse(format!("letter `{s}`: {e}")))).collect()
}

pub fn initial_config(
    init: &Initial,
    built: &Built,
    rule: &RuleManifest,
    seed: u64,
) -> Result<PeriodicConfig, CliError> {
    let nonempty = |n: usize| {
        if n == 0 {
            Err(CliError::validation("empty configuration"))
        } else {
            Ok(())
        }
    };
    match init {
        Initial::Letters { letters: src, period } => {
            let ls = letters(src)?;
            let p = period.unwrap_or(ls.len());
            nonempty(ls.len().min(p))?;
            Ok(PeriodicConfig::new((0..p).map(|n| ls[n % ls.len()].clone()).collect()))
        }
        Initial::Random { period } => {
            nonempty(*period)?;
            let k: &LengthVector = built
                .rule
                .alphabet
                .as_ref()
                .ok_or_else(|| CliError::validation("random configurations need field lengths"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cells = (0..*period)
                .map(|_| k.iter().map(|&l| (0..l).map(|_| rng.gen_range(0..5u8)).collect()).collect())
                .collect();
            Ok(PeriodicConfig::new(cells))
        }
        Initial::Grid { cells, phase, clock } => {
            let RuleManifest::Coordi { s, t } = rule else {
                return Err(CliError::validation("grid configurations are for the coordinate rule"));
            };
            nonempty(*cells)?;
            let k = built.rule.alphabet.clone().expect("coordinate rules carry lengths");
            let c = (0..*cells as u64)
                .map(|n| {
                    let a = pad(k[0], (n + phase) % s)?;
                    let q = pad(k[2], clock % t)?;
                    Ok(vec![a.clone(), a, q.clone(), q])
                })
                .collect::<Result<_, CliError>>()?;
            Ok(PeriodicConfig::new(c))
        }
        Initial::Simulated { letters: src } => {
            let w = built
                .witness
                .as_ref()
                .ok_or_else(|| CliError::validation("simulated configurations are for the universal rule"))?;
            let ls = letters(src)?;
            nonempty(ls.len())?;
            unive_spec(w).encode(&PeriodicConfig::new(ls)).map_err(|e| CliError::validation(e.to_string()))
        }
        Initial::Machine { input, period, offset } => {
            let RuleManifest::GammaU { machine } = rule else {
                return Err(CliError::validation("machine configurations are for the embedding rule"));
            };
            let (p, _) = load_machine(machine, Path::new("."))?;
            let u = parse_letter(input).map_err(|e| CliError::parse(e.to_string()))?;
            nonempty(*period)?;
            Ok(embed_config(&p, &TmConfig::initial(&u), *period, *offset))
        }
    }
}

/// Rows `F^{-down}(c) … F^{up}(c)` and the first rejection met.
pub fn trace<A: Automaton + ?Sized>(
    f: &A,
    c: &PeriodicConfig,
    down: usize,
    up: usize,
) -> (StripPattern, Option<StepReject>) {
    let mut below = vec![];
    let mut reject = None;
    let mut cur = c.clone();
    for k in 0..down {
        match f.step_backward(&cur) {
            Ok(n) => {
                cur = n;
                below.push(cur.clone());
            }
            Err(e) => {
                reject = Some(e.with_time(-(k as i64)));
                break;
            }
        }
    }
    let start_time = -(below.len() as i64);
    below.reverse();
    let mut rows = below;
    rows.push(c.clone());
    if reject.is_none() {
        let mut cur = c.clone();
        for k in 0..up {
            match f.step_forward(&cur) {
                Ok(n) => {
                    cur = n;
                    rows.push(cur.clone());
                }
                Err(e) => {
                    reject = Some(e.with_time(k as i64));
                    break;
                }
            }
        }
    }
    (StripPattern { rows, start_time }, reject)
}

/// Writes `data` through a sibling temporary file.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, data)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn field_index(sel: &Option<Value>, labels: &[String]) -> Result<usize, CliError> {
    match sel {
        None => Ok(0),
        Some(Value::Number(n)) => n
            .as_u64()
            .map(|i| i as usize)
            .filter(|&i| i < labels.len())
            .ok_or_else(|| CliError::validation(format!("field index {n} out of range"))),
        Some(Value::String(s)) => {
            labels.iter().position(|l| l == s).ok_or_else(|| CliError::validation(format!("no field `{s}`")))
        }
        Some(v) => Err(CliError::validation(format!("bad field selector {v}"))),
    }
}

pub fn cmd_run(path: &Path) -> Result<Outcome, CliError> {
    let m: RunManifest =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let loaded;
    let (rule_m, rule_base) = match &m.rule {
        Value::String(p) => {
            let full = base.join(p);
            loaded = serde_json::from_str::<RuleManifest>(&read(&full)?)
                .map_err(|e| CliError::validation(format!("{}: {e}", full.display())))?;
            (&loaded, full.parent().unwrap_or(Path::new(".")).to_path_buf())
        }
        v => {
            loaded = RuleManifest::deserialize(v)
                .map_err(|e| CliError::validation(format!("{}: rule: {e}", path.display())))?;
            (&loaded, base.to_path_buf())
        }
    };
    let built = build_rule(rule_m, &rule_base)?;
    let initial = match &m.initial {
        Initial::Machine { .. } => {
            let RuleManifest::GammaU { machine } = rule_m else {
                return Err(CliError::validation("machine configurations are for the embedding rule"));
            };
            let resolved = RuleManifest::GammaU { machine: rebase(machine, &rule_base) };
            initial_config(&m.initial, &built, &resolved, m.seed)?
        }
        init => initial_config(init, &built, rule_m, m.seed)?,
    };
    let field = field_index(&m.export.pgm_field, &built.labels)?;
    let (strip, reject) = trace(&built.rule, &initial, m.steps.down, m.steps.up);
    let nd = to_ndjson(&strip, reject.as_ref());
    match &m.export.trace {
        Some(p) => write_atomic(&base.join(p), nd.as_bytes())?,
        None => print!("{nd}"),
    }
    if let Some(p) = &m.export.pgm {
        write_atomic(&base.join(p), &to_pgm(&strip, field))?;
    }
    if let Some(p) = &m.export.csv {
        write_atomic(&base.join(p), to_csv(&strip).as_bytes())?;
    }
    let summary = json!({
        "rule": built.manifest,
        "rows": strip.rows.len(),
        "start_time": strip.start_time,
        "final": strip.rows.last().map(|r| r.cells.iter().map(|u| format_letter(u)).collect::<Vec<_>>()),
        "rejection": reject.as_ref().map(|r| json!({"t": r.time, "cell": r.cell, "line": r.line, "reason": r.reason})),
    });
    eprintln!("{summary}");
    Ok(if reject.is_some() { Outcome::Negative } else { Outcome::Success })
}

fn rebase(m: &MachineRef, base: &Path) -> MachineRef {
    match m {
        MachineRef::Named(n) => MachineRef::Named(n.clone()),
        MachineRef::Pair { tm, inverse } => MachineRef::Pair { tm: base.join(tm), inverse: base.join(inverse) },
    }
}
