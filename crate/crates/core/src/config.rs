//! Flat `key=value` configuration files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. The
//! optional `kind` key selects a single run (`run`, the default) or a
//! sweep (`sweep`).
//!
//! ```text
//! kind=sweep
//! problem=deceptive2d
//! delta=0.2,0.1,0.05
//! schemes=random,fuss,tournament:2:1
//! trials=100
//! seed=1
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::engine::{RunConfig, Strategy};
use crate::experiments::{Budget, Capacity, SweepSpec};
use crate::pairing::PairMode;
use crate::population::DeletionPolicy;
use crate::problems::{ProblemSpec, Target, TspMove};

/// A single problem found while parsing; `line` is 0 for missing keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.key, self.reason)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.key, self.reason)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepSpec),
}

const RUN_KEYS: &[&str] = &[
    "kind",
    "problem",
    "scheme",
    "seed",
    "pair_mode",
    "p_x",
    "budget",
    "capacity",
    "deletion",
    "init_size",
    "target",
    "stop_on_hit",
    "zero_limit",
    "mutate_after_crossover",
    "tsp_move",
    "output",
];

const SWEEP_KEYS: &[&str] = &[
    "kind",
    "problem",
    "delta",
    "n",
    "dim",
    "schemes",
    "seed",
    "trials",
    "pair_mode",
    "p_x",
    "budget",
    "capacity",
    "deletion",
    "init_size",
    "target",
    "zero_limit",
    "mutate_after_crossover",
    "tsp_move",
    "output",
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
    errors: Vec<ConfigError>,
}

impl Entries {
    fn error(&mut self, key: &str, line: usize, reason: impl Into<String>) {
        self.errors.push(ConfigError {
            key: key.to_string(),
            line,
            reason: reason.into(),
        });
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, value) = self.values.get(key).cloned()?;
        match parse(&value) {
            Ok(v) => Some(v),
            Err(reason) => {
                self.error(key, line, reason);
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if !self.values.contains_key(key) {
            self.error(key, 0, "missing required key");
            return None;
        }
        self.get(key, parse)
    }
}

fn via<T: FromStr>(what: &'static str) -> impl Fn(&str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    move |s: &str| s.parse::<T>().map_err(|e| format!("malformed {what} '{s}': {e}"))
}

fn spec_value<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got '{s}'")),
    }
}

fn crossover_rate(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("malformed number '{s}'"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("must be in [0, 1], got {p}"))
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be >= 1".into()),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("expected a positive integer, got '{s}'")),
    }
}

fn capacity(s: &str) -> Result<Capacity, String> {
    if s == "none" || s == "unbounded" {
        Ok(Capacity::Unbounded)
    } else {
        positive(s).map(Capacity::Bounded)
    }
}

fn list<T>(s: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(v).map_err(|e| format!("'{v}': {e}")))
        .collect()
}

/// Parses a run or sweep configuration, collecting every error.
pub fn parse_config(text: &str) -> Result<Config, Vec<ConfigError>> {
    let mut entries = Entries {
        values: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            entries.error(content, line, "expected key=value");
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if entries.values.contains_key(key) {
            entries.error(key, line, "duplicate key");
            continue;
        }
        entries.values.insert(key.to_string(), (line, value.to_string()));
    }
    let kind = entries.raw("kind").map(|(l, v)| (l, v.to_string()));
    let (allowed, sweep) = match kind.as_ref().map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "run")) => (RUN_KEYS, false),
        Some((_, "sweep")) => (SWEEP_KEYS, true),
        Some((line, other)) => {
            entries.error("kind", line, format!("expected run or sweep, got '{other}'"));
            return Err(entries.errors);
        }
    };
    let unknown: Vec<(String, usize)> = entries
        .values
        .iter()
        .filter(|(k, _)| !allowed.contains(&k.as_str()))
        .map(|(k, (l, _))| (k.clone(), *l))
        .collect();
    for (key, line) in unknown {
        entries.error(&key, line, "unknown key");
    }
    let config = if sweep {
        parse_sweep(&mut entries).map(Config::Sweep)
    } else {
        parse_run(&mut entries).map(Config::Run)
    };
    match config {
        Some(c) if entries.errors.is_empty() => Ok(c),
        _ => {
            entries.errors.sort_by_key(|e| e.line);
            Err(entries.errors)
        }
    }
}

fn parse_run(e: &mut Entries) -> Option<RunConfig> {
    let problem: Option<ProblemSpec> = e.required("problem", spec_value);
    let strategy: Option<Strategy> = e.required("scheme", spec_value);
    let seed: Option<u64> = e.required("seed", via("seed"));
    let pair_mode = e.get("pair_mode", spec_value::<PairMode>);
    let p_x = e.get("p_x", crossover_rate);
    let budget = e.get("budget", |s| positive(s).map(|b| b as u64));
    let cap = e.get("capacity", capacity);
    let deletion = e.get("deletion", spec_value::<DeletionPolicy>);
    let init_size = e.get("init_size", positive);
    let target = e.get("target", spec_value::<Target>);
    let stop_on_hit = e.get("stop_on_hit", boolean);
    let zero_limit = e.get("zero_limit", boolean);
    let mutate = e.get("mutate_after_crossover", boolean);
    let tsp_move = e.get("tsp_move", spec_value::<TspMove>);
    let output = e.get("output", |s| Ok(PathBuf::from(s)));

    let mut c = RunConfig::new(problem?, strategy?, seed?);
    if let Some(v) = pair_mode {
        c.pair_mode = v;
    }
    if let Some(v) = p_x {
        c.crossover_rate = v;
    }
    if let Some(v) = budget {
        c.budget = v;
    }
    match cap {
        Some(Capacity::Unbounded) => c.capacity = None,
        Some(Capacity::Bounded(n)) => c.capacity = Some(n),
        None => {}
    }
    if let Some(v) = deletion {
        c.deletion = v;
    }
    if let Some(v) = init_size {
        c.init_size = v;
    }
    if let Some(v) = target {
        c.target = v;
    }
    if let Some(v) = stop_on_hit {
        c.stop_on_hit = v;
    }
    if let Some(v) = zero_limit {
        c.zero_limit = v;
    }
    if let Some(v) = mutate {
        c.mutate_after_crossover = v;
    }
    if let Some(v) = tsp_move {
        c.tsp_move = v;
    }
    c.output = output;
    if let Err(err) = c.validate() {
        e.error("config", 0, err.to_string());
        return None;
    }
    Some(c)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] > w[1])
}

fn sweep_problems(e: &mut Entries) -> Option<Vec<ProblemSpec>> {
    let (pline, family) = match e.raw("problem") {
        Some((l, v)) => (l, v.to_string()),
        None => {
            e.error("problem", 0, "missing required key");
            return None;
        }
    };
    let deltas = e.get("delta", |s| list(s, via::<f64>("Δ")));
    let ns = e.get("n", |s| list(s, via::<i64>("line length")));
    let dim = e.get("dim", positive);
    let build = |text: String| text.parse::<ProblemSpec>().map_err(|err| err.to_string());
    let specs: Result<Vec<ProblemSpec>, String> = match (family.as_str(), deltas, ns) {
        (_, Some(_), Some(_)) => Err("give either delta or n, not both".into()),
        ("deceptiveNd", Some(ds), None) => match dim {
            Some(d) => ds.iter().map(|x| build(format!("deceptiveNd:{d}:{x}"))).collect(),
            None => Err("deceptiveNd sweeps need dim".into()),
        },
        ("deceptive2d" | "cont2d", Some(ds), None) => ds.iter().map(|x| build(format!("{family}:{x}"))).collect(),
        ("line", None, Some(ns)) => ns.iter().map(|n| build(format!("line:{n}"))).collect(),
        (f, Some(_), None) => Err(format!("family '{f}' does not take delta")),
        (f, None, Some(_)) => Err(format!("family '{f}' does not take n")),
        (_, None, None) => build(family.clone()).map(|p| vec![p]),
    };
    let specs = match specs {
        Ok(s) if s.is_empty() => Err("no problem cells".to_string()),
        other => other,
    };
    match specs {
        Ok(specs) => {
            let scales: Vec<f64> = specs.iter().filter_map(|p| p.scaling_delta()).collect();
            if specs.len() > 1 && !strictly_decreasing(&scales) {
                let key = if e.raw("delta").is_some() { "delta" } else { "n" };
                let line = e.raw(key).map_or(pline, |(l, _)| l);
                e.error(
                    key,
                    line,
                    "Δ values must be strictly decreasing (n strictly increasing)",
                );
                return None;
            }
            Some(specs)
        }
        Err(reason) => {
            e.error("problem", pline, reason);
            None
        }
    }
}

fn parse_sweep(e: &mut Entries) -> Option<SweepSpec> {
    let problems = sweep_problems(e);
    let strategies = e.required("schemes", |s| list(s, spec_value::<Strategy>));
    let seed: Option<u64> = e.required("seed", via("seed"));
    let trials = e.get("trials", positive);
    let pair_mode = e.get("pair_mode", spec_value::<PairMode>);
    let p_x = e.get("p_x", crossover_rate);
    let budget = e.get("budget", spec_value::<Budget>);
    let cap = e.get("capacity", capacity);
    let deletion = e.get("deletion", spec_value::<DeletionPolicy>);
    let init_size = e.get("init_size", positive);
    let target = e.get("target", spec_value::<Target>);
    let zero_limit = e.get("zero_limit", boolean);
    let mutate = e.get("mutate_after_crossover", boolean);
    let tsp_move = e.get("tsp_move", spec_value::<TspMove>);
    let output = e.get("output", |s| Ok(PathBuf::from(s)));

    let mut spec = SweepSpec::new(problems?, strategies?, trials.unwrap_or(100), seed?);
    if spec.strategies.is_empty() {
        e.error("schemes", 0, "no schemes listed");
        return None;
    }
    if let Some(v) = pair_mode {
        spec.pair_mode = v;
    }
    if let Some(v) = p_x {
        spec.crossover_rate = v;
    }
    if let Some(v) = budget {
        spec.budget = v;
    }
    spec.capacity = cap;
    spec.deletion = deletion;
    if let Some(v) = init_size {
        spec.init_size = v;
    }
    spec.target = target;
    if let Some(v) = zero_limit {
        spec.zero_limit = v;
    }
    if let Some(v) = mutate {
        spec.mutate_after_crossover = v;
    }
    if let Some(v) = tsp_move {
        spec.tsp_move = v;
    }
    spec.output = output;
    if let Err(err) = spec.validate() {
        e.error("config", 0, err.to_string());
        return None;
    }
    Some(spec)
}

/// The run configuration as `key=value` pairs accepted by [`parse_config`].
/// The output path is left out so that traces do not depend on where they
/// are written.
pub fn run_config_pairs(c: &RunConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("problem", c.problem.to_string());
    put("scheme", c.strategy.to_string());
    put("seed", c.seed.to_string());
    put("pair_mode", c.pair_mode.to_string());
    put("p_x", c.crossover_rate.to_string());
    put("budget", c.budget.to_string());
    put(
        "capacity",
        c.capacity.map_or_else(|| "none".to_string(), |n| n.to_string()),
    );
    put("deletion", c.deletion.to_string());
    put("init_size", c.init_size.to_string());
    put("target", c.target.to_string());
    put("stop_on_hit", c.stop_on_hit.to_string());
    put("zero_limit", c.zero_limit.to_string());
    put("mutate_after_crossover", c.mutate_after_crossover.to_string());
    put("tsp_move", c.tsp_move.to_string());
    m
}

/// Renders a run configuration in the file format.
pub fn run_config_text(c: &RunConfig) -> String {
    let mut out = String::from("kind=run\n");
    for (k, v) in run_config_pairs(c) {
        out.push_str(&format!("{k}={v}\n"));
    }
    if let Some(path) = &c.output {
        out.push_str(&format!("output={}\n", path.display()));
    }
    out
}
