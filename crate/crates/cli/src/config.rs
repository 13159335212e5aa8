//! Config files: `key = value` lines with dotted keys, optional `[section]` headers,
//! or a JSON object whose nesting is flattened to the same dotted keys.

use std::collections::BTreeMap;

use subordkit::subordinator::{kill, stable_timechange, tilt, Repr};
use subordkit::{LevyKind, LevyMeasure, SubordinatorSpec};

use crate::error::CliError;

const KEYS: &[&str] = &[
    "label",
    "kill",
    "drift",
    "levy.kind",
    "levy.tempering",
    "transform",
    "grid.values",
    "grid.lo",
    "grid.hi",
    "grid.points",
    "sim.seed",
    "sim.n",
    "sim.epsilon",
    "sim.compensate",
    "sim.workers",
    "sim.alpha",
    "sim.lambdas",
    "sim.pairs",
    "sim.points",
    "sim.n_trunc",
    "sim.n_max",
    "inversion.method",
    "inversion.nodes",
    "inversion.residual",
    "quadrature.abs_tol",
    "quadrature.rel_tol",
    "quadrature.max_subdivisions",
    "idtest.lo",
    "idtest.hi",
    "idtest.points",
    "idtest.tol",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

fn err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config { line, msg: msg.into() }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg = if text.trim_start().starts_with('{') {
            Self::parse_json(text)?
        } else {
            Self::parse_text(text)?
        };
        for (k, e) in &cfg.entries {
            if !(KEYS.contains(&k.as_str()) || k.starts_with("levy.params.")) {
                return Err(err(e.line, format!("unknown key `{k}`")));
            }
        }
        Ok(cfg)
    }

    fn parse_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(name) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{s}`")))?;
            let k = k.trim();
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(err(line, format!("bad key `{k}`")));
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            cfg.insert(key, v.trim().to_string(), line)?;
        }
        Ok(cfg)
    }

    fn parse_json(text: &str) -> Result<Self, CliError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| err(e.line(), e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &v, &mut flat).map_err(|m| err(1, m))?;
        let mut cfg = Config::default();
        for (k, value) in flat {
            let last = k.rsplit('.').next().unwrap_or(&k);
            let needle = format!("\"{last}\"");
            let line = text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1);
            cfg.insert(k, value, line)?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: String, value: String, line: usize) -> Result<(), CliError> {
        if let Some(prev) = self.entries.get(&key) {
            return Err(err(line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        self.entries.insert(key, Entry { value, line });
        Ok(())
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(1, |e| e.line)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.entries
            .get(key)
            .map(|e| parse_f64(&e.value).ok_or_else(|| err(e.line, format!("`{key}`: not a number: `{}`", e.value))))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.entries
            .get(key)
            .map(|e| {
                e.value
                    .parse::<u64>()
                    .map_err(|_| err(e.line, format!("`{key}`: not a nonnegative integer: `{}`", e.value)))
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.entries
            .get(key)
            .map(|e| match e.value.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                v => Err(err(e.line, format!("`{key}`: not a boolean: `{v}`"))),
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.entries
            .get(key)
            .map(|e| parse_list(&e.value).map_err(|m| err(e.line, format!("`{key}`: {m}"))))
            .transpose()
    }

    pub fn pairs(&self, key: &str) -> Result<Option<Vec<(f64, f64)>>, CliError> {
        self.entries
            .get(key)
            .map(|e| parse_pairs(&e.value).map_err(|m| err(e.line, format!("`{key}`: {m}"))))
            .transpose()
    }

    /// The spec described by `kill`, `drift`, `levy.*`, `transform` and `label`.
    pub fn spec(&self) -> Result<SubordinatorSpec, CliError> {
        let q = self.f64_or("kill", 0.0)?;
        let a = self.f64_or("drift", 0.0)?;
        let kind_line = self.line_of("levy.kind");
        let kind = self.str("levy.kind").unwrap_or("none");
        let params: BTreeMap<&str, &Entry> = self
            .entries
            .iter()
            .filter_map(|(k, e)| k.strip_prefix("levy.params.").map(|p| (p, e)))
            .collect();
        let allowed: &[&str] = match kind {
            "none" => &[],
            "exponential" => &["rate", "arrival"],
            "gamma" => &["c", "beta"],
            "stable" => &["gamma"],
            "atoms" => &["locations", "masses"],
            "tabulated" => &["knots", "tail"],
            other => {
                return Err(err(
                    kind_line,
                    format!("unknown levy.kind `{other}` (none, exponential, gamma, stable, atoms, tabulated)"),
                ))
            }
        };
        for (p, e) in &params {
            if !allowed.contains(p) {
                return Err(err(e.line, format!("levy.kind `{kind}` takes no parameter `{p}`")));
            }
        }
        let num = |p: &str| -> Result<f64, CliError> {
            let e = params
                .get(p)
                .ok_or_else(|| err(kind_line, format!("levy.kind `{kind}` needs levy.params.{p}")))?;
            parse_f64(&e.value).ok_or_else(|| err(e.line, format!("levy.params.{p}: not a number")))
        };
        let list = |p: &str| -> Result<Vec<f64>, CliError> {
            let e = params
                .get(p)
                .ok_or_else(|| err(kind_line, format!("levy.kind `{kind}` needs levy.params.{p}")))?;
            parse_list(&e.value).map_err(|m| err(e.line, format!("levy.params.{p}: {m}")))
        };
        let core = |line: usize| move |e: subordkit::Error| err(line, e.to_string());
        let mut levy = match kind {
            "none" => Ok(LevyMeasure::none()),
            "exponential" => LevyMeasure::exponential(num("rate")?, num("arrival")?),
            "gamma" => LevyMeasure::gamma_jumps(num("c")?, num("beta")?),
            "stable" => LevyMeasure::stable(num("gamma")?),
            "atoms" => {
                let (x, m) = (list("locations")?, list("masses")?);
                if x.len() != m.len() {
                    return Err(err(kind_line, "levy.params.locations and masses differ in length"));
                }
                let pairs: Vec<(f64, f64)> = x.into_iter().zip(m).collect();
                LevyMeasure::atoms(&pairs)
            }
            _ => LevyMeasure::tabulated(list("knots")?, list("tail")?),
        }
        .map_err(core(kind_line))?;
        if let Some(th) = self.f64("levy.tempering")? {
            if th > 0.0 {
                levy = levy.tempered_by(th).map_err(core(self.line_of("levy.tempering")))?;
            }
        }
        let mut spec = SubordinatorSpec::new(q, a, levy).map_err(core(self.line_of("kill").min(kind_line)))?;
        if let Some(t) = self.str("transform") {
            let line = self.line_of("transform");
            for item in t.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (op, v) = item
                    .split_once(':')
                    .ok_or_else(|| err(line, format!("transform item `{item}` is not `op:value`")))?;
                let v = parse_f64(v.trim()).ok_or_else(|| err(line, format!("transform `{item}`: not a number")))?;
                spec = match op.trim() {
                    "tilt" => tilt(&spec, v),
                    "kill" => kill(&spec, v),
                    "timechange" => stable_timechange(&spec, v),
                    o => return Err(err(line, format!("unknown transform `{o}` (tilt, kill, timechange)"))),
                }
                .map_err(core(line))?;
            }
        }
        if let Some(l) = self.str("label") {
            spec = spec.with_label(l);
        }
        Ok(spec)
    }

    /// `grid.values`, or `grid.points` log-spaced points on `[grid.lo, grid.hi]`.
    pub fn grid(&self) -> Result<Option<Vec<f64>>, CliError> {
        if let Some(v) = self.list("grid.values")? {
            return Ok(Some(v));
        }
        let (Some(lo), Some(hi)) = (self.f64("grid.lo")?, self.f64("grid.hi")?) else {
            return Ok(None);
        };
        let n = self.u64("grid.points")?.unwrap_or(50) as usize;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(err(self.line_of("grid.lo"), "grid needs 0 < lo < hi and at least two points"));
        }
        Ok(Some(subordkit::numerics::log_grid(lo, hi, n)))
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) -> Result<(), String> {
    use serde_json::Value;
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out)?;
            }
        }
        Value::Array(xs) => {
            let items: Result<Vec<String>, String> = xs
                .iter()
                .map(|x| match x {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(format!("`{prefix}`: arrays may hold numbers or strings only")),
                })
                .collect();
            out.push((prefix.to_string(), items?.join(", ")));
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => return Err(format!("`{prefix}` is null")),
    }
    Ok(())
}

pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| !v.is_nan())
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']');
    s.split([',', ' '])
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_f64(t).ok_or_else(|| format!("not a number: `{t}`")))
        .collect()
}

/// `a:b, c:d, ...`.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t.split_once(':').ok_or_else(|| format!("`{t}` is not `a:b`"))?;
            match (parse_f64(a), parse_f64(b)) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(format!("`{t}` is not a pair of numbers")),
            }
        })
        .collect()
}

fn fmt_list(v: impl Iterator<Item = f64>) -> String {
    v.map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

/// Config lines that rebuild `spec`.
pub fn spec_to_config(spec: &SubordinatorSpec) -> Vec<String> {
    let mut transforms = Vec::new();
    let mut cur = spec;
    let t = loop {
        match cur.repr() {
            Repr::Triplet(t) => break t,
            Repr::TimeChanged { base, index } => {
                transforms.push(format!("timechange:{index}"));
                cur = base;
            }
            Repr::Tilted { base, shift } => {
                transforms.push(format!("tilt:{shift}"));
                cur = base;
            }
            Repr::Killed { base, rate } => {
                transforms.push(format!("kill:{rate}"));
                cur = base;
            }
        }
    };
    transforms.reverse();
    let mut out = vec![
        format!("label = {}", spec.label()),
        format!("kill = {}", t.kill),
        format!("drift = {}", t.drift),
    ];
    let p = |k: &str, v: String| format!("levy.params.{k} = {v}");
    match t.levy.kind() {
        LevyKind::None => out.push("levy.kind = none".into()),
        LevyKind::Exponential { rate, arrival } => {
            out.push("levy.kind = exponential".into());
            out.push(p("rate", rate.to_string()));
            out.push(p("arrival", arrival.to_string()));
        }
        LevyKind::GammaJumps { c, beta } => {
            out.push("levy.kind = gamma".into());
            out.push(p("c", c.to_string()));
            out.push(p("beta", beta.to_string()));
        }
        LevyKind::Stable { gamma } => {
            out.push("levy.kind = stable".into());
            out.push(p("gamma", gamma.to_string()));
        }
        LevyKind::Atoms(atoms) => {
            out.push("levy.kind = atoms".into());
            out.push(p("locations", fmt_list(atoms.iter().map(|a| a.location))));
            out.push(p("masses", fmt_list(atoms.iter().map(|a| a.mass))));
        }
        LevyKind::Tabulated(table) => {
            out.push("levy.kind = tabulated".into());
            out.push(p("knots", fmt_list(table.knots().iter().copied())));
            out.push(p("tail", fmt_list(table.values().iter().copied())));
        }
    }
    if t.levy.tempering() > 0.0 {
        out.push(format!("levy.tempering = {}", t.levy.tempering()));
    }
    if !transforms.is_empty() {
        out.push(format!("transform = {}", transforms.join(", ")));
    }
    out
}
