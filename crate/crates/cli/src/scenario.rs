//! Scenario files: plain-text, line-oriented `key = value` entries with an
//! optional `[resolution]` section. `#` starts a comment.
//!
//! Main-section keys: `id`, `kind` (T|S, default T), `alpha`, `beta`,
//! `gamma`, `nu`, `mu` (weight grammar), `g`, `phi` (function grammar),
//! `tasks` (comma-separated), `seed`, `out_csv`, `out_json`.
//!
//! Weight grammar: `standard:<alpha>`, `exp:<c>`, `const`, `table:<path>`.
//!
//! Function grammar: atoms `poly:[re,im;re,im;...]` (ascending degree) and
//! `kernel:c_re,c_im,p` for `(1-c̄z)^{-p}`; combinators `sum(E,E)`,
//! `prod(E,E)`, `scale(re,im,E)`, `compose(E,P)` with polynomial `P`,
//! `deriv(E)`, `antideriv(E)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use nucheck_core::analytic::{AnalyticFunction, SelfMap};
use nucheck_core::criteria::OperatorKind;
use nucheck_core::weights::RadialWeight;

#[derive(Debug)]
pub struct ParseError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "field `{k}`: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        field: field.map(|s| s.to_string()),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Normality,
    M1,
    SSup,
    MAlpha,
    NAlpha,
    PAlpha,
    QAlpha,
    BlochM,
    Truncate,
    NormLower,
    Nuclear,
    AsProbe,
    Compactness,
}

impl Task {
    pub const ALL_NAMES: &'static [&'static str] = &[
        "normality",
        "m1",
        "s_sup",
        "m_alpha",
        "n_alpha",
        "p_alpha",
        "q_alpha",
        "bloch_m",
        "truncate",
        "norm_lower",
        "nuclear",
        "as_probe",
        "compactness",
    ];

    pub fn parse(s: &str) -> Option<Task> {
        Some(match s {
            "normality" => Task::Normality,
            "m1" => Task::M1,
            "s_sup" => Task::SSup,
            "m_alpha" => Task::MAlpha,
            "n_alpha" => Task::NAlpha,
            "p_alpha" => Task::PAlpha,
            "q_alpha" => Task::QAlpha,
            "bloch_m" => Task::BlochM,
            "truncate" => Task::Truncate,
            "norm_lower" => Task::NormLower,
            "nuclear" => Task::Nuclear,
            "as_probe" => Task::AsProbe,
            "compactness" => Task::Compactness,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Normality => "normality",
            Task::M1 => "m1",
            Task::SSup => "s_sup",
            Task::MAlpha => "m_alpha",
            Task::NAlpha => "n_alpha",
            Task::PAlpha => "p_alpha",
            Task::QAlpha => "q_alpha",
            Task::BlochM => "bloch_m",
            Task::Truncate => "truncate",
            Task::NormLower => "norm_lower",
            Task::Nuclear => "nuclear",
            Task::AsProbe => "as_probe",
            Task::Compactness => "compactness",
        }
    }

    fn needs_weights(&self) -> bool {
        !matches!(self, Task::PAlpha | Task::QAlpha | Task::BlochM)
    }

    fn needs_phi(&self) -> bool {
        !matches!(self, Task::Normality)
    }

    fn needs_g(&self) -> bool {
        !matches!(self, Task::Normality)
    }

    fn needs_alpha(&self) -> bool {
        matches!(
            self,
            Task::MAlpha | Task::NAlpha | Task::PAlpha | Task::QAlpha | Task::Nuclear
                | Task::AsProbe
        )
    }

    fn needs_bloch_orders(&self) -> bool {
        matches!(self, Task::PAlpha | Task::QAlpha)
    }
}

/// Resolution overrides (all optional in the file).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub schedule_k_lo: i32,
    pub schedule_k_hi: i32,
    pub shell_radial: usize,
    pub shell_angular: usize,
    pub scan_radial: usize,
    pub scan_angular: usize,
    pub sup_radial: usize,
    pub sup_angular: usize,
    pub quad_radial: usize,
    pub quad_angular: usize,
    /// Decomposition-rule truncation `ρ = 1 - 2^{-k}`.
    pub quad_rho_exp: i32,
    pub truncation_degree: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            schedule_k_lo: 2,
            schedule_k_hi: 12,
            shell_radial: 12,
            shell_angular: 64,
            scan_radial: 48,
            scan_angular: 96,
            sup_radial: 128,
            sup_angular: 256,
            quad_radial: 24,
            quad_angular: 48,
            quad_rho_exp: 8,
            truncation_degree: 64,
        }
    }
}

/// Parsed scenario: raw spec strings kept alongside the constructed
/// objects so serialization round-trips exactly.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub id: String,
    pub kind: OperatorKind,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub nu_spec: Option<String>,
    pub mu_spec: Option<String>,
    pub g_spec: Option<String>,
    pub phi_spec: Option<String>,
    pub tasks: Vec<Task>,
    pub seed: Option<u64>,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
    pub resolution: Resolution,
    pub nu: Option<RadialWeight<f64>>,
    pub mu: Option<RadialWeight<f64>>,
    pub g: Option<AnalyticFunction<f64>>,
    pub phi: Option<SelfMap<f64>>,
}

impl PartialEq for ScenarioConfig {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.alpha == other.alpha
            && self.beta == other.beta
            && self.gamma == other.gamma
            && self.nu_spec == other.nu_spec
            && self.mu_spec == other.mu_spec
            && self.g_spec == other.g_spec
            && self.phi_spec == other.phi_spec
            && self.tasks == other.tasks
            && self.seed == other.seed
            && self.out_csv == other.out_csv
            && self.out_json == other.out_json
            && self.resolution == other.resolution
    }
}

/// Parse a complex-list polynomial body `re,im;re,im;...`.
fn parse_poly_body(body: &str, field: &str) -> Result<Vec<Complex<f64>>, ParseError> {
    let mut coeffs = Vec::new();
    for part in body.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut it = part.split(',');
        let (Some(re), Some(im), None) = (it.next(), it.next(), it.next()) else {
            return Err(err(
                None,
                Some(field),
                format!("polynomial coefficient `{part}` must be `re,im`"),
            ));
        };
        let re: f64 = re.trim().parse().map_err(|_| {
            err(None, Some(field), format!("bad real part `{}`", re.trim()))
        })?;
        let im: f64 = im.trim().parse().map_err(|_| {
            err(None, Some(field), format!("bad imaginary part `{}`", im.trim()))
        })?;
        coeffs.push(Complex::new(re, im));
    }
    if coeffs.is_empty() {
        return Err(err(None, Some(field), "empty coefficient list"));
    }
    Ok(coeffs)
}

/// Split `a,b,c` at top level (brackets and parentheses protect commas).
fn split_args(s: &str) -> Vec<&str> {
    let mut depth = 0i32;
    let mut parts = Vec::new();
    let mut start = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Recursive-descent parser for the function grammar.
pub fn parse_function(spec: &str, field: &str) -> Result<AnalyticFunction<f64>, ParseError> {
    let spec = spec.trim();
    if let Some(body) = spec.strip_prefix("poly:") {
        let body = body.trim();
        let inner = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| err(None, Some(field), "poly body must be [re,im;...]"))?;
        return Ok(AnalyticFunction::polynomial(parse_poly_body(inner, field)?));
    }
    if let Some(body) = spec.strip_prefix("kernel:") {
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(err(None, Some(field), "kernel needs c_re,c_im,p"));
        }
        let c_re: f64 = parts[0]
            .parse()
            .map_err(|_| err(None, Some(field), "bad kernel c_re"))?;
        let c_im: f64 = parts[1]
            .parse()
            .map_err(|_| err(None, Some(field), "bad kernel c_im"))?;
        let p: f64 = parts[2]
            .parse()
            .map_err(|_| err(None, Some(field), "bad kernel exponent"))?;
        return AnalyticFunction::kernel_power(Complex::new(c_re, c_im), p)
            .map_err(|e| err(None, Some(field), e.to_string()));
    }
    for (name, arity) in [
        ("sum", 2usize),
        ("prod", 2),
        ("scale", 3),
        ("compose", 2),
        ("deriv", 1),
        ("antideriv", 1),
    ] {
        let Some(rest) = spec.strip_prefix(name) else {
            continue;
        };
        let rest = rest.trim();
        let Some(inner) = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
        else {
            continue;
        };
        let args = split_args(inner);
        if args.len() != arity {
            return Err(err(
                None,
                Some(field),
                format!("{name} expects {arity} argument(s), got {}", args.len()),
            ));
        }
        return match name {
            "sum" => {
                let a = parse_function(args[0], field)?;
                let b = parse_function(args[1], field)?;
                Ok(a.add(&b))
            }
            "prod" => {
                let a = parse_function(args[0], field)?;
                let b = parse_function(args[1], field)?;
                Ok(a.mul(&b))
            }
            "scale" => {
                let re: f64 = args[0]
                    .trim()
                    .parse()
                    .map_err(|_| err(None, Some(field), "bad scale real part"))?;
                let im: f64 = args[1]
                    .trim()
                    .parse()
                    .map_err(|_| err(None, Some(field), "bad scale imaginary part"))?;
                let f = parse_function(args[2], field)?;
                Ok(f.scale(Complex::new(re, im)))
            }
            "compose" => {
                let outer = parse_function(args[0], field)?;
                let inner_f = parse_function(args[1], field)?;
                outer
                    .compose_poly(&inner_f)
                    .map_err(|e| err(None, Some(field), e.to_string()))
            }
            "deriv" => Ok(parse_function(args[0], field)?.differentiate()),
            "antideriv" => Ok(parse_function(args[0], field)?.antiderivative()),
            _ => unreachable!(),
        };
    }
    Err(err(
        None,
        Some(field),
        format!("unrecognized function expression `{spec}`"),
    ))
}

/// Parse scenario file contents. `base_dir` resolves relative table paths.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig, ParseError> {
    let mut main: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut resolution: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut section = "";
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "resolution" => "resolution",
                other => {
                    return Err(err(Some(lineno), None, format!("unknown section `{other}`")))
                }
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(Some(lineno), None, "expected `key = value`"));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let target = if section == "resolution" {
            &mut resolution
        } else {
            &mut main
        };
        if target.insert(key.clone(), (lineno, value)).is_some() {
            return Err(err(Some(lineno), Some(&key), "duplicate key"));
        }
    }

    let get = |map: &BTreeMap<String, (usize, String)>, key: &str| -> Option<(usize, String)> {
        map.get(key).cloned()
    };
    let parse_f64 = |entry: &(usize, String), key: &str| -> Result<f64, ParseError> {
        entry
            .1
            .parse()
            .map_err(|_| err(Some(entry.0), Some(key), format!("bad number `{}`", entry.1)))
    };

    let id = get(&main, "id")
        .map(|(_, v)| v)
        .ok_or_else(|| err(None, Some("id"), "missing required field"))?;

    let kind = match get(&main, "kind") {
        None => OperatorKind::T,
        Some((line, v)) => match v.as_str() {
            "T" => OperatorKind::T,
            "S" => OperatorKind::S,
            other => return Err(err(Some(line), Some("kind"), format!("expected T or S, got `{other}`"))),
        },
    };

    let alpha = get(&main, "alpha").map(|e| parse_f64(&e, "alpha")).transpose()?;
    let beta = get(&main, "beta").map(|e| parse_f64(&e, "beta")).transpose()?;
    let gamma = get(&main, "gamma").map(|e| parse_f64(&e, "gamma")).transpose()?;
    let seed = match get(&main, "seed") {
        None => None,
        Some((line, v)) => Some(
            v.parse::<u64>()
                .map_err(|_| err(Some(line), Some("seed"), format!("bad seed `{v}`")))?,
        ),
    };

    let tasks_entry =
        get(&main, "tasks").ok_or_else(|| err(None, Some("tasks"), "missing required field"))?;
    let mut tasks = Vec::new();
    for part in tasks_entry.1.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        let task = Task::parse(name).ok_or_else(|| {
            err(
                Some(tasks_entry.0),
                Some("tasks"),
                format!("unknown task `{name}` (expected one of {})", Task::ALL_NAMES.join(", ")),
            )
        })?;
        tasks.push(task);
    }
    if tasks.is_empty() {
        return Err(err(Some(tasks_entry.0), Some("tasks"), "task list is empty"));
    }

    let nu_spec = get(&main, "nu");
    let mu_spec = get(&main, "mu");
    let g_spec = get(&main, "g");
    let phi_spec = get(&main, "phi");

    let parse_weight = |entry: &Option<(usize, String)>, key: &str| -> Result<Option<RadialWeight<f64>>, ParseError> {
        match entry {
            None => Ok(None),
            Some((line, v)) => RadialWeight::from_spec(v, base_dir)
                .map(Some)
                .map_err(|e| err(Some(*line), Some(key), e.to_string())),
        }
    };
    let nu = parse_weight(&nu_spec, "nu")?;
    let mu = parse_weight(&mu_spec, "mu")?;
    let g = match &g_spec {
        None => None,
        Some((line, v)) => Some(
            parse_function(v, "g").map_err(|mut e| {
                e.line = Some(*line);
                e
            })?,
        ),
    };
    let phi = match &phi_spec {
        None => None,
        Some((line, v)) => {
            let f = parse_function(v, "phi").map_err(|mut e| {
                e.line = Some(*line);
                e
            })?;
            Some(SelfMap::certify(f).map_err(|e| err(Some(*line), Some("phi"), e.to_string()))?)
        }
    };

    // per-task requirements
    for task in &tasks {
        let name = task.name();
        if task.needs_weights() {
            if nu.is_none() {
                return Err(err(None, Some("nu"), format!("task `{name}` requires nu")));
            }
            if mu.is_none() && *task != Task::Normality {
                return Err(err(None, Some("mu"), format!("task `{name}` requires mu")));
            }
        }
        if task.needs_g() && g.is_none() {
            return Err(err(None, Some("g"), format!("task `{name}` requires g")));
        }
        if task.needs_phi() && phi.is_none() {
            return Err(err(None, Some("phi"), format!("task `{name}` requires phi")));
        }
        if task.needs_alpha() && alpha.is_none() {
            return Err(err(None, Some("alpha"), format!("task `{name}` requires alpha")));
        }
        if task.needs_bloch_orders() && (beta.is_none() || gamma.is_none()) {
            return Err(err(
                None,
                Some("beta"),
                format!("task `{name}` requires beta and gamma"),
            ));
        }
    }

    let mut res = Resolution::default();
    for (key, (line, value)) in &resolution {
        let v_usize = || -> Result<usize, ParseError> {
            value
                .parse()
                .map_err(|_| err(Some(*line), Some(key), format!("bad count `{value}`")))
        };
        let v_i32 = || -> Result<i32, ParseError> {
            value
                .parse()
                .map_err(|_| err(Some(*line), Some(key), format!("bad integer `{value}`")))
        };
        match key.as_str() {
            "schedule_k_lo" => res.schedule_k_lo = v_i32()?,
            "schedule_k_hi" => res.schedule_k_hi = v_i32()?,
            "shell_radial" => res.shell_radial = v_usize()?,
            "shell_angular" => res.shell_angular = v_usize()?,
            "scan_radial" => res.scan_radial = v_usize()?,
            "scan_angular" => res.scan_angular = v_usize()?,
            "sup_radial" => res.sup_radial = v_usize()?,
            "sup_angular" => res.sup_angular = v_usize()?,
            "quad_radial" => res.quad_radial = v_usize()?,
            "quad_angular" => res.quad_angular = v_usize()?,
            "quad_rho_exp" => res.quad_rho_exp = v_i32()?,
            "truncation_degree" => res.truncation_degree = v_usize()?,
            other => return Err(err(Some(*line), Some(other), "unknown resolution key")),
        }
    }

    Ok(ScenarioConfig {
        id,
        kind,
        alpha,
        beta,
        gamma,
        nu_spec: nu_spec.map(|(_, v)| v),
        mu_spec: mu_spec.map(|(_, v)| v),
        g_spec: g_spec.map(|(_, v)| v),
        phi_spec: phi_spec.map(|(_, v)| v),
        tasks,
        seed,
        out_csv: get(&main, "out_csv").map(|(_, v)| PathBuf::from(v)),
        out_json: get(&main, "out_json").map(|(_, v)| PathBuf::from(v)),
        resolution: res,
        nu,
        mu,
        g,
        phi,
    })
}

impl ScenarioConfig {
    /// Canonical textual form; `parse_scenario(serialize(c))` equals `c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("id", self.id.clone());
        push("kind", self.kind.label().to_string());
        if let Some(a) = self.alpha {
            push("alpha", format!("{a}"));
        }
        if let Some(b) = self.beta {
            push("beta", format!("{b}"));
        }
        if let Some(g) = self.gamma {
            push("gamma", format!("{g}"));
        }
        if let Some(s) = &self.nu_spec {
            push("nu", s.clone());
        }
        if let Some(s) = &self.mu_spec {
            push("mu", s.clone());
        }
        if let Some(s) = &self.g_spec {
            push("g", s.clone());
        }
        if let Some(s) = &self.phi_spec {
            push("phi", s.clone());
        }
        push(
            "tasks",
            self.tasks
                .iter()
                .map(Task::name)
                .collect::<Vec<_>>()
                .join(", "),
        );
        if let Some(s) = self.seed {
            push("seed", format!("{s}"));
        }
        if let Some(p) = &self.out_csv {
            push("out_csv", p.display().to_string());
        }
        if let Some(p) = &self.out_json {
            push("out_json", p.display().to_string());
        }
        let d = Resolution::default();
        let r = &self.resolution;
        if *r != d {
            out.push_str("[resolution]\n");
            let mut pr = |k: &str, v: String| {
                out.push_str(k);
                out.push_str(" = ");
                out.push_str(&v);
                out.push('\n');
            };
            if r.schedule_k_lo != d.schedule_k_lo {
                pr("schedule_k_lo", r.schedule_k_lo.to_string());
            }
            if r.schedule_k_hi != d.schedule_k_hi {
                pr("schedule_k_hi", r.schedule_k_hi.to_string());
            }
            if r.shell_radial != d.shell_radial {
                pr("shell_radial", r.shell_radial.to_string());
            }
            if r.shell_angular != d.shell_angular {
                pr("shell_angular", r.shell_angular.to_string());
            }
            if r.scan_radial != d.scan_radial {
                pr("scan_radial", r.scan_radial.to_string());
            }
            if r.scan_angular != d.scan_angular {
                pr("scan_angular", r.scan_angular.to_string());
            }
            if r.sup_radial != d.sup_radial {
                pr("sup_radial", r.sup_radial.to_string());
            }
            if r.sup_angular != d.sup_angular {
                pr("sup_angular", r.sup_angular.to_string());
            }
            if r.quad_radial != d.quad_radial {
                pr("quad_radial", r.quad_radial.to_string());
            }
            if r.quad_angular != d.quad_angular {
                pr("quad_angular", r.quad_angular.to_string());
            }
            if r.quad_rho_exp != d.quad_rho_exp {
                pr("quad_rho_exp", r.quad_rho_exp.to_string());
            }
            if r.truncation_degree != d.truncation_degree {
                pr("truncation_degree", r.truncation_degree.to_string());
            }
        }
        out
    }
}
