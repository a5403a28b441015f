//! Task execution: turn a parsed scenario into a [`JsonReport`], running
//! the tasks in their listed order. Everything is deterministic: fixed
//! summation orders in the core, fixed probe sets here, no randomness
//! unless a scenario gains an explicit `seed`-driven task (the field is
//! parsed and reserved).

use num_complex::Complex;
use nucheck_core::analytic::AnalyticFunction;
use nucheck_core::criteria::{
    criterion_bloch_m, criterion_m1, criterion_s_sup, m_alpha, n_alpha, p_alpha, q_alpha,
    CriterionConfig, CriterionReport, OperatorKind, Verdict,
};
use nucheck_core::oplab::{
    absolutely_summing_probe, compactness_probe, default_probes, nuclear_decomposition,
    operator_norm_lower, truncation_matrix, DecompositionConfig, OpLabError, Probe,
};
use nucheck_core::quad::{DiskQuadrature, SupFlag, SupSolverConfig};
use nucheck_core::weights::{NormalPair, RadialWeight};

use crate::report::{
    CriterionRecord, DiagnosticRecord, JsonReport, TaskRecord, TermRecord, SCHEMA_VERSION,
};
use crate::scenario::{Resolution, ScenarioConfig, Task};

/// Failures split by exit-code class: config errors exit 2, numerical
/// evaluation errors exit 3.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

fn sup_config(res: &Resolution) -> SupSolverConfig<f64> {
    SupSolverConfig {
        n_r: res.sup_radial,
        n_theta: res.sup_angular,
        ..SupSolverConfig::default()
    }
}

fn criterion_config(res: &Resolution) -> CriterionConfig {
    CriterionConfig {
        k_lo: res.schedule_k_lo,
        k_hi: res.schedule_k_hi,
        shell_radial: res.shell_radial,
        shell_angular: res.shell_angular,
        scan_radial: res.scan_radial,
        scan_angular: res.scan_angular,
        ..CriterionConfig::default()
    }
}

fn flag_label(flag: SupFlag) -> &'static str {
    match flag {
        SupFlag::Attained => "Attained",
        SupFlag::NearBoundary => "NearBoundary",
        SupFlag::Unbounded => "Unbounded",
    }
}

fn criterion_record(
    name: &str,
    kind: &str,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    report: &CriterionReport<f64>,
) -> CriterionRecord {
    let (verdict, rate, extrapolated) = match report.verdict {
        Verdict::Finite { value } => ("Finite".to_string(), None, Some(value)),
        Verdict::Diverging { rate } => ("Diverging".to_string(), Some(rate), None),
        Verdict::Inconclusive => ("Inconclusive".to_string(), None, None),
    };
    CriterionRecord {
        name: name.to_string(),
        kind: kind.to_string(),
        alpha,
        beta,
        gamma,
        schedule: report.schedule.clone(),
        values: report
            .values
            .iter()
            .map(|&v| if v.is_finite() { Some(v) } else { None })
            .collect(),
        verdict,
        rate,
        extrapolated,
        diagnostics: report
            .diagnostics
            .iter()
            .map(|d| DiagnosticRecord {
                rho: d.rho,
                zeta: [d.zeta.re, d.zeta.im],
                inner_argmax: [d.inner_argmax.re, d.inner_argmax.im],
                inner_value: d.inner_value,
                angular_refined: d.angular_refined,
            })
            .collect(),
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    sup: SupSolverConfig<f64>,
    crit: CriterionConfig,
}

impl Ctx<'_> {
    fn nu(&self) -> &RadialWeight<f64> {
        self.cfg.nu.as_ref().expect("validated by the parser")
    }

    fn mu(&self) -> &RadialWeight<f64> {
        self.cfg.mu.as_ref().expect("validated by the parser")
    }

    fn g(&self) -> &AnalyticFunction<f64> {
        self.cfg.g.as_ref().expect("validated by the parser")
    }

    fn phi(&self) -> &nucheck_core::analytic::SelfMap<f64> {
        self.cfg.phi.as_ref().expect("validated by the parser")
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha.expect("validated by the parser")
    }

    fn kind_criterion(&self) -> Result<CriterionReport<f64>, RunError> {
        match self.cfg.kind {
            OperatorKind::T => {
                m_alpha(self.g(), self.phi(), self.nu(), self.mu(), self.alpha(), &self.crit)
            }
            OperatorKind::S => {
                n_alpha(self.g(), self.phi(), self.nu(), self.mu(), self.alpha(), &self.crit)
            }
        }
        .map_err(numerical)
    }
}

/// Execute every task in its listed order; exit-code mapping happens in
/// `main`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<JsonReport, RunError> {
    let ctx = Ctx {
        cfg,
        sup: sup_config(&cfg.resolution),
        crit: criterion_config(&cfg.resolution),
    };
    let mut results = Vec::new();
    for task in &cfg.tasks {
        run_task(&ctx, *task, &mut results)?;
    }
    Ok(JsonReport {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.id.clone(),
        results,
    })
}

fn run_task(ctx: &Ctx<'_>, task: Task, out: &mut Vec<TaskRecord>) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let record = match task {
        Task::Normality => {
            // one record per supplied weight
            let mut weights = vec![("nu", ctx.nu(), cfg.nu_spec.clone())];
            if let Some(mu) = cfg.mu.as_ref() {
                weights.push(("mu", mu, cfg.mu_spec.clone()));
            }
            for (name, weight, spec) in weights {
                let report = weight.check_normality(20, 8, 1e-6).map_err(numerical)?;
                out.push(TaskRecord::Normality {
                    weight: name.to_string(),
                    spec: spec.unwrap_or_default(),
                    verdict: report.verdict.to_string(),
                    condition_i_inf: report.condition_i_inf,
                    beta_estimate: report.beta_estimate,
                    gamma_estimate: report.gamma_estimate,
                    condition_ii_k: report.condition_ii_k,
                    sampled: report.sampled,
                });
            }
            return Ok(());
        }
        Task::M1 => {
            let sup = criterion_m1(ctx.g(), ctx.phi(), ctx.nu(), ctx.mu(), &ctx.sup)
                .map_err(numerical)?;
            TaskRecord::Sup {
                name: "m1".to_string(),
                kind: "T".to_string(),
                value: sup.value,
                argmax: [sup.argmax.re, sup.argmax.im],
                flag: flag_label(sup.flag).to_string(),
            }
        }
        Task::SSup => {
            let sup = criterion_s_sup(ctx.g(), ctx.phi(), ctx.nu(), ctx.mu(), &ctx.sup)
                .map_err(numerical)?;
            TaskRecord::Sup {
                name: "s_sup".to_string(),
                kind: "S".to_string(),
                value: sup.value,
                argmax: [sup.argmax.re, sup.argmax.im],
                flag: flag_label(sup.flag).to_string(),
            }
        }
        Task::MAlpha => {
            let report = m_alpha(ctx.g(), ctx.phi(), ctx.nu(), ctx.mu(), ctx.alpha(), &ctx.crit)
                .map_err(numerical)?;
            TaskRecord::Criterion(criterion_record(
                "m_alpha",
                "T",
                cfg.alpha,
                None,
                None,
                &report,
            ))
        }
        Task::NAlpha => {
            let report = n_alpha(ctx.g(), ctx.phi(), ctx.nu(), ctx.mu(), ctx.alpha(), &ctx.crit)
                .map_err(numerical)?;
            TaskRecord::Criterion(criterion_record(
                "n_alpha",
                "S",
                cfg.alpha,
                None,
                None,
                &report,
            ))
        }
        Task::PAlpha => {
            let report = p_alpha(
                ctx.g(),
                ctx.phi(),
                ctx.alpha(),
                cfg.beta.expect("validated"),
                cfg.gamma.expect("validated"),
                &ctx.crit,
            )
            .map_err(numerical)?;
            TaskRecord::Criterion(criterion_record(
                "p_alpha",
                "T",
                cfg.alpha,
                cfg.beta,
                cfg.gamma,
                &report,
            ))
        }
        Task::QAlpha => {
            let report = q_alpha(
                ctx.g(),
                ctx.phi(),
                ctx.alpha(),
                cfg.beta.expect("validated"),
                cfg.gamma.expect("validated"),
                &ctx.crit,
            )
            .map_err(numerical)?;
            TaskRecord::Criterion(criterion_record(
                "q_alpha",
                "S",
                cfg.alpha,
                cfg.beta,
                cfg.gamma,
                &report,
            ))
        }
        Task::BlochM => {
            let reports = criterion_bloch_m(ctx.g(), ctx.phi(), &ctx.crit).map_err(numerical)?;
            TaskRecord::BlochM {
                printed: criterion_record(
                    "bloch_m_printed",
                    "T",
                    None,
                    None,
                    None,
                    &reports.printed,
                ),
                derived: criterion_record(
                    "bloch_m_derived",
                    "T",
                    None,
                    None,
                    None,
                    &reports.derived,
                ),
            }
        }
        Task::Truncate => {
            let m = truncation_matrix(
                cfg.kind,
                ctx.g(),
                ctx.phi(),
                cfg.resolution.truncation_degree,
            )
            .map_err(|e| match e {
                OpLabError::UnsupportedRepresentation | OpLabError::DegreeTooLarge(_) => {
                    RunError::Config(e.to_string())
                }
                other => numerical(other),
            })?;
            TaskRecord::Truncation {
                kind: cfg.kind.label().to_string(),
                degree_bound: m.degree_bound,
                normalized: false,
                columns: m
                    .columns
                    .iter()
                    .map(|col| col.iter().map(|c| [c.re, c.im]).collect())
                    .collect(),
            }
        }
        Task::NormLower => {
            let probes = default_probes::<f64>();
            let bound = operator_norm_lower(
                cfg.kind,
                ctx.g(),
                ctx.phi(),
                ctx.nu(),
                ctx.mu(),
                &probes,
                &ctx.sup,
            )
            .map_err(numerical)?;
            let witness = match bound.witness {
                Probe::Monomial(n) => format!("monomial:{n}"),
                Probe::TestFunction { zeta } => {
                    format!("testfn:{},{}", zeta.re, zeta.im)
                }
            };
            TaskRecord::NormLower {
                kind: cfg.kind.label().to_string(),
                bound: bound.bound,
                witness,
            }
        }
        Task::Nuclear => {
            let report = ctx.kind_criterion()?;
            if !report.verdict.is_finite() {
                // refusal is a result, not an error
                out.push(TaskRecord::Nuclear {
                    kind: cfg.kind.label().to_string(),
                    alpha: ctx.alpha(),
                    refused: Some(report.verdict.label().to_string()),
                    total: None,
                    inner_total: None,
                    outer_total: None,
                    terms: Vec::new(),
                });
                return Ok(());
            }
            let pair = NormalPair::new(ctx.nu().clone(), ctx.alpha())
                .map_err(|e| RunError::Config(e.to_string()))?;
            let rho = 1.0 - 2f64.powi(-cfg.resolution.quad_rho_exp);
            let quad = DiskQuadrature::build(
                cfg.resolution.quad_radial,
                cfg.resolution.quad_angular,
                rho,
            )
            .map_err(|e| RunError::Config(e.to_string()))?;
            let dcfg = DecompositionConfig {
                scan_radial: cfg.resolution.scan_radial,
                scan_angular: cfg.resolution.scan_angular,
                ..DecompositionConfig::default()
            };
            let dec = nuclear_decomposition(
                cfg.kind,
                ctx.g(),
                ctx.phi(),
                &pair,
                ctx.mu(),
                &quad,
                &report,
                &dcfg,
            )
            .map_err(numerical)?;
            TaskRecord::Nuclear {
                kind: cfg.kind.label().to_string(),
                alpha: ctx.alpha(),
                refused: None,
                total: Some(dec.total),
                inner_total: Some(dec.inner_total),
                outer_total: Some(dec.outer_total),
                terms: dec
                    .terms
                    .iter()
                    .map(|t| TermRecord {
                        node: [t.node.re, t.node.im],
                        weight: t.weight,
                        functional_norm: t.functional_norm,
                        image_norm: t.image_norm,
                        bound: t.bound,
                    })
                    .collect(),
            }
        }
        Task::AsProbe => {
            // fixed deterministic monomial family
            let family: Vec<AnalyticFunction<f64>> = (0..4)
                .map(|n| {
                    if n == 0 {
                        AnalyticFunction::constant(Complex::new(1.0, 0.0))
                    } else {
                        AnalyticFunction::monomial(n)
                    }
                })
                .collect();
            let ratio = absolutely_summing_probe(
                cfg.kind,
                ctx.g(),
                ctx.phi(),
                ctx.nu(),
                ctx.mu(),
                &family,
                &ctx.sup,
            )
            .map_err(numerical)?;
            TaskRecord::AsProbe {
                kind: cfg.kind.label().to_string(),
                family: vec![
                    "poly:[1,0]".to_string(),
                    "poly:[0,0;1,0]".to_string(),
                    "poly:[0,0;0,0;1,0]".to_string(),
                    "poly:[0,0;0,0;0,0;1,0]".to_string(),
                ],
                ratio,
            }
        }
        Task::Compactness => {
            let verdict = compactness_probe(
                cfg.kind,
                ctx.g(),
                ctx.phi(),
                ctx.nu(),
                ctx.mu(),
                8,
                &ctx.sup,
            )
            .map_err(|e| match e {
                OpLabError::UnsupportedRepresentation => RunError::Config(e.to_string()),
                other => numerical(other),
            })?;
            TaskRecord::Compactness {
                kind: cfg.kind.label().to_string(),
                verdict: format!("{verdict:?}"),
            }
        }
    };
    out.push(record);
    Ok(())
}
