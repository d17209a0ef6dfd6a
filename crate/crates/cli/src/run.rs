//! Dispatch of the five actions.

use std::path::{Path, PathBuf};

use serde::Serialize;

use seqdetect::extreme::{
    d_eps, mild_exponents, regime_pair, solve_besov_extreme, solve_extreme, solve_sparse_extreme, sparse_lambda,
};
use seqdetect::normal;
use seqdetect::rates::{self, adaptive_rate, extreme_separation_radius, separation_rate, RatePair};
use seqdetect::simulate::{
    besov_representative, estimate_errors, least_favorable, replicate_records, sparse_representative,
    spike_alternative, McOptions, MonteCarloReport,
};
use seqdetect::spectra::Regime;
use seqdetect::testing::{
    build_adaptive, build_besov_adaptive, build_besov_sparse, build_max_threshold, build_sparse,
    build_thresholding, build_truncated, build_weighted, default_grid_start, theoretical_errors,
    ErrorPrediction, Level, PredictionMode, SparseMode, Statistic, TestRule, DEFAULT_GRID_C,
};
use seqdetect::{BesovSpec, ProblemSpec};

use crate::config::{AlternativeConfig, ExperimentConfig, RuleConfig, SweepParameter};
use crate::output::{csv_document, json_document, num, opt_num, Format, Table};
use crate::CliError;

/// The five subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Solve,
    Rates,
    Mc,
    Sweep,
    Adaptive,
}

/// Settings resolved from flags, environment and config.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub reps: u64,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: PathBuf,
    pub raw: Option<PathBuf>,
}

impl Run {
    fn mc(&self, experiment: u64) -> McOptions {
        McOptions {
            reps: self.reps,
            seed: self.seed,
            experiment,
            threads: self.threads,
        }
    }

    fn spec(&self) -> Result<&ProblemSpec, CliError> {
        self.config
            .spec
            .as_ref()
            .ok_or_else(|| CliError::Config("this action needs a `spec` section".into()))
    }

    fn document<T: Serialize>(&self, result: &T, table: &Table) -> Result<String, CliError> {
        match self.format {
            Format::Json => json_document(&self.config, self.seed, result),
            Format::Csv => csv_document(&self.config, table),
        }
    }
}

/// Run `action` and return the files to write.
pub fn run(action: Action, run: &Run) -> Result<Vec<(PathBuf, String)>, CliError> {
    if run.config.spec.is_some() && run.config.besov.is_some() {
        return Err(CliError::Config("give either `spec` or `besov`, not both".into()));
    }
    match action {
        Action::Solve => solve(run),
        Action::Rates => rate_table(run),
        Action::Mc => monte_carlo(run),
        Action::Sweep => sweep(run),
        Action::Adaptive => adaptive(run),
    }
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("sequence.csv")
}

fn solve(run: &Run) -> Result<Vec<(PathBuf, String)>, CliError> {
    let (result, table) = if let Some(b) = &run.config.besov {
        let sol = solve_besov_extreme(b)?;
        let mut t = Table::new(vec!["j", "h", "z"]);
        for (j, (h, z)) in sol.h.iter().zip(&sol.z).enumerate() {
            t.push(vec![(j + 1).to_string(), num(*h), num(*z)]);
        }
        (to_value(&sol)?, t)
    } else {
        let spec = run.spec()?;
        if spec.q < 2.0 {
            let sol = solve_sparse_extreme(spec)?;
            let mut t = Table::new(vec!["i", "h", "z"]);
            for (i, (h, z)) in sol.h.iter().zip(&sol.z).enumerate() {
                t.push(vec![(i + 1).to_string(), num(*h), num(*z)]);
            }
            (to_value(&sol)?, t)
        } else {
            let sol = solve_extreme(spec)?;
            let mut t = Table::new(vec!["k", "a_k", "sigma_k", "eta_sq", "w"]);
            for (i, (e, w)) in sol.eta_sq.iter().zip(&sol.w).enumerate() {
                let k = i + 1;
                t.push(vec![
                    k.to_string(),
                    num(spec.a.value(k)?),
                    num(spec.sigma.value(k)?),
                    num(*e),
                    num(*w),
                ]);
            }
            (to_value(&sol)?, t)
        }
    };
    Ok(match run.format {
        Format::Json => vec![
            (run.out.clone(), json_document(&run.config, run.seed, &result)?),
            (sidecar(&run.out), csv_document(&run.config, &table)?),
        ],
        Format::Csv => vec![(run.out.clone(), csv_document(&run.config, &table)?)],
    })
}

fn to_value<T: Serialize>(x: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Numeric(format!("cannot serialize the result: {e}")))
}

#[derive(Debug, Serialize)]
struct RateRow {
    pair: RatePair,
    alpha: f64,
    beta: f64,
    q: f64,
    eps: f64,
    r_star: Option<f64>,
    r_ad: Option<f64>,
    payment_class: Option<rates::Payment>,
    exponent: Option<f64>,
}

fn rate_row(pair: RatePair, alpha: f64, beta: f64, q: f64, eps: f64, spec: Option<&ProblemSpec>) -> Result<RateRow, CliError> {
    if pair == RatePair::Extreme {
        let r_star = match spec {
            Some(s) => Some(extreme_separation_radius(&s.with_eps(eps)?)?),
            None => None,
        };
        return Ok(RateRow {
            pair,
            alpha,
            beta,
            q,
            eps,
            r_star,
            r_ad: None,
            payment_class: Some(rates::Payment::Loglog),
            exponent: None,
        });
    }
    let s = separation_rate(alpha, beta, q, pair)?;
    let a = adaptive_rate(alpha, beta, q, pair)?;
    Ok(RateRow {
        pair,
        alpha,
        beta,
        q,
        eps,
        r_star: Some(s.eval(eps)?),
        r_ad: Some(a.eval(eps)?),
        payment_class: Some(s.payment),
        exponent: s.exponent(),
    })
}

/// Pair and exponents of a spec; extreme specs report zero exponents.
fn spec_pair(spec: &ProblemSpec) -> Result<(RatePair, f64, f64), CliError> {
    if spec.regime() == Regime::Extreme {
        return Ok((RatePair::Extreme, spec.a.exponent(), spec.sigma.exponent()));
    }
    let pair = regime_pair(spec)?;
    Ok((pair.into(), spec.a.exponent(), spec.sigma.exponent()))
}

fn rate_table(run: &Run) -> Result<Vec<(PathBuf, String)>, CliError> {
    let mut rows = Vec::new();
    if let Some(rc) = &run.config.rates {
        for &pair in &rc.pairs {
            for &eps in &rc.eps {
                rows.push(rate_row(pair, rc.alpha, rc.beta, rc.q, eps, run.config.spec.as_ref())?);
            }
        }
    } else {
        let spec = run.spec()?;
        let (pair, alpha, beta) = spec_pair(spec)?;
        rows.push(rate_row(pair, alpha, beta, spec.q, spec.eps, Some(spec))?);
    }
    let mut t = Table::new(vec!["pair", "alpha", "beta", "q", "eps", "r_star", "r_ad", "payment_class", "exponent"]);
    for r in &rows {
        t.push(vec![
            enum_name(&r.pair),
            num(r.alpha),
            num(r.beta),
            num(r.q),
            num(r.eps),
            opt_num(r.r_star),
            opt_num(r.r_ad),
            r.payment_class.as_ref().map(enum_name).unwrap_or_default(),
            opt_num(r.exponent),
        ]);
    }
    Ok(vec![(run.out.clone(), run.document(&rows, &t)?)])
}

fn enum_name<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// A rule with the alternative and prediction that go with it.
struct Prepared {
    rule: TestRule,
    eta_alt: Vec<f64>,
    eps: f64,
    theory: Option<ErrorPrediction>,
    /// `u_ε` (or `D_ε` for degenerate problems) of the spec.
    value: Option<f64>,
}

fn default_rule(cfg: &ExperimentConfig, spec: Option<&ProblemSpec>) -> RuleConfig {
    if cfg.besov.is_some() {
        return RuleConfig::BesovSparse {
            mode: SparseMode::G,
            alpha: crate::config::DEFAULT_ALPHA,
        };
    }
    match spec {
        Some(s) if s.q < 2.0 => {
            let degenerate = mild_exponents(s).map(|(a, b)| sparse_lambda(a, b, s.q) <= 0.0).unwrap_or(false);
            if degenerate {
                RuleConfig::Thresholding {
                    mode: SparseMode::D,
                    n: None,
                }
            } else {
                RuleConfig::Sparse {
                    mode: SparseMode::G,
                    alpha: crate::config::DEFAULT_ALPHA,
                }
            }
        }
        _ => RuleConfig::Weighted {
            level: Level::Alpha(crate::config::DEFAULT_ALPHA),
        },
    }
}

fn level_alpha(level: Level, u: f64) -> f64 {
    match level {
        Level::Alpha(a) => a,
        Level::TotalError => normal::sf(u / 2.0),
        Level::Threshold(h) => normal::sf(h),
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn prepare(cfg: &ExperimentConfig, spec: Option<&ProblemSpec>) -> Result<Prepared, CliError> {
    let rule_cfg = cfg.rule.clone().unwrap_or_else(|| default_rule(cfg, spec));
    let mut p = match (&cfg.besov, spec) {
        (Some(b), _) => prepare_besov(b, &rule_cfg)?,
        (None, Some(s)) => prepare_spec(s, &rule_cfg)?,
        (None, None) => return Err(CliError::Config("this action needs a `spec` or `besov` section".into())),
    };
    match &cfg.alternative {
        None | Some(AlternativeConfig::LeastFavorable) => {}
        Some(AlternativeConfig::Spike) => {
            let s = spec.ok_or_else(|| CliError::Config("the spike alternative needs a `spec` section".into()))?;
            p.eta_alt = spike_alternative(s)?;
        }
        Some(AlternativeConfig::Explicit { eta }) => {
            if eta.iter().any(|e| !e.is_finite()) {
                return Err(CliError::Config("explicit alternative must be finite".into()));
            }
            p.eta_alt = eta.clone();
        }
    }
    Ok(p)
}

fn prepare_spec(spec: &ProblemSpec, rule_cfg: &RuleConfig) -> Result<Prepared, CliError> {
    let eps = spec.eps;
    let l2 = || -> Result<(Vec<f64>, f64), CliError> {
        let sol = solve_extreme(spec)?;
        Ok((least_favorable(&sol), sol.u))
    };
    let plain = |rule: TestRule| -> Result<Prepared, CliError> {
        let (eta_alt, u) = l2()?;
        Ok(Prepared {
            rule,
            eta_alt,
            eps,
            theory: None,
            value: Some(u),
        })
    };
    match rule_cfg {
        RuleConfig::Weighted { level } => {
            let sol = solve_extreme(spec)?;
            let alpha = level_alpha(*level, sol.u);
            Ok(Prepared {
                rule: build_weighted(&sol, *level),
                eta_alt: least_favorable(&sol),
                eps,
                theory: Some(theoretical_errors(sol.u, alpha, PredictionMode::Gaussian)),
                value: Some(sol.u),
            })
        }
        RuleConfig::Truncated { m, h } => plain(build_truncated(*m, *h)?),
        RuleConfig::MaxThreshold { m, alpha } => plain(build_max_threshold(*m, *alpha)?),
        RuleConfig::Sparse { mode, alpha } => {
            check_alpha(*alpha)?;
            let sol = solve_sparse_extreme(spec)?;
            Ok(Prepared {
                rule: build_sparse(&sol, eps, normal::upper_quantile(*alpha), *mode)?,
                eta_alt: sparse_representative(&sol, eps),
                eps,
                theory: Some(theoretical_errors(sol.u, *alpha, PredictionMode::Gaussian)),
                value: Some(sol.u),
            })
        }
        RuleConfig::Thresholding { mode, n } => {
            let rule = build_thresholding(n.unwrap_or(spec.truncation), eps, *mode)?;
            let (a, b) = mild_exponents(spec)?;
            if spec.q < 2.0 && sparse_lambda(a, b, spec.q) <= 0.0 {
                let d = d_eps(spec)?;
                let alpha = match mode {
                    SparseMode::DRandomized(a) => *a,
                    _ => 0.0,
                };
                Ok(Prepared {
                    rule,
                    eta_alt: spike_alternative(spec)?,
                    eps,
                    theory: Some(theoretical_errors(1.0, alpha, PredictionMode::Degenerate(d))),
                    value: Some(d),
                })
            } else if spec.q < 2.0 {
                let sol = solve_sparse_extreme(spec)?;
                Ok(Prepared {
                    rule,
                    eta_alt: sparse_representative(&sol, eps),
                    eps,
                    theory: None,
                    value: Some(sol.u),
                })
            } else {
                plain(rule)
            }
        }
        RuleConfig::Adaptive { adaptive, l, c, t_eps, n } => {
            let t_eps = match (adaptive, t_eps) {
                (seqdetect::testing::AdaptiveKind::ExtremeMax, None) => {
                    return Err(CliError::Config("the extreme_max rule needs `T_eps`".into()))
                }
                (_, t) => t.unwrap_or(1.0),
            };
            plain(build_adaptive(
                *adaptive,
                l.unwrap_or_else(|| default_grid_start(eps)),
                c.unwrap_or(DEFAULT_GRID_C),
                t_eps,
                n.unwrap_or(spec.truncation),
            )?)
        }
        RuleConfig::Explicit { rule } => plain(rule.clone()),
        RuleConfig::BesovSparse { .. } | RuleConfig::BesovAdaptive { .. } => {
            Err(CliError::Config("Besov rules need a `besov` section".into()))
        }
    }
}

fn prepare_besov(spec: &BesovSpec, rule_cfg: &RuleConfig) -> Result<Prepared, CliError> {
    let sol = solve_besov_extreme(spec)?;
    let eta_alt = besov_representative(&sol, spec.eps);
    let (rule, theory) = match rule_cfg {
        RuleConfig::BesovSparse { mode, alpha } => {
            check_alpha(*alpha)?;
            (
                build_besov_sparse(&sol, spec, normal::upper_quantile(*alpha), *mode)?,
                Some(theoretical_errors(sol.u, *alpha, PredictionMode::Gaussian)),
            )
        }
        RuleConfig::BesovAdaptive { c, j0, j1 } => {
            let range = match (j0, j1) {
                (Some(a), Some(b)) => Some((*a, *b)),
                (None, None) => None,
                _ => return Err(CliError::Config("give both J0 and J1 or neither".into())),
            };
            (build_besov_adaptive(spec, *c, range)?, None)
        }
        RuleConfig::Explicit { rule } => (rule.clone(), None),
        _ => return Err(CliError::Config("a `besov` section needs a besov_sparse, besov_adaptive or explicit rule".into())),
    };
    Ok(Prepared {
        rule,
        eta_alt,
        eps: spec.eps,
        theory,
        value: Some(sol.u),
    })
}

fn estimate(p: &Prepared, opts: &McOptions) -> Result<MonteCarloReport, CliError> {
    let mut rep = estimate_errors(&p.rule, &p.eta_alt, p.eps, opts)?;
    if let Some(t) = p.theory {
        rep = rep.with_theory(t);
    }
    Ok(rep)
}

fn report_cells(rep: &MonteCarloReport) -> Vec<String> {
    vec![
        num(rep.alpha_hat),
        num(rep.beta_hat),
        num(rep.gamma_hat),
        num(rep.ci.alpha),
        num(rep.ci.beta),
        opt_num(rep.theory.map(|t| t.beta)),
        opt_num(rep.theory.map(|t| t.gamma)),
    ]
}

const REPORT_COLUMNS: [&str; 7] = ["alpha_hat", "beta_hat", "gamma_hat", "ci_alpha", "ci_beta", "beta_theory", "gamma_theory"];

fn monte_carlo(run: &Run) -> Result<Vec<(PathBuf, String)>, CliError> {
    let p = prepare(&run.config, run.config.spec.as_ref())?;
    let opts = run.mc(0);
    let rep = estimate(&p, &opts)?;
    let mut header = vec!["reps", "seed"];
    header.extend(REPORT_COLUMNS);
    let mut t = Table::new(header);
    let mut row = vec![rep.reps.to_string(), rep.seed.to_string()];
    row.extend(report_cells(&rep));
    t.push(row);
    let mut files = vec![(run.out.clone(), run.document(&rep, &t)?)];
    if let Some(raw) = &run.raw {
        let records = replicate_records(&p.rule, &p.eta_alt, p.eps, &opts)?;
        let id = enum_name(&serde_json::to_value(&p.rule).ok().and_then(|v| v.get("kind").cloned()));
        let mut t = Table::new(vec!["rule_id", "hypothesis", "rep", "statistic", "reject"]);
        for r in records {
            let stat = match &r.statistic {
                Statistic::Scalar(s) => num(*s),
                Statistic::Vector(v) => v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";"),
            };
            t.push(vec![id.clone(), r.hypothesis.to_string(), r.rep.to_string(), stat, r.reject.to_string()]);
        }
        files.push((raw.clone(), csv_document(&run.config, &t)?));
    }
    Ok(files)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: f64,
    u: Option<f64>,
    r_star: Option<f64>,
    report: MonteCarloReport,
}

fn separation_at(spec: &ProblemSpec) -> Option<f64> {
    let (pair, alpha, beta) = spec_pair(spec).ok()?;
    if pair == RatePair::Extreme {
        return extreme_separation_radius(spec).ok();
    }
    separation_rate(alpha, beta, spec.q, pair).ok()?.eval(spec.eps).ok()
}

fn sweep(run: &Run) -> Result<Vec<(PathBuf, String)>, CliError> {
    let spec = run.spec()?;
    let sc = run
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a `sweep` section".into()))?;
    if sc.values.is_empty() {
        return Err(CliError::Config("sweep values are empty".into()));
    }
    let mut rows = Vec::new();
    for (i, &v) in sc.values.iter().enumerate() {
        let s = match sc.parameter {
            SweepParameter::R => spec.with_radius(v)?,
            SweepParameter::Eps => spec.with_eps(v)?,
        };
        let p = prepare(&run.config, Some(&s))?;
        rows.push(SweepRow {
            value: v,
            u: p.value,
            r_star: separation_at(&s),
            report: estimate(&p, &run.mc(i as u64))?,
        });
    }
    let mut header = vec!["parameter", "value", "u", "r_star"];
    header.extend(REPORT_COLUMNS);
    let mut t = Table::new(header);
    let name = enum_name(&sc.parameter);
    for r in &rows {
        let mut row = vec![name.clone(), num(r.value), opt_num(r.u), opt_num(r.r_star)];
        row.extend(report_cells(&r.report));
        t.push(row);
    }
    Ok(vec![(run.out.clone(), run.document(&rows, &t)?)])
}

#[derive(Debug, Serialize)]
struct AdaptiveRow {
    alpha: f64,
    beta: f64,
    u: f64,
    m: usize,
    report: MonteCarloReport,
}

#[derive(Debug, Serialize)]
struct AdaptiveResult {
    rule: TestRule,
    rows: Vec<AdaptiveRow>,
    u_sigma: f64,
    margin: f64,
}

fn adaptive(run: &Run) -> Result<Vec<(PathBuf, String)>, CliError> {
    let spec = run.spec()?;
    let ac = run
        .config
        .adaptive
        .as_ref()
        .ok_or_else(|| CliError::Config("adaptive needs an `adaptive` section".into()))?;
    let mut cfg = run.config.clone();
    if cfg.rule.is_none() {
        cfg.rule = Some(RuleConfig::Adaptive {
            adaptive: seqdetect::testing::AdaptiveKind::ChiGrid,
            l: None,
            c: None,
            t_eps: None,
            n: None,
        });
    }
    let rule = prepare(&cfg, Some(spec))?.rule;
    let mut rows = Vec::new();
    for &alpha in &ac.alphas {
        for &beta in &ac.betas {
            let s = ProblemSpec::new(
                spec.a.with_exponent(alpha)?,
                spec.sigma.with_exponent(beta)?,
                spec.q,
                spec.r,
                spec.eps,
                spec.truncation,
            )?;
            let sol = solve_extreme(&s)?;
            let eta = least_favorable(&sol);
            let report = estimate_errors(&rule, &eta, spec.eps, &run.mc(rows.len() as u64))?;
            rows.push(AdaptiveRow {
                alpha,
                beta,
                u: sol.u,
                m: sol.m,
                report,
            });
        }
    }
    let us: Vec<f64> = rows.iter().map(|r| r.u).collect();
    let u_sigma = rates::u_inf_over_sigma(&us)?;
    let result = AdaptiveResult {
        rule,
        u_sigma,
        margin: rates::adaptive_margin(u_sigma, spec.eps),
        rows,
    };
    let mut header = vec!["alpha", "beta", "u", "m"];
    header.extend(REPORT_COLUMNS);
    header.extend(["u_sigma", "margin"]);
    let mut t = Table::new(header);
    for r in &result.rows {
        let mut row = vec![num(r.alpha), num(r.beta), num(r.u), r.m.to_string()];
        row.extend(report_cells(&r.report));
        row.extend([num(result.u_sigma), num(result.margin)]);
        t.push(row);
    }
    Ok(vec![(run.out.clone(), run.document(&result, &t)?)])
}
