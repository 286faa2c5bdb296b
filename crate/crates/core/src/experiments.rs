//! Monte Carlo harness over generated deployments.
//!
//! Trial `k` uses the seed drawn from ChaCha8 (config seed, stream `k`), so
//! records depend only on the configuration. Trials run in parallel and are
//! reported in trial order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::commgraph::{build_graph_with_range, check_spacing, is_connected, mst_bottleneck};
use crate::coverage::check_coverage;
use crate::deployment::{Deployment, DeploymentError};
use crate::generate::{generate, GenSpec, GenerateError};
use crate::redistribute::{redistribute, RedistributeError, MAX_ADDITIONS_PER_STEP};
use crate::routing::{bound_constant, Router};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    /// Hypothesis-satisfying trials must be connected at every factor at or
    /// above the bound, with bottleneck below `bound * r_s + tau`.
    pub connectivity: bool,
    /// Every redistribution step adds at most six sensors, each within
    /// `r_s` of the removed one, and the output is compliant and covered.
    pub patch_bound: bool,
    pub redistribute: bool,
    pub route_all_pairs: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            connectivity: true,
            patch_bound: false,
            redistribute: false,
            route_all_pairs: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "format_version", skip_serializing)]
    pub format_version: u32,
    /// Template; its seed is replaced per trial.
    pub gen: GenSpec,
    pub trials: usize,
    pub rc_factors: Vec<f64>,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub seed: u64,
    /// Sub-bound factors for [`tightness_probe`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tightness_grid: Option<Vec<f64>>,
}

fn format_version() -> u32 {
    1
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("trial {trial}: {source}")]
    Generate { trial: usize, source: GenerateError },
    #[error("trial {trial}: covered, compliant deployment disconnected at r_c = {factor} r_s")]
    Disconnected { trial: usize, factor: f64, reproducer: Box<Deployment> },
    #[error("trial {trial}: bottleneck {margin} r_s is not below the bound")]
    MarginExceeded { trial: usize, margin: f64, reproducer: Box<Deployment> },
    #[error("trial {trial}: redistribution failed: {source}")]
    Redistribute {
        trial: usize,
        source: RedistributeError,
        reproducer: Box<Deployment>,
    },
    #[error("trial {trial}: redistribution output violates the patch bound: {detail}")]
    PatchBound {
        trial: usize,
        detail: String,
        reproducer: Box<Deployment>,
    },
    #[error(transparent)]
    Deployment(#[from] DeploymentError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl ExperimentError {
    /// Deployment that triggers the failure, when there is one.
    pub fn reproducer(&self) -> Option<&Deployment> {
        match self {
            Self::Disconnected { reproducer, .. }
            | Self::MarginExceeded { reproducer, .. }
            | Self::Redistribute { reproducer, .. }
            | Self::PatchBound { reproducer, .. } => Some(reproducer),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorResult {
    pub rc_factor: f64,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub seed: u64,
    pub n_sensors: usize,
    pub covered: bool,
    pub coverage_marginal: bool,
    pub spacing_ok: bool,
    pub region_valid: bool,
    pub per_factor: Vec<FactorResult>,
    /// Bottleneck radius over `r_s`; absent below two sensors.
    pub margin: Option<f64>,
    pub redistribute_steps: Option<usize>,
    pub max_additions: Option<usize>,
    pub route_failures: Option<usize>,
}

impl TrialRecord {
    pub fn hypothesis(&self) -> bool {
        self.covered && self.spacing_ok && self.region_valid
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorSummary {
    pub rc_factor: f64,
    pub connected: usize,
    /// Fraction of hypothesis-satisfying trials that are connected.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterCounts {
    pub uncovered: usize,
    pub spacing_violated: usize,
    pub region_invalid: usize,
    pub total_filtered: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub format_version: u32,
    pub trials: usize,
    pub hypothesis_trials: usize,
    pub filtered: FilterCounts,
    pub marginal_coverage: usize,
    pub per_factor: Vec<FactorSummary>,
    pub margin_max: Option<f64>,
    pub margin_histogram: Vec<HistogramBin>,
    pub redistribute_steps: Option<usize>,
    pub max_additions: Option<usize>,
    pub route_failures: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

/// Width of the margin histogram bins, in units of `r_s`.
pub const MARGIN_BIN_WIDTH: f64 = 0.05;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.format_version != 1 {
            return Err(ExperimentError::Config(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if self.rc_factors.is_empty() {
            return Err(ExperimentError::Config("rc_factors must not be empty".into()));
        }
        if let Some(f) = self.rc_factors.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(ExperimentError::Config(format!("rc_factor {f} must be positive")));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng.next_u64()
    }

    fn trial_deployment(&self, trial: usize) -> Result<(u64, Deployment), ExperimentError> {
        let seed = self.trial_seed(trial);
        let d = generate(&self.gen.with_seed(seed)).map_err(|source| ExperimentError::Generate { trial, source })?;
        Ok((seed, d))
    }
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs every trial; the first failing trial (by id) aborts the run.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let records = in_pool(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let summary = summarize(cfg, &records);
    Ok(ExperimentOutput { records, summary })
}

fn run_trial(cfg: &ExperimentConfig, trial_id: usize) -> Result<TrialRecord, ExperimentError> {
    let (seed, d) = cfg.trial_deployment(trial_id)?;
    let r_s = d.r_s();
    let coverage = check_coverage(&d);
    let spacing_ok = check_spacing(&d).ok;
    let region_valid = d.region_valid();
    let hypothesis = coverage.covered && spacing_ok && region_valid;
    let bound = bound_constant();

    let per_factor = cfg
        .rc_factors
        .iter()
        .map(|&f| FactorResult {
            rc_factor: f,
            connected: is_connected(&build_graph_with_range(d.sensors(), f * r_s)),
        })
        .collect::<Vec<_>>();
    let bottleneck = mst_bottleneck(d.sensors()).ok();
    let margin = bottleneck.map(|b| b / r_s);

    if cfg.checks.connectivity && hypothesis {
        if let Some(fr) = per_factor.iter().find(|fr| fr.rc_factor >= bound && !fr.connected) {
            return Err(ExperimentError::Disconnected {
                trial: trial_id,
                factor: fr.rc_factor,
                reproducer: Box::new(d.with_r_c(fr.rc_factor * r_s)?),
            });
        }
        if let (Some(b), Some(m)) = (bottleneck, margin) {
            if !(b < bound * r_s + d.tau()) {
                return Err(ExperimentError::MarginExceeded {
                    trial: trial_id,
                    margin: m,
                    reproducer: Box::new(d.with_r_c(bound * r_s)?),
                });
            }
        }
    }

    let (mut redistribute_steps, mut max_additions) = (None, None);
    if cfg.checks.redistribute && coverage.covered && region_valid {
        let result = redistribute(&d).map_err(|source| ExperimentError::Redistribute {
            trial: trial_id,
            source,
            reproducer: Box::new(d.clone()),
        })?;
        if cfg.checks.patch_bound {
            if let Some(detail) = patch_bound_failure(&result, r_s) {
                return Err(ExperimentError::PatchBound {
                    trial: trial_id,
                    detail,
                    reproducer: Box::new(d.clone()),
                });
            }
        }
        redistribute_steps = Some(result.steps.len());
        max_additions = Some(result.max_additions());
    }

    let mut route_failures = None;
    if cfg.checks.route_all_pairs && hypothesis {
        let routed = d.with_r_c(bound * r_s)?;
        route_failures = Some(match Router::new(&routed) {
            Ok(router) => count_route_failures(&router, routed.len()),
            Err(_) => routed.len() * routed.len().saturating_sub(1),
        });
    }

    Ok(TrialRecord {
        trial_id,
        seed,
        n_sensors: d.len(),
        covered: coverage.covered,
        coverage_marginal: coverage.marginal,
        spacing_ok,
        region_valid,
        per_factor,
        margin,
        redistribute_steps,
        max_additions,
        route_failures,
    })
}

fn patch_bound_failure(result: &crate::redistribute::RedistributionResult, r_s: f64) -> Option<String> {
    let out = &result.final_deployment;
    for step in &result.steps {
        if step.added.len() > MAX_ADDITIONS_PER_STEP {
            return Some(format!("removing sensor {} added {}", step.removed_id, step.added.len()));
        }
        if let Some(p) = step.added.iter().find(|p| p.dist(&step.removed_pos) > r_s + out.tau()) {
            return Some(format!("patch ({}, {}) lies outside the removed disk", p.x, p.y));
        }
    }
    if !check_spacing(out).ok {
        return Some("output violates spacing".into());
    }
    if !check_coverage(out).covered {
        return Some("output is not covered".into());
    }
    None
}

fn count_route_failures(router: &Router<'_>, n: usize) -> usize {
    (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .filter(|&(u, v)| router.build_route(u, v).is_err())
        .count()
}

fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> ExperimentSummary {
    let hyp: Vec<&TrialRecord> = records.iter().filter(|r| r.hypothesis()).collect();
    let per_factor = cfg
        .rc_factors
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            let connected = hyp.iter().filter(|r| r.per_factor[k].connected).count();
            FactorSummary {
                rc_factor: f,
                connected,
                rate: (!hyp.is_empty()).then(|| connected as f64 / hyp.len() as f64),
            }
        })
        .collect();
    let margins: Vec<f64> = hyp.iter().filter_map(|r| r.margin).collect();
    let margin_max = margins.iter().copied().reduce(f64::max);
    let margin_histogram = match margin_max {
        None => Vec::new(),
        Some(max) => {
            let bins = (max / MARGIN_BIN_WIDTH).floor() as usize + 1;
            let mut counts = vec![0usize; bins];
            for m in &margins {
                counts[((m / MARGIN_BIN_WIDTH).floor() as usize).min(bins - 1)] += 1;
            }
            counts
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(k, count)| HistogramBin {
                    lo: k as f64 * MARGIN_BIN_WIDTH,
                    hi: (k + 1) as f64 * MARGIN_BIN_WIDTH,
                    count,
                })
                .collect()
        }
    };
    let sum_opt = |f: fn(&TrialRecord) -> Option<usize>| records.iter().filter_map(f).reduce(|a, b| a + b);
    ExperimentSummary {
        format_version: 1,
        trials: records.len(),
        hypothesis_trials: hyp.len(),
        filtered: FilterCounts {
            uncovered: records.iter().filter(|r| !r.covered).count(),
            spacing_violated: records.iter().filter(|r| !r.spacing_ok).count(),
            region_invalid: records.iter().filter(|r| !r.region_valid).count(),
            total_filtered: records.len() - hyp.len(),
        },
        marginal_coverage: records.iter().filter(|r| r.coverage_marginal).count(),
        per_factor,
        margin_max,
        margin_histogram,
        redistribute_steps: sum_opt(|r| r.redistribute_steps),
        max_additions: records.iter().filter_map(|r| r.max_additions).max(),
        route_failures: sum_opt(|r| r.route_failures),
    }
}

pub const CSV_HEADER: &str = "trial_id,seed,n_sensors,covered,spacing_ok,region_valid,hypothesis,rc_factor,connected,margin,redistribute_steps,max_additions,route_failures";

/// One row per trial and factor. Floats use the shortest representation
/// that parses back to the same value.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
        v.map(|v| v.to_string()).unwrap_or_default()
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        for f in &r.per_factor {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:?},{},{},{},{},{}",
                r.trial_id,
                r.seed,
                r.n_sensors,
                r.covered,
                r.spacing_ok,
                r.region_valid,
                r.hypothesis(),
                f.rc_factor,
                f.connected,
                r.margin.map(|m| format!("{m:?}")).unwrap_or_default(),
                opt(r.redistribute_steps),
                opt(r.max_additions),
                opt(r.route_failures),
            );
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessFactor {
    pub rc_factor: f64,
    pub hypothesis_trials: usize,
    pub disconnected: usize,
    /// Trial ids of the disconnected deployments, ascending.
    pub disconnected_trials: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightnessReport {
    pub factors: Vec<TightnessFactor>,
    /// Disconnected deployments with `r_c` set to the failing factor, in
    /// factor then trial order.
    pub reproducers: Vec<(f64, usize, Deployment)>,
}

/// Looks for compliant, covered deployments that are disconnected below the
/// bound. Reports counts only; nothing is asserted.
pub fn tightness_probe(
    cfg: &ExperimentConfig,
    factor_grid: &[f64],
    threads: Option<usize>,
) -> Result<TightnessReport, ExperimentError> {
    cfg.validate()?;
    let bound = bound_constant();
    if let Some(f) = factor_grid.iter().find(|f| !(**f > 0.0 && **f < bound)) {
        return Err(ExperimentError::Config(format!(
            "tightness factor {f} must lie in (0, {bound})"
        )));
    }
    let per_trial = in_pool(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<Option<Vec<bool>>, ExperimentError> {
                let (_, d) = cfg.trial_deployment(t)?;
                if !(d.region_valid() && check_spacing(&d).ok && check_coverage(&d).covered) {
                    return Ok(None);
                }
                Ok(Some(
                    factor_grid
                        .iter()
                        .map(|&f| is_connected(&build_graph_with_range(d.sensors(), f * d.r_s())))
                        .collect(),
                ))
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    let hypothesis_trials = per_trial.iter().flatten().count();
    let mut factors = Vec::new();
    let mut reproducers = Vec::new();
    for (k, &f) in factor_grid.iter().enumerate() {
        let disconnected_trials: Vec<usize> = per_trial
            .iter()
            .enumerate()
            .filter(|(_, r)| r.as_ref().is_some_and(|c| !c[k]))
            .map(|(t, _)| t)
            .collect();
        for &t in &disconnected_trials {
            let (_, d) = cfg.trial_deployment(t)?;
            reproducers.push((f, t, d.with_r_c(f * d.r_s())?));
        }
        factors.push(TightnessFactor {
            rc_factor: f,
            hypothesis_trials,
            disconnected: disconnected_trials.len(),
            disconnected_trials,
        });
    }
    Ok(TightnessReport { factors, reproducers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::GenKind;
    use crate::geometry::Rectangle;

    fn cfg(trials: usize, rc_factors: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            format_version: 1,
            gen: GenSpec {
                region: Rectangle::new(6.0, 6.0).unwrap(),
                r_s: 1.0,
                r_c: 2.0,
                kind: GenKind::JitteredLattice {
                    spacing_factor: 1.3,
                    jitter: 0.15,
                },
                seed: 0,
                tolerance: None,
            },
            trials,
            rc_factors,
            checks: Checks::default(),
            seed: 11,
            tightness_grid: None,
        }
    }

    #[test]
    fn records_are_ordered_and_deterministic() {
        let c = cfg(24, vec![1.0, bound_constant(), 2.0]);
        let a = run_experiment(&c, Some(1)).unwrap();
        let b = run_experiment(&c, Some(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.records.iter().enumerate().all(|(k, r)| r.trial_id == k));
        assert_eq!(records_to_csv(&a.records), records_to_csv(&b.records));
        assert!(a.summary.hypothesis_trials > 0);
        assert_eq!(a.summary.per_factor[1].rate, Some(1.0));
        assert_eq!(a.summary.per_factor[2].rate, Some(1.0));
    }

    #[test]
    fn connectivity_is_monotone_in_factor() {
        let c = cfg(16, vec![1.0, 1.2, 1.5, 1.8, 2.0]);
        for r in run_experiment(&c, None).unwrap().records {
            let flags: Vec<bool> = r.per_factor.iter().map(|f| f.connected).collect();
            assert!(flags.windows(2).all(|w| !w[0] || w[1]), "{flags:?}");
        }
    }

    #[test]
    fn csv_has_one_row_per_trial_and_factor() {
        let c = cfg(3, vec![1.5, 2.0]);
        let out = run_experiment(&c, None).unwrap();
        let csv = records_to_csv(&out.records);
        assert_eq!(csv.lines().count(), 1 + 6);
        assert!(csv.starts_with(CSV_HEADER));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(run_experiment(&cfg(0, vec![2.0]), None).is_err());
        assert!(run_experiment(&cfg(1, vec![]), None).is_err());
        assert!(run_experiment(&cfg(1, vec![-1.0]), None).is_err());
        assert!(tightness_probe(&cfg(1, vec![2.0]), &[bound_constant()], None).is_err());
    }

    #[test]
    fn tightness_reproducers_are_disconnected() {
        let c = cfg(12, vec![2.0]);
        let report = tightness_probe(&c, &[1.0, 1.5], None).unwrap();
        assert_eq!(report.factors.len(), 2);
        assert_eq!(
            report.reproducers.len(),
            report.factors.iter().map(|f| f.disconnected).sum::<usize>()
        );
        for (f, _, d) in &report.reproducers {
            assert_eq!(d.r_c(), f * d.r_s());
            assert!(!is_connected(&crate::commgraph::build_graph(d)));
        }
    }

    #[test]
    fn optional_checks_fill_records() {
        let mut c = cfg(4, vec![2.0]);
        c.checks = Checks {
            connectivity: true,
            patch_bound: true,
            redistribute: true,
            route_all_pairs: true,
        };
        let out = run_experiment(&c, None).unwrap();
        for r in &out.records {
            if r.covered && r.region_valid {
                assert!(r.redistribute_steps.is_some());
            }
            if r.hypothesis() {
                assert_eq!(r.route_failures, Some(0));
            }
        }
    }
}
