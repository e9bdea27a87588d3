//! Replicated experiments: the institutional scenarios, the curation sweep,
//! cross-national contrasts, the cultural-capital experiment and the
//! robustness table built from them.
//!
//! Replicate `r` of every experiment is seeded with `base_seed + r`, so any
//! single replicate can be rerun in isolation. Replicates run in parallel;
//! results are collected in replicate order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::step;
use crate::error::{Error, Result};
use crate::metrics::{last10, ols_slope, Band, Metric, MetricSeries};
use crate::model::{
    all_presets, display_name, init_world_with_cohorts, Cohort, ScenarioConfig, SimParams,
    WorldState,
};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One replicate, raw series, no bands.
    Paper,
    /// Many replicates with percentile bands.
    Robust,
}

/// Which play-count window feeds entropy and Gini in the prediction checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricBase {
    /// Plays of the current step only.
    Step,
    /// Cumulative plays.
    Cum,
}

impl MetricBase {
    pub fn entropy(self) -> Metric {
        match self {
            MetricBase::Step => Metric::EntropyStep,
            MetricBase::Cum => Metric::EntropyCum,
        }
    }

    pub fn gini(self) -> Metric {
        match self {
            MetricBase::Step => Metric::GiniStep,
            MetricBase::Cum => Metric::GiniCum,
        }
    }
}

/// Two listener groups placed in one high-curation world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CulturalCapitalDesign {
    pub world: ScenarioConfig,
    pub high_mu_c: f64,
    pub high_sigma_c: f64,
    pub low_mu_c: f64,
    pub low_sigma_c: f64,
}

impl Default for CulturalCapitalDesign {
    fn default() -> Self {
        CulturalCapitalDesign {
            world: ScenarioConfig {
                name: "cultural_capital".into(),
                k_sources: 5,
                conformity: 0.5,
                alpha: 0.9,
                mu_c_bar: 1.0,
                sigma_c_bar: 1.0,
                params: SimParams::default(),
            },
            high_mu_c: 1.1,
            high_sigma_c: 1.3,
            low_mu_c: 1.0,
            low_sigma_c: 0.6,
        }
    }
}

impl CulturalCapitalDesign {
    /// High-CC cohort (agents `0..n/2`) followed by the low-CC cohort.
    pub fn cohorts(&self, n_agents: usize) -> [Cohort; 2] {
        [
            Cohort {
                mu_c_bar: self.high_mu_c,
                sigma_c_bar: self.high_sigma_c,
                size: n_agents / 2,
            },
            Cohort {
                mu_c_bar: self.low_mu_c,
                sigma_c_bar: self.low_sigma_c,
                size: n_agents - n_agents / 2,
            },
        ]
    }
}

/// Baseline scenario whose alpha is varied in the curation sweep.
pub fn sweep_baseline() -> ScenarioConfig {
    ScenarioConfig {
        name: "baseline".into(),
        k_sources: 8,
        conformity: 0.10,
        alpha: 0.0,
        mu_c_bar: 1.0,
        sigma_c_bar: 1.0,
        params: SimParams::default(),
    }
}

/// `0.0, 0.1, ..., 0.9`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..10).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub mode: Mode,
    pub base_seed: u64,
    pub replicates: usize,
    pub alpha_grid: Vec<f64>,
    pub n_agents_cc: usize,
    pub scenarios: Vec<ScenarioConfig>,
    pub sweep_base: ScenarioConfig,
    pub cultural_capital: CulturalCapitalDesign,
    pub metric_base: MetricBase,
    pub show_bands: bool,
}

impl ExperimentPlan {
    /// Defaults for `mode`: one replicate and a full-size cultural-capital
    /// population in paper mode; 200 replicates and 100 listeners in robust mode.
    pub fn new(mode: Mode, base_seed: u64) -> Self {
        let (replicates, n_agents_cc) = match mode {
            Mode::Paper => (1, SimParams::default().n_agents),
            Mode::Robust => (200, 100),
        };
        ExperimentPlan {
            mode,
            base_seed,
            replicates,
            alpha_grid: default_alpha_grid(),
            n_agents_cc,
            scenarios: all_presets(),
            sweep_base: sweep_baseline(),
            cultural_capital: CulturalCapitalDesign::default(),
            metric_base: MetricBase::Cum,
            show_bands: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.alpha_grid.len() < 2 {
            return Err(Error::InvalidConfig(
                "alpha grid needs at least two points".into(),
            ));
        }
        if self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig(
                "alpha grid values must lie in [0, 1]".into(),
            ));
        }
        if self.n_agents_cc < 2 || !self.n_agents_cc.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "n_agents_cc must be a positive even number, got {}",
                self.n_agents_cc
            )));
        }
        if self.scenarios.is_empty() {
            return Err(Error::InvalidConfig("no scenarios selected".into()));
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        for &a in &self.alpha_grid {
            self.sweep_base.with_alpha(a).validate()?;
        }
        cc_config(&self.cultural_capital, self.n_agents_cc).validate()
    }
}

fn seed_for(base_seed: u64, replicate: usize) -> u64 {
    base_seed.wrapping_add(replicate as u64)
}

fn cc_config(design: &CulturalCapitalDesign, n_agents: usize) -> ScenarioConfig {
    let mut cfg = design.world.clone();
    cfg.params.n_agents = n_agents;
    cfg
}

/// Runs one world from initialization through `n_steps` steps.
pub fn run_world(
    config: &ScenarioConfig,
    cohorts: &[Cohort],
    seed: u64,
) -> Result<(MetricSeries, WorldState)> {
    let mut rng = rng_from_seed(seed);
    let mut world = init_world_with_cohorts(config, cohorts, &mut rng)?;
    let expected = (config.params.songs_per_step * config.params.n_agents) as u64;
    let mut series = MetricSeries::default();
    for _ in 0..config.params.n_steps {
        let report = step(&mut world, config, &mut rng)?;
        series.record(&world, report.mean_epistemic, expected);
    }
    Ok((series, world))
}

fn single_cohort(config: &ScenarioConfig) -> [Cohort; 1] {
    [Cohort {
        mu_c_bar: config.mu_c_bar,
        sigma_c_bar: config.sigma_c_bar,
        size: config.params.n_agents,
    }]
}

pub fn run_scenario(config: &ScenarioConfig, seed: u64) -> Result<MetricSeries> {
    run_world(config, &single_cohort(config), seed).map(|(s, _)| s)
}

/// All replicates of one scenario, plus the final world of replicate 0.
#[derive(Debug, Clone)]
pub struct ScenarioRuns {
    pub config: ScenarioConfig,
    pub runs: Vec<MetricSeries>,
    pub final_world: WorldState,
}

fn replicate_runs(
    config: &ScenarioConfig,
    cohorts: &[Cohort],
    replicates: usize,
    base_seed: u64,
) -> Result<ScenarioRuns> {
    let mut out: Vec<(MetricSeries, Option<WorldState>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let (series, world) = run_world(config, cohorts, seed_for(base_seed, r))?;
            Ok((series, (r == 0).then_some(world)))
        })
        .collect::<Result<_>>()?;
    let final_world = out[0].1.take().expect("replicate 0 keeps its world");
    Ok(ScenarioRuns {
        config: config.clone(),
        runs: out.into_iter().map(|(s, _)| s).collect(),
        final_world,
    })
}

pub fn run_replicates(
    config: &ScenarioConfig,
    replicates: usize,
    base_seed: u64,
) -> Result<ScenarioRuns> {
    replicate_runs(config, &single_cohort(config), replicates, base_seed)
}

/// Per-replicate entropy drops across the low and high curation ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCheck {
    /// Entropy at alpha 0.0 minus entropy at alpha 0.5.
    pub early_drop: Vec<f64>,
    /// Entropy at alpha 0.5 minus entropy at alpha 0.9.
    pub late_drop: Vec<f64>,
    /// Share of replicates where the late drop exceeds the early drop.
    pub fraction_late_larger: f64,
}

#[derive(Debug, Clone)]
pub struct AlphaSweep {
    pub base: ScenarioConfig,
    pub alphas: Vec<f64>,
    /// `runs[a][r]`.
    pub runs: Vec<ScenarioRuns>,
    /// `entropy_last10[a][r]`.
    pub entropy_last10: Vec<Vec<f64>>,
    pub gini_last10: Vec<Vec<f64>>,
    /// One slope per replicate.
    pub entropy_slopes: Vec<f64>,
    pub gini_slopes: Vec<f64>,
    pub entropy_slope: Band,
    pub gini_slope: Band,
    /// `None` unless the grid contains 0.0, 0.5 and 0.9.
    pub threshold: Option<ThresholdCheck>,
}

fn grid_index(grid: &[f64], target: f64) -> Option<usize> {
    grid.iter().position(|a| (a - target).abs() < 1e-9)
}

fn replicate_slopes(alphas: &[f64], per_alpha: &[Vec<f64>]) -> Vec<f64> {
    let reps = per_alpha[0].len();
    (0..reps)
        .map(|r| {
            let ys: Vec<f64> = per_alpha.iter().map(|v| v[r]).collect();
            ols_slope(alphas, &ys).unwrap_or(f64::NAN)
        })
        .collect()
}

fn last10_of(runs: &ScenarioRuns, metric: Metric) -> Vec<f64> {
    runs.runs.iter().map(|s| last10(s.get(metric))).collect()
}

/// Varies alpha on `base`, runs `replicates` worlds per grid point, and fits
/// one OLS slope of the last-10-step entropy and Gini against alpha per
/// replicate. Slope intervals are percentiles across replicates.
pub fn run_alpha_sweep(
    base: &ScenarioConfig,
    alpha_grid: &[f64],
    replicates: usize,
    base_seed: u64,
    metric_base: MetricBase,
) -> Result<AlphaSweep> {
    let alphas = alpha_grid.to_vec();
    if alphas.len() < 2 || ols_slope(&alphas, &vec![0.0; alphas.len()]).is_none() {
        return Err(Error::InvalidConfig("alpha grid is degenerate".into()));
    }
    let runs: Vec<ScenarioRuns> = alphas
        .par_iter()
        .map(|&a| {
            let mut cfg = base.with_alpha(a);
            cfg.name = format!("{}@{a}", base.name);
            run_replicates(&cfg, replicates, base_seed)
        })
        .collect::<Result<_>>()?;

    let entropy_last10: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| last10_of(r, metric_base.entropy()))
        .collect();
    let gini_last10: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| last10_of(r, metric_base.gini()))
        .collect();
    let entropy_slopes = replicate_slopes(&alphas, &entropy_last10);
    let gini_slopes = replicate_slopes(&alphas, &gini_last10);

    let threshold = match (
        grid_index(&alphas, 0.0),
        grid_index(&alphas, 0.5),
        grid_index(&alphas, 0.9),
    ) {
        (Some(i0), Some(i5), Some(i9)) => {
            let early: Vec<f64> = (0..replicates)
                .map(|r| entropy_last10[i0][r] - entropy_last10[i5][r])
                .collect();
            let late: Vec<f64> = (0..replicates)
                .map(|r| entropy_last10[i5][r] - entropy_last10[i9][r])
                .collect();
            let wins = early.iter().zip(&late).filter(|(e, l)| l > e).count();
            Some(ThresholdCheck {
                fraction_late_larger: wins as f64 / replicates as f64,
                early_drop: early,
                late_drop: late,
            })
        }
        _ => None,
    };

    Ok(AlphaSweep {
        base: base.clone(),
        entropy_slope: Band::of(&entropy_slopes),
        gini_slope: Band::of(&gini_slopes),
        alphas,
        runs,
        entropy_last10,
        gini_last10,
        entropy_slopes,
        gini_slopes,
        threshold,
    })
}

/// Paired per-replicate difference between two scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct Contrast {
    pub minuend: String,
    pub subtrahend: String,
    pub per_replicate: Vec<f64>,
    pub band: Band,
}

/// Last-10-step summary of one metric for every scenario, with contrasts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioComparison {
    pub metric: Metric,
    pub scenarios: Vec<String>,
    /// `last10[s][r]`.
    pub last10: Vec<Vec<f64>>,
    pub bands: Vec<Band>,
    pub contrasts: Vec<Contrast>,
}

impl ScenarioComparison {
    pub fn band_of(&self, scenario: &str) -> Option<&Band> {
        self.scenarios
            .iter()
            .position(|s| s == scenario)
            .map(|i| &self.bands[i])
    }

    pub fn contrast(&self, minuend: &str, subtrahend: &str) -> Option<&Contrast> {
        self.contrasts
            .iter()
            .find(|c| c.minuend == minuend && c.subtrahend == subtrahend)
    }
}

/// Gini contrasts reported for cross-national concentration.
pub const GINI_CONTRASTS: [(&str, &str); 3] =
    [("sanremo", "brazil"), ("uk", "brazil"), ("sanremo", "kpop")];
/// Supply-spread contrasts, each against the high-conformity scenario.
pub const SUPPLY_CONTRASTS: [(&str, &str); 3] = [
    ("brazil", "sanremo"),
    ("kpop", "sanremo"),
    ("uk", "sanremo"),
];

/// Summarizes `metric` over completed scenario runs. Contrasts whose
/// scenarios are not both present are skipped.
pub fn compare_scenarios(
    runs: &[ScenarioRuns],
    metric: Metric,
    pairs: &[(&str, &str)],
) -> ScenarioComparison {
    let scenarios: Vec<String> = runs.iter().map(|r| r.config.name.clone()).collect();
    let last10: Vec<Vec<f64>> = runs.iter().map(|r| last10_of(r, metric)).collect();
    let bands = last10.iter().map(|v| Band::of(v)).collect();
    let contrasts = pairs
        .iter()
        .filter_map(|&(a, b)| {
            let ia = scenarios.iter().position(|s| s == a)?;
            let ib = scenarios.iter().position(|s| s == b)?;
            let per_replicate: Vec<f64> = last10[ia]
                .iter()
                .zip(&last10[ib])
                .map(|(x, y)| x - y)
                .collect();
            Some(Contrast {
                minuend: a.to_string(),
                subtrahend: b.to_string(),
                band: Band::of(&per_replicate),
                per_replicate,
            })
        })
        .collect();
    ScenarioComparison {
        metric,
        scenarios,
        last10,
        bands,
        contrasts,
    }
}

pub fn run_scenarios(
    scenarios: &[ScenarioConfig],
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<ScenarioRuns>> {
    scenarios
        .par_iter()
        .map(|cfg| run_replicates(cfg, replicates, base_seed))
        .collect()
}

/// Cross-national concentration: last-10 Gini per scenario and the
/// confirmatory contrasts.
pub fn run_cross_national(
    scenarios: &[ScenarioConfig],
    replicates: usize,
    base_seed: u64,
    metric_base: MetricBase,
) -> Result<ScenarioComparison> {
    if scenarios.len() < 2 {
        return Err(Error::InvalidConfig(
            "cross-national comparison needs two scenarios".into(),
        ));
    }
    let runs = run_scenarios(scenarios, replicates, base_seed)?;
    Ok(compare_scenarios(
        &runs,
        metric_base.gini(),
        &GINI_CONTRASTS,
    ))
}

/// Supply-side dispersion per scenario and its contrasts against Sanremo.
pub fn run_supply_contrasts(
    scenarios: &[ScenarioConfig],
    replicates: usize,
    base_seed: u64,
) -> Result<ScenarioComparison> {
    if !scenarios.iter().any(|s| s.name == "sanremo") || scenarios.len() < 2 {
        return Err(Error::InvalidConfig(
            "supply contrasts need sanremo and at least one comparator".into(),
        ));
    }
    let runs = run_scenarios(scenarios, replicates, base_seed)?;
    Ok(compare_scenarios(
        &runs,
        Metric::SupplySpread,
        &SUPPLY_CONTRASTS,
    ))
}

#[derive(Debug, Clone)]
pub struct CulturalCapitalResult {
    pub design: CulturalCapitalDesign,
    pub n_agents: usize,
    pub runs: ScenarioRuns,
    /// Mean last-10 individual entropy of the high-CC cohort, per replicate.
    pub high_last10: Vec<f64>,
    pub low_last10: Vec<f64>,
    /// `high - low`, per replicate.
    pub deltas: Vec<f64>,
    pub band: Band,
}

/// Mixed high/low cultural-capital population in one high-curation world.
pub fn run_cultural_capital(
    design: &CulturalCapitalDesign,
    n_agents_cc: usize,
    replicates: usize,
    base_seed: u64,
) -> Result<CulturalCapitalResult> {
    if n_agents_cc < 2 || !n_agents_cc.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "n_agents_cc must be a positive even number, got {n_agents_cc}"
        )));
    }
    let cfg = cc_config(design, n_agents_cc);
    let runs = replicate_runs(&cfg, &design.cohorts(n_agents_cc), replicates, base_seed)?;
    let high_last10: Vec<f64> = runs
        .runs
        .iter()
        .map(|s| last10(&s.cohort_entropy[0]))
        .collect();
    let low_last10: Vec<f64> = runs
        .runs
        .iter()
        .map(|s| last10(&s.cohort_entropy[1]))
        .collect();
    let deltas: Vec<f64> = high_last10
        .iter()
        .zip(&low_last10)
        .map(|(h, l)| h - l)
        .collect();
    Ok(CulturalCapitalResult {
        design: design.clone(),
        n_agents: n_agents_cc,
        band: Band::of(&deltas),
        runs,
        high_last10,
        low_last10,
        deltas,
    })
}

/// Everything a plan produces.
#[derive(Debug, Clone)]
pub struct PlanResults {
    pub plan: ExperimentPlan,
    pub scenarios: Vec<ScenarioRuns>,
    pub concentration: ScenarioComparison,
    pub supply: ScenarioComparison,
    pub sweep: AlphaSweep,
    pub cultural_capital: CulturalCapitalResult,
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanResults> {
    plan.validate()?;
    let scenarios = run_scenarios(&plan.scenarios, plan.replicates, plan.base_seed)?;
    let concentration = compare_scenarios(&scenarios, plan.metric_base.gini(), &GINI_CONTRASTS);
    let supply = compare_scenarios(&scenarios, Metric::SupplySpread, &SUPPLY_CONTRASTS);
    let sweep = run_alpha_sweep(
        &plan.sweep_base,
        &plan.alpha_grid,
        plan.replicates,
        plan.base_seed,
        plan.metric_base,
    )?;
    let cultural_capital = run_cultural_capital(
        &plan.cultural_capital,
        plan.n_agents_cc,
        plan.replicates,
        plan.base_seed,
    )?;
    Ok(PlanResults {
        plan: plan.clone(),
        scenarios,
        concentration,
        supply,
        sweep,
        cultural_capital,
    })
}

/// Predicted sign of an effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
}

/// One line of the robustness table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub prediction: String,
    pub measure: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub notes: String,
}

/// Note for a directional row: says "supports" only when the interval lies
/// strictly on the predicted side of zero.
pub fn support_note(prediction: &str, band: &Band, direction: Direction) -> String {
    let (word, holds) = match direction {
        Direction::Positive => ("positive", band.p05 > 0.0 && band.mean > 0.0),
        Direction::Negative => ("negative", band.p95 < 0.0 && band.mean < 0.0),
    };
    if holds {
        format!("{word} and interval excludes zero: supports {prediction}")
    } else {
        format!("predicted {word}; interval does not exclude zero in that direction")
    }
}

fn level_row(prediction: &str, measure: String, band: &Band) -> RobustnessRow {
    RobustnessRow {
        prediction: prediction.into(),
        measure,
        estimate: band.mean,
        ci_low: band.p05,
        ci_high: band.p95,
        notes: String::new(),
    }
}

fn directional_row(
    prediction: &str,
    measure: String,
    band: &Band,
    direction: Direction,
) -> RobustnessRow {
    RobustnessRow {
        notes: support_note(prediction, band, direction),
        ..level_row(prediction, measure, band)
    }
}

/// Builds the robustness table, sorted by (prediction, measure).
pub fn emit_robustness_table(results: &PlanResults) -> Vec<RobustnessRow> {
    let mut rows = Vec::new();
    let sweep = &results.sweep;
    rows.push(directional_row(
        "P1",
        "Slope H_cons vs α (last10)".into(),
        &sweep.entropy_slope,
        Direction::Negative,
    ));
    rows.push(directional_row(
        "P1",
        "Slope Gini vs α (last10)".into(),
        &sweep.gini_slope,
        Direction::Positive,
    ));

    for (comparison, prediction, label) in [
        (&results.concentration, "P2", "Gini"),
        (&results.supply, "P4", "Supply spread"),
    ] {
        for (name, band) in comparison.scenarios.iter().zip(&comparison.bands) {
            rows.push(level_row(
                prediction,
                format!("{}: {label} (last10)", display_name(name)),
                band,
            ));
        }
        let delta_label = if label == "Gini" {
            "Gini"
        } else {
            "supply spread"
        };
        for c in &comparison.contrasts {
            rows.push(directional_row(
                prediction,
                format!(
                    "{} - {}: Δ {delta_label} (last10)",
                    display_name(&c.minuend),
                    display_name(&c.subtrahend)
                ),
                &c.band,
                Direction::Positive,
            ));
        }
    }

    let cc = &results.cultural_capital;
    rows.push(directional_row(
        "P3",
        format!(
            "High CC - Low CC: Δ individual entropy (last10) [N_cc={}]",
            cc.n_agents
        ),
        &cc.band,
        Direction::Positive,
    ));

    rows.sort_by(|a, b| (&a.prediction, &a.measure).cmp(&(&b.prediction, &b.measure)));
    rows
}
