//! Diversity, concentration and supply-side measures, plus the small
//! statistics kit (OLS slope, percentiles) used by the experiment harness.

use serde::Serialize;

use crate::dynamics::epistemic_value;
use crate::error::{Error, Result};
use crate::model::{distance, SimParams, Source, WorldState};

/// A value that may be undefined on degenerate input (all-zero counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged {
    pub value: f64,
    pub degenerate: bool,
}

/// Shannon entropy (nats) of the shares implied by `counts`.
/// An all-zero vector yields 0 with the degenerate flag set.
pub fn shannon_entropy<T: Copy + Into<f64>>(counts: &[T]) -> Flagged {
    let total: f64 = counts.iter().map(|&c| c.into()).sum();
    if total <= 0.0 {
        return Flagged {
            value: 0.0,
            degenerate: true,
        };
    }
    let h = counts
        .iter()
        .map(|&c| c.into())
        .filter(|&c| c > 0.0)
        .map(|c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum::<f64>();
    Flagged {
        value: h.max(0.0),
        degenerate: false,
    }
}

/// Entropy of one listener's cumulative exposure distribution.
pub fn individual_entropy(exposure_row: &[u32]) -> Flagged {
    shannon_entropy(exposure_row)
}

/// Gini coefficient `sum_i sum_j |x_i - x_j| / (2 n^2 mean)`, computed from
/// the sorted values. All-zero input yields 0 with the degenerate flag set.
pub fn gini<T: Copy + Into<f64>>(counts: &[T]) -> Flagged {
    let mut xs: Vec<f64> = counts.iter().map(|&c| c.into()).collect();
    let n = xs.len() as f64;
    let total: f64 = xs.iter().sum();
    if xs.is_empty() || total <= 0.0 {
        return Flagged {
            value: 0.0,
            degenerate: true,
        };
    }
    xs.sort_by(f64::total_cmp);
    // sum_i sum_j |x_i - x_j| = 2 * sum_i (2i - n + 1) x_(i) for 0-based ranks.
    let weighted: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * i as f64 - n + 1.0) * x)
        .sum();
    Flagged {
        value: (weighted / (n * total)).max(0.0),
        degenerate: false,
    }
}

/// Mean pairwise distance between source centers; `None` with fewer than two sources.
pub fn supply_spread(sources: &[Source]) -> Option<f64> {
    let k = sources.len();
    if k < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += distance(&sources[i].center, &sources[j].center);
        }
    }
    Some(sum / (k * (k - 1) / 2) as f64)
}

/// Mean epistemic value over every (agent, selected song) pair, using the
/// exposure counts currently in `world` (call before applying selections).
pub fn mean_epistemic(world: &WorldState, selections: &[Vec<usize>], params: &SimParams) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (agent, selected) in selections.iter().enumerate() {
        for &j in selected {
            sum += epistemic_value(world.exposure(agent, j), params);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Least-squares slope; `None` for fewer than two points or constant `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean over the final `window` entries (the whole series if shorter).
pub fn tail_mean(series: &[f64], window: usize) -> f64 {
    let start = series.len().saturating_sub(window);
    mean(&series[start..])
}

/// Steady-state window length used for summary statistics.
pub const LAST_WINDOW: usize = 10;

pub fn last10(series: &[f64]) -> f64 {
    tail_mean(series, LAST_WINDOW)
}

/// Percentile `q` in `[0, 1]` with linear interpolation between closest
/// ranks: position `(n - 1) * q` in the sorted sample.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// 5th/50th/95th percentiles and mean of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub p05: f64,
    pub p50: f64,
    pub mean: f64,
    pub p95: f64,
}

impl Band {
    /// Summary of any nonempty sample; NaN entries are ignored.
    pub fn of(values: &[f64]) -> Band {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        if sorted.is_empty() {
            return Band {
                p05: f64::NAN,
                p50: f64::NAN,
                mean: f64::NAN,
                p95: f64::NAN,
            };
        }
        sorted.sort_by(f64::total_cmp);
        Band {
            p05: percentile(&sorted, 0.05),
            p50: percentile(&sorted, 0.50),
            mean: mean(&sorted),
            p95: percentile(&sorted, 0.95),
        }
    }

    pub fn excludes_zero(&self) -> bool {
        self.p05 > 0.0 || self.p95 < 0.0
    }
}

/// Per-step bands for one metric, indexed by step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSummary {
    pub bands: Vec<Band>,
}

/// Percentile bands across replicates. `samples[r][t]` is replicate `r` at
/// step `t`; all replicates must have equal length.
pub fn percentile_bands(samples: &[Vec<f64>]) -> Result<BandSummary> {
    if samples.len() < 2 {
        return Err(Error::TooFewReplicates(samples.len()));
    }
    let steps = samples[0].len();
    if samples.iter().any(|s| s.len() != steps) {
        return Err(Error::InvalidConfig(
            "replicate series have different lengths".into(),
        ));
    }
    let bands = (0..steps)
        .map(|t| {
            let column: Vec<f64> = samples.iter().map(|s| s[t]).collect();
            Band::of(&column)
        })
        .collect();
    Ok(BandSummary { bands })
}

/// Fixed metric vocabulary, also used as CSV metric names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Metric {
    EntropyStep,
    EntropyCum,
    GiniStep,
    GiniCum,
    EpistemicMean,
    SupplySpread,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::EntropyStep,
        Metric::EntropyCum,
        Metric::GiniStep,
        Metric::GiniCum,
        Metric::EpistemicMean,
        Metric::SupplySpread,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::EntropyStep => "entropy_step",
            Metric::EntropyCum => "entropy_cum",
            Metric::GiniStep => "gini_step",
            Metric::GiniCum => "gini_cum",
            Metric::EpistemicMean => "epistemic_mean",
            Metric::SupplySpread => "supply_spread",
        }
    }
}

pub const INDIV_ENTROPY_HIGHCC: &str = "indiv_entropy_mean_highcc";
pub const INDIV_ENTROPY_LOWCC: &str = "indiv_entropy_mean_lowcc";

/// Per-step metrics of one simulation run (index 0 is the state after step 1).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub entropy_step: Vec<f64>,
    pub entropy_cum: Vec<f64>,
    pub gini_step: Vec<f64>,
    pub gini_cum: Vec<f64>,
    pub epistemic_mean: Vec<f64>,
    /// NaN when the scenario has fewer than two sources.
    pub supply_spread: Vec<f64>,
    /// `cohort_entropy[c][t]`: mean individual entropy of cohort `c` after step `t + 1`.
    pub cohort_entropy: Vec<Vec<f64>>,
    /// Individual entropy of every listener after the final step.
    pub final_individual_entropy: Vec<f64>,
    /// Largest `sum(step_plays)` deviation from `songs_per_step * n_agents` seen; 0 when conserved.
    pub conservation_error: u64,
}

impl MetricSeries {
    pub fn get(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::EntropyStep => &self.entropy_step,
            Metric::EntropyCum => &self.entropy_cum,
            Metric::GiniStep => &self.gini_step,
            Metric::GiniCum => &self.gini_cum,
            Metric::EpistemicMean => &self.epistemic_mean,
            Metric::SupplySpread => &self.supply_spread,
        }
    }

    pub fn len(&self) -> usize {
        self.entropy_cum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entropy_cum.is_empty()
    }

    /// Records the world's metrics after a completed step.
    pub fn record(&mut self, world: &WorldState, mean_epistemic: f64, expected_step_plays: u64) {
        self.entropy_step
            .push(shannon_entropy(&as_f64(&world.step_plays)).value);
        self.entropy_cum
            .push(shannon_entropy(&as_f64(&world.plays)).value);
        self.gini_step.push(gini(&as_f64(&world.step_plays)).value);
        self.gini_cum.push(gini(&as_f64(&world.plays)).value);
        self.epistemic_mean.push(mean_epistemic);
        self.supply_spread
            .push(supply_spread(&world.sources).unwrap_or(f64::NAN));

        let n_cohorts = world.agents.iter().map(|a| a.cohort + 1).max().unwrap_or(0);
        if self.cohort_entropy.len() < n_cohorts {
            self.cohort_entropy.resize(n_cohorts, Vec::new());
        }
        let mut sums = vec![(0.0, 0usize); n_cohorts];
        self.final_individual_entropy.clear();
        for agent in &world.agents {
            let h = individual_entropy(world.exposure_row(agent.id)).value;
            self.final_individual_entropy.push(h);
            sums[agent.cohort].0 += h;
            sums[agent.cohort].1 += 1;
        }
        for (c, (s, n)) in sums.into_iter().enumerate() {
            self.cohort_entropy[c].push(if n == 0 { f64::NAN } else { s / n as f64 });
        }

        let step_total: u64 = world.step_plays.iter().sum();
        self.conservation_error = self
            .conservation_error
            .max(step_total.abs_diff(expected_step_plays));
    }
}

fn as_f64(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&n| n as f64).collect()
}
