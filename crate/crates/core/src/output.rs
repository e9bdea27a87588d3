//! CSV writers for experiment results.
//!
//! Every file is UTF-8 with LF line endings. Floats use the shortest decimal
//! that parses back to the same value; NaN is written as an empty field.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{PlanResults, RobustnessRow, ScenarioRuns};
use crate::metrics::{last10, percentile_bands, Metric, INDIV_ENTROPY_HIGHCC, INDIV_ENTROPY_LOWCC};

pub const TIMESERIES_HEADER: [&str; 7] = [
    "experiment",
    "scenario",
    "alpha",
    "replicate",
    "step",
    "metric",
    "value",
];
pub const BANDS_HEADER: [&str; 9] = [
    "experiment",
    "scenario",
    "alpha",
    "step",
    "metric",
    "p05",
    "mean",
    "p50",
    "p95",
];
pub const ROBUSTNESS_HEADER: [&str; 6] = [
    "prediction",
    "measure",
    "estimate",
    "ci_low",
    "ci_high",
    "notes",
];
pub const SNAPSHOT_HEADER: [&str; 9] = [
    "scenario",
    "kind",
    "id",
    "source_id",
    "x",
    "y",
    "plays",
    "mu_c",
    "sigma_c",
];
pub const LAST10_HEADER: [&str; 6] = [
    "experiment",
    "scenario",
    "alpha",
    "replicate",
    "metric",
    "value",
];

pub const EXPERIMENT_SCENARIOS: &str = "scenarios";
pub const EXPERIMENT_ALPHA_SWEEP: &str = "alpha_sweep";
pub const EXPERIMENT_CULTURAL_CAPITAL: &str = "cultural_capital";

pub const ROBUSTNESS_FILE: &str = "robustness.csv";
pub const SNAPSHOT_FILE: &str = "snapshot.csv";
pub const LAST10_FILE: &str = "last10.csv";

pub fn timeseries_file(experiment: &str) -> String {
    format!("timeseries_{experiment}.csv")
}

pub fn bands_file(experiment: &str) -> String {
    format!("bands_{experiment}.csv")
}

/// Shortest round-trip decimal; empty for NaN.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvFile {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        let mut out = CsvFile { path, writer };
        out.row(header)?;
        Ok(out)
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .map_err(|e| Error::csv(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// One group of replicate series that shares an (experiment, scenario, alpha) key.
struct SeriesGroup<'a> {
    experiment: &'static str,
    scenario: &'a str,
    alpha: f64,
    runs: &'a ScenarioRuns,
    /// Extra named series per replicate beyond the standard metric set.
    with_cohorts: bool,
}

impl SeriesGroup<'_> {
    fn named_series(&self, replicate: usize) -> Vec<(&'static str, &[f64])> {
        let s = &self.runs.runs[replicate];
        let mut out: Vec<(&'static str, &[f64])> = Metric::ALL
            .iter()
            .map(|&m| (m.as_str(), s.get(m)))
            .collect();
        if self.with_cohorts {
            out.push((INDIV_ENTROPY_HIGHCC, &s.cohort_entropy[0]));
            out.push((INDIV_ENTROPY_LOWCC, &s.cohort_entropy[1]));
        }
        out
    }
}

fn groups(results: &PlanResults) -> Vec<SeriesGroup<'_>> {
    let mut out = Vec::new();
    for runs in &results.scenarios {
        out.push(SeriesGroup {
            experiment: EXPERIMENT_SCENARIOS,
            scenario: &runs.config.name,
            alpha: runs.config.alpha,
            runs,
            with_cohorts: false,
        });
    }
    for (runs, &alpha) in results.sweep.runs.iter().zip(&results.sweep.alphas) {
        out.push(SeriesGroup {
            experiment: EXPERIMENT_ALPHA_SWEEP,
            scenario: &results.sweep.base.name,
            alpha,
            runs,
            with_cohorts: false,
        });
    }
    let cc = &results.cultural_capital;
    out.push(SeriesGroup {
        experiment: EXPERIMENT_CULTURAL_CAPITAL,
        scenario: &cc.runs.config.name,
        alpha: cc.runs.config.alpha,
        runs: &cc.runs,
        with_cohorts: true,
    });
    out
}

const EXPERIMENTS: [&str; 3] = [
    EXPERIMENT_SCENARIOS,
    EXPERIMENT_ALPHA_SWEEP,
    EXPERIMENT_CULTURAL_CAPITAL,
];

/// Long-format per-step series, one file per experiment.
pub fn write_timeseries(results: &PlanResults, outdir: &Path) -> Result<Vec<String>> {
    let all = groups(results);
    let mut written = Vec::new();
    for experiment in EXPERIMENTS {
        let name = timeseries_file(experiment);
        let mut f = CsvFile::create(outdir.join(&name), &TIMESERIES_HEADER)?;
        for g in all.iter().filter(|g| g.experiment == experiment) {
            let alpha = format_float(g.alpha);
            for r in 0..g.runs.runs.len() {
                let replicate = r.to_string();
                for (metric, values) in g.named_series(r) {
                    for (t, &v) in values.iter().enumerate() {
                        let step = (t + 1).to_string();
                        f.row([
                            experiment,
                            g.scenario,
                            &alpha,
                            &replicate,
                            &step,
                            metric,
                            &format_float(v),
                        ])?;
                    }
                }
            }
        }
        f.finish()?;
        written.push(name);
    }
    Ok(written)
}

/// Per-step 5th/50th/95th percentile and mean across replicates.
pub fn write_bands(results: &PlanResults, outdir: &Path) -> Result<Vec<String>> {
    let all = groups(results);
    let mut written = Vec::new();
    for experiment in EXPERIMENTS {
        let name = bands_file(experiment);
        let mut f = CsvFile::create(outdir.join(&name), &BANDS_HEADER)?;
        for g in all.iter().filter(|g| g.experiment == experiment) {
            let alpha = format_float(g.alpha);
            let n_series = g.named_series(0).len();
            for k in 0..n_series {
                let metric = g.named_series(0)[k].0;
                let samples: Vec<Vec<f64>> = (0..g.runs.runs.len())
                    .map(|r| g.named_series(r)[k].1.to_vec())
                    .collect();
                let summary = percentile_bands(&samples)?;
                for (t, b) in summary.bands.iter().enumerate() {
                    let step = (t + 1).to_string();
                    f.row([
                        experiment,
                        g.scenario,
                        &alpha,
                        &step,
                        metric,
                        &format_float(b.p05),
                        &format_float(b.mean),
                        &format_float(b.p50),
                        &format_float(b.p95),
                    ])?;
                }
            }
        }
        f.finish()?;
        written.push(name);
    }
    Ok(written)
}

/// Last-10-step means of every series of every replicate.
pub fn write_last10(results: &PlanResults, outdir: &Path) -> Result<String> {
    let mut f = CsvFile::create(outdir.join(LAST10_FILE), &LAST10_HEADER)?;
    for g in groups(results) {
        let alpha = format_float(g.alpha);
        for r in 0..g.runs.runs.len() {
            let replicate = r.to_string();
            for (metric, values) in g.named_series(r) {
                f.row([
                    g.experiment,
                    g.scenario,
                    &alpha,
                    &replicate,
                    metric,
                    &format_float(last10(values)),
                ])?;
            }
        }
    }
    f.finish()?;
    Ok(LAST10_FILE.to_string())
}

pub fn write_robustness_csv(rows: &[RobustnessRow], outdir: &Path) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("robustness table is empty".into()));
    }
    let mut f = CsvFile::create(outdir.join(ROBUSTNESS_FILE), &ROBUSTNESS_HEADER)?;
    for r in rows {
        f.row([
            r.prediction.as_str(),
            &r.measure,
            &format_float(r.estimate),
            &format_float(r.ci_low),
            &format_float(r.ci_high),
            &r.notes,
        ])?;
    }
    f.finish()?;
    Ok(ROBUSTNESS_FILE.to_string())
}

/// Final world of replicate 0 for every scenario: songs with their source and
/// cumulative plays, source centers, and listener model centers.
pub fn write_snapshot(scenarios: &[ScenarioRuns], outdir: &Path) -> Result<String> {
    let mut f = CsvFile::create(outdir.join(SNAPSHOT_FILE), &SNAPSHOT_HEADER)?;
    for runs in scenarios {
        let name = runs.config.name.as_str();
        let w = &runs.final_world;
        for song in &w.songs {
            f.row([
                name,
                "song",
                &song.id.to_string(),
                &song.source_id.to_string(),
                &format_float(song.position[0]),
                &format_float(song.position[1]),
                &w.plays[song.id].to_string(),
                "",
                "",
            ])?;
        }
        for src in &w.sources {
            f.row([
                name,
                "source",
                &src.id.to_string(),
                &src.id.to_string(),
                &format_float(src.center[0]),
                &format_float(src.center[1]),
                "",
                "",
                "",
            ])?;
        }
        for a in &w.agents {
            f.row([
                name,
                "agent",
                &a.id.to_string(),
                "",
                &format_float(a.model_center[0]),
                &format_float(a.model_center[1]),
                "",
                &format_float(a.mu_c),
                &format_float(a.sigma_c),
            ])?;
        }
    }
    f.finish()?;
    Ok(SNAPSHOT_FILE.to_string())
}

/// Writes every CSV for `results` into `outdir` (created if missing) and
/// returns the relative file names in write order.
pub fn write_results(
    results: &PlanResults,
    rows: &[RobustnessRow],
    outdir: &Path,
) -> Result<Vec<String>> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut files = write_timeseries(results, outdir)?;
    if results.plan.show_bands && results.plan.replicates >= 2 {
        files.extend(write_bands(results, outdir)?);
    }
    files.push(write_last10(results, outdir)?);
    files.push(write_robustness_csv(rows, outdir)?);
    files.push(write_snapshot(&results.scenarios, outdir)?);
    Ok(files)
}
