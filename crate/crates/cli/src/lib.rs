//! Argument parsing and command execution for the `musicmarket` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use musicmarket::aif::{
    classify_trajectory, expected_free_energy, DirichletModel, PreferenceParams,
};
use musicmarket::manifest::{verify_manifest, write_manifest, Mismatch};
use musicmarket::output::write_results;
use musicmarket::{
    emit_robustness_table, load_config, preset, run_plan, Error, ExperimentPlan, MetricBase, Mode,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaseArg {
    Step,
    Cum,
}

#[derive(Debug, Parser)]
#[command(
    name = "musicmarket",
    version,
    about = "Simulate curation, conformity and taste in music markets"
)]
pub struct Cli {
    /// `paper`: one replicate, raw series. `robust`: replicated runs with intervals.
    #[arg(long, value_enum, default_value_t = ModeArg::Paper)]
    pub mode: ModeArg,

    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,

    /// Base seed; replicate r uses seed + r.
    #[arg(long, default_value_t = 123)]
    pub seed: u64,

    /// Replicates per experiment [default: 1 in paper mode, 200 in robust mode].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicates: Option<u64>,

    /// Listeners in the cultural-capital experiment [default: 200 paper, 100 robust].
    #[arg(long = "n_agents_cc")]
    pub n_agents_cc: Option<usize>,

    /// Also write per-step percentile bands (needs at least 2 replicates).
    #[arg(long = "show_bands")]
    pub show_bands: bool,

    /// Preset scenario to run; repeatable [default: all four].
    #[arg(long)]
    pub scenario: Vec<String>,

    /// Scenario config file; repeatable. Replaces the scenario of the same name or adds one.
    #[arg(long)]
    pub config: Vec<PathBuf>,

    /// Comma-separated alpha values for the curation sweep [default: 0.0,0.1,...,0.9].
    #[arg(long = "alpha-grid", value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,

    /// Play-count base for entropy and Gini in the prediction checks.
    #[arg(long = "entropy-base", value_enum, default_value_t = BaseArg::Cum)]
    pub entropy_base: BaseArg,

    /// Check the manifest in --outdir against the files on disk and exit.
    #[arg(long)]
    pub verify: bool,

    /// Print the active-inference reference checks and exit.
    #[arg(long = "aif-demo")]
    pub aif_demo: bool,
}

/// What the binary should do.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run {
        plan: Box<ExperimentPlan>,
        outdir: PathBuf,
    },
    Verify {
        outdir: PathBuf,
    },
    AifDemo,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

/// Builds the experiment plan from parsed flags.
pub fn build_plan(cli: &Cli) -> Result<ExperimentPlan, Error> {
    let mode = match cli.mode {
        ModeArg::Paper => Mode::Paper,
        ModeArg::Robust => Mode::Robust,
    };
    let mut plan = ExperimentPlan::new(mode, cli.seed);
    if let Some(r) = cli.replicates {
        plan.replicates = r as usize;
    }
    if let Some(n) = cli.n_agents_cc {
        plan.n_agents_cc = n;
    }
    if !cli.scenario.is_empty() {
        let mut scenarios = Vec::new();
        for name in &cli.scenario {
            let cfg = preset(name)?;
            if !scenarios
                .iter()
                .any(|s: &musicmarket::ScenarioConfig| s.name == cfg.name)
            {
                scenarios.push(cfg);
            }
        }
        plan.scenarios = scenarios;
    }
    for path in &cli.config {
        let cfg = load_config(path)?;
        match plan.scenarios.iter_mut().find(|s| s.name == cfg.name) {
            Some(slot) => *slot = cfg,
            None => plan.scenarios.push(cfg),
        }
    }
    if let Some(grid) = &cli.alpha_grid {
        plan.alpha_grid = grid.clone();
    }
    plan.metric_base = match cli.entropy_base {
        BaseArg::Step => MetricBase::Step,
        BaseArg::Cum => MetricBase::Cum,
    };
    plan.show_bands = cli.show_bands;
    if plan.show_bands && plan.replicates < 2 {
        return Err(Error::TooFewReplicates(plan.replicates));
    }
    plan.validate()?;
    Ok(plan)
}

/// Parses `argv` (including the program name). Help and version requests
/// come back as a failure with exit code 0 and the text to print.
pub fn parse_cli<I, T>(argv: I) -> Result<Invocation, Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Failure {
        code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
        message: e.render().to_string(),
    })?;
    if cli.verify && cli.aif_demo {
        return Err(Failure::usage("--verify and --aif-demo cannot be combined"));
    }
    if cli.verify {
        return Ok(Invocation::Verify { outdir: cli.outdir });
    }
    if cli.aif_demo {
        return Ok(Invocation::AifDemo);
    }
    let plan = build_plan(&cli).map_err(Failure::usage)?;
    Ok(Invocation::Run {
        plan: Box::new(plan),
        outdir: cli.outdir,
    })
}

/// Runs the plan, writes every CSV and the manifest, and returns the written
/// file names (manifest last).
pub fn run_experiments(plan: &ExperimentPlan, outdir: &Path) -> Result<Vec<String>, Failure> {
    log::info!(
        "mode {:?}, seed {}, {} replicates, {} scenarios",
        plan.mode,
        plan.base_seed,
        plan.replicates,
        plan.scenarios.len()
    );
    let results = run_plan(plan).map_err(Failure::runtime)?;
    let rows = emit_robustness_table(&results);
    let mut files = write_results(&results, &rows, outdir).map_err(Failure::runtime)?;
    let params = serde_json::to_value(plan).map_err(Failure::runtime)?;
    let manifest = write_manifest(outdir, &files, env!("CARGO_PKG_VERSION"), params)
        .map_err(Failure::runtime)?;
    log::info!("wrote {} files and {}", files.len(), manifest.display());
    files.push(musicmarket::manifest::MANIFEST_FILE.to_string());
    Ok(files)
}

pub fn verify(outdir: &Path) -> Result<(), Failure> {
    let mismatches = verify_manifest(outdir).map_err(|e| Failure {
        code: EXIT_VERIFY,
        message: e.to_string(),
    })?;
    if mismatches.is_empty() {
        return Ok(());
    }
    let mut message = String::from("verification failed:");
    for Mismatch { path, reason } in &mismatches {
        let _ = write!(message, "\n  {path}: {reason}");
    }
    Err(Failure {
        code: EXIT_VERIFY,
        message,
    })
}

/// Text report of the active-inference reference checks.
pub fn aif_demo() -> Result<String, Error> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "trajectories under repeated exposure (8 categories, 30 steps)"
    );
    let _ = writeln!(out, "{:>8} {:>6} {:>7}  class", "I0", "mu_c", "sigma_c");
    for (i0, mu_c, sigma_c) in [(2.5, 1.0, 0.5), (0.9, 1.0, 0.5), (0.5, 3.0, 0.4)] {
        let class = classify_trajectory(i0, &PreferenceParams { mu_c, sigma_c }, 30)?;
        let _ = writeln!(out, "{i0:>8} {mu_c:>6} {sigma_c:>7}  {}", class.as_str());
    }

    let prefs = PreferenceParams {
        mu_c: 1.0,
        sigma_c: 0.5,
    };
    let _ = writeln!(
        out,
        "\nepistemic value of an attended song as its column is scaled"
    );
    let _ = writeln!(out, "{:>8} {:>14} {:>14}", "scale", "epistemic", "total_g");
    for scale in [1.0, 10.0, 100.0, 1000.0] {
        let mut model =
            DirichletModel::from_columns(&[vec![3.0, 1.0], vec![1.0, 3.0]], &[0.5, 0.5])?;
        model.scale_column(0, scale);
        model.attend(0);
        let efe = expected_free_energy(&model, &prefs, 0);
        let _ = writeln!(
            out,
            "{scale:>8} {:>14.6e} {:>14.6}",
            efe.epistemic, efe.total_g
        );
    }
    Ok(out)
}

/// Executes an invocation and returns the process exit code.
pub fn execute(invocation: Invocation) -> i32 {
    let result = match invocation {
        Invocation::Run { plan, outdir } => run_experiments(&plan, &outdir).map(|files| {
            for f in files {
                println!("{}", outdir.join(f).display());
            }
        }),
        Invocation::Verify { outdir } => {
            verify(&outdir).map(|()| println!("ok: {}", outdir.display()))
        }
        Invocation::AifDemo => aif_demo().map(|s| print!("{s}")).map_err(Failure::runtime),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
