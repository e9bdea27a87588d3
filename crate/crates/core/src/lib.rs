//! Agent-based simulator of a music market where listeners pick songs by
//! balancing preferred surprisal, novelty and social proof, while curation
//! narrows what they can see and songwriters drift toward what is popular.
//!
//! The crate also carries a small Dirichlet-categorical active-inference
//! model ([`aif`]) used to check the reduced-form utility against the full
//! expected-free-energy machinery, and the experiment harness that turns
//! replicated runs into percentile intervals and a robustness table.
//!
//! ```
//! use musicmarket::{preset, run_scenario};
//!
//! let mut cfg = preset("brazil").unwrap();
//! cfg.params.n_steps = 5;
//! let series = run_scenario(&cfg, 123).unwrap();
//! assert_eq!(series.len(), 5);
//! assert_eq!(series.conservation_error, 0);
//! ```

pub mod aif;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod output;
pub mod rng;

pub use error::{Error, Result};
pub use experiments::{
    emit_robustness_table, run_alpha_sweep, run_cross_national, run_cultural_capital, run_plan,
    run_scenario, run_supply_contrasts, ExperimentPlan, MetricBase, Mode, PlanResults,
    RobustnessRow,
};
pub use metrics::{Band, BandSummary, Metric, MetricSeries};
pub use model::{
    all_presets, init_world, load_config, parse_config, preset, Cohort, ListenerAgent,
    ScenarioConfig, SimParams, Song, Source, WorldState, PRESET_NAMES,
};
pub use rng::{rng_from_seed, SimRng, RNG_ALGORITHM};
