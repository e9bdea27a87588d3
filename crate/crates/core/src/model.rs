//! Parameters, scenario presets and the simulated world.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dynamics::pool_length;
use crate::error::{Error, Result};

/// Points in the two-dimensional musical feature space.
pub type Point = [f64; 2];

/// Songs live in `[FEATURE_MIN, FEATURE_MAX]²`.
pub const FEATURE_MIN: f64 = 0.0;
pub const FEATURE_MAX: f64 = 4.0;
/// Source and listener centers are initialized in this square.
pub const CENTER_MIN: f64 = 0.5;
pub const CENTER_MAX: f64 = 3.5;

pub fn distance(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parameters shared by every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_agents: usize,
    pub n_songs: usize,
    pub n_steps: usize,
    /// Weight of the cognitive (pragmatic + epistemic) terms.
    pub gamma: f64,
    /// Epistemic decay with exposure.
    pub beta: f64,
    /// Familiarity attenuation of effective surprisal.
    pub lambda: f64,
    /// Social weight on log play counts.
    pub omega: f64,
    pub pool_size: usize,
    pub pool_shrink: f64,
    pub songs_per_step: usize,
    pub song_noise_sd: f64,
    pub mu_c_sd: f64,
    pub sigma_c_sd: f64,
    /// Lower clip for sampled `mu_c` and `sigma_c`.
    pub pref_floor: f64,
    pub drift_rate_source: f64,
    pub drift_rate_song: f64,
    /// Temperature of the distance kernel used for similarity slots.
    pub similarity_tau: f64,
    /// Probability mass spread uniformly over similarity candidates.
    pub discovery_mass: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n_agents: 200,
            n_songs: 80,
            n_steps: 60,
            gamma: 8.0,
            beta: 0.3,
            lambda: 0.5,
            omega: 0.45,
            pool_size: 18,
            pool_shrink: 0.45,
            songs_per_step: 5,
            song_noise_sd: 0.3,
            mu_c_sd: 0.2,
            sigma_c_sd: 0.15,
            pref_floor: 0.3,
            drift_rate_source: 0.12,
            drift_rate_song: 0.06,
            similarity_tau: 1.0,
            discovery_mass: 0.05,
        }
    }
}

/// One institutional scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    /// Number of independent production sources (K).
    pub k_sources: usize,
    /// Per-step probability that a source drifts toward the popularity centroid.
    pub conformity: f64,
    /// Effective curation strength.
    pub alpha: f64,
    /// Population mean of the preferred surprisal.
    pub mu_c_bar: f64,
    /// Population mean of the tolerance bandwidth.
    pub sigma_c_bar: f64,
    pub params: SimParams,
}

pub const PRESET_NAMES: [&str; 4] = ["sanremo", "brazil", "kpop", "uk"];

/// Returns the named institutional preset with default shared parameters.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let key = name.to_ascii_lowercase();
    let (k_sources, conformity, alpha, mu_c_bar, sigma_c_bar) = match key.as_str() {
        "sanremo" => (3, 0.90, 0.95, 1.0, 0.7),
        "brazil" => (15, 0.02, 0.30, 1.2, 1.2),
        "kpop" => (8, 0.10, 0.65, 1.1, 1.1),
        "uk" => (12, 0.30, 0.96, 1.0, 1.0),
        _ => {
            return Err(Error::UnknownScenario {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(ScenarioConfig {
        name: key,
        k_sources,
        conformity,
        alpha,
        mu_c_bar,
        sigma_c_bar,
        params: SimParams::default(),
    })
}

pub fn all_presets() -> Vec<ScenarioConfig> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("built-in preset"))
        .collect()
}

/// Human-readable label used in table rows.
pub fn display_name(name: &str) -> String {
    match name {
        "sanremo" => "Sanremo".into(),
        "brazil" => "Brazil".into(),
        "kpop" => "K-pop".into(),
        "uk" => "UK".into(),
        other => other.into(),
    }
}

impl ScenarioConfig {
    /// Checks every parameter constraint, including that the visibility pool
    /// can hold a full step's selections.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{}: {msg}", self.name)));
        for (key, v) in [
            ("n_agents", p.n_agents),
            ("n_songs", p.n_songs),
            ("n_steps", p.n_steps),
            ("pool_size", p.pool_size),
            ("songs_per_step", p.songs_per_step),
            ("k_sources", self.k_sources),
        ] {
            if v == 0 {
                return bad(format!("{key} must be at least 1"));
            }
        }
        for (key, v) in [
            ("gamma", p.gamma),
            ("beta", p.beta),
            ("lambda", p.lambda),
            ("omega", p.omega),
            ("pool_shrink", p.pool_shrink),
            ("song_noise_sd", p.song_noise_sd),
            ("mu_c_sd", p.mu_c_sd),
            ("sigma_c_sd", p.sigma_c_sd),
            ("pref_floor", p.pref_floor),
            ("drift_rate_source", p.drift_rate_source),
            ("drift_rate_song", p.drift_rate_song),
            ("discovery_mass", p.discovery_mass),
            ("mu_c_bar", self.mu_c_bar),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!(
                    "{key} must be a finite nonnegative number, got {v}"
                ));
            }
        }
        if p.pref_floor <= 0.0 {
            return bad("pref_floor must be positive".into());
        }
        if !(p.similarity_tau.is_finite() && p.similarity_tau > 0.0) {
            return bad("similarity_tau must be positive".into());
        }
        if p.discovery_mass > 1.0 {
            return bad("discovery_mass must lie in [0, 1]".into());
        }
        if p.drift_rate_source > 1.0 || p.drift_rate_song > 1.0 {
            return bad("drift rates must lie in [0, 1]".into());
        }
        if !(self.sigma_c_bar.is_finite() && self.sigma_c_bar > 0.0) {
            return bad("sigma_c_bar must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.conformity) {
            return bad(format!(
                "conformity must lie in [0, 1], got {}",
                self.conformity
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.k_sources > p.n_songs {
            return bad(format!(
                "k_sources ({}) exceeds n_songs ({})",
                self.k_sources, p.n_songs
            ));
        }
        if p.pool_shrink * self.alpha > 1.0 {
            return bad("pool_shrink * alpha exceeds 1".into());
        }
        if p.pool_size > p.n_songs {
            return bad(format!(
                "pool_size ({}) exceeds n_songs ({})",
                p.pool_size, p.n_songs
            ));
        }
        pool_length(self.alpha, p).map(|_| ())
    }

    pub fn with_alpha(&self, alpha: f64) -> ScenarioConfig {
        ScenarioConfig {
            alpha,
            ..self.clone()
        }
    }

    /// Renders the config in the `key = value` format accepted by
    /// [`parse_config`].
    pub fn to_config_string(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "k_sources = {}", self.k_sources);
        let _ = writeln!(s, "conformity = {}", self.conformity);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "mu_c_bar = {}", self.mu_c_bar);
        let _ = writeln!(s, "sigma_c_bar = {}", self.sigma_c_bar);
        for (k, v) in [
            ("n_agents", p.n_agents.to_string()),
            ("n_songs", p.n_songs.to_string()),
            ("n_steps", p.n_steps.to_string()),
            ("gamma", p.gamma.to_string()),
            ("beta", p.beta.to_string()),
            ("lambda", p.lambda.to_string()),
            ("omega", p.omega.to_string()),
            ("pool_size", p.pool_size.to_string()),
            ("pool_shrink", p.pool_shrink.to_string()),
            ("songs_per_step", p.songs_per_step.to_string()),
            ("song_noise_sd", p.song_noise_sd.to_string()),
            ("mu_c_sd", p.mu_c_sd.to_string()),
            ("sigma_c_sd", p.sigma_c_sd.to_string()),
            ("pref_floor", p.pref_floor.to_string()),
            ("drift_rate_source", p.drift_rate_source.to_string()),
            ("drift_rate_song", p.drift_rate_song.to_string()),
            ("similarity_tau", p.similarity_tau.to_string()),
            ("discovery_mass", p.discovery_mass.to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Parses a `key = value` scenario file.
///
/// Blank lines and `#` comments are ignored. An optional `preset = NAME` line
/// selects the starting point (otherwise the shared defaults with a neutral
/// K=8, conformity=0.1, alpha=0.5, mu_c=1.0, sigma_c=1.0 scenario); every
/// other key overrides one field. `origin` is used in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig> {
    let syntax = |line: usize, message: String| Error::ConfigSyntax {
        path: origin.to_string(),
        line,
        message,
    };

    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| syntax(lineno, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_string();
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(syntax(lineno, format!("duplicate key `{key}`")));
        }
        entries.push((lineno, key, value.trim().to_string()));
    }

    let mut cfg = match entries.iter().find(|(_, k, _)| k == "preset") {
        Some((_, _, name)) => preset(name)?,
        None => ScenarioConfig {
            name: "custom".into(),
            k_sources: 8,
            conformity: 0.10,
            alpha: 0.5,
            mu_c_bar: 1.0,
            sigma_c_bar: 1.0,
            params: SimParams::default(),
        },
    };

    for (lineno, key, value) in &entries {
        let lineno = *lineno;
        let int = || {
            value.parse::<usize>().map_err(|_| {
                syntax(
                    lineno,
                    format!("`{key}` expects a nonnegative integer, got `{value}`"),
                )
            })
        };
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| syntax(lineno, format!("`{key}` expects a number, got `{value}`")))
        };
        let p = &mut cfg.params;
        match key.as_str() {
            "preset" => {}
            "name" => cfg.name = value.clone(),
            "k_sources" => cfg.k_sources = int()?,
            "conformity" => cfg.conformity = real()?,
            "alpha" => cfg.alpha = real()?,
            "mu_c_bar" => cfg.mu_c_bar = real()?,
            "sigma_c_bar" => cfg.sigma_c_bar = real()?,
            "n_agents" => p.n_agents = int()?,
            "n_songs" => p.n_songs = int()?,
            "n_steps" => p.n_steps = int()?,
            "gamma" => p.gamma = real()?,
            "beta" => p.beta = real()?,
            "lambda" => p.lambda = real()?,
            "omega" => p.omega = real()?,
            "pool_size" => p.pool_size = int()?,
            "pool_shrink" => p.pool_shrink = real()?,
            "songs_per_step" => p.songs_per_step = int()?,
            "song_noise_sd" => p.song_noise_sd = real()?,
            "mu_c_sd" => p.mu_c_sd = real()?,
            "sigma_c_sd" => p.sigma_c_sd = real()?,
            "pref_floor" => p.pref_floor = real()?,
            "drift_rate_source" => p.drift_rate_source = real()?,
            "drift_rate_song" => p.drift_rate_song = real()?,
            "similarity_tau" => p.similarity_tau = real()?,
            "discovery_mass" => p.discovery_mass = real()?,
            other => return Err(syntax(lineno, format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Song {
    pub id: usize,
    pub source_id: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Source {
    pub id: usize,
    pub center: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListenerAgent {
    pub id: usize,
    /// Center of the listener's generative model in feature space.
    pub model_center: Point,
    /// Preferred surprisal.
    pub mu_c: f64,
    /// Tolerance bandwidth.
    pub sigma_c: f64,
    /// Index of the cohort the agent was drawn from (0 for single-cohort worlds).
    pub cohort: usize,
}

/// Population segment with its own preference means, used to mix listener types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub mu_c_bar: f64,
    pub sigma_c_bar: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: usize,
    pub songs: Vec<Song>,
    pub sources: Vec<Source>,
    pub agents: Vec<ListenerAgent>,
    /// Row-major `n_agents x n_songs` exposure counts.
    pub exposure: Vec<u32>,
    /// Cumulative plays per song.
    pub plays: Vec<u64>,
    /// Plays during the most recent step.
    pub step_plays: Vec<u64>,
}

impl WorldState {
    pub fn n_songs(&self) -> usize {
        self.songs.len()
    }

    pub fn exposure(&self, agent: usize, song: usize) -> u32 {
        self.exposure[agent * self.songs.len() + song]
    }

    pub fn exposure_row(&self, agent: usize) -> &[u32] {
        let m = self.songs.len();
        &self.exposure[agent * m..(agent + 1) * m]
    }
}

/// Builds the initial world for `config`.
///
/// Draw order: K source centers (x then y, uniform), then one Gaussian
/// offset per song coordinate, then per agent: center x, center y, `mu_c`,
/// `sigma_c`. Out-of-range values are truncated to their bounds.
pub fn init_world<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<WorldState> {
    let cohort = Cohort {
        mu_c_bar: config.mu_c_bar,
        sigma_c_bar: config.sigma_c_bar,
        size: config.params.n_agents,
    };
    init_world_with_cohorts(config, &[cohort], rng)
}

/// Like [`init_world`], but listeners are drawn from consecutive cohorts
/// (agents `0..size_0` from the first, and so on). Cohort sizes must sum to
/// `n_agents`.
pub fn init_world_with_cohorts<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    cohorts: &[Cohort],
    rng: &mut R,
) -> Result<WorldState> {
    config.validate()?;
    let p = &config.params;
    let total: usize = cohorts.iter().map(|c| c.size).sum();
    if total != p.n_agents {
        return Err(Error::InvalidConfig(format!(
            "cohort sizes sum to {total}, expected n_agents = {}",
            p.n_agents
        )));
    }
    let center = Uniform::new(CENTER_MIN, CENTER_MAX).expect("valid center bounds");
    let noise = Normal::new(0.0, p.song_noise_sd)
        .map_err(|e| Error::InvalidConfig(format!("song_noise_sd: {e}")))?;

    let sources: Vec<Source> = (0..config.k_sources)
        .map(|id| Source {
            id,
            center: [center.sample(rng), center.sample(rng)],
        })
        .collect();

    let songs: Vec<Song> = (0..p.n_songs)
        .map(|id| {
            let source_id = id % config.k_sources;
            let c = sources[source_id].center;
            let position = [
                (c[0] + noise.sample(rng)).clamp(FEATURE_MIN, FEATURE_MAX),
                (c[1] + noise.sample(rng)).clamp(FEATURE_MIN, FEATURE_MAX),
            ];
            Song {
                id,
                source_id,
                position,
            }
        })
        .collect();

    let mut agents = Vec::with_capacity(p.n_agents);
    for (cohort_idx, cohort) in cohorts.iter().enumerate() {
        let mu = Normal::new(cohort.mu_c_bar, p.mu_c_sd)
            .map_err(|e| Error::InvalidConfig(format!("mu_c: {e}")))?;
        let sigma = Normal::new(cohort.sigma_c_bar, p.sigma_c_sd)
            .map_err(|e| Error::InvalidConfig(format!("sigma_c: {e}")))?;
        for _ in 0..cohort.size {
            let model_center = [center.sample(rng), center.sample(rng)];
            let mu_c = mu.sample(rng).max(p.pref_floor);
            let sigma_c = sigma.sample(rng).max(p.pref_floor);
            agents.push(ListenerAgent {
                id: agents.len(),
                model_center,
                mu_c,
                sigma_c,
                cohort: cohort_idx,
            });
        }
    }

    Ok(WorldState {
        t: 0,
        songs,
        sources,
        agents,
        exposure: vec![0; p.n_agents * p.n_songs],
        plays: vec![0; p.n_songs],
        step_plays: vec![0; p.n_songs],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn presets_match_table() {
        let s = preset("sanremo").unwrap();
        assert_eq!(
            (
                s.k_sources,
                s.conformity,
                s.alpha,
                s.mu_c_bar,
                s.sigma_c_bar
            ),
            (3, 0.90, 0.95, 1.0, 0.7)
        );
        let b = preset("brazil").unwrap();
        assert_eq!(
            (
                b.k_sources,
                b.conformity,
                b.alpha,
                b.mu_c_bar,
                b.sigma_c_bar
            ),
            (15, 0.02, 0.30, 1.2, 1.2)
        );
        let k = preset("kpop").unwrap();
        assert_eq!(
            (
                k.k_sources,
                k.conformity,
                k.alpha,
                k.mu_c_bar,
                k.sigma_c_bar
            ),
            (8, 0.10, 0.65, 1.1, 1.1)
        );
        let u = preset("uk").unwrap();
        assert_eq!(
            (
                u.k_sources,
                u.conformity,
                u.alpha,
                u.mu_c_bar,
                u.sigma_c_bar
            ),
            (12, 0.30, 0.96, 1.0, 1.0)
        );
        for cfg in all_presets() {
            assert_eq!(cfg.params, SimParams::default());
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn shared_defaults() {
        let p = SimParams::default();
        assert_eq!((p.n_agents, p.n_songs, p.n_steps), (200, 80, 60));
        assert_eq!((p.gamma, p.beta, p.lambda, p.omega), (8.0, 0.3, 0.5, 0.45));
        assert_eq!(
            (p.pool_size, p.pool_shrink, p.songs_per_step),
            (18, 0.45, 5)
        );
        assert_eq!(
            (p.song_noise_sd, p.mu_c_sd, p.sigma_c_sd, p.pref_floor),
            (0.3, 0.2, 0.15, 0.3)
        );
        assert_eq!((p.drift_rate_source, p.drift_rate_song), (0.12, 0.06));
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = preset("atlantis").unwrap_err().to_string();
        for name in PRESET_NAMES {
            assert!(err.contains(name), "{err}");
        }
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = preset("kpop").unwrap();
        let a = init_world(&cfg, &mut rng_from_seed(99)).unwrap();
        let b = init_world(&cfg, &mut rng_from_seed(99)).unwrap();
        assert_eq!(a, b);
        let c = init_world(&cfg, &mut rng_from_seed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn round_robin_sources() {
        let cfg = preset("sanremo").unwrap();
        let w = init_world(&cfg, &mut rng_from_seed(1)).unwrap();
        let mut counts = [0usize; 3];
        for s in &w.songs {
            counts[s.source_id] += 1;
        }
        assert_eq!(counts, [27, 27, 26]);
        for cfg in all_presets() {
            let w = init_world(&cfg, &mut rng_from_seed(5)).unwrap();
            let k = cfg.k_sources;
            let mut counts = vec![0usize; k];
            for s in &w.songs {
                counts[s.source_id] += 1;
            }
            let expected = w.songs.len() as f64 / k as f64;
            assert!(counts.iter().all(|&c| (c as f64 - expected).abs() < 1.0));
        }
    }

    #[test]
    fn sampled_values_respect_bounds() {
        for seed in 0..20 {
            for cfg in all_presets() {
                let w = init_world(&cfg, &mut rng_from_seed(seed)).unwrap();
                assert_eq!(w.t, 0);
                assert!(w.plays.iter().all(|&n| n == 0));
                assert!(w.exposure.iter().all(|&e| e == 0));
                for s in &w.sources {
                    assert!(s
                        .center
                        .iter()
                        .all(|&v| (CENTER_MIN..CENTER_MAX).contains(&v)));
                }
                for s in &w.songs {
                    assert!(s
                        .position
                        .iter()
                        .all(|&v| (FEATURE_MIN..=FEATURE_MAX).contains(&v)));
                }
                for a in &w.agents {
                    assert!(a.mu_c >= 0.3 && a.sigma_c >= 0.3);
                    assert!(a
                        .model_center
                        .iter()
                        .all(|&v| (CENTER_MIN..CENTER_MAX).contains(&v)));
                }
            }
        }
    }

    #[test]
    fn clipping_truncates_to_floor() {
        // Preference means far below the floor: every draw is clipped, none resampled.
        let mut cfg = preset("uk").unwrap();
        cfg.mu_c_bar = 0.0;
        cfg.sigma_c_bar = 0.01;
        cfg.params.mu_c_sd = 0.01;
        cfg.params.sigma_c_sd = 0.01;
        let w = init_world(&cfg, &mut rng_from_seed(3)).unwrap();
        assert!(w.agents.iter().all(|a| a.mu_c == 0.3 && a.sigma_c == 0.3));
    }

    #[test]
    fn cohorts_are_assigned_in_order() {
        let mut cfg = preset("uk").unwrap();
        cfg.params.n_agents = 10;
        let cohorts = [
            Cohort {
                mu_c_bar: 1.1,
                sigma_c_bar: 1.3,
                size: 4,
            },
            Cohort {
                mu_c_bar: 1.0,
                sigma_c_bar: 0.6,
                size: 6,
            },
        ];
        let w = init_world_with_cohorts(&cfg, &cohorts, &mut rng_from_seed(8)).unwrap();
        let labels: Vec<usize> = w.agents.iter().map(|a| a.cohort).collect();
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 1]);
        let bad = [Cohort {
            size: 3,
            ..cohorts[0]
        }];
        assert!(init_world_with_cohorts(&cfg, &bad, &mut rng_from_seed(8)).is_err());
    }

    #[test]
    fn config_file_overrides_preset() {
        let text = "# sweep point\npreset = brazil\nalpha = 0.8\ngamma = 3.5 # cooler\nname = brazil-a08\n";
        let cfg = parse_config(text, "inline").unwrap();
        assert_eq!(cfg.name, "brazil-a08");
        assert_eq!(cfg.k_sources, 15);
        assert_eq!(cfg.alpha, 0.8);
        assert_eq!(cfg.params.gamma, 3.5);
        assert_eq!(cfg.params.beta, 0.3);
    }

    #[test]
    fn config_round_trips_through_text() {
        let mut cfg = preset("kpop").unwrap();
        cfg.params.omega = 0.123_456_789;
        cfg.params.similarity_tau = 0.7;
        let back = parse_config(&cfg.to_config_string(), "rt").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let err = parse_config("alpha = 0.5\nbogus = 1\n", "f.cfg")
            .unwrap_err()
            .to_string();
        assert!(err.contains("f.cfg:2") && err.contains("bogus"), "{err}");
        let err = parse_config("k_sources = three\n", "f.cfg")
            .unwrap_err()
            .to_string();
        assert!(err.contains("f.cfg:1"), "{err}");
        assert!(parse_config("alpha 0.5\n", "f.cfg").is_err());
        assert!(parse_config("alpha = 0.5\nalpha = 0.6\n", "f.cfg").is_err());
        assert!(parse_config("preset = mars\n", "f.cfg").is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let base = preset("uk").unwrap();
        let mut c = base.clone();
        c.conformity = 1.5;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.alpha = -0.1;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.k_sources = 81;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.params.songs_per_step = 11;
        assert!(
            c.validate().is_err(),
            "L(0.96) = 10 cannot hold 11 selections"
        );
        let mut c = base;
        c.params.n_agents = 0;
        assert!(c.validate().is_err());
    }
}
