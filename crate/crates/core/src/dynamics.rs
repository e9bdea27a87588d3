//! Per-step market dynamics: visibility pools, composite utility, softmax
//! selection without replacement, play/exposure updates and songwriter drift.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics;
use crate::model::{distance, ListenerAgent, ScenarioConfig, SimParams, Song, WorldState};
use crate::rng::gumbel_top_k;

/// Songs visible to one listener at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisibilityPool {
    pub agent_id: usize,
    /// Popularity slots first (in rank order), then similarity slots.
    pub song_ids: Vec<usize>,
    pub n_popular_slots: usize,
    pub n_similarity_slots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityBreakdown {
    pub pragmatic: f64,
    pub epistemic: f64,
    pub social: f64,
    pub total: f64,
    pub effective_surprisal: f64,
}

/// Pool length `round(pool_size * (1 - pool_shrink * alpha))`, rounding half
/// away from zero. Fails when the pool could not hold a step's selections.
pub fn pool_length(alpha: f64, params: &SimParams) -> Result<usize> {
    let raw = params.pool_size as f64 * (1.0 - params.pool_shrink * alpha);
    let len = raw.round().max(0.0) as usize;
    if len < params.songs_per_step {
        return Err(Error::InvalidConfig(format!(
            "pool length {len} at alpha = {alpha} is smaller than songs_per_step = {}",
            params.songs_per_step
        )));
    }
    Ok(len)
}

/// Number of pool slots filled from the shared popularity ranking.
pub fn popular_slots(alpha: f64, pool_len: usize) -> usize {
    ((alpha * pool_len as f64).round() as usize).min(pool_len)
}

/// Song ids ordered by cumulative plays, most played first. Ties are broken
/// by a seeded shuffle applied before the (stable) sort.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityRanking(pub Vec<usize>);

impl PopularityRanking {
    pub fn new<R: Rng + ?Sized>(plays: &[u64], rng: &mut R) -> Self {
        let mut ids: Vec<usize> = (0..plays.len()).collect();
        ids.shuffle(rng);
        ids.sort_by(|&a, &b| plays[b].cmp(&plays[a]));
        PopularityRanking(ids)
    }
}

/// Builds one listener's visibility pool.
///
/// The first `round(alpha * L)` slots are the top of `ranking`. The rest are
/// sampled without replacement from the remaining songs with weights
/// `(1 - eps) * exp(-d / tau) / Z + eps / |candidates|`, where `d` is the
/// distance from the listener's model center.
pub fn build_pool<R: Rng + ?Sized>(
    agent: &ListenerAgent,
    world: &WorldState,
    config: &ScenarioConfig,
    ranking: &PopularityRanking,
    rng: &mut R,
) -> Result<VisibilityPool> {
    let params = &config.params;
    let len = pool_length(config.alpha, params)?.min(world.n_songs());
    let n_popular = popular_slots(config.alpha, len);
    let n_similarity = len - n_popular;

    let mut song_ids: Vec<usize> = ranking.0[..n_popular].to_vec();
    let mut in_pool = vec![false; world.n_songs()];
    for &j in &song_ids {
        in_pool[j] = true;
    }

    let candidates: Vec<usize> = (0..world.n_songs()).filter(|&j| !in_pool[j]).collect();
    let kernel: Vec<f64> = candidates
        .iter()
        .map(|&j| {
            let d = distance(&agent.model_center, &world.songs[j].position);
            (-d / params.similarity_tau).exp()
        })
        .collect();
    let z: f64 = kernel.iter().sum();
    let eps = params.discovery_mass;
    let uniform = eps / candidates.len().max(1) as f64;
    let log_weights: Vec<f64> = kernel
        .iter()
        .map(|&k| {
            let similarity = if z > 0.0 { (1.0 - eps) * k / z } else { 0.0 };
            (similarity + uniform).ln()
        })
        .collect();
    song_ids.extend(
        gumbel_top_k(&log_weights, n_similarity, rng)
            .into_iter()
            .map(|c| candidates[c]),
    );

    Ok(VisibilityPool {
        agent_id: agent.id,
        n_popular_slots: n_popular,
        n_similarity_slots: song_ids.len() - n_popular,
        song_ids,
    })
}

/// Distance-based surprisal attenuated by familiarity.
pub fn effective_surprisal(
    agent: &ListenerAgent,
    song: &Song,
    exposure_count: u32,
    params: &SimParams,
) -> f64 {
    surprisal_from_distance(
        distance(&agent.model_center, &song.position),
        exposure_count,
        params,
    )
}

pub fn surprisal_from_distance(dist: f64, exposure_count: u32, params: &SimParams) -> f64 {
    dist / (1.0 + params.lambda * exposure_count as f64)
}

/// Gaussian preference around the sweet spot; 0 at the peak, negative elsewhere.
pub fn pragmatic_value(eff_surprisal: f64, agent: &ListenerAgent) -> f64 {
    gaussian_preference(eff_surprisal, agent.mu_c, agent.sigma_c)
}

pub(crate) fn gaussian_preference(x: f64, mu: f64, sigma: f64) -> f64 {
    let dev = x - mu;
    -(dev * dev) / (2.0 * sigma * sigma)
}

pub fn epistemic_value(exposure_count: u32, params: &SimParams) -> f64 {
    1.0 / (1.0 + params.beta * exposure_count as f64)
}

/// Composite utility of `song` for `agent` against the world's current
/// exposure and play counts.
pub fn utility(
    agent: &ListenerAgent,
    song: &Song,
    world: &WorldState,
    params: &SimParams,
) -> UtilityBreakdown {
    let e = world.exposure(agent.id, song.id);
    let effective_surprisal = effective_surprisal(agent, song, e, params);
    let pragmatic = pragmatic_value(effective_surprisal, agent);
    let epistemic = epistemic_value(e, params);
    let social = params.omega * (world.plays[song.id] as f64).ln_1p();
    UtilityBreakdown {
        pragmatic,
        epistemic,
        social,
        total: params.gamma * (pragmatic + epistemic) + social,
        effective_surprisal,
    }
}

/// Draws `songs_per_step` distinct songs from the pool with probability
/// proportional to `exp(U)`, without replacement.
pub fn select_songs<R: Rng + ?Sized>(
    agent: &ListenerAgent,
    pool: &VisibilityPool,
    world: &WorldState,
    params: &SimParams,
    rng: &mut R,
) -> Vec<usize> {
    let utilities: Vec<f64> = pool
        .song_ids
        .iter()
        .map(|&j| utility(agent, &world.songs[j], world, params).total)
        .collect();
    gumbel_top_k(&utilities, params.songs_per_step, rng)
        .into_iter()
        .map(|i| pool.song_ids[i])
        .collect()
}

pub fn apply_selections(world: &mut WorldState, agent_id: usize, selected: &[usize]) {
    let m = world.n_songs();
    for &j in selected {
        world.exposure[agent_id * m + j] += 1;
        world.plays[j] += 1;
        world.step_plays[j] += 1;
    }
}

/// Play-weighted mean song position, or `None` before any plays.
pub fn popularity_centroid(world: &WorldState) -> Option<[f64; 2]> {
    let total: u64 = world.plays.iter().sum();
    if total == 0 {
        return None;
    }
    let mut c = [0.0; 2];
    for (song, &n) in world.songs.iter().zip(&world.plays) {
        let w = n as f64 / total as f64;
        c[0] += w * song.position[0];
        c[1] += w * song.position[1];
    }
    Some(c)
}

/// Each source independently, with probability `conformity`, moves its
/// center toward the popularity centroid; its songs follow at the song rate.
/// One uniform is drawn per source in id order. Skipped before any plays.
pub fn songwriter_drift<R: Rng + ?Sized>(
    world: &mut WorldState,
    config: &ScenarioConfig,
    rng: &mut R,
) {
    let Some(c) = popularity_centroid(world) else {
        return;
    };
    let params = &config.params;
    let firing: Vec<bool> = (0..world.sources.len())
        .map(|_| rng.random::<f64>() < config.conformity)
        .collect();
    for source in world.sources.iter_mut().filter(|s| firing[s.id]) {
        source.center = toward(source.center, c, params.drift_rate_source);
    }
    for song in world.songs.iter_mut().filter(|s| firing[s.source_id]) {
        song.position = toward(song.position, c, params.drift_rate_song);
    }
}

fn toward(from: [f64; 2], to: [f64; 2], rate: f64) -> [f64; 2] {
    [
        from[0] + rate * (to[0] - from[0]),
        from[1] + rate * (to[1] - from[1]),
    ]
}

/// What happened during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Selected song ids per agent, in agent order.
    pub selections: Vec<Vec<usize>>,
    /// Mean epistemic value of the selections at pre-selection exposure.
    pub mean_epistemic: f64,
}

/// Advances the world by one step.
///
/// Pools and utilities for every agent read the play counts as they stood at
/// the start of the step; the selections are applied as one batch afterwards,
/// followed by songwriter drift. Random draws: the tie-break shuffle of the
/// popularity ranking, then per agent (ascending id) the similarity-slot
/// draws and the selection draws, then one uniform per source for drift.
pub fn step<R: Rng + ?Sized>(
    world: &mut WorldState,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<StepReport> {
    let params = &config.params;
    world.step_plays.iter_mut().for_each(|n| *n = 0);

    let ranking = PopularityRanking::new(&world.plays, rng);
    let mut selections = Vec::with_capacity(world.agents.len());
    for agent in &world.agents {
        let pool = build_pool(agent, world, config, &ranking, rng)?;
        selections.push(select_songs(agent, &pool, world, params, rng));
    }
    let mean_epistemic = metrics::mean_epistemic(world, &selections, params);

    for (agent_id, selected) in selections.iter().enumerate() {
        apply_selections(world, agent_id, selected);
    }
    songwriter_drift(world, config, rng);
    world.t += 1;

    Ok(StepReport {
        selections,
        mean_epistemic,
    })
}

/// Pragmatic value of one song across repeated forced exposures `0..horizon`,
/// starting from feature-space distance `initial_distance`.
pub fn forced_exposure_trajectory(
    initial_distance: f64,
    agent: &ListenerAgent,
    params: &SimParams,
    horizon: usize,
) -> Vec<f64> {
    (0..horizon as u32)
        .map(|e| pragmatic_value(surprisal_from_distance(initial_distance, e, params), agent))
        .collect()
}
