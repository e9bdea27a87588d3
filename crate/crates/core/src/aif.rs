//! Desk-scale active-inference listener: Dirichlet-categorical likelihood
//! learning, surprisal, surprisal-dependent preferences and the
//! expected-free-energy decomposition.
//!
//! This module is a reference and test oracle. The market simulator uses the
//! reduced-form utility in [`crate::dynamics`] and never calls into it.

use serde::Serialize;

use crate::dynamics::gaussian_preference;
use crate::error::{Error, Result};

/// Observation categories used when none are specified.
pub const DEFAULT_OBS_CATEGORIES: usize = 8;
/// Uniform Dirichlet prior concentration.
pub const PRIOR_FLOOR: f64 = 1.0;
/// Preference level below which a whole trajectory counts as never rewarding.
pub const NEVER_REWARDING_THRESHOLD: f64 = -2.0;

const NORMALIZATION_TOL: f64 = 1e-12;

/// Dirichlet concentrations `a[k][j]` (observation category `k`, song `j`)
/// together with the current posterior over songs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletModel {
    n_obs: usize,
    n_songs: usize,
    /// Row-major `n_obs x n_songs`.
    concentrations: Vec<f64>,
    posterior: Vec<f64>,
}

impl DirichletModel {
    /// All concentrations at `prior_floor`, uniform posterior.
    pub fn uniform(n_obs: usize, n_songs: usize, prior_floor: f64) -> Result<Self> {
        if n_obs == 0 || n_songs == 0 {
            return Err(Error::InvalidConfig(
                "model needs at least one category and one song".into(),
            ));
        }
        if !(prior_floor.is_finite() && prior_floor > 0.0) {
            return Err(Error::InvalidConfig("prior floor must be positive".into()));
        }
        Ok(DirichletModel {
            n_obs,
            n_songs,
            concentrations: vec![prior_floor; n_obs * n_songs],
            posterior: vec![1.0 / n_songs as f64; n_songs],
        })
    }

    /// Builds a model from per-song concentration columns and a posterior
    /// (normalized here).
    pub fn from_columns(columns: &[Vec<f64>], posterior: &[f64]) -> Result<Self> {
        let n_songs = columns.len();
        let n_obs = columns.first().map_or(0, Vec::len);
        let mut model = Self::uniform(n_obs.max(1), n_songs.max(1), PRIOR_FLOOR)?;
        if n_obs == 0 || columns.iter().any(|c| c.len() != n_obs) {
            return Err(Error::InvalidConfig("ragged concentration columns".into()));
        }
        for (j, col) in columns.iter().enumerate() {
            for (k, &a) in col.iter().enumerate() {
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "concentration a[{k}][{j}] = {a} must be positive"
                    )));
                }
                model.concentrations[k * n_songs + j] = a;
            }
        }
        model.set_posterior(posterior)?;
        Ok(model)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_songs(&self) -> usize {
        self.n_songs
    }

    pub fn concentration(&self, obs: usize, song: usize) -> f64 {
        self.concentrations[obs * self.n_songs + song]
    }

    pub fn column(&self, song: usize) -> Vec<f64> {
        (0..self.n_obs)
            .map(|k| self.concentration(k, song))
            .collect()
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn set_posterior(&mut self, q: &[f64]) -> Result<()> {
        if q.len() != self.n_songs || q.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidConfig(
                "posterior must be a nonnegative vector over songs".into(),
            ));
        }
        let z: f64 = q.iter().sum();
        if z <= 0.0 {
            return Err(Error::InvalidConfig("posterior has zero mass".into()));
        }
        self.posterior = q.iter().map(|v| v / z).collect();
        debug_assert!((self.posterior.iter().sum::<f64>() - 1.0).abs() < NORMALIZATION_TOL);
        Ok(())
    }

    /// Puts all posterior mass on one song.
    pub fn attend(&mut self, song: usize) {
        self.posterior.iter_mut().for_each(|q| *q = 0.0);
        self.posterior[song] = 1.0;
    }

    /// Multiplies every concentration of one song's column by `factor`.
    pub fn scale_column(&mut self, song: usize, factor: f64) {
        for k in 0..self.n_obs {
            self.concentrations[k * self.n_songs + song] *= factor;
        }
    }

    /// Column-normalized likelihood `A[k][j] = a[k][j] / sum_l a[l][j]`.
    pub fn likelihood(&self) -> Vec<Vec<f64>> {
        let totals: Vec<f64> = (0..self.n_songs)
            .map(|j| (0..self.n_obs).map(|k| self.concentration(k, j)).sum())
            .collect();
        (0..self.n_obs)
            .map(|k| {
                (0..self.n_songs)
                    .map(|j| self.concentration(k, j) / totals[j])
                    .collect()
            })
            .collect()
    }

    /// Conjugate update after hearing `song` and observing category `obs`.
    pub fn observe(&mut self, song: usize, obs: usize) {
        self.concentrations[obs * self.n_songs + song] += 1.0;
    }

    /// Predictive probability of each observation category under the posterior.
    pub fn predictive(&self) -> Vec<f64> {
        let a = self.likelihood();
        a.iter()
            .map(|row| row.iter().zip(&self.posterior).map(|(l, q)| l * q).sum())
            .collect()
    }

    /// `-ln sum_s A[obs][s] Q(s)`, in nats.
    pub fn surprisal(&self, obs: usize) -> f64 {
        -self.predictive()[obs].ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreferenceParams {
    pub mu_c: f64,
    pub sigma_c: f64,
}

/// Gaussian preference over surprisal, peaking at 0 when `surprisal == mu_c`.
pub fn preference(surprisal: f64, prefs: &PreferenceParams) -> f64 {
    gaussian_preference(surprisal, prefs.mu_c, prefs.sigma_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfeBreakdown {
    /// `state_gain + likelihood_gain`.
    pub epistemic: f64,
    /// Expected KL between the posterior over songs after an observation and before it.
    pub state_gain: f64,
    /// Expected KL between the attended song's likelihood column after the
    /// Dirichlet update and before it.
    pub likelihood_gain: f64,
    /// Expected log preference probability.
    pub pragmatic: f64,
    pub total_g: f64,
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// Expected free energy of listening to `song` once.
///
/// Observations are predicted as `Q(o) = sum_s A[o][s] Q(s)` using the
/// model's posterior (concentrate it with [`DirichletModel::attend`] to model
/// full attention on one song). Epistemic value is the expected information
/// gain about both the hidden song identity (posterior `Q(s|o) ∝ A[o][s] Q(s)`)
/// and the attended song's likelihood column (updated by the Dirichlet rule).
/// Pragmatic value is `E_Q(o)[ln P(o)]` with `P(o) ∝ exp(C(I(o)))`
/// normalized over categories. Evaluated at fixed concentrations.
pub fn expected_free_energy(
    model: &DirichletModel,
    prefs: &PreferenceParams,
    song: usize,
) -> EfeBreakdown {
    let a = model.likelihood();
    let q = model.posterior();
    let predictive = model.predictive();

    let column = model.column(song);
    let column_total: f64 = column.iter().sum();
    let prior_col: Vec<f64> = column.iter().map(|c| c / column_total).collect();

    let log_pref: Vec<f64> = {
        let c: Vec<f64> = predictive
            .iter()
            .map(|&p| preference(-p.ln(), prefs))
            .collect();
        let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + c.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        c.iter().map(|v| v - log_z).collect()
    };

    let mut state_gain = 0.0;
    let mut likelihood_gain = 0.0;
    let mut pragmatic = 0.0;
    for o in 0..model.n_obs() {
        let p_o = predictive[o];
        if p_o <= 0.0 {
            continue;
        }
        let post_s: Vec<f64> = a[o].iter().zip(q).map(|(l, qs)| l * qs / p_o).collect();
        state_gain += p_o * kl(&post_s, q);

        let post_col: Vec<f64> = column
            .iter()
            .enumerate()
            .map(|(k, &c)| (c + f64::from(u8::from(k == o))) / (column_total + 1.0))
            .collect();
        likelihood_gain += p_o * kl(&post_col, &prior_col);

        pragmatic += p_o * log_pref[o];
    }
    let state_gain = state_gain.max(0.0);
    let likelihood_gain = likelihood_gain.max(0.0);
    let epistemic = state_gain + likelihood_gain;
    EfeBreakdown {
        epistemic,
        state_gain,
        likelihood_gain,
        pragmatic,
        total_g: -epistemic - pragmatic,
    }
}

/// Qualitative shape of preference over repeated exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trajectory {
    /// Rises to an interior peak, then falls.
    InvertedU,
    /// Never increases.
    MonotonicDecline,
    /// Below the rewardability threshold at every step (and not inverted-U).
    NeverRewarding,
    /// Still climbing at the horizon.
    Rising,
}

impl Trajectory {
    pub fn as_str(self) -> &'static str {
        match self {
            Trajectory::InvertedU => "inverted_u",
            Trajectory::MonotonicDecline => "monotonic_decline",
            Trajectory::NeverRewarding => "never_rewarding",
            Trajectory::Rising => "rising",
        }
    }
}

/// Classifies a preference-value sequence.
pub fn classify_sequence(values: &[f64], threshold: f64) -> Trajectory {
    let (peak, &max) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty sequence");
    let last = values.len() - 1;
    if peak > 0 && peak < last && max > values[0] && max > values[last] {
        Trajectory::InvertedU
    } else if values.iter().all(|&v| v < threshold) {
        Trajectory::NeverRewarding
    } else if values.windows(2).all(|w| w[1] <= w[0]) {
        Trajectory::MonotonicDecline
    } else {
        Trajectory::Rising
    }
}

/// Surprisal of a fixed category on a fixed, fully attended song across
/// `horizon` repeated observations (entry `t` is after `t` observations).
///
/// The song's column starts with the given initial surprisal while keeping
/// every concentration at or above [`PRIOR_FLOOR`].
pub fn repeated_exposure_surprisal(
    initial_surprisal: f64,
    n_obs: usize,
    horizon: usize,
) -> Result<Vec<f64>> {
    let mut model = model_with_initial_surprisal(initial_surprisal, n_obs)?;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        out.push(model.surprisal(0));
        model.observe(0, 0);
    }
    Ok(out)
}

/// One-song model whose category 0 has surprisal `initial_surprisal`.
pub fn model_with_initial_surprisal(
    initial_surprisal: f64,
    n_obs: usize,
) -> Result<DirichletModel> {
    if n_obs < 2 {
        return Err(Error::InvalidConfig("need at least two categories".into()));
    }
    if !(initial_surprisal.is_finite() && initial_surprisal > 0.0) {
        return Err(Error::InvalidConfig(
            "initial surprisal must be positive and finite".into(),
        ));
    }
    let p0 = (-initial_surprisal).exp();
    let rest = (n_obs - 1) as f64;
    let column: Vec<f64> = if p0 <= 1.0 / n_obs as f64 {
        let other = PRIOR_FLOOR * (1.0 / p0 - 1.0) / rest;
        std::iter::once(PRIOR_FLOOR)
            .chain(std::iter::repeat_n(other, n_obs - 1))
            .collect()
    } else {
        let target = PRIOR_FLOOR * rest * p0 / (1.0 - p0);
        std::iter::once(target)
            .chain(std::iter::repeat_n(PRIOR_FLOOR, n_obs - 1))
            .collect()
    };
    DirichletModel::from_columns(&[column], &[1.0])
}

/// Simulates repeated exposure from `initial_surprisal` and classifies the
/// resulting preference sequence.
pub fn classify_trajectory(
    initial_surprisal: f64,
    prefs: &PreferenceParams,
    horizon: usize,
) -> Result<Trajectory> {
    if horizon < 3 {
        return Err(Error::InvalidConfig("horizon must be at least 3".into()));
    }
    let values: Vec<f64> =
        repeated_exposure_surprisal(initial_surprisal, DEFAULT_OBS_CATEGORIES, horizon)?
            .into_iter()
            .map(|i| preference(i, prefs))
            .collect();
    Ok(classify_sequence(&values, NEVER_REWARDING_THRESHOLD))
}
