//! Running a policy through an environment into an episode archive.

use crate::building::Building;
use crate::config::{FloorConfig, TariffSchedule};
use crate::env::{Env, EnvConfig};
use crate::episode::{encode_reward_info, encode_reward_response, Episode, EpisodeMetadata, EPISODE_VERSION};
use crate::error::{Result, SimError};
use crate::policy::Policy;

#[derive(Debug, Clone, Default)]
pub struct RolloutOptions {
    pub seed: u64,
    /// Per-zone initial temperatures; the env default when `None`.
    pub initial_zone_temps: Option<Vec<f64>>,
    /// Per-step outside temperatures replacing the weather model.
    pub outside_temps: Option<Vec<f64>>,
    pub tariff: Option<TariffSchedule>,
}

/// Runs `config.horizon` steps. `on_step(t, env)` is called after each
/// committed step.
pub fn rollout<F>(
    building: &Building,
    config: &EnvConfig,
    policy: &mut dyn Policy,
    options: &RolloutOptions,
    mut on_step: F,
) -> Result<Episode>
where
    F: FnMut(usize, &Env) -> Result<()>,
{
    let mut env = Env::new(building, config.clone())?;
    if let Some(t) = &options.tariff {
        env = env.with_tariff(t.clone());
    }
    let initial_zone_temps = options
        .initial_zone_temps
        .clone()
        .unwrap_or_else(|| vec![config.initial_temp; building.zone_count()]);
    let first = env.reset(options.seed, Some(&initial_zone_temps))?;
    if let Some(w) = &options.outside_temps {
        if w.len() < config.horizon {
            return Err(SimError::Config(format!(
                "{} outside temperatures for {} steps",
                w.len(),
                config.horizon
            )));
        }
    }
    let metadata = EpisodeMetadata {
        version: EPISODE_VERSION,
        building: building.config.name.clone(),
        seed: options.seed,
        env: config.clone(),
        zones: building.config.zones.clone(),
        devices: building.config.devices.clone(),
        floorplans: building.grids.iter().map(FloorConfig::from_grid).collect(),
        initial_zone_temps,
        initial_observation: first.values,
        reward: building.reward_model.clone(),
    };
    let mut episode = Episode::new(
        metadata,
        building.observation_names.clone(),
        building.action_names.clone(),
    );
    for t in 0..config.horizon {
        let action = policy.action(t, env.now())?;
        let result = match &options.outside_temps {
            Some(w) => env.step_with_weather(&action, w[t])?,
            None => env.step(&action)?,
        };
        episode.timestamps.push(result.observation.timestamp);
        episode.observations.rows.push(result.observation.values);
        episode.actions.rows.push(action);
        episode
            .reward_info
            .rows
            .push(encode_reward_info(&result.info.reward_info, result.info.outside_temp));
        episode
            .reward_response
            .rows
            .push(encode_reward_response(&result.info.response));
        on_step(t, &env)?;
    }
    Ok(episode)
}
