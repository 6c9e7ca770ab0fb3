#![allow(dead_code)]

use sbsim_core::building::Building;
use sbsim_core::env::EnvConfig;
use sbsim_core::episode::Episode;
use sbsim_core::policy::ConstantPolicy;
use sbsim_core::rollout::{rollout, RolloutOptions};
use sbsim_core::synth::{synthetic_building, SynthSpec};

/// Two 6x4 rooms on one floor.
pub fn small_building() -> Building {
    let cfg = synthetic_building(&SynthSpec {
        rooms_x: 2,
        rooms_y: 1,
        room_width: 6,
        room_height: 4,
        ..SynthSpec::default()
    });
    Building::compile(cfg).unwrap()
}

/// Supply air 14 °C, supply water 60 °C.
pub fn constant_action(building: &Building) -> Vec<f64> {
    building
        .action_names
        .iter()
        .map(|n| if n.contains("water") { 60.0 } else { 14.0 })
        .collect()
}

pub fn run_episode(building: &Building, steps: usize, seed: u64) -> Episode {
    let config = EnvConfig {
        horizon: steps,
        ..EnvConfig::default()
    };
    let mut policy = ConstantPolicy(constant_action(building));
    let options = RolloutOptions {
        seed,
        ..RolloutOptions::default()
    };
    rollout(building, &config, &mut policy, &options, |_, _| Ok(())).unwrap()
}
