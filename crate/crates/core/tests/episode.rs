mod common;

use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;
use sbsim_core::env::observation_histogram;
use sbsim_core::episode::*;
use sbsim_core::policy::{Policy, ReplayPolicy};
use sbsim_core::SimError;

fn special_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        1 => prop::num::f64::INFINITE,
        1 => (-50.0..50.0f64),
    ]
}

fn same_bits(a: &Matrix, b: &Matrix) -> bool {
    a.names == b.names
        && a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

/// An engine episode's shape with every matrix entry and timestamp redrawn.
fn randomized(steps: usize, values: &[f64], offsets: &[i64]) -> Episode {
    let building = common::small_building();
    let mut ep = common::run_episode(&building, steps, 0);
    let mut k = 0;
    let mut next = || {
        k += 1;
        values[k % values.len()]
    };
    for m in [
        &mut ep.observations,
        &mut ep.actions,
        &mut ep.reward_info,
        &mut ep.reward_response,
    ] {
        for row in &mut m.rows {
            row.iter_mut().for_each(|v| *v = next());
        }
    }
    let base = Utc.with_ymd_and_hms(2023, 3, 1, 0, 0, 0).unwrap();
    for (t, ts) in ep.timestamps.iter_mut().enumerate() {
        *ts = base + Duration::milliseconds(offsets[t % offsets.len()] + t as i64);
    }
    ep
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn save_then_load_is_bit_exact(
        steps in 1usize..12,
        values in proptest::collection::vec(special_f64(), 1..200),
        offsets in proptest::collection::vec(0i64..10_000_000_000, 1..12),
    ) {
        let ep = randomized(steps, &values, &offsets);
        let dir = tempfile::tempdir().unwrap();
        ep.save(dir.path()).unwrap();
        let back = Episode::load(dir.path()).unwrap();
        prop_assert_eq!(&back.metadata, &ep.metadata);
        prop_assert_eq!(&back.timestamps, &ep.timestamps);
        prop_assert!(same_bits(&back.observations, &ep.observations));
        prop_assert!(same_bits(&back.actions, &ep.actions));
        prop_assert!(same_bits(&back.reward_info, &ep.reward_info));
        prop_assert!(same_bits(&back.reward_response, &ep.reward_response));
    }

    #[test]
    fn histogram_sums_to_one_in_any_order(
        temps in proptest::collection::vec(0.0..45.0f64, 1..40),
        rot in 0usize..40,
    ) {
        let h = observation_histogram(&temps);
        prop_assert!((h.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let mut shuffled = temps.clone();
        shuffled.rotate_left(rot % temps.len());
        shuffled.reverse();
        prop_assert_eq!(h, observation_histogram(&shuffled));
    }
}

#[test]
fn stored_rewards_recompute() {
    let building = common::small_building();
    for seed in 0..3 {
        let ep = common::run_episode(&building, 96, seed);
        let model = &ep.metadata.reward;
        for t in 0..ep.len() {
            let (info, _) = ep.reward_info_at(t).unwrap();
            let r = encode_reward_response(&model.evaluate(&info).unwrap());
            for (a, b) in r.iter().zip(&ep.reward_response.rows[t]) {
                assert!((a - b).abs() <= 1e-9, "step {t}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn reward_info_round_trips_through_its_encoding() {
    let building = common::small_building();
    let ep = common::run_episode(&building, 4, 1);
    let (info, outside) = ep.reward_info_at(3).unwrap();
    assert_eq!(encode_reward_info(&info, outside), ep.reward_info.rows[3]);
    assert!(decode_reward_info(&ep.reward_info.rows[3][1..], ep.zone_count()).is_err());
}

#[test]
fn replay_policy_emits_recorded_actions() {
    let building = common::small_building();
    let ep = common::run_episode(&building, 10, 2);
    let mut policy = ReplayPolicy::new(&ep, &building.action_names).unwrap();
    for t in 0..ep.len() {
        assert_eq!(policy.action(t, ep.timestamps[t]).unwrap(), ep.actions.rows[t]);
    }
    assert!(policy.action(ep.len(), ep.timestamps[0]).is_err());
    assert!(ReplayPolicy::new(&ep, &["nope/field".to_string()]).is_err());
}

#[test]
fn truncated_matrix_is_a_parse_error() {
    let building = common::small_building();
    let ep = common::run_episode(&building, 5, 0);
    let dir = tempfile::tempdir().unwrap();
    ep.save(dir.path()).unwrap();
    let path = dir.path().join("actions.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 7]).unwrap();
    let err = Episode::load(dir.path()).unwrap_err();
    assert!(matches!(err, SimError::Format(_)), "{err}");
    assert!(err.to_string().contains("actions.csv"), "{err}");
}

#[test]
fn row_count_mismatch_is_rejected() {
    let building = common::small_building();
    let mut ep = common::run_episode(&building, 5, 0);
    ep.actions.rows.pop();
    assert!(matches!(ep.validate(), Err(SimError::Format(_))));
    let dir = tempfile::tempdir().unwrap();
    assert!(ep.save(dir.path()).is_err());

    // same mismatch arriving from disk
    let ep = common::run_episode(&building, 5, 0);
    ep.save(dir.path()).unwrap();
    let path = dir.path().join("observations.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let kept: Vec<&str> = text.lines().take(5).collect();
    std::fs::write(&path, kept.join("\n") + "\n").unwrap();
    assert!(matches!(Episode::load(dir.path()), Err(SimError::Format(_))));
}

#[test]
fn width_mismatch_and_missing_matrix_are_rejected() {
    let building = common::small_building();
    let mut ep = common::run_episode(&building, 3, 0);
    ep.observations.rows[1].push(0.0);
    assert!(ep.validate().is_err());

    let ep = common::run_episode(&building, 3, 0);
    let dir = tempfile::tempdir().unwrap();
    ep.save(dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("reward_info.csv")).unwrap();
    let err = Episode::load(dir.path()).unwrap_err();
    assert!(err.to_string().contains("reward_info.csv"), "{err}");
}

#[test]
fn other_versions_are_rejected() {
    let building = common::small_building();
    let ep = common::run_episode(&building, 3, 0);
    let dir = tempfile::tempdir().unwrap();
    ep.save(dir.path()).unwrap();
    let path = dir.path().join("metadata.json");
    let mut meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    meta["version"] = serde_json::json!(EPISODE_VERSION + 1);
    std::fs::write(&path, meta.to_string()).unwrap();
    let err = Episode::load(dir.path()).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
}

#[test]
fn split_parts_cover_the_episode() {
    let building = common::small_building();
    let ep = common::run_episode(&building, 20, 0);
    let (a, b) = ep.split(8).unwrap();
    assert_eq!((a.len(), b.len()), (8, 12));
    assert_eq!(b.metadata.initial_zone_temps, ep.zone_temps()[7]);
    assert_eq!(b.metadata.env.start, ep.timestamps[7]);
    assert_eq!(b.timestamps[0], ep.timestamps[8]);
    assert!(ep.split(0).is_err());
    assert!(ep.split(20).is_err());
}
