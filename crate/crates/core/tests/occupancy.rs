use chrono::{NaiveDate, NaiveDateTime};
use sbsim_core::occupancy::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn at(date: &str, h: u32, m: u32) -> NaiveDateTime {
    NaiveDate::parse_from_str(date, "%Y-%m-%d")
        .unwrap()
        .and_hms_opt(h, m, 0)
        .unwrap()
}

#[test]
fn holiday_is_empty() {
    let model = OccupancyModel {
        holidays: vec![NaiveDate::from_ymd_opt(2024, 7, 4).unwrap()],
        ..OccupancyModel::default()
    };
    let mut sim = OccupancySim::new(model, &[10]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for m in (0..24 * 60).step_by(5) {
        let k = sim.step(at("2024-07-04", m / 60, m % 60), 300.0, &mut rng);
        assert_eq!(k, vec![0.0]);
    }
}

#[test]
fn two_step_window_arrives_at_first_step() {
    // a 10-minute window at 5-minute steps has n = 2, so p = 1
    let model = OccupancyModel {
        arrival: [8.0, 8.0 + 10.0 / 60.0],
        ..OccupancyModel::default()
    };
    let mut sim = OccupancySim::new(model, &[7]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    sim.step(at("2024-07-03", 7, 55), 300.0, &mut rng);
    let k = sim.step(at("2024-07-03", 8, 0), 300.0, &mut rng);
    assert_eq!(k, vec![3.5]);
    assert!(sim.states(0).iter().all(|&s| s == OccupantState::Present));
}

#[test]
fn everyone_leaves_by_window_end() {
    let mut sim = OccupancySim::new(OccupancyModel::default(), &[50]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut last = Vec::new();
    for m in (0..24 * 60).step_by(5) {
        last = sim.step(at("2024-07-03", m / 60, m % 60), 300.0, &mut rng);
        if m == 12 * 60 {
            assert_eq!(last, vec![50.0]);
        }
    }
    assert_eq!(last, vec![0.0]);
}

#[test]
fn overlapping_windows_rejected() {
    let model = OccupancyModel {
        arrival: [8.0, 18.0],
        departure: [17.0, 19.0],
        ..OccupancyModel::default()
    };
    assert!(OccupancySim::new(model, &[1]).is_err());
}

/// Mean arrival time over many single-occupant days, taking the middle of
/// the step in which the occupant turns up.
fn mean_arrival_hours(trials: usize, seed: u64) -> f64 {
    let model = OccupancyModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let mut sim = OccupancySim::new(model.clone(), &[1]).unwrap();
        let mut arrival = None;
        for m in (0..24 * 60).step_by(5) {
            sim.step(at("2024-07-03", m / 60, m % 60), 300.0, &mut rng);
            if arrival.is_none() && sim.states(0)[0] != OccupantState::NotArrived {
                arrival = Some((m as f64 + 2.5) / 60.0);
            }
        }
        total += arrival.expect("every occupant arrives");
    }
    total / trials as f64
}

#[test]
fn monte_carlo_arrival_is_near_window_midpoint() {
    let mean = mean_arrival_hours(10_000, 4);
    assert!(mean > 8.0 && mean < 9.0, "{mean}");
    assert!((mean - 8.5).abs() / 8.5 <= 0.02, "{mean}");
}

#[test]
fn weekends_stay_empty() {
    let mut sim = OccupancySim::new(OccupancyModel::default(), &[5, 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for day in ["2024-07-06", "2024-07-07"] {
        for m in (0..24 * 60).step_by(5) {
            assert_eq!(sim.step(at(day, m / 60, m % 60), 300.0, &mut rng), vec![0.0, 0.0]);
        }
    }
}

#[test]
fn same_seed_same_headcounts() {
    let run = |seed| {
        let mut sim = OccupancySim::new(OccupancyModel::default(), &[20]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..24 * 12)
            .map(|s| sim.step(at("2024-07-03", s / 12, (s % 12) * 5), 300.0, &mut rng)[0])
            .collect::<Vec<_>>()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

mod seeds {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn headcount_never_exceeds_capacity(seed in any::<u64>(), cap in proptest::collection::vec(0u32..30, 1..5)) {
            let mut sim = OccupancySim::new(OccupancyModel::default(), &cap).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for day in ["2024-07-03", "2024-07-04", "2024-07-06"] {
                for s in 0..24 * 12 {
                    let k = sim.step(at(day, s / 12, (s % 12) * 5), 300.0, &mut rng);
                    for (z, v) in k.iter().enumerate() {
                        prop_assert!(*v >= 0.0 && *v <= cap[z] as f64);
                    }
                }
            }
        }
    }
}
