use proptest::prelude::*;
use sbsim_core::hvac::*;

fn arb_zones() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..8).prop_flat_map(|n| {
        (
            proptest::collection::vec(5.0..35.0f64, n),
            proptest::collection::vec(any::<bool>(), n),
        )
    })
}

fn setpoints(n: usize) -> Vec<ZoneSetpoints> {
    vec![
        ZoneSetpoints {
            heating: 20.0,
            cooling: 24.0,
        };
        n
    ]
}

/// Plant whose boiler and chiller never saturate.
fn roomy_plant() -> PlantConfig {
    let mut cfg = PlantConfig::default();
    cfg.boiler.max_gas_power = 1e12;
    cfg.chiller.max_power = 1e12;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn vav_heat_grows_with_supply_air_temp(
        zone in 5.0..35.0f64,
        water in 20.0..90.0f64,
        s1 in 10.0..20.0f64,
        lift in 0.0..10.0f64,
    ) {
        let cfg = VavConfig::default();
        let sp = &setpoints(1)[0];
        let a = vav_update(zone, sp, s1, water, &cfg);
        let b = vav_update(zone, sp, s1 + lift, water, &cfg);
        prop_assert!(b.zone_heat >= a.zone_heat - 1e-9, "{a:?} {b:?}");
    }

    #[test]
    fn zone_heat_grows_with_supply_air_temp_below_saturation(
        (temps, served) in arb_zones(),
        water in 20.0..90.0f64,
        s1 in 10.0..20.0f64,
        lift in 0.0..10.0f64,
        outside in -20.0..40.0f64,
    ) {
        let cfg = roomy_plant();
        let sp = setpoints(temps.len());
        let run = |s| plant_step(&temps, &sp, &served, Setpoints { supply_water_temp: water, supply_air_temp: s }, outside, &cfg).unwrap();
        let (a, b) = (run(s1), run(s1 + lift));
        for z in 0..temps.len() {
            prop_assert!(b.zone_heat[z] >= a.zone_heat[z] - 1e-9, "zone {z}: {} < {}", b.zone_heat[z], a.zone_heat[z]);
        }
    }

    #[test]
    fn powers_stay_within_ratings(
        (temps, served) in arb_zones(),
        water in 20.0..90.0f64,
        supply in 10.0..30.0f64,
        outside in -30.0..45.0f64,
        gas_cap in 0.0..50_000.0f64,
        chill_cap in 0.0..20_000.0f64,
    ) {
        let mut cfg = PlantConfig::default();
        cfg.boiler.max_gas_power = gas_cap;
        cfg.chiller.max_power = chill_cap;
        let out = plant_step(&temps, &setpoints(temps.len()), &served, Setpoints { supply_water_temp: water, supply_air_temp: supply }, outside, &cfg).unwrap();
        let r = cfg.ratings();
        for (p, max) in [
            (out.power.fan_power, r.fan_power),
            (out.power.chiller_power, r.chiller_power),
            (out.power.pump_power, r.pump_power),
            (out.power.gas_power, r.gas_power),
        ] {
            prop_assert!(p >= 0.0 && p <= max, "{p} of {max}");
        }
        prop_assert!(out.unmet_heating >= 0.0 && out.unmet_cooling >= 0.0);
        for z in 0..temps.len() {
            if !served[z] {
                prop_assert_eq!(out.zone_heat[z], 0.0);
                prop_assert_eq!(out.airflow[z], 0.0);
            }
        }
    }

    /// Cold zones fed warm air and hot water receive net heat.
    #[test]
    fn heating_delivers_positive_heat(
        temps in proptest::collection::vec(5.0..19.0f64, 1..8),
        water in 40.0..90.0f64,
        supply in 19.0..30.0f64,
    ) {
        let served = vec![true; temps.len()];
        let out = plant_step(&temps, &setpoints(temps.len()), &served, Setpoints { supply_water_temp: water, supply_air_temp: supply }, 0.0, &roomy_plant()).unwrap();
        prop_assert!(out.zone_heat.iter().sum::<f64>() > 0.0);
        prop_assert!(out.zone_heat.iter().all(|&q| q > 0.0));
        prop_assert!(out.power.gas_power > 0.0);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let sp = Setpoints {
        supply_water_temp: 60.0,
        supply_air_temp: 14.0,
    };
    assert!(plant_step(&[20.0, 21.0], &setpoints(1), &[true, true], sp, 0.0, &PlantConfig::default()).is_err());
}
