use chrono::Utc;
use sbsim_core::config::*;
use chrono::TimeZone;

#[test]
fn schedule_switches_at_boundary() {
    let s = SetpointSchedule::default();
    let before = Utc.with_ymd_and_hms(2024, 3, 4, 5, 55, 0).unwrap();
    let at = Utc.with_ymd_and_hms(2024, 3, 4, 6, 0, 0).unwrap();
    assert_eq!(s.at(before, true), s.unoccupied);
    assert_eq!(s.at(at, true), s.occupied);
    assert_eq!(s.at(at, false), s.unoccupied);
}

#[test]
fn sinusoid_peaks_at_peak_hour() {
    let w = Weather::default();
    let peak = Utc.with_ymd_and_hms(2024, 3, 4, 15, 0, 0).unwrap();
    assert!((w.outside_temp(peak) - 16.0).abs() < 1e-12);
}

#[test]
fn tariff_series_holds_values() {
    let t0 = Utc.with_ymd_and_hms(2024, 3, 4, 0, 0, 0).unwrap();
    let t1 = Utc.with_ymd_and_hms(2024, 3, 4, 12, 0, 0).unwrap();
    let peak = Tariff {
        electricity_price: 0.3,
        ..Tariff::default()
    };
    let s = TariffSchedule {
        base: Tariff::default(),
        series: vec![(t0, Tariff::default()), (t1, peak)],
    };
    assert_eq!(s.at(t1 + chrono::Duration::minutes(5)), peak);
    assert_eq!(s.at(t1 - chrono::Duration::minutes(5)), Tariff::default());
}

#[test]
fn missing_version_is_rejected() {
    let err = BuildingConfig::from_json("{\"floors\": []}").unwrap_err();
    assert!(err.to_string().contains("version"));
}
