use sbsim_core::env::*;

#[test]
fn histogram_examples() {
    let h = observation_histogram(&[20.5, 20.5, 20.5]);
    assert_eq!(h[8], 1.0);
    assert_eq!(h.iter().sum::<f64>(), 1.0);
    let h = observation_histogram(&[11.0, 31.0]);
    assert_eq!((h[0], h[17]), (0.5, 0.5));
    let all: Vec<f64> = (0..18).map(|k| 12.5 + k as f64).collect();
    assert!(observation_histogram(&all).iter().all(|&b| (b - 1.0 / 18.0).abs() < 1e-15));
}
