use sbsim_core::synth::*;

#[test]
fn synthetic_building_is_valid() {
    let cfg = synthetic_building(&SynthSpec {
        floors: 2,
        ..SynthSpec::default()
    });
    cfg.validate().unwrap();
    assert_eq!(cfg.zones.len(), 12);
    let (w, h) = SynthSpec::default().dims();
    assert_eq!(cfg.floors[0].cells.len(), h);
    assert_eq!(cfg.floors[0].cells[0].len(), w);
}
