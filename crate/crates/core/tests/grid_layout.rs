use sbsim_core::grid::*;

fn small_floor() -> FloorplanGrid {
    FloorplanGrid::from_codes(
        &[
            vec![0, 0, 0, 0, 0, 0],
            vec![0, 3, 3, 3, 3, 0],
            vec![0, 3, 1, 1, 3, 0],
            vec![0, 3, 1, 1, 3, 0],
            vec![0, 3, 3, 3, 3, 0],
            vec![0, 0, 0, 0, 0, 0],
        ],
        1.0,
        3.0,
    )
    .unwrap()
}

#[test]
fn overlapping_zones_are_rejected() {
    let floors = vec![small_floor()];
    let zones = ZoneMap {
        zones: vec![
            Zone { id: "a".into(), floor: 0, cells: vec![[2, 2], [3, 2]], devices: vec![] },
            Zone { id: "b".into(), floor: 0, cells: vec![[3, 2]], devices: vec![] },
        ],
    };
    assert!(zones.validate(&floors).is_err());
}

#[test]
fn zone_on_wall_is_rejected() {
    let floors = vec![small_floor()];
    let zones = ZoneMap {
        zones: vec![Zone { id: "a".into(), floor: 0, cells: vec![[1, 1]], devices: vec![] }],
    };
    assert!(zones.validate(&floors).is_err());
}

#[test]
fn zone_area() {
    let z = Zone { id: "a".into(), floor: 0, cells: vec![[2, 2], [3, 2], [2, 3]], devices: vec![] };
    assert_eq!(z.area(0.5), 0.75);
}

#[test]
fn duplicate_action_names_rejected() {
    let floors = vec![small_floor()];
    let dev = Device {
        id: "boiler".into(),
        device_type: DeviceType::Boiler,
        floor: 0,
        diffusers: vec![],
        observable_fields: vec![],
        action_fields: vec!["supply_water_setpoint".into(), "supply_water_setpoint".into()],
    };
    let layout = DeviceLayout { devices: vec![dev] };
    assert!(layout.validate(&floors).is_err());
}

#[test]
fn diffuser_on_wall_rejected() {
    let floors = vec![small_floor()];
    let dev = Device {
        id: "vav".into(),
        device_type: DeviceType::Vav,
        floor: 0,
        diffusers: vec![[1, 2]],
        observable_fields: vec![],
        action_fields: vec![],
    };
    assert!(DeviceLayout { devices: vec![dev] }.validate(&floors).is_err());
}
