use sbsim_core::field::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn shift_left_on_2x2() {
    let f = Field::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let s = f.shift(Direction::Left);
    assert_eq!(s, Field::from_rows(&[vec![2.0, 0.0], vec![4.0, 0.0]]).unwrap());
}

#[test]
fn shift_then_opposite_restores_interior() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..36).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let f = Field::from_vec(6, 6, data).unwrap();
    for d in Direction::ALL {
        let back = f.shift(d).shift(d.opposite());
        for y in 1..5 {
            for x in 1..5 {
                assert_eq!(back.get(x, y), f.get(x, y));
            }
        }
    }
}

#[test]
fn shift_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..1.0)).collect();
    let f = Field::from_vec(8, 8, data).unwrap();
    for d in Direction::ALL {
        let s = f.shift(d);
        let (dx, dy) = d.offset();
        for y in 0..8i64 {
            for x in 0..8i64 {
                // content moved by (dx, dy): out[x, y] = in[x - dx, y - dy]
                let sx = x - dx as i64;
                let sy = y - dy as i64;
                let expected = if (0..8).contains(&sx) && (0..8).contains(&sy) {
                    f.get(sx as usize, sy as usize)
                } else {
                    0.0
                };
                assert_eq!(s.get(x as usize, y as usize), expected, "{d:?} at {x},{y}");
            }
        }
    }
}

#[test]
fn csv_snapshot_has_six_decimals() {
    let f = Field::from_rows(&[vec![1.0, -2.5], vec![1.0 / 3.0, 20.0]]).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "1.000000,-2.500000\n0.333333,20.000000\n"
    );
}

#[test]
fn mirror_x_twice_is_identity() {
    let f = Field::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    assert_eq!(f.mirror_x().get(0, 1), 6.0);
    assert_eq!(f.mirror_x().mirror_x(), f);
}
