use adaptmark::codec::{compute_threshold, embed_pair, extract_pair, majority_vote, CoeffPair};
use adaptmark::transforms::{dct_8x8, dwt2_two_level, idct_8x8, idwt2_two_level, Plane, Wavelet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRANSFORM_TOL: f64 = 1e-9;

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn energy(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[test]
fn dwt_round_trip_and_energy_on_random_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD17);
    for _ in 0..1000 {
        let data: Vec<f64> = (0..128 * 128).map(|_| rng.random_range(0.0..255.0)).collect();
        let plane = Plane::from_vec(128, 128, data.clone()).unwrap();
        let bands = dwt2_two_level(&plane, Wavelet::Haar).unwrap();
        let back = idwt2_two_level(&bands, Wavelet::Haar).unwrap();
        assert!(rms(&data, back.data()) <= TRANSFORM_TOL);
        let e = energy(&data);
        assert!((bands.energy() - e).abs() / e <= TRANSFORM_TOL);
    }
}

#[test]
fn dct_round_trip_and_energy_on_random_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDC7);
    for _ in 0..1000 {
        let data: Vec<f64> = (0..64).map(|_| rng.random_range(-300.0..300.0)).collect();
        let coeffs = dct_8x8(&data).unwrap();
        assert!(rms(&data, &idct_8x8(&coeffs)) <= TRANSFORM_TOL);
        let e = energy(&data);
        assert!((coeffs.energy() - e).abs() / e <= TRANSFORM_TOL);
    }
}

fn random_pair(rng: &mut ChaCha8Rng) -> CoeffPair {
    let mut draw = || match rng.random_range(0..8) {
        0 => 0.0,
        1 => rng.random_range(-1e-6..1e-6),
        2 => rng.random_range(-1000.0..1000.0),
        _ => rng.random_range(-40.0..40.0),
    };
    let (a, b) = (draw(), draw());
    match rng.random_range(0..10) {
        0 => CoeffPair::new(a, a),
        1 => CoeffPair::new(a, -a),
        _ => CoeffPair::new(a, b),
    }
}

#[test]
fn pair_round_trip_million_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut failures = 0usize;
    for _ in 0..1_000_000 {
        let pair = random_pair(&mut rng);
        let bit: bool = rng.random();
        let sf = rng.random_range(0.0..0.2);
        let floor = if rng.random_range(0..4) == 0 { 0.0 } else { rng.random_range(0.0..4.0) };
        let out = embed_pair(pair, bit, compute_threshold(pair, sf), floor);
        failures += usize::from(extract_pair(out) != bit);
    }
    assert_eq!(failures, 0);
}

#[test]
fn at_most_five_flips_never_change_the_vote() {
    for bit in [false, true] {
        for mask in 0u32..1 << 11 {
            if mask.count_ones() > 5 {
                continue;
            }
            let votes: Vec<bool> = (0..11).map(|i| if mask >> i & 1 == 1 { !bit } else { bit }).collect();
            assert_eq!(majority_vote(&votes).0, bit, "mask {mask:011b}");
        }
    }
    // Six flips are enough to change the outcome.
    let votes: Vec<bool> = (0..11).map(|i| i < 6).collect();
    assert!(majority_vote(&votes).0);
}

proptest! {
    #[test]
    fn embedded_pair_clears_the_floor(
        a in -500.0f64..500.0, b in -500.0f64..500.0, bit: bool, sf in 0.0f64..0.2)
    {
        let pair = CoeffPair::new(a, b);
        let out = embed_pair(pair, bit, compute_threshold(pair, sf), 1.0);
        prop_assert_eq!(extract_pair(out), bit);
        let (fav, other) = if bit { (out.c_uv, out.c_vu) } else { (out.c_vu, out.c_uv) };
        prop_assert!(fav - other >= 2.0 - 1e-9);
    }

    #[test]
    fn dct_is_linear(xs in prop::collection::vec(-100.0f64..100.0, 64),
                     ys in prop::collection::vec(-100.0f64..100.0, 64), k in -3.0f64..3.0)
    {
        let sum: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x + k * y).collect();
        let (a, b, c) = (dct_8x8(&xs).unwrap(), dct_8x8(&ys).unwrap(), dct_8x8(&sum).unwrap());
        for i in 0..64 {
            prop_assert!((a.0[i] + k * b.0[i] - c.0[i]).abs() < 1e-9);
        }
    }
}
