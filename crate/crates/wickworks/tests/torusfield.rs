use proptest::prelude::*;
use wickworks::mc::run_batched;
use wickworks::torusfield::{
    c_variance, export_field, green_truncated, sample_field, sample_with_rng,
    wick_integral_variance, ModeLattice, SpectralProfile, Synthesis,
};

#[test]
fn c_variance_is_green_at_origin() {
    for d in 1..=3 {
        for n in [1, 3, 6] {
            let c = c_variance(d, n).unwrap();
            let g = green_truncated(&vec![0.0; d], d, n).unwrap();
            assert!((c - g).abs() < 1e-12 * c, "d={d} n={n}");
        }
    }
}

#[test]
fn c_variance_increases() {
    for d in 1..=3 {
        let v: Vec<f64> = (0..6).map(|n| c_variance(d, n).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn sample_variance_tracks_c_n() {
    // E[φ_N(0)²] = C_N for the GFF
    let lat = ModeLattice::new(1, 8).unwrap();
    let c = c_variance(1, 8).unwrap();
    let s = run_batched(40_000, 11, |rng| {
        let f = sample_with_rng(SpectralProfile::Gff, &lat, rng);
        f.eval(&[0.0]).powi(2)
    });
    assert!((s.mean - c).abs() < 4.0 * s.stderr(), "{} vs {c}", s.mean);
}

#[test]
fn wick_quartic_variance_matches_sampling() {
    let (d, n) = (1, 4);
    let lat = ModeLattice::new(d, n).unwrap();
    let m = 32;
    let exact = wick_integral_variance(d, n, 2).unwrap();
    let s = run_batched(40_000, 5, |rng| {
        let f = sample_with_rng(SpectralProfile::Gff, &lat, rng);
        let v = wickworks::torusfield::wick_power_field(&f, 2, m).unwrap();
        let i = v.iter().sum::<f64>() / v.len() as f64;
        i * i
    });
    assert!(
        (s.mean - exact).abs() < 4.0 * s.stderr(),
        "{} vs {exact}",
        s.mean
    );
}

#[test]
fn export_is_byte_identical() {
    let lat = ModeLattice::new(2, 3).unwrap();
    let run = || {
        let s = sample_field(SpectralProfile::White, &lat, 9).unwrap();
        let mut buf = Vec::new();
        export_field(&s, 8, &mut buf).unwrap();
        buf
    };
    let a = run();
    assert_eq!(a, run());
    let head = String::from_utf8(a).unwrap();
    assert!(head
        .lines()
        .next()
        .unwrap()
        .contains("\"profile\":\"white\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesis_routes_agree(d in 1usize..=2, n in 1usize..5, seed in 0u64..1000) {
        let lat = ModeLattice::new(d, n).unwrap();
        let s = sample_field(SpectralProfile::Gff, &lat, seed).unwrap();
        let m = 4 * n + 1;
        let a = s.grid_values(m, Synthesis::Direct);
        let b = s.grid_values(m, Synthesis::Fft);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn green_is_even(x in 0.0f64..1.0, y in 0.0f64..1.0, n in 1usize..6) {
        let a = green_truncated(&[x, y], 2, n).unwrap();
        let b = green_truncated(&[1.0 - x, 1.0 - y], 2, n).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }
}
