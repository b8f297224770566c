mod common;

use deconwave::meyer::{
    analyze, max_support_freq, periodized_basis_fourier, support_sets, synthesize, synthesize_series, AtomKind,
    WaveletCoeffs,
};
use deconwave::series::FourierSeries;
use deconwave::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn coeffs(j1: u32, j2: u32) -> impl Strategy<Value = WaveletCoeffs> {
    let len = WaveletCoeffs::zeros(j1, j2).flatten().len();
    prop::collection::vec(complex(), len).prop_map(move |v| WaveletCoeffs::from_flat(j1, j2, &v).unwrap())
}

fn levels() -> impl Strategy<Value = (u32, u32)> {
    (0u32..5).prop_flat_map(|j1| (Just(j1), j1..7))
}

fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn atom_coefficients_match_reference(j in 0u32..9, kf in 0.0..1.0f64, l in -400i64..400, mother in any::<bool>()) {
        let k = (kf * (1u64 << j) as f64) as u64;
        let kind = if mother { AtomKind::Mother } else { AtomKind::Father };
        let got = periodized_basis_fourier(j, k, l, kind);
        let want = common::atom_fourier(j, k, l, mother);
        prop_assert!((got - want).norm() < 1e-13, "j={j} k={k} l={l}: {got} vs {want}");
    }

    #[test]
    fn analysis_inverts_synthesis(c in levels().prop_flat_map(|(a, b)| coeffs(a, b))) {
        let back = analyze(&synthesize_series(&c), c.j1, c.j2, 0).unwrap();
        prop_assert!(rel(&back.flatten(), &c.flatten()) < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(
        (j1, j2) in levels(),
        raw in prop::collection::vec(complex(), 2 * 120 + 1),
    ) {
        let f = FourierSeries::from_vec(raw).unwrap();
        let once = synthesize_series(&analyze(&f, j1, j2, 0).unwrap());
        let twice = synthesize_series(&analyze(&once.with_band(f.band()), j1, j2, 0).unwrap());
        let diff = (&twice - &once).energy().sqrt();
        prop_assert!(diff <= 1e-12 * once.energy().sqrt().max(1.0));
        // projection never adds energy
        prop_assert!(once.energy() <= f.energy() * (1.0 + 1e-12));
    }

    #[test]
    fn hermitian_coefficients_synthesize_real_signals(c in levels().prop_flat_map(|(a, b)| coeffs(a, b))) {
        // the real part of any coefficient set is a real expansion since atoms are real
        let mut r = c.clone();
        r.alpha.iter_mut().for_each(|x| *x = Complex64::new(x.re, 0.0));
        r.beta.iter_mut().flatten().for_each(|x| *x = Complex64::new(x.re, 0.0));
        let grid = 2 * r.max_freq() as usize + 2;
        prop_assert!(synthesize(&r, grid.next_power_of_two()).is_ok());
    }
}

#[test]
fn gram_matrix_is_identity() {
    let (j1, j2) = (2u32, 6u32);
    let band = max_support_freq(AtomKind::Mother, j2) + 1;
    let mut atoms: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..1u64 << j1 {
        atoms.push((-band..=band).map(|l| common::atom_fourier(j1, k, l, false)).collect());
    }
    for j in j1..=j2 {
        for k in 0..1u64 << j {
            atoms.push((-band..=band).map(|l| common::atom_fourier(j, k, l, true)).collect());
        }
    }
    let mut worst: f64 = 0.0;
    for (a, x) in atoms.iter().enumerate() {
        for (b, y) in atoms.iter().enumerate().skip(a) {
            let ip: Complex64 = x.iter().zip(y).map(|(p, q)| p * q.conj()).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - want).norm());
        }
    }
    assert!(worst < 1e-10, "max Gram deviation {worst:e}");
}

#[test]
fn support_sets_match_reference_windows() {
    for j in 0..8 {
        let s = support_sets(j);
        let reach = max_support_freq(AtomKind::Mother, j) + 3;
        let c: Vec<i64> = (-reach..=reach)
            .filter(|&l| common::atom_fourier(j, 0, l, true).norm() > 1e-15)
            .collect();
        let d: Vec<i64> = (-reach..=reach)
            .filter(|&l| common::atom_fourier(j, 0, l, false).norm() > 1e-15)
            .collect();
        assert_eq!(s.detail_freqs, c, "C_{j}");
        assert_eq!(s.approx_freqs, d, "D_{j}");
    }
    assert_eq!(support_sets(0).detail_freqs, vec![-1, 1]);
}
