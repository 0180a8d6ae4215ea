//! Property tests over random cards, biases and conductances.

mod common;

use bgamp::circuits::{format_number, parse_number};
use bgamp::device::{derivatives, drain_current, BiasTuple, DerivativeSet};
use bgamp::distortion::{combine, ip3_enhancement, series_backgate, series_full, series_open_loop, Mode};
use bgamp::smallsig::{gain_ccs_bg, gain_ccs_ol};
use common::{random_bias, random_device};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn device_and_bias(seed: u64) -> (bgamp::device::DeviceParams, BiasTuple) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_device(&mut rng);
    let [g, d, b] = random_bias(&mut rng, &p);
    let bias = BiasTuple::at(&p, g, d, b).unwrap();
    (p, bias)
}

fn conductances(v: [f64; 9]) -> DerivativeSet {
    let mut s = DerivativeSet::zero(3);
    for k in 0..3 {
        s = s.with(k + 1, 0, 0, v[k]).with(0, k + 1, 0, v[3 + k]).with(0, 0, k + 1, v[6 + k]);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn back_gate_partials_scale_by_chi(seed in any::<u64>()) {
        let (p, bias) = device_and_bias(seed);
        let d = derivatives(&p, &bias, 3).unwrap();
        let chi = p.model.chi_mag;
        for k in 1..=3 {
            let want = chi.powi(k as i32) * d.g_m(k);
            prop_assert!((d.g_mb(k) - want).abs() <= 1e-12 * want.abs() + 1e-300);
        }
    }

    #[test]
    fn complementary_devices_mirror(seed in any::<u64>()) {
        let (n, bias) = device_and_bias(seed);
        let mut p = n.clone();
        p.model.polarity = match n.polarity() {
            bgamp::device::Polarity::N => bgamp::device::Polarity::P,
            bgamp::device::Polarity::P => bgamp::device::Polarity::N,
        };
        let a = drain_current(&n, bias.vgs, bias.vds, bias.vbs).unwrap();
        let b = drain_current(&p, -bias.vgs, -bias.vds, -bias.vbs).unwrap();
        prop_assert_eq!(a, -b);
    }

    #[test]
    fn derivatives_are_smooth(seed in any::<u64>()) {
        let (p, bias) = device_and_bias(seed);
        let near = BiasTuple::at(&p, bias.vgs + 1e-6, bias.vds + 1e-6, bias.vbs + 1e-6).unwrap();
        let (a, b) = (derivatives(&p, &bias, 3).unwrap(), derivatives(&p, &near, 3).unwrap());
        for (i, j, k) in a.indices() {
            let (x, y) = (a.coefficient(i, j, k), b.coefficient(i, j, k));
            // Entries that cross zero are compared against the largest of their order.
            let scale = a.indices().filter(|t| t.0 + t.1 + t.2 == i + j + k)
                .map(|t| a.coefficient(t.0, t.1, t.2).abs()).fold(0.0, f64::max);
            prop_assert!((x - y).abs() <= 0.01 * x.abs().max(1e-6 * scale), "[{i}{j}{k}] {x} {y}");
        }
    }

    #[test]
    fn back_gate_gain_is_bounded(v in prop::array::uniform3(1e-6f64..1e-2), chi in 0.01f64..0.9) {
        let [gm, gds, _] = v;
        let s = [DerivativeSet::linear(gm, gds, chi * gm)];
        let ol = gain_ccs_ol(&s).unwrap();
        let bg = gain_ccs_bg(&s).unwrap();
        prop_assert!(bg.exact.abs() < ol.abs());
        prop_assert!(bg.exact.abs() < bg.asymptote.abs());
        prop_assert!((bg.asymptote + 1.0 / chi).abs() <= 1e-12 / chi);
    }

    #[test]
    fn zero_coupling_series_agree(v in prop::array::uniform9(-1e-2f64..1e-2), gm in 1e-4f64..1e-2, gds in 1e-7f64..1e-4) {
        let mut v = v;
        v[0] = gm;
        v[3] = gds;
        v[6] = 0.0;
        v[7] = 0.0;
        v[8] = 0.0;
        let g = combine(&conductances(v).with(0, 0, 0, 1e-5), &DerivativeSet::zero(3).with(0, 0, 0, -1e-5)).unwrap();
        let (a, b) = (series_open_loop(&g).unwrap(), series_backgate(&g).unwrap());
        prop_assert_eq!((a.a1, a.a2, a.a3), (b.a1, b.a2, b.a3));
        prop_assert_eq!(ip3_enhancement(&g).unwrap(), 1.0);
    }

    #[test]
    fn full_series_linear_term_is_exact_gain(seed in any::<u64>()) {
        let (n, bn) = device_and_bias(seed);
        prop_assume!(n.polarity() == bgamp::device::Polarity::N && bn.ids > 0.0);
        let mut p = n.clone();
        p.model.polarity = bgamp::device::Polarity::P;
        let bp = BiasTuple::at(&p, -bn.vgs, -bn.vds, -bn.vbs).unwrap();
        let (sn, sp) = (derivatives(&n, &bn, 3).unwrap(), derivatives(&p, &bp, 3).unwrap());
        let g = combine(&sn, &sp).unwrap();
        let ol = series_full(&g, Mode::OpenLoop).unwrap();
        let bg = series_full(&g, Mode::BackGate).unwrap();
        let a_ol = gain_ccs_ol(&[sn, sp]).unwrap();
        let a_bg = gain_ccs_bg(&[sn, sp]).unwrap().exact;
        prop_assert!((ol.a1 - a_ol).abs() <= 1e-12 * a_ol.abs());
        prop_assert!((bg.a1 - a_bg).abs() <= 1e-12 * a_bg.abs());
    }

    #[test]
    fn numbers_round_trip(v in prop::num::f64::NORMAL) {
        prop_assert_eq!(parse_number(&format_number(v)), Some(v));
    }
}
