use bihpf_core::acm::{addon_forward, compute_wc, CompressionMapParams};
use bihpf_core::bihpf::{freq_hpf, pixel_hpf, FreqHpfSpec, LogFilterSpec};
use bihpf_core::evalkit::average_precision;
use bihpf_core::numerics::{
    fft2d, fftshift, ifft2d, ifftshift, magnitude, GrayImage, MagnitudeMap, Planes, RealMap,
};
use bihpf_core::synthlab::zero_insert_upsample;
use bihpf_core::Label;
use proptest::prelude::*;

fn image(max: usize) -> impl Strategy<Value = GrayImage> {
    (1..=max, 1..=max).prop_flat_map(|(h, w)| {
        prop::collection::vec(-1.0f64..1.0, h * w)
            .prop_map(move |d| GrayImage::new(h, w, d).unwrap())
    })
}

fn centered_map(max: usize) -> impl Strategy<Value = MagnitudeMap> {
    (1..=max, 1..=max).prop_flat_map(|(h, w)| {
        prop::collection::vec(0.0f64..10.0, h * w)
            .prop_map(move |d| MagnitudeMap::new(h, w, d, true).unwrap())
    })
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(s, mut fake)| {
                // at least one fake so AP is defined
                fake[0] = true;
                let labels = fake
                    .into_iter()
                    .map(|f| if f { Label::Fake } else { Label::Real })
                    .collect();
                (s, labels)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_pair_is_identity(h in 1usize..20, w in 1usize..20) {
        let m = RealMap {
            height: h,
            width: w,
            data: (0..h * w).map(|i| i as f64).collect(),
            centered: false,
        };
        prop_assert_eq!(ifftshift(&fftshift(&m)).data, m.data.clone());
        prop_assert_eq!(fftshift(&ifftshift(&m)).data, m.data);
    }

    #[test]
    fn fft_round_trip(img in image(12)) {
        let back = ifft2d(&fft2d(&img).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ap_invariant_under_monotone_transform((scores, labels) in scored_labels()) {
        let base = average_precision(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).tanh() * 7.0 + 2.0).collect();
        let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
        prop_assert!((average_precision(&squashed, &labels).unwrap() - base).abs() < 1e-12);
        prop_assert!((average_precision(&cubed, &labels).unwrap() - base).abs() < 1e-12);
        prop_assert!(base > 0.0 && base <= 1.0);
    }

    #[test]
    fn freq_filters_partition_and_are_idempotent(mag in centered_map(24), cutoff in 0.0f64..20.0) {
        let hp = FreqHpfSpec::high_pass(cutoff).unwrap();
        let lp = FreqHpfSpec::low_pass(cutoff).unwrap();
        let h = freq_hpf(&mag, &hp).unwrap();
        let l = freq_hpf(&mag, &lp).unwrap();
        for ((a, b), m) in h.as_slice().iter().zip(l.as_slice()).zip(mag.as_slice()) {
            prop_assert_eq!(a + b, *m);
            prop_assert!(*a == 0.0 || *b == 0.0);
        }
        prop_assert_eq!(freq_hpf(&h, &hp).unwrap(), h);
        prop_assert_eq!(freq_hpf(&l, &lp).unwrap(), l);
    }

    #[test]
    fn pixel_hpf_is_homogeneous(mag in centered_map(16), k in 0.0f64..5.0, sigma in 0.01f64..0.5) {
        let spec = LogFilterSpec::new(sigma).unwrap();
        let scaled = MagnitudeMap::new(
            mag.height(),
            mag.width(),
            mag.as_slice().iter().map(|v| v * k).collect(),
            true,
        )
        .unwrap();
        let a = pixel_hpf(&scaled, &spec).unwrap();
        let b = pixel_hpf(&mag, &spec).unwrap();
        let peak = b.as_slice().iter().fold(1e-12f64, |m, v| m.max(*v));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - k * y).abs() <= 1e-9 * (1.0 + k) * peak);
        }
    }

    // |T(a1 - a2)| <= 36 keeps the sigmoid away from float64 rounding to 0 or 1.
    #[test]
    fn wc_is_strictly_inside_unit_interval(
        a in prop::collection::vec(-6.0f64..6.0, 16),
        b in prop::collection::vec(-6.0f64..6.0, 16),
        t in 0.1f64..3.0,
    ) {
        let p = CompressionMapParams::from_channels(4, 4, a.clone(), b.clone(), t).unwrap();
        let wc = compute_wc(&p);
        for ((v, x), y) in wc.values().iter().zip(&a).zip(&b) {
            prop_assert!(*v > 0.0 && *v < 1.0, "{v}");
            if x == y {
                prop_assert_eq!(*v, 0.5);
            } else {
                prop_assert!(*v != 0.5);
            }
        }
    }

    #[test]
    fn wc_saturates_within_closed_interval(
        a in prop::collection::vec(-1e3f64..1e3, 16),
        t in 0.1f64..100.0,
    ) {
        let p = CompressionMapParams::from_channels(4, 4, a, vec![0.0; 16], t).unwrap();
        for v in compute_wc(&p).values() {
            prop_assert!((0.0..=1.0).contains(v) && v.is_finite());
        }
    }

    #[test]
    fn addon_is_linear(
        x in prop::collection::vec(-1.0f64..1.0, 48),
        y in prop::collection::vec(-1.0f64..1.0, 48),
        a1 in prop::collection::vec(-3.0f64..3.0, 48),
        ca in -2.0f64..2.0,
        cb in -2.0f64..2.0,
    ) {
        let p = CompressionMapParams::from_channels(6, 8, a1, vec![0.0; 48], 1.0).unwrap();
        let px = Planes::new(1, 6, 8, x.clone()).unwrap();
        let py = Planes::new(1, 6, 8, y.clone()).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| ca * u + cb * v).collect();
        let lhs = addon_forward(&Planes::new(1, 6, 8, mix).unwrap(), &p).unwrap();
        let fx = addon_forward(&px, &p).unwrap();
        let fy = addon_forward(&py, &p).unwrap();
        for ((l, u), v) in lhs.as_slice().iter().zip(fx.as_slice()).zip(fy.as_slice()) {
            prop_assert!((l - (ca * u + cb * v)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_insertion_replicates_the_spectrum(img in image(10)) {
        let (h, w) = (img.height(), img.width());
        let up = fft2d(&zero_insert_upsample(&img)).unwrap();
        let base = fft2d(&img).unwrap();
        for y in 0..2 * h {
            for x in 0..2 * w {
                prop_assert!((up.get(y, x) - base.get(y % h, x % w)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn magnitude_is_translation_invariant(img in image(10), dy in 0usize..10, dx in 0usize..10) {
        let (h, w) = (img.height(), img.width());
        let moved = GrayImage::from_fn(h, w, |y, x| img.get((y + dy) % h, (x + dx) % w));
        let a = magnitude(&fft2d(&img).unwrap());
        let b = magnitude(&fft2d(&moved).unwrap());
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }
}
