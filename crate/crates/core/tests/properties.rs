use iisa::evalhub::{make_splits, SplitSpec};
use iisa::iis::{extrapolate_iis, generate_weak_labels, sample_weak_scales, IntrinsicScale, WeakLabelConfig};
use iisa::resample::{downscale, Image, ResampleSpec, ScaleFactor, S_LB};
use iisa::stats::{geometric_mean, plcc, srcc};
use iisa::study::SliderGrid;
use proptest::prelude::*;

fn omega() -> impl Strategy<Value = f64> {
    S_LB..=1.0f64
}

proptest! {
    #[test]
    fn extrapolation_branches(o in omega(), s in S_LB..=1.0f64) {
        let w = extrapolate_iis(IntrinsicScale::new(o).unwrap(), s).unwrap().value();
        if s <= o {
            prop_assert_eq!(w, 1.0);
        } else {
            prop_assert!((w - o / s).abs() <= 1e-12);
            prop_assert!(w >= o && w <= 1.0);
        }
    }

    #[test]
    fn extrapolation_is_non_increasing(o in omega(), a in S_LB..=1.0f64, b in S_LB..=1.0f64) {
        let om = IntrinsicScale::new(o).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(extrapolate_iis(om, lo).unwrap().value() >= extrapolate_iis(om, hi).unwrap().value());
    }

    #[test]
    fn chained_downscaling(o in omega(), s in S_LB..=1.0f64, r in S_LB..=1.0f64) {
        prop_assume!(s * r >= S_LB);
        let om = IntrinsicScale::new(o).unwrap();
        let twice = extrapolate_iis(extrapolate_iis(om, s).unwrap(), r).unwrap().value();
        let once = extrapolate_iis(om, s * r).unwrap().value();
        prop_assert!((twice - once).abs() <= 1e-12, "{} vs {}", twice, once);
    }

    #[test]
    fn weak_scales_respect_bounds(o in omega(), delta in 0.3..0.9f64, seed in any::<u64>()) {
        let cfg = WeakLabelConfig { delta, n_wl: 4, ..WeakLabelConfig::with_seed(seed) };
        let lo = o.max(delta);
        for s in sample_weak_scales(IntrinsicScale::new(o).unwrap(), &cfg) {
            prop_assert!(s.value() >= lo && s.value() <= 1.0);
            let w = extrapolate_iis(IntrinsicScale::new(o).unwrap(), s.value()).unwrap().value();
            prop_assert!(w >= o && w <= 1.0);
        }
    }

    #[test]
    fn weak_labels_are_seeded(o in omega(), seed in any::<u64>()) {
        let img = Image::filled("x", 12, 9, 1, 50).unwrap();
        let cfg = WeakLabelConfig::with_seed(seed);
        let a = generate_weak_labels(&img, IntrinsicScale::new(o).unwrap(), &cfg).unwrap();
        let b = generate_weak_labels(&img, IntrinsicScale::new(o).unwrap(), &cfg).unwrap();
        prop_assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.label, &y.label);
            prop_assert_eq!(x.image.samples(), y.image.samples());
        }
    }

    #[test]
    fn srcc_monotone_invariance(x in prop::collection::vec(0.05..1.0f64, 2..40), y in prop::collection::vec(0.05..1.0f64, 40)) {
        let y = &y[..x.len()];
        let tx: Vec<f64> = x.iter().map(|v| v.ln() * 3.0 + 7.0).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
        let a = srcc(&x, y).unwrap();
        let b = srcc(&tx, &ty).unwrap();
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn plcc_affine_invariance(x in prop::collection::vec(0.05..1.0f64, 3..40), y in prop::collection::vec(0.05..1.0f64, 40), k in 0.1..10.0f64, c in -5.0..5.0f64) {
        let y = &y[..x.len()];
        let tx: Vec<f64> = x.iter().map(|v| k * v + c).collect();
        match (plcc(&x, y).unwrap(), plcc(&tx, y).unwrap()) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn geometric_mean_is_bounded(x in prop::collection::vec(0.05..1.0f64, 1..30)) {
        let g = geometric_mean(&x).unwrap();
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(0.0, f64::max);
        prop_assert!(g >= lo && g <= hi);
    }

    #[test]
    fn downscale_preserves_constants(w in 1u32..40, h in 1u32..40, v in any::<u8>(), s in 0.05..=1.0f64) {
        let img = Image::filled("c", w, h, 1, v).unwrap();
        let out = downscale(&img, ScaleFactor::new(s).unwrap(), &ResampleSpec::default()).unwrap();
        prop_assert!(out.samples().iter().all(|&x| x == v));
        prop_assert_eq!(out.width(), ((w as f64 * s + 0.5).floor() as u32).max(1));
    }

    #[test]
    fn slider_roundtrip(p in 0u32..100) {
        let grid = SliderGrid::new(100, S_LB).unwrap();
        let s = grid.scale(p).unwrap();
        prop_assert!((S_LB..=1.0).contains(&s));
        prop_assert_eq!(grid.position(s), p);
        if p > 0 {
            prop_assert!(grid.scale(p - 1).unwrap() < s);
        }
    }

    #[test]
    fn splits_partition(n in 10usize..200, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        let spec = SplitSpec { n_repeats: 3, ..SplitSpec::with_seed(seed) };
        for s in make_splits(&ids, &spec).unwrap() {
            let mut all: Vec<&String> = s.train.iter().chain(&s.val).chain(&s.test).collect();
            prop_assert_eq!(all.len(), n);
            all.sort();
            all.dedup();
            prop_assert_eq!(all.len(), n);
        }
    }
}
