use proptest::prelude::*;
use secquant::roc::{bsc_transform, kl_divergence, kl_gradient_pd, mix_quantizers};
use secquant::{BscChannel, OperatingPoint};

fn design_point() -> impl Strategy<Value = OperatingPoint> {
    (0.001f64..0.999, 0.001f64..0.999)
        .prop_filter("strictly above the diagonal", |(x, y)| y - x > 1e-3)
        .prop_map(|(x, y)| OperatingPoint::new(x, y).unwrap())
}

fn any_point() -> impl Strategy<Value = OperatingPoint> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(x, y)| OperatingPoint::new(x, y).unwrap())
}

fn ch(rho: f64) -> BscChannel {
    BscChannel::new(rho).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn transform_moves_toward_center(op in any_point(), rho in 0.0f64..0.5) {
        let b = bsc_transform(op, ch(rho));
        let (ax, ay) = (op.pfa, op.pd);
        let cross = (b.pfa - ax) * (0.5 - ay) - (b.pd - ay) * (0.5 - ax);
        prop_assert!(cross.abs() < 1e-12);
        let between = |p: f64, a: f64| (p - a) * (0.5 - p) >= -1e-15;
        prop_assert!(between(b.pfa, ax) && between(b.pd, ay));
    }

    #[test]
    fn likelihood_ratios_contract(op in design_point(), r1 in 0.0f64..0.5, r2 in 0.0f64..0.5) {
        let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let p1 = bsc_transform(op, ch(r1));
        let p2 = bsc_transform(op, ch(r2));
        let chain = [
            op.pfa / op.pd,
            p1.pfa / p1.pd,
            p2.pfa / p2.pd,
            1.0,
            (1.0 - p2.pfa) / (1.0 - p2.pd),
            (1.0 - p1.pfa) / (1.0 - p1.pd),
            (1.0 - op.pfa) / (1.0 - op.pd),
        ];
        for w in chain.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12, "{:?}", chain);
        }
    }

    #[test]
    fn noisier_channels_lose_divergence(op in design_point()) {
        let d: Vec<f64> = (0..50)
            .map(|i| kl_divergence(bsc_transform(op, ch(i as f64 * 0.01))))
            .collect();
        for w in d.windows(2) {
            prop_assert!(w[1] < w[0], "{:?}", d);
        }
    }

    #[test]
    fn divergence_grows_with_detection(op in design_point()) {
        let h = 1e-6 * op.pd.min(1.0 - op.pd);
        let at = |y| kl_divergence(OperatingPoint::new(op.pfa, y).unwrap());
        let fd = (at(op.pd + h) - at(op.pd - h)) / (2.0 * h);
        let g = kl_gradient_pd(op);
        prop_assert!(g >= 0.0);
        prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3), "{} vs {}", fd, g);
    }

    #[test]
    fn divergence_is_jointly_convex(a in any_point(), b in any_point()) {
        let m = OperatingPoint::new(0.5 * (a.pfa + b.pfa), 0.5 * (a.pd + b.pd)).unwrap();
        prop_assert!(kl_divergence(m) <= 0.5 * (kl_divergence(a) + kl_divergence(b)) + 1e-12);
    }

    #[test]
    fn mixing_never_beats_the_best_component(
        pts in prop::collection::vec(design_point(), 1..5),
        raw in prop::collection::vec(0.01f64..1.0, 5),
        rho in 0.0f64..0.45,
    ) {
        let w: Vec<f64> = raw[..pts.len()].to_vec();
        let s: f64 = w.iter().sum();
        let mut w: Vec<f64> = w.iter().map(|v| v / s).collect();
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        let m = mix_quantizers(&pts, &w).unwrap();
        let d = |p| kl_divergence(bsc_transform(p, ch(rho)));
        let best = pts.iter().map(|&p| d(p)).fold(0.0, f64::max);
        prop_assert!(d(m) <= best + 1e-12);
    }
}

#[test]
fn kl_examples() {
    let d = |x, y| kl_divergence(OperatingPoint::new(x, y).unwrap());
    assert_eq!(d(0.5, 0.5), 0.0);
    assert!((d(0.25, 0.75) - 0.549306).abs() < 1e-6);
    assert!((d(0.1, 0.9) - 1.757780).abs() < 1e-6);
    assert_eq!(d(0.0, 0.0), 0.0);
    assert_eq!(d(1.0, 1.0), 0.0);
}
