mod common;

use common::{mean_se, sample_mean};
use sdelab::drift::*;
use sdelab::mc::par_blocks;
use sdelab::noise::*;
use sdelab::sewing::*;

fn index_germ() -> Germ {
    // g(t) - g(s) with g(k) = k^2 / 8, exact in binary floating point
    Germ::custom(1, "index-square", |s, t, _| {
        let g = |k: usize| (k * k) as f64 / 8.0;
        vec![g(t) - g(s)]
    })
}

#[test]
fn additive_germs_telescope_exactly() {
    let grid = GridSpec::new(1.0, 256, 5).unwrap();
    let path = sample_fbm_volterra(0.3, grid, 1).unwrap();
    let ctx = GermContext::new(&path);
    let germ = index_germ();
    for (s, t) in [(0, 256), (64, 128), (32, 224)] {
        let want = germ.eval(s, t, &ctx).unwrap();
        let max_level = (t - s).trailing_zeros();
        for level in 0..=max_level {
            assert_eq!(riemann_sum(&germ, s, t, level, &ctx).unwrap(), want);
            assert_eq!(riemann_sum(&Germ::Zero, s, t, level, &ctx).unwrap(), vec![0.0]);
        }
    }
    let levels: Vec<u32> = (2..=7).collect();
    let sums: Vec<Vec<Vec<f64>>> = levels
        .iter()
        .map(|&l| vec![riemann_sum(&germ, 0, 256, l, &ctx).unwrap()])
        .collect();
    assert_eq!(rate_estimate(&levels, &sums).unwrap().slope, RateSlope::Exact);
}

#[test]
fn delta_recomposes_the_germ() {
    let grid = GridSpec::new(1.0, 64, 6).unwrap();
    let path = sample_fbm_volterra(0.7, grid, 2).unwrap();
    let ctx = GermContext::new(&path);
    let germs = [
        Germ::Increment,
        Germ::Frozen(cosine_field(2)),
        Germ::Conditional {
            field: mollify(&signed_power_field(0.3, 0.2, 2), 0.1).unwrap(),
            inner: 16,
        },
    ];
    for germ in &germs {
        for (s, u, t) in [(0, 20, 64), (5, 6, 7), (10, 40, 41)] {
            let d = delta(germ, s, u, t, &ctx).unwrap();
            let ast = germ.eval(s, t, &ctx).unwrap();
            let asu = germ.eval(s, u, &ctx).unwrap();
            let aut = germ.eval(u, t, &ctx).unwrap();
            for i in 0..2 {
                assert_eq!(d[i], ast[i] - asu[i] - aut[i]);
                let back = asu[i] + aut[i] + d[i];
                assert!((back - ast[i]).abs() <= 4.0 * f64::EPSILON * (asu[i].abs() + aut[i].abs() + ast[i].abs()));
            }
            assert_eq!(delta(germ, s, s, t, &ctx).unwrap(), vec![0.0, 0.0]);
            assert_eq!(delta(germ, s, t, t, &ctx).unwrap(), vec![0.0, 0.0]);
        }
        assert_eq!(germ.eval(9, 9, &ctx).unwrap(), vec![0.0, 0.0]);
    }
}

fn delta_samples(kind: NoiseKind, germ: &Germ, n_paths: usize) -> Vec<f64> {
    let grid = GridSpec::new(1.0, 64, 7).unwrap();
    let gen = NoiseGenerator::new(kind, grid, 1).unwrap();
    par_blocks(n_paths, |first, count| {
        gen.sample_block(first, count)
            .iter()
            .map(|p| {
                let ctx = GermContext::new(p);
                Ok(delta(germ, 16, 40, 64, &ctx)?[0])
            })
            .collect()
    })
    .unwrap()
}

#[test]
fn conditional_germ_has_centred_delta() {
    let closed = Germ::Conditional {
        field: cosine_field(1),
        inner: DEFAULT_INNER_SAMPLES,
    };
    let sampled = Germ::Conditional {
        field: mollify(&signed_power_field(0.4, 0.0, 1), 0.05).unwrap(),
        inner: DEFAULT_INNER_SAMPLES,
    };
    for kind in [NoiseKind::Bm, NoiseKind::FbmVolterra { hurst: 0.7 }] {
        for germ in [&closed, &sampled] {
            let ds = delta_samples(kind, germ, 2000);
            assert!(sample_mean(&ds).abs() <= 3.0 * mean_se(&ds), "{kind} {germ:?}");
            assert!(ds.iter().any(|&d| d != 0.0));
        }
    }
    let ds = delta_samples(NoiseKind::Stable { alpha: 1.5, c_alpha: 1.0 }, &sampled, 2000);
    assert!(sample_mean(&ds).abs() <= 3.0 * mean_se(&ds));
}

#[test]
fn conditional_riemann_sums_converge() {
    let n = 256;
    let grid = GridSpec::new(1.0, n, 9).unwrap();
    let gen = NoiseGenerator::new(NoiseKind::FbmVolterra { hurst: 0.7 }, grid, 1).unwrap();
    let germ = Germ::Conditional {
        field: gaussian_bump_field(1),
        inner: DEFAULT_INNER_SAMPLES,
    };
    let levels: Vec<u32> = (3..=8).collect();
    let per_path: Vec<Vec<Vec<f64>>> = par_blocks(400, |first, count| {
        gen.sample_block(first, count)
            .iter()
            .map(|p| {
                let ctx = GermContext::new(p);
                levels.iter().map(|&l| riemann_sum(&germ, 0, n, l, &ctx)).collect()
            })
            .collect()
    })
    .unwrap();
    let sums: Vec<Vec<Vec<f64>>> = (0..levels.len())
        .map(|l| per_path.iter().map(|p| p[l].clone()).collect())
        .collect();
    let r = rate_estimate(&levels, &sums).unwrap();
    match r.slope {
        RateSlope::Fitted(f) => assert!(f.slope <= -0.35, "{f:?}"),
        RateSlope::Exact => panic!("conditional sums are not exact"),
    }
    assert_eq!(r.norm_diff.len(), levels.len() - 1);
}

#[test]
fn composed_control_on_grid() {
    let pts: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    for (q, beta, h) in [(1.5, 0.0, 0.5), (3.0, -0.4, 0.3), (1.2, -0.1, 0.9)] {
        let w = composed_control(|r| r.powf(-0.2), q, beta, h).unwrap();
        assert!(check_control(w, &pts).is_control(1e-12), "({q}, {beta}, {h})");
    }
    assert!(composed_control(|_| 1.0, 0.5, 0.0, 0.5).is_err());
}
