use num_traits::ToPrimitive;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotsum::arithmetic::{continued_fraction, Constant, UnitPoint};
use rotsum::dynamics::{ergodic_sum_final, Observable, OrbitSpec};
use rotsum::experiments::*;

fn denominators_up_to(c: Constant, limit: u64) -> Vec<u64> {
    let cf = continued_fraction(&c.precise(), 60).unwrap();
    cf.denominators()
        .filter_map(|q| q.to_u64())
        .take_while(|&q| q <= limit)
        .collect()
}

#[test]
fn denjoy_koksma_at_convergent_denominators() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for c in Constant::ALL {
        let qs = denominators_up_to(c, 1_000_000);
        assert!(qs.len() >= 8, "{c:?}");
        for _ in 0..100 {
            let x0 = UnitPoint::from_bits(rng.next_u64());
            for &q in &qs {
                let s = ergodic_sum_final(&OrbitSpec { x0, alpha: c.point(), horizon: q, observable: Observable::Sawtooth });
                assert!(s.abs() <= 1.0, "{c:?} q={q} x={x0} S={s}");
            }
        }
    }
}

fn small(kind: ExperimentKind, workers: usize) -> ExperimentConfig {
    ExperimentConfig { n: 64, horizon: 1000, workers, ..ExperimentConfig::for_kind(kind, 2024) }
}

#[test]
fn sample_drivers_ignore_worker_count() {
    for w in [2, 8] {
        assert_eq!(
            run_annealed_spatial(&small(ExperimentKind::AnnealedSpatial, 1)).unwrap(),
            run_annealed_spatial(&small(ExperimentKind::AnnealedSpatial, w)).unwrap()
        );
        assert_eq!(
            run_annealed_temporal(&small(ExperimentKind::AnnealedTemporal, 1)).unwrap(),
            run_annealed_temporal(&small(ExperimentKind::AnnealedTemporal, w)).unwrap()
        );
    }
    let tt = |w| ExperimentConfig { n: 2000, horizon: 256, workers: w, ..ExperimentConfig::for_kind(ExperimentKind::TtProtocol, 5) };
    let a = run_tt_protocol(&tt(1)).unwrap();
    assert_eq!(a, run_tt_protocol(&tt(2)).unwrap());
    assert_eq!(a, run_tt_protocol(&tt(8)).unwrap());
}

#[test]
fn density_ignores_worker_count() {
    let cfg = |w| {
        let mut c = ExperimentConfig { n: 10_000, workers: w, ..ExperimentConfig::for_kind(ExperimentKind::SpatialDensity, 3) };
        c.x = PointPolicy::Random;
        c
    };
    let a = run_spatial_density(&cfg(1), 100, None).unwrap();
    assert_eq!(a, run_spatial_density(&cfg(2), 100, None).unwrap());
    assert_eq!(a, run_spatial_density(&cfg(8), 100, None).unwrap());
}

#[test]
fn evaluation_counts_are_exact() {
    let c = small(ExperimentKind::AnnealedSpatial, 2);
    assert_eq!(run_annealed_spatial(&c).unwrap().evaluations, 64 * 1000);

    let mut c = small(ExperimentKind::AnnealedTemporal, 2);
    c.n = 200;
    let run = run_annealed_temporal(&c).unwrap();
    // replay the drawn times
    let drawn: u64 = (0..200u64)
        .map(|i| {
            use rand::Rng;
            let mut rng = rotsum::seeding::sample_rng(c.seed, i);
            let _alpha = rng.next_u64();
            rng.random_range(0..c.horizon)
        })
        .sum();
    assert_eq!(run.evaluations, drawn);

    let tt = ExperimentConfig { n: 1000, horizon: 300, ..ExperimentConfig::for_kind(ExperimentKind::TtProtocol, 1) };
    assert_eq!(run_tt_protocol(&tt).unwrap().evaluations, 300_000);

    let mut d = ExperimentConfig { n: 10_000, ..ExperimentConfig::for_kind(ExperimentKind::SpatialDensity, 1) };
    d.x = PointPolicy::Random;
    assert_eq!(run_spatial_density(&d, 55, None).unwrap().evaluations, 550_000);

    let mut b = ExperimentConfig::for_kind(ExperimentKind::BeckScaling, 1);
    b.observable = Observable::Indicator { gamma: UnitPoint::HALF };
    assert_eq!(run_beck_scaling(&b, &[100, 1000, 5000]).unwrap().evaluations, 4999);
}

#[test]
fn density_symmetry_improves_with_n() {
    let cfg = |n, seed| {
        let mut c = ExperimentConfig { n, workers: 1, ..ExperimentConfig::for_kind(ExperimentKind::SpatialDensity, seed) };
        c.alpha = PointPolicy::Fixed(Constant::EMinusTwo.point());
        c.x = PointPolicy::Random;
        c
    };
    for seed in [1, 2] {
        let small = run_spatial_density(&cfg(10_000, seed), 1001, None).unwrap();
        let large = run_spatial_density(&cfg(1_000_000, seed), 1001, None).unwrap();
        assert!(large.symmetry_defect <= small.symmetry_defect, "{} > {}", large.symmetry_defect, small.symmetry_defect);
    }
}

#[test]
fn golden_control_probe_runs() {
    let r = run_nonconvergence_probe(
        UnitPoint::ZERO,
        Constant::Golden.point(),
        Observable::Sawtooth,
        &WindowSpec::Dyadic { min_exponent: 10 },
        1 << 16,
    )
    .unwrap();
    assert_eq!(r.windows.len(), 6);
    assert_eq!(r.ks.len(), 6);
    assert!(r.max_ks.is_finite());
}

#[test]
fn tt_mean_position_is_near_half() {
    let c = ExperimentConfig { n: 5000, horizon: 4096, ..ExperimentConfig::for_kind(ExperimentKind::TtProtocol, 9) };
    let r = run_tt_protocol(&c).unwrap();
    assert!((r.mean_position - 0.5).abs() < 1e-2);
    assert_eq!(r.reference_q, 2.0);
    assert_eq!(r.reference_p0, 4.0);
    assert!(r.q_fit >= 1.0 && r.q_fit < 3.0);
}
