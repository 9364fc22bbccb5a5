//! Acceptance gate: one test per criterion, each printing a single
//! `ACCEPTANCE <n> (<name>): pass|FAIL` line. Run with `--nocapture` to
//! see the lines for passing criteria too.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use gpzkf::filters::{zkf_correct, zkf_measure, zkf_predict, ZkfOptions, ZkfState};
use gpzkf::gpcore::{GpModel, Kernel};
use gpzkf::harness::{
    build_system, initial_estimate, run_experiment, simulate_trial_data, theorem2_check,
    Archive, ExperimentConfig,
};
use gpzkf::pendulum::{generate_scenario, ShiftVariant};
use gpzkf::uncertainty::{noise_box, NoiseSpec};
use gpzkf::zonogeom::{BoxSet, Strip, Zonotope};

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    println!("ACCEPTANCE {n} ({name}): {}", if ok { "pass" } else { "FAIL" });
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn archive_for(variant: ShiftVariant, cell: &OnceLock<Archive>) -> &Archive {
    cell.get_or_init(|| {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.variant = variant;
        run_experiment(&cfg).expect("experiment runs")
    })
}

fn shift_none() -> &'static Archive {
    static CELL: OnceLock<Archive> = OnceLock::new();
    archive_for(ShiftVariant::None, &CELL)
}

fn shift_both() -> &'static Archive {
    static CELL: OnceLock<Archive> = OnceLock::new();
    archive_for(ShiftVariant::Both, &CELL)
}

fn inclusion(archive: &Archive, estimator: &str) -> f64 {
    archive
        .metrics
        .iter()
        .find(|r| r.estimator == estimator)
        .unwrap_or_else(|| panic!("no metrics for {estimator}"))
        .inclusion_pct
}

/// Criterion 1: with unit confidence scaling, vanishing noise, and no
/// linearization inflation, the zonotopic filter reproduces the GP-EKF
/// (centers, shapes, gains) to 1e-8 over the full 15-step horizon.
#[test]
fn criterion_1_filter_equivalence_under_relaxations() {
    let cfg = ExperimentConfig::default();
    let clock = Instant::now();
    let report = theorem2_check(&cfg, 1e-8).expect("check runs");
    let elapsed = clock.elapsed().as_secs_f64();
    let detail = format!(
        "center {:.3e} shape {:.3e} gain {:.3e} over {} steps in {elapsed:.2}s",
        report.max_center_dev, report.max_shape_dev, report.max_gain_dev, report.steps
    );
    verdict(
        1,
        "filter equivalence under relaxations",
        report.passed && report.steps == 15 && elapsed < 5.0,
        &detail,
    );
}

/// Criterion 2: with total budget δ = 0.2 and no distribution shift, the
/// true state stays inside the GP-ZKF set at every step of at least 67%
/// of 40 rollouts, and in at least 80% of all steps.
#[test]
fn criterion_2_delta_consistency_without_shift() {
    let clock = Instant::now();
    let archive = shift_none();
    let elapsed = clock.elapsed().as_secs_f64();
    let row = archive
        .metrics
        .iter()
        .find(|r| r.estimator == "gp-zkf")
        .expect("gp-zkf row");
    let trials = archive.trials.len();
    let detail = format!(
        "{} trials, joint {:.1}%, per-step {:.1}%, {elapsed:.1}s",
        trials, row.joint_inclusion_pct, row.inclusion_pct
    );
    verdict(
        2,
        "delta consistency without shift",
        trials == 40
            && row.joint_inclusion_pct >= 67.0
            && row.inclusion_pct >= 80.0
            && elapsed < 600.0,
        &detail,
    );
}

/// Criterion 3: the GP-ZKF set contains the true state strictly more
/// often than the GP-EKF 95% ellipsoid, with and without shift.
#[test]
fn criterion_3_zkf_beats_ekf_inclusion() {
    let none_zkf = inclusion(shift_none(), "gp-zkf");
    let none_ekf = inclusion(shift_none(), "gp-ekf");
    let both_zkf = inclusion(shift_both(), "gp-zkf");
    let both_ekf = inclusion(shift_both(), "gp-ekf");
    let detail = format!(
        "shift-none {none_zkf:.1}% vs {none_ekf:.1}%, shift-both {both_zkf:.1}% vs {both_ekf:.1}%"
    );
    verdict(
        3,
        "set inclusion beats the stochastic baseline",
        none_zkf > none_ekf && both_zkf > both_ekf,
        &detail,
    );
}

/// Criterion 4: Monte-Carlo coverage of the noise box reaches the
/// advertised level (within 0.5% sampling slack) for three
/// horizon/dimension/budget triples, 1e5 sequences each, in under 30 s.
#[test]
fn criterion_4_noise_box_coverage() {
    let clock = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for (horizon, dim, delta, seed) in [(5usize, 1usize, 0.1, 21u64), (15, 2, 0.05, 22), (50, 3, 0.01, 23)] {
        let spec = NoiseSpec::new(1.0, dim, horizon, delta).unwrap();
        let radius = noise_box(&spec).unwrap().radius()[0];
        let normal: Normal<f64> = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let covered = (0..100_000)
            .filter(|_| (0..horizon * dim).all(|_| normal.sample(&mut rng).abs() <= radius))
            .count();
        let fraction = covered as f64 / 1e5;
        ok &= fraction + 0.005 >= 1.0 - delta;
        details.push(format!("(T={horizon},n={dim},δ={delta}): {fraction:.4}"));
    }
    let elapsed = clock.elapsed().as_secs_f64();
    ok &= elapsed < 30.0;
    verdict(
        4,
        "noise box Monte-Carlo coverage",
        ok,
        &format!("{} in {elapsed:.1}s", details.join(", ")),
    );
}

/// Criterion 5: the scaled GP confidence band `μ ± β σ` contains at
/// least 90% of 200 functions drawn from the prior, everywhere on a
/// 40-point grid.
#[test]
fn criterion_5_gp_calibration() {
    let kernel = Kernel::isotropic(1.0, 0.8, 1).unwrap();
    let grid = DMatrix::from_fn(40, 1, |i, _| 5.0 * i as f64 / 39.0);
    let mut gram = kernel.gram(&grid);
    for i in 0..40 {
        gram[(i, i)] += 1e-10;
    }
    let chol = Cholesky::new(gram).unwrap();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    let covered = (0..200)
        .filter(|_| {
            let z = DVector::from_fn(40, |_, _| StandardNormal.sample(&mut rng));
            let f = chol.l() * z;
            let rkhs = f.dot(&chol.solve(&f)).max(0.0).sqrt();
            let idx: Vec<usize> = (0..40).step_by(3).collect();
            let inputs = DMatrix::from_fn(idx.len(), 1, |i, _| grid[(idx[i], 0)]);
            let outputs =
                DMatrix::from_fn(idx.len(), 1, |i, _| f[idx[i]] + noise.sample(&mut rng));
            let model =
                GpModel::fit(inputs, outputs, kernel.clone(), 0.1, Some(rkhs), 0.1).unwrap();
            let beta = model.beta();
            (0..40).all(|i| {
                let zq = DVector::from_element(1, grid[(i, 0)]);
                let (mu, sigma) = model.posterior(&zq).unwrap();
                (f[i] - mu[0]).abs() <= beta * sigma[0]
            })
        })
        .count();
    verdict(
        5,
        "GP confidence calibration",
        covered >= 180,
        &format!("{covered}/200 draws covered"),
    );
}

/// Criterion 6: randomized geometry properties — containment, hull
/// tightness against vertex enumeration, Minkowski-sum soundness, order
/// reduction, and strip intersection — over at least 100 cases each with
/// zero violations, in under 60 s.
#[test]
fn criterion_6_geometry_properties() {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    const CASES: usize = 120;

    let random_zonotope = |rng: &mut ChaCha8Rng, n: usize, k: usize| {
        let c = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let g = DMatrix::from_fn(n, k, |_, _, | rng.random_range(-3.0..3.0));
        Zonotope::new(c, g).unwrap()
    };
    let vertices = |z: &Zonotope<f64>| -> Vec<DVector<f64>> {
        let k = z.num_generators();
        (0..1usize << k)
            .map(|mask| {
                let xi =
                    DVector::from_fn(k, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
                z.center() + z.generators() * xi
            })
            .collect()
    };

    for _ in 0..CASES {
        // containment of constructed points, rejection beyond the hull
        let z = random_zonotope(&mut rng, 2, 4);
        let xi = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let p = z.center() + z.generators() * &xi;
        violations += usize::from(!z.contains_point(&p).unwrap());
        let hull = z.interval_hull();
        let mut outside = z.center().clone();
        outside[0] += hull.radius()[0] + 0.1;
        violations += usize::from(z.contains_point(&outside).unwrap());

        // hull tightness against vertex enumeration
        for j in 0..2 {
            let attained = vertices(&z)
                .iter()
                .map(|v| (v[j] - z.center()[j]).abs())
                .fold(0.0f64, f64::max);
            violations += usize::from((hull.radius()[j] - attained).abs() > 1e-12);
        }

        // Minkowski sum soundness
        let other = random_zonotope(&mut rng, 2, 3);
        let eta = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let q = other.center() + other.generators() * eta;
        let sum = z.minkowski_sum(&other).unwrap();
        violations += usize::from(!sum.contains_point(&(&p + q)).unwrap());

        // order reduction keeps every vertex
        let wide = random_zonotope(&mut rng, 2, 6);
        let reduced = wide.reduce_order(3).unwrap();
        for v in vertices(&wide) {
            violations += usize::from(!reduced.contains_point(&v).unwrap());
        }

        // strip intersection outer-approximates
        let map = DMatrix::from_fn(1, 2, |_, _, | rng.random_range(-2.0..2.0));
        let offset =
            DVector::from_element(1, (&map * z.center())[0] + rng.random_range(-0.5..0.5));
        let bound =
            BoxSet::zero_centered(DVector::from_element(1, rng.random_range(0.05..2.0)))
                .unwrap();
        let strip = Strip::new(map, offset, bound).unwrap();
        let cut = z.intersect_strip(&strip).unwrap();
        for v in vertices(&z) {
            if strip.contains(&v) {
                violations += usize::from(!cut.zonotope.contains_point(&v).unwrap());
            }
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    verdict(
        6,
        "randomized geometry properties",
        violations == 0 && elapsed < 60.0,
        &format!("{violations} violations over {CASES} cases in {elapsed:.1}s"),
    );
}

/// Criterion 7: along a filtered rollout, every rejection-sampled point
/// of the prediction set that satisfies the measurement strip and the
/// state domain lies in the corrected set — 1000 accepted points per
/// step, zero violations.
#[test]
fn criterion_7_correction_outer_approximates() {
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.variant = ShiftVariant::Both;
    let seed = cfg.seeds[0];
    let data = generate_scenario(&cfg.pendulum, &cfg.scenario, seed).unwrap();
    let built = build_system(&cfg, &data, seed).unwrap();
    let sys = &built.sys;
    let opts = ZkfOptions::standard(sys.n_x());

    let start = &data.test_starts[0];
    let (_, measurements) = simulate_trial_data(&cfg, seed, 0, start).unwrap();
    let init = initial_estimate(&cfg, start).unwrap();
    let mut state = ZkfState::init(init, built.lips_g, built.lips_h);
    let u = DVector::zeros(1);
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    let mut violations = 0usize;
    let mut sampled = 0usize;
    for y in &measurements {
        let prediction = zkf_predict(&state, sys, &opts, &u).unwrap();
        let strip = zkf_measure(&prediction, sys, &opts, &state.lips_h, &u, y).unwrap();
        let (corrected, gain) = zkf_correct(&prediction, &strip, &sys.state_domain, &opts).unwrap();

        let k = prediction.num_generators();
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < 1000 && attempts < 2_000_000 {
            attempts += 1;
            let xi = DVector::from_fn(k, |_, _| rng.random_range(-1.0..=1.0));
            let p = prediction.center() + prediction.generators() * xi;
            if !strip.contains(&p) || !sys.state_domain.contains(&p) {
                continue;
            }
            accepted += 1;
            if !corrected.contains_point(&p).unwrap() {
                violations += 1;
            }
        }
        sampled += accepted;

        state = ZkfState {
            estimate: corrected,
            time: state.time + 1,
            last_prediction: Some(prediction),
            last_strip: Some(strip),
            last_gain: Some(gain),
            lips_g: state.lips_g,
            lips_h: state.lips_h,
        };
    }
    verdict(
        7,
        "correction chain outer-approximates",
        violations == 0 && sampled >= 1000 * measurements.len() / 2,
        &format!("{violations} violations over {sampled} accepted samples"),
    );
}

/// Criterion 8: the GP-ZKF averages at most 50 ms of wall clock per
/// filter step in the full experiment.
#[test]
fn criterion_8_step_time_budget() {
    let row = shift_none()
        .metrics
        .iter()
        .find(|r| r.estimator == "gp-zkf")
        .expect("gp-zkf row");
    verdict(
        8,
        "mean step time within 50 ms",
        row.avg_step_time <= 0.05,
        &format!("{:.3} ms/step", row.avg_step_time * 1e3),
    );
}
