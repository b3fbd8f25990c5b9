mod common;

use common::{grid_golden_min, norm};
use gurukit_core::data::{gen_gaussian_toy, ToyKind};
use gurukit_core::linear::*;
use gurukit_core::math::f_value;
use gurukit_core::multiclass::*;
use gurukit_core::robust::{robust_hinge, LinearModel, MulticlassModel};
use gurukit_core::{Dataset, Task};

fn toy(seed: u64) -> (Dataset, Dataset, Dataset) {
    gen_gaussian_toy(ToyKind::TwoGauss, 200, seed).unwrap()
}

fn cfg(seed: u64, iters: usize) -> TrainConfig {
    TrainConfig {
        seed,
        max_iters: iters,
        ..TrainConfig::default()
    }
}

#[test]
fn guru_is_deterministic() {
    let (train, _, _) = toy(1);
    let a = train_guru(&train, 0.3, &cfg(5, 3000)).unwrap();
    let b = train_guru(&train, 0.3, &cfg(5, 3000)).unwrap();
    assert_eq!(a, b);
    let c = train_guru(&train, 0.3, &cfg(6, 3000)).unwrap();
    assert_ne!(a.final_model, c.final_model);
    let s1 = train_baseline_svm(&train, 1.0, &cfg(5, 3000)).unwrap();
    assert_eq!(s1, train_baseline_svm(&train, 1.0, &cfg(5, 3000)).unwrap());
}

#[test]
fn guru_objective_below_zero_model() {
    for seed in 0..4 {
        let (train, _, _) = toy(seed);
        let m = train.len() as f64;
        assert_eq!(robust_objective(&train, &[0.0, 0.0], 0.5), m);
        let r = train_guru(&train, 0.5, &cfg(seed, 5000)).unwrap();
        assert!(robust_objective(&train, &r.final_model.w, 0.5) <= m);
        assert_eq!(r.objective_trace[0], (0, m));
        assert!(r.objective_trace.iter().all(|p| p.1.is_finite()));
        assert_eq!(r.objective_trace.last().unwrap().0, r.iterations_run);
    }
}

#[test]
fn guru_converged_flag_matches_trace() {
    let (train, _, _) = toy(2);
    let c = TrainConfig {
        max_iters: 200_000,
        epsilon: 1e-3,
        ..TrainConfig::default()
    };
    let r = train_guru(&train, 0.5, &c).unwrap();
    assert!(r.converged);
    let n = r.objective_trace.len();
    let (a, b) = (r.objective_trace[n - 2].1, r.objective_trace[n - 1].1);
    assert!((a - b).abs() < c.epsilon * (1.0 + b.abs()));
    assert!(r.iterations_run < c.max_iters);
}

#[test]
fn guru_late_evaluations_are_stable() {
    let (train, _, _) = toy(1);
    let r = train_guru(&train, 0.5, &cfg(1, 20_000)).unwrap();
    let tail: Vec<f64> = r.objective_trace.iter().rev().take(10).map(|p| p.1).collect();
    let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
    let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / lo < 0.05, "{tail:?}");
}

#[test]
fn schedule_is_eta_over_sqrt_t() {
    let c = TrainConfig {
        eta0: 0.7,
        ..TrainConfig::default()
    };
    for t in [1usize, 2, 4, 9, 100, 12345] {
        assert_eq!(c.step(t), 0.7 / (t as f64).sqrt());
    }
}

/// One sample at x = (1, 0): the objective restricted to w = (a, 0) is
/// σ|a| f((1 - a)/(σ|a|)), minimized independently by golden-section search.
#[test]
fn single_sample_matches_scalar_oracle() {
    let sigma = 0.1;
    let data = Dataset::new("one", vec![vec![1.0, 0.0]], vec![1], Task::Binary).unwrap();
    let r = train_guru(&data, sigma, &cfg(0, 100_000)).unwrap();
    let w = &r.final_model.w;
    assert_eq!(w[1], 0.0);
    let scalar = |a: f64| if a == 0.0 { 1.0 } else { sigma * a.abs() * f_value((1.0 - a) / (sigma * a.abs())) };
    let got = robust_objective(&data, w, sigma);
    assert!((got - scalar(w[0])).abs() <= 1e-15);
    // below the unit-margin value σ f(0) and above the true minimum
    let oracle = grid_golden_min(scalar, 0.0, 200.0);
    assert!(got < scalar(1.0) * 1e-2, "{got}");
    assert!(oracle <= got);
    // the scalar objective is still decreasing where SGD stopped
    assert!(scalar(w[0] * 1.01) < got);
    assert!(w[0] > 1.0 - 3.0 * sigma * norm(w));
}

#[test]
fn guru_reaches_toy_accuracy() {
    let (train, _, test) = toy(1);
    let r = train_guru(&train, 0.5, &cfg(1, 20_000)).unwrap();
    let acc = linear_accuracy(&r.final_model, &test).unwrap();
    assert!(acc >= 0.895, "{acc}");
}

#[test]
fn trainer_errors() {
    let (train, _, _) = toy(1);
    assert!(train_guru(&train, 0.0, &TrainConfig::default()).is_err());
    assert!(train_guru(&train, -1.0, &TrainConfig::default()).is_err());
    assert!(train_baseline_svm(&train, 0.0, &TrainConfig::default()).is_err());
    let bad = TrainConfig {
        eval_period: 0,
        ..TrainConfig::default()
    };
    assert!(train_guru(&train, 1.0, &bad).is_err());
    let (three, _, _) = gen_gaussian_toy(ToyKind::ThreeGauss, 30, 0).unwrap();
    assert!(train_guru(&three, 1.0, &TrainConfig::default()).is_err());
}

#[test]
fn svm_examples() {
    let (train, _, test) = toy(1);
    let r = train_baseline_svm(&train, 1.0, &cfg(1, 20_000)).unwrap();
    assert!(linear_accuracy(&r.final_model, &test).unwrap() >= 0.895);
    assert!(svm_objective(&train, &r.final_model.w, 1.0) <= train.len() as f64);
    let big = train_baseline_svm(&train, 1e6, &cfg(1, 20_000)).unwrap();
    assert!(norm(&big.final_model.w) <= 1e-2, "{:?}", big.final_model.w);
}

#[test]
fn asvc_zero_delta_is_svm() {
    let (train, _, _) = toy(3);
    let c = cfg(3, 5000);
    let svm = train_baseline_svm(&train, 1.0, &c).unwrap();
    let a = train_asvc(&train, 0.0, 1.0, 5, &c).unwrap();
    assert_eq!(a.model.w, svm.final_model.w);
    assert!(a.converged);
    assert_eq!(a.rounds_run, 1);
}

#[test]
fn asvc_separable_margin() {
    // margin 1 around the vertical line x0 = 0
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let h = (i as f64 / 40.0) * 4.0 - 2.0;
        let off = 1.0 + (i % 5) as f64 * 0.3;
        rows.push(vec![off, h]);
        labels.push(1);
        rows.push(vec![-off, -h]);
        labels.push(-1);
    }
    let data = Dataset::new("sep", rows, labels, Task::Binary).unwrap();
    let r = train_asvc(&data, 0.4, 1.0, 6, &cfg(0, 20_000)).unwrap();
    assert_eq!(linear_accuracy(&r.model, &data).unwrap(), 1.0);
    let best = r.round_objectives.iter().cloned().fold(f64::MAX, f64::min);
    assert_eq!(r.round_objectives[r.best_round - 1], best);
    assert_eq!(asvc_objective(&data, &r.model.w, 0.4, 1.0), best);
}

#[test]
fn asvc_large_delta_shrinks_norm() {
    let (train, _, _) = toy(1);
    let rows: Vec<Vec<f64>> = train.rows().map(|r| r.iter().map(|v| v / norm(r)).collect()).collect();
    let unit = Dataset::new("unit", rows, train.labels().to_vec(), Task::Binary).unwrap();
    let c = cfg(1, 20_000);
    let svm = train_baseline_svm(&unit, 10.0, &c).unwrap();
    let a = train_asvc(&unit, 1e3, 10.0, 4, &c).unwrap();
    assert!(a.best_round > 1);
    assert!(norm(&a.model.w) < norm(&svm.final_model.w));
    assert!(train_asvc(&train, -1.0, 1.0, 3, &c).is_err());
    assert!(train_asvc(&train, 0.1, 1.0, 0, &c).is_err());
}

#[test]
fn refine_reaches_tolerance_and_descends() {
    let (train, _, _) = toy(1);
    let sgd = train_guru(&train, 0.5, &cfg(1, 5000)).unwrap().final_model;
    let before = robust_objective(&train, &sgd.w, 0.5);
    let r = batch_refine(&train, 0.5, &sgd, 1e-6, 100).unwrap();
    assert!(r.converged);
    assert!(robust_gradient_norm(&train, &r.model.w, 0.5) <= 1e-6);
    assert!(robust_objective(&train, &r.model.w, 0.5) <= before);
    for pair in r.trace.windows(2) {
        assert!(pair[1].1 <= pair[0].1);
    }
    let again = batch_refine(&train, 0.5, &r.model, 1e-6, 100).unwrap();
    assert!(again.iterations <= 1);
    assert!(batch_refine(&train, 0.5, &LinearModel::new(vec![0.0, 0.0], 0.5).unwrap(), 1e-6, 10).is_err());
}

#[test]
fn objective_gradient_sums_samples() {
    let (train, _, _) = toy(4);
    let w = [0.4, -0.3];
    let m = LinearModel::new(w.to_vec(), 0.8).unwrap();
    let direct: f64 = (0..train.len()).map(|i| robust_hinge(&m, train.row(i), train.y(i)).unwrap()).sum();
    assert!((robust_objective(&train, &w, 0.8) - direct).abs() <= 1e-12 * direct);
    let fd = common::grad_fd(|v| robust_objective(&train, v, 0.8), &w, 1e-6);
    let g = robust_objective_gradient(&train, &w, 0.8);
    for (a, b) in g.iter().zip(&fd) {
        assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
    }
}

fn probe_grid() -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(400);
    for i in 0..20 {
        for j in 0..20 {
            out.push([-4.0 + 8.0 * i as f64 / 19.0, -4.0 + 8.0 * j as f64 / 19.0]);
        }
    }
    out
}

#[test]
fn two_class_m_guru_matches_guru() {
    let (train, _, _) = toy(2);
    let multi = train.relabel(Task::Multiclass { classes: 2 }).unwrap();
    let c = cfg(7, 20_000);
    let m = train_m_guru(&multi, 0.5, &c).unwrap().final_model;
    let doubled = TrainConfig { eta0: 2.0 * c.eta0, ..c };
    let g = train_guru(&train, 0.5, &doubled).unwrap().final_model;
    let diff: Vec<f64> = m.weights[0].iter().zip(&m.weights[1]).map(|(a, b)| a - b).collect();
    let grid = probe_grid();
    let agree = grid
        .iter()
        .filter(|p| {
            let cls = multiclass_predict(&m, &p[..]).unwrap();
            (cls == 0) == (g.predict(&p[..]).unwrap() > 0)
        })
        .count();
    assert!(agree as f64 / grid.len() as f64 >= 0.99, "{agree}");
    for (a, b) in diff.iter().zip(&g.w) {
        assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{diff:?} vs {:?}", g.w);
    }
}

#[test]
fn three_class_accuracy_and_s2_objective() {
    let (train, _, test) = gen_gaussian_toy(ToyKind::ThreeGauss, 200, 1).unwrap();
    // run both to the iteration budget; S² gets one vector update per
    // iteration, so it gets C times as many iterations
    let c = TrainConfig {
        eta0: 0.25,
        max_iters: 300_000,
        epsilon: 1e-12,
        seed: 1,
        eval_period: 1000,
    };
    let full = train_m_guru(&train, 0.5, &c).unwrap();
    assert!(multiclass_accuracy(&full.final_model, &test).unwrap() >= 0.95);
    let c3 = TrainConfig { max_iters: 3 * c.max_iters, ..c };
    let s2 = train_m_guru_s2(&train, 0.5, &c3).unwrap();
    let (a, b) = (
        multiclass_objective(&train, &full.final_model).unwrap(),
        multiclass_objective(&train, &s2.final_model).unwrap(),
    );
    assert!((a - b).abs() / a <= 0.05, "{a} vs {b}");
    assert_eq!(s2.class_updates.iter().sum::<usize>(), s2.iterations_run);
    assert!(s2.class_updates.iter().all(|&n| n > 0));
    let short = TrainConfig { max_iters: 2000, ..c };
    assert_eq!(train_m_guru(&train, 0.5, &short).unwrap(), train_m_guru(&train, 0.5, &short).unwrap());
    assert_eq!(train_m_guru_s2(&train, 0.5, &short).unwrap(), train_m_guru_s2(&train, 0.5, &short).unwrap());
}

#[test]
fn multiclass_rejects_degenerate_input() {
    let one = Dataset::new("one", vec![vec![1.0], vec![2.0]], vec![1, 1], Task::Multiclass { classes: 1 });
    if let Ok(d) = one {
        assert!(train_m_guru(&d, 1.0, &TrainConfig::default()).is_err());
        assert!(train_m_guru_s2(&d, 1.0, &TrainConfig::default()).is_err());
    }
    let (bin, _, _) = toy(1);
    assert!(train_m_guru(&bin, 1.0, &TrainConfig::default()).is_err());
    assert!(MulticlassModel::new(vec![vec![1.0]], 1.0).is_err());
}

#[test]
fn predict_examples() {
    let m = MulticlassModel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
    assert_eq!(multiclass_predict(&m, &[2.0, 1.0]).unwrap(), 0);
    assert_eq!(multiclass_predict(&m, &[1.0, 1.0]).unwrap(), 0);
    let scaled = MulticlassModel::new(vec![vec![3.0, 0.0], vec![0.0, 3.0]], 1.0).unwrap();
    for p in probe_grid() {
        assert_eq!(multiclass_predict(&m, &p).unwrap(), multiclass_predict(&scaled, &p).unwrap());
    }
    assert!(multiclass_predict(&m, &[1.0]).is_err());
}

#[test]
fn multiclass_asvc_examples() {
    let m = MulticlassModel::new(vec![vec![1.0, 0.5], vec![-0.5, 1.0], vec![0.2, -1.0]], 1.0).unwrap();
    let x = [0.7, -0.4];
    let plain = (1..3)
        .map(|r| 1.0 - common::dot(&m.weights[0], &x) + common::dot(&m.weights[r], &x))
        .fold(0.0f64, f64::max);
    assert!((multiclass_asvc_loss(&m, 0.0, &x, 0).unwrap() - plain).abs() < 1e-15);
    let mut prev = 0.0;
    for k in 0..20 {
        let v = multiclass_asvc_loss(&m, k as f64 * 0.1, &x, 0).unwrap();
        assert!(v >= prev && v >= plain);
        prev = v;
    }
    let two = MulticlassModel::new(vec![vec![1.0, 0.5], vec![-0.5, 1.0]], 1.0).unwrap();
    let w = [1.5, -0.5];
    let hinge_ball = (1.0 - common::dot(&w, &x) + 0.3 * norm(&w)).max(0.0);
    assert!((multiclass_asvc_loss(&two, 0.3, &x, 0).unwrap() - hinge_ball).abs() < 1e-15);
    assert!(multiclass_asvc_loss(&two, 0.3, &x, 2).is_err());
    assert!(multiclass_asvc_loss(&two, -0.3, &x, 0).is_err());
}
