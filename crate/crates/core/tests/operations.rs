//! Operation-level examples checked against independent oracles: Monte-Carlo estimates,
//! direct simulation and grid scans.

use adashift_core::analysis::{
    epoch_step_sum, expected_k_terms, gamma_t, limit_cycle_factors, pearson, simulate_limit_cycle,
    StepSumMode, VarianceModel,
};
use adashift_core::harness::{
    decorrelation_experiment, empirical_critical_c, run_online, run_seeds, run_sweep, run_training,
    CriticalMode, EpochLength, ExperimentSpec, ProblemSpec, SweepGrid,
};
use adashift_core::optim::{OptimizerConfig, SpatialOp};
use adashift_core::problems::{
    make_ill_conditioned_matrix, make_synthetic_dataset, stochastic_gradient_sample, StochasticCounterexample,
};
use adashift_core::rng::seeded;

#[test]
fn stochastic_draws_match_closed_form_moments() {
    let problem = StochasticCounterexample::new(101.0, 0.02).unwrap();
    let mut rng = seeded(2024);
    let n = 10_000_000;
    let (mut s1, mut s2, mut s4, mut s8) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let g = stochastic_gradient_sample(problem.c, problem.delta, &mut rng);
        let g2 = g * g;
        s1 += g;
        s2 += g2;
        s4 += g2 * g2;
        s8 += g2 * g2 * g2 * g2;
    }
    let n = n as f64;
    let (m1, m2, m4) = (s1 / n, s2 / n, s4 / n);
    // Standard errors from the sample itself.
    let se1 = ((m2 - m1 * m1) / n).sqrt();
    let se2 = ((m4 - m2 * m2) / n).sqrt();
    let se4 = ((s8 / n - m4 * m4) / n).sqrt();
    assert!((m1 - problem.mean()).abs() < 3.0 * se1, "E[g] {m1} vs {}", problem.mean());
    assert!((m2 - problem.second_moment()).abs() < 3.0 * se2, "E[g²] {m2} vs {}", problem.second_moment());
    assert!((m4 - problem.fourth_moment()).abs() < 3.0 * se4, "E[g⁴] {m4} vs {}", problem.fourth_moment());
    // g² is two-point with p ≈ 0.01, so the sample variance has relative error ≈ 0.3 %.
    let var2 = m4 - m2 * m2;
    assert!(((var2 - problem.squared_variance()) / var2).abs() < 0.01, "D[g²] {var2}");
}

#[test]
fn adam_gamma_goes_negative_on_stochastic_problem() {
    let spec = ExperimentSpec::new(
        ProblemSpec::Stochastic { c: 101.0, delta: 0.02 },
        OptimizerConfig::adam(0.001, 0.0, 0.999),
        10_000,
    )
    .with_theta0(vec![0.0]);
    let run = run_online(&spec, 1).unwrap();
    let min = (2..=10_000).map(|t| gamma_t(&run.trajectory, t).unwrap()[0]).fold(f64::INFINITY, f64::min);
    assert!(min < 0.0, "min Γ_t = {min}");
}

#[test]
fn first_gradient_of_epoch_has_smallest_factor() {
    for (beta1, beta2) in [(0.0, 0.9), (0.5, 0.99), (0.9, 0.99), (0.9, 0.999)] {
        let f = limit_cycle_factors(beta1, beta2, 6.0, 6, 2000, None).unwrap();
        let argmin = (0..f.k.len()).min_by(|&a, &b| f.k[a].total_cmp(&f.k[b])).unwrap();
        assert_eq!(argmin, 0, "β1={beta1}, β2={beta2}: {:?}", f.k);
        assert!(f.k[1..].iter().all(|k| *k > f.k[0]));
    }
}

#[test]
fn exact_step_sum_matches_simulated_epoch() {
    let cycle = simulate_limit_cycle(0.9, 0.99, 6.0, 6, 2000).unwrap();
    let direct: f64 = cycle.m.iter().zip(&cycle.v).map(|(m, v)| m / v.sqrt()).sum();
    let closed = epoch_step_sum(0.9, 0.99, 6.0, 6, StepSumMode::Exact).unwrap();
    assert!((direct - closed).abs() < 1e-4, "{direct} vs {closed}");
}

#[test]
fn step_sum_increases_with_c() {
    for mode in [StepSumMode::Exact, StepSumMode::Approximate] {
        let values: Vec<f64> = (0..50)
            .map(|i| epoch_step_sum(0.9, 0.99, 1.5 + 2.0 * i as f64, 20, mode).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{mode:?}: {values:?}");
    }
}

#[test]
fn expected_factor_terms_are_dominated_term_by_term() {
    let problem = StochasticCounterexample::new(101.0, 0.02).unwrap();
    for beta1 in [0.0, 0.5, 0.9] {
        for beta2 in [0.99, 0.999] {
            let big = expected_k_terms(&problem, beta1, beta2, 101.0, 200, VarianceModel::Stationary).unwrap();
            let small = expected_k_terms(&problem, beta1, beta2, -1.0, 200, VarianceModel::Stationary).unwrap();
            assert!(big.iter().zip(&small).all(|(a, b)| a <= b));
            assert!(big.iter().sum::<f64>() < small.iter().sum::<f64>());
        }
    }
}

#[test]
fn pearson_reference_value() {
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]).unwrap();
    // cov = 1/2, var_x = 1, var_y = 1/3 with matching normalizations, so ρ = √3/2.
    assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-12);
}

#[test]
fn adam_has_positive_regret_and_adashift_less() {
    let projected = |optimizer| {
        let spec = ExperimentSpec::new(ProblemSpec::Stochastic { c: 101.0, delta: 0.02 }, optimizer, 100_000)
            .with_seeds(vec![1, 2, 3, 4, 5])
            .with_record_every(100_000)
            .with_projection(true)
            .with_theta0(vec![0.0]);
        run_seeds(&spec)
            .into_iter()
            .map(|r| r.unwrap().regret.expect("linear problem with a box").average)
            .collect::<Vec<_>>()
    };
    let adam = projected(OptimizerConfig::adam(0.001, 0.0, 0.999));
    let shift = projected(OptimizerConfig::adashift(0.001, 0.0, 0.999, 1, SpatialOp::Identity));
    let positive = adam.iter().filter(|r| **r > 0.0).count();
    let lower = shift.iter().zip(&adam).filter(|(s, a)| s < a).count();
    assert!(positive >= 3 && lower >= 3, "Adam {adam:?}, AdaShift {shift:?}");
}

#[test]
fn sweep_shows_both_directions() {
    let grid = SweepGrid {
        beta1_values: vec![0.0, 0.5, 0.9],
        beta2_values: vec![0.3, 0.9, 0.999],
        base: ExperimentSpec::new(ProblemSpec::Sequential { c: 6.0, d: 6 }, OptimizerConfig::adam(0.01, 0.0, 0.9), 6000)
            .with_theta0(vec![0.0]),
    };
    let result = run_sweep(&grid, None).unwrap();
    assert!(result.failures.is_empty());
    let finals: Vec<f64> = result.final_theta.iter().map(|x| x.unwrap()).collect();
    assert!(finals.iter().any(|x| *x > 0.0) && finals.iter().any(|x| *x < 0.0), "{finals:?}");
}

#[test]
fn larger_beta2_needs_larger_tied_threshold() {
    let threshold = |beta2| {
        empirical_critical_c(0.9, beta2, CriticalMode::Sequential(EpochLength::TiedToC), 2000, 1, (2.0, 400.0))
            .unwrap()
            .estimate
    };
    let (low, high) = (threshold(0.99), threshold(0.999));
    assert!(high > low, "{low} vs {high}");
}

#[test]
fn separable_one_dimensional_data_is_fit_by_sgd() {
    let task = make_synthetic_dataset(1, 200, 10.0, 5).unwrap();
    let path = tempfile::NamedTempFile::new().unwrap();
    task.write_csv(path.path()).unwrap();
    let spec = ExperimentSpec::new(
        ProblemSpec::LogisticFile { path: path.path().to_path_buf(), batch_size: 200, l2: 0.0 },
        OptimizerConfig::sgd(1.0),
        10_000,
    )
    .with_record_every(10_000);
    let run = run_training(&spec, 1).unwrap();
    let loss = task.full_loss_grad(&run.final_theta).loss;
    assert!(loss < 0.01, "loss {loss}");
}

#[test]
fn unseparated_clusters_give_chance_accuracy() {
    let task = make_synthetic_dataset(4, 100_000, 0.0, 9).unwrap();
    // The direction that separates the clusters when separation > 0.
    let theta = [1.0, 1.0, 1.0, 1.0, 0.0];
    assert!((task.accuracy(&theta) - 0.5).abs() < 0.02);
}

#[test]
fn well_separated_clusters_are_linearly_separable() {
    let task = make_synthetic_dataset(3, 500, 30.0, 4).unwrap();
    let spec_problem = ProblemSpec::Logistic { dim: 3, samples: 500, separation: 30.0, data_seed: 4, batch_size: 500, l2: 0.0 };
    let spec = ExperimentSpec::new(spec_problem, OptimizerConfig::sgd(0.5), 2000).with_record_every(2000);
    let run = run_training(&spec, 1).unwrap();
    assert_eq!(task.accuracy(&run.final_theta), 1.0);
}

#[test]
fn ill_conditioned_matrix_examples() {
    let a = make_ill_conditioned_matrix(2, 1e5).unwrap();
    assert_eq!((a[(0, 0)], a[(1, 1)], a[(0, 1)], a[(1, 0)]), (1.0, 1e5, 0.0, 0.0));
    let id = make_ill_conditioned_matrix(3, 1.0).unwrap();
    assert_eq!(id, nalgebra::DMatrix::identity(3, 3));
}

#[test]
fn decorrelation_reports_repeat_and_lags_stay_small() {
    let problem =
        ProblemSpec::Logistic { dim: 10, samples: 1000, separation: 2.0, data_seed: 3, batch_size: 32, l2: 1e-4 };
    let optimizers = [OptimizerConfig::adam(0.001, 0.9, 0.99)];
    let a = decorrelation_experiment(&problem, &optimizers, 4000, 0.5, None, 10, 50, 8).unwrap();
    let b = decorrelation_experiment(&problem, &optimizers, 4000, 0.5, None, 10, 50, 8).unwrap();
    assert_eq!(a, b);
    let lags = &a[0].report.temporal;
    assert_eq!(lags.len(), 10);
    assert!(lags.iter().all(|(_, r)| r.abs() < 0.05), "{lags:?}");
}
