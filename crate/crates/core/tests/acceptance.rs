//! End-to-end acceptance checks, one test per criterion.
//!
//! Each test prints a `PASS`/`FAIL` line with the measured quantities and its runtime;
//! run with `--nocapture --test-threads=1` to see them in order. Seeds for the stochastic
//! criteria are fixed in advance to `1..=5`.

mod common;

use std::time::Instant;

use adashift_core::analysis::{
    critical_c, critical_c_tied, epoch_step_sum, expected_k_second_order, limit_cycle_factors,
    m_limit_closed_form, monte_carlo_expected_k, rise_then_fall, simulate_limit_cycle,
    theorem2_expected_k, v_limit_closed_form, StepSumMode, VDistribution, VarianceModel,
};
use adashift_core::harness::{
    decorrelation_experiment, empirical_critical_c, final_loss, run_online, run_seeds,
    run_sweep, run_training, theorem1_check, tune_learning_rate, CriticalMode, EpochLength,
    ExperimentSpec, HarnessError, ProblemSpec, SweepGrid,
};
use adashift_core::optim::{BlockPartition, LrSchedule, Optimizer, OptimizerConfig, SpatialOp};
use adashift_core::problems::{
    make_synthetic_dataset, Draw, IllConditionedNet, OnlineProblem, StochasticCounterexample,
};
use adashift_core::rng::seeded;
use rand::Rng;
use rand_distr::StandardNormal;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn report(name: &str, pass: bool, detail: &str, started: Instant) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} {name}: {detail} [{:.2}s]", started.elapsed().as_secs_f64());
}

fn stochastic_finals(optimizer: OptimizerConfig, steps: u64) -> Vec<f64> {
    let spec = ExperimentSpec::new(ProblemSpec::Stochastic { c: 101.0, delta: 0.02 }, optimizer, steps)
        .with_seeds(SEEDS.to_vec())
        .with_record_every(steps)
        .with_theta0(vec![0.0]);
    run_seeds(&spec).into_iter().map(|r| r.expect("run succeeds").final_theta[0]).collect()
}

#[test]
fn counterexample_direction() {
    let started = Instant::now();
    let steps = 100_000;
    let adam = stochastic_finals(OptimizerConfig::adam(0.001, 0.0, 0.999), steps);
    let ams = stochastic_finals(OptimizerConfig::amsgrad(0.001, 0.0, 0.999), steps);
    let shift = stochastic_finals(OptimizerConfig::adashift(0.001, 0.0, 0.999, 1, SpatialOp::Identity), steps);
    let adam_up = adam.iter().filter(|x| **x > 0.0).count();
    let ams_down = ams.iter().filter(|x| **x < 0.0).count();
    let shift_down = shift.iter().filter(|x| **x < 0.0).count();
    let shift_below = shift.iter().zip(&ams).filter(|(s, a)| s < a).count();
    let pass = adam_up >= 4 && ams_down >= 4 && shift_down >= 4 && shift_below >= 4;
    let detail = format!(
        "Adam up {adam_up}/5, AMSGrad down {ams_down}/5, AdaShift down {shift_down}/5, AdaShift below AMSGrad {shift_below}/5; \
         finals Adam {adam:?} AMSGrad {ams:?} AdaShift {shift:?}"
    );
    report("counterexample direction", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn moment_limits_match_simulation() {
    let started = Instant::now();
    let mut worst_v: f64 = 0.0;
    let mut worst_m: f64 = 0.0;
    for beta in [0.5, 0.9, 0.99] {
        for cd in [3u64, 6, 11] {
            let cycle = simulate_limit_cycle(beta, beta, cd as f64, cd, 2000).unwrap();
            for i in 1..=cd {
                let v = v_limit_closed_form(beta, cd as f64, cd, i).unwrap();
                let m = m_limit_closed_form(beta, cd as f64, cd, i).unwrap();
                worst_v = worst_v.max((cycle.v[i as usize - 1] - v).abs() / v.abs());
                worst_m = worst_m.max((cycle.m[i as usize - 1] - m).abs() / m.abs());
            }
        }
    }
    let pass = worst_v <= 1e-6 && worst_m <= 1e-6;
    let detail = format!("max relative error v {worst_v:.3e}, m {worst_m:.3e}");
    report("v and m limits", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn limit_cycle_factors_rise_then_fall() {
    let started = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for beta1 in [0.5, 0.9] {
        for beta2 in [0.9, 0.99] {
            let f = limit_cycle_factors(beta1, beta2, 6.0, 6, 2000, None).unwrap();
            let peak = rise_then_fall(&f.k);
            let ok = peak.is_some() && f.tail_bound < f.min_gap();
            pass &= ok;
            detail += &format!(
                "(β1={beta1}, β2={beta2}) peak {:?} gap {:.2e} tail {:.2e}; ",
                peak.map(|p| p + 1),
                f.min_gap(),
                f.tail_bound
            );
        }
    }
    report("net update factors rise then fall", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn large_gradient_has_smaller_expected_factor() {
    let started = Instant::now();
    let problem = StochasticCounterexample::new(101.0, 0.02).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for beta2 in [0.99, 0.999] {
        let mc_c = monte_carlo_expected_k(&problem, 0.0, beta2, 101.0, 0, 10_000, 11).unwrap();
        let mc_m = monte_carlo_expected_k(&problem, 0.0, beta2, -1.0, 0, 10_000, 11).unwrap();
        let separated = mc_c.interval(3.0).1 < mc_m.interval(3.0).0;
        let f_c = expected_k_second_order(&problem, 0.0, beta2, 101.0, 0, VarianceModel::Stationary).unwrap();
        let f_m = expected_k_second_order(&problem, 0.0, beta2, -1.0, 0, VarianceModel::Stationary).unwrap();
        let rel_c = (f_c - mc_c.mean).abs() / mc_c.mean;
        let rel_m = (f_m - mc_m.mean).abs() / mc_m.mean;
        let agrees = rel_c < 0.05 && rel_m < 0.05;
        pass &= separated && agrees && f_c < f_m;
        detail += &format!(
            "β2={beta2}: MC k(C)={:.5}±{:.1e} k(−1)={:.5}±{:.1e} separated={separated}; \
             second-order k(C)={f_c:.5} ({:.1}%), k(−1)={f_m:.5} ({:.1}%); ",
            mc_c.mean,
            mc_c.std_error,
            mc_m.mean,
            mc_m.std_error,
            100.0 * rel_c,
            100.0 * rel_m
        );
    }
    report("expected factor ordering", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn critical_condition() {
    let started = Instant::now();
    let mut pass = true;
    let mut detail = String::new();

    let mut worst_root: f64 = 0.0;
    for beta1 in [0.0, 0.5, 0.9] {
        for beta2 in [0.99, 0.999] {
            for d in [5u64, 10, 20, 40] {
                let closed = critical_c(beta1, beta2, d).unwrap();
                if !closed.valid {
                    continue;
                }
                let s = |c: f64| epoch_step_sum(beta1, beta2, c, d, StepSumMode::Approximate).unwrap();
                let (mut lo, mut hi) = (1.0 + 1e-9, 1e6);
                assert!(s(lo) < 0.0 && s(hi) > 0.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if s(mid) < 0.0 { lo = mid } else { hi = mid }
                }
                worst_root = worst_root.max((0.5 * (lo + hi) - closed.value).abs());
            }
        }
    }
    pass &= worst_root <= 1e-9;
    detail += &format!("closed form vs bisection root max |Δ| {worst_root:.2e}; ");

    for beta2 in [0.99, 0.999] {
        for d in [10u64, 20, 40] {
            let closed = critical_c(0.9, beta2, d).unwrap().value;
            if closed < 10.0 {
                detail += &format!("(β2={beta2}, d={d}) closed {closed:.3} < 10 skipped; ");
                continue;
            }
            let mode = CriticalMode::Sequential(EpochLength::Fixed(d));
            let emp = empirical_critical_c(0.9, beta2, mode, 2000, 1, (1.5, 10.0 * d as f64)).unwrap();
            let rel = (emp.estimate - closed).abs() / closed;
            pass &= rel <= 0.1;
            detail += &format!("(β2={beta2}, d={d}) empirical {:.3} closed {closed:.3} ({:.2}%); ", emp.estimate, 100.0 * rel);
        }
    }

    let mut tied = Vec::new();
    for beta2 in [0.99, 0.999] {
        let mode = CriticalMode::Sequential(EpochLength::TiedToC);
        let emp = empirical_critical_c(0.9, beta2, mode, 2000, 1, (2.0, 400.0)).unwrap();
        let closed = critical_c_tied(0.9, beta2).unwrap();
        detail += &format!("tied d=C (β2={beta2}) first flipped C {} vs fixed point {closed:.2}; ", emp.estimate);
        tied.push(emp.estimate);
    }
    pass &= tied[1] > tied[0];
    report("critical condition", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn large_beta1_restores_direction() {
    let started = Instant::now();
    let problem = ProblemSpec::Stochastic { c: 101.0, delta: 0.02 };
    let grid = [0.9, 0.99, 0.999, 0.9999];
    let outcomes = match theorem1_check(&problem, 0.001, 0.999, &grid, 100_000, &SEEDS) {
        Ok(r) => r.outcomes,
        Err(HarnessError::Theorem1NotFound { outcomes }) => outcomes,
        Err(e) => panic!("{e}"),
    };
    let base_fails = !outcomes[0].passes();
    let large_passes = outcomes[1..].iter().any(|o| o.passes());
    let pass = base_fails && large_passes;
    let detail: String = outcomes
        .iter()
        .map(|o| format!("β1={} correct {}/{} mean Δθ {:.4}; ", o.beta1, o.correct, o.runs, o.mean_displacement))
        .collect();
    report("large β1 restores direction", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn independent_v_equalizes_factors() {
    let started = Instant::now();
    let problem = StochasticCounterexample::new(101.0, 0.02).unwrap();
    let classes =
        theorem2_expected_k(&problem, VDistribution::Uniform { lo: 1.0, hi: 2.0 }, 1.0, 0.0, 100_000, 5).unwrap();
    let (a, b) = (classes[0].estimate, classes[1].estimate);
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    let z = (a.mean - b.mean).abs() / se;
    let pass = z < 3.0;
    let detail = format!(
        "k(C)={:.5} (n={}) k(−1)={:.5} (n={}) |Δ|/σ={z:.2}",
        a.mean, a.samples, b.mean, b.samples
    );
    report("independent v equalizes factors", pass, &detail, started);
    assert!(pass, "{detail}");
}

fn logistic_problem() -> ProblemSpec {
    ProblemSpec::Logistic { dim: 20, samples: 2000, separation: 2.0, data_seed: 7, batch_size: 32, l2: 1e-4 }
}

#[test]
fn decorrelation_diagnostic() {
    let started = Instant::now();
    let optimizers = [
        OptimizerConfig::adam(0.001, 0.9, 0.99),
        OptimizerConfig::adashift(0.01, 0.9, 0.99, 10, SpatialOp::Max),
    ];
    let results = decorrelation_experiment(&logistic_problem(), &optimizers, 10_000, 0.5, None, 10, 50, 3)
        .unwrap();
    let (adam, shift) = (&results[0].report, &results[1].report);
    let own = shift.g2_v_shifted.expect("AdaShift run").1;
    let max_lag = adam
        .temporal
        .iter()
        .chain(&shift.temporal)
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max);
    let pass = adam.g2_v > 0.0 && adam.g2_v - shift.g2_v.abs() >= 0.1 && own.abs() < 0.05;
    let detail = format!(
        "Adam corr(g², v)={:.4}, AdaShift corr(g², v)={:.4}, AdaShift corr(g²_(t−n), v)={own:.4}; max |temporal lag corr| {max_lag:.4}",
        adam.g2_v, shift.g2_v
    );
    report("decorrelation diagnostic", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn training_parity() {
    let started = Instant::now();
    let steps = 5000;
    let grid = [0.01, 0.001, 0.0001];
    let tuned = |opt: OptimizerConfig| {
        let spec = ExperimentSpec::new(logistic_problem(), opt, steps).with_record_every(steps);
        tune_learning_rate(&spec, &grid, 1).unwrap()
    };
    let adam = tuned(OptimizerConfig::adam(0.001, 0.9, 0.999));
    let shift = tuned(OptimizerConfig::adashift(0.001, 0.9, 0.999, 10, SpatialOp::Max));
    let sgd_spec = ExperimentSpec::new(logistic_problem(), OptimizerConfig::sgd(0.001), steps).with_record_every(steps);
    let sgd = final_loss(&run_training(&sgd_spec, 1).unwrap());
    let rel = (shift.best_loss - adam.best_loss).abs() / adam.best_loss;
    let beats_sgd = adam.best_loss < sgd && shift.best_loss < sgd;
    let pass = rel <= 0.1 && beats_sgd;
    let detail = format!(
        "Adam {:.5} (α={}), AdaShift {:.5} (α={}), relative gap {:.2}%, untuned SGD {sgd:.5}",
        adam.best_loss,
        adam.best_alpha,
        shift.best_loss,
        shift.best_alpha,
        100.0 * rel
    );
    report("training parity", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn ill_conditioned_quadratic() {
    let started = Instant::now();
    let problem = ProblemSpec::IllConditioned { dim: 10, kappa: 1e5, init_sigma: 0.01, init_seed: 1 };
    let steps = 10_000;
    let grid = [10.0, 1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
    // Total decay factors of 10, 100 and 1000 over the run, tuned jointly with α0.
    let decays = [10f64, 100.0, 1000.0].map(|f| LrSchedule::ExpDecay { alpha0: 1.0, rate: f.ln() / steps as f64 });
    let initial = {
        let p = problem.build().unwrap();
        let theta0 = problem.default_theta0(p.dim()).unwrap();
        p.objective(&theta0).unwrap()
    };
    let configs = [
        ("SGD", OptimizerConfig::sgd(1e-3)),
        ("Momentum", OptimizerConfig::momentum(1e-3, 0.9)),
        ("Adam", OptimizerConfig::adam(1e-3, 0.9, 0.999)),
        ("AMSGrad", OptimizerConfig::amsgrad(1e-3, 0.9, 0.999)),
        ("AdaShift", OptimizerConfig::adashift(1e-3, 0.9, 0.999, 10, SpatialOp::Max)),
    ];
    let mut pass = true;
    let mut detail = format!("initial loss {initial:.4e}; ");
    for (name, opt) in configs {
        let spec = ExperimentSpec::new(problem.clone(), opt.clone(), steps).with_record_every(steps);
        let constant = tune_learning_rate(&spec, &grid, 1).unwrap();
        pass &= constant.best_loss < initial;
        detail += &format!("{name} constant {:.4e} (α={})", constant.best_loss, constant.best_alpha);
        if name == "Adam" || name == "AdaShift" {
            let (decay, decayed) = decays
                .iter()
                .map(|&d| {
                    let spec = ExperimentSpec::new(problem.clone(), opt.clone().with_schedule(d), steps)
                        .with_record_every(steps);
                    (d, tune_learning_rate(&spec, &grid, 1).unwrap())
                })
                .min_by(|a, b| a.1.best_loss.total_cmp(&b.1.best_loss))
                .unwrap();
            let ratio = constant.best_loss / decayed.best_loss;
            pass &= ratio >= 10.0;
            let LrSchedule::ExpDecay { rate, .. } = decay else { unreachable!() };
            detail += &format!(
                ", exp decay {:.4e} (α0={}, total factor {:.0}), ratio {ratio:.1}",
                decayed.best_loss,
                decayed.best_alpha,
                (rate * steps as f64).exp()
            );
        }
        detail += "; ";
    }
    report("ill-conditioned quadratic", pass, &detail, started);
    assert!(pass, "{detail}");
}

#[test]
fn infrastructure_properties() {
    let started = Instant::now();
    let mut detail = String::new();

    // Finite-difference gradient checks on every smooth problem.
    let mut rng = seeded(17);
    let task = make_synthetic_dataset(5, 200, 1.5, 3).unwrap().with_batch_size(16).with_l2(0.1);
    let theta: Vec<f64> = (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut fd_worst: f64 = 0.0;
    for t in 1..=5 {
        let draw = task.draw(t, &mut rng);
        fd_worst = fd_worst.max(common::gradient_error(&task, &theta, &draw));
    }
    for (dim, kappa) in [(3, 1e3), (10, 1e5)] {
        let net = IllConditionedNet::new(dim, kappa).unwrap();
        let theta = net.initial_theta(0.3, 9);
        fd_worst = fd_worst.max(common::gradient_error(&net, &theta, &Draw::Deterministic));
    }
    let fd_ok = fd_worst <= 1e-5;
    detail += &format!("finite differences max rel {fd_worst:.2e}; ");

    // Determinism and parallel/serial equivalence.
    let spec = ExperimentSpec::new(logistic_problem(), OptimizerConfig::adashift(0.01, 0.9, 0.99, 5, SpatialOp::Max), 300);
    let determinism = run_online(&spec, 4).unwrap().trajectory == run_online(&spec, 4).unwrap().trajectory;
    let grid = SweepGrid {
        beta1_values: vec![0.0, 0.5, 0.9],
        beta2_values: vec![0.9, 0.99, 0.999],
        base: ExperimentSpec::new(ProblemSpec::Sequential { c: 6.0, d: 6 }, OptimizerConfig::adam(0.01, 0.0, 0.9), 2000),
    };
    let parallel_equal = run_sweep(&grid, Some(1)).unwrap() == run_sweep(&grid, Some(4)).unwrap();
    detail += &format!("deterministic {determinism}, parallel==serial {parallel_equal}; ");

    // AMSGrad's running maximum never decreases.
    let mut opt = Optimizer::new(OptimizerConfig::amsgrad(0.01, 0.9, 0.999), BlockPartition::single(4)).unwrap();
    let mut theta = vec![0.0; 4];
    let mut prev = vec![0.0; 4];
    let mut monotone = true;
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let g: Vec<f64> = (0..4).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        opt.step(&mut theta, &g).unwrap();
        monotone &= opt.state().v_hat.iter().zip(&prev).all(|(a, b)| a >= b);
        prev.clone_from(&opt.state().v_hat);
    }
    detail += &format!("AMSGrad v̂ monotone {monotone}; ");

    // AdaShift's v ignores the newest n gradients.
    let n = 5;
    let config = OptimizerConfig::adashift(0.01, 0.9, 0.999, n, SpatialOp::Max);
    let partition = BlockPartition::from_sizes(&[("a", 3), ("b", 2)]).unwrap();
    let stream: Vec<Vec<f64>> =
        (0..60).map(|_| (0..5).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
    let run = |perturb: bool| {
        let mut opt = Optimizer::new(config.clone(), partition.clone()).unwrap();
        let mut theta = vec![0.0; 5];
        for (t, g) in stream.iter().enumerate() {
            let g: Vec<f64> = if perturb && t >= stream.len() - n { g.iter().map(|x| 7.0 * x + 1.0).collect() } else { g.clone() };
            opt.step(&mut theta, &g).unwrap();
        }
        opt.state().v.clone()
    };
    let invariant = run(false) == run(true);
    detail += &format!("AdaShift v invariant to last {n} gradients {invariant}");

    let pass = fd_ok && determinism && parallel_equal && monotone && invariant;
    report("infrastructure properties", pass, &detail, started);
    assert!(pass, "{detail}");
}
