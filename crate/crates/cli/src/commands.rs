use std::path::{Path, PathBuf};

use adashift_core::analysis::{
    critical_c, critical_c_tied, default_horizon, epoch_step_sum, expected_k_second_order, format_real,
    limit_cycle_factors, m_limit_closed_form, monte_carlo_expected_k, rise_then_fall, simulate_limit_cycle,
    theorem2_expected_k, v_limit_closed_form, StepSumMode, VDistribution, VarianceModel,
};
use adashift_core::harness::{
    decorrelation_experiment, empirical_critical_c, final_loss, in_pool, run_seeds, run_sweep, run_training,
    theorem1_check, tune_learning_rate, CriticalMode, EpochLength, ExperimentSpec, HarnessError, Manifest,
    OutputDir, ProblemSpec, RunResult, SweepGrid,
};
use adashift_core::optim::{Algorithm, LrSchedule, OptimizerConfig, SpatialOp};
use adashift_core::problems::StochasticCounterexample;

use crate::{CliError, Invocation, Params};

const OPTIMIZER: [(&str, &str); 8] = [
    ("epsilon", "1e-8"),
    ("shift_n", "10"),
    ("m_window", "auto"),
    ("spatial", "max"),
    ("bias_correction", "true"),
    ("schedule", "constant"),
    ("decay_horizon", "auto"),
    ("decay_rate", "0"),
];

const TASK: [(&str, &str); 11] = [
    ("task", "logistic"),
    ("dim", "20"),
    ("samples", "2000"),
    ("separation", "2"),
    ("data_seed", "7"),
    ("data", ""),
    ("batch_size", "32"),
    ("l2", "1e-4"),
    ("kappa", "1e5"),
    ("init_sigma", "0.01"),
    ("init_seed", "1"),
];

/// Every parameter of `command` with its default.
pub fn defaults(command: &str) -> Vec<(&'static str, &'static str)> {
    let mut d: Vec<(&str, &str)> = vec![("seed", "1")];
    let counterexample = [("problem", "stochastic"), ("C", "101"), ("d", "6"), ("delta", "0.02")];
    match command {
        "counterexample" => {
            d.extend(counterexample);
            d.extend(OPTIMIZER);
            d.extend([
                ("optimizer", "adam"),
                ("alpha", "0.001"),
                ("beta1", "0"),
                ("beta2", "0.999"),
                ("steps", "100000"),
                ("runs", "1"),
                ("record_every", "100"),
                ("projection", "false"),
                ("theta0", "0"),
            ]);
            // The counterexample runs use AdaShift without spatial sharing and n = 1.
            override_defaults(&mut d, &[("shift_n", "1"), ("spatial", "identity")]);
        }
        "sweep" => {
            d.extend(counterexample);
            d.extend(OPTIMIZER);
            d.extend([
                ("optimizer", "adam"),
                ("alpha", "0.001"),
                ("beta1_values", "0,0.3,0.5,0.7,0.9"),
                ("beta2_values", "0.1,0.3,0.5,0.7,0.9,0.99,0.999"),
                ("steps", "2000"),
                ("theta0", "0"),
            ]);
            override_defaults(&mut d, &[("problem", "sequential"), ("C", "6"), ("spatial", "identity"), ("shift_n", "1")]);
        }
        "critical" => d.extend([
            ("mode", "fixed"),
            ("beta1", "0.9"),
            ("beta2", "0.99"),
            ("d", "20"),
            ("delta", "1"),
            ("steps", "2000"),
            ("lo", "auto"),
            ("hi", "auto"),
        ]),
        "lemma" => d.extend([
            ("which", "v-limit"),
            ("beta1", "0.9"),
            ("beta2", "0.9"),
            ("C", "6"),
            ("d", "6"),
            ("delta", "0.02"),
            ("epochs", "2000"),
            ("horizon", "auto"),
            ("runs", "10000"),
            ("draws", "100000"),
            ("v_lo", "1"),
            ("v_hi", "2"),
        ]),
        "theorem" => d.extend(counterexample.into_iter().chain([
            ("alpha", "0.001"),
            ("beta2", "0.999"),
            ("beta1_grid", "0,0.9,0.99,0.999,0.9999"),
            ("steps", "100000"),
            ("runs", "5"),
        ])),
        "train" => {
            d.extend(TASK);
            d.extend(OPTIMIZER);
            d.extend([
                ("optimizer", "adashift"),
                ("alpha", "0.001"),
                ("beta1", "0.9"),
                ("beta2", "0.999"),
                ("steps", "5000"),
                ("record_every", "10"),
                ("alpha_grid", ""),
            ]);
        }
        "correlate" => {
            d.extend(TASK);
            d.extend([
                ("optimizers", "adam,adashift"),
                ("alphas", "0.001,0.01"),
                ("beta1", "0.9"),
                ("beta2", "0.99"),
                ("shift_n", "10"),
                ("spatial", "max"),
                ("steps", "10000"),
                ("tail", "0.5"),
                ("block", ""),
                ("n_max", "10"),
                ("pair_samples", "50"),
            ]);
        }
        "illcond" => d.extend([
            ("dim", "10"),
            ("kappa", "1e5"),
            ("init_sigma", "0.01"),
            ("init_seed", "1"),
            ("optimizers", "sgd,momentum,adam,amsgrad,adashift"),
            ("beta1", "0.9"),
            ("beta2", "0.999"),
            ("shift_n", "10"),
            ("spatial", "max"),
            ("steps", "10000"),
            ("alpha_grid", "10,1,0.1,0.01,0.001,1e-4,1e-5,1e-6,1e-7"),
            ("decay_factors", "10,100,1000"),
        ]),
        other => unreachable!("no defaults for command `{other}`"),
    }
    d
}

fn override_defaults(d: &mut [(&'static str, &'static str)], with: &[(&'static str, &'static str)]) {
    for (key, value) in with {
        let slot = d.iter_mut().find(|(k, _)| k == key).expect("overridden key exists");
        slot.1 = value;
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn real(x: f64) -> String {
    format_real(x)
}

/// Builds one optimizer from the shared keys, with the name, `α` and `β`s given.
fn optimizer(p: &Params, name: &str, alpha: f64, beta1: f64, beta2: f64, steps: u64) -> Result<OptimizerConfig, CliError> {
    let algorithm: Algorithm = name.parse().map_err(usage)?;
    let shift_n = p.count("shift_n")? as usize;
    let spatial: SpatialOp = p.str("spatial").parse().map_err(usage)?;
    let mut config = match algorithm {
        Algorithm::Sgd => OptimizerConfig::sgd(alpha),
        Algorithm::Momentum => OptimizerConfig::momentum(alpha, beta1),
        Algorithm::Adam => OptimizerConfig::adam(alpha, beta1, beta2),
        Algorithm::AmsGrad => OptimizerConfig::amsgrad(alpha, beta1, beta2),
        Algorithm::AdaShift => OptimizerConfig::adashift(alpha, beta1, beta2, shift_n, spatial),
    };
    if p.iter().any(|(k, _)| k == "epsilon") {
        config = config.with_epsilon(p.real_in("epsilon", 0.0, f64::INFINITY, true)?);
        config = config.with_bias_correction(p.parse("bias_correction")?);
        if algorithm == Algorithm::AdaShift && p.str("m_window") != "auto" {
            config = config.with_m_window(p.count("m_window")? as usize);
        }
        let schedule = match p.str("schedule") {
            "constant" => LrSchedule::Constant(alpha),
            "linear" => {
                let horizon = if p.str("decay_horizon") == "auto" { steps } else { p.count("decay_horizon")? };
                LrSchedule::LinearDecay { alpha0: alpha, horizon }
            }
            "exp" => LrSchedule::ExpDecay { alpha0: alpha, rate: p.real_in("decay_rate", 0.0, f64::INFINITY, true)? },
            other => return Err(usage(format!("unknown schedule `{other}` (constant, linear or exp)"))),
        };
        config = config.with_schedule(schedule);
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

fn betas(p: &Params) -> Result<(f64, f64), CliError> {
    Ok((p.real_in("beta1", 0.0, 1.0, false)?, p.real_in("beta2", 0.0, 1.0, true)?))
}

fn counterexample_problem(p: &Params) -> Result<ProblemSpec, CliError> {
    let c = p.real_in("C", 1.0, f64::INFINITY, true)?;
    let spec = match p.str("problem") {
        "sequential" => ProblemSpec::Sequential { c, d: p.count("d")? },
        "stochastic" => ProblemSpec::Stochastic { c, delta: p.positive("delta")? },
        other => return Err(usage(format!("unknown problem `{other}` (sequential or stochastic)"))),
    };
    spec.build().map_err(usage)?;
    Ok(spec)
}

fn task_problem(p: &Params) -> Result<ProblemSpec, CliError> {
    let spec = match p.str("task") {
        "logistic" if !p.str("data").is_empty() => ProblemSpec::LogisticFile {
            path: PathBuf::from(p.str("data")),
            batch_size: p.count("batch_size")? as usize,
            l2: p.real_in("l2", 0.0, f64::INFINITY, true)?,
        },
        "logistic" => ProblemSpec::Logistic {
            dim: p.count("dim")? as usize,
            samples: p.count("samples")? as usize,
            separation: p.real_in("separation", 0.0, f64::INFINITY, true)?,
            data_seed: p.parse("data_seed")?,
            batch_size: p.count("batch_size")? as usize,
            l2: p.real_in("l2", 0.0, f64::INFINITY, true)?,
        },
        "illcond" => illcond_problem(p)?,
        other => return Err(usage(format!("unknown task `{other}` (logistic or illcond)"))),
    };
    spec.build().map_err(usage)?;
    Ok(spec)
}

fn illcond_problem(p: &Params) -> Result<ProblemSpec, CliError> {
    Ok(ProblemSpec::IllConditioned {
        dim: p.count("dim")? as usize,
        kappa: p.real_in("kappa", 1.0, f64::INFINITY, true)?,
        init_sigma: p.real_in("init_sigma", 0.0, f64::INFINITY, true)?,
        init_seed: p.parse("init_seed")?,
    })
}

fn seeds(p: &Params) -> Result<Vec<u64>, CliError> {
    let first: u64 = p.parse("seed")?;
    let runs = p.count("runs")?;
    Ok((0..runs).map(|i| first.wrapping_add(i)).collect())
}

fn harness(e: HarnessError) -> CliError {
    match e {
        HarnessError::Config(_) | HarnessError::Optim(_) | HarnessError::Problem(_) => usage(e),
        other => failed(other),
    }
}

/// Collected CSV outputs, written only once the whole experiment has finished.
struct Output {
    files: Vec<(String, Vec<String>, Vec<Vec<String>>)>,
    manifest: Manifest,
}

impl Output {
    fn new(p: &Params) -> Self {
        Self { files: Vec::new(), manifest: p.manifest() }
    }

    fn table(&mut self, name: impl Into<String>, header: &[&str], rows: Vec<Vec<String>>) {
        self.files.push((name.into(), header.iter().map(|h| h.to_string()).collect(), rows));
    }

    fn cell(&mut self, cell: usize, entries: &[(&str, String)]) {
        for (k, v) in entries {
            self.manifest.push(cell.to_string(), *k, v.clone());
        }
    }

    fn write(&self, root: &Path, command: &str) -> Result<PathBuf, CliError> {
        let dir = OutputDir::create(root, command).map_err(failed)?;
        for (name, header, rows) in &self.files {
            dir.write_cell(name, header, rows).map_err(failed)?;
        }
        dir.write_manifest(&self.manifest).map_err(failed)?;
        Ok(dir.path().to_path_buf())
    }
}

/// Runs the invocation's command, writes its outputs and returns the output directory.
///
/// An experiment that runs but misses its target (no sign change, no passing `β1`) still
/// writes its outputs and then reports failure.
pub fn execute(inv: &Invocation) -> Result<PathBuf, CliError> {
    let p = &inv.params;
    let (output, verdict) = in_pool(inv.threads, || match p.command() {
        "counterexample" => counterexample(p),
        "sweep" => sweep(p),
        "critical" => critical(p),
        "lemma" => lemma(p),
        "theorem" => theorem(p),
        "train" => train(p),
        "correlate" => correlate(p),
        "illcond" => illcond(p),
        other => Err(usage(format!("unknown command `{other}`"))),
    })
    .map_err(harness)??;
    let dir = output.write(&inv.out, p.command())?;
    verdict.map(|()| dir)
}

type Outcome = Result<(Output, Result<(), CliError>), CliError>;

fn counterexample(p: &Params) -> Outcome {
    let problem = counterexample_problem(p)?;
    let steps = p.count("steps")?;
    let (beta1, beta2) = betas(p)?;
    let alpha = p.positive("alpha")?;
    let opt = optimizer(p, p.str("optimizer"), alpha, beta1, beta2, steps)?;
    let theta0: f64 = p.parse("theta0")?;
    let spec = ExperimentSpec::new(problem, opt, steps)
        .with_seeds(seeds(p)?)
        .with_record_every(p.count("record_every")?)
        .with_projection(p.parse("projection")?)
        .with_theta0(vec![theta0]);
    spec.validate().map_err(harness)?;

    let mut out = Output::new(p);
    let mut summary = Vec::new();
    for (i, run) in run_seeds(&spec).into_iter().enumerate() {
        let run = run.map_err(harness)?;
        let rows = run
            .trajectory
            .records
            .iter()
            .map(|r| {
                vec![
                    r.t.to_string(),
                    real(r.theta[0]),
                    real(r.g[0]),
                    real(r.m[0]),
                    real(r.v[0]),
                    real(r.alpha),
                    real(r.loss),
                    r.updated.to_string(),
                ]
            })
            .collect();
        out.table(i.to_string(), &["t", "theta", "g", "m", "v", "alpha", "loss", "updated"], rows);
        out.cell(i, &[("seed", run.seed.to_string())]);
        let (total, average) = run.regret.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.total, r.average));
        println!(
            "seed {}: final theta {} (displacement {}), average regret {}",
            run.seed,
            real(run.final_theta[0]),
            real(run.displacement()[0]),
            real(average)
        );
        summary.push(vec![
            run.seed.to_string(),
            real(run.final_theta[0]),
            real(run.displacement()[0]),
            real(total),
            real(average),
        ]);
    }
    out.table("summary", &["seed", "final_theta", "displacement", "regret_total", "regret_average"], summary);
    Ok((out, Ok(())))
}

fn sweep(p: &Params) -> Outcome {
    let problem = counterexample_problem(p)?;
    let steps = p.count("steps")?;
    let alpha = p.positive("alpha")?;
    let beta1_values: Vec<f64> = p.list("beta1_values")?;
    let beta2_values: Vec<f64> = p.list("beta2_values")?;
    let first_b2 = beta2_values.first().copied().unwrap_or(0.9);
    let opt = optimizer(p, p.str("optimizer"), alpha, beta1_values.first().copied().unwrap_or(0.0), first_b2, steps)?;
    let base = ExperimentSpec::new(problem, opt, steps)
        .with_seeds(vec![p.parse("seed")?])
        .with_record_every(steps)
        .with_theta0(vec![p.parse("theta0")?]);
    let grid = SweepGrid { beta1_values, beta2_values, base };
    grid.validate().map_err(harness)?;
    for i in 0..grid.cells() {
        grid.cell_spec(i).optimizer.validate().map_err(usage)?;
    }

    let result = run_sweep(&grid, None).map_err(harness)?;
    let mut out = Output::new(p);
    let mut rows = Vec::new();
    for i in 0..grid.cells() {
        let (b1, b2) = grid.cell(i);
        let value = result.final_theta[i].map_or(String::new(), real);
        let row = vec![real(b1), real(b2), value];
        out.table(i.to_string(), &["beta1", "beta2", "final_theta"], vec![row.clone()]);
        out.cell(i, &[("beta1", real(b1)), ("beta2", real(b2))]);
        rows.push(row);
    }
    out.table("summary", &["beta1", "beta2", "final_theta"], rows);
    print!("beta1 \\ beta2");
    for b2 in &grid.beta2_values {
        print!("\t{b2}");
    }
    println!();
    for (r, b1) in grid.beta1_values.iter().enumerate() {
        print!("{b1}");
        for c in 0..grid.beta2_values.len() {
            print!("\t{}", result.get(r, c).map_or("failed".into(), |x| format!("{x:.4}")));
        }
        println!();
    }
    let verdict = if result.failures.is_empty() {
        Ok(())
    } else {
        Err(failed(format!("{} sweep cells failed: {:?}", result.failures.len(), result.failures)))
    };
    Ok((out, verdict))
}

fn critical(p: &Params) -> Outcome {
    let (beta1, beta2) = betas(p)?;
    let steps = p.count("steps")?;
    let d = p.count("d")?;
    let (mode, closed, default_bracket) = match p.str("mode") {
        "fixed" => {
            let closed = critical_c(beta1, beta2, d).map_err(usage)?;
            (CriticalMode::Sequential(EpochLength::Fixed(d)), Some((closed.value, closed.valid)), (1.5, 10.0 * d as f64))
        }
        "tied" => {
            let closed = critical_c_tied(beta1, beta2).ok().map(|c| (c, true));
            (CriticalMode::Sequential(EpochLength::TiedToC), closed, (2.0, 1000.0))
        }
        "stochastic" => {
            let delta = p.positive("delta")?;
            (CriticalMode::Stochastic { delta }, None, (delta + 1.0, 1000.0))
        }
        other => return Err(usage(format!("unknown mode `{other}` (fixed, tied or stochastic)"))),
    };
    let end = |key: &str, default: f64| -> Result<f64, CliError> {
        if p.str(key) == "auto" {
            Ok(default)
        } else {
            p.positive(key)
        }
    };
    let bracket = (end("lo", default_bracket.0)?, end("hi", default_bracket.1)?);
    let seed: u64 = p.parse("seed")?;

    let mut out = Output::new(p);
    let (closed_value, closed_valid) =
        closed.map_or((String::new(), String::new()), |(v, ok)| (real(v), ok.to_string()));
    let header = ["mode", "beta1", "beta2", "d", "closed_form", "closed_form_valid", "empirical", "lo", "hi"];
    let row = |empirical: String, lo: f64, hi: f64| {
        vec![
            p.str("mode").to_string(),
            real(beta1),
            real(beta2),
            d.to_string(),
            closed_value.clone(),
            closed_valid.clone(),
            empirical,
            real(lo),
            real(hi),
        ]
    };
    let samples_table = |samples: &[(f64, f64)]| samples.iter().map(|(c, x)| vec![real(*c), real(*x)]).collect();
    match empirical_critical_c(beta1, beta2, mode, steps, seed, bracket) {
        Ok(found) => {
            println!("closed form {closed_value}, empirical {} in [{}, {}]", found.estimate, found.lo, found.hi);
            out.table("0", &["C", "displacement"], samples_table(&found.samples));
            out.table("summary", &header, vec![row(real(found.estimate), found.lo, found.hi)]);
            Ok((out, Ok(())))
        }
        Err(HarnessError::CriticalNotFound { lo, hi, samples }) => {
            out.table("0", &["C", "displacement"], samples_table(&samples));
            out.table("summary", &header, vec![row(String::new(), lo, hi)]);
            Ok((out, Err(failed(format!("no sign change of the displacement between C={lo} and C={hi}")))))
        }
        Err(e) => Err(harness(e)),
    }
}

fn lemma(p: &Params) -> Outcome {
    let (beta1, beta2) = betas(p)?;
    let c: f64 = p.real_in("C", 1.0, f64::INFINITY, true)?;
    let d = p.count("d")?;
    let epochs = p.count("epochs")?;
    let horizon = if p.str("horizon") == "auto" { None } else { Some(p.parse::<usize>("horizon")?) };
    let mut out = Output::new(p);
    let mut summary: Vec<(&str, f64)> = Vec::new();
    match p.str("which") {
        which @ ("v-limit" | "m-limit") => {
            let cycle = simulate_limit_cycle(beta1, beta2, c, d, epochs).map_err(usage)?;
            let mut worst: f64 = 0.0;
            let mut rows = Vec::new();
            for i in 1..=d {
                let (closed, simulated) = if which == "v-limit" {
                    (v_limit_closed_form(beta2, c, d, i).map_err(usage)?, cycle.v[i as usize - 1])
                } else {
                    (m_limit_closed_form(beta1, c, d, i).map_err(usage)?, cycle.m[i as usize - 1])
                };
                let rel = (closed - simulated).abs() / closed.abs();
                worst = worst.max(rel);
                rows.push(vec![i.to_string(), real(closed), real(simulated), real(rel)]);
            }
            out.table("0", &["i", "closed_form", "simulated", "relative_error"], rows);
            summary.push(("max_relative_error", worst));
        }
        "factors" => {
            let f = limit_cycle_factors(beta1, beta2, c, d, epochs, horizon).map_err(usage)?;
            let rows = f.k.iter().enumerate().map(|(i, k)| vec![(i + 1).to_string(), real(*k)]).collect();
            out.table("0", &["i", "k"], rows);
            summary.push(("peak_i", rise_then_fall(&f.k).map_or(f64::NAN, |i| (i + 1) as f64)));
            summary.push(("min_gap", f.min_gap()));
            summary.push(("tail_bound", f.tail_bound));
            summary.push(("horizon", f.horizon as f64));
        }
        "step-sum" => {
            let cycle = simulate_limit_cycle(beta1, beta2, c, d, epochs).map_err(usage)?;
            summary.push(("simulated", cycle.step_sum()));
            summary.push(("exact", epoch_step_sum(beta1, beta2, c, d, StepSumMode::Exact).map_err(usage)?));
            summary.push(("approximate", epoch_step_sum(beta1, beta2, c, d, StepSumMode::Approximate).map_err(usage)?));
            let critical = critical_c(beta1, beta2, d).map_err(usage)?;
            summary.push(("critical_c", critical.value));
        }
        "expected-k" => {
            let problem = StochasticCounterexample::new(c, p.positive("delta")?).map_err(usage)?;
            let runs = p.count("runs")? as usize;
            let seed: u64 = p.parse("seed")?;
            let horizon = horizon.unwrap_or_else(|| default_horizon(beta1));
            let mut rows = Vec::new();
            for g in [c, -1.0] {
                let mc = monte_carlo_expected_k(&problem, beta1, beta2, g, horizon, runs, seed).map_err(usage)?;
                let stationary =
                    expected_k_second_order(&problem, beta1, beta2, g, horizon, VarianceModel::Stationary).map_err(usage)?;
                let printed =
                    expected_k_second_order(&problem, beta1, beta2, g, horizon, VarianceModel::AsPrinted).map_err(usage)?;
                rows.push(vec![real(g), real(mc.mean), real(mc.std_error), real(stationary), real(printed)]);
            }
            out.table("0", &["g", "mc_mean", "mc_std_error", "second_order", "second_order_as_printed"], rows);
        }
        "independent-v" => {
            let problem = StochasticCounterexample::new(c, p.positive("delta")?).map_err(usage)?;
            let v = VDistribution::Uniform { lo: p.positive("v_lo")?, hi: p.positive("v_hi")? };
            let draws = p.count("draws")? as usize;
            let classes = theorem2_expected_k(&problem, v, 1.0, beta1, draws, p.parse("seed")?).map_err(usage)?;
            let rows = classes
                .iter()
                .map(|k| {
                    let e = &k.estimate;
                    vec![real(k.g_value), real(e.mean), real(e.std_error), e.samples.to_string()]
                })
                .collect();
            out.table("0", &["g", "mean_k", "std_error", "samples"], rows);
            let (a, b) = (&classes[0].estimate, &classes[1].estimate);
            summary.push(("z", (a.mean - b.mean).abs() / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()));
        }
        other => {
            return Err(usage(format!(
                "unknown lemma check `{other}` (v-limit, m-limit, factors, step-sum, expected-k, independent-v)"
            )))
        }
    }
    for (k, v) in &summary {
        println!("{k}: {}", real(*v));
    }
    let rows = summary.iter().map(|(k, v)| vec![k.to_string(), real(*v)]).collect();
    out.table("summary", &["quantity", "value"], rows);
    Ok((out, Ok(())))
}

fn theorem(p: &Params) -> Outcome {
    let problem = counterexample_problem(p)?;
    let alpha = p.positive("alpha")?;
    let beta2 = p.real_in("beta2", 0.0, 1.0, true)?;
    let grid: Vec<f64> = p.list("beta1_grid")?;
    if let Some(b) = grid.iter().find(|b| !(0.0..1.0).contains(*b)) {
        return Err(usage(format!("beta1 grid value {b} outside [0, 1)")));
    }
    let steps = p.count("steps")?;
    let seeds = seeds(p)?;
    let (outcomes, verdict) = match theorem1_check(&problem, alpha, beta2, &grid, steps, &seeds) {
        Ok(r) => {
            println!("smallest passing beta1: {}", r.smallest_passing);
            (r.outcomes, Ok(()))
        }
        Err(HarnessError::Theorem1NotFound { outcomes }) => {
            (outcomes, Err(failed("no beta1 in the grid moves theta in the correct direction")))
        }
        Err(e) => return Err(harness(e)),
    };
    let mut out = Output::new(p);
    let mut summary = Vec::new();
    let mut runs = Vec::new();
    for o in &outcomes {
        println!("beta1 {}: correct {}/{}, mean displacement {}", o.beta1, o.correct, o.runs, o.mean_displacement);
        summary.push(vec![
            real(o.beta1),
            o.correct.to_string(),
            o.runs.to_string(),
            real(o.mean_displacement),
            o.passes().to_string(),
        ]);
        for (seed, x) in seeds.iter().zip(&o.displacements) {
            runs.push(vec![real(o.beta1), seed.to_string(), real(*x)]);
        }
    }
    out.table("0", &["beta1", "seed", "displacement"], runs);
    out.table("summary", &["beta1", "correct", "runs", "mean_displacement", "passes"], summary);
    Ok((out, verdict))
}

fn curve_rows(run: &RunResult) -> Vec<Vec<String>> {
    let objective: std::collections::HashMap<u64, f64> = run.objective_curve.iter().copied().collect();
    run.trajectory
        .records
        .iter()
        .map(|r| vec![r.t.to_string(), real(r.loss), objective.get(&r.t).map_or(String::new(), |x| real(*x))])
        .collect()
}

fn train(p: &Params) -> Outcome {
    let problem = task_problem(p)?;
    let steps = p.count("steps")?;
    let (beta1, beta2) = betas(p)?;
    let alpha = p.positive("alpha")?;
    let opt = optimizer(p, p.str("optimizer"), alpha, beta1, beta2, steps)?;
    let spec = ExperimentSpec::new(problem, opt, steps)
        .with_seeds(vec![p.parse("seed")?])
        .with_record_every(p.count("record_every")?);
    spec.validate().map_err(harness)?;
    let grid: Vec<f64> = p.list("alpha_grid")?;
    if grid.iter().any(|a| !(*a > 0.0)) {
        return Err(usage("alpha_grid values must be positive"));
    }
    let seed = spec.seeds[0];

    let mut out = Output::new(p);
    let (best, trials) = if grid.is_empty() {
        let run = run_training(&spec, seed).map_err(harness)?;
        let loss = final_loss(&run);
        (run, vec![(alpha, Some(loss))])
    } else {
        let tuned = tune_learning_rate(&spec, &grid, seed).map_err(harness)?;
        (tuned.best, tuned.trials)
    };
    out.table("0", &["t", "loss", "objective"], curve_rows(&best));
    let rows = trials
        .iter()
        .map(|(a, loss)| vec![real(*a), loss.map_or("diverged".into(), real)])
        .collect();
    out.table("summary", &["alpha", "final_loss"], rows);
    println!("{}: final loss {} after {} steps", p.str("optimizer"), real(final_loss(&best)), best.steps_completed);
    Ok((out, Ok(())))
}

fn correlate(p: &Params) -> Outcome {
    let problem = task_problem(p)?;
    let steps = p.count("steps")?;
    let (beta1, beta2) = betas(p)?;
    let names: Vec<String> = p.list("optimizers")?;
    let alphas: Vec<f64> = p.list("alphas")?;
    if names.is_empty() || names.len() != alphas.len() {
        return Err(usage(format!("need one alpha per optimizer, got {} and {}", names.len(), alphas.len())));
    }
    let configs = names
        .iter()
        .zip(&alphas)
        .map(|(n, a)| optimizer(p, n, *a, beta1, beta2, steps))
        .collect::<Result<Vec<_>, _>>()?;
    let tail = p.real_in("tail", 0.0, 1.0, false)?;
    let block = Some(p.str("block")).filter(|b| !b.is_empty());
    let n_max = p.count("n_max")? as usize;
    let results = decorrelation_experiment(
        &problem,
        &configs,
        steps,
        tail,
        block,
        n_max,
        p.parse("pair_samples")?,
        p.parse("seed")?,
    )
    .map_err(harness)?;

    let mut out = Output::new(p);
    let mut summary = Vec::new();
    for (i, (r, name)) in results.iter().zip(&names).enumerate() {
        let rep = &r.report;
        let mut rows: Vec<Vec<String>> =
            rep.temporal.iter().map(|(n, x)| vec!["temporal".into(), n.to_string(), real(*x)]).collect();
        rows.extend(rep.spatial.iter().map(|(n, x)| vec!["spatial".into(), n.to_string(), real(*x)]));
        out.table(i.to_string(), &["kind", "lag", "rho"], rows);
        out.cell(i, &[("optimizer", name.clone()), ("alpha", real(alphas[i]))]);
        let (shift_n, shifted) = rep.g2_v_shifted.map_or((String::new(), String::new()), |(n, x)| (n.to_string(), real(x)));
        println!("{name}: corr(g^2, v) = {:.4}, own-input corr = {shifted}", rep.g2_v);
        summary.push(vec![
            name.clone(),
            r.block.clone(),
            r.window.0.to_string(),
            r.window.1.to_string(),
            real(rep.g2_v),
            shift_n,
            shifted,
            rep.skipped.to_string(),
        ]);
    }
    let header = ["optimizer", "block", "window_start", "window_end", "g2_v", "shift_n", "g2_v_shifted", "skipped"];
    out.table("summary", &header, summary);
    Ok((out, Ok(())))
}

fn illcond(p: &Params) -> Outcome {
    let problem = illcond_problem(p)?;
    problem.build().map_err(usage)?;
    let steps = p.count("steps")?;
    let (beta1, beta2) = betas(p)?;
    let names: Vec<String> = p.list("optimizers")?;
    let grid: Vec<f64> = p.list("alpha_grid")?;
    let factors: Vec<f64> = p.list("decay_factors")?;
    if grid.is_empty() || grid.iter().any(|a| !(*a > 0.0)) {
        return Err(usage("alpha_grid must list positive learning rates"));
    }
    if factors.iter().any(|f| !(*f >= 1.0)) {
        return Err(usage("decay_factors must be at least 1"));
    }
    let seed: u64 = p.parse("seed")?;
    let initial = {
        let built = problem.build().map_err(usage)?;
        let theta0 = problem.default_theta0(built.dim()).map_err(harness)?;
        built.objective(&theta0).unwrap_or(f64::NAN)
    };

    let mut cells: Vec<(String, Option<f64>, ExperimentSpec)> = Vec::new();
    for name in &names {
        let opt = optimizer(p, name, grid[0], beta1, beta2, steps)?;
        let adaptive_decay = matches!(opt.algorithm, Algorithm::Adam | Algorithm::AdaShift);
        cells.push((name.clone(), None, ExperimentSpec::new(problem.clone(), opt.clone(), steps).with_record_every(steps)));
        if adaptive_decay {
            for f in &factors {
                let schedule = LrSchedule::ExpDecay { alpha0: grid[0], rate: f.ln() / steps as f64 };
                let spec = ExperimentSpec::new(problem.clone(), opt.clone().with_schedule(schedule), steps)
                    .with_record_every(steps);
                cells.push((name.clone(), Some(*f), spec));
            }
        }
    }

    let mut out = Output::new(p);
    let mut summary = Vec::new();
    let mut verdict = Ok(());
    for (i, (name, factor, spec)) in cells.iter().enumerate() {
        let schedule = if factor.is_some() { "exp" } else { "constant" };
        let factor_text = factor.map_or(String::new(), real);
        let label = factor.map_or(format!("{name} constant"), |f| format!("{name} exp decay x{f}"));
        out.cell(i, &[("optimizer", name.clone()), ("schedule", schedule.into()), ("decay_factor", factor_text.clone())]);
        match tune_learning_rate(spec, &grid, seed) {
            Ok(t) => {
                println!("{label}: best loss {:.4e} at alpha {}", t.best_loss, t.best_alpha);
                let rows = t.trials.iter().map(|(a, l)| vec![real(*a), l.map_or("diverged".into(), real)]).collect();
                out.table(i.to_string(), &["alpha", "final_loss"], rows);
                summary.push(vec![
                    name.clone(),
                    schedule.into(),
                    factor_text,
                    real(t.best_alpha),
                    real(t.best_loss),
                    real(initial),
                ]);
            }
            Err(e) => {
                println!("{label}: every learning rate failed ({e})");
                out.table(i.to_string(), &["alpha", "final_loss"], Vec::new());
                summary.push(vec![name.clone(), schedule.into(), factor_text, String::new(), String::new(), real(initial)]);
                verdict = Err(failed(format!("{name} failed at every learning rate")));
            }
        }
    }
    let header = ["optimizer", "schedule", "decay_factor", "best_alpha", "best_loss", "initial_loss"];
    out.table("summary", &header, summary);
    Ok((out, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_command_has_unique_keys() {
        for command in ["counterexample", "sweep", "critical", "lemma", "theorem", "train", "correlate", "illcond"] {
            let d = defaults(command);
            let mut keys: Vec<_> = d.iter().map(|(k, _)| *k).collect();
            keys.sort_unstable();
            keys.dedup();
            assert_eq!(keys.len(), d.len(), "{command}");
        }
    }

    #[test]
    fn beta2_out_of_range_is_a_usage_error() {
        let mut p = Params::new("counterexample", &defaults("counterexample"));
        p.set("beta2", "1.5", "test").unwrap();
        assert!(matches!(counterexample(&p), Err(CliError::Usage(_))));
    }
}
