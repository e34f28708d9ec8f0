//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the report is always printed; exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use fuss::experiments::{
    fit_loglog_slope, generational_transform, median, occupation_experiment, run_sweep, Budget, Median, SweepResult,
    SweepSpec, TspComparison,
};
use fuss::pairing::{marginal_tilde, pair_prob_tilde};
use fuss::population::{DeletionPolicy, Individual, Population, TieRule};
use fuss::problems::{ProblemSpec, TspSource};
use fuss::selection::{fuss_select_at, fuss_selection_probabilities};
use fuss::{FitnessGrid, FitnessScale, PairDistribution, PairMode, RandomSource, SelectionScheme, Strategy};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn check(checks: &mut Vec<String>, ok: bool, what: String) -> bool {
    if !ok {
        checks.push(what);
    }
    ok
}

fn strategy(s: &str) -> Strategy {
    s.parse().expect("valid strategy")
}

fn problems(specs: &[&str]) -> Vec<ProblemSpec> {
    specs.iter().map(|s| s.parse().expect("valid problem")).collect()
}

fn median_of(result: &SweepResult, problem: &ProblemSpec, s: Strategy) -> Option<f64> {
    result.cell(problem, s).and_then(|c| c.median().value())
}

fn slope_text(result: &SweepResult, family: &str, s: Strategy) -> (Option<f64>, String) {
    match result.slope(family, s) {
        Some(fit) => (
            Some(fit.slope),
            format!("{s} slope {:.3} (se {:.3})", fit.slope, fit.stderr),
        ),
        None => (None, format!("{s} slope undefined")),
    }
}

fn pair_distribution() -> Outcome {
    let mut failures = Vec::new();
    for n in [3usize, 5, 10, 100] {
        let grid = FitnessGrid::with_levels(0.0, 1.0, n).unwrap();
        let dist = PairDistribution::build(grid).unwrap();
        let nf = n as f64;
        let ln = nf.ln();
        let total: f64 = dist.matrix().iter().sum();
        check(
            &mut failures,
            (total - 1.0).abs() <= 1e-12,
            format!("|F|={n}: Σp = {total}"),
        );
        let mut tilde_total = 0.0;
        for i in 0..n {
            let f = grid.value(i);
            let row: f64 = (0..n).map(|j| dist.joint(i, j)).sum();
            check(
                &mut failures,
                (row - 1.0 / nf).abs() <= 1e-12,
                format!("|F|={n}: marginal {i} = {row}"),
            );
            let mt = marginal_tilde(f, &grid).unwrap();
            check(
                &mut failures,
                (0.5..=1.0).contains(&(nf * mt)),
                format!("|F|={n}: |F|·p̃({i}) = {}", nf * mt),
            );
            for j in 0..n {
                tilde_total += pair_prob_tilde(f, grid.value(j), &grid).unwrap();
                let m = i.abs_diff(j) as f64;
                let p = dist.joint(i, j);
                // Both bounds equal p̃ off the diagonal, so allow one rounding step.
                let near = 1.0 / (2.0 * ln) / (m + 1.0) / nf;
                let global = 1.0 / (2.0 * ln) / (nf * nf);
                check(
                    &mut failures,
                    p >= near * (1.0 - 1e-12),
                    format!("|F|={n}: near bound ({i},{j})"),
                );
                check(
                    &mut failures,
                    p >= global * (1.0 - 1e-12),
                    format!("|F|={n}: global bound ({i},{j})"),
                );
            }
        }
        check(
            &mut failures,
            tilde_total >= 1.0 - 1.0 / ln && tilde_total <= 1.0,
            format!("|F|={n}: Σp̃ = {tilde_total}"),
        );
    }
    let detail = if failures.is_empty() {
        "normalization, marginals and bounds hold for |F| in {3, 5, 10, 100}".to_string()
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

fn occupation() -> Outcome {
    let r = occupation_experiment(10, 1, 2000, 200, SEED).unwrap();
    let expected = r.expected_count();
    let mut worst_z: f64 = 0.0;
    let mut worst_frac: f64 = 0.0;
    for f in 0..r.levels.len() {
        worst_z = worst_z.max((r.mean_counts[f] - expected).abs() / r.std_errors[f]);
        worst_frac = worst_frac.max((r.mean_fractions[f] - 0.1).abs());
    }
    Outcome::new(
        worst_z <= 3.0 && worst_frac <= 0.02,
        format!("expected n_t(f) = {expected}, max |z| = {worst_z:.2}, max |fraction − 0.1| = {worst_frac:.4}"),
    )
}

fn scaling_2d() -> (Outcome, Outcome) {
    let deltas = [0.2, 0.1, 0.05, 0.025];
    let specs: Vec<String> = deltas.iter().map(|d| format!("deceptive2d:{d}")).collect();
    let refs: Vec<&str> = specs.iter().map(String::as_str).collect();
    let (rand, fuss, tour, trunc) = (
        strategy("random"),
        strategy("fuss"),
        strategy("tournament:2:1"),
        strategy("truncation:0.5"),
    );
    let mut spec = SweepSpec::new(problems(&refs), vec![rand, fuss, tour], 1000, SEED);
    spec.budget = Budget::Scaled {
        factor: 1000.0,
        exponent: 2.0,
    };
    let result = run_sweep(&spec).unwrap();

    let mut failures = Vec::new();
    let mut medians = Vec::new();
    for p in &spec.problems {
        let d = p.scaling_delta().unwrap();
        let r = median_of(&result, p, rand);
        let f = median_of(&result, p, fuss);
        let r_ok = r.is_some_and(|m| m >= 0.5 / (d * d) && m <= 2.0 / (d * d));
        let f_ok = f.is_some_and(|m| m >= 0.5 * 4.5 / d && m <= 2.0 * 4.5 / d);
        check(&mut failures, r_ok, format!("RAND median {r:?} at Δ={d}"));
        check(&mut failures, f_ok, format!("FUSS median {f:?} at Δ={d}"));
        medians.push(format!(
            "Δ={d}: RAND {} FUSS {} STD {}",
            fmt_median(r),
            fmt_median(f),
            fmt_median(median_of(&result, p, tour))
        ));
    }
    let mut slopes = Vec::new();
    for (s, target) in [(rand, 2.0), (tour, 2.0), (fuss, 1.0)] {
        let (value, text) = slope_text(&result, "deceptive2d", s);
        check(
            &mut failures,
            value.is_some_and(|v| (v - target).abs() <= 0.3),
            format!("{text}, target {target} ± 0.3"),
        );
        slopes.push(text);
    }
    let mut detail = format!("{}; {}", medians.join(", "), slopes.join(", "));
    if !failures.is_empty() {
        detail = format!("failed: {}. {detail}", failures.join("; "));
    }
    let scaling = Outcome::new(failures.is_empty(), detail);

    // Ordering at Δ = 0.05, reusing the tournament cell and adding truncation.
    let p05: ProblemSpec = "deceptive2d:0.05".parse().unwrap();
    let mut tspec = SweepSpec::new(vec![p05.clone()], vec![trunc], 200, SEED);
    tspec.budget = spec.budget;
    let tresult = run_sweep(&tspec).unwrap();
    let fuss_m = median_of(&result, &p05, fuss);
    let mut ok = fuss_m.is_some();
    let mut parts = vec![format!("FUSS {}", fmt_median(fuss_m))];
    for (name, cell) in [
        ("tournament(2,1)", result.cell(&p05, tour)),
        ("truncation(0.5)", tresult.cell(&p05, trunc)),
    ] {
        let cell = cell.unwrap();
        // A censored median is at least the budget.
        let std_lower = match cell.median() {
            Median::Value(v) => v,
            Median::Censored => cell.budget as f64,
        };
        let text = match cell.median() {
            Median::Value(v) => format!("{v}"),
            Median::Censored => format!(">={}", cell.budget),
        };
        ok &= fuss_m.is_some_and(|f| f < std_lower);
        parts.push(format!("{name} {text}"));
    }
    (scaling, Outcome::new(ok, parts.join(", ")))
}

fn fmt_median(m: Option<f64>) -> String {
    m.map_or_else(|| "censored".to_string(), |v| v.to_string())
}

fn scaling_3d() -> Outcome {
    let specs = problems(&["deceptiveNd:3:0.2", "deceptiveNd:3:0.1", "deceptiveNd:3:0.05"]);
    let (rand, fuss) = (strategy("random"), strategy("fuss"));
    let trials = 10_000;
    let plain = run_sweep(&SweepSpec::new(specs.clone(), vec![rand, fuss], trials, SEED)).unwrap();
    let mut xspec = SweepSpec::new(specs, vec![fuss], trials, SEED);
    xspec.crossover_rate = 0.5;
    xspec.pair_mode = PairMode::Independent;
    let crossed = run_sweep(&xspec).unwrap();

    let family = "deceptiveNd:3";
    let mut ok = true;
    let mut parts = Vec::new();
    for (result, s, target, label) in [
        (&plain, rand, 3.0, "RAND"),
        (&plain, fuss, 2.0, "FUSS"),
        (&crossed, fuss, 1.0, "FUSS+crossover"),
    ] {
        let fit = result.slope(family, s);
        ok &= fit.is_some_and(|f| (f.slope - target).abs() <= 0.5);
        parts.push(match fit {
            Some(f) => format!("{label} {:.3} (target {target} ± 0.5)", f.slope),
            None => format!("{label} undefined"),
        });
    }
    Outcome::new(ok, parts.join(", "))
}

fn affine_invariance() -> Outcome {
    let mut rng = RandomSource::new(SEED);
    let draws: Vec<f64> = (0..1000).map(|_| rng.uniform()).collect();
    let mut failures = 0usize;
    let mut selections = 0usize;
    for _ in 0..1000 {
        let size = 2 + rng.index(40);
        let discrete = rng.coin();
        let values: Vec<f64> = (0..size)
            .map(|_| {
                if discrete {
                    rng.index(8) as f64 * 0.25
                } else {
                    rng.uniform() * 20.0 - 10.0
                }
            })
            .collect();
        if values.iter().all(|&v| v == values[0]) {
            continue;
        }
        let a = (0.1 + rng.uniform() * 9.9) * if rng.coin() { 1.0 } else { -1.0 };
        let b = rng.uniform() * 200.0 - 100.0;
        let mut base: Population<usize> = Population::new();
        let mut moved: Population<usize> = Population::new();
        for (id, &f) in values.iter().enumerate() {
            base.add(Individual::new(id, f), &mut rng);
            moved.add(Individual::new(id, a * f + b), &mut rng);
        }
        let scale = FitnessScale::continuous();
        let (eps, eps_moved) = (scale.fuss_epsilon(&base), scale.fuss_epsilon(&moved));
        for (k, &u) in draws.iter().enumerate() {
            let seed = k as u64;
            let u_moved = if a > 0.0 { u } else { 1.0 - u };
            let x = fuss_select_at(&base, eps, u, TieRule::Lower, &mut RandomSource::new(seed)).unwrap();
            let y = fuss_select_at(&moved, eps_moved, u_moved, TieRule::Lower, &mut RandomSource::new(seed)).unwrap();
            selections += 1;
            if x.genome() != y.genome() {
                failures += 1;
            }
        }
    }
    Outcome::new(
        failures == 0 && selections > 0,
        format!("{failures} mismatches in {selections} paired selections"),
    )
}

fn line_slowdown() -> Outcome {
    let ns = [8i64, 16, 32, 64];
    let specs: Vec<ProblemSpec> = ns.iter().map(|&n| ProblemSpec::Line { top: n }).collect();
    let (fuss, tour) = (strategy("fuss"), strategy("tournament:2:1"));
    let result = run_sweep(&SweepSpec::new(specs.clone(), vec![fuss, tour], 200, SEED)).unwrap();
    let mut points = Vec::new();
    let mut parts = Vec::new();
    for p in &specs {
        let levels = p.scaling_delta().map(|d| 1.0 / d).unwrap();
        match (median_of(&result, p, fuss), median_of(&result, p, tour)) {
            (Some(f), Some(s)) => {
                points.push((1.0 / levels, f / s));
                parts.push(format!("|F|={levels}: {:.3}", f / s));
            }
            _ => parts.push(format!("|F|={levels}: censored")),
        }
    }
    let fit = (points.len() == specs.len())
        .then(|| fit_loglog_slope(&points).ok())
        .flatten();
    match fit {
        Some(fit) => Outcome::new(
            fit.slope <= 1.4,
            format!(
                "ratio T_FUSS/T_STD {}; growth exponent {:.3} (limit 1.4)",
                parts.join(", "),
                fit.slope
            ),
        ),
        None => Outcome::new(false, format!("exponent undefined: {}", parts.join(", "))),
    }
}

fn tsp_comparison() -> Outcome {
    let source = TspSource::Random { cities: 50, seed: SEED };
    let (fuss, tour) = (strategy("fuss"), strategy("tournament:2:1"));
    let rows = TspComparison::new(source.clone(), vec![fuss, tour], SEED)
        .run()
        .unwrap();
    let med = |name: String| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == name)
            .map(|r| r.best_fitness)
            .collect();
        median(&v).unwrap()
    };
    let (f, s) = (med(fuss.to_string()), med(tour.to_string()));

    // Informational: the same baseline with delete-worst.
    let mut worst = TspComparison::new(source, vec![tour], SEED);
    worst.deletion = Some(DeletionPolicy::Worst);
    let w_rows = worst.run().unwrap();
    let w: Vec<f64> = w_rows.iter().map(|r| r.best_fitness).collect();
    let w = median(&w).unwrap();
    Outcome::new(
        f >= s,
        format!(
            "median best fitness FUSS {f:.4} vs tournament(2,1) {s:.4} (random deletion); \
             informational: delete-worst tournament(2,1) {w:.4}"
        ),
    )
}

fn transform_properties() -> Outcome {
    let counts = [0usize, 2, 8, 20, 30, 20, 10, 5, 3, 2];
    let hist: Vec<(f64, usize)> = counts.iter().enumerate().map(|(i, &n)| (i as f64, n)).collect();
    let scale = FitnessScale::Discrete(1.0);
    let offspring = 100_000;
    let mut rng = RandomSource::new(SEED);
    let mut failures = Vec::new();

    // Truncation: the best half of 100 members starts inside level 4.
    let out = generational_transform(
        &hist,
        SelectionScheme::truncation(0.5).unwrap(),
        scale,
        offspring,
        &mut rng,
    )
    .unwrap();
    let leaked: usize = out.iter().filter(|(f, _)| *f < 4.0).map(|(_, n)| n).sum();
    check(
        &mut failures,
        leaked == 0,
        format!("truncation kept {leaked} below the cutoff"),
    );

    // FUSS against Voronoi cell lengths on the occupied levels 1..=9.
    let out = generational_transform(&hist, SelectionScheme::Fuss, scale, offspring, &mut rng).unwrap();
    let occupied: Vec<f64> = hist.iter().filter(|(_, n)| *n > 0).map(|(f, _)| *f).collect();
    let (lo, hi) = (occupied[0] - 0.5, occupied[occupied.len() - 1] + 0.5);
    let oracle: Vec<f64> = vec![1.0 / (hi - lo); occupied.len()];
    let mut pop: Population<()> = Population::new();
    for &(f, n) in &hist {
        for _ in 0..n {
            pop.add(Individual::new((), f), &mut rng);
        }
    }
    let analytic = fuss_selection_probabilities(&pop, 1.0).unwrap();
    let agree = analytic.iter().zip(&oracle).all(|((_, p), q)| (p - q).abs() < 1e-12);
    check(
        &mut failures,
        agree,
        "analytic FUSS probabilities differ from cell lengths".into(),
    );
    let observed: Vec<f64> = out
        .iter()
        .filter(|(f, _)| occupied.contains(f))
        .map(|(_, n)| *n as f64)
        .collect();
    let chi2: f64 = observed
        .iter()
        .zip(&analytic)
        .map(|(o, (_, p))| {
            let e = p * offspring as f64;
            (o - e).powi(2) / e
        })
        .sum();
    let dof = (occupied.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);
    check(
        &mut failures,
        p_value > 0.001,
        format!("FUSS chi-square p = {p_value:.2e}"),
    );

    // Proportionate: weights n(f)·(f − f_min + ε).
    let out = generational_transform(&hist, SelectionScheme::Proportionate, scale, offspring, &mut rng).unwrap();
    let f_min = occupied[0];
    let weights: Vec<f64> = hist
        .iter()
        .map(|&(f, n)| if n > 0 { n as f64 * (f - f_min + 1.0) } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut worst_z: f64 = 0.0;
    for ((_, n), w) in out.iter().zip(&weights) {
        let p = w / total;
        let e = p * offspring as f64;
        let sd = (offspring as f64 * p * (1.0 - p)).sqrt();
        let z = if sd > 0.0 {
            (*n as f64 - e).abs() / sd
        } else {
            (*n as f64 - e).abs()
        };
        worst_z = worst_z.max(z);
    }
    check(
        &mut failures,
        worst_z <= 4.0,
        format!("proportionate max |z| = {worst_z:.2}"),
    );

    let detail =
        format!("truncation leak {leaked}, FUSS chi-square p = {p_value:.3}, proportionate max |z| = {worst_z:.2}");
    if failures.is_empty() {
        Outcome::new(true, detail)
    } else {
        Outcome::new(false, format!("failed: {}. {detail}", failures.join("; ")))
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

fn main() -> ExitCode {
    let mut report: Vec<(usize, &str, Outcome, Duration, Duration)> = Vec::new();

    let (o, t) = timed(pair_distribution);
    report.push((1, "pair-distribution exactness", o, t, Duration::from_secs(1)));
    let (o, t) = timed(occupation);
    report.push((2, "fitness-uniform occupation", o, t, Duration::from_secs(10)));
    let ((scaling, ordering), t) = timed(scaling_2d);
    report.push((3, "2D scaling laws", scaling, t, Duration::from_secs(120)));
    report.push((
        5,
        "comparative ordering at Δ=0.05",
        ordering,
        t,
        Duration::from_secs(120),
    ));
    let (o, t) = timed(scaling_3d);
    report.push((4, "3D scaling", o, t, Duration::from_secs(600)));
    let (o, t) = timed(affine_invariance);
    report.push((6, "affine invariance", o, t, Duration::from_secs(5)));
    let (o, t) = timed(line_slowdown);
    report.push((7, "line slowdown", o, t, Duration::from_secs(120)));
    let (o, t) = timed(tsp_comparison);
    report.push((8, "TSP comparison", o, t, Duration::from_secs(300)));
    let (o, t) = timed(transform_properties);
    report.push((9, "selection transform properties", o, t, Duration::from_secs(10)));

    report.sort_by_key(|r| r.0);
    let mut failed = 0;
    println!();
    for (n, name, outcome, took, limit) in &report {
        let in_time = took <= limit;
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time {
            format!("{:.2}s", took.as_secs_f64())
        } else {
            format!("{:.2}s exceeds {}s", took.as_secs_f64(), limit.as_secs())
        };
        println!(
            "criterion {n} {}: {name}: {} [{timing}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", report.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
