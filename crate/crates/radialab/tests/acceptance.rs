//! End-to-end checks of every headline numerical claim, one test per
//! criterion, each printing a single PASS line with its runtime and
//! enforcing a wall-clock budget. Run with `--nocapture` to see the lines.

use std::time::Instant;

use radialab::distributions::{build_law, RadialLaw};
use radialab::experiments::{self, deterministic_limit_gap, ExperimentConfig, ExperimentKind, ShapeConfig};
use radialab::numerics::special::{ln_gamma, normal_cdf};
use radialab::numerics::stats::KS_COEF_01;
use radialab::sampling::{sample_magnitudes, sample_vectors};
use radialab::shapes::ShapeSpec;

const TOL: f64 = 1e-10;
const SEED: u64 = 42;

/// One acceptance criterion: named, budgeted, and loud about its verdict.
struct Criterion {
    name: &'static str,
    budget_s: f64,
    started: Instant,
}

impl Criterion {
    fn start(name: &'static str, budget_s: f64) -> Self {
        Criterion {
            name,
            budget_s,
            started: Instant::now(),
        }
    }

    fn ensure(&self, ok: bool, detail: &str) {
        if !ok {
            println!("{}: FAIL ({detail})", self.name);
            panic!("{}: {detail}", self.name);
        }
    }

    fn pass(self) {
        let elapsed = self.started.elapsed().as_secs_f64();
        if elapsed > self.budget_s {
            println!(
                "{}: FAIL (ran {elapsed:.1}s, budget {:.0}s)",
                self.name, self.budget_s
            );
            panic!("{} exceeded its runtime budget", self.name);
        }
        println!(
            "{}: PASS ({elapsed:.1}s <= {:.0}s)",
            self.name, self.budget_s
        );
    }
}

fn law(shape: &ShapeSpec, d: f64) -> RadialLaw {
    build_law(shape, d, TOL).unwrap_or_else(|e| panic!("law for {} at d={d}: {e}", shape.id()))
}

fn is_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn criterion_1_gaussian_exactness_chain() {
    let c = Criterion::start("criterion 1 (gaussian exactness chain)", 5.0);
    let shape = ShapeSpec::gaussian();
    for d in 1..=50u32 {
        let df = f64::from(d);
        let l = law(&shape, df);
        let closed = 0.5 * (df - 1.0) * std::f64::consts::LN_2 + ln_gamma((df + 1.0) / 2.0);
        let rel = (l.log_inv_cd() - closed).abs() / closed.abs().max(1.0);
        c.ensure(
            rel <= 1e-9,
            &format!("log_inv_cd at d={d}: {} vs {closed} (rel {rel:.2e})", l.log_inv_cd()),
        );
        let ud_rel = (l.u_d() - df.sqrt()).abs() / df.sqrt();
        c.ensure(ud_rel <= 1e-10, &format!("u_d at d={d}: rel {ud_rel:.2e}"));
        let nu = l.nu_d().expect("gaussian concentration scale");
        let nu_rel = (nu - 2.0 * df).abs() / (2.0 * df);
        c.ensure(nu_rel <= 1e-10, &format!("nu_d at d={d}: rel {nu_rel:.2e}"));
    }
    c.pass();
}

#[test]
fn criterion_2_compact_gamma_limit() {
    let c = Criterion::start("criterion 2 (compact Gamma limit)", 30.0);
    let shapes = [
        ShapeSpec::uniform_ball(),
        ShapeSpec::triangle(),
        ShapeSpec::power_compact(3.0, 2.0, 1.0).unwrap(),
    ];
    for shape in &shapes {
        let mut gaps = Vec::new();
        for d in [10.0, 100.0, 1000.0] {
            let l = law(shape, d);
            let lim = l.limit_law().unwrap();
            gaps.push(deterministic_limit_gap(&l, &lim));
        }
        c.ensure(
            is_decreasing(&gaps),
            &format!("{}: gaps not decreasing: {gaps:?}", shape.id()),
        );
        c.ensure(
            gaps[2] <= 0.01,
            &format!("{}: gap at d=1000 is {}", shape.id(), gaps[2]),
        );
    }
    c.pass();
}

#[test]
fn criterion_3_noncompact_normal_limit() {
    let c = Criterion::start("criterion 3 (non-compact normal limit)", 120.0);
    let mut shapes = vec![ShapeSpec::gaussian()];
    for beta in [1.0, 2.0, 3.0] {
        for alpha in [0.0, 1.0] {
            shapes.push(ShapeSpec::log_poly(1.0, 0.0, 1.0, alpha, beta).unwrap());
        }
    }
    for (i, shape) in shapes.iter().enumerate() {
        let tag = if i == 0 {
            shape.id().to_owned()
        } else {
            format!("{} variant {i}", shape.id())
        };
        let mut gaps = Vec::new();
        for d in [10.0, 100.0, 1000.0, 10_000.0] {
            let l = law(shape, d);
            let lim = l.limit_law().unwrap();
            gaps.push(deterministic_limit_gap(&l, &lim));
        }
        c.ensure(
            is_decreasing(&gaps),
            &format!("{tag}: gaps not decreasing: {gaps:?}"),
        );
        c.ensure(
            gaps[3] <= 0.02,
            &format!("{tag}: gap at d=10000 is {}", gaps[3]),
        );
    }
    c.pass();
}

#[test]
fn criterion_4_constant_asymptotics() {
    let c = Criterion::start("criterion 4 (normalizing-constant asymptotics)", 60.0);
    let dims = [100.0, 1000.0, 10_000.0];

    let gaussian = ShapeSpec::gaussian();
    let mut deltas = Vec::new();
    for &d in &dims {
        let l = law(&gaussian, d);
        // The quadrature value itself is pinned to the closed form, so the
        // asymptotic is compared against ground truth, not merely itself.
        let closed = 0.5 * (d - 1.0) * std::f64::consts::LN_2 + ln_gamma((d + 1.0) / 2.0);
        c.ensure(
            (l.log_inv_cd() - closed).abs() <= 1e-8 * closed.abs(),
            &format!("quadrature drifted from closed form at d={d}"),
        );
        deltas.push((l.asym_log_inv_cd().unwrap() - l.log_inv_cd()).abs());
    }
    c.ensure(
        is_decreasing(&deltas),
        &format!("gaussian deltas not decreasing: {deltas:?}"),
    );
    c.ensure(
        deltas[2] <= 0.01,
        &format!("gaussian delta at d=10000 is {}", deltas[2]),
    );

    let logpoly = ShapeSpec::log_poly(1.0, 0.0, 1.0, 0.0, 2.0).unwrap();
    let mut deltas = Vec::new();
    for &d in &dims {
        let l = law(&logpoly, d);
        deltas.push((l.asym_log_inv_cd().unwrap() - l.log_inv_cd()).abs());
    }
    c.ensure(
        is_decreasing(&deltas),
        &format!("logpoly deltas not decreasing: {deltas:?}"),
    );
    c.ensure(
        deltas[2] <= 0.05,
        &format!("logpoly delta at d=10000 is {}", deltas[2]),
    );
    c.pass();
}

#[test]
fn criterion_5_concentration_radius_expansion() {
    let c = Criterion::start("criterion 5 (radius expansion)", 10.0);
    // alpha = 0: the expansion is exact, so the ratio is pinned tightly.
    for (cc, beta) in [(1.0, 2.0), (3.0, 1.0), (0.5, 3.0)] {
        let shape = ShapeSpec::log_poly(1.0, 0.0, cc, 0.0, beta).unwrap();
        for d in [100.0, 10_000.0, 1_000_000.0, 100_000_000.0] {
            let l = law(&shape, d);
            let asym = radialab::distributions::example1_ud_asymptotic(cc, 0.0, beta, d);
            let ratio = l.mode_radius().unwrap() / asym;
            c.ensure(
                (0.999..=1.001).contains(&ratio),
                &format!("alpha=0 c={cc} beta={beta} d={d}: ratio {ratio}"),
            );
        }
    }
    // Log corrections decay slowly; require the trend, not closeness.
    for (alpha, beta) in [(1.0, 1.0), (-1.0, 2.0)] {
        let shape = ShapeSpec::log_poly(1.0, 0.0, 1.0, alpha, beta).unwrap();
        let mut errs = Vec::new();
        for d in [1e4, 1e6, 1e8] {
            let l = law(&shape, d);
            let asym = radialab::distributions::example1_ud_asymptotic(1.0, alpha, beta, d);
            errs.push((l.mode_radius().unwrap() / asym - 1.0).abs());
        }
        c.ensure(
            is_decreasing(&errs),
            &format!("alpha={alpha} beta={beta}: |ratio-1| not decreasing: {errs:?}"),
        );
    }
    c.pass();
}

#[test]
fn criterion_6_sampling_correctness() {
    let c = Criterion::start("criterion 6 (sampling correctness)", 60.0);
    let n = 100_000;
    let crit = KS_COEF_01 / (n as f64).sqrt();
    let builtins = [
        ShapeSpec::uniform_ball(),
        ShapeSpec::triangle(),
        ShapeSpec::gaussian(),
        ShapeSpec::log_poly(1.0, 0.0, 1.0, 0.0, 2.0).unwrap(),
        ShapeSpec::power_compact(3.0, 2.0, 1.0).unwrap(),
    ];
    for shape in &builtins {
        for d in [3.0, 100.0] {
            let l = law(shape, d);
            let batch = sample_magnitudes(&l, n, SEED, 0);
            let mut pit: Vec<f64> = batch.values.iter().map(|&u| l.cdf(u)).collect();
            pit.sort_by(f64::total_cmp);
            let ks = radialab::numerics::stats::ks_statistic(&pit, |p| p.clamp(0.0, 1.0)).unwrap();
            c.ensure(
                ks < crit,
                &format!("{} d={d}: PIT KS {ks:.5} over {crit:.5}", shape.id()),
            );
        }
    }

    // Gaussian vectors are exactly iid standard normal coordinates.
    let l = law(&ShapeSpec::gaussian(), 9.0);
    let nv = 20_000;
    let batch = sample_vectors(&l, nv, SEED, 1).unwrap();
    let coord_crit = KS_COEF_01 / (nv as f64).sqrt();
    for j in 0..batch.ambient_dim {
        let mut coord: Vec<f64> = (0..nv)
            .map(|i| batch.values[i * batch.ambient_dim + j])
            .collect();
        coord.sort_by(f64::total_cmp);
        let ks = radialab::numerics::stats::ks_statistic(&coord, normal_cdf).unwrap();
        c.ensure(
            ks < coord_crit,
            &format!("coordinate {j}: KS {ks:.5} over {coord_crit:.5}"),
        );
    }
    c.pass();
}

#[test]
fn criterion_7_indistinguishability_power() {
    let c = Criterion::start("criterion 7 (indistinguishability power)", 180.0);
    let mut config = ExperimentConfig::defaults(ExperimentKind::Indistinguishability);
    config.master_seed = SEED;
    let report = experiments::run(&config).unwrap();
    let power_at = |d: f64| {
        report
            .rows
            .iter()
            .find(|r| r.d == d && r.statistic == "power")
            .map(|r| r.value)
            .unwrap_or_else(|| panic!("no power row at d={d}"))
    };
    let powers: Vec<f64> = config.d_grid.iter().map(|&d| power_at(d)).collect();

    // Nonincreasing trend, allowing one inversion within 2 MC standard
    // errors of the binomial estimate.
    let reps = config.replicates as f64;
    let mut inversions = 0;
    for w in powers.windows(2) {
        if w[1] > w[0] {
            inversions += 1;
            let se = (w[0].max(1e-3) * (1.0 - w[0].max(1e-3)) / reps).sqrt();
            c.ensure(
                w[1] - w[0] <= 2.0 * se,
                &format!("inversion {} -> {} beyond 2 SE", w[0], w[1]),
            );
        }
    }
    c.ensure(
        inversions <= 1,
        &format!("more than one inversion in power trend: {powers:?}"),
    );
    c.ensure(
        powers[3] <= 0.15,
        &format!("power at d=250 is {}", powers[3]),
    );

    // Null calibration: identical shapes, so rejections track the level.
    let mut null_config = ExperimentConfig::defaults(ExperimentKind::Indistinguishability);
    null_config.shapes = vec![
        ShapeConfig::new("uniform-ball"),
        ShapeConfig::new("uniform-ball"),
    ];
    null_config.d_grid = vec![5.0];
    null_config.n = 1000;
    null_config.master_seed = SEED;
    let null_report = experiments::run(&null_config).unwrap();
    let level = null_report
        .rows
        .iter()
        .find(|r| r.statistic == "power")
        .unwrap()
        .value;
    c.ensure(
        (level - 0.05).abs() <= 0.03,
        &format!("null rejection rate {level} outside 0.05 +/- 0.03"),
    );
    c.pass();
}

#[test]
fn criterion_8_reports_reproducible_across_threads() {
    let c = Criterion::start("criterion 8 (thread-count reproducibility)", 60.0);
    let bin = env!("CARGO_BIN_EXE_radialab");
    let dir = tempfile::tempdir().unwrap();
    for (experiment, extra) in [
        ("indistinguishability", vec!["--dims", "2,10", "--n", "100", "--replicates", "16"]),
        ("limit-ks", vec!["--shape", "gaussian", "--dims", "10,100", "--n", "2000"]),
    ] {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let out = dir.path().join(format!("{experiment}_{threads}.csv"));
            let status = std::process::Command::new(bin)
                .arg(experiment)
                .args(&extra)
                .args(["--seed", "42", "--out"])
                .arg(&out)
                .env("RADIALAB_THREADS", threads)
                .status()
                .expect("spawn radialab");
            c.ensure(
                status.success(),
                &format!("{experiment} with {threads} workers exited {status}"),
            );
            outputs.push(std::fs::read(&out).unwrap());
        }
        c.ensure(
            outputs[0] == outputs[1],
            &format!("{experiment}: reports differ between 1 and 8 workers"),
        );
    }
    c.pass();
}
