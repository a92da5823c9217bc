//! End-to-end acceptance suite. Each numbered criterion prints one
//! `[PASS]`/`[FAIL]` line (run with `--nocapture` to see them as they
//! complete); the test fails if any criterion fails.
//!
//! The criteria intentionally re-derive their expectations from scratch
//! (fresh teachers, fresh seeds, closed-form oracles) rather than reusing
//! the unit-test fixtures.

use std::f64::consts::PI;
use std::path::Path;

use lab::analysis::{self, claims};
use lab::empirical::{self, Dataset, OverparamStudent};
use lab::harness::{self, Algorithm, Experiment, ExperimentConfig};
use lab::population::{self, StudentParams, TeacherParams};
use lab::rng::RngStream;
use lab::sphere::{self, BallSpec, UnitVector};

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<Outcome>, id: usize, name: &'static str, pass: bool, detail: String) {
    println!(
        "criterion {id:2} [{}] {name} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    results.push(Outcome {
        id,
        name,
        pass,
        detail,
    });
}

/// Random teacher with Gaussian-ball output weights; stationarity of the
/// spurious point must hold for arbitrary `a*`.
fn random_teacher(p: usize, k: usize, rng: &mut RngStream) -> TeacherParams {
    let w = sphere::sample_unit_sphere(p, rng).unwrap();
    let a = sphere::sample_unit_ball(&BallSpec::new(k, 3.0).unwrap(), rng);
    TeacherParams::new(w, a).unwrap()
}

fn random_student(p: usize, k: usize, rng: &mut RngStream) -> StudentParams {
    let w = sphere::sample_unit_sphere(p, rng).unwrap();
    let a = sphere::sample_unit_ball(&BallSpec::new(k, 2.0).unwrap(), rng);
    StudentParams::new(w, a)
}

// 1. The analytically constructed spurious point is stationary: both the
//    a-gradient and the manifold w-gradient vanish there.
fn criterion_1() -> (bool, String) {
    let mut rng = RngStream::new(101, 0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let k = [10, 25, 100][i % 3];
        let t = random_teacher(6, k, &mut rng);
        let s = population::spurious_optimum(&t);
        let ga = population::grad_a(&s, &t).unwrap();
        let gw = population::manifold_grad_w(&s, &t).unwrap();
        worst = worst.max(vnorm(&ga)).max(vnorm(&gw));
    }
    (worst <= 1e-10, format!("max gradient norm {worst:.2e}"))
}

// 2. Finite-difference agreement of the closed-form gradients and the
//    finite-sample overparameterized gradients.
fn criterion_2() -> (bool, String) {
    let mut rng = RngStream::new(102, 0);
    let mut worst_a: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for _ in 0..100 {
        let t = random_teacher(6, 10, &mut rng);
        let s = random_student(6, 10, &mut rng);
        worst_a = worst_a.max(analysis::fd_check_population_a(&s, &t, 1e-5).unwrap());
        worst_w = worst_w.max(analysis::fd_check_population_w(&s, &t, 1e-6).unwrap());
    }
    let mut worst_op: f64 = 0.0;
    let d = Dataset::generate(100, 6, 10, &mut rng).unwrap();
    for _ in 0..100 {
        let t = random_teacher(6, 10, &mut rng);
        // the a/b block of the empirical loss is smooth in (a, b) for any
        // fixed filters, so every point is kink-safe for this check
        let s = OverparamStudent {
            w: sphere::sample_unit_sphere(6, &mut rng).unwrap(),
            v: sphere::sample_unit_sphere(6, &mut rng).unwrap(),
            a: sphere::sample_unit_ball(&BallSpec::new(10, 1.0).unwrap(), &mut rng),
            b: sphere::sample_unit_ball(&BallSpec::new(10, 1.0).unwrap(), &mut rng),
        };
        worst_op = worst_op.max(analysis::fd_check_overparam(&d, &s, &t, 1e-5).unwrap());
    }
    (
        worst_a <= 1e-6 && worst_w <= 1e-5 && worst_op <= 1e-6,
        format!("max rel err a {worst_a:.2e}, w {worst_w:.2e}, overparam {worst_op:.2e}"),
    )
}

// 3. The per-sample stochastic gradient is an unbiased estimate of the
//    closed-form gradients: 10⁶-sample means within 4 SE per coordinate.
fn criterion_3() -> (bool, String) {
    let mut rng = RngStream::new(103, 0);
    let n = 1_000_000usize;
    let mut worst_z: f64 = 0.0;
    for _ in 0..5 {
        let t = random_teacher(6, 10, &mut rng);
        let s = random_student(6, 10, &mut rng);
        let gw_ref = population::grad_w(&s, &t).unwrap();
        let ga_ref = population::grad_a(&s, &t).unwrap();
        let mut acc = analysis::VecMeanAccumulator::new(16);
        let mut joint = vec![0.0; 16];
        for _ in 0..n {
            let z = empirical::sample_input(6, 10, &mut rng).unwrap();
            let (gw, ga) = empirical::sample_grad(&z, &s, &t).unwrap();
            joint[..6].copy_from_slice(&gw);
            joint[6..].copy_from_slice(&ga);
            acc.push(&joint);
        }
        let (mean, se) = acc.finish();
        let reference: Vec<f64> = gw_ref.iter().chain(ga_ref.iter()).copied().collect();
        for i in 0..16 {
            let z = (mean[i] - reference[i]).abs() / se[i].max(1e-300);
            worst_z = worst_z.max(z);
        }
    }
    (worst_z <= 4.0, format!("max |z|-score {worst_z:.2}"))
}

// 4. Expectation bounds on the smoothed angle kernel at the working noise
//    scale ρ_w = 36: E g(φ_ξ) ∈ (1, π], E φ_ξ ≤ 3π/4.
fn criterion_4() -> (bool, String) {
    let mut rng = RngStream::new(104, 0);
    let n = 1_000_000usize;
    let w_star = UnitVector::basis(6, 0).unwrap();
    let aligned = w_star.clone();
    let antipodal = w_star.negated();
    let orthogonal = UnitVector::basis(6, 1).unwrap();
    let mut pass = true;
    let mut lo: f64 = f64::INFINITY;
    let mut hi: f64 = f64::NEG_INFINITY;
    for w in [&aligned, &antipodal, &orthogonal] {
        let g = analysis::mc_expected_gphi(w, &w_star, 36.0, n, &mut rng).unwrap();
        let phi = analysis::mc_expected_phi(w, &w_star, 36.0, n, &mut rng).unwrap();
        pass &= g.mean - 3.0 * g.std_error > 1.0;
        pass &= g.mean + 3.0 * g.std_error <= PI + 0.01;
        pass &= phi.mean - 3.0 * phi.std_error <= 3.0 * PI / 4.0;
        lo = lo.min(g.mean);
        hi = hi.max(g.mean);
    }
    (pass, format!("E g(φ_ξ) in [{lo:.4}, {hi:.4}] across starts"))
}

// 5. Infinite-noise limit of the smoothed kernel: the Gamma-ratio value
//    for E g(φ_ξ) and π/2 for E φ_ξ.
fn criterion_5() -> (bool, String) {
    let mut rng = RngStream::new(105, 0);
    let n = 1_000_000usize;
    let w_star = UnitVector::basis(6, 0).unwrap();
    let w = UnitVector::basis(6, 2).unwrap();
    let g = analysis::mc_expected_gphi(&w, &w_star, 1e4, n, &mut rng).unwrap();
    let phi = analysis::mc_expected_phi(&w, &w_star, 1e4, n, &mut rng).unwrap();
    let g_err = (g.mean - 1.0865).abs();
    let phi_err = (phi.mean - PI / 2.0).abs();
    (
        g_err <= 3.0 * g.std_error + 0.01 && phi_err <= 3.0 * phi.std_error + 0.05,
        format!("E g = {:.4} (dev {g_err:.1e}), E φ = {:.4} (dev {phi_err:.1e})", g.mean, phi.mean),
    )
}

// 6. Exact per-draw bracket for the perturbed angle in the small-noise
//    regime: every sampled φ_ξ lies within ±arcsin(ρ) of φ.
fn criterion_6() -> (bool, String) {
    let mut rng = RngStream::new(106, 0);
    let phi = PI / 3.0;
    let rho = 0.1f64;
    let w_star = UnitVector::basis(6, 0).unwrap();
    let u = UnitVector::basis(6, 3).unwrap();
    let w_vec: Vec<f64> = w_star
        .as_slice()
        .iter()
        .zip(u.as_slice())
        .map(|(a, b)| phi.cos() * a + phi.sin() * b)
        .collect();
    let w = sphere::project_to_sphere(&w_vec).unwrap();
    let (lo, hi) = (phi - rho.asin(), phi + rho.asin());
    let mut violations = 0usize;
    for _ in 0..100_000 {
        let sample = analysis::sample_perturbed_angle(&w, &w_star, rho, &mut rng).unwrap();
        if sample < lo || sample > hi {
            violations += 1;
        }
    }
    (violations == 0, format!("{violations} violations in 10⁵ draws"))
}

// 7. Partial dissipativity of the perturbed gradients over the two working
//    regions, 3-SE margins at 20 sampled members each.
fn criterion_7() -> (bool, String) {
    let mut rng = RngStream::new(107, 0);
    let t = claims::balanced_teacher(6, 25, &mut rng).unwrap();
    let asq: f64 = t.a_star().iter().map(|x| x * x).sum();
    let n = 100_000usize;
    let mut min_margin = f64::INFINITY;
    for _ in 0..20 {
        let s = analysis::sample_region_a_member(&t, 0.1, 0.5, &mut rng).unwrap();
        let est = analysis::dissipativity_a(&s, &t, 36.0, 1.0, n, &mut rng).unwrap();
        min_margin = min_margin.min(est.mean - 3.0 * est.std_error);
    }
    let mut min_margin_w = f64::INFINITY;
    for _ in 0..20 {
        let s = analysis::sample_region_k_member(&t, 0.1, 0.2 * asq, asq, &mut rng).unwrap();
        let dist2: f64 = s
            .w
            .as_slice()
            .iter()
            .zip(t.w_star().as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(dist2 >= 0.5, "K-member separation ‖w−w*‖² = {dist2}");
        let est = analysis::dissipativity_w(&s, &t, 0.01, 0.01, n, &mut rng).unwrap();
        min_margin_w = min_margin_w.min(est.mean - 3.0 * est.std_error);
    }
    (
        min_margin > 0.0 && min_margin_w > 0.0,
        format!("min 3-SE margin: a-region {min_margin:.2e}, w-region {min_margin_w:.2e}"),
    )
}

fn table_config(algorithm: Algorithm, ratios: Vec<f64>, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_for(Experiment::Table1);
    cfg.k_grid = vec![25, 100];
    cfg.ratio_grid = ratios;
    cfg.trials = 100;
    cfg.seed = 2024;
    cfg.algorithm = algorithm;
    cfg.out_dir = out.to_path_buf();
    cfg
}

// 8. Success-rate grid at 100 trials per cell: the annealed algorithm
//    escapes the spurious start everywhere tested; plain GD from the random
//    init is trapped about half the time in the hard column and recovers
//    fully in the easy one.
fn criterion_8(dir: &Path) -> (bool, String) {
    let pgd = harness::run_table1(&table_config(Algorithm::Pgd, vec![0.0, 4.0], &dir.join("pgd")))
        .unwrap();
    let gd =
        harness::run_table1(&table_config(Algorithm::Gd, vec![0.0, 9.0], &dir.join("gd"))).unwrap();
    let p = [
        pgd.rate(25, 0.0).unwrap(),
        pgd.rate(25, 4.0).unwrap(),
        pgd.rate(100, 0.0).unwrap(),
    ];
    let g = [
        gd.rate(25, 0.0).unwrap(),
        gd.rate(100, 0.0).unwrap(),
        gd.rate(25, 9.0).unwrap(),
    ];
    let pass = p.iter().all(|r| *r == 1.0)
        && g[0] >= 0.35
        && g[0] <= 0.65
        && g[1] >= 0.35
        && g[1] <= 0.65
        && g[2] == 1.0;
    (
        pass,
        format!(
            "pgd (25,0)/(25,4)/(100,0) = {:.2}/{:.2}/{:.2}; gd (25,0)/(100,0)/(25,9) = {:.2}/{:.2}/{:.2}",
            p[0], p[1], p[2], g[0], g[1], g[2]
        ),
    )
}

fn trajectory_config(algorithm: Algorithm, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_for(Experiment::Trajectory);
    cfg.seed = 2024;
    cfg.algorithm = algorithm;
    cfg.record_every = 50;
    cfg.out_dir = out.to_path_buf();
    cfg
}

// 9. Phase transition in the per-iteration trajectories: in at least 9 of
//    10 seeded runs, aᵀa* stays positive from some epoch onward and the
//    final iterate recovers the teacher — for both annealed algorithms.
fn criterion_9(dir: &Path) -> (bool, String) {
    let pgd =
        harness::run_trajectory(&trajectory_config(Algorithm::Pgd, &dir.join("pgd"))).unwrap();
    let psgd =
        harness::run_trajectory(&trajectory_config(Algorithm::Psgd, &dir.join("psgd"))).unwrap();
    let count = |s: &harness::TrajectorySummary| {
        s.phase_transitions.iter().filter(|x| **x).count().min(s.successes)
    };
    let (a, b) = (count(&pgd), count(&psgd));
    (
        a >= 9 && b >= 9,
        format!("pgd {a}/10, sgd {b}/10 runs with phase transition + recovery"),
    )
}

// 10. Overparameterized finite-sample run from the single-filter spurious
//     point: starts near-stationary at the closed-form spurious loss and is
//     still far from zero loss after 10⁵ steps.
fn criterion_10(dir: &Path) -> (bool, String) {
    let mut cfg = ExperimentConfig::default_for(Experiment::Overparam);
    cfg.seed = 2024;
    cfg.out_dir = dir.join("overparam");
    let r = harness::run_overparam(&cfg).unwrap();
    let pass = r.initial_grad_norm < 0.05
        && (r.initial_loss - r.spurious_population_loss).abs() <= 0.05
        && r.final_loss > 0.1
        && r.final_grad_norm <= r.initial_grad_norm;
    (
        pass,
        format!(
            "loss {:.4} → {:.4} (spurious closed form {:.4}), grad {:.2e} → {:.2e}",
            r.initial_loss,
            r.final_loss,
            r.spurious_population_loss,
            r.initial_grad_norm,
            r.final_grad_norm
        ),
    )
}

// 11. Determinism: rerunning the grid and trajectory experiments with the
//     same seeds reproduces every output file byte for byte.
fn criterion_11(dir: &Path) -> (bool, String) {
    let files = [
        "c8/pgd/table1.csv",
        "c8/pgd/table1.json",
        "c8/gd/table1.csv",
        "c8/gd/table1.json",
        "c9/pgd/trajectories.csv",
        "c9/pgd/trajectory_mean.csv",
        "c9/pgd/trajectory.json",
        "c9/psgd/trajectories.csv",
        "c9/psgd/trajectory_mean.csv",
        "c9/psgd/trajectory.json",
    ];
    let snapshot: Vec<Vec<u8>> = files
        .iter()
        .map(|f| std::fs::read(dir.join(f)).unwrap())
        .collect();
    // rerun into the same directories with the same configs
    let c8 = dir.join("c8");
    harness::run_table1(&table_config(Algorithm::Pgd, vec![0.0, 4.0], &c8.join("pgd"))).unwrap();
    harness::run_table1(&table_config(Algorithm::Gd, vec![0.0, 9.0], &c8.join("gd"))).unwrap();
    let c9 = dir.join("c9");
    harness::run_trajectory(&trajectory_config(Algorithm::Pgd, &c9.join("pgd"))).unwrap();
    harness::run_trajectory(&trajectory_config(Algorithm::Psgd, &c9.join("psgd"))).unwrap();
    let mut differing = Vec::new();
    for (f, before) in files.iter().zip(&snapshot) {
        let after = std::fs::read(dir.join(f)).unwrap();
        if *before != after {
            differing.push(*f);
        }
    }
    (
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} output files byte-identical across reruns", files.len())
        } else {
            format!("differs: {differing:?}")
        },
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut results = Vec::new();

    let (pass, detail) = criterion_1();
    record(&mut results, 1, "spurious-point stationarity", pass, detail);
    let (pass, detail) = criterion_2();
    record(&mut results, 2, "finite-difference gradient checks", pass, detail);
    let (pass, detail) = criterion_3();
    record(&mut results, 3, "stochastic-gradient unbiasedness", pass, detail);
    let (pass, detail) = criterion_4();
    record(&mut results, 4, "smoothed-kernel bounds at working noise", pass, detail);
    let (pass, detail) = criterion_5();
    record(&mut results, 5, "infinite-noise kernel limit", pass, detail);
    let (pass, detail) = criterion_6();
    record(&mut results, 6, "small-noise angle bracket", pass, detail);
    let (pass, detail) = criterion_7();
    record(&mut results, 7, "partial dissipativity over regions", pass, detail);
    let (pass, detail) = criterion_8(&root.join("c8"));
    record(&mut results, 8, "success-rate grid", pass, detail);
    let (pass, detail) = criterion_9(&root.join("c9"));
    record(&mut results, 9, "trajectory phase transition", pass, detail);
    let (pass, detail) = criterion_10(root);
    record(&mut results, 10, "overparameterized near-stationarity", pass, detail);
    let (pass, detail) = criterion_11(root);
    record(&mut results, 11, "byte-identical reruns", pass, detail);

    let failed: Vec<String> = results
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("criterion {} ({}): {}", o.id, o.name, o.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
