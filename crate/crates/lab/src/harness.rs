//! Experiment front end: configuration, teacher construction, trial
//! fan-out, the success-rate table, trajectory logging, the
//! overparameterized run, and the verification suite. All file output
//! lives here.

use crate::analysis::claims::{self, ClaimResult, FdKernel};
use crate::empirical::{Dataset, OverparamStudent};
use crate::error::{Error, Result};
use crate::optim::{
    self, AnnealingSchedule, RunResult, SgdConfig, TrajectoryRecord,
};
use crate::population::{self, StudentParams, TeacherParams};
use crate::rng::RngStream;
use crate::sphere::sample_unit_sphere;
use crate::vecmath::norm;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Table1,
    Trajectory,
    Overparam,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pgd,
    Gd,
    Psgd,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgd" => Ok(Algorithm::Pgd),
            "gd" => Ok(Algorithm::Gd),
            "psgd" => Ok(Algorithm::Psgd),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Per-algorithm convention: spurious for the perturbed algorithms,
    /// the random initialization for vanilla GD.
    Auto,
    Spurious,
    Random,
}

impl InitKind {
    pub fn resolve(self, algorithm: Algorithm) -> InitKind {
        match self {
            InitKind::Auto => match algorithm {
                Algorithm::Gd => InitKind::Random,
                Algorithm::Pgd | Algorithm::Psgd => InitKind::Spurious,
            },
            other => other,
        }
    }
}

impl std::str::FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(InitKind::Auto),
            "spurious" => Ok(InitKind::Spurious),
            "random" => Ok(InitKind::Random),
            other => Err(Error::Config(format!("unknown init '{other}'"))),
        }
    }
}

/// Full experiment configuration. Built from per-experiment defaults, then
/// a flat `key = value` config file, then CLI overrides.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub p: usize,
    pub k: usize,
    pub k_grid: Vec<usize>,
    pub ratio_grid: Vec<f64>,
    pub trials: usize,
    /// Balanced-teacher entry magnitude at ratio 0; 0 means "auto": the
    /// success-rate grid fixes the teacher norm (‖a*‖ = 5) across its cells,
    /// the trajectory experiment uses unit entries.
    pub teacher_scale: f64,
    pub algorithm: Algorithm,
    pub init: InitKind,
    pub seed: u64,
    pub tol_a: f64,
    pub tol_phi: f64,
    pub record_every: usize,
    pub out_dir: PathBuf,
    /// Annealed-algorithm schedule knobs; `epochs`/`epoch_iters` of 0 mean
    /// "use the per-algorithm defaults for this experiment".
    pub epochs: usize,
    pub epoch_iters: usize,
    pub eta0: f64,
    pub eta_decay: f64,
    pub rho_w0: f64,
    pub rho_a0: f64,
    pub noise_decay: f64,
    pub gd_eta: f64,
    pub gd_iters: usize,
    pub batch_size: usize,
    /// SGD ball radius; 0 means "auto": `2·max(1, ‖a*‖)` per teacher.
    pub sgd_radius: f64,
    pub n_samples: usize,
    pub op_eta: f64,
    pub op_iters: usize,
    #[serde(skip)]
    pub fd_kernel: FdKernel,
}

impl ExperimentConfig {
    pub fn default_for(experiment: Experiment) -> Self {
        let mut cfg = ExperimentConfig {
            experiment,
            p: 6,
            k: 100,
            k_grid: vec![25, 100],
            ratio_grid: vec![0.0, 4.0, 9.0],
            trials: 100,
            teacher_scale: 0.0,
            algorithm: Algorithm::Pgd,
            init: InitKind::Auto,
            seed: 0,
            tol_a: optim::DEFAULT_TOL_A,
            tol_phi: optim::DEFAULT_TOL_PHI,
            record_every: 10,
            out_dir: PathBuf::from("out"),
            epochs: 0,
            epoch_iters: 0,
            eta0: 0.1,
            eta_decay: 0.8,
            rho_w0: 36.0,
            rho_a0: 1.0,
            noise_decay: 0.4,
            gd_eta: 0.1,
            gd_iters: 8000,
            batch_size: 4,
            sgd_radius: 0.0,
            n_samples: 10_000,
            op_eta: 1e-5,
            op_iters: 100_000,
            fd_kernel: FdKernel::Exact,
        };
        match experiment {
            Experiment::Trajectory => {
                cfg.trials = 10;
            }
            Experiment::Overparam => {
                cfg.p = 15;
                cfg.k = 10;
                cfg.record_every = 1000;
            }
            _ => {}
        }
        cfg
    }

    /// Parses the flat `key = value` config format; `#` starts a comment,
    /// lists are comma-separated.
    pub fn load(experiment: Experiment, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg = Self::default_for(experiment);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected 'key = value'", path.display(), lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
        }
        match key {
            "experiment" => {
                let want = match value {
                    "table1" => Experiment::Table1,
                    "trajectory" => Experiment::Trajectory,
                    "overparam" => Experiment::Overparam,
                    "verify" => Experiment::Verify,
                    other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
                };
                if want != self.experiment {
                    return Err(Error::Config(format!(
                        "config is for experiment '{value}' but the '{:?}' subcommand was invoked",
                        self.experiment
                    )));
                }
            }
            "p" => self.p = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "k_grid" => {
                self.k_grid = value
                    .split(',')
                    .map(|v| num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "ratio_grid" => {
                self.ratio_grid = value
                    .split(',')
                    .map(|v| num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = num(key, value)?,
            "teacher_scale" => self.teacher_scale = num(key, value)?,
            "algorithm" => self.algorithm = value.parse()?,
            "init" => self.init = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            "tol_a" => self.tol_a = num(key, value)?,
            "tol_phi" => self.tol_phi = num(key, value)?,
            "record_every" => self.record_every = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "epochs" => self.epochs = num(key, value)?,
            "epoch_iters" => self.epoch_iters = num(key, value)?,
            "eta0" => self.eta0 = num(key, value)?,
            "eta_decay" => self.eta_decay = num(key, value)?,
            "rho_w0" => self.rho_w0 = num(key, value)?,
            "rho_a0" => self.rho_a0 = num(key, value)?,
            "noise_decay" => self.noise_decay = num(key, value)?,
            "gd_eta" => self.gd_eta = num(key, value)?,
            "gd_iters" => self.gd_iters = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "sgd_radius" => self.sgd_radius = num(key, value)?,
            "n_samples" => self.n_samples = num(key, value)?,
            "op_eta" => self.op_eta = num(key, value)?,
            "op_iters" => self.op_iters = num(key, value)?,
            "fd_kernel" => {
                self.fd_kernel = match value {
                    "exact" => FdKernel::Exact,
                    "corrupted_gphi" => FdKernel::CorruptedGPhi,
                    other => return Err(Error::Config(format!("unknown fd_kernel '{other}'"))),
                }
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.ratio_grid.iter().any(|r| *r < 0.0) {
            return Err(Error::Config("ratio values must be >= 0".into()));
        }
        if self.p < 2 || self.k < 2 {
            return Err(Error::Config("need p >= 2 and k >= 2".into()));
        }
        if self.teacher_scale < 0.0 {
            return Err(Error::Config("teacher_scale must be >= 0".into()));
        }
        Ok(())
    }

    fn pgd_schedule(&self) -> Result<AnnealingSchedule> {
        let (epochs, iters) = match (self.epochs, self.epoch_iters) {
            (0, 0) => match self.experiment {
                Experiment::Trajectory => (10, 1000),
                _ => (20, 400),
            },
            (e, i) => (e.max(1), i.max(1)),
        };
        AnnealingSchedule::geometric(
            epochs,
            iters,
            self.eta0,
            self.eta_decay,
            self.rho_w0,
            self.rho_a0,
            self.noise_decay,
        )
    }

    /// The experiments run SGD with step-size annealing only: the noise
    /// comes from the mini-batch sampling, so the injected radii are zero.
    fn psgd_schedule(&self) -> Result<AnnealingSchedule> {
        let (epochs, iters) = match (self.epochs, self.epoch_iters) {
            (0, 0) => (10, 4000),
            (e, i) => (e.max(1), i.max(1)),
        };
        AnnealingSchedule::geometric(epochs, iters, self.eta0, 0.4, 0.0, 0.0, 0.4)
    }

    fn sgd_config(&self, t: &TeacherParams) -> Result<SgdConfig> {
        let radius = if self.sgd_radius > 0.0 {
            self.sgd_radius
        } else {
            2.0 * norm(t.a_star()).max(1.0)
        };
        SgdConfig::new(self.batch_size, radius, self.psgd_schedule()?)
    }
}

/// One valid realization of the experiment's teacher family: for
/// `ratio = 0`, a* splits into −0.1 and +0.1 halves (odd k keeps one zero
/// entry in the middle, so `1ᵀa* = 0` exactly); for `ratio = r > 0`,
/// `a* = (1/r)·1`, giving `1ᵀa*/‖a*‖² = r`. w* is uniform on the sphere.
pub fn build_teacher(p: usize, k: usize, ratio: f64, rng: &mut RngStream) -> Result<TeacherParams> {
    build_teacher_scaled(p, k, ratio, 1.0, rng)
}

/// Teacher construction with an explicit magnitude for the balanced (ratio = 0)
/// output weights. `scale` only applies at ratio 0: scaling a constant-entry
/// teacher would change its `1ᵀa*/‖a*‖²` ratio.
///
/// The balanced teacher uses a sign-split with entries ±scale, so ‖a*‖² =
/// scale²·k (odd k keeps one zero entry). The escape drift of the annealed
/// algorithms grows with ‖a*‖², while vanilla GD at step 0.1 turns unstable
/// once ‖a*‖² is a few tens; the per-experiment defaults in
/// `ExperimentConfig` pick scales that keep both in their working regimes.
pub fn build_teacher_scaled(
    p: usize,
    k: usize,
    ratio: f64,
    scale: f64,
    rng: &mut RngStream,
) -> Result<TeacherParams> {
    if ratio < 0.0 {
        return Err(Error::InvalidArgument("teacher ratio must be >= 0".into()));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("teacher scale must be > 0".into()));
    }
    let w = sample_unit_sphere(p, rng)?;
    let a = if ratio == 0.0 {
        let mut a = vec![0.0; k];
        for i in 0..k / 2 {
            a[i] = -scale;
            a[k - 1 - i] = scale;
        }
        a
    } else {
        vec![1.0 / ratio; k]
    };
    TeacherParams::new(w, a)
}

fn run_one_trial(
    cfg: &ExperimentConfig,
    k: usize,
    ratio: f64,
    mut rng: RngStream,
) -> Result<RunResult> {
    let scale = if cfg.teacher_scale > 0.0 {
        cfg.teacher_scale
    } else {
        match cfg.experiment {
            Experiment::Table1 => 5.0 / (k as f64).sqrt(),
            _ => 1.0,
        }
    };
    let t = build_teacher_scaled(cfg.p, k, ratio, scale, &mut rng)?;
    match cfg.algorithm {
        Algorithm::Pgd => {
            let init = initial_state(cfg, &t, &mut rng)?;
            optim::run_perturbed_gd(
                init,
                &cfg.pgd_schedule()?,
                &t,
                cfg.record_every,
                cfg.tol_a,
                cfg.tol_phi,
                &mut rng,
            )
        }
        Algorithm::Gd => {
            let init = initial_state(cfg, &t, &mut rng)?;
            optim::run_vanilla_gd(
                init,
                &t,
                cfg.gd_eta,
                cfg.gd_iters,
                cfg.record_every,
                cfg.tol_a,
                cfg.tol_phi,
                rng.seed(),
            )
        }
        Algorithm::Psgd => {
            let init = initial_state(cfg, &t, &mut rng)?;
            optim::run_perturbed_sgd(
                init,
                &cfg.sgd_config(&t)?,
                &t,
                cfg.record_every,
                cfg.tol_a,
                cfg.tol_phi,
                &mut rng,
            )
        }
    }
}

fn initial_state(
    cfg: &ExperimentConfig,
    t: &TeacherParams,
    rng: &mut RngStream,
) -> Result<StudentParams> {
    Ok(match cfg.init.resolve(cfg.algorithm) {
        InitKind::Spurious => population::spurious_optimum(t),
        InitKind::Random => optim::proposition_random_init(t, rng)?,
        InitKind::Auto => unreachable!("resolve() never returns Auto"),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuccessTable {
    pub k_grid: Vec<usize>,
    pub ratio_grid: Vec<f64>,
    /// `rates[i][j]` is the success rate at `(k_grid[i], ratio_grid[j])`.
    pub rates: Vec<Vec<f64>>,
    pub success_counts: Vec<Vec<usize>>,
    pub trials: usize,
}

impl SuccessTable {
    pub fn rate(&self, k: usize, ratio: f64) -> Option<f64> {
        let i = self.k_grid.iter().position(|x| *x == k)?;
        let j = self.ratio_grid.iter().position(|x| *x == ratio)?;
        Some(self.rates[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k");
        for r in &self.ratio_grid {
            write!(out, ",{r}").unwrap();
        }
        out.push('\n');
        for (i, k) in self.k_grid.iter().enumerate() {
            write!(out, "{k}").unwrap();
            for rate in &self.rates[i] {
                write!(out, ",{rate:.2}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

/// The success-rate grid: `trials` independent runs per `(k, ratio)` cell,
/// each on its own derived random stream with a fresh teacher. Writes
/// `table1.csv` (rates, 2 decimals) and `table1.json` (counts + config).
pub fn run_table1(cfg: &ExperimentConfig) -> Result<SuccessTable> {
    let root = RngStream::new(cfg.seed, 0);
    let mut rates = Vec::new();
    let mut counts = Vec::new();
    for (i, &k) in cfg.k_grid.iter().enumerate() {
        let mut row_rates = Vec::new();
        let mut row_counts = Vec::new();
        for (j, &ratio) in cfg.ratio_grid.iter().enumerate() {
            let cell = ((i * cfg.ratio_grid.len() + j) as u64) << 32;
            let successes = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let rng = root.child(cell | trial as u64);
                    run_one_trial(cfg, k, ratio, rng).map(|r| r.succeeded as usize)
                })
                .collect::<Result<Vec<_>>>()?
                .iter()
                .sum::<usize>();
            row_counts.push(successes);
            row_rates.push(successes as f64 / cfg.trials as f64);
        }
        rates.push(row_rates);
        counts.push(row_counts);
    }
    let table = SuccessTable {
        k_grid: cfg.k_grid.clone(),
        ratio_grid: cfg.ratio_grid.clone(),
        rates,
        success_counts: counts,
        trials: cfg.trials,
    };
    write_file(&cfg.out_dir, "table1.csv", &table.to_csv())?;
    #[derive(Serialize)]
    struct TableReport<'a> {
        table: &'a SuccessTable,
        config: &'a ExperimentConfig,
    }
    write_file(
        &cfg.out_dir,
        "table1.json",
        &to_json(&TableReport {
            table: &table,
            config: cfg,
        }),
    )?;
    Ok(table)
}

pub const TRAJECTORY_CSV_HEADER: &str = "trial,epoch,iter,inner_aa,phi,loss";

#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySummary {
    pub trials: usize,
    pub successes: usize,
    /// Per trial: true if `aᵀa*` stays positive from some epoch onward and
    /// the final state passes the success check.
    pub phase_transitions: Vec<bool>,
    pub seeds: Vec<u64>,
}

/// True if there is a record index after which `inner_aa > 0` for every
/// subsequent record.
pub fn has_phase_transition(records: &[TrajectoryRecord]) -> bool {
    match records.iter().rposition(|r| r.inner_aa <= 0.0) {
        None => !records.is_empty(),
        Some(last_bad) => last_bad + 1 < records.len(),
    }
}

/// The §-five trajectory experiment: per-trial runs of the configured
/// annealed algorithm on the balanced teacher, with all trials' records in
/// one CSV (`trajectories.csv`), the across-trial mean in
/// `trajectory_mean.csv`, and a JSON summary.
pub fn run_trajectory(cfg: &ExperimentConfig) -> Result<TrajectorySummary> {
    let root = RngStream::new(cfg.seed, 0);
    let runs = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_one_trial(cfg, cfg.k, 0.0, root.child(trial as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from(TRAJECTORY_CSV_HEADER);
    csv.push('\n');
    for (trial, run) in runs.iter().enumerate() {
        for r in &run.trajectory {
            writeln!(
                csv,
                "{trial},{},{},{},{},{}",
                r.epoch, r.iter, r.inner_aa, r.phi, r.loss
            )
            .unwrap();
        }
    }
    write_file(&cfg.out_dir, "trajectories.csv", &csv)?;

    let mut mean_csv = String::from("epoch,iter,inner_aa,phi,loss\n");
    if let Some(first) = runs.first() {
        for idx in 0..first.trajectory.len() {
            let n = runs.len() as f64;
            let (mut aa, mut phi, mut loss) = (0.0, 0.0, 0.0);
            for run in &runs {
                let r = &run.trajectory[idx];
                aa += r.inner_aa;
                phi += r.phi;
                loss += r.loss;
            }
            let r0 = &first.trajectory[idx];
            writeln!(
                mean_csv,
                "{},{},{},{},{}",
                r0.epoch,
                r0.iter,
                aa / n,
                phi / n,
                loss / n
            )
            .unwrap();
        }
    }
    write_file(&cfg.out_dir, "trajectory_mean.csv", &mean_csv)?;

    let summary = TrajectorySummary {
        trials: cfg.trials,
        successes: runs.iter().filter(|r| r.succeeded).count(),
        phase_transitions: runs
            .iter()
            .map(|r| r.succeeded && has_phase_transition(&r.trajectory))
            .collect(),
        seeds: runs.iter().map(|r| r.seed).collect(),
    };
    write_file(&cfg.out_dir, "trajectory.json", &to_json(&summary))?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct OverparamReport {
    pub n_samples: usize,
    pub initial_loss: f64,
    pub initial_grad_norm: f64,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// Closed-form population loss at the single-filter spurious optimum,
    /// the value the empirical loss should start near.
    pub spurious_population_loss: f64,
    pub dataset_file: PathBuf,
}

/// The one-teacher overparameterized teacher: half the output weights at
/// `1/√10`, half at `−1/√10`.
pub fn overparam_teacher(p: usize, k: usize, rng: &mut RngStream) -> Result<TeacherParams> {
    let w = sample_unit_sphere(p, rng)?;
    let c = 1.0 / 10f64.sqrt();
    let a = (0..k).map(|i| if i < k / 2 { c } else { -c }).collect();
    TeacherParams::new(w, a)
}

/// Appendix-style overparameterized run: freeze a dataset to disk, start
/// both filters at `−w*` with `a₀ = ã` and `b₀ = 0`, run plain GD, and
/// report the loss / gradient-norm trajectory.
pub fn run_overparam(cfg: &ExperimentConfig) -> Result<OverparamReport> {
    let root = RngStream::new(cfg.seed, 0);
    let mut rng = root.child(0);
    let t = overparam_teacher(cfg.p, cfg.k, &mut rng)?;
    let dataset = Dataset::generate(cfg.n_samples, cfg.p, cfg.k, &mut rng)?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(cfg.out_dir.display().to_string(), e))?;
    let dataset_file = cfg.out_dir.join("dataset.bin");
    dataset.write_to(&dataset_file)?;

    let spurious = population::spurious_optimum(&t);
    let init = OverparamStudent {
        w: spurious.w.clone(),
        v: spurious.w.clone(),
        a: spurious.a.clone(),
        b: vec![0.0; cfg.k],
    };
    let (records, _) = optim::run_overparam_gd(
        &dataset,
        init,
        &t,
        cfg.op_eta,
        cfg.op_iters,
        cfg.record_every,
    )?;

    let mut csv = String::from("iter,loss,grad_norm\n");
    for r in &records {
        writeln!(csv, "{},{},{}", r.iter, r.loss, r.grad_norm).unwrap();
    }
    write_file(&cfg.out_dir, "overparam.csv", &csv)?;

    let first = records.first().expect("overparam run always records");
    let last = records.last().expect("overparam run always records");
    let report = OverparamReport {
        n_samples: cfg.n_samples,
        initial_loss: first.loss,
        initial_grad_norm: first.grad_norm,
        final_loss: last.loss,
        final_grad_norm: last.grad_norm,
        spurious_population_loss: population::population_loss(&spurious, &t)?,
        dataset_file,
    };
    write_file(&cfg.out_dir, "overparam.json", &to_json(&report))?;
    Ok(report)
}

/// Runs the full claim suite, writes `verify.json` and `verify.txt`, and
/// returns the results; the caller decides the exit status.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Vec<ClaimResult>> {
    let results = claims::run_all_with(cfg.seed, cfg.fd_kernel)?;
    write_file(&cfg.out_dir, "verify.json", &to_json(&results))?;
    let mut txt = String::new();
    for c in &results {
        writeln!(
            txt,
            "{:<34} estimate={:<14.6e} se={:<12.3e} tol={:<12.3e} {}",
            c.claim_id,
            c.estimate,
            c.std_error,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    write_file(&cfg.out_dir, "verify.txt", &txt)?;
    Ok(results)
}
