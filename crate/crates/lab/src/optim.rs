//! The optimizers: perturbed gradient descent with noise annealing
//! (Algorithm 1), its noiseless reduction, perturbed mini-batch SGD with a
//! ball constraint on the output weights, and plain GD on the
//! overparameterized empirical loss.

use crate::empirical::{self, Dataset, OverparamGrad, OverparamStudent};
use crate::error::{Error, Result};
use crate::population::{self, StudentParams, TeacherParams};
use crate::rng::RngStream;
use crate::sphere::{
    angle, project_to_sphere, sample_unit_ball, sample_unit_sphere, tangent_project, BallSpec,
};
use crate::vecmath::{add, add_scaled, dist2, dot, norm};

/// One annealing epoch: `iters` is the epoch length `T_s` (the inner loop
/// runs `T_s − 1` update steps), `step` the learning rate, and
/// `noise_w`/`noise_a` the uniform-ball radii.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochSpec {
    pub iters: usize,
    pub step: f64,
    pub noise_w: f64,
    pub noise_a: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnealingSchedule {
    epochs: Vec<EpochSpec>,
}

impl AnnealingSchedule {
    pub fn new(epochs: Vec<EpochSpec>) -> Result<Self> {
        if epochs.is_empty() {
            return Err(Error::InvalidArgument("schedule needs >= 1 epoch".into()));
        }
        for (i, e) in epochs.iter().enumerate() {
            if e.iters < 1 || !(e.step > 0.0) || e.noise_w < 0.0 || e.noise_a < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "epoch {i}: need iters >= 1, step > 0, noise radii >= 0"
                )));
            }
        }
        for pair in epochs.windows(2) {
            if pair[1].noise_w > pair[0].noise_w || pair[1].noise_a > pair[0].noise_a {
                return Err(Error::InvalidArgument(
                    "noise radii must be nonincreasing across epochs".into(),
                ));
            }
        }
        Ok(AnnealingSchedule { epochs })
    }

    /// Geometric decay: epoch s gets `step0·step_decay^s` and noise radii
    /// `rho0·noise_decay^s` (s = 0..n_epochs−1), all epochs `iters` long.
    pub fn geometric(
        n_epochs: usize,
        iters: usize,
        step0: f64,
        step_decay: f64,
        rho_w0: f64,
        rho_a0: f64,
        noise_decay: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_decay) || !(step_decay > 0.0) {
            return Err(Error::InvalidArgument(
                "geometric schedule needs step_decay > 0 and noise_decay in [0,1]".into(),
            ));
        }
        let epochs = (0..n_epochs)
            .map(|s| EpochSpec {
                iters,
                step: step0 * step_decay.powi(s as i32),
                noise_w: rho_w0 * noise_decay.powi(s as i32),
                noise_a: rho_a0 * noise_decay.powi(s as i32),
            })
            .collect();
        AnnealingSchedule::new(epochs)
    }

    pub fn epochs(&self) -> &[EpochSpec] {
        &self.epochs
    }

    /// Total number of update steps across all epochs.
    pub fn total_steps(&self) -> usize {
        self.epochs.iter().map(|e| e.iters - 1).sum()
    }
}

/// Per-iteration diagnostics for the phase-transition plots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub epoch: usize,
    pub iter: usize,
    pub inner_aa: f64,
    pub phi: f64,
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub final_state: StudentParams,
    pub trajectory: Vec<TrajectoryRecord>,
    pub succeeded: bool,
    pub seed: u64,
}

pub const DEFAULT_TOL_A: f64 = 1e-3;
pub const DEFAULT_TOL_PHI: f64 = 1e-2;

/// `‖a − a*‖² ≤ tol_a·‖a*‖²` and `∠(w, w*) ≤ tol_phi`.
pub fn success_check(
    s: &StudentParams,
    t: &TeacherParams,
    tol_a: f64,
    tol_phi: f64,
) -> Result<bool> {
    let a_err = dist2(&s.a, t.a_star());
    let a_scale = dot(t.a_star(), t.a_star());
    Ok(a_err <= tol_a * a_scale && s.phi(t)? <= tol_phi)
}

#[derive(Clone, Debug)]
pub struct SgdConfig {
    pub batch_size: usize,
    /// Ball constraint radius R for the a-iterate.
    pub radius: f64,
    pub schedule: AnnealingSchedule,
}

impl SgdConfig {
    pub fn new(batch_size: usize, radius: f64, schedule: AnnealingSchedule) -> Result<Self> {
        if batch_size < 1 || !(radius > 0.0) {
            return Err(Error::InvalidArgument(
                "SGD needs batch_size >= 1 and radius > 0".into(),
            ));
        }
        Ok(SgdConfig {
            batch_size,
            radius,
            schedule,
        })
    }
}

fn apply_update(
    s: &StudentParams,
    eta: f64,
    gw: &[f64],
    ga: &[f64],
) -> Result<StudentParams> {
    let a = add_scaled(&s.a, -eta, ga);
    let tangent = tangent_project(&s.w, gw)?;
    let w = project_to_sphere(&add_scaled(s.w.as_slice(), -eta, &tangent))?;
    Ok(StudentParams::new(w, a))
}

/// One Algorithm-1 step: a single `(ξ, ε)` draw feeds both the a-update and
/// the tangent w-update.
pub fn perturbed_gd_step(
    s: &StudentParams,
    t: &TeacherParams,
    eta: f64,
    rho_w: f64,
    rho_a: f64,
    rng: &mut RngStream,
) -> Result<StudentParams> {
    let (gw, ga) = population::perturbed_grads(s, t, rho_w, rho_a, rng)?;
    apply_update(s, eta, &gw, &ga)
}

/// Noiseless step on the population loss.
pub fn vanilla_gd_step(s: &StudentParams, t: &TeacherParams, eta: f64) -> Result<StudentParams> {
    let xi = vec![0.0; t.p()];
    let eps = vec![0.0; t.k()];
    // shared code path with the perturbed step so the radii-zero reduction
    // is bit-for-bit
    let (gw, ga) = population::perturbed_grads_with(s, t, &xi, &eps)?;
    apply_update(s, eta, &gw, &ga)
}

fn record(
    trajectory: &mut Vec<TrajectoryRecord>,
    epoch: usize,
    iter: usize,
    s: &StudentParams,
    t: &TeacherParams,
) -> Result<()> {
    trajectory.push(TrajectoryRecord {
        epoch,
        iter,
        inner_aa: dot(&s.a, t.a_star()),
        phi: s.phi(t)?,
        loss: population::population_loss(s, t)?,
    });
    Ok(())
}

fn run_epochs<F>(
    init: StudentParams,
    schedule: &AnnealingSchedule,
    t: &TeacherParams,
    record_every: usize,
    tol_a: f64,
    tol_phi: f64,
    seed: u64,
    mut step: F,
) -> Result<RunResult>
where
    F: FnMut(&StudentParams, &EpochSpec) -> Result<StudentParams>,
{
    let mut s = init;
    let mut trajectory = Vec::new();
    let mut global_iter = 0usize;
    for (e_idx, epoch) in schedule.epochs().iter().enumerate() {
        // Algorithm 1 counts iterates 1..T_s, so an epoch performs T_s − 1
        // updates and warm-starts the next epoch from its last iterate.
        for it in 1..epoch.iters {
            s = step(&s, epoch)?;
            global_iter += 1;
            if record_every > 0 && global_iter % record_every == 0 {
                record(&mut trajectory, e_idx + 1, it, &s, t)?;
            }
        }
    }
    let succeeded = success_check(&s, t, tol_a, tol_phi)?;
    Ok(RunResult {
        final_state: s,
        trajectory,
        succeeded,
        seed,
    })
}

/// Algorithm 1: perturbed gradient descent with noise annealing.
pub fn run_perturbed_gd(
    init: StudentParams,
    schedule: &AnnealingSchedule,
    t: &TeacherParams,
    record_every: usize,
    tol_a: f64,
    tol_phi: f64,
    rng: &mut RngStream,
) -> Result<RunResult> {
    let seed = rng.seed();
    run_epochs(
        init,
        schedule,
        t,
        record_every,
        tol_a,
        tol_phi,
        seed,
        |s, e| perturbed_gd_step(s, t, e.step, e.noise_w, e.noise_a, rng),
    )
}

/// Plain gradient descent: `iters` noiseless steps at a fixed rate.
pub fn run_vanilla_gd(
    init: StudentParams,
    t: &TeacherParams,
    eta: f64,
    iters: usize,
    record_every: usize,
    tol_a: f64,
    tol_phi: f64,
    seed: u64,
) -> Result<RunResult> {
    let schedule = AnnealingSchedule::new(vec![EpochSpec {
        iters: iters + 1,
        step: eta,
        noise_w: 0.0,
        noise_a: 0.0,
    }])?;
    run_epochs(
        init,
        &schedule,
        t,
        record_every,
        tol_a,
        tol_phi,
        seed,
        |s, e| vanilla_gd_step(s, t, e.step),
    )
}

/// Random initialization for the plain-GD baseline: `w₀` uniform on the
/// sphere, `a₀` uniform in the ball of radius `|1ᵀa*|/√k` (exactly zero for
/// balanced teachers, where that radius degenerates to a point mass).
pub fn proposition_random_init(t: &TeacherParams, rng: &mut RngStream) -> Result<StudentParams> {
    let w = sample_unit_sphere(t.p(), rng)?;
    let total = crate::vecmath::sum(t.a_star());
    let scale: f64 = t.a_star().iter().map(|x| x.abs()).sum();
    // balanced teachers cancel only up to summation rounding; the intended
    // distribution there is a point mass at zero
    let radius = if total.abs() <= 1e-12 * scale {
        0.0
    } else {
        total.abs() / (t.k() as f64).sqrt()
    };
    let a = sample_unit_ball(&BallSpec::new(t.k(), radius)?, rng);
    Ok(StudentParams::new(w, a))
}

/// One perturbed-SGD step: a fresh mini-batch, the stochastic gradient at
/// the noise-shifted point, then the a-update with projection onto the ball
/// of radius `R` and the usual tangent/sphere w-update.
pub fn perturbed_sgd_step(
    s: &StudentParams,
    t: &TeacherParams,
    batch_size: usize,
    radius: f64,
    eta: f64,
    rho_w: f64,
    rho_a: f64,
    rng: &mut RngStream,
) -> Result<StudentParams> {
    let xi = sample_unit_ball(&BallSpec::new(t.p(), rho_w)?, rng);
    let eps = sample_unit_ball(&BallSpec::new(t.k(), rho_a)?, rng);
    let batch: Vec<_> = (0..batch_size)
        .map(|_| empirical::sample_input(t.p(), t.k(), rng))
        .collect::<Result<_>>()?;
    let w_pt = add(s.w.as_slice(), &xi);
    let a_pt = add(&s.a, &eps);
    let (gw, ga) = empirical::minibatch_grad_at(&batch, &w_pt, &a_pt, t)?;
    let mut next = apply_update(s, eta, &gw, &ga)?;
    let an = norm(&next.a);
    if an > radius {
        let c = radius / an;
        next.a.iter_mut().for_each(|x| *x *= c);
    }
    Ok(next)
}

/// Perturbed mini-batch SGD under an annealing schedule.
pub fn run_perturbed_sgd(
    init: StudentParams,
    cfg: &SgdConfig,
    t: &TeacherParams,
    record_every: usize,
    tol_a: f64,
    tol_phi: f64,
    rng: &mut RngStream,
) -> Result<RunResult> {
    if cfg.radius < norm(t.a_star()) {
        return Err(Error::InvalidArgument(
            "SGD ball radius must be at least the teacher norm".into(),
        ));
    }
    let seed = rng.seed();
    let schedule = cfg.schedule.clone();
    run_epochs(
        init,
        &schedule,
        t,
        record_every,
        tol_a,
        tol_phi,
        seed,
        |s, e| {
            perturbed_sgd_step(
                s,
                t,
                cfg.batch_size,
                cfg.radius,
                e.step,
                e.noise_w,
                e.noise_a,
                rng,
            )
        },
    )
}

/// Per-record diagnostics of the overparameterized run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverparamRecord {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Full-batch GD on the overparameterized empirical loss: `w` and `v` take
/// tangent steps followed by sphere projection; `a`, `b` are unconstrained.
pub fn run_overparam_gd(
    d: &Dataset,
    init: OverparamStudent,
    t: &TeacherParams,
    eta: f64,
    iters: usize,
    record_every: usize,
) -> Result<(Vec<OverparamRecord>, OverparamStudent)> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("overparam GD needs eta > 0".into()));
    }
    let targets = d.teacher_outputs(t)?;
    let mut s = init;
    let mut records = Vec::new();
    let mut push_record = |iter: usize, s: &OverparamStudent, g: &OverparamGrad| {
        records.push(OverparamRecord {
            iter,
            loss: empirical::overparam_loss_on(d, &targets, s),
            grad_norm: g.norm(),
        });
    };
    for i in 0..iters {
        let g = empirical::overparam_grad_on(d, &targets, &s);
        if i == 0 || (record_every > 0 && i % record_every == 0) {
            push_record(i, &s, &g);
        }
        let a = add_scaled(&s.a, -eta, &g.ga);
        let b = add_scaled(&s.b, -eta, &g.gb);
        let w = project_to_sphere(&add_scaled(
            s.w.as_slice(),
            -eta,
            &tangent_project(&s.w, &g.gw)?,
        ))?;
        let v = project_to_sphere(&add_scaled(
            s.v.as_slice(),
            -eta,
            &tangent_project(&s.v, &g.gv)?,
        ))?;
        s = OverparamStudent { w, v, a, b };
    }
    let g = empirical::overparam_grad_on(d, &targets, &s);
    push_record(iters, &s, &g);
    Ok((records, s))
}

/// Final angle of an overparameterized filter to the teacher filter.
pub fn filter_angle(u: &crate::sphere::UnitVector, t: &TeacherParams) -> Result<f64> {
    angle(u.as_slice(), t.w_star().as_slice())
}
