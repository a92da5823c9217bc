//! Monte-Carlo and closed-form verification of the expectation bounds the
//! convergence argument rests on: moments of the smoothed angle kernel,
//! polar-coordinate integral oracles, partial-dissipativity inner products
//! over the regions of interest, small-noise deterministic bounds, and
//! finite-difference gradient oracles.

use crate::error::{Error, Result};
use crate::population::{self, g_phi, StudentParams, TeacherParams};
use crate::rng::RngStream;
use crate::sphere::{angle, sample_unit_ball, tangent_project, BallSpec, UnitVector};
use crate::vecmath::{add, dot, norm, sub, sum};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Monte-Carlo estimate with its sampling uncertainty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Welford accumulator for a scalar stream.
#[derive(Clone, Debug, Default)]
pub struct MeanAccumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn finish(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

/// Per-coordinate Welford accumulator for a vector stream.
#[derive(Clone, Debug)]
pub struct VecMeanAccumulator {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VecMeanAccumulator {
    pub fn new(dim: usize) -> Self {
        VecMeanAccumulator {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.mean.len());
        self.n += 1;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.n as f64;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    /// (per-coordinate mean, per-coordinate standard error)
    pub fn finish(&self) -> (Vec<f64>, Vec<f64>) {
        let denom = if self.n > 1 { (self.n - 1) as f64 } else { 1.0 };
        let se = self
            .m2
            .iter()
            .map(|m| (m / denom / self.n as f64).sqrt())
            .collect();
        (self.mean.clone(), se)
    }
}

/// One draw of the perturbed angle `φ_ξ = ∠(w+ξ, w*)`.
pub fn sample_perturbed_angle(
    w: &UnitVector,
    w_star: &UnitVector,
    rho_w: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let spec = BallSpec::new(w.dim(), rho_w)?;
    let xi = sample_unit_ball(&spec, rng);
    angle(&add(w.as_slice(), &xi), w_star.as_slice())
}

fn mc_angle_functional<F: Fn(f64) -> Result<f64>>(
    w: &UnitVector,
    w_star: &UnitVector,
    rho_w: f64,
    n: usize,
    rng: &mut RngStream,
    f: F,
) -> Result<McEstimate> {
    if n < 1_000 {
        return Err(Error::InvalidArgument(
            "Monte-Carlo angle moments need n >= 1000".into(),
        ));
    }
    if rho_w == 0.0 {
        // point mass: the value is exact, not estimated
        return Ok(McEstimate {
            mean: f(angle(w.as_slice(), w_star.as_slice())?)?,
            std_error: 0.0,
            n_samples: n,
        });
    }
    let mut acc = MeanAccumulator::new();
    for _ in 0..n {
        acc.push(f(sample_perturbed_angle(w, w_star, rho_w, rng)?)?);
    }
    Ok(acc.finish())
}

/// `E_{ξ ~ unif(B_0(ρ_w))} g(∠(w+ξ, w*))`.
pub fn mc_expected_gphi(
    w: &UnitVector,
    w_star: &UnitVector,
    rho_w: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    mc_angle_functional(w, w_star, rho_w, n, rng, g_phi)
}

/// `E_{ξ ~ unif(B_0(ρ_w))} ∠(w+ξ, w*)`.
pub fn mc_expected_phi(
    w: &UnitVector,
    w_star: &UnitVector,
    rho_w: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    mc_angle_functional(w, w_star, rho_w, n, rng, Ok)
}

/// `Γ(p/2)Γ((p+2)/2)/Γ((p+1)/2)²` — the infinite-noise limit of
/// `E_ξ g(φ_ξ)`, which expands as `1 + 1/(2p) + 1/(8p²) + o(1/p²)`.
pub fn gamma_ratio_limit(p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidDimension { min: 2, got: p });
    }
    let p = p as f64;
    Ok((ln_gamma(p / 2.0) + ln_gamma((p + 2.0) / 2.0) - 2.0 * ln_gamma((p + 1.0) / 2.0)).exp())
}

/// `I_n = ∫₀^π sinⁿ x dx = √π Γ((1+n)/2) / Γ(1+n/2)`.
pub fn sin_power_integral(n: i64) -> Result<f64> {
    if n < 0 {
        return Err(Error::InvalidArgument(
            "sin_power_integral needs n >= 0".into(),
        ));
    }
    let n = n as f64;
    Ok(PI.sqrt() * (ln_gamma((1.0 + n) / 2.0) - ln_gamma(1.0 + n / 2.0)).exp())
}

/// The regions over which partial dissipativity is asserted.
#[derive(Clone, Copy, Debug)]
pub enum RegionSpec {
    /// Early-phase a-region: `aᵀa*` small or `a` far outside the
    /// half-teacher ball, with the `1ᵀa` cross term bracketed.
    A { c2: f64, c3: f64 },
    /// Mid-phase region: `aᵀa* ∈ [m, M]` and `wᵀw* ≥ c4`.
    K { c4: f64, m: f64, m_upper: f64 },
    /// Late-phase region: `aᵀa* ∈ [m, M]` and `‖w−w*‖² ≤ c10·γ`.
    R {
        m: f64,
        m_upper: f64,
        c10: f64,
        gamma: f64,
    },
}

impl RegionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RegionSpec::A { c2, c3 } => c2 > 0.0 && c3 > 0.0,
            RegionSpec::K { c4, m, m_upper } => {
                c4 > -1.0 && c4 <= 1.0 && m > 0.0 && m_upper > m
            }
            RegionSpec::R {
                m,
                m_upper,
                c10,
                gamma,
            } => m > 0.0 && m_upper > m && c10 > 0.0 && gamma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid region parameters: {self:?}"
            )))
        }
    }
}

/// Literal evaluation of the region's defining inequalities.
pub fn in_region(s: &StudentParams, t: &TeacherParams, spec: &RegionSpec) -> Result<bool> {
    spec.validate()?;
    let a_dot = dot(&s.a, t.a_star());
    Ok(match *spec {
        RegionSpec::A { c2, c3 } => {
            let p = t.p() as f64;
            let asq = dot(t.a_star(), t.a_star());
            let half: Vec<f64> = t.a_star().iter().map(|x| x / 2.0).collect();
            let disjunct =
                a_dot <= (c2 / p) * asq || crate::vecmath::dist2(&s.a, &half) >= asq;
            let sa = sum(t.a_star());
            let cross = sa * sum(&s.a) - sa * sa;
            disjunct && -4.0 * sa * sa <= cross && cross <= (c3 / p) * asq
        }
        RegionSpec::K { c4, m, m_upper } => {
            let c1 = dot(s.w.as_slice(), t.w_star().as_slice());
            a_dot >= m && a_dot <= m_upper && c1 >= c4
        }
        RegionSpec::R {
            m,
            m_upper,
            c10,
            gamma,
        } => {
            let wd = crate::vecmath::dist2(s.w.as_slice(), t.w_star().as_slice());
            a_dot >= m && a_dot <= m_upper && wd <= c10 * gamma
        }
    })
}

/// `⟨−E_{ξ,ε} ∇_a L(w+ξ, a+ε), a* − a⟩`, estimated by Monte Carlo.
pub fn dissipativity_a(
    s: &StudentParams,
    t: &TeacherParams,
    rho_w: f64,
    rho_a: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    if n < 10_000 {
        return Err(Error::InvalidArgument(
            "dissipativity estimates need n >= 10^4".into(),
        ));
    }
    let target = sub(t.a_star(), &s.a);
    let mut acc = MeanAccumulator::new();
    for _ in 0..n {
        let (_, ga) = population::perturbed_grads(s, t, rho_w, rho_a, rng)?;
        acc.push(-dot(&ga, &target));
    }
    Ok(acc.finish())
}

/// `⟨−E_{ξ,ε} (I − wwᵀ)∇_w L(w+ξ, a+ε), w* − w⟩`: projection taken at the
/// iterate `w`, gradient evaluated at the perturbed point.
pub fn dissipativity_w(
    s: &StudentParams,
    t: &TeacherParams,
    rho_w: f64,
    rho_a: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    if n < 10_000 {
        return Err(Error::InvalidArgument(
            "dissipativity estimates need n >= 10^4".into(),
        ));
    }
    let target = sub(t.w_star().as_slice(), s.w.as_slice());
    let mut acc = MeanAccumulator::new();
    for _ in 0..n {
        let (gw, _) = population::perturbed_grads(s, t, rho_w, rho_a, rng)?;
        let tangent = tangent_project(&s.w, &gw)?;
        acc.push(-dot(&tangent, &target));
    }
    Ok(acc.finish())
}

/// Deterministic small-noise bounds `(U1, U2, U3)` at angle `φ` and relative
/// radius `ρ`: an upper bound on `E φ_ξ`, on `E (π−g(φ_ξ))²`, and a lower
/// bound on `E g(φ_ξ)`.
pub fn small_noise_bounds(phi: f64, rho: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=PI / 2.0).contains(&phi) {
        return Err(Error::OutOfDomain {
            value: phi,
            lo: 0.0,
            hi: PI / 2.0,
        });
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::OutOfDomain {
            value: rho,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let u1 = (phi.cos() * (1.0 - rho * rho).sqrt() - rho * phi.sin())
        .clamp(-1.0, 1.0)
        .acos();
    let g = g_phi(u1)?;
    Ok((u1, (PI - g) * (PI - g), g))
}

/// Monte-Carlo estimate of `E_ξ (w* − (wᵀw*)w)ᵀ ξ / ‖w+ξ‖` — zero by the
/// symmetry of the ball distribution.
pub fn mc_symmetry_residual(
    w: &UnitVector,
    w_star: &UnitVector,
    rho_w: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    let c1 = dot(w.as_slice(), w_star.as_slice());
    let dir: Vec<f64> = w_star
        .as_slice()
        .iter()
        .zip(w.as_slice())
        .map(|(ws, wi)| ws - c1 * wi)
        .collect();
    let spec = BallSpec::new(w.dim(), rho_w)?;
    let mut acc = MeanAccumulator::new();
    for _ in 0..n {
        let xi = sample_unit_ball(&spec, rng);
        acc.push(dot(&dir, &xi) / norm(&add(w.as_slice(), &xi)));
    }
    Ok(acc.finish())
}

/// Max per-coordinate relative error with denominator `max(|analytic|, 1e-8)`.
pub fn max_rel_error(analytic: &[f64], approx: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(approx)
        .map(|(a, b)| (a - b).abs() / a.abs().max(1e-8))
        .fold(0.0, f64::max)
}

/// Central-difference gradient of a scalar function of a vector.
pub fn central_diff_gradient<F: FnMut(&[f64]) -> Result<f64>>(
    x: &[f64],
    h: f64,
    mut f: F,
) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let mut xh = x.to_vec();
    for i in 0..x.len() {
        xh[i] = x[i] + h;
        let hi = f(&xh)?;
        xh[i] = x[i] - h;
        let lo = f(&xh)?;
        xh[i] = x[i];
        g[i] = (hi - lo) / (2.0 * h);
    }
    Ok(g)
}

/// Finite-difference check of the population a-gradient at one state.
pub fn fd_check_population_a(s: &StudentParams, t: &TeacherParams, h: f64) -> Result<f64> {
    let phi = s.phi(t)?;
    let analytic = population::grad_a(s, t)?;
    let fd = central_diff_gradient(&s.a, h, |a| population::loss_from_phi(phi, a, t))?;
    Ok(max_rel_error(&analytic, &fd))
}

/// Directional on-sphere finite-difference check of the manifold w-gradient:
/// for tangent unit directions `u ⟂ w`, compares
/// `[L(Proj(w+hu)) − L(Proj(w−hu))]/2h` against `uᵀ·manifold_grad_w`.
pub fn fd_check_population_w(s: &StudentParams, t: &TeacherParams, h: f64) -> Result<f64> {
    let mg = population::manifold_grad_w(s, t)?;
    let p = s.w.dim();
    let mut worst = 0.0f64;
    for axis in 0..p {
        let mut e = vec![0.0; p];
        e[axis] = 1.0;
        let u = tangent_project(&s.w, &e)?;
        let un = norm(&u);
        if un < 1e-8 {
            continue;
        }
        let u: Vec<f64> = u.iter().map(|x| x / un).collect();
        let eval = |sign: f64| -> Result<f64> {
            let moved = crate::vecmath::add_scaled(s.w.as_slice(), sign * h, &u);
            let w = crate::sphere::project_to_sphere(&moved)?;
            population::population_loss(&StudentParams::new(w, s.a.clone()), t)
        };
        let fd = (eval(1.0)? - eval(-1.0)?) / (2.0 * h);
        let analytic = dot(&u, &mg);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-8));
    }
    Ok(worst)
}

/// Finite-difference check of the overparameterized empirical gradient in
/// the unconstrained `(a, b)` coordinates. The caller is responsible for
/// choosing a kink-safe point.
pub fn fd_check_overparam(
    d: &crate::empirical::Dataset,
    s: &crate::empirical::OverparamStudent,
    t: &TeacherParams,
    h: f64,
) -> Result<f64> {
    let targets = d.teacher_outputs(t)?;
    let g = crate::empirical::overparam_grad(d, s, t)?;
    let mut st = s.clone();
    let fd_a = central_diff_gradient(&s.a, h, |a| {
        st.a.copy_from_slice(a);
        Ok(crate::empirical::overparam_loss_on(d, &targets, &st))
    })?;
    let mut st = s.clone();
    let fd_b = central_diff_gradient(&s.b, h, |b| {
        st.b.copy_from_slice(b);
        Ok(crate::empirical::overparam_loss_on(d, &targets, &st))
    })?;
    Ok(max_rel_error(&g.ga, &fd_a).max(max_rel_error(&g.gb, &fd_b)))
}

/// Draws a verified member of region A: `a` uniform in the ball of radius
/// `0.3‖a*‖` around the origin, `w` uniform on the sphere, rejection via
/// [`in_region`].
pub fn sample_region_a_member(
    t: &TeacherParams,
    c2: f64,
    c3: f64,
    rng: &mut RngStream,
) -> Result<StudentParams> {
    let spec = RegionSpec::A { c2, c3 };
    let ball = BallSpec::new(t.k(), 0.3 * norm(t.a_star()))?;
    for _ in 0..100_000 {
        let a = sample_unit_ball(&ball, rng);
        let w = crate::sphere::sample_unit_sphere(t.p(), rng)?;
        let s = StudentParams::new(w, a);
        if in_region(&s, t, &spec)? {
            return Ok(s);
        }
    }
    Err(Error::InvalidArgument(
        "region-A rejection sampler failed to find a member".into(),
    ))
}

/// Draws a member of `K_{c4,m,M}` with the extra separation
/// `‖w−w*‖² ≥ 0.5`: `aᵀa*` is placed uniformly in `[m, M]` by construction
/// (teacher direction plus orthogonal noise), and `w = c₁w* + √(1−c₁²)u`
/// with `c₁` uniform in `[max(c4, 0.1), 0.75]`.
pub fn sample_region_k_member(
    t: &TeacherParams,
    c4: f64,
    m: f64,
    m_upper: f64,
    rng: &mut RngStream,
) -> Result<StudentParams> {
    use rand::Rng;
    let spec = RegionSpec::K { c4, m, m_upper };
    spec.validate()?;
    let asq = dot(t.a_star(), t.a_star());
    let lam = rng.gen_range(m..m_upper) / asq;
    let mut a: Vec<f64> = t.a_star().iter().map(|x| lam * x).collect();
    // orthogonal jitter leaves aT a* unchanged
    let jitter = sample_unit_ball(&BallSpec::new(t.k(), 0.1 * norm(t.a_star()))?, rng);
    let coef = dot(&jitter, t.a_star()) / asq;
    for i in 0..t.k() {
        a[i] += jitter[i] - coef * t.a_star()[i];
    }
    let c1 = rng.gen_range(c4.max(0.1)..0.75);
    let raw = sample_unit_ball(&BallSpec::new(t.p(), 1.0)?, rng);
    let tang = tangent_project(t.w_star(), &raw)?;
    let tn = norm(&tang);
    if tn < 1e-8 {
        return Err(Error::DegenerateProjection);
    }
    let scale = (1.0 - c1 * c1).sqrt() / tn;
    let w_vec: Vec<f64> = t
        .w_star()
        .as_slice()
        .iter()
        .zip(&tang)
        .map(|(ws, u)| c1 * ws + scale * u)
        .collect();
    let s = StudentParams::new(crate::sphere::project_to_sphere(&w_vec)?, a);
    if !in_region(&s, t, &spec)? {
        return Err(Error::InvalidArgument(
            "constructed K point failed the region predicate".into(),
        ));
    }
    Ok(s)
}

pub mod claims;
