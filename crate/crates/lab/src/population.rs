//! Closed-form population loss for the two-layer non-overlapping CNN
//! teacher/student model, its gradients, the angle kernel `g`, and the
//! analytically known optima.
//!
//! The student network is `f(Z, w, a) = aᵀ σ(Zᵀ w)` with `‖w‖₂ = 1` and
//! standard Gaussian input columns. Averaging the squared residual against a
//! teacher `(w*, a*)` over the input distribution leaves a closed form that
//! depends on `w` only through the angle `φ = ∠(w, w*)`, carried entirely by
//! the kernel `g(φ) = (π − φ) cos φ + sin φ`. Besides the global optimum at
//! the teacher, the landscape has a spurious stationary point at
//! `(−w*, ã)`, which this module constructs explicitly.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sphere::{self, BallSpec, UnitVector};
use crate::vecmath::{add, dot, norm, sum};
use std::f64::consts::PI;

/// Ground-truth parameters `(w*, a*)`; the target of recovery.
#[derive(Clone, Debug)]
pub struct TeacherParams {
    w_star: UnitVector,
    a_star: Vec<f64>,
}

impl TeacherParams {
    pub fn new(w_star: UnitVector, a_star: Vec<f64>) -> Result<Self> {
        if a_star.len() < 2 {
            return Err(Error::InvalidDimension {
                min: 2,
                got: a_star.len(),
            });
        }
        Ok(TeacherParams { w_star, a_star })
    }

    /// Filter dimension `p`.
    pub fn p(&self) -> usize {
        self.w_star.dim()
    }

    /// Output dimension `k` (number of input patches).
    pub fn k(&self) -> usize {
        self.a_star.len()
    }

    pub fn w_star(&self) -> &UnitVector {
        &self.w_star
    }

    pub fn a_star(&self) -> &[f64] {
        &self.a_star
    }
}

/// Current iterate `(w, a)`, with `w` on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct StudentParams {
    pub w: UnitVector,
    pub a: Vec<f64>,
}

impl StudentParams {
    pub fn new(w: UnitVector, a: Vec<f64>) -> Self {
        StudentParams { w, a }
    }

    /// The student sitting exactly at the teacher (the global optimum).
    pub fn at_teacher(t: &TeacherParams) -> Self {
        StudentParams {
            w: t.w_star.clone(),
            a: t.a_star.to_vec(),
        }
    }

    /// `φ = ∠(w, w*)`.
    pub fn phi(&self, t: &TeacherParams) -> Result<f64> {
        sphere::angle(self.w.as_slice(), t.w_star.as_slice())
    }
}

fn check_dims(s: &StudentParams, t: &TeacherParams) -> Result<()> {
    if s.w.dim() != t.p() {
        return Err(Error::DimensionMismatch {
            left: s.w.dim(),
            right: t.p(),
        });
    }
    if s.a.len() != t.k() {
        return Err(Error::DimensionMismatch {
            left: s.a.len(),
            right: t.k(),
        });
    }
    Ok(())
}

/// The angle kernel `g(φ) = (π − φ) cos φ + sin φ`, nonincreasing from
/// `g(0) = π` to `g(π) = 0`.
pub fn g_phi(phi: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&phi) {
        return Err(Error::OutOfDomain {
            value: phi,
            lo: 0.0,
            hi: PI,
        });
    }
    Ok((PI - phi) * phi.cos() + phi.sin())
}

/// Population loss as a function of the angle and the output weights alone.
pub fn loss_from_phi(phi: f64, a: &[f64], t: &TeacherParams) -> Result<f64> {
    let g = g_phi(phi)?;
    let a_star = t.a_star();
    let na2 = dot(a, a);
    let ns2 = dot(a_star, a_star);
    let aas = dot(a, a_star);
    let sa = sum(a);
    let ss = sum(a_star);
    Ok(0.5
        * ((PI - 1.0) / (2.0 * PI) * ns2 + (PI - 1.0) / (2.0 * PI) * na2
            - (g - 1.0) / PI * aas
            + ss * ss / (2.0 * PI)
            + sa * sa / (2.0 * PI)
            - ss * sa / PI))
}

/// `L(w, a)`; zero exactly at the teacher.
pub fn population_loss(s: &StudentParams, t: &TeacherParams) -> Result<f64> {
    check_dims(s, t)?;
    loss_from_phi(s.phi(t)?, &s.a, t)
}

/// `∇_a L` given the angle; the `a`-gradient depends on `w` only through `φ`.
pub fn grad_a_from_phi(phi: f64, a: &[f64], t: &TeacherParams) -> Result<Vec<f64>> {
    let g = g_phi(phi)?;
    let a_star = t.a_star();
    let sa = sum(a);
    let ss = sum(a_star);
    Ok(a
        .iter()
        .zip(a_star)
        .map(|(ai, si)| (sa + (PI - 1.0) * ai - ss - (g - 1.0) * si) / (2.0 * PI))
        .collect())
}

/// `∇_a L(w, a)`.
pub fn grad_a(s: &StudentParams, t: &TeacherParams) -> Result<Vec<f64>> {
    check_dims(s, t)?;
    grad_a_from_phi(s.phi(t)?, &s.a, t)
}

/// `∇_w L` evaluated at an arbitrary nonzero point `w_point` (not necessarily
/// on the sphere, e.g. `w + ξ` during perturbed steps). The `1/‖w_point‖₂`
/// factors of the closed form are retained.
pub fn grad_w_at(w_point: &[f64], a: &[f64], t: &TeacherParams) -> Result<Vec<f64>> {
    if w_point.len() != t.p() {
        return Err(Error::DimensionMismatch {
            left: w_point.len(),
            right: t.p(),
        });
    }
    if a.len() != t.k() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: t.k(),
        });
    }
    let w_star = t.w_star().as_slice();
    let a_star = t.a_star();
    let nw = norm(w_point);
    if nw == 0.0 {
        return Err(Error::ZeroVector);
    }
    let phi = sphere::angle(w_point, w_star)?;
    let aas = dot(a, a_star);
    let na2 = dot(a, a);
    let sa = sum(a);
    let ss = sum(a_star);
    let coeff_star = -aas * (PI - phi) / (2.0 * PI);
    // Σ_{i≠j} a_i a_j = (1ᵀa)² − ‖a‖²; Σ_{i≠j} a_i a*_j = (1ᵀa)(1ᵀa*) − aᵀa*.
    let coeff_self = na2 / 2.0 + (sa * sa - na2) / (2.0 * PI)
        - aas * phi.sin() / (2.0 * PI * nw)
        - (sa * ss - aas) / (2.0 * PI * nw);
    Ok(w_star
        .iter()
        .zip(w_point)
        .map(|(wsi, wi)| coeff_star * wsi + coeff_self * wi)
        .collect())
}

/// `∇_w L(w, a)` at an on-sphere student.
pub fn grad_w(s: &StudentParams, t: &TeacherParams) -> Result<Vec<f64>> {
    check_dims(s, t)?;
    grad_w_at(s.w.as_slice(), &s.a, t)
}

/// `(I − wwᵀ) ∇_w L(w, a)`: the manifold gradient on the sphere.
pub fn manifold_grad_w(s: &StudentParams, t: &TeacherParams) -> Result<Vec<f64>> {
    sphere::tangent_project(&s.w, &grad_w(s, t)?)
}

/// Gradients at a noise-perturbed point `(w + ξ, a + ε)` with
/// `ξ ~ unif(B_0(ρ_w))`, `ε ~ unif(B_0(ρ_a))`; one draw of each.
pub fn perturbed_grads(
    s: &StudentParams,
    t: &TeacherParams,
    rho_w: f64,
    rho_a: f64,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(s, t)?;
    let xi = sphere::sample_unit_ball(&BallSpec::new(t.p(), rho_w)?, rng);
    let eps = sphere::sample_unit_ball(&BallSpec::new(t.k(), rho_a)?, rng);
    perturbed_grads_with(s, t, &xi, &eps)
}

/// Same as [`perturbed_grads`] with the noise pair supplied by the caller;
/// lets one `(ξ, ε)` draw feed both coordinate updates of an optimizer step.
pub fn perturbed_grads_with(
    s: &StudentParams,
    t: &TeacherParams,
    xi: &[f64],
    eps: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let w_point = add(s.w.as_slice(), xi);
    if norm(&w_point) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let a_point = add(&s.a, eps);
    let gw = grad_w_at(&w_point, &a_point, t)?;
    let phi = sphere::angle(&w_point, t.w_star().as_slice())?;
    let ga = grad_a_from_phi(phi, &a_point, t)?;
    Ok((gw, ga))
}

/// The spurious stationary point `(−w*, ã)` with
/// `(11ᵀ + (π−1) I) ã = (11ᵀ − I) a*`, solved by direct factorization.
pub fn spurious_optimum(t: &TeacherParams) -> StudentParams {
    let k = t.k();
    let a_star = t.a_star();
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            PI // 1 + (π − 1)
        } else {
            1.0
        }
    });
    let ss = sum(a_star);
    let rhs = nalgebra::DVector::from_fn(k, |i, _| ss - a_star[i]);
    // 11ᵀ + (π−1)I is positive definite, so the solve cannot fail.
    let a_tilde = m
        .lu()
        .solve(&rhs)
        .expect("positive definite system")
        .iter()
        .copied()
        .collect();
    StudentParams {
        w: t.w_star().negated(),
        a: a_tilde,
    }
}
