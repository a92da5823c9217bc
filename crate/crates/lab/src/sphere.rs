//! Geometry on the unit sphere and uniform sampling in Euclidean balls.
//!
//! These are the noise-injection and manifold-update primitives used by the
//! rest of the crate: drawing perturbations uniformly from a ball, retracting
//! iterates back onto the sphere, projecting gradients to the tangent space
//! and measuring angles between directions.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vecmath::{dot, norm};
use rand::Rng;
use rand_distr::StandardNormal;

/// Tolerance for the `‖·‖₂ = 1` invariant.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Norm below which a vector is treated as direction-free and refused.
const MIN_PROJECTABLE_NORM: f64 = 1e-300;

/// A vector constrained to the unit sphere in `R^d`, `d >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `entries`, checking `d >= 2` and `|‖entries‖₂ - 1| <= 1e-12`.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidDimension {
                min: 2,
                got: entries.len(),
            });
        }
        let n = norm(&entries);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "vector norm {n} is not 1 within {UNIT_NORM_TOL:e}"
            )));
        }
        Ok(UnitVector(entries))
    }

    /// The standard basis vector `e_axis` in `R^dim`.
    pub fn basis(dim: usize, axis: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension { min: 2, got: dim });
        }
        if axis >= dim {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for dimension {dim}"
            )));
        }
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Ok(UnitVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// The antipodal point.
    pub fn negated(&self) -> UnitVector {
        UnitVector(self.0.iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A Euclidean ball centered at the origin; radius 0 is the point mass there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallSpec {
    dim: usize,
    radius: f64,
}

impl BallSpec {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension { min: 1, got: 0 });
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be a finite nonnegative real, got {radius}"
            )));
        }
        Ok(BallSpec { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Draws a point uniformly from the ball described by `spec`.
///
/// Direction is a normalized standard Gaussian vector, length is
/// `radius * U^(1/dim)`; exact in any dimension, no rejection. A radius-0
/// ball returns the zero vector without consuming randomness, so zero-noise
/// runs replay identically to noiseless ones.
pub fn sample_unit_ball(spec: &BallSpec, rng: &mut RngStream) -> Vec<f64> {
    let d = spec.dim;
    if spec.radius == 0.0 {
        return vec![0.0; d];
    }
    let mut v: Vec<f64> = Vec::with_capacity(d);
    let mut n = 0.0;
    while n < MIN_PROJECTABLE_NORM {
        v.clear();
        v.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        n = norm(&v);
    }
    let u: f64 = rng.gen::<f64>();
    let r = spec.radius * u.powf(1.0 / d as f64);
    let c = r / n;
    v.iter_mut().for_each(|x| *x *= c);
    v
}

/// Draws a direction uniformly from the unit sphere in `R^dim`.
pub fn sample_unit_sphere(dim: usize, rng: &mut RngStream) -> Result<UnitVector> {
    if dim < 2 {
        return Err(Error::InvalidDimension { min: 2, got: dim });
    }
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        if norm(&v) >= MIN_PROJECTABLE_NORM {
            return project_to_sphere(&v);
        }
    }
}

/// `v / ‖v‖₂`. Refuses (near-)zero vectors rather than inventing a direction.
pub fn project_to_sphere(v: &[f64]) -> Result<UnitVector> {
    if v.len() < 2 {
        return Err(Error::InvalidDimension {
            min: 2,
            got: v.len(),
        });
    }
    let n = norm(v);
    if !(n >= MIN_PROJECTABLE_NORM) {
        return Err(Error::DegenerateProjection);
    }
    // Renormalize once more if round-off left us outside the invariant band.
    let mut out: Vec<f64> = v.iter().map(|x| x / n).collect();
    let n2 = norm(&out);
    if (n2 - 1.0).abs() > UNIT_NORM_TOL {
        out.iter_mut().for_each(|x| *x /= n2);
    }
    UnitVector::new(out)
}

/// `g - (wᵀg) w`: the component of `g` tangent to the sphere at `w`.
pub fn tangent_project(w: &UnitVector, g: &[f64]) -> Result<Vec<f64>> {
    if w.dim() != g.len() {
        return Err(Error::DimensionMismatch {
            left: w.dim(),
            right: g.len(),
        });
    }
    let radial = dot(w.as_slice(), g);
    Ok(w.as_slice()
        .iter()
        .zip(g)
        .map(|(wi, gi)| gi - radial * wi)
        .collect())
}

/// Angle between two nonzero vectors, in `[0, π]`.
///
/// The normalized inner product is clamped to `[-1, 1]` before `acos`;
/// round-off can push it slightly outside.
pub fn angle(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let c = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(c.acos())
}
