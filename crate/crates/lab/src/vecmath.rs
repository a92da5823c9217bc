//! Small dense-vector helpers shared across the crate.

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

pub fn scale(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

pub fn add(u: &[f64], v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

pub fn sub(u: &[f64], v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

/// u + c * v
pub fn add_scaled(u: &[f64], c: f64, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a + c * b).collect()
}

/// acc += c * v, in place
pub fn axpy(acc: &mut [f64], c: f64, v: &[f64]) {
    debug_assert_eq!(acc.len(), v.len());
    for (a, b) in acc.iter_mut().zip(v) {
        *a += c * b;
    }
}

pub fn dist2(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}
