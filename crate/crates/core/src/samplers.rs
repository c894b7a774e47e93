//! Elementary samplers: exponential, integer-shape gamma, beta, flat Dirichlet,
//! and the cut sequence `C_k = (E_1 + ... + E_k)^{1/(ell+1)}`.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{invalid, Result};

/// Uniform on `(0, 1]`.
#[inline]
pub fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Standard exponential by inversion.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -uniform_open(rng).ln()
}

/// Gamma(k, 1) as a sum of `k` exponentials. Only integer shapes are supported.
pub fn gamma_int<R: Rng + ?Sized>(k: u64, rng: &mut R) -> f64 {
    (0..k).map(|_| exponential(rng)).sum()
}

/// Beta(a, b). Closed forms when either parameter is 1.
pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(invalid(format!(
            "beta parameters must be positive, got ({a}, {b})"
        )));
    }
    Ok(if a == 1.0 && b == 1.0 {
        rng.gen::<f64>()
    } else if b == 1.0 {
        uniform_open(rng).powf(1.0 / a)
    } else if a == 1.0 {
        1.0 - uniform_open(rng).powf(1.0 / b)
    } else {
        Beta::new(a, b)
            .map_err(|e| invalid(e.to_string()))?
            .sample(rng)
    })
}

/// Dirichlet(1, ..., 1) with `k` components.
pub fn dirichlet_flat<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("dirichlet needs at least one component"));
    }
    let mut v: Vec<f64> = (0..k).map(|_| exponential(rng)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    Ok(v)
}

/// `alpha = ell / (ell + 1)`.
pub fn alpha(ell: u32) -> f64 {
    ell as f64 / (ell as f64 + 1.0)
}

/// `c = ell^alpha / (ell + 1)`; graph distances in `T(n)` are multiplied by `c / n^alpha`.
pub fn scale_const(ell: u32) -> f64 {
    (ell as f64).powf(alpha(ell)) / (ell as f64 + 1.0)
}

/// Multiplier `c / n^alpha` turning edge counts into lengths.
pub fn graph_scale(ell: u32, n: u64) -> f64 {
    scale_const(ell) / (n as f64).powf(alpha(ell))
}

/// Running state of the cut sequence; extends one cut at a time.
#[derive(Clone, Debug)]
pub struct CutSampler {
    inv_power: f64,
    gamma_sum: f64,
}

impl CutSampler {
    pub fn new(ell: u32) -> Self {
        Self {
            inv_power: 1.0 / (ell as f64 + 1.0),
            gamma_sum: 0.0,
        }
    }

    /// Continues a sequence whose last cut was `last`.
    pub fn resume_from(&mut self, last: f64) {
        self.gamma_sum = last.powf(1.0 / self.inv_power);
    }

    pub fn next_cut<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.gamma_sum += exponential(rng);
        self.gamma_sum.powf(self.inv_power)
    }
}

/// The first `k` cuts `C_1 < ... < C_k`.
pub fn sample_cuts<R: Rng + ?Sized>(ell: u32, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if ell == 0 {
        return Err(invalid("ell must be at least 1"));
    }
    let mut s = CutSampler::new(ell);
    Ok((0..k).map(|_| s.next_cut(rng)).collect())
}
