//! Frequencies of the good events and concentration bounds, with the bounds
//! they are compared against.

use serde::{Deserialize, Serialize};

use crate::embellish::embellish;
use crate::error::{invalid, Error, Result};
use crate::runner::run_replicates;
use crate::samplers::{alpha, exponential, gamma_int, graph_scale, scale_const};
use crate::skeleton::TreePoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventCheck {
    pub frequency: f64,
    pub bound: f64,
    pub reps: usize,
}

/// Smallest `k` for which the gamma tail bound is stated.
pub const GAMMA_TAIL_MIN_K: u64 = 30; // ceil((7/3)^4)

/// `P(|G_k - k| >= k^{3/4})` for `G_k ~ Gamma(k, 1)`, against `2 exp(-sqrt(k)/4)`.
pub fn gamma_tail_check(
    k: u64,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<EventCheck> {
    if k < GAMMA_TAIL_MIN_K {
        return Err(Error::Hypothesis(format!(
            "k = {k} below {GAMMA_TAIL_MIN_K}"
        )));
    }
    let kf = k as f64;
    let dev = kf.powf(0.75);
    let hits = run_replicates(seed, reps, threads, |_, rng| {
        ((gamma_int(k, rng) - kf).abs() >= dev) as u64
    });
    Ok(EventCheck {
        frequency: hits.iter().sum::<u64>() as f64 / reps as f64,
        bound: 2.0 * (-kf.sqrt() / 4.0).exp(),
        reps,
    })
}

/// `1 - 2 sum_{m=k}^{floor(n/ell)} exp(-sqrt(m)/4)`.
pub fn f_event_bound(ell: u32, k: u64, n: u64) -> f64 {
    let top = n / ell as u64;
    let mut s = 0.0;
    for m in k..=top {
        let term = (-(m as f64).sqrt() / 4.0).exp();
        s += term;
        // The remaining tail is below term * 8 sqrt(m) + term.
        if term * (8.0 * (m as f64).sqrt() + 1.0) < s * 1e-17 {
            break;
        }
    }
    1.0 - 2.0 * s
}

/// Whether a cut sequence (with `cuts[i] = C_{i+1}`) lies in the event:
/// the harmonic sum of `C_k..C_{n/ell}` is within `(n/ell)^alpha (1/alpha +- 5 n^{-1/4})`
/// and `|C_k - k^{1/(ell+1)}| < 10 k^{1/(ell+1) - 1/4}`.
pub fn in_f_event(ell: u32, k: u64, n: u64, cuts: &[f64]) -> bool {
    let a = alpha(ell);
    let top = (n / ell as u64) as usize;
    let harmonic: f64 = cuts[k as usize - 1..top].iter().map(|c| 1.0 / c).sum();
    let scale = (n as f64 / ell as f64).powf(a);
    let slack = 5.0 / (n as f64).powf(0.25);
    let lo = scale * (1.0 / a - slack);
    let hi = scale * (1.0 / a + slack);
    let inv = 1.0 / (ell as f64 + 1.0);
    let kf = k as f64;
    let ck_ok = (cuts[k as usize - 1] - kf.powf(inv)).abs() < 10.0 * kf.powf(inv - 0.25);
    harmonic > lo && harmonic < hi && ck_ok
}

pub fn event_frequency_f(
    ell: u32,
    k: u64,
    n: u64,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<EventCheck> {
    if ell == 0 || k == 0 || n < k * ell as u64 {
        return Err(invalid("need ell, k >= 1 and n >= k * ell"));
    }
    let top = (n / ell as u64) as usize;
    let inv = 1.0 / (ell as f64 + 1.0);
    let hits = run_replicates(seed, reps, threads, |_, rng| {
        let mut g = 0.0;
        let cuts: Vec<f64> = (0..top)
            .map(|_| {
                g += exponential(rng);
                f64::powf(g, inv)
            })
            .collect();
        in_f_event(ell, k, n, &cuts) as u64
    });
    Ok(EventCheck {
        frequency: hits.iter().sum::<u64>() as f64 / reps as f64,
        bound: f_event_bound(ell, k, n),
        reps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCheck {
    pub ell: u32,
    pub k: u64,
    pub n: u64,
    pub eps: f64,
    /// Smallest admissible `eps`.
    pub eps_min: f64,
    pub frequency: f64,
    /// `2 exp(-eps^2 n^alpha / (32 c k^{1/(ell+1)})) + exp(-k^{1/3})`.
    pub bound: f64,
    /// True when `eps > |S|` in every replicate, so a deviation needs the
    /// count to more than double.
    pub vacuous: bool,
    pub mean_scaled_count: f64,
    pub mean_length: f64,
    /// Sample standard deviation of `M_hat(S) - |S|`.
    pub deviation_sd: f64,
    pub reps: usize,
}

/// Frequency of `|c/n^alpha * #vertices in S - |S|| >= eps` for `S` the
/// segment `[lo * C_1, hi * C_1)` of the first branch.
#[allow(clippy::too_many_arguments)]
pub fn concentration_check(
    ell: u32,
    k: u64,
    n: u64,
    eps: f64,
    (lo, hi): (f64, f64),
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<ConcentrationCheck> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(invalid("need 0 <= lo < hi <= 1"));
    }
    if n < k * ell as u64 {
        return Err(invalid("need n >= k * ell"));
    }
    let a = alpha(ell);
    let c = scale_const(ell);
    let kf = k as f64;
    let inv = 1.0 / (ell as f64 + 1.0);
    let eps_min = 80.0 * a * kf.powf(inv) * (n as f64).powf(-0.25);
    if !(eps > eps_min) {
        return Err(Error::Hypothesis(format!(
            "eps = {eps} must exceed {eps_min}"
        )));
    }
    let scale = graph_scale(ell, n);
    let rows = run_replicates(seed, reps, threads, |_, rng| {
        let e = embellish(ell, n, rng).expect("valid parameters");
        let c1 = e.skeleton().length(0);
        let s_len = (hi - lo) * c1;
        let count = e.count_vertices(TreePoint::new(0, lo * c1), TreePoint::new(0, hi * c1));
        let m_hat = scale * count as f64;
        ((m_hat - s_len).abs() >= eps, m_hat, s_len, eps > s_len)
    });
    let r = reps as f64;
    let devs: Vec<f64> = rows.iter().map(|x| x.1 - x.2).collect();
    let (_, se) = crate::statharness::stats::mean_stderr(&devs);
    Ok(ConcentrationCheck {
        ell,
        k,
        n,
        eps,
        eps_min,
        frequency: rows.iter().filter(|x| x.0).count() as f64 / r,
        bound: 2.0 * (-eps * eps * (n as f64).powf(a) / (32.0 * c * kf.powf(inv))).exp()
            + (-kf.powf(1.0 / 3.0)).exp(),
        vacuous: rows.iter().all(|x| x.3),
        mean_scaled_count: rows.iter().map(|x| x.1).sum::<f64>() / r,
        mean_length: rows.iter().map(|x| x.2).sum::<f64>() / r,
        deviation_sd: se * r.sqrt(),
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_bound_increases_with_k() {
        let n = 1u64 << 40;
        let b: Vec<f64> = [100, 1000, 4000, 10_000]
            .iter()
            .map(|&k| f_event_bound(2, k, n))
            .collect();
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(b[3] > 1.0 - 1e-6);
    }

    #[test]
    fn gamma_tail_needs_large_k() {
        assert!(matches!(
            gamma_tail_check(10, 10, 1, None),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn concentration_rejects_small_eps() {
        let r = concentration_check(2, 4, 256, 0.01, (0.0, 0.5), 10, 1, None);
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn huge_eps_gives_zero_frequency() {
        let c = concentration_check(2, 1, 64, 1e6, (0.25, 0.75), 200, 3, None).unwrap();
        assert_eq!(c.frequency, 0.0);
        assert!(c.vacuous);
    }
}
