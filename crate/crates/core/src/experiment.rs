//! Monte Carlo tables behind the trend checks and the `experiment` command.

use serde::{Deserialize, Serialize};

use crate::embellish::embellish;
use crate::error::{invalid, Result};
use crate::growth::{depth_profile, GrowthTree};
use crate::metrics::{coupling_metrics, pendant_stats, prokhorov_bound, EpsSchedule, KSchedule};
use crate::runner::run_replicates;
use crate::samplers::alpha;
use crate::statharness::stats::{exponent_fit, mean_stderr, median, plane_fit};
use crate::urns::{urn_snapshots, MomentRow};

/// Median height of `T(n)` at each `n = 2^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightPoint {
    pub ell: u32,
    pub n: u64,
    pub median_height: f64,
    pub reps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub ell: u32,
    pub n_min: u64,
    pub n_max: u64,
    pub reps: u64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub alpha: f64,
    pub r_squared: f64,
}

/// Heights of one growing tree, read at every `n` in `ns` (increasing).
fn height_path(ell: u32, ns: &[u64], rng: &mut crate::RngStream) -> Vec<u32> {
    let mut t = GrowthTree::initial(ell).expect("ell >= 1");
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        while t.n() < n {
            t.step(rng);
        }
        out.push(depth_profile(&t).into_iter().max().unwrap_or(0));
    }
    out
}

pub fn height_points(
    ell: u32,
    powers: &[u32],
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<HeightPoint>> {
    if ell == 0 || powers.is_empty() || reps == 0 || !powers.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("need ell >= 1, reps >= 1 and increasing powers"));
    }
    let ns: Vec<u64> = powers.iter().map(|&p| 1u64 << p).collect();
    let paths = run_replicates(seed, reps, threads, |_, rng| height_path(ell, &ns, rng));
    Ok(ns
        .iter()
        .enumerate()
        .map(|(i, &n)| HeightPoint {
            ell,
            n,
            median_height: median(&paths.iter().map(|p| p[i] as f64).collect::<Vec<_>>()),
            reps: reps as u64,
        })
        .collect())
}

pub fn exponent_row(points: &[HeightPoint]) -> Result<ExponentRow> {
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median_height).collect();
    let fit = exponent_fit(&xs, &ys)?;
    let ell = points[0].ell;
    Ok(ExponentRow {
        ell,
        n_min: points[0].n,
        n_max: points[points.len() - 1].n,
        reps: points[0].reps,
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        alpha: alpha(ell),
        r_squared: fit.r_squared,
    })
}

/// One coupled replicate. Column order is the CSV order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub ell: u32,
    pub n: u64,
    pub k: usize,
    pub eps: f64,
    pub rep: usize,
    pub dis_bound: f64,
    pub discrepancy: f64,
    pub ghp_bound: f64,
    #[serde(rename = "D_scaled")]
    pub d_scaled: f64,
    #[serde(rename = "S_max")]
    pub s_max: u64,
    pub prokhorov_bound: f64,
}

/// Coupled replicates over a grid of `n`. Replicate `r` at grid index `i`
/// uses stream `i * reps + r`.
pub fn coupling_rows(
    ell: u32,
    ns: &[u64],
    ks: KSchedule,
    es: EpsSchedule,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<CouplingRow>> {
    if ell == 0 || ns.is_empty() || reps == 0 {
        return Err(invalid("need ell >= 1, a non-empty grid and reps >= 1"));
    }
    let mut rows = Vec::with_capacity(ns.len() * reps);
    for (i, &n) in ns.iter().enumerate() {
        let k = ks.k(n);
        let leaves = 1 + n / ell as u64;
        if k as u64 > leaves {
            return Err(invalid(format!(
                "k = {k} exceeds the {leaves} leaves at n = {n}"
            )));
        }
        let eps = es.eps(ell, k);
        let grid_seed = crate::rng::derive_seed(seed, &format!("coupling/{i}"));
        let part = run_replicates(
            grid_seed,
            reps,
            threads,
            |rep, rng| -> Result<CouplingRow> {
                let e = embellish(ell, n, rng)?;
                let cm = coupling_metrics(&e, k, eps)?;
                let t = e.to_growth_tree()?;
                let ps = pendant_stats(&t, k)?;
                Ok(CouplingRow {
                    ell,
                    n,
                    k,
                    eps,
                    rep,
                    dis_bound: cm.dis_bound,
                    discrepancy: cm.discrepancy,
                    ghp_bound: cm.ghp_bound,
                    d_scaled: ps.d_scaled,
                    s_max: ps.s_max,
                    prokhorov_bound: prokhorov_bound(&t, k, eps)?,
                })
            },
        );
        for r in part {
            rows.push(r?);
        }
    }
    Ok(rows)
}

/// Medians of a column per grid value of `n`, in grid order.
pub fn medians_by_n<F: Fn(&CouplingRow) -> f64>(rows: &[CouplingRow], f: F) -> Vec<(u64, f64)> {
    let mut ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let v: Vec<f64> = rows.iter().filter(|r| r.n == n).map(&f).collect();
            (n, median(&v))
        })
        .collect()
}

/// Empirical `E[U_k(n)^p]` and `E[M_k(n)^p]` over the grid, with common
/// random numbers across all cells of a replicate.
pub fn urn_moment_scan(
    ell: u32,
    p: u32,
    ns: &[u64],
    ks: &[u64],
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<MomentRow>> {
    if reps < 2 || p == 0 {
        return Err(invalid("need reps >= 2 and p >= 1"));
    }
    let snaps = run_replicates(seed, reps, threads, |_, rng| {
        urn_snapshots(ell, ns, ks, rng)
    });
    let snaps: Vec<_> = snaps.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (model, pick) in [("U", 0usize), ("M", 1)] {
        for (i, &n) in ns.iter().enumerate() {
            for (j, &k) in ks.iter().enumerate() {
                let xs: Vec<f64> = snaps
                    .iter()
                    .map(|s| {
                        let (u, m) = s[i][j];
                        (if pick == 0 { u } else { m } as f64).powi(p as i32)
                    })
                    .collect();
                let (mean, stderr) = mean_stderr(&xs);
                rows.push(MomentRow {
                    model: model.to_string(),
                    ell,
                    p,
                    k,
                    n,
                    t: n,
                    mean,
                    stderr,
                    reps: reps as u64,
                });
            }
        }
    }
    Ok(rows)
}

/// Fitted `(slope in log n, slope in log k)` of `log mean` for one model.
pub fn moment_slopes(rows: &[MomentRow], model: &str) -> Result<(f64, f64)> {
    let sel: Vec<&MomentRow> = rows.iter().filter(|r| r.model == model).collect();
    if sel.iter().any(|r| r.mean <= 0.0) {
        return Err(invalid("moments must be positive for a log fit"));
    }
    let x1: Vec<f64> = sel.iter().map(|r| (r.n as f64).ln()).collect();
    let x2: Vec<f64> = sel.iter().map(|r| (r.k as f64).ln()).collect();
    let y: Vec<f64> = sel.iter().map(|r| r.mean.ln()).collect();
    let (_, bn, bk) = plane_fit(&x1, &x2, &y)?;
    Ok((bn, bk))
}
