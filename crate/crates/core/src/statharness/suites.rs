//! Pre-registered check suites. Sample sizes, grids and tolerances are fixed
//! here; a run is a pure function of the config.

use std::collections::BTreeMap;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::embellish::embellish;
use crate::error::{invalid, Result};
use crate::experiment::{
    coupling_rows, exponent_row, height_points, medians_by_n, moment_slopes, urn_moment_scan,
};
use crate::growth::{branch_lengths, depth_profile, spanned_subtree, GrowthTree};
use crate::metrics::{pendant_stats, EpsSchedule, KSchedule};
use crate::rng::{derive_seed, RngStream};
use crate::runner::run_replicates;
use crate::samplers::{alpha, beta, sample_cuts};
use crate::skeleton::TreePoint;
use crate::statharness::enumerate::{
    enumerate_growth, enumerate_urn, laws_equal, ExactLaw, Key, UrnModel,
};
use crate::statharness::events::{concentration_check, event_frequency_f, gamma_tail_check};
use crate::statharness::report::{CriterionResult, TestReport};
use crate::statharness::stats::{chi_square_gof, chi_square_two_sample, ks_one_sample, tally};
use crate::urns::{run_classical, run_infinite_urn, sample_mk_uk};

/// Smallest acceptable p-value for goodness-of-fit checks.
pub const P_MIN: f64 = 1e-3;
/// Largest acceptable KS statistic for the continuous laws.
pub const KS_MAX: f64 = 0.01;
/// Enumeration budget (choice paths or urn transitions).
pub const ENUM_BUDGET: u128 = 10_000_000;
pub const HEIGHT_TOL: f64 = 0.05;
pub const MOMENT_N_TOL: f64 = 0.05;
pub const MOMENT_K_TOL: f64 = 0.07;
pub const SIGMA_MAX: f64 = 3.0;

pub const SUITES: [&str; 8] = [
    "oracle",
    "urn",
    "distributions",
    "exponent",
    "coupling",
    "tightness",
    "tails",
    "moments",
];

#[derive(Clone, Debug, Default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    /// Overrides every Monte Carlo sample size in the suite.
    pub reps: Option<usize>,
    pub ell: Option<u32>,
    pub n: Option<u64>,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn reps(&self, default: usize) -> usize {
        self.reps.unwrap_or(default)
    }

    fn ell(&self) -> u32 {
        self.ell.unwrap_or(2)
    }

    fn sub(&self, tag: &str) -> u64 {
        derive_seed(self.seed, tag)
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<TestReport> {
    let mut report = TestReport::new(name, cfg.seed);
    match name {
        "oracle" => oracle(cfg, &mut report)?,
        "urn" => urn(cfg, &mut report)?,
        "distributions" => distributions(cfg, &mut report)?,
        "exponent" => exponent(cfg, &mut report)?,
        "coupling" => coupling(cfg, &mut report)?,
        "tightness" => tightness(cfg, &mut report)?,
        "tails" => tails(cfg, &mut report)?,
        "moments" => moments(cfg, &mut report)?,
        _ => {
            return Err(invalid(format!(
                "unknown suite {name:?} (one of {})",
                SUITES.join(", ")
            )))
        }
    }
    Ok(report)
}

fn p_criterion(name: &str, p: f64, reps: usize) -> CriterionResult {
    CriterionResult::new(name, p > P_MIN, p, format!("p > {P_MIN}")).with_reps(reps)
}

fn fmt_list(xs: &[(u64, f64)]) -> String {
    xs.iter()
        .map(|(n, v)| format!("n={n}:{v:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn strictly_decreasing(xs: &[(u64, f64)]) -> bool {
    xs.windows(2).all(|w| w[1].1 < w[0].1)
}

// ─── oracle ────────────────────────────────────────────────────────────────

/// (depth of L1, depth of L2 or -1, largest distance to R_1, largest pendant size at k = 1).
fn oracle_key(t: &GrowthTree) -> Key {
    let depth = depth_profile(t);
    let l2 = if t.leaf_count() > 1 {
        depth[t.leaf(1) as usize] as i64
    } else {
        -1
    };
    let ps = pendant_stats(t, 1).expect("k = 1 always valid");
    vec![
        depth[t.leaf(0) as usize] as i64,
        l2,
        ps.max_distance as i64,
        ps.s_max as i64,
    ]
}

fn oracle(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ell = cfg.ell();
    let n = cfg.n.unwrap_or(4);
    let reps = cfg.reps(1_000_000);
    let law = enumerate_growth(ell, n, ENUM_BUDGET, oracle_key)?;
    let exact = law.to_f64();
    report.push(
        CriterionResult::new(
            "oracle/exact_total",
            law.total() == num_traits::One::one(),
            law.probs.len() as f64,
            "probabilities sum to exactly 1",
        )
        .with_detail(format!("{} outcomes", law.probs.len())),
    );

    let grown = run_replicates(cfg.sub("oracle/grow"), reps, cfg.threads, |_, rng| {
        crate::growth::grow(ell, n, rng).map(|t| oracle_key(&t))
    });
    let grown = tally(grown.into_iter().collect::<Result<Vec<_>>>()?);
    let p = chi_square_gof(&grown, &exact)?.p_value;
    report.push(p_criterion("oracle/grow_vs_exact", p, reps));

    let coupled = run_replicates(cfg.sub("oracle/embellish"), reps, cfg.threads, |_, rng| {
        embellish(ell, n, rng)?
            .to_growth_tree()
            .map(|t| oracle_key(&t))
    });
    let coupled = tally(coupled.into_iter().collect::<Result<Vec<_>>>()?);
    let p = chi_square_gof(&coupled, &exact)?.p_value;
    report.push(p_criterion("oracle/embellish_vs_exact", p, reps));
    Ok(())
}

// ─── urn correspondence ────────────────────────────────────────────────────

/// Exact law of `(M_k(n), U_k(n))` through the immigration urn followed by
/// the classical split.
fn two_stage_law(ell: u32, k: u64, n: u64) -> Result<ExactLaw> {
    let e = ell as u64 + 1;
    let imm = enumerate_urn(
        UrnModel::Immigration {
            ell,
            b: 1,
            w: e * k,
            bonus_to_chosen: false,
        },
        n - k * ell as u64,
        ENUM_BUDGET,
    )?
    .map(|s| vec![s[1]]);
    let mut probs = BTreeMap::new();
    for (m, p) in imm.probs {
        let mk = m[0];
        if k == 1 {
            probs.insert(vec![mk, mk], p);
            continue;
        }
        let base = (k - 1) * e;
        let split = enumerate_urn(
            UrnModel::Classical { b: base, w: 1 },
            mk as u64 - base - 1,
            ENUM_BUDGET,
        )?;
        for (s, q) in split.probs {
            *probs
                .entry(vec![mk, s[1]])
                .or_insert_with(num_traits::Zero::zero) += &p * q;
        }
    }
    Ok(ExactLaw { probs })
}

fn urn(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ell = cfg.ell();
    let n_max = cfg.n.unwrap_or(6);

    let mut mismatched = Vec::new();
    for n in 0..=n_max {
        let growth = enumerate_growth(ell, n, ENUM_BUDGET, |t| {
            branch_lengths(t, t.leaf_count())
                .expect("all leaves")
                .into_iter()
                .map(|x| x as i64)
                .collect()
        })?;
        let urn = enumerate_urn(UrnModel::Infinite { ell }, n, ENUM_BUDGET)?;
        if !laws_equal(&growth, &urn) {
            mismatched.push(n);
        }
    }
    report.push(
        CriterionResult::new(
            "urn/branch_lengths_exact",
            mismatched.is_empty(),
            mismatched.len() as f64,
            "0 sizes with unequal laws",
        )
        .with_detail(format!("n = 0..={n_max}, mismatched {mismatched:?}")),
    );

    let mut mismatched = Vec::new();
    let mut cases = 0;
    for n in 1..=n_max {
        for k in 1..=n / ell as u64 {
            cases += 1;
            let growth = enumerate_growth(ell, n, ENUM_BUDGET, |t| {
                let m = spanned_subtree(t, k as usize)
                    .expect("k <= leaves")
                    .edge_count() as i64;
                let u = branch_lengths(t, k as usize).expect("k <= leaves")[k as usize - 1] as i64;
                vec![m, u]
            })?;
            if !laws_equal(&growth, &two_stage_law(ell, k, n)?) {
                mismatched.push((k, n));
            }
        }
    }
    report.push(
        CriterionResult::new(
            "urn/two_stage_exact",
            mismatched.is_empty(),
            mismatched.len() as f64,
            "0 (k, n) with unequal laws",
        )
        .with_detail(format!(
            "{cases} cases with k*ell <= n <= {n_max}, mismatched {mismatched:?}"
        )),
    );

    let reps = cfg.reps(100_000);
    let (k, n) = (2u64, 40u64);
    let direct = run_replicates(cfg.sub("urn/infinite"), reps, cfg.threads, |_, rng| {
        run_infinite_urn(ell, n, rng).map(|u| (u.m(k as usize), u.u(k as usize)))
    });
    let staged = run_replicates(cfg.sub("urn/two_stage"), reps, cfg.threads, |_, rng| {
        sample_mk_uk(ell, k, n, rng)
    });
    let direct = tally(direct.into_iter().collect::<Result<Vec<_>>>()?);
    let staged = tally(staged.into_iter().collect::<Result<Vec<_>>>()?);
    let p = chi_square_two_sample(&direct, &staged)?.p_value;
    report.push(p_criterion("urn/two_stage_k2_n40", p, reps));
    Ok(())
}

// ─── distributional identities ─────────────────────────────────────────────

fn distributions(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ell = cfg.ell();
    let reps = cfg.reps(100_000);
    let e = ell as f64 + 1.0;

    for k in [1usize, 5, 20] {
        let xs = run_replicates(
            cfg.sub(&format!("dist/gamma/{k}")),
            reps,
            cfg.threads,
            |_, rng| sample_cuts(ell, k, rng).map(|c| c[k - 1].powf(e)),
        );
        let xs: Vec<f64> = xs.into_iter().collect::<Result<_>>()?;
        let g = Gamma::new(k as f64, 1.0).map_err(|err| invalid(err.to_string()))?;
        let out = ks_one_sample(&xs, |x| g.cdf(x))?;
        report.push(
            CriterionResult::new(
                format!("distributions/cut_power_gamma_k{k}"),
                out.statistic < KS_MAX,
                out.statistic,
                format!("KS < {KS_MAX}"),
            )
            .with_reps(reps)
            .with_detail(format!("p = {:.4}", out.p_value)),
        );
    }

    for k in [5usize, 20] {
        let xs = run_replicates(
            cfg.sub(&format!("dist/beta/{k}")),
            reps,
            cfg.threads,
            |_, rng| sample_cuts(ell, k, rng).map(|c| (c[k - 1] - c[k - 2]) / c[k - 1]),
        );
        let xs: Vec<f64> = xs.into_iter().collect::<Result<_>>()?;
        let b = (e * (k as f64 - 1.0)) as i32;
        // Beta(1, b) has CDF 1 - (1 - x)^b.
        let out = ks_one_sample(&xs, |x| 1.0 - (1.0 - x).powi(b))?;
        report.push(
            CriterionResult::new(
                format!("distributions/cut_increment_beta_k{k}"),
                out.statistic < KS_MAX,
                out.statistic,
                format!("KS < {KS_MAX}"),
            )
            .with_reps(reps)
            .with_detail(format!("p = {:.4}", out.p_value)),
        );
    }

    report.push(dirichlet_check(cfg, 2, 3, reps)?);
    report.push(binomial_increments(cfg, ell, 4, reps)?);

    let (b, w, m) = (3u64, 1u64, 10u64);
    let urn = run_replicates(
        cfg.sub("dist/definetti/urn"),
        reps,
        cfg.threads,
        |_, rng| run_classical(b, w, m, rng).map(|x| x.1 - w),
    );
    let mixed = run_replicates(
        cfg.sub("dist/definetti/mix"),
        reps,
        cfg.threads,
        |_, rng| {
            beta(w as f64, b as f64, rng)
                .map(|q| (0..m).filter(|_| rng.gen::<f64>() < q).count() as u64)
        },
    );
    let urn = tally(urn.into_iter().collect::<Result<Vec<_>>>()?);
    let mixed = tally(mixed.into_iter().collect::<Result<Vec<_>>>()?);
    let p = chi_square_two_sample(&urn, &mixed)?.p_value;
    report.push(p_criterion("distributions/de_finetti_b3_w1_m10", p, reps));
    Ok(())
}

/// Normalized segment lengths of the marked tree with `k` branches, one step
/// after the `k`-th branch appears, against `Dir(1, ..., 1)`: largest
/// |z-score| over coordinate means and all (co)variances.
fn dirichlet_check(cfg: &SuiteConfig, ell: u32, k: usize, reps: usize) -> Result<CriterionResult> {
    let n = (k as u64 - 1) * ell as u64 + 1;
    let vecs = run_replicates(cfg.sub("dist/dirichlet"), reps, cfg.threads, |_, rng| {
        let e = embellish(ell, n, rng)?;
        let total = e.skeleton().prefix_length(k);
        let mut segs = e.edge_lengths(k);
        segs.sort_by_key(|s| s.0);
        Ok(segs.into_iter().map(|s| s.1 / total).collect::<Vec<f64>>())
    });
    let vecs: Vec<Vec<f64>> = vecs.into_iter().collect::<Result<_>>()?;
    let d = vecs[0].len();
    if vecs.iter().any(|v| v.len() != d) {
        return Err(invalid("segment count varies between replicates"));
    }
    let df = d as f64;
    let mean = 1.0 / df;
    let var = (df - 1.0) / (df * df * (df + 1.0));
    let cov = -1.0 / (df * df * (df + 1.0));
    let z = |samples: &mut dyn Iterator<Item = f64>, target: f64| -> f64 {
        let xs: Vec<f64> = samples.collect();
        let (m, se) = crate::statharness::stats::mean_stderr(&xs);
        ((m - target) / se).abs()
    };
    let mut worst: f64 = 0.0;
    for i in 0..d {
        worst = worst.max(z(&mut vecs.iter().map(|v| v[i]), mean));
        for j in i..d {
            let target = if i == j { var } else { cov };
            worst = worst.max(z(
                &mut vecs.iter().map(|v| (v[i] - mean) * (v[j] - mean)),
                target,
            ));
        }
    }
    Ok(CriterionResult::new(
        format!("distributions/dirichlet_ell{ell}_k{k}"),
        worst <= SIGMA_MAX,
        worst,
        format!("max |z| <= {SIGMA_MAX}"),
    )
    .with_reps(reps)
    .with_detail(format!("dimension {d}, {} checks", d + d * (d + 1) / 2)))
}

/// Vertices landing on a fixed root segment during round `j` (steps
/// `(j-1) ell + 1 ..= j ell`), replayed from one frozen tree, against
/// `Binomial(ell, |S| / C_j)`.
fn binomial_increments(
    cfg: &SuiteConfig,
    ell: u32,
    j: u64,
    reps: usize,
) -> Result<CriterionResult> {
    let mut rng = RngStream::new(cfg.sub("dist/binomial/base"), 0);
    let base = embellish(ell, (j - 1) * ell as u64, &mut rng)?;
    let s_end = TreePoint::new(0, 0.5 * base.skeleton().length(0));
    let before = base.count_vertices(TreePoint::ROOT, s_end);
    let q = s_end.offset / base.skeleton().prefix_length(j as usize);
    let incs = run_replicates(
        cfg.sub("dist/binomial/replay"),
        reps,
        cfg.threads,
        |_, rng| {
            let mut e = base.clone();
            for _ in 0..ell {
                e.advance(rng);
            }
            e.count_vertices(TreePoint::ROOT, s_end) - before
        },
    );
    let observed = tally(incs);
    let mut probs = BTreeMap::new();
    let binom = |a: u64, b: u64| (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64);
    for x in 0..=ell as u64 {
        probs.insert(
            x,
            binom(ell as u64, x) * q.powi(x as i32) * (1.0 - q).powi((ell as u64 - x) as i32),
        );
    }
    let p = chi_square_gof(&observed, &probs)?.p_value;
    Ok(p_criterion(
        &format!("distributions/binomial_markers_ell{ell}_j{j}"),
        p,
        reps,
    )
    .with_detail(format!("|S|/C_j = {q:.6}")))
}

// ─── height exponent ───────────────────────────────────────────────────────

fn exponent(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ells: Vec<u32> = cfg.ell.map_or(vec![1, 2, 3], |e| vec![e]);
    let reps = cfg.reps(32);
    let powers: Vec<u32> = (10..=20).collect();
    for ell in ells {
        let pts = height_points(
            ell,
            &powers,
            reps,
            cfg.sub(&format!("exponent/{ell}")),
            cfg.threads,
        )?;
        let row = exponent_row(&pts)?;
        let a = alpha(ell);
        report.push(
            CriterionResult::new(
                format!("exponent/height_slope_ell{ell}"),
                (row.slope - a).abs() <= HEIGHT_TOL,
                row.slope,
                format!("|slope - {a:.6}| <= {HEIGHT_TOL}"),
            )
            .with_reps(reps)
            .with_detail(format!(
                "n = 2^10..2^20, stderr {:.4}, r^2 {:.5}",
                row.slope_stderr, row.r_squared
            )),
        );
    }
    Ok(())
}

// ─── coupling and tightness trends ─────────────────────────────────────────

const TREND_POWERS: [u32; 3] = [12, 15, 18];

fn trend_criterion(name: &str, meds: &[(u64, f64)], reps: usize) -> CriterionResult {
    CriterionResult::new(
        name,
        strictly_decreasing(meds),
        meds.last().map_or(f64::NAN, |m| m.1),
        "medians strictly decreasing in n",
    )
    .with_reps(reps)
    .with_detail(fmt_list(meds))
}

fn coupling(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ell = cfg.ell();
    let reps = cfg.reps(64);
    let ns: Vec<u64> = TREND_POWERS.iter().map(|&p| 1u64 << p).collect();
    let rows = coupling_rows(
        ell,
        &ns,
        KSchedule::Fifth,
        EpsSchedule::Coupling,
        reps,
        cfg.sub("coupling"),
        cfg.threads,
    )?;
    report.push(trend_criterion(
        "coupling/median_dis_bound",
        &medians_by_n(&rows, |r| r.dis_bound),
        reps,
    ));
    report.push(trend_criterion(
        "coupling/median_discrepancy",
        &medians_by_n(&rows, |r| r.discrepancy),
        reps,
    ));
    Ok(())
}

fn tightness(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ell = cfg.ell();
    let reps = cfg.reps(64);
    let ns: Vec<u64> = TREND_POWERS.iter().map(|&p| 1u64 << p).collect();
    let rows = coupling_rows(
        ell,
        &ns,
        KSchedule::Fifth,
        EpsSchedule::Tightness,
        reps,
        cfg.sub("tightness"),
        cfg.threads,
    )?;
    report.push(trend_criterion(
        "tightness/median_D",
        &medians_by_n(&rows, |r| r.d_scaled),
        reps,
    ));
    report.push(trend_criterion(
        "tightness/median_prokhorov_bound",
        &medians_by_n(&rows, |r| r.prokhorov_bound),
        reps,
    ));
    report.push(trend_criterion(
        "tightness/median_S_over_n",
        &medians_by_n(&rows, |r| r.s_max as f64 / r.n as f64),
        reps,
    ));
    Ok(())
}

// ─── tails and events ──────────────────────────────────────────────────────

fn tails(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let reps = cfg.reps(1_000_000);
    for k in [50u64, 100, 200] {
        let c = gamma_tail_check(k, reps, cfg.sub(&format!("tails/gamma/{k}")), cfg.threads)?;
        report.push(
            CriterionResult::new(
                format!("tails/gamma_k{k}"),
                c.frequency <= c.bound,
                c.frequency,
                format!("<= {:.6e}", c.bound),
            )
            .with_reps(reps),
        );
    }

    let reps = cfg.reps(10_000);
    let (ell, k, n) = (2u32, 64u64, 1u64 << 15);
    let f = event_frequency_f(ell, k, n, reps, cfg.sub("tails/f_event"), cfg.threads)?;
    report.push(
        CriterionResult::new(
            "tails/f_event_ell2_k64_n2^15",
            f.frequency >= f.bound,
            f.frequency,
            format!(">= {:.6}", f.bound),
        )
        .with_reps(reps)
        .with_detail(if f.bound <= 0.0 {
            "bound is not positive at this k"
        } else {
            ""
        }),
    );

    let (k, n) = (32u64, 1u64 << 14);
    let eps_min =
        80.0 * alpha(ell) * (k as f64).powf(1.0 / (ell as f64 + 1.0)) * (n as f64).powf(-0.25);
    let eps = 1.01 * eps_min;
    // Middle half of the first branch: no fixed vertex (such as the root)
    // lies in S, so the scaled count has no c / n^alpha offset.
    let segment = (0.25, 0.75);
    let c = concentration_check(
        ell,
        k,
        n,
        eps,
        segment,
        reps,
        cfg.sub("tails/concentration"),
        cfg.threads,
    )?;
    report.push(
        CriterionResult::new(
            "tails/concentration_ell2_k32_n2^14",
            c.frequency <= c.bound,
            c.frequency,
            format!("<= {:.6e}", c.bound),
        )
        .with_reps(reps)
        .with_detail(format!(
            "eps = {eps:.4}{}",
            if c.vacuous {
                ", vacuous: eps > |S| in every replicate"
            } else {
                ""
            }
        )),
    );
    let se = c.deviation_sd / (reps as f64).sqrt();
    let z = (c.mean_scaled_count - c.mean_length).abs() / se;
    report.push(
        CriterionResult::new(
            "tails/scaled_count_mean",
            z <= SIGMA_MAX,
            z,
            format!("|z| <= {SIGMA_MAX}"),
        )
        .with_reps(reps)
        .with_detail(format!(
            "mean scaled count {:.6}, mean |S| {:.6}",
            c.mean_scaled_count, c.mean_length
        )),
    );
    Ok(())
}

// ─── urn moments ───────────────────────────────────────────────────────────

fn moments(cfg: &SuiteConfig, report: &mut TestReport) -> Result<()> {
    let ell = cfg.ell();
    let reps = cfg.reps(4000);
    let ns: Vec<u64> = (12..=18).map(|p| 1u64 << p).collect();
    let ks = [8u64, 16, 32, 64];
    let rows = urn_moment_scan(ell, 1, &ns, &ks, reps, cfg.sub("moments"), cfg.threads)?;
    let a = alpha(ell);
    let inv = 1.0 / (ell as f64 + 1.0);
    let (un, uk) = moment_slopes(&rows, "U")?;
    let (mn, mk) = moment_slopes(&rows, "M")?;
    for (name, got, want, tol) in [
        ("moments/U_slope_n", un, a, MOMENT_N_TOL),
        ("moments/U_slope_k", uk, -a, MOMENT_K_TOL),
        ("moments/M_slope_n", mn, a, MOMENT_N_TOL),
        ("moments/M_slope_k", mk, inv, MOMENT_K_TOL),
    ] {
        report.push(
            CriterionResult::new(
                name,
                (got - want).abs() <= tol,
                got,
                format!("|slope - {want:.6}| <= {tol}"),
            )
            .with_reps(reps),
        );
    }
    Ok(())
}
