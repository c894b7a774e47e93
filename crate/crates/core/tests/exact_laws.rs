use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use inhomtree::growth::{branch_lengths, spanned_subtree, GrowthTree};
use inhomtree::metrics::pendant_stats;
use inhomtree::runner::run_replicates;
use inhomtree::statharness::enumerate::{
    enumerate_growth, enumerate_urn, laws_equal, ExactLaw, Key, UrnModel,
};
use inhomtree::statharness::stats::{chi_square_gof, tally};
use inhomtree::urns::{run_classical, run_imm_urn, run_mod_urn, ImmMode};

const BUDGET: u128 = 10_000_000;
const REPS: usize = 100_000;
const MIN_P: f64 = 1e-3;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn law(pairs: &[(Key, BigRational)]) -> ExactLaw {
    ExactLaw {
        probs: pairs.iter().cloned().collect(),
    }
}

fn sampler_matches(sample: Vec<Key>, exact: &ExactLaw) {
    let p = chi_square_gof(&tally(sample), &exact.to_f64())
        .unwrap()
        .p_value;
    assert!(p > MIN_P, "p = {p}");
}

/// Leaf indices of the pairs of leaves with a common parent.
fn cherries(t: &GrowthTree) -> Key {
    let mut by_parent: BTreeMap<u32, Vec<i64>> = BTreeMap::new();
    for i in 0..t.leaf_count() {
        by_parent
            .entry(t.parent(t.leaf(i)).unwrap())
            .or_default()
            .push(i as i64);
    }
    by_parent
        .into_values()
        .filter(|v| v.len() == 2)
        .flatten()
        .collect()
}

#[test]
fn binary_growth_cherry_is_uniform() {
    let exact = enumerate_growth(1, 2, BUDGET, cherries).unwrap();
    let third = q(1, 3);
    let expect = law(&[
        (vec![0, 1], third.clone()),
        (vec![0, 2], third.clone()),
        (vec![1, 2], third),
    ]);
    assert_eq!(exact, expect);
}

#[test]
fn infinite_urn_first_draw_is_forced() {
    let exact = enumerate_urn(UrnModel::Infinite { ell: 1 }, 1, BUDGET).unwrap();
    assert_eq!(exact, law(&[(vec![2, 1], q(1, 1))]));
}

#[test]
fn classical_two_draws_uniform() {
    let exact = enumerate_urn(UrnModel::Classical { b: 1, w: 1 }, 2, BUDGET)
        .unwrap()
        .map(|s| vec![s[1]]);
    let third = q(1, 3);
    assert_eq!(
        exact,
        law(&[
            (vec![1], third.clone()),
            (vec![2], third.clone()),
            (vec![3], third)
        ])
    );
    let sample = run_replicates(1, REPS, None, |_, rng| {
        vec![run_classical(1, 1, 2, rng).unwrap().1 as i64]
    });
    sampler_matches(sample, &exact);
}

#[test]
fn spanned_edge_count_is_immigration_urn() {
    // (ell, k, n) = (2, 1, 4): start the urn with (1, (ell+1)k) and run n - k*ell draws.
    let (ell, k, n) = (2u32, 1usize, 4u64);
    let growth = enumerate_growth(ell, n, BUDGET, |t| {
        vec![spanned_subtree(t, k).unwrap().edge_count() as i64]
    })
    .unwrap();
    let urn = enumerate_urn(
        UrnModel::Immigration {
            ell,
            b: 1,
            w: (ell as u64 + 1) * k as u64,
            bonus_to_chosen: false,
        },
        n - k as u64 * ell as u64,
        BUDGET,
    )
    .unwrap()
    .map(|s| vec![s[1]]);
    assert!(laws_equal(&growth, &urn), "{growth:?} vs {urn:?}");
    let sample = run_replicates(2, REPS, None, |_, rng| {
        vec![
            run_imm_urn(ell, 1, 3, 2, ImmMode::BlackImmigration, rng)
                .unwrap()
                .1 as i64,
        ]
    });
    sampler_matches(sample, &urn);
}

#[test]
fn largest_pendant_is_modified_urn_maximum() {
    let (ell, k, n) = (2u32, 1usize, 4u64);
    let growth = enumerate_growth(ell, n, BUDGET, |t| {
        vec![pendant_stats(t, k).unwrap().s_max as i64]
    })
    .unwrap();
    let steps = n - k as u64 * ell as u64;
    let b = (ell as u64 + 1) * k as u64;
    let urn = enumerate_urn(UrnModel::Modified { ell, b, w: 1 }, steps, BUDGET)
        .unwrap()
        .map(|s| vec![*s[1..].iter().max().unwrap()]);
    assert!(laws_equal(&growth, &urn), "{growth:?} vs {urn:?}");
    let sample = run_replicates(3, REPS, None, |_, rng| {
        vec![run_mod_urn(ell, b, 1, steps, rng).unwrap().max_color() as i64]
    });
    sampler_matches(sample, &urn);
}

#[test]
fn bonus_rule_never_firing_is_classical() {
    let (b, w, t) = (2u64, 1u64, 4u64);
    let classical = enumerate_urn(UrnModel::Classical { b, w }, t, BUDGET).unwrap();
    let bonus = enumerate_urn(
        UrnModel::Immigration {
            ell: 5,
            b,
            w,
            bonus_to_chosen: true,
        },
        t,
        BUDGET,
    )
    .unwrap();
    assert!(laws_equal(&classical, &bonus));
    let white = classical.map(|s| vec![s[1]]);
    let sample = run_replicates(4, REPS, None, |_, rng| {
        vec![
            run_imm_urn(5, b, w, t, ImmMode::ChosenColorBonus, rng)
                .unwrap()
                .1 as i64,
        ]
    });
    sampler_matches(sample, &white);
}

#[test]
fn first_color_of_modified_urn_is_bonus_urn_white() {
    for (ell, b, w, t) in [(2u32, 3u64, 1u64, 6u64), (3, 2, 2, 7)] {
        let modified = enumerate_urn(UrnModel::Modified { ell, b, w }, t, BUDGET)
            .unwrap()
            .map(|s| vec![s[1]]);
        let bonus = enumerate_urn(
            UrnModel::Immigration {
                ell,
                b,
                w,
                bonus_to_chosen: true,
            },
            t,
            BUDGET,
        )
        .unwrap()
        .map(|s| vec![s[1]]);
        assert!(laws_equal(&modified, &bonus), "ell={ell}");
        let sample = run_replicates(5, REPS, None, |_, rng| {
            vec![run_mod_urn(ell, b, w, t, rng).unwrap().colors[0] as i64]
        });
        sampler_matches(sample, &modified);
    }
}

#[test]
fn urn_and_growth_branch_lengths_agree_at_ell2_n4() {
    let growth = enumerate_growth(2, 4, BUDGET, |t| {
        branch_lengths(t, 2)
            .unwrap()
            .into_iter()
            .map(|x| x as i64)
            .collect()
    })
    .unwrap();
    let urn = enumerate_urn(UrnModel::Infinite { ell: 2 }, 4, BUDGET)
        .unwrap()
        .map(|s| s[..2].to_vec());
    assert!(laws_equal(&growth, &urn));
}
