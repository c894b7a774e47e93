//! Exact laws by exhaustive enumeration, in exact rational arithmetic.
//!
//! The growth enumerator keeps its own edge-pair representation rather than
//! reusing the sampler's split routine.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::growth::{GrowthTree, VertexKind, NO_PARENT};

pub type Key = Vec<i64>;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactLaw {
    pub probs: BTreeMap<Key, BigRational>,
}

impl ExactLaw {
    pub fn total(&self) -> BigRational {
        self.probs.values().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn to_f64(&self) -> BTreeMap<Key, f64> {
        self.probs
            .iter()
            .map(|(k, p)| (k.clone(), p.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    /// Law of `f(key)`.
    pub fn map<F: Fn(&Key) -> Key>(&self, f: F) -> ExactLaw {
        let mut probs: BTreeMap<Key, BigRational> = BTreeMap::new();
        for (k, p) in &self.probs {
            *probs.entry(f(k)).or_insert_with(BigRational::zero) += p;
        }
        ExactLaw { probs }
    }

    pub fn mean(&self, coord: usize) -> BigRational {
        self.probs
            .iter()
            .map(|(k, p)| p * BigRational::from_integer(BigInt::from(k[coord])))
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Number of equally likely choice paths from `T(0)` to `T(n)`.
pub fn growth_path_count(ell: u32, n: u64) -> u128 {
    (0..n).fold(1u128, |acc, m| {
        acc.saturating_mul((1 + m + m / ell as u64) as u128)
    })
}

struct Builder {
    ell: u32,
    edges: Vec<(u32, u32)>,
    kind: Vec<VertexKind>,
    creation: Vec<u32>,
}

impl Builder {
    fn to_tree(&self, n: u64) -> Result<GrowthTree> {
        let mut parent = vec![NO_PARENT; self.kind.len()];
        for &(p, c) in &self.edges {
            parent[c as usize] = p;
        }
        GrowthTree::from_parts(
            self.ell,
            n,
            parent,
            self.kind.clone(),
            self.creation.clone(),
        )
    }
}

/// Law of `f(T(n))`, enumerating every choice path.
pub fn enumerate_growth<F>(ell: u32, n: u64, budget: u128, f: F) -> Result<ExactLaw>
where
    F: Fn(&GrowthTree) -> Key,
{
    if ell == 0 {
        return Err(invalid("ell must be at least 1"));
    }
    let paths = growth_path_count(ell, n);
    if paths > budget {
        return Err(Error::Budget {
            needed: paths,
            budget,
        });
    }
    let mut counts: BTreeMap<Key, u128> = BTreeMap::new();
    let mut b = Builder {
        ell,
        edges: vec![(0, 1)],
        kind: vec![VertexKind::Root, VertexKind::Leaf],
        creation: vec![0, 0],
    };
    walk(&mut b, 1, n, &f, &mut counts)?;
    Ok(ExactLaw {
        probs: counts
            .into_iter()
            .map(|(k, c)| (k, ratio(c, paths)))
            .collect(),
    })
}

fn walk<F>(b: &mut Builder, m: u64, n: u64, f: &F, counts: &mut BTreeMap<Key, u128>) -> Result<()>
where
    F: Fn(&GrowthTree) -> Key,
{
    if m > n {
        let t = b.to_tree(n)?;
        *counts.entry(f(&t)).or_insert(0) += 1;
        return Ok(());
    }
    let with_leaf = m % b.ell as u64 == 0;
    for i in 0..b.edges.len() {
        let (p, c) = b.edges[i];
        let w = b.kind.len() as u32;
        b.edges[i] = (p, w);
        b.edges.push((w, c));
        b.kind.push(VertexKind::Internal);
        b.creation.push(m as u32);
        if with_leaf {
            b.edges.push((w, w + 1));
            b.kind.push(VertexKind::Leaf);
            b.creation.push(m as u32);
        }
        walk(b, m + 1, n, f, counts)?;
        let extra = 1 + with_leaf as usize;
        for _ in 0..extra {
            b.edges.pop();
            b.kind.pop();
            b.creation.pop();
        }
        b.edges[i] = (p, c);
    }
    Ok(())
}

/// Urn families with an exact enumerator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UrnModel {
    /// State: counts of colors `1, 2, ...`.
    Infinite { ell: u32 },
    /// State: `[black, white]`.
    Classical { b: u64, w: u64 },
    /// State: `[black, white]`.
    Immigration {
        ell: u32,
        b: u64,
        w: u64,
        bonus_to_chosen: bool,
    },
    /// State: `[black, color_1, color_2, ...]`.
    Modified { ell: u32, b: u64, w: u64 },
}

/// Exact law of the urn state after `steps` draws, merging equal states at
/// every step.
pub fn enumerate_urn(model: UrnModel, steps: u64, budget: u128) -> Result<ExactLaw> {
    let init: Key = match model {
        UrnModel::Infinite { ell } => {
            if ell == 0 {
                return Err(invalid("ell must be at least 1"));
            }
            vec![1]
        }
        UrnModel::Classical { b, w } => vec![b as i64, w as i64],
        UrnModel::Immigration { ell, b, w, .. } => {
            if ell == 0 {
                return Err(invalid("ell must be at least 1"));
            }
            vec![b as i64, w as i64]
        }
        UrnModel::Modified { ell, b, w } => {
            if ell == 0 || w == 0 {
                return Err(invalid("need ell >= 1 and w >= 1"));
            }
            vec![b as i64, w as i64]
        }
    };
    if init.iter().sum::<i64>() == 0 {
        return Err(invalid("urn must start non-empty"));
    }
    let mut dist: BTreeMap<Key, BigRational> = BTreeMap::from([(init, BigRational::one())]);
    let mut work: u128 = 0;
    for t in 1..=steps {
        let mut next: BTreeMap<Key, BigRational> = BTreeMap::new();
        for (state, p) in &dist {
            let total: i64 = state.iter().sum();
            for (j, &c) in state.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                work += 1;
                if work > budget {
                    return Err(Error::Budget {
                        needed: work,
                        budget,
                    });
                }
                let mut s = state.clone();
                apply_draw(model, &mut s, j, t);
                let q = p * ratio(c as u128, total as u128);
                *next.entry(s).or_insert_with(BigRational::zero) += q;
            }
        }
        dist = next;
    }
    Ok(ExactLaw { probs: dist })
}

fn apply_draw(model: UrnModel, s: &mut Key, j: usize, t: u64) {
    match model {
        UrnModel::Infinite { ell } => {
            s[j] += 1;
            if t % ell as u64 == 0 {
                s.push(1);
            }
        }
        UrnModel::Classical { .. } => s[j] += 1,
        UrnModel::Immigration {
            ell,
            bonus_to_chosen,
            ..
        } => {
            s[j] += 1;
            if t % ell as u64 == 0 {
                if bonus_to_chosen {
                    s[j] += 1;
                } else {
                    s[0] += 1;
                }
            }
        }
        UrnModel::Modified { ell, .. } => {
            s[j] += 1;
            if t % ell as u64 == 0 {
                if j == 0 {
                    s.push(1);
                } else {
                    s[j] += 1;
                }
            }
        }
    }
}

/// Element-wise comparison of two exact laws.
pub fn laws_equal(a: &ExactLaw, b: &ExactLaw) -> bool {
    a.probs.len() == b.probs.len()
        && a.probs
            .iter()
            .all(|(k, p)| b.probs.get(k).is_some_and(|q| q == p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::height;

    #[test]
    fn path_counts() {
        assert_eq!(growth_path_count(2, 4), 40);
        assert_eq!(growth_path_count(1, 3), 1 * 3 * 5);
        assert_eq!(growth_path_count(2, 0), 1);
    }

    #[test]
    fn growth_laws_sum_to_one() {
        for ell in 1..=3 {
            for n in 0..=5 {
                let law = enumerate_growth(ell, n, 1_000_000, |t| vec![height(t) as i64]).unwrap();
                assert!(law.total().is_one());
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let r = enumerate_growth(2, 12, 1000, |_| vec![0]);
        assert!(matches!(r, Err(Error::Budget { .. })));
        let r = enumerate_urn(UrnModel::Infinite { ell: 1 }, 30, 100);
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    #[test]
    fn classical_urn_is_uniform_from_one_one() {
        // Starting from one black and one white, the white count after m draws
        // is uniform on 1..=m+1.
        let law = enumerate_urn(UrnModel::Classical { b: 1, w: 1 }, 5, 1_000_000).unwrap();
        let white = law.map(|k| vec![k[1]]);
        assert_eq!(white.probs.len(), 6);
        for p in white.probs.values() {
            assert_eq!(*p, ratio(1, 6));
        }
    }

    #[test]
    fn infinite_urn_small_case() {
        // ell = 2: after 2 draws color 1 always holds 3 balls, color 2 one.
        let law = enumerate_urn(UrnModel::Infinite { ell: 2 }, 2, 1000).unwrap();
        assert_eq!(law.probs.len(), 1);
        assert_eq!(law.probs[&vec![3, 1]], BigRational::one());
    }
}
