//! Line-breaking skeleton: branch `k` has length `C_k - C_{k-1}` and its near
//! end is glued at a length-uniform point of the earlier branches.
//!
//! Points are `(branch, offset)` with offset measured from the glued end; the
//! root is offset 0 of branch 0. Cut values double as the prefix-sum table
//! used for length-uniform sampling, so the total length is exactly the last
//! active cut.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::samplers::sample_cuts;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub branch: usize,
    pub offset: f64,
}

impl TreePoint {
    pub const ROOT: TreePoint = TreePoint {
        branch: 0,
        offset: 0.0,
    };

    pub fn new(branch: usize, offset: f64) -> Self {
        Self { branch, offset }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub length: f64,
    /// Glue point on an earlier branch; `None` for branch 0.
    pub attach: Option<TreePoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    ell: u32,
    /// `cuts[i]` is the total length of branches `0..=i`.
    cuts: Vec<f64>,
    branches: Vec<Branch>,
    /// Root distance of offset 0 on each branch.
    base_height: Vec<f64>,
    /// Number of branch hops from each branch to branch 0.
    hops: Vec<u32>,
}

impl Skeleton {
    /// Skeleton holding only branch 0; later branches come from [`attach_next`](Self::attach_next).
    pub fn with_cuts(ell: u32, cuts: Vec<f64>) -> Result<Self> {
        if ell == 0 {
            return Err(invalid("ell must be at least 1"));
        }
        if cuts.is_empty() || !(cuts[0] > 0.0) {
            return Err(invalid("cuts must start with a positive value"));
        }
        if !cuts.windows(2).all(|w| w[0] < w[1]) || cuts.iter().any(|c| !c.is_finite()) {
            return Err(invalid("cuts must be finite and strictly increasing"));
        }
        Ok(Self {
            ell,
            branches: vec![Branch {
                length: cuts[0],
                attach: None,
            }],
            cuts,
            base_height: vec![0.0],
            hops: vec![0],
        })
    }

    /// Glues the next branch at `at`.
    pub fn attach_next(&mut self, at: TreePoint) -> Result<usize> {
        let k = self.branches.len();
        if k >= self.cuts.len() {
            return Err(invalid("no cut available for another branch"));
        }
        self.check_point(at)?;
        let at = self.canonical(at);
        let length = self.cuts[k] - self.cuts[k - 1];
        self.base_height.push(self.distance_to_root(at));
        self.hops.push(self.hops[at.branch] + 1);
        self.branches.push(Branch {
            length,
            attach: Some(at),
        });
        Ok(k)
    }

    /// Appends a cut beyond the current table.
    pub fn push_cut(&mut self, cut: f64) -> Result<()> {
        if !(cut > *self.cuts.last().unwrap()) || !cut.is_finite() {
            return Err(invalid("cuts must be strictly increasing"));
        }
        self.cuts.push(cut);
        Ok(())
    }

    /// Rebuilds a skeleton from stored branches, validating consistency.
    pub fn from_parts(ell: u32, cuts: Vec<f64>, branches: &[Branch]) -> Result<Self> {
        if branches.is_empty() || branches.len() > cuts.len() {
            return Err(invalid("need between 1 and cuts.len() branches"));
        }
        let mut s = Self::with_cuts(ell, cuts)?;
        if branches[0].attach.is_some() {
            return Err(invalid("branch 0 cannot be attached"));
        }
        for (k, b) in branches.iter().enumerate() {
            let expect = s.branch_length_from_cuts(k);
            if (b.length - expect).abs() > 1e-9 * expect.max(1.0) {
                return Err(invalid(format!(
                    "branch {k} length {} disagrees with cuts ({expect})",
                    b.length
                )));
            }
            if k > 0 {
                let at = b
                    .attach
                    .ok_or_else(|| invalid(format!("branch {k} has no attach point")))?;
                if at.branch >= k {
                    return Err(invalid(format!(
                        "branch {k} attaches to later branch {}",
                        at.branch
                    )));
                }
                s.attach_next(at)?;
            }
        }
        Ok(s)
    }

    fn branch_length_from_cuts(&self, k: usize) -> f64 {
        if k == 0 {
            self.cuts[0]
        } else {
            self.cuts[k] - self.cuts[k - 1]
        }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn length(&self, b: usize) -> f64 {
        self.branches[b].length
    }

    pub fn attach(&self, b: usize) -> Option<TreePoint> {
        self.branches[b].attach
    }

    /// Number of glue hops from branch `b` down to branch 0.
    pub fn hops(&self, b: usize) -> u32 {
        self.hops[b]
    }

    pub fn base_height(&self, b: usize) -> f64 {
        self.base_height[b]
    }

    /// Total length of the active branches.
    pub fn total_length(&self) -> f64 {
        self.cuts[self.branches.len() - 1]
    }

    /// Total length of branches `0..k`.
    pub fn prefix_length(&self, k: usize) -> f64 {
        self.cuts[k - 1]
    }

    pub fn check_point(&self, p: TreePoint) -> Result<()> {
        if p.branch >= self.branches.len() {
            return Err(invalid(format!("branch {} not active", p.branch)));
        }
        let len = self.branches[p.branch].length;
        if !(p.offset >= 0.0 && p.offset <= len) {
            return Err(invalid(format!(
                "offset {} outside [0, {len}] on branch {}",
                p.offset, p.branch
            )));
        }
        Ok(())
    }

    /// Offset 0 of a non-root branch is the glue point on its parent.
    pub fn canonical(&self, mut p: TreePoint) -> TreePoint {
        while p.offset == 0.0 && p.branch != 0 {
            p = self.branches[p.branch].attach.unwrap();
        }
        p
    }

    /// Length-uniform point on the first `k` branches.
    pub fn sample_point_in<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> TreePoint {
        let total = self.cuts[k - 1];
        let x = rng.gen::<f64>() * total;
        let b = self.cuts[..k].partition_point(|&c| c <= x).min(k - 1);
        let start = if b == 0 { 0.0 } else { self.cuts[b - 1] };
        let offset = (x - start).clamp(0.0, self.branches[b].length);
        TreePoint { branch: b, offset }
    }

    /// Length-uniform point on the whole active skeleton.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TreePoint {
        self.sample_point_in(self.branches.len(), rng)
    }

    pub fn distance_to_root(&self, p: TreePoint) -> f64 {
        self.base_height[p.branch] + p.offset
    }

    /// Geodesic distance, by walking both points up the branch ancestry.
    pub fn distance(&self, a: TreePoint, b: TreePoint) -> f64 {
        let (mut a, mut b) = (a, b);
        let mut d = 0.0;
        while a.branch != b.branch {
            let ha = self.hops[a.branch];
            let hb = self.hops[b.branch];
            if ha > hb || (ha == hb && a.branch > b.branch) {
                d += a.offset;
                a = self.branches[a.branch].attach.unwrap();
            } else {
                d += b.offset;
                b = self.branches[b.branch].attach.unwrap();
            }
        }
        d + (a.offset - b.offset).abs()
    }

    /// Point where the geodesic from `p` to the root enters branches `0..k`.
    pub fn exit_into(&self, mut p: TreePoint, k: usize) -> TreePoint {
        while p.branch >= k {
            p = self.branches[p.branch].attach.unwrap();
        }
        p
    }

    /// Ancestor of `p` at root distance `h` (`h <= distance_to_root(p)`).
    pub fn ancestor_at_height(&self, mut p: TreePoint, h: f64) -> TreePoint {
        while p.branch != 0 && self.base_height[p.branch] >= h {
            p = self.branches[p.branch].attach.unwrap();
        }
        TreePoint {
            branch: p.branch,
            offset: (h - self.base_height[p.branch]).max(0.0),
        }
    }
}

/// Line-breaking skeleton with `k` branches.
pub fn build_skeleton<R: Rng + ?Sized>(ell: u32, k: usize, rng: &mut R) -> Result<Skeleton> {
    if k == 0 {
        return Err(invalid("need at least one branch"));
    }
    let cuts = sample_cuts(ell, k, rng)?;
    let mut s = Skeleton::with_cuts(ell, cuts)?;
    for _ in 1..k {
        let p = s.sample_point(rng);
        s.attach_next(p)?;
    }
    Ok(s)
}

/// Same gluing rule with arbitrary positive branch lengths.
pub fn skeleton_from_lengths<R: Rng + ?Sized>(
    ell: u32,
    lengths: &[f64],
    rng: &mut R,
) -> Result<Skeleton> {
    if lengths.is_empty() || lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(invalid("branch lengths must be positive and finite"));
    }
    let mut acc = 0.0;
    let cuts: Vec<f64> = lengths
        .iter()
        .map(|l| {
            acc += l;
            acc
        })
        .collect();
    let mut s = Skeleton::with_cuts(ell, cuts)?;
    for _ in 1..lengths.len() {
        let p = s.sample_point(rng);
        s.attach_next(p)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn hand_built() -> Skeleton {
        // branch 0: [0, 1]; branch 1 glued at 0.3 of branch 0; branch 2 at 0.1 of branch 1.
        let mut s = Skeleton::with_cuts(2, vec![1.0, 1.5, 2.25]).unwrap();
        s.attach_next(TreePoint::new(0, 0.3)).unwrap();
        s.attach_next(TreePoint::new(1, 0.1)).unwrap();
        s
    }

    #[test]
    fn distances_on_hand_built_tree() {
        let s = hand_built();
        let d = s.distance(TreePoint::new(1, 0.4), TreePoint::new(0, 0.9));
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(s.distance_to_root(TreePoint::new(0, 0.7)), 0.7);
        assert!((s.distance_to_root(TreePoint::new(2, 0.5)) - 0.9).abs() < 1e-12);
        let d = s.distance(TreePoint::new(2, 0.5), TreePoint::new(1, 0.4));
        assert!((d - 0.8).abs() < 1e-12);
        let d = s.distance(TreePoint::new(2, 0.2), TreePoint::new(0, 0.0));
        assert!((d - 0.6).abs() < 1e-12);
    }

    #[test]
    fn canonical_offset_zero() {
        let s = hand_built();
        let p = s.canonical(TreePoint::new(2, 0.0));
        assert_eq!(p, TreePoint::new(1, 0.1));
        assert_eq!(s.distance(TreePoint::new(2, 0.0), p), 0.0);
    }

    #[test]
    fn ancestor_and_exit() {
        let s = hand_built();
        let p = TreePoint::new(2, 0.5);
        assert_eq!(s.exit_into(p, 1), TreePoint::new(0, 0.3));
        assert_eq!(s.exit_into(p, 3), p);
        let a = s.ancestor_at_height(p, 0.35);
        assert_eq!(a.branch, 1);
        assert!((a.offset - 0.05).abs() < 1e-12);
        let a = s.ancestor_at_height(p, 0.2);
        assert_eq!(a.branch, 0);
    }

    #[test]
    fn single_branch_skeleton() {
        let mut rng = RngStream::new(1, 0);
        let s = build_skeleton(2, 1, &mut rng).unwrap();
        assert_eq!(s.total_length(), s.cuts()[0]);
        for _ in 0..100 {
            let p = s.sample_point(&mut rng);
            assert_eq!(p.branch, 0);
            assert_eq!(s.distance_to_root(p), p.offset);
        }
    }

    #[test]
    fn total_length_matches_last_cut() {
        let mut rng = RngStream::new(2, 0);
        let s = build_skeleton(3, 30, &mut rng).unwrap();
        assert_eq!(s.total_length(), s.cuts()[29]);
        let sum: f64 = s.branches().iter().map(|b| b.length).sum();
        assert!((sum - s.total_length()).abs() < 1e-12 * s.total_length());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Skeleton::with_cuts(2, vec![]).is_err());
        assert!(Skeleton::with_cuts(2, vec![1.0, 0.5]).is_err());
        let mut s = Skeleton::with_cuts(2, vec![1.0, 2.0]).unwrap();
        assert!(s.attach_next(TreePoint::new(0, 1.5)).is_err());
        assert!(s.attach_next(TreePoint::new(1, 0.5)).is_err());
        s.attach_next(TreePoint::new(0, 0.5)).unwrap();
        assert!(s.attach_next(TreePoint::new(0, 0.5)).is_err());
        let mut rng = RngStream::new(3, 0);
        assert!(skeleton_from_lengths(2, &[1.0, -1.0], &mut rng).is_err());
    }
}
