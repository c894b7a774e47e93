//! Alternative marker schedule that tracks the last inserted vertex.
//!
//! The tracked point `X_k` either moves onto the newly glued branch (when
//! `W_{k+1} <= dC_{k+1} / C_{k+1}`), or stays put while the branch is glued
//! at a fresh uniform vertex. In both cases `ell - 1` further uniform vertices
//! follow. After `m` rounds `X_m` is length-uniform on the tree.

use rand::Rng;

use crate::embellish::EmbellishedTree;
use crate::error::{invalid, Result};
use crate::samplers::sample_cuts;
use crate::skeleton::TreePoint;

#[derive(Clone, Debug)]
pub struct XCoupling {
    tree: EmbellishedTree,
    rounds: usize,
    /// `W_k`, `V_k` for rounds `1..=m` (index 0 holds round 1; `W_1` is unused).
    ws: Vec<f64>,
    vs: Vec<f64>,
    /// Whether round `k` moved the tracked point onto branch `k - 1`.
    moved: Vec<bool>,
    track: Vec<TreePoint>,
    x_vertex: u32,
}

impl XCoupling {
    pub fn build<R: Rng + ?Sized>(ell: u32, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(invalid("need at least one round"));
        }
        let cuts = sample_cuts(ell, m, rng)?;
        let mut tree = EmbellishedTree::start(ell, cuts.clone())?;
        let mut step = 0u32;

        let v1 = rng.gen::<f64>();
        let mut x = TreePoint::new(0, v1 * cuts[0]);
        let mut ws = vec![f64::NAN];
        let mut vs = vec![v1];
        let mut moved = vec![true];
        let mut track = vec![x];
        for _ in 1..ell {
            step += 1;
            let p = tree.sample_point_in(1, rng);
            tree.insert_vertex(p, step);
        }

        for k in 1..m {
            let w = rng.gen::<f64>();
            let v = rng.gen::<f64>();
            let dc = cuts[k] - cuts[k - 1];
            step += 1;
            if w <= dc / cuts[k] {
                let at = tree.insert_vertex(x, step);
                let b = tree.attach_branch_at(at, step);
                x = TreePoint::new(b, v * dc);
                moved.push(true);
            } else {
                let p = tree.sample_point_in(k, rng);
                let at = tree.insert_vertex(p, step);
                tree.attach_branch_at(at, step);
                moved.push(false);
            }
            ws.push(w);
            vs.push(v);
            track.push(x);
            for _ in 1..ell {
                step += 1;
                let p = tree.sample_point_in(k + 1, rng);
                tree.insert_vertex(p, step);
            }
        }
        step += 1;
        let x_vertex = tree.insert_vertex(x, step);
        Ok(Self {
            tree,
            rounds: m,
            ws,
            vs,
            moved,
            track,
            x_vertex,
        })
    }

    pub fn tree(&self) -> &EmbellishedTree {
        &self.tree
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Tracked point after round `k` (1-based).
    pub fn x(&self, k: usize) -> TreePoint {
        self.track[k - 1]
    }

    pub fn x_vertex(&self) -> u32 {
        self.x_vertex
    }

    /// Whether round `k >= 2` moved the tracked point.
    pub fn moved(&self, k: usize) -> bool {
        self.moved[k - 1]
    }

    pub fn w(&self, k: usize) -> f64 {
        self.ws[k - 1]
    }

    pub fn v(&self, k: usize) -> f64 {
        self.vs[k - 1]
    }

    /// Edge count of branch `i` (1-based) in the final tree.
    pub fn branch_edges(&self, i: usize) -> u64 {
        self.tree.markers(i - 1).len() as u64 + 1
    }

    /// Graph distance from the tracked vertex to the subtree on branches `1..=k`.
    pub fn direct_pendant_distance(&self, k: usize) -> u64 {
        let x = self.tree.vertex_point(self.x_vertex);
        let exit = self.tree.skeleton().exit_into(x, k);
        self.tree.count_vertices(x, exit)
    }

    /// `sum_{i=k+1}^m ceil(V_i * U_i) * 1{round i moved}`, with `U_i` taken as
    /// the edge count of branch `i` minus the tracked vertex lying on it.
    pub fn pendant_distance_sample(&self, k: usize) -> u64 {
        (k + 1..=self.rounds)
            .filter(|&i| self.moved(i))
            .map(|i| (self.v(i) * (self.branch_edges(i) - 1) as f64).ceil() as u64)
            .sum()
    }

    /// Same sum with `U_i` the full edge count of branch `i`; stochastically
    /// dominates [`direct_pendant_distance`](Self::direct_pendant_distance).
    pub fn pendant_distance_upper(&self, k: usize) -> u64 {
        (k + 1..=self.rounds)
            .filter(|&i| self.moved(i))
            .map(|i| (self.v(i) * self.branch_edges(i) as f64).ceil() as u64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn vertex_budget() {
        let mut rng = RngStream::new(1, 0);
        for ell in 1..=3u32 {
            for m in 1..=6 {
                let x = XCoupling::build(ell, m, &mut rng).unwrap();
                // ell * m internal vertices, m leaves and the root.
                assert_eq!(x.tree().vertex_count(), ell as usize * m + m + 1);
                assert_eq!(x.tree().branch_count(), m);
            }
        }
    }

    #[test]
    fn single_round_tracks_branch_zero() {
        let mut rng = RngStream::new(2, 0);
        let x = XCoupling::build(2, 1, &mut rng).unwrap();
        assert_eq!(x.x(1).branch, 0);
        assert_eq!(x.direct_pendant_distance(1), 0);
        assert_eq!(x.pendant_distance_sample(1), 0);
    }

    #[test]
    fn distance_is_positive_iff_moved_beyond_k() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..500 {
            let x = XCoupling::build(2, 6, &mut rng).unwrap();
            let k = 2;
            let beyond = (k + 1..=6).any(|i| x.moved(i));
            assert_eq!(x.direct_pendant_distance(k) > 0, beyond);
            assert_eq!(x.pendant_distance_sample(k) > 0, beyond);
        }
    }
}
