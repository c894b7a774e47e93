//! Skeleton plus marked vertices. Step `m` drops a marker at a length-uniform
//! point; when `ell | m` the next branch is glued at that marker and carries a
//! new leaf at its far end. Reading the vertices off along each branch gives
//! a tree with the law of `T(n)`.
//!
//! Graph distances between vertices are vertex counts along half-open paths
//! `[x, y)`: the start is counted when it is a vertex, the end never is.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::growth::{GrowthTree, VertexKind, NO_PARENT};
use crate::samplers::{graph_scale, CutSampler};
use crate::skeleton::{Skeleton, TreePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub offset: f64,
    pub vertex: u32,
    pub step: u32,
}

#[derive(Clone, Debug)]
pub struct EmbellishedTree {
    skel: Skeleton,
    cut_sampler: CutSampler,
    /// Per-branch markers sorted by offset.
    markers: Vec<Vec<Marker>>,
    /// Vertex at offset 0 of each branch (the root for branch 0).
    base_vertex: Vec<u32>,
    leaf_vertex: Vec<u32>,
    loc: Vec<TreePoint>,
    kind: Vec<VertexKind>,
    creation: Vec<u32>,
    step: u64,
}

impl EmbellishedTree {
    /// Starts from branch 0 alone. `cuts` may hold more values than needed;
    /// missing ones are drawn on demand.
    pub fn start(ell: u32, cuts: Vec<f64>) -> Result<Self> {
        let mut cut_sampler = CutSampler::new(ell);
        let skel = Skeleton::with_cuts(ell, cuts)?;
        // Resume the gamma sum so on-demand cuts continue the same sequence.
        cut_sampler.resume_from(*skel.cuts().last().unwrap());
        let c0 = skel.length(0);
        Ok(Self {
            skel,
            cut_sampler,
            markers: vec![Vec::new()],
            base_vertex: vec![0],
            leaf_vertex: vec![1],
            loc: vec![TreePoint::ROOT, TreePoint::new(0, c0)],
            kind: vec![VertexKind::Root, VertexKind::Leaf],
            creation: vec![0, 0],
            step: 0,
        })
    }

    /// Ensures at least `k` cuts are available.
    pub fn ensure_cuts<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) {
        while self.skel.cuts().len() < k {
            let c = self.cut_sampler.next_cut(rng);
            self.skel.push_cut(c).expect("cut sequence increases");
        }
    }

    pub fn ell(&self) -> u32 {
        self.skel.ell()
    }

    pub fn n(&self) -> u64 {
        self.step
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skel
    }

    pub fn branch_count(&self) -> usize {
        self.skel.branch_count()
    }

    pub fn markers(&self, b: usize) -> &[Marker] {
        &self.markers[b]
    }

    pub fn vertex_count(&self) -> usize {
        self.loc.len()
    }

    pub fn vertex_point(&self, v: u32) -> TreePoint {
        self.loc[v as usize]
    }

    pub fn leaf_vertex(&self, b: usize) -> u32 {
        self.leaf_vertex[b]
    }

    pub fn base_vertex(&self, b: usize) -> u32 {
        self.base_vertex[b]
    }

    /// One growth step.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let m = self.step + 1;
        let p = self.skel.sample_point(rng);
        let v = self.insert_vertex(p, m as u32);
        self.step = m;
        if m % self.ell() as u64 == 0 {
            let k = self.branch_count();
            self.ensure_cuts(k + 1, rng);
            self.attach_branch_at(v, m as u32);
        }
        v
    }

    /// Places a new internal vertex at `p`.
    pub(crate) fn insert_vertex(&mut self, p: TreePoint, step: u32) -> u32 {
        let p = self.skel.canonical(p);
        let v = self.loc.len() as u32;
        let list = &mut self.markers[p.branch];
        let pos = list.partition_point(|mk| mk.offset <= p.offset);
        list.insert(
            pos,
            Marker {
                offset: p.offset,
                vertex: v,
                step,
            },
        );
        self.loc.push(p);
        self.kind.push(VertexKind::Internal);
        self.creation.push(step);
        v
    }

    /// Glues the next branch at existing vertex `v` and adds its leaf.
    pub(crate) fn attach_branch_at(&mut self, v: u32, step: u32) -> usize {
        let p = self.loc[v as usize];
        let b = self.skel.attach_next(p).expect("cut available");
        let leaf = self.loc.len() as u32;
        self.markers.push(Vec::new());
        self.base_vertex.push(v);
        self.leaf_vertex.push(leaf);
        self.loc.push(TreePoint::new(b, self.skel.length(b)));
        self.kind.push(VertexKind::Leaf);
        self.creation.push(step);
        b
    }

    /// Length-uniform point over the first `k` branches.
    pub fn sample_point_in<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> TreePoint {
        self.skel.sample_point_in(k, rng)
    }

    fn count_range(&self, b: usize, lo: f64, lo_closed: bool, hi: f64) -> u64 {
        let list = &self.markers[b];
        let start = if lo_closed {
            list.partition_point(|m| m.offset < lo)
        } else {
            list.partition_point(|m| m.offset <= lo)
        };
        let end = list.partition_point(|m| m.offset <= hi);
        let mut c = end.saturating_sub(start) as u64;
        let len = self.skel.length(b);
        if hi >= len && (lo < len || (lo_closed && lo == len)) {
            c += 1; // leaf at the far end
        }
        if b == 0 && lo == 0.0 && lo_closed {
            c += 1; // root
        }
        c
    }

    /// Whether some vertex sits exactly at `p`.
    pub fn is_vertex_at(&self, p: TreePoint) -> bool {
        let p = self.skel.canonical(p);
        if p.branch == 0 && p.offset == 0.0 {
            return true;
        }
        if p.offset == self.skel.length(p.branch) {
            return true;
        }
        let list = &self.markers[p.branch];
        let i = list.partition_point(|m| m.offset < p.offset);
        i < list.len() && list[i].offset == p.offset
    }

    /// Number of vertices on the half-open geodesic `[a, b)`.
    pub fn count_vertices(&self, a: TreePoint, b: TreePoint) -> u64 {
        let a = self.skel.canonical(a);
        let b = self.skel.canonical(b);
        if a == b {
            return 0;
        }
        let (mut pa, mut pb) = (a, b);
        let mut total = 0;
        while pa.branch != pb.branch {
            let move_a = {
                let ha = self.skel.hops(pa.branch);
                let hb = self.skel.hops(pb.branch);
                ha > hb || (ha == hb && pa.branch > pb.branch)
            };
            let p = if move_a { &mut pa } else { &mut pb };
            total += self.count_range(p.branch, 0.0, false, p.offset);
            *p = self.skel.attach(p.branch).unwrap();
        }
        let (lo, hi) = if pa.offset <= pb.offset {
            (pa.offset, pb.offset)
        } else {
            (pb.offset, pa.offset)
        };
        total += self.count_range(pa.branch, lo, true, hi);
        total - self.is_vertex_at(b) as u64
    }

    /// Graph distance between two vertices.
    pub fn graph_distance(&self, u: u32, v: u32) -> u64 {
        self.count_vertices(self.loc[u as usize], self.loc[v as usize])
    }

    /// Scaled graph distance `c / n^alpha` times the edge count.
    pub fn scaled_distance(&self, u: u32, v: u32) -> f64 {
        graph_scale(self.ell(), self.step.max(1)) * self.graph_distance(u, v) as f64
    }

    /// Vertices lying on branches `0..k`.
    pub fn vertices_on_first(&self, k: usize) -> Vec<u32> {
        let mut out = vec![0];
        for b in 0..k.min(self.branch_count()) {
            out.extend(self.markers[b].iter().map(|m| m.vertex));
            out.push(self.leaf_vertex[b]);
        }
        out
    }

    /// Nearest vertex at or below `p` on its root path.
    pub fn vertex_at_or_below(&self, p: TreePoint) -> u32 {
        let p = self.skel.canonical(p);
        if p.offset == self.skel.length(p.branch) {
            return self.leaf_vertex[p.branch];
        }
        let list = &self.markers[p.branch];
        let i = list.partition_point(|m| m.offset <= p.offset);
        if i > 0 {
            list[i - 1].vertex
        } else {
            self.base_vertex[p.branch]
        }
    }

    /// Lengths of the vertex-to-vertex segments of the first `k` branches, in
    /// branch order then offset order; each is tagged by its far vertex.
    pub fn edge_lengths(&self, k: usize) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        for b in 0..k {
            let mut prev = 0.0;
            for m in &self.markers[b] {
                out.push((m.vertex, m.offset - prev));
                prev = m.offset;
            }
            out.push((self.leaf_vertex[b], self.skel.length(b) - prev));
        }
        out
    }

    /// Reads the combinatorial tree off the marked skeleton.
    pub fn to_growth_tree(&self) -> Result<GrowthTree> {
        let nv = self.loc.len();
        let mut parent = vec![NO_PARENT; nv];
        for b in 0..self.branch_count() {
            let mut prev = self.base_vertex[b];
            for m in &self.markers[b] {
                parent[m.vertex as usize] = prev;
                prev = m.vertex;
            }
            parent[self.leaf_vertex[b] as usize] = prev;
        }
        GrowthTree::from_parts(
            self.ell(),
            self.step,
            parent,
            self.kind.clone(),
            self.creation.clone(),
        )
    }

    /// Rebuilds from a stored skeleton and marker list `(branch, offset, vertex, step)`.
    pub fn from_parts(
        skel: Skeleton,
        n: u64,
        mut markers: Vec<(usize, f64, u32, u32)>,
    ) -> Result<Self> {
        let ell = skel.ell();
        let k = skel.branch_count();
        if k as u64 != n / ell as u64 + 1 || markers.len() as u64 != n {
            return Err(invalid(format!(
                "expected {} branches and {n} markers, got {k} and {}",
                n / ell as u64 + 1,
                markers.len()
            )));
        }
        markers.sort_by_key(|m| m.2);
        let nv = (n + k as u64 + 1) as usize;
        let mut t = EmbellishedTree {
            cut_sampler: CutSampler::new(ell),
            markers: vec![Vec::new(); k],
            base_vertex: vec![0; k],
            leaf_vertex: vec![1; k],
            loc: vec![TreePoint::ROOT; nv],
            kind: vec![VertexKind::Leaf; nv],
            creation: vec![0; nv],
            step: n,
            skel,
        };
        t.cut_sampler.resume_from(*t.skel.cuts().last().unwrap());
        t.kind[0] = VertexKind::Root;
        t.loc[1] = TreePoint::new(0, t.skel.length(0));
        let mut seen = vec![false; nv];
        seen[0] = true;
        seen[1] = true;
        for &(b, off, v, step) in &markers {
            let vi = v as usize;
            if vi >= nv || seen[vi] {
                return Err(invalid(format!("bad or repeated vertex id {v}")));
            }
            let p = TreePoint::new(b, off);
            t.skel.check_point(p)?;
            seen[vi] = true;
            t.markers[b].push(Marker {
                offset: off,
                vertex: v,
                step,
            });
            t.loc[vi] = p;
            t.kind[vi] = VertexKind::Internal;
            t.creation[vi] = step;
            if step as u64 % ell as u64 == 0 {
                let nb = (step / ell) as usize;
                if nb >= k || vi + 1 >= nv {
                    return Err(invalid(format!("marker {v} opens a missing branch")));
                }
                let at = t.skel.canonical(t.skel.attach(nb).unwrap());
                if at.branch != b || at.offset != off {
                    return Err(invalid(format!("branch {nb} is not glued at marker {v}")));
                }
                t.base_vertex[nb] = v;
                t.leaf_vertex[nb] = v + 1;
                t.loc[vi + 1] = TreePoint::new(nb, t.skel.length(nb));
                t.creation[vi + 1] = step;
                seen[vi + 1] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("vertex ids are not contiguous"));
        }
        for list in &mut t.markers {
            list.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        }
        Ok(t)
    }

    /// All markers as `(branch, offset, vertex, step)`, ordered by vertex id.
    pub fn marker_table(&self) -> Vec<(usize, f64, u32, u32)> {
        let mut out: Vec<_> = self
            .markers
            .iter()
            .enumerate()
            .flat_map(|(b, list)| list.iter().map(move |m| (b, m.offset, m.vertex, m.step)))
            .collect();
        out.sort_by_key(|m| m.2);
        out
    }
}

/// Runs `n` steps from freshly drawn cuts.
pub fn embellish<R: Rng + ?Sized>(ell: u32, n: u64, rng: &mut R) -> Result<EmbellishedTree> {
    if ell == 0 {
        return Err(invalid("ell must be at least 1"));
    }
    let k = (n / ell as u64 + 1) as usize;
    let cuts = crate::samplers::sample_cuts(ell, k, rng)?;
    let mut t = EmbellishedTree::start(ell, cuts)?;
    for _ in 0..n {
        t.advance(rng);
    }
    Ok(t)
}
