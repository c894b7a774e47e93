//! Sequential growth of `T(n)` on a parent array.
//!
//! Vertex ids follow creation order: the root is 0, the first leaf is 1, and
//! step `m` appends the new internal vertex and then, when `ell | m`, its leaf.
//! Every non-root vertex `v` owns the edge to its parent, so edge `e` is the
//! edge whose child is vertex `e + 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Root,
    Internal,
    Leaf,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Root => "root",
            VertexKind::Internal => "internal",
            VertexKind::Leaf => "leaf",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthTree {
    ell: u32,
    n: u64,
    parent: Vec<u32>,
    kind: Vec<VertexKind>,
    creation: Vec<u32>,
    leaves: Vec<u32>,
}

/// Number of vertices of `T(n)`.
pub fn vertex_count(ell: u32, n: u64) -> u64 {
    n + n / ell as u64 + 2
}

/// Number of leaves of `T(n)`.
pub fn leaf_count(ell: u32, n: u64) -> u64 {
    n / ell as u64 + 1
}

/// Id of the internal vertex created at step `m >= 1`.
pub fn internal_id(ell: u32, m: u64) -> u32 {
    debug_assert!(m >= 1);
    (1 + m + (m - 1) / ell as u64) as u32
}

impl GrowthTree {
    /// `T(0)`: the root joined to the first leaf.
    pub fn initial(ell: u32) -> Result<Self> {
        if ell == 0 {
            return Err(invalid("ell must be at least 1"));
        }
        Ok(Self {
            ell,
            n: 0,
            parent: vec![NO_PARENT, 0],
            kind: vec![VertexKind::Root, VertexKind::Leaf],
            creation: vec![0, 0],
            leaves: vec![1],
        })
    }

    /// Splits edge `e` with a fresh vertex, and attaches a leaf when the new
    /// step index is a multiple of `ell`.
    pub fn split_edge(&mut self, e: usize) {
        assert!(e < self.edge_count(), "edge {e} out of range");
        let m = self.n + 1;
        let child = (e + 1) as u32;
        let w = self.parent.len() as u32;
        let up = self.parent[child as usize];
        self.parent.push(up);
        self.kind.push(VertexKind::Internal);
        self.creation.push(m as u32);
        self.parent[child as usize] = w;
        if m % self.ell as u64 == 0 {
            let leaf = w + 1;
            self.parent.push(w);
            self.kind.push(VertexKind::Leaf);
            self.creation.push(m as u32);
            self.leaves.push(leaf);
        }
        self.n = m;
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let e = rng.gen_range(0..self.edge_count());
        self.split_edge(e);
    }

    /// Builds a tree from raw arrays, checking every structural invariant.
    pub fn from_parts(
        ell: u32,
        n: u64,
        parent: Vec<u32>,
        kind: Vec<VertexKind>,
        creation: Vec<u32>,
    ) -> Result<Self> {
        if ell == 0 {
            return Err(invalid("ell must be at least 1"));
        }
        let nv = parent.len();
        if nv as u64 != vertex_count(ell, n) || kind.len() != nv || creation.len() != nv {
            return Err(invalid(format!(
                "expected {} vertices for n = {n}, got {nv}",
                vertex_count(ell, n)
            )));
        }
        if parent[0] != NO_PARENT || kind[0] != VertexKind::Root {
            return Err(invalid("vertex 0 must be the root"));
        }
        let mut children = vec![0u32; nv];
        for v in 1..nv {
            let p = parent[v];
            if p as usize >= nv || p as usize == v {
                return Err(invalid(format!("vertex {v} has invalid parent {p}")));
            }
            children[p as usize] += 1;
        }
        let mut leaves = Vec::new();
        for v in 0..nv {
            let want = match kind[v] {
                VertexKind::Root if v == 0 => 1,
                VertexKind::Root => return Err(invalid(format!("extra root at {v}"))),
                VertexKind::Leaf => 0,
                VertexKind::Internal => {
                    if creation[v] == 0 {
                        return Err(invalid(format!("internal vertex {v} has step 0")));
                    }
                    1 + (creation[v] as u64 % ell as u64 == 0) as u32
                }
            };
            if children[v] != want {
                return Err(invalid(format!(
                    "vertex {v} ({}) has {} children, expected {want}",
                    kind[v].as_str(),
                    children[v]
                )));
            }
            if kind[v] == VertexKind::Leaf {
                leaves.push(v as u32);
            }
        }
        if leaves.len() as u64 != leaf_count(ell, n) {
            return Err(invalid("wrong number of leaves"));
        }
        let t = Self {
            ell,
            n,
            parent,
            kind,
            creation,
            leaves,
        };
        // Cycles would leave some vertex without a finite depth.
        t.try_depths()
            .ok_or_else(|| invalid("parent array contains a cycle"))?;
        Ok(t)
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        let p = self.parent[v as usize];
        (p != NO_PARENT).then_some(p)
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    pub fn kind(&self, v: u32) -> VertexKind {
        self.kind[v as usize]
    }

    pub fn creation_step(&self, v: u32) -> u32 {
        self.creation[v as usize]
    }

    /// Leaf `L_{i+1}` (0-based index).
    pub fn leaf(&self, i: usize) -> u32 {
        self.leaves[i]
    }

    /// 0-based leaf index of `v`, if it is a leaf.
    pub fn leaf_index(&self, v: u32) -> Option<usize> {
        if self.kind[v as usize] != VertexKind::Leaf {
            return None;
        }
        let step = self.creation[v as usize] as u64;
        Some((step / self.ell as u64) as usize)
    }

    /// Vertex at the near end of branch `i` (0-based): the root for `i = 0`,
    /// otherwise the internal vertex created at step `i * ell`.
    pub fn branch_start(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            internal_id(self.ell, i as u64 * self.ell as u64)
        }
    }

    fn try_depths(&self) -> Option<Vec<u32>> {
        let nv = self.parent.len();
        let mut depth = vec![u32::MAX; nv];
        depth[0] = 0;
        let mut chain = Vec::new();
        for v in 0..nv {
            let mut u = v as u32;
            while depth[u as usize] == u32::MAX {
                chain.push(u);
                if chain.len() > nv {
                    return None;
                }
                u = self.parent[u as usize];
            }
            let mut d = depth[u as usize];
            while let Some(w) = chain.pop() {
                d += 1;
                depth[w as usize] = d;
            }
        }
        Some(depth)
    }
}

/// `T(n)` grown from `T(0)` by `n` uniform edge splits.
pub fn grow<R: Rng + ?Sized>(ell: u32, n: u64, rng: &mut R) -> Result<GrowthTree> {
    if vertex_count(ell.max(1), n) > u32::MAX as u64 / 2 {
        return Err(invalid(format!("n = {n} too large")));
    }
    let mut t = GrowthTree::initial(ell)?;
    t.parent.reserve(vertex_count(ell, n) as usize);
    for _ in 0..n {
        t.step(rng);
    }
    Ok(t)
}

/// Graph distance from the root for every vertex.
pub fn depth_profile(t: &GrowthTree) -> Vec<u32> {
    t.try_depths().expect("validated tree is acyclic")
}

/// Largest root distance.
pub fn height(t: &GrowthTree) -> u32 {
    depth_profile(t).into_iter().max().unwrap_or(0)
}

/// Vertex set of `R_k(n)`, the subtree spanned by the root and the first `k` leaves.
#[derive(Clone, Debug)]
pub struct SpannedSubtree {
    pub k: usize,
    pub member: Vec<bool>,
    pub size: usize,
}

impl SpannedSubtree {
    pub fn contains(&self, v: u32) -> bool {
        self.member[v as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.size - 1
    }
}

pub fn spanned_subtree(t: &GrowthTree, k: usize) -> Result<SpannedSubtree> {
    if k == 0 || k > t.leaf_count() {
        return Err(invalid(format!("k = {k} outside 1..={}", t.leaf_count())));
    }
    let mut member = vec![false; t.vertex_count()];
    member[0] = true;
    let mut size = 1;
    for i in 0..k {
        let mut v = t.leaf(i);
        while !member[v as usize] {
            member[v as usize] = true;
            size += 1;
            v = t.parent[v as usize];
        }
    }
    Ok(SpannedSubtree { k, member, size })
}

/// Edge counts of branches `1..=k`. Branch `i` runs from its start vertex
/// (see [`GrowthTree::branch_start`]) to leaf `L_i`.
pub fn branch_lengths(t: &GrowthTree, k: usize) -> Result<Vec<u64>> {
    if k == 0 || k > t.leaf_count() {
        return Err(invalid(format!("k = {k} outside 1..={}", t.leaf_count())));
    }
    Ok((0..k)
        .map(|i| {
            let start = t.branch_start(i);
            let mut v = t.leaf(i);
            let mut len = 0;
            while v != start {
                v = t.parent[v as usize];
                len += 1;
            }
            len
        })
        .collect())
}
