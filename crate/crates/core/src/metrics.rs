//! Distances between the grown tree and its continuum coupling.
//!
//! The two sides are matched cell by cell. A cell is a connected piece of a
//! root-distance band of width `eps / 2`, so its diameter is at most `eps`.
//! Every vertex of `R_k(n)` belongs to the cell containing its location.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::embellish::EmbellishedTree;
use crate::error::{invalid, Result};
use crate::growth::{depth_profile, spanned_subtree, GrowthTree, SpannedSubtree};
use crate::samplers::graph_scale;
use crate::skeleton::TreePoint;

// ─── pendant structure of R_k(n) ───────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendantStats {
    /// Largest graph distance to `R_k(n)`.
    pub max_distance: u64,
    /// `c / n^alpha * max_distance`.
    pub d_scaled: f64,
    /// Largest pendant component, in vertices.
    pub s_max: u64,
}

/// For each vertex outside `R_k(n)`: the top vertex of its pendant
/// component and its distance to `R_k(n)`. Members map to themselves at 0.
fn pendant_tops(t: &GrowthTree, r: &SpannedSubtree) -> (Vec<u32>, Vec<u32>) {
    let nv = t.vertex_count();
    let parents = t.parents();
    let mut top = vec![u32::MAX; nv];
    let mut dist = vec![0u32; nv];
    for v in 0..nv {
        if r.member[v] {
            top[v] = v as u32;
        }
    }
    let mut chain = Vec::new();
    for v in 0..nv {
        let mut u = v as u32;
        while top[u as usize] == u32::MAX {
            chain.push(u);
            u = parents[u as usize];
        }
        // `u` is resolved: a member, or a pendant vertex with known top.
        let (mut tp, mut d) = if r.member[u as usize] {
            (u32::MAX, 0)
        } else {
            (top[u as usize], dist[u as usize])
        };
        while let Some(w) = chain.pop() {
            d += 1;
            if tp == u32::MAX {
                tp = w;
            }
            top[w as usize] = tp;
            dist[w as usize] = d;
        }
    }
    (top, dist)
}

pub fn pendant_stats(t: &GrowthTree, k: usize) -> Result<PendantStats> {
    let r = spanned_subtree(t, k)?;
    let (top, dist) = pendant_tops(t, &r);
    let mut size: HashMap<u32, u64> = HashMap::new();
    let mut max_distance = 0;
    for v in 0..t.vertex_count() {
        if !r.member[v] {
            *size.entry(top[v]).or_default() += 1;
            max_distance = max_distance.max(dist[v] as u64);
        }
    }
    Ok(PendantStats {
        max_distance,
        d_scaled: graph_scale(t.ell(), t.n().max(1)) * max_distance as f64,
        s_max: size.values().copied().max().unwrap_or(0),
    })
}

/// `nu_bar(w) = (1 + vertices hanging off w outside R_k(n)) / N` for each
/// member `w` of `R_k(n)`, listed by vertex id.
pub fn project_measure(t: &GrowthTree, k: usize) -> Result<Vec<(u32, f64)>> {
    let r = spanned_subtree(t, k)?;
    let (top, _) = pendant_tops(t, &r);
    let mut mass = vec![0u64; t.vertex_count()];
    for v in 0..t.vertex_count() {
        if r.member[v] {
            mass[v] += 1;
        } else {
            let anchor = t.parent(top[v]).unwrap();
            mass[anchor as usize] += 1;
        }
    }
    let total = t.vertex_count() as f64;
    Ok((0..t.vertex_count())
        .filter(|&v| r.member[v])
        .map(|v| (v as u32, mass[v] as f64 / total))
        .collect())
}

/// Prokhorov distance upper bound between `nu_bar` and the uniform measure on
/// `R_k(n)`, in the scaled graph metric. For cells of diameter at most `eps`,
/// `d_P <= max(eps, sum of positive cell differences)`; the bound is the best
/// such value over `eps, eps/2, eps/4, ...` down to one edge.
pub fn prokhorov_bound(t: &GrowthTree, k: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let r = spanned_subtree(t, k)?;
    let nu_bar = project_measure(t, k)?;
    let depth = depth_profile(t);
    let scale = graph_scale(t.ell(), t.n().max(1));
    let members: Vec<u32> = nu_bar.iter().map(|x| x.0).collect();
    let uniform = 1.0 / members.len() as f64;
    // Members sorted by depth so parents come first.
    let mut order = members.clone();
    order.sort_by_key(|&v| (depth[v as usize], v));

    let mut best = f64::INFINITY;
    let mut e = eps;
    loop {
        let width = e / 2.0;
        let band = |v: u32| -> i64 {
            let h = depth[v as usize] as f64 * scale;
            if h == 0.0 {
                0
            } else {
                (h / width).ceil() as i64 - 1
            }
        };
        let mut anchor = vec![u32::MAX; t.vertex_count()];
        for &v in &order {
            anchor[v as usize] = match t.parent(v) {
                Some(p) if band(p) == band(v) => anchor[p as usize],
                _ => v,
            };
        }
        let mut diff: BTreeMap<u32, f64> = BTreeMap::new();
        for &(v, w) in &nu_bar {
            *diff.entry(anchor[v as usize]).or_default() += w - uniform;
        }
        let excess: f64 = diff.values().filter(|d| **d > 0.0).sum();
        best = best.min(e.max(excess));
        if e <= scale || e < best * 1e-3 {
            break;
        }
        e /= 2.0;
    }
    debug_assert!(r.size == members.len());
    Ok(best)
}

// ─── cell cover of the first k branches ────────────────────────────────────

#[derive(Clone, Debug)]
pub struct Cell {
    pub band: i64,
    pub anchor: TreePoint,
    /// Pieces `(branch, lo, hi)`; points with offsets in `(lo, hi]` belong to
    /// the cell (and offset 0 of branch 0 for the root cell).
    pub segments: Vec<(usize, f64, f64)>,
    pub length: f64,
    pub vertices: Vec<u32>,
    pub representative: u32,
}

#[derive(Clone, Debug)]
pub struct CellCover {
    pub eps: f64,
    pub k: usize,
    pub cells: Vec<Cell>,
    /// Per branch, `(lo, hi, cell)` sorted by offset.
    pieces: Vec<Vec<(f64, f64, usize)>>,
}

impl CellCover {
    pub fn build(e: &EmbellishedTree, k: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        if k == 0 || k > e.branch_count() {
            return Err(invalid(format!("k = {k} outside 1..={}", e.branch_count())));
        }
        let s = e.skeleton();
        let h = eps / 2.0;
        let mut cells: Vec<Cell> = Vec::new();
        let mut pieces: Vec<Vec<(f64, f64, usize)>> = Vec::with_capacity(k);
        let new_cell = |cells: &mut Vec<Cell>, band: i64, anchor: TreePoint| {
            cells.push(Cell {
                band,
                anchor,
                segments: Vec::new(),
                length: 0.0,
                vertices: Vec::new(),
                representative: 0,
            });
            cells.len() - 1
        };
        for b in 0..k {
            let base = s.base_height(b);
            let len = s.length(b);
            let mut band = (base / h).floor() as i64;
            let mut cell = if b == 0 {
                new_cell(&mut cells, 0, TreePoint::ROOT)
            } else {
                let at = s.attach(b).unwrap();
                let at_band = if base == 0.0 {
                    0
                } else {
                    (base / h).ceil() as i64 - 1
                };
                if at_band == band {
                    locate_in(&pieces, at)
                } else {
                    new_cell(&mut cells, band, at)
                }
            };
            let mut list = Vec::new();
            let mut lo = 0.0;
            loop {
                let boundary = (band + 1) as f64 * h - base;
                let hi = if boundary >= len { len } else { boundary };
                if hi > lo {
                    list.push((lo, hi, cell));
                    cells[cell].segments.push((b, lo, hi));
                    cells[cell].length += hi - lo;
                }
                if hi >= len {
                    break;
                }
                lo = hi;
                band += 1;
                cell = new_cell(&mut cells, band, TreePoint::new(b, lo));
            }
            pieces.push(list);
        }
        let mut cover = CellCover {
            eps,
            k,
            cells,
            pieces,
        };
        for v in e.vertices_on_first(k) {
            let c = cover.locate(e, e.vertex_point(v));
            cover.cells[c].vertices.push(v);
        }
        for cell in &mut cover.cells {
            cell.representative = match cell.vertices.iter().min_by(|&&a, &&b| {
                s.distance_to_root(e.vertex_point(a))
                    .total_cmp(&s.distance_to_root(e.vertex_point(b)))
                    .then(a.cmp(&b))
            }) {
                Some(&v) => v,
                None => e.vertex_at_or_below(cell.anchor),
            };
        }
        Ok(cover)
    }

    /// Cell containing `p` (a point on the first `k` branches).
    pub fn locate(&self, e: &EmbellishedTree, p: TreePoint) -> usize {
        locate_in(&self.pieces, e.skeleton().canonical(p))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

fn locate_in(pieces: &[Vec<(f64, f64, usize)>], p: TreePoint) -> usize {
    let list = &pieces[p.branch];
    let i = list.partition_point(|&(_, hi, _)| hi < p.offset);
    list[i.min(list.len() - 1)].2
}

/// Cover-based quantities for one coupled pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMetrics {
    pub cells: usize,
    pub dis_bound: f64,
    pub discrepancy: f64,
    pub ghp_bound: f64,
}

/// Per-cell radii: largest scaled graph distance from the representative to
/// a vertex of the cell, and largest length distance to a point of the cell.
fn cell_radii(e: &EmbellishedTree, cell: &Cell, scale: f64) -> (f64, f64) {
    let s = e.skeleton();
    let w = cell.representative;
    let wp = e.vertex_point(w);
    let r_gr = cell
        .vertices
        .iter()
        .map(|&x| scale * e.graph_distance(w, x) as f64)
        .fold(0.0, f64::max);
    let r_len = cell
        .segments
        .iter()
        .flat_map(|&(b, lo, hi)| [TreePoint::new(b, lo), TreePoint::new(b, hi)])
        .map(|q| s.distance(wp, q))
        .fold(0.0, f64::max);
    (r_gr, r_len)
}

/// Upper bound on the distortion of the cell correspondence:
/// `max_{i<=j} |d_n(w_i, w_j) - d(w_i, w_j)| + r_i + r_j`.
pub fn distortion_cover_bound(e: &EmbellishedTree, cover: &CellCover) -> f64 {
    let scale = graph_scale(e.ell(), e.n().max(1));
    let s = e.skeleton();
    let radii: Vec<f64> = cover
        .cells
        .iter()
        .map(|c| {
            let (a, b) = cell_radii(e, c, scale);
            a + b
        })
        .collect();
    let reps: Vec<u32> = cover.cells.iter().map(|c| c.representative).collect();
    let mut worst: f64 = 0.0;
    for i in 0..reps.len() {
        let pi = e.vertex_point(reps[i]);
        for j in i..reps.len() {
            let pj = e.vertex_point(reps[j]);
            let dn = scale * e.count_vertices(pi, pj) as f64;
            let dl = s.distance(pi, pj);
            worst = worst.max((dn - dl).abs() + radii[i] + radii[j]);
        }
    }
    worst
}

/// `sum_i |nu(v(A_i)) - mu(A_i)|` with `nu` uniform on the vertices of
/// `R_k(n)` and `mu` normalized length on the first `k` branches.
pub fn discrepancy(e: &EmbellishedTree, cover: &CellCover) -> f64 {
    let nverts: usize = cover.cells.iter().map(|c| c.vertices.len()).sum();
    let total_len = e.skeleton().prefix_length(cover.k);
    cover
        .cells
        .iter()
        .map(|c| (c.vertices.len() as f64 / nverts as f64 - c.length / total_len).abs())
        .sum()
}

/// `max(dis / 2, D, mass off the correspondence)`.
pub fn ghp_upper_bound(dis: f64, disc: f64, off_mass: f64) -> f64 {
    (dis / 2.0).max(disc).max(off_mass)
}

pub fn coupling_metrics(e: &EmbellishedTree, k: usize, eps: f64) -> Result<CouplingMetrics> {
    let cover = CellCover::build(e, k, eps)?;
    let dis = distortion_cover_bound(e, &cover);
    let disc = discrepancy(e, &cover);
    Ok(CouplingMetrics {
        cells: cover.len(),
        dis_bound: dis,
        discrepancy: disc,
        ghp_bound: ghp_upper_bound(dis, disc, 0.0),
    })
}

// ─── schedules ─────────────────────────────────────────────────────────────

/// Number of leaves followed at size `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSchedule {
    /// `ceil(n^{1/5})`
    Fifth,
    /// `ceil(n^{1/10})`
    Tenth,
}

impl KSchedule {
    pub fn k(self, n: u64) -> usize {
        let p = match self {
            KSchedule::Fifth => 0.2,
            KSchedule::Tenth => 0.1,
        };
        let k = (n as f64).powf(p).ceil() as usize;
        // Guard against powf landing just above an exact integer root.
        if k > 1 && ((k - 1) as f64).powf(1.0 / p) >= n as f64 {
            k - 1
        } else {
            k.max(1)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KSchedule::Fifth => "fifth",
            KSchedule::Tenth => "tenth",
        }
    }
}

impl std::str::FromStr for KSchedule {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fifth" => Ok(KSchedule::Fifth),
            "tenth" => Ok(KSchedule::Tenth),
            _ => Err(invalid(format!("unknown k schedule {s:?} (fifth, tenth)"))),
        }
    }
}

/// Cell width as a function of `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsSchedule {
    /// `k^{-1/(ell+1)}`
    Coupling,
    /// `k^{-1/(12(ell+1))}`
    Tightness,
}

impl EpsSchedule {
    pub fn eps(self, ell: u32, k: usize) -> f64 {
        let d = match self {
            EpsSchedule::Coupling => ell as f64 + 1.0,
            EpsSchedule::Tightness => 12.0 * (ell as f64 + 1.0),
        };
        (k as f64).powf(-1.0 / d)
    }

    pub fn name(self) -> &'static str {
        match self {
            EpsSchedule::Coupling => "coupling",
            EpsSchedule::Tightness => "tightness",
        }
    }
}

impl std::str::FromStr for EpsSchedule {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupling" => Ok(EpsSchedule::Coupling),
            "tightness" => Ok(EpsSchedule::Tightness),
            _ => Err(invalid(format!(
                "unknown eps schedule {s:?} (coupling, tightness)"
            ))),
        }
    }
}

// ─── finite-space oracles ──────────────────────────────────────────────────

/// Exact distortion of a finite correspondence.
pub fn distortion_exact<L, R>(pairs: &[(usize, usize)], dl: L, dr: R) -> Result<f64>
where
    L: Fn(usize, usize) -> f64,
    R: Fn(usize, usize) -> f64,
{
    if pairs.len() > 20_000 {
        return Err(invalid(format!(
            "{} pairs exceed the all-pairs guard",
            pairs.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for (i, &(x, xp)) in pairs.iter().enumerate() {
        for &(y, yp) in &pairs[i..] {
            worst = worst.max((dl(x, y) - dr(xp, yp)).abs());
        }
    }
    Ok(worst)
}

/// Exact Prokhorov distance between two measures on one finite metric space
/// (at most 12 points), by checking all subsets and bisecting on `eps`.
pub fn prokhorov_exact(d: &[Vec<f64>], mu: &[f64], nu: &[f64]) -> Result<f64> {
    let m = mu.len();
    if m == 0 || m > 12 || nu.len() != m || d.len() != m {
        return Err(invalid("prokhorov_exact needs 1..=12 points"));
    }
    let holds = |eps: f64| -> bool {
        for set in 1u32..(1 << m) {
            let mut a_mu = 0.0;
            let mut a_nu = 0.0;
            let mut nb_mu = 0.0;
            let mut nb_nu = 0.0;
            for x in 0..m {
                if set >> x & 1 == 1 {
                    a_mu += mu[x];
                    a_nu += nu[x];
                }
                let near = (0..m).any(|y| set >> y & 1 == 1 && d[x][y] < eps);
                if near {
                    nb_mu += mu[x];
                    nb_nu += nu[x];
                }
            }
            if a_mu > nb_nu + eps + 1e-12 || a_nu > nb_mu + eps + 1e-12 {
                return false;
            }
        }
        true
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Max flow through the bipartite relation `rel` with capacities `a`, `b`.
fn relation_flow(rel: &[(usize, usize)], a: &[f64], b: &[f64]) -> f64 {
    // Nodes: source 0, left 1..=na, right na+1..=na+nb, sink na+nb+1.
    let (na, nb) = (a.len(), b.len());
    let nn = na + nb + 2;
    let sink = nn - 1;
    let mut cap = vec![vec![0.0f64; nn]; nn];
    for (i, &x) in a.iter().enumerate() {
        cap[0][1 + i] = x;
    }
    for (j, &y) in b.iter().enumerate() {
        cap[1 + na + j][sink] = y;
    }
    for &(i, j) in rel {
        cap[1 + i][1 + na + j] = f64::INFINITY;
    }
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; nn];
        prev[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for v in 0..nn {
                if prev[v] == usize::MAX && cap[u][v] > 1e-15 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return flow;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != 0 {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != 0 {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        flow += push;
    }
}

/// Exact GHP-type distance between two measured finite spaces with at most six
/// points in total: minimum over correspondences `R` of
/// `max(dis(R) / 2, 2 (1 - f(R)) / 3)`, where `f(R)` is the largest mass a
/// sub-coupling can place on `R`.
pub fn ghp_exact_small(dl: &[Vec<f64>], mu: &[f64], dr: &[Vec<f64>], nu: &[f64]) -> Result<f64> {
    let (na, nb) = (mu.len(), nu.len());
    if na == 0 || nb == 0 || na + nb > 6 || dl.len() != na || dr.len() != nb {
        return Err(invalid(
            "ghp_exact_small needs two non-empty spaces with <= 6 points",
        ));
    }
    let all: Vec<(usize, usize)> = (0..na).flat_map(|i| (0..nb).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << all.len()) {
        let rel: Vec<(usize, usize)> = all
            .iter()
            .enumerate()
            .filter(|(p, _)| mask >> p & 1 == 1)
            .map(|(_, &x)| x)
            .collect();
        let covers_left = (0..na).all(|i| rel.iter().any(|r| r.0 == i));
        let covers_right = (0..nb).all(|j| rel.iter().any(|r| r.1 == j));
        if !covers_left || !covers_right {
            continue;
        }
        let dis = distortion_exact(&rel, |a, b| dl[a][b], |a, b| dr[a][b])?;
        let f = relation_flow(&rel, mu, nu).min(1.0);
        best = best.min((dis / 2.0).max(2.0 * (1.0 - f) / 3.0));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embellish::embellish;
    use crate::growth::{grow, GrowthTree, VertexKind};
    use crate::rng::RngStream;

    /// Path root - a - b - L1 with leaf L2 on a (ell = 2, n = 2).
    fn small_tree() -> GrowthTree {
        // ids: 0 root, 1 L1, 2 v1, 3 v2, 4 L2 (created with v2)
        GrowthTree::from_parts(
            2,
            2,
            vec![u32::MAX, 2, 3, 0, 3],
            vec![
                VertexKind::Root,
                VertexKind::Leaf,
                VertexKind::Internal,
                VertexKind::Internal,
                VertexKind::Leaf,
            ],
            vec![0, 0, 1, 2, 2],
        )
        .unwrap()
    }

    #[test]
    fn pendant_stats_hand_built() {
        let t = small_tree();
        let s = pendant_stats(&t, 1).unwrap();
        assert_eq!(s.max_distance, 1);
        assert_eq!(s.s_max, 1);
        let s = pendant_stats(&t, 2).unwrap();
        assert_eq!((s.max_distance, s.s_max), (0, 0));
        let nu = project_measure(&t, 1).unwrap();
        let w: HashMap<u32, f64> = nu.into_iter().collect();
        assert_eq!(w.len(), 4);
        assert!((w[&3] - 2.0 / 5.0).abs() < 1e-15);
        assert!((w[&0] - 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn projected_measure_is_probability() {
        let mut rng = RngStream::new(1, 0);
        let t = grow(2, 500, &mut rng).unwrap();
        for k in [1, 5, 40] {
            let nu = project_measure(&t, k).unwrap();
            let s: f64 = nu.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cover_partitions_length_and_vertices() {
        let mut rng = RngStream::new(2, 0);
        let e = embellish(2, 400, &mut rng).unwrap();
        for (k, eps) in [(1, 0.3), (4, 0.5), (10, 0.2), (10, 50.0)] {
            let c = CellCover::build(&e, k, eps).unwrap();
            let len: f64 = c.cells.iter().map(|c| c.length).sum();
            let total = e.skeleton().prefix_length(k);
            assert!((len - total).abs() < 1e-9 * total);
            let nv: usize = c.cells.iter().map(|c| c.vertices.len()).sum();
            assert_eq!(nv, e.vertices_on_first(k).len());
            // Diameter of every cell is at most eps.
            for cell in &c.cells {
                let pts: Vec<TreePoint> = cell
                    .segments
                    .iter()
                    .flat_map(|&(b, lo, hi)| [TreePoint::new(b, lo), TreePoint::new(b, hi)])
                    .collect();
                for p in &pts {
                    for q in &pts {
                        assert!(e.skeleton().distance(*p, *q) <= eps + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn huge_eps_gives_one_cell() {
        let mut rng = RngStream::new(3, 0);
        let e = embellish(2, 100, &mut rng).unwrap();
        let k = 3;
        let c = CellCover::build(&e, k, 1e6).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.cells[0].representative, 0);
        let scale = graph_scale(2, 100);
        let (rg, rl) = cell_radii(&e, &c.cells[0], scale);
        let b = distortion_cover_bound(&e, &c);
        assert!((b - 2.0 * (rg + rl)).abs() < 1e-12);
    }

    #[test]
    fn prokhorov_exact_basics() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(prokhorov_exact(&d, &[0.5, 0.5], &[0.5, 0.5]).unwrap() < 1e-12);
        let p = prokhorov_exact(&d, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((p - 1.0).abs() < 1e-9);
        let p = prokhorov_exact(&d, &[0.7, 0.3], &[0.4, 0.6]).unwrap();
        assert!((p - 0.3).abs() < 1e-9);
    }

    #[test]
    fn ghp_exact_identical_spaces_is_zero() {
        let d = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        let g = ghp_exact_small(&d, &[0.5, 0.5], &d, &[0.5, 0.5]).unwrap();
        assert!(g < 1e-12);
        let one = vec![vec![0.0]];
        let g = ghp_exact_small(&d, &[0.5, 0.5], &one, &[1.0]).unwrap();
        // Collapsing both points: distortion 2, full coupling on R.
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schedules() {
        assert_eq!(KSchedule::Fifth.k(1 << 12), 6);
        assert_eq!(KSchedule::Fifth.k(1 << 15), 8);
        assert_eq!(KSchedule::Fifth.k(1 << 18), 13);
        assert_eq!(KSchedule::Fifth.k(1024), 4);
        assert_eq!(KSchedule::Tenth.k(1024), 2);
        assert_eq!(KSchedule::Tenth.k(1), 1);
        assert!((EpsSchedule::Coupling.eps(2, 8) - 0.5).abs() < 1e-15);
        assert!((EpsSchedule::Tightness.eps(1, 1 << 24) - 0.5).abs() < 1e-15);
        assert_eq!("tenth".parse::<KSchedule>().unwrap(), KSchedule::Tenth);
        assert!("half".parse::<EpsSchedule>().is_err());
    }

    #[test]
    fn distortion_exact_guard() {
        let pairs: Vec<(usize, usize)> = (0..20_001).map(|i| (i, i)).collect();
        assert!(distortion_exact(&pairs, |_, _| 0.0, |_, _| 0.0).is_err());
    }
}
