//! Pólya-type urns describing branch lengths and pendant sizes.
//!
//! Every draw returns the drawn ball together with a copy. The variants differ
//! in what happens after draws whose index is a multiple of `ell`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fenwick tree over color counts; sampling by descending the implicit tree.
#[derive(Clone, Debug, Default)]
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn with_capacity(n: usize) -> Self {
        Self {
            tree: Vec::with_capacity(n + 1),
        }
    }

    fn len(&self) -> usize {
        self.tree.len()
    }

    fn push(&mut self, value: u64) {
        // New slot i (1-based) covers (i - lowbit(i), i].
        let i = self.tree.len() + 1;
        let low = i & i.wrapping_neg();
        let mut sum = value;
        let mut j = i - 1;
        while j > i - low {
            sum += self.tree[j - 1];
            j -= j & j.wrapping_neg();
        }
        self.tree.push(sum);
    }

    fn add(&mut self, idx: usize, delta: u64) {
        let mut i = idx + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next - 1] <= target {
                pos = next;
                target -= self.tree[next - 1];
            }
            step >>= 1;
        }
        pos
    }
}

/// Urn with a new color after every `ell`-th draw.
#[derive(Clone, Debug)]
pub struct InfiniteUrn {
    ell: u32,
    time: u64,
    total: u64,
    counts: Vec<u64>,
    index: Fenwick,
}

impl InfiniteUrn {
    pub fn new(ell: u32) -> Result<Self> {
        if ell == 0 {
            return Err(invalid("ell must be at least 1"));
        }
        let mut index = Fenwick::with_capacity(16);
        index.push(1);
        Ok(Self {
            ell,
            time: 0,
            total: 1,
            counts: vec![1],
            index,
        })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let u = rng.gen_range(0..self.total);
        let j = self.index.find(u);
        self.counts[j] += 1;
        self.index.add(j, 1);
        self.total += 1;
        self.time += 1;
        if self.time % self.ell as u64 == 0 {
            self.counts.push(1);
            self.index.push(1);
            self.total += 1;
        }
        debug_assert_eq!(self.index.len(), self.counts.len());
        j
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `counts()[i]` is the number of balls of color `i + 1`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `U_k`: balls of color `k` (1-based).
    pub fn u(&self, k: usize) -> u64 {
        self.counts[k - 1]
    }

    /// `M_k = U_1 + ... + U_k`.
    pub fn m(&self, k: usize) -> u64 {
        self.counts[..k].iter().sum()
    }
}

pub fn run_infinite_urn<R: Rng + ?Sized>(ell: u32, n: u64, rng: &mut R) -> Result<InfiniteUrn> {
    let mut u = InfiniteUrn::new(ell)?;
    for _ in 0..n {
        u.step(rng);
    }
    Ok(u)
}

/// Infinite urn observed only through colors `1..=k`; all later colors are
/// lumped together. Exact for statistics of the first `k` colors.
#[derive(Clone, Debug)]
pub struct TruncatedUrn {
    ell: u32,
    time: u64,
    total: u64,
    head: Vec<u64>,
    k: usize,
    rest: u64,
}

impl TruncatedUrn {
    pub fn new(ell: u32, k: usize) -> Result<Self> {
        if ell == 0 || k == 0 {
            return Err(invalid("ell and k must be positive"));
        }
        Ok(Self {
            ell,
            time: 0,
            total: 1,
            head: vec![1],
            k,
            rest: 0,
        })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let u = rng.gen_range(0..self.total);
        if u < self.rest {
            self.rest += 1;
        } else {
            let mut x = u - self.rest;
            let mut j = 0;
            while x >= self.head[j] {
                x -= self.head[j];
                j += 1;
            }
            self.head[j] += 1;
        }
        self.total += 1;
        self.time += 1;
        if self.time % self.ell as u64 == 0 {
            if self.head.len() < self.k {
                self.head.push(1);
            } else {
                self.rest += 1;
            }
            self.total += 1;
        }
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn u(&self, k: usize) -> u64 {
        self.head.get(k - 1).copied().unwrap_or(0)
    }

    pub fn m(&self, k: usize) -> u64 {
        self.head.iter().take(k).sum()
    }
}

/// Classical two-color Pólya urn: `m` draws from `b` black and `w` white.
/// Returns the final `(black, white)`.
pub fn run_classical<R: Rng + ?Sized>(b: u64, w: u64, m: u64, rng: &mut R) -> Result<(u64, u64)> {
    if b + w == 0 {
        return Err(invalid("urn must start non-empty"));
    }
    let (mut black, mut white) = (b, w);
    for _ in 0..m {
        if rng.gen_range(0..black + white) < white {
            white += 1;
        } else {
            black += 1;
        }
    }
    Ok((black, white))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImmMode {
    /// After every `ell`-th draw one extra black ball enters.
    BlackImmigration,
    /// After every `ell`-th draw the drawn color gets one more ball.
    ChosenColorBonus,
}

/// Two-color urn with periodic extra balls. Returns the final `(black, white)`.
pub fn run_imm_urn<R: Rng + ?Sized>(
    ell: u32,
    b: u64,
    w: u64,
    m: u64,
    mode: ImmMode,
    rng: &mut R,
) -> Result<(u64, u64)> {
    if ell == 0 || b + w == 0 {
        return Err(invalid("need ell >= 1 and a non-empty urn"));
    }
    let (mut black, mut white) = (b, w);
    for t in 1..=m {
        let drew_white = rng.gen_range(0..black + white) < white;
        let bonus = t % ell as u64 == 0;
        match (drew_white, mode, bonus) {
            (true, ImmMode::ChosenColorBonus, true) => white += 2,
            (true, _, _) => white += 1,
            (false, ImmMode::ChosenColorBonus, true) => black += 2,
            (false, ImmMode::BlackImmigration, true) => black += 2,
            (false, _, _) => black += 1,
        }
        if drew_white && bonus && mode == ImmMode::BlackImmigration {
            black += 1;
        }
    }
    Ok((black, white))
}

/// Black balls plus colored ones. After an `ell`-th draw a black pick opens a
/// new color with one ball, and a colored pick earns that color a further ball.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModUrn {
    pub ell: u32,
    pub time: u64,
    pub black: u64,
    pub colors: Vec<u64>,
    /// Time each color first appeared.
    pub first_seen: Vec<u64>,
}

impl ModUrn {
    pub fn new(ell: u32, b: u64, w: u64) -> Result<Self> {
        if ell == 0 || w == 0 {
            return Err(invalid("need ell >= 1 and at least one colored ball"));
        }
        Ok(Self {
            ell,
            time: 0,
            black: b,
            colors: vec![w],
            first_seen: vec![0],
        })
    }

    pub fn total(&self) -> u64 {
        self.black + self.colors.iter().sum::<u64>()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.time += 1;
        let bonus = self.time % self.ell as u64 == 0;
        let mut u = rng.gen_range(0..self.total());
        if u < self.black {
            self.black += 1;
            if bonus {
                self.colors.push(1);
                self.first_seen.push(self.time);
            }
            return;
        }
        u -= self.black;
        let mut j = 0;
        while u >= self.colors[j] {
            u -= self.colors[j];
            j += 1;
        }
        self.colors[j] += 1 + bonus as u64;
    }

    pub fn max_color(&self) -> u64 {
        self.colors.iter().copied().max().unwrap_or(0)
    }
}

pub fn run_mod_urn<R: Rng + ?Sized>(
    ell: u32,
    b: u64,
    w: u64,
    t: u64,
    rng: &mut R,
) -> Result<ModUrn> {
    let mut u = ModUrn::new(ell, b, w)?;
    for _ in 0..t {
        u.step(rng);
    }
    Ok(u)
}

/// `(M_k(n), U_k(n))` through an immigration urn for `M_k` followed by a
/// classical urn for the split of the newest color. Needs `n >= k * ell`.
pub fn sample_mk_uk<R: Rng + ?Sized>(ell: u32, k: u64, n: u64, rng: &mut R) -> Result<(u64, u64)> {
    if k == 0 || n < k * ell as u64 {
        return Err(invalid(format!(
            "need 1 <= k and n >= k*ell, got k={k}, n={n}"
        )));
    }
    let e = ell as u64 + 1;
    let (_, mk) = run_imm_urn(
        ell,
        1,
        e * k,
        n - k * ell as u64,
        ImmMode::BlackImmigration,
        rng,
    )?;
    let base = (k - 1) * e;
    let uk = if k == 1 {
        mk
    } else {
        run_classical(base, 1, mk - base - 1, rng)?.1
    };
    Ok((mk, uk))
}

/// Exact `E[M_k(n)]` from the immigration-urn recursion, `n >= k * ell`.
pub fn expected_mk(ell: u32, k: u64, n: u64) -> f64 {
    let e = ell as u64 + 1;
    let mut mean = (e * k) as f64;
    let mut total = (e * k + 1) as f64;
    let start = k * ell as u64;
    for t in start + 1..=n {
        mean *= 1.0 + 1.0 / total;
        total += 1.0;
        if t % ell as u64 == 0 {
            total += 1.0;
        }
    }
    mean
}

/// Exact `E[U_k(n)]` from `E[M_k(n)]` and the classical-urn split.
pub fn expected_uk(ell: u32, k: u64, n: u64) -> f64 {
    let e = ell as u64 + 1;
    if k == 1 {
        return expected_mk(ell, 1, n);
    }
    let base = ((k - 1) * e) as f64;
    1.0 + (expected_mk(ell, k, n) - base - 1.0) / (base + 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub model: String,
    pub ell: u32,
    pub p: u32,
    pub k: u64,
    pub n: u64,
    pub t: u64,
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
}

/// Per-replicate snapshots of `(U_k(n), M_k(n))` over a grid, sharing one
/// urn run per replicate. Returned as `[n_index][k_index] -> (U, M)`.
pub fn urn_snapshots<R: Rng + ?Sized>(
    ell: u32,
    ns: &[u64],
    ks: &[u64],
    rng: &mut R,
) -> Result<Vec<Vec<(u64, u64)>>> {
    if ns.is_empty() || ks.is_empty() || !ns.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("grid must be non-empty with increasing n"));
    }
    let kmax = *ks.iter().max().unwrap() as usize;
    let mut urn = TruncatedUrn::new(ell, kmax)?;
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        while urn.time() < n {
            urn.step(rng);
        }
        out.push(
            ks.iter()
                .map(|&k| (urn.u(k as usize), urn.m(k as usize)))
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn fenwick_matches_linear_scan() {
        let mut f = Fenwick::default();
        let vals = [3u64, 1, 4, 1, 5, 9, 2, 6, 5, 3];
        for &v in &vals {
            f.push(v);
        }
        f.add(3, 2);
        let mut vals = vals.to_vec();
        vals[3] += 2;
        let total: u64 = vals.iter().sum();
        for t in 0..total {
            let mut acc = 0;
            let want = vals
                .iter()
                .position(|&v| {
                    acc += v;
                    acc > t
                })
                .unwrap();
            assert_eq!(f.find(t), want, "target {t}");
        }
    }

    #[test]
    fn infinite_urn_ball_count() {
        let mut rng = RngStream::new(1, 0);
        for ell in 1..=4 {
            let u = run_infinite_urn(ell, 97, &mut rng).unwrap();
            assert_eq!(u.total(), 1 + 97 + 97 / ell as u64);
            assert_eq!(u.counts().iter().sum::<u64>(), u.total());
            assert_eq!(u.counts().len() as u64, 1 + 97 / ell as u64);
        }
    }

    #[test]
    fn at_k_ell_exactly() {
        let mut rng = RngStream::new(2, 0);
        let (ell, k) = (3u32, 5u64);
        let u = run_infinite_urn(ell, k * ell as u64, &mut rng).unwrap();
        assert_eq!(u.total(), (ell as u64 + 1) * k + 1);
        assert_eq!(*u.counts().last().unwrap(), 1);
    }

    #[test]
    fn truncated_agrees_with_full_urn() {
        for seed in 0..20 {
            let mut a = RngStream::new(seed, 0);
            let mut b = RngStream::new(seed, 0);
            let full = run_infinite_urn(2, 300, &mut a).unwrap();
            let mut tr = TruncatedUrn::new(2, 150).unwrap();
            for _ in 0..300 {
                tr.step(&mut b);
            }
            for k in [1usize, 2, 7, 40] {
                assert_eq!(full.u(k), tr.u(k));
                assert_eq!(full.m(k), tr.m(k));
            }
        }
    }

    #[test]
    fn imm_urn_totals() {
        let mut rng = RngStream::new(3, 0);
        for mode in [ImmMode::BlackImmigration, ImmMode::ChosenColorBonus] {
            let (b, w) = run_imm_urn(2, 1, 6, 41, mode, &mut rng).unwrap();
            assert_eq!(b + w, 7 + 41 + 20);
            assert!(w >= 6);
        }
        let (b, w) = run_imm_urn(3, 4, 7, 0, ImmMode::BlackImmigration, &mut rng).unwrap();
        assert_eq!((b, w), (4, 7));
    }

    #[test]
    fn mod_urn_first_seen() {
        let mut rng = RngStream::new(4, 0);
        let u = run_mod_urn(2, 6, 1, 200, &mut rng).unwrap();
        assert_eq!(u.total(), 7 + 200 + 100);
        for (i, &s) in u.first_seen.iter().enumerate() {
            assert!(s >= i as u64 * 2, "color {} at {s}", i + 1);
        }
    }

    #[test]
    fn expected_values_at_start() {
        assert_eq!(expected_mk(2, 3, 6), 9.0);
        // Color 3 enters at time 4 and competes for two draws with 6 older balls.
        assert!((expected_uk(2, 3, 6) - (1.0 + 2.0 / 7.0)).abs() < 1e-12); // One draw from 9 of 10 balls.
        assert!((expected_mk(2, 3, 7) - 9.9).abs() < 1e-12);
    }

    #[test]
    fn two_stage_ranges() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let (m, u) = sample_mk_uk(2, 2, 40, &mut rng).unwrap();
            assert!(u >= 1 && u <= m - 3);
        }
        assert!(sample_mk_uk(2, 3, 5, &mut rng).is_err());
    }
}
