//! Non-straggler patterns and the system parameters they live in.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `K` data matrices, polynomial degree `d`, `S` stragglers, `N` workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl SystemParams {
    pub fn new(k: usize, d: usize, s: usize, n: usize) -> Self {
        Self { k, d, s, n }
    }

    /// Responses needed by individual decoding, `d(K-1)+1`.
    pub fn individual_responses(&self) -> usize {
        self.d * self.k.saturating_sub(1) + 1
    }

    /// Response deficit `C = d(K-1)+S+1-N`; negative outside the CPA regime.
    pub fn deficit(&self) -> i64 {
        (self.d * self.k.saturating_sub(1) + self.s + 1) as i64 - self.n as i64
    }

    fn validate_basic(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 || self.n == 0 {
            return Err(Error::InvalidParams("K, d and N must be positive".into()));
        }
        if self.s >= self.n {
            return Err(Error::InvalidParams(format!(
                "S = {} leaves no responders among N = {}",
                self.s, self.n
            )));
        }
        Ok(())
    }

    /// Checks `S+2 <= N <= d(K-1)+S` and returns `C >= 1`.
    pub fn validate_cpa(&self) -> Result<usize> {
        self.validate_basic()?;
        let upper = self.d * (self.k - 1) + self.s;
        if self.n < self.s + 2 || self.n > upper {
            return Err(Error::InvalidParams(format!(
                "N = {} outside the aggregation regime [{}, {}]",
                self.n,
                self.s + 2,
                upper
            )));
        }
        Ok(self.deficit() as usize)
    }

    /// Checks `N >= d(K-1)+S+1`, where individual decoding always works.
    pub fn validate_baseline(&self) -> Result<()> {
        self.validate_basic()?;
        let need = individual_decoding_threshold(self.k, self.d, self.s);
        if self.n < need {
            return Err(Error::InvalidParams(format!(
                "individual decoding needs N >= {need}, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Intersection threshold above which a feasible code always exists.
pub fn sufficient_threshold(k: usize, d: usize) -> usize {
    assert!(k >= 2 && d >= 1, "threshold defined for K >= 2, d >= 1");
    if d == 1 {
        (k - 1) / 2 + 1
    } else {
        (d - 1) * (k - 1) + 1
    }
}

/// Workers required for individual decoding under arbitrary stragglers.
pub fn individual_decoding_threshold(k: usize, d: usize, s: usize) -> usize {
    d * k.saturating_sub(1) + s + 1
}

#[derive(Deserialize)]
struct RawPattern {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "S")]
    s: usize,
    sets: Vec<Vec<usize>>,
}

/// A collection of admissible non-straggler sets over workers `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPattern")]
pub struct NonStragglerPattern {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "S")]
    s: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<RawPattern> for NonStragglerPattern {
    type Error = Error;

    fn try_from(raw: RawPattern) -> Result<Self> {
        NonStragglerPattern::new(raw.n, raw.s, raw.sets)
    }
}

impl NonStragglerPattern {
    /// Validates and stores the sets, each sorted ascending.
    pub fn new(n: usize, s: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if s >= n {
            return Err(Error::InvalidPattern(format!("S = {s} must be below N = {n}")));
        }
        if sets.is_empty() {
            return Err(Error::InvalidPattern("pattern needs at least one set".into()));
        }
        let size = n - s;
        let mut seen = HashSet::new();
        let mut sorted_sets = Vec::with_capacity(sets.len());
        for (g, mut set) in sets.into_iter().enumerate() {
            set.sort_unstable();
            if set.len() != size {
                return Err(Error::InvalidPattern(format!(
                    "set {g} has {} workers, expected N-S = {size}",
                    set.len()
                )));
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidPattern(format!("set {g} repeats a worker")));
            }
            if set.last().is_some_and(|&m| m >= n) {
                return Err(Error::InvalidPattern(format!("set {g} names a worker >= N = {n}")));
            }
            if !seen.insert(set.clone()) {
                return Err(Error::InvalidPattern(format!("set {g} is a duplicate")));
            }
            sorted_sets.push(set);
        }
        Ok(Self {
            n,
            s,
            sets: sorted_sets,
        })
    }

    /// Every `(N-S)`-subset of the workers.
    pub fn all_sets(n: usize, s: usize) -> Result<Self> {
        let r = n.saturating_sub(s);
        let total = binomial(n as u128, r as u128);
        let sets = (0..total).map(|i| unrank_combination(n, r, i)).collect();
        Self::new(n, s, sets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn g(&self) -> usize {
        self.sets.len()
    }

    /// Family key independent of set order.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut sets = self.sets.clone();
        sets.sort();
        sets
    }

    pub fn stats(&self) -> PatternStats {
        let mut in_all = vec![true; self.n];
        for set in &self.sets {
            let mut member = vec![false; self.n];
            for &w in set {
                member[w] = true;
            }
            for (flag, m) in in_all.iter_mut().zip(member) {
                *flag &= m;
            }
        }
        let intersection: Vec<usize> = (0..self.n).filter(|&w| in_all[w]).collect();
        let i = intersection.len();
        PatternStats {
            g: self.sets.len(),
            intersection,
            i,
            l: self.n - self.s - i,
        }
    }
}

/// Structural quantities of a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternStats {
    #[serde(rename = "G")]
    pub g: usize,
    pub intersection: Vec<usize>,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(rename = "L")]
    pub l: usize,
}

/// `n choose r`, saturating at `u128::MAX`.
pub fn binomial(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The `idx`-th `r`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, r: usize, mut idx: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(r);
    let mut next = 0;
    for slot in 0..r {
        let remaining = r - slot;
        loop {
            let with_next = binomial((n - next - 1) as u128, (remaining - 1) as u128);
            if idx < with_next {
                out.push(next);
                next += 1;
                break;
            }
            idx -= with_next;
            next += 1;
        }
    }
    out
}

/// Draws up to `count` distinct patterns of `g` sets each.
///
/// When the family space holds at most `count` patterns, all of them are
/// returned in lexicographic order; otherwise families are drawn uniformly
/// without replacement.
pub fn sample_patterns(
    n: usize,
    s: usize,
    g: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<NonStragglerPattern>> {
    if s >= n {
        return Err(Error::InvalidPattern(format!("S = {s} must be below N = {n}")));
    }
    let r = n - s;
    let sets_total = binomial(n as u128, r as u128);
    if g == 0 || g as u128 > sets_total {
        return Err(Error::InvalidPattern(format!(
            "G = {g} must lie in [1, {sets_total}]"
        )));
    }
    let families_total = binomial(sets_total, g as u128);
    let to_pattern = |indices: &[u128]| {
        let sets = indices.iter().map(|&i| unrank_combination(n, r, i)).collect();
        NonStragglerPattern::new(n, s, sets)
    };

    if families_total <= count as u128 {
        return (0..families_total)
            .map(|f| {
                let idx: Vec<u128> = unrank_combination(sets_total as usize, g, f)
                    .into_iter()
                    .map(|i| i as u128)
                    .collect();
                to_pattern(&idx)
            })
            .collect();
    }

    // sets_total > g here, and it fits in usize at any size that can be sampled
    let sets_total = usize::try_from(sets_total)
        .map_err(|_| Error::InvalidPattern("too many candidate sets".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut pick = index::sample(&mut rng, sets_total, g).into_vec();
        pick.sort_unstable();
        if seen.insert(pick.clone()) {
            let idx: Vec<u128> = pick.into_iter().map(|i| i as u128).collect();
            out.push(to_pattern(&idx)?);
        }
    }
    Ok(out)
}

const MAX_PATTERN_DRAWS: usize = 10_000;

/// Random pattern whose intersection has exactly `i` workers.
///
/// A core of `i` workers is shared by every set; each set adds `L = N-S-i`
/// workers from the rest. When `L > 0`, `G` is uniform between the
/// smallest count that can empty the extras' intersection and
/// `min(g_max, C(N-i, L))`; otherwise `G = 1`.
pub fn random_pattern_with_intersection(
    n: usize,
    s: usize,
    i: usize,
    g_max: usize,
    rng: &mut impl Rng,
) -> Result<NonStragglerPattern> {
    if s >= n || i > n - s {
        return Err(Error::InvalidPattern(format!("need I <= N - S, got I = {i}")));
    }
    let l = n - s - i;
    let mut workers: Vec<usize> = (0..n).collect();
    workers.shuffle(rng);
    let (core, pool) = workers.split_at(i);
    if l == 0 {
        return NonStragglerPattern::new(n, s, vec![core.to_vec()]);
    }
    let choices = binomial(pool.len() as u128, l as u128).min(g_max as u128) as usize;
    // each set skips s pool workers, and every pool worker must be skipped once
    let g_min = pool.len().div_ceil(s.max(1)).max(2);
    if choices < g_min {
        return Err(Error::InvalidPattern(format!(
            "no pattern with I = {i} and G <= {g_max}"
        )));
    }
    let g = rng.gen_range(g_min..=choices);
    for _ in 0..MAX_PATTERN_DRAWS {
        let extras: Vec<Vec<usize>> = (0..g)
            .map(|_| index::sample(rng, pool.len(), l).into_iter().map(|j| pool[j]).collect())
            .collect();
        let mut sets: Vec<Vec<usize>> = extras
            .iter()
            .map(|e| core.iter().chain(e).copied().collect())
            .collect();
        for set in &mut sets {
            set.sort_unstable();
        }
        let distinct: HashSet<&Vec<usize>> = sets.iter().collect();
        if distinct.len() < g {
            continue;
        }
        let p = NonStragglerPattern::new(n, s, sets)?;
        if p.stats().i == i {
            return Ok(p);
        }
    }
    Err(Error::InvalidPattern(format!(
        "no pattern with I = {i} found in {MAX_PATTERN_DRAWS} draws"
    )))
}
