//! Monte Carlo test for a scarcity of distinct names.
//!
//! A group of `n` people showing `L` distinct names is compared with samples
//! of `n` people drawn without replacement from a pool. The p-value is
//! `P(L' <= L)`, estimated as `(1 + c) / (1 + S)` where `c` counts the
//! replicates out of `S` whose distinct count `L'` does not exceed `L`.
//!
//! Every replicate owns a random stream seeded from the master seed, a hash
//! of the group label and the replicate index, so results do not depend on
//! how replicates are spread over worker threads.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roster::{intern, Roster};

const REPLICATE_CHUNK: usize = 256;

/// Parameters of a scarcity test run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestConfig {
    pub n_sims: usize,
    pub min_group_size: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the ambient rayon pool. Never changes results.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { n_sims: 100_000, min_group_size: 50, seed: 0, workers: 0 }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::InvalidConfig("n_sims must be at least 1".into()));
        }
        if self.min_group_size == 0 {
            return Err(Error::InvalidConfig("min_group_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Smallest reportable p-value, `1 / (1 + S)`.
    pub fn p_floor(&self) -> f64 {
        1.0 / (1.0 + self.n_sims as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScarcityResult {
    pub group: String,
    pub n_people: usize,
    pub n_distinct: usize,
    /// `None` when the group was skipped.
    pub p_hat: Option<f64>,
    /// Replicates with `L' <= L`.
    pub hits: Option<u64>,
    pub n_sims: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub pool_distinct: usize,
    pub skipped: bool,
}

/// FNV-1a over the label bytes; stable across platforms and releases.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines two words into a well-mixed seed.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Key of the random streams used for one group.
pub fn stream_key(master: u64, label: &str) -> u64 {
    mix_seed(master, label_hash(label))
}

fn replicate_seed(stream: u64, replicate: u64) -> u64 {
    mix_seed(stream, replicate.wrapping_add(0x5851_f42d_4c95_7f2d))
}

/// A multiset of names coded as dense integer ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePool {
    ids: Vec<u32>,
    n_distinct: usize,
}

impl NamePool {
    pub fn from_names<'a, I>(names: I) -> NamePool
    where
        I: IntoIterator<Item = &'a str>,
    {
        let (ids, n_distinct) = intern(names);
        NamePool { ids, n_distinct }
    }

    /// Pool of the selected name field of every person in `roster`.
    pub fn from_roster(roster: &Roster) -> NamePool {
        NamePool::from_names(roster.names())
    }

    /// Pool with `m[i]` copies of name `i`.
    pub fn from_multiplicities(m: &[usize]) -> NamePool {
        let ids = m.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i as u32, c)).collect();
        NamePool { ids, n_distinct: m.iter().filter(|&&c| c > 0).count() }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_distinct(&self) -> usize {
        self.n_distinct
    }

    /// Copies of each name, in id order.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m = vec![0; self.n_distinct];
        for &id in &self.ids {
            m[id as usize] += 1;
        }
        m
    }
}

/// Per-worker state: a pool permutation restored after every replicate and
/// a stamped mark table for distinct counting.
struct Sampler {
    ids: Vec<u32>,
    swaps: Vec<u32>,
    marks: Vec<u32>,
    stamp: u32,
}

impl Sampler {
    fn new(pool: &NamePool) -> Sampler {
        Sampler { ids: pool.ids.clone(), swaps: Vec::new(), marks: vec![0; pool.n_distinct], stamp: 0 }
    }

    /// Distinct names in one partial Fisher-Yates sample of size `n`.
    fn replicate(&mut self, n: usize, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.marks.fill(0);
            self.stamp = 1;
        }
        let len = self.ids.len() as u32;
        self.swaps.clear();
        let mut distinct = 0;
        for i in 0..n as u32 {
            let j = rng.random_range(i..len);
            self.ids.swap(i as usize, j as usize);
            self.swaps.push(j);
            let id = self.ids[i as usize] as usize;
            if self.marks[id] != self.stamp {
                self.marks[id] = self.stamp;
                distinct += 1;
            }
        }
        for (i, &j) in self.swaps.iter().enumerate().rev() {
            self.ids.swap(i, j as usize);
        }
        distinct
    }
}

/// Runs `f` on a pool of `workers` threads, or in the ambient pool when
/// `workers` is 0 or we are already on a rayon worker.
pub(crate) fn with_workers<T, F>(workers: usize, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if workers == 0 || rayon::current_thread_index().is_some() {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Distribution of simulated distinct counts `L'` for one stream.
///
/// Entry `k` holds the number of replicates with exactly `k` distinct names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinctHistogram {
    counts: Vec<u64>,
    n_sims: usize,
}

impl DistinctHistogram {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_sims(&self) -> usize {
        self.n_sims
    }

    /// Replicates with `L' <= l_obs`.
    pub fn hits(&self, l_obs: usize) -> u64 {
        self.counts.iter().take(l_obs + 1).sum()
    }

    /// Add-one estimate of `P(L' <= l_obs)`.
    pub fn p_hat(&self, l_obs: usize) -> f64 {
        (1 + self.hits(l_obs)) as f64 / (1 + self.n_sims) as f64
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self.counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum();
        total / self.n_sims as f64
    }
}

fn check_sample(pool: &NamePool, n: usize, l_obs: usize) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if n > pool.len() {
        return Err(Error::SampleLargerThanPool { n, pool: pool.len() });
    }
    if l_obs > n {
        return Err(Error::InvalidObservedCount { l_obs, n });
    }
    Ok(())
}

fn chunk_ranges(n_sims: usize) -> Vec<(usize, usize)> {
    (0..n_sims).step_by(REPLICATE_CHUNK).map(|start| (start, (start + REPLICATE_CHUNK).min(n_sims))).collect()
}

fn simulate_many(pool: &NamePool, jobs: &[(usize, u64)], n_sims: usize) -> Vec<DistinctHistogram> {
    let chunks = chunk_ranges(n_sims);
    let items: Vec<(usize, (usize, usize))> =
        (0..jobs.len()).flat_map(|j| chunks.iter().map(move |&c| (j, c))).collect();
    let partial: Vec<(usize, Vec<u64>)> = items
        .par_iter()
        .map_init(
            || Sampler::new(pool),
            |sampler, &(job, (start, end))| {
                let (n, stream) = jobs[job];
                let mut counts = vec![0u64; n + 1];
                for r in start..end {
                    counts[sampler.replicate(n, replicate_seed(stream, r as u64))] += 1;
                }
                (job, counts)
            },
        )
        .collect();
    let mut out: Vec<DistinctHistogram> =
        jobs.iter().map(|&(n, _)| DistinctHistogram { counts: vec![0; n + 1], n_sims }).collect();
    for (job, counts) in partial {
        for (acc, c) in out[job].counts.iter_mut().zip(counts) {
            *acc += c;
        }
    }
    out
}

/// Simulated `L'` distribution for samples of size `n` on stream `stream`.
pub fn simulate_distinct(
    pool: &NamePool,
    n: usize,
    n_sims: usize,
    stream: u64,
    workers: usize,
) -> Result<DistinctHistogram> {
    check_sample(pool, n, 0)?;
    if n_sims == 0 {
        return Err(Error::InvalidConfig("n_sims must be at least 1".into()));
    }
    Ok(with_workers(workers, || simulate_many(pool, &[(n, stream)], n_sims)).remove(0))
}

/// Monte Carlo estimate of `P(L' <= l_obs)` for samples of size `n`.
///
/// Uses the stream of the empty group label; see [`analyze_groups`] for
/// labelled groups.
pub fn mc_pvalue(pool: &NamePool, n: usize, l_obs: usize, cfg: &TestConfig) -> Result<ScarcityResult> {
    cfg.validate()?;
    check_sample(pool, n, l_obs)?;
    let hist = simulate_distinct(pool, n, cfg.n_sims, stream_key(cfg.seed, ""), cfg.workers)?;
    Ok(ScarcityResult {
        group: String::new(),
        n_people: n,
        n_distinct: l_obs,
        p_hat: Some(hist.p_hat(l_obs)),
        hits: Some(hist.hits(l_obs)),
        n_sims: cfg.n_sims,
        seed: cfg.seed,
        pool_size: pool.len(),
        pool_distinct: pool.n_distinct(),
        skipped: false,
    })
}

/// Tests every group of `roster` against `pool`.
pub fn analyze_groups(roster: &Roster, pool: &Roster, cfg: &TestConfig) -> Result<Vec<ScarcityResult>> {
    let groups: Vec<&str> = roster.groups().collect();
    analyze_selected(roster, pool, cfg, &groups)
}

/// Like [`analyze_groups`] but only for the listed groups. Unknown labels
/// yield skipped results with zero people.
pub fn analyze_selected(
    roster: &Roster,
    pool: &Roster,
    cfg: &TestConfig,
    groups: &[&str],
) -> Result<Vec<ScarcityResult>> {
    cfg.validate()?;
    let pool_roster = if pool.field() == roster.field() { pool.clone() } else { pool.with_field(roster.field()) };
    let names = NamePool::from_roster(&pool_roster);
    analyze_against(roster, &names, cfg, groups)
}

pub(crate) fn analyze_against(
    roster: &Roster,
    pool: &NamePool,
    cfg: &TestConfig,
    groups: &[&str],
) -> Result<Vec<ScarcityResult>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut results: Vec<ScarcityResult> = groups
        .iter()
        .map(|&g| {
            let n = roster.group_size(g);
            ScarcityResult {
                group: g.to_string(),
                n_people: n,
                n_distinct: roster.group_distinct(g),
                p_hat: None,
                hits: None,
                n_sims: cfg.n_sims,
                seed: cfg.seed,
                pool_size: pool.len(),
                pool_distinct: pool.n_distinct(),
                skipped: n < cfg.min_group_size || n == 0,
            }
        })
        .collect();
    for r in results.iter().filter(|r| !r.skipped) {
        check_sample(pool, r.n_people, r.n_distinct)?;
    }
    let tested: Vec<usize> = (0..results.len()).filter(|&i| !results[i].skipped).collect();
    let jobs: Vec<(usize, u64)> =
        tested.iter().map(|&i| (results[i].n_people, stream_key(cfg.seed, &results[i].group))).collect();
    let hists = with_workers(cfg.workers, || simulate_many(pool, &jobs, cfg.n_sims));
    for (&i, hist) in tested.iter().zip(hists) {
        let l = results[i].n_distinct;
        results[i].p_hat = Some(hist.p_hat(l));
        results[i].hits = Some(hist.hits(l));
    }
    Ok(results)
}

/// Size guard for the exact computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_pool: usize,
    pub max_names: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self { max_pool: 5000, max_names: 64 }
    }
}

/// Pools up to this size are counted with exact integer arithmetic.
const INTEGER_DP_MAX_POOL: usize = 128;

fn binomial_table(max: usize) -> Vec<Vec<u128>> {
    let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max + 1);
    for m in 0..=max {
        let mut row = vec![1u128; m + 1];
        for c in 1..m {
            row[c] = rows[m - 1][c - 1] + rows[m - 1][c];
        }
        rows.push(row);
    }
    rows
}

/// Exact distribution of the distinct count `L'` of a size-`n` sample
/// without replacement from a pool with name multiplicities `m`.
///
/// Entry `d` is `P(L' = d)`. The dynamic program walks the names one at a
/// time, tracking how many items have been drawn and how many names used.
pub fn exact_distinct_distribution(m: &[usize], n: usize, limits: &ExactLimits) -> Result<Vec<f64>> {
    let m: Vec<usize> = m.iter().copied().filter(|&c| c > 0).collect();
    let total: usize = m.iter().sum();
    if total == 0 {
        return Err(Error::EmptyPool);
    }
    if n > total {
        return Err(Error::SampleLargerThanPool { n, pool: total });
    }
    if total > limits.max_pool || m.len() > limits.max_names {
        return Err(Error::InstanceTooLarge(format!(
            "pool of {} with {} names exceeds limits ({}, {})",
            total,
            m.len(),
            limits.max_pool,
            limits.max_names
        )));
    }
    let max_d = m.len().min(n);
    if total <= INTEGER_DP_MAX_POOL {
        Ok(exact_counts(&m, n, max_d))
    } else {
        Ok(exact_probabilities(&m, n, max_d))
    }
}

fn exact_counts(m: &[usize], n: usize, max_d: usize) -> Vec<f64> {
    let total: usize = m.iter().sum();
    let binom = binomial_table(total);
    // ways[j][d]: ways to draw j items using d names so far.
    let mut ways = vec![vec![0u128; max_d + 1]; n + 1];
    ways[0][0] = 1;
    for &mi in m {
        let mut next = vec![vec![0u128; max_d + 1]; n + 1];
        for j in 0..=n {
            for (d, &w) in ways[j].iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for c in 0..=mi.min(n - j) {
                    let nd = d + usize::from(c > 0);
                    if nd > max_d {
                        continue;
                    }
                    next[j + c][nd] += w * binom[mi][c];
                }
            }
        }
        ways = next;
    }
    let all = binom[total][n] as f64;
    ways[n].iter().map(|&w| w as f64 / all).collect()
}

fn exact_probabilities(m: &[usize], n: usize, max_d: usize) -> Vec<f64> {
    let total: usize = m.iter().sum();
    let mut ln_fact = vec![0.0f64; total + 1];
    for k in 1..=total {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let ln_binom = |a: usize, b: usize| ln_fact[a] - ln_fact[b] - ln_fact[a - b];
    // prob[j][d]: probability that the names seen so far hold j of the n
    // draws and d of them were used at least once.
    let mut prob = vec![vec![0.0f64; max_d + 1]; n + 1];
    prob[0][0] = 1.0;
    let mut remaining = total;
    for &mi in m {
        let rest = remaining - mi;
        let mut next = vec![vec![0.0f64; max_d + 1]; n + 1];
        for j in 0..=n {
            let left = n - j;
            if left > remaining {
                continue;
            }
            let ln_all = ln_binom(remaining, left);
            for (d, &p) in prob[j].iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let lo = left.saturating_sub(rest);
                for c in lo..=mi.min(left) {
                    let nd = d + usize::from(c > 0);
                    if nd > max_d {
                        continue;
                    }
                    let ln_q = ln_binom(mi, c) + ln_binom(rest, left - c) - ln_all;
                    next[j + c][nd] += p * ln_q.exp();
                }
            }
        }
        prob = next;
        remaining = rest;
    }
    prob.swap_remove(n)
}

/// Exact `P(L' <= l_obs)`.
pub fn exact_pvalue(m: &[usize], n: usize, l_obs: usize) -> Result<f64> {
    exact_pvalue_with(m, n, l_obs, &ExactLimits::default())
}

pub fn exact_pvalue_with(m: &[usize], n: usize, l_obs: usize, limits: &ExactLimits) -> Result<f64> {
    if l_obs > n {
        return Err(Error::InvalidObservedCount { l_obs, n });
    }
    let dist = exact_distinct_distribution(m, n, limits)?;
    Ok(dist.iter().take(l_obs + 1).sum::<f64>().min(1.0))
}

/// Name multiplicities of a multiset, in first-seen order.
pub fn multiplicities<'a, I>(names: I) -> Vec<usize>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut index: HashMap<&'a str, usize> = HashMap::new();
    let mut m = Vec::new();
    for name in names {
        let i = *index.entry(name).or_insert_with(|| {
            m.push(0);
            m.len() - 1
        });
        m[i] += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roster::{Gender, NameField, NormalizationPolicy, Person};
    use proptest::prelude::*;

    /// Enumerates every size-`n` subset of the pool.
    fn brute_force_pvalue(pool: &[u32], n: usize, l_obs: usize) -> f64 {
        fn walk(
            pool: &[u32],
            start: usize,
            left: usize,
            picked: &mut Vec<u32>,
            hit: &mut u64,
            all: &mut u64,
            l_obs: usize,
        ) {
            if left == 0 {
                let mut seen = picked.clone();
                seen.sort_unstable();
                seen.dedup();
                *all += 1;
                if seen.len() <= l_obs {
                    *hit += 1;
                }
                return;
            }
            for i in start..=pool.len() - left {
                picked.push(pool[i]);
                walk(pool, i + 1, left - 1, picked, hit, all, l_obs);
                picked.pop();
            }
        }
        let (mut hit, mut all) = (0, 0);
        walk(pool, 0, n, &mut Vec::new(), &mut hit, &mut all, l_obs);
        hit as f64 / all as f64
    }

    fn expand(m: &[usize]) -> Vec<u32> {
        m.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i as u32, c)).collect()
    }

    fn cfg(n_sims: usize) -> TestConfig {
        TestConfig { n_sims, min_group_size: 1, seed: 7, workers: 0 }
    }

    #[test]
    fn exact_matches_worked_examples() {
        assert!((exact_pvalue(&[2, 1], 2, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(exact_pvalue(&[1, 1, 1], 2, 2).unwrap(), 1.0);
        assert_eq!(exact_pvalue(&[3], 2, 1).unwrap(), 1.0);
        assert_eq!(exact_pvalue(&[2, 2, 1], 3, 1).unwrap(), 0.0);
    }

    #[test]
    fn exact_agrees_with_enumeration() {
        for m in [vec![2, 1], vec![3, 2, 2, 1], vec![1, 1, 4, 2, 1], vec![5, 1, 1, 1, 1, 1]] {
            let pool = expand(&m);
            for n in 1..=pool.len() {
                for l in 0..=n {
                    let brute = brute_force_pvalue(&pool, n, l);
                    let exact = exact_pvalue(&m, n, l).unwrap();
                    assert!((brute - exact).abs() < 1e-12, "m={m:?} n={n} l={l}");
                }
            }
        }
    }

    #[test]
    fn integer_and_float_routes_agree() {
        let m: Vec<usize> = (1..=16).map(|i| i % 5 + 1).collect();
        let total: usize = m.iter().sum();
        assert!(total <= INTEGER_DP_MAX_POOL);
        for n in [1, 7, 20, total] {
            let ints = exact_counts(&m, n, m.len().min(n));
            let floats = exact_probabilities(&m, n, m.len().min(n));
            for (a, b) in ints.iter().zip(&floats) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn exact_distribution_sums_to_one_for_large_pools() {
        let m: Vec<usize> = (0..60).map(|i| 1 + (i * 7) % 40).collect();
        let dist = exact_distinct_distribution(&m, 300, &ExactLimits::default()).unwrap();
        let sum: f64 = dist.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "sum = {sum}");
    }

    #[test]
    fn exact_guards_instance_size() {
        let m = vec![1; 65];
        assert!(matches!(exact_pvalue(&m, 3, 2), Err(Error::InstanceTooLarge(_))));
        assert!(matches!(exact_pvalue(&[6000], 3, 1), Err(Error::InstanceTooLarge(_))));
        assert!(matches!(exact_pvalue(&[2, 1], 4, 1), Err(Error::SampleLargerThanPool { .. })));
    }

    #[test]
    fn mc_matches_exact_on_small_pool() {
        let pool = NamePool::from_multiplicities(&[2, 1]);
        let s = 20_000;
        let r = mc_pvalue(&pool, 2, 1, &cfg(s)).unwrap();
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / s as f64).sqrt();
        assert!((r.p_hat.unwrap() - p).abs() <= 3.0 * sigma + 1.0 / s as f64);
    }

    #[test]
    fn mc_forced_outcomes() {
        let pool = NamePool::from_multiplicities(&[1; 8]);
        assert_eq!(mc_pvalue(&pool, 8, 8, &cfg(500)).unwrap().p_hat, Some(1.0));

        let pool = NamePool::from_multiplicities(&[2, 2, 1]);
        let r = mc_pvalue(&pool, 3, 1, &cfg(500)).unwrap();
        assert_eq!(r.hits, Some(0));
        assert_eq!(r.p_hat, Some(1.0 / 501.0));
    }

    #[test]
    fn mc_rejects_bad_arguments() {
        let pool = NamePool::from_multiplicities(&[2, 1]);
        assert!(matches!(mc_pvalue(&pool, 4, 1, &cfg(10)), Err(Error::SampleLargerThanPool { .. })));
        assert!(matches!(mc_pvalue(&pool, 2, 3, &cfg(10)), Err(Error::InvalidObservedCount { .. })));
        assert!(mc_pvalue(&pool, 2, 1, &cfg(0)).is_err());
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let pool = NamePool::from_multiplicities(&(0..300).map(|i| 1 + i % 7).collect::<Vec<_>>());
        let base = simulate_distinct(&pool, 90, 3000, 11, 1).unwrap();
        for workers in [2, 3, 8] {
            assert_eq!(simulate_distinct(&pool, 90, 3000, 11, workers).unwrap(), base);
        }
    }

    #[test]
    fn replicate_restores_pool_order() {
        let pool = NamePool::from_multiplicities(&[3, 2, 4, 1]);
        let mut s = Sampler::new(&pool);
        for seed in 0..50 {
            s.replicate(6, seed);
            assert_eq!(s.ids, pool.ids);
        }
    }

    fn person(last: &str, group: &str) -> Person {
        Person::new(last, None, Gender::Unknown, group, &NormalizationPolicy::default()).unwrap()
    }

    #[test]
    fn whole_pool_group_has_unit_pvalue() {
        let persons: Vec<Person> = ["A", "B", "A", "C", "D", "C"].iter().map(|n| person(n, "G")).collect();
        let roster = Roster::new(persons, NameField::LastName);
        let r = analyze_groups(&roster, &roster, &cfg(200)).unwrap();
        assert_eq!(r[0].p_hat, Some(1.0));
        assert_eq!(r[0].n_distinct, 4);
    }

    #[test]
    fn small_groups_are_skipped() {
        let persons: Vec<Person> = (0..60)
            .map(|i| person(&format!("N{}", (b'A' + (i % 26) as u8) as char), if i < 49 { "SMALL" } else { "X" }))
            .collect();
        let roster = Roster::new(persons, NameField::LastName);
        let c = TestConfig { min_group_size: 50, ..cfg(100) };
        let r = analyze_groups(&roster, &roster, &c).unwrap();
        let small = r.iter().find(|r| r.group == "SMALL").unwrap();
        assert!(small.skipped);
        assert_eq!(small.p_hat, None);
        assert_eq!(small.n_people, 49);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let roster = Roster::new(vec![person("A", "G")], NameField::LastName);
        let empty = Roster::new(vec![], NameField::LastName);
        assert!(matches!(analyze_groups(&roster, &empty, &cfg(10)), Err(Error::EmptyPool)));
    }

    #[test]
    fn group_streams_ignore_iteration_order() {
        let names = ["A", "B", "C", "A", "D", "E", "B", "F", "G", "A", "H", "C"];
        let persons: Vec<Person> =
            names.iter().enumerate().map(|(i, n)| person(n, ["G1", "G2", "G3"][i % 3])).collect();
        let roster = Roster::new(persons, NameField::LastName);
        let all = analyze_groups(&roster, &roster, &cfg(2000)).unwrap();
        let one = analyze_selected(&roster, &roster, &cfg(2000), &["G3", "G1"]).unwrap();
        assert_eq!(one[0], all[2]);
        assert_eq!(one[1], all[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn p_hat_is_monotone_and_positive(
            m in proptest::collection::vec(1usize..4, 1..8),
            seed in any::<u64>(),
        ) {
            let pool = NamePool::from_multiplicities(&m);
            let n = pool.len().div_ceil(2);
            let hist = simulate_distinct(&pool, n, 300, seed, 0).unwrap();
            let mut prev = 0.0;
            for l in 0..=n {
                let p = hist.p_hat(l);
                prop_assert!(p > 0.0 && p <= 1.0);
                prop_assert!(p >= prev);
                prev = p;
            }
            prop_assert_eq!(hist.p_hat(n), 1.0);
        }
    }
}
