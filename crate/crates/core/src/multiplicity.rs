//! False discovery rate control with Storey q-values.
//!
//! The null proportion `pi0` is estimated on a grid of thresholds `lambda`
//! as `#{p > lambda} / (m (1 - lambda))`. The bootstrap picks the `lambda`
//! whose resampled estimates sit closest, in mean squared error, to the
//! smallest estimate over the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scarcity::ScarcityResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QValueConfig {
    pub lambda_grid: Vec<f64>,
    pub n_bootstrap: usize,
    pub seed: u64,
    /// Skips estimation and uses this `pi0` instead.
    pub fixed_pi0: Option<f64>,
}

impl Default for QValueConfig {
    fn default() -> Self {
        Self { lambda_grid: (0..=18).map(|i| i as f64 * 0.05).collect(), n_bootstrap: 100, seed: 0, fixed_pi0: None }
    }
}

impl QValueConfig {
    pub fn with_pi0(pi0: f64) -> Self {
        Self { fixed_pi0: Some(pi0), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QValueEntry {
    pub group: String,
    pub p: f64,
    pub q: f64,
    pub highly_significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QValueReport {
    pub entries: Vec<QValueEntry>,
    pub pi0_hat: f64,
    pub lambda_grid: Vec<f64>,
    pub n_bootstrap: usize,
}

impl QValueReport {
    pub fn q_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.q).collect()
    }
}

pub const DEFAULT_ALPHA: f64 = 0.05;

fn validate(pvals: &[f64]) -> Result<()> {
    if pvals.is_empty() {
        return Err(Error::EmptyInput);
    }
    match pvals.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        Some(&p) => Err(Error::InvalidPValue(p)),
        None => Ok(()),
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("lambda grid is empty".into()));
    }
    if grid.iter().any(|&l| !(0.0..=0.95).contains(&l)) {
        return Err(Error::InvalidConfig("lambda values must lie in [0, 0.95]".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("lambda grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Unclamped `#{p > lambda} / (m (1 - lambda))`.
pub fn pi0_at(pvals: &[f64], lambda: f64) -> f64 {
    let above = pvals.iter().filter(|&&p| p > lambda).count();
    above as f64 / (pvals.len() as f64 * (1.0 - lambda))
}

/// Bootstrap estimate of `pi0`, clamped to `[1/m, 1]`.
pub fn estimate_pi0(pvals: &[f64], lambda_grid: &[f64], n_bootstrap: usize, seed: u64) -> Result<f64> {
    validate(pvals)?;
    validate_grid(lambda_grid)?;
    let m = pvals.len();
    let pi0: Vec<f64> = lambda_grid.iter().map(|&l| pi0_at(pvals, l)).collect();
    let min_pi0 = pi0.iter().copied().fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mse = vec![0.0f64; lambda_grid.len()];
    let mut sample = vec![0.0f64; m];
    for _ in 0..n_bootstrap {
        for s in sample.iter_mut() {
            *s = pvals[rng.random_range(0..m)];
        }
        for (acc, &l) in mse.iter_mut().zip(lambda_grid) {
            let d = pi0_at(&sample, l) - min_pi0;
            *acc += d * d;
        }
    }
    // Ties go to the smallest estimate.
    let best = mse.iter().copied().fold(f64::INFINITY, f64::min);
    let chosen = mse.iter().zip(&pi0).filter(|(e, _)| **e == best).map(|(_, &p)| p).fold(f64::INFINITY, f64::min);
    Ok(chosen.clamp(1.0 / m as f64, 1.0))
}

/// q-values for `pvals` at a given `pi0`: `pi0 * min(1, cummin(m p / rank))`
/// taken from the largest p-value down.
pub fn qvalues_with_pi0(pvals: &[f64], pi0: f64) -> Result<Vec<f64>> {
    validate(pvals)?;
    if !(pi0 > 0.0 && pi0 <= 1.0) {
        return Err(Error::InvalidConfig(format!("pi0 must lie in (0, 1], got {pi0}")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut q = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (pos, &i) in order.iter().enumerate().rev() {
        let rank = (pos + 1) as f64;
        running = running.min(m as f64 * pvals[i] / rank);
        q[i] = pi0 * running.min(1.0);
    }
    Ok(q)
}

/// Storey q-values for labelled p-values.
pub fn qvalues(labelled: &[(String, f64)], cfg: &QValueConfig) -> Result<QValueReport> {
    let pvals: Vec<f64> = labelled.iter().map(|(_, p)| *p).collect();
    validate(&pvals)?;
    let pi0 = match cfg.fixed_pi0 {
        Some(p) => p,
        None => estimate_pi0(&pvals, &cfg.lambda_grid, cfg.n_bootstrap, cfg.seed)?,
    };
    let q = qvalues_with_pi0(&pvals, pi0)?;
    let entries = labelled
        .iter()
        .zip(q)
        .map(|((group, p), q)| QValueEntry {
            group: group.clone(),
            p: *p,
            q,
            highly_significant: *p <= DEFAULT_ALPHA && q <= DEFAULT_ALPHA,
        })
        .collect();
    Ok(QValueReport { entries, pi0_hat: pi0, lambda_grid: cfg.lambda_grid.clone(), n_bootstrap: cfg.n_bootstrap })
}

/// q-values for the tested (non-skipped) groups of one analysis batch.
pub fn qvalues_for_results(results: &[ScarcityResult], cfg: &QValueConfig) -> Result<Option<QValueReport>> {
    let labelled: Vec<(String, f64)> =
        results.iter().filter_map(|r| r.p_hat.filter(|_| !r.skipped).map(|p| (r.group.clone(), p))).collect();
    if labelled.is_empty() {
        return Ok(None);
    }
    qvalues(&labelled, cfg).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classified {
    pub result: ScarcityResult,
    pub q: Option<f64>,
    pub highly_significant: bool,
}

/// Marks results with `p <= alpha` and `q <= alpha`. Skipped groups are
/// never significant and need no q-value.
pub fn classify(results: &[ScarcityResult], report: Option<&QValueReport>, alpha: f64) -> Result<Vec<Classified>> {
    let entries = report.map_or(&[][..], |r| r.entries.as_slice());
    let mut next = entries.iter();
    let out = results
        .iter()
        .map(|r| {
            if r.skipped || r.p_hat.is_none() {
                return Ok(Classified { result: r.clone(), q: None, highly_significant: false });
            }
            let entry = next.next().ok_or_else(|| Error::LabelMismatch(format!("no q-value for `{}`", r.group)))?;
            if entry.group != r.group {
                return Err(Error::LabelMismatch(format!("`{}` vs `{}`", entry.group, r.group)));
            }
            let p = r.p_hat.unwrap_or(1.0);
            Ok(Classified { result: r.clone(), q: Some(entry.q), highly_significant: p <= alpha && entry.q <= alpha })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(extra) = next.next() {
        return Err(Error::LabelMismatch(format!("q-value for unknown group `{}`", extra.group)));
    }
    Ok(out)
}
