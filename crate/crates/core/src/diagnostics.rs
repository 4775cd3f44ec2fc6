//! Descriptive diagnostics: logit fits, name frequencies and gender shares.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roster::{Gender, Roster};

pub const DEFAULT_CLAMP: f64 = 1e-6;

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitPoint {
    pub covariate: f64,
    pub p: f64,
    pub logit: f64,
}

/// Least-squares line through `(covariate, logit(p))`.
///
/// This is a linearized diagnostic, not a fitted logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub clamp_epsilon: f64,
    pub points: Vec<LogitPoint>,
}

/// Fits `logit(p) = intercept + slope * covariate` by ordinary least squares
/// after clamping every `p` into `[eps, 1 - eps]`.
pub fn logit_regression(points: &[(f64, f64)], eps: f64) -> Result<LogitFit> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidConfig(format!("clamp epsilon must lie in (0, 0.5), got {eps}")));
    }
    if points.len() < 2 {
        return Err(Error::DegenerateDesign);
    }
    let points: Vec<LogitPoint> = points
        .iter()
        .map(|&(covariate, p)| LogitPoint { covariate, p, logit: logit(p.clamp(eps, 1.0 - eps)) })
        .collect();
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.covariate).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.logit).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &points {
        let dx = p.covariate - mean_x;
        let dy = p.logit - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateDesign);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    // A flat response is fitted exactly by the zero-slope line.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LogitFit { slope, intercept, r_squared, clamp_epsilon: eps, points })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeFrequencies {
    /// `None` for the whole roster.
    pub group: Option<String>,
    pub total: usize,
    pub distinct: usize,
    pub top: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyScope {
    Whole,
    PerGroup,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameFrequencyTable {
    pub scopes: Vec<ScopeFrequencies>,
}

fn frequencies<'a, I>(group: Option<String>, names: I, k: usize) -> ScopeFrequencies
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut total = 0;
    for n in names {
        *counts.entry(n).or_default() += 1;
        total += 1;
    }
    let distinct = counts.len();
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(k);
    ScopeFrequencies { group, total, distinct, top: ranked.into_iter().map(|(n, c)| (n.to_string(), c)).collect() }
}

/// Top-`k` names by count, ties broken alphabetically.
pub fn name_frequencies(roster: &Roster, scope: FrequencyScope, k: usize) -> Result<NameFrequencyTable> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let scopes = match scope {
        FrequencyScope::Whole => vec![frequencies(None, roster.names(), k)],
        FrequencyScope::PerGroup => {
            roster.groups().map(|g| frequencies(Some(g.to_string()), roster.group_names(g), k)).collect()
        }
    };
    Ok(NameFrequencyTable { scopes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WomenFraction {
    pub female: usize,
    pub male: usize,
    pub unknown: usize,
    /// `F / (F + M)`, `None` when nobody has a known gender.
    pub fraction: Option<f64>,
}

pub fn women_fraction(roster: &Roster) -> BTreeMap<String, WomenFraction> {
    roster
        .groups()
        .map(|g| {
            let mut w = WomenFraction { female: 0, male: 0, unknown: 0, fraction: None };
            for p in roster.group_members(g) {
                match p.gender {
                    Gender::F => w.female += 1,
                    Gender::M => w.male += 1,
                    Gender::Unknown => w.unknown += 1,
                }
            }
            let known = w.female + w.male;
            w.fraction = (known > 0).then(|| w.female as f64 / known as f64);
            (g.to_string(), w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roster::{NameField, NormalizationPolicy, Person};
    use proptest::prelude::*;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let w = i as f64 / 10.0;
                (w, sigmoid(-3.0 * w + 1.0))
            })
            .collect();
        let fit = logit_regression(&pts, DEFAULT_CLAMP).unwrap();
        assert!((fit.slope + 3.0).abs() < 1e-9);
        assert!((fit.intercept - 1.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_maps_to_zero_and_tiny_p_is_clamped() {
        let fit = logit_regression(&[(0.1, 0.5), (0.9, 1e-9)], DEFAULT_CLAMP).unwrap();
        assert_eq!(fit.points[0].logit, 0.0);
        assert_eq!(fit.points[1].logit, logit(1e-6));
        assert!((fit.points[1].logit + 13.815_509_557_963_773).abs() < 1e-9);
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        assert!(matches!(logit_regression(&[(0.2, 0.1), (0.2, 0.3)], DEFAULT_CLAMP), Err(Error::DegenerateDesign)));
        assert!(matches!(logit_regression(&[(0.2, 0.1)], DEFAULT_CLAMP), Err(Error::DegenerateDesign)));
    }

    fn roster(rows: &[(&str, Gender, &str)]) -> Roster {
        Roster::new(
            rows.iter()
                .map(|&(n, g, grp)| Person::new(n, None, g, grp, &NormalizationPolicy::default()).unwrap())
                .collect(),
            NameField::LastName,
        )
    }

    #[test]
    fn top_names_with_ties() {
        let r = roster(&[("A", Gender::M, "X"), ("A", Gender::M, "X"), ("B", Gender::M, "X")]);
        let t = name_frequencies(&r, FrequencyScope::Whole, 1).unwrap();
        assert_eq!(t.scopes[0].top, vec![("A".to_string(), 2)]);

        let r = roster(&[("B", Gender::M, "X"), ("A", Gender::M, "X")]);
        let t = name_frequencies(&r, FrequencyScope::PerGroup, 1).unwrap();
        assert_eq!(t.scopes[0].top, vec![("A".to_string(), 1)]);
        assert_eq!(t.scopes[0].group.as_deref(), Some("X"));
        assert!(name_frequencies(&r, FrequencyScope::Whole, 0).is_err());
    }

    #[test]
    fn women_fractions() {
        let mut rows = vec![("A", Gender::F, "ALLF"); 3];
        rows.extend(std::iter::repeat_n(("B", Gender::F, "ENG"), 13));
        rows.extend(std::iter::repeat_n(("C", Gender::M, "ENG"), 87));
        rows.push(("D", Gender::Unknown, "ENG"));
        let w = women_fraction(&roster(&rows));
        assert_eq!(w["ALLF"].fraction, Some(1.0));
        assert_eq!(w["ENG"].fraction, Some(0.13));
        assert_eq!(w["ENG"].unknown, 1);
    }

    proptest! {
        #[test]
        fn clamped_logits_are_bounded(ps in proptest::collection::vec(0.0f64..=1.0, 2..30)) {
            let pts: Vec<(f64, f64)> = ps.iter().enumerate().map(|(i, &p)| (i as f64, p)).collect();
            let fit = logit_regression(&pts, DEFAULT_CLAMP).unwrap();
            let bound = logit(DEFAULT_CLAMP).abs() + 1e-9;
            prop_assert!(fit.points.iter().all(|p| p.logit.abs() <= bound));
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }

        #[test]
        fn frequencies_match_sort_and_count(names in proptest::collection::vec("[A-E]{1,2}", 1..60)) {
            let rows: Vec<(&str, Gender, &str)> = names.iter().map(|n| (n.as_str(), Gender::M, "G")).collect();
            let r = roster(&rows);
            let t = name_frequencies(&r, FrequencyScope::Whole, usize::MAX).unwrap();

            let mut sorted = names.clone();
            sorted.sort();
            let mut runs: Vec<(String, usize)> = Vec::new();
            for n in sorted {
                match runs.last_mut() {
                    Some((last, c)) if *last == n => *c += 1,
                    _ => runs.push((n, 1)),
                }
            }
            runs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            prop_assert_eq!(&t.scopes[0].top, &runs);
            prop_assert_eq!(t.scopes[0].total, names.len());
            prop_assert_eq!(t.scopes[0].distinct, runs.len());
        }
    }
}
