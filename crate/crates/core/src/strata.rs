//! Stratified re-analysis: regions, gender, common names and exclusions.
//!
//! Every operation here is a roster transform followed, where needed, by a
//! plain [`analyze_groups`] call. Stratified tests sample from the stratum's
//! own pool unless a [`PoolChoice::Fixed`] override is given.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roster::{normalize_name, Gender, NormalizationPolicy, Person, Roster};
use crate::scarcity::{analyze_groups, ScarcityResult, TestConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MacroRegion {
    North,
    Center,
    South,
    Sardinia,
    Sicily,
}

impl MacroRegion {
    pub const ALL: [MacroRegion; 5] =
        [MacroRegion::North, MacroRegion::Center, MacroRegion::South, MacroRegion::Sardinia, MacroRegion::Sicily];

    pub fn as_str(&self) -> &'static str {
        match self {
            MacroRegion::North => "North",
            MacroRegion::Center => "Center",
            MacroRegion::South => "South",
            MacroRegion::Sardinia => "Sardinia",
            MacroRegion::Sicily => "Sicily",
        }
    }
}

impl fmt::Display for MacroRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MacroRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MacroRegion::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown macro-region `{s}`")))
    }
}

const NORTH: [&str; 8] = [
    "Aosta Valley",
    "Liguria",
    "Lombardy",
    "Piedmont",
    "Emilia-Romagna",
    "Friuli-Venezia Giulia",
    "Trentino-Alto Adige",
    "Veneto",
];
const CENTER: [&str; 4] = ["Lazio", "Marche", "Tuscany", "Umbria"];
// Whatever remains of the 20 regions once North, Center and the islands are
// taken out.
const SOUTH: [&str; 6] = ["Abruzzo", "Apulia", "Basilicata", "Calabria", "Campania", "Molise"];

fn region_key(region: &str) -> String {
    region.trim().to_lowercase()
}

/// Assignment of regions to macro-regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroRegionMap {
    regions: BTreeMap<String, (String, MacroRegion)>,
}

impl Default for MacroRegionMap {
    fn default() -> Self {
        Self::italy()
    }
}

impl MacroRegionMap {
    /// The 20 Italian regions.
    pub fn italy() -> Self {
        let mut map = MacroRegionMap { regions: BTreeMap::new() };
        for (list, macro_region) in [
            (&NORTH[..], MacroRegion::North),
            (&CENTER[..], MacroRegion::Center),
            (&SOUTH[..], MacroRegion::South),
            (&["Sardinia"][..], MacroRegion::Sardinia),
            (&["Sicily"][..], MacroRegion::Sicily),
        ] {
            for r in list {
                map.insert(r, macro_region);
            }
        }
        map
    }

    fn insert(&mut self, region: &str, macro_region: MacroRegion) {
        self.regions.insert(region_key(region), (region.trim().to_string(), macro_region));
    }

    /// Parses `region=macro` lines; `#` starts a comment.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut map = MacroRegionMap { regions: BTreeMap::new() };
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (region, macro_region) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { row: i + 1, message: format!("expected region=macro, got `{line}`") })?;
            if map.regions.contains_key(&region_key(region)) {
                return Err(Error::Parse { row: i + 1, message: format!("region `{}` mapped twice", region.trim()) });
            }
            map.insert(region, macro_region.parse()?);
        }
        Ok(map)
    }

    pub fn macro_region(&self, region: &str) -> Option<MacroRegion> {
        self.regions.get(&region_key(region)).map(|(_, m)| *m)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions_in(&self, macro_region: MacroRegion) -> Vec<&str> {
        self.regions.values().filter(|(_, m)| *m == macro_region).map(|(name, _)| name.as_str()).collect()
    }
}

/// A set of frequent name keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonNameList {
    pub label: String,
    pub names: BTreeSet<String>,
}

impl CommonNameList {
    pub fn new<I, S>(label: &str, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { label: label.to_string(), names: names.into_iter().map(Into::into).collect() }
    }

    /// One raw name per line, normalized with `policy`; unusable lines are
    /// skipped.
    pub fn parse<R: BufRead>(label: &str, reader: R, policy: &NormalizationPolicy) -> Result<Self> {
        let mut names = BTreeSet::new();
        for line in reader.lines() {
            if let Ok(name) = normalize_name(&line?, policy) {
                names.insert(name);
            }
        }
        Ok(Self { label: label.to_string(), names })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Sub-roster of persons matching `predicate`.
pub fn restrict<F>(roster: &Roster, predicate: F) -> Roster
where
    F: FnMut(&Person) -> bool,
{
    roster.filter(predicate)
}

pub fn restrict_region(roster: &Roster, region: &str) -> Roster {
    let key = region_key(region);
    restrict(roster, |p| p.region.as_deref().map(region_key).as_deref() == Some(key.as_str()))
}

pub fn restrict_macro_region(roster: &Roster, map: &MacroRegionMap, macro_region: MacroRegion) -> Roster {
    restrict(roster, |p| p.region.as_deref().and_then(|r| map.macro_region(r)) == Some(macro_region))
}

pub fn restrict_gender(roster: &Roster, gender: Gender) -> Roster {
    restrict(roster, |p| p.gender == gender)
}

/// Persons whose selected name is in `list`.
pub fn filter_common(roster: &Roster, list: &CommonNameList) -> Roster {
    let field = roster.field();
    restrict(roster, |p| p.name(field).is_some_and(|n| list.contains(n)))
}

pub fn exclude_groups(roster: &Roster, labels: &BTreeSet<String>) -> Roster {
    restrict(roster, |p| !labels.contains(&p.group))
}

/// Where a stratified test draws its null samples from.
#[derive(Debug, Clone, Copy)]
pub enum PoolChoice<'a> {
    /// The stratum's own persons.
    Stratum,
    /// A fixed roster, for sensitivity checks.
    Fixed(&'a Roster),
}

/// Tests a stratum against the pool picked by `pool`.
pub fn analyze_stratum(stratum: &Roster, pool: PoolChoice<'_>, cfg: &TestConfig) -> Result<Vec<ScarcityResult>> {
    if stratum.is_empty() {
        return Ok(Vec::new());
    }
    match pool {
        PoolChoice::Stratum => analyze_groups(stratum, stratum, cfg),
        PoolChoice::Fixed(p) => analyze_groups(stratum, p, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderSplit {
    pub female: Vec<ScarcityResult>,
    pub male: Vec<ScarcityResult>,
}

/// Separate analyses of women and men, each against its own pool. Persons
/// of unknown gender take part in neither.
pub fn gender_split_analyze(roster: &Roster, cfg: &TestConfig) -> Result<GenderSplit> {
    Ok(GenderSplit {
        female: analyze_stratum(&restrict_gender(roster, Gender::F), PoolChoice::Stratum, cfg)?,
        male: analyze_stratum(&restrict_gender(roster, Gender::M), PoolChoice::Stratum, cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonProportion {
    pub per_group: BTreeMap<String, f64>,
    pub mean: f64,
    /// Empirical 5th percentile of the per-group fractions.
    pub cutoff: f64,
    /// Groups at or below the cutoff.
    pub bottom: BTreeSet<String>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Share of each group's persons whose selected name is in `list`.
pub fn common_name_proportion(roster: &Roster, list: &CommonNameList) -> CommonProportion {
    let per_group: BTreeMap<String, f64> = roster
        .groups()
        .map(|g| {
            let n = roster.group_size(g);
            let common = roster.group_names(g).filter(|n| list.contains(n)).count();
            (g.to_string(), common as f64 / n as f64)
        })
        .collect();
    if per_group.is_empty() {
        return CommonProportion { per_group, mean: f64::NAN, cutoff: f64::NAN, bottom: BTreeSet::new() };
    }
    let mut sorted: Vec<f64> = per_group.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let cutoff = quantile(&sorted, 0.05);
    let bottom = per_group.iter().filter(|(_, &f)| f <= cutoff).map(|(g, _)| g.clone()).collect();
    CommonProportion { per_group, mean, cutoff, bottom }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCount {
    pub n_regions_tested: usize,
    pub n_regions_low_p: usize,
    /// `None` when no region was tested.
    pub proportion: Option<f64>,
}

impl RegionCount {
    /// Rendered as `low/tested`, e.g. `8/16`.
    pub fn count_label(&self) -> String {
        format!("{}/{}", self.n_regions_low_p, self.n_regions_tested)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub region: String,
    pub result: ScarcityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub alpha: f64,
    pub groups: BTreeMap<String, RegionCount>,
    pub cells: Vec<RegionCell>,
}

impl RegionSummary {
    /// Tested cells with `p <= alpha`.
    pub fn low_p_cells(&self) -> impl Iterator<Item = &RegionCell> {
        self.cells.iter().filter(move |c| c.result.p_hat.is_some_and(|p| p <= self.alpha))
    }
}

/// Tests every group within every region against that region's pool and
/// counts, per group, the regions where `p <= alpha`.
pub fn region_sweep(roster: &Roster, cfg: &TestConfig, alpha: f64) -> Result<RegionSummary> {
    let mut regions: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for p in roster.persons() {
        if let Some(r) = &p.region {
            if seen.insert(region_key(r)) {
                regions.push(r.trim().to_string());
            }
        }
    }
    regions.sort_by_key(|r| region_key(r));

    let mut groups: BTreeMap<String, RegionCount> = roster
        .groups()
        .map(|g| (g.to_string(), RegionCount { n_regions_tested: 0, n_regions_low_p: 0, proportion: None }))
        .collect();
    let mut cells = Vec::new();
    for region in &regions {
        let local = restrict_region(roster, region);
        for result in analyze_stratum(&local, PoolChoice::Stratum, cfg)? {
            let Some(p) = result.p_hat else { continue };
            let count = groups.get_mut(&result.group).expect("group comes from roster");
            count.n_regions_tested += 1;
            if p <= alpha {
                count.n_regions_low_p += 1;
            }
            cells.push(RegionCell { region: region.clone(), result });
        }
    }
    for count in groups.values_mut() {
        count.proportion =
            (count.n_regions_tested > 0).then(|| count.n_regions_low_p as f64 / count.n_regions_tested as f64);
    }
    Ok(RegionSummary { alpha, groups, cells })
}
