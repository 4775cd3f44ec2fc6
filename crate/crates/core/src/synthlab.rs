//! Synthetic rosters for validation and power analysis.
//!
//! Surnames come from a frequency law over a native alphabet. On top of the
//! null roster two distortions can be layered: an influx of people whose
//! surnames come from a disjoint reservoir of rare names, and nepotistic
//! hires that copy the surname of a man already in the same group and are
//! themselves men (surnames pass from father to son).
//!
//! Synthetic names are built from consonant-vowel syllables so they satisfy
//! the name-key alphabet. Native surnames have even length, reservoir
//! surnames odd length, so the two sets never collide.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roster::{normalize_name, Gender, NameField, NormalizationPolicy, Person, Roster};
use crate::scarcity::{analyze_selected, label_hash, mix_seed, with_workers, TestConfig};
use crate::strata::{restrict_gender, CommonNameList};

const CONSONANTS: &[u8] = b"BCDFGLMNPRSTVZ";
const VOWELS: &[u8] = b"AEIOU";

fn syllables(mut k: usize, min_len: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut digits = Vec::new();
    while k > 0 || digits.len() < min_len {
        digits.push(k % base);
        k /= base;
    }
    let mut out = String::with_capacity(digits.len() * 2 + 1);
    for &d in digits.iter().rev() {
        out.push(CONSONANTS[d / VOWELS.len()] as char);
        out.push(VOWELS[d % VOWELS.len()] as char);
    }
    out
}

/// Native surname of frequency rank `k` (0-based).
pub fn native_name(k: usize) -> String {
    syllables(k, 2)
}

/// Surname `k` of the rare-name reservoir.
pub fn reservoir_name(k: usize) -> String {
    let mut s = syllables(k, 2);
    s.push('K');
    s
}

fn first_name(k: usize, gender: Gender) -> String {
    let mut s = syllables(k, 1);
    s.push(if gender == Gender::F { 'A' } else { 'O' });
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NameLaw {
    /// Weight of rank `k` proportional to `k^-exponent`, `k = 1..=alphabet`.
    Zipf {
        exponent: f64,
        alphabet: usize,
    },
    Uniform {
        alphabet: usize,
    },
    /// Explicit names with relative weights.
    Empirical {
        source: String,
        names: Vec<(String, f64)>,
    },
}

impl Default for NameLaw {
    /// Zipf(0.55) over 40,000 names: about 0.44 distinct surnames per person
    /// in a roster of 61,340, with the top surname near 230 occurrences.
    fn default() -> Self {
        NameLaw::Zipf { exponent: 0.55, alphabet: 40_000 }
    }
}

impl NameLaw {
    fn validate(&self) -> Result<()> {
        match self {
            NameLaw::Zipf { exponent, alphabet } => {
                if *exponent <= 0.0 || !exponent.is_finite() {
                    return Err(Error::InvalidConfig("Zipf exponent must be positive".into()));
                }
                if *alphabet == 0 {
                    return Err(Error::InvalidConfig("alphabet must be nonempty".into()));
                }
            }
            NameLaw::Uniform { alphabet } if *alphabet == 0 => {
                return Err(Error::InvalidConfig("alphabet must be nonempty".into()));
            }
            NameLaw::Empirical { names, .. }
                if names.is_empty() || names.iter().any(|(_, w)| *w <= 0.0 || !w.is_finite()) =>
            {
                return Err(Error::InvalidConfig("empirical law needs positive weights".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Names and weights, most frequent first.
    fn table(&self) -> (Vec<String>, Vec<f64>) {
        match self {
            NameLaw::Zipf { exponent, alphabet } => (
                (0..*alphabet).map(native_name).collect(),
                (1..=*alphabet).map(|k| (k as f64).powf(-exponent)).collect(),
            ),
            NameLaw::Uniform { alphabet } => ((0..*alphabet).map(native_name).collect(), vec![1.0; *alphabet]),
            NameLaw::Empirical { names, .. } => {
                let mut sorted = names.clone();
                sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                sorted.into_iter().unzip()
            }
        }
    }

    /// Reads `name[,weight]` lines; names are normalized and merged.
    pub fn load_empirical<R: BufRead>(source: &str, reader: R) -> Result<NameLaw> {
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (raw, weight) = match line.rsplit_once(',') {
                Some((n, w)) => {
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse { row: i + 1, message: format!("bad weight `{}`", w.trim()) })?;
                    (n, w)
                }
                None => (line, 1.0),
            };
            let name = normalize_name(raw, &NormalizationPolicy::default())
                .map_err(|e| Error::Parse { row: i + 1, message: e.to_string() })?;
            *merged.entry(name).or_default() += weight;
        }
        let law = NameLaw::Empirical { source: source.to_string(), names: merged.into_iter().collect() };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for NameLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NameLaw::Zipf { exponent, alphabet } => write!(f, "zipf:{exponent}:{alphabet}"),
            NameLaw::Uniform { alphabet } => write!(f, "uniform:{alphabet}"),
            NameLaw::Empirical { source, .. } => write!(f, "empirical:{source}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroupSizes {
    /// `n_people` split as evenly as possible.
    Equal,
    Explicit(Vec<usize>),
}

/// A default value with per-group overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerGroup {
    pub default: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl PerGroup {
    pub fn uniform(default: f64) -> Self {
        Self { default, overrides: BTreeMap::new() }
    }

    pub fn with(mut self, group: &str, value: f64) -> Self {
        self.overrides.insert(group.to_string(), value);
        self
    }

    pub fn get(&self, group: &str) -> f64 {
        self.overrides.get(group).copied().unwrap_or(self.default)
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.default).chain(self.overrides.values().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_people: usize,
    pub name_law: NameLaw,
    pub n_groups: usize,
    pub group_sizes: GroupSizes,
    /// Group labels; defaults to `G01`, `G02`, ...
    pub group_labels: Option<Vec<String>>,
    /// Region labels with sampling weights; empty means no regions.
    pub regions: Vec<(String, f64)>,
    pub female_fraction: PerGroup,
    pub nepotism_rate: PerGroup,
    /// When set, only persons working in these regions can be nepotistic hires.
    pub nepotism_regions: Option<BTreeSet<String>>,
    pub immigrant_rate: PerGroup,
    pub immigrant_reservoir: usize,
    pub first_name_law: NameLaw,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_people: 61_340,
            name_law: NameLaw::default(),
            n_groups: 20,
            group_sizes: GroupSizes::Equal,
            group_labels: None,
            regions: Vec::new(),
            female_fraction: PerGroup::uniform(0.35),
            nepotism_rate: PerGroup::uniform(0.0),
            nepotism_regions: None,
            immigrant_rate: PerGroup::uniform(0.0),
            immigrant_reservoir: 1_000_000,
            first_name_law: NameLaw::Zipf { exponent: 1.0, alphabet: 3_500 },
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn labels(&self) -> Vec<String> {
        self.group_labels.clone().unwrap_or_else(|| (1..=self.n_groups).map(|i| format!("G{i:02}")).collect())
    }

    pub fn sizes(&self) -> Vec<usize> {
        match &self.group_sizes {
            GroupSizes::Explicit(s) => s.clone(),
            GroupSizes::Equal => {
                let base = self.n_people / self.n_groups.max(1);
                let extra = self.n_people % self.n_groups.max(1);
                (0..self.n_groups).map(|i| base + usize::from(i < extra)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_groups == 0 {
            return bad("n_groups must be at least 1");
        }
        if self.labels().len() != self.n_groups {
            return bad("number of group labels differs from n_groups");
        }
        if self.labels().iter().collect::<BTreeSet<_>>().len() != self.n_groups {
            return bad("group labels must be unique");
        }
        let sizes = self.sizes();
        if sizes.len() != self.n_groups || sizes.iter().sum::<usize>() != self.n_people {
            return bad("group sizes must sum to n_people");
        }
        for rates in [&self.female_fraction, &self.nepotism_rate, &self.immigrant_rate] {
            if rates.values().any(|r| !(0.0..=1.0).contains(&r)) {
                return bad("rates must lie in [0, 1]");
            }
        }
        if self.regions.iter().any(|(_, w)| *w <= 0.0 || !w.is_finite()) {
            return bad("region weights must be positive");
        }
        if self.immigrant_reservoir == 0 {
            return bad("immigrant reservoir must be nonempty");
        }
        self.name_law.validate()?;
        self.first_name_law.validate()
    }

    /// Parses `key = value` lines; see [`SynthConfig::to_text`] for keys.
    /// Missing keys keep their defaults.
    pub fn parse<R: BufRead>(reader: R) -> Result<SynthConfig> {
        let mut cfg = SynthConfig::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { row, message: format!("expected key = value, got `{line}`") })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Parse { row, message: e.to_string() })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidConfig(format!("bad value `{v}` for `{key}`")))
        }
        fn list(v: &str) -> Vec<String> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
        }
        if let Some((base, group)) = key.split_once('.') {
            let slot = match base {
                "female_fraction" => &mut self.female_fraction,
                "nepotism_rate" => &mut self.nepotism_rate,
                "immigrant_rate" => &mut self.immigrant_rate,
                _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
            };
            slot.overrides.insert(group.to_string(), num(key, value)?);
            return Ok(());
        }
        match key {
            "n_people" => self.n_people = num(key, value)?,
            "n_groups" => self.n_groups = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "immigrant_reservoir" => self.immigrant_reservoir = num(key, value)?,
            "female_fraction" => self.female_fraction.default = num(key, value)?,
            "nepotism_rate" => self.nepotism_rate.default = num(key, value)?,
            "immigrant_rate" => self.immigrant_rate.default = num(key, value)?,
            "name_law" => self.name_law = parse_law(value)?,
            "first_name_law" => self.first_name_law = parse_law(value)?,
            "group_sizes" => {
                self.group_sizes = if value == "equal" {
                    GroupSizes::Equal
                } else {
                    GroupSizes::Explicit(list(value).iter().map(|v| num(key, v)).collect::<Result<_>>()?)
                }
            }
            "group_labels" => self.group_labels = Some(list(value)),
            "regions" => {
                self.regions = list(value)
                    .iter()
                    .map(|item| match item.rsplit_once(':') {
                        Some((label, w)) => Ok((label.trim().to_string(), num(key, w.trim())?)),
                        None => Ok((item.clone(), 1.0)),
                    })
                    .collect::<Result<_>>()?
            }
            "nepotism_regions" => self.nepotism_regions = Some(list(value).into_iter().collect()),
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Key-value rendering readable by [`SynthConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("n_people", self.n_people.to_string());
        line("n_groups", self.n_groups.to_string());
        line(
            "group_sizes",
            match &self.group_sizes {
                GroupSizes::Equal => "equal".into(),
                GroupSizes::Explicit(s) => s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            },
        );
        if let Some(labels) = &self.group_labels {
            line("group_labels", labels.join(","));
        }
        line("name_law", self.name_law.to_string());
        line("first_name_law", self.first_name_law.to_string());
        if !self.regions.is_empty() {
            line("regions", self.regions.iter().map(|(r, w)| format!("{r}:{w}")).collect::<Vec<_>>().join(","));
        }
        for (key, rates) in [
            ("female_fraction", &self.female_fraction),
            ("nepotism_rate", &self.nepotism_rate),
            ("immigrant_rate", &self.immigrant_rate),
        ] {
            line(key, rates.default.to_string());
            for (g, v) in &rates.overrides {
                line(&format!("{key}.{g}"), v.to_string());
            }
        }
        if let Some(regions) = &self.nepotism_regions {
            line("nepotism_regions", regions.iter().cloned().collect::<Vec<_>>().join(","));
        }
        line("immigrant_reservoir", self.immigrant_reservoir.to_string());
        line("seed", self.seed.to_string());
        out
    }
}

fn parse_law(value: &str) -> Result<NameLaw> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let bad = || Error::InvalidConfig(format!("bad name law `{value}`"));
    let law = match parts.as_slice() {
        ["zipf", s, k] => {
            NameLaw::Zipf { exponent: s.parse().map_err(|_| bad())?, alphabet: k.parse().map_err(|_| bad())? }
        }
        ["uniform", k] => NameLaw::Uniform { alphabet: k.parse().map_err(|_| bad())? },
        ["empirical", path] => {
            let file = std::fs::File::open(path)?;
            NameLaw::load_empirical(path, std::io::BufReader::new(file))?
        }
        _ => return Err(bad()),
    };
    law.validate()?;
    Ok(law)
}

struct Sampler {
    names: Vec<String>,
    index: WeightedIndex<f64>,
}

impl Sampler {
    fn new(law: &NameLaw) -> Result<Sampler> {
        let (names, weights) = law.table();
        let index = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Sampler { names, index })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// The `size` most frequent names of the native law.
pub fn common_names(cfg: &SynthConfig, size: usize) -> CommonNameList {
    let (names, _) = cfg.name_law.table();
    CommonNameList::new("synthetic", names.into_iter().take(size))
}

/// Null roster with immigration but without nepotism.
///
/// Every person consumes the same random draws whatever the rates, so
/// rosters that differ only in rates are paired person by person.
pub fn generate_base(cfg: &SynthConfig) -> Result<Roster> {
    cfg.validate()?;
    let surnames = Sampler::new(&cfg.name_law)?;
    let first_names = Sampler::new(&cfg.first_name_law)?;
    let region_index = if cfg.regions.is_empty() {
        None
    } else {
        let weights: Vec<f64> = cfg.regions.iter().map(|(_, w)| *w).collect();
        Some(WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut persons = Vec::with_capacity(cfg.n_people);
    for (label, size) in cfg.labels().iter().zip(cfg.sizes()) {
        let female = cfg.female_fraction.get(label);
        let immigrant = cfg.immigrant_rate.get(label);
        for _ in 0..size {
            let gender = if rng.random::<f64>() < female { Gender::F } else { Gender::M };
            let region = region_index.as_ref().map(|ix| cfg.regions[ix.sample(&mut rng)].0.clone());
            let is_immigrant = rng.random::<f64>() < immigrant;
            let native = surnames.draw(&mut rng);
            let foreign = rng.random_range(0..cfg.immigrant_reservoir);
            let first = first_names.draw(&mut rng);
            let last_name = if is_immigrant { reservoir_name(foreign) } else { surnames.names[native].clone() };
            // Synthetic first names are gendered; empirical ones are used as given.
            let first_name = match cfg.first_name_law {
                NameLaw::Empirical { .. } => first_names.names[first].clone(),
                _ => self::first_name(first, gender),
            };
            persons.push(Person {
                last_name_raw: last_name.clone(),
                first_name_raw: Some(first_name.clone()),
                initials: first_name.get(..1).map(str::to_string),
                last_name,
                first_name: Some(first_name),
                gender,
                group: label.clone(),
                region,
                institution: None,
            });
        }
    }
    Ok(Roster::new(persons, NameField::LastName))
}

/// Replaces surnames of nepotistic hires.
///
/// Members of each group are visited in roster order. Each eligible member
/// is a hire with probability equal to the group's rate; a hire copies the
/// surname of a uniformly chosen man already visited in the same group (and
/// region, when regions exist) and is recorded as a man. Visited members
/// never change again, so every copied surname stays shared. The uniform
/// draws come from a stream keyed by `seed` alone, so raising the rate only
/// adds hires.
pub fn inject_nepotism(roster: &Roster, cfg: &SynthConfig, seed: u64) -> Roster {
    let mut persons = roster.persons().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, label_hash("nepotism")));
    for (group, members) in roster.group_index() {
        let rate = cfg.nepotism_rate.get(group);
        let mut donors: HashMap<Option<String>, Vec<usize>> = HashMap::new();
        for &i in members {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let eligible = match (&cfg.nepotism_regions, &persons[i].region) {
                (None, _) => true,
                (Some(set), Some(r)) => set.contains(r),
                (Some(_), None) => false,
            };
            let pool = donors.entry(persons[i].region.clone()).or_default();
            if eligible && u < rate && !pool.is_empty() {
                let donor = pool[((v * pool.len() as f64) as usize).min(pool.len() - 1)];
                let (name, raw) = (persons[donor].last_name.clone(), persons[donor].last_name_raw.clone());
                let p = &mut persons[i];
                p.last_name = name;
                p.last_name_raw = raw;
                p.gender = Gender::M;
            }
            if persons[i].gender == Gender::M {
                pool.push(i);
            }
        }
    }
    Roster::new(persons, roster.field())
}

/// Full synthetic roster: base generation followed by nepotism injection.
pub fn generate(cfg: &SynthConfig) -> Result<Roster> {
    let base = generate_base(cfg)?;
    Ok(inject_nepotism(&base, cfg, cfg.seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisScope {
    All,
    Female,
    Male,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub target_group: String,
    pub rho_grid: Vec<f64>,
    pub n_trials: usize,
    pub test: TestConfig,
    pub alpha: f64,
    pub scope: AnalysisScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub rho: f64,
    pub detections: usize,
    pub n_trials: usize,
    pub rate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub target_group: String,
    pub alpha: f64,
    pub scope: AnalysisScope,
    pub points: Vec<PowerPoint>,
}

/// Seeds of trial `t`: roster generation and Monte Carlo streams. Both are
/// shared by every rate so the curve uses common random numbers.
fn trial_seeds(base: &SynthConfig, test: &TestConfig, t: usize) -> (u64, u64) {
    (mix_seed(base.seed, t as u64), mix_seed(test.seed, t as u64))
}

/// p-value of the target group in one trial at nepotism rate `rho`.
pub fn trial_pvalue(base: &SynthConfig, cfg: &PowerConfig, rho: f64, trial: usize) -> Result<Option<f64>> {
    let (roster_seed, mc_seed) = trial_seeds(base, &cfg.test, trial);
    let synth = SynthConfig {
        seed: roster_seed,
        nepotism_rate: base.nepotism_rate.clone().with(&cfg.target_group, rho),
        ..base.clone()
    };
    let roster = generate(&synth)?;
    let roster = match cfg.scope {
        AnalysisScope::All => roster,
        AnalysisScope::Female => restrict_gender(&roster, Gender::F),
        AnalysisScope::Male => restrict_gender(&roster, Gender::M),
    };
    if roster.is_empty() {
        return Ok(None);
    }
    let test = TestConfig { seed: mc_seed, ..cfg.test };
    let result = analyze_selected(&roster, &roster, &test, &[&cfg.target_group])?;
    Ok(result[0].p_hat)
}

/// Detection rate of the target group over a grid of nepotism rates.
pub fn power_curve(base: &SynthConfig, cfg: &PowerConfig) -> Result<PowerCurve> {
    base.validate()?;
    cfg.test.validate()?;
    if !base.labels().contains(&cfg.target_group) {
        return Err(Error::InvalidConfig(format!("unknown target group `{}`", cfg.target_group)));
    }
    if cfg.rho_grid.iter().any(|r| !(0.0..=1.0).contains(r)) || cfg.rho_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig("rho grid must be ascending within [0, 1]".into()));
    }
    if cfg.n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    let jobs: Vec<(usize, usize)> =
        (0..cfg.rho_grid.len()).flat_map(|r| (0..cfg.n_trials).map(move |t| (r, t))).collect();
    let outcomes: Vec<(usize, bool)> = with_workers(cfg.test.workers, || {
        jobs.par_iter()
            .map(|&(r, t)| {
                let p = trial_pvalue(base, cfg, cfg.rho_grid[r], t)?;
                Ok((r, p.is_some_and(|p| p <= cfg.alpha)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut detections = vec![0usize; cfg.rho_grid.len()];
    for (r, hit) in outcomes {
        detections[r] += usize::from(hit);
    }
    let points = cfg
        .rho_grid
        .iter()
        .zip(detections)
        .map(|(&rho, d)| {
            let rate = d as f64 / cfg.n_trials as f64;
            PowerPoint {
                rho,
                detections: d,
                n_trials: cfg.n_trials,
                rate,
                std_error: (rate * (1.0 - rate) / cfg.n_trials as f64).sqrt(),
            }
        })
        .collect();
    Ok(PowerCurve { target_group: cfg.target_group.clone(), alpha: cfg.alpha, scope: cfg.scope, points })
}
