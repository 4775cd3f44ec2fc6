//! Person records, name normalization and roster ingestion.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Rules applied when turning a raw name into a name key.
///
/// Rules always run in the same order: parenthetical segments are dropped,
/// hyphenated names are cut at the first hyphen, the text is uppercased and
/// finally spaces and apostrophes are removed. Accented letters are folded
/// to their base letter and anything else outside `A-Z` is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationPolicy {
    pub uppercase: bool,
    pub strip_spaces_apostrophes: bool,
    pub hyphen_keep_first: bool,
    pub drop_parenthetical: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self { uppercase: true, strip_spaces_apostrophes: true, hyphen_keep_first: true, drop_parenthetical: true }
    }
}

impl NormalizationPolicy {
    /// Uppercase and strip only; hyphenated names are fused rather than cut.
    pub fn italian() -> Self {
        Self { hyphen_keep_first: false, drop_parenthetical: false, ..Self::default() }
    }

    /// Every rule on, suited to lists where married names are hyphenated
    /// or carry a parenthetical maiden name.
    pub fn uk() -> Self {
        Self::default()
    }
}

fn drop_parenthetical(raw: &str) -> String {
    let mut depth = 0usize;
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '(' => depth += 1,
            ')' if depth > 0 => depth -= 1,
            ')' => {}
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

fn fold_letter(c: char) -> Option<char> {
    if c.is_ascii_alphabetic() {
        return Some(c);
    }
    // Accented Latin letters decompose into a base letter plus combining marks.
    c.nfd().next().filter(|b| b.is_ascii_alphabetic())
}

/// Normalizes a raw name into a name key.
pub fn normalize_name(raw: &str, policy: &NormalizationPolicy) -> Result<String> {
    let mut text: String = if policy.drop_parenthetical { drop_parenthetical(raw) } else { raw.to_string() };
    if policy.hyphen_keep_first {
        if let Some(pos) = text.find('-') {
            text.truncate(pos);
        }
    }
    if policy.uppercase {
        text = text.to_uppercase();
    }
    if policy.strip_spaces_apostrophes {
        text.retain(|c| !c.is_whitespace() && !matches!(c, '\'' | '\u{2019}' | '`'));
    }
    let key: String = text
        .chars()
        .filter_map(fold_letter)
        .map(|c| if policy.uppercase { c.to_ascii_uppercase() } else { c })
        .collect();
    if key.is_empty() {
        return Err(Error::EmptyAfterNormalization(raw.to_string()));
    }
    Ok(key)
}

/// Number of distinct keys in a multiset.
pub fn distinct_count<I, T>(names: I) -> usize
where
    I: IntoIterator<Item = T>,
    T: Hash + Eq,
{
    names.into_iter().collect::<HashSet<T>>().len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
    Unknown,
}

impl Gender {
    pub fn parse(raw: &str) -> Option<Gender> {
        match raw.trim() {
            "" => Some(Gender::Unknown),
            s if s.eq_ignore_ascii_case("f") => Some(Gender::F),
            s if s.eq_ignore_ascii_case("m") => Some(Gender::M),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
            Gender::Unknown => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub last_name_raw: String,
    pub first_name_raw: Option<String>,
    pub last_name: String,
    pub first_name: Option<String>,
    pub gender: Gender,
    pub group: String,
    pub region: Option<String>,
    pub institution: Option<String>,
    pub initials: Option<String>,
}

impl Person {
    /// Builds a person by normalizing the raw names with `policy`.
    pub fn new(
        last_name_raw: &str,
        first_name_raw: Option<&str>,
        gender: Gender,
        group: &str,
        policy: &NormalizationPolicy,
    ) -> Result<Person> {
        let last_name = normalize_name(last_name_raw, policy)?;
        let first_name = first_name_raw.and_then(|f| normalize_name(f, policy).ok());
        Ok(Person {
            last_name_raw: last_name_raw.to_string(),
            first_name_raw: first_name_raw.map(str::to_string),
            last_name,
            first_name,
            gender,
            group: group.to_string(),
            region: None,
            institution: None,
            initials: None,
        })
    }

    pub fn with_region(mut self, region: &str) -> Self {
        self.region = Some(region.to_string());
        self
    }

    pub fn with_initials(mut self, initials: &str) -> Self {
        self.initials = Some(normalize_initials(initials));
        self
    }

    pub fn name(&self, field: NameField) -> Option<&str> {
        match field {
            NameField::LastName => Some(&self.last_name),
            NameField::FirstName => self.first_name.as_deref(),
        }
    }
}

fn normalize_initials(raw: &str) -> String {
    raw.chars().filter_map(fold_letter).map(|c| c.to_ascii_uppercase()).collect()
}

/// Which name field the analyses read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameField {
    #[default]
    LastName,
    FirstName,
}

/// An immutable collection of persons indexed by group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    persons: Vec<Person>,
    group_index: BTreeMap<String, Vec<usize>>,
    field: NameField,
}

impl Roster {
    /// Builds a roster, dropping persons that lack the selected name field.
    pub fn new(persons: Vec<Person>, field: NameField) -> Roster {
        let persons: Vec<Person> = persons.into_iter().filter(|p| p.name(field).is_some()).collect();
        let mut group_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in persons.iter().enumerate() {
            group_index.entry(p.group.clone()).or_default().push(i);
        }
        Roster { persons, group_index, field }
    }

    pub fn persons(&self) -> &[Person] {
        &self.persons
    }

    pub fn into_persons(self) -> Vec<Person> {
        self.persons
    }

    pub fn field(&self) -> NameField {
        self.field
    }

    /// The same persons read through a different name field.
    pub fn with_field(&self, field: NameField) -> Roster {
        Roster::new(self.persons.clone(), field)
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn group_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.group_index
    }

    pub fn groups(&self) -> impl Iterator<Item = &str> {
        self.group_index.keys().map(String::as_str)
    }

    pub fn group_members(&self, group: &str) -> impl Iterator<Item = &Person> {
        self.group_index.get(group).into_iter().flatten().map(move |&i| &self.persons[i])
    }

    pub fn group_size(&self, group: &str) -> usize {
        self.group_index.get(group).map_or(0, Vec::len)
    }

    /// Selected-field name of every person, in roster order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        let field = self.field;
        self.persons.iter().filter_map(move |p| p.name(field))
    }

    pub fn group_names<'a>(&'a self, group: &str) -> impl Iterator<Item = &'a str> + 'a {
        let field = self.field;
        let members: &'a [usize] = self.group_index.get(group).map_or(&[], Vec::as_slice);
        members.iter().filter_map(move |&i| self.persons[i].name(field))
    }

    pub fn distinct_names(&self) -> usize {
        distinct_count(self.names())
    }

    pub fn group_distinct(&self, group: &str) -> usize {
        distinct_count(self.group_names(group))
    }

    /// Persons satisfying `keep`, in input order, with groups rebuilt.
    pub fn filter<F>(&self, mut keep: F) -> Roster
    where
        F: FnMut(&Person) -> bool,
    {
        Roster::new(self.persons.iter().filter(|p| keep(p)).cloned().collect(), self.field)
    }
}

/// Keeps the first record for every (last name, initials, group) triple.
///
/// Missing initials dedup on the empty key.
pub fn dedup_uk(roster: &Roster) -> Roster {
    let mut seen: HashSet<(&str, &str, &str)> = HashSet::new();
    let kept = roster
        .persons()
        .iter()
        .filter(|p| seen.insert((p.last_name.as_str(), p.initials.as_deref().unwrap_or(""), p.group.as_str())))
        .cloned()
        .collect();
    Roster::new(kept, roster.field())
}

/// Column names for each person field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub last_name: String,
    pub first_name: String,
    pub gender: String,
    pub group: String,
    pub region: String,
    pub institution: String,
    pub initials: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            last_name: "last_name".into(),
            first_name: "first_name".into(),
            gender: "gender".into(),
            group: "group".into(),
            region: "region".into(),
            institution: "institution".into(),
            initials: "initials".into(),
        }
    }
}

impl Schema {
    /// Applies `field=column` overrides, e.g. `group=discipline`.
    pub fn with_mapping(mut self, mapping: &str) -> Result<Schema> {
        for pair in mapping.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (field, column) =
                pair.split_once('=').ok_or_else(|| Error::Schema(format!("expected field=column, got `{pair}`")))?;
            let column = column.trim().to_string();
            let slot = match field.trim() {
                "last_name" => &mut self.last_name,
                "first_name" => &mut self.first_name,
                "gender" => &mut self.gender,
                "group" => &mut self.group,
                "region" => &mut self.region,
                "institution" => &mut self.institution,
                "initials" => &mut self.initials,
                other => return Err(Error::Schema(format!("unknown person field `{other}`"))),
            };
            *slot = column;
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestionReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub drop_reasons: BTreeMap<String, usize>,
}

impl IngestionReport {
    fn drop(&mut self, reason: &str) {
        self.rows_dropped += 1;
        *self.drop_reasons.entry(reason.to_string()).or_default() += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub delimiter: u8,
    pub field: NameField,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { delimiter: b',', field: NameField::LastName }
    }
}

fn optional(value: Option<&str>) -> Option<String> {
    value.map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

/// Reads a delimited roster with a header row.
pub fn ingest_roster<R: Read>(
    source: R,
    policy: &NormalizationPolicy,
    schema: &Schema,
    options: &IngestOptions,
) -> Result<(Roster, IngestionReport)> {
    let mut reader =
        csv::ReaderBuilder::new().delimiter(options.delimiter).has_headers(true).flexible(false).from_reader(source);
    let headers = reader.headers().map_err(|e| Error::Parse { row: 1, message: e.to_string() })?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let last_col =
        column(&schema.last_name).ok_or_else(|| Error::Schema(format!("missing column `{}`", schema.last_name)))?;
    let group_col = column(&schema.group).ok_or_else(|| Error::Schema(format!("missing column `{}`", schema.group)))?;
    let first_col = column(&schema.first_name);
    if options.field == NameField::FirstName && first_col.is_none() {
        return Err(Error::Schema(format!("missing column `{}`", schema.first_name)));
    }
    let gender_col = column(&schema.gender);
    let region_col = column(&schema.region);
    let institution_col = column(&schema.institution);
    let initials_col = column(&schema.initials);

    let mut report = IngestionReport::default();
    let mut persons = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        report.rows_read += 1;
        let get = |col: Option<usize>| col.and_then(|c| record.get(c));

        let gender = match get(gender_col) {
            None => Gender::Unknown,
            Some(raw) => Gender::parse(raw)
                .ok_or_else(|| Error::Parse { row, message: format!("unrecognized gender `{raw}`") })?,
        };
        let group = record.get(group_col).unwrap_or("").trim();
        if group.is_empty() {
            report.drop("missing_group");
            continue;
        }
        let last_raw = record.get(last_col).unwrap_or("");
        let last_name = match normalize_name(last_raw, policy) {
            Ok(name) => name,
            Err(_) => {
                report.drop("empty_last_name");
                continue;
            }
        };
        let first_name_raw = optional(get(first_col));
        let first_name = first_name_raw.as_deref().and_then(|f| normalize_name(f, policy).ok());
        if options.field == NameField::FirstName && first_name.is_none() {
            report.drop("empty_first_name");
            continue;
        }
        persons.push(Person {
            last_name_raw: last_raw.to_string(),
            first_name_raw,
            last_name,
            first_name,
            gender,
            group: group.to_string(),
            region: optional(get(region_col)),
            institution: optional(get(institution_col)),
            initials: optional(get(initials_col)).map(|s| normalize_initials(&s)),
        });
        report.rows_kept += 1;
    }
    Ok((Roster::new(persons, options.field), report))
}

/// Writes persons in the canonical column layout.
pub fn write_roster<W: Write>(roster: &Roster, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let schema = Schema::default();
    writer.write_record([
        &schema.last_name,
        &schema.first_name,
        &schema.gender,
        &schema.group,
        &schema.region,
        &schema.institution,
        &schema.initials,
    ])?;
    for p in roster.persons() {
        writer.write_record([
            p.last_name_raw.as_str(),
            p.first_name_raw.as_deref().unwrap_or(""),
            p.gender.as_str(),
            &p.group,
            p.region.as_deref().unwrap_or(""),
            p.institution.as_deref().unwrap_or(""),
            p.initials.as_deref().unwrap_or(""),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Interns the selected names of a roster into dense integer ids.
pub(crate) fn intern<'a, I>(names: I) -> (Vec<u32>, usize)
where
    I: IntoIterator<Item = &'a str>,
{
    let mut ids: HashMap<&'a str, u32> = HashMap::new();
    let coded = names
        .into_iter()
        .map(|name| {
            let next = ids.len() as u32;
            *ids.entry(name).or_insert(next)
        })
        .collect();
    (coded, ids.len())
}
