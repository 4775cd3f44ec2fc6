use std::collections::{BTreeSet, HashMap};
use std::fs::File;

use namescarcity_core::roster::{ingest_roster, IngestOptions};
use namescarcity_core::scarcity::{exact_pvalue, multiplicities};
use namescarcity_core::strata::{
    common_name_proportion, exclude_groups, restrict_macro_region, restrict_region, CommonNameList, MacroRegion,
    MacroRegionMap,
};
use namescarcity_core::synthlab::{generate, PerGroup, SynthConfig};
use namescarcity_core::{
    analyze_groups, distinct_count, Gender, NameField, NormalizationPolicy, Person, Roster, Schema, TestConfig,
};

fn ten_rows(policy: &NormalizationPolicy) -> Roster {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/ten_rows.csv");
    let (roster, report) =
        ingest_roster(File::open(path).unwrap(), policy, &Schema::default(), &IngestOptions::default()).unwrap();
    assert_eq!(report.rows_read, 10);
    assert_eq!(report.rows_dropped, 0);
    roster
}

#[test]
fn ten_row_fixture_matches_hand_count() {
    // ROSSI x2, DANGELO x2 (apostrophe stripped), PORCELLINI x2 (hyphen
    // cut), MCCARTHY (parenthetical dropped), BIANCHI, NICOLO, DELUCA.
    let uk = ten_rows(&NormalizationPolicy::uk());
    assert_eq!(uk.len(), 10);
    assert_eq!(uk.distinct_names(), 7);
    assert_eq!(uk.group_distinct("MED"), 2);
    assert_eq!(uk.group_distinct("IUS"), 2);
    assert_eq!(uk.group_distinct("ING"), 4);

    // The Italian policy keeps compound names whole.
    let it = ten_rows(&NormalizationPolicy::italian());
    assert_eq!(it.distinct_names(), 8);
    assert!(it.names().any(|n| n == "PORCELLINISLAWINSKI"));

    let first = ten_rows(&NormalizationPolicy::uk()).with_field(NameField::FirstName);
    assert_eq!(first.distinct_names(), 10);
}

#[test]
fn italy_wide_distinct_count_matches_recount() {
    let cfg = SynthConfig { n_people: 12_000, n_groups: 10, seed: 8, ..SynthConfig::default() };
    let roster = generate(&cfg).unwrap();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for p in roster.persons() {
        seen.insert(p.last_name.as_str(), ());
    }
    assert_eq!(distinct_count(roster.names()), seen.len());
    for g in roster.groups() {
        let own: BTreeSet<&str> =
            roster.persons().iter().filter(|p| p.group == g).map(|p| p.last_name.as_str()).collect();
        assert_eq!(roster.group_distinct(g), own.len());
    }
}

fn italy_fixture() -> Roster {
    let map = MacroRegionMap::italy();
    let regions = MacroRegion::ALL.iter().flat_map(|&m| map.regions_in(m)).map(|r| (r.to_string(), 1.0)).collect();
    generate(&SynthConfig { n_people: 6_000, n_groups: 6, regions, seed: 21, ..SynthConfig::default() }).unwrap()
}

#[test]
fn sicily_restriction_counts_sicily_rows() {
    let roster = italy_fixture();
    let by_hand = roster.persons().iter().filter(|p| p.region.as_deref() == Some("Sicily")).count();
    assert!(by_hand > 0);
    assert_eq!(restrict_region(&roster, "Sicily").len(), by_hand);
    assert_eq!(restrict_region(&roster, "sicily").len(), by_hand);
    let map = MacroRegionMap::italy();
    assert_eq!(restrict_macro_region(&roster, &map, MacroRegion::Sicily).len(), by_hand);

    let total: usize = MacroRegion::ALL.iter().map(|&m| restrict_macro_region(&roster, &map, m).len()).sum();
    assert_eq!(total, roster.len());
}

#[test]
fn excluding_a_small_group_drops_its_members() {
    let policy = NormalizationPolicy::default();
    let mut persons = Vec::new();
    for i in 0..970 {
        let group = ["A", "B", "C"][i % 3];
        persons.push(Person::new(&format!("N{}", i % 50), None, Gender::M, group, &policy).unwrap());
    }
    for i in 0..30 {
        persons.push(Person::new(&format!("N{i}"), None, Gender::F, "SMALL", &policy).unwrap());
    }
    let roster = Roster::new(persons, NameField::LastName);
    let kept = exclude_groups(&roster, &["SMALL".to_string()].into());
    assert_eq!(kept.len(), 970);
    assert!(kept.groups().all(|g| g != "SMALL"));
    assert_eq!(exclude_groups(&roster, &BTreeSet::new()), roster);
}

#[test]
fn two_low_commonality_groups_fall_below_the_fifth_percentile() {
    let policy = NormalizationPolicy::default();
    let common: Vec<String> = (0..20).map(|i| format!("COMMON{}", char::from(b'A' + i))).collect();
    let mut persons = Vec::new();
    for g in 0..40 {
        let label = format!("G{g:02}");
        // Most groups are 80-100% common; two are mostly rare.
        let n_common = match g {
            7 => 2,
            23 => 4,
            _ => 16 + g % 5,
        };
        for (i, c) in common.iter().enumerate() {
            let name = if i < n_common { c.as_str() } else { "RARE" };
            persons.push(Person::new(name, None, Gender::M, &label, &policy).unwrap());
        }
    }
    let roster = Roster::new(persons, NameField::LastName);
    let share = common_name_proportion(&roster, &CommonNameList::new("fixture", common));
    assert_eq!(share.per_group["G07"], 0.1);
    assert_eq!(share.per_group["G23"], 0.2);
    assert_eq!(share.bottom, ["G07".to_string(), "G23".to_string()].into());
}

#[test]
fn five_groups_from_a_tiny_pool_match_exact_pvalues() {
    let policy = NormalizationPolicy::default();
    let names = ["AA", "BB", "CC", "DD", "EE", "FF"];
    let mut persons = Vec::new();
    // Group g draws more and more of its members from the first names.
    for g in 0..5usize {
        for i in 0..12usize {
            let name = names[(i * (g + 1) / 3 + g) % names.len()];
            persons.push(Person::new(name, None, Gender::M, &format!("G{g}"), &policy).unwrap());
        }
    }
    let roster = Roster::new(persons, NameField::LastName);
    let m = multiplicities(roster.names());
    let s = 20_000;
    let cfg = TestConfig { n_sims: s, min_group_size: 1, seed: 4, workers: 0 };
    let results = analyze_groups(&roster, &roster, &cfg).unwrap();
    assert_eq!(results.len(), 5);
    for r in results {
        let exact = exact_pvalue(&m, r.n_people, r.n_distinct).unwrap();
        let p = r.p_hat.unwrap();
        let tol = 3.0 * (exact * (1.0 - exact) / s as f64).sqrt() + 1.0 / s as f64;
        assert!((p - exact).abs() <= tol, "{}: mc {p}, exact {exact}", r.group);
    }
}

#[test]
fn nepotism_free_fixture_has_no_injected_duplicates() {
    let cfg = SynthConfig {
        n_people: 2_000,
        n_groups: 4,
        nepotism_rate: PerGroup::uniform(0.0),
        seed: 2,
        ..SynthConfig::default()
    };
    let a = generate(&cfg).unwrap();
    let b = namescarcity_core::synthlab::generate_base(&cfg).unwrap();
    assert_eq!(a, b);
}
