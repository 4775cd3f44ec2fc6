use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use namescarcity_core::diagnostics::{logit_regression, name_frequencies, women_fraction, FrequencyScope, LogitFit};
use namescarcity_core::multiplicity::{qvalues, QValueConfig};
use namescarcity_core::roster::{dedup_uk, ingest_roster, write_roster, IngestOptions, IngestionReport};
use namescarcity_core::strata::{
    analyze_stratum, common_name_proportion, exclude_groups, filter_common, region_sweep, restrict_gender,
    restrict_macro_region, CommonNameList, MacroRegion, MacroRegionMap, PoolChoice,
};
use namescarcity_core::synthlab::{common_names, generate, power_curve, AnalysisScope, PowerConfig, SynthConfig};
use namescarcity_core::{Error as CoreError, Gender, NameField, NormalizationPolicy, Roster, Schema, TestConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    AnalyzeArgs, DiagnoseArgs, FieldArg, InputArgs, PolicyArg, QArgs, QvaluesArgs, ScopeArg, SimulateArgs, StratifyArg,
};
use crate::error::{CliError, CliResult};
use crate::report::{write_rows_csv, AnalysisReport, Batch, ReportRow};

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|source| CliError::File { path: path.display().to_string(), source })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::File { path: path.display().to_string(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.display().to_string(), source })
}

fn field(arg: FieldArg) -> NameField {
    match arg {
        FieldArg::Last => NameField::LastName,
        FieldArg::First => NameField::FirstName,
    }
}

fn field_str(arg: FieldArg) -> &'static str {
    match arg {
        FieldArg::Last => "last",
        FieldArg::First => "first",
    }
}

fn policy(arg: PolicyArg) -> NormalizationPolicy {
    match arg {
        PolicyArg::Uk => NormalizationPolicy::uk(),
        PolicyArg::Italian => NormalizationPolicy::italian(),
    }
}

fn policy_str(arg: PolicyArg) -> &'static str {
    match arg {
        PolicyArg::Uk => "uk",
        PolicyArg::Italian => "italian",
    }
}

fn label_list(raw: Option<&str>) -> BTreeSet<String> {
    raw.into_iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

fn q_config(q: &QArgs) -> QValueConfig {
    QValueConfig { n_bootstrap: q.n_bootstrap, seed: q.q_seed, fixed_pi0: q.pi0, ..QValueConfig::default() }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Reads, normalizes, deduplicates and excludes, in that order.
fn load_roster(input: &InputArgs, name_field: NameField) -> CliResult<(Roster, IngestionReport, Value)> {
    if !input.delimiter.is_ascii() {
        return Err(CliError::Usage("delimiter must be a single ASCII character".into()));
    }
    let schema = match &input.schema {
        Some(m) => Schema::default().with_mapping(m)?,
        None => Schema::default(),
    };
    let options = IngestOptions { delimiter: input.delimiter as u8, field: name_field };
    let (mut roster, report) = ingest_roster(open(&input.input)?, &policy(input.policy), &schema, &options)?;
    if input.dedup {
        roster = dedup_uk(&roster);
    }
    let excluded = label_list(input.exclude_groups.as_deref());
    if !excluded.is_empty() {
        roster = exclude_groups(&roster, &excluded);
    }
    let provenance = json!({
        "input": input.input.display().to_string(),
        "schema": input.schema,
        "delimiter": input.delimiter.to_string(),
        "policy": policy_str(input.policy),
        "dedup": input.dedup,
        "excluded_groups": excluded,
        "persons_analyzed": roster.len(),
    });
    Ok((roster, report, provenance))
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn stratum_file(stratum: &str) -> String {
    let safe: String = stratum.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("report_{safe}.csv")
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<AnalysisReport> {
    check_alpha(args.alpha)?;
    let cfg = TestConfig { n_sims: args.sims, min_group_size: args.min_size, seed: args.seed, workers: args.workers };
    cfg.validate()?;
    let qcfg = q_config(&args.q);
    let map = match &args.macro_map {
        Some(path) => MacroRegionMap::parse(BufReader::new(open(path)?))?,
        None => MacroRegionMap::italy(),
    };
    let common = match &args.filter_common {
        Some(path) => Some(CommonNameList::parse(
            &path.display().to_string(),
            BufReader::new(open(path)?),
            &policy(args.input.policy),
        )?),
        None => None,
    };
    prepare_out_dir(&args.out_dir)?;
    let (roster, ingestion, input_provenance) = load_roster(&args.input, field(args.field))?;

    let mut batches =
        vec![Batch::build("all", &analyze_stratum(&roster, PoolChoice::Stratum, &cfg)?, &qcfg, args.alpha)?];
    if args.stratify == StratifyArg::MacroRegion {
        for m in MacroRegion::ALL {
            let part = restrict_macro_region(&roster, &map, m);
            let results = analyze_stratum(&part, PoolChoice::Stratum, &cfg)?;
            batches.push(Batch::build(m.as_str(), &results, &qcfg, args.alpha)?);
        }
    }
    let mut common_share = None;
    if let Some(list) = &common {
        let part = filter_common(&roster, list);
        let results = analyze_stratum(&part, PoolChoice::Stratum, &cfg)?;
        batches.push(Batch::build("common", &results, &qcfg, args.alpha)?);
        common_share = Some(common_name_proportion(&roster, list));
    }
    if args.gender_split {
        for (tag, g) in [("F", Gender::F), ("M", Gender::M)] {
            let part = restrict_gender(&roster, g);
            let results = analyze_stratum(&part, PoolChoice::Stratum, &cfg)?;
            batches.push(Batch::build(tag, &results, &qcfg, args.alpha)?);
        }
    }
    let region_summary = match args.stratify {
        StratifyArg::Region => Some(region_sweep(&roster, &cfg, args.alpha)?),
        _ => None,
    };

    let mut provenance: BTreeMap<String, Value> = BTreeMap::new();
    provenance.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    provenance.insert("command".into(), json!("analyze"));
    provenance.insert("input".into(), input_provenance);
    provenance.insert("ingestion".into(), serde_json::to_value(&ingestion)?);
    provenance.insert("field".into(), json!(field_str(args.field)));
    provenance.insert("n_sims".into(), json!(cfg.n_sims));
    provenance.insert("min_group_size".into(), json!(cfg.min_group_size));
    provenance.insert("seed".into(), json!(cfg.seed));
    provenance.insert("p_floor".into(), json!(cfg.p_floor()));
    provenance.insert(
        "stratify".into(),
        json!(match args.stratify {
            StratifyArg::None => "none",
            StratifyArg::Region => "region",
            StratifyArg::MacroRegion => "macro-region",
        }),
    );
    if args.stratify == StratifyArg::MacroRegion {
        provenance.insert(
            "macro_map".into(),
            json!(args.macro_map.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "italy".into())),
        );
    }
    provenance.insert("pool".into(), json!("stratum"));
    provenance.insert("gender_split".into(), json!(args.gender_split));
    provenance
        .insert("filter_common".into(), json!(common.as_ref().map(|c| json!({ "file": c.label, "n_names": c.len() }))));
    provenance.insert("alpha".into(), json!(args.alpha));
    provenance.insert("qvalues".into(), serde_json::to_value(&qcfg)?);
    if args.timestamp {
        provenance.insert("timestamp_unix".into(), json!(timestamp()));
    }

    let report =
        AnalysisReport { kind: "analyze".into(), provenance, batches, common_proportion: common_share, region_summary };
    emit_analysis(&report, &args.out_dir, cfg.n_sims)?;
    if !args.quiet {
        print!("{}", report.render_table(cfg.n_sims));
    }
    Ok(report)
}

fn emit_analysis(report: &AnalysisReport, dir: &Path, n_sims: usize) -> CliResult<()> {
    write_json(&dir.join("report.json"), report)?;
    let all: Vec<&ReportRow> = report.batches.iter().flat_map(|b| &b.rows).collect();
    write_rows_csv(&all, create(&dir.join("report.csv"))?)?;
    for b in &report.batches {
        let rows: Vec<&ReportRow> = b.rows.iter().collect();
        write_rows_csv(&rows, create(&dir.join(stratum_file(&b.stratum)))?)?;
    }
    if let Some(summary) = &report.region_summary {
        let mut w = csv::Writer::from_writer(create(&dir.join("regions.csv"))?);
        w.write_record(["region", "group", "n_people", "n_distinct", "p", "low_p"])?;
        for c in &summary.cells {
            let p = c.result.p_hat.expect("sweep keeps tested cells only");
            w.write_record([
                c.region.clone(),
                c.result.group.clone(),
                c.result.n_people.to_string(),
                c.result.n_distinct.to_string(),
                p.to_string(),
                (p <= summary.alpha).to_string(),
            ])?;
        }
        w.flush()?;
    }
    let mut t = create(&dir.join("table.txt"))?;
    t.write_all(report.render_table(n_sims).as_bytes())?;
    t.flush()?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(path) => SynthConfig::parse(BufReader::new(open(path)?)).map_err(|e| match e {
            CoreError::Parse { row, message } => CoreError::InvalidConfig(format!("line {row}: {message}")),
            e => e,
        })?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    check_alpha(args.alpha)?;
    prepare_out_dir(&args.out_dir)?;

    let roster = generate(&cfg)?;
    write_roster(&roster, create(&args.out_dir.join("roster.csv"))?)?;
    let mut c = create(&args.out_dir.join("config.txt"))?;
    c.write_all(cfg.to_text().as_bytes())?;
    c.flush()?;

    if let Some(size) = args.common_names {
        let list = common_names(&cfg, size);
        let mut w = create(&args.out_dir.join("common_names.txt"))?;
        for n in &list.names {
            writeln!(w, "{n}")?;
        }
        w.flush()?;
    }

    if let Some(rho) = &args.rho {
        let power = PowerConfig {
            target_group: args.target.clone(),
            rho_grid: rho.clone(),
            n_trials: args.trials,
            test: TestConfig {
                n_sims: args.sims,
                min_group_size: args.min_size,
                seed: args.test_seed,
                workers: args.workers,
            },
            alpha: args.alpha,
            scope: match args.scope {
                ScopeArg::All => AnalysisScope::All,
                ScopeArg::Female => AnalysisScope::Female,
                ScopeArg::Male => AnalysisScope::Male,
            },
        };
        let curve = power_curve(&cfg, &power)?;
        let mut w = csv::Writer::from_writer(create(&args.out_dir.join("power.csv"))?);
        w.write_record(["rho", "detections", "n_trials", "rate", "std_error"])?;
        for p in &curve.points {
            w.write_record([
                p.rho.to_string(),
                p.detections.to_string(),
                p.n_trials.to_string(),
                p.rate.to_string(),
                p.std_error.to_string(),
            ])?;
        }
        w.flush()?;
        write_json(
            &args.out_dir.join("power.json"),
            &json!({ "generator": cfg.to_text(), "test": power.test, "curve": curve }),
        )?;
    }
    Ok(())
}

/// `(group, p)` pairs from a CSV with `group` and `p` columns. Rows with an
/// empty `p` (untested groups) are skipped; a `stratum` column, when
/// present, selects rows of `stratum` only.
fn read_pvalues(path: &Path, stratum: Option<&str>) -> CliResult<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CoreError::Schema(format!("missing column `{name}`")))
    };
    let g = col("group")?;
    let p = col("p")?;
    let s = headers.iter().position(|h| h.trim() == "stratum");
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if let (Some(s), Some(want)) = (s, stratum) {
            if rec.get(s).map(str::trim) != Some(want) {
                continue;
            }
        }
        let raw = rec.get(p).unwrap_or("").trim();
        if raw.is_empty() {
            continue;
        }
        let value: f64 =
            raw.parse().map_err(|_| CoreError::Parse { row: i + 2, message: format!("bad p-value `{raw}`") })?;
        out.push((rec.get(g).unwrap_or("").trim().to_string(), value));
    }
    Ok(out)
}

pub fn qvalues_cmd(args: &QvaluesArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    let pairs = read_pvalues(&args.input, args.stratum.as_deref())?;
    let cfg = q_config(&args.q);
    let mut report = qvalues(&pairs, &cfg)?;
    for e in &mut report.entries {
        e.highly_significant = e.p <= args.alpha && e.q <= args.alpha;
    }
    prepare_out_dir(&args.out_dir)?;
    let mut w = csv::Writer::from_writer(create(&args.out_dir.join("qvalues.csv"))?);
    w.write_record(["group", "p", "q", "highly_significant"])?;
    for e in &report.entries {
        w.write_record([e.group.clone(), e.p.to_string(), e.q.to_string(), e.highly_significant.to_string()])?;
    }
    w.flush()?;
    write_json(
        &args.out_dir.join("qvalues.json"),
        &json!({ "input": args.input.display().to_string(), "alpha": args.alpha, "config": cfg, "report": report }),
    )?;
    Ok(())
}

pub fn diagnose(args: &DiagnoseArgs) -> CliResult<Option<LogitFit>> {
    if args.top == 0 {
        return Err(CliError::Usage("--top must be at least 1".into()));
    }
    prepare_out_dir(&args.out_dir)?;
    let (roster, _, _) = load_roster(&args.input, field(args.field))?;

    let mut w = csv::Writer::from_writer(create(&args.out_dir.join("top_names.csv"))?);
    w.write_record(["scope", "rank", "name", "count", "total", "distinct"])?;
    let whole = name_frequencies(&roster, FrequencyScope::Whole, args.top)?;
    let groups = name_frequencies(&roster, FrequencyScope::PerGroup, args.top)?;
    for s in whole.scopes.iter().chain(&groups.scopes) {
        let scope = s.group.clone().unwrap_or_else(|| "*".into());
        for (rank, (name, count)) in s.top.iter().enumerate() {
            w.write_record([
                scope.clone(),
                (rank + 1).to_string(),
                name.clone(),
                count.to_string(),
                s.total.to_string(),
                s.distinct.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let women = women_fraction(&roster);
    let mut w = csv::Writer::from_writer(create(&args.out_dir.join("women_fraction.csv"))?);
    w.write_record(["group", "female", "male", "unknown", "fraction"])?;
    for (g, f) in &women {
        w.write_record([
            g.clone(),
            f.female.to_string(),
            f.male.to_string(),
            f.unknown.to_string(),
            f.fraction.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let Some(path) = &args.pvalues else { return Ok(None) };
    let mut groups = Vec::new();
    let mut points = Vec::new();
    for (g, p) in read_pvalues(path, Some(&args.stratum))? {
        if let Some(x) = women.get(&g).and_then(|w| w.fraction) {
            groups.push(g);
            points.push((x, p));
        }
    }
    let fit = logit_regression(&points, args.clamp)?;
    let mut w = csv::Writer::from_writer(create(&args.out_dir.join("logit_points.csv"))?);
    w.write_record(["group", "women_fraction", "p", "logit", "clamped"])?;
    for (g, pt) in groups.iter().zip(&fit.points) {
        let clamped = pt.p < args.clamp || pt.p > 1.0 - args.clamp;
        w.write_record([
            g.clone(),
            pt.covariate.to_string(),
            pt.p.to_string(),
            pt.logit.to_string(),
            clamped.to_string(),
        ])?;
    }
    w.flush()?;
    write_json(
        &args.out_dir.join("logit_fit.json"),
        &json!({
            "pvalues": path.display().to_string(),
            "stratum": args.stratum,
            "covariate": "women_fraction",
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "clamp_epsilon": fit.clamp_epsilon,
            "n_points": fit.points.len(),
            "n_clamped": fit.points.iter().filter(|p| p.p < args.clamp || p.p > 1.0 - args.clamp).count(),
        }),
    )?;
    Ok(Some(fit))
}
