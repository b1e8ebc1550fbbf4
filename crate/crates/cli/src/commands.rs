use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fareval::corpus::{
    dataset_stats, filter_by_category, load_dataset, load_summary_texts, load_system_output, parse_categories,
    write_dataset,
};
use fareval::experiments::{
    autofar, bench_labeler, bench_machine, breakdown, breakdown_columns, correlate_far, BreakdownMetric,
    CorrelationResult, SystemSummaries,
};
use fareval::labelers::{label_dataset, LabelerConfig, Strategy};
use fareval::metrics::{evaluate_system, lead_k, oracle_extract, EvalOptions, ScoreReport, AGGREGATE_KEYS};
use fareval::similarity::SimilarityMeasure;
use fareval::stats::{human_rank_agreement, Correlations, StatsError};
use fareval::{Sample, SampleCategory, SystemOutput};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::table::{Cell, Report, Table};
use crate::{AutofarArgs, BenchArgs, BreakdownArgs, Command, CorrelateArgs, EvalArgs, Global, LabelArgs, TfIdfArg};

/// Rendered primary output plus any side files a command writes.
pub struct Output {
    pub text: String,
    pub metric_failure: bool,
    pub extra_files: Vec<(PathBuf, String)>,
}

impl Output {
    fn report(report: Report, global: &Global) -> Self {
        Output {
            text: report.render(global.format),
            metric_failure: report.metric_failure,
            extra_files: Vec::new(),
        }
    }
}

const DEFAULT_BENCH_LABELERS: &str = "lead-3,greedy-rouge1,tfidf@1,rouge1-f1@1,rouge2-f1@1,\
rougel-recall@1,rougel-precision@1,rougel-f1@1,rouge-avg-f1@1";

pub fn execute(global: &Global, command: Command) -> Result<Output> {
    match command {
        Command::Eval(args) => eval(global, &args),
        Command::Label(args) => label(global, &args),
        Command::BenchLabelers(args) => bench(global, &args).map(|r| Output::report(r, global)),
        Command::Correlate(args) => correlate(global, &args).map(|r| Output::report(r, global)),
        Command::Autofar(args) => run_autofar(global, &args).map(|r| Output::report(r, global)),
        Command::Breakdown(args) => run_breakdown(global, &args).map(|r| Output::report(r, global)),
        Command::Stats => stats(global).map(|r| Output::report(r, global)),
        Command::Convert(args) => {
            let samples = crate::convert::convert(&args)?;
            Ok(Output {
                text: dataset_text(&samples)?,
                metric_failure: false,
                extra_files: Vec::new(),
            })
        }
    }
}

fn load_full(global: &Global) -> Result<Vec<Sample>> {
    let path = global.fams.as_deref().ok_or_else(|| anyhow!("--fams PATH is required"))?;
    load_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn categories(global: &Global) -> Result<BTreeSet<SampleCategory>> {
    match &global.categories {
        Some(spec) => parse_categories(spec).map_err(|e| anyhow!("--categories: {e}")),
        None => Ok(SampleCategory::ALL.into_iter().collect()),
    }
}

fn category_label(cats: &BTreeSet<SampleCategory>) -> String {
    cats.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Samples of the requested categories; an empty selection is an input error.
fn select(global: &Global, full: &[Sample]) -> Result<(Vec<Sample>, String)> {
    let cats = categories(global)?;
    let label = category_label(&cats);
    let data = filter_by_category(full, &cats);
    if data.is_empty() {
        bail!("no samples in categories {label:?}");
    }
    Ok((data, label))
}

fn load_systems(
    named: &[(String, PathBuf)],
    dataset: &[Sample],
    truncate: Option<usize>,
) -> Result<Vec<SystemOutput>> {
    let mut seen = BTreeSet::new();
    named
        .iter()
        .map(|(name, path)| {
            if !seen.insert(name.as_str()) {
                bail!("system name {name:?} given twice");
            }
            let output = load_system_output(path, name, dataset)
                .with_context(|| format!("reading system {name} from {}", path.display()))?;
            Ok(match truncate {
                Some(k) => output.truncated(k),
                None => output,
            })
        })
        .collect()
}

fn load_machine(path: &Path) -> Result<Vec<Sample>> {
    load_dataset(path).with_context(|| format!("reading machine mappings {}", path.display()))
}

fn dataset_text(samples: &[Sample]) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset(&mut buf, samples)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Parses `greedy-rouge1`, `lead`, `lead-K`, `measure` or `measure@N`.
fn parse_labeler(spec: &str, default_top_n: usize, global: &Global, tfidf: TfIdfArg) -> Result<LabelerConfig> {
    let spec = spec.trim();
    let strategy = if spec == "greedy-rouge1" || spec == "greedy" {
        Strategy::GreedyRouge1
    } else if let Some(rest) = spec.strip_prefix("lead") {
        let k = match rest.strip_prefix('-') {
            Some(k) => k.parse().map_err(|_| anyhow!("bad lead size in {spec:?}"))?,
            None if rest.is_empty() => global.k.unwrap_or(3),
            None => bail!("unknown labeler {spec:?}"),
        };
        Strategy::LeadK { k }
    } else {
        let (measure, top_n) = match spec.split_once('@') {
            Some((m, n)) => (m, n.parse().map_err(|_| anyhow!("bad group count in {spec:?}"))?),
            None => (spec, default_top_n),
        };
        Strategy::PerFacetTopN {
            measure: measure.parse::<SimilarityMeasure>()?,
            top_n,
        }
    };
    let config = LabelerConfig {
        strategy,
        stemming: global.stemming,
        tfidf_scope: tfidf.tfidf_scope,
    };
    config.validate()?;
    Ok(config)
}

fn parse_labelers(list: &str, global: &Global, tfidf: TfIdfArg) -> Result<Vec<LabelerConfig>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_labeler(s, 1, global, tfidf))
        .collect()
}

fn pct(v: f64) -> Cell {
    Cell::Ratio(Some(v))
}

fn correlation_cells(result: &Result<Correlations, StatsError>) -> [Cell; 3] {
    match result {
        Ok(c) => [pct(c.pearson), pct(c.spearman), pct(c.kendall)],
        Err(_) => [Cell::Ratio(None), Cell::Ratio(None), Cell::Ratio(None)],
    }
}

fn correlation_json(result: &Result<Correlations, StatsError>) -> Value {
    match result {
        Ok(c) => json!(c),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn eval(global: &Global, args: &EvalArgs) -> Result<Output> {
    let full = load_full(global)?;
    let mut systems = load_systems(&global.systems, &full, global.k)?;
    let (data, cats) = select(global, &full)?;
    let mut k_labels: Vec<String> = systems
        .iter()
        .map(|_| global.k.map_or("-".to_string(), |k| k.to_string()))
        .collect();
    if let Some(k) = args.lead {
        if k == 0 {
            bail!("--lead needs k >= 1");
        }
        systems.push(SystemOutput::from_fn(format!("lead-{k}"), &data, |s| {
            lead_k(s, k).into_iter().collect()
        }));
        k_labels.push(k.to_string());
    }
    if args.oracle {
        let k = global.k.unwrap_or(3);
        let extractions = data
            .par_iter()
            .map(|s| (s.id.clone(), oracle_extract(s, k, global.scope).0.into_iter().collect()))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        systems.push(SystemOutput {
            system_name: "oracle".into(),
            extractions,
        });
        k_labels.push(k.to_string());
    }
    if systems.is_empty() {
        bail!("nothing to evaluate: pass --system, --lead or --oracle");
    }

    let options = EvalOptions {
        scope: global.scope,
        stemming: global.stemming,
        normalize_far: args.length_normalized,
    };
    let reports = systems
        .iter()
        .map(|s| evaluate_system(&data, s, &options).with_context(|| format!("evaluating {}", s.system_name)))
        .collect::<Result<Vec<ScoreReport>>>()?;

    let mut columns = vec!["system", "categories", "scope", "k", "samples"];
    columns.extend(AGGREGATE_KEYS);
    let mut table = Table::new(&columns);
    for (report, k) in reports.iter().zip(&k_labels) {
        let mut row = vec![
            Cell::text(&report.system),
            Cell::text(&cats),
            Cell::text(global.scope.to_string()),
            Cell::text(k),
            Cell::Count(report.samples),
        ];
        row.extend(AGGREGATE_KEYS.iter().map(|key| Cell::Ratio(report.aggregate.get(*key).copied())));
        table.push(row);
    }
    let mut tables = vec![table];
    let mut doc = json!({
        "command": "eval",
        "categories": cats,
        "scope": global.scope.to_string(),
        "k": global.k,
        "stemming": global.stemming,
        "length_normalized": args.length_normalized,
        "systems": reports,
    });

    let mut metric_failure = false;
    if let Some(path) = &args.human {
        let ranks = load_human_ranks(path)?;
        let (human_table, human_json, failed) = human_agreement(&reports, &ranks);
        tables.push(human_table);
        doc["human_agreement"] = human_json;
        metric_failure |= failed;
    }

    let mut output = Output::report(
        Report {
            tables,
            json: doc,
            metric_failure,
        },
        global,
    );
    if let Some(path) = &args.per_sample {
        output.extra_files.push((path.clone(), per_sample_table(&data, &reports).to_tsv()));
    }
    Ok(output)
}

fn per_sample_table(data: &[Sample], reports: &[ScoreReport]) -> Table {
    let mut table = Table::new(&[
        "system",
        "id",
        "category",
        "extracted",
        "far",
        "sar",
        "covered_facets",
        "scoped_facets",
        "support_hit",
        "support_total",
        "redundant",
        "rouge1_f1",
        "rouge2_f1",
        "rougeL_f1",
    ]);
    for report in reports {
        for sample in data {
            let s = &report.per_sample[&sample.id];
            let c = &s.coverage;
            table.push(vec![
                Cell::text(&report.system),
                Cell::text(&sample.id),
                Cell::text(sample.category().to_string()),
                Cell::Count(s.extracted),
                Cell::Value(Some(c.far)),
                Cell::Value(c.sar),
                Cell::Count(c.covered_facets),
                Cell::Count(c.scoped_facets),
                Cell::Count(c.support_hit),
                Cell::Count(c.support_total),
                Cell::Count(usize::from(c.redundant)),
                Cell::Value(Some(s.rouge.rouge1.f1)),
                Cell::Value(Some(s.rouge.rouge2.f1)),
                Cell::Value(Some(s.rouge.rouge_l.f1)),
            ]);
        }
    }
    table
}

#[derive(Deserialize)]
struct HumanRecord {
    id: String,
    ranks: BTreeMap<String, u32>,
}

type Ranks = BTreeMap<String, BTreeMap<String, u32>>;

fn load_human_ranks(path: &Path) -> Result<Ranks> {
    let file = File::open(path).with_context(|| format!("reading human rankings {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading human rankings {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: HumanRecord = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}: bad ranking record", path.display(), i + 1))?;
        if out.insert(record.id.clone(), record.ranks).is_some() {
            bail!("{}: duplicate ranking for sample {}", path.display(), record.id);
        }
    }
    Ok(out)
}

/// Spearman agreement with human rankings and rank-position proportions,
/// for FAR and each ROUGE F1.
fn human_agreement(reports: &[ScoreReport], ranks: &Ranks) -> (Table, Value, bool) {
    type Getter = fn(&fareval::metrics::SampleScore) -> f64;
    let metrics: [(&str, Getter); 4] = [
        ("far", |s| s.coverage.far),
        ("rouge1_f1", |s| s.rouge.rouge1.f1),
        ("rouge2_f1", |s| s.rouge.rouge2.f1),
        ("rougeL_f1", |s| s.rouge.rouge_l.f1),
    ];
    let width = ranks.values().map(BTreeMap::len).max().unwrap_or(0);
    let mut columns = vec!["metric".to_string(), "system".into(), "samples_used".into()];
    columns.extend(["samples_tied".into(), "mean_spearman".into()]);
    columns.extend((1..=width).map(|i| format!("rank_{i}")));
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    let mut doc = serde_json::Map::new();
    let mut failed = false;
    for (name, get) in metrics {
        let mut scores: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for report in reports {
            for (id, s) in &report.per_sample {
                scores.entry(id.clone()).or_default().insert(report.system.clone(), get(s));
            }
        }
        match human_rank_agreement(&scores, ranks) {
            Ok(agreement) => {
                for (system, props) in &agreement.rank_proportions {
                    let mut row = vec![
                        Cell::text(name),
                        Cell::text(system),
                        Cell::Count(agreement.samples_used),
                        Cell::Count(agreement.samples_tied),
                        pct(agreement.mean_spearman),
                    ];
                    row.extend((0..width).map(|i| Cell::Ratio(props.get(i).copied())));
                    table.rows.push(row);
                }
                doc.insert(name.into(), json!(agreement));
            }
            Err(e) => {
                failed = true;
                let mut row = vec![Cell::text(name), Cell::text("-"), Cell::Count(0), Cell::Count(0)];
                row.push(Cell::Ratio(None));
                row.extend((0..width).map(|_| Cell::Ratio(None)));
                table.rows.push(row);
                doc.insert(name.into(), json!({ "error": e.to_string() }));
            }
        }
    }
    (table, Value::Object(doc), failed)
}

fn label(global: &Global, args: &LabelArgs) -> Result<Output> {
    let config = parse_labeler(&args.method, args.topn, global, args.tfidf)?;
    let full = load_full(global)?;
    let (data, _) = select(global, &full)?;
    let labeled = label_dataset(&data, &config)?;
    Ok(Output {
        text: dataset_text(&labeled)?,
        metric_failure: false,
        extra_files: Vec::new(),
    })
}

fn bench(global: &Global, args: &BenchArgs) -> Result<Report> {
    let labelers = parse_labelers(args.labelers.as_deref().unwrap_or(DEFAULT_BENCH_LABELERS), global, args.tfidf)?;
    let full = load_full(global)?;
    let (data, cats) = select(global, &full)?;
    let mut table = Table::new(&["labeler", "categories", "samples", "precision", "recall", "f1"]);
    let mut rows = Vec::new();
    let mut push = |name: String, prf: fareval::metrics::Prf| {
        table.push(vec![
            Cell::text(&name),
            Cell::text(&cats),
            Cell::Count(data.len()),
            pct(prf.precision),
            pct(prf.recall),
            pct(prf.f1),
        ]);
        rows.push(json!({ "labeler": name, "precision": prf.precision, "recall": prf.recall, "f1": prf.f1 }));
    };
    for config in &labelers {
        let prf = bench_labeler(&data, config).with_context(|| format!("labeler {}", config.name()))?;
        push(config.name(), prf);
    }
    for (name, path) in &args.machines {
        let machine = load_machine(path)?;
        let prf = bench_machine(&data, &machine).with_context(|| format!("machine mappings {name}"))?;
        push(name.clone(), prf);
    }
    let doc = json!({ "command": "bench-labelers", "categories": cats, "samples": data.len(), "labelers": rows });
    Ok(Report::new(vec![table], doc))
}

/// Expands bare measures over every group count; explicit `@N`,
/// greedy and lead labelers are kept as given.
fn expand_correlate_labelers(args: &CorrelateArgs, global: &Global) -> Result<Vec<LabelerConfig>> {
    let mut out = Vec::new();
    for item in args.labelers.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !item.contains('@') && item.parse::<SimilarityMeasure>().is_ok() {
            for n in &args.groups {
                out.push(parse_labeler(&format!("{item}@{n}"), 1, global, args.tfidf)?);
            }
        } else {
            out.push(parse_labeler(item, 1, global, args.tfidf)?);
        }
    }
    Ok(out)
}

fn correlate(global: &Global, args: &CorrelateArgs) -> Result<Report> {
    let labelers = expand_correlate_labelers(args, global)?;
    let full = load_full(global)?;
    let systems = load_systems(&global.systems, &full, global.k)?;
    if systems.len() < 2 {
        bail!("correlate needs at least two --system outputs");
    }
    let (data, cats) = select(global, &full)?;

    let mut results: Vec<(String, CorrelationResult)> = Vec::new();
    for config in &labelers {
        let machine = label_dataset(&data, config)?;
        let result = correlate_far(&data, &machine, &systems, global.scope)
            .with_context(|| format!("labeler {}", config.name()))?;
        results.push((config.name(), result));
    }
    for (name, path) in &args.machines {
        let machine = load_machine(path)?;
        let result = correlate_far(&data, &machine, &systems, global.scope)
            .with_context(|| format!("machine mappings {name}"))?;
        results.push((name.clone(), result));
    }

    let mut table = Table::new(&[
        "estimator",
        "categories",
        "scope",
        "level",
        "points",
        "pearson",
        "spearman",
        "kendall",
    ]);
    let mut per_system = Table::new(&["estimator", "system", "categories", "scope", "gold_far", "estimated_far"]);
    let mut entries = Vec::new();
    let mut failed = false;
    for (name, result) in &results {
        let levels = [
            ("system", systems.len(), &result.system_level),
            ("sample", systems.len() * data.len(), &result.sample_level),
        ];
        for (level, points, corr) in levels {
            failed |= corr.is_err();
            let mut row = vec![
                Cell::text(name),
                Cell::text(&cats),
                Cell::text(global.scope.to_string()),
                Cell::text(level),
                Cell::Count(points),
            ];
            row.extend(correlation_cells(corr));
            table.push(row);
        }
        for s in &result.systems {
            per_system.push(vec![
                Cell::text(name),
                Cell::text(&s.system),
                Cell::text(&cats),
                Cell::text(global.scope.to_string()),
                pct(s.gold_far),
                pct(s.estimated_far),
            ]);
        }
        entries.push(json!({
            "estimator": name,
            "systems": result.systems,
            "system_level": correlation_json(&result.system_level),
            "sample_level": correlation_json(&result.sample_level),
        }));
    }
    let doc = json!({
        "command": "correlate",
        "categories": cats,
        "scope": global.scope.to_string(),
        "samples": data.len(),
        "estimators": entries,
    });
    Ok(Report {
        tables: vec![table, per_system],
        json: doc,
        metric_failure: failed,
    })
}

fn run_autofar(global: &Global, args: &AutofarArgs) -> Result<Report> {
    let labelers = parse_labelers(&args.labelers, global, args.tfidf)?;
    if labelers.is_empty() {
        bail!("--labelers must name at least one labeler");
    }
    let full = load_full(global)?;
    let systems = load_systems(&global.systems, &full, global.k)?;
    if systems.is_empty() {
        bail!("autofar needs at least one --system output");
    }
    let (data, cats) = select(global, &full)?;
    let predict = match &args.predict {
        Some(path) => {
            let samples =
                load_dataset(path).with_context(|| format!("reading prediction dataset {}", path.display()))?;
            let outputs = load_systems(&args.predict_systems, &samples, global.k)?;
            Some((samples, outputs))
        }
        None => None,
    };
    let report = autofar(
        &data,
        &systems,
        predict.as_ref().map(|(s, o)| (s.as_slice(), o.as_slice())),
        &labelers,
        global.scope,
    )?;

    let names = report.labelers.join(",");
    let mut table = Table::new(&["system", "categories", "scope", "labelers", "far", "autofar", "autofar_l"]);
    for s in &report.systems {
        table.push(vec![
            Cell::text(&s.system),
            Cell::text(&cats),
            Cell::text(global.scope.to_string()),
            Cell::text(&names),
            pct(s.far),
            pct(s.autofar),
            Cell::Ratio(s.autofar_l),
        ]);
    }
    let mut fit = Table::new(&["comparison", "categories", "scope", "pearson", "spearman", "kendall"]);
    let mut failed = report.far_vs_autofar.is_err();
    let mut comparisons = vec![("far-vs-autofar", &report.far_vs_autofar)];
    if let Some(l) = &report.far_vs_autofar_l {
        failed |= l.is_err();
        comparisons.push(("far-vs-autofar-l", l));
    }
    for (name, corr) in comparisons {
        let mut row = vec![Cell::text(name), Cell::text(&cats), Cell::text(global.scope.to_string())];
        row.extend(correlation_cells(corr));
        fit.push(row);
    }
    let mut model = Table::new(&["term", "coefficient"]);
    model.push(vec![Cell::text("intercept"), Cell::Value(Some(report.model.intercept))]);
    for (name, c) in report.labelers.iter().zip(&report.model.coefficients) {
        model.push(vec![Cell::text(name), Cell::Value(Some(*c))]);
    }
    let doc = json!({
        "command": "autofar",
        "categories": cats,
        "scope": global.scope.to_string(),
        "labelers": report.labelers,
        "training_points": report.training_points,
        "model": report.model,
        "systems": report.systems,
        "far_vs_autofar": correlation_json(&report.far_vs_autofar),
        "far_vs_autofar_l": report.far_vs_autofar_l.as_ref().map(correlation_json),
    });
    Ok(Report {
        tables: vec![table, fit, model],
        json: doc,
        metric_failure: failed,
    })
}

fn run_breakdown(global: &Global, args: &BreakdownArgs) -> Result<Report> {
    let metric: BreakdownMetric = args.metric.parse().map_err(|e: String| anyhow!(e))?;
    let full = load_full(global)?;
    let mut systems: Vec<SystemSummaries> = load_systems(&global.systems, &full, global.k)?
        .into_iter()
        .map(SystemSummaries::Extractive)
        .collect();
    let (data, cats) = select(global, &full)?;
    if let Some(k) = args.lead {
        if k == 0 {
            bail!("--lead needs k >= 1");
        }
        systems.push(SystemSummaries::Extractive(SystemOutput::from_fn(
            format!("lead-{k}"),
            &data,
            |s| lead_k(s, k).into_iter().collect(),
        )));
    }
    for (name, path) in &args.abstractive {
        let texts =
            load_summary_texts(path, &full).with_context(|| format!("reading system {name} from {}", path.display()))?;
        systems.push(SystemSummaries::Abstractive {
            name: name.clone(),
            texts,
        });
    }
    if systems.is_empty() {
        bail!("nothing to break down: pass --system, --abstractive or --lead");
    }
    let rows = breakdown(&data, &systems, metric, global.scope, global.stemming)?;

    let column_names: Vec<String> = breakdown_columns().into_iter().map(|(n, _)| n).collect();
    let mut columns = vec!["system".to_string(), "metric".into(), "categories".into(), "scope".into()];
    columns.extend(column_names.iter().cloned());
    columns.extend(column_names.iter().map(|n| format!("samples_{n}")));
    let mut table = Table {
        columns,
        rows: Vec::new(),
    };
    for row in &rows {
        let mut cells = vec![
            Cell::text(&row.system),
            Cell::text(metric.name()),
            Cell::text(&cats),
            Cell::text(global.scope.to_string()),
        ];
        cells.extend(column_names.iter().map(|n| Cell::Ratio(row.cells[n].map(|c| c.0))));
        cells.extend(column_names.iter().map(|n| Cell::Count(row.cells[n].map_or(0, |c| c.1))));
        table.rows.push(cells);
    }
    let doc = json!({
        "command": "breakdown",
        "metric": metric.name(),
        "categories": cats,
        "scope": global.scope.to_string(),
        "rows": rows,
    });
    Ok(Report::new(vec![table], doc))
}

fn stats(global: &Global) -> Result<Report> {
    let full = load_full(global)?;
    let (data, cats) = select(global, &full)?;
    let st = dataset_stats(&data)?;
    let mut table = Table::new(&["statistic", "categories", "value"]);
    let mut count = |name: String, n: usize| table.push(vec![Cell::text(name), Cell::text(&cats), Cell::Count(n)]);
    count("samples".into(), st.sample_count);
    for (c, n) in &st.samples_per_category {
        count(format!("samples_{c}"), *n);
    }
    count("facets".into(), st.facet_count);
    for (c, n) in &st.facets_per_category {
        count(format!("facets_{c}"), *n);
    }
    for (c, n) in &st.facets_per_sample_category {
        count(format!("facets_in_{c}_samples"), *n);
    }
    count("non_empty_fams".into(), st.non_empty_fams);
    for (size, n) in &st.rounded_mean_support_histogram {
        count(format!("facets_with_mean_group_size_{size}"), *n);
    }
    for (name, v) in [
        ("avg_support_sentences_unique", st.avg_support_sentences_unique),
        ("avg_support_sentences_nonunique", st.avg_support_sentences_nonunique),
        ("avg_groups_per_facet", st.avg_groups_per_facet),
    ] {
        table.push(vec![Cell::text(name), Cell::text(&cats), Cell::Value(Some(v))]);
    }
    let doc = json!({ "command": "stats", "categories": cats, "stats": st });
    Ok(Report::new(vec![table], doc))
}
