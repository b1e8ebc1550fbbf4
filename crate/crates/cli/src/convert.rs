//! Maps annotation files that use other field names, 1-based indices or
//! looser shapes onto the canonical dataset records.
//!
//! | canonical           | flag               | accepted values                                |
//! |---------------------|--------------------|------------------------------------------------|
//! | `id`                | `--id-key`         | string or integer                              |
//! | `document`          | `--document-key`   | list of sentences, or one newline-joined text  |
//! | `reference`         | `--reference-key`  | same as `document`                             |
//! | `fams`              | `--fams-key`       | per facet, a list of groups; a group is an     |
//! |                     |                    | index list or a bare index (singleton)         |
//! | `facet_categories`  | `--categories-key` | optional; noise/low/high, or n/l/h             |

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use fareval::corpus::{DatasetRecord, FacetCategory};
use fareval::Sample;
use serde_json::Value;

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Annotation file, one JSON object per line.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value = "id")]
    pub id_key: String,
    #[arg(long, default_value = "document")]
    pub document_key: String,
    #[arg(long, default_value = "reference")]
    pub reference_key: String,
    #[arg(long, default_value = "fams")]
    pub fams_key: String,
    #[arg(long, default_value = "facet_categories")]
    pub categories_key: String,
    /// Source indices start at 1.
    #[arg(long)]
    pub one_based: bool,
}

fn sentences(value: &Value) -> Result<Vec<String>> {
    match value {
        Value::String(s) => Ok(s.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()),
        Value::Array(items) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| anyhow!("sentence is not a string")))
            .collect(),
        _ => bail!("expected a list of sentences or a text"),
    }
}

fn index(value: &Value, one_based: bool) -> Result<usize> {
    let raw = value.as_u64().ok_or_else(|| anyhow!("index {value} is not a non-negative integer"))?;
    let raw = usize::try_from(raw)?;
    if one_based {
        raw.checked_sub(1).ok_or_else(|| anyhow!("index 0 in a 1-based file"))
    } else {
        Ok(raw)
    }
}

fn fams(value: &Value, one_based: bool) -> Result<Vec<Vec<Vec<usize>>>> {
    let facets = value.as_array().ok_or_else(|| anyhow!("mappings must be a list per facet"))?;
    facets
        .iter()
        .map(|facet| {
            let groups = facet.as_array().ok_or_else(|| anyhow!("a facet's groups must be a list"))?;
            groups
                .iter()
                .map(|g| match g {
                    Value::Array(ix) => ix.iter().map(|i| index(i, one_based)).collect(),
                    other => Ok(vec![index(other, one_based)?]),
                })
                .collect()
        })
        .collect()
}

fn category(value: &Value) -> Result<FacetCategory> {
    let s = value.as_str().ok_or_else(|| anyhow!("facet category {value} is not a string"))?;
    match s.trim().to_ascii_lowercase().as_str() {
        "noise" | "noisy" | "n" => Ok(FacetCategory::Noise),
        "low" | "l" | "low abstraction" => Ok(FacetCategory::Low),
        "high" | "h" | "high abstraction" => Ok(FacetCategory::High),
        other => bail!("unknown facet category {other:?}"),
    }
}

fn convert_record(obj: &Value, args: &ConvertArgs) -> Result<Sample> {
    let field = |key: &str| obj.get(key).ok_or_else(|| anyhow!("missing field {key:?}"));
    let id = match field(&args.id_key)? {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => bail!("id {other} is neither text nor a number"),
    };
    let context = |what: &str| format!("sample {id}: {what}");
    let record = DatasetRecord {
        document: sentences(field(&args.document_key)?).with_context(|| context("document"))?,
        reference: sentences(field(&args.reference_key)?).with_context(|| context("reference"))?,
        fams: fams(field(&args.fams_key)?, args.one_based).with_context(|| context("mappings"))?,
        facet_categories: match obj.get(&args.categories_key) {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(category)
                    .collect::<Result<_>>()
                    .with_context(|| context("categories"))?,
            ),
            Some(_) => bail!(context("categories must be a list")),
        },
        id: id.clone(),
    };
    Ok(record.into_sample()?)
}

pub fn convert(args: &ConvertArgs) -> Result<Vec<Sample>> {
    let path = &args.input;
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{} line {}", path.display(), i + 1);
        let obj: Value = serde_json::from_str(&line).with_context(at)?;
        let sample = convert_record(&obj, args).with_context(at)?;
        if !seen.insert(sample.id.clone()) {
            bail!("{}: duplicate sample id {}", at(), sample.id);
        }
        out.push(sample);
    }
    Ok(out)
}
