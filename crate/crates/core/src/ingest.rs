//! Regional trade ingestion.
//!
//! Raw CSV rows of `(geography, product, value_imp, value_exp, year)` are
//! pooled over years into one record per `(geography, product)`, cleaned of
//! excluded or small regions, and reconciled so that every remaining product
//! is both exported and imported somewhere.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names used to locate the required fields in an input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub geography: String,
    pub product: String,
    pub value_imp: String,
    pub value_exp: String,
    /// `None` for inputs that are already pooled over years.
    pub year: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            geography: "geography".into(),
            product: "product".into(),
            value_imp: "value_imp".into(),
            value_exp: "value_exp".into(),
            year: Some("year".into()),
        }
    }
}

impl ColumnMapping {
    /// Mapping for the pooled table written by [`TradeTable::write_csv`].
    pub fn canonical() -> Self {
        Self {
            year: None,
            ..Self::default()
        }
    }

    fn expected(&self) -> String {
        let mut cols = vec![
            self.geography.as_str(),
            self.product.as_str(),
            self.value_imp.as_str(),
            self.value_exp.as_str(),
        ];
        if let Some(year) = &self.year {
            cols.push(year);
        }
        cols.join(", ")
    }
}

/// One parsed input row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTradeRecord {
    pub geography: String,
    pub product: String,
    pub value_imp: f64,
    pub value_exp: f64,
    pub year: Option<i32>,
}

/// Pooled trade of one geography in one product, in USD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub geography: String,
    pub product: String,
    pub value_imp: f64,
    pub value_exp: f64,
}

/// Canonical trade table: one record per `(geography, product)` plus
/// per-geography and per-product totals.
///
/// Records are kept sorted by `(geography, product)` and every total is
/// recomputed from them, so two tables built from the same multiset of rows
/// compare equal regardless of row order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TradeTable {
    records: Vec<TradeRecord>,
    geography_exp: BTreeMap<String, f64>,
    geography_imp: BTreeMap<String, f64>,
    product_exp: BTreeMap<String, f64>,
    product_imp: BTreeMap<String, f64>,
}

/// Sums in ascending order so the result does not depend on input order.
pub(crate) fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

impl TradeTable {
    /// Aggregates records by `(geography, product)`, summing duplicates.
    pub fn from_records<I>(records: I) -> Self
    where
        I: IntoIterator<Item = TradeRecord>,
    {
        let mut pooled: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for r in records {
            let slot = pooled.entry((r.geography, r.product)).or_default();
            slot.0.push(r.value_imp);
            slot.1.push(r.value_exp);
        }
        let records = pooled
            .into_iter()
            .map(|((geography, product), (mut imp, mut exp))| TradeRecord {
                geography,
                product,
                value_imp: ordered_sum(&mut imp),
                value_exp: ordered_sum(&mut exp),
            })
            .collect();
        Self::from_sorted(records)
    }

    fn from_sorted(records: Vec<TradeRecord>) -> Self {
        let mut geography_exp = BTreeMap::new();
        let mut geography_imp = BTreeMap::new();
        let mut product_exp = BTreeMap::new();
        let mut product_imp = BTreeMap::new();
        for r in &records {
            *geography_exp.entry(r.geography.clone()).or_insert(0.0) += r.value_exp;
            *geography_imp.entry(r.geography.clone()).or_insert(0.0) += r.value_imp;
            *product_exp.entry(r.product.clone()).or_insert(0.0) += r.value_exp;
            *product_imp.entry(r.product.clone()).or_insert(0.0) += r.value_imp;
        }
        Self {
            records,
            geography_exp,
            geography_imp,
            product_exp,
            product_imp,
        }
    }

    /// Pools several tables (e.g. one per input file) into one.
    pub fn merge<I>(tables: I) -> Self
    where
        I: IntoIterator<Item = TradeTable>,
    {
        Self::from_records(tables.into_iter().flat_map(|t| t.records))
    }

    pub fn records(&self) -> &[TradeRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn geography_exp(&self) -> &BTreeMap<String, f64> {
        &self.geography_exp
    }

    pub fn geography_imp(&self) -> &BTreeMap<String, f64> {
        &self.geography_imp
    }

    pub fn product_exp(&self) -> &BTreeMap<String, f64> {
        &self.product_exp
    }

    pub fn product_imp(&self) -> &BTreeMap<String, f64> {
        &self.product_imp
    }

    pub fn geographies(&self) -> impl Iterator<Item = &str> {
        self.geography_exp.keys().map(String::as_str)
    }

    pub fn products(&self) -> impl Iterator<Item = &str> {
        self.product_exp.keys().map(String::as_str)
    }

    pub fn total_exp(&self) -> f64 {
        self.geography_exp.values().sum()
    }

    pub fn total_imp(&self) -> f64 {
        self.geography_imp.values().sum()
    }

    fn retain<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(&TradeRecord) -> bool,
    {
        Self::from_sorted(self.records.iter().filter(|r| keep(r)).cloned().collect())
    }

    /// Writes the pooled table as `geography,product,value_imp,value_exp`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, mapping: &ColumnMapping) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::UnknownColumn {
            missing: name.to_string(),
            expected: mapping.expected(),
        })
}

fn parse_value(raw: &str, field: &str, line: u64) -> Result<f64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(0.0);
    }
    let value: f64 = raw.parse().map_err(|_| Error::MalformedRow {
        line,
        message: format!("field `{field}` is not a number: {raw:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            line,
            message: format!("field `{field}` is not finite: {raw:?}"),
        });
    }
    if value < 0.0 {
        return Err(Error::NegativeValue {
            line,
            field: field.to_string(),
            value,
        });
    }
    Ok(value)
}

/// Reads raw rows from a CSV stream. Extra columns are ignored and an empty
/// numeric cell counts as zero trade.
pub fn read_raw_records<R: Read>(
    reader: R,
    mapping: &ColumnMapping,
) -> Result<Vec<RawTradeRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let geo = column_index(&headers, &mapping.geography, mapping)?;
    let prod = column_index(&headers, &mapping.product, mapping)?;
    let imp = column_index(&headers, &mapping.value_imp, mapping)?;
    let exp = column_index(&headers, &mapping.value_exp, mapping)?;
    let year = match &mapping.year {
        Some(name) => Some(column_index(&headers, name, mapping)?),
        None => None,
    };

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| match e.position() {
            Some(pos) => Error::MalformedRow {
                line: pos.line(),
                message: e.to_string(),
            },
            None => Error::Csv(e),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let geography = field(geo).trim().to_string();
        let product = field(prod).trim().to_string();
        if geography.is_empty() || product.is_empty() {
            return Err(Error::MalformedRow {
                line,
                message: "empty geography or product".into(),
            });
        }
        let value_imp = parse_value(field(imp), &mapping.value_imp, line)?;
        let value_exp = parse_value(field(exp), &mapping.value_exp, line)?;
        let year = match year {
            Some(i) => Some(
                field(i)
                    .trim()
                    .parse::<i32>()
                    .map_err(|_| Error::MalformedRow {
                        line,
                        message: format!("year is not an integer: {:?}", field(i)),
                    })?,
            ),
            None => None,
        };
        out.push(RawTradeRecord {
            geography,
            product,
            value_imp,
            value_exp,
            year,
        });
    }
    Ok(out)
}

/// Parses a regional trade CSV and pools it over years.
pub fn parse_regional_trade<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<TradeTable> {
    let raw = read_raw_records(reader, mapping)?;
    Ok(TradeTable::from_records(raw.into_iter().map(|r| {
        TradeRecord {
            geography: r.geography,
            product: r.product,
            value_imp: r.value_imp,
            value_exp: r.value_exp,
        }
    })))
}

/// Parses several files in parallel and pools them.
pub fn parse_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    mapping: &ColumnMapping,
) -> Result<TradeTable> {
    let tables = paths
        .par_iter()
        .map(|p| {
            let file = File::open(p.as_ref())?;
            parse_regional_trade(BufReader::new(file), mapping)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeTable::merge(tables))
}

/// How the import and export floors combine when removing small regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorRule {
    /// Remove a region that falls below either floor.
    #[default]
    Either,
    /// Remove a region only if it falls below both floors.
    Both,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CleaningPolicy {
    pub excluded_geographies: Vec<String>,
    pub import_floor: f64,
    pub export_floor: f64,
    #[serde(default)]
    pub floor_rule: FloorRule,
}

impl CleaningPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.import_floor >= 0.0 && self.export_floor >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "floors must be non-negative (import {}, export {})",
                self.import_floor, self.export_floor
            )));
        }
        Ok(())
    }

    /// Reads an exclusion list: one geography per line, `#` starts a comment.
    pub fn read_exclusions<P: AsRef<Path>>(path: P) -> Result<Vec<String>> {
        let file = BufReader::new(File::open(path)?);
        let mut names = Vec::new();
        for line in file.lines() {
            let line = line?;
            let name = line.split('#').next().unwrap_or("").trim();
            if !name.is_empty() {
                names.push(name.to_string());
            }
        }
        Ok(names)
    }
}

/// Drops excluded geographies and those on the left tails of the import or
/// export distribution.
pub fn filter_regions(t: &TradeTable, policy: &CleaningPolicy) -> TradeTable {
    let excluded: BTreeSet<&str> = policy
        .excluded_geographies
        .iter()
        .map(String::as_str)
        .collect();
    let dropped: BTreeSet<&str> = t
        .geographies()
        .filter(|g| {
            if excluded.contains(g) {
                return true;
            }
            let small_imp = t.geography_imp[*g] < policy.import_floor;
            let small_exp = t.geography_exp[*g] < policy.export_floor;
            match policy.floor_rule {
                FloorRule::Either => small_imp || small_exp,
                FloorRule::Both => small_imp && small_exp,
            }
        })
        .collect();
    if dropped.is_empty() {
        return t.clone();
    }
    t.retain(|r| !dropped.contains(r.geography.as_str()))
}

/// Keeps only products with positive global exports and positive global imports.
pub fn reconcile_products(t: &TradeTable) -> TradeTable {
    let keep: BTreeSet<&str> = t
        .products()
        .filter(|p| t.product_exp[*p] > 0.0 && t.product_imp[*p] > 0.0)
        .collect();
    t.retain(|r| keep.contains(r.product.as_str()))
}

/// Alternates [`filter_regions`] and [`reconcile_products`] until neither
/// removes anything.
///
/// Dropping a product lowers regional totals, which can push a region under a
/// floor, so a single pass is not always a fixed point.
pub fn clean(t: &TradeTable, policy: &CleaningPolicy) -> TradeTable {
    let mut current = reconcile_products(&filter_regions(t, policy));
    loop {
        let next = reconcile_products(&filter_regions(&current, policy));
        if next.records.len() == current.records.len() {
            return next;
        }
        current = next;
    }
}
