//! Proportional allocation of region/country flows onto region-to-region,
//! product-to-product pairs.
//!
//! For origin region `r1` in country `c1` and destination region `r2` in
//! country `c2`:
//!
//! ```text
//! X[r1,p1,r2,p2] = X[r1,p1,c2] / sum_{r1' in c1} X[r1',p1,c2]
//!                * L[p1,p2]
//!                * X[r2,p2] / sum_p X[r2,p]
//!                * X[c1,p1,r2]
//! ```
//!
//! Only non-zero entries are produced.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ordered_sum;
use crate::links::LinkSet;
use crate::specialization::{Direction, SpecializationTable};

/// Region/country trade as reported by each side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BilateralFlowTable {
    region_country: BTreeMap<String, String>,
    /// `(region, product, destination country)`
    exports_to_country: BTreeMap<(String, String, String), f64>,
    /// `(origin country, product, region)`
    imports_from_country: BTreeMap<(String, String, String), f64>,
}

#[derive(Debug, Deserialize)]
struct RegionRow {
    region: String,
    country: String,
}

#[derive(Debug, Deserialize)]
struct ExportRow {
    region: String,
    product: String,
    country: String,
    value: f64,
}

#[derive(Debug, Deserialize)]
struct ImportRow {
    country: String,
    product: String,
    region: String,
    value: f64,
}

fn check_value(value: f64, what: &str) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::NegativeValue {
            line: 0,
            field: what.to_string(),
            value,
        });
    }
    Ok(())
}

impl BilateralFlowTable {
    pub fn new(region_country: BTreeMap<String, String>) -> Self {
        Self {
            region_country,
            ..Default::default()
        }
    }

    pub fn country_of(&self, region: &str) -> Result<&str> {
        self.region_country
            .get(region)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownRegion(region.to_string()))
    }

    /// Adds `X[region, product, country]`; duplicates are summed.
    pub fn add_export(
        &mut self,
        region: &str,
        product: &str,
        country: &str,
        usd: f64,
    ) -> Result<()> {
        check_value(usd, "exports_to_country")?;
        if self.country_of(region)? == country {
            return Err(Error::InvalidConfig(format!(
                "region `{region}` cannot export to its own country `{country}`"
            )));
        }
        *self
            .exports_to_country
            .entry((region.into(), product.into(), country.into()))
            .or_insert(0.0) += usd;
        Ok(())
    }

    /// Adds `X[country, product, region]`; duplicates are summed.
    pub fn add_import(
        &mut self,
        country: &str,
        product: &str,
        region: &str,
        usd: f64,
    ) -> Result<()> {
        check_value(usd, "imports_from_country")?;
        if self.country_of(region)? == country {
            return Err(Error::InvalidConfig(format!(
                "region `{region}` cannot import from its own country `{country}`"
            )));
        }
        *self
            .imports_from_country
            .entry((country.into(), product.into(), region.into()))
            .or_insert(0.0) += usd;
        Ok(())
    }

    /// Reads `region,country` rows.
    pub fn read_regions<R: Read>(reader: R) -> Result<BTreeMap<String, String>> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut map = BTreeMap::new();
        for row in rdr.deserialize::<RegionRow>() {
            let row = row?;
            map.insert(row.region, row.country);
        }
        Ok(map)
    }

    /// Reads `region,product,country,value` rows.
    pub fn read_exports<R: Read>(&mut self, reader: R) -> Result<()> {
        let mut rdr = csv::Reader::from_reader(reader);
        for row in rdr.deserialize::<ExportRow>() {
            let row = row?;
            self.add_export(&row.region, &row.product, &row.country, row.value)?;
        }
        Ok(())
    }

    /// Reads `country,product,region,value` rows.
    pub fn read_imports<R: Read>(&mut self, reader: R) -> Result<()> {
        let mut rdr = csv::Reader::from_reader(reader);
        for row in rdr.deserialize::<ImportRow>() {
            let row = row?;
            self.add_import(&row.country, &row.product, &row.region, row.value)?;
        }
        Ok(())
    }

    pub fn imports_from_country(&self) -> &BTreeMap<(String, String, String), f64> {
        &self.imports_from_country
    }

    pub fn exports_to_country(&self) -> &BTreeMap<(String, String, String), f64> {
        &self.exports_to_country
    }
}

/// Estimated flow of `input_product` from `origin_region` used by
/// `dest_region` to make `output_product`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationEntry {
    pub origin_region: String,
    pub input_product: String,
    pub dest_region: String,
    pub output_product: String,
    pub usd: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationOptions {
    /// Divide the destination's export shares by their sum over the linked
    /// outputs instead of over all products.
    pub renormalize: bool,
}

/// What could not be allocated.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReconciliationReport {
    /// `(c1, p1, r2)` import records considered.
    pub groups: usize,
    /// Import records with no matching exports from `c1`'s regions to `c2`.
    pub skipped_groups: usize,
    pub skipped_usd: f64,
    /// Destination regions absent from the specialization table or with no
    /// exports at all.
    pub destinations_without_exports: BTreeSet<String>,
}

/// `(c1, p1, c2) -> [(r1, X[r1,p1,c2])]`
type Senders<'a> = BTreeMap<(&'a str, &'a str, &'a str), Vec<(&'a str, f64)>>;

/// Allocates every positive `X[c1,p1,r2]` across origin regions and linked
/// outputs.
pub fn allocate(
    links: &LinkSet,
    flows: &BilateralFlowTable,
    s: &SpecializationTable,
    opts: AllocationOptions,
) -> Result<(Vec<AllocationEntry>, ReconciliationReport)> {
    let mut senders: Senders = BTreeMap::new();
    for ((r1, p1, c2), &v) in &flows.exports_to_country {
        if v > 0.0 {
            let c1 = flows.country_of(r1)?;
            senders
                .entry((c1, p1.as_str(), c2.as_str()))
                .or_default()
                .push((r1.as_str(), v));
        }
    }
    let denominators: BTreeMap<(&str, &str, &str), f64> = senders
        .iter()
        .map(|(k, rs)| {
            let mut vals: Vec<f64> = rs.iter().map(|(_, v)| *v).collect();
            (*k, ordered_sum(&mut vals))
        })
        .collect();
    let outputs = links.outputs_by_input();

    let groups: Vec<(&(String, String, String), f64)> = flows
        .imports_from_country
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(k, &v)| (k, v))
        .collect();

    let exp = s.values(Direction::Export);
    let per_group: Vec<Result<GroupOutcome>> = groups
        .par_iter()
        .map(|&((c1, p1, r2), x_c1p1r2)| {
            let c2 = flows.country_of(r2)?;
            let Some(p2s) = outputs.get(p1.as_str()) else {
                return Ok(GroupOutcome::default());
            };
            let key = (c1.as_str(), p1.as_str(), c2);
            let denom = denominators.get(&key).copied().unwrap_or(0.0);
            if denom <= 0.0 {
                return Ok(GroupOutcome {
                    skipped: Some(x_c1p1r2),
                    ..Default::default()
                });
            }
            let Some(l2) = s
                .location_index(r2)
                .filter(|&l| s.location_total(Direction::Export, l) > 0.0)
            else {
                return Ok(GroupOutcome {
                    dest_without_exports: Some(r2.clone()),
                    ..Default::default()
                });
            };
            let dest_shares: Vec<(&str, f64)> = p2s
                .iter()
                .filter_map(|p2| {
                    let p = s.product_index(p2).ok()?;
                    let v = exp[[l2, p]];
                    (v > 0.0).then_some((*p2, v))
                })
                .collect();
            let share_total = if opts.renormalize {
                let mut vals: Vec<f64> = dest_shares.iter().map(|(_, v)| *v).collect();
                ordered_sum(&mut vals)
            } else {
                s.location_total(Direction::Export, l2)
            };
            let mut entries = Vec::new();
            for &(r1, x_r1) in &senders[&key] {
                let origin_share = x_r1 / denom;
                for &(p2, x_r2p2) in &dest_shares {
                    let usd = origin_share * (x_r2p2 / share_total) * x_c1p1r2;
                    if usd > 0.0 {
                        entries.push(AllocationEntry {
                            origin_region: r1.to_string(),
                            input_product: p1.clone(),
                            dest_region: r2.clone(),
                            output_product: p2.to_string(),
                            usd,
                        });
                    }
                }
            }
            Ok(GroupOutcome {
                entries,
                ..Default::default()
            })
        })
        .collect();

    let mut report = ReconciliationReport {
        groups: groups.len(),
        ..Default::default()
    };
    let mut entries = Vec::new();
    for outcome in per_group {
        let outcome = outcome?;
        if let Some(usd) = outcome.skipped {
            report.skipped_groups += 1;
            report.skipped_usd += usd;
        }
        if let Some(r) = outcome.dest_without_exports {
            report.destinations_without_exports.insert(r);
        }
        entries.extend(outcome.entries);
    }
    Ok((entries, report))
}

#[derive(Debug, Default)]
struct GroupOutcome {
    entries: Vec<AllocationEntry>,
    skipped: Option<f64>,
    dest_without_exports: Option<String>,
}

pub fn write_allocation_jsonl<W: Write>(entries: &[AllocationEntry], mut w: W) -> Result<()> {
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_allocation_csv<W: Write>(entries: &[AllocationEntry], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}
