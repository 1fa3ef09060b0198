//! Backward & Forward inference of product inputs.
//!
//! *Backward*: the locations specialized in exporting an output product are
//! collected, and every other product is scored by how many of them are
//! specialized in importing it. *Forward*: the locations specialized in
//! importing an input product are collected, and every other product is
//! scored by how many of them are specialized in exporting it.
//!
//! The merged method proposes the top `n` backward candidates of an output
//! and re-ranks each one by adding the output's position in that candidate's
//! forward list. A candidate whose forward list misses the output is charged
//! one past the end of that list.

use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::{Link, LinkSet};
use crate::specialization::{is_specialized, Direction, SpecializationTable};

/// Forward position charged to a candidate whose forward list does not
/// contain the output.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum MissingRank {
    /// Length of the forward list plus one (at least 2).
    #[default]
    ObservedPlusOne,
    /// `n + 1`, regardless of how long the forward list is.
    ListLengthPlusOne,
}

/// Thresholds and list lengths of the Backward & Forward method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// Minimum export RCA for a location to count as an exporter of the output.
    pub rca_locations_1: f64,
    /// Minimum import RCA for such an exporter to count towards a candidate input.
    pub rca_industries_1: f64,
    /// Minimum import RCA for a location to count as an importer of the input.
    pub rca_locations_2: f64,
    /// Minimum export RCA for such an importer to count towards a candidate output.
    pub rca_industries_2: f64,
    /// Candidate list length, both directions.
    pub n: usize,
    /// Inputs emitted per output.
    pub k: usize,
    #[serde(default)]
    pub missing_rank: MissingRank,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self {
            rca_locations_1: 2.0,
            rca_industries_1: 1.5,
            rca_locations_2: 3.5,
            rca_industries_2: 2.0,
            n: 10,
            k: 3,
            missing_rank: MissingRank::default(),
        }
    }
}

impl ParamSet {
    pub fn new(thresholds: [f64; 4], n: usize, k: usize) -> Result<Self> {
        let p = Self {
            rca_locations_1: thresholds[0],
            rca_industries_1: thresholds[1],
            rca_locations_2: thresholds[2],
            rca_industries_2: thresholds[3],
            n,
            k,
            missing_rank: MissingRank::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self
            .thresholds()
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0))
        {
            return Err(Error::InvalidParams(format!(
                "threshold {t} must be finite and >= 0"
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if self.n < self.k {
            return Err(Error::InvalidParams(format!(
                "n ({}) must be >= k ({})",
                self.n, self.k
            )));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> [f64; 4] {
        [
            self.rca_locations_1,
            self.rca_industries_1,
            self.rca_locations_2,
            self.rca_industries_2,
        ]
    }

    pub fn with_thresholds(self, t: [f64; 4]) -> Self {
        Self {
            rca_locations_1: t[0],
            rca_industries_1: t[1],
            rca_locations_2: t[2],
            rca_industries_2: t[3],
            ..self
        }
    }
}

/// One ranked candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub product: String,
    /// Specialized-location count of the list this entry came from (for
    /// merged lists: the backward count).
    pub count: usize,
    /// Set on merged lists only.
    pub merged_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    pub target: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedCandidates {
    pub fn products(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.product.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scored {
    pub product: usize,
    pub count: usize,
    pub mean_rca: f64,
}

/// Candidates for `target`: products counted over the locations specialized
/// in `target` on the `source` side, ordered by count, then mean partner RCA
/// over those locations, then product index.
fn directional(
    source_rca: &Array2<f64>,
    source_threshold: f64,
    partner_rca: &Array2<f64>,
    partner_threshold: f64,
    target: usize,
    n: usize,
) -> Vec<Scored> {
    let specialized: Vec<usize> = (0..source_rca.nrows())
        .filter(|&l| is_specialized(source_rca[[l, target]], source_threshold))
        .collect();
    if specialized.is_empty() {
        return Vec::new();
    }
    let size = specialized.len() as f64;
    let mut scored: Vec<Scored> = (0..partner_rca.ncols())
        .filter(|&c| c != target)
        .filter_map(|c| {
            let mut count = 0;
            let mut sum = 0.0;
            for &l in &specialized {
                let v = partner_rca[[l, c]];
                sum += v;
                if is_specialized(v, partner_threshold) {
                    count += 1;
                }
            }
            (count > 0).then_some(Scored {
                product: c,
                count,
                mean_rca: sum / size,
            })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| b.mean_rca.total_cmp(&a.mean_rca))
            .then_with(|| a.product.cmp(&b.product))
    });
    scored.truncate(n);
    scored
}

fn backward_scored(
    s: &SpecializationTable,
    target: usize,
    t_locations: f64,
    t_industries: f64,
    n: usize,
) -> Vec<Scored> {
    directional(
        s.rca(Direction::Export),
        t_locations,
        s.rca(Direction::Import),
        t_industries,
        target,
        n,
    )
}

fn forward_scored(
    s: &SpecializationTable,
    target: usize,
    t_locations: f64,
    t_industries: f64,
    n: usize,
) -> Vec<Scored> {
    directional(
        s.rca(Direction::Import),
        t_locations,
        s.rca(Direction::Export),
        t_industries,
        target,
        n,
    )
}

/// Backward lists of every product for one `(rca_locations_1, rca_industries_1)` pair.
pub(crate) fn all_backward(
    s: &SpecializationTable,
    t_locations: f64,
    t_industries: f64,
    n: usize,
) -> Vec<Vec<Scored>> {
    (0..s.products().len())
        .into_par_iter()
        .map(|p| backward_scored(s, p, t_locations, t_industries, n))
        .collect()
}

/// Forward lists of every product for one `(rca_locations_2, rca_industries_2)` pair.
pub(crate) fn all_forward(
    s: &SpecializationTable,
    t_locations: f64,
    t_industries: f64,
    n: usize,
) -> Vec<Vec<Scored>> {
    (0..s.products().len())
        .into_par_iter()
        .map(|p| forward_scored(s, p, t_locations, t_industries, n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Merged {
    pub product: usize,
    pub count: usize,
    pub merged_rank: usize,
}

fn forward_value(target: usize, forward: &[Scored], n: usize, missing: MissingRank) -> usize {
    match forward.iter().position(|f| f.product == target) {
        Some(pos) => pos + 1,
        None => match missing {
            MissingRank::ObservedPlusOne => forward.len().max(1) + 1,
            MissingRank::ListLengthPlusOne => n + 1,
        },
    }
}

/// Re-ranks backward candidates of `target` using forward lists looked up
/// through `forward_of`.
pub(crate) fn merge<'a, F>(
    target: usize,
    backward: &[Scored],
    mut forward_of: F,
    n: usize,
    missing: MissingRank,
) -> Vec<Merged>
where
    F: FnMut(usize) -> &'a [Scored],
{
    let mut merged: Vec<(usize, Merged)> = backward
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let old_rank = i + 1;
            let value = forward_value(target, forward_of(c.product), n, missing);
            (
                old_rank,
                Merged {
                    product: c.product,
                    count: c.count,
                    merged_rank: old_rank + value,
                },
            )
        })
        .collect();
    merged.sort_by_key(|(old_rank, m)| (m.merged_rank, *old_rank));
    merged.into_iter().map(|(_, m)| m).collect()
}

fn to_ranked(s: &SpecializationTable, target: usize, scored: &[Scored]) -> RankedCandidates {
    RankedCandidates {
        target: s.products()[target].clone(),
        entries: scored
            .iter()
            .map(|c| RankedEntry {
                product: s.products()[c.product].clone(),
                count: c.count,
                merged_rank: None,
            })
            .collect(),
    }
}

/// Top `n` candidate inputs of `output_product`.
pub fn backward_candidates(
    s: &SpecializationTable,
    output_product: &str,
    p: &ParamSet,
) -> Result<RankedCandidates> {
    p.validate()?;
    let target = s.product_index(output_product)?;
    let scored = backward_scored(s, target, p.rca_locations_1, p.rca_industries_1, p.n);
    Ok(to_ranked(s, target, &scored))
}

/// Top `n` candidate outputs of `input_product`.
pub fn forward_candidates(
    s: &SpecializationTable,
    input_product: &str,
    p: &ParamSet,
) -> Result<RankedCandidates> {
    p.validate()?;
    let target = s.product_index(input_product)?;
    let scored = forward_scored(s, target, p.rca_locations_2, p.rca_industries_2, p.n);
    Ok(to_ranked(s, target, &scored))
}

/// Backward candidates of `output_product`, re-ranked by forward validation
/// (best merged rank first).
pub fn backward_forward(
    s: &SpecializationTable,
    output_product: &str,
    p: &ParamSet,
) -> Result<RankedCandidates> {
    p.validate()?;
    let target = s.product_index(output_product)?;
    let backward = backward_scored(s, target, p.rca_locations_1, p.rca_industries_1, p.n);
    let forward: Vec<Vec<Scored>> = backward
        .iter()
        .map(|c| forward_scored(s, c.product, p.rca_locations_2, p.rca_industries_2, p.n))
        .collect();
    let by_product: HashMap<usize, &[Scored]> = backward
        .iter()
        .zip(&forward)
        .map(|(c, f)| (c.product, f.as_slice()))
        .collect();
    let merged = merge(target, &backward, |c| by_product[&c], p.n, p.missing_rank);
    Ok(RankedCandidates {
        target: output_product.to_string(),
        entries: merged
            .into_iter()
            .map(|m| RankedEntry {
                product: s.products()[m.product].clone(),
                count: m.count,
                merged_rank: Some(m.merged_rank),
            })
            .collect(),
    })
}

/// Builds the link set from precomputed backward and forward lists.
pub(crate) fn links_from_lists(
    s: &SpecializationTable,
    backward: &[Vec<Scored>],
    forward: &[Vec<Scored>],
    p: &ParamSet,
) -> LinkSet {
    let per_output: Vec<Vec<Link>> = (0..s.products().len())
        .into_par_iter()
        .map(|target| {
            let merged = merge(
                target,
                &backward[target],
                |c| forward[c].as_slice(),
                p.n,
                p.missing_rank,
            );
            merged
                .into_iter()
                .take(p.k)
                .map(|m| Link {
                    output: s.products()[target].clone(),
                    input: s.products()[m.product].clone(),
                    merged_rank: m.merged_rank,
                    backward_score: m.count,
                })
                .collect()
        })
        .collect();
    LinkSet::new(
        s.products().to_vec(),
        per_output.into_iter().flatten().collect(),
    )
    .expect("candidates never include their target")
}

/// Runs Backward & Forward for every product and keeps the top `k` inputs.
pub fn infer_all(s: &SpecializationTable, p: &ParamSet) -> Result<LinkSet> {
    p.validate()?;
    if s.products().is_empty() {
        return Err(Error::InvalidConfig(
            "specialization table has no products".into(),
        ));
    }
    let backward = all_backward(s, p.rca_locations_1, p.rca_industries_1, p.n);
    let forward = all_forward(s, p.rca_locations_2, p.rca_industries_2, p.n);
    Ok(links_from_lists(s, &backward, &forward, p))
}
