//! Random baseline, hit-rate metrics and synthetic worlds with planted links.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{infer_all, ParamSet};
use crate::ingest::{TradeRecord, TradeTable};
use crate::links::{Link, LinkSet};
use crate::specialization::SpecializationTable;

/// For every product, `k` distinct other products drawn uniformly.
///
/// `merged_rank` holds the draw position (1-based).
pub fn random_baseline(products: &[String], k: usize, seed: u64) -> Result<LinkSet> {
    let universe: Vec<String> = products
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if k >= universe.len() {
        return Err(Error::InvalidParams(format!(
            "k = {k} needs more than {} products",
            universe.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::with_capacity(universe.len() * k);
    for (i, output) in universe.iter().enumerate() {
        let picks = rand::seq::index::sample(&mut rng, universe.len() - 1, k);
        for (pos, j) in picks.into_iter().enumerate() {
            let j = if j >= i { j + 1 } else { j };
            links.push(Link {
                output: output.clone(),
                input: universe[j].clone(),
                merged_rank: pos + 1,
                backward_score: 0,
            });
        }
    }
    LinkSet::new(universe, links)
}

/// Shares of evaluated outputs with at least one, two and three correctly
/// identified inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HitRates {
    pub ge1: f64,
    pub ge2: f64,
    pub ge3: f64,
}

impl HitRates {
    pub fn mean(rates: &[HitRates]) -> HitRates {
        if rates.is_empty() {
            return HitRates::default();
        }
        let n = rates.len() as f64;
        HitRates {
            ge1: rates.iter().map(|r| r.ge1).sum::<f64>() / n,
            ge2: rates.iter().map(|r| r.ge2).sum::<f64>() / n,
            ge3: rates.iter().map(|r| r.ge3).sum::<f64>() / n,
        }
    }
}

/// Hit rates of `pred` over every output that has at least one input in
/// `truth`.
pub fn hit_rates(pred: &LinkSet, truth: &LinkSet) -> Result<HitRates> {
    hit_rates_within(pred, truth, None)
}

/// Like [`hit_rates`], restricted to the outputs listed in `outputs` (for
/// example one product group).
pub fn hit_rates_within(
    pred: &LinkSet,
    truth: &LinkSet,
    outputs: Option<&BTreeSet<String>>,
) -> Result<HitRates> {
    let universe: BTreeSet<&str> = pred.products().iter().map(String::as_str).collect();
    let missing: Vec<String> = truth
        .products()
        .iter()
        .filter(|p| !universe.contains(p.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::UniverseMismatch(missing));
    }
    let mut truth_inputs = truth.inputs_by_output();
    if let Some(keep) = outputs {
        truth_inputs.retain(|o, _| keep.contains(*o));
    }
    if truth_inputs.is_empty() {
        return Err(Error::InvalidConfig("no truth links to evaluate".into()));
    }
    let pred_pairs = pred.pairs();
    let mut counts = [0usize; 3];
    for (output, inputs) in &truth_inputs {
        let distinct: BTreeSet<&str> = inputs.iter().copied().collect();
        let hits = distinct
            .iter()
            .filter(|i| pred_pairs.contains(&(**i, *output)))
            .count();
        for (b, c) in counts.iter_mut().enumerate() {
            if hits > b {
                *c += 1;
            }
        }
    }
    let n = truth_inputs.len() as f64;
    Ok(HitRates {
        ge1: counts[0] as f64 / n,
        ge2: counts[1] as f64 / n,
        ge3: counts[2] as f64 / n,
    })
}

/// Writes `model,ge1,ge2,ge3` rows.
pub fn write_metrics_csv<W: Write>(rows: &[(String, HitRates)], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["model", "ge1", "ge2", "ge3"])?;
    for (model, r) in rows {
        w.write_record([
            model.clone(),
            r.ge1.to_string(),
            r.ge2.to_string(),
            r.ge3.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters of a synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthWorldConfig {
    pub regions: usize,
    pub products: usize,
    /// Number of planted `input -> output` links.
    pub links: usize,
    /// Multiplier applied to planted export and import cells.
    pub strength: f64,
    /// Log-normal sigma of the multiplicative noise on every flow.
    pub noise: f64,
    pub seed: u64,
    /// Regions specialized in each link; defaults to
    /// `regions / (links + 1)`, at least 1.
    pub regions_per_link: Option<usize>,
}

impl Default for SynthWorldConfig {
    fn default() -> Self {
        Self {
            regions: 30,
            products: 15,
            links: 8,
            strength: 5.0,
            noise: 0.0,
            seed: 0,
            regions_per_link: None,
        }
    }
}

impl SynthWorldConfig {
    pub fn group_size(&self) -> usize {
        self.regions_per_link
            .unwrap_or_else(|| (self.regions / (self.links + 1)).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.regions == 0 || self.products < 2 || self.links == 0 {
            return bad("synthetic world needs regions, at least two products and one link".into());
        }
        if self.links >= self.products {
            return bad(format!(
                "{} planted links need at least {} products",
                self.links,
                self.links + 1
            ));
        }
        if !(self.strength.is_finite() && self.strength >= 1.0) {
            return bad(format!("strength must be >= 1, got {}", self.strength));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise must lie in [0, 1], got {}", self.noise));
        }
        let size = self.group_size();
        if size == 0 || size * self.links > self.regions {
            return bad(format!(
                "{} links x {} regions each exceed {} regions",
                self.links, size, self.regions
            ));
        }
        Ok(())
    }
}

pub fn region_name(i: usize) -> String {
    format!("R{i:03}")
}

pub fn product_name(i: usize) -> String {
    format!("P{i:03}")
}

/// Builds a world of unit flows with planted links.
///
/// Products are shuffled into a chain `q0 -> q1 -> ... -> q_links`; link `i`
/// gets its own disjoint group of regions that export `q(i+1)` and import
/// `q(i)` at `strength` times the baseline. Every flow is then multiplied
/// by an independent log-normal factor with sigma `noise`.
pub fn synth_world(cfg: &SynthWorldConfig) -> Result<(TradeTable, LinkSet)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..cfg.products).collect();
    order.shuffle(&mut rng);
    let mut regions: Vec<usize> = (0..cfg.regions).collect();
    regions.shuffle(&mut rng);

    let mut exp = vec![vec![1.0f64; cfg.products]; cfg.regions];
    let mut imp = vec![vec![1.0f64; cfg.products]; cfg.regions];
    let size = cfg.group_size();
    let mut truth = Vec::with_capacity(cfg.links);
    for i in 0..cfg.links {
        let (input, output) = (order[i], order[i + 1]);
        for &r in &regions[i * size..(i + 1) * size] {
            exp[r][output] *= cfg.strength;
            imp[r][input] *= cfg.strength;
        }
        truth.push(Link {
            output: product_name(output),
            input: product_name(input),
            merged_rank: 2,
            backward_score: size,
        });
    }

    if cfg.noise > 0.0 {
        let dist =
            LogNormal::new(0.0, cfg.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for r in 0..cfg.regions {
            for p in 0..cfg.products {
                exp[r][p] *= dist.sample(&mut rng);
                imp[r][p] *= dist.sample(&mut rng);
            }
        }
    }

    let mut records = Vec::with_capacity(cfg.regions * cfg.products);
    for r in 0..cfg.regions {
        for p in 0..cfg.products {
            records.push(TradeRecord {
                geography: region_name(r),
                product: product_name(p),
                value_imp: imp[r][p],
                value_exp: exp[r][p],
            });
        }
    }
    let products = (0..cfg.products).map(product_name).collect();
    Ok((
        TradeTable::from_records(records),
        LinkSet::new(products, truth)?,
    ))
}

/// Outcome of one synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Planted links present in the inferred top `k`.
    pub recovered: usize,
    /// Planted links inferred with merged rank 2.
    pub recovered_rank2: usize,
    pub planted: usize,
    pub model: HitRates,
    pub baseline: HitRates,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seeds: Vec<SeedOutcome>,
    pub model: HitRates,
    pub baseline: HitRates,
    /// Mean over seeds of the recovered share.
    pub recovery: f64,
    pub recovery_rank2: f64,
}

/// Runs inference and the random baseline on one world per seed.
pub fn run_benchmark(
    cfg: &SynthWorldConfig,
    seeds: &[u64],
    params: &ParamSet,
) -> Result<BenchReport> {
    params.validate()?;
    let outcomes: Vec<SeedOutcome> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SynthWorldConfig {
                seed,
                ..cfg.clone()
            };
            let (table, truth) = synth_world(&cfg)?;
            let s = SpecializationTable::from_trade(&table)?;
            let pred = infer_all(&s, params)?;
            let baseline = random_baseline(s.products(), params.k, seed)?;
            let recovered = truth
                .links()
                .iter()
                .filter(|t| pred.contains(&t.input, &t.output))
                .count();
            let recovered_rank2 = truth
                .links()
                .iter()
                .filter(|t| {
                    pred.links()
                        .iter()
                        .any(|l| l.input == t.input && l.output == t.output && l.merged_rank == 2)
                })
                .count();
            Ok(SeedOutcome {
                seed,
                recovered,
                recovered_rank2,
                planted: truth.len(),
                model: hit_rates(&pred, &truth)?,
                baseline: hit_rates(&baseline, &truth)?,
            })
        })
        .collect::<Result<_>>()?;
    let n = outcomes.len().max(1) as f64;
    let share = |f: fn(&SeedOutcome) -> usize| {
        outcomes
            .iter()
            .map(|o| f(o) as f64 / o.planted as f64)
            .sum::<f64>()
            / n
    };
    Ok(BenchReport {
        model: HitRates::mean(&outcomes.iter().map(|o| o.model).collect::<Vec<_>>()),
        baseline: HitRates::mean(&outcomes.iter().map(|o| o.baseline).collect::<Vec<_>>()),
        recovery: share(|o| o.recovered),
        recovery_rank2: share(|o| o.recovered_rank2),
        seeds: outcomes,
    })
}

/// Per-output planted inputs, for inspection.
pub fn planted_inputs(truth: &LinkSet) -> BTreeMap<String, Vec<String>> {
    truth
        .inputs_by_output()
        .into_iter()
        .map(|(o, is)| (o.to_string(), is.into_iter().map(str::to_string).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn products(n: usize) -> Vec<String> {
        (0..n).map(product_name).collect()
    }

    fn link(output: &str, input: &str) -> Link {
        Link {
            output: output.into(),
            input: input.into(),
            merged_rank: 2,
            backward_score: 1,
        }
    }

    #[test]
    fn baseline_draws_k_distinct_non_self_inputs() {
        let set = random_baseline(&products(10), 3, 7).unwrap();
        assert_eq!(set.len(), 30);
        for (output, inputs) in set.inputs_by_output() {
            let distinct: BTreeSet<_> = inputs.iter().collect();
            assert_eq!(distinct.len(), 3);
            assert!(!inputs.contains(&output));
        }
        assert_eq!(set, random_baseline(&products(10), 3, 7).unwrap());
        assert_ne!(set, random_baseline(&products(10), 3, 8).unwrap());
    }

    #[test]
    fn baseline_needs_more_products_than_k() {
        assert!(random_baseline(&products(3), 3, 0).is_err());
    }

    #[test]
    fn hit_rate_counting() {
        let universe: Vec<String> = ["a", "b", "c", "x", "y", "z", "w"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let truth = LinkSet::new(
            universe.clone(),
            vec![
                link("a", "x"),
                link("a", "y"),
                link("a", "z"),
                link("b", "x"),
                link("b", "y"),
                link("c", "x"),
            ],
        )
        .unwrap();
        // overlaps: a -> 2, b -> 1, c -> 0
        let pred = LinkSet::new(
            universe.clone(),
            vec![
                link("a", "x"),
                link("a", "y"),
                link("a", "w"),
                link("b", "y"),
                link("c", "w"),
            ],
        )
        .unwrap();
        let r = hit_rates(&pred, &truth).unwrap();
        assert_eq!(
            r,
            HitRates {
                ge1: 2.0 / 3.0,
                ge2: 1.0 / 3.0,
                ge3: 0.0
            }
        );
        assert_eq!(
            hit_rates(&truth, &truth).unwrap(),
            HitRates {
                ge1: 1.0,
                ge2: 2.0 / 3.0,
                ge3: 1.0 / 3.0
            }
        );
        let group: BTreeSet<String> = ["a".to_string(), "c".to_string()].into();
        assert_eq!(
            hit_rates_within(&pred, &truth, Some(&group)).unwrap(),
            HitRates {
                ge1: 0.5,
                ge2: 0.5,
                ge3: 0.0
            }
        );
        assert!(hit_rates_within(&pred, &truth, Some(&BTreeSet::new())).is_err());
    }

    #[test]
    fn hit_rates_reject_foreign_products() {
        let truth = LinkSet::new(vec![], vec![link("a", "q")]).unwrap();
        let pred = LinkSet::new(vec!["a".into(), "b".into()], vec![link("a", "b")]).unwrap();
        assert!(
            matches!(hit_rates(&pred, &truth), Err(Error::UniverseMismatch(m)) if m == vec!["q".to_string()])
        );
    }

    #[test]
    fn metrics_csv_layout() {
        let mut buf = Vec::new();
        write_metrics_csv(
            &[(
                "model".into(),
                HitRates {
                    ge1: 1.0,
                    ge2: 0.5,
                    ge3: 0.25,
                },
            )],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "model,ge1,ge2,ge3\nmodel,1,0.5,0.25\n"
        );
    }

    #[test]
    fn synth_world_is_seeded() {
        let cfg = SynthWorldConfig {
            noise: 0.3,
            seed: 4,
            ..Default::default()
        };
        let a = synth_world(&cfg).unwrap();
        assert_eq!(a, synth_world(&cfg).unwrap());
        let b = synth_world(&SynthWorldConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a.0, b.0);
        assert_eq!(a.1.len(), 8);
        assert_eq!(a.0.records().len(), 30 * 15);
    }

    #[test]
    fn synth_world_validates() {
        let base = SynthWorldConfig::default();
        for bad in [
            SynthWorldConfig {
                links: 15,
                ..base.clone()
            },
            SynthWorldConfig {
                noise: 1.5,
                ..base.clone()
            },
            SynthWorldConfig {
                strength: 0.5,
                ..base.clone()
            },
            SynthWorldConfig {
                regions_per_link: Some(4),
                ..base.clone()
            },
        ] {
            assert!(synth_world(&bad).is_err(), "{bad:?}");
        }
    }
}
