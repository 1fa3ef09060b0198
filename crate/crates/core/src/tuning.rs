//! Threshold tuning against binary input-output labels.
//!
//! Every combination of the four RCA thresholds is scored by the precision
//! of the links it produces. Backward lists only depend on the first two
//! thresholds and forward lists on the last two, so each distinct pair is
//! computed once and reused across the grid.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufReader, Read, Write};
use std::path::PathBuf;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icio::LabelMatrix;
use crate::inference::{all_backward, all_forward, links_from_lists, ParamSet, Scored};
use crate::links::LinkSet;
use crate::specialization::SpecializationTable;

/// Candidate values for each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rca_locations_1: Vec<f64>,
    pub rca_industries_1: Vec<f64>,
    pub rca_locations_2: Vec<f64>,
    pub rca_industries_2: Vec<f64>,
}

impl Default for GridSpec {
    /// `[1, 6)` in steps of 0.5 for every threshold.
    fn default() -> Self {
        Self::uniform(Self::range(1.0, 6.0, 0.5).expect("valid default range"))
    }
}

impl GridSpec {
    pub fn uniform(values: Vec<f64>) -> Self {
        Self {
            rca_locations_1: values.clone(),
            rca_industries_1: values.clone(),
            rca_locations_2: values.clone(),
            rca_industries_2: values,
        }
    }

    /// A one-point grid at the thresholds of `p`.
    pub fn single(p: &ParamSet) -> Self {
        let t = p.thresholds();
        Self {
            rca_locations_1: vec![t[0]],
            rca_industries_1: vec![t[1]],
            rca_locations_2: vec![t[2]],
            rca_industries_2: vec![t[3]],
        }
    }

    /// `lo, lo + step, ...` up to but excluding `hi`.
    pub fn range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite() && step > 0.0 && hi > lo) {
            return Err(Error::InvalidConfig(format!(
                "bad grid range {lo}:{hi}:{step}"
            )));
        }
        let count = ((hi - lo) / step - 1e-9).ceil() as usize;
        Ok((0..count).map(|i| lo + i as f64 * step).collect())
    }

    /// Parses `lo:hi:step`.
    pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
        let parts: Vec<&str> = spec.split(':').collect();
        let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
        match nums.as_deref() {
            Some([lo, hi, step]) => Self::range(*lo, *hi, *step),
            _ => Err(Error::InvalidConfig(format!(
                "grid must be lo:hi:step, got {spec:?}"
            ))),
        }
    }

    fn axes(&self) -> [&[f64]; 4] {
        [
            &self.rca_locations_1,
            &self.rca_industries_1,
            &self.rca_locations_2,
            &self.rca_industries_2,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for axis in self.axes() {
            if axis.is_empty() {
                return Err(Error::InvalidConfig("grid axes must be non-empty".into()));
            }
            if let Some(v) = axis.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidConfig(format!("grid value {v} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes().iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every combination in lexicographic index order, with `n`, `k` and the
    /// missing-rank rule taken from `base`.
    pub fn points(&self, base: &ParamSet) -> Vec<ParamSet> {
        let mut out = Vec::with_capacity(self.len());
        for &a in &self.rca_locations_1 {
            for &b in &self.rca_industries_1 {
                for &c in &self.rca_locations_2 {
                    for &d in &self.rca_industries_2 {
                        out.push(base.with_thresholds([a, b, c, d]));
                    }
                }
            }
        }
        out
    }
}

/// True and false positives of a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionScore {
    pub tp: usize,
    pub fp: usize,
    /// `tp / (tp + fp)`, or 0 for an empty prediction.
    pub precision: f64,
}

impl PrecisionScore {
    pub fn is_empty(&self) -> bool {
        self.tp + self.fp == 0
    }
}

/// Counts every predicted link against the label matrix.
pub fn precision(pred: &LinkSet, labels: &LabelMatrix) -> Result<PrecisionScore> {
    let mut unmatched = BTreeSet::new();
    let (mut tp, mut fp) = (0, 0);
    for l in pred.links() {
        match labels.is_link(&l.input, &l.output) {
            Some(true) => tp += 1,
            Some(false) => fp += 1,
            None => {
                for id in [&l.input, &l.output] {
                    if !labels.contains(id) {
                        unmatched.insert(id.clone());
                    }
                }
            }
        }
    }
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedIds(unmatched.into_iter().collect()));
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    Ok(PrecisionScore { tp, fp, precision })
}

/// Score of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneResult {
    pub params: ParamSet,
    pub tp: usize,
    pub fp: usize,
    pub precision: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    rca_locations_1: f64,
    rca_industries_1: f64,
    rca_locations_2: f64,
    rca_industries_2: f64,
    tp: usize,
    fp: usize,
    precision: f64,
}

/// Periodic dump of finished grid points, reused when a run restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub path: PathBuf,
    pub every: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GridOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub checkpoint: Option<Checkpoint>,
}

fn key(t: [f64; 4]) -> [u64; 4] {
    t.map(f64::to_bits)
}

fn leaderboard_order(a: &TuneResult, b: &TuneResult) -> std::cmp::Ordering {
    b.precision.total_cmp(&a.precision).then_with(|| {
        a.params
            .thresholds()
            .iter()
            .zip(b.params.thresholds().iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Evaluates every grid point and returns them best first: by precision
/// descending, then by the threshold tuple ascending.
pub fn grid_search(
    s: &SpecializationTable,
    labels: &LabelMatrix,
    grid: &GridSpec,
    base: &ParamSet,
    opts: &GridOptions,
) -> Result<Vec<TuneResult>> {
    base.validate()?;
    grid.validate()?;
    let missing: Vec<String> = s
        .products()
        .iter()
        .filter(|p| !labels.contains(p))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnmatchedIds(missing));
    }
    match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(|| run_grid(s, labels, grid, base, opts)),
        None => run_grid(s, labels, grid, base, opts),
    }
}

type ListCache = HashMap<[u64; 2], Vec<Vec<Scored>>>;

fn run_grid(
    s: &SpecializationTable,
    labels: &LabelMatrix,
    grid: &GridSpec,
    base: &ParamSet,
    opts: &GridOptions,
) -> Result<Vec<TuneResult>> {
    let pairs = |xs: &[f64], ys: &[f64]| -> Vec<(f64, f64)> {
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .collect()
    };
    let backward: ListCache = pairs(&grid.rca_locations_1, &grid.rca_industries_1)
        .into_par_iter()
        .map(|(a, b)| ([a.to_bits(), b.to_bits()], all_backward(s, a, b, base.n)))
        .collect();
    let forward: ListCache = pairs(&grid.rca_locations_2, &grid.rca_industries_2)
        .into_par_iter()
        .map(|(c, d)| ([c.to_bits(), d.to_bits()], all_forward(s, c, d, base.n)))
        .collect();

    let evaluate = |p: &ParamSet| -> Result<TuneResult> {
        let t = p.thresholds();
        let links = links_from_lists(
            s,
            &backward[&[t[0].to_bits(), t[1].to_bits()]],
            &forward[&[t[2].to_bits(), t[3].to_bits()]],
            p,
        );
        let score = precision(&links, labels)?;
        Ok(TuneResult {
            params: *p,
            tp: score.tp,
            fp: score.fp,
            precision: score.precision,
        })
    };

    let points = grid.points(base);
    let mut results: Vec<TuneResult> = match &opts.checkpoint {
        None => points.par_iter().map(evaluate).collect::<Result<_>>()?,
        Some(cp) => {
            let mut done = load_checkpoint(cp, base)?;
            let todo: Vec<&ParamSet> = points
                .iter()
                .filter(|p| !done.contains_key(&key(p.thresholds())))
                .collect();
            if !done.is_empty() {
                info!(
                    "resuming grid search: {} of {} points already done",
                    done.len(),
                    points.len()
                );
            }
            for chunk in todo.chunks(cp.every.max(1)) {
                let scored = chunk
                    .par_iter()
                    .map(|p| evaluate(p))
                    .collect::<Result<Vec<_>>>()?;
                for r in scored {
                    done.insert(key(r.params.thresholds()), r);
                }
                let mut snapshot: Vec<TuneResult> = done.values().copied().collect();
                snapshot.sort_by(leaderboard_order);
                write_atomic(&cp.path, &snapshot)?;
            }
            points
                .iter()
                .filter_map(|p| done.get(&key(p.thresholds())).copied())
                .collect()
        }
    };
    results.sort_by(leaderboard_order);
    Ok(results)
}

fn load_checkpoint(cp: &Checkpoint, base: &ParamSet) -> Result<HashMap<[u64; 4], TuneResult>> {
    if !cp.path.exists() {
        return Ok(HashMap::new());
    }
    let rows = read_results_csv(BufReader::new(File::open(&cp.path)?), base)?;
    Ok(rows
        .into_iter()
        .map(|r| (key(r.params.thresholds()), r))
        .collect())
}

fn write_atomic(path: &std::path::Path, results: &[TuneResult]) -> Result<()> {
    let tmp = path.with_extension("partial");
    write_results_csv(results, File::create(&tmp)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Leaderboard CSV: the four thresholds, `tp`, `fp` and `precision`.
pub fn write_results_csv<W: Write>(results: &[TuneResult], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for r in results {
        let t = r.params.thresholds();
        w.serialize(ResultRow {
            rca_locations_1: t[0],
            rca_industries_1: t[1],
            rca_locations_2: t[2],
            rca_industries_2: t[3],
            tp: r.tp,
            fp: r.fp,
            precision: r.precision,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R, base: &ParamSet) -> Result<Vec<TuneResult>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<ResultRow>() {
        let row = row?;
        out.push(TuneResult {
            params: base.with_thresholds([
                row.rca_locations_1,
                row.rca_industries_1,
                row.rca_locations_2,
                row.rca_industries_2,
            ]),
            tp: row.tp,
            fp: row.fp,
            precision: row.precision,
        });
    }
    Ok(out)
}
