//! Inter-country input-output tables: cleaning, sector-level specialization
//! and trade-intensity labels.
//!
//! An ICIO matrix is indexed by `COUNTRY_INDUSTRY` pairs on both axes; row
//! pairs sell to column pairs. Only the intermediate-use block is read.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use log::warn;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::{Link, LinkSet};
use crate::specialization::{rca_matrix, SpecializationTable};

/// A `COUNTRY_INDUSTRY` code such as `AUS_01T02`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairCode {
    pub country: String,
    pub industry: String,
}

impl PairCode {
    pub fn parse(label: &str) -> Option<Self> {
        let (country, industry) = label.split_once('_')?;
        if country.is_empty() || industry.is_empty() {
            return None;
        }
        Some(Self {
            country: country.to_string(),
            industry: industry.to_string(),
        })
    }
}

impl std::fmt::Display for PairCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}", self.country, self.industry)
    }
}

/// Flow matrix between (country, industry) pairs, in USD.
#[derive(Debug, Clone, PartialEq)]
pub struct IcioTensor {
    rows: Vec<PairCode>,
    cols: Vec<PairCode>,
    data: Array2<f64>,
}

impl IcioTensor {
    pub fn new(rows: Vec<PairCode>, cols: Vec<PairCode>, data: Array2<f64>) -> Result<Self> {
        if data.dim() != (rows.len(), cols.len()) {
            return Err(Error::InvalidConfig(format!(
                "ICIO data is {:?} but has {} row and {} column labels",
                data.dim(),
                rows.len(),
                cols.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "ICIO flows must be non-negative, found {v}"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a square tensor from one label list.
    pub fn square(labels: Vec<PairCode>, data: Array2<f64>) -> Result<Self> {
        Self::new(labels.clone(), labels, data)
    }

    /// Reads the intermediate-use block of an ICIO CSV: the rows and columns
    /// whose `COUNTRY_INDUSTRY` header appears on both axes. Final-demand
    /// columns and value-added rows fall out because they only appear on one
    /// axis. Empty cells count as zero.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col_labels: Vec<Option<PairCode>> =
            headers.iter().skip(1).map(PairCode::parse).collect();

        let mut row_labels = Vec::new();
        let mut raw_rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let Some(label) = rec.get(0).and_then(PairCode::parse) else {
                continue;
            };
            let mut values = Vec::with_capacity(col_labels.len());
            for cell in rec.iter().skip(1) {
                let cell = cell.trim();
                let v = if cell.is_empty() {
                    0.0
                } else {
                    cell.parse::<f64>().map_err(|_| Error::MalformedRow {
                        line,
                        message: format!("not a number: {cell:?}"),
                    })?
                };
                values.push(v);
            }
            row_labels.push(label);
            raw_rows.push((line, values));
        }

        // Columns are reordered to follow the rows.
        let col_pos: HashMap<&PairCode, usize> = col_labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.as_ref().map(|l| (l, i)))
            .collect();
        let keep_rows: Vec<usize> = (0..row_labels.len())
            .filter(|&i| col_pos.contains_key(&row_labels[i]))
            .collect();
        let keep_cols: Vec<usize> = keep_rows.iter().map(|&i| col_pos[&row_labels[i]]).collect();
        if keep_rows.is_empty() {
            return Err(Error::InvalidConfig(
                "no COUNTRY_INDUSTRY block found in ICIO file".into(),
            ));
        }

        let mut data = Array2::zeros((keep_rows.len(), keep_cols.len()));
        for (r, &ri) in keep_rows.iter().enumerate() {
            let (line, values) = &raw_rows[ri];
            for (c, &ci) in keep_cols.iter().enumerate() {
                let v = *values.get(ci).ok_or_else(|| Error::MalformedRow {
                    line: *line,
                    message: format!(
                        "row has {} values, expected {}",
                        values.len(),
                        col_labels.len()
                    ),
                })?;
                if v < 0.0 {
                    return Err(Error::NegativeValue {
                        line: *line,
                        field: col_labels[ci]
                            .as_ref()
                            .map(ToString::to_string)
                            .unwrap_or_default(),
                        value: v,
                    });
                }
                data[[r, c]] = v;
            }
        }
        let rows: Vec<PairCode> = keep_rows.iter().map(|&i| row_labels[i].clone()).collect();
        Self::square(rows, data)
    }

    /// Sums several years of the same table.
    pub fn sum<I: IntoIterator<Item = IcioTensor>>(tensors: I) -> Result<Self> {
        let mut iter = tensors.into_iter();
        let mut acc = iter
            .next()
            .ok_or_else(|| Error::InvalidConfig("no ICIO tables to merge".into()))?;
        for t in iter {
            if t.rows != acc.rows || t.cols != acc.cols {
                return Err(Error::InvalidConfig(
                    "ICIO tables have different layouts".into(),
                ));
            }
            acc.data += &t.data;
        }
        Ok(acc)
    }

    pub fn rows(&self) -> &[PairCode] {
        &self.rows
    }

    pub fn cols(&self) -> &[PairCode] {
        &self.cols
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn dim(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn total(&self) -> f64 {
        self.data.sum()
    }

    /// Distinct countries in row order.
    pub fn countries(&self) -> Vec<String> {
        distinct(self.rows.iter().map(|l| l.country.as_str()))
    }

    /// Distinct industries in row order.
    pub fn industries(&self) -> Vec<String> {
        distinct(self.rows.iter().map(|l| l.industry.as_str()))
    }

    fn check_square(&self) -> Result<()> {
        let (r, c) = self.data.dim();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        if self.rows != self.cols {
            return Err(Error::InvalidConfig(
                "ICIO row and column labels differ".into(),
            ));
        }
        Ok(())
    }
}

fn distinct<'a, I: Iterator<Item = &'a str>>(iter: I) -> Vec<String> {
    let mut seen = BTreeSet::new();
    iter.filter(|s| seen.insert(*s))
        .map(str::to_string)
        .collect()
}

/// Country merges and dropped codes applied by [`clean_icio`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IcioCleaning {
    /// Country code -> canonical country code.
    pub merge_countries: BTreeMap<String, String>,
    pub drop_countries: Vec<String>,
    pub drop_industries: Vec<String>,
}

impl IcioCleaning {
    /// Settings for the 2021 OECD edition: Chinese and Mexican processing
    /// zones folded into their countries, rest of world and household
    /// employers removed.
    pub fn oecd_2021() -> Self {
        let merge = [
            ("CN1", "CHN"),
            ("CN2", "CHN"),
            ("MX1", "MEX"),
            ("MX2", "MEX"),
        ];
        Self {
            merge_countries: merge
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            drop_countries: vec!["ROW".into()],
            drop_industries: vec!["97T98".into()],
        }
    }
}

/// Mass removed by each cleaning step.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CleaningReport {
    pub input_total: f64,
    /// Flows touching a dropped country or industry.
    pub dropped_mass: f64,
    /// Flows within one (canonical) country.
    pub domestic_mass: f64,
    pub output_total: f64,
    pub countries: usize,
    pub industries: usize,
    /// Configured codes that never occurred in the table.
    pub unknown_codes: Vec<String>,
}

/// Merges countries, drops configured codes and zeroes domestic flows.
///
/// The result is square over the sorted `(country, industry)` grid and must
/// cover every pair of that grid.
pub fn clean_icio(raw: &IcioTensor, cfg: &IcioCleaning) -> Result<(IcioTensor, CleaningReport)> {
    raw.check_square()?;

    let countries: BTreeSet<&str> = raw.rows.iter().map(|l| l.country.as_str()).collect();
    let industries: BTreeSet<&str> = raw.rows.iter().map(|l| l.industry.as_str()).collect();
    let mut unknown_codes = Vec::new();
    for code in cfg.merge_countries.keys().chain(&cfg.drop_countries) {
        if !countries.contains(code.as_str()) {
            unknown_codes.push(code.clone());
        }
    }
    for code in &cfg.drop_industries {
        if !industries.contains(code.as_str()) {
            unknown_codes.push(code.clone());
        }
    }
    for code in &unknown_codes {
        warn!("ICIO cleaning code `{code}` does not occur in the table; ignored");
    }

    let drop_c: BTreeSet<&str> = cfg.drop_countries.iter().map(String::as_str).collect();
    let drop_i: BTreeSet<&str> = cfg.drop_industries.iter().map(String::as_str).collect();
    let canonical: Vec<Option<PairCode>> = raw
        .rows
        .iter()
        .map(|l| {
            let country = cfg.merge_countries.get(&l.country).unwrap_or(&l.country);
            if drop_c.contains(country.as_str())
                || drop_c.contains(l.country.as_str())
                || drop_i.contains(l.industry.as_str())
            {
                None
            } else {
                Some(PairCode {
                    country: country.clone(),
                    industry: l.industry.clone(),
                })
            }
        })
        .collect();

    let labels: Vec<PairCode> = canonical
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&PairCode, usize> = labels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let target: Vec<Option<usize>> = canonical
        .iter()
        .map(|c| c.as_ref().map(|c| index[c]))
        .collect();

    let mut data = Array2::zeros((labels.len(), labels.len()));
    let mut report = CleaningReport {
        input_total: raw.total(),
        unknown_codes,
        ..Default::default()
    };
    for ((i, j), &v) in raw.data.indexed_iter() {
        if v == 0.0 {
            continue;
        }
        match (target[i], target[j]) {
            (Some(a), Some(b)) if labels[a].country == labels[b].country => {
                report.domestic_mass += v
            }
            (Some(a), Some(b)) => data[[a, b]] += v,
            _ => report.dropped_mass += v,
        }
    }

    let out = IcioTensor::square(labels, data)?;
    report.countries = out.countries().len();
    report.industries = out.industries().len();
    report.output_total = out.total();
    if report.countries * report.industries != out.rows.len() {
        return Err(Error::InvalidConfig(format!(
            "cleaned ICIO has {} pairs, expected {} countries x {} industries",
            out.rows.len(),
            report.countries,
            report.industries
        )));
    }
    Ok((out, report))
}

/// Sector-level specialization: for each (country, industry), exports are
/// the row sum and imports the column sum.
pub fn icio_specialization(t: &IcioTensor) -> Result<SpecializationTable> {
    t.check_square()?;
    let mut countries = t.countries();
    let mut industries = t.industries();
    countries.sort();
    industries.sort();
    let ci: HashMap<&str, usize> = countries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let ii: HashMap<&str, usize> = industries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut exports = Array2::zeros((countries.len(), industries.len()));
    let mut imports = Array2::zeros((countries.len(), industries.len()));
    for (k, label) in t.rows.iter().enumerate() {
        let cell = [ci[label.country.as_str()], ii[label.industry.as_str()]];
        exports[cell] = t.data.row(k).sum();
        imports[cell] = t.data.column(k).sum();
    }
    SpecializationTable::from_dense(countries, industries, exports, imports)
}

/// Industry x industry flows, summed over countries on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct IndustryFlows {
    pub industries: Vec<String>,
    pub flows: Array2<f64>,
}

pub fn industry_flows(t: &IcioTensor) -> Result<IndustryFlows> {
    t.check_square()?;
    let mut industries = t.industries();
    industries.sort();
    let ii: HashMap<&str, usize> = industries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let map: Vec<usize> = t.rows.iter().map(|l| ii[l.industry.as_str()]).collect();
    let mut flows = Array2::zeros((industries.len(), industries.len()));
    for ((i, j), &v) in t.data.indexed_iter() {
        flows[[map[i], map[j]]] += v;
    }
    Ok(IndustryFlows { industries, flows })
}

/// Trade intensity of each industry pair: the share of the seller's output
/// going to the buyer over the buyer's share of all flows.
pub fn trade_intensity(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    rca_matrix(m).map_err(|e| match e {
        Error::ZeroFlows(_) => Error::ZeroFlows("industry"),
        other => other,
    })
}

/// Binary industry x industry labels; `1` means the row industry feeds the
/// column industry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    industries: Vec<String>,
    index: HashMap<String, usize>,
    labels: Array2<u8>,
}

/// Labels cells with a trade intensity of at least 1.
pub fn binarize_ti(industries: Vec<String>, ti: &Array2<f64>) -> Result<LabelMatrix> {
    LabelMatrix::new(industries, ti.mapv(|v| u8::from(v >= 1.0)))
}

/// Full label pipeline on a cleaned tensor.
pub fn icio_labels(t: &IcioTensor) -> Result<LabelMatrix> {
    let flows = industry_flows(t)?;
    let ti = trade_intensity(&flows.flows)?;
    binarize_ti(flows.industries, &ti)
}

impl LabelMatrix {
    pub fn new(industries: Vec<String>, labels: Array2<u8>) -> Result<Self> {
        let n = industries.len();
        if labels.dim() != (n, n) {
            let (rows, cols) = labels.dim();
            return Err(Error::NotSquare { rows, cols });
        }
        if labels.iter().any(|&v| v > 1) {
            return Err(Error::InvalidConfig("label entries must be 0 or 1".into()));
        }
        let index: HashMap<String, usize> = industries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        if index.len() != n {
            return Err(Error::InvalidConfig(
                "duplicate industry in label matrix".into(),
            ));
        }
        Ok(Self {
            industries,
            index,
            labels,
        })
    }

    pub fn industries(&self) -> &[String] {
        &self.industries
    }

    pub fn labels(&self) -> &Array2<u8> {
        &self.labels
    }

    pub fn contains(&self, industry: &str) -> bool {
        self.index.contains_key(industry)
    }

    /// `Some(true)` if `input` feeds `output`; `None` if either is unknown.
    pub fn is_link(&self, input: &str, output: &str) -> Option<bool> {
        let i = *self.index.get(input)?;
        let o = *self.index.get(output)?;
        Some(self.labels[[i, o]] == 1)
    }

    /// Share of off-diagonal cells labelled 1.
    pub fn off_diagonal_density(&self) -> f64 {
        let n = self.industries.len();
        if n < 2 {
            return 0.0;
        }
        let ones = self
            .labels
            .indexed_iter()
            .filter(|((i, j), v)| i != j && **v == 1)
            .count();
        ones as f64 / (n * (n - 1)) as f64
    }

    /// Off-diagonal ones as a link set (diagonal cells cannot be links).
    pub fn to_link_set(&self) -> LinkSet {
        let links = self
            .labels
            .indexed_iter()
            .filter(|((i, j), v)| i != j && **v == 1)
            .map(|((i, j), _)| Link {
                output: self.industries[j].clone(),
                input: self.industries[i].clone(),
                merged_rank: 0,
                backward_score: 0,
            })
            .collect();
        LinkSet::new(self.industries.clone(), links).expect("diagonal excluded")
    }

    /// Square CSV with industry codes as row and column headers.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec![String::new()];
        header.extend(self.industries.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.industries.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.labels.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let industries: Vec<String> = rdr
            .headers()?
            .iter()
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let n = industries.len();
        let mut labels = Array2::zeros((n, n));
        let mut count = 0;
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if count >= n || rec.get(0).map(str::trim) != Some(industries[count].as_str()) {
                return Err(Error::MalformedRow {
                    line,
                    message: "row labels must match the column header order".into(),
                });
            }
            for (j, cell) in rec.iter().skip(1).enumerate() {
                labels[[count, j]] = match cell.trim() {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::MalformedRow {
                            line,
                            message: format!("label must be 0 or 1, got {other:?}"),
                        })
                    }
                };
            }
            count += 1;
        }
        if count != n {
            return Err(Error::NotSquare {
                rows: count,
                cols: n,
            });
        }
        Self::new(industries, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pairs(codes: &[&str]) -> Vec<PairCode> {
        codes.iter().map(|c| PairCode::parse(c).unwrap()).collect()
    }

    #[test]
    fn merges_processing_zones() {
        let labels = pairs(&["AUS_A", "CHN_A", "CN1_A", "CN2_A"]);
        let mut data = Array2::zeros((4, 4));
        data[[1, 0]] = 3.0; // CHN -> AUS
        data[[2, 0]] = 4.0; // CN1 -> AUS
        data[[3, 0]] = 3.0; // CN2 -> AUS
        let raw = IcioTensor::square(labels, data).unwrap();
        let (out, report) = clean_icio(&raw, &IcioCleaning::oecd_2021()).unwrap();
        assert_eq!(out.rows(), pairs(&["AUS_A", "CHN_A"]).as_slice());
        assert_eq!(out.data()[[1, 0]], 10.0);
        assert!(report.unknown_codes.contains(&"ROW".to_string()));
    }

    #[test]
    fn zeroes_domestic_blocks_and_keeps_books() {
        let labels = pairs(&[
            "AUS_A",
            "AUS_B",
            "CHN_A",
            "CHN_B",
            "CN1_A",
            "CN1_B",
            "ROW_A",
            "ROW_B",
            "AUS_97T98",
            "CHN_97T98",
            "CN1_97T98",
            "ROW_97T98",
        ]);
        let n = labels.len();
        let data = Array2::from_shape_fn((n, n), |(i, j)| (1 + i * n + j) as f64);
        let raw = IcioTensor::square(labels, data).unwrap();
        let cfg = IcioCleaning::oecd_2021();
        let (out, report) = clean_icio(&raw, &cfg).unwrap();
        assert_eq!(out.dim(), (4, 4));
        assert_eq!(report.countries, 2);
        assert_eq!(report.industries, 2);
        for ((i, j), v) in out.data().indexed_iter() {
            if out.rows()[i].country == out.rows()[j].country {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(
            report.input_total,
            report.output_total + report.dropped_mass + report.domestic_mass
        );
    }

    #[test]
    fn non_square_is_rejected() {
        let raw = IcioTensor::new(
            pairs(&["A_x"]),
            pairs(&["A_x", "B_x"]),
            Array2::zeros((1, 2)),
        )
        .unwrap();
        assert!(matches!(
            clean_icio(&raw, &IcioCleaning::default()),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn reads_intermediate_block() {
        let csv = "V1,AUS_A,AUS_B,FRA_A,FRA_B,AUS_HFCE,OUTPUT\n\
                   AUS_A,1,2,3,4,100,110\n\
                   AUS_B,5,6,7,8,100,126\n\
                   FRA_A,9,10,11,12,100,142\n\
                   FRA_B,13,14,15,16,100,158\n\
                   VA,1,1,1,1,,\n\
                   OUTPUT,30,35,40,45,,\n";
        let t = IcioTensor::read_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.dim(), (4, 4));
        assert_eq!(t.data()[[3, 2]], 15.0);
        assert_eq!(t.countries(), vec!["AUS", "FRA"]);
    }

    #[test]
    fn specialization_by_hand() {
        // Two countries, two industries; domestic flows already zero.
        //            AUS_A AUS_B FRA_A FRA_B
        let data = array![
            [0.0, 0.0, 3.0, 1.0], // AUS_A
            [0.0, 0.0, 0.0, 4.0], // AUS_B
            [2.0, 2.0, 0.0, 0.0], // FRA_A
            [6.0, 0.0, 0.0, 0.0], // FRA_B
        ];
        let t = IcioTensor::square(pairs(&["AUS_A", "AUS_B", "FRA_A", "FRA_B"]), data).unwrap();
        let s = icio_specialization(&t).unwrap();
        // exports: AUS (A 4, B 4), FRA (A 4, B 6), total 18
        // rca_exp FRA_B = (6/10) / (10/18) = 1.08
        let rca = s.rca(crate::Direction::Export);
        assert!((rca[[1, 1]] - 1.08).abs() < 1e-12);
        assert!((rca[[0, 0]] - (4.0 / 8.0) / (8.0 / 18.0)).abs() < 1e-12);
        // imports: AUS (A 8, B 2), FRA (A 3, B 5)
        // rca_imp AUS_B = (2/10) / (7/18)
        let rca = s.rca(crate::Direction::Import);
        assert!((rca[[0, 1]] - (2.0 / 10.0) / (7.0 / 18.0)).abs() < 1e-12);
    }

    #[test]
    fn uniform_tensor_has_unit_rca() {
        let labels = pairs(&["A_x", "A_y", "B_x", "B_y"]);
        let t = IcioTensor::square(labels, Array2::ones((4, 4))).unwrap();
        let s = icio_specialization(&t).unwrap();
        assert!(s
            .rca(crate::Direction::Export)
            .iter()
            .all(|v| (*v - 1.0).abs() < 1e-15));
        assert!(s
            .rca(crate::Direction::Import)
            .iter()
            .all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn industry_flows_sum_over_countries() {
        let labels = pairs(&["A_x", "A_y", "B_x", "B_y"]);
        let data = Array2::from_shape_fn((4, 4), |(i, j)| (i * 4 + j) as f64);
        let t = IcioTensor::square(labels.clone(), data).unwrap();
        let f = industry_flows(&t).unwrap();
        // x->x: (0,0)+(0,2)+(2,0)+(2,2) = 0+2+8+10
        assert_eq!(f.flows, array![[20.0, 24.0], [36.0, 40.0]]);

        let single =
            IcioTensor::square(pairs(&["A_x", "A_y"]), array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(
            industry_flows(&single).unwrap().flows,
            array![[1.0, 2.0], [3.0, 4.0]]
        );
    }

    #[test]
    fn trade_intensity_cases() {
        let r = array![1.0, 2.0, 5.0];
        let c = array![3.0, 1.0, 4.0];
        let outer = Array2::from_shape_fn((3, 3), |(i, j)| r[i] * c[j]);
        let ti = trade_intensity(&outer).unwrap();
        assert!(ti.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let ti = trade_intensity(&array![[4.0, 0.0], [0.0, 4.0]]).unwrap();
        assert_eq!(ti, array![[2.0, 0.0], [0.0, 2.0]]);
        let labels = binarize_ti(vec!["a".into(), "b".into()], &ti).unwrap();
        assert_eq!(labels.labels(), &array![[1, 0], [0, 1]]);

        assert!(matches!(
            trade_intensity(&Array2::zeros((2, 2))),
            Err(Error::ZeroFlows(_))
        ));
        assert!(matches!(
            trade_intensity(&Array2::ones((2, 3))),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn label_csv_round_trip() {
        let m = LabelMatrix::new(
            vec!["01T02".into(), "03".into(), "05T06".into()],
            array![[1, 1, 0], [0, 1, 0], [0, 1, 1]],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(",01T02,03,05T06\n01T02,1,1,0\n"));
        assert_eq!(LabelMatrix::read_csv(buf.as_slice()).unwrap(), m);
        assert_eq!(m.is_link("01T02", "03"), Some(true));
        assert_eq!(m.is_link("03", "01T02"), Some(false));
        assert_eq!(m.is_link("99", "03"), None);
        assert_eq!(m.to_link_set().len(), 2);
    }
}
