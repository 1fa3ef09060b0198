//! Revealed comparative advantage of locations in products, for exports and
//! imports.
//!
//! For a flow matrix `X` (locations x products) the RCA of location `l` in
//! product `p` is the location's share of `p` in its own basket divided by
//! `p`'s share of the world basket:
//!
//! ```text
//! rca[l][p] = (X[l][p] / sum_p' X[l][p']) / (sum_l' X[l'][p] / sum_l'p' X[l'][p'])
//! ```
//!
//! A value of at least 1 means the location trades more of the product than
//! expected for its size.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ordered_sum, TradeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Export,
    Import,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Export => "export",
            Direction::Import => "import",
        }
    }
}

/// A location counts as specialized when it has a positive RCA at or above
/// the threshold.
#[inline]
pub(crate) fn is_specialized(rca: f64, threshold: f64) -> bool {
    rca > 0.0 && rca >= threshold
}

/// RCA of every cell of a non-negative flow matrix (locations x products).
///
/// Cells whose row or column total is zero get an RCA of 0.
pub fn rca_matrix(values: &Array2<f64>) -> Result<Array2<f64>> {
    let side = Side::new(values.clone(), "trade")?;
    Ok(side.rca)
}

#[derive(Debug, Clone, PartialEq)]
struct Side {
    values: Array2<f64>,
    location_totals: Vec<f64>,
    product_totals: Vec<f64>,
    total: f64,
    rca: Array2<f64>,
}

impl Side {
    fn new(values: Array2<f64>, label: &'static str) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "{label} flows must be finite and non-negative, found {bad}"
            )));
        }
        let location_totals: Vec<f64> = values.rows().into_iter().map(|r| r.sum()).collect();
        let product_totals: Vec<f64> = values.columns().into_iter().map(|c| c.sum()).collect();
        let total: f64 = location_totals.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroFlows(label));
        }
        let rca = Array2::from_shape_fn(values.dim(), |(l, p)| {
            let x = values[[l, p]];
            let row = location_totals[l];
            let col = product_totals[p];
            if x > 0.0 && row > 0.0 && col > 0.0 {
                (x / row) / (col / total)
            } else {
                0.0
            }
        });
        Ok(Self {
            values,
            location_totals,
            product_totals,
            total,
            rca,
        })
    }
}

/// Export and import RCA for every (location, product) pair.
///
/// Immutable once built; all queries take `&self`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecializationTable {
    locations: Vec<String>,
    products: Vec<String>,
    location_index: HashMap<String, usize>,
    product_index: HashMap<String, usize>,
    exports: Side,
    imports: Side,
}

/// One row of the CSV dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecializationRow {
    pub geography: String,
    pub value_imp: f64,
    pub product: String,
    pub geography_imp: f64,
    pub product_imp: f64,
    pub rca_imp: f64,
    pub value_exp: f64,
    pub geography_exp: f64,
    pub product_exp: f64,
    pub rca_exp: f64,
}

#[derive(Debug, Deserialize)]
struct FlowRow {
    geography: String,
    product: String,
    value_imp: f64,
    value_exp: f64,
}

impl SpecializationTable {
    /// Builds the table from dense export and import matrices
    /// (locations x products).
    pub fn from_dense(
        locations: Vec<String>,
        products: Vec<String>,
        exports: Array2<f64>,
        imports: Array2<f64>,
    ) -> Result<Self> {
        let shape = (locations.len(), products.len());
        if exports.dim() != shape || imports.dim() != shape {
            return Err(Error::InvalidConfig(format!(
                "flow matrices must be {} x {}, got {:?} and {:?}",
                shape.0,
                shape.1,
                exports.dim(),
                imports.dim()
            )));
        }
        let location_index = index_of(&locations, "location")?;
        let product_index = index_of(&products, "product")?;
        Ok(Self {
            exports: Side::new(exports, Direction::Export.as_str())?,
            imports: Side::new(imports, Direction::Import.as_str())?,
            locations,
            products,
            location_index,
            product_index,
        })
    }

    /// Builds the table from a pooled trade table. Locations and products are
    /// ordered by name.
    pub fn from_trade(t: &TradeTable) -> Result<Self> {
        let locations: Vec<String> = t.geographies().map(str::to_string).collect();
        let products: Vec<String> = t.products().map(str::to_string).collect();
        let li: HashMap<&str, usize> = locations
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let pi: HashMap<&str, usize> = products
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut exports = Array2::zeros((locations.len(), products.len()));
        let mut imports = Array2::zeros((locations.len(), products.len()));
        for r in t.records() {
            let idx = [li[r.geography.as_str()], pi[r.product.as_str()]];
            exports[idx] = r.value_exp;
            imports[idx] = r.value_imp;
        }
        Self::from_dense(locations, products, exports, imports)
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn product_index(&self, product: &str) -> Result<usize> {
        self.product_index
            .get(product)
            .copied()
            .ok_or_else(|| Error::UnknownProduct(product.to_string()))
    }

    pub fn location_index(&self, location: &str) -> Option<usize> {
        self.location_index.get(location).copied()
    }

    fn side(&self, direction: Direction) -> &Side {
        match direction {
            Direction::Export => &self.exports,
            Direction::Import => &self.imports,
        }
    }

    /// RCA matrix (locations x products) for one direction.
    pub fn rca(&self, direction: Direction) -> &Array2<f64> {
        &self.side(direction).rca
    }

    pub fn values(&self, direction: Direction) -> &Array2<f64> {
        &self.side(direction).values
    }

    pub fn location_total(&self, direction: Direction, location: usize) -> f64 {
        self.side(direction).location_totals[location]
    }

    pub fn product_total(&self, direction: Direction, product: usize) -> f64 {
        self.side(direction).product_totals[product]
    }

    pub fn total(&self, direction: Direction) -> f64 {
        self.side(direction).total
    }

    /// Locations specialized in `product` at `threshold`, by RCA descending
    /// and then by name.
    pub fn specialized_locations(
        &self,
        product: &str,
        threshold: f64,
        direction: Direction,
    ) -> Result<Vec<(String, f64)>> {
        let p = self.product_index(product)?;
        let rca = self.rca(direction);
        let mut hits: Vec<(String, f64)> = (0..self.locations.len())
            .filter(|&l| is_specialized(rca[[l, p]], threshold))
            .map(|l| (self.locations[l].clone(), rca[[l, p]]))
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(hits)
    }

    /// Rows for every pair with non-zero trade in either direction.
    pub fn rows(&self) -> impl Iterator<Item = SpecializationRow> + '_ {
        let (nl, np) = (self.locations.len(), self.products.len());
        (0..nl)
            .flat_map(move |l| (0..np).map(move |p| (l, p)))
            .filter(|&(l, p)| {
                self.exports.values[[l, p]] > 0.0 || self.imports.values[[l, p]] > 0.0
            })
            .map(|(l, p)| SpecializationRow {
                geography: self.locations[l].clone(),
                value_imp: self.imports.values[[l, p]],
                product: self.products[p].clone(),
                geography_imp: self.imports.location_totals[l],
                product_imp: self.imports.product_totals[p],
                rca_imp: self.imports.rca[[l, p]],
                value_exp: self.exports.values[[l, p]],
                geography_exp: self.exports.location_totals[l],
                product_exp: self.exports.product_totals[p],
                rca_exp: self.exports.rca[[l, p]],
            })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`write_csv`](Self::write_csv). Only the flow
    /// columns are used; totals and RCAs are recomputed.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for row in rdr.deserialize::<FlowRow>() {
            rows.push(row?);
        }
        let locations: BTreeSet<&str> = rows.iter().map(|r| r.geography.as_str()).collect();
        let products: BTreeSet<&str> = rows.iter().map(|r| r.product.as_str()).collect();
        let locations: Vec<String> = locations.into_iter().map(str::to_string).collect();
        let products: Vec<String> = products.into_iter().map(str::to_string).collect();
        let li = index_of(&locations, "location")?;
        let pi = index_of(&products, "product")?;
        let mut exp_cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        let mut imp_cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        for r in &rows {
            let key = (li[&r.geography], pi[&r.product]);
            exp_cells.entry(key).or_default().push(r.value_exp);
            imp_cells.entry(key).or_default().push(r.value_imp);
        }
        let mut exports = Array2::zeros((locations.len(), products.len()));
        let mut imports = Array2::zeros((locations.len(), products.len()));
        for ((l, p), mut v) in exp_cells {
            exports[[l, p]] = ordered_sum(&mut v);
        }
        for ((l, p), mut v) in imp_cells {
            imports[[l, p]] = ordered_sum(&mut v);
        }
        Self::from_dense(locations, products, exports, imports)
    }
}

fn index_of(names: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(Error::InvalidConfig(format!("duplicate {what} `{name}`")));
        }
    }
    Ok(index)
}
