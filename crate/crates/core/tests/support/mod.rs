#![allow(dead_code)]

pub mod oracle;

use ndarray::Array2;
use rand::Rng;
use valuechain::icio::LabelMatrix;
use valuechain::{Direction, LinkSet, SpecializationTable};

pub fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Export and import RCA of a table as nested vectors.
pub fn rca_rows(s: &SpecializationTable) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        to_rows(s.rca(Direction::Export)),
        to_rows(s.rca(Direction::Import)),
    )
}

/// Integer flows in `0..=max`, about `zeros` of them zero, with at least one
/// positive cell.
pub fn random_flows<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    max: u32,
    zeros: f64,
) -> Array2<f64> {
    let mut a = Array2::from_shape_fn((rows, cols), |_| {
        if rng.random_bool(zeros) {
            0.0
        } else {
            f64::from(rng.random_range(1..=max))
        }
    });
    if a.sum() == 0.0 {
        a[[0, 0]] = 1.0;
    }
    a
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

pub fn random_table<R: Rng>(
    rng: &mut R,
    max_locations: usize,
    max_products: usize,
) -> SpecializationTable {
    let l = rng.random_range(2..=max_locations);
    let p = rng.random_range(2..=max_products);
    let zeros = rng.random_range(0.0..0.6);
    let max = rng.random_range(1..=50);
    SpecializationTable::from_dense(
        names("L", l),
        names("P", p),
        random_flows(rng, l, p, max, zeros),
        random_flows(rng, l, p, max, zeros),
    )
    .unwrap()
}

/// Label matrix over `products` whose ones are exactly the links of `truth`.
pub fn labels_from(products: &[String], truth: &LinkSet) -> LabelMatrix {
    let n = products.len();
    let labels = Array2::from_shape_fn((n, n), |(i, j)| {
        u8::from(truth.contains(&products[i], &products[j]))
    });
    LabelMatrix::new(products.to_vec(), labels).unwrap()
}
