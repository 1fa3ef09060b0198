//! Straight-line reference implementation of RCA and Backward & Forward.
//!
//! Deliberately naive: plain nested loops over `Vec<Vec<f64>>`, selection
//! sort, no shared code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

/// Double-normalized share with left-to-right sums.
pub fn rca(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = x.len();
    let cols = if rows == 0 { 0 } else { x[0].len() };
    let mut row_sum = vec![0.0; rows];
    let mut col_sum = vec![0.0; cols];
    let mut total = 0.0;
    for l in 0..rows {
        for p in 0..cols {
            row_sum[l] += x[l][p];
            col_sum[p] += x[l][p];
            total += x[l][p];
        }
    }
    let mut out = vec![vec![0.0; cols]; rows];
    for l in 0..rows {
        for p in 0..cols {
            if x[l][p] > 0.0 && row_sum[l] > 0.0 && col_sum[p] > 0.0 {
                out[l][p] = (x[l][p] / row_sum[l]) / (col_sum[p] / total);
            }
        }
    }
    out
}

fn over(v: f64, t: f64) -> bool {
    v > 0.0 && v >= t
}

/// One candidate: product index, number of specialized locations, and the
/// partner RCA summed over all specialized locations.
#[derive(Debug, Clone, Copy)]
struct Cand {
    product: usize,
    count: usize,
    mean: f64,
}

fn better(a: &Cand, b: &Cand) -> bool {
    if a.count != b.count {
        return a.count > b.count;
    }
    if a.mean != b.mean {
        return a.mean > b.mean;
    }
    a.product < b.product
}

fn ranked(
    source: &[Vec<f64>],
    t_loc: f64,
    partner: &[Vec<f64>],
    t_ind: f64,
    target: usize,
    n: usize,
) -> Vec<Cand> {
    let mut spec = Vec::new();
    for l in 0..source.len() {
        if over(source[l][target], t_loc) {
            spec.push(l);
        }
    }
    let mut pool = Vec::new();
    if spec.is_empty() {
        return pool;
    }
    let products = partner[0].len();
    for c in 0..products {
        if c == target {
            continue;
        }
        let mut count = 0;
        let mut sum = 0.0;
        for &l in &spec {
            sum += partner[l][c];
            if over(partner[l][c], t_ind) {
                count += 1;
            }
        }
        if count > 0 {
            pool.push(Cand {
                product: c,
                count,
                mean: sum / spec.len() as f64,
            });
        }
    }
    let mut out = Vec::new();
    while !pool.is_empty() && out.len() < n {
        let mut best = 0;
        for i in 1..pool.len() {
            if better(&pool[i], &pool[best]) {
                best = i;
            }
        }
        out.push(pool.remove(best));
    }
    out
}

/// Backward list of `target`: `(product, count)`.
pub fn backward(
    rca_exp: &[Vec<f64>],
    rca_imp: &[Vec<f64>],
    target: usize,
    t1: f64,
    t2: f64,
    n: usize,
) -> Vec<(usize, usize)> {
    ranked(rca_exp, t1, rca_imp, t2, target, n)
        .into_iter()
        .map(|c| (c.product, c.count))
        .collect()
}

/// Forward list of `target`: `(product, count)`.
pub fn forward(
    rca_exp: &[Vec<f64>],
    rca_imp: &[Vec<f64>],
    target: usize,
    t3: f64,
    t4: f64,
    n: usize,
) -> Vec<(usize, usize)> {
    ranked(rca_imp, t3, rca_exp, t4, target, n)
        .into_iter()
        .map(|c| (c.product, c.count))
        .collect()
}

/// Merged list of `target`: `(product, backward count, merged rank)`.
///
/// `list_length_fallback` selects `n + 1` for a missing forward position;
/// otherwise the forward list length plus one (never below 2) is used.
pub fn backward_forward(
    rca_exp: &[Vec<f64>],
    rca_imp: &[Vec<f64>],
    target: usize,
    t: [f64; 4],
    n: usize,
    list_length_fallback: bool,
) -> Vec<(usize, usize, usize)> {
    let back = backward(rca_exp, rca_imp, target, t[0], t[1], n);
    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &(c, count)) in back.iter().enumerate() {
        let fwd = forward(rca_exp, rca_imp, c, t[2], t[3], n);
        let mut pos = None;
        for (j, &(q, _)) in fwd.iter().enumerate() {
            if q == target {
                pos = Some(j + 1);
                break;
            }
        }
        let pos = match pos {
            Some(p) => p,
            None if list_length_fallback => n + 1,
            None => std::cmp::max(fwd.len(), 1) + 1,
        };
        let merged = (i + 1) + pos;
        // insertion keeps earlier backward ranks ahead on ties
        let mut at = rows.len();
        while at > 0 && rows[at - 1].2 > merged {
            at -= 1;
        }
        rows.insert(at, (c, count, merged));
    }
    rows
}

/// All links `(input, output, merged rank, backward count)` with the top
/// `k` inputs of every product.
pub fn infer(
    rca_exp: &[Vec<f64>],
    rca_imp: &[Vec<f64>],
    t: [f64; 4],
    n: usize,
    k: usize,
) -> Vec<(usize, usize, usize, usize)> {
    let products = if rca_exp.is_empty() {
        0
    } else {
        rca_exp[0].len()
    };
    let mut out = Vec::new();
    for p in 0..products {
        for (c, count, merged) in backward_forward(rca_exp, rca_imp, p, t, n, false)
            .into_iter()
            .take(k)
        {
            out.push((c, p, merged, count));
        }
    }
    out
}
