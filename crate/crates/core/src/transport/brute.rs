//! Exhaustive vertex enumeration for tiny transport problems.
//!
//! Every vertex of the transportation polytope has a forest support, and a
//! forest has a leaf line. Saturating cell `(i, j)` with `min(a_i, b_j)` and
//! deleting the exhausted line(s) therefore reaches every vertex through some
//! sequence of choices. States are memoised on the remaining lines and their
//! residual masses.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const MAX_SUPPORT: usize = 6;
const TIE: f64 = 1e-14;

type Key = (u8, u8, Vec<u64>);

struct Search<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    memo: HashMap<Key, (f64, Option<(usize, usize)>)>,
}

/// Optimal flows `(i, j, mass)` and their total cost.
type Solution = (Vec<(usize, usize, f64)>, f64);

pub(crate) fn solve(a: &[f64], b: &[f64], cost: &[f64]) -> Result<Solution> {
    let (m, n) = (a.len(), b.len());
    if m > MAX_SUPPORT || n > MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "supports of size {m} and {n}; at most {MAX_SUPPORT} each"
        )));
    }
    let mut search = Search {
        m,
        n,
        cost,
        memo: HashMap::new(),
    };
    let rows = (1u8 << m) - 1;
    let cols = (1u8 << n) - 1;
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let best = search.best(rows, cols, &ra, &rb);

    // replay the memoised choices
    let (mut rows, mut cols) = (rows, cols);
    let mut flows = Vec::new();
    while rows != 0 && cols != 0 {
        let key = key(rows, cols, &ra, &rb);
        let (i, j) = search.memo[&key].1.expect("nonterminal state has a choice");
        let (x, r2, c2) = step(&mut ra, &mut rb, rows, cols, i, j);
        flows.push((i, j, x));
        rows = r2;
        cols = c2;
    }
    flows.sort_by_key(|f| (f.0, f.1));
    Ok((flows, best))
}

fn key(rows: u8, cols: u8, ra: &[f64], rb: &[f64]) -> Key {
    let mut bits = Vec::with_capacity(ra.len() + rb.len());
    for (i, r) in ra.iter().enumerate() {
        if rows >> i & 1 == 1 {
            bits.push(r.to_bits());
        }
    }
    for (j, r) in rb.iter().enumerate() {
        if cols >> j & 1 == 1 {
            bits.push(r.to_bits());
        }
    }
    (rows, cols, bits)
}

fn step(ra: &mut [f64], rb: &mut [f64], rows: u8, cols: u8, i: usize, j: usize) -> (f64, u8, u8) {
    let x = ra[i].min(rb[j]);
    ra[i] -= x;
    rb[j] -= x;
    let mut rows = rows;
    let mut cols = cols;
    if ra[i] <= TIE {
        rows &= !(1 << i);
    }
    if rb[j] <= TIE {
        cols &= !(1 << j);
    }
    (x, rows, cols)
}

impl Search<'_> {
    fn best(&mut self, rows: u8, cols: u8, ra: &[f64], rb: &[f64]) -> f64 {
        if rows == 0 || cols == 0 {
            return 0.0;
        }
        let k = key(rows, cols, ra, rb);
        if let Some(&(c, _)) = self.memo.get(&k) {
            return c;
        }
        let mut best = (f64::INFINITY, None);
        for i in (0..self.m).filter(|i| rows >> i & 1 == 1) {
            for j in (0..self.n).filter(|j| cols >> j & 1 == 1) {
                let mut ra2 = ra.to_vec();
                let mut rb2 = rb.to_vec();
                let (x, r2, c2) = step(&mut ra2, &mut rb2, rows, cols, i, j);
                let c = x * self.cost[i * self.n + j] + self.best(r2, c2, &ra2, &rb2);
                if c < best.0 {
                    best = (c, Some((i, j)));
                }
            }
        }
        self.memo.insert(k, best);
        best.0
    }
}
