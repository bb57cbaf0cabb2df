use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::MultiIndex;

/// Index tables for dense jets in `nvars` variables up to a maximal order.
///
/// Monomials are stored graded: every monomial of degree `d` precedes every
/// monomial of degree `d + 1`, so a jet truncated at order `k` is a prefix of
/// the coefficient array. Product and derivative tables are sorted by the
/// degree of the monomial they write to, which makes truncated products and
/// derivatives prefix scans as well.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    max_order: usize,
    monomials: Vec<MultiIndex>,
    degree_end: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    product: Vec<[u32; 3]>,
    product_end: Vec<usize>,
    derivative: Vec<Vec<(u32, u32, u32)>>,
    derivative_end: Vec<Vec<usize>>,
    factorial: Vec<f64>,
}

fn monomials_of_degree(nvars: usize, degree: usize, out: &mut Vec<MultiIndex>) {
    fn rec(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if pos + 1 == cur.len() {
            cur[pos] = left as u8;
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e as u8;
            rec(pos + 1, left - e, cur, out);
        }
        cur[pos] = 0;
    }
    let mut cur = vec![0u8; nvars];
    rec(0, degree, &mut cur, out);
}

impl JetSpace {
    fn build(nvars: usize, max_order: usize) -> Self {
        assert!(nvars >= 1, "jet space needs at least one variable");
        assert!(max_order < 64, "jet order too large");

        let mut monomials = Vec::new();
        let mut degree_end = Vec::with_capacity(max_order + 1);
        for d in 0..=max_order {
            monomials_of_degree(nvars, d, &mut monomials);
            degree_end.push(monomials.len());
        }
        let lookup: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.exponents().to_vec(), i))
            .collect();

        let mut product: Vec<[u32; 3]> = Vec::new();
        let mut sum = vec![0u8; nvars];
        for (i, a) in monomials.iter().enumerate() {
            let room = max_order - a.order();
            for (j, b) in monomials[..degree_end[room]].iter().enumerate() {
                for v in 0..nvars {
                    sum[v] = a.exponents()[v] + b.exponents()[v];
                }
                let k = lookup[&sum];
                product.push([i as u32, j as u32, k as u32]);
            }
        }
        product.sort_by_key(|t| (t[2], t[0], t[1]));
        let product_end = (0..=max_order)
            .map(|d| product.partition_point(|t| (t[2] as usize) < degree_end[d]))
            .collect();

        let mut derivative = Vec::with_capacity(nvars);
        let mut derivative_end = Vec::with_capacity(nvars);
        for v in 0..nvars {
            let mut table = Vec::new();
            for (src, m) in monomials.iter().enumerate() {
                let e = m.exponents()[v];
                if e == 0 {
                    continue;
                }
                let mut lowered = m.exponents().to_vec();
                lowered[v] -= 1;
                table.push((src as u32, lookup[&lowered] as u32, e as u32));
            }
            table.sort_by_key(|t| t.1);
            let ends = (0..max_order)
                .map(|d| table.partition_point(|t| (t.1 as usize) < degree_end[d]))
                .collect();
            derivative.push(table);
            derivative_end.push(ends);
        }

        let factorial = monomials
            .iter()
            .map(|m| {
                m.exponents()
                    .iter()
                    .map(|&e| (1..=e as u64).product::<u64>() as f64)
                    .product()
            })
            .collect();

        JetSpace {
            nvars,
            max_order,
            monomials,
            degree_end,
            lookup,
            product,
            product_end,
            derivative,
            derivative_end,
            factorial,
        }
    }

    /// Returns the process-wide shared space for `(nvars, max_order)`.
    pub fn shared(nvars: usize, max_order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, max_order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, max_order)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of degree at most `order`.
    pub fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn monomial(&self, i: usize) -> &MultiIndex {
        &self.monomials[i]
    }

    pub fn monomials(&self, order: usize) -> &[MultiIndex] {
        &self.monomials[..self.degree_end[order]]
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.lookup.get(m.exponents()).copied()
    }

    pub(crate) fn product_table(&self, order: usize) -> &[[u32; 3]] {
        &self.product[..self.product_end[order]]
    }

    /// Derivative table for variable `v` feeding a result of order `order`.
    pub(crate) fn derivative_table(&self, v: usize, order: usize) -> &[(u32, u32, u32)] {
        &self.derivative[v][..self.derivative_end[v][order]]
    }

    pub(crate) fn factorial(&self, i: usize) -> f64 {
        self.factorial[i]
    }
}
