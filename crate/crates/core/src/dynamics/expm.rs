//! exp(L·Δt) for real Liouvillians, split into the connected blocks of L's
//! sparsity pattern. The split is exact: L never couples coordinates in
//! different blocks, so neither does any power of L.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Partition of 0..n into groups that L couples.
pub(crate) fn coupled_blocks(l: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = l.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for j in 0..n {
        for i in 0..n {
            if i != j && l[(i, j)] != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

/// exp(L·Δt) stored block by block.
#[derive(Debug, Clone)]
pub struct BlockPropagator {
    dim: usize,
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
}

impl BlockPropagator {
    pub fn new(l: &DMatrix<f64>, dt: f64) -> Self {
        let blocks = coupled_blocks(l)
            .into_iter()
            .map(|idx| {
                let k = idx.len();
                let mut sub = DMatrix::<f64>::zeros(k, k);
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate() {
                        sub[(a, b)] = l[(i, j)] * dt;
                    }
                }
                let e = if k == 1 {
                    DMatrix::from_element(1, 1, sub[(0, 0)].exp())
                } else {
                    sub.exp()
                };
                (idx, e)
            })
            .collect();
        Self { dim: l.nrows(), blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|(i, _)| i.len()).collect()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (idx, e) in &self.blocks {
            let sub = DVector::from_iterator(idx.len(), idx.iter().map(|&i| x[i]));
            let y = e * sub;
            for (a, &i) in idx.iter().enumerate() {
                out[i] = y[a];
            }
        }
        out
    }

    /// Dense exp(L·Δt).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (idx, e) in &self.blocks {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    m[(i, j)] = e[(a, b)];
                }
            }
        }
        m
    }
}

struct Entry {
    l: DMatrix<f64>,
    dt: f64,
    prop: Arc<BlockPropagator>,
}

const CACHE_CAPACITY: usize = 512;

/// Exponential cache keyed by the exact bits of (L, Δt). Lookups compare the
/// full matrix, so a hash collision cannot return a wrong propagator, and the
/// cached value is a pure function of the key: results do not depend on which
/// thread computed an entry first.
pub struct ExpCache {
    map: Mutex<HashMap<u64, Vec<Entry>>>,
}

impl Default for ExpCache {
    fn default() -> Self {
        Self::new()
    }
}

impl ExpCache {
    pub fn new() -> Self {
        Self {
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn global() -> &'static ExpCache {
        static CACHE: OnceLock<ExpCache> = OnceLock::new();
        CACHE.get_or_init(ExpCache::new)
    }

    fn key(l: &DMatrix<f64>, dt: f64) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        dt.to_bits().hash(&mut h);
        for v in l.iter() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    pub fn get_or_compute(&self, l: &DMatrix<f64>, dt: f64) -> Arc<BlockPropagator> {
        let key = Self::key(l, dt);
        {
            let map = self.map.lock().expect("cache lock");
            if let Some(bucket) = map.get(&key) {
                for e in bucket {
                    if e.dt.to_bits() == dt.to_bits() && e.l == *l {
                        return e.prop.clone();
                    }
                }
            }
        }
        let prop = Arc::new(BlockPropagator::new(l, dt));
        let mut map = self.map.lock().expect("cache lock");
        let size: usize = map.values().map(Vec::len).sum();
        if size >= CACHE_CAPACITY {
            map.clear();
        }
        map.entry(key).or_default().push(Entry {
            l: l.clone(),
            dt,
            prop: prop.clone(),
        });
        prop
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().expect("cache lock").clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn blocks_match_dense_exponential() {
        let mut l = DMatrix::<f64>::zeros(6, 6);
        // block {0, 3}, block {1, 2, 5}, singleton {4}
        l[(0, 3)] = 0.4;
        l[(3, 0)] = -0.2;
        l[(0, 0)] = -0.1;
        l[(1, 2)] = 0.3;
        l[(2, 5)] = -0.5;
        l[(5, 1)] = 0.25;
        l[(4, 4)] = -0.7;
        let p = BlockPropagator::new(&l, 1.3);
        let mut sizes = p.block_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 3]);
        let dense = taylor(&(&l * 1.3));
        assert!((p.to_dense() - dense).abs().max() < 1e-13);
    }

    #[test]
    fn rotation_generator_gives_exact_rotation() {
        let w = 2.0e4;
        let mut l = DMatrix::<f64>::zeros(2, 2);
        l[(0, 1)] = -w;
        l[(1, 0)] = w;
        let dt = 1.234e-3;
        let e = BlockPropagator::new(&l, dt).to_dense();
        let (s, c) = (w * dt).sin_cos();
        assert!((e[(0, 0)] - c).abs() < 1e-9);
        assert!((e[(1, 0)] - s).abs() < 1e-9);
    }

    #[test]
    fn cache_returns_shared_entry() {
        let cache = ExpCache::new();
        let l = DMatrix::<f64>::from_diagonal_element(3, 3, -1.0);
        let a = cache.get_or_compute(&l, 0.5);
        let b = cache.get_or_compute(&l, 0.5);
        assert!(Arc::ptr_eq(&a, &b));
        let c = cache.get_or_compute(&l, 0.25);
        assert!(!Arc::ptr_eq(&a, &c));
        assert_eq!(cache.len(), 2);
    }
}
