//! Multi-dimensional element indexing: keys, hashing, child/parent relations,
//! and sparse/full-grid enumeration.
//!
//! An element is identified by a level vector `l` and a support vector `j`
//! with `j_m = 0` when `l_m = 0` and `0 <= j_m < 2^(l_m - 1)` otherwise. The
//! index sets used by the solver are always downward closed: every parent of
//! a member is a member.

use std::collections::HashMap;

use crate::basis1d::{elem_code, supports_at_level};
use crate::error::{Error, Result};

/// Multi-index of one active element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementKey {
    levels: Vec<u8>,
    supports: Vec<u32>,
}

impl ElementKey {
    pub fn new(levels: Vec<u8>, supports: Vec<u32>) -> Result<Self> {
        if levels.len() != supports.len() {
            return Err(Error::InvalidKey(format!(
                "{} levels vs {} supports",
                levels.len(),
                supports.len()
            )));
        }
        for (m, (&l, &j)) in levels.iter().zip(&supports).enumerate() {
            let bound = supports_at_level(l as usize) as u64;
            if j as u64 >= bound {
                return Err(Error::InvalidKey(format!(
                    "dimension {m}: support {j} out of range for level {l}"
                )));
            }
        }
        Ok(Self { levels, supports })
    }

    pub fn root(dim: usize) -> Self {
        Self {
            levels: vec![0; dim],
            supports: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn supports(&self) -> &[u32] {
        &self.supports
    }

    pub fn level(&self, m: usize) -> usize {
        self.levels[m] as usize
    }

    pub fn support(&self, m: usize) -> usize {
        self.supports[m] as usize
    }

    pub fn level_sum(&self) -> usize {
        self.levels.iter().map(|&l| l as usize).sum()
    }

    pub fn level_max(&self) -> usize {
        self.levels.iter().map(|&l| l as usize).max().unwrap_or(0)
    }

    pub fn is_root(&self) -> bool {
        self.levels.iter().all(|&l| l == 0)
    }

    /// Dyadic element code of the 1D component in dimension `m`.
    pub fn code(&self, m: usize) -> usize {
        elem_code(self.level(m), self.support(m))
    }

    /// All children admissible under the max-level cap `n_max`: one per
    /// dimension when leaving level 0, two (halved supports) otherwise.
    pub fn children(&self, n_max: usize) -> Vec<ElementKey> {
        let mut out = Vec::new();
        for m in 0..self.dim() {
            let l = self.level(m);
            if l + 1 > n_max {
                continue;
            }
            let mut mk = |j_new: u32| {
                let mut levels = self.levels.clone();
                let mut supports = self.supports.clone();
                levels[m] = (l + 1) as u8;
                supports[m] = j_new;
                out.push(ElementKey { levels, supports });
            };
            if l == 0 {
                mk(0);
            } else {
                let j = self.supports[m];
                mk(2 * j);
                mk(2 * j + 1);
            }
        }
        out
    }

    /// Inverse of [`ElementKey::children`]; empty for the root.
    pub fn parents(&self) -> Vec<ElementKey> {
        let mut out = Vec::new();
        for m in 0..self.dim() {
            let l = self.level(m);
            if l == 0 {
                continue;
            }
            let mut levels = self.levels.clone();
            let mut supports = self.supports.clone();
            levels[m] = (l - 1) as u8;
            supports[m] = if l == 1 { 0 } else { self.supports[m] / 2 };
            out.push(ElementKey { levels, supports });
        }
        out
    }
}

impl std::fmt::Display for ElementKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "l=(")?;
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ") j=(")?;
        for (i, j) in self.supports.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, ")")
    }
}

/// Packs a key into 64 bits, one fixed-width dyadic code per dimension.
///
/// Injective whenever every per-dimension code fits its field, which covers
/// all benchmark configurations (d <= 4 with levels up to 64/d bits). Keys
/// beyond that range report a level overflow; the element maps themselves
/// are keyed by the full `ElementKey`, so correctness never rides on this
/// hash. No ordering is implied by the packed value.
pub fn hash_key(key: &ElementKey) -> Result<u64> {
    let d = key.dim();
    if d == 0 {
        return Err(Error::InvalidKey("zero-dimensional key".into()));
    }
    if d <= 4 {
        let bits = 64 / d;
        let mut word = 0u64;
        for m in 0..d {
            let code = key.code(m) as u64;
            if bits < 64 && code >= (1u64 << bits) {
                return Err(Error::LevelOverflow(format!(
                    "dimension {m}: level {} does not fit {bits}-bit field",
                    key.level(m)
                )));
            }
            word |= code << (m * bits);
        }
        Ok(word)
    } else {
        // FNV-1a mixing hash; deterministic but not injective.
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        };
        for &l in &key.levels {
            eat(l);
        }
        for &j in &key.supports {
            for b in j.to_le_bytes() {
                eat(b);
            }
        }
        Ok(h)
    }
}

/// Downward-closed element set carrying a payload per element.
#[derive(Debug, Clone)]
pub struct IndexSet<P> {
    pub n_max: usize,
    pub sparse: bool,
    map: HashMap<ElementKey, P>,
}

impl<P> IndexSet<P> {
    pub fn empty(n_max: usize, sparse: bool) -> Self {
        Self {
            n_max,
            sparse,
            map: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn contains(&self, key: &ElementKey) -> bool {
        self.map.contains_key(key)
    }

    pub fn get(&self, key: &ElementKey) -> Option<&P> {
        self.map.get(key)
    }

    pub fn get_mut(&mut self, key: &ElementKey) -> Option<&mut P> {
        self.map.get_mut(key)
    }

    pub fn insert(&mut self, key: ElementKey, payload: P) -> Option<P> {
        self.map.insert(key, payload)
    }

    pub fn remove(&mut self, key: &ElementKey) -> Option<P> {
        self.map.remove(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &ElementKey> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ElementKey, &P)> {
        self.map.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&ElementKey, &mut P)> {
        self.map.iter_mut()
    }

    pub fn values(&self) -> impl Iterator<Item = &P> {
        self.map.values()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut P> {
        self.map.values_mut()
    }

    /// Every parent of every member is a member.
    pub fn is_downward_closed(&self) -> bool {
        self.map
            .keys()
            .all(|k| k.parents().iter().all(|p| self.map.contains_key(p)))
    }
}

/// Keys of the initial approximation space: `|l|_1 <= n` when sparse,
/// `|l|_inf <= n` when full. Both are downward closed.
pub fn enumerate_initial(dim: usize, n: usize, sparse: bool) -> Vec<ElementKey> {
    let mut keys = Vec::new();
    let mut levels = vec![0u8; dim];
    enumerate_levels(dim, n, sparse, 0, &mut levels, &mut keys);
    keys
}

fn enumerate_levels(
    dim: usize,
    n: usize,
    sparse: bool,
    m: usize,
    levels: &mut Vec<u8>,
    keys: &mut Vec<ElementKey>,
) {
    if m == dim {
        let mut supports = vec![0u32; dim];
        enumerate_supports(levels, 0, &mut supports, keys);
        return;
    }
    let used: usize = levels[..m].iter().map(|&l| l as usize).sum();
    let cap = if sparse { n - used } else { n };
    for l in 0..=cap {
        levels[m] = l as u8;
        enumerate_levels(dim, n, sparse, m + 1, levels, keys);
    }
    levels[m] = 0;
}

fn enumerate_supports(
    levels: &[u8],
    m: usize,
    supports: &mut Vec<u32>,
    keys: &mut Vec<ElementKey>,
) {
    if m == levels.len() {
        keys.push(ElementKey {
            levels: levels.to_vec(),
            supports: supports.clone(),
        });
        return;
    }
    for j in 0..supports_at_level(levels[m] as usize) {
        supports[m] = j as u32;
        enumerate_supports(levels, m + 1, supports, keys);
    }
    supports[m] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn key(levels: &[u8], supports: &[u32]) -> ElementKey {
        ElementKey::new(levels.to_vec(), supports.to_vec()).unwrap()
    }

    #[test]
    fn key_validation() {
        assert!(ElementKey::new(vec![0], vec![1]).is_err());
        assert!(ElementKey::new(vec![2], vec![2]).is_err());
        assert!(ElementKey::new(vec![2], vec![1]).is_ok());
        assert!(ElementKey::new(vec![1, 2], vec![0]).is_err());
    }

    #[test]
    fn children_1d() {
        let n = 3;
        assert_eq!(key(&[0], &[0]).children(n), vec![key(&[1], &[0])]);
        assert_eq!(
            key(&[1], &[0]).children(n),
            vec![key(&[2], &[0]), key(&[2], &[1])]
        );
        // at the cap there are no children
        assert!(key(&[3], &[3]).children(n).is_empty());
    }

    #[test]
    fn children_2d_root() {
        let root = ElementKey::root(2);
        let kids = root.children(1);
        assert_eq!(kids, vec![key(&[1, 0], &[0, 0]), key(&[0, 1], &[0, 0])]);
    }

    #[test]
    fn parents_inverse_of_children() {
        assert!(ElementKey::root(2).parents().is_empty());
        assert_eq!(key(&[2], &[1]).parents(), vec![key(&[1], &[0])]);
        // exhaustive round trip for d <= 3, N <= 4
        for d in 1..=3usize {
            let all = enumerate_initial(d, 4, false);
            let set: HashSet<_> = all.iter().cloned().collect();
            for e in &all {
                for c in e.children(4) {
                    assert!(c.parents().contains(e), "{e} not parent of {c}");
                    assert!(set.contains(&c));
                }
                for p in e.parents() {
                    assert!(p.children(4).contains(e), "{e} not child of {p}");
                }
            }
        }
    }

    #[test]
    fn hash_is_deterministic_and_collision_free() {
        let keys = enumerate_initial(2, 6, false);
        let mut seen = HashSet::new();
        for k in &keys {
            let h = hash_key(k).unwrap();
            assert_eq!(h, hash_key(k).unwrap());
            assert!(seen.insert(h), "collision at {k}");
        }
    }

    #[test]
    fn hash_overflow_reported() {
        // 4 dimensions leave 16 bits per field; level 17 does not fit
        let k = key(&[17, 0, 0, 0], &[0, 0, 0, 0]);
        assert!(matches!(hash_key(&k), Err(Error::LevelOverflow(_))));
    }

    #[test]
    fn enumeration_counts_match_tables() {
        // (k+1)^d * number of supports
        let count = |d: usize, n: usize, k: usize, sparse: bool| {
            enumerate_initial(d, n, sparse).len() * (k + 1).pow(d as u32)
        };
        assert_eq!(count(2, 5, 1, true), 448);
        assert_eq!(count(2, 6, 1, true), 1024);
        assert_eq!(count(2, 7, 1, true), 2304);
        assert_eq!(count(3, 4, 1, true), 832);
        assert_eq!(count(3, 5, 1, true), 2176);
        assert_eq!(count(2, 4, 2, true), 432);
        assert_eq!(count(2, 5, 2, true), 1008);
    }

    #[test]
    fn sparse_equals_full_in_1d() {
        for n in 0..=6 {
            assert_eq!(
                enumerate_initial(1, n, true),
                enumerate_initial(1, n, false)
            );
        }
    }

    #[test]
    fn initial_sets_downward_closed() {
        for &sparse in &[true, false] {
            let mut set = IndexSet::empty(3, sparse);
            for k in enumerate_initial(3, 3, sparse) {
                set.insert(k, ());
            }
            assert!(set.is_downward_closed());
        }
    }

    #[test]
    fn dof_growth_ratio_is_tame() {
        // d=2, k=1: successive-N DOF ratios stay below 2.5 for N=4..9
        let dof = |n: usize| enumerate_initial(2, n, true).len() * 4;
        let mut prev = dof(4);
        for n in 5..=9 {
            let cur = dof(n);
            let ratio = cur as f64 / prev as f64;
            assert!(ratio > 1.0 && ratio < 2.5, "N={n}: ratio {ratio}");
            prev = cur;
        }
    }
}
