//! Canonical numbering of the `2^k` "which attributes differ" classes.
//!
//! Class 0 is the empty set (input reproduced exactly), class `2^k - 1` is the
//! full set. In between, classes are grouped by subset size and ordered
//! lexicographically (as sorted index tuples) within each size block.
//! Attributes are 0-based here.

use crate::error::{Error, Result};
use crate::types::AttributeSchema;
use crate::Real;

/// Largest `k` for which a full class index may be built (`2^k` classes).
pub const MAX_INDEX_K: usize = 24;

#[derive(Debug, Clone)]
pub struct SubsetIndex {
    k: usize,
    /// Bitmask of each class, in class order.
    masks: Vec<u32>,
    /// Inverse of `masks`: class index for each bitmask.
    class_of_mask: Vec<u32>,
    /// `offsets[h]` is the first class whose subset has `h + 1` elements.
    offsets: Vec<usize>,
    /// Multiplicity `∏_{s∈S_j} (a_s - 1)` of each class.
    multiplicity: Vec<Real>,
}

pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All `h`-element subsets of `0..k` as bitmasks, lexicographic by sorted tuple.
fn combinations(k: usize, h: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(k, h) as usize);
    if h == 0 {
        out.push(0);
        return out;
    }
    let mut idx: Vec<usize> = (0..h).collect();
    loop {
        out.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
        // advance to the next combination
        let mut pos = h;
        while pos > 0 {
            pos -= 1;
            if idx[pos] < k - h + pos {
                idx[pos] += 1;
                for q in pos + 1..h {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

impl SubsetIndex {
    pub fn build(schema: &AttributeSchema) -> Result<SubsetIndex> {
        let k = schema.k();
        if k > MAX_INDEX_K {
            return Err(Error::TooLarge {
                what: "subset class index",
                size: 1u128.checked_shl(k as u32).unwrap_or(u128::MAX),
                cap: 1u128 << MAX_INDEX_K,
            });
        }
        let mut index = SubsetIndex::for_k(k)?;
        index.multiplicity = index
            .masks
            .iter()
            .map(|&m| {
                (0..k)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| Real::from_u64(schema.size(i) as u64 - 1))
                    .product()
            })
            .collect();
        Ok(index)
    }

    /// Index that depends on `k` only; multiplicities are all 1.
    pub fn for_k(k: usize) -> Result<SubsetIndex> {
        if k == 0 {
            return Err(Error::EmptySchema);
        }
        if k > MAX_INDEX_K {
            return Err(Error::TooLarge {
                what: "subset class index",
                size: 1u128.checked_shl(k as u32).unwrap_or(u128::MAX),
                cap: 1u128 << MAX_INDEX_K,
            });
        }
        let n = 1usize << k;
        let mut masks = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(k);
        for h in 0..=k {
            if h >= 1 {
                offsets.push(masks.len());
            }
            masks.extend(combinations(k, h));
        }
        let mut class_of_mask = vec![0u32; n];
        for (j, &m) in masks.iter().enumerate() {
            class_of_mask[m as usize] = j as u32;
        }
        Ok(SubsetIndex {
            k,
            masks,
            class_of_mask,
            offsets,
            multiplicity: vec![Real::ONE; n],
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_classes(&self) -> usize {
        self.masks.len()
    }

    /// Attribute set of class `j` as a bitmask.
    pub fn mask(&self, j: usize) -> Result<u32> {
        self.masks.get(j).copied().ok_or(Error::ClassOutOfRange {
            index: j,
            classes: self.masks.len(),
        })
    }

    /// Attribute set of class `j`, ascending.
    pub fn subset_of(&self, j: usize) -> Result<Vec<usize>> {
        let m = self.mask(j)?;
        Ok((0..self.k).filter(|i| m & (1 << i) != 0).collect())
    }

    pub fn index_of(&self, subset: &[usize]) -> Result<usize> {
        let mut m = 0u32;
        for &i in subset {
            if i >= self.k {
                return Err(Error::AttributeOutOfRange { index: i, k: self.k });
            }
            m |= 1 << i;
        }
        Ok(self.class_of_mask[m as usize] as usize)
    }

    pub fn index_of_mask(&self, mask: u32) -> usize {
        self.class_of_mask[mask as usize] as usize
    }

    /// Block offsets: `offsets()[h]` is the first class with `h + 1` elements,
    /// i.e. `1 + C(k,1) + ... + C(k,h)`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Classes whose subset has exactly `h` elements.
    pub fn block(&self, h: usize) -> std::ops::Range<usize> {
        let start = if h == 0 { 0 } else { self.offsets[h - 1] };
        let end = if h == self.k { self.masks.len() } else { self.offsets[h] };
        start..end
    }

    pub fn multiplicity(&self, j: usize) -> Real {
        self.multiplicity[j]
    }

    pub fn multiplicities(&self) -> &[Real] {
        &self.multiplicity
    }

    pub fn size_of(&self, j: usize) -> usize {
        self.masks[j].count_ones() as usize
    }

    pub fn contains(&self, j: usize, attribute: usize) -> bool {
        self.masks[j] & (1 << attribute) != 0
    }
}
