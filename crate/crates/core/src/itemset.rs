use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest item universe an [`ItemSet`] can address.
pub const MAX_ITEMS: usize = 30;

/// A bundle of items, stored as a bitmask over item indices `0..m`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemSet(u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub const fn from_bits(bits: u32) -> Self {
        ItemSet(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    /// The full universe `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_ITEMS, "item universe of {m} exceeds {MAX_ITEMS}");
        ItemSet(((1u64 << m) - 1) as u32)
    }

    pub fn singleton(item: usize) -> Self {
        assert!(item < MAX_ITEMS);
        ItemSet(1 << item)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Self {
        items.into_iter().fold(ItemSet::EMPTY, |s, e| s.with(e))
    }

    pub fn with(self, item: usize) -> Self {
        ItemSet(self.0 | ItemSet::singleton(item).0)
    }

    pub fn without(self, item: usize) -> Self {
        ItemSet(self.0 & !ItemSet::singleton(item).0)
    }

    pub fn contains(self, item: usize) -> bool {
        item < MAX_ITEMS && self.0 >> item & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ItemSet) -> Self {
        ItemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: ItemSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Item indices in increasing order.
    pub fn iter(self) -> Items {
        Items(self.0)
    }

    /// All subsets of `self` in increasing bitmask order, starting with the
    /// empty set and ending with `self`.
    pub fn subsets(self) -> Subsets {
        Subsets {
            of: self.0,
            next: Some(0),
        }
    }

    /// Errors unless every item lies in `0..m`.
    pub fn check_within(self, m: usize) -> Result<()> {
        if self.is_subset_of(ItemSet::full(m.min(MAX_ITEMS))) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "item set {self:?} references items outside 0..{m}"
            )))
        }
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, e) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ItemSet::from_items(iter)
    }
}

pub struct Items(u32);

impl Iterator for Items {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let e = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(e)
    }
}

pub struct Subsets {
    of: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = ItemSet;

    fn next(&mut self) -> Option<ItemSet> {
        let cur = self.next?;
        self.next = if cur == self.of {
            None
        } else {
            // next submask in increasing numeric order
            Some(cur.wrapping_sub(self.of) & self.of)
        };
        Some(ItemSet(cur))
    }
}
