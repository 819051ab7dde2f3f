//! Dense bit set over the point indices of one projective space. Factor
//! point sets and part-disjointness tests live on these, so the word-level
//! ops are the hot path of partition verification.

/// Set of point indices below a fixed universe size.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PointSet {
    universe: u32,
    bits: Vec<u64>,
}

impl PointSet {
    pub fn empty(universe: u32) -> PointSet {
        PointSet { universe, bits: vec![0; Self::words(universe)] }
    }

    pub fn full(universe: u32) -> PointSet {
        let mut s = PointSet { universe, bits: vec![!0u64; Self::words(universe)] };
        s.trim();
        s
    }

    fn words(universe: u32) -> usize {
        (universe as usize).div_ceil(64)
    }

    fn trim(&mut self) {
        let extra = (self.universe as usize) % 64;
        if extra != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u64 << extra) - 1;
            }
        }
    }

    pub fn universe(&self) -> u32 {
        self.universe
    }

    #[inline]
    pub fn insert(&mut self, idx: u32) {
        debug_assert!(idx < self.universe);
        self.bits[(idx / 64) as usize] |= 1u64 << (idx % 64);
    }

    #[inline]
    pub fn remove(&mut self, idx: u32) {
        self.bits[(idx / 64) as usize] &= !(1u64 << (idx % 64));
    }

    #[inline]
    pub fn contains(&self, idx: u32) -> bool {
        idx < self.universe && self.bits[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    pub fn len(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        self.bits.iter().zip(&other.bits).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        debug_assert_eq!(self.universe, other.universe);
        PointSet {
            universe: self.universe,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        debug_assert_eq!(self.universe, other.universe);
        PointSet {
            universe: self.universe,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        debug_assert_eq!(self.universe, other.universe);
        PointSet {
            universe: self.universe,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & !b).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &bits)| {
            let base = (w * 64) as u32;
            let mut rest = bits;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros();
                rest &= rest - 1;
                Some(base + tz)
            })
        })
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(universe: u32, indices: I) -> PointSet {
        let mut s = PointSet::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }
}

impl std::fmt::Debug for PointSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
