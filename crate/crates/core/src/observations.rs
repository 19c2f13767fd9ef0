//! Partially observed binary matrix `Y` with its observed index set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed cell: zero-based row `i`, column `j` and the binary outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub y: u8,
}

/// Cell code used by the sampler: unobserved, observed zero or observed one.
pub(crate) const UNOBSERVED: i8 = -1;

/// Binary `p x q` matrix observed on the index set `omega`.
///
/// Entries are kept sorted in row-major order. A dense per-cell code table
/// is kept alongside so membership tests are O(1) inside the Gibbs sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryObservationMatrix {
    p: usize,
    q: usize,
    entries: Vec<Entry>,
    codes: Vec<i8>,
}

impl BinaryObservationMatrix {
    /// Build from `(i, j, y)` triplets. Rejects duplicates, out-of-range
    /// cells and non-binary outcomes. An empty entry list is allowed here;
    /// fitting rejects it.
    pub fn new(p: usize, q: usize, entries: impl IntoIterator<Item = Entry>) -> Result<Self> {
        let mut codes = vec![UNOBSERVED; p * q];
        let mut list = Vec::new();
        for e in entries {
            if e.i >= p || e.j >= q {
                return Err(Error::Index { i: e.i, j: e.j, p, q });
            }
            if e.y > 1 {
                return Err(Error::Argument(format!(
                    "outcome at ({}, {}) is {}, expected 0 or 1",
                    e.i, e.j, e.y
                )));
            }
            let code = &mut codes[e.i * q + e.j];
            if *code != UNOBSERVED {
                return Err(Error::Argument(format!("duplicate cell ({}, {})", e.i, e.j)));
            }
            *code = e.y as i8;
            list.push(e);
        }
        list.sort_unstable();
        Ok(Self {
            p,
            q,
            entries: list,
            codes,
        })
    }

    pub fn from_triplets(p: usize, q: usize, triplets: &[(usize, usize, u8)]) -> Result<Self> {
        Self::new(p, q, triplets.iter().map(|&(i, j, y)| Entry { i, j, y }))
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    /// Observed entries in row-major order.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// `|omega|`.
    pub fn n_observed(&self) -> usize {
        self.entries.len()
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u8> {
        if i >= self.p || j >= self.q {
            return None;
        }
        match self.codes[i * self.q + j] {
            UNOBSERVED => None,
            c => Some(c as u8),
        }
    }

    /// Observed index pairs.
    pub fn omega(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|e| (e.i, e.j))
    }

    /// Row-major iterator over unobserved cells.
    pub fn unobserved(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let q = self.q;
        self.codes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == UNOBSERVED)
            .map(move |(k, _)| (k / q, k % q))
    }

    pub(crate) fn codes(&self) -> &[i8] {
        &self.codes
    }

    /// Restrict to the given subset of entries (used for holdout splits).
    pub(crate) fn with_entries(&self, entries: Vec<Entry>) -> Result<Self> {
        Self::new(self.p, self.q, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_bounds() {
        assert!(matches!(
            BinaryObservationMatrix::from_triplets(2, 2, &[(0, 0, 1), (0, 0, 0)]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            BinaryObservationMatrix::from_triplets(2, 2, &[(2, 0, 1)]),
            Err(Error::Index { .. })
        ));
        assert!(BinaryObservationMatrix::from_triplets(2, 2, &[(0, 1, 2)]).is_err());
    }

    #[test]
    fn omega_matches_entries() {
        let y = BinaryObservationMatrix::from_triplets(2, 3, &[(1, 2, 1), (0, 1, 0)]).unwrap();
        assert_eq!(y.omega().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(y.get(1, 2), Some(1));
        assert_eq!(y.get(0, 1), Some(0));
        assert_eq!(y.get(0, 0), None);
        assert_eq!(y.unobserved().count(), 4);
    }
}
