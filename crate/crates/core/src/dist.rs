use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::rational::Rational;

/// Sparse distribution over dense integer ids. Entries are kept sorted by
/// id and strictly positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Dist {
    entries: Vec<(usize, Rational)>,
}

impl Dist {
    pub fn dirac(id: usize) -> Self {
        Dist { entries: vec![(id, Rational::one())] }
    }

    /// Builds from arbitrary entries: duplicate ids are summed, zeros dropped.
    /// Does not normalize and does not check the total.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut map: BTreeMap<usize, Rational> = BTreeMap::new();
        for (id, p) in entries {
            *map.entry(id).or_insert_with(Rational::zero) += p;
        }
        Dist {
            entries: map.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        }
    }

    /// Same as [`Dist::from_entries`] but for entries already sorted by id,
    /// unique and nonzero.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(usize, Rational)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Dist { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.entries.iter().map(|(id, p)| (*id, p))
    }

    pub fn entries(&self) -> &[(usize, Rational)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn get(&self, id: usize) -> Rational {
        match self.entries.binary_search_by_key(&id, |(i, _)| *i) {
            Ok(pos) => self.entries[pos].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn get_ref(&self, id: usize) -> Option<&Rational> {
        self.entries
            .binary_search_by_key(&id, |(i, _)| *i)
            .ok()
            .map(|pos| &self.entries[pos].1)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.entries.binary_search_by_key(&id, |(i, _)| *i).is_ok()
    }

    pub fn total(&self) -> Rational {
        self.entries.iter().fold(Rational::zero(), |acc, (_, p)| acc + p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_dirac(&self) -> bool {
        self.entries.len() == 1
    }

    /// Divides every entry by the total. Returns `None` for the empty vector.
    pub fn normalized(&self) -> Option<Dist> {
        let total = self.total();
        if total.is_zero() {
            return None;
        }
        Some(Dist {
            entries: self.entries.iter().map(|(id, p)| (*id, p / &total)).collect(),
        })
    }

    pub fn scaled(&self, factor: &Rational) -> Dist {
        if factor.is_zero() {
            return Dist::default();
        }
        Dist {
            entries: self.entries.iter().map(|(id, p)| (*id, p * factor)).collect(),
        }
    }

    /// Weighted sum `sum_i self(i) * values[i]`.
    pub fn dot(&self, values: &[Rational]) -> Rational {
        self.entries
            .iter()
            .fold(Rational::zero(), |acc, (id, p)| acc + p * &values[*id])
    }

    pub fn map_ids(&self, f: impl Fn(usize) -> usize) -> Dist {
        Dist::from_entries(self.entries.iter().map(|(id, p)| (f(*id), p.clone())))
    }
}

impl FromIterator<(usize, Rational)> for Dist {
    fn from_iter<T: IntoIterator<Item = (usize, Rational)>>(iter: T) -> Self {
        Dist::from_entries(iter)
    }
}

/// Accumulator for building sparse vectors from many small contributions.
#[derive(Default, Debug, Clone)]
pub(crate) struct SparseAcc {
    map: BTreeMap<usize, Rational>,
}

impl SparseAcc {
    pub(crate) fn add(&mut self, id: usize, value: Rational) {
        match self.map.get_mut(&id) {
            Some(v) => *v += value,
            None => {
                self.map.insert(id, value);
            }
        }
    }

    pub(crate) fn into_dist(self) -> Dist {
        Dist::from_sorted_unchecked(self.map.into_iter().filter(|(_, p)| !p.is_zero()).collect())
    }
}
