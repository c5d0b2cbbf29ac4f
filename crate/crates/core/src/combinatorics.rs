//! Index sets, their subset families, and the composition counts that weight
//! each factor of a partial product.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A non-empty set of distinct positive orders, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<u32>);

impl IndexSet {
    pub fn new(mut elements: Vec<u32>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidIndexSet("set is empty".into()));
        }
        if elements.contains(&0) {
            return Err(Error::InvalidIndexSet("elements must be >= 1".into()));
        }
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidIndexSet("elements must be distinct".into()));
        }
        Ok(IndexSet(elements))
    }

    pub fn singleton(k: u32) -> Result<Self> {
        Self::new(vec![k])
    }

    pub fn elements(&self) -> &[u32] {
        &self.0
    }

    pub fn cardinality(&self) -> usize {
        self.0.len()
    }

    pub fn max_element(&self) -> u32 {
        *self.0.last().expect("non-empty by construction")
    }

    pub fn contains(&self, k: u32) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn is_odd(&self) -> bool {
        self.0.len() % 2 == 1
    }

    pub fn all_even(&self) -> bool {
        self.0.iter().all(|k| k % 2 == 0)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        f.write_str("}")
    }
}

impl FromStr for IndexSet {
    type Err = Error;

    /// Parses `2,4` or `{2,4}`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let elements = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidIndexSet(format!("bad element {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        IndexSet::new(elements)
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// Every non-empty subset of a base set, ordered by cardinality and then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetFamily {
    base: IndexSet,
    members: Vec<IndexSet>,
}

impl SubsetFamily {
    pub fn base(&self) -> &IndexSet {
        &self.base
    }

    pub fn members(&self) -> &[IndexSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members whose largest element is `k`.
    pub fn with_max(&self, k: u32) -> impl Iterator<Item = &IndexSet> {
        self.members.iter().filter(move |s| s.max_element() == k)
    }
}

pub fn enumerate_subsets(base: &IndexSet) -> SubsetFamily {
    let elems = base.elements();
    let mut members = Vec::with_capacity((1usize << elems.len()) - 1);
    let mut pick = Vec::with_capacity(elems.len());
    for m in 1..=elems.len() {
        combinations(elems, m, 0, &mut pick, &mut members);
    }
    SubsetFamily {
        base: base.clone(),
        members,
    }
}

fn combinations(
    elems: &[u32],
    m: usize,
    start: usize,
    pick: &mut Vec<u32>,
    out: &mut Vec<IndexSet>,
) {
    if pick.len() == m {
        out.push(IndexSet(pick.clone()));
        return;
    }
    for i in start..elems.len() {
        if elems.len() - i < m - pick.len() {
            break;
        }
        pick.push(elems[i]);
        combinations(elems, m, i + 1, pick, out);
        pick.pop();
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact `C(n, k)` in u128. Every intermediate equals some `C(n-k+i, i)`, so
/// this only fails when the result itself (or a smaller binomial on the way)
/// does not fit.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        let num = (n - k) as u128 + i;
        let g = gcd(acc, i);
        let rest = i / g;
        let acc_red = acc / g;
        debug_assert_eq!(num % rest, 0);
        acc = acc_red
            .checked_mul(num / rest)
            .ok_or(Error::MultiplicityOverflow { n, k })?;
    }
    Ok(acc)
}

/// `ln C(n, k)` as a sum of log ratios; used only past the u128 range.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k)
        .map(|i| (((n - k + i) as f64) / (i as f64)).ln())
        .sum()
}

/// Number of compositions of `n` into `m` positive parts: `C(n-1, m-1)`.
pub fn multiplicity(n: u64, m: u64) -> Result<u128> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(format!(
            "multiplicity needs n, m >= 1 (got n={n}, m={m})"
        )));
    }
    if n < m {
        return Ok(0);
    }
    binomial(n - 1, m - 1)
}

/// Factor weight: exact when it fits in u128, otherwise carried as a log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Exact(u128),
    Log(f64),
}

impl Weight {
    pub fn for_term(n: u64, m: u64) -> Result<Weight> {
        match multiplicity(n, m) {
            Ok(w) => Ok(Weight::Exact(w)),
            Err(Error::MultiplicityOverflow { .. }) => Ok(Weight::Log(ln_binomial(n - 1, m - 1))),
            Err(e) => Err(e),
        }
    }

    /// `weight * v` without ever forming the weight as a float when it is huge.
    pub fn scale(self, v: f64) -> f64 {
        match self {
            Weight::Exact(w) => w as f64 * v,
            Weight::Log(lw) => {
                if v == 0.0 {
                    0.0
                } else {
                    v.signum() * (lw + v.abs().ln()).exp()
                }
            }
        }
    }
}

/// Independent oracle for [`multiplicity`]: counts m-tuples of positive
/// integers summing to n by walking every tuple.
pub fn compositions_bruteforce(n: u64, m: u64) -> Result<u64> {
    if n > 30 || m > 6 {
        return Err(Error::OracleScale(format!(
            "compositions oracle limited to n <= 30, m <= 6 (got n={n}, m={m})"
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("compositions need n, m >= 1".into()));
    }
    fn walk(remaining_parts: u64, remaining_sum: u64) -> u64 {
        if remaining_parts == 0 {
            return u64::from(remaining_sum == 0);
        }
        // the current part takes any value that leaves >= 1 for each later part
        (1..=remaining_sum)
            .take_while(|part| remaining_sum - part >= remaining_parts - 1)
            .map(|part| walk(remaining_parts - 1, remaining_sum - part))
            .sum()
    }
    Ok(walk(m, n))
}

/// Multiplicity-weighted number of `f` factors in the full quotient over
/// every subset of `base`, truncated at `n_max`.
pub fn factor_count(base: &IndexSet, n_max: u64) -> Result<u128> {
    family_factor_count(enumerate_subsets(base).members(), n_max)
}

/// Weighted factor count over an arbitrary collection of subsets.
pub fn family_factor_count<'a>(
    subsets: impl IntoIterator<Item = &'a IndexSet>,
    n_max: u64,
) -> Result<u128> {
    let mut total: u128 = 0;
    for s in subsets {
        let m = s.cardinality() as u64;
        if n_max < m {
            return Err(Error::InvalidConfig(format!(
                "n_max = {n_max} is below subset cardinality {m}"
            )));
        }
        // hockey stick would give C(n_max, m); summing keeps this independent of that identity
        for n in m..=n_max {
            let w = multiplicity(n, m)?;
            total = total
                .checked_add(w)
                .ok_or(Error::MultiplicityOverflow { n, k: m })?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn index_set_rejects_bad_input() {
        assert!(IndexSet::new(vec![]).is_err());
        assert!(IndexSet::new(vec![0, 1]).is_err());
        assert!(IndexSet::new(vec![2, 2]).is_err());
        assert_eq!(IndexSet::new(vec![4, 2]).unwrap().elements(), &[2, 4]);
        assert_eq!("{1,3}".parse::<IndexSet>().unwrap(), set(&[1, 3]));
        assert!("1,x".parse::<IndexSet>().is_err());
    }

    #[test]
    fn subsets_of_two_four() {
        let fam = enumerate_subsets(&set(&[2, 4]));
        assert_eq!(fam.members(), &[set(&[2]), set(&[4]), set(&[2, 4])]);
        assert_eq!(enumerate_subsets(&set(&[1])).members(), &[set(&[1])]);
    }

    #[test]
    fn subsets_of_four_elements() {
        let fam = enumerate_subsets(&set(&[1, 2, 3, 4]));
        assert_eq!(fam.len(), 15);
        assert_eq!(fam.members()[4], set(&[1, 2]));
        assert_eq!(fam.members()[14], set(&[1, 2, 3, 4]));
        assert_eq!(fam.with_max(3).count(), 4);
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(5, 2).unwrap(), 4);
        for m in 1..10 {
            assert_eq!(multiplicity(m, m).unwrap(), 1);
        }
        assert_eq!(multiplicity(3, 5).unwrap(), 0);
        assert!(multiplicity(0, 1).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(compositions_bruteforce(5, 2).unwrap(), 4);
        assert_eq!(compositions_bruteforce(4, 4).unwrap(), 1);
        assert_eq!(compositions_bruteforce(6, 3).unwrap(), 10);
        assert!(compositions_bruteforce(31, 2).is_err());
        assert!(compositions_bruteforce(5, 7).is_err());
    }

    #[test]
    fn factor_count_examples() {
        assert_eq!(factor_count(&set(&[1, 2, 3, 4]), 40).unwrap(), 135_750);
        assert_eq!(factor_count(&set(&[1]), 10).unwrap(), 10);
        assert_eq!(factor_count(&set(&[2, 4]), 10).unwrap(), 65);
        assert!(factor_count(&set(&[1, 2, 3]), 2).is_err());
    }

    #[test]
    fn binomial_edges() {
        assert_eq!(binomial(0, 0).unwrap(), 1);
        assert_eq!(binomial(39, 3).unwrap(), 9139);
        // C(130, 65) ~ 9.5e37 fits; C(132, 66) ~ 3.8e38 does not
        assert!(binomial(130, 65).is_ok());
        assert!(matches!(
            binomial(132, 66),
            Err(Error::MultiplicityOverflow { .. })
        ));
    }

    #[test]
    fn weight_falls_back_to_log() {
        let w = Weight::for_term(2000, 40).unwrap();
        let Weight::Log(lw) = w else {
            panic!("expected log weight, got {w:?}");
        };
        // ln C(1999, 39) via lgamma-free product of ratios, checked against a
        // direct sum over ln(i) differences
        let direct: f64 = (1961..=1999).map(|i| (i as f64).ln()).sum::<f64>()
            - (1..=39).map(|i| (i as f64).ln()).sum::<f64>();
        assert!((lw - direct).abs() < 1e-9 * direct);
        let scaled = w.scale(-1e-30);
        assert!(scaled < 0.0 && ((-scaled).ln() - (lw - 30.0 * 10f64.ln())).abs() < 1e-9);
        assert_eq!(Weight::Exact(7).scale(0.5), 3.5);
    }
}
