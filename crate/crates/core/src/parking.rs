//! Preference lists, the deterministic (Konheim–Weiss) protocol, the
//! Dyck-path bijection for weakly increasing parking functions, and the
//! reversal involution.
//!
//! Cars and spots are 1-indexed everywhere in the public API.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};

/// A preference list `alpha` in `[n]^n`: car `i` prefers spot `alpha[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PreferenceList {
    prefs: Vec<usize>,
}

impl PreferenceList {
    pub fn new(prefs: Vec<usize>) -> Result<Self> {
        let n = prefs.len();
        if n == 0 {
            return Err(validation("preference list is empty"));
        }
        if let Some((i, &a)) = prefs.iter().enumerate().find(|(_, &a)| a < 1 || a > n) {
            return Err(validation(format!(
                "entry {} of the preference list is {a}, outside [1, {n}]",
                i + 1
            )));
        }
        Ok(PreferenceList { prefs })
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    /// Preference of car `car` (1-indexed).
    pub fn pref(&self, car: usize) -> usize {
        self.prefs[car - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.prefs
    }

    /// `(1, 2, ..., n)`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((1..=n).collect())
    }

    pub fn is_identity_outcome(&self) -> bool {
        self.prefs.iter().enumerate().all(|(i, &a)| a <= i + 1)
    }
}

impl TryFrom<Vec<usize>> for PreferenceList {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        PreferenceList::new(v)
    }
}

impl From<PreferenceList> for Vec<usize> {
    fn from(p: PreferenceList) -> Vec<usize> {
        p.prefs
    }
}

impl FromStr for PreferenceList {
    type Err = Error;

    /// Accepts entries separated by commas and/or whitespace, optionally
    /// wrapped in parentheses or brackets.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s
            .trim()
            .trim_matches(|c| matches!(c, '(' | ')' | '[' | ']'));
        let prefs = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| validation(format!("cannot parse preference entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PreferenceList::new(prefs)
    }
}

impl fmt::Display for PreferenceList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.prefs.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub is_pf: bool,
    pub is_identity_outcome: bool,
    pub is_weakly_increasing: bool,
}

/// Classifies `alpha` with the prefix-count criterion
/// `|{k : alpha_k <= i}| >= i` for parking functions, `alpha_i <= i` for
/// identity outcome, and monotonicity on top of that for WIPFs.
pub fn classify(alpha: &PreferenceList) -> Classification {
    let n = alpha.n();
    let mut counts = vec![0usize; n + 1];
    for &a in alpha.as_slice() {
        counts[a] += 1;
    }
    let mut running = 0;
    let mut is_pf = true;
    for (i, c) in counts.iter().enumerate().skip(1) {
        running += c;
        if running < i {
            is_pf = false;
            break;
        }
    }
    let is_identity_outcome = alpha.is_identity_outcome();
    let monotone = alpha.as_slice().windows(2).all(|w| w[0] <= w[1]);
    Classification {
        is_pf,
        is_identity_outcome,
        is_weakly_increasing: monotone && is_identity_outcome,
    }
}

/// `slots[s-1]` is the label of the car parked in spot `s`, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomePermutation {
    pub slots: Vec<Option<usize>>,
}

impl OutcomePermutation {
    pub fn empty(n: usize) -> Self {
        OutcomePermutation {
            slots: vec![None; n],
        }
    }

    pub fn car_in(&self, spot: usize) -> Option<usize> {
        self.slots[spot - 1]
    }

    pub fn is_full(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    pub fn is_identity(&self) -> bool {
        self.slots
            .iter()
            .enumerate()
            .all(|(s, c)| *c == Some(s + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyVector {
    pub bits: Vec<bool>,
}

impl OccupancyVector {
    pub fn empty(n: usize) -> Self {
        OccupancyVector {
            bits: vec![false; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        OccupancyVector { bits }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    /// Whether spot `spot` (1-indexed) is taken. Positions outside `[1, n]`
    /// are never spots and report `false`.
    pub fn is_occupied(&self, spot: i64) -> bool {
        spot >= 1 && (spot as usize) <= self.bits.len() && self.bits[spot as usize - 1]
    }

    pub fn occupy(&mut self, spot: usize) {
        self.bits[spot - 1] = true;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn leftmost_free(&self) -> Option<usize> {
        self.bits.iter().position(|b| !b).map(|s| s + 1)
    }

    pub fn rightmost_free(&self) -> Option<usize> {
        self.bits.iter().rposition(|b| !b).map(|s| s + 1)
    }
}

/// `d[i] = i - alpha_i`, defined on identity-outcome parking functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacementVector {
    pub d: Vec<usize>,
}

impl DisplacementVector {
    pub fn total(&self) -> u64 {
        self.d.iter().map(|&x| x as u64).sum()
    }
}

pub fn displacement(alpha: &PreferenceList) -> Result<DisplacementVector> {
    if !alpha.is_identity_outcome() {
        return Err(domain(format!(
            "{alpha} does not have identity outcome (needs alpha_i <= i)"
        )));
    }
    Ok(DisplacementVector {
        d: alpha
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &a)| i + 1 - a)
            .collect(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LuckySet {
    pub members: Vec<usize>,
}

impl LuckySet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        LuckySet { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, car: usize) -> bool {
        self.members.binary_search(&car).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalOutcome {
    pub outcome: OutcomePermutation,
    pub lucky: LuckySet,
    pub failed_cars: Vec<usize>,
    /// Spot each car ended in, `None` for cars that drove off the end.
    pub spot_of_car: Vec<Option<usize>>,
}

/// Deterministic protocol: each car drives right from its preference to the
/// first free spot, or leaves the street if there is none.
pub fn classical_park(alpha: &PreferenceList) -> ClassicalOutcome {
    let n = alpha.n();
    let mut outcome = OutcomePermutation::empty(n);
    let mut lucky = Vec::new();
    let mut failed = Vec::new();
    let mut spot_of_car = vec![None; n];
    for car in 1..=n {
        let pref = alpha.pref(car);
        match (pref..=n).find(|&s| outcome.slots[s - 1].is_none()) {
            Some(s) => {
                outcome.slots[s - 1] = Some(car);
                spot_of_car[car - 1] = Some(s);
                if s == pref {
                    lucky.push(car);
                }
            }
            None => failed.push(car),
        }
    }
    ClassicalOutcome {
        outcome,
        lucky: LuckySet::new(lucky),
        failed_cars: failed,
        spot_of_car,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    U,
    D,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DyckPath {
    steps: Vec<Step>,
}

impl DyckPath {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        let mut height: i64 = 0;
        for (t, s) in steps.iter().enumerate() {
            height += if *s == Step::U { 1 } else { -1 };
            if height < 0 {
                return Err(validation(format!(
                    "Dyck path dips below the axis at step {}",
                    t + 1
                )));
            }
        }
        if height != 0 {
            return Err(validation("Dyck path does not end on the axis"));
        }
        Ok(DyckPath { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Semilength.
    pub fn n(&self) -> usize {
        self.steps.len() / 2
    }
}

impl FromStr for DyckPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let steps = s
            .trim()
            .chars()
            .map(|c| match c {
                'U' | 'u' => Ok(Step::U),
                'D' | 'd' => Ok(Step::D),
                other => Err(validation(format!("invalid Dyck step {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        DyckPath::new(steps)
    }
}

impl fmt::Display for DyckPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            f.write_str(if *s == Step::U { "U" } else { "D" })?;
        }
        Ok(())
    }
}

impl TryFrom<String> for DyckPath {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DyckPath> for String {
    fn from(p: DyckPath) -> String {
        p.to_string()
    }
}

/// Entry `i` is one plus the number of down steps before the `i`th up step.
pub fn dyck_to_wipf(path: &DyckPath) -> Result<PreferenceList> {
    if path.steps.is_empty() {
        return Err(domain("empty Dyck path has no preference list"));
    }
    let mut downs = 0;
    let mut prefs = Vec::with_capacity(path.n());
    for s in &path.steps {
        match s {
            Step::U => prefs.push(downs + 1),
            Step::D => downs += 1,
        }
    }
    PreferenceList::new(prefs)
}

pub fn wipf_to_dyck(alpha: &PreferenceList) -> Result<DyckPath> {
    if !classify(alpha).is_weakly_increasing {
        return Err(domain(format!(
            "{alpha} is not a weakly increasing parking function"
        )));
    }
    let n = alpha.n();
    let mut steps = Vec::with_capacity(2 * n);
    let mut downs = 0;
    for &a in alpha.as_slice() {
        while downs + 1 < a {
            steps.push(Step::D);
            downs += 1;
        }
        steps.push(Step::U);
    }
    steps.resize(2 * n, Step::D);
    DyckPath::new(steps)
}

/// Number of times the running height comes back to 0 after the start
/// (the final step included).
pub fn dyck_returns(path: &DyckPath) -> Result<usize> {
    if path.steps.is_empty() {
        return Err(domain("empty Dyck path"));
    }
    let mut height = 0i64;
    let mut returns = 0;
    for s in &path.steps {
        height += if *s == Step::U { 1 } else { -1 };
        if height == 0 {
            returns += 1;
        }
    }
    Ok(returns)
}

/// Entry-wise reversal `alpha_i -> n - alpha_i + 1`.
pub fn mirror(alpha: &PreferenceList) -> PreferenceList {
    let n = alpha.n();
    PreferenceList {
        prefs: alpha.as_slice().iter().map(|&a| n + 1 - a).collect(),
    }
}

/// Membership in the mirrored family: `beta_i >= n - i + 1` for all `i`.
pub fn is_reverse_identity_outcome(beta: &PreferenceList) -> bool {
    let n = beta.n();
    beta.as_slice().iter().enumerate().all(|(i, &b)| b + i >= n)
}

/// Every list in `[n]^n`, in lexicographic order.
pub fn all_preference_lists(n: usize) -> impl Iterator<Item = PreferenceList> {
    let mut cur = if n == 0 { None } else { Some(vec![1usize; n]) };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let next = cur.as_mut().unwrap();
        let mut k = n;
        loop {
            if k == 0 {
                cur = None;
                break;
            }
            k -= 1;
            if next[k] < n {
                next[k] += 1;
                break;
            }
            next[k] = 1;
        }
        Some(PreferenceList { prefs: out })
    })
}

/// Every identity-outcome list (`alpha_i <= i`), `n!` of them, in
/// lexicographic order.
pub fn identity_outcome_lists(n: usize) -> impl Iterator<Item = PreferenceList> {
    let mut cur = if n == 0 { None } else { Some(vec![1usize; n]) };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let next = cur.as_mut().unwrap();
        let mut k = n;
        loop {
            if k == 0 {
                cur = None;
                break;
            }
            k -= 1;
            if next[k] < k + 1 {
                next[k] += 1;
                break;
            }
            next[k] = 1;
        }
        Some(PreferenceList { prefs: out })
    })
}

/// All Dyck paths of semilength `n`, lexicographic with `U < D`.
pub fn dyck_paths(n: usize) -> Vec<DyckPath> {
    fn rec(n: usize, ups: usize, downs: usize, cur: &mut Vec<Step>, out: &mut Vec<DyckPath>) {
        if ups == n && downs == n {
            out.push(DyckPath { steps: cur.clone() });
            return;
        }
        if ups < n {
            cur.push(Step::U);
            rec(n, ups + 1, downs, cur, out);
            cur.pop();
        }
        if downs < ups {
            cur.push(Step::D);
            rec(n, ups, downs + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, 0, 0, &mut Vec::with_capacity(2 * n), &mut out);
    }
    out
}

/// All weakly increasing parking functions of length `n`, in the order of
/// their Dyck paths.
pub fn wipfs(n: usize) -> Vec<PreferenceList> {
    dyck_paths(n)
        .iter()
        .map(|p| dyck_to_wipf(p).expect("generated paths are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(v: &[usize]) -> PreferenceList {
        PreferenceList::new(v.to_vec()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = classify(&pl(&[1, 2, 1]));
        assert!(c.is_pf && c.is_identity_outcome && !c.is_weakly_increasing);
        let c = classify(&pl(&[2, 1, 3]));
        assert!(c.is_pf && !c.is_identity_outcome && !c.is_weakly_increasing);
        for n in 2..=6 {
            let c = classify(&pl(&vec![n; n]));
            assert!(!c.is_pf);
        }
        let c = classify(&pl(&[1, 1, 2]));
        assert!(c.is_pf && c.is_identity_outcome && c.is_weakly_increasing);
    }

    #[test]
    fn malformed_lists_rejected() {
        assert!(PreferenceList::new(vec![]).is_err());
        assert!(PreferenceList::new(vec![0, 1]).is_err());
        assert!(PreferenceList::new(vec![1, 3]).is_err());
        assert!("1, 2,x".parse::<PreferenceList>().is_err());
        assert_eq!(
            "(1, 2 1)".parse::<PreferenceList>().unwrap(),
            pl(&[1, 2, 1])
        );
    }

    #[test]
    fn classical_examples() {
        let out = classical_park(&pl(&[1, 1, 1]));
        assert!(out.outcome.is_identity());
        assert_eq!(out.lucky.members, vec![1]);
        assert!(out.failed_cars.is_empty());

        let out = classical_park(&pl(&[3, 1, 2]));
        assert_eq!(out.lucky.members, vec![1, 2, 3]);

        let out = classical_park(&pl(&[1, 2, 2]));
        assert_eq!(out.lucky.members, vec![1, 2]);
        assert_eq!(out.outcome.car_in(3), Some(3));

        let out = classical_park(&pl(&[3, 3, 3]));
        assert_eq!(out.failed_cars, vec![2, 3]);
        assert_eq!(out.outcome.slots, vec![None, None, Some(1)]);
    }

    #[test]
    fn every_permutation_is_all_lucky() {
        for alpha in all_preference_lists(4) {
            let mut sorted = alpha.as_slice().to_vec();
            sorted.sort_unstable();
            if sorted == vec![1, 2, 3, 4] {
                assert_eq!(classical_park(&alpha).lucky.len(), 4);
            }
        }
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(displacement(&pl(&[1, 2, 3])).unwrap().d, vec![0, 0, 0]);
        assert_eq!(displacement(&pl(&[1, 1, 1])).unwrap().d, vec![0, 1, 2]);
        assert_eq!(
            displacement(&pl(&[1, 1, 2, 3, 3, 3, 3, 7])).unwrap().d,
            vec![0, 1, 1, 1, 2, 3, 4, 1]
        );
        assert!(matches!(
            displacement(&pl(&[2, 1, 3])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn dyck_bijection_examples() {
        let p: DyckPath = "UUDUDUUUUDDDDUDD".parse().unwrap();
        assert_eq!(dyck_to_wipf(&p).unwrap(), pl(&[1, 1, 2, 3, 3, 3, 3, 7]));
        assert_eq!(wipf_to_dyck(&pl(&[1, 1, 2, 3, 3, 3, 3, 7])).unwrap(), p);
        let zigzag: DyckPath = "UDUDUDUD".parse().unwrap();
        assert_eq!(dyck_to_wipf(&zigzag).unwrap(), pl(&[1, 2, 3, 4]));
        let tent: DyckPath = "UUUUDDDD".parse().unwrap();
        assert_eq!(dyck_to_wipf(&tent).unwrap(), pl(&[1, 1, 1, 1]));
        assert!("UDDU".parse::<DyckPath>().is_err());
        assert!("UUD".parse::<DyckPath>().is_err());
        assert!(wipf_to_dyck(&pl(&[1, 2, 1])).is_err());
    }

    #[test]
    fn returns_examples() {
        assert_eq!(dyck_returns(&"UDUDUD".parse().unwrap()).unwrap(), 3);
        assert_eq!(dyck_returns(&"UUUDDD".parse().unwrap()).unwrap(), 1);
        let fig: DyckPath = "UUDUDUUUUDDDDUDD".parse().unwrap();
        let lucky = classical_park(&dyck_to_wipf(&fig).unwrap()).lucky.len();
        assert_eq!(dyck_returns(&fig).unwrap(), 1);
        assert_eq!(lucky, 1);
        assert!(dyck_returns(&DyckPath::new(vec![]).unwrap()).is_err());
    }

    #[test]
    fn mirror_examples() {
        assert_eq!(mirror(&pl(&[1, 1, 1])), pl(&[3, 3, 3]));
        assert_eq!(mirror(&pl(&[1, 2, 3])), pl(&[3, 2, 1]));
        for alpha in all_preference_lists(3) {
            assert_eq!(mirror(&mirror(&alpha)), alpha);
        }
    }

    #[test]
    fn enumerators_have_expected_sizes() {
        assert_eq!(all_preference_lists(3).count(), 27);
        assert_eq!(identity_outcome_lists(4).count(), 24);
        assert_eq!(dyck_paths(4).len(), 14);
        assert_eq!(wipfs(3).len(), 5);
        assert_eq!(all_preference_lists(0).count(), 0);
    }

    #[test]
    fn occupancy_queries() {
        let occ = OccupancyVector::from_bits(vec![true, false, true, false]);
        assert_eq!(occ.leftmost_free(), Some(2));
        assert_eq!(occ.rightmost_free(), Some(4));
        assert!(!occ.is_occupied(0));
        assert!(!occ.is_occupied(5));
        assert!(occ.is_occupied(3));
        assert_eq!(occ.count(), 2);
    }
}
