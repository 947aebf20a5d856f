//! Generic negation patterns: which executions of a site get inverted, given
//! how many times the site runs in an unmodified execution.

use alloc::collections::BTreeSet;
use core::fmt;
use core::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NegationPattern {
    All,
    First,
    Last,
    AllButFirst,
    AllButLast,
    AllButFirstAndLast,
    Second,
    SecondToLast,
    FirstAndLast,
    Odd,
    Even,
}

impl NegationPattern {
    /// Canonical order, roughly simplest first. Used for tie-breaking.
    pub const ALL: [NegationPattern; 11] = [
        NegationPattern::All,
        NegationPattern::First,
        NegationPattern::Last,
        NegationPattern::AllButFirst,
        NegationPattern::AllButLast,
        NegationPattern::AllButFirstAndLast,
        NegationPattern::Second,
        NegationPattern::SecondToLast,
        NegationPattern::FirstAndLast,
        NegationPattern::Odd,
        NegationPattern::Even,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NegationPattern::All => "all",
            NegationPattern::First => "first",
            NegationPattern::Last => "last",
            NegationPattern::AllButFirst => "all-first",
            NegationPattern::AllButLast => "all-last",
            NegationPattern::AllButFirstAndLast => "all-(first+last)",
            NegationPattern::Second => "first+1",
            NegationPattern::SecondToLast => "last-1",
            NegationPattern::FirstAndLast => "first+last",
            NegationPattern::Odd => "odd",
            NegationPattern::Even => "even",
        }
    }

    /// Position in [`NegationPattern::ALL`].
    pub fn rank(self) -> usize {
        self as usize
    }

    /// Whether the instance set depends on the total execution count.
    pub fn needs_count(self) -> bool {
        !matches!(
            self,
            NegationPattern::First | NegationPattern::Second | NegationPattern::Odd
        )
    }
}

impl fmt::Display for NegationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown negation pattern `{0}`")]
pub struct UnknownPattern(pub alloc::string::String);

impl FromStr for NegationPattern {
    type Err = UnknownPattern;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NegationPattern::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| UnknownPattern(s.into()))
    }
}

/// 1-based instance indices to negate out of `n` executions. Indices that
/// fall outside `1..=n` are dropped, so every pattern is total in `n`.
pub fn instances_to_negate(pat: NegationPattern, n: u32) -> BTreeSet<u32> {
    use NegationPattern::*;
    let range = |lo: u32, hi: u32| -> BTreeSet<u32> {
        if lo > hi {
            BTreeSet::new()
        } else {
            (lo..=hi).collect()
        }
    };
    let single = |i: u32| -> BTreeSet<u32> {
        if (1..=n).contains(&i) {
            core::iter::once(i).collect()
        } else {
            BTreeSet::new()
        }
    };
    match pat {
        All => range(1, n),
        First => single(1),
        Last => single(n),
        AllButFirst => range(2, n),
        AllButLast => range(1, n.saturating_sub(1)),
        AllButFirstAndLast => range(2, n.saturating_sub(1)),
        Second => single(2),
        SecondToLast => {
            if n >= 2 {
                single(n - 1)
            } else {
                BTreeSet::new()
            }
        }
        FirstAndLast => {
            let mut s = single(1);
            s.extend(single(n));
            s
        }
        Odd => (1..=n).step_by(2).collect(),
        Even => (2..=n).step_by(2).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn bits(set: &BTreeSet<u32>, n: u32) -> String {
        (1..=n).map(|i| if set.contains(&i) { '1' } else { '0' }).collect()
    }

    #[test]
    fn interior_pattern_over_seven_executions() {
        let set = instances_to_negate(NegationPattern::AllButFirstAndLast, 7);
        assert_eq!(bits(&set, 7), "0111110");
        // The same generic pattern carries over to a run with 8 executions.
        let set = instances_to_negate(NegationPattern::AllButFirstAndLast, 8);
        assert_eq!(bits(&set, 8), "01111110");
    }

    #[test]
    fn boundaries() {
        assert_eq!(instances_to_negate(NegationPattern::First, 1), [1].into());
        assert!(instances_to_negate(NegationPattern::All, 0).is_empty());
        assert_eq!(instances_to_negate(NegationPattern::FirstAndLast, 1), [1].into());
        assert!(instances_to_negate(NegationPattern::Second, 1).is_empty());
        assert!(instances_to_negate(NegationPattern::SecondToLast, 1).is_empty());
        for p in NegationPattern::ALL {
            assert!(instances_to_negate(p, 0).is_empty(), "{p}");
        }
    }

    #[test]
    fn parity() {
        assert_eq!(instances_to_negate(NegationPattern::Odd, 4), [1, 3].into());
        assert_eq!(instances_to_negate(NegationPattern::Even, 4), [2, 4].into());
    }

    #[test]
    fn names_round_trip_in_canonical_order() {
        let names: Vec<&str> = NegationPattern::ALL.iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            [
                "all",
                "first",
                "last",
                "all-first",
                "all-last",
                "all-(first+last)",
                "first+1",
                "last-1",
                "first+last",
                "odd",
                "even"
            ]
        );
        for (i, p) in NegationPattern::ALL.into_iter().enumerate() {
            assert_eq!(p.rank(), i);
            assert_eq!(p.name().parse::<NegationPattern>().unwrap(), p);
        }
        assert!("sometimes".parse::<NegationPattern>().is_err());
    }

    #[test]
    fn count_free_patterns_ignore_n() {
        for p in NegationPattern::ALL.into_iter().filter(|p| !p.needs_count()) {
            let big = instances_to_negate(p, 50);
            for n in 0..50 {
                let small: BTreeSet<u32> = big.iter().copied().filter(|&i| i <= n).collect();
                assert_eq!(instances_to_negate(p, n), small, "{p} n={n}");
            }
        }
    }

    proptest! {
        #[test]
        fn subset_of_range(n in 0u32..200, k in 0usize..11) {
            let set = instances_to_negate(NegationPattern::ALL[k], n);
            prop_assert!(set.iter().all(|&i| (1..=n).contains(&i)));
        }

        #[test]
        fn partition_identities(n in 1u32..200) {
            use NegationPattern::*;
            let all = instances_to_negate(All, n);
            let mut with_first = instances_to_negate(AllButFirst, n);
            with_first.insert(1);
            prop_assert_eq!(&with_first, &all);
            let mut with_last = instances_to_negate(AllButLast, n);
            with_last.insert(n);
            prop_assert_eq!(&with_last, &all);
            if n >= 2 {
                let mut ends = instances_to_negate(AllButFirstAndLast, n);
                ends.extend(instances_to_negate(FirstAndLast, n));
                prop_assert_eq!(&ends, &all);
            }
            let odd = instances_to_negate(Odd, n);
            let even = instances_to_negate(Even, n);
            prop_assert!(odd.is_disjoint(&even));
            let union: BTreeSet<u32> = odd.union(&even).copied().collect();
            prop_assert_eq!(union, all);
        }
    }
}
