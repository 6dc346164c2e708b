use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{invalid, FdmError, Result};

/// How the solution size `k` is split into per-group requirements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Allocation {
    /// `k / m` each, the remainder going to the lowest-numbered groups.
    Equal,
    /// Proportional to group sizes (largest remainder), at least one per group.
    Proportional,
    Explicit(Vec<usize>),
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Allocation::Equal => f.write_str("equal"),
            Allocation::Proportional => f.write_str("proportional"),
            Allocation::Explicit(caps) => {
                let parts: Vec<String> = caps.iter().map(|c| c.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Allocation {
    type Err = FdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" | "er" => Ok(Allocation::Equal),
            "proportional" | "pr" => Ok(Allocation::Proportional),
            other => other
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Allocation::Explicit)
                .map_err(|_| FdmError::Config(format!("unknown allocation '{s}'"))),
        }
    }
}

impl Serialize for Allocation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Per-group requirements summing to `k`, each at least one.
pub fn allocate_caps(kind: &Allocation, k: usize, group_counts: &[usize]) -> Result<Vec<usize>> {
    let m = group_counts.len();
    if m == 0 {
        return Err(invalid("no groups to allocate to"));
    }
    if k < m {
        return Err(invalid(format!(
            "k={k} is smaller than the number of groups m={m}"
        )));
    }
    match kind {
        Allocation::Equal => Ok((0..m).map(|g| k / m + usize::from(g < k % m)).collect()),
        Allocation::Proportional => Ok(proportional(k, group_counts)),
        Allocation::Explicit(caps) => {
            if caps.len() != m {
                return Err(invalid(format!("{} caps given for {m} groups", caps.len())));
            }
            if caps.contains(&0) || caps.iter().sum::<usize>() != k {
                return Err(invalid(format!(
                    "caps {caps:?} must be positive and sum to k={k}"
                )));
            }
            Ok(caps.clone())
        }
    }
}

fn proportional(k: usize, counts: &[usize]) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let quota: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if n == 0 {
                0.0
            } else {
                k as f64 * c as f64 / n as f64
            }
        })
        .collect();
    let floor: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut caps: Vec<usize> = floor.iter().map(|&f| f.max(1)).collect();
    let remainder = |g: usize| quota[g] - floor[g] as f64;
    let mut total: usize = caps.iter().sum();

    // hand out missing seats by largest remainder (groups raised to the floor of one are skipped)
    let mut order: Vec<usize> = (0..counts.len()).filter(|&g| floor[g] >= 1).collect();
    order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)).then(a.cmp(&b)));
    let mut fallback = (0..counts.len()).cycle();
    let mut it = order.iter().copied();
    while total < k {
        let g = it
            .next()
            .or_else(|| fallback.next())
            .expect("cycle never ends");
        caps[g] += 1;
        total += 1;
    }
    // floors of one can overshoot: take seats back from the smallest remainders
    while total > k {
        let g = (0..counts.len())
            .filter(|&g| caps[g] > 1)
            .min_by(|&a, &b| remainder(a).total_cmp(&remainder(b)).then(b.cmp(&a)))
            .expect("k >= m leaves a group above one");
        caps[g] -= 1;
        total -= 1;
    }
    caps
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_examples() {
        assert_eq!(
            allocate_caps(&Allocation::Equal, 20, &[5, 5]).unwrap(),
            vec![10, 10]
        );
        assert_eq!(
            allocate_caps(&Allocation::Equal, 20, &[1, 1, 1]).unwrap(),
            vec![7, 7, 6]
        );
    }

    #[test]
    fn proportional_examples() {
        assert_eq!(
            allocate_caps(&Allocation::Proportional, 10, &[67, 33]).unwrap(),
            vec![7, 3]
        );
        // tiny groups still get a seat
        assert_eq!(
            allocate_caps(&Allocation::Proportional, 4, &[97, 1, 1, 1]).unwrap(),
            vec![1, 1, 1, 1]
        );
        assert_eq!(
            allocate_caps(&Allocation::Proportional, 5, &[97, 1, 2]).unwrap(),
            vec![3, 1, 1]
        );
    }

    #[test]
    fn errors() {
        assert!(allocate_caps(&Allocation::Equal, 2, &[1, 1, 1]).is_err());
        assert!(allocate_caps(&Allocation::Explicit(vec![1, 2]), 4, &[3, 3]).is_err());
        assert!(allocate_caps(&Allocation::Explicit(vec![0, 4]), 4, &[3, 3]).is_err());
        assert_eq!(
            allocate_caps(&Allocation::Explicit(vec![1, 3]), 4, &[3, 3]).unwrap(),
            vec![1, 3]
        );
    }

    #[test]
    fn parse() {
        assert_eq!("equal".parse::<Allocation>().unwrap(), Allocation::Equal);
        assert_eq!(
            "3, 4".parse::<Allocation>().unwrap(),
            Allocation::Explicit(vec![3, 4])
        );
        assert!("bogus".parse::<Allocation>().is_err());
    }

    proptest! {
        #[test]
        fn caps_sum_to_k(counts in prop::collection::vec(0usize..500, 1..12), extra in 0usize..40, prop in any::<bool>()) {
            let k = counts.len() + extra;
            let kind = if prop { Allocation::Proportional } else { Allocation::Equal };
            let caps = allocate_caps(&kind, k, &counts).unwrap();
            prop_assert_eq!(caps.len(), counts.len());
            prop_assert_eq!(caps.iter().sum::<usize>(), k);
            prop_assert!(caps.iter().all(|&c| c >= 1));
        }
    }
}
