//! Active-learning state and query strategies.

mod baselines;
mod kmedoids;
mod minimax;

pub use baselines::{degree_select, entropy, entropy_select, featprop_select, random_select};
pub use kmedoids::{kmedoids, KMedoids};
pub use minimax::{minimax_scores, minimax_select};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::PositiveSets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Minimax,
    Random,
    Degree,
    Entropy,
    FeatProp,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Minimax,
        Strategy::Random,
        Strategy::Degree,
        Strategy::Entropy,
        Strategy::FeatProp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Minimax => "minimax",
            Strategy::Random => "random",
            Strategy::Degree => "degree",
            Strategy::Entropy => "entropy",
            Strategy::FeatProp => "featprop",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// A node picked by a strategy together with the value it was ranked by.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionScore {
    pub node: usize,
    pub score: f64,
    pub strategy: Strategy,
}

/// Labeled and unlabeled partitions of the query pool.
#[derive(Debug, Clone)]
pub struct ALState {
    labeled: Vec<(usize, usize)>,
    unlabeled: BTreeSet<usize>,
    pool_size: usize,
    budget: usize,
    positives: PositiveSets,
}

impl ALState {
    /// Starts with every pool node unlabeled. `n` is the graph's node count.
    pub fn new(n: usize, pool: &[usize], budget: usize, positive_cap: Option<usize>) -> Result<Self> {
        let unlabeled: BTreeSet<usize> = pool.iter().copied().collect();
        if unlabeled.len() != pool.len() {
            return Err(Error::invalid_argument("pool contains duplicate nodes"));
        }
        if let Some(&bad) = unlabeled.iter().find(|&&v| v >= n) {
            return Err(Error::invalid_argument(format!("pool node {bad} outside 0..{n}")));
        }
        if budget > pool.len() {
            return Err(Error::invalid_argument(format!(
                "budget {budget} exceeds pool size {}",
                pool.len()
            )));
        }
        Ok(ALState {
            labeled: Vec::new(),
            pool_size: unlabeled.len(),
            unlabeled,
            budget,
            positives: PositiveSets::new(n, positive_cap),
        })
    }

    /// Moves `node` from the unlabeled pool into the labeled set and links it
    /// into the positive sets.
    pub fn label(&mut self, node: usize, label: usize) -> Result<()> {
        if self.is_done() {
            return Err(Error::invalid_state(format!("budget {} exhausted", self.budget)));
        }
        if !self.unlabeled.remove(&node) {
            return Err(Error::invalid_state(format!(
                "node {node} is not in the unlabeled pool"
            )));
        }
        self.positives.insert(node, label)?;
        self.labeled.push((node, label));
        Ok(())
    }

    pub fn labeled(&self) -> &[(usize, usize)] {
        &self.labeled
    }

    pub fn labeled_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labeled.iter().map(|&(v, _)| v)
    }

    /// Unlabeled pool nodes in ascending order.
    pub fn unlabeled(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.unlabeled.iter().copied()
    }

    pub fn is_unlabeled(&self, node: usize) -> bool {
        self.unlabeled.contains(&node)
    }

    pub fn unlabeled_count(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    /// Number of completed labeling rounds.
    pub fn round(&self) -> usize {
        self.labeled.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.labeled.len()
    }

    pub fn is_done(&self) -> bool {
        self.labeled.len() >= self.budget
    }

    pub fn positives(&self) -> &PositiveSets {
        &self.positives
    }

    pub(crate) fn require_unlabeled(&self) -> Result<()> {
        if self.unlabeled.is_empty() {
            Err(Error::invalid_state("no unlabeled nodes left"))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labeling_moves_nodes_and_updates_positives() {
        let mut s = ALState::new(10, &[1, 3, 5, 7], 3, None).unwrap();
        s.label(5, 1).unwrap();
        s.label(1, 0).unwrap();
        s.label(7, 1).unwrap();
        assert_eq!(s.labeled(), &[(5, 1), (1, 0), (7, 1)]);
        assert_eq!(s.unlabeled().collect::<Vec<_>>(), vec![3]);
        assert_eq!(s.round(), 3);
        assert!(s.is_done());
        assert_eq!(s.positives().get(5), &[7]);
        assert_eq!(s.positives().get(7), &[5]);
        assert!(s.positives().get(1).is_empty());
        assert!(matches!(s.label(3, 0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn rejects_bad_construction_and_relabels() {
        assert!(ALState::new(4, &[0, 1], 3, None).is_err());
        assert!(ALState::new(4, &[0, 9], 1, None).is_err());
        assert!(ALState::new(4, &[0, 0], 1, None).is_err());
        let mut s = ALState::new(4, &[0, 1], 2, None).unwrap();
        s.label(0, 0).unwrap();
        assert!(s.label(0, 0).is_err());
        assert!(s.label(2, 0).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("age".parse::<Strategy>().is_err());
    }
}
