use std::fmt;

use super::expr::{InDefinitions, LocalState, PredicateExpr};
use super::Flavor;
use crate::error::{Error, Result};
use crate::scalar::Probability;

/// Label name under which the hazard predicate is cached.
pub const HAZARD_LABEL: &str = "hazard";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<P> {
    /// Nondeterministic choice group; always 0 for DTMC and qualitative spaces.
    pub group: u32,
    pub probability: P,
    pub target: u32,
}

/// Explicit reachable global state graph.
///
/// States are indexed in breadth-first discovery order from the initial
/// state (index 0). Outgoing edges are stored in compressed row form and,
/// within a row, ordered by choice group.
#[derive(Clone)]
pub struct StateSpace<P> {
    pub(crate) flavor: Flavor,
    pub(crate) width: usize,
    pub(crate) states: Vec<LocalState>,
    pub(crate) row_start: Vec<usize>,
    pub(crate) edges: Vec<Edge<P>>,
    pub(crate) labels: Vec<(String, Vec<bool>)>,
    pub(crate) automaton_names: Vec<String>,
    pub(crate) state_names: Vec<Vec<String>>,
}

impl<P: Probability> StateSpace<P> {
    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn state(&self, index: usize) -> &[LocalState] {
        &self.states[index * self.width..(index + 1) * self.width]
    }

    pub fn edges(&self, index: usize) -> &[Edge<P>] {
        &self.edges[self.row_start[index]..self.row_start[index + 1]]
    }

    /// Outgoing edges split by choice group.
    pub fn groups(&self, index: usize) -> impl Iterator<Item = &[Edge<P>]> {
        self.edges(index).chunk_by(|a, b| a.group == b.group)
    }

    pub fn successors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges(index).iter().map(|e| e.target as usize)
    }

    pub fn label(&self, name: &str) -> Option<&[bool]> {
        self.labels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn require_label(&self, name: &str) -> Result<&[bool]> {
        self.label(name).ok_or_else(|| Error::MissingLabel(name.into()))
    }

    pub fn hazard(&self) -> &[bool] {
        self.label(HAZARD_LABEL).expect("hazard label is always registered")
    }

    pub fn label_names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|(n, _)| n.as_str())
    }

    /// Evaluates an arbitrary predicate on every state.
    pub fn mark(&self, expr: &PredicateExpr, defs: &InDefinitions) -> Vec<bool> {
        let e = expr.expand_in(defs);
        (0..self.len()).map(|i| e.eval_plain(self.state(i))).collect()
    }

    pub fn automaton_names(&self) -> &[String] {
        &self.automaton_names
    }

    pub fn render_state(&self, index: usize) -> String {
        let parts: Vec<String> = self
            .state(index)
            .iter()
            .enumerate()
            .map(|(a, &l)| format!("{}={}", self.automaton_names[a], self.state_names[a][l as usize]))
            .collect();
        format!("({})", parts.join(", "))
    }

    /// Reverse adjacency in compressed row form: `(offsets, sources)`.
    pub fn predecessors(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.len();
        let mut count = vec![0usize; n + 1];
        for e in &self.edges {
            count[e.target as usize + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut sources = vec![0u32; self.edges.len()];
        for s in 0..n {
            for e in self.edges(s) {
                let t = e.target as usize;
                sources[fill[t]] = s as u32;
                fill[t] += 1;
            }
        }
        (count, sources)
    }

    /// Fails unless this space has the given flavor.
    pub fn expect_flavor(&self, expected: Flavor) -> Result<()> {
        if self.flavor == expected {
            Ok(())
        } else {
            Err(Error::WrongFlavor {
                expected: expected.to_string(),
                found: self.flavor.to_string(),
            })
        }
    }

    /// Maximum deviation of a choice group's probability mass from 1.
    pub fn max_mass_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.len() {
            for group in self.groups(s) {
                let sum: f64 = group.iter().map(|e| e.probability.as_f64()).sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }
}

impl<P: Probability> fmt::Debug for StateSpace<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSpace")
            .field("flavor", &self.flavor)
            .field("states", &self.len())
            .field("edges", &self.edges.len())
            .field("labels", &self.labels.iter().map(|(n, _)| n).collect::<Vec<_>>())
            .finish()
    }
}
