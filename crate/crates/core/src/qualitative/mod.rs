//! Deductive cause-consequence analysis: which sets of failure modes can
//! lead to the hazard.
//!
//! A set Γ of failure modes is critical when some path reaches the hazard
//! while no failure mode outside Γ has occurred before, i.e. the initial
//! state satisfies `E[!(Δ\Γ) U H]`.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::failures::{instantiate, occurrence_label, AnalysisMode, FailureSetup};
use crate::model::{compose, ComposeOptions, Flavor, StateSpace, SystemModel};
use crate::scalar::Probability;

/// Meaning of "failure mode δ has occurred" in a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Occurrence {
    /// The failure automaton is currently not in `no`.
    #[default]
    Current,
    /// The failure automaton has left `no` somewhere on the path so far.
    Ever,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalSet {
    /// Sorted failure mode names.
    pub failures: Vec<String>,
    pub minimal: bool,
    /// State indices of one path from the initial state to a hazard state
    /// on which only members of the set occur before the hazard.
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DccaStats {
    pub states: usize,
    pub checks: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DccaResult {
    pub hazard: String,
    /// The hazard is reachable without any failure; `minimal_critical_sets`
    /// then holds only the empty set.
    pub functional_violation: bool,
    pub minimal_critical_sets: Vec<CriticalSet>,
    pub stats: DccaStats,
}

/// Occurrence bit masks per state, bit `i` for `delta[i]`.
struct Occurrences {
    masks: Vec<u64>,
}

impl Occurrences {
    fn new<P: Probability>(space: &StateSpace<P>, delta: &[String]) -> Result<Self> {
        if delta.len() > 64 {
            return Err(Error::InvalidArgument(format!(
                "at most 64 failure modes are supported, got {}",
                delta.len()
            )));
        }
        let mut masks = vec![0u64; space.len()];
        for (bit, name) in delta.iter().enumerate() {
            let label = space.require_label(&occurrence_label(name))?;
            for (m, &on) in masks.iter_mut().zip(label) {
                if on {
                    *m |= 1 << bit;
                }
            }
        }
        Ok(Self { masks })
    }
}

fn gamma_mask(delta: &[String], gamma: &[impl AsRef<str>]) -> Result<u64> {
    let mut mask = 0u64;
    for g in gamma {
        let i = delta
            .iter()
            .position(|d| d == g.as_ref())
            .ok_or_else(|| Error::UnknownFailure(g.as_ref().into()))?;
        mask |= 1 << i;
    }
    Ok(mask)
}

/// Decides whether `gamma` is critical for the space's hazard label, with
/// `delta` the full set of failure modes considered.
pub fn check_critical<P: Probability>(
    space: &StateSpace<P>,
    gamma: &[impl AsRef<str>],
    delta: &[String],
    occurrence: Occurrence,
) -> Result<bool> {
    Ok(critical_witness(space, gamma, delta, occurrence)?.is_some())
}

/// Like [`check_critical`], returning a witness path when critical.
pub fn critical_witness<P: Probability>(
    space: &StateSpace<P>,
    gamma: &[impl AsRef<str>],
    delta: &[String],
    occurrence: Occurrence,
) -> Result<Option<Vec<usize>>> {
    let occ = Occurrences::new(space, delta)?;
    let forbidden = !gamma_mask(delta, gamma)?;
    let preds = space.predecessors();
    Ok(match occurrence {
        Occurrence::Current => until_current(space, &occ, forbidden, &preds),
        Occurrence::Ever => until_ever(space, &occ, forbidden),
    })
}

/// Backward least fixpoint of `E[allowed U H]`; each state added remembers
/// the successor through which it entered the set.
fn until_current<P: Probability>(
    space: &StateSpace<P>,
    occ: &Occurrences,
    forbidden: u64,
    (offsets, sources): &(Vec<usize>, Vec<u32>),
) -> Option<Vec<usize>> {
    let hazard = space.hazard();
    let n = space.len();
    const NONE: u32 = u32::MAX;
    let mut next = vec![NONE; n];
    let mut in_set = vec![false; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if hazard[s] {
            in_set[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        if in_set[space.initial()] {
            break;
        }
        for &s in &sources[offsets[t]..offsets[t + 1]] {
            let s = s as usize;
            if !in_set[s] && occ.masks[s] & forbidden == 0 {
                in_set[s] = true;
                next[s] = t as u32;
                queue.push_back(s);
            }
        }
    }
    let mut s = space.initial();
    if !in_set[s] {
        return None;
    }
    let mut path = vec![s];
    while !hazard[s] {
        s = next[s] as usize;
        path.push(s);
    }
    Some(path)
}

/// Forward search over (state, failures occurred so far) pairs.
fn until_ever<P: Probability>(space: &StateSpace<P>, occ: &Occurrences, forbidden: u64) -> Option<Vec<usize>> {
    let hazard = space.hazard();
    let start = (space.initial(), occ.masks[space.initial()]);
    let mut parent: HashMap<(usize, u64), (usize, u64)> = HashMap::new();
    parent.insert(start, start);
    let mut queue = VecDeque::from([start]);
    while let Some(node @ (s, history)) = queue.pop_front() {
        if hazard[s] {
            let mut path = vec![s];
            let mut cur = node;
            while cur != start {
                cur = parent[&cur];
                path.push(cur.0);
            }
            path.reverse();
            return Some(path);
        }
        if history & forbidden != 0 {
            continue;
        }
        for t in space.successors(s) {
            let succ = (t, history | occ.masks[t]);
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(succ) {
                e.insert(node);
                queue.push_back(succ);
            }
        }
    }
    None
}

/// Enumerates subsets of `delta` by cardinality (lexicographic by sorted
/// name within a level), skipping supersets of critical sets, and returns
/// exactly the minimal critical sets. Checks within a level run on the
/// current rayon pool; the result does not depend on the worker count.
pub fn minimal_critical_sets<P: Probability>(
    space: &StateSpace<P>,
    hazard: &str,
    delta: &[String],
    occurrence: Occurrence,
) -> Result<DccaResult> {
    let mut names = delta.to_vec();
    names.sort();
    names.dedup();
    let occ = Occurrences::new(space, &names)?;
    let preds = space.predecessors();
    let check = |set: u64| -> Option<Vec<usize>> {
        match occurrence {
            Occurrence::Current => until_current(space, &occ, !set, &preds),
            Occurrence::Ever => until_ever(space, &occ, !set),
        }
    };
    let to_names = |set: u64| -> Vec<String> {
        (0..names.len())
            .filter(|i| set & (1 << i) != 0)
            .map(|i| names[i].clone())
            .collect()
    };
    let mut stats = DccaStats {
        states: space.len(),
        ..DccaStats::default()
    };
    let mut found: Vec<(u64, Vec<usize>)> = Vec::new();

    stats.checks += 1;
    if let Some(witness) = check(0) {
        return Ok(DccaResult {
            hazard: hazard.into(),
            functional_violation: true,
            minimal_critical_sets: vec![CriticalSet {
                failures: Vec::new(),
                minimal: true,
                witness,
            }],
            stats,
        });
    }
    for size in 1..=names.len() {
        let mut candidates = Vec::new();
        for set in combinations(names.len(), size) {
            if found.iter().any(|(f, _)| set & f == *f) {
                stats.pruned += 1;
            } else {
                candidates.push(set);
            }
        }
        stats.checks += candidates.len();
        let results: Vec<Option<Vec<usize>>> = candidates.par_iter().map(|&set| check(set)).collect();
        for (set, r) in candidates.into_iter().zip(results) {
            if let Some(w) = r {
                found.push((set, w));
            }
        }
    }
    Ok(DccaResult {
        hazard: hazard.into(),
        functional_violation: false,
        minimal_critical_sets: found
            .into_iter()
            .map(|(set, witness)| CriticalSet {
                failures: to_names(set),
                minimal: true,
                witness,
            })
            .collect(),
        stats,
    })
}

/// All `size`-subsets of `0..n` as bit masks, in lexicographic order of
/// their sorted index lists.
fn combinations(n: usize, size: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..size).collect();
    if size > n {
        return out;
    }
    loop {
        out.push(idx.iter().fold(0u64, |m, &i| m | 1 << i));
        let Some(i) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Runs DCCA on a model: every failure automaton in its qualitative form,
/// nondeterministic composition, minimal critical set search.
pub fn dcca(model: &SystemModel, occurrence: Occurrence, state_cap: usize) -> Result<(DccaResult, StateSpace<f64>)> {
    let qualitative = instantiate(model, &FailureSetup::new(AnalysisMode::Qualitative))?;
    let space = compose(
        &qualitative,
        Flavor::Nondeterministic,
        &ComposeOptions::with_cap(state_cap),
    )?;
    let result = minimal_critical_sets(&space, &model.hazard_name, &model.failure_names(), occurrence)?;
    Ok((result, space))
}
