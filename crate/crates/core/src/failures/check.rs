use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use super::FailurePattern;
use crate::error::{Error, Result};
use crate::model::{compose, AutomatonKind, ComposeOptions, Flavor, PredicateExpr, StateSpace, SystemModel};
use crate::scalar::Probability;

/// Default state cap for [`check_conservative`], per model and for the
/// pair exploration.
pub const CONSERVATIVE_CAP: usize = 100_000;

/// Observable predicates: the hazard and `A.in(x)` for every state `x` of
/// every functional automaton `A` of `original`, matched by name in `model`.
fn observables(original: &SystemModel, model: &SystemModel) -> Result<Vec<PredicateExpr>> {
    let mut out = vec![model.expand(&model.hazard)];
    for aut in original.automata.iter().filter(|a| a.kind == AutomatonKind::Functional) {
        for state in &aut.states {
            let atom = model.atom(&aut.name, state)?;
            out.push(model.expand(&PredicateExpr::In(atom)));
        }
    }
    Ok(out)
}

fn observations(space: &StateSpace<f64>, preds: &[PredicateExpr]) -> Vec<Vec<u64>> {
    (0..space.len())
        .map(|i| {
            let s = space.state(i);
            let mut bits = vec![0u64; preds.len().div_ceil(64)];
            for (j, p) in preds.iter().enumerate() {
                if p.eval_plain(s) {
                    bits[j / 64] |= 1 << (j % 64);
                }
            }
            bits
        })
        .collect()
}

/// Decides whether both models produce the same set of observable traces.
///
/// Both models are composed nondeterministically; the check explores pairs
/// of state sets reached by equal observation sequences (simultaneous
/// subset construction), so it is exact for finite traces. Observables are
/// the hazard and the local states of `original`'s functional automata.
pub fn check_conservative(original: &SystemModel, extended: &SystemModel, cap: usize) -> Result<bool> {
    let options = ComposeOptions::with_cap(cap);
    let left: StateSpace<f64> = compose(original, Flavor::Nondeterministic, &options)?;
    let right: StateSpace<f64> = compose(extended, Flavor::Nondeterministic, &options)?;
    let lo = observations(&left, &observables(original, original)?);
    let ro = observations(&right, &observables(original, extended)?);
    if lo[0] != ro[0] {
        return Ok(false);
    }
    let start = (vec![0u32], vec![0u32]);
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some((ls, rs)) = queue.pop_front() {
        let l = split(&left, &lo, &ls);
        let r = split(&right, &ro, &rs);
        if !l.keys().eq(r.keys()) {
            return Ok(false);
        }
        for (lset, rset) in l.into_values().zip(r.into_values()) {
            let pair = (lset.into_iter().collect(), rset.into_iter().collect());
            if !seen.contains(&pair) {
                if seen.len() >= cap {
                    return Err(Error::StateCapExceeded { cap });
                }
                seen.insert(pair.clone());
                queue.push_back(pair);
            }
        }
    }
    Ok(true)
}

fn per_demand(model: &SystemModel, failure: &str) -> Result<(usize, PredicateExpr)> {
    let decl = model
        .failure(failure)
        .ok_or_else(|| Error::UnknownFailure(failure.into()))?;
    match &decl.pattern {
        FailurePattern::PerDemand { demand, .. } => Ok((decl.automaton, demand.clone())),
        _ => Err(Error::Failure {
            name: failure.into(),
            reason: "not a per-demand failure mode".into(),
        }),
    }
}

/// Successors of `set`, grouped by observation.
fn split<'o>(space: &StateSpace<f64>, obs: &'o [Vec<u64>], set: &[u32]) -> BTreeMap<&'o [u64], BTreeSet<u32>> {
    let mut by_obs: BTreeMap<&[u64], BTreeSet<u32>> = BTreeMap::new();
    for &s in set {
        for t in space.successors(s as usize) {
            by_obs.entry(obs[t].as_slice()).or_default().insert(t as u32);
        }
    }
    by_obs
}

/// True iff the failure automaton changes state only on steps whose source
/// state satisfies the demand.
pub fn demand_gating_holds<P: Probability>(model: &SystemModel, space: &StateSpace<P>, failure: &str) -> Result<bool> {
    let (f, demand) = per_demand(model, failure)?;
    let demanded = space.mark(&demand, &model.in_definitions);
    Ok((0..space.len()).all(|s| demanded[s] || space.successors(s).all(|t| space.state(t)[f] == space.state(s)[f])))
}

/// True iff in every state where the affected automaton is in a merged
/// state `s'`, exactly one successor `d` of `s` has `in(d)` true.
pub fn in_partition_holds<P: Probability>(model: &SystemModel, space: &StateSpace<P>, failure: &str) -> Result<bool> {
    let decl = model
        .failure(failure)
        .ok_or_else(|| Error::UnknownFailure(failure.into()))?;
    let (Some(injection), Some(m)) = (&decl.injection, decl.affects) else {
        return Err(Error::Failure {
            name: failure.into(),
            reason: "not injected".into(),
        });
    };
    for merged in &injection.merged {
        let mut candidates = merged.success.clone();
        for &d in &merged.failed {
            if !candidates.contains(&d) {
                candidates.push(d);
            }
        }
        let preds: Vec<PredicateExpr> = candidates
            .iter()
            .map(|&d| PredicateExpr::in_state(m, d).expand_in(&model.in_definitions))
            .collect();
        for i in 0..space.len() {
            let s = space.state(i);
            if s[m] as usize == merged.merged && preds.iter().filter(|p| p.eval_plain(s)).count() != 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
