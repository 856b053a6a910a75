use std::collections::HashSet;
use std::fmt;

use super::compose::explore_for_diagnostics;
use super::{Flavor, SystemModel, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub automaton: Option<String>,
    /// Local state name for structural problems, rendered global state for
    /// reachability problems.
    pub state: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn error(automaton: Option<&str>, state: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            automaton: automaton.map(str::to_string),
            state: state.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })?;
        if let Some(a) = &self.automaton {
            write!(f, ": automaton '{a}'")?;
        }
        if let Some(s) = &self.state {
            write!(f, " in {s}")?;
        }
        write!(f, ": {}", self.message)
    }
}

const DIAGNOSTIC_LIMIT: usize = 50;

/// Checks a model for use as a probabilistic model.
///
/// Guards of automata that carry probabilistic branches must be mutually
/// exclusive; purely deterministic-branch automata may still overlap, which
/// is how qualitative nondeterminism is written.
pub fn validate(model: &SystemModel) -> Result<Vec<Diagnostic>> {
    let exclusive = model
        .automata
        .iter()
        .map(|a| {
            a.transitions
                .iter()
                .any(|t| t.branches.len() > 1 || t.branches.iter().any(|b| b.probability != 1.0))
        })
        .collect();
    run(model, Flavor::Mdp, exclusive, DEFAULT_STATE_CAP)
}

/// Checks the preconditions of [`compose`](super::compose) for `flavor`.
///
/// Nondeterministic: probabilities are ignored. Dtmc: sums and mutual
/// exclusion everywhere. Mdp: sums only.
pub fn validate_flavor(model: &SystemModel, flavor: Flavor, state_cap: usize) -> Result<Vec<Diagnostic>> {
    let exclusive = vec![flavor == Flavor::Dtmc; model.automata.len()];
    run(model, flavor, exclusive, state_cap)
}

fn run(model: &SystemModel, flavor: Flavor, exclusive: Vec<bool>, cap: usize) -> Result<Vec<Diagnostic>> {
    let mut out = structural(model, flavor != Flavor::Nondeterministic);
    if out.iter().any(Diagnostic::is_error) {
        return Ok(out);
    }
    let explore_as = if flavor == Flavor::Dtmc {
        Flavor::Dtmc
    } else {
        Flavor::Nondeterministic
    };
    for err in explore_for_diagnostics(model, explore_as, exclusive, cap, DIAGNOSTIC_LIMIT)? {
        out.push(match err {
            Error::Deadlock { automaton, state } => Diagnostic::error(
                Some(&automaton),
                Some(&state),
                "no enabled transition (transition relation is not total)",
            ),
            Error::Nondeterminism {
                automaton,
                local,
                guards,
                state,
            } => Diagnostic::error(
                Some(&automaton),
                Some(&state),
                format!("guards of '{local}' overlap: [{guards}]"),
            ),
            other => Diagnostic::error(None, None, other.to_string()),
        });
    }
    Ok(out)
}

fn structural(model: &SystemModel, probabilistic: bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    for aut in &model.automata {
        let a = Some(aut.name.as_str());
        if !names.insert(aut.name.as_str()) {
            out.push(Diagnostic::error(a, None, "duplicate automaton name"));
        }
        if aut.states.is_empty() {
            out.push(Diagnostic::error(a, None, "automaton has no states"));
            continue;
        }
        if aut.states.len() > usize::from(u16::MAX) {
            out.push(Diagnostic::error(a, None, "too many local states"));
        }
        let mut seen = HashSet::new();
        for s in &aut.states {
            if !seen.insert(s.as_str()) {
                out.push(Diagnostic::error(a, Some(s), "duplicate state name"));
            }
        }
        if aut.initial >= aut.states.len() {
            out.push(Diagnostic::error(a, None, "initial state out of range"));
        }
        for t in &aut.transitions {
            let Some(source) = aut.states.get(t.source) else {
                out.push(Diagnostic::error(
                    a,
                    None,
                    format!("transition source #{} out of range", t.source),
                ));
                continue;
            };
            let s = Some(source.as_str());
            if let Err(e) = model.check_expr(&t.guard) {
                out.push(Diagnostic::error(a, s, e.to_string()));
            }
            if t.branches.is_empty() {
                out.push(Diagnostic::error(a, s, "transition has no target"));
            }
            for b in &t.branches {
                if b.target >= aut.states.len() {
                    out.push(Diagnostic::error(a, s, format!("target #{} out of range", b.target)));
                }
                if probabilistic && !(b.probability > 0.0 && b.probability <= 1.0) {
                    out.push(Diagnostic::error(
                        a,
                        s,
                        format!("branch probability {} outside (0, 1]", b.probability),
                    ));
                }
            }
            let sum = t.probability_sum();
            if probabilistic && (sum - 1.0).abs() > 1e-9 {
                out.push(Diagnostic::error(a, s, format!("probabilities sum to {}", short(sum))));
            }
        }
    }
    if let Err(e) = model.check_expr(&model.hazard) {
        out.push(Diagnostic::error(None, None, format!("hazard: {e}")));
    }
    for (atom, def) in &model.in_definitions {
        if let Err(e) = model
            .check_expr(def)
            .and_then(|_| model.check_expr(&super::PredicateExpr::In(*atom)))
        {
            out.push(Diagnostic::error(None, None, format!("in-predicate definition: {e}")));
        }
    }
    for f in &model.failures {
        if f.automaton >= model.automata.len() {
            out.push(Diagnostic::error(
                None,
                None,
                format!("failure mode '{}' has no automaton", f.name),
            ));
        }
    }
    out
}

/// Up to 12 significant decimals, trailing zeros trimmed: 0.3 + 0.6 prints as 0.9.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}
