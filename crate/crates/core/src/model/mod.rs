//! Synchronous parallel automata and their global state space.
//!
//! A [`SystemModel`] is a list of automata executed in lock step: in every
//! global step each automaton takes exactly one enabled transition, with all
//! guards evaluated against the state before the step.

mod compose;
mod expr;
mod space;
mod validate;

pub use compose::{compose, ComposeOptions, Flavor, DEFAULT_STATE_CAP};
pub use expr::{Atom, InDefinitions, LocalState, PredicateExpr};
pub use space::{Edge, StateSpace, HAZARD_LABEL};
pub use validate::{validate, validate_flavor, Diagnostic, Severity};

use crate::error::{Error, Result};
use crate::failures::FailureModeDecl;

/// One probabilistic outcome of a transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: f64,
    pub target: usize,
}

/// A guarded transition group `source -> {p1: t1, p2: t2, ...} [guard]`.
///
/// A single deterministic transition is a group with one branch of
/// probability 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: usize,
    pub guard: PredicateExpr,
    pub branches: Vec<Branch>,
}

impl Transition {
    pub fn new(source: usize, target: usize, guard: PredicateExpr) -> Self {
        Self {
            source,
            guard,
            branches: vec![Branch {
                probability: 1.0,
                target,
            }],
        }
    }

    pub fn distribution(source: usize, guard: PredicateExpr, branches: &[(f64, usize)]) -> Self {
        Self {
            source,
            guard,
            branches: branches
                .iter()
                .map(|&(probability, target)| Branch { probability, target })
                .collect(),
        }
    }

    pub fn probability_sum(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutomatonKind {
    Functional,
    Failure,
    Decide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Automaton {
    pub name: String,
    pub states: Vec<String>,
    pub initial: usize,
    pub transitions: Vec<Transition>,
    pub kind: AutomatonKind,
}

impl Automaton {
    pub fn new(name: impl Into<String>, states: &[&str], initial: usize, kind: AutomatonKind) -> Self {
        Self {
            name: name.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
            initial,
            transitions: Vec::new(),
            kind,
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn transitions_from(&self, source: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.source == source)
    }
}

/// A full vector of local states, one per automaton in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState(pub Vec<LocalState>);

/// Seconds per global step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStep(f64);

impl TimeStep {
    pub fn from_seconds(seconds: f64) -> Result<Self> {
        if seconds > 0.0 && seconds.is_finite() {
            Ok(Self(seconds))
        } else {
            Err(Error::InvalidModel(format!(
                "temporal resolution must be positive, got {seconds} s"
            )))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    /// Converts a duration to a step count. Fails unless the duration is an
    /// integral multiple of the step (relative tolerance 1e-9).
    pub fn steps_for(self, seconds: f64) -> Result<u64> {
        if !(seconds >= 0.0 && seconds.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid duration {seconds} s")));
        }
        let k = seconds / self.0;
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "duration {seconds} s is not an integral multiple of the time step {} s",
                self.0
            )));
        }
        Ok(rounded as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    /// Functional automata first, then one automaton per failure mode
    /// (states `no`, `yes`), then any decide automata.
    pub automata: Vec<Automaton>,
    pub failures: Vec<FailureModeDecl>,
    pub hazard_name: String,
    pub hazard: PredicateExpr,
    pub in_definitions: InDefinitions,
    pub time_step: TimeStep,
    pub horizon: Option<u64>,
}

impl SystemModel {
    pub fn new(automata: Vec<Automaton>, hazard: PredicateExpr, time_step: TimeStep) -> Self {
        Self {
            automata,
            failures: Vec::new(),
            hazard_name: "H".into(),
            hazard,
            in_definitions: InDefinitions::new(),
            time_step,
            horizon: None,
        }
    }

    pub fn automaton_index(&self, name: &str) -> Option<usize> {
        self.automata.iter().position(|a| a.name == name)
    }

    pub fn atom(&self, automaton: &str, state: &str) -> Result<Atom> {
        let a = self
            .automaton_index(automaton)
            .ok_or_else(|| Error::UnknownAutomaton(automaton.into()))?;
        let s = self.automata[a].state_index(state).ok_or_else(|| Error::UnknownState {
            automaton: automaton.into(),
            state: state.into(),
        })?;
        Ok(Atom::new(a, s))
    }

    pub fn failure(&self, name: &str) -> Option<&FailureModeDecl> {
        self.failures.iter().find(|f| f.name == name)
    }

    pub fn failure_names(&self) -> Vec<String> {
        self.failures.iter().map(|f| f.name.clone()).collect()
    }

    pub fn domains(&self) -> Vec<usize> {
        self.automata.iter().map(|a| a.states.len()).collect()
    }

    pub fn initial_state(&self) -> GlobalState {
        GlobalState(self.automata.iter().map(|a| a.initial as LocalState).collect())
    }

    /// Checks that every atom of `expr` resolves against this model.
    pub fn check_expr(&self, expr: &PredicateExpr) -> Result<()> {
        let mut err = None;
        expr.visit_atoms(&mut |atom, _| {
            let ok = self
                .automata
                .get(atom.automaton)
                .is_some_and(|a| atom.state < a.states.len());
            if !ok && err.is_none() {
                err = Some(Error::UnresolvedAtom {
                    automaton: atom.automaton,
                    state: atom.state,
                });
            }
        });
        err.map_or(Ok(()), Err)
    }

    pub fn evaluate(&self, expr: &PredicateExpr, state: &GlobalState) -> Result<bool> {
        if state.0.len() != self.automata.len() {
            return Err(Error::StateWidth {
                expected: self.automata.len(),
                got: state.0.len(),
            });
        }
        for (i, &l) in state.0.iter().enumerate() {
            if l as usize >= self.automata[i].states.len() {
                return Err(Error::UnresolvedAtom {
                    automaton: i,
                    state: l as usize,
                });
            }
        }
        self.check_expr(expr)?;
        for def in self.in_definitions.values() {
            self.check_expr(def)?;
        }
        Ok(expr.eval(&state.0, &self.in_definitions))
    }

    /// Expression with all `in(..)` atoms inlined.
    pub fn expand(&self, expr: &PredicateExpr) -> PredicateExpr {
        expr.expand_in(&self.in_definitions)
    }

    pub fn atom_name(&self, atom: Atom) -> String {
        match self.automata.get(atom.automaton) {
            Some(a) => format!("{}.{}", a.name, a.states.get(atom.state).map_or("?", |s| s.as_str())),
            None => format!("#{}.{}", atom.automaton, atom.state),
        }
    }

    /// Renders an expression in the modeling-language syntax.
    pub fn display_expr(&self, expr: &PredicateExpr) -> String {
        fn go(m: &SystemModel, e: &PredicateExpr, out: &mut String) {
            match e {
                PredicateExpr::Const(b) => out.push_str(if *b { "true" } else { "false" }),
                PredicateExpr::Is(a) => {
                    let (aut, st) = m.names(*a);
                    out.push_str(&format!("{aut}.state == {st}"));
                }
                PredicateExpr::In(a) => {
                    let (aut, st) = m.names(*a);
                    out.push_str(&format!("{aut}.in({st})"));
                }
                PredicateExpr::Not(inner) => {
                    out.push('!');
                    let atomic = matches!(**inner, PredicateExpr::Const(_) | PredicateExpr::In(_));
                    if !atomic {
                        out.push('(');
                    }
                    go(m, inner, out);
                    if !atomic {
                        out.push(')');
                    }
                }
                PredicateExpr::And(parts) => {
                    for (i, p) in parts.iter().enumerate() {
                        if i > 0 {
                            out.push_str(" & ");
                        }
                        let wrap = matches!(p, PredicateExpr::Or(_));
                        if wrap {
                            out.push('(');
                        }
                        go(m, p, out);
                        if wrap {
                            out.push(')');
                        }
                    }
                }
                PredicateExpr::Or(parts) => {
                    for (i, p) in parts.iter().enumerate() {
                        if i > 0 {
                            out.push_str(" | ");
                        }
                        go(m, p, out);
                    }
                }
            }
        }
        let mut out = String::new();
        go(self, expr, &mut out);
        out
    }

    fn names(&self, atom: Atom) -> (&str, &str) {
        match self.automata.get(atom.automaton) {
            Some(a) => (a.name.as_str(), a.states.get(atom.state).map_or("?", |s| s.as_str())),
            None => ("?", "?"),
        }
    }

    pub fn render_state(&self, state: &[LocalState]) -> String {
        let parts: Vec<String> = self
            .automata
            .iter()
            .zip(state)
            .map(|(a, &l)| format!("{}={}", a.name, a.states[l as usize]))
            .collect();
        format!("({})", parts.join(", "))
    }
}
