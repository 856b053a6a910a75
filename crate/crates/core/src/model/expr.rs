//! Boolean predicates over automaton states.

use std::collections::{BTreeMap, BTreeSet};

/// Local state index inside one automaton.
pub type LocalState = u16;

/// `automaton.state == state`, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub automaton: usize,
    pub state: usize,
}

impl Atom {
    pub fn new(automaton: usize, state: usize) -> Self {
        Self { automaton, state }
    }
}

/// Definitions of `in(d)` atoms introduced by per-demand injection.
///
/// An `In` atom without an entry here means plain state equality.
pub type InDefinitions = BTreeMap<Atom, PredicateExpr>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PredicateExpr {
    Const(bool),
    /// `automaton.state == state`
    Is(Atom),
    /// `automaton.in(state)`: observably in `state`, see [`InDefinitions`].
    In(Atom),
    Not(Box<PredicateExpr>),
    And(Vec<PredicateExpr>),
    Or(Vec<PredicateExpr>),
}

use PredicateExpr as E;

impl PredicateExpr {
    pub fn is(automaton: usize, state: usize) -> Self {
        E::Is(Atom::new(automaton, state))
    }

    pub fn in_state(automaton: usize, state: usize) -> Self {
        E::In(Atom::new(automaton, state))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        match self {
            E::Const(b) => E::Const(!b),
            E::Not(inner) => *inner,
            other => E::Not(Box::new(other)),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = PredicateExpr>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                E::Const(true) => {}
                E::Const(false) => return E::Const(false),
                E::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => E::Const(true),
            1 => out.pop().unwrap(),
            _ => E::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = PredicateExpr>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                E::Const(false) => {}
                E::Const(true) => return E::Const(true),
                E::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => E::Const(false),
            1 => out.pop().unwrap(),
            _ => E::Or(out),
        }
    }

    /// Evaluates against a global state vector. `In` atoms resolve through `defs`.
    pub fn eval(&self, state: &[LocalState], defs: &InDefinitions) -> bool {
        match self {
            E::Const(b) => *b,
            E::Is(a) => state[a.automaton] as usize == a.state,
            E::In(a) => match defs.get(a) {
                Some(def) => def.eval(state, defs),
                None => state[a.automaton] as usize == a.state,
            },
            E::Not(inner) => !inner.eval(state, defs),
            E::And(parts) => parts.iter().all(|p| p.eval(state, defs)),
            E::Or(parts) => parts.iter().any(|p| p.eval(state, defs)),
        }
    }

    /// Evaluates an expression that contains no `In` atoms.
    #[inline]
    pub fn eval_plain(&self, state: &[LocalState]) -> bool {
        match self {
            E::Const(b) => *b,
            E::Is(a) | E::In(a) => state[a.automaton] as usize == a.state,
            E::Not(inner) => !inner.eval_plain(state),
            E::And(parts) => parts.iter().all(|p| p.eval_plain(state)),
            E::Or(parts) => parts.iter().any(|p| p.eval_plain(state)),
        }
    }

    /// Rebuilds the expression, replacing atoms via `f(atom, is_in_atom)`.
    pub fn map_atoms(&self, f: &mut impl FnMut(Atom, bool) -> Option<PredicateExpr>) -> Self {
        match self {
            E::Const(b) => E::Const(*b),
            E::Is(a) => f(*a, false).unwrap_or(E::Is(*a)),
            E::In(a) => f(*a, true).unwrap_or(E::In(*a)),
            E::Not(inner) => inner.map_atoms(f).not(),
            E::And(parts) => E::and(parts.iter().map(|p| p.map_atoms(f))),
            E::Or(parts) => E::or(parts.iter().map(|p| p.map_atoms(f))),
        }
    }

    /// Inlines every `In` atom using `defs`, leaving only `Is` atoms.
    pub fn expand_in(&self, defs: &InDefinitions) -> Self {
        self.map_atoms(&mut |atom, is_in| {
            if !is_in {
                return None;
            }
            Some(match defs.get(&atom) {
                Some(def) => def.expand_in(defs),
                None => E::Is(atom),
            })
        })
    }

    /// Partially evaluates with `automaton` known to be in `state`.
    /// `In` atoms are left untouched; expand them first when needed.
    pub fn fix(&self, automaton: usize, state: usize) -> Self {
        self.map_atoms(&mut |atom, is_in| {
            (!is_in && atom.automaton == automaton).then_some(E::Const(atom.state == state))
        })
    }

    /// Constant-folds the expression.
    pub fn simplify(&self) -> Self {
        self.map_atoms(&mut |_, _| None)
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            E::Const(b) => Some(*b),
            _ => None,
        }
    }

    /// Automata referenced by `Is` or `In` atoms (without expansion).
    pub fn automata(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a, _| {
            out.insert(a.automaton);
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(Atom, bool)) {
        match self {
            E::Const(_) => {}
            E::Is(a) => f(*a, false),
            E::In(a) => f(*a, true),
            E::Not(inner) => inner.visit_atoms(f),
            E::And(parts) | E::Or(parts) => parts.iter().for_each(|p| p.visit_atoms(f)),
        }
    }

    pub fn mentions(&self, automaton: usize) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a, _| found |= a.automaton == automaton);
        found
    }

    /// Decides satisfiability by enumerating every combination of local
    /// states of the referenced automata. `domains[i]` is the state count of
    /// automaton `i`. The expression must not contain `In` atoms.
    pub fn satisfiable(&self, domains: &[usize]) -> bool {
        self.find_model(domains).is_some()
    }

    /// Returns a satisfying partial assignment `(automaton, state)` if one exists.
    pub fn find_model(&self, domains: &[usize]) -> Option<Vec<(usize, usize)>> {
        let e = self.simplify();
        if let Some(b) = e.as_const() {
            return b.then(Vec::new);
        }
        let vars: Vec<usize> = e.automata().into_iter().collect();
        let mut state = vec![0 as LocalState; domains.len()];
        let mut counter = vec![0usize; vars.len()];
        loop {
            for (slot, &v) in counter.iter().zip(&vars) {
                state[v] = *slot as LocalState;
            }
            if e.eval_plain(&state) {
                return Some(vars.iter().map(|&v| (v, state[v] as usize)).collect());
            }
            // odometer
            let mut i = 0;
            loop {
                if i == vars.len() {
                    return None;
                }
                counter[i] += 1;
                if counter[i] < domains[vars[i]] {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
        }
    }
}
