use std::collections::{HashMap, HashSet};
use std::fmt;

use super::expr::{LocalState, PredicateExpr};
use super::space::{Edge, StateSpace, HAZARD_LABEL};
use super::SystemModel;
use crate::error::{Error, Result};
use crate::failures::occurrence_label;
use crate::scalar::Probability;

/// How transition probabilities and overlapping guards are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// Kripke structure: every enabled outcome is a possible successor,
    /// probabilities are ignored.
    Nondeterministic,
    /// Exactly one enabled transition group per automaton and state.
    Dtmc,
    /// Each enabled transition group is a nondeterministic choice.
    Mdp,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Nondeterministic => "nondeterministic",
            Flavor::Dtmc => "dtmc",
            Flavor::Mdp => "mdp",
        })
    }
}

pub const DEFAULT_STATE_CAP: usize = 10_000_000;

#[derive(Debug, Clone)]
pub struct ComposeOptions {
    pub state_cap: usize,
    /// Additional predicates cached per state, next to the hazard and the
    /// failure occurrence labels.
    pub extra_labels: Vec<(String, PredicateExpr)>,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        Self {
            state_cap: DEFAULT_STATE_CAP,
            extra_labels: Vec::new(),
        }
    }
}

impl ComposeOptions {
    pub fn with_cap(state_cap: usize) -> Self {
        Self {
            state_cap,
            ..Self::default()
        }
    }
}

/// Builds the reachable lock-step product of all automata.
pub fn compose<P: Probability>(model: &SystemModel, flavor: Flavor, options: &ComposeOptions) -> Result<StateSpace<P>> {
    Explorer::new(model, flavor, options)?.run(None)
}

/// Explores like [`compose`] but records deadlocks and overlapping guards
/// instead of stopping at the first one.
/// `exclusive[i]` requests the overlap check for automaton `i` even when the
/// flavor itself tolerates overlapping guards.
pub(crate) fn explore_for_diagnostics(
    model: &SystemModel,
    flavor: Flavor,
    exclusive: Vec<bool>,
    state_cap: usize,
    limit: usize,
) -> Result<Vec<Error>> {
    let options = ComposeOptions::with_cap(state_cap);
    let mut sink = Sink {
        errors: Vec::new(),
        seen: HashSet::new(),
        limit,
    };
    let mut explorer = Explorer::new(model, flavor, &options)?;
    explorer.exclusive = exclusive;
    explorer.run::<f64>(Some(&mut sink))?;
    Ok(sink.errors)
}

struct Sink {
    errors: Vec<Error>,
    seen: HashSet<(usize, usize, u8)>,
    limit: usize,
}

struct CompiledTransition {
    guard: PredicateExpr,
    /// Branches merged by target, in first-appearance order.
    branches: Vec<(f64, LocalState)>,
    original: usize,
}

struct Explorer<'m> {
    model: &'m SystemModel,
    flavor: Flavor,
    cap: usize,
    by_source: Vec<Vec<Vec<CompiledTransition>>>,
    labels: Vec<(String, PredicateExpr)>,
    exclusive: Vec<bool>,
}

impl<'m> Explorer<'m> {
    fn new(model: &'m SystemModel, flavor: Flavor, options: &ComposeOptions) -> Result<Self> {
        let defs = &model.in_definitions;
        let mut by_source = Vec::with_capacity(model.automata.len());
        for aut in &model.automata {
            if aut.initial >= aut.states.len() {
                return Err(Error::InvalidModel(format!(
                    "automaton '{}' has an invalid initial state",
                    aut.name
                )));
            }
            let mut rows: Vec<Vec<CompiledTransition>> = (0..aut.states.len()).map(|_| Vec::new()).collect();
            for (ti, t) in aut.transitions.iter().enumerate() {
                model.check_expr(&t.guard)?;
                let mut branches: Vec<(f64, LocalState)> = Vec::new();
                for b in &t.branches {
                    if b.target >= aut.states.len() || t.source >= aut.states.len() {
                        return Err(Error::InvalidModel(format!(
                            "automaton '{}' transition #{ti} references an unknown state",
                            aut.name
                        )));
                    }
                    if b.probability <= 0.0 {
                        continue;
                    }
                    let target = b.target as LocalState;
                    match branches.iter_mut().find(|(_, t)| *t == target) {
                        Some(slot) => slot.0 += b.probability,
                        None => branches.push((b.probability, target)),
                    }
                }
                if branches.is_empty() {
                    continue;
                }
                rows[t.source].push(CompiledTransition {
                    guard: t.guard.expand_in(defs),
                    branches,
                    original: ti,
                });
            }
            by_source.push(rows);
        }
        let mut labels = vec![(HAZARD_LABEL.to_string(), model.hazard.expand_in(defs))];
        for f in &model.failures {
            labels.push((
                occurrence_label(&f.name),
                PredicateExpr::is(f.automaton, crate::failures::NO).not(),
            ));
        }
        for (name, e) in &options.extra_labels {
            model.check_expr(e)?;
            labels.push((name.clone(), e.expand_in(defs)));
        }
        for (_, e) in &labels {
            model.check_expr(e)?;
        }
        Ok(Self {
            model,
            flavor,
            cap: options.state_cap,
            by_source,
            labels,
            exclusive: Vec::new(),
        })
    }

    fn run<P: Probability>(&self, mut sink: Option<&mut Sink>) -> Result<StateSpace<P>> {
        let width = self.model.automata.len();
        let mut index: HashMap<Box<[LocalState]>, u32> = HashMap::new();
        let mut states: Vec<LocalState> = Vec::new();
        let mut label_values: Vec<Vec<bool>> = vec![Vec::new(); self.labels.len()];
        let mut row_start = vec![0usize];
        let mut edges: Vec<Edge<P>> = Vec::new();

        let initial: Vec<LocalState> = self.model.initial_state().0;
        self.insert(&initial, &mut index, &mut states, &mut label_values)?;

        let mut current = vec![0 as LocalState; width];
        let mut scratch = vec![0 as LocalState; width];
        let mut enabled: Vec<Vec<&CompiledTransition>> = vec![Vec::new(); width];
        let mut processed = 0usize;
        while processed < index.len() {
            current.copy_from_slice(&states[processed * width..(processed + 1) * width]);
            let mut stuck = false;
            for (a, slot) in enabled.iter_mut().enumerate() {
                slot.clear();
                let local = current[a] as usize;
                slot.extend(self.by_source[a][local].iter().filter(|t| t.guard.eval_plain(&current)));
                if slot.is_empty() {
                    let err = Error::Deadlock {
                        automaton: self.model.automata[a].name.clone(),
                        state: self.model.render_state(&current),
                    };
                    match sink.as_deref_mut() {
                        Some(s) => {
                            s.record(a, local, 0, err);
                            stuck = true;
                        }
                        None => return Err(err),
                    }
                } else if slot.len() > 1 && (self.flavor == Flavor::Dtmc || self.exclusive.get(a) == Some(&true)) {
                    let aut = &self.model.automata[a];
                    let guards: Vec<String> = slot
                        .iter()
                        .map(|t| self.model.display_expr(&aut.transitions[t.original].guard))
                        .collect();
                    let err = Error::Nondeterminism {
                        automaton: aut.name.clone(),
                        local: aut.states[local].clone(),
                        guards: guards.join("; "),
                        state: self.model.render_state(&current),
                    };
                    match sink.as_deref_mut() {
                        Some(s) => {
                            s.record(a, local, 1, err);
                            if self.flavor == Flavor::Dtmc {
                                slot.truncate(1);
                            }
                        }
                        None => return Err(err),
                    }
                }
            }
            if !stuck {
                match self.flavor {
                    Flavor::Nondeterministic => {
                        let factors: Vec<Vec<(P, LocalState)>> = enabled
                            .iter()
                            .map(|ts| {
                                let mut targets: Vec<LocalState> = Vec::new();
                                for t in ts {
                                    for &(_, tgt) in &t.branches {
                                        if !targets.contains(&tgt) {
                                            targets.push(tgt);
                                        }
                                    }
                                }
                                let w = P::one() / P::from_model(targets.len() as f64);
                                targets.into_iter().map(|t| (w, t)).collect()
                            })
                            .collect();
                        self.expand_group(
                            0,
                            &factors,
                            &mut scratch,
                            &mut index,
                            &mut states,
                            &mut label_values,
                            &mut edges,
                        )?;
                    }
                    Flavor::Dtmc => {
                        let factors: Vec<Vec<(P, LocalState)>> = enabled.iter().map(|ts| to_factor(ts[0])).collect();
                        self.expand_group(
                            0,
                            &factors,
                            &mut scratch,
                            &mut index,
                            &mut states,
                            &mut label_values,
                            &mut edges,
                        )?;
                    }
                    Flavor::Mdp => {
                        let mut choice = vec![0usize; width];
                        let mut group = 0u32;
                        loop {
                            let factors: Vec<Vec<(P, LocalState)>> =
                                enabled.iter().zip(&choice).map(|(ts, &c)| to_factor(ts[c])).collect();
                            self.expand_group(
                                group,
                                &factors,
                                &mut scratch,
                                &mut index,
                                &mut states,
                                &mut label_values,
                                &mut edges,
                            )?;
                            group += 1;
                            if !advance(&mut choice, |i| enabled[i].len()) {
                                break;
                            }
                        }
                    }
                }
            }
            row_start.push(edges.len());
            processed += 1;
        }

        let model = self.model;
        Ok(StateSpace {
            flavor: self.flavor,
            width,
            states,
            row_start,
            edges,
            labels: self.labels.iter().map(|(n, _)| n.clone()).zip(label_values).collect(),
            automaton_names: model.automata.iter().map(|a| a.name.clone()).collect(),
            state_names: model.automata.iter().map(|a| a.states.clone()).collect(),
        })
    }

    /// Emits the product distribution of one joint choice as edges.
    #[allow(clippy::too_many_arguments)]
    fn expand_group<P: Probability>(
        &self,
        group: u32,
        factors: &[Vec<(P, LocalState)>],
        scratch: &mut [LocalState],
        index: &mut HashMap<Box<[LocalState]>, u32>,
        states: &mut Vec<LocalState>,
        label_values: &mut [Vec<bool>],
        edges: &mut Vec<Edge<P>>,
    ) -> Result<()> {
        let mut pick = vec![0usize; factors.len()];
        loop {
            let mut p = P::one();
            for (a, (f, &k)) in factors.iter().zip(&pick).enumerate() {
                let (q, t) = f[k];
                p = p * q;
                scratch[a] = t;
            }
            let target = self.insert(scratch, index, states, label_values)?;
            edges.push(Edge {
                group,
                probability: p,
                target,
            });
            if !advance(&mut pick, |i| factors[i].len()) {
                return Ok(());
            }
        }
    }

    fn insert(
        &self,
        state: &[LocalState],
        index: &mut HashMap<Box<[LocalState]>, u32>,
        states: &mut Vec<LocalState>,
        label_values: &mut [Vec<bool>],
    ) -> Result<u32> {
        if let Some(&i) = index.get(state) {
            return Ok(i);
        }
        if index.len() >= self.cap {
            return Err(Error::StateCapExceeded { cap: self.cap });
        }
        let i = index.len() as u32;
        index.insert(state.into(), i);
        states.extend_from_slice(state);
        for ((_, e), values) in self.labels.iter().zip(label_values.iter_mut()) {
            values.push(e.eval_plain(state));
        }
        Ok(i)
    }
}

impl Sink {
    fn record(&mut self, automaton: usize, local: usize, kind: u8, err: Error) {
        if self.errors.len() < self.limit && self.seen.insert((automaton, local, kind)) {
            self.errors.push(err);
        }
    }
}

fn to_factor<P: Probability>(t: &CompiledTransition) -> Vec<(P, LocalState)> {
    t.branches
        .iter()
        .map(|&(p, target)| (P::from_model(p), target))
        .collect()
}

/// Mixed-radix increment; returns false after the last combination.
fn advance(counter: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < radix(i) {
            return true;
        }
        counter[i] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Automaton, AutomatonKind, TimeStep, Transition};

    fn step() -> TimeStep {
        TimeStep::from_seconds(1.0).unwrap()
    }

    fn toggle(name: &str) -> Automaton {
        let mut a = Automaton::new(name, &["a", "b"], 0, AutomatonKind::Functional);
        a.transitions.push(Transition::new(0, 1, PredicateExpr::Const(true)));
        a.transitions.push(Transition::new(1, 0, PredicateExpr::Const(true)));
        a
    }

    #[test]
    fn single_self_loop() {
        let mut a = Automaton::new("A", &["s"], 0, AutomatonKind::Functional);
        a.transitions.push(Transition::new(0, 0, PredicateExpr::Const(true)));
        let m = SystemModel::new(vec![a], PredicateExpr::Const(false), step());
        let space: StateSpace<f64> = compose(&m, Flavor::Dtmc, &ComposeOptions::default()).unwrap();
        assert_eq!(space.len(), 1);
        assert_eq!(space.edge_count(), 1);
    }

    #[test]
    fn lock_step_toggles_reach_two_states() {
        let m = SystemModel::new(vec![toggle("X"), toggle("Y")], PredicateExpr::Const(false), step());
        let space: StateSpace<f64> = compose(&m, Flavor::Nondeterministic, &ComposeOptions::default()).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.state(0), &[0, 0]);
        assert_eq!(space.state(1), &[1, 1]);
    }

    #[test]
    fn guards_read_pre_step_state() {
        // Y copies X's state with one step delay.
        let x = toggle("X");
        let mut y = Automaton::new("Y", &["a", "b"], 0, AutomatonKind::Functional);
        for from in 0..2 {
            y.transitions.push(Transition::new(from, 0, PredicateExpr::is(0, 0)));
            y.transitions.push(Transition::new(from, 1, PredicateExpr::is(0, 1)));
        }
        let m = SystemModel::new(vec![x, y], PredicateExpr::Const(false), step());
        let space: StateSpace<f64> = compose(&m, Flavor::Dtmc, &ComposeOptions::default()).unwrap();
        // (a,a) -> (b,a) -> (a,b) -> (b,a)
        let order: Vec<_> = (0..space.len()).map(|i| space.state(i).to_vec()).collect();
        assert_eq!(order, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn deadlock_is_an_error() {
        let mut a = Automaton::new("A", &["s"], 0, AutomatonKind::Functional);
        a.transitions.push(Transition::new(0, 0, PredicateExpr::Const(false)));
        let m = SystemModel::new(vec![a], PredicateExpr::Const(false), step());
        let err = compose::<f64>(&m, Flavor::Dtmc, &ComposeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Deadlock { .. }), "{err}");
    }

    #[test]
    fn state_cap_overflow() {
        let m = SystemModel::new(vec![toggle("X")], PredicateExpr::Const(false), step());
        let err = compose::<f64>(&m, Flavor::Dtmc, &ComposeOptions::with_cap(1)).unwrap_err();
        assert_eq!(err, Error::StateCapExceeded { cap: 1 });
        assert!(err.is_resource_limit());
    }

    #[test]
    fn dtmc_rejects_overlapping_guards_mdp_accepts() {
        let mut a = Automaton::new("A", &["s", "t"], 0, AutomatonKind::Functional);
        a.transitions.push(Transition::new(0, 0, PredicateExpr::Const(true)));
        a.transitions.push(Transition::new(0, 1, PredicateExpr::Const(true)));
        a.transitions.push(Transition::new(1, 1, PredicateExpr::Const(true)));
        let m = SystemModel::new(vec![a], PredicateExpr::Const(false), step());
        let err = compose::<f64>(&m, Flavor::Dtmc, &ComposeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Nondeterminism { .. }));
        let mdp: StateSpace<f64> = compose(&m, Flavor::Mdp, &ComposeOptions::default()).unwrap();
        assert_eq!(mdp.groups(0).count(), 2);
        assert_eq!(mdp.max_mass_defect(), 0.0);
    }

    #[test]
    fn joint_probabilities_multiply() {
        let mut a = Automaton::new("A", &["s", "t"], 0, AutomatonKind::Functional);
        a.transitions.push(Transition::distribution(
            0,
            PredicateExpr::Const(true),
            &[(0.3, 0), (0.7, 1)],
        ));
        a.transitions.push(Transition::new(1, 1, PredicateExpr::Const(true)));
        let mut b = a.clone();
        b.name = "B".into();
        b.transitions[0] = Transition::distribution(0, PredicateExpr::Const(true), &[(0.5, 0), (0.5, 1)]);
        let m = SystemModel::new(vec![a, b], PredicateExpr::Const(false), step());
        let space: StateSpace<f64> = compose(&m, Flavor::Dtmc, &ComposeOptions::default()).unwrap();
        let probs: Vec<f64> = space.edges(0).iter().map(|e| e.probability).collect();
        assert_eq!(probs.len(), 4);
        assert!((probs[0] - 0.15).abs() < 1e-15);
        assert!(space.max_mass_defect() < 1e-12);
    }
}
