//! Random small models and brute-force oracles that work directly on the
//! automata, without the composition engine.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write;

use proptest::prelude::*;
use synsafe_core::failures::{self, AnalysisMode, FailureSetup, NO};
use synsafe_core::model::{PredicateExpr, SystemModel};

#[derive(Debug, Clone)]
pub enum Cond {
    True,
    Failure(usize),
    State(usize, usize),
}

#[derive(Debug, Clone)]
pub struct StateSpec {
    pub cond: Cond,
    pub when: Vec<(u32, usize)>,
    pub otherwise: Vec<(u32, usize)>,
    /// An extra distribution with guard `true`, emitted for MDPs when
    /// `has_choice` is set.
    pub choice: Vec<(u32, usize)>,
    pub has_choice: bool,
}

#[derive(Debug, Clone, Copy)]
enum Fold {
    Any,
    Down(usize),
    Away(usize),
}

#[derive(Debug, Clone)]
pub struct FailureSpec {
    pub step_probability: f64,
    /// 0 latching, 1 redrawn every step, 2 repair.
    pub recovery: u8,
}

#[derive(Debug, Clone)]
pub struct RandomModel {
    pub automata: Vec<Vec<StateSpec>>,
    pub failures: Vec<FailureSpec>,
    pub hazard: Vec<(usize, usize)>,
    pub hazard_all: bool,
    /// Emit every failure mode as `persistent` instead of `per_time`.
    pub persistent: bool,
}

fn dist() -> impl Strategy<Value = Vec<(u32, usize)>> {
    prop::collection::vec((1u32..5, 0usize..6), 1..=3)
}

fn cond() -> impl Strategy<Value = Cond> {
    prop_oneof![
        1 => Just(Cond::True),
        3 => (0usize..3).prop_map(Cond::Failure),
        1 => (0usize..3, 0usize..6).prop_map(|(a, s)| Cond::State(a, s)),
    ]
}

fn state_spec() -> impl Strategy<Value = StateSpec> {
    (cond(), dist(), dist(), dist(), prop::bool::weighted(0.4)).prop_map(
        |(cond, when, otherwise, choice, has_choice)| StateSpec {
            cond,
            when,
            otherwise,
            choice,
            has_choice,
        },
    )
}

fn failure_spec() -> impl Strategy<Value = FailureSpec> {
    (prop::sample::select(vec![0.05, 0.1, 0.25]), 0u8..3).prop_map(|(step_probability, recovery)| FailureSpec {
        step_probability,
        recovery,
    })
}

/// At most 3 automata of at most 6 states and at most 3 failure modes.
pub fn random_model() -> impl Strategy<Value = RandomModel> {
    (
        prop::collection::vec(prop::collection::vec(state_spec(), 1..=6), 1..=3),
        prop::collection::vec(failure_spec(), 1..=3),
        prop::collection::vec((0usize..3, 0usize..6), 1..=2),
        prop::bool::weighted(0.5),
    )
        .prop_map(|(automata, failures, hazard, hazard_all)| RandomModel {
            automata,
            failures,
            hazard,
            hazard_all,
            persistent: false,
        })
}

impl RandomModel {
    /// `Fold::Down(i)` folds targets into `s0..=si`, `Fold::Away(i)` into
    /// the states other than `si`.
    fn distribution(&self, n: usize, d: &[(u32, usize)], fold: Fold) -> String {
        let total: u32 = d.iter().map(|x| x.0).sum();
        let target = |t: usize| match fold {
            Fold::Any => t % n,
            Fold::Down(i) => t % (i + 1),
            Fold::Away(i) if n > 1 => (i + 1 + t % (n - 1)) % n,
            Fold::Away(i) => i,
        };
        let parts: Vec<String> = d
            .iter()
            .map(|&(w, t)| format!("{}: s{}", w as f64 / total as f64, target(t)))
            .collect();
        format!("{{ {} }}", parts.join(", "))
    }

    fn state_test(&self, a: usize, s: usize) -> String {
        let a = a % self.automata.len();
        format!("A{a}.s{}", s % self.automata[a].len())
    }

    /// Hazard atoms avoid the initial state where the automaton has others.
    fn hazard_test(&self, a: usize, s: usize) -> String {
        let a = a % self.automata.len();
        let n = self.automata[a].len();
        let s = if n > 1 { 1 + s % (n - 1) } else { 0 };
        format!("A{a}.s{s}")
    }

    /// Source text. With `mdp`, some states of the first automaton carry an
    /// extra unguarded choice.
    pub fn text(&self, mdp: bool) -> String {
        let mut out = String::from("const dt = 1s;\n");
        for (a, states) in self.automata.iter().enumerate() {
            let n = states.len();
            let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
            let _ = writeln!(out, "automaton A{a} {{ states {}; init s0;", names.join(", "));
            for (i, st) in states.iter().enumerate() {
                let cond = match st.cond {
                    Cond::True => None,
                    Cond::Failure(_) if self.failures.is_empty() => None,
                    Cond::Failure(f) => Some(format!("F{}", f % self.failures.len())),
                    Cond::State(b, s) => Some(self.state_test(b, s)),
                };
                // Only the positive branch of a condition may move to a
                // higher state, so most hazards need a failure or another
                // automaton's help to be reached.
                let (when, otherwise) = match cond {
                    Some(_) => (Fold::Away(i), Fold::Down(i)),
                    None => (Fold::Down(i), Fold::Down(i)),
                };
                match cond {
                    None => {
                        let _ = writeln!(out, "  s{i} -> {};", self.distribution(n, &st.when, when));
                    }
                    Some(c) => {
                        let _ = writeln!(out, "  s{i} -> {} [{c}];", self.distribution(n, &st.when, when));
                        let _ = writeln!(
                            out,
                            "  s{i} -> {} [!{c}];",
                            self.distribution(n, &st.otherwise, otherwise)
                        );
                    }
                }
                if mdp && a == 0 && st.has_choice {
                    let _ = writeln!(out, "  s{i} -> {};", self.distribution(n, &st.choice, Fold::Any));
                }
            }
            out.push_str("}\n");
        }
        for (i, f) in self.failures.iter().enumerate() {
            let rate = f.step_probability * 3600.0;
            let recovery = match f.recovery {
                0 => String::new(),
                1 => " transient".into(),
                _ => format!(" repair({}/h)", rate * 2.0),
            };
            if self.persistent {
                let _ = writeln!(out, "failure F{i} persistent;");
            } else {
                let _ = writeln!(out, "failure F{i} per_time({rate}/h){recovery};");
            }
        }
        let tests: Vec<String> = self.hazard.iter().map(|&(a, s)| self.hazard_test(a, s)).collect();
        let op = if self.hazard_all { " & " } else { " | " };
        let _ = writeln!(out, "hazard H = {};", tests.join(op));
        out
    }

    pub fn model(&self, mdp: bool) -> SystemModel {
        let text = self.text(mdp);
        synsafe_core::lang::load(&text).unwrap_or_else(|d| panic!("{d:?}\n{text}"))
    }
}

pub fn probabilistic(model: &SystemModel) -> SystemModel {
    failures::instantiate(model, &FailureSetup::new(AnalysisMode::Probabilistic)).unwrap()
}

pub fn qualitative(model: &SystemModel) -> SystemModel {
    failures::instantiate(model, &FailureSetup::new(AnalysisMode::Qualitative)).unwrap()
}

pub fn eval(model: &SystemModel, e: &PredicateExpr, s: &[u16]) -> bool {
    match e {
        PredicateExpr::Const(b) => *b,
        PredicateExpr::Is(a) => s[a.automaton] as usize == a.state,
        PredicateExpr::In(a) => match model.in_definitions.get(a) {
            Some(def) => eval(model, def, s),
            None => s[a.automaton] as usize == a.state,
        },
        PredicateExpr::Not(x) => !eval(model, x, s),
        PredicateExpr::And(xs) => xs.iter().all(|x| eval(model, x, s)),
        PredicateExpr::Or(xs) => xs.iter().any(|x| eval(model, x, s)),
    }
}

pub fn initial(model: &SystemModel) -> Vec<u16> {
    model.automata.iter().map(|a| a.initial as u16).collect()
}

/// Every joint choice (one enabled transition group per automaton) as a
/// distribution over successor states; a target may appear more than once.
pub fn joint_choices(model: &SystemModel, s: &[u16]) -> Vec<Vec<(f64, Vec<u16>)>> {
    let mut choices: Vec<Vec<(f64, Vec<u16>)>> = vec![vec![(1.0, Vec::new())]];
    for (i, a) in model.automata.iter().enumerate() {
        let groups: Vec<_> = a
            .transitions
            .iter()
            .filter(|t| t.source == s[i] as usize && eval(model, &t.guard, s))
            .collect();
        assert!(!groups.is_empty(), "deadlock in {}", a.name);
        let mut next = Vec::new();
        for partial in &choices {
            for g in &groups {
                let mut d = Vec::new();
                for (p, prefix) in partial {
                    for b in &g.branches {
                        let mut v = prefix.clone();
                        v.push(b.target as u16);
                        d.push((p * b.probability, v));
                    }
                }
                next.push(d);
            }
        }
        choices = next;
    }
    choices
}

/// Maximal probability of reaching the hazard within `k` steps, by
/// recursion over all joint choices. For a DTMC there is one choice per
/// state and this is the plain bounded reachability probability.
pub fn reach_probability(model: &SystemModel, k: u64) -> f64 {
    fn go(m: &SystemModel, s: Vec<u16>, k: u64, memo: &mut HashMap<(Vec<u16>, u64), f64>) -> f64 {
        if eval(m, &m.hazard, &s) {
            return 1.0;
        }
        if k == 0 {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(s.clone(), k)) {
            return v;
        }
        let mut best = 0.0f64;
        for choice in joint_choices(m, &s) {
            let v: f64 = choice.into_iter().map(|(p, t)| p * go(m, t, k - 1, memo)).sum();
            best = best.max(v);
        }
        memo.insert((s, k), best);
        best
    }
    go(model, initial(model), k, &mut HashMap::new())
}

/// Probability of the paths that reach the hazard within `k` steps: the
/// measure of all hazard-free path prefixes is pushed forward step by step,
/// grouped by end state, and collected when a prefix enters the hazard.
pub fn enumerate_paths(model: &SystemModel, k: u64) -> f64 {
    let start = initial(model);
    if eval(model, &model.hazard, &start) {
        return 1.0;
    }
    let mut frontier: HashMap<Vec<u16>, f64> = HashMap::from([(start, 1.0)]);
    let mut hit = Vec::new();
    for _ in 0..k {
        let mut next: HashMap<Vec<u16>, f64> = HashMap::new();
        for (s, p) in &frontier {
            let choices = joint_choices(model, s);
            assert_eq!(choices.len(), 1, "not a DTMC");
            for (q, t) in &choices[0] {
                if eval(model, &model.hazard, t) {
                    hit.push(p * q);
                } else {
                    *next.entry(t.clone()).or_default() += p * q;
                }
            }
        }
        frontier = next;
    }
    hit.sort_by(f64::total_cmp);
    hit.iter().sum()
}

/// Number of memoryless step-indexed policies for horizon `k`.
pub fn policy_count(model: &SystemModel, k: u64) -> f64 {
    decision_points(model, k).iter().map(|(_, n)| *n as f64).product()
}

fn decision_points(model: &SystemModel, k: u64) -> Vec<((u64, Vec<u16>), usize)> {
    let mut layer: BTreeSet<Vec<u16>> = BTreeSet::from([initial(model)]);
    let mut points = Vec::new();
    for i in 0..k {
        let mut next = BTreeSet::new();
        for s in &layer {
            if eval(model, &model.hazard, s) {
                continue;
            }
            let choices = joint_choices(model, s);
            if choices.len() > 1 {
                points.push(((i, s.clone()), choices.len()));
            }
            for c in choices {
                next.extend(c.into_iter().filter(|(p, _)| *p > 0.0).map(|(_, t)| t));
            }
        }
        layer = next;
    }
    points
}

/// Value of the best memoryless step-indexed policy, found by enumerating
/// all policies over the states reachable within `k` steps.
pub fn enumerate_policies(model: &SystemModel, k: u64) -> f64 {
    let points = decision_points(model, k);
    let total: usize = points.iter().map(|(_, n)| *n).product();
    assert!(total <= 1 << 20, "too many policies: {total}");
    let mut best = 0.0f64;
    let mut pick = vec![0usize; points.len()];
    loop {
        let policy: Policy = points
            .iter()
            .zip(&pick)
            .map(|((key, _), &c)| (key.clone(), c))
            .collect();
        best = best.max(evaluate_policy(
            model,
            &policy,
            initial(model),
            0,
            k,
            &mut HashMap::new(),
        ));
        let Some(i) = (0..pick.len()).find(|&i| pick[i] + 1 < points[i].1) else {
            break;
        };
        pick[i] += 1;
        for p in pick.iter_mut().take(i) {
            *p = 0;
        }
    }
    best
}

type Policy = HashMap<(u64, Vec<u16>), usize>;

/// Value of one fixed policy; memoized per (step, state) within the policy.
fn evaluate_policy(
    m: &SystemModel,
    policy: &Policy,
    s: Vec<u16>,
    step: u64,
    k: u64,
    memo: &mut HashMap<(u64, Vec<u16>), f64>,
) -> f64 {
    if eval(m, &m.hazard, &s) {
        return 1.0;
    }
    if step == k {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(step, s.clone())) {
        return v;
    }
    let choices = joint_choices(m, &s);
    let c = policy.get(&(step, s.clone())).copied().unwrap_or(0);
    let v = choices[c]
        .iter()
        .map(|(p, t)| p * evaluate_policy(m, policy, t.clone(), step + 1, k, memo))
        .sum();
    memo.insert((step, s), v);
    v
}

/// Nondeterministic successors: every combination of positive-probability
/// targets of enabled transitions.
pub fn successors(model: &SystemModel, s: &[u16]) -> BTreeSet<Vec<u16>> {
    joint_choices(model, s)
        .into_iter()
        .flatten()
        .filter(|(p, _)| *p > 0.0)
        .map(|(_, t)| t)
        .collect()
}

/// Whether some path keeps every failure outside `gamma` absent until the
/// hazard holds. `model` must have qualitative failure automata.
pub fn critical_by_search(model: &SystemModel, gamma: &BTreeSet<String>) -> bool {
    let outside: Vec<usize> = model
        .failures
        .iter()
        .filter(|f| !gamma.contains(&f.name))
        .map(|f| f.automaton)
        .collect();
    let start = initial(model);
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        if eval(model, &model.hazard, &s) {
            return true;
        }
        if outside.iter().any(|&a| s[a] as usize != NO) {
            continue;
        }
        for t in successors(model, &s) {
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    false
}

/// Minimal elements of the set of critical subsets, by checking all of them.
pub fn brute_force_mcs(model: &SystemModel) -> BTreeSet<BTreeSet<String>> {
    let names = model.failure_names();
    let mut critical = Vec::new();
    for mask in 0u32..1 << names.len() {
        let set: BTreeSet<String> = (0..names.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| names[i].clone())
            .collect();
        if critical_by_search(model, &set) {
            critical.push(set);
        }
    }
    critical
        .iter()
        .filter(|c| !critical.iter().any(|d| d != *c && d.is_subset(c)))
        .cloned()
        .collect()
}
