use std::collections::BTreeSet;

use super::{build_failure_automaton, AnalysisMode, FailurePattern, NO, YES};
use crate::error::{Error, Result};
use crate::model::{Atom, Automaton, AutomatonKind, PredicateExpr, SystemModel, Transition};

/// One demand state `s` of the affected automaton and its merged state `s'`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedState {
    pub demand_state: usize,
    pub merged: usize,
    /// Successors of `s` on a successful demand (failure automaton in `no`).
    pub success: Vec<usize>,
    /// Successors of `s` on a failed demand.
    pub failed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub merged: Vec<MergedState>,
    /// Decide automaton index; `None` when every demand state has exactly
    /// one success and one failure successor.
    pub decide: Option<usize>,
}

struct Target {
    decl: usize,
    machine: usize,
    failure: usize,
    demand: PredicateExpr,
}

fn target(model: &SystemModel, name: &str) -> Result<Target> {
    let decl = model
        .failures
        .iter()
        .position(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFailure(name.into()))?;
    let f = &model.failures[decl];
    let fail = |reason: &str| Error::Failure {
        name: name.into(),
        reason: reason.into(),
    };
    let FailurePattern::PerDemand { demand, .. } = &f.pattern else {
        return Err(fail("not a per-demand failure mode"));
    };
    if f.injection.is_some() {
        return Err(fail("already injected"));
    }
    let machine = f.affects.ok_or_else(|| fail("no affected automaton"))?;
    if machine >= model.automata.len() || model.automata[machine].kind == AutomatonKind::Failure {
        return Err(fail("affected automaton must be a functional automaton"));
    }
    let taken = model
        .failures
        .iter()
        .any(|g| g.injection.is_some() && g.affects == Some(machine));
    if taken {
        return Err(fail(&format!(
            "automaton '{}' already carries an injected per-demand failure",
            model.automata[machine].name
        )));
    }
    model.check_expr(demand)?;
    Ok(Target {
        decl,
        machine,
        failure: f.automaton,
        demand: demand.clone(),
    })
}

/// Local states of the affected automaton in which the demand can hold.
pub fn demand_states(model: &SystemModel, failure: &str) -> Result<Vec<usize>> {
    let t = target(model, failure)?;
    Ok(demand_states_of(model, &t))
}

fn demand_states_of(model: &SystemModel, t: &Target) -> Vec<usize> {
    let domains = model.domains();
    let demand = model.expand(&t.demand);
    (0..model.automata[t.machine].states.len())
        .filter(|&s| demand.fix(t.machine, s).satisfiable(&domains))
        .collect()
}

struct Plan {
    state: usize,
    merged: usize,
    /// Demand restricted to this state; no atoms of the affected automaton.
    demand: PredicateExpr,
    success: Vec<usize>,
    failed: Vec<usize>,
    /// Activation conditions `(target, condition)` with the failure fixed.
    success_conditions: Vec<(usize, PredicateExpr)>,
    failed_conditions: Vec<(usize, PredicateExpr)>,
}

fn push_unique(v: &mut Vec<usize>, x: usize) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn fresh_name(taken: impl Fn(&str) -> bool, base: String) -> String {
    let mut name = base;
    while taken(&name) {
        name.push('\'');
    }
    name
}

/// Integrates a per-demand failure mode into the automaton it affects.
///
/// Every demand state `s` gets a merged state `s'` entered on demand, whose
/// actual meaning (successful or failed demand successor) is resolved
/// through the failure automaton and, where needed, a decide automaton.
/// Tests `M.state == d` for every such successor `d` are rewritten to
/// `M.in(d)` throughout the model. The failure automaton is rebuilt in its
/// gated qualitative form.
pub fn inject_per_demand(model: &SystemModel, failure: &str) -> Result<SystemModel> {
    let t = target(model, failure)?;
    let m = t.machine;
    let f = t.failure;
    let domains = model.domains();
    let fail = |reason: String| Error::Failure {
        name: failure.into(),
        reason,
    };
    let machine = &model.automata[m];

    let mut states = machine.states.clone();
    let mut plans = Vec::new();
    for s in demand_states_of(model, &t) {
        let demand = t.demand.fix(m, s).simplify();
        let mut plan = Plan {
            state: s,
            merged: states.len(),
            demand: demand.clone(),
            success: Vec::new(),
            failed: Vec::new(),
            success_conditions: Vec::new(),
            failed_conditions: Vec::new(),
        };
        states.push(fresh_name(
            |n| states.iter().any(|x| x == n),
            format!("{}'", machine.states[s]),
        ));
        for tr in machine.transitions_from(s) {
            let cond = PredicateExpr::and([tr.guard.fix(m, s), demand.clone()]);
            let on_success = cond.fix(f, NO).simplify();
            let on_failure = cond.fix(f, YES).simplify();
            let ok = model.expand(&on_success).satisfiable(&domains);
            let bad = model.expand(&on_failure).satisfiable(&domains);
            if !(ok || bad) {
                continue;
            }
            if tr.branches.len() != 1 {
                return Err(fail(format!(
                    "demand transition from '{}' must have a single target",
                    machine.states[s]
                )));
            }
            let d = tr.branches[0].target;
            if ok {
                push_unique(&mut plan.success, d);
                plan.success_conditions.push((d, on_success));
            }
            if bad {
                push_unique(&mut plan.failed, d);
                plan.failed_conditions.push((d, on_failure));
            }
        }
        if plan.success.is_empty() || plan.failed.is_empty() {
            return Err(fail(format!(
                "demand in state '{}' has no {} successor",
                machine.states[s],
                if plan.success.is_empty() { "success" } else { "failure" }
            )));
        }
        plans.push(plan);
    }

    // Remove demand behavior from s and route it through s'.
    let mut transitions = Vec::new();
    for tr in &machine.transitions {
        match plans.iter().find(|p| p.state == tr.source) {
            Some(p) => {
                let guard = PredicateExpr::and([tr.guard.clone(), p.demand.clone().not()]);
                if model.expand(&guard).satisfiable(&domains) {
                    transitions.push(Transition { guard, ..tr.clone() });
                }
            }
            None => transitions.push(tr.clone()),
        }
    }
    for p in &plans {
        transitions.push(Transition::new(p.state, p.merged, p.demand.clone()));
    }
    let base = transitions.clone();
    for p in &plans {
        let mut lifted = p.success.clone();
        for &d in &p.failed {
            push_unique(&mut lifted, d);
        }
        for d in lifted {
            for tr in base.iter().filter(|tr| tr.source == d) {
                transitions.push(Transition {
                    source: p.merged,
                    guard: PredicateExpr::and([tr.guard.clone(), PredicateExpr::in_state(m, d)]),
                    branches: tr.branches.clone(),
                });
            }
        }
    }

    let mut out = model.clone();
    out.automata[m] = Automaton {
        states,
        transitions,
        ..machine.clone()
    };

    let needs_decide = plans.iter().any(|p| p.success.len() > 1 || p.failed.len() > 1);
    let decide = needs_decide.then(|| {
        let index = out.automata.len();
        out.automata.push(decide_automaton(model, &t, &plans, m));
        index
    });

    let rewritten: BTreeSet<usize> = plans
        .iter()
        .flat_map(|p| p.success.iter().chain(&p.failed).copied())
        .collect();
    let rewrite = |e: &PredicateExpr| {
        e.map_atoms(&mut |atom, is_in| {
            (!is_in && atom.automaton == m && rewritten.contains(&atom.state)).then_some(PredicateExpr::In(atom))
        })
    };
    for aut in &mut out.automata {
        for tr in &mut aut.transitions {
            tr.guard = rewrite(&tr.guard);
        }
    }
    out.hazard = rewrite(&out.hazard);
    for decl in &mut out.failures {
        if let FailurePattern::PerDemand { demand, .. } = &mut decl.pattern {
            *demand = rewrite(demand);
        }
    }

    // in(d) := M = d | OR_s (M = s' & failure branch & decide in [s, d, *] / [s, *, d])
    for &d in &rewritten {
        let mut alternatives = vec![PredicateExpr::is(m, d)];
        for p in &plans {
            let merged = PredicateExpr::is(m, p.merged);
            if p.success.contains(&d) {
                alternatives.push(PredicateExpr::and([
                    merged.clone(),
                    PredicateExpr::is(f, NO),
                    decide_selects(decide, &plans, p, |a, _| a == d),
                ]));
            }
            if p.failed.contains(&d) {
                alternatives.push(PredicateExpr::and([
                    merged,
                    PredicateExpr::is(f, NO).not(),
                    decide_selects(decide, &plans, p, |_, b| b == d),
                ]));
            }
        }
        out.in_definitions
            .insert(Atom::new(m, d), PredicateExpr::or(alternatives));
    }

    let injection = Injection {
        merged: plans
            .iter()
            .map(|p| MergedState {
                demand_state: p.state,
                merged: p.merged,
                success: p.success.clone(),
                failed: p.failed.clone(),
            })
            .collect(),
        decide,
    };
    let decl = &mut out.failures[t.decl];
    decl.injection = Some(injection);
    let rebuilt = build_failure_automaton(decl, AnalysisMode::Qualitative, out.time_step)?;
    out.automata[f] = rebuilt;
    Ok(out)
}

/// Decide states are `undef` followed by `[s, a, b]` for every plan in order.
fn pair_states(plans: &[Plan]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (i, p) in plans.iter().enumerate() {
        for &a in &p.success {
            for &b in &p.failed {
                out.push((i, a, b));
            }
        }
    }
    out
}

fn decide_selects(
    decide: Option<usize>,
    plans: &[Plan],
    plan: &Plan,
    pick: impl Fn(usize, usize) -> bool,
) -> PredicateExpr {
    let Some(dec) = decide else {
        return PredicateExpr::Const(true);
    };
    PredicateExpr::or(
        pair_states(plans)
            .into_iter()
            .enumerate()
            .filter(|&(_, (i, a, b))| plans[i].state == plan.state && pick(a, b))
            .map(|(k, _)| PredicateExpr::is(dec, k + 1)),
    )
}

fn decide_automaton(model: &SystemModel, t: &Target, plans: &[Plan], m: usize) -> Automaton {
    let machine = &model.automata[m];
    let failure_name = &model.automata[t.failure].name;
    let name = fresh_name(
        |n| model.automata.iter().any(|a| a.name == n),
        format!("{failure_name}_decide"),
    );
    let pairs = pair_states(plans);
    let mut states = vec!["undef".to_string()];
    for &(i, a, b) in &pairs {
        states.push(format!(
            "[{},{},{}]",
            machine.states[plans[i].state], machine.states[a], machine.states[b]
        ));
    }
    let conditions: Vec<PredicateExpr> = pairs
        .iter()
        .map(|&(i, a, b)| {
            let p = &plans[i];
            let phi = PredicateExpr::or(p.success_conditions.iter().filter(|c| c.0 == a).map(|c| c.1.clone()));
            let psi = PredicateExpr::or(p.failed_conditions.iter().filter(|c| c.0 == b).map(|c| c.1.clone()));
            PredicateExpr::and([PredicateExpr::is(m, p.state), phi, psi])
        })
        .collect();
    let no_demand = PredicateExpr::or(
        plans
            .iter()
            .map(|p| PredicateExpr::and([PredicateExpr::is(m, p.state), p.demand.clone()])),
    )
    .not();
    let mut aut = Automaton {
        name,
        states,
        initial: 0,
        transitions: Vec::new(),
        kind: AutomatonKind::Decide,
    };
    for q in 0..aut.states.len() {
        aut.transitions.push(Transition::new(q, 0, no_demand.clone()));
        for (k, c) in conditions.iter().enumerate() {
            aut.transitions.push(Transition::new(q, k + 1, c.clone()));
        }
    }
    aut
}

/// Injects every per-demand failure mode not yet injected, in declaration order.
pub fn inject_all(model: &SystemModel) -> Result<SystemModel> {
    let mut out = model.clone();
    let pending: Vec<String> = model
        .failures
        .iter()
        .filter(|f| f.pattern.is_per_demand() && f.injection.is_none())
        .map(|f| f.name.clone())
        .collect();
    for name in pending {
        out = inject_per_demand(&out, &name)?;
    }
    Ok(out)
}
