use std::collections::HashMap;

use super::ast::*;
use super::Diagnostic;
use crate::failures::{
    build_failure_automaton, rate_to_step_probability, AnalysisMode, FailureModeDecl, FailurePattern, Recovery, NO,
};
use crate::model::{Automaton, AutomatonKind, PredicateExpr, SystemModel, TimeStep, Transition};

#[derive(Debug, Clone, Copy)]
enum ConstValue {
    Seconds(f64),
    PerHour(f64),
    Number(f64),
}

fn to_const(q: &Quantity) -> ConstValue {
    let v = q.number.value;
    match q.dimension {
        Dimension::None => ConstValue::Number(v),
        Dimension::Duration(u) => ConstValue::Seconds(v * u.seconds()),
        Dimension::Rate(u) => ConstValue::PerHour(v * 3600.0 / u.seconds()),
    }
}

struct Env<'a> {
    diags: Vec<Diagnostic>,
    consts: HashMap<&'a str, ConstValue>,
    /// Name -> (automaton index, state names); failure automata included.
    automata: HashMap<&'a str, (usize, Vec<String>)>,
    functional: usize,
    failures: HashMap<&'a str, usize>,
    preds: HashMap<&'a str, PredicateExpr>,
}

impl<'a> Env<'a> {
    fn error(&mut self, message: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::error(message, span));
    }

    fn expr(&mut self, e: &Expr) -> PredicateExpr {
        match e {
            Expr::Bool(b, _) => PredicateExpr::Const(*b),
            Expr::State {
                automaton, state, form, ..
            } => {
                let atom = self.atom(automaton, state);
                match (atom, form) {
                    (Some((a, s)), StateTestForm::Ne) => PredicateExpr::is(a, s).not(),
                    (Some((a, s)), _) => PredicateExpr::is(a, s),
                    (None, _) => PredicateExpr::Const(false),
                }
            }
            Expr::In { automaton, state, .. } => match self.atom(automaton, state) {
                Some((a, s)) => PredicateExpr::in_state(a, s),
                None => PredicateExpr::Const(false),
            },
            Expr::Name(id) => {
                if let Some(p) = self.preds.get(id.name.as_str()) {
                    p.clone()
                } else if let Some(&f) = self.failures.get(id.name.as_str()) {
                    PredicateExpr::is(f, NO).not()
                } else {
                    self.error(
                        format!(
                            "unknown predicate or failure mode '{}' (predicates must be declared before use)",
                            id.name
                        ),
                        id.span,
                    );
                    PredicateExpr::Const(false)
                }
            }
            Expr::Not(inner, _) => self.expr(inner).not(),
            Expr::And(parts, _) => PredicateExpr::and(parts.iter().map(|p| self.expr(p)).collect::<Vec<_>>()),
            Expr::Or(parts, _) => PredicateExpr::or(parts.iter().map(|p| self.expr(p)).collect::<Vec<_>>()),
        }
    }

    fn atom(&mut self, automaton: &Ident, state: &Ident) -> Option<(usize, usize)> {
        let Some((a, states)) = self.automata.get(automaton.name.as_str()) else {
            self.error(format!("unknown automaton '{}'", automaton.name), automaton.span);
            return None;
        };
        let a = *a;
        match states.iter().position(|s| *s == state.name) {
            Some(s) => Some((a, s)),
            None => {
                self.error(
                    format!("automaton '{}' has no state '{}'", automaton.name, state.name),
                    state.span,
                );
                None
            }
        }
    }

    fn number(&mut self, v: &Value, what: &str) -> Option<f64> {
        match v {
            Value::Literal(q) => match q.dimension {
                Dimension::None => Some(q.number.value),
                _ => {
                    self.error(format!("{what} must be a plain number"), q.span);
                    None
                }
            },
            Value::Named(id) => match self.consts.get(id.name.as_str()) {
                Some(ConstValue::Number(x)) => Some(*x),
                Some(_) => {
                    self.error(format!("constant '{}' is not a plain number", id.name), id.span);
                    None
                }
                None => {
                    self.error(format!("unknown constant '{}'", id.name), id.span);
                    None
                }
            },
        }
    }

    fn rate(&mut self, v: &Value) -> Option<f64> {
        let r = match v {
            Value::Literal(q) => match to_const(q) {
                ConstValue::PerHour(r) => Some(r),
                _ => {
                    self.error("rate needs a unit such as /h or /s", q.span);
                    None
                }
            },
            Value::Named(id) => match self.consts.get(id.name.as_str()) {
                Some(ConstValue::PerHour(r)) => Some(*r),
                Some(_) => {
                    self.error(format!("constant '{}' is not a rate", id.name), id.span);
                    None
                }
                None => {
                    self.error(format!("unknown constant '{}'", id.name), id.span);
                    None
                }
            },
        }?;
        if r < 0.0 {
            self.error("rate must not be negative", v.span());
            return None;
        }
        Some(r)
    }
}

/// Functional automata referenced directly by state tests in `e`.
fn tested_automata<'e>(e: &'e Expr, out: &mut Vec<&'e Ident>) {
    match e {
        Expr::State { automaton, .. } | Expr::In { automaton, .. } => out.push(automaton),
        Expr::Not(inner, _) => tested_automata(inner, out),
        Expr::And(parts, _) | Expr::Or(parts, _) => parts.iter().for_each(|p| tested_automata(p, out)),
        Expr::Bool(..) | Expr::Name(_) => {}
    }
}

pub(crate) fn resolve(src: &SourceModel) -> Result<SystemModel, Vec<Diagnostic>> {
    let file_start = Span {
        start: 0,
        end: 0,
        line: 1,
        col: 1,
    };
    let mut env = Env {
        diags: Vec::new(),
        consts: HashMap::new(),
        automata: HashMap::new(),
        functional: 0,
        failures: HashMap::new(),
        preds: HashMap::new(),
    };

    let mut const_spans: HashMap<&str, Span> = HashMap::new();
    for item in &src.items {
        if let Item::Const(c) = item {
            if const_spans.insert(&c.name.name, c.name.span).is_some() {
                env.error(format!("duplicate constant '{}'", c.name.name), c.name.span);
            }
            env.consts.insert(&c.name.name, to_const(&c.value));
        }
    }

    let automata: Vec<&AutomatonDecl> = src
        .items
        .iter()
        .filter_map(|i| if let Item::Automaton(a) = i { Some(a) } else { None })
        .collect();
    let failures: Vec<&FailureDecl> = src
        .items
        .iter()
        .filter_map(|i| if let Item::Failure(f) = i { Some(&**f) } else { None })
        .collect();
    env.functional = automata.len();
    for (i, a) in automata.iter().enumerate() {
        if env.automata.contains_key(a.name.name.as_str()) {
            env.error(format!("duplicate automaton '{}'", a.name.name), a.name.span);
        }
        let states: Vec<String> = a.states.iter().map(|s| s.name.clone()).collect();
        for (j, s) in a.states.iter().enumerate() {
            if a.states[..j].iter().any(|t| t.name == s.name) {
                env.error(format!("duplicate state '{}'", s.name), s.span);
            }
        }
        env.automata.insert(&a.name.name, (i, states));
    }
    for (i, f) in failures.iter().enumerate() {
        if env.automata.contains_key(f.name.name.as_str()) {
            env.error(
                format!(
                    "failure mode '{}' clashes with an automaton or failure mode name",
                    f.name.name
                ),
                f.name.span,
            );
            continue;
        }
        let index = automata.len() + i;
        env.automata
            .insert(&f.name.name, (index, vec!["no".into(), "yes".into()]));
        env.failures.insert(&f.name.name, index);
    }

    let dt = match (env.consts.get("dt"), const_spans.get("dt")) {
        (Some(ConstValue::Seconds(s)), _) if *s > 0.0 => TimeStep::from_seconds(*s).ok(),
        (Some(_), Some(&span)) => {
            env.error("'dt' must be a positive duration such as 10ms", span);
            None
        }
        _ => {
            env.error("missing time step declaration 'const dt = <duration>;'", file_start);
            None
        }
    };
    let horizon = match (env.consts.get("horizon").copied(), const_spans.get("horizon").copied()) {
        (Some(ConstValue::Number(k)), Some(span)) => {
            if k >= 0.0 && k.fract() == 0.0 {
                Some(k as u64)
            } else {
                env.error("horizon in steps must be a non-negative integer", span);
                None
            }
        }
        (Some(ConstValue::Seconds(s)), Some(span)) => match dt.map(|dt| dt.steps_for(s)) {
            Some(Ok(k)) => Some(k),
            Some(Err(e)) => {
                env.error(e.to_string(), span);
                None
            }
            None => None,
        },
        (Some(ConstValue::PerHour(_)), Some(span)) => {
            env.error("horizon must be a step count or a duration", span);
            None
        }
        _ => None,
    };

    // Predicates, guards and demands, in text order so that predicates are
    // declared before use.
    let mut lowered_automata: Vec<Automaton> = Vec::new();
    let mut demands: HashMap<&str, PredicateExpr> = HashMap::new();
    let mut hazard: Option<(String, PredicateExpr)> = None;
    for item in &src.items {
        match item {
            Item::Const(_) => {}
            Item::Pred(p) => {
                let e = env.expr(&p.expr);
                if env.automata.contains_key(p.name.name.as_str())
                    || env.failures.contains_key(p.name.name.as_str())
                    || env.preds.contains_key(p.name.name.as_str())
                {
                    env.error(format!("duplicate name '{}'", p.name.name), p.name.span);
                }
                env.preds.insert(&p.name.name, e);
            }
            Item::Automaton(a) => {
                let states: Vec<&str> = a.states.iter().map(|s| s.name.as_str()).collect();
                let lookup = |env: &mut Env, id: &Ident| -> usize {
                    match states.iter().position(|s| *s == id.name) {
                        Some(i) => i,
                        None => {
                            env.error(
                                format!("automaton '{}' has no state '{}'", a.name.name, id.name),
                                id.span,
                            );
                            0
                        }
                    }
                };
                let init = lookup(&mut env, &a.init);
                let mut aut = Automaton::new(a.name.name.clone(), &states, init, AutomatonKind::Functional);
                for t in &a.transitions {
                    let source = lookup(&mut env, &t.source);
                    let guard = t.guard.as_ref().map_or(PredicateExpr::Const(true), |g| env.expr(g));
                    let branches: Vec<(f64, usize)> = match &t.targets {
                        Targets::Single(id) => vec![(1.0, lookup(&mut env, id))],
                        Targets::Distribution(bs) => bs
                            .iter()
                            .map(|b| {
                                let p = env.number(&b.probability, "probability").unwrap_or(1.0);
                                (p, lookup(&mut env, &b.target))
                            })
                            .collect(),
                    };
                    aut.transitions.push(Transition::distribution(source, guard, &branches));
                }
                lowered_automata.push(aut);
            }
            Item::Failure(f) => {
                if let Some(d) = &f.demand {
                    let e = env.expr(d);
                    demands.insert(&f.name.name, e);
                }
            }
            Item::Hazard(h) => {
                let e = env.expr(&h.expr);
                if hazard.replace((h.name.name.clone(), e)).is_some() {
                    env.error("only one hazard may be declared", h.name.span);
                }
            }
        }
    }

    let mut decls = Vec::new();
    for (i, f) in failures.iter().enumerate() {
        let index = automata.len() + i;
        let is_demand = matches!(f.pattern, PatternDecl::PerDemand { .. });
        if !is_demand {
            if let Some(on) = &f.on {
                env.error("'on' is only allowed for per_demand failure modes", on.span);
            }
            if let Some(d) = &f.demand {
                env.error("'demand' is only allowed for per_demand failure modes", d.span());
            }
        }
        let pattern = match &f.pattern {
            PatternDecl::Persistent => Some(FailurePattern::Persistent),
            PatternDecl::Transient => Some(FailurePattern::Transient),
            PatternDecl::PerTime {
                rate,
                recovery: recovery_decl,
            } => {
                let r = env.rate(rate);
                let recovery = match recovery_decl {
                    RecoveryDecl::Latching => Some(Recovery::Latching),
                    RecoveryDecl::Transient => Some(Recovery::Memoryless),
                    RecoveryDecl::Repair(v) => env.rate(v).map(|mu| Recovery::Repair { rate_per_hour: mu }),
                };
                let mut checks = vec![(r, rate.span())];
                if let (RecoveryDecl::Repair(v), Some(Recovery::Repair { rate_per_hour })) = (recovery_decl, &recovery)
                {
                    checks.push((Some(*rate_per_hour), v.span()));
                }
                for (value, span) in checks {
                    if let (Some(value), Some(dt)) = (value, dt) {
                        if let Err(e) = rate_to_step_probability(value, dt) {
                            env.error(e.to_string(), span);
                        }
                    }
                }
                match (r, recovery) {
                    (Some(rate_per_hour), Some(recovery)) => Some(FailurePattern::PerTime {
                        rate_per_hour,
                        recovery,
                    }),
                    _ => None,
                }
            }
            PatternDecl::PerDemand { probability } => {
                let p = env.number(probability, "probability");
                if let Some(p) = p {
                    if !(0.0..=1.0).contains(&p) {
                        env.error(format!("probability {p} outside [0, 1]"), probability.span());
                    }
                }
                match demands.remove(f.name.name.as_str()) {
                    Some(demand) => p.map(|probability| FailurePattern::PerDemand { probability, demand }),
                    None => {
                        env.error("per_demand failure mode needs 'demand (<expr>)'", f.name.span);
                        None
                    }
                }
            }
        };
        let affects = if is_demand {
            match &f.on {
                Some(on) => match env.automata.get(on.name.as_str()) {
                    Some(&(a, _)) if a < env.functional => Some(a),
                    _ => {
                        env.error(format!("'{}' is not a functional automaton", on.name), on.span);
                        None
                    }
                },
                None => {
                    let mut tested = Vec::new();
                    if let Some(d) = &f.demand {
                        tested_automata(d, &mut tested);
                    }
                    let mut candidates: Vec<usize> = tested
                        .iter()
                        .filter_map(|id| env.automata.get(id.name.as_str()).map(|x| x.0))
                        .filter(|&a| a < env.functional)
                        .collect();
                    candidates.sort();
                    candidates.dedup();
                    if candidates.len() == 1 {
                        Some(candidates[0])
                    } else {
                        env.error(
                            "cannot infer the automaton this failure affects; add 'on <automaton>'",
                            f.name.span,
                        );
                        None
                    }
                }
            }
        } else {
            None
        };
        if let Some(pattern) = pattern {
            decls.push(FailureModeDecl {
                name: f.name.name.clone(),
                pattern,
                automaton: index,
                affects,
                injection: None,
            });
        }
    }

    if hazard.is_none() {
        env.error("missing hazard declaration 'hazard <name> = <expr>;'", file_start);
    }
    if !env.diags.is_empty() {
        return Err(env.diags);
    }
    let dt = dt.expect("checked");
    let (hazard_name, hazard) = hazard.expect("checked");
    let mut all = lowered_automata;
    for d in &decls {
        all.push(build_failure_automaton(d, AnalysisMode::Qualitative, dt).expect("qualitative automata always build"));
    }
    let mut model = SystemModel::new(all, hazard, dt);
    model.hazard_name = hazard_name;
    model.failures = decls;
    model.horizon = horizon;
    Ok(model)
}
