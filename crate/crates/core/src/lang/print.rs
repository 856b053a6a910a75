use std::fmt::Write;

use super::ast::*;

/// Pretty-prints a source model. Comments are not preserved; parsing the
/// output yields the same items up to spans.
pub fn print(src: &SourceModel) -> String {
    let mut out = String::new();
    let mut prev: Option<&Item> = None;
    for item in &src.items {
        let kind = std::mem::discriminant(item);
        if let Some(p) = prev {
            if std::mem::discriminant(p) != kind || matches!(item, Item::Automaton(_)) {
                out.push('\n');
            }
        }
        prev = Some(item);
        match item {
            Item::Const(c) => {
                let _ = writeln!(out, "const {} = {};", c.name.name, quantity(&c.value));
            }
            Item::Automaton(a) => automaton(&mut out, a),
            Item::Pred(p) => {
                let _ = writeln!(out, "pred {} = {};", p.name.name, expr(&p.expr));
            }
            Item::Failure(f) => {
                let _ = write!(out, "failure {} {}", f.name.name, pattern(&f.pattern));
                if let Some(on) = &f.on {
                    let _ = write!(out, " on {}", on.name);
                }
                if let Some(d) = &f.demand {
                    let _ = write!(out, " demand ({})", expr(d));
                }
                out.push_str(";\n");
            }
            Item::Hazard(h) => {
                let _ = writeln!(out, "hazard {} = {};", h.name.name, expr(&h.expr));
            }
        }
    }
    out
}

fn quantity(q: &Quantity) -> String {
    match q.dimension {
        Dimension::None => q.number.text.clone(),
        Dimension::Duration(u) => format!("{}{}", q.number.text, u.as_str()),
        Dimension::Rate(u) => format!("{}/{}", q.number.text, u.as_str()),
    }
}

fn value(v: &Value) -> String {
    match v {
        Value::Literal(q) => quantity(q),
        Value::Named(i) => i.name.clone(),
    }
}

fn pattern(p: &PatternDecl) -> String {
    match p {
        PatternDecl::Persistent => "persistent".into(),
        PatternDecl::Transient => "transient".into(),
        PatternDecl::PerTime { rate, recovery } => {
            let r = format!("per_time({})", value(rate));
            match recovery {
                RecoveryDecl::Latching => r,
                RecoveryDecl::Transient => format!("{r} transient"),
                RecoveryDecl::Repair(v) => format!("{r} repair({})", value(v)),
            }
        }
        PatternDecl::PerDemand { probability } => format!("per_demand({})", value(probability)),
    }
}

fn automaton(out: &mut String, a: &AutomatonDecl) {
    let states: Vec<&str> = a.states.iter().map(|s| s.name.as_str()).collect();
    let _ = writeln!(out, "automaton {} {{", a.name.name);
    let _ = writeln!(out, "    states {};", states.join(", "));
    let _ = writeln!(out, "    init {};", a.init.name);
    for t in &a.transitions {
        let _ = write!(out, "    {} -> ", t.source.name);
        match &t.targets {
            Targets::Single(i) => out.push_str(&i.name),
            Targets::Distribution(bs) => {
                let parts: Vec<String> = bs
                    .iter()
                    .map(|b| format!("{}: {}", value(&b.probability), b.target.name))
                    .collect();
                let _ = write!(out, "{{ {} }}", parts.join(", "));
            }
        }
        if let Some(g) = &t.guard {
            let _ = write!(out, " [{}]", expr(g));
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
}

/// Prints an expression; nested conjunctions and disjunctions are
/// parenthesized so that the tree shape survives reparsing.
pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Bool(b, _) => b.to_string(),
        Expr::State {
            automaton, state, form, ..
        } => match form {
            StateTestForm::Eq => format!("{}.state == {}", automaton.name, state.name),
            StateTestForm::Ne => format!("{}.state != {}", automaton.name, state.name),
            StateTestForm::Short => format!("{}.{}", automaton.name, state.name),
        },
        Expr::In { automaton, state, .. } => format!("{}.in({})", automaton.name, state.name),
        Expr::Name(i) => i.name.clone(),
        Expr::Not(inner, _) => match **inner {
            Expr::And(..) | Expr::Or(..) => format!("!({})", expr(inner)),
            _ => format!("!{}", expr(inner)),
        },
        Expr::And(parts, _) => join(parts, " & "),
        Expr::Or(parts, _) => join(parts, " | "),
    }
}

fn join(parts: &[Expr], sep: &str) -> String {
    parts
        .iter()
        .map(|p| match p {
            Expr::And(..) | Expr::Or(..) => format!("({})", expr(p)),
            _ => expr(p),
        })
        .collect::<Vec<_>>()
        .join(sep)
}
