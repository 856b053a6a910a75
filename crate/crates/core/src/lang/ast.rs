use std::fmt;

/// Byte range in the source plus the 1-based line and column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { end: other.end, ..self }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Ms,
    S,
    Min,
    H,
}

impl TimeUnit {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ms" => TimeUnit::Ms,
            "s" => TimeUnit::S,
            "min" => TimeUnit::Min,
            "h" => TimeUnit::H,
            _ => return None,
        })
    }

    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Ms => 1e-3,
            TimeUnit::S => 1.0,
            TimeUnit::Min => 60.0,
            TimeUnit::H => 3600.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Ms => "ms",
            TimeUnit::S => "s",
            TimeUnit::Min => "min",
            TimeUnit::H => "h",
        }
    }
}

/// A numeric literal, kept with its source text so printing is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Number {
    pub text: String,
    pub value: f64,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    None,
    Duration(TimeUnit),
    /// Per time unit, written `/h`.
    Rate(TimeUnit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub number: Number,
    pub dimension: Dimension,
    pub span: Span,
}

/// A literal or a reference to a named constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Literal(Quantity),
    Named(Ident),
}

impl Value {
    pub fn span(&self) -> Span {
        match self {
            Value::Literal(q) => q.span,
            Value::Named(i) => i.span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateTestForm {
    /// `X.state == s`
    Eq,
    /// `X.state != s`
    Ne,
    /// `X.s`
    Short,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Bool(bool, Span),
    State {
        automaton: Ident,
        state: Ident,
        form: StateTestForm,
        span: Span,
    },
    /// `X.in(s)`
    In {
        automaton: Ident,
        state: Ident,
        span: Span,
    },
    /// Named predicate or failure mode (active).
    Name(Ident),
    Not(Box<Expr>, Span),
    And(Vec<Expr>, Span),
    Or(Vec<Expr>, Span),
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Bool(_, s) | Expr::Not(_, s) | Expr::And(_, s) | Expr::Or(_, s) => *s,
            Expr::State { span, .. } | Expr::In { span, .. } => *span,
            Expr::Name(i) => i.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub name: Ident,
    pub value: Quantity,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub probability: Value,
    pub target: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Single(Ident),
    Distribution(Vec<Branch>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDecl {
    pub source: Ident,
    pub targets: Targets,
    pub guard: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutomatonDecl {
    pub name: Ident,
    pub states: Vec<Ident>,
    pub init: Ident,
    pub transitions: Vec<TransitionDecl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredDecl {
    pub name: Ident,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryDecl {
    Latching,
    Transient,
    Repair(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternDecl {
    Persistent,
    Transient,
    PerTime { rate: Value, recovery: RecoveryDecl },
    PerDemand { probability: Value },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureDecl {
    pub name: Ident,
    pub pattern: PatternDecl,
    pub on: Option<Ident>,
    pub demand: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazardDecl {
    pub name: Ident,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Const(ConstDecl),
    Automaton(AutomatonDecl),
    Pred(PredDecl),
    Failure(Box<FailureDecl>),
    Hazard(HazardDecl),
}

/// A parsed and resolved `.ssm` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub text: String,
    pub items: Vec<Item>,
}

impl SourceModel {
    /// The items with every span reset, for structural comparison.
    pub fn normalized_items(&self) -> Vec<Item> {
        let mut items = self.items.clone();
        for item in &mut items {
            clear_item(item);
        }
        items
    }
}

fn clear_ident(i: &mut Ident) {
    i.span = Span::default();
}

fn clear_quantity(q: &mut Quantity) {
    q.span = Span::default();
    q.number.span = Span::default();
}

fn clear_value(v: &mut Value) {
    match v {
        Value::Literal(q) => clear_quantity(q),
        Value::Named(i) => clear_ident(i),
    }
}

fn clear_expr(e: &mut Expr) {
    match e {
        Expr::Bool(_, s) => *s = Span::default(),
        Expr::State {
            automaton, state, span, ..
        }
        | Expr::In {
            automaton, state, span, ..
        } => {
            clear_ident(automaton);
            clear_ident(state);
            *span = Span::default();
        }
        Expr::Name(i) => clear_ident(i),
        Expr::Not(inner, s) => {
            clear_expr(inner);
            *s = Span::default();
        }
        Expr::And(parts, s) | Expr::Or(parts, s) => {
            parts.iter_mut().for_each(clear_expr);
            *s = Span::default();
        }
    }
}

fn clear_item(item: &mut Item) {
    match item {
        Item::Const(c) => {
            clear_ident(&mut c.name);
            clear_quantity(&mut c.value);
            c.span = Span::default();
        }
        Item::Automaton(a) => {
            clear_ident(&mut a.name);
            a.states.iter_mut().for_each(clear_ident);
            clear_ident(&mut a.init);
            for t in &mut a.transitions {
                clear_ident(&mut t.source);
                match &mut t.targets {
                    Targets::Single(i) => clear_ident(i),
                    Targets::Distribution(bs) => {
                        for b in bs {
                            clear_value(&mut b.probability);
                            clear_ident(&mut b.target);
                        }
                    }
                }
                if let Some(g) = &mut t.guard {
                    clear_expr(g);
                }
                t.span = Span::default();
            }
            a.span = Span::default();
        }
        Item::Pred(p) => {
            clear_ident(&mut p.name);
            clear_expr(&mut p.expr);
            p.span = Span::default();
        }
        Item::Failure(f) => {
            clear_ident(&mut f.name);
            match &mut f.pattern {
                PatternDecl::PerTime { rate, recovery } => {
                    clear_value(rate);
                    if let RecoveryDecl::Repair(v) = recovery {
                        clear_value(v);
                    }
                }
                PatternDecl::PerDemand { probability } => clear_value(probability),
                PatternDecl::Persistent | PatternDecl::Transient => {}
            }
            if let Some(on) = &mut f.on {
                clear_ident(on);
            }
            if let Some(d) = &mut f.demand {
                clear_expr(d);
            }
            f.span = Span::default();
        }
        Item::Hazard(h) => {
            clear_ident(&mut h.name);
            clear_expr(&mut h.expr);
            h.span = Span::default();
        }
    }
}
