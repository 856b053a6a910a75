use super::ast::*;
use super::lexer::{Kind, Token};
use super::Diagnostic;

const ITEM_KEYWORDS: [&str; 5] = ["const", "automaton", "pred", "failure", "hazard"];

type PResult<T> = Result<T, Diagnostic>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(toks: Vec<Token>) -> Self {
        Self { toks, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        &self.toks[(self.pos + ahead).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.kind != Kind::Eof {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let t = self.peek();
        let found = match t.kind {
            Kind::Eof => "end of input".to_string(),
            _ => format!("'{}'", t.text),
        };
        Diagnostic::error(format!("expected {expected}, found {found}"), t.span)
    }

    fn expect(&mut self, punct: &str) -> PResult<Token> {
        if self.peek().is(punct) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&format!("'{punct}'")))
        }
    }

    fn eat(&mut self, punct: &str) -> bool {
        if self.peek().is(punct) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        let t = self.peek();
        if t.kind == Kind::Ident && t.text != "true" && t.text != "false" {
            let t = self.bump();
            Ok(Ident {
                name: t.text,
                span: t.span,
            })
        } else {
            Err(self.unexpected(what))
        }
    }

    /// Skips to the next item keyword outside braces.
    fn recover(&mut self) {
        let mut depth = 0i32;
        loop {
            let t = self.peek();
            match t.kind {
                Kind::Eof => return,
                Kind::Ident if depth <= 0 && ITEM_KEYWORDS.contains(&t.text.as_str()) => return,
                _ => {}
            }
            if t.is("{") {
                depth += 1;
            } else if t.is("}") {
                depth -= 1;
            }
            self.bump();
        }
    }

    pub fn items(&mut self, diags: &mut Vec<Diagnostic>) -> Vec<Item> {
        let mut items = Vec::new();
        while self.peek().kind != Kind::Eof {
            let start = self.pos;
            match self.item() {
                Ok(item) => items.push(item),
                Err(d) => {
                    diags.push(d);
                    if self.pos == start {
                        self.bump();
                    }
                    self.recover();
                }
            }
        }
        items
    }

    fn item(&mut self) -> PResult<Item> {
        let t = self.peek().clone();
        match t.text.as_str() {
            "const" if t.kind == Kind::Ident => self.const_decl().map(Item::Const),
            "automaton" if t.kind == Kind::Ident => self.automaton().map(Item::Automaton),
            "pred" if t.kind == Kind::Ident => self.pred().map(Item::Pred),
            "failure" if t.kind == Kind::Ident => self.failure().map(|f| Item::Failure(Box::new(f))),
            "hazard" if t.kind == Kind::Ident => self.hazard().map(Item::Hazard),
            _ => Err(self.unexpected("'const', 'automaton', 'pred', 'failure' or 'hazard'")),
        }
    }

    fn const_decl(&mut self) -> PResult<ConstDecl> {
        let start = self.bump().span;
        let name = self.ident("constant name")?;
        self.expect("=")?;
        let value = self.quantity()?;
        self.expect(";")?;
        Ok(ConstDecl {
            name,
            value,
            span: start.to(self.prev_span()),
        })
    }

    fn quantity(&mut self) -> PResult<Quantity> {
        if self.peek().kind != Kind::Number {
            return Err(self.unexpected("number"));
        }
        let t = self.bump();
        let value: f64 = t
            .text
            .parse()
            .map_err(|_| Diagnostic::error(format!("invalid number '{}'", t.text), t.span))?;
        let number = Number {
            text: t.text,
            value,
            span: t.span,
        };
        let dimension = if let Some(u) = self.unit_at(0) {
            self.bump();
            Dimension::Duration(u)
        } else if self.peek().is("/") {
            self.bump();
            match self.unit_at(0) {
                Some(u) => {
                    self.bump();
                    Dimension::Rate(u)
                }
                None => return Err(self.unexpected("time unit (ms, s, min, h)")),
            }
        } else {
            Dimension::None
        };
        Ok(Quantity {
            number,
            dimension,
            span: t.span.to(self.prev_span()),
        })
    }

    fn unit_at(&self, ahead: usize) -> Option<TimeUnit> {
        let t = self.peek_at(ahead);
        (t.kind == Kind::Ident).then(|| TimeUnit::parse(&t.text)).flatten()
    }

    fn value(&mut self) -> PResult<Value> {
        match self.peek().kind {
            Kind::Number => self.quantity().map(Value::Literal),
            Kind::Ident => self.ident("value").map(Value::Named),
            _ => Err(self.unexpected("number or constant name")),
        }
    }

    fn automaton(&mut self) -> PResult<AutomatonDecl> {
        let start = self.bump().span;
        let name = self.ident("automaton name")?;
        self.expect("{")?;
        let mut states: Option<Vec<Ident>> = None;
        let mut init: Option<Ident> = None;
        let mut transitions = Vec::new();
        while !self.peek().is("}") {
            if self.peek().is_word("states") && !self.peek_at(1).is("->") {
                let kw = self.bump();
                let mut list = vec![self.ident("state name")?];
                while self.eat(",") {
                    list.push(self.ident("state name")?);
                }
                self.expect(";")?;
                if states.replace(list).is_some() {
                    return Err(Diagnostic::error("duplicate 'states' declaration", kw.span));
                }
            } else if self.peek().is_word("init") && !self.peek_at(1).is("->") {
                let kw = self.bump();
                let s = self.ident("initial state")?;
                self.expect(";")?;
                if init.replace(s).is_some() {
                    return Err(Diagnostic::error("duplicate 'init' declaration", kw.span));
                }
            } else if self.peek().kind == Kind::Eof {
                return Err(self.unexpected("'}'"));
            } else {
                transitions.push(self.transition()?);
            }
        }
        let close = self.bump().span;
        let states = states.ok_or_else(|| Diagnostic::error("automaton lacks a 'states' declaration", name.span))?;
        let init = init.ok_or_else(|| Diagnostic::error("automaton lacks an 'init' declaration", name.span))?;
        Ok(AutomatonDecl {
            name,
            states,
            init,
            transitions,
            span: start.to(close),
        })
    }

    fn transition(&mut self) -> PResult<TransitionDecl> {
        let source = self.ident("state name or '}'")?;
        self.expect("->")?;
        let targets = if self.eat("{") {
            let mut branches = vec![self.branch()?];
            while self.eat(",") {
                branches.push(self.branch()?);
            }
            self.expect("}")?;
            Targets::Distribution(branches)
        } else {
            Targets::Single(self.ident("target state or '{'")?)
        };
        let guard = if self.eat("[") {
            let g = self.expr()?;
            self.expect("]")?;
            Some(g)
        } else {
            None
        };
        self.expect(";")?;
        Ok(TransitionDecl {
            span: source.span.to(self.prev_span()),
            source,
            targets,
            guard,
        })
    }

    fn branch(&mut self) -> PResult<Branch> {
        let probability = self.value()?;
        self.expect(":")?;
        let target = self.ident("target state")?;
        Ok(Branch { probability, target })
    }

    fn pred(&mut self) -> PResult<PredDecl> {
        let start = self.bump().span;
        let name = self.ident("predicate name")?;
        self.expect("=")?;
        let expr = self.expr()?;
        self.expect(";")?;
        Ok(PredDecl {
            name,
            expr,
            span: start.to(self.prev_span()),
        })
    }

    fn hazard(&mut self) -> PResult<HazardDecl> {
        let start = self.bump().span;
        let name = self.ident("hazard name")?;
        self.expect("=")?;
        let expr = self.expr()?;
        self.expect(";")?;
        Ok(HazardDecl {
            name,
            expr,
            span: start.to(self.prev_span()),
        })
    }

    fn failure(&mut self) -> PResult<FailureDecl> {
        let start = self.bump().span;
        let name = self.ident("failure mode name")?;
        let t = self.peek().clone();
        let pattern = match t.text.as_str() {
            "persistent" if t.kind == Kind::Ident => {
                self.bump();
                PatternDecl::Persistent
            }
            "transient" if t.kind == Kind::Ident => {
                self.bump();
                PatternDecl::Transient
            }
            "per_time" if t.kind == Kind::Ident => {
                self.bump();
                self.expect("(")?;
                let rate = self.value()?;
                self.expect(")")?;
                let recovery = if self.peek().is_word("transient") {
                    self.bump();
                    RecoveryDecl::Transient
                } else if self.peek().is_word("repair") {
                    self.bump();
                    self.expect("(")?;
                    let v = self.value()?;
                    self.expect(")")?;
                    RecoveryDecl::Repair(v)
                } else {
                    RecoveryDecl::Latching
                };
                PatternDecl::PerTime { rate, recovery }
            }
            "per_demand" if t.kind == Kind::Ident => {
                self.bump();
                self.expect("(")?;
                let probability = self.value()?;
                self.expect(")")?;
                PatternDecl::PerDemand { probability }
            }
            _ => return Err(self.unexpected("'persistent', 'transient', 'per_time' or 'per_demand'")),
        };
        let mut on = None;
        let mut demand = None;
        loop {
            if self.peek().is_word("on") {
                let kw = self.bump();
                if on.replace(self.ident("automaton name")?).is_some() {
                    return Err(Diagnostic::error("duplicate 'on' clause", kw.span));
                }
            } else if self.peek().is_word("demand") {
                let kw = self.bump();
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                if demand.replace(e).is_some() {
                    return Err(Diagnostic::error("duplicate 'demand' clause", kw.span));
                }
            } else {
                break;
            }
        }
        self.expect(";")?;
        Ok(FailureDecl {
            name,
            pattern,
            on,
            demand,
            span: start.to(self.prev_span()),
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let first = self.conj()?;
        if !self.peek().is("|") {
            return Ok(first);
        }
        let start = first.span();
        let mut parts = vec![first];
        while self.eat("|") {
            parts.push(self.conj()?);
        }
        Ok(Expr::Or(parts, start.to(self.prev_span())))
    }

    fn conj(&mut self) -> PResult<Expr> {
        let first = self.unary()?;
        if !self.peek().is("&") {
            return Ok(first);
        }
        let start = first.span();
        let mut parts = vec![first];
        while self.eat("&") {
            parts.push(self.unary()?);
        }
        Ok(Expr::And(parts, start.to(self.prev_span())))
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek().is("!") {
            let start = self.bump().span;
            let inner = self.unary()?;
            return Ok(Expr::Not(Box::new(inner), start.to(self.prev_span())));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        if t.is("(") {
            self.bump();
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        if t.is_word("true") || t.is_word("false") {
            self.bump();
            return Ok(Expr::Bool(t.text == "true", t.span));
        }
        let automaton = self.ident("expression")?;
        if !self.eat(".") {
            return Ok(Expr::Name(automaton));
        }
        let member = self.ident("state name, 'state' or 'in'")?;
        if member.name == "state" && (self.peek().is("==") || self.peek().is("!=")) {
            let form = if self.bump().text == "==" {
                StateTestForm::Eq
            } else {
                StateTestForm::Ne
            };
            let state = self.ident("state name")?;
            return Ok(Expr::State {
                span: automaton.span.to(state.span),
                automaton,
                state,
                form,
            });
        }
        if member.name == "in" && self.peek().is("(") {
            self.bump();
            let state = self.ident("state name")?;
            self.expect(")")?;
            return Ok(Expr::In {
                span: automaton.span.to(self.prev_span()),
                automaton,
                state,
            });
        }
        Ok(Expr::State {
            span: automaton.span.to(member.span),
            automaton,
            state: member,
            form: StateTestForm::Short,
        })
    }
}
