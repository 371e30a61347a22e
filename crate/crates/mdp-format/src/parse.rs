use std::collections::HashMap;
use std::fmt;

use mdp_model::{parse_rational, validate, MdpBuilder, Mdp, Rational, Weight, FAIL_STATE};
use num_traits::{One, Signed, Zero};

/// 1-based position in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    DuplicateLabel { state: String, label: String },
    BadSum { sum: Rational },
    Reserved(String),
    MissingDirective(&'static str),
    DuplicateDirective(&'static str),
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::DuplicateLabel { state, label } => {
                write!(f, "duplicate action label {label} in state {state}")
            }
            ParseErrorKind::BadSum { sum } => {
                if sum.is_integer() {
                    write!(f, "distribution sums to {}", sum.numer())
                } else {
                    write!(f, "distribution sums to {}/{}", sum.numer(), sum.denom())
                }
            }
            ParseErrorKind::Reserved(id) => write!(f, "identifier {id} is reserved"),
            ParseErrorKind::MissingDirective(d) => write!(f, "missing {d} directive"),
            ParseErrorKind::DuplicateDirective(d) => write!(f, "{d} given more than once"),
            ParseErrorKind::Invalid(m) => write!(f, "invalid model: {m}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept the reserved `__fail` identifier (models written by transforms).
    pub internal: bool,
}

pub fn parse_mdp(text: &str) -> Result<Mdp, ParseError> {
    parse_mdp_with(text, ParseOptions::default())
}

struct Token<'a> {
    text: &'a str,
    span: SourceSpan,
}

fn tokens(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    let mut col = 0;
    for (i, ch) in body.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((s, c)) = start.take() {
                out.push(Token { text: &body[s..i], span: SourceSpan { line: line_no, column: c } });
            }
        } else if start.is_none() {
            start = Some((i, col));
        }
    }
    if let Some((s, c)) = start {
        out.push(Token { text: &body[s..], span: SourceSpan { line: line_no, column: c } });
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Pending {
    state: String,
    label: String,
    weight: Weight,
    span: SourceSpan,
    branches: Vec<(String, Rational, SourceSpan)>,
}

struct Parser {
    opts: ParseOptions,
    builder: MdpBuilder,
    initial: Option<String>,
    goal: Option<String>,
    labels: HashMap<String, Vec<String>>,
    first_mention: HashMap<String, SourceSpan>,
    pending: Option<Pending>,
}

fn syntax(span: SourceSpan, msg: impl Into<String>) -> ParseError {
    ParseError { span, kind: ParseErrorKind::Syntax(msg.into()) }
}

impl Parser {
    fn ident(&mut self, tok: &Token<'_>, what: &str) -> Result<String, ParseError> {
        if !is_ident(tok.text) {
            return Err(syntax(tok.span, format!("expected {what} identifier, found '{}'", tok.text)));
        }
        if tok.text == FAIL_STATE && !self.opts.internal {
            return Err(ParseError { span: tok.span, kind: ParseErrorKind::Reserved(tok.text.to_string()) });
        }
        self.first_mention.entry(tok.text.to_string()).or_insert(tok.span);
        Ok(tok.text.to_string())
    }

    fn flush(&mut self) -> Result<(), ParseError> {
        let Some(p) = self.pending.take() else {
            return Ok(());
        };
        if p.branches.is_empty() {
            return Err(syntax(p.span, format!("action {} of state {} has no '->' branch", p.label, p.state)));
        }
        let mut seen: HashMap<&str, SourceSpan> = HashMap::new();
        for (t, _, span) in &p.branches {
            if seen.insert(t, *span).is_some() {
                return Err(syntax(*span, format!("target {t} listed twice in one distribution")));
            }
        }
        let sum = p.branches.iter().fold(Rational::zero(), |acc, (_, q, _)| acc + q);
        if !sum.is_one() {
            return Err(ParseError { span: p.span, kind: ParseErrorKind::BadSum { sum } });
        }
        self.builder.push_action(
            &p.state,
            &p.label,
            p.weight,
            p.branches.iter().map(|(t, q, _)| (t.as_str(), q.clone())),
        );
        Ok(())
    }

    fn line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        let head = &toks[0];
        match head.text {
            "@initial" | "@goal" => {
                self.flush()?;
                let name: &'static str = if head.text == "@initial" { "@initial" } else { "@goal" };
                if toks.len() != 2 {
                    return Err(syntax(head.span, format!("{name} takes exactly one identifier")));
                }
                let id = self.ident(&toks[1], "state")?;
                let slot = if name == "@initial" { &mut self.initial } else { &mut self.goal };
                if slot.is_some() {
                    return Err(ParseError { span: head.span, kind: ParseErrorKind::DuplicateDirective(name) });
                }
                *slot = Some(id.clone());
                self.builder.state(&id);
            }
            "action" => {
                self.flush()?;
                if toks.len() != 4 {
                    return Err(syntax(head.span, "expected 'action STATE LABEL WEIGHT'"));
                }
                let state = self.ident(&toks[1], "state")?;
                let label = if is_ident(toks[2].text) {
                    toks[2].text.to_string()
                } else {
                    return Err(syntax(toks[2].span, format!("expected action label, found '{}'", toks[2].text)));
                };
                let weight = parse_int(&toks[3])?;
                let used = self.labels.entry(state.clone()).or_default();
                if used.contains(&label) {
                    return Err(ParseError { span: toks[2].span, kind: ParseErrorKind::DuplicateLabel { state, label } });
                }
                used.push(label.clone());
                self.builder.state(&state);
                self.pending = Some(Pending { state, label, weight, span: head.span, branches: Vec::new() });
            }
            "->" => {
                if toks.len() != 3 {
                    return Err(syntax(head.span, "expected '-> TARGET PROBABILITY'"));
                }
                if self.pending.is_none() {
                    return Err(syntax(head.span, "branch outside of an action"));
                }
                let target = self.ident(&toks[1], "target")?;
                let p = parse_rational(toks[2].text)
                    .ok_or_else(|| syntax(toks[2].span, format!("expected INT or INT/INT, found '{}'", toks[2].text)))?;
                if !p.is_positive() {
                    return Err(syntax(toks[2].span, "probability must be positive"));
                }
                self.builder.state(&target);
                self.pending.as_mut().expect("checked").branches.push((target, p, toks[1].span));
            }
            other => return Err(syntax(head.span, format!("unexpected token '{other}'"))),
        }
        Ok(())
    }
}

fn parse_int(tok: &Token<'_>) -> Result<Weight, ParseError> {
    let digits = tok.text.strip_prefix(['-', '+']).unwrap_or(tok.text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(syntax(tok.span, format!("expected integer weight, found '{}'", tok.text)));
    }
    tok.text.parse().map_err(|_| syntax(tok.span, format!("weight {} out of range", tok.text)))
}

pub fn parse_mdp_with(text: &str, opts: ParseOptions) -> Result<Mdp, ParseError> {
    let mut p = Parser {
        opts,
        builder: MdpBuilder::default(),
        initial: None,
        goal: None,
        labels: HashMap::new(),
        first_mention: HashMap::new(),
        pending: None,
    };
    let mut last_line = 0;
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        last_line = i + 1;
        let toks = tokens(line, i + 1);
        if !toks.is_empty() {
            p.line(&toks)?;
        }
    }
    p.flush()?;
    let end = SourceSpan { line: last_line.max(1), column: 1 };
    let initial = p.initial.clone().ok_or(ParseError { span: end, kind: ParseErrorKind::MissingDirective("@initial") })?;
    let goal = p.goal.clone().ok_or(ParseError { span: end, kind: ParseErrorKind::MissingDirective("@goal") })?;
    p.builder.set_initial(&initial);
    p.builder.set_goal(&goal);
    let model = p.builder.build();
    let report = validate(&model);
    if let Some(v) = report.violations.first() {
        // Point at the first mention of the offending state when there is one.
        let span = model
            .states
            .iter()
            .filter(|s| v.to_string().contains(s.as_str()))
            .filter_map(|s| p.first_mention.get(s))
            .min()
            .copied()
            .unwrap_or(end);
        return Err(ParseError { span, kind: ParseErrorKind::Invalid(report.to_string()) });
    }
    Ok(model)
}
