//! Scenario files: a line-oriented directive format with an embedded formula
//! grammar, parsed by hand-written recursive descent.
//!
//! ```text
//! # comment
//! world w1 { energy=50, kappa=0, lambda=8 }
//! edge w1 -> w2 { deltaE=4 }
//! prop w1 : E * Entangled(A,B)
//! sequent eq1 w1 -> w2 : E, Entangled(A,B) |- Decohered(A), Residual(B)
//! ```
//!
//! Formula precedence, tightest first: `!F` and `<r>F`, then `*`
//! (left-associative), then `&` (left-associative), then `-o`
//! (right-associative). `⊗`, `⊸` and `⊢` are accepted for `*`, `-o` and `|-`.

use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::calculus::{Law, Sequent};
use crate::formula::{default_classical, Atom, Budget, CostModel, Formula, Marked};
use crate::frame::{Frame, World};
use crate::observer::Observer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Coherence,
    Reciprocity,
    Accessibility,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Coherence => "coherence",
            ScenarioKind::Reciprocity => "reciprocity",
            ScenarioKind::Accessibility => "accessibility",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSequent {
    pub source: String,
    pub target: String,
    pub sequent: Sequent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub frame: Frame,
    pub cost_model: CostModel,
    pub observers: Vec<Observer>,
    pub sequents: IndexMap<String, NamedSequent>,
    pub scenario_kind: Option<ScenarioKind>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub kappa0: Option<f64>,
    pub noise: Option<f64>,
    /// Copies of the head world's propositions seeded by the coherence run.
    pub width: Option<u32>,
    /// Size of the generated observer population when none are declared.
    pub population: Option<u32>,
    /// Atom names parsed as non-coherent without a `~` marker.
    pub classical: Vec<String>,
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Eq,
    Colon,
    Arrow,
    Turnstile,
    Star,
    Amp,
    Bang,
    Tilde,
    Lt,
    Gt,
    Lolli,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::End => "end of line".into(),
            other => format!("`{}`", symbol(other)),
        }
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Comma => ",",
        Tok::Eq => "=",
        Tok::Colon => ":",
        Tok::Arrow => "->",
        Tok::Turnstile => "|-",
        Tok::Star => "*",
        Tok::Amp => "&",
        Tok::Bang => "!",
        Tok::Tilde => "~",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Lolli => "-o",
        Tok::Ident(_) | Tok::Number(_) | Tok::End => "",
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    column: usize,
}

/// One logical line: its number and content without comment or line ending.
struct Line<'a> {
    number: usize,
    text: &'a str,
}

impl Line<'_> {
    fn len(&self) -> usize {
        self.text.trim_end().chars().count()
    }

    /// Clamps a column so it always names a visible character of the line.
    fn clamp(&self, column: usize) -> usize {
        column.min(self.len()).max(1)
    }

    fn error(&self, column: usize, message: impl Into<String>, expected: Vec<String>) -> ParseError {
        ParseError {
            line: self.number,
            column: self.clamp(column),
            message: message.into(),
            expected,
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(line: &Line<'_>) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            ':' => Some(Tok::Colon),
            '*' | '⊗' => Some(Tok::Star),
            '&' => Some(Tok::Amp),
            '!' => Some(Tok::Bang),
            '~' => Some(Tok::Tilde),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            '⊸' => Some(Tok::Lolli),
            '⊢' => Some(Tok::Turnstile),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, column });
            i += 1;
            continue;
        }
        let next = chars.get(i + 1).copied();
        match (c, next) {
            ('-', Some('>')) => {
                out.push(Spanned { tok: Tok::Arrow, column });
                i += 2;
            }
            ('-', Some('o')) => {
                out.push(Spanned { tok: Tok::Lolli, column });
                i += 2;
            }
            ('|', Some('-')) => {
                out.push(Spanned { tok: Tok::Turnstile, column });
                i += 2;
            }
            _ if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Spanned { tok: Tok::Ident(text), column });
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j], '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Spanned { tok: Tok::Number(text), column });
            }
            _ => {
                return Err(line.error(column, format!("unexpected character `{c}`"), Vec::new()));
            }
        }
    }
    out.push(Spanned {
        tok: Tok::End,
        column: chars.len() + 1,
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// token cursor and formula grammar

struct Cursor<'a, 'l> {
    line: &'a Line<'l>,
    toks: Vec<Spanned>,
    pos: usize,
    classical: &'a [String],
}

impl<'a, 'l> Cursor<'a, 'l> {
    fn new(line: &'a Line<'l>, classical: &'a [String]) -> Result<Self, ParseError> {
        Ok(Cursor {
            line,
            toks: lex(line)?,
            pos: 0,
            classical,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn column(&self) -> usize {
        self.toks[self.pos].column
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.line.error(
            self.column(),
            format!("unexpected {}", self.peek().describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{}`", symbol(&tok))]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let column = self.column();
                self.bump();
                Ok((s, column))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == word => {
                self.bump();
                Ok(())
            }
            _ => Err(self.unexpected(&[&format!("`{word}`")])),
        }
    }

    fn real(&mut self) -> Result<f64, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                let column = self.column();
                self.bump();
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(self.line.error(column, format!("invalid number `{text}`"), Vec::new())),
                }
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn integer<T: std::str::FromStr>(&mut self) -> Result<T, ParseError> {
        match self.peek().clone() {
            Tok::Number(text) => {
                let column = self.column();
                self.bump();
                text.parse::<T>().map_err(|_| {
                    self.line
                        .error(column, format!("`{text}` is not a valid integer here"), vec!["integer".into()])
                })
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::End) {
            Ok(())
        } else {
            Err(self.unexpected(&["end of line"]))
        }
    }

    // lolli := with ('-o' lolli)?
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let left = self.with()?;
        if self.eat(&Tok::Lolli) {
            let right = self.formula()?;
            return Ok(Formula::lolli(left, right));
        }
        Ok(left)
    }

    fn with(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.tensor()?;
        while self.eat(&Tok::Amp) {
            left = Formula::with(left, self.tensor()?);
        }
        Ok(left)
    }

    fn tensor(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while self.eat(&Tok::Star) {
            left = Formula::tensor(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::bang(self.unary()?))
            }
            Tok::Lt => {
                self.bump();
                let column = self.column();
                let r = self.real()?;
                let budget = Budget::new(r).ok_or_else(|| {
                    self.line.error(column, "diamond budget must be >= 0", Vec::new())
                })?;
                self.expect(Tok::Gt)?;
                Ok(Formula::Diamond(budget, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Tilde => {
                self.bump();
                let mut atom = self.atom()?;
                atom.coherent = false;
                Ok(Formula::Atom(atom))
            }
            Tok::Ident(_) => Ok(Formula::Atom(self.atom()?)),
            _ => Err(self.unexpected(&["atom", "`(`", "`!`", "`<`", "`~`"])),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (name, _) = self.ident("atom name")?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.ident("argument")?.0);
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(Tok::RParen)?;
                break;
            }
        }
        let coherent = !self.classical.contains(&name);
        Ok(Atom { name, args, coherent })
    }

    /// Comma-separated formulas up to (not including) `stop`.
    fn formula_list(&mut self, stop: &Tok) -> Result<Vec<Formula>, ParseError> {
        let mut out = Vec::new();
        if self.peek() == stop {
            return Ok(out);
        }
        loop {
            out.push(self.formula()?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }
}

fn split_lines(text: &str) -> Vec<Line<'_>> {
    text.split('\n')
        .enumerate()
        .map(|(i, raw)| {
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            let text = match raw.find('#') {
                Some(cut) => &raw[..cut],
                None => raw,
            };
            Line { number: i + 1, text }
        })
        .collect()
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_formula_with(text, &default_classical())
}

/// Parses a single formula; atoms named in `classical` come out non-coherent.
pub fn parse_formula_with(text: &str, classical: &[String]) -> Result<Formula, ParseError> {
    let lines = split_lines(text);
    let content: Vec<&Line<'_>> = lines.iter().filter(|l| !l.text.trim().is_empty()).collect();
    match content.as_slice() {
        [line] => {
            let mut cur = Cursor::new(line, classical)?;
            let f = cur.formula()?;
            cur.end()?;
            Ok(f)
        }
        [] => Err(ParseError {
            line: 1,
            column: 1,
            message: "empty formula".into(),
            expected: vec!["atom".into()],
        }),
        [_, second, ..] => Err(second.error(1, "a formula must fit on one line", Vec::new())),
    }
}

// ---------------------------------------------------------------------------
// scenario files

#[derive(Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

impl Pos {
    fn error(self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            message: message.into(),
            expected: Vec::new(),
        }
    }
}

struct WorldDecl {
    id: String,
    at: Pos,
    energy: f64,
    kappa: Option<f64>,
    lambda: u32,
}

#[derive(Default)]
struct Draft {
    worlds: Vec<WorldDecl>,
    edges: Vec<(String, Pos, String, Pos, f64)>,
    props: Vec<(String, Pos, Formula)>,
    laws: Vec<Law>,
    costs: Vec<(String, Pos, f64)>,
    alpha: Option<f64>,
    default_cost: Option<f64>,
    observers: Vec<(Observer, Pos)>,
    sequents: Vec<(String, Pos, String, Pos, String, Pos, Sequent)>,
    kind: Option<ScenarioKind>,
    trials: Option<u32>,
    seed: Option<u64>,
    kappa0: Option<f64>,
    noise: Option<f64>,
    width: Option<u32>,
    population: Option<u32>,
}

fn set_once<T>(slot: &mut Option<T>, value: T, name: &str, at: Pos) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(at.error(format!("duplicate `{name}` directive")));
    }
    *slot = Some(value);
    Ok(())
}

const DIRECTIVES: [&str; 16] = [
    "world", "edge", "prop", "cost", "alpha", "default_cost", "observer", "sequent", "law",
    "scenario", "trials", "seed", "noise", "kappa0", "width", "population",
];

/// Parses a whole scenario file and checks referential integrity.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ParseError> {
    let lines = split_lines(text);

    // `classical` directives apply to every formula in the file, so they are
    // read first.
    let mut classical = default_classical();
    for line in &lines {
        let mut cur = Cursor::new(line, &[])?;
        if matches!(cur.peek(), Tok::Ident(s) if s == "classical") {
            cur.bump();
            loop {
                let (name, _) = cur.ident("atom name")?;
                if !classical.contains(&name) {
                    classical.push(name);
                }
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.end()?;
        }
    }

    let mut draft = Draft::default();
    for line in &lines {
        let mut cur = Cursor::new(line, &classical)?;
        if matches!(cur.peek(), Tok::End) {
            continue;
        }
        directive(&mut cur, &mut draft)?;
    }
    build(draft, classical, &lines)
}

fn directive(cur: &mut Cursor<'_, '_>, draft: &mut Draft) -> Result<(), ParseError> {
    let at = Pos {
        line: cur.line.number,
        column: cur.column(),
    };
    let Tok::Ident(word) = cur.peek().clone() else {
        return Err(cur.unexpected(&["directive"]));
    };
    cur.bump();
    let here = |cur: &Cursor<'_, '_>| Pos {
        line: cur.line.number,
        column: cur.line.clamp(cur.column()),
    };
    match word.as_str() {
        "classical" => return Ok(()),
        "world" => {
            let (id, column) = cur.ident("world id")?;
            let id_at = Pos { line: at.line, column };
            cur.expect(Tok::LBrace)?;
            let (mut energy, mut kappa, mut lambda) = (None, None, None);
            loop {
                let key_at = here(cur);
                let (key, _) = cur.ident("`energy`, `kappa` or `lambda`")?;
                cur.expect(Tok::Eq)?;
                match key.as_str() {
                    "energy" => set_once(&mut energy, cur.real()?, "energy", key_at)?,
                    "kappa" => set_once(&mut kappa, cur.real()?, "kappa", key_at)?,
                    "lambda" => {
                        let value_at = here(cur);
                        let l: u32 = cur.integer()?;
                        if l == 0 {
                            return Err(value_at.error("lambda must be >= 1"));
                        }
                        set_once(&mut lambda, l, "lambda", key_at)?
                    }
                    _ => {
                        return Err(ParseError {
                            line: key_at.line,
                            column: key_at.column,
                            message: format!("unknown world attribute `{key}`"),
                            expected: vec!["`energy`".into(), "`kappa`".into(), "`lambda`".into()],
                        })
                    }
                }
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            let close_at = here(cur);
            cur.expect(Tok::RBrace)?;
            cur.end()?;
            let energy = energy.ok_or_else(|| close_at.error(format!("world `{id}` is missing `energy`")))?;
            let lambda = lambda.ok_or_else(|| close_at.error(format!("world `{id}` is missing `lambda`")))?;
            draft.worlds.push(WorldDecl {
                id,
                at: id_at,
                energy,
                kappa,
                lambda,
            });
        }
        "edge" => {
            let from_at = here(cur);
            let (from, _) = cur.ident("world id")?;
            cur.expect(Tok::Arrow)?;
            let to_at = here(cur);
            let (to, _) = cur.ident("world id")?;
            cur.expect(Tok::LBrace)?;
            cur.keyword("deltaE")?;
            cur.expect(Tok::Eq)?;
            let delta = cur.real()?;
            cur.expect(Tok::RBrace)?;
            cur.end()?;
            draft.edges.push((from, from_at, to, to_at, delta));
        }
        "prop" => {
            let id_at = here(cur);
            let (id, _) = cur.ident("world id")?;
            cur.expect(Tok::Colon)?;
            let f = cur.formula()?;
            cur.end()?;
            draft.props.push((id, id_at, f));
        }
        "cost" => {
            let name_at = here(cur);
            let (name, _) = cur.ident("atom name")?;
            cur.expect(Tok::Eq)?;
            let c = cur.real()?;
            cur.end()?;
            if draft.costs.iter().any(|(n, _, _)| *n == name) {
                return Err(name_at.error(format!("duplicate cost for `{name}`")));
            }
            draft.costs.push((name, name_at, c));
        }
        "alpha" | "default_cost" | "kappa0" | "noise" => {
            cur.expect(Tok::Eq)?;
            let v = cur.real()?;
            cur.end()?;
            let slot = match word.as_str() {
                "alpha" => &mut draft.alpha,
                "default_cost" => &mut draft.default_cost,
                "kappa0" => &mut draft.kappa0,
                _ => &mut draft.noise,
            };
            set_once(slot, v, &word, at)?;
        }
        "trials" | "width" | "population" => {
            cur.expect(Tok::Eq)?;
            let value_at = here(cur);
            let n: u32 = cur.integer()?;
            cur.end()?;
            if n == 0 {
                return Err(value_at.error(format!("`{word}` must be >= 1")));
            }
            let slot = match word.as_str() {
                "trials" => &mut draft.trials,
                "width" => &mut draft.width,
                _ => &mut draft.population,
            };
            set_once(slot, n, &word, at)?;
        }
        "seed" => {
            cur.expect(Tok::Eq)?;
            let s: u64 = cur.integer()?;
            cur.end()?;
            set_once(&mut draft.seed, s, "seed", at)?;
        }
        "observer" => {
            let (id, _) = cur.ident("observer id")?;
            cur.keyword("home")?;
            cur.expect(Tok::Eq)?;
            let home_at = here(cur);
            let (home, _) = cur.ident("world id")?;
            cur.keyword("horizon")?;
            cur.expect(Tok::Eq)?;
            let horizon: u32 = cur.integer()?;
            cur.end()?;
            if draft.observers.iter().any(|(o, _)| o.id == id) {
                return Err(at.error(format!("duplicate observer `{id}`")));
            }
            draft.observers.push((Observer::new(id, home, horizon), home_at));
        }
        "sequent" => {
            let name_at = here(cur);
            let (name, _) = cur.ident("sequent name")?;
            let from_at = here(cur);
            let (from, _) = cur.ident("world id")?;
            cur.expect(Tok::Arrow)?;
            let to_at = here(cur);
            let (to, _) = cur.ident("world id")?;
            cur.expect(Tok::Colon)?;
            let gamma = cur.formula_list(&Tok::Turnstile)?;
            cur.expect(Tok::Turnstile)?;
            let delta = cur.formula_list(&Tok::End)?;
            cur.end()?;
            if draft.sequents.iter().any(|s| s.0 == name) {
                return Err(name_at.error(format!("duplicate sequent `{name}`")));
            }
            draft
                .sequents
                .push((name, name_at, from, from_at, to, to_at, Sequent::new(gamma, delta)));
        }
        "law" => {
            let name_at = here(cur);
            let (name, _) = cur.ident("law name")?;
            cur.expect(Tok::Colon)?;
            let premises = cur.formula_list(&Tok::Turnstile)?;
            if premises.is_empty() {
                return Err(cur.unexpected(&["formula"]));
            }
            cur.expect(Tok::Turnstile)?;
            let conclusion = cur.formula()?;
            cur.end()?;
            if draft.laws.iter().any(|l| l.name == name) {
                return Err(name_at.error(format!("duplicate law `{name}`")));
            }
            draft.laws.push(Law::new(name, premises, conclusion));
        }
        "scenario" => {
            let kind_at = here(cur);
            let (kind, _) = cur.ident("scenario kind")?;
            let kind = match kind.as_str() {
                "coherence" => ScenarioKind::Coherence,
                "reciprocity" => ScenarioKind::Reciprocity,
                "accessibility" => ScenarioKind::Accessibility,
                other => {
                    return Err(ParseError {
                        line: kind_at.line,
                        column: kind_at.column,
                        message: format!("unknown scenario kind `{other}`"),
                        expected: vec!["`coherence`".into(), "`reciprocity`".into(), "`accessibility`".into()],
                    })
                }
            };
            cur.end()?;
            set_once(&mut draft.kind, kind, "scenario", at)?;
        }
        other => {
            return Err(ParseError {
                line: at.line,
                column: at.column,
                message: format!("unknown directive `{other}`"),
                expected: DIRECTIVES.iter().map(|d| format!("`{d}`")).collect(),
            })
        }
    }
    Ok(())
}

fn build(draft: Draft, classical: Vec<String>, lines: &[Line<'_>]) -> Result<ScenarioConfig, ParseError> {
    if draft.worlds.is_empty() {
        let at = lines
            .iter()
            .find_map(|l| {
                l.text
                    .chars()
                    .position(|c| !c.is_whitespace())
                    .map(|i| Pos { line: l.number, column: i + 1 })
            })
            .unwrap_or(Pos { line: 1, column: 1 });
        return Err(at.error("no worlds declared"));
    }

    let mut model = CostModel::default();
    if let Some(alpha) = draft.alpha {
        model.set_alpha(alpha).expect("lexer yields nonnegative reals");
    }
    if let Some(d) = draft.default_cost {
        model.set_default_cost(d).expect("lexer yields nonnegative reals");
    }
    for (name, _, c) in &draft.costs {
        model.set_cost(name.clone(), *c).expect("lexer yields nonnegative reals");
    }

    let mut frame = Frame::new();
    for (index, decl) in draft.worlds.iter().enumerate() {
        let kappa = match (decl.kappa, draft.kappa0) {
            (Some(k), _) => k,
            (None, Some(k0)) => k0 * index as f64,
            (None, None) => {
                return Err(decl
                    .at
                    .error(format!("world `{}` has no kappa and no kappa0 is set", decl.id)))
            }
        };
        let world = World::new(decl.id.clone(), decl.energy, kappa, decl.lambda)
            .map_err(|e| decl.at.error(e.to_string()))?;
        frame
            .add_world(world)
            .map_err(|_| decl.at.error(format!("duplicate world `{}`", decl.id)))?;
    }

    let known = |id: &str, at: Pos| -> Result<(), ParseError> {
        frame
            .world(id)
            .map(|_| ())
            .map_err(|_| at.error(format!("unknown world `{id}`")))
    };
    for (from, from_at, to, to_at, _) in &draft.edges {
        known(from, *from_at)?;
        known(to, *to_at)?;
    }
    for (id, at, _) in &draft.props {
        known(id, *at)?;
    }
    for (o, at) in &draft.observers {
        known(&o.home, *at)?;
    }
    for (_, _, from, from_at, to, to_at, _) in &draft.sequents {
        known(from, *from_at)?;
        known(to, *to_at)?;
    }

    for (from, from_at, to, _, delta) in &draft.edges {
        frame
            .add_edge(from, to, *delta)
            .map_err(|e| from_at.error(e.to_string()))?;
    }
    for (id, _, f) in draft.props {
        frame.world_mut(&id).expect("checked above").props.push(f);
    }
    for law in draft.laws {
        frame.add_law(law);
    }

    let sequents = draft
        .sequents
        .into_iter()
        .map(|(name, _, source, _, target, _, sequent)| {
            (name, NamedSequent { source, target, sequent })
        })
        .collect();

    Ok(ScenarioConfig {
        frame,
        cost_model: model,
        observers: draft.observers.into_iter().map(|(o, _)| o).collect(),
        sequents,
        scenario_kind: draft.kind,
        trials: draft.trials,
        seed: draft.seed,
        kappa0: draft.kappa0,
        noise: draft.noise,
        width: draft.width,
        population: draft.population,
        classical,
    })
}

/// Canonical text for a configuration. Reals use the shortest representation
/// that reads back to the same value.
pub fn serialize_scenario(config: &ScenarioConfig) -> String {
    let classical = &config.classical;
    let fm = |f: &Formula| Marked::new(f, classical).to_string();
    let list = |fs: &[Formula]| fs.iter().map(&fm).collect::<Vec<_>>().join(", ");
    let mut out = String::new();

    let defaults = default_classical();
    let extra: Vec<&str> = classical
        .iter()
        .filter(|c| !defaults.contains(c))
        .map(String::as_str)
        .collect();
    if !extra.is_empty() {
        let _ = writeln!(out, "classical {}", extra.join(", "));
    }
    let model = &config.cost_model;
    let _ = writeln!(out, "alpha = {}", model.alpha());
    let _ = writeln!(out, "default_cost = {}", model.default_cost());
    for (name, c) in model.atom_costs() {
        let _ = writeln!(out, "cost {name} = {c}");
    }
    for w in config.frame.worlds() {
        let _ = writeln!(
            out,
            "world {} {{ energy={}, kappa={}, lambda={} }}",
            w.id, w.energy, w.kappa, w.lambda
        );
    }
    for (from, to, delta) in config.frame.edges() {
        let _ = writeln!(out, "edge {from} -> {to} {{ deltaE={delta} }}");
    }
    for law in config.frame.laws() {
        let _ = writeln!(out, "law {} : {} |- {}", law.name, list(&law.premises), fm(&law.conclusion));
    }
    for w in config.frame.worlds() {
        for p in &w.props {
            let _ = writeln!(out, "prop {} : {}", w.id, fm(p));
        }
    }
    for o in &config.observers {
        let _ = writeln!(out, "observer {} home={} horizon={}", o.id, o.home, o.horizon);
    }
    for (name, s) in &config.sequents {
        let gamma = list(&s.sequent.gamma);
        let delta = list(&s.sequent.delta);
        let lhs = if gamma.is_empty() { String::new() } else { format!("{gamma} ") };
        let rhs = if delta.is_empty() { String::new() } else { format!(" {delta}") };
        let _ = writeln!(out, "sequent {name} {} -> {} : {lhs}|-{rhs}", s.source, s.target);
    }
    if let Some(kind) = config.scenario_kind {
        let _ = writeln!(out, "scenario {kind}");
    }
    if let Some(n) = config.trials {
        let _ = writeln!(out, "trials={n}");
    }
    if let Some(n) = config.seed {
        let _ = writeln!(out, "seed={n}");
    }
    if let Some(r) = config.noise {
        let _ = writeln!(out, "noise={r}");
    }
    if let Some(r) = config.kappa0 {
        let _ = writeln!(out, "kappa0={r}");
    }
    if let Some(n) = config.width {
        let _ = writeln!(out, "width={n}");
    }
    if let Some(n) = config.population {
        let _ = writeln!(out, "population={n}");
    }
    out
}
