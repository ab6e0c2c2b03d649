use crate::block::RowRef;
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::model::{Aggregation, ModelKind};

const MAX_NESTING: usize = 1024;

/// A parsed tree body.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    If {
        feature: usize,
        threshold: f64,
        missing_right: bool,
        then: Box<Stmt>,
        otherwise: Box<Stmt>,
    },
    Emit(f64),
}

impl Stmt {
    #[inline]
    pub fn eval(&self, row: RowRef<'_>) -> f64 {
        let mut stmt = self;
        loop {
            match stmt {
                Stmt::Emit(v) => return *v,
                Stmt::If { feature, threshold, missing_right, then, otherwise } => {
                    let right = if row.is_missing(*feature) {
                        *missing_right
                    } else {
                        #[allow(clippy::neg_cmp_op_on_partial_ord)]
                        let gt = !(row.value(*feature) <= *threshold);
                        gt
                    };
                    stmt = if right { otherwise } else { then };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedUnit {
    pub unit_index: usize,
    pub tree_indices: Vec<usize>,
    pub trees: Vec<Stmt>,
}

impl ParsedUnit {
    pub fn exits<'a>(&'a self, row: RowRef<'a>) -> impl Iterator<Item = f64> + 'a {
        self.trees.iter().map(move |t| t.eval(row))
    }

    /// Adds this unit's exit values to a running sum, in tree order.
    #[inline]
    pub fn accumulate(&self, acc: f64, row: RowRef<'_>) -> f64 {
        self.trees.iter().fold(acc, |acc, t| acc + t.eval(row))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProgram {
    pub kind: ModelKind,
    pub base_score: f64,
    pub num_features: usize,
    pub units: Vec<ParsedUnit>,
}

impl ParsedProgram {
    pub fn num_trees(&self) -> usize {
        self.units.iter().map(|u| u.trees.len()).sum()
    }

    pub fn aggregation(&self) -> Aggregation {
        Aggregation { kind: self.kind, base_score: self.base_score, num_trees: self.num_trees() }
    }

    /// Sum of all exit values; one accumulator threads through the units.
    #[inline]
    pub fn sum_exits(&self, row: RowRef<'_>) -> f64 {
        self.units.iter().fold(0.0, |acc, u| u.accumulate(acc, row))
    }
}

fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || c == '{' || c == '}' {
            if let Some(s) = start.take() {
                tokens.push(&text[s..i]);
            }
            if !c.is_whitespace() {
                tokens.push(&text[i..i + 1]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
    num_features: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::ParseError { position: self.pos, message: message.into() }
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self) -> Result<&'a str> {
        let token = self.peek().ok_or_else(|| self.error("unexpected end of program"))?;
        self.pos += 1;
        Ok(token)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            self.pos -= 1;
            return Err(self.error(format!("expected {want:?}, found {got:?}")));
        }
        Ok(())
    }

    fn integer(&mut self) -> Result<usize> {
        let token = self.next()?;
        token.parse().map_err(|_| {
            self.pos -= 1;
            self.error(format!("expected integer, found {token:?}"))
        })
    }

    fn float(&mut self) -> Result<f64> {
        let token = self.next()?;
        hexfloat::parse(token).map_err(|e| {
            self.pos -= 1;
            self.error(e.to_string())
        })
    }

    fn feature(&mut self) -> Result<usize> {
        let token = self.next()?;
        let index = token
            .strip_prefix('f')
            .and_then(|digits| digits.parse::<usize>().ok())
            .filter(|&f| f < self.num_features);
        index.ok_or_else(|| {
            self.pos -= 1;
            self.error(format!("{token:?} is not a feature below {}", self.num_features))
        })
    }

    fn node(&mut self, nesting: usize) -> Result<Stmt> {
        if nesting > MAX_NESTING {
            return Err(self.error("nesting too deep"));
        }
        match self.next()? {
            "emit" => Ok(Stmt::Emit(self.float()?)),
            "if" => {
                let feature = self.feature()?;
                self.expect("<=")?;
                let threshold = self.float()?;
                self.expect("missing")?;
                let missing_right = match self.next()? {
                    "left" => false,
                    "right" => true,
                    other => {
                        self.pos -= 1;
                        return Err(self.error(format!("expected left or right, found {other:?}")));
                    }
                };
                self.expect("{")?;
                let then = self.node(nesting + 1)?;
                self.expect("}")?;
                self.expect("else")?;
                self.expect("{")?;
                let otherwise = self.node(nesting + 1)?;
                self.expect("}")?;
                Ok(Stmt::If { feature, threshold, missing_right, then: Box::new(then), otherwise: Box::new(otherwise) })
            }
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected if or emit, found {other:?}")))
            }
        }
    }
}

/// Parses a whole `.dfp` document. Units must be numbered from 0 and trees
/// must appear as 0, 1, 2, ... so that one pass sums them in tree order.
pub fn parse_program(text: &str) -> Result<ParsedProgram> {
    let mut p = Parser { tokens: tokenize(text), pos: 0, num_features: 0 };
    p.expect("model")?;
    let kind_token = p.next()?;
    let kind = ModelKind::parse(kind_token).ok_or_else(|| {
        p.pos -= 1;
        p.error(format!("unknown model kind {kind_token:?}"))
    })?;
    let base_score = p.float()?;
    p.num_features = p.integer()?;
    if p.num_features == 0 {
        return Err(p.error("program needs at least one feature"));
    }
    let mut units = Vec::new();
    let mut next_tree = 0;
    while p.peek().is_some() {
        p.expect("unit")?;
        let unit_index = p.integer()?;
        if unit_index != units.len() {
            return Err(p.error(format!("unit {unit_index} out of order")));
        }
        p.expect("{")?;
        let mut unit = ParsedUnit { unit_index, tree_indices: Vec::new(), trees: Vec::new() };
        while p.peek() == Some("tree") {
            p.pos += 1;
            let tree_index = p.integer()?;
            if tree_index != next_tree {
                return Err(p.error(format!("tree {tree_index} out of order, expected {next_tree}")));
            }
            next_tree += 1;
            p.expect("{")?;
            unit.trees.push(p.node(0)?);
            p.expect("}")?;
            unit.tree_indices.push(tree_index);
        }
        if unit.trees.is_empty() {
            return Err(p.error("unit without trees"));
        }
        p.expect("}")?;
        units.push(unit);
    }
    if units.is_empty() {
        return Err(p.error("program without units"));
    }
    Ok(ParsedProgram { kind, base_score, num_features: p.num_features, units })
}
