//! Per-cell band arithmetic: `+ - * /`, parentheses, numeric literals,
//! band names as identifiers.

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{RasterGrid, RasterStack};

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Number(f64),
    Band(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Expression { offset: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn parse(mut self) -> Result<Expr> {
        let expr = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(expr)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    left = Expr::Add(Box::new(left), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    left = Expr::Sub(Box::new(left), Box::new(self.term()?));
                }
                _ => return Ok(left),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut left = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    left = Expr::Mul(Box::new(left), Box::new(self.factor()?));
                }
                Some('/') => {
                    self.pos += 1;
                    left = Expr::Div(Box::new(left), Box::new(self.factor()?));
                }
                _ => return Ok(left),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_digit()
                || bytes[self.pos] == b'.'
                || bytes[self.pos] == b'e'
                || bytes[self.pos] == b'E'
                || ((bytes[self.pos] == b'+' || bytes[self.pos] == b'-')
                    && self.pos > start
                    && (bytes[self.pos - 1] == b'e' || bytes[self.pos - 1] == b'E')))
        {
            self.pos += 1;
        }
        let raw = &self.src[start..self.pos];
        raw.parse::<f64>()
            .map(Expr::Number)
            .map_err(|_| Error::Expression {
                offset: start,
                message: format!("invalid number '{raw}'"),
            })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len()
            && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Ok(Expr::Band(self.src[start..self.pos].to_string()))
    }
}

impl Expr {
    /// Referenced band names, in first-appearance order.
    fn bands(&self, out: &mut Vec<String>) {
        match self {
            Expr::Number(_) => {}
            Expr::Band(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(a) => a.bands(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.bands(out);
                b.bands(out);
            }
        }
    }

    /// None means NODATA (an input was NODATA or a division by zero occurred).
    fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        match self {
            Expr::Number(v) => Some(*v),
            Expr::Band(name) => lookup(name),
            Expr::Neg(a) => a.eval(lookup).map(|v| -v),
            Expr::Add(a, b) => Some(a.eval(lookup)? + b.eval(lookup)?),
            Expr::Sub(a, b) => Some(a.eval(lookup)? - b.eval(lookup)?),
            Expr::Mul(a, b) => Some(a.eval(lookup)? * b.eval(lookup)?),
            Expr::Div(a, b) => {
                let denom = b.eval(lookup)?;
                if denom == 0.0 {
                    None
                } else {
                    Some(a.eval(lookup)? / denom)
                }
            }
        }
    }
}

/// Evaluate an arithmetic expression over the stack's bands, cell by cell.
pub fn band_math(stack: &RasterStack, expression: &str) -> Result<RasterGrid> {
    let expr = Parser::new(expression).parse()?;
    let mut used = Vec::new();
    expr.bands(&mut used);
    for name in &used {
        if stack.band(name).is_none() {
            return Err(Error::UnknownBand(name.clone()));
        }
    }
    let template = stack
        .template()
        .ok_or_else(|| Error::Argument("band_math requires a non-empty stack".into()))?;
    let inputs: Vec<(&str, &RasterGrid)> = used
        .iter()
        .map(|n| (n.as_str(), stack.band(n).expect("checked above")))
        .collect();

    let mut out = template.blank_like();
    for i in 0..out.values.len() {
        let lookup = |name: &str| -> Option<f64> {
            let (_, grid) = inputs.iter().find(|(n, _)| *n == name)?;
            let v = grid.values[i];
            if grid.is_nodata(v) {
                None
            } else {
                Some(v)
            }
        };
        if let Some(v) = expr.eval(&lookup) {
            if v.is_finite() {
                out.values[i] = v;
            }
        }
    }
    Ok(out)
}

/// Read a preset file of `name = expression` lines; `#` starts a comment.
/// Every expression is syntax-checked on load.
pub fn read_expression_presets(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut presets = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, expression) = line.split_once('=').ok_or_else(|| {
            Error::RasterFormat(format!("preset line {}: expected 'name = expression'", lineno + 1))
        })?;
        let name = name.trim().to_string();
        let expression = expression.trim().to_string();
        if name.is_empty() {
            return Err(Error::RasterFormat(format!("preset line {}: empty name", lineno + 1)));
        }
        Parser::new(&expression).parse()?;
        presets.push((name, expression));
    }
    Ok(presets)
}
