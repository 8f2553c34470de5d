//! Line-oriented parser for the rule DSL.
//!
//! Grammar, one rule per line:
//!
//! ```text
//! rule    := literal "=>" literal ( "|" literal )* ( "@w=" FLOAT )?
//! literal := "!"? NAME
//! ```
//!
//! `#` starts a comment. Names are case-sensitive and must match the
//! canonical class names.

use super::{FolRule, Literal, Predicate};

/// Parse failure with 1-based line and column.
#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    line: usize,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Cursor<'a> {
        Cursor { src, line, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.src.len() - trimmed.len();
    }

    fn at_end(&self) -> bool {
        self.rest().is_empty()
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.pos + 1, message: message.into() }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn take_name(&mut self) -> Option<&'a str> {
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(_, c)| !c.is_ascii_alphanumeric() && *c != '_')
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if end == 0 {
            None
        } else {
            self.pos += end;
            Some(&rest[..end])
        }
    }

    fn take_literal(&mut self) -> Result<Literal, ParseError> {
        let negated = self.eat("!");
        if negated {
            self.skip_ws();
        }
        let start = self.pos;
        let name = self
            .take_name()
            .ok_or_else(|| self.error("expected a predicate name"))?;
        let predicate = Predicate::resolve(name).ok_or(ParseError {
            line: self.line,
            column: start + 1,
            message: format!("unknown predicate \"{name}\""),
        })?;
        Ok(Literal { predicate, negated })
    }
}

/// Parses rule source. Ids are assigned in file order starting at 1;
/// the weight defaults to 1.0 unless a `@w=` annotation is present.
pub fn parse_rules(source: &str) -> Result<Vec<FolRule>, ParseError> {
    let mut rules = Vec::new();
    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }

        let mut cur = Cursor::new(line, line_no);
        cur.skip_ws();
        let antecedent = cur.take_literal()?;
        cur.skip_ws();
        if !cur.eat("=>") {
            return Err(cur.error("expected \"=>\""));
        }
        cur.skip_ws();
        if cur.at_end() || cur.rest().starts_with("@w=") {
            return Err(cur.error("empty consequent list"));
        }

        let mut consequents = vec![cur.take_literal()?];
        loop {
            cur.skip_ws();
            if cur.eat("|") {
                cur.skip_ws();
                consequents.push(cur.take_literal()?);
            } else {
                break;
            }
        }

        cur.skip_ws();
        let mut weight = 1.0;
        if cur.eat("@w=") {
            let start = cur.pos;
            let token = cur
                .rest()
                .split([' ', '\t'])
                .next()
                .unwrap_or("");
            weight = token.parse::<f64>().map_err(|_| ParseError {
                line: line_no,
                column: start + 1,
                message: format!("invalid weight \"{token}\""),
            })?;
            if weight < 0.0 {
                return Err(ParseError {
                    line: line_no,
                    column: start + 1,
                    message: format!("negative weight {weight}"),
                });
            }
            cur.pos += token.len();
        }
        cur.skip_ws();
        if !cur.at_end() {
            return Err(cur.error(format!("unexpected trailing input \"{}\"", cur.rest())));
        }

        rules.push(FolRule::new(rules.len() + 1, antecedent, consequents, weight));
    }
    Ok(rules)
}
