//! Recursive-descent recognizer for the SELECT dialect found in
//! Spider-family corpora.
//!
//! Covered: select lists with aggregates, DISTINCT and `*`; FROM with
//! aliases, comma joins and `JOIN .. ON`; WHERE with AND/OR/NOT,
//! comparisons, (NOT) IN / LIKE / BETWEEN, IS (NOT) NULL and EXISTS;
//! nested subqueries; GROUP BY, HAVING, ORDER BY ASC/DESC, LIMIT; and
//! UNION / INTERSECT / EXCEPT. Keywords are case-insensitive and string
//! literals may use single or double quotes.

use super::{char_offset, report, SyntaxError, ValidityErrorKind, ValidityReport};
use crate::knowledge::FormalLanguage;

const KEYWORDS: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "asc", "desc", "limit",
    "offset", "union", "intersect", "except", "join", "on", "as", "and", "or", "not", "in",
    "like", "between", "is", "null", "distinct", "all", "inner", "left", "right", "outer",
    "cross", "natural", "exists",
];

const AGGREGATES: &[&str] = &["count", "sum", "avg", "min", "max"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number,
    Str,
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    /// character offset
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    const PUNCT: &[&str] = &[
        "<=", ">=", "!=", "<>", "==", "(", ")", ",", ".", "*", "+", "-", "/", "%", "=", "<",
        ">", ";",
    ];
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        let pos = char_offset(text, i);
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token {
                tok: Tok::Word(text[start..i].to_ascii_lowercase()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            tokens.push(Token { tok: Tok::Number, pos });
            continue;
        }
        if c == b'\'' || c == b'"' {
            let quote = c;
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(SyntaxError::new(
                        ValidityErrorKind::LexError,
                        pos,
                        "unterminated string literal",
                    ));
                }
                if bytes[i] == quote {
                    if i + 1 < bytes.len() && bytes[i + 1] == quote {
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                i += 1;
            }
            tokens.push(Token { tok: Tok::Str, pos });
            continue;
        }
        if c == b'`' {
            let start = i + 1;
            match text[start..].find('`') {
                Some(len) if len > 0 => {
                    tokens.push(Token {
                        tok: Tok::Word(format!("`{}`", &text[start..start + len])),
                        pos,
                    });
                    i = start + len + 1;
                    continue;
                }
                _ => {
                    return Err(SyntaxError::new(
                        ValidityErrorKind::LexError,
                        pos,
                        "unterminated quoted identifier",
                    ))
                }
            }
        }
        for p in PUNCT {
            if text[i..].starts_with(p) {
                tokens.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
                i += p.len();
                continue 'outer;
            }
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(SyntaxError::new(
            ValidityErrorKind::LexError,
            pos,
            format!("unexpected character {ch:?}"),
        ));
    }
    Ok(tokens)
}

fn check_parens(tokens: &[Token]) -> Result<(), SyntaxError> {
    let mut open = Vec::new();
    for t in tokens {
        match t.tok {
            Tok::Punct("(") => open.push(t.pos),
            Tok::Punct(")")
                if open.pop().is_none() => {
                    return Err(SyntaxError::new(
                        ValidityErrorKind::UnbalancedDelimiter,
                        t.pos,
                        "unmatched `)`",
                    ));
                }
            _ => {}
        }
    }
    match open.pop() {
        Some(pos) => Err(SyntaxError::new(
            ValidityErrorKind::UnbalancedDelimiter,
            pos,
            "unclosed `(`",
        )),
        None => Ok(()),
    }
}

type PResult<T = ()> = Result<T, SyntaxError>;

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + n).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.pos)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Word(w)) => format!("`{w}`"),
            Some(Tok::Number) => "number".to_string(),
            Some(Tok::Str) => "string literal".to_string(),
            Some(Tok::Punct(p)) => format!("`{p}`"),
        };
        Err(SyntaxError::grammar(
            self.here(),
            format!("expected {expected}, found {found}"),
        ))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == kw)
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Some(Tok::Word(w)) if w == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(&format!("`{p}`"))
        }
    }

    fn ident(&mut self) -> PResult {
        match self.peek() {
            Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str()) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.error("identifier"),
        }
    }

    fn starts_subquery(&self) -> bool {
        self.is_punct("(") && self.is_kw_at(1, "select")
    }

    fn statement(&mut self) -> PResult {
        self.query()?;
        self.eat_punct(";");
        if self.peek().is_some() {
            return self.error("end of query");
        }
        Ok(())
    }

    fn query(&mut self) -> PResult {
        self.select_operand()?;
        loop {
            if self.eat_kw("union") {
                self.eat_kw("all");
            } else if !(self.eat_kw("intersect") || self.eat_kw("except")) {
                return Ok(());
            }
            self.select_operand()?;
        }
    }

    fn select_operand(&mut self) -> PResult {
        if self.starts_subquery() || (self.is_punct("(") && self.peek_at(1) == Some(&Tok::Punct("("))) {
            self.expect_punct("(")?;
            self.query()?;
            return self.expect_punct(")");
        }
        self.select_core()
    }

    fn select_core(&mut self) -> PResult {
        self.expect_kw("select")?;
        if !self.eat_kw("distinct") {
            self.eat_kw("all");
        }
        self.select_item()?;
        while self.eat_punct(",") {
            self.select_item()?;
        }
        self.expect_kw("from")?;
        self.parse_from_clause()?;
        if self.eat_kw("where") {
            self.condition()?;
        }
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            self.expr()?;
            while self.eat_punct(",") {
                self.expr()?;
            }
        }
        if self.eat_kw("having") {
            self.condition()?;
        }
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            self.order_item()?;
            while self.eat_punct(",") {
                self.order_item()?;
            }
        }
        if self.eat_kw("limit") {
            self.number()?;
            if self.eat_kw("offset") {
                self.number()?;
            }
        }
        Ok(())
    }

    fn number(&mut self) -> PResult {
        if self.peek() == Some(&Tok::Number) {
            self.pos += 1;
            Ok(())
        } else {
            self.error("number")
        }
    }

    fn alias(&mut self) -> PResult {
        if self.eat_kw("as") {
            return match self.peek() {
                Some(Tok::Str) => {
                    self.pos += 1;
                    Ok(())
                }
                _ => self.ident(),
            };
        }
        if matches!(self.peek(), Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str())) {
            self.pos += 1;
        }
        Ok(())
    }

    fn select_item(&mut self) -> PResult {
        if self.eat_punct("*") {
            return Ok(());
        }
        self.expr()?;
        self.alias()
    }

    fn order_item(&mut self) -> PResult {
        self.expr()?;
        if !self.eat_kw("asc") {
            self.eat_kw("desc");
        }
        Ok(())
    }

    fn parse_from_clause(&mut self) -> PResult {
        self.table_ref()?;
        loop {
            if self.eat_punct(",") {
                self.table_ref()?;
                continue;
            }
            let save = self.pos;
            self.eat_kw("natural");
            if self.eat_kw("left") || self.eat_kw("right") {
                self.eat_kw("outer");
            } else if !self.eat_kw("inner") {
                self.eat_kw("cross");
            }
            if !self.eat_kw("join") {
                if self.pos != save {
                    return self.error("`join`");
                }
                return Ok(());
            }
            self.table_ref()?;
            if self.eat_kw("on") {
                self.condition()?;
            }
        }
    }

    fn table_ref(&mut self) -> PResult {
        if self.is_punct("(") {
            self.expect_punct("(")?;
            self.query()?;
            self.expect_punct(")")?;
        } else {
            self.ident()?;
            if self.eat_punct(".") {
                self.ident()?;
            }
        }
        self.alias()
    }

    fn condition(&mut self) -> PResult {
        self.and_condition()?;
        while self.eat_kw("or") {
            self.and_condition()?;
        }
        Ok(())
    }

    fn and_condition(&mut self) -> PResult {
        self.not_condition()?;
        while self.eat_kw("and") {
            self.not_condition()?;
        }
        Ok(())
    }

    fn not_condition(&mut self) -> PResult {
        if self.eat_kw("not") {
            return self.not_condition();
        }
        if self.eat_kw("exists") {
            self.expect_punct("(")?;
            self.query()?;
            return self.expect_punct(")");
        }
        self.predicate()
    }

    fn continues_expression(&self) -> bool {
        match self.peek() {
            Some(Tok::Punct(p)) => {
                matches!(*p, "=" | "==" | "!=" | "<>" | "<" | ">" | "<=" | ">=" | "+" | "-" | "*" | "/" | "%")
            }
            Some(Tok::Word(w)) => matches!(w.as_str(), "in" | "like" | "between" | "is" | "not"),
            _ => false,
        }
    }

    fn predicate(&mut self) -> PResult {
        if self.is_punct("(") && !self.starts_subquery() {
            let save = self.pos;
            self.pos += 1;
            if self.condition().is_ok() && self.eat_punct(")") && !self.continues_expression() {
                return Ok(());
            }
            self.pos = save;
        }
        self.expr()?;
        let negated = self.eat_kw("not");
        if self.eat_kw("in") {
            self.expect_punct("(")?;
            if self.is_kw("select") {
                self.query()?;
            } else {
                self.expr()?;
                while self.eat_punct(",") {
                    self.expr()?;
                }
            }
            return self.expect_punct(")");
        }
        if self.eat_kw("like") {
            return self.expr();
        }
        if self.eat_kw("between") {
            self.expr()?;
            self.expect_kw("and")?;
            return self.expr();
        }
        if negated {
            return self.error("`in`, `like` or `between`");
        }
        if self.eat_kw("is") {
            self.eat_kw("not");
            return self.expect_kw("null");
        }
        if let Some(Tok::Punct(p)) = self.peek() {
            if matches!(*p, "=" | "==" | "!=" | "<>" | "<" | ">" | "<=" | ">=") {
                self.pos += 1;
                return self.expr();
            }
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult {
        self.term()?;
        while self.eat_punct("+") || self.eat_punct("-") {
            self.term()?;
        }
        Ok(())
    }

    fn term(&mut self) -> PResult {
        self.unary()?;
        while self.eat_punct("*") || self.eat_punct("/") || self.eat_punct("%") {
            self.unary()?;
        }
        Ok(())
    }

    fn unary(&mut self) -> PResult {
        if self.eat_punct("-") || self.eat_punct("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult {
        match self.peek().cloned() {
            Some(Tok::Number) | Some(Tok::Str) => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Word(w)) if w == "null" => {
                self.pos += 1;
                Ok(())
            }
            Some(Tok::Word(w))
                if AGGREGATES.contains(&w.as_str())
                    && self.peek_at(1) == Some(&Tok::Punct("(")) =>
            {
                self.pos += 2;
                if !self.eat_kw("distinct") {
                    self.eat_kw("all");
                }
                if !self.eat_punct("*") {
                    self.expr()?;
                }
                self.expect_punct(")")
            }
            Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str()) => {
                if self.peek_at(1) == Some(&Tok::Punct("(")) {
                    return self.error("column reference (only aggregate functions are supported)");
                }
                self.pos += 1;
                if self.eat_punct(".") && !self.eat_punct("*") {
                    self.ident()?;
                }
                Ok(())
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                if self.is_kw("select") {
                    self.query()?;
                } else {
                    self.expr()?;
                }
                self.expect_punct(")")
            }
            _ => self.error("expression"),
        }
    }
}

pub fn check_sql_validity(text: &str) -> ValidityReport {
    let lang = FormalLanguage::Sql;
    if text.trim().is_empty() {
        return ValidityReport::fail(lang, ValidityErrorKind::EmptyInput, 0, "empty input");
    }
    let result = lex(text).and_then(|tokens| {
        check_parens(&tokens)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: text.chars().count(),
        };
        parser.statement()
    });
    report(lang, result)
}
