//! S-expression reader with source positions. Symbols are lower-cased;
//! `;` starts a comment running to the end of the line.

use super::PddlError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Symbol { text: String, line: usize, col: usize },
    List { items: Vec<SExpr>, line: usize, col: usize },
}

impl SExpr {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            SExpr::Symbol { line, col, .. } | SExpr::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List { items, .. } => Some(items),
            SExpr::Symbol { .. } => None,
        }
    }

    /// Leading keyword of a list, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.list()?.first()?.symbol()
    }

    pub fn error(&self, msg: impl Into<String>) -> PddlError {
        let (line, col) = self.pos();
        PddlError::Syntax { line, col, msg: msg.into() }
    }

    pub fn expect_symbol(&self, what: &str) -> Result<&str, PddlError> {
        self.symbol().ok_or_else(|| self.error(format!("expected {what}")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[SExpr], PddlError> {
        self.list().ok_or_else(|| self.error(format!("expected {what}")))
    }
}

/// Parses exactly one top-level expression.
pub fn parse(text: &str) -> Result<SExpr, PddlError> {
    let mut stack: Vec<(Vec<SExpr>, usize, usize)> = Vec::new();
    let mut done: Option<SExpr> = None;
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let push = |stack: &mut Vec<(Vec<SExpr>, usize, usize)>, done: &mut Option<SExpr>, e: SExpr| -> Result<(), PddlError> {
        match stack.last_mut() {
            Some(top) => {
                top.0.push(e);
                Ok(())
            }
            None if done.is_none() => {
                *done = Some(e);
                Ok(())
            }
            None => {
                let (l, c) = e.pos();
                Err(PddlError::Syntax { line: l, col: c, msg: "trailing input after the top-level expression".into() })
            }
        }
    };
    while let Some(&ch) = chars.peek() {
        match ch {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                stack.push((Vec::new(), line, col));
                col += 1;
            }
            ')' => {
                chars.next();
                let Some((items, l, c)) = stack.pop() else {
                    return Err(PddlError::Syntax { line, col, msg: "unbalanced `)`".into() });
                };
                col += 1;
                push(&mut stack, &mut done, SExpr::List { items, line: l, col: c })?;
            }
            _ => {
                let (l, c) = (line, col);
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.extend(c.to_lowercase());
                    chars.next();
                    col += 1;
                }
                if stack.is_empty() {
                    return Err(PddlError::Syntax { line: l, col: c, msg: format!("unexpected symbol `{text}` outside a list") });
                }
                push(&mut stack, &mut done, SExpr::Symbol { text, line: l, col: c })?;
            }
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(PddlError::Syntax { line: *l, col: *c, msg: "unclosed `(`".into() });
    }
    done.ok_or(PddlError::Syntax { line, col, msg: "empty input".into() })
}
