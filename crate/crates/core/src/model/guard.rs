use std::collections::HashMap;
use std::fmt;

use super::{is_ident, Prop, PropSet};

/// Boolean guard over namespaced propositions. Macros are expanded while
/// parsing, so a constructed guard only ever holds literals and connectives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Guard {
    True,
    False,
    Prop(Prop),
    Not(Box<Guard>),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

impl Guard {
    pub fn eval(&self, labels: &PropSet) -> bool {
        self.eval_with(&|p| labels.contains(p))
    }

    pub fn eval_with(&self, holds: &dyn Fn(&Prop) -> bool) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Prop(p) => holds(p),
            Guard::Not(g) => !g.eval_with(holds),
            Guard::And(gs) => gs.iter().all(|g| g.eval_with(holds)),
            Guard::Or(gs) => gs.iter().any(|g| g.eval_with(holds)),
        }
    }

    /// Propositions the guard mentions.
    pub fn support(&self) -> PropSet {
        let mut out = PropSet::new();
        self.collect_support(&mut out);
        out
    }

    fn collect_support(&self, out: &mut PropSet) {
        match self {
            Guard::True | Guard::False => {}
            Guard::Prop(p) => {
                out.insert(p.clone());
            }
            Guard::Not(g) => g.collect_support(out),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().for_each(|g| g.collect_support(out)),
        }
    }

    /// Parses `expr := term ('|' term)*; term := factor ('&' factor)*;
    /// factor := '!' factor | '(' expr ')' | 'true' | 'false' | prop | macro`.
    pub fn parse(text: &str, macros: &HashMap<String, Guard>) -> Result<Guard, String> {
        let toks = lex(text)?;
        let mut parser = Parser {
            toks: &toks,
            pos: 0,
            macros,
        };
        let g = parser.expr()?;
        if parser.pos != toks.len() {
            return Err(format!("unexpected `{}`", toks[parser.pos]));
        }
        Ok(g)
    }
}

/// Standard boolean semantics; a literal holds iff it is in `labels`.
pub fn eval_guard(g: &Guard, labels: &PropSet) -> bool {
    g.eval(labels)
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => write!(f, "true"),
            Guard::False => write!(f, "false"),
            Guard::Prop(p) => write!(f, "{p}"),
            Guard::Not(g) => match **g {
                Guard::And(_) | Guard::Or(_) => write!(f, "!({g})"),
                _ => write!(f, "!{g}"),
            },
            Guard::And(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    match g {
                        Guard::Or(_) => write!(f, "({g})")?,
                        _ => write!(f, "{g}")?,
                    }
                }
                Ok(())
            }
            Guard::Or(gs) => {
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{g}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Or,
    And,
    Not,
    LParen,
    RParen,
    Word(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Or => write!(f, "|"),
            Tok::And => write!(f, "&"),
            Tok::Not => write!(f, "!"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Word(w) => write!(f, "{w}"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                out.push(Tok::Or);
            }
            '&' => {
                chars.next();
                out.push(Tok::And);
            }
            '!' => {
                chars.next();
                out.push(Tok::Not);
            }
            '(' => {
                chars.next();
                out.push(Tok::LParen);
            }
            ')' => {
                chars.next();
                out.push(Tok::RParen);
            }
            c if c.is_alphanumeric() || c == '_' || c == '@' => {
                let mut end = i;
                while let Some(&(j, c)) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '@' {
                        end = j + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Tok::Word(text[i..end].to_string()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    macros: &'a HashMap<String, Guard>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn expr(&mut self) -> Result<Guard, String> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Guard::Or(terms)
        })
    }

    fn term(&mut self) -> Result<Guard, String> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Guard::And(factors)
        })
    }

    fn factor(&mut self) -> Result<Guard, String> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| "unexpected end of guard".to_string())?;
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Guard::Not(Box::new(self.factor()?))),
            Tok::LParen => {
                let g = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(g)
            }
            Tok::Word(w) => match w.as_str() {
                "true" => Ok(Guard::True),
                "false" => Ok(Guard::False),
                _ if w.contains('@') => w.parse::<Prop>().map(Guard::Prop),
                _ if is_ident(&w) => self
                    .macros
                    .get(&w)
                    .cloned()
                    .ok_or_else(|| format!("unknown macro `{w}`")),
                _ => Err(format!("invalid token `{w}`")),
            },
            other => Err(format!("unexpected `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(props: &[&str]) -> PropSet {
        props.iter().map(|p| p.parse().unwrap()).collect()
    }

    fn parse(s: &str) -> Guard {
        Guard::parse(s, &HashMap::new()).unwrap()
    }

    #[test]
    fn conjunction_with_negation() {
        let g = parse("a@1 & !b@1");
        assert!(eval_guard(&g, &set(&["a@1"])));
        assert!(!eval_guard(&g, &set(&["a@1", "b@1"])));
    }

    #[test]
    fn precedence_and_binds_tighter() {
        let g = parse("a@0 | b@0 & c@0");
        assert!(g.eval(&set(&["a@0"])));
        assert!(!g.eval(&set(&["b@0"])));
        let g = parse("(a@0 | b@0) & c@0");
        assert!(!g.eval(&set(&["a@0"])));
        assert!(g.eval(&set(&["b@0", "c@0"])));
    }

    #[test]
    fn macros_expand_at_parse_time() {
        let mut macros = HashMap::new();
        macros.insert("col".to_string(), parse("c2@0 & c2@1 | c2@0 & c2@5"));
        let g = Guard::parse("!col & !c4@0", &macros).unwrap();
        assert!(g.eval(&set(&["c0@0"])));
        assert!(!g.eval(&set(&["c2@0", "c2@5"])));
        assert_eq!(g.support(), set(&["c2@0", "c2@1", "c2@5", "c4@0"]));
    }

    #[test]
    fn errors() {
        let m = HashMap::new();
        assert!(Guard::parse("undefined", &m).is_err());
        assert!(Guard::parse("a@1 &", &m).is_err());
        assert!(Guard::parse("(a@1", &m).is_err());
        assert!(Guard::parse("a@1 b@1", &m).is_err());
        assert!(Guard::parse("a@1 $ b@1", &m).is_err());
        assert!(Guard::parse("", &m).is_err());
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for s in ["!(a@0 | b@1) & c@2", "true | !false", "(a@0 | b@0) & !c@0", "!!a@3"] {
            let g = parse(s);
            assert_eq!(parse(&g.to_string()), g, "{s}");
        }
    }
}
