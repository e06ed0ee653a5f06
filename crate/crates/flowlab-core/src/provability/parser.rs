//! Parser for modal formulas.
//!
//! ```text
//! formula     := implication
//! implication := disjunction [ "->" formula ]
//! disjunction := conjunction { "|" conjunction }
//! conjunction := unary { "&" unary }
//! unary       := "!" unary | "box" unary | primary
//! primary     := "(" formula ")" | "false" | "true" | IDENT
//! ```
//!
//! Implication is right associative and binds loosest; `!` and `box` bind
//! tightest. `true`, `!`, `&`, and `|` lower to the derived forms over
//! bottom and implication, so parsing the printed form of a formula
//! reproduces the identical tree.

use std::fmt;

use super::{ModalFormula, ProvabilityError};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Token<'a> {
    Ident(&'a str),
    Box,
    False,
    True,
    Arrow,
    And,
    Or,
    Not,
    LParen,
    RParen,
    End,
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(name) => write!(f, "identifier {name}"),
            Token::Box => write!(f, "box"),
            Token::False => write!(f, "false"),
            Token::True => write!(f, "true"),
            Token::Arrow => write!(f, "->"),
            Token::And => write!(f, "&"),
            Token::Or => write!(f, "|"),
            Token::Not => write!(f, "!"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
            Token::End => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

fn lex(input: &str) -> Result<Vec<(Token<'_>, Pos)>, ProvabilityError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let bytes = input.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let pos = Pos { line, col };
        let c = bytes[i] as char;
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '(' => tokens.push((Token::LParen, pos)),
            ')' => tokens.push((Token::RParen, pos)),
            '&' => tokens.push((Token::And, pos)),
            '|' => tokens.push((Token::Or, pos)),
            '!' => tokens.push((Token::Not, pos)),
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((Token::Arrow, pos));
                    i += 1;
                    col += 1;
                } else {
                    return Err(ProvabilityError::Parse {
                        line,
                        col,
                        msg: "'-' must begin '->'".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &input[start..i];
                let token = match word {
                    "box" => Token::Box,
                    "false" => Token::False,
                    "true" => Token::True,
                    _ => Token::Ident(word),
                };
                tokens.push((token, pos));
                col += i - start;
                continue;
            }
            other => {
                return Err(ProvabilityError::Parse {
                    line,
                    col,
                    msg: format!("unexpected character '{other}'"),
                });
            }
        }
        i += 1;
        col += 1;
    }
    tokens.push((Token::End, Pos { line, col }));
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(Token<'a>, Pos)>,
    index: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Token<'a> {
        self.tokens[self.index].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.index].1
    }

    fn advance(&mut self) -> Token<'a> {
        let token = self.peek();
        if self.index + 1 < self.tokens.len() {
            self.index += 1;
        }
        token
    }

    fn error(&self, msg: impl Into<String>) -> ProvabilityError {
        let pos = self.pos();
        ProvabilityError::Parse {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }

    fn formula(&mut self) -> Result<ModalFormula, ProvabilityError> {
        let left = self.disjunction()?;
        if self.peek() == Token::Arrow {
            self.advance();
            let right = self.formula()?;
            Ok(ModalFormula::implies(left, right))
        } else {
            Ok(left)
        }
    }

    fn disjunction(&mut self) -> Result<ModalFormula, ProvabilityError> {
        let mut left = self.conjunction()?;
        while self.peek() == Token::Or {
            self.advance();
            let right = self.conjunction()?;
            left = ModalFormula::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<ModalFormula, ProvabilityError> {
        let mut left = self.unary()?;
        while self.peek() == Token::And {
            self.advance();
            let right = self.unary()?;
            left = ModalFormula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<ModalFormula, ProvabilityError> {
        match self.peek() {
            Token::Not => {
                self.advance();
                Ok(ModalFormula::not(self.unary()?))
            }
            Token::Box => {
                self.advance();
                Ok(ModalFormula::boxed(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<ModalFormula, ProvabilityError> {
        match self.peek() {
            Token::LParen => {
                self.advance();
                let inner = self.formula()?;
                if self.peek() != Token::RParen {
                    return Err(self.error(format!("expected ')', found {}", self.peek())));
                }
                self.advance();
                Ok(inner)
            }
            Token::False => {
                self.advance();
                Ok(ModalFormula::Bot)
            }
            Token::True => {
                self.advance();
                Ok(ModalFormula::top())
            }
            Token::Ident(name) => {
                self.advance();
                Ok(ModalFormula::var(name))
            }
            other => Err(self.error(format!("expected a formula, found {other}"))),
        }
    }
}

/// Parses the CLI formula syntax into a modal formula.
pub fn parse_modal_formula(input: &str) -> Result<ModalFormula, ProvabilityError> {
    let tokens = lex(input)?;
    let mut parser = Parser { tokens, index: 0 };
    let formula = parser.formula()?;
    if parser.peek() != Token::End {
        return Err(parser.error(format!("trailing input: {}", parser.peek())));
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provability::random_modal_formula;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p() -> ModalFormula {
        ModalFormula::var("p")
    }

    fn q() -> ModalFormula {
        ModalFormula::var("q")
    }

    #[test]
    fn parses_the_distribution_axiom() {
        let parsed = parse_modal_formula("box (p -> q) -> (box p -> box q)").unwrap();
        let expected = ModalFormula::implies(
            ModalFormula::boxed(ModalFormula::implies(p(), q())),
            ModalFormula::implies(ModalFormula::boxed(p()), ModalFormula::boxed(q())),
        );
        assert_eq!(parsed, expected);
    }

    #[test]
    fn sugar_lowers_to_the_primitive_basis() {
        assert_eq!(parse_modal_formula("true").unwrap(), ModalFormula::top());
        assert_eq!(
            parse_modal_formula("!p").unwrap(),
            ModalFormula::not(p())
        );
        assert_eq!(
            parse_modal_formula("p & q").unwrap(),
            ModalFormula::and(p(), q())
        );
        assert_eq!(
            parse_modal_formula("p | q").unwrap(),
            ModalFormula::or(p(), q())
        );
    }

    #[test]
    fn precedence_and_associativity() {
        // ! and box bind tightest, then &, then |, then right-assoc ->.
        assert_eq!(
            parse_modal_formula("!p & q | r -> s -> t").unwrap(),
            ModalFormula::implies(
                ModalFormula::or(
                    ModalFormula::and(ModalFormula::not(p()), q()),
                    ModalFormula::var("r"),
                ),
                ModalFormula::implies(ModalFormula::var("s"), ModalFormula::var("t")),
            )
        );
        assert_eq!(
            parse_modal_formula("box p & q").unwrap(),
            ModalFormula::and(ModalFormula::boxed(p()), q())
        );
        assert_eq!(
            parse_modal_formula("p & q & r").unwrap(),
            ModalFormula::and(ModalFormula::and(p(), q()), ModalFormula::var("r"))
        );
        assert_eq!(
            parse_modal_formula("box box p").unwrap(),
            ModalFormula::boxed(ModalFormula::boxed(p()))
        );
    }

    #[test]
    fn keywords_do_not_swallow_identifiers() {
        assert_eq!(
            parse_modal_formula("boxer").unwrap(),
            ModalFormula::var("boxer")
        );
        assert_eq!(
            parse_modal_formula("falsehood & truth").unwrap(),
            ModalFormula::and(
                ModalFormula::var("falsehood"),
                ModalFormula::var("truth")
            )
        );
    }

    #[test]
    fn printing_then_parsing_is_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(271828);
        for _ in 0..200 {
            let formula = random_modal_formula(&mut rng, 4, &["p", "q", "r"]);
            let text = formula.to_string();
            let reparsed = parse_modal_formula(&text).unwrap();
            assert_eq!(reparsed, formula, "printed as {text}");
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_modal_formula("p @ q").unwrap_err() {
            ProvabilityError::Parse { line, col, msg } => {
                assert_eq!((line, col), (1, 3));
                assert!(msg.contains('@'));
            }
            other => panic!("unexpected error: {other}"),
        }
        match parse_modal_formula("(p -> q").unwrap_err() {
            ProvabilityError::Parse { line, col, msg } => {
                assert_eq!((line, col), (1, 8));
                assert!(msg.contains("')'"));
            }
            other => panic!("unexpected error: {other}"),
        }
        match parse_modal_formula("p - q").unwrap_err() {
            ProvabilityError::Parse { col, .. } => assert_eq!(col, 3),
            other => panic!("unexpected error: {other}"),
        }
        match parse_modal_formula("box\n  & p").unwrap_err() {
            ProvabilityError::Parse { line, col, .. } => {
                assert_eq!((line, col), (2, 3));
            }
            other => panic!("unexpected error: {other}"),
        }
        match parse_modal_formula("p q").unwrap_err() {
            ProvabilityError::Parse { msg, .. } => assert!(msg.contains("trailing")),
            other => panic!("unexpected error: {other}"),
        }
    }
}
