//! Recursive-descent parser for the trajectory language.
//!
//! Grammar, loosest binding first; -> is right-associative and a
//! quantifier's body extends as far right as possible:
//!
//! ```text
//! formula     := quantified | implication
//! quantified  := ("forall" | "exists") IDENT ":" ("Time" | "State") "." formula
//! implication := disjunction [ "->" formula ]
//! disjunction := conjunction { "|" conjunction }
//! conjunction := negation { "&" negation }
//! negation    := "!" negation | primary
//! primary     := "(" formula ")" | atom
//! atom        := "X" "(" IDENT "," IDENT ")"
//!              | IDENT "(" IDENT ")"
//!              | IDENT "<" IDENT
//!              | IDENT "=" IDENT
//! ```
//!
//! Sorts are checked during the parse: bound variables carry their
//! binder's sort, free variables get a sort inferred from use (equalities
//! between two otherwise unconstrained variables unify their sorts), and
//! any conflict or leftover unknown is a sort error with its position.

use super::{Formula, LogicError, Sort};

#[derive(Clone, Copy, Debug, PartialEq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Forall,
    Exists,
    Dot,
    Colon,
    Comma,
    LParen,
    RParen,
    Not,
    And,
    Or,
    Arrow,
    Less,
    Equal,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(name) => format!("identifier '{name}'"),
            Token::Forall => "'forall'".into(),
            Token::Exists => "'exists'".into(),
            Token::Dot => "'.'".into(),
            Token::Colon => "':'".into(),
            Token::Comma => "','".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Not => "'!'".into(),
            Token::And => "'&'".into(),
            Token::Or => "'|'".into(),
            Token::Arrow => "'->'".into(),
            Token::Less => "'<'".into(),
            Token::Equal => "'='".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Token, Pos)>, LogicError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '.' | ':' | ',' | '(' | ')' | '!' | '&' | '|' | '<' | '=' => {
                chars.next();
                col += 1;
                let token = match c {
                    '.' => Token::Dot,
                    ':' => Token::Colon,
                    ',' => Token::Comma,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    '!' => Token::Not,
                    '&' => Token::And,
                    '|' => Token::Or,
                    '<' => Token::Less,
                    _ => Token::Equal,
                };
                tokens.push((token, pos));
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    tokens.push((Token::Arrow, pos));
                } else {
                    return Err(LogicError::Lex {
                        line: pos.line,
                        col: pos.col,
                        msg: "expected '>' after '-'".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let token = match name.as_str() {
                    "forall" => Token::Forall,
                    "exists" => Token::Exists,
                    _ => Token::Ident(name),
                };
                tokens.push((token, pos));
            }
            other => {
                return Err(LogicError::Lex {
                    line,
                    col,
                    msg: format!("unexpected character '{other}'"),
                });
            }
        }
    }
    tokens.push((
        Token::End,
        Pos {
            line,
            col,
        },
    ));
    Ok(tokens)
}

/// Sort knowledge about a free variable, refined as uses accumulate.
struct FreeVar {
    name: String,
    sort: Option<Sort>,
    first_use: Pos,
}

struct Parser {
    tokens: Vec<(Token, Pos)>,
    index: usize,
    binders: Vec<(String, Sort)>,
    free: Vec<FreeVar>,
    /// Equalities between two variables whose sorts were both unknown at
    /// parse time: (free index, free index) resolved by fixpoint at the
    /// end.
    pending_unifications: Vec<(usize, usize, Pos)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.index].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.index].1
    }

    fn advance(&mut self) -> (Token, Pos) {
        let pair = self.tokens[self.index].clone();
        if self.index < self.tokens.len() - 1 {
            self.index += 1;
        }
        pair
    }

    fn parse_error<T>(&self, msg: String) -> Result<T, LogicError> {
        let pos = self.pos();
        Err(LogicError::Parse {
            line: pos.line,
            col: pos.col,
            msg,
        })
    }

    fn sort_error<T>(&self, pos: Pos, msg: String) -> Result<T, LogicError> {
        Err(LogicError::Sort {
            line: pos.line,
            col: pos.col,
            msg,
        })
    }

    fn expect(&mut self, token: Token) -> Result<Pos, LogicError> {
        if *self.peek() == token {
            Ok(self.advance().1)
        } else {
            self.parse_error(format!(
                "expected {}, found {}",
                token.describe(),
                self.peek().describe()
            ))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), LogicError> {
        match self.peek().clone() {
            Token::Ident(name) => {
                let pos = self.advance().1;
                Ok((name, pos))
            }
            other => self.parse_error(format!("expected an identifier, found {}", other.describe())),
        }
    }

    /// Sort of a variable occurrence: binders win innermost-first; free
    /// variables carry inferred sorts. `required` pins or checks the sort.
    fn use_variable(
        &mut self,
        name: &str,
        pos: Pos,
        required: Option<Sort>,
    ) -> Result<Option<Sort>, LogicError> {
        if let Some((_, sort)) = self.binders.iter().rev().find(|(v, _)| v == name) {
            let sort = *sort;
            if let Some(required) = required {
                if required != sort {
                    return self.sort_error(
                        pos,
                        format!("variable '{name}' has sort {sort}, expected {required}"),
                    );
                }
            }
            return Ok(Some(sort));
        }
        let index = match self.free.iter().position(|f| f.name == name) {
            Some(i) => i,
            None => {
                self.free.push(FreeVar {
                    name: name.to_string(),
                    sort: None,
                    first_use: pos,
                });
                self.free.len() - 1
            }
        };
        match (self.free[index].sort, required) {
            (Some(sort), Some(required)) if sort != required => self.sort_error(
                pos,
                format!("variable '{name}' has sort {sort}, expected {required}"),
            ),
            (None, Some(required)) => {
                self.free[index].sort = Some(required);
                Ok(Some(required))
            }
            (sort, _) => Ok(sort),
        }
    }

    fn free_index(&self, name: &str) -> Option<usize> {
        self.free.iter().position(|f| f.name == name)
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        match self.peek() {
            Token::Forall | Token::Exists => self.quantified(),
            _ => self.implication(),
        }
    }

    fn quantified(&mut self) -> Result<Formula, LogicError> {
        let (token, _) = self.advance();
        let (var, _) = self.expect_ident()?;
        self.expect(Token::Colon)?;
        let (sort_name, sort_pos) = self.expect_ident()?;
        let sort = match sort_name.as_str() {
            "Time" => Sort::Time,
            "State" => Sort::State,
            other => {
                return self.sort_error(sort_pos, format!("unknown sort '{other}'"));
            }
        };
        self.expect(Token::Dot)?;
        self.binders.push((var.clone(), sort));
        let body = self.formula();
        self.binders.pop();
        let body = Box::new(body?);
        Ok(match token {
            Token::Forall => Formula::Forall { var, sort, body },
            _ => Formula::Exists { var, sort, body },
        })
    }

    fn implication(&mut self) -> Result<Formula, LogicError> {
        let left = self.disjunction()?;
        if *self.peek() == Token::Arrow {
            self.advance();
            let right = self.formula()?;
            Ok(Formula::implies(left, right))
        } else {
            Ok(left)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, LogicError> {
        let mut left = self.conjunction()?;
        while *self.peek() == Token::Or {
            self.advance();
            let right = self.conjunction()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Formula, LogicError> {
        let mut left = self.negation()?;
        while *self.peek() == Token::And {
            self.advance();
            let right = self.negation()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn negation(&mut self) -> Result<Formula, LogicError> {
        if *self.peek() == Token::Not {
            self.advance();
            Ok(Formula::not(self.negation()?))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<Formula, LogicError> {
        match self.peek() {
            Token::LParen => {
                self.advance();
                let inner = self.formula()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::Ident(_) => self.atom(),
            other => self.parse_error(format!(
                "expected a formula, found {}",
                other.describe()
            )),
        }
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        let (name, name_pos) = self.expect_ident()?;
        match self.peek().clone() {
            Token::LParen => {
                self.advance();
                if name == "X" {
                    let (time, time_pos) = self.expect_ident()?;
                    self.expect(Token::Comma)?;
                    let (state, state_pos) = self.expect_ident()?;
                    self.expect(Token::RParen)?;
                    self.use_variable(&time, time_pos, Some(Sort::Time))?;
                    self.use_variable(&state, state_pos, Some(Sort::State))?;
                    Ok(Formula::Trajectory { time, state })
                } else {
                    let (arg, arg_pos) = self.expect_ident()?;
                    if *self.peek() == Token::Comma {
                        return self.parse_error(format!(
                            "predicate '{name}' takes one state argument; only X is binary"
                        ));
                    }
                    self.expect(Token::RParen)?;
                    self.use_variable(&arg, arg_pos, Some(Sort::State))?;
                    Ok(Formula::Predicate { name, arg })
                }
            }
            Token::Less => {
                self.advance();
                let (right, right_pos) = self.expect_ident()?;
                self.use_variable(&name, name_pos, Some(Sort::Time))?;
                self.use_variable(&right, right_pos, Some(Sort::Time))?;
                Ok(Formula::Less { left: name, right })
            }
            Token::Equal => {
                self.advance();
                let (right, right_pos) = self.expect_ident()?;
                let left_sort = self.use_variable(&name, name_pos, None)?;
                let right_sort = self.use_variable(&right, right_pos, None)?;
                let sort = match (left_sort, right_sort) {
                    (Some(a), Some(b)) if a != b => {
                        return self.sort_error(
                            right_pos,
                            format!("cannot equate {a} '{name}' with {b} '{right}'"),
                        );
                    }
                    (Some(a), _) => {
                        self.use_variable(&right, right_pos, Some(a))?;
                        Some(a)
                    }
                    (None, Some(b)) => {
                        self.use_variable(&name, name_pos, Some(b))?;
                        Some(b)
                    }
                    (None, None) => None,
                };
                match sort {
                    Some(sort) => Ok(Formula::Equal {
                        sort,
                        left: name,
                        right,
                    }),
                    None => {
                        // Both free and unconstrained so far; record the
                        // unification and patch the node's sort at the end.
                        let li = self.free_index(&name).expect("just registered");
                        let ri = self.free_index(&right).expect("just registered");
                        self.pending_unifications.push((li, ri, name_pos));
                        Ok(Formula::Equal {
                            sort: Sort::Time,
                            left: name,
                            right,
                        })
                    }
                }
            }
            other => self.parse_error(format!(
                "expected '(', '<', or '=' after '{name}', found {}",
                other.describe()
            )),
        }
    }
}

/// Patches Equal nodes whose sort was unknown during the parse, once the
/// free-variable sorts have been resolved by fixpoint.
fn patch_equal_sorts(
    formula: &mut Formula,
    resolved: &dyn Fn(&str) -> Option<Sort>,
) {
    match formula {
        Formula::Equal { sort, left, .. } => {
            if let Some(s) = resolved(left) {
                *sort = s;
            }
        }
        Formula::Not(inner) => patch_equal_sorts(inner, resolved),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            patch_equal_sorts(a, resolved);
            patch_equal_sorts(b, resolved);
        }
        Formula::Forall { body, .. } | Formula::Exists { body, .. } => {
            patch_equal_sorts(body, resolved)
        }
        _ => {}
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        index: 0,
        binders: Vec::new(),
        free: Vec::new(),
        pending_unifications: Vec::new(),
    };
    let mut formula = parser.formula()?;
    if *parser.peek() != Token::End {
        return parser.parse_error(format!(
            "unexpected {} after the formula",
            parser.peek().describe()
        ));
    }

    // Propagate sorts across recorded unifications until stable.
    let mut changed = true;
    while changed {
        changed = false;
        for &(li, ri, pos) in &parser.pending_unifications {
            match (parser.free[li].sort, parser.free[ri].sort) {
                (Some(a), Some(b)) if a != b => {
                    return Err(LogicError::Sort {
                        line: pos.line,
                        col: pos.col,
                        msg: format!(
                            "cannot equate {a} '{}' with {b} '{}'",
                            parser.free[li].name, parser.free[ri].name
                        ),
                    });
                }
                (Some(a), None) => {
                    parser.free[ri].sort = Some(a);
                    changed = true;
                }
                (None, Some(b)) => {
                    parser.free[li].sort = Some(b);
                    changed = true;
                }
                _ => {}
            }
        }
    }
    if let Some(unknown) = parser.free.iter().find(|f| f.sort.is_none()) {
        return Err(LogicError::Sort {
            line: unknown.first_use.line,
            col: unknown.first_use.col,
            msg: format!(
                "cannot infer the sort of free variable '{}'",
                unknown.name
            ),
        });
    }
    let free = parser.free;
    patch_equal_sorts(&mut formula, &|name| {
        free.iter().find(|f| f.name == name).and_then(|f| f.sort)
    });
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, Formula, LogicError, Sort};

    #[test]
    fn parses_the_documented_example() {
        let f = parse_formula("forall t:Time . exists s:State . (X(t,s) & P(s))").unwrap();
        match &f {
            Formula::Forall { var, sort, body } => {
                assert_eq!(var, "t");
                assert_eq!(*sort, Sort::Time);
                assert!(matches!(**body, Formula::Exists { .. }));
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn quantifier_body_extends_right() {
        let f = parse_formula("forall t:Time . X(t,s) & P(s)").unwrap();
        match f {
            Formula::Forall { body, .. } => assert!(matches!(*body, Formula::And(_, _))),
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn connective_precedence_and_associativity() {
        let f = parse_formula("!P(s) & Q(s) | R(s) -> P(s) -> Q(s)").unwrap();
        // Parses as ((!P & Q) | R) -> (P -> Q).
        match f {
            Formula::Implies(left, right) => {
                match *left {
                    Formula::Or(or_left, _) => {
                        assert!(matches!(*or_left, Formula::And(_, _)));
                    }
                    other => panic!("unexpected left: {other:?}"),
                }
                assert!(matches!(*right, Formula::Implies(_, _)));
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn sort_error_on_swapped_trajectory_arguments() {
        let err = parse_formula("forall s:State . forall t:Time . X(s,t)").unwrap_err();
        match err {
            LogicError::Sort { line, col, msg } => {
                assert_eq!(line, 1);
                assert_eq!(col, 36);
                assert!(msg.contains("expected Time"), "{msg}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn order_atom_requires_time() {
        let err = parse_formula("forall s:State . s < s").unwrap_err();
        assert!(matches!(err, LogicError::Sort { .. }));
    }

    #[test]
    fn free_variable_sorts_are_inferred() {
        let f = parse_formula("X(t,s) & P(u)").unwrap();
        assert_eq!(
            f.free_variables(),
            vec![
                ("t".to_string(), Sort::Time),
                ("s".to_string(), Sort::State),
                ("u".to_string(), Sort::State),
            ]
        );
    }

    #[test]
    fn equality_unifies_free_variable_sorts() {
        let f = parse_formula("a = b & X(t,b)").unwrap();
        let free = f.free_variables();
        assert!(free.contains(&("a".to_string(), Sort::State)));
        match f {
            Formula::And(eq, _) => {
                assert!(matches!(*eq, Formula::Equal { sort: Sort::State, .. }));
            }
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn uninferable_sort_is_an_error() {
        let err = parse_formula("a = b").unwrap_err();
        match err {
            LogicError::Sort { msg, .. } => assert!(msg.contains("cannot infer"), "{msg}"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn mixed_sort_equality_is_an_error() {
        let err = parse_formula("forall t:Time . forall s:State . t = s").unwrap_err();
        assert!(matches!(err, LogicError::Sort { .. }));
    }

    #[test]
    fn lex_and_parse_errors_carry_positions() {
        match parse_formula("P(s) @").unwrap_err() {
            LogicError::Lex { line, col, msg } => {
                assert_eq!((line, col), (1, 6));
                assert!(msg.contains('@'));
            }
            other => panic!("unexpected error: {other}"),
        }
        match parse_formula("forall t:Time .").unwrap_err() {
            LogicError::Parse { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 16);
            }
            other => panic!("unexpected error: {other}"),
        }
        match parse_formula("X(t").unwrap_err() {
            LogicError::Parse { .. } => {}
            other => panic!("unexpected error: {other}"),
        }
        match parse_formula("forall t:Clock . P(s)").unwrap_err() {
            LogicError::Sort { msg, .. } => assert!(msg.contains("Clock")),
            other => panic!("unexpected error: {other}"),
        }
        match parse_formula("P(s) P(s)").unwrap_err() {
            LogicError::Parse { msg, .. } => assert!(msg.contains("after the formula"), "{msg}"),
            other => panic!("unexpected error: {other}"),
        }
        match parse_formula("R(a, b)").unwrap_err() {
            LogicError::Parse { msg, .. } => assert!(msg.contains("only X is binary"), "{msg}"),
            other => panic!("unexpected error: {other}"),
        }
        match parse_formula("- P(s)").unwrap_err() {
            LogicError::Lex { msg, .. } => assert!(msg.contains("'>'")),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn multiline_positions() {
        let err = parse_formula("forall t:Time .\n  X(t, )").unwrap_err();
        match err {
            LogicError::Parse { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 8);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn shadowing_uses_the_innermost_binder() {
        let f =
            parse_formula("forall t:Time . exists t:Time . forall s:State . X(t,s)").unwrap();
        // The inner t is the one used; the formula stays well-sorted.
        assert!(f.free_variables().is_empty());
    }
}
