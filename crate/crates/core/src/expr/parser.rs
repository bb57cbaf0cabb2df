use super::{BinOp, Expr, ExprError, Func, Token, TokenKind, VecRef};

/// Precedence-climbing parser over a token stream.
///
/// ```text
/// expr    = term { ("+" | "-") term } ;
/// term    = unary { ("*" | "/") unary } ;
/// unary   = "-" unary | power ;
/// power   = primary [ "^" unary ] ;
/// primary = number | variable | call | "(" expr ")" ;
/// ```
pub fn parse(tokens: &[Token]) -> Result<Expr, ExprError> {
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(t.position, "unexpected trailing input", &["+", "-", "*", "/", "^"]));
    }
    Ok(e)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn end_position(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.position + t.text.len())
            .unwrap_or(0)
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.position).unwrap_or_else(|| self.end_position())
    }

    fn error_at(&self, position: usize, message: &str, expected: &[&str]) -> ExprError {
        ExprError::Parse {
            message: message.to_string(),
            position,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn eat(&mut self, kind: TokenKind, text: &str) -> bool {
        match self.peek() {
            Some(t) if t.is(kind, text) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> Result<(), ExprError> {
        if self.eat(kind, text) {
            Ok(())
        } else {
            let msg = match self.peek() {
                Some(t) => format!("unexpected {:?}", t.text),
                None => "unexpected end of input".to_string(),
            };
            Err(self.error_at(self.here(), &msg, &[text]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(TokenKind::Operator, "+") {
                BinOp::Add
            } else if self.eat(TokenKind::Operator, "-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(TokenKind::Operator, "*") {
                BinOp::Mul
            } else if self.eat(TokenKind::Operator, "/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(TokenKind::Operator, "-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(TokenKind::Operator, "^") {
            return Ok(base);
        }
        let at = self.here();
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(self.error_at(at, "exponent must be constant", &["constant expression"]));
        }
        Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        const START: &[&str] = &["number", "identifier", "(", "-"];
        let Some(tok) = self.peek() else {
            return Err(self.error_at(self.here(), "unexpected end of input", START));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                let v: f64 = tok
                    .text
                    .parse()
                    .map_err(|_| self.error_at(tok.position, "malformed number", &["number"]))?;
                Ok(Expr::Num(v))
            }
            TokenKind::Paren if tok.text == "(" => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(TokenKind::Paren, ")")?;
                Ok(e)
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if let Some(func) = Func::from_name(&tok.text) {
                    return self.call(func, tok.position);
                }
                if matches!(self.peek(), Some(t) if t.is(TokenKind::Paren, "(")) {
                    return Err(self.error_at(
                        tok.position,
                        &format!("unknown function {:?}", tok.text),
                        &["sqrt", "exp", "log", "sin", "cos", "abs2", "dot"],
                    ));
                }
                self.variable(tok)
            }
            _ => Err(self.error_at(tok.position, &format!("unexpected {:?}", tok.text), START)),
        }
    }

    fn variable(&self, tok: &Token) -> Result<Expr, ExprError> {
        let text = tok.text.as_str();
        let split = text.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (name, digits) = text.split_at(split);
        if digits.is_empty() {
            if name == "x" || name == "y" {
                return Err(self.error_at(
                    tok.position,
                    &format!("vector {name} used as a scalar"),
                    &[&format!("{name}1"), "dot(...)", "abs2(...)"],
                ));
            }
            return Ok(Expr::Param {
                name: name.to_string(),
                index: None,
            });
        }
        let index: usize = digits
            .parse()
            .map_err(|_| self.error_at(tok.position, "component index too large", &["index"]))?;
        if index == 0 {
            return Err(self.error_at(tok.position, "component indices start at 1", &["index >= 1"]));
        }
        Ok(match name {
            "x" => Expr::X(index),
            "y" => Expr::Y(index),
            _ => Expr::Param {
                name: name.to_string(),
                index: Some(index),
            },
        })
    }

    fn call(&mut self, func: Func, position: usize) -> Result<Expr, ExprError> {
        self.expect(TokenKind::Paren, "(")?;
        let mut scalar_args = Vec::new();
        let mut vec_args = Vec::new();
        if !self.eat(TokenKind::Paren, ")") {
            loop {
                if func.takes_vectors() {
                    vec_args.push(self.vector_name()?);
                } else {
                    scalar_args.push(self.expr()?);
                }
                if self.eat(TokenKind::Comma, ",") {
                    continue;
                }
                self.expect(TokenKind::Paren, ")")?;
                break;
            }
        }
        let found = scalar_args.len() + vec_args.len();
        if found != func.arity() {
            return Err(ExprError::Arity {
                func: func.name().to_string(),
                expected: func.arity(),
                found,
                position,
            });
        }
        Ok(if func.takes_vectors() {
            Expr::VecCall(func, vec_args)
        } else {
            Expr::Call(func, scalar_args)
        })
    }

    fn vector_name(&mut self) -> Result<VecRef, ExprError> {
        const EXPECTED: &[&str] = &["x", "y", "vector parameter"];
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let text = t.text.as_str();
                if text.ends_with(|c: char| c.is_ascii_digit()) || Func::from_name(text).is_some() {
                    return Err(self.error_at(t.position, &format!("{text:?} is not a vector name"), EXPECTED));
                }
                self.pos += 1;
                Ok(match text {
                    "x" => VecRef::X,
                    "y" => VecRef::Y,
                    _ => VecRef::Param(text.to_string()),
                })
            }
            Some(t) => Err(self.error_at(t.position, &format!("unexpected {:?}", t.text), EXPECTED)),
            None => Err(self.error_at(self.here(), "unexpected end of input", EXPECTED)),
        }
    }
}
