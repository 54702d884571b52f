//! Observable specs and small arithmetic expressions.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr  := ['+'|'-'] term (('+'|'-') term)*
//! term  := power (('*'|'/') power)*        divisors must be constant
//! power := atom ['^' integer]
//! atom  := number | 'pi' | 'q' | 'p' | '(' expr ')'
//! ```
//!
//! Besides polynomials, an observable may be `identity` or `sigma_x|y|z`.

use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;
use weakline_core::model::PolynomialSymbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Identity,
    Pauli(Axis),
    Symbol(PolynomialSymbol),
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "identity" | "I" => Ok(Observable::Identity),
            "sigma_x" => Ok(Observable::Pauli(Axis::X)),
            "sigma_y" => Ok(Observable::Pauli(Axis::Y)),
            "sigma_z" => Ok(Observable::Pauli(Axis::Z)),
            other => {
                let sym = parse_expression(other)?;
                if !sym.has_real_coefficients() {
                    return Err("observable must have real coefficients".into());
                }
                Ok(Observable::Symbol(sym))
            }
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Identity => write!(f, "identity"),
            Observable::Pauli(Axis::X) => write!(f, "sigma_x"),
            Observable::Pauli(Axis::Y) => write!(f, "sigma_y"),
            Observable::Pauli(Axis::Z) => write!(f, "sigma_z"),
            Observable::Symbol(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = vec![];
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: e, optional sign, digits
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token::Num(text.parse().map_err(|_| format!("bad number {text:?}"))?));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Token::Op(ch));
            i += 1;
        } else {
            return Err(format!("unexpected character {ch:?}"));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<PolynomialSymbol, String> {
        let negate = if self.eat_op('-') {
            true
        } else {
            self.eat_op('+');
            false
        };
        let mut acc = self.term()?;
        if negate {
            acc = acc.scale(Complex64::new(-1.0, 0.0));
        }
        loop {
            if self.eat_op('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat_op('-') {
                acc = acc.add(&self.term()?.scale(Complex64::new(-1.0, 0.0)));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PolynomialSymbol, String> {
        let mut acc = self.power()?;
        loop {
            if self.eat_op('*') {
                acc = acc.mul(&self.power()?);
            } else if self.eat_op('/') {
                let d = constant_of(&self.power()?).ok_or("can only divide by a constant")?;
                if d == 0.0 {
                    return Err("division by zero".into());
                }
                acc = acc.scale(Complex64::new(1.0 / d, 0.0));
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<PolynomialSymbol, String> {
        let base = self.atom()?;
        if !self.eat_op('^') {
            return Ok(base);
        }
        let k = match self.tokens.get(self.pos) {
            Some(Token::Num(k)) if k.fract() == 0.0 && *k >= 0.0 && *k <= 64.0 => *k as u32,
            _ => return Err("exponent must be a small non-negative integer".into()),
        };
        self.pos += 1;
        Ok((0..k).fold(PolynomialSymbol::constant(1.0), |acc, _| acc.mul(&base)))
    }

    fn atom(&mut self) -> Result<PolynomialSymbol, String> {
        let tok = self.tokens.get(self.pos).cloned().ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(PolynomialSymbol::constant(v)),
            Token::Ident(name) => match name.as_str() {
                "q" => Ok(PolynomialSymbol::q()),
                "p" => Ok(PolynomialSymbol::p()),
                "pi" => Ok(PolynomialSymbol::constant(std::f64::consts::PI)),
                _ => Err(format!("unknown name {name:?}")),
            },
            Token::Op('(') => {
                let inner = self.expr()?;
                if !self.eat_op(')') {
                    return Err("missing ')'".into());
                }
                Ok(inner)
            }
            Token::Op(op) => Err(format!("unexpected {op:?}")),
        }
    }
}

fn constant_of(s: &PolynomialSymbol) -> Option<f64> {
    (s.degree() == 0 && s.coefficient(0, 0).im == 0.0).then(|| s.coefficient(0, 0).re)
}

pub fn parse_expression(s: &str) -> Result<PolynomialSymbol, String> {
    let tokens = tokenize(s)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut parser = Parser { tokens, pos: 0 };
    let out = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(format!("trailing input in {s:?}"));
    }
    Ok(out)
}

/// A constant expression such as `pi/4 - 0.005`.
pub fn parse_constant(s: &str) -> Result<f64, String> {
    let sym = parse_expression(s)?;
    let v = constant_of(&sym).ok_or_else(|| format!("{s:?} is not a constant"))?;
    if !v.is_finite() {
        return Err(format!("{s:?} is not finite"));
    }
    Ok(v)
}

/// Comma-separated constants.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s.split(',').map(parse_constant).collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn named_observables() {
        assert_eq!("sigma_y".parse::<Observable>().unwrap(), Observable::Pauli(Axis::Y));
        assert_eq!("identity".parse::<Observable>().unwrap(), Observable::Identity);
        assert_eq!("q".parse::<Observable>().unwrap(), Observable::Symbol(PolynomialSymbol::q()));
    }

    #[test]
    fn polynomial_grammar() {
        let s = parse_expression("q^2/2 + (p - 1)^2 - 3*q*p").unwrap();
        let expected = PolynomialSymbol::from_real_terms([
            (2, 0, 0.5),
            (0, 2, 1.0),
            (0, 1, -2.0),
            (0, 0, 1.0),
            (1, 1, -3.0),
        ]);
        assert_eq!(s, expected);
        assert_eq!(parse_expression("-q").unwrap(), PolynomialSymbol::from_real_terms([(1, 0, -1.0)]));
    }

    #[test]
    fn constants() {
        assert!((parse_constant("pi/4 - 0.005").unwrap() - (PI / 4.0 - 0.005)).abs() < 1e-15);
        assert_eq!(parse_constant("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_constant("2.5E+1").unwrap(), 25.0);
        assert_eq!(parse_list("1, 0.5,0.25").unwrap(), vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "q +", "x", "q/p", "q^-1", "(q", "1/0", "q)", "2 q"] {
            assert!(parse_expression(bad).is_err() || parse_constant(bad).is_err(), "{bad}");
        }
        assert!(parse_constant("q").is_err());
        assert!("q^2 + sigma_x".parse::<Observable>().is_err());
    }
}
