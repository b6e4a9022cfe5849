//! Arithmetic expression evaluator backing the `calculator` built-in.
//!
//! Accepts ASCII expressions over `+ - * / ^`, parentheses, and decimal
//! literals. Results are rendered with up to 10 significant digits, rounding
//! half away from zero.

/// Evaluates an expression and formats the result, or describes why it
/// cannot be evaluated.
pub fn evaluate_expression(expression: &str) -> Result<String, String> {
    let mut parser = Parser {
        chars: expression.chars().collect(),
        pos: 0,
    };
    let value = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.chars.len() {
        return Err(format!(
            "unexpected character {:?} at position {}",
            parser.chars[parser.pos], parser.pos
        ));
    }
    if !value.is_finite() {
        return Err("result is not a finite number".to_string());
    }
    Ok(format_decimal(value))
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut value = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    value += self.term()?;
                }
                Some('-') => {
                    self.pos += 1;
                    value -= self.term()?;
                }
                _ => return Ok(value),
            }
        }
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut value = self.power()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    value *= self.power()?;
                }
                Some('/') => {
                    self.pos += 1;
                    let divisor = self.power()?;
                    if divisor == 0.0 {
                        return Err("division by zero".to_string());
                    }
                    value /= divisor;
                }
                _ => return Ok(value),
            }
        }
    }

    // Right-associative exponentiation binds tighter than * and /.
    fn power(&mut self) -> Result<f64, String> {
        let base = self.unary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exponent = self.power()?;
            return Ok(base.powf(exponent));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64, String> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let value = self.expr()?;
                if self.peek() != Some(')') {
                    return Err("unbalanced parentheses".to_string());
                }
                self.pos += 1;
                Ok(value)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) => Err(format!("unexpected character {c:?} at position {}", self.pos)),
            None => Err("unexpected end of expression".to_string()),
        }
    }

    fn number(&mut self) -> Result<f64, String> {
        self.skip_ws();
        let start = self.pos;
        let mut seen_dot = false;
        while let Some(&c) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                self.pos += 1;
            } else if c == '.' && !seen_dot {
                seen_dot = true;
                self.pos += 1;
            } else {
                break;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map_err(|_| format!("invalid number {text:?}"))
    }
}

/// Renders a value with up to 10 significant digits, rounding half away
/// from zero and trimming trailing zeros.
pub fn format_decimal(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let negative = value < 0.0;
    let magnitude = value.abs();
    let exponent = magnitude.log10().floor() as i32;
    // Scale so the rounded value has exactly 10 integer digits.
    let scale = 9 - exponent;
    let mut rounded = (magnitude * 10f64.powi(scale) + 0.5).floor();
    let mut point_shift = -scale;
    if rounded >= 1e10 {
        rounded /= 10.0;
        point_shift += 1;
    }
    let digits = format!("{rounded:.0}");
    let rendered = place_decimal_point(&digits, point_shift);
    if negative {
        format!("-{rendered}")
    } else {
        rendered
    }
}

/// Renders `digits * 10^shift` as a plain decimal string.
fn place_decimal_point(digits: &str, shift: i32) -> String {
    if shift >= 0 {
        return format!("{digits}{}", "0".repeat(shift as usize));
    }
    let point = digits.len() as i32 + shift;
    let raw = if point > 0 {
        let (int_part, frac_part) = digits.split_at(point as usize);
        format!("{int_part}.{frac_part}")
    } else {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    };
    let trimmed = raw.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}
