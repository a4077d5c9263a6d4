//! The closed predicate library and boolean expressions over it.
//!
//! Abstract states bind to conjunctions/disjunctions of predicate calls;
//! keeping the library closed is what makes oracle-emitted bindings
//! checkable before anything is simulated.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredicateError {
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("predicate '{name}' takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("malformed predicate expression at '{0}'")]
    Syntax(String),
}

/// Every predicate an abstract state may call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateId {
    BehindVehicle,
    RightInFront,
    AreCloseBy,
    IsCurrentlyMoving,
    IsCurrentlyStopped,
    IsBraking,
    IsEgoDrivingSteady,
    InLane,
    AtIntersection,
    PropertyIs,
    GnssErrorExceeds,
}

impl PredicateId {
    pub const ALL: [PredicateId; 11] = [
        PredicateId::BehindVehicle,
        PredicateId::RightInFront,
        PredicateId::AreCloseBy,
        PredicateId::IsCurrentlyMoving,
        PredicateId::IsCurrentlyStopped,
        PredicateId::IsBraking,
        PredicateId::IsEgoDrivingSteady,
        PredicateId::InLane,
        PredicateId::AtIntersection,
        PredicateId::PropertyIs,
        PredicateId::GnssErrorExceeds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PredicateId::BehindVehicle => "behind_vehicle",
            PredicateId::RightInFront => "right_in_front",
            PredicateId::AreCloseBy => "are_close_by",
            PredicateId::IsCurrentlyMoving => "is_currently_moving",
            PredicateId::IsCurrentlyStopped => "is_currently_stopped",
            PredicateId::IsBraking => "is_braking",
            PredicateId::IsEgoDrivingSteady => "is_ego_driving_steady",
            PredicateId::InLane => "in_lane",
            PredicateId::AtIntersection => "at_intersection",
            PredicateId::PropertyIs => "property_is",
            PredicateId::GnssErrorExceeds => "gnss_error_exceeds",
        }
    }

    pub fn from_name(name: &str) -> Option<PredicateId> {
        PredicateId::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            PredicateId::BehindVehicle
            | PredicateId::RightInFront
            | PredicateId::AreCloseBy
            | PredicateId::InLane
            | PredicateId::GnssErrorExceeds => 2,
            PredicateId::IsCurrentlyMoving
            | PredicateId::IsCurrentlyStopped
            | PredicateId::IsBraking
            | PredicateId::IsEgoDrivingSteady
            | PredicateId::AtIntersection => 1,
            PredicateId::PropertyIs => 3,
        }
    }

    /// Which argument positions name an agent (checked against the roster).
    pub fn agent_arg_positions(self) -> &'static [usize] {
        match self {
            PredicateId::BehindVehicle | PredicateId::RightInFront | PredicateId::AreCloseBy => {
                &[0, 1]
            }
            _ => &[0],
        }
    }

    /// True when the two predicates can never hold simultaneously for the
    /// same agent (or agent pair). Drives the over-constraint lint.
    pub fn mutually_exclusive_with(self, other: PredicateId) -> bool {
        use PredicateId::*;
        let pair = if self <= other {
            (self, other)
        } else {
            (other, self)
        };
        matches!(
            pair,
            (BehindVehicle, RightInFront)
                | (IsCurrentlyMoving, IsCurrentlyStopped)
                | (IsCurrentlyStopped, IsBraking)
                | (IsCurrentlyStopped, IsEgoDrivingSteady)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateCall {
    pub pred: PredicateId,
    pub args: Vec<String>,
}

impl fmt::Display for PredicateCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred.name(), self.args.join(", "))
    }
}

/// Boolean expression over predicate calls. `and` binds tighter than `or`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredExpr {
    Call(PredicateCall),
    And(Vec<PredExpr>),
    Or(Vec<PredExpr>),
}

impl PredExpr {
    /// Every call in the expression, left to right.
    pub fn calls(&self) -> Vec<&PredicateCall> {
        match self {
            PredExpr::Call(c) => vec![c],
            PredExpr::And(xs) | PredExpr::Or(xs) => xs.iter().flat_map(|x| x.calls()).collect(),
        }
    }

    pub fn eval(&self, call_eval: &mut dyn FnMut(&PredicateCall) -> bool) -> bool {
        match self {
            PredExpr::Call(c) => call_eval(c),
            PredExpr::And(xs) => xs.iter().all(|x| x.eval(call_eval)),
            PredExpr::Or(xs) => xs.iter().any(|x| x.eval(call_eval)),
        }
    }
}

impl fmt::Display for PredExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredExpr::Call(c) => write!(f, "{c}"),
            PredExpr::And(xs) => {
                let parts: Vec<String> = xs
                    .iter()
                    .map(|x| match x {
                        PredExpr::Or(_) => format!("({x})"),
                        _ => x.to_string(),
                    })
                    .collect();
                write!(f, "{}", parts.join(" and "))
            }
            PredExpr::Or(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(" or "))
            }
        }
    }
}

/// Parses `pred(a, b) and (other(c) or third(d))`.
pub fn parse_expr(text: &str) -> Result<PredExpr, PredicateError> {
    let mut parser = Parser {
        input: text,
        pos: 0,
    };
    let expr = parser.or_expr()?;
    parser.skip_ws();
    if parser.pos != parser.input.len() {
        return Err(PredicateError::Syntax(parser.rest().to_string()));
    }
    Ok(expr)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if let Some(after) = self.rest().strip_prefix(kw) {
            if after.is_empty() || after.starts_with(char::is_whitespace) || after.starts_with('(')
            {
                self.pos += kw.len();
                return true;
            }
        }
        false
    }

    fn or_expr(&mut self) -> Result<PredExpr, PredicateError> {
        let mut terms = vec![self.and_expr()?];
        while self.eat_keyword("or") {
            terms.push(self.and_expr()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            PredExpr::Or(terms)
        })
    }

    fn and_expr(&mut self) -> Result<PredExpr, PredicateError> {
        let mut terms = vec![self.atom()?];
        while self.eat_keyword("and") {
            terms.push(self.atom()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            PredExpr::And(terms)
        })
    }

    fn atom(&mut self) -> Result<PredExpr, PredicateError> {
        self.skip_ws();
        if self.eat("(") {
            let expr = self.or_expr()?;
            if !self.eat(")") {
                return Err(PredicateError::Syntax(self.rest().to_string()));
            }
            return Ok(expr);
        }
        self.call().map(PredExpr::Call)
    }

    fn call(&mut self) -> Result<PredicateCall, PredicateError> {
        self.skip_ws();
        let rest = self.rest();
        let name_len = rest
            .char_indices()
            .take_while(|(_, c)| c.is_alphanumeric() || *c == '_')
            .map(|(i, c)| i + c.len_utf8())
            .last()
            .unwrap_or(0);
        if name_len == 0 {
            return Err(PredicateError::Syntax(rest.to_string()));
        }
        let name = &rest[..name_len];
        self.pos += name_len;
        let pred = PredicateId::from_name(name)
            .ok_or_else(|| PredicateError::UnknownPredicate(name.to_string()))?;
        if !self.eat("(") {
            return Err(PredicateError::Syntax(self.rest().to_string()));
        }
        let mut args = Vec::new();
        self.skip_ws();
        if !self.eat(")") {
            loop {
                args.push(self.arg()?);
                if self.eat(",") {
                    continue;
                }
                if self.eat(")") {
                    break;
                }
                return Err(PredicateError::Syntax(self.rest().to_string()));
            }
        }
        if args.len() != pred.arity() {
            return Err(PredicateError::Arity {
                name: name.to_string(),
                expected: pred.arity(),
                got: args.len(),
            });
        }
        Ok(PredicateCall { pred, args })
    }

    fn arg(&mut self) -> Result<String, PredicateError> {
        self.skip_ws();
        let rest = self.rest();
        if let Some(stripped) = rest.strip_prefix(['"', '\'']) {
            let quote = rest.chars().next().unwrap();
            let end = stripped
                .find(quote)
                .ok_or_else(|| PredicateError::Syntax(rest.to_string()))?;
            self.pos += 1 + end + 1;
            return Ok(stripped[..end].to_string());
        }
        // Bare argument: everything up to the next ',' or ')' at this level.
        let end = rest
            .find([',', ')'])
            .ok_or_else(|| PredicateError::Syntax(rest.to_string()))?;
        let value = rest[..end].trim();
        if value.is_empty() {
            return Err(PredicateError::Syntax(rest.to_string()));
        }
        self.pos += end;
        Ok(value.to_string())
    }
}
