//! Runtime values of MiniImp.

use alloc::sync::Arc;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::minilang::{Literal, Type};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Char(char),
    Str(Arc<str>),
    Bool(bool),
    /// Arrays have value semantics; `Arc::make_mut` copies on write.
    Array(Arc<Vec<Value>>),
}

impl Value {
    pub fn str(s: &str) -> Self {
        Value::Str(Arc::from(s))
    }

    pub fn array(items: Vec<Value>) -> Self {
        Value::Array(Arc::new(items))
    }

    pub fn from_literal(lit: &Literal) -> Self {
        match lit {
            Literal::Int(v) => Value::Int(*v),
            Literal::Float(v) => Value::Float(*v),
            Literal::Char(c) => Value::Char(*c),
            Literal::Str(s) => Value::str(s),
            Literal::Bool(b) => Value::Bool(*b),
        }
    }

    /// Whether this value inhabits `ty`. Empty arrays fit any array type.
    pub fn has_type(&self, ty: &Type) -> bool {
        match (self, ty) {
            (Value::Int(_), Type::Int)
            | (Value::Float(_), Type::Float)
            | (Value::Char(_), Type::Char)
            | (Value::Str(_), Type::Str)
            | (Value::Bool(_), Type::Bool) => true,
            (Value::Array(items), Type::Array(elem)) => items.iter().all(|v| v.has_type(elem)),
            _ => false,
        }
    }

    pub fn type_name(&self) -> String {
        use alloc::format;
        match self {
            Value::Int(_) => "int".into(),
            Value::Float(_) => "float".into(),
            Value::Char(_) => "char".into(),
            Value::Str(_) => "string".into(),
            Value::Bool(_) => "bool".into(),
            Value::Array(items) => match items.first() {
                Some(v) => format!("{}[]", v.type_name()),
                None => "[]".into(),
            },
        }
    }

    /// Canonical 32-bit polynomial hash (`h = 31*h + x`, wrapping).
    ///
    /// Strings fold their code points, arrays fold element hashes. Integral
    /// scalars hash to their (truncated) value, floats to their bit pattern
    /// folded to 32 bits.
    pub fn hash32(&self) -> i32 {
        match self {
            Value::Int(v) => *v as i32,
            Value::Char(c) => *c as i32,
            Value::Bool(b) => *b as i32,
            Value::Float(f) => {
                let bits = f.to_bits();
                (bits ^ (bits >> 32)) as i32
            }
            Value::Str(s) => s
                .chars()
                .fold(0i32, |h, c| h.wrapping_mul(31).wrapping_add(c as i32)),
            Value::Array(items) => items
                .iter()
                .fold(0i32, |h, v| h.wrapping_mul(31).wrapping_add(v.hash32())),
        }
    }
}

/// Text written by `print`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => {
                if v.is_finite() && libm::trunc(*v) == *v && libm::fabs(*v) < 1e16 {
                    write!(f, "{v:.1}")
                } else {
                    write!(f, "{v}")
                }
            }
            Value::Char(c) => write!(f, "{c}"),
            Value::Str(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}
