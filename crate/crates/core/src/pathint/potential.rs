use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Closed-form family a potential belongs to, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticTag {
    Zero,
    Constant(f64),
    /// `V(x) = ½ m ω² x²`, with `m` the mass of the query.
    Harmonic(f64),
    Custom,
}

type Eval = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A real potential `V(x, t)`.
#[derive(Clone)]
pub struct Potential {
    tag: AnalyticTag,
    custom: Option<Arc<Eval>>,
}

impl Potential {
    pub fn zero() -> Self {
        Self { tag: AnalyticTag::Zero, custom: None }
    }

    pub fn constant(c: f64) -> Self {
        Self { tag: AnalyticTag::Constant(c), custom: None }
    }

    pub fn harmonic(omega: f64) -> Self {
        Self { tag: AnalyticTag::Harmonic(omega), custom: None }
    }

    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { tag: AnalyticTag::Custom, custom: Some(Arc::new(f)) }
    }

    pub fn tag(&self) -> AnalyticTag {
        self.tag
    }

    /// `V(x, t)` for a particle of mass `mass`.
    pub fn evaluate(&self, x: f64, t: f64, mass: f64) -> f64 {
        match self.tag {
            AnalyticTag::Zero => 0.0,
            AnalyticTag::Constant(c) => c,
            AnalyticTag::Harmonic(w) => 0.5 * mass * w * w * x * x,
            AnalyticTag::Custom => self.custom.as_ref().map_or(0.0, |f| f(x, t)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.tag {
            AnalyticTag::Constant(c) | AnalyticTag::Harmonic(c) if !c.is_finite() => {
                Err(invalid(format!("potential parameter {c} must be finite")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({self})")
    }
}

/// `zero`, `const:<c>`, `harmonic:<omega>`; custom potentials print as `custom`.
impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            AnalyticTag::Zero => f.write_str("zero"),
            AnalyticTag::Constant(c) => write!(f, "const:{c}"),
            AnalyticTag::Harmonic(w) => write!(f, "harmonic:{w}"),
            AnalyticTag::Custom => f.write_str("custom"),
        }
    }
}

impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(format!("bad potential parameter in {s:?}")))
        };
        match s.split_once(':') {
            None if s == "zero" => Ok(Self::zero()),
            Some(("const", v)) => Ok(Self::constant(num(v)?)),
            Some(("harmonic", v)) => Ok(Self::harmonic(num(v)?)),
            _ => Err(invalid(format!(
                "unknown potential {s:?}; expected zero, const:<c> or harmonic:<omega>"
            ))),
        }
    }
}
