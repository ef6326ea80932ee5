use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Rule mapping a chain length `n` to a batch size `b_n`.
///
/// Text form (used in configs, CLI flags and result files):
/// `sqrt`, `pow:<e>`, `cbrt-plus:<delta>`, `fixed:<b>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleRule {
    /// `b_n = floor(sqrt(n))`
    SqrtN,
    /// `b_n = floor(n^e)`, `0 < e < 1`
    Pow(f64),
    /// `b_n = floor(n^(1/3 + delta))`
    CubeRootPlusDelta(f64),
    Fixed(usize),
}

impl ScheduleRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScheduleRule::SqrtN => Ok(()),
            ScheduleRule::Pow(e) if e > 0.0 && e < 1.0 => Ok(()),
            ScheduleRule::Pow(e) => Err(Error::InvalidRule(format!(
                "exponent must lie in (0, 1), got {e}"
            ))),
            ScheduleRule::CubeRootPlusDelta(d) if d > 0.0 && d < 2.0 / 3.0 => Ok(()),
            ScheduleRule::CubeRootPlusDelta(d) => Err(Error::InvalidRule(format!(
                "delta must lie in (0, 2/3), got {d}"
            ))),
            ScheduleRule::Fixed(b) if b >= 1 => Ok(()),
            ScheduleRule::Fixed(_) => Err(Error::InvalidRule("fixed batch size must be >= 1".into())),
        }
    }

    /// Batch size this rule assigns to a chain of length `n`.
    pub fn batch_size(&self, n: usize) -> usize {
        match *self {
            ScheduleRule::SqrtN => integer_sqrt(n),
            ScheduleRule::Pow(e) => floor_power(n, e),
            ScheduleRule::CubeRootPlusDelta(d) => floor_power(n, 1.0 / 3.0 + d),
            ScheduleRule::Fixed(b) => b,
        }
    }
}

fn integer_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

// floor(n^e), snapping to an integer when pow() lands a few ulps below it
// (100000^0.4 evaluates to 99.99999999999997).
fn floor_power(n: usize, e: f64) -> usize {
    let x = (n as f64).powf(e);
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest as usize
    } else {
        x.floor() as usize
    }
}

impl fmt::Display for ScheduleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleRule::SqrtN => write!(f, "sqrt"),
            ScheduleRule::Pow(e) => write!(f, "pow:{e}"),
            ScheduleRule::CubeRootPlusDelta(d) => write!(f, "cbrt-plus:{d:e}"),
            ScheduleRule::Fixed(b) => write!(f, "fixed:{b}"),
        }
    }
}

impl FromStr for ScheduleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg.trim())),
            None => (s, None),
        };
        let real = |arg: Option<&str>| -> Result<f64> {
            arg.ok_or_else(|| Error::InvalidRule(format!("`{s}` needs an argument")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidRule(format!("`{s}`: {e}")))
        };
        let rule = match name {
            "sqrt" => ScheduleRule::SqrtN,
            "pow" => ScheduleRule::Pow(real(arg)?),
            "cbrt-plus" => ScheduleRule::CubeRootPlusDelta(real(arg)?),
            "fixed" => ScheduleRule::Fixed(
                arg.ok_or_else(|| Error::InvalidRule(format!("`{s}` needs an argument")))?
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidRule(format!("`{s}`: {e}")))?,
            ),
            _ => return Err(Error::InvalidRule(format!("unknown rule `{s}`"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}

impl Serialize for ScheduleRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScheduleRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A concrete `(n, a_n, b_n)` triple and the rule that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSchedule {
    pub n: usize,
    pub batch_size: usize,
    pub num_batches: usize,
    pub rule: ScheduleRule,
}

impl BatchSchedule {
    /// Number of leading values the estimator consumes.
    pub fn used(&self) -> usize {
        self.batch_size * self.num_batches
    }
}

/// Resolve `rule` at chain length `n`, with `a_n = floor(n / b_n)`.
pub fn batch_schedule(n: usize, rule: ScheduleRule) -> Result<BatchSchedule> {
    rule.validate()?;
    let b = rule.batch_size(n);
    let a = n.checked_div(b).unwrap_or(0);
    if n < 4 || b < 1 || a < 2 {
        return Err(Error::ScheduleDegenerate { n, b, a });
    }
    Ok(BatchSchedule {
        n,
        batch_size: b,
        num_batches: a,
        rule,
    })
}
