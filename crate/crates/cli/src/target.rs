//! Target distributions for the fitting experiments.

use std::fmt;
use std::str::FromStr;

use igr::recovery::DiscretePmf;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Infinite families are cut at the first `T` with `cdf(T) ≥ 1 - TRUNCATION_TAIL`.
pub const TRUNCATION_TAIL: f64 = 1e-10;

/// Hard limit on the support of a truncated target, against runaway parameters.
const MAX_SUPPORT: usize = 1_000_000;

/// A target family and its parameters.
///
/// Written as `poisson:LAMBDA`, `binomial:N,P`, `negbinomial:R,P` or
/// `custom:P0,P1,...`. The negative binomial counts failures before the `R`-th
/// success with success probability `P`, so its mean is `R (1-P) / P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TargetSpec {
    Poisson { lambda: f64 },
    Binomial { n: u64, p: f64 },
    NegBinomial { r: u64, p: f64 },
    Custom { probs: Vec<f64> },
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_numbers(body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| config_err(format!("bad number {s:?} in target: {e}"))))
        .collect()
}

fn parse_count(x: f64, name: &str) -> Result<u64> {
    if x >= 1.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(config_err(format!("{name} must be a positive integer, got {x}")))
    }
}

fn check_prob(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(config_err(format!("probability must lie in (0, 1), got {p}")))
    }
}

impl FromStr for TargetSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (family, body) =
            s.split_once(':').ok_or_else(|| config_err(format!("target {s:?} should look like family:params")))?;
        let nums = parse_numbers(body)?;
        let arity = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(config_err(format!("{family} takes {n} parameter(s), got {}", nums.len())))
            }
        };
        let spec = match family.trim().to_ascii_lowercase().as_str() {
            "poisson" => {
                arity(1)?;
                TargetSpec::Poisson { lambda: nums[0] }
            }
            "binomial" => {
                arity(2)?;
                TargetSpec::Binomial { n: parse_count(nums[0], "N")?, p: nums[1] }
            }
            "negbinomial" => {
                arity(2)?;
                TargetSpec::NegBinomial { r: parse_count(nums[0], "r")?, p: nums[1] }
            }
            "custom" => TargetSpec::Custom { probs: nums },
            other => return Err(config_err(format!("unknown target family {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Poisson { lambda } => write!(f, "poisson:{lambda}"),
            TargetSpec::Binomial { n, p } => write!(f, "binomial:{n},{p}"),
            TargetSpec::NegBinomial { r, p } => write!(f, "negbinomial:{r},{p}"),
            TargetSpec::Custom { probs } => {
                let body: Vec<String> = probs.iter().map(f64::to_string).collect();
                write!(f, "custom:{}", body.join(","))
            }
        }
    }
}

impl TryFrom<String> for TargetSpec {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TargetSpec> for String {
    fn from(t: TargetSpec) -> Self {
        t.to_string()
    }
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::Poisson { lambda } if !(*lambda > 0.0 && lambda.is_finite()) => {
                Err(config_err(format!("poisson rate must be positive, got {lambda}")))
            }
            TargetSpec::Binomial { p, .. } | TargetSpec::NegBinomial { p, .. } => check_prob(*p).map(|_| ()),
            TargetSpec::Custom { probs } => {
                if probs.len() < 2 {
                    return Err(config_err("custom target needs at least two probabilities"));
                }
                if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                    return Err(config_err("custom probabilities must be non-negative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-6 {
                    return Err(config_err(format!("custom probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the family has unbounded support (and is truncated).
    pub fn is_infinite(&self) -> bool {
        matches!(self, TargetSpec::Poisson { .. } | TargetSpec::NegBinomial { .. })
    }

    /// The pmf, renormalized after truncation.
    pub fn build(&self) -> Result<DiscretePmf> {
        self.validate()?;
        let raw = match self {
            TargetSpec::Poisson { lambda } => {
                let step_const = lambda.ln();
                truncated(-lambda, |k| step_const - ((k + 1) as f64).ln())?
            }
            TargetSpec::NegBinomial { r, p } => {
                let r = *r as f64;
                let q = (1.0 - p).ln();
                truncated(r * p.ln(), |k| (k as f64 + r).ln() - ((k + 1) as f64).ln() + q)?
            }
            TargetSpec::Binomial { n, p } => {
                let odds = p.ln() - (-p).ln_1p();
                let mut log_p = *n as f64 * (-p).ln_1p();
                let mut out = Vec::with_capacity(*n as usize + 1);
                for k in 0..=*n {
                    out.push(log_p.exp());
                    log_p += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + odds;
                }
                out
            }
            TargetSpec::Custom { probs } => probs.clone(),
        };
        let total: f64 = raw.iter().sum();
        DiscretePmf::finite(raw.iter().map(|p| p / total).collect()).map_err(CliError::from)
    }
}

/// Runs `log p_{k+1} = log p_k + step(k)` from `log_p0` until the cumulative
/// mass reaches `1 - TRUNCATION_TAIL`.
fn truncated(log_p0: f64, step: impl Fn(u64) -> f64) -> Result<Vec<f64>> {
    let mut log_p = log_p0;
    let mut cdf = 0.0;
    let mut out = Vec::new();
    for k in 0u64.. {
        let p = log_p.exp();
        out.push(p);
        cdf += p;
        if cdf >= 1.0 - TRUNCATION_TAIL {
            break;
        }
        if out.len() >= MAX_SUPPORT {
            return Err(config_err(format!("target support exceeds {MAX_SUPPORT} categories")));
        }
        log_p += step(k);
    }
    Ok(out)
}
