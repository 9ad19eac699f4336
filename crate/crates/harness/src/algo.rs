use std::fmt;
use std::str::FromStr;

use cautious_core::monotonic::{AdaptiveState, CoefficientRule};
use serde::{Deserialize, Serialize};

use crate::config::AdaptiveSection;
use crate::error::HarnessError;

/// Algorithm selector: each name picks an interpolation coefficient rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    /// Full updates, `ζ = 1`.
    Cvi,
    Cpp,
    Cpi,
    Espi,
    Aspi,
    Dcpi,
    Dcpp,
    Fixed(f64),
}

impl Algorithm {
    /// `r_max` feeds the CPI rule only; pass 1 when advantages are already normalized.
    pub fn rule(&self, adaptive: &AdaptiveSection, r_max: f64) -> Result<CoefficientRule, HarnessError> {
        let state = || AdaptiveState::new(adaptive.rho1, adaptive.rho2);
        Ok(match *self {
            Self::Cvi => CoefficientRule::Fixed(1.0),
            Self::Cpp => CoefficientRule::LinearCpp,
            Self::Cpi => CoefficientRule::Cpi { r_max },
            Self::Espi => CoefficientRule::ExactSpi,
            Self::Aspi => CoefficientRule::ApproxSpi,
            Self::Dcpi => CoefficientRule::AdaptiveDcpi(state()?),
            Self::Dcpp => CoefficientRule::AdaptiveDcpp(state()?),
            Self::Fixed(z) => CoefficientRule::fixed(z)?,
        })
    }

    /// Parses a comma-separated list such as `cvi,cpp,fixed:0.5`.
    pub fn parse_list(text: &str) -> Result<Vec<Self>, HarnessError> {
        text.split(',').map(|s| s.trim().parse()).collect()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cvi => f.write_str("cvi"),
            Self::Cpp => f.write_str("cpp"),
            Self::Cpi => f.write_str("cpi"),
            Self::Espi => f.write_str("espi"),
            Self::Aspi => f.write_str("aspi"),
            Self::Dcpi => f.write_str("dcpi"),
            Self::Dcpp => f.write_str("dcpp"),
            Self::Fixed(z) => write!(f, "fixed:{z}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Config(format!("unknown algorithm `{s}`"));
        Ok(match s.to_ascii_lowercase().as_str() {
            "cvi" => Self::Cvi,
            "cpp" => Self::Cpp,
            "cpi" => Self::Cpi,
            "espi" => Self::Espi,
            "aspi" => Self::Aspi,
            "dcpi" => Self::Dcpi,
            "dcpp" => Self::Dcpp,
            other => {
                let z: f64 = other
                    .strip_prefix("fixed:")
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&z) {
                    return Err(HarnessError::Config(format!("fixed coefficient {z} is not in [0, 1]")));
                }
                Self::Fixed(z)
            }
        })
    }
}

impl TryFrom<String> for Algorithm {
    type Error = HarnessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.to_string()
    }
}
