use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CryptoError, SystemParams};

/// How a plaintext integer relates to the real value it stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScaleTag {
    /// Labels, votes and anything derived from them: the integer is the value.
    Unit,
    /// Feature and split values, multiplied by the fixed-point scale `S`.
    Scaled,
}

impl fmt::Display for ScaleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleTag::Unit => f.write_str("unit"),
            ScaleTag::Scaled => f.write_str("scaled"),
        }
    }
}

/// A signed plaintext inside the domain `[-B, B]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlainScalar {
    pub value: i64,
    pub tag: ScaleTag,
}

impl PlainScalar {
    pub fn unit(value: i64) -> Self {
        Self {
            value,
            tag: ScaleTag::Unit,
        }
    }

    pub fn scaled(value: i64) -> Self {
        Self {
            value,
            tag: ScaleTag::Scaled,
        }
    }
}

/// Maps a real value onto the integer plaintext domain.
///
/// `Scaled` multiplies by `S` and rounds half to even; `Unit` accepts integers only.
pub fn encode(params: &SystemParams, x: f64, tag: ScaleTag) -> Result<PlainScalar, CryptoError> {
    if !x.is_finite() {
        return Err(CryptoError::NotEncodable(x));
    }
    let raw = match tag {
        ScaleTag::Unit => {
            if x.fract() != 0.0 {
                return Err(CryptoError::NotEncodable(x));
            }
            x
        }
        ScaleTag::Scaled => (x * params.scale() as f64).round_ties_even(),
    };
    let bound = params.domain_bound() as f64;
    if raw.abs() > bound {
        return Err(CryptoError::DomainOverflow {
            value: raw.to_string(),
            bound: params.domain_bound(),
        });
    }
    Ok(PlainScalar { value: raw as i64, tag })
}

pub fn decode(params: &SystemParams, v: PlainScalar) -> f64 {
    match v.tag {
        ScaleTag::Unit => v.value as f64,
        ScaleTag::Scaled => v.value as f64 / params.scale() as f64,
    }
}
