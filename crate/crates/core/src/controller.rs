//! The memoryless reactive policy.
//!
//! A controller is six normalized wheel velocities, one `(left, right)` pair
//! per sensor reading. Nothing else is consulted: the same reading always
//! yields the same pair.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sensing::SensorReading;

/// Normalized `(left, right)` wheel velocities in `[-1, 1]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WheelPair {
    pub left: f64,
    pub right: f64,
}

impl WheelPair {
    pub const fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }
}

/// `(vl0, vr0, vl1, vr1, vl2, vr2)`: pair `i` is used when the sensor reads `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerParams([f64; 6]);

impl ControllerParams {
    /// Best controller found by the two-parameter sweep: a backward
    /// clockwise arc unless a same-group body is in sight, in which case the
    /// robot spins clockwise on the spot.
    pub const BEST: ControllerParams = ControllerParams([-0.7, -1.0, 1.0, -1.0, -0.7, -1.0]);

    /// Every wheel stopped.
    pub const ZERO: ControllerParams = ControllerParams([0.0; 6]);

    pub fn new(values: [f64; 6]) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numeric("controller parameter"));
            }
            if !(-1.0..=1.0).contains(v) {
                return Err(Error::Validation(format!(
                    "controller parameter {i} = {v} outside [-1, 1]"
                )));
            }
        }
        Ok(Self(values))
    }

    /// Joins the four fixed responses (nothing, same group) with a response
    /// to other-group bodies.
    pub fn from_prefix(prefix: [f64; 4], other_group: WheelPair) -> Result<Self> {
        Self::new([
            prefix[0],
            prefix[1],
            prefix[2],
            prefix[3],
            other_group.left,
            other_group.right,
        ])
    }

    pub fn values(&self) -> [f64; 6] {
        self.0
    }

    pub fn actuate(&self, reading: SensorReading) -> WheelPair {
        let i = reading.index() * 2;
        WheelPair::new(self.0[i], self.0[i + 1])
    }
}

/// Scales a normalized pair to wheel speeds in cm/s.
pub fn to_wheel_speeds(pair: WheelPair, max_speed: f64) -> Result<(f64, f64)> {
    for v in [pair.left, pair.right] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!(
                "normalized wheel velocity {v} outside [-1, 1]"
            )));
        }
    }
    Ok((pair.left * max_speed, pair.right * max_speed))
}

impl fmt::Display for ControllerParams {
    /// Formats as `[-0.7,-1.0,1.0,-1.0,-0.7,-1.0]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v:?}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for ControllerParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("controller must be bracketed: {s:?}")))?;
        let values: Vec<f64> = inner
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("controller value {part:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let values: [f64; 6] = values.try_into().map_err(|v: Vec<f64>| {
            Error::Parse(format!("controller needs 6 values, got {}", v.len()))
        })?;
        Self::new(values)
    }
}
