//! One-parameter families of behaviors and their classification along a
//! grid.

use rayon::prelude::*;

use crate::behavior::{mix, Behavior};
use crate::classifier::{classify, ClassifierConfig, Tier};
use crate::error::{Error, Result};
use crate::hv::pr_box;
use crate::quantum::{two_qubit_behavior, werner_state, MeasurementDirection};

/// Planar measurement angles (degrees) reaching the maximal quantum CHSH
/// value on the singlet.
pub const TSIRELSON_ANGLES: [f64; 4] = [0.0, 90.0, 45.0, 135.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Werner state of the given visibility at [`TSIRELSON_ANGLES`].
    Werner,
    /// `w·PR + (1 − w)·uniform`.
    PrMix,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "werner" => Ok(Family::Werner),
            "prmix" => Ok(Family::PrMix),
            other => Err(Error::format("family", format!("unknown family `{other}`"))),
        }
    }
}

/// Singlet-family behavior at planar angles `[a0, a1, b0, b1]` in degrees.
pub fn werner_behavior(v: f64, angles_deg: [f64; 4]) -> Result<Behavior> {
    let d = MeasurementDirection::planar_degrees;
    let [a0, a1, b0, b1] = angles_deg;
    two_qubit_behavior(&werner_state(v)?, [d(a0), d(a1)], [d(b0), d(b1)])
}

pub fn family_behavior(family: Family, param: f64) -> Result<Behavior> {
    match family {
        Family::Werner => werner_behavior(param, TSIRELSON_ANGLES),
        Family::PrMix => mix(&pr_box(), &Behavior::uniform(), param),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub s_max: f64,
    pub ns_residual: f64,
    pub tier: Tier,
}

/// `steps` equally spaced points from `from` to `to` inclusive, evaluated
/// in parallel and returned in ascending order.
pub fn sweep(
    family: Family,
    from: f64,
    to: f64,
    steps: usize,
    config: &ClassifierConfig,
) -> Result<Vec<SweepRow>> {
    if !(0.0..=1.0).contains(&from) || !(0.0..=1.0).contains(&to) || from >= to {
        return Err(Error::OutOfRange {
            name: "sweep range",
            value: from,
            range: "0 <= from < to <= 1",
        });
    }
    if steps < 2 {
        return Err(Error::OutOfRange {
            name: "steps",
            value: steps as f64,
            range: ">= 2",
        });
    }
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let param = if i == steps - 1 {
                to
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            };
            let b = family_behavior(family, param)?;
            let v = classify(&b, config)?;
            Ok(SweepRow {
                param,
                s_max: v.evidence.s_max,
                ns_residual: v.evidence.ns_residual,
                tier: v.tier,
            })
        })
        .collect()
}

/// Bisects for the parameter at which the tier changes from `inner` to
/// something outer, given `lo` classified `inner` and `hi` not.
pub fn locate_transition(
    family: Family,
    mut lo: f64,
    mut hi: f64,
    inner: Tier,
    width: f64,
    config: &ClassifierConfig,
) -> Result<f64> {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if classify(&family_behavior(family, mid)?, config)?.tier <= inner {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
