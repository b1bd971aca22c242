//! JSON map specifications.
//!
//! ```json
//! {"type":"pl","breaks":[{"x":"0","slope_right":"3/2"},{"x":"1/2","slope_right":"1/2"}],"shift":"0"}
//! {"type":"conjugated_rotation","alpha":"surd(5,1,2)","h0":{"type":"pl", ...}}
//! ```

use serde::{Deserialize, Serialize};

use crate::numberth::RotationSpec;
use crate::real::Real;

use super::{conjugate, ratio, rotation, CircleMap, MapError, PiecewiseMap};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BreakSpec {
    pub x: String,
    pub slope_right: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ShiftSpec {
    Value(String),
    /// Shift chosen by bisection so the rotation number matches `tune`.
    Tune {
        tune: String,
        depth: usize,
        #[serde(default)]
        bracket: Option<[String; 2]>,
    },
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec::Value("0".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapSpec {
    Pl {
        breaks: Vec<BreakSpec>,
        #[serde(default)]
        shift: ShiftSpec,
    },
    Rotation {
        alpha: String,
    },
    /// `h0^{-1} ∘ R_alpha ∘ h0`; `h0` is kept as the exact conjugacy.
    ConjugatedRotation {
        alpha: String,
        h0: Box<MapSpec>,
    },
    /// `R_by ∘ f ∘ R_by^{-1}`.
    RotatedConjugate {
        map: Box<MapSpec>,
        by: String,
    },
}

/// A map built from a spec, with whatever side information the spec
/// determines exactly.
#[derive(Debug, Clone)]
pub struct BuiltMap {
    pub map: CircleMap,
    /// `h` with `h ∘ f = R_alpha ∘ h`, when known in closed form.
    pub oracle: Option<CircleMap>,
    /// Rotation number, when fixed by the spec.
    pub rotation: Option<RotationSpec>,
    /// Shift found by tuning, if any.
    pub tuned_shift: Option<Real>,
}

impl MapSpec {
    pub fn from_json(s: &str) -> Result<Self, MapError> {
        serde_json::from_str(s).map_err(|e| MapError::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<BuiltMap, MapError> {
        match self {
            MapSpec::Pl { breaks, shift } => {
                let bs = breaks
                    .iter()
                    .map(|b| Ok((ratio(&b.x)?, ratio(&b.slope_right)?)))
                    .collect::<Result<Vec<_>, MapError>>()?;
                let base = PiecewiseMap::pl(&bs, &Real::zero())?;
                match shift {
                    ShiftSpec::Value(v) => {
                        let t = Real::parse(v).ok_or_else(|| MapError::Spec(format!("bad shift {v}")))?;
                        Ok(BuiltMap { map: base.shifted(&t).into(), oracle: None, rotation: None, tuned_shift: None })
                    }
                    ShiftSpec::Tune { tune, depth, bracket } => {
                        let target_spec = RotationSpec::parse(tune).map_err(|e| MapError::Spec(e.to_string()))?;
                        let target = target_spec.expand(*depth).map_err(|e| MapError::Spec(e.to_string()))?;
                        let (lo, hi) = match bracket {
                            Some([a, b]) => (
                                Real::parse(a).ok_or_else(|| MapError::Spec(a.clone()))?,
                                Real::parse(b).ok_or_else(|| MapError::Spec(b.clone()))?,
                            ),
                            None => (Real::zero(), Real::one()),
                        };
                        let fam = rotation::ShiftFamily::new(base);
                        let res = rotation::tune_to_rotation(&fam, &target, *depth, (lo, hi))?;
                        Ok(BuiltMap { map: res.map, oracle: None, rotation: Some(target_spec), tuned_shift: Some(res.t) })
                    }
                }
            }
            MapSpec::Rotation { alpha } => {
                let a = RotationSpec::parse(alpha).map_err(|e| MapError::Spec(e.to_string()))?;
                Ok(BuiltMap {
                    map: CircleMap::rotation(&a.to_real()),
                    oracle: Some(CircleMap::identity()),
                    rotation: Some(a),
                    tuned_shift: None,
                })
            }
            MapSpec::ConjugatedRotation { alpha, h0 } => {
                let a = RotationSpec::parse(alpha).map_err(|e| MapError::Spec(e.to_string()))?;
                let h = h0.build()?.map;
                let r = CircleMap::rotation(&a.to_real());
                // h^{-1} ∘ R ∘ h, applied right to left.
                let f = conjugate(&h.inverse(), &r);
                Ok(BuiltMap { map: f, oracle: Some(h), rotation: Some(a), tuned_shift: None })
            }
            MapSpec::RotatedConjugate { map, by } => {
                let inner = map.build()?;
                let b = Real::parse(by).ok_or_else(|| MapError::Spec(format!("bad rotation {by}")))?;
                let rb = CircleMap::rotation(&b);
                let f = conjugate(&rb, &inner.map);
                let oracle = inner.oracle.map(|h| super::compose(&h, &rb.inverse()));
                Ok(BuiltMap { map: f, oracle, rotation: inner.rotation, tuned_shift: inner.tuned_shift })
            }
        }
    }
}
