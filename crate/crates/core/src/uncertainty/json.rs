//! `{"family": string, "m": int, "params": object}` descriptors.
//!
//! | family               | params                                        |
//! |----------------------|-----------------------------------------------|
//! | `pnorm_ball`         | `p`, `radius` (default 1)                     |
//! | `hypersphere`        | none                                          |
//! | `two_norm_balls`     | `p`, `q`, `r`                                 |
//! | `budget`             | `k`                                           |
//! | `budget_intersection`| `alpha` (L rows of length m)                  |
//! | `generalized_budget` | `theta` (default 0.4·(m−1))                   |
//! | `pi_ellipsoid`       | `a`                                           |
//! | `scaled_spi`         | `lambda`, `inner` (a nested descriptor)       |
//! | `explicit_polytope`  | `rows`, `rhs`                                 |
//! | `explicit_conv_hull` | `vertices`, or `nu_support` and `nu_value`    |

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use super::{Family, Hull, UncertaintySet};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Descriptor {
    family: String,
    m: usize,
    #[serde(default)]
    params: Map<String, Value>,
}

pub fn default_theta(m: usize) -> f64 {
    0.4 * (m as f64 - 1.0)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidDescriptor(msg.into())
}

fn take<T: for<'a> Deserialize<'a>>(params: &Map<String, Value>, key: &str) -> Result<T> {
    let v = params.get(key).ok_or_else(|| bad(format!("missing parameter `{key}`")))?;
    serde_json::from_value(v.clone()).map_err(|e| bad(format!("parameter `{key}`: {e}")))
}

fn take_or<T: for<'a> Deserialize<'a>>(params: &Map<String, Value>, key: &str, default: T) -> Result<T> {
    if params.contains_key(key) {
        take(params, key)
    } else {
        Ok(default)
    }
}

impl UncertaintySet {
    fn descriptor(&self) -> Descriptor {
        let (family, params) = match &self.family {
            Family::PNormBall { p, radius } => ("pnorm_ball", json!({"p": p, "radius": radius})),
            Family::Hypersphere => ("hypersphere", json!({})),
            Family::TwoNormBalls { p, q, r } => ("two_norm_balls", json!({"p": p, "q": q, "r": r})),
            Family::Budget { k } => ("budget", json!({"k": k})),
            Family::BudgetIntersection { alpha } => ("budget_intersection", json!({"alpha": alpha})),
            Family::GeneralizedBudget { theta } => ("generalized_budget", json!({"theta": theta})),
            Family::PiEllipsoid { a } => ("pi_ellipsoid", json!({"a": a})),
            Family::ScaledSpi { lambda, inner } => {
                ("scaled_spi", json!({"lambda": lambda, "inner": serde_json::to_value(&inner.descriptor()).unwrap()}))
            }
            Family::ExplicitPolytope { rows, rhs } => ("explicit_polytope", json!({"rows": rows, "rhs": rhs})),
            Family::ExplicitConvHull(Hull::Vertices(vs)) => ("explicit_conv_hull", json!({"vertices": vs})),
            Family::ExplicitConvHull(Hull::PermutedNu { r, value }) => {
                ("explicit_conv_hull", json!({"nu_support": r, "nu_value": value}))
            }
        };
        let Value::Object(params) = params else { unreachable!() };
        Descriptor { family: family.to_string(), m: self.m, params }
    }

    fn from_descriptor(d: Descriptor) -> Result<Self> {
        let p = &d.params;
        let m = d.m;
        let set = match d.family.as_str() {
            "pnorm_ball" => Self::p_norm_ball(m, take(p, "p")?, take_or(p, "radius", 1.0)?)?,
            "hypersphere" => Self::hypersphere(m)?,
            "two_norm_balls" => Self::two_norm_balls(m, take(p, "p")?, take(p, "q")?, take(p, "r")?)?,
            "budget" => Self::budget(m, take(p, "k")?)?,
            "budget_intersection" => Self::budget_intersection(take(p, "alpha")?)?,
            "generalized_budget" => Self::generalized_budget(m, take_or(p, "theta", default_theta(m))?)?,
            "pi_ellipsoid" => Self::pi_ellipsoid(m, take(p, "a")?)?,
            "scaled_spi" => {
                let inner: Descriptor = take(p, "inner")?;
                Self::scaled_spi(take(p, "lambda")?, Self::from_descriptor(inner)?)?
            }
            "explicit_polytope" => Self::explicit_polytope(take(p, "rows")?, take(p, "rhs")?)?,
            "explicit_conv_hull" if p.contains_key("vertices") => Self::explicit_conv_hull(take(p, "vertices")?)?,
            "explicit_conv_hull" => Self::permuted_nu_hull(m, take(p, "nu_support")?, take(p, "nu_value")?)?,
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        if set.m != m {
            return Err(Error::DimensionMismatch { expected: m, got: set.m });
        }
        Ok(set)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_descriptor(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.descriptor()).expect("descriptor serializes")
    }
}

impl Serialize for UncertaintySet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UncertaintySet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Self::from_descriptor(Descriptor::deserialize(de)?).map_err(|e| D::Error::custom(e.to_string()))
    }
}
