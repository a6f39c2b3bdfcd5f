//! Update priority scoring.
//!
//! Every pending update gets a system score (weighted node headroom), an application score
//! (weighted benefit and urgency of the update), and their convex combination `pval`. The
//! combined value is bucketed into four colour classes; Red updates are not worth applying.

use std::fmt;
use std::str::FromStr;

use crate::cluster::{Application, Node, ResourceVector, UpdateRequest};
use crate::error::ConfigError;
use crate::scalar::{clamp_unit, Scalar};

/// Weights over (accuracy gain, remaining progress, latency reduction, exec-time reduction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppWeights<T> {
    pub accuracy: T,
    pub progress: T,
    pub latency: T,
    pub exec_time: T,
}

impl<T: Scalar> AppWeights<T> {
    pub fn from_array([accuracy, progress, latency, exec_time]: [T; 4]) -> Self {
        Self {
            accuracy,
            progress,
            latency,
            exec_time,
        }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.accuracy, self.progress, self.latency, self.exec_time]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig<T> {
    /// Weight of the system score.
    pub c1: T,
    /// Weight of the application score.
    pub c2: T,
    pub s_weight: ResourceVector<T>,
    pub a_weight: AppWeights<T>,
    /// Accept `c1 > c2` as long as `c1 + c2 = 1`.
    pub relax_ordering: bool,
}

impl<T: Scalar> Default for WeightConfig<T> {
    fn default() -> Self {
        let q = T::lit(0.25);
        Self {
            c1: T::lit(0.4),
            c2: T::lit(0.6),
            s_weight: ResourceVector::splat(q),
            a_weight: AppWeights::from_array([q; 4]),
            relax_ordering: false,
        }
    }
}

impl<T: Scalar> WeightConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let tol = T::sum_tolerance();
        let err = |m: String| Err(ConfigError::Weights(m));
        if !(self.c1 >= T::zero() && self.c2 <= T::one() && self.c2 >= T::zero()) {
            return err(format!("c1={} c2={} must lie in [0,1]", self.c1, self.c2));
        }
        if !self.relax_ordering && self.c1 > self.c2 {
            return err(format!("c1={} exceeds c2={}", self.c1, self.c2));
        }
        if (self.c1 + self.c2 - T::one()).abs() > tol {
            return err(format!("c1 + c2 = {} != 1", self.c1 + self.c2));
        }
        for (name, w) in [
            ("s_weight", self.s_weight.to_array()),
            ("a_weight", self.a_weight.to_array()),
        ] {
            if w.iter().any(|v| v.is_nan() || *v < T::zero()) {
                return err(format!("{name} has a negative component"));
            }
            let sum = w.iter().fold(T::zero(), |a, b| a + *b);
            if (sum - T::one()).abs() > tol {
                return err(format!("{name} sums to {sum}, not 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityThresholds<T> {
    pub green_min: T,
    pub yellow_min: T,
    pub blue_min: T,
}

impl<T: Scalar> Default for PriorityThresholds<T> {
    fn default() -> Self {
        Self {
            green_min: T::lit(0.75),
            yellow_min: T::lit(0.5),
            blue_min: T::lit(0.25),
        }
    }
}

impl<T: Scalar> PriorityThresholds<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = T::zero() < self.blue_min
            && self.blue_min < self.yellow_min
            && self.yellow_min < self.green_min
            && self.green_min < T::one();
        if ok {
            Ok(())
        } else {
            Err(ConfigError::PriorityThresholds(format!(
                "need 0 < blue {} < yellow {} < green {} < 1",
                self.blue_min, self.yellow_min, self.green_min
            )))
        }
    }
}

/// Colour class, highest priority first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorityClass {
    Green,
    Yellow,
    Blue,
    Red,
}

impl PriorityClass {
    /// 0 for Green up to 3 for Red; lower is more urgent.
    pub fn rank(self) -> u8 {
        match self {
            PriorityClass::Green => 0,
            PriorityClass::Yellow => 1,
            PriorityClass::Blue => 2,
            PriorityClass::Red => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PriorityClass::Green => "Green",
            PriorityClass::Yellow => "Yellow",
            PriorityClass::Blue => "Blue",
            PriorityClass::Red => "Red",
        }
    }
}

impl fmt::Display for PriorityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Green" => Ok(Self::Green),
            "Yellow" => Ok(Self::Yellow),
            "Blue" => Ok(Self::Blue),
            "Red" => Ok(Self::Red),
            other => Err(format!("unknown priority class {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityScore<T> {
    pub sp: T,
    pub ap: T,
    pub pval: T,
    pub class: PriorityClass,
}

/// Weighted headroom `sum_k w_k * (1 - load_k)` of the node, including in-flight updates.
pub fn compute_sp<T: Scalar>(node: &Node<T>, s_weight: &ResourceVector<T>) -> T {
    system_score(&node.load(), s_weight)
}

/// Same as [`compute_sp`] for an explicit load vector.
pub fn system_score<T: Scalar>(load: &ResourceVector<T>, s_weight: &ResourceVector<T>) -> T {
    let headroom = load.to_array().map(|u| T::one() - clamp_unit(u));
    let sum = headroom
        .into_iter()
        .zip(s_weight.to_array())
        .fold(T::zero(), |acc, (h, w)| acc + w * h);
    clamp_unit(sum)
}

pub fn compute_ap<T: Scalar>(
    app: &Application<T>,
    update: &UpdateRequest<T>,
    a_weight: &AppWeights<T>,
) -> T {
    let remaining = T::one() - clamp_unit(app.progress);
    let sum = a_weight.accuracy * update.accuracy_gain
        + a_weight.progress * remaining
        + a_weight.latency * update.latency_reduction
        + a_weight.exec_time * update.exec_reduction;
    clamp_unit(sum)
}

/// Half-open bands; a value on a boundary belongs to the higher class.
pub fn classify_pval<T: Scalar>(pval: T, thresholds: &PriorityThresholds<T>) -> PriorityClass {
    if pval >= thresholds.green_min {
        PriorityClass::Green
    } else if pval >= thresholds.yellow_min {
        PriorityClass::Yellow
    } else if pval >= thresholds.blue_min {
        PriorityClass::Blue
    } else {
        PriorityClass::Red
    }
}

/// Combines both scores with the configured weights.
pub fn combine<T: Scalar>(
    sp: T,
    ap: T,
    weights: &WeightConfig<T>,
    thresholds: &PriorityThresholds<T>,
) -> PriorityScore<T> {
    let pval = clamp_unit(weights.c1 * sp + weights.c2 * ap);
    PriorityScore {
        sp,
        ap,
        pval,
        class: classify_pval(pval, thresholds),
    }
}

pub fn assign_priority<T: Scalar>(
    update: &UpdateRequest<T>,
    node: &Node<T>,
    app: &Application<T>,
    weights: &WeightConfig<T>,
    thresholds: &PriorityThresholds<T>,
) -> Result<PriorityScore<T>, ConfigError> {
    weights.validate()?;
    thresholds.validate()?;
    let sp = compute_sp(node, &weights.s_weight);
    let ap = compute_ap(app, update, &weights.a_weight);
    Ok(combine(sp, ap, weights, thresholds))
}
