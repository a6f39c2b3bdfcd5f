//! Scenario parameters and their on-disk form.
//!
//! A scenario file is flat TOML: one `key = value` per line, values are integers, floats,
//! booleans, or arrays of floats. Every key is optional and falls back to the reference
//! scenario; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::cluster::{ResourceVector, UpdateFootprint};
use crate::error::ConfigError;
use crate::priority::{AppWeights, PriorityThresholds, WeightConfig};
use crate::scalar::{in_unit, Scalar};

/// Classifier counts outside this range are rejected unless `enforce_classifier_range` is off.
pub const CLASSIFIER_RANGE: (u32, u32) = (40, 140);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Scalar")]
pub struct ScenarioSpec<T> {
    pub seed: u64,
    pub node_count: u32,
    pub app_count: u32,
    pub classifier_total: u32,
    pub enforce_classifier_range: bool,
    pub frequent_fraction: T,
    pub correlated_fraction: T,
    pub correlation_penalty: T,
    pub drift_per_tick: T,
    pub accuracy_floor: T,
    pub arrival_rate: T,
    /// Relative chance of a frequent-update classifier being an update target.
    pub frequent_weight: T,
    pub accuracy_gain_range: [T; 2],
    pub delta_mb_range: [T; 2],
    /// Latency and exec-time reductions are drawn from `[0, reduction_max]`.
    pub reduction_max: T,
    pub initial_accuracy_range: [T; 2],
    pub classifier_size_mb_range: [T; 2],
    pub latency_ms_range: [T; 2],
    pub exec_time_ms_range: [T; 2],
    pub progress_rate: T,
    /// Default tick budget for a run.
    pub mission_length_hint: u64,
    pub node_cpu_cores: T,
    pub node_memory_mb: T,
    pub node_storage_mb: T,
    pub link_mb_per_tick: T,
    pub min_transfer_rate: T,
    pub background_utilization_range: [T; 2],
    /// cpu, memory, storage fractions added per in-flight update.
    pub update_footprint: [T; 3],
    /// cpu, memory, storage, throughput.
    pub constraint_thresholds: [T; 4],
    pub c1: T,
    pub c2: T,
    /// cpu, memory, storage, throughput.
    pub s_weight: [T; 4],
    /// accuracy, progress, latency, exec_time.
    pub a_weight: [T; 4],
    pub relax_weight_ordering: bool,
    pub green_min: T,
    pub yellow_min: T,
    pub blue_min: T,
}

impl<T: Scalar> Default for ScenarioSpec<T> {
    /// The reference scenario: 4 nodes, 10 applications, 60 classifiers.
    fn default() -> Self {
        let l = T::lit;
        Self {
            seed: 42,
            node_count: 4,
            app_count: 10,
            classifier_total: 60,
            enforce_classifier_range: true,
            frequent_fraction: l(0.4),
            correlated_fraction: l(0.5),
            correlation_penalty: l(2.0),
            drift_per_tick: l(0.005),
            accuracy_floor: l(0.2),
            arrival_rate: l(2.0),
            frequent_weight: l(3.0),
            accuracy_gain_range: [l(0.02), l(0.15)],
            delta_mb_range: [l(1.0), l(50.0)],
            reduction_max: l(0.1),
            initial_accuracy_range: [l(0.55), l(0.9)],
            classifier_size_mb_range: [l(5.0), l(200.0)],
            latency_ms_range: [l(20.0), l(200.0)],
            exec_time_ms_range: [l(50.0), l(500.0)],
            progress_rate: l(0.01),
            mission_length_hint: 600,
            node_cpu_cores: l(8.0),
            node_memory_mb: l(16384.0),
            node_storage_mb: l(262144.0),
            link_mb_per_tick: l(40.0),
            min_transfer_rate: l(8.0),
            background_utilization_range: [l(0.2), l(0.6)],
            update_footprint: [l(0.05), l(0.05), l(0.01)],
            constraint_thresholds: [l(0.9); 4],
            c1: l(0.4),
            c2: l(0.6),
            s_weight: [l(0.25); 4],
            a_weight: [l(0.25); 4],
            relax_weight_ordering: false,
            green_min: l(0.75),
            yellow_min: l(0.5),
            blue_min: l(0.25),
        }
    }
}

/// `ceil(fraction * total)`, ignoring representation error in `fraction`.
pub fn ceil_share<T: Scalar>(fraction: T, total: u32) -> u32 {
    let exact = fraction.to_f64_lossless() * f64::from(total);
    let slack = f64::from(total.max(1)) * T::epsilon().to_f64_lossless() * 4.0;
    (exact - slack).ceil().max(0.0) as u32
}

impl<T: Scalar> ScenarioSpec<T> {
    pub fn weight_config(&self) -> WeightConfig<T> {
        WeightConfig {
            c1: self.c1,
            c2: self.c2,
            s_weight: ResourceVector::from_array(self.s_weight),
            a_weight: AppWeights::from_array(self.a_weight),
            relax_ordering: self.relax_weight_ordering,
        }
    }

    pub fn priority_thresholds(&self) -> PriorityThresholds<T> {
        PriorityThresholds {
            green_min: self.green_min,
            yellow_min: self.yellow_min,
            blue_min: self.blue_min,
        }
    }

    pub fn constraint_thresholds(&self) -> ResourceVector<T> {
        ResourceVector::from_array(self.constraint_thresholds)
    }

    pub fn footprint(&self) -> UpdateFootprint<T> {
        let [cpu, memory, storage] = self.update_footprint;
        UpdateFootprint {
            cpu,
            memory,
            storage,
        }
    }

    pub fn frequent_count(&self) -> u32 {
        ceil_share(self.frequent_fraction, self.classifier_total)
    }

    pub fn correlated_count(&self) -> u32 {
        ceil_share(self.correlated_fraction, self.classifier_total)
    }

    /// True when the classifier count lies outside [`CLASSIFIER_RANGE`].
    pub fn classifier_total_out_of_range(&self) -> bool {
        !(CLASSIFIER_RANGE.0..=CLASSIFIER_RANGE.1).contains(&self.classifier_total)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Scenario(m));
        for (name, v) in [
            ("node_count", self.node_count),
            ("app_count", self.app_count),
            ("classifier_total", self.classifier_total),
        ] {
            if v == 0 {
                return err(format!("{name} must be positive"));
            }
        }
        if self.enforce_classifier_range && self.classifier_total_out_of_range() {
            return err(format!(
                "classifier_total {} outside [{}, {}]",
                self.classifier_total, CLASSIFIER_RANGE.0, CLASSIFIER_RANGE.1
            ));
        }
        if self.classifier_total < self.app_count {
            return err(format!(
                "{} classifiers cannot cover {} applications",
                self.classifier_total, self.app_count
            ));
        }
        let unit = [
            ("frequent_fraction", self.frequent_fraction),
            ("correlated_fraction", self.correlated_fraction),
            ("drift_per_tick", self.drift_per_tick),
            ("accuracy_floor", self.accuracy_floor),
            ("reduction_max", self.reduction_max),
            ("progress_rate", self.progress_rate),
        ];
        for (name, v) in unit {
            if !in_unit(v) {
                return err(format!("{name} = {v} outside [0,1]"));
            }
        }
        let unit_ranges = [
            ("accuracy_gain_range", self.accuracy_gain_range),
            ("initial_accuracy_range", self.initial_accuracy_range),
            (
                "background_utilization_range",
                self.background_utilization_range,
            ),
        ];
        for (name, [lo, hi]) in unit_ranges {
            if !(in_unit(lo) && in_unit(hi) && lo <= hi) {
                return err(format!(
                    "{name} = [{lo}, {hi}] is not an ordered range in [0,1]"
                ));
            }
        }
        let positive_ranges = [
            ("delta_mb_range", self.delta_mb_range),
            ("classifier_size_mb_range", self.classifier_size_mb_range),
            ("latency_ms_range", self.latency_ms_range),
            ("exec_time_ms_range", self.exec_time_ms_range),
        ];
        for (name, [lo, hi]) in positive_ranges {
            if !(lo >= T::zero() && lo <= hi && hi.is_finite()) {
                return err(format!(
                    "{name} = [{lo}, {hi}] is not an ordered nonnegative range"
                ));
            }
        }
        for (name, v) in [
            ("arrival_rate", self.arrival_rate),
            ("node_cpu_cores", self.node_cpu_cores),
            ("node_memory_mb", self.node_memory_mb),
            ("node_storage_mb", self.node_storage_mb),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return err(format!("{name} = {v} must be finite and nonnegative"));
            }
        }
        for (name, v) in [
            ("link_mb_per_tick", self.link_mb_per_tick),
            ("min_transfer_rate", self.min_transfer_rate),
            ("frequent_weight", self.frequent_weight),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return err(format!("{name} = {v} must be positive"));
            }
        }
        if self.correlation_penalty.is_nan() || self.correlation_penalty < T::one() {
            return err(format!(
                "correlation_penalty {} below 1",
                self.correlation_penalty
            ));
        }
        if self.update_footprint.iter().any(|v| !in_unit(*v)) {
            return err("update_footprint components must lie in [0,1]".into());
        }
        if self
            .constraint_thresholds
            .iter()
            .any(|v| !(*v > T::zero() && *v <= T::one()))
        {
            return err("constraint_thresholds must lie in (0,1]".into());
        }
        let correlated = self.correlated_count();
        if correlated == 1 {
            return err("correlated share covers a single classifier; groups need two".into());
        }
        if correlated > self.classifier_total || self.frequent_count() > self.classifier_total {
            return err("fractions exceed the classifier count".into());
        }
        self.weight_config().validate()?;
        self.priority_thresholds().validate()?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat scenario serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let spec: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}
