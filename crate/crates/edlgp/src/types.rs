//! Core domain enums shared by the tree language and the executor.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Node type in the strongly-typed tree language. Variation operators only
/// ever combine subtrees of equal `GpType`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GpType {
    /// A 2-D image plane.
    Image,
    /// A per-instance feature vector.
    Features,
    /// A per-instance vector of class probabilities (or sums thereof).
    Probs,
    /// Forest size parameter `t`.
    TreeCount,
    /// Forest depth parameter `d`.
    TreeDepth,
    /// Gabor frequency parameter `f`.
    Frequency,
    /// Gabor orientation parameter `theta`.
    Orientation,
    /// Gaussian-derivative order parameter (`o1`, `o2`).
    Order,
    /// Gaussian standard-deviation parameter `sigma`.
    Sigma,
}

impl GpType {
    /// True for the parameter-valued types (everything except the three
    /// data-carrying types).
    pub fn is_param(self) -> bool {
        !matches!(self, GpType::Image | GpType::Features | GpType::Probs)
    }
}

impl fmt::Display for GpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GpType::Image => "IMAGE",
            GpType::Features => "FEATURES",
            GpType::Probs => "PROBS",
            GpType::TreeCount => "TREE_COUNT",
            GpType::TreeDepth => "TREE_DEPTH",
            GpType::Frequency => "FREQUENCY",
            GpType::Orientation => "ORIENTATION",
            GpType::Order => "ORDER",
            GpType::Sigma => "SIGMA",
        };
        f.write_str(s)
    }
}

/// Concept layer a primitive belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    Filtering,
    FeatureExtraction,
    Concatenation,
    ClassificationCascade,
    Classification,
    Summation,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Layer::Filtering => "filtering",
            Layer::FeatureExtraction => "feature-extraction",
            Layer::Concatenation => "concatenation",
            Layer::ClassificationCascade => "classification-cascade",
            Layer::Classification => "classification",
            Layer::Summation => "summation",
        };
        f.write_str(s)
    }
}

/// Image channel terminal. Gray is derived from RGB by luminance when the
/// dataset is colour, and is the only channel for gray-scale datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Gray,
    Red,
    Green,
    Blue,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Gray => "Gray",
            Channel::Red => "Red",
            Channel::Green => "Green",
            Channel::Blue => "Blue",
        }
    }

    pub fn from_name(s: &str) -> Option<Channel> {
        match s {
            "Gray" => Some(Channel::Gray),
            "Red" => Some(Channel::Red),
            "Green" => Some(Channel::Green),
            "Blue" => Some(Channel::Blue),
            _ => None,
        }
    }
}

/// Value carried by a parameter terminal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_i64(self) -> i64 {
        match self {
            ParamValue::Int(v) => v,
            ParamValue::Real(v) => v as i64,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(v) => v as f64,
            ParamValue::Real(v) => v,
        }
    }
}
