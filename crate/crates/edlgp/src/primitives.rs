//! Primitive registry: the typed function set and the terminal domains.
//!
//! The function set is fixed; what varies per dataset is the channel
//! terminal set (gray-scale datasets expose only `Gray`) and the class
//! count that classifier nodes train against. Parameter terminals carry
//! finite value grids.

use crate::error::{EdlgpError, Result};
use crate::types::{Channel, GpType, Layer, ParamValue};
use std::collections::HashMap;
use std::f64::consts::PI;

pub type PrimId = usize;

/// Exact rational multiple of pi. All pi-valued grids and the parser build
/// values through this one expression so that renderings round-trip
/// bit-exactly.
pub fn rational_pi(num: i64, den: i64) -> f64 {
    num as f64 * PI / den as f64
}

/// Default Gabor frequency grid: lowest frequency pi/8, one mid step of
/// pi/(2*sqrt(2)) above it (clipped to the top), and the top pi/2. The grid
/// is configurable because the step convention is not universal.
pub fn default_frequency_grid() -> Vec<f64> {
    let lo = rational_pi(1, 8);
    let hi = rational_pi(1, 2);
    let mid = (lo + PI / (2.0 * std::f64::consts::SQRT_2)).min(hi);
    vec![lo, mid, hi]
}

#[derive(Clone, Debug)]
pub struct ChildSpec {
    pub gp_type: GpType,
    /// Key used in the text form for parameter children (`t`, `d`, `f`,
    /// `theta`, `o1`, `o2`, `sigma`); None for data-typed children.
    pub param_key: Option<&'static str>,
}

fn data(gp_type: GpType) -> ChildSpec {
    ChildSpec { gp_type, param_key: None }
}

fn param(gp_type: GpType, key: &'static str) -> ChildSpec {
    ChildSpec { gp_type, param_key: Some(key) }
}

#[derive(Clone, Debug)]
pub struct PrimitiveSignature {
    pub name: &'static str,
    pub children: Vec<ChildSpec>,
    pub return_type: GpType,
    pub layer: Layer,
}

/// The full typed primitive set plus per-dataset terminals.
#[derive(Clone, Debug)]
pub struct Registry {
    pub num_channels: usize,
    pub num_classes: usize,
    functions: Vec<PrimitiveSignature>,
    by_name: HashMap<&'static str, PrimId>,
    by_return: HashMap<GpType, Vec<PrimId>>,
    channels: Vec<Channel>,
    domains: HashMap<GpType, Vec<ParamValue>>,
    min_depth_type: HashMap<GpType, usize>,
    min_depth_fn: Vec<usize>,
    summation: Vec<PrimId>,
}

fn function_table() -> Vec<PrimitiveSignature> {
    use GpType::*;
    use Layer::*;
    let mut t = Vec::new();
    let mut f = |name: &'static str, children: Vec<ChildSpec>, ret: GpType, layer: Layer| {
        t.push(PrimitiveSignature { name, children, return_type: ret, layer });
    };

    for name in ["Mean", "Median", "Min", "Max", "Lap", "LoG1", "LoG2", "Sobel", "LBP_F", "HOG_F", "Sqrt", "ReLU"] {
        f(name, vec![data(Image)], Image, Filtering);
    }
    f("Gau", vec![data(Image), param(Sigma, "sigma")], Image, Filtering);
    f(
        "GauD",
        vec![data(Image), param(Sigma, "sigma"), param(Order, "o1"), param(Order, "o2")],
        Image,
        Filtering,
    );
    f("Gabor", vec![data(Image), param(Orientation, "theta"), param(Frequency, "f")], Image, Filtering);
    f("Add_MaxP", vec![data(Image), data(Image)], Image, Filtering);
    f("Sub_MaxP", vec![data(Image), data(Image)], Image, Filtering);

    f("Conca", vec![data(Image), data(Image)], Features, FeatureExtraction);
    for name in ["Hist", "HOG", "LBP", "SIFT", "LBP_FE", "HOG_FE", "Sobel_FE"] {
        f(name, vec![data(Image)], Features, FeatureExtraction);
    }
    f(
        "Gabor_FE",
        vec![data(Image), param(Orientation, "theta"), param(Frequency, "f")],
        Features,
        FeatureExtraction,
    );
    f("Gau_FE", vec![data(Image), param(Sigma, "sigma")], Features, FeatureExtraction);
    f(
        "GauD_FE",
        vec![data(Image), param(Sigma, "sigma"), param(Order, "o1"), param(Order, "o2")],
        Features,
        FeatureExtraction,
    );

    f("Comb2", vec![data(Features); 2], Features, Concatenation);
    f("Comb3", vec![data(Features); 3], Features, Concatenation);
    f("Comb4", vec![data(Features); 4], Features, Concatenation);

    for name in ["CC_RF", "CC_ERF"] {
        f(
            name,
            vec![data(Features), param(TreeCount, "t"), param(TreeDepth, "d")],
            Features,
            ClassificationCascade,
        );
    }
    f("CC_LR", vec![data(Features)], Features, ClassificationCascade);
    f("CC_SVM", vec![data(Features)], Features, ClassificationCascade);

    for name in ["RF", "ERF"] {
        f(
            name,
            vec![data(Features), param(TreeCount, "t"), param(TreeDepth, "d")],
            Probs,
            Classification,
        );
    }
    f("LR", vec![data(Features)], Probs, Classification);
    f("SVM", vec![data(Features)], Probs, Classification);

    f("Sum2", vec![data(Probs); 2], Probs, Summation);
    f("Sum3", vec![data(Probs); 3], Probs, Summation);
    f("Sum4", vec![data(Probs); 4], Probs, Summation);

    t
}

/// Build the registry for a dataset with the given channel and class
/// counts, with the default frequency grid.
pub fn register_primitives(num_channels: usize, num_classes: usize) -> Result<Registry> {
    Registry::with_frequency_grid(num_channels, num_classes, default_frequency_grid())
}

impl Registry {
    pub fn with_frequency_grid(
        num_channels: usize,
        num_classes: usize,
        frequency_grid: Vec<f64>,
    ) -> Result<Registry> {
        if num_channels != 1 && num_channels != 3 {
            return Err(EdlgpError::Config(format!(
                "unsupported channel count {num_channels}; expected 1 or 3"
            )));
        }
        if num_classes < 2 {
            return Err(EdlgpError::Config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if frequency_grid.is_empty() {
            return Err(EdlgpError::Config("frequency grid must not be empty".into()));
        }

        let channels = if num_channels == 1 {
            vec![Channel::Gray]
        } else {
            vec![Channel::Red, Channel::Green, Channel::Blue, Channel::Gray]
        };

        let mut domains = HashMap::new();
        domains.insert(
            GpType::TreeCount,
            (1..=20).map(|k| ParamValue::Int(50 * k)).collect::<Vec<_>>(),
        );
        domains.insert(
            GpType::TreeDepth,
            (1..=10).map(|k| ParamValue::Int(10 * k)).collect::<Vec<_>>(),
        );
        domains.insert(
            GpType::Frequency,
            frequency_grid.iter().map(|&f| ParamValue::Real(f)).collect::<Vec<_>>(),
        );
        domains.insert(
            GpType::Orientation,
            (0..8).map(|k| ParamValue::Real(rational_pi(k, 8))).collect::<Vec<_>>(),
        );
        domains.insert(GpType::Order, (0..=2).map(ParamValue::Int).collect::<Vec<_>>());
        domains.insert(GpType::Sigma, (1..=3).map(ParamValue::Int).collect::<Vec<_>>());

        let functions = function_table();
        let mut by_name = HashMap::new();
        for (id, sig) in functions.iter().enumerate() {
            if by_name.insert(sig.name, id).is_some() {
                return Err(EdlgpError::Internal(format!("duplicate primitive {}", sig.name)));
            }
        }
        let mut by_return: HashMap<GpType, Vec<PrimId>> = HashMap::new();
        for (id, sig) in functions.iter().enumerate() {
            by_return.entry(sig.return_type).or_default().push(id);
        }
        let summation = functions
            .iter()
            .enumerate()
            .filter(|(_, s)| s.layer == Layer::Summation)
            .map(|(i, _)| i)
            .collect();

        let (min_depth_type, min_depth_fn) =
            compute_min_depths(&functions, &channels, &domains);

        Ok(Registry {
            num_channels,
            num_classes,
            functions,
            by_name,
            by_return,
            channels,
            domains,
            min_depth_type,
            min_depth_fn,
            summation,
        })
    }

    pub fn functions(&self) -> &[PrimitiveSignature] {
        &self.functions
    }

    pub fn sig(&self, id: PrimId) -> &PrimitiveSignature {
        &self.functions[id]
    }

    pub fn by_name(&self, name: &str) -> Option<PrimId> {
        self.by_name.get(name).copied()
    }

    pub fn functions_returning(&self, ty: GpType) -> &[PrimId] {
        self.by_return.get(&ty).map_or(&[], Vec::as_slice)
    }

    pub fn summation_ids(&self) -> &[PrimId] {
        &self.summation
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn param_domain(&self, ty: GpType) -> &[ParamValue] {
        self.domains.get(&ty).map_or(&[], Vec::as_slice)
    }

    /// Number of distinct terminals of a type (channel terminals for IMAGE,
    /// domain values for parameter types, zero otherwise).
    pub fn terminal_count(&self, ty: GpType) -> usize {
        match ty {
            GpType::Image => self.channels.len(),
            GpType::Features | GpType::Probs => 0,
            _ => self.param_domain(ty).len(),
        }
    }

    /// Minimum subtree depth (in edges) needed to produce a value of `ty`.
    pub fn min_depth_of_type(&self, ty: GpType) -> usize {
        self.min_depth_type[&ty]
    }

    /// Minimum depth of a tree rooted at function `id`.
    pub fn min_depth_of_fn(&self, id: PrimId) -> usize {
        self.min_depth_fn[id]
    }
}

fn compute_min_depths(
    functions: &[PrimitiveSignature],
    channels: &[Channel],
    domains: &HashMap<GpType, Vec<ParamValue>>,
) -> (HashMap<GpType, usize>, Vec<usize>) {
    use GpType::*;
    const INF: usize = usize::MAX / 4;
    let all = [Image, Features, Probs, TreeCount, TreeDepth, Frequency, Orientation, Order, Sigma];
    let mut md: HashMap<GpType, usize> = all.iter().map(|&t| (t, INF)).collect();
    if !channels.is_empty() {
        md.insert(Image, 0);
    }
    for (&ty, dom) in domains {
        if !dom.is_empty() {
            md.insert(ty, 0);
        }
    }
    let mut fn_depth = vec![INF; functions.len()];
    loop {
        let mut changed = false;
        for (i, sig) in functions.iter().enumerate() {
            let worst = sig.children.iter().map(|c| md[&c.gp_type]).max().unwrap_or(0);
            let d = worst.saturating_add(1);
            if d < fn_depth[i] {
                fn_depth[i] = d;
                changed = true;
            }
            if d < md[&sig.return_type] {
                md.insert(sig.return_type, d);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (md, fn_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_registry_exposes_only_gray() {
        let reg = register_primitives(1, 10).unwrap();
        assert_eq!(reg.channels(), &[Channel::Gray]);
    }

    #[test]
    fn colour_registry_exposes_four_channels() {
        let reg = register_primitives(3, 10).unwrap();
        assert_eq!(reg.channels().len(), 4);
        assert!(reg.channels().contains(&Channel::Red));
        assert!(reg.channels().contains(&Channel::Gray));
    }

    #[test]
    fn two_channel_registry_is_rejected() {
        assert!(matches!(register_primitives(2, 10), Err(EdlgpError::Config(_))));
        assert!(matches!(register_primitives(3, 1), Err(EdlgpError::Config(_))));
    }

    #[test]
    fn function_set_is_complete_and_unique() {
        let reg = register_primitives(3, 10).unwrap();
        // 17 filtering + 11 feature extraction + 3 concatenation +
        // 4 cascade + 4 classification + 3 summation.
        assert_eq!(reg.functions().len(), 42);
        let mut names: Vec<_> = reg.functions().iter().map(|s| s.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 42);
        for name in ["Mean", "Gabor", "SIFT", "Comb4", "CC_SVM", "ERF", "Sum4"] {
            assert!(reg.by_name(name).is_some(), "{name} missing");
        }
    }

    #[test]
    fn parameter_domains_match_the_grids() {
        let reg = register_primitives(1, 2).unwrap();
        let t = reg.param_domain(GpType::TreeCount);
        assert_eq!(t.len(), 20);
        assert_eq!(t.first(), Some(&ParamValue::Int(50)));
        assert_eq!(t.last(), Some(&ParamValue::Int(1000)));
        let d = reg.param_domain(GpType::TreeDepth);
        assert_eq!(d.len(), 10);
        assert_eq!(d.last(), Some(&ParamValue::Int(100)));
        let theta = reg.param_domain(GpType::Orientation);
        assert_eq!(theta.len(), 8);
        assert_eq!(theta[0], ParamValue::Real(0.0));
        assert_eq!(theta[3], ParamValue::Real(rational_pi(3, 8)));
        let f = reg.param_domain(GpType::Frequency);
        assert_eq!(f.len(), 3);
        assert_eq!(f[0], ParamValue::Real(rational_pi(1, 8)));
        assert_eq!(f[2], ParamValue::Real(rational_pi(1, 2)));
        assert_eq!(reg.param_domain(GpType::Sigma).len(), 3);
        assert_eq!(reg.param_domain(GpType::Order).len(), 3);
    }

    #[test]
    fn min_depths() {
        let reg = register_primitives(3, 10).unwrap();
        assert_eq!(reg.min_depth_of_type(GpType::Image), 0);
        assert_eq!(reg.min_depth_of_type(GpType::Sigma), 0);
        assert_eq!(reg.min_depth_of_type(GpType::Features), 1);
        assert_eq!(reg.min_depth_of_type(GpType::Probs), 2);
        let sum2 = reg.by_name("Sum2").unwrap();
        assert_eq!(reg.min_depth_of_fn(sum2), 3);
        let lr = reg.by_name("LR").unwrap();
        assert_eq!(reg.min_depth_of_fn(lr), 2);
    }
}
