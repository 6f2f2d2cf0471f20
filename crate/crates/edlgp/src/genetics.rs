//! Tree generation, selection and the type-constrained variation operators.

use crate::error::{EdlgpError, Result};
use crate::primitives::{PrimId, Registry};
use crate::tree::{GenotypeTree, Node, NodePath};
use crate::types::GpType;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenMethod {
    /// Function nodes all the way to the target depth where type chains
    /// permit; terminals only at the bottom.
    Full,
    /// Terminals may appear at any depth.
    Grow,
}

/// A genotype with its (lazily assigned) fitness percentage.
#[derive(Clone, Debug)]
pub struct Individual {
    pub genotype: GenotypeTree,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genotype: GenotypeTree) -> Individual {
        Individual { genotype, fitness: None }
    }

    pub fn size(&self) -> usize {
        self.genotype.size()
    }
}

fn random_terminal(reg: &Registry, ty: GpType, rng: &mut ChaCha8Rng) -> Node {
    match ty {
        GpType::Image => {
            let channels = reg.channels();
            Node::Channel(channels[rng.gen_range(0..channels.len())])
        }
        _ => {
            let domain = reg.param_domain(ty);
            assert!(!domain.is_empty(), "no terminals of type {ty}");
            Node::Param { ptype: ty, value: domain[rng.gen_range(0..domain.len())] }
        }
    }
}

/// Shortest legal subtree of the requested type: a terminal where one
/// exists, otherwise a minimum-depth function with minimally completed
/// children. Used when the depth budget cannot accommodate the type.
fn minimal_completion(reg: &Registry, ty: GpType, rng: &mut ChaCha8Rng) -> Node {
    if reg.terminal_count(ty) > 0 {
        return random_terminal(reg, ty, rng);
    }
    let target = reg.min_depth_of_type(ty);
    let options: Vec<PrimId> = reg
        .functions_returning(ty)
        .iter()
        .copied()
        .filter(|&f| reg.min_depth_of_fn(f) == target)
        .collect();
    let prim = options[rng.gen_range(0..options.len())];
    let children = reg
        .sig(prim)
        .children
        .iter()
        .map(|c| c.gp_type)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|t| minimal_completion(reg, t, rng))
        .collect();
    Node::Func { prim, children }
}

fn gen_children(
    reg: &Registry,
    prim: PrimId,
    method: GenMethod,
    remaining: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    let child_types: Vec<GpType> = reg.sig(prim).children.iter().map(|c| c.gp_type).collect();
    let children = child_types
        .into_iter()
        .map(|t| generate_subtree(reg, method, remaining, t, rng))
        .collect();
    Node::Func { prim, children }
}

/// Generate a subtree of the given type within `depth_budget` edges. When
/// the type cannot be produced within the budget the shortest legal
/// completion is generated instead (so the result may exceed the budget,
/// but never the registry's minimum for that type).
pub fn generate_subtree(
    reg: &Registry,
    method: GenMethod,
    depth_budget: usize,
    ty: GpType,
    rng: &mut ChaCha8Rng,
) -> Node {
    let n_terminals = reg.terminal_count(ty);
    if depth_budget == 0 {
        if n_terminals > 0 {
            return random_terminal(reg, ty, rng);
        }
        return minimal_completion(reg, ty, rng);
    }
    let feasible: Vec<PrimId> = reg
        .functions_returning(ty)
        .iter()
        .copied()
        .filter(|&f| reg.min_depth_of_fn(f) <= depth_budget)
        .collect();
    match method {
        GenMethod::Full => {
            if !feasible.is_empty() {
                let prim = feasible[rng.gen_range(0..feasible.len())];
                gen_children(reg, prim, method, depth_budget - 1, rng)
            } else if n_terminals > 0 {
                random_terminal(reg, ty, rng)
            } else {
                minimal_completion(reg, ty, rng)
            }
        }
        GenMethod::Grow => {
            let total = n_terminals + feasible.len();
            if total == 0 {
                return minimal_completion(reg, ty, rng);
            }
            let pick = rng.gen_range(0..total);
            if pick < n_terminals {
                match ty {
                    GpType::Image => Node::Channel(reg.channels()[pick]),
                    _ => Node::Param { ptype: ty, value: reg.param_domain(ty)[pick] },
                }
            } else {
                gen_children(reg, feasible[pick - n_terminals], method, depth_budget - 1, rng)
            }
        }
    }
}

/// Generate a whole tree: the root is drawn from the summation primitives.
pub fn generate_tree(
    reg: &Registry,
    method: GenMethod,
    target_depth: usize,
    rng: &mut ChaCha8Rng,
) -> GenotypeTree {
    let sums = reg.summation_ids();
    let prim = sums[rng.gen_range(0..sums.len())];
    GenotypeTree::new(gen_children(reg, prim, method, target_depth.saturating_sub(1), rng))
}

/// Ramped half-and-half initialization: target depths cycle over
/// `[init_depth_min, init_depth_max]` and the generation method alternates
/// full/grow from individual to individual.
pub fn init_population(
    reg: &Registry,
    population_size: usize,
    init_depth_min: usize,
    init_depth_max: usize,
    stream: crate::rng::StreamId,
) -> Vec<Individual> {
    let span = init_depth_max - init_depth_min + 1;
    (0..population_size)
        .map(|i| {
            let depth = init_depth_min + i % span;
            let method = if i % 2 == 0 { GenMethod::Full } else { GenMethod::Grow };
            let mut rng = stream.child_u64(i as u64).rng();
            Individual::new(generate_tree(reg, method, depth, &mut rng))
        })
        .collect()
}

/// Tournament selection: the best of `tournament_size` uniform draws with
/// replacement. Ties break toward the smaller tree, then the earlier
/// population index.
pub fn tournament_select<'a>(
    population: &'a [Individual],
    tournament_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<&'a Individual> {
    assert!(!population.is_empty() && tournament_size >= 1);
    let mut best: Option<(f64, usize, usize)> = None; // (fitness, size, index)
    for _ in 0..tournament_size {
        let idx = rng.gen_range(0..population.len());
        let ind = &population[idx];
        let fitness = ind.fitness.ok_or_else(|| {
            EdlgpError::Internal(format!("individual {idx} entered a tournament unevaluated"))
        })?;
        let key = (fitness, ind.size(), idx);
        let better = match best {
            None => true,
            Some((bf, bs, bi)) => {
                key.0 > bf || (key.0 == bf && (key.1 < bs || (key.1 == bs && key.2 < bi)))
            }
        };
        if better {
            best = Some(key);
        }
    }
    Ok(&population[best.unwrap().2])
}

/// Subtree crossover: pick a non-root node in each parent with matching
/// types and swap the subtrees. Retries fresh picks when no compatible node
/// exists or an offspring would exceed `max_depth`; after `retry_limit`
/// attempts the parents are returned unchanged.
pub fn subtree_crossover(
    reg: &Registry,
    a: &GenotypeTree,
    b: &GenotypeTree,
    max_depth: usize,
    retry_limit: usize,
    rng: &mut ChaCha8Rng,
) -> (GenotypeTree, GenotypeTree) {
    let nodes_a: Vec<NodePath> =
        a.nodes().into_iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect();
    let nodes_b: Vec<NodePath> =
        b.nodes().into_iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect();
    for _ in 0..retry_limit.max(1) {
        let pa = &nodes_a[rng.gen_range(0..nodes_a.len())];
        let node_a = a.get(pa).unwrap();
        let ty = node_a.gp_type(reg);
        let compatible: Vec<&NodePath> = nodes_b
            .iter()
            .filter(|p| b.get(p).unwrap().gp_type(reg) == ty)
            .collect();
        if compatible.is_empty() {
            continue;
        }
        let pb = compatible[rng.gen_range(0..compatible.len())];
        let node_b = b.get(pb).unwrap();
        let child_a = a.with_replaced(pa, node_b.clone());
        let child_b = b.with_replaced(pb, node_a.clone());
        if child_a.depth() <= max_depth && child_b.depth() <= max_depth {
            return (child_a, child_b);
        }
    }
    (a.clone(), b.clone())
}

/// Subtree mutation: a random non-root node is replaced by a grow-generated
/// subtree of the same type fitting within `max_depth` at that position.
pub fn subtree_mutation(
    reg: &Registry,
    parent: &GenotypeTree,
    max_depth: usize,
    rng: &mut ChaCha8Rng,
) -> GenotypeTree {
    let nodes: Vec<NodePath> =
        parent.nodes().into_iter().map(|(p, _)| p).filter(|p| !p.is_empty()).collect();
    let path = &nodes[rng.gen_range(0..nodes.len())];
    let ty = parent.get(path).unwrap().gp_type(reg);
    let budget = max_depth - path.len();
    let replacement = generate_subtree(reg, GenMethod::Grow, budget, ty, rng);
    parent.with_replaced(path, replacement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::register_primitives;
    use crate::rng::StreamId;
    use crate::types::Layer;

    fn reg() -> Registry {
        register_primitives(3, 10).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        StreamId::new(seed).rng()
    }

    #[test]
    fn minimal_trees_from_tiny_budget() {
        // A target depth below the minimum legal depth falls back to the
        // shortest completions: SumN over classifiers over direct
        // feature-extractors of channels.
        let reg = reg();
        for seed in 0..50 {
            let t = generate_tree(&reg, GenMethod::Grow, 2, &mut rng(seed));
            assert!(t.validate(&reg, 10).is_ok());
            assert_eq!(t.depth(), 3, "{}", crate::sexpr::render(&t, &reg));
            let Node::Func { prim, children } = &t.root else { panic!() };
            assert_eq!(reg.sig(*prim).layer, Layer::Summation);
            for branch in children {
                let Node::Func { prim, children } = branch else { panic!() };
                assert_eq!(reg.sig(*prim).layer, Layer::Classification);
                let Node::Func { prim: fe, children: fe_children } = &children[0] else { panic!() };
                assert_eq!(reg.sig(*fe).layer, Layer::FeatureExtraction);
                for c in fe_children {
                    assert!(matches!(c, Node::Channel(_) | Node::Param { .. }));
                }
            }
        }
    }

    #[test]
    fn full_puts_image_leaves_at_target_depth() {
        let reg = reg();
        for d in 2..=6 {
            for seed in 0..20 {
                let sub = generate_subtree(&reg, GenMethod::Full, d, GpType::Image, &mut rng(seed));
                let t = GenotypeTree::new(sub);
                for (path, node) in t.nodes() {
                    if let Node::Channel(_) = node {
                        assert_eq!(path.len(), d, "seed {seed} depth {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn generated_trees_respect_types_and_depth() {
        let reg = reg();
        for seed in 0..200 {
            let depth = 2 + (seed as usize % 9);
            let method = if seed % 2 == 0 { GenMethod::Full } else { GenMethod::Grow };
            let t = generate_tree(&reg, method, depth, &mut rng(seed));
            assert!(t.validate(&reg, 10).is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn population_covers_feasible_depth_buckets() {
        let reg = reg();
        let pop = init_population(&reg, 100, 2, 10, StreamId::new(42));
        assert_eq!(pop.len(), 100);
        let mut buckets = std::collections::HashSet::new();
        for ind in &pop {
            assert!(ind.genotype.validate(&reg, 10).is_ok());
            buckets.insert(ind.genotype.depth());
        }
        // Depth 2 targets fall back to the minimum legal depth 3, so the
        // observable depths are exactly 3..=10.
        for d in 3..=10 {
            assert!(buckets.contains(&d), "missing depth bucket {d}: {buckets:?}");
        }
        assert!(!buckets.contains(&2));
    }

    #[test]
    fn same_seed_same_population() {
        let reg = reg();
        let a = init_population(&reg, 30, 2, 10, StreamId::new(7));
        let b = init_population(&reg, 30, 2, 10, StreamId::new(7));
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.genotype, y.genotype);
        }
    }

    #[test]
    fn tournament_picks_max_fitness_and_breaks_ties_by_size() {
        let reg = reg();
        let mut pop = init_population(&reg, 3, 2, 4, StreamId::new(1));
        pop[0].fitness = Some(10.0);
        pop[1].fitness = Some(20.0);
        pop[2].fitness = Some(30.0);
        // Tournament over the full population must return the best.
        let mut r = rng(0);
        let picked = tournament_select(&pop, 50, &mut r).unwrap();
        assert_eq!(picked.fitness, Some(30.0));

        let single = vec![Individual { fitness: Some(5.0), ..pop[0].clone() }];
        assert_eq!(tournament_select(&single, 3, &mut r).unwrap().fitness, Some(5.0));

        // Fitness tie: the smaller tree wins.
        let small = init_population(&reg, 1, 2, 2, StreamId::new(2)).remove(0);
        let big = init_population(&reg, 1, 6, 6, StreamId::new(3)).remove(0);
        assert!(small.size() < big.size());
        let tied = vec![
            Individual { fitness: Some(50.0), ..big },
            Individual { fitness: Some(50.0), ..small },
        ];
        let picked = tournament_select(&tied, 40, &mut r).unwrap();
        assert_eq!(picked.size(), tied[1].size());
    }

    #[test]
    fn unevaluated_individual_is_an_internal_error() {
        let reg = reg();
        let pop = init_population(&reg, 2, 2, 4, StreamId::new(1));
        assert!(matches!(
            tournament_select(&pop, 2, &mut rng(0)),
            Err(EdlgpError::Internal(_))
        ));
    }

    #[test]
    fn crossover_with_self_at_same_node_is_identity_family() {
        let reg = reg();
        let t = generate_tree(&reg, GenMethod::Grow, 6, &mut rng(5));
        let (a, b) = subtree_crossover(&reg, &t, &t, 10, 10, &mut rng(9));
        // Swapping subtrees between identical parents yields trees built
        // from the same node multiset; both remain valid.
        assert!(a.validate(&reg, 10).is_ok());
        assert!(b.validate(&reg, 10).is_ok());
        assert_eq!(a.size() + b.size(), 2 * t.size());
    }

    #[test]
    fn crossover_falls_back_to_parent_copies() {
        let reg = reg();
        // Zero retries forces the fallback path.
        let a = generate_tree(&reg, GenMethod::Grow, 4, &mut rng(1));
        let b = generate_tree(&reg, GenMethod::Grow, 4, &mut rng(2));
        let (ca, cb) = subtree_crossover(&reg, &a, &b, 0, 1, &mut rng(3));
        // max_depth 0 rejects every swap, so the parents come back.
        assert_eq!(ca, a);
        assert_eq!(cb, b);
    }

    #[test]
    fn crossover_preserves_types_and_depth() {
        let reg = reg();
        let mut r = rng(77);
        for i in 0..300 {
            let a = generate_tree(&reg, GenMethod::Grow, 2 + i % 9, &mut r);
            let b = generate_tree(&reg, GenMethod::Full, 2 + (i / 2) % 9, &mut r);
            let (ca, cb) = subtree_crossover(&reg, &a, &b, 10, 10, &mut r);
            assert!(ca.validate(&reg, 10).is_ok());
            assert!(cb.validate(&reg, 10).is_ok());
        }
    }

    #[test]
    fn mutation_preserves_types_and_replaces_params_within_domain() {
        let reg = reg();
        let mut r = rng(13);
        for i in 0..300 {
            let t = generate_tree(&reg, GenMethod::Grow, 2 + i % 9, &mut r);
            let m = subtree_mutation(&reg, &t, 10, &mut r);
            assert!(m.validate(&reg, 10).is_ok());
        }
    }

    #[test]
    fn mutation_at_zero_budget_site_installs_a_terminal() {
        let reg = reg();
        // Build a depth-10 tree; any IMAGE node at depth 10 is a channel.
        let mut r = rng(21);
        let t = generate_tree(&reg, GenMethod::Full, 10, &mut r);
        assert_eq!(t.depth(), 10);
        let deep_leaf = t
            .nodes()
            .into_iter()
            .find(|(p, n)| p.len() == 10 && matches!(n, Node::Channel(_)))
            .map(|(p, _)| p)
            .expect("full tree has a channel at max depth");
        let sub = generate_subtree(&reg, GenMethod::Grow, 0, GpType::Image, &mut r);
        assert!(matches!(sub, Node::Channel(_)));
        let mutated = t.with_replaced(&deep_leaf, sub);
        assert!(mutated.validate(&reg, 10).is_ok());
    }
}
